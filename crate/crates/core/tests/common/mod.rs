//! Scalar re-derivation of the forward pass and loss using nothing but
//! nested loops over `Vec<Vec<f64>>`.

use bagcn::objective::ConsistencyMode;
use bagcn::{Fusion, Graph, ModelConfig, ModelParams, Tensor};

pub type M = Vec<Vec<f64>>;

fn dense(t: &Tensor) -> M {
    (0..t.rows()).map(|r| t.row(r).to_vec()).collect()
}

fn mm(a: &M, b: &M) -> M {
    let (n, k, m) = (a.len(), b.len(), b[0].len());
    let mut out = vec![vec![0.0; m]; n];
    for i in 0..n {
        for j in 0..m {
            let mut s = 0.0;
            for t in 0..k {
                s += a[i][t] * b[t][j];
            }
            out[i][j] = s;
        }
    }
    out
}

fn tr(a: &M) -> M {
    (0..a[0].len()).map(|j| a.iter().map(|r| r[j]).collect()).collect()
}

fn add_bias_relu(a: &M, b: &[f64]) -> M {
    a.iter().map(|r| r.iter().zip(b).map(|(x, y)| (x + y).max(0.0)).collect()).collect()
}

fn softmax_rows(a: &M) -> M {
    a.iter()
        .map(|r| {
            let mx = r.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let e: Vec<f64> = r.iter().map(|x| (x - mx).exp()).collect();
            let z: f64 = e.iter().sum();
            e.iter().map(|x| x / z).collect()
        })
        .collect()
}

fn a_hat(g: &Graph) -> M {
    let n = g.n();
    let mut a = vec![vec![0.0; n]; n];
    for i in 0..n {
        a[i][i] = 1.0;
    }
    for &(u, v) in g.edges() {
        a[u][v] = 1.0;
        a[v][u] = 1.0;
    }
    let d: Vec<f64> = a.iter().map(|r| r.iter().sum()).collect();
    for i in 0..n {
        for j in 0..n {
            if a[i][j] != 0.0 {
                a[i][j] /= (d[i] * d[j]).sqrt();
            }
        }
    }
    a
}

fn batch_norm(x: &M, gamma: &[f64], beta: &[f64], eps: f64) -> M {
    let (n, d) = (x.len(), x[0].len());
    let mut out = x.clone();
    for c in 0..d {
        let mean = x.iter().map(|r| r[c]).sum::<f64>() / n as f64;
        let var = x.iter().map(|r| (r[c] - mean).powi(2)).sum::<f64>() / n as f64;
        for r in 0..n {
            out[r][c] = (x[r][c] - mean) / (var + eps).sqrt() * gamma[c] + beta[c];
        }
    }
    out
}

pub struct Expected {
    pub y_gcn: M,
    pub y_fc: M,
    pub s1: M,
    pub s2: M,
    pub loss: f64,
}

pub fn oracle(g: &Graph, p: &ModelParams, c: &ModelConfig) -> Expected {
    let a = a_hat(g);
    let x = dense(g.features());
    let row = |t: &Tensor| t.row(0).to_vec();

    let h_c = add_bias_relu(&mm(&a, &mm(&x, &dense(&p.w1))), &row(&p.b_c));
    let h_ego = add_bias_relu(&mm(&x, &dense(&p.theta)), &row(&p.b_theta));
    let s1 = softmax_rows(&mm(&mm(&h_c, &dense(&p.m1)), &tr(&h_ego)));
    let s2 = softmax_rows(&mm(&mm(&h_ego, &dense(&p.m2)), &tr(&h_c)));
    let ha_c = mm(&s1, &h_ego);
    let ha_ego = mm(&s2, &h_c);
    let combine = |u: &M, v: &M| -> M {
        u.iter()
            .zip(v)
            .map(|(ru, rv)| {
                ru.iter()
                    .zip(rv)
                    .map(|(a, b)| match c.fusion {
                        Fusion::Add => a + b,
                        Fusion::Mul => a * b,
                    })
                    .collect()
            })
            .collect()
    };
    let hc2 = batch_norm(&combine(&h_c, &ha_c), &row(&p.norm_c_gamma), &row(&p.norm_c_beta), c.bn_eps);
    let he2 = batch_norm(&combine(&h_ego, &ha_ego), &row(&p.norm_ego_gamma), &row(&p.norm_ego_beta), c.bn_eps);
    let y_gcn = softmax_rows(&mm(&a, &mm(&hc2, &dense(&p.wc))));
    let mlp_b = row(&p.mlp_b);
    let logits: M = mm(&he2, &dense(&p.mlp_w)).iter().map(|r| r.iter().zip(&mlp_b).map(|(a, b)| a + b).collect()).collect();
    let y_fc = softmax_rows(&logits);

    let train = &g.masks().train;
    let ce = train.iter().map(|&i| -y_gcn[i][g.labels()[i]].ln()).sum::<f64>() / train.len() as f64;
    let n = g.n() as f64;
    let con = match c.consistency {
        ConsistencyMode::Pairwise => {
            let mut s = 0.0;
            for i in 0..g.n() {
                for k in 0..g.num_classes() {
                    s += (y_gcn[i][k] - y_fc[i][k]).powi(2);
                }
            }
            s / n
        }
        ConsistencyMode::Average => {
            let t = if c.sharpen { c.temperature } else { 1.0 };
            let mut s = 0.0;
            for i in 0..g.n() {
                let avg: Vec<f64> = (0..g.num_classes()).map(|k| 0.5 * (y_gcn[i][k] + y_fc[i][k])).collect();
                let pw: Vec<f64> = avg.iter().map(|v| v.powf(1.0 / t)).collect();
                let z: f64 = pw.iter().sum();
                for k in 0..g.num_classes() {
                    let target = pw[k] / z;
                    s += (target - y_gcn[i][k]).powi(2) + (target - y_fc[i][k]).powi(2);
                }
            }
            0.5 * s / n
        }
    };
    Expected {
        y_gcn,
        y_fc,
        s1,
        s2,
        loss: ce + c.lambda * con,
    }
}

pub fn max_diff(t: &Tensor, m: &M) -> f64 {
    let mut worst: f64 = 0.0;
    for (r, row) in m.iter().enumerate() {
        for (c, v) in row.iter().enumerate() {
            worst = worst.max((t.get(r, c) - v).abs());
        }
    }
    worst
}

