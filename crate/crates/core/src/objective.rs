//! Training losses: masked cross-entropy on the GCN head, the
//! average-anchored consistency term with sharpening, its pairwise variant,
//! and the weighted total.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tape::{Tape, Var};
use crate::tensor::Tensor;

/// How the two heads are pulled together.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConsistencyMode {
    /// Both heads regress onto their sharpened average.
    Average,
    /// Squared distance between the heads directly.
    Pairwise,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LossBreakdown {
    pub ce: f64,
    pub consistency: f64,
    pub total: f64,
    pub lambda: f64,
}

/// `total = ce + lambda * consistency`.
pub fn total_loss(ce: f64, consistency: f64, lambda: f64) -> LossBreakdown {
    LossBreakdown {
        ce,
        consistency,
        total: ce + lambda * consistency,
        lambda,
    }
}

pub(crate) fn sharpen_values(y: &Tensor, power: f64) -> Tensor {
    let mut out = y.clone();
    for r in 0..out.rows() {
        let row = out.row_mut(r);
        // Rescale by the row max before the power so small entries with
        // large `power` do not underflow the whole row to zero.
        let max = row.iter().copied().fold(0.0, f64::max);
        if max <= 0.0 {
            continue;
        }
        let mut z = 0.0;
        for v in row.iter_mut() {
            *v = (*v / max).powf(power);
            z += *v;
        }
        row.iter_mut().for_each(|v| *v /= z);
    }
    out
}

fn check_probability_rows(y: &Tensor) -> Result<()> {
    for r in 0..y.rows() {
        let sum: f64 = y.row(r).iter().sum();
        if (sum - 1.0).abs() > 1e-6 || y.row(r).iter().any(|&v| v < 0.0) {
            return Err(Error::NotProbability { row: r, sum });
        }
    }
    Ok(())
}

/// Raises each probability row to `1/temperature` and renormalizes.
pub fn sharpen(y_bar: &Tensor, temperature: f64) -> Result<Tensor> {
    if !(temperature > 0.0) {
        return Err(Error::Config(format!("temperature must be > 0, got {temperature}")));
    }
    check_probability_rows(y_bar)?;
    Ok(sharpen_values(y_bar, 1.0 / temperature))
}

/// Options for the consistency term.
#[derive(Clone, Copy, Debug)]
pub struct ConsistencyOpts {
    pub mode: ConsistencyMode,
    pub temperature: f64,
    /// Treat the sharpened average as a constant target.
    pub stop_gradient: bool,
}

/// Records the consistency loss on `tape`.
///
/// `frozen_target` replaces the sharpened average with a fixed tensor; the
/// gradient checker uses it so finite differences see the same constant
/// target as the detached analytic gradient.
pub fn consistency_on_tape(
    tape: &mut Tape<'_>,
    y_gcn: Var,
    y_fc: Var,
    opts: &ConsistencyOpts,
    frozen_target: Option<&Tensor>,
) -> Result<Var> {
    let n = tape.value(y_gcn).rows().max(1) as f64;
    match opts.mode {
        ConsistencyMode::Pairwise => {
            let diff = tape.sub(y_gcn, y_fc)?;
            let sq = tape.sum_squares(diff)?;
            tape.scale(sq, 1.0 / n)
        }
        ConsistencyMode::Average => {
            let target = match frozen_target {
                Some(t) => tape.constant(t.clone()),
                None => {
                    let sum = tape.add(y_gcn, y_fc)?;
                    let avg = tape.scale(sum, 0.5)?;
                    if opts.stop_gradient {
                        let t = sharpen_values(tape.value(avg), 1.0 / opts.temperature);
                        tape.constant(t)
                    } else {
                        tape.sharpen(avg, opts.temperature)?
                    }
                }
            };
            let d1 = tape.sub(target, y_gcn)?;
            let d2 = tape.sub(target, y_fc)?;
            let s1 = tape.sum_squares(d1)?;
            let s2 = tape.sum_squares(d2)?;
            let s = tape.add(s1, s2)?;
            tape.scale(s, 0.5 / n)
        }
    }
}

/// The sharpened average target for the given head outputs.
pub fn consistency_target(y_gcn: &Tensor, y_fc: &Tensor, temperature: f64) -> Result<Tensor> {
    let avg = y_gcn.zip_map(y_fc, "consistency", |a, b| 0.5 * (a + b))?;
    Ok(sharpen_values(&avg, 1.0 / temperature))
}

/// Consistency loss between two row-stochastic head outputs, averaged over
/// nodes.
pub fn consistency_loss(y_gcn: &Tensor, y_fc: &Tensor, temperature: f64, mode: ConsistencyMode) -> Result<f64> {
    if y_gcn.shape() != y_fc.shape() {
        return Err(Error::shape("consistency_loss", y_gcn.shape(), y_fc.shape()));
    }
    let mut tape = Tape::new();
    let a = tape.constant(y_gcn.clone());
    let b = tape.constant(y_fc.clone());
    let opts = ConsistencyOpts {
        mode,
        temperature,
        stop_gradient: true,
    };
    let l = consistency_on_tape(&mut tape, a, b, &opts, None)?;
    Ok(tape.scalar(l))
}

/// Mean negative log-likelihood of `labels` over the masked rows.
pub fn cross_entropy(y: &Tensor, labels: &[usize], mask: &[usize]) -> Result<f64> {
    let mut tape = Tape::new();
    let p = tape.constant(y.clone());
    let l = tape.masked_nll(p, labels, mask)?;
    Ok(tape.scalar(l))
}
