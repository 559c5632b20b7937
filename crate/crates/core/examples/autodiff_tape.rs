//! Records a tiny softmax regression on the tape and reads back the
//! gradient of the masked negative log-likelihood.

use bagcn::{Tape, Tensor};

fn main() -> bagcn::Result<()> {
    let mut tape = Tape::new();
    let x = tape.constant(Tensor::from_rows(&[[1.0, 0.5], [-0.3, 2.0], [0.7, -1.2]]));
    let w = tape.param(Tensor::from_rows(&[[0.2, -0.1], [0.4, 0.3]]));

    let logits = tape.matmul(x, w)?;
    let probs = tape.row_softmax(logits)?;
    let loss = tape.masked_nll(probs, &[0, 1, 1], &[0, 1])?;

    let grads = tape.backward(loss)?;
    println!("loss        = {:.6}", tape.scalar(loss));
    println!("tape length = {}", tape.len());
    let dw = grads.get(w).expect("w is on the loss path");
    for r in 0..dw.rows() {
        println!("dL/dW[{r}]    = {:?}", dw.row(r));
    }
    Ok(())
}
