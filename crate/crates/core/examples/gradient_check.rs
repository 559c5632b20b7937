//! Central-difference check of the full training loss for every fusion and
//! attention pairing, then once more with a deliberately scaled gradient.

use bagcn::gradcheck::{check_variant, VARIANTS};

fn main() -> bagcn::Result<()> {
    for (fusion, biaffine) in VARIANTS {
        let r = check_variant(fusion, biaffine, 0, 1.0)?;
        println!(
            "{fusion:>3} {biaffine:<11} max rel err {:.2e} over {} entries (worst {}[{}])",
            r.max_rel_error, r.entries, r.worst_param, r.worst_index
        );
    }
    let (fusion, biaffine) = VARIANTS[0];
    let broken = check_variant(fusion, biaffine, 0, 1.01)?;
    println!("with a 1% gradient fault: {:.2e}", broken.max_rel_error);
    Ok(())
}
