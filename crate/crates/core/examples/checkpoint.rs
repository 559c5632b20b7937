//! Saves a trained model, loads it back and checks that evaluation agrees.

use bagcn::checkpoint::Checkpoint;
use bagcn::graph::{gen_synthetic_clusters, SyntheticSpec};
use bagcn::train::{evaluate, train, Bagcn};
use bagcn::ModelConfig;

fn main() -> bagcn::Result<()> {
    let g = gen_synthetic_clusters(&SyntheticSpec::barbell(4))?.graph;
    let config = ModelConfig {
        hidden_dim: 16,
        epochs: 50,
        ..Default::default()
    };
    let out = train(&g, &Bagcn(config.clone()))?;

    let path = std::env::temp_dir().join(format!("bagcn-{}.ckpt", std::process::id()));
    Checkpoint::from_model(&config, g.name(), &out.params).save(&path)?;
    let size = std::fs::metadata(&path)?.len();
    let (config2, params2) = Checkpoint::load(&path)?.model_params()?;
    std::fs::remove_file(&path)?;

    let before = evaluate(&g, &out.params, &config, &g.masks().test)?;
    let after = evaluate(&g, &params2, &config2, &g.masks().test)?;
    println!("{size} bytes; test accuracy {before:.3} before, {after:.3} after reload");
    assert_eq!(before, after);
    Ok(())
}
