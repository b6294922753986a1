//! Trains the VAE on synthetic readings and shows what leaves the device:
//! a noised latent code instead of the raw features.
//!
//! `cargo run --release --example vae_privacy`

use medledger::dataset::{self, DatasetSchema};
use medledger::vae::{self, TrainConfig, VaeConfig, VaeParams};

fn main() -> anyhow::Result<()> {
    let schema = DatasetSchema::nsl_kdd();
    let data = dataset::synthesize(&schema, 2000, 2)?;
    let features: Vec<Vec<f64>> = data.iter().map(|t| t.features.clone()).collect();

    let init = VaeParams::new(schema.feature_count, &VaeConfig::default(), 2)?;
    let cfg = TrainConfig { epochs: 10, ..Default::default() };
    let (params, trace) = vae::train(&init, &features, &cfg)?;
    for (epoch, loss) in trace.iter().enumerate() {
        println!("epoch {epoch:>2}: loss {loss:.3}");
    }

    let x = &features[0];
    let code = vae::transform(&params, x, 99)?;
    let recon = params.decode(&code.mean)?;
    let err: f64 = x.iter().zip(&recon).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
    println!("raw width {}, latent width {}", x.len(), code.sample.len());
    println!("latent sample {:?}", code.sample.iter().map(|v| format!("{v:.3}")).collect::<Vec<_>>());
    println!("reconstruction distance from the mean code: {err:.3}");

    let terms = vae::elbo(&params, x, 99)?;
    println!("ELBO {:.3} = reconstruction {:.3} - KL {:.3}", terms.elbo, terms.reconstruction, terms.kl);
    Ok(())
}
