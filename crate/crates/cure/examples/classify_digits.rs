//! Semi-supervised classification of the bundled handwritten-digits fixture
//! from 100 random labels, comparing wnll and wecure.
//!
//! Run: cargo run --release --example classify_digits

use cure::cli::data::{load_idx, IdxData};
use cure::graph::{build_weight_graph, GraphConfig};
use cure::solver::Method;
use cure::ssl::{accuracy, classify_on_graph, LabeledDataset, SolveParams};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::path::PathBuf;

fn main() -> cure::Result<()> {
    let assets = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("assets");
    let cloud = match load_idx(assets.join("digits_images.idx"))? {
        IdxData::Images(c) => c,
        _ => unreachable!(),
    };
    let truth = match load_idx(assets.join("digits_labels.idx"))? {
        IdxData::Labels(l) => l,
        _ => unreachable!(),
    };
    println!("{} digits, {} features each", cloud.len(), cloud.dim());

    let ds = LabeledDataset::new(cloud, truth.iter().copied().enumerate().collect::<Vec<_>>())?;
    let graph = build_weight_graph(&ds.cloud, &GraphConfig::new(20, 50))?;

    // sample 100 labels covering all ten classes
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let ids = loop {
        let chosen = rand::seq::index::sample(&mut rng, truth.len(), 100);
        let mut seen: Vec<u32> = chosen.iter().map(|i| truth[i]).collect();
        seen.sort_unstable();
        seen.dedup();
        if seen.len() == 10 {
            let mut ids: Vec<usize> = chosen.iter().collect();
            ids.sort_unstable();
            break ids;
        }
    };

    for method in [Method::Wnll, Method::WeCure] {
        let params = SolveParams {
            method,
            lambda: 1.0,
            ..Default::default()
        };
        let split = ds.with_labels(ids.iter().map(|&i| (i, truth[i])))?;
        let pred = classify_on_graph(&graph, &split, &params)?;
        let acc = accuracy(&pred, &truth, &ids)?;
        println!("{method:>6}: accuracy {acc:.4} on the {} unlabeled digits", truth.len() - 100);
    }
    Ok(())
}
