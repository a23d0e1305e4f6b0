#![allow(dead_code)]

use netquant::model::{CompatibilitySet, TranscriptCatalog, TranscriptNetwork};
use netquant::netbuild;
use netquant::sim::{self, OverlapModel, SyntheticParams, TruthParams};

pub struct Instance {
    pub catalog: TranscriptCatalog,
    pub network: TranscriptNetwork,
    pub compat: CompatibilitySet,
    /// Expected expression in reads per base.
    pub truth: Vec<f64>,
}

pub const READ_LENGTH: u32 = 100;

pub fn simulated(n_genes: usize, reads: usize, overlap: OverlapModel, seed: u64) -> Instance {
    let params = SyntheticParams {
        n_genes,
        ..Default::default()
    };
    let (catalog, domains, ddi) = sim::synthetic_instance(&params, seed).unwrap();
    let network = netbuild::build_network(&catalog, &domains, &ddi).unwrap();
    let truth = sim::generate_truth(&catalog, &network, &TruthParams::default(), seed).unwrap();
    let compat = sim::sample_compat(&truth, &catalog, reads, READ_LENGTH, overlap, seed + 1_000_000).unwrap();
    let expected = sim::expected_expression(&truth, &catalog, reads, READ_LENGTH).unwrap();
    Instance {
        catalog,
        network,
        compat,
        truth: expected,
    }
}
