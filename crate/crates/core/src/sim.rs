//! Ground-truth expression generation with network-smoothed isoform
//! proportions, and a read-compatibility sampler for self-contained
//! experiments.

use rand::distr::weighted::WeightedIndex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Poisson};

use crate::error::{Error, Result};
use crate::model::{CompatibilitySet, Gene, SimTruth, Transcript, TranscriptCatalog, TranscriptNetwork};
use crate::netbuild::{DdiTable, DomainAnnotation};

const SMOOTHING_TOL: f64 = 1e-8;
const SMOOTHING_MAX_ITER: usize = 500;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruthParams {
    /// Mean of the Poisson gene expression draw.
    pub poisson_mean: f64,
    /// Weight of the neighbor mean in the smoothing update.
    pub sim_alpha: f64,
    /// Standard deviation of the Gaussian noise on initial expressions.
    pub noise_sigma: f64,
    /// Exponent of the rank power law for initial isoform proportions.
    pub powerlaw_exponent: f64,
}

impl Default for TruthParams {
    fn default() -> Self {
        Self {
            poisson_mean: 50.0,
            sim_alpha: 1.0,
            noise_sigma: 5.0,
            powerlaw_exponent: -0.6,
        }
    }
}

fn normalized(v: &[f64]) -> Option<Vec<f64>> {
    let s: f64 = v.iter().sum();
    (s > 0.0).then(|| v.iter().map(|x| x / s).collect())
}

/// Draws gene expressions, power-law isoform proportions with noise, then
/// repeatedly mixes each isoform's initial expression with the mean
/// expression of its network neighbors until the proportions settle.
pub fn generate_truth(
    catalog: &TranscriptCatalog,
    network: &TranscriptNetwork,
    params: &TruthParams,
    seed: u64,
) -> Result<SimTruth> {
    if !(params.poisson_mean > 0.0) || !(params.sim_alpha >= 0.0) || !(params.noise_sigma >= 0.0) {
        return Err(Error::invalid("simulation parameters out of range"));
    }
    if network.n_nodes() != catalog.n_transcripts() {
        return Err(Error::invalid("network was not built over this transcript catalog"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let poisson = Poisson::new(params.poisson_mean).map_err(|e| Error::invalid(e.to_string()))?;
    let noise = Normal::new(0.0, params.noise_sigma).map_err(|e| Error::invalid(e.to_string()))?;
    let n_genes = catalog.n_genes();
    let n_tx = catalog.n_transcripts();
    let rank_span = n_tx.max(2) as f64;

    let gene_expression: Vec<f64> = (0..n_genes).map(|_| poisson.sample(&mut rng)).collect();

    let mut p_initial = vec![0.0; n_tx];
    for g in 0..n_genes {
        let r = catalog.gene_range(g);
        if r.len() == 1 {
            p_initial[r.start] = 1.0;
            continue;
        }
        let w: Vec<f64> = r
            .clone()
            .map(|_| rng.random_range(1.0..rank_span).powf(params.powerlaw_exponent))
            .collect();
        p_initial[r].copy_from_slice(&normalized(&w).expect("power-law weights are positive"));
    }

    let pi_initial: Vec<f64> = (0..n_tx)
        .map(|t| {
            let base = gene_expression[catalog.gene_of(t)] * p_initial[t];
            (base + noise.sample(&mut rng)).max(0.0)
        })
        .collect();

    let mut p = vec![0.0; n_tx];
    for g in 0..n_genes {
        let r = catalog.gene_range(g);
        let start = normalized(&pi_initial[r.clone()]).unwrap_or_else(|| p_initial[r.clone()].to_vec());
        p[r].copy_from_slice(&start);
    }

    let mut iterations = 0;
    loop {
        if iterations >= SMOOTHING_MAX_ITER {
            return Err(Error::NoConvergence {
                what: "ground-truth proportion smoothing".into(),
                iterations,
            });
        }
        iterations += 1;
        let pi: Vec<f64> = (0..n_tx).map(|t| gene_expression[catalog.gene_of(t)] * p[t]).collect();
        let mut next = vec![0.0; n_tx];
        for g in 0..n_genes {
            let r = catalog.gene_range(g);
            let num: Vec<f64> = r
                .clone()
                .map(|t| {
                    let nb = network.neighbors(t);
                    let mean = if nb.is_empty() {
                        0.0
                    } else {
                        nb.iter().map(|&u| pi[u]).sum::<f64>() / nb.len() as f64
                    };
                    params.sim_alpha * mean + pi_initial[t]
                })
                .collect();
            let block = normalized(&num).unwrap_or_else(|| p_initial[r.clone()].to_vec());
            next[r].copy_from_slice(&block);
        }
        let delta = next.iter().zip(&p).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        p = next;
        if delta < SMOOTHING_TOL {
            break;
        }
    }

    let raw: Vec<f64> = (0..n_tx).map(|t| gene_expression[catalog.gene_of(t)] * p[t]).collect();
    let pi = normalized(&raw).unwrap_or_else(|| vec![0.0; n_tx]);

    Ok(SimTruth {
        gene_expression,
        p_initial,
        p,
        pi,
        sim_alpha: params.sim_alpha,
        noise_sigma: params.noise_sigma,
        iterations,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OverlapModel {
    /// Each read is compatible with its origin only.
    Exclusive,
    /// With probability `ambiguity` a read falls in a region shared by every
    /// isoform of its gene and is compatible with all of them.
    SharedPrefix { ambiguity: f64 },
}

fn effective_length(length: u32, read_length: u32) -> f64 {
    f64::from(length - read_length + 1)
}

fn check_read_length(catalog: &TranscriptCatalog, read_length: u32) -> Result<()> {
    if read_length == 0 {
        return Err(Error::invalid("read length must be positive"));
    }
    match catalog.lengths().iter().min() {
        Some(&min) if min <= read_length => Err(Error::invalid(format!(
            "read length {read_length} is not below the shortest transcript ({min})"
        ))),
        _ => Ok(()),
    }
}

/// Probability that a read of gene `g` originates from each of its
/// transcripts, in global order.
pub fn read_origin_probabilities(truth: &SimTruth, catalog: &TranscriptCatalog, read_length: u32) -> Result<Vec<f64>> {
    check_read_length(catalog, read_length)?;
    let mut out = vec![0.0; catalog.n_transcripts()];
    for g in 0..catalog.n_genes() {
        let r = catalog.gene_range(g);
        let w: Vec<f64> = r
            .clone()
            .map(|t| truth.pi[t] * effective_length(catalog.lengths()[t], read_length))
            .collect();
        let k = r.len() as f64;
        let block = normalized(&w).unwrap_or_else(|| vec![1.0 / k; r.len()]);
        out[r].copy_from_slice(&block);
    }
    Ok(out)
}

/// Expected expression in reads per base for a sample of `total_reads`,
/// the scale on which quantifiers report `π`.
pub fn expected_expression(
    truth: &SimTruth,
    catalog: &TranscriptCatalog,
    total_reads: usize,
    read_length: u32,
) -> Result<Vec<f64>> {
    let origin = read_origin_probabilities(truth, catalog, read_length)?;
    let gene_weight: Vec<f64> = (0..catalog.n_genes())
        .map(|g| {
            catalog
                .gene_range(g)
                .map(|t| truth.pi[t] * f64::from(catalog.lengths()[t]))
                .sum()
        })
        .collect();
    let total: f64 = gene_weight.iter().sum();
    if !(total > 0.0) {
        return Err(Error::invalid("ground truth has no expression"));
    }
    Ok((0..catalog.n_transcripts())
        .map(|t| {
            let g = catalog.gene_of(t);
            total_reads as f64 * gene_weight[g] / total * origin[t] / f64::from(catalog.lengths()[t])
        })
        .collect())
}

/// Samples reads: genes in proportion to `Σ_k π_k l_k`, origins within a
/// gene in proportion to `π_k (l_k − l_r + 1)`.
pub fn sample_compat(
    truth: &SimTruth,
    catalog: &TranscriptCatalog,
    total_reads: usize,
    read_length: u32,
    overlap: OverlapModel,
    seed: u64,
) -> Result<CompatibilitySet> {
    check_read_length(catalog, read_length)?;
    if let OverlapModel::SharedPrefix { ambiguity } = overlap {
        if !(0.0..=1.0).contains(&ambiguity) {
            return Err(Error::invalid(format!("ambiguity {ambiguity} outside [0, 1]")));
        }
    }
    let n_genes = catalog.n_genes();
    let gene_weight: Vec<f64> = (0..n_genes)
        .map(|g| {
            catalog
                .gene_range(g)
                .map(|t| truth.pi[t] * f64::from(catalog.lengths()[t]))
                .sum()
        })
        .collect();
    let gene_dist = WeightedIndex::new(&gene_weight).map_err(|e| Error::invalid(format!("gene weights: {e}")))?;
    let origin = read_origin_probabilities(truth, catalog, read_length)?;
    let origin_dists: Vec<Option<WeightedIndex<f64>>> = (0..n_genes)
        .map(|g| {
            if gene_weight[g] > 0.0 {
                WeightedIndex::new(&origin[catalog.gene_range(g)]).ok()
            } else {
                None
            }
        })
        .collect();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut reads: Vec<Vec<(String, Vec<usize>)>> = vec![Vec::new(); n_genes];
    for j in 0..total_reads {
        let g = gene_dist.sample(&mut rng);
        let dist = origin_dists[g].as_ref().expect("sampled genes have positive weight");
        let k = dist.sample(&mut rng);
        let shared = match overlap {
            OverlapModel::Exclusive => false,
            OverlapModel::SharedPrefix { ambiguity } => rng.random_bool(ambiguity),
        };
        let compat = if shared {
            (0..catalog.gene_size(g)).collect()
        } else {
            vec![k]
        };
        reads[g].push((format!("read{j}"), compat));
    }
    CompatibilitySet::with_computed_q(catalog, read_length, reads)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SyntheticParams {
    pub n_genes: usize,
    pub max_isoforms: usize,
    /// Probability that a gene has a single isoform.
    pub single_isoform_rate: f64,
    /// Distinct domain families, as a multiple of the gene count.
    pub domains_per_gene: f64,
    /// Probability that any two domain families interact.
    pub ddi_rate: f64,
    /// Probability that an isoform keeps each domain of its gene.
    pub domain_retention: f64,
    pub min_length: u32,
    pub max_length: u32,
}

impl Default for SyntheticParams {
    fn default() -> Self {
        Self {
            n_genes: 100,
            max_isoforms: 4,
            single_isoform_rate: 0.3,
            domains_per_gene: 1.0,
            ddi_rate: 0.04,
            domain_retention: 0.6,
            min_length: 800,
            max_length: 4000,
        }
    }
}

/// Random genes, isoforms carrying subsets of their gene's protein domains,
/// and a random domain interaction table.
pub fn synthetic_instance(
    params: &SyntheticParams,
    seed: u64,
) -> Result<(TranscriptCatalog, DomainAnnotation, DdiTable)> {
    if params.n_genes == 0 || params.max_isoforms == 0 || params.min_length > params.max_length {
        return Err(Error::invalid("synthetic instance parameters out of range"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_domains = ((params.n_genes as f64 * params.domains_per_gene).ceil() as usize).max(1);
    let mut genes = Vec::with_capacity(params.n_genes);
    let mut annot = Vec::new();
    for g in 0..params.n_genes {
        let k = if params.max_isoforms == 1 || rng.random_bool(params.single_isoform_rate) {
            1
        } else {
            rng.random_range(2..=params.max_isoforms)
        };
        let pool_size = rng.random_range(1..=3);
        let pool: Vec<usize> = (0..pool_size).map(|_| rng.random_range(0..n_domains)).collect();
        let mut transcripts = Vec::with_capacity(k);
        for i in 0..k {
            let id = format!("G{g:04}.{}", i + 1);
            for &d in &pool {
                if i == 0 || rng.random_bool(params.domain_retention) {
                    annot.push((id.clone(), format!("PF{d:05}")));
                }
            }
            transcripts.push(Transcript {
                id,
                length: rng.random_range(params.min_length..=params.max_length),
            });
        }
        genes.push(Gene {
            id: format!("G{g:04}"),
            transcripts,
        });
    }
    let mut ddi = Vec::new();
    for a in 0..n_domains {
        for b in a..n_domains {
            if rng.random_bool(params.ddi_rate) {
                ddi.push((format!("PF{a:05}"), format!("PF{b:05}")));
            }
        }
    }
    Ok((
        TranscriptCatalog::new(genes)?,
        DomainAnnotation::new(annot),
        DdiTable::new(ddi),
    ))
}

/// `log2(x + 1)`, the transform applied before correlating expressions.
pub fn log2p1(x: f64) -> f64 {
    (x + 1.0).log2()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netbuild::build_network;

    fn instance(seed: u64) -> (TranscriptCatalog, TranscriptNetwork) {
        let (cat, annot, ddi) = synthetic_instance(
            &SyntheticParams {
                n_genes: 40,
                ..Default::default()
            },
            seed,
        )
        .unwrap();
        let net = build_network(&cat, &annot, &ddi).unwrap();
        (cat, net)
    }

    #[test]
    fn empty_network_keeps_initial_proportions() {
        let (cat, _) = instance(1);
        let net = TranscriptNetwork::empty(&cat);
        let params = TruthParams::default();
        let truth = generate_truth(&cat, &net, &params, 3).unwrap();
        assert_eq!(truth.iterations, 1);
        // recompute the noisy initial expression with an identical stream
        let zero_alpha = generate_truth(
            &cat,
            &instance(1).1,
            &TruthParams {
                sim_alpha: 0.0,
                ..params
            },
            3,
        )
        .unwrap();
        for (a, b) in truth.p.iter().zip(&zero_alpha.p) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn proportions_stay_on_simplex_and_pi_matches() {
        let (cat, net) = instance(2);
        let truth = generate_truth(&cat, &net, &TruthParams::default(), 9).unwrap();
        assert!(truth.iterations <= SMOOTHING_MAX_ITER);
        for g in 0..cat.n_genes() {
            let s: f64 = truth.p[cat.gene_range(g)].iter().sum();
            assert!((s - 1.0).abs() < 1e-9);
        }
        let raw: Vec<f64> = (0..cat.n_transcripts())
            .map(|t| truth.gene_expression[cat.gene_of(t)] * truth.p[t])
            .collect();
        let total: f64 = raw.iter().sum();
        for t in 0..cat.n_transcripts() {
            assert!((truth.pi[t] - raw[t] / total).abs() < 1e-15);
        }
        assert!((truth.pi.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn truth_is_deterministic_per_seed() {
        let (cat, net) = instance(4);
        let a = generate_truth(&cat, &net, &TruthParams::default(), 5).unwrap();
        let b = generate_truth(&cat, &net, &TruthParams::default(), 5).unwrap();
        assert_eq!(a, b);
        let c = generate_truth(&cat, &net, &TruthParams::default(), 6).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn single_isoform_reads_are_unambiguous() {
        let params = SyntheticParams {
            n_genes: 10,
            max_isoforms: 1,
            ..Default::default()
        };
        let (cat, annot, ddi) = synthetic_instance(&params, 1).unwrap();
        let net = build_network(&cat, &annot, &ddi).unwrap();
        let truth = generate_truth(&cat, &net, &TruthParams::default(), 1).unwrap();
        let set = sample_compat(&truth, &cat, 500, 50, OverlapModel::SharedPrefix { ambiguity: 0.5 }, 2).unwrap();
        assert_eq!(set.total_reads(), 500);
        for g in 0..cat.n_genes() {
            assert!(set.gene_reads(g).iter().all(|r| r.compat.len() == 1));
        }
    }

    #[test]
    fn sampling_rejects_long_reads() {
        let (cat, net) = instance(3);
        let truth = generate_truth(&cat, &net, &TruthParams::default(), 1).unwrap();
        assert!(sample_compat(&truth, &cat, 10, 10_000, OverlapModel::Exclusive, 1).is_err());
    }

    #[test]
    fn expected_expression_totals_reads() {
        let (cat, net) = instance(5);
        let truth = generate_truth(&cat, &net, &TruthParams::default(), 1).unwrap();
        let e = expected_expression(&truth, &cat, 10_000, 76).unwrap();
        let total: f64 = e.iter().zip(cat.lengths()).map(|(x, &l)| x * f64::from(l)).sum();
        assert!((total - 10_000.0).abs() < 1e-6);
    }
}
