//! Co-expression versus network adjacency, enrichment testing, and
//! correlation-based comparison of quantification results.

use statrs::function::gamma::gamma_ur;

use crate::driver::{self, NetRstqOptions};
use crate::error::{Error, Result};
use crate::model::{CompatibilitySet, TranscriptCatalog, TranscriptNetwork};
use crate::netbuild;
use crate::sim::log2p1;

/// Pearson correlation; `None` when either vector is constant or shorter
/// than two.
pub fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    assert_eq!(x.len(), y.len(), "vectors differ in length");
    let n = x.len();
    if n < 2 {
        return None;
    }
    let mx = x.iter().sum::<f64>() / n as f64;
    let my = y.iter().sum::<f64>() / n as f64;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    Some((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// Expression of every catalog transcript across samples.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpressionMatrix {
    pub samples: Vec<String>,
    /// One row per transcript in catalog order.
    pub rows: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Distance {
    Neighbors,
    WithinTwo,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoexpressionBins {
    pub bin_size: usize,
    /// Adjacent pairs in each full bin, highest correlations first.
    pub counts: Vec<usize>,
    /// Pairs and adjacent pairs in the incomplete last bin, which is dropped.
    pub tail_pairs: usize,
    pub tail_adjacent: usize,
    /// Pairs with a defined correlation.
    pub total_pairs: usize,
    pub total_adjacent: usize,
    /// Transcripts with constant expression, excluded from every pair.
    pub excluded_transcripts: usize,
    /// Expected adjacent pairs per bin under the network density.
    pub baseline: f64,
}

/// Sorts all transcript pairs by expression correlation and counts
/// network-adjacent pairs in consecutive bins.
pub fn coexpression_bins(
    matrix: &ExpressionMatrix,
    network: &TranscriptNetwork,
    bin_size: usize,
    distance: Distance,
) -> Result<CoexpressionBins> {
    if bin_size == 0 {
        return Err(Error::invalid("bin size must be at least 1"));
    }
    if matrix.samples.len() < 2 {
        return Err(Error::invalid("co-expression needs at least two samples"));
    }
    if matrix.rows.len() != network.n_nodes() {
        return Err(Error::invalid("expression matrix does not cover every transcript"));
    }
    let closure;
    let net = match distance {
        Distance::Neighbors => network,
        Distance::WithinTwo => {
            closure = netbuild::two_step_closure(network);
            &closure
        }
    };

    // standardized rows so that correlation is a dot product
    let mut z: Vec<Option<Vec<f64>>> = Vec::with_capacity(matrix.rows.len());
    for row in &matrix.rows {
        if row.len() != matrix.samples.len() {
            return Err(Error::invalid("expression row length differs from the sample count"));
        }
        let m = row.iter().sum::<f64>() / row.len() as f64;
        let centered: Vec<f64> = row.iter().map(|x| x - m).collect();
        let norm = centered.iter().map(|x| x * x).sum::<f64>().sqrt();
        z.push((norm > 0.0).then(|| centered.into_iter().map(|x| x / norm).collect()));
    }
    let excluded = z.iter().filter(|r| r.is_none()).count();
    let live: Vec<usize> = (0..z.len()).filter(|&i| z[i].is_some()).collect();

    let mut pairs: Vec<(f64, u32, u32)> = Vec::with_capacity(live.len() * live.len().saturating_sub(1) / 2);
    for (ai, &i) in live.iter().enumerate() {
        let zi = z[i].as_ref().unwrap();
        for &j in &live[ai + 1..] {
            let zj = z[j].as_ref().unwrap();
            let c: f64 = zi.iter().zip(zj).map(|(a, b)| a * b).sum();
            pairs.push((c.clamp(-1.0, 1.0), i as u32, j as u32));
        }
    }
    pairs.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));

    let full = pairs.len() / bin_size;
    let mut counts = Vec::with_capacity(full);
    let mut total_adjacent = 0;
    for chunk in pairs.chunks(bin_size) {
        let hits = chunk
            .iter()
            .filter(|&&(_, i, j)| net.has_edge(i as usize, j as usize))
            .count();
        total_adjacent += hits;
        if chunk.len() == bin_size {
            counts.push(hits);
        }
    }
    let tail_pairs = pairs.len() - full * bin_size;
    let tail_adjacent = total_adjacent - counts.iter().sum::<usize>();
    let density = netbuild::network_stats(net).density;

    Ok(CoexpressionBins {
        bin_size,
        counts,
        tail_pairs,
        tail_adjacent,
        total_pairs: pairs.len(),
        total_adjacent,
        excluded_transcripts: excluded,
        baseline: density * bin_size as f64,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChiSquareResult {
    /// `[[top adjacent, top other], [rest adjacent, rest other]]`.
    pub table: [[f64; 2]; 2],
    pub statistic: f64,
    pub p_value: f64,
    /// Some expected cell count is below 5.
    pub low_expected: bool,
}

/// Pearson chi-square test of independence on a 2x2 table, one degree of
/// freedom, no continuity correction. A table with an empty row or column
/// has statistic 0 and p-value 1.
pub fn chi_square_2x2(table: [[f64; 2]; 2]) -> ChiSquareResult {
    let rows = [table[0][0] + table[0][1], table[1][0] + table[1][1]];
    let cols = [table[0][0] + table[1][0], table[0][1] + table[1][1]];
    let n = rows[0] + rows[1];
    let mut statistic = 0.0;
    let mut low_expected = false;
    if rows.iter().chain(&cols).all(|&m| m > 0.0) {
        for i in 0..2 {
            for j in 0..2 {
                let e = rows[i] * cols[j] / n;
                low_expected |= e < 5.0;
                statistic += (table[i][j] - e).powi(2) / e;
            }
        }
    } else {
        low_expected = true;
    }
    let p_value = if statistic > 0.0 {
        gamma_ur(0.5, statistic / 2.0)
    } else {
        1.0
    };
    ChiSquareResult {
        table,
        statistic,
        p_value,
        low_expected,
    }
}

/// Tests whether the top `n_top_bins` bins hold more adjacent pairs than
/// the remaining pairs.
pub fn chi_square_enrichment(bins: &CoexpressionBins, n_top_bins: usize) -> Result<ChiSquareResult> {
    if n_top_bins > bins.counts.len() {
        return Err(Error::invalid(format!(
            "{n_top_bins} top bins requested but only {} full bins exist",
            bins.counts.len()
        )));
    }
    let top_pairs = (n_top_bins * bins.bin_size) as f64;
    let top_adj = bins.counts[..n_top_bins].iter().sum::<usize>() as f64;
    let rest_pairs = bins.total_pairs as f64 - top_pairs;
    let rest_adj = bins.total_adjacent as f64 - top_adj;
    Ok(chi_square_2x2([
        [top_adj, top_pairs - top_adj],
        [rest_adj, rest_pairs - rest_adj],
    ]))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Subset {
    /// Isoforms of genes whose isoforms do not all share one neighbor set.
    DifferentNeighbors,
    /// Isoforms of genes with more than one isoform.
    AllMultiIsoform,
    All,
}

pub fn subset_indices(catalog: &TranscriptCatalog, network: &TranscriptNetwork, subset: Subset) -> Vec<usize> {
    let mut out = Vec::new();
    for g in 0..catalog.n_genes() {
        let r = catalog.gene_range(g);
        let keep = match subset {
            Subset::All => true,
            Subset::AllMultiIsoform => r.len() > 1,
            Subset::DifferentNeighbors => {
                r.len() > 1 && {
                    let first = network.neighbors(r.start);
                    r.clone().any(|t| network.neighbors(t) != first)
                }
            }
        };
        if keep {
            out.extend(r);
        }
    }
    out
}

/// Correlation of `log2(x + 1)` expressions over a transcript subset.
pub fn compare_quant(
    estimate: &[f64],
    other: &[f64],
    catalog: &TranscriptCatalog,
    network: &TranscriptNetwork,
    subset: Subset,
) -> Result<f64> {
    if estimate.len() != catalog.n_transcripts() || other.len() != catalog.n_transcripts() {
        return Err(Error::invalid("expression vectors do not match the catalog"));
    }
    let idx = subset_indices(catalog, network, subset);
    if idx.is_empty() {
        return Err(Error::invalid("selected transcript subset is empty"));
    }
    let x: Vec<f64> = idx.iter().map(|&t| log2p1(estimate[t])).collect();
    let y: Vec<f64> = idx.iter().map(|&t| log2p1(other[t])).collect();
    pearson(&x, &y).ok_or_else(|| Error::invalid("correlation undefined for constant expressions"))
}

#[derive(Debug, Clone, PartialEq)]
pub struct RandomizationReport {
    pub true_network: f64,
    pub randomized: Vec<f64>,
}

impl RandomizationReport {
    pub fn median_randomized(&self) -> f64 {
        median(&self.randomized)
    }
}

pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n == 0 {
        f64::NAN
    } else if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Correlation with a reference expression when quantifying against the
/// true network and against `n_networks` label-permuted copies. The subset
/// is always defined on the true network.
#[allow(clippy::too_many_arguments)]
pub fn randomized_network_trial(
    catalog: &TranscriptCatalog,
    compat: &CompatibilitySet,
    network: &TranscriptNetwork,
    reference: &[f64],
    subset: Subset,
    opts: &NetRstqOptions,
    n_networks: usize,
    seed: u64,
) -> Result<RandomizationReport> {
    let run = driver::net_rstq(catalog, compat, network, opts, None)?;
    let true_network = compare_quant(&run.state.pi, reference, catalog, network, subset)?;
    let mut randomized = Vec::with_capacity(n_networks);
    for i in 0..n_networks {
        let shuffled = netbuild::randomize_network(network, seed.wrapping_add(i as u64))?;
        let run = driver::net_rstq(catalog, compat, &shuffled, opts, None)?;
        randomized.push(compare_quant(&run.state.pi, reference, catalog, network, subset)?);
    }
    Ok(RandomizationReport {
        true_network,
        randomized,
    })
}

/// Correlation with a reference expression after deleting each fraction of
/// the network's edges.
#[allow(clippy::too_many_arguments)]
pub fn edge_deletion_sweep(
    catalog: &TranscriptCatalog,
    compat: &CompatibilitySet,
    network: &TranscriptNetwork,
    reference: &[f64],
    subset: Subset,
    opts: &NetRstqOptions,
    fractions: &[f64],
    seed: u64,
) -> Result<Vec<f64>> {
    fractions
        .iter()
        .map(|&f| {
            let thinned = netbuild::delete_edges(network, f, seed)?;
            let run = driver::net_rstq(catalog, compat, &thinned, opts, None)?;
            compare_quant(&run.state.pi, reference, catalog, network, subset)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Gene, Transcript};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use statrs::function::erf::erfc;

    fn singletons(n: usize) -> TranscriptCatalog {
        TranscriptCatalog::new(
            (0..n)
                .map(|i| Gene {
                    id: format!("g{i}"),
                    transcripts: vec![Transcript {
                        id: format!("t{i}"),
                        length: 1000,
                    }],
                })
                .collect(),
        )
        .unwrap()
    }

    fn random_matrix(rng: &mut ChaCha8Rng, n: usize, s: usize) -> ExpressionMatrix {
        ExpressionMatrix {
            samples: (0..s).map(|i| format!("s{i}")).collect(),
            rows: (0..n)
                .map(|_| (0..s).map(|_| rng.random_range(0.0..10.0)).collect())
                .collect(),
        }
    }

    #[test]
    fn pearson_basics() {
        assert!((pearson(&[1.0, 2.0, 3.0], &[2.0, 4.0, 6.0]).unwrap() - 1.0).abs() < 1e-15);
        assert!((pearson(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]).unwrap() + 1.0).abs() < 1e-15);
        assert!(pearson(&[1.0, 1.0], &[1.0, 2.0]).is_none());
    }

    #[test]
    fn complete_network_fills_every_bin() {
        let cat = singletons(8);
        let mut edges = Vec::new();
        for a in 0..8 {
            for b in a + 1..8 {
                edges.push((a, b));
            }
        }
        let net = TranscriptNetwork::for_catalog(&cat, edges).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let m = random_matrix(&mut rng, 8, 5);
        let bins = coexpression_bins(&m, &net, 5, Distance::Neighbors).unwrap();
        assert!(bins.counts.iter().all(|&c| c == 5));
        let empty = coexpression_bins(&m, &TranscriptNetwork::empty(&cat), 5, Distance::Neighbors).unwrap();
        assert!(empty.counts.iter().all(|&c| c == 0));
    }

    #[test]
    fn constant_rows_are_excluded() {
        let cat = singletons(3);
        let m = ExpressionMatrix {
            samples: vec!["a".into(), "b".into()],
            rows: vec![vec![1.0, 2.0], vec![5.0, 5.0], vec![0.0, 3.0]],
        };
        let bins = coexpression_bins(&m, &TranscriptNetwork::empty(&cat), 1, Distance::Neighbors).unwrap();
        assert_eq!(bins.excluded_transcripts, 1);
        assert_eq!(bins.total_pairs, 1);
    }

    #[test]
    fn bins_match_brute_force_enumeration() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for round in 0..25 {
            let cat = singletons(10);
            let mut edges = Vec::new();
            for a in 0..10 {
                for b in a + 1..10 {
                    if rng.random_bool(0.3) {
                        edges.push((a, b));
                    }
                }
            }
            let net = TranscriptNetwork::for_catalog(&cat, edges).unwrap();
            let m = random_matrix(&mut rng, 10, 6);
            let distance = if round % 2 == 0 {
                Distance::Neighbors
            } else {
                Distance::WithinTwo
            };
            let bin_size = 1 + round % 7;
            let bins = coexpression_bins(&m, &net, bin_size, distance).unwrap();

            let adjacent = |a: usize, b: usize| match distance {
                Distance::Neighbors => net.has_edge(a, b),
                Distance::WithinTwo => netbuild::bfs_distances(&net, a)[b] <= 2,
            };
            let mut all = Vec::new();
            for a in 0..10 {
                for b in a + 1..10 {
                    all.push((pearson(&m.rows[a], &m.rows[b]).unwrap(), a, b));
                }
            }
            all.sort_by(|x, y| y.0.partial_cmp(&x.0).unwrap());
            let expected: Vec<usize> = all
                .chunks(bin_size)
                .filter(|c| c.len() == bin_size)
                .map(|c| c.iter().filter(|&&(_, a, b)| adjacent(a, b)).count())
                .collect();
            assert_eq!(bins.counts, expected);
            let total: usize = all.iter().filter(|&&(_, a, b)| adjacent(a, b)).count();
            assert_eq!(bins.counts.iter().sum::<usize>() + bins.tail_adjacent, total);
        }
    }

    fn textbook(t: [[f64; 2]; 2]) -> (f64, f64) {
        let [[a, b], [c, d]] = t;
        let n = a + b + c + d;
        let stat = n * (a * d - b * c).powi(2) / ((a + b) * (c + d) * (a + c) * (b + d));
        (stat, erfc((stat / 2.0).sqrt()))
    }

    #[test]
    fn chi_square_matches_textbook() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..50 {
            let t = [
                [rng.random_range(1..500) as f64, rng.random_range(1..500) as f64],
                [rng.random_range(1..500) as f64, rng.random_range(1..500) as f64],
            ];
            let r = chi_square_2x2(t);
            let (s, p) = textbook(t);
            assert!((r.statistic - s).abs() < 1e-9 * s.max(1.0));
            assert!((r.p_value - p).abs() < 1e-9);
            let swapped = chi_square_2x2([[t[1][1], t[1][0]], [t[0][1], t[0][0]]]);
            assert!((swapped.statistic - r.statistic).abs() < 1e-9 * s.max(1.0));
        }
    }

    #[test]
    fn chi_square_edge_cases() {
        let same = chi_square_2x2([[10.0, 90.0], [100.0, 900.0]]);
        assert_eq!(same.statistic, 0.0);
        assert_eq!(same.p_value, 1.0);
        let all = chi_square_2x2([[100.0, 0.0], [900.0, 0.0]]);
        assert_eq!(all.statistic, 0.0);
        assert!(all.low_expected);
        let strong = chi_square_2x2([[730.0, 9270.0], [2000.0, 388_000.0]]);
        assert!(strong.p_value < 1e-10);
        let (_, p) = textbook(strong.table);
        assert!((strong.p_value - p).abs() < 1e-12);
    }

    #[test]
    fn compare_is_symmetric_and_rejects_constants() {
        let cat = TranscriptCatalog::new(vec![
            Gene {
                id: "A".into(),
                transcripts: vec![
                    Transcript {
                        id: "a1".into(),
                        length: 100,
                    },
                    Transcript {
                        id: "a2".into(),
                        length: 100,
                    },
                ],
            },
            Gene {
                id: "B".into(),
                transcripts: vec![Transcript {
                    id: "b1".into(),
                    length: 100,
                }],
            },
            Gene {
                id: "C".into(),
                transcripts: vec![Transcript {
                    id: "c1".into(),
                    length: 100,
                }],
            },
        ])
        .unwrap();
        let net = TranscriptNetwork::for_catalog(&cat, [(0, 2), (1, 3)]).unwrap();
        let x = [1.0, 3.0, 2.0, 8.0];
        let y = [2.0, 1.0, 4.0, 5.0];
        assert!((compare_quant(&x, &x, &cat, &net, Subset::All).unwrap() - 1.0).abs() < 1e-12);
        let a = compare_quant(&x, &y, &cat, &net, Subset::All).unwrap();
        let b = compare_quant(&y, &x, &cat, &net, Subset::All).unwrap();
        assert_eq!(a, b);
        assert!(compare_quant(&[1.0; 4], &y, &cat, &net, Subset::All).is_err());
        assert_eq!(subset_indices(&cat, &net, Subset::DifferentNeighbors), vec![0, 1]);
        assert_eq!(
            subset_indices(&cat, &TranscriptNetwork::empty(&cat), Subset::DifferentNeighbors),
            Vec::<usize>::new()
        );
        assert!(compare_quant(
            &x,
            &y,
            &cat,
            &TranscriptNetwork::empty(&cat),
            Subset::DifferentNeighbors
        )
        .is_err());
    }
}
