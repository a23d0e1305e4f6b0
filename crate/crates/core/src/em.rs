//! Per-gene EM estimation of read-origin probabilities, with and without a
//! Dirichlet prior, and the log-objectives the EM and the network driver
//! compare.
//!
//! Reads with identical compatibility signatures are collapsed into
//! [`EquivalenceClass`]es before any likelihood work; a class of `n` reads
//! contributes exactly `n` times the log-likelihood of one of its reads.

use std::collections::BTreeMap;

use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::model::ReadCompat;

/// Reads sharing the same compatible transcripts and sampling probabilities.
#[derive(Debug, Clone, PartialEq)]
pub struct EquivalenceClass {
    /// Local transcript indices, ascending.
    pub transcripts: Vec<usize>,
    pub q: Vec<f64>,
    /// Number of reads in the class.
    pub count: f64,
}

/// Collapses reads by compatibility signature. Class order is the sorted
/// signature order, so the result is independent of read order.
pub fn collapse_reads(reads: &[ReadCompat]) -> Vec<EquivalenceClass> {
    let mut groups: BTreeMap<Vec<(usize, u64)>, f64> = BTreeMap::new();
    for read in reads {
        let key: Vec<(usize, u64)> = read.compat.iter().map(|&(k, q)| (k, q.to_bits())).collect();
        *groups.entry(key).or_insert(0.0) += 1.0;
    }
    groups
        .into_iter()
        .map(|(key, count)| EquivalenceClass {
            transcripts: key.iter().map(|&(k, _)| k).collect(),
            q: key.iter().map(|&(_, bits)| f64::from_bits(bits)).collect(),
            count,
        })
        .collect()
}

/// Log of the mixture likelihood `Π_j Σ_k p_k q_jk`.
pub fn log_likelihood(p: &[f64], classes: &[EquivalenceClass]) -> f64 {
    classes
        .iter()
        .map(|c| {
            let mix: f64 = c.transcripts.iter().zip(&c.q).map(|(&k, &q)| p[k] * q).sum();
            c.count * mix.ln()
        })
        .sum()
}

/// Log normalizer `ln Γ(Σα) − Σ ln Γ(α_k)` of a Dirichlet distribution.
pub fn log_dirichlet_normalizer(alpha: &[f64]) -> f64 {
    let total: f64 = alpha.iter().sum();
    ln_gamma(total) - alpha.iter().map(|&a| ln_gamma(a)).sum::<f64>()
}

/// Log density of a Dirichlet distribution at `p`.
///
/// Components with `α_k = 1` contribute nothing even where `p_k = 0`; a
/// zero `p_k` under `α_k > 1` gives `-inf`.
pub fn log_dirichlet(p: &[f64], alpha: &[f64]) -> f64 {
    assert_eq!(p.len(), alpha.len(), "probability and alpha vectors differ in size");
    let mut acc = log_dirichlet_normalizer(alpha);
    for (&pk, &a) in p.iter().zip(alpha) {
        if a != 1.0 {
            acc += (a - 1.0) * pk.ln();
        }
    }
    acc
}

/// `log_dirichlet` with `α = λφ + 1`.
pub fn log_dirichlet_prior(p: &[f64], phi: &[f64], lambda: f64) -> f64 {
    let alpha: Vec<f64> = phi.iter().map(|&f| lambda * f + 1.0).collect();
    log_dirichlet(p, &alpha)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmOptions {
    /// Stop once the largest coordinate change falls below this.
    pub tol: f64,
    pub max_iter: usize,
    /// Record the log-objective of every iterate.
    pub record_trace: bool,
}

impl Default for EmOptions {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_iter: 1000,
            record_trace: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmOutcome {
    pub p: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    /// The gene had no reads; `p` comes from the prior alone.
    pub no_data: bool,
    /// Log-objective at the start and after every iteration, when recorded.
    pub trace: Vec<f64>,
}

/// Soft assignments of each equivalence class to its compatible transcripts.
#[derive(Debug, Clone, PartialEq)]
pub struct Responsibilities {
    n_transcripts: usize,
    /// Per class, aligned with the class's `transcripts`.
    pub rows: Vec<Vec<f64>>,
    transcripts: Vec<Vec<usize>>,
    counts: Vec<f64>,
}

impl Responsibilities {
    /// Expected number of reads from each transcript, `Σ_j a_jk`.
    pub fn expected_counts(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.n_transcripts];
        for ((row, ts), &n) in self.rows.iter().zip(&self.transcripts).zip(&self.counts) {
            for (&k, &a) in ts.iter().zip(row) {
                out[k] += n * a;
            }
        }
        out
    }
}

/// E-step: `a_jk = p_k q_jk / Σ_k p_k q_jk` for every class.
pub fn prior_e_step(p: &[f64], classes: &[EquivalenceClass]) -> Result<Responsibilities> {
    let mut rows = Vec::with_capacity(classes.len());
    for (ci, c) in classes.iter().enumerate() {
        let w: Vec<f64> = c.transcripts.iter().zip(&c.q).map(|(&k, &q)| p[k] * q).collect();
        let denom: f64 = w.iter().sum();
        if !(denom > 0.0) {
            return Err(Error::OrphanedRead { class: ci });
        }
        rows.push(w.into_iter().map(|x| x / denom).collect());
    }
    Ok(Responsibilities {
        n_transcripts: p.len(),
        rows,
        transcripts: classes.iter().map(|c| c.transcripts.clone()).collect(),
        counts: classes.iter().map(|c| c.count).collect(),
    })
}

/// M-step: `p_k ∝ λφ_k + Σ_j a_jk`.
pub fn prior_m_step(resp: &Responsibilities, phi: &[f64], lambda: f64) -> Result<Vec<f64>> {
    m_step_from_counts(&resp.expected_counts(), phi, lambda)
}

fn m_step_from_counts(expected: &[f64], phi: &[f64], lambda: f64) -> Result<Vec<f64>> {
    let num: Vec<f64> = expected.iter().zip(phi).map(|(&a, &f)| lambda * f + a).collect();
    let total: f64 = num.iter().sum();
    if !(total > 0.0) || !total.is_finite() {
        return Err(Error::DegenerateProbabilities);
    }
    Ok(num.into_iter().map(|x| x / total).collect())
}

fn expected_counts_into(p: &[f64], classes: &[EquivalenceClass], out: &mut [f64]) -> Result<()> {
    out.iter_mut().for_each(|x| *x = 0.0);
    for (ci, c) in classes.iter().enumerate() {
        let denom: f64 = c.transcripts.iter().zip(&c.q).map(|(&k, &q)| p[k] * q).sum();
        if !(denom > 0.0) {
            return Err(Error::OrphanedRead { class: ci });
        }
        let scale = c.count / denom;
        for (&k, &q) in c.transcripts.iter().zip(&c.q) {
            out[k] += p[k] * q * scale;
        }
    }
    Ok(())
}

/// Log of the single-gene posterior objective: Dirichlet prior with
/// `α = λφ + 1` plus the mixture log-likelihood.
pub fn prior_objective(p: &[f64], classes: &[EquivalenceClass], phi: &[f64], lambda: f64) -> f64 {
    log_dirichlet_prior(p, phi, lambda) + log_likelihood(p, classes)
}

fn validate_prior(k: usize, phi: &[f64], lambda: f64) -> Result<()> {
    if phi.len() != k {
        return Err(Error::invalid("prior read counts do not match the transcript count"));
    }
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return Err(Error::invalid(format!(
            "lambda must be a finite non-negative number, got {lambda}"
        )));
    }
    if phi.iter().any(|&f| !(f >= 0.0) || !f.is_finite()) {
        return Err(Error::invalid("prior read counts must be finite and non-negative"));
    }
    Ok(())
}

/// MAP estimate of a gene's read-origin probabilities under a Dirichlet
/// prior with parameters `λφ + 1`, by EM from the uniform vector.
pub fn prior_em(
    classes: &[EquivalenceClass],
    k: usize,
    phi: &[f64],
    lambda: f64,
    opts: &EmOptions,
) -> Result<EmOutcome> {
    if k == 0 {
        return Err(Error::invalid("gene has no transcripts"));
    }
    validate_prior(k, phi, lambda)?;
    if classes.iter().any(|c| c.transcripts.iter().any(|&t| t >= k)) {
        return Err(Error::invalid(
            "equivalence class references a transcript outside the gene",
        ));
    }

    let n_reads: f64 = classes.iter().map(|c| c.count).sum();
    if n_reads == 0.0 {
        let prior_mass: f64 = phi.iter().sum::<f64>() * lambda;
        let p = if prior_mass > 0.0 {
            let total: f64 = phi.iter().sum();
            phi.iter().map(|&f| f / total).collect()
        } else {
            vec![1.0 / k as f64; k]
        };
        return Ok(EmOutcome {
            p,
            iterations: 0,
            converged: true,
            no_data: true,
            trace: Vec::new(),
        });
    }

    let track = opts.record_trace || cfg!(debug_assertions);
    let mut p = vec![1.0 / k as f64; k];
    let mut counts = vec![0.0; k];
    let mut trace = Vec::new();
    let mut last = f64::NEG_INFINITY;
    if track {
        last = prior_objective(&p, classes, phi, lambda);
        if opts.record_trace {
            trace.push(last);
        }
    }

    let mut iterations = 0;
    let mut converged = false;
    while iterations < opts.max_iter {
        expected_counts_into(&p, classes, &mut counts)?;
        let next = m_step_from_counts(&counts, phi, lambda)?;
        let delta = next.iter().zip(&p).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        p = next;
        iterations += 1;
        if track {
            let obj = prior_objective(&p, classes, phi, lambda);
            debug_assert!(
                obj >= last - 1e-10 * last.abs().max(1.0) || last == f64::NEG_INFINITY,
                "EM objective decreased from {last} to {obj}"
            );
            last = obj;
            if opts.record_trace {
                trace.push(obj);
            }
        }
        if delta < opts.tol {
            converged = true;
            break;
        }
    }

    Ok(EmOutcome {
        p,
        iterations,
        converged,
        no_data: false,
        trace,
    })
}

/// Maximum-likelihood estimate without a prior. A gene without reads
/// returns the uniform vector flagged `no_data`.
pub fn base_em(classes: &[EquivalenceClass], k: usize, opts: &EmOptions) -> Result<EmOutcome> {
    prior_em(classes, k, &vec![0.0; k], 0.0, opts)
}

/// Sum of log terms where `-inf` terms are counted rather than summed, so
/// two objectives that are both `-inf` in floating point can still be
/// ranked by how many of their factors vanish.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LogScore {
    pub vanishing_terms: usize,
    pub finite: f64,
}

impl LogScore {
    pub fn add(&mut self, term: f64) {
        if term == f64::NEG_INFINITY {
            self.vanishing_terms += 1;
        } else {
            self.finite += term;
        }
    }

    pub fn value(&self) -> f64 {
        if self.vanishing_terms > 0 {
            f64::NEG_INFINITY
        } else {
            self.finite
        }
    }

    pub fn is_nan(&self) -> bool {
        self.finite.is_nan()
    }

    /// Strict improvement: fewer vanishing factors, or as many and a larger
    /// finite part.
    pub fn improves_on(&self, other: &LogScore) -> bool {
        match self.vanishing_terms.cmp(&other.vanishing_terms) {
            std::cmp::Ordering::Less => true,
            std::cmp::Ordering::Greater => false,
            std::cmp::Ordering::Equal => self.finite > other.finite,
        }
    }
}

/// Dirichlet prior of a neighboring gene, with its prior read counts
/// already recomputed for the candidate probabilities of the gene being
/// updated.
#[derive(Debug, Clone, Copy)]
pub struct NeighborPrior<'a> {
    pub p: &'a [f64],
    pub phi: &'a [f64],
}

/// The part of the global pseudo-likelihood that depends on one gene's
/// probabilities, as a [`LogScore`]. Without `neighbors` this is the
/// single-gene posterior objective.
pub fn gene_log_score(
    p: &[f64],
    classes: &[EquivalenceClass],
    phi: &[f64],
    lambda: f64,
    neighbors: Option<&[NeighborPrior<'_>]>,
) -> LogScore {
    let mut score = LogScore::default();
    score.add(log_dirichlet_prior(p, phi, lambda));
    for c in classes {
        let mix: f64 = c.transcripts.iter().zip(&c.q).map(|(&k, &q)| p[k] * q).sum();
        score.add(c.count * mix.ln());
    }
    if let Some(nbs) = neighbors {
        for nb in nbs {
            score.add(log_dirichlet_prior(nb.p, nb.phi, lambda));
        }
    }
    score
}

/// [`gene_log_score`] as a plain log value.
pub fn gene_log_likelihood(
    p: &[f64],
    classes: &[EquivalenceClass],
    phi: &[f64],
    lambda: f64,
    neighbors: Option<&[NeighborPrior<'_>]>,
) -> f64 {
    gene_log_score(p, classes, phi, lambda, neighbors).value()
}
