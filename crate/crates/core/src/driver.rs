//! Network-prior quantification: genes are swept in turn, each re-estimated
//! by prior EM against the current neighborhood expression, and an update is
//! kept only when it strictly raises the part of the global pseudo-likelihood
//! that depends on that gene.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::em::{self, EmOptions, EquivalenceClass, LogScore};
use crate::error::{Error, Result};
use crate::model::{CompatibilitySet, QuantState, TranscriptCatalog, TranscriptNetwork};

#[derive(Debug, Clone, PartialEq)]
pub enum Init {
    Uniform,
    BaseEm,
    /// Flat per-transcript probabilities in catalog order.
    Supplied(Vec<f64>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GeneOrder {
    /// Catalog order every round.
    Fixed,
    /// A fresh seeded shuffle every round.
    Shuffled,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NetRstqOptions {
    pub lambda: f64,
    pub init: Init,
    pub outer_tol: f64,
    pub max_rounds: usize,
    pub em: EmOptions,
    pub order: GeneOrder,
    pub seed: u64,
}

impl Default for NetRstqOptions {
    fn default() -> Self {
        Self {
            lambda: 0.1,
            init: Init::BaseEm,
            outer_tol: 1e-6,
            max_rounds: 100,
            em: EmOptions::default(),
            order: GeneOrder::Fixed,
            seed: 0,
        }
    }
}

/// Reported after every gene visit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Progress {
    pub round: usize,
    pub gene: usize,
    pub accepted: bool,
    /// Change of the gene's local objective; 0 when rejected.
    pub delta_log_likelihood: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuantRun {
    pub state: QuantState,
    /// Accepted updates per gene.
    pub accepted: Vec<usize>,
    /// Global log pseudo-likelihood before the first round and after every
    /// gene visit.
    pub trajectory: Vec<f64>,
    /// Global log pseudo-likelihood recomputed from scratch before the first
    /// round and after every round.
    pub round_scores: Vec<LogScore>,
    pub rounds: usize,
    pub converged: bool,
}

impl QuantRun {
    pub fn round_log_likelihoods(&self) -> Vec<f64> {
        self.round_scores.iter().map(LogScore::value).collect()
    }
}

/// Working state of one sweep: probabilities, expressions and the running
/// neighbor expression sums.
struct Sweep<'a> {
    catalog: &'a TranscriptCatalog,
    network: &'a TranscriptNetwork,
    classes: Vec<Vec<EquivalenceClass>>,
    reads: Vec<usize>,
    neighbor_genes: Vec<Vec<usize>>,
    lambda: f64,
    p: Vec<f64>,
    pi: Vec<f64>,
    nb_sum: Vec<f64>,
    // scratch
    delta: Vec<f64>,
    touched: Vec<usize>,
}

impl<'a> Sweep<'a> {
    fn refresh_neighbor_sums(&mut self) {
        for t in 0..self.nb_sum.len() {
            self.nb_sum[t] = self.network.neighbors(t).iter().map(|&u| self.pi[u]).sum();
        }
    }

    fn phi_of(&self, t: usize, extra: f64) -> f64 {
        let deg = self.network.degree(t);
        if deg == 0 {
            0.0
        } else {
            f64::from(self.catalog.lengths()[t]) * (self.nb_sum[t] + extra) / deg as f64
        }
    }

    fn gene_phi(&self, g: usize) -> Vec<f64> {
        self.catalog.gene_range(g).map(|t| self.phi_of(t, 0.0)).collect()
    }

    fn gene_expression(&self, g: usize, p: &[f64]) -> Vec<f64> {
        let n = self.reads[g] as f64;
        p.iter()
            .zip(self.catalog.gene_lengths(g))
            .map(|(&pk, &l)| n * pk / f64::from(l))
            .collect()
    }

    /// Local objective of gene `g` at candidate `cand`, with every
    /// neighboring gene's prior recomputed for the candidate expressions.
    fn local_score(&mut self, g: usize, cand: &[f64], phi_g: &[f64]) -> LogScore {
        let range = self.catalog.gene_range(g);
        let new_pi = self.gene_expression(g, cand);
        for (k, t) in range.clone().enumerate() {
            let d = new_pi[k] - self.pi[t];
            if d == 0.0 {
                continue;
            }
            for &u in self.network.neighbors(t) {
                if self.delta[u] == 0.0 {
                    self.touched.push(u);
                }
                self.delta[u] += d;
            }
        }

        let mut score = em::gene_log_score(cand, &self.classes[g], phi_g, self.lambda, None);
        for &h in &self.neighbor_genes[g] {
            let hr = self.catalog.gene_range(h);
            let phi_h: Vec<f64> = hr.clone().map(|u| self.phi_of(u, self.delta[u])).collect();
            score.add(em::log_dirichlet_prior(&self.p[hr], &phi_h, self.lambda));
        }

        for &u in &self.touched {
            self.delta[u] = 0.0;
        }
        self.touched.clear();
        score
    }

    fn apply(&mut self, g: usize, cand: &[f64]) {
        let range = self.catalog.gene_range(g);
        let new_pi = self.gene_expression(g, cand);
        for (k, t) in range.enumerate() {
            let d = new_pi[k] - self.pi[t];
            if d != 0.0 {
                for &u in self.network.neighbors(t) {
                    self.nb_sum[u] += d;
                }
            }
            self.pi[t] = new_pi[k];
            self.p[t] = cand[k];
        }
    }

    fn total_score(&self) -> LogScore {
        let mut score = LogScore::default();
        for g in 0..self.catalog.n_genes() {
            let r = self.catalog.gene_range(g);
            let phi = self.gene_phi(g);
            score.add(em::log_dirichlet_prior(&self.p[r.clone()], &phi, self.lambda));
            for c in &self.classes[g] {
                let mix: f64 = c
                    .transcripts
                    .iter()
                    .zip(&c.q)
                    .map(|(&k, &q)| self.p[r.start + k] * q)
                    .sum();
                score.add(c.count * mix.ln());
            }
        }
        score
    }
}

fn check_inputs(
    catalog: &TranscriptCatalog,
    compat: &CompatibilitySet,
    network: &TranscriptNetwork,
    lambda: f64,
) -> Result<()> {
    if network.n_nodes() != catalog.n_transcripts() || network.groups() != catalog.gene_assignment() {
        return Err(Error::invalid("network was not built over this transcript catalog"));
    }
    if compat.read_counts().len() != catalog.n_genes() {
        return Err(Error::invalid("compatibility set does not match the catalog"));
    }
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return Err(Error::invalid(format!(
            "lambda must be finite and non-negative, got {lambda}"
        )));
    }
    Ok(())
}

/// Per-gene EM estimates without any prior, in catalog order.
pub fn base_em_all(catalog: &TranscriptCatalog, compat: &CompatibilitySet, opts: &EmOptions) -> Result<QuantState> {
    let mut p = vec![0.0; catalog.n_transcripts()];
    for g in 0..catalog.n_genes() {
        let classes = em::collapse_reads(compat.gene_reads(g));
        let out = em::base_em(&classes, catalog.gene_size(g), opts).map_err(|e| Error::Numerical {
            gene: catalog.genes()[g].id.clone(),
            reason: e.to_string(),
        })?;
        p[catalog.gene_range(g)].copy_from_slice(&out.p);
    }
    QuantState::from_probabilities(
        catalog,
        &compat.read_counts(),
        p,
        vec![0.0; catalog.n_transcripts()],
        0.0,
    )
}

pub fn net_rstq(
    catalog: &TranscriptCatalog,
    compat: &CompatibilitySet,
    network: &TranscriptNetwork,
    opts: &NetRstqOptions,
    mut progress: Option<&mut dyn FnMut(&Progress)>,
) -> Result<QuantRun> {
    check_inputs(catalog, compat, network, opts.lambda)?;
    let n_genes = catalog.n_genes();
    let n_tx = catalog.n_transcripts();
    let classes: Vec<Vec<EquivalenceClass>> = (0..n_genes).map(|g| em::collapse_reads(compat.gene_reads(g))).collect();
    let reads = compat.read_counts();
    let gene_name = |g: usize| catalog.genes()[g].id.clone();

    let p0 = match &opts.init {
        Init::Uniform => {
            let mut p = vec![0.0; n_tx];
            for g in 0..n_genes {
                let k = catalog.gene_size(g) as f64;
                p[catalog.gene_range(g)].iter_mut().for_each(|x| *x = 1.0 / k);
            }
            p
        }
        Init::BaseEm => {
            let mut p = vec![0.0; n_tx];
            for g in 0..n_genes {
                let out = em::base_em(&classes[g], catalog.gene_size(g), &opts.em).map_err(|e| Error::Numerical {
                    gene: gene_name(g),
                    reason: e.to_string(),
                })?;
                p[catalog.gene_range(g)].copy_from_slice(&out.p);
            }
            p
        }
        Init::Supplied(p) => {
            if p.len() != n_tx {
                return Err(Error::invalid(
                    "supplied initial probabilities do not match the catalog",
                ));
            }
            for g in 0..n_genes {
                let block = &p[catalog.gene_range(g)];
                let s: f64 = block.iter().sum();
                if block.iter().any(|&x| !(0.0..=1.0).contains(&x)) || (s - 1.0).abs() > 1e-9 {
                    return Err(Error::invalid(format!(
                        "supplied probabilities for gene {} are not on the simplex",
                        gene_name(g)
                    )));
                }
            }
            p.clone()
        }
    };

    let neighbor_genes = (0..n_genes).map(|g| network.neighbor_genes(catalog, g)).collect();
    let mut sweep = Sweep {
        catalog,
        network,
        classes,
        reads,
        neighbor_genes,
        lambda: opts.lambda,
        p: p0,
        pi: vec![0.0; n_tx],
        nb_sum: vec![0.0; n_tx],
        delta: vec![0.0; n_tx],
        touched: Vec::new(),
    };
    for g in 0..n_genes {
        let r = catalog.gene_range(g);
        let pi = sweep.gene_expression(g, &sweep.p[r.clone()]);
        sweep.pi[r].copy_from_slice(&pi);
    }
    sweep.refresh_neighbor_sums();

    let mut running = sweep.total_score();
    if running.is_nan() {
        return Err(Error::Numerical {
            gene: String::new(),
            reason: "initial likelihood is NaN".into(),
        });
    }
    let mut trajectory = vec![running.value()];
    let mut round_scores = vec![running];
    let mut accepted = vec![0usize; n_genes];
    let mut order: Vec<usize> = (0..n_genes).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut converged = false;
    let mut rounds = 0;

    while rounds < opts.max_rounds {
        rounds += 1;
        let start = sweep.p.clone();
        if opts.order == GeneOrder::Shuffled {
            order.shuffle(&mut rng);
        }
        for &g in &order {
            let r = catalog.gene_range(g);
            let phi_g = sweep.gene_phi(g);
            let cand = em::prior_em(&sweep.classes[g], r.len(), &phi_g, opts.lambda, &opts.em)
                .map_err(|e| Error::Numerical {
                    gene: gene_name(g),
                    reason: e.to_string(),
                })?
                .p;
            let current: Vec<f64> = sweep.p[r.clone()].to_vec();
            let new_score = sweep.local_score(g, &cand, &phi_g);
            let old_score = sweep.local_score(g, &current, &phi_g);
            if new_score.is_nan() || old_score.is_nan() {
                return Err(Error::Numerical {
                    gene: gene_name(g),
                    reason: "local likelihood is NaN".into(),
                });
            }
            let take = new_score.improves_on(&old_score);
            let mut delta_ll = 0.0;
            if take {
                sweep.apply(g, &cand);
                accepted[g] += 1;
                running.vanishing_terms =
                    running.vanishing_terms + new_score.vanishing_terms - old_score.vanishing_terms;
                running.finite += new_score.finite - old_score.finite;
                delta_ll = new_score.value() - old_score.value();
            }
            trajectory.push(running.value());
            if let Some(cb) = progress.as_mut() {
                cb(&Progress {
                    round: rounds,
                    gene: g,
                    accepted: take,
                    delta_log_likelihood: delta_ll,
                });
            }
        }

        sweep.refresh_neighbor_sums();
        running = sweep.total_score();
        round_scores.push(running);
        let change = sweep
            .p
            .iter()
            .zip(&start)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        log::debug!(
            "round {rounds}: log pseudo-likelihood {}, max change {change:e}",
            running.value()
        );
        if change < opts.outer_tol {
            converged = true;
            break;
        }
    }

    let phi: Vec<f64> = (0..n_tx).map(|t| sweep.phi_of(t, 0.0)).collect();
    let state = QuantState::from_probabilities(catalog, &sweep.reads, sweep.p, phi, opts.lambda)?;
    Ok(QuantRun {
        state,
        accepted,
        trajectory,
        round_scores,
        rounds,
        converged,
    })
}

/// Global log pseudo-likelihood of arbitrary probabilities: every gene's
/// Dirichlet prior under network-derived counts plus its read likelihood.
pub fn pseudo_log_likelihood(
    catalog: &TranscriptCatalog,
    compat: &CompatibilitySet,
    network: &TranscriptNetwork,
    p: &[f64],
    lambda: f64,
) -> Result<f64> {
    check_inputs(catalog, compat, network, lambda)?;
    let reads = compat.read_counts();
    let mut pi = vec![0.0; p.len()];
    for g in 0..catalog.n_genes() {
        let r = catalog.gene_range(g);
        for t in r {
            pi[t] = reads[g] as f64 * p[t] / f64::from(catalog.lengths()[t]);
        }
    }
    let phi = crate::model::compute_phi_all(catalog, network, &pi);
    let mut score = LogScore::default();
    for g in 0..catalog.n_genes() {
        let r = catalog.gene_range(g);
        let classes = em::collapse_reads(compat.gene_reads(g));
        score.add(em::log_dirichlet_prior(&p[r.clone()], &phi[r.clone()], lambda));
        score.add(em::log_likelihood(&p[r], &classes));
    }
    Ok(score.value())
}
