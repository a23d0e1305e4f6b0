//! Joint estimation of all genes under a quadratic network penalty that
//! pulls each transcript's expression toward the mean of its neighbors:
//! maximize `Σ_g log L_g(P_g) − λ_reg ‖AP − WP‖²` over the product of the
//! per-gene simplices.
//!
//! The penalty is not jointly concave with the likelihood in general, so
//! the solver is a local ascent method.

use crate::em::{self, EmOptions, EquivalenceClass};
use crate::error::{Error, Result};
use crate::model::{CompatibilitySet, QuantState, TranscriptCatalog, TranscriptNetwork};

/// Diagonal expression weights `A` and neighbor-averaging weights `W`.
#[derive(Debug, Clone, PartialEq)]
pub struct PenaltyOperators {
    /// `A_ii = |r_g(i)| / l_i`.
    pub a: Vec<f64>,
    /// Row `i` of `W`: `(j, |r_g(j)| / (|nb(i)| l_j))` for each neighbor `j`.
    pub w: Vec<Vec<(usize, f64)>>,
}

impl PenaltyOperators {
    pub fn new(catalog: &TranscriptCatalog, read_counts: &[usize], network: &TranscriptNetwork) -> Self {
        let lengths = catalog.lengths();
        let scale = |t: usize| read_counts[catalog.gene_of(t)] as f64 / f64::from(lengths[t]);
        let a = (0..catalog.n_transcripts()).map(scale).collect();
        let w = (0..catalog.n_transcripts())
            .map(|i| {
                let nb = network.neighbors(i);
                let deg = nb.len() as f64;
                nb.iter().map(|&j| (j, scale(j) / deg)).collect()
            })
            .collect();
        Self { a, w }
    }

    /// `AP − WP`: each transcript's expression minus its neighbor mean.
    pub fn residual(&self, p: &[f64]) -> Vec<f64> {
        self.a
            .iter()
            .zip(&self.w)
            .enumerate()
            .map(|(i, (&a, row))| a * p[i] - row.iter().map(|&(j, w)| w * p[j]).sum::<f64>())
            .collect()
    }

    /// Gradient of the penalty, `2 (A − W)ᵀ (A − W) P`.
    pub fn gradient(&self, p: &[f64]) -> Vec<f64> {
        let r = self.residual(p);
        let mut g: Vec<f64> = self.a.iter().zip(&r).map(|(a, ri)| 2.0 * a * ri).collect();
        for (i, row) in self.w.iter().enumerate() {
            for &(j, w) in row {
                g[j] -= 2.0 * w * r[i];
            }
        }
        g
    }
}

/// `‖AP − WP‖²`.
pub fn penalty(p: &[f64], ops: &PenaltyOperators) -> f64 {
    ops.residual(p).iter().map(|r| r * r).sum()
}

/// Euclidean projection onto the probability simplex. Ties in the sort are
/// broken by index.
pub fn project_simplex(v: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..v.len()).collect();
    order.sort_by(|&a, &b| v[b].total_cmp(&v[a]).then(a.cmp(&b)));
    let mut cumsum = 0.0;
    let mut theta = 0.0;
    for (j, &idx) in order.iter().enumerate() {
        cumsum += v[idx];
        let t = (cumsum - 1.0) / (j + 1) as f64;
        if v[idx] - t > 0.0 {
            theta = t;
        }
    }
    v.iter().map(|&x| (x - theta).max(0.0)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RegInit {
    Uniform,
    BaseEm,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegOptions {
    pub lambda_reg: f64,
    /// Stop once the unit-step projected gradient move is below this in
    /// every coordinate.
    pub tol: f64,
    pub max_iter: usize,
    pub init: RegInit,
}

impl Default for RegOptions {
    fn default() -> Self {
        Self {
            lambda_reg: 0.0,
            tol: 1e-7,
            max_iter: 20_000,
            init: RegInit::BaseEm,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegResult {
    pub state: QuantState,
    pub iterations: usize,
    pub converged: bool,
    /// Step size underflowed before convergence; the state is the best
    /// iterate found.
    pub stalled: bool,
    /// Objective after every accepted step, starting from the initial point.
    pub objective_trace: Vec<f64>,
}

struct Problem<'a> {
    catalog: &'a TranscriptCatalog,
    classes: Vec<Vec<EquivalenceClass>>,
    ops: PenaltyOperators,
    lambda: f64,
    /// Per-gene step scaling.
    scale: Vec<f64>,
}

impl Problem<'_> {
    fn objective(&self, p: &[f64]) -> f64 {
        let mut ll = 0.0;
        for (g, classes) in self.classes.iter().enumerate() {
            ll += em::log_likelihood(&p[self.catalog.gene_range(g)], classes);
        }
        if self.lambda == 0.0 {
            ll
        } else {
            ll - self.lambda * penalty(p, &self.ops)
        }
    }

    fn gradient(&self, p: &[f64]) -> Vec<f64> {
        let mut grad = if self.lambda == 0.0 {
            vec![0.0; p.len()]
        } else {
            self.ops.gradient(p).into_iter().map(|x| -self.lambda * x).collect()
        };
        for (g, classes) in self.classes.iter().enumerate() {
            let off = self.catalog.gene_range(g).start;
            for c in classes {
                let mix: f64 = c.transcripts.iter().zip(&c.q).map(|(&k, &q)| p[off + k] * q).sum();
                for (&k, &q) in c.transcripts.iter().zip(&c.q) {
                    grad[off + k] += c.count * q / mix;
                }
            }
        }
        grad
    }

    fn step(&self, p: &[f64], grad: &[f64], eta: f64) -> Vec<f64> {
        let mut out = vec![0.0; p.len()];
        for g in 0..self.catalog.n_genes() {
            let r = self.catalog.gene_range(g);
            let moved: Vec<f64> = r.clone().map(|t| p[t] + eta * self.scale[g] * grad[t]).collect();
            out[r].copy_from_slice(&project_simplex(&moved));
        }
        out
    }
}

/// Projected-gradient ascent with step halving until the objective rises.
pub fn solve_penalized(
    catalog: &TranscriptCatalog,
    compat: &CompatibilitySet,
    network: &TranscriptNetwork,
    opts: &RegOptions,
) -> Result<RegResult> {
    if !(opts.lambda_reg >= 0.0) || !opts.lambda_reg.is_finite() {
        return Err(Error::invalid(format!(
            "lambda_reg must be finite and non-negative, got {}",
            opts.lambda_reg
        )));
    }
    if network.n_nodes() != catalog.n_transcripts() || network.groups() != catalog.gene_assignment() {
        return Err(Error::invalid("network was not built over this transcript catalog"));
    }
    let reads = compat.read_counts();
    let classes: Vec<Vec<EquivalenceClass>> = (0..catalog.n_genes())
        .map(|g| em::collapse_reads(compat.gene_reads(g)))
        .collect();
    let problem = Problem {
        catalog,
        ops: PenaltyOperators::new(catalog, &reads, network),
        lambda: opts.lambda_reg,
        scale: reads.iter().map(|&n| 1.0 / (n.max(1) as f64)).collect(),
        classes,
    };

    let mut p = vec![0.0; catalog.n_transcripts()];
    for g in 0..catalog.n_genes() {
        let r = catalog.gene_range(g);
        let k = r.len();
        match opts.init {
            RegInit::Uniform => p[r].iter_mut().for_each(|x| *x = 1.0 / k as f64),
            RegInit::BaseEm => {
                let out = em::base_em(&problem.classes[g], k, &EmOptions::default())?;
                p[r].copy_from_slice(&out.p);
            }
        }
    }

    let mut f = problem.objective(&p);
    if !f.is_finite() {
        return Err(Error::Numerical {
            gene: String::new(),
            reason: "penalized objective is not finite at the initial point".into(),
        });
    }
    let mut trace = vec![f];
    let mut eta: f64 = 1.0;
    let mut iterations = 0;
    let mut converged = false;
    let mut stalled = false;
    while iterations < opts.max_iter {
        let grad = problem.gradient(&p);
        let unit = problem.step(&p, &grad, 1.0);
        let gap = unit.iter().zip(&p).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        if gap < opts.tol {
            converged = true;
            break;
        }
        iterations += 1;
        loop {
            let trial = problem.step(&p, &grad, eta);
            let ft = problem.objective(&trial);
            if ft > f {
                debug_assert!(ft >= f - 1e-10 * f.abs().max(1.0));
                p = trial;
                f = ft;
                trace.push(f);
                eta = (eta * 2.0).min(1e6);
                break;
            }
            eta *= 0.5;
            if eta < 1e-30 {
                stalled = true;
                break;
            }
        }
        if stalled {
            break;
        }
    }

    let state = QuantState::from_probabilities(catalog, &reads, p, vec![0.0; catalog.n_transcripts()], 0.0)?;
    Ok(RegResult {
        state,
        iterations,
        converged,
        stalled,
        objective_trace: trace,
    })
}
