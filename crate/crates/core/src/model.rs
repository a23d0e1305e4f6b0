//! Domain types and the algebraic transforms between read-origin
//! probabilities, relative abundances, expressions and prior read counts.
//!
//! Transcripts are addressed in two ways: by a *global* index into the
//! catalog's flattened transcript order, and by a *local* index within their
//! gene. [`TranscriptCatalog::gene_range`] maps between the two.

use std::collections::{HashMap, HashSet};
use std::ops::Range;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Transcript {
    pub id: String,
    /// Length in base pairs.
    pub length: u32,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Gene {
    pub id: String,
    pub transcripts: Vec<Transcript>,
}

/// Genes and their transcripts in input order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TranscriptCatalog {
    genes: Vec<Gene>,
    offsets: Vec<usize>,
    gene_of: Vec<usize>,
    lengths: Vec<u32>,
    transcript_index: HashMap<String, usize>,
    gene_index: HashMap<String, usize>,
}

impl TranscriptCatalog {
    pub fn new(genes: Vec<Gene>) -> Result<Self> {
        let mut offsets = Vec::with_capacity(genes.len() + 1);
        let mut gene_of = Vec::new();
        let mut lengths = Vec::new();
        let mut transcript_index = HashMap::new();
        let mut gene_index = HashMap::new();
        offsets.push(0);
        for (g, gene) in genes.iter().enumerate() {
            if gene.transcripts.is_empty() {
                return Err(Error::invalid(format!("gene {} has no transcripts", gene.id)));
            }
            if gene_index.insert(gene.id.clone(), g).is_some() {
                return Err(Error::invalid(format!("duplicate gene id {}", gene.id)));
            }
            for t in &gene.transcripts {
                if t.length == 0 {
                    return Err(Error::invalid(format!("transcript {} has length 0", t.id)));
                }
                let idx = lengths.len();
                if transcript_index.insert(t.id.clone(), idx).is_some() {
                    return Err(Error::invalid(format!("duplicate transcript id {}", t.id)));
                }
                gene_of.push(g);
                lengths.push(t.length);
            }
            offsets.push(lengths.len());
        }
        Ok(Self {
            genes,
            offsets,
            gene_of,
            lengths,
            transcript_index,
            gene_index,
        })
    }

    pub fn genes(&self) -> &[Gene] {
        &self.genes
    }

    pub fn n_genes(&self) -> usize {
        self.genes.len()
    }

    pub fn n_transcripts(&self) -> usize {
        self.lengths.len()
    }

    /// Global transcript indices belonging to gene `g`.
    pub fn gene_range(&self, g: usize) -> Range<usize> {
        self.offsets[g]..self.offsets[g + 1]
    }

    pub fn gene_size(&self, g: usize) -> usize {
        self.offsets[g + 1] - self.offsets[g]
    }

    pub fn gene_of(&self, t: usize) -> usize {
        self.gene_of[t]
    }

    /// Gene index of every transcript, in global order.
    pub fn gene_assignment(&self) -> &[usize] {
        &self.gene_of
    }

    pub fn lengths(&self) -> &[u32] {
        &self.lengths
    }

    pub fn gene_lengths(&self, g: usize) -> &[u32] {
        &self.lengths[self.gene_range(g)]
    }

    pub fn transcript_id(&self, t: usize) -> &str {
        let g = self.gene_of[t];
        &self.genes[g].transcripts[t - self.offsets[g]].id
    }

    pub fn transcript_index(&self, id: &str) -> Option<usize> {
        self.transcript_index.get(id).copied()
    }

    pub fn gene_index(&self, id: &str) -> Option<usize> {
        self.gene_index.get(id).copied()
    }
}

/// Probability of drawing a read of length `read_length` from a transcript
/// of length `length` under uniform start positions.
pub fn sampling_probability(length: u32, read_length: u32) -> Result<f64> {
    if length <= read_length {
        return Err(Error::invalid(format!(
            "transcript length {length} does not exceed read length {read_length}"
        )));
    }
    Ok(1.0 / f64::from(length - read_length + 1))
}

/// One read and the transcripts of its gene it is compatible with.
#[derive(Debug, Clone, PartialEq)]
pub struct ReadCompat {
    pub read_id: String,
    /// `(local transcript index, q)` pairs, sorted by index.
    pub compat: Vec<(usize, f64)>,
}

/// Per-gene read compatibility with sampling probabilities.
#[derive(Debug, Clone, PartialEq)]
pub struct CompatibilitySet {
    read_length: u32,
    reads: Vec<Vec<ReadCompat>>,
    explicit_q: bool,
}

impl CompatibilitySet {
    /// Builds a set whose q values are derived from transcript lengths.
    /// The `q` entries of `reads` are ignored and recomputed.
    pub fn with_computed_q(
        catalog: &TranscriptCatalog,
        read_length: u32,
        reads: Vec<Vec<(String, Vec<usize>)>>,
    ) -> Result<Self> {
        if reads.len() != catalog.n_genes() {
            return Err(Error::invalid("compatibility set does not cover every gene"));
        }
        let mut out = Vec::with_capacity(reads.len());
        for (g, gene_reads) in reads.into_iter().enumerate() {
            let lengths = catalog.gene_lengths(g);
            let mut q_cache: Vec<Option<f64>> = vec![None; lengths.len()];
            let mut rows = Vec::with_capacity(gene_reads.len());
            for (read_id, transcripts) in gene_reads {
                let mut compat = Vec::with_capacity(transcripts.len());
                for k in transcripts {
                    if k >= lengths.len() {
                        return Err(Error::invalid(format!(
                            "read {read_id} references transcript {k} outside gene {}",
                            catalog.genes()[g].id
                        )));
                    }
                    let q = match q_cache[k] {
                        Some(q) => q,
                        None => {
                            let q = sampling_probability(lengths[k], read_length).map_err(|_| {
                                Error::invalid(format!(
                                    "read {read_id}: transcript {} (length {}) is not longer than read length {read_length}",
                                    catalog.genes()[g].transcripts[k].id,
                                    lengths[k]
                                ))
                            })?;
                            q_cache[k] = Some(q);
                            q
                        }
                    };
                    compat.push((k, q));
                }
                rows.push(ReadCompat { read_id, compat });
            }
            out.push(rows);
        }
        Self::new(catalog, read_length, out, false)
    }

    /// Builds a set from explicit per-read q values (when `explicit_q`) or
    /// q values that must match the length-derived ones.
    pub fn new(
        catalog: &TranscriptCatalog,
        read_length: u32,
        mut reads: Vec<Vec<ReadCompat>>,
        explicit_q: bool,
    ) -> Result<Self> {
        if read_length == 0 {
            return Err(Error::invalid("read length must be positive"));
        }
        if reads.len() != catalog.n_genes() {
            return Err(Error::invalid("compatibility set does not cover every gene"));
        }
        let mut seen: HashSet<&str> = HashSet::new();
        for (g, gene_reads) in reads.iter_mut().enumerate() {
            let k_max = catalog.gene_size(g);
            for read in gene_reads.iter_mut() {
                if read.compat.is_empty() {
                    return Err(Error::invalid(format!(
                        "read {} has an empty compatibility set",
                        read.read_id
                    )));
                }
                read.compat.sort_by_key(|&(k, _)| k);
                for w in read.compat.windows(2) {
                    if w[0].0 == w[1].0 {
                        return Err(Error::invalid(format!(
                            "read {} lists a transcript twice",
                            read.read_id
                        )));
                    }
                }
                for &(k, q) in &read.compat {
                    if k >= k_max {
                        return Err(Error::invalid(format!(
                            "read {} references a transcript outside gene {}",
                            read.read_id,
                            catalog.genes()[g].id
                        )));
                    }
                    if !(q > 0.0 && q <= 1.0) {
                        return Err(Error::invalid(format!(
                            "read {} has sampling probability {q} outside (0, 1]",
                            read.read_id
                        )));
                    }
                }
            }
        }
        for gene_reads in &reads {
            for read in gene_reads {
                if !seen.insert(read.read_id.as_str()) {
                    return Err(Error::invalid(format!("duplicate read id {}", read.read_id)));
                }
            }
        }
        Ok(Self {
            read_length,
            reads,
            explicit_q,
        })
    }

    pub fn read_length(&self) -> u32 {
        self.read_length
    }

    /// Whether q values were supplied rather than derived from lengths.
    pub fn explicit_q(&self) -> bool {
        self.explicit_q
    }

    pub fn gene_reads(&self, g: usize) -> &[ReadCompat] {
        &self.reads[g]
    }

    pub fn read_count(&self, g: usize) -> usize {
        self.reads[g].len()
    }

    pub fn read_counts(&self) -> Vec<usize> {
        self.reads.iter().map(Vec::len).collect()
    }

    pub fn total_reads(&self) -> usize {
        self.reads.iter().map(Vec::len).sum()
    }
}

/// Undirected binary transcript graph over the global transcript indices of
/// a catalog. Transcripts of the same gene are never adjacent.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TranscriptNetwork {
    groups: Vec<usize>,
    adj: Vec<Vec<usize>>,
    n_edges: usize,
}

impl TranscriptNetwork {
    /// `groups[t]` is the gene of node `t`. Duplicate edges are merged.
    pub fn new(groups: Vec<usize>, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let n = groups.len();
        let mut adj = vec![Vec::new(); n];
        for (a, b) in edges {
            if a >= n || b >= n {
                return Err(Error::invalid(format!("edge ({a}, {b}) references an unknown node")));
            }
            if a == b {
                return Err(Error::invalid(format!("self-loop on node {a}")));
            }
            if groups[a] == groups[b] {
                return Err(Error::invalid(format!(
                    "edge ({a}, {b}) joins two transcripts of the same gene"
                )));
            }
            adj[a].push(b);
            adj[b].push(a);
        }
        let mut twice = 0;
        for list in &mut adj {
            list.sort_unstable();
            list.dedup();
            twice += list.len();
        }
        Ok(Self {
            groups,
            adj,
            n_edges: twice / 2,
        })
    }

    pub fn for_catalog(catalog: &TranscriptCatalog, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        Self::new(catalog.gene_assignment().to_vec(), edges)
    }

    pub fn empty(catalog: &TranscriptCatalog) -> Self {
        Self {
            groups: catalog.gene_assignment().to_vec(),
            adj: vec![Vec::new(); catalog.n_transcripts()],
            n_edges: 0,
        }
    }

    pub fn n_nodes(&self) -> usize {
        self.adj.len()
    }

    pub fn n_edges(&self) -> usize {
        self.n_edges
    }

    pub fn groups(&self) -> &[usize] {
        &self.groups
    }

    /// Sorted neighbor list.
    pub fn neighbors(&self, t: usize) -> &[usize] {
        &self.adj[t]
    }

    pub fn degree(&self, t: usize) -> usize {
        self.adj[t].len()
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        self.adj[a].binary_search(&b).is_ok()
    }

    /// Every edge once as `(a, b)` with `a < b`, in lexicographic order.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::with_capacity(self.n_edges);
        for (a, list) in self.adj.iter().enumerate() {
            out.extend(list.iter().filter(|&&b| b > a).map(|&b| (a, b)));
        }
        out
    }

    /// Genes owning at least one neighbor of a transcript of gene `g`,
    /// sorted and excluding `g`.
    pub fn neighbor_genes(&self, catalog: &TranscriptCatalog, g: usize) -> Vec<usize> {
        let mut out: Vec<usize> = catalog
            .gene_range(g)
            .flat_map(|t| self.adj[t].iter().map(|&u| self.groups[u]))
            .collect();
        out.sort_unstable();
        out.dedup();
        out
    }
}

/// Estimated abundances for every transcript, in global catalog order.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantState {
    /// Read-origin probabilities, a simplex vector per gene.
    pub p: Vec<f64>,
    /// Length-normalized relative abundance within each gene.
    pub rho: Vec<f64>,
    /// Expression in reads per base.
    pub pi: Vec<f64>,
    /// Prior read count used for the last update of each transcript.
    pub phi: Vec<f64>,
    pub lambda: f64,
    /// Genes with no reads.
    pub no_data: Vec<bool>,
}

impl QuantState {
    /// Derives ρ and π from per-gene probabilities.
    pub fn from_probabilities(
        catalog: &TranscriptCatalog,
        read_counts: &[usize],
        p: Vec<f64>,
        phi: Vec<f64>,
        lambda: f64,
    ) -> Result<Self> {
        let mut rho = vec![0.0; p.len()];
        let mut pi = vec![0.0; p.len()];
        for g in 0..catalog.n_genes() {
            let range = catalog.gene_range(g);
            let lengths = catalog.gene_lengths(g);
            rho[range.clone()].copy_from_slice(&relative_abundance(&p[range.clone()], lengths)?);
            pi[range.clone()].copy_from_slice(&expression(&p[range], read_counts[g], lengths));
        }
        let no_data = read_counts.iter().map(|&n| n == 0).collect();
        Ok(Self {
            p,
            rho,
            pi,
            phi,
            lambda,
            no_data,
        })
    }
}

/// Ground truth produced by the simulation procedure.
#[derive(Debug, Clone, PartialEq)]
pub struct SimTruth {
    /// Sampled expression per gene.
    pub gene_expression: Vec<f64>,
    /// Power-law proportions before network smoothing, per transcript.
    pub p_initial: Vec<f64>,
    /// Converged proportions, per transcript.
    pub p: Vec<f64>,
    /// Ground-truth expression `E_g * p`, normalized to sum to one.
    pub pi: Vec<f64>,
    /// Weight on the neighbor mean during smoothing.
    pub sim_alpha: f64,
    pub noise_sigma: f64,
    /// Smoothing iterations until convergence.
    pub iterations: usize,
}

/// Length-normalized relative abundance of each transcript within a gene.
pub fn relative_abundance(p: &[f64], lengths: &[u32]) -> Result<Vec<f64>> {
    if p.len() != lengths.len() {
        return Err(Error::invalid("probability and length vectors differ in size"));
    }
    let scaled: Vec<f64> = p.iter().zip(lengths).map(|(&pk, &l)| pk / f64::from(l)).collect();
    let total: f64 = scaled.iter().sum();
    if !(total > 0.0) {
        return Err(Error::DegenerateProbabilities);
    }
    Ok(scaled.into_iter().map(|x| x / total).collect())
}

/// Expression in reads per base: `read_count * p_k / l_k`.
pub fn expression(p: &[f64], read_count: usize, lengths: &[u32]) -> Vec<f64> {
    assert_eq!(p.len(), lengths.len(), "probability and length vectors differ in size");
    let n = read_count as f64;
    p.iter().zip(lengths).map(|(&pk, &l)| n * pk / f64::from(l)).collect()
}

/// Prior read count of transcript `t`: its length times the mean expression
/// of its network neighbors. Isolated transcripts get 0.
pub fn compute_phi(t: usize, network: &TranscriptNetwork, pi: &[f64], length: u32) -> f64 {
    let nb = network.neighbors(t);
    if nb.is_empty() {
        return 0.0;
    }
    let sum: f64 = nb.iter().map(|&u| pi[u]).sum();
    f64::from(length) * sum / nb.len() as f64
}

/// [`compute_phi`] for every transcript of the catalog.
pub fn compute_phi_all(catalog: &TranscriptCatalog, network: &TranscriptNetwork, pi: &[f64]) -> Vec<f64> {
    (0..catalog.n_transcripts())
        .map(|t| compute_phi(t, network, pi, catalog.lengths()[t]))
        .collect()
}

/// Dirichlet parameters `λφ + 1`.
pub fn dirichlet_alpha(phi: &[f64], lambda: f64) -> Vec<f64> {
    phi.iter().map(|&f| lambda * f + 1.0).collect()
}
