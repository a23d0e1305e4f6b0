//! Tab-separated file formats. Loaders validate content and report the
//! offending line; stores produce identical bytes for identical inputs.

use std::collections::{BTreeSet, HashMap};
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::analysis::{CoexpressionBins, ExpressionMatrix};
use crate::error::{Error, Result};
use crate::model::{
    sampling_probability, CompatibilitySet, Gene, QuantState, ReadCompat, SimTruth, Transcript, TranscriptCatalog,
    TranscriptNetwork,
};
use crate::netbuild::{DdiTable, DomainAnnotation, NetworkStats};

pub const TRANSCRIPTS_HEADER: &str = "transcript_id\tgene_id\tlength";
pub const NETWORK_HEADER: &str = "transcript_a\ttranscript_b";
pub const DOMAINS_HEADER: &str = "transcript_id\tdomain_id";
pub const DDI_HEADER: &str = "domain_a\tdomain_b";
pub const COMPAT_HEADER: &str = "gene_id\tread_id\tcompat_transcripts";
pub const QUANT_HEADER: &str = "transcript_id\tgene_id\tp\trho\tpi";
pub const TRUTH_HEADER: &str = "transcript_id\tgene_id\tgene_expression\tp_initial\tp\tpi\texpected_pi";

pub fn read_file(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Formats with ten significant digits, switching to exponent notation for
/// very small or very large magnitudes.
pub fn format_sig10(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let sci = format!("{x:.9e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent notation");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..10).contains(&exp) {
        let decimals = (9 - exp) as usize;
        trim_zeros(format!("{x:.decimals$}"))
    } else {
        let m = trim_zeros(mantissa.to_string());
        format!("{m}e{}{:02}", if exp < 0 { '-' } else { '+' }, exp.abs())
    }
}

fn trim_zeros(s: String) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

/// Iterates over data lines after checking the header. Yields
/// `(line number, fields)`; blank lines are skipped.
fn data_lines<'a>(
    text: &'a str,
    file: &'a str,
    header: &str,
) -> Result<impl Iterator<Item = (usize, Vec<&'a str>)> + 'a> {
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h.trim_end_matches('\r') == header || h.starts_with(&format!("{header}\t")) => {}
        Some(h) => {
            return Err(Error::parse(
                file,
                1,
                format!("expected header `{header}`, found `{h}`"),
            ))
        }
        None => return Err(Error::parse(file, 1, "missing header")),
    }
    Ok(lines
        .enumerate()
        .map(|(i, l)| (i + 2, l.trim_end_matches('\r')))
        .filter(|(_, l)| !l.is_empty())
        .map(|(i, l)| (i, l.split('\t').collect())))
}

fn expect_fields(file: &str, line: usize, fields: &[&str], min: usize, max: usize) -> Result<()> {
    if fields.len() < min || fields.len() > max {
        let want = if min == max {
            format!("{min}")
        } else {
            format!("{min} to {max}")
        };
        return Err(Error::parse(
            file,
            line,
            format!("expected {want} fields, found {}", fields.len()),
        ));
    }
    if let Some(empty) = fields.iter().position(|f| f.is_empty()) {
        return Err(Error::parse(file, line, format!("field {} is empty", empty + 1)));
    }
    Ok(())
}

fn parse_f64(file: &str, line: usize, what: &str, s: &str) -> Result<f64> {
    s.parse::<f64>()
        .ok()
        .filter(|x| x.is_finite())
        .ok_or_else(|| Error::parse(file, line, format!("{what} `{s}` is not a finite number")))
}

// ---- transcripts ----

/// Genes appear in order of first mention, transcripts in file order.
pub fn parse_transcripts(text: &str, file: &str) -> Result<TranscriptCatalog> {
    let mut genes: Vec<Gene> = Vec::new();
    let mut gene_pos: HashMap<&str, usize> = HashMap::new();
    let mut seen: HashMap<&str, usize> = HashMap::new();
    for (line, f) in data_lines(text, file, TRANSCRIPTS_HEADER)? {
        expect_fields(file, line, &f, 3, 3)?;
        let length: u32 = f[2]
            .parse()
            .ok()
            .filter(|&l| l > 0)
            .ok_or_else(|| Error::parse(file, line, format!("length `{}` is not a positive integer", f[2])))?;
        if let Some(prev) = seen.insert(f[0], line) {
            return Err(Error::parse(
                file,
                line,
                format!("duplicate transcript id {} (first on line {prev})", f[0]),
            ));
        }
        let g = *gene_pos.entry(f[1]).or_insert_with(|| {
            genes.push(Gene {
                id: f[1].to_string(),
                transcripts: Vec::new(),
            });
            genes.len() - 1
        });
        genes[g].transcripts.push(Transcript {
            id: f[0].to_string(),
            length,
        });
    }
    TranscriptCatalog::new(genes)
}

pub fn format_transcripts(catalog: &TranscriptCatalog) -> String {
    let mut out = format!("{TRANSCRIPTS_HEADER}\n");
    for gene in catalog.genes() {
        for t in &gene.transcripts {
            let _ = writeln!(out, "{}\t{}\t{}", t.id, gene.id, t.length);
        }
    }
    out
}

// ---- network ----

fn lookup_transcript(catalog: &TranscriptCatalog, file: &str, line: usize, id: &str) -> Result<usize> {
    catalog
        .transcript_index(id)
        .ok_or_else(|| Error::parse(file, line, format!("unknown transcript {id}")))
}

pub fn parse_network(text: &str, file: &str, catalog: &TranscriptCatalog) -> Result<TranscriptNetwork> {
    let mut edges = BTreeSet::new();
    for (line, f) in data_lines(text, file, NETWORK_HEADER)? {
        expect_fields(file, line, &f, 2, 2)?;
        let a = lookup_transcript(catalog, file, line, f[0])?;
        let b = lookup_transcript(catalog, file, line, f[1])?;
        if a == b {
            return Err(Error::parse(file, line, "self-loop"));
        }
        if catalog.gene_of(a) == catalog.gene_of(b) {
            return Err(Error::parse(file, line, "edge joins two transcripts of the same gene"));
        }
        if !edges.insert((a.min(b), a.max(b))) {
            return Err(Error::parse(file, line, "duplicate edge"));
        }
    }
    TranscriptNetwork::for_catalog(catalog, edges)
}

pub fn format_network(network: &TranscriptNetwork, catalog: &TranscriptCatalog) -> String {
    let mut rows: Vec<(&str, &str)> = network
        .edges()
        .into_iter()
        .map(|(a, b)| {
            let (x, y) = (catalog.transcript_id(a), catalog.transcript_id(b));
            if x < y {
                (x, y)
            } else {
                (y, x)
            }
        })
        .collect();
    rows.sort_unstable();
    let mut out = format!("{NETWORK_HEADER}\n");
    for (a, b) in rows {
        let _ = writeln!(out, "{a}\t{b}");
    }
    out
}

// ---- domains and domain interactions ----

pub fn parse_domains(text: &str, file: &str) -> Result<DomainAnnotation> {
    let mut rows = BTreeSet::new();
    for (line, f) in data_lines(text, file, DOMAINS_HEADER)? {
        expect_fields(file, line, &f, 2, 2)?;
        if !rows.insert((f[0].to_string(), f[1].to_string())) {
            return Err(Error::parse(file, line, "duplicate annotation"));
        }
    }
    Ok(DomainAnnotation::new(rows))
}

pub fn format_domains(annot: &DomainAnnotation) -> String {
    let mut out = format!("{DOMAINS_HEADER}\n");
    for (t, d) in annot.rows() {
        let _ = writeln!(out, "{t}\t{d}");
    }
    out
}

/// An optional third column carries a confidence tier.
pub fn parse_ddi(text: &str, file: &str) -> Result<DdiTable> {
    let mut rows = Vec::new();
    let mut seen = BTreeSet::new();
    for (line, f) in data_lines(text, file, DDI_HEADER)? {
        expect_fields(file, line, &f, 2, 3)?;
        let key = if f[0] <= f[1] { (f[0], f[1]) } else { (f[1], f[0]) };
        if !seen.insert(key) {
            return Err(Error::parse(file, line, "duplicate domain pair"));
        }
        rows.push((
            f[0].to_string(),
            f[1].to_string(),
            f.get(2).filter(|&&t| t != "-").map(|s| s.to_string()),
        ));
    }
    Ok(DdiTable::with_tiers(rows))
}

pub fn format_ddi(ddi: &DdiTable) -> String {
    let tiers = ddi.pairs().any(|(_, _, t)| t.is_some());
    let mut out = if tiers {
        format!("{DDI_HEADER}\ttier\n")
    } else {
        format!("{DDI_HEADER}\n")
    };
    for (a, b, t) in ddi.pairs() {
        match t {
            Some(t) => {
                let _ = writeln!(out, "{a}\t{b}\t{t}");
            }
            None if tiers => {
                let _ = writeln!(out, "{a}\t{b}\t-");
            }
            None => {
                let _ = writeln!(out, "{a}\t{b}");
            }
        }
    }
    out
}

// ---- read compatibility ----

/// q is derived from transcript lengths and `read_length` unless a fourth
/// column lists one value per compatible transcript.
pub fn parse_compat(text: &str, file: &str, catalog: &TranscriptCatalog, read_length: u32) -> Result<CompatibilitySet> {
    let mut reads: Vec<Vec<ReadCompat>> = vec![Vec::new(); catalog.n_genes()];
    let mut explicit = false;
    let mut read_ids: HashMap<&str, usize> = HashMap::new();
    let mut q_cache: Vec<Option<f64>> = vec![None; catalog.n_transcripts()];
    for (line, f) in data_lines(text, file, COMPAT_HEADER)? {
        expect_fields(file, line, &f, 3, 4)?;
        let g = catalog
            .gene_index(f[0])
            .ok_or_else(|| Error::parse(file, line, format!("unknown gene {}", f[0])))?;
        if let Some(prev) = read_ids.insert(f[1], line) {
            return Err(Error::parse(
                file,
                line,
                format!("duplicate read id {} (first on line {prev})", f[1]),
            ));
        }
        let start = catalog.gene_range(g).start;
        let explicit_q: Option<Vec<&str>> = f.get(3).map(|s| s.split(',').collect());
        let ids: Vec<&str> = f[2].split(',').collect();
        if let Some(qs) = &explicit_q {
            if qs.len() != ids.len() {
                return Err(Error::parse(
                    file,
                    line,
                    "q column does not match the compatible transcripts",
                ));
            }
            explicit = true;
        }
        let mut compat = Vec::with_capacity(ids.len());
        for (i, id) in ids.iter().enumerate() {
            let t = lookup_transcript(catalog, file, line, id)?;
            if catalog.gene_of(t) != g {
                return Err(Error::parse(
                    file,
                    line,
                    format!("transcript {id} does not belong to gene {}", f[0]),
                ));
            }
            let q = match &explicit_q {
                Some(qs) => {
                    let q = parse_f64(file, line, "q", qs[i])?;
                    if !(q > 0.0 && q <= 1.0) {
                        return Err(Error::parse(file, line, format!("q {q} outside (0, 1]")));
                    }
                    q
                }
                None => match q_cache[t] {
                    Some(q) => q,
                    None => {
                        let q = sampling_probability(catalog.lengths()[t], read_length).map_err(|_| {
                            Error::parse(
                                file,
                                line,
                                format!("transcript {id} is not longer than the read length {read_length}"),
                            )
                        })?;
                        q_cache[t] = Some(q);
                        q
                    }
                },
            };
            compat.push((t - start, q));
        }
        compat.sort_by_key(|&(k, _)| k);
        if compat.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(Error::parse(file, line, "a transcript is listed twice"));
        }
        reads[g].push(ReadCompat {
            read_id: f[1].to_string(),
            compat,
        });
    }
    CompatibilitySet::new(catalog, read_length, reads, explicit)
}

/// Writes the q column only when the set carries explicit values.
pub fn format_compat(compat: &CompatibilitySet, catalog: &TranscriptCatalog) -> String {
    let mut out = format!("{COMPAT_HEADER}\n");
    for g in 0..catalog.n_genes() {
        let gene = &catalog.genes()[g];
        for read in compat.gene_reads(g) {
            out.push_str(&gene.id);
            out.push('\t');
            out.push_str(&read.read_id);
            out.push('\t');
            for (i, &(k, _)) in read.compat.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                out.push_str(&gene.transcripts[k].id);
            }
            if compat.explicit_q() {
                out.push('\t');
                for (i, &(_, q)) in read.compat.iter().enumerate() {
                    if i > 0 {
                        out.push(',');
                    }
                    let _ = write!(out, "{q}");
                }
            }
            out.push('\n');
        }
    }
    out
}

// ---- quantification results ----

#[derive(Debug, Clone, PartialEq)]
pub struct QuantRow {
    pub transcript_id: String,
    pub gene_id: String,
    pub p: f64,
    pub rho: f64,
    pub pi: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct QuantTable {
    pub rows: Vec<QuantRow>,
}

impl QuantTable {
    pub fn from_state(catalog: &TranscriptCatalog, state: &QuantState) -> Self {
        let rows = (0..catalog.n_transcripts())
            .map(|t| QuantRow {
                transcript_id: catalog.transcript_id(t).to_string(),
                gene_id: catalog.genes()[catalog.gene_of(t)].id.clone(),
                p: state.p[t],
                rho: state.rho[t],
                pi: state.pi[t],
            })
            .collect();
        Self { rows }
    }

    /// Expression `pi` aligned to the catalog.
    pub fn expression(&self, catalog: &TranscriptCatalog, file: &str) -> Result<Vec<f64>> {
        align_to_catalog(
            catalog,
            file,
            self.rows.iter().map(|r| (r.transcript_id.as_str(), r.pi)),
        )
    }
}

fn align_to_catalog<'a>(
    catalog: &TranscriptCatalog,
    file: &str,
    values: impl Iterator<Item = (&'a str, f64)>,
) -> Result<Vec<f64>> {
    let mut out = vec![None; catalog.n_transcripts()];
    for (id, v) in values {
        let t = catalog
            .transcript_index(id)
            .ok_or_else(|| Error::invalid(format!("{file}: transcript {id} is not in the catalog")))?;
        out[t] = Some(v);
    }
    out.into_iter()
        .enumerate()
        .map(|(t, v)| {
            v.ok_or_else(|| Error::invalid(format!("{file}: no value for transcript {}", catalog.transcript_id(t))))
        })
        .collect()
}

pub fn parse_quant(text: &str, file: &str) -> Result<QuantTable> {
    let mut rows = Vec::new();
    let mut seen: HashMap<&str, usize> = HashMap::new();
    for (line, f) in data_lines(text, file, QUANT_HEADER)? {
        expect_fields(file, line, &f, 5, 5)?;
        if let Some(prev) = seen.insert(f[0], line) {
            return Err(Error::parse(
                file,
                line,
                format!("duplicate transcript id {} (first on line {prev})", f[0]),
            ));
        }
        rows.push(QuantRow {
            transcript_id: f[0].to_string(),
            gene_id: f[1].to_string(),
            p: parse_f64(file, line, "p", f[2])?,
            rho: parse_f64(file, line, "rho", f[3])?,
            pi: parse_f64(file, line, "pi", f[4])?,
        });
    }
    Ok(QuantTable { rows })
}

pub fn format_quant(table: &QuantTable) -> String {
    let mut out = format!("{QUANT_HEADER}\n");
    for r in &table.rows {
        let _ = writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}",
            r.transcript_id,
            r.gene_id,
            format_sig10(r.p),
            format_sig10(r.rho),
            format_sig10(r.pi)
        );
    }
    out
}

// ---- simulation truth ----

#[derive(Debug, Clone, PartialEq)]
pub struct TruthRow {
    pub transcript_id: String,
    pub gene_id: String,
    pub gene_expression: f64,
    pub p_initial: f64,
    pub p: f64,
    pub pi: f64,
    /// Expression in reads per base for the sampled read count.
    pub expected_pi: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TruthTable {
    pub rows: Vec<TruthRow>,
}

impl TruthTable {
    pub fn from_truth(catalog: &TranscriptCatalog, truth: &SimTruth, expected_pi: &[f64]) -> Self {
        let rows = (0..catalog.n_transcripts())
            .map(|t| {
                let g = catalog.gene_of(t);
                TruthRow {
                    transcript_id: catalog.transcript_id(t).to_string(),
                    gene_id: catalog.genes()[g].id.clone(),
                    gene_expression: truth.gene_expression[g],
                    p_initial: truth.p_initial[t],
                    p: truth.p[t],
                    pi: truth.pi[t],
                    expected_pi: expected_pi[t],
                }
            })
            .collect();
        Self { rows }
    }

    pub fn expected_expression(&self, catalog: &TranscriptCatalog, file: &str) -> Result<Vec<f64>> {
        align_to_catalog(
            catalog,
            file,
            self.rows.iter().map(|r| (r.transcript_id.as_str(), r.expected_pi)),
        )
    }
}

pub fn parse_truth(text: &str, file: &str) -> Result<TruthTable> {
    let mut rows = Vec::new();
    let mut seen: HashMap<&str, usize> = HashMap::new();
    for (line, f) in data_lines(text, file, TRUTH_HEADER)? {
        expect_fields(file, line, &f, 7, 7)?;
        if let Some(prev) = seen.insert(f[0], line) {
            return Err(Error::parse(
                file,
                line,
                format!("duplicate transcript id {} (first on line {prev})", f[0]),
            ));
        }
        rows.push(TruthRow {
            transcript_id: f[0].to_string(),
            gene_id: f[1].to_string(),
            gene_expression: parse_f64(file, line, "gene_expression", f[2])?,
            p_initial: parse_f64(file, line, "p_initial", f[3])?,
            p: parse_f64(file, line, "p", f[4])?,
            pi: parse_f64(file, line, "pi", f[5])?,
            expected_pi: parse_f64(file, line, "expected_pi", f[6])?,
        });
    }
    Ok(TruthTable { rows })
}

/// Values are written in shortest round-trip form.
pub fn format_truth(table: &TruthTable) -> String {
    let mut out = format!("{TRUTH_HEADER}\n");
    for r in &table.rows {
        let _ = writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}\t{}\t{}",
            r.transcript_id, r.gene_id, r.gene_expression, r.p_initial, r.p, r.pi, r.expected_pi
        );
    }
    out
}

// ---- expression matrices ----

/// Header `transcript_id` followed by one column per sample; every catalog
/// transcript must have exactly one row.
pub fn parse_expression_matrix(text: &str, file: &str, catalog: &TranscriptCatalog) -> Result<ExpressionMatrix> {
    let header = text
        .lines()
        .next()
        .ok_or_else(|| Error::parse(file, 1, "missing header"))?;
    let cols: Vec<&str> = header.trim_end_matches('\r').split('\t').collect();
    if cols[0] != "transcript_id" {
        return Err(Error::parse(file, 1, "first column must be transcript_id"));
    }
    let samples: Vec<String> = cols[1..].iter().map(|s| s.to_string()).collect();
    let mut rows: Vec<Option<Vec<f64>>> = vec![None; catalog.n_transcripts()];
    for (line, f) in data_lines(text, file, "transcript_id")? {
        expect_fields(file, line, &f, cols.len(), cols.len())?;
        let t = lookup_transcript(catalog, file, line, f[0])?;
        if rows[t].is_some() {
            return Err(Error::parse(file, line, format!("duplicate transcript id {}", f[0])));
        }
        rows[t] = Some(
            f[1..]
                .iter()
                .zip(&samples)
                .map(|(v, s)| parse_f64(file, line, s, v))
                .collect::<Result<_>>()?,
        );
    }
    let rows = rows
        .into_iter()
        .enumerate()
        .map(|(t, r)| {
            r.ok_or_else(|| Error::invalid(format!("{file}: no row for transcript {}", catalog.transcript_id(t))))
        })
        .collect::<Result<_>>()?;
    Ok(ExpressionMatrix { samples, rows })
}

pub fn format_expression_matrix(matrix: &ExpressionMatrix, catalog: &TranscriptCatalog) -> String {
    let mut out = String::from("transcript_id");
    for s in &matrix.samples {
        out.push('\t');
        out.push_str(s);
    }
    out.push('\n');
    for (t, row) in matrix.rows.iter().enumerate() {
        out.push_str(catalog.transcript_id(t));
        for v in row {
            let _ = write!(out, "\t{v}");
        }
        out.push('\n');
    }
    out
}

// ---- reports ----

pub fn format_bins(bins: &CoexpressionBins) -> String {
    let mut out = String::from("bin\tpairs\tadjacent\tbaseline\n");
    for (i, c) in bins.counts.iter().enumerate() {
        let _ = writeln!(
            out,
            "{}\t{}\t{}\t{}",
            i + 1,
            bins.bin_size,
            c,
            format_sig10(bins.baseline)
        );
    }
    out
}

/// Two-column `key\tvalue` report.
pub fn format_report(entries: &[(&str, String)]) -> String {
    let mut out = String::from("key\tvalue\n");
    for (k, v) in entries {
        let _ = writeln!(out, "{k}\t{v}");
    }
    out
}

pub fn network_stats_report(stats: &NetworkStats) -> String {
    format_report(&[
        ("node_count", stats.node_count.to_string()),
        ("edge_count", stats.edge_count.to_string()),
        (
            "density",
            if stats.density_undefined {
                "NA".into()
            } else {
                format_sig10(stats.density)
            },
        ),
        ("avg_degree", format_sig10(stats.avg_degree)),
        (
            "avg_clustering_coefficient",
            format_sig10(stats.avg_clustering_coefficient),
        ),
        ("diameter", stats.diameter.to_string()),
        ("largest_component_size", stats.largest_component_size.to_string()),
    ])
}
