//! Transcript network construction from protein domain annotations and
//! domain-domain interactions, plus network statistics and the perturbed
//! networks used in robustness experiments.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::model::{TranscriptCatalog, TranscriptNetwork};

/// Transcript to domain assignments, deduplicated and sorted.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DomainAnnotation {
    rows: BTreeSet<(String, String)>,
}

impl DomainAnnotation {
    pub fn new(rows: impl IntoIterator<Item = (String, String)>) -> Self {
        Self {
            rows: rows.into_iter().collect(),
        }
    }

    /// `(transcript_id, domain_id)` pairs in sorted order.
    pub fn rows(&self) -> impl Iterator<Item = (&str, &str)> {
        self.rows.iter().map(|(t, d)| (t.as_str(), d.as_str()))
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }
}

/// Symmetric set of interacting domain pairs. An optional confidence tier
/// label may accompany each pair; it is informational only.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DdiTable {
    /// Stored once per unordered pair with `a <= b`.
    pairs: BTreeMap<(String, String), Option<String>>,
}

impl DdiTable {
    pub fn new(pairs: impl IntoIterator<Item = (String, String)>) -> Self {
        Self::with_tiers(pairs.into_iter().map(|(a, b)| (a, b, None)))
    }

    pub fn with_tiers(pairs: impl IntoIterator<Item = (String, String, Option<String>)>) -> Self {
        let mut out = BTreeMap::new();
        for (a, b, tier) in pairs {
            let key = if a <= b { (a, b) } else { (b, a) };
            let slot = out.entry(key).or_insert(None);
            if slot.is_none() {
                *slot = tier;
            }
        }
        Self { pairs: out }
    }

    pub fn interacts(&self, a: &str, b: &str) -> bool {
        let key = if a <= b { (a, b) } else { (b, a) };
        self.pairs.contains_key(&(key.0.to_string(), key.1.to_string()))
    }

    /// Unordered pairs with `a <= b`, sorted, with their tiers.
    pub fn pairs(&self) -> impl Iterator<Item = (&str, &str, Option<&str>)> {
        self.pairs
            .iter()
            .map(|((a, b), t)| (a.as_str(), b.as_str(), t.as_deref()))
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }
}

fn domains_by_transcript(catalog: &TranscriptCatalog, annot: &DomainAnnotation) -> Result<HashMap<String, Vec<usize>>> {
    let mut unknown = BTreeSet::new();
    let mut by_domain: HashMap<String, Vec<usize>> = HashMap::new();
    for (t, d) in annot.rows() {
        match catalog.transcript_index(t) {
            Some(idx) => by_domain.entry(d.to_string()).or_default().push(idx),
            None => {
                unknown.insert(t.to_string());
            }
        }
    }
    if !unknown.is_empty() {
        let list: Vec<String> = unknown.into_iter().collect();
        return Err(Error::invalid(format!(
            "domain annotation references unknown transcripts: {}",
            list.join(", ")
        )));
    }
    Ok(by_domain)
}

/// Connects two transcripts of different genes whenever some domain of one
/// interacts with some domain of the other.
pub fn build_network(
    catalog: &TranscriptCatalog,
    annot: &DomainAnnotation,
    ddi: &DdiTable,
) -> Result<TranscriptNetwork> {
    let by_domain = domains_by_transcript(catalog, annot)?;
    let genes = catalog.gene_assignment();
    let mut edges = BTreeSet::new();
    for (a, b, _) in ddi.pairs() {
        let (Some(ta), Some(tb)) = (by_domain.get(a), by_domain.get(b)) else {
            continue;
        };
        for &x in ta {
            for &y in tb {
                if genes[x] != genes[y] {
                    edges.insert((x.min(y), x.max(y)));
                }
            }
        }
    }
    TranscriptNetwork::for_catalog(catalog, edges)
}

/// Tier labels of the interactions supporting each edge of
/// [`build_network`]'s output. Pairs without a tier are omitted.
pub fn edge_tiers(
    catalog: &TranscriptCatalog,
    annot: &DomainAnnotation,
    ddi: &DdiTable,
) -> Result<BTreeMap<(usize, usize), BTreeSet<String>>> {
    let by_domain = domains_by_transcript(catalog, annot)?;
    let genes = catalog.gene_assignment();
    let mut out: BTreeMap<(usize, usize), BTreeSet<String>> = BTreeMap::new();
    for (a, b, tier) in ddi.pairs() {
        let (Some(tier), Some(ta), Some(tb)) = (tier, by_domain.get(a), by_domain.get(b)) else {
            continue;
        };
        for &x in ta {
            for &y in tb {
                if genes[x] != genes[y] {
                    out.entry((x.min(y), x.max(y))).or_default().insert(tier.to_string());
                }
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct NetworkStats {
    pub node_count: usize,
    pub edge_count: usize,
    /// `|E| / (n(n-1)/2)`; 0 when `n < 2`.
    pub density: f64,
    /// Set when `n < 2` and the density is undefined.
    pub density_undefined: bool,
    pub avg_degree: f64,
    /// Mean of per-node clustering coefficients; nodes of degree below 2
    /// contribute 0.
    pub avg_clustering_coefficient: f64,
    /// Longest finite shortest path within the largest connected component.
    pub diameter: usize,
    pub largest_component_size: usize,
}

pub fn network_stats(net: &TranscriptNetwork) -> NetworkStats {
    let n = net.n_nodes();
    let m = net.n_edges();
    let (density, density_undefined) = if n < 2 {
        (0.0, true)
    } else {
        (m as f64 / (n as f64 * (n as f64 - 1.0) / 2.0), false)
    };
    let avg_degree = if n == 0 { 0.0 } else { 2.0 * m as f64 / n as f64 };
    let component = largest_component(net);
    NetworkStats {
        node_count: n,
        edge_count: m,
        density,
        density_undefined,
        avg_degree,
        avg_clustering_coefficient: average_clustering(net),
        diameter: component_diameter(net, &component),
        largest_component_size: component.len(),
    }
}

fn average_clustering(net: &TranscriptNetwork) -> f64 {
    let n = net.n_nodes();
    if n == 0 {
        return 0.0;
    }
    let mut mark = vec![false; n];
    let mut total = 0.0;
    for v in 0..n {
        let nb = net.neighbors(v);
        let d = nb.len();
        if d < 2 {
            continue;
        }
        for &u in nb {
            mark[u] = true;
        }
        // each triangle through v is seen from both of its other corners
        let mut links = 0usize;
        for &u in nb {
            links += net.neighbors(u).iter().filter(|&&w| mark[w]).count();
        }
        for &u in nb {
            mark[u] = false;
        }
        total += links as f64 / (d * (d - 1)) as f64;
    }
    total / n as f64
}

fn largest_component(net: &TranscriptNetwork) -> Vec<usize> {
    let n = net.n_nodes();
    let mut seen = vec![false; n];
    let mut best: Vec<usize> = Vec::new();
    for s in 0..n {
        if seen[s] {
            continue;
        }
        let mut comp = vec![s];
        seen[s] = true;
        let mut head = 0;
        while head < comp.len() {
            let v = comp[head];
            head += 1;
            for &u in net.neighbors(v) {
                if !seen[u] {
                    seen[u] = true;
                    comp.push(u);
                }
            }
        }
        if comp.len() > best.len() {
            best = comp;
        }
    }
    best.sort_unstable();
    best
}

/// Eccentricity maximum over a connected node set, running breadth-first
/// search from 64 sources at once with one bit per source.
fn component_diameter(net: &TranscriptNetwork, component: &[usize]) -> usize {
    if component.len() < 2 {
        return 0;
    }
    let n = net.n_nodes();
    let mut diameter = 0;
    let mut visited = vec![0u64; n];
    let mut frontier = vec![0u64; n];
    let mut next = vec![0u64; n];
    for chunk in component.chunks(64) {
        visited.iter_mut().for_each(|x| *x = 0);
        frontier.iter_mut().for_each(|x| *x = 0);
        for (bit, &s) in chunk.iter().enumerate() {
            visited[s] |= 1 << bit;
            frontier[s] |= 1 << bit;
        }
        let mut depth = 0;
        loop {
            let mut any = false;
            for &v in component {
                let mut acc = 0u64;
                for &u in net.neighbors(v) {
                    acc |= frontier[u];
                }
                let fresh = acc & !visited[v];
                next[v] = fresh;
                if fresh != 0 {
                    any = true;
                }
            }
            if !any {
                break;
            }
            depth += 1;
            for &v in component {
                visited[v] |= next[v];
                frontier[v] = next[v];
            }
        }
        diameter = diameter.max(depth);
    }
    diameter
}

/// Shortest-path distances from `source`; `usize::MAX` when unreachable.
pub fn bfs_distances(net: &TranscriptNetwork, source: usize) -> Vec<usize> {
    let mut dist = vec![usize::MAX; net.n_nodes()];
    dist[source] = 0;
    let mut queue = VecDeque::from([source]);
    while let Some(v) = queue.pop_front() {
        for &u in net.neighbors(v) {
            if dist[u] == usize::MAX {
                dist[u] = dist[v] + 1;
                queue.push_back(u);
            }
        }
    }
    dist
}

fn conflicts_at(v: usize, net: &TranscriptNetwork, perm: &[usize], groups: &[usize], skip: Option<usize>) -> usize {
    net.neighbors(v)
        .iter()
        .filter(|&&u| Some(u) != skip && groups[perm[u]] == groups[perm[v]])
        .count()
}

/// Randomizes the network by permuting transcript labels over all nodes.
/// Edges that the permutation places inside one gene are removed by further
/// label swaps. The edge count and degree multiset are preserved.
pub fn randomize_network(net: &TranscriptNetwork, seed: u64) -> Result<TranscriptNetwork> {
    let n = net.n_nodes();
    let groups = net.groups();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(&mut rng);

    let edges = net.edges();
    let count = |perm: &[usize]| {
        edges
            .iter()
            .filter(|&&(a, b)| groups[perm[a]] == groups[perm[b]])
            .count()
    };
    let mut conflicts = count(&perm);
    let max_tries = 1000 * (edges.len() + n) + 10_000;
    let mut tries = 0;
    while conflicts > 0 {
        if tries >= max_tries {
            return Err(Error::NoConvergence {
                what: format!("{conflicts} same-gene edges remain after label permutation"),
                iterations: tries,
            });
        }
        tries += 1;
        let &(a, b) = edges
            .iter()
            .find(|&&(a, b)| groups[perm[a]] == groups[perm[b]])
            .expect("conflict count is positive");
        let v = if rng.random::<bool>() { a } else { b };
        let w = rng.random_range(0..n);
        if w == v {
            continue;
        }
        let before = conflicts_at(v, net, &perm, groups, None) + conflicts_at(w, net, &perm, groups, Some(v));
        perm.swap(v, w);
        let after = conflicts_at(v, net, &perm, groups, None) + conflicts_at(w, net, &perm, groups, Some(v));
        if after <= before {
            conflicts = conflicts + after - before;
        } else {
            perm.swap(v, w);
        }
    }
    debug_assert_eq!(conflicts, count(&perm));
    TranscriptNetwork::new(groups.to_vec(), edges.into_iter().map(|(a, b)| (perm[a], perm[b])))
}

/// Removes `⌊fraction · |E|⌋` edges chosen uniformly at random.
pub fn delete_edges(net: &TranscriptNetwork, fraction: f64, seed: u64) -> Result<TranscriptNetwork> {
    if !(0.0..=1.0).contains(&fraction) {
        return Err(Error::invalid(format!("deletion fraction {fraction} outside [0, 1]")));
    }
    let mut edges = net.edges();
    let remove = (fraction * edges.len() as f64).floor() as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    edges.shuffle(&mut rng);
    TranscriptNetwork::new(net.groups().to_vec(), edges.into_iter().skip(remove))
}

/// Connects every pair at distance at most two, excluding same-gene pairs.
pub fn two_step_closure(net: &TranscriptNetwork) -> TranscriptNetwork {
    let groups = net.groups();
    let mut edges = Vec::new();
    let mut mark = vec![usize::MAX; net.n_nodes()];
    for a in 0..net.n_nodes() {
        for &b in net.neighbors(a) {
            if b > a {
                edges.push((a, b));
            }
            for &c in net.neighbors(b) {
                if c > a && mark[c] != a && groups[c] != groups[a] && !net.has_edge(a, c) {
                    mark[c] = a;
                    edges.push((a, c));
                }
            }
        }
    }
    TranscriptNetwork::new(groups.to_vec(), edges).expect("closure preserves the gene constraint")
}

/// Degree sequence summary, for reporting alongside randomized networks.
#[derive(Debug, Clone, PartialEq)]
pub struct DegreeSummary {
    pub min: usize,
    pub max: usize,
    pub mean: f64,
    pub variance: f64,
}

pub fn degree_summary(net: &TranscriptNetwork) -> DegreeSummary {
    let degrees: Vec<usize> = (0..net.n_nodes()).map(|v| net.degree(v)).collect();
    if degrees.is_empty() {
        return DegreeSummary {
            min: 0,
            max: 0,
            mean: 0.0,
            variance: 0.0,
        };
    }
    let n = degrees.len() as f64;
    let mean = degrees.iter().sum::<usize>() as f64 / n;
    let variance = degrees.iter().map(|&d| (d as f64 - mean).powi(2)).sum::<f64>() / n;
    DegreeSummary {
        min: *degrees.iter().min().unwrap(),
        max: *degrees.iter().max().unwrap(),
        mean,
        variance,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Gene, Transcript};

    fn catalog(layout: &[(&str, &[&str])]) -> TranscriptCatalog {
        TranscriptCatalog::new(
            layout
                .iter()
                .map(|(g, ts)| Gene {
                    id: g.to_string(),
                    transcripts: ts
                        .iter()
                        .map(|t| Transcript {
                            id: t.to_string(),
                            length: 1000,
                        })
                        .collect(),
                })
                .collect(),
        )
        .unwrap()
    }

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

    fn pairs(rows: &[(&str, &str)]) -> Vec<(String, String)> {
        rows.iter().map(|(a, b)| (a.to_string(), b.to_string())).collect()
    }

    #[test]
    fn no_interacting_domains_no_edges() {
        let cat = catalog(&[("A", &["a"]), ("B", &["b"])]);
        let annot = DomainAnnotation::new(pairs(&[("a", "d1"), ("b", "d2")]));
        let ddi = DdiTable::new(pairs(&[("d1", "d3")]));
        assert_eq!(build_network(&cat, &annot, &ddi).unwrap().n_edges(), 0);
    }

    #[test]
    fn cd79_miniature() {
        let cat = catalog(&[
            ("CD79A", &["NM_001783", "NM_021601"]),
            ("CD79B", &["NM_001039933", "NM_000626", "NM_021602"]),
            ("LCK", &["NM_005356"]),
            ("SYK", &["NM_003177"]),
        ]);
        let annot = DomainAnnotation::new(pairs(&[
            ("NM_001783", "pfam07686"),
            ("NM_001783", "pfam02189"),
            ("NM_021601", "pfam02189"),
            ("NM_001039933", "pfam07686"),
            ("NM_000626", "pfam07686"),
            ("NM_005356", "pfam00017"),
            ("NM_003177", "pfam00017"),
        ]));
        let ddi = DdiTable::new(pairs(&[("pfam02189", "pfam00017"), ("pfam07686", "pfam07686")]));
        let net = build_network(&cat, &annot, &ddi).unwrap();
        let id = |s: &str| cat.transcript_index(s).unwrap();
        assert!(net.has_edge(id("NM_021601"), id("NM_005356")));
        assert!(net.has_edge(id("NM_021601"), id("NM_003177")));
        assert!(net.has_edge(id("NM_001783"), id("NM_000626")));
        assert!(!net.has_edge(id("NM_001039933"), id("NM_000626")));
        assert_eq!(net.degree(id("NM_021602")), 0);
    }

    #[test]
    fn unknown_annotated_transcript_is_listed() {
        let cat = catalog(&[("A", &["a"])]);
        let annot = DomainAnnotation::new(pairs(&[("zz", "d"), ("yy", "d")]));
        let err = build_network(&cat, &annot, &DdiTable::default()).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("yy") && msg.contains("zz"), "{msg}");
    }

    #[test]
    fn build_matches_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let genes: Vec<(String, Vec<String>)> = (0..8)
                .map(|g| {
                    let k = rng.random_range(1..4);
                    (format!("G{g}"), (0..k).map(|i| format!("G{g}t{i}")).collect())
                })
                .collect();
            let cat = TranscriptCatalog::new(
                genes
                    .iter()
                    .map(|(g, ts)| Gene {
                        id: g.clone(),
                        transcripts: ts
                            .iter()
                            .map(|t| Transcript {
                                id: t.clone(),
                                length: 500,
                            })
                            .collect(),
                    })
                    .collect(),
            )
            .unwrap();
            let mut annot_rows = Vec::new();
            for t in 0..cat.n_transcripts() {
                for d in 0..6 {
                    if rng.random_bool(0.3) {
                        annot_rows.push((cat.transcript_id(t).to_string(), format!("d{d}")));
                    }
                }
            }
            let mut ddi_rows = Vec::new();
            for a in 0..6 {
                for b in a..6 {
                    if rng.random_bool(0.2) {
                        ddi_rows.push((format!("d{b}"), format!("d{a}")));
                    }
                }
            }
            let annot = DomainAnnotation::new(annot_rows.clone());
            let ddi = DdiTable::new(ddi_rows.clone());
            let net = build_network(&cat, &annot, &ddi).unwrap();
            let n = cat.n_transcripts();
            for x in 0..n {
                for y in 0..n {
                    let dx: Vec<&String> = annot_rows
                        .iter()
                        .filter(|r| r.0 == cat.transcript_id(x))
                        .map(|r| &r.1)
                        .collect();
                    let dy: Vec<&String> = annot_rows
                        .iter()
                        .filter(|r| r.0 == cat.transcript_id(y))
                        .map(|r| &r.1)
                        .collect();
                    let hit = dx.iter().any(|a| {
                        dy.iter().any(|b| {
                            ddi_rows
                                .iter()
                                .any(|(p, q)| (p == *a && q == *b) || (p == *b && q == *a))
                        })
                    });
                    let expected = x != y && cat.gene_of(x) != cat.gene_of(y) && hit;
                    assert_eq!(net.has_edge(x, y), expected, "pair {x} {y}");
                }
            }
        }
    }

    #[test]
    fn triangle_stats() {
        let cat = singletons(3);
        let net = TranscriptNetwork::for_catalog(&cat, [(0, 1), (1, 2), (0, 2)]).unwrap();
        let s = network_stats(&net);
        assert_eq!(s.density, 1.0);
        assert_eq!(s.avg_clustering_coefficient, 1.0);
        assert_eq!(s.diameter, 1);
        assert_eq!(s.avg_degree, 2.0);
    }

    #[test]
    fn tiny_network_density_flagged() {
        let cat = singletons(1);
        let s = network_stats(&TranscriptNetwork::empty(&cat));
        assert!(s.density_undefined);
        assert_eq!(s.density, 0.0);
    }

    #[test]
    fn diameter_uses_largest_component() {
        // path of 4 plus a separate edge
        let cat = singletons(6);
        let net = TranscriptNetwork::for_catalog(&cat, [(0, 1), (1, 2), (2, 3), (4, 5)]).unwrap();
        let s = network_stats(&net);
        assert_eq!(s.diameter, 3);
        assert_eq!(s.largest_component_size, 4);
    }

    #[test]
    fn diameter_matches_all_pairs_bfs() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let cat = singletons(150);
        let mut edges = Vec::new();
        for a in 0..150 {
            for b in a + 1..150 {
                if rng.random_bool(0.02) {
                    edges.push((a, b));
                }
            }
        }
        let net = TranscriptNetwork::for_catalog(&cat, edges).unwrap();
        let comp = largest_component(&net);
        let mut expected = 0;
        for &s in &comp {
            let d = bfs_distances(&net, s);
            expected = expected.max(comp.iter().map(|&v| d[v]).max().unwrap());
        }
        assert_eq!(network_stats(&net).diameter, expected);
    }

    #[test]
    fn randomize_is_deterministic_and_preserves_counts() {
        let cat = catalog(&[
            ("A", &["a1", "a2", "a3"]),
            ("B", &["b1", "b2"]),
            ("C", &["c1", "c2"]),
            ("D", &["d1"]),
        ]);
        let net = TranscriptNetwork::for_catalog(&cat, [(0, 3), (1, 5), (2, 7), (3, 5), (4, 6), (0, 6)]).unwrap();
        for seed in 0..50 {
            let r1 = randomize_network(&net, seed).unwrap();
            let r2 = randomize_network(&net, seed).unwrap();
            assert_eq!(r1, r2);
            assert_eq!(r1.n_edges(), net.n_edges());
            for (a, b) in r1.edges() {
                assert_ne!(cat.gene_of(a), cat.gene_of(b));
            }
            let mut d0: Vec<usize> = (0..8).map(|v| net.degree(v)).collect();
            let mut d1: Vec<usize> = (0..8).map(|v| r1.degree(v)).collect();
            d0.sort();
            d1.sort();
            assert_eq!(d0, d1);
        }
    }

    #[test]
    fn delete_edges_floor_rule() {
        let cat = singletons(40);
        let mut edges = Vec::new();
        for a in 0..40 {
            for b in a + 1..40 {
                if (a * 7 + b * 3) % 5 == 0 {
                    edges.push((a, b));
                }
            }
        }
        let net = TranscriptNetwork::for_catalog(&cat, edges).unwrap();
        let m = net.n_edges();
        assert_eq!(delete_edges(&net, 0.0, 1).unwrap(), net);
        assert_eq!(delete_edges(&net, 1.0, 1).unwrap().n_edges(), 0);
        let half = delete_edges(&net, 0.5, 9).unwrap();
        assert_eq!(half.n_edges(), m - m / 2);
        assert_eq!(half, delete_edges(&net, 0.5, 9).unwrap());
        for (a, b) in half.edges() {
            assert!(net.has_edge(a, b));
        }
        assert!(delete_edges(&net, 1.5, 1).is_err());
    }

    #[test]
    fn closure_of_path() {
        let cat = singletons(3);
        let net = TranscriptNetwork::for_catalog(&cat, [(0, 1), (1, 2)]).unwrap();
        let c = two_step_closure(&net);
        assert!(c.has_edge(0, 2));
        assert_eq!(c.n_edges(), 3);
        // endpoints in the same gene stay unconnected
        let cat2 = catalog(&[("A", &["a1", "a2"]), ("B", &["b"])]);
        let net2 = TranscriptNetwork::for_catalog(&cat2, [(0, 2), (1, 2)]).unwrap();
        assert_eq!(two_step_closure(&net2), net2);
    }

    #[test]
    fn closure_of_complete_bipartite_is_unchanged_across_sides() {
        // K_{2,2} between genes A and B: every cross pair already adjacent
        let cat = catalog(&[("A", &["a1", "a2"]), ("B", &["b1", "b2"])]);
        let net = TranscriptNetwork::for_catalog(&cat, [(0, 2), (0, 3), (1, 2), (1, 3)]).unwrap();
        assert_eq!(two_step_closure(&net), net);
    }

    #[test]
    fn closure_matches_depth_two_bfs() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let cat = TranscriptCatalog::new(
            (0..15)
                .map(|g| Gene {
                    id: format!("g{g}"),
                    transcripts: (0..2)
                        .map(|k| Transcript {
                            id: format!("g{g}t{k}"),
                            length: 300,
                        })
                        .collect(),
                })
                .collect(),
        )
        .unwrap();
        let mut edges = Vec::new();
        for a in 0..30 {
            for b in a + 1..30 {
                if cat.gene_of(a) != cat.gene_of(b) && rng.random_bool(0.08) {
                    edges.push((a, b));
                }
            }
        }
        let net = TranscriptNetwork::for_catalog(&cat, edges).unwrap();
        let c = two_step_closure(&net);
        for a in 0..30 {
            let d = bfs_distances(&net, a);
            for b in 0..30 {
                let expected = a != b && cat.gene_of(a) != cat.gene_of(b) && d[b] <= 2;
                assert_eq!(c.has_edge(a, b), expected);
            }
        }
        for (a, b) in net.edges() {
            assert!(c.has_edge(a, b));
        }
    }

    #[test]
    fn tiers_follow_edges() {
        let cat = catalog(&[("A", &["a"]), ("B", &["b"])]);
        let annot = DomainAnnotation::new(pairs(&[("a", "d1"), ("b", "d2")]));
        let ddi = DdiTable::with_tiers([("d2".to_string(), "d1".to_string(), Some("3did".to_string()))]);
        assert!(ddi.interacts("d1", "d2"));
        let tiers = edge_tiers(&cat, &annot, &ddi).unwrap();
        assert_eq!(tiers[&(0, 1)].iter().next().unwrap(), "3did");
    }
}
