//! Alignment filters. None of them adds a correspondence.

use std::cmp::{Ordering, Reverse};
use std::collections::{BinaryHeap, HashMap};

use crate::alignment::{Alignment, CellKey};
use crate::bridge::{
    apply_scores, build_pairs, PairScorer, ScoreError, ScoredAlignment, SerializationMode,
};
use crate::eval::{metrics, ConfusionCounts};
use crate::graph::{Iri, Ontology};
use crate::sampling::{Judgement, PartialReference};
use crate::text::ExtractorKind;

/// Rescores every correspondence with `scorer`, keeping the key set.
///
/// Correspondences without text on one side keep their confidence and are
/// listed in [`ScoredAlignment::unscored`].
pub fn transformers_filter(
    a: &Alignment,
    o1: &Ontology,
    o2: &Ontology,
    extractor: ExtractorKind,
    mode: SerializationMode,
    scorer: &dyn PairScorer,
) -> Result<ScoredAlignment, ScoreError> {
    let batch = build_pairs(a, o1, o2, extractor, mode);
    let scores = scorer.score(&batch.records)?;
    Ok(apply_scores(a, &batch.records, &scores))
}

/// `{c in a : conf(c) >= t}`
pub fn threshold_cut(a: &Alignment, t: f64) -> Alignment {
    a.filtered(|_, conf| conf >= t)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MetricKind {
    #[default]
    F1,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThresholdSearchResult {
    pub threshold: f64,
    pub achieved_metric: f64,
    pub metric_kind: MetricKind,
    /// Counts at the chosen threshold.
    pub counts: ConfusionCounts,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum FilterError {
    #[error("threshold search needs a non-empty reference")]
    EmptyReference,
}

/// The threshold maximizing F1 of `threshold_cut(a, t)` against `reference`.
///
/// Candidates are the confidences of `a` plus 0; ties go to the larger
/// threshold. With `complete == false` the reference is treated as a sample
/// and counted as in [`crate::eval::confusion_partial`].
pub fn find_best_threshold(
    a: &Alignment,
    reference: &Alignment,
    complete: bool,
) -> Result<ThresholdSearchResult, FilterError> {
    if reference.is_empty() {
        return Err(FilterError::EmptyReference);
    }
    let judge = PartialReference::new(reference);
    let mut cells: Vec<(f64, Judgement)> = a
        .entries()
        .map(|(k, conf)| {
            let j = match (complete, judge.judge(k)) {
                (_, Judgement::Correct) => Judgement::Correct,
                (true, _) => Judgement::Wrong,
                (false, j) => j,
            };
            (conf, j)
        })
        .collect();
    cells.sort_by(|x, y| y.0.total_cmp(&x.0));

    let mut best: Option<ThresholdSearchResult> = None;
    let mut consider = |threshold: f64, tp: usize, fp: usize| {
        let counts = ConfusionCounts::new(tp, fp, reference.len() - tp);
        let f1 = metrics(counts).f1;
        // descending sweep: only a strict gain moves to a smaller threshold
        if best.is_none_or(|b| f1 > b.achieved_metric) {
            best = Some(ThresholdSearchResult {
                threshold,
                achieved_metric: f1,
                metric_kind: MetricKind::F1,
                counts,
            });
        }
    };
    let (mut tp, mut fp) = (0, 0);
    let mut i = 0;
    while i < cells.len() {
        let t = cells[i].0;
        while i < cells.len() && cells[i].0 == t {
            match cells[i].1 {
                Judgement::Correct => tp += 1,
                Judgement::Wrong => fp += 1,
                Judgement::Undecidable => {}
            }
            i += 1;
        }
        consider(t, tp, fp);
    }
    if cells.last().is_none_or(|c| c.0 > 0.0) {
        consider(0.0, tp, fp);
    }
    Ok(best.expect("at least the zero threshold is considered"))
}

/// Maximum-weight one-to-one subset of `a`, weights being confidences.
///
/// Exact: successive shortest augmenting paths (Dijkstra with potentials) on
/// each connected component of the candidate graph. Zero-confidence cells
/// never improve the weight and are left out.
pub fn max_weight_bipartite(a: &Alignment) -> Alignment {
    let mut sources: HashMap<&Iri, usize> = HashMap::new();
    let mut targets: HashMap<&Iri, usize> = HashMap::new();
    let mut edges: Vec<(usize, usize, f64, &CellKey)> = Vec::new();
    for (k, conf) in a.entries() {
        if conf <= 0.0 {
            continue;
        }
        let n = sources.len();
        let s = *sources.entry(&k.source).or_insert(n);
        let n = targets.len();
        let t = *targets.entry(&k.target).or_insert(n);
        edges.push((s, t, conf, k));
    }
    let (n1, n2) = (sources.len(), targets.len());

    // group edges by connected component
    let mut uf = UnionFind::new(n1 + n2);
    for &(s, t, _, _) in &edges {
        uf.union(s, n1 + t);
    }
    let mut components: HashMap<usize, Vec<usize>> = HashMap::new();
    for (i, &(s, _, _, _)) in edges.iter().enumerate() {
        components.entry(uf.find(s)).or_default().push(i);
    }
    let mut groups: Vec<Vec<usize>> = components.into_values().collect();
    groups.sort_unstable();

    let mut out = Alignment::new();
    for group in groups {
        let mut left = HashMap::new();
        let mut right = HashMap::new();
        let local: Vec<(usize, usize, f64)> = group
            .iter()
            .map(|&i| {
                let (s, t, w, _) = edges[i];
                let n = left.len();
                let s = *left.entry(s).or_insert(n);
                let n = right.len();
                let t = *right.entry(t).or_insert(n);
                (s, t, w)
            })
            .collect();
        for e in matching(left.len(), right.len(), &local) {
            let (_, _, w, k) = edges[group[e]];
            out.insert(
                crate::alignment::Correspondence::with_key(k.clone(), w)
                    .expect("confidence came from an alignment"),
            );
        }
    }
    out
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.parent[ra.max(rb)] = ra.min(rb);
        }
    }
}

#[derive(Clone, Copy)]
struct Arc {
    to: usize,
    cap: bool,
    cost: f64,
}

#[derive(PartialEq)]
struct Dist(f64);

impl Eq for Dist {}

impl PartialOrd for Dist {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Dist {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0)
    }
}

/// Indices of the edges in a maximum-weight matching of a bipartite graph.
fn matching(n1: usize, n2: usize, edges: &[(usize, usize, f64)]) -> Vec<usize> {
    // nodes: source 0, left 1..=n1, right n1+1..=n1+n2, sink n1+n2+1
    let (src, sink) = (0, n1 + n2 + 1);
    let n = sink + 1;
    let mut arcs: Vec<Arc> = Vec::with_capacity(2 * (edges.len() + n1 + n2));
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut add = |arcs: &mut Vec<Arc>, u: usize, v: usize, cost: f64| {
        adj[u].push(arcs.len());
        arcs.push(Arc {
            to: v,
            cap: true,
            cost,
        });
        adj[v].push(arcs.len());
        arcs.push(Arc {
            to: u,
            cap: false,
            cost: -cost,
        });
    };
    for l in 0..n1 {
        add(&mut arcs, src, 1 + l, 0.0);
    }
    let first_edge_arc = arcs.len();
    for &(l, r, w) in edges {
        add(&mut arcs, 1 + l, 1 + n1 + r, -w);
    }
    for r in 0..n2 {
        add(&mut arcs, 1 + n1 + r, sink, 0.0);
    }

    // The graph is a DAG with only edge arcs negative, so these potentials make every reduced cost >= 0.
    let mut potential = vec![0.0; n];
    for &(_, r, w) in edges {
        let p = &mut potential[1 + n1 + r];
        *p = f64::min(*p, -w);
    }
    potential[sink] = potential[1 + n1..sink].iter().copied().fold(0.0, f64::min);

    let mut dist = vec![f64::INFINITY; n];
    let mut via = vec![usize::MAX; n];
    loop {
        dist.fill(f64::INFINITY);
        via.fill(usize::MAX);
        dist[src] = 0.0;
        let mut heap = BinaryHeap::new();
        heap.push(Reverse((Dist(0.0), src)));
        while let Some(Reverse((Dist(d), u))) = heap.pop() {
            if d > dist[u] {
                continue;
            }
            for &ai in &adj[u] {
                let arc = arcs[ai];
                if !arc.cap {
                    continue;
                }
                let reduced = (arc.cost + potential[u] - potential[arc.to]).max(0.0);
                let nd = d + reduced;
                if nd < dist[arc.to] {
                    dist[arc.to] = nd;
                    via[arc.to] = ai;
                    heap.push(Reverse((Dist(nd), arc.to)));
                }
            }
        }
        if !dist[sink].is_finite() {
            break;
        }
        let path_cost = dist[sink] + potential[sink] - potential[src];
        if path_cost >= -1e-12 {
            break;
        }
        for v in 0..n {
            if dist[v].is_finite() {
                potential[v] += dist[v];
            }
        }
        let mut v = sink;
        while v != src {
            let ai = via[v];
            arcs[ai].cap = false;
            arcs[ai ^ 1].cap = true;
            v = arcs[ai ^ 1].to;
        }
    }

    (0..edges.len())
        .filter(|&e| !arcs[first_edge_arc + 2 * e].cap)
        .collect()
}
