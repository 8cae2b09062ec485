//! Valid-domain computation on a compiled (and possibly restricted) BDD.
//!
//! Nodes are grouped into layers `V_i` by the finite variable their level
//! encodes; `In_i` are the nodes of `V_i` entered from an earlier layer (plus
//! the root). Two algorithms cooperate:
//!
//! * [`cvd_skipped`] scans every edge once and certifies as full each
//!   variable jumped over by an edge that lies on a satisfying path.
//! * [`cvd_classic`] handles the rest: for each value `j` it walks the
//!   encoding of `j` from every entry node, memoizing dead nodes so each node
//!   of `V_i` is entered at most once per value.
//!
//! Total cost is `O(Σ |V_i|·|D_i| + |E| + n)`.

use std::collections::{BTreeSet, HashSet};

use thiserror::Error;

use crate::bdd::{BddStore, NodeId};
use crate::encode::{enc, BoolLayout};
use crate::model::DomainSets;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CvdError {
    #[error("the solution space is empty")]
    EmptySpace,
}

/// Layer structure of the graph below one root.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Layers {
    /// `V_i`, sorted by (level, id).
    pub nodes_by_var: Vec<Vec<NodeId>>,
    /// `In_i`, sorted by (level, id).
    pub in_sets: Vec<Vec<NodeId>>,
    /// Index of the virtual layer holding the terminals (`n`).
    pub terminal_layer: usize,
    /// Reachable non-terminal nodes, children before parents.
    pub order: Vec<NodeId>,
    /// `crossed[i]`: some path to `1` never tests a bit of variable `i`
    /// (an edge into a non-`0` node jumps over layer `i`, or the root lies
    /// below it).
    pub crossed: Vec<bool>,
}

impl Layers {
    pub fn layer_of(&self, store: &BddStore, layout: &BoolLayout, u: NodeId) -> usize {
        layout.var1(store.var(u))
    }
}

pub fn build_layers(store: &BddStore, layout: &BoolLayout, root: NodeId) -> Layers {
    let n = layout.len();
    let layer = |u: NodeId| layout.var1(store.var(u));
    let order = store.reachable(&[root]);
    let mut nodes_by_var = vec![Vec::new(); n];
    let mut entries: Vec<HashSet<NodeId>> = vec![HashSet::new(); n];
    // difference array over layers for `crossed`
    let mut cross_delta = vec![0i64; n + 1];
    let mut jump = |from_exclusive: Option<usize>, to: usize| {
        let start = from_exclusive.map_or(0, |f| f + 1);
        if start < to {
            cross_delta[start] += 1;
            cross_delta[to] -= 1;
        }
    };

    if root != NodeId::TERM0 {
        jump(None, layer(root));
    }
    if !root.is_terminal() {
        entries[layer(root)].insert(root);
    }
    for &u in &order {
        let lu = layer(u);
        nodes_by_var[lu].push(u);
        for child in [store.low(u), store.high(u)] {
            if child == NodeId::TERM0 {
                continue;
            }
            let lc = layer(child);
            if lc > lu && !child.is_terminal() {
                entries[lc].insert(child);
            }
            jump(Some(lu), lc);
        }
    }

    let sort = |v: &mut Vec<NodeId>| v.sort_by_key(|&u| (store.var(u), u));
    for v in &mut nodes_by_var {
        sort(v);
    }
    let in_sets = entries
        .into_iter()
        .map(|set| {
            let mut v: Vec<NodeId> = set.into_iter().collect();
            sort(&mut v);
            v
        })
        .collect();
    let mut crossed = Vec::with_capacity(n);
    let mut running = 0i64;
    for delta in cross_delta.iter().take(n) {
        running += delta;
        crossed.push(running > 0);
    }
    Layers {
        nodes_by_var,
        in_sets,
        terminal_layer: n,
        order,
        crossed,
    }
}

/// Longest-edge array and merged segment starts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LongEdgeSummary {
    /// After merging, `longest[s]` for `s ∈ segments` is the end of the merged
    /// segment starting at `s`. Other entries hold intermediate values.
    pub longest: Vec<usize>,
    pub segments: Vec<usize>,
}

/// Merges overlapping segments `[i, longest[i]]` in one left-to-right pass.
/// Segments of length one (no skipped layer) are dropped.
pub fn merge_segments(mut longest: Vec<usize>) -> LongEdgeSummary {
    let n = longest.len();
    let mut segments = Vec::new();
    if n == 0 {
        return LongEdgeSummary { longest, segments };
    }
    let mut s = 0;
    for i in 0..n - 1 {
        if i + 1 < longest[s] {
            longest[s] = longest[s].max(longest[i + 1]);
        } else {
            if s + 1 < longest[s] {
                segments.push(s);
            }
            s = i + 1;
        }
    }
    // the last open segment
    if s + 1 < longest[s] {
        segments.push(s);
    }
    LongEdgeSummary { longest, segments }
}

/// Per-layer furthest target of an edge into a non-`0` node; `n` for edges
/// into `1`. Edges are scanned in the topological order of `layers.order`.
pub fn long_edge_summary(
    store: &BddStore,
    layout: &BoolLayout,
    layers: &Layers,
) -> LongEdgeSummary {
    let n = layout.len();
    let mut longest: Vec<usize> = (1..=n).collect();
    for &u in &layers.order {
        let lu = layout.var1(store.var(u));
        for child in [store.low(u), store.high(u)] {
            if child == NodeId::TERM0 {
                continue;
            }
            longest[lu] = longest[lu].max(layout.var1(store.var(child)));
        }
    }
    merge_segments(longest)
}

/// Switches for the differential harness.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CvdOptions {
    /// Memoize dead nodes per (variable, value). Disabling it only costs time.
    pub marking: bool,
    /// Deliberately wrong: also certify the end layers of each merged
    /// segment. Used to check that the differential harness catches it.
    pub certify_segment_endpoints: bool,
}

impl Default for CvdOptions {
    fn default() -> Self {
        CvdOptions {
            marking: true,
            certify_segment_endpoints: false,
        }
    }
}

/// Variables whose valid domain is certified full by a skipping edge.
pub fn cvd_skipped(
    store: &BddStore,
    layout: &BoolLayout,
    root: NodeId,
    layers: &Layers,
) -> Result<BTreeSet<usize>, CvdError> {
    cvd_skipped_with(store, layout, root, layers, CvdOptions::default())
}

pub fn cvd_skipped_with(
    store: &BddStore,
    layout: &BoolLayout,
    root: NodeId,
    layers: &Layers,
    options: CvdOptions,
) -> Result<BTreeSet<usize>, CvdError> {
    let n = layout.len();
    match root {
        NodeId::TERM0 => return Err(CvdError::EmptySpace),
        NodeId::TERM1 => return Ok((0..n).collect()),
        _ => {}
    }
    let summary = long_edge_summary(store, layout, layers);
    let mut certified = BTreeSet::new();
    for &s in &summary.segments {
        let end = summary.longest[s];
        if options.certify_segment_endpoints {
            certified.extend(s..=end.min(n - 1));
        } else {
            certified.extend(s + 1..end);
        }
    }
    Ok(certified)
}

/// Per-node record of the last (variable, value) traversal that entered it.
#[derive(Debug, Clone)]
pub struct MarkTable {
    marks: Vec<(u32, u32, u32)>,
    generation: u32,
    enabled: bool,
}

impl MarkTable {
    pub fn new(len: usize) -> Self {
        MarkTable {
            marks: vec![(0, 0, 0); len],
            generation: 1,
            enabled: true,
        }
    }

    pub fn disabled(len: usize) -> Self {
        MarkTable {
            enabled: false,
            ..MarkTable::new(len)
        }
    }

    /// Forgets every mark in O(1).
    pub fn reset(&mut self) {
        self.generation = self.generation.wrapping_add(1);
        if self.generation == 0 {
            self.marks.fill((0, 0, 0));
            self.generation = 1;
        }
    }

    pub fn is_marked(&self, u: NodeId, var: usize, value: usize) -> bool {
        self.enabled && self.marks[u.index()] == (self.generation, var as u32, value as u32)
    }

    pub fn mark(&mut self, u: NodeId, var: usize, value: usize) {
        if self.enabled {
            self.marks[u.index()] = (self.generation, var as u32, value as u32);
        }
    }
}

/// Follows the encoding of `value` from `u` (a node of layer `var`) starting
/// at `u`'s bit position. Returns the first node outside the layer, or `0`
/// when the walk dies or re-enters a node already walked for the same value.
/// `visits` is incremented once per node entered.
pub fn traverse(
    store: &BddStore,
    layout: &BoolLayout,
    u: NodeId,
    var: usize,
    value: usize,
    marks: &mut MarkTable,
    visits: &mut u64,
) -> NodeId {
    let bits = enc(value, layout.bits(var)).expect("value checked by caller");
    *visits += 1;
    if marks.is_marked(u, var, value) {
        return NodeId::TERM0;
    }
    marks.mark(u, var, value);
    let mut u = u;
    loop {
        let level = store.var(u);
        let bit = bits[layout.var2(level) as usize];
        u = if bit { store.high(u) } else { store.low(u) };
        if u == NodeId::TERM0 || layout.var1(store.var(u)) > var {
            return u;
        }
        *visits += 1;
        if marks.is_marked(u, var, value) {
            return NodeId::TERM0;
        }
        marks.mark(u, var, value);
    }
}

/// Valid domain of one variable by per-value traversal from `In_i`.
///
/// A variable that some satisfying path jumps over is full without any
/// traversal; this also covers empty layers.
pub fn cvd_classic(
    store: &BddStore,
    layout: &BoolLayout,
    var: usize,
    layers: &Layers,
    marks: &mut MarkTable,
    visits: &mut u64,
) -> BTreeSet<usize> {
    let size = layout.domain_size(var);
    if layers.crossed[var] {
        return (0..size).collect();
    }
    let mut domain = BTreeSet::new();
    for value in 0..size {
        for &u in &layers.in_sets[var] {
            if traverse(store, layout, u, var, value, marks, visits) != NodeId::TERM0 {
                domain.insert(value);
                break;
            }
        }
    }
    domain
}

/// Everything one valid-domain computation produced.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CvdReport {
    pub domains: DomainSets,
    /// Variables certified full by [`cvd_skipped`].
    pub certified: BTreeSet<usize>,
    /// Node visits made by traversals, per variable.
    pub visits: Vec<u64>,
    pub layer_sizes: Vec<usize>,
    pub in_sizes: Vec<usize>,
}

impl CvdReport {
    /// `|V_i|·|D_i| + |In_i|·|D_i|`.
    pub fn visit_bound(&self, layout: &BoolLayout, var: usize) -> u64 {
        ((self.layer_sizes[var] + self.in_sizes[var]) * layout.domain_size(var)) as u64
    }

    /// Variables whose traversal count exceeds [`CvdReport::visit_bound`].
    pub fn bound_violations(&self, layout: &BoolLayout) -> Vec<usize> {
        (0..self.visits.len())
            .filter(|&i| self.visits[i] > self.visit_bound(layout, i))
            .collect()
    }
}

pub fn valid_domains(store: &BddStore, layout: &BoolLayout, root: NodeId) -> DomainSets {
    valid_domains_report(store, layout, root, CvdOptions::default()).domains
}

/// Valid domains of every variable under `root`. Assigned variables (whose
/// block is forced by restriction) come out as singletons.
pub fn valid_domains_report(
    store: &BddStore,
    layout: &BoolLayout,
    root: NodeId,
    options: CvdOptions,
) -> CvdReport {
    let n = layout.len();
    let layers = build_layers(store, layout, root);
    let mut report = CvdReport {
        domains: vec![BTreeSet::new(); n],
        certified: BTreeSet::new(),
        visits: vec![0; n],
        layer_sizes: layers.nodes_by_var.iter().map(Vec::len).collect(),
        in_sizes: layers.in_sets.iter().map(Vec::len).collect(),
    };
    let Ok(certified) = cvd_skipped_with(store, layout, root, &layers, options) else {
        return report;
    };
    let mut marks = if options.marking {
        MarkTable::new(store.len())
    } else {
        MarkTable::disabled(store.len())
    };
    for var in 0..n {
        report.domains[var] = if certified.contains(&var) {
            (0..layout.domain_size(var)).collect()
        } else {
            cvd_classic(
                store,
                layout,
                var,
                &layers,
                &mut marks,
                &mut report.visits[var],
            )
        };
    }
    report.certified = certified;
    report
}
