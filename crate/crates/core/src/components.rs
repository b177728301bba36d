//! Component structure of the vacant-induced subgraph.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use crate::bitmap::Bitmap;
use crate::graph::{Digraph, Graph};
use crate::{TimeStep, VertexId};

/// Marker for vertices outside the analysed vertex set.
pub const NO_COMPONENT: u32 = u32::MAX;

/// The subgraph induced by the vertices whose `visited` bit is clear.
/// Nothing is copied; edges are filtered on the fly.
#[derive(Clone, Copy, Debug)]
pub struct VacantView<'a, G> {
    graph: &'a G,
    visited: &'a Bitmap,
}

pub fn induced_vacant_subgraph<'a, G>(graph: &'a G, visited: &'a Bitmap) -> VacantView<'a, G> {
    VacantView { graph, visited }
}

impl<'a, G> VacantView<'a, G> {
    pub fn graph(&self) -> &'a G {
        self.graph
    }

    #[inline]
    pub fn contains(&self, v: VertexId) -> bool {
        !self.visited.get(v as usize)
    }

    pub fn vertices(&self) -> impl Iterator<Item = VertexId> + '_ {
        (0..self.visited.len() as VertexId).filter(move |&v| self.contains(v))
    }

    pub fn vertex_count(&self) -> usize {
        self.visited.len() - self.visited.count_ones()
    }
}

impl VacantView<'_, Graph> {
    /// Number of vacant neighbor slots of a vacant vertex (loops count twice).
    pub fn degree(&self, v: VertexId) -> usize {
        self.graph.neighbors(v).iter().filter(|&&w| self.contains(w)).count()
    }

    pub fn edge_count(&self) -> usize {
        self.vertices().map(|v| self.degree(v)).sum::<usize>() / 2
    }
}

impl VacantView<'_, Digraph> {
    pub fn arc_count(&self) -> usize {
        self.vertices().map(|v| self.graph.out_neighbors(v).iter().filter(|&&w| self.contains(w)).count()).sum()
    }
}

/// Components sorted by size, largest first. Ties are broken by the
/// smallest vertex, so the labelling is canonical.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ComponentDecomposition {
    component_of: Vec<u32>,
    sizes: Vec<usize>,
    edge_counts: Vec<usize>,
}

impl ComponentDecomposition {
    /// Component index of `v`, or `None` for vertices outside the view.
    pub fn component_of(&self, v: VertexId) -> Option<usize> {
        match self.component_of[v as usize] {
            NO_COMPONENT => None,
            c => Some(c as usize),
        }
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    /// Edges (arcs for directed views) inside each component, with multiplicity.
    pub fn edge_counts(&self) -> &[usize] {
        &self.edge_counts
    }

    pub fn component_count(&self) -> usize {
        self.sizes.len()
    }

    pub fn largest(&self) -> usize {
        self.sizes.first().copied().unwrap_or(0)
    }

    pub fn second_largest(&self) -> usize {
        self.sizes.get(1).copied().unwrap_or(0)
    }

    pub fn analyzed_vertices(&self) -> usize {
        self.sizes.iter().sum()
    }

    /// Builds the canonical decomposition from arbitrary raw labels.
    fn canonical(raw: Vec<u32>, raw_count: usize, edge_slots: impl Fn(&[u32], &mut [usize])) -> Self {
        let mut size = vec![0usize; raw_count];
        let mut first = vec![u32::MAX; raw_count];
        for (v, &c) in raw.iter().enumerate() {
            if c != NO_COMPONENT {
                size[c as usize] += 1;
                if first[c as usize] == u32::MAX {
                    first[c as usize] = v as u32;
                }
            }
        }
        let mut order: Vec<usize> = (0..raw_count).collect();
        order.sort_unstable_by(|&a, &b| size[b].cmp(&size[a]).then(first[a].cmp(&first[b])));
        let mut relabel = vec![0u32; raw_count];
        for (new, &old) in order.iter().enumerate() {
            relabel[old] = new as u32;
        }
        let component_of: Vec<u32> =
            raw.iter().map(|&c| if c == NO_COMPONENT { NO_COMPONENT } else { relabel[c as usize] }).collect();
        let sizes = order.iter().map(|&c| size[c]).collect();
        let mut edge_counts = vec![0usize; raw_count];
        edge_slots(&component_of, &mut edge_counts);
        ComponentDecomposition { component_of, sizes, edge_counts }
    }
}

/// Disjoint-set forest with union by size and path halving.
#[derive(Clone, Debug)]
pub struct UnionFind {
    parent: Vec<u32>,
    size: Vec<u32>,
}

impl UnionFind {
    pub fn new(n: usize) -> Self {
        UnionFind { parent: (0..n as u32).collect(), size: vec![1; n] }
    }

    pub fn find(&mut self, mut x: u32) -> u32 {
        while self.parent[x as usize] != x {
            let grand = self.parent[self.parent[x as usize] as usize];
            self.parent[x as usize] = grand;
            x = grand;
        }
        x
    }

    /// Returns false if `a` and `b` were already joined.
    pub fn union(&mut self, a: u32, b: u32) -> bool {
        let (mut ra, mut rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        if self.size[ra as usize] < self.size[rb as usize] {
            core::mem::swap(&mut ra, &mut rb);
        }
        self.parent[rb as usize] = ra;
        self.size[ra as usize] += self.size[rb as usize];
        true
    }
}

fn undirected_edge_counts(view: &VacantView<'_, Graph>, labels: &[u32], counts: &mut [usize]) {
    for v in view.vertices() {
        let c = labels[v as usize] as usize;
        counts[c] += view.degree(v);
    }
    for e in counts.iter_mut() {
        *e /= 2;
    }
}

/// Connected components of an undirected vacant view (union-find). Loops
/// never connect anything; parallel edges connect once but are counted
/// with multiplicity in the edge totals.
pub fn connected_components(view: &VacantView<'_, Graph>) -> ComponentDecomposition {
    let g = view.graph();
    let n = g.vertex_count();
    let mut uf = UnionFind::new(n);
    for v in view.vertices() {
        for &w in g.neighbors(v) {
            if w > v && view.contains(w) {
                uf.union(v, w);
            }
        }
    }
    let mut raw = vec![NO_COMPONENT; n];
    let mut root_label = vec![NO_COMPONENT; n];
    let mut count = 0usize;
    for v in view.vertices() {
        let root = uf.find(v) as usize;
        if root_label[root] == NO_COMPONENT {
            root_label[root] = count as u32;
            count += 1;
        }
        raw[v as usize] = root_label[root];
    }
    ComponentDecomposition::canonical(raw, count, |labels, counts| undirected_edge_counts(view, labels, counts))
}

/// Same decomposition as [`connected_components`], computed by breadth-first search.
pub fn connected_components_bfs(view: &VacantView<'_, Graph>) -> ComponentDecomposition {
    let g = view.graph();
    let n = g.vertex_count();
    let mut raw = vec![NO_COMPONENT; n];
    let mut count = 0u32;
    let mut queue = Vec::new();
    for s in view.vertices() {
        if raw[s as usize] != NO_COMPONENT {
            continue;
        }
        raw[s as usize] = count;
        queue.clear();
        queue.push(s);
        let mut head = 0;
        while head < queue.len() {
            let v = queue[head];
            head += 1;
            for &w in g.neighbors(v) {
                if view.contains(w) && raw[w as usize] == NO_COMPONENT {
                    raw[w as usize] = count;
                    queue.push(w);
                }
            }
        }
        count += 1;
    }
    ComponentDecomposition::canonical(raw, count as usize, |labels, counts| {
        undirected_edge_counts(view, labels, counts)
    })
}

/// Strongly connected components of a directed vacant view (iterative Tarjan).
pub fn strongly_connected_components(view: &VacantView<'_, Digraph>) -> ComponentDecomposition {
    let g = view.graph();
    let n = g.vertex_count();
    const UNSEEN: u32 = u32::MAX;
    let mut index = vec![UNSEEN; n];
    let mut low = vec![0u32; n];
    let mut on_stack = Bitmap::new(n);
    let mut stack: Vec<VertexId> = Vec::new();
    let mut raw = vec![NO_COMPONENT; n];
    let mut count = 0u32;
    let mut next_index = 0u32;
    // (vertex, position in its out-list)
    let mut call: Vec<(VertexId, usize)> = Vec::new();

    for root in view.vertices() {
        if index[root as usize] != UNSEEN {
            continue;
        }
        call.push((root, 0));
        while let Some(&mut (v, ref mut pos)) = call.last_mut() {
            let vi = v as usize;
            if *pos == 0 && index[vi] == UNSEEN {
                index[vi] = next_index;
                low[vi] = next_index;
                next_index += 1;
                stack.push(v);
                on_stack.insert(vi);
            }
            let out = g.out_neighbors(v);
            let mut descended = false;
            while *pos < out.len() {
                let w = out[*pos];
                *pos += 1;
                if !view.contains(w) {
                    continue;
                }
                let wi = w as usize;
                if index[wi] == UNSEEN {
                    call.push((w, 0));
                    descended = true;
                    break;
                } else if on_stack.get(wi) {
                    low[vi] = low[vi].min(index[wi]);
                }
            }
            if descended {
                continue;
            }
            call.pop();
            if let Some(&(parent, _)) = call.last() {
                let pi = parent as usize;
                low[pi] = low[pi].min(low[vi]);
            }
            if low[vi] == index[vi] {
                loop {
                    let w = stack.pop().expect("tarjan stack holds the root");
                    on_stack.remove(w as usize);
                    raw[w as usize] = count;
                    if w == v {
                        break;
                    }
                }
                count += 1;
            }
        }
    }
    ComponentDecomposition::canonical(raw, count as usize, |labels, counts| {
        for v in view.vertices() {
            let c = labels[v as usize];
            for &w in g.out_neighbors(v) {
                if view.contains(w) && labels[w as usize] == c {
                    counts[c as usize] += 1;
                }
            }
        }
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum ComponentKind {
    Tree,
    Unicyclic,
    Complex,
}

/// Tree iff edges = vertices - 1, unicyclic iff edges = vertices.
pub fn classify_components(decomposition: &ComponentDecomposition) -> Vec<ComponentKind> {
    decomposition
        .sizes()
        .iter()
        .zip(decomposition.edge_counts())
        .map(|(&size, &edges)| {
            debug_assert!(edges + 1 >= size, "a connected component has at least size - 1 edges");
            if edges + 1 == size {
                ComponentKind::Tree
            } else if edges == size {
                ComponentKind::Unicyclic
            } else {
                ComponentKind::Complex
            }
        })
        .collect()
}

/// Degree information of the vacant graph.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum DegreeProfile {
    /// `D_s` for `s = 0..=r` on a regular host graph.
    Histogram(Vec<usize>),
    /// First two moments of the vacant degree on an irregular host graph.
    Moments {
        mean: f64,
        mean_square: f64,
    },
    NotRecorded,
}

/// Statistics of the vacant graph at one time.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct VacantSnapshot {
    pub time: TimeStep,
    pub vacant: usize,
    /// Edges the walk has not traversed yet; only known when taken during a walk.
    pub unvisited_edges: Option<usize>,
    pub degrees: DegreeProfile,
    /// `(size, number of components of that size)`, ascending by size.
    pub component_sizes: Vec<(usize, usize)>,
    /// `tree_counts[k - 1]` is the number of tree components with `k` vertices, `k <= k_cap`.
    pub tree_counts: Vec<usize>,
    pub largest: usize,
    pub second_largest: usize,
    /// Components with at most `k_cap` vertices that are not trees.
    pub non_tree_small: usize,
}

impl VacantSnapshot {
    fn empty(time: TimeStep, vacant: usize) -> Self {
        VacantSnapshot {
            time,
            vacant,
            unvisited_edges: None,
            degrees: DegreeProfile::NotRecorded,
            component_sizes: Vec::new(),
            tree_counts: Vec::new(),
            largest: 0,
            second_largest: 0,
            non_tree_small: 0,
        }
    }

    pub fn tree_count(&self, k: usize) -> usize {
        self.tree_counts.get(k.wrapping_sub(1)).copied().unwrap_or(0)
    }

    pub fn component_count(&self) -> usize {
        self.component_sizes.iter().map(|&(_, c)| c).sum()
    }
}

/// Which statistics a snapshot computes beyond `|R(t)|`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct StatFlags {
    pub components: bool,
    pub degrees: bool,
}

impl Default for StatFlags {
    fn default() -> Self {
        StatFlags { components: true, degrees: true }
    }
}

fn fill_components(snap: &mut VacantSnapshot, d: &ComponentDecomposition, k_cap: usize, trees: bool) {
    let mut hist: BTreeMap<usize, usize> = BTreeMap::new();
    for &s in d.sizes() {
        *hist.entry(s).or_default() += 1;
    }
    snap.component_sizes = hist.into_iter().collect();
    snap.largest = d.largest();
    snap.second_largest = d.second_largest();
    if trees {
        snap.tree_counts = vec![0; k_cap];
        for (kind, &size) in classify_components(d).iter().zip(d.sizes()) {
            if size <= k_cap {
                match kind {
                    ComponentKind::Tree => snap.tree_counts[size - 1] += 1,
                    _ => snap.non_tree_small += 1,
                }
            }
        }
    }
}

/// Snapshot of an undirected vacant graph. On a regular host graph the
/// degree histogram counts, for every vacant vertex, its vacant neighbor
/// slots; otherwise only the first two moments are kept.
pub fn snapshot_statistics(graph: &Graph, visited: &Bitmap, t: TimeStep, k_cap: usize) -> VacantSnapshot {
    statistics_with(graph, visited, t, k_cap, StatFlags::default())
}

fn statistics_with(graph: &Graph, visited: &Bitmap, t: TimeStep, k_cap: usize, flags: StatFlags) -> VacantSnapshot {
    assert!(k_cap >= 1, "k_cap must be at least 1");
    let view = induced_vacant_subgraph(graph, visited);
    let mut snap = VacantSnapshot::empty(t, view.vertex_count());
    if flags.degrees {
        snap.degrees = match graph.regular_degree() {
            Some(r) => {
                let mut hist = vec![0usize; r + 1];
                for v in view.vertices() {
                    hist[view.degree(v)] += 1;
                }
                DegreeProfile::Histogram(hist)
            }
            None => {
                let (mut s1, mut s2) = (0.0, 0.0);
                for v in view.vertices() {
                    let d = view.degree(v) as f64;
                    s1 += d;
                    s2 += d * d;
                }
                let count = snap.vacant.max(1) as f64;
                DegreeProfile::Moments { mean: s1 / count, mean_square: s2 / count }
            }
        };
    }
    if flags.components {
        let d = connected_components(&view);
        fill_components(&mut snap, &d, k_cap, true);
    }
    snap
}

/// Snapshot of a directed vacant graph: strongly connected components and
/// out-degree moments. Tree counts are not defined here and stay empty.
pub fn directed_snapshot_statistics(
    digraph: &Digraph,
    visited: &Bitmap,
    t: TimeStep,
    k_cap: usize,
    flags: StatFlags,
) -> VacantSnapshot {
    let view = induced_vacant_subgraph(digraph, visited);
    let mut snap = VacantSnapshot::empty(t, view.vertex_count());
    if flags.degrees {
        let (mut s1, mut s2) = (0.0, 0.0);
        for v in view.vertices() {
            let d = digraph.out_neighbors(v).iter().filter(|&&w| view.contains(w)).count() as f64;
            s1 += d;
            s2 += d * d;
        }
        let count = snap.vacant.max(1) as f64;
        snap.degrees = DegreeProfile::Moments { mean: s1 / count, mean_square: s2 / count };
    }
    if flags.components {
        let d = strongly_connected_components(&view);
        fill_components(&mut snap, &d, k_cap, false);
    }
    snap
}

/// Graph types that can summarise their vacant subgraph.
pub trait VacantStatistics {
    fn vacant_statistics(&self, visited: &Bitmap, t: TimeStep, k_cap: usize, flags: StatFlags) -> VacantSnapshot;
}

impl VacantStatistics for Graph {
    fn vacant_statistics(&self, visited: &Bitmap, t: TimeStep, k_cap: usize, flags: StatFlags) -> VacantSnapshot {
        statistics_with(self, visited, t, k_cap, flags)
    }
}

impl VacantStatistics for Digraph {
    fn vacant_statistics(&self, visited: &Bitmap, t: TimeStep, k_cap: usize, flags: StatFlags) -> VacantSnapshot {
        directed_snapshot_statistics(self, visited, t, k_cap, flags)
    }
}
