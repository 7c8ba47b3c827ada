//! Weighted 3-dimensional matching over (V2I link, RB, cluster) triples.
//!
//! [`match_3d`] solves the LP relaxation to a vertex, peels the edges into an
//! order in which every edge sees at most 2 units of fractional weight among
//! its later neighbours, runs local ratio along that order and finally tops the
//! result up greedily. The peeling property is what makes local ratio a
//! 2-approximation.

use std::collections::HashMap;
use std::io::Write;

use crate::error::{Error, Result};
use crate::lp::{solve_lp_basic, LinearProgram};
use crate::real::Real;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge<T> {
    pub m: usize,
    pub f: usize,
    pub n: usize,
    pub weight: T,
}

impl<T> Edge<T> {
    pub fn key(&self) -> (usize, usize, usize) {
        (self.m, self.f, self.n)
    }

    /// Shares at least one vertex with `other` (an edge intersects itself).
    pub fn intersects<U>(&self, other: &Edge<U>) -> bool {
        self.m == other.m || self.f == other.f || self.n == other.n
    }
}

/// 3-partite hypergraph with layers of sizes `(M, F, N)`. Edges are unique
/// and kept in lexicographic `(m, f, n)` order.
#[derive(Debug, Clone, PartialEq)]
pub struct Hypergraph3<T> {
    sizes: (usize, usize, usize),
    edges: Vec<Edge<T>>,
}

impl<T: Real> Hypergraph3<T> {
    pub fn new(sizes: (usize, usize, usize), mut edges: Vec<Edge<T>>) -> Result<Self> {
        for e in &edges {
            if e.m >= sizes.0 || e.f >= sizes.1 || e.n >= sizes.2 {
                return Err(Error::InvalidConfig(format!("edge {:?} outside layer sizes {sizes:?}", e.key())));
            }
            if !e.weight.is_finite() {
                return Err(Error::InvalidConfig(format!("edge {:?} has weight {}", e.key(), e.weight)));
            }
        }
        edges.sort_by_key(Edge::key);
        if let Some(w) = edges.windows(2).find(|w| w[0].key() == w[1].key()) {
            return Err(Error::InvalidConfig(format!("duplicate edge {:?}", w[0].key())));
        }
        Ok(Hypergraph3 { sizes, edges })
    }

    pub fn sizes(&self) -> (usize, usize, usize) {
        self.sizes
    }

    pub fn edges(&self) -> &[Edge<T>] {
        &self.edges
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn index_of(&self, key: (usize, usize, usize)) -> Option<usize> {
        self.edges.binary_search_by_key(&key, Edge::key).ok()
    }

    /// One row per vertex (all `m`, then all `f`, then all `n`), one column
    /// per edge.
    pub fn relaxation(&self) -> LinearProgram<T> {
        let (m, f, n) = self.sizes;
        let mut rows = vec![Vec::new(); m + f + n];
        for (j, e) in self.edges.iter().enumerate() {
            rows[e.m].push(j);
            rows[m + e.f].push(j);
            rows[m + f + e.n].push(j);
        }
        let objective = self.edges.iter().map(|e| e.weight).collect();
        LinearProgram::new(objective, rows).expect("hypergraph rows are well formed")
    }
}

/// Builds the hypergraph from a weight table; `None` marks an infeasible
/// pattern, which becomes an absent edge.
pub fn build_hypergraph<T: Real>(
    sizes: (usize, usize, usize),
    mut weight: impl FnMut(usize, usize, usize) -> Option<T>,
) -> Result<Hypergraph3<T>> {
    let mut edges = Vec::new();
    for m in 0..sizes.0 {
        for f in 0..sizes.1 {
            for n in 0..sizes.2 {
                if let Some(w) = weight(m, f, n) {
                    edges.push(Edge { m, f, n, weight: w });
                }
            }
        }
    }
    Hypergraph3::new(sizes, edges)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Matching3D<T> {
    chosen: Vec<Edge<T>>,
}

impl<T: Real> Default for Matching3D<T> {
    fn default() -> Self {
        Matching3D { chosen: Vec::new() }
    }
}

impl<T: Real> Matching3D<T> {
    pub fn new() -> Self {
        Self::default()
    }

    /// Chosen edges in lexicographic order.
    pub fn chosen(&self) -> &[Edge<T>] {
        &self.chosen
    }

    pub fn len(&self) -> usize {
        self.chosen.len()
    }

    pub fn is_empty(&self) -> bool {
        self.chosen.is_empty()
    }

    pub fn total_weight(&self) -> T {
        self.chosen.iter().fold(T::zero(), |acc, e| acc + e.weight)
    }

    pub fn contains(&self, key: (usize, usize, usize)) -> bool {
        self.chosen.iter().any(|e| e.key() == key)
    }

    pub fn is_compatible<U>(&self, edge: &Edge<U>) -> bool {
        !self.chosen.iter().any(|c| c.intersects(edge))
    }

    /// Adds `edge` if it is vertex-disjoint from every chosen edge.
    pub fn try_insert(&mut self, edge: Edge<T>) -> bool {
        if !self.is_compatible(&edge) {
            return false;
        }
        let pos = self.chosen.partition_point(|c| c.key() < edge.key());
        self.chosen.insert(pos, edge);
        true
    }

    /// Every vertex of every layer is used at most once.
    pub fn is_valid(&self) -> bool {
        self.chosen.iter().enumerate().all(|(i, a)| self.chosen[i + 1..].iter().all(|b| !a.intersects(b)))
    }
}

/// Orders all edges so that, when edge `e` is emitted, the LP mass on the
/// not-yet-emitted edges intersecting `e` (itself included) is at most
/// `2 + feas_tol`. Returns edge indices; picks the lexicographically first
/// qualifying edge at each step.
pub fn peel_ordering<T: Real>(h: &Hypergraph3<T>, x: &[T]) -> Result<Vec<usize>> {
    assert_eq!(x.len(), h.num_edges(), "one LP value per edge");
    let (sm, sf, sn) = h.sizes;
    let x: Vec<T> = x.iter().map(|&v| v.max(T::zero())).collect();
    // vertex loads and pairwise loads over the remaining edges
    let mut lm = vec![T::zero(); sm];
    let mut lf = vec![T::zero(); sf];
    let mut ln = vec![T::zero(); sn];
    let mut lmf = vec![T::zero(); sm * sf];
    let mut lmn = vec![T::zero(); sm * sn];
    let mut lfn = vec![T::zero(); sf * sn];
    for (e, &v) in h.edges.iter().zip(&x) {
        lm[e.m] += v;
        lf[e.f] += v;
        ln[e.n] += v;
        lmf[e.m * sf + e.f] += v;
        lmn[e.m * sn + e.n] += v;
        lfn[e.f * sn + e.n] += v;
    }
    let limit = T::lit(2.0) + T::feas_tol();
    let mut remaining = vec![true; h.num_edges()];
    let mut order = Vec::with_capacity(h.num_edges());
    for left in (1..=h.num_edges()).rev() {
        let next = (0..h.num_edges()).find(|&j| {
            if !remaining[j] {
                return false;
            }
            let e = &h.edges[j];
            // inclusion-exclusion; the only edge on all three vertices is e
            let mass =
                lm[e.m] + lf[e.f] + ln[e.n] - lmf[e.m * sf + e.f] - lmn[e.m * sn + e.n] - lfn[e.f * sn + e.n] + x[j];
            mass <= limit
        });
        let Some(j) = next else {
            return Err(Error::NonBasicInput { remaining: left });
        };
        let (e, v) = (&h.edges[j], x[j]);
        lm[e.m] -= v;
        lf[e.f] -= v;
        ln[e.n] -= v;
        lmf[e.m * sf + e.f] -= v;
        lmn[e.m * sn + e.n] -= v;
        lfn[e.f * sn + e.n] -= v;
        remaining[j] = false;
        order.push(j);
    }
    Ok(order)
}

/// One weight decomposition `w = w1 + w2` performed by [`local_ratio_with`].
/// All slices are aligned with `edges`, the positive-weight edges still in
/// play, in peeling order.
#[derive(Debug)]
pub struct DecompositionStep<'a, T> {
    pub pivot: usize,
    pub edges: &'a [usize],
    pub w: &'a [T],
    pub w1: &'a [T],
    pub w2: &'a [T],
}

pub fn local_ratio<T: Real>(h: &Hypergraph3<T>, order: &[usize]) -> Matching3D<T> {
    local_ratio_with(h, order, |_| {})
}

/// Local ratio along `order`. The recursion "take the first positive edge
/// `e'`, charge `w(e')` to its closed neighbourhood, recurse on the residual,
/// then keep `e'` if it still fits" is unrolled into a loop plus a stack of
/// pivots.
pub fn local_ratio_with<T: Real>(
    h: &Hypergraph3<T>,
    order: &[usize],
    mut observe: impl FnMut(&DecompositionStep<'_, T>),
) -> Matching3D<T> {
    let mut edges: Vec<usize> = order.to_vec();
    let mut w: Vec<T> = edges.iter().map(|&j| h.edges[j].weight).collect();
    let mut stack = Vec::new();
    loop {
        let keep: Vec<bool> = w.iter().map(|&v| v > T::zero()).collect();
        edges = edges.iter().zip(&keep).filter(|(_, &k)| k).map(|(&j, _)| j).collect();
        w = w.iter().zip(&keep).filter(|(_, &k)| k).map(|(&v, _)| v).collect();
        let Some(&pivot) = edges.first() else { break };
        let pe = &h.edges[pivot];
        let w1: Vec<T> = edges.iter().map(|&j| if h.edges[j].intersects(pe) { w[0] } else { T::zero() }).collect();
        let w2: Vec<T> = w.iter().zip(&w1).map(|(&a, &b)| a - b).collect();
        observe(&DecompositionStep { pivot, edges: &edges, w: &w, w1: &w1, w2: &w2 });
        stack.push(pivot);
        w = w2;
    }
    let mut matching = Matching3D::new();
    while let Some(j) = stack.pop() {
        matching.try_insert(h.edges[j]);
    }
    matching
}

/// Adds edges of nonnegative weight in descending weight order (ties by
/// lexicographic order) whenever they stay disjoint from the matching.
pub fn greedy_augment<T: Real>(mut m0: Matching3D<T>, h: &Hypergraph3<T>) -> Matching3D<T> {
    let mut idx: Vec<usize> = (0..h.num_edges()).filter(|&j| h.edges[j].weight >= T::zero()).collect();
    idx.sort_by(|&a, &b| h.edges[b].weight.partial_cmp(&h.edges[a].weight).unwrap().then(a.cmp(&b)));
    for j in idx {
        m0.try_insert(h.edges[j]);
    }
    m0
}

pub fn match_3d<T: Real>(h: &Hypergraph3<T>) -> Result<Matching3D<T>> {
    let lp = h.relaxation();
    let solution = solve_lp_basic(&lp)?;
    let order = peel_ordering(h, &solution.x)?;
    Ok(greedy_augment(local_ratio(h, &order), h))
}

/// Largest `F + N` accepted by [`brute_force_match`].
pub const BRUTE_FORCE_MAX_FN: usize = 16;

/// Exact maximum-weight matching: dynamic programming over `m` with the used
/// RB and cluster sets as bitmasks.
pub fn brute_force_match<T: Real>(h: &Hypergraph3<T>) -> Result<Matching3D<T>> {
    let (sm, sf, sn) = h.sizes;
    if sf + sn > BRUTE_FORCE_MAX_FN {
        return Err(Error::OracleTooLarge(format!("F + N = {} exceeds {BRUTE_FORCE_MAX_FN}", sf + sn)));
    }
    let mut by_m: Vec<Vec<usize>> = vec![Vec::new(); sm];
    for (j, e) in h.edges.iter().enumerate() {
        if e.weight > T::zero() {
            by_m[e.m].push(j);
        }
    }
    type Memo<T> = HashMap<(usize, u32, u32), (T, Option<usize>)>;

    fn best<T: Real>(
        h: &Hypergraph3<T>,
        by_m: &[Vec<usize>],
        m: usize,
        fmask: u32,
        nmask: u32,
        memo: &mut Memo<T>,
    ) -> T {
        if m == by_m.len() {
            return T::zero();
        }
        if let Some(&(v, _)) = memo.get(&(m, fmask, nmask)) {
            return v;
        }
        let mut value = best(h, by_m, m + 1, fmask, nmask, memo);
        let mut pick = None;
        for &j in &by_m[m] {
            let e = &h.edges[j];
            if fmask >> e.f & 1 == 1 || nmask >> e.n & 1 == 1 {
                continue;
            }
            let v = e.weight + best(h, by_m, m + 1, fmask | 1 << e.f, nmask | 1 << e.n, memo);
            if v > value {
                value = v;
                pick = Some(j);
            }
        }
        memo.insert((m, fmask, nmask), (value, pick));
        value
    }

    let mut memo = Memo::default();
    best(h, &by_m, 0, 0, 0, &mut memo);
    let mut matching = Matching3D::new();
    let (mut fmask, mut nmask) = (0u32, 0u32);
    for m in 0..sm {
        if let Some(&(_, Some(j))) = memo.get(&(m, fmask, nmask)) {
            let e = h.edges[j];
            fmask |= 1 << e.f;
            nmask |= 1 << e.n;
            matching.try_insert(e);
        }
    }
    Ok(matching)
}

/// Debug dump: every edge with its weight and whether it was chosen.
pub fn write_matching_csv<T: Real, W: Write>(h: &Hypergraph3<T>, matching: &Matching3D<T>, mut out: W) -> Result<()> {
    writeln!(out, "m,f,n,weight,chosen")?;
    for e in &h.edges {
        writeln!(out, "{},{},{},{},{}", e.m, e.f, e.n, e.weight, u8::from(matching.contains(e.key())))?;
    }
    Ok(())
}
