//! V2V interference graph and greedy MAX N-CUT clustering.

use crate::channel::ChannelState;
use crate::error::{Error, Result};
use crate::real::Real;

/// Directed interference weights between V2V links: `w[j][i]` is the
/// large-scale gain from transmitter `j` into receiver `i`. Zero diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct InterferenceGraph<T> {
    w: Vec<Vec<T>>,
}

impl<T: Real> InterferenceGraph<T> {
    /// Panics if `w` is not square, has a non-zero diagonal, or a negative or
    /// non-finite weight.
    pub fn new(w: Vec<Vec<T>>) -> Self {
        let k = w.len();
        for (j, row) in w.iter().enumerate() {
            assert_eq!(row.len(), k, "interference matrix must be square");
            for (i, &x) in row.iter().enumerate() {
                assert!(x.is_finite() && x >= T::zero(), "weights must be finite and non-negative");
                assert!(i != j || x == T::zero(), "diagonal must be zero");
            }
        }
        InterferenceGraph { w }
    }

    pub fn from_channel(cs: &ChannelState<T>) -> Self {
        Self::new(cs.alpha_kk.clone())
    }

    pub fn len(&self) -> usize {
        self.w.len()
    }

    pub fn is_empty(&self) -> bool {
        self.w.is_empty()
    }

    pub fn weight(&self, from: usize, to: usize) -> T {
        self.w[from][to]
    }

    pub fn total_weight(&self) -> T {
        self.w.iter().flatten().copied().sum()
    }

    /// Interference added if link `k` joins a cluster holding `members`.
    fn join_cost(&self, k: usize, members: &[usize]) -> T {
        members.iter().map(|&j| self.w[k][j] + self.w[j][k]).sum()
    }
}

pub fn build_interference_graph<T: Real>(cs: &ChannelState<T>) -> InterferenceGraph<T> {
    InterferenceGraph::from_channel(cs)
}

/// Assignment of each V2V link to one of `n` clusters (0-based).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Clustering {
    assignment: Vec<usize>,
    clusters: Vec<Vec<usize>>,
}

impl Clustering {
    /// Builds from a raw assignment vector. Panics on an out-of-range index.
    pub fn from_assignment(assignment: Vec<usize>, n: usize) -> Self {
        let mut clusters = vec![Vec::new(); n];
        for (k, &c) in assignment.iter().enumerate() {
            assert!(c < n, "cluster index {c} out of range for {n} clusters");
            clusters[c].push(k);
        }
        Clustering { assignment, clusters }
    }

    pub fn num_clusters(&self) -> usize {
        self.clusters.len()
    }

    pub fn num_links(&self) -> usize {
        self.assignment.len()
    }

    pub fn cluster_of(&self, link: usize) -> usize {
        self.assignment[link]
    }

    pub fn assignment(&self) -> &[usize] {
        &self.assignment
    }

    /// Members of cluster `n`, ascending.
    pub fn members(&self, n: usize) -> &[usize] {
        &self.clusters[n]
    }

    pub fn clusters(&self) -> &[Vec<usize>] {
        &self.clusters
    }
}

/// Greedy MAX N-CUT: links `0..n` seed clusters `0..n`; every later link, in
/// index order, joins the cluster where it adds the least interference in
/// both directions. Ties go to the lowest cluster index.
pub fn max_n_cut_partition<T: Real>(g: &InterferenceGraph<T>, n: usize) -> Result<Clustering> {
    let k = g.len();
    if n == 0 || n > k {
        return Err(Error::BadClusterCount { links: k, clusters: n });
    }
    let mut clusters: Vec<Vec<usize>> = (0..n).map(|c| vec![c]).collect();
    let mut assignment: Vec<usize> = (0..n).collect();
    for link in n..k {
        let mut best = 0;
        let mut best_cost = g.join_cost(link, &clusters[0]);
        for (c, members) in clusters.iter().enumerate().skip(1) {
            let cost = g.join_cost(link, members);
            if cost < best_cost {
                best = c;
                best_cost = cost;
            }
        }
        clusters[best].push(link);
        assignment.push(best);
    }
    Ok(Clustering { assignment, clusters })
}

/// Sum of directed weights between distinct links of the same cluster.
pub fn intra_cluster_weight<T: Real>(g: &InterferenceGraph<T>, c: &Clustering) -> T {
    c.clusters()
        .iter()
        .map(|members| {
            members
                .iter()
                .flat_map(|&a| members.iter().map(move |&b| (a, b)))
                .filter(|(a, b)| a != b)
                .map(|(a, b)| g.weight(a, b))
                .sum::<T>()
        })
        .sum()
}

/// Sum of directed weights between links in different clusters.
pub fn cut_weight<T: Real>(g: &InterferenceGraph<T>, c: &Clustering) -> T {
    let mut total = T::zero();
    for a in 0..g.len() {
        for b in 0..g.len() {
            if c.cluster_of(a) != c.cluster_of(b) {
                total += g.weight(a, b);
            }
        }
    }
    total
}
