//! End-to-end allocation for one channel snapshot: cluster the V2V links,
//! solve the power problem of every (V2I link, RB, cluster) pattern, match
//! patterns with the 3-dimensional matching algorithm and collect the
//! resulting spectrum and power assignment.

use std::io::Write;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::channel::ChannelState;
use crate::error::{Error, Result};
use crate::matching::{build_hypergraph, match_3d, Hypergraph3, Matching3D};
use crate::partition::{max_n_cut_partition, Clustering, InterferenceGraph};
use crate::power::{optimal_powers, PowerParams, PowerProblem, PowerSolution};
use crate::real::{mw_to_dbm, Real};
use crate::scenario::ScenarioConfig;

/// Closed-form power solution of every pattern, indexed `[m][f][n]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PatternTable<T> {
    sizes: (usize, usize, usize),
    solutions: Vec<PowerSolution<T>>,
}

impl<T: Real> PatternTable<T> {
    pub fn compute(cs: &ChannelState<T>, clustering: &Clustering, params: &PowerParams<T>) -> Result<Self> {
        if clustering.num_links() != cs.num_v2v() {
            return Err(Error::InvalidConfig(format!(
                "clustering covers {} links, channel has {}",
                clustering.num_links(),
                cs.num_v2v()
            )));
        }
        if let Some(n) = clustering.clusters().iter().position(Vec::is_empty) {
            return Err(Error::InvalidConfig(format!("cluster {n} is empty")));
        }
        let sizes = (cs.num_v2i(), cs.num_rbs(), clustering.num_clusters());
        let mut solutions = Vec::with_capacity(sizes.0 * sizes.1 * sizes.2);
        for m in 0..sizes.0 {
            for f in 0..sizes.1 {
                for members in clustering.clusters() {
                    solutions.push(optimal_powers(&PowerProblem::from_channel(cs, m, f, members, params)));
                }
            }
        }
        Ok(PatternTable { sizes, solutions })
    }

    pub fn sizes(&self) -> (usize, usize, usize) {
        self.sizes
    }

    pub fn get(&self, m: usize, f: usize, n: usize) -> &PowerSolution<T> {
        let (_, sf, sn) = self.sizes;
        &self.solutions[(m * sf + f) * sn + n]
    }

    pub fn num_feasible(&self) -> usize {
        self.solutions.iter().filter(|s| s.is_feasible()).count()
    }

    /// Feasible patterns become edges weighted by their V2I capacity.
    pub fn hypergraph(&self) -> Result<Hypergraph3<T>> {
        build_hypergraph(self.sizes, |m, f, n| self.get(m, f, n).capacity())
    }
}

/// One matched pattern with its powers.
#[derive(Debug, Clone, PartialEq)]
pub struct Assignment<T> {
    pub m: usize,
    pub f: usize,
    pub n: usize,
    pub p_c: T,
    /// V2V link ids of cluster `n`, ascending.
    pub links: Vec<usize>,
    /// Power of each entry of `links`.
    pub p_d: Vec<T>,
    pub capacity: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Allocation<T> {
    /// Matched patterns in lexicographic `(m, f, n)` order.
    pub matches: Vec<Assignment<T>>,
    pub clustering: Clustering,
    /// RB of each V2V link; `None` when its cluster is not matched.
    pub rb_of_v2v: Vec<Option<usize>>,
    pub unserved_v2i: Vec<usize>,
    pub unserved_clusters: Vec<usize>,
    pub num_rbs: usize,
}

impl<T: Real> Allocation<T> {
    /// Builds the allocation selected by `matching` from the table's powers.
    pub fn from_matching(table: &PatternTable<T>, clustering: &Clustering, matching: &Matching3D<T>) -> Self {
        let (sm, sf, sn) = table.sizes();
        let mut matches = Vec::with_capacity(matching.len());
        for e in matching.chosen() {
            let alloc = table.get(e.m, e.f, e.n).allocation().expect("matched patterns are feasible");
            matches.push(Assignment {
                m: e.m,
                f: e.f,
                n: e.n,
                p_c: alloc.p_c,
                links: clustering.members(e.n).to_vec(),
                p_d: alloc.p_d.clone(),
                capacity: alloc.capacity,
            });
        }
        let mut rb_of_v2v = vec![None; clustering.num_links()];
        for a in &matches {
            for &k in &a.links {
                rb_of_v2v[k] = Some(a.f);
            }
        }
        let unserved_v2i = (0..sm).filter(|&m| !matches.iter().any(|a| a.m == m)).collect();
        let unserved_clusters = (0..sn).filter(|&n| !matches.iter().any(|a| a.n == n)).collect();
        Allocation { matches, clustering: clustering.clone(), rb_of_v2v, unserved_v2i, unserved_clusters, num_rbs: sf }
    }

    /// Sum of the stored per-pattern capacities.
    pub fn total_weight(&self) -> T {
        self.matches.iter().fold(T::zero(), |acc, a| acc + a.capacity)
    }

    pub fn num_served_v2v(&self) -> usize {
        self.rb_of_v2v.iter().filter(|r| r.is_some()).count()
    }

    pub fn num_unserved_v2v(&self) -> usize {
        self.rb_of_v2v.len() - self.num_served_v2v()
    }
}

/// Clusters the V2V links with greedy MAX N-CUT, then allocates.
pub fn allocate<T: Real>(cs: &ChannelState<T>, config: &ScenarioConfig) -> Result<Allocation<T>> {
    let params = PowerParams::from_config(config)?;
    let clustering = max_n_cut_partition(&InterferenceGraph::from_channel(cs), config.clusters())?;
    allocate_with_clustering(cs, &clustering, &params)
}

pub fn allocate_with_clustering<T: Real>(
    cs: &ChannelState<T>,
    clustering: &Clustering,
    params: &PowerParams<T>,
) -> Result<Allocation<T>> {
    let table = PatternTable::compute(cs, clustering, params)?;
    let matching = match_3d(&table.hypergraph()?)?;
    Ok(Allocation::from_matching(&table, clustering, &matching))
}

/// Random feasible assignment: feasible patterns in random order, each taken
/// if it is disjoint from those already taken.
pub fn random_baseline<T: Real, R: Rng + ?Sized>(
    table: &PatternTable<T>,
    clustering: &Clustering,
    rng: &mut R,
) -> Result<Allocation<T>> {
    let h = table.hypergraph()?;
    let mut edges = h.edges().to_vec();
    edges.shuffle(rng);
    let mut matching = Matching3D::new();
    for e in edges {
        matching.try_insert(e);
    }
    Ok(Allocation::from_matching(table, clustering, &matching))
}

/// Sum V2I capacity recomputed from the channel: each V2I link is interfered
/// only by the V2V links sharing its RB.
pub fn sum_capacity<T: Real>(a: &Allocation<T>, cs: &ChannelState<T>) -> T {
    let mut power = vec![T::zero(); a.rb_of_v2v.len()];
    for am in &a.matches {
        for (&k, &p) in am.links.iter().zip(&am.p_d) {
            power[k] = p;
        }
    }
    a.matches
        .iter()
        .map(|am| {
            let interference: T =
                (0..power.len()).filter(|&k| a.rb_of_v2v[k] == Some(am.f)).map(|k| power[k] * cs.g_kb[k][am.f]).sum();
            let sinr = am.p_c * cs.g_mb[am.m][am.f] / (cs.sigma2_bs + interference);
            (T::one() + sinr).log2()
        })
        .fold(T::zero(), |acc, c| acc + c)
}

/// Checks every constraint of the allocation problem directly against the
/// channel and returns a description of each violation.
pub fn audit<T: Real>(a: &Allocation<T>, cs: &ChannelState<T>, params: &PowerParams<T>) -> Vec<String> {
    let mut issues = Vec::new();
    let tol = T::lit(1e-6);
    let (m_links, k_links) = (cs.num_v2i(), cs.num_v2v());
    let mut v2i_rb = vec![0usize; m_links];
    let mut rb_v2i = vec![0usize; a.num_rbs];
    let mut cluster_use = vec![0usize; a.clustering.num_clusters()];
    for am in &a.matches {
        v2i_rb[am.m] += 1;
        rb_v2i[am.f] += 1;
        cluster_use[am.n] += 1;
        if am.p_c < T::zero() || am.p_c > params.pmax_c * (T::one() + tol) {
            issues.push(format!("V2I link {} power {} outside [0, Pmax_c]", am.m, am.p_c));
        }
        if am.links != a.clustering.members(am.n) {
            issues.push(format!("match ({}, {}, {}) lists links other than its cluster", am.m, am.f, am.n));
        }
    }
    for (what, counts) in [("V2I link", &v2i_rb), ("RB", &rb_v2i), ("cluster", &cluster_use)] {
        for (i, &c) in counts.iter().enumerate() {
            if c > 1 {
                issues.push(format!("{what} {i} used {c} times"));
            }
        }
    }
    // each V2V link holds at most one RB, the one of its cluster's match
    for k in 0..k_links {
        let holders: Vec<&Assignment<T>> = a.matches.iter().filter(|am| am.links.contains(&k)).collect();
        match (holders.as_slice(), a.rb_of_v2v[k]) {
            ([], None) => {}
            ([am], Some(rb)) if am.f == rb => {}
            _ => issues.push(format!("V2V link {k} has inconsistent RB assignment")),
        }
    }
    // reliability: large-scale SINR of every served V2V link reaches gamma_bar
    for am in &a.matches {
        for (i, (&k, &p)) in am.links.iter().zip(&am.p_d).enumerate() {
            if p < T::zero() || p > params.pmax_d * (T::one() + tol) {
                issues.push(format!("V2V link {k} power {p} outside [0, Pmax_d]"));
            }
            let mut denom = cs.sigma2_veh + am.p_c * cs.alpha_mk[am.m][k];
            for (j, (&kj, &pj)) in am.links.iter().zip(&am.p_d).enumerate() {
                if j != i {
                    denom += pj * cs.alpha_kk[kj][k];
                }
            }
            let sinr = p * cs.alpha_k[k] / denom;
            if sinr < params.gamma_bar * (T::one() - tol) {
                issues.push(format!("V2V link {k} large-scale SINR {sinr} below target {}", params.gamma_bar));
            }
        }
    }
    if a.unserved_v2i != (0..m_links).filter(|&m| v2i_rb[m] == 0).collect::<Vec<_>>() {
        issues.push("unserved V2I list is inconsistent".into());
    }
    issues
}

/// One row per V2I link (empty fields when unserved) and one per served V2V
/// link. Powers in dBm.
pub fn write_allocation_csv<T: Real, W: Write>(a: &Allocation<T>, num_v2i: usize, mut out: W) -> Result<()> {
    writeln!(out, "kind,link,rb,cluster,power_dbm")?;
    for m in 0..num_v2i {
        match a.matches.iter().find(|am| am.m == m) {
            Some(am) => writeln!(out, "v2i,{m},{},{},{}", am.f, am.n, mw_to_dbm(am.p_c))?,
            None => writeln!(out, "v2i,{m},,,")?,
        }
    }
    let mut v2v: Vec<(usize, usize, usize, T)> =
        a.matches.iter().flat_map(|am| am.links.iter().zip(&am.p_d).map(move |(&k, &p)| (k, am.f, am.n, p))).collect();
    v2v.sort_by_key(|r| r.0);
    for (k, f, n, p) in v2v {
        writeln!(out, "v2v,{k},{f},{n},{}", mw_to_dbm(p))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::realize_channels;
    use crate::oracle::exhaustive_allocation;
    use crate::scenario;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn small_config(m: usize, k: usize, n: usize) -> ScenarioConfig {
        let c = ScenarioConfig { m, k, n: Some(n), ..ScenarioConfig::default() };
        c.validate().unwrap();
        c
    }

    fn drop_state(config: &ScenarioConfig, seed: u64) -> ChannelState<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let topo = scenario::generate(config, &mut rng).unwrap();
        realize_channels(&topo, config, &mut rng).unwrap()
    }

    /// Hand-built state with one V2I link, one RB and one V2V link.
    fn unit_state(alpha_k: f64, alpha_mk: f64) -> ChannelState<f64> {
        ChannelState {
            alpha_mb: vec![1e-9],
            alpha_kb: vec![1e-11],
            alpha_k: vec![alpha_k],
            alpha_mk: vec![vec![alpha_mk]],
            alpha_kk: vec![vec![0.0]],
            g_mb: vec![vec![1.5e-9]],
            g_kb: vec![vec![0.5e-11]],
            sigma2_bs: 1e-11,
            sigma2_veh: 2e-11,
        }
    }

    #[test]
    fn degenerate_single_pattern() {
        let config = small_config(1, 1, 1);
        let params = PowerParams::<f64>::from_config(&config).unwrap();
        let cs = unit_state(1e-7, 1e-12);
        let a = allocate(&cs, &config).unwrap();
        assert_eq!(a.matches.len(), 1);
        // closed form for one V2V link: P_d = gamma_bar (P_c alpha_mk + sigma2) / alpha_k
        let gb = params.gamma_bar;
        let pc_cap = (params.pmax_d * 1e-7 / gb - 2e-11) / 1e-12;
        let p_c = pc_cap.min(params.pmax_c);
        let p_d = gb * (p_c * 1e-12 + 2e-11) / 1e-7;
        let am = &a.matches[0];
        assert!((am.p_c - p_c).abs() <= 1e-12 * p_c);
        assert!((am.p_d[0] - p_d).abs() <= 1e-9 * p_d);
        assert_eq!(a.rb_of_v2v, vec![Some(0)]);
        assert!(audit(&a, &cs, &params).is_empty());
    }

    #[test]
    fn all_infeasible_leaves_everything_unserved() {
        let config = small_config(1, 1, 1);
        // direct gain so weak that even zero V2I power misses the target
        let cs = unit_state(1e-16, 1e-12);
        let a = allocate(&cs, &config).unwrap();
        assert!(a.matches.is_empty());
        assert_eq!(a.unserved_v2i, vec![0]);
        assert_eq!(a.unserved_clusters, vec![0]);
        assert_eq!(a.num_unserved_v2v(), 1);
        assert_eq!(sum_capacity(&a, &cs), 0.0);
    }

    #[test]
    fn stored_and_recomputed_capacity_agree() {
        let config = small_config(6, 15, 6);
        let params = PowerParams::from_config(&config).unwrap();
        for seed in 0..10 {
            let cs = drop_state(&config, seed);
            let a = allocate(&cs, &config).unwrap();
            let stored = a.total_weight();
            let recomputed = sum_capacity(&a, &cs);
            assert!((stored - recomputed).abs() <= 1e-9 * stored.max(1.0), "seed {seed}");
            assert!(audit(&a, &cs, &params).is_empty(), "seed {seed}: {:?}", audit(&a, &cs, &params));
        }
    }

    #[test]
    fn audit_flags_tampering() {
        let config = small_config(4, 8, 4);
        let params = PowerParams::from_config(&config).unwrap();
        let cs = drop_state(&config, 3);
        let mut a = allocate(&cs, &config).unwrap();
        assert!(!a.matches.is_empty());
        a.matches[0].p_d[0] *= 0.5;
        assert!(!audit(&a, &cs, &params).is_empty());
        let mut b = allocate(&cs, &config).unwrap();
        let dup = b.matches[0].clone();
        b.matches.push(dup);
        assert!(audit(&b, &cs, &params).iter().any(|s| s.contains("used 2 times")));
    }

    #[test]
    fn half_of_exhaustive_search() {
        let config = small_config(2, 4, 2);
        let params = PowerParams::from_config(&config).unwrap();
        for seed in 0..5 {
            let cs = drop_state(&config, 100 + seed);
            let clustering = max_n_cut_partition(&InterferenceGraph::from_channel(&cs), 2).unwrap();
            let a = allocate_with_clustering(&cs, &clustering, &params).unwrap();
            let best = exhaustive_allocation(&cs, &clustering, &params);
            let got = sum_capacity(&a, &cs);
            assert!(got >= 0.5 * best - 1e-6 * best.max(1.0), "seed {seed}: {got} vs {best}");
            assert!(got <= best * (1.0 + 1e-4) + 1e-9, "seed {seed}: {got} exceeds {best}");
        }
    }

    #[test]
    fn baseline_is_feasible_and_dominated_on_average() {
        let config = small_config(5, 12, 5);
        let params = PowerParams::from_config(&config).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let (mut ours, mut base) = (0.0, 0.0);
        for seed in 0..10 {
            let cs = drop_state(&config, 200 + seed);
            let clustering = max_n_cut_partition(&InterferenceGraph::from_channel(&cs), 5).unwrap();
            let table = PatternTable::compute(&cs, &clustering, &params).unwrap();
            let b = random_baseline(&table, &clustering, &mut rng).unwrap();
            assert!(audit(&b, &cs, &params).is_empty());
            base += sum_capacity(&b, &cs);
            ours += sum_capacity(&allocate_with_clustering(&cs, &clustering, &params).unwrap(), &cs);
        }
        assert!(ours >= base);
    }

    #[test]
    fn rejects_empty_cluster() {
        let config = small_config(2, 3, 2);
        let params = PowerParams::from_config(&config).unwrap();
        let cs = drop_state(&config, 1);
        let clustering = Clustering::from_assignment(vec![0, 0, 0], 2);
        assert!(allocate_with_clustering(&cs, &clustering, &params).is_err());
    }

    #[test]
    fn csv_layout() {
        let clustering = Clustering::from_assignment(vec![0, 1, 0], 2);
        let a = Allocation::<f64> {
            matches: vec![Assignment {
                m: 1,
                f: 0,
                n: 0,
                p_c: 100.0,
                links: vec![0, 2],
                p_d: vec![10.0, 1.0],
                capacity: 1.0,
            }],
            clustering,
            rb_of_v2v: vec![Some(0), None, Some(0)],
            unserved_v2i: vec![0],
            unserved_clusters: vec![1],
            num_rbs: 2,
        };
        let mut buf = Vec::new();
        write_allocation_csv(&a, 2, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text, "kind,link,rb,cluster,power_dbm\nv2i,0,,,\nv2i,1,0,0,20\nv2v,0,0,0,10\nv2v,2,0,0,0\n");
    }
}
