//! Brute-force reference solvers used by the test suites and the `selftest`
//! command. None of them shares code with the routines they check.

use rand::seq::index::sample;
use rand::Rng;

use crate::channel::{large_scale, realize_channels, ChannelState};
use crate::error::Result;
use crate::matching::{Edge, Hypergraph3};
use crate::partition::{max_n_cut_partition, Clustering, InterferenceGraph};
use crate::pipeline::PatternTable;
use crate::power::{PowerParams, PowerProblem};
use crate::real::Real;
use crate::scenario::{self, ScenarioConfig};

/// Best point found by a reference power search.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleSolution {
    pub capacity: f64,
    pub p_c: f64,
    pub p_d: Vec<f64>,
}

/// `f64` copy of a power problem so every oracle runs at full precision.
struct Instance {
    alpha_m: Vec<f64>,
    alpha_diag: Vec<f64>,
    alpha_cross: Vec<Vec<f64>>,
    g_mb: f64,
    g_kb: Vec<f64>,
    sigma2_bs: f64,
    sigma2_veh: f64,
    gamma_bar: f64,
    pmax_c: f64,
    pmax_d: f64,
}

impl Instance {
    fn new<T: Real>(p: &PowerProblem<T>) -> Self {
        let v = |x: &[T]| x.iter().map(|a| a.to_f64_lossy()).collect::<Vec<_>>();
        Instance {
            alpha_m: v(&p.alpha_m),
            alpha_diag: v(&p.alpha_diag),
            alpha_cross: p.alpha_cross.iter().map(|r| v(r)).collect(),
            g_mb: p.g_mb.to_f64_lossy(),
            g_kb: v(&p.g_kb),
            sigma2_bs: p.sigma2_bs.to_f64_lossy(),
            sigma2_veh: p.sigma2_veh.to_f64_lossy(),
            gamma_bar: p.gamma_bar.to_f64_lossy(),
            pmax_c: p.pmax_c.to_f64_lossy(),
            pmax_d: p.pmax_d.to_f64_lossy(),
        }
    }

    fn size(&self) -> usize {
        self.alpha_diag.len()
    }

    fn objective(&self, p_c: f64, p_d: &[f64]) -> f64 {
        let i: f64 = p_d.iter().zip(&self.g_kb).map(|(p, g)| p * g).sum();
        (1.0 + p_c * self.g_mb / (self.sigma2_bs + i)).log2()
    }

    /// Every V2V large-scale SINR reaches the target, all powers in the box.
    fn feasible(&self, p_c: f64, p_d: &[f64]) -> bool {
        if !(0.0..=self.pmax_c).contains(&p_c) || p_d.iter().any(|p| !(0.0..=self.pmax_d).contains(p)) {
            return false;
        }
        (0..self.size()).all(|i| {
            let cross: f64 = (0..self.size()).filter(|&j| j != i).map(|j| p_d[j] * self.alpha_cross[j][i]).sum();
            p_d[i] * self.alpha_diag[i] >= self.gamma_bar * (self.sigma2_veh + p_c * self.alpha_m[i] + cross)
        })
    }

    /// Componentwise-smallest V2V powers meeting every SINR target at V2I
    /// power `p_c`, by Jacobi fixed-point iteration from zero. The iterates
    /// increase monotonically, so crossing the cap proves infeasibility.
    fn min_v2v_powers(&self, p_c: f64) -> Option<Vec<f64>> {
        let s = self.size();
        let mut p = vec![0.0; s];
        for _ in 0..20_000 {
            let next: Vec<f64> = (0..s)
                .map(|i| {
                    let cross: f64 = (0..s).filter(|&j| j != i).map(|j| p[j] * self.alpha_cross[j][i]).sum();
                    self.gamma_bar * (self.sigma2_veh + p_c * self.alpha_m[i] + cross) / self.alpha_diag[i]
                })
                .collect();
            if next.iter().any(|&x| !x.is_finite() || x > self.pmax_d * (1.0 + 1e-12)) {
                return None;
            }
            let scale = next.iter().fold(0.0f64, |a, &b| a.max(b));
            let delta = next.iter().zip(&p).fold(0.0f64, |a, (x, y)| a.max((x - y).abs()));
            p = next;
            if delta <= 1e-15 * scale {
                return Some(p.into_iter().map(|x| x.min(self.pmax_d)).collect());
            }
        }
        None
    }
}

/// Reference optimum of one sharing pattern: a 2001-point grid over the V2I
/// power, refined by local re-gridding, where each candidate V2I power is
/// paired with the least V2V power vector meeting every SINR target.
/// Returns `None` when no grid point is feasible.
pub fn power_oracle<T: Real>(problem: &PowerProblem<T>) -> Option<OracleSolution> {
    let inst = Instance::new(problem);
    let eval = |p_c: f64| inst.min_v2v_powers(p_c).map(|p_d| (inst.objective(p_c, &p_d), p_d));

    let coarse = 2000;
    let step = inst.pmax_c / coarse as f64;
    let mut best: Option<(f64, f64, Vec<f64>)> = None;
    for i in 0..=coarse {
        let p_c = step * i as f64;
        if let Some((obj, p_d)) = eval(p_c) {
            if best.as_ref().is_none_or(|b| obj > b.0) {
                best = Some((obj, p_c, p_d));
            }
        }
    }
    let (mut obj, mut p_c, mut p_d) = best?;
    let mut half = step;
    let fine = 20;
    while half > 1e-14 * inst.pmax_c.max(f64::MIN_POSITIVE) {
        let lo = (p_c - half).max(0.0);
        let hi = (p_c + half).min(inst.pmax_c);
        let mut moved = false;
        for i in 0..=fine {
            let cand = lo + (hi - lo) * i as f64 / fine as f64;
            if let Some((o, d)) = eval(cand) {
                if o > obj {
                    (obj, p_c, p_d) = (o, cand, d);
                    moved = true;
                }
            }
        }
        if !moved {
            half *= 0.5;
        }
    }
    Some(OracleSolution { capacity: obj, p_c, p_d })
}

/// Grid search over the whole power box `[0, Pmax_c] x [0, Pmax_d]^s`,
/// checking every SINR constraint directly. After the initial grid the
/// window recentres on any improvement and halves otherwise. The result is a
/// feasible point, so its capacity is a lower bound on the true optimum.
pub fn power_box_search<T: Real>(problem: &PowerProblem<T>) -> Option<OracleSolution> {
    let inst = Instance::new(problem);
    let dims = inst.size() + 1;
    let (coarse, fine) = match dims {
        2 => (400, 40),
        3 => (60, 16),
        4 => (24, 8),
        _ => (8, 4),
    };
    let upper: Vec<f64> = std::iter::once(inst.pmax_c).chain(std::iter::repeat_n(inst.pmax_d, dims - 1)).collect();

    let scan = |lo: &[f64], hi: &[f64], pts: usize, best: &mut Option<(f64, Vec<f64>)>| -> bool {
        let mut idx = vec![0usize; dims];
        let mut point = vec![0.0; dims];
        let mut improved = false;
        loop {
            for d in 0..dims {
                point[d] = lo[d] + (hi[d] - lo[d]) * idx[d] as f64 / pts as f64;
            }
            if inst.feasible(point[0], &point[1..]) {
                let obj = inst.objective(point[0], &point[1..]);
                if best.as_ref().is_none_or(|b| obj > b.0) {
                    *best = Some((obj, point.clone()));
                    improved = true;
                }
            }
            let mut d = 0;
            loop {
                if d == dims {
                    return improved;
                }
                idx[d] += 1;
                if idx[d] <= pts {
                    break;
                }
                idx[d] = 0;
                d += 1;
            }
        }
    };

    let mut best = None;
    scan(&vec![0.0; dims], &upper, coarse, &mut best);
    best.as_ref()?;
    let mut half: Vec<f64> = upper.iter().map(|u| u / coarse as f64).collect();
    for _ in 0..5_000 {
        if half.iter().zip(&upper).all(|(h, u)| *h <= 1e-13 * u) {
            break;
        }
        let center = best.as_ref().map(|b| b.1.clone()).unwrap_or_default();
        let lo: Vec<f64> = center.iter().zip(&half).map(|(c, h)| (c - h).max(0.0)).collect();
        let hi: Vec<f64> = center.iter().zip(&half).zip(&upper).map(|((c, h), u)| (c + h).min(*u)).collect();
        if !scan(&lo, &hi, fine, &mut best) {
            half.iter_mut().for_each(|h| *h *= 0.5);
        }
    }
    best.map(|(capacity, p)| OracleSolution { capacity, p_c: p[0], p_d: p[1..].to_vec() })
}

/// A power problem drawn from a fresh drop of `config`: random V2I link,
/// random RB and a random cluster of `size` distinct V2V links.
pub fn random_power_problem<R: Rng + ?Sized>(
    rng: &mut R,
    config: &ScenarioConfig,
    size: usize,
) -> Result<PowerProblem<f64>> {
    let topo = scenario::generate(config, rng)?;
    let cs = realize_channels::<f64, R>(&topo, config, rng)?;
    let params = PowerParams::from_config(config)?;
    let m = rng.random_range(0..config.m);
    let f = rng.random_range(0..config.rbs());
    let mut cluster = sample(rng, config.k, size.min(config.k)).into_vec();
    cluster.sort_unstable();
    Ok(PowerProblem::from_channel(&cs, m, f, &cluster, &params))
}

/// Best sum capacity over every partial assignment of V2I links to distinct
/// RBs and distinct clusters, with each pattern's capacity taken from
/// [`power_oracle`]. Exponential; meant for a handful of links.
pub fn exhaustive_allocation<T: Real>(cs: &ChannelState<T>, clustering: &Clustering, params: &PowerParams<T>) -> f64 {
    let (sm, sf, sn) = (cs.num_v2i(), cs.num_rbs(), clustering.num_clusters());
    let value: Vec<Vec<Vec<Option<f64>>>> = (0..sm)
        .map(|m| {
            (0..sf)
                .map(|f| {
                    (0..sn)
                        .map(|n| {
                            let p = PowerProblem::from_channel(cs, m, f, clustering.members(n), params);
                            power_oracle(&p).map(|s| s.capacity)
                        })
                        .collect()
                })
                .collect()
        })
        .collect();

    fn search(value: &[Vec<Vec<Option<f64>>>], m: usize, used_f: &mut Vec<bool>, used_n: &mut Vec<bool>) -> f64 {
        if m == value.len() {
            return 0.0;
        }
        let mut best = search(value, m + 1, used_f, used_n);
        for f in 0..used_f.len() {
            for n in 0..used_n.len() {
                let Some(v) = value[m][f][n] else { continue };
                if used_f[f] || used_n[n] {
                    continue;
                }
                used_f[f] = true;
                used_n[n] = true;
                best = best.max(v + search(value, m + 1, used_f, used_n));
                used_f[f] = false;
                used_n[n] = false;
            }
        }
        best
    }
    search(&value, 0, &mut vec![false; sf], &mut vec![false; sn])
}

/// Complete hypergraph on `sizes` with i.i.d. `U(0, 1)` weights.
pub fn random_hypergraph<R: Rng + ?Sized>(rng: &mut R, sizes: (usize, usize, usize)) -> Hypergraph3<f64> {
    let mut edges = Vec::with_capacity(sizes.0 * sizes.1 * sizes.2);
    for m in 0..sizes.0 {
        for f in 0..sizes.1 {
            for n in 0..sizes.2 {
                edges.push(Edge { m, f, n, weight: rng.random::<f64>() });
            }
        }
    }
    Hypergraph3::new(sizes, edges).expect("complete hypergraph is well formed")
}

/// 3x3x3 instance where the heaviest edge overlaps three pairwise disjoint
/// edges, one per layer, whose total is nearly three times its weight. A
/// sprinkling of light edges fills the rest. Greedy by weight lands near 1/3
/// of the optimum here.
pub fn adversarial_hypergraph<R: Rng + ?Sized>(rng: &mut R) -> Hypergraph3<f64> {
    let pick3 = |rng: &mut R| -> [usize; 3] {
        let mut p = [0, 1, 2];
        for i in (1..3).rev() {
            p.swap(i, rng.random_range(0..=i));
        }
        p
    };
    let (pm, pf, pn) = (pick3(rng), pick3(rng), pick3(rng));
    // centre (pm0, pf0, pn0); petal i shares exactly coordinate i with it
    let centre = (pm[0], pf[0], pn[0]);
    let petals = [(pm[0], pf[1], pn[1]), (pm[1], pf[0], pn[2]), (pm[2], pf[2], pn[0])];
    let mut edges = vec![Edge { m: centre.0, f: centre.1, n: centre.2, weight: 1.0 + rng.random_range(0.01..0.5) }];
    for &(m, f, n) in &petals {
        edges.push(Edge { m, f, n, weight: rng.random_range(0.9..1.0) });
    }
    for m in 0..3 {
        for f in 0..3 {
            for n in 0..3 {
                let key = (m, f, n);
                if key != centre && !petals.contains(&key) && rng.random_bool(0.3) {
                    edges.push(Edge { m, f, n, weight: rng.random_range(0.0..0.3) });
                }
            }
        }
    }
    Hypergraph3::new((3, 3, 3), edges).expect("adversarial hypergraph is well formed")
}

/// V2V interference graph of a fresh drop of `config`.
pub fn drop_interference_graph<R: Rng + ?Sized>(
    rng: &mut R,
    config: &ScenarioConfig,
) -> Result<InterferenceGraph<f64>> {
    let topo = scenario::generate(config, rng)?;
    let cs = large_scale::<f64, R>(&topo, config, rng)?;
    Ok(InterferenceGraph::from_channel(&cs))
}

/// Matching hypergraph the allocator builds for a fresh drop of `config`.
pub fn pipeline_hypergraph<R: Rng + ?Sized>(rng: &mut R, config: &ScenarioConfig) -> Result<Hypergraph3<f64>> {
    let topo = scenario::generate(config, rng)?;
    let cs = realize_channels::<f64, R>(&topo, config, rng)?;
    let params = PowerParams::from_config(config)?;
    let clustering = max_n_cut_partition(&InterferenceGraph::from_channel(&cs), config.clusters())?;
    PatternTable::compute(&cs, &clustering, &params)?.hypergraph()
}
