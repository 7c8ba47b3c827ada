//! Freeway drop geometry and V2I/V2V link selection.
//!
//! The base station sits at the origin. The freeway is a bundle of straight
//! lanes parallel to the x axis, centred on the line `y = bs_to_highway_m`,
//! and spans the chord that line cuts from the cell disc. Vehicles falling
//! outside the disc are dropped.

mod config;

pub use config::{ScenarioConfig, CONFIG_KEYS};

use rand::seq::index::sample;
use rand::Rng;
use rand_distr::{Distribution, Exp};

use crate::error::{Error, Result};

/// Number of fresh drops attempted before declaring the config inconsistent.
pub const MAX_DROP_RETRIES: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Direction {
    /// Travelling towards negative x.
    West,
    /// Travelling towards positive x.
    East,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Vehicle {
    pub lane: usize,
    pub x: f64,
    pub y: f64,
    pub direction: Direction,
}

impl Vehicle {
    pub fn distance_to(&self, other: &Vehicle) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

/// One drop: vehicle positions plus the chosen links. Vehicle ids are indices
/// into `vehicles`.
#[derive(Debug, Clone, PartialEq)]
pub struct Topology {
    pub vehicles: Vec<Vehicle>,
    /// Transmitting vehicle of each V2I link, in ascending vehicle id.
    pub v2i_links: Vec<usize>,
    /// `(tx, rx)` vehicle ids of each V2V link.
    pub v2v_links: Vec<(usize, usize)>,
    pub bs_position: [f64; 2],
}

impl Topology {
    pub fn num_v2i(&self) -> usize {
        self.v2i_links.len()
    }

    pub fn num_v2v(&self) -> usize {
        self.v2v_links.len()
    }
}

/// Half length of the freeway chord through the cell.
pub fn half_chord_m(config: &ScenarioConfig) -> f64 {
    (config.cell_radius_m.powi(2) - config.bs_to_highway_m.powi(2)).sqrt()
}

/// Lateral (y) coordinate of each lane centre. Lanes `0..L` head west, lanes
/// `L..2L` head east.
pub fn lane_offsets(config: &ScenarioConfig) -> Vec<f64> {
    let total = 2 * config.lanes_per_direction;
    (0..total)
        .map(|l| config.bs_to_highway_m + (l as f64 - config.lanes_per_direction as f64 + 0.5) * config.lane_width_m)
        .collect()
}

/// Poisson points along one lane over `[-half, half]`; gaps are exponential
/// with mean `mean_gap`.
pub fn poisson_lane<R: Rng + ?Sized>(rng: &mut R, half: f64, mean_gap: f64) -> Vec<f64> {
    let gap = Exp::new(1.0 / mean_gap).expect("positive mean gap");
    let mut out = Vec::new();
    let mut x = -half + gap.sample(rng);
    while x <= half {
        out.push(x);
        x += gap.sample(rng);
    }
    out
}

fn drop_once<R: Rng + ?Sized>(config: &ScenarioConfig, rng: &mut R) -> Vec<Vehicle> {
    let half = half_chord_m(config);
    let mean_gap = config.mean_gap_m();
    let r2 = config.cell_radius_m.powi(2);
    let mut vehicles = Vec::new();
    for (lane, &y) in lane_offsets(config).iter().enumerate() {
        let direction = if lane < config.lanes_per_direction { Direction::West } else { Direction::East };
        for x in poisson_lane(rng, half, mean_gap) {
            if x * x + y * y <= r2 {
                vehicles.push(Vehicle { lane, x, y, direction });
            }
        }
    }
    vehicles
}

/// Drops vehicles on every lane by an independent Poisson process. Retries
/// with fresh randomness until at least `M + K` vehicles are present.
pub fn drop_vehicles<R: Rng + ?Sized>(config: &ScenarioConfig, rng: &mut R) -> Result<Topology> {
    config.validate()?;
    let needed = config.m + config.k;
    let mut got = 0;
    for _ in 0..MAX_DROP_RETRIES {
        let vehicles = drop_once(config, rng);
        got = vehicles.len();
        if got >= needed {
            return Ok(Topology { vehicles, v2i_links: Vec::new(), v2v_links: Vec::new(), bs_position: [0.0, 0.0] });
        }
    }
    Err(Error::TooFewVehicles { needed, got, retries: MAX_DROP_RETRIES })
}

/// Picks `M` V2I transmitters uniformly and pairs each with its nearest
/// non-V2I neighbours to form the `K` V2V links. The V2I vehicle transmits
/// on its V2V links; the first `K mod M` V2I vehicles get one extra link.
pub fn select_links<R: Rng + ?Sized>(topology: &Topology, config: &ScenarioConfig, rng: &mut R) -> Result<Topology> {
    let (m, k) = (config.m, config.k);
    let n_veh = topology.vehicles.len();
    if n_veh < m {
        return Err(Error::TooFewVehicles { needed: m, got: n_veh, retries: 0 });
    }
    let mut v2i: Vec<usize> = sample(rng, n_veh, m).into_vec();
    v2i.sort_unstable();
    let mut is_v2i = vec![false; n_veh];
    for &v in &v2i {
        is_v2i[v] = true;
    }
    let candidates: Vec<usize> = (0..n_veh).filter(|&v| !is_v2i[v]).collect();

    let (base, extra) = (k / m, k % m);
    let mut v2v = Vec::with_capacity(k);
    for (idx, &tx) in v2i.iter().enumerate() {
        let wanted = base + usize::from(idx < extra);
        if wanted > candidates.len() {
            return Err(Error::NotEnoughV2vPairs { wanted: k, formed: v2v.len() + candidates.len() });
        }
        let me = &topology.vehicles[tx];
        let mut by_distance: Vec<(f64, usize)> =
            candidates.iter().map(|&c| (me.distance_to(&topology.vehicles[c]), c)).collect();
        by_distance.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        v2v.extend(by_distance.iter().take(wanted).map(|&(_, rx)| (tx, rx)));
    }
    Ok(Topology { v2i_links: v2i, v2v_links: v2v, ..topology.clone() })
}

/// `drop_vehicles` followed by `select_links` on the same stream.
pub fn generate<R: Rng + ?Sized>(config: &ScenarioConfig, rng: &mut R) -> Result<Topology> {
    let t = drop_vehicles(config, rng)?;
    select_links(&t, config, rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn ks_exponential(samples: &mut [f64], mean: f64) -> f64 {
        samples.sort_by(f64::total_cmp);
        let n = samples.len() as f64;
        samples
            .iter()
            .enumerate()
            .map(|(i, &x)| {
                let cdf = 1.0 - (-x / mean).exp();
                (cdf - i as f64 / n).abs().max(((i + 1) as f64 / n - cdf).abs())
            })
            .fold(0.0, f64::max)
    }

    #[test]
    fn gaps_are_exponential() {
        let cfg = ScenarioConfig::default();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut gaps = Vec::new();
        while gaps.len() < 10_000 {
            let t = drop_vehicles(&cfg, &mut rng).unwrap();
            for lane in 0..2 * cfg.lanes_per_direction {
                let mut xs: Vec<f64> = t.vehicles.iter().filter(|v| v.lane == lane).map(|v| v.x).collect();
                xs.sort_by(f64::total_cmp);
                gaps.extend(xs.windows(2).map(|w| w[1] - w[0]));
            }
        }
        gaps.truncate(10_000);
        let d = ks_exponential(&mut gaps, cfg.mean_gap_m());
        assert!(d < 0.05, "KS statistic {d}");
    }

    #[test]
    fn vehicles_inside_cell_and_on_lanes() {
        let cfg = ScenarioConfig::default();
        let lanes = lane_offsets(&cfg);
        assert_eq!(lanes.len(), 6);
        let t = drop_vehicles(&cfg, &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
        assert!(t.vehicles.len() >= cfg.m + cfg.k);
        for v in &t.vehicles {
            assert!(v.x.hypot(v.y) <= cfg.cell_radius_m + 1e-9);
            assert_eq!(v.y, lanes[v.lane]);
        }
    }

    #[test]
    fn link_counts_and_uniqueness() {
        let mut cfg = ScenarioConfig::default();
        for (m, k) in [(10, 30), (1, 1), (4, 10), (3, 3)] {
            cfg.m = m;
            cfg.k = k;
            cfg.n = Some(m.min(k));
            let mut rng = ChaCha8Rng::seed_from_u64(m as u64 * 100 + k as u64);
            let t = generate(&cfg, &mut rng).unwrap();
            assert_eq!(t.num_v2i(), m);
            assert_eq!(t.num_v2v(), k);
            let mut pairs = t.v2v_links.clone();
            pairs.sort_unstable();
            pairs.dedup();
            assert_eq!(pairs.len(), k);
            for &(tx, rx) in &t.v2v_links {
                assert_ne!(tx, rx);
                assert!(t.v2i_links.contains(&tx));
                assert!(!t.v2i_links.contains(&rx));
            }
            // per-V2I link counts: ceil or floor of K/M, extras first
            for (idx, tx) in t.v2i_links.iter().enumerate() {
                let count = t.v2v_links.iter().filter(|l| l.0 == *tx).count();
                assert_eq!(count, k / m + usize::from(idx < k % m));
            }
        }
    }

    #[test]
    fn ten_by_thirty_gives_three_each() {
        let cfg = ScenarioConfig::default();
        let t = generate(&cfg, &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
        for tx in &t.v2i_links {
            assert_eq!(t.v2v_links.iter().filter(|l| l.0 == *tx).count(), 3);
        }
    }

    #[test]
    fn nearest_neighbours_match_exhaustive_scan() {
        let cfg = ScenarioConfig::default();
        for seed in 0..20 {
            let t = generate(&cfg, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
            for &tx in &t.v2i_links {
                let rxs: Vec<usize> = t.v2v_links.iter().filter(|l| l.0 == tx).map(|l| l.1).collect();
                // every chosen receiver is at least as close as every non-chosen non-V2I vehicle
                let worst_chosen = rxs.iter().map(|&r| t.vehicles[tx].distance_to(&t.vehicles[r])).fold(0.0, f64::max);
                for other in 0..t.vehicles.len() {
                    if other == tx || t.v2i_links.contains(&other) || rxs.contains(&other) {
                        continue;
                    }
                    assert!(t.vehicles[tx].distance_to(&t.vehicles[other]) >= worst_chosen);
                }
            }
        }
    }

    #[test]
    fn single_link_goes_to_nearest() {
        let cfg = ScenarioConfig { m: 1, k: 1, ..ScenarioConfig::default() };
        let t = generate(&cfg, &mut ChaCha8Rng::seed_from_u64(8)).unwrap();
        let (tx, rx) = t.v2v_links[0];
        let best = (0..t.vehicles.len())
            .filter(|&v| v != tx)
            .min_by(|&a, &b| {
                t.vehicles[tx].distance_to(&t.vehicles[a]).total_cmp(&t.vehicles[tx].distance_to(&t.vehicles[b]))
            })
            .unwrap();
        assert_eq!(rx, best);
    }

    #[test]
    fn seeded_drops_are_identical() {
        let cfg = ScenarioConfig::default();
        let a = generate(&cfg, &mut ChaCha8Rng::seed_from_u64(42)).unwrap();
        let b = generate(&cfg, &mut ChaCha8Rng::seed_from_u64(42)).unwrap();
        assert_eq!(a, b);
        let c = generate(&cfg, &mut ChaCha8Rng::seed_from_u64(43)).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn impossible_config_errors_out() {
        let cfg = ScenarioConfig { cell_radius_m: 40.0, bs_to_highway_m: 35.0, k: 300, ..ScenarioConfig::default() };
        let err = drop_vehicles(&cfg, &mut ChaCha8Rng::seed_from_u64(1)).unwrap_err();
        assert!(matches!(err, Error::TooFewVehicles { retries: MAX_DROP_RETRIES, .. }));
    }

    #[test]
    fn too_few_receivers_errors_out() {
        let mut cfg = ScenarioConfig::default();
        let t = drop_vehicles(&cfg, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        cfg.m = t.vehicles.len() - 1;
        cfg.k = 2 * cfg.m;
        cfg.n = Some(1);
        let err = select_links(&t, &cfg, &mut ChaCha8Rng::seed_from_u64(2)).unwrap_err();
        assert!(matches!(err, Error::NotEnoughV2vPairs { .. }));
    }
}
