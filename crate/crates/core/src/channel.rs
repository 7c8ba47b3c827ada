//! Large-scale gains and Rayleigh fast fading for every link of a drop.
//!
//! Mobile links (V2V direct, V2I to V2V receiver, V2V to V2V receiver) keep
//! only their large-scale gain here: the controller never sees their fast
//! fading. Links that end at the base station additionally carry one fading
//! realization per resource block.
//!
//! V2I path loss: `128.1 + 37.6 log10(d_km)` on the 3-D BS distance.
//!
//! V2V path loss: WINNER+ B1 LOS with effective antenna heights `h - 1 m`.
//! Below the breakpoint `d_bp = 4 (h_tx-1)(h_rx-1) fc / c` the near slope
//! `22.7 log10(d) + 41.0 + 20 log10(fc/5)` applies (fc in GHz, d in m); beyond
//! it the loss grows at 40 dB/decade anchored at `PL(d_bp)`, so the curve is
//! continuous. Separations under 3 m use the 3 m value.

use std::io::Write;

use rand::Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};

use crate::error::{Error, Result};
use crate::real::{db_to_linear, dbm_to_mw, Real};
use crate::scenario::{ScenarioConfig, Topology};

const SPEED_OF_LIGHT: f64 = 3.0e8;
const V2V_MIN_DISTANCE_M: f64 = 3.0;

pub fn pathloss_v2i_db<T: Real>(d_km: T) -> Result<T> {
    if d_km.is_nan() || d_km <= T::zero() {
        return Err(Error::NonPositiveDistance(d_km.to_f64_lossy()));
    }
    Ok(T::lit(128.1) + T::lit(37.6) * d_km.log10())
}

/// Breakpoint distance in metres of the B1 LOS model.
pub fn v2v_breakpoint_m<T: Real>(fc_ghz: T, heights: (T, T)) -> T {
    let one = T::one();
    T::lit(4.0) * (heights.0 - one) * (heights.1 - one) * fc_ghz * T::lit(1e9) / T::lit(SPEED_OF_LIGHT)
}

fn b1_near_slope<T: Real>(d_m: T, fc_ghz: T) -> T {
    T::lit(22.7) * d_m.log10() + T::lit(41.0) + T::lit(20.0) * (fc_ghz / T::lit(5.0)).log10()
}

pub fn pathloss_v2v_db<T: Real>(d_m: T, fc_ghz: T, heights: (T, T)) -> Result<T> {
    if d_m.is_nan() || d_m <= T::zero() {
        return Err(Error::NonPositiveDistance(d_m.to_f64_lossy()));
    }
    let d = d_m.max(T::lit(V2V_MIN_DISTANCE_M));
    let d_bp = v2v_breakpoint_m(fc_ghz, heights);
    if d_bp <= T::zero() || d <= d_bp {
        Ok(b1_near_slope(d, fc_ghz))
    } else {
        Ok(b1_near_slope(d_bp, fc_ghz) + T::lit(40.0) * (d / d_bp).log10())
    }
}

/// Linear gain from path loss, shadowing and summed antenna gains (all dB).
pub fn large_scale_gain<T: Real>(pl_db: T, shadow_db: T, antenna_gains_dbi: T) -> T {
    db_to_linear(-pl_db - shadow_db + antenna_gains_dbi)
}

/// `|h|^2` for `h ~ CN(0, 1)`: unit-mean exponential.
pub fn draw_fading_power<T: Real, R: Rng + ?Sized>(rng: &mut R) -> T {
    let x: f64 = Exp1.sample(rng);
    T::lit(x)
}

fn draw_shadow_db<R: Rng + ?Sized>(rng: &mut R, std_db: f64) -> f64 {
    let z: f64 = StandardNormal.sample(rng);
    z * std_db
}

/// Channel knowledge for one drop, in linear units (powers in mW).
///
/// Indices: `m` over V2I links, `k` over V2V links, `f` over resource blocks.
/// `alpha_kk[j][i]` is the gain from V2V transmitter `j` to V2V receiver `i`;
/// its diagonal is zero and unused.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelState<T> {
    pub alpha_mb: Vec<T>,
    pub alpha_kb: Vec<T>,
    pub alpha_k: Vec<T>,
    pub alpha_mk: Vec<Vec<T>>,
    pub alpha_kk: Vec<Vec<T>>,
    pub g_mb: Vec<Vec<T>>,
    pub g_kb: Vec<Vec<T>>,
    pub sigma2_bs: T,
    pub sigma2_veh: T,
}

impl<T: Real> ChannelState<T> {
    pub fn num_v2i(&self) -> usize {
        self.alpha_mb.len()
    }

    pub fn num_v2v(&self) -> usize {
        self.alpha_k.len()
    }

    pub fn num_rbs(&self) -> usize {
        self.g_mb.first().map_or(0, Vec::len)
    }

    /// Dumps every large-scale gain as `kind,i,j,alpha` rows.
    pub fn write_alpha_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "kind,i,j,alpha")?;
        for (m, a) in self.alpha_mb.iter().enumerate() {
            writeln!(w, "mB,{m},,{a}")?;
        }
        for (k, a) in self.alpha_kb.iter().enumerate() {
            writeln!(w, "kB,{k},,{a}")?;
        }
        for (k, a) in self.alpha_k.iter().enumerate() {
            writeln!(w, "k,{k},,{a}")?;
        }
        for (m, row) in self.alpha_mk.iter().enumerate() {
            for (k, a) in row.iter().enumerate() {
                writeln!(w, "mk,{m},{k},{a}")?;
            }
        }
        for (j, row) in self.alpha_kk.iter().enumerate() {
            for (i, a) in row.iter().enumerate() {
                if i != j {
                    writeln!(w, "kk,{j},{i},{a}")?;
                }
            }
        }
        Ok(())
    }
}

/// Effective receiver noise powers `(bs, vehicle)` in mW: thermal noise plus
/// the receiver noise figure.
pub fn noise_powers<T: Real>(config: &ScenarioConfig) -> (T, T) {
    (
        dbm_to_mw(T::lit(config.noise_dbm + config.bs_noise_figure_db)),
        dbm_to_mw(T::lit(config.noise_dbm + config.veh_noise_figure_db)),
    )
}

fn bs_distance_km(topology: &Topology, config: &ScenarioConfig, vehicle: usize) -> f64 {
    let v = &topology.vehicles[vehicle];
    let [bx, by] = topology.bs_position;
    let dh = config.bs_height_m - config.veh_height_m;
    let d = ((v.x - bx).powi(2) + (v.y - by).powi(2) + dh * dh).sqrt();
    d / 1000.0
}

/// Draws shadowing for every link and fills all large-scale gains. The BS
/// fading columns are sized but left at their large-scale value; call
/// [`draw_bs_fading`] to realize them.
pub fn large_scale<T: Real, R: Rng + ?Sized>(
    topology: &Topology,
    config: &ScenarioConfig,
    rng: &mut R,
) -> Result<ChannelState<T>> {
    let (m_links, k_links, rbs) = (topology.num_v2i(), topology.num_v2v(), config.rbs());
    let fc = config.carrier_freq_ghz;
    let hv = config.veh_height_m;
    let bs_link_gain = config.bs_gain_dbi + config.veh_gain_dbi;
    let v2v_link_gain = 2.0 * config.veh_gain_dbi;

    let v2i_gain = |rng: &mut R, veh: usize| -> Result<T> {
        let pl = pathloss_v2i_db(bs_distance_km(topology, config, veh))?;
        let sh = draw_shadow_db(rng, config.shadow_std_v2i_db);
        Ok(T::lit(large_scale_gain(pl, sh, bs_link_gain)))
    };
    let v2v_gain = |rng: &mut R, tx: usize, rx: usize| -> Result<T> {
        let d = topology.vehicles[tx].distance_to(&topology.vehicles[rx]);
        let pl = pathloss_v2v_db(d, fc, (hv, hv))?;
        let sh = draw_shadow_db(rng, config.shadow_std_v2v_db);
        Ok(T::lit(large_scale_gain(pl, sh, v2v_link_gain)))
    };

    let alpha_mb = topology.v2i_links.iter().map(|&v| v2i_gain(rng, v)).collect::<Result<Vec<_>>>()?;
    let alpha_kb = topology.v2v_links.iter().map(|&(tx, _)| v2i_gain(rng, tx)).collect::<Result<Vec<_>>>()?;
    let alpha_k = topology.v2v_links.iter().map(|&(tx, rx)| v2v_gain(rng, tx, rx)).collect::<Result<Vec<_>>>()?;
    let mut alpha_mk = vec![vec![T::zero(); k_links]; m_links];
    for (m, &tx) in topology.v2i_links.iter().enumerate() {
        for (k, &(_, rx)) in topology.v2v_links.iter().enumerate() {
            alpha_mk[m][k] = v2v_gain(rng, tx, rx)?;
        }
    }
    let mut alpha_kk = vec![vec![T::zero(); k_links]; k_links];
    for (j, &(tx, _)) in topology.v2v_links.iter().enumerate() {
        for (i, &(_, rx)) in topology.v2v_links.iter().enumerate() {
            if i != j {
                alpha_kk[j][i] = v2v_gain(rng, tx, rx)?;
            }
        }
    }
    let (sigma2_bs, sigma2_veh) = noise_powers(config);
    let g_mb = alpha_mb.iter().map(|&a| vec![a; rbs]).collect();
    let g_kb = alpha_kb.iter().map(|&a| vec![a; rbs]).collect();
    Ok(ChannelState { alpha_mb, alpha_kb, alpha_k, alpha_mk, alpha_kk, g_mb, g_kb, sigma2_bs, sigma2_veh })
}

/// Redraws the per-RB fast fading of every BS-terminating link.
pub fn draw_bs_fading<T: Real, R: Rng + ?Sized>(cs: &mut ChannelState<T>, rng: &mut R) {
    for (row, &a) in cs.g_mb.iter_mut().zip(&cs.alpha_mb) {
        for g in row.iter_mut() {
            *g = a * draw_fading_power::<T, R>(rng);
        }
    }
    for (row, &a) in cs.g_kb.iter_mut().zip(&cs.alpha_kb) {
        for g in row.iter_mut() {
            *g = a * draw_fading_power::<T, R>(rng);
        }
    }
}

/// Large-scale gains plus one BS fading realization.
pub fn realize_channels<T: Real, R: Rng + ?Sized>(
    topology: &Topology,
    config: &ScenarioConfig,
    rng: &mut R,
) -> Result<ChannelState<T>> {
    let mut cs = large_scale(topology, config, rng)?;
    draw_bs_fading(&mut cs, rng);
    Ok(cs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn v2i_pathloss_values() {
        assert!((pathloss_v2i_db(1.0f64).unwrap() - 128.1).abs() < 1e-12);
        // 128.1 + 37.6 log10(0.5)
        assert!((pathloss_v2i_db(0.5f64).unwrap() - 116.781_272).abs() < 1e-5);
        assert!((pathloss_v2i_db(0.1f64).unwrap() - 90.5).abs() < 1e-12);
        assert!(pathloss_v2i_db(0.0f64).is_err());
        assert!(pathloss_v2i_db(-1.0f32).is_err());
    }

    #[test]
    fn v2v_near_slope_value() {
        // breakpoint well beyond 10 m, so the near slope applies
        let pl = pathloss_v2v_db(10.0f64, 2.0, (3.0, 3.0)).unwrap();
        assert!((pl - (22.7 + 41.0 + 20.0 * 0.4f64.log10())).abs() < 1e-12);
        assert!((pl - 55.741).abs() < 1e-3);
    }

    #[test]
    fn v2v_default_heights_use_far_slope_at_10m() {
        let d_bp: f64 = v2v_breakpoint_m(2.0, (1.5, 1.5));
        assert!((d_bp - 20.0 / 3.0).abs() < 1e-12);
        let pl = pathloss_v2v_db(10.0f64, 2.0, (1.5, 1.5)).unwrap();
        let expect = 22.7 * d_bp.log10() + 41.0 + 20.0 * 0.4f64.log10() + 40.0 * (10.0 / d_bp).log10();
        assert!((pl - expect).abs() < 1e-12);
    }

    #[test]
    fn v2v_continuous_at_breakpoint() {
        for heights in [(1.5, 1.5), (3.0, 2.0), (1.2, 5.0)] {
            let d_bp: f64 = v2v_breakpoint_m(2.0, heights);
            let eps = 1e-7 * d_bp;
            let below = pathloss_v2v_db(d_bp - eps, 2.0, heights).unwrap();
            let above = pathloss_v2v_db(d_bp + eps, 2.0, heights).unwrap();
            assert!((below - above).abs() < 1e-5, "{heights:?}: {below} vs {above}");
        }
    }

    #[test]
    fn v2v_monotone_and_clamped() {
        let at3 = pathloss_v2v_db(3.0f64, 2.0, (1.5, 1.5)).unwrap();
        assert_eq!(pathloss_v2v_db(0.5f64, 2.0, (1.5, 1.5)).unwrap(), at3);
        let mut d = 3.0f64;
        while d < 2000.0 {
            let a = pathloss_v2v_db(d, 2.0, (1.5, 1.5)).unwrap();
            let b = pathloss_v2v_db(2.0 * d, 2.0, (1.5, 1.5)).unwrap();
            assert!(b > a, "d = {d}");
            d *= 1.37;
        }
        assert!(pathloss_v2v_db(0.0f64, 2.0, (1.5, 1.5)).is_err());
    }

    #[test]
    fn gain_conversion() {
        assert!((large_scale_gain(100.0f64, 0.0, 0.0) - 1e-10).abs() < 1e-22);
        let ratio = large_scale_gain(100.0f64, 0.0, 0.0) / large_scale_gain(100.0f64, 8.0, 0.0);
        assert!((ratio - 10f64.powf(0.8)).abs() < 1e-9);
    }

    #[test]
    fn v2i_shadowing_spread() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let draws: Vec<f64> =
            (0..10_000).map(|_| 10.0 * large_scale_gain(120.0, draw_shadow_db(&mut rng, 8.0), 11.0).log10()).collect();
        let mean = draws.iter().sum::<f64>() / draws.len() as f64;
        let var = draws.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (draws.len() - 1) as f64;
        assert!((var.sqrt() - 8.0).abs() < 0.2, "std {}", var.sqrt());
    }

    #[test]
    fn fading_statistics() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let n = 1_000_000;
        let mut sum = 0.0;
        let mut below = 0usize;
        for _ in 0..n {
            let x: f64 = draw_fading_power(&mut rng);
            assert!(x >= 0.0);
            sum += x;
            below += usize::from(x <= 0.1);
        }
        assert!((sum / n as f64 - 1.0).abs() < 0.005);
        let p = below as f64 / n as f64;
        assert!((p - (1.0 - (-0.1f64).exp())).abs() < 0.003, "{p}");
    }

    #[test]
    fn noise_figures_scale_noise_exactly() {
        let cfg = ScenarioConfig::default();
        let (bs, veh): (f64, f64) = noise_powers(&cfg);
        let thermal = dbm_to_mw(cfg.noise_dbm);
        assert!((bs / thermal - 10f64.powf(0.5)).abs() < 1e-9);
        assert!((veh / thermal - 10f64.powf(0.9)).abs() < 1e-9);
    }

    fn drop(seed: u64) -> (Topology, ScenarioConfig) {
        let cfg = ScenarioConfig::default();
        let t = scenario::generate(&cfg, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        (t, cfg)
    }

    #[test]
    fn realized_state_shapes_and_positivity() {
        let (t, cfg) = drop(1);
        let cs: ChannelState<f64> = realize_channels(&t, &cfg, &mut ChaCha8Rng::seed_from_u64(2)).unwrap();
        assert_eq!(cs.num_rbs(), cfg.m);
        assert_eq!(cs.g_mb.len(), cfg.m);
        assert_eq!(cs.g_kb.len(), cfg.k);
        let all = cs
            .alpha_mb
            .iter()
            .chain(&cs.alpha_kb)
            .chain(&cs.alpha_k)
            .chain(cs.alpha_mk.iter().flatten())
            .chain(cs.g_mb.iter().flatten())
            .chain(cs.g_kb.iter().flatten());
        for &g in all {
            assert!(g > 0.0 && g.is_finite());
        }
        for (j, row) in cs.alpha_kk.iter().enumerate() {
            for (i, &g) in row.iter().enumerate() {
                if i == j {
                    assert_eq!(g, 0.0);
                } else {
                    assert!(g > 0.0 && g.is_finite());
                }
            }
        }
    }

    #[test]
    fn bs_fading_unit_mean_and_uncorrelated_across_rbs() {
        let (t, cfg) = drop(4);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut cs: ChannelState<f64> = large_scale(&t, &cfg, &mut rng).unwrap();
        let n = 10_000;
        let (mut s1, mut s2, mut s11, mut s22, mut s12, mut mean_all) = (0.0, 0.0, 0.0, 0.0, 0.0, 0.0);
        for _ in 0..n {
            draw_bs_fading(&mut cs, &mut rng);
            let a = cs.g_mb[0][0] / cs.alpha_mb[0];
            let b = cs.g_mb[0][1] / cs.alpha_mb[0];
            s1 += a;
            s2 += b;
            s11 += a * a;
            s22 += b * b;
            s12 += a * b;
            mean_all += cs.g_kb[3][2] / cs.alpha_kb[3];
        }
        let nf = n as f64;
        assert!((s1 / nf - 1.0).abs() < 0.05);
        assert!((mean_all / nf - 1.0).abs() < 0.05);
        let cov = s12 / nf - (s1 / nf) * (s2 / nf);
        let corr = cov / ((s11 / nf - (s1 / nf).powi(2)).sqrt() * (s22 / nf - (s2 / nf).powi(2)).sqrt());
        assert!(corr.abs() < 0.02, "corr {corr}");
    }

    #[test]
    fn f32_state_matches_f64_stream() {
        let (t, cfg) = drop(6);
        let a: ChannelState<f64> = realize_channels(&t, &cfg, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        let b: ChannelState<f32> = realize_channels(&t, &cfg, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        for (x, y) in a.alpha_k.iter().zip(&b.alpha_k) {
            assert!(((*y as f64) / x - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn alpha_dump_has_all_rows() {
        let (t, cfg) = drop(2);
        let cs: ChannelState<f64> = realize_channels(&t, &cfg, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        let mut buf = Vec::new();
        cs.write_alpha_csv(&mut buf).unwrap();
        let lines = String::from_utf8(buf).unwrap().lines().count();
        assert_eq!(lines, 1 + 10 + 30 + 30 + 10 * 30 + 30 * 29);
    }
}
