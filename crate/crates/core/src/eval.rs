//! Monte-Carlo evaluation: sum V2I capacity per allocation and instantaneous
//! V2V SINR under fresh Rayleigh fading of the mobile links.
//!
//! Each drop owns independent random streams derived from the seed, the drop
//! index, the BS fading realization and a purpose tag, so results do not
//! depend on how drops are spread over threads, and increasing `drops` or
//! `fading_samples` only appends samples.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::channel::{draw_bs_fading, draw_fading_power, large_scale, ChannelState};
use crate::error::Result;
use crate::matching::match_3d;
use crate::partition::{max_n_cut_partition, InterferenceGraph};
use crate::pipeline::{random_baseline, sum_capacity, Allocation, PatternTable};
use crate::power::PowerParams;
use crate::real::{db_to_linear, Real};
use crate::scenario::{self, ScenarioConfig};

/// Purpose tags of the per-drop random streams.
pub mod stream {
    pub const GEOMETRY: u64 = 0;
    pub const BS_FADING: u64 = 1;
    pub const MOBILE_FADING: u64 = 2;
    pub const BASELINE: u64 = 3;
}

/// Independent ChaCha stream for `(drop, realization, purpose)` under `seed`.
pub fn stream_rng(seed: u64, drop: usize, realization: usize, purpose: u64) -> ChaCha8Rng {
    assert!(realization < 1 << 20 && purpose < 16, "stream index out of range");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((drop as u64) << 24) | ((realization as u64) << 4) | purpose);
    rng
}

/// Instantaneous SINR `(link, sinr)` of every served V2V link under one
/// fresh draw of the mobile-link fading. Links are visited match by match in
/// cluster order; per link the direct, V2I and co-cluster gains are drawn in
/// that order, so the number of draws does not depend on the powers.
pub fn sample_v2v_sinr<T: Real, R: Rng + ?Sized>(
    a: &Allocation<T>,
    cs: &ChannelState<T>,
    rng: &mut R,
) -> Vec<(usize, T)> {
    let mut out = Vec::with_capacity(a.num_served_v2v());
    for am in &a.matches {
        for (i, (&k, &p)) in am.links.iter().zip(&am.p_d).enumerate() {
            let signal = p * cs.alpha_k[k] * draw_fading_power::<T, R>(rng);
            let mut denom = cs.sigma2_veh + am.p_c * cs.alpha_mk[am.m][k] * draw_fading_power::<T, R>(rng);
            for (j, (&kj, &pj)) in am.links.iter().zip(&am.p_d).enumerate() {
                if j != i {
                    denom += pj * cs.alpha_kk[kj][k] * draw_fading_power::<T, R>(rng);
                }
            }
            out.push((k, signal / denom));
        }
    }
    out
}

/// Samples of one drop, in generation order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct DropResult {
    pub capacity: Vec<f64>,
    pub baseline_capacity: Vec<f64>,
    pub sinr_db: Vec<f64>,
    pub outages: usize,
    pub unserved_v2v: usize,
    pub total_v2v: usize,
    pub unserved_v2i: usize,
    pub total_v2i: usize,
}

pub fn run_drop<T: Real>(config: &ScenarioConfig, drop: usize) -> Result<DropResult> {
    let params = PowerParams::<T>::from_config(config)?;
    let gamma0 = db_to_linear(T::lit(config.gamma0_db));
    let mut geo = stream_rng(config.seed, drop, 0, stream::GEOMETRY);
    let topology = scenario::generate(config, &mut geo)?;
    let base = large_scale::<T, _>(&topology, config, &mut geo)?;
    let clustering = max_n_cut_partition(&InterferenceGraph::from_channel(&base), config.clusters())?;

    let mut out = DropResult::default();
    for r in 0..config.bs_realizations {
        let mut cs = base.clone();
        draw_bs_fading(&mut cs, &mut stream_rng(config.seed, drop, r, stream::BS_FADING));
        let table = PatternTable::compute(&cs, &clustering, &params)?;
        let matching = match_3d(&table.hypergraph()?)?;
        let alloc = Allocation::from_matching(&table, &clustering, &matching);
        out.capacity.push(sum_capacity(&alloc, &cs).to_f64_lossy());

        let mut brng = stream_rng(config.seed, drop, r, stream::BASELINE);
        let baseline = random_baseline(&table, &clustering, &mut brng)?;
        out.baseline_capacity.push(sum_capacity(&baseline, &cs).to_f64_lossy());

        out.unserved_v2v += alloc.num_unserved_v2v();
        out.total_v2v += cs.num_v2v();
        out.unserved_v2i += alloc.unserved_v2i.len();
        out.total_v2i += cs.num_v2i();

        let mut mob = stream_rng(config.seed, drop, r, stream::MOBILE_FADING);
        for _ in 0..config.fading_samples {
            for (_, sinr) in sample_v2v_sinr(&alloc, &cs, &mut mob) {
                if sinr <= gamma0 {
                    out.outages += 1;
                }
                out.sinr_db.push(10.0 * sinr.to_f64_lossy().log10());
            }
        }
    }
    Ok(out)
}

/// Aggregated Monte-Carlo output. Sample vectors keep generation order
/// (drop-major); sort through [`EmpiricalCdf`] for distribution views.
#[derive(Debug, Clone, PartialEq)]
pub struct CdfData {
    pub capacity: Vec<f64>,
    pub baseline_capacity: Vec<f64>,
    pub sinr_db: Vec<f64>,
    pub outages: usize,
    pub unserved_v2v: usize,
    pub total_v2v: usize,
    pub unserved_v2i: usize,
    pub total_v2i: usize,
    pub seed: u64,
    pub drops: usize,
    pub bs_realizations: usize,
    pub fading_samples: usize,
    pub gamma0_db: f64,
    pub p0: f64,
}

impl CdfData {
    pub fn empirical_outage(&self) -> f64 {
        if self.sinr_db.is_empty() {
            0.0
        } else {
            self.outages as f64 / self.sinr_db.len() as f64
        }
    }

    /// `p0 + 3 sqrt(p0 (1 - p0) / n)` for the number of SINR samples drawn.
    pub fn outage_bound(&self) -> f64 {
        let n = self.sinr_db.len().max(1) as f64;
        self.p0 + 3.0 * (self.p0 * (1.0 - self.p0) / n).sqrt()
    }

    pub fn unserved_v2v_fraction(&self) -> f64 {
        ratio(self.unserved_v2v, self.total_v2v)
    }

    pub fn unserved_v2i_fraction(&self) -> f64 {
        ratio(self.unserved_v2i, self.total_v2i)
    }

    pub fn mean_capacity(&self) -> f64 {
        mean(&self.capacity)
    }

    pub fn mean_baseline_capacity(&self) -> f64 {
        mean(&self.baseline_capacity)
    }

    pub fn capacity_cdf(&self) -> EmpiricalCdf {
        EmpiricalCdf::new(self.capacity.clone())
    }

    pub fn baseline_cdf(&self) -> EmpiricalCdf {
        EmpiricalCdf::new(self.baseline_capacity.clone())
    }

    pub fn sinr_cdf(&self) -> EmpiricalCdf {
        EmpiricalCdf::new(self.sinr_db.clone())
    }

    /// `(metric, value)` rows of `summary.csv`.
    pub fn summary(&self) -> Vec<(&'static str, String)> {
        vec![
            ("seed", self.seed.to_string()),
            ("drops", self.drops.to_string()),
            ("bs_realizations", self.bs_realizations.to_string()),
            ("fading_samples", self.fading_samples.to_string()),
            ("allocations", self.capacity.len().to_string()),
            ("mean_capacity_bps_hz", self.mean_capacity().to_string()),
            ("mean_baseline_capacity_bps_hz", self.mean_baseline_capacity().to_string()),
            ("sinr_samples", self.sinr_db.len().to_string()),
            ("outage_count", self.outages.to_string()),
            ("empirical_outage", self.empirical_outage().to_string()),
            ("outage_bound", self.outage_bound().to_string()),
            ("unserved_v2v_fraction", self.unserved_v2v_fraction().to_string()),
            ("unserved_v2i_fraction", self.unserved_v2i_fraction().to_string()),
        ]
    }
}

fn ratio(a: usize, b: usize) -> f64 {
    if b == 0 {
        0.0
    } else {
        a as f64 / b as f64
    }
}

fn mean(v: &[f64]) -> f64 {
    if v.is_empty() {
        0.0
    } else {
        v.iter().sum::<f64>() / v.len() as f64
    }
}

/// Runs every drop of `config` on the current rayon pool and merges the
/// results in drop order.
pub fn run_monte_carlo<T: Real>(config: &ScenarioConfig) -> Result<CdfData> {
    config.validate()?;
    PowerParams::<T>::from_config(config)?;
    let drops: Vec<DropResult> =
        (0..config.drops).into_par_iter().map(|d| run_drop::<T>(config, d)).collect::<Result<_>>()?;
    let mut data = CdfData {
        capacity: Vec::new(),
        baseline_capacity: Vec::new(),
        sinr_db: Vec::new(),
        outages: 0,
        unserved_v2v: 0,
        total_v2v: 0,
        unserved_v2i: 0,
        total_v2i: 0,
        seed: config.seed,
        drops: config.drops,
        bs_realizations: config.bs_realizations,
        fading_samples: config.fading_samples,
        gamma0_db: config.gamma0_db,
        p0: config.p0,
    };
    for d in drops {
        data.capacity.extend(d.capacity);
        data.baseline_capacity.extend(d.baseline_capacity);
        data.sinr_db.extend(d.sinr_db);
        data.outages += d.outages;
        data.unserved_v2v += d.unserved_v2v;
        data.total_v2v += d.total_v2v;
        data.unserved_v2i += d.unserved_v2i;
        data.total_v2i += d.total_v2i;
    }
    Ok(data)
}

/// Sorted samples with the right-continuous empirical CDF.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalCdf {
    sorted: Vec<f64>,
}

impl EmpiricalCdf {
    pub fn new(mut samples: Vec<f64>) -> Self {
        samples.sort_by(f64::total_cmp);
        EmpiricalCdf { sorted: samples }
    }

    pub fn len(&self) -> usize {
        self.sorted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sorted.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.sorted
    }

    /// `(x_(i), i / n)` for `i = 1..=n`.
    pub fn points(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        let n = self.sorted.len() as f64;
        self.sorted.iter().enumerate().map(move |(i, &x)| (x, (i + 1) as f64 / n))
    }

    /// Fraction of samples `<= x`.
    pub fn eval(&self, x: f64) -> f64 {
        ratio(self.sorted.partition_point(|&v| v <= x), self.sorted.len())
    }

    /// Smallest sample `x` with `eval(x) >= p`. Panics when empty.
    pub fn quantile(&self, p: f64) -> f64 {
        assert!(!self.sorted.is_empty(), "quantile of an empty sample");
        let n = self.sorted.len();
        let idx = ((p * n as f64).ceil() as usize).clamp(1, n) - 1;
        self.sorted[idx]
    }

    pub fn write_csv<W: Write>(&self, header: &str, mut out: W) -> Result<()> {
        writeln!(out, "{header},cdf")?;
        for (x, c) in self.points() {
            writeln!(out, "{x},{c}")?;
        }
        Ok(())
    }
}

pub const CAPACITY_CSV: &str = "capacity_cdf.csv";
pub const SINR_CSV: &str = "v2v_sinr_cdf.csv";
pub const SUMMARY_CSV: &str = "summary.csv";
pub const BASELINE_CSV: &str = "baseline_capacity_cdf.csv";

/// Writes the CDF and summary CSVs into `dir` and returns their paths.
pub fn write_outputs(data: &CdfData, dir: &Path, with_baseline: bool) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    let mut emit = |name: &str, f: &dyn Fn(&mut BufWriter<File>) -> Result<()>| -> Result<()> {
        let path = dir.join(name);
        let mut w = BufWriter::new(File::create(&path)?);
        f(&mut w)?;
        w.flush()?;
        written.push(path);
        Ok(())
    };
    emit(CAPACITY_CSV, &|w| data.capacity_cdf().write_csv("value_bps_hz", w))?;
    emit(SINR_CSV, &|w| data.sinr_cdf().write_csv("sinr_db", w))?;
    if with_baseline {
        emit(BASELINE_CSV, &|w| data.baseline_cdf().write_csv("value_bps_hz", w))?;
    }
    emit(SUMMARY_CSV, &|w| {
        writeln!(w, "metric,value")?;
        for (k, v) in data.summary() {
            writeln!(w, "{k},{v}")?;
        }
        Ok(())
    })?;
    Ok(written)
}
