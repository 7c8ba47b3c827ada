//! Run configuration and its flat `key = value` text format.
//!
//! Keys are case-insensitive. Blank lines and lines starting with `#` are
//! ignored, so a written manifest can be fed back in as a config file.

use std::fmt::Write as _;
use std::str::FromStr;

use crate::error::{Error, Result};

/// All freeway, radio and run-control parameters. Radio quantities are kept in
/// dB/dBm here and converted to linear units where they are consumed.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub carrier_freq_ghz: f64,
    pub bandwidth_mhz: f64,
    pub cell_radius_m: f64,
    pub bs_height_m: f64,
    pub bs_gain_dbi: f64,
    pub bs_noise_figure_db: f64,
    pub bs_to_highway_m: f64,
    pub veh_height_m: f64,
    pub veh_gain_dbi: f64,
    pub veh_noise_figure_db: f64,
    pub speed_kmh: f64,
    pub lanes_per_direction: usize,
    pub lane_width_m: f64,
    pub gamma0_db: f64,
    pub p0: f64,
    /// Number of V2I links, which is also the number of resource blocks.
    pub m: usize,
    /// Number of V2V links.
    pub k: usize,
    /// Number of V2V clusters; `None` means "same as `m`".
    pub n: Option<usize>,
    pub pmax_c_dbm: f64,
    pub pmax_d_dbm: f64,
    pub noise_dbm: f64,
    pub shadow_std_v2i_db: f64,
    pub shadow_std_v2v_db: f64,
    pub seed: u64,
    pub drops: usize,
    /// Mobile-link fading realizations drawn per allocation for the SINR statistics.
    pub fading_samples: usize,
    /// BS-link fading realizations per drop; the allocator re-runs for each.
    pub bs_realizations: usize,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            carrier_freq_ghz: 2.0,
            bandwidth_mhz: 10.0,
            cell_radius_m: 500.0,
            bs_height_m: 25.0,
            bs_gain_dbi: 8.0,
            bs_noise_figure_db: 5.0,
            bs_to_highway_m: 35.0,
            veh_height_m: 1.5,
            veh_gain_dbi: 3.0,
            veh_noise_figure_db: 9.0,
            speed_kmh: 70.0,
            lanes_per_direction: 3,
            lane_width_m: 4.0,
            gamma0_db: 5.0,
            p0: 0.01,
            m: 10,
            k: 30,
            n: None,
            pmax_c_dbm: 23.0,
            pmax_d_dbm: 23.0,
            noise_dbm: -114.0,
            shadow_std_v2i_db: 8.0,
            shadow_std_v2v_db: 3.0,
            seed: 1,
            drops: 100,
            fading_samples: 100,
            bs_realizations: 1,
        }
    }
}

/// Canonical key order used when writing a config back out.
pub const CONFIG_KEYS: &[&str] = &[
    "carrier_freq_ghz",
    "bandwidth_mhz",
    "cell_radius_m",
    "bs_height_m",
    "bs_gain_dbi",
    "bs_noise_figure_db",
    "bs_to_highway_m",
    "veh_height_m",
    "veh_gain_dbi",
    "veh_noise_figure_db",
    "speed_kmh",
    "lanes_per_direction",
    "lane_width_m",
    "gamma0_db",
    "p0",
    "m",
    "k",
    "n",
    "pmax_c_dbm",
    "pmax_d_dbm",
    "noise_dbm",
    "shadow_std_v2i_db",
    "shadow_std_v2v_db",
    "seed",
    "drops",
    "fading_samples",
    "bs_realizations",
];

fn parse_num<V: FromStr>(key: &str, raw: &str) -> std::result::Result<V, String> {
    raw.parse::<V>().map_err(|_| format!("bad value {raw:?} for key {key}"))
}

impl ScenarioConfig {
    /// Number of V2V clusters actually used.
    pub fn clusters(&self) -> usize {
        self.n.unwrap_or(self.m)
    }

    /// Number of resource blocks; always equal to the number of V2I links.
    pub fn rbs(&self) -> usize {
        self.m
    }

    pub fn speed_mps(&self) -> f64 {
        self.speed_kmh / 3.6
    }

    /// Mean inter-vehicle gap per lane: 2.5 s worth of travel.
    pub fn mean_gap_m(&self) -> f64 {
        2.5 * self.speed_mps()
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        let reals = [
            ("carrier_freq_ghz", self.carrier_freq_ghz),
            ("bandwidth_mhz", self.bandwidth_mhz),
            ("cell_radius_m", self.cell_radius_m),
            ("bs_height_m", self.bs_height_m),
            ("bs_gain_dbi", self.bs_gain_dbi),
            ("bs_noise_figure_db", self.bs_noise_figure_db),
            ("bs_to_highway_m", self.bs_to_highway_m),
            ("veh_height_m", self.veh_height_m),
            ("veh_gain_dbi", self.veh_gain_dbi),
            ("veh_noise_figure_db", self.veh_noise_figure_db),
            ("speed_kmh", self.speed_kmh),
            ("lane_width_m", self.lane_width_m),
            ("gamma0_db", self.gamma0_db),
            ("p0", self.p0),
            ("pmax_c_dbm", self.pmax_c_dbm),
            ("pmax_d_dbm", self.pmax_d_dbm),
            ("noise_dbm", self.noise_dbm),
            ("shadow_std_v2i_db", self.shadow_std_v2i_db),
            ("shadow_std_v2v_db", self.shadow_std_v2v_db),
        ];
        if let Some((k, v)) = reals.iter().find(|(_, v)| !v.is_finite()) {
            return bad(format!("{k} must be finite, got {v}"));
        }
        for (k, v) in [
            ("carrier_freq_ghz", self.carrier_freq_ghz),
            ("cell_radius_m", self.cell_radius_m),
            ("speed_kmh", self.speed_kmh),
            ("lane_width_m", self.lane_width_m),
            ("veh_height_m", self.veh_height_m),
            ("bs_height_m", self.bs_height_m),
        ] {
            if v <= 0.0 {
                return bad(format!("{k} must be positive, got {v}"));
            }
        }
        if self.shadow_std_v2i_db < 0.0 || self.shadow_std_v2v_db < 0.0 {
            return bad("shadowing standard deviations must be non-negative".into());
        }
        if !(self.p0 > 0.0 && self.p0 < 1.0) {
            return bad(format!("p0 must lie in (0, 1), got {}", self.p0));
        }
        if self.bs_to_highway_m < 0.0 || self.bs_to_highway_m >= self.cell_radius_m {
            return bad("highway must pass through the cell (0 <= bs_to_highway_m < cell_radius_m)".into());
        }
        if self.lanes_per_direction == 0 {
            return bad("lanes_per_direction must be at least 1".into());
        }
        if self.m == 0 {
            return bad("m (V2I links) must be at least 1".into());
        }
        let n = self.clusters();
        if n == 0 || n > self.k {
            return bad(format!("need k >= n >= 1, got k={} n={}", self.k, n));
        }
        if self.drops == 0 || self.fading_samples == 0 || self.bs_realizations == 0 {
            return bad("drops, fading_samples and bs_realizations must be at least 1".into());
        }
        Ok(())
    }

    /// Sets one key from its textual value.
    pub fn set(&mut self, key: &str, raw: &str) -> std::result::Result<(), String> {
        let key = key.trim().to_ascii_lowercase();
        let raw = raw.trim();
        match key.as_str() {
            "carrier_freq_ghz" => self.carrier_freq_ghz = parse_num(&key, raw)?,
            "bandwidth_mhz" => self.bandwidth_mhz = parse_num(&key, raw)?,
            "cell_radius_m" => self.cell_radius_m = parse_num(&key, raw)?,
            "bs_height_m" => self.bs_height_m = parse_num(&key, raw)?,
            "bs_gain_dbi" => self.bs_gain_dbi = parse_num(&key, raw)?,
            "bs_noise_figure_db" => self.bs_noise_figure_db = parse_num(&key, raw)?,
            "bs_to_highway_m" => self.bs_to_highway_m = parse_num(&key, raw)?,
            "veh_height_m" => self.veh_height_m = parse_num(&key, raw)?,
            "veh_gain_dbi" => self.veh_gain_dbi = parse_num(&key, raw)?,
            "veh_noise_figure_db" => self.veh_noise_figure_db = parse_num(&key, raw)?,
            "speed_kmh" => self.speed_kmh = parse_num(&key, raw)?,
            "lanes_per_direction" => self.lanes_per_direction = parse_num(&key, raw)?,
            "lane_width_m" => self.lane_width_m = parse_num(&key, raw)?,
            "gamma0_db" => self.gamma0_db = parse_num(&key, raw)?,
            "p0" => self.p0 = parse_num(&key, raw)?,
            "m" => self.m = parse_num(&key, raw)?,
            "k" => self.k = parse_num(&key, raw)?,
            "n" => {
                self.n =
                    if raw.is_empty() || raw.eq_ignore_ascii_case("auto") { None } else { Some(parse_num(&key, raw)?) }
            }
            "pmax_c_dbm" => self.pmax_c_dbm = parse_num(&key, raw)?,
            "pmax_d_dbm" => self.pmax_d_dbm = parse_num(&key, raw)?,
            "noise_dbm" => self.noise_dbm = parse_num(&key, raw)?,
            "shadow_std_v2i_db" => self.shadow_std_v2i_db = parse_num(&key, raw)?,
            "shadow_std_v2v_db" => self.shadow_std_v2v_db = parse_num(&key, raw)?,
            "seed" => self.seed = parse_num(&key, raw)?,
            "drops" => self.drops = parse_num(&key, raw)?,
            "fading_samples" => self.fading_samples = parse_num(&key, raw)?,
            "bs_realizations" => self.bs_realizations = parse_num(&key, raw)?,
            _ => return Err(format!("unknown key {key:?}")),
        }
        Ok(())
    }

    /// Applies every `key = value` line of `text` on top of `self`.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (idx, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| Error::ConfigParse {
                line: idx + 1,
                msg: format!("expected key = value, got {line:?}"),
            })?;
            self.set(key, value).map_err(|msg| Error::ConfigParse { line: idx + 1, msg })?;
        }
        Ok(())
    }

    /// Parses a config file body over the defaults and validates the result.
    pub fn from_text(text: &str) -> Result<Self> {
        let mut cfg = ScenarioConfig::default();
        cfg.apply_text(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn get(&self, key: &str) -> Option<String> {
        let v = match key.to_ascii_lowercase().as_str() {
            "carrier_freq_ghz" => self.carrier_freq_ghz.to_string(),
            "bandwidth_mhz" => self.bandwidth_mhz.to_string(),
            "cell_radius_m" => self.cell_radius_m.to_string(),
            "bs_height_m" => self.bs_height_m.to_string(),
            "bs_gain_dbi" => self.bs_gain_dbi.to_string(),
            "bs_noise_figure_db" => self.bs_noise_figure_db.to_string(),
            "bs_to_highway_m" => self.bs_to_highway_m.to_string(),
            "veh_height_m" => self.veh_height_m.to_string(),
            "veh_gain_dbi" => self.veh_gain_dbi.to_string(),
            "veh_noise_figure_db" => self.veh_noise_figure_db.to_string(),
            "speed_kmh" => self.speed_kmh.to_string(),
            "lanes_per_direction" => self.lanes_per_direction.to_string(),
            "lane_width_m" => self.lane_width_m.to_string(),
            "gamma0_db" => self.gamma0_db.to_string(),
            "p0" => self.p0.to_string(),
            "m" => self.m.to_string(),
            "k" => self.k.to_string(),
            "n" => self.clusters().to_string(),
            "pmax_c_dbm" => self.pmax_c_dbm.to_string(),
            "pmax_d_dbm" => self.pmax_d_dbm.to_string(),
            "noise_dbm" => self.noise_dbm.to_string(),
            "shadow_std_v2i_db" => self.shadow_std_v2i_db.to_string(),
            "shadow_std_v2v_db" => self.shadow_std_v2v_db.to_string(),
            "seed" => self.seed.to_string(),
            "drops" => self.drops.to_string(),
            "fading_samples" => self.fading_samples.to_string(),
            "bs_realizations" => self.bs_realizations.to_string(),
            _ => return None,
        };
        Some(v)
    }

    /// Writes every key in canonical order. `N` is written resolved.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for key in CONFIG_KEYS {
            let _ = writeln!(out, "{key} = {}", self.get(key).expect("known key"));
        }
        out
    }
}
