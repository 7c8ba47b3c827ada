//! Oracle suites: each compares a production routine against an independent
//! reference on freshly drawn instances.

use std::process::ExitCode;

use anyhow::Result;
use clap::ValueEnum;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use v2x_core::lp::{check_basic, solve_lp_basic};
use v2x_core::matching::{brute_force_match, match_3d, peel_ordering, Edge, Hypergraph3, Matching3D};
use v2x_core::oracle::{
    adversarial_hypergraph, drop_interference_graph, pipeline_hypergraph, power_oracle, random_hypergraph,
    random_power_problem,
};
use v2x_core::partition::{cut_weight, max_n_cut_partition};
use v2x_core::power::{optimal_powers, verify_tightness, PowerSolution};
use v2x_core::ScenarioConfig;

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Suite {
    All,
    Power,
    Matching,
    Ncut,
    Lp,
}

struct Report {
    name: &'static str,
    pass: bool,
    detail: String,
}

pub fn run(suite: Suite, instances: Option<usize>, seed: u64, perturb: bool) -> Result<ExitCode> {
    let wanted = |s: Suite| suite == Suite::All || suite == s;
    let mut reports = Vec::new();
    if wanted(Suite::Power) {
        reports.push(power_suite(instances.unwrap_or(100), seed)?);
    }
    if wanted(Suite::Matching) {
        reports.push(matching_suite(instances.unwrap_or(200), seed, perturb)?);
    }
    if wanted(Suite::Ncut) {
        reports.push(ncut_suite(instances.unwrap_or(50), seed)?);
    }
    if wanted(Suite::Lp) {
        reports.push(lp_suite(instances.unwrap_or(50), seed)?);
    }
    let mut failed = 0;
    for r in &reports {
        println!("{} {}: {}", if r.pass { "PASS" } else { "FAIL" }, r.name, r.detail);
        failed += usize::from(!r.pass);
    }
    Ok(if failed == 0 { ExitCode::SUCCESS } else { ExitCode::FAILURE })
}

fn power_suite(instances: usize, seed: u64) -> Result<Report> {
    let config = ScenarioConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut checked, mut mismatches, mut worst_gap, mut worst_tight) = (0, 0, 0.0f64, 0.0f64);
    for i in 0..instances {
        let problem = random_power_problem(&mut rng, &config, 1 + i % 3)?;
        match (optimal_powers(&problem), power_oracle(&problem)) {
            (PowerSolution::Feasible(a), Some(o)) => {
                let gap = (a.capacity - o.capacity).abs() / o.capacity.abs().max(1e-12);
                worst_gap = worst_gap.max(gap);
                worst_tight = worst_tight.max(verify_tightness(&problem, &a));
                mismatches += usize::from(gap > 1e-4);
                checked += 1;
            }
            (PowerSolution::Infeasible(_), None) => {}
            _ => mismatches += 1,
        }
    }
    Ok(Report {
        name: "power",
        pass: mismatches == 0 && worst_tight <= 1e-9,
        detail: format!(
            "{instances} problems, {checked} feasible, {mismatches} mismatches, worst gap {worst_gap:.2e}, \
             worst residual {worst_tight:.2e}"
        ),
    })
}

fn negated(h: &Hypergraph3<f64>) -> Result<Hypergraph3<f64>> {
    let edges = h.edges().iter().map(|e| Edge { weight: -e.weight, ..*e }).collect();
    Ok(Hypergraph3::new(h.sizes(), edges)?)
}

/// Weight of `m` under the weights of `h`.
fn weight_in(h: &Hypergraph3<f64>, m: &Matching3D<f64>) -> f64 {
    m.chosen().iter().map(|e| h.edges()[h.index_of(e.key()).expect("edge of h")].weight).fold(0.0, |a, w| a + w)
}

fn matching_suite(instances: usize, seed: u64, perturb: bool) -> Result<Report> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let adversarial = instances.div_ceil(10);
    let (mut worst, mut sum, mut below) = (f64::INFINITY, 0.0, 0);
    for i in 0..instances + adversarial {
        let h = if i < instances { random_hypergraph(&mut rng, (3, 3, 3)) } else { adversarial_hypergraph(&mut rng) };
        let got = if perturb { match_3d(&negated(&h)?)? } else { match_3d(&h)? };
        let opt = brute_force_match(&h)?.total_weight();
        let ratio = if opt > 0.0 { weight_in(&h, &got) / opt } else { 1.0 };
        worst = worst.min(ratio);
        sum += ratio;
        below += usize::from(ratio < 0.5 || !got.is_valid());
    }
    let total = instances + adversarial;
    Ok(Report {
        name: "matching",
        pass: below == 0,
        detail: format!(
            "{total} instances ({adversarial} adversarial){}, worst ratio {worst:.4}, mean {:.4}, below 1/2: {below}",
            if perturb { ", perturbed weights" } else { "" },
            sum / total as f64
        ),
    })
}

fn ncut_suite(instances: usize, seed: u64) -> Result<Report> {
    let config = ScenarioConfig::default();
    let n = config.clusters();
    let bound = 1.0 - 1.0 / n as f64;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = f64::INFINITY;
    for _ in 0..instances {
        let g = drop_interference_graph(&mut rng, &config)?;
        let c = max_n_cut_partition(&g, n)?;
        worst = worst.min(cut_weight(&g, &c) / g.total_weight());
    }
    Ok(Report {
        name: "ncut",
        pass: worst >= bound,
        detail: format!("{instances} graphs (K={}, N={n}), worst cut fraction {worst:.4}, bound {bound:.4}", config.k),
    })
}

fn lp_suite(instances: usize, seed: u64) -> Result<Report> {
    let config = ScenarioConfig::default();
    let rows = config.m + config.rbs() + config.clusters();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut bad = 0;
    for _ in 0..instances {
        let h = pipeline_hypergraph(&mut rng, &config)?;
        let lp = h.relaxation();
        let sol = solve_lp_basic(&lp)?;
        let ok = check_basic(&lp, &sol.x) && sol.support() <= rows && peel_ordering(&h, &sol.x).is_ok();
        bad += usize::from(!ok);
    }
    Ok(Report {
        name: "lp",
        pass: bad == 0,
        detail: format!("{instances} pipeline LPs, {bad} failing basicness, support or peeling"),
    })
}
