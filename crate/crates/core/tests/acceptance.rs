//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any
//! criterion fails.

use std::time::{Duration, Instant};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use v2x_core::eval::{run_monte_carlo, write_outputs, CdfData};
use v2x_core::lp::{check_basic, solve_lp_basic};
use v2x_core::matching::{brute_force_match, greedy_augment, match_3d, peel_ordering, Matching3D};
use v2x_core::oracle::{
    adversarial_hypergraph, drop_interference_graph, pipeline_hypergraph, power_oracle, random_hypergraph,
    random_power_problem,
};
use v2x_core::partition::{cut_weight, max_n_cut_partition};
use v2x_core::power::{optimal_powers, verify_tightness, PowerSolution};
use v2x_core::ScenarioConfig;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn closed_form_vs_oracle() -> (Outcome, Outcome) {
    let config = ScenarioConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(0xA11CE);
    let start = Instant::now();
    let (mut checked, mut worst_rel, mut worst_tight) = (0usize, 0.0f64, 0.0f64);
    let mut failures = Vec::new();
    let mut draws = 0;
    while checked < 200 {
        draws += 1;
        let size = 1 + draws % 3;
        let problem = random_power_problem(&mut rng, &config, size).expect("drop generation");
        let closed = optimal_powers(&problem);
        let oracle = power_oracle(&problem);
        match (&closed, &oracle) {
            (PowerSolution::Infeasible(_), None) => continue,
            (PowerSolution::Feasible(a), Some(o)) => {
                let rel = (a.capacity - o.capacity).abs() / o.capacity.abs().max(1e-12);
                worst_rel = worst_rel.max(rel);
                worst_tight = worst_tight.max(verify_tightness(&problem, a));
                if rel > 1e-4 {
                    failures.push(format!("draw {draws}: closed {} oracle {}", a.capacity, o.capacity));
                }
            }
            (c, o) => {
                failures.push(format!("draw {draws}: feasibility disagrees ({} vs {})", c.is_feasible(), o.is_some()))
            }
        }
        checked += 1;
    }
    let elapsed = start.elapsed();
    let equivalence = outcome(
        failures.is_empty() && elapsed < Duration::from_secs(120),
        format!(
            "{checked} feasible problems (size 1-3), worst relative gap {worst_rel:.2e}, {:.1}s{}",
            elapsed.as_secs_f64(),
            if failures.is_empty() { String::new() } else { format!("; {}", failures.join("; ")) }
        ),
    );

    // tightness: the same problems plus 3000 further random patterns
    let mut patterns = 0usize;
    let mut prng = ChaCha8Rng::seed_from_u64(0x7167);
    for _ in 0..10 {
        for size in 1..=3 {
            for _ in 0..100 {
                let p = random_power_problem(&mut prng, &config, size).expect("drop generation");
                if let PowerSolution::Feasible(a) = optimal_powers(&p) {
                    worst_tight = worst_tight.max(verify_tightness(&p, &a));
                    patterns += 1;
                }
            }
        }
    }
    let tightness = outcome(
        worst_tight <= 1e-9,
        format!("{} feasible solutions, worst reliability residual {worst_tight:.2e}", checked + patterns),
    );
    (equivalence, tightness)
}

fn full_run() -> (CdfData, Duration) {
    let config = ScenarioConfig { drops: 200, fading_samples: 500, seed: 2024, ..ScenarioConfig::default() };
    let start = Instant::now();
    let data = run_monte_carlo::<f64>(&config).expect("monte carlo run");
    (data, start.elapsed())
}

fn outage(data: &CdfData, elapsed: Duration) -> Outcome {
    let emp = data.empirical_outage();
    let bound = data.outage_bound();
    outcome(
        emp <= bound && elapsed < Duration::from_secs(600),
        format!(
            "outage {emp:.5} <= {bound:.5} over {} SINR samples ({} drops x {} samples), unserved V2V {:.3}, {:.1}s",
            data.sinr_db.len(),
            data.drops,
            data.fading_samples,
            data.unserved_v2v_fraction(),
            elapsed.as_secs_f64()
        ),
    )
}

fn dominance(data: &CdfData) -> Outcome {
    let (ours, base) = (data.capacity_cdf(), data.baseline_cdf());
    let mut pass = data.drops >= 100;
    let mut parts = Vec::new();
    for p in [0.1, 0.5, 0.9] {
        let (a, b) = (ours.quantile(p), base.quantile(p));
        pass &= a >= b;
        parts.push(format!("p{:.0}: {a:.2} vs {b:.2}", p * 100.0));
    }
    outcome(pass, format!("{} drops, allocator vs random baseline {}", data.drops, parts.join(", ")))
}

fn matching_ratio() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0x3D);
    let (mut worst, mut sum, mut count, mut adv_sum, mut adv_greedy) = (f64::INFINITY, 0.0, 0usize, 0.0, 0.0);
    let mut invalid = 0;
    for i in 0..550 {
        let h = if i < 500 { random_hypergraph(&mut rng, (3, 3, 3)) } else { adversarial_hypergraph(&mut rng) };
        let got = match_3d(&h).expect("match_3d");
        let opt = brute_force_match(&h).expect("oracle").total_weight();
        if !got.is_valid() {
            invalid += 1;
        }
        let ratio = if opt > 0.0 { got.total_weight() / opt } else { 1.0 };
        worst = worst.min(ratio);
        sum += ratio;
        count += 1;
        if i >= 500 {
            adv_sum += ratio;
            adv_greedy += greedy_augment(Matching3D::new(), &h).total_weight() / opt;
        }
    }
    outcome(
        worst >= 0.5 && invalid == 0,
        format!(
            "{count} instances (500 uniform + 50 adversarial), worst ratio {worst:.4}, mean {:.4}, \
             adversarial mean {:.4} (greedy by weight {:.4})",
            sum / count as f64,
            adv_sum / 50.0,
            adv_greedy / 50.0
        ),
    )
}

fn ncut_bound() -> Outcome {
    let config = ScenarioConfig::default();
    let n = config.clusters();
    let mut rng = ChaCha8Rng::seed_from_u64(0xC07);
    let mut worst = f64::INFINITY;
    for _ in 0..100 {
        let g = drop_interference_graph(&mut rng, &config).expect("drop");
        let c = max_n_cut_partition(&g, n).expect("partition");
        worst = worst.min(cut_weight(&g, &c) / g.total_weight());
    }
    let bound = 1.0 - 1.0 / n as f64;
    outcome(worst >= bound, format!("100 graphs (K={}, N={n}), worst cut fraction {worst:.4} >= {bound:.2}", config.k))
}

fn lp_basicness() -> Outcome {
    let config = ScenarioConfig::default();
    let rows = config.m + config.rbs() + config.clusters();
    let mut rng = ChaCha8Rng::seed_from_u64(0x1B);
    let (mut nonbasic, mut too_wide, mut peel_errors, mut max_support) = (0, 0, 0, 0);
    for _ in 0..500 {
        let h = pipeline_hypergraph(&mut rng, &config).expect("pipeline hypergraph");
        let lp = h.relaxation();
        let sol = solve_lp_basic(&lp).expect("simplex");
        if !check_basic(&lp, &sol.x) {
            nonbasic += 1;
        }
        max_support = max_support.max(sol.support());
        if sol.support() > rows {
            too_wide += 1;
        }
        if peel_ordering(&h, &sol.x).is_err() {
            peel_errors += 1;
        }
    }
    outcome(
        nonbasic + too_wide + peel_errors == 0,
        format!(
            "500 LPs, non-basic {nonbasic}, support > {rows}: {too_wide} (max {max_support}), peel errors {peel_errors}"
        ),
    )
}

fn determinism() -> Outcome {
    let config = ScenarioConfig { drops: 6, fading_samples: 20, seed: 77, ..ScenarioConfig::default() };
    let run = |threads: usize| -> Vec<(String, Vec<u8>)> {
        let dir = tempfile::tempdir().expect("tempdir");
        let data = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .expect("pool")
            .install(|| run_monte_carlo::<f64>(&config))
            .expect("run");
        let paths = write_outputs(&data, dir.path(), true).expect("write");
        paths
            .iter()
            .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(p).expect("read")))
            .collect()
    };
    let a = run(1);
    let b = run(1);
    let c = run(4);
    outcome(a == b && a == c, format!("{} CSV files identical across repeat and 1 vs 4 threads", a.len()))
}

fn main() {
    let mut results: Vec<(&str, Outcome)> = Vec::new();
    let (equivalence, tightness) = closed_form_vs_oracle();
    results.push(("closed-form power control matches brute-force oracle", equivalence));
    results.push(("V2V reliability constraints tight at the optimum", tightness));
    let (data, elapsed) = full_run();
    results.push(("empirical V2V outage within target", outage(&data, elapsed)));
    results.push(("3-D matching is a 2-approximation", matching_ratio()));
    results.push(("MAX N-CUT greedy bound", ncut_bound()));
    results.push(("LP vertex solutions and peeling", lp_basicness()));
    results.push(("capacity dominates random feasible baseline", dominance(&data)));
    results.push(("byte-identical outputs for identical seeds", determinism()));

    let mut failed = 0;
    for (name, o) in &results {
        println!("{} {name}: {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
        failed += usize::from(!o.pass);
    }
    println!("acceptance: {} passed, {failed} failed", results.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
