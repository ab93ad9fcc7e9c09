use std::io::Write;
use std::sync::OnceLock;
use std::time::Instant;

use betascale::analytic::{
    grover_anneal_gibbs_weight, grover_beta_of_p0, grover_thermo, indep_spins_beta_of_p0,
    indep_spins_thermo, interior_grid, qubit_anneal_gibbs_weight, qubit_spectrum,
};
use betascale::cli::{cmd_analyze, cmd_fit, cmd_run, DeltaRule, ExperimentConfig, FitSummary, LadderSpec, ScheduleSpec};
use betascale::estimators::{
    series_thermalization_test, third_moment_from_dos, EnergyHistogram, DEFAULT_MAX_FAILING_FRACTION,
};
use betascale::fits::{fit_power_law, FitPoint};
use betascale::rng::derive_seed;
use betascale::stats::median;
use betascale::validation::{run_selftest, RungCheck};
use betascale::{
    build_chimera, enumerate_dos, generate_bimodal, generate_planted, generate_xorsat3,
    geometric_ladder, pt_run, thermo_from_dos, Instance, PlantedParams, PtSchedule,
};

/// Written to the raw stderr handle so the line survives output capture.
fn verdict(id: u32, name: &str, pass: bool, detail: &str, started: Instant) {
    let _ = writeln!(
        std::io::stderr(),
        "criterion {id:>2} {}: {name} ({detail}; {:.1}s)",
        if pass { "PASS" } else { "FAIL" },
        started.elapsed().as_secs_f64()
    );
}

fn planted_on(n_nodes: usize, rows: usize, cols: usize, seed: u64) -> Instance {
    let graph = build_chimera(rows, cols).unwrap();
    let graph = if n_nodes == graph.n_nodes() { graph } else { graph.prefix_subgraph(n_nodes).unwrap() };
    generate_planted(&graph, &PlantedParams::default(), seed).unwrap()
}

fn bimodal_on(n_nodes: usize, seed: u64) -> Instance {
    let graph = build_chimera(1, 3).unwrap().prefix_subgraph(n_nodes).unwrap();
    generate_bimodal(&graph, seed).unwrap()
}

fn t19_tail(z: f64) -> f64 {
    use statrs::distribution::{ContinuousCDF, StudentsT};
    let t = StudentsT::new(0.0, 1.0, 19.0).unwrap();
    2.0 * (1.0 - t.cdf(z))
}

#[test]
fn criterion_01_oracle_vs_sampler() {
    let started = Instant::now();
    let report = run_selftest(1).unwrap();
    let mut zs = Vec::new();
    let mut misses = Vec::new();
    for cmp in &report.comparisons {
        for r in &cmp.rungs {
            let RungCheck { beta, exact_mean_e, sampled_mean_e, mean_e_tolerance, exact_c_beta, sampled_c_beta, c_beta_tolerance, mean_ok, c_ok } = *r;
            zs.push(3.0 * (sampled_mean_e - exact_mean_e) / mean_e_tolerance);
            zs.push(3.0 * (sampled_c_beta - exact_c_beta) / c_beta_tolerance);
            if !mean_ok {
                misses.push(format!("{} <e> at beta {beta:.3}", &cmp.instance_hash[..12]));
            }
            if !c_ok {
                misses.push(format!("{} c_beta at beta {beta:.3}", &cmp.instance_hash[..12]));
            }
        }
    }
    let beyond2 = zs.iter().filter(|z| z.abs() > 2.0).count();
    let detail = format!(
        "{} instances, {} comparisons, {} outside 3 blocking se {:?}; |z|>2: {} observed vs {:.1} expected under t19, |z|>3 expected {:.2}",
        report.comparisons.len(),
        zs.len(),
        misses.len(),
        misses,
        beyond2,
        zs.len() as f64 * t19_tail(2.0),
        zs.len() as f64 * t19_tail(3.0),
    );
    let pass = report.pass && started.elapsed().as_secs() < 600;
    verdict(1, "oracle vs sampler", pass, &detail, started);
    assert!(pass, "{detail}");
}

#[test]
fn criterion_02_planted_ground_truth() {
    let started = Instant::now();
    let mut bad = Vec::new();
    for k in 0..50u64 {
        let (rows, cols) = if k < 25 { (1, 2) } else { (1, 3) };
        let inst = planted_on(8 * rows * cols, rows, cols, derive_seed(2, k));
        let e0 = inst.known_e0().expect("planted energy");
        let dos = enumerate_dos(&inst).unwrap();
        let on_lattice = dos.levels().iter().all(|l| {
            let m = (l.energy - e0) / 4.0;
            m >= -1e-9 && (m - m.round()).abs() < 1e-9
        });
        let config_energy = inst.energy(inst.planted_config().unwrap()).unwrap();
        if dos.ground_energy() != e0 || config_energy != e0 || !on_lattice {
            bad.push(k);
        }
    }
    let pass = bad.is_empty() && started.elapsed().as_secs() < 300;
    let detail = format!("50 instances N in {{16, 24}}, failing {bad:?}");
    verdict(2, "planted ground truth", pass, &detail, started);
    assert!(pass, "{detail}");
}

#[test]
fn criterion_03_exponential_specific_heat() {
    let started = Instant::now();
    let inst = planted_on(20, 1, 3, 3);
    let dos = enumerate_dos(&inst).unwrap();
    let betas: Vec<f64> = (0..=60).map(|k| 3.0 + 0.05 * k as f64).collect();
    let ys: Vec<f64> = betas
        .iter()
        .map(|&b| thermo_from_dos(&dos, b, dos.ground_energy()).unwrap().c_beta.abs().ln())
        .collect();
    let mb = betas.iter().sum::<f64>() / betas.len() as f64;
    let my = ys.iter().sum::<f64>() / ys.len() as f64;
    let sxy: f64 = betas.iter().zip(&ys).map(|(b, y)| (b - mb) * (y - my)).sum();
    let sxx: f64 = betas.iter().map(|b| (b - mb).powi(2)).sum();
    let slope = sxy / sxx;
    let pass = (slope + 4.0).abs() <= 0.02 * 4.0 && started.elapsed().as_secs() < 60;
    let detail = format!("N=20, gap {:?}, slope {slope:.5}", dos.gap());
    verdict(3, "exponential specific heat", pass, &detail, started);
    assert!(pass, "{detail}");
}

/// Planted desk sweep shared by criteria 4 to 6.
fn scaling_run() -> &'static (FitSummary, f64, ExperimentConfig, f64) {
    static RUN: OnceLock<(FitSummary, f64, ExperimentConfig, f64)> = OnceLock::new();
    RUN.get_or_init(|| {
        let started = Instant::now();
        let dir = tempfile::tempdir().unwrap().keep();
        let cfg = ExperimentConfig {
            sizes: vec![2, 3, 4, 5, 6, 8],
            instances_per_size: 20,
            seed: 1,
            ladder: LadderSpec { beta_min: 0.2, beta_max: 4.0, n_rungs: 48 },
            schedule: ScheduleSpec { warmup_swaps: 2000, sweeps_per_swap: 1, sample_stride_swaps: 1, n_samples: 8000 },
            targets: vec![DeltaRule::Zero, DeltaRule::Constant(8.0), DeltaRule::SqrtHalfN, DeltaRule::Linear],
            q: vec![0.1],
            output_dir: dir,
            ..ExperimentConfig::default()
        };
        cmd_run(&cfg).unwrap();
        cmd_analyze(&cfg).unwrap();
        let summary = cmd_fit(&cfg).unwrap();
        let spacing_ratio = (cfg.ladder.beta_max / cfg.ladder.beta_min).powf(1.0 / (cfg.ladder.n_rungs - 1) as f64);
        (summary, spacing_ratio, cfg, started.elapsed().as_secs_f64())
    })
}

fn fit_for(summary: &FitSummary, rule: DeltaRule) -> &betascale::cli::BetaStarFit {
    summary.beta_star.iter().find(|f| f.delta_rule == rule).expect("fit for every target rule")
}

#[test]
fn criterion_04_beta_star_log_trend() {
    let started = Instant::now();
    let (summary, _, _, secs) = scaling_run();
    let f = fit_for(summary, DeltaRule::Zero);
    let b = &f.log_fit.params[1];
    let points: Vec<String> = f.points.iter().map(|p| format!("{}:{:.3}", p.n, p.y)).collect();
    let pass = b.value > 0.0 && !b.ci_contains(0.0) && f.comparison.indistinguishable && *secs < 7200.0;
    let detail = format!(
        "median beta* [{}], b = {:.4} CI95 [{:.4}, {:.4}], rss ratio {:.3}, indistinguishable {}, run {secs:.0}s",
        points.join(" "),
        b.value,
        b.ci95.0,
        b.ci95.1,
        f.comparison.ratio,
        f.comparison.indistinguishable
    );
    verdict(4, "beta* logarithmic trend", pass, &detail, started);
    assert!(pass, "{detail}");
}

#[test]
fn criterion_05_target_energy_ordering() {
    let started = Instant::now();
    let (summary, ratio, _, _) = scaling_run();
    let slope = |r| {
        let p = &fit_for(summary, r).log_fit.params[1];
        (p.value, (p.ci95.1 - p.ci95.0) / 2.0)
    };
    let (b0, h0) = slope(DeltaRule::Zero);
    let (b8, h8) = slope(DeltaRule::Constant(8.0));
    let (bs, hs) = slope(DeltaRule::SqrtHalfN);
    let ordered = b0 >= b8 - h0.hypot(h8) && b8 >= bs - h8.hypot(hs);

    let lin = fit_for(summary, DeltaRule::Linear);
    let pts = &lin.points;
    let (prev, last) = (pts[pts.len() - 2].y, pts[pts.len() - 1].y);
    let spacing = prev * (ratio - 1.0);
    let settles = (last - prev).abs() <= spacing * (1.0 + 1e-9);
    let pass = ordered && settles;
    let detail = format!(
        "b(0) {b0:.4}±{h0:.4}, b(8) {b8:.4}±{h8:.4}, b(sqrt) {bs:.4}±{hs:.4}; linear beta* {prev:.3} -> {last:.3}, spacing {spacing:.3}"
    );
    verdict(5, "target-energy ordering", pass, &detail, started);
    assert!(pass, "{detail}");
}

#[test]
fn criterion_06_residual_energy_scaling() {
    let started = Instant::now();
    let (summary, _, _, _) = scaling_run();
    let (mean_fit, sigma_fit) = summary.residual.as_ref().expect("residual fits");
    let a_mean = mean_fit.params[1].value;
    let a_sigma = sigma_fit.params[1].value;
    let pass = (0.8..=1.2).contains(&a_mean) && (0.35..=0.65).contains(&a_sigma);
    let detail = format!("mean residual exponent {a_mean:.4}, sigma exponent {a_sigma:.4}");
    verdict(6, "residual energy scaling", pass, &detail, started);
    assert!(pass, "{detail}");
}

#[test]
fn criterion_07_reweighting_identity() {
    let started = Instant::now();
    let inst = planted_on(16, 1, 2, 7);
    let dos = enumerate_dos(&inst).unwrap();
    let mut worst = 0.0f64;
    for beta in [0.3, 1.0, 2.0] {
        let shifted = EnergyHistogram::from_dos(&dos, beta).reweight(0.5).unwrap();
        let target = EnergyHistogram::from_dos(&dos, beta + 0.5);
        for (a, b) in shifted.counts.iter().zip(&target.counts) {
            if *b > 0.0 {
                worst = worst.max((a - b).abs() / b);
            }
        }
    }
    let pass = worst <= 1e-12 && started.elapsed().as_secs_f64() < 1.0;
    let detail = format!("max relative deviation {worst:.2e}");
    verdict(7, "reweighting identity", pass, &detail, started);
    assert!(pass, "{detail}");
}

#[test]
fn criterion_08_gaussian_deviation() {
    let started = Instant::now();
    let instances = vec![
        planted_on(16, 1, 2, 11),
        planted_on(24, 1, 3, 12),
        bimodal_on(16, 13),
        bimodal_on(24, 14),
        generate_xorsat3(12, 15).unwrap(),
    ];
    let h = 1e-4;
    let mut worst = 0.0f64;
    for inst in &instances {
        let dos = enumerate_dos(inst).unwrap();
        let n = inst.n_spins() as f64;
        for beta in [0.5, 1.0, 2.0] {
            let third_e = dos.central_moments(beta).third / n.powi(3);
            let lhs = n * n * third_e;
            let c = |b: f64| thermo_from_dos(&dos, b, 0.0).unwrap().c_beta;
            let rhs = (c(beta + h) - c(beta - h)) / (2.0 * h);
            worst = worst.max((lhs - rhs).abs() / rhs.abs());
        }
    }

    let sizes = [12usize, 16, 20, 24];
    let medians: Vec<f64> = sizes
        .iter()
        .map(|&n| {
            let eta: Vec<f64> = (0..10u64)
                .map(|k| {
                    let dos = enumerate_dos(&bimodal_on(n, derive_seed(8, 100 * n as u64 + k))).unwrap();
                    third_moment_from_dos(&dos, 1.0).unwrap().eta3.abs()
                })
                .collect();
            median(&eta).unwrap()
        })
        .collect();
    let decreasing = medians.windows(2).all(|w| w[1] < w[0]);
    let points: Vec<FitPoint> = sizes.iter().zip(&medians).map(|(&n, &y)| FitPoint::new(n as f64, y, None)).collect();
    let exponent = fit_power_law(&points).unwrap().params[1].value;
    let rate_ok = (-0.75..=-0.25).contains(&exponent);

    let pass = worst <= 1e-4 && decreasing && rate_ok && started.elapsed().as_secs() < 60;
    let detail = format!(
        "max relative mismatch {worst:.2e}; median |eta3| {medians:.4?} at N {sizes:?}, power exponent {exponent:.3}"
    );
    verdict(8, "Gaussian deviation relation", pass, &detail, started);
    assert!(pass, "{detail}");
}

#[test]
fn criterion_09_analytic_closed_forms() {
    let started = Instant::now();
    let mut worst = 0.0f64;
    for &(n, p0) in &[(1usize, 0.7), (10, 0.1), (100, 0.1), (1000, 0.9), (50, 0.5)] {
        let b = indep_spins_beta_of_p0(n, p0).unwrap().beta_exact;
        worst = worst.max((indep_spins_thermo(n, b).unwrap().p0 - p0).abs() / p0);
    }
    for &(n, p0) in &[(4usize, 0.5), (10, 0.1), (20, 0.9), (40, 0.01)] {
        let b = grover_beta_of_p0(n, p0).unwrap().beta_exact;
        worst = worst.max((grover_thermo(n, b).unwrap().p0 - p0).abs() / p0);
    }
    let asym = indep_spins_beta_of_p0(100, 0.1).unwrap();
    let asym_rel = (asym.beta_expansion - asym.beta_exact).abs() / asym.beta_exact;
    let grover4 = grover_beta_of_p0(4, 0.5).unwrap().beta_exact;
    let ln15_err = (grover4 - 15f64.ln()).abs();
    let pass = worst <= 1e-10 && asym_rel <= 0.02 && ln15_err <= 1e-10 && started.elapsed().as_secs_f64() < 1.0;
    let detail = format!("round-trip {worst:.2e}, expansion {asym_rel:.4}, |beta(4, 1/2) - ln 15| {ln15_err:.2e}");
    verdict(9, "analytic closed forms", pass, &detail, started);
    assert!(pass, "{detail}");
}

#[test]
fn criterion_10_monotone_gibbs_weights() {
    let started = Instant::now();
    let grid = interior_grid(99);
    let increasing = |p: &[f64]| p.windows(2).all(|w| w[1] > w[0]);
    let mut bad = Vec::new();
    for beta in [0.1, 1.0, 10.0] {
        for n in [1usize, 10, 100] {
            let pts = qubit_anneal_gibbs_weight(n, beta, &grid).unwrap();
            if !increasing(&pts.iter().map(|p| p.log_p_gs).collect::<Vec<_>>()) {
                bad.push(format!("qubits N={n} beta={beta}"));
            }
        }
        for n in [4usize, 8, 12] {
            let pts = grover_anneal_gibbs_weight(n, beta, &grid).unwrap();
            if !increasing(&pts.iter().map(|p| p.log_p_gs).collect::<Vec<_>>()) {
                bad.push(format!("Grover N={n} beta={beta}"));
            }
        }
    }
    let identity = grid
        .iter()
        .map(|&s| {
            let q = qubit_spectrum(s);
            (2.0 * q.doverlap * q.lambda + (2.0 * q.overlap - 1.0) * q.dlambda - 1.0).abs()
        })
        .fold(0.0f64, f64::max);
    let pass = bad.is_empty() && identity <= 1e-12 && started.elapsed().as_secs_f64() < 1.0;
    let detail = format!("non-monotone {bad:?}, identity residual {identity:.2e}");
    verdict(10, "monotone Gibbs weights", pass, &detail, started);
    assert!(pass, "{detail}");
}

#[test]
fn criterion_11_block_thermalization_test() {
    let started = Instant::now();
    let ladder = geometric_ladder(0.2, 3.0, 16).unwrap();
    let mut equilibrated = Vec::new();
    for k in 0..3u64 {
        let inst = planted_on(32, 2, 2, derive_seed(11, k));
        let schedule = PtSchedule {
            warmup_swaps: 5000,
            sweeps_per_swap: 1,
            sample_stride_swaps: 2,
            n_samples: 8000,
            seed: derive_seed(12, k),
        };
        let series = pt_run(&inst, &ladder, &schedule).unwrap();
        let t = series_thermalization_test(&series, DEFAULT_MAX_FAILING_FRACTION).unwrap();
        equilibrated.push((t.pass, t.failing_fraction));
    }
    let big = planted_on(512, 8, 8, 13);
    let truncated = PtSchedule {
        warmup_swaps: 1,
        sweeps_per_swap: 1,
        sample_stride_swaps: 1,
        n_samples: 800,
        seed: 14,
    };
    let series = pt_run(&big, &ladder, &truncated).unwrap();
    let t = series_thermalization_test(&series, DEFAULT_MAX_FAILING_FRACTION).unwrap();
    let pass = equilibrated.iter().all(|e| e.0) && !t.pass && started.elapsed().as_secs() < 600;
    let detail = format!(
        "equilibrated (pass, failing fraction) {equilibrated:?}; truncated warmup failing fraction {:.3}",
        t.failing_fraction
    );
    verdict(11, "block thermalization test", pass, &detail, started);
    assert!(pass, "{detail}");
}
