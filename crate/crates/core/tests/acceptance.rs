//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

use std::time::{Duration, Instant};

use coaglab::branching::{
    borel_pmf, dwass_two_ancestors, eta_beta, offspring_from_arms, pgf, pgf_prime, theta,
    ArmMeasure,
};
use coaglab::detsolve::{
    integrate_limited, integrate_mono, limited_closed_form, limited_closed_form_zero_arms,
    mcleod, merle_normand_limits, terminal_mass_identity, tgel_limited, tgel_multiplicative,
    MonoField, StepControl,
};
use coaglab::harness::{self, parse_config, Format, Output};
use coaglab::stochsim::{
    census, coalesce_threshold, default_threshold, edge_rooted_size_law, random_configuration,
    replica_mean, replica_seed, rng_from_seed, sample_degrees, soc_statistic, DegreeSampling,
    EdgeSampling,
};
use rayon::prelude::*;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn timed(f: impl FnOnce() -> Outcome) -> (Outcome, Duration) {
    let start = Instant::now();
    let o = f();
    (o, start.elapsed())
}

fn mono_closed_form() -> Outcome {
    let (gap, elapsed) = {
        let start = Instant::now();
        let c0 = MonoField::delta(1, 1.0, 60).unwrap();
        let traj = integrate_mono(&c0, 0.5, 60, &StepControl::default()).unwrap();
        let (_, state, _) = traj.last();
        let gap = (1..=60u32)
            .map(|m| (state.get(m) - mcleod(0.5, m).unwrap()).abs())
            .fold(0.0, f64::max);
        (gap, start.elapsed())
    };
    outcome(
        gap < 1e-6 && elapsed < Duration::from_secs(5),
        format!("sup gap {gap:.3e}, {:.2}s", elapsed.as_secs_f64()),
    )
}

fn limited_closed_form_check() -> Outcome {
    let start = Instant::now();
    let mu = ArmMeasure::new([(1, 0.5), (2, 0.5)]).unwrap();
    let traj = integrate_limited(&mu, 0.5, 40, 40, &StepControl::default()).unwrap();
    let (_, state, _) = traj.last();
    let elapsed = start.elapsed();
    let mut gap: f64 = 0.0;
    for a in 0..=19u32 {
        for m in 1..=(20 - a) {
            let exact = match (a, m) {
                (0, 1) => 0.0,
                (0, m) => limited_closed_form_zero_arms(&mu, 0.5, m).unwrap(),
                (a, m) => limited_closed_form(&mu, 0.5, a, m).unwrap(),
            };
            gap = gap.max((state.get(a, m) - exact).abs());
        }
    }
    outcome(
        gap < 1e-6 && elapsed < Duration::from_secs(60),
        format!("sup gap {gap:.3e} over a+m <= 20, {:.2}s", elapsed.as_secs_f64()),
    )
}

fn fixed_points() -> Outcome {
    let theta_res = [1.1, 2.0, 5.0]
        .iter()
        .map(|&t| {
            let th = theta(t);
            ((t * (th - 1.0)).exp() - th).abs()
        })
        .fold(0.0, f64::max);
    let mu = ArmMeasure::new([(1, 0.5), (3, 0.5)]).unwrap();
    let nu = offspring_from_arms(&mu);
    let eb = eta_beta(&nu).unwrap();
    let residual = (eb.eta * pgf_prime(&nu, eb.eta) - pgf(&nu, eb.eta)).abs();
    // nu = (1/4) d_0 + (3/4) d_2: eta = 1/sqrt(3), beta = 2/sqrt(3)
    let (eta_ref, beta_ref) = (1.0 / 3f64.sqrt(), 2.0 / 3f64.sqrt());
    let pass = theta_res < 1e-12
        && residual < 1e-12
        && eb.beta > 1.0
        && (eb.eta - eta_ref).abs() < 1e-9
        && (eb.beta - beta_ref).abs() < 1e-9;
    outcome(
        pass,
        format!(
            "theta residual {theta_res:.1e}, eta {:.6} beta {:.6} residual {residual:.1e}",
            eb.eta, eb.beta
        ),
    )
}

fn gelation_times() -> Outcome {
    let mono = tgel_multiplicative(&MonoField::delta(1, 1.0, 1).unwrap()).unwrap();
    let two = tgel_limited(&ArmMeasure::point(2).unwrap());
    let three = tgel_limited(&ArmMeasure::point(3).unwrap());
    outcome(
        mono == 1.0 && two == f64::INFINITY && three == 1.0 / 3.0,
        format!("delta_1 {mono}, delta_2 {two}, delta_3 {three}"),
    )
}

fn config(text: &str) -> harness::ExperimentConfig {
    parse_config(text).unwrap()
}

fn borel_correspondence() -> Outcome {
    let start = Instant::now();
    let table = harness::run(&config(
        "model=mono_coalescent\nn=100000\nt_end=0.5\nreplicas=20\nseed=2024\ntruncation=1,10",
    ))
    .unwrap();
    let mut worst: f64 = 0.0;
    let mut pass = true;
    for m in 1..=10u64 {
        let row = table.get(0, m, 0.5).unwrap();
        // table holds concentrations; the Borel law is the mass fraction
        let (est, se) = (m as f64 * row.value, m as f64 * row.stderr);
        let z = (est - borel_pmf(0.5, m)).abs() / se;
        worst = worst.max(z);
        pass &= z <= 3.0;
    }
    outcome(pass, format!("max |z| {worst:.2} over m <= 10, {:.1}s", start.elapsed().as_secs_f64()))
}

fn subcritical_terminal() -> Outcome {
    let reference = harness::run(&config(
        "model=closed_forms\nmu.1=0.9\nmu.2=0.1\nt_end=inf\ntruncation=2,8",
    ))
    .unwrap();
    let estimate = harness::run(&config(
        "model=limited_coalescent\nmu.1=0.9\nmu.2=0.1\nn=100000\nt_end=inf\nreplicas=20\nseed=606\ntruncation=2,8",
    ))
    .unwrap();
    let zero_arms = |r: &harness::Row| r.a == 0 && r.m >= 2;
    let report = harness::compare(&reference.filter(zero_arms), &estimate.filter(zero_arms)).unwrap();
    let id = terminal_mass_identity(&ArmMeasure::new([(1, 0.9), (2, 0.1)]).unwrap(), 1000).unwrap();
    let gap = (id.lhs - id.rhs).abs();
    outcome(
        report.rows.len() == 7 && report.max_abs_z <= 3.0 && gap < 1e-6,
        format!("max |z| {:.2} over m <= 8; mass identity gap {gap:.1e}", report.max_abs_z),
    )
}

fn dwass_configuration() -> Outcome {
    let mu = ArmMeasure::new([(1, 0.9), (2, 0.1)]).unwrap();
    let nu = offspring_from_arms(&mu);
    let k = 20u32;
    let graphs: Vec<_> = (0..k)
        .into_par_iter()
        .map(|r| {
            let mut rng = rng_from_seed(replica_seed(707, r));
            let seq = sample_degrees(&mu, 100_000, DegreeSampling::Iid, &mut rng);
            let g = random_configuration(&seq, &mut rng);
            let law = edge_rooted_size_law(&g, EdgeSampling::Exhaustive, 10, &mut rng).unwrap();
            (law, census(&g).non_tree_fraction())
        })
        .collect();
    // replica s.e. is unreliable where most graphs hold no cluster of size m,
    // so the pooled estimate uses the per-graph reference variance
    let mut worst: f64 = 0.0;
    for m in 2..=10u64 {
        let p = dwass_two_ancestors(&nu, m as usize);
        let mean = graphs.iter().map(|(l, _)| l.tree(m)).sum::<f64>() / k as f64;
        let var = graphs.iter().map(|(l, _)| l.reference_stderr(m, p).powi(2)).sum::<f64>();
        worst = worst.max((mean - p).abs() * k as f64 / var.sqrt());
    }
    let non_tree = graphs.iter().map(|g| g.1).fold(0.0, f64::max);
    outcome(
        worst <= 3.0 && non_tree <= 0.01,
        format!("max |z| {worst:.2} over m <= 10 ({k} graphs); largest non-tree cluster fraction {non_tree:.1e}"),
    )
}

struct ThresholdRun {
    m_inf: f64,
    tv: f64,
    /// Post-gel statistic at each sample time.
    soc: Vec<f64>,
    mass_ok: bool,
}

fn threshold_replicas(n: usize, seed: u64, times: &[f64]) -> Vec<ThresholdRun> {
    let mu = ArmMeasure::new([(1, 0.5), (3, 0.5)]).unwrap();
    let pi_inf = merle_normand_limits(&mu).unwrap().pi_inf;
    let mut all = times.to_vec();
    all.push(f64::INFINITY);
    (0..20u32)
        .into_par_iter()
        .map(|r| {
            let mut rng = rng_from_seed(replica_seed(seed, r));
            let seq = sample_degrees(&mu, n, DegreeSampling::Iid, &mut rng);
            let alpha = default_threshold(n as u64);
            let (trace, sys) = coalesce_threshold(&seq, alpha, f64::INFINITY, &all, &mut rng).unwrap();
            let (last, mid) = trace.points.split_last().unwrap();
            ThresholdRun {
                m_inf: sys.mass_in_solution() as f64 / n as f64,
                tv: last.used_arms.total_variation(&pi_inf),
                soc: mid.iter().map(|p| soc_statistic(&p.used_arms)).collect(),
                mass_ok: sys.mass_in_solution() + sys.gel_mass == n as u64,
            }
        })
        .collect()
}

fn rms(v: &[f64]) -> f64 {
    (v.iter().map(|x| x * x).sum::<f64>() / v.len() as f64).sqrt()
}

fn supercritical_limits() -> (Outcome, bool) {
    // gelation at t = 1 for this arm law
    let times: Vec<f64> = (0..=18).map(|i| 1.5 + 0.25 * i as f64).collect();
    let runs = threshold_replicas(100_000, 808, &times);
    let m = replica_mean(&runs.iter().map(|r| r.m_inf).collect::<Vec<_>>()).value;
    let tv = replica_mean(&runs.iter().map(|r| r.tv).collect::<Vec<_>>()).value;
    let per_time_abs = (0..times.len())
        .map(|i| replica_mean(&runs.iter().map(|r| r.soc[i].abs()).collect::<Vec<_>>()).value)
        .fold(0.0, f64::max);
    let rms_n = replica_mean(&runs.iter().map(|r| rms(&r.soc)).collect::<Vec<_>>()).value;
    let doubled = threshold_replicas(200_000, 808, &times);
    let rms_2n = replica_mean(&doubled.iter().map(|r| rms(&r.soc)).collect::<Vec<_>>()).value;
    let mass_ok = runs.iter().chain(&doubled).all(|r| r.mass_ok);
    let pass = (m - 0.384_900).abs() <= 0.02 && tv <= 0.02 && per_time_abs <= 0.05 && rms_2n < rms_n;
    (
        outcome(
            pass,
            format!(
                "m_inf {m:.5}, TV {tv:.4}, max mean |soc| {per_time_abs:.4}, rms soc {rms_n:.4} -> {rms_2n:.4} at 2n"
            ),
        ),
        mass_ok,
    )
}

fn conservation(stochastic_ok: bool) -> Outcome {
    let mut worst: f64 = 0.0;
    let c0 = MonoField::delta(1, 1.0, 60).unwrap();
    let traj = integrate_mono(&c0, 0.95, 60, &StepControl::default()).unwrap();
    for (s, leak) in traj.states.iter().zip(&traj.truncation_leak) {
        worst = worst.max((s.mass() + leak - 1.0).abs());
    }
    for mu in [
        ArmMeasure::new([(1, 0.5), (2, 0.5)]).unwrap(),
        ArmMeasure::new([(1, 0.5), (3, 0.5)]).unwrap(),
    ] {
        let t_end = 0.9 * tgel_limited(&mu).min(2.0);
        let traj = integrate_limited(&mu, t_end, 12, 24, &StepControl::default()).unwrap();
        for (s, leak) in traj.states.iter().zip(&traj.truncation_leak) {
            worst = worst.max((s.mass() + leak - 1.0).abs());
        }
    }
    // engine-level mass balance after every event
    let mu = ArmMeasure::new([(1, 0.5), (3, 0.5)]).unwrap();
    let mut events_ok = true;
    for seed in 0..20 {
        let mut rng = rng_from_seed(seed);
        let seq = sample_degrees(&mu, 2000, DegreeSampling::Iid, &mut rng);
        let mut engine = coaglab::stochsim::LimitedCoalescent::new(&seq, Some(100));
        while let coaglab::stochsim::Step::Merged { .. } = engine.step(f64::INFINITY, &mut rng) {
            let snap = engine.snapshot();
            events_ok &= snap.mass_in_solution() + snap.gel_mass == snap.n;
        }
    }
    outcome(
        worst < 1e-6 && stochastic_ok && events_ok,
        format!("ODE |mass + leak - 1| <= {worst:.1e}; stochastic mass balance exact: {}", stochastic_ok && events_ok),
    )
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let experiments = [
        "model=threshold_coalescent\nmu.1=0.5\nmu.3=0.5\nn=20000\nt_end=inf\nsample_times=1,2,4\nreplicas=8\nseed=11\ntruncation=3,20",
        "model=configuration\nmu.1=0.9\nmu.2=0.1\nn=20000\nt_end=inf\nreplicas=4\nseed=12\ntruncation=2,20",
        "model=ode_limited\nmu.1=0.5\nmu.2=0.5\nt_end=0.5\nsample_times=0.25,0.5\ntruncation=10,20",
    ];
    let mut identical = true;
    for (i, text) in experiments.iter().enumerate() {
        let mut bytes = Vec::new();
        for rerun in 0..2 {
            let mut c = config(text);
            let path = dir.path().join(format!("{i}-{rerun}.json"));
            c.output = Some(Output {
                path: path.clone(),
                format: if i == 1 { Format::Json } else { Format::Csv },
            });
            harness::execute(&c).unwrap();
            bytes.push(std::fs::read(path).unwrap());
        }
        identical &= bytes[0] == bytes[1];
    }
    outcome(identical, format!("{} experiments rerun byte-identical: {identical}", experiments.len()))
}

fn main() {
    let start = Instant::now();
    let mut results: Vec<(u32, &str, Outcome, Duration)> = Vec::new();
    let mut record = |k: u32, name: &'static str, (o, d): (Outcome, Duration)| {
        println!("{} criterion {k:>2} {name}: {} ({:.1}s)", if o.pass { "PASS" } else { "FAIL" }, o.detail, d.as_secs_f64());
        results.push((k, name, o, d));
    };
    record(1, "mono closed form", timed(mono_closed_form));
    record(2, "limited closed form", timed(limited_closed_form_check));
    record(3, "fixed points", timed(fixed_points));
    record(4, "gelation times", timed(gelation_times));
    record(5, "Borel correspondence", timed(borel_correspondence));
    record(6, "subcritical terminal state", timed(subcritical_terminal));
    record(7, "edge-rooted size law", timed(dwass_configuration));
    let mut stochastic_ok = true;
    record(8, "supercritical limits", timed(|| {
        let (o, ok) = supercritical_limits();
        stochastic_ok = ok;
        o
    }));
    record(9, "conservation", timed(|| conservation(stochastic_ok)));
    record(10, "determinism", timed(determinism));
    let failed: Vec<u32> = results.iter().filter(|r| !r.2.pass).map(|r| r.0).collect();
    println!("acceptance: {} of {} passed in {:.1}s", results.len() - failed.len(), results.len(), start.elapsed().as_secs_f64());
    if !failed.is_empty() {
        println!("failed criteria: {failed:?}");
        std::process::exit(1);
    }
}
