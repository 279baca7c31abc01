use std::path::PathBuf;

use rayon::prelude::*;

use crate::branching::ArmMeasure;
use crate::detsolve::{
    integrate_limited, integrate_mono, kokholm, limiting_concentrations, mcleod,
    merle_normand_limits, ConcentrationField, LimitedClosedForm, MonoField, StepControl,
};
use crate::stochsim::{
    census, random_configuration, replica_mean, replica_seed, rng_from_seed, sample_degrees,
    soc_statistic, Clustered, DegreeSequence, LimitedCoalescent, MonoCoalescent, SimError,
    SimRng,
};

use super::table::{Table, CRITICALITY, SOLUTION_MASS, TRUNCATION_LEAK};
use super::{ExperimentConfig, HarnessError, Kernel, Model};

/// Environment variable capping the worker threads used for replicas.
pub const THREADS_VAR: &str = "COAGLAB_THREADS";

/// Runs the experiment and returns its table.
pub fn run(config: &ExperimentConfig) -> Result<Table, HarnessError> {
    match config.model {
        Model::OdeMono => ode_mono(config),
        Model::OdeLimited => ode_limited(config),
        Model::ClosedForms => closed_forms(config),
        Model::MonoCoalescent
        | Model::LimitedCoalescent
        | Model::ThresholdCoalescent
        | Model::Configuration => stochastic(config),
    }
}

/// Runs the experiment and writes its table to the configured output.
pub fn execute(config: &ExperimentConfig) -> Result<PathBuf, HarnessError> {
    let output = config
        .output
        .as_ref()
        .ok_or_else(|| HarnessError::Missing { key: "output".into() })?;
    let table = run(config)?;
    table.write(&output.path, output.format)?;
    Ok(output.path.clone())
}

/// Terminal tables: `c_inf(0, m)` for `m <= M_max` and, for gelling arm
/// laws, the solution-phase mass and used-arm law of the threshold model.
pub fn limits(config: &ExperimentConfig) -> Result<Table, HarnessError> {
    let mu = config.arm_measure()?;
    let t = f64::INFINITY;
    let mut table = Table::default();
    let m_max = config.truncation.1;
    for (i, c) in limiting_concentrations(&mu, m_max)?.into_iter().enumerate() {
        table.push(0, i as u64 + 2, t, c, 0.0);
    }
    if let Ok(mn) = merle_normand_limits(&mu) {
        table.push(SOLUTION_MASS, 0, t, mn.m_inf, 0.0);
        table.push(CRITICALITY, 0, t, soc_statistic(&mn.pi_inf), 0.0);
        for k in 0..=mu.max_arms() as i64 {
            table.push(k, 0, t, mn.pi_inf.get(k), 0.0);
        }
    }
    Ok(table)
}

fn mono_initial(config: &ExperimentConfig) -> Result<MonoField, HarnessError> {
    let m_max = config.truncation.1;
    if config.mu.is_empty() {
        return Ok(MonoField::delta(1, 1.0, m_max)?);
    }
    let mut conc = vec![0.0; m_max as usize];
    for &(m, w) in &config.mu {
        if m == 0 || m > m_max {
            return Err(HarnessError::Invalid {
                key: format!("mu.{m}"),
                message: format!("initial mass outside 1..={m_max}"),
            });
        }
        conc[m as usize - 1] += w;
    }
    Ok(MonoField::new(conc)?)
}

fn push_mono(table: &mut Table, t: f64, field: &MonoField) {
    for (m, c) in field.iter() {
        table.push(0, m as u64, t, c, 0.0);
    }
}

fn push_field(table: &mut Table, t: f64, field: &ConcentrationField) {
    for ((a, m), c) in field.iter() {
        table.push(a as i64, m as u64, t, c, 0.0);
    }
}

fn ode_mono(config: &ExperimentConfig) -> Result<Table, HarnessError> {
    let c0 = mono_initial(config)?;
    let mut table = Table::default();
    for t in config.times() {
        let traj = integrate_mono(&c0, t, config.truncation.1, &StepControl::default())?;
        let (_, state, leak) = traj.last();
        push_mono(&mut table, t, &state.clipped());
        table.push(TRUNCATION_LEAK, 0, t, leak, 0.0);
    }
    Ok(table)
}

fn ode_limited(config: &ExperimentConfig) -> Result<Table, HarnessError> {
    let mu = config.arm_measure()?;
    let (a_max, m_max) = config.truncation;
    let mut table = Table::default();
    for t in config.times() {
        let traj = integrate_limited(&mu, t, a_max, m_max, &StepControl::default())?;
        let (_, state, leak) = traj.last();
        push_field(&mut table, t, &state.clipped());
        table.push(TRUNCATION_LEAK, 0, t, leak, 0.0);
    }
    Ok(table)
}

fn closed_forms(config: &ExperimentConfig) -> Result<Table, HarnessError> {
    let (a_max, m_max) = config.truncation;
    let mut table = Table::default();
    match config.kernel {
        Kernel::Multiplicative => {
            for t in config.times() {
                for m in 1..=m_max {
                    let c = if t < 1.0 { mcleod(t, m)? } else { kokholm(t, m)? };
                    table.push(0, m as u64, t, c, 0.0);
                }
            }
        }
        Kernel::Limited => {
            let mu = config.arm_measure()?;
            let forms = LimitedClosedForm::new(&mu, a_max, m_max);
            for t in config.times() {
                if t.is_infinite() {
                    let limits = limiting_concentrations(&mu, m_max)?;
                    let mut field = ConcentrationField::zeros(a_max, m_max);
                    for (i, c) in limits.into_iter().enumerate() {
                        field.set(0, i as u32 + 2, c);
                    }
                    push_field(&mut table, t, &field);
                } else {
                    push_field(&mut table, t, &forms.field(t, a_max, m_max)?);
                }
            }
        }
    }
    Ok(table)
}

/// Row keys of a stochastic table and the per-replica values behind them.
struct Layout {
    keys: Vec<(i64, u64, f64)>,
    /// Fraction-valued rows, for the single-replica binomial error.
    fractions: Vec<bool>,
}

impl Layout {
    fn push(&mut self, a: i64, m: u64, t: f64, fraction: bool) {
        self.keys.push((a, m, t));
        self.fractions.push(fraction);
    }
}

fn layout(config: &ExperimentConfig, max_degree: u32) -> Layout {
    let (a_max, m_max) = config.truncation;
    let mut layout = Layout {
        keys: Vec::new(),
        fractions: Vec::new(),
    };
    let arms = if config.model == Model::MonoCoalescent { 0 } else { a_max };
    let times = if config.model == Model::Configuration {
        vec![config.t_end]
    } else {
        config.times()
    };
    for t in times {
        for a in 0..=arms {
            for m in 1..=m_max {
                layout.push(a as i64, m as u64, t, true);
            }
        }
        if config.model == Model::ThresholdCoalescent {
            layout.push(SOLUTION_MASS, 0, t, true);
            layout.push(CRITICALITY, 0, t, false);
            for k in 0..=max_degree {
                layout.push(k as i64, 0, t, true);
            }
        }
    }
    layout
}

/// Census class concentrations on the `(a, m)` grid, in layout order.
fn grid_values<C: Clustered>(source: &C, config: &ExperimentConfig, out: &mut Vec<f64>) {
    let (a_max, m_max) = config.truncation;
    let arms = if config.model == Model::MonoCoalescent { 0 } else { a_max };
    let c = census(source);
    let counts = c.class_counts();
    let n = c.n as f64;
    for a in 0..=arms as u64 {
        for m in 1..=m_max as u64 {
            out.push(*counts.get(&(a, m)).unwrap_or(&0) as f64 / n);
        }
    }
}

fn replica(
    config: &ExperimentConfig,
    mu: Option<&ArmMeasure>,
    index: u32,
) -> Result<Vec<f64>, HarnessError> {
    let mut rng: SimRng = rng_from_seed(replica_seed(config.seed, index));
    let n = config.n as usize;
    let degrees = |rng: &mut SimRng| -> DegreeSequence {
        sample_degrees(mu.expect("arm measure checked"), n, config.degrees, rng)
    };
    let mut out = Vec::new();
    match config.model {
        Model::MonoCoalescent => {
            let mut engine = MonoCoalescent::new(n);
            for t in config.times() {
                engine.run_until(t, &mut rng);
                grid_values(&engine.snapshot(), config, &mut out);
            }
        }
        Model::LimitedCoalescent => {
            let seq = degrees(&mut rng);
            let mut engine = LimitedCoalescent::new(&seq, None);
            for t in config.times() {
                engine.run_until(t, &mut rng);
                grid_values(&engine.snapshot(), config, &mut out);
            }
        }
        Model::ThresholdCoalescent => {
            let alpha = config.threshold();
            if alpha >= config.n {
                return Err(SimError::ThresholdTooLarge { alpha, n: config.n }.into());
            }
            let seq = degrees(&mut rng);
            let max_degree = mu.expect("arm measure checked").max_arms();
            let mut engine = LimitedCoalescent::new(&seq, Some(alpha));
            for t in config.times() {
                engine.run_until(t, &mut rng);
                grid_values(&engine.snapshot(), config, &mut out);
                let point = engine.trace_point();
                out.push(point.mass_in_solution);
                out.push(soc_statistic(&point.used_arms));
                out.extend((0..=max_degree as i64).map(|k| point.used_arms.get(k)));
            }
        }
        Model::Configuration => {
            let seq = degrees(&mut rng);
            grid_values(&random_configuration(&seq, &mut rng), config, &mut out);
        }
        Model::OdeMono | Model::OdeLimited | Model::ClosedForms => unreachable!("deterministic"),
    }
    Ok(out)
}

fn thread_pool() -> Result<rayon::ThreadPool, HarnessError> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var(THREADS_VAR) {
        let threads: usize = v.trim().parse().ok().filter(|t| *t >= 1).ok_or_else(|| {
            HarnessError::Invalid {
                key: THREADS_VAR.into(),
                message: format!("expected a positive integer, got `{v}`"),
            }
        })?;
        builder = builder.num_threads(threads);
    }
    builder
        .build()
        .map_err(|e| HarnessError::Invalid {
            key: THREADS_VAR.into(),
            message: e.to_string(),
        })
}

fn stochastic(config: &ExperimentConfig) -> Result<Table, HarnessError> {
    let mu = match config.model {
        Model::MonoCoalescent => None,
        _ => Some(config.arm_measure()?),
    };
    let layout = layout(config, mu.as_ref().map_or(0, |m| m.max_arms()));
    let replicas: Vec<Vec<f64>> = thread_pool()?.install(|| {
        (0..config.replicas)
            .into_par_iter()
            .map(|i| replica(config, mu.as_ref(), i))
            .collect::<Result<_, _>>()
    })?;

    let n = config.n as f64;
    let mut table = Table::default();
    let mut column = Vec::with_capacity(replicas.len());
    for (j, &(a, m, t)) in layout.keys.iter().enumerate() {
        column.clear();
        column.extend(replicas.iter().map(|r| r[j]));
        let est = replica_mean(&column);
        let stderr = if column.len() > 1 {
            est.stderr
        } else if layout.fractions[j] {
            (est.value * (1.0 - est.value) / n).max(0.0).sqrt()
        } else {
            0.0
        };
        table.push(a, m, t, est.value, stderr);
    }
    Ok(table)
}
