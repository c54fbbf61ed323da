//! Executes a validated [`Plan`]: runs the trajectories, writes the CSV
//! series and the summary JSON.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Value};
use thiserror::Error;

use crate::acceptance::{accept_suite, AcceptOptions};
use crate::brownian::{positivity_check, tau_samples};
use crate::config::{Operation, Plan, Task};
use crate::directions::{
    default_thresholds, direction_set_estimate, recurrence_diagnostic, trajectory_histograms,
    RecurrenceVerdict, SphereMesh,
};
use crate::engine::Cocycle;
use crate::exec::{map_indexed, trajectory_seed, try_map_indexed, Execution};
use crate::filling::{classify_oscillation, kesten_rate_of, min_process, OscillationRule};
use crate::inducer::{enter_set, induced_trace};
use crate::sojourn::{dyadic_grid, sojourn_series, Cone};
use crate::stats::{arcsine_cdf, ks_one_sample, mean};

/// Trajectories held in memory at once.
const BATCH: usize = 64;

#[derive(Debug, Error)]
pub enum RunError {
    #[error("cannot write {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{context}: {message}")]
    Module { context: String, message: String },
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Io { .. } => 1,
            RunError::Module { .. } => 2,
        }
    }
}

fn module<E: std::fmt::Display>(context: impl Into<String>) -> impl Fn(E) -> RunError {
    let context = context.into();
    move |e| RunError::Module {
        context: context.clone(),
        message: e.to_string(),
    }
}

/// Where a run writes its files.
#[derive(Clone, Debug, PartialEq)]
pub struct OutputPaths {
    pub csv: PathBuf,
    pub summary: PathBuf,
}

impl OutputPaths {
    /// `out` is a directory, or the CSV path itself when it ends in `.csv`.
    /// The summary sits next to the CSV as `<stem>.summary.json`.
    pub fn resolve(out: Option<&Path>, operation: Operation) -> Self {
        let out = out.unwrap_or(Path::new("."));
        let csv = if out.extension().is_some_and(|e| e == "csv") {
            out.to_path_buf()
        } else {
            out.join(format!("{}.csv", operation.name()))
        };
        let stem = csv.file_stem().and_then(|s| s.to_str()).unwrap_or("run");
        let summary = csv.with_file_name(format!("{stem}.summary.json"));
        OutputPaths { csv, summary }
    }
}

#[derive(Clone, Debug)]
pub struct Outcome {
    pub paths: OutputPaths,
    pub rows: usize,
    pub summary: Value,
    /// One line per criterion for `accept`; empty otherwise.
    pub lines: Vec<String>,
}

struct Sink {
    path: PathBuf,
    writer: csv::Writer<fs::File>,
    fingerprint: String,
    seed: u64,
    rows: usize,
}

impl Sink {
    fn create(path: &Path, plan: &Plan, columns: &[String]) -> Result<Self, RunError> {
        let io = |source| RunError::Io {
            path: path.to_path_buf(),
            source,
        };
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            fs::create_dir_all(dir).map_err(io)?;
        }
        let mut sink = Sink {
            path: path.to_path_buf(),
            writer: csv::Writer::from_writer(fs::File::create(path).map_err(io)?),
            fingerprint: plan.fingerprint.clone(),
            seed: plan.seed,
            rows: 0,
        };
        let mut header = vec!["fingerprint".to_string(), "seed".to_string()];
        header.extend(columns.iter().cloned());
        sink.writer
            .write_record(&header)
            .map_err(|e| sink.error(e))?;
        Ok(sink)
    }

    fn error(&self, e: csv::Error) -> RunError {
        RunError::Io {
            path: self.path.clone(),
            source: e.into(),
        }
    }

    fn row(&mut self, fields: impl IntoIterator<Item = String>) -> Result<(), RunError> {
        let mut record = vec![self.fingerprint.clone(), self.seed.to_string()];
        record.extend(fields);
        self.writer
            .write_record(&record)
            .map_err(|e| self.error(e))?;
        self.rows += 1;
        Ok(())
    }

    fn finish(mut self) -> Result<usize, RunError> {
        self.writer.flush().map_err(|source| RunError::Io {
            path: self.path.clone(),
            source,
        })?;
        Ok(self.rows)
    }
}

fn components(prefix: &str, dim: usize) -> Vec<String> {
    if dim == 1 {
        vec![prefix.to_string()]
    } else {
        (1..=dim).map(|k| format!("{prefix}_{k}")).collect()
    }
}

fn num(v: f64) -> String {
    // shortest round-trip representation
    format!("{v:?}")
}

fn batches(total: usize) -> impl Iterator<Item = std::ops::Range<usize>> {
    (0..total)
        .step_by(BATCH)
        .map(move |s| s..(s + BATCH).min(total))
}

fn start_of(cocycle: &Cocycle, seed: u64, i: usize) -> crate::driver::SystemState {
    cocycle
        .system
        .sample_initial(trajectory_seed(seed, i as u64))
}

fn columns(names: &[&str]) -> Vec<String> {
    names.iter().map(|s| s.to_string()).collect()
}

fn run_trace(plan: &Plan, exec: Execution, sink: &mut Sink) -> Result<Value, RunError> {
    let Task::Trace {
        cocycle,
        len,
        seeds,
    } = &plan.task
    else {
        unreachable!()
    };
    let mut finals = Vec::with_capacity(*seeds);
    for range in batches(*seeds) {
        let offset = range.start;
        let traces = map_indexed(exec, range.len(), |j| {
            cocycle.sums(&start_of(cocycle, plan.seed, offset + j), *len)
        });
        for (j, trace) in traces.iter().enumerate() {
            for n in 1..=*len {
                let mut row = vec![(offset + j).to_string(), n.to_string()];
                row.extend(trace.value(n).as_slice().iter().map(|&c| num(c)));
                row.push(num(trace.norm(n)));
                sink.row(row)?;
            }
            finals.push(trace.norm(*len));
        }
    }
    Ok(json!({
        "mean_final_norm": mean(&finals),
        "max_final_norm": finals.iter().copied().fold(0.0, f64::max),
        "surrogate_orbits": cocycle.system.is_surrogate(),
    }))
}

fn run_induce(plan: &Plan, exec: Execution, sink: &mut Sink) -> Result<Value, RunError> {
    let Task::Induce {
        cocycle,
        set,
        returns,
        seeds,
        cap,
    } = &plan.task
    else {
        unreachable!()
    };
    let mut ratios = Vec::with_capacity(*seeds);
    let mut distributional_only = false;
    for range in batches(*seeds) {
        let offset = range.start;
        let traces = try_map_indexed(exec, range.len(), |j| {
            let seed = trajectory_seed(plan.seed, (offset + j) as u64);
            let x = enter_set(&cocycle.system, set, seed, *cap)?;
            induced_trace(cocycle, set, &x, *returns, *cap)
        })
        .map_err(module(format!("inducing on {set}")))?;
        for (j, t) in traces.iter().enumerate() {
            for n in 1..=*returns {
                let mut row = vec![
                    (offset + j).to_string(),
                    n.to_string(),
                    t.return_time(n).to_string(),
                ];
                row.extend(t.sum(n).as_slice().iter().map(|&c| num(c)));
                sink.row(row)?;
            }
            ratios.push(t.return_time(*returns) as f64 / *returns as f64);
            distributional_only |= t.distributional_only();
        }
    }
    Ok(json!({
        "set": set.to_string(),
        "returns": returns,
        "cap": cap,
        "mean_return": mean(&ratios),
        "per_seed_return": ratios,
        "expected_return": set.measure(&cocycle.system).map(|m| 1.0 / m),
        "distributional_only": distributional_only,
    }))
}

fn run_directions(plan: &Plan, exec: Execution, sink: &mut Sink) -> Result<Value, RunError> {
    let Task::Directions {
        cocycle,
        len,
        seeds,
        thresholds,
        quorum,
        epsilon,
    } = &plan.task
    else {
        unreachable!()
    };
    let firsts = map_indexed(exec, *seeds, |i| {
        let trace = cocycle.sums(&start_of(cocycle, plan.seed, i), *len);
        (
            trace.norm(*len),
            recurrence_diagnostic(&trace, *epsilon).verdict,
        )
    });
    let thresholds = match thresholds {
        Some(t) => t.clone(),
        None => {
            let mut finals: Vec<f64> = firsts.iter().map(|f| f.0).collect();
            finals.sort_by(f64::total_cmp);
            let mid = finals.len() / 2;
            let median = if finals.len() % 2 == 1 {
                finals[mid]
            } else {
                0.5 * (finals[mid - 1] + finals[mid])
            };
            default_thresholds(median)
        }
    };
    let mesh = SphereMesh::for_dim(cocycle.dim());
    let hists = trajectory_histograms(cocycle, *len, &mesh, &thresholds, *seeds, plan.seed, exec);
    let estimate = direction_set_estimate(&hists, *quorum);
    let merged = hists[1..]
        .iter()
        .fold(hists[0].clone(), |acc, h| acc.merge(h));
    for (t, &level) in thresholds.iter().enumerate() {
        let counts = merged.counts(t);
        let visiting: Vec<usize> = (0..mesh.cells())
            .map(|c| hists.iter().filter(|h| h.counts(t)[c] > 0).count())
            .collect();
        for c in 0..mesh.cells() {
            let mut row = vec![c.to_string()];
            row.extend(mesh.center(c).as_slice().iter().map(|&v| num(v)));
            row.push(mesh.center_angle(c).map(num).unwrap_or_default());
            row.push(num(level));
            row.push(counts[c].to_string());
            row.push(num(visiting[c] as f64 / hists.len() as f64));
            sink.row(row)?;
        }
    }
    let count = |v: RecurrenceVerdict| firsts.iter().filter(|f| f.1 == v).count();
    let tally = [
        (
            RecurrenceVerdict::RecurrentLike,
            count(RecurrenceVerdict::RecurrentLike),
        ),
        (
            RecurrenceVerdict::TransientLike,
            count(RecurrenceVerdict::TransientLike),
        ),
        (
            RecurrenceVerdict::Inconclusive,
            count(RecurrenceVerdict::Inconclusive),
        ),
    ];
    let verdict = tally
        .iter()
        .find(|t| 2 * t.1 > *seeds)
        .map_or(RecurrenceVerdict::Inconclusive, |t| t.0);
    Ok(json!({
        "verdict": verdict,
        "recurrence": {
            "epsilon": epsilon,
            "recurrent_like": tally[0].1,
            "transient_like": tally[1].1,
            "inconclusive": tally[2].1,
        },
        "mesh": mesh.info(),
        "thresholds": thresholds,
        "quorum": quorum,
        "direction_set": estimate.cells,
        "full_sphere": estimate.is_full(),
        "components": mesh.components(&estimate.mask()),
        "surrogate_orbits": cocycle.system.is_surrogate(),
    }))
}

fn run_filling(plan: &Plan, exec: Execution, sink: &mut Sink) -> Result<Value, RunError> {
    let Task::Filling {
        cocycle,
        len,
        seeds,
    } = &plan.task
    else {
        unreachable!()
    };
    let grid = dyadic_grid(*len);
    let mut worst_discrepancy = 0.0f64;
    let mut worst_residual = 0.0f64;
    let mut rates = Vec::with_capacity(*seeds);
    for range in batches(*seeds) {
        let offset = range.start;
        let results = try_map_indexed(exec, range.len(), |j| {
            let x = start_of(cocycle, plan.seed, offset + j);
            let mp = min_process(cocycle, &x, *len)?;
            let trace = cocycle.sums(&x, *len);
            let path: Vec<f64> = trace.values().skip(1).map(|v| v[0]).collect();
            Ok::<_, crate::filling::FillingError>((mp, cocycle.eval(&x)[0], kesten_rate_of(&path)))
        })
        .map_err(module("filling scheme"))?;
        for (j, (mp, phi, rate)) in results.iter().enumerate() {
            for &n in &grid {
                let residual = mp.residual_at(*phi, n);
                worst_residual = worst_residual.max(residual);
                sink.row([
                    (offset + j).to_string(),
                    n.to_string(),
                    num(mp.m(n)),
                    num(residual),
                ])?;
            }
            worst_discrepancy = worst_discrepancy.max(mp.discrepancy());
            rates.push(*rate);
        }
    }
    let rule = OscillationRule::default();
    let oscillation = classify_oscillation(cocycle, *seeds, *len, plan.seed, rule, exec)
        .map_err(module("oscillation"))?;
    Ok(json!({
        "grid": grid,
        "mismatch_tolerance": crate::filling::MISMATCH_TOLERANCE,
        "max_recursion_discrepancy": worst_discrepancy,
        "max_decomposition_residual": worst_residual,
        "kesten_rate": {"mean": mean(&rates), "per_seed": rates},
        "oscillation": oscillation,
        "surrogate_orbits": cocycle.system.is_surrogate(),
    }))
}

fn run_sojourn(plan: &Plan, exec: Execution, sink: &mut Sink) -> Result<Value, RunError> {
    let Task::Sojourn {
        cocycle,
        cone,
        len,
        seeds,
        grid,
        ball_radius,
    } = &plan.task
    else {
        unreachable!()
    };
    let mut maxima = Vec::with_capacity(*seeds);
    let mut minima = Vec::with_capacity(*seeds);
    for range in batches(*seeds) {
        let offset = range.start;
        let series = try_map_indexed(exec, range.len(), |j| {
            let trace = cocycle.sums(&start_of(cocycle, plan.seed, offset + j), *len);
            sojourn_series(&trace, cone, grid, *ball_radius)
        })
        .map_err(module(format!("sojourn in {cone}")))?;
        for (j, s) in series.iter().enumerate() {
            for (k, &n) in s.grid.iter().enumerate() {
                sink.row([
                    (offset + j).to_string(),
                    n.to_string(),
                    num(s.tau[k]),
                    num(s.tau_discrete[k]),
                    s.ball_frequency.get(k).map(|&f| num(f)).unwrap_or_default(),
                ])?;
            }
            maxima.push(s.max());
            minima.push(s.min());
        }
    }
    let frac = |xs: &[f64], f: &dyn Fn(f64) -> bool| {
        xs.iter().filter(|&&x| f(x)).count() as f64 / xs.len() as f64
    };
    Ok(json!({
        "cone": cone,
        "grid": grid,
        "ball_radius": ball_radius,
        "degenerate_tolerance": crate::sojourn::DEGENERATE_TOLERANCE,
        "fraction_max_at_least_0.9": frac(&maxima, &|x| x >= 0.9),
        "fraction_min_at_most_0.1": frac(&minima, &|x| x <= 0.1),
        "per_seed_max": maxima,
        "per_seed_min": minima,
        "surrogate_orbits": cocycle.system.is_surrogate(),
    }))
}

fn run_brownian(plan: &Plan, exec: Execution, sink: &mut Sink) -> Result<Value, RunError> {
    let Task::Brownian {
        cone,
        horizon,
        step,
        samples,
        alpha,
    } = &plan.task
    else {
        unreachable!()
    };
    let taus = tau_samples(cone, *horizon, *step, *samples, plan.seed, exec)
        .map_err(module("Brownian paths"))?;
    for (i, &t) in taus.iter().enumerate() {
        sink.row([i.to_string(), num(t)])?;
    }
    let normalized: Vec<f64> = taus.iter().map(|t| t / horizon).collect();
    let arcsine_ks =
        matches!(cone, Cone::HalfSpace { .. }).then(|| ks_one_sample(&normalized, arcsine_cdf));
    let positivity = match alpha {
        Some(a) => Some(
            positivity_check(cone, *a, *samples, *step, plan.seed, exec)
                .map_err(module("positivity"))?,
        ),
        None => None,
    };
    Ok(json!({
        "cone": cone,
        "t": horizon,
        "h": step,
        "effective_h": horizon / (horizon / step).ceil(),
        "samples": samples,
        "mean_tau": mean(&normalized),
        "arcsine_ks": arcsine_ks,
        "positivity": positivity,
    }))
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<(), RunError> {
    let io = |source| RunError::Io {
        path: path.to_path_buf(),
        source,
    };
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(io)?;
    }
    let mut f = fs::File::create(path).map_err(io)?;
    serde_json::to_writer_pretty(&mut f, value).map_err(|e| io(e.into()))?;
    writeln!(f).map_err(io)
}

/// Runs the plan and writes its outputs.
pub fn run(plan: &Plan, exec: Execution) -> Result<Outcome, RunError> {
    if let Task::Accept {
        criteria,
        zero_tolerance,
    } = &plan.task
    {
        let opts = AcceptOptions {
            seed: plan.seed,
            exec,
            zero_tolerance: *zero_tolerance,
        };
        let report = accept_suite(&opts, criteria);
        let out = plan.out.clone().unwrap_or_else(|| PathBuf::from("."));
        let path = if out.extension().is_some_and(|e| e == "json") {
            out
        } else {
            out.join("acceptance.json")
        };
        write_json(&path, &report)?;
        let lines = report.criteria.iter().map(|c| c.line()).collect();
        return Ok(Outcome {
            paths: OutputPaths {
                csv: PathBuf::new(),
                summary: path,
            },
            rows: 0,
            summary: serde_json::to_value(&report).expect("report serializes"),
            lines,
        });
    }

    let paths = OutputPaths::resolve(plan.out.as_deref(), plan.operation);
    let cols: Vec<String> = match &plan.task {
        Task::Trace { cocycle, .. } => {
            let mut c = columns(&["trajectory", "n"]);
            c.extend(components("phi", cocycle.dim()));
            c.push("norm".into());
            c
        }
        Task::Induce { cocycle, .. } => {
            let mut c = columns(&["trajectory", "n", "R_n"]);
            c.extend(components("PhiB", cocycle.dim()));
            c
        }
        Task::Directions { cocycle, .. } => {
            let mut c = columns(&["cell"]);
            c.extend(components("center", cocycle.dim()));
            c.extend(columns(&["angle", "threshold", "count", "visit_fraction"]));
            c
        }
        Task::Filling { .. } => columns(&["trajectory", "n", "m_n", "residual"]),
        Task::Sojourn { .. } => columns(&["trajectory", "n", "tau", "tau_discrete", "ball_freq"]),
        Task::Brownian { .. } => columns(&["sample", "tau"]),
        Task::Accept { .. } => unreachable!(),
    };
    let mut sink = Sink::create(&paths.csv, plan, &cols)?;
    let results = match plan.operation {
        Operation::Trace => run_trace(plan, exec, &mut sink),
        Operation::Induce => run_induce(plan, exec, &mut sink),
        Operation::Directions => run_directions(plan, exec, &mut sink),
        Operation::Filling => run_filling(plan, exec, &mut sink),
        Operation::Sojourn => run_sojourn(plan, exec, &mut sink),
        Operation::Brownian => run_brownian(plan, exec, &mut sink),
        Operation::Accept => unreachable!(),
    }?;
    let rows = sink.finish()?;
    let summary = json!({
        "operation": plan.operation,
        "seed": plan.seed,
        "fingerprint": plan.fingerprint,
        "parameters": plan.parameters,
        "rows": rows,
        "results": results,
    });
    write_json(&paths.summary, &summary)?;
    Ok(Outcome {
        paths,
        rows,
        summary,
        lines: Vec::new(),
    })
}
