use std::fmt::Write as _;
use std::fs;
use std::io::{self, BufReader, Write};
use std::path::Path;
use std::time::Instant;

use aerofed_core::sim::{self, Approach, SimMetrics};
use aerofed_core::wire::{self, catalog_dump, SCHEMA_VERSION};
use aerofed_core::{solve, ScenarioSpec, GB};
use serde::Serialize;

use crate::args::{EngineArgs, Output};
use crate::{overrides, serve, Failure, Verbosity};

/// Cache sizes (GB) of the validation experiment with the expected AEC objective.
const VALIDATION_POINTS: [(u64, usize); 2] = [(4, 4), (32, 18)];
const BASELINE_EXPECTED: usize = 2;

#[derive(Debug, Serialize)]
struct ValidationRow {
    cache_budget_bytes: u64,
    approach: Approach,
    served_slices: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    expected_served_slices: Option<usize>,
}

impl ValidationRow {
    fn matches(&self) -> bool {
        self.expected_served_slices
            .is_none_or(|e| e == self.served_slices)
    }
}

#[derive(Debug, Serialize)]
struct ValidationReport {
    schema_version: &'static str,
    overrides: Vec<String>,
    expectations_asserted: bool,
    passed: bool,
    rows: Vec<ValidationRow>,
}

fn objective(spec: &ScenarioSpec, baseline: bool) -> Result<usize, Failure> {
    let problem = spec.problem();
    let problem = if baseline {
        problem.baseline()
    } else {
        problem
    };
    solve(&problem)
        .map(|p| p.objective)
        .map_err(|e| Failure::Usage(e.to_string()))
}

pub fn validate(
    json: bool,
    items: &[String],
    seed: Option<u64>,
    v: Verbosity,
) -> Result<(), Failure> {
    let started = Instant::now();
    let spec = with_seed(overrides::apply(ScenarioSpec::validation(), items)?, seed);
    let asserted = items.is_empty();
    let mut rows = Vec::new();
    for (gb, aec_expected) in VALIDATION_POINTS {
        let at = spec.with_cache(gb * GB);
        for (approach, expected) in [
            (Approach::Aec, aec_expected),
            (Approach::Baseline, BASELINE_EXPECTED),
        ] {
            rows.push(ValidationRow {
                cache_budget_bytes: gb * GB,
                approach,
                served_slices: objective(&at, approach == Approach::Baseline)?,
                expected_served_slices: asserted.then_some(expected),
            });
        }
    }
    let passed = rows.iter().all(ValidationRow::matches);
    v.info(format_args!("validation solved in {:?}", started.elapsed()));

    let text = if json {
        let report = ValidationReport {
            schema_version: SCHEMA_VERSION,
            overrides: items.to_vec(),
            expectations_asserted: asserted,
            passed,
            rows,
        };
        wire::to_canonical_string(&report) + "\n"
    } else {
        table(&rows, asserted, passed)
    };
    write_output(None, &text)?;
    if passed {
        Ok(())
    } else {
        Err(Failure::Mismatch)
    }
}

fn table(rows: &[ValidationRow], asserted: bool, passed: bool) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:>9}  {:<8}  {:>6}  {:>8}  status",
        "cache_gb", "approach", "served", "expected"
    );
    for r in rows {
        let expected = r
            .expected_served_slices
            .map_or("-".to_owned(), |e| e.to_string());
        let status = match (asserted, r.matches()) {
            (false, _) => "unchecked",
            (true, true) => "ok",
            (true, false) => "MISMATCH",
        };
        let gb = r.cache_budget_bytes as f64 / GB as f64;
        let _ = writeln!(
            out,
            "{gb:>9}  {:<8}  {:>6}  {expected:>8}  {status}",
            r.approach.as_str(),
            r.served_slices
        );
    }
    let verdict = match (asserted, passed) {
        (false, _) => "expectations suppressed (overrides active)",
        (true, true) => "validation passed",
        (true, false) => "validation FAILED",
    };
    let _ = writeln!(out, "{verdict}");
    out
}

/// Parses a comma-separated list of non-negative decimal gigabytes into bytes.
pub fn parse_cache_list(list: &str) -> Result<Vec<u64>, Failure> {
    let list = list.trim();
    if list.is_empty() {
        return Err(Failure::Usage("--cache-gb list is empty".into()));
    }
    list.split(',')
        .map(|item| {
            let item = item.trim();
            match item.parse::<f64>() {
                Ok(gb) if gb.is_finite() && gb >= 0.0 && gb * 1e9 < u64::MAX as f64 => {
                    Ok((gb * GB as f64).round() as u64)
                }
                _ => Err(Failure::Usage(format!(
                    "`{item}` is not a non-negative decimal GB value"
                ))),
            }
        })
        .collect()
}

pub fn sweep(
    cache_gb: &str,
    scenario: Option<&Path>,
    output: &Output,
    items: &[String],
    seed: Option<u64>,
    v: Verbosity,
) -> Result<(), Failure> {
    let budgets = parse_cache_list(cache_gb)?;
    let base = match scenario {
        Some(path) => load_scenario(path)?,
        None => ScenarioSpec::validation(),
    };
    let spec = with_seed(overrides::apply(base, items)?, seed);
    let started = Instant::now();
    let rows = sim::sweep(&spec, &budgets).map_err(|e| Failure::Usage(e.to_string()))?;
    v.info(format_args!(
        "swept {} cache budgets in {:?}",
        budgets.len(),
        started.elapsed()
    ));
    write_output(output.out.as_deref(), &sim::sweep_csv(&rows))
}

#[derive(Debug, Serialize)]
struct RunReport<'a> {
    schema_version: &'static str,
    #[serde(flatten)]
    metrics: &'a SimMetrics,
}

pub fn run(
    path: &Path,
    output: &Output,
    items: &[String],
    seed: Option<u64>,
    v: Verbosity,
) -> Result<(), Failure> {
    let spec = with_seed(overrides::apply(load_scenario(path)?, items)?, seed);
    let started = Instant::now();
    let text = if spec.sweep.is_some() {
        let rows = sim::sweep_scenario(&spec).map_err(|e| Failure::Usage(e.to_string()))?;
        sim::sweep_csv(&rows)
    } else {
        let metrics = sim::run(&spec).map_err(|e| Failure::Usage(e.to_string()))?;
        v.info(format_args!(
            "objective {} served {} mean delay {} s",
            metrics.analytical_objective, metrics.served_slice_count, metrics.mean_delay_s
        ));
        wire::to_canonical_string(&RunReport {
            schema_version: SCHEMA_VERSION,
            metrics: &metrics,
        }) + "\n"
    };
    v.info(format_args!(
        "ran {} in {:?}",
        path.display(),
        started.elapsed()
    ));
    write_output(output.out.as_deref(), &text)
}

pub fn serve(args: &EngineArgs, event_log: Option<&Path>, v: Verbosity) -> Result<(), Failure> {
    let mut engine = serve::engine(args)?;
    let stdin = io::stdin();
    let stdout = io::stdout();
    let mut out = stdout.lock();
    let errors = serve::pump(&mut engine, stdin.lock(), Some(&mut out))?;
    v.info(format_args!("end of input; {errors} error document(s)"));
    for ev in engine.event_log() {
        v.debug(format_args!(
            "{:.6} {} {} {}",
            ev.time_s, ev.block, ev.subject, ev.event
        ));
    }
    if let Some(path) = event_log {
        let mut text = String::new();
        for ev in engine.event_log() {
            text.push_str(&wire::to_canonical_string(ev));
            text.push('\n');
        }
        write_output(Some(path), &text)?;
    }
    Ok(())
}

pub fn inspect(input: Option<&Path>, args: &EngineArgs, v: Verbosity) -> Result<(), Failure> {
    let mut engine = serve::engine(args)?;
    let errors = match input {
        Some(p) if p != Path::new("-") => {
            let file =
                fs::File::open(p).map_err(|e| Failure::Io(format!("{}: {e}", p.display())))?;
            serve::pump(&mut engine, BufReader::new(file), None)?
        }
        _ => serve::pump(&mut engine, io::stdin().lock(), None)?,
    };
    if errors > 0 {
        v.info(format_args!("{errors} document(s) produced errors"));
    }
    write_output(
        None,
        &(wire::to_canonical_string(&catalog_dump(engine.catalog())) + "\n"),
    )
}

fn with_seed(mut spec: ScenarioSpec, seed: Option<u64>) -> ScenarioSpec {
    if let Some(seed) = seed {
        spec.seed = seed;
    }
    spec
}

fn load_scenario(path: &Path) -> Result<ScenarioSpec, Failure> {
    let bytes = fs::read(path).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))?;
    wire::parse(&bytes).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

fn write_output(path: Option<&Path>, text: &str) -> Result<(), Failure> {
    match path {
        Some(p) => fs::write(p, text).map_err(|e| Failure::Io(format!("{}: {e}", p.display()))),
        None => {
            let mut out = io::stdout().lock();
            out.write_all(text.as_bytes())
                .and_then(|_| out.flush())
                .map_err(|e| Failure::Io(format!("writing output: {e}")))
        }
    }
}
