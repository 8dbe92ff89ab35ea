use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use serde::Serialize;
use serde_json::{json, Value};
use ternary_ok::balls::{
    brute_force_binary, brute_force_optimal, conjecture_matrices, conjecture_omega_grid, conjecture_sweep,
    degenerate_family, BINARY_MAX_N, TERNARY_MAX_N,
};
use ternary_ok::energy::{free_energy, EnergyBreakdown, WidthVector};
use ternary_ok::interaction::{
    canonicalize_gamma, decompose_f, f_from_gamma, gamma_from_f, is_admissible, Decomposition,
};
use ternary_ok::numeric::{format_significant, round_significant};
use ternary_ok::optimizer::{optimize_repeats, optimize_widths, OptimizationResult};
use ternary_ok::pattern::Pattern;
use ternary_ok::phasediag::{emit_csv, emit_svg, sweep, CandidateSet, Section, SENTINEL_WINNER};
use ternary_ok::search::global_search;

use crate::config::RunConfig;
use crate::{BallsMode, CliError, SectionArg};

/// Significant digits of printed energies.
pub const ENERGY_DIGITS: usize = 15;

const FAILURE: u8 = 3;

pub enum WidthMode {
    Uniform,
    Given(Vec<f64>),
    Optimized,
}

pub struct MatrixOps {
    pub check: bool,
    pub canonicalize: bool,
    pub decompose: bool,
}

fn rounded(e: &EnergyBreakdown) -> Value {
    json!({
        "short_range": round_significant(e.short_range, ENERGY_DIGITS),
        "long_range": round_significant(e.long_range, ENERGY_DIGITS),
        "total": round_significant(e.total, ENERGY_DIGITS),
    })
}

fn envelope(command: &str, config: &RunConfig, body: Value) -> Value {
    let mut out = json!({ "command": command, "config": config });
    if let (Value::Object(o), Value::Object(b)) = (&mut out, body) {
        o.extend(b);
    }
    out
}

fn to_json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serializable");
    s.push('\n');
    s
}

fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
    }
    std::fs::write(path, text).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn config_comment(config: &RunConfig) -> String {
    format!("config: {}", serde_json::to_string(config).expect("serializable"))
}

fn with_comment(config: &RunConfig, csv: &str) -> String {
    format!("# {}\n{csv}", config_comment(config))
}

/// Prints `doc` and mirrors it to the configured JSON path.
fn emit(config: &RunConfig, doc: &Value) -> Result<(), CliError> {
    let text = to_json(doc);
    if let Some(p) = &config.output.json_path {
        write_file(p, &text)?;
    }
    print!("{text}");
    Ok(())
}

fn parse_pattern(s: &str) -> Result<Pattern, CliError> {
    Ok(s.trim().parse::<Pattern>()?)
}

fn optimization_json(r: &OptimizationResult) -> Value {
    json!({
        "converged": r.converged,
        "iterations": r.iterations,
        "stationarity": r.stationarity,
        "degenerate_layers": r.degenerate_layers,
    })
}

fn status(converged: bool) -> ExitCode {
    if converged {
        ExitCode::SUCCESS
    } else {
        eprintln!("error: optimizer did not converge");
        ExitCode::from(FAILURE)
    }
}

pub fn energy(config: &RunConfig, pattern: &str, mode: WidthMode) -> Result<ExitCode, CliError> {
    let params = config.params()?;
    let p = parse_pattern(pattern)?;
    let (widths, energy, opt) = match mode {
        WidthMode::Uniform => {
            let w = WidthVector::uniform(&p, &params.omega);
            let e = free_energy(&p, &w, &params)?;
            (w, e, None)
        }
        WidthMode::Given(raw) => {
            let w = WidthVector::new(raw, &p, &params.omega)?;
            let e = free_energy(&p, &w, &params)?;
            (w, e, None)
        }
        WidthMode::Optimized => {
            let r = optimize_widths(&p, &params, &config.tolerances)?;
            (r.widths.clone(), r.energy, Some(r))
        }
    };
    let doc = envelope(
        "energy",
        config,
        json!({
            "pattern": p.to_string(),
            "widths": widths,
            "energy": rounded(&energy),
            "optimization": opt.as_ref().map(optimization_json),
        }),
    );
    emit(config, &doc)?;
    Ok(status(opt.is_none_or(|r| r.converged)))
}

pub fn optimize(config: &RunConfig, pattern: &str, repeats: Option<usize>) -> Result<ExitCode, CliError> {
    let params = config.params()?;
    let p = parse_pattern(pattern)?;
    let (best, r, energies) = match repeats {
        None => (p.clone(), optimize_widths(&p, &params, &config.tolerances)?, None),
        Some(n_max) => {
            let o = optimize_repeats(&p, &params, n_max, &config.tolerances)?;
            (p.repeat(o.n)?, o.result, Some((o.n, o.energies, o.at_boundary)))
        }
    };
    let repeats = energies.map(|(n, e, at_boundary)| {
        let e: Vec<f64> = e.iter().map(|x| round_significant(*x, ENERGY_DIGITS)).collect();
        json!({ "best_n": n, "energies": e, "at_boundary": at_boundary })
    });
    let doc = envelope(
        "optimize",
        config,
        json!({
            "pattern": best.to_string(),
            "widths": r.widths,
            "energy": rounded(&r.energy),
            "optimization": optimization_json(&r),
            "repeats": repeats,
        }),
    );
    emit(config, &doc)?;
    Ok(status(r.converged))
}

pub fn search(config: &RunConfig, max_len: usize) -> Result<ExitCode, CliError> {
    let params = config.params()?;
    let report = global_search(&params, max_len, &config.tolerances)?;
    let path = config.output.json_path.clone().unwrap_or_else(|| PathBuf::from("search_report.json"));
    write_file(&path, &to_json(&envelope("search", config, json!({ "report": report }))))?;
    if let Some(csv) = &config.output.csv_path {
        write_file(csv, &with_comment(config, &report.records_csv()))?;
    }
    let best = &report.best;
    println!(
        "best {} (length {}) energy {}",
        best.pattern,
        best.pattern.len(),
        format_significant(best.result.energy.total, ENERGY_DIGITS)
    );
    for (len, b) in &report.per_length_best {
        println!("  length {len:>2}: {} {}", b.pattern, format_significant(b.energy, ENERGY_DIGITS));
    }
    println!("evaluated {} patterns, {} failures", report.evaluated_count, report.failures.len());
    if report.frontier_stopped {
        println!("warning: best pattern has the maximal length; longer patterns may do better");
    }
    println!("report written to {}", path.display());
    if report.failures.is_empty() && best.result.converged {
        Ok(ExitCode::SUCCESS)
    } else {
        for f in &report.failures {
            eprintln!("failure: {f}");
        }
        Ok(ExitCode::from(FAILURE))
    }
}

pub fn phasediag(config: &RunConfig, section: SectionArg, resolution: usize) -> Result<ExitCode, CliError> {
    let section = match section {
        SectionArg::Omega => Section::Omega,
        SectionArg::Tension => Section::Tension,
    };
    let family = config
        .matrix
        .family
        .named()
        .ok_or_else(|| CliError::Validation("phase diagrams need a named family (ren, ohta or blend)".into()))?;
    config.tolerances.validate()?;
    let grid = sweep(section, family, resolution, &config.tolerances)?;
    let stem = format!("phasediag_{}_{}", section.name(), family.name());
    let csv_path = config.output.csv_path.clone().unwrap_or_else(|| PathBuf::from(format!("{stem}.csv")));
    let svg_path = config.output.svg_path.clone().unwrap_or_else(|| PathBuf::from(format!("{stem}.svg")));
    let comment = config_comment(config);
    write_file(&csv_path, &emit_csv(&grid, std::slice::from_ref(&comment)))?;
    write_file(&svg_path, &emit_svg(&grid, Some(&comment)))?;
    if let Some(p) = &config.output.json_path {
        write_file(p, &to_json(&envelope("phasediag", config, json!({ "grid": grid }))))?;
    }
    let candidates = CandidateSet::standard();
    let mut counts: BTreeMap<usize, usize> = BTreeMap::new();
    for c in &grid.cells {
        *counts.entry(c.winner).or_default() += 1;
    }
    println!("{} section, {} family, {} cells", section.name(), family.name(), grid.cells.len());
    for (w, n) in &counts {
        let label = candidates.label(*w).unwrap_or("failed");
        println!("  {w:>2} {label:<12} {n}");
    }
    println!("wrote {} and {}", csv_path.display(), svg_path.display());
    let failed = counts.get(&SENTINEL_WINNER).copied().unwrap_or(0);
    if failed > 0 {
        eprintln!("error: {failed} cells failed to evaluate");
        return Ok(ExitCode::from(FAILURE));
    }
    Ok(ExitCode::SUCCESS)
}

pub fn matrix(config: &RunConfig, ops: MatrixOps, f: Option<[f64; 3]>, tol: f64) -> Result<ExitCode, CliError> {
    if !(tol > 0.0 && tol.is_finite()) {
        return Err(CliError::Validation(format!("tolerance must be positive, got {tol}")));
    }
    let omega = config.fractions()?;
    let (source, gamma) = match f {
        Some([f12, f13, f23]) => ("pairwise", gamma_from_f(&Decomposition::new(f12, f13, f23).to_matrix(), &omega)),
        None => ("config", config.gamma_matrix()?),
    };
    let all = !(ops.check || ops.canonicalize || ops.decompose);
    let mut body = json!({ "source": source, "gamma": gamma, "f": f_from_gamma(&gamma, &omega) });
    let o = body.as_object_mut().expect("object");
    if all || ops.check {
        o.insert("check".into(), json!(is_admissible(&gamma, &omega, tol)));
    }
    if all || ops.canonicalize {
        o.insert("canonical".into(), json!(canonicalize_gamma(&gamma, &omega)));
    }
    if all || ops.decompose {
        o.insert("decomposition".into(), json!(decompose_f(&f_from_gamma(&gamma, &omega), tol)?));
    }
    emit(config, &envelope("matrix", config, body))?;
    Ok(ExitCode::SUCCESS)
}

pub fn balls(config: &RunConfig, mode: BallsMode, n: usize) -> Result<ExitCode, CliError> {
    match mode {
        BallsMode::Binary => {
            let report = brute_force_binary(n)?;
            let family = if n <= BINARY_MAX_N { degenerate_family(n)? } else { Vec::new() };
            if let Some(csv) = &config.output.csv_path {
                write_file(csv, &with_comment(config, &report.table_csv()))?;
            }
            let doc = envelope("balls", config, json!({ "mode": "binary", "report": report, "degenerate_family": family }));
            emit(config, &doc)?;
        }
        BallsMode::Ternary => {
            let omega = config.fractions()?;
            let f = f_from_gamma(&config.gamma_matrix()?, &omega);
            let report = brute_force_optimal(n, &omega, &f)?;
            if let Some(csv) = &config.output.csv_path {
                write_file(csv, &with_comment(config, &report.table_csv()))?;
            }
            emit(config, &envelope("balls", config, json!({ "mode": "ternary", "f": f, "report": report })))?;
        }
        BallsMode::ConjectureSweep => {
            if n == 0 || n > TERNARY_MAX_N {
                return Err(CliError::Validation(format!("n must be in 1..={TERNARY_MAX_N}, got {n}")));
            }
            let ns: Vec<usize> = (1..=n).collect();
            let result = conjecture_sweep(&ns, &conjecture_matrices(), &conjecture_omega_grid())?;
            let mut out = String::new();
            for c in &result.cells {
                let _ = writeln!(
                    out,
                    "n={} f=({:.6},{:.6},{:.6}) omega=({:.6},{:.6},{:.6}) {}",
                    c.n,
                    c.f.f12,
                    c.f.f13,
                    c.f.f23,
                    c.omega[0],
                    c.omega[1],
                    c.omega[2],
                    if c.holds { "PASS" } else { "FAIL" }
                );
            }
            print!("{out}");
            println!("{} cells, {} counterexamples", result.cells.len(), result.counterexamples);
            if let Some(p) = &config.output.json_path {
                let doc = envelope("balls", config, json!({ "mode": "conjecture-sweep", "sweep": result }));
                write_file(p, &to_json(&doc))?;
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}
