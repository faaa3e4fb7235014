//! Batch front end: one subcommand per module operation, one JSON report
//! per run, exit codes 0 (pass), 2 (violation), 3 (cap), 4 (malformed).

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand};
use serde::Serialize;
use serde_json::{json, Value};

use crate::error::{ball_cap, enum_cap, LabError, Result, BALL_CAP_VAR, ENUM_CAP_VAR};
use crate::fixtures;
use crate::groups::{MarkedGroup, Word};
use crate::morse::{
    contraction_constant, extract_periodic_morse_candidate, morse_gauge_estimate, quasi_axis,
    translation_length, MorseGaugeTable,
};
use crate::paths::{
    is_local_quasi_geodesic, is_quasi_geodesic, normal_geodesic, LocalParams, PathInGraph, QGParams,
};
use crate::rat::{format_rat, parse_rat};
use crate::relhyp::{
    check_decomposition, coned_distance, coned_distance_formula, coset_distance,
    distance_formula_check, estimate_relhyp_constants, peripheral_projection,
    relevant_decomposition, PeripheralCoset, RelHypConstants,
};
use crate::verify::{
    local_hyperbolicity_certificate, local_to_global_exhaustive, local_to_global_experiment,
    pingpong_check, translation_spectrum, trichotomy_probe, SCHEMA_VERSION,
};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_VIOLATION: i32 = 2;
pub const EXIT_CAP: i32 = 3;
pub const EXIT_MALFORMED: i32 = 4;

#[derive(Parser, Debug)]
#[command(
    name = "morselab",
    version,
    about = "Desk-scale Cayley graph experiments"
)]
pub struct Cli {
    /// Group descriptor: a JSON file, or the name of a bundled fixture.
    #[arg(long, global = true)]
    pub group: Option<String>,
    /// Report destination; stdout when absent.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Seed for sampled commands, which require it.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Overrides MORSELAB_BALL_CAP for this run.
    #[arg(long, global = true)]
    pub ball_cap: Option<usize>,
    /// Overrides MORSELAB_ENUM_CAP for this run.
    #[arg(long, global = true)]
    pub enum_cap: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Cayley ball around a word.
    Ball {
        #[arg(long = "R")]
        #[serde(rename = "R")]
        r: usize,
        #[arg(long, default_value = "")]
        center: String,
        /// List the vertices too.
        #[arg(long)]
        vertices: bool,
    },
    /// Exact (λ,ε)-quasi-geodesic check of a path.
    CheckQg {
        #[arg(long)]
        path: PathBuf,
        #[arg(long, default_value = "1")]
        lambda: String,
        #[arg(long, default_value = "0")]
        epsilon: String,
    },
    /// (L; λ,ε)-local quasi-geodesic check of a path.
    CheckLocalQg {
        #[arg(long)]
        path: PathBuf,
        #[arg(long = "L")]
        #[serde(rename = "L")]
        l: usize,
        #[arg(long, default_value = "1")]
        lambda: String,
        #[arg(long, default_value = "0")]
        epsilon: String,
    },
    /// Measured Morse gauge of a geodesic.
    MorseGauge {
        #[arg(long)]
        path: PathBuf,
        /// Cells as "λ,ε;λ,ε"; the default grid when absent.
        #[arg(long)]
        grid: Option<String>,
    },
    /// Contraction constant of a geodesic inside a ball.
    Contraction {
        #[arg(long)]
        path: PathBuf,
        #[arg(long = "R")]
        #[serde(rename = "R")]
        r: usize,
    },
    /// Stable translation length of an element.
    Translation {
        #[arg(long)]
        elem: String,
        #[arg(long, default_value_t = 16)]
        nmax: usize,
    },
    /// Translation spectrum over conjugacy classes up to a length.
    Spectrum {
        #[arg(long)]
        maxlen: usize,
        /// Morse gauge table (JSON) filtering the classes.
        #[arg(long)]
        gauge: Option<PathBuf>,
    },
    /// Quasi-axis of an element built on its normal geodesic.
    Axis {
        #[arg(long)]
        elem: String,
        #[arg(long, default_value_t = 2)]
        periods: usize,
    },
    /// Periodic Morse candidate from a long geodesic.
    ExtractMorse {
        #[arg(long)]
        path: PathBuf,
        #[arg(long = "L")]
        #[serde(rename = "L")]
        l: usize,
    },
    /// Gate projection of a point onto a peripheral coset.
    Project {
        /// Coset representative.
        #[arg(long)]
        coset: String,
        #[arg(long)]
        factor: usize,
        #[arg(long)]
        x: String,
    },
    /// Distance in the coned-off graph.
    ConedDist {
        #[arg(long)]
        x: String,
        #[arg(long)]
        y: String,
        /// Also run the BFS in the coned ball of this radius.
        #[arg(long = "R")]
        #[serde(rename = "R")]
        r: Option<usize>,
    },
    /// Measures the relative hyperbolicity constants and θ on a ball.
    Constants {
        #[arg(long = "R", default_value_t = 4)]
        #[serde(rename = "R")]
        r: usize,
        #[arg(long, default_value_t = 200)]
        samples: usize,
        #[arg(long, default_value = "1")]
        lambda: String,
        #[arg(long, default_value = "0")]
        epsilon: String,
    },
    /// B-relevant decomposition of a local quasi-geodesic.
    Decompose {
        #[arg(long)]
        path: PathBuf,
        #[arg(long = "L")]
        #[serde(rename = "L")]
        l: usize,
        #[arg(long = "B")]
        #[serde(rename = "B")]
        b: usize,
        /// Constants block (JSON); measured on a ball of radius --R otherwise.
        #[arg(long)]
        constants: Option<PathBuf>,
        #[arg(long = "R", default_value_t = 4)]
        #[serde(rename = "R")]
        r: usize,
        #[arg(long, default_value = "1")]
        lambda: String,
        #[arg(long, default_value = "0")]
        epsilon: String,
    },
    /// Seeded check of the distance formula on ball pairs.
    DistanceFormula {
        #[arg(long = "R", default_value_t = 8)]
        #[serde(rename = "R")]
        r: usize,
        #[arg(long = "T", default_value_t = 4)]
        #[serde(rename = "T")]
        t: usize,
        #[arg(long, default_value_t = 500)]
        samples: usize,
    },
    /// Ping-pong sweep for the amalgam P *_I Q.
    Pingpong {
        #[arg(long = "P")]
        #[serde(rename = "P")]
        p: String,
        #[arg(long = "Q")]
        #[serde(rename = "Q")]
        q: String,
        #[arg(long = "I", default_value = "")]
        #[serde(rename = "I")]
        i: String,
        #[arg(long)]
        maxlen: usize,
    },
    /// Exhaustive slim-triangle certificate on a ball.
    HypCert {
        #[arg(long = "R")]
        #[serde(rename = "R")]
        r: usize,
        #[arg(long)]
        delta: usize,
    },
    /// Local-to-global experiment over a grid of scales.
    LtgExperiment {
        /// Comma-separated scales.
        #[arg(long = "L")]
        #[serde(rename = "L")]
        l: String,
        #[arg(long, default_value = "1")]
        lambda: String,
        #[arg(long, default_value = "0")]
        epsilon: String,
        #[arg(long, default_value_t = 100)]
        samples: usize,
        /// Gauge table (JSON) for the sampled segments.
        #[arg(long)]
        gauge: Option<PathBuf>,
        /// Single-cell gauge at (λ,ε) when no table is given.
        #[arg(long, default_value_t = 2)]
        gauge_bound: usize,
        /// Enumerate every local path from e instead of sampling.
        #[arg(long)]
        exhaustive: bool,
        #[arg(long, default_value_t = 8)]
        maxlen: usize,
    },
    /// Probe which case of the trichotomy the group shows.
    Trichotomy {
        #[arg(long, default_value_t = 8)]
        maxlen: usize,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Ball { .. } => "ball",
            Command::CheckQg { .. } => "check-qg",
            Command::CheckLocalQg { .. } => "check-local-qg",
            Command::MorseGauge { .. } => "morse-gauge",
            Command::Contraction { .. } => "contraction",
            Command::Translation { .. } => "translation",
            Command::Spectrum { .. } => "spectrum",
            Command::Axis { .. } => "axis",
            Command::ExtractMorse { .. } => "extract-morse",
            Command::Project { .. } => "project",
            Command::ConedDist { .. } => "coned-dist",
            Command::Constants { .. } => "constants",
            Command::Decompose { .. } => "decompose",
            Command::DistanceFormula { .. } => "distance-formula",
            Command::Pingpong { .. } => "pingpong",
            Command::HypCert { .. } => "hyp-cert",
            Command::LtgExperiment { .. } => "ltg-experiment",
            Command::Trichotomy { .. } => "trichotomy",
        }
    }

    fn sampled(&self) -> bool {
        matches!(
            self,
            Command::DistanceFormula { .. }
                | Command::LtgExperiment {
                    exhaustive: false,
                    ..
                }
        )
    }
}

/// A finished command: its result block and, for failed properties, the
/// one-line reason that carries the witness.
struct Outcome {
    result: Value,
    violation: Option<String>,
}

impl Outcome {
    fn pass(result: Value) -> Self {
        Outcome {
            result,
            violation: None,
        }
    }

    fn check(result: Value, ok: bool, reason: impl FnOnce() -> String) -> Self {
        Outcome {
            result,
            violation: (!ok).then(reason),
        }
    }
}

/// Parses arguments (a leading `run` is accepted), runs, writes the report
/// and returns the exit code. Failures print one line to stderr.
pub fn main_with_args<I: IntoIterator<Item = String>>(args: I) -> i32 {
    let mut args: Vec<String> = args.into_iter().collect();
    if args.get(1).map(String::as_str) == Some("run") {
        args.remove(1);
    }
    let cli = match Cli::try_parse_from(&args) {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            emit(&e.to_string());
            return EXIT_PASS;
        }
        Err(e) => {
            let text = e.to_string();
            let msg = text.lines().filter(|l| {
                !l.trim().is_empty() && !l.starts_with("Usage") && !l.starts_with("For more")
            });
            eprintln!(
                "error=malformed {}",
                one_line(&msg.collect::<Vec<_>>().join(" ")).trim_start_matches("error: ")
            );
            return EXIT_MALFORMED;
        }
    };
    match run(&cli) {
        Ok(None) => EXIT_PASS,
        Ok(Some(reason)) => {
            eprintln!("error=violation {}", one_line(&reason));
            EXIT_VIOLATION
        }
        Err(e) => {
            let (kind, code, msg) = match &e {
                LabError::Malformed(m) => ("malformed", EXIT_MALFORMED, m.clone()),
                LabError::Precondition(_) => ("precondition", EXIT_MALFORMED, e.to_string()),
                LabError::Cap { .. } => ("cap", EXIT_CAP, e.to_string()),
                LabError::Violation(m) => ("violation", EXIT_VIOLATION, m.clone()),
            };
            eprintln!("error={kind} {}", one_line(&msg));
            code
        }
    }
}

/// Stdout write that tolerates a closed pipe.
fn emit(text: &str) {
    use std::io::Write;
    let _ = std::io::stdout().lock().write_all(text.as_bytes());
}

fn one_line(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Runs one command; Ok(Some(reason)) is a completed run whose property failed.
pub fn run(cli: &Cli) -> Result<Option<String>> {
    if let Some(c) = cli.ball_cap {
        set_cap(BALL_CAP_VAR, c)?;
    }
    if let Some(c) = cli.enum_cap {
        set_cap(ENUM_CAP_VAR, c)?;
    }
    let spec = cli
        .group
        .as_deref()
        .ok_or_else(|| LabError::malformed("--group is required"))?;
    let g = load_group(spec)?;
    if cli.command.sampled() && cli.seed.is_none() {
        return Err(LabError::malformed(format!(
            "{} is sampled and needs --seed",
            cli.command.name()
        )));
    }
    let started = Instant::now();
    let outcome = dispatch(&g, &cli.command, cli.seed.unwrap_or(0), started)?;
    let report = json!({
        "schema_version": SCHEMA_VERSION,
        "command": cli.command.name(),
        "group": g.descriptor(),
        "config": {"parameters": &cli.command, "seed": cli.seed, "ball_cap": ball_cap(), "enum_cap": enum_cap()},
        "status": if outcome.violation.is_some() { "violation" } else { "pass" },
        "result": outcome.result,
        "runtime_ms": started.elapsed().as_millis() as u64,
    });
    let text = serde_json::to_string_pretty(&report).expect("reports serialize") + "\n";
    match &cli.out {
        Some(p) => write_atomic(p, &text)?,
        None => emit(&text),
    }
    Ok(outcome.violation)
}

fn set_cap(var: &str, value: usize) -> Result<()> {
    if value == 0 {
        return Err(LabError::malformed("caps must be at least 1"));
    }
    std::env::set_var(var, value.to_string());
    Ok(())
}

/// A descriptor file, or failing that a bundled fixture named by the file stem.
pub fn load_group(spec: &str) -> Result<MarkedGroup> {
    let path = Path::new(spec);
    if path.is_file() {
        let text =
            fs::read_to_string(path).map_err(|e| LabError::malformed(format!("{spec}: {e}")))?;
        return MarkedGroup::from_json(&text);
    }
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or(spec);
    if fixtures::json(stem).is_some() {
        return fixtures::load(stem);
    }
    Err(LabError::malformed(format!(
        "{spec} is neither a descriptor file nor a bundled group"
    )))
}

/// Writes next to the target, then renames, so readers never see a partial report.
pub fn write_atomic(path: &Path, text: &str) -> Result<()> {
    let io = |e: std::io::Error| LabError::malformed(format!("{}: {e}", path.display()));
    let name = path
        .file_name()
        .ok_or_else(|| LabError::malformed("--out needs a file name"))?;
    let tmp = path.with_file_name(format!(
        ".{}.{}.tmp",
        name.to_string_lossy(),
        std::process::id()
    ));
    fs::write(&tmp, text).map_err(io)?;
    fs::rename(&tmp, path).map_err(|e| {
        let _ = fs::remove_file(&tmp);
        io(e)
    })
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| LabError::malformed(format!("{}: {e}", path.display())))
}

fn read_path(g: &MarkedGroup, path: &Path) -> Result<PathInGraph> {
    PathInGraph::from_json(g, &read(path)?)
}

fn qg(lambda: &str, epsilon: &str) -> Result<QGParams> {
    QGParams::new(parse_rat(lambda)?, parse_rat(epsilon)?)
}

fn word(g: &MarkedGroup, text: &str) -> Result<Word> {
    g.parse_word(text)
}

fn read_gauge(path: &Path) -> Result<MorseGaugeTable> {
    serde_json::from_str(&read(path)?).map_err(|e| LabError::malformed(format!("gauge table: {e}")))
}

fn parse_grid(text: &str) -> Result<Vec<QGParams>> {
    text.split(';')
        .filter(|c| !c.trim().is_empty())
        .map(|c| {
            let (l, e) = c
                .split_once(',')
                .ok_or_else(|| LabError::malformed(format!("grid cell {c:?} is not \"λ,ε\"")))?;
            qg(l.trim(), e.trim())
        })
        .collect()
}

fn parse_scales(text: &str) -> Result<Vec<usize>> {
    text.split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| {
            s.trim()
                .parse()
                .map_err(|_| LabError::malformed(format!("scale {s:?} is not a natural number")))
        })
        .collect()
}

fn dispatch(g: &MarkedGroup, cmd: &Command, seed: u64, started: Instant) -> Result<Outcome> {
    Ok(match cmd {
        Command::Ball {
            r,
            center,
            vertices,
        } => {
            let ball = g.ball(&word(g, center)?, *r)?;
            let mut v = json!({
                "center": g.format_word(&ball.center),
                "R": ball.radius,
                "size": ball.len(),
                "sphere_sizes": ball.sphere_sizes(),
            });
            if *vertices {
                v["vertices"] = json!(ball
                    .vertices
                    .iter()
                    .map(|w| g.format_word(w))
                    .collect::<Vec<_>>());
            }
            Outcome::pass(v)
        }
        Command::CheckQg {
            path,
            lambda,
            epsilon,
        } => {
            let p = read_path(g, path)?;
            let q = qg(lambda, epsilon)?;
            let v = is_quasi_geodesic(g, &p, &q);
            let witness = v.worst_pair.filter(|_| !v.verdict);
            let result = json!({"qg": q, "verdict": v.verdict, "worst_pair": v.worst_pair,
                "margin": v.margin.map(|m| format_rat(&m)),
                "witness": witness.map(|(s, t)| [g.format_word(&p.point(g, s)), g.format_word(&p.point(g, t))])});
            Outcome::check(result, v.verdict, || {
                let (s, t) = witness.unwrap_or_default();
                format!(
                    "path is not a {}-quasi-geodesic: pair ({s}, {t})",
                    q.label()
                )
            })
        }
        Command::CheckLocalQg {
            path,
            l,
            lambda,
            epsilon,
        } => {
            let p = read_path(g, path)?;
            let lp = LocalParams::new(*l, qg(lambda, epsilon)?)?;
            let v = is_local_quasi_geodesic(g, &p, &lp);
            let result = json!({"local": lp, "verdict": v.verdict, "worst_window": v.worst_window});
            Outcome::check(result, v.verdict, || {
                let (s, t) = v.worst_window.unwrap_or_default();
                format!("window [{s}, {t}] fails at scale {l}")
            })
        }
        Command::MorseGauge { path, grid } => {
            let p = read_path(g, path)?;
            let cells = match grid {
                Some(text) => parse_grid(text)?,
                None => MorseGaugeTable::default_grid(),
            };
            let t = morse_gauge_estimate(g, &p, &cells, enum_cap())?;
            Outcome::pass(json!({"gauge": t, "csv": t.to_csv()}))
        }
        Command::Contraction { path, r } => {
            let p = read_path(g, path)?;
            let ball = g.ball(&[], *r)?;
            Outcome::pass(json!({"R": r, "contraction": contraction_constant(g, &p, &ball)?}))
        }
        Command::Translation { elem, nmax } => {
            let e = word(g, elem)?;
            let t = translation_length(g, &e, *nmax)?;
            Outcome::pass(json!({"elem": g.format_word(&g.nf(&e)), "translation": t}))
        }
        Command::Spectrum { maxlen, gauge } => {
            let cap = gauge.as_deref().map(read_gauge).transpose()?;
            let s = translation_spectrum(g, *maxlen, cap.as_ref())?;
            let r = s.to_report(g, cap.as_ref(), started);
            Outcome::pass(r.canonical())
        }
        Command::Axis { elem, periods } => {
            let e = g.nf(&word(g, elem)?);
            let alpha = normal_geodesic(g, &[], &e);
            let a = quasi_axis(g, &e, &alpha, *periods)?;
            Outcome::pass(json!({
                "elem": g.format_word(&e),
                "periods": [a.periods.0, a.periods.1],
                "base": a.base.to_json(g),
                "path": a.path.to_json(g),
            }))
        }
        Command::ExtractMorse { path, l } => {
            let p = read_path(g, path)?;
            let c = extract_periodic_morse_candidate(g, &p, *l)?;
            Outcome::pass(json!({
                "L": l,
                "w1": g.format_word(&c.w1),
                "w2": g.format_word(&c.w2),
                "candidate": g.format_word(&c.candidate),
                "blocks": [c.blocks.0, c.blocks.1],
                "periodic_local_geodesic": c.periodic_local_geodesic,
            }))
        }
        Command::Project { coset, factor, x } => {
            let p = PeripheralCoset::new(g, &word(g, coset)?, *factor)?;
            let x = word(g, x)?;
            let proj = peripheral_projection(g, &p, &x)?;
            Outcome::pass(json!({
                "coset": p.to_json(g),
                "x": g.format_word(&g.nf(&x)),
                "projection": g.format_word(&proj),
                "distance": coset_distance(g, &p, &x)?,
            }))
        }
        Command::ConedDist { x, y, r } => {
            let (x, y) = (word(g, x)?, word(g, y)?);
            let mut v = json!({"x": g.format_word(&g.nf(&x)), "y": g.format_word(&g.nf(&y)),
                "coned_distance": coned_distance_formula(g, &x, &y)?});
            if let Some(r) = r {
                let ball = g.ball(&[], *r)?;
                v["coned_distance_bfs"] = json!(coned_distance(g, &ball, &x, &y)?);
                v["R"] = json!(r);
            }
            Outcome::pass(v)
        }
        Command::Constants {
            r,
            samples,
            lambda,
            epsilon,
        } => {
            let ball = g.ball(&[], *r)?;
            let c = estimate_relhyp_constants(g, &ball, &qg(lambda, epsilon)?, *samples)?;
            Outcome::pass(
                json!({"R": r, "constants": c.to_json(), "L_min": 12 * c.theta, "B_min": 2 * c.theta + 1}),
            )
        }
        Command::Decompose {
            path,
            l,
            b,
            constants,
            r,
            lambda,
            epsilon,
        } => {
            let p = read_path(g, path)?;
            let q = qg(lambda, epsilon)?;
            let c = match constants {
                Some(file) => {
                    let text = read(file)?;
                    // Either a bare constants block or a `constants` report.
                    let v: Value = serde_json::from_str(&text)
                        .map_err(|e| LabError::malformed(format!("constants: {e}")))?;
                    let block = v.pointer("/result/constants").cloned().unwrap_or(v);
                    RelHypConstants::from_json(&block.to_string())?
                }
                None => estimate_relhyp_constants(g, &g.ball(&[], *r)?, &q, 200)?,
            };
            let d = relevant_decomposition(g, &p, *l, *b, &c, &q)?;
            let chk = check_decomposition(g, &p, &d)?;
            let ok = chk.passed();
            let result = json!({"decomposition": d.to_json(g), "check": chk});
            Outcome::check(result, ok, || {
                "decomposition invariants fail; see check block".to_string()
            })
        }
        Command::DistanceFormula { r, t, samples } => {
            let ball = g.ball(&[], *r)?;
            let rep = distance_formula_check(g, &ball, *t, *samples, seed)?;
            let ok = rep.violations.is_empty();
            let first = rep.violations.first().cloned();
            Outcome::check(json!({"R": r, "report": rep}), ok, || {
                first.unwrap_or_default()
            })
        }
        Command::Pingpong { p, q, i, maxlen } => {
            let (p, q, i) = (
                g.parse_word_list(p)?,
                g.parse_word_list(q)?,
                g.parse_word_list(i)?,
            );
            let r = pingpong_check(g, &p, &q, &i, *maxlen)?;
            let v = r.to_json(g);
            let witness = v["witness_word"].as_str().unwrap_or_default().to_string();
            Outcome::check(v, r.consistent(), || {
                format!("trivial alternating product {witness}")
            })
        }
        Command::HypCert { r, delta } => {
            let c = local_hyperbolicity_certificate(g, *r, *delta)?;
            let v = c.to_json(g);
            let witness = v["witness_triangle"].to_string();
            Outcome::check(v, c.verdict, || {
                format!(
                    "delta_min {} exceeds {delta}; triangle {witness}",
                    c.slimness.delta_min
                )
            })
        }
        Command::LtgExperiment {
            l,
            lambda,
            epsilon,
            samples,
            gauge,
            gauge_bound,
            exhaustive,
            maxlen,
        } => {
            let q = qg(lambda, epsilon)?;
            let scales = parse_scales(l)?;
            let r = if *exhaustive {
                local_to_global_exhaustive(g, &q, &scales, *maxlen)?
            } else {
                let table = match gauge {
                    Some(file) => read_gauge(file)?,
                    None => MorseGaugeTable::supplied(&[(q, *gauge_bound)])?,
                };
                local_to_global_experiment(g, &table, &q, &scales, *samples, seed)?
            };
            let ok = r.passed();
            Outcome::check(r.canonical(), ok, || {
                "an experiment invariant failed".to_string()
            })
        }
        Command::Trichotomy { maxlen } => {
            let e = trichotomy_probe(g, *maxlen)?;
            Outcome::pass(e.to_report(g, *maxlen, started).canonical())
        }
    })
}
