//! `tacgap` — gap probabilities of the Airy and tacnode point processes
//! from the command line.
//!
//! Exit codes: 0 success, 2 parameter/usage error, 3 numerical-accuracy
//! error, 4 failed check suite.

mod checks;

use std::fs;
use std::io::Write;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use tacgap_core::kernels::TacnodeParams;
use tacgap_core::probes::{
    self, PMethod, RowReference, SweepConfig, SweepMode, SweepOffsets, SweepTable,
};
use tacgap_core::quad::IntervalUnion;
use tacgap_core::Error as CoreError;

#[derive(Parser)]
#[command(
    name = "tacgap",
    version,
    about = "Fredholm-determinant gap probabilities of the Airy and tacnode processes"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Route {
    Direct,
    Block,
    Both,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Method {
    Resolvent,
    FiniteDiff,
    Both,
}

#[derive(Subcommand)]
enum Cmd {
    /// Tracy-Widom value F2(s) = det(Id - K_Ai|[s, inf)).
    F2 {
        #[arg(long, allow_negative_numbers = true)]
        s: f64,
        #[arg(long, default_value_t = 48)]
        nodes: usize,
        #[arg(long)]
        out: Option<String>,
        #[arg(long)]
        json_meta: Option<String>,
    },
    /// Tacnode gap probability over an interval union.
    Gap {
        #[arg(long, allow_negative_numbers = true)]
        sigma: f64,
        #[arg(long, allow_negative_numbers = true)]
        tau: f64,
        /// Comma-separated lo:hi pairs, strictly increasing and disjoint.
        #[arg(long, allow_hyphen_values = true)]
        intervals: String,
        #[arg(long, value_enum, default_value_t = Route::Both)]
        route: Route,
        #[arg(long, default_value_t = 48)]
        nodes: usize,
        #[arg(long, default_value_t = 64)]
        aux_nodes: usize,
        #[arg(long)]
        out: Option<String>,
        #[arg(long)]
        json_meta: Option<String>,
    },
    /// Large-overlap sweep: gap over [a - sigma - tau^2, -b + sigma + tau^2]
    /// against F2(b) F2(a) along a sigma grid.
    SweepSigma {
        #[arg(long, allow_negative_numbers = true)]
        tau: f64,
        #[arg(long, allow_negative_numbers = true)]
        a: f64,
        #[arg(long, allow_negative_numbers = true)]
        b: f64,
        #[arg(long, allow_negative_numbers = true)]
        sigma_min: f64,
        #[arg(long, allow_negative_numbers = true)]
        sigma_max: f64,
        #[arg(long, default_value_t = 5)]
        steps: usize,
        #[arg(long, default_value_t = 48)]
        nodes: usize,
        #[arg(long, default_value_t = 64)]
        aux_nodes: usize,
        #[arg(long)]
        out: Option<String>,
        #[arg(long)]
        json_meta: Option<String>,
    },
    /// Large-time sweep along a tau grid.
    SweepTau {
        #[arg(long, allow_negative_numbers = true)]
        sigma: f64,
        #[arg(long, allow_negative_numbers = true)]
        a: f64,
        #[arg(long, allow_negative_numbers = true)]
        b: f64,
        #[arg(long, allow_negative_numbers = true)]
        tau_min: f64,
        #[arg(long, allow_negative_numbers = true)]
        tau_max: f64,
        #[arg(long, default_value_t = 5)]
        steps: usize,
        #[arg(long, default_value_t = 48)]
        nodes: usize,
        #[arg(long, default_value_t = 64)]
        aux_nodes: usize,
        #[arg(long)]
        out: Option<String>,
        #[arg(long)]
        json_meta: Option<String>,
    },
    /// Left-edge sweep: offset intervals against a plain Airy determinant.
    SweepEdge {
        /// Comma-separated s1:s2 offset pairs.
        #[arg(long, allow_hyphen_values = true)]
        offsets: String,
        #[arg(long, allow_negative_numbers = true)]
        sigma: f64,
        #[arg(long, allow_negative_numbers = true)]
        tau_min: f64,
        #[arg(long, allow_negative_numbers = true)]
        tau_max: f64,
        #[arg(long, default_value_t = 5)]
        steps: usize,
        #[arg(long, default_value_t = 48)]
        nodes: usize,
        #[arg(long, default_value_t = 64)]
        aux_nodes: usize,
        #[arg(long)]
        out: Option<String>,
        #[arg(long)]
        json_meta: Option<String>,
    },
    /// Logarithmic derivative p(s) of the Tracy-Widom distribution.
    P2 {
        #[arg(long, allow_negative_numbers = true)]
        s: f64,
        #[arg(long, default_value_t = 48)]
        nodes: usize,
        #[arg(long, value_enum, default_value_t = Method::Both)]
        method: Method,
        #[arg(long)]
        out: Option<String>,
        #[arg(long)]
        json_meta: Option<String>,
    },
    /// Run the cross-module invariant suite.
    Check {},
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let started = Instant::now();
    match run(cli.cmd, started) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("tacgap: {e}");
            if e.is_usage() {
                ExitCode::from(2)
            } else {
                ExitCode::from(3)
            }
        }
    }
}

/// 17 significant digits: round-trip exact for f64.
fn num(x: f64) -> String {
    format!("{x:.16e}")
}

fn emit(out: &Option<String>, body: &str) -> Result<(), CoreError> {
    match out {
        Some(path) => fs::write(path, body)
            .map_err(|e| CoreError::Parameter(format!("cannot write {path}: {e}"))),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(body.as_bytes())
                .map_err(|e| CoreError::Parameter(format!("cannot write stdout: {e}")))
        }
    }
}

fn emit_meta(
    path: &Option<String>,
    params: serde_json::Value,
    nodes: serde_json::Value,
    started: Instant,
) -> Result<(), CoreError> {
    let Some(path) = path else { return Ok(()) };
    let meta = json!({
        "command": std::env::args().collect::<Vec<_>>().join(" "),
        "params": params,
        "nodes": nodes,
        "version": env!("CARGO_PKG_VERSION"),
        "wall_seconds": started.elapsed().as_secs_f64(),
    });
    fs::write(path, format!("{meta}\n"))
        .map_err(|e| CoreError::Parameter(format!("cannot write {path}: {e}")))
}

/// Parse "lo:hi[,lo:hi...]" into an interval union.
fn parse_intervals(text: &str) -> Result<IntervalUnion, CoreError> {
    let mut pieces = Vec::new();
    for chunk in text.split(',') {
        let chunk = chunk.trim();
        let (lo, hi) = chunk.split_once(':').ok_or_else(|| {
            CoreError::Parameter(format!("interval `{chunk}` is not of the form lo:hi"))
        })?;
        let lo: f64 = lo
            .trim()
            .parse()
            .map_err(|_| CoreError::Parameter(format!("bad interval bound `{lo}`")))?;
        let hi: f64 = hi
            .trim()
            .parse()
            .map_err(|_| CoreError::Parameter(format!("bad interval bound `{hi}`")))?;
        pieces.push((lo, hi));
    }
    IntervalUnion::new(pieces)
}

fn linspace(min: f64, max: f64, steps: usize) -> Result<Vec<f64>, CoreError> {
    if steps == 0 {
        return Err(CoreError::Parameter("steps must be positive".into()));
    }
    if steps == 1 {
        if min != max {
            return Err(CoreError::Parameter(
                "steps = 1 requires min == max".into(),
            ));
        }
        return Ok(vec![min]);
    }
    if min.is_nan() || max.is_nan() || min >= max {
        return Err(CoreError::Parameter(format!(
            "grid bounds must satisfy min < max (got {min}, {max})"
        )));
    }
    let h = (max - min) / (steps as f64 - 1.0);
    Ok((0..steps).map(|i| min + h * i as f64).collect())
}

fn sweep_csv(table: &SweepTable) -> String {
    let mut body = String::new();
    if table.mode == SweepMode::Edge {
        body.push_str("param,gap,airy_det,ratio,deviation,err_estimate,window_ok\n");
    } else {
        body.push_str("param,gap,f2_s,f2_t,ratio,deviation,err_estimate,window_ok\n");
    }
    for row in &table.rows {
        let mid = match row.reference {
            RowReference::Product { f2_s, f2_t } => format!("{},{}", num(f2_s), num(f2_t)),
            RowReference::AiryDet(v) => num(v),
        };
        body.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            num(row.param),
            num(row.gap),
            mid,
            num(row.ratio),
            num(row.deviation),
            num(row.err_estimate),
            row.window_ok
        ));
    }
    body
}

fn run(cmd: Cmd, started: Instant) -> Result<ExitCode, CoreError> {
    match cmd {
        Cmd::F2 {
            s,
            nodes,
            out,
            json_meta,
        } => {
            let det = probes::f2(s, nodes)?;
            emit(
                &out,
                &format!("{},{},{}\n", num(s), num(det.value), num(det.err_estimate)),
            )?;
            emit_meta(
                &json_meta,
                json!({ "s": s }),
                json!({ "n_dom": nodes }),
                started,
            )?;
            Ok(ExitCode::SUCCESS)
        }
        Cmd::Gap {
            sigma,
            tau,
            intervals,
            route,
            nodes,
            aux_nodes,
            out,
            json_meta,
        } => {
            let params = TacnodeParams::new(sigma, tau)?;
            let domain = parse_intervals(&intervals)?;
            let mut body = String::new();
            let direct = if route != Route::Block {
                let d = probes::tacnode_gap_direct(&params, &domain, nodes, aux_nodes)?;
                body.push_str(&format!(
                    "direct,{},{}\n",
                    num(d.value),
                    num(d.err_estimate)
                ));
                Some(d)
            } else {
                None
            };
            let block = if route != Route::Direct {
                let b = probes::tacnode_gap_block(&params, &domain, nodes, aux_nodes)?;
                body.push_str(&format!("block,{},{}\n", num(b.value), num(b.err_estimate)));
                Some(b)
            } else {
                None
            };
            if let (Some(d), Some(b)) = (&direct, &block) {
                let rel = (d.value - b.value).abs() / d.value.abs().max(f64::MIN_POSITIVE);
                body.push_str(&format!("rel_diff,{}\n", num(rel)));
            }
            emit(&out, &body)?;
            emit_meta(
                &json_meta,
                json!({ "sigma": sigma, "tau": tau, "intervals": intervals }),
                json!({ "n_dom": nodes, "n_aux": aux_nodes }),
                started,
            )?;
            Ok(ExitCode::SUCCESS)
        }
        Cmd::SweepSigma {
            tau,
            a,
            b,
            sigma_min,
            sigma_max,
            steps,
            nodes,
            aux_nodes,
            out,
            json_meta,
        } => {
            let cfg = SweepConfig {
                mode: SweepMode::Sigma,
                fixed_sigma: None,
                fixed_tau: Some(tau),
                offsets: SweepOffsets::Endpoints { s: b, t: a },
                grid: linspace(sigma_min, sigma_max, steps)?,
                n_dom: nodes,
                n_aux: aux_nodes,
            };
            let table = probes::sweep(&cfg)?;
            emit(&out, &sweep_csv(&table))?;
            emit_meta(
                &json_meta,
                json!({
                    "a": a, "b": b, "tau": tau,
                    "sigma_min": sigma_min, "sigma_max": sigma_max, "steps": steps
                }),
                json!({ "n_dom": nodes, "n_aux": aux_nodes }),
                started,
            )?;
            Ok(ExitCode::SUCCESS)
        }
        Cmd::SweepTau {
            sigma,
            a,
            b,
            tau_min,
            tau_max,
            steps,
            nodes,
            aux_nodes,
            out,
            json_meta,
        } => {
            let cfg = SweepConfig {
                mode: SweepMode::Tau,
                fixed_sigma: Some(sigma),
                fixed_tau: None,
                offsets: SweepOffsets::Endpoints { s: b, t: a },
                grid: linspace(tau_min, tau_max, steps)?,
                n_dom: nodes,
                n_aux: aux_nodes,
            };
            let table = probes::sweep(&cfg)?;
            emit(&out, &sweep_csv(&table))?;
            emit_meta(
                &json_meta,
                json!({
                    "a": a, "b": b, "sigma": sigma,
                    "tau_min": tau_min, "tau_max": tau_max, "steps": steps
                }),
                json!({ "n_dom": nodes, "n_aux": aux_nodes }),
                started,
            )?;
            Ok(ExitCode::SUCCESS)
        }
        Cmd::SweepEdge {
            offsets,
            sigma,
            tau_min,
            tau_max,
            steps,
            nodes,
            aux_nodes,
            out,
            json_meta,
        } => {
            let union = parse_intervals(&offsets)?;
            let cfg = SweepConfig {
                mode: SweepMode::Edge,
                fixed_sigma: Some(sigma),
                fixed_tau: None,
                offsets: SweepOffsets::Edge(union.pieces().to_vec()),
                grid: linspace(tau_min, tau_max, steps)?,
                n_dom: nodes,
                n_aux: aux_nodes,
            };
            let table = probes::sweep(&cfg)?;
            emit(&out, &sweep_csv(&table))?;
            emit_meta(
                &json_meta,
                json!({
                    "offsets": offsets, "sigma": sigma,
                    "tau_min": tau_min, "tau_max": tau_max, "steps": steps
                }),
                json!({ "n_dom": nodes, "n_aux": aux_nodes }),
                started,
            )?;
            Ok(ExitCode::SUCCESS)
        }
        Cmd::P2 {
            s,
            nodes,
            method,
            out,
            json_meta,
        } => {
            let body = match method {
                Method::Resolvent => {
                    let p = probes::hastings_p(s, nodes, PMethod::Resolvent)?;
                    format!("{},{}\n", num(s), num(p))
                }
                Method::FiniteDiff => {
                    let p = probes::hastings_p(s, nodes, PMethod::FiniteDiff)?;
                    format!("{},{}\n", num(s), num(p))
                }
                Method::Both => {
                    let pr = probes::hastings_p(s, nodes, PMethod::Resolvent)?;
                    let pf = probes::hastings_p(s, nodes, PMethod::FiniteDiff)?;
                    format!(
                        "{},{},{},{}\n",
                        num(s),
                        num(pr),
                        num(pf),
                        num((pr - pf).abs())
                    )
                }
            };
            emit(&out, &body)?;
            emit_meta(
                &json_meta,
                json!({ "s": s }),
                json!({ "n_dom": nodes }),
                started,
            )?;
            Ok(ExitCode::SUCCESS)
        }
        Cmd::Check {} => {
            if checks::run_all() {
                Ok(ExitCode::SUCCESS)
            } else {
                Ok(ExitCode::from(4))
            }
        }
    }
}
