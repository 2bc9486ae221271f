//! High-level quantities and verification drivers: the Tracy-Widom
//! distribution, tacnode gap probabilities by two independent routes, the
//! logarithmic derivative `p(s)`, and parameter sweeps with
//! validity-window bookkeeping.
//!
//! The sweeps compare the tacnode gap over `[-sigma - tau^2 + t,
//! sigma + tau^2 - s]` with the product `F2(s) F2(t)`; the deviation
//! `|1 - gap / (F2(s) F2(t))|` tends to zero as either the overlap or the
//! time parameter grows. Edge sweeps instead compare against a plain Airy
//! determinant over the offset intervals.

use crate::error::{Error, Result};
use crate::fredholm::{
    endpoint_log_derivative, fredholm_det, DetResult, Domain, KernelFn, LuFactors, Mat,
};
use crate::kernels::{airy_kernel, validate_gap_domain, BlockSystem, TacnodeContext, TacnodeParams};
use crate::par;
use crate::quad::{composite_rule, IntervalUnion};

/// Tail tolerance for truncating `[s, inf)` in Tracy-Widom determinants.
const F2_TAIL_TOL: f64 = 1e-13;

/// Window enforcement constants; the asymptotic statements hold for any
/// constant in (0, 1), and 0.9 maximizes the testable region.
const K1: f64 = 0.9;
const K2: f64 = 0.9;
const K3: f64 = 0.9;

/// Step of the 5-point stencils for `p(s)` and related derivatives,
/// balancing truncation against ~1e-9 determinant noise.
const FD_STEP: f64 = 1e-3;

/// Denominator floor for the block-route ratio.
const F2_MIN: f64 = 1e-12;

/// Tracy-Widom distribution `F2(s) = det(Id - K_Ai|[s, inf))`.
pub fn f2(s: f64, n: usize) -> Result<DetResult> {
    if !s.is_finite() || s < -12.0 {
        return Err(Error::Parameter(format!(
            "f2: s = {s} outside the supported range [-12, inf)"
        )));
    }
    if n < 16 {
        return Err(Error::Parameter(format!("f2: n = {n} below the minimum 16")));
    }
    let eval = |x: f64, y: f64| airy_kernel(x, y);
    let kernel = KernelFn::new(&eval, true);
    fredholm_det(
        &kernel,
        &Domain::SemiInfinite {
            lo: s,
            tol: F2_TAIL_TOL,
        },
        n,
    )
}

/// Tacnode gap probability `det(Id - K|I)` by direct Nystrom
/// discretization of the kernel (resolvent route).
pub fn tacnode_gap_direct(
    params: &TacnodeParams,
    domain: &IntervalUnion,
    n_dom: usize,
    n_aux: usize,
) -> Result<DetResult> {
    validate_gap_domain(domain)?;
    if domain.is_empty() {
        return Ok(DetResult {
            value: 1.0,
            log_value: 0.0,
            err_estimate: 0.0,
            n_used: 0,
        });
    }
    let (sign, log, n_used) = gap_direct_at(params, domain, n_dom, n_aux)?;
    let (sign2, log2, _) = gap_direct_at(params, domain, 2 * n_dom, 2 * n_aux)?;
    let v = f64::from(sign) * log.exp();
    let v2 = f64::from(sign2) * log2.exp();
    Ok(DetResult {
        value: v,
        log_value: log,
        err_estimate: (v - v2).abs(),
        n_used,
    })
}

fn gap_direct_at(
    params: &TacnodeParams,
    domain: &IntervalUnion,
    n_dom: usize,
    n_aux: usize,
) -> Result<(i8, f64, usize)> {
    let rule = composite_rule(domain, n_dom)?;
    let probes: Vec<f64> = rule.nodes().iter().map(|&x| x - params.sigma()).collect();
    let ctx = TacnodeContext::build(params, &probes, n_aux)?;
    let n = rule.len();
    let sqv: Vec<f64> = rule.weights().iter().map(|w| w.sqrt()).collect();
    let rows = par::map_indexed(n, |i| {
        let mut row = vec![0.0; n];
        for j in 0..n {
            let k = ctx.eval_by_index(i, j);
            row[j] = if i == j { 1.0 } else { 0.0 } - sqv[i] * k * sqv[j];
        }
        row
    });
    for row in &rows {
        if row.iter().any(|v| !v.is_finite()) {
            return Err(Error::Evaluation(
                "tacnode kernel sample is non-finite on the gap domain".into(),
            ));
        }
    }
    let lu = LuFactors::factor(Mat::from_rows(rows))?;
    Ok((lu.det_sign(), lu.log_abs_det(), n))
}

/// Tacnode gap probability as the ratio of the block-operator determinant
/// to the Tracy-Widom factor at matched auxiliary resolution (Schur
/// route; no resolvent is ever formed).
pub fn tacnode_gap_block(
    params: &TacnodeParams,
    domain: &IntervalUnion,
    n_dom: usize,
    n_aux: usize,
) -> Result<DetResult> {
    let (sign, log, n_used) = gap_block_at(params, domain, n_dom, n_aux)?;
    let (sign2, log2, _) = gap_block_at(params, domain, 2 * n_dom, 2 * n_aux)?;
    let v = f64::from(sign) * log.exp();
    let v2 = f64::from(sign2) * log2.exp();
    Ok(DetResult {
        value: v,
        log_value: log,
        err_estimate: (v - v2).abs(),
        n_used,
    })
}

fn gap_block_at(
    params: &TacnodeParams,
    domain: &IntervalUnion,
    n_dom: usize,
    n_aux: usize,
) -> Result<(i8, f64, usize)> {
    let bs = BlockSystem::build(params, domain, n_dom, n_aux, 1.0)?;
    let (bsign, blog) = bs.det();
    let (fsign, flog) = bs.aux_det();
    if fsign <= 0 || flog.exp() < F2_MIN {
        return Err(Error::Conditioning(format!(
            "block route: Tracy-Widom factor {:e} below the usable threshold",
            f64::from(fsign) * flog.exp()
        )));
    }
    Ok((bsign * fsign, blog - flog, bs.n_dom_nodes()))
}

/// Evaluation strategy for [`hastings_p`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PMethod {
    /// 5-point central difference of `ln F2`.
    FiniteDiff,
    /// Resolvent kernel at the moving endpoint, `R(s, s)`.
    Resolvent,
}

/// Logarithmic derivative of the Tracy-Widom distribution,
/// `p(s) = d/ds ln F2(s)`.
pub fn hastings_p(s: f64, n: usize, method: PMethod) -> Result<f64> {
    if !s.is_finite() || s < -10.0 {
        return Err(Error::Parameter(format!(
            "hastings_p: s = {s} outside the supported range [-10, inf)"
        )));
    }
    match method {
        PMethod::Resolvent => {
            let eval = |x: f64, y: f64| airy_kernel(x, y);
            let kernel = KernelFn::new(&eval, true);
            endpoint_log_derivative(&kernel, s, n, F2_TAIL_TOL)
        }
        PMethod::FiniteDiff => {
            let h = FD_STEP;
            let ln_f2 = |u: f64| -> Result<f64> { Ok(f2(u, n)?.log_value) };
            Ok((ln_f2(s - 2.0 * h)? - 8.0 * ln_f2(s - h)? + 8.0 * ln_f2(s + h)?
                - ln_f2(s + 2.0 * h)?)
                / (12.0 * h))
        }
    }
}

/// Which asymptotic statement a validity window belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WindowMode {
    Sigma,
    Tau,
}

/// One window constraint with its signed margin (positive = satisfied).
#[derive(Debug, Clone)]
pub struct WindowConstraint {
    pub name: &'static str,
    pub ok: bool,
    pub margin: f64,
}

/// Outcome of a validity-window check.
#[derive(Debug, Clone)]
pub struct WindowReport {
    pub mode: WindowMode,
    pub constraints: Vec<WindowConstraint>,
}

impl WindowReport {
    pub fn all_ok(&self) -> bool {
        self.constraints.iter().all(|c| c.ok)
    }
}

/// Check the endpoint offsets `(s, t)` against the hypotheses of the
/// relevant asymptotic statement.
///
/// Large-overlap mode requires `s, t < K1 (sigma + tau^2)`. Large-time
/// mode additionally writes `t = 4 tau^2 - delta` with
/// `0 < delta < (7/3) K2 tau^2` and `s = tau^2 + 2 sigma - delta` with
/// `0 < delta < K3 (2 sigma + (2/3) tau^2)`; the boundary `delta = 0` is
/// excluded.
pub fn validity_window(
    params: &TacnodeParams,
    s: f64,
    t: f64,
    mode: WindowMode,
) -> WindowReport {
    let cap = K1 * (params.sigma() + params.tau() * params.tau());
    let mut constraints = vec![
        WindowConstraint {
            name: "s_below_overlap_cap",
            ok: s < cap,
            margin: cap - s,
        },
        WindowConstraint {
            name: "t_below_overlap_cap",
            ok: t < cap,
            margin: cap - t,
        },
    ];
    if mode == WindowMode::Tau {
        let tau2 = params.tau() * params.tau();
        let delta_t = 4.0 * tau2 - t;
        let delta_t_cap = 7.0 / 3.0 * K2 * tau2;
        let delta_s = tau2 + 2.0 * params.sigma() - s;
        let delta_s_cap = K3 * (2.0 * params.sigma() + 2.0 / 3.0 * tau2);
        constraints.extend([
            WindowConstraint {
                name: "t_delta_positive",
                ok: delta_t > 0.0,
                margin: delta_t,
            },
            WindowConstraint {
                name: "t_delta_below_cap",
                ok: delta_t < delta_t_cap,
                margin: delta_t_cap - delta_t,
            },
            WindowConstraint {
                name: "s_delta_positive",
                ok: delta_s > 0.0,
                margin: delta_s,
            },
            WindowConstraint {
                name: "s_delta_below_cap",
                ok: delta_s < delta_s_cap,
                margin: delta_s_cap - delta_s,
            },
        ]);
    }
    WindowReport { mode, constraints }
}

/// Sweep family.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepMode {
    /// Overlap grows, time fixed; both gap endpoints move outward.
    Sigma,
    /// Time grows, overlap fixed.
    Tau,
    /// Intervals pinned to the left edge; compare against a plain Airy
    /// determinant over the offsets.
    Edge,
}

/// Endpoint offsets of a sweep.
#[derive(Debug, Clone)]
pub enum SweepOffsets {
    /// Gap `[-sigma - tau^2 + t, sigma + tau^2 - s]`.
    Endpoints { s: f64, t: f64 },
    /// Offset pairs `(s1, s2), ...` building the left-edge interval union.
    Edge(Vec<(f64, f64)>),
}

/// Full sweep description. Exactly one of `fixed_sigma`/`fixed_tau` is
/// set; the grid runs over the other parameter.
#[derive(Debug, Clone)]
pub struct SweepConfig {
    pub mode: SweepMode,
    pub fixed_sigma: Option<f64>,
    pub fixed_tau: Option<f64>,
    pub offsets: SweepOffsets,
    pub grid: Vec<f64>,
    pub n_dom: usize,
    pub n_aux: usize,
}

/// Reference quantity a sweep row is compared against.
#[derive(Debug, Clone, Copy)]
pub enum RowReference {
    /// Tracy-Widom product `F2(s) F2(t)`.
    Product { f2_s: f64, f2_t: f64 },
    /// Airy determinant over the offset intervals.
    AiryDet(f64),
}

/// One sweep row.
#[derive(Debug, Clone)]
pub struct SweepRow {
    pub param: f64,
    pub gap: f64,
    pub reference: RowReference,
    pub ratio: f64,
    pub deviation: f64,
    pub err_estimate: f64,
    pub window_ok: bool,
}

/// Sweep result, rows in grid order.
#[derive(Debug, Clone)]
pub struct SweepTable {
    pub mode: SweepMode,
    pub rows: Vec<SweepRow>,
}

/// Run a sweep; rows are independent and computed in parallel, the table
/// is assembled in grid order.
pub fn sweep(cfg: &SweepConfig) -> Result<SweepTable> {
    validate_sweep_config(cfg)?;
    let rows = par::map_indexed(cfg.grid.len(), |i| sweep_row(cfg, cfg.grid[i]));
    let rows: Result<Vec<SweepRow>> = rows.into_iter().collect();
    Ok(SweepTable {
        mode: cfg.mode,
        rows: rows?,
    })
}

fn validate_sweep_config(cfg: &SweepConfig) -> Result<()> {
    if cfg.grid.is_empty() {
        return Err(Error::Parameter("sweep: empty parameter grid".into()));
    }
    for w in cfg.grid.windows(2) {
        if w[1] <= w[0] {
            return Err(Error::Parameter(
                "sweep: parameter grid must be strictly increasing".into(),
            ));
        }
    }
    let fixed = (cfg.fixed_sigma.is_some(), cfg.fixed_tau.is_some());
    let ok = match cfg.mode {
        SweepMode::Sigma => fixed == (false, true),
        SweepMode::Tau => fixed == (true, false),
        SweepMode::Edge => fixed == (false, true) || fixed == (true, false),
    };
    if !ok {
        return Err(Error::Parameter(
            "sweep: fixed parameter does not match the sweep mode".into(),
        ));
    }
    match (&cfg.offsets, cfg.mode) {
        (SweepOffsets::Endpoints { .. }, SweepMode::Sigma | SweepMode::Tau) => Ok(()),
        (SweepOffsets::Edge(pairs), SweepMode::Edge) if !pairs.is_empty() => Ok(()),
        _ => Err(Error::Parameter(
            "sweep: offsets do not match the sweep mode".into(),
        )),
    }
}

fn sweep_row(cfg: &SweepConfig, param: f64) -> Result<SweepRow> {
    let (sigma, tau) = match (cfg.fixed_sigma, cfg.fixed_tau) {
        (Some(s), None) => (s, param),
        (None, Some(t)) => (param, t),
        _ => unreachable!("validated"),
    };
    let params = TacnodeParams::new(sigma, tau)?;
    let shift = sigma + tau * tau;
    match &cfg.offsets {
        SweepOffsets::Endpoints { s, t } => {
            let domain = IntervalUnion::single(t - shift, shift - s)?;
            let gap = tacnode_gap_direct(&params, &domain, cfg.n_dom, cfg.n_aux)?;
            let n_f2 = cfg.n_dom.max(16);
            let f2_s = f2(*s, n_f2)?;
            let f2_t = f2(*t, n_f2)?;
            let reference_value = f2_s.value * f2_t.value;
            let ratio = gap.value / reference_value;
            let err_estimate = ratio.abs()
                * (gap.err_estimate / gap.value.abs()
                    + f2_s.err_estimate / f2_s.value
                    + f2_t.err_estimate / f2_t.value);
            let mode = match cfg.mode {
                SweepMode::Sigma => WindowMode::Sigma,
                _ => WindowMode::Tau,
            };
            Ok(SweepRow {
                param,
                gap: gap.value,
                reference: RowReference::Product {
                    f2_s: f2_s.value,
                    f2_t: f2_t.value,
                },
                ratio,
                deviation: (1.0 - ratio).abs(),
                err_estimate,
                window_ok: validity_window(&params, *s, *t, mode).all_ok(),
            })
        }
        SweepOffsets::Edge(pairs) => {
            let shifted: Vec<(f64, f64)> =
                pairs.iter().map(|&(a, b)| (a - shift, b - shift)).collect();
            let domain = IntervalUnion::new(shifted)?;
            let offsets_union = IntervalUnion::new(pairs.clone())?;
            let gap = tacnode_gap_direct(&params, &domain, cfg.n_dom, cfg.n_aux)?;
            let eval = |x: f64, y: f64| airy_kernel(x, y);
            let kernel = KernelFn::new(&eval, true);
            let airy_det = fredholm_det(&kernel, &Domain::Finite(offsets_union), cfg.n_dom)?;
            let ratio = gap.value / airy_det.value;
            let err_estimate = ratio.abs()
                * (gap.err_estimate / gap.value.abs()
                    + airy_det.err_estimate / airy_det.value.abs());
            Ok(SweepRow {
                param,
                gap: gap.value,
                reference: RowReference::AiryDet(airy_det.value),
                ratio,
                deviation: (1.0 - ratio).abs(),
                err_estimate,
                window_ok: true,
            })
        }
    }
}

/// Least-squares slope/intercept of `log deviation` against `log param`
/// over rows whose deviation stands clear of the error estimate.
pub fn rate_fit(table: &SweepTable) -> Result<(f64, f64)> {
    let pts: Vec<(f64, f64)> = table
        .rows
        .iter()
        .filter(|r| r.deviation > 10.0 * r.err_estimate && r.deviation > 0.0 && r.param > 0.0)
        .map(|r| (r.param.ln(), r.deviation.ln()))
        .collect();
    if pts.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "rate_fit: only {} rows with deviation above the noise floor",
            pts.len()
        )));
    }
    let n = pts.len() as f64;
    let sx: f64 = pts.iter().map(|p| p.0).sum();
    let sy: f64 = pts.iter().map(|p| p.1).sum();
    let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
    let denom = n * sxx - sx * sx;
    if denom == 0.0 {
        return Err(Error::InsufficientData(
            "rate_fit: degenerate abscissa".into(),
        ));
    }
    let slope = (n * sxy - sx * sy) / denom;
    let intercept = (sy - slope * sx) / n;
    Ok((slope, intercept))
}
