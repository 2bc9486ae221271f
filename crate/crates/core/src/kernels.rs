//! Closed-form and composite kernels: the Airy kernel in two
//! representations, the exponentially tilted kernel `K^(tau,-tau)`, the
//! coupling functions of the tacnode kernel, the tacnode kernel itself,
//! and the equivalent 2x2 block operator.
//!
//! Conventions. The tilted Airy function is
//! `Ai^(tau)(x) = e^{tau x + (2/3) tau^3} Ai(x + tau^2)`; all determinant
//! machinery works with the stripped coupling functions
//!
//! ```text
//! Ahat^tau_u(z) = e^{tau (u + cbrt(2) z)} Ai(u + cbrt(2) z + tau^2)
//!   - int_0^inf e^{tau (-u + cbrt(2) w)} Ai(-u + cbrt(2) w + tau^2) Ai(w + z) dw
//! ```
//!
//! in which the `e^{+-(2/3) tau^3}` prefactors have been removed; they
//! cancel in every determinant-relevant product. The tacnode kernel is
//!
//! ```text
//! K(x, y) = K1(x, y)
//!   + cbrt(2) [ int Ahat^tau_{x-sg}(z) Ahat^{-tau}_{y-sg}(z) dz
//!             + int int Ahat^{-tau}_{y-sg}(z) R(z, w) Ahat^tau_{x-sg}(w) dz dw ]
//! ```
//!
//! with `K1(x, y) = e^{tau (y-x)} K_Ai(sg - x + tau^2, sg - y + tau^2)`,
//! `sg` the overlap parameter, and `R` the resolvent of the Airy kernel on
//! `[sg_tilde, inf)`, `sg_tilde = 2^{2/3} sg`. The same kernel is reachable
//! without ever forming the resolvent through the block operator on
//! `L2([sg_tilde, T]) + L2(I)` whose Schur complement reproduces the
//! formula above; the two determinant routes are checked against each
//! other in the test suites.

use crate::error::{Error, Result};
use crate::fredholm::{nystrom_matrix, KernelFn, LuFactors, Mat};
use crate::par;
use crate::quad::{composite_rule, semi_infinite_rule, IntervalUnion, QuadRule};
use crate::specfun::{airy_scaled_unchecked, airy_unchecked, ScaledReal};

/// `2^(1/3)`.
pub const CBRT2: f64 = 1.2599210498948732;
/// `2^(1/6)`, the off-diagonal weight of the block operator.
pub const ROOT6_OF_2: f64 = 1.122462048309373;
/// `2^(2/3)`, the factor mapping sigma to sigma-tilde.
pub const SIGMA_TILDE_FACTOR: f64 = 1.5874010519681996;

/// Divided-difference/confluent switch for the Airy kernel; both branches
/// agree to ~1e-11 in the overlap.
const CONFLUENT_THRESHOLD: f64 = 1e-5;

/// Tail tolerance of the auxiliary rule on `[sigma_tilde, T]`.
const AUX_TAIL_TOL: f64 = 1e-12;

/// Stability target of the inner `w`-integrals in the coupling tables.
const W_INTEGRAL_TOL: f64 = 1e-11;

/// Supported parameter envelope.
const SIGMA_MAX: f64 = 5.0;
const TAU_MAX: f64 = 4.0;
const COORD_MAX: f64 = 25.0;
const PROBE_MAX: f64 = 30.0;

/// Overlap and time parameters of the tacnode process.
///
/// The envelope `0 <= sigma <= 5`, `|tau| <= 4`, `|x|, |y| <= 25` keeps
/// every exponent handled outside [`ScaledReal`] below 300.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TacnodeParams {
    sigma: f64,
    tau: f64,
    sigma_tilde: f64,
}

impl TacnodeParams {
    pub fn new(sigma: f64, tau: f64) -> Result<TacnodeParams> {
        if !sigma.is_finite() || !tau.is_finite() {
            return Err(Error::Domain(format!(
                "TacnodeParams: non-finite parameters (sigma={sigma}, tau={tau})"
            )));
        }
        if !(0.0..=SIGMA_MAX).contains(&sigma) {
            return Err(Error::Parameter(format!(
                "TacnodeParams: sigma = {sigma} outside [0, {SIGMA_MAX}]"
            )));
        }
        if tau.abs() > TAU_MAX {
            return Err(Error::Parameter(format!(
                "TacnodeParams: |tau| = {} outside [0, {TAU_MAX}]",
                tau.abs()
            )));
        }
        Ok(TacnodeParams {
            sigma,
            tau,
            sigma_tilde: SIGMA_TILDE_FACTOR * sigma,
        })
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn sigma_tilde(&self) -> f64 {
        self.sigma_tilde
    }

    /// Same overlap, reversed time.
    pub fn time_reversed(&self) -> TacnodeParams {
        TacnodeParams {
            sigma: self.sigma,
            tau: -self.tau,
            sigma_tilde: self.sigma_tilde,
        }
    }
}

/// Reject gap domains outside the supported coordinate envelope.
pub(crate) fn validate_gap_domain(domain: &IntervalUnion) -> Result<()> {
    for &(lo, hi) in domain.pieces() {
        if lo < -COORD_MAX || hi > COORD_MAX {
            return Err(Error::Parameter(format!(
                "interval ({lo}, {hi}) outside the supported envelope [-{COORD_MAX}, {COORD_MAX}]"
            )));
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Airy kernel.

/// Airy kernel `K_Ai(z, w) = int_0^inf Ai(z+u) Ai(w+u) du`, evaluated in
/// the divided-difference form `(Ai(z) Ai'(w) - Ai'(z) Ai(w)) / (z - w)`
/// with a second-order confluent expansion near the diagonal.
pub fn airy_kernel(z: f64, w: f64) -> f64 {
    let d = z - w;
    if d.abs() < CONFLUENT_THRESHOLD {
        let m = 0.5 * (z + w);
        let pair = airy_unchecked(m);
        let (p, q) = (pair.ai, pair.ai_prime);
        let k0 = q * q - m * p * p;
        k0 + d * d / 12.0 * (p * q + 2.0 * m * k0)
    } else {
        let pz = airy_unchecked(z);
        let pw = airy_unchecked(w);
        (pz.ai * pw.ai_prime - pz.ai_prime * pw.ai) / d
    }
}

/// The defining integral of the Airy kernel by direct quadrature, used as
/// the independent cross-check of [`airy_kernel`]. Node counts double
/// until two successive values agree to `tol`.
pub fn airy_kernel_integral(z: f64, w: f64, tol: f64) -> Result<f64> {
    if !z.is_finite() || !w.is_finite() {
        return Err(Error::Domain("airy_kernel_integral: non-finite input".into()));
    }
    if z < -10.0 || w < -10.0 {
        return Err(Error::Parameter(
            "airy_kernel_integral: arguments must be >= -10".into(),
        ));
    }
    if !(1e-13..=1e-4).contains(&tol) {
        return Err(Error::Parameter(format!(
            "airy_kernel_integral: tol = {tol} outside [1e-13, 1e-4]"
        )));
    }
    // The integrand decays like Ai(min(z,w) + u)^2; shift the cutoff when
    // the slower argument is negative.
    let shift = (-z.min(w)).max(0.0);
    let f = |u: f64| airy_unchecked(z + u).ai * airy_unchecked(w + u).ai;
    let mut n = 32;
    let mut prev = integral_on_shifted_ray(f, shift, tol, n)?;
    for _ in 0..4 {
        n *= 2;
        let cur = integral_on_shifted_ray(f, shift, tol, n)?;
        if (cur - prev).abs() <= tol {
            return Ok(cur);
        }
        prev = cur;
    }
    Err(Error::Accuracy(format!(
        "airy_kernel_integral: no convergence to {tol} after 4 doublings at ({z}, {w})"
    )))
}

fn integral_on_shifted_ray<F: Fn(f64) -> f64>(
    f: F,
    shift: f64,
    tol: f64,
    n: usize,
) -> Result<f64> {
    let t = crate::quad::truncation_point(0.0, tol) + shift;
    let rule = crate::quad::map_affine(&crate::quad::gauss_legendre(n)?, 0.0, t)?;
    Ok(rule.integrate(f))
}

// ---------------------------------------------------------------------------
// Tilted kernel K^(tau,-tau).

/// `K^(tau,-tau)(sigma - x, sigma - y)`, the Airy-type term of the tacnode
/// kernel, in its closed form
/// `e^{tau (y - x)} K_Ai(sigma - x + tau^2, sigma - y + tau^2)`.
///
/// With `gauge_stripped` the `e^{tau (y - x)}` factor is omitted; the
/// stripped kernel is symmetric and has the same standalone determinant.
pub fn k_tau_tau(params: &TacnodeParams, x: f64, y: f64, gauge_stripped: bool) -> f64 {
    let t2 = params.tau * params.tau;
    let base = airy_kernel(params.sigma - x + t2, params.sigma - y + t2);
    if gauge_stripped {
        base
    } else {
        (params.tau * (y - x)).exp() * base
    }
}

// ---------------------------------------------------------------------------
// Coupling functions.

/// Value of a stripped coupling function together with a cancellation
/// quality flag (set when the two terms cancel more than 8 digits).
#[derive(Debug, Clone, Copy)]
pub struct ScriptA {
    pub value: ScaledReal,
    pub cancellation: bool,
}

/// Stripped coupling function `Ahat^tau_u(z)`; see the module docs for the
/// formula. The inner `w`-integral self-refines to `aux_tol`.
pub fn script_a(params: &TacnodeParams, u: f64, z: f64, aux_tol: f64) -> Result<ScriptA> {
    let values = script_a_batch(params.tau, params.sigma_tilde, u, &[z], aux_tol)?;
    Ok(values[0])
}

/// Batched evaluation of `Ahat^tau_u` at many `z` for one `u`; the
/// expensive tilted factor of the `w`-integrand is shared across all `z`.
fn script_a_batch(
    tau: f64,
    sigma_tilde: f64,
    u: f64,
    zs: &[f64],
    aux_tol: f64,
) -> Result<Vec<ScriptA>> {
    if !u.is_finite() {
        return Err(Error::Domain("script_a: non-finite u".into()));
    }
    if u.abs() > PROBE_MAX {
        return Err(Error::Parameter(format!(
            "script_a: |u| = {} outside the supported envelope {PROBE_MAX}",
            u.abs()
        )));
    }
    if !(1e-13..=1e-4).contains(&aux_tol) {
        return Err(Error::Parameter(format!(
            "script_a: aux_tol = {aux_tol} outside [1e-13, 1e-4]"
        )));
    }
    for &z in zs {
        if !z.is_finite() || z < sigma_tilde - 5.0 {
            return Err(Error::Parameter(format!(
                "script_a: z = {z} below sigma_tilde - 5 = {}",
                sigma_tilde - 5.0
            )));
        }
    }
    let t2 = tau * tau;

    // First term, kept in log space.
    let first: Vec<ScaledReal> = zs
        .iter()
        .map(|&z| {
            let v = u + CBRT2 * z;
            airy_scaled_unchecked(v + t2).ai.scale_exp(tau * v)
        })
        .collect();

    // w-integral, refined by doubling the node count at fixed cutoff. The
    // stability test is absolute-plus-relative: the integral can reach
    // e^{|tau u|} scale, where absolute stability below roundoff of the
    // quadrature sum is unattainable.
    let mut n = 32;
    let mut prev = coupling_integrals(tau, u, zs, aux_tol, n)?;
    let mut converged = false;
    for _ in 0..4 {
        n *= 2;
        let cur = coupling_integrals(tau, u, zs, aux_tol, n)?;
        let max_diff = cur
            .iter()
            .zip(prev.iter())
            .fold(0.0_f64, |m, (a, b)| m.max((a - b).abs() / (1.0 + a.abs())));
        prev = cur;
        if max_diff <= aux_tol {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::Accuracy(format!(
            "script_a: w-integral did not stabilize to {aux_tol} for u = {u}"
        )));
    }

    Ok(first
        .iter()
        .zip(prev.iter())
        .map(|(&t1, &int)| {
            let (value, cancellation) = t1.add_flagged(ScaledReal::from_real(-int));
            ScriptA {
                value,
                cancellation,
            }
        })
        .collect())
}

/// `int_0^inf e^{tau(-u + cbrt(2) w)} Ai(-u + cbrt(2) w + tau^2) Ai(w+z) dw`
/// for every `z`, on an `n`-point truncated rule.
fn coupling_integrals(tau: f64, u: f64, zs: &[f64], tol: f64, n: usize) -> Result<Vec<f64>> {
    let rule = semi_infinite_rule(0.0, tol, n)?;
    let t2 = tau * tau;
    let tilted: Vec<f64> = rule
        .nodes()
        .iter()
        .map(|&w| {
            let v = -u + CBRT2 * w;
            airy_scaled_unchecked(v + t2)
                .ai
                .scale_exp(tau * v)
                .to_real()
        })
        .collect();
    Ok(zs
        .iter()
        .map(|&z| {
            let mut s = 0.0;
            for i in 0..rule.len() {
                s += rule.weights()[i] * tilted[i] * airy_unchecked(rule.nodes()[i] + z).ai;
            }
            s
        })
        .collect())
}

// ---------------------------------------------------------------------------
// Shared coupling tables.

/// Stripped coupling values `Ahat^{+-tau}_u(z_k)` for a probe set over the
/// nodes of an auxiliary rule on `[sigma_tilde, T]`.
struct AuxTables {
    rule: QuadRule,
    probe_us: Vec<f64>,
    /// `a_plus[i][k] = Ahat^{+tau}_{u_i}(z_k)`.
    a_plus: Vec<Vec<f64>>,
    /// `a_minus[i][k] = Ahat^{-tau}_{u_i}(z_k)`.
    a_minus: Vec<Vec<f64>>,
    cancellations: usize,
}

impl AuxTables {
    fn build(
        params: &TacnodeParams,
        probe_us: &[f64],
        n_aux: usize,
        parallel: bool,
    ) -> Result<AuxTables> {
        if n_aux < 24 {
            return Err(Error::Parameter(format!(
                "aux tables: n_aux = {n_aux} below the minimum 24"
            )));
        }
        let rule = semi_infinite_rule(params.sigma_tilde, AUX_TAIL_TOL, n_aux)?;
        let zs = rule.nodes().to_vec();
        let np = probe_us.len();
        let sigma_tilde = params.sigma_tilde;
        let collect_rows = |tau: f64| -> Result<(Vec<Vec<f64>>, usize)> {
            let worker = |i: usize| {
                script_a_batch(tau, sigma_tilde, probe_us[i], &zs, W_INTEGRAL_TOL).map(|vals| {
                    let cancels = vals.iter().filter(|v| v.cancellation).count();
                    let values: Vec<f64> = vals.iter().map(|v| v.value.to_real()).collect();
                    (values, cancels)
                })
            };
            let rows = if parallel {
                par::map_indexed(np, worker)
            } else {
                par::map_indexed_seq(np, worker)
            };
            let mut out = Vec::with_capacity(np);
            let mut cancels = 0;
            for r in rows {
                let (vals, c) = r?;
                cancels += c;
                out.push(vals);
            }
            Ok((out, cancels))
        };
        let (a_plus, c_plus) = collect_rows(params.tau)?;
        let (a_minus, c_minus) = collect_rows(-params.tau)?;
        for row in a_plus.iter().chain(a_minus.iter()) {
            if row.iter().any(|v| !v.is_finite()) {
                return Err(Error::Evaluation(
                    "coupling table holds a non-finite value; parameters exceed the envelope"
                        .into(),
                ));
            }
        }
        Ok(AuxTables {
            rule,
            probe_us: probe_us.to_vec(),
            a_plus,
            a_minus,
            cancellations: c_plus + c_minus,
        })
    }

    fn max_abs(&self) -> f64 {
        self.a_plus
            .iter()
            .chain(self.a_minus.iter())
            .flat_map(|row| row.iter())
            .fold(0.0_f64, |m, &v| m.max(v.abs()))
    }

    fn probe_index(&self, u: f64) -> Result<usize> {
        let mut best = None;
        for (i, &p) in self.probe_us.iter().enumerate() {
            let d = (p - u).abs();
            match best {
                None => best = Some((i, d)),
                Some((_, bd)) if d < bd => best = Some((i, d)),
                _ => {}
            }
        }
        match best {
            Some((i, d)) if d <= 1e-9 * (1.0 + u.abs()) => Ok(i),
            _ => Err(Error::Parameter(format!(
                "probe u = {u} is not present in the context tables"
            ))),
        }
    }
}

// ---------------------------------------------------------------------------
// Tacnode context: resolvent route.

/// Precomputed data for fast tacnode-kernel evaluation at fixed
/// `(sigma, tau)`: the auxiliary rule, the discrete Airy resolvent on it,
/// and the coupling tables at the requested probe offsets.
pub struct TacnodeContext {
    params: TacnodeParams,
    tables: AuxTables,
    rtilde: Mat,
    /// `sqrt(w_k) * a_plus[i][k]`.
    ap_scaled: Vec<Vec<f64>>,
    /// `sqrt(w_k) * a_minus[i][k]`.
    am_scaled: Vec<Vec<f64>>,
    /// `rtilde * ap_scaled[i]`, one vector per probe.
    rap: Vec<Vec<f64>>,
}

/// Build a [`TacnodeContext`]; `probe_us` are the offsets `x - sigma`
/// needed by the caller.
pub fn tacnode_context(
    params: &TacnodeParams,
    probe_us: &[f64],
    n_aux: usize,
) -> Result<TacnodeContext> {
    TacnodeContext::build(params, probe_us, n_aux)
}

/// Tacnode kernel value `K(x, y)` from a prepared context.
pub fn tacnode_eval(ctx: &TacnodeContext, x: f64, y: f64) -> Result<f64> {
    ctx.eval(x, y)
}

impl TacnodeContext {
    pub fn build(params: &TacnodeParams, probe_us: &[f64], n_aux: usize) -> Result<TacnodeContext> {
        Self::build_impl(params, probe_us, n_aux, true)
    }

    /// Sequential build, kept for the parallel-vs-serial benchmarks.
    #[doc(hidden)]
    pub fn build_serial(
        params: &TacnodeParams,
        probe_us: &[f64],
        n_aux: usize,
    ) -> Result<TacnodeContext> {
        Self::build_impl(params, probe_us, n_aux, false)
    }

    fn build_impl(
        params: &TacnodeParams,
        probe_us: &[f64],
        n_aux: usize,
        parallel: bool,
    ) -> Result<TacnodeContext> {
        let tables = AuxTables::build(params, probe_us, n_aux, parallel)?;
        let eval = |x: f64, y: f64| airy_kernel(x, y);
        let kernel = KernelFn::new(&eval, true);
        let a = nystrom_matrix(&kernel, &tables.rule)?;
        let n = a.dim();
        let mut id_minus = Mat::zeros(n);
        for i in 0..n {
            for j in 0..n {
                id_minus[(i, j)] = if i == j { 1.0 } else { 0.0 } - a[(i, j)];
            }
        }
        let lu = LuFactors::factor(id_minus.clone())?;
        if lu.pivot_ratio() < 1e-13 {
            return Err(Error::Resolvent(
                "tacnode context: Id - K_Ai is numerically singular on the aux interval".into(),
            ));
        }
        let rtilde = lu.solve_mat(&a);
        check_resolvent_identity(&id_minus, &rtilde)?;

        let sqw: Vec<f64> = tables.rule.weights().iter().map(|w| w.sqrt()).collect();
        let scale_rows = |rows: &[Vec<f64>]| -> Vec<Vec<f64>> {
            rows.iter()
                .map(|row| row.iter().zip(sqw.iter()).map(|(&v, &s)| v * s).collect())
                .collect()
        };
        let ap_scaled = scale_rows(&tables.a_plus);
        let am_scaled = scale_rows(&tables.a_minus);
        let rap = ap_scaled.iter().map(|v| rtilde.matvec(v)).collect();
        Ok(TacnodeContext {
            params: *params,
            tables,
            rtilde,
            ap_scaled,
            am_scaled,
            rap,
        })
    }

    pub fn params(&self) -> &TacnodeParams {
        &self.params
    }

    pub fn aux_rule(&self) -> &QuadRule {
        &self.tables.rule
    }

    pub fn rtilde(&self) -> &Mat {
        &self.rtilde
    }

    pub fn probe_us(&self) -> &[f64] {
        &self.tables.probe_us
    }

    /// Number of coupling-table entries that raised the cancellation flag.
    pub fn cancellation_count(&self) -> usize {
        self.tables.cancellations
    }

    /// Largest stripped coupling value over both tables; tends to zero as
    /// the overlap grows, which is what makes the resolvent correction of
    /// the kernel vanish in that limit.
    pub fn table_max_abs(&self) -> f64 {
        self.tables.max_abs()
    }

    /// Kernel value at probe offsets `x - sigma`, `y - sigma` (both must
    /// have been registered at build time).
    pub fn eval(&self, x: f64, y: f64) -> Result<f64> {
        let i = self.tables.probe_index(x - self.params.sigma)?;
        let j = self.tables.probe_index(y - self.params.sigma)?;
        Ok(self.eval_by_index(i, j))
    }

    /// Kernel value at the `i`-th and `j`-th registered probes.
    pub fn eval_by_index(&self, i: usize, j: usize) -> f64 {
        let x = self.params.sigma + self.tables.probe_us[i];
        let y = self.params.sigma + self.tables.probe_us[j];
        let ap = &self.ap_scaled[i];
        let am = &self.am_scaled[j];
        let rap = &self.rap[i];
        let mut single = 0.0;
        let mut double = 0.0;
        for k in 0..ap.len() {
            single += ap[k] * am[k];
            double += am[k] * rap[k];
        }
        k_tau_tau(&self.params, x, y, false) + CBRT2 * (single + double)
    }
}

fn check_resolvent_identity(id_minus: &Mat, rtilde: &Mat) -> Result<()> {
    let n = id_minus.dim();
    let mut residual = 0.0_f64;
    for i in 0..n {
        for j in 0..n {
            let mut s = 0.0;
            for l in 0..n {
                let rhs = if l == j { 1.0 } else { 0.0 } + rtilde[(l, j)];
                s += id_minus[(i, l)] * rhs;
            }
            let target = if i == j { 1.0 } else { 0.0 };
            residual = residual.max((s - target).abs());
        }
    }
    if residual > 1e-10 {
        return Err(Error::Resolvent(format!(
            "discrete resolvent identity violated: residual {residual:.3e}"
        )));
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Block operator: Schur route.

/// Assembled block operator on `L2([sigma_tilde, T]) + L2(I)`:
///
/// ```text
/// [ Id - K_Ai          -lambda 2^{1/6} Ahat^{-tau} ]
/// [ -2^{1/6}/lambda Ahat^{tau}    Id - K1          ]
/// ```
///
/// Its determinant equals `det(Id - K_Ai|[sigma_tilde, inf)) * det(Id - K|I)`
/// for any `lambda != 0`, so the tacnode gap is the ratio of this
/// determinant to the top-left one. The route never forms a resolvent.
pub struct BlockSystem {
    matrix: Mat,
    n_aux_nodes: usize,
    n_dom_nodes: usize,
    det_sign: i8,
    log_det: f64,
    aux_det_sign: i8,
    aux_log_det: f64,
}

/// Assemble the block operator for the gap domain `I` (off-diagonal gauge
/// `lambda = 1`).
pub fn block_system(
    params: &TacnodeParams,
    domain: &IntervalUnion,
    n_dom: usize,
    n_aux: usize,
) -> Result<BlockSystem> {
    BlockSystem::build(params, domain, n_dom, n_aux, 1.0)
}

impl BlockSystem {
    pub fn build(
        params: &TacnodeParams,
        domain: &IntervalUnion,
        n_dom: usize,
        n_aux: usize,
        lambda: f64,
    ) -> Result<BlockSystem> {
        if lambda == 0.0 || !lambda.is_finite() {
            return Err(Error::Parameter("block system: lambda must be finite and nonzero".into()));
        }
        validate_gap_domain(domain)?;
        let dom_rule = if domain.is_empty() {
            None
        } else {
            Some(composite_rule(domain, n_dom)?)
        };
        let probe_us: Vec<f64> = dom_rule
            .as_ref()
            .map(|r| r.nodes().iter().map(|&x| x - params.sigma).collect())
            .unwrap_or_default();
        let tables = AuxTables::build(params, &probe_us, n_aux, true)?;

        let eval = |x: f64, y: f64| airy_kernel(x, y);
        let airy = KernelFn::new(&eval, true);
        let a_aux = nystrom_matrix(&airy, &tables.rule)?;
        let na = a_aux.dim();
        let nd = probe_us.len();
        let sqw: Vec<f64> = tables.rule.weights().iter().map(|w| w.sqrt()).collect();

        let mut m = Mat::zeros(na + nd);
        for i in 0..na {
            for j in 0..na {
                m[(i, j)] = if i == j { 1.0 } else { 0.0 } - a_aux[(i, j)];
            }
        }
        if let Some(rule) = &dom_rule {
            let sqv: Vec<f64> = rule.weights().iter().map(|w| w.sqrt()).collect();
            for i in 0..nd {
                let xi = rule.nodes()[i];
                for j in 0..nd {
                    let xj = rule.nodes()[j];
                    let k1 = k_tau_tau(params, xi, xj, false);
                    m[(na + i, na + j)] =
                        if i == j { 1.0 } else { 0.0 } - sqv[i] * k1 * sqv[j];
                }
            }
            for i in 0..na {
                for j in 0..nd {
                    m[(i, na + j)] =
                        -lambda * ROOT6_OF_2 * sqw[i] * tables.a_minus[j][i] * sqv[j];
                }
            }
            for i in 0..nd {
                for j in 0..na {
                    m[(na + i, j)] =
                        -(ROOT6_OF_2 / lambda) * sqv[i] * tables.a_plus[i][j] * sqw[j];
                }
            }
        }

        for i in 0..na + nd {
            for j in 0..na + nd {
                if !m[(i, j)].is_finite() {
                    return Err(Error::Evaluation(
                        "block system: non-finite entry during assembly".into(),
                    ));
                }
            }
        }

        let lu = LuFactors::factor(m.clone())?;
        let mut aux_only = Mat::zeros(na);
        for i in 0..na {
            for j in 0..na {
                aux_only[(i, j)] = if i == j { 1.0 } else { 0.0 } - a_aux[(i, j)];
            }
        }
        let aux_lu = LuFactors::factor(aux_only)?;
        Ok(BlockSystem {
            matrix: m,
            n_aux_nodes: na,
            n_dom_nodes: nd,
            det_sign: lu.det_sign(),
            log_det: lu.log_abs_det(),
            aux_det_sign: aux_lu.det_sign(),
            aux_log_det: aux_lu.log_abs_det(),
        })
    }

    pub fn matrix(&self) -> &Mat {
        &self.matrix
    }

    pub fn n_aux_nodes(&self) -> usize {
        self.n_aux_nodes
    }

    pub fn n_dom_nodes(&self) -> usize {
        self.n_dom_nodes
    }

    /// Determinant of the full block matrix as `(sign, ln|det|)`.
    pub fn det(&self) -> (i8, f64) {
        (self.det_sign, self.log_det)
    }

    /// Determinant of the top-left block alone, i.e. the Tracy-Widom
    /// factor at matched auxiliary resolution.
    pub fn aux_det(&self) -> (i8, f64) {
        (self.aux_det_sign, self.aux_log_det)
    }
}
