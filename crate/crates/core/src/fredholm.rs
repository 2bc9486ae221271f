//! Nystrom discretization of integral operators, log-determinants via LU
//! with partial pivoting, discrete resolvents, and the moving-endpoint
//! logarithmic derivative.
//!
//! A kernel `K` on a quadrature rule becomes the symmetrically weighted
//! matrix `A[i][j] = sqrt(w_i) K(x_i, x_j) sqrt(w_j)`; `det(Id - K)` is
//! approximated by `det(I - A)`, which is similar to the plain one-sided
//! weighting and therefore has the same determinant, but stays symmetric
//! for symmetric kernels. Assembly is row-parallel; the row-major layout
//! and fixed within-row order make the result independent of the thread
//! count. Factorization is single-threaded per system.

use crate::error::{Error, Result};
use crate::par;
use crate::quad::{composite_rule, semi_infinite_rule, IntervalUnion, QuadRule};

/// Pivot magnitude below which `Id - K` is treated as singular.
const PIVOT_FLOOR: f64 = 1e-300;

/// A kernel function together with a symmetry hint.
///
/// The hint toggles a sampled symmetry assertion during assembly; the
/// determinant machinery itself works for arbitrary kernels.
pub struct KernelFn<'a> {
    eval: &'a (dyn Fn(f64, f64) -> f64 + Sync),
    symmetric_hint: bool,
}

impl<'a> KernelFn<'a> {
    pub fn new(eval: &'a (dyn Fn(f64, f64) -> f64 + Sync), symmetric_hint: bool) -> Self {
        KernelFn {
            eval,
            symmetric_hint,
        }
    }

    pub fn eval(&self, x: f64, y: f64) -> f64 {
        (self.eval)(x, y)
    }

    pub fn symmetric_hint(&self) -> bool {
        self.symmetric_hint
    }
}

/// Dense square matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Mat {
    n: usize,
    data: Vec<f64>,
}

impl Mat {
    pub fn zeros(n: usize) -> Mat {
        Mat {
            n,
            data: vec![0.0; n * n],
        }
    }

    pub fn identity(n: usize) -> Mat {
        let mut m = Mat::zeros(n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<f64>>) -> Mat {
        let n = rows.len();
        let mut data = Vec::with_capacity(n * n);
        for row in rows {
            debug_assert_eq!(row.len(), n);
            data.extend_from_slice(&row);
        }
        Mat { n, data }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    /// Matrix-vector product.
    pub fn matvec(&self, v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n];
        for i in 0..self.n {
            let mut s = 0.0;
            let row = self.row(i);
            for j in 0..self.n {
                s += row[j] * v[j];
            }
            out[i] = s;
        }
        out
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0_f64, |m, &v| m.max(v.abs()))
    }
}

impl std::ops::Index<(usize, usize)> for Mat {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.n + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for Mat {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.n + j]
    }
}

/// LU factorization with partial pivoting.
pub struct LuFactors {
    lu: Mat,
    perm: Vec<usize>,
    parity: i8,
    log_abs_det: f64,
    det_sign: i8,
    min_pivot: f64,
    max_pivot: f64,
}

impl LuFactors {
    /// Factor `m`; fails only when a pivot falls below the 1e-300 floor.
    pub fn factor(mut m: Mat) -> Result<LuFactors> {
        let n = m.dim();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut parity = 1i8;
        let mut log_abs_det = 0.0;
        let mut det_sign = 1i8;
        let mut min_pivot = f64::INFINITY;
        let mut max_pivot = 0.0f64;
        for col in 0..n {
            let mut pivot_row = col;
            let mut pivot_val = m[(col, col)].abs();
            for r in (col + 1)..n {
                let v = m[(r, col)].abs();
                if v > pivot_val {
                    pivot_val = v;
                    pivot_row = r;
                }
            }
            if !pivot_val.is_finite() {
                return Err(Error::Evaluation(
                    "non-finite entry encountered during factorization".into(),
                ));
            }
            if pivot_val < PIVOT_FLOOR {
                return Err(Error::Degenerate(format!(
                    "pivot {pivot_val:.3e} below the machine floor at column {col}"
                )));
            }
            if pivot_row != col {
                for j in 0..n {
                    let a = m[(col, j)];
                    m[(col, j)] = m[(pivot_row, j)];
                    m[(pivot_row, j)] = a;
                }
                perm.swap(col, pivot_row);
                parity = -parity;
            }
            let p = m[(col, col)];
            log_abs_det += p.abs().ln();
            if p < 0.0 {
                det_sign = -det_sign;
            }
            min_pivot = min_pivot.min(p.abs());
            max_pivot = max_pivot.max(p.abs());
            for r in (col + 1)..n {
                let factor = m[(r, col)] / p;
                m[(r, col)] = factor;
                for j in (col + 1)..n {
                    m[(r, j)] -= factor * m[(col, j)];
                }
            }
        }
        if parity < 0 {
            det_sign = -det_sign;
        }
        Ok(LuFactors {
            lu: m,
            perm,
            parity,
            log_abs_det,
            det_sign,
            min_pivot,
            max_pivot,
        })
    }

    pub fn dim(&self) -> usize {
        self.lu.dim()
    }

    /// `ln |det|`; the determinant of the empty matrix is 1.
    pub fn log_abs_det(&self) -> f64 {
        self.log_abs_det
    }

    pub fn det_sign(&self) -> i8 {
        if self.dim() == 0 {
            1
        } else {
            self.det_sign
        }
    }

    pub fn parity(&self) -> i8 {
        self.parity
    }

    /// Ratio of smallest to largest pivot, a cheap conditioning probe.
    pub fn pivot_ratio(&self) -> f64 {
        if self.dim() == 0 {
            1.0
        } else {
            self.min_pivot / self.max_pivot
        }
    }

    /// Solve `M x = b` in place.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.dim();
        debug_assert_eq!(b.len(), n);
        let mut x: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let mut s = x[i];
            for j in 0..i {
                s -= self.lu[(i, j)] * x[j];
            }
            x[i] = s;
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            for j in (i + 1)..n {
                s -= self.lu[(i, j)] * x[j];
            }
            x[i] = s / self.lu[(i, i)];
        }
        x
    }

    /// Solve for every column of `b`, returning the solution matrix.
    pub fn solve_mat(&self, b: &Mat) -> Mat {
        let n = self.dim();
        let mut out = Mat::zeros(n);
        for col in 0..n {
            let column: Vec<f64> = (0..n).map(|r| b[(r, col)]).collect();
            let x = self.solve(&column);
            for r in 0..n {
                out[(r, col)] = x[r];
            }
        }
        out
    }
}

/// Quadrature rule plus the symmetrically weighted kernel matrix.
pub struct NystromSystem {
    rule: QuadRule,
    matrix: Mat,
}

impl NystromSystem {
    /// Assemble `A[i][j] = sqrt(w_i) K(x_i, x_j) sqrt(w_j)`.
    pub fn assemble(kernel: &KernelFn<'_>, rule: QuadRule) -> Result<NystromSystem> {
        let matrix = nystrom_matrix(kernel, &rule)?;
        if kernel.symmetric_hint() {
            check_symmetry(kernel, &rule)?;
        }
        Ok(NystromSystem { rule, matrix })
    }

    pub fn rule(&self) -> &QuadRule {
        &self.rule
    }

    pub fn matrix(&self) -> &Mat {
        &self.matrix
    }

    /// `I - A`, the matrix whose determinant approximates `det(Id - K)`.
    pub fn id_minus(&self) -> Mat {
        let n = self.matrix.dim();
        let mut m = self.matrix.clone();
        for idx in 0..n * n {
            m.data[idx] = -m.data[idx];
        }
        for i in 0..n {
            m[(i, i)] += 1.0;
        }
        m
    }
}

/// Row-parallel assembly of the weighted kernel matrix.
pub fn nystrom_matrix(kernel: &KernelFn<'_>, rule: &QuadRule) -> Result<Mat> {
    let sqw: Vec<f64> = rule.weights().iter().map(|w| w.sqrt()).collect();
    let rows = par::map_indexed(rule.len(), |i| assemble_row(kernel, rule, &sqw, i));
    finish_rows(rows)
}

/// Sequential assembly; bitwise identical to [`nystrom_matrix`] and kept
/// for the parallel-vs-serial benchmarks.
#[doc(hidden)]
pub fn nystrom_matrix_serial(kernel: &KernelFn<'_>, rule: &QuadRule) -> Result<Mat> {
    let sqw: Vec<f64> = rule.weights().iter().map(|w| w.sqrt()).collect();
    let rows = par::map_indexed_seq(rule.len(), |i| assemble_row(kernel, rule, &sqw, i));
    finish_rows(rows)
}

fn assemble_row(kernel: &KernelFn<'_>, rule: &QuadRule, sqw: &[f64], i: usize) -> Vec<f64> {
    let xi = rule.nodes()[i];
    rule.nodes()
        .iter()
        .zip(sqw.iter())
        .map(|(&xj, &swj)| sqw[i] * kernel.eval(xi, xj) * swj)
        .collect()
}

fn finish_rows(rows: Vec<Vec<f64>>) -> Result<Mat> {
    for row in &rows {
        if row.iter().any(|v| !v.is_finite()) {
            return Err(Error::Evaluation(
                "kernel sample is non-finite on the quadrature grid".into(),
            ));
        }
    }
    Ok(Mat::from_rows(rows))
}

fn check_symmetry(kernel: &KernelFn<'_>, rule: &QuadRule) -> Result<()> {
    let n = rule.len();
    if n < 2 {
        return Ok(());
    }
    let step = (n / 7).max(1);
    let mut i = 0;
    while i < n {
        let j = n - 1 - i;
        let a = kernel.eval(rule.nodes()[i], rule.nodes()[j]);
        let b = kernel.eval(rule.nodes()[j], rule.nodes()[i]);
        if (a - b).abs() > 1e-12 * (1.0 + a.abs()) {
            return Err(Error::Evaluation(format!(
                "kernel marked symmetric but K({}, {}) differs from its transpose by {:.3e}",
                rule.nodes()[i],
                rule.nodes()[j],
                (a - b).abs()
            )));
        }
        i += step;
    }
    Ok(())
}

/// Discretization domain: a finite union of intervals or a truncated
/// semi-infinite ray with Airy-type tail control.
#[derive(Debug, Clone)]
pub enum Domain {
    Finite(IntervalUnion),
    SemiInfinite { lo: f64, tol: f64 },
}

impl Domain {
    pub fn rule(&self, n: usize) -> Result<QuadRule> {
        match self {
            Domain::Finite(union) => composite_rule(union, n),
            Domain::SemiInfinite { lo, tol } => semi_infinite_rule(*lo, *tol, n),
        }
    }

    fn is_empty(&self) -> bool {
        matches!(self, Domain::Finite(u) if u.is_empty())
    }
}

/// Fredholm determinant value with a self-convergence error estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetResult {
    /// `sign * exp(log_value)`.
    pub value: f64,
    /// `ln |det|`.
    pub log_value: f64,
    /// `|det_n - det_2n|` from recomputation at doubled resolution.
    pub err_estimate: f64,
    /// Node count of the primary computation.
    pub n_used: usize,
}

impl DetResult {
    pub(crate) fn exact_one() -> DetResult {
        DetResult {
            value: 1.0,
            log_value: 0.0,
            err_estimate: 0.0,
            n_used: 0,
        }
    }

    pub(crate) fn from_sign_log(sign: i8, log_value: f64, err: f64, n_used: usize) -> DetResult {
        DetResult {
            value: f64::from(sign) * log_value.exp(),
            log_value,
            err_estimate: err,
            n_used,
        }
    }
}

/// `det(Id - K)` over `domain` with an `n`-vs-`2n` error estimate.
pub fn fredholm_det(kernel: &KernelFn<'_>, domain: &Domain, n: usize) -> Result<DetResult> {
    if n < 8 {
        return Err(Error::Parameter(format!(
            "fredholm_det: n = {n} below the minimum 8"
        )));
    }
    if domain.is_empty() {
        return Ok(DetResult::exact_one());
    }
    let (sign, log, n_used) = det_at(kernel, domain, n)?;
    let (sign2, log2, _) = det_at(kernel, domain, 2 * n)?;
    let v = f64::from(sign) * log.exp();
    let v2 = f64::from(sign2) * log2.exp();
    Ok(DetResult::from_sign_log(sign, log, (v - v2).abs(), n_used))
}

fn det_at(kernel: &KernelFn<'_>, domain: &Domain, n: usize) -> Result<(i8, f64, usize)> {
    let rule = domain.rule(n)?;
    let system = NystromSystem::assemble(kernel, rule)?;
    let n_used = system.rule().len();
    let lu = LuFactors::factor(system.id_minus())?;
    Ok((lu.det_sign(), lu.log_abs_det(), n_used))
}

/// Discrete resolvent data for `R = (Id - K)^{-1} K`.
pub struct ResolventBundle {
    rule: QuadRule,
    /// `(I - A)^{-1} A` in the symmetrized weighting.
    rtilde: Mat,
    /// Continuous-kernel resolvent values at all probe pairs.
    probes: Mat,
}

impl ResolventBundle {
    pub fn rule(&self) -> &QuadRule {
        &self.rule
    }

    pub fn rtilde(&self) -> &Mat {
        &self.rtilde
    }

    /// `R(p_i, p_j)` for the probe points passed at construction.
    pub fn probe_values(&self) -> &Mat {
        &self.probes
    }
}

/// Build the discrete resolvent of `K` on `domain` and evaluate the
/// continuous resolvent kernel at every pair of `probe_points` by Nystrom
/// extension: solve `(I - A) rho = sqrt(w) K(., p)` and set
/// `R(z, p) = K(z, p) + sum_i sqrt(w_i) K(z, x_i) rho_i`.
pub fn resolvent_bundle(
    kernel: &KernelFn<'_>,
    domain: &Domain,
    n: usize,
    probe_points: &[f64],
) -> Result<ResolventBundle> {
    if n < 8 {
        return Err(Error::Parameter(format!(
            "resolvent_bundle: n = {n} below the minimum 8"
        )));
    }
    let rule = domain.rule(n)?;
    if let (Some(lo), Some(hi)) = (rule.domain().min(), rule.domain().max()) {
        for &p in probe_points {
            if !(lo..=hi).contains(&p) {
                return Err(Error::Parameter(format!(
                    "resolvent probe {p} lies outside the discretized domain [{lo}, {hi}]"
                )));
            }
        }
    }
    let system = NystromSystem::assemble(kernel, rule)?;
    let lu = LuFactors::factor(system.id_minus())?;
    if lu.pivot_ratio() < 1e-13 {
        return Err(Error::Resolvent(format!(
            "Id - K is numerically singular (pivot ratio {:.3e}); \
             the gap probability is indistinguishable from zero",
            lu.pivot_ratio()
        )));
    }
    let rtilde = lu.solve_mat(system.matrix());

    let rule = system.rule;
    let sqw: Vec<f64> = rule.weights().iter().map(|w| w.sqrt()).collect();
    let np = probe_points.len();
    let mut rho = Vec::with_capacity(np);
    for &p in probe_points {
        let col: Vec<f64> = rule
            .nodes()
            .iter()
            .zip(sqw.iter())
            .map(|(&x, &sw)| sw * kernel.eval(x, p))
            .collect();
        rho.push(lu.solve(&col));
    }
    let mut probes = Mat::zeros(np);
    for (a, &pa) in probe_points.iter().enumerate() {
        for (b, &pb) in probe_points.iter().enumerate() {
            let mut s = kernel.eval(pa, pb);
            for i in 0..rule.len() {
                s += sqw[i] * kernel.eval(pa, rule.nodes()[i]) * rho[b][i];
            }
            probes[(a, b)] = s;
        }
    }
    Ok(ResolventBundle {
        rule,
        rtilde,
        probes,
    })
}

/// `d/ds ln det(Id - K|_{[s, inf)}) = R(s, s)`, the resolvent kernel at the
/// moving endpoint.
pub fn endpoint_log_derivative(
    kernel: &KernelFn<'_>,
    s: f64,
    n: usize,
    tail_tol: f64,
) -> Result<f64> {
    if n < 16 {
        return Err(Error::Parameter(format!(
            "endpoint_log_derivative: n = {n} below the minimum 16"
        )));
    }
    let domain = Domain::SemiInfinite {
        lo: s,
        tol: tail_tol,
    };
    let bundle = resolvent_bundle(kernel, &domain, n, &[s])?;
    Ok(bundle.probe_values()[(0, 0)])
}
