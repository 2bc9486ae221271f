//! Gauss-Legendre quadrature, affine transplantation, truncated
//! semi-infinite rules with Airy-tail control, and composite rules over
//! unions of intervals.
//!
//! Semi-infinite integrands in this crate all decay at least as fast as
//! `Ai(c u)`, so `[lo, inf)` is truncated at a point `T` where the tail
//! bound `e^{-(2/3) max(T,1)^{3/2}}` drops below the requested tolerance;
//! Gauss-Legendre then converges spectrally on the finite remainder. `T`
//! is floored at `lo + 6` and capped at `lo + 40`.

use crate::error::{Error, Result};

/// Ordered union of pairwise disjoint finite intervals.
#[derive(Debug, Clone, PartialEq)]
pub struct IntervalUnion {
    pieces: Vec<(f64, f64)>,
}

impl IntervalUnion {
    /// Validates ordering, disjointness and `lo < hi` per piece.
    pub fn new(pieces: Vec<(f64, f64)>) -> Result<IntervalUnion> {
        for &(lo, hi) in &pieces {
            if !lo.is_finite() || !hi.is_finite() {
                return Err(Error::DomainModel(format!(
                    "interval ({lo}, {hi}) has a non-finite endpoint"
                )));
            }
            if lo >= hi {
                return Err(Error::DomainModel(format!(
                    "interval ({lo}, {hi}) is empty or reversed"
                )));
            }
        }
        for w in pieces.windows(2) {
            if w[0].1 > w[1].0 {
                return Err(Error::DomainModel(format!(
                    "intervals ({}, {}) and ({}, {}) overlap or are unsorted",
                    w[0].0, w[0].1, w[1].0, w[1].1
                )));
            }
        }
        Ok(IntervalUnion { pieces })
    }

    pub fn single(lo: f64, hi: f64) -> Result<IntervalUnion> {
        IntervalUnion::new(vec![(lo, hi)])
    }

    pub fn empty() -> IntervalUnion {
        IntervalUnion { pieces: Vec::new() }
    }

    pub fn pieces(&self) -> &[(f64, f64)] {
        &self.pieces
    }

    pub fn is_empty(&self) -> bool {
        self.pieces.is_empty()
    }

    pub fn total_length(&self) -> f64 {
        self.pieces.iter().map(|&(lo, hi)| hi - lo).sum()
    }

    pub fn min(&self) -> Option<f64> {
        self.pieces.first().map(|p| p.0)
    }

    pub fn max(&self) -> Option<f64> {
        self.pieces.last().map(|p| p.1)
    }
}

/// Nodes and weights discretizing an [`IntervalUnion`].
///
/// Nodes are strictly increasing within each piece and weights are
/// positive. Piece boundaries are retained so that sums can be formed
/// per piece and then combined, making composite quadrature bitwise equal
/// to the sum of its per-piece quadratures.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadRule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
    domain: IntervalUnion,
    /// Start offset of each piece in `nodes`, plus a final sentinel.
    piece_offsets: Vec<usize>,
}

impl QuadRule {
    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn domain(&self) -> &IntervalUnion {
        &self.domain
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Quadrature sum with fixed left-to-right order inside each piece and
    /// across piece subtotals (run-to-run deterministic).
    pub fn integrate<F: FnMut(f64) -> f64>(&self, mut f: F) -> f64 {
        let mut total = 0.0;
        for w in self.piece_offsets.windows(2) {
            let mut piece = 0.0;
            for i in w[0]..w[1] {
                piece += self.weights[i] * f(self.nodes[i]);
            }
            total += piece;
        }
        total
    }
}

/// `n`-point Gauss-Legendre rule on `[-1, 1]`.
///
/// Nodes are Newton-iterated roots of the Legendre polynomial `P_n`
/// (initial guesses from the Chebyshev-like asymptotic), exact for
/// polynomials of degree `2n - 1`.
pub fn gauss_legendre(n: usize) -> Result<QuadRule> {
    if !(1..=512).contains(&n) {
        return Err(Error::Parameter(format!(
            "gauss_legendre: n = {n} outside [1, 512]"
        )));
    }
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        if n % 2 == 1 && i == (n - 1) / 2 {
            x = 0.0;
        }
        for _ in 0..20 {
            let (p, d) = legendre_and_derivative(n, x);
            let dx = p / d;
            x -= dx;
            if dx.abs() <= 1e-15 {
                break;
            }
        }
        let (_, dp) = legendre_and_derivative(n, x);
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        // Mirror for exact symmetry; i = 0 is the largest positive root.
        nodes[n - 1 - i] = x;
        nodes[i] = -x;
        weights[n - 1 - i] = w;
        weights[i] = w;
    }
    Ok(QuadRule {
        nodes,
        weights,
        domain: IntervalUnion::single(-1.0, 1.0)?,
        piece_offsets: vec![0, n],
    })
}

fn legendre_and_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (1.0, 0.0);
    }
    if n == 1 {
        return (x, 1.0);
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Transplant a canonical `[-1, 1]` rule to `[lo, hi]`.
pub fn map_affine(rule: &QuadRule, lo: f64, hi: f64) -> Result<QuadRule> {
    if lo.is_nan() || hi.is_nan() || lo >= hi {
        return Err(Error::Parameter(format!(
            "map_affine: empty interval [{lo}, {hi}]"
        )));
    }
    if rule.domain.pieces() != [(-1.0, 1.0)] {
        return Err(Error::Parameter(
            "map_affine: input rule must live on [-1, 1]".into(),
        ));
    }
    let half = 0.5 * (hi - lo);
    let mid = 0.5 * (hi + lo);
    let nodes: Vec<f64> = rule.nodes.iter().map(|&x| mid + half * x).collect();
    let weights: Vec<f64> = rule.weights.iter().map(|&w| w * half).collect();
    let n = nodes.len();
    Ok(QuadRule {
        nodes,
        weights,
        domain: IntervalUnion::single(lo, hi)?,
        piece_offsets: vec![0, n],
    })
}

/// Truncated rule for `[lo, inf)` against Airy-type decay.
pub fn semi_infinite_rule(lo: f64, tol: f64, n: usize) -> Result<QuadRule> {
    if !(tol > 0.0 && tol <= 1e-4) {
        return Err(Error::Parameter(format!(
            "semi_infinite_rule: tol = {tol} outside (0, 1e-4]"
        )));
    }
    if n < 8 {
        return Err(Error::Parameter(format!(
            "semi_infinite_rule: n = {n} below the minimum 8"
        )));
    }
    if !lo.is_finite() {
        return Err(Error::Parameter("semi_infinite_rule: non-finite lo".into()));
    }
    let t = truncation_point(lo, tol);
    map_affine(&gauss_legendre(n)?, lo, t)
}

/// Smallest `T` with `e^{-(2/3) max(T,1)^{3/2}} < tol`, floored at
/// `lo + 6` and capped at `lo + 40`.
pub fn truncation_point(lo: f64, tol: f64) -> f64 {
    let bound = (1.5 * (1.0 / tol).ln()).powf(2.0 / 3.0).max(1.0);
    bound.max(lo + 6.0).min(lo + 40.0)
}

/// Concatenation of per-piece Gauss-Legendre rules over an interval union.
pub fn composite_rule(domain: &IntervalUnion, n_per: usize) -> Result<QuadRule> {
    if n_per < 4 {
        return Err(Error::Parameter(format!(
            "composite_rule: n_per = {n_per} below the minimum 4"
        )));
    }
    let base = gauss_legendre(n_per)?;
    let mut nodes = Vec::with_capacity(n_per * domain.pieces().len());
    let mut weights = Vec::with_capacity(n_per * domain.pieces().len());
    let mut piece_offsets = vec![0];
    for &(lo, hi) in domain.pieces() {
        let mapped = map_affine(&base, lo, hi)?;
        nodes.extend_from_slice(&mapped.nodes);
        weights.extend_from_slice(&mapped.weights);
        piece_offsets.push(nodes.len());
    }
    Ok(QuadRule {
        nodes,
        weights,
        domain: domain.clone(),
        piece_offsets,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::specfun::airy;

    #[test]
    fn one_point_rule_is_midpoint() {
        let r = gauss_legendre(1).unwrap();
        assert_eq!(r.nodes(), &[0.0]);
        assert_eq!(r.weights(), &[2.0]);
    }

    #[test]
    fn two_point_rule_matches_closed_form() {
        let r = gauss_legendre(2).unwrap();
        let x = 1.0 / 3f64.sqrt();
        assert!((r.nodes()[0] + x).abs() < 1e-15);
        assert!((r.nodes()[1] - x).abs() < 1e-15);
        assert!((r.weights()[0] - 1.0).abs() < 1e-15);
        assert!((r.weights()[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn sixteen_point_rule_integrates_monomials() {
        let r = gauss_legendre(16).unwrap();
        let odd = r.integrate(|x| x.powi(31));
        assert!(odd.abs() <= 1e-15);
        let even = r.integrate(|x| x.powi(30));
        assert!((even - 2.0 / 31.0).abs() <= 1e-14 * (2.0 / 31.0));
    }

    #[test]
    fn degree_exactness_sweep() {
        for &n in &[4usize, 8, 16] {
            let r = gauss_legendre(n).unwrap();
            for d in 0..=(2 * n - 1) {
                let got = r.integrate(|x| x.powi(d as i32));
                let want = if d % 2 == 1 { 0.0 } else { 2.0 / (d as f64 + 1.0) };
                assert!(
                    (got - want).abs() <= 1e-13,
                    "n={n} degree={d}: {got} vs {want}"
                );
            }
        }
    }

    #[test]
    fn mapped_rule_basics() {
        let base = gauss_legendre(2).unwrap();
        let r = map_affine(&base, 0.0, 2.0).unwrap();
        let wsum: f64 = r.weights().iter().sum();
        assert!((wsum - 2.0).abs() < 1e-14);
        let r01 = map_affine(&base, 0.0, 1.0).unwrap();
        assert!((r01.integrate(|x| x) - 0.5).abs() < 1e-15);
        assert!(map_affine(&base, 1.0, 1.0).is_err());
    }

    #[test]
    fn mapped_rule_integrates_exponential() {
        let r = map_affine(&gauss_legendre(8).unwrap(), 0.0, 1.0).unwrap();
        let got = r.integrate(f64::exp);
        let want = std::f64::consts::E - 1.0;
        assert!((got - want).abs() <= 1e-13);
    }

    #[test]
    fn semi_infinite_integrates_airy_to_one_third() {
        // int_0^inf Ai = 1/3; the truncated tail is below 1e-12.
        let r = semi_infinite_rule(0.0, 1e-12, 64).unwrap();
        let got = r.integrate(|u| airy(u).unwrap().ai);
        assert!((got - 1.0 / 3.0).abs() <= 1e-10, "got {got}");
    }

    #[test]
    fn semi_infinite_respects_lower_bound() {
        let r = semi_infinite_rule(5.0, 1e-10, 32).unwrap();
        assert!(r.nodes().iter().all(|&x| x >= 5.0));
        assert!(r.domain().max().unwrap() > 5.0);
    }

    #[test]
    fn semi_infinite_self_refines() {
        let f = |u: f64| {
            let a = airy(u).unwrap().ai;
            a * a
        };
        let i1 = semi_infinite_rule(0.0, 1e-12, 64).unwrap().integrate(f);
        let i2 = semi_infinite_rule(0.0, 1e-12, 128).unwrap().integrate(f);
        assert!((i1 - i2).abs() <= 1e-11);
    }

    #[test]
    fn truncation_is_sound_under_doubled_cutoff() {
        // Doubling T at fixed tol changes the Ai^2 integral by <= tol.
        let tol = 1e-10;
        let t = truncation_point(0.0, tol);
        let f = |u: f64| {
            let a = airy(u).unwrap().ai;
            a * a
        };
        let base = map_affine(&gauss_legendre(128).unwrap(), 0.0, t)
            .unwrap()
            .integrate(f);
        let doubled = map_affine(&gauss_legendre(256).unwrap(), 0.0, 2.0 * t)
            .unwrap()
            .integrate(f);
        assert!((base - doubled).abs() <= tol);
    }

    #[test]
    fn composite_single_piece_reduces_to_affine_map() {
        let union = IntervalUnion::single(-0.5, 1.5).unwrap();
        let c = composite_rule(&union, 6).unwrap();
        let m = map_affine(&gauss_legendre(6).unwrap(), -0.5, 1.5).unwrap();
        assert_eq!(c.nodes(), m.nodes());
        assert_eq!(c.weights(), m.weights());
    }

    #[test]
    fn composite_weight_sum_and_linearity() {
        let union = IntervalUnion::new(vec![(0.0, 1.0), (2.0, 3.0)]).unwrap();
        let c = composite_rule(&union, 4).unwrap();
        let wsum: f64 = c.weights().iter().sum();
        assert!((wsum - 2.0).abs() <= 1e-14);
        let got = c.integrate(|x| x);
        assert!((got - 3.0).abs() <= 1e-14);
    }

    #[test]
    fn composite_additivity_is_bitwise() {
        let union = IntervalUnion::new(vec![(-1.0, 0.5), (1.0, 2.5)]).unwrap();
        let c = composite_rule(&union, 12).unwrap();
        let f = |x: f64| (1.3 * x).sin() + x * x;
        let whole = c.integrate(f);
        let parts: f64 = union
            .pieces()
            .iter()
            .map(|&(lo, hi)| {
                composite_rule(&IntervalUnion::single(lo, hi).unwrap(), 12)
                    .unwrap()
                    .integrate(f)
            })
            .sum();
        assert_eq!(whole, parts);
    }

    #[test]
    fn interval_union_rejects_bad_input() {
        assert!(IntervalUnion::new(vec![(1.0, 0.0)]).is_err());
        assert!(IntervalUnion::new(vec![(0.0, 2.0), (1.0, 3.0)]).is_err());
        assert!(IntervalUnion::new(vec![(2.0, 3.0), (0.0, 1.0)]).is_err());
        assert!(IntervalUnion::new(vec![(f64::NEG_INFINITY, 0.0)]).is_err());
    }

    #[test]
    fn parameter_validation() {
        assert!(gauss_legendre(0).is_err());
        assert!(gauss_legendre(513).is_err());
        assert!(semi_infinite_rule(0.0, 1e-3, 32).is_err());
        assert!(semi_infinite_rule(0.0, 1e-10, 4).is_err());
        let union = IntervalUnion::single(0.0, 1.0).unwrap();
        assert!(composite_rule(&union, 3).is_err());
    }

    #[test]
    fn weight_sum_matches_domain_length() {
        for &n in &[7usize, 24, 48] {
            let union = IntervalUnion::new(vec![(-2.0, -0.5), (0.25, 4.0)]).unwrap();
            let c = composite_rule(&union, n.max(4)).unwrap();
            let wsum: f64 = c.weights().iter().sum();
            let len = union.total_length();
            assert!((wsum - len).abs() <= 1e-13 * len);
            assert!(c.weights().iter().all(|&w| w > 0.0));
            for w in c.nodes().windows(2) {
                // strictly increasing within pieces; allow the jump between pieces
                assert!(w[1] > w[0] || (w[0] > -0.5 && w[1] > 0.0));
            }
        }
    }
}
