//! Cross-module invariant suite behind `tacgap check`.
//!
//! Each check re-verifies one structural property of the engine at small
//! node counts; one line is printed per check and the suite fails if any
//! check fails.

use tacgap_core::fredholm::{
    fredholm_det, resolvent_bundle, Domain, KernelFn, NystromSystem,
};
use tacgap_core::kernels::{
    airy_kernel, airy_kernel_integral, k_tau_tau, BlockSystem, TacnodeContext, TacnodeParams,
};
use tacgap_core::probes::{self, PMethod};
use tacgap_core::quad::{
    composite_rule, gauss_legendre, map_affine, truncation_point, IntervalUnion,
};
use tacgap_core::specfun::{airy, ScaledReal};

type Check = (&'static str, fn() -> Result<(), String>);

pub fn run_all() -> bool {
    let checks: &[Check] = &[
        ("scaled_real_algebra", scaled_real_algebra),
        ("airy_ode_residual", airy_ode_residual),
        ("airy_switchover_continuity", airy_switchover_continuity),
        ("quad_degree_exactness", quad_degree_exactness),
        ("quad_composite_additivity", quad_composite_additivity),
        ("quad_truncation_soundness", quad_truncation_soundness),
        ("kernel_dual_representation", kernel_dual_representation),
        ("fredholm_resolvent_identity", fredholm_resolvent_identity),
        ("f2_monotone_and_bounded", f2_monotone_and_bounded),
        ("p_two_route_agreement", p_two_route_agreement),
        ("tacnode_two_route_identity", tacnode_two_route_identity),
        ("block_gauge_invariance", block_gauge_invariance),
        ("k1_gauge_stripping", k1_gauge_stripping),
        ("tacnode_time_reversal", tacnode_time_reversal),
    ];
    let mut all_ok = true;
    for (name, check) in checks {
        match check() {
            Ok(()) => println!("ok {name}"),
            Err(msg) => {
                println!("FAIL {name}: {msg}");
                all_ok = false;
            }
        }
    }
    if all_ok {
        println!("check suite passed ({} checks)", checks.len());
    } else {
        println!("check suite FAILED");
    }
    all_ok
}

fn ensure(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

/// Deterministic pseudo-random stream (splitmix-style) for property loops.
struct Rng(u64);

impl Rng {
    fn next_f64(&mut self) -> f64 {
        self.0 = self.0.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        let bits = (self.0 >> 11) as f64;
        bits / (1u64 << 53) as f64
    }
}

fn scaled_real_algebra() -> Result<(), String> {
    let mut rng = Rng(0x5eed_1234_abcd_ef01);
    let draw = |rng: &mut Rng| {
        let sign = if rng.next_f64() < 0.5 { -1.0 } else { 1.0 };
        // Nonzero reals spread over twelve decades.
        sign * 10f64.powf((rng.next_f64() - 0.5) * 12.0)
    };
    for i in 0..1000 {
        let a = draw(&mut rng);
        let b = draw(&mut rng);
        let sa = ScaledReal::from_real(a);
        let sb = ScaledReal::from_real(b);
        let back = sa.mul(sb.div(sa).map_err(|e| e.to_string())?);
        // |delta log| is the relative error of the represented value.
        ensure(
            back.sign() == sb.sign() && (back.log_mag() - sb.log_mag()).abs() <= 1e-14,
            format!("roundtrip failed at pair {i} (a = {a}, b = {b})"),
        )?;
    }
    Ok(())
}

fn airy_ode_residual() -> Result<(), String> {
    let h = 1e-2;
    let f = |t: f64| airy(t).map(|p| p.ai).map_err(|e| e.to_string());
    let mut x = -10.0;
    while x <= 10.0 + 1e-12 {
        let second = (-f(x + 2.0 * h)? + 16.0 * f(x + h)? - 30.0 * f(x)? + 16.0 * f(x - h)?
            - f(x - 2.0 * h)?)
            / (12.0 * h * h);
        let rhs = x * f(x)?;
        ensure(
            (second - rhs).abs() <= 1e-6 * (1.0 + rhs.abs()),
            format!("ODE residual too large at x = {x}"),
        )?;
        x += 0.25;
    }
    Ok(())
}

fn airy_switchover_continuity() -> Result<(), String> {
    for &x in &[8.0f64, -8.0] {
        let below = airy(x - 1e-13).map_err(|e| e.to_string())?;
        let above = airy(x + 1e-13).map_err(|e| e.to_string())?;
        let mid = airy(x).map_err(|e| e.to_string())?;
        ensure(
            (below.ai - above.ai).abs() <= 1e-12 * (1.0 + mid.ai.abs()),
            format!("Ai jump at switch point {x}"),
        )?;
    }
    Ok(())
}

fn quad_degree_exactness() -> Result<(), String> {
    for &n in &[4usize, 8, 16] {
        let rule = gauss_legendre(n).map_err(|e| e.to_string())?;
        for d in 0..=(2 * n - 1) {
            let got = rule.integrate(|x| x.powi(d as i32));
            let want = if d % 2 == 1 { 0.0 } else { 2.0 / (d as f64 + 1.0) };
            ensure(
                (got - want).abs() <= 1e-13,
                format!("degree {d} fails at n = {n}"),
            )?;
        }
    }
    Ok(())
}

fn quad_composite_additivity() -> Result<(), String> {
    let union = IntervalUnion::new(vec![(-1.0, 0.5), (1.0, 2.5)]).map_err(|e| e.to_string())?;
    let rule = composite_rule(&union, 12).map_err(|e| e.to_string())?;
    let f = |x: f64| (1.3 * x).sin() + x * x;
    let whole = rule.integrate(f);
    let parts: f64 = union
        .pieces()
        .iter()
        .map(|&(lo, hi)| {
            composite_rule(&IntervalUnion::single(lo, hi).unwrap(), 12)
                .unwrap()
                .integrate(f)
        })
        .sum();
    ensure(whole == parts, "composite quadrature is not bitwise additive")
}

fn quad_truncation_soundness() -> Result<(), String> {
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
    ensure(
        (base - doubled).abs() <= tol,
        format!("doubling the cutoff moved the integral by {:.3e}", (base - doubled).abs()),
    )
}

fn kernel_dual_representation() -> Result<(), String> {
    let mut worst = 0.0f64;
    for i in 0..21 {
        for j in 0..21 {
            let z = -5.0 + 0.5 * f64::from(i);
            let w = -5.0 + 0.5 * f64::from(j);
            let direct = airy_kernel(z, w);
            let integral = airy_kernel_integral(z, w, 1e-12).map_err(|e| e.to_string())?;
            worst = worst.max((direct - integral).abs());
        }
    }
    ensure(
        worst <= 1e-9,
        format!("dual-representation disagreement {worst:.3e}"),
    )
}

fn fredholm_resolvent_identity() -> Result<(), String> {
    let eval = |x: f64, y: f64| airy_kernel(x, y);
    let kernel = KernelFn::new(&eval, true);
    let domain = Domain::SemiInfinite { lo: 2.0, tol: 1e-12 };
    let bundle = resolvent_bundle(&kernel, &domain, 48, &[]).map_err(|e| e.to_string())?;
    let system =
        NystromSystem::assemble(&kernel, bundle.rule().clone()).map_err(|e| e.to_string())?;
    let id_minus = system.id_minus();
    let n = id_minus.dim();
    let mut residual = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            let mut s = 0.0;
            for l in 0..n {
                let rhs = if l == j { 1.0 } else { 0.0 } + bundle.rtilde()[(l, j)];
                s += id_minus[(i, l)] * rhs;
            }
            let target = if i == j { 1.0 } else { 0.0 };
            residual = residual.max((s - target).abs());
        }
    }
    ensure(
        residual <= 1e-10,
        format!("resolvent identity residual {residual:.3e}"),
    )
}

fn f2_monotone_and_bounded() -> Result<(), String> {
    let mut prev: Option<f64> = None;
    for &s in &[-6.0, -4.0, -2.0, 0.0, 2.0] {
        let det = probes::f2(s, 32).map_err(|e| e.to_string())?;
        ensure(
            det.value >= 0.0 && det.value <= 1.0 + 1e-9,
            format!("F2({s}) = {} outside [0, 1]", det.value),
        )?;
        if let Some(p) = prev {
            ensure(
                det.value >= p - 1e-9,
                format!("F2 not monotone at s = {s}"),
            )?;
        }
        prev = Some(det.value);
    }
    Ok(())
}

fn p_two_route_agreement() -> Result<(), String> {
    let a = probes::hastings_p(0.0, 48, PMethod::Resolvent).map_err(|e| e.to_string())?;
    let b = probes::hastings_p(0.0, 48, PMethod::FiniteDiff).map_err(|e| e.to_string())?;
    ensure(
        (a - b).abs() <= 1e-6,
        format!("p(0) routes differ: {a} vs {b}"),
    )
}

fn tacnode_two_route_identity() -> Result<(), String> {
    let params = TacnodeParams::new(1.0, 0.5).map_err(|e| e.to_string())?;
    let domain = IntervalUnion::single(-2.0, 2.0).map_err(|e| e.to_string())?;
    let direct = probes::tacnode_gap_direct(&params, &domain, 24, 32).map_err(|e| e.to_string())?;
    let block = probes::tacnode_gap_block(&params, &domain, 24, 32).map_err(|e| e.to_string())?;
    for det in [&direct, &block] {
        ensure(
            det.value >= 0.0 && det.value <= 1.0 + 1e-9,
            format!("gap {} outside [0, 1]", det.value),
        )?;
    }
    let rel = (direct.value - block.value).abs() / direct.value.abs();
    ensure(
        rel <= 1e-6,
        format!("routes differ by {rel:.3e} relative"),
    )
}

fn block_gauge_invariance() -> Result<(), String> {
    let params = TacnodeParams::new(1.0, 0.5).map_err(|e| e.to_string())?;
    let domain = IntervalUnion::single(-2.0, 2.0).map_err(|e| e.to_string())?;
    let plain = BlockSystem::build(&params, &domain, 24, 32, 1.0).map_err(|e| e.to_string())?;
    let scaled = BlockSystem::build(&params, &domain, 24, 32, 10.0).map_err(|e| e.to_string())?;
    let (s1, l1) = plain.det();
    let (s2, l2) = scaled.det();
    ensure(
        s1 == s2 && (l1 - l2).abs() <= 1e-10,
        format!("off-diagonal scaling moved log det by {:.3e}", (l1 - l2).abs()),
    )
}

fn k1_gauge_stripping() -> Result<(), String> {
    let params = TacnodeParams::new(1.0, 0.5).map_err(|e| e.to_string())?;
    let domain = Domain::Finite(IntervalUnion::single(-2.0, 2.0).map_err(|e| e.to_string())?);
    let intact = |x: f64, y: f64| k_tau_tau(&params, x, y, false);
    let stripped = |x: f64, y: f64| k_tau_tau(&params, x, y, true);
    let a = fredholm_det(&KernelFn::new(&intact, false), &domain, 24).map_err(|e| e.to_string())?;
    let b =
        fredholm_det(&KernelFn::new(&stripped, true), &domain, 24).map_err(|e| e.to_string())?;
    ensure(
        (a.log_value - b.log_value).abs() <= 1e-10,
        format!(
            "gauge stripping moved log det by {:.3e}",
            (a.log_value - b.log_value).abs()
        ),
    )
}

fn tacnode_time_reversal() -> Result<(), String> {
    let params = TacnodeParams::new(1.0, 0.5).map_err(|e| e.to_string())?;
    let reversed = params.time_reversed();
    let (x, y) = (0.3, -0.7);
    let probes_xy = [x - 1.0, y - 1.0];
    let fwd = TacnodeContext::build(&params, &probes_xy, 48).map_err(|e| e.to_string())?;
    let bwd = TacnodeContext::build(&reversed, &probes_xy, 48).map_err(|e| e.to_string())?;
    let a = fwd.eval(x, y).map_err(|e| e.to_string())?;
    let b = bwd.eval(y, x).map_err(|e| e.to_string())?;
    ensure(
        (a - b).abs() <= 1e-10 * (1.0 + a.abs()),
        format!("time reversal broken: {a} vs {b}"),
    )
}
