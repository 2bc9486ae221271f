//! Numerical engine for gap probabilities of the Airy and single-time
//! tacnode determinantal point processes.
//!
//! A gap probability is the chance that a region contains no points of the
//! process; for a determinantal process with kernel `K` it equals the
//! Fredholm determinant `det(Id - K)` restricted to that region. This crate
//! evaluates such determinants by Nystrom discretization on Gauss-Legendre
//! grids and uses them to check, at desk scale, that the tacnode gap
//! probability degenerates into a product of two Tracy-Widom distributions
//! when the overlap parameter grows large or the time parameter moves away
//! from the critical moment.
//!
//! The crate is organized bottom-up:
//!
//! * [`specfun`] — the Airy function, its derivative, the exponentially
//!   tilted variant, and sign/log-magnitude arithmetic for values whose
//!   exponents overflow `f64`.
//! * [`quad`] — Gauss-Legendre rules, affine transplantation, truncated
//!   semi-infinite rules with Airy-tail control, and composite rules over
//!   interval unions.
//! * [`fredholm`] — Nystrom systems, LU-based log-determinants, discrete
//!   resolvents, and the moving-endpoint logarithmic derivative.
//! * [`kernels`] — the Airy kernel in two representations, the tilted
//!   kernel `K^(tau,-tau)`, the coupling functions of the tacnode kernel,
//!   the tacnode kernel itself, and the equivalent 2x2 block operator.
//! * [`probes`] — Tracy-Widom values, tacnode gaps by two independent
//!   routes, the log-derivative `p(s)`, and parameter sweeps with
//!   validity-window bookkeeping.
//!
//! With the default `parallel` feature the quadratic assembly loops and
//! sweep rows run on rayon; disabling the feature yields a fully sequential
//! build. Both produce bit-identical results because every parallel site
//! maps independent, deterministic work items into a preallocated,
//! index-ordered output.

pub mod error;
pub mod fredholm;
pub mod kernels;
mod par;
pub mod probes;
pub mod quad;
pub mod specfun;

pub use error::{Error, Result};
