//! Closed-form spectrum of the concentric annulus `{ε < r < 1}`.
//!
//! Separation of variables gives eigenfunctions `(A r^k + B r^{-k}) cos kθ`
//! (and the sine partner). The two boundary conditions form a 2×2 system in
//! `(A, B)` whose determinant is quadratic in λ.

use std::f64::consts::{PI, TAU};
use std::io::{self, Write};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalyticError {
    #[error("inner radius must lie in (0, 1), got {0}")]
    EpsOutOfRange(f64),
    #[error("mode index must be at least 1")]
    ZeroMode,
    #[error("coefficient system is defective at ε = {eps}, k = {k}")]
    Defective { eps: f64, k: u32 },
    #[error("polynomial root {root} and argmax of E {argmax} disagree")]
    Eps0Mismatch { root: f64, argmax: f64 },
    #[error("no sign change of the critical polynomial found in (0, 1)")]
    NoRoot,
}

pub type Result<T> = std::result::Result<T, AnalyticError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Branch {
    Plus,
    Minus,
}

fn check_eps(eps: f64) -> Result<()> {
    if eps > 0.0 && eps < 1.0 {
        Ok(())
    } else {
        Err(AnalyticError::EpsOutOfRange(eps))
    }
}

/// Eigenvalue of mode `n` on the branch `±`:
/// `(n/2)P ± (n/2)√(P² − 4/ε)` with `P = ((1+ε)/ε)((1+ε^{2n})/(1−ε^{2n}))`.
pub fn steklov_eig(eps: f64, n: u32, branch: Branch) -> Result<f64> {
    check_eps(eps)?;
    if n == 0 {
        return Err(AnalyticError::ZeroMode);
    }
    let nf = n as f64;
    let e2n = eps.powi(2 * n as i32);
    let p = ((1.0 + eps) / eps) * ((1.0 + e2n) / (1.0 - e2n));
    let root = (p * p - 4.0 / eps).sqrt();
    Ok(match branch {
        Branch::Plus => 0.5 * nf * (p + root),
        Branch::Minus => 0.5 * nf * (p - root),
    })
}

/// `1 − √(1 − x)`, switching to `x / (1 + √(1 − x))` when the radicand is
/// within 1e-8 of one.
fn one_minus_sqrt(x: f64) -> f64 {
    let radicand = 1.0 - x;
    if radicand > 1.0 - 1e-8 {
        x / (1.0 + radicand.sqrt())
    } else {
        1.0 - radicand.sqrt()
    }
}

/// First nontrivial eigenvalue in the simplified form
/// `(1+ε²)/(2ε(1−ε)) · (1 − √(1 − 4ε((1−ε)/(1+ε²))²))`.
pub fn lambda1(eps: f64) -> Result<f64> {
    check_eps(eps)?;
    let q = (1.0 - eps) / (1.0 + eps * eps);
    let x = 4.0 * eps * q * q;
    Ok((1.0 + eps * eps) / (2.0 * eps * (1.0 - eps)) * one_minus_sqrt(x))
}

/// Normalized first eigenvalue `E(ε) = λ₁ · 2π(1+ε)`.
pub fn e_value(eps: f64) -> Result<f64> {
    Ok(lambda1(eps)? * TAU * (1.0 + eps))
}

/// `dλ₁/dε` from differentiating the closed form.
pub fn lambda1_derivative(eps: f64) -> Result<f64> {
    check_eps(eps)?;
    // λ = (P − √(P² − 4/ε))/2 with P = (1+ε²)/(ε − ε²)
    let den = eps - eps * eps;
    let p = (1.0 + eps * eps) / den;
    let dp = (2.0 * eps * den - (1.0 + eps * eps) * (1.0 - 2.0 * eps)) / (den * den);
    let root = (p * p - 4.0 / eps).sqrt();
    let droot = (2.0 * p * dp + 4.0 / (eps * eps)) / (2.0 * root);
    Ok(0.5 * (dp - droot))
}

/// `dE/dε` from differentiating the closed form.
pub fn e_derivative(eps: f64) -> Result<f64> {
    Ok(TAU * lambda1(eps)? + TAU * (1.0 + eps) * lambda1_derivative(eps)?)
}

/// The nonzero radius at which `E` returns to `2π`.
///
/// Setting `λ₁ = 1/(1+ε)` in the characteristic equation leaves
/// `ε(1 − 3ε − 2ε²) = 0`, so the crossing is `(√17 − 3)/4`.
pub fn eps2() -> f64 {
    (17f64.sqrt() - 3.0) / 4.0
}

/// `ε⁶ − 10ε⁵ + 23ε⁴ − 12ε³ + 23ε² − 10ε + 1` by Horner's rule.
pub fn pi_poly(eps: f64) -> f64 {
    [1.0, -10.0, 23.0, -12.0, 23.0, -10.0, 1.0].iter().fold(0.0, |acc, c| acc * eps + c)
}

/// The four entries of the 2×2 coefficient system, rows as
/// `A·(βk² + k − λ) + B·(βk² − k − λ)` and
/// `A·(βk²ε^{k−2} − kε^{k−1} − λε^k) + B·(βk²ε^{−k−2} + kε^{−k−1} − λε^{−k})`.
fn system_entries(eps: f64, k: u32, beta: f64, lam: f64) -> [[f64; 2]; 2] {
    let kf = k as f64;
    let k2 = beta * kf * kf;
    let ki = k as i32;
    [
        [k2 + kf - lam, k2 - kf - lam],
        [
            k2 * eps.powi(ki - 2) - kf * eps.powi(ki - 1) - lam * eps.powi(ki),
            k2 * eps.powi(-ki - 2) + kf * eps.powi(-ki - 1) - lam * eps.powi(-ki),
        ],
    ]
}

/// Residuals of both equations of the coefficient system.
pub fn coeff_system_residual(eps: f64, k: u32, beta: f64, lam: f64, a_k: f64, a_mk: f64) -> (f64, f64) {
    let m = system_entries(eps, k, beta, lam);
    (m[0][0] * a_k + m[0][1] * a_mk, m[1][0] * a_k + m[1][1] * a_mk)
}

pub fn coeff_system_determinant(eps: f64, k: u32, beta: f64, lam: f64) -> f64 {
    let m = system_entries(eps, k, beta, lam);
    m[0][0] * m[1][1] - m[0][1] * m[1][0]
}

/// Quadratic `aλ² + bλ + c` whose roots make the system singular.
fn characteristic(eps: f64, k: u32, beta: f64) -> (f64, f64, f64) {
    let m0 = system_entries(eps, k, beta, 0.0);
    let (p1, q1, p2, q2) = (m0[0][0], m0[0][1], m0[1][0], m0[1][1]);
    let (ek, emk) = (eps.powi(k as i32), eps.powi(-(k as i32)));
    (emk - ek, -(p1 * emk + q2 - q1 * ek - p2), p1 * q2 - q1 * p2)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoeffPair {
    pub a_k: f64,
    pub a_mk: f64,
    pub k: u32,
    pub eps: f64,
    pub beta: f64,
    pub lambda: f64,
}

impl CoeffPair {
    /// Radial profile `A r^k + B r^{-k}`.
    pub fn profile(&self, r: f64) -> f64 {
        let k = self.k as i32;
        self.a_k * r.powi(k) + self.a_mk * r.powi(-k)
    }

    pub fn profile_derivative(&self, r: f64) -> f64 {
        let k = self.k as i32;
        let kf = self.k as f64;
        kf * (self.a_k * r.powi(k - 1) - self.a_mk * r.powi(-k - 1))
    }

    /// `∫_{∂Ω} (g cos kθ)² dσ`, which the normalization sets to one.
    pub fn boundary_norm_sq(&self) -> f64 {
        let (outer, inner) = (self.profile(1.0), self.profile(self.eps));
        PI * (outer * outer + self.eps * inner * inner)
    }
}

/// Eigenvalue and normalized null vector of the coefficient system.
/// The sign is fixed by `A_k + A_{−k} > 0` (positive trace on the outer circle).
pub fn solve_coeffs(eps: f64, k: u32, beta: f64, branch: Branch) -> Result<CoeffPair> {
    check_eps(eps)?;
    if k == 0 {
        return Err(AnalyticError::ZeroMode);
    }
    let (a, b, c) = characteristic(eps, k, beta);
    let disc = b * b - 4.0 * a * c;
    if !(disc >= 0.0) || a == 0.0 {
        return Err(AnalyticError::Defective { eps, k });
    }
    // stable quadratic roots
    let q = -0.5 * (b + disc.sqrt().copysign(b));
    let (r1, r2) = (q / a, c / q);
    let (lo, hi) = if r1 <= r2 { (r1, r2) } else { (r2, r1) };
    let lambda = match branch {
        Branch::Minus => lo,
        Branch::Plus => hi,
    };

    let m = system_entries(eps, k, beta, lambda);
    let from_row = |row: [f64; 2]| (-row[1], row[0]);
    let (v0, v1) = (from_row(m[0]), from_row(m[1]));
    let n0 = v0.0.hypot(v0.1);
    let n1 = v1.0.hypot(v1.1);
    let (mut x, mut y) = if n0 >= n1 { v0 } else { v1 };
    if n0.max(n1) == 0.0 {
        return Err(AnalyticError::Defective { eps, k });
    }
    let mut pair = CoeffPair { a_k: x, a_mk: y, k, eps, beta, lambda };
    let norm = pair.boundary_norm_sq().sqrt();
    let sign = if x + y < 0.0 { -1.0 } else { 1.0 };
    x *= sign / norm;
    y *= sign / norm;
    pair.a_k = x;
    pair.a_mk = y;
    Ok(pair)
}

/// Root of `f` in `[a, b]` by bisection; `f(a)` and `f(b)` must differ in sign.
pub fn bisect<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let mut fa = f(a);
    for _ in 0..200 {
        if (b - a).abs() <= tol {
            break;
        }
        let mid = 0.5 * (a + b);
        let fm = f(mid);
        if fm == 0.0 {
            return mid;
        }
        if (fm < 0.0) == (fa < 0.0) {
            a = mid;
            fa = fm;
        } else {
            b = mid;
        }
    }
    0.5 * (a + b)
}

/// Maximizer of a unimodal `f` on `[a, b]` by golden-section search.
pub fn golden_section_max<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while (b - a).abs() > tol {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

/// Sign changes of `f` on a uniform grid over `(lo, hi)`, each refined by bisection.
pub fn sign_change_roots<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, step: f64, tol: f64) -> Vec<f64> {
    let n = ((hi - lo) / step).ceil() as usize;
    let mut roots = Vec::new();
    let mut prev = (lo, f(lo));
    for i in 1..=n {
        let x = (lo + i as f64 * step).min(hi);
        let fx = f(x);
        if (fx < 0.0) != (prev.1 < 0.0) {
            roots.push(bisect(&f, prev.0, x, tol));
        }
        prev = (x, fx);
    }
    roots
}

#[derive(Debug, Clone, PartialEq)]
pub struct Eps0Report {
    /// Root of the critical polynomial at the maximum of `E`.
    pub root: f64,
    pub argmax: f64,
    pub e_at_root: f64,
    /// Central difference of `E` at the root with step 1e-6.
    pub de_at_root: f64,
    pub pi_at_root: f64,
    /// Every root of the polynomial in (0, 1).
    pub all_roots: Vec<f64>,
}

/// Locates the critical radius twice: as a root of the sextic and as the
/// maximizer of `E`, and checks that both agree.
pub fn find_eps0() -> Result<Eps0Report> {
    let all_roots = sign_change_roots(pi_poly, 1e-4, 1.0 - 1e-4, 1e-4, 1e-13);
    let argmax = golden_section_max(|e| e_value(e).unwrap_or(f64::NEG_INFINITY), 1e-3, 0.9, 1e-10);
    let root = all_roots
        .iter()
        .copied()
        .min_by(|a, b| (a - argmax).abs().total_cmp(&(b - argmax).abs()))
        .ok_or(AnalyticError::NoRoot)?;
    if (root - argmax).abs() > 1e-5 {
        return Err(AnalyticError::Eps0Mismatch { root, argmax });
    }
    let h = 1e-6;
    let de_at_root = (e_value(root + h)? - e_value(root - h)?) / (2.0 * h);
    Ok(Eps0Report {
        root,
        argmax,
        e_at_root: e_value(root)?,
        de_at_root,
        pi_at_root: pi_poly(root),
        all_roots,
    })
}

/// `n` evenly spaced samples `(ε, E(ε))` over `[lo, hi]`.
pub fn sample_e_curve(lo: f64, hi: f64, n: usize) -> Result<Vec<(f64, f64)>> {
    (0..n)
        .map(|i| {
            let eps = if n == 1 { lo } else { lo + (hi - lo) * i as f64 / (n - 1) as f64 };
            e_value(eps).map(|v| (eps, v))
        })
        .collect()
}

pub fn write_e_curve_csv<W: Write>(mut w: W, samples: &[(f64, f64)]) -> io::Result<()> {
    writeln!(w, "eps,E")?;
    for (e, v) in samples {
        writeln!(w, "{e:.10},{v:.12}")?;
    }
    Ok(())
}
