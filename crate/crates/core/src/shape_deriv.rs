//! Shape derivatives of the first nontrivial Steklov eigenvalue.
//!
//! For a double eigenvalue the two branches `t ↦ λᵢ(Ωₜ)` have derivatives
//! equal to the eigenvalues of a 2×2 matrix built from the eigenfunctions and
//! the normal velocity `V_n`. All fields here are normal velocities measured
//! along the outward normal of the domain, so `V_n = k > 0` on the inner
//! circle shrinks the hole. With this convention the full derivative matrix of
//! the annulus is `M + M̃` (inner plus outer contribution).

use std::f64::consts::{PI, TAU};
use std::io::{self, Write};

use thiserror::Error;

use crate::annulus::{self, AnalyticError, Branch, CoeffPair};
use crate::fem::{assemble, solve_spectrum, FemError};
use crate::geometry::{
    arc_length_of, AnnularDomain, BoundaryCurve, CurveKind, DisplacedCurve,
    FieldTarget, GeometryError, PerturbationField,
};
use crate::linalg::{sym_eig, DenseSymMatrix, LinalgError};
use crate::mesher::{build_blended_mesh, RadialGrading};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ShapeDerivError {
    #[error("only planar balls (n = 2) are supported, got n = {0}")]
    UnsupportedDimension(usize),
    #[error("radius must be positive, got {0}")]
    NonPositiveRadius(f64),
    #[error("field acts on {got:?}, expected {expected:?}")]
    WrongTarget { expected: FieldTarget, got: FieldTarget },
    #[error("matrices of order {0} and {1} cannot be combined")]
    OrderMismatch(usize, usize),
    #[error("branch matching is ambiguous (best overlap {overlap:.3})")]
    AmbiguousBranches { overlap: f64 },
    #[error("finite-difference step must be positive, got {0}")]
    BadStep(f64),
    #[error(transparent)]
    Analytic(#[from] AnalyticError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Fem(#[from] FemError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

pub type Result<T> = std::result::Result<T, ShapeDerivError>;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MatrixContext {
    Ball { n: usize, radius: f64, beta: f64 },
    AnnulusInner { eps: f64 },
    AnnulusOuter { eps: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ShapeDerivMatrix {
    pub entries: DenseSymMatrix,
    pub context: MatrixContext,
}

impl ShapeDerivMatrix {
    fn from_2x2(m11: f64, m12: f64, m22: f64, context: MatrixContext) -> Self {
        let entries = DenseSymMatrix::from_lower_fn(2, |i, j| match (i, j) {
            (0, 0) => m11,
            (1, 1) => m22,
            _ => m12,
        });
        ShapeDerivMatrix { entries, context }
    }

    pub fn order(&self) -> usize {
        self.entries.order()
    }

    pub fn get(&self, j: usize, k: usize) -> f64 {
        self.entries.get(j, k)
    }

    pub fn trace(&self) -> f64 {
        self.entries.trace()
    }

    pub fn max_abs(&self) -> f64 {
        self.entries.max_abs()
    }

    /// Ascending eigenvalues: the branch derivatives.
    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        Ok(sym_eig(&self.entries)?.into_iter().map(|p| p.value).collect())
    }

    /// Entrywise sum; the context of `self` is kept.
    pub fn sum(&self, other: &ShapeDerivMatrix) -> Result<ShapeDerivMatrix> {
        let n = self.order();
        if other.order() != n {
            return Err(ShapeDerivError::OrderMismatch(n, other.order()));
        }
        let entries = DenseSymMatrix::from_lower_fn(n, |i, j| self.get(i, j) + other.get(i, j));
        Ok(ShapeDerivMatrix { entries, context: self.context })
    }
}

/// `∫₀^{2π} V_n w dθ` for the four weights `w` that appear in the 2×2
/// matrices. Only modes 0 and 2 of `V_n` contribute, so these are exact.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrigMoments {
    pub one: f64,
    pub cos2: f64,
    pub sin2: f64,
    pub sincos: f64,
}

impl TrigMoments {
    pub fn of(field: &PerturbationField) -> Self {
        let k = field.radial_part();
        let (c2, s2) = field.coefficient(2);
        TrigMoments {
            one: TAU * k,
            cos2: PI * k + 0.5 * PI * c2,
            sin2: PI * k - 0.5 * PI * c2,
            sincos: 0.5 * PI * s2,
        }
    }
}

/// Derivative matrix for a ball of radius `R` centred at the origin, with the
/// Wentzell parameter `β` (`β = 0` is Steklov):
/// `M_jk = δ_jk (1 + β(n−3)/R) ∫V_n /(ω_n R^{n+1}) − C(n,R) ∫V_n x_j x_k dσ`,
/// `C(n,R) = (n+1)(1 + β(n−2)/R)/(ω_n R^{n+3})`, `ω_2 = π`.
pub fn ball_matrix(n: usize, radius: f64, beta: f64, field: &PerturbationField) -> Result<ShapeDerivMatrix> {
    if n != 2 {
        return Err(ShapeDerivError::UnsupportedDimension(n));
    }
    if !(radius > 0.0) {
        return Err(ShapeDerivError::NonPositiveRadius(radius));
    }
    let r = radius;
    let nf = n as f64;
    let omega = PI;
    let mo = TrigMoments::of(field);
    // dσ = R dθ and x = R(cos θ, sin θ)
    let int_v = r * mo.one;
    let diag = (1.0 + beta * (nf - 3.0) / r) * int_v / (omega * r.powi(3));
    let c = (nf + 1.0) * (1.0 + beta * (nf - 2.0) / r) / (omega * r.powi(5));
    let r3 = r.powi(3);
    Ok(ShapeDerivMatrix::from_2x2(
        diag - c * r3 * mo.cos2,
        -c * r3 * mo.sincos,
        diag - c * r3 * mo.sin2,
        MatrixContext::Ball { n, radius, beta },
    ))
}

/// Coefficients of the inner-circle matrix of the concentric annulus, from the
/// normalized first eigenfunctions `(A r + B/r)(cos θ, sin θ)`.
///
/// With `α = Aε + B/ε` (trace on the hole) and `δ = A − B/ε²` (radial slope
/// there): `C₂ = α²/ε`, `C₃ = λα² − εδ²`, `C₁ = C₃ − C₂`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnnulusCoeffs {
    pub eps: f64,
    pub lambda: f64,
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub pair: CoeffPair,
}

impl AnnulusCoeffs {
    pub fn new(eps: f64) -> Result<Self> {
        let pair = annulus::solve_coeffs(eps, 1, 0.0, Branch::Minus)?;
        let lambda = pair.lambda;
        let alpha = pair.profile(eps);
        let delta = pair.profile_derivative(eps);
        let c2 = alpha * alpha / eps;
        let c3 = lambda * alpha * alpha - eps * delta * delta;
        // printed form of C₁, kept separate from C₃ − C₂
        let c1 = (alpha * alpha * (lambda / eps - 1.0 / (eps * eps)) - delta * delta) * eps;
        Ok(AnnulusCoeffs { eps, lambda, c1, c2, c3, pair })
    }

    /// Trace and slope of the radial profile on the outer circle.
    fn outer_alpha_delta(&self) -> (f64, f64) {
        (self.pair.profile(1.0), self.pair.profile_derivative(1.0))
    }
}

fn check_target(field: &PerturbationField, expected: FieldTarget) -> Result<()> {
    if field.target() != expected {
        return Err(ShapeDerivError::WrongTarget { expected, got: field.target() });
    }
    Ok(())
}

fn inner_matrix(c: &AnnulusCoeffs, mo: TrigMoments) -> ShapeDerivMatrix {
    // C₄ = C₃ and C₅ = C₂ by the cos ↔ sin symmetry of the two eigenfunctions
    ShapeDerivMatrix::from_2x2(
        c.c2 * mo.sin2 + c.c3 * mo.cos2,
        (c.c3 - c.c2) * mo.sincos,
        c.c3 * mo.sin2 + c.c2 * mo.cos2,
        MatrixContext::AnnulusInner { eps: c.eps },
    )
}

fn outer_matrix(c: &AnnulusCoeffs, mo: TrigMoments) -> ShapeDerivMatrix {
    let (a, d) = c.outer_alpha_delta();
    let (a2, d2) = (a * a, d * d);
    ShapeDerivMatrix::from_2x2(
        a2 * mo.sin2 - (d2 + c.lambda * a2) * mo.cos2,
        -(a2 + d2 + c.lambda * a2) * mo.sincos,
        a2 * mo.cos2 - (d2 + c.lambda * a2) * mo.sin2,
        MatrixContext::AnnulusOuter { eps: c.eps },
    )
}

/// Inner matrix `M` and outer matrix `M̃` of the concentric annulus `D \ B(0,ε)`
/// for normal velocities on the two circles. The branch derivatives are the
/// eigenvalues of `M + M̃`.
pub fn annulus_matrices(
    eps: f64,
    inner: &PerturbationField,
    outer: &PerturbationField,
) -> Result<(ShapeDerivMatrix, ShapeDerivMatrix)> {
    check_target(inner, FieldTarget::InnerBoundary)?;
    check_target(outer, FieldTarget::OuterBoundary)?;
    let c = AnnulusCoeffs::new(eps)?;
    Ok((inner_matrix(&c, TrigMoments::of(inner)), outer_matrix(&c, TrigMoments::of(outer))))
}

/// `(M_R, M_NR)`: the inner matrix of the constant part of `V_n` (a multiple of
/// the identity) and of its mean-zero part.
pub fn split_radial(eps: f64, field: &PerturbationField) -> Result<(ShapeDerivMatrix, ShapeDerivMatrix)> {
    check_target(field, FieldTarget::InnerBoundary)?;
    let c = AnnulusCoeffs::new(eps)?;
    let k = field.radial_part();
    let scalar = PI * (c.c2 + c.c3) * k;
    let m_r = ShapeDerivMatrix::from_2x2(scalar, 0.0, scalar, MatrixContext::AnnulusInner { eps });
    let m_nr = inner_matrix(&c, TrigMoments::of(&field.oscillatory_component()));
    Ok((m_r, m_nr))
}

/// Derivative matrix on one circle of the annulus by direct trapezoidal
/// quadrature of `∇_τu_j·∇_τu_k − ∂_n u_j ∂_n u_k − λ H u_j u_k` against
/// `V_n dσ`. Independent of the closed-form coefficients; exact for
/// `n_quad > max_mode + 2`.
pub fn annulus_matrix_by_quadrature(
    eps: f64,
    field: &PerturbationField,
    n_quad: usize,
) -> Result<ShapeDerivMatrix> {
    let c = AnnulusCoeffs::new(eps)?;
    let (r, h, context) = match field.target() {
        FieldTarget::InnerBoundary => (eps, -1.0 / eps, MatrixContext::AnnulusInner { eps }),
        FieldTarget::OuterBoundary => (1.0, 1.0, MatrixContext::AnnulusOuter { eps }),
    };
    let g = c.pair.profile(r);
    let dg = c.pair.profile_derivative(r);
    let mut m = [[0.0; 2]; 2];
    let w = TAU / n_quad as f64;
    for i in 0..n_quad {
        let theta = w * i as f64;
        let (s, co) = theta.sin_cos();
        let u = [g * co, g * s];
        let u_theta = [-g * s, g * co];
        let u_n = [dg * co, dg * s];
        let v = field.eval(theta);
        for j in 0..2 {
            for k in 0..2 {
                let integrand = u_theta[j] * u_theta[k] / (r * r) - u_n[j] * u_n[k] - c.lambda * h * u[j] * u[k];
                m[j][k] += w * r * v * integrand;
            }
        }
    }
    Ok(ShapeDerivMatrix::from_2x2(m[0][0], 0.5 * (m[0][1] + m[1][0]), m[1][1], context))
}

/// The inner-circle matrix transcribed from the printed `M₁₁`, `M₁₂`, `M₂₂`
/// with `‖g₁‖ = ‖g₂‖ = 1`; a regression comparator for [`annulus_matrices`].
pub fn printed_inner_matrix(eps: f64, field: &PerturbationField) -> Result<ShapeDerivMatrix> {
    let c = AnnulusCoeffs::new(eps)?;
    let mo = TrigMoments::of(field);
    let (a, d, lam, e) = (c.pair.profile(eps), c.pair.profile_derivative(eps), c.lambda, eps);
    let a2 = a * a;
    let m11 = (a2 * (mo.sin2 / (e * e) + lam * mo.cos2 / e) - d * d * mo.cos2) * e;
    let m22 = (a2 * (mo.cos2 / (e * e) + lam * mo.sin2 / e) - d * d * mo.sin2) * e;
    let m12 = c.c1 * mo.sincos;
    Ok(ShapeDerivMatrix::from_2x2(m11, m12, m22, MatrixContext::AnnulusInner { eps }))
}

/// The printed `M̃₁₁`, `M̃₂₂` (the printed off-diagonal entry is garbled and is
/// not transcribed).
pub fn printed_outer_diagonal(eps: f64, field: &PerturbationField) -> Result<(f64, f64)> {
    let c = AnnulusCoeffs::new(eps)?;
    let mo = TrigMoments::of(field);
    let (a, d) = c.outer_alpha_delta();
    let (a2, d2, lam) = (a * a, d * d, c.lambda);
    Ok((a2 * (mo.sin2 - lam * mo.cos2) - d2 * mo.cos2, a2 * (mo.cos2 - lam * mo.sin2) - d2 * mo.sin2))
}

/// First variation of the perimeter, `K(V) = ∫ H V_n dσ`, for a normal field on
/// one boundary component of `domain`.
pub fn perimeter_derivative(domain: &AnnularDomain, field: &PerturbationField) -> Result<f64> {
    let curve = domain.curve(field.target());
    if let CurveKind::Circle { .. } = curve.kind() {
        // H dσ = ±dθ on any circle
        return Ok(curve.orientation().sign() * TAU * field.radial_part() + 0.0);
    }
    let integrand = |theta: f64| -> Result<f64> {
        Ok(curve.curvature_at(theta)? * curve.velocity_at(theta).norm() * field.eval(theta))
    };
    let mut n = 256usize.max(16 * (field.max_mode() + curve_mode(curve) + 1));
    let mut prev = trapezoid(&integrand, n)?;
    for _ in 0..8 {
        n *= 2;
        let next = trapezoid(&integrand, n)?;
        if (next - prev).abs() <= 1e-13 * (1.0 + next.abs()) {
            return Ok(next);
        }
        prev = next;
    }
    Ok(prev)
}

fn curve_mode(curve: &BoundaryCurve) -> usize {
    match curve.kind() {
        CurveKind::Circle { .. } => 0,
        CurveKind::CosinePerturbedCircle { k, .. } => k as usize,
    }
}

fn trapezoid(f: &impl Fn(f64) -> Result<f64>, n: usize) -> Result<f64> {
    let w = TAU / n as f64;
    let mut total = 0.0;
    for i in 0..n {
        total += f(w * i as f64)?;
    }
    Ok(w * total)
}

/// Derivatives of the normalized branches `λᵢ(Ωₜ)|∂Ωₜ|`.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedDerivResult {
    /// Ascending eigenvalues of `|∂Ω| M + K λ I`.
    pub eigenvalues: Vec<f64>,
    pub matrix_eigenvalues: Vec<f64>,
    pub k: f64,
    pub lambda: f64,
    pub perimeter: f64,
}

pub fn normalized_derivative(m: &ShapeDerivMatrix, perimeter: f64, k: f64, lambda: f64) -> Result<NormalizedDerivResult> {
    let n = m.order();
    let shift = k * lambda;
    let scaled = DenseSymMatrix::from_lower_fn(n, |i, j| {
        perimeter * m.get(i, j) + if i == j { shift } else { 0.0 }
    });
    let eigenvalues = sym_eig(&scaled)?.into_iter().map(|p| p.value).collect();
    Ok(NormalizedDerivResult {
        eigenvalues,
        matrix_eigenvalues: m.eigenvalues()?,
        k,
        lambda,
        perimeter,
    })
}

/// Analytic normalized branch derivatives of the concentric annulus for a
/// field on the inner circle.
pub fn annulus_normalized_derivative(eps: f64, field: &PerturbationField) -> Result<NormalizedDerivResult> {
    let domain = AnnularDomain::concentric(eps)?;
    let (m, _) = annulus_matrices(eps, field, &PerturbationField::zero(FieldTarget::OuterBoundary))?;
    let k = perimeter_derivative(&domain, field)?;
    let lambda = AnnulusCoeffs::new(eps)?.lambda;
    normalized_derivative(&m, TAU * (1.0 + eps), k, lambda)
}

/// Discretization used by [`fd_branch_oracle`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FdConfig {
    pub n_theta: usize,
    pub n_r: usize,
    /// Also solve at `n_r / 2` and extrapolate assuming second-order error.
    pub richardson: bool,
}

impl Default for FdConfig {
    fn default() -> Self {
        FdConfig { n_theta: 512, n_r: 48, richardson: true }
    }
}

/// Central-difference derivatives of the two lowest nontrivial branches.
#[derive(Debug, Clone, PartialEq)]
pub struct FdBranchResult {
    /// `dλᵢ/dt`, ascending.
    pub lambda: [f64; 2],
    /// `d(λᵢ |∂Ωₜ|)/dt`, ascending.
    pub normalized: [f64; 2],
    pub h: f64,
}

struct Sample {
    values: [f64; 2],
    vectors: [Vec<f64>; 2],
    mass: DenseSymMatrix,
    perimeter: f64,
}

fn solve_displaced(
    domain: &AnnularDomain,
    field: &PerturbationField,
    t: f64,
    n_theta: usize,
    n_r: usize,
) -> Result<Sample> {
    let base = domain.curve(field.target());
    let moved = DisplacedCurve::new(base, field, t);
    let min_panels = 16 * (field.max_mode() + curve_mode(base) + 1);
    let moved_len = arc_length_of(&moved, min_panels)?;
    let mesh = match field.target() {
        FieldTarget::InnerBoundary => {
            build_blended_mesh(domain.outer(), &moved, n_theta, n_r, RadialGrading::Uniform)
        }
        FieldTarget::OuterBoundary => {
            build_blended_mesh(&moved, domain.inner(), n_theta, n_r, RadialGrading::Uniform)
        }
    }
    .map_err(FemError::from)?;
    let other_len = match field.target() {
        FieldTarget::InnerBoundary => domain.outer().arc_length()?,
        FieldTarget::OuterBoundary => domain.inner().arc_length()?,
    };
    let system = assemble(&mesh)?;
    let mut spectrum = solve_spectrum(&system, 3)?;
    let v2 = spectrum.vectors.pop().unwrap_or_default();
    let v1 = spectrum.vectors.pop().unwrap_or_default();
    Ok(Sample {
        values: [spectrum.eigenvalues[1], spectrum.eigenvalues[2]],
        vectors: [v1, v2],
        mass: system.boundary_mass,
        perimeter: moved_len + other_len,
    })
}

fn overlap(mass: &DenseSymMatrix, a: &[f64], b: &[f64]) -> f64 {
    mass.matvec(b).iter().zip(a).map(|(x, y)| x * y).sum::<f64>().abs()
}

const DEGENERATE_GAP: f64 = 1e-8;
const MIN_OVERLAP: f64 = 0.9;

/// Pairs the branches at `-h` with those at `+h` by eigenvector overlap.
/// Returns the `-h` index for each `+h` branch.
fn match_branches(plus: &Sample, minus: &Sample) -> Result<[usize; 2]> {
    let gap = |s: &Sample| (s.values[1] - s.values[0]).abs() / s.values[1].abs();
    if gap(plus) < DEGENERATE_GAP && gap(minus) < DEGENERATE_GAP {
        // both branches move together; any pairing is the same
        return Ok([0, 1]);
    }
    let o = |i: usize, j: usize| overlap(&plus.mass, &plus.vectors[i], &minus.vectors[j]);
    let straight = o(0, 0).min(o(1, 1));
    let crossed = o(0, 1).min(o(1, 0));
    let (pairing, best) = if straight >= crossed { ([0, 1], straight) } else { ([1, 0], crossed) };
    if best < MIN_OVERLAP {
        return Err(ShapeDerivError::AmbiguousBranches { overlap: best });
    }
    Ok(pairing)
}

fn central_differences(domain: &AnnularDomain, field: &PerturbationField, h: f64, n_theta: usize, n_r: usize) -> Result<FdBranchResult> {
    let (plus, minus) = rayon::join(
        || solve_displaced(domain, field, h, n_theta, n_r),
        || solve_displaced(domain, field, -h, n_theta, n_r),
    );
    let (plus, minus) = (plus?, minus?);
    let pairing = match_branches(&plus, &minus)?;
    let mut lambda = [0.0; 2];
    let mut normalized = [0.0; 2];
    for i in 0..2 {
        let j = pairing[i];
        lambda[i] = (plus.values[i] - minus.values[j]) / (2.0 * h);
        normalized[i] = (plus.values[i] * plus.perimeter - minus.values[j] * minus.perimeter) / (2.0 * h);
    }
    lambda.sort_by(f64::total_cmp);
    normalized.sort_by(f64::total_cmp);
    Ok(FdBranchResult { lambda, normalized, h })
}

/// Finite-difference branch derivatives for the deformation
/// `x ↦ x + t V_n(θ) n(θ)` of one boundary component, meshed with uniform
/// radial spacing so that the meshes at `±h` share their topology.
pub fn fd_branch_oracle(domain: &AnnularDomain, field: &PerturbationField, h: f64, config: FdConfig) -> Result<FdBranchResult> {
    if !(h > 0.0) {
        return Err(ShapeDerivError::BadStep(h));
    }
    let fine = central_differences(domain, field, h, config.n_theta, config.n_r)?;
    if !config.richardson {
        return Ok(fine);
    }
    let coarse = central_differences(domain, field, h, config.n_theta, (config.n_r / 2).max(2))?;
    let extrapolate = |f: [f64; 2], c: [f64; 2]| [(4.0 * f[0] - c[0]) / 3.0, (4.0 * f[1] - c[1]) / 3.0];
    Ok(FdBranchResult {
        lambda: extrapolate(fine.lambda, coarse.lambda),
        normalized: extrapolate(fine.normalized, coarse.normalized),
        h,
    })
}

/// Radial derivative of `E` at one radius by three routes, for `V_n = 1` on
/// the inner circle (`dε/dt = −1`).
#[derive(Debug, Clone, PartialEq)]
pub struct TriangleRow {
    pub eps: f64,
    /// `−dE/dε`.
    pub analytic: f64,
    /// Smallest eigenvalue of `|∂Ω| M + K λ I`.
    pub matrix: f64,
    /// Smallest finite-difference normalized branch derivative.
    pub fd: f64,
    pub fd_branches: [f64; 2],
}

impl TriangleRow {
    /// Largest pairwise relative mismatch.
    pub fn max_relative_mismatch(&self) -> f64 {
        let rel = |a: f64, b: f64| (a - b).abs() / a.abs().max(b.abs()).max(f64::MIN_POSITIVE);
        rel(self.analytic, self.matrix).max(rel(self.analytic, self.fd)).max(rel(self.matrix, self.fd))
    }

    /// Largest absolute value among the three routes.
    pub fn max_abs(&self) -> f64 {
        self.analytic.abs().max(self.matrix.abs()).max(self.fd.abs())
    }

    /// Relative agreement to `rel`, or absolute `abs` when the derivative
    /// vanishes (the critical radius).
    pub fn passes(&self, rel: f64, abs: f64, critical: bool) -> bool {
        if critical {
            self.max_abs() <= abs
        } else {
            self.max_relative_mismatch() <= rel
        }
    }
}

pub fn consistency_triangle(eps: f64, h: f64, config: FdConfig) -> Result<TriangleRow> {
    let field = PerturbationField::radial(1.0, FieldTarget::InnerBoundary);
    let analytic = -annulus::e_derivative(eps)?;
    let matrix = annulus_normalized_derivative(eps, &field)?.eigenvalues[0];
    let domain = AnnularDomain::concentric(eps)?;
    let fd = fd_branch_oracle(&domain, &field, h, config)?;
    Ok(TriangleRow { eps, analytic, matrix, fd: fd.normalized[0], fd_branches: fd.normalized })
}

/// One line of the derivative report.
#[derive(Debug, Clone, PartialEq)]
pub struct DerivReportRow {
    pub eps: f64,
    pub field: String,
    pub matrix_eigenvalues: [f64; 2],
    pub k: f64,
    pub normalized: [f64; 2],
    pub fd: Option<[f64; 2]>,
}

impl DerivReportRow {
    pub fn relative_errors(&self) -> Option<[f64; 2]> {
        self.fd.map(|fd| {
            let scale = self.normalized[0]
                .abs()
                .max(self.normalized[1].abs())
                .max(fd[0].abs())
                .max(fd[1].abs())
                .max(f64::MIN_POSITIVE);
            [(fd[0] - self.normalized[0]).abs() / scale, (fd[1] - self.normalized[1]).abs() / scale]
        })
    }
}

/// Analytic report line for a field on the inner circle, optionally with the
/// finite-difference check.
pub fn report_row(eps: f64, field: &PerturbationField, fd: Option<(f64, FdConfig)>) -> Result<DerivReportRow> {
    let nd = annulus_normalized_derivative(eps, field)?;
    let fd = match fd {
        Some((h, config)) => {
            let domain = AnnularDomain::concentric(eps)?;
            Some(fd_branch_oracle(&domain, field, h, config)?.normalized)
        }
        None => None,
    };
    Ok(DerivReportRow {
        eps,
        field: field.describe(),
        matrix_eigenvalues: [nd.matrix_eigenvalues[0], nd.matrix_eigenvalues[1]],
        k: nd.k,
        normalized: [nd.eigenvalues[0], nd.eigenvalues[1]],
        fd,
    })
}

pub fn write_report_csv<W: Write>(mut w: W, rows: &[DerivReportRow]) -> io::Result<()> {
    writeln!(w, "eps,field,eig1_M,eig2_M,K,dnorm1,dnorm2,fd1,fd2,relerr1,relerr2")?;
    for r in rows {
        write!(
            w,
            "{:.10},{},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e}",
            r.eps, r.field, r.matrix_eigenvalues[0], r.matrix_eigenvalues[1], r.k, r.normalized[0], r.normalized[1]
        )?;
        match (r.fd, r.relative_errors()) {
            (Some(fd), Some(e)) => writeln!(w, ",{:.12e},{:.12e},{:.3e},{:.3e}", fd[0], fd[1], e[0], e[1])?,
            _ => writeln!(w, ",,,,")?,
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const INNER: FieldTarget = FieldTarget::InnerBoundary;
    const OUTER: FieldTarget = FieldTarget::OuterBoundary;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    fn assert_matrix_close(a: &ShapeDerivMatrix, b: &ShapeDerivMatrix, tol: f64) {
        for j in 0..2 {
            for k in 0..2 {
                assert!(close(a.get(j, k), b.get(j, k), tol), "({j},{k}): {} vs {}", a.get(j, k), b.get(j, k));
            }
        }
    }

    #[test]
    fn moments_match_quadrature() {
        let f = PerturbationField::new(0.7, vec![(0.3, -0.2), (1.1, 0.4), (0.0, 0.9)], INNER);
        let n = 64;
        let w = TAU / n as f64;
        let q = |g: &dyn Fn(f64) -> f64| (0..n).map(|i| w * f.eval(w * i as f64) * g(w * i as f64)).sum::<f64>();
        let mo = TrigMoments::of(&f);
        assert!(close(mo.one, q(&|_| 1.0), 1e-13));
        assert!(close(mo.cos2, q(&|t| t.cos().powi(2)), 1e-13));
        assert!(close(mo.sin2, q(&|t| t.sin().powi(2)), 1e-13));
        assert!(close(mo.sincos, q(&|t| t.sin() * t.cos()), 1e-13));
    }

    #[test]
    fn ball_zero_field() {
        let m = ball_matrix(2, 1.3, 0.2, &PerturbationField::zero(OUTER)).unwrap();
        assert_eq!(m.max_abs(), 0.0);
    }

    #[test]
    fn ball_rejects_other_dimensions() {
        let f = PerturbationField::radial(1.0, OUTER);
        assert_eq!(ball_matrix(3, 1.0, 0.0, &f), Err(ShapeDerivError::UnsupportedDimension(3)));
    }

    #[test]
    fn ball_radial_matches_dilation() {
        // Steklov on a disk: λ₁ = 1/R, so V_n = 1 gives λ' = −1/R²
        for r in [0.5, 1.0, 2.5] {
            let m = ball_matrix(2, r, 0.0, &PerturbationField::radial(1.0, OUTER)).unwrap();
            assert!(close(m.get(0, 0), -1.0 / (r * r), 1e-13));
            assert!(close(m.get(1, 1), -1.0 / (r * r), 1e-13));
            assert_eq!(m.get(0, 1), 0.0);
        }
    }

    #[test]
    fn ball_mode_two_is_traceless_and_nonzero() {
        let f = PerturbationField::single_mode(2, 1.0, false, OUTER);
        let m = ball_matrix(2, 1.0, 0.3, &f).unwrap();
        assert!(m.trace().abs() < 1e-12);
        assert!(m.max_abs() > 0.1);
        let other = PerturbationField::new(0.0, vec![(0.4, 0.1), (0.0, 0.0), (1.0, -2.0), (0.3, 0.3)], OUTER);
        assert!(ball_matrix(2, 1.0, 0.3, &other).unwrap().max_abs() < 1e-12);
    }

    #[test]
    fn coefficient_identity() {
        for eps in [0.05, 0.146721, 0.3, 0.5, 0.8] {
            let c = AnnulusCoeffs::new(eps).unwrap();
            assert!(close(c.c1, c.c3 - c.c2, 1e-12 * (1.0 + c.c2.abs())), "eps {eps}");
        }
    }

    #[test]
    fn radial_inner_field_gives_scalar_matrix() {
        let k = 0.8;
        let eps = 0.3;
        let (m, mt) = annulus_matrices(eps, &PerturbationField::radial(k, INNER), &PerturbationField::zero(OUTER)).unwrap();
        let c = AnnulusCoeffs::new(eps).unwrap();
        let want = PI * (c.c2 + c.c3) * k;
        assert!(close(m.get(0, 0), want, 1e-13));
        assert!(close(m.get(1, 1), want, 1e-13));
        assert!(m.get(0, 1).abs() < 1e-15);
        assert_eq!(mt.max_abs(), 0.0);
    }

    #[test]
    fn radial_inner_derivative_matches_closed_form() {
        // V_n = 1 shrinks the hole: λ' = −dλ/dε
        for eps in [0.1, 0.146721, 0.3, 0.6] {
            let c = AnnulusCoeffs::new(eps).unwrap();
            let want = -annulus::lambda1_derivative(eps).unwrap();
            assert!(close(PI * (c.c2 + c.c3), want, 1e-9 * want.abs().max(1.0)), "eps {eps}");
        }
    }

    #[test]
    fn dilation_gives_minus_lambda() {
        // x ↦ (1+t)x: V_n = −ε on the hole, 1 on the outer circle, λ(t) = λ/(1+t)
        for eps in [0.1, 0.3, 0.7] {
            let (m, mt) =
                annulus_matrices(eps, &PerturbationField::radial(-eps, INNER), &PerturbationField::radial(1.0, OUTER))
                    .unwrap();
            let total = m.sum(&mt).unwrap();
            let lam = annulus::lambda1(eps).unwrap();
            for e in total.eigenvalues().unwrap() {
                assert!(close(e, -lam, 1e-12), "eps {eps}: {e} vs {}", -lam);
            }
        }
    }

    #[test]
    fn sin_two_theta_inner_field() {
        let eps = 0.3;
        let f = PerturbationField::single_mode(2, 1.0, true, INNER);
        let (m, _) = annulus_matrices(eps, &f, &PerturbationField::zero(OUTER)).unwrap();
        let c = AnnulusCoeffs::new(eps).unwrap();
        assert!(m.get(0, 0).abs() < 1e-15 && m.get(1, 1).abs() < 1e-15);
        assert!(close(m.get(0, 1), c.c1 * PI / 2.0, 1e-14));
        assert!(m.trace().abs() < 1e-12);
    }

    #[test]
    fn closed_form_matches_integrand_quadrature() {
        let fi = PerturbationField::new(0.4, vec![(0.2, 0.1), (0.7, -0.5), (0.0, 0.3)], INNER);
        let fo = PerturbationField::new(-0.2, vec![(0.0, 0.0), (-0.3, 0.6), (0.1, 0.0), (0.5, 0.5)], OUTER);
        for eps in [0.08, 0.2, 0.45] {
            let (m, mt) = annulus_matrices(eps, &fi, &fo).unwrap();
            let qi = annulus_matrix_by_quadrature(eps, &fi, 4 * (fi.max_mode() + 3)).unwrap();
            let qo = annulus_matrix_by_quadrature(eps, &fo, 4 * (fo.max_mode() + 3)).unwrap();
            assert_matrix_close(&m, &qi, 1e-12);
            assert_matrix_close(&mt, &qo, 1e-12);
        }
    }

    #[test]
    fn closed_form_matches_printed_entries() {
        let fi = PerturbationField::new(1.0, vec![(0.0, 0.0), (0.5, 0.25)], INNER);
        let fo = PerturbationField::new(0.3, vec![(0.0, 0.0), (-0.5, 0.1)], OUTER);
        let eps = 0.25;
        let (m, mt) = annulus_matrices(eps, &fi, &fo).unwrap();
        assert_matrix_close(&m, &printed_inner_matrix(eps, &fi).unwrap(), 1e-12);
        let (d1, d2) = printed_outer_diagonal(eps, &fo).unwrap();
        assert!(close(mt.get(0, 0), d1, 1e-12) && close(mt.get(1, 1), d2, 1e-12));
    }

    #[test]
    fn wrong_targets_are_rejected() {
        let f = PerturbationField::radial(1.0, OUTER);
        assert!(matches!(
            annulus_matrices(0.3, &f, &f),
            Err(ShapeDerivError::WrongTarget { .. })
        ));
        assert!(split_radial(0.3, &f).is_err());
        assert!(annulus_matrices(1.2, &PerturbationField::zero(INNER), &f).is_err());
    }

    #[test]
    fn split_radial_pieces() {
        let eps = 0.2;
        let (m_r, m_nr) = split_radial(eps, &PerturbationField::radial(0.5, INNER)).unwrap();
        assert_eq!(m_nr.max_abs(), 0.0);
        assert!(m_r.max_abs() > 0.0);
        let osc = PerturbationField::new(0.0, vec![(0.1, 0.2), (0.3, 0.4)], INNER);
        let (m_r, m_nr) = split_radial(eps, &osc).unwrap();
        assert_eq!(m_r.max_abs(), 0.0);
        assert!(m_nr.trace().abs() < 1e-12);

        let mixed = PerturbationField::new(1.0, vec![(0.0, 0.0), (1.0, 0.0)], INNER);
        let (m_r, m_nr) = split_radial(eps, &mixed).unwrap();
        let (m, _) = annulus_matrices(eps, &mixed, &PerturbationField::zero(OUTER)).unwrap();
        assert_matrix_close(&m_r.sum(&m_nr).unwrap(), &m, 1e-12);
        let sum_eigs = m.eigenvalues().unwrap();
        let nr_eigs = m_nr.eigenvalues().unwrap();
        for (s, n) in sum_eigs.iter().zip(&nr_eigs) {
            assert!(close(*s, m_r.get(0, 0) + n, 1e-12));
        }
    }

    #[test]
    fn perimeter_derivative_cases() {
        let eps = 0.3;
        let d = AnnularDomain::concentric(eps).unwrap();
        let k = 0.7;
        assert!(close(perimeter_derivative(&d, &PerturbationField::radial(k, INNER)).unwrap(), -TAU * k, 1e-14));
        assert!(close(perimeter_derivative(&d, &PerturbationField::radial(1.0, OUTER)).unwrap(), TAU, 1e-14));
        let osc = PerturbationField::new(0.0, vec![(0.3, 0.1), (0.2, 0.0)], INNER);
        assert!(perimeter_derivative(&d, &osc).unwrap().abs() < 1e-12);
        assert_eq!(perimeter_derivative(&d, &PerturbationField::zero(INNER)).unwrap(), 0.0);
    }

    #[test]
    fn perimeter_derivative_on_perturbed_curve_matches_difference() {
        let inner = BoundaryCurve::cosine_perturbed(0.05, 3, 0.3, crate::geometry::Point::ORIGIN, crate::geometry::Orientation::Inner).unwrap();
        let d = AnnularDomain::new(BoundaryCurve::unit_circle(), inner).unwrap();
        let f = PerturbationField::new(0.4, vec![(0.0, 0.1), (0.2, 0.0)], INNER);
        let k = perimeter_derivative(&d, &f).unwrap();
        let h = 1e-5;
        let len = |t: f64| arc_length_of(&DisplacedCurve::new(d.inner(), &f, t), 64).unwrap();
        let fd = (len(h) - len(-h)) / (2.0 * h);
        assert!(close(k, fd, 1e-7), "{k} vs {fd}");
    }

    #[test]
    fn normalized_derivative_scalar_cases() {
        let zero = ShapeDerivMatrix::from_2x2(0.0, 0.0, 0.0, MatrixContext::AnnulusInner { eps: 0.3 });
        let k = 0.6;
        let lam = 0.75;
        let r = normalized_derivative(&zero, 8.0, -TAU * k, lam).unwrap();
        for e in r.eigenvalues {
            assert!(close(e, -TAU * k * lam, 1e-14));
        }
    }

    #[test]
    fn radial_normalized_derivative_sign_and_zero() {
        let f = PerturbationField::radial(1.0, INNER);
        let below = annulus_normalized_derivative(0.1, &f).unwrap();
        assert!(below.eigenvalues[0] < 0.0);
        let above = annulus_normalized_derivative(0.3, &f).unwrap();
        assert!(above.eigenvalues[0] > 0.0);
        let eps0 = annulus::find_eps0().unwrap().root;
        let at = annulus_normalized_derivative(eps0, &f).unwrap();
        assert!(at.eigenvalues[0].abs() < 1e-6 && at.eigenvalues[1].abs() < 1e-6);
        for eps in [0.1, 0.2, 0.5] {
            let nd = annulus_normalized_derivative(eps, &f).unwrap();
            let want = -annulus::e_derivative(eps).unwrap();
            assert!(close(nd.eigenvalues[0], want, 1e-8 * want.abs().max(1.0)));
        }
    }

    #[test]
    fn report_csv_layout() {
        let rows = vec![
            report_row(0.3, &PerturbationField::radial(1.0, INNER), None).unwrap(),
            report_row(0.3, &PerturbationField::single_mode(2, 1.0, false, INNER), None).unwrap(),
        ];
        let mut out = Vec::new();
        write_report_csv(&mut out, &rows).unwrap();
        let text = String::from_utf8(out).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 3);
        assert!(lines.iter().all(|l| l.split(',').count() == 11));
    }

    #[test]
    fn fd_rejects_bad_step() {
        let d = AnnularDomain::concentric(0.3).unwrap();
        let f = PerturbationField::radial(1.0, INNER);
        assert_eq!(fd_branch_oracle(&d, &f, 0.0, FdConfig::default()), Err(ShapeDerivError::BadStep(0.0)));
    }

    #[test]
    fn fd_radial_coarse_matches_analytic() {
        let eps = 0.3;
        let d = AnnularDomain::concentric(eps).unwrap();
        let f = PerturbationField::radial(1.0, INNER);
        let cfg = FdConfig { n_theta: 128, n_r: 16, richardson: false };
        let fd = fd_branch_oracle(&d, &f, 1e-3, cfg).unwrap();
        let want = -annulus::lambda1_derivative(eps).unwrap();
        for v in fd.lambda {
            assert!(((v - want) / want).abs() < 0.03, "{v} vs {want}");
        }
    }

    fn mean_zero_field() -> impl Strategy<Value = PerturbationField> {
        prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 1..8)
            .prop_map(|modes| PerturbationField::new(0.0, modes, INNER))
    }

    proptest! {
        #[test]
        fn trace_law(f in mean_zero_field(), eps in 0.02f64..0.95) {
            let (_, m_nr) = split_radial(eps, &f).unwrap();
            prop_assert!(m_nr.trace().abs() <= 1e-12);
            prop_assert_eq!(m_nr.get(0, 1), m_nr.get(1, 0));
        }

        #[test]
        fn scalar_shift_law(f in mean_zero_field(), k in -2.0f64..2.0, eps in 0.05f64..0.9, p in 1.0f64..10.0) {
            let field = PerturbationField::new(k, f.modes().to_vec(), INNER);
            let (m, _) = annulus_matrices(eps, &field, &PerturbationField::zero(OUTER)).unwrap();
            let lam = annulus::lambda1(eps).unwrap();
            let kk = -TAU * k;
            let r = normalized_derivative(&m, p, kk, lam).unwrap();
            let base = m.eigenvalues().unwrap();
            for (e, b) in r.eigenvalues.iter().zip(&base) {
                let want = p * b + kk * lam;
                prop_assert!((e - want).abs() <= 1e-12 * (1.0 + want.abs()));
            }
        }

        #[test]
        fn ball_volume_preserving_trace(
            modes in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 1..8),
            r in 0.2f64..3.0,
            beta in -0.5f64..0.5,
        ) {
            let f = PerturbationField::new(0.0, modes, OUTER);
            let m = ball_matrix(2, r, beta, &f).unwrap();
            prop_assert!(m.trace().abs() <= 1e-12 * (1.0 + m.max_abs()));
        }

        #[test]
        fn coefficient_identity_everywhere(eps in 0.01f64..0.99) {
            let c = AnnulusCoeffs::new(eps).unwrap();
            prop_assert!((c.c1 - (c.c3 - c.c2)).abs() <= 1e-12 * (1.0 + c.c2.abs() + c.c3.abs()));
        }
    }
}
