//! Parametric boundary curves for planar domains with one hole.
//!
//! Every curve is a star-shaped polar graph `c + r(θ)(cos θ, sin θ)` traversed
//! counterclockwise in θ. The [`Orientation`] of a curve says on which side of
//! it the annular domain lies, which fixes the sign of the outward normal and
//! of the mean curvature `H = Δb` (positive on the outer boundary, negative on
//! the inner one).

use std::f64::consts::{PI, TAU};
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("radius must be positive, got {0}")]
    NonPositiveRadius(f64),
    #[error("perturbed circle needs b - |a| > 0 (a = {a}, b = {b})")]
    NonPositivePolarRadius { a: f64, b: f64 },
    #[error("frequency k must be positive")]
    ZeroFrequency,
    #[error("degenerate tangent at θ = {theta}")]
    DegenerateTangent { theta: f64 },
    #[error("arc length quadrature did not converge after {0} refinements")]
    ArcLengthNotConverged(usize),
    #[error("no real amplitude: 2(ε - b²) = {0} is negative")]
    NegativeDiscriminant(f64),
    #[error("expected an outer curve as first argument and an inner curve as second")]
    WrongOrientation,
    #[error("inner curve is not strictly inside the outer curve (min gap {gap:.3e} at θ = {theta:.6})")]
    CurvesNotNested { gap: f64, theta: f64 },
    #[error("need at least {needed} samples for {modes} Fourier modes, got {got}")]
    TooFewSamples { needed: usize, got: usize, modes: usize },
    #[error("cannot parse curve record: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, GeometryError>;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const ORIGIN: Point = Point { x: 0.0, y: 0.0 };

    pub const fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn dot(self, other: Point) -> f64 {
        self.x * other.x + self.y * other.y
    }

    pub fn cross(self, other: Point) -> f64 {
        self.x * other.y - self.y * other.x
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn scale(self, s: f64) -> Point {
        Point::new(self.x * s, self.y * s)
    }

    pub fn dist(self, other: Point) -> f64 {
        (self - other).norm()
    }

    /// Counterclockwise rotation by a right angle.
    pub fn perp(self) -> Point {
        Point::new(-self.y, self.x)
    }
}

impl std::ops::Add for Point {
    type Output = Point;
    fn add(self, o: Point) -> Point {
        Point::new(self.x + o.x, self.y + o.y)
    }
}

impl std::ops::Sub for Point {
    type Output = Point;
    fn sub(self, o: Point) -> Point {
        Point::new(self.x - o.x, self.y - o.y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Orientation {
    Outer,
    Inner,
}

impl Orientation {
    /// +1 when the domain lies inside the curve, -1 when it lies outside.
    pub fn sign(self) -> f64 {
        match self {
            Orientation::Outer => 1.0,
            Orientation::Inner => -1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CurveKind {
    Circle { center: Point, radius: f64 },
    /// `r(θ) = a cos(kθ) + b` around `center`.
    CosinePerturbedCircle { a: f64, k: u32, b: f64, center: Point },
}

/// Anything that can be meshed: a closed counterclockwise curve on `[0, 2π)`.
pub trait ClosedCurve {
    fn point(&self, theta: f64) -> Point;
    /// First derivative with respect to the parameter.
    fn velocity(&self, theta: f64) -> Point;
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryCurve {
    kind: CurveKind,
    orientation: Orientation,
}

impl BoundaryCurve {
    pub fn new(kind: CurveKind, orientation: Orientation) -> Result<Self> {
        match kind {
            CurveKind::Circle { radius, .. } => {
                if !(radius > 0.0) {
                    return Err(GeometryError::NonPositiveRadius(radius));
                }
            }
            CurveKind::CosinePerturbedCircle { a, k, b, .. } => {
                if k == 0 {
                    return Err(GeometryError::ZeroFrequency);
                }
                if !(b - a.abs() > 0.0) {
                    return Err(GeometryError::NonPositivePolarRadius { a, b });
                }
            }
        }
        Ok(BoundaryCurve { kind, orientation })
    }

    pub fn circle(center: Point, radius: f64, orientation: Orientation) -> Result<Self> {
        Self::new(CurveKind::Circle { center, radius }, orientation)
    }

    pub fn cosine_perturbed(
        a: f64,
        k: u32,
        b: f64,
        center: Point,
        orientation: Orientation,
    ) -> Result<Self> {
        Self::new(CurveKind::CosinePerturbedCircle { a, k, b, center }, orientation)
    }

    pub fn unit_circle() -> Self {
        BoundaryCurve {
            kind: CurveKind::Circle { center: Point::ORIGIN, radius: 1.0 },
            orientation: Orientation::Outer,
        }
    }

    pub fn kind(&self) -> CurveKind {
        self.kind
    }

    pub fn orientation(&self) -> Orientation {
        self.orientation
    }

    pub fn center(&self) -> Point {
        match self.kind {
            CurveKind::Circle { center, .. } | CurveKind::CosinePerturbedCircle { center, .. } => {
                center
            }
        }
    }

    /// Typical radius: the circle radius or the offset `b`.
    pub fn nominal_radius(&self) -> f64 {
        match self.kind {
            CurveKind::Circle { radius, .. } => radius,
            CurveKind::CosinePerturbedCircle { b, .. } => b,
        }
    }

    /// Polar radius and its first two θ-derivatives.
    fn polar(&self, theta: f64) -> (f64, f64, f64) {
        match self.kind {
            CurveKind::Circle { radius, .. } => (radius, 0.0, 0.0),
            CurveKind::CosinePerturbedCircle { a, k, b, .. } => {
                let k = k as f64;
                let (s, c) = (k * theta).sin_cos();
                (a * c + b, -a * k * s, -a * k * k * c)
            }
        }
    }

    pub fn polar_radius(&self, theta: f64) -> f64 {
        self.polar(theta).0
    }

    pub fn point_at(&self, theta: f64) -> Point {
        let theta = theta.rem_euclid(TAU);
        let (r, _, _) = self.polar(theta);
        let (s, c) = theta.sin_cos();
        self.center() + Point::new(r * c, r * s)
    }

    pub fn velocity_at(&self, theta: f64) -> Point {
        let (r, dr, _) = self.polar(theta);
        let (s, c) = theta.sin_cos();
        Point::new(dr * c - r * s, dr * s + r * c)
    }

    pub fn acceleration_at(&self, theta: f64) -> Point {
        let (r, dr, d2r) = self.polar(theta);
        let (s, c) = theta.sin_cos();
        let radial = d2r - r;
        Point::new(radial * c - 2.0 * dr * s, radial * s + 2.0 * dr * c)
    }

    /// Unit normal pointing out of the annular domain.
    pub fn outward_normal_at(&self, theta: f64) -> Result<Point> {
        let v = self.velocity_at(theta);
        let speed = v.norm();
        if speed < 1e-14 {
            return Err(GeometryError::DegenerateTangent { theta });
        }
        // right-hand normal of a counterclockwise curve points away from its interior
        let n = Point::new(v.y, -v.x).scale(1.0 / speed);
        Ok(n.scale(self.orientation.sign()))
    }

    /// Mean curvature `H = Δb`, signed so that H = 1/R on an outer circle and
    /// H = -1/ε on an inner circle of radius ε.
    pub fn curvature_at(&self, theta: f64) -> Result<f64> {
        let v = self.velocity_at(theta);
        let speed = v.norm();
        if speed < 1e-14 {
            return Err(GeometryError::DegenerateTangent { theta });
        }
        let a = self.acceleration_at(theta);
        Ok(self.orientation.sign() * v.cross(a) / speed.powi(3))
    }

    pub fn arc_length(&self) -> Result<f64> {
        let min_panels = match self.kind {
            CurveKind::Circle { .. } => 4,
            CurveKind::CosinePerturbedCircle { k, .. } => 4 * k as usize,
        };
        arc_length_of(self, min_panels)
    }
}

impl ClosedCurve for BoundaryCurve {
    fn point(&self, theta: f64) -> Point {
        self.point_at(theta)
    }

    fn velocity(&self, theta: f64) -> Point {
        self.velocity_at(theta)
    }
}

impl fmt::Display for BoundaryCurve {
    /// `kind=circle center=x,y radius=r orientation=inner`
    /// or `kind=cosine center=x,y a=.. k=.. b=.. orientation=inner`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let orient = match self.orientation {
            Orientation::Outer => "outer",
            Orientation::Inner => "inner",
        };
        match self.kind {
            CurveKind::Circle { center, radius } => write!(
                f,
                "kind=circle center={},{} radius={} orientation={}",
                center.x, center.y, radius, orient
            ),
            CurveKind::CosinePerturbedCircle { a, k, b, center } => write!(
                f,
                "kind=cosine center={},{} a={} k={} b={} orientation={}",
                center.x, center.y, a, k, b, orient
            ),
        }
    }
}

impl FromStr for BoundaryCurve {
    type Err = GeometryError;

    fn from_str(s: &str) -> Result<Self> {
        let mut kind = None;
        let mut center = Point::ORIGIN;
        let (mut radius, mut a, mut k, mut b) = (None, None, None, None);
        let mut orientation = None;
        let bad = |msg: String| GeometryError::Parse(msg);
        let num = |key: &str, v: &str| -> Result<f64> {
            v.parse::<f64>().map_err(|_| bad(format!("{key}: not a number: {v}")))
        };
        for token in s.split_whitespace() {
            let (key, value) =
                token.split_once('=').ok_or_else(|| bad(format!("expected key=value, got {token}")))?;
            match key {
                "kind" => kind = Some(value.to_string()),
                "center" => {
                    let (x, y) =
                        value.split_once(',').ok_or_else(|| bad(format!("center: {value}")))?;
                    center = Point::new(num("center", x)?, num("center", y)?);
                }
                "radius" => radius = Some(num(key, value)?),
                "a" => a = Some(num(key, value)?),
                "b" => b = Some(num(key, value)?),
                "k" => {
                    k = Some(value.parse::<u32>().map_err(|_| bad(format!("k: {value}")))?)
                }
                "orientation" => {
                    orientation = Some(match value {
                        "outer" => Orientation::Outer,
                        "inner" => Orientation::Inner,
                        other => return Err(bad(format!("orientation: {other}"))),
                    })
                }
                other => return Err(bad(format!("unknown key {other}"))),
            }
        }
        let orientation = orientation.ok_or_else(|| bad("missing orientation".into()))?;
        match kind.as_deref() {
            Some("circle") => {
                let radius = radius.ok_or_else(|| bad("missing radius".into()))?;
                BoundaryCurve::circle(center, radius, orientation)
            }
            Some("cosine") => {
                let a = a.ok_or_else(|| bad("missing a".into()))?;
                let k = k.ok_or_else(|| bad("missing k".into()))?;
                let b = b.ok_or_else(|| bad("missing b".into()))?;
                BoundaryCurve::cosine_perturbed(a, k, b, center, orientation)
            }
            Some(other) => Err(bad(format!("unknown kind {other}"))),
            None => Err(bad("missing kind".into())),
        }
    }
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`, by Newton iteration on `P_n`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for j in 2..=n {
                let j = j as f64;
                let p2 = ((2.0 * j - 1.0) * x * p1 - (j - 1.0) * p0) / j;
                p0 = p1;
                p1 = p2;
            }
            if n == 1 {
                p0 = 1.0;
                p1 = x;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

const GL_ORDER: usize = 16;
const MAX_REFINEMENTS: usize = 14;

/// Composite Gauss–Legendre integral of `f` over `[0, 2π]`, doubling the number
/// of panels until two successive values agree to relative 1e-12.
pub fn integrate_periodic<F: Fn(f64) -> f64>(f: F, min_panels: usize) -> Result<f64> {
    let (nodes, weights) = gauss_legendre(GL_ORDER);
    let rule = |panels: usize| -> f64 {
        let h = TAU / panels as f64;
        let mut total = 0.0;
        for p in 0..panels {
            let mid = (p as f64 + 0.5) * h;
            let panel: f64 =
                nodes.iter().zip(&weights).map(|(x, w)| w * f(mid + 0.5 * h * x)).sum();
            total += 0.5 * h * panel;
        }
        total
    };
    let mut panels = min_panels.max(1);
    let mut prev = rule(panels);
    for _ in 0..MAX_REFINEMENTS {
        panels *= 2;
        let next = rule(panels);
        if (next - prev).abs() <= 1e-12 * next.abs().max(1e-300) {
            return Ok(next);
        }
        prev = next;
    }
    Err(GeometryError::ArcLengthNotConverged(MAX_REFINEMENTS))
}

pub fn arc_length_of<C: ClosedCurve + ?Sized>(curve: &C, min_panels: usize) -> Result<f64> {
    integrate_periodic(|t| curve.velocity(t).norm(), min_panels)
}

/// The closed-form length surrogate `a²π + 2πb² + a²k²π` for `r = a cos kθ + b`.
///
/// This is `∫(r² + r'²) dθ`, not the arc length `∫√(r² + r'²) dθ`; see
/// [`BoundaryCurve::arc_length`] for the latter.
pub fn surrogate_length(a: f64, b: f64, k: u32) -> f64 {
    let k = k as f64;
    a * a * PI + 2.0 * PI * b * b + a * a * k * k * PI
}

/// Positive amplitude `a` with `surrogate_length(a, b, k) = 2πε`.
pub fn amplitude_for_perimeter(k: u32, eps: f64, b: f64) -> Result<f64> {
    let disc = 2.0 * (eps - b * b);
    if disc < 0.0 {
        return Err(GeometryError::NegativeDiscriminant(disc));
    }
    let k = k as f64;
    Ok((disc / (1.0 + k * k)).sqrt())
}

/// Which boundary component a perturbation field moves.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FieldTarget {
    InnerBoundary,
    OuterBoundary,
}

/// Normal velocity `V_n(θ) = ω_r + ω_l(θ)` on one boundary component, with
/// `ω_l` a mean-zero trigonometric polynomial.
#[derive(Debug, Clone, PartialEq)]
pub struct PerturbationField {
    radial: f64,
    /// `(cos, sin)` coefficients of modes `1..=modes.len()`.
    modes: Vec<(f64, f64)>,
    target: FieldTarget,
}

impl PerturbationField {
    pub fn new(radial: f64, modes: Vec<(f64, f64)>, target: FieldTarget) -> Self {
        let mut modes = modes;
        while modes.last().is_some_and(|&(c, s)| c == 0.0 && s == 0.0) {
            modes.pop();
        }
        PerturbationField { radial, modes, target }
    }

    pub fn zero(target: FieldTarget) -> Self {
        Self::new(0.0, Vec::new(), target)
    }

    pub fn radial(k: f64, target: FieldTarget) -> Self {
        Self::new(k, Vec::new(), target)
    }

    /// `amp · cos(mθ)` or `amp · sin(mθ)` (with `sine = true`).
    pub fn single_mode(m: usize, amp: f64, sine: bool, target: FieldTarget) -> Self {
        assert!(m >= 1, "mode index starts at 1");
        let mut modes = vec![(0.0, 0.0); m];
        modes[m - 1] = if sine { (0.0, amp) } else { (amp, 0.0) };
        Self::new(0.0, modes, target)
    }

    pub fn radial_part(&self) -> f64 {
        self.radial
    }

    pub fn modes(&self) -> &[(f64, f64)] {
        &self.modes
    }

    pub fn max_mode(&self) -> usize {
        self.modes.len()
    }

    pub fn target(&self) -> FieldTarget {
        self.target
    }

    /// Cosine and sine coefficients of mode `m` (`m = 0` gives `(ω_r, 0)`).
    pub fn coefficient(&self, m: usize) -> (f64, f64) {
        if m == 0 {
            (self.radial, 0.0)
        } else {
            self.modes.get(m - 1).copied().unwrap_or((0.0, 0.0))
        }
    }

    pub fn oscillatory_at(&self, theta: f64) -> f64 {
        self.modes
            .iter()
            .enumerate()
            .map(|(i, &(c, s))| {
                let (sn, cs) = ((i + 1) as f64 * theta).sin_cos();
                c * cs + s * sn
            })
            .sum()
    }

    pub fn eval(&self, theta: f64) -> f64 {
        self.radial + self.oscillatory_at(theta)
    }

    pub fn derivative(&self, theta: f64) -> f64 {
        self.modes
            .iter()
            .enumerate()
            .map(|(i, &(c, s))| {
                let m = (i + 1) as f64;
                let (sn, cs) = (m * theta).sin_cos();
                m * (s * cs - c * sn)
            })
            .sum()
    }

    /// The constant part alone.
    pub fn radial_component(&self) -> PerturbationField {
        Self::new(self.radial, Vec::new(), self.target)
    }

    /// The length-preserving part alone.
    pub fn oscillatory_component(&self) -> PerturbationField {
        Self::new(0.0, self.modes.clone(), self.target)
    }

    pub fn scaled(&self, s: f64) -> PerturbationField {
        Self::new(
            self.radial * s,
            self.modes.iter().map(|&(c, sn)| (c * s, sn * s)).collect(),
            self.target,
        )
    }

    pub fn describe(&self) -> String {
        let mut parts = Vec::new();
        if self.radial != 0.0 || self.modes.is_empty() {
            parts.push(format!("{}", self.radial));
        }
        for (i, &(c, s)) in self.modes.iter().enumerate() {
            let m = i + 1;
            if c != 0.0 {
                parts.push(format!("{c}cos{m}t"));
            }
            if s != 0.0 {
                parts.push(format!("{s}sin{m}t"));
            }
        }
        parts.join("+")
    }
}

/// Splits samples of `V_n` on the uniform grid `θ_i = 2πi/N` into its mean and
/// Fourier modes `1..=modes`.
pub fn decompose_field(
    samples: &[f64],
    modes: usize,
    target: FieldTarget,
) -> Result<PerturbationField> {
    let n = samples.len();
    let needed = 2 * modes + 2;
    if n < needed {
        return Err(GeometryError::TooFewSamples { needed, got: n, modes });
    }
    let nf = n as f64;
    let mean = samples.iter().sum::<f64>() / nf;
    let coeffs = (1..=modes)
        .map(|m| {
            let (mut c, mut s) = (0.0, 0.0);
            for (i, v) in samples.iter().enumerate() {
                let (sn, cs) = (TAU * (m * i % n) as f64 / nf).sin_cos();
                c += (v - mean) * cs;
                s += (v - mean) * sn;
            }
            (2.0 * c / nf, 2.0 * s / nf)
        })
        .collect();
    Ok(PerturbationField::new(mean, coeffs, target))
}

/// A boundary curve moved along its outward normal: `x(θ) + t V_n(θ) n(θ)`.
#[derive(Debug, Clone)]
pub struct DisplacedCurve<'a> {
    base: &'a BoundaryCurve,
    field: &'a PerturbationField,
    t: f64,
}

impl<'a> DisplacedCurve<'a> {
    pub fn new(base: &'a BoundaryCurve, field: &'a PerturbationField, t: f64) -> Self {
        DisplacedCurve { base, field, t }
    }

    fn unit_normal_and_derivative(&self, theta: f64) -> (Point, Point) {
        let v = self.base.velocity_at(theta);
        let a = self.base.acceleration_at(theta);
        let speed = v.norm();
        let sign = self.base.orientation().sign();
        // d/dθ (v/|v|) = (a |v|² - v (v·a)) / |v|³
        let dtan = (a.scale(speed * speed) - v.scale(v.dot(a))).scale(1.0 / speed.powi(3));
        let tan = v.scale(1.0 / speed);
        let n = Point::new(tan.y, -tan.x).scale(sign);
        let dn = Point::new(dtan.y, -dtan.x).scale(sign);
        (n, dn)
    }
}

impl ClosedCurve for DisplacedCurve<'_> {
    fn point(&self, theta: f64) -> Point {
        let (n, _) = self.unit_normal_and_derivative(theta);
        self.base.point_at(theta) + n.scale(self.t * self.field.eval(theta))
    }

    fn velocity(&self, theta: f64) -> Point {
        let (n, dn) = self.unit_normal_and_derivative(theta);
        let v = self.field.eval(theta);
        let dv = self.field.derivative(theta);
        self.base.velocity_at(theta) + n.scale(self.t * dv) + dn.scale(self.t * v)
    }
}

/// Region between an outer and an inner boundary curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnnularDomain {
    outer: BoundaryCurve,
    inner: BoundaryCurve,
}

const NESTING_GRID: usize = 4096;

impl AnnularDomain {
    pub fn new(outer: BoundaryCurve, inner: BoundaryCurve) -> Result<Self> {
        if outer.orientation() != Orientation::Outer || inner.orientation() != Orientation::Inner {
            return Err(GeometryError::WrongOrientation);
        }
        let (gap, theta) = nesting_gap(&outer, &inner);
        if !(gap > 0.0) {
            return Err(GeometryError::CurvesNotNested { gap, theta });
        }
        Ok(AnnularDomain { outer, inner })
    }

    /// Unit disk minus a disk of radius `eps` centred at `center`.
    pub fn disk_with_hole(center: Point, eps: f64) -> Result<Self> {
        Self::new(BoundaryCurve::unit_circle(), BoundaryCurve::circle(center, eps, Orientation::Inner)?)
    }

    pub fn concentric(eps: f64) -> Result<Self> {
        Self::disk_with_hole(Point::ORIGIN, eps)
    }

    pub fn outer(&self) -> &BoundaryCurve {
        &self.outer
    }

    pub fn inner(&self) -> &BoundaryCurve {
        &self.inner
    }

    pub fn curve(&self, target: FieldTarget) -> &BoundaryCurve {
        match target {
            FieldTarget::InnerBoundary => &self.inner,
            FieldTarget::OuterBoundary => &self.outer,
        }
    }

    pub fn perimeter(&self) -> Result<f64> {
        Ok(self.outer.arc_length()? + self.inner.arc_length()?)
    }

    pub fn translated(&self, shift: Point) -> Self {
        let move_curve = |c: &BoundaryCurve| {
            let kind = match c.kind {
                CurveKind::Circle { center, radius } => {
                    CurveKind::Circle { center: center + shift, radius }
                }
                CurveKind::CosinePerturbedCircle { a, k, b, center } => {
                    CurveKind::CosinePerturbedCircle { a, k, b, center: center + shift }
                }
            };
            BoundaryCurve { kind, orientation: c.orientation }
        };
        AnnularDomain { outer: move_curve(&self.outer), inner: move_curve(&self.inner) }
    }
}

/// Smallest distance from inner-curve samples to the outer curve, measured
/// along rays from the outer centre; negative when a sample escapes.
fn nesting_gap(outer: &BoundaryCurve, inner: &BoundaryCurve) -> (f64, f64) {
    let oc = outer.center();
    let mut worst = (f64::INFINITY, 0.0);
    for i in 0..NESTING_GRID {
        let theta = TAU * i as f64 / NESTING_GRID as f64;
        let p = inner.point_at(theta) - oc;
        let phi = p.y.atan2(p.x);
        // outer is star-shaped about its own centre
        let gap = outer.polar_radius(phi.rem_euclid(TAU)) - p.norm();
        if gap < worst.0 {
            worst = (gap, theta);
        }
    }
    worst
}
