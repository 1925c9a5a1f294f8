//! Acceptance checks, one PASS/FAIL line per criterion.
//!
//! Two criteria state a crossing of `E = 2π` at `(√13 − 3)/2`. The true
//! crossing is `(√17 − 3)/4`, so those checks print FAIL with the measured
//! values, and their literal statements live in ignored tests below.

use std::f64::consts::TAU;
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use steklov::annulus::{self, Branch};
use steklov::experiments::{self, ExperimentConfig, ExperimentId, ResultRow, CRITICAL_VALUE, PERTURBED_TABLE};
use steklov::fem;
use steklov::geometry::{AnnularDomain, FieldTarget, PerturbationField};
use steklov::mesher::RadialGrading;
use steklov::shape_deriv::{self, AnnulusCoeffs, FdConfig};

fn report(criterion: u32, passed: bool, detail: &str) {
    println!("criterion {criterion}: {} ({detail})", if passed { "PASS" } else { "FAIL" });
}

fn printed_crossing() -> f64 {
    (13f64.sqrt() - 3.0) / 2.0
}

fn open_grid(lo: f64, hi: f64, n: usize) -> impl Iterator<Item = f64> {
    (1..=n).map(move |i| lo + (hi - lo) * i as f64 / (n + 1) as f64)
}

#[test]
fn criterion_1_closed_form_consistency() {
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    for eps in open_grid(0.01, 0.99, 1000) {
        let general = annulus::steklov_eig(eps, 1, Branch::Minus).unwrap() * TAU * (1.0 + eps);
        let e = annulus::e_value(eps).unwrap();
        worst = worst.max((general - e).abs());
    }
    let printed = annulus::e_value(printed_crossing()).unwrap();
    let corrected = annulus::e_value(annulus::eps2()).unwrap();
    let elapsed = start.elapsed();

    let grid_ok = worst <= 1e-12;
    let printed_ok = (printed - TAU).abs() <= 1e-10;
    let corrected_ok = (corrected - TAU).abs() <= 1e-10;
    report(
        1,
        grid_ok && printed_ok && elapsed < Duration::from_secs(1),
        &format!(
            "grid max |diff| = {worst:.2e}; E((√13−3)/2) = {printed:.10} vs 2π = {TAU:.10}; \
             E((√17−3)/4) − 2π = {:.2e}; {elapsed:?}",
            corrected - TAU
        ),
    );
    assert!(grid_ok, "{worst}");
    assert!(corrected_ok, "{corrected}");
    assert!(elapsed < Duration::from_secs(1));
}

#[test]
#[ignore = "E((√13−3)/2) = 6.1098; the crossing of 2π is at (√17−3)/4"]
fn criterion_1_literal_crossing_at_printed_radius() {
    let e = annulus::e_value(printed_crossing()).unwrap();
    assert!((e - TAU).abs() <= 1e-10, "E = {e}");
}

#[test]
fn criterion_2_critical_radius() {
    let start = Instant::now();
    let r = annulus::find_eps0().unwrap();
    let elapsed = start.elapsed();
    let e0 = annulus::e_value(r.root).unwrap();
    let de = annulus::e_derivative(r.root).unwrap();
    let ok = (r.root - 0.146721).abs() <= 5e-6
        && (r.root - r.argmax).abs() <= 1e-6
        && de.abs() <= 1e-5 * e0
        && elapsed < Duration::from_secs(1);
    report(
        2,
        ok,
        &format!(
            "root {:.10}, argmax {:.10}, dE/dε {de:.2e}, Π(root) {:.1e}, {elapsed:?}",
            r.root, r.argmax, r.pi_at_root
        ),
    );
    assert!(ok);
}

#[test]
fn criterion_3_fem_matches_closed_form() {
    let mut ok = true;
    let mut details = Vec::new();
    for eps in [0.08, 0.146721, 0.3, 0.5] {
        let start = Instant::now();
        let domain = AnnularDomain::concentric(eps).unwrap();
        let s = fem::solve_domain(&domain, 512, 48, RadialGrading::auto(&domain), 3).unwrap();
        let elapsed = start.elapsed();
        let exact = annulus::steklov_eig(eps, 1, Branch::Minus).unwrap();
        let rel = (s.eigenvalues[1] - exact).abs() / exact;
        let gap = (s.eigenvalues[2] - s.eigenvalues[1]).abs() / s.eigenvalues[1];
        ok &= rel <= 5e-3 && gap < 1e-3 && elapsed < Duration::from_secs(30);
        details.push(format!("ε={eps}: rel {rel:.1e}, gap {gap:.1e}, {:.1}s", elapsed.as_secs_f64()));
    }
    report(3, ok, &details.join("; "));
    assert!(ok);
}

struct TableRun {
    translations: Vec<ResultRow>,
    perturbed: Vec<ResultRow>,
    elapsed: Duration,
}

fn tables() -> &'static TableRun {
    static RUN: OnceLock<TableRun> = OnceLock::new();
    RUN.get_or_init(|| {
        let start = Instant::now();
        let config = ExperimentConfig::new(ExperimentId::Table(1));
        let mut translations = Vec::new();
        for n in 1..=6 {
            translations.extend(experiments::run_translation_table(n, &config).unwrap());
        }
        let ks: Vec<u32> = PERTURBED_TABLE.iter().map(|r| r.0).collect();
        let perturbed = experiments::run_perturbed_table(&ks, &config).unwrap();
        TableRun { translations, perturbed, elapsed: start.elapsed() }
    })
}

#[test]
fn criterion_4_table_reproduction() {
    let run = tables();
    let worst_translation = run.translations.iter().filter_map(|r| r.deviation).fold(0.0, f64::max);
    let translations_ok = run.translations.iter().all(|r| r.deviation.is_some_and(|d| d <= 0.03));
    let anchor = run
        .translations
        .iter()
        .find(|r| r.experiment == "table2" && r.domain.ends_with("(0, 0)"))
        .unwrap();
    let anchor_ok = anchor.deviation.unwrap() <= 0.02;
    let perturbed_ok = run
        .perturbed
        .iter()
        .all(|r| r.deviation.is_some_and(|d| d <= 0.05) && r.computed < CRITICAL_VALUE);
    let worst_perturbed = run.perturbed.iter().filter_map(|r| r.deviation).fold(0.0, f64::max);
    let ok = translations_ok && anchor_ok && perturbed_ok && run.elapsed < Duration::from_secs(20 * 60);
    report(
        4,
        ok,
        &format!(
            "{} translation values, max dev {worst_translation:.4}; anchor {:.4}; {} perturbed, max dev {worst_perturbed:.4}; {:.0}s",
            run.translations.len(),
            anchor.computed,
            run.perturbed.len(),
            run.elapsed.as_secs_f64()
        ),
    );
    for r in run.translations.iter().chain(&run.perturbed) {
        assert!(r.passed, "{r:?}");
    }
    assert!(ok);
}

#[test]
fn criterion_5_shape_derivative_triangle() {
    let start = Instant::now();
    let eps0 = annulus::find_eps0().unwrap().root;
    let mut ok = true;
    let mut details = Vec::new();
    for eps in [0.1, eps0, 0.3] {
        let row = shape_deriv::consistency_triangle(eps, 1e-3, FdConfig::default()).unwrap();
        let critical = eps == eps0;
        let passed = row.passes(0.02, 1e-3, critical);
        ok &= passed;
        details.push(if critical {
            format!("ε₀: max |value| {:.1e}", row.max_abs())
        } else {
            format!("ε={eps}: max rel {:.1e}", row.max_relative_mismatch())
        });
    }
    let elapsed = start.elapsed();
    ok &= elapsed < Duration::from_secs(600);
    report(5, ok, &format!("{}; {:.0}s", details.join("; "), elapsed.as_secs_f64()));
    assert!(ok);
}

fn random_mean_zero(rng: &mut ChaCha8Rng, target: FieldTarget) -> PerturbationField {
    let n = rng.gen_range(1..=10);
    let modes = (0..n).map(|_| (rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
    PerturbationField::new(0.0, modes, target)
}

/// `δ_jk (1 − β/R) ∫V dσ /(πR³) − 3 ∫V x_j x_k dσ /(πR⁵)` by the trapezoid rule.
fn ball_by_quadrature(r: f64, beta: f64, f: &PerturbationField, n: usize) -> [[f64; 2]; 2] {
    let w = TAU / n as f64;
    let (mut int_v, mut m) = (0.0, [[0.0; 2]; 2]);
    for i in 0..n {
        let t = w * i as f64;
        let v = f.eval(t) * r * w;
        let x = [r * t.cos(), r * t.sin()];
        int_v += v;
        for j in 0..2 {
            for k in 0..2 {
                m[j][k] += v * x[j] * x[k];
            }
        }
    }
    let pi = std::f64::consts::PI;
    let mut out = [[0.0; 2]; 2];
    for j in 0..2 {
        for k in 0..2 {
            let diag = if j == k { (1.0 - beta / r) * int_v / (pi * r.powi(3)) } else { 0.0 };
            out[j][k] = diag - 3.0 * m[j][k] / (pi * r.powi(5));
        }
    }
    out
}

#[test]
fn criterion_6_matrix_properties() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst_trace: f64 = 0.0;
    for _ in 0..50 {
        let f = random_mean_zero(&mut rng, FieldTarget::InnerBoundary);
        let eps = rng.gen_range(0.02..0.95);
        let (_, m_nr) = shape_deriv::split_radial(eps, &f).unwrap();
        worst_trace = worst_trace.max(m_nr.trace().abs());
    }

    // volume preserving and orthogonal to cos 2θ, sin 2θ
    let mut worst_ball: f64 = 0.0;
    let mut worst_ball_trace: f64 = 0.0;
    for _ in 0..50 {
        let mut f = random_mean_zero(&mut rng, FieldTarget::OuterBoundary);
        let (r, beta) = (rng.gen_range(0.2..3.0), rng.gen_range(-0.5..0.5));
        worst_ball_trace = worst_ball_trace.max(shape_deriv::ball_matrix(2, r, beta, &f).unwrap().trace().abs());
        let mut modes = f.modes().to_vec();
        if modes.len() >= 2 {
            modes[1] = (0.0, 0.0);
        }
        f = PerturbationField::new(0.0, modes, FieldTarget::OuterBoundary);
        worst_ball = worst_ball.max(shape_deriv::ball_matrix(2, r, beta, &f).unwrap().max_abs());
    }

    // moment shortcut against trapezoidal quadrature of the ball formula
    let mut worst_quad: f64 = 0.0;
    for _ in 0..20 {
        let raw = random_mean_zero(&mut rng, FieldTarget::OuterBoundary);
        let f = PerturbationField::new(rng.gen_range(-1.0..1.0), raw.modes().to_vec(), FieldTarget::OuterBoundary);
        let (r, beta) = (rng.gen_range(0.2..3.0), rng.gen_range(-0.5..0.5));
        let m = shape_deriv::ball_matrix(2, r, beta, &f).unwrap();
        let q = ball_by_quadrature(r, beta, &f, 4 * (f.max_mode() + 3));
        for j in 0..2 {
            for k in 0..2 {
                worst_quad = worst_quad.max((m.get(j, k) - q[j][k]).abs() / (1.0 + q[j][k].abs()));
            }
        }
    }

    let mut worst_c: f64 = 0.0;
    for eps in open_grid(0.0, 1.0, 99) {
        let c = AnnulusCoeffs::new(eps).unwrap();
        worst_c = worst_c.max((c.c1 - (c.c3 - c.c2)).abs());
    }
    let elapsed = start.elapsed();
    let ok = worst_trace <= 1e-12
        && worst_ball <= 1e-12
        && worst_quad <= 1e-12
        && worst_ball_trace <= 1e-12
        && worst_c <= 1e-12
        && elapsed < Duration::from_secs(10);
    report(
        6,
        ok,
        &format!(
            "tr(M_NR) {worst_trace:.1e}, ball max {worst_ball:.1e}, ball vs quadrature {worst_quad:.1e}, ball trace {worst_ball_trace:.1e}, \
             C₁−(C₃−C₂) {worst_c:.1e}, {elapsed:?}"
        ),
    );
    assert!(ok);
}

#[test]
fn criterion_7_weinstock_failure_range() {
    let start = Instant::now();
    let below: Vec<f64> = open_grid(0.005, 0.30, 100)
        .filter(|&e| annulus::e_value(e).unwrap() <= TAU)
        .collect();
    let crossing = annulus::eps2();
    let corrected_ok = open_grid(0.005, crossing, 100).all(|e| annulus::e_value(e).unwrap() > TAU);
    let elapsed = start.elapsed();
    report(
        7,
        below.is_empty() && elapsed < Duration::from_secs(1),
        &format!(
            "{} of 100 points in (0.005, 0.30) have E ≤ 2π, all beyond the crossing {crossing:.8}; \
             E > 2π on (0.005, {crossing:.8}): {corrected_ok}; {elapsed:?}",
            below.len()
        ),
    );
    assert!(corrected_ok);
    assert!(below.iter().all(|&e| e > crossing));
}

#[test]
#[ignore = "E < 2π on ((√17−3)/4, 0.30]"]
fn criterion_7_literal_range_up_to_0_30() {
    for eps in open_grid(0.005, 0.30, 100) {
        assert!(annulus::e_value(eps).unwrap() > TAU, "E({eps}) = {}", annulus::e_value(eps).unwrap());
    }
}

#[test]
fn criterion_8_local_dominance_of_concentric_annulus() {
    let run = tables();
    let mut ok = true;
    for n in 1..=6 {
        let name = format!("table{n}");
        let rows: Vec<&ResultRow> = run.translations.iter().filter(|r| r.experiment == name).collect();
        let centered = rows.iter().find(|r| r.domain.ends_with("(0, 0)")).unwrap().computed;
        ok &= rows.iter().all(|r| r.computed <= centered + 1e-9);
        // reflection symmetry
        for i in 0..4 {
            ok &= (rows[i].computed - rows[8 - i].computed).abs() < 1e-6;
        }
    }
    let concentric = annulus::e_value(annulus::find_eps0().unwrap().root).unwrap();
    ok &= run.perturbed.iter().all(|r| r.computed < concentric);
    // radial criticality at ε₀
    let f = PerturbationField::radial(1.0, FieldTarget::InnerBoundary);
    let nd = shape_deriv::annulus_normalized_derivative(annulus::find_eps0().unwrap().root, &f).unwrap();
    ok &= nd.eigenvalues.iter().all(|v| v.abs() < 1e-6);
    report(
        8,
        ok,
        "global maximality is a conjecture; checked: centred circle dominates every translation, \
         perturbed holes stay below E(ε₀), radial derivative vanishes at ε₀",
    );
    assert!(ok);
}
