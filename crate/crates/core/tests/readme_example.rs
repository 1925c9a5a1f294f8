use steklov::geometry::{AnnularDomain, Point};
use steklov::{annulus, fem};

#[test]
fn translated_hole_value() {
    let domain = AnnularDomain::disk_with_hole(Point::new(0.2, 0.0), 0.146721).unwrap();
    let value = fem::normalized_first(&domain, 512, 48).unwrap();
    assert!((value - 6.7212).abs() < 2e-3, "{value}");
    let peak = annulus::find_eps0().unwrap();
    assert!((peak.root - 0.1467208).abs() < 1e-7);
}
