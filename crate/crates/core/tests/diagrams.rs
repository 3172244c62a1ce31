use newton_sos::newton::{even_region, face_restriction, newton_diagram, EvenRegion};
use newton_sos::poly::{parse_polynomial, Exponent, Polynomial, VarNames};

fn e(c: &[u32]) -> Exponent {
    Exponent::new(c.to_vec())
}

fn p(text: &str, names: &[&str]) -> Polynomial {
    parse_polynomial(text, &VarNames::new(names.iter().copied())).unwrap()
}

#[test]
fn two_segment_diagram() {
    let f = p("x^6 + x^4*y + x^3*y^3 + x^2*y^2 + y^4", &["x", "y"]);
    let nc = newton_diagram(&f).unwrap();
    let mut segments: Vec<Vec<Exponent>> = nc.maximal().map(|face| face.vertices.clone()).collect();
    segments.sort();
    assert_eq!(segments, vec![vec![e(&[0, 4]), e(&[2, 2])], vec![e(&[2, 2]), e(&[6, 0])]]);
    // x^3 y^3 lies above the diagram.
    assert!(!nc.on_diagram(&e(&[3, 3])));
    assert!(nc.in_polyhedron(&e(&[3, 3])));
    let first = nc.maximal().find(|face| face.vertices[0] == e(&[0, 4])).unwrap();
    assert_eq!(face_restriction(&f, &nc, first).unwrap(), p("x^2*y^2 + y^4", &["x", "y"]));
}

#[test]
fn three_variable_single_face() {
    let f = p("x^2 + y^2 + x*y*z + y*z^6 + z^10", &["x", "y", "z"]);
    let nc = newton_diagram(&f).unwrap();
    let maximal: Vec<_> = nc.maximal().collect();
    assert_eq!(maximal.len(), 1);
    let face = maximal[0];
    assert_eq!(face.dim, 2);
    assert_eq!(face.normal.a, vec![5, 5, 1]);
    assert_eq!(face.normal.v, 10);
    assert!(nc.meets_all_axes());
    // xyz and yz^6 lie strictly above the face.
    assert_eq!(nc.diagram_part(&f), p("x^2 + y^2 + z^10", &["x", "y", "z"]));
}

#[test]
fn missing_axis_is_detected() {
    let f = p("x^2 + x*y^2", &["x", "y"]);
    assert!(!newton_diagram(&f).unwrap().meets_all_axes());
}

#[test]
fn even_region_closures() {
    let f = p("x^16 + y^10 - x^13*y^2", &["x", "y"]);
    let region = even_region(&f).unwrap();
    assert_eq!(region.base_points, vec![e(&[0, 10]), e(&[16, 0])]);
    assert!(region.contains_even(&e(&[0, 12])));
    // The two closures differ on odd lattice points only.
    assert!(region.region_real(&e(&[17, 0])));
    assert!(!region.region_even_translate(&e(&[17, 0])));
    assert!(region.region_even_translate(&e(&[18, 0])));
}

#[test]
fn region_keeps_minimal_bases() {
    let region = EvenRegion::from_bases(2, [e(&[2, 0]), e(&[4, 2]), e(&[0, 6])]).unwrap();
    assert_eq!(region.base_points.len(), 2);
    assert!(EvenRegion::from_bases(2, [e(&[1, 0])]).is_err());
}
