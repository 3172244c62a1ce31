use newton_sos::bconv::BconvWitness;
use newton_sos::cert::{
    binary_sos_certificate, homogeneous_lowest_certificate, monomial_sos_certificate, split_odd_exponent,
    sufficiency_certificate, verify_certificate, BuildOptions, LocalSosCertificate,
};
use newton_sos::newton::newton_diagram;
use newton_sos::poly::{int, parse_polynomial, rat, Exponent, Polynomial, VarNames};

fn e(c: &[u32]) -> Exponent {
    Exponent::new(c.to_vec())
}

fn p(text: &str, names: &[&str]) -> Polynomial {
    parse_polynomial(text, &VarNames::new(names.iter().copied())).unwrap()
}

fn xyz(text: &str) -> Polynomial {
    p(text, &["x", "y", "z"])
}

#[test]
fn hand_written_certificate_verifies() {
    // y^2(1 - 3/4 z^2) + (x + yz/2)^2 + z^10/2 + (yz + z^5)^2/2
    let f = xyz("x^2 + y^2 + x*y*z + y*z^6 + z^10");
    let mut c = LocalSosCertificate::new(f.clone());
    c.push_residual(e(&[0, 2, 0]), int(1), xyz("3/4*z^2"));
    c.push_square(int(1), xyz("x + 1/2*y*z"));
    c.push_monomial_square(rat(1, 2), &e(&[0, 0, 10]));
    c.push_square(rat(1, 2), xyz("y*z + z^5"));
    let v = verify_certificate(&c);
    assert!(v.valid, "{:?}", v.problems);
    assert!(c.safe_radius() > 0.0);

    c.push_monomial_square(int(1), &e(&[2, 0, 0]));
    assert!(!verify_certificate(&c).valid);
}

#[test]
fn residual_needs_positive_constant() {
    let f = xyz("-y^2");
    let mut c = LocalSosCertificate::new(f);
    c.push_residual(e(&[0, 2, 0]), int(-1), Polynomial::zero(3));
    assert!(!verify_certificate(&c).valid);
}

#[test]
fn built_certificates_expand_to_f() {
    let opts = BuildOptions::default();
    let f = xyz("x^2 + y^2 + x*y*z + y*z^6 + z^10");
    let c = sufficiency_certificate(&f, &opts).unwrap();
    assert_eq!(c.target, f);
    assert_eq!(c.expand().unwrap(), f);

    let g = xyz("2x^6 + 2y^6 + 2z^6 + x*y^3*z^3 + x^2*y^4*z^3");
    let c = homogeneous_lowest_certificate(&g, &opts).unwrap();
    assert_eq!(c.metadata.route, "homogeneous_lowest");
    assert!(verify_certificate(&c).valid);
}

#[test]
fn binomial_example_full_certificate() {
    let f = p("x^16 + y^10 - x^13*y^2", &["x", "y"]);
    let c = sufficiency_certificate(&f, &BuildOptions::default()).unwrap();
    assert!(verify_certificate(&c).valid);
    assert!(!c.metadata.witnesses.is_empty());
}

#[test]
fn monomial_lemma_both_signs() {
    let fg = p("x^16 + y^10", &["x", "y"]);
    let nc = newton_diagram(&fg).unwrap();
    let face = nc.maximal().next().unwrap();
    let w = BconvWitness::new(e(&[13, 2]), vec![e(&[16, 0]), e(&[16, 0]), e(&[0, 10]), e(&[16, 0]), e(&[0, 12])])
        .unwrap();
    for a in [int(1), int(-1), rat(5, 2), rat(-5, 2)] {
        let c = monomial_sos_certificate(&fg, face, &a, &e(&[13, 2]), &rat(1, 4), &w).unwrap();
        assert!(verify_certificate(&c).valid, "a = {a}");
    }
}

#[test]
fn chain_cut_inside_uses_l() {
    let w = BconvWitness::new(e(&[13, 2]), vec![e(&[16, 0]), e(&[16, 0]), e(&[0, 10]), e(&[16, 0]), e(&[0, 12])])
        .unwrap();
    let b = binary_sos_certificate(&rat(1, 2), &int(1), 3, &w).unwrap();
    assert!(b.l.is_some());
    assert_eq!(b.d.len(), 1);
    assert!(verify_certificate(&b.certificate).valid);
}

#[test]
fn odd_split_properties() {
    for c in [[1u32, 3, 3], [2, 4, 3], [5, 0, 0], [1, 1, 1], [0, 7, 2]] {
        let alpha = e(&c);
        let s = split_odd_exponent(&alpha).unwrap();
        assert!(s.beta.is_even() && s.beta_prime.is_even());
        assert_eq!(s.beta.degree() + 2, s.beta_prime.degree());
        assert_eq!(s.beta.checked_add(&s.beta_prime).unwrap(), alpha.scale(2).unwrap());
    }
    assert!(split_odd_exponent(&e(&[2, 2])).is_err());
}
