use std::cmp::Ordering;

use newton_sos::mora::{compare, modified_mora, mora_divide, LocalOrder, OrderKind};
use newton_sos::poly::{parse_polynomial, Exponent, Polynomial, VarNames};

fn e(c: &[u32]) -> Exponent {
    Exponent::new(c.to_vec())
}

fn p(text: &str) -> Polynomial {
    parse_polynomial(text, &VarNames::new(["x", "y", "z", "w"])).unwrap()
}

#[test]
fn local_order_in_two_variables() {
    let o = LocalOrder::anti_graded_lex(2);
    // 1 > x > y > x^2 > xy > y^2
    let chain = [e(&[0, 0]), e(&[1, 0]), e(&[0, 1]), e(&[2, 0]), e(&[1, 1]), e(&[0, 2])];
    for w in chain.windows(2) {
        assert_eq!(compare(&o, &w[0], &w[1]).unwrap(), Ordering::Greater);
        assert_eq!(compare(&o, &w[1], &w[0]).unwrap(), Ordering::Less);
    }
}

#[test]
fn orders_are_total_and_transitive() {
    let mut monos = Vec::new();
    for a in 0..4 {
        for b in 0..4 {
            for c in 0..3 {
                monos.push(e(&[a, b, c]));
            }
        }
    }
    for kind in [OrderKind::AntiGradedLex, OrderKind::AntiGradedRevlex] {
        let o = LocalOrder::with_permutation(kind, vec![2, 0, 1]).unwrap();
        let mut sorted = monos.clone();
        sorted.sort_by(|a, b| compare(&o, a, b).unwrap());
        for w in sorted.windows(2) {
            assert_eq!(compare(&o, &w[0], &w[1]).unwrap(), Ordering::Less);
        }
        for m in &monos {
            assert_eq!(compare(&o, m, m).unwrap(), Ordering::Equal);
        }
    }
    assert!(LocalOrder::with_permutation(OrderKind::AntiGradedLex, vec![0, 0]).is_err());
}

#[test]
fn pop_remainder() {
    let f = p("3x+3y-3x^2-3y^2+z^2+x^3+y^3+w^4");
    let g = p("4x+4y-6x^2-6y^2+4x^3+4y^3-x^4-y^4-z^4-w^4");
    let o = LocalOrder::anti_graded_lex(4);
    let d = mora_divide(&f, std::slice::from_ref(&g), &o).unwrap();
    d.check(&f, std::slice::from_ref(&g), &o).unwrap();
    assert_eq!(d.remainder.coeff(&e(&[0, 3, 0, 0])), newton_sos::poly::rat(-17, 4));
    let m = modified_mora(&f, &[g], &o).unwrap();
    assert_eq!(m.d, 4);
    assert_eq!(m.r0_diagram, p("3y^2 + z^2 + 7/4*w^4"));
    assert!(m.essential.degree().unwrap() <= 5);
}

#[test]
fn unit_divisor_leaves_nothing() {
    let o = LocalOrder::anti_graded_lex(4);
    let f = p("x^2*y + z^3");
    let g = p("x + x^2");
    let d = mora_divide(&f, &[g.clone(), p("z + y*z")], &o).unwrap();
    assert!(d.remainder.is_zero());
    d.check(&f, &[g, p("z + y*z")], &o).unwrap();
}

#[test]
fn mismatched_dimensions_error() {
    let o = LocalOrder::anti_graded_lex(3);
    assert!(mora_divide(&p("x"), &[p("y")], &o).is_err());
}

/// In one variable the local ring is a DVR: `g` is `x^k` times a unit, so the
/// weak normal form of `f` is `f` itself when `ord f < k` and `0` otherwise.
#[test]
fn univariate_remainders_match_valuation() {
    use rand::{Rng, SeedableRng};
    let mut r = rand::rngs::StdRng::seed_from_u64(7);
    let o = LocalOrder::anti_graded_lex(1);
    let v = VarNames::new(["x"]);
    for _ in 0..200 {
        let mut random = |lo: u32| {
            let mut f = Polynomial::zero(1);
            while f.is_zero() {
                for _ in 0..r.gen_range(1..=4) {
                    let c = newton_sos::poly::rat(r.gen_range(-5..=5), r.gen_range(1..=3));
                    f.add_term(e(&[r.gen_range(lo..=8)]), c);
                }
            }
            f
        };
        let f = random(1);
        let g = random(1);
        let d = mora_divide(&f, std::slice::from_ref(&g), &o).unwrap();
        let ord = |p: &Polynomial| p.min_degree().unwrap();
        let expect = if ord(&f) < ord(&g) { f.clone() } else { Polynomial::zero(1) };
        assert_eq!(d.remainder, expect, "f = {}, g = {}", f.to_string_with(&v), g.to_string_with(&v));
    }
}
