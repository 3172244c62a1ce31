//! Randomized property suites and independent oracles for the acceptance run.

use std::cmp::Ordering;
use std::collections::HashSet;
use std::sync::OnceLock;

use newton_sos::bconv::{bconv_member, BconvOutcome, BconvWitness};
use newton_sos::cert::{binary_sos_certificate, verify_certificate};
use newton_sos::checkers::{check_sos_necessary, check_sufficient, ConditionReport, Status};
use newton_sos::mora::{compare, mora_divide, LocalOrder, OrderKind};
use newton_sos::newton::EvenRegion;
use newton_sos::poly::{dyadic, int, rat, Exponent, Polynomial, Rational};
use num_traits::{One, Zero};
use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};

pub type Suite = fn(usize) -> Result<String, String>;

pub const SUITES: [(&str, Suite); 5] = [
    ("(a) certificates verify", certificates_verify),
    ("(b) bconv = brute force", bconv_brute_force),
    ("(c) Mora identity", mora_identity),
    ("(d) sandwich", sandwich),
    ("(e) sufficient => necessary", sufficient_implies_necessary),
];

/// `coef · a^a_exp · ε^eps_exp`.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Symbolic {
    pub coef: Rational,
    pub a_exp: i64,
    pub eps_exp: i64,
}

impl Symbolic {
    fn mul(&self, o: &Symbolic) -> Symbolic {
        Symbolic {
            coef: &self.coef * &o.coef,
            a_exp: self.a_exp + o.a_exp,
            eps_exp: self.eps_exp + o.eps_exp,
        }
    }

    /// Value at `a = 1`.
    pub fn eval(&self, eps: &Rational) -> Rational {
        let p = num_traits::pow::pow(eps.clone(), self.eps_exp.unsigned_abs() as usize);
        if self.eps_exp < 0 {
            &self.coef / p
        } else {
            &self.coef * p
        }
    }
}

fn pow2(k: i64) -> Rational {
    let p = Rational::from_integer(num_bigint::BigInt::one() << k.unsigned_abs());
    if k < 0 {
        p.recip()
    } else {
        p
    }
}

/// `C_1 .. C_N, M` from `C_1 = a/(2ε)`, `C_j = C_{j-1}²/2`, `M = ε C_N²`.
pub fn binary_recursion(nn: u32) -> Vec<Symbolic> {
    let half = Symbolic {
        coef: rat(1, 2),
        a_exp: 0,
        eps_exp: 0,
    };
    let mut out = vec![Symbolic {
        coef: rat(1, 2),
        a_exp: 1,
        eps_exp: -1,
    }];
    for _ in 1..nn {
        let last = out.last().unwrap();
        out.push(last.mul(last).mul(&half));
    }
    let last = out.last().unwrap();
    let eps = Symbolic {
        coef: int(1),
        a_exp: 0,
        eps_exp: 1,
    };
    out.push(eps.mul(last).mul(last));
    out
}

/// `C_j = 2^{-(2^j-1)} a^{2^{j-1}} ε^{-2^{j-1}}`, `M = 2^{-(2^{N+1}-2)} a^{2^N} ε^{1-2^N}`.
pub fn binary_closed_form(nn: u32) -> Vec<Symbolic> {
    let mut out: Vec<Symbolic> = (1..=nn as i64)
        .map(|j| Symbolic {
            coef: pow2(-((1 << j) - 1)),
            a_exp: 1 << (j - 1),
            eps_exp: -(1 << (j - 1)),
        })
        .collect();
    let n = nn as i64;
    out.push(Symbolic {
        coef: pow2(-((1 << (n + 1)) - 2)),
        a_exp: 1 << n,
        eps_exp: 1 - (1 << n),
    });
    out
}

/// Depth-`N` witness with `β^k` alternating between `(2^{N+1}, 0)` and `(0, 2^{N+1})`.
pub fn alternating_witness(nn: u32) -> BconvWitness {
    let big = 1u32 << (nn + 1);
    let betas: Vec<Exponent> = (0..=nn)
        .map(|k| {
            if k % 2 == 0 {
                Exponent::new(vec![big, 0])
            } else {
                Exponent::new(vec![0, big])
            }
        })
        .collect();
    let mut target = [Rational::zero(), Rational::zero()];
    for (k, b) in betas.iter().enumerate() {
        let w = if k < nn as usize { pow2(-(k as i64 + 1)) } else { pow2(-(nn as i64)) };
        for (t, &c) in target.iter_mut().zip(b.coords()) {
            *t += &w * int(c as i64);
        }
    }
    let coords = target.iter().map(|t| t.to_integer().try_into().unwrap()).collect();
    BconvWitness::new(Exponent::new(coords), betas).expect("alternating witness is valid")
}

fn rng(salt: u64) -> StdRng {
    StdRng::seed_from_u64(0xacce_97ed ^ salt)
}

/// Random exponent in `n` variables with degree in `lo..=hi`.
fn random_exponent(r: &mut StdRng, n: usize, lo: u32, hi: u32) -> Exponent {
    let deg = r.gen_range(lo..=hi);
    let mut c = vec![0u32; n];
    for _ in 0..deg {
        c[r.gen_range(0..n)] += 1;
    }
    Exponent::new(c)
}

fn random_coeff(r: &mut StdRng) -> Rational {
    let num = r.gen_range(1..=5) * if r.gen_bool(0.5) { 1 } else { -1 };
    rat(num, r.gen_range(1..=4))
}

/// Mostly convenient polynomials: even axis powers plus a few random terms.
fn random_local_poly(r: &mut StdRng) -> Polynomial {
    let n = r.gen_range(1..=3);
    let mut f = Polynomial::zero(n);
    for i in 0..n {
        if r.gen_bool(0.9) {
            let k = r.gen_range(1..=5);
            f.add_term(Exponent::axis(n, i, 2 * k), int(r.gen_range(1..=3)));
        }
    }
    for _ in 0..r.gen_range(0..=3) {
        let e = random_exponent(r, n, 2, 10);
        let c = random_coeff(r);
        f.add_term(e, c);
    }
    if f.is_zero() {
        f.add_term(Exponent::axis(n, 0, 2), int(1));
    }
    f
}

struct Checked {
    f: Polynomial,
    report: ConditionReport,
}

/// Sufficiency verdicts on one shared random sample, computed once.
fn sufficiency_sample(cases: usize) -> Result<&'static [Checked], String> {
    static SAMPLE: OnceLock<Result<Vec<Checked>, String>> = OnceLock::new();
    SAMPLE
        .get_or_init(|| {
            let mut r = rng(1);
            (0..cases)
                .map(|_| {
                    let f = random_local_poly(&mut r);
                    check_sufficient(&f)
                        .map(|report| Checked { f: f.clone(), report })
                        .map_err(|err| format!("check_sufficient({f}): {err}"))
                })
                .collect()
        })
        .as_deref()
        .map_err(Clone::clone)
}

/// The target of a valid certificate is nonnegative wherever every unit
/// residual is positive; sample 20 dyadic points of the safe box.
fn nonnegative_near_zero(f: &Polynomial, rho: f64, r: &mut StdRng) -> Result<(), String> {
    for _ in 0..20 {
        let x: Vec<Rational> = (0..f.nvars())
            .map(|_| dyadic(0.99 * r.gen_range(-rho..=rho), 20))
            .collect();
        let v = f.eval(&x).map_err(|e| e.to_string())?;
        if v < Rational::zero() {
            return Err(format!("{f} is negative at {x:?} inside radius {rho}"));
        }
    }
    Ok(())
}

fn certificates_verify(cases: usize) -> Result<String, String> {
    let mut samples = rng(6);
    let mut emitted = 0;
    for c in sufficiency_sample(cases)? {
        if let Some(cert) = &c.report.certificate {
            emitted += 1;
            let v = verify_certificate(cert);
            if !v.valid || cert.target != c.f {
                return Err(format!("certificate for {} does not verify: {:?}", c.f, v.problems));
            }
            nonnegative_near_zero(&c.f, cert.safe_radius(), &mut samples)?;
        }
    }
    // Chain certificates from random witnesses, cut at random places.
    let mut r = rng(2);
    let mut chains = 0;
    while chains < cases {
        let (region, alpha) = random_region_point(&mut r);
        let Some(w) = bconv_member(&alpha, &region, 4).witness().cloned() else {
            continue;
        };
        let eps = rat(r.gen_range(1..=9), r.gen_range(1..=9));
        let a = random_coeff(&mut r);
        let t = r.gen_range(1..=w.depth() + 1);
        let b = binary_sos_certificate(&eps, &a, t, &w).map_err(|e| format!("{w:?}: {e}"))?;
        if !verify_certificate(&b.certificate).valid {
            return Err(format!("chain certificate for {w:?}, t = {t}, a = {a} fails"));
        }
        chains += 1;
    }
    Ok(format!(
        "{} polynomials, {emitted} sufficiency certificates (each sampled nonnegative near 0) and {chains} chain certificates verified",
        sufficiency_sample(cases)?.len()
    ))
}

fn sufficient_implies_necessary(cases: usize) -> Result<String, String> {
    let mut passed = 0;
    for c in sufficiency_sample(cases)? {
        if c.report.status == Status::Pass {
            passed += 1;
            let nec = check_sos_necessary(&c.f).map_err(|e| e.to_string())?;
            if nec.status == Status::Fail {
                return Err(format!("{} passes the sufficient check but fails the necessary one", c.f));
            }
        }
    }
    Ok(format!("{passed} of {} sufficient passes checked", sufficiency_sample(cases)?.len()))
}

/// A random even region with one to three bases, and a random point.
fn random_region_point(r: &mut StdRng) -> (EvenRegion, Exponent) {
    let n = r.gen_range(1..=3);
    let cap = [0, 10, 8, 6][n];
    let bases: Vec<Exponent> = (0..r.gen_range(1..=3))
        .map(|_| Exponent::new((0..n).map(|_| 2 * r.gen_range(0..=cap / 2)).collect()))
        .collect();
    let region = EvenRegion::from_bases(n, bases).expect("even bases");
    let alpha = loop {
        let a = Exponent::new((0..n).map(|_| r.gen_range(0..=cap)).collect());
        if a.degree() <= 10 {
            break a;
        }
    };
    (region, alpha)
}

/// Smallest `N ≤ max` with `2^N α = Σ_{k≤N} 2^{N-k} β^k + β^{N+1}` over even
/// `β^k` in the region, by exhaustive enumeration of the sequences.
fn brute_force_depth(region: &EvenRegion, alpha: &Exponent, max: usize) -> Option<usize> {
    (1..=max).find(|&nn| {
        let total: Vec<u64> = alpha.coords().iter().map(|&c| (c as u64) << nn).collect();
        let mut dead = HashSet::new();
        sequence_exists(region, &total, 1, nn, &mut dead)
    })
}

fn sequence_exists(
    region: &EvenRegion,
    rest: &[u64],
    k: usize,
    nn: usize,
    dead: &mut HashSet<(Vec<u64>, usize)>,
) -> bool {
    if k == nn + 1 {
        let last = Exponent::new(rest.iter().map(|&c| c as u32).collect());
        return region.contains_even(&last);
    }
    if dead.contains(&(rest.to_vec(), k)) {
        return false;
    }
    let weight = 1u64 << (nn - k);
    let bounds: Vec<u64> = rest.iter().map(|&c| c / weight).collect();
    let mut cur = vec![0u64; rest.len()];
    loop {
        let beta = Exponent::new(cur.iter().map(|&c| c as u32).collect());
        if region.contains_even(&beta) {
            let next: Vec<u64> = rest.iter().zip(&cur).map(|(r, b)| r - weight * b).collect();
            if sequence_exists(region, &next, k + 1, nn, dead) {
                return true;
            }
        }
        // Next even vector below `bounds`.
        let mut i = 0;
        loop {
            if i == cur.len() {
                dead.insert((rest.to_vec(), k));
                return false;
            }
            if cur[i] + 2 <= bounds[i] {
                cur[i] += 2;
                break;
            }
            cur[i] = 0;
            i += 1;
        }
    }
}

const BRUTE_DEPTH: usize = 5;

fn bconv_brute_force(cases: usize) -> Result<String, String> {
    let mut r = rng(3);
    let mut members = 0;
    for _ in 0..cases {
        let (region, alpha) = random_region_point(&mut r);
        let fast = bconv_member(&alpha, &region, BRUTE_DEPTH);
        let slow = brute_force_depth(&region, &alpha, BRUTE_DEPTH);
        let agree = match (&fast, slow) {
            (BconvOutcome::Found { witness }, Some(d)) => witness.depth() == d && witness.verify_in(&region),
            (BconvOutcome::Found { .. }, None) => false,
            (_, Some(_)) => false,
            (_, None) => true,
        };
        if !agree {
            return Err(format!("{alpha} over {:?}: search {fast:?}, brute force {slow:?}", region.base_points));
        }
        members += usize::from(slow.is_some());
    }
    Ok(format!("{cases} points agree ({members} members) up to depth {BRUTE_DEPTH}"))
}

fn sandwich(cases: usize) -> Result<String, String> {
    let mut r = rng(4);
    let (mut lower, mut upper) = (0, 0);
    for _ in 0..cases {
        let (region, alpha) = random_region_point(&mut r);
        let out = bconv_member(&alpha, &region, BRUTE_DEPTH);
        if region.region_real(&alpha) {
            lower += 1;
            match out.witness() {
                Some(w) if w.depth() == 1 => {}
                _ => return Err(format!("{alpha} lies in the region but search gave {out:?}")),
            }
        }
        if let Some(w) = out.witness() {
            upper += 1;
            let hull = region.hull().ok_or("found a witness in an empty region")?;
            let recombined: Vec<Rational> = alpha.coords().iter().map(|&c| int(c as i64)).collect();
            if !hull.contains(&alpha) || w.recombine() != recombined || !w.verify_in(&region) {
                return Err(format!("{alpha}: witness {w:?} escapes the hull"));
            }
        }
    }
    Ok(format!("{cases} points: {lower} region points found at depth 1, {upper} members inside the hull"))
}

/// Exact Mora reduction can grow coefficients to tens of thousands of bits
/// once the working set fills with high-écart elements; degree-4 divisors hit
/// that within a handful of seeds, so the random divisors stay at degree 3.
const DIVISOR_DEGREE: u32 = 3;

fn random_divisor(r: &mut StdRng, n: usize) -> Polynomial {
    let mut g = Polynomial::zero(n);
    while g.is_zero() {
        for _ in 0..r.gen_range(1..=3) {
            let e = random_exponent(r, n, 1, DIVISOR_DEGREE);
            let c = random_coeff(r);
            g.add_term(e, c);
        }
    }
    g
}

fn mora_identity(cases: usize) -> Result<String, String> {
    let mut r = rng(5);
    let mut nonzero_u = 0;
    for _ in 0..cases {
        let n = r.gen_range(1..=3);
        let mut f = Polynomial::zero(n);
        for _ in 0..r.gen_range(1..=4) {
            let e = random_exponent(&mut r, n, 1, 10);
            let c = random_coeff(&mut r);
            f.add_term(e, c);
        }
        let gs: Vec<Polynomial> = (0..r.gen_range(1..=2)).map(|_| random_divisor(&mut r, n)).collect();
        let mut perm: Vec<usize> = (0..n).collect();
        perm.shuffle(&mut r);
        let kind = if r.gen_bool(0.5) { OrderKind::AntiGradedLex } else { OrderKind::AntiGradedRevlex };
        let order = LocalOrder::with_permutation(kind, perm).map_err(|e| e.to_string())?;
        let ctx = || format!("f = {f}, g = {gs:?}, order {order:?}");
        let d = mora_divide(&f, &gs, &order).map_err(|e| format!("{}: {e}", ctx()))?;

        let sum = |a: Polynomial, b: &Polynomial| a.try_add(b).expect("same dimension");
        let lhs = sum(f.clone(), &d.u.try_mul(&f).expect("product"));
        let mut rhs = d.remainder.clone();
        for (q, g) in d.quotients.iter().zip(&gs) {
            rhs = sum(rhs, &q.try_mul(g).expect("product"));
        }
        if lhs != rhs {
            return Err(format!("{}: (1+u)f != Σ q g + r", ctx()));
        }
        if !d.u.constant_term().is_zero() {
            return Err(format!("{}: u(0) != 0", ctx()));
        }
        nonzero_u += usize::from(!d.u.is_zero());
        let lt_f = order.leading(&f).map(|t| t.0.clone());
        for (q, g) in d.quotients.iter().zip(&gs) {
            let qg = q.try_mul(g).expect("product");
            if let (Some((m, _)), Some(lf)) = (order.leading(&qg), &lt_f) {
                if compare(&order, m, lf).map_err(|e| e.to_string())? == Ordering::Greater {
                    return Err(format!("{}: LT(q g) = {m} above LT(f) = {lf}", ctx()));
                }
            }
        }
        if let Some((lr, _)) = order.leading(&d.remainder) {
            for g in &gs {
                let lg = order.leading(g).expect("nonzero divisor").0;
                if lg.divides(lr) {
                    return Err(format!("{}: LT(r) = {lr} divisible by {lg}", ctx()));
                }
            }
        }
    }
    Ok(format!("{cases} divisions ({nonzero_u} with a nontrivial unit)"))
}
