//! Local monomial orders and Mora's division with a unit multiplier.

use std::cmp::Ordering;

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::newton::newton_diagram;
use crate::poly::{Exponent, Polynomial, Rational};

#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OrderKind {
    AntiGradedLex,
    AntiGradedRevlex,
}

/// A local order: lower total degree is larger, equal degrees are broken by
/// (rev)lex on the variables taken in `perm` order.
#[derive(Clone, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub struct LocalOrder {
    pub kind: OrderKind,
    pub perm: Vec<usize>,
}

impl LocalOrder {
    pub fn anti_graded_lex(nvars: usize) -> Self {
        LocalOrder {
            kind: OrderKind::AntiGradedLex,
            perm: (0..nvars).collect(),
        }
    }

    pub fn anti_graded_revlex(nvars: usize) -> Self {
        LocalOrder {
            kind: OrderKind::AntiGradedRevlex,
            perm: (0..nvars).collect(),
        }
    }

    /// Same kind with variables ranked as listed (`perm[0]` is the largest).
    pub fn with_permutation(kind: OrderKind, perm: Vec<usize>) -> Result<Self> {
        let mut seen = vec![false; perm.len()];
        for &p in &perm {
            if p >= perm.len() || std::mem::replace(&mut seen[p], true) {
                return Err(Error::Input(format!("{perm:?} is not a permutation")));
            }
        }
        Ok(LocalOrder { kind, perm })
    }

    pub fn nvars(&self) -> usize {
        self.perm.len()
    }

    /// Greatest term of `f`.
    pub fn leading<'a>(&self, f: &'a Polynomial) -> Option<(&'a Exponent, &'a Rational)> {
        f.terms().max_by(|a, b| self.cmp(a.0, b.0))
    }

    fn cmp(&self, a: &Exponent, b: &Exponent) -> Ordering {
        b.degree().cmp(&a.degree()).then_with(|| {
            let (ca, cb) = (a.coords(), b.coords());
            match self.kind {
                OrderKind::AntiGradedLex => {
                    for &i in &self.perm {
                        match ca[i].cmp(&cb[i]) {
                            Ordering::Equal => continue,
                            o => return o,
                        }
                    }
                    Ordering::Equal
                }
                OrderKind::AntiGradedRevlex => {
                    for &i in self.perm.iter().rev() {
                        match ca[i].cmp(&cb[i]) {
                            Ordering::Equal => continue,
                            o => return o.reverse(),
                        }
                    }
                    Ordering::Equal
                }
            }
        })
    }
}

/// `Greater` when `m1 > m2` in `order`.
///
/// ```
/// use newton_sos::mora::{compare, LocalOrder};
/// use newton_sos::poly::Exponent;
/// use std::cmp::Ordering;
/// let o = LocalOrder::anti_graded_lex(2);
/// let e = |a, b| Exponent::new(vec![a, b]);
/// assert_eq!(compare(&o, &e(0, 0), &e(1, 0)).unwrap(), Ordering::Greater);
/// assert_eq!(compare(&o, &e(1, 0), &e(0, 1)).unwrap(), Ordering::Greater);
/// assert_eq!(compare(&o, &e(2, 0), &e(1, 1)).unwrap(), Ordering::Greater);
/// ```
pub fn compare(order: &LocalOrder, m1: &Exponent, m2: &Exponent) -> Result<Ordering> {
    for m in [m1, m2] {
        if m.nvars() != order.nvars() {
            return Err(Error::DimensionMismatch {
                expected: order.nvars(),
                found: m.nvars(),
            });
        }
    }
    Ok(order.cmp(m1, m2))
}

/// `(1 + u) f = Σ q_i g_i + r`.
#[derive(Clone, PartialEq, Debug)]
pub struct DivisionResult {
    pub u: Polynomial,
    pub quotients: Vec<Polynomial>,
    pub remainder: Polynomial,
}

impl DivisionResult {
    /// Re-expands the identity and checks `u(0) = 0`, the leading-term
    /// bound and that `LT(r)` is not divisible by any `LT(g_i)`.
    pub fn check(&self, f: &Polynomial, divisors: &[Polynomial], order: &LocalOrder) -> Result<()> {
        let fail = |m: &str| Err(Error::Certificate(format!("division: {m}")));
        if !self.u.constant_term().is_zero() {
            return fail("u(0) != 0");
        }
        let lhs = f.try_add(&self.u.try_mul(f)?)?;
        let mut rhs = self.remainder.clone();
        for (q, g) in self.quotients.iter().zip(divisors) {
            rhs = rhs.try_add(&q.try_mul(g)?)?;
        }
        if lhs != rhs {
            return fail("identity does not hold");
        }
        let lt_f = order.leading(f).map(|t| t.0.clone());
        for (q, g) in self.quotients.iter().zip(divisors) {
            if let (Some(lf), Some((lq, _)), Some((lg, _))) = (&lt_f, order.leading(q), order.leading(g)) {
                let lqg = lq.checked_add(lg)?;
                if order.cmp(lf, &lqg) == Ordering::Less {
                    return fail("LT(q_i g_i) exceeds LT(f)");
                }
            }
        }
        if let Some((lr, _)) = order.leading(&self.remainder) {
            if divisors.iter().any(|g| order.leading(g).is_some_and(|(lg, _)| lg.divides(lr))) {
                return fail("LT(r) is divisible by a leading term");
            }
        }
        Ok(())
    }
}

/// An element `a f + Σ b_i g_i` of the working set, with its expression.
#[derive(Clone)]
struct Tracked {
    value: Polynomial,
    a: Polynomial,
    b: Vec<Polynomial>,
}

impl Tracked {
    fn ecart(&self, order: &LocalOrder) -> u64 {
        let top = self.value.degree().unwrap_or(0);
        let lt = order.leading(&self.value).map_or(0, |t| t.0.degree());
        top - lt
    }

    fn reduce_by(&mut self, t: &Tracked, shift: &Exponent, c: &Rational) -> Result<()> {
        let neg = -c.clone();
        self.value = self.value.try_add(&t.value.mul_term(shift, &neg)?)?;
        self.a = self.a.try_add(&t.a.mul_term(shift, &neg)?)?;
        for (bi, ti) in self.b.iter_mut().zip(&t.b) {
            *bi = bi.try_add(&ti.mul_term(shift, &neg)?)?;
        }
        Ok(())
    }

    fn into_result(self) -> DivisionResult {
        let n = self.value.nvars();
        DivisionResult {
            u: self.a.try_sub(&Polynomial::constant(n, Rational::one())).expect("same nvars"),
            quotients: self.b.into_iter().map(|q| -q).collect(),
            remainder: self.value,
        }
    }
}

fn check_inputs(f: &Polynomial, divisors: &[Polynomial], order: &LocalOrder) -> Result<()> {
    for p in std::iter::once(f).chain(divisors) {
        if p.nvars() != order.nvars() {
            return Err(Error::DimensionMismatch {
                expected: order.nvars(),
                found: p.nvars(),
            });
        }
        if p.is_zero() {
            return Err(Error::ZeroPolynomial);
        }
    }
    Ok(())
}

/// Mora's weak normal form.
///
/// Reduces by the minimal-écart element of the working set whose leading
/// monomial divides `LT(h)` (lowest index on ties); when that reducer has the
/// larger écart, `h` itself joins the working set. Stops as soon as `LT(h)`
/// is not divisible, so lower terms of `r` may still be.
///
/// ```
/// use newton_sos::mora::{mora_divide, LocalOrder};
/// use newton_sos::poly::{parse_polynomial, VarNames};
/// let v = VarNames::new(["x"]);
/// let f = parse_polynomial("x^2", &v).unwrap();
/// let g = parse_polynomial("x + x^2", &v).unwrap();
/// let d = mora_divide(&f, &[g], &LocalOrder::anti_graded_lex(1)).unwrap();
/// assert!(d.remainder.is_zero());
/// assert_eq!(d.u, parse_polynomial("x", &v).unwrap());
/// ```
pub fn mora_divide(f: &Polynomial, divisors: &[Polynomial], order: &LocalOrder) -> Result<DivisionResult> {
    check_inputs(f, divisors, order)?;
    let n = f.nvars();
    let l = divisors.len();
    let zero = Polynomial::zero(n);
    let mut set: Vec<Tracked> = divisors
        .iter()
        .enumerate()
        .map(|(i, g)| {
            let mut b = vec![zero.clone(); l];
            b[i] = Polynomial::constant(n, Rational::one());
            Tracked {
                value: g.clone(),
                a: zero.clone(),
                b,
            }
        })
        .collect();
    let mut h = Tracked {
        value: f.clone(),
        a: Polynomial::constant(n, Rational::one()),
        b: vec![zero.clone(); l],
    };
    while let Some((lt, lc)) = order.leading(&h.value).map(|(e, c)| (e.clone(), c.clone())) {
        let best = set
            .iter()
            .enumerate()
            .filter(|(_, t)| order.leading(&t.value).is_some_and(|(e, _)| e.divides(&lt)))
            .min_by_key(|(i, t)| (t.ecart(order), *i))
            .map(|(i, _)| i);
        let Some(i) = best else { break };
        let t = set[i].clone();
        if t.ecart(order) > h.ecart(order) {
            set.push(h.clone());
        }
        let (tl, tc) = order.leading(&t.value).expect("nonzero");
        let shift = lt.checked_sub(tl).expect("divides");
        h.reduce_by(&t, &shift, &(lc / tc))?;
    }
    let res = h.into_result();
    res.check(f, divisors, order)?;
    Ok(res)
}

/// The division continued to degree `d + 1` and its truncations.
#[derive(Clone, PartialEq, Debug)]
pub struct ModifiedDivisionResult {
    pub base: DivisionResult,
    /// `r` without terms in the monomial ideal of the linear-part leaders.
    pub r0: Polynomial,
    /// Diagram part of `r0`.
    pub r0_diagram: Polynomial,
    pub d: u64,
    /// `(1 + u') f = Σ q'_i g_i + r'`, no term of `r'` of degree `≤ d + 1`
    /// divisible by any `LT(g_i)`.
    pub continued: DivisionResult,
    /// `r'` truncated to degree `≤ d + 1`.
    pub essential: Polynomial,
}

/// Modified division: eliminate from `r` the ideal generated by the leading
/// monomials of the degree-one parts of the divisors to get `r₀`, read
/// `d = deg r_{0,Γ}`, then keep reducing every term of degree `≤ d + 1`
/// (greatest first) by the original divisors and truncate.
pub fn modified_mora(
    f: &Polynomial,
    divisors: &[Polynomial],
    order: &LocalOrder,
) -> Result<ModifiedDivisionResult> {
    let base = mora_divide(f, divisors, order)?;
    let linear_leaders: Vec<Exponent> = divisors
        .iter()
        .filter_map(|g| order.leading(&g.homogeneous_part(1)).map(|t| t.0.clone()))
        .collect();
    let r0 = base
        .remainder
        .filter(|e, _| !linear_leaders.iter().any(|l| l.divides(e)));
    if r0.is_zero() {
        return Err(Error::DegenerateRemainder);
    }
    let nc = newton_diagram(&r0)?;
    let r0_diagram = nc.diagram_part(&r0);
    let d = r0_diagram.degree().expect("nonempty diagram");

    let leaders: Vec<(Exponent, Rational)> = divisors
        .iter()
        .map(|g| order.leading(g).map(|(e, c)| (e.clone(), c.clone())).expect("nonzero"))
        .collect();
    let mut r = base.remainder.clone();
    let mut q = base.quotients.clone();
    loop {
        let next = r
            .terms()
            .filter(|(e, _)| e.degree() <= d + 1)
            .filter_map(|(e, c)| {
                leaders
                    .iter()
                    .position(|(l, _)| l.divides(e))
                    .map(|i| (e.clone(), c.clone(), i))
            })
            .max_by(|a, b| order.cmp(&a.0, &b.0));
        let Some((e, c, i)) = next else { break };
        let (l, lc) = &leaders[i];
        let shift = e.checked_sub(l).expect("divides");
        let k = &c / lc;
        r = r.try_sub(&divisors[i].mul_term(&shift, &k)?)?;
        q[i] = q[i].try_add(&Polynomial::monomial(shift, k))?;
    }
    let continued = DivisionResult {
        u: base.u.clone(),
        quotients: q,
        remainder: r,
    };
    continued.check(f, divisors, order)?;
    let essential = continued.remainder.truncate(d + 1);
    Ok(ModifiedDivisionResult {
        base,
        r0,
        r0_diagram,
        d,
        continued,
        essential,
    })
}
