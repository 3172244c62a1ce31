//! Membership of a POP objective in the local quadratic module at a
//! minimizer, via the essential remainder of the modified Mora division.

use num_traits::{Signed, Zero};
use serde::Serialize;

use crate::cert::{sufficiency_certificate, verify_certificate, BuildOptions, LocalSosCertificate};
use crate::checkers::{check_regularity_with, meets_axes, rint_clause, Clause, ConditionReport, Evidence, Status};
use crate::error::{Error, Result};
use crate::linalg::{self, Matrix};
use crate::mora::{modified_mora, LocalOrder, ModifiedDivisionResult};
use crate::newton::newton_diagram;
use crate::poly::{parse_polynomial, parse_rational_vector, rational_str, Polynomial, Rational, VarNames};

/// `min f  s.t.  g_i ≥ 0, h_j = 0`.
#[derive(Clone, Debug)]
pub struct PopInstance {
    pub vars: VarNames,
    pub f: Polynomial,
    pub ineqs: Vec<Polynomial>,
    pub eqs: Vec<Polynomial>,
}

/// A parsed POP file: the instance, the claimed minimizer and optional
/// multipliers.
#[derive(Clone, Debug)]
pub struct PopFile {
    pub pop: PopInstance,
    pub point: Vec<Rational>,
    pub lambda: Option<Vec<Rational>>,
    pub mu: Option<Vec<Rational>>,
}

/// Parses the line-oriented POP format:
///
/// ```text
/// vars: x, y, z, w
/// min: x^3 + y^3 + z^2 + w^4 + 2
/// st: 2 - x^4 - y^4 - z^4 - w^4 >= 0
/// point: -1, -1, 0, 0
/// lambda: 3/4
/// ```
///
/// `st:` lines end in `>= 0` or `= 0`; `#` starts a comment. Without a
/// `vars:` line the variables are inferred from all polynomial lines.
pub fn parse_pop(text: &str) -> Result<PopFile> {
    let mut vars = None;
    let mut objective = None;
    let mut cons: Vec<(String, bool)> = Vec::new();
    let (mut point, mut lambda, mut mu) = (None, None, None);
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, rest) = line
            .split_once(':')
            .ok_or_else(|| Error::Input(format!("line {}: expected `key: value`", lineno + 1)))?;
        let rest = rest.trim();
        match key.trim() {
            "vars" => {
                vars = Some(VarNames::new(rest.split([',', ' ']).filter(|s| !s.is_empty())));
            }
            "min" => objective = Some(rest.to_string()),
            "st" => {
                let (body, ineq) = if let Some(b) = rest.strip_suffix(">= 0") {
                    (b, true)
                } else if let Some(b) = rest.strip_suffix("= 0") {
                    (b, false)
                } else {
                    return Err(Error::Input(format!(
                        "line {}: constraint must end in `>= 0` or `= 0`",
                        lineno + 1
                    )));
                };
                cons.push((body.trim().to_string(), ineq));
            }
            "point" => point = Some(parse_rational_vector(rest)?),
            "lambda" => lambda = Some(parse_rational_vector(rest)?),
            "mu" => mu = Some(parse_rational_vector(rest)?),
            other => return Err(Error::Input(format!("line {}: unknown key `{other}`", lineno + 1))),
        }
    }
    let objective = objective.ok_or_else(|| Error::Input("missing `min:` line".into()))?;
    let vars = vars.unwrap_or_else(|| {
        VarNames::infer(std::iter::once(objective.as_str()).chain(cons.iter().map(|c| c.0.as_str())))
    });
    let f = parse_polynomial(&objective, &vars)?;
    let mut ineqs = Vec::new();
    let mut eqs = Vec::new();
    for (body, ineq) in &cons {
        let p = parse_polynomial(body, &vars)?;
        if *ineq {
            ineqs.push(p);
        } else {
            eqs.push(p);
        }
    }
    let point = point.ok_or_else(|| Error::Input("missing `point:` line".into()))?;
    if point.len() != vars.len() {
        return Err(Error::DimensionMismatch {
            expected: vars.len(),
            found: point.len(),
        });
    }
    Ok(PopFile {
        pop: PopInstance { vars, f, ineqs, eqs },
        point,
        lambda,
        mu,
    })
}

/// Multipliers at `z` with the Lagrangian `L = f − Σ λ_i g_i − Σ μ_j h_j`.
#[derive(Clone, Debug, Serialize)]
pub struct KktData {
    #[serde(serialize_with = "rational_str::vec")]
    pub z: Vec<Rational>,
    #[serde(serialize_with = "rational_str::vec")]
    pub lambda: Vec<Rational>,
    #[serde(serialize_with = "rational_str::vec")]
    pub mu: Vec<Rational>,
    /// Indices of the inequalities with `g_i(z) = 0`.
    pub active: Vec<usize>,
    #[serde(skip)]
    pub lagrangian: Polynomial,
}

fn check_feasible(pop: &PopInstance, z: &[Rational]) -> Result<Vec<usize>> {
    let mut active = Vec::new();
    for (i, g) in pop.ineqs.iter().enumerate() {
        let v = g.eval(z)?;
        if v.is_negative() {
            return Err(Error::InfeasiblePoint(format!("g{}(z) = {v} < 0", i + 1)));
        }
        if v.is_zero() {
            active.push(i);
        }
    }
    for (j, h) in pop.eqs.iter().enumerate() {
        let v = h.eval(z)?;
        if !v.is_zero() {
            return Err(Error::InfeasiblePoint(format!("h{}(z) = {v} != 0", j + 1)));
        }
    }
    Ok(active)
}

fn lagrangian(pop: &PopInstance, lambda: &[Rational], mu: &[Rational]) -> Result<Polynomial> {
    let mut l = pop.f.clone();
    for (g, c) in pop.ineqs.iter().zip(lambda) {
        l = l.try_sub(&g.scale(c))?;
    }
    for (h, c) in pop.eqs.iter().zip(mu) {
        l = l.try_sub(&h.scale(c))?;
    }
    Ok(l)
}

/// Solves `∇f(z) = Σ λ_i ∇g_i(z) + Σ μ_j ∇h_j(z)` exactly over the active
/// inequalities, preferring the solution with the fewest nonzero
/// multipliers and requiring `λ ≥ 0`.
pub fn solve_multipliers(pop: &PopInstance, z: &[Rational]) -> Result<KktData> {
    let active = check_feasible(pop, z)?;
    let n = pop.f.nvars();
    let rhs = pop.f.gradient_at(z)?;
    // columns: active inequalities, then equalities
    let mut cols: Vec<Vec<Rational>> = Vec::new();
    for &i in &active {
        cols.push(pop.ineqs[i].gradient_at(z)?);
    }
    for h in &pop.eqs {
        cols.push(h.gradient_at(z)?);
    }
    let k = cols.len();
    if k > 16 {
        return Err(Error::NoMultipliers("too many active constraints".into()));
    }
    let mut subsets: Vec<u32> = (0..1u32 << k).collect();
    subsets.sort_by_key(|s| (s.count_ones(), *s));
    for s in subsets {
        let chosen: Vec<usize> = (0..k).filter(|b| s >> b & 1 == 1).collect();
        let x = if chosen.is_empty() {
            rhs.iter().all(Zero::is_zero).then(Vec::new)
        } else {
            let m: Matrix = (0..n).map(|r| chosen.iter().map(|&c| cols[c][r].clone()).collect()).collect();
            if linalg::rank(&m) < chosen.len() {
                continue;
            }
            linalg::solve(&m, &rhs)
        };
        let Some(x) = x else { continue };
        let mut full = vec![Rational::zero(); k];
        for (&c, v) in chosen.iter().zip(x) {
            full[c] = v;
        }
        if full[..active.len()].iter().any(Signed::is_negative) {
            continue;
        }
        let mut lambda = vec![Rational::zero(); pop.ineqs.len()];
        for (&i, v) in active.iter().zip(&full) {
            lambda[i] = v.clone();
        }
        let mu = full[active.len()..].to_vec();
        return kkt_from(pop, z, lambda, mu, active);
    }
    Err(Error::NoMultipliers(
        "stationarity has no solution with nonnegative multipliers".into(),
    ))
}

/// Validates user-supplied multipliers.
pub fn given_multipliers(
    pop: &PopInstance,
    z: &[Rational],
    lambda: Vec<Rational>,
    mu: Vec<Rational>,
) -> Result<KktData> {
    let active = check_feasible(pop, z)?;
    if lambda.len() != pop.ineqs.len() || mu.len() != pop.eqs.len() {
        return Err(Error::NoMultipliers("multiplier count does not match the constraints".into()));
    }
    if lambda.iter().any(Signed::is_negative) {
        return Err(Error::NoMultipliers("negative lambda".into()));
    }
    for (i, (g, l)) in pop.ineqs.iter().zip(&lambda).enumerate() {
        if !l.is_zero() && !g.eval(z)?.is_zero() {
            return Err(Error::NoMultipliers(format!("lambda{} g{}(z) != 0", i + 1, i + 1)));
        }
    }
    kkt_from(pop, z, lambda, mu, active)
}

fn kkt_from(
    pop: &PopInstance,
    z: &[Rational],
    lambda: Vec<Rational>,
    mu: Vec<Rational>,
    active: Vec<usize>,
) -> Result<KktData> {
    let l = lagrangian(pop, &lambda, &mu)?;
    if !l.gradient_at(z)?.iter().all(Zero::is_zero) {
        return Err(Error::NoMultipliers("gradient of the Lagrangian does not vanish".into()));
    }
    Ok(KktData {
        z: z.to_vec(),
        lambda,
        mu,
        active,
        lagrangian: l,
    })
}

/// Second-order condition, reported but never required.
#[derive(Clone, Debug, Serialize)]
pub struct SecondOrderReport {
    #[serde(serialize_with = "ser_matrix")]
    pub hessian: Matrix,
    /// Basis of the common kernel of the active constraint gradients.
    #[serde(serialize_with = "ser_matrix")]
    pub tangent_basis: Vec<Vec<Rational>>,
    pub positive_definite: bool,
}

fn ser_matrix<S: serde::Serializer>(m: &Matrix, s: S) -> std::result::Result<S::Ok, S::Error> {
    rational_str::matrix(&Some(m.clone()), s)
}

pub fn second_order(pop: &PopInstance, kkt: &KktData) -> Result<SecondOrderReport> {
    let n = pop.f.nvars();
    let hessian = kkt.lagrangian.hessian_at(&kkt.z)?;
    let mut rows: Matrix = Vec::new();
    for &i in &kkt.active {
        rows.push(pop.ineqs[i].gradient_at(&kkt.z)?);
    }
    for h in &pop.eqs {
        rows.push(h.gradient_at(&kkt.z)?);
    }
    let tangent_basis = if rows.is_empty() {
        (0..n)
            .map(|i| (0..n).map(|j| Rational::from_integer(((i == j) as i64).into())).collect())
            .collect()
    } else {
        linalg::nullspace(&rows, n)
    };
    let reduced = linalg::congruence(&hessian, &tangent_basis);
    let positive_definite = tangent_basis.is_empty() || linalg::is_pd(&reduced);
    Ok(SecondOrderReport {
        hessian,
        tangent_basis,
        positive_definite,
    })
}

#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MembershipStatus {
    Certified,
    NotCertified,
    Inconclusive,
}

/// Outcome of the pipeline.
#[derive(Clone, Debug)]
pub struct MembershipVerdict {
    pub status: MembershipStatus,
    pub kkt: KktData,
    pub order: LocalOrder,
    /// Shifted Lagrangian `L_z`.
    pub l_z: Polynomial,
    /// `λ_i g_{i,z}` (for `λ_i ∇g_i(z) ≠ 0`) followed by the nonzero `h_{j,z}`.
    pub divisors: Vec<Polynomial>,
    /// Which constraint each divisor came from, `("g", i)` or `("h", j)`.
    pub divisor_sources: Vec<(char, usize)>,
    pub division: Option<ModifiedDivisionResult>,
    /// Variables occurring in the essential remainder.
    pub essential_vars: Vec<usize>,
    pub conditions: ConditionReport,
    /// Certificate for the essential remainder in `essential_vars`.
    pub certificate: Option<LocalSosCertificate>,
    pub second_order: SecondOrderReport,
    pub notes: Vec<String>,
}

/// Runs the pipeline: shift the Lagrangian to `z`, divide by the scaled
/// active constraints, and certify the essential remainder (restricted to
/// its variables) through the axes, relative-interior and regularity
/// conditions. Global minimality of `z` is taken on trust.
pub fn certify_membership(pop: &PopInstance, kkt: &KktData, order: &LocalOrder) -> Result<MembershipVerdict> {
    certify_membership_with(pop, kkt, order, &BuildOptions::default())
}

pub fn certify_membership_with(
    pop: &PopInstance,
    kkt: &KktData,
    order: &LocalOrder,
    opts: &BuildOptions,
) -> Result<MembershipVerdict> {
    let z = &kkt.z;
    let l_z = kkt.lagrangian.shift_to_point(z)?;
    let mut divisors = Vec::new();
    let mut sources = Vec::new();
    for (i, (g, l)) in pop.ineqs.iter().zip(&kkt.lambda).enumerate() {
        if l.is_zero() || g.gradient_at(z)?.iter().all(Zero::is_zero) {
            continue;
        }
        divisors.push(g.shift_to_point(z)?.scale(l));
        sources.push(('g', i));
    }
    for (j, h) in pop.eqs.iter().enumerate() {
        let hz = h.shift_to_point(z)?;
        if !hz.is_zero() {
            divisors.push(hz);
            sources.push(('h', j));
        }
    }
    let mut verdict = MembershipVerdict {
        status: MembershipStatus::NotCertified,
        kkt: kkt.clone(),
        order: order.clone(),
        l_z: l_z.clone(),
        divisors,
        divisor_sources: sources,
        division: None,
        essential_vars: Vec::new(),
        conditions: ConditionReport::new("constrained"),
        certificate: None,
        second_order: second_order(pop, kkt)?,
        notes: vec!["global minimality of z is assumed, not verified".into()],
    };
    if l_z.is_zero() {
        return Err(Error::DegenerateRemainder);
    }
    let division = modified_mora(&l_z, &verdict.divisors, order)?;
    let essential = division.essential.clone();
    verdict.division = Some(division);
    if essential.is_zero() {
        return Err(Error::DegenerateRemainder);
    }
    let vars = essential.appearing_variables();
    let r = essential.restrict_variables(&vars)?;
    verdict.essential_vars = vars;

    let nc = newton_diagram(&r)?;
    let mut rep = ConditionReport::new("constrained");
    rep.push(meets_axes(&nc));
    rep.push(rint_clause(&r, &nc, opts)?);
    let reg = check_regularity_with(&r, opts)?;
    for c in reg.clauses {
        rep.push(c);
    }
    if rep.status == Status::Pass {
        match sufficiency_certificate(&r, opts) {
            Ok(cert) if verify_certificate(&cert).valid => {
                verdict.certificate = Some(cert);
                verdict.status = MembershipStatus::Certified;
            }
            Ok(_) => unreachable!("builders verify before returning"),
            Err(e) => {
                let mut c = Clause::new("certificate");
                c.record(Status::Inconclusive, Evidence::Note { text: e.to_string() });
                rep.push(c);
                verdict.status = MembershipStatus::Inconclusive;
            }
        }
    } else if rep.status == Status::Inconclusive {
        verdict.status = MembershipStatus::Inconclusive;
    }
    verdict.conditions = rep;
    Ok(verdict)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::rat;

    const POP: &str = "vars: x, y, z, w\n\
                       min: x^3 + y^3 + z^2 + w^4 + 2\n\
                       st: 2 - x^4 - y^4 - z^4 - w^4 >= 0\n\
                       point: -1, -1, 0, 0\n";

    #[test]
    fn paper_pop() {
        let file = parse_pop(POP).unwrap();
        let kkt = solve_multipliers(&file.pop, &file.point).unwrap();
        assert_eq!(kkt.lambda, vec![rat(3, 4)]);
        let v = certify_membership(&file.pop, &kkt, &LocalOrder::anti_graded_lex(4)).unwrap();
        assert_eq!(v.status, MembershipStatus::Certified, "{:?}", v.conditions);
        assert_eq!(v.essential_vars, vec![1, 2, 3]);
        assert!(!v.second_order.positive_definite);
        let d = v.division.unwrap();
        assert_eq!(d.d, 4);
    }

    #[test]
    fn unconstrained_critical_point() {
        let file = parse_pop("min: x^2 + y^2\npoint: 0, 0").unwrap();
        let kkt = solve_multipliers(&file.pop, &file.point).unwrap();
        assert!(kkt.lambda.is_empty() && kkt.mu.is_empty());
        let v = certify_membership(&file.pop, &kkt, &LocalOrder::anti_graded_lex(2)).unwrap();
        assert_eq!(v.status, MembershipStatus::Certified);
    }

    #[test]
    fn interior_point_with_gradient_fails() {
        let file = parse_pop("min: x\nst: 1 - x^2 >= 0\npoint: 0").unwrap();
        assert!(matches!(
            solve_multipliers(&file.pop, &file.point),
            Err(Error::NoMultipliers(_))
        ));
        let bad = parse_pop("min: x\nst: x - 1 >= 0\npoint: 0").unwrap();
        assert!(matches!(
            solve_multipliers(&bad.pop, &bad.point),
            Err(Error::InfeasiblePoint(_))
        ));
    }

    #[test]
    fn odd_vertex_remainder_not_certified() {
        let file = parse_pop("min: x^3\npoint: 0").unwrap();
        let kkt = solve_multipliers(&file.pop, &file.point).unwrap();
        let v = certify_membership(&file.pop, &kkt, &LocalOrder::anti_graded_lex(1)).unwrap();
        assert_eq!(v.status, MembershipStatus::NotCertified);
        assert_eq!(v.conditions.clause("even_vertices").unwrap().status, Status::Fail);
    }

    #[test]
    fn given_multipliers_are_checked() {
        let file = parse_pop(POP).unwrap();
        assert!(given_multipliers(&file.pop, &file.point, vec![rat(1, 2)], vec![]).is_err());
        assert!(given_multipliers(&file.pop, &file.point, vec![rat(3, 4)], vec![]).is_ok());
    }
}
