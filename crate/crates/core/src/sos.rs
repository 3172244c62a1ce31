//! Numerical SOS feasibility by alternating projections on Gram matrices.
//!
//! A polynomial `f` is a sum of squares over a monomial basis `b_1..b_m`
//! iff some PSD matrix `G` satisfies `Σ_{b_i+b_j=γ} G_ij = f_γ` for every
//! exponent `γ`. The oracle alternates between the PSD cone (eigenvalue
//! clipping) and that affine subspace. When the sets are disjoint the
//! iterates settle on a gap whose class-averaged form is a moment matrix
//! `M(y) ⪰ 0` with `Σ y_γ f_γ < 0`, which is reported as the infeasibility
//! witness.
//!
//! Verdicts are numerical. Exact certificates are produced in [`crate::cert`].

use std::collections::BTreeMap;

use nalgebra::{DMatrix, SymmetricEigen};
use num_traits::{One, Signed, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg;
use crate::newton::{Face, Polyhedron};
use crate::poly::{dyadic, to_f64, Exponent, Polynomial, Rational};

/// Tuning knobs for the Gram oracle.
#[derive(Clone, Debug, Serialize)]
pub struct OracleConfig {
    pub max_iter: usize,
    pub conv_tol: f64,
    /// Accept when `λ_min ≥ -psd_tol · max(trace, 1)`.
    pub psd_tol: f64,
    /// Dual value must fall below `-dual_margin` (normalized moments).
    pub dual_margin: f64,
}

impl Default for OracleConfig {
    fn default() -> Self {
        OracleConfig {
            max_iter: 10_000,
            conv_tol: 1e-10,
            psd_tol: 1e-9,
            dual_margin: 1e-6,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SosStatus {
    Feasible,
    Infeasible,
    Inconclusive,
}

/// Outcome of one Gram feasibility problem.
#[derive(Clone, Debug, Serialize)]
pub struct SosVerdict {
    pub status: SosStatus,
    pub basis: Vec<Exponent>,
    /// Gram matrix rounded to multiples of `2^-32` (feasible verdicts only).
    #[serde(serialize_with = "crate::poly::rational_str::matrix")]
    pub gram: Option<Vec<Vec<Rational>>>,
    #[serde(skip)]
    pub gram_f64: Option<Vec<Vec<f64>>>,
    pub min_eig_estimate: f64,
    pub tolerance: f64,
    pub iterations: usize,
    /// Dual value `Σ y_γ f_γ` of the separating functional, when one was found.
    pub dual_value: Option<f64>,
    /// The separating moment vector was also checked in exact arithmetic.
    pub dual_exact: bool,
    pub reason: Option<String>,
}

impl SosVerdict {
    pub fn is_feasible(&self) -> bool {
        self.status == SosStatus::Feasible
    }

    fn structural(basis: Vec<Exponent>, status: SosStatus, reason: String) -> Self {
        SosVerdict {
            status,
            basis,
            gram: None,
            gram_f64: None,
            min_eig_estimate: f64::NAN,
            tolerance: 0.0,
            iterations: 0,
            dual_value: None,
            dual_exact: status == SosStatus::Infeasible,
            reason: Some(reason),
        }
    }
}

/// How the monomial basis of the Gram problem is chosen.
#[derive(Clone, Debug)]
pub enum BasisMode<'a> {
    /// Half of the even part of the Newton polytope of `f`.
    NewtonHalf,
    /// Lattice points of `½γ`.
    Face(&'a Face),
    /// Every monomial of degree between half the lowest and half the highest degree.
    FullDegree,
    Explicit(Vec<Exponent>),
}

/// Numerical SOS test of `f` over the chosen basis.
///
/// ```
/// use newton_sos::poly::{parse_polynomial, VarNames};
/// use newton_sos::sos::{is_sos, BasisMode, SosStatus};
/// let vars = VarNames::new(["x", "y"]);
/// let f = parse_polynomial("x^2*y^2 + y^4", &vars).unwrap();
/// assert_eq!(is_sos(&f, BasisMode::NewtonHalf).unwrap().status, SosStatus::Feasible);
/// ```
pub fn is_sos(f: &Polynomial, mode: BasisMode<'_>) -> Result<SosVerdict> {
    is_sos_with(f, mode, &OracleConfig::default())
}

pub fn is_sos_with(f: &Polynomial, mode: BasisMode<'_>, cfg: &OracleConfig) -> Result<SosVerdict> {
    if f.is_zero() {
        return Err(Error::ZeroPolynomial);
    }
    let basis = match mode {
        BasisMode::NewtonHalf => newton_half_basis(f),
        BasisMode::Face(face) => {
            if let Some(e) = f.support().find(|e| !face.contains_point(e)) {
                return Err(Error::Input(format!("monomial {e} lies off the face")));
            }
            face.half_basis()
        }
        BasisMode::FullDegree => {
            let lo = f.min_degree().unwrap_or(0).div_ceil(2);
            let hi = f.degree().unwrap_or(0) / 2;
            degree_basis(f.nvars(), lo, hi)
        }
        BasisMode::Explicit(b) => {
            if b.is_empty() {
                return Err(Error::EmptyBasis);
            }
            b
        }
    };
    Ok(gram_feasibility(f, basis, cfg))
}

/// Monomials `b` with `2b` in the even Newton polytope of `f`.
///
/// The polytope is approximated from outside by the lower polyhedron, its
/// reflection through the coordinate-wise maximum, and the degree band.
/// Any superset of the true half polytope is a valid basis.
pub fn newton_half_basis(f: &Polynomial) -> Vec<Exponent> {
    let n = f.nvars();
    let even: Vec<Exponent> = f.support().filter(|e| e.is_even()).cloned().collect();
    if even.is_empty() {
        return Vec::new();
    }
    let maxc: Vec<u32> = (0..n)
        .map(|i| even.iter().map(|e| e.coords()[i]).max().unwrap_or(0))
        .collect();
    let reflect = |e: &Exponent| {
        Exponent::new(e.coords().iter().zip(&maxc).map(|(c, m)| m - c).collect())
    };
    let lower = Polyhedron::new(n, even.iter().cloned()).expect("nonempty");
    let upper = Polyhedron::new(n, even.iter().map(reflect)).expect("nonempty");
    let lo = even.iter().map(Exponent::degree).min().unwrap_or(0);
    let hi = even.iter().map(Exponent::degree).max().unwrap_or(0);
    let bounds: Vec<u32> = maxc.iter().map(|m| m / 2).collect();
    box_points(&bounds)
        .into_iter()
        .filter(|b| {
            let two = b.scale(2).expect("small");
            let d = two.degree();
            d >= lo && d <= hi && lower.contains(&two) && upper.contains(&reflect(&two))
        })
        .collect()
}

/// All exponents with total degree in `lo..=hi`.
pub fn degree_basis(n: usize, lo: u64, hi: u64) -> Vec<Exponent> {
    box_points(&vec![hi as u32; n])
        .into_iter()
        .filter(|e| (lo..=hi).contains(&e.degree()))
        .collect()
}

fn box_points(bounds: &[u32]) -> Vec<Exponent> {
    let n = bounds.len();
    let mut out = Vec::new();
    let mut cur = vec![0u32; n];
    loop {
        out.push(Exponent::new(cur.clone()));
        let mut i = 0;
        loop {
            if i == n {
                out.sort();
                return out;
            }
            if cur[i] < bounds[i] {
                cur[i] += 1;
                break;
            }
            cur[i] = 0;
            i += 1;
        }
    }
}

/// Pairs `(i, j)` of basis indices grouped by `b_i + b_j`.
///
/// With several blocks only pairs inside one block are constrained; the
/// diagonal blocks of a PSD matrix are PSD, so the cross entries can be
/// left free.
pub(crate) struct Classes {
    pub exps: Vec<Exponent>,
    pub members: Vec<Vec<(usize, usize)>>,
    pub index: BTreeMap<Exponent, usize>,
    pub pair_class: Vec<Vec<Option<usize>>>,
}

pub(crate) fn block_classes(blocks: &[Vec<Exponent>]) -> Classes {
    let flat: Vec<&Exponent> = blocks.iter().flatten().collect();
    let m = flat.len();
    let mut index: BTreeMap<Exponent, usize> = BTreeMap::new();
    let mut exps = Vec::new();
    let mut members: Vec<Vec<(usize, usize)>> = Vec::new();
    let mut pair_class = vec![vec![None; m]; m];
    let mut offset = 0;
    for block in blocks {
        for i in offset..offset + block.len() {
            for j in offset..offset + block.len() {
                let e = flat[i].checked_add(flat[j]).expect("small exponents");
                let k = *index.entry(e.clone()).or_insert_with(|| {
                    exps.push(e);
                    members.push(Vec::new());
                    members.len() - 1
                });
                members[k].push((i, j));
                pair_class[i][j] = Some(k);
            }
        }
        offset += block.len();
    }
    Classes {
        exps,
        members,
        index,
        pair_class,
    }
}

fn project_affine(x: &mut DMatrix<f64>, cls: &Classes, rhs: &[f64]) {
    for (k, pairs) in cls.members.iter().enumerate() {
        let s: f64 = pairs.iter().map(|&(i, j)| x[(i, j)]).sum();
        let delta = (rhs[k] - s) / pairs.len() as f64;
        for &(i, j) in pairs {
            x[(i, j)] += delta;
        }
    }
}

fn project_psd(y: &DMatrix<f64>) -> (DMatrix<f64>, f64) {
    let eig = SymmetricEigen::new(y.clone());
    let min = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
    let clipped = eig.eigenvalues.map(|l| l.max(0.0));
    let v = &eig.eigenvectors;
    (v * DMatrix::from_diagonal(&clipped) * v.transpose(), min)
}

fn min_eig(y: &DMatrix<f64>) -> f64 {
    SymmetricEigen::new(y.clone())
        .eigenvalues
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min)
}

pub(crate) fn gram_feasibility(f: &Polynomial, basis: Vec<Exponent>, cfg: &OracleConfig) -> SosVerdict {
    gram_feasibility_blocks(f, vec![basis], cfg)
}

/// Joint problem `f = Σ_blocks (SOS over that block)`; the verdict's basis is
/// the concatenation of the blocks.
pub(crate) fn gram_feasibility_blocks(
    f: &Polynomial,
    blocks: Vec<Vec<Exponent>>,
    cfg: &OracleConfig,
) -> SosVerdict {
    let cls = block_classes(&blocks);
    let basis: Vec<Exponent> = blocks.into_iter().flatten().collect();
    if let Some(e) = f.support().find(|e| !cls.index.contains_key(e)) {
        return SosVerdict::structural(
            basis,
            SosStatus::Infeasible,
            format!("monomial {e} is not a product of two basis monomials"),
        );
    }
    let m = basis.len();
    let scale = f.terms().map(|(_, c)| to_f64(c).abs()).fold(0.0, f64::max);
    let rhs: Vec<f64> = cls
        .exps
        .iter()
        .map(|e| to_f64(&f.coeff(e)) / scale)
        .collect();

    let mut x = DMatrix::<f64>::zeros(m, m);
    let mut iterations = 0;
    let mut last_gap = f64::INFINITY;
    let mut verdict = None;
    while iterations < cfg.max_iter {
        iterations += 1;
        let mut y = x.clone();
        project_affine(&mut y, &cls, &rhs);
        let (xp, lmin) = project_psd(&y);
        let trace = y.trace().abs().max(1.0);
        if lmin >= -cfg.psd_tol * trace {
            verdict = Some((SosStatus::Feasible, y, lmin));
            break;
        }
        let step = (&xp - &x).norm();
        x = xp;
        if iterations % 50 == 0 || step < cfg.conv_tol {
            let gap = (&x - &y).norm();
            if let Some(dual) = separating_functional(&x, &y, &cls, &rhs, f, cfg) {
                return SosVerdict {
                    status: SosStatus::Infeasible,
                    basis,
                    gram: None,
                    gram_f64: None,
                    min_eig_estimate: lmin,
                    tolerance: cfg.psd_tol,
                    iterations,
                    dual_value: Some(dual.0),
                    dual_exact: dual.1,
                    reason: None,
                };
            }
            // a vanishing step with a persistent gap means the sets are
            // (numerically) disjoint but the dual test was not conclusive
            if step < cfg.conv_tol * 1e-3 && (last_gap - gap).abs() < cfg.conv_tol {
                break;
            }
            last_gap = gap;
        }
    }
    match verdict {
        Some((status, y, lmin)) => {
            let g: Vec<Vec<f64>> = (0..m)
                .map(|i| (0..m).map(|j| 0.5 * (y[(i, j)] + y[(j, i)]) * scale).collect())
                .collect();
            let gram = g
                .iter()
                .map(|row| row.iter().map(|&v| dyadic(v, 32)).collect())
                .collect();
            SosVerdict {
                status,
                basis,
                gram: Some(gram),
                gram_f64: Some(g),
                min_eig_estimate: lmin * scale,
                tolerance: cfg.psd_tol,
                iterations,
                dual_value: None,
                dual_exact: false,
                reason: None,
            }
        }
        None => SosVerdict {
            status: SosStatus::Inconclusive,
            min_eig_estimate: min_eig(&x) * scale,
            basis,
            gram: None,
            gram_f64: None,
            tolerance: cfg.psd_tol,
            iterations,
            dual_value: None,
            dual_exact: false,
            reason: Some("alternating projections did not settle".into()),
        },
    }
}

/// Class-averages the gap `P_psd(y) - y` into a moment vector and tests it.
fn separating_functional(
    xp: &DMatrix<f64>,
    y: &DMatrix<f64>,
    cls: &Classes,
    rhs: &[f64],
    f: &Polynomial,
    cfg: &OracleConfig,
) -> Option<(f64, bool)> {
    let d = xp - y;
    let mut mom: Vec<f64> = cls
        .members
        .iter()
        .map(|pairs| pairs.iter().map(|&(i, j)| d[(i, j)]).sum::<f64>() / pairs.len() as f64)
        .collect();
    let norm = mom.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm < 1e-300 {
        return None;
    }
    for v in mom.iter_mut() {
        *v /= norm;
    }
    let m = cls.pair_class.len();
    let mut mm = DMatrix::<f64>::zeros(m, m);
    for (k, pairs) in cls.members.iter().enumerate() {
        for &(i, j) in pairs {
            mm[(i, j)] = mom[k];
        }
    }
    let lmin = min_eig(&mm);
    let value: f64 = mom.iter().zip(rhs).map(|(a, b)| a * b).sum();
    if lmin < -cfg.psd_tol || value > -cfg.dual_margin {
        return None;
    }
    // exact confirmation with rounded moments
    let ymom: Vec<Rational> = mom.iter().map(|&v| dyadic(v, 40)).collect();
    let exact_m: linalg::Matrix = (0..m)
        .map(|i| {
            (0..m)
                .map(|j| match cls.pair_class[i][j] {
                    Some(k) => ymom[k].clone(),
                    None => Rational::zero(),
                })
                .collect()
        })
        .collect();
    let exact_value: Rational = cls
        .exps
        .iter()
        .zip(&ymom)
        .map(|(e, yv)| f.coeff(e) * yv)
        .sum();
    let exact = exact_value.is_negative() && linalg::is_psd(&exact_m);
    Some((value, exact))
}

/// Largest `ε = 2^-k` on the grid with `f_γ - ε p_γ` numerically SOS over `½γ`
/// and `f_γ - (ε/2) p_γ` exactly SOS.
///
/// ```
/// use newton_sos::newton::newton_diagram;
/// use newton_sos::poly::{parse_polynomial, VarNames};
/// use newton_sos::sos::rint_membership;
/// let vars = VarNames::new(["x", "y"]);
/// let f = parse_polynomial("x^16 + y^10", &vars).unwrap();
/// let nc = newton_diagram(&f).unwrap();
/// let face = nc.maximal().next().unwrap();
/// assert!(rint_membership(&f, face).unwrap().is_some());
/// ```
pub fn rint_membership(f_gamma: &Polynomial, face: &Face) -> Result<Option<Rational>> {
    rint_membership_grid(f_gamma, face, &default_eps_grid(), &OracleConfig::default())
}

/// `2^-k` for `k = 0..=40`.
pub fn default_eps_grid() -> Vec<Rational> {
    eps_grid(40)
}

pub fn eps_grid(kmax: u32) -> Vec<Rational> {
    let two = Rational::from_integer(2.into());
    let mut out = Vec::new();
    let mut e = Rational::one();
    for _ in 0..=kmax {
        out.push(e.clone());
        e /= &two;
    }
    out
}

pub fn rint_membership_grid(
    f_gamma: &Polynomial,
    face: &Face,
    grid: &[Rational],
    cfg: &OracleConfig,
) -> Result<Option<Rational>> {
    let p = face.principal_polynomial()?;
    let basis = face.half_basis();
    for eps in grid {
        let g = f_gamma.try_sub(&p.scale(eps))?;
        if g.is_zero() {
            return Ok(Some(eps.clone()));
        }
        if !gram_feasibility(&g, basis.clone(), cfg).is_feasible() {
            continue;
        }
        // The numeric verdict tolerates eigenvalues down to about -tol, which
        // lets boundary faces through at tiny ε; confirm exactly at ε/2.
        let half = eps / Rational::from_integer(2.into());
        let t = f_gamma.try_sub(&p.scale(&half))?;
        if crate::cert::exact_block_sos(&t, std::slice::from_ref(&basis), &half, cfg)?.is_some() {
            return Ok(Some(eps.clone()));
        }
    }
    Ok(None)
}

/// Smallest `M` (to bisection accuracy) with `f + M Σ x_i^{2d}` numerically SOS.
///
/// The returned value is always one that passed the oracle.
pub fn gm_bound(f: &Polynomial) -> Result<Rational> {
    gm_bound_with(f, &OracleConfig::default())
}

pub fn gm_bound_with(f: &Polynomial, cfg: &OracleConfig) -> Result<Rational> {
    if f.is_zero() {
        return Ok(Rational::zero());
    }
    let deg = f.degree().expect("nonzero");
    if !f.is_homogeneous() || deg % 2 == 1 {
        return Err(Error::NotEvenForm);
    }
    let n = f.nvars();
    let d = deg / 2;
    let basis = degree_basis(n, d, d);
    let diag = Polynomial::from_terms(
        n,
        (0..n).map(|i| (Exponent::axis(n, i, deg as u32), Rational::one())),
    )?;
    let feasible = |m: &Rational| -> Result<bool> {
        let g = f.try_add(&diag.scale(m))?;
        if g.is_zero() {
            return Ok(true);
        }
        Ok(gram_feasibility(&g, basis.clone(), cfg).is_feasible())
    };
    if feasible(&Rational::zero())? {
        return Ok(Rational::zero());
    }
    let two = Rational::from_integer(2.into());
    let mut hi = Rational::one();
    let cap = Rational::from_integer(num_bigint::BigInt::one() << 64);
    while !feasible(&hi)? {
        hi *= &two;
        if hi > cap {
            return Err(Error::BoundCapReached);
        }
    }
    let mut lo = Rational::zero();
    let resolution = &hi / Rational::from_integer((1u64 << 20).into());
    while &hi - &lo > resolution {
        let mid = (&lo + &hi) / &two;
        if feasible(&mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::newton::newton_diagram;
    use crate::poly::{parse_polynomial, VarNames};

    fn p(s: &str) -> Polynomial {
        parse_polynomial(s, &VarNames::new(["x", "y"])).unwrap()
    }

    #[test]
    fn explicit_squares_are_feasible() {
        let v = is_sos(&p("x^2*y^2 + y^4"), BasisMode::NewtonHalf).unwrap();
        assert!(v.is_feasible());
        assert_eq!(v.basis, vec![Exponent::new(vec![0, 2]), Exponent::new(vec![1, 1])]);
    }

    #[test]
    fn face_basis_for_second_edge() {
        let f = p("x^6 + x^4*y + x^3*y^3 + x^2*y^2 + y^4");
        let nc = newton_diagram(&f).unwrap();
        let face = nc.maximal().nth(1).unwrap();
        assert_eq!(
            face.half_basis(),
            vec![Exponent::new(vec![1, 1]), Exponent::new(vec![3, 0])]
        );
        let fg = p("x^6 + x^4*y + x^2*y^2");
        assert!(is_sos(&fg, BasisMode::Face(face)).unwrap().is_feasible());
    }

    #[test]
    fn odd_monomial_is_infeasible() {
        let v = is_sos(&p("x^13*y^2"), BasisMode::NewtonHalf).unwrap();
        assert_eq!(v.status, SosStatus::Infeasible);
    }

    #[test]
    fn indefinite_form_is_infeasible() {
        let v = is_sos(&p("x^2 - 3x*y + y^2"), BasisMode::NewtonHalf).unwrap();
        assert_eq!(v.status, SosStatus::Infeasible);
        assert!(v.dual_value.unwrap() < 0.0);
    }

    #[test]
    fn motzkin_like_needs_more_than_monomials() {
        // x^4 y^2 + x^2 y^4 - 3x^2y^2 + 1 is the classic nonnegative non-SOS form (dehomogenized)
        let f = parse_polynomial("x^4*y^2 + x^2*y^4 - 3x^2*y^2 + 1", &VarNames::new(["x", "y"])).unwrap();
        let v = is_sos(&f, BasisMode::NewtonHalf).unwrap();
        assert_ne!(v.status, SosStatus::Feasible);
    }

    #[test]
    fn gm_bound_values() {
        let m = to_f64(&gm_bound(&p("-2x^2*y^2")).unwrap());
        assert!((m - 1.0).abs() < 1e-3, "{m}");
        assert_eq!(gm_bound(&Polynomial::zero(2)).unwrap(), Rational::zero());
        // x^3y + M(x^4+y^4) >= 0 iff M^4 >= 27/256
        let m = to_f64(&gm_bound(&p("x^3*y")).unwrap());
        let exact = 27f64.powf(0.25) / 4.0;
        assert!((m - exact).abs() < 1e-3, "{m} vs {exact}");
        assert!(matches!(gm_bound(&p("x^3")), Err(Error::NotEvenForm)));
    }
}
