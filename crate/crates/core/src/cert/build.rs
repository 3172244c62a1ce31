//! Whole-polynomial certificates: the diagram/bconv construction and the
//! lowest-homogeneous-part construction, both sharing the degree-level tail
//! machinery.

use std::collections::BTreeMap;

use num_traits::{One, Signed, Zero};

use super::binary::{face_block, monomial_sos_with};
use super::{exact_block_sos, split_odd_exponent, verify_certificate, LocalSosCertificate};
use crate::bconv::{bconv_member, default_depth, BconvWitness};
use crate::error::{Error, Result};
use crate::newton::{even_region, newton_diagram, Face, NewtonComplex};
use crate::poly::{Exponent, Polynomial, Rational, WeightVector};
use crate::sos::{default_eps_grid, degree_basis, gram_feasibility_blocks, OracleConfig};

/// Knobs shared by the certificate builders.
#[derive(Clone, Debug)]
pub struct BuildOptions {
    /// Candidate values of `ε`, largest first.
    pub eps_grid: Vec<Rational>,
    /// bconv search depth; `None` uses `1 + |α|`.
    pub bconv_depth: Option<usize>,
    /// Terms above this degree go through the homogeneous tail levels
    /// instead of bconv witnesses.
    pub cutoff: Option<u64>,
    pub oracle: OracleConfig,
}

impl Default for BuildOptions {
    fn default() -> Self {
        BuildOptions {
            eps_grid: default_eps_grid(),
            bconv_depth: None,
            cutoff: None,
            oracle: OracleConfig::default(),
        }
    }
}

fn two() -> Rational {
    Rational::from_integer(2.into())
}

fn ratio(n: usize) -> Rational {
    Rational::from_integer((n as i64).into())
}

fn check_origin(f: &Polynomial) -> Result<()> {
    if f.is_zero() {
        return Err(Error::ZeroPolynomial);
    }
    let c = f.constant_term();
    if !c.is_zero() {
        return Err(Error::NonzeroConstant(c.to_string()));
    }
    Ok(())
}

/// Largest grid `ε` with `f_Γ − ε Σ_γ p_γ` a sum of per-face SOS over `½γ`.
pub fn diagram_rint(
    f_diagram: &Polynomial,
    faces: &[&Face],
    grid: &[Rational],
    cfg: &OracleConfig,
) -> Result<Option<Rational>> {
    let n = f_diagram.nvars();
    let mut psum = Polynomial::zero(n);
    for g in faces {
        psum = psum.try_add(&g.principal_polynomial()?)?;
    }
    let blocks: Vec<Vec<Exponent>> = faces.iter().map(|g| g.half_basis()).collect();
    for eps in grid {
        let target = f_diagram.try_sub(&psum.scale(eps))?;
        if target.is_zero() || gram_feasibility_blocks(&target, blocks.clone(), cfg).is_feasible() {
            return Ok(Some(eps.clone()));
        }
    }
    Ok(None)
}

/// Exact squares for `f_Γ − e Σ p_γ`, returning `e`.
fn diagram_block(
    f_diagram: &Polynomial,
    faces: &[&Face],
    opts: &BuildOptions,
) -> Result<(Rational, LocalSosCertificate)> {
    let n = f_diagram.nvars();
    let eps = diagram_rint(f_diagram, faces, &opts.eps_grid, &opts.oracle)?
        .ok_or_else(|| Error::Certificate("diagram part not verified in the relative interior".into()))?;
    let mut psum = Polynomial::zero(n);
    for g in faces {
        psum = psum.try_add(&g.principal_polynomial()?)?;
    }
    let blocks: Vec<Vec<Exponent>> = faces.iter().map(|g| g.half_basis()).collect();
    let mut e = eps;
    for _ in 0..=10 {
        let half = &e / two();
        let target = f_diagram.try_sub(&psum.scale(&half))?;
        let mut cert = LocalSosCertificate::new(target.clone());
        if target.is_zero() {
            return Ok((half, cert));
        }
        if let Some(sq) = exact_block_sos(&target, &blocks, &half, &opts.oracle)? {
            for s in sq.into_iter().flatten() {
                cert.push_square(s.c, s.p);
            }
            return Ok((half, cert));
        }
        e = half;
    }
    Err(Error::Certificate("inexact block: rationalized Gram matrix not PSD".into()))
}

/// Even `β, β'` with `β + β' = 2α`: one degree apart for odd `|α|`, on the
/// same degree otherwise (odd coordinates alternately rounded down and up).
fn split_tail_exponent(alpha: &Exponent) -> Result<(Exponent, Exponent)> {
    if alpha.degree() % 2 == 1 {
        let s = split_odd_exponent(alpha)?;
        return Ok((s.beta, s.beta_prime));
    }
    let mut down = true;
    let mut beta = Vec::with_capacity(alpha.nvars());
    let mut beta_prime = Vec::with_capacity(alpha.nvars());
    for &a in alpha.coords() {
        if a % 2 == 0 {
            beta.push(a);
            beta_prime.push(a);
        } else {
            let (lo, hi) = if down { (a - 1, a + 1) } else { (a + 1, a - 1) };
            beta.push(lo);
            beta_prime.push(hi);
            down = !down;
        }
    }
    Ok((Exponent::new(beta), Exponent::new(beta_prime)))
}

/// Output of the tail machinery.
struct Tail {
    cert: LocalSosCertificate,
    /// `Σ_k M_{2k} x_i^{2k}` still owed on each axis.
    axis_demand: Vec<Polynomial>,
    levels: Vec<(u64, Rational)>,
}

/// Certifies `tail + levels₀ + Σ_k M_{2k} Σ_i x_i^{2k}` where `levels₀` are
/// negative demands already placed on even degrees.
///
/// Even positive terms become squares; odd terms `c x^α` with `|α| = 2k+1`
/// become `(x^{β/2} + c/2 x^{β'/2})²`, borrowing `x^β` from level `2k` and
/// `c²/4 x^{β'}` from level `2k+2`; each level `H_{2k}` is then closed by a
/// power-of-two `M_{2k}` large enough for an exact SOS over all degree-`k`
/// monomials.
fn tail_certificate(
    tail: &Polynomial,
    mut levels: BTreeMap<u64, Polynomial>,
    cfg: &OracleConfig,
) -> Result<Tail> {
    let n = tail.nvars();
    let mut cert = LocalSosCertificate::new(Polynomial::zero(n));
    let one = Rational::one();
    for (alpha, c) in tail.terms() {
        if alpha.is_even() {
            if c.is_positive() {
                cert.push_monomial_square(c.clone(), alpha);
            } else {
                levels
                    .entry(alpha.degree())
                    .or_insert_with(|| Polynomial::zero(n))
                    .add_term(alpha.clone(), c.clone());
            }
            continue;
        }
        let (beta, beta_prime) = split_tail_exponent(alpha)?;
        let inner = Polynomial::monomial(beta.half().expect("even"), one.clone()).try_add(
            &Polynomial::monomial(beta_prime.half().expect("even"), c / two()),
        )?;
        cert.push_square(one.clone(), inner);
        levels
            .entry(beta.degree())
            .or_insert_with(|| Polynomial::zero(n))
            .add_term(beta, -one.clone());
        levels
            .entry(beta_prime.degree())
            .or_insert_with(|| Polynomial::zero(n))
            .add_term(beta_prime, -(c * c) / Rational::from_integer(4.into()));
    }

    let mut axis_demand = vec![Polynomial::zero(n); n];
    let mut used = Vec::new();
    for (deg, demand) in levels {
        if demand.is_zero() {
            continue;
        }
        let k = deg / 2;
        let basis = degree_basis(n, k, k);
        let diag = Polynomial::from_terms(
            n,
            (0..n).map(|i| (Exponent::axis(n, i, deg as u32), one.clone())),
        )?;
        let need: Rational = demand.terms().map(|(_, c)| c.abs()).sum();
        let mut m = one.clone();
        while m < need {
            m *= two();
        }
        let mut done = false;
        for _ in 0..64 {
            let h = demand.try_add(&diag.scale(&m))?;
            let margin = &m / (two() * ratio(basis.len()));
            if let Some(sq) = exact_block_sos(&h, std::slice::from_ref(&basis), &margin, cfg)? {
                for s in sq.into_iter().flatten() {
                    cert.push_square(s.c, s.p);
                }
                done = true;
                break;
            }
            m *= two();
        }
        if !done {
            return Err(Error::BoundCapReached);
        }
        for (i, d) in axis_demand.iter_mut().enumerate() {
            d.add_term(Exponent::axis(n, i, deg as u32), m.clone());
        }
        used.push((deg, m));
    }
    Ok(Tail {
        cert,
        axis_demand,
        levels: used,
    })
}

/// Attaches the axis demands to unit residuals `x_i^{a_i}(c₀ − Σ M x_i^{2k−a_i})`.
fn settle_axes(
    cert: &mut LocalSosCertificate,
    reserve: &mut BTreeMap<Exponent, Rational>,
    axis_demand: &[Polynomial],
) -> Result<()> {
    let n = axis_demand.len();
    for (i, demand) in axis_demand.iter().enumerate() {
        if demand.is_zero() {
            continue;
        }
        let base = reserve
            .keys()
            .filter(|e| e.variables().all(|j| j == i) && e.coords()[i] > 0)
            .min()
            .cloned()
            .ok_or_else(|| {
                Error::Certificate(format!("no even axis point for variable {} to pay the tail", i + 1))
            })?;
        let c0 = reserve.remove(&base).expect("present");
        let mut u = Polynomial::zero(n);
        for (e, c) in demand.terms() {
            let omega = e
                .checked_sub(&base)
                .ok_or_else(|| Error::Certificate("tail level below the axis vertex".into()))?;
            u.add_term(omega, c.clone());
        }
        cert.push_residual(base, c0, u);
    }
    Ok(())
}

/// Certificate following the face-wise construction.
///
/// `f_Γ` is split exactly into per-face pieces `h_γ` with `h_γ − e p_γ` a
/// sum of squares. Each face's reserve `e p_γ` is divided evenly between the
/// bad monomials assigned to it (one `monomial_sos` block each) and a final
/// share that becomes squares or pays the tail. Good monomials off the
/// diagram are squares. With `opts.cutoff = Some(c)` monomials of degree
/// above `c` are handled by the tail levels instead of bconv.
pub fn sufficiency_certificate(f: &Polynomial, opts: &BuildOptions) -> Result<LocalSosCertificate> {
    check_origin(f)?;
    let nc = newton_diagram(f)?;
    certificate_from_diagram(f, &nc, opts)
}

pub(crate) fn certificate_from_diagram(
    f: &Polynomial,
    nc: &NewtonComplex,
    opts: &BuildOptions,
) -> Result<LocalSosCertificate> {
    let n = f.nvars();
    for v in &nc.vertices {
        if !v.is_even() || !f.coeff(v).is_positive() {
            return Err(Error::Certificate(format!(
                "vertex {v} must be even with a positive coefficient"
            )));
        }
    }
    let faces: Vec<&Face> = nc.maximal().collect();
    let f_diagram = nc.diagram_part(f);
    let mut cert = LocalSosCertificate::new(f.clone());
    cert.metadata.route = if opts.cutoff.is_some() { "sufficiency_with_tail" } else { "sufficiency" }.into();

    let (e, block) = diagram_block(&f_diagram, &faces, opts)?;
    cert.absorb(block);
    cert.metadata.epsilons.push(("eps_face".into(), e.clone()));

    // off-diagram terms
    let rest = f.try_sub(&f_diagram)?;
    let (low, tail) = match opts.cutoff {
        Some(c) => (
            rest.filter(|a, _| a.degree() <= c),
            rest.filter(|a, _| a.degree() > c),
        ),
        None => (rest, Polynomial::zero(n)),
    };
    let mut bad: Vec<Vec<(Exponent, Rational, BconvWitness)>> = vec![Vec::new(); faces.len()];
    for (alpha, c) in low.terms() {
        if alpha.is_even() && c.is_positive() {
            cert.push_monomial_square(c.clone(), alpha);
            continue;
        }
        let mut placed = false;
        for (gi, g) in faces.iter().enumerate() {
            let fg = f.filter(|a, _| g.lattice_points.contains(a));
            let region = even_region(&fg)?;
            let depth = opts.bconv_depth.unwrap_or_else(|| default_depth(alpha));
            if let Some(w) = bconv_member(alpha, &region, depth).witness() {
                bad[gi].push((alpha.clone(), c.clone(), w.clone()));
                placed = true;
                break;
            }
        }
        if !placed {
            return Err(Error::Certificate(format!(
                "monomial {alpha} has no bconv witness on any maximal face"
            )));
        }
    }

    let mut reserve: BTreeMap<Exponent, Rational> = BTreeMap::new();
    for (g, list) in faces.iter().zip(&bad) {
        let share = &e / ratio(list.len() + 1);
        let p = g.principal_polynomial()?;
        for (alpha, c, w) in list {
            let part = monomial_sos_with(&p.scale(&share), g, c, alpha, &share, w, &opts.oracle)?;
            cert.absorb(part);
        }
        for b in g.even_points() {
            *reserve.entry(b).or_insert_with(Rational::zero) += &share;
        }
    }

    if !tail.is_zero() {
        let t = tail_certificate(&tail, BTreeMap::new(), &opts.oracle)?;
        cert.absorb(t.cert);
        settle_axes(&mut cert, &mut reserve, &t.axis_demand)?;
        for (deg, m) in t.levels {
            cert.metadata.constants.push((format!("M{deg}"), m));
        }
    }
    for (b, c) in reserve {
        cert.push_monomial_square(c, &b);
    }
    cert.target = f.clone();
    finish(cert)
}

fn finish(cert: LocalSosCertificate) -> Result<LocalSosCertificate> {
    let v = verify_certificate(&cert);
    if v.valid {
        Ok(cert)
    } else {
        Err(Error::Certificate(format!("expansion mismatch: {:?}", v.problems)))
    }
}

/// The face `|α| = 2m` of the full simplex, used for the lowest part.
pub fn degree_plane_face(n: usize, two_m: u32, lattice_points: Vec<Exponent>) -> Face {
    Face {
        dim: n - 1,
        vertices: (0..n).map(|i| Exponent::axis(n, i, two_m)).collect(),
        normal: WeightVector {
            a: vec![1; n],
            v: two_m as i64,
        },
        lattice_points,
    }
}

/// Certificate when the lowest homogeneous part `f_{2m}` is in the relative
/// interior of the SOS cone of degree-`2m` forms.
///
/// `f_{2m} − ε p` is squares; the remaining `ε p` lends `C_α x^{β(α)}` to
/// the degree `2m+1` terms and keeps `x_i^{2m}` as unit residuals paying
/// `Σ_k M_{2k} x_i^{2k}` for the tail levels.
pub fn homogeneous_lowest_certificate(f: &Polynomial, opts: &BuildOptions) -> Result<LocalSosCertificate> {
    check_origin(f)?;
    let n = f.nvars();
    let two_m = f.min_degree().expect("nonzero");
    let mut cert = LocalSosCertificate::new(f.clone());
    cert.metadata.route = "homogeneous_lowest".into();

    if f.terms().all(|(a, c)| a.is_even() && c.is_positive()) {
        for (a, c) in f.terms() {
            cert.push_monomial_square(c.clone(), a);
        }
        return finish(cert);
    }
    let lowest = f.homogeneous_part(two_m);
    if lowest.len() == 1 {
        let (b, c) = lowest.terms().next().map(|(b, c)| (b.clone(), c.clone())).expect("one term");
        if b.is_even() && c.is_positive() && f.support().all(|e| b.divides(e)) {
            let mut u = Polynomial::zero(n);
            for (e, coef) in f.terms() {
                if *e != b {
                    u.add_term(e.checked_sub(&b).expect("divides"), -coef.clone());
                }
            }
            cert.push_residual(b, c, u);
            return finish(cert);
        }
    }
    if two_m % 2 == 1 {
        return Err(Error::Certificate("lowest homogeneous part has odd degree".into()));
    }

    let face = degree_plane_face(n, two_m as u32, lowest.support().cloned().collect());
    let eps_r = crate::sos::rint_membership_grid(&lowest, &face, &opts.eps_grid, &opts.oracle)?
        .ok_or_else(|| Error::Certificate("lowest part not verified in the relative interior".into()))?;
    let (eps1, block) = face_block(&lowest, &face, &eps_r, &opts.oracle)?;
    cert.absorb(block);
    cert.metadata.epsilons.push(("eps".into(), eps1.clone()));

    let mut budget: BTreeMap<Exponent, Rational> =
        face.even_points().into_iter().map(|b| (b, eps1.clone())).collect();

    // degree 2m+1 terms borrow from the budget
    let next = f.homogeneous_part(two_m + 1);
    let mut splits = Vec::new();
    let mut sharing: BTreeMap<Exponent, usize> = BTreeMap::new();
    for (alpha, c) in next.terms() {
        let s = split_odd_exponent(alpha)?;
        *sharing.entry(s.beta.clone()).or_default() += 1;
        splits.push((s, c.clone()));
    }
    let mut levels: BTreeMap<u64, Polynomial> = BTreeMap::new();
    for (s, c) in &splits {
        let cap = &eps1 / (two() * ratio(sharing[&s.beta]));
        *budget.get_mut(&s.beta).expect("even point of the plane") -= &cap;
        let inner = Polynomial::monomial(s.beta.half().expect("even"), Rational::one()).try_add(
            &Polynomial::monomial(s.beta_prime.half().expect("even"), c / (two() * &cap)),
        )?;
        cert.push_square(cap.clone(), inner);
        levels
            .entry(s.beta_prime.degree())
            .or_insert_with(|| Polynomial::zero(n))
            .add_term(s.beta_prime.clone(), -(c * c) / (Rational::from_integer(4.into()) * &cap));
    }

    let tail = f.filter(|a, _| a.degree() > two_m + 1);
    let t = tail_certificate(&tail, levels, &opts.oracle)?;
    cert.absorb(t.cert);
    settle_axes(&mut cert, &mut budget, &t.axis_demand)?;
    for (deg, m) in t.levels {
        cert.metadata.constants.push((format!("M{deg}"), m));
    }
    for (b, c) in budget {
        cert.push_monomial_square(c, &b);
    }
    cert.target = f.clone();
    finish(cert)
}
