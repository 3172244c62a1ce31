//! Square completions along a binary combination, and their use to absorb
//! a single monomial next to a face.

use std::collections::BTreeMap;

use num_traits::{One, Signed, Zero};

use super::{exact_block_sos, verify_certificate, LocalSosCertificate};
use crate::bconv::BconvWitness;
use crate::error::{Error, Result};
use crate::newton::Face;
use crate::poly::{Exponent, Polynomial, Rational};
use crate::sos::OracleConfig;

/// Output of [`binary_sos_certificate`].
#[derive(Clone, Debug)]
pub struct BinarySos {
    pub certificate: LocalSosCertificate,
    /// The constant `M` placed on `x^{β^t}`.
    pub m: Rational,
    pub t: usize,
    /// `L` when `t ≤ N`.
    pub l: Option<Rational>,
    /// `C_1..C_{t-1}` (all of `C_1..C_N` when `t = N+1`).
    pub c: Vec<Rational>,
    /// `D_{t+1}..D_N` when `t < N`.
    pub d: Vec<Rational>,
    /// Coefficient of the last square `(x^{β^{N+1}/2})²`.
    pub residual_constant: Rational,
}

fn two() -> Rational {
    Rational::from_integer(2.into())
}

fn mono(e: &Exponent, c: Rational) -> Polynomial {
    Polynomial::monomial(e.clone(), c)
}

/// `c1 x^a − c2 x^b` as a polynomial.
fn binomial(a: &Exponent, b: &Exponent, c2: &Rational) -> Polynomial {
    mono(a, Rational::one()).try_sub(&mono(b, c2.clone())).expect("same dimension")
}

/// Certificate for `Σ_{k=1}^{N+1} ε x^{β^k} − a x^α + M x^{β^t}`.
///
/// With `h_k = β^k/2` and tails `τ_j`, the squares are
/// `ε(x^{h_j} − C_j x^{τ_j})²` with `C_1 = a/(2ε)`, `C_j = C_{j-1}²/2`. For
/// `t = N+1` this ends with `M = ε C_N²`. For `t ≤ N` the chain is cut at `t`
/// by `L(x^{h_t} − κ/(2L) x^{τ_t})²` and continued with constants
/// `D_{t+1} = κ²/(8εL)`, `D_j = D_{j-1}²/2`; `L` is the smallest power of two
/// leaving a positive last coefficient, doubled once, and `M = L`.
pub fn binary_sos_certificate(
    eps: &Rational,
    a: &Rational,
    t: usize,
    w: &BconvWitness,
) -> Result<BinarySos> {
    if !eps.is_positive() {
        return Err(Error::Input("ε must be positive".into()));
    }
    let nn = w.depth();
    if t == 0 || t > nn + 1 {
        return Err(Error::Input(format!("t = {t} outside 1..={}", nn + 1)));
    }
    let tails = w.tails()?;
    let halves: Vec<Exponent> = w
        .betas
        .iter()
        .map(|b| b.half().ok_or_else(|| Error::InvalidWitness(format!("{b} is not even"))))
        .collect::<Result<_>>()?;
    let n = w.target.nvars();
    let mut cert = LocalSosCertificate::new(Polynomial::zero(n));
    let mut cs = Vec::new();
    let mut ds = Vec::new();
    let mut l_out = None;
    let m;
    let residual_constant;

    if a.is_zero() {
        for h in &halves {
            cert.push_square(eps.clone(), mono(h, Rational::one()));
        }
        m = Rational::zero();
        residual_constant = eps.clone();
    } else {
        let chain_end = if t == nn + 1 { nn } else { t - 1 };
        let mut c = a / (two() * eps);
        for j in 1..=chain_end {
            if j > 1 {
                c = &c * &c / two();
            }
            cert.push_square(eps.clone(), binomial(&halves[j - 1], &tails[j - 1], &c));
            cs.push(c.clone());
        }
        if t == nn + 1 {
            m = eps * &c * &c;
            residual_constant = eps + &m - eps * &c * &c;
        } else {
            let kappa = if t == 1 { a.clone() } else { eps * &c * &c };
            let last = |l: &Rational| -> (Rational, Vec<Rational>) {
                let k = &kappa * &kappa / (Rational::from_integer(4.into()) * l);
                if t == nn {
                    return (eps - k, Vec::new());
                }
                let mut d = k / (two() * eps);
                let mut dd = vec![d.clone()];
                for _ in t + 2..=nn {
                    d = &d * &d / two();
                    dd.push(d.clone());
                }
                (eps * (Rational::one() - &d * &d), dd)
            };
            let mut l = Rational::one();
            if last(&l).0.is_positive() {
                for _ in 0..256 {
                    let half = &l / two();
                    if !last(&half).0.is_positive() {
                        break;
                    }
                    l = half;
                }
            } else {
                while !last(&l).0.is_positive() {
                    l *= two();
                }
            }
            l *= two();
            let (fin, dd) = last(&l);
            cert.push_square(
                l.clone(),
                binomial(&halves[t - 1], &tails[t - 1], &(&kappa / (two() * &l))),
            );
            cert.push_square(eps.clone(), mono(&halves[t - 1], Rational::one()));
            for (j, d) in (t + 1..=nn).zip(&dd) {
                cert.push_square(eps.clone(), binomial(&halves[j - 1], &tails[j - 1], d));
            }
            ds = dd;
            m = l.clone();
            l_out = Some(l);
            residual_constant = fin;
        }
        cert.push_square(residual_constant.clone(), mono(&halves[nn], Rational::one()));
    }

    let mut target = Polynomial::zero(n);
    for b in &w.betas {
        target.add_term(b.clone(), eps.clone());
    }
    target.add_term(w.target.clone(), -a.clone());
    target.add_term(w.betas[t - 1].clone(), m.clone());
    cert.target = target;
    cert.metadata.route = "binary_sos".into();
    cert.metadata.epsilons.push(("eps".into(), eps.clone()));
    cert.metadata.constants.push(("M".into(), m.clone()));
    for (j, c) in cs.iter().enumerate() {
        cert.metadata.constants.push((format!("C{}", j + 1), c.clone()));
    }
    for (j, d) in ds.iter().enumerate() {
        cert.metadata.constants.push((format!("D{}", t + 1 + j), d.clone()));
    }
    if let Some(l) = &l_out {
        cert.metadata.constants.push(("L".into(), l.clone()));
    }
    cert.metadata.witnesses.push(w.clone());
    let v = verify_certificate(&cert);
    if !v.valid {
        return Err(Error::Certificate(format!(
            "binary_sos expansion mismatch: {:?}",
            v.problems
        )));
    }
    Ok(BinarySos {
        certificate: cert,
        m,
        t,
        l: l_out,
        c: cs,
        d: ds,
        residual_constant,
    })
}

/// Exact squares for `F − ε₁ p_γ`, shrinking `ε` up to ten times.
///
/// Returns `(ε₁, certificate of F − ε₁ p_γ)`; the numeric Gram is taken for
/// `F − 2ε₁ p_γ` and shifted back by `ε₁ I`.
pub(crate) fn face_block(
    f_face: &Polynomial,
    face: &Face,
    eps: &Rational,
    cfg: &OracleConfig,
) -> Result<(Rational, LocalSosCertificate)> {
    let p = face.principal_polynomial()?;
    let basis = face.half_basis();
    let mut e = eps.clone();
    for _ in 0..=10 {
        let half = &e / two();
        let target = f_face.try_sub(&p.scale(&half))?;
        let mut cert = LocalSosCertificate::new(target.clone());
        if target.is_zero() {
            return Ok((half, cert));
        }
        if let Some(blocks) = exact_block_sos(&target, std::slice::from_ref(&basis), &half, cfg)? {
            for s in blocks.into_iter().flatten() {
                cert.push_square(s.c, s.p);
            }
            return Ok((half, cert));
        }
        e = half;
    }
    Err(Error::Certificate("inexact block: rationalized Gram matrix not PSD".into()))
}

/// Certificate for `F + a x^α` where `F` lives on the face `γ`, `α ∉ γ`.
///
/// Three blocks: `F − ε p_γ` as exact squares; `ε p_γ − ε/(N+2) Σ x^{β^k} − M x^{β^t}`
/// as monomial squares plus unit residuals (an off-face `β` is written
/// `x^{b̃}·x^{β−b̃}` for an even face point `b̃ ≤ β`); and the binary block.
pub fn monomial_sos_certificate(
    f_face: &Polynomial,
    face: &Face,
    a: &Rational,
    alpha: &Exponent,
    eps: &Rational,
    w: &BconvWitness,
) -> Result<LocalSosCertificate> {
    monomial_sos_with(f_face, face, a, alpha, eps, w, &OracleConfig::default())
}

pub(crate) fn monomial_sos_with(
    f_face: &Polynomial,
    face: &Face,
    a: &Rational,
    alpha: &Exponent,
    eps: &Rational,
    w: &BconvWitness,
    cfg: &OracleConfig,
) -> Result<LocalSosCertificate> {
    if &w.target != alpha {
        return Err(Error::InvalidWitness("witness is for a different exponent".into()));
    }
    if let Some(e) = f_face.support().find(|e| !face.contains_point(e)) {
        return Err(Error::Input(format!("monomial {e} of F lies off the face")));
    }
    let n = alpha.nvars();
    let mut target = f_face.clone();
    target.add_term(alpha.clone(), a.clone());
    let mut cert = LocalSosCertificate::new(target);
    cert.metadata.route = "monomial_sos".into();

    // block (i)
    let p = face.principal_polynomial()?;
    let (eps1, block) = if *f_face == p.scale(eps) {
        (eps.clone(), LocalSosCertificate::new(Polynomial::zero(n)))
    } else {
        face_block(f_face, face, eps, cfg)?
    };
    cert.absorb(block);
    cert.metadata.epsilons.push(("eps".into(), eps1.clone()));

    if a.is_zero() {
        for b in face.even_points() {
            cert.push_monomial_square(eps1.clone(), &b);
        }
        return finish(cert);
    }

    let nn = w.depth();
    let eps_b = &eps1 / Rational::from_integer(((nn + 2) as i64).into());
    let t = 1 + w
        .betas
        .iter()
        .position(|b| face.normal.weight(b) > face.normal.v)
        .ok_or_else(|| Error::Certificate("every β of the witness lies on the face".into()))?;
    let binary = binary_sos_certificate(&eps_b, &-a, t, w)?;

    // block (ii)
    let even = face.even_points();
    let mut coef: BTreeMap<Exponent, Rational> =
        even.iter().map(|b| (b.clone(), eps1.clone())).collect();
    let mut demand: BTreeMap<Exponent, Polynomial> = BTreeMap::new();
    let mut absorb = |beta: &Exponent, c: &Rational| -> Result<()> {
        if face.normal.weight(beta) == face.normal.v {
            let slot = coef
                .get_mut(beta)
                .ok_or_else(|| Error::Certificate(format!("{beta} is not an even face point")))?;
            *slot -= c;
            return Ok(());
        }
        let base = even
            .iter()
            .find(|b| b.divides(beta))
            .ok_or_else(|| Error::Certificate(format!("no even face point below {beta}")))?;
        let omega = beta.checked_sub(base).expect("divides");
        demand
            .entry(base.clone())
            .or_insert_with(|| Polynomial::zero(n))
            .add_term(omega, c.clone());
        Ok(())
    };
    for b in &w.betas {
        absorb(b, &eps_b)?;
    }
    absorb(&w.betas[t - 1], &binary.m)?;
    for (b, c) in coef {
        let u = demand.remove(&b).unwrap_or_else(|| Polynomial::zero(n));
        cert.push_residual(b, c, u);
    }

    cert.metadata.epsilons.push(("eps_binary".into(), eps_b));
    cert.metadata.constants.push(("t".into(), Rational::from_integer((t as i64).into())));
    cert.absorb(binary.certificate);
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
