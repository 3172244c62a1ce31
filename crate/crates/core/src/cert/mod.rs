//! Exact local SOS certificates.
//!
//! A [`LocalSosCertificate`] writes a target polynomial as
//!
//! ```text
//! Σ c · p²  +  Σ x^{2β} (c₀ − u)        c > 0, c₀ > 0, u(0) = 0
//! ```
//!
//! Each unit residual is a square of a power series near the origin, since
//! `c₀ − u = c₀(1 − u/c₀)` has a power-series square root. Everything is
//! checked by exact expansion in [`verify_certificate`].

mod binary;
mod build;

pub use binary::{binary_sos_certificate, monomial_sos_certificate, BinarySos};
pub use build::{
    degree_plane_face, diagram_rint, homogeneous_lowest_certificate, sufficiency_certificate,
    BuildOptions,
};

use num_traits::{Signed, Zero};
use serde::Serialize;
use serde_json::{json, Value};

use crate::bconv::BconvWitness;
use crate::error::{Error, Result};
use crate::linalg;
use crate::poly::{Exponent, Polynomial, Rational, VarNames};
use crate::sos::{block_classes, gram_feasibility_blocks, OracleConfig};

/// `c · p²`.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct SquareTerm {
    pub c: Rational,
    pub p: Polynomial,
}

/// `x^{beta2} · (c0 − u)`.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct UnitResidual {
    pub beta2: Exponent,
    pub c0: Rational,
    pub u: Polynomial,
}

/// Named constants and witnesses used while building a certificate.
#[derive(Clone, PartialEq, Eq, Debug, Default)]
pub struct CertMetadata {
    pub route: String,
    pub epsilons: Vec<(String, Rational)>,
    pub constants: Vec<(String, Rational)>,
    pub witnesses: Vec<BconvWitness>,
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct LocalSosCertificate {
    pub target: Polynomial,
    pub squares: Vec<SquareTerm>,
    pub unit_residuals: Vec<UnitResidual>,
    pub metadata: CertMetadata,
}

/// Result of [`verify_certificate`].
#[derive(Clone, Debug)]
pub struct Verification {
    pub valid: bool,
    /// `target − expansion`.
    pub diff: Polynomial,
    pub problems: Vec<String>,
}

impl LocalSosCertificate {
    pub fn new(target: Polynomial) -> Self {
        LocalSosCertificate {
            squares: Vec::new(),
            unit_residuals: Vec::new(),
            metadata: CertMetadata::default(),
            target,
        }
    }

    pub fn nvars(&self) -> usize {
        self.target.nvars()
    }

    /// Adds `c · p²`, skipping zero terms.
    pub fn push_square(&mut self, c: Rational, p: Polynomial) {
        if !c.is_zero() && !p.is_zero() {
            self.squares.push(SquareTerm { c, p });
        }
    }

    /// Adds `c · (x^{e/2})²`.
    pub fn push_monomial_square(&mut self, c: Rational, e: &Exponent) {
        let half = e.half().expect("even exponent");
        self.push_square(c, Polynomial::monomial(half, Rational::from_integer(1.into())));
    }

    /// Adds a unit residual, or a plain square when `u = 0`.
    pub fn push_residual(&mut self, beta2: Exponent, c0: Rational, u: Polynomial) {
        if u.is_zero() {
            self.push_monomial_square(c0, &beta2);
        } else {
            self.unit_residuals.push(UnitResidual { beta2, c0, u });
        }
    }

    /// Appends the terms (and metadata) of another certificate.
    pub fn absorb(&mut self, other: LocalSosCertificate) {
        self.squares.extend(other.squares);
        self.unit_residuals.extend(other.unit_residuals);
        self.metadata.epsilons.extend(other.metadata.epsilons);
        self.metadata.constants.extend(other.metadata.constants);
        self.metadata.witnesses.extend(other.metadata.witnesses);
    }

    /// `Σ c p² + Σ x^{2β}(c₀ − u)`.
    pub fn expand(&self) -> Result<Polynomial> {
        let n = self.nvars();
        let mut out = Polynomial::zero(n);
        for s in &self.squares {
            out = out.try_add(&s.p.square()?.scale(&s.c))?;
        }
        for r in &self.unit_residuals {
            let inner = Polynomial::constant(n, r.c0.clone()).try_sub(&r.u)?;
            out = out.try_add(&inner.mul_term(&r.beta2, &Rational::from_integer(1.into()))?)?;
        }
        Ok(out)
    }

    /// Largest `ρ` with `|u(x)| < c₀` on `[−ρ, ρ]^n` for every residual (a
    /// crude coefficient bound, capped at 1/2).
    pub fn safe_radius(&self) -> f64 {
        let mut rho: f64 = 0.5;
        for r in &self.unit_residuals {
            let c0 = crate::poly::to_f64(&r.c0);
            let norm = r.u.l1_norm();
            if norm > 0.0 {
                // every monomial of u has degree >= 1, so |u| <= norm * rho on the box
                rho = rho.min(0.5 * c0 / norm);
            }
        }
        rho
    }

    pub fn to_json(&self, names: &VarNames) -> Value {
        let p = |q: &Polynomial| q.to_string_with(names);
        let named = |v: &[(String, Rational)]| -> Value {
            Value::Object(
                v.iter()
                    .map(|(k, r)| (k.clone(), Value::String(r.to_string())))
                    .collect(),
            )
        };
        json!({
            "target": p(&self.target),
            "squares": self.squares.iter().map(|s| json!({"c": s.c.to_string(), "poly": p(&s.p)})).collect::<Vec<_>>(),
            "unit_residuals": self.unit_residuals.iter().map(|r| json!({
                "beta2": r.beta2.coords(),
                "c0": r.c0.to_string(),
                "u": p(&r.u),
            })).collect::<Vec<_>>(),
            "metadata": {
                "route": self.metadata.route,
                "epsilons": named(&self.metadata.epsilons),
                "constants": named(&self.metadata.constants),
                "witnesses": self.metadata.witnesses.iter().map(|w| json!({
                    "target": w.target.coords(),
                    "betas": w.betas.iter().map(|b| b.coords().to_vec()).collect::<Vec<_>>(),
                })).collect::<Vec<_>>(),
            },
        })
    }
}

impl Serialize for LocalSosCertificate {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_json(&VarNames::indexed(self.nvars())).serialize(s)
    }
}

/// Exact check of the expansion identity and the residual invariants.
pub fn verify_certificate(c: &LocalSosCertificate) -> Verification {
    let mut problems = Vec::new();
    let n = c.nvars();
    for (i, s) in c.squares.iter().enumerate() {
        if !s.c.is_positive() {
            problems.push(format!("square {i} has nonpositive coefficient {}", s.c));
        }
        if s.p.nvars() != n {
            problems.push(format!("square {i} has the wrong number of variables"));
        }
    }
    for (i, r) in c.unit_residuals.iter().enumerate() {
        if !r.beta2.is_even() {
            problems.push(format!("residual {i} has odd exponent {}", r.beta2));
        }
        if !r.c0.is_positive() {
            problems.push(format!("residual {i} has nonpositive constant {}", r.c0));
        }
        if r.u.nvars() != n || !r.u.constant_term().is_zero() {
            problems.push(format!("residual {i} has u(0) != 0"));
        }
    }
    let diff = match c.expand() {
        Ok(e) => c.target.try_sub(&e).unwrap_or_else(|_| Polynomial::zero(n)),
        Err(e) => {
            problems.push(format!("expansion failed: {e}"));
            Polynomial::zero(n)
        }
    };
    if !diff.is_zero() {
        problems.push("expansion differs from the target".into());
    }
    Verification {
        valid: problems.is_empty(),
        diff,
        problems,
    }
}

/// `2α = β + β'` with `|β| = 2k`, `|β'| = 2k + 2`, both even.
#[derive(Clone, PartialEq, Eq, Debug, Serialize)]
pub struct OddSplit {
    pub alpha: Exponent,
    pub beta: Exponent,
    pub beta_prime: Exponent,
}

/// Splits `2α` for `|α| = 2k + 1` by filling coordinates left to right.
///
/// ```
/// use newton_sos::cert::split_odd_exponent;
/// use newton_sos::poly::Exponent;
/// let s = split_odd_exponent(&Exponent::new(vec![1, 3, 3])).unwrap();
/// assert_eq!(s.beta.coords(), [2, 4, 0]);
/// assert_eq!(s.beta_prime.coords(), [0, 2, 6]);
/// ```
pub fn split_odd_exponent(alpha: &Exponent) -> Result<OddSplit> {
    let deg = alpha.degree();
    if deg.is_multiple_of(2) {
        return Err(Error::EvenDegree(alpha.to_string()));
    }
    let budget = (deg - 1) as u32; // 2k
    let mut beta = vec![0u32; alpha.nvars()];
    let mut used = 0u32;
    for (i, &a) in alpha.coords().iter().enumerate() {
        let take = (2 * a).min(budget - used);
        beta[i] = take;
        used += take;
        if used == budget {
            break;
        }
    }
    let beta = Exponent::new(beta);
    let twice = alpha.scale(2)?;
    let beta_prime = twice.checked_sub(&beta).expect("beta <= 2 alpha");
    Ok(OddSplit {
        alpha: alpha.clone(),
        beta,
        beta_prime,
    })
}

/// `Σ_b x^{2b}` over a basis.
pub(crate) fn diagonal_polynomial(n: usize, basis: &[Exponent]) -> Polynomial {
    let mut p = Polynomial::zero(n);
    for b in basis {
        p.add_term(b.scale(2).expect("small"), Rational::from_integer(1.into()));
    }
    p
}

/// Exact SOS of `target` as a sum of per-block SOS.
///
/// A numeric Gram matrix is found for `target − margin · Σ_blocks Σ_b x^{2b}`,
/// rounded to multiples of `2^-32`, shifted back by `margin · I`, projected
/// exactly onto the coefficient constraints of `target`, and factored by
/// exact `LDLᵀ`. `None` when any step fails.
pub(crate) fn exact_block_sos(
    target: &Polynomial,
    blocks: &[Vec<Exponent>],
    margin: &Rational,
    cfg: &OracleConfig,
) -> Result<Option<Vec<Vec<SquareTerm>>>> {
    let n = target.nvars();
    let mut shifted = target.clone();
    for b in blocks {
        shifted = shifted.try_sub(&diagonal_polynomial(n, b).scale(margin))?;
    }
    let cls = block_classes(blocks);
    if target.support().any(|e| !cls.index.contains_key(e)) {
        return Ok(None);
    }
    let m: usize = blocks.iter().map(Vec::len).sum();
    let mut g: linalg::Matrix = vec![vec![Rational::zero(); m]; m];
    if !shifted.is_zero() {
        let v = gram_feasibility_blocks(&shifted, blocks.to_vec(), cfg);
        if !v.is_feasible() {
            return Ok(None);
        }
        let Some(gram) = v.gram else {
            return Ok(None);
        };
        for (k, pairs) in cls.members.iter().enumerate() {
            let _ = k;
            for &(i, j) in pairs {
                g[i][j] = gram[i][j].clone();
            }
        }
    }
    for (i, row) in g.iter_mut().enumerate() {
        row[i] += margin;
    }
    for (k, pairs) in cls.members.iter().enumerate() {
        let s: Rational = pairs.iter().map(|&(i, j)| g[i][j].clone()).sum();
        let r = (target.coeff(&cls.exps[k]) - s) / Rational::from_integer((pairs.len() as i64).into());
        if !r.is_zero() {
            for &(i, j) in pairs {
                g[i][j] += &r;
            }
        }
    }
    let mut out = Vec::new();
    let mut offset = 0;
    for b in blocks {
        let sub: linalg::Matrix = (offset..offset + b.len())
            .map(|i| g[i][offset..offset + b.len()].to_vec())
            .collect();
        let Some((l, d)) = linalg::ldl(&sub) else {
            return Ok(None);
        };
        if d.iter().any(|x| x.is_negative()) {
            return Ok(None);
        }
        let mut squares = Vec::new();
        for k in 0..b.len() {
            if d[k].is_zero() {
                continue;
            }
            let mut p = Polynomial::zero(n);
            for (j, bj) in b.iter().enumerate().skip(k) {
                p.add_term(bj.clone(), l[j][k].clone());
            }
            squares.push(SquareTerm {
                c: d[k].clone(),
                p,
            });
        }
        out.push(squares);
        offset += b.len();
    }
    Ok(Some(out))
}
