//! Bisectional convex hulls of even regions.
//!
//! A point `α` belongs to `bconv Δ_E` when it is a binary convex combination
//! of even points of the region. Every such combination can be brought to
//! the normal form
//!
//! ```text
//! α = β¹/2 + β²/4 + ... + β^N/2^N + β^{N+1}/2^N
//! ```
//!
//! which is what [`BconvWitness`] stores. Peeling off the first term gives
//! the doubling recursion used by the search: `α` has a depth `N` witness
//! iff some even region point `β ≤ 2α` leaves `2α - β` with a depth `N-1`
//! witness.

use std::collections::HashSet;

use num_bigint::BigInt;
use num_traits::{One, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::newton::EvenRegion;
use crate::poly::{Exponent, Rational};

/// `β¹, ..., β^{N+1}` realizing `α` in normal form.
#[derive(Clone, PartialEq, Eq, Debug, Serialize)]
pub struct BconvWitness {
    pub target: Exponent,
    pub betas: Vec<Exponent>,
}

impl BconvWitness {
    /// Validates the arithmetic invariants (evenness, recombination, integral tails).
    pub fn new(target: Exponent, betas: Vec<Exponent>) -> Result<Self> {
        let w = BconvWitness { target, betas };
        w.check_arithmetic()?;
        Ok(w)
    }

    /// `N`, the number of halvings.
    pub fn depth(&self) -> usize {
        self.betas.len() - 1
    }

    fn check_arithmetic(&self) -> Result<()> {
        if self.betas.len() < 2 {
            return Err(Error::InvalidWitness("need at least two points".into()));
        }
        let n = self.target.nvars();
        for b in &self.betas {
            if b.nvars() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    found: b.nvars(),
                });
            }
            if !b.is_even() {
                return Err(Error::InvalidWitness(format!("{b} is not even")));
            }
        }
        let combo = self.recombine();
        let target: Vec<Rational> = self
            .target
            .coords()
            .iter()
            .map(|&c| Rational::from_integer(c.into()))
            .collect();
        if combo != target {
            return Err(Error::InvalidWitness(format!(
                "combination does not equal {}",
                self.target
            )));
        }
        self.tails().map(|_| ())
    }

    /// `Σ_{k≤N} 2^{-k} β^k + 2^{-N} β^{N+1}` as exact rationals.
    pub fn recombine(&self) -> Vec<Rational> {
        let n = self.target.nvars();
        let nn = self.depth();
        let mut acc = vec![Rational::zero(); n];
        let mut w = Rational::one();
        for (k, b) in self.betas.iter().enumerate() {
            if k < nn {
                w /= Rational::from_integer(2.into());
            }
            for (a, &c) in acc.iter_mut().zip(b.coords()) {
                *a += &w * Rational::from_integer(c.into());
            }
        }
        acc
    }

    /// Tails `T_{N'} = 2^{N'-2}(α - Σ_{k<N'} 2^{-k}β^k)` for `N' = 2..N+1`.
    ///
    /// Computed with `T_2 = α - β¹/2` and `T_{k+1} = 2T_k - β^k/2`; the last
    /// one is always `β^{N+1}/2`.
    pub fn tails(&self) -> Result<Vec<Exponent>> {
        let mut cur: Vec<BigInt> = self.target.coords().iter().map(|&c| BigInt::from(c)).collect();
        let two = BigInt::from(2);
        let mut out = Vec::with_capacity(self.depth());
        for (k, b) in self.betas[..self.depth()].iter().enumerate() {
            if k > 0 {
                for c in cur.iter_mut() {
                    *c *= &two;
                }
            }
            for (c, &bc) in cur.iter_mut().zip(b.coords()) {
                *c -= BigInt::from(bc / 2);
            }
            let coords = cur
                .iter()
                .map(|c| u32::try_from(c).map_err(|_| Error::InvalidWitness(format!("tail {} is not in Z_+^n", k + 2))))
                .collect::<Result<Vec<u32>>>()?;
            out.push(Exponent::new(coords));
        }
        Ok(out)
    }

    /// Checks every `β^k` against a region as well.
    pub fn verify_in(&self, region: &EvenRegion) -> bool {
        self.check_arithmetic().is_ok() && self.betas.iter().all(|b| region.contains_even(b))
    }
}

/// Result of a bounded witness search.
#[derive(Clone, PartialEq, Eq, Debug, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum BconvOutcome {
    Found { witness: BconvWitness },
    /// `α` lies outside `conv Δ_E`, so no depth can work.
    ProvenAbsent,
    /// The search space up to this depth holds no witness.
    NotFoundUpTo { depth: usize },
}

impl BconvOutcome {
    pub fn witness(&self) -> Option<&BconvWitness> {
        match self {
            BconvOutcome::Found { witness } => Some(witness),
            _ => None,
        }
    }
}

/// The default depth bound `1 + |α|`.
pub fn default_depth(alpha: &Exponent) -> usize {
    1 + alpha.degree() as usize
}

/// Searches for a minimal-depth witness of `α ∈ bconv Δ_E`.
///
/// ```
/// use newton_sos::bconv::bconv_member;
/// use newton_sos::newton::EvenRegion;
/// use newton_sos::poly::Exponent;
/// let region = EvenRegion::from_bases(2, [Exponent::new(vec![16, 0]), Exponent::new(vec![0, 10])]).unwrap();
/// let out = bconv_member(&Exponent::new(vec![13, 2]), &region, 8);
/// let w = out.witness().unwrap();
/// assert!(w.verify_in(&region));
/// ```
pub fn bconv_member(alpha: &Exponent, region: &EvenRegion, max_depth: usize) -> BconvOutcome {
    let Some(hull) = region.hull() else {
        return BconvOutcome::ProvenAbsent;
    };
    if !hull.contains(alpha) {
        return BconvOutcome::ProvenAbsent;
    }
    let mut search = Search {
        region,
        hull: &hull,
        failed: HashSet::new(),
    };
    for depth in 1..=max_depth.max(1) {
        if let Some(betas) = search.find(alpha, depth) {
            let witness = BconvWitness::new(alpha.clone(), betas)
                .expect("search produces valid witnesses");
            debug_assert!(witness.verify_in(region));
            return BconvOutcome::Found { witness };
        }
    }
    BconvOutcome::NotFoundUpTo {
        depth: max_depth.max(1),
    }
}

struct Search<'a> {
    region: &'a EvenRegion,
    hull: &'a crate::newton::Polyhedron,
    failed: HashSet<(Exponent, usize)>,
}

impl Search<'_> {
    /// Witness of exactly depth `depth` (so `depth + 1` points), if any.
    fn find(&mut self, alpha: &Exponent, depth: usize) -> Option<Vec<Exponent>> {
        if depth == 0 {
            return self.region.contains_even(alpha).then(|| vec![alpha.clone()]);
        }
        if !self.hull.contains(alpha) || self.failed.contains(&(alpha.clone(), depth)) {
            return None;
        }
        let twice = alpha.scale(2).ok()?;
        for beta in candidates(self.region, &twice) {
            let rest = twice.checked_sub(&beta).expect("beta <= 2 alpha");
            if let Some(mut tail) = self.find(&rest, depth - 1) {
                let mut out = vec![beta];
                out.append(&mut tail);
                return Some(out);
            }
        }
        self.failed.insert((alpha.clone(), depth));
        None
    }
}

/// Even region points `β ≤ bound`, ordered by degree then lex.
fn candidates(region: &EvenRegion, bound: &Exponent) -> Vec<Exponent> {
    let n = bound.nvars();
    let halves: Vec<u32> = bound.coords().iter().map(|c| c / 2).collect();
    let mut out = Vec::new();
    let mut cur = vec![0u32; n];
    'outer: loop {
        let e = Exponent::new(cur.iter().map(|c| 2 * c).collect());
        if region.region_real(&e) {
            out.push(e);
        }
        let mut i = 0;
        loop {
            if i == n {
                break 'outer;
            }
            if cur[i] < halves[i] {
                cur[i] += 1;
                break;
            }
            cur[i] = 0;
            i += 1;
        }
    }
    out.sort_by(|a, b| a.degree().cmp(&b.degree()).then_with(|| a.cmp(b)));
    out
}

/// The tails of a witness, checked integral and nonnegative.
pub fn witness_tails(w: &BconvWitness) -> Result<Vec<Exponent>> {
    w.check_arithmetic()?;
    w.tails()
}
