//! Structured verdicts for the Newton-diagram conditions.

use num_traits::{Signed, Zero};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use serde::Serialize;

use crate::bconv::{bconv_member, default_depth, BconvOutcome, BconvWitness};
use crate::cert::{
    homogeneous_lowest_certificate, sufficiency_certificate, BuildOptions, LocalSosCertificate,
};
use crate::error::{Error, Result};
use crate::linalg;
use crate::newton::{even_region, face_restriction, newton_diagram, Face, NewtonComplex, Polyhedron};
use crate::poly::{dyadic, rational_str, Exponent, Polynomial, Rational};
use crate::sos::{is_sos_with, rint_membership_grid, BasisMode, SosStatus};

#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    Fail,
    Inconclusive,
}

impl Status {
    /// Fail dominates, then inconclusive.
    fn and(self, other: Status) -> Status {
        match (self, other) {
            (Status::Fail, _) | (_, Status::Fail) => Status::Fail,
            (Status::Inconclusive, _) | (_, Status::Inconclusive) => Status::Inconclusive,
            _ => Status::Pass,
        }
    }

    fn from_sos(s: SosStatus) -> Status {
        match s {
            SosStatus::Feasible => Status::Pass,
            SosStatus::Infeasible => Status::Fail,
            SosStatus::Inconclusive => Status::Inconclusive,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Evidence {
    OddVertex {
        vertex: Exponent,
    },
    NonpositiveVertex {
        vertex: Exponent,
        #[serde(serialize_with = "rational_str::one")]
        coefficient: Rational,
    },
    MissingAxis {
        variable: usize,
    },
    Face {
        vertices: Vec<Exponent>,
        normal: Vec<i64>,
        status: Status,
        #[serde(skip_serializing_if = "Option::is_none", serialize_with = "rational_str::option")]
        eps: Option<Rational>,
    },
    Counterexample {
        face: Vec<Exponent>,
        #[serde(serialize_with = "rational_str::vec")]
        point: Vec<Rational>,
        #[serde(serialize_with = "rational_str::one")]
        value: Rational,
    },
    BadMonomial {
        exponent: Exponent,
        face: Vec<Exponent>,
        status: Status,
        #[serde(skip_serializing_if = "Option::is_none")]
        witness: Option<BconvWitness>,
    },
    Note {
        text: String,
    },
}

#[derive(Clone, Debug, Serialize)]
pub struct Clause {
    pub id: String,
    pub status: Status,
    pub evidence: Vec<Evidence>,
}

impl Clause {
    pub(crate) fn new(id: &str) -> Self {
        Clause {
            id: id.into(),
            status: Status::Pass,
            evidence: Vec::new(),
        }
    }

    pub(crate) fn record(&mut self, s: Status, e: Evidence) {
        self.status = self.status.and(s);
        self.evidence.push(e);
    }
}

/// Verdict of one theorem, clause by clause.
#[derive(Clone, Debug, Serialize)]
pub struct ConditionReport {
    pub condition: String,
    pub status: Status,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub route: Option<String>,
    pub clauses: Vec<Clause>,
    #[serde(skip)]
    pub certificate: Option<LocalSosCertificate>,
}

impl ConditionReport {
    pub(crate) fn new(condition: &str) -> Self {
        ConditionReport {
            condition: condition.into(),
            status: Status::Pass,
            route: None,
            clauses: Vec::new(),
            certificate: None,
        }
    }

    pub(crate) fn push(&mut self, c: Clause) {
        self.status = self.status.and(c.status);
        self.clauses.push(c);
    }

    pub fn clause(&self, id: &str) -> Option<&Clause> {
        self.clauses.iter().find(|c| c.id == id)
    }

    pub fn passed(&self) -> bool {
        self.status == Status::Pass
    }
}

fn prepare(f: &Polynomial) -> Result<NewtonComplex> {
    if f.is_zero() {
        return Err(Error::ZeroPolynomial);
    }
    let c = f.constant_term();
    if !c.is_zero() {
        return Err(Error::NonzeroConstant(c.to_string()));
    }
    newton_diagram(f)
}

fn even_vertices(nc: &NewtonComplex) -> Clause {
    let mut c = Clause::new("even_vertices");
    for v in nc.vertices.iter().filter(|v| !v.is_even()) {
        c.record(Status::Fail, Evidence::OddVertex { vertex: v.clone() });
    }
    c
}

fn positive_vertices(f: &Polynomial, nc: &NewtonComplex) -> Clause {
    let mut c = Clause::new("positive_vertices");
    for v in &nc.vertices {
        let k = f.coeff(v);
        if !k.is_positive() {
            c.record(
                Status::Fail,
                Evidence::NonpositiveVertex {
                    vertex: v.clone(),
                    coefficient: k,
                },
            );
        }
    }
    c
}

pub(crate) fn meets_axes(nc: &NewtonComplex) -> Clause {
    let mut c = Clause::new("meets_all_axes");
    for i in 0..nc.nvars {
        let hit = nc
            .generators
            .iter()
            .any(|e| e.coords()[i] > 0 && e.variables().all(|j| j == i));
        if !hit {
            c.record(Status::Fail, Evidence::MissingAxis { variable: i });
        }
    }
    c
}

fn face_evidence(g: &Face, status: Status, eps: Option<Rational>) -> Evidence {
    Evidence::Face {
        vertices: g.vertices.clone(),
        normal: g.normal.a.clone(),
        status,
        eps,
    }
}

/// Per-maximal-face relative interior test.
pub(crate) fn rint_clause(f: &Polynomial, nc: &NewtonComplex, opts: &BuildOptions) -> Result<Clause> {
    let mut c = Clause::new("rint");
    for g in nc.maximal() {
        let fg = face_restriction(f, nc, g)?;
        let eps = match rint_membership_grid(&fg, g, &opts.eps_grid, &opts.oracle) {
            Ok(e) => e,
            Err(Error::NoEvenPoint) => None,
            Err(e) => return Err(e),
        };
        let s = if eps.is_some() { Status::Pass } else { Status::Fail };
        c.record(s, face_evidence(g, s, eps));
    }
    Ok(c)
}

/// Necessary conditions for `f` to be a sum of squares of polynomials.
pub fn check_sos_necessary(f: &Polynomial) -> Result<ConditionReport> {
    check_sos_necessary_with(f, &BuildOptions::default())
}

pub fn check_sos_necessary_with(f: &Polynomial, opts: &BuildOptions) -> Result<ConditionReport> {
    let nc = prepare(f)?;
    let mut rep = ConditionReport::new("sos_necessary");
    rep.push(even_vertices(&nc));
    rep.push(positive_vertices(f, &nc));
    let mut faces = Clause::new("faces_sos");
    for g in nc.faces.iter().filter(|g| g.dim > 0) {
        let fg = face_restriction(f, &nc, g)?;
        let v = is_sos_with(&fg, BasisMode::Face(g), &opts.oracle)?;
        let s = Status::from_sos(v.status);
        faces.record(s, face_evidence(g, s, None));
    }
    rep.push(faces);
    Ok(rep)
}

#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum VasilevMode {
    Necessary,
    Sufficient,
}

const SAMPLES_PER_FACE: usize = 100_000;
const GRID_LIMIT: usize = 100_000;
const EXACT_RECHECKS: usize = 2_000;

/// Searches for `x` with `f(x) < 0`, or with `f(x) ≤ 0` and no zero
/// coordinate when `strict`. Every hit is recomputed exactly.
fn find_counterexample(f: &Polynomial, strict: bool, rng: &mut StdRng) -> Option<(Vec<Rational>, Rational)> {
    let n = f.nvars();
    let bad = |v: &Rational| if strict { !v.is_positive() } else { v.is_negative() };
    let rechecks = std::cell::Cell::new(0usize);
    let exact = |pt: Vec<Rational>| -> Option<(Vec<Rational>, Rational)> {
        rechecks.set(rechecks.get() + 1);
        let v = f.eval(&pt).ok()?;
        bad(&v).then_some((pt, v))
    };
    let scale = f.l1_norm().max(1.0);
    let suspicious = |y: f64| if strict { y <= 1e-9 * scale } else { y < 1e-9 * scale };

    let grid_size = 7usize.checked_pow(n as u32).filter(|&s| s <= GRID_LIMIT);
    if let Some(total) = grid_size {
        for idx in 0..total {
            let mut k = idx;
            let mut pt = Vec::with_capacity(n);
            for _ in 0..n {
                pt.push((k % 7) as i64 - 3);
                k /= 7;
            }
            if strict && pt.contains(&0) {
                continue;
            }
            let xf: Vec<f64> = pt.iter().map(|&a| a as f64).collect();
            if suspicious(f.eval_f64(&xf)) {
                let found = exact(pt.iter().map(|&a| Rational::from_integer(a.into())).collect());
                if found.is_some() {
                    return found;
                }
            }
        }
    }
    for _ in 0..SAMPLES_PER_FACE {
        if rechecks.get() >= EXACT_RECHECKS {
            break;
        }
        let pt: Vec<Rational> = (0..n)
            .map(|_| {
                let mut q = dyadic(rng.gen_range(-4.0..4.0), 8);
                if strict && q.is_zero() {
                    q = dyadic(1.0 / 256.0, 8);
                }
                q
            })
            .collect();
        let xf: Vec<f64> = pt.iter().map(crate::poly::to_f64).collect();
        if suspicious(f.eval_f64(&xf)) {
            if let Some(hit) = exact(pt) {
                return Some(hit);
            }
        }
    }
    None
}

/// Vasil'ev's conditions for an isolated minimum at the origin.
///
/// Facewise (strict) positivity is tri-state: a sampled counterexample
/// (checked exactly) fails it, `f_γ` SOS (resp. `f_γ − ε p_γ` SOS for a grid
/// `ε`) passes it, anything else is inconclusive.
pub fn check_vasilev(f: &Polynomial, mode: VasilevMode) -> Result<ConditionReport> {
    check_vasilev_with(f, mode, &BuildOptions::default())
}

pub fn check_vasilev_with(f: &Polynomial, mode: VasilevMode, opts: &BuildOptions) -> Result<ConditionReport> {
    let nc = prepare(f)?;
    let mut rep = ConditionReport::new(match mode {
        VasilevMode::Necessary => "vasilev_necessary",
        VasilevMode::Sufficient => "vasilev_sufficient",
    });
    rep.push(meets_axes(&nc));
    rep.push(even_vertices(&nc));
    rep.push(positive_vertices(f, &nc));
    let strict = mode == VasilevMode::Sufficient;
    let mut faces = Clause::new(if strict { "faces_positive" } else { "faces_nonnegative" });
    let mut rng = StdRng::seed_from_u64(0x5eed);
    for g in nc.faces.iter().filter(|g| g.dim > 0) {
        let fg = face_restriction(f, &nc, g)?;
        if let Some((point, value)) = find_counterexample(&fg, strict, &mut rng) {
            faces.record(
                Status::Fail,
                Evidence::Counterexample {
                    face: g.vertices.clone(),
                    point,
                    value,
                },
            );
            continue;
        }
        let (s, eps) = if strict {
            match rint_membership_grid(&fg, g, &opts.eps_grid, &opts.oracle) {
                Ok(Some(e)) => (Status::Pass, Some(e)),
                Ok(None) | Err(Error::NoEvenPoint) => (Status::Inconclusive, None),
                Err(e) => return Err(e),
            }
        } else {
            let v = is_sos_with(&fg, BasisMode::Face(g), &opts.oracle)?;
            let s = if v.is_feasible() { Status::Pass } else { Status::Inconclusive };
            (s, None)
        };
        faces.record(s, face_evidence(g, s, eps));
    }
    rep.push(faces);
    Ok(rep)
}

/// Bad monomials (odd or negative) of `f` in `conv Δ(f_γ) ∖ γ` for each
/// maximal `γ`, each searched in `bconv Δ_E(f_γ)`.
fn containment_clause(f: &Polynomial, nc: &NewtonComplex, opts: &BuildOptions) -> Result<Clause> {
    let mut c = Clause::new("bad_in_bconv");
    for g in nc.maximal() {
        let fg = face_restriction(f, nc, g)?;
        let hull = Polyhedron::new(f.nvars(), fg.support().cloned())?;
        let region = even_region(&fg)?;
        for (alpha, coeff) in f.terms() {
            let bad = !alpha.is_even() || coeff.is_negative();
            if !bad || g.contains_point(alpha) || !hull.contains(alpha) {
                continue;
            }
            let depth = opts.bconv_depth.unwrap_or_else(|| default_depth(alpha));
            let (s, witness) = match bconv_member(alpha, &region, depth) {
                BconvOutcome::Found { witness } => (Status::Pass, Some(witness)),
                BconvOutcome::ProvenAbsent => (Status::Fail, None),
                BconvOutcome::NotFoundUpTo { .. } => (Status::Inconclusive, None),
            };
            c.record(
                s,
                Evidence::BadMonomial {
                    exponent: alpha.clone(),
                    face: g.vertices.clone(),
                    status: s,
                    witness,
                },
            );
        }
    }
    Ok(c)
}

/// Whether `f` has a regular Newton polyhedron. A recognised plane shape
/// passes without search; otherwise every bad monomial gets a bconv search.
pub fn check_regularity(f: &Polynomial) -> Result<ConditionReport> {
    check_regularity_with(f, &BuildOptions::default())
}

pub fn check_regularity_with(f: &Polynomial, opts: &BuildOptions) -> Result<ConditionReport> {
    let nc = prepare(f)?;
    if let Ok(short) = shortcuts_on(f, &nc, opts) {
        if short.passed() {
            return Ok(short);
        }
    }
    let mut rep = ConditionReport::new("regularity");
    rep.push(even_vertices(&nc));
    rep.push(positive_vertices(f, &nc));
    rep.push(containment_clause(f, &nc, opts)?);
    Ok(rep)
}

/// Regularity read off the shape of a single-face diagram: the plane
/// `|α| = 2` with `f_Γ` positive definite, or a plane
/// `k Σ_{i≠j} α_i + α_j = 2k` with `f_Γ` in the relative interior.
/// Any other shape is an `Input` error.
pub fn regularity_shortcuts(f: &Polynomial) -> Result<ConditionReport> {
    let nc = prepare(f)?;
    shortcuts_on(f, &nc, &BuildOptions::default())
}

fn shortcuts_on(f: &Polynomial, nc: &NewtonComplex, opts: &BuildOptions) -> Result<ConditionReport> {
    let n = f.nvars();
    let unrecognized = || Err(Error::Input("diagram shape not recognized by the shortcuts".into()));
    let faces: Vec<&Face> = nc.maximal().collect();
    let [g] = faces[..] else { return unrecognized() };
    if g.dim + 1 != n {
        return unrecognized();
    }
    let a = &g.normal.a;
    let k = *a.iter().max().expect("nvars > 0");
    let special: Vec<usize> = (0..n).filter(|&i| a[i] != k).collect();
    let j = match special[..] {
        [] if k == 1 => None,
        [j] if a[j] == 1 => Some(j),
        _ => return unrecognized(),
    };
    if g.normal.v != 2 * k {
        return unrecognized();
    }
    let mut corners: Vec<Exponent> = (0..n)
        .map(|i| Exponent::axis(n, i, if Some(i) == j { 2 * k as u32 } else { 2 }))
        .collect();
    corners.sort();
    let mut vs = g.vertices.clone();
    vs.sort();
    if vs != corners {
        return unrecognized();
    }
    let fg = face_restriction(f, nc, g)?;
    let mut rep = ConditionReport::new("regularity");
    let mut c;
    if k == 1 {
        rep.route = Some("quadratic_plane".into());
        c = Clause::new("quadratic_positive_definite");
        let mut q = vec![vec![Rational::zero(); n]; n];
        for (e, coeff) in fg.terms() {
            let idx: Vec<usize> = e.variables().collect();
            match idx[..] {
                [i] => q[i][i] = coeff.clone(),
                [i, l] => {
                    let half = coeff / Rational::from_integer(2.into());
                    q[i][l] = half.clone();
                    q[l][i] = half;
                }
                _ => unreachable!("degree two"),
            }
        }
        let s = if linalg::is_pd(&q) { Status::Pass } else { Status::Fail };
        c.record(s, face_evidence(g, s, None));
    } else {
        rep.route = Some(format!("almost_quadratic_k{k}"));
        c = Clause::new("almost_quadratic_rint");
        let eps = rint_membership_grid(&fg, g, &opts.eps_grid, &opts.oracle)?;
        let s = if eps.is_some() { Status::Pass } else { Status::Fail };
        c.record(s, face_evidence(g, s, eps));
    }
    rep.push(c);
    Ok(rep)
}

fn failed_definitively(clauses: &[&Clause]) -> bool {
    clauses.iter().any(|c| c.status == Status::Fail)
}

/// Sufficient conditions for `f ∈ ΣR[[x]]²`, with a certificate on pass.
///
/// Routes are tried in order: lowest homogeneous part in the interior, the
/// corollary (nothing off the diagram up to degree `d+1`), bounded
/// regularity, and full regularity. The first route whose hypotheses hold
/// and whose certificate verifies wins.
pub fn check_sufficient(f: &Polynomial) -> Result<ConditionReport> {
    check_sufficient_with(f, &BuildOptions::default())
}

pub fn check_sufficient_with(f: &Polynomial, opts: &BuildOptions) -> Result<ConditionReport> {
    let nc = prepare(f)?;
    let mut rep = ConditionReport::new("sufficient");
    let ev = even_vertices(&nc);
    let pv = positive_vertices(f, &nc);
    if failed_definitively(&[&ev, &pv]) {
        rep.push(ev);
        rep.push(pv);
        return Ok(rep);
    }
    let mut notes = Clause::new("routes");
    notes.status = Status::Inconclusive;

    // lowest homogeneous part
    let two_m = f.min_degree().expect("nonzero");
    let lowest = f.homogeneous_part(two_m);
    let n = f.nvars();
    let full_axes = (0..n).all(|i| lowest.coeff(&Exponent::axis(n, i, two_m as u32)).is_positive());
    let unit_like = lowest.len() == 1 || f.terms().all(|(e, c)| e.is_even() && c.is_positive());
    if two_m.is_multiple_of(2) && (full_axes || unit_like) {
        match homogeneous_lowest_certificate(f, opts) {
            Ok(cert) => return Ok(finish(rep, ev, pv, "homogeneous_lowest", vec![], cert)),
            Err(e) => notes.evidence.push(note(format!("homogeneous_lowest: {e}"))),
        }
    }

    let rint = rint_clause(f, &nc, opts)?;
    let axes = meets_axes(&nc);
    let d = nc.diagram_part(f).degree().expect("nonempty diagram");
    let rest = f.try_sub(&nc.diagram_part(f))?;
    let with_cut = BuildOptions {
        cutoff: Some(d + 1),
        ..opts.clone()
    };

    if rint.status == Status::Pass && axes.status == Status::Pass {
        let mut gap = Clause::new("gap_above_d_plus_1");
        if let Some(e) = rest.support().find(|e| e.degree() <= d + 1) {
            gap.record(Status::Fail, note(format!("monomial {e} has degree <= {}", d + 1)));
        }
        if gap.status == Status::Pass {
            match sufficiency_certificate(f, &with_cut) {
                Ok(cert) => return Ok(finish(rep, ev, pv, "corollary", vec![axes, rint, gap], cert)),
                Err(e) => notes.evidence.push(note(format!("corollary: {e}"))),
            }
        }
        let truncated = f.truncate(d + 1);
        let low_nc = newton_diagram(&truncated)?;
        let reg = containment_clause(&truncated, &low_nc, opts)?;
        if reg.status == Status::Pass {
            match sufficiency_certificate(f, &with_cut) {
                Ok(cert) => {
                    return Ok(finish(rep, ev, pv, "bounded_regularity", vec![axes, rint, reg], cert))
                }
                Err(e) => notes.evidence.push(note(format!("bounded_regularity: {e}"))),
            }
        }
    }

    if rint.status == Status::Pass {
        let reg = containment_clause(f, &nc, opts)?;
        if reg.status == Status::Pass {
            let plain = BuildOptions {
                cutoff: None,
                ..opts.clone()
            };
            match sufficiency_certificate(f, &plain) {
                Ok(cert) => return Ok(finish(rep, ev, pv, "regular", vec![rint, reg], cert)),
                Err(e) => notes.evidence.push(note(format!("regular: {e}"))),
            }
        }
        rep.push(ev);
        rep.push(pv);
        rep.push(rint);
        rep.push(axes_as_info(axes));
        rep.push(reg);
    } else {
        rep.push(ev);
        rep.push(pv);
        rep.push(rint);
    }
    if rep.status == Status::Pass {
        rep.push(notes);
    }
    Ok(rep)
}

/// Missing axes only rule out the bounded routes, not sufficiency itself.
fn axes_as_info(mut c: Clause) -> Clause {
    if c.status == Status::Fail {
        c.status = Status::Pass;
        c.evidence.push(note("axes only matter for the bounded routes".into()));
    }
    c
}

fn note(text: String) -> Evidence {
    Evidence::Note { text }
}

fn finish(
    mut rep: ConditionReport,
    ev: Clause,
    pv: Clause,
    route: &str,
    clauses: Vec<Clause>,
    cert: LocalSosCertificate,
) -> ConditionReport {
    rep.route = Some(route.into());
    rep.push(ev);
    rep.push(pv);
    for c in clauses {
        rep.push(c);
    }
    rep.certificate = Some(cert);
    rep
}
