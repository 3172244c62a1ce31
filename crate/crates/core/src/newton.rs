//! Newton polyhedra, Newton diagrams, face restrictions and principal
//! polynomials.
//!
//! The polyhedron `conv(S) + R_+^n` is described by its facets, found by
//! solving for normals through small point/ray subsets with exact rational
//! elimination. That is plenty for the handful of exponents a desk-scale
//! polynomial carries, and avoids a general convex hull dependency.

use std::collections::{BTreeMap, BTreeSet};

use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg;
use crate::poly::{Exponent, Polynomial, Rational, WeightVector};

/// Largest number of variables the facet enumeration is meant for.
pub const MAX_VARS: usize = 6;

/// A supporting inequality `normal . alpha >= v`.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug, Serialize)]
pub struct Facet {
    pub normal: Vec<i64>,
    pub v: i64,
}

impl Facet {
    pub fn value(&self, e: &Exponent) -> i64 {
        e.dot(&self.normal)
    }

    pub fn is_compact_direction(&self) -> bool {
        self.normal.iter().all(|&a| a > 0)
    }
}

/// `conv(points) + R_+^n` in facet form.
#[derive(Clone, Debug, Serialize)]
pub struct Polyhedron {
    pub nvars: usize,
    /// Minimal points under componentwise order; the other points add nothing.
    pub points: Vec<Exponent>,
    pub facets: Vec<Facet>,
}

impl Polyhedron {
    pub fn new(nvars: usize, points: impl IntoIterator<Item = Exponent>) -> Result<Self> {
        let all: BTreeSet<Exponent> = points.into_iter().collect();
        if all.is_empty() {
            return Err(Error::ZeroPolynomial);
        }
        if let Some(e) = all.iter().find(|e| e.nvars() != nvars) {
            return Err(Error::DimensionMismatch {
                expected: nvars,
                found: e.nvars(),
            });
        }
        let points: Vec<Exponent> = all
            .iter()
            .filter(|p| !all.iter().any(|q| q != *p && q.divides(p)))
            .cloned()
            .collect();
        let facets = enumerate_facets(nvars, &points);
        Ok(Polyhedron {
            nvars,
            points,
            facets,
        })
    }

    /// Membership of a lattice point.
    pub fn contains(&self, e: &Exponent) -> bool {
        self.facets.iter().all(|f| f.value(e) >= f.v)
    }

    /// Membership of a rational point.
    pub fn contains_rational(&self, x: &[Rational]) -> bool {
        self.facets.iter().all(|f| {
            let s: Rational = f
                .normal
                .iter()
                .zip(x)
                .map(|(&a, xi)| Rational::from_integer(a.into()) * xi)
                .sum();
            s >= Rational::from_integer(f.v.into())
        })
    }
}

fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(k);
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            if n - i < k - cur.len() {
                break;
            }
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    rec(0, n, k, &mut cur, &mut out);
    out
}

fn enumerate_facets(n: usize, points: &[Exponent]) -> Vec<Facet> {
    let mut found: BTreeSet<Facet> = BTreeSet::new();
    for nrays in 0..n {
        let k = n - nrays;
        if k > points.len() {
            continue;
        }
        let ray_sets = subsets(n, nrays);
        let point_sets = subsets(points.len(), k);
        for rays in &ray_sets {
            for ps in &point_sets {
                let base = &points[ps[0]];
                let mut rows: linalg::Matrix = Vec::new();
                for &j in &ps[1..] {
                    rows.push(
                        points[j]
                            .coords()
                            .iter()
                            .zip(base.coords())
                            .map(|(&a, &b)| Rational::from_integer((a as i64 - b as i64).into()))
                            .collect(),
                    );
                }
                for &r in rays {
                    let mut row = vec![Rational::zero(); n];
                    row[r] = Rational::one();
                    rows.push(row);
                }
                let ns = if rows.is_empty() {
                    // n = 1 with a single point: the normal is e_1
                    vec![vec![Rational::one()]]
                } else {
                    linalg::nullspace(&rows, n)
                };
                if ns.len() != 1 {
                    continue;
                }
                let ints = linalg::primitive_integer(&ns[0]);
                let pos = ints.iter().any(|x| x.is_positive());
                let neg = ints.iter().any(|x| x.is_negative());
                if pos && neg {
                    continue;
                }
                let sign: i64 = if neg { -1 } else { 1 };
                let normal: Vec<i64> = ints
                    .iter()
                    .map(|x| x.to_i64().expect("small normal") * sign)
                    .collect();
                let v = points.iter().map(|p| p.dot(&normal)).min().expect("nonempty");
                if base.dot(&normal) != v {
                    continue;
                }
                found.insert(Facet { normal, v });
            }
        }
    }
    found.into_iter().collect()
}

/// A compact face of the Newton polyhedron.
#[derive(Clone, PartialEq, Eq, Debug, Serialize)]
pub struct Face {
    pub dim: usize,
    pub vertices: Vec<Exponent>,
    /// Strictly positive primitive normal with `v = min A.alpha`.
    pub normal: WeightVector,
    /// Exponents of `supp f` lying on the face.
    pub lattice_points: Vec<Exponent>,
}

impl Face {
    pub fn contains_point(&self, e: &Exponent) -> bool {
        self.normal.weight(e) == self.normal.v && self.in_hull(e)
    }

    fn in_hull(&self, e: &Exponent) -> bool {
        // the face is the slice of conv(vertices) + R_+^n by its hyperplane
        Polyhedron::new(e.nvars(), self.vertices.iter().cloned())
            .map(|p| p.contains(e))
            .unwrap_or(false)
    }

    /// All even lattice points on the face, in exponent order.
    pub fn even_points(&self) -> Vec<Exponent> {
        let n = self.vertices[0].nvars();
        let hull = Polyhedron::new(n, self.vertices.iter().cloned()).expect("nonempty face");
        let bounds: Vec<u32> = (0..n)
            .map(|i| self.vertices.iter().map(|v| v.coords()[i]).max().unwrap_or(0) / 2)
            .collect();
        let mut out = Vec::new();
        let mut cur = vec![0u32; n];
        loop {
            let e = Exponent::new(cur.iter().map(|c| 2 * c).collect());
            if self.normal.weight(&e) == self.normal.v && hull.contains(&e) {
                out.push(e);
            }
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

    /// Lattice points of half the face, the monomial basis of `R[x]_{γ/2}`.
    pub fn half_basis(&self) -> Vec<Exponent> {
        self.even_points()
            .iter()
            .map(|e| e.half().expect("even point"))
            .collect()
    }

    /// `p_γ`: the sum of `x^β` over even lattice points `β` on the face.
    pub fn principal_polynomial(&self) -> Result<Polynomial> {
        let pts = self.even_points();
        if pts.is_empty() {
            return Err(Error::NoEvenPoint);
        }
        let n = self.vertices[0].nvars();
        Polynomial::from_terms(n, pts.into_iter().map(|e| (e, Rational::one())))
    }

    /// The plane `|α| = 2k` as a single face: normal `(1,...,1)`.
    pub fn is_degree_plane(&self) -> bool {
        self.normal.a.iter().all(|&a| a == 1)
    }
}

/// Newton polyhedron of `f` together with its compact faces.
#[derive(Clone, Debug, Serialize)]
pub struct NewtonComplex {
    pub nvars: usize,
    pub generators: Vec<Exponent>,
    pub vertices: Vec<Exponent>,
    #[serde(skip)]
    pub polyhedron: Polyhedron,
    pub faces: Vec<Face>,
    pub maximal_faces: Vec<usize>,
}

/// Computes the Newton polyhedron and diagram of `f`.
///
/// ```
/// use newton_sos::newton::newton_diagram;
/// use newton_sos::poly::{parse_polynomial, VarNames};
/// let vars = VarNames::new(["x", "y"]);
/// let f = parse_polynomial("x^6 + x^4*y + x^3*y^3 + x^2*y^2 + y^4", &vars).unwrap();
/// let nc = newton_diagram(&f).unwrap();
/// let v: Vec<String> = nc.vertices.iter().map(|e| e.to_string()).collect();
/// assert_eq!(v, ["(0,4)", "(2,2)", "(6,0)"]);
/// assert_eq!(nc.maximal_faces.len(), 2);
/// ```
pub fn newton_diagram(f: &Polynomial) -> Result<NewtonComplex> {
    if f.is_zero() {
        return Err(Error::ZeroPolynomial);
    }
    if f.degree() == Some(0) {
        return Err(Error::ConstantPolynomial);
    }
    complex_from_points(f.nvars(), f.support().cloned().collect())
}

/// Newton complex of an arbitrary finite exponent set.
pub fn complex_from_points(n: usize, generators: Vec<Exponent>) -> Result<NewtonComplex> {
    let poly = Polyhedron::new(n, generators.iter().cloned())?;
    let pts = &poly.points;

    // faces as (point index set, ray set), closed under facet intersection
    let facet_face = |f: &Facet| -> (BTreeSet<usize>, BTreeSet<usize>) {
        let on: BTreeSet<usize> = (0..pts.len()).filter(|&i| f.value(&pts[i]) == f.v).collect();
        let rays: BTreeSet<usize> = (0..n).filter(|&i| f.normal[i] == 0).collect();
        (on, rays)
    };
    let mut faces: BTreeMap<(BTreeSet<usize>, BTreeSet<usize>), BTreeSet<usize>> = BTreeMap::new();
    for (fi, f) in poly.facets.iter().enumerate() {
        faces.entry(facet_face(f)).or_default().insert(fi);
    }
    let mut frontier: Vec<_> = faces.keys().cloned().collect();
    while let Some(face) = frontier.pop() {
        let owners = faces[&face].clone();
        for (fi, f) in poly.facets.iter().enumerate() {
            if owners.contains(&fi) {
                continue;
            }
            let (on, rays) = facet_face(f);
            let pts_i: BTreeSet<usize> = face.0.intersection(&on).cloned().collect();
            if pts_i.is_empty() {
                continue;
            }
            let rays_i: BTreeSet<usize> = face.1.intersection(&rays).cloned().collect();
            let key = (pts_i, rays_i);
            let mut own = owners.clone();
            own.insert(fi);
            match faces.get_mut(&key) {
                Some(existing) => {
                    let before = existing.len();
                    existing.extend(own);
                    if existing.len() != before {
                        frontier.push(key);
                    }
                }
                None => {
                    faces.insert(key.clone(), own);
                    frontier.push(key);
                }
            }
        }
    }

    let mut compact: Vec<Face> = Vec::new();
    let mut vertex_set: BTreeSet<Exponent> = BTreeSet::new();
    for ((on, rays), owners) in &faces {
        if !rays.is_empty() {
            continue;
        }
        let mut a = vec![0i64; n];
        for &fi in owners {
            for (x, y) in a.iter_mut().zip(&poly.facets[fi].normal) {
                *x += y;
            }
        }
        let g = a.iter().fold(0i64, |acc, &x| num_integer::gcd(acc, x));
        for x in a.iter_mut() {
            *x /= g;
        }
        let v = pts.iter().map(|p| p.dot(&a)).min().expect("nonempty");
        let members: Vec<&Exponent> = on.iter().map(|&i| &pts[i]).collect();
        let dim = affine_dim(&members);
        if dim == 0 {
            vertex_set.insert(members[0].clone());
        }
        let lattice_points: Vec<Exponent> = generators
            .iter()
            .filter(|e| e.dot(&a) == v)
            .cloned()
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        compact.push(Face {
            dim,
            vertices: Vec::new(),
            normal: WeightVector { a, v },
            lattice_points,
        });
    }
    for face in compact.iter_mut() {
        face.vertices = face
            .lattice_points
            .iter()
            .filter(|e| vertex_set.contains(*e))
            .cloned()
            .collect();
    }
    compact.sort_by(|x, y| {
        x.dim
            .cmp(&y.dim)
            .then_with(|| x.vertices.cmp(&y.vertices))
    });
    let maximal_faces: Vec<usize> = (0..compact.len())
        .filter(|&i| {
            let vi: BTreeSet<&Exponent> = compact[i].vertices.iter().collect();
            !compact.iter().enumerate().any(|(j, g)| {
                j != i && g.vertices.len() > vi.len() && vi.iter().all(|e| g.vertices.contains(e))
            })
        })
        .collect();
    Ok(NewtonComplex {
        nvars: n,
        generators: generators.into_iter().collect::<BTreeSet<_>>().into_iter().collect(),
        vertices: vertex_set.into_iter().collect(),
        polyhedron: poly,
        faces: compact,
        maximal_faces,
    })
}

fn affine_dim(points: &[&Exponent]) -> usize {
    if points.len() <= 1 {
        return 0;
    }
    let base = points[0];
    let rows: linalg::Matrix = points[1..]
        .iter()
        .map(|p| {
            p.coords()
                .iter()
                .zip(base.coords())
                .map(|(&a, &b)| Rational::from_integer((a as i64 - b as i64).into()))
                .collect()
        })
        .collect();
    linalg::rank(&rows)
}

impl NewtonComplex {
    pub fn maximal(&self) -> impl Iterator<Item = &Face> {
        self.maximal_faces.iter().map(|&i| &self.faces[i])
    }

    /// `α ∈ conv Δ(f)`.
    pub fn in_polyhedron(&self, e: &Exponent) -> bool {
        self.polyhedron.contains(e)
    }

    /// `α` lies on some compact face.
    pub fn on_diagram(&self, e: &Exponent) -> bool {
        self.maximal().any(|g| g.contains_point(e))
    }

    /// For every `i`, some generator lies on the `i`-th coordinate axis.
    pub fn meets_all_axes(&self) -> bool {
        (0..self.nvars).all(|i| {
            self.generators
                .iter()
                .any(|e| e.coords()[i] > 0 && e.variables().all(|j| j == i))
        })
    }

    /// The diagram part `f_Γ`: terms of `f` lying on some compact face.
    pub fn diagram_part(&self, f: &Polynomial) -> Polynomial {
        f.filter(|e, _| self.faces.iter().any(|g| g.lattice_points.contains(e)))
    }

    pub fn contains_face(&self, face: &Face) -> bool {
        self.faces.iter().any(|g| g == face)
    }
}

/// `f_γ`: the terms of `f` on `γ`.
pub fn face_restriction(f: &Polynomial, nc: &NewtonComplex, face: &Face) -> Result<Polynomial> {
    if !nc.contains_face(face) {
        return Err(Error::ForeignFace);
    }
    Ok(f.filter(|e, _| face.lattice_points.contains(e)))
}

/// Even part of a support, with both upward closures available.
#[derive(Clone, PartialEq, Eq, Debug, Serialize)]
pub struct EvenRegion {
    pub nvars: usize,
    pub base_points: Vec<Exponent>,
}

impl EvenRegion {
    pub fn from_bases(nvars: usize, bases: impl IntoIterator<Item = Exponent>) -> Result<Self> {
        let all: BTreeSet<Exponent> = bases.into_iter().collect();
        if let Some(b) = all.iter().find(|b| !b.is_even()) {
            return Err(Error::Input(format!("region base {b} is not even")));
        }
        if let Some(b) = all.iter().find(|b| b.nvars() != nvars) {
            return Err(Error::DimensionMismatch {
                expected: nvars,
                found: b.nvars(),
            });
        }
        let minimal = all
            .iter()
            .filter(|p| !all.iter().any(|q| q != *p && q.divides(p)))
            .cloned()
            .collect();
        Ok(EvenRegion {
            nvars,
            base_points: minimal,
        })
    }

    /// `β ∈ ∪ (b + R_+^n)`.
    pub fn region_real(&self, e: &Exponent) -> bool {
        self.base_points.iter().any(|b| b.divides(e))
    }

    /// `β ∈ ∪ (b + (2Z_+)^n)`.
    pub fn region_even_translate(&self, e: &Exponent) -> bool {
        self.base_points.iter().any(|b| {
            b.divides(e)
                && e.coords()
                    .iter()
                    .zip(b.coords())
                    .all(|(x, y)| (x - y) % 2 == 0)
        })
    }

    /// Even lattice points of the region; both closures agree on these.
    pub fn contains_even(&self, e: &Exponent) -> bool {
        e.is_even() && self.region_real(e)
    }

    /// `conv Δ_E` in facet form; `None` for an empty region.
    pub fn hull(&self) -> Option<Polyhedron> {
        if self.base_points.is_empty() {
            return None;
        }
        Polyhedron::new(self.nvars, self.base_points.iter().cloned()).ok()
    }
}

/// Even exponents of `supp f` as a region.
pub fn even_region(f: &Polynomial) -> Result<EvenRegion> {
    if f.is_zero() {
        return Err(Error::ZeroPolynomial);
    }
    EvenRegion::from_bases(f.nvars(), f.support().filter(|e| e.is_even()).cloned())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::{parse_polynomial, VarNames};

    fn p(s: &str, names: &[&str]) -> Polynomial {
        parse_polynomial(s, &VarNames::new(names.iter().copied())).unwrap()
    }

    fn e(v: &[u32]) -> Exponent {
        Exponent::new(v.to_vec())
    }

    #[test]
    fn paper_two_edge_diagram() {
        let f = p("x^6 + x^4*y + x^3*y^3 + x^2*y^2 + y^4", &["x", "y"]);
        let nc = newton_diagram(&f).unwrap();
        assert_eq!(nc.vertices, vec![e(&[0, 4]), e(&[2, 2]), e(&[6, 0])]);
        let max: Vec<&Face> = nc.maximal().collect();
        assert_eq!(max.len(), 2);
        let g1 = face_restriction(&f, &nc, max[0]).unwrap();
        let g2 = face_restriction(&f, &nc, max[1]).unwrap();
        assert_eq!(g1, p("x^2*y^2 + y^4", &["x", "y"]));
        assert_eq!(g2, p("x^6 + x^4*y + x^2*y^2", &["x", "y"]));
        assert_eq!(max[0].normal.a, vec![1, 1]);
        assert_eq!(max[1].normal.a, vec![1, 2]);
        assert_eq!(max[1].normal.v, 6);
    }

    #[test]
    fn single_monomial() {
        let nc = newton_diagram(&p("x^2", &["x"])).unwrap();
        assert_eq!(nc.faces.len(), 1);
        assert_eq!(nc.faces[0].vertices, vec![e(&[2])]);
    }

    #[test]
    fn three_variable_plane() {
        let f = p("x^2 + y^2 + x*y*z + y*z^6 + z^10", &["x", "y", "z"]);
        let nc = newton_diagram(&f).unwrap();
        assert_eq!(nc.maximal_faces.len(), 1);
        let g = nc.maximal().next().unwrap();
        assert_eq!(g.dim, 2);
        assert_eq!(g.normal.a, vec![5, 5, 1]);
        assert_eq!(g.normal.v, 10);
        assert!(!g.lattice_points.contains(&e(&[1, 1, 5])));
        assert!(nc.meets_all_axes());
    }

    #[test]
    fn principal_polynomials() {
        let f = p("x^6 + x^4*y + x^3*y^3 + x^2*y^2 + y^4", &["x", "y"]);
        let nc = newton_diagram(&f).unwrap();
        let g1 = nc.maximal().next().unwrap();
        assert_eq!(g1.principal_polynomial().unwrap(), p("y^4 + x^2*y^2", &["x", "y"]));
        let f = p("x^16 + y^10 - x^13*y^2", &["x", "y"]);
        let nc = newton_diagram(&f).unwrap();
        let g = nc.maximal().next().unwrap();
        assert_eq!(g.principal_polynomial().unwrap(), p("x^16 + y^10", &["x", "y"]));
        let vertex = nc.faces.iter().find(|f| f.dim == 0).unwrap();
        assert_eq!(vertex.principal_polynomial().unwrap().len(), 1);
    }

    #[test]
    fn face_without_even_point() {
        let nc = newton_diagram(&p("x^3", &["x"])).unwrap();
        assert!(matches!(
            nc.faces[0].principal_polynomial(),
            Err(Error::NoEvenPoint)
        ));
    }

    #[test]
    fn foreign_face_rejected() {
        let f = p("x^2 + y^2", &["x", "y"]);
        let g = p("x^4 + y^2", &["x", "y"]);
        let nf = newton_diagram(&f).unwrap();
        let ng = newton_diagram(&g).unwrap();
        let face = ng.maximal().next().unwrap();
        assert!(matches!(face_restriction(&f, &nf, face), Err(Error::ForeignFace)));
    }

    #[test]
    fn even_region_closures() {
        let f = p("x^16 + y^10 - x^13*y^2", &["x", "y"]);
        let r = even_region(&f).unwrap();
        assert_eq!(r.base_points, vec![e(&[0, 10]), e(&[16, 0])]);
        assert!(r.region_real(&e(&[0, 12])));
        assert!(!r.region_real(&e(&[15, 0])));
        assert!(r.region_real(&e(&[18, 4])));
        assert!(r.region_real(&e(&[17, 0])));
        assert!(!r.region_even_translate(&e(&[17, 0])));
    }

    #[test]
    fn constant_and_zero_rejected() {
        assert!(matches!(newton_diagram(&Polynomial::zero(2)), Err(Error::ZeroPolynomial)));
        assert!(matches!(
            newton_diagram(&p("3", &["x"])),
            Err(Error::ConstantPolynomial)
        ));
    }

    #[test]
    fn polyhedron_membership() {
        let poly = Polyhedron::new(2, vec![e(&[4, 0]), e(&[0, 4])]).unwrap();
        assert!(!poly.contains(&e(&[1, 1])));
        assert!(poly.contains(&e(&[2, 2])));
        assert!(poly.contains(&e(&[3, 1])));
        assert!(poly.contains(&e(&[5, 0])));
    }
}
