//! Small exact linear algebra over the rationals.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use crate::poly::Rational;

pub type Matrix = Vec<Vec<Rational>>;

/// Reduced row echelon form in place; returns the pivot columns.
pub fn rref(m: &mut Matrix) -> Vec<usize> {
    let rows = m.len();
    if rows == 0 {
        return Vec::new();
    }
    let cols = m[0].len();
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..cols {
        if r == rows {
            break;
        }
        let Some(p) = (r..rows).find(|&i| !m[i][c].is_zero()) else {
            continue;
        };
        m.swap(r, p);
        let inv = m[r][c].recip();
        for x in m[r].iter_mut() {
            *x *= &inv;
        }
        for i in 0..rows {
            if i != r && !m[i][c].is_zero() {
                let f = m[i][c].clone();
                let pivot_row = m[r].clone();
                for (x, p) in m[i].iter_mut().zip(&pivot_row) {
                    *x -= &f * p;
                }
            }
        }
        pivots.push(c);
        r += 1;
    }
    pivots
}

pub fn rank(m: &Matrix) -> usize {
    let mut a = m.clone();
    rref(&mut a).len()
}

/// Basis of `{x : m x = 0}`.
pub fn nullspace(m: &Matrix, cols: usize) -> Vec<Vec<Rational>> {
    let mut a = m.clone();
    let pivots = rref(&mut a);
    let free: Vec<usize> = (0..cols).filter(|c| !pivots.contains(c)).collect();
    free.iter()
        .map(|&f| {
            let mut v = vec![Rational::zero(); cols];
            v[f] = Rational::one();
            for (row, &pc) in pivots.iter().enumerate() {
                v[pc] = -a[row][f].clone();
            }
            v
        })
        .collect()
}

/// Some solution of `m x = b`, or `None` when inconsistent.
pub fn solve(m: &Matrix, b: &[Rational]) -> Option<Vec<Rational>> {
    let cols = m.first().map_or(0, Vec::len);
    let mut a: Matrix = m
        .iter()
        .zip(b)
        .map(|(row, bi)| {
            let mut r = row.clone();
            r.push(bi.clone());
            r
        })
        .collect();
    let pivots = rref(&mut a);
    if pivots.contains(&cols) {
        return None;
    }
    let mut x = vec![Rational::zero(); cols];
    for (row, &pc) in pivots.iter().enumerate() {
        x[pc] = a[row][cols].clone();
    }
    Some(x)
}

/// Scales a rational vector to a primitive integer vector with the same direction.
pub fn primitive_integer(v: &[Rational]) -> Vec<BigInt> {
    let lcm = v
        .iter()
        .fold(BigInt::one(), |acc, x| acc.lcm(x.denom()));
    let ints: Vec<BigInt> = v.iter().map(|x| (x * Rational::from_integer(lcm.clone())).to_integer()).collect();
    let g = ints.iter().fold(BigInt::zero(), |acc, x| acc.gcd(x));
    if g.is_zero() {
        return ints;
    }
    ints.into_iter().map(|x| x / &g).collect()
}

/// `L D L^T` factorization of a symmetric matrix without pivoting.
///
/// Returns `(L, D)` with unit lower triangular `L`. Zero pivots are allowed
/// only when the rest of their column is zero too; otherwise `None` (the
/// matrix is then certainly not PSD, or needs pivoting).
pub fn ldl(m: &Matrix) -> Option<(Matrix, Vec<Rational>)> {
    let n = m.len();
    let mut l = vec![vec![Rational::zero(); n]; n];
    let mut d = vec![Rational::zero(); n];
    for j in 0..n {
        let mut dj = m[j][j].clone();
        for k in 0..j {
            if !l[j][k].is_zero() {
                dj -= &l[j][k] * &l[j][k] * &d[k];
            }
        }
        d[j] = dj;
        l[j][j] = Rational::one();
        for i in j + 1..n {
            let mut s = m[i][j].clone();
            for k in 0..j {
                if !l[i][k].is_zero() && !l[j][k].is_zero() {
                    s -= &l[i][k] * &l[j][k] * &d[k];
                }
            }
            if d[j].is_zero() {
                if !s.is_zero() {
                    return None;
                }
            } else {
                l[i][j] = s / &d[j];
            }
        }
    }
    Some((l, d))
}

/// Exact positive semidefiniteness test.
pub fn is_psd(m: &Matrix) -> bool {
    match ldl(m) {
        Some((_, d)) => d.iter().all(|x| !x.is_negative()),
        None => false,
    }
}

/// Exact positive definiteness test.
pub fn is_pd(m: &Matrix) -> bool {
    match ldl(m) {
        Some((_, d)) => d.iter().all(|x| x.is_positive()),
        None => false,
    }
}

/// `B^T M B` for an `n x k` basis matrix given as `k` column vectors.
pub fn congruence(m: &Matrix, basis: &[Vec<Rational>]) -> Matrix {
    let k = basis.len();
    let n = m.len();
    let mb: Vec<Vec<Rational>> = basis
        .iter()
        .map(|b| (0..n).map(|i| (0..n).map(|j| &m[i][j] * &b[j]).sum()).collect())
        .collect();
    (0..k)
        .map(|a| {
            (0..k)
                .map(|c| (0..n).map(|i| &basis[a][i] * &mb[c][i]).sum())
                .collect()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::{int, rat};

    fn m(rows: &[&[i64]]) -> Matrix {
        rows.iter().map(|r| r.iter().map(|&x| int(x)).collect()).collect()
    }

    #[test]
    fn nullspace_of_rank_deficient() {
        let a = m(&[&[1, 2, 3], &[2, 4, 6]]);
        let ns = nullspace(&a, 3);
        assert_eq!(ns.len(), 2);
        for v in ns {
            for row in &a {
                let s: Rational = row.iter().zip(&v).map(|(x, y)| x * y).sum();
                assert!(s.is_zero());
            }
        }
    }

    #[test]
    fn solve_consistent_and_not() {
        let a = m(&[&[1, 1], &[1, -1]]);
        assert_eq!(solve(&a, &[int(2), int(0)]).unwrap(), vec![int(1), int(1)]);
        let b = m(&[&[1, 1], &[2, 2]]);
        assert!(solve(&b, &[int(1), int(3)]).is_none());
    }

    #[test]
    fn primitive_vector() {
        let v = primitive_integer(&[rat(1, 2), rat(1, 3), int(0)]);
        assert_eq!(v, vec![BigInt::from(3), BigInt::from(2), BigInt::from(0)]);
    }

    #[test]
    fn definiteness() {
        assert!(is_pd(&m(&[&[2, -1], &[-1, 2]])));
        assert!(is_psd(&m(&[&[1, 1], &[1, 1]])));
        assert!(!is_pd(&m(&[&[1, 1], &[1, 1]])));
        assert!(!is_psd(&m(&[&[1, 2], &[2, 1]])));
        assert!(!is_psd(&m(&[&[0, 1], &[1, 0]])));
        assert!(is_psd(&m(&[&[0, 0], &[0, 3]])));
    }

    #[test]
    fn ldl_reconstructs() {
        let a = m(&[&[4, 2, 2], &[2, 5, 3], &[2, 3, 6]]);
        let (l, d) = ldl(&a).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let s: Rational = (0..3).map(|k| &l[i][k] * &d[k] * &l[j][k]).sum();
                assert_eq!(s, a[i][j]);
            }
        }
    }
}
