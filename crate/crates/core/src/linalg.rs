//! Exact linear algebra over the rationals and Hermite normal form over the
//! integers. Everything here is small and dense; no pivoting heuristics.

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};

use crate::scalar::{Frac, Q};

pub type QVec = Vec<Q>;
pub type QMat = Vec<Vec<Q>>;

pub fn zeros(rows: usize, cols: usize) -> QMat {
    vec![vec![Q::zero(); cols]; rows]
}

pub fn identity(n: usize) -> QMat {
    let mut m = zeros(n, n);
    for (i, row) in m.iter_mut().enumerate() {
        row[i] = Q::one();
    }
    m
}

pub fn mat_vec(m: &QMat, v: &[Q]) -> QVec {
    m.iter()
        .map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum())
        .collect()
}

pub fn mat_mul(a: &QMat, b: &QMat) -> QMat {
    let rows = a.len();
    let inner = b.len();
    let cols = if inner == 0 { 0 } else { b[0].len() };
    let mut out = zeros(rows, cols);
    for i in 0..rows {
        for k in 0..inner {
            if a[i][k].is_zero() {
                continue;
            }
            for j in 0..cols {
                let t = &a[i][k] * &b[k][j];
                out[i][j] += t;
            }
        }
    }
    out
}

/// Reduced row echelon form in place; returns the pivot columns.
pub fn rref(m: &mut QMat) -> Vec<usize> {
    let rows = m.len();
    let cols = if rows == 0 { 0 } else { m[0].len() };
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..cols {
        if r >= rows {
            break;
        }
        let Some(p) = (r..rows).find(|&i| !m[i][c].is_zero()) else {
            continue;
        };
        m.swap(r, p);
        let inv = m[r][c].recip();
        for x in m[r].iter_mut() {
            *x = &*x * &inv;
        }
        for i in 0..rows {
            if i != r && !m[i][c].is_zero() {
                let f = m[i][c].clone();
                for j in 0..cols {
                    let t = &f * &m[r][j];
                    m[i][j] -= t;
                }
            }
        }
        pivots.push(c);
        r += 1;
    }
    pivots
}

/// Solve `A x = b`. Returns one solution (free variables set to zero), or
/// `None` when inconsistent.
pub fn solve(a: &QMat, b: &[Q]) -> Option<QVec> {
    let rows = a.len();
    let cols = if rows == 0 { 0 } else { a[0].len() };
    let mut aug: QMat = a
        .iter()
        .zip(b)
        .map(|(row, rhs)| {
            let mut r = row.clone();
            r.push(rhs.clone());
            r
        })
        .collect();
    let pivots = rref(&mut aug);
    // inconsistent iff a pivot lands in the rhs column
    if pivots.contains(&cols) {
        return None;
    }
    let mut x = vec![Q::zero(); cols];
    for (r, &c) in pivots.iter().enumerate() {
        x[c] = aug[r][cols].clone();
    }
    Some(x)
}

/// Basis of the nullspace of `A`.
pub fn nullspace(a: &QMat) -> Vec<QVec> {
    let rows = a.len();
    let cols = if rows == 0 { 0 } else { a[0].len() };
    let mut m = a.to_vec();
    let pivots = rref(&mut m);
    let mut basis = Vec::new();
    for free in 0..cols {
        if pivots.contains(&free) {
            continue;
        }
        let mut v = vec![Q::zero(); cols];
        v[free] = Q::one();
        for (r, &c) in pivots.iter().enumerate() {
            v[c] = -m[r][free].clone();
        }
        basis.push(v);
    }
    basis
}

/// Inverse of a square matrix, `None` when singular.
pub fn invert(a: &QMat) -> Option<QMat> {
    let n = a.len();
    let mut aug: QMat = a
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut r = row.clone();
            for j in 0..n {
                r.push(if i == j { Q::one() } else { Q::zero() });
            }
            r
        })
        .collect();
    let pivots = rref(&mut aug);
    if pivots.len() != n || pivots.iter().enumerate().any(|(i, &c)| i != c) {
        return None;
    }
    Some(aug.into_iter().map(|row| row[n..].to_vec()).collect())
}

pub fn rank(a: &QMat) -> usize {
    let mut m = a.to_vec();
    rref(&mut m).len()
}

pub fn det(a: &QMat) -> Q {
    let n = a.len();
    let mut m = a.to_vec();
    let mut d = Q::one();
    for c in 0..n {
        let Some(p) = (c..n).find(|&i| !m[i][c].is_zero()) else {
            return Q::zero();
        };
        if p != c {
            m.swap(c, p);
            d = -d;
        }
        d *= m[c][c].clone();
        let inv = m[c][c].recip();
        for j in c..n {
            m[c][j] = &m[c][j] * &inv;
        }
        for i in (c + 1)..n {
            if !m[i][c].is_zero() {
                let f = m[i][c].clone();
                for j in c..n {
                    let t = &f * &m[c][j];
                    m[i][j] -= t;
                }
            }
        }
    }
    d
}

/// Row-style Hermite normal form of an integer matrix. Rows span the same
/// lattice as the input; output rows are the canonical basis (positive
/// pivots, entries above a pivot reduced into `[0, pivot)`), zero rows
/// dropped.
pub fn hnf(rows: Vec<Vec<BigInt>>) -> Vec<Vec<BigInt>> {
    let mut m = rows;
    let nrows = m.len();
    if nrows == 0 {
        return m;
    }
    let ncols = m[0].len();
    let mut r = 0;
    for c in 0..ncols {
        if r >= nrows {
            break;
        }
        // eliminate below row r in column c by gcd steps
        loop {
            let mut idx: Vec<usize> = (r..nrows).filter(|&i| !m[i][c].is_zero()).collect();
            if idx.is_empty() {
                break;
            }
            // bring the (absolutely) smallest nonzero entry to row r
            idx.sort_by_key(|&i| m[i][c].abs());
            let p = idx[0];
            m.swap(r, p);
            if m[r][c].is_negative() {
                for x in m[r].iter_mut() {
                    *x = -x.clone();
                }
            }
            let mut done = true;
            for i in (r + 1)..nrows {
                if m[i][c].is_zero() {
                    continue;
                }
                let qd = floor_div(&m[i][c], &m[r][c]);
                for j in 0..ncols {
                    let t = &qd * &m[r][j];
                    m[i][j] -= t;
                }
                if !m[i][c].is_zero() {
                    done = false;
                }
            }
            if done {
                break;
            }
        }
        if m[r][c].is_zero() {
            continue;
        }
        // reduce entries above the pivot
        for i in 0..r {
            let qd = floor_div(&m[i][c], &m[r][c]);
            if !qd.is_zero() {
                for j in 0..ncols {
                    let t = &qd * &m[r][j];
                    m[i][j] -= t;
                }
            }
        }
        r += 1;
    }
    m.truncate(r);
    m
}

fn floor_div(a: &BigInt, b: &BigInt) -> BigInt {
    let (q, r) = (a / b, a % b);
    if r.is_zero() || r.sign() == b.sign() {
        q
    } else {
        q - BigInt::one()
    }
}

/// Solve `A x = b` over the fraction field of the Laurent ring. One solution
/// with free variables zero, or `None` when inconsistent.
pub fn fr_solve(a: &[Vec<Frac>], b: &[Frac]) -> Option<Vec<Frac>> {
    let rows = a.len();
    let cols = if rows == 0 { 0 } else { a[0].len() };
    let mut aug: Vec<Vec<Frac>> = a
        .iter()
        .zip(b)
        .map(|(row, rhs)| {
            let mut r = row.to_vec();
            r.push(rhs.clone());
            r
        })
        .collect();
    let pivots = fr_rref(&mut aug);
    if pivots.contains(&cols) {
        return None;
    }
    let mut x = vec![Frac::zero(); cols];
    for (r, &c) in pivots.iter().enumerate() {
        x[c] = aug[r][cols].clone();
    }
    Some(x)
}

/// Reduced row echelon form over the fraction field; returns pivot columns.
pub fn fr_rref(m: &mut [Vec<Frac>]) -> Vec<usize> {
    let rows = m.len();
    let cols = if rows == 0 { 0 } else { m[0].len() };
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..cols {
        if r >= rows {
            break;
        }
        let Some(p) = (r..rows).find(|&i| !m[i][c].is_zero()) else {
            continue;
        };
        m.swap(r, p);
        let inv = m[r][c].recip();
        for x in m[r].iter_mut() {
            *x = x.mul(&inv);
        }
        for i in 0..rows {
            if i != r && !m[i][c].is_zero() {
                let f = m[i][c].clone();
                for j in 0..cols {
                    let t = f.mul(&m[r][j]);
                    m[i][j] = m[i][j].sub(&t);
                }
            }
        }
        pivots.push(c);
        r += 1;
    }
    pivots
}

pub fn fr_rank(a: &[Vec<Frac>]) -> usize {
    let mut m = a.to_vec();
    fr_rref(&mut m).len()
}

/// Indices of a maximal linearly independent subset of rows, chosen greedily
/// in order (deterministic). Incremental elimination: each kept row is
/// normalized to a leading 1 and reduced against the earlier kept rows.
pub fn fr_row_profile(a: &[Vec<Frac>]) -> Vec<usize> {
    let mut ech: Vec<Vec<Frac>> = Vec::new();
    let mut lead: Vec<usize> = Vec::new();
    let mut idx = Vec::new();
    for (i, row) in a.iter().enumerate() {
        let mut r = row.to_vec();
        for (e, &lc) in ech.iter().zip(&lead) {
            if !r[lc].is_zero() {
                let f = r[lc].clone();
                for (x, y) in r.iter_mut().zip(e) {
                    let t = f.mul(y);
                    *x = x.sub(&t);
                }
            }
        }
        if let Some(lc) = r.iter().position(|x| !x.is_zero()) {
            let inv = r[lc].recip();
            for x in r.iter_mut() {
                *x = x.mul(&inv);
            }
            ech.push(r);
            lead.push(lc);
            idx.push(i);
        }
    }
    idx
}
