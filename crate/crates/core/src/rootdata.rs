//! Root data of finite type: Cartan matrices, the Weyl-invariant inner
//! product, weights in simple-root coordinates, and exact rational lattices.

use std::fmt;

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{self, QMat};
use crate::scalar::{int, Q};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum RootDataError {
    #[error("unsupported type/rank: {letter}{rank}")]
    InvalidType { letter: char, rank: usize },
}

/// Rational coordinate vector over the simple-root basis.
///
/// Every weight-like quantity in the crate (roots, fundamental weights,
/// lattice generators, K-indices) is stored this way, because all the form
/// arithmetic is bilinear over the root span.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Weight(pub Vec<Q>);

impl Weight {
    pub fn zero(rank: usize) -> Self {
        Weight(vec![Q::zero(); rank])
    }

    pub fn simple_root(rank: usize, i: usize) -> Self {
        let mut v = vec![Q::zero(); rank];
        v[i] = Q::one();
        Weight(v)
    }

    pub fn rank(&self) -> usize {
        self.0.len()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|c| c.is_zero())
    }

    pub fn add(&self, other: &Weight) -> Weight {
        Weight(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    pub fn sub(&self, other: &Weight) -> Weight {
        Weight(self.0.iter().zip(&other.0).map(|(a, b)| a - b).collect())
    }

    pub fn neg(&self) -> Weight {
        Weight(self.0.iter().map(|a| -a.clone()).collect())
    }

    pub fn scale(&self, c: &Q) -> Weight {
        Weight(self.0.iter().map(|a| a * c).collect())
    }
}

impl fmt::Debug for Weight {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, c) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{}", c)?;
        }
        write!(f, ")")
    }
}

/// A root datum of finite type: Cartan matrix plus symmetrizers.
/// Serializes as its `{type, rank}` descriptor and deserializes by
/// rebuilding from it.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct RootDatum {
    #[serde(rename = "type")]
    pub letter: char,
    pub rank: usize,
    #[serde(skip)]
    pub cartan: Vec<Vec<i64>>,
    #[serde(skip)]
    pub symmetrizers: Vec<Q>,
}

impl<'de> Deserialize<'de> for RootDatum {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Descriptor {
            #[serde(rename = "type")]
            letter: char,
            rank: usize,
        }
        let desc = Descriptor::deserialize(d)?;
        RootDatum::build(desc.letter, desc.rank).map_err(serde::de::Error::custom)
    }
}

impl RootDatum {
    /// Cartan data for types A-G, normalized so short roots have squared
    /// length 2.
    pub fn build(letter: char, rank: usize) -> Result<RootDatum, RootDataError> {
        let n = rank;
        let err = || RootDataError::InvalidType { letter, rank };
        if n == 0 {
            return Err(err());
        }
        let mut a = vec![vec![0i64; n]; n];
        for (i, row) in a.iter_mut().enumerate() {
            row[i] = 2;
        }
        let link = |a: &mut Vec<Vec<i64>>, i: usize, j: usize| {
            a[i][j] = -1;
            a[j][i] = -1;
        };
        let mut d = vec![Q::one(); n];
        match letter {
            'A' => {
                for i in 0..n.saturating_sub(1) {
                    link(&mut a, i, i + 1);
                }
            }
            'B' => {
                if n < 2 {
                    return Err(err());
                }
                for i in 0..n - 1 {
                    link(&mut a, i, i + 1);
                }
                // alpha_n short, the rest long
                a[n - 1][n - 2] = -2;
                for di in d.iter_mut().take(n - 1) {
                    *di = int(2);
                }
            }
            'C' => {
                if n < 2 {
                    return Err(err());
                }
                for i in 0..n - 1 {
                    link(&mut a, i, i + 1);
                }
                // alpha_n long
                a[n - 2][n - 1] = -2;
                d[n - 1] = int(2);
            }
            'D' => {
                if n < 3 {
                    return Err(err());
                }
                for i in 0..n - 2 {
                    link(&mut a, i, i + 1);
                }
                link(&mut a, n - 3, n - 1);
            }
            'E' => {
                if !(6..=8).contains(&n) {
                    return Err(err());
                }
                // Bourbaki: chain 1-3-4-5-...-n with 2 attached to 4
                link(&mut a, 0, 2);
                link(&mut a, 1, 3);
                for i in 2..n - 1 {
                    link(&mut a, i, i + 1);
                }
            }
            'F' => {
                if n != 4 {
                    return Err(err());
                }
                link(&mut a, 0, 1);
                link(&mut a, 2, 3);
                a[1][2] = -1;
                a[2][1] = -2;
                d[0] = int(2);
                d[1] = int(2);
            }
            'G' => {
                if n != 2 {
                    return Err(err());
                }
                a[0][1] = -3;
                a[1][0] = -1;
                d[1] = int(3);
            }
            _ => return Err(err()),
        }
        let rd = RootDatum {
            letter,
            rank: n,
            cartan: a,
            symmetrizers: d,
        };
        debug_assert!(rd.is_symmetric());
        Ok(rd)
    }

    fn is_symmetric(&self) -> bool {
        for i in 0..self.rank {
            for j in 0..self.rank {
                if self.pair_roots(i, j) != self.pair_roots(j, i) {
                    return false;
                }
            }
        }
        true
    }

    /// `(alpha_i, alpha_j) = d_i a_ij`.
    pub fn pair_roots(&self, i: usize, j: usize) -> Q {
        &self.symmetrizers[i] * int(self.cartan[i][j])
    }

    /// W-invariant inner product, bilinear extension of `pair_roots`.
    pub fn inner(&self, a: &Weight, b: &Weight) -> Q {
        let mut acc = Q::zero();
        for (i, ca) in a.0.iter().enumerate() {
            if ca.is_zero() {
                continue;
            }
            for (j, cb) in b.0.iter().enumerate() {
                if cb.is_zero() {
                    continue;
                }
                acc += ca * cb * self.pair_roots(i, j);
            }
        }
        acc
    }

    /// `d_alpha = (alpha, alpha)/2` for a simple root.
    pub fn d_alpha(&self, i: usize) -> Q {
        self.symmetrizers[i].clone()
    }

    /// Gram matrix `(alpha_i, alpha_j)` of the simple roots.
    pub fn gram(&self) -> QMat {
        (0..self.rank)
            .map(|i| (0..self.rank).map(|j| self.pair_roots(i, j)).collect())
            .collect()
    }

    /// Fundamental weights in simple-root coordinates:
    /// `2(w_i, alpha_j)/(alpha_j, alpha_j) = delta_ij`.
    pub fn fundamental_weights(&self) -> Vec<Weight> {
        let g = self.gram();
        let ginv = linalg::invert(&g).expect("Cartan gram is nondegenerate");
        (0..self.rank)
            .map(|i| {
                // solve sum_k c_k (alpha_k, alpha_j) = delta_ij d_j
                let rhs: Vec<Q> = (0..self.rank)
                    .map(|j| {
                        if i == j {
                            self.symmetrizers[j].clone()
                        } else {
                            Q::zero()
                        }
                    })
                    .collect();
                Weight(linalg::mat_vec(&ginv, &rhs))
            })
            .collect()
    }

    /// Simple reflection `s_i`, computed from Cartan data.
    pub fn simple_reflection(&self, i: usize, w: &Weight) -> Weight {
        let coef =
            int(2) * self.inner(w, &Weight::simple_root(self.rank, i)) / self.pair_roots(i, i);
        let mut out = w.clone();
        out.0[i] -= coef;
        out
    }

    /// Root lattice as a [`Lattice`].
    pub fn root_lattice(&self) -> Lattice {
        let gens: Vec<Weight> = (0..self.rank)
            .map(|i| Weight::simple_root(self.rank, i))
            .collect();
        Lattice::from_generators(self.rank, &gens)
    }

    /// Weight lattice as a [`Lattice`].
    pub fn weight_lattice(&self) -> Lattice {
        Lattice::from_generators(self.rank, &self.fundamental_weights())
    }
}

/// Finitely generated subgroup of the rational weight space, kept in a
/// canonical Hermite-normal-form basis so equality and membership are exact.
#[derive(Clone, PartialEq, Eq)]
pub struct Lattice {
    pub ambient_rank: usize,
    /// Common denominator: the lattice is (1/denom) * span_Z(rows).
    denom: BigInt,
    /// Canonical HNF rows over the integers (scaled by `denom`).
    rows: Vec<Vec<BigInt>>,
}

impl Lattice {
    pub fn from_generators(ambient_rank: usize, gens: &[Weight]) -> Lattice {
        let mut denom = BigInt::from(1);
        for g in gens {
            for c in &g.0 {
                let d = c.denom();
                denom = lcm(&denom, d);
            }
        }
        let rows: Vec<Vec<BigInt>> = gens
            .iter()
            .filter(|g| !g.is_zero())
            .map(|g| {
                g.0.iter()
                    .map(|c| {
                        let scaled = c * Q::from(denom.clone());
                        debug_assert!(scaled.denom().to_i64() == Some(1));
                        scaled.numer().clone()
                    })
                    .collect()
            })
            .collect();
        let rows = linalg::hnf(rows);
        Lattice {
            ambient_rank,
            denom,
            rows,
        }
        .normalized()
    }

    /// Divide out common content so equal lattices have equal reps.
    fn normalized(mut self) -> Lattice {
        if self.rows.is_empty() {
            self.denom = BigInt::from(1);
            return self;
        }
        let mut g = self.denom.clone();
        for row in &self.rows {
            for x in row {
                g = gcd(&g, x);
            }
        }
        if g > BigInt::from(1) {
            for row in self.rows.iter_mut() {
                for x in row.iter_mut() {
                    *x /= &g;
                }
            }
            self.denom /= &g;
        }
        self
    }

    pub fn dim(&self) -> usize {
        self.rows.len()
    }

    pub fn is_trivial(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn basis(&self) -> Vec<Weight> {
        let d = Q::from(self.denom.clone());
        self.rows
            .iter()
            .map(|row| Weight(row.iter().map(|x| Q::from(x.clone()) / d.clone()).collect()))
            .collect()
    }

    pub fn contains(&self, w: &Weight) -> bool {
        if w.is_zero() {
            return true;
        }
        // scale w by denom; if it is not integral in that scale, also try a
        // finer common scale
        let mut denom = self.denom.clone();
        for c in &w.0 {
            denom = lcm(&denom, c.denom());
        }
        let f = &denom / &self.denom; // extra factor applied to basis rows
        let target: Vec<BigInt> =
            w.0.iter()
                .map(|c| (c * Q::from(denom.clone())).numer().clone())
                .collect();
        // solve sum_k x_k * (f * row_k) = target over the integers; rows are in
        // HNF so a greedy triangular solve works
        let mut rem = target;
        for row in &self.rows {
            let Some(lead) = row.iter().position(|x| !x.is_zero()) else {
                continue;
            };
            let scaled_lead = &row[lead] * &f;
            if rem[lead].is_zero() {
                continue;
            }
            if (&rem[lead] % &scaled_lead).is_zero() {
                let c = &rem[lead] / &scaled_lead;
                for (j, x) in row.iter().enumerate() {
                    rem[j] -= &c * &(x * &f);
                }
            } else {
                return false;
            }
        }
        rem.iter().all(|x| x.is_zero())
    }

    /// Index `[self : sub]` when `sub` is a finite-index sublattice of the
    /// same rank; `None` otherwise.
    pub fn index_of(&self, sub: &Lattice) -> Option<Q> {
        if self.dim() != sub.dim() {
            return None;
        }
        let basis = self.basis();
        let n = self.dim();
        // coordinates of sub's basis in self's basis
        let cols: Vec<Vec<Q>> = basis.iter().map(|b| b.0.clone()).collect();
        let mut a: QMat = vec![vec![Q::zero(); n]; self.ambient_rank];
        for (k, col) in cols.iter().enumerate() {
            for (i, v) in col.iter().enumerate() {
                a[i][k] = v.clone();
            }
        }
        let mut coord_mat: QMat = Vec::new();
        for sb in sub.basis() {
            let x = linalg::solve(&a, &sb.0)?;
            // must be integral
            if x.iter().any(|c| !c.denom().is_one()) {
                return None;
            }
            coord_mat.push(x);
        }
        Some(linalg::det(&coord_mat).abs())
    }
}

fn gcd(a: &BigInt, b: &BigInt) -> BigInt {
    let (mut a, mut b) = (a.abs(), b.abs());
    while !b.is_zero() {
        let r = &a % &b;
        a = b;
        b = r;
    }
    a
}

fn lcm(a: &BigInt, b: &BigInt) -> BigInt {
    if a.is_zero() || b.is_zero() {
        return BigInt::zero();
    }
    (a * b).abs() / gcd(a, b)
}

impl fmt::Debug for Lattice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Lattice{:?}", self.basis())
    }
}

impl Serialize for Lattice {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let basis: Vec<Vec<[i64; 2]>> = self
            .basis()
            .iter()
            .map(|w| {
                w.0.iter()
                    .map(|c| {
                        [
                            c.numer().to_i64().unwrap_or(i64::MAX),
                            c.denom().to_i64().unwrap_or(i64::MAX),
                        ]
                    })
                    .collect()
            })
            .collect();
        basis.serialize(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::rat;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    #[test]
    fn build_examples() {
        let a2 = RootDatum::build('A', 2).unwrap();
        assert_eq!(a2.cartan, vec![vec![2, -1], vec![-1, 2]]);
        assert!(a2.symmetrizers.iter().all(|d| d.is_one()));

        let a1 = RootDatum::build('A', 1).unwrap();
        assert_eq!(a1.cartan, vec![vec![2]]);

        let b2 = RootDatum::build('B', 2).unwrap();
        assert_eq!(b2.cartan, vec![vec![2, -1], vec![-2, 2]]);
        assert_eq!(b2.symmetrizers, vec![int(2), int(1)]);
        // (alpha_i, alpha_j) symmetric
        assert_eq!(b2.pair_roots(0, 1), b2.pair_roots(1, 0));
        assert_eq!(b2.pair_roots(0, 1), int(-2));

        assert!(RootDatum::build('Z', 2).is_err());
        assert!(RootDatum::build('F', 3).is_err());

        // {type, rank} descriptor roundtrip rebuilds the full datum
        let txt = serde_json::to_string(&b2).unwrap();
        assert_eq!(txt, r#"{"type":"B","rank":2}"#);
        let back: RootDatum = serde_json::from_str(&txt).unwrap();
        assert_eq!(back, b2);
        assert!(serde_json::from_str::<RootDatum>(r#"{"type":"Z","rank":9}"#).is_err());
    }

    #[test]
    fn inner_examples() {
        let a2 = RootDatum::build('A', 2).unwrap();
        let a1 = Weight::simple_root(2, 0);
        let a2r = Weight::simple_root(2, 1);
        assert_eq!(a2.inner(&a1, &a2r), int(-1));
        assert_eq!(a2.inner(&a1, &a1), int(2));
        let w = a2.fundamental_weights();
        assert_eq!(a2.inner(&w[0], &a1), int(1));
    }

    #[test]
    fn fundamental_weight_examples() {
        let a2 = RootDatum::build('A', 2).unwrap();
        let w = a2.fundamental_weights();
        assert_eq!(w[0], Weight(vec![rat(2, 3), rat(1, 3)]));
        assert_eq!(w[1], Weight(vec![rat(1, 3), rat(2, 3)]));
        let a1 = RootDatum::build('A', 1).unwrap();
        assert_eq!(a1.fundamental_weights()[0], Weight(vec![rat(1, 2)]));
    }

    #[test]
    fn coroot_duality_all_types() {
        for (letter, rank) in [
            ('A', 1),
            ('A', 4),
            ('B', 2),
            ('B', 3),
            ('C', 3),
            ('D', 4),
            ('E', 6),
            ('E', 7),
            ('E', 8),
            ('F', 4),
            ('G', 2),
        ] {
            let rd = RootDatum::build(letter, rank).unwrap();
            let ws = rd.fundamental_weights();
            for (i, w) in ws.iter().enumerate() {
                for j in 0..rank {
                    let lhs =
                        int(2) * rd.inner(w, &Weight::simple_root(rank, j)) / rd.pair_roots(j, j);
                    assert_eq!(lhs, if i == j { int(1) } else { int(0) });
                }
            }
        }
    }

    #[test]
    fn reflection_invariance_randomized() {
        let mut rng = StdRng::seed_from_u64(7);
        for (letter, rank) in [('A', 3), ('B', 3), ('G', 2)] {
            let rd = RootDatum::build(letter, rank).unwrap();
            for _ in 0..40 {
                let l = Weight(
                    (0..rank)
                        .map(|_| rat(rng.gen_range(-5..=5), rng.gen_range(1..=3)))
                        .collect(),
                );
                let m = Weight(
                    (0..rank)
                        .map(|_| rat(rng.gen_range(-5..=5), rng.gen_range(1..=3)))
                        .collect(),
                );
                for i in 0..rank {
                    let sl = rd.simple_reflection(i, &l);
                    let sm = rd.simple_reflection(i, &m);
                    assert_eq!(rd.inner(&sl, &sm), rd.inner(&l, &m));
                }
            }
        }
    }

    #[test]
    fn lattice_examples() {
        let a1 = Weight::simple_root(2, 0);
        let l = Lattice::from_generators(2, &[a1.clone(), a1.neg()]);
        assert_eq!(l.basis(), vec![a1.clone()]);

        let third = a1.scale(&rat(1, 3));
        let l2 = Lattice::from_generators(2, &[third.clone(), a1.clone()]);
        assert_eq!(l2.basis(), vec![third.clone()]);
        assert!(l2.contains(&a1));
        assert!(!l2.contains(&a1.scale(&rat(1, 6))));

        // [weight lattice : root lattice] = 3 in A2, by an independent
        // determinant of the change of basis
        let a2 = RootDatum::build('A', 2).unwrap();
        let lam = a2.weight_lattice();
        let phi = a2.root_lattice();
        assert!(lam.contains(&a1));
        assert_eq!(lam.index_of(&phi), Some(int(3)));
        let w = a2.fundamental_weights();
        let change = vec![w[0].0.clone(), w[1].0.clone()];
        assert_eq!(linalg::det(&change).recip().abs(), int(3));
    }
}
