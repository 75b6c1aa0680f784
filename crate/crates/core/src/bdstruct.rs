//! Belavin-Drinfeld triples on a root datum, the linear solver for alternating
//! forms compatible with a disjoint triple, and everything derived from a
//! chosen form: `u±`, the tilde isomorphism, the projections onto the triple's
//! root spans, their image lattices, and bicharacter exponents.

use std::collections::BTreeMap;
use std::fmt;

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{self, QMat};
use crate::rootdata::{Lattice, RootDatum, Weight};
use crate::scalar::{int, Q};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum FormError {
    #[error("u matrix is not antisymmetric")]
    NotAntisymmetric,
    #[error("u matrix has wrong dimensions")]
    WrongShape,
    #[error("u_- restricted to the Pi_{side} span is degenerate")]
    DegenerateRestriction { side: usize },
    #[error("weight does not lie in the Pi_{side} span")]
    OutsideSpan { side: usize },
}

/// Which of the two subsets of a triple.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TripleSide {
    One,
    Two,
}

impl TripleSide {
    pub fn index(self) -> usize {
        match self {
            TripleSide::One => 1,
            TripleSide::Two => 2,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ProjSign {
    Plus,
    Minus,
}

/// Global sign convention applied to solved compatible forms. `Plus` is the
/// literal reading of the compatibility equations; `Minus` negates the
/// solution space, which is the convention under which the standard A2
/// example has `u(alpha_1, alpha_2) = -1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum SignConvention {
    #[default]
    Plus,
    Minus,
}

/// The discrete datum: two subsets of simple roots and a bijection between
/// them. Roots are stored as 0-based indices into the simple roots.
#[derive(Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BDTriple {
    pub pi1: Vec<usize>,
    pub pi2: Vec<usize>,
    /// tau as a map pi1 -> pi2.
    pub tau: BTreeMap<usize, usize>,
}

impl BDTriple {
    pub fn new(pi1: Vec<usize>, pi2: Vec<usize>, tau: BTreeMap<usize, usize>) -> Self {
        let mut pi1 = pi1;
        let mut pi2 = pi2;
        pi1.sort_unstable();
        pi2.sort_unstable();
        BDTriple { pi1, pi2, tau }
    }

    pub fn empty() -> Self {
        BDTriple {
            pi1: Vec::new(),
            pi2: Vec::new(),
            tau: BTreeMap::new(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.pi1.is_empty()
    }

    pub fn tau_of(&self, root: usize) -> Option<usize> {
        self.tau.get(&root).copied()
    }

    pub fn tau_inv_of(&self, root: usize) -> Option<usize> {
        self.tau
            .iter()
            .find_map(|(&a, &b)| if b == root { Some(a) } else { None })
    }

    pub fn roots_of(&self, side: TripleSide) -> &[usize] {
        match side {
            TripleSide::One => &self.pi1,
            TripleSide::Two => &self.pi2,
        }
    }

    /// Linear extension of tau to the span of Pi_1; `None` when `w` has
    /// support outside Pi_1.
    pub fn tau_linear(&self, w: &Weight) -> Option<Weight> {
        let mut out = Weight::zero(w.rank());
        for (i, c) in w.0.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            let j = self.tau_of(i)?;
            out.0[j] = c.clone();
        }
        Some(out)
    }

    pub fn tau_inv_linear(&self, w: &Weight) -> Option<Weight> {
        let mut out = Weight::zero(w.rank());
        for (i, c) in w.0.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            let j = self.tau_inv_of(i)?;
            out.0[j] = c.clone();
        }
        Some(out)
    }
}

impl fmt::Debug for BDTriple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "Triple{{pi1:{:?}, pi2:{:?}, tau:{:?}}}",
            self.pi1, self.pi2, self.tau
        )
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub enum TripleViolation {
    /// pi1 and pi2 intersect.
    Overlap { root: usize },
    /// tau is not a bijection pi1 -> pi2.
    NotBijection,
    /// (tau a, tau b) != (a, b).
    NotIsometry { a: usize, b: usize },
    /// Some tau-orbit never leaves pi1 (cannot happen for disjoint triples).
    NotNilpotent { root: usize },
}

/// Report-style validation of the triple axioms plus disjointness.
pub fn validate_triple(rd: &RootDatum, t: &BDTriple) -> Vec<TripleViolation> {
    let mut v = Vec::new();
    for &r in &t.pi1 {
        if t.pi2.contains(&r) {
            v.push(TripleViolation::Overlap { root: r });
        }
    }
    let mut images: Vec<usize> = t.tau.values().copied().collect();
    images.sort_unstable();
    let keys: Vec<usize> = t.tau.keys().copied().collect();
    if keys != t.pi1 || images != t.pi2 {
        v.push(TripleViolation::NotBijection);
        return v;
    }
    for &a in &t.pi1 {
        for &b in &t.pi1 {
            let (ta, tb) = (t.tau[&a], t.tau[&b]);
            if rd.pair_roots(ta, tb) != rd.pair_roots(a, b) {
                v.push(TripleViolation::NotIsometry { a, b });
            }
        }
    }
    // nilpotency: iterate tau until the orbit leaves pi1
    for &a in &t.pi1 {
        let mut x = a;
        let mut steps = 0;
        let escaped = loop {
            match t.tau_of(x) {
                Some(y) if t.pi1.contains(&y) => {
                    x = y;
                    steps += 1;
                    if steps > rd.rank {
                        break false;
                    }
                }
                _ => break true,
            }
        };
        if !escaped {
            v.push(TripleViolation::NotNilpotent { root: a });
        }
    }
    v
}

/// All disjoint triples on `rd`: ordered pairs of disjoint nonempty subsets
/// with an isometric bijection. Deterministic order (subset bitmasks, then
/// the bijection as a sorted assignment list).
pub fn enumerate_disjoint(rd: &RootDatum) -> Vec<BDTriple> {
    let n = rd.rank;
    let mut out = Vec::new();
    for mask1 in 1u32..(1 << n) {
        for mask2 in 1u32..(1 << n) {
            if mask1 & mask2 != 0 {
                continue;
            }
            let pi1: Vec<usize> = (0..n).filter(|i| mask1 >> i & 1 == 1).collect();
            let pi2: Vec<usize> = (0..n).filter(|i| mask2 >> i & 1 == 1).collect();
            if pi1.len() != pi2.len() {
                continue;
            }
            permutations(&pi2, &mut |perm| {
                let tau: BTreeMap<usize, usize> =
                    pi1.iter().copied().zip(perm.iter().copied()).collect();
                let t = BDTriple::new(pi1.clone(), pi2.clone(), tau);
                if validate_triple(rd, &t).is_empty() {
                    out.push(t);
                }
            });
        }
    }
    out
}

/// Visit all permutations of `items` in lexicographic order.
fn permutations(items: &[usize], f: &mut impl FnMut(&[usize])) {
    fn rec(chosen: &mut Vec<usize>, rest: &[usize], f: &mut impl FnMut(&[usize])) {
        if rest.is_empty() {
            f(chosen);
            return;
        }
        for (i, &x) in rest.iter().enumerate() {
            chosen.push(x);
            let mut next: Vec<usize> = rest.to_vec();
            next.remove(i);
            rec(chosen, &next, f);
            chosen.pop();
        }
    }
    let mut sorted = items.to_vec();
    sorted.sort_unstable();
    rec(&mut Vec::new(), &sorted, f);
}

/// Affine solution space of compatible alternating forms: `particular` plus
/// the span of `basis`, as antisymmetric matrices over the simple roots.
#[derive(Clone, Debug, Serialize)]
pub struct FormSolution {
    pub dim: usize,
    pub particular: Vec<Vec<Q>>,
    pub basis: Vec<Vec<Vec<Q>>>,
}

impl FormSolution {
    /// The member of the affine space with the given free coordinates.
    pub fn member(&self, params: &[Q]) -> Vec<Vec<Q>> {
        let mut u = self.particular.clone();
        for (b, p) in self.basis.iter().zip(params) {
            for (row_u, row_b) in u.iter_mut().zip(b) {
                for (x, y) in row_u.iter_mut().zip(row_b) {
                    *x += y * p;
                }
            }
        }
        u
    }

    /// Whether the given antisymmetric matrix lies in the solution space.
    pub fn contains(&self, u: &[Vec<Q>]) -> bool {
        let n = self.particular.len();
        let mut cols: QMat = Vec::new();
        let mut rhs: Vec<Q> = Vec::new();
        for i in 0..n {
            for j in (i + 1)..n {
                cols.push(self.basis.iter().map(|b| b[i][j].clone()).collect());
                rhs.push(&u[i][j] - &self.particular[i][j]);
            }
        }
        linalg::solve(&cols, &rhs).is_some()
    }
}

/// Solve the compatibility conditions as linear constraints on the strictly
/// upper triangular entries of `u`. Returns `None` when inconsistent.
///
/// The two conditions, in the literal (`Plus`) reading:
/// 1. `u(tau a, tau b) = u(a, b)` for `a, b` in Pi_1;
/// 2. `u(a, tau b) = -(a, tau b)` for `a, b` in Pi_1.
///
/// With `SignConvention::Minus` the whole affine space is negated.
pub fn solve_compatible(
    rd: &RootDatum,
    t: &BDTriple,
    sign: SignConvention,
) -> Option<FormSolution> {
    let n = rd.rank;
    let unknowns: Vec<(usize, usize)> = (0..n)
        .flat_map(|i| ((i + 1)..n).map(move |j| (i, j)))
        .collect();
    let idx = |i: usize, j: usize| -> (usize, Q) {
        // u(alpha_i, alpha_j) in terms of the unknowns, with antisymmetry
        if i < j {
            (unknowns.iter().position(|&p| p == (i, j)).unwrap(), int(1))
        } else {
            (unknowns.iter().position(|&p| p == (j, i)).unwrap(), int(-1))
        }
    };
    let mut rows: QMat = Vec::new();
    let mut rhs: Vec<Q> = Vec::new();
    // condition 1
    for &a in &t.pi1 {
        for &b in &t.pi1 {
            if a == b {
                continue;
            }
            let (ta, tb) = (t.tau[&a], t.tau[&b]);
            let mut row = vec![Q::zero(); unknowns.len()];
            let (k1, s1) = idx(ta, tb);
            row[k1] += s1;
            let (k2, s2) = idx(a, b);
            row[k2] -= s2;
            rows.push(row);
            rhs.push(Q::zero());
        }
    }
    // condition 2
    for &a in &t.pi1 {
        for &b in &t.pi1 {
            let tb = t.tau[&b];
            // disjointness ensures a != tb
            let mut row = vec![Q::zero(); unknowns.len()];
            let (k, s) = idx(a, tb);
            row[k] += s;
            rows.push(row);
            rhs.push(-rd.pair_roots(a, tb));
        }
    }
    // no constraints (e.g. the empty triple): every antisymmetric u works
    let (particular_vec, nullvecs) = if rows.is_empty() {
        let mut basis = Vec::new();
        for k in 0..unknowns.len() {
            let mut v = vec![Q::zero(); unknowns.len()];
            v[k] = Q::one();
            basis.push(v);
        }
        (vec![Q::zero(); unknowns.len()], basis)
    } else {
        (linalg::solve(&rows, &rhs)?, linalg::nullspace(&rows))
    };
    let to_mat = |v: &[Q]| -> Vec<Vec<Q>> {
        let mut m = vec![vec![Q::zero(); n]; n];
        for (k, &(i, j)) in unknowns.iter().enumerate() {
            m[i][j] = v[k].clone();
            m[j][i] = -v[k].clone();
        }
        m
    };
    let flip = |m: Vec<Vec<Q>>| -> Vec<Vec<Q>> {
        match sign {
            SignConvention::Plus => m,
            SignConvention::Minus => m
                .into_iter()
                .map(|row| row.into_iter().map(|x| -x).collect())
                .collect(),
        }
    };
    Some(FormSolution {
        dim: nullvecs.len(),
        particular: flip(to_mat(&particular_vec)),
        basis: nullvecs.iter().map(|v| flip(to_mat(v))).collect(),
    })
}

/// A root datum with a triple and a fixed alternating form, plus all the
/// derived maps. This is the ambient datum the Borel and twist machinery
/// works over.
#[derive(Clone)]
pub struct CompatibleForm {
    pub rd: RootDatum,
    pub triple: BDTriple,
    u: QMat,
    /// matrix of phi: u(l, m) = (phi l, m), columns = images of simple roots
    phi: QMat,
    tilde_mat: QMat,
    tilde_inv_mat: QMat,
}

impl CompatibleForm {
    /// Wrap an antisymmetric matrix. Compatibility with the triple is *not*
    /// required here (report-style checks live in [`CompatibleForm::compatibility_violations`]);
    /// antisymmetry is.
    pub fn new(rd: RootDatum, triple: BDTriple, u: QMat) -> Result<Self, FormError> {
        let n = rd.rank;
        if u.len() != n || u.iter().any(|r| r.len() != n) {
            return Err(FormError::WrongShape);
        }
        for i in 0..n {
            for j in 0..n {
                if u[i][j] != -u[j][i].clone() {
                    return Err(FormError::NotAntisymmetric);
                }
            }
        }
        // phi columns: solve (phi a_i)^T G = U_i.
        let g = rd.gram();
        let ginv = linalg::invert(&g).expect("gram invertible");
        let mut phi = vec![vec![Q::zero(); n]; n];
        for i in 0..n {
            let urow: Vec<Q> = (0..n).map(|j| u[i][j].clone()).collect();
            let col = linalg::mat_vec(&ginv, &urow);
            for (k, c) in col.iter().enumerate() {
                phi[k][i] = c.clone();
            }
        }
        // tilde = -(phi + 1)^{-1} (phi - 1)
        let mut phi_plus = phi.clone();
        let mut phi_minus = phi.clone();
        for k in 0..n {
            phi_plus[k][k] += Q::one();
            phi_minus[k][k] -= Q::one();
        }
        let pinv = linalg::invert(&phi_plus).expect("phi+1 invertible (u_+ nondegenerate)");
        let mut tilde_mat = linalg::mat_mul(&pinv, &phi_minus);
        for row in tilde_mat.iter_mut() {
            for x in row.iter_mut() {
                *x = -x.clone();
            }
        }
        let tilde_inv_mat = linalg::invert(&tilde_mat).expect("tilde invertible");
        Ok(CompatibleForm {
            rd,
            triple,
            u,
            phi,
            tilde_mat,
            tilde_inv_mat,
        })
    }

    pub fn zero_form(rd: RootDatum, triple: BDTriple) -> Self {
        let n = rd.rank;
        CompatibleForm::new(rd, triple, vec![vec![Q::zero(); n]; n]).expect("zero form")
    }

    pub fn u_matrix(&self) -> &QMat {
        &self.u
    }

    /// Matrix of the map `phi` defined by `u(l, m) = (phi l, m)`, columns
    /// indexed by simple roots.
    pub fn phi_matrix(&self) -> &QMat {
        &self.phi
    }

    pub fn rank(&self) -> usize {
        self.rd.rank
    }

    /// `u(l, m)`.
    pub fn u_val(&self, l: &Weight, m: &Weight) -> Q {
        let mut acc = Q::zero();
        for (i, a) in l.0.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in m.0.iter().enumerate() {
                if b.is_zero() {
                    continue;
                }
                acc += a * b * &self.u[i][j];
            }
        }
        acc
    }

    pub fn inner(&self, l: &Weight, m: &Weight) -> Q {
        self.rd.inner(l, m)
    }

    /// `u_+(l, m) = u(l, m) + (l, m)`.
    pub fn u_plus(&self, l: &Weight, m: &Weight) -> Q {
        self.u_val(l, m) + self.inner(l, m)
    }

    /// `u_-(l, m) = u(l, m) - (l, m)`.
    pub fn u_minus(&self, l: &Weight, m: &Weight) -> Q {
        self.u_val(l, m) - self.inner(l, m)
    }

    /// Exponent of the bicharacter: `p` is `u/2`, `p±` is `u±`.
    pub fn p_exponent(&self, kind: PKind, l: &Weight, m: &Weight) -> Q {
        match kind {
            PKind::P => self.u_val(l, m) / int(2),
            PKind::PPlus => self.u_plus(l, m),
            PKind::PMinus => self.u_minus(l, m),
        }
    }

    /// The isomorphism `l -> -(phi+1)^{-1}(phi-1) l`; satisfies
    /// `u_+(tilde l, m) = -u_-(l, m)`.
    pub fn tilde(&self, l: &Weight) -> Weight {
        Weight(linalg::mat_vec(&self.tilde_mat, &l.0))
    }

    pub fn tilde_inv(&self, l: &Weight) -> Weight {
        Weight(linalg::mat_vec(&self.tilde_inv_mat, &l.0))
    }

    /// Report-style check of the compatibility conditions of the stored `u`
    /// against the stored triple (the literal reading).
    pub fn compatibility_violations(&self) -> Vec<String> {
        let t = &self.triple;
        let n = self.rd.rank;
        let mut v = Vec::new();
        let simple = |i: usize| Weight::simple_root(n, i);
        for &a in &t.pi1 {
            for &b in &t.pi1 {
                let (ta, tb) = (t.tau[&a], t.tau[&b]);
                if self.u_val(&simple(ta), &simple(tb)) != self.u_val(&simple(a), &simple(b)) {
                    v.push(format!("u(tau a{a}, tau a{b}) != u(a{a}, a{b})"));
                }
                if !self.u_plus(&simple(a), &simple(tb)).is_zero() {
                    v.push(format!("u_+(a{a}, tau a{b}) != 0"));
                }
            }
        }
        v
    }

    fn side_roots(&self, side: TripleSide) -> &[usize] {
        self.triple.roots_of(side)
    }

    /// Gram matrix of `u_-` on the Pi_i simple roots:
    /// entry (m, k) = `u_-(alpha_m, alpha_k)`.
    fn u_minus_gram(&self, side: TripleSide) -> QMat {
        let roots = self.side_roots(side);
        let n = self.rd.rank;
        roots
            .iter()
            .map(|&m| {
                roots
                    .iter()
                    .map(|&k| self.u_minus(&Weight::simple_root(n, m), &Weight::simple_root(n, k)))
                    .collect()
            })
            .collect()
    }

    /// Projection `pi_i^±` onto the span of Pi_i, defined by
    ///   `u_-(pi_i^+(l), m) = u_-(l, m)` and `u_-(m, pi_i^-(l)) = u_-(m, l)`
    /// for all `m` in the span of Pi_i.
    pub fn project(
        &self,
        side: TripleSide,
        sign: ProjSign,
        l: &Weight,
    ) -> Result<Weight, FormError> {
        let roots = self.side_roots(side);
        let n = self.rd.rank;
        if roots.is_empty() {
            return Ok(Weight::zero(n));
        }
        let gram = self.u_minus_gram(side);
        // For Minus: sum_k t_k u_-(a_m, a_k) = u_-(a_m, l)  (unknown in 2nd slot)
        // For Plus:  sum_k t_k u_-(a_k, a_m) = u_-(l, a_m)  (unknown in 1st slot)
        let (mat, rhs): (QMat, Vec<Q>) = match sign {
            ProjSign::Minus => (
                gram.clone(),
                roots
                    .iter()
                    .map(|&m| self.u_minus(&Weight::simple_root(n, m), l))
                    .collect(),
            ),
            ProjSign::Plus => (
                (0..roots.len())
                    .map(|mi| (0..roots.len()).map(|ki| gram[ki][mi].clone()).collect())
                    .collect(),
                roots
                    .iter()
                    .map(|&m| self.u_minus(l, &Weight::simple_root(n, m)))
                    .collect(),
            ),
        };
        if linalg::invert(&mat).is_none() {
            return Err(FormError::DegenerateRestriction { side: side.index() });
        }
        let t = linalg::solve(&mat, &rhs).expect("nondegenerate");
        let mut out = Weight::zero(n);
        for (&root, c) in roots.iter().zip(t) {
            out.0[root] = c;
        }
        Ok(out)
    }

    /// Image lattices `pi_i^-(Omega)` and `pi_i^+(Omega)`.
    pub fn sublattice_l(
        &self,
        side: TripleSide,
        omega: &Lattice,
    ) -> Result<(Lattice, Lattice), FormError> {
        let gens = omega.basis();
        let minus: Result<Vec<Weight>, FormError> = gens
            .iter()
            .map(|g| self.project(side, ProjSign::Minus, g))
            .collect();
        let plus: Result<Vec<Weight>, FormError> = gens
            .iter()
            .map(|g| self.project(side, ProjSign::Plus, g))
            .collect();
        Ok((
            Lattice::from_generators(self.rd.rank, &minus?),
            Lattice::from_generators(self.rd.rank, &plus?),
        ))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PKind {
    P,
    PPlus,
    PMinus,
}

impl fmt::Debug for CompatibleForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "CompatibleForm{{u:{:?}}}", self.u)
    }
}

/// The standard A2 fixture: Pi_1 = {a1}, Pi_2 = {a2}, tau(a1) = a2, with the
/// unique compatible form under the given sign convention.
pub fn cremmer_gervais_a2(sign: SignConvention) -> CompatibleForm {
    let rd = RootDatum::build('A', 2).unwrap();
    let t = BDTriple::new(vec![0], vec![1], BTreeMap::from([(0, 1)]));
    let sol = solve_compatible(&rd, &t, sign).unwrap();
    assert_eq!(sol.dim, 0);
    CompatibleForm::new(rd, t, sol.particular).unwrap()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::rat;
    use num_traits::Signed;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn a(n: usize) -> RootDatum {
        RootDatum::build('A', n).unwrap()
    }

    fn simple(rank: usize, i: usize) -> Weight {
        Weight::simple_root(rank, i)
    }

    #[test]
    fn validate_examples() {
        let rd = a(2);
        let ok = BDTriple::new(vec![0], vec![1], BTreeMap::from([(0, 1)]));
        assert!(validate_triple(&rd, &ok).is_empty());

        let overlap = BDTriple::new(vec![0], vec![0], BTreeMap::from([(0, 0)]));
        assert!(validate_triple(&rd, &overlap)
            .iter()
            .any(|v| matches!(v, TripleViolation::Overlap { .. })));

        let rd3 = a(3);
        let not_disjoint = BDTriple::new(vec![0, 1], vec![1, 2], BTreeMap::from([(0, 1), (1, 2)]));
        assert!(validate_triple(&rd3, &not_disjoint)
            .iter()
            .any(|v| matches!(v, TripleViolation::Overlap { .. })));
    }

    /// Independent brute force: all ordered pairs of disjoint subsets, all
    /// bijections, filtered by the isometry condition.
    fn brute_force_disjoint(rd: &RootDatum) -> usize {
        let n = rd.rank;
        let mut count = 0usize;
        for mask1 in 1u32..(1 << n) {
            for mask2 in 1u32..(1 << n) {
                if mask1 & mask2 != 0 {
                    continue;
                }
                let p1: Vec<usize> = (0..n).filter(|i| mask1 >> i & 1 == 1).collect();
                let p2: Vec<usize> = (0..n).filter(|i| mask2 >> i & 1 == 1).collect();
                if p1.len() != p2.len() {
                    continue;
                }
                let mut perm = p2.clone();
                count += count_isometric_perms(rd, &p1, &mut perm, 0);
            }
        }
        count
    }

    fn count_isometric_perms(
        rd: &RootDatum,
        p1: &[usize],
        perm: &mut Vec<usize>,
        k: usize,
    ) -> usize {
        if k == perm.len() {
            for (i, &x) in p1.iter().enumerate() {
                for (j, &y) in p1.iter().enumerate() {
                    if rd.pair_roots(perm[i], perm[j]) != rd.pair_roots(x, y) {
                        return 0;
                    }
                }
            }
            return 1;
        }
        let mut total = 0;
        for i in k..perm.len() {
            perm.swap(k, i);
            total += count_isometric_perms(rd, p1, perm, k + 1);
            perm.swap(k, i);
        }
        total
    }

    #[test]
    fn enumerate_matches_brute_force() {
        for (letter, rank) in [('A', 1), ('A', 2), ('A', 3), ('A', 4), ('B', 3), ('D', 4)] {
            let rd = RootDatum::build(letter, rank).unwrap();
            let fast = enumerate_disjoint(&rd);
            assert_eq!(
                fast.len(),
                brute_force_disjoint(&rd),
                "count mismatch for {letter}{rank}"
            );
            // no duplicates
            for i in 0..fast.len() {
                for j in (i + 1)..fast.len() {
                    assert!(fast[i] != fast[j]);
                }
            }
        }
    }

    #[test]
    fn enumerate_examples() {
        assert_eq!(enumerate_disjoint(&a(1)).len(), 0);
        let triples = enumerate_disjoint(&a(2));
        assert_eq!(triples.len(), 2);

        // A4 contains pi1 = {a1, a2} -> pi2 = {a3, a4}, tau(a_i) = a_{i+2}
        let t = BDTriple::new(vec![0, 1], vec![2, 3], BTreeMap::from([(0, 2), (1, 3)]));
        assert!(enumerate_disjoint(&a(4)).contains(&t));
    }

    #[test]
    fn cg_solution_space() {
        let rd = a(2);
        let t = BDTriple::new(vec![0], vec![1], BTreeMap::from([(0, 1)]));
        let sol = solve_compatible(&rd, &t, SignConvention::Plus).unwrap();
        assert_eq!(sol.dim, 0);
        assert_eq!(sol.particular[0][1], int(1));
        let soln = solve_compatible(&rd, &t, SignConvention::Minus).unwrap();
        assert_eq!(soln.particular[0][1], int(-1));
        assert_eq!(soln.particular[0][1].abs(), int(1));
    }

    #[test]
    fn empty_triple_space_is_everything() {
        // no constraints: the space is all antisymmetric forms
        let rd = a(3);
        let sol = solve_compatible(&rd, &BDTriple::empty(), SignConvention::Plus).unwrap();
        assert_eq!(sol.dim, 3);
        assert!(sol.particular.iter().all(|r| r.iter().all(|x| x.is_zero())));
        let any = vec![
            vec![int(0), int(2), int(-1)],
            vec![int(-2), int(0), rat(1, 2)],
            vec![int(1), rat(-1, 2), int(0)],
        ];
        assert!(sol.contains(&any));
    }

    #[test]
    fn completely_disjoint_a3_space() {
        // Pi1={a1}, Pi2={a3}: (a1,a3)=0 so compatibility reads u(a1,a3)=0 and
        // the zero form is admissible
        let rd = a(3);
        let t = BDTriple::new(vec![0], vec![2], BTreeMap::from([(0, 2)]));
        let sol = solve_compatible(&rd, &t, SignConvention::Plus).unwrap();
        assert_eq!(sol.dim, 2);
        let zero = vec![vec![Q::zero(); 3]; 3];
        assert!(sol.contains(&zero));
        // compatibility condition 1 is vacuous for singleton pi1
        let cf = CompatibleForm::new(rd, t, zero).unwrap();
        assert!(cf.compatibility_violations().is_empty());
    }

    #[test]
    fn resubstitution_over_enumeration() {
        // every enumerated triple: both conditions hold exactly for the
        // particular solution and for random members of the space
        let mut rng = StdRng::seed_from_u64(11);
        for rd in [a(2), a(3)] {
            for t in enumerate_disjoint(&rd) {
                let sol = solve_compatible(&rd, &t, SignConvention::Plus).expect("space nonempty");
                let params: Vec<Q> = (0..sol.dim)
                    .map(|_| rat(rng.gen_range(-4..=4), rng.gen_range(1..=2)))
                    .collect();
                let u = sol.member(&params);
                let cf = CompatibleForm::new(rd.clone(), t.clone(), u).unwrap();
                assert!(cf.compatibility_violations().is_empty(), "triple {t:?}");
            }
        }
    }

    #[test]
    fn u_forms_identities() {
        let cf = cremmer_gervais_a2(SignConvention::Plus);
        let a1 = simple(2, 0);
        let a2 = simple(2, 1);
        // u_+(l, l) = (l, l)
        assert_eq!(cf.u_plus(&a1, &a1), int(2));
        // compatibility 2 in action
        assert_eq!(cf.u_plus(&a1, &a2), int(0));
        // u_-(a1, a1) = -2
        assert_eq!(cf.u_minus(&a1, &a1), int(-2));
        // u_pm(l, m) = -u_mp(m, l) randomized
        let mut rng = StdRng::seed_from_u64(3);
        for _ in 0..30 {
            let l = Weight(vec![
                rat(rng.gen_range(-4..=4), 1),
                rat(rng.gen_range(-4..=4), 1),
            ]);
            let m = Weight(vec![
                rat(rng.gen_range(-4..=4), 1),
                rat(rng.gen_range(-4..=4), 1),
            ]);
            assert_eq!(cf.u_plus(&l, &m), -cf.u_minus(&m, &l));
            // p_+(tilde l, m) p_-(l, m) = 1 at the exponent level
            assert_eq!(cf.u_plus(&cf.tilde(&l), &m) + cf.u_minus(&l, &m), Q::zero());
        }
    }

    #[test]
    fn phi_adjoint_identity() {
        // u(l, m) = (phi l, m) for random weights
        let cf = cremmer_gervais_a2(SignConvention::Plus);
        let mut rng = StdRng::seed_from_u64(21);
        for _ in 0..20 {
            let l = Weight(vec![
                rat(rng.gen_range(-4..=4), 1),
                rat(rng.gen_range(-4..=4), 2),
            ]);
            let m = Weight(vec![
                rat(rng.gen_range(-4..=4), 1),
                rat(rng.gen_range(-4..=4), 3),
            ]);
            let phil = Weight(linalg::mat_vec(cf.phi_matrix(), &l.0));
            assert_eq!(cf.u_val(&l, &m), cf.inner(&phil, &m));
        }
    }

    #[test]
    fn tilde_examples() {
        // u = 0 -> tilde = id
        let rd = a(2);
        let cf = CompatibleForm::zero_form(rd, BDTriple::empty());
        let l = Weight(vec![rat(2, 3), rat(-1, 2)]);
        assert_eq!(cf.tilde(&l), l);
        // tilde o tilde^{-1} = id for the CG form
        let cf = cremmer_gervais_a2(SignConvention::Plus);
        let l = Weight(vec![int(1), int(2)]);
        assert_eq!(cf.tilde_inv(&cf.tilde(&l)), l);
        // exponent identity on basis pairs
        for i in 0..2 {
            for j in 0..2 {
                let a = simple(2, i);
                let b = simple(2, j);
                assert_eq!(cf.u_plus(&cf.tilde(&a), &b), -cf.u_minus(&a, &b));
            }
        }
    }

    #[test]
    fn projection_examples() {
        let cf = cremmer_gervais_a2(SignConvention::Plus);
        let a1 = simple(2, 0);
        // idempotence on the span
        let p = cf.project(TripleSide::One, ProjSign::Minus, &a1).unwrap();
        assert_eq!(p, a1);
        // pi_1^-(w2) solved by hand from u_-(a1, t a1) = u_-(a1, w2):
        // -2t = u(a1,w2) - (a1,w2) = 2/3 - 0, so t = -1/3
        let w = cf.rd.fundamental_weights();
        let p = cf.project(TripleSide::One, ProjSign::Minus, &w[1]).unwrap();
        assert_eq!(p, a1.scale(&rat(-1, 3)));
        // defining equations hold for all basis m in Pi_i
        for sign in [ProjSign::Plus, ProjSign::Minus] {
            for target in [&w[0], &w[1]] {
                let p = cf.project(TripleSide::One, sign, target).unwrap();
                let m = a1.clone();
                match sign {
                    ProjSign::Plus => assert_eq!(cf.u_minus(&p, &m), cf.u_minus(target, &m)),
                    ProjSign::Minus => assert_eq!(cf.u_minus(&m, &p), cf.u_minus(&m, target)),
                }
            }
        }

        // completely disjoint A3 with u = 0: pi_1^-(a3) = 0
        let rd = a(3);
        let t = BDTriple::new(vec![0], vec![2], BTreeMap::from([(0, 2)]));
        let cf = CompatibleForm::zero_form(rd, t);
        let p = cf
            .project(TripleSide::One, ProjSign::Minus, &simple(3, 2))
            .unwrap();
        assert!(p.is_zero());
    }

    #[test]
    fn sublattice_examples() {
        // CG with Omega = weight lattice: L1 = (1/3) Z a1
        let cf = cremmer_gervais_a2(SignConvention::Plus);
        let lam = cf.rd.weight_lattice();
        let (l1, l1_tilde) = cf.sublattice_l(TripleSide::One, &lam).unwrap();
        let third = simple(2, 0).scale(&rat(1, 3));
        assert_eq!(l1.basis(), vec![third.clone()]);
        // for a singleton pi_1 the restricted u vanishes, so both images agree
        assert_eq!(l1_tilde.basis(), vec![third.clone()]);
        // same value under the Minus convention
        let cfm = cremmer_gervais_a2(SignConvention::Minus);
        let (l1m, _) = cfm.sublattice_l(TripleSide::One, &lam).unwrap();
        assert_eq!(l1m.basis(), vec![third]);
        // with Omega = root lattice the projection is integral
        let (l1r, _) = cf
            .sublattice_l(TripleSide::One, &cf.rd.root_lattice())
            .unwrap();
        assert_eq!(l1r.basis(), vec![simple(2, 0)]);

        // completely disjoint A3, u = 0, Omega = root lattice:
        // pi_1 is the orthogonal projection, a2 -> -(1/2) a1, so the image is
        // (1/2) Z a1
        let rd = a(3);
        let t = BDTriple::new(vec![0], vec![2], BTreeMap::from([(0, 2)]));
        let cf = CompatibleForm::zero_form(rd, t);
        let (l1, _) = cf
            .sublattice_l(TripleSide::One, &cf.rd.root_lattice())
            .unwrap();
        assert_eq!(l1.basis(), vec![simple(3, 0).scale(&rat(1, 2))]);
        // the image contains the projection of the sub-span part
        assert!(l1.contains(&simple(3, 0)));
    }

    #[test]
    fn p_exponent_examples() {
        let cf = cremmer_gervais_a2(SignConvention::Plus);
        let l = Weight(vec![int(2), int(-1)]);
        assert_eq!(cf.p_exponent(PKind::P, &l, &l), Q::zero());
        let a1 = simple(2, 0);
        let a2 = simple(2, 1);
        // p_+(a, tau a) exponent = 0: compatibility 2
        assert_eq!(cf.p_exponent(PKind::PPlus, &a1, &a2), Q::zero());
        // p_pm = p^2 q^{pm(,)} at the exponent level
        let m = Weight(vec![int(1), int(1)]);
        assert_eq!(
            cf.p_exponent(PKind::PPlus, &l, &m),
            cf.p_exponent(PKind::P, &l, &m) * int(2) + cf.inner(&l, &m)
        );
    }
}
