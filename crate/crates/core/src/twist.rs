//! The 2-cocycle attached to a disjoint triple with a compatible form, and
//! everything it twists: the form `sigma_0` on the restricted Borel function
//! algebras, the induced form `gamma` on pairs of matrix coefficients, its
//! convolution inverse, the twisted multiplication, and the twisted
//! R-matrix, each with exact symbolic verification.
//!
//! Orientation bookkeeping (all derived from the pairing axioms fixed in
//! [`crate::borel`]):
//! - under those axioms the transposed form `(b, c) -> sigma_0(c, b)` is the
//!   skew pairing in the Doi-Takeuchi orientation, so the induced cocycle
//!   collapses to `gamma(x, y) = sigma_0(rho_1^-(x), rho_2^+(y))` (no
//!   argument flip), pulled back along the Hopf map `(rho_2^+ (x) rho_1^-) Delta`;
//! - the dualization is an algebra morphism on the plus route and an
//!   anti-algebra morphism on the minus route, so products invert as
//!   `Y_(xy) = Y_x Y_y` and `X_(yz) = X_z X_y`;
//! - the convolution inverse is `gamma^-1(x, y) = gamma(x, S(y))`, evaluated
//!   through the antipode of the recovered Borel element.

use std::cell::RefCell;
use std::collections::{BTreeMap, HashMap};

use num_traits::Zero;
use serde::Serialize;
use thiserror::Error;

use crate::bdstruct::{CompatibleForm, TripleSide};
use crate::borel::{
    self, psi, theta_invert, BorelElement, BorelError, BorelFunctional, PairingCtx, Side, Word,
};
use crate::qfa::{
    self, braiding, nonstandard_support, qybe_holds, rho_restrict, vector_rep, Braiding,
    MatrixCoefficient, QfaError, RMatrix, SMat,
};
use crate::rootdata::{Lattice, Weight};
use crate::scalar::{Frac, Scalar, Q};
use crate::SCHEMA_VERSION;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TwistError {
    #[error("borel layer: {0}")]
    Borel(#[from] BorelError),
    #[error("representation layer: {0}")]
    Qfa(#[from] QfaError),
    #[error("gamma is only tabulated up to degree {cap}, requested {got}")]
    DegreeCapExceeded { got: usize, cap: usize },
    #[error("convolution inverse identity failed on a degree-1 pair")]
    InverseCheckFailed,
    #[error("twisted R-matrix fails the quantum Yang-Baxter equation")]
    QybeFailed,
    #[error("the triple is not completely disjoint (or u is nonzero)")]
    NotCompletelyDisjoint,
    #[error("the form is not compatible with the triple: {0}")]
    NotCompatible(String),
}

/// One verification outcome inside a [`TwistReport`].
#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<String>,
}

impl Check {
    fn ok(name: &str) -> Check {
        Check {
            name: name.into(),
            pass: true,
            witness: None,
        }
    }

    fn fail(name: &str, witness: String) -> Check {
        Check {
            name: name.into(),
            pass: false,
            witness: Some(witness),
        }
    }

    fn from_flag(name: &str, pass: bool, witness: impl FnOnce() -> String) -> Check {
        if pass {
            Check::ok(name)
        } else {
            Check::fail(name, witness())
        }
    }
}

/// Degree-2 expression: linear combination of products `t_(a c) t_(b d)`,
/// keyed `(a, c, b, d)`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Deg2Expr {
    pub coeffs: BTreeMap<(usize, usize, usize, usize), Frac>,
}

impl Deg2Expr {
    pub fn add_term(&mut self, key: (usize, usize, usize, usize), c: Frac) {
        if c.is_zero() {
            return;
        }
        let e = self.coeffs.entry(key).or_insert_with(Frac::zero);
        *e = e.add(&c);
        if e.is_zero() {
            self.coeffs.remove(&key);
        }
    }

    /// `counit(t_ac t_bd) = delta_ac delta_bd`.
    pub fn counit(&self) -> Frac {
        let mut acc = Frac::zero();
        for (&(a, c, b, d), v) in &self.coeffs {
            if a == c && b == d {
                acc = acc.add(v);
            }
        }
        acc
    }
}

/// Degree-3 expression: combinations of `t_(a d) t_(b e) t_(c f)`, keyed
/// `(a, d, b, e, c, f)`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Deg3Expr {
    pub coeffs: BTreeMap<(usize, usize, usize, usize, usize, usize), Frac>,
}

impl Deg3Expr {
    fn add_term(&mut self, key: (usize, usize, usize, usize, usize, usize), c: Frac) {
        if c.is_zero() {
            return;
        }
        let e = self.coeffs.entry(key).or_insert_with(Frac::zero);
        *e = e.add(&c);
        if e.is_zero() {
            self.coeffs.remove(&key);
        }
    }
}

/// Evaluation signature of a functional expression: for each pair of outer
/// words and each intermediate toral weight, one exact value. Two
/// expressions are equal as functionals iff their signatures agree.
type Signature = BTreeMap<(Word, Word, Vec<Q>), Frac>;

type Key4 = (usize, usize, usize, usize);
type Key6 = (usize, usize, usize, usize, usize, usize);

/// Everything needed to evaluate and verify the cocycle for one fixture:
/// calibrated pairing, verified representation, image lattices, the
/// dualized matrix-coefficient tables, and the memoized `gamma` values.
pub struct TwistEngine {
    pub ctx: PairingCtx,
    pub rep: qfa::Representation,
    /// Toral index lattices for the two sub-Borel routes: images of the
    /// weight lattice under the four projections.
    pub lat1_minus: Lattice,
    pub lat1_plus: Lattice,
    pub lat2_minus: Lattice,
    pub lat2_plus: Lattice,
    pub height_cap: usize,
    /// `X[k][l]`: dualization inverse of `t_kl` restricted to the minus
    /// Borel of the first subset; lives in the plus Borel, kappa-indexed.
    x_table: Vec<Vec<BorelElement>>,
    /// `Y'[i][j]`: dualization inverse of `t_ij` restricted to the plus
    /// Borel of the second subset, pulled back through the relabeling.
    y_table: Vec<Vec<BorelElement>>,
    g1: RefCell<HashMap<Key4, Frac>>,
    g1_inv: RefCell<HashMap<Key4, Frac>>,
    g2_first: RefCell<HashMap<Key6, Frac>>,
    g2_second: RefCell<HashMap<Key6, Frac>>,
    sig2: RefCell<HashMap<Key4, Signature>>,
    sig3: RefCell<HashMap<Key6, Signature>>,
    sig_words: Vec<(Word, SMat)>,
    sig_words_plus: Vec<(Word, SMat)>,
    cop2_cache: RefCell<HashMap<(Side, Word), SMat>>,
    cop3_cache: RefCell<HashMap<(Side, Word), SMat>>,
}

impl TwistEngine {
    /// Build the engine: calibrate the pairing, build and check the vector
    /// representation, compute the image lattices from the weight lattice,
    /// and dualize all degree-1 matrix coefficients on both routes.
    pub fn new(cf: CompatibleForm, height_cap: usize) -> Result<TwistEngine, TwistError> {
        let violations = cf.compatibility_violations();
        if !violations.is_empty() {
            return Err(TwistError::NotCompatible(violations.join("; ")));
        }
        let rep = vector_rep(&cf)?;
        let ctx = PairingCtx::standard(cf)?;
        let lam = ctx.cf.rd.weight_lattice();
        let (lat1_minus, lat1_plus) = ctx
            .cf
            .sublattice_l(TripleSide::One, &lam)
            .map_err(|e| TwistError::NotCompatible(e.to_string()))?;
        let (lat2_minus, lat2_plus) = ctx
            .cf
            .sublattice_l(TripleSide::Two, &lam)
            .map_err(|e| TwistError::NotCompatible(e.to_string()))?;
        let n = rep.n;
        let pi1 = ctx.cf.triple.pi1.clone();
        let pi2 = ctx.cf.triple.pi2.clone();
        let mut x_table = Vec::with_capacity(n);
        let mut y_table = Vec::with_capacity(n);
        for k in 0..n {
            let mut xrow = Vec::with_capacity(n);
            let mut yrow = Vec::with_capacity(n);
            for l in 0..n {
                let fx = rho_restrict(
                    &rep,
                    MatrixCoefficient { row: k, col: l },
                    &pi1,
                    Side::Minus,
                    height_cap,
                );
                let x = theta_invert(&ctx, &fx, Some(&lat1_plus))?;
                xrow.push(x);
                let fy = rho_restrict(
                    &rep,
                    MatrixCoefficient { row: k, col: l },
                    &pi2,
                    Side::Plus,
                    height_cap,
                );
                let y2 = theta_invert(&ctx, &fy, Some(&lat2_minus))?;
                let y = psi(&ctx.cf.triple, &y2, false)?;
                yrow.push(y);
            }
            x_table.push(xrow);
            y_table.push(yrow);
        }
        // mixed monomial words for the functional-equality signatures: all
        // words over the full alphabet that act nonzero (a letter can act at
        // most once on the vector representation, so these are few)
        let rank = rep.cf.rd.rank;
        let all: Vec<usize> = (0..rank).collect();
        let collect_words = |side: Side| -> Vec<(Word, SMat)> {
            borel::all_words_up_to(&all, rank)
                .into_iter()
                .filter_map(|w| {
                    let m = rep.act_word(side, &w);
                    if m.is_zero() {
                        None
                    } else {
                        Some((w, m))
                    }
                })
                .collect()
        };
        let sig_words = collect_words(Side::Minus);
        let sig_words_plus = collect_words(Side::Plus);
        Ok(TwistEngine {
            ctx,
            rep,
            lat1_minus,
            lat1_plus,
            lat2_minus,
            lat2_plus,
            height_cap,
            x_table,
            y_table,
            g1: RefCell::new(HashMap::new()),
            g1_inv: RefCell::new(HashMap::new()),
            g2_first: RefCell::new(HashMap::new()),
            g2_second: RefCell::new(HashMap::new()),
            sig2: RefCell::new(HashMap::new()),
            sig3: RefCell::new(HashMap::new()),
            sig_words,
            sig_words_plus,
            cop2_cache: RefCell::new(HashMap::new()),
            cop3_cache: RefCell::new(HashMap::new()),
        })
    }

    pub fn n(&self) -> usize {
        self.rep.n
    }

    pub fn cf(&self) -> &CompatibleForm {
        &self.ctx.cf
    }

    pub fn x_elem(&self, k: usize, l: usize) -> &BorelElement {
        &self.x_table[k][l]
    }

    pub fn y_elem(&self, i: usize, j: usize) -> &BorelElement {
        &self.y_table[i][j]
    }

    /// `gamma(t_ij, t_kl) = sigma_0(rho_1^-(t_ij), rho_2^+(t_kl))`.
    pub fn gamma1(&self, i: usize, j: usize, k: usize, l: usize) -> Frac {
        if let Some(v) = self.g1.borrow().get(&(i, j, k, l)) {
            return v.clone();
        }
        let v = self.ctx.pair(&self.x_table[i][j], &self.y_table[k][l]);
        self.g1.borrow_mut().insert((i, j, k, l), v.clone());
        v
    }

    /// `gamma^-1(t_ij, t_kl) = gamma(t_ij, S(t_kl))`, evaluated as
    /// `t_kl(S(psi^+(X_ij)))` through the representation.
    pub fn gamma1_inv(&self, i: usize, j: usize, k: usize, l: usize) -> Frac {
        if let Some(v) = self.g1_inv.borrow().get(&(i, j, k, l)) {
            return v.clone();
        }
        let z = psi(&self.ctx.cf.triple, &self.x_table[i][j], true)
            .expect("X table lives over the first subset");
        let sz = z.antipode(&self.ctx.cf);
        let mut acc = Frac::zero();
        for ((w, kk), c) in sz.terms() {
            let m = self.rep.act_term(Side::Plus, w, &Weight(kk.clone()));
            acc = acc.add(&c.mul(m.get(k, l)));
        }
        self.g1_inv.borrow_mut().insert((i, j, k, l), acc.clone());
        acc
    }

    /// `gamma(t_ab t_cd, t_mn)`: first slot of degree 2. The minus-route
    /// dualization is an anti-algebra morphism, so `X_(xy) = X_y X_x`.
    pub fn gamma2_first(&self, a: usize, b: usize, c: usize, d: usize, m: usize, n: usize) -> Frac {
        let key = (a, b, c, d, m, n);
        if let Some(v) = self.g2_first.borrow().get(&key) {
            return v.clone();
        }
        let xprod = self.x_table[c][d].mul(&self.x_table[a][b], &self.ctx.cf);
        let v = self.ctx.pair(&xprod, &self.y_table[m][n]);
        self.g2_first.borrow_mut().insert(key, v.clone());
        v
    }

    /// `gamma(t_ij, t_kl t_mn)`: second slot of degree 2; the plus-route
    /// dualization is an algebra morphism, so `Y_(yz) = Y_y Y_z`.
    pub fn gamma2_second(
        &self,
        i: usize,
        j: usize,
        k: usize,
        l: usize,
        m: usize,
        n: usize,
    ) -> Frac {
        let key = (i, j, k, l, m, n);
        if let Some(v) = self.g2_second.borrow().get(&key) {
            return v.clone();
        }
        let yprod = self.y_table[k][l].mul(&self.y_table[m][n], &self.ctx.cf);
        let v = self.ctx.pair(&self.x_table[i][j], &yprod);
        self.g2_second.borrow_mut().insert(key, v.clone());
        v
    }

    /// `gamma^-1(t_ab t_cd, t_mn) = sum gamma^-1(t_cd, t_en) gamma^-1(t_ab, t_me)`.
    pub fn gamma2_first_inv(
        &self,
        a: usize,
        b: usize,
        c: usize,
        d: usize,
        m: usize,
        n: usize,
    ) -> Frac {
        let mut acc = Frac::zero();
        for e in 0..self.n() {
            acc = acc.add(
                &self
                    .gamma1_inv(c, d, e, n)
                    .mul(&self.gamma1_inv(a, b, m, e)),
            );
        }
        acc
    }

    /// `gamma^-1(t_ij, t_kl t_mn) = sum gamma^-1(t_ia, t_mn) gamma^-1(t_aj, t_kl)`.
    pub fn gamma2_second_inv(
        &self,
        i: usize,
        j: usize,
        k: usize,
        l: usize,
        m: usize,
        n: usize,
    ) -> Frac {
        let mut acc = Frac::zero();
        for a in 0..self.n() {
            acc = acc.add(
                &self
                    .gamma1_inv(i, a, m, n)
                    .mul(&self.gamma1_inv(a, j, k, l)),
            );
        }
        acc
    }

    /// The 2-cocycle identity on all degree-1 generator triples:
    /// `sum s(x1,y1) s(x2 y2, z) = sum s(y1,z1) s(x, y2 z2)`.
    pub fn cocycle_check(&self, degree: usize) -> Result<Check, TwistError> {
        if degree > 2 {
            return Err(TwistError::DegreeCapExceeded {
                got: degree,
                cap: 2,
            });
        }
        let n = self.n();
        // sigma(1,1) = 1 through the machinery
        let one_minus = BorelElement::one(Side::Minus, self.ctx.rank());
        let one_plus = BorelElement::one(Side::Plus, self.ctx.rank());
        if self.ctx.pair(&one_plus, &one_minus) != Frac::one() {
            return Ok(Check::fail("cocycle_identity", "sigma(1,1) != 1".into()));
        }
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    for l in 0..n {
                        for m in 0..n {
                            for o in 0..n {
                                let mut lhs = Frac::zero();
                                for a in 0..n {
                                    for b in 0..n {
                                        let g = self.gamma1(i, a, k, b);
                                        if g.is_zero() {
                                            continue;
                                        }
                                        lhs = lhs.add(&g.mul(&self.gamma2_first(a, j, b, l, m, o)));
                                    }
                                }
                                let mut rhs = Frac::zero();
                                for b in 0..n {
                                    for c in 0..n {
                                        let g = self.gamma1(k, b, m, c);
                                        if g.is_zero() {
                                            continue;
                                        }
                                        rhs =
                                            rhs.add(&g.mul(&self.gamma2_second(i, j, b, l, c, o)));
                                    }
                                }
                                if lhs != rhs {
                                    return Ok(Check::fail(
                                        "cocycle_identity",
                                        format!(
                                            "triple (t_{i}{j}, t_{k}{l}, t_{m}{o}): {lhs:?} != {rhs:?}"
                                        ),
                                    ));
                                }
                            }
                        }
                    }
                }
            }
        }
        Ok(Check::ok("cocycle_identity"))
    }

    /// `sum gamma(x1,y1) gamma^-1(x2,y2) = counit(x) counit(y)` and the
    /// mirror, on all degree-1 pairs.
    pub fn convolution_check(&self) -> Check {
        let n = self.n();
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    for l in 0..n {
                        let mut acc = Frac::zero();
                        let mut acc_mirror = Frac::zero();
                        for a in 0..n {
                            for b in 0..n {
                                acc = acc.add(
                                    &self.gamma1(i, a, k, b).mul(&self.gamma1_inv(a, j, b, l)),
                                );
                                acc_mirror = acc_mirror.add(
                                    &self.gamma1_inv(i, a, k, b).mul(&self.gamma1(a, j, b, l)),
                                );
                            }
                        }
                        let expected = if i == j && k == l {
                            Frac::one()
                        } else {
                            Frac::zero()
                        };
                        if acc != expected || acc_mirror != expected {
                            return Check::fail(
                                "convolution_inverse",
                                format!("pair (t_{i}{j}, t_{k}{l})"),
                            );
                        }
                    }
                }
            }
        }
        Check::ok("convolution_inverse")
    }

    /// Unitality: `gamma(1, t_kl) = gamma(t_kl, 1) = delta_kl`, with the
    /// unit represented by the unit Borel element on the inverted route.
    pub fn unitality_check(&self) -> Check {
        let n = self.n();
        let rank = self.ctx.rank();
        let one_plus = BorelElement::one(Side::Plus, rank);
        let one_minus = BorelElement::one(Side::Minus, rank);
        for k in 0..n {
            for l in 0..n {
                let left = self.ctx.pair(&self.x_table[k][l], &one_minus);
                let right = self.ctx.pair(&one_plus, &self.y_table[k][l]);
                let expected = if k == l { Frac::one() } else { Frac::zero() };
                if left != expected || right != expected {
                    return Check::fail("unitality", format!("t_{k}{l}"));
                }
            }
        }
        Check::ok("unitality")
    }

    /// Agreement of the two evaluation routes for `gamma` on all degree-1
    /// pairs: the literal `gamma_0 ((phi* (x) phi*))` sum with counit
    /// bookkeeping, against the collapsed table values.
    pub fn two_path_check(&self) -> Result<Check, TwistError> {
        let n = self.n();
        let pi1 = self.ctx.cf.triple.pi1.clone();
        let pi2 = self.ctx.cf.triple.pi2.clone();
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    for l in 0..n {
                        // direct: sum_{a,b} eps(t_ia) sigma0(rho1-(t_aj), rho2+(t_kb)) eps(t_bl)
                        let mut direct = Frac::zero();
                        for a in 0..n {
                            if a != i {
                                continue; // eps(t_ia) = delta_ia
                            }
                            for b in 0..n {
                                if b != l {
                                    continue;
                                }
                                let c_fun = rho_restrict(
                                    &self.rep,
                                    MatrixCoefficient { row: a, col: j },
                                    &pi1,
                                    Side::Minus,
                                    self.height_cap,
                                );
                                let b_fun = rho_restrict(
                                    &self.rep,
                                    MatrixCoefficient { row: k, col: b },
                                    &pi2,
                                    Side::Plus,
                                    self.height_cap,
                                );
                                direct = direct.add(&self.sigma0(&c_fun, &b_fun)?);
                            }
                        }
                        let collapsed = self.gamma1(i, j, k, l);
                        if direct != collapsed {
                            return Ok(Check::fail(
                                "two_path_gamma",
                                format!("pair (t_{i}{j}, t_{k}{l})"),
                            ));
                        }
                    }
                }
            }
        }
        Ok(Check::ok("two_path_gamma"))
    }

    /// The skew pairing on the restricted function algebras: both arguments
    /// are dualized back to the first subset's Borel halves and paired there,
    /// with lattice membership enforced.
    pub fn sigma0(&self, c: &BorelFunctional, b: &BorelFunctional) -> Result<Frac, TwistError> {
        let x = theta_invert(&self.ctx, c, Some(&self.lat1_plus))?;
        let y2 = theta_invert(&self.ctx, b, Some(&self.lat2_minus))?;
        let y = psi(&self.ctx.cf.triple, &y2, false)?;
        // the relabeled lattice: pullback of the second subset's lattice
        let pulled: Vec<Weight> = self
            .lat2_minus
            .basis()
            .iter()
            .map(|w| {
                self.ctx
                    .cf
                    .triple
                    .tau_inv_linear(w)
                    .ok_or(BorelError::UnsupportedLetters)
            })
            .collect::<Result<_, _>>()?;
        let lat_pulled = Lattice::from_generators(self.ctx.rank(), &pulled);
        Ok(self
            .ctx
            .pair_in_lattices(&x, &self.lat1_plus, &y, &lat_pulled)?)
    }

    /// Twisted product of two generators:
    /// `x . y = sum gamma(x1, y1) x2 y2 gamma^-1(x3, y3)`.
    pub fn twisted_product(&self, i: usize, j: usize, k: usize, l: usize) -> Deg2Expr {
        let n = self.n();
        let mut out = Deg2Expr::default();
        for a in 0..n {
            for c in 0..n {
                for b in 0..n {
                    for d in 0..n {
                        let g = self.gamma1(i, a, k, b);
                        if g.is_zero() {
                            continue;
                        }
                        let gi = self.gamma1_inv(c, j, d, l);
                        if gi.is_zero() {
                            continue;
                        }
                        out.add_term((a, c, b, d), g.mul(&gi));
                    }
                }
            }
        }
        out
    }

    /// Untwisted product as a degree-2 expression.
    pub fn untwisted_product(&self, i: usize, j: usize, k: usize, l: usize) -> Deg2Expr {
        let mut out = Deg2Expr::default();
        out.add_term((i, j, k, l), Frac::one());
        out
    }

    /// Evaluation signature of one degree-2 monomial `t_(a c) t_(b d)`:
    /// exact values on the spanning monomials `F_w K_mu E_w'` with the toral
    /// part kept symbolic, grouped by the intermediate weight.
    fn monomial_signature2(&self, a: usize, c: usize, b: usize, d: usize) -> Signature {
        if let Some(s) = self.sig2.borrow().get(&(a, c, b, d)) {
            return s.clone();
        }
        let n = self.n();
        let mut sig: Signature = BTreeMap::new();
        for (wf, _mf) in &self.sig_words {
            let af = self.coproduct_action2(Side::Minus, wf);
            for (we, _me) in &self.sig_words_plus {
                let ae = self.coproduct_action2(Side::Plus, we);
                let row = a * n + b;
                let col = c * n + d;
                for mid in 0..(n * n) {
                    let x = af.get(row, mid);
                    if x.is_zero() {
                        continue;
                    }
                    let y = ae.get(mid, col);
                    if y.is_zero() {
                        continue;
                    }
                    let wt = self.rep.weights[mid / n].add(&self.rep.weights[mid % n]);
                    let key = (wf.clone(), we.clone(), wt.0);
                    let v = x.mul(y);
                    let e = sig.entry(key).or_insert_with(Frac::zero);
                    *e = e.add(&v);
                }
            }
        }
        sig.retain(|_, v| !v.is_zero());
        self.sig2.borrow_mut().insert((a, c, b, d), sig.clone());
        sig
    }

    /// Action of the coproduct of a bare word on `V (x) V` (memoized).
    fn coproduct_action2(&self, side: Side, w: &Word) -> SMat {
        if let Some(m) = self.cop2_cache.borrow().get(&(side, w.clone())) {
            return m.clone();
        }
        let rank = self.ctx.rank();
        let mut elem = BorelElement::zero(side, rank);
        elem.add_term(w.clone(), vec![Q::zero(); rank], Frac::one());
        let n = self.n();
        let mut acc = SMat::zero(n * n, n * n);
        for (left, right, coeff) in elem.coproduct(&self.ctx.cf) {
            let ml = self.rep.act_term(side, &left.0, &Weight(left.1.clone()));
            let mr = self.rep.act_term(side, &right.0, &Weight(right.1.clone()));
            acc = acc.add(&ml.kron(&mr).scale(&coeff));
        }
        self.cop2_cache
            .borrow_mut()
            .insert((side, w.clone()), acc.clone());
        acc
    }

    pub fn signature2(&self, expr: &Deg2Expr) -> Signature {
        let mut sig: Signature = BTreeMap::new();
        for (&(a, c, b, d), coeff) in &expr.coeffs {
            for (key, v) in self.monomial_signature2(a, c, b, d) {
                let e = sig.entry(key).or_insert_with(Frac::zero);
                *e = e.add(&v.mul(coeff));
            }
        }
        sig.retain(|_, v| !v.is_zero());
        sig
    }

    /// Do two degree-2 expressions define the same functional?
    pub fn deg2_equal(&self, x: &Deg2Expr, y: &Deg2Expr) -> bool {
        self.signature2(x) == self.signature2(y)
    }

    fn coproduct_action3(&self, side: Side, w: &Word) -> SMat {
        if let Some(m) = self.cop3_cache.borrow().get(&(side, w.clone())) {
            return m.clone();
        }
        let rank = self.ctx.rank();
        let mut elem = BorelElement::zero(side, rank);
        elem.add_term(w.clone(), vec![Q::zero(); rank], Frac::one());
        let n = self.n();
        let mut acc = SMat::zero(n * n * n, n * n * n);
        for (left, right, coeff) in elem.coproduct(&self.ctx.cf) {
            let ml = self.rep.act_term(side, &left.0, &Weight(left.1.clone()));
            let mut relem = BorelElement::zero(side, rank);
            relem.add_term(right.0.clone(), right.1.clone(), Frac::one());
            for (l2, r2, c2) in relem.coproduct(&self.ctx.cf) {
                let m2 = self.rep.act_term(side, &l2.0, &Weight(l2.1.clone()));
                let m3 = self.rep.act_term(side, &r2.0, &Weight(r2.1.clone()));
                acc = acc.add(&ml.kron(&m2).kron(&m3).scale(&coeff.mul(&c2)));
            }
        }
        self.cop3_cache
            .borrow_mut()
            .insert((side, w.clone()), acc.clone());
        acc
    }

    fn monomial_signature3(&self, key6: Key6) -> Signature {
        if let Some(s) = self.sig3.borrow().get(&key6) {
            return s.clone();
        }
        let (a, d, b, e, c, f) = key6;
        let n = self.n();
        let mut sig: Signature = BTreeMap::new();
        for (wf, _) in &self.sig_words {
            let af = self.coproduct_action3(Side::Minus, wf);
            for (we, _) in &self.sig_words_plus {
                let ae = self.coproduct_action3(Side::Plus, we);
                let row = (a * n + b) * n + c;
                let col = (d * n + e) * n + f;
                for mid in 0..(n * n * n) {
                    let x = af.get(row, mid);
                    if x.is_zero() {
                        continue;
                    }
                    let y = ae.get(mid, col);
                    if y.is_zero() {
                        continue;
                    }
                    let wt = self.rep.weights[mid / (n * n)]
                        .add(&self.rep.weights[(mid / n) % n])
                        .add(&self.rep.weights[mid % n]);
                    let skey = (wf.clone(), we.clone(), wt.0);
                    let v = x.mul(y);
                    let en = sig.entry(skey).or_insert_with(Frac::zero);
                    *en = en.add(&v);
                }
            }
        }
        sig.retain(|_, v| !v.is_zero());
        self.sig3.borrow_mut().insert(key6, sig.clone());
        sig
    }

    pub fn signature3(&self, expr: &Deg3Expr) -> Signature {
        let mut sig: Signature = BTreeMap::new();
        for (key, coeff) in &expr.coeffs {
            for (skey, v) in self.monomial_signature3(*key) {
                let e = sig.entry(skey).or_insert_with(Frac::zero);
                *e = e.add(&v.mul(coeff));
            }
        }
        sig.retain(|_, v| !v.is_zero());
        sig
    }

    /// Twisted product of a degree-2 monomial with a generator (degree 3).
    fn twisted_product_21(
        &self,
        (a, c, b, d): (usize, usize, usize, usize),
        m: usize,
        o: usize,
    ) -> Deg3Expr {
        let n = self.n();
        let mut out = Deg3Expr::default();
        // Delta^2(t_ac t_bd): (t_ae t_bf) (x) (t_eg t_fh) (x) (t_gc t_hd);
        // Delta^2(t_mo): t_mp (x) t_pr (x) t_ro
        for ea in 0..n {
            for fa in 0..n {
                for p in 0..n {
                    let g = self.gamma2_first(a, ea, b, fa, m, p);
                    if g.is_zero() {
                        continue;
                    }
                    for ga in 0..n {
                        for h in 0..n {
                            for r in 0..n {
                                let gi = self.gamma2_first_inv(ga, c, h, d, r, o);
                                if gi.is_zero() {
                                    continue;
                                }
                                out.add_term((ea, ga, fa, h, p, r), g.mul(&gi));
                            }
                        }
                    }
                }
            }
        }
        out
    }

    /// Twisted product of a generator with a degree-2 monomial.
    fn twisted_product_12(
        &self,
        i: usize,
        j: usize,
        (a, c, b, d): (usize, usize, usize, usize),
    ) -> Deg3Expr {
        let n = self.n();
        let mut out = Deg3Expr::default();
        for p in 0..n {
            for ea in 0..n {
                for fa in 0..n {
                    let g = self.gamma2_second(i, p, a, ea, b, fa);
                    if g.is_zero() {
                        continue;
                    }
                    for r in 0..n {
                        for ga in 0..n {
                            for h in 0..n {
                                let gi = self.gamma2_second_inv(r, j, ga, c, h, d);
                                if gi.is_zero() {
                                    continue;
                                }
                                out.add_term((p, r, ea, ga, fa, h), g.mul(&gi));
                            }
                        }
                    }
                }
            }
        }
        out
    }

    /// Associativity of the twisted product on one generator triple.
    pub fn twisted_associative(
        &self,
        i: usize,
        j: usize,
        k: usize,
        l: usize,
        m: usize,
        o: usize,
    ) -> bool {
        let xy = self.twisted_product(i, j, k, l);
        let mut left = Deg3Expr::default();
        for (key, coeff) in &xy.coeffs {
            for (k3, v) in self.twisted_product_21(*key, m, o).coeffs {
                left.add_term(k3, v.mul(coeff));
            }
        }
        let yz = self.twisted_product(k, l, m, o);
        let mut right = Deg3Expr::default();
        for (key, coeff) in &yz.coeffs {
            for (k3, v) in self.twisted_product_12(i, j, *key).coeffs {
                right.add_term(k3, v.mul(coeff));
            }
        }
        self.signature3(&left) == self.signature3(&right)
    }

    /// Componentwise RTT relation for a given product rule:
    /// `sum R[(i,k),(a,b)] (t_aj . t_bl) = sum (t_kb . t_ia) R[(a,b),(j,l)]`.
    pub fn rtt_products_hold(
        &self,
        r: &RMatrix,
        product: &dyn Fn(usize, usize, usize, usize) -> Deg2Expr,
    ) -> Option<String> {
        let n = self.n();
        for i in 0..n {
            for k in 0..n {
                for j in 0..n {
                    for l in 0..n {
                        let mut lhs = Deg2Expr::default();
                        let mut rhs = Deg2Expr::default();
                        for a in 0..n {
                            for b in 0..n {
                                let rv = &r.entries[i * n + k][a * n + b];
                                if !rv.is_zero() {
                                    for (key, c) in product(a, j, b, l).coeffs {
                                        lhs.add_term(key, c.mul_scalar(rv));
                                    }
                                }
                                let rv2 = &r.entries[a * n + b][j * n + l];
                                if !rv2.is_zero() {
                                    for (key, c) in product(k, b, i, a).coeffs {
                                        rhs.add_term(key, c.mul_scalar(rv2));
                                    }
                                }
                            }
                        }
                        if !self.deg2_equal(&lhs, &rhs) {
                            return Some(format!("instance (i={i}, k={k}, j={j}, l={l})"));
                        }
                    }
                }
            }
        }
        None
    }

    /// Twisted R-matrix by convolution: `r' = gamma_21 * r * gamma^-1`,
    /// i.e. `r'(t_ij, t_kl) = sum gamma(t_ka, t_ib) r(t_bc, t_ad) gamma^-1(t_cj, t_dl)`.
    pub fn twisted_r(&self, r: &RMatrix) -> Result<RMatrix, TwistError> {
        let n = self.n();
        let d = n * n;
        let mut entries = vec![vec![Scalar::zero(); d]; d];
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    for l in 0..n {
                        let mut acc = Frac::zero();
                        for a in 0..n {
                            for b in 0..n {
                                let g = self.gamma1(k, a, i, b);
                                if g.is_zero() {
                                    continue;
                                }
                                for c in 0..n {
                                    for dd in 0..n {
                                        let rv = &r.entries[b * n + a][c * n + dd];
                                        if rv.is_zero() {
                                            continue;
                                        }
                                        let gi = self.gamma1_inv(c, j, dd, l);
                                        if gi.is_zero() {
                                            continue;
                                        }
                                        acc = acc.add(&g.mul_scalar(rv).mul(&gi));
                                    }
                                }
                            }
                        }
                        entries[i * n + k][j * n + l] = acc.to_scalar().map_err(|_| {
                            TwistError::Qfa(QfaError::NotLaurent(format!(
                                "twisted entry (({i},{k}),({j},{l}))"
                            )))
                        })?;
                    }
                }
            }
        }
        Ok(RMatrix { n, entries })
    }

    /// Surjectivity shadow for completely disjoint triples with `u = 0`:
    /// the degree-1 images under `(rho_1^- (x) rho_2^+) Delta` must have
    /// degree at most 1 and full rank over the component they touch.
    pub fn nondegeneracy_witness(&self) -> Result<Check, TwistError> {
        let cf = &self.ctx.cf;
        let t = &cf.triple;
        if t.is_empty() {
            return Ok(Check::ok("nondegeneracy_witness"));
        }
        for &a in &t.pi1 {
            for &b in &t.pi2 {
                if !cf
                    .inner(
                        &Weight::simple_root(cf.rd.rank, a),
                        &Weight::simple_root(cf.rd.rank, b),
                    )
                    .is_zero()
                {
                    return Err(TwistError::NotCompletelyDisjoint);
                }
            }
        }
        if cf
            .u_matrix()
            .iter()
            .any(|row| row.iter().any(|x| !x.is_zero()))
        {
            return Err(TwistError::NotCompletelyDisjoint);
        }
        let n = self.n();
        // degree-at-most-1 coordinates of Z_ij = sum_a X_ia (x) Y'_aj in the
        // free tensor basis (higher components are outside the target)
        let mut keys: BTreeMap<(borel::TermKey, borel::TermKey), usize> = BTreeMap::new();
        let mut rows: Vec<BTreeMap<usize, Frac>> = Vec::new();
        for i in 0..n {
            for j in 0..n {
                let mut row: BTreeMap<usize, Frac> = BTreeMap::new();
                for a in 0..n {
                    let x = &self.x_table[i][a];
                    let y = &self.y_table[a][j];
                    for (kx, cx) in x.terms() {
                        if kx.0.len() > 1 {
                            continue;
                        }
                        for (ky, cy) in y.terms() {
                            if ky.0.len() > 1 {
                                continue;
                            }
                            let next = keys.len();
                            let id = *keys.entry((kx.clone(), ky.clone())).or_insert(next);
                            let e = row.entry(id).or_insert_with(Frac::zero);
                            *e = e.add(&cx.mul(cy));
                        }
                    }
                }
                row.retain(|_, v| !v.is_zero());
                if !row.is_empty() {
                    rows.push(row);
                }
            }
        }
        let ncols = keys.len();
        let dense: Vec<Vec<Frac>> = rows
            .iter()
            .map(|r| {
                (0..ncols)
                    .map(|c| r.get(&c).cloned().unwrap_or_else(Frac::zero))
                    .collect()
            })
            .collect();
        let rank = crate::linalg::fr_rank(&dense);
        Ok(Check::from_flag(
            "nondegeneracy_witness",
            rank == ncols,
            || format!("rank {rank} < target dimension {ncols}"),
        ))
    }
}

/// Full verification report of one fixture run.
#[derive(Serialize)]
pub struct TwistReport {
    pub schema_version: u32,
    pub checks: Vec<Check>,
    pub gamma_table: Vec<(usize, usize, usize, usize, Scalar)>,
    pub r_prime: Option<RMatrix>,
    pub r_untwisted: Option<RMatrix>,
    pub nonstandard_entries: Vec<((usize, usize), (usize, usize))>,
    pub layer_scalars_note: String,
}

impl TwistReport {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }
}

/// Options for the full pipeline run.
pub struct TwistOptions {
    pub height_cap: usize,
    /// Compute and verify the twisted R-matrix.
    pub with_r_matrix: bool,
    /// Verify associativity of the twisted product on all generator triples.
    pub with_associativity: bool,
}

impl Default for TwistOptions {
    fn default() -> Self {
        TwistOptions {
            height_cap: borel::DEFAULT_HEIGHT_CAP,
            with_r_matrix: true,
            with_associativity: false,
        }
    }
}

/// Run the whole pipeline for one fixture and collect the report.
pub fn run_twist(cf: CompatibleForm, opts: &TwistOptions) -> Result<TwistReport, TwistError> {
    let engine = TwistEngine::new(cf, opts.height_cap)?;
    let mut checks = Vec::new();
    let n = engine.n();

    // Borel generator commutation across the triple at the bicharacter level
    {
        let cf = engine.cf();
        let mut pass = true;
        let mut witness = String::new();
        for &a in &cf.triple.pi1 {
            for &b in &cf.triple.pi1 {
                let tb = cf.triple.tau_of(b).unwrap();
                let expo = cf.u_plus(
                    &Weight::simple_root(cf.rd.rank, a),
                    &Weight::simple_root(cf.rd.rank, tb),
                );
                if !expo.is_zero() {
                    pass = false;
                    witness = format!("u_+(alpha_{a}, tau alpha_{b}) = {expo}");
                }
            }
        }
        checks.push(Check::from_flag("borel_commutation", pass, || witness));
    }

    checks.push(engine.unitality_check());
    checks.push(engine.cocycle_check(2)?);
    checks.push(engine.convolution_check());
    checks.push(engine.two_path_check()?);

    // counit compatibility of the twisted product
    {
        let mut pass = true;
        let mut witness = String::new();
        'outer: for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    for l in 0..n {
                        let p = engine.twisted_product(i, j, k, l);
                        let expected = if i == j && k == l {
                            Frac::one()
                        } else {
                            Frac::zero()
                        };
                        if p.counit() != expected {
                            pass = false;
                            witness = format!("counit of t_{i}{j} . t_{k}{l}");
                            break 'outer;
                        }
                    }
                }
            }
        }
        checks.push(Check::from_flag("twisted_counit", pass, || witness));
    }

    let mut r_prime = None;
    let mut r_untwisted = None;
    let mut nonstandard_entries = Vec::new();
    let mut layer_note = String::new();
    if opts.with_r_matrix {
        let b: Braiding = braiding(&engine.rep, &engine.ctx, opts.height_cap)?;
        layer_note = format!(
            "kappa = -u_minus on basis pairs; layer scalars: {:?}",
            b.layer_scalars
                .iter()
                .map(|(c, t)| format!("{c:?} -> {t:?}"))
                .collect::<Vec<_>>()
        );
        checks.push(Check::from_flag("untwisted_qybe", qybe_holds(&b.r), || {
            "untwisted R fails QYBE".into()
        }));
        checks.push(Check::from_flag(
            "untwisted_minimal_poly_degree_2",
            qfa::minimal_poly_degree_is_two(&b.r_hat),
            || "untwisted braiding is not Hecke".into(),
        ));
        let rtt = qfa::rtt_check(&engine.rep, &b.r);
        checks.push(Check::from_flag("untwisted_rtt", rtt.pass, || {
            rtt.witness.clone().unwrap_or_default()
        }));
        checks.push(Check::from_flag(
            "untwisted_support_standard",
            nonstandard_support(&b.r).is_empty(),
            || "untwisted R has nonstandard entries".into(),
        ));

        let rp = engine.twisted_r(&b.r)?;
        if !qybe_holds(&rp) {
            return Err(TwistError::QybeFailed);
        }
        checks.push(Check::ok("twisted_qybe"));
        // classical limit: both matrices specialize to the identity at q = 1
        {
            let classical_ok = |r: &RMatrix| -> bool {
                let d = r.dim();
                (0..d).all(|i| {
                    (0..d).all(|j| {
                        let v = r.entries[i][j].specialize_one();
                        if i == j {
                            v == crate::scalar::int(1)
                        } else {
                            v.is_zero()
                        }
                    })
                })
            };
            checks.push(Check::from_flag(
                "classical_limit_identity",
                classical_ok(&rp) && classical_ok(&b.r),
                || "an R-matrix does not degenerate to the identity at q = 1".into(),
            ));
        }
        checks.push(Check::from_flag(
            "twisted_minimal_poly_degree_2",
            qfa::minimal_poly_degree_is_two(&rp.r_hat()),
            || "twisted braiding is not Hecke".into(),
        ));
        nonstandard_entries = nonstandard_support(&rp);
        if engine.cf().triple.is_empty() {
            checks.push(Check::from_flag(
                "trivial_twist_fixed_point",
                rp == b.r,
                || "empty triple changed the R-matrix".into(),
            ));
        } else {
            checks.push(Check::from_flag(
                "twisted_support_nonstandard",
                !nonstandard_entries.is_empty(),
                || "twist left the support pattern standard".into(),
            ));
            // twisted products satisfy the twisted RTT relations and break
            // the untwisted ones (the structural nontriviality witness)
            let tw = |a: usize, b2: usize, c: usize, d: usize| engine.twisted_product(a, b2, c, d);
            let hold = engine.rtt_products_hold(&rp, &tw);
            checks.push(Check::from_flag(
                "twisted_rtt_products",
                hold.is_none(),
                || hold.clone().unwrap_or_default(),
            ));
            let broken = engine.rtt_products_hold(&b.r, &tw);
            checks.push(Check::from_flag(
                "twisted_relations_differ",
                broken.is_some(),
                || "twisted products still satisfy the untwisted relations".into(),
            ));
        }
        // sanity: untwisted products satisfy the untwisted RTT relations
        let un = |a: usize, b2: usize, c: usize, d: usize| engine.untwisted_product(a, b2, c, d);
        let hold = engine.rtt_products_hold(&b.r, &un);
        checks.push(Check::from_flag(
            "untwisted_rtt_products",
            hold.is_none(),
            || hold.clone().unwrap_or_default(),
        ));
        r_prime = Some(rp);
        r_untwisted = Some(b.r);
    }

    if opts.with_associativity {
        let mut pass = true;
        let mut witness = String::new();
        'assoc: for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    for l in 0..n {
                        for m in 0..n {
                            for o in 0..n {
                                if !engine.twisted_associative(i, j, k, l, m, o) {
                                    pass = false;
                                    witness = format!("triple (t_{i}{j}, t_{k}{l}, t_{m}{o})");
                                    break 'assoc;
                                }
                            }
                        }
                    }
                }
            }
        }
        checks.push(Check::from_flag("twisted_associativity", pass, || witness));
    }

    let mut gamma_table = Vec::new();
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                for l in 0..n {
                    let v = engine.gamma1(i, j, k, l);
                    if !v.is_zero() {
                        let s = v.to_scalar().map_err(|_| {
                            TwistError::Qfa(QfaError::NotLaurent(format!(
                                "gamma(t_{i}{j}, t_{k}{l})"
                            )))
                        })?;
                        gamma_table.push((i, j, k, l, s));
                    }
                }
            }
        }
    }

    Ok(TwistReport {
        schema_version: SCHEMA_VERSION,
        checks,
        gamma_table,
        r_prime,
        r_untwisted,
        nonstandard_entries,
        layer_scalars_note: layer_note,
    })
}
