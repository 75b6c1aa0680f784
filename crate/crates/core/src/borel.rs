//! The two Borel halves of the multiparameter quantized enveloping algebra,
//! realized concretely: free word algebras on the `E` (resp. `F`) generators
//! with a toral K-index attached to every term, the skew Hopf pairing between
//! the halves, Gram matrices per weight, the dualization (theta) maps, and
//! the relabeling isomorphisms along a triple's bijection.
//!
//! # Toral bookkeeping
//!
//! On the minus side a term `(w, mu)` stands for `F_w K_mu`. On the plus side
//! a term `(w, lambda)` stands for `E_w K_{tilde(lambda)}`: the index stored
//! is the *pre-tilde* parameter, so the pairing rule reads uniformly
//!
//! ```text
//!   < x K_[lambda] | y K_mu > = q^(u_-(lambda, mu)) < x | y >.
//! ```
//!
//! All derived formulas below (coproduct factors, normal ordering, the word
//! recursion) are expressed through `u_±` in this parameterization, so the
//! tilde matrix itself never enters the hot paths.
//!
//! # Skew axiom orientation
//!
//! The pairing axioms are fixed once, by [`SKEW_ORIENTATION`]: products in
//! the second slot expand against the straight coproduct of the first slot,
//! products in the first slot against the reversed coproduct of the second.
//! This is the orientation under which the multiparameter quantum Serre
//! elements land in the radical and the Drinfeld-double cross relation
//! reproduces the `E F - F E` commutator; [`calibrate_pairing`] re-derives
//! the generator constant against that relation at every build.

use std::cell::RefCell;
use std::collections::{BTreeMap, HashMap};
use std::fmt;

use num_traits::Zero;
use thiserror::Error;

use crate::bdstruct::{BDTriple, CompatibleForm};
use crate::linalg;
use crate::rootdata::{Lattice, Weight};
use crate::scalar::{int, qbinom, Frac, Scalar, Q};

pub const DEFAULT_HEIGHT_CAP: usize = 6;

/// Orientation of the skew-pairing axioms (which slot's coproduct is
/// reversed). One global constant; validated by calibration rather than
/// configurable at runtime.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SkewOrientation {
    /// `<x | y y'> = sum <x_1|y> <x_2|y'>` and `<x x'|y> = sum <x|y_2> <x'|y_1>`.
    SecondSlotStraightFirstSlotReversed,
}

pub const SKEW_ORIENTATION: SkewOrientation = SkewOrientation::SecondSlotStraightFirstSlotReversed;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum BorelError {
    #[error("height {got} exceeds the configured cap {cap}")]
    HeightCapExceeded { got: usize, cap: usize },
    #[error("K-index lies outside the declared lattice")]
    LatticeViolation,
    #[error("functional is not in the image of the dualization map")]
    NotInImage,
    #[error("toral character matches no single lattice point")]
    AmbiguousToral,
    #[error("element has letters or K-indices outside the triple's subset")]
    UnsupportedLetters,
    #[error("element mixes toral indices; dualization needs a single K-index")]
    MixedToral,
    #[error("pairing calibration failed: no generator constant satisfies the cross relation")]
    CalibrationFailed,
}

/// Which Borel half an element lives in.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Side {
    /// `E` letters; K-indices stored pre-tilde.
    Plus,
    /// `F` letters; K-indices direct.
    Minus,
}

impl Side {
    pub fn opposite(self) -> Side {
        match self {
            Side::Plus => Side::Minus,
            Side::Minus => Side::Plus,
        }
    }
}

/// Word over simple-root letters (0-based indices).
pub type Word = Vec<usize>;

pub fn counts_of_word(rank: usize, w: &[usize]) -> Vec<u32> {
    let mut c = vec![0u32; rank];
    for &l in w {
        c[l] += 1;
    }
    c
}

pub fn weight_of_counts(counts: &[u32]) -> Weight {
    Weight(counts.iter().map(|&c| int(c as i64)).collect())
}

pub fn height(counts: &[u32]) -> usize {
    counts.iter().map(|&c| c as usize).sum()
}

/// All words with the given letter multiset, lexicographically.
pub fn words_for_counts(counts: &[u32]) -> Vec<Word> {
    fn rec(remaining: &mut [u32], current: &mut Word, out: &mut Vec<Word>) {
        if remaining.iter().all(|&c| c == 0) {
            out.push(current.clone());
            return;
        }
        for l in 0..remaining.len() {
            if remaining[l] > 0 {
                remaining[l] -= 1;
                current.push(l);
                rec(remaining, current, out);
                current.pop();
                remaining[l] += 1;
            }
        }
    }
    let mut out = Vec::new();
    let mut remaining = counts.to_vec();
    rec(&mut remaining, &mut Vec::new(), &mut out);
    out
}

pub type TermKey = (Word, Vec<Q>);

/// Weighted linear combination of generator words with toral K-indices; the
/// computational carrier of one Borel half.
#[derive(Clone, PartialEq, Eq)]
pub struct BorelElement {
    pub side: Side,
    pub rank: usize,
    terms: BTreeMap<TermKey, Frac>,
}

impl BorelElement {
    pub fn zero(side: Side, rank: usize) -> Self {
        BorelElement {
            side,
            rank,
            terms: BTreeMap::new(),
        }
    }

    pub fn one(side: Side, rank: usize) -> Self {
        let mut e = Self::zero(side, rank);
        e.add_term(Vec::new(), vec![Q::zero(); rank], Frac::one());
        e
    }

    /// `K_[idx]` (plus side) or `K_idx` (minus side).
    pub fn k_power(side: Side, idx: &Weight) -> Self {
        let mut e = Self::zero(side, idx.rank());
        e.add_term(Vec::new(), idx.0.clone(), Frac::one());
        e
    }

    /// `E_letter` or `F_letter`.
    pub fn generator(side: Side, rank: usize, letter: usize) -> Self {
        let mut e = Self::zero(side, rank);
        e.add_term(vec![letter], vec![Q::zero(); rank], Frac::one());
        e
    }

    pub fn add_term(&mut self, word: Word, k: Vec<Q>, coeff: Frac) {
        if coeff.is_zero() {
            return;
        }
        use std::collections::btree_map::Entry;
        match self.terms.entry((word, k)) {
            Entry::Vacant(v) => {
                v.insert(coeff);
            }
            Entry::Occupied(mut o) => {
                let s = o.get().add(&coeff);
                if s.is_zero() {
                    o.remove();
                } else {
                    *o.get_mut() = s;
                }
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&TermKey, &Frac)> {
        self.terms.iter()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn add(&self, other: &BorelElement) -> BorelElement {
        assert_eq!(self.side, other.side);
        let mut out = self.clone();
        for ((w, k), c) in &other.terms {
            out.add_term(w.clone(), k.clone(), c.clone());
        }
        out
    }

    pub fn sub(&self, other: &BorelElement) -> BorelElement {
        self.add(&other.scale(&Frac::from_scalar(Scalar::from_int(-1))))
    }

    pub fn scale(&self, f: &Frac) -> BorelElement {
        let mut out = BorelElement::zero(self.side, self.rank);
        for ((w, k), c) in &self.terms {
            out.add_term(w.clone(), k.clone(), c.mul(f));
        }
        out
    }

    /// The single K-index shared by all terms, if there is one.
    pub fn uniform_k_index(&self) -> Result<Weight, BorelError> {
        let mut it = self.terms.keys();
        let first = it.next().ok_or(BorelError::MixedToral)?;
        for key in it {
            if key.1 != first.1 {
                return Err(BorelError::MixedToral);
            }
        }
        Ok(Weight(first.1.clone()))
    }

    /// Counit: kills every nonempty word, sends all K's to 1.
    pub fn counit(&self) -> Frac {
        let mut acc = Frac::zero();
        for ((w, _), c) in &self.terms {
            if w.is_empty() {
                acc = acc.add(c);
            }
        }
        acc
    }

    /// Product, with K's normal-ordered to the right of the words.
    pub fn mul(&self, other: &BorelElement, cf: &CompatibleForm) -> BorelElement {
        assert_eq!(self.side, other.side);
        let mut out = BorelElement::zero(self.side, self.rank);
        for ((w1, k1), c1) in &self.terms {
            let k1w = Weight(k1.clone());
            for ((w2, k2), c2) in &other.terms {
                let nu2 = weight_of_counts(&counts_of_word(self.rank, w2));
                // commutation exponent for moving K_(k1) past the word w2
                let expo = match self.side {
                    Side::Plus => -cf.u_minus(&k1w, &nu2),
                    Side::Minus => -cf.u_plus(&k1w, &nu2),
                };
                let mut w = w1.clone();
                w.extend_from_slice(w2);
                let k: Vec<Q> = k1.iter().zip(k2).map(|(a, b)| a + b).collect();
                out.add_term(w, k, c1.mul(c2).mul(&Frac::qpow(expo)));
            }
        }
        out
    }

    /// Full coproduct, as a list of `(left term, right term, coefficient)`.
    pub fn coproduct(&self, cf: &CompatibleForm) -> Vec<(TermKey, TermKey, Frac)> {
        let mut acc: BTreeMap<(TermKey, TermKey), Frac> = BTreeMap::new();
        for ((w, k), c) in &self.terms {
            for (l, r, f) in coproduct_term(self.side, self.rank, w, k, cf) {
                let co = c.mul(&f);
                if co.is_zero() {
                    continue;
                }
                use std::collections::btree_map::Entry;
                match acc.entry((l, r)) {
                    Entry::Vacant(v) => {
                        v.insert(co);
                    }
                    Entry::Occupied(mut o) => {
                        let s = o.get().add(&co);
                        if s.is_zero() {
                            o.remove();
                        } else {
                            *o.get_mut() = s;
                        }
                    }
                }
            }
        }
        acc.into_iter().map(|((l, r), c)| (l, r, c)).collect()
    }

    /// Antipode, from `S(E_a) = -K_[-a] E_a`, `S(F_a) = -F_a K_a`,
    /// `S(K) = K^{-1}`, extended antimultiplicatively.
    pub fn antipode(&self, cf: &CompatibleForm) -> BorelElement {
        let mut out = BorelElement::zero(self.side, self.rank);
        for ((w, k), c) in &self.terms {
            let neg_k = Weight(k.iter().map(|x| -x.clone()).collect());
            let mut acc = BorelElement::k_power(self.side, &neg_k);
            for &letter in w.iter().rev() {
                let alpha = Weight::simple_root(self.rank, letter);
                let factor = match self.side {
                    Side::Plus => BorelElement::k_power(Side::Plus, &alpha.neg())
                        .mul(&BorelElement::generator(Side::Plus, self.rank, letter), cf),
                    Side::Minus => BorelElement::generator(Side::Minus, self.rank, letter)
                        .mul(&BorelElement::k_power(Side::Minus, &alpha), cf),
                }
                .scale(&Frac::from_scalar(Scalar::from_int(-1)));
                acc = acc.mul(&factor, cf);
            }
            out = out.add(&acc.scale(c));
        }
        out
    }

    pub fn max_height(&self) -> usize {
        self.terms.keys().map(|(w, _)| w.len()).max().unwrap_or(0)
    }
}

impl fmt::Debug for BorelElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let gen = match self.side {
            Side::Plus => "E",
            Side::Minus => "F",
        };
        let mut first = true;
        for ((w, k), c) in &self.terms {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            write!(f, "[{:?}]", c)?;
            for &l in w {
                write!(f, " {}{}", gen, l + 1)?;
            }
            if k.iter().any(|x| !x.is_zero()) {
                write!(f, " K{:?}", Weight(k.clone()))?;
            }
        }
        Ok(())
    }
}

fn coproduct_term(
    side: Side,
    rank: usize,
    w: &Word,
    k: &[Q],
    cf: &CompatibleForm,
) -> Vec<(TermKey, TermKey, Frac)> {
    let m = w.len();
    let mut out = Vec::with_capacity(1 << m);
    let alpha = |l: usize| Weight::simple_root(rank, l);
    for mask in 0u32..(1 << m) {
        let chosen: Vec<usize> = (0..m).filter(|&i| mask >> i & 1 == 1).collect();
        let rest: Vec<usize> = (0..m).filter(|&i| mask >> i & 1 == 0).collect();
        let sub = |ix: &[usize]| -> Word { ix.iter().map(|&i| w[i]).collect() };
        let nu_chosen: Weight = chosen
            .iter()
            .fold(Weight::zero(rank), |acc, &i| acc.add(&alpha(w[i])));
        match side {
            Side::Plus => {
                // chosen positions go to the right slot; factor from moving
                // their K's past the remaining letters to the left
                let mut expo = Q::zero();
                for &r in &chosen {
                    for &l in &rest {
                        if r < l {
                            expo -= cf.u_minus(&alpha(w[r]), &alpha(w[l]));
                        }
                    }
                }
                let left_k: Vec<Q> = k.iter().zip(&nu_chosen.0).map(|(a, b)| a + b).collect();
                out.push((
                    (sub(&rest), left_k),
                    (sub(&chosen), k.to_vec()),
                    Frac::qpow(expo),
                ));
            }
            Side::Minus => {
                // chosen positions stay in the left slot; factor from moving
                // their K^{-1}'s past the later remaining letters
                let mut expo = Q::zero();
                for &t in &chosen {
                    for &r in &rest {
                        if t < r {
                            expo += cf.u_plus(&alpha(w[t]), &alpha(w[r]));
                        }
                    }
                }
                let right_k: Vec<Q> = k.iter().zip(&nu_chosen.0).map(|(a, b)| a - b).collect();
                out.push((
                    (sub(&chosen), k.to_vec()),
                    (sub(&rest), right_k),
                    Frac::qpow(expo),
                ));
            }
        }
    }
    out
}

/// The skew Hopf pairing between the halves: generator constants plus the
/// word recursion, with the toral rule `<x K_[l] | y K_m> = q^(u_-(l,m)) <x|y>`.
pub struct PairingCtx {
    pub cf: CompatibleForm,
    /// Per-simple-root generator pairing `<E_a | F_a> = c_a`.
    pub c: Vec<Frac>,
    word_cache: RefCell<HashMap<(Word, Word), Frac>>,
}

impl PairingCtx {
    pub fn with_constants(cf: CompatibleForm, c: Vec<Frac>) -> Self {
        PairingCtx {
            cf,
            c,
            word_cache: RefCell::new(HashMap::new()),
        }
    }

    /// Calibrated context: constants re-derived from the double cross
    /// relation.
    pub fn standard(cf: CompatibleForm) -> Result<Self, BorelError> {
        let c = calibrate_pairing(&cf)?;
        Ok(PairingCtx::with_constants(cf, c))
    }

    pub fn rank(&self) -> usize {
        self.cf.rd.rank
    }

    /// `<E_e | F_f>` on bare words.
    pub fn pair_words(&self, e: &[usize], f: &[usize]) -> Frac {
        if e.len() != f.len() {
            return Frac::zero();
        }
        if e.is_empty() {
            return Frac::one();
        }
        if counts_of_word(self.rank(), e) != counts_of_word(self.rank(), f) {
            return Frac::zero();
        }
        let key = (e.to_vec(), f.to_vec());
        if let Some(v) = self.word_cache.borrow().get(&key) {
            return v.clone();
        }
        // peel the leftmost E letter against every matching F position
        let gamma = e[0];
        let rest = &e[1..];
        let alpha = |l: usize| Weight::simple_root(self.rank(), l);
        let mut acc = Frac::zero();
        for (k, &fl) in f.iter().enumerate() {
            if fl != gamma {
                continue;
            }
            let mut expo = Q::zero();
            for &ft in f.iter().take(k) {
                expo += self.cf.u_plus(&alpha(ft), &alpha(gamma));
            }
            let mut fr: Word = f.to_vec();
            fr.remove(k);
            let term = self.c[gamma]
                .mul(&Frac::qpow(expo))
                .mul(&self.pair_words(rest, &fr));
            acc = acc.add(&term);
        }
        self.word_cache.borrow_mut().insert(key, acc.clone());
        acc
    }

    /// Full pairing of a plus element against a minus element.
    pub fn pair(&self, x: &BorelElement, y: &BorelElement) -> Frac {
        assert_eq!(x.side, Side::Plus);
        assert_eq!(y.side, Side::Minus);
        let mut acc = Frac::zero();
        for ((wx, kx), cx) in &x.terms {
            for ((wy, ky), cy) in &y.terms {
                let w = self.pair_words(wx, wy);
                if w.is_zero() {
                    continue;
                }
                let expo = self.cf.u_minus(&Weight(kx.clone()), &Weight(ky.clone()));
                acc = acc.add(&cx.mul(cy).mul(&Frac::qpow(expo)).mul(&w));
            }
        }
        acc
    }

    /// Pairing with lattice membership enforced on every K-index.
    pub fn pair_in_lattices(
        &self,
        x: &BorelElement,
        lat_plus: &Lattice,
        y: &BorelElement,
        lat_minus: &Lattice,
    ) -> Result<Frac, BorelError> {
        for (_, k) in x.terms.keys() {
            if !lat_plus.contains(&Weight(k.clone())) {
                return Err(BorelError::LatticeViolation);
            }
        }
        for (_, k) in y.terms.keys() {
            if !lat_minus.contains(&Weight(k.clone())) {
                return Err(BorelError::LatticeViolation);
            }
        }
        Ok(self.pair(x, y))
    }
}

/// Gram data of one weight component: word bases on both sides, the pairing
/// matrix, and the row profile that selects a basis modulo the radical.
/// Serializes as a JSON debug dump (word lists plus the matrix).
#[derive(Clone, Debug, serde::Serialize)]
pub struct GramData {
    pub counts: Vec<u32>,
    pub e_words: Vec<Word>,
    pub f_words: Vec<Word>,
    pub matrix: Vec<Vec<Frac>>,
    /// Indices into `e_words` forming a maximal set independent mod radical.
    pub normal_rows: Vec<usize>,
    pub rank: usize,
}

pub fn gram(ctx: &PairingCtx, counts: &[u32], cap: usize) -> Result<GramData, BorelError> {
    let h = height(counts);
    if h > cap {
        return Err(BorelError::HeightCapExceeded { got: h, cap });
    }
    let e_words = words_for_counts(counts);
    let f_words = e_words.clone();
    let matrix: Vec<Vec<Frac>> = e_words
        .iter()
        .map(|e| f_words.iter().map(|f| ctx.pair_words(e, f)).collect())
        .collect();
    let normal_rows = linalg::fr_row_profile(&matrix);
    let rank = normal_rows.len();
    Ok(GramData {
        counts: counts.to_vec(),
        e_words,
        f_words,
        matrix,
        normal_rows,
        rank,
    })
}

/// The multiparameter quantum Serre element for a pair of distinct simple
/// roots: an alternating sum of `gen_a^(m-k) gen_b gen_a^k` weighted by
/// quantum binomials in `q_a` and powers of the bicharacter.
pub fn serre_element(cf: &CompatibleForm, a: usize, b: usize, side: Side) -> BorelElement {
    assert_ne!(a, b);
    let rank = cf.rd.rank;
    let m = 1 - cf.rd.cartan[a][b];
    let d = cf.rd.d_alpha(a);
    let alpha = Weight::simple_root(rank, a);
    let beta = Weight::simple_root(rank, b);
    let u_ab = cf.u_val(&alpha, &beta);
    let mut out = BorelElement::zero(side, rank);
    for k in 0..=m {
        let binom = qbinom(m, k, &d).expect("0 <= k <= m");
        // p(a,b)^{-2k} on the E side, p(a,b)^{+2k} on the F side
        let expo = match side {
            Side::Plus => -&u_ab * int(k),
            Side::Minus => u_ab.clone() * int(k),
        };
        let sign = if k % 2 == 0 { 1 } else { -1 };
        let coeff = Frac::from_scalar(binom.mul_q(&int(sign))).mul(&Frac::qpow(expo));
        let mut word: Word = Vec::new();
        for _ in 0..(m - k) {
            word.push(a);
        }
        word.push(b);
        for _ in 0..k {
            word.push(a);
        }
        out.add_term(word, vec![Q::zero(); rank], coeff);
    }
    out
}

/// A linear functional on one Borel half with a single toral character: the
/// value on `(word w) K_kappa` is `word_values[w] * q^(l(kappa))` where `l`
/// is the stored linear form. This is the shape of every restriction of a
/// matrix coefficient and of every theta image.
#[derive(Clone, Debug)]
pub struct BorelFunctional {
    /// Which Borel half the functional eats.
    pub domain_side: Side,
    /// Simple roots generating the domain subalgebra.
    pub domain_roots: Vec<usize>,
    pub rank: usize,
    /// `l(alpha_m)` per simple root (zero off the domain span).
    pub char_exponent: Vec<Q>,
    /// Values on words over `domain_roots`; absent words are zero.
    pub word_values: BTreeMap<Word, Frac>,
    /// Heights covered by the tabulation.
    pub height_cap: usize,
}

impl BorelFunctional {
    pub fn is_zero(&self) -> bool {
        self.word_values.is_empty()
    }

    fn char_of(&self, k: &[Q]) -> Q {
        k.iter().zip(&self.char_exponent).map(|(a, b)| a * b).sum()
    }

    /// Evaluate on an element of the domain Borel.
    pub fn evaluate(&self, elem: &BorelElement) -> Result<Frac, BorelError> {
        assert_eq!(elem.side, self.domain_side);
        let mut acc = Frac::zero();
        for ((w, k), c) in &elem.terms {
            if w.iter().any(|l| !self.domain_roots.contains(l)) {
                return Err(BorelError::UnsupportedLetters);
            }
            if w.len() > self.height_cap {
                return Err(BorelError::HeightCapExceeded {
                    got: w.len(),
                    cap: self.height_cap,
                });
            }
            for (i, x) in k.iter().enumerate() {
                if !x.is_zero() && !self.domain_roots.contains(&i) {
                    return Err(BorelError::UnsupportedLetters);
                }
            }
            let Some(v) = self.word_values.get(w) else {
                continue;
            };
            acc = acc.add(&c.mul(v).mul(&Frac::qpow(self.char_of(k))));
        }
        Ok(acc)
    }
}

/// Dualize a Borel element into a functional on the opposite half, tabulated
/// on all words over `domain_roots` up to `cap`.
pub fn theta_apply(
    ctx: &PairingCtx,
    x: &BorelElement,
    domain_roots: &[usize],
    cap: usize,
) -> Result<BorelFunctional, BorelError> {
    let rank = ctx.rank();
    if x.is_zero() {
        return Ok(BorelFunctional {
            domain_side: x.side.opposite(),
            domain_roots: domain_roots.to_vec(),
            rank,
            char_exponent: vec![Q::zero(); rank],
            word_values: BTreeMap::new(),
            height_cap: cap,
        });
    }
    let kappa = x.uniform_k_index()?;
    let alpha = |m: usize| Weight::simple_root(rank, m);
    let mut char_exponent = vec![Q::zero(); rank];
    for &m in domain_roots {
        char_exponent[m] = match x.side {
            // functional on minus elements (w, mu): q^(u_-(kappa, mu))
            Side::Plus => ctx.cf.u_minus(&kappa, &alpha(m)),
            // functional on plus elements (w, lambda): q^(u_-(lambda, kappa))
            Side::Minus => ctx.cf.u_minus(&alpha(m), &kappa),
        };
    }
    let mut word_values = BTreeMap::new();
    for w in all_words_up_to(domain_roots, cap) {
        let mut acc = Frac::zero();
        for ((wx, _), cx) in &x.terms {
            let p = match x.side {
                Side::Plus => ctx.pair_words(wx, &w),
                Side::Minus => ctx.pair_words(&w, wx),
            };
            acc = acc.add(&cx.mul(&p));
        }
        if !acc.is_zero() {
            word_values.insert(w, acc);
        }
    }
    Ok(BorelFunctional {
        domain_side: x.side.opposite(),
        domain_roots: domain_roots.to_vec(),
        rank,
        char_exponent,
        word_values,
        height_cap: cap,
    })
}

pub fn all_words_up_to(roots: &[usize], cap: usize) -> Vec<Word> {
    let mut out = vec![Vec::new()];
    let mut frontier: Vec<Word> = vec![Vec::new()];
    for _ in 0..cap {
        let mut next = Vec::new();
        for w in &frontier {
            for &r in roots {
                let mut w2 = w.clone();
                w2.push(r);
                next.push(w2);
            }
        }
        out.extend(next.iter().cloned());
        frontier = next;
    }
    out
}

/// Invert the dualization: the unique element (mod radical) of the half
/// opposite to `f.domain_side` whose theta image is `f`. The toral index is
/// recovered from the character by a nondegenerate linear solve; `lattice`,
/// when given, is the membership check for it.
pub fn theta_invert(
    ctx: &PairingCtx,
    f: &BorelFunctional,
    lattice: Option<&Lattice>,
) -> Result<BorelElement, BorelError> {
    let rank = ctx.rank();
    let target_side = f.domain_side.opposite();
    if f.is_zero() {
        return Ok(BorelElement::zero(target_side, rank));
    }
    let roots = &f.domain_roots;
    let alpha = |m: usize| Weight::simple_root(rank, m);
    // toral solve over the domain span
    let mat: Vec<Vec<Q>> = roots
        .iter()
        .map(|&m| {
            roots
                .iter()
                .map(|&k| match target_side {
                    Side::Plus => ctx.cf.u_minus(&alpha(k), &alpha(m)),
                    Side::Minus => ctx.cf.u_minus(&alpha(m), &alpha(k)),
                })
                .collect()
        })
        .collect();
    let rhs: Vec<Q> = roots.iter().map(|&m| f.char_exponent[m].clone()).collect();
    let kappa_coords = linalg::solve(&mat, &rhs).ok_or(BorelError::AmbiguousToral)?;
    if linalg::mat_vec(&mat, &kappa_coords) != rhs {
        return Err(BorelError::AmbiguousToral);
    }
    let mut kappa = Weight::zero(rank);
    for (&r, c) in roots.iter().zip(kappa_coords) {
        kappa.0[r] = c;
    }
    if let Some(lat) = lattice {
        if !lat.contains(&kappa) {
            return Err(BorelError::AmbiguousToral);
        }
    }
    // group values by weight and solve each Gram system
    let mut by_counts: BTreeMap<Vec<u32>, ()> = BTreeMap::new();
    for w in f.word_values.keys() {
        by_counts.insert(counts_of_word(rank, w), ());
    }
    let mut out = BorelElement::zero(target_side, rank);
    for counts in by_counts.keys() {
        let words = words_for_counts(counts);
        let vals: Vec<Frac> = words
            .iter()
            .map(|w| f.word_values.get(w).cloned().unwrap_or_else(Frac::zero))
            .collect();
        // unknowns over target-side words; equations indexed by domain words
        let a: Vec<Vec<Frac>> = words
            .iter()
            .map(|domain_w| {
                words
                    .iter()
                    .map(|target_w| match target_side {
                        Side::Plus => ctx.pair_words(target_w, domain_w),
                        Side::Minus => ctx.pair_words(domain_w, target_w),
                    })
                    .collect()
            })
            .collect();
        let x = linalg::fr_solve(&a, &vals).ok_or(BorelError::NotInImage)?;
        for (w, c) in words.iter().zip(x) {
            if !c.is_zero() {
                out.add_term(w.clone(), kappa.0.clone(), c);
            }
        }
    }
    Ok(out)
}

/// Relabeling isomorphism along the triple's bijection: letters through
/// `tau` (or back), K-indices through its linear extension. Coefficients are
/// untouched; compatibility condition 1 is what makes this an isometry of
/// the pairing data.
pub fn psi(t: &BDTriple, x: &BorelElement, forward: bool) -> Result<BorelElement, BorelError> {
    let mut out = BorelElement::zero(x.side, x.rank);
    for ((w, k), c) in &x.terms {
        let mut w2 = Vec::with_capacity(w.len());
        for &l in w {
            let l2 = if forward {
                t.tau_of(l)
            } else {
                t.tau_inv_of(l)
            }
            .ok_or(BorelError::UnsupportedLetters)?;
            w2.push(l2);
        }
        let kw = Weight(k.clone());
        let k2 = if forward {
            t.tau_linear(&kw)
        } else {
            t.tau_inv_linear(&kw)
        }
        .ok_or(BorelError::UnsupportedLetters)?;
        out.add_term(w2, k2.0, c.clone());
    }
    Ok(out)
}

/// Re-derive the generator pairing constants against the Drinfeld-double
/// cross relation in the (1,1) component: the unique sign `s` such that
/// `c_a = s/(q_a - q_a^-1)` makes
///
/// ```text
///   E_a F_b - (cross expansion of F_b E_a)
///     = delta_ab (K_[a] (x) 1 - 1 (x) K_{-a}) / (q_a - q_a^-1)
/// ```
///
/// hold exactly in the double's normal form, for every pair of simple roots.
pub fn calibrate_pairing(cf: &CompatibleForm) -> Result<Vec<Frac>, BorelError> {
    for sign in [-1i64, 1] {
        let c: Vec<Frac> = (0..cf.rd.rank)
            .map(|a| {
                let d = cf.rd.d_alpha(a);
                let den = &Scalar::qpow(d.clone()) - &Scalar::qpow(-d);
                Frac::new(Scalar::from_int(sign), den)
            })
            .collect();
        let ctx = PairingCtx::with_constants(cf.clone(), c.clone());
        if cross_relation_holds(&ctx) {
            return Ok(c);
        }
    }
    Err(BorelError::CalibrationFailed)
}

type DoubleElement = BTreeMap<(TermKey, TermKey), Frac>;

fn double_add(d: &mut DoubleElement, key: (TermKey, TermKey), c: Frac) {
    if c.is_zero() {
        return;
    }
    use std::collections::btree_map::Entry;
    match d.entry(key) {
        Entry::Vacant(v) => {
            v.insert(c);
        }
        Entry::Occupied(mut o) => {
            let s = o.get().add(&c);
            if s.is_zero() {
                o.remove();
            } else {
                *o.get_mut() = s;
            }
        }
    }
}

fn elem_of_term(side: Side, rank: usize, t: &TermKey) -> BorelElement {
    let mut e = BorelElement::zero(side, rank);
    e.add_term(t.0.clone(), t.1.clone(), Frac::one());
    e
}

fn cross_relation_holds(ctx: &PairingCtx) -> bool {
    let cf = &ctx.cf;
    let rank = cf.rd.rank;
    for a in 0..rank {
        for b in 0..rank {
            let x = BorelElement::generator(Side::Plus, rank, a);
            let y = BorelElement::generator(Side::Minus, rank, b);
            let dx = x.coproduct(cf);
            let mut x3: Vec<(TermKey, TermKey, TermKey, Frac)> = Vec::new();
            for (l, r, c) in &dx {
                for (l2, r2, c2) in elem_of_term(Side::Plus, rank, l).coproduct(cf) {
                    x3.push((l2, r2, r.clone(), c.mul(&c2)));
                }
            }
            let dy = y.coproduct(cf);
            let mut y3: Vec<(TermKey, TermKey, TermKey, Frac)> = Vec::new();
            for (l, r, c) in &dy {
                for (l2, r2, c2) in elem_of_term(Side::Minus, rank, l).coproduct(cf) {
                    y3.push((l2, r2, r.clone(), c.mul(&c2)));
                }
            }
            // cross expansion of F_b * E_a:
            //   sum <x1 | S(y1)> <x3 | y3> (x2 (x) y2)
            let mut cross: DoubleElement = BTreeMap::new();
            for (x1, x2, x3t, cx) in &x3 {
                for (y1, y2, y3t, cy) in &y3 {
                    let p1 = ctx.pair(
                        &elem_of_term(Side::Plus, rank, x1),
                        &elem_of_term(Side::Minus, rank, y1).antipode(cf),
                    );
                    if p1.is_zero() {
                        continue;
                    }
                    let p3 = ctx.pair(
                        &elem_of_term(Side::Plus, rank, x3t),
                        &elem_of_term(Side::Minus, rank, y3t),
                    );
                    if p3.is_zero() {
                        continue;
                    }
                    double_add(
                        &mut cross,
                        (x2.clone(), y2.clone()),
                        cx.mul(cy).mul(&p1).mul(&p3),
                    );
                }
            }
            // E_a F_b - cross == delta_ab (K_[a](x)1 - 1(x)K_{-a})/(q_a - q_a^{-1})
            let mut lhs: DoubleElement = BTreeMap::new();
            let zero_k = vec![Q::zero(); rank];
            double_add(
                &mut lhs,
                ((vec![a], zero_k.clone()), (vec![b], zero_k.clone())),
                Frac::one(),
            );
            for (key, c) in cross {
                double_add(&mut lhs, key, c.neg());
            }
            let mut rhs: DoubleElement = BTreeMap::new();
            if a == b {
                let d = cf.rd.d_alpha(a);
                let den = &Scalar::qpow(d.clone()) - &Scalar::qpow(-d);
                let coef = Frac::new(Scalar::one(), den);
                let alpha = Weight::simple_root(rank, a);
                double_add(
                    &mut rhs,
                    ((Vec::new(), alpha.0.clone()), (Vec::new(), zero_k.clone())),
                    coef.clone(),
                );
                double_add(
                    &mut rhs,
                    ((Vec::new(), zero_k.clone()), (Vec::new(), alpha.neg().0)),
                    coef.neg(),
                );
            }
            if lhs != rhs {
                return false;
            }
        }
    }
    true
}
