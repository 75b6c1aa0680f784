//! Acceptance suite: one test per criterion, each printing a PASS line when
//! it completes. Everything is exact symbolic equality; there are no
//! tolerances anywhere.
//!
//! Run with `cargo test --test acceptance -- --nocapture` to see the lines.

use std::collections::BTreeMap;

use num_traits::{Signed, Zero};
use qtwist_core::bdstruct::{
    cremmer_gervais_a2, enumerate_disjoint, solve_compatible, BDTriple, SignConvention,
};
use qtwist_core::borel::{
    self, calibrate_pairing, gram, serre_element, words_for_counts, BorelElement, PairingCtx, Side,
};
use qtwist_core::qfa::{
    braid_relation_holds, braiding, minimal_poly_degree_is_two, nonstandard_support, qybe_holds,
    rtt_check, vector_rep,
};
use qtwist_core::rootdata::{Lattice, RootDatum, Weight};
use qtwist_core::scalar::{int, rat, Frac, Scalar, Q};
use qtwist_core::twist::TwistEngine;
use qtwist_core::{CompatibleForm, TripleSide};

fn cg_triple() -> BDTriple {
    BDTriple::new(vec![0], vec![1], BTreeMap::from([(0, 1)]))
}

fn sl4_fixture() -> CompatibleForm {
    let rd = RootDatum::build('A', 3).unwrap();
    let t = BDTriple::new(vec![0], vec![2], BTreeMap::from([(0, 2)]));
    CompatibleForm::zero_form(rd, t)
}

fn pass(n: usize, name: &str) {
    println!("ACCEPTANCE {n:2} {name}: PASS");
}

/// Criterion 1: the A2 fixture has a 0-dimensional compatible space with
/// |u(a1, a2)| = 1, and the minus sign convention reports -1.
#[test]
fn criterion_01_cg_compatibility() {
    let rd = RootDatum::build('A', 2).unwrap();
    let t = cg_triple();
    let sol = solve_compatible(&rd, &t, SignConvention::Plus).unwrap();
    assert_eq!(sol.dim, 0);
    assert_eq!(sol.basis.len(), 0);
    assert_eq!(sol.particular[0][1].clone().abs(), int(1));
    let sol_minus = solve_compatible(&rd, &t, SignConvention::Minus).unwrap();
    assert_eq!(sol_minus.dim, 0);
    assert_eq!(sol_minus.particular[0][1], int(-1));
    pass(
        1,
        "cg compatibility (dim 0, |u| = 1, minus convention gives -1)",
    );
}

/// Criterion 2: with the weight lattice as Omega, the first image lattice of
/// the A2 fixture is exactly (1/3) Z a1.
#[test]
fn criterion_02_lattice_value() {
    let cf = cremmer_gervais_a2(SignConvention::Plus);
    let lam = cf.rd.weight_lattice();
    let (l1, _) = cf.sublattice_l(TripleSide::One, &lam).unwrap();
    let expected = vec![Weight::simple_root(2, 0).scale(&rat(1, 3))];
    assert_eq!(l1.basis(), expected);
    // identical under the minus convention
    let cfm = cremmer_gervais_a2(SignConvention::Minus);
    let (l1m, _) = cfm.sublattice_l(TripleSide::One, &lam).unwrap();
    assert_eq!(l1m.basis(), expected);
    pass(
        2,
        "lattice value L1 = (1/3) Z a1 with Omega = weight lattice",
    );
}

/// Criterion 3: the 2-cocycle identity holds exactly on all 729 degree-1
/// generator triples of the A2 fixture, and on all 4096 triples of the
/// completely disjoint SL(4) fixture with u = 0.
#[test]
fn criterion_03_cocycle_identity() {
    let e = TwistEngine::new(cremmer_gervais_a2(SignConvention::Plus), 6).unwrap();
    let c = e.cocycle_check(2).unwrap();
    assert!(c.pass, "{:?}", c.witness);
    let e4 = TwistEngine::new(sl4_fixture(), 6).unwrap();
    let c4 = e4.cocycle_check(2).unwrap();
    assert!(c4.pass, "{:?}", c4.witness);
    pass(
        3,
        "2-cocycle identity on all degree-1 triples (A2 fixture + SL(4) fixture)",
    );
}

/// Criterion 4: Serre-radical soundness on A2 and A3 with randomized
/// compatible forms; reduced Gram matrices match the independent dimension
/// count up to height 4.
#[test]
fn criterion_04_serre_radical() {
    // independent oracle: dim U+_nu = number of multisets of positive roots
    // summing to nu (type A positive roots are the consecutive segments)
    fn positive_roots(rank: usize) -> Vec<Vec<u32>> {
        let mut out = Vec::new();
        for a in 0..rank {
            for b in a..rank {
                let mut v = vec![0u32; rank];
                for item in v.iter_mut().take(b + 1).skip(a) {
                    *item = 1;
                }
                out.push(v);
            }
        }
        out
    }
    fn kostant(roots: &[Vec<u32>], target: &[u32], from: usize) -> usize {
        if target.iter().all(|&c| c == 0) {
            return 1;
        }
        let mut total = 0;
        for (i, r) in roots.iter().enumerate().skip(from) {
            if r.iter().zip(target).all(|(a, b)| a <= b) {
                let rest: Vec<u32> = target.iter().zip(r).map(|(a, b)| a - b).collect();
                total += kostant(roots, &rest, i);
            }
        }
        total
    }

    // fixtures: A2 with randomized antisymmetric u (any u is compatible with
    // the empty triple), A3 with random members of the completely disjoint
    // triple's solution space
    let mut fixtures: Vec<CompatibleForm> = Vec::new();
    for u12 in [int(0), int(1), rat(-3, 2)] {
        let rd = RootDatum::build('A', 2).unwrap();
        let u = vec![vec![Q::zero(), u12.clone()], vec![-u12, Q::zero()]];
        fixtures.push(CompatibleForm::new(rd, BDTriple::empty(), u).unwrap());
    }
    {
        let rd = RootDatum::build('A', 3).unwrap();
        let t = BDTriple::new(vec![0], vec![2], BTreeMap::from([(0, 2)]));
        let sol = solve_compatible(&rd, &t, SignConvention::Plus).unwrap();
        for params in [vec![int(0); sol.dim], vec![rat(1, 2), int(-1)]] {
            let u = sol.member(&params);
            fixtures.push(CompatibleForm::new(rd.clone(), t.clone(), u).unwrap());
        }
    }

    for cf in fixtures {
        let rank = cf.rd.rank;
        let ctx = PairingCtx::standard(cf.clone()).unwrap();
        let roots = positive_roots(rank);
        // all weights of height 2..=4
        let mut stack = vec![vec![0u32; rank]];
        for _ in 0..4 {
            let mut next = Vec::new();
            for c in &stack {
                for l in 0..rank {
                    let mut c2 = c.clone();
                    c2[l] += 1;
                    if !next.contains(&c2) {
                        next.push(c2);
                    }
                }
            }
            for c in &next {
                if borel::height(c) < 2 {
                    continue;
                }
                let g = gram(&ctx, c, 6).unwrap();
                let expected = kostant(&roots, c, 0);
                assert_eq!(g.rank, expected, "weight {c:?}");
            }
            stack = next;
        }
        // every Serre element pairs to zero against all opposite words
        for a in 0..rank {
            for b in 0..rank {
                if a == b {
                    continue;
                }
                let m = 1 - cf.rd.cartan[a][b];
                let mut counts = vec![0u32; rank];
                counts[a] = m as u32;
                counts[b] = 1;
                let se = serre_element(&cf, a, b, Side::Plus);
                let sf = serre_element(&cf, a, b, Side::Minus);
                for w in words_for_counts(&counts) {
                    let mut opp_minus = BorelElement::zero(Side::Minus, rank);
                    opp_minus.add_term(w.clone(), vec![Q::zero(); rank], Frac::one());
                    assert!(ctx.pair(&se, &opp_minus).is_zero());
                    let mut opp_plus = BorelElement::zero(Side::Plus, rank);
                    opp_plus.add_term(w.clone(), vec![Q::zero(); rank], Frac::one());
                    assert!(ctx.pair(&opp_plus, &sf).is_zero());
                }
            }
        }
    }
    pass(
        4,
        "serre radical + reduced gram ranks match the partition oracle (heights <= 4)",
    );
}

/// Criterion 5: the cross-relation calibration succeeds and pins the
/// generator constant for every simple root of the A1-A3 fixtures.
#[test]
fn criterion_05_pairing_calibration() {
    let mut fixtures: Vec<CompatibleForm> = vec![
        CompatibleForm::zero_form(RootDatum::build('A', 1).unwrap(), BDTriple::empty()),
        cremmer_gervais_a2(SignConvention::Plus),
        sl4_fixture(),
    ];
    {
        // A3 with a nonzero compatible form
        let rd = RootDatum::build('A', 3).unwrap();
        let t = BDTriple::new(vec![0], vec![2], BTreeMap::from([(0, 2)]));
        let sol = solve_compatible(&rd, &t, SignConvention::Plus).unwrap();
        let u = sol.member(&vec![int(1); sol.dim]);
        fixtures.push(CompatibleForm::new(rd, t, u).unwrap());
    }
    for cf in fixtures {
        let c = calibrate_pairing(&cf).expect("calibration must succeed");
        for (a, ca) in c.iter().enumerate() {
            let d = cf.rd.d_alpha(a);
            let den = &Scalar::qpow(d.clone()) - &Scalar::qpow(-d);
            assert_eq!(*ca, Frac::new(Scalar::from_int(-1), den));
        }
    }
    pass(
        5,
        "pairing calibration reproduces the commutator on A1-A3 fixtures",
    );
}

/// Criterion 6: the untwisted braiding for SL(2) and SL(3) passes the
/// quantum Yang-Baxter equation, the braid relation, equivariance, and has
/// a degree-2 minimal polynomial.
#[test]
fn criterion_06_braiding_properties() {
    let fixtures = vec![
        CompatibleForm::zero_form(RootDatum::build('A', 1).unwrap(), BDTriple::empty()),
        CompatibleForm::zero_form(RootDatum::build('A', 2).unwrap(), BDTriple::empty()),
        cremmer_gervais_a2(SignConvention::Plus),
    ];
    for cf in fixtures {
        let rep = vector_rep(&cf).unwrap();
        let ctx = PairingCtx::standard(cf).unwrap();
        let b = braiding(&rep, &ctx, 6).unwrap();
        assert!(qybe_holds(&b.r));
        assert!(braid_relation_holds(&b.r_hat, rep.n));
        assert!(rtt_check(&rep, &b.r).pass);
        assert!(minimal_poly_degree_is_two(&b.r_hat));
    }
    pass(
        6,
        "untwisted braiding: qybe + braid + equivariance + hecke for SL(2), SL(3)",
    );
}

/// Criterion 7: the twisted R-matrix of the A2 fixture passes the quantum
/// Yang-Baxter equation, is Hecke, and has support outside the standard
/// pattern; the empty-triple control leaves R unchanged.
#[test]
fn criterion_07_twist_nontriviality() {
    let cf = cremmer_gervais_a2(SignConvention::Plus);
    let rep = vector_rep(&cf).unwrap();
    let engine = TwistEngine::new(cf.clone(), 6).unwrap();
    let ctx = PairingCtx::standard(cf).unwrap();
    let b = braiding(&rep, &ctx, 6).unwrap();
    let rp = engine.twisted_r(&b.r).unwrap();
    assert!(qybe_holds(&rp));
    assert!(minimal_poly_degree_is_two(&rp.r_hat()));
    assert!(braid_relation_holds(&rp.r_hat(), 3));
    let extra = nonstandard_support(&rp);
    assert!(!extra.is_empty(), "support stayed standard");
    assert!(nonstandard_support(&b.r).is_empty());

    // control: empty triple leaves R fixed
    let rd = RootDatum::build('A', 2).unwrap();
    let cf0 = CompatibleForm::zero_form(rd, BDTriple::empty());
    let rep0 = vector_rep(&cf0).unwrap();
    let engine0 = TwistEngine::new(cf0.clone(), 6).unwrap();
    let ctx0 = PairingCtx::standard(cf0).unwrap();
    let b0 = braiding(&rep0, &ctx0, 6).unwrap();
    let rp0 = engine0.twisted_r(&b0.r).unwrap();
    assert_eq!(rp0, b0.r);
    pass(
        7,
        "twisted R: qybe + hecke + nonstandard support; empty triple is a fixed point",
    );
}

/// Criterion 8: both evaluation routes for gamma agree on all 81 degree-1
/// pairs of the A2 fixture.
#[test]
fn criterion_08_two_path_gamma() {
    let e = TwistEngine::new(cremmer_gervais_a2(SignConvention::Plus), 6).unwrap();
    let c = e.two_path_check().unwrap();
    assert!(c.pass, "{:?}", c.witness);
    pass(
        8,
        "direct and collapsed gamma evaluations agree on all 81 pairs",
    );
}

/// Criterion 9: the convolution inverse identity holds on all degree-1
/// pairs for both fixtures.
#[test]
fn criterion_09_convolution_inverse() {
    let e = TwistEngine::new(cremmer_gervais_a2(SignConvention::Plus), 6).unwrap();
    assert!(e.convolution_check().pass);
    let e4 = TwistEngine::new(sl4_fixture(), 6).unwrap();
    assert!(e4.convolution_check().pass);
    pass(
        9,
        "convolution inverse identity on all degree-1 pairs, both fixtures",
    );
}

/// Criterion 10: the enumeration matches an independent brute force and the
/// recorded golden counts for A1-A4 and D4.
#[test]
fn criterion_10_enumeration_oracle() {
    #[derive(serde::Deserialize)]
    struct Golden {
        counts: BTreeMap<String, usize>,
    }
    let golden: Golden = serde_json::from_str(include_str!("golden/enumeration_counts.json"))
        .expect("golden file parses");
    // independent brute force over all ordered pairs of disjoint subsets and
    // all bijections, filtered by the isometry condition
    fn brute(rd: &RootDatum) -> usize {
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
                count += perms(rd, &p1, &mut p2.clone(), 0);
            }
        }
        count
    }
    fn perms(rd: &RootDatum, p1: &[usize], perm: &mut Vec<usize>, k: usize) -> usize {
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
            total += perms(rd, p1, perm, k + 1);
            perm.swap(k, i);
        }
        total
    }
    for (label, (letter, rank)) in [
        ("A1", ('A', 1)),
        ("A2", ('A', 2)),
        ("A3", ('A', 3)),
        ("A4", ('A', 4)),
        ("D4", ('D', 4)),
    ] {
        let rd = RootDatum::build(letter, rank).unwrap();
        let listed = enumerate_disjoint(&rd);
        assert_eq!(listed.len(), brute(&rd), "{label} vs brute force");
        assert_eq!(listed.len(), golden.counts[label], "{label} vs golden");
    }
    assert_eq!(golden.counts["A2"], 2);
    // the SL(5)-style triple is in the A4 output
    let a4 = RootDatum::build('A', 4).unwrap();
    let ex2 = BDTriple::new(vec![0, 1], vec![2, 3], BTreeMap::from([(0, 2), (1, 3)]));
    assert!(enumerate_disjoint(&a4).contains(&ex2));
    pass(
        10,
        "enumeration matches brute force and golden counts (A1-A4, D4)",
    );
}

/// Criterion 11: the degree-1 surjectivity shadow passes for the
/// completely disjoint SL(4) fixture.
#[test]
fn criterion_11_surjectivity_shadow() {
    let e = TwistEngine::new(sl4_fixture(), 6).unwrap();
    let c = e.nondegeneracy_witness().unwrap();
    assert!(c.pass, "{:?}", c.witness);
    pass(11, "surjectivity shadow rank check for the SL(4) fixture");
}

/// The A2 fixture lattice check also holds with the root lattice, for the
/// record alongside criterion 2.
#[test]
fn criterion_02b_lattice_with_root_omega() {
    let cf = cremmer_gervais_a2(SignConvention::Plus);
    let (l1, _) = cf
        .sublattice_l(TripleSide::One, &cf.rd.root_lattice())
        .unwrap();
    assert_eq!(
        l1,
        Lattice::from_generators(2, &[Weight::simple_root(2, 0)])
    );
    pass(2, "(supplement) L1 = Z a1 with Omega = root lattice");
}
