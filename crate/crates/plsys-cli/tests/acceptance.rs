//! Acceptance suite: one test per criterion, each printing a pass line.
//! Exact-arithmetic reproduction of the worked examples plus the property
//! suites, with the stated runtime budgets asserted.

mod common;

use std::collections::BTreeMap;
use std::process::Command;
use std::time::{Duration, Instant};

use plsys::bisheaf::{
    compare_subquotient, image_local_system, isofy, monodromy_report,
    pls, Bisheaf, SubquotientContext, SubquotientVerdict,
};
use plsys::cellsheaf::{epify, monofy};
use plsys::dilation::{span_verdicts, stability_span, verify_shrinking_invariance, StabilityWitness};
use plsys::exactlin::Matrix;
use plsys::field::{Field, Rational};
use plsys::fixtures::{
    annulus_open, double_cover_annulus, ex1_bisheaf, ex1_desk_map, ex2_bisheaf,
    ex3_f_bisheaf, ex3_h_bisheaf, identity_open, random_conjugated_bisheaf, random_etale_base,
    random_f2_cosheaf, random_f2_sheaf, random_rank_one_bisheaf, random_small_complex,
};
use plsys::leray::leray_bisheaf;
use plsys::simplicial::{propagate_orientation, Simplex, SimplicialComplex, SimplicialPair};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

type Q = Rational;

fn assert_rank_one_trivial(ls: &plsys::bisheaf::LocalSystem<Q>) {
    assert!(ls.stalks.values().all(|&d| d == 1), "stalks must be rank one");
    let report = monodromy_report(ls).unwrap();
    for c in &report.components {
        for l in &c.loops {
            assert_eq!(l.matrix, Matrix::identity(1), "monodromy must be trivial");
        }
    }
}

#[test]
fn criterion_1_example_1_reproduction() {
    let start = Instant::now();
    let b = ex1_bisheaf::<Q>();
    b.validate().unwrap();
    let base = b.base().clone();

    // any origin-covering étale open gives zero
    let identity = identity_open(&base);
    assert!(pls(&b, &identity).unwrap().is_zero());

    // annular étale opens give the constant rank-one system
    let annulus = annulus_open(&base);
    assert_rank_one_trivial(&pls(&b, &annulus).unwrap());
    let cover = double_cover_annulus(&base);
    assert_rank_one_trivial(&pls(&b, &cover).unwrap());

    let elapsed = start.elapsed();
    assert!(elapsed < Duration::from_secs(1), "took {elapsed:?}");
    println!("criterion 1 (Example 1 reproduction, {elapsed:?}): PASS");
}

#[test]
fn criterion_2_example_2_reproduction() {
    let start = Instant::now();
    let b = ex2_bisheaf::<Q>();
    b.validate().unwrap();

    // epification is full, monofication is zero
    assert!(epify(&b.sheaf).is_full());
    assert_eq!(monofy(&b.cosheaf).materialize().total_dim(), 0);

    let identity = identity_open(b.base());
    assert!(pls(&b, &identity).unwrap().is_zero());
    let annulus = annulus_open(b.base());
    assert_rank_one_trivial(&pls(&b, &annulus).unwrap());

    let elapsed = start.elapsed();
    assert!(elapsed < Duration::from_secs(1), "took {elapsed:?}");
    println!("criterion 2 (Example 2 reproduction, {elapsed:?}): PASS");
}

#[test]
fn criterion_3_example_3_reproduction() {
    let start = Instant::now();
    let f = ex3_f_bisheaf::<Q>();
    let h = ex3_h_bisheaf::<Q>();
    f.validate().unwrap();
    h.validate().unwrap();
    let identity = identity_open(f.base());

    assert_rank_one_trivial(&pls(&f, &identity).unwrap());
    assert!(pls(&h, &identity).unwrap().is_zero());

    // stalk one cannot be a subquotient of stalk zero: every candidate
    // connecting-map family is rejected
    let coarse = isofy(&f).unwrap();
    let fine = isofy(&h).unwrap();
    for zero_fwd in [true, false] {
        let sheaf_fwd: BTreeMap<Simplex, Matrix<Q>> = coarse
            .bisheaf
            .sheaf
            .dims()
            .iter()
            .map(|(s, &d)| {
                let rows = fine.bisheaf.sheaf.dim(s);
                let mut m = Matrix::zero(rows, d);
                if !zero_fwd {
                    for i in 0..rows.min(d) {
                        m.set(i, i, Q::from_int(1));
                    }
                }
                (s.clone(), m)
            })
            .collect();
        let cosheaf_bwd: BTreeMap<Simplex, Matrix<Q>> = coarse
            .bisheaf
            .cosheaf
            .dims()
            .iter()
            .map(|(s, &d)| {
                let cols = fine.bisheaf.cosheaf.dim(s);
                let mut m = Matrix::zero(d, cols);
                for i in 0..d.min(cols) {
                    m.set(i, i, Q::from_int(1));
                }
                (s.clone(), m)
            })
            .collect();
        let ctx = SubquotientContext {
            coarse: coarse.clone(),
            fine: fine.clone(),
            sheaf_fwd,
            cosheaf_bwd,
            stack_conditions: false,
        };
        let report = compare_subquotient(&ctx).unwrap();
        assert!(
            matches!(report.verdict, SubquotientVerdict::No { .. }),
            "stalk one must not embed as a subquotient of stalk zero"
        );
    }

    let elapsed = start.elapsed();
    assert!(elapsed < Duration::from_secs(1), "took {elapsed:?}");
    println!("criterion 3 (Example 3 reproduction, {elapsed:?}): PASS");
}

#[test]
fn criterion_4_fixed_point_oracle() {
    let mut rng = StdRng::seed_from_u64(0x5eed);
    let mut sheaf_cases = 0;
    let mut cosheaf_cases = 0;
    while sheaf_cases < 120 || cosheaf_cases < 120 {
        let complex = random_small_complex(&mut rng, 6);
        let pair = SimplicialPair::whole(complex);
        if rng.gen_bool(0.5) {
            let sheaf = random_f2_sheaf(&mut rng, &pair, 3);
            sheaf.validate().unwrap();
            let fixed = epify(&sheaf);
            let oracle = common::brute_force_max_sub_episheaf(&sheaf);
            assert_eq!(fixed.components, oracle, "epify disagrees with brute force");
            sheaf_cases += 1;
        } else {
            let cosheaf = random_f2_cosheaf(&mut rng, &pair, 3);
            cosheaf.validate().unwrap();
            let fixed = monofy(&cosheaf);
            let oracle = common::brute_force_min_kernels(&cosheaf);
            assert_eq!(fixed.kernels, oracle, "monofy disagrees with brute force");
            cosheaf_cases += 1;
        }
    }
    let total = sheaf_cases + cosheaf_cases;
    assert!(total >= 200);
    println!(
        "criterion 4 (fixed points equal the brute-force optimum in {total} random F2 cases): PASS"
    );
}

#[test]
fn criterion_5_image_local_systems() {
    let mut rng = StdRng::seed_from_u64(0xbeef);
    let mut cases = 0;
    while cases < 500 {
        let base = random_etale_base(&mut rng);
        let dim = rng.gen_range(1..=3);
        let b: Bisheaf<Q> = if rng.gen_bool(0.5) {
            random_conjugated_bisheaf(&mut rng, &base, dim)
        } else {
            random_rank_one_bisheaf(&mut rng, &base)
        };
        b.validate().unwrap();
        let iso = isofy(&b).unwrap();
        assert!(iso.bisheaf.is_isobisheaf());
        // all image transports invertible, all two-cell monodromies identity
        // (both checked inside, with errors on failure)
        let ls = image_local_system(&iso).unwrap();
        ls.validate().unwrap();
        cases += 1;
    }
    println!("criterion 5 (Prop 5.6 on {cases} randomized isobisheaves): PASS");
}

#[test]
fn criterion_6_shrinking_invariance() {
    // the three worked examples
    let b1 = ex1_bisheaf::<Q>();
    for open in [identity_open(b1.base()), annulus_open(b1.base())] {
        let report = verify_shrinking_invariance(&b1, &open).unwrap();
        assert!(report.equivalent, "Example 1 shrinking invariance fails");
    }
    let b2 = ex2_bisheaf::<Q>();
    for open in [identity_open(b2.base()), annulus_open(b2.base())] {
        let report = verify_shrinking_invariance(&b2, &open).unwrap();
        assert!(report.equivalent, "Example 2 shrinking invariance fails");
    }
    let b3f = ex3_f_bisheaf::<Q>();
    let report = verify_shrinking_invariance(&b3f, &identity_open(b3f.base())).unwrap();
    assert!(report.equivalent, "Example 3 (f) shrinking invariance fails");
    let b3h = ex3_h_bisheaf::<Q>();
    let report = verify_shrinking_invariance(&b3h, &identity_open(b3h.base())).unwrap();
    assert!(report.equivalent, "Example 3 (h) shrinking invariance fails");

    // randomized constant and rank-one bisheaves
    let mut rng = StdRng::seed_from_u64(0xd11a);
    for case in 0..50 {
        let base = random_etale_base(&mut rng);
        let b: Bisheaf<Q> = random_rank_one_bisheaf(&mut rng, &base);
        let report = verify_shrinking_invariance(&b, &identity_open(&base)).unwrap();
        assert!(report.equivalent, "randomized case {case} fails");
    }
    println!("criterion 6 (Prop 8.4 on the fixtures and 50 randomized bisheaves): PASS");
}

#[test]
fn criterion_7_leray_builder() {
    let start = Instant::now();
    // identity on the oriented octahedron boundary: all 26 verticals
    // invertible, pls constant of stalk one in degree zero
    let oct = SimplicialPair::whole(
        SimplicialComplex::build_indexed(
            6,
            &[
                vec![0, 2, 3],
                vec![0, 3, 4],
                vec![0, 4, 5],
                vec![0, 2, 5],
                vec![1, 2, 3],
                vec![1, 3, 4],
                vec![1, 4, 5],
                vec![1, 2, 5],
            ],
        )
        .unwrap(),
    );
    let o = propagate_orientation(&oct).unwrap();
    let id = plsys::simplicial::SimplicialMap::identity(oct.complex.clone());
    let b: Bisheaf<Q> = leray_bisheaf(&id, &oct, 0, &o).unwrap();
    assert_eq!(b.vertical.len(), 26);
    for (s, phi) in &b.vertical {
        assert_eq!((phi.rows(), phi.cols()), (1, 1), "at {s:?}");
        assert_eq!(phi.rank(), 1, "vertical not invertible at {s:?}");
    }
    assert_rank_one_trivial(&pls(&b, &identity_open(&oct)).unwrap());

    // the Example 1 desk model rebuilds the diagram up to isomorphism
    let (f, base) = ex1_desk_map();
    let orientation = propagate_orientation(&base).unwrap();
    let desk: Bisheaf<Q> = leray_bisheaf(&f, &base, 1, &orientation).unwrap();
    let center = Simplex::vertex(0);
    for s in base.carrier() {
        let (sheaf_expected, cosheaf_expected) = if *s == center { (0, 2) } else { (1, 1) };
        assert_eq!(desk.sheaf.dim(s), sheaf_expected, "sheaf dim at {s:?}");
        assert_eq!(desk.cosheaf.dim(s), cosheaf_expected, "cosheaf dim at {s:?}");
    }
    for (s, t) in base.carrier_covers() {
        assert_eq!(
            desk.cosheaf.extension(&s, &t).rank(),
            1,
            "extension rank at {s:?} < {t:?}"
        );
        if desk.sheaf.dim(&s) == 1 {
            assert_eq!(desk.sheaf.restriction(&s, &t).rank(), 1);
        }
    }
    assert!(pls(&desk, &identity_open(&base)).unwrap().is_zero());
    assert_rank_one_trivial(&pls(&desk, &annulus_open(&base)).unwrap());

    let elapsed = start.elapsed();
    assert!(elapsed < Duration::from_secs(60), "took {elapsed:?}");
    println!("criterion 7 (Leray builder sanity, {elapsed:?}): PASS");
}

#[test]
fn criterion_8_stability_span() {
    // with f = g the span legs compare as isomorphisms over every fixture
    // étale open, and the bisheaf-map squares validate
    let b = ex1_bisheaf::<Q>();
    let span = stability_span(&b, &b, &StabilityWitness::trivial()).unwrap();
    span.to_first.validate().unwrap();
    span.to_second.validate().unwrap();
    for open in [identity_open(b.base()), annulus_open(b.base())] {
        let (v1, v2) = span_verdicts(&span, &open).unwrap();
        assert_eq!(v1.verdict, SubquotientVerdict::Isomorphic);
        assert_eq!(v2.verdict, SubquotientVerdict::Isomorphic);
    }

    let b3 = ex3_f_bisheaf::<Q>();
    let span = stability_span(&b3, &b3, &StabilityWitness::trivial()).unwrap();
    span.to_first.validate().unwrap();
    span.to_second.validate().unwrap();
    let (v1, v2) = span_verdicts(&span, &identity_open(b3.base())).unwrap();
    assert_eq!(v1.verdict, SubquotientVerdict::Isomorphic);
    assert_eq!(v2.verdict, SubquotientVerdict::Isomorphic);

    println!("criterion 8 (stability span with f = g is an isomorphism): PASS");
}

#[test]
fn criterion_9_determinism() {
    let bin = env!("CARGO_BIN_EXE_plsys");
    let dir1 = tempfile::tempdir().unwrap();
    let dir2 = tempfile::tempdir().unwrap();

    for dir in [&dir1, &dir2] {
        let status = Command::new(bin)
            .args(["examples", "--which", "all", "--out"])
            .arg(dir.path())
            .status()
            .unwrap();
        assert!(status.success());
    }
    let mut names: Vec<_> = std::fs::read_dir(dir1.path())
        .unwrap()
        .map(|e| e.unwrap().file_name())
        .collect();
    names.sort();
    assert!(!names.is_empty());
    for name in &names {
        let a = std::fs::read(dir1.path().join(name)).unwrap();
        let b = std::fs::read(dir2.path().join(name)).unwrap();
        assert_eq!(a, b, "fixture {name:?} differs between runs");
    }

    // single-threaded versus multi-threaded runs emit identical bytes
    let bisheaf = dir1.path().join("ex1.json");
    let identity = dir1.path().join("identity.json");
    let annulus = dir1.path().join("annulus.json");
    let mut outputs = Vec::new();
    for threads in ["1", "4"] {
        let output = Command::new(bin)
            .args(["pls", "--threads", threads, "--bisheaf"])
            .arg(&bisheaf)
            .arg("--etale")
            .arg(&identity)
            .arg(&annulus)
            .output()
            .unwrap();
        assert!(output.status.success());
        outputs.push(output.stdout);
    }
    assert_eq!(outputs[0], outputs[1], "thread count changed the report bytes");

    // byte-stable reports also under the prime field
    let out_f2 = Command::new(bin)
        .args(["examples", "--which", "1", "--field", "F2", "--out"])
        .arg(dir2.path().join("f2"))
        .output()
        .unwrap();
    assert!(out_f2.status.success());

    println!("criterion 9 (byte-identical reports across runs and thread counts): PASS");
}
