use std::path::Path;

use proptest::prelude::*;
use radi::cli::load_problem;
use radi::log::{format_log, parse_log};
use radi::mtx::{format_dense, format_sparse, parse_matrix_market, write_dense, write_sparse};
use radi::shiftfile::{format_shifts, parse_shifts};
use radi_core::dense::{c, CMat, C64};
use radi_core::testgen::RandomProblem;
use radi_core::{ConvergenceRecord, CscMatrix, ProblemSpec};

fn bits(m: &CMat) -> Vec<(u64, u64)> {
    m.iter().map(|z| (z.re.to_bits(), z.im.to_bits())).collect()
}

fn sparse_bits(s: &CscMatrix) -> (Vec<usize>, Vec<usize>, Vec<(u64, u64)>) {
    (
        s.colptr().to_vec(),
        s.rowind().to_vec(),
        s.values().iter().map(|z| (z.re.to_bits(), z.im.to_bits())).collect(),
    )
}

fn write_problem(dir: &Path, pr: &ProblemSpec) {
    write_sparse(&dir.join("A.mtx"), pr.a()).unwrap();
    write_dense(&dir.join("B.mtx"), pr.b()).unwrap();
    write_dense(&dir.join("C.mtx"), pr.c()).unwrap();
    if let Some(e) = pr.e() {
        write_sparse(&dir.join("E.mtx"), e).unwrap();
    }
}

#[test]
fn problem_files_round_trip_bit_identically() {
    for (complex, with_e) in [(false, false), (false, true), (true, true)] {
        let pr = RandomProblem::new(25, 2, 3).complex(complex).with_e(with_e).build(9);
        let dir = tempfile::tempdir().unwrap();
        write_problem(dir.path(), &pr);
        let e = with_e.then(|| dir.path().join("E.mtx"));
        let load = || {
            load_problem(
                &dir.path().join("A.mtx"),
                Some(&dir.path().join("B.mtx")),
                &dir.path().join("C.mtx"),
                e.as_deref(),
            )
            .unwrap()
        };
        let (p1, p2) = (load(), load());
        for q in [&p1, &p2] {
            assert_eq!(sparse_bits(q.a()), sparse_bits(pr.a()));
            assert_eq!(bits(q.b()), bits(pr.b()));
            assert_eq!(bits(q.c()), bits(pr.c()));
            assert_eq!(q.e().map(sparse_bits), pr.e().map(sparse_bits));
            assert_eq!(q.is_real(), !complex);
        }
    }
}

#[test]
fn missing_b_selects_lyapunov_case() {
    let pr = RandomProblem::new(5, 1, 1).build(3);
    let dir = tempfile::tempdir().unwrap();
    write_problem(dir.path(), &pr);
    let q = load_problem(&dir.path().join("A.mtx"), None, &dir.path().join("C.mtx"), None).unwrap();
    assert_eq!(q.m(), 0);
    assert_eq!(q.n(), 5);
}

#[test]
fn inconsistent_dimensions_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    write_sparse(&dir.path().join("A.mtx"), &CscMatrix::identity(3)).unwrap();
    write_dense(&dir.path().join("C.mtx"), &CMat::from_element(1, 4, c(1.0, 0.0))).unwrap();
    let err = load_problem(&dir.path().join("A.mtx"), None, &dir.path().join("C.mtx"), None).unwrap_err();
    assert!(matches!(err, radi::Error::Solver(_)), "{err}");
}

fn entry() -> impl Strategy<Value = C64> {
    (prop::num::f64::NORMAL | prop::num::f64::ZERO, prop::num::f64::NORMAL | prop::num::f64::ZERO)
        .prop_map(|(re, im)| C64::new(re, im))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn dense_round_trip(rows in 1usize..5, cols in 1usize..5, vals in prop::collection::vec(entry(), 25), real in any::<bool>()) {
        let m = CMat::from_fn(rows, cols, |i, j| {
            let v = vals[i * 5 + j];
            if real { c(v.re, 0.0) } else { v }
        });
        let back = parse_matrix_market(&format_dense(&m), Path::new("m.mtx")).unwrap().to_dense();
        prop_assert_eq!(bits(&back), bits(&m));
    }

    #[test]
    fn sparse_round_trip(n in 1usize..6, trips in prop::collection::vec((0usize..6, 0usize..6, entry()), 0..12)) {
        let t: Vec<_> = trips.into_iter().filter(|&(i, j, _)| i < n && j < n).collect();
        // Summed duplicates can round; keep one entry per position.
        let mut seen = std::collections::BTreeSet::new();
        let t: Vec<_> = t.into_iter().filter(|&(i, j, _)| seen.insert((i, j))).collect();
        let s = CscMatrix::from_triplets(n, n, &t).unwrap();
        let back = parse_matrix_market(&format_sparse(&s), Path::new("s.mtx")).unwrap().into_sparse();
        prop_assert_eq!(sparse_bits(&back), sparse_bits(&s));
    }

    #[test]
    fn shift_round_trip(v in prop::collection::vec((1e-6f64..1e6, -1e6f64..1e6), 1..8)) {
        let s: Vec<C64> = v.into_iter().map(|(re, im)| C64::new(re, im)).collect();
        let back = parse_shifts(&format_shifts(&s), Path::new("s.txt")).unwrap();
        prop_assert_eq!(back.shifts(), &s[..]);
    }

    #[test]
    fn log_round_trip(rows in prop::collection::vec((0usize..1000, 0usize..10_000, 0f64..1.0, 0f64..10.0), 0..6)) {
        let recs: Vec<ConvergenceRecord> = rows
            .iter()
            .enumerate()
            .map(|(k, &(q, _, r, t))| ConvergenceRecord {
                iter: k + 1,
                subspace_dim: q,
                rel_residual: r,
                expansion_s: t / 3.0,
                absorb_s: t / 7.0,
                total_s: t,
            })
            .collect();
        let back = parse_log(&format_log(&recs), Path::new("log.csv")).unwrap();
        prop_assert_eq!(back, recs);
    }
}
