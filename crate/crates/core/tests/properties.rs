use pi_core::fuchsian::{accessory_family, Construction, Generator};
use pi_core::index::{self, IndexResult};
use pi_core::linalg::{self, c, BranchInterval, CMatrix, CVector, InvariantSubspaces, C64, I};
use pi_core::reducibility::{classify2, classify3, CaseIntegers, ReducibilityReport3, Type3};
use pi_core::symbol::{extract_data, scalar_factorize, DataPair, PiecewiseSymbol};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn disk(r: &mut ChaCha8Rng) -> C64 {
    C64::from_polar(r.random_range(0.0..1.0f64).sqrt(), r.random_range(0.0..2.0 * PI))
}

/// Well-conditioned random matrix: `1.5·I` plus entries in the unit disk.
fn conjugator(r: &mut ChaCha8Rng, n: usize) -> CMatrix {
    CMatrix::from_fn(n, n, |i, j| disk(r) + if i == j { c(1.5, 0.0) } else { c(0.0, 0.0) })
}

#[derive(Debug, Clone, Copy)]
enum Shape {
    Generic,
    Upper,
    /// 1 + 2 block upper triangular (3×3) or upper (2×2).
    Block,
    Diagonal,
}

/// `exp(−2πiε)` for `ε` with real part well inside `J_2`.
fn unit_eigenvalue(r: &mut ChaCha8Rng) -> C64 {
    (-2.0 * PI * I * c(r.random_range(-0.35..0.35), r.random_range(-0.15..0.15))).exp()
}

fn shaped(r: &mut ChaCha8Rng, n: usize, shape: Shape) -> CMatrix {
    let d: Vec<C64> = (0..n).map(|_| unit_eigenvalue(r)).collect();
    match shape {
        Shape::Diagonal => linalg::diag(&d),
        Shape::Upper => CMatrix::from_fn(n, n, |i, j| if i == j { d[i] } else if j > i { disk(r) } else { c(0.0, 0.0) }),
        Shape::Block => {
            let upper = shaped(r, n, Shape::Upper);
            if n < 3 {
                return upper;
            }
            let mut m = upper;
            let lower_block = shaped(r, 2, Shape::Generic);
            m.view_mut((1, 1), (2, 2)).copy_from(&lower_block);
            m
        }
        Shape::Generic => {
            let s = conjugator(r, n);
            &s * linalg::diag(&d) * linalg::inverse(&s).unwrap()
        }
    }
}

/// Jump tuple with `M₁⋯M_m = I`, on sorted points of the unit circle.
fn jump_tuple(seed: u64, n: usize, m: usize, shape: Shape) -> Option<DataPair> {
    let mut r = rng(seed);
    let mut ms: Vec<CMatrix> = (0..m - 1).map(|_| shaped(&mut r, n, shape)).collect();
    let prod = ms.iter().fold(linalg::identity(n), |acc, x| acc * x);
    ms.push(linalg::inverse(&prod).ok()?);
    let mut angles: Vec<f64> = (0..m).map(|k| 2.0 * PI * (k as f64 + 0.5 * r.random_range(0.0..1.0)) / m as f64).collect();
    angles.sort_by(f64::total_cmp);
    let points = angles.iter().map(|&t| C64::from_polar(1.0, t)).collect();
    DataPair::from_jumps(ms, 2.0, points).ok()
}

fn conjugate(data: &DataPair, s: &CMatrix) -> DataPair {
    let si = linalg::inverse(s).unwrap();
    DataPair {
        ms: data.ms.iter().map(|m| s * m * &si).collect(),
        es: data.es.iter().map(|e| s * e * &si).collect(),
        ..data.clone()
    }
}

fn rel_close(a: &CMatrix, b: &CMatrix, tol: f64) -> bool {
    (a - b).norm() <= tol * (1.0 + b.norm())
}

fn shape_of(k: u8) -> Shape {
    [Shape::Generic, Shape::Upper, Shape::Block, Shape::Diagonal][k as usize % 4]
}

fn check_indices(res: &IndexResult, kappa: i64) -> Result<(), TestCaseError> {
    for v in res.candidates() {
        prop_assert_eq!(v.iter().sum::<i64>(), kappa, "{:?} does not sum to κ", v);
        prop_assert!(v.windows(2).all(|w| w[0] >= w[1]), "{:?} is not sorted", v);
    }
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn branch_log_inverts_the_exponential(seed in any::<u64>(), n in 1usize..=3, p in 1.2f64..6.0) {
        let mut r = rng(seed);
        let j = BranchInterval::for_exponent(p);
        let eps: Vec<C64> = (0..n).map(|_| c(r.random_range(j.lo + 0.05..j.hi() - 0.05), r.random_range(-0.3..0.3))).collect();
        let s = conjugator(&mut r, n);
        let si = linalg::inverse(&s).unwrap();
        let m = &s * linalg::diag(&eps.iter().map(|e| (-2.0 * PI * I * e).exp()).collect::<Vec<_>>()) * &si;
        let e = linalg::branch_log(&m, j).unwrap();
        let back = linalg::exp_scaled(&e, -2.0 * PI * I).unwrap();
        prop_assert!(rel_close(&back, &m, 1e-10), "exp(−2πiE) misses M by {:.1e}", (&back - &m).norm());
        prop_assert!((&e * &m - &m * &e).norm() < 1e-10 * (1.0 + m.norm() * e.norm()));
    }

    #[test]
    fn similarity_is_detected_under_conjugation(seed in any::<u64>(), n in 1usize..=3, k in 0u8..4) {
        let mut r = rng(seed);
        let m = shaped(&mut r, n, shape_of(k));
        let s = conjugator(&mut r, n);
        let conj = &s * &m * linalg::inverse(&s).unwrap();
        prop_assert!(linalg::similar(&m, &conj));
    }

    #[test]
    fn fingerprints_are_conjugation_invariant(seed in any::<u64>(), n in 1usize..=3, m in 2usize..=4) {
        let mut r = rng(seed);
        let ms: Vec<CMatrix> = (0..m).map(|_| shaped(&mut r, n, Shape::Generic)).collect();
        let s = conjugator(&mut r, n);
        let si = linalg::inverse(&s).unwrap();
        let conj: Vec<CMatrix> = ms.iter().map(|x| &s * x * &si).collect();
        let (a, b) = (linalg::similarity_fingerprint(&ms), linalg::similarity_fingerprint(&conj));
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((x - y).norm() < 1e-10 * (1.0 + x.norm()));
        }
    }

    #[test]
    fn invariant_subspaces_move_with_the_conjugator(seed in any::<u64>(), k in 1u8..3, d in 1usize..=2) {
        let mut r = rng(seed);
        let ms: Vec<CMatrix> = (0..3).map(|_| shaped(&mut r, 3, shape_of(k))).collect();
        let s = conjugator(&mut r, 3);
        let si = linalg::inverse(&s).unwrap();
        let conj: Vec<CMatrix> = ms.iter().map(|x| &s * x * &si).collect();
        let before = linalg::common_invariant_subspaces(&ms, d).unwrap();
        let after = linalg::common_invariant_subspaces(&conj, d).unwrap();
        prop_assert_eq!(before.isolated.len(), after.isolated.len());
        prop_assert_eq!(before.continua.len(), after.continua.len());
        for sub in &before.isolated {
            let moved: Vec<CVector> = sub.space.basis.iter().map(|v| &s * v).collect();
            let hit = after.isolated.iter().any(|t| moved.iter().all(|v| t.space.contains(v, 1e-7)));
            prop_assert!(hit, "no conjugated subspace contains C·V");
        }
    }

    #[test]
    fn extracted_data_is_consistent(seed in any::<u64>(), n in 1usize..=3, m in 1usize..=4) {
        let mut r = rng(seed);
        let arcs: Vec<CMatrix> = (0..m).map(|_| conjugator(&mut r, n)).collect();
        let mut angles: Vec<f64> = (0..m).map(|k| 2.0 * PI * (k as f64 + 0.3) / m as f64).collect();
        angles.sort_by(f64::total_cmp);
        let sym = PiecewiseSymbol::new(n, 2.0, angles.clone(), arcs.clone()).unwrap();
        let Ok(data) = extract_data(&sym) else { return Ok(()) };
        let prod = data.ms.iter().fold(linalg::identity(n), |acc, x| acc * x);
        prop_assert!((prod - linalg::identity(n)).norm() < 1e-10);
        for (mk, ek) in data.ms.iter().zip(&data.es) {
            prop_assert!(rel_close(&linalg::exp_scaled(ek, -2.0 * PI * I).unwrap(), mk, 1e-10));
        }
        let total: C64 = data.es.iter().map(linalg::trace).sum();
        prop_assert!(total.im.abs() < 1e-10 && (total.re - data.kappa as f64).abs() < 1e-8);

        let s = conjugator(&mut r, n);
        let moved = PiecewiseSymbol::new(n, 2.0, angles, arcs.iter().map(|a| &s * a).collect()).unwrap();
        let conj = extract_data(&moved).unwrap();
        let si = linalg::inverse(&s).unwrap();
        prop_assert_eq!(conj.kappa, data.kappa);
        for (a, b) in conj.ms.iter().zip(&data.ms) {
            prop_assert!(rel_close(a, &(&s * b * &si), 1e-9));
        }
        for (a, b) in conj.zetas.iter().zip(&data.zetas) {
            let sorted = |v: &[f64]| { let mut v = v.to_vec(); v.sort_by(f64::total_cmp); v };
            for (x, y) in sorted(a).iter().zip(&sorted(b)) {
                prop_assert!((x - y).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn scalar_factors_reproduce_the_symbol(seed in any::<u64>(), m in 1usize..=5, p in 1.3f64..4.0) {
        let mut r = rng(seed);
        let angles: Vec<f64> = (0..m).map(|k| 2.0 * PI * (k as f64 + r.random_range(0.1..0.9)) / m as f64).collect();
        let arcs = (0..m).map(|_| CMatrix::from_element(1, 1, C64::from_polar(r.random_range(0.3..3.0), r.random_range(-PI..PI)))).collect();
        let sym = PiecewiseSymbol::new(1, p, angles, arcs).unwrap();
        if let Ok(f) = scalar_factorize(&sym) {
            prop_assert!(f.residual(&sym, 64) < 1e-9);
        }
    }

    #[test]
    fn classification_ignores_conjugation(seed in any::<u64>(), n in 2usize..=3, k in 0u8..4) {
        let Some(data) = jump_tuple(seed, n, 3, shape_of(k)) else { return Ok(()) };
        let mut r = rng(seed ^ 0x5eed);
        let s = conjugator(&mut r, n);
        let conj = conjugate(&data, &s);
        if n == 2 {
            let (a, b) = (classify2(&data).unwrap(), classify2(&conj).unwrap());
            prop_assert_eq!((a.kind, a.n1, a.n2), (b.kind, b.n1, b.n2));
            if let (Some(x), Some(y)) = (a.n1, a.n2) {
                prop_assert_eq!(x + y, data.kappa);
            }
        } else {
            let (a, b) = (classify3(&data).unwrap(), classify3(&conj).unwrap());
            prop_assert_eq!((a.kind, a.integers), (b.kind, b.integers));
            let sum = match a.integers {
                CaseIntegers::None => data.kappa,
                CaseIntegers::Block { nu, big_n } => nu + big_n,
                CaseIntegers::Flag { n1, n2, n3 } => n1 + n2 + n3,
                CaseIntegers::Split { nu1, nu2, nu_sharp } => nu1 + nu2 + nu_sharp,
            };
            prop_assert_eq!(sum, data.kappa);
        }
    }

    #[test]
    fn index_vectors_sum_to_kappa_and_are_sorted(seed in any::<u64>(), n in 1usize..=3, m in 1usize..=4, k in 0u8..4) {
        let m = if n == 3 { 3 } else { m };
        let Some(data) = jump_tuple(seed, n, m, shape_of(k)) else { return Ok(()) };
        let rep = index::classify(&data).unwrap();
        let res = index::indices(&rep, &data);
        let Ok(res) = res else { return Ok(()) };
        check_indices(&res, data.kappa)?;
        prop_assert_eq!(&res, &index::indices(&rep, &data).unwrap(), "indices are not deterministic");
        if index::is_irreducible(&rep) {
            let bound = index::IrreducibleGapBound::new(n, m);
            for v in res.candidates() {
                prop_assert!(bound.admits(&v));
            }
        }
    }

    #[test]
    fn every_three_by_three_report_reaches_a_table_entry(
        seed in any::<u64>(), kind in 0usize..9, a in -4i64..=4, b in -4i64..=4,
    ) {
        let Some(data) = jump_tuple(seed, 3, 3, Shape::Generic) else { return Ok(()) };
        let kappa = data.kappa;
        let kinds = [Type3::A, Type3::B1, Type3::B2, Type3::B3, Type3::C, Type3::C1, Type3::C2, Type3::C3, Type3::D];
        let kind = kinds[kind];
        let integers = match kind {
            Type3::A => CaseIntegers::None,
            Type3::B1 | Type3::B2 | Type3::B3 => CaseIntegers::Block { nu: a, big_n: kappa - a },
            Type3::C3 => CaseIntegers::Split { nu1: a, nu2: b, nu_sharp: kappa - a - b },
            _ => {
                // admissible reports carry the classifier's normalizations
                let mut f = [a, b, kappa - a - b];
                match kind {
                    Type3::C1 if f[0] < f[1] => f.swap(0, 1),
                    Type3::C2 if f[1] < f[2] => f.swap(1, 2),
                    Type3::D => f.sort_by(|x, y| y.cmp(x)),
                    _ => {}
                }
                CaseIntegers::Flag { n1: f[0], n2: f[1], n3: f[2] }
            }
        };
        let empty = |dim| InvariantSubspaces { dim, isolated: vec![], continua: vec![] };
        let report = ReducibilityReport3 { kind, integers, lines: empty(1), planes: empty(2) };
        let res = index::indices_3x3(&report, &data).unwrap();
        check_indices(&res, kappa)?;
    }

    #[test]
    fn generators_emit_standard_form(seed in any::<u64>(), which in 0usize..14) {
        let mut g = Generator::new(seed);
        let (sys, _) = match which {
            0..=7 => g.construct_3x3(Construction::for_table_row(which + 1)[0]).unwrap(),
            8 => g.construct_triangular_2(3, &[2, 0]).unwrap(),
            9 => g.construct_extremal(2, 3, 0).unwrap(),
            10 => g.construct_extremal(2, 4, -1).unwrap(),
            11 => g.construct_extremal(3, 3, -1).unwrap(),
            12 => g.construct_extremal(1, 4, 1).unwrap(),
            _ => {
                let pts = g.singularities(4);
                (g.random_standard_form(&pts, &[1, 1, 0]).unwrap(), 2.0)
            }
        };
        prop_assert!(sys.validate().is_empty(), "{:?}", sys.validate());
        prop_assert!(sys.trace_residual().unwrap() < 1e-10);
        if (9..=12).contains(&which) {
            for e in sys.residues().unwrap() {
                prop_assert_eq!(linalg::minimal_poly_degree(&e).unwrap(), sys.n);
            }
        }
    }

    #[test]
    fn triangular_residues_carry_the_exponent_table(seed in any::<u64>(), m in 3usize..=4, gap in 0i64..=2) {
        let mut g = Generator::new(seed);
        let pts = g.singularities(m);
        let indices = [gap, 0];
        let eps = g.reducible_exponents(m, &indices, 0.1);
        let sys = g.triangular_2(&pts, &indices, &eps).unwrap();
        for (e, want) in sys.residues().unwrap().iter().zip(&eps) {
            // upper triangular: the diagonal is the spectrum
            prop_assert!((e[(0, 0)] - want[0]).norm() < 1e-12 && (e[(1, 1)] - want[1]).norm() < 1e-12);
            prop_assert!(e[(1, 0)].norm() < 1e-14);
        }
    }

    #[test]
    fn accessory_members_keep_their_exponents(seed in any::<u64>(), shape in 0usize..2, re in -5.0f64..5.0, im in -5.0f64..5.0) {
        let (n, m) = [(2, 4), (3, 3)][shape];
        let mut g = Generator::new(seed);
        let pts = g.singularities(m);
        let exps = g.generic_exponents(m, n, n as i64, 0.25);
        let fam = accessory_family(n, &pts, &exps).unwrap();
        let eq = fam.at(c(re, im));
        prop_assert!(eq.fuchs_residual().unwrap() < 1e-9);
        for (k, want) in exps.iter().enumerate() {
            let got = eq.exponents_at(k).unwrap();
            for w in want {
                prop_assert!(got.iter().any(|x| (x - w).norm() < 1e-9));
            }
        }
    }
}
