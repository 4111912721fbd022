use nalgebra::DMatrix;
use proptest::prelude::*;

use siegel_theta::exact::{format_rat, int, parse_rat, rat, to_f64};
use siegel_theta::theta::{cosets, enumerate, theta_f, Characteristics, SiegelPoint, ThetaOptions};
use siegel_theta::{g_n1, validate_frame, ConeFrame, QuadraticSpace, RatMatrix, Rule};

fn ternary() -> ConeFrame {
    let space = QuadraticSpace::lorentzian(&[vec![2, 0, 0], vec![0, 2, 0], vec![0, 0, -2]]).unwrap();
    validate_frame(&space, &RatMatrix::from_int_rows(&[&[0, 1, 0], &[0, 0, 1], &[1, 2, 2]])).unwrap()
}

fn hyperbolic() -> ConeFrame {
    let space = QuadraticSpace::lorentzian(&[vec![2, 0], vec![0, -2]]).unwrap();
    validate_frame(&space, &RatMatrix::from_int_rows(&[&[0, 1], &[1, 2]])).unwrap()
}

fn skewed() -> QuadraticSpace {
    QuadraticSpace::lorentzian(&[vec![2, 1, 0], vec![1, 2, 1], vec![0, 1, -4]]).unwrap()
}

fn int_matrix(rows: usize, cols: usize, entries: &[i64]) -> RatMatrix {
    RatMatrix::from_fn(rows, cols, |i, j| int(entries[i * cols + j]))
}

proptest! {
    #[test]
    fn rationals_round_trip(p in -10_000i64..10_000, q in 1i64..10_000) {
        let r = rat(p, q);
        prop_assert_eq!(parse_rat(&format_rat(&r)).unwrap(), r);
    }

    #[test]
    fn rules_round_trip(degree in 0usize..16, samples in 1u64..1_000_000, seed in any::<u64>()) {
        let gm = format!("gm:{}", 2 * degree + 1);
        prop_assert_eq!(gm.parse::<Rule>().unwrap().to_string(), gm);
        let mc = format!("mc:{samples}:{seed}");
        prop_assert_eq!(mc.parse::<Rule>().unwrap().to_string(), mc);
    }

    #[test]
    fn splitting_is_exact(c in proptest::collection::vec(-4i64..=4, 2), u in proptest::collection::vec(-9i64..=9, 6)) {
        let space = skewed();
        let cv = vec![int(c[0]), int(c[1]), int(3)];
        prop_assume!(space.q(&cv) < int(0));
        let split = space.split(&cv).unwrap();
        let u = int_matrix(3, 2, &u);
        let (perp, along) = split.project(&u).unwrap();
        prop_assert_eq!(space.q_matrix(&u), split.q_plus(&u) + split.q_minus(&u));
        prop_assert_eq!(split.q_plus(&u), space.q_matrix(&perp));
        prop_assert_eq!(split.q_minus(&u), space.q_matrix(&along));
        prop_assert!(split.q_minus(&u) <= int(0));
        prop_assert!(split.q_plus(&u) >= int(0));
    }

    #[test]
    fn f_is_invariant_under_positive_scaling(u in proptest::collection::vec(-6i64..=6, 6), s in 1i64..50) {
        let frame = ternary();
        let u = int_matrix(3, 2, &u);
        let f = frame.f_value(&u).unwrap();
        prop_assert_eq!(frame.f_value(&u.scale(&int(s))).unwrap(), f.clone());
        // genus two: f(−U) = f(U)
        prop_assert_eq!(frame.f_value(&u.neg()).unwrap(), f);
    }

    #[test]
    fn fast_f_agrees_with_exact_f(u in proptest::collection::vec(-1_000i64..=1_000, 6)) {
        let frame = ternary();
        let scaled: Vec<i128> = u.iter().map(|&x| x as i128).collect();
        let exact = frame.f_value(&int_matrix(3, 2, &u)).unwrap().as_f64();
        prop_assert_eq!(frame.f_scaled(&scaled), exact);
    }

    #[test]
    fn closed_form_kernel_is_odd_and_bounded(x in -5.0f64..5.0, y in -5.0f64..5.0) {
        let frame = hyperbolic();
        let g = g_n1(&frame, &[x, y]).unwrap();
        let h = g_n1(&frame, &[-x, -y]).unwrap();
        prop_assert!((g + h).abs() < 1e-15);
        prop_assert!(g.abs() <= 1.0);
    }

    #[test]
    fn enumeration_is_sorted_unique_and_nested(r in 0.5f64..15.0, h0 in -3i64..=3, h1 in 1i64..=4) {
        let m_form = DMatrix::from_row_slice(2, 2, &[1.5, 0.3, 0.3, 0.8]);
        let y = DMatrix::from_element(1, 1, 1.3);
        let h = DMatrix::from_column_slice(2, 1, &[h0 as f64 / h1 as f64, 0.25]);
        let small = enumerate(&m_form, &y, &h, r, 1 << 30).unwrap();
        let large = enumerate(&m_form, &y, &h, 2.0 * r, 1 << 30).unwrap();
        prop_assert!(small.windows(2).all(|w| w[0].offset < w[1].offset));
        prop_assert!(small.iter().all(|p| p.norm <= r));
        let offsets: Vec<&Vec<i64>> = large.iter().map(|p| &p.offset).collect();
        prop_assert!(small.iter().all(|p| offsets.binary_search(&&p.offset).is_ok()));
    }

    #[test]
    fn theta_f_vanishes_without_characteristics_at_genus_one(x in -1.0f64..1.0, y in 0.5f64..3.0) {
        let z = SiegelPoint::scalar(x, y).unwrap();
        let t = theta_f(&hyperbolic(), &Characteristics::zero(2, 1), &z, &ThetaOptions::default()).unwrap();
        prop_assert!(t.value.norm() < 1e-14);
    }
}

#[test]
fn coset_count_is_a_power_of_the_determinant() {
    let space = skewed();
    let det = space.abs_det();
    for n in 1..=2u32 {
        assert_eq!(num_bigint::BigInt::from(cosets(&space, n as usize).len()), det.pow(n));
    }
}

#[test]
fn support_satisfies_the_enumeration_bound() {
    let frame = ternary();
    let lambda = frame.enum_bound().unwrap();
    let mut seen = 0;
    for code in 0..5i64.pow(6) {
        let entries: Vec<i64> = (0..6).map(|k| (code / 5i64.pow(k)) % 5 - 2).collect();
        let u = int_matrix(3, 2, &entries);
        if !frame.f_value(&u).unwrap().in_component {
            continue;
        }
        seen += 1;
        for col in u.columns() {
            let q = to_f64(&frame.space().q(&col));
            let norm: f64 = col.iter().map(|x| to_f64(x).powi(2)).sum();
            assert!(q >= lambda * norm - 1e-12, "{entries:?}: Q = {q} < {}", lambda * norm);
        }
    }
    assert!(seen > 100);
}

#[test]
fn genus_two_kernel_stays_bounded() {
    use rand::{Rng, SeedableRng};
    let frame = ternary();
    let chart = siegel_theta::SimplexChart::new(&frame).unwrap();
    let config = siegel_theta::simplex::CubatureConfig::default().relaxed(1e-8);
    let rule = Rule::GrundmannMoller { degree: 7 };
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
    let mut largest: f64 = 0.0;
    let mut inside = 0;
    for k in 0..40 {
        let scale = [0.3, 1.0, 3.0][rng.random_range(0..3)];
        let u = if k % 2 == 0 {
            DMatrix::from_fn(3, 2, |_, _| rng.random_range(-3.0..3.0) * scale)
        } else {
            // an integral U in the support, scaled
            let u = loop {
                let entries: Vec<i64> = (0..6).map(|_| rng.random_range(-3..=3)).collect();
                let u = int_matrix(3, 2, &entries);
                if frame.f_value(&u).unwrap().in_component {
                    break u;
                }
            };
            inside += 1;
            u.to_f64() * scale
        };
        let g = siegel_theta::simplex::g_value_with(&chart, &u, &rule, &config).unwrap();
        assert!(g.value.abs() <= 1.0 + g.error_estimate + 1e-12, "{u}: {g:?}");
        largest = largest.max(g.value.abs());
    }
    assert_eq!(inside, 20);
    assert!(largest > 0.5);
}
