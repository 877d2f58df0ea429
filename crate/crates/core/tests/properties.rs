use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use reflow::liecore::{closed_form_rank, rank_oracle};
use reflow::loops::{connection_degree_check, r_lambda, ConnectionField, GridChart, LaurentMatrixPoly};
use reflow::zerocurv::vacuum_solution;
use reflow::{build_lagrangian_pair, build_space_form_pair, decompose, trace_form, Error, Mat, Sub, SymmetricPairSpec};

fn spec_strategy() -> impl Strategy<Value = SymmetricPairSpec> {
    prop_oneof![
        (2usize..=4, 1usize..=3, any::<bool>()).prop_map(|(n, k, h)| build_space_form_pair(n, k, h).unwrap()),
        (2usize..=3, any::<bool>()).prop_map(|(n, h)| build_lagrangian_pair(n, h).unwrap()),
    ]
}

fn random_algebra(spec: &SymmetricPairSpec, rng: &mut ChaCha8Rng) -> Mat {
    Sub::ALL.iter().fold(Mat::zeros(spec.m, spec.m), |acc, &s| acc + spec.random_in(s, rng))
}

fn lambda_strategy() -> impl Strategy<Value = f64> {
    prop_oneof![0.05f64..20.0, -20.0f64..-0.05]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn projectors_resolve_the_identity(spec in spec_strategy(), seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = random_algebra(&spec, &mut rng);
        let parts = decompose(&x, &spec).unwrap();
        prop_assert!((parts.sum() - &x).norm() < 1e-12 * (1.0 + x.norm()));
        for s in Sub::ALL {
            let p = spec.project(&x, s);
            prop_assert!((spec.project(&p, s) - &p).norm() < 1e-12 * (1.0 + x.norm()));
            prop_assert!(spec.algebra_residual(&p) < 1e-10);
        }
    }

    #[test]
    fn trace_form_is_ad_invariant(spec in spec_strategy(), seed in any::<u64>(), t in -1.0f64..1.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (x, y, z) = (random_algebra(&spec, &mut rng), random_algebra(&spec, &mut rng), random_algebra(&spec, &mut rng));
        let g = (&z * t).exp();
        let ginv = (&z * -t).exp();
        let before = trace_form(&x, &y).unwrap();
        let after = trace_form(&(&g * &x * &ginv), &(&g * &y * &ginv)).unwrap();
        prop_assert!((before - after).abs() < 1e-9 * (1.0 + x.norm() * y.norm()));
    }

    #[test]
    fn r_lambda_is_at_least_one(lambda in lambda_strategy()) {
        let r = r_lambda(lambda).unwrap();
        prop_assert!(r >= 1.0 - 1e-15);
        prop_assert!((r - r_lambda(1.0 / lambda).unwrap()).abs() < 1e-12 * r);
        prop_assert!((r - r_lambda(-lambda).unwrap()).abs() == 0.0);
    }

    #[test]
    fn evaluation_is_linear(seed in any::<u64>(), lambda in lambda_strategy(), s in -3.0f64..3.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let spec = build_space_form_pair(2, 1, false).unwrap();
        let mk = |rng: &mut ChaCha8Rng| {
            LaurentMatrixPoly::from_coeffs((0..5).map(|_| random_algebra(&spec, rng)).collect()).unwrap()
        };
        let (p, q) = (mk(&mut rng), mk(&mut rng));
        let combo = LaurentMatrixPoly::from_coeffs(
            (-2..=2).map(|j| p.coeff(j).unwrap() + q.coeff(j).unwrap() * s).collect(),
        ).unwrap();
        let lhs = combo.eval(lambda).unwrap();
        let rhs = p.eval(lambda).unwrap() + q.eval(lambda).unwrap() * s;
        prop_assert!((lhs - &rhs).norm() < 1e-10 * (1.0 + rhs.norm()));
    }

    #[test]
    fn connection_polynomials_are_twisted(spec in spec_strategy(), seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let chart = GridChart::uniform(spec.n, 3, 0.1).unwrap();
        let a: Vec<Mat> = (0..spec.n).map(|_| spec.random_in(Sub::PP, &mut rng)).collect();
        let b: Vec<Mat> = (0..spec.n).map(|_| spec.random_in(Sub::PM, &mut rng)).collect();
        let c: Vec<Mat> = (0..spec.n).map(|_| spec.random_in(Sub::MM, &mut rng)).collect();
        let field = ConnectionField::constant(chart, a, b, c).unwrap();
        prop_assert!(connection_degree_check(&field, &spec, 1e-10).unwrap().pass);
        prop_assert!(field.poly(0, 0).is_twisted(&spec, 1e-10).pass);
    }
}

#[test]
fn rank_matches_closed_form() {
    let mut specs = Vec::new();
    for n in 2..=4 {
        for k in 1..=4 {
            specs.push(build_space_form_pair(n, k, false).unwrap());
            specs.push(build_space_form_pair(n, k, true).unwrap());
        }
    }
    for n in 2..=3 {
        specs.push(build_lagrangian_pair(n, false).unwrap());
        specs.push(build_lagrangian_pair(n, true).unwrap());
    }
    for spec in &specs {
        let r = rank_oracle(spec, 32, 11);
        assert_eq!(r.rank, closed_form_rank(spec), "{:?} n={} k={}", spec.family, spec.n, spec.k);
    }
}

#[test]
fn vacuum_exists_exactly_when_rank_allows() {
    for n in 2..=4 {
        for k in 1..=3 {
            let spec = build_space_form_pair(n, k, false).unwrap();
            let chart = GridChart::uniform(n, 3, 0.1).unwrap();
            let rank = closed_form_rank(&spec);
            match vacuum_solution(&spec, chart, 5) {
                Ok(_) => assert!(n <= rank, "n={n} k={k}"),
                Err(Error::RankObstruction { n: en, rank: er }) => {
                    assert!(n > rank);
                    assert_eq!((en, er), (n, rank));
                }
                Err(e) => panic!("unexpected {e}"),
            }
        }
    }
}
