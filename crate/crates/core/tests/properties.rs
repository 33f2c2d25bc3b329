//! Randomized algebraic properties of the public API.

use kamreduce_core::diophantine::{check_admissible, DivisorOptions};
use kamreduce_core::flow::{compose, time_one_map};
use kamreduce_core::random::{random_real_blocks, random_symbol, seeded};
use kamreduce_core::scalar::CMat;
use kamreduce_core::series::SeriesRecord;
use kamreduce_core::smoothing::decompose;
use kamreduce_core::{make_schedule, FourierSeries, QuadraticSymbol, ScheduleParams, SymbolClass};
use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::Rng;

fn random_series(seed: u64, n: usize, rows: usize, cols: usize) -> FourierSeries<f64> {
    random_symbol::<f64, _>(&mut seeded(seed), n, rows.max(cols), 2, SymbolClass::Re)
        .quad()
        .block(0, 0, rows, cols)
}

fn theta(seed: u64, n: usize) -> Vec<f64> {
    let mut rng = seeded(seed ^ 0x9e37);
    (0..n)
        .map(|_| rng.random_range(0.0..std::f64::consts::TAU))
        .collect()
}

fn max_abs(m: &CMat<f64>) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn product_evaluates_pointwise(seed in any::<u64>(), n in 1usize..3) {
        let a = random_series(seed, n, 2, 3);
        let b = random_series(seed.wrapping_add(1), n, 3, 2);
        let (ab, lost) = a.mul(&b, None).unwrap();
        prop_assert_eq!(lost, 0.0);
        let t = theta(seed, n);
        let direct = a.evaluate(&t) * b.evaluate(&t);
        prop_assert!(max_abs(&(ab.evaluate(&t) - &direct)) <= 1e-12 * (1.0 + max_abs(&direct)));
    }

    #[test]
    fn series_json_roundtrip_is_exact(seed in any::<u64>(), n in 1usize..4) {
        let a = random_series(seed, n, 2, 2);
        let text = serde_json::to_string(&a.to_record()).unwrap();
        let rec: SeriesRecord<f64> = serde_json::from_str(&text).unwrap();
        prop_assert_eq!(FourierSeries::from_record(&rec).unwrap(), a);
    }

    #[test]
    fn bracket_is_antisymmetric(seed in any::<u64>(), d in 1usize..3) {
        let mut rng = seeded(seed);
        let p = random_symbol::<f64, _>(&mut rng, 1, d, 2, SymbolClass::Re);
        let q = random_symbol::<f64, _>(&mut rng, 1, d, 2, SymbolClass::Re);
        let (pq, _) = p.bracket(&q, None).unwrap();
        let (qp, _) = q.bracket(&p, None).unwrap();
        let sum = pq.add(&qp);
        prop_assert!(sum.norm(0.0) <= 1e-12 * (1.0 + pq.norm(0.0)));
    }

    #[test]
    fn flows_are_symplectic_and_reversible(seed in any::<u64>(), d in 1usize..3) {
        let f = random_symbol::<f64, _>(&mut seeded(seed), 1, d, 2, SymbolClass::Re);
        let eps = 0.05;
        let fwd = time_one_map(&f, eps, 256).unwrap();
        let back = time_one_map(&f, -eps, 256).unwrap();
        prop_assert!(fwd.symplectic_defect() <= 1e-10);
        let (id, _) = compose(&back, &fwd, None).unwrap();
        prop_assert!(id.deviation_from_identity() <= 1e-10);
    }

    #[test]
    fn admissibility_is_monotone_in_gamma(w in 0.3f64..3.0, v in 0.5f64..2.0, g in 1e-4f64..1e-1) {
        let opts = DivisorOptions::default();
        let strict = check_admissible(&[w], &[v], 12, g, 1.5, &opts).unwrap();
        let loose = check_admissible(&[w], &[v], 12, g / 2.0, 1.5, &opts).unwrap();
        prop_assert!(!strict.admissible || loose.admissible);
        prop_assert!(loose.min_margin >= strict.min_margin);
    }

    #[test]
    fn schedules_shrink_monotonically(e in 1e-8f64..1e-2, rho_frac in 0.05f64..0.95, beta in 0.1f64..0.9) {
        let n = 1;
        let rho = rho_frac * beta / (4.0 * (2.0 * n as f64 - 1.0) + 3.0 * beta);
        let p = ScheduleParams { eps0: e, rho, ell: 2.0, beta, gamma0: 0.1, tau: None, eps_star: None };
        let s = make_schedule(&p, n).unwrap();
        prop_assert!(s.tau > (n - 1) as f64 && s.tau < (n - 1) as f64 + beta / 4.0);
        for m in 0..s.len().min(6) - 1 {
            prop_assert!(s.eps(m + 1) < s.eps(m));
            prop_assert!(s.s(m + 1) < s.s(m));
            prop_assert!(s.s_mid(m) > s.s(m + 1) && s.s_mid(m) < s.s(m));
            prop_assert!(s.kmax(m + 1) >= s.kmax(m));
            prop_assert!(s.gamma(m + 1) < s.gamma(m));
        }
    }

    #[test]
    fn decomposition_telescopes(seed in any::<u64>()) {
        let blocks = random_real_blocks::<f64, _>(&mut seeded(seed), 1, 1, 3);
        let q0 = QuadraticSymbol::from_real_blocks(&blocks).unwrap().scale_real(1e-3);
        let p = ScheduleParams { eps0: 1e-3, rho: 0.05, ell: 2.0, beta: 0.5, gamma0: 0.05, tau: None, eps_star: None };
        let s = make_schedule(&p, 1).unwrap();
        let dec = decompose(&q0, &s, 5).unwrap();
        let back = dec.reconstruct().unwrap();
        let gap = q0.sub(&back).norm(0.0);
        prop_assert!((gap - dec.residual_norm).abs() <= 1e-12 * q0.norm(0.0));
        prop_assert!(gap <= q0.norm(0.0));
    }
}

#[test]
fn identity_matrix_series_is_multiplicative_unit() {
    let a = random_series(5, 2, 2, 2);
    let one = FourierSeries::constant(2, DMatrix::identity(2, 2));
    let (p, _) = one.mul(&a, None).unwrap();
    let diff = p.evaluate(&[0.3, 1.1]) - a.evaluate(&[0.3, 1.1]);
    assert!(max_abs(&diff) < 1e-14);
}
