//! Property-based checks of the estimator, data and expectation invariants.

use proptest::prelude::*;
use ulse_core::data::{default_columns, load_csv_from, log_returns, write_csv_to};
use ulse_core::gexp::{
    g_function, gexp_mc_lower_bound, gexp_pde, GexpProblem, Payoff, PayoffKind, PdeGrid,
};
use ulse_core::{ols_fit, robust_lse_fit, Dataset, SeededRng};

fn dataset(q: usize, t: usize, seed: u64) -> Dataset {
    let mut rng = SeededRng::new(seed, 7);
    let beta: Vec<f64> = (0..q).map(|_| rng.uniform_in(-3.0, 3.0)).collect();
    let mut x = Vec::new();
    let mut y = Vec::new();
    for i in 0..t {
        let row: Vec<f64> = (0..q).map(|_| rng.uniform_in(-10.0, 10.0)).collect();
        let eta = if i < t / 2 { 0.0 } else { 2.5 };
        y.push(row.iter().zip(&beta).map(|(a, b)| a * b).sum::<f64>() + eta + rng.normal(0.0, 0.7));
        x.extend(row);
    }
    Dataset::from_parts(q, x, y).unwrap()
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / 1.0f64.max(a.abs()).max(b.abs())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn ols_residuals_are_orthogonal(q in 1usize..4, t in 8usize..200, seed in any::<u64>()) {
        let d = dataset(q, t, seed);
        let fit = ols_fit(&d).unwrap();
        let z: Vec<f64> = d.samples().map(|(x, y)| y - fit.predict(x).unwrap()).collect();
        let zmax = z.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let ymax = d.y().iter().fold(0.0f64, |m, v| m.max(v.abs()));
        prop_assert!(z.iter().sum::<f64>().abs() <= 1e-8 * t as f64 * ymax.max(1.0));
        for j in 0..q {
            let xmax = (0..t).fold(0.0f64, |m, i| m.max(d.x_row(i)[j].abs()));
            let s: f64 = (0..t).map(|i| z[i] * d.x_row(i)[j]).sum();
            prop_assert!(s.abs() <= 1e-8 * t as f64 * xmax * zmax.max(ymax));
        }
    }

    #[test]
    fn ols_sum_of_squares_decomposes(q in 1usize..4, t in 8usize..200, seed in any::<u64>()) {
        let d = dataset(q, t, seed);
        let fit = ols_fit(&d).unwrap();
        let ybar = d.y().iter().sum::<f64>() / t as f64;
        let ssr: f64 = d.samples().map(|(x, _)| (fit.predict(x).unwrap() - ybar).powi(2)).sum();
        prop_assert!(rel(fit.sst, ssr + fit.sse) <= 1e-8);
    }

    #[test]
    fn ols_affine_equivariance(t in 8usize..120, seed in any::<u64>(), a in -5.0f64..5.0, b in -50.0f64..50.0) {
        prop_assume!(a.abs() > 1e-3);
        let d = dataset(2, t, seed);
        let f0 = ols_fit(&d).unwrap();
        let f1 = ols_fit(&d.map_y(|y| a * y + b).unwrap()).unwrap();
        for j in 0..2 {
            prop_assert!(rel(f1.beta[j], a * f0.beta[j]) <= 1e-10);
        }
        prop_assert!(rel(f1.mu, a * f0.mu + b) <= 1e-10);
    }

    #[test]
    fn noiseless_recovery(beta in -10.0f64..10.0, mu in -10.0f64..10.0, t in 10usize..200, n1 in 2usize..10) {
        let x: Vec<f64> = (1..=t).map(|i| 1.0 + 0.01 * i as f64).collect();
        let y: Vec<f64> = x.iter().map(|v| beta * v + mu).collect();
        let d = Dataset::from_xy(&x, &y).unwrap();
        let f = ols_fit(&d).unwrap();
        prop_assert!(rel(f.beta[0], beta) <= 1e-10 && rel(f.mu, mu) <= 1e-10);
        let n = (t / 3).max(n1).max(3);
        let r = robust_lse_fit(&d, n, n1).unwrap();
        prop_assert!(rel(r.beta_hat[0], beta) <= 1e-10);
        prop_assert!(rel(r.envelope.mu_lo, mu) <= 1e-10 && rel(r.envelope.mu_hi, mu) <= 1e-10);
        let y2 = y.iter().fold(1.0f64, |m, v| m.max(v * v));
        prop_assert!(r.envelope.sigma2_hi <= 1e-14 * y2, "sigma2 {:e} lo {:e}", r.envelope.sigma2_hi, r.envelope.sigma2_lo);
    }

    #[test]
    fn robust_lse_shift_equivariance(t in 30usize..150, seed in any::<u64>(), c in -100.0f64..100.0) {
        let d = dataset(1, t, seed);
        let (n, n1) = (t / 4 + 3, 5);
        let f0 = robust_lse_fit(&d, n, n1).unwrap();
        let f1 = robust_lse_fit(&d.map_y(|y| y + c).unwrap(), n, n1).unwrap();
        prop_assert_eq!(f0.k_hat, f1.k_hat);
        prop_assert!(rel(f1.beta_hat[0], f0.beta_hat[0]) <= 1e-10);
        prop_assert!((f1.envelope.mu_lo - f0.envelope.mu_lo - c).abs() <= 1e-10 * (1.0 + c.abs()));
        prop_assert!((f1.envelope.mu_hi - f0.envelope.mu_hi - c).abs() <= 1e-10 * (1.0 + c.abs()));
        prop_assert!(rel(f1.envelope.sigma2_lo, f0.envelope.sigma2_lo) <= 1e-9);
        prop_assert!(rel(f1.envelope.sigma2_hi, f0.envelope.sigma2_hi) <= 1e-9);
    }

    #[test]
    fn robust_lse_scale_equivariance(t in 30usize..150, seed in any::<u64>(), a in prop_oneof![-20.0f64..-0.05, 0.05f64..20.0]) {
        let d = dataset(1, t, seed);
        let (n, n1) = (t / 4 + 3, 5);
        let f0 = robust_lse_fit(&d, n, n1).unwrap();
        let f1 = robust_lse_fit(&d.map_x(|x| a * x).unwrap(), n, n1).unwrap();
        prop_assert_eq!(f0.k_hat, f1.k_hat);
        prop_assert!(rel(f1.beta_hat[0], f0.beta_hat[0] / a) <= 1e-10);
        prop_assert!(rel(f1.envelope.mu_lo, f0.envelope.mu_lo) <= 1e-9);
        prop_assert!(rel(f1.envelope.mu_hi, f0.envelope.mu_hi) <= 1e-9);
        prop_assert!(rel(f1.envelope.sigma2_lo, f0.envelope.sigma2_lo) <= 1e-9);
        prop_assert!(rel(f1.envelope.sigma2_hi, f0.envelope.sigma2_hi) <= 1e-9);
    }

    #[test]
    fn block_means_inside_envelope(q in 1usize..3, t in 20usize..150, seed in any::<u64>()) {
        let d = dataset(q, t, seed);
        let f = robust_lse_fit(&d, t / 3 + q + 2, 4).unwrap();
        for &mu in &f.block_means {
            prop_assert!(f.envelope.mu_lo <= mu && mu <= f.envelope.mu_hi);
        }
        prop_assert!(f.envelope.validate().is_ok());
        prop_assert_eq!(f.block_means.len(), f.m);
    }

    #[test]
    fn lower_variance_below_nested_blocks(seed in any::<u64>(), n in 10usize..40) {
        // Two groups of 60; every block inside a group is a candidate.
        let mut rng = SeededRng::new(seed, 1);
        let x: Vec<f64> = (0..120).map(|i| i as f64 * 0.05).collect();
        let y: Vec<f64> = (0..120).map(|i| x[i] + if i < 60 { 0.3 * rng.standard_normal() } else { 2.0 + 1.5 * rng.standard_normal() }).collect();
        let d = Dataset::from_xy(&x, &y).unwrap();
        let f = robust_lse_fit(&d, n, 5).unwrap();
        for start in (0..=60 - n).chain(60..=120 - n) {
            let b = ols_fit(&d.slice(start..start + n).unwrap()).unwrap();
            prop_assert!(f.envelope.sigma2_lo <= b.mse * (1.0 + 1e-12));
        }
    }

    #[test]
    fn g_is_positively_homogeneous(a in -1e3f64..1e3, lam in 0.0f64..100.0, lo in 0.0f64..2.0, d in 0.0f64..2.0) {
        let hi = lo + d;
        let lhs = g_function(lam * a, lo, hi);
        let rhs = lam * g_function(a, lo, hi);
        prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + rhs.abs()));
    }

    #[test]
    fn g_is_monotone_and_subadditive(a in -1e3f64..1e3, b in -1e3f64..1e3, lo in 0.0f64..2.0, d in 0.0f64..2.0) {
        let hi = lo + d;
        let (s, t) = if a <= b { (a, b) } else { (b, a) };
        prop_assert!(g_function(s, lo, hi) <= g_function(t, lo, hi));
        let tol = 1e-12 * (1.0 + a.abs() + b.abs()) * hi.max(1.0);
        prop_assert!(g_function(a + b, lo, hi) <= g_function(a, lo, hi) + g_function(b, lo, hi) + tol);
    }

    #[test]
    fn csv_round_trip(q in 1usize..4, t in 2usize..50, seed in any::<u64>()) {
        let d = dataset(q, t.max(8), seed);
        let mut buf = Vec::new();
        write_csv_to(&d, &mut buf, None).unwrap();
        let back = load_csv_from(buf.as_slice(), &default_columns(q)).unwrap();
        prop_assert_eq!(back, d);
    }

    #[test]
    fn geometric_series_has_constant_log_return(g in 0.01f64..10.0, p0 in 0.1f64..1000.0, t in 3usize..60) {
        let p: Vec<f64> = (0..t).map(|i| p0 * g.powi(i as i32)).collect();
        let idx: Vec<f64> = (1..=t).map(|i| i as f64).collect();
        let r = log_returns(&Dataset::from_xy(&idx, &p).unwrap()).unwrap();
        for v in r.y() {
            prop_assert!((v - g.ln()).abs() <= 1e-12 * (1.0 + g.ln().abs()) * t as f64);
        }
    }
}

fn family() -> Vec<PayoffKind> {
    PayoffKind::family()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn monte_carlo_is_a_lower_bound(k in 0usize..6, frac in 0.0f64..=1.0, seed in any::<u64>()) {
        let (lo, hi) = (0.25, 1.0);
        let kind = family()[k];
        let p = GexpProblem::new(kind, lo, hi).unwrap();
        let pde = gexp_pde(&p, &PdeGrid::default_for(&p)).unwrap();
        let s2 = lo + frac * (hi - lo);
        let est = gexp_mc_lower_bound(&p, s2, 20_000, &mut SeededRng::new(seed, 0)).unwrap();
        prop_assert!(est.mean - 3.0 * est.stderr <= pde + 1e-9, "{:?} mc {:?} pde {}", kind, est, pde);
    }

    #[test]
    fn expectation_is_sublinear(i in 0usize..6, j in 0usize..6, lo in 0.05f64..0.5, hi in 0.6f64..1.5) {
        let (a, b) = (family()[i], family()[j]);
        let p = GexpProblem::new(a, lo, hi).unwrap();
        let grid = PdeGrid::default_for(&p);
        let ea = gexp_pde(&p, &grid).unwrap();
        let eb = gexp_pde(&p.with_payoff(b), &grid).unwrap();
        let sum = Payoff::from(a).plus(&Payoff::from(b));
        let eab = gexp_pde(&p.with_payoff(sum), &grid).unwrap();
        prop_assert!(eab <= ea + eb + 1e-2, "{a:?}+{b:?}: {eab} > {ea} + {eb}");
    }
}

#[test]
fn degenerate_band_matches_classical_moments() {
    for s2 in [0.1, 0.5, 1.0, 2.0] {
        let moments = [
            (PayoffKind::Linear, 0.0),
            (PayoffKind::Quadratic, s2),
            (PayoffKind::Quartic, 3.0 * s2 * s2),
        ];
        for (kind, want) in moments {
            let p = GexpProblem::new(kind, s2, s2).unwrap();
            let v = gexp_pde(&p, &PdeGrid::default_for(&p)).unwrap();
            assert!(
                (v - want).abs() <= 1e-2,
                "{kind:?} at s2 = {s2}: {v} vs {want}"
            );
        }
    }
}

#[test]
fn equal_rng_ids_give_equal_draws() {
    let mut a = SeededRng::new(42, 3);
    let mut b = SeededRng::new(42, 3);
    for _ in 0..10_000 {
        assert_eq!(a.standard_normal().to_bits(), b.standard_normal().to_bits());
    }
}
