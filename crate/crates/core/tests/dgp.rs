//! Generator-level checks of the simulation designs.

use ulse_core::dgp::{
    generate_grouped, generate_hetero, generate_scenario, DgpConfig, HeteroConfig, ScenarioConfig,
};

#[test]
fn realised_extremes_match_table_averages() {
    // Averages over 500 draws of the T = 3200 grouped design.
    let (mut emin, mut emax, mut smin, mut smax) = (0.0, 0.0, 0.0, 0.0);
    let reps = 500;
    for r in 0..reps {
        let (_, t) = generate_grouped(&DgpConfig::simulation(3200, 200, 11, r)).unwrap();
        emin += t.eta_min;
        emax += t.eta_max;
        smin += t.sigma_min;
        smax += t.sigma_max;
    }
    let k = reps as f64;
    let (emin, emax, smin, smax) = (emin / k, emax / k, smin / k, smax / k);
    assert!((emin - 0.2987).abs() <= 0.05, "eta_min {emin}");
    assert!((emax - 4.6994).abs() <= 0.05, "eta_max {emax}");
    assert!((smin - 0.1525).abs() <= 0.02, "sigma_min {smin}");
    assert!((smax - 0.9491).abs() <= 0.02, "sigma_max {smax}");
}

#[test]
fn order_statistic_means() {
    // E[min of K uniforms on [lo, hi]] = lo + (hi - lo) / (K + 1).
    for k in [2u64, 4, 8, 16] {
        let reps = 4000;
        let mut sum_min = 0.0;
        let mut sum_max = 0.0;
        let mut sq = 0.0;
        for r in 0..reps {
            let (_, t) =
                generate_grouped(&DgpConfig::simulation(200 * k as usize, 200, 5, r)).unwrap();
            sum_min += t.eta_min;
            sum_max += t.eta_max;
            sq += t.eta_min * t.eta_min;
        }
        let n = reps as f64;
        let mean = sum_min / n;
        let sd = (sq / n - mean * mean).sqrt();
        let want = 5.0 / (k as f64 + 1.0);
        assert!(
            (mean - want).abs() <= 4.0 * sd / n.sqrt(),
            "K={k}: {mean} vs {want}"
        );
        assert!((sum_max / n - (5.0 - want)).abs() <= 4.0 * sd / n.sqrt());
    }
}

#[test]
fn hetero_group_variances_within_chi_square_bound() {
    // (n0 - 1) s^2 / sigma^2 ~ chi^2(n0 - 1); the Laurent-Massart bound with
    // x = ln(2 * 10 * 1e4) gives |s^2/sigma^2 - 1| <= 2 sqrt(x/k) + 2x/k with
    // probability 1 - 1e-4 per group.
    let cfg = HeteroConfig::standard(2000, 3, 0);
    let (d, truth) = generate_hetero(&cfg).unwrap();
    let k = (cfg.n0 - 1) as f64;
    let x = (2.0f64 * 10.0 * 1e4).ln();
    let bound = 2.0 * (x / k).sqrt() + 2.0 * x / k;
    for (g, sigma) in truth.sigmas.iter().enumerate() {
        let e: Vec<f64> = (g * cfg.n0..(g + 1) * cfg.n0)
            .map(|i| d.y()[i] - d.x_row(i)[0])
            .collect();
        let m = e.iter().sum::<f64>() / e.len() as f64;
        let s2 = e.iter().map(|v| (v - m).powi(2)).sum::<f64>() / k;
        assert!(
            (s2 / (sigma * sigma) - 1.0).abs() <= bound,
            "group {g}: {s2} vs {}",
            sigma * sigma
        );
    }
}

#[test]
fn scenario_prefix_and_suffix_variances() {
    for m in 1..=6 {
        let cfg = ScenarioConfig {
            t: 40_000,
            ..ScenarioConfig::standard(m, 200, 8, 0).unwrap()
        };
        let d = generate_scenario(&cfg).unwrap();
        let nc = cfg.clean_count();
        let e: Vec<f64> = d.samples().map(|(x, y)| y - x[0]).collect();
        for (part, want) in [(&e[..nc], 1.0), (&e[nc..], 100.0)] {
            let n = part.len() as f64;
            let mean = part.iter().sum::<f64>() / n;
            let v = part.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / (n - 1.0);
            assert!(
                (v / want - 1.0).abs() <= 5.0 * (2.0 / n).sqrt(),
                "m={m}: {v} vs {want}"
            );
        }
    }
}

#[test]
fn generators_are_reproducible() {
    let g = DgpConfig::simulation(800, 200, 21, 3);
    assert_eq!(generate_grouped(&g).unwrap(), generate_grouped(&g).unwrap());
    let s = ScenarioConfig::standard(4, 200, 21, 3).unwrap();
    assert_eq!(
        generate_scenario(&s).unwrap(),
        generate_scenario(&s).unwrap()
    );
    let h = HeteroConfig::standard(1000, 21, 3);
    assert_eq!(generate_hetero(&h).unwrap(), generate_hetero(&h).unwrap());
}
