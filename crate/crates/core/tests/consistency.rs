//! Median absolute errors of the Robust-LSE estimates shrink with T.
//!
//! Targets are the generating parameters: beta = 1, eta in [0, 5] and
//! sigma in [0.1, 1].

use ulse_core::bench::monotone_decreasing;
use ulse_core::dgp::{generate_grouped, DgpConfig};
use ulse_core::robust_lse_fit;

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(|a, b| a.total_cmp(b));
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

#[test]
fn errors_shrink_along_t_grid() {
    let grid = [400, 800, 1600, 3200];
    let reps = 200;
    // One trace per estimate: beta, mu_lo, mu_hi, sigma_lo, sigma_hi.
    let mut traces = vec![Vec::new(); 5];
    for &t in &grid {
        let mut errs: Vec<Vec<f64>> = (0..5).map(|_| Vec::with_capacity(reps)).collect();
        for r in 0..reps as u64 {
            let (d, _) = generate_grouped(&DgpConfig::simulation(t, 200, 17, r)).unwrap();
            let f = robust_lse_fit(&d, 150, 20).unwrap();
            let e = [
                f.beta_hat[0] - 1.0,
                f.envelope.mu_lo,
                f.envelope.mu_hi - 5.0,
                f.envelope.sigma_lo() - 0.1,
                f.envelope.sigma_hi() - 1.0,
            ];
            for (k, v) in e.iter().enumerate() {
                errs[k].push(v.abs());
            }
        }
        for (k, e) in errs.into_iter().enumerate() {
            traces[k].push(median(e));
        }
    }
    let names = ["beta", "mu_lo", "mu_hi", "sigma_lo", "sigma_hi"];
    for (name, tr) in names.iter().zip(&traces) {
        println!("{name}: {tr:?}");
        assert!(monotone_decreasing(tr, 1, 0.10), "{name}: {tr:?}");
    }
}
