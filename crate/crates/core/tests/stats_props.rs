mod common;

use proptest::prelude::*;
use statrs::distribution::{ContinuousCDF, FisherSnedecor, StudentsT};

use common::{normal_equations, pairwise_gini, raw_pearson};
use supplyshock::stats::special::{betainc, f_upper_tail, ln_gamma, student_t_two_sided};
use supplyshock::stats::{gini, loglog_fit, lorenz, ols_multi, pearson};

fn values_and_pops() -> impl Strategy<Value = (Vec<f64>, Vec<u32>)> {
    (2usize..=20).prop_flat_map(|n| {
        (
            prop::collection::vec(0.0f64..100.0, n),
            prop::collection::vec(1u32..15, n),
        )
    })
}

fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * b.abs().max(1.0)
}

proptest! {
    #[test]
    fn gini_is_scale_invariant((v, w) in values_and_pops(), scale in 0.01f64..1e6) {
        prop_assume!(v.iter().any(|x| *x > 0.0));
        let w: Vec<f64> = w.iter().map(|p| *p as f64).collect();
        let scaled: Vec<f64> = v.iter().map(|x| x * scale).collect();
        let a = gini(&lorenz(&v, &w).unwrap());
        let b = gini(&lorenz(&scaled, &w).unwrap());
        prop_assert!((a - b).abs() <= 1e-12);
        prop_assert!((0.0..1.0).contains(&a));
    }

    #[test]
    fn trapezoid_gini_equals_pairwise((v, w) in values_and_pops()) {
        prop_assume!(v.iter().any(|x| *x > 0.0));
        let wf: Vec<f64> = w.iter().map(|p| *p as f64).collect();
        let g = gini(&lorenz(&v, &wf).unwrap());
        prop_assert!((g - pairwise_gini(&v, &w)).abs() <= 1e-12, "{} vs {}", g, pairwise_gini(&v, &w));
    }

    #[test]
    fn lorenz_curve_shape((v, w) in values_and_pops()) {
        prop_assume!(v.iter().any(|x| *x > 0.0));
        let w: Vec<f64> = w.iter().map(|p| *p as f64).collect();
        let c = lorenz(&v, &w).unwrap();
        prop_assert_eq!(c.points[0], (0.0, 0.0));
        prop_assert_eq!(*c.points.last().unwrap(), (1.0, 1.0));
        for p in c.points.windows(2) {
            prop_assert!(p[1].0 >= p[0].0 && p[1].1 >= p[0].1);
            prop_assert!(p[1].1 <= p[1].0 + 1e-12);
        }
    }

    #[test]
    fn merging_equal_per_capita_regions_keeps_gini((v, w) in values_and_pops(), k in 1u32..10) {
        prop_assume!(v.iter().any(|x| *x > 0.0));
        let w: Vec<f64> = w.iter().map(|p| *p as f64).collect();
        // Split region 0 into two with the same value per head.
        let mut v2 = v.clone();
        let mut w2 = w.clone();
        let share = k as f64 / (k as f64 + 1.0);
        v2[0] = v[0] * share;
        w2[0] = w[0] * share;
        v2.push(v[0] - v2[0]);
        w2.push(w[0] - w2[0]);
        let a = gini(&lorenz(&v, &w).unwrap());
        let b = gini(&lorenz(&v2, &w2).unwrap());
        prop_assert!((a - b).abs() <= 1e-12);
    }

    #[test]
    fn pearson_matches_raw_moments(
        xy in prop::collection::vec((-50.0f64..50.0, -50.0f64..50.0), 3..40)
    ) {
        let (x, y): (Vec<f64>, Vec<f64>) = xy.into_iter().unzip();
        let c = match pearson(&x, &y) {
            Ok(c) => c,
            Err(_) => return Ok(()),
        };
        prop_assert!((c.r - raw_pearson(&x, &y)).abs() <= 1e-10);
        prop_assert!((0.0..=1.0).contains(&c.p_value));
    }

    #[test]
    fn pearson_of_affine_map(x in prop::collection::vec(-10.0f64..10.0, 3..30), a in 0.1f64..5.0, b in -5.0f64..5.0) {
        prop_assume!(x.iter().any(|v| (v - x[0]).abs() > 1e-3));
        let up: Vec<f64> = x.iter().map(|v| a * v + b).collect();
        let down: Vec<f64> = x.iter().map(|v| -a * v + b).collect();
        prop_assert!((pearson(&x, &up).unwrap().r - 1.0).abs() <= 1e-12);
        prop_assert!((pearson(&x, &down).unwrap().r + 1.0).abs() <= 1e-12);
    }

    #[test]
    fn ols_matches_normal_equations(
        rows in prop::collection::vec((-5.0f64..5.0, -5.0f64..5.0, 0.0f64..10.0, -1.0f64..1.0), 8..40),
        beta in prop::collection::vec(-3.0f64..3.0, 4)
    ) {
        let x1: Vec<f64> = rows.iter().map(|r| r.0).collect();
        let x2: Vec<f64> = rows.iter().map(|r| r.1).collect();
        let x3: Vec<f64> = rows.iter().map(|r| r.2).collect();
        let y: Vec<f64> = rows
            .iter()
            .map(|r| beta[0] + beta[1] * r.0 + beta[2] * r.1 + beta[3] * r.2 + r.3)
            .collect();
        let fit = match ols_multi(&y, &[("a", &x1), ("b", &x2), ("c", &x3)]) {
            Ok(f) => f,
            Err(_) => return Ok(()),
        };
        let (b, se) = normal_equations(&y, &[x1, x2, x3]);
        for (k, c) in fit.coefficients.iter().enumerate() {
            prop_assert!(rel_close(c.estimate, b[k], 1e-10), "{} vs {}", c.estimate, b[k]);
            prop_assert!(rel_close(c.std_error, se[k], 1e-8), "{} vs {}", c.std_error, se[k]);
            prop_assert!((0.0..=1.0).contains(&c.p_value));
        }
        prop_assert!(fit.adj_r_squared <= fit.r_squared && fit.r_squared <= 1.0 + 1e-12);
        prop_assert!((0.0..=1.0).contains(&fit.model_p_value));
    }

    #[test]
    fn single_covariate_ols_is_loglog_fit(
        xy in prop::collection::vec((0.01f64..100.0, 0.01f64..100.0), 3..30)
    ) {
        let (x, y): (Vec<f64>, Vec<f64>) = xy.into_iter().unzip();
        let fit = match loglog_fit(&x, &y) {
            Ok(f) => f,
            Err(_) => return Ok(()),
        };
        let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
        let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
        let ols = ols_multi(&ly, &[("x", &lx)]).unwrap();
        prop_assert!(rel_close(ols.coefficient("x").unwrap().estimate, fit.exponent, 1e-10));
        prop_assert!(rel_close(ols.coefficient("intercept").unwrap().estimate.exp(), fit.prefactor, 1e-10));
    }

    #[test]
    fn exact_power_law(b in -3.0f64..3.0, a in 0.1f64..10.0, n in 3usize..30) {
        let x: Vec<f64> = (1..=n).map(|i| i as f64 * 0.7).collect();
        let y: Vec<f64> = x.iter().map(|v| a * v.powf(b)).collect();
        let fit = loglog_fit(&x, &y).unwrap();
        prop_assert!((fit.exponent - b).abs() <= 1e-10);
        prop_assert!(rel_close(fit.prefactor, a, 1e-10));
    }

    #[test]
    fn special_functions_match_statrs(a in 0.1f64..50.0, b in 0.1f64..50.0, x in 0.0f64..=1.0) {
        let ours = betainc(a, b, x).unwrap();
        let theirs = statrs::function::beta::beta_reg(a, b, x);
        prop_assert!((ours - theirs).abs() <= 1e-10, "I_{}({}, {}) = {} vs {}", x, a, b, ours, theirs);
        prop_assert!(rel_close(ln_gamma(a), statrs::function::gamma::ln_gamma(a), 1e-12));
    }

    #[test]
    fn t_and_f_tails_match_statrs(t in -20.0f64..20.0, f in 0.0f64..30.0, d1 in 1u32..40, d2 in 1u32..200) {
        let df = d2 as f64;
        let student = StudentsT::new(0.0, 1.0, df).unwrap();
        let p = 2.0 * student.cdf(-t.abs());
        prop_assert!((student_t_two_sided(t, df).unwrap() - p).abs() <= 1e-10);
        let fisher = FisherSnedecor::new(d1 as f64, df).unwrap();
        prop_assert!((f_upper_tail(f, d1 as f64, df).unwrap() - fisher.sf(f)).abs() <= 1e-10);
    }
}

#[test]
fn fixed_gini_cases() {
    assert_eq!(gini(&lorenz(&[2.0, 4.0], &[1.0, 2.0]).unwrap()), 0.0);
    assert_eq!(gini(&lorenz(&[0.0, 3.5], &[4.0, 4.0]).unwrap()), 0.5);
}

#[test]
fn constant_response_gives_zero_slopes() {
    let x = [1.0, 2.0, 3.0, 4.0, 5.0];
    let z = [2.0, -1.0, 0.5, 3.0, 1.0];
    let y = [4.0; 5];
    let fit = ols_multi(&y, &[("x", &x), ("z", &z)]).unwrap();
    assert!((fit.coefficient("intercept").unwrap().estimate - 4.0).abs() < 1e-12);
    assert!(fit.coefficient("x").unwrap().estimate.abs() < 1e-12);
    assert!(fit.coefficient("z").unwrap().estimate.abs() < 1e-12);
}
