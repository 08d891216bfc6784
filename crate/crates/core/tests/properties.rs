use proptest::prelude::*;

use scalarflat::elliptic::{solve_linear, LinearProblem, SolverOptions};
use scalarflat::geometry::{conformal_transform, metric_from_spec, Chart, MetricField, MetricSpec, ScalarField};
use scalarflat::meancurv::harmonic_unit;
use scalarflat::weighted::{weighted_norm, WeightedNormSpec};

fn sample(chart: &std::sync::Arc<Chart>, c: &[f64]) -> ScalarField {
    // smooth, decaying like s^2
    ScalarField::from_fn(chart.clone(), |s, t| s * s * (c[0] + c[1] * s + c[2] * t.cos() * s)).unwrap()
}

fn conformal(ns: usize, nt: usize, c1: f64, c2: f64) -> MetricField {
    let chart = if nt == 1 { Chart::radial(3, ns) } else { Chart::axisymmetric(3, ns, nt) }.unwrap();
    metric_from_spec(chart, &MetricSpec::Conformal { coefficients: vec![1.0, c1, c2] }).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 24, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn norm_is_homogeneous(c in prop::array::uniform3(-2.0f64..2.0), k in -5.0f64..5.0, p in 1.0f64..4.0, delta in -3.0f64..1.0) {
        let chart = Chart::axisymmetric(3, 41, 6).unwrap();
        let u = sample(&chart, &c);
        for spec in [WeightedNormSpec::lebesgue(p, delta), WeightedNormSpec::sobolev(1, p, delta)] {
            let a = weighted_norm(&u, &spec).unwrap();
            let b = weighted_norm(&u.map(|v| k * v).unwrap(), &spec).unwrap();
            prop_assert!((b - k.abs() * a).abs() <= 1e-12 * (1.0 + b));
        }
    }

    #[test]
    fn norm_decreases_with_delta(c in prop::array::uniform3(-2.0f64..2.0), p in 1.0f64..4.0, d0 in -3.0f64..0.0, dd in 0.0f64..2.0) {
        let chart = Chart::radial(3, 61).unwrap();
        let u = sample(&chart, &c);
        let lo = weighted_norm(&u, &WeightedNormSpec::lebesgue(p, d0)).unwrap();
        let hi = weighted_norm(&u, &WeightedNormSpec::lebesgue(p, d0 + dd)).unwrap();
        prop_assert!(hi <= lo * (1.0 + 1e-12));
    }

    #[test]
    fn linear_solve_is_linear(c in prop::array::uniform3(-1.0f64..1.0), d in prop::array::uniform3(-1.0f64..1.0), a in -3.0f64..3.0, b in -3.0f64..3.0) {
        let g = conformal(41, 6, 0.2, 0.3);
        let chart = g.chart().clone();
        let (f1, f2) = (sample(&chart, &c), sample(&chart, &d));
        let opts = SolverOptions::default();
        let solve = |f: ScalarField| solve_linear(&LinearProblem::new(g.clone(), 1.0).with_source(f), &opts).unwrap().solution;
        let u1 = solve(f1.clone());
        let u2 = solve(f2.clone());
        let combo = solve(f1.zip_map(&f2, |x, y| a * x + b * y).unwrap());
        let expect = u1.zip_map(&u2, |x, y| a * x + b * y).unwrap();
        let scale = 1.0 + expect.values().iter().fold(0f64, |m, v| m.max(v.abs()));
        prop_assert!(combo.max_abs_diff(&expect) <= 1e-9 * scale);
    }

    #[test]
    fn conformal_factors_compose(c in prop::array::uniform3(-0.3f64..0.3), d in prop::array::uniform3(-0.3f64..0.3)) {
        let g = conformal(21, 4, 0.3, 0.1);
        let chart = g.chart().clone();
        let phi = ScalarField::from_fn(chart.clone(), |s, t| 1.0 + c[0] * s + c[1] * s * s + c[2] * s * t.cos()).unwrap();
        let psi = ScalarField::from_fn(chart.clone(), |s, t| 1.0 + d[0] * s + d[1] * s * s + d[2] * s * t.cos()).unwrap();
        let twice = conformal_transform(&conformal_transform(&g, &phi).unwrap(), &psi).unwrap();
        let once = conformal_transform(&g, &phi.zip_map(&psi, |x, y| x * y).unwrap()).unwrap();
        for k in 0..chart.len() {
            let (x, y) = (twice.components_at(k), once.components_at(k));
            for i in 0..4 {
                prop_assert!((x[i] - y[i]).abs() <= 1e-13 * (1.0 + y[i].abs()));
            }
        }
    }

    #[test]
    fn barrier_obeys_maximum_principle(c1 in -0.5f64..1.0, c2 in -0.3f64..1.0) {
        let g = conformal(61, 1, c1, c2);
        let unit = harmonic_unit(&g, &SolverOptions::default()).unwrap();
        let vals = unit.v.values();
        let chart = g.chart();
        for (k, &v) in vals.iter().enumerate() {
            if chart.s()[chart.split(k).0] > 0.0 {
                prop_assert!(v > 0.0 && v <= 1.0 + 1e-10, "v = {v} at {k}");
            }
        }
        prop_assert!(unit.dv_deta.min() > 0.0);
    }

    #[test]
    fn solves_are_deterministic(c1 in -0.5f64..1.0, c2 in 0.0f64..1.0) {
        let g = conformal(41, 4, c1, c2);
        let a = scalarflat::dirichlet::solve_scalar_flat_dirichlet(&g, &SolverOptions::default()).unwrap();
        let b = scalarflat::dirichlet::solve_scalar_flat_dirichlet(&g, &SolverOptions::default()).unwrap();
        prop_assert_eq!(a.phi.values(), b.phi.values());
        let (mut ra, mut rb) = (a.report, b.report);
        ra.timing.clear();
        rb.timing.clear();
        prop_assert_eq!(ra.to_json().unwrap(), rb.to_json().unwrap());
    }
}
