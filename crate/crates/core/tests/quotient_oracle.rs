use scalarflat::geometry::{Chart, MetricField, ScalarField};
use scalarflat::quotient::{rayleigh_quotient, smooth_step};

const W: f64 = 0.25;

/// Derivative of the smooth step, written out independently.
fn smooth_step_d(t: f64) -> f64 {
    if t <= 0.0 || t >= 1.0 {
        return 0.0;
    }
    let a = (-1.0 / t).exp();
    let b = (-1.0 / (1.0 - t)).exp();
    let (da, db) = (a / (t * t), -b / ((1.0 - t) * (1.0 - t)));
    (da * (a + b) - a * (da + db)) / ((a + b) * (a + b))
}

fn bubble(r: f64) -> f64 {
    let x = r - 3.0;
    (1.0 + 25.0 * x * x).powf(-0.5)
}

fn bubble_d(r: f64) -> f64 {
    let x = r - 3.0;
    -25.0 * x * (1.0 + 25.0 * x * x).powf(-1.5)
}

fn cutoff(r: f64) -> f64 {
    smooth_step((r - 2.0) / W) * smooth_step((4.0 - r) / W)
}

fn cutoff_d(r: f64) -> f64 {
    (smooth_step_d((r - 2.0) / W) * smooth_step((4.0 - r) / W) - smooth_step((r - 2.0) / W) * smooth_step_d((4.0 - r) / W)) / W
}

fn trial(r: f64) -> f64 {
    if r <= 2.0 || r >= 4.0 {
        0.0
    } else {
        bubble(r) * cutoff(r)
    }
}

/// Composite Gauss-Legendre (5 points) on `[2, 4]` with analytic derivatives:
/// `4 pi int f'^2 r^2 dr / (4 pi int f^6 r^2 dr)^(1/3)`.
fn oracle(panels: usize) -> f64 {
    let x = [
        0.0,
        -0.538_469_310_105_683_1,
        0.538_469_310_105_683_1,
        -0.906_179_845_938_664,
        0.906_179_845_938_664,
    ];
    let w = [
        0.568_888_888_888_888_9,
        0.478_628_670_499_366_5,
        0.478_628_670_499_366_5,
        0.236_926_885_056_189_1,
        0.236_926_885_056_189_1,
    ];
    let h = 2.0 / panels as f64;
    let (mut num, mut den) = (0.0, 0.0);
    for p in 0..panels {
        let mid = 2.0 + (p as f64 + 0.5) * h;
        for k in 0..5 {
            let r = mid + 0.5 * h * x[k];
            let df = bubble_d(r) * cutoff(r) + bubble(r) * cutoff_d(r);
            let f = trial(r);
            num += 0.5 * h * w[k] * df * df * r * r;
            den += 0.5 * h * w[k] * f.powi(6) * r * r;
        }
    }
    let area = 4.0 * std::f64::consts::PI;
    area * num / (area * den).powf(1.0 / 3.0)
}

#[test]
fn truncated_bubble_matches_quadrature() {
    let exact = oracle(4000);
    assert!((oracle(2000) - exact).abs() < 1e-12 * exact);
    for chart in [Chart::radial(3, 8001), Chart::axisymmetric(3, 8001, 4)] {
        let g = MetricField::flat(chart.unwrap());
        let f = ScalarField::from_fn(g.chart().clone(), |s, _| if s == 0.0 { 0.0 } else { trial(1.0 / s) }).unwrap();
        let q = rayleigh_quotient(&g, &f).unwrap();
        assert!((q - exact).abs() <= 1e-6 * exact, "{q} vs {exact}");
    }
}
