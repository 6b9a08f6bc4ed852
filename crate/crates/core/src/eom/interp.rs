//! Local cubic interpolation on non-uniform abscissae.

/// Four-point Lagrange interpolation of `(xs, ys)` at `x`. `xs` must be
/// strictly increasing; outside the data the end cubic is extrapolated.
pub fn cubic(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    assert_eq!(xs.len(), ys.len());
    let n = xs.len();
    assert!(n > 0, "no data to interpolate");
    if n < 4 {
        return lagrange(xs, ys, x);
    }
    let i = xs.partition_point(|&v| v <= x).saturating_sub(1);
    let start = i.saturating_sub(1).min(n - 4);
    lagrange(&xs[start..start + 4], &ys[start..start + 4], x)
}

fn lagrange(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    let mut total = 0.0;
    for (j, (&xj, &yj)) in xs.iter().zip(ys).enumerate() {
        if x == xj {
            return yj;
        }
        let mut w = 1.0;
        for (k, &xk) in xs.iter().enumerate() {
            if k != j {
                w *= (x - xk) / (xj - xk);
            }
        }
        total += w * yj;
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reproduces_cubics_exactly() {
        let xs: Vec<f64> = (0..20).map(|i| (i as f64 * 0.37).powf(1.3)).collect();
        let f = |x: f64| 2.0 * x * x * x - x + 0.5;
        let ys: Vec<f64> = xs.iter().map(|&x| f(x)).collect();
        for x in [0.0, 0.1, 1.234, 3.3, xs[19]] {
            assert!((cubic(&xs, &ys, x) - f(x)).abs() < 1e-9 * f(x).abs().max(1.0));
        }
    }

    #[test]
    fn short_inputs_fall_back_to_lower_order() {
        assert_eq!(cubic(&[1.0], &[5.0], 3.0), 5.0);
        assert!((cubic(&[0.0, 1.0], &[0.0, 2.0], 0.25) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn smooth_functions_converge_at_fourth_order() {
        let err = |n: usize| {
            let xs: Vec<f64> = (0..=n).map(|i| i as f64 / n as f64).collect();
            let ys: Vec<f64> = xs.iter().map(|x| x.sin()).collect();
            (0..997)
                .map(|k| k as f64 / 996.0)
                .map(|x| (cubic(&xs, &ys, x) - x.sin()).abs())
                .fold(0.0, f64::max)
        };
        let ratio = err(20) / err(40);
        assert!(ratio > 12.0, "{ratio}");
    }
}
