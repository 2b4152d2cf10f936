//! Periodic cubic interpolating splines on `[0, 1)`.

use crate::{Error, Result};

/// Periodic cubic spline through `(t_i, y_i)` with period 1.
#[derive(Clone, Debug)]
pub struct PeriodicSpline {
    t: Vec<f64>,
    y: Vec<f64>,
    m: Vec<f64>,
}

impl PeriodicSpline {
    /// `t` must be strictly increasing inside `[0, 1)`.
    pub fn new(t: &[f64], y: &[f64]) -> Result<Self> {
        let n = t.len();
        if n < 3 || y.len() != n {
            return Err(Error::InvalidParameter(format!("spline needs >= 3 knots, got {n}")));
        }
        if t[0] < 0.0 || t[n - 1] >= 1.0 || t.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidParameter("spline knots must increase inside [0, 1)".into()));
        }
        let h: Vec<f64> = (0..n).map(|i| if i + 1 < n { t[i + 1] - t[i] } else { t[0] + 1.0 - t[i] }).collect();
        let mut sub = vec![0.0; n];
        let mut diag = vec![0.0; n];
        let mut sup = vec![0.0; n];
        let mut rhs = vec![0.0; n];
        for i in 0..n {
            let ip = (i + 1) % n;
            let im = (i + n - 1) % n;
            sub[i] = h[im];
            diag[i] = 2.0 * (h[im] + h[i]);
            sup[i] = h[i];
            rhs[i] = 6.0 * ((y[ip] - y[i]) / h[i] - (y[i] - y[im]) / h[im]);
        }
        let m = solve_cyclic(&sub, &diag, &sup, &rhs);
        Ok(PeriodicSpline { t: t.to_vec(), y: y.to_vec(), m })
    }

    pub fn eval(&self, s: f64) -> f64 {
        let n = self.t.len();
        let s = s.rem_euclid(1.0);
        // interval i with t_i <= s < t_{i+1}, wrapping below t_0
        let (i, x0) = match self.t.partition_point(|&k| k <= s) {
            0 => (n - 1, self.t[n - 1] - 1.0),
            k => (k - 1, self.t[k - 1]),
        };
        let ip = (i + 1) % n;
        let x1 = if ip == 0 { self.t[0] + 1.0 } else { self.t[ip] };
        let h = x1 - x0;
        let (a, b) = ((x1 - s) / h, (s - x0) / h);
        a * self.y[i]
            + b * self.y[ip]
            + ((a * a * a - a) * self.m[i] + (b * b * b - b) * self.m[ip]) * h * h / 6.0
    }
}

/// Cyclic tridiagonal solve (Sherman–Morrison on the Thomas algorithm).
fn solve_cyclic(sub: &[f64], diag: &[f64], sup: &[f64], rhs: &[f64]) -> Vec<f64> {
    let n = diag.len();
    let alpha = sup[n - 1]; // bottom-left corner
    let beta = sub[0]; // top-right corner
    let gamma = -diag[0];
    let mut d = diag.to_vec();
    d[0] -= gamma;
    d[n - 1] -= alpha * beta / gamma;
    let x = thomas(sub, &d, sup, rhs);
    let mut u = vec![0.0; n];
    u[0] = gamma;
    u[n - 1] = alpha;
    let z = thomas(sub, &d, sup, &u);
    let fact = (x[0] + beta * x[n - 1] / gamma) / (1.0 + z[0] + beta * z[n - 1] / gamma);
    x.iter().zip(&z).map(|(xi, zi)| xi - fact * zi).collect()
}

fn thomas(sub: &[f64], diag: &[f64], sup: &[f64], rhs: &[f64]) -> Vec<f64> {
    let n = diag.len();
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    c[0] = sup[0] / diag[0];
    d[0] = rhs[0] / diag[0];
    for i in 1..n {
        let den = diag[i] - sub[i] * c[i - 1];
        c[i] = sup[i] / den;
        d[i] = (rhs[i] - sub[i] * d[i - 1]) / den;
    }
    let mut x = vec![0.0; n];
    x[n - 1] = d[n - 1];
    for i in (0..n - 1).rev() {
        x[i] = d[i] - c[i] * x[i + 1];
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    #[test]
    fn reproduces_knot_values() {
        let t = [0.0, 0.1, 0.35, 0.5, 0.8];
        let y = [1.0, -2.0, 0.5, 3.0, 0.0];
        let s = PeriodicSpline::new(&t, &y).unwrap();
        for (ti, yi) in t.iter().zip(&y) {
            assert!((s.eval(*ti) - yi).abs() < 1e-13);
            assert!((s.eval(*ti + 1.0) - yi).abs() < 1e-12);
        }
    }

    #[test]
    fn fourth_order_convergence_on_trig_data() {
        let f = |t: f64| (2.0 * PI * t).sin() + 0.3 * (6.0 * PI * t).cos();
        let err = |n: usize| {
            let t: Vec<f64> = (0..n).map(|i| i as f64 / n as f64).collect();
            let y: Vec<f64> = t.iter().map(|&x| f(x)).collect();
            let s = PeriodicSpline::new(&t, &y).unwrap();
            (0..1000).map(|i| (s.eval(i as f64 / 1000.0 + 1e-4) - f(i as f64 / 1000.0 + 1e-4)).abs()).fold(0.0, f64::max)
        };
        let (e1, e2) = (err(32), err(64));
        assert!(e2 < e1 / 12.0, "{e1} {e2}");
    }

    #[test]
    fn rejects_bad_knots() {
        assert!(PeriodicSpline::new(&[0.0, 0.5], &[1.0, 2.0]).is_err());
        assert!(PeriodicSpline::new(&[0.0, 0.5, 0.4], &[1.0, 2.0, 3.0]).is_err());
        assert!(PeriodicSpline::new(&[0.0, 0.5, 1.0], &[1.0, 2.0, 3.0]).is_err());
    }

    proptest! {
        #[test]
        fn constants_are_reproduced(c in -10.0f64..10.0, s in 0.0f64..1.0) {
            let t = [0.0, 0.2, 0.25, 0.7];
            let sp = PeriodicSpline::new(&t, &[c; 4]).unwrap();
            prop_assert!((sp.eval(s) - c).abs() < 1e-12);
        }
    }
}
