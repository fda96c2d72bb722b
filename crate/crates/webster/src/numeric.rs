//! Floating-point evaluation of exact data at numeric points, plus small
//! numeric utilities (least-squares fits, RK4 steps).

use num::complex::Complex64;
use num::ToPrimitive;

use crate::algebra::{CoeffElem, Gen};
use crate::exterior::VectorField;

/// A numeric point of `R x C^n` in chart coordinates.
#[derive(Clone, Debug)]
pub struct NumPoint {
    pub t: f64,
    pub z: Vec<Complex64>,
}

impl NumPoint {
    pub fn new(t: f64, z: Vec<Complex64>) -> Self {
        NumPoint { t, z }
    }
}

/// Values assigned to the formal units during evaluation. `s` and `a` are
/// positive scales; an active exponent function realizes `E = e^Ups(point)`.
#[derive(Clone, Copy)]
pub struct ScaleVals<'a> {
    pub s: f64,
    pub a: f64,
    pub upsilon: Option<&'a CoeffElem>,
}

impl<'a> ScaleVals<'a> {
    pub fn unit() -> Self {
        ScaleVals {
            s: 1.0,
            a: 1.0,
            upsilon: None,
        }
    }
}

pub fn eval_coeff(c: &CoeffElem, p: &NumPoint, sv: &ScaleVals) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for (m, g) in c.terms() {
        let mut v = g.to_complex64();
        if m.t != 0 {
            v *= Complex64::new(p.t, 0.0).powi(m.t as i32);
        }
        for (j, &k) in m.z.iter().enumerate() {
            if k != 0 {
                v *= p.z[j].powi(k as i32);
            }
        }
        for (j, &k) in m.zb.iter().enumerate() {
            if k != 0 {
                v *= p.z[j].conj().powi(k as i32);
            }
        }
        if m.s != 0 {
            v *= sv.s.powi(m.s as i32);
        }
        if m.a != 0 {
            v *= sv.a.powi(m.a as i32);
        }
        if m.e != 0 {
            let ups = sv
                .upsilon
                .expect("exponentially graded coefficient evaluated without an exponent");
            let uval = eval_coeff(
                ups,
                p,
                &ScaleVals {
                    s: sv.s,
                    a: sv.a,
                    upsilon: None,
                },
            );
            v *= (uval * m.e.to_f64().unwrap()).exp();
        }
        acc += v;
    }
    acc
}

/// Components of a vector field at a point, ordered `d/dt, d/dz_j, d/dzb_j`.
pub fn eval_field(x: &VectorField, p: &NumPoint, sv: &ScaleVals) -> Vec<Complex64> {
    let n = x.arity();
    let mut out = vec![Complex64::new(0.0, 0.0); 2 * n + 1];
    for (g, c) in x.components() {
        let idx = match g {
            Gen::T => 0,
            Gen::Z(j) => 1 + j,
            Gen::Zb(j) => 1 + n + j,
        };
        out[idx] = eval_coeff(c, p, sv);
    }
    out
}

/// Ordinary least squares for `y ~ slope * x + intercept`, with R^2.
/// A constant series reports R^2 = 1 (the fit is exact).
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    assert!(xs.len() == ys.len() && xs.len() >= 2);
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_tot: f64 = ys.iter().map(|y| (y - my) * (y - my)).sum();
    let ss_res: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| {
            let e = y - (slope * x + intercept);
            e * e
        })
        .sum();
    let r2 = if ss_tot < 1e-30 {
        1.0
    } else {
        1.0 - ss_res / ss_tot
    };
    (slope, intercept, r2)
}

/// One classical fourth-order step of `y' = f(x, y)` on a real parameter.
pub fn rk4_step(f: &dyn Fn(f64, &[f64]) -> Vec<f64>, x: f64, y: &[f64], h: f64) -> Vec<f64> {
    let k1 = f(x, y);
    let y2: Vec<f64> = y.iter().zip(&k1).map(|(a, b)| a + 0.5 * h * b).collect();
    let k2 = f(x + 0.5 * h, &y2);
    let y3: Vec<f64> = y.iter().zip(&k2).map(|(a, b)| a + 0.5 * h * b).collect();
    let k3 = f(x + 0.5 * h, &y3);
    let y4: Vec<f64> = y.iter().zip(&k3).map(|(a, b)| a + h * b).collect();
    let k4 = f(x + h, &y4);
    y.iter()
        .enumerate()
        .map(|(i, a)| a + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
        .collect()
}
