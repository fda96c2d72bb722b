//! Numeric realization of the quotient and the contracting diagonal flow:
//! closed-form flow maps, fundamental-domain normalization, attractor
//! rate fits, and the exact symbolic action invariants.

use std::collections::BTreeMap;

use num::complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};
use thiserror::Error;

use crate::algebra::{print_expr, CoeffElem, ExpContext, Gen, ScaleGen};
use crate::exterior::{DiagonalAction, DifferentialForm, VectorField};
use crate::models::ExampleSpec;
use crate::numeric::{eval_coeff, linear_fit, NumPoint, ScaleVals};

#[derive(Error, Debug, Clone, PartialEq)]
pub enum DynamicsError {
    #[error("quotient parameters must satisfy 4*beta < alpha < 0")]
    BadQuotientParams,
    #[error("empty run: at least one seed is required")]
    EmptyRun,
    #[error("section undefined: state near the fixed-set fiber (z4 = 0)")]
    SectionUndefined,
    #[error("seed {seed}: defining-function residual {residual} breached the threshold")]
    ResidualBreach { seed: usize, residual: f64 },
}

/// A numeric point on the hypersurface, carrying the transverse graph value
/// so the defining-function residual is observable.
#[derive(Clone, Debug)]
pub struct FlowState {
    pub t: f64,
    pub imw: f64,
    pub z: Vec<Complex64>,
}

impl FlowState {
    pub fn residual(&self, rho: &CoeffElem) -> f64 {
        let val = eval_coeff(
            rho,
            &NumPoint::new(self.t, self.z.clone()),
            &ScaleVals::unit(),
        );
        (self.imw - val.re).abs() + val.im.abs()
    }
}

/// Closed-form contracting flow `phi_tau`: each coordinate scales by
/// `e^{-tau k}` with `k` its s-weight. No integrator drift.
pub fn flow(action: &DiagonalAction, state: &FlowState, tau: f64) -> FlowState {
    let (tf, zf) = action.numeric_factors(-tau, 0.0);
    FlowState {
        t: state.t * tf,
        imw: state.imw * tf,
        z: state
            .z
            .iter()
            .zip(&zf)
            .map(|(z, &f)| z * f)
            .collect(),
    }
}

/// One application of the deck transformation with parameters
/// `(s, a) = (e^beta, e^alpha)`, iterated `k` times.
pub fn deck(action: &DiagonalAction, state: &FlowState, alpha: f64, beta: f64, k: i64) -> FlowState {
    let (tf, zf) = action.numeric_factors(beta * k as f64, alpha * k as f64);
    FlowState {
        t: state.t * tf,
        imw: state.imw * tf,
        z: state
            .z
            .iter()
            .zip(&zf)
            .map(|(z, &f)| z * f)
            .collect(),
    }
}

/// Quotient parameters and the annulus window used to normalize `|z4|`.
#[derive(Clone, Copy, Debug)]
pub struct QuotientSpec {
    pub alpha: f64,
    pub beta: f64,
    pub window_center: f64,
}

impl QuotientSpec {
    pub fn new(alpha: f64, beta: f64) -> Result<Self, DynamicsError> {
        if !(4.0 * beta < alpha && alpha < 0.0) {
            return Err(DynamicsError::BadQuotientParams);
        }
        Ok(QuotientSpec {
            alpha,
            beta,
            window_center: 1.0,
        })
    }

    fn in_window(&self, r: f64) -> bool {
        let c = self.window_center;
        r >= c * self.alpha.exp() && r < c
    }
}

/// Bring `|z_section|` into the half-open annulus `[c e^alpha, c)` by a deck
/// power; the power is unique. The section coordinate is the deck-scaled
/// direction fixed by the flow (index `arity - 1` for the compact family).
pub fn normalize(
    spec: &ExampleSpec,
    q: &QuotientSpec,
    state: &FlowState,
) -> Result<(FlowState, i64), DynamicsError> {
    let section = spec.arity - 1;
    let r = state.z[section].norm();
    if r < 1e-300 {
        return Err(DynamicsError::SectionUndefined);
    }
    // deck scales the section coordinate by e^alpha per application
    let mut k = ((r / q.window_center).ln() / (-q.alpha)).floor() as i64 + 1;
    let mut out = deck(&spec.action, state, q.alpha, q.beta, k);
    for _ in 0..4 {
        let rr = out.z[section].norm();
        if q.in_window(rr) {
            return Ok((out, k));
        }
        k += if rr >= q.window_center { 1 } else { -1 };
        out = deck(&spec.action, state, q.alpha, q.beta, k);
    }
    Ok((out, k))
}

#[derive(Clone, Debug, Serialize)]
pub struct RateFit {
    pub rate: f64,
    pub expected: f64,
    pub r_squared: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct AttractorReport {
    pub schema: u32,
    pub seeds: usize,
    pub tau_end: f64,
    pub sample_dt: f64,
    pub alpha: f64,
    pub beta: f64,
    pub rates: BTreeMap<String, RateFit>,
    pub residual_max: f64,
    /// Sum of the coordinate weights (coordinate-measure log-rate).
    pub coordinate_volume_rate: f64,
    /// Contraction rate of the contact volume from the symbolic identity.
    pub contact_volume_rate_symbolic: f64,
    /// `rate_t + 2 sum_j rate_{z_j}` from the fitted decay rates.
    pub contact_volume_rate_numeric: f64,
    pub pass: bool,
}

/// Sample seeds on the hypersurface, run the closed-form flow, and fit
/// per-coordinate decay rates of `log |coordinate|` against `tau` over the
/// second half of the run.
pub fn attractor_report(
    spec: &ExampleSpec,
    q: &QuotientSpec,
    seeds: usize,
    tau_end: f64,
    sample_dt: f64,
    rng_seed: u64,
) -> Result<AttractorReport, DynamicsError> {
    if seeds == 0 {
        return Err(DynamicsError::EmptyRun);
    }
    let n = spec.arity;
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let mut residual_max = 0.0f64;
    let nsteps = (tau_end / sample_dt).round() as usize;
    let fit_from = nsteps / 2;

    // per-coordinate accumulated fits (averaged over seeds)
    let mut rate_sums = vec![0.0f64; n + 1];
    let mut r2_mins = vec![1.0f64; n + 1];

    for seed_idx in 0..seeds {
        let state0 = sample_seed(spec, q, &mut rng);
        let mut taus = Vec::with_capacity(nsteps - fit_from + 1);
        let mut logs: Vec<Vec<f64>> = vec![Vec::new(); n + 1];
        for k in 0..=nsteps {
            let tau = k as f64 * sample_dt;
            let st = flow(&spec.action, &state0, tau);
            let res = st.residual(&spec.rho);
            residual_max = residual_max.max(res);
            if res > 1e-9 {
                return Err(DynamicsError::ResidualBreach {
                    seed: seed_idx,
                    residual: res,
                });
            }
            if k >= fit_from {
                taus.push(tau);
                logs[0].push(st.t.abs().ln());
                for j in 0..n {
                    logs[1 + j].push(st.z[j].norm().ln());
                }
            }
        }
        for c in 0..=n {
            let (slope, _, r2) = linear_fit(&taus, &logs[c]);
            rate_sums[c] += -slope;
            r2_mins[c] = r2_mins[c].min(r2);
        }
    }

    let mut rates = BTreeMap::new();
    let mut pass = true;
    let mut numeric_volume = 0.0;
    let expected_t = spec.action.t_w.0 as f64;
    for c in 0..=n {
        let rate = rate_sums[c] / seeds as f64;
        let expected = if c == 0 {
            expected_t
        } else {
            spec.action.z_w[c - 1].0 as f64
        };
        let ok = if expected.abs() > 0.0 {
            (rate - expected).abs() <= 0.01 * expected.abs()
        } else {
            rate.abs() <= 0.01
        };
        pass = pass && ok;
        numeric_volume += if c == 0 { rate } else { 2.0 * rate };
        rates.insert(
            if c == 0 {
                "t".to_string()
            } else {
                format!("z{}", c)
            },
            RateFit {
                rate,
                expected,
                r_squared: r2_mins[c],
            },
        );
    }

    let coordinate_volume_rate: f64 = -(expected_t
        + spec.action.z_w.iter().map(|w| w.0 as f64).sum::<f64>());
    let symbolic = contact_volume_rate(spec);
    let contact_ok = (numeric_volume - (-symbolic)).abs() <= 0.01 * symbolic.abs();
    pass = pass && contact_ok;

    Ok(AttractorReport {
        schema: 1,
        seeds,
        tau_end,
        sample_dt,
        alpha: q.alpha,
        beta: q.beta,
        rates,
        residual_max,
        coordinate_volume_rate,
        contact_volume_rate_symbolic: symbolic,
        contact_volume_rate_numeric: -numeric_volume,
        pass,
    })
}

fn sample_seed(spec: &ExampleSpec, q: &QuotientSpec, rng: &mut ChaCha8Rng) -> FlowState {
    let n = spec.arity;
    let mut z = Vec::with_capacity(n);
    for j in 0..n {
        let (lo, hi) = if j == n - 1 {
            // keep the section coordinate inside the annulus window
            let lo = q.window_center * q.alpha.exp() * 1.05;
            (lo, q.window_center * 0.95)
        } else {
            (0.3, 1.0)
        };
        let r = rng.gen_range(lo..hi);
        let phase = rng.gen_range(0.0..std::f64::consts::TAU);
        z.push(Complex64::from_polar(r, phase));
    }
    let sign = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
    let t = sign * rng.gen_range(0.5..1.5);
    let imw = eval_coeff(&spec.rho, &NumPoint::new(t, z.clone()), &ScaleVals::unit()).re;
    FlowState { t, imw, z }
}

/// Exact symbolic rate of the contact volume under the flow generator:
/// `L_X (theta ^ (dtheta)^n) = lambda * theta ^ (dtheta)^n`.
pub fn contact_volume_rate(spec: &ExampleSpec) -> f64 {
    let s = &spec.structure;
    let ctx = &s.ctx;
    let mut vol = s.theta.clone();
    let dtheta = s.theta.d(ctx);
    for _ in 0..spec.arity {
        vol = vol.wedge(&dtheta);
    }
    let lie = vol.lie_derive(&spec.flow_generator, ctx);
    let (_, vc) = vol.terms().next().expect("volume form is nonzero");
    let (_, lc) = match lie.terms().next() {
        Some(x) => x,
        None => return 0.0,
    };
    let ratio = lc
        .constant_ratio_to(vc)
        .expect("volume contraction must be a constant multiple");
    debug_assert!(lie == vol.mul_coeff(&CoeffElem::constant(spec.arity, ratio.clone())));
    ratio.to_complex64().re
}

/// Sampled trajectory rows for CSV emission.
#[derive(Clone, Debug)]
pub struct TrajectorySample {
    pub tau: f64,
    pub state: FlowState,
    pub residual: f64,
    pub deck_power: i64,
}

pub fn trajectory(
    spec: &ExampleSpec,
    q: &QuotientSpec,
    state0: &FlowState,
    tau_end: f64,
    dt: f64,
) -> Result<Vec<TrajectorySample>, DynamicsError> {
    let nsteps = (tau_end / dt).round() as usize;
    let mut out = Vec::with_capacity(nsteps + 1);
    for k in 0..=nsteps {
        let tau = k as f64 * dt;
        let st = flow(&spec.action, state0, tau);
        let residual = st.residual(&spec.rho);
        let (nst, kdeck) = normalize(spec, q, &st)?;
        out.push(TrajectorySample {
            tau,
            state: nst,
            residual,
            deck_power: kdeck,
        });
    }
    Ok(out)
}

pub fn write_trajectory_csv(
    samples: &[TrajectorySample],
    out: &mut dyn std::io::Write,
) -> std::io::Result<()> {
    let n = samples.first().map(|s| s.state.z.len()).unwrap_or(0);
    let mut header = vec!["tau".to_string(), "t".to_string()];
    for j in 1..=n {
        header.push(format!("z{}_re", j));
        header.push(format!("z{}_im", j));
    }
    header.push("residual".into());
    header.push("deck_power".into());
    writeln!(out, "{}", header.join(","))?;
    for s in samples {
        let mut row = vec![format!("{:.17e}", s.tau), format!("{:.17e}", s.state.t)];
        for z in &s.state.z {
            row.push(format!("{:.17e}", z.re));
            row.push(format!("{:.17e}", z.im));
        }
        row.push(format!("{:.3e}", s.residual));
        row.push(format!("{}", s.deck_power));
        writeln!(out, "{}", row.join(","))?;
    }
    Ok(())
}

/// Fourth-order integrator cross-check of the closed-form flow, for pipeline
/// validation: integrates the linear vector field and reports the largest
/// coordinate defect against the exact exponential map.
pub fn flow_rk4_crosscheck(spec: &ExampleSpec, state: &FlowState, tau: f64, steps: usize) -> f64 {
    let n = spec.arity;
    let tw = spec.action.t_w.0 as f64;
    let zw: Vec<f64> = spec.action.z_w.iter().map(|w| w.0 as f64).collect();
    let mut y = vec![state.t];
    for z in &state.z {
        y.push(z.re);
        y.push(z.im);
    }
    let f = |_x: f64, y: &[f64]| -> Vec<f64> {
        let mut d = vec![-tw * y[0]];
        for j in 0..n {
            d.push(-zw[j] * y[1 + 2 * j]);
            d.push(-zw[j] * y[2 + 2 * j]);
        }
        d
    };
    let h = tau / steps as f64;
    for _ in 0..steps {
        y = crate::numeric::rk4_step(&f, 0.0, &y, h);
    }
    let exact = flow(&spec.action, state, tau);
    let mut defect = (y[0] - exact.t).abs();
    for j in 0..n {
        defect = defect.max((Complex64::new(y[1 + 2 * j], y[2 + 2 * j]) - exact.z[j]).norm());
    }
    defect
}

/// One named exact check of the action invariants.
#[derive(Clone, Debug, Serialize)]
pub struct ActionCheck {
    pub identity: String,
    pub status: String,
    pub residual: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct ActionReport {
    pub checks: Vec<ActionCheck>,
}

impl ActionReport {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.status == "exact-pass")
    }
}

fn push_check(checks: &mut Vec<ActionCheck>, identity: &str, ok: bool, residual: String) {
    checks.push(ActionCheck {
        identity: identity.into(),
        status: if ok { "exact-pass" } else { "fail" }.into(),
        residual,
    });
}

/// Exact symbolic verification of the action identities: quasi-invariance of
/// the defining function, the homothety law of the contact form, flow/deck
/// commutation, the infinitesimal homothety, and frame stability of the
/// generator.
pub fn verify_action_invariants(spec: &ExampleSpec) -> ActionReport {
    let n = spec.arity;
    let s = &spec.structure;
    let ctx = &s.ctx;
    let w0 = spec.action.t_w.0;
    let mut checks = Vec::new();

    // r o Gamma = s^{w0} r
    let r_pulled = spec.action.apply_coeff(&spec.defining);
    let r_scaled = &spec.defining * &CoeffElem::scale_pow(n, ScaleGen::S, w0);
    let res = &r_pulled - &r_scaled;
    push_check(
        &mut checks,
        &format!("r o Gamma == s^{} * r", w0),
        res.is_zero(),
        print_expr(&res),
    );

    // Gamma^* theta = s^{w0} theta
    let pulled = s.theta.pullback(&spec.action);
    let scaled = s
        .theta
        .mul_coeff(&CoeffElem::scale_pow(n, ScaleGen::S, w0));
    let res = pulled.sub(&scaled);
    push_check(
        &mut checks,
        &format!("Gamma^* theta == s^{} * theta", w0),
        res.is_zero(),
        format!("{}", res),
    );

    // flow and deck commute: weight tables compose additively
    let fw = flow_weight_table(&spec.action);
    let ab = spec.action.compose(&fw);
    let ba = fw.compose(&spec.action);
    push_check(
        &mut checks,
        "flow and deck commute",
        ab == ba,
        if ab == ba { "0".into() } else { "weight tables differ".into() },
    );

    // L_X theta = -w0 theta
    let lie = s.theta.lie_derive(&spec.flow_generator, ctx);
    let res = lie.sub(&s.theta.mul_scalar_int(-w0));
    push_check(
        &mut checks,
        &format!("L_X theta == {} * theta", -w0),
        res.is_zero(),
        format!("{}", res),
    );

    // [X, Z_a] lies in the holomorphic frame span with constant coefficients
    let mut span_ok = true;
    let mut span_res = String::from("0");
    for a in 0..n {
        let br = spec.flow_generator.bracket(&s.frame[a], ctx);
        let mut recon = VectorField::zero(n);
        let mut constant = true;
        for b in 0..n {
            let cb = br.component(Gen::Z(b));
            if cb.is_zero() {
                continue;
            }
            if cb.as_constant().is_none() {
                constant = false;
                break;
            }
            recon = recon.add(&s.frame[b].mul_coeff(&cb));
        }
        if !constant || recon != br {
            span_ok = false;
            span_res = format!("[X, Z{}] leaves the frame span", a + 1);
            break;
        }
    }
    push_check(
        &mut checks,
        "[X, Z_a] in span{Z_b} with constant coefficients",
        span_ok,
        span_res,
    );

    ActionReport { checks }
}

/// The flow `phi_tau = Gamma at (s = e^{-tau}, a = 1)` as a weight table in
/// an auxiliary parameter; for commutation bookkeeping only the additive
/// structure matters, so reuse the s-column with the a-column cleared.
fn flow_weight_table(action: &DiagonalAction) -> DiagonalAction {
    DiagonalAction::new(
        (action.t_w.0, 0),
        action.z_w.iter().map(|&(k, _)| (k, 0)).collect(),
    )
}

pub fn report_to_json(report: &AttractorReport) -> Value {
    serde_json::to_value(report).unwrap_or_else(|_| json!({}))
}

/// Evaluate a differential form's coefficients numerically along the flow and
/// compare the finite-difference pullback derivative against the symbolic Lie
/// derivative at a point. Returns the largest componentwise defect.
pub fn cartan_flow_crosscheck(
    theta: &DifferentialForm,
    action: &DiagonalAction,
    x: &VectorField,
    ctx: &ExpContext,
    point: &NumPoint,
    eps: f64,
) -> f64 {
    let n = theta.arity();
    let lie = theta.lie_derive(x, ctx);
    let sv = ScaleVals::unit();
    let mut defect = 0.0f64;
    // phi_eps^* theta coefficients: scale factor per covector times value at
    // the flowed point
    let flowed = |tau: f64| -> (NumPoint, f64, Vec<f64>) {
        let (tf, zf) = action.numeric_factors(-tau, 0.0);
        let p = NumPoint::new(
            point.t * tf,
            point.z.iter().zip(&zf).map(|(z, &f)| z * f).collect(),
        );
        (p, tf, zf)
    };
    for gi in 0u8..(2 * n + 1) as u8 {
        let g = match gi {
            0 => Gen::T,
            _ if (gi as usize) <= n => Gen::Z(gi as usize - 1),
            _ => Gen::Zb(gi as usize - 1 - n),
        };
        let comp = theta.component(g);
        let factor = |tpt: &(NumPoint, f64, Vec<f64>)| -> Complex64 {
            let scale = match g {
                Gen::T => tpt.1,
                Gen::Z(j) | Gen::Zb(j) => tpt.2[j],
            };
            eval_coeff(&comp, &tpt.0, &sv) * scale
        };
        let plus = factor(&flowed(eps));
        let minus = factor(&flowed(-eps));
        let fd = (plus - minus) / (2.0 * eps);
        let sym = eval_coeff(&lie.component(g), point, &sv);
        defect = defect.max((fd - sym).norm());
    }
    defect
}
