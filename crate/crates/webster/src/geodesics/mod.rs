//! Complex null curves and geodesics: symbolic leaf verification, numeric
//! integration of the parallel-tangent equations, affine and projective
//! parameters, and the quotient multiplier invariant.

pub mod schwarzian;

use num::complex::Complex64;
use num::{BigInt, BigRational, Zero};
use thiserror::Error;

use crate::algebra::{print_expr, CoeffElem, GaussianRational, Gen};
use crate::exterior::VectorField;
use crate::numeric::{eval_coeff, NumPoint, ScaleVals};
use crate::pseudohermitian::{Connection, PHStructure};

#[derive(Error, Debug, Clone, PartialEq)]
pub enum GeodesicError {
    #[error("constant map has no Schwarzian derivative")]
    ConstantMap,
    #[error("division by the zero rational function")]
    DivisionByZero,
    #[error("Moebius matrix is singular")]
    SingularMobius,
    #[error("pole crossed near z = {re} + {im}i")]
    PoleCrossed { re: f64, im: f64 },
    #[error("step too large: the linear system is blowing up")]
    StepTooLarge,
    #[error("empty integration path")]
    EmptyPath,
    #[error("tangent is not null: |h(v, vbar)| = {defect}")]
    NotNull { defect: f64 },
    #[error("degenerate tangent: zero vector supplied")]
    DegenerateTangent,
    #[error("defining-function residual {residual} exceeded the abort threshold")]
    ResidualBlowup { residual: f64 },
    #[error("leaf verification failed: {0}")]
    LeafCheck(String),
    #[error("quotient multiplier requires beta < 0, got {0}")]
    NonContractingMultiplier(String),
}

/// One named symbolic check with its residual, printed exactly.
#[derive(Clone, Debug)]
pub struct SymbolicCheck {
    pub name: String,
    pub ok: bool,
    pub residual: String,
}

impl SymbolicCheck {
    fn of(name: &str, residual_zero: bool, residual: String) -> Self {
        SymbolicCheck {
            name: name.into(),
            ok: residual_zero,
            residual,
        }
    }
}

/// Report of the symbolic leaf-geodesic verification for a frame direction.
#[derive(Clone, Debug)]
pub struct LeafGeodesicReport {
    pub checks: Vec<SymbolicCheck>,
    /// Holomorphic factor `u` in `nabla_Z Z = u Z`, when all checks pass.
    pub u: Option<CoeffElem>,
}

impl LeafGeodesicReport {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.ok)
    }
}

/// Check that a type-(1,0) field generates complex null geodesics:
/// `theta(Z) = 0`, `h(Z, Zbar) = 0`, `[Z, Zbar] = 0`, `nabla_{Zbar} Z = 0`,
/// and `nabla_Z Z = u Z` with `u` extracted.
pub fn verify_leaf_geodesic(
    s: &PHStructure,
    conn: &Connection,
    z: &VectorField,
) -> LeafGeodesicReport {
    let n = s.arity;
    let ctx = &s.ctx;
    let mut checks = Vec::new();

    let type10 = z.is_type_10();
    checks.push(SymbolicCheck::of(
        "type (1,0)",
        type10,
        if type10 { "0".into() } else { "has dzb components".into() },
    ));
    let contact = s.theta.evaluate(&[z]);
    checks.push(SymbolicCheck::of(
        "theta(Z) == 0",
        contact.is_zero(),
        print_expr(&contact),
    ));

    // frame components c^a = theta^a(Z)
    let comps: Vec<CoeffElem> = (0..n).map(|a| s.coframe[a].evaluate(&[z])).collect();
    let mut null = CoeffElem::zero(n);
    for a in 0..n {
        for b in 0..n {
            let h = s.levi.entry(a, b);
            if h.is_zero() {
                continue;
            }
            null = &null + &(&(&comps[a] * &comps[b].conj()) * h);
        }
    }
    checks.push(SymbolicCheck::of(
        "h(Z, Zbar) == 0",
        null.is_zero(),
        print_expr(&null),
    ));

    let bracket = z.bracket(&z.conj(), ctx);
    checks.push(SymbolicCheck::of(
        "[Z, Zbar] == 0",
        bracket.is_zero(),
        format!("{}", bracket.to_json()),
    ));

    // nabla_{Zbar} Z = (Zbar(c^b) + c^a omega_a^b(Zbar)) Z_b
    let zbar = z.conj();
    let mut dbar_ok = true;
    let mut dbar_res = String::from("0");
    for b in 0..n {
        let mut acc = zbar.apply(&comps[b], ctx);
        for a in 0..n {
            if comps[a].is_zero() {
                continue;
            }
            let om = conn.omega[a][b].evaluate(&[&zbar]);
            if om.is_zero() {
                continue;
            }
            acc = &acc + &(&comps[a] * &om);
        }
        if !acc.is_zero() {
            dbar_ok = false;
            dbar_res = format!("component {}: {}", b + 1, print_expr(&acc));
            break;
        }
    }
    checks.push(SymbolicCheck::of("nabla_Zbar Z == 0", dbar_ok, dbar_res));

    // nabla_Z Z = w^b Z_b must be proportional to Z
    let w: Vec<CoeffElem> = (0..n)
        .map(|b| {
            let mut acc = z.apply(&comps[b], ctx);
            for a in 0..n {
                if comps[a].is_zero() {
                    continue;
                }
                let om = conn.omega[a][b].evaluate(&[z]);
                if om.is_zero() {
                    continue;
                }
                acc = &acc + &(&comps[a] * &om);
            }
            acc
        })
        .collect();
    let mut u = None;
    let mut prop_ok = false;
    let mut prop_res = String::from("no invertible tangent component");
    if let Some(pivot) = (0..n).find(|&b| comps[b].as_constant().map(|c| !c.is_zero()).unwrap_or(false))
    {
        let cinv = comps[pivot].as_constant().unwrap().inv().unwrap();
        let cand = w[pivot].scale(&cinv);
        prop_ok = (0..n).all(|b| (&comps[b] * &cand) == w[b]);
        prop_res = if prop_ok {
            "0".into()
        } else {
            "nabla_Z Z is not proportional to Z".into()
        };
        if prop_ok {
            u = Some(cand);
        }
    }
    checks.push(SymbolicCheck::of("nabla_Z Z == u Z", prop_ok, prop_res));

    LeafGeodesicReport { checks, u }
}

/// A numerically integrated complex null curve, sampled on a parameter grid.
#[derive(Clone, Debug)]
pub struct NullCurve {
    pub samples: Vec<GeodesicSample>,
    pub max_residual: f64,
    pub max_null_defect: f64,
    /// Endpoint discrepancy between the two axis orderings of the complex
    /// parameter integration.
    pub commutation_defect: f64,
}

#[derive(Clone, Debug)]
pub struct GeodesicSample {
    pub zeta: Complex64,
    pub t: f64,
    pub imw: f64,
    pub z: Vec<Complex64>,
    pub tangent: Vec<Complex64>,
    pub residual: f64,
    pub null_defect: f64,
}

impl NullCurve {
    pub fn write_csv(&self, out: &mut dyn std::io::Write) -> std::io::Result<()> {
        let n = self.samples.first().map(|s| s.z.len()).unwrap_or(0);
        let mut header = vec!["zeta_re".to_string(), "zeta_im".to_string(), "t".to_string()];
        for j in 1..=n {
            header.push(format!("z{}_re", j));
            header.push(format!("z{}_im", j));
        }
        header.push("residual_r".into());
        header.push("null_defect".into());
        writeln!(out, "{}", header.join(","))?;
        for s in &self.samples {
            let mut row = vec![
                format!("{:.17e}", s.zeta.re),
                format!("{:.17e}", s.zeta.im),
                format!("{:.17e}", s.t),
            ];
            for z in &s.z {
                row.push(format!("{:.17e}", z.re));
                row.push(format!("{:.17e}", z.im));
            }
            row.push(format!("{:.3e}", s.residual));
            row.push(format!("{:.3e}", s.null_defect));
            writeln!(out, "{}", row.join(","))?;
        }
        Ok(())
    }
}

/// Parallel-tangent integrator. Carries the chart point, the graph value of
/// the transverse coordinate (for the defining-function residual), and the
/// frame components of the tangent.
pub struct GeodesicIntegrator<'a> {
    s: &'a PHStructure,
    /// `G[r][a][b] = omega_a^b(Z_r)`, `Gb[r][a][b] = omega_a^b(Zbar_r)`.
    g: Vec<Vec<Vec<CoeffElem>>>,
    gb: Vec<Vec<Vec<CoeffElem>>>,
    /// `d/dt` component of each frame field.
    frame_t: Vec<CoeffElem>,
    rho: Option<&'a CoeffElem>,
    abort_residual: f64,
}

impl<'a> GeodesicIntegrator<'a> {
    pub fn new(s: &'a PHStructure, conn: &Connection, rho: Option<&'a CoeffElem>) -> Self {
        let n = s.arity;
        let g = (0..n)
            .map(|r| {
                (0..n)
                    .map(|a| {
                        (0..n)
                            .map(|b| conn.omega[a][b].evaluate(&[&s.frame[r]]))
                            .collect()
                    })
                    .collect()
            })
            .collect();
        let gb = (0..n)
            .map(|r| {
                (0..n)
                    .map(|a| {
                        (0..n)
                            .map(|b| conn.omega[a][b].evaluate(&[&s.frame_bar[r]]))
                            .collect()
                    })
                    .collect()
            })
            .collect();
        let frame_t = (0..n).map(|a| s.frame[a].component(Gen::T)).collect();
        GeodesicIntegrator {
            s,
            g,
            gb,
            frame_t,
            rho,
            abort_residual: 1e-6,
        }
    }

    fn null_defect(&self, p: &NumPoint, v: &[Complex64]) -> f64 {
        let n = self.s.arity;
        let sv = ScaleVals::unit();
        let mut acc = Complex64::new(0.0, 0.0);
        for a in 0..n {
            for b in 0..n {
                let h = self.s.levi.entry(a, b);
                if h.is_zero() {
                    continue;
                }
                acc += eval_coeff(h, p, &sv) * v[a] * v[b].conj();
            }
        }
        acc.norm()
    }

    fn residual(&self, p: &NumPoint, imw: f64) -> f64 {
        match self.rho {
            Some(rho) => {
                let val = eval_coeff(rho, p, &ScaleVals::unit());
                (imw - val.re).abs() + val.im.abs()
            }
            None => 0.0,
        }
    }

    /// State layout: `[t, imw, Re z.., Im z.., Re v.., Im v..]`.
    fn derivative(&self, state: &[f64], dir: Complex64) -> Vec<f64> {
        let n = self.s.arity;
        let (p, v) = unpack(state, n);
        let sv = ScaleVals::unit();
        let mut dz = vec![Complex64::new(0.0, 0.0); n];
        let mut tdot = Complex64::new(0.0, 0.0);
        for a in 0..n {
            dz[a] = dir * v[a];
            if !self.frame_t[a].is_zero() {
                tdot += dir * v[a] * eval_coeff(&self.frame_t[a], &p, &sv);
            }
        }
        let tdot = 2.0 * tdot.re;
        // imw follows the graph function along the motion
        let imw_dot = match self.rho {
            Some(rho) => {
                let mut acc = Complex64::new(0.0, 0.0);
                for j in 0..n {
                    let dj = rho.deriv(Gen::Z(j));
                    if !dj.is_zero() {
                        acc += eval_coeff(&dj, &p, &sv) * dz[j];
                    }
                }
                2.0 * acc.re
            }
            None => 0.0,
        };
        // dv^b = -v^a omega_a^b(dir gamma' + conj(dir) gammabar')
        let mut dv = vec![Complex64::new(0.0, 0.0); n];
        for b in 0..n {
            let mut acc = Complex64::new(0.0, 0.0);
            for a in 0..n {
                if v[a].norm() == 0.0 {
                    continue;
                }
                let mut om = Complex64::new(0.0, 0.0);
                for r in 0..n {
                    if !self.g[r][a][b].is_zero() {
                        om += dir * v[r] * eval_coeff(&self.g[r][a][b], &p, &sv);
                    }
                    if !self.gb[r][a][b].is_zero() {
                        om += (dir * v[r]).conj() * eval_coeff(&self.gb[r][a][b], &p, &sv);
                    }
                }
                acc += v[a] * om;
            }
            dv[b] = -acc;
        }
        pack(tdot, imw_dot, &dz, &dv)
    }

    fn step(&self, state: &[f64], dir: Complex64, h: f64) -> Vec<f64> {
        let f = |_x: f64, y: &[f64]| self.derivative(y, dir);
        crate::numeric::rk4_step(&f, 0.0, state, h)
    }

    fn walk(
        &self,
        mut state: Vec<f64>,
        dir: Complex64,
        dist: f64,
        substeps: usize,
    ) -> Result<Vec<f64>, GeodesicError> {
        let h = dist / substeps as f64;
        for _ in 0..substeps {
            state = self.step(&state, dir, h);
        }
        let n = self.s.arity;
        let (p, _) = unpack(&state, n);
        let res = self.residual(&p, state[1]);
        if res > self.abort_residual {
            return Err(GeodesicError::ResidualBlowup { residual: res });
        }
        Ok(state)
    }

    /// Integrate over the parameter square `[-w, w]^2` on a `(2g+1)^2` grid.
    /// The parameter moves first along the real axis, then imaginary; the
    /// endpoint defect of the opposite ordering is reported.
    pub fn integrate(
        &self,
        start: &NumPoint,
        v0: &[Complex64],
        half_width: f64,
        grid: usize,
        substeps_per_cell: usize,
    ) -> Result<NullCurve, GeodesicError> {
        let n = self.s.arity;
        assert_eq!(v0.len(), n);
        if v0.iter().map(|c| c.norm()).sum::<f64>() == 0.0 {
            return Err(GeodesicError::DegenerateTangent);
        }
        let defect = self.null_defect(start, v0);
        if defect > 1e-12 {
            return Err(GeodesicError::NotNull { defect });
        }
        let imw0 = match self.rho {
            Some(rho) => eval_coeff(rho, start, &ScaleVals::unit()).re,
            None => 0.0,
        };
        let state0 = pack(start.t, imw0, &start.z, v0);
        // imw0 state packing stores t in slot 0; fix transverse values
        let mut state0 = state0;
        state0[0] = start.t;
        state0[1] = imw0;

        let g = grid as i64;
        let cell = half_width / g as f64;
        let mut samples = Vec::new();
        let (mut max_res, mut max_null) = (0.0f64, 0.0f64);
        let east = Complex64::new(1.0, 0.0);
        let north = Complex64::new(0.0, 1.0);

        for i in -g..=g {
            // spine point at zeta = i*cell on the real axis
            let mut spine = state0.clone();
            let xi = i as f64 * cell;
            if i != 0 {
                let d = if i > 0 { east } else { -east };
                for _ in 0..i.abs() {
                    spine = self.walk(spine, d, cell, substeps_per_cell)?;
                }
            }
            for j in -g..=g {
                let mut st = spine.clone();
                if j != 0 {
                    let d = if j > 0 { north } else { -north };
                    for _ in 0..j.abs() {
                        st = self.walk(st, d, cell, substeps_per_cell)?;
                    }
                }
                let eta = j as f64 * cell;
                let (p, v) = unpack(&st, n);
                let res = self.residual(&p, st[1]);
                let nd = self.null_defect(&p, &v);
                max_res = max_res.max(res);
                max_null = max_null.max(nd);
                samples.push(GeodesicSample {
                    zeta: Complex64::new(xi, eta),
                    t: p.t,
                    imw: st[1],
                    z: p.z.clone(),
                    tangent: v,
                    residual: res,
                    null_defect: nd,
                });
            }
        }

        // commutation diagnostic: far corner reached in both axis orders
        let corner_a = {
            let mut st = state0.clone();
            for _ in 0..grid {
                st = self.walk(st, east, cell, substeps_per_cell)?;
            }
            for _ in 0..grid {
                st = self.walk(st, north, cell, substeps_per_cell)?;
            }
            st
        };
        let corner_b = {
            let mut st = state0.clone();
            for _ in 0..grid {
                st = self.walk(st, north, cell, substeps_per_cell)?;
            }
            for _ in 0..grid {
                st = self.walk(st, east, cell, substeps_per_cell)?;
            }
            st
        };
        let commutation_defect = corner_a
            .iter()
            .zip(&corner_b)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);

        Ok(NullCurve {
            samples,
            max_residual: max_res,
            max_null_defect: max_null,
            commutation_defect,
        })
    }
}

fn unpack(state: &[f64], n: usize) -> (NumPoint, Vec<Complex64>) {
    let z: Vec<Complex64> = (0..n)
        .map(|j| Complex64::new(state[2 + 2 * j], state[2 + 2 * j + 1]))
        .collect();
    let v: Vec<Complex64> = (0..n)
        .map(|j| Complex64::new(state[2 + 2 * n + 2 * j], state[2 + 2 * n + 2 * j + 1]))
        .collect();
    (NumPoint::new(state[0], z), v)
}

fn pack(t: f64, imw: f64, z: &[Complex64], v: &[Complex64]) -> Vec<f64> {
    let mut out = vec![t, imw];
    for c in z {
        out.push(c.re);
        out.push(c.im);
    }
    for c in v {
        out.push(c.re);
        out.push(c.im);
    }
    out
}

/// Projective-parameter right-hand side at a point:
/// `Q = 2 i v^a v^b A_{ab}` for a null tangent `v` in frame components.
pub fn projective_q_at(
    s: &PHStructure,
    conn: &Connection,
    point: &NumPoint,
    tangent: &[Complex64],
) -> Result<Complex64, GeodesicError> {
    let n = s.arity;
    if tangent.iter().map(|c| c.norm()).sum::<f64>() == 0.0 {
        return Err(GeodesicError::DegenerateTangent);
    }
    let sv = ScaleVals::unit();
    let mut null = Complex64::new(0.0, 0.0);
    for a in 0..n {
        for b in 0..n {
            let h = s.levi.entry(a, b);
            if h.is_zero() {
                continue;
            }
            null += eval_coeff(h, point, &sv) * tangent[a] * tangent[b].conj();
        }
    }
    if null.norm() > 1e-10 {
        return Err(GeodesicError::NotNull {
            defect: null.norm(),
        });
    }
    let mut q = Complex64::new(0.0, 0.0);
    for a in 0..n {
        for b in 0..n {
            if conn.torsion[a][b].is_zero() {
                continue;
            }
            q += eval_coeff(&conn.torsion[a][b], point, &sv) * tangent[a] * tangent[b];
        }
    }
    Ok(Complex64::new(0.0, 2.0) * q)
}

/// Exact multiplier exponent of the deck transformation acting on the closed
/// leaf: the leaf coordinate scales by `e^{3 beta}`, so the projective class
/// of the quotient circle is the exponent `3 beta`.
pub fn multiplier_exponent(beta: &BigRational) -> Result<BigRational, GeodesicError> {
    if beta >= &BigRational::zero() {
        return Err(GeodesicError::NonContractingMultiplier(format!("{}", beta)));
    }
    Ok(beta * BigRational::from_integer(BigInt::from(3)))
}

/// Compare two quotients through their exact multiplier exponents.
pub fn equivalence_test(
    beta: &BigRational,
    beta_tilde: &BigRational,
) -> Result<bool, GeodesicError> {
    Ok(multiplier_exponent(beta)? == multiplier_exponent(beta_tilde)?)
}

/// Numeric agreement of projective parameters across a rescaling, measured
/// on the closed leaf `z2 = 1 + z` (the other coordinates vanish there).
///
/// Stage 1 integrates the affine reparameterization `zhat'' / zhat' = 2 Ups'`
/// jointly with the linearized projective ODE for the rescaled potential
/// `Qhat(zhat) = 2 i (dz/dzhat)^2 Ahat_22`; stage 2 solves the flat ODE for
/// the original parameter. The result is the largest cross-Schwarzian
/// `|{p_hat, p}|` over interior sample points, which vanishes exactly when
/// the two projective classes agree.
pub struct ProjectiveAgreement {
    pub max_cross_schwarzian: f64,
    pub sample_points: Vec<Complex64>,
}

pub fn projective_agreement_on_leaf(
    s: &PHStructure,
    conn: &Connection,
    hat_conn: &Connection,
    upsilon: &CoeffElem,
    leaf_dir: usize,
    step: f64,
) -> Result<ProjectiveAgreement, GeodesicError> {
    let n = s.arity;
    let ctx = &s.ctx;
    let hess = crate::pseudohermitian::covariant_hessian(s, conn, upsilon);
    let ups_d = hess.grad[leaf_dir].clone();
    let a_hat = hat_conn.torsion[leaf_dir][leaf_dir].clone();
    let _ = ctx;

    let leaf_point = |z: Complex64| -> NumPoint {
        let mut zs = vec![Complex64::new(0.0, 0.0); n];
        zs[leaf_dir] = Complex64::new(1.0, 0.0) + z;
        NumPoint::new(0.0, zs)
    };
    let sv = ScaleVals::unit();

    // combined state along z: [zhat, rho = dzhat/dz, u1, U1, u2, U2]
    // with u'' + (Qhat/2) u = 0 in the zhat variable, pulled back through
    // du/dz = U rho, dU/dz = -(Qhat/2) u rho, Qhat rho^2 = 2 i Ahat_22.
    let deriv = |z: Complex64, st: &[Complex64; 6]| -> [Complex64; 6] {
        let p = leaf_point(z);
        let upd = eval_coeff(&ups_d, &p, &sv);
        let ahat = eval_coeff(&a_hat, &p, &sv);
        let rho = st[1];
        let qhat_rho2 = Complex64::new(0.0, 2.0) * ahat;
        [
            rho,
            2.0 * upd * rho,
            st[3] * rho,
            -0.5 * qhat_rho2 / rho * st[2],
            st[5] * rho,
            -0.5 * qhat_rho2 / rho * st[4],
        ]
    };

    let start = [
        Complex64::new(0.0, 0.0),
        Complex64::new(1.0, 0.0),
        Complex64::new(0.0, 0.0),
        Complex64::new(1.0, 0.0),
        Complex64::new(1.0, 0.0),
        Complex64::new(0.0, 0.0),
    ];
    let advance_to = |from: (Complex64, [Complex64; 6]),
                      target: Complex64|
     -> Result<(Complex64, [Complex64; 6]), GeodesicError> {
        let (mut z, mut st) = from;
        let dist = (target - z).norm();
        if dist == 0.0 {
            return Ok((z, st));
        }
        let nst = (dist / step).ceil().max(1.0) as usize;
        let dir = (target - z) / dist;
        let h = dist / nst as f64;
        for _ in 0..nst {
            let f = |zz: Complex64, s: &[Complex64; 6]| {
                let d = deriv(zz, s);
                let mut out = [Complex64::new(0.0, 0.0); 6];
                for i in 0..6 {
                    out[i] = dir * d[i];
                }
                out
            };
            let k1 = f(z, &st);
            let m1 = add6(&st, &k1, 0.5 * h);
            let k2 = f(z + dir * (0.5 * h), &m1);
            let m2 = add6(&st, &k2, 0.5 * h);
            let k3 = f(z + dir * (0.5 * h), &m2);
            let m3 = add6(&st, &k3, h);
            let k4 = f(z + dir * h, &m3);
            for i in 0..6 {
                st[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            }
            z += dir * h;
            if st[4].norm() < 1e-12 {
                return Err(GeodesicError::PoleCrossed { re: z.re, im: z.im });
            }
        }
        Ok((z, st))
    };

    // dense cache of states along the real segment [-0.4, 0.4]
    let mut cache: Vec<(Complex64, [Complex64; 6])> = Vec::new();
    let origin = (Complex64::new(0.0, 0.0), start);
    cache.push(origin);
    let nsamp = 40;
    let mut cur = origin;
    for k in 1..=nsamp {
        let target = Complex64::new(0.4 * k as f64 / nsamp as f64, 0.0);
        cur = advance_to(cur, target)?;
        cache.push(cur);
    }
    let mut cur = origin;
    for k in 1..=nsamp {
        let target = Complex64::new(-0.4 * k as f64 / nsamp as f64, 0.0);
        cur = advance_to(cur, target)?;
        cache.push(cur);
    }

    let p_hat_eval = |z: Complex64| -> Result<Complex64, GeodesicError> {
        let nearest = cache
            .iter()
            .min_by(|a, b| (a.0 - z).norm().partial_cmp(&(b.0 - z).norm()).unwrap())
            .unwrap();
        let (_, st) = advance_to(*nearest, z)?;
        Ok(st[2] / st[4])
    };

    // the original structure is torsion-free along the leaf: p = z exactly
    // as the normalized solution of the flat ODE; solve it anyway so the
    // comparison exercises both pipelines.
    let flat =
        schwarzian::solve_schwarzian_ode(
            schwarzian::SchwarzianOde::flat(
                Complex64::new(0.0, 0.0),
                Complex64::new(1.0, 0.0),
                Complex64::new(0.0, 0.0),
            ),
            &[Complex64::new(-0.4, 0.0), Complex64::new(0.4, 0.0)],
            step,
        )?;
    let p_eval = |z: Complex64| -> Result<Complex64, GeodesicError> { flat.eval_at(z) };

    let mut max_cross = 0.0f64;
    let mut pts = Vec::new();
    for &x in &[-0.25f64, -0.1, 0.0, 0.15, 0.3] {
        let z0 = Complex64::new(x, 0.0);
        let cross =
            schwarzian::numeric_cross_schwarzian(&p_hat_eval, &p_eval, z0, 0.05)?;
        max_cross = max_cross.max(cross.norm());
        pts.push(z0);
    }
    Ok(ProjectiveAgreement {
        max_cross_schwarzian: max_cross,
        sample_points: pts,
    })
}

fn add6(u: &[Complex64; 6], k: &[Complex64; 6], h: f64) -> [Complex64; 6] {
    let mut out = *u;
    for i in 0..6 {
        out[i] = u[i] + h * k[i];
    }
    out
}

/// Convenience for tests: the GaussianRational 2x2 identity-like Moebius
/// matrix builders used with `mobius_compose`.
pub fn mobius(a: i64, b: i64, c: i64, d: i64) -> [[GaussianRational; 2]; 2] {
    [
        [GaussianRational::from_int(a), GaussianRational::from_int(b)],
        [GaussianRational::from_int(c), GaussianRational::from_int(d)],
    ]
}
