//! Pseudohermitian structures and their invariants: Levi form, Reeb field,
//! dual frame, the canonical connection and torsion, curvature, Ricci and
//! the trace-free (Chern) tensor, covariant Hessians, and contact-form
//! rescaling with the associated transformation laws.
//!
//! Conventions fixed by this crate:
//!   dtheta = i h_{ab} theta^a ^ theta^bbar                  (Levi extraction)
//!   dtheta^b = theta^a ^ omega_a^b + A^b_s theta ^ theta^sbar
//!   dh_{ab} = omega_a^c h_{cb} + conj(omega_b^c h_{ca})     (compatibility)
//!   scalar = h^{ab} ric_{ab}   (no dimensional factor)
//! Signatures are evaluated at the origin by exact congruence reduction.

use thiserror::Error;

use crate::algebra::{CoeffElem, ExpContext, GaussianRational, Gen};
use crate::exterior::{DifferentialForm, VectorField};
use crate::linalg::{CMatrix, LinalgError};

pub type Tensor4 = Vec<Vec<Vec<Vec<CoeffElem>>>>;

#[derive(Error, Debug, Clone, PartialEq)]
pub enum PhError {
    #[error("defining function is not real: conj(r) != r")]
    NonRealDefining,
    #[error("defining function is not of the admitted shape: {0}")]
    DefiningShape(String),
    #[error("contact form is not real")]
    NonRealContact,
    #[error("degenerate coframe: the full coframe matrix is singular")]
    DegenerateCoframe,
    #[error("non-polynomial dual frame: coframe matrix is not unimodular ({0})")]
    NonPolynomialDualFrame(String),
    #[error("inadmissible coframe: {0}")]
    InadmissibleCoframe(String),
    #[error("degenerate Levi form")]
    DegenerateLevi,
    #[error("Levi form has no polynomial inverse ({0})")]
    NonUnimodularLevi(String),
    #[error("convention violation: {0}")]
    ConventionViolation(String),
    #[error("torsion-full curvature unsupported: nonzero torsion A[{0}][{1}]")]
    TorsionFullCurvature(usize, usize),
    #[error("unexpected curvature terms: curvature 2-form is not of type (1,1) in the coframe")]
    UnexpectedCurvatureTerms,
    #[error("trace correction failed to produce a trace-free tensor")]
    TraceCorrectionFailed,
    #[error("coframe adaptation failed: no admissible constant found")]
    CoframeAdaptationFailed,
    #[error("exponent function must be real")]
    NonRealExponent,
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// A contact form together with an admissible coframe and everything the
/// coframe determines: Reeb field, dual frame, Levi matrix and its inverse,
/// and the signature at the origin.
#[derive(Clone, Debug)]
pub struct PHStructure {
    pub arity: usize,
    pub ctx: ExpContext,
    pub theta: DifferentialForm,
    pub coframe: Vec<DifferentialForm>,
    pub coframe_bar: Vec<DifferentialForm>,
    pub reeb: VectorField,
    pub frame: Vec<VectorField>,
    pub frame_bar: Vec<VectorField>,
    pub levi: CMatrix,
    pub levi_inv: CMatrix,
    pub signature: (usize, usize),
}

impl PHStructure {
    /// `h^{ab}` with the convention `sum_b h_{gb} h^{g'b} = delta`.
    pub fn levi_upper(&self, alpha: usize, beta: usize) -> &CoeffElem {
        self.levi_inv.entry(beta, alpha)
    }
}

/// Connection one-forms and symmetric torsion coefficients.
#[derive(Clone, Debug, PartialEq)]
pub struct Connection {
    pub omega: Vec<Vec<DifferentialForm>>,
    pub torsion: Vec<Vec<CoeffElem>>,
}

impl Connection {
    pub fn torsion_is_zero(&self) -> bool {
        self.torsion.iter().all(|row| row.iter().all(|a| a.is_zero()))
    }

    pub fn zero(n: usize, arity: usize) -> Self {
        Connection {
            omega: vec![vec![DifferentialForm::zero(arity, 1); n]; n],
            torsion: vec![vec![CoeffElem::zero(arity); n]; n],
        }
    }
}

/// Curvature components `R_a^b_{r sbar}` with the derived Ricci, scalar and
/// trace-free tensors.
#[derive(Clone, Debug)]
pub struct CurvatureData {
    pub riemann: Tensor4,
    pub ricci: Vec<Vec<CoeffElem>>,
    pub scalar: CoeffElem,
    pub chern: Tensor4,
}

impl CurvatureData {
    pub fn riemann_is_zero(&self) -> bool {
        tensor4_is_zero(&self.riemann)
    }

    pub fn chern_is_zero(&self) -> bool {
        tensor4_is_zero(&self.chern)
    }

    pub fn ricci_is_zero(&self) -> bool {
        self.ricci.iter().all(|row| row.iter().all(|c| c.is_zero()))
    }
}

pub fn tensor4_is_zero(t: &Tensor4) -> bool {
    t.iter()
        .all(|a| a.iter().all(|b| b.iter().all(|c| c.iter().all(|x| x.is_zero()))))
}

/// Build the contact form `Re(i dr)` restricted to the hypersurface, in chart
/// coordinates `(t, z, zb)`.
///
/// The input encodes `r = c0 * Imw + rho(z, zb)` with the transverse part
/// `Imw` written on the `t` generator; on the zero set the chart coordinate
/// `t` is the surviving real transverse coordinate and the contact form reads
/// `(c0/2) dt + (i/2) sum_j (rho_{z_j} dz_j - rho_{zb_j} dzb_j)`.
pub fn contact_from_defining(r: &CoeffElem, arity: usize) -> Result<DifferentialForm, PhError> {
    assert_eq!(r.arity(), arity);
    if !r.is_real() {
        return Err(PhError::NonRealDefining);
    }
    let mut c0 = GaussianRational::zero();
    let mut rho = CoeffElem::zero(arity);
    for (m, c) in r.terms() {
        if m.t == 0 {
            let mut single = CoeffElem::zero(arity);
            single.add_term(m.clone(), c.clone());
            rho = &rho + &single;
        } else if m.t == 1 && m.z.iter().all(|&k| k == 0) && m.zb.iter().all(|&k| k == 0) {
            c0 = &c0 + c;
        } else {
            return Err(PhError::DefiningShape(
                "terms mixing the transverse slot with z-variables".into(),
            ));
        }
    }
    if c0.is_zero() {
        return Err(PhError::DefiningShape(
            "missing linear transverse term".into(),
        ));
    }
    let half = GaussianRational::from_ratio(1, 2);
    let half_i = &half * &GaussianRational::i();
    let mut theta = DifferentialForm::dt(arity).mul_coeff(&CoeffElem::constant(arity, &c0 * &half));
    for j in 0..arity {
        let dj = rho.deriv(Gen::Z(j));
        if !dj.is_zero() {
            theta = theta.add(
                &DifferentialForm::dz(arity, j)
                    .mul_coeff(&dj.scale(&half_i)),
            );
        }
        let djb = rho.deriv(Gen::Zb(j));
        if !djb.is_zero() {
            theta = theta.add(
                &DifferentialForm::dzb(arity, j)
                    .mul_coeff(&djb.scale(&(-&half_i))),
            );
        }
    }
    Ok(theta)
}

/// Assemble a full structure from a real contact form and an admissible
/// coframe. All structural identities are verified exactly before returning.
pub fn complete_structure(
    theta: &DifferentialForm,
    coframe: &[DifferentialForm],
) -> Result<PHStructure, PhError> {
    complete_structure_with_ctx(theta, coframe, &ExpContext::inactive(theta.arity()))
}

pub fn complete_structure_with_ctx(
    theta: &DifferentialForm,
    coframe: &[DifferentialForm],
    ctx: &ExpContext,
) -> Result<PHStructure, PhError> {
    let arity = theta.arity();
    let n = coframe.len();
    let dim = 2 * arity + 1;
    assert_eq!(n, arity, "coframe must have one form per complex coordinate");
    if theta.conj() != *theta {
        return Err(PhError::NonRealContact);
    }

    let coframe_bar: Vec<DifferentialForm> = coframe.iter().map(|f| f.conj()).collect();
    let rows: Vec<&DifferentialForm> = std::iter::once(theta)
        .chain(coframe.iter())
        .chain(coframe_bar.iter())
        .collect();

    let cmat = CMatrix::from_fn(dim, arity, |i, j| {
        rows[i].component(crate::exterior::gen_of_index(j as u8, arity))
    });
    let inv = match cmat.inverse() {
        Ok(m) => m,
        Err(LinalgError::Singular) => return Err(PhError::DegenerateCoframe),
        Err(LinalgError::NotUnimodular { det }) => {
            return Err(PhError::NonPolynomialDualFrame(det))
        }
        Err(e) => return Err(e.into()),
    };

    // dual frame: column k of the inverse pairs to 1 with row k
    let field_from_col = |k: usize| {
        let mut v = VectorField::zero(arity);
        for g in 0..dim {
            let c = inv.entry(g, k).clone();
            if !c.is_zero() {
                v.set(crate::exterior::gen_of_index(g as u8, arity), c);
            }
        }
        v
    };
    let reeb = field_from_col(0);
    let frame: Vec<VectorField> = (0..n).map(|a| field_from_col(1 + a)).collect();
    let frame_bar: Vec<VectorField> = (0..n).map(|a| field_from_col(1 + n + a)).collect();

    let dtheta = theta.d(ctx);
    let minus_i = CoeffElem::i_unit(arity).scale_int(-1);
    let levi = CMatrix::from_fn(n, arity, |a, b| {
        &minus_i * &dtheta.evaluate(&[&frame[a], &frame_bar[b]])
    });
    if !levi.is_hermitian() {
        return Err(PhError::InadmissibleCoframe(
            "extracted Levi matrix is not hermitian".into(),
        ));
    }

    // the contact form must reproduce dtheta = i h_{ab} theta^a ^ theta^bbar
    let i_unit = CoeffElem::i_unit(arity);
    let mut recon = DifferentialForm::zero(arity, 2);
    for a in 0..n {
        for b in 0..n {
            let h = levi.entry(a, b);
            if h.is_zero() {
                continue;
            }
            recon = recon.add(&coframe[a].wedge(&coframe_bar[b]).mul_coeff(&(&i_unit * h)));
        }
    }
    if recon != dtheta {
        return Err(PhError::InadmissibleCoframe(
            "dtheta is not i h_{ab} theta^a ^ theta^bbar".into(),
        ));
    }
    if !dtheta.contract(&reeb).is_zero() {
        return Err(PhError::InadmissibleCoframe(
            "Reeb field fails to annihilate dtheta".into(),
        ));
    }

    let levi_inv = match levi.inverse() {
        Ok(m) => m,
        Err(LinalgError::Singular) => return Err(PhError::DegenerateLevi),
        Err(LinalgError::NotUnimodular { det }) => return Err(PhError::NonUnimodularLevi(det)),
        Err(e) => return Err(e.into()),
    };
    let signature = levi.signature_at_origin()?;

    Ok(PHStructure {
        arity,
        ctx: ctx.clone(),
        theta: theta.clone(),
        coframe: coframe.to_vec(),
        coframe_bar,
        reeb,
        frame,
        frame_bar,
        levi,
        levi_inv,
        signature,
    })
}

/// Raised torsion `A^b_{sbar} = h^{bg} conj(A_{gs})`.
fn raise_torsion(s: &PHStructure, torsion: &[Vec<CoeffElem>]) -> Vec<Vec<CoeffElem>> {
    let n = s.arity;
    (0..n)
        .map(|b| {
            (0..n)
                .map(|sig| {
                    let mut acc = CoeffElem::zero(n);
                    for g in 0..n {
                        let up = s.levi_upper(b, g);
                        if up.is_zero() {
                            continue;
                        }
                        acc = &acc + &(up * &torsion[g][sig].conj());
                    }
                    acc
                })
                .collect()
        })
        .collect()
}

/// Solve the structure equations for the unique compatible connection.
///
/// The solve is closed-form: the mixed components come straight off
/// `dtheta^b`, the holomorphic components off metric compatibility, the
/// `theta`-components and torsion off the transverse pieces of `dtheta^b`.
/// The result is re-verified against both structure equations; any residual
/// signals an inadmissible coframe.
pub fn solve_connection(s: &PHStructure) -> Result<Connection, PhError> {
    let n = s.arity;
    let ctx = &s.ctx;
    let dthetas: Vec<DifferentialForm> = s.coframe.iter().map(|f| f.d(ctx)).collect();

    // no (0,2) component may appear
    for b in 0..n {
        for r in 0..n {
            for sg in (r + 1)..n {
                if !dthetas[b]
                    .evaluate(&[&s.frame_bar[r], &s.frame_bar[sg]])
                    .is_zero()
                {
                    return Err(PhError::ConventionViolation(format!(
                        "dtheta^{} has a (0,2) component",
                        b + 1
                    )));
                }
            }
        }
    }

    // mixed part: N[a][b][sg] = omega_a^b(Z_sgbar-dual slot) = dtheta^b(Z_a, Zbar_sg)
    let nmix: Vec<Vec<Vec<CoeffElem>>> = (0..n)
        .map(|a| {
            (0..n)
                .map(|b| {
                    (0..n)
                        .map(|sg| dthetas[b].evaluate(&[&s.frame[a], &s.frame_bar[sg]]))
                        .collect()
                })
                .collect()
        })
        .collect();

    // transverse parts: F[a][b] = -dtheta^b(T, Z_a), raised torsion from
    // dtheta^b(T, Zbar_sg)
    let fmat: Vec<Vec<CoeffElem>> = (0..n)
        .map(|a| {
            (0..n)
                .map(|b| {
                    dthetas[b]
                        .evaluate(&[&s.reeb, &s.frame[a]])
                        .scale_int(-1)
                })
                .collect()
        })
        .collect();
    let a_up: Vec<Vec<CoeffElem>> = (0..n)
        .map(|b| {
            (0..n)
                .map(|sg| dthetas[b].evaluate(&[&s.reeb, &s.frame_bar[sg]]))
                .collect()
        })
        .collect();
    // lower: A_{ms} = conj(sum_b h_{bm} A^b_s)
    let torsion: Vec<Vec<CoeffElem>> = (0..n)
        .map(|m| {
            (0..n)
                .map(|sg| {
                    let mut acc = CoeffElem::zero(n);
                    for b in 0..n {
                        let h = s.levi.entry(b, m);
                        if h.is_zero() {
                            continue;
                        }
                        acc = &acc + &(h * &a_up[b][sg]);
                    }
                    acc.conj()
                })
                .collect()
        })
        .collect();

    // holomorphic part from metric compatibility:
    // K_{ab r} = Z_r(h_{ab}) - conj( sum_g dtheta^g(Z_b, Zbar_r) h_{ga} )
    // M_a^g_r = sum_b K_{ab r} h^{gb}  (row solve against the Levi matrix)
    let mut mhol = vec![vec![vec![CoeffElem::zero(n); n]; n]; n]; // [a][g][r]
    for a in 0..n {
        for r in 0..n {
            let mut krow = Vec::with_capacity(n);
            for b in 0..n {
                let zh = s.frame[r].apply(s.levi.entry(a, b), ctx);
                let mut inner = CoeffElem::zero(n);
                for g in 0..n {
                    let h = s.levi.entry(g, a);
                    if h.is_zero() || nmix[b][g][r].is_zero() {
                        continue;
                    }
                    inner = &inner + &(&nmix[b][g][r] * h);
                }
                krow.push(&zh - &inner.conj());
            }
            for g in 0..n {
                let mut acc = CoeffElem::zero(n);
                for b in 0..n {
                    let up = s.levi_upper(g, b);
                    if up.is_zero() || krow[b].is_zero() {
                        continue;
                    }
                    acc = &acc + &(&krow[b] * up);
                }
                mhol[a][g][r] = acc;
            }
        }
    }

    let omega: Vec<Vec<DifferentialForm>> = (0..n)
        .map(|a| {
            (0..n)
                .map(|b| {
                    let mut form = s.theta.mul_coeff(&fmat[a][b]);
                    for r in 0..n {
                        if !mhol[a][b][r].is_zero() {
                            form = form.add(&s.coframe[r].mul_coeff(&mhol[a][b][r]));
                        }
                        if !nmix[a][b][r].is_zero() {
                            form = form.add(&s.coframe_bar[r].mul_coeff(&nmix[a][b][r]));
                        }
                    }
                    form
                })
                .collect()
        })
        .collect();

    let conn = Connection { omega, torsion };
    let residuals = verify_connection(s, &conn);
    if let Some(name) = residuals.first_failure() {
        return Err(PhError::ConventionViolation(format!(
            "structure equations have no solution: residual in {}",
            name
        )));
    }
    Ok(conn)
}

/// Exact residuals of the two structure equations and the torsion symmetry
/// defect. Independent of the solver.
#[derive(Clone, Debug)]
pub struct ConnectionResiduals {
    pub structure: Vec<DifferentialForm>,
    pub compatibility: Vec<Vec<DifferentialForm>>,
    pub torsion_symmetry: Vec<Vec<CoeffElem>>,
}

impl ConnectionResiduals {
    pub fn is_zero(&self) -> bool {
        self.first_failure().is_none()
    }

    pub fn first_failure(&self) -> Option<String> {
        for (b, f) in self.structure.iter().enumerate() {
            if !f.is_zero() {
                return Some(format!("dtheta^{} structure equation", b + 1));
            }
        }
        for (a, row) in self.compatibility.iter().enumerate() {
            for (b, f) in row.iter().enumerate() {
                if !f.is_zero() {
                    return Some(format!("metric compatibility dh[{}][{}]", a + 1, b + 1));
                }
            }
        }
        for (a, row) in self.torsion_symmetry.iter().enumerate() {
            for (b, c) in row.iter().enumerate() {
                if !c.is_zero() {
                    return Some(format!("torsion symmetry A[{}][{}]", a + 1, b + 1));
                }
            }
        }
        None
    }
}

pub fn verify_connection(s: &PHStructure, conn: &Connection) -> ConnectionResiduals {
    let n = s.arity;
    let ctx = &s.ctx;
    let a_up = raise_torsion(s, &conn.torsion);

    let structure: Vec<DifferentialForm> = (0..n)
        .map(|b| {
            let mut rhs = DifferentialForm::zero(n, 2);
            for a in 0..n {
                rhs = rhs.add(&s.coframe[a].wedge(&conn.omega[a][b]));
            }
            for sg in 0..n {
                if !a_up[b][sg].is_zero() {
                    rhs = rhs.add(
                        &s.theta
                            .wedge(&s.coframe_bar[sg])
                            .mul_coeff(&a_up[b][sg]),
                    );
                }
            }
            s.coframe[b].d(ctx).sub(&rhs)
        })
        .collect();

    let compatibility: Vec<Vec<DifferentialForm>> = (0..n)
        .map(|a| {
            (0..n)
                .map(|b| {
                    let dh = DifferentialForm::scalar(s.levi.entry(a, b).clone()).d(ctx);
                    let mut oma = DifferentialForm::zero(n, 1);
                    let mut omb = DifferentialForm::zero(n, 1);
                    for g in 0..n {
                        if !s.levi.entry(g, b).is_zero() {
                            oma = oma.add(&conn.omega[a][g].mul_coeff(s.levi.entry(g, b)));
                        }
                        if !s.levi.entry(g, a).is_zero() {
                            omb = omb.add(&conn.omega[b][g].mul_coeff(s.levi.entry(g, a)));
                        }
                    }
                    dh.sub(&oma.add(&omb.conj()))
                })
                .collect()
        })
        .collect();

    let torsion_symmetry: Vec<Vec<CoeffElem>> = (0..n)
        .map(|a| {
            (0..n)
                .map(|b| &conn.torsion[a][b] - &conn.torsion[b][a])
                .collect()
        })
        .collect();

    ConnectionResiduals {
        structure,
        compatibility,
        torsion_symmetry,
    }
}

/// Curvature, Ricci, scalar and the trace-free tensor of a torsion-free
/// connection. The correction coefficients `-1/(n+2)` and `1/((n+1)(n+2))`
/// are exactly the ones annihilating all four Levi traces; this is verified
/// on every call.
pub fn curvature(s: &PHStructure, conn: &Connection) -> Result<CurvatureData, PhError> {
    let n = s.arity;
    let ctx = &s.ctx;
    for a in 0..n {
        for b in 0..n {
            if !conn.torsion[a][b].is_zero() {
                return Err(PhError::TorsionFullCurvature(a + 1, b + 1));
            }
        }
    }

    let mut riemann = vec![vec![vec![vec![CoeffElem::zero(n); n]; n]; n]; n];
    for a in 0..n {
        for b in 0..n {
            let mut om = conn.omega[a][b].d(ctx);
            for g in 0..n {
                om = om.sub(&conn.omega[a][g].wedge(&conn.omega[g][b]));
            }
            if om.is_zero() {
                continue;
            }
            let mut recon = DifferentialForm::zero(n, 2);
            for r in 0..n {
                for sg in 0..n {
                    let c = om.evaluate(&[&s.frame[r], &s.frame_bar[sg]]);
                    if !c.is_zero() {
                        recon = recon.add(
                            &s.coframe[r]
                                .wedge(&s.coframe_bar[sg])
                                .mul_coeff(&c),
                        );
                        riemann[a][b][r][sg] = c;
                    }
                }
            }
            if recon != om {
                return Err(PhError::UnexpectedCurvatureTerms);
            }
        }
    }

    let ricci: Vec<Vec<CoeffElem>> = (0..n)
        .map(|r| {
            (0..n)
                .map(|sg| {
                    let mut acc = CoeffElem::zero(n);
                    for g in 0..n {
                        acc = &acc + &riemann[g][g][r][sg];
                    }
                    acc
                })
                .collect()
        })
        .collect();

    let mut scalar = CoeffElem::zero(n);
    for r in 0..n {
        for sg in 0..n {
            let up = s.levi_upper(r, sg);
            if up.is_zero() || ricci[r][sg].is_zero() {
                continue;
            }
            scalar = &scalar + &(up * &ricci[r][sg]);
        }
    }

    // lower the frame index: L_{am r sg} = sum_b R_a^b_{r sg} h_{bm}
    let mut lowered = vec![vec![vec![vec![CoeffElem::zero(n); n]; n]; n]; n];
    for a in 0..n {
        for m in 0..n {
            for r in 0..n {
                for sg in 0..n {
                    let mut acc = CoeffElem::zero(n);
                    for b in 0..n {
                        let h = s.levi.entry(b, m);
                        if h.is_zero() || riemann[a][b][r][sg].is_zero() {
                            continue;
                        }
                        acc = &acc + &(&riemann[a][b][r][sg] * h);
                    }
                    lowered[a][m][r][sg] = acc;
                }
            }
        }
    }

    let na = n as i64;
    let ca = GaussianRational::from_ratio(-1, na + 2);
    let cb = GaussianRational::from_ratio(1, (na + 1) * (na + 2));
    let mut chern_low = lowered.clone();
    for a in 0..n {
        for m in 0..n {
            for r in 0..n {
                for sg in 0..n {
                    let ric_part = &(&(&ricci[a][m] * s.levi.entry(r, sg))
                        + &(&ricci[r][m] * s.levi.entry(a, sg)))
                        + &(&(&ricci[a][sg] * s.levi.entry(r, m))
                            + &(&ricci[r][sg] * s.levi.entry(a, m)));
                    let h_part = &(s.levi.entry(a, m) * s.levi.entry(r, sg))
                        + &(s.levi.entry(r, m) * s.levi.entry(a, sg));
                    chern_low[a][m][r][sg] = &(&chern_low[a][m][r][sg]
                        + &ric_part.scale(&ca))
                        + &(&scalar * &h_part).scale(&cb);
                }
            }
        }
    }

    // all four Levi traces of the corrected tensor must vanish exactly
    for fixed1 in 0..n {
        for fixed2 in 0..n {
            let mut tr = [
                CoeffElem::zero(n),
                CoeffElem::zero(n),
                CoeffElem::zero(n),
                CoeffElem::zero(n),
            ];
            for x in 0..n {
                for y in 0..n {
                    let up = s.levi_upper(x, y);
                    if up.is_zero() {
                        continue;
                    }
                    tr[0] = &tr[0] + &(up * &chern_low[x][y][fixed1][fixed2]);
                    tr[1] = &tr[1] + &(up * &chern_low[fixed1][fixed2][x][y]);
                    tr[2] = &tr[2] + &(up * &chern_low[x][fixed2][fixed1][y]);
                    tr[3] = &tr[3] + &(up * &chern_low[fixed1][y][x][fixed2]);
                }
            }
            if tr.iter().any(|t| !t.is_zero()) {
                return Err(PhError::TraceCorrectionFailed);
            }
        }
    }

    // raise back: S_a^b = sum_m S_{am} h^{bm}
    let mut chern = vec![vec![vec![vec![CoeffElem::zero(n); n]; n]; n]; n];
    for a in 0..n {
        for b in 0..n {
            for r in 0..n {
                for sg in 0..n {
                    let mut acc = CoeffElem::zero(n);
                    for m in 0..n {
                        let up = s.levi_upper(b, m);
                        if up.is_zero() || chern_low[a][m][r][sg].is_zero() {
                            continue;
                        }
                        acc = &acc + &(&chern_low[a][m][r][sg] * up);
                    }
                    chern[a][b][r][sg] = acc;
                }
            }
        }
    }

    Ok(CurvatureData {
        riemann,
        ricci,
        scalar,
        chern,
    })
}

/// Frame directions spanned by the image of the trace-free tensor viewed as a
/// (1,3)-map: the indices `b` whose row carries a nonzero component.
pub fn chern_image(curv: &CurvatureData, s: &PHStructure) -> Vec<usize> {
    let n = s.arity;
    (0..n)
        .filter(|&b| {
            (0..n).any(|a| {
                (0..n).any(|r| (0..n).any(|sg| !curv.chern[a][b][r][sg].is_zero()))
            })
        })
        .collect()
}

/// Covariant first and second derivatives of a function with respect to the
/// connection: `u_a = Z_a(u)`, `u_{ab} = Z_b(u_a) - omega_a^g(Z_b) u_g`,
/// `u_{abbar} = Zbar_b(u_a) - omega_a^g(Zbar_b) u_g`.
#[derive(Clone, Debug)]
pub struct CovariantHessian {
    pub grad: Vec<CoeffElem>,
    pub holo: Vec<Vec<CoeffElem>>,
    pub mixed: Vec<Vec<CoeffElem>>,
}

pub fn covariant_hessian(s: &PHStructure, conn: &Connection, u: &CoeffElem) -> CovariantHessian {
    let n = s.arity;
    let ctx = &s.ctx;
    let grad: Vec<CoeffElem> = (0..n).map(|a| s.frame[a].apply(u, ctx)).collect();
    let second = |bar: bool| -> Vec<Vec<CoeffElem>> {
        (0..n)
            .map(|a| {
                (0..n)
                    .map(|b| {
                        let dir = if bar { &s.frame_bar[b] } else { &s.frame[b] };
                        let mut acc = dir.apply(&grad[a], ctx);
                        for g in 0..n {
                            if grad[g].is_zero() {
                                continue;
                            }
                            let om = conn.omega[a][g].evaluate(&[dir]);
                            if om.is_zero() {
                                continue;
                            }
                            acc = &acc - &(&om * &grad[g]);
                        }
                        acc
                    })
                    .collect()
            })
            .collect()
    };
    CovariantHessian {
        holo: second(false),
        mixed: second(true),
        grad,
    }
}

/// Result of rescaling the contact form by `e^Ups`.
#[derive(Clone, Debug)]
pub struct Rescaled {
    pub structure: PHStructure,
    pub connection: Connection,
    pub lee_connection: Connection,
    pub report: RescaleReport,
}

#[derive(Clone, Debug)]
pub struct RescaleReport {
    /// Constant `c` in the adapted coframe `theta^a + c Ups^a theta`.
    pub adaptation_constant: GaussianRational,
    /// Direct solve agrees with the transformation-law route, exactly.
    pub connections_agree: bool,
    /// Torsion law `A_hat = A + i Ups_{ab} - i Ups_a Ups_b` holds exactly.
    pub torsion_law_holds: bool,
}

/// Rescale `theta -> e^Ups theta`, adapt the coframe, and recompute the
/// connection two ways: by a direct structure-equation solve on the new
/// structure, and by the covariant-derivative transformation laws. Both are
/// returned and compared exactly.
pub fn rescale(
    s: &PHStructure,
    conn: &Connection,
    upsilon: &CoeffElem,
) -> Result<Rescaled, PhError> {
    let n = s.arity;
    if !upsilon.is_real() {
        return Err(PhError::NonRealExponent);
    }
    let ctx = ExpContext::activate(upsilon.clone()).map_err(|_| PhError::NonRealExponent)?;
    let e_unit = CoeffElem::scale_pow(n, crate::algebra::ScaleGen::E, 1);
    let theta_hat = s.theta.mul_coeff(&e_unit);

    // raised gradient: Ups^a = sum_b h^{ab} Zbar_b(Ups)
    let grad_bar: Vec<CoeffElem> = (0..n)
        .map(|b| s.frame_bar[b].apply(upsilon, &s.ctx))
        .collect();
    let ups_up: Vec<CoeffElem> = (0..n)
        .map(|a| {
            let mut acc = CoeffElem::zero(n);
            for b in 0..n {
                let up = s.levi_upper(a, b);
                if up.is_zero() || grad_bar[b].is_zero() {
                    continue;
                }
                acc = &acc + &(up * &grad_bar[b]);
            }
            acc
        })
        .collect();

    // fix the adaptation constant by demanding exact admissibility
    let half = GaussianRational::from_ratio(1, 2);
    let two = GaussianRational::from_int(2);
    let i = GaussianRational::i();
    let candidates = [
        i.clone(),
        -&i,
        GaussianRational::one(),
        -&GaussianRational::one(),
        &i * &two,
        -&(&i * &two),
        &i * &half,
        -&(&i * &half),
        GaussianRational::zero(),
    ];
    let dtheta_hat = theta_hat.d(&ctx);
    let i_unit = CoeffElem::i_unit(n);
    let mut chosen: Option<(GaussianRational, Vec<DifferentialForm>)> = None;
    for c in &candidates {
        let coframe_hat: Vec<DifferentialForm> = (0..n)
            .map(|a| {
                s.coframe[a].add(
                    &s.theta
                        .mul_coeff(&ups_up[a].scale(c)),
                )
            })
            .collect();
        let mut recon = DifferentialForm::zero(n, 2);
        for a in 0..n {
            for b in 0..n {
                let h = &(&e_unit * s.levi.entry(a, b)) * &i_unit;
                if h.is_zero() {
                    continue;
                }
                recon = recon.add(&coframe_hat[a].wedge(&coframe_hat[b].conj()).mul_coeff(&h));
            }
        }
        if recon == dtheta_hat {
            chosen = Some((c.clone(), coframe_hat));
            break;
        }
    }
    let (c_const, coframe_hat) = chosen.ok_or(PhError::CoframeAdaptationFailed)?;

    let structure = complete_structure_with_ctx(&theta_hat, &coframe_hat, &ctx)?;
    let direct = solve_connection(&structure)?;

    // transformation-law route for the new connection:
    //   omega_hat_a^b(Z_r)    = omega_a^b(Z_r) + Ups_r d_a^b + Ups_a d_r^b
    //   omega_hat_a^b(Zbar_s) = omega_a^b(Zbar_s) - h_{as} Ups^b
    //   theta-component completed from the new structure equation
    //   A_hat_{ab} = A_{ab} + i Ups_{ab} - i Ups_a Ups_b
    let hess = covariant_hessian(s, conn, upsilon);
    let dthetas_hat: Vec<DifferentialForm> =
        structure.coframe.iter().map(|f| f.d(&ctx)).collect();
    let lee_omega: Vec<Vec<DifferentialForm>> = (0..n)
        .map(|a| {
            (0..n)
                .map(|b| {
                    let mut form = DifferentialForm::zero(n, 1);
                    for r in 0..n {
                        let mut val = conn.omega[a][b].evaluate(&[&s.frame[r]]);
                        if a == b {
                            val = &val + &hess.grad[r];
                        }
                        if r == b {
                            val = &val + &hess.grad[a];
                        }
                        if !val.is_zero() {
                            form = form.add(&structure.coframe[r].mul_coeff(&val));
                        }
                        let mut valb = conn.omega[a][b].evaluate(&[&s.frame_bar[r]]);
                        valb = &valb - &(s.levi.entry(a, r) * &ups_up[b]);
                        if !valb.is_zero() {
                            form = form.add(&structure.coframe_bar[r].mul_coeff(&valb));
                        }
                    }
                    let fval = dthetas_hat[b]
                        .evaluate(&[&structure.reeb, &structure.frame[a]])
                        .scale_int(-1);
                    if !fval.is_zero() {
                        form = form.add(&structure.theta.mul_coeff(&fval));
                    }
                    form
                })
                .collect()
        })
        .collect();
    let minus_i = i_unit.scale_int(-1);
    let lee_torsion: Vec<Vec<CoeffElem>> = (0..n)
        .map(|a| {
            (0..n)
                .map(|b| {
                    let law = &(&i_unit * &hess.holo[a][b])
                        + &(&minus_i * &(&hess.grad[a] * &hess.grad[b]));
                    &conn.torsion[a][b] + &law
                })
                .collect()
        })
        .collect();
    let lee = Connection {
        omega: lee_omega,
        torsion: lee_torsion,
    };

    let connections_agree = direct == lee;
    let torsion_law_holds = direct.torsion == lee.torsion;
    Ok(Rescaled {
        structure,
        connection: direct,
        lee_connection: lee,
        report: RescaleReport {
            adaptation_constant: c_const,
            connections_agree,
            torsion_law_holds,
        },
    })
}

/// Express a 1-form in the structure's coframe: `(eta(T), eta(Z_a), eta(Zbar_a))`.
pub fn express_in_coframe(
    s: &PHStructure,
    eta: &DifferentialForm,
) -> (CoeffElem, Vec<CoeffElem>, Vec<CoeffElem>) {
    let t = eta.evaluate(&[&s.reeb]);
    let hol = (0..s.arity)
        .map(|a| eta.evaluate(&[&s.frame[a]]))
        .collect();
    let antih = (0..s.arity)
        .map(|a| eta.evaluate(&[&s.frame_bar[a]]))
        .collect();
    (t, hol, antih)
}
