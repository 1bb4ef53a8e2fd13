//! The augmented energy Phi, its time derivative split into individual terms,
//! the decay certificate, and numerical margins of the error estimates used to
//! control the unsigned terms.
//!
//! Discretization: `d` is the centered first difference (clamped at the
//! channel walls), `d_yy` the second-difference matrix of the operator, and
//! inner products are `h sum a conj(b)`.

use serde::{Deserialize, Serialize};

use crate::discretize::{
    first_derivative, forward_difference, second_derivative_matrix, Kind, ModeOperator,
};
use crate::error::{Error, Result};
use crate::partition_weights::HypoWeights;
use crate::semigroup::CnStepper;
use crate::shear_profiles::Domain;
use crate::spectra::model_gap_constants;
use crate::{Grid, C64};

/// Relative slack allowed when checking that Phi is non-increasing.
pub const MONOTONE_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhiParts {
    /// |f|^2
    pub mass: f64,
    /// |sqrt(alpha) d f|^2
    pub alpha_grad: f64,
    /// 2 k Re <i beta u' f, d f>
    pub cross: f64,
    /// k^2 |sqrt(gamma) u' f|^2
    pub gamma_shear: f64,
}

impl PhiParts {
    pub fn total(&self) -> f64 {
        self.mass + self.alpha_grad + self.cross + self.gamma_shear
    }

    /// Lower and upper comparison values
    /// |f|^2 + (|sqrt(alpha) d f|^2 + k^2 |sqrt(gamma) u' f|^2) / 2 and
    /// |f|^2 + 3 (...) / 2, which bracket Phi when beta^2 <= alpha gamma / (2 C0).
    pub fn sandwich(&self) -> (f64, f64) {
        let s = self.alpha_grad + self.gamma_shear;
        (self.mass + 0.5 * s, self.mass + 1.5 * s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DerivativeTerm {
    pub name: String,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhiBreakdown {
    pub total: f64,
    pub parts: PhiParts,
    /// The terms of d/dt Phi along the flow, summing to the derivative.
    pub derivative_terms: Vec<DerivativeTerm>,
}

impl PhiBreakdown {
    pub fn derivative(&self) -> f64 {
        self.derivative_terms.iter().map(|t| t.value).sum()
    }
}

fn check_len(grid: &Grid, f: &[C64]) -> Result<()> {
    if f.len() != grid.n {
        return Err(Error::GridMismatch {
            expected: grid.n,
            found: f.len(),
        });
    }
    Ok(())
}

fn scaled(w: &[f64], f: &[C64]) -> Vec<C64> {
    w.iter().zip(f).map(|(w, v)| v * *w).collect()
}

fn re_i_inner(grid: &Grid, a: &[C64], b: &[C64]) -> f64 {
    // Re <i a, b>
    (grid.inner(a, b) * C64::new(0.0, 1.0)).re
}

pub fn phi_parts(f: &[C64], weights: &HypoWeights) -> Result<PhiParts> {
    let grid = &weights.profile.grid;
    check_len(grid, f)?;
    let p = &weights.profile;
    let k = weights.k;
    let fy = first_derivative(grid, f);
    let bu: Vec<f64> = weights.beta.iter().zip(&p.du).map(|(b, d)| b * d).collect();
    let gu2: Vec<f64> = weights
        .gamma
        .iter()
        .zip(&p.du)
        .map(|(g, d)| g * d * d)
        .collect();
    Ok(PhiParts {
        mass: grid.norm_sqr(f),
        alpha_grad: grid.weighted_norm_sqr(&weights.alpha, &fy),
        cross: 2.0 * k * re_i_inner(grid, &scaled(&bu, f), &fy),
        gamma_shear: k * k * grid.weighted_norm_sqr(&gu2, f),
    })
}

/// Phi(f) with every part and every term of its time derivative.
pub fn phi_value(f: &[C64], weights: &HypoWeights, kind: Kind) -> Result<PhiBreakdown> {
    let parts = phi_parts(f, weights)?;
    let derivative_terms = derivative_terms(f, weights, kind)?;
    Ok(PhiBreakdown {
        total: parts.total(),
        parts,
        derivative_terms,
    })
}

/// The terms of d/dt Phi for d/dt f = -A f. Terms that only the k^2 part of
/// the elliptic operator produces are reported as zero for the hypoelliptic one.
pub fn derivative_terms(
    f: &[C64],
    weights: &HypoWeights,
    kind: Kind,
) -> Result<Vec<DerivativeTerm>> {
    let grid = &weights.profile.grid;
    check_len(grid, f)?;
    let p = &weights.profile;
    let (nu, k) = (weights.nu, weights.k);
    let (k2, k3, k4) = (k * k, k * k * k, k * k * k * k);
    let fy = first_derivative(grid, f);
    let fyy = second_derivative_matrix(grid).matvec(f);
    let n = grid.n;
    let mul = |a: &[f64], b: &[f64]| -> Vec<f64> { (0..n).map(|i| a[i] * b[i]).collect() };
    let (a, b, g) = (&weights.alpha, &weights.beta, &weights.gamma);
    let (du, d2u, d3u) = (&p.du, &p.d2u, &p.d3u);
    let bu1 = mul(b, du);
    let gu1sq = mul(g, &mul(du, du));
    let w = |x: &[f64], v: &[C64]| scaled(x, v);
    let ri = |x: &[C64], y: &[C64]| re_i_inner(grid, x, y);
    let re = |x: &[C64], y: &[C64]| grid.inner(x, y).re;

    let mut t = vec![
        ("nu k^2 |f|^2", -2.0 * nu * k2 * grid.norm_sqr(f)),
        ("nu |d f|^2", -2.0 * nu * grid.norm_sqr(&fy)),
        (
            "nu k^2 |sqrt(alpha) d f|^2",
            -2.0 * nu * k2 * grid.weighted_norm_sqr(a, &fy),
        ),
        (
            "nu |sqrt(alpha) d_yy f|^2",
            -2.0 * nu * grid.weighted_norm_sqr(a, &fyy),
        ),
        (
            "k <i alpha u' f, d f>",
            -2.0 * k * ri(&w(&mul(a, du), f), &fy),
        ),
        (
            "nu <alpha' d f, d_yy f>",
            -2.0 * nu * re(&w(&weights.dalpha, &fy), &fyy),
        ),
        (
            "k^2 |sqrt(beta) u' f|^2",
            -2.0 * k2 * grid.weighted_norm_sqr(&mul(&bu1, du), f),
        ),
        (
            "nu k^3 <i beta u' f, d f>",
            -4.0 * nu * k3 * ri(&w(&bu1, f), &fy),
        ),
        (
            "nu k <i beta u' d_yy f, d f>",
            4.0 * nu * k * ri(&w(&bu1, &fyy), &fy),
        ),
        (
            "nu k <i beta u''' f, d f>",
            2.0 * nu * k * ri(&w(&mul(b, d3u), f), &fy),
        ),
        (
            "nu k <i beta' u'' f, d f>",
            4.0 * nu * k * ri(&w(&mul(&weights.dbeta, d2u), f), &fy),
        ),
        (
            "nu k <i beta'' u' f, d f>",
            2.0 * nu * k * ri(&w(&mul(&weights.d2beta, du), f), &fy),
        ),
        (
            "nu k^4 |sqrt(gamma) u' f|^2",
            -2.0 * nu * k4 * grid.weighted_norm_sqr(&gu1sq, f),
        ),
        (
            "nu k^2 |sqrt(gamma) u' d f|^2",
            -2.0 * nu * k2 * grid.weighted_norm_sqr(&gu1sq, &fy),
        ),
        (
            "nu k^2 <gamma u' u'' f, d f>",
            -4.0 * nu * k2 * re(&w(&mul(g, &mul(du, d2u)), f), &fy),
        ),
        (
            "nu k^2 <gamma' u' f, u' d f>",
            -2.0 * nu * k2 * re(&w(&mul(&weights.dgamma, du), f), &w(du, &fy)),
        ),
    ];
    if kind == Kind::Hypoelliptic {
        for i in [0, 2, 7, 12] {
            t[i].1 = 0.0;
        }
    }
    if p.domain == Domain::Channel {
        // 2 nu k [Re(i beta u' f conj(d_yy f))] from y = 0 to y = 1
        let wall = |y: f64, i: usize| {
            let v = C64::new(0.0, 1.0) * weights.beta_at(y) * p.eval(y, 1) * f[i] * fyy[i].conj();
            v.re
        };
        t.push((
            "nu k [i beta u' f d_yy f] walls",
            2.0 * nu * k * (wall(1.0, n - 1) - wall(0.0, 0)),
        ));
    }
    Ok(t.into_iter()
        .map(|(name, value)| DerivativeTerm {
            name: name.into(),
            value,
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivativeResidual {
    /// Second-order difference of Phi over two forward steps f0 -> f1 -> f2.
    pub finite_difference: f64,
    /// Sum of the derivative terms at f0.
    pub term_sum: f64,
    /// |finite_difference - term_sum| / |term_sum|
    pub relative: f64,
}

/// Compares the summed derivative terms with a one-sided time difference of
/// Phi along two Crank-Nicolson steps of size `dt`.
pub fn phi_derivative_residual(
    op: &ModeOperator,
    weights: &HypoWeights,
    f: &[C64],
    dt: f64,
) -> Result<DerivativeResidual> {
    check_len(&op.grid, f)?;
    check_len(&weights.profile.grid, f)?;
    if !(dt > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "dt must be positive, got {dt}"
        )));
    }
    // Stepping backwards with Crank-Nicolson is singular whenever dt/2 meets
    // the inverse of an eigenvalue, so use the second-order one-sided
    // difference (-3 Phi(f0) + 4 Phi(f1) - Phi(f2)) / (2 dt) at f0 = f.
    let mut stepper = CnStepper::new(&op.matrix, dt)?;
    let mut f1 = f.to_vec();
    stepper.step(&mut f1);
    let mut f2 = f1.clone();
    stepper.step(&mut f2);
    let phi = |g: &[C64]| phi_parts(g, weights).map(|p| p.total());
    let fd = (-3.0 * phi(f)? + 4.0 * phi(&f1)? - phi(&f2)?) / (2.0 * dt);
    let sum: f64 = derivative_terms(f, weights, op.kind)?
        .iter()
        .map(|t| t.value)
        .sum();
    Ok(DerivativeResidual {
        finite_difference: fd,
        term_sum: sum,
        relative: (fd - sum).abs() / sum.abs().max(f64::MIN_POSITIVE),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub lambda_tilde: f64,
    pub dt: f64,
    pub times: Vec<f64>,
    pub phi: Vec<f64>,
    pub mass: Vec<f64>,
    /// Phi never increased by more than MONOTONE_TOL relative.
    pub monotone: bool,
    /// inf over steps of -ln(Phi(t + dt) / Phi(t)) / (dt lambda_tilde).
    pub eps_measured: f64,
    /// |f(t)|^2 <= Phi(0) exp(-eps_measured lambda_tilde t) at every sample.
    pub bound_holds: bool,
    /// First step where Phi grew, if any.
    pub first_increase: Option<f64>,
}

/// Propagates f0 and records Phi at every step without judging the outcome.
pub fn certificate_report(
    op: &ModeOperator,
    weights: &HypoWeights,
    f0: &[C64],
    t_final: f64,
    dt: f64,
) -> Result<Certificate> {
    check_len(&op.grid, f0)?;
    check_len(&weights.profile.grid, f0)?;
    if !(dt > 0.0) || !(t_final > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "need dt, t_final > 0, got {dt}, {t_final}"
        )));
    }
    let steps = (t_final / dt).ceil() as usize;
    let dt = t_final / steps as f64;
    let mut stepper = CnStepper::new(&op.matrix, dt)?;
    let mut f = f0.to_vec();
    let first = phi_parts(&f, weights)?;
    let lt = weights.lambda_tilde;
    let mut cert = Certificate {
        lambda_tilde: lt,
        dt,
        times: vec![0.0],
        phi: vec![first.total()],
        mass: vec![first.mass],
        monotone: true,
        eps_measured: f64::INFINITY,
        bound_holds: true,
        first_increase: None,
    };
    for s in 1..=steps {
        stepper.step(&mut f);
        let parts = phi_parts(&f, weights)?;
        let (prev, cur) = (*cert.phi.last().unwrap(), parts.total());
        let t = s as f64 * dt;
        if cur > prev * (1.0 + MONOTONE_TOL) && cert.first_increase.is_none() {
            cert.monotone = false;
            cert.first_increase = Some(t);
        }
        cert.eps_measured = cert.eps_measured.min(-(cur / prev).ln() / (dt * lt));
        cert.times.push(t);
        cert.phi.push(cur);
        cert.mass.push(parts.mass);
    }
    let phi0 = cert.phi[0];
    cert.bound_holds = cert.eps_measured > 0.0
        && cert
            .times
            .iter()
            .zip(&cert.mass)
            .all(|(t, m)| *m <= phi0 * (-cert.eps_measured * lt * t).exp() * (1.0 + 1e-12));
    Ok(cert)
}

/// Certificate that fails with `CertificateFailed` unless Phi decays
/// monotonically at a positive rate.
pub fn certify_decay(
    op: &ModeOperator,
    weights: &HypoWeights,
    f0: &[C64],
    t_final: f64,
    dt: f64,
) -> Result<Certificate> {
    let cert = certificate_report(op, weights, f0, t_final, dt)?;
    if let Some(time) = cert.first_increase {
        return Err(Error::CertificateFailed {
            time,
            reason: "Phi increased".into(),
        });
    }
    if !(cert.eps_measured > 0.0) {
        return Err(Error::CertificateFailed {
            time: t_final,
            reason: format!("no positive decay rate (eps = {:e})", cert.eps_measured),
        });
    }
    Ok(cert)
}

/// Which derivative a lemma term applies to the (possibly localized) input.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Deriv {
    Value,
    /// Centered difference.
    First,
    /// Forward difference, whose squared norm is the discrete Dirichlet form.
    Forward,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum LemmaTerm {
    /// coeff |outer D(inner f)|^2
    Norm {
        coeff: f64,
        outer: Vec<f64>,
        deriv: Deriv,
        inner: Option<Vec<f64>>,
    },
    /// coeff |<w1 D1 f, w2 D2 f>|
    AbsPairing {
        coeff: f64,
        left: Vec<f64>,
        left_deriv: Deriv,
        right: Vec<f64>,
        right_deriv: Deriv,
    },
}

impl LemmaTerm {
    fn evaluate(&self, grid: &Grid, f: &[C64]) -> f64 {
        let apply = |d: Deriv, v: &[C64]| match d {
            Deriv::Value => v.to_vec(),
            Deriv::First => first_derivative(grid, v),
            Deriv::Forward => forward_difference(grid, v),
        };
        match self {
            LemmaTerm::Norm {
                coeff,
                outer,
                deriv,
                inner,
            } => {
                let g = match inner {
                    Some(w) => scaled(w, f),
                    None => f.to_vec(),
                };
                let sq: Vec<f64> = outer.iter().map(|o| o * o).collect();
                coeff * grid.weighted_norm_sqr(&sq, &apply(*deriv, &g))
            }
            LemmaTerm::AbsPairing {
                coeff,
                left,
                left_deriv,
                right,
                right_deriv,
            } => {
                let a = scaled(left, &apply(*left_deriv, f));
                let b = scaled(right, &apply(*right_deriv, f));
                coeff * grid.inner(&a, &b).norm()
            }
        }
    }
}

/// An inequality lhs <= constant * rhs between sums of weighted norms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LemmaForm {
    pub id: String,
    pub lhs: Vec<LemmaTerm>,
    pub rhs: Vec<LemmaTerm>,
    pub constant: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LemmaMargin {
    pub id: String,
    pub lhs: f64,
    /// constant * rhs
    pub bound: f64,
    /// bound - lhs; non-negative when the inequality holds.
    pub margin: f64,
}

impl LemmaForm {
    pub fn evaluate(&self, grid: &Grid, f: &[C64]) -> LemmaMargin {
        let lhs: f64 = self.lhs.iter().map(|t| t.evaluate(grid, f)).sum();
        let bound = self.constant * self.rhs.iter().map(|t| t.evaluate(grid, f)).sum::<f64>();
        LemmaMargin {
            id: self.id.clone(),
            lhs,
            bound,
            margin: bound - lhs,
        }
    }
}

/// Identifiers of every lemma checked for this domain and profile order.
pub fn lemma_ids(domain: Domain, n0: usize) -> Vec<String> {
    let base: &[&str] = match domain {
        Domain::Torus => &["err1", "err2", "err3", "err3bis", "err4", "err6", "err7"],
        Domain::Channel => &[
            "err1_bdy",
            "err2_bdy",
            "err3_bdy",
            "err3_bdybis",
            "err4_bdy",
            "err6_bdy",
            "err7_bdy",
        ],
    };
    let mut ids: Vec<String> = base.iter().map(|s| s.to_string()).collect();
    ids.extend((0..=n0).map(|j| format!("spectrga_{j}")));
    ids
}

fn norm(coeff: f64, outer: Vec<f64>, deriv: Deriv, inner: Option<Vec<f64>>) -> LemmaTerm {
    LemmaTerm::Norm {
        coeff,
        outer,
        deriv,
        inner,
    }
}

/// Builds the inequality named `id` for these weights.
pub fn lemma_form(id: &str, weights: &HypoWeights) -> Result<LemmaForm> {
    let p = &weights.profile;
    let n = p.grid.n;
    let (nu, k) = (weights.nu, weights.k);
    let k2 = k * k;
    let c0 = weights.ledger.c0;
    let small = 1.0 / (14.0 * c0);
    let map = |f: &dyn Fn(usize) -> f64| -> Vec<f64> { (0..n).map(f).collect() };
    let ones = vec![1.0; n];
    let (a, b, g) = (&weights.alpha, &weights.beta, &weights.gamma);
    let du = &p.du;
    let safe_div = |x: f64, y: f64| if y > 0.0 { x / y } else { 0.0 };

    let alpha_ratio = map(&|i| safe_div(weights.dalpha[i], a[i].sqrt()));
    let sqrt_g_du = map(&|i| g[i].sqrt() * du[i].abs());
    let sqrt_b_du = map(&|i| b[i].sqrt() * du[i].abs());
    let b_d3u = map(&|i| b[i] * p.d3u[i]);
    let sqrt_g_d2u = map(&|i| g[i].sqrt() * p.d2u[i]);
    let db_d2u = map(&|i| weights.dbeta[i] * p.d2u[i]);
    let d2b_du = map(&|i| weights.d2beta[i] * du[i]);
    let gamma_ratio = map(&|i| safe_div(weights.dgamma[i], g[i].sqrt()) * du[i]);
    let sqrt_phi_b: Vec<f64> = weights
        .partition
        .boundary_total()
        .iter()
        .map(|v| v.sqrt())
        .collect();
    let r = weights.rate_order.min(weights.eps_beta.len() - 1);
    let shift = weights.eps_alpha[r] / weights.eps_beta[r] * weights.lambda_tilde;
    let mismatch = map(&|i| k * du[i] * (a[i] - shift * b[i]));

    let grad = |inner: Option<Vec<f64>>| norm(nu, ones.clone(), Deriv::First, inner);
    let shear = |inner: Option<Vec<f64>>| norm(k2, sqrt_b_du.clone(), Deriv::Value, inner);
    let gamma_grad = norm(nu * k2, sqrt_g_du.clone(), Deriv::First, None);
    let fb = || Some(sqrt_phi_b.clone());
    let channel = p.domain == Domain::Channel;
    let torus_only = |form: LemmaForm| {
        if channel {
            Err(Error::UnknownLemma(id.into()))
        } else {
            Ok(form)
        }
    };
    let channel_only = |form: LemmaForm| {
        if channel {
            Ok(form)
        } else {
            Err(Error::UnknownLemma(id.into()))
        }
    };
    let form = |lhs: Vec<LemmaTerm>, rhs: Vec<LemmaTerm>, constant: f64| LemmaForm {
        id: id.into(),
        lhs,
        rhs,
        constant,
    };

    match id {
        "err1" => torus_only(form(
            vec![norm(nu, alpha_ratio, Deriv::First, None)],
            vec![gamma_grad],
            small,
        )),
        "err2" => torus_only(form(
            vec![norm(nu * k2, b_d3u, Deriv::Value, None)],
            vec![grad(None), shear(None)],
            small,
        )),
        "err3" => torus_only(form(
            vec![norm(nu * k2, sqrt_g_d2u, Deriv::Value, None)],
            vec![grad(None), shear(None)],
            small,
        )),
        "err3bis" => torus_only(form(
            vec![norm(nu * k2, db_d2u, Deriv::Value, None)],
            vec![shear(None)],
            small,
        )),
        "err4" => torus_only(form(
            vec![norm(nu * k2, d2b_du, Deriv::Value, None)],
            vec![shear(None)],
            small,
        )),
        "err6" => torus_only(form(
            vec![norm(nu * k2, gamma_ratio, Deriv::Value, None)],
            vec![shear(None)],
            small,
        )),
        "err7" => torus_only(form(
            vec![LemmaTerm::AbsPairing {
                coeff: 1.0,
                left: mismatch,
                left_deriv: Deriv::Value,
                right: ones.clone(),
                right_deriv: Deriv::First,
            }],
            vec![grad(None), shear(None)],
            1.0 / 14.0,
        )),
        "err1_bdy" => channel_only(form(
            vec![norm(nu, alpha_ratio, Deriv::First, fb())],
            vec![grad(fb()), gamma_grad],
            small,
        )),
        "err2_bdy" => channel_only(form(
            vec![norm(nu * k2, b_d3u, Deriv::Value, fb())],
            vec![shear(fb())],
            small,
        )),
        "err3_bdy" => channel_only(form(
            vec![norm(nu * k2, sqrt_g_d2u, Deriv::Value, fb())],
            vec![shear(fb())],
            small,
        )),
        "err3_bdybis" => channel_only(form(
            vec![norm(nu * k2, db_d2u, Deriv::Value, fb())],
            vec![shear(fb())],
            small,
        )),
        "err4_bdy" => channel_only(form(
            vec![norm(nu * k2, d2b_du, Deriv::Value, fb())],
            vec![grad(fb()), shear(fb())],
            small,
        )),
        "err6_bdy" => channel_only(form(
            vec![norm(nu * k2, gamma_ratio, Deriv::Value, fb())],
            vec![grad(fb()), shear(fb())],
            small,
        )),
        "err7_bdy" => channel_only(form(
            vec![LemmaTerm::AbsPairing {
                coeff: 1.0,
                left: mismatch,
                left_deriv: Deriv::Value,
                right: ones.clone(),
                right_deriv: Deriv::First,
            }],
            vec![grad(None), shear(None)],
            small,
        )),
        _ => {
            let j: usize = id
                .strip_prefix("spectrga_")
                .and_then(|s| s.parse().ok())
                .filter(|&j| j <= weights.partition.n0)
                .ok_or_else(|| Error::UnknownLemma(id.into()))?;
            let b_j = model_gap_constants(p, &weights.partition)?[j];
            let jf = j as f64;
            let scale = k2 * weights.beta_j[j] * weights.eps_beta[j];
            let sqrt_phi: Vec<f64> = weights.partition.phi[j]
                .v
                .iter()
                .map(|v| v.sqrt())
                .collect();
            let abs_du = map(&|i| du[i].abs());
            Ok(form(
                vec![norm(
                    scale.powf(1.0 / (jf + 1.0)) * nu.powf(jf / (jf + 1.0)),
                    ones.clone(),
                    Deriv::Value,
                    Some(sqrt_phi.clone()),
                )],
                vec![
                    norm(nu, ones, Deriv::Forward, Some(sqrt_phi.clone())),
                    norm(scale, abs_du, Deriv::Value, Some(sqrt_phi)),
                ],
                2.0 / b_j,
            ))
        }
    }
}

/// bound - lhs of lemma `id` at f.
pub fn lemma_margin(id: &str, weights: &HypoWeights, f: &[C64]) -> Result<f64> {
    check_len(&weights.profile.grid, f)?;
    Ok(lemma_form(id, weights)?
        .evaluate(&weights.profile.grid, f)
        .margin)
}

/// Every lemma of the domain, built once and evaluated at each input.
pub fn lemma_panel(weights: &HypoWeights, inputs: &[Vec<C64>]) -> Result<Vec<Vec<LemmaMargin>>> {
    let grid = &weights.profile.grid;
    let forms: Vec<LemmaForm> = lemma_ids(grid.domain, weights.partition.n0)
        .iter()
        .map(|id| lemma_form(id, weights))
        .collect::<Result<_>>()?;
    inputs
        .iter()
        .map(|f| {
            check_len(grid, f)?;
            Ok(forms.iter().map(|form| form.evaluate(grid, f)).collect())
        })
        .collect()
}
