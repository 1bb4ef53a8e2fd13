//! Dense reference computations for small grids. These share nothing with
//! the banded solvers and time steppers beyond the assembled matrix.

use std::sync::Arc;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::discretize::{Kind, ModeOperator};
use crate::error::{Error, Result};
use crate::semigroup::{default_dt, operator_norm};
use crate::spectra::resolvent_norm_tol;
use crate::stochastic::{covariance_block, noise_mode, CovarianceOptions, NoiseSpectrum};
use crate::{assemble_mode_operator, make_profile, Domain, ProfileSpec, C64};

pub fn dense_matrix(op: &ModeOperator) -> DMatrix<C64> {
    let rows = op.matrix.to_dense();
    let n = rows.len();
    DMatrix::from_fn(n, n, |i, j| rows[i][j])
}

/// |exp(-t A)|_2 from the matrix exponential and an SVD.
pub fn exp_norm(op: &ModeOperator, t: f64) -> f64 {
    let m = dense_matrix(op) * C64::new(-t, 0.0);
    m.exp().singular_values()[0]
}

/// |(A - i lambda)^{-1}|_2 as the reciprocal of the smallest singular value.
pub fn dense_resolvent_norm(op: &ModeOperator, lambda: f64) -> f64 {
    let n = op.grid.n;
    let m = dense_matrix(op) - DMatrix::<C64>::identity(n, n) * C64::new(0.0, lambda);
    let s = m.singular_values();
    1.0 / s.min()
}

/// Solves A X + X A^H = C through the complex Schur form A = U T U^H.
pub fn lyapunov(a: &DMatrix<C64>, c: &DMatrix<C64>) -> Result<DMatrix<C64>> {
    let n = a.nrows();
    let (u, t) = a.clone().schur().unpack();
    let f = u.adjoint() * c * &u;
    // T Y + Y T^H = F, column l couples to the columns p > l
    let mut y = DMatrix::<C64>::zeros(n, n);
    for l in (0..n).rev() {
        let mut rhs = f.column(l).clone_owned();
        for p in l + 1..n {
            let w = t[(l, p)].conj();
            for i in 0..n {
                rhs[i] -= y[(i, p)] * w;
            }
        }
        let shift = t[(l, l)].conj();
        for i in (0..n).rev() {
            let mut s = rhs[i];
            for j in i + 1..n {
                s -= t[(i, j)] * y[(j, l)];
            }
            let d = t[(i, i)] + shift;
            if d.norm() < 1e-300 {
                return Err(Error::SolveFailure {
                    row: i,
                    pivot: d.norm(),
                });
            }
            y[(i, l)] = s / d;
        }
    }
    Ok(&u * y * u.adjoint())
}

/// Stationary covariance of one block from the Lyapunov equation.
pub fn dense_covariance(op: &ModeOperator, noise: &NoiseSpectrum, a: f64) -> Result<DMatrix<C64>> {
    let n = op.grid.n;
    let h = op.grid.h;
    let mut c = DMatrix::<C64>::zeros(n, n);
    for (j, psi) in noise.column(op.k) {
        let e = nalgebra::DVector::from_vec(noise_mode(&op.profile, j));
        c += &e * e.adjoint() * C64::new(op.nu.powf(a) * psi.norm_sqr() * h, 0.0);
    }
    lyapunov(&dense_matrix(op), &c)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleComparison {
    pub case: String,
    pub quantity: String,
    pub implementation: f64,
    pub oracle: f64,
    pub rel_error: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleCase {
    pub profile: &'static str,
    pub domain: Domain,
    pub kind: Kind,
    pub nu: f64,
    pub k: i64,
}

/// Ten operators spanning both domains, both kinds, and several nu and k.
pub fn default_cases() -> Vec<OracleCase> {
    use Domain::*;
    use Kind::*;
    let c = |profile, domain, kind, nu, k| OracleCase {
        profile,
        domain,
        kind,
        nu,
        k,
    };
    vec![
        c("sin", Torus, Elliptic, 1e-1, 1),
        c("sin", Torus, Elliptic, 1e-2, 1),
        c("sin", Torus, Elliptic, 3e-2, 2),
        c("sin", Torus, Hypoelliptic, 1e-1, 3),
        c("sin3", Torus, Elliptic, 1e-1, 1),
        c("sin3", Torus, Elliptic, 2e-2, 2),
        c("cos", Torus, Hypoelliptic, 5e-2, 1),
        c("couette", Channel, Elliptic, 1e-2, 1),
        c("couette", Channel, Hypoelliptic, 3e-2, 2),
        c("quadratic", Channel, Elliptic, 1e-2, 1),
    ]
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

/// Operator norms at two times (Richardson-extrapolated Crank-Nicolson),
/// resolvent norms at two frequencies, and on the torus the covariance block,
/// each against its dense reference.
pub fn compare_case(case: &OracleCase, n: usize) -> Result<Vec<OracleComparison>> {
    let profile = Arc::new(make_profile(
        &ProfileSpec::Builtin(case.profile.into()),
        case.domain,
        n,
    )?);
    let op = assemble_mode_operator(profile.clone(), case.nu, case.k, case.kind)?;
    let name = format!(
        "{} {:?} nu={} k={}",
        case.profile, case.kind, case.nu, case.k
    );
    let mut out = vec![];
    let mut push = |quantity: String, implementation: f64, oracle: f64| {
        out.push(OracleComparison {
            case: name.clone(),
            quantity,
            implementation,
            oracle,
            rel_error: rel(implementation, oracle),
        })
    };
    let dt = default_dt(&op) / 4.0;
    for t in [1.0, 5.0] {
        let coarse = operator_norm(&op, t, dt, 1e-11)?;
        let fine = operator_norm(&op, t, dt / 2.0, 1e-11)?;
        push(
            format!("|S({t})|"),
            (4.0 * fine - coarse) / 3.0,
            exp_norm(&op, t),
        );
    }
    for lambda in [0.0, 0.3 * case.k as f64] {
        push(
            format!("|R({lambda})|"),
            resolvent_norm_tol(&op, lambda, 1e-11)?,
            dense_resolvent_norm(&op, lambda),
        );
    }
    if case.domain == Domain::Torus && case.kind == Kind::Elliptic {
        let noise = NoiseSpectrum::rational(4, 4, true);
        let a = 1.0;
        let opts = CovarianceOptions {
            dt: Some(dt),
            ..CovarianceOptions::default()
        };
        let block = covariance_block(profile, &noise, case.nu, a, case.k, &opts)?;
        let oracle = dense_covariance(&op, &noise, a)?;
        let diff = (&block.matrix - &oracle).norm() / oracle.norm();
        push(
            "C_k (Frobenius)".into(),
            oracle.norm() * (1.0 + diff),
            oracle.norm(),
        );
    }
    Ok(out)
}

pub fn oracle_panel(n: usize) -> Result<Vec<OracleComparison>> {
    let mut all = vec![];
    for c in default_cases() {
        all.extend(compare_case(&c, n)?);
    }
    Ok(all)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lyapunov_scalar() {
        let a = DMatrix::from_element(1, 1, C64::new(2.0, 3.0));
        let c = DMatrix::from_element(1, 1, C64::new(1.0, 0.0));
        let x = lyapunov(&a, &c).unwrap();
        assert!((x[(0, 0)] - C64::new(0.25, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn lyapunov_residual() {
        let n = 6;
        let a = DMatrix::from_fn(n, n, |i, j| {
            C64::new(
                if i == j {
                    2.0 + i as f64
                } else {
                    0.3 / (1.0 + (i + 2 * j) as f64)
                },
                (i as f64 - j as f64) * 0.1,
            )
        });
        let c = DMatrix::from_fn(n, n, |i, j| C64::new(1.0 / (1.0 + (i + j) as f64), 0.0));
        let x = lyapunov(&a, &c).unwrap();
        let r = &a * &x + &x * a.adjoint() - &c;
        assert!(r.norm() < 1e-12);
    }

    #[test]
    fn panel_agrees() {
        for row in oracle_panel(64).unwrap() {
            assert!(row.rel_error < 1e-6, "{row:?}");
        }
    }
}
