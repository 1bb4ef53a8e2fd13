//! Stationary covariance of the additively forced advection-diffusion
//! equation on the torus, computed block by block in the x-frequency k.
//!
//! The covariance of frequency k is C_k = nu^a sum_j |psi_kj|^2 int_0^inf
//! v_j(t) v_j(t)^* dt with v_j(t) = S(t) e_kj. Matrices represent operators
//! with respect to the grid inner product, so C_k = h sum w v v^H.

use std::sync::Arc;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::discretize::{forward_difference, Kind};
use crate::error::{Error, Result};
use crate::semigroup::{default_dt, CnStepper};
use crate::shear_profiles::{Domain, ShearProfile};
use crate::{assemble_mode_operator, C64};

/// ||v(T)||^2 / ||v(0)||^2 at which the time integral is cut.
pub const TAIL_RATIO: f64 = 1e-8;
/// Relative tolerance of the block norm power iteration.
pub const BLOCK_NORM_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseEntry {
    pub k: i64,
    pub j: i64,
    pub psi: C64,
}

/// Noise coefficients psi_kj on |k| <= k_max, |j| <= j_max, closed under
/// psi_{-k,-j} = conj(psi_kj). The mean mode (0, 0) is never forced: it is
/// not damped, so no stationary measure exists with it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpectrum {
    pub k_max: i64,
    pub j_max: i64,
    pub entries: Vec<NoiseEntry>,
}

impl NoiseSpectrum {
    /// psi_kj = 1 / (1 + k^2 + j^2), optionally without the k = 0 column.
    pub fn rational(k_max: i64, j_max: i64, kill_zero_mode: bool) -> NoiseSpectrum {
        let mut entries = vec![];
        for k in -k_max..=k_max {
            for j in -j_max..=j_max {
                if (k, j) == (0, 0) || (kill_zero_mode && k == 0) {
                    continue;
                }
                entries.push(NoiseEntry {
                    k,
                    j,
                    psi: C64::new(1.0 / (1.0 + (k * k + j * j) as f64), 0.0),
                });
            }
        }
        NoiseSpectrum {
            k_max,
            j_max,
            entries,
        }
    }

    /// Builds a spectrum from listed entries, adding missing conjugate partners.
    pub fn explicit(given: &[NoiseEntry]) -> Result<NoiseSpectrum> {
        let mut entries: Vec<NoiseEntry> = vec![];
        for e in given {
            if (e.k, e.j) == (0, 0) {
                return Err(Error::InvalidArgument(
                    "the mean mode (0, 0) cannot be forced".into(),
                ));
            }
            for cand in [
                *e,
                NoiseEntry {
                    k: -e.k,
                    j: -e.j,
                    psi: e.psi.conj(),
                },
            ] {
                match entries.iter().find(|x| (x.k, x.j) == (cand.k, cand.j)) {
                    Some(x) if (x.psi - cand.psi).norm() > 1e-14 * (1.0 + x.psi.norm()) => {
                        return Err(Error::InvalidArgument(format!(
                            "psi({}, {}) breaks the reality pairing",
                            cand.k, cand.j
                        )))
                    }
                    Some(_) => {}
                    None => entries.push(cand),
                }
            }
        }
        entries.retain(|e| e.psi != C64::new(0.0, 0.0));
        let k_max = entries.iter().map(|e| e.k.abs()).max().unwrap_or(0);
        let j_max = entries.iter().map(|e| e.j.abs()).max().unwrap_or(0);
        Ok(NoiseSpectrum {
            k_max,
            j_max,
            entries,
        })
    }

    /// sum |psi_kj|^2
    pub fn norm_sqr(&self) -> f64 {
        self.entries.iter().map(|e| e.psi.norm_sqr()).sum()
    }

    pub fn zero_mode_killed(&self) -> bool {
        self.entries.iter().all(|e| e.k != 0)
    }

    /// (j, psi_kj) for one k.
    pub fn column(&self, k: i64) -> Vec<(i64, C64)> {
        self.entries
            .iter()
            .filter(|e| e.k == k)
            .map(|e| (e.j, e.psi))
            .collect()
    }

    /// Distinct forced k in increasing order.
    pub fn frequencies(&self) -> Vec<i64> {
        let mut ks: Vec<i64> = self.entries.iter().map(|e| e.k).collect();
        ks.sort_unstable();
        ks.dedup();
        ks
    }

    pub fn conjugated(&self) -> NoiseSpectrum {
        let mut s = self.clone();
        s.entries.iter_mut().for_each(|e| e.psi = e.psi.conj());
        s
    }
}

/// e^{i j y} / sqrt(2 pi) on the profile grid.
pub fn noise_mode(profile: &ShearProfile, j: i64) -> Vec<C64> {
    let s = 1.0 / (2.0 * std::f64::consts::PI).sqrt();
    profile
        .grid
        .nodes
        .iter()
        .map(|&y| C64::from_polar(s, j as f64 * y))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CovarianceOptions {
    /// Crank-Nicolson step; the operator's default step when None.
    pub dt: Option<f64>,
    /// Integration horizon budget.
    pub t_max: f64,
    /// Combine steps dt and dt/2 to cancel the O(dt^2) quadrature error.
    pub richardson: bool,
}

impl Default for CovarianceOptions {
    fn default() -> Self {
        CovarianceOptions {
            dt: None,
            t_max: 1e7,
            richardson: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceBlock {
    pub k: i64,
    pub matrix: DMatrix<C64>,
    /// Horizon T of the time integral.
    pub t_final: f64,
    /// Bound on the truncated tail int_T^inf in operator norm.
    pub tail_bound: f64,
    /// |C(dt/2) - C(dt)| / 3 in operator norm when Richardson is used.
    pub quadrature_error: Option<f64>,
}

impl CovarianceBlock {
    /// Largest eigenvalue by power iteration.
    pub fn norm(&self) -> Result<f64> {
        hermitian_top_eigenvalue(&self.matrix, BLOCK_NORM_TOL)
    }
}

fn check_torus(profile: &ShearProfile) -> Result<()> {
    if profile.domain != Domain::Torus {
        return Err(Error::InvalidArgument(
            "the stochastic model is posed on the torus".into(),
        ));
    }
    Ok(())
}

/// c = a b for column-major complex matrices.
pub(crate) fn matmul(a: &DMatrix<C64>, b: &DMatrix<C64>) -> DMatrix<C64> {
    assert_eq!(a.ncols(), b.nrows());
    let (m, k, n) = (a.nrows(), a.ncols(), b.ncols());
    let mut c = DMatrix::<C64>::zeros(m, n);
    // SAFETY: num_complex::Complex<f64> is repr(C) with the layout of [f64; 2],
    // and the strides describe the column-major storage of each matrix.
    unsafe {
        matrixmultiply::zgemm(
            matrixmultiply::CGemmOption::Standard,
            matrixmultiply::CGemmOption::Standard,
            m,
            k,
            n,
            [1.0, 0.0],
            a.as_ptr() as *const [f64; 2],
            1,
            m as isize,
            b.as_ptr() as *const [f64; 2],
            1,
            k as isize,
            [0.0, 0.0],
            c.as_mut_ptr() as *mut [f64; 2],
            1,
            m as isize,
        );
    }
    c
}

/// x S x^H
fn congruence(s: &DMatrix<C64>, x: &DMatrix<C64>) -> DMatrix<C64> {
    matmul(&matmul(s, x), &s.adjoint())
}

/// Largest eigenvalue of a Hermitian positive semidefinite matrix.
pub fn hermitian_top_eigenvalue(m: &DMatrix<C64>, tol: f64) -> Result<f64> {
    let n = m.nrows();
    if n == 0 {
        return Ok(0.0);
    }
    let mut x = nalgebra::DVector::<C64>::from_fn(n, |i, _| {
        C64::new(1.0 + (i % 7) as f64 * 0.1, (i % 3) as f64 * 0.1)
    });
    x /= C64::new(x.norm(), 0.0);
    let mut prev = 0.0;
    for _ in 0..20_000 {
        let y = m * &x;
        let lam = y.norm();
        if lam == 0.0 {
            return Ok(0.0);
        }
        x = y / C64::new(lam, 0.0);
        if (lam - prev).abs() <= tol * lam {
            return Ok(lam);
        }
        prev = lam;
    }
    let f = m.norm();
    Err(Error::NoConvergence {
        lower: prev,
        upper: f,
    })
}

/// Dense matrix of one Crank-Nicolson step of size dt.
fn step_matrix(stepper: &mut CnStepper, n: usize) -> DMatrix<C64> {
    let mut s = DMatrix::<C64>::zeros(n, n);
    let mut col = vec![C64::new(0.0, 0.0); n];
    for i in 0..n {
        col.iter_mut().for_each(|v| *v = C64::new(0.0, 0.0));
        col[i] = C64::new(1.0, 0.0);
        stepper.step(&mut col);
        s.column_mut(i).copy_from_slice(&col);
    }
    s
}

fn spectral_norm(m: &DMatrix<C64>) -> Result<f64> {
    Ok(hermitian_top_eigenvalue(&(m.adjoint() * m), 1e-6)?.sqrt())
}

/// Trapezoidal covariance on the Crank-Nicolson grid, summed by doubling:
/// the integral over [0, 2T] is the one over [0, T] plus its conjugation by S(T).
fn doubling_covariance(
    profile: &Arc<ShearProfile>,
    noise: &NoiseSpectrum,
    nu: f64,
    a: f64,
    k: i64,
    dt: f64,
    t_max: f64,
) -> Result<(DMatrix<C64>, f64, f64)> {
    let n = profile.grid.n;
    let h = profile.grid.h;
    let op = assemble_mode_operator(profile.clone(), nu, k, Kind::Elliptic)?;
    let mut stepper = CnStepper::new(&op.matrix, dt)?;
    let mut s = step_matrix(&mut stepper, n);
    let column = noise.column(k);
    let mut b = DMatrix::<C64>::zeros(n, column.len());
    for (c, (j, psi)) in column.iter().enumerate() {
        let e = noise_mode(profile, *j);
        let w = (nu.powf(a) * psi.norm_sqr() * h).sqrt();
        for i in 0..n {
            b[(i, c)] = e[i] * w;
        }
    }
    let forcing = &b * b.adjoint();
    let b0: Vec<f64> = (0..b.ncols()).map(|c| b.column(c).norm_squared()).collect();
    let mut q = (&forcing + congruence(&s, &forcing)) * C64::new(0.5 * dt, 0.0);
    let mut t = dt;
    loop {
        let sb = &s * &b;
        let ratio = (0..b.ncols())
            .map(|c| sb.column(c).norm_squared() / b0[c])
            .fold(0.0, f64::max);
        if ratio < TAIL_RATIO || b.ncols() == 0 {
            let rho = spectral_norm(&s)?.powi(2);
            let tail = if rho < 1.0 {
                hermitian_top_eigenvalue(&q, 1e-6)? * rho / (1.0 - rho)
            } else {
                f64::INFINITY
            };
            return Ok((q, t, tail));
        }
        if 2.0 * t > t_max {
            return Err(Error::TailNotReached { t_max, ratio });
        }
        q = &q + congruence(&s, &q);
        s = matmul(&s, &s);
        t *= 2.0;
    }
}

/// Dense covariance block C_k.
pub fn covariance_block(
    profile: Arc<ShearProfile>,
    noise: &NoiseSpectrum,
    nu: f64,
    a: f64,
    k: i64,
    opts: &CovarianceOptions,
) -> Result<CovarianceBlock> {
    check_torus(&profile)?;
    if !(nu > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "nu must be positive, got {nu}"
        )));
    }
    let dt = match opts.dt {
        Some(dt) => dt,
        None => default_dt(&assemble_mode_operator(
            profile.clone(),
            nu,
            k,
            Kind::Elliptic,
        )?),
    };
    let (coarse, t_final, tail) = doubling_covariance(&profile, noise, nu, a, k, dt, opts.t_max)?;
    let (matrix, quadrature_error) = if opts.richardson {
        let (fine, _, _) = doubling_covariance(&profile, noise, nu, a, k, 0.5 * dt, opts.t_max)?;
        let diff = &fine - &coarse;
        let err = spectral_norm(&diff)? / 3.0;
        (&fine + diff * C64::new(1.0 / 3.0, 0.0), Some(err))
    } else {
        (coarse, None)
    };
    Ok(CovarianceBlock {
        k,
        matrix,
        t_final,
        tail_bound: tail,
        quadrature_error,
    })
}

/// Time integrals of the forced modes of one k, propagated without forming
/// dense matrices. Calls `visit(mode index, weight, v(t))` at every node of the
/// trapezoidal rule; returns the horizon reached.
fn integrate_modes<F>(
    op: &crate::ModeOperator,
    modes: &[Vec<C64>],
    dt: f64,
    t_max: f64,
    mut visit: F,
) -> Result<f64>
where
    F: FnMut(usize, f64, &[C64]),
{
    let grid = &op.grid;
    let mut t_end: f64 = 0.0;
    let mut stepper = CnStepper::new(&op.matrix, dt)?;
    for (idx, e) in modes.iter().enumerate() {
        let mut v = e.clone();
        let n0 = grid.norm_sqr(&v);
        visit(idx, 0.5 * dt, &v);
        let mut t = 0.0;
        loop {
            stepper.step(&mut v);
            t += dt;
            let r = grid.norm_sqr(&v) / n0;
            if r < TAIL_RATIO {
                visit(idx, 0.5 * dt, &v);
                break;
            }
            if t > t_max {
                return Err(Error::TailNotReached { t_max, ratio: r });
            }
            visit(idx, dt, &v);
        }
        t_end = t_end.max(t);
    }
    Ok(t_end)
}

/// Projection P_il = <C_k e_j, e_i> of the covariance onto the forced modes of k.
pub fn projected_block(
    profile: Arc<ShearProfile>,
    noise: &NoiseSpectrum,
    nu: f64,
    a: f64,
    k: i64,
    opts: &CovarianceOptions,
) -> Result<DMatrix<C64>> {
    check_torus(&profile)?;
    let op = assemble_mode_operator(profile.clone(), nu, k, Kind::Elliptic)?;
    let column = noise.column(k);
    let modes: Vec<Vec<C64>> = column
        .iter()
        .map(|(j, _)| noise_mode(&profile, *j))
        .collect();
    let m = modes.len();
    let run = |dt: f64| -> Result<DMatrix<C64>> {
        let mut p = DMatrix::<C64>::zeros(m, m);
        integrate_modes(&op, &modes, dt, opts.t_max, |l, w, v| {
            let c = nu.powf(a) * column[l].1.norm_sqr() * w;
            let proj: Vec<C64> = modes.iter().map(|e| op.grid.inner(v, e)).collect();
            for i in 0..m {
                for j in 0..m {
                    // <C e_j, e_i> = sum <e_j, v> <v, e_i>
                    p[(i, j)] += proj[j].conj() * proj[i] * c;
                }
            }
        })?;
        Ok(p)
    };
    let dt = opts.dt.unwrap_or_else(|| default_dt(&op));
    let coarse = run(dt)?;
    if !opts.richardson {
        return Ok(coarse);
    }
    let fine = run(0.5 * dt)?;
    Ok(&fine + (&fine - &coarse) * C64::new(1.0 / 3.0, 0.0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormSweep {
    pub a: f64,
    /// (nu, ||Q_nu||)
    pub points: Vec<(f64, f64)>,
    /// Slope of log ||Q_nu|| against log nu.
    pub slope: f64,
    /// ||Q_nu|| decreases strictly as nu decreases.
    pub decreasing: bool,
}

/// ||Q_nu|| over nu for noise that leaves the x-average unforced. The blocks
/// of k and -k are complex conjugates of each other, so only k > 0 is solved.
pub fn covariance_norm_sweep(
    profile: Arc<ShearProfile>,
    noise: &NoiseSpectrum,
    a: f64,
    nus: &[f64],
    opts: &CovarianceOptions,
) -> Result<NormSweep> {
    check_torus(&profile)?;
    if !noise.zero_mode_killed() {
        return Err(Error::InvalidArgument(
            "the sweep needs psi_0j = 0 for every j".into(),
        ));
    }
    if nus.len() < 2 {
        return Err(Error::InvalidArgument(
            "the sweep needs at least two viscosities".into(),
        ));
    }
    let ks: Vec<i64> = noise.frequencies().into_iter().filter(|k| *k > 0).collect();
    let mut points = vec![];
    for &nu in nus {
        let norms: Vec<f64> = ks
            .par_iter()
            .map(|&k| covariance_block(profile.clone(), noise, nu, a, k, opts)?.norm())
            .collect::<Result<_>>()?;
        points.push((nu, norms.into_iter().fold(0.0, f64::max)));
    }
    let mut sorted = points.clone();
    sorted.sort_by(|x, y| x.0.total_cmp(&y.0));
    let decreasing = sorted.windows(2).all(|w| w[0].1 < w[1].1);
    let design: Vec<Vec<f64>> = sorted.iter().map(|p| vec![1.0, p.0.ln()]).collect();
    let ys: Vec<f64> = sorted.iter().map(|p| p.1.ln()).collect();
    let (coef, _) = crate::least_squares(&design, &ys);
    Ok(NormSweep {
        a,
        points,
        slope: coef[1],
        decreasing,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyCheck {
    /// 2 nu E|f|_{H^1}^2
    pub dissipation: f64,
    /// nu^a |Psi|^2
    pub injection: f64,
    pub relative_error: f64,
    pub dt: f64,
}

/// Balance between injected and dissipated energy of the stationary state,
/// with |grad_k v|^2 = k^2 |v|^2 + |D+ v|^2.
pub fn stationary_energy_check(
    profile: Arc<ShearProfile>,
    noise: &NoiseSpectrum,
    nu: f64,
    a: f64,
    opts: &CovarianceOptions,
) -> Result<EnergyCheck> {
    check_torus(&profile)?;
    let ks = noise.frequencies();
    let dts: Vec<f64> = ks
        .iter()
        .map(|&k| {
            Ok(opts.dt.unwrap_or(default_dt(&assemble_mode_operator(
                profile.clone(),
                nu,
                k,
                Kind::Elliptic,
            )?)))
        })
        .collect::<Result<_>>()?;
    let dt = dts.iter().copied().fold(f64::INFINITY, f64::min);
    let total = |dt: f64| -> Result<f64> {
        let parts: Vec<f64> = ks
            .par_iter()
            .map(|&k| {
                let op = assemble_mode_operator(profile.clone(), nu, k, Kind::Elliptic)?;
                let column = noise.column(k);
                let modes: Vec<Vec<C64>> = column
                    .iter()
                    .map(|(j, _)| noise_mode(&profile, *j))
                    .collect();
                let k2 = (k * k) as f64;
                let mut acc = 0.0;
                integrate_modes(&op, &modes, dt, opts.t_max, |l, w, v| {
                    let grad = k2 * op.grid.norm_sqr(v)
                        + op.grid.norm_sqr(&forward_difference(&op.grid, v));
                    acc += column[l].1.norm_sqr() * w * grad;
                })?;
                Ok(acc)
            })
            .collect::<Result<_>>()?;
        Ok(nu.powf(a) * parts.iter().sum::<f64>())
    };
    let mut energy = total(dt)?;
    if opts.richardson {
        let fine = total(0.5 * dt)?;
        energy = fine + (fine - energy) / 3.0;
    }
    let injection = nu.powf(a) * noise.norm_sqr();
    let dissipation = 2.0 * nu * energy;
    Ok(EnergyCheck {
        dissipation,
        injection,
        relative_error: (dissipation - injection).abs() / injection,
        dt,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::{make_profile, ProfileSpec};

    fn profile(name: &str, n: usize) -> Arc<ShearProfile> {
        Arc::new(make_profile(&ProfileSpec::Builtin(name.into()), Domain::Torus, n).unwrap())
    }

    #[test]
    fn rational_noise_is_paired() {
        let s = NoiseSpectrum::rational(4, 4, true);
        assert!(s.zero_mode_killed());
        assert_eq!(s.entries.len(), 8 * 9);
        let full = NoiseSpectrum::rational(4, 4, false);
        assert_eq!(full.entries.len(), 80);
        let again = NoiseSpectrum::explicit(&full.entries).unwrap();
        assert_eq!(again.entries.len(), 80);
    }

    #[test]
    fn explicit_noise_fills_partners() {
        let s = NoiseSpectrum::explicit(&[NoiseEntry {
            k: 1,
            j: 2,
            psi: C64::new(0.0, 1.0),
        }])
        .unwrap();
        assert_eq!(s.column(-1), vec![(-2, C64::new(0.0, -1.0))]);
        let bad = [
            NoiseEntry {
                k: 1,
                j: 0,
                psi: C64::new(1.0, 0.0),
            },
            NoiseEntry {
                k: -1,
                j: 0,
                psi: C64::new(2.0, 0.0),
            },
        ];
        assert!(NoiseSpectrum::explicit(&bad).is_err());
    }

    #[test]
    fn scalar_ou_variance() {
        // u = 0, one mode: C_1 is rank one with norm nu^{a-1} / (2 (k^2 + j^2))
        let p = profile("zero", 64);
        let noise = NoiseSpectrum::explicit(&[NoiseEntry {
            k: 1,
            j: 0,
            psi: C64::new(1.0, 0.0),
        }])
        .unwrap();
        let (nu, a) = (0.1, 0.7);
        let block = covariance_block(p, &noise, nu, a, 1, &CovarianceOptions::default()).unwrap();
        let expected = nu.powf(a - 1.0) / 2.0;
        assert!((block.norm().unwrap() - expected).abs() < 1e-6 * expected);
        let herm = (&block.matrix - block.matrix.adjoint()).norm();
        assert!(herm < 1e-12 * block.matrix.norm());
    }

    #[test]
    fn zero_frequency_is_diagonal() {
        let p = profile("sin", 256);
        let noise = NoiseSpectrum::rational(1, 3, false);
        let block = projected_block(p, &noise, 1.0, 1.0, 0, &CovarianceOptions::default()).unwrap();
        let column = noise.column(0);
        let h = 2.0 * std::f64::consts::PI / 256.0;
        for (i, (j, psi)) in column.iter().enumerate() {
            let jf = *j as f64;
            // discrete Laplacian symbol of e^{i j y}
            let lam = (2.0 - 2.0 * (jf * h).cos()) / (h * h);
            let expected = psi.norm_sqr() / (2.0 * lam);
            assert!(
                (block[(i, i)].re - expected).abs() < 2e-8 * expected,
                "j={j}"
            );
            for l in 0..column.len() {
                if l != i {
                    assert!(block[(i, l)].norm() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn energy_balances_for_zero_flow() {
        let p = profile("zero", 64);
        let noise = NoiseSpectrum::explicit(&[NoiseEntry {
            k: 1,
            j: 1,
            psi: C64::new(1.0, 0.0),
        }])
        .unwrap();
        let check =
            stationary_energy_check(p, &noise, 0.2, 1.0, &CovarianceOptions::default()).unwrap();
        assert!(check.relative_error < 1e-6, "{check:?}");
    }

    #[test]
    fn block_is_psd_and_phase_invariant() {
        let p = profile("sin", 64);
        let noise = NoiseSpectrum::explicit(&[
            NoiseEntry {
                k: 1,
                j: 0,
                psi: C64::new(0.3, 0.4),
            },
            NoiseEntry {
                k: 1,
                j: 2,
                psi: C64::new(0.0, 0.2),
            },
        ])
        .unwrap();
        let opts = CovarianceOptions::default();
        let b = covariance_block(p.clone(), &noise, 0.05, 1.0, 1, &opts).unwrap();
        let c = covariance_block(p, &noise.conjugated(), 0.05, 1.0, 1, &opts).unwrap();
        assert!((b.norm().unwrap() - c.norm().unwrap()).abs() < 1e-12);
        let eig = nalgebra::SymmetricEigen::new(b.matrix.clone());
        let trace: f64 = eig.eigenvalues.iter().sum();
        assert!(eig.eigenvalues.iter().all(|l| *l >= -1e-12 * trace));
    }

    #[test]
    fn matmul_matches_nalgebra() {
        let a = DMatrix::<C64>::from_fn(5, 3, |i, j| {
            C64::new(i as f64 - j as f64, (i * j) as f64 * 0.5)
        });
        let b = DMatrix::<C64>::from_fn(3, 4, |i, j| C64::new(1.0 + i as f64, j as f64 - 0.3));
        assert!((matmul(&a, &b) - &a * &b).norm() < 1e-12);
    }
}
