//! Crank–Nicolson propagation of e^{-tA}, operator norms by power iteration,
//! decay-rate extraction and exponent sweeps.

use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::sync::Arc;

use crate::discretize::{assemble_mode_operator, Kind, ModeOperator, Tridiag, TridiagLu};
use crate::error::{Error, Result};
use crate::shear_profiles::ShearProfile;
use crate::{least_squares, random_unit_vector};

pub const DEFAULT_WINDOW: (f64, f64) = (1e-8, 1e-1);
pub const DEFAULT_NORM_TOL: f64 = 1e-6;
pub const MAX_POWER_ITERS: usize = 2000;
pub const NORM_SEED: u64 = 0x5eed;

/// One Crank–Nicolson step (I + dt/2 M) x' = (I - dt/2 M) x with the implicit
/// matrix factored once.
#[derive(Debug, Clone)]
pub struct CnStepper {
    implicit: TridiagLu,
    explicit: Tridiag,
    scratch: Vec<C64>,
    pub dt: f64,
}

impl CnStepper {
    /// Stepper for d/dt f = -M f. A negative `dt` steps backwards in time.
    pub fn new(m: &Tridiag, dt: f64) -> Result<CnStepper> {
        let one = C64::new(1.0, 0.0);
        Ok(CnStepper {
            implicit: m.affine(one, 0.5 * dt).factor()?,
            explicit: m.affine(one, -0.5 * dt),
            scratch: vec![C64::new(0.0, 0.0); m.n()],
            dt,
        })
    }

    pub fn step(&mut self, f: &mut [C64]) {
        self.explicit.matvec_into(f, &mut self.scratch);
        f.copy_from_slice(&self.scratch);
        self.implicit.solve_in_place(f);
    }

    pub fn steps(&mut self, f: &mut [C64], count: usize) {
        for _ in 0..count {
            self.step(f);
        }
    }
}

/// Forward and adjoint steppers of one operator, reused across calls.
#[derive(Debug, Clone)]
pub struct Propagator {
    forward: CnStepper,
    adjoint: CnStepper,
    matrix: Tridiag,
    pub dt: f64,
}

impl Propagator {
    pub fn new(op: &ModeOperator, dt: f64) -> Result<Propagator> {
        Propagator::from_matrix(&op.matrix, dt)
    }

    pub fn from_matrix(m: &Tridiag, dt: f64) -> Result<Propagator> {
        if !(dt > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "time step must be positive, got {dt}"
            )));
        }
        let adj = m.adjoint();
        Ok(Propagator {
            forward: CnStepper::new(m, dt)?,
            adjoint: CnStepper::new(&adj, dt)?,
            matrix: m.clone(),
            dt,
        })
    }

    fn split(&self, t: f64) -> (usize, f64) {
        let full = (t / self.dt * (1.0 + 1e-12)).floor();
        let rest = t - full * self.dt;
        let rest = if rest > 1e-12 * self.dt { rest } else { 0.0 };
        (full as usize, rest)
    }

    fn run(&mut self, f: &mut [C64], t: f64, adjoint: bool) -> Result<()> {
        let (full, rest) = self.split(t);
        let stepper = if adjoint {
            &mut self.adjoint
        } else {
            &mut self.forward
        };
        stepper.steps(f, full);
        if rest > 0.0 {
            let m = if adjoint {
                self.matrix.adjoint()
            } else {
                self.matrix.clone()
            };
            CnStepper::new(&m, rest)?.step(f);
        }
        Ok(())
    }

    /// f <- S(t) f
    pub fn apply(&mut self, f: &mut [C64], t: f64) -> Result<()> {
        self.run(f, t, false)
    }

    /// f <- S(t)* f, the exact adjoint of the discrete propagator.
    pub fn apply_adjoint(&mut self, f: &mut [C64], t: f64) -> Result<()> {
        self.run(f, t, true)
    }

    pub fn step_forward(&mut self, f: &mut [C64]) {
        self.forward.step(f);
    }
}

/// 0.05 / (|k| max|u| + nu k^2 + 1), the nu k^2 term only when the operator
/// carries it, and never above `stiffness_cap`.
pub fn default_dt(op: &ModeOperator) -> f64 {
    let k = op.k as f64;
    let shift = match op.kind {
        Kind::Elliptic => op.nu * k * k,
        Kind::Hypoelliptic => 0.0,
    };
    (0.05 / (op.skew_bound() + shift + 1.0)).min(stiffness_cap(op))
}

/// 0.5 / sqrt(nu |D2|). Crank-Nicolson damps the stiffest diffusive mode
/// lambda only at the rate 4 / (dt^2 lambda), which stays >= 16 below this cap
/// and so never masquerades as a slow late-time rate.
pub fn stiffness_cap(op: &ModeOperator) -> f64 {
    0.5 * op.grid.h / (2.0 * op.nu.sqrt())
}

pub fn propagate(op: &ModeOperator, f0: &[C64], t_final: f64, dt: f64) -> Result<Vec<C64>> {
    if f0.len() != op.grid.n {
        return Err(Error::GridMismatch {
            expected: op.grid.n,
            found: f0.len(),
        });
    }
    let mut p = Propagator::new(op, dt)?;
    let mut f = f0.to_vec();
    p.apply(&mut f, t_final)?;
    Ok(f)
}

#[derive(Debug, Clone)]
pub struct NormEstimate {
    pub norm: f64,
    /// Approximate top right singular vector, unit grid norm.
    pub vector: Vec<C64>,
    pub iterations: usize,
}

/// Largest singular value of the discrete propagator at time t.
pub fn operator_norm(op: &ModeOperator, t: f64, dt: f64, tol: f64) -> Result<f64> {
    let mut p = Propagator::new(op, dt)?;
    Ok(operator_norm_with(&mut p, op, t, tol, None)?.norm)
}

/// Subspace iteration on S(t)* S(t), optionally warm-started.
pub fn operator_norm_with(
    p: &mut Propagator,
    op: &ModeOperator,
    t: f64,
    tol: f64,
    start: Option<&[C64]>,
) -> Result<NormEstimate> {
    let grid = &op.grid;
    if t == 0.0 {
        let mut x = match start {
            Some(s) => s.to_vec(),
            None => random_unit_vector(grid, NORM_SEED),
        };
        normalize(grid, &mut x);
        return Ok(NormEstimate {
            norm: 1.0,
            vector: x,
            iterations: 0,
        });
    }
    let p = std::cell::RefCell::new(p);
    let (norm, mut vector, iterations) = crate::top_singular(
        grid.n,
        start,
        NORM_SEED,
        tol,
        MAX_POWER_ITERS,
        |x| p.borrow_mut().apply(x, t),
        |x| p.borrow_mut().apply_adjoint(x, t),
    )?;
    normalize(grid, &mut vector);
    Ok(NormEstimate {
        norm,
        vector,
        iterations,
    })
}

fn normalize(grid: &crate::Grid, x: &mut [C64]) {
    let s = grid.norm_sqr(x).sqrt();
    if s > 0.0 {
        x.iter_mut().for_each(|v| *v /= s);
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DecayCurve {
    pub times: Vec<f64>,
    pub norms: Vec<f64>,
    pub nu: f64,
    pub k: i64,
    pub kind: Kind,
    pub profile: String,
}

/// Operator norms on a time grid, each warm-started from the previous singular vector.
pub fn decay_curve(op: &ModeOperator, t_grid: &[f64], dt: f64) -> Result<DecayCurve> {
    let mut p = Propagator::new(op, dt)?;
    let mut norms = Vec::with_capacity(t_grid.len());
    let mut warm: Option<Vec<C64>> = None;
    for &t in t_grid {
        let est = operator_norm_with(&mut p, op, t, DEFAULT_NORM_TOL, warm.as_deref())?;
        norms.push(est.norm);
        warm = Some(est.vector);
    }
    Ok(DecayCurve {
        times: t_grid.to_vec(),
        norms,
        nu: op.nu,
        k: op.k,
        kind: op.kind,
        profile: op.profile.name.clone(),
    })
}

/// Geometric time grid with `count` points between t0 and t1.
pub fn geometric_grid(t0: f64, t1: f64, count: usize) -> Vec<f64> {
    let r = (t1 / t0).ln() / (count.max(2) - 1) as f64;
    (0..count).map(|i| t0 * (r * i as f64).exp()).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    pub rate: f64,
    pub prefactor: f64,
    pub residual: f64,
    pub samples: usize,
}

/// Least squares of log norm against t over samples with norm inside `window`.
pub fn fit_decay_rate(curve: &DecayCurve, window: (f64, f64)) -> Result<RateFit> {
    let (lo, hi) = window;
    let pts: Vec<(f64, f64)> = curve
        .times
        .iter()
        .zip(&curve.norms)
        .filter(|(_, &n)| n >= lo && n <= hi)
        .map(|(&t, &n)| (t, n.ln()))
        .collect();
    if pts.len() < 5 {
        return Err(Error::WindowEmpty {
            lo,
            hi,
            found: pts.len(),
            needed: 5,
        });
    }
    let xs: Vec<Vec<f64>> = pts.iter().map(|(t, _)| vec![1.0, *t]).collect();
    let ys: Vec<f64> = pts.iter().map(|(_, l)| *l).collect();
    let (c, residual) = least_squares(&xs, &ys);
    Ok(RateFit {
        rate: -c[1],
        prefactor: c[0].exp(),
        residual,
        samples: pts.len(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LateTimeOptions {
    pub window: (f64, f64),
    pub samples: usize,
    /// None selects `default_dt` with one halving check.
    pub dt: Option<f64>,
    pub tol: f64,
    /// Give up if the propagator has not entered the window by this time.
    pub t_max: f64,
    pub seed: u64,
}

impl Default for LateTimeOptions {
    fn default() -> Self {
        LateTimeOptions {
            window: DEFAULT_WINDOW,
            samples: 6,
            dt: None,
            tol: DEFAULT_NORM_TOL,
            t_max: 1e7,
            seed: NORM_SEED,
        }
    }
}

/// Sampled decay curve restricted to the late-time fit window.
///
/// A seeded random vector is propagated first to estimate where the norm
/// enters and leaves the window; power iterations are then run only at a few
/// times spread across that predicted interval.
pub fn late_time_curve(op: &ModeOperator, opts: &LateTimeOptions) -> Result<DecayCurve> {
    let dt = match opts.dt {
        Some(dt) => dt,
        None => checked_dt(op, opts)?,
    };
    let (lo, hi) = opts.window;
    let grid = &op.grid;
    let mut p = Propagator::new(op, dt)?;

    // pilot: the norm of a generic trajectory decays at the slowest rate
    let mut x = random_unit_vector(grid, opts.seed);
    let stride = ((0.5 / (dt * (op.skew_bound() + 1.0))).ceil() as usize).max(1);
    let mut t = 0.0;
    let mut trace: Vec<(f64, f64)> = vec![(0.0, 0.0)];
    while t < opts.t_max {
        for _ in 0..stride {
            p.step_forward(&mut x);
        }
        t += stride as f64 * dt;
        let l = grid.norm_sqr(&x).sqrt().ln();
        trace.push((t, l));
        if l < (lo * 1e-2).ln() {
            break;
        }
        if trace.len() > 4_000 {
            // thin the trace so long pilots stay cheap to fit
            trace = trace.into_iter().step_by(2).collect();
        }
    }
    let t_enter = trace
        .iter()
        .find(|(_, l)| *l < hi.ln())
        .map(|(t, _)| *t)
        .ok_or(Error::WindowEmpty {
            lo,
            hi,
            found: 0,
            needed: 5,
        })?;
    let tail: Vec<&(f64, f64)> = trace.iter().filter(|(t, _)| *t >= t_enter).collect();
    if tail.len() < 3 {
        return Err(Error::WindowEmpty {
            lo,
            hi,
            found: tail.len(),
            needed: 5,
        });
    }
    let xs: Vec<Vec<f64>> = tail.iter().map(|(t, _)| vec![1.0, *t]).collect();
    let ys: Vec<f64> = tail.iter().map(|(_, l)| *l).collect();
    let (coef, _) = least_squares(&xs, &ys);
    let pilot_rate = -coef[1];
    if !(pilot_rate > 0.0) {
        return Err(Error::WindowEmpty {
            lo,
            hi,
            found: 0,
            needed: 5,
        });
    }

    // the pilot line ln|S(t) x| = c + r t sits below ln|S(t)| by a constant;
    // measure the offset once at the late end, seeded by an adjoint pilot
    // whose direction approaches the top right singular vector
    let line = |target: f64| (coef[0] - target.ln()) / pilot_rate;
    let t_late = line(lo);
    let mut warm = random_unit_vector(grid, opts.seed ^ 1);
    p.apply_adjoint(&mut warm, t_late)?;
    let late = operator_norm_with(&mut p, op, t_late, opts.tol, Some(&warm))?;
    let offset = (late.norm / lo).ln().max(0.0) / pilot_rate;
    let (t_hi, t_lo) = (line(hi) + offset, t_late + offset);
    let span = t_lo - t_hi;
    let m = opts.samples.max(5);
    let times: Vec<f64> = (0..m)
        .map(|i| t_hi + span * (0.03 + 0.94 * i as f64 / (m - 1) as f64))
        .collect();
    // late singular vectors converge fastest, so walk backwards
    let mut norms = vec![0.0; m];
    warm = late.vector;
    for i in (0..m).rev() {
        let est = operator_norm_with(&mut p, op, times[i], opts.tol, Some(&warm))?;
        norms[i] = est.norm;
        warm = est.vector;
    }
    Ok(DecayCurve {
        times,
        norms,
        nu: op.nu,
        k: op.k,
        kind: op.kind,
        profile: op.profile.name.clone(),
    })
}

/// `default_dt`, halved while the norm at the window entry changes by more
/// than 1e-4 relative.
fn checked_dt(op: &ModeOperator, opts: &LateTimeOptions) -> Result<f64> {
    let mut dt = default_dt(op);
    let grid = &op.grid;
    let mut p = Propagator::new(op, dt)?;
    let mut x = random_unit_vector(grid, opts.seed);
    let mut t = 0.0;
    while grid.norm_sqr(&x).sqrt() > opts.window.1 && t < opts.t_max {
        p.step_forward(&mut x);
        t += dt;
    }
    let probe = |dt: f64| -> Result<f64> {
        let mut f = random_unit_vector(grid, opts.seed);
        Propagator::new(op, dt)?.apply(&mut f, t)?;
        Ok(grid.norm_sqr(&f).sqrt())
    };
    let mut a = probe(dt)?;
    for _ in 0..6 {
        let b = probe(dt / 2.0)?;
        if (a - b).abs() <= 1e-4 * b {
            break;
        }
        dt /= 2.0;
        a = b;
    }
    Ok(dt)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RatePoint {
    pub nu: f64,
    pub k: i64,
    pub rate: f64,
    pub prefactor: f64,
    pub residual: f64,
    pub times: Vec<f64>,
    pub norms: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExponentFit {
    pub points: Vec<RatePoint>,
    pub prefactor: f64,
    /// None when nu was not varied.
    pub nu_exponent: Option<f64>,
    /// None when k was not varied.
    pub k_exponent: Option<f64>,
    pub residual: f64,
    pub log_corrected: bool,
    pub window: (f64, f64),
}

/// (1 + log|k| + log nu^{-1})^2
pub fn log_factor(nu: f64, k: i64) -> f64 {
    (1.0 + (k.unsigned_abs() as f64).ln() + (1.0 / nu).ln()).powi(2)
}

/// Late-time decay rate for every (nu, k) pair, in parallel.
pub fn sweep_rates(
    profile: &Arc<ShearProfile>,
    kind: Kind,
    nus: &[f64],
    ks: &[i64],
    opts: &LateTimeOptions,
) -> Result<Vec<RatePoint>> {
    let tasks: Vec<(f64, i64)> = nus
        .iter()
        .flat_map(|&nu| ks.iter().map(move |&k| (nu, k)))
        .collect();
    tasks
        .par_iter()
        .map(|&(nu, k)| {
            let op = assemble_mode_operator(profile.clone(), nu, k, kind)?;
            let curve = late_time_curve(&op, opts)?;
            let fit = fit_decay_rate(&curve, opts.window)?;
            Ok(RatePoint {
                nu,
                k,
                rate: fit.rate,
                prefactor: fit.prefactor,
                residual: fit.residual,
                times: curve.times,
                norms: curve.norms,
            })
        })
        .collect()
}

/// Fits log(rate) = log c + p log nu + q log|k|. With `log_corrected`, the
/// rate is first multiplied by `log_factor`, removing the logarithmic loss of
/// the predicted rate.
pub fn fit_exponents(
    points: &[RatePoint],
    log_corrected: bool,
    window: (f64, f64),
) -> Result<ExponentFit> {
    if points.len() < 2 {
        return Err(Error::InvalidArgument(
            "exponent fit needs at least two rates".into(),
        ));
    }
    let vary_nu = points.iter().any(|p| p.nu != points[0].nu);
    let vary_k = points.iter().any(|p| p.k != points[0].k);
    let xs: Vec<Vec<f64>> = points
        .iter()
        .map(|p| {
            let mut row = vec![1.0];
            if vary_nu {
                row.push(p.nu.ln());
            }
            if vary_k {
                row.push((p.k.unsigned_abs() as f64).ln());
            }
            row
        })
        .collect();
    let ys: Vec<f64> = points
        .iter()
        .map(|p| {
            let r = if log_corrected {
                p.rate * log_factor(p.nu, p.k)
            } else {
                p.rate
            };
            r.ln()
        })
        .collect();
    let (c, residual) = least_squares(&xs, &ys);
    let mut idx = 1;
    let mut take = |flag: bool| {
        flag.then(|| {
            idx += 1;
            c[idx - 1]
        })
    };
    let nu_exponent = take(vary_nu);
    let k_exponent = take(vary_k);
    Ok(ExponentFit {
        points: points.to_vec(),
        prefactor: c[0].exp(),
        nu_exponent,
        k_exponent,
        residual,
        log_corrected,
        window,
    })
}

/// Rates for every pair followed by the exponent fit. All pairs must satisfy
/// nu/|k| <= kappa0.
pub fn sweep_exponents(
    profile: &Arc<ShearProfile>,
    kind: Kind,
    nus: &[f64],
    ks: &[i64],
    kappa0: f64,
    log_corrected: bool,
    opts: &LateTimeOptions,
) -> Result<ExponentFit> {
    for &nu in nus {
        for &k in ks {
            let ratio = nu / k.unsigned_abs() as f64;
            if k == 0 || ratio > kappa0 {
                return Err(Error::ConstraintViolated {
                    name: format!("nu/|k| <= kappa0 at (nu={nu}, k={k})"),
                    margin: kappa0 - ratio,
                });
            }
        }
    }
    let points = sweep_rates(profile, kind, nus, ks, opts)?;
    fit_exponents(&points, log_corrected, opts.window)
}

/// Grid size for a sweep: n, doubled while the layer width (nu/|k|)^{1/(n0+3)}
/// spans fewer than 8 cells, applied only when nu < 1e-6.
pub fn refined_grid_size(n: usize, nu: f64, k: i64, n0: usize, length: f64) -> usize {
    if nu >= 1e-6 {
        return n;
    }
    let width = (nu / k.unsigned_abs() as f64).powf(1.0 / (n0 as f64 + 3.0));
    let mut m = n;
    while width / (length / m as f64) < 8.0 && m < 1 << 16 {
        m *= 2;
    }
    m
}
