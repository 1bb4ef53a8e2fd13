//! Resolvent norms along the imaginary axis, the pseudospectral gap Psi,
//! numerical-range sectors and model Schrodinger ground energies.

use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::discretize::{forward_difference, Kind, ModeOperator, Tridiag, TridiagLu};
use crate::error::{Error, Result};
use crate::partition_weights::PartitionOfUnity;
use crate::semigroup::{operator_norm_with, Propagator};
use crate::shear_profiles::ShearProfile;

pub const RESOLVENT_TOL: f64 = 1e-6;
pub const SCAN_POINTS: usize = 256;
const RESOLVENT_MAX_ITERS: usize = 2000;
const RESOLVENT_SEED: u64 = 0x2e50;

fn shifted(op: &ModeOperator, lambda: f64) -> Tridiag {
    op.matrix.affine(C64::new(0.0, -lambda), 1.0)
}

fn factor_pair(op: &ModeOperator, lambda: f64) -> Result<(TridiagLu, TridiagLu)> {
    let m = shifted(op, lambda);
    Ok((m.factor()?, m.adjoint().factor()?))
}

fn euclid(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// ||(A - i lambda)^{-1}|| with the default tolerance.
pub fn resolvent_norm(op: &ModeOperator, lambda: f64) -> Result<f64> {
    resolvent_norm_tol(op, lambda, RESOLVENT_TOL)
}

/// Subspace iteration on (M M*)^{-1} with M = A - i lambda, one LU per factor.
pub fn resolvent_norm_tol(op: &ModeOperator, lambda: f64, tol: f64) -> Result<f64> {
    let (fwd, adj) = factor_pair(op, lambda)?;
    let (norm, _, _) = crate::top_singular(
        op.grid.n,
        None,
        RESOLVENT_SEED,
        tol,
        RESOLVENT_MAX_ITERS,
        |x| {
            fwd.solve_in_place(x);
            Ok(())
        },
        |x| {
            adj.solve_in_place(x);
            Ok(())
        },
    )?;
    Ok(norm)
}

/// Retries once with a tiny shift when lambda sits numerically on the spectrum.
fn resolvent_robust(op: &ModeOperator, lambda: f64, tol: f64, scale: f64) -> Result<f64> {
    match resolvent_norm_tol(op, lambda, tol) {
        Err(Error::SolveFailure { .. }) => resolvent_norm_tol(op, lambda + 1e-10 * scale, tol),
        r => r,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PseudoGap {
    pub psi: f64,
    pub argmax_lambda: f64,
    /// Coarse scan (lambda, resolvent norm), increasing in lambda.
    pub resolvent_profile: Vec<(f64, f64)>,
    /// Largest relative jump between adjacent scan values.
    pub max_adjacent_jump: f64,
    /// Refinement moved the argmax by more than one coarse cell.
    pub scan_too_coarse: bool,
}

/// Scan interval k [min u - s, max u + s] with s = 0.1 osc(u).
pub fn scan_range(op: &ModeOperator) -> (f64, f64) {
    let p = &op.profile;
    let lo = p.u.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = p.u.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let osc = hi - lo;
    let k = op.k as f64;
    if osc <= 0.0 || op.k == 0 {
        let w = 1.0 + op.nu * k * k;
        return (k * lo - w, k * lo + w);
    }
    let s = 0.1 * osc;
    let (a, b) = (k * (lo - s), k * (hi + s));
    (a.min(b), a.max(b))
}

pub fn pseudo_gap(op: &ModeOperator) -> Result<PseudoGap> {
    pseudo_gap_with(op, SCAN_POINTS, RESOLVENT_TOL)
}

pub fn pseudo_gap_with(op: &ModeOperator, points: usize, tol: f64) -> Result<PseudoGap> {
    if points < 3 {
        return Err(Error::InvalidArgument(
            "scan needs at least 3 points".into(),
        ));
    }
    let (lo, hi) = scan_range(op);
    let scale = hi.abs().max(lo.abs()).max(1.0);
    let cell = (hi - lo) / (points - 1) as f64;
    let lambdas: Vec<f64> = (0..points).map(|i| lo + cell * i as f64).collect();
    let values = lambdas
        .par_iter()
        .map(|&l| resolvent_robust(op, l, tol, scale))
        .collect::<Result<Vec<f64>>>()?;

    let max_adjacent_jump = values
        .windows(2)
        .map(|w| (w[0] - w[1]).abs() / w[0].max(w[1]))
        .fold(0.0, f64::max);

    // local maxima, endpoints included
    let mut peaks: Vec<usize> = (0..points)
        .filter(|&i| {
            (i == 0 || values[i] >= values[i - 1])
                && (i + 1 == points || values[i] >= values[i + 1])
        })
        .collect();
    peaks.sort_by(|a, b| values[*b].total_cmp(&values[*a]));
    peaks.truncate(3);

    let mut best = (lambdas[peaks[0]], values[peaks[0]]);
    let coarse_arg = best.0;
    for &i in &peaks {
        let a = lambdas[i.saturating_sub(1)];
        let b = lambdas[(i + 1).min(points - 1)];
        let (l, v) = golden_max(
            |l| resolvent_robust(op, l, tol, scale),
            a,
            b,
            (lambdas[i], values[i]),
        )?;
        if v > best.1 {
            best = (l, v);
        }
    }
    Ok(PseudoGap {
        psi: 1.0 / best.1,
        argmax_lambda: best.0,
        resolvent_profile: lambdas.into_iter().zip(values).collect(),
        max_adjacent_jump,
        scan_too_coarse: (best.0 - coarse_arg).abs() > cell * (1.0 + 1e-9),
    })
}

/// Golden-section search for a maximum on [a, b]; returns the best point seen.
fn golden_max(
    mut f: impl FnMut(f64) -> Result<f64>,
    mut a: f64,
    mut b: f64,
    seed: (f64, f64),
) -> Result<(f64, f64)> {
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let width = b - a;
    let mut best = seed;
    if width <= 0.0 {
        return Ok(best);
    }
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let mut fc = f(c)?;
    let mut fd = f(d)?;
    while b - a > 1e-7 * width {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d)?;
        }
        for (l, v) in [(c, fc), (d, fd)] {
            if v > best.1 {
                best = (l, v);
            }
        }
    }
    Ok(best)
}

/// Bounds on the numerical range: Re <A f, f> >= re_min and |Im <A f, f>| <= im_max
/// for unit f.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NumericalRange {
    pub re_min: f64,
    pub im_max: f64,
}

pub fn numerical_range(op: &ModeOperator) -> NumericalRange {
    let k = op.k as f64;
    // -D2 is positive semidefinite with the constants in its kernel
    let re_min = match op.kind {
        Kind::Elliptic => op.nu * k * k,
        Kind::Hypoelliptic => 0.0,
    };
    NumericalRange {
        re_min,
        im_max: op.skew_bound(),
    }
}

/// tan(delta) for the sector {|arg z| <= pi/2 - 2 delta} containing the numerical range.
pub fn sector_tan_delta(op: &ModeOperator) -> f64 {
    let r = numerical_range(op);
    let two_delta = if r.im_max == 0.0 {
        std::f64::consts::FRAC_PI_2
    } else {
        (r.re_min / r.im_max).atan()
    };
    (0.5 * two_delta).tan()
}

/// (C / tan delta) exp(-Psi t / 2)
pub fn ggn_bound(op: &ModeOperator, psi: f64, c_univ: f64, t: f64) -> f64 {
    c_univ / sector_tan_delta(op) * (-0.5 * psi * t).exp()
}

/// Rigorous bracket of the integral of ||e^{-tA}|| from sampled norms, using
/// that the norm is non-increasing and submultiplicative.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormIntegral {
    pub lower: f64,
    pub upper: f64,
    pub trapezoid: f64,
}

pub fn integrate_norms(times: &[f64], norms: &[f64]) -> Result<NormIntegral> {
    if times.len() < 2 || times.len() != norms.len() || times[0] != 0.0 {
        return Err(Error::InvalidArgument(
            "need at least two samples starting at t = 0".into(),
        ));
    }
    let (mut lower, mut upper, mut trap) = (0.0, 0.0, 0.0);
    for i in 0..times.len() - 1 {
        let w = times[i + 1] - times[i];
        lower += w * norms[i + 1];
        upper += w * norms[i];
        trap += 0.5 * w * (norms[i] + norms[i + 1]);
    }
    let (t_end, n_end) = (*times.last().unwrap(), *norms.last().unwrap());
    if n_end >= 1.0 {
        return Err(Error::InvalidArgument(
            "norm has not decayed below 1 on the sample grid".into(),
        ));
    }
    let tail = t_end * n_end / (1.0 - n_end);
    Ok(NormIntegral {
        lower,
        upper: upper + tail,
        trapezoid: trap + tail,
    })
}

/// Samples ||e^{-tA}|| on a uniform grid of spacing `step` until it drops below `floor`.
pub fn sample_norms_until(
    op: &ModeOperator,
    step: f64,
    floor: f64,
    dt: f64,
    max_samples: usize,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut p = Propagator::new(op, dt)?;
    let mut times = vec![0.0];
    let mut norms = vec![1.0];
    let mut start: Option<Vec<C64>> = None;
    for i in 1..=max_samples {
        let t = step * i as f64;
        let est = operator_norm_with(&mut p, op, t, 1e-8, start.as_deref())?;
        times.push(t);
        norms.push(est.norm);
        start = Some(est.vector);
        if est.norm < floor {
            return Ok((times, norms));
        }
    }
    Err(Error::TailNotReached {
        t_max: step * max_samples as f64,
        ratio: *norms.last().unwrap(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SchrodingerGap {
    pub energy: f64,
    /// energy / sigma^{j/(j+1)}
    pub scaled: f64,
    pub half_width: f64,
    pub points: usize,
}

const SCHRODINGER_POINTS: usize = 2048;
const SCHRODINGER_DOUBLINGS: usize = 6;

/// Smallest eigenvalue of -sigma d^2/dz^2 + c^2 z^{2j} on the line.
pub fn schrodinger_ground_energy(j: usize, c: f64, sigma: f64) -> Result<SchrodingerGap> {
    if !(c > 0.0) || !(sigma > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "need c > 0 and sigma > 0, got c={c}, sigma={sigma}"
        )));
    }
    let ell = (sigma / (c * c)).powf(1.0 / (2.0 * j as f64 + 2.0));
    let mut half = 8.0 * ell;
    let mut n = SCHRODINGER_POINTS;
    let mut prev = dirichlet_ground(j, c, sigma, half, n)?;
    let mut change = f64::INFINITY;
    for _ in 0..SCHRODINGER_DOUBLINGS {
        half *= 2.0;
        n = 2 * n + 1;
        let e = dirichlet_ground(j, c, sigma, half, n)?;
        change = (e - prev).abs() / e;
        prev = e;
        if change < 1e-8 {
            return Ok(SchrodingerGap {
                energy: e,
                scaled: e / sigma.powf(j as f64 / (j as f64 + 1.0)),
                half_width: half,
                points: n,
            });
        }
    }
    Err(Error::TruncationNotConverged {
        doublings: SCHRODINGER_DOUBLINGS,
        last_change: change,
    })
}

/// Ground energy of the Dirichlet problem on [-half, half] with n interior points,
/// by shifted inverse iteration and a final Rayleigh quotient.
fn dirichlet_ground(j: usize, c: f64, sigma: f64, half: f64, n: usize) -> Result<f64> {
    let h = 2.0 * half / (n + 1) as f64;
    let s = sigma / (h * h);
    let diag: Vec<f64> = (1..=n)
        .map(|i| {
            let z = -half + h * i as f64;
            2.0 * s + c * c * z.powi(2 * j as i32)
        })
        .collect();
    let m = Tridiag {
        diag: diag.iter().map(|&d| C64::new(d, 0.0)).collect(),
        off: vec![-s; n],
        periodic: false,
    };
    let apply = |x: &[f64]| -> Vec<f64> {
        (0..n)
            .map(|i| {
                let mut v = diag[i] * x[i];
                if i > 0 {
                    v -= s * x[i - 1];
                }
                if i + 1 < n {
                    v -= s * x[i + 1];
                }
                v
            })
            .collect()
    };
    let lu = m.factor()?;
    let mut x: Vec<C64> = (0..n)
        .map(|i| {
            let z = -half + h * (i + 1) as f64;
            C64::new((-(z / half).powi(2) * 8.0).exp(), 0.0)
        })
        .collect();
    let mut energy = f64::INFINITY;
    for _ in 0..500 {
        lu.solve_in_place(&mut x);
        let nrm = euclid(&x);
        x.iter_mut().for_each(|v| *v /= nrm);
        let xr: Vec<f64> = x.iter().map(|v| v.re).collect();
        let ax = apply(&xr);
        let e: f64 = xr.iter().zip(&ax).map(|(a, b)| a * b).sum();
        if (e - energy).abs() <= 1e-14 * e {
            return Ok(e);
        }
        energy = e;
    }
    Ok(energy)
}

/// Localized spectral-gap ratios for one test function.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalGap {
    /// min over pieces of RHS_j / (sigma^{j/(j+1)} ||f_j||^2)
    pub margin: f64,
    /// Ratio per order j (None when f_j vanishes); the channel wall piece is last.
    pub per_order: Vec<Option<f64>>,
    /// (sigma ||f'||^2 + ||u' f||^2) / (sigma^{n0/(n0+1)} ||f||^2)
    pub global: f64,
}

fn dirichlet_form(profile: &ShearProfile, g: &[C64], sigma: f64) -> (f64, f64) {
    let grid = &profile.grid;
    let d = forward_difference(grid, g);
    let du2: Vec<f64> = profile.du.iter().map(|v| v * v).collect();
    (
        sigma * grid.norm_sqr(&d) + grid.weighted_norm_sqr(&du2, g),
        grid.norm_sqr(g),
    )
}

pub fn localized_gap_margin(
    profile: &ShearProfile,
    partition: &PartitionOfUnity,
    sigma: f64,
    f: &[C64],
) -> Result<LocalGap> {
    let grid = &profile.grid;
    if f.len() != grid.n {
        return Err(Error::GridMismatch {
            expected: grid.n,
            found: f.len(),
        });
    }
    let mut pieces: Vec<(usize, Vec<f64>)> = partition
        .phi
        .iter()
        .enumerate()
        .map(|(j, s)| (j, s.v.clone()))
        .collect();
    if partition.boundary.is_some() {
        pieces.push((0, partition.boundary_total()));
    }
    let mut per_order = Vec::with_capacity(pieces.len());
    let mut margin = f64::INFINITY;
    for (j, phi) in &pieces {
        let fj: Vec<C64> = f
            .iter()
            .zip(phi)
            .map(|(v, p)| v * p.max(0.0).sqrt())
            .collect();
        let (rhs, mass) = dirichlet_form(profile, &fj, sigma);
        if mass <= 1e-300 {
            per_order.push(None);
            continue;
        }
        let r = rhs / (sigma.powf(*j as f64 / (*j as f64 + 1.0)) * mass);
        margin = margin.min(r);
        per_order.push(Some(r));
    }
    if margin == f64::INFINITY {
        return Err(Error::ZeroInput);
    }
    let (rhs, mass) = dirichlet_form(profile, f, sigma);
    let n0 = profile.n0 as f64;
    Ok(LocalGap {
        margin,
        per_order,
        global: rhs / (sigma.powf(n0 / (n0 + 1.0)) * mass),
    })
}

/// Model gap constants b_j: b_0 = min |u'|^2 on supp phi_0 (and the wall
/// bumps), and for j >= 1 the minimum over order-j critical points of the
/// ground energy of -d^2/dz^2 + c_i^2 z^{2j}, with c_i = min |u'(y)| / |y - y_i|^j
/// over the support of the bump at y_i.
pub fn model_gap_constants(
    profile: &ShearProfile,
    partition: &PartitionOfUnity,
) -> Result<Vec<f64>> {
    let n0 = partition.n0;
    let mut b = vec![f64::INFINITY; n0 + 1];
    let mut support0 = partition.phi[0].v.clone();
    for (s, w) in support0.iter_mut().zip(partition.boundary_total()) {
        *s += w;
    }
    for (i, &w) in support0.iter().enumerate() {
        if w > 0.0 {
            b[0] = b[0].min(profile.du[i] * profile.du[i]);
        }
    }
    for (pi, piece) in partition.pieces.iter().enumerate() {
        let bump = partition.piece(pi);
        let mut c = f64::INFINITY;
        for (i, &y) in partition.nodes.iter().enumerate() {
            if bump.v[i] <= 0.0 {
                continue;
            }
            let s = wrapped(profile, y - piece.center).abs();
            if s > 0.0 {
                c = c.min(profile.du[i].abs() / s.powi(piece.order as i32));
            }
        }
        if !(c > 0.0) || !c.is_finite() {
            return Err(Error::InvalidProfile(format!(
                "no positive model constant at critical point {}",
                piece.center
            )));
        }
        let e = schrodinger_ground_energy(piece.order, c, 1.0)?.energy;
        b[piece.order] = b[piece.order].min(e);
    }
    Ok(b)
}

fn wrapped(profile: &ShearProfile, d: f64) -> f64 {
    match profile.domain {
        crate::Domain::Torus => {
            let l = crate::Domain::Torus.length();
            (d + 0.5 * l).rem_euclid(l) - 0.5 * l
        }
        crate::Domain::Channel => d,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::partition_weights::build_partition;
    use crate::{assemble_mode_operator, make_profile, smooth_random_vector, Domain, ProfileSpec};
    use std::sync::Arc;

    fn op(name: &str, nu: f64, k: i64, n: usize, kind: Kind) -> ModeOperator {
        let p =
            Arc::new(make_profile(&ProfileSpec::Builtin(name.into()), Domain::Torus, n).unwrap());
        assemble_mode_operator(p, nu, k, kind).unwrap()
    }

    #[test]
    fn heat_resolvent_at_zero() {
        let o = op("zero", 0.01, 2, 128, Kind::Elliptic);
        let r = resolvent_norm_tol(&o, 0.0, 1e-12).unwrap();
        assert!((r - 1.0 / 0.04).abs() < 1e-8 * r, "{r}");
    }

    #[test]
    fn resolvent_decays_away_from_range() {
        let o = op("sin", 1e-2, 1, 128, Kind::Elliptic);
        let big = 2.0 * (1.0 + o.nu * 4.0 / (o.grid.h * o.grid.h)) + 1.0;
        for l in [big, -big, 3.0 * big] {
            assert!(resolvent_norm(&o, l).unwrap() <= 2.0 / l.abs());
        }
    }

    #[test]
    fn heat_pseudo_gap() {
        let o = op("zero", 0.05, 2, 64, Kind::Elliptic);
        let g = pseudo_gap(&o).unwrap();
        assert!((g.psi - 0.2).abs() < 1e-6, "{}", g.psi);
        assert!(g.argmax_lambda.abs() < 1e-5);
    }

    #[test]
    fn sin_pseudo_gap_is_continuous() {
        let o = op("sin", 1e-3, 1, 256, Kind::Elliptic);
        let g = pseudo_gap(&o).unwrap();
        assert!(g.psi > 0.0);
        assert!(g.max_adjacent_jump < 0.5, "{}", g.max_adjacent_jump);
        let peak = g.resolvent_profile.iter().map(|p| p.1).fold(0.0, f64::max);
        assert!(1.0 / g.psi >= peak);
    }

    #[test]
    fn sector_angles() {
        let z = op("zero", 0.01, 3, 64, Kind::Elliptic);
        assert!((sector_tan_delta(&z) - 1.0).abs() < 1e-15);
        let s = op("sin", 0.01, 3, 64, Kind::Elliptic);
        let expect = (0.5 * (0.01f64 * 9.0 / 3.0).atan()).tan();
        assert!((sector_tan_delta(&s) - expect).abs() < 1e-12 * expect);
        let h = op("sin", 0.01, 3, 64, Kind::Hypoelliptic);
        assert_eq!(sector_tan_delta(&h), 0.0);
    }

    #[test]
    fn norm_integral_brackets_exponential() {
        let times: Vec<f64> = (0..=400).map(|i| i as f64 * 0.05).collect();
        let norms: Vec<f64> = times.iter().map(|t| (-t).exp()).collect();
        let q = integrate_norms(&times, &norms).unwrap();
        assert!(q.lower <= 1.0 && 1.0 <= q.upper);
        assert!((q.trapezoid - 1.0).abs() < 1e-3);
    }

    #[test]
    fn harmonic_ground_energies() {
        let g = schrodinger_ground_energy(1, 1.0, 1.0).unwrap();
        assert!((g.energy - 1.0).abs() < 1e-5, "{}", g.energy);
        let g = schrodinger_ground_energy(1, 1.0, 1e-4).unwrap();
        assert!((g.energy - 1e-2).abs() < 1e-7, "{}", g.energy);
        let g = schrodinger_ground_energy(1, 2.0, 1.0).unwrap();
        assert!((g.energy - 2.0).abs() < 1e-5);
    }

    #[test]
    fn quartic_scaling() {
        let s: Vec<f64> = [1e-2, 1e-4, 1e-6]
            .iter()
            .map(|&sig| schrodinger_ground_energy(2, 1.0, sig).unwrap().scaled)
            .collect();
        assert!((s[0] - s[2]).abs() < 1e-3 * s[0]);
        // -d^2 + z^4 ground energy
        assert!((s[0] - 1.0603620904).abs() < 1e-4, "{}", s[0]);
    }

    #[test]
    fn local_gap_on_flat_region() {
        let p = make_profile(&ProfileSpec::Builtin("sin".into()), Domain::Torus, 1024).unwrap();
        let pou = build_partition(&p).unwrap();
        // supported where |u'| = |cos y| >= cos(1.2)
        let f: Vec<C64> = p
            .grid
            .nodes
            .iter()
            .map(|&y| {
                let d = (y - std::f64::consts::PI).abs();
                C64::new(
                    if d < 0.5 {
                        (1.0 - (d / 0.5).powi(2)).powi(3)
                    } else {
                        0.0
                    },
                    0.0,
                )
            })
            .collect();
        let g = localized_gap_margin(&p, &pou, 1e-6, &f).unwrap();
        let c = (std::f64::consts::FRAC_PI_2 - 0.5).sin();
        assert!(g.margin >= c * c * 0.999, "{}", g.margin);
        assert!(matches!(
            localized_gap_margin(&p, &pou, 1e-6, &vec![C64::new(0.0, 0.0); 1024]),
            Err(Error::ZeroInput)
        ));
    }

    #[test]
    fn local_gap_bounded_below_over_sigma() {
        let p = make_profile(&ProfileSpec::Builtin("sin".into()), Domain::Torus, 2048).unwrap();
        let pou = build_partition(&p).unwrap();
        let b = model_gap_constants(&p, &pou).unwrap();
        for sigma in [1e-2, 1e-4, 1e-6] {
            for seed in 0..10 {
                let f = smooth_random_vector(&p.grid, 12, seed);
                let g = localized_gap_margin(&p, &pou, sigma, &f).unwrap();
                assert!(
                    g.margin >= 0.5 * b[0].min(b[1]),
                    "sigma={sigma}: {}",
                    g.margin
                );
            }
        }
    }
}
