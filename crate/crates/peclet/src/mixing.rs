//! Inviscid transport by a shear on the torus and decay of the H^-1 norm.

use std::sync::Arc;

use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::shear_profiles::{Domain, ShearProfile};
use crate::C64;

/// Phase samples averaged per envelope point.
pub const ENVELOPE_SAMPLES: usize = 16;
/// Smallest <kt> used in the slope fit.
pub const FIT_MIN_KT: f64 = 100.0;

/// g(t, y) = exp(-i k u(y) t) f0(y).
pub fn inviscid_state(profile: &ShearProfile, k: i64, f0: &[C64], t: f64) -> Result<Vec<C64>> {
    if profile.domain != Domain::Torus {
        return Err(Error::InvalidArgument(
            "inviscid mixing is defined on the torus only".into(),
        ));
    }
    if f0.len() != profile.grid.n {
        return Err(Error::GridMismatch {
            expected: profile.grid.n,
            found: f0.len(),
        });
    }
    let kt = k as f64 * t;
    Ok(profile
        .u
        .iter()
        .zip(f0)
        .map(|(u, f)| f * C64::from_polar(1.0, -kt * u))
        .collect())
}

/// H^-1 norm on the uniform torus grid, with a cached FFT plan.
#[derive(Clone)]
pub struct HminusOne {
    fft: Arc<dyn Fft<f64>>,
    weights: Vec<f64>,
}

impl HminusOne {
    pub fn new(n: usize) -> HminusOne {
        let fft = FftPlanner::new().plan_fft_forward(n);
        let weights = (0..n)
            .map(|i| {
                let eta = if i <= n / 2 {
                    i as f64
                } else {
                    i as f64 - n as f64
                };
                1.0 / (1.0 + eta * eta)
            })
            .collect();
        HminusOne { fft, weights }
    }

    pub fn norm(&self, v: &[C64]) -> f64 {
        self.norm_sqr(v).sqrt()
    }

    /// 2 pi sum |v_eta|^2 / (1 + eta^2) with v_eta the normalized Fourier coefficients.
    pub fn norm_sqr(&self, v: &[C64]) -> f64 {
        let n = v.len();
        assert_eq!(
            n,
            self.weights.len(),
            "vector length does not match the plan"
        );
        let mut buf = v.to_vec();
        self.fft.process(&mut buf);
        let s: f64 = buf
            .iter()
            .zip(&self.weights)
            .map(|(c, w)| c.norm_sqr() * w)
            .sum();
        2.0 * std::f64::consts::PI * s / (n as f64 * n as f64)
    }
}

pub fn hminus1_norm(v: &[C64]) -> f64 {
    HminusOne::new(v.len()).norm(v)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixingCurve {
    pub profile: String,
    pub k: i64,
    pub times: Vec<f64>,
    /// <kt> = sqrt(1 + (kt)^2)
    pub kt: Vec<f64>,
    /// Envelope of the H^-1 norm (root mean square over one phase period).
    pub hm1_norms: Vec<f64>,
    pub l2_norms: Vec<f64>,
    /// Slope of log |g|_{H^-1} against log <kt> on the fit window.
    pub exponent: f64,
    pub fit_window: (f64, f64),
    /// First requested time dropped because the created scale left the grid.
    pub truncated_at: Option<f64>,
}

/// Largest t for which k t max|u'| stays within n/4 Fourier modes.
pub fn resolution_limit(profile: &ShearProfile, k: i64) -> f64 {
    let slope = profile.du.iter().fold(0.0f64, |m, d| m.max(d.abs()));
    profile.grid.n as f64 / 4.0 / (k.unsigned_abs() as f64 * slope)
}

pub fn mixing_exponent(
    profile: &ShearProfile,
    k: i64,
    f0: &[C64],
    t_grid: &[f64],
) -> Result<MixingCurve> {
    if k == 0 {
        return Err(Error::InvalidArgument("k must be nonzero".into()));
    }
    inviscid_state(profile, k, f0, 0.0)?;
    let limit = resolution_limit(profile, k);
    let kept: Vec<f64> = t_grid.iter().copied().take_while(|&t| t <= limit).collect();
    let truncated_at = t_grid.get(kept.len()).copied();
    let (lo, hi) = profile
        .u
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &u| {
            (a.min(u), b.max(u))
        });
    let kf = k as f64;
    let period = 2.0 * std::f64::consts::PI / (kf.abs() * (hi - lo));
    let samples = if period.is_finite() {
        ENVELOPE_SAMPLES
    } else {
        1
    };
    let norm = HminusOne::new(profile.grid.n);

    let rows: Vec<(f64, f64)> = kept
        .par_iter()
        .map(|&t| {
            let mut acc = 0.0;
            let mut l2 = 0.0;
            for m in 0..samples {
                let s = if samples == 1 {
                    t
                } else {
                    t + period * m as f64 / samples as f64
                };
                let g = inviscid_state(profile, k, f0, s).expect("validated input");
                acc += norm.norm_sqr(&g);
                l2 = profile.grid.norm_sqr(&g);
            }
            ((acc / samples as f64).sqrt(), l2.sqrt())
        })
        .collect();
    let kt: Vec<f64> = kept
        .iter()
        .map(|t| (1.0 + (kf * t).powi(2)).sqrt())
        .collect();
    let window_hi = kt.last().copied().unwrap_or(0.0);
    let (xs, ys): (Vec<f64>, Vec<f64>) = kt
        .iter()
        .zip(&rows)
        .filter(|(x, _)| **x >= FIT_MIN_KT)
        .map(|(x, r)| (x.ln(), r.0.ln()))
        .unzip();
    if xs.len() < 3 {
        return Err(Error::WindowEmpty {
            lo: FIT_MIN_KT,
            hi: window_hi,
            found: xs.len(),
            needed: 3,
        });
    }
    let design: Vec<Vec<f64>> = xs.iter().map(|x| vec![1.0, *x]).collect();
    let (coef, _) = crate::least_squares(&design, &ys);
    Ok(MixingCurve {
        profile: profile.name.clone(),
        k,
        times: kept,
        kt,
        hm1_norms: rows.iter().map(|r| r.0).collect(),
        l2_norms: rows.iter().map(|r| r.1).collect(),
        exponent: coef[1],
        fit_window: (FIT_MIN_KT, window_hi),
        truncated_at,
    })
}

/// Curves for several k sampled on a common <kt> grid, and the largest
/// relative deviation from the first curve.
pub fn k_collapse(
    profile: &ShearProfile,
    ks: &[i64],
    f0: &[C64],
    kt_grid: &[f64],
) -> Result<(Vec<MixingCurve>, f64)> {
    let curves: Vec<MixingCurve> = ks
        .iter()
        .map(|&k| {
            let t: Vec<f64> = kt_grid
                .iter()
                .map(|kt| kt / k.unsigned_abs() as f64)
                .collect();
            mixing_exponent(profile, k, f0, &t)
        })
        .collect::<Result<_>>()?;
    let len = curves.iter().map(|c| c.hm1_norms.len()).min().unwrap_or(0);
    let mut spread = 0.0f64;
    for c in &curves[1..] {
        for i in 0..len {
            let r = curves[0].hm1_norms[i];
            spread = spread.max((c.hm1_norms[i] - r).abs() / r);
        }
    }
    Ok((curves, spread))
}

/// Single Fourier mode e^{i m y} on the profile grid.
pub fn fourier_mode(profile: &ShearProfile, m: i64) -> Vec<C64> {
    profile
        .grid
        .nodes
        .iter()
        .map(|&y| C64::from_polar(1.0, m as f64 * y))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discretize::second_derivative_matrix;
    use crate::semigroup::geometric_grid;
    use crate::{make_profile, smooth_random_vector, ProfileSpec};

    fn sin(n: usize) -> ShearProfile {
        make_profile(&ProfileSpec::Builtin("sin".into()), Domain::Torus, n).unwrap()
    }

    #[test]
    fn single_mode_norm() {
        let p = sin(256);
        let v = fourier_mode(&p, 3);
        let expected = (2.0 * std::f64::consts::PI / 10.0).sqrt();
        assert!((hminus1_norm(&v) - expected).abs() < 1e-12);
        assert!((expected - 0.7927).abs() < 1e-4);
    }

    #[test]
    fn matches_banded_oracle() {
        let mut prev = f64::INFINITY;
        for n in [128, 256, 512] {
            let p = sin(n);
            let v = smooth_random_vector(&p.grid, 5, 9);
            let m = second_derivative_matrix(&p.grid).affine(C64::new(1.0, 0.0), -1.0);
            let w = m.factor().unwrap().solve(&v);
            let oracle = p.grid.inner(&w, &v).re.sqrt();
            let err = (hminus1_norm(&v) - oracle).abs();
            assert!(err < 4.0 * prev.min(1.0) / 3.0, "n={n} err={err}");
            prev = err;
        }
        assert!(prev < 1e-3);
    }

    #[test]
    fn phase_is_unimodular() {
        let p = sin(128);
        let f = smooth_random_vector(&p.grid, 4, 2);
        assert_eq!(inviscid_state(&p, 3, &f, 0.0).unwrap(), f);
        let g = inviscid_state(&p, 3, &f, 17.5).unwrap();
        for (a, b) in g.iter().zip(&f) {
            assert!((a.norm() - b.norm()).abs() < 1e-14);
        }
        assert!(hminus1_norm(&g) <= p.grid.norm_sqr(&g).sqrt() + 1e-14);
    }

    #[test]
    fn channel_rejected() {
        let p = make_profile(&ProfileSpec::Builtin("couette".into()), Domain::Channel, 64).unwrap();
        let f = vec![C64::new(1.0, 0.0); 64];
        assert!(inviscid_state(&p, 1, &f, 1.0).is_err());
    }

    #[test]
    fn sin_mixing_rate() {
        let p = sin(1 << 13);
        let f0 = fourier_mode(&p, 1);
        let curve = mixing_exponent(&p, 1, &f0, &geometric_grid(1.0, 1e4, 40)).unwrap();
        assert!(curve.truncated_at.is_some());
        assert!(
            (curve.exponent + 0.5).abs() < 0.05,
            "slope {}",
            curve.exponent
        );
        for l2 in &curve.l2_norms {
            assert!((l2 - curve.l2_norms[0]).abs() < 1e-12);
        }
    }
}
