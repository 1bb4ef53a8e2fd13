//! Enhanced dissipation, hypocoercivity and mixing diagnostics for passive
//! scalars advected by shear flows.
//!
//! Each x-frequency k decouples into a one-dimensional problem in y, so all
//! computations act on the per-mode operators built in [`discretize`].

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod dense;
pub mod discretize;
pub mod error;
pub mod hypo_functional;
pub mod mixing;
pub mod partition_weights;
pub mod semigroup;
pub mod shear_profiles;
pub mod spectra;
pub mod stochastic;

pub use discretize::{assemble_mode_operator, Bc, Grid, Kind, ModeOperator, Tridiag};
pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;
pub use shear_profiles::{make_profile, Domain, ProfileSource, ProfileSpec, ShearProfile};

/// Seeded random complex vector with decaying Fourier content, used as a
/// generic smooth test function.
pub fn smooth_random_vector(grid: &Grid, modes: usize, seed: u64) -> Vec<C64> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut f = vec![C64::new(0.0, 0.0); grid.n];
    let base = match grid.domain {
        Domain::Torus => 1.0,
        Domain::Channel => std::f64::consts::PI,
    };
    for m in 0..=modes {
        let c = C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
            / (1.0 + (m * m) as f64);
        let s = C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
            / (1.0 + (m * m) as f64);
        for (fi, &y) in f.iter_mut().zip(&grid.nodes) {
            let arg = base * m as f64 * y;
            // cosines satisfy the no-flux condition on the channel
            *fi += c * arg.cos();
            if grid.domain == Domain::Torus {
                *fi += s * arg.sin();
            }
        }
    }
    f
}

/// Seeded vector with independent uniform entries, normalized to unit grid norm.
pub fn random_unit_vector(grid: &Grid, seed: u64) -> Vec<C64> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut f: Vec<C64> = (0..grid.n)
        .map(|_| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
        .collect();
    let s = grid.norm_sqr(&f).sqrt();
    f.iter_mut().for_each(|v| *v /= s);
    f
}

/// Ordinary least squares of ys on the columns of xs (each row one sample).
/// Returns coefficients and the root-mean-square residual.
pub(crate) fn least_squares(xs: &[Vec<f64>], ys: &[f64]) -> (Vec<f64>, f64) {
    let p = xs[0].len();
    let a = nalgebra::DMatrix::from_fn(xs.len(), p, |i, j| xs[i][j]);
    let b = nalgebra::DVector::from_column_slice(ys);
    let svd = a.clone().svd(true, true);
    let coef = svd.solve(&b, 1e-12).expect("svd solve");
    let resid = &a * &coef - &b;
    let rms = (resid.norm_squared() / ys.len() as f64).sqrt();
    (coef.iter().copied().collect(), rms)
}

/// Columns of the block used by subspace iteration for largest singular values.
pub const POWER_BLOCK: usize = 4;

/// Largest singular value of an operator R by subspace iteration on R*R with a
/// Rayleigh-Ritz step, which keeps converging when the top singular values
/// are nearly degenerate. `start` seeds the first column. Returns sigma_1,
/// the top right singular vector (unit Euclidean norm) and the iteration count.
pub(crate) fn top_singular<F, G>(
    n: usize,
    start: Option<&[C64]>,
    seed: u64,
    tol: f64,
    max_iters: usize,
    mut fwd: F,
    mut adj: G,
) -> Result<(f64, Vec<C64>, usize)>
where
    F: FnMut(&mut [C64]) -> Result<()>,
    G: FnMut(&mut [C64]) -> Result<()>,
{
    use nalgebra::DMatrix;
    use rand::{Rng, SeedableRng};
    let b = POWER_BLOCK.min(n);
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut x = DMatrix::<C64>::from_fn(n, b, |_, _| {
        C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
    });
    if let Some(s) = start {
        x.column_mut(0).copy_from_slice(s);
    }
    x = x.qr().q();
    let mut prev = f64::NAN;
    let mut w = DMatrix::<C64>::zeros(n, b);
    for it in 1..=max_iters {
        for c in 0..b {
            let mut col: Vec<C64> = x.column(c).iter().copied().collect();
            fwd(&mut col)?;
            w.column_mut(c).copy_from_slice(&col);
        }
        let gram = w.adjoint() * &w;
        let eig = nalgebra::SymmetricEigen::new(gram);
        let (top, &theta) = eig
            .eigenvalues
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .expect("non-empty block");
        let converged = (theta - prev).abs() <= tol * theta;
        if converged || it == max_iters {
            let v = &x * eig.eigenvectors.column(top);
            let s = v.norm();
            let vector: Vec<C64> = v.iter().map(|z| z / s).collect();
            if converged {
                return Ok((theta.sqrt(), vector, it));
            }
            return Err(Error::NoConvergence {
                lower: prev.min(theta).sqrt(),
                upper: prev.max(theta).sqrt(),
            });
        }
        prev = theta;
        for c in 0..b {
            let mut col: Vec<C64> = w.column(c).iter().copied().collect();
            adj(&mut col)?;
            x.column_mut(c).copy_from_slice(&col);
        }
        x = x.qr().q();
    }
    unreachable!("loop returns on the last iteration")
}
