//! Grids, tridiagonal storage and the per-frequency mode operators.
//!
//! Every matrix in this crate has a complex diagonal and a real symmetric
//! off-diagonal (with optional periodic corners), so one storage type and one
//! LU factorization cover the propagators, the resolvents and the model
//! Schrödinger operators.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::shear_profiles::{Domain, ShearProfile};

pub const MIN_GRID: usize = 64;

#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    pub domain: Domain,
    pub n: usize,
    pub h: f64,
    pub nodes: Vec<f64>,
}

impl Grid {
    pub fn new(domain: Domain, n: usize) -> Result<Grid> {
        if n < MIN_GRID {
            return Err(Error::InvalidArgument(format!(
                "grid needs at least {MIN_GRID} points, got {n}"
            )));
        }
        let (h, shift) = match domain {
            Domain::Torus => (2.0 * PI / n as f64, 0.0),
            Domain::Channel => (1.0 / n as f64, 0.5),
        };
        let nodes = (0..n).map(|i| (i as f64 + shift) * h).collect();
        Ok(Grid {
            domain,
            n,
            h,
            nodes,
        })
    }

    pub fn bc(&self) -> Bc {
        match self.domain {
            Domain::Torus => Bc::Periodic,
            Domain::Channel => Bc::NoFlux,
        }
    }

    /// h-weighted inner product <a, b> = h sum a conj(b).
    pub fn inner(&self, a: &[C64], b: &[C64]) -> C64 {
        a.iter().zip(b).map(|(x, y)| x * y.conj()).sum::<C64>() * self.h
    }

    pub fn norm_sqr(&self, a: &[C64]) -> f64 {
        a.iter().map(|x| x.norm_sqr()).sum::<f64>() * self.h
    }

    /// h sum w |a|^2
    pub fn weighted_norm_sqr(&self, w: &[f64], a: &[C64]) -> f64 {
        w.iter().zip(a).map(|(w, x)| w * x.norm_sqr()).sum::<f64>() * self.h
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Bc {
    Periodic,
    NoFlux,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Kind {
    /// i k u + nu (k^2 - d_yy)
    Elliptic,
    /// i k u - nu d_yy
    Hypoelliptic,
}

/// Tridiagonal matrix with complex diagonal and real symmetric couplings.
///
/// `off[i]` couples rows i and i+1; when `periodic`, `off[n-1]` couples
/// row n-1 with row 0.
#[derive(Debug, Clone, PartialEq)]
pub struct Tridiag {
    pub diag: Vec<C64>,
    pub off: Vec<f64>,
    pub periodic: bool,
}

impl Tridiag {
    pub fn n(&self) -> usize {
        self.diag.len()
    }

    fn left(&self, i: usize) -> Option<(usize, f64)> {
        let n = self.n();
        if i > 0 {
            Some((i - 1, self.off[i - 1]))
        } else if self.periodic {
            Some((n - 1, self.off[n - 1]))
        } else {
            None
        }
    }

    fn right(&self, i: usize) -> Option<(usize, f64)> {
        let n = self.n();
        if i + 1 < n {
            Some((i + 1, self.off[i]))
        } else if self.periodic {
            Some((0, self.off[n - 1]))
        } else {
            None
        }
    }

    pub fn matvec_into(&self, x: &[C64], out: &mut [C64]) {
        let n = self.n();
        debug_assert_eq!(x.len(), n);
        for i in 0..n {
            let mut acc = self.diag[i] * x[i];
            if let Some((j, e)) = self.left(i) {
                acc += x[j] * e;
            }
            if let Some((j, e)) = self.right(i) {
                acc += x[j] * e;
            }
            out[i] = acc;
        }
    }

    pub fn matvec(&self, x: &[C64]) -> Vec<C64> {
        let mut out = vec![C64::new(0.0, 0.0); self.n()];
        self.matvec_into(x, &mut out);
        out
    }

    /// Conjugate transpose. The couplings are real and symmetric, so only the
    /// diagonal changes.
    pub fn adjoint(&self) -> Tridiag {
        Tridiag {
            diag: self.diag.iter().map(|d| d.conj()).collect(),
            off: self.off.clone(),
            periodic: self.periodic,
        }
    }

    /// a I + b M, for real b (keeps the couplings real).
    pub fn affine(&self, a: C64, b: f64) -> Tridiag {
        Tridiag {
            diag: self.diag.iter().map(|d| a + d * b).collect(),
            off: self.off.iter().map(|e| e * b).collect(),
            periodic: self.periodic,
        }
    }

    pub fn to_dense(&self) -> Vec<Vec<C64>> {
        let n = self.n();
        let mut m = vec![vec![C64::new(0.0, 0.0); n]; n];
        for i in 0..n {
            m[i][i] = self.diag[i];
            if let Some((j, e)) = self.left(i) {
                m[i][j] += e;
            }
            if let Some((j, e)) = self.right(i) {
                m[i][j] += e;
            }
        }
        m
    }

    pub fn factor(&self) -> Result<TridiagLu> {
        TridiagLu::new(self)
    }
}

/// Thomas elimination, with a Sherman–Morrison correction for the periodic
/// corners.
#[derive(Debug, Clone)]
pub struct TridiagLu {
    sub: Vec<f64>,
    cp: Vec<C64>,
    inv_den: Vec<C64>,
    cyclic: Option<Cyclic>,
}

#[derive(Debug, Clone)]
struct Cyclic {
    /// B^{-1} u
    z: Vec<C64>,
    /// last component of v is corner / gamma, first is 1
    v_last: C64,
    denom: C64,
}

const PIVOT_TOL: f64 = 1e-14;

impl TridiagLu {
    fn new(m: &Tridiag) -> Result<TridiagLu> {
        let n = m.n();
        let scale = m.diag.iter().map(|d| d.norm()).fold(0.0, f64::max)
            + m.off.iter().map(|e| e.abs()).fold(0.0, f64::max);
        let mut diag = m.diag.clone();
        let mut cyclic_parts = None;
        if m.periodic {
            let corner = m.off[n - 1];
            let gamma = -diag[0];
            let gamma = if gamma.norm() < PIVOT_TOL * scale {
                C64::new(-scale, 0.0)
            } else {
                gamma
            };
            diag[0] -= gamma;
            diag[n - 1] -= corner * corner / gamma;
            cyclic_parts = Some((gamma, corner));
        }
        let sub: Vec<f64> = (0..n)
            .map(|i| if i == 0 { 0.0 } else { m.off[i - 1] })
            .collect();
        let sup: Vec<f64> = (0..n)
            .map(|i| if i + 1 < n { m.off[i] } else { 0.0 })
            .collect();
        let mut cp = vec![C64::new(0.0, 0.0); n];
        let mut inv_den = vec![C64::new(0.0, 0.0); n];
        for i in 0..n {
            let den = if i == 0 {
                diag[0]
            } else {
                diag[i] - cp[i - 1] * sub[i]
            };
            if !(den.norm() > PIVOT_TOL * scale) {
                return Err(Error::SolveFailure {
                    row: i,
                    pivot: den.norm(),
                });
            }
            inv_den[i] = den.inv();
            cp[i] = inv_den[i] * sup[i];
        }
        let mut lu = TridiagLu {
            sub,
            cp,
            inv_den,
            cyclic: None,
        };
        if let Some((gamma, corner)) = cyclic_parts {
            let mut u = vec![C64::new(0.0, 0.0); n];
            u[0] = gamma;
            u[n - 1] = C64::new(corner, 0.0);
            lu.thomas(&mut u);
            let v_last = corner / gamma;
            let denom = C64::new(1.0, 0.0) + u[0] + v_last * u[n - 1];
            if !(denom.norm() > PIVOT_TOL) {
                return Err(Error::SolveFailure {
                    row: n - 1,
                    pivot: denom.norm(),
                });
            }
            lu.cyclic = Some(Cyclic {
                z: u,
                v_last,
                denom,
            });
        }
        Ok(lu)
    }

    fn thomas(&self, x: &mut [C64]) {
        let n = x.len();
        x[0] *= self.inv_den[0];
        for i in 1..n {
            x[i] = (x[i] - x[i - 1] * self.sub[i]) * self.inv_den[i];
        }
        for i in (0..n - 1).rev() {
            let next = x[i + 1];
            x[i] -= self.cp[i] * next;
        }
    }

    /// Overwrites `x` with M^{-1} x.
    pub fn solve_in_place(&self, x: &mut [C64]) {
        self.thomas(x);
        if let Some(c) = &self.cyclic {
            let n = x.len();
            let t = (x[0] + c.v_last * x[n - 1]) / c.denom;
            for (xi, zi) in x.iter_mut().zip(&c.z) {
                *xi -= t * zi;
            }
        }
    }

    pub fn solve(&self, rhs: &[C64]) -> Vec<C64> {
        let mut x = rhs.to_vec();
        self.solve_in_place(&mut x);
        x
    }
}

/// Three-point second-difference matrix. On the channel the ghost cell
/// reflects the first and last cells, so the end diagonal entries are -1/h^2.
pub fn second_derivative_matrix(grid: &Grid) -> Tridiag {
    let n = grid.n;
    let ih2 = 1.0 / (grid.h * grid.h);
    let mut diag = vec![C64::new(-2.0 * ih2, 0.0); n];
    let periodic = grid.bc() == Bc::Periodic;
    let mut off = vec![ih2; n];
    if !periodic {
        diag[0] = C64::new(-ih2, 0.0);
        diag[n - 1] = C64::new(-ih2, 0.0);
        off[n - 1] = 0.0;
    }
    Tridiag {
        diag,
        off,
        periodic,
    }
}

/// Centered first difference with the same boundary treatment as D2.
pub fn first_derivative(grid: &Grid, f: &[C64]) -> Vec<C64> {
    let n = grid.n;
    let s = 0.5 / grid.h;
    (0..n)
        .map(|i| {
            let (l, r) = match grid.bc() {
                Bc::Periodic => (f[(i + n - 1) % n], f[(i + 1) % n]),
                Bc::NoFlux => (f[i.saturating_sub(1)], f[(i + 1).min(n - 1)]),
            };
            (r - l) * s
        })
        .collect()
}

/// Forward difference (f[i+1] - f[i]) / h; on the channel the last entry is 0.
/// Satisfies sum |D+ f|^2 h = <-D2 f, f> exactly.
pub fn forward_difference(grid: &Grid, f: &[C64]) -> Vec<C64> {
    let n = grid.n;
    (0..n)
        .map(|i| match grid.bc() {
            Bc::Periodic => (f[(i + 1) % n] - f[i]) / grid.h,
            Bc::NoFlux if i + 1 < n => (f[i + 1] - f[i]) / grid.h,
            Bc::NoFlux => C64::new(0.0, 0.0),
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct ModeOperator {
    pub matrix: Tridiag,
    pub nu: f64,
    pub k: i64,
    pub kind: Kind,
    pub bc: Bc,
    pub grid: Grid,
    pub profile: Arc<ShearProfile>,
}

impl ModeOperator {
    /// Hermitian part (A + A*)/2.
    pub fn hermitian_part(&self) -> Tridiag {
        Tridiag {
            diag: self
                .matrix
                .diag
                .iter()
                .map(|d| C64::new(d.re, 0.0))
                .collect(),
            off: self.matrix.off.clone(),
            periodic: self.matrix.periodic,
        }
    }

    pub fn adjoint(&self) -> Tridiag {
        self.matrix.adjoint()
    }

    /// |k| max|u|, the half-width of the numerical range in the imaginary direction.
    pub fn skew_bound(&self) -> f64 {
        self.k.unsigned_abs() as f64 * self.profile.max_abs_u()
    }
}

pub fn assemble_mode_operator(
    profile: Arc<ShearProfile>,
    nu: f64,
    k: i64,
    kind: Kind,
) -> Result<ModeOperator> {
    if !(nu > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "viscosity must be positive, got {nu}"
        )));
    }
    let grid = profile.grid.clone();
    let d2 = second_derivative_matrix(&grid);
    let kf = k as f64;
    let shift = match kind {
        Kind::Elliptic => nu * kf * kf,
        Kind::Hypoelliptic => 0.0,
    };
    let diag = d2
        .diag
        .iter()
        .zip(&profile.u)
        .map(|(d, u)| C64::new(shift - nu * d.re, kf * u))
        .collect();
    let off = d2.off.iter().map(|e| -nu * e).collect();
    Ok(ModeOperator {
        matrix: Tridiag {
            diag,
            off,
            periodic: d2.periodic,
        },
        nu,
        k,
        kind,
        bc: grid.bc(),
        grid,
        profile,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::shear_profiles::{make_profile, ProfileSpec};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_vec(n: usize, seed: u64) -> Vec<C64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect()
    }

    fn max_diff(a: &[C64], b: &[C64]) -> f64 {
        a.iter()
            .zip(b)
            .map(|(x, y)| (x - y).norm())
            .fold(0.0, f64::max)
    }

    #[test]
    fn d2_kills_constants() {
        for domain in [Domain::Torus, Domain::Channel] {
            let g = Grid::new(domain, 64).unwrap();
            let d2 = second_derivative_matrix(&g);
            let one = vec![C64::new(1.0, 0.0); 64];
            let r = d2.matvec(&one);
            assert!(r.iter().all(|v| v.norm() < 1e-9), "{domain:?}");
            let dense = d2.to_dense();
            for i in 0..64 {
                for j in 0..64 {
                    assert_eq!(dense[i][j], dense[j][i]);
                }
            }
        }
    }

    #[test]
    fn d2_fourier_symbol() {
        let g = Grid::new(Domain::Torus, 128).unwrap();
        let d2 = second_derivative_matrix(&g);
        let eta = 5.0;
        let f: Vec<C64> = g
            .nodes
            .iter()
            .map(|&y| C64::from_polar(1.0, eta * y))
            .collect();
        let r = d2.matvec(&f);
        let lam = -4.0 / (g.h * g.h) * (eta * g.h / 2.0).sin().powi(2);
        let want: Vec<C64> = f.iter().map(|v| v * lam).collect();
        assert!(max_diff(&r, &want) < 1e-9);
    }

    #[test]
    fn smallest_laplacian_eigenvalue_converges() {
        let err = |n: usize| {
            let g = Grid::new(Domain::Torus, n).unwrap();
            let lam = 4.0 / (g.h * g.h) * (g.h / 2.0).sin().powi(2);
            (lam - 1.0).abs()
        };
        assert!((err(128) / err(256) - 4.0).abs() < 0.01);
    }

    #[test]
    fn lu_solves_periodic_and_open() {
        for periodic in [true, false] {
            let n = 97;
            let diag: Vec<C64> = (0..n)
                .map(|i| C64::new(3.0 + (i as f64).sin(), 0.5 * i as f64 / n as f64))
                .collect();
            let off: Vec<f64> = (0..n).map(|i| -1.0 + 0.1 * (i as f64).cos()).collect();
            let m = Tridiag {
                diag,
                off,
                periodic,
            };
            let x = random_vec(n, 3);
            let b = m.matvec(&x);
            let sol = m.factor().unwrap().solve(&b);
            assert!(max_diff(&sol, &x) < 1e-12, "periodic={periodic}");
        }
    }

    #[test]
    fn singular_matrix_reports_failure() {
        let g = Grid::new(Domain::Channel, 64).unwrap();
        let d2 = second_derivative_matrix(&g);
        assert!(matches!(d2.factor(), Err(Error::SolveFailure { .. })));
    }

    #[test]
    fn operator_parts() {
        let p =
            Arc::new(make_profile(&ProfileSpec::Builtin("sin".into()), Domain::Torus, 64).unwrap());
        let op = assemble_mode_operator(p.clone(), 0.01, 3, Kind::Elliptic).unwrap();
        let herm = op.hermitian_part();
        let d2 = second_derivative_matrix(&op.grid);
        for i in 0..64 {
            assert!((herm.diag[i].re - 0.01 * (9.0 - d2.diag[i].re)).abs() < 1e-12);
            assert!((op.matrix.diag[i].im - 3.0 * p.u[i]).abs() < 1e-15);
        }
        let adj = op.adjoint();
        let x = random_vec(64, 1);
        let y = random_vec(64, 2);
        let lhs = op.grid.inner(&op.matrix.matvec(&x), &y);
        let rhs = op.grid.inner(&x, &adj.matvec(&y));
        assert!((lhs - rhs).norm() < 1e-10);
    }

    #[test]
    fn numerical_range_sector() {
        let p =
            Arc::new(make_profile(&ProfileSpec::Builtin("sin".into()), Domain::Torus, 64).unwrap());
        let op = assemble_mode_operator(p, 1e-3, 2, Kind::Elliptic).unwrap();
        for seed in 0..20 {
            let f = random_vec(64, seed);
            let q = op.grid.inner(&op.matrix.matvec(&f), &f);
            assert!(q.im.abs() <= op.skew_bound() * op.grid.norm_sqr(&f) * (1.0 + 1e-12));
            assert!(q.re >= 0.0);
        }
    }

    #[test]
    fn forward_difference_matches_dirichlet_form() {
        for domain in [Domain::Torus, Domain::Channel] {
            let g = Grid::new(domain, 64).unwrap();
            let f = random_vec(64, 9);
            let d2 = second_derivative_matrix(&g);
            let lhs = -g.inner(&d2.matvec(&f), &f).re;
            let rhs = g.norm_sqr(&forward_difference(&g, &f));
            assert!((lhs - rhs).abs() < 1e-9 * rhs);
        }
    }
}
