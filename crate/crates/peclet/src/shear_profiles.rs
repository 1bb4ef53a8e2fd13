//! Shear profiles u(y), their derivatives, and critical-point analysis.
//!
//! A profile is stored as a closed-form source (trigonometric or polynomial
//! coefficients) with its mean removed, plus samples of u, u', u'', u''' on an
//! analysis grid. Critical points of u are located on a 16x refined grid and
//! classified by the order to which u' vanishes there.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::discretize::Grid;
use crate::error::{Error, Result};

/// Highest derivative order inspected when classifying a critical point.
const MAX_ORDER: usize = 6;
const ORDER_THRESHOLD: f64 = 1e-6;
const REFINE: usize = 16;
const ROOT_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Domain {
    /// y in [0, 2pi) with periodic wrap.
    Torus,
    /// y in [0, 1] with no-flux walls.
    Channel,
}

impl Domain {
    pub fn length(self) -> f64 {
        match self {
            Domain::Torus => 2.0 * PI,
            Domain::Channel => 1.0,
        }
    }
}

/// Closed-form description of u before mean removal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ProfileSource {
    /// sum_m cos[m] cos(m y) + sin[m] sin(m y)
    Trig { cos: Vec<f64>, sin: Vec<f64> },
    /// sum_m c[m] y^m
    Poly(Vec<f64>),
    /// Samples without derivative evaluators; rejected by `make_profile`.
    Tabulated(Vec<f64>),
}

impl ProfileSource {
    /// m-th derivative of the raw (not mean-corrected) profile.
    pub fn derivative(&self, y: f64, m: usize) -> f64 {
        match self {
            ProfileSource::Trig { cos, sin } => {
                let shift = m as f64 * PI / 2.0;
                let mut acc = 0.0;
                for (j, a) in cos.iter().enumerate() {
                    if *a != 0.0 && !(j == 0 && m > 0) {
                        let jf = j as f64;
                        acc += a * jf.powi(m as i32) * (jf * y + shift).cos();
                    }
                }
                for (j, b) in sin.iter().enumerate() {
                    if *b != 0.0 && j > 0 {
                        let jf = j as f64;
                        acc += b * jf.powi(m as i32) * (jf * y + shift).sin();
                    }
                }
                acc
            }
            ProfileSource::Poly(c) => (m..c.len()).rev().fold(0.0, |acc, p| {
                let falling: f64 = (0..m).map(|r| (p - r) as f64).product();
                acc * y + c[p] * falling
            }),
            ProfileSource::Tabulated(_) => f64::NAN,
        }
    }

    /// Average of the raw profile over the domain.
    fn mean(&self, domain: Domain) -> Result<f64> {
        match (self, domain) {
            (ProfileSource::Trig { cos, .. }, Domain::Torus) => {
                Ok(cos.first().copied().unwrap_or(0.0))
            }
            (ProfileSource::Trig { cos, sin }, Domain::Channel) => {
                let mut acc = cos.first().copied().unwrap_or(0.0);
                for (j, a) in cos.iter().enumerate().skip(1) {
                    acc += a * (j as f64).sin() / j as f64;
                }
                for (j, b) in sin.iter().enumerate().skip(1) {
                    acc += b * (1.0 - (j as f64).cos()) / j as f64;
                }
                Ok(acc)
            }
            (ProfileSource::Poly(c), Domain::Channel) => {
                Ok(c.iter().enumerate().map(|(p, v)| v / (p + 1) as f64).sum())
            }
            (ProfileSource::Poly(_), Domain::Torus) => Err(Error::InvalidProfile(
                "polynomial profiles are not periodic; use the channel domain".into(),
            )),
            (ProfileSource::Tabulated(_), _) => Err(Error::NonSmooth("tabulated".into())),
        }
    }
}

/// Either a built-in name or explicit coefficients.
#[derive(Debug, Clone, PartialEq)]
pub enum ProfileSpec {
    Builtin(String),
    Source { name: String, source: ProfileSource },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CriticalPoint {
    pub location: f64,
    /// Order to which u' vanishes: u^(m+1)(location) != 0 for m = order.
    pub order: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ShearProfile {
    pub name: String,
    pub domain: Domain,
    pub source: ProfileSource,
    /// Mean of the raw source, subtracted from every evaluation of u.
    pub offset: f64,
    pub grid: Grid,
    pub u: Vec<f64>,
    pub du: Vec<f64>,
    pub d2u: Vec<f64>,
    pub d3u: Vec<f64>,
    pub critical_points: Vec<CriticalPoint>,
    pub n0: usize,
    pub nc: usize,
    pub mean_zero: bool,
}

impl ShearProfile {
    /// Mean-corrected m-th derivative at an arbitrary point.
    pub fn eval(&self, y: f64, m: usize) -> f64 {
        let v = self.source.derivative(y, m);
        if m == 0 {
            v - self.offset
        } else {
            v
        }
    }

    pub fn max_abs_u(&self) -> f64 {
        self.u.iter().fold(0.0, |a, v| a.max(v.abs()))
    }

    pub fn oscillation(&self) -> f64 {
        let (lo, hi) = self
            .u
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| {
                (a.min(v), b.max(v))
            });
        if lo.is_finite() {
            hi - lo
        } else {
            0.0
        }
    }

    /// Same profile resampled on a grid with `n` points.
    pub fn with_grid_size(&self, n: usize) -> Result<ShearProfile> {
        let grid = Grid::new(self.domain, n)?;
        let mut out = self.clone();
        out.u = sample(&self.source, &grid, 0, self.offset);
        out.du = sample(&self.source, &grid, 1, 0.0);
        out.d2u = sample(&self.source, &grid, 2, 0.0);
        out.d3u = sample(&self.source, &grid, 3, 0.0);
        out.grid = grid;
        Ok(out)
    }

    /// u = 0, used by the heat-semigroup self tests. Carries no critical points.
    pub fn zero(domain: Domain, n: usize) -> Result<ShearProfile> {
        let grid = Grid::new(domain, n)?;
        let z = vec![0.0; n];
        Ok(ShearProfile {
            name: "zero".into(),
            domain,
            source: ProfileSource::Trig {
                cos: vec![],
                sin: vec![],
            },
            offset: 0.0,
            grid,
            u: z.clone(),
            du: z.clone(),
            d2u: z.clone(),
            d3u: z,
            critical_points: vec![],
            n0: 0,
            nc: if domain == Domain::Channel { 1 } else { 0 },
            mean_zero: true,
        })
    }
}

/// Names accepted by `builtin_source`.
pub const BUILTIN_NAMES: &[&str] = &["sin", "cos", "sin3", "couette", "quadratic", "zero"];

/// Built-in sources and the domain each is meant for.
pub fn builtin_source(name: &str) -> Option<(ProfileSource, Domain)> {
    let trig = |cos: Vec<f64>, sin: Vec<f64>| ProfileSource::Trig { cos, sin };
    match name {
        "sin" => Some((trig(vec![], vec![0.0, 1.0]), Domain::Torus)),
        "cos" => Some((trig(vec![0.0, 1.0], vec![]), Domain::Torus)),
        // sin^3 y = (3 sin y - sin 3y) / 4
        "sin3" => Some((trig(vec![], vec![0.0, 0.75, 0.0, -0.25]), Domain::Torus)),
        "couette" => Some((ProfileSource::Poly(vec![-0.5, 1.0]), Domain::Channel)),
        // (y - 1/2)^2 - 1/12, one interior critical point of order 1
        "quadratic" => Some((
            ProfileSource::Poly(vec![1.0 / 6.0, -1.0, 1.0]),
            Domain::Channel,
        )),
        "zero" => Some((trig(vec![], vec![]), Domain::Torus)),
        _ => None,
    }
}

fn sample(source: &ProfileSource, grid: &Grid, m: usize, offset: f64) -> Vec<f64> {
    grid.nodes
        .iter()
        .map(|&y| source.derivative(y, m) - if m == 0 { offset } else { 0.0 })
        .collect()
}

pub fn make_profile(spec: &ProfileSpec, domain: Domain, grid_size: usize) -> Result<ShearProfile> {
    let (name, source) = match spec {
        ProfileSpec::Builtin(name) => {
            let (source, _) = builtin_source(name).ok_or_else(|| {
                Error::InvalidProfile(format!("unknown built-in profile `{name}`"))
            })?;
            if name == "zero" {
                return ShearProfile::zero(domain, grid_size);
            }
            (name.clone(), source)
        }
        ProfileSpec::Source { name, source } => (name.clone(), source.clone()),
    };
    if let ProfileSource::Tabulated(_) = source {
        return Err(Error::NonSmooth(name));
    }
    if grid_size < 64 {
        return Err(Error::InvalidArgument(format!(
            "grid size {grid_size} < 64"
        )));
    }
    let offset = source.mean(domain)?;
    let grid = Grid::new(domain, grid_size)?;
    let critical_points = find_critical_points(&source, domain, grid_size)?;
    let n0 = critical_points.iter().map(|c| c.order).max().unwrap_or(0);
    if domain == Domain::Torus && n0 == 0 {
        return Err(Error::InvalidProfile(format!(
            "`{name}` has no critical points on the torus"
        )));
    }
    let nc = match domain {
        Domain::Torus => n0,
        Domain::Channel => n0.max(1),
    };
    Ok(ShearProfile {
        name,
        domain,
        u: sample(&source, &grid, 0, offset),
        du: sample(&source, &grid, 1, 0.0),
        d2u: sample(&source, &grid, 2, 0.0),
        d3u: sample(&source, &grid, 3, 0.0),
        source,
        offset,
        grid,
        critical_points,
        n0,
        nc,
        mean_zero: true,
    })
}

fn bisect(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let mut fa = f(a);
    while b - a > ROOT_TOL {
        let m = 0.5 * (a + b);
        let fm = f(m);
        if fm == 0.0 {
            return m;
        }
        if (fa < 0.0) == (fm < 0.0) {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

fn find_critical_points(
    source: &ProfileSource,
    domain: Domain,
    n: usize,
) -> Result<Vec<CriticalPoint>> {
    let len = domain.length();
    let m = REFINE * n;
    let h = len / m as f64;
    let ys: Vec<f64> = (0..=m).map(|i| i as f64 * h).collect();
    let d1: Vec<f64> = ys.iter().map(|&y| source.derivative(y, 1)).collect();
    let d2: Vec<f64> = ys.iter().map(|&y| source.derivative(y, 2)).collect();
    let scale1 = d1.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    if scale1 == 0.0 {
        return Err(Error::InvalidProfile("u' vanishes identically".into()));
    }
    let touch_tol = 1e-9 * scale1;
    let interior = |y: f64| domain == Domain::Torus || (y > 1e-9 && y < 1.0 - 1e-9);

    let mut roots: Vec<f64> = Vec::new();
    for i in 0..m {
        let (a, b) = (ys[i], ys[i + 1]);
        if d1[i] == 0.0 {
            roots.push(a);
        } else if d1[i] * d1[i + 1] < 0.0 {
            roots.push(bisect(|y| source.derivative(y, 1), a, b));
        }
        // even-order zeros of u' do not change sign; they are sign changes of u''
        if d2[i] == 0.0 && d1[i].abs() <= touch_tol {
            roots.push(a);
        } else if d2[i] * d2[i + 1] < 0.0 {
            let c = bisect(|y| source.derivative(y, 2), a, b);
            if source.derivative(c, 1).abs() <= touch_tol {
                roots.push(c);
            }
        }
    }

    let wrap = |y: f64| match domain {
        Domain::Torus => y.rem_euclid(len),
        Domain::Channel => y,
    };
    let dist = |a: f64, b: f64| match domain {
        Domain::Torus => {
            let d = (a - b).rem_euclid(len);
            d.min(len - d)
        }
        Domain::Channel => (a - b).abs(),
    };
    let mut unique: Vec<f64> = Vec::new();
    for r in roots.into_iter().map(wrap).filter(|&y| interior(y)) {
        if unique.iter().all(|&u| dist(u, r) > 1e-7) {
            unique.push(r);
        }
    }
    unique.sort_by(|a, b| a.partial_cmp(b).unwrap());

    let maxes: Vec<f64> = (2..=MAX_ORDER + 1)
        .map(|d| {
            ys.iter()
                .fold(0.0f64, |a, &y| a.max(source.derivative(y, d).abs()))
        })
        .collect();
    unique
        .into_iter()
        .map(|y| {
            (1..=MAX_ORDER)
                .find(|&order| {
                    let scale = maxes[order - 1];
                    scale > 0.0 && source.derivative(y, order + 1).abs() > ORDER_THRESHOLD * scale
                })
                .map(|order| CriticalPoint { location: y, order })
                .ok_or(Error::NoFiniteOrder { location: y })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn builtin(name: &str, n: usize) -> ShearProfile {
        let (_, domain) = builtin_source(name).unwrap();
        make_profile(&ProfileSpec::Builtin(name.into()), domain, n).unwrap()
    }

    #[test]
    fn sin_has_two_simple_critical_points() {
        let p = builtin("sin", 256);
        let locs: Vec<f64> = p.critical_points.iter().map(|c| c.location).collect();
        assert_eq!(locs.len(), 2);
        assert!((locs[0] - PI / 2.0).abs() < 1e-10);
        assert!((locs[1] - 1.5 * PI).abs() < 1e-10);
        assert!(p.critical_points.iter().all(|c| c.order == 1));
        assert_eq!(p.n0, 1);
        assert_eq!(p.nc, 1);
    }

    #[test]
    fn sin_cubed_orders() {
        let p = builtin("sin3", 256);
        let got: Vec<(f64, usize)> = p
            .critical_points
            .iter()
            .map(|c| (c.location, c.order))
            .collect();
        let want = [(0.0, 2), (PI / 2.0, 1), (PI, 2), (1.5 * PI, 1)];
        assert_eq!(got.len(), 4);
        for ((y, o), (wy, wo)) in got.iter().zip(want.iter()) {
            assert!((y - wy).abs() < 1e-6, "{y} vs {wy}");
            assert_eq!(o, wo);
        }
        assert_eq!(p.n0, 2);
        // sin^3 y = y^3 + O(y^5)
        assert!(p.eval(0.0, 2).abs() < 1e-14);
        assert!((p.eval(0.0, 3) - 6.0).abs() < 1e-12);
    }

    #[test]
    fn couette_channel_is_monotone() {
        let p = builtin("couette", 128);
        assert!(p.critical_points.is_empty());
        assert_eq!(p.n0, 0);
        assert_eq!(p.nc, 1);
        assert!(p.eval(0.5, 0).abs() < 1e-15);
    }

    #[test]
    fn quadratic_channel_has_interior_point() {
        let p = builtin("quadratic", 128);
        assert_eq!(p.critical_points.len(), 1);
        assert!((p.critical_points[0].location - 0.5).abs() < 1e-10);
        assert_eq!(p.critical_points[0].order, 1);
        assert_eq!(p.nc, 1);
    }

    #[test]
    fn mean_is_removed() {
        let src = ProfileSource::Trig {
            cos: vec![3.0, 0.0, 1.0],
            sin: vec![],
        };
        let p = make_profile(
            &ProfileSpec::Source {
                name: "shifted".into(),
                source: src,
            },
            Domain::Torus,
            128,
        )
        .unwrap();
        let mean: f64 = p.u.iter().sum::<f64>() / p.u.len() as f64;
        assert!(mean.abs() < 1e-12);
        let p = builtin("quadratic", 1024);
        let mean: f64 = p.u.iter().sum::<f64>() / p.u.len() as f64;
        assert!(mean.abs() < 1e-6);
    }

    #[test]
    fn polynomial_on_torus_rejected() {
        let r = make_profile(
            &ProfileSpec::Source {
                name: "p".into(),
                source: ProfileSource::Poly(vec![0.0, 1.0]),
            },
            Domain::Torus,
            128,
        );
        assert!(matches!(r, Err(Error::InvalidProfile(_))));
    }

    #[test]
    fn tabulated_is_non_smooth() {
        let r = make_profile(
            &ProfileSpec::Source {
                name: "tab".into(),
                source: ProfileSource::Tabulated(vec![0.0; 64]),
            },
            Domain::Torus,
            64,
        );
        assert!(matches!(r, Err(Error::NonSmooth(_))));
    }

    #[test]
    fn flat_critical_point_has_no_finite_order() {
        // u' = (y - 1/2)^9 vanishes to order 9 at y = 1/2
        let mut c = vec![0.0; 11];
        let binom = [
            1.0, 10.0, 45.0, 120.0, 210.0, 252.0, 210.0, 120.0, 45.0, 10.0, 1.0,
        ];
        for (p, b) in binom.iter().enumerate() {
            c[p] = b * (-0.5f64).powi(10 - p as i32) / 10.0;
        }
        let r = make_profile(
            &ProfileSpec::Source {
                name: "flat".into(),
                source: ProfileSource::Poly(c),
            },
            Domain::Channel,
            64,
        );
        assert!(matches!(r, Err(Error::NoFiniteOrder { .. })), "{r:?}");
    }

    #[test]
    fn finite_difference_derivative_converges_second_order() {
        let err = |n: usize| {
            let p = builtin("sin3", n);
            let h = p.grid.h;
            (0..n)
                .map(|i| {
                    let fd = (p.u[(i + 1) % n] - p.u[(i + n - 1) % n]) / (2.0 * h);
                    (fd - p.du[i]).abs()
                })
                .fold(0.0, f64::max)
        };
        let ratio = err(128) / err(256);
        assert!((ratio - 4.0).abs() < 0.2, "ratio {ratio}");
    }
}
