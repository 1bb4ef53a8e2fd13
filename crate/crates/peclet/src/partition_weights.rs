//! Smooth partition of unity adapted to the critical points of u, and the
//! weights alpha, beta, gamma of the augmented energy.

use serde::{Deserialize, Serialize};
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::shear_profiles::{CriticalPoint, Domain, ShearProfile};

/// theta(z) = exp(-1/z) for z > 0, else 0.
pub fn theta(z: f64) -> f64 {
    if z > 0.0 {
        (-1.0 / z).exp()
    } else {
        0.0
    }
}

/// psi(z) = theta(z) / (theta(z) + theta(1 - z)) and its first two derivatives.
pub fn psi_derivs(z: f64) -> (f64, f64, f64) {
    if z <= 0.0 {
        return (0.0, 0.0, 0.0);
    }
    if z >= 1.0 {
        return (1.0, 0.0, 0.0);
    }
    let w = 1.0 / (1.0 + (1.0 / z - 1.0 / (1.0 - z)).exp());
    let p = w * (1.0 - w);
    let g = 1.0 / (z * z) + 1.0 / ((1.0 - z) * (1.0 - z));
    let dg = -2.0 / (z * z * z) + 2.0 / ((1.0 - z) * (1.0 - z) * (1.0 - z));
    (w, g * p, p * (dg + g * g * (1.0 - 2.0 * w)))
}

/// phi(z) = psi(z + 2) psi(2 - z) and its first two derivatives.
pub fn phi_derivs(z: f64) -> (f64, f64, f64) {
    let (a, da, d2a) = psi_derivs(z + 2.0);
    let (b, db, d2b) = psi_derivs(2.0 - z);
    (a * b, da * b - a * db, d2a * b - 2.0 * da * db + a * d2b)
}

/// (theta(z), psi(z), phi(z))
pub fn evaluate_bumps(z: f64) -> (f64, f64, f64) {
    (theta(z), psi_derivs(z).0, phi_derivs(z).0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Piece {
    pub center: f64,
    pub order: usize,
}

/// Samples of a function and its first two derivatives on the profile grid.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Sampled {
    pub v: Vec<f64>,
    pub d1: Vec<f64>,
    pub d2: Vec<f64>,
}

impl Sampled {
    fn zeros(n: usize) -> Sampled {
        Sampled {
            v: vec![0.0; n],
            d1: vec![0.0; n],
            d2: vec![0.0; n],
        }
    }

    fn add(&mut self, i: usize, (v, d1, d2): (f64, f64, f64), s: f64) {
        self.v[i] += s * v;
        self.d1[i] += s * d1;
        self.d2[i] += s * d2;
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PartitionOfUnity {
    pub domain: Domain,
    pub delta: f64,
    pub n0: usize,
    /// One bump per critical point.
    pub pieces: Vec<Piece>,
    /// phi_j for j = 0..=n0, bumps grouped by vanishing order.
    pub phi: Vec<Sampled>,
    /// Wall bumps at y = 0 and y = 1 (channel only).
    pub boundary: Option<[Sampled; 2]>,
    pub nodes: Vec<f64>,
}

impl PartitionOfUnity {
    fn offset(&self, y: f64, center: f64) -> f64 {
        match self.domain {
            Domain::Torus => {
                let l = Domain::Torus.length();
                (y - center + 0.5 * l).rem_euclid(l) - 0.5 * l
            }
            Domain::Channel => y - center,
        }
    }

    /// phi((y - center)/delta) and its y-derivatives, with periodic wrap on the torus.
    pub fn bump_at(&self, center: f64, y: f64) -> (f64, f64, f64) {
        let d = self.delta;
        let (v, d1, d2) = phi_derivs(self.offset(y, center) / d);
        (v, d1 / d, d2 / (d * d))
    }

    /// Samples of the bump of one critical point.
    pub fn piece(&self, i: usize) -> Sampled {
        let mut s = Sampled::zeros(self.nodes.len());
        for (idx, &y) in self.nodes.iter().enumerate() {
            s.add(idx, self.bump_at(self.pieces[i].center, y), 1.0);
        }
        s
    }

    /// phi_j(y) for every order plus the two wall bumps (zero on the torus).
    pub fn values_at(&self, y: f64) -> (Vec<f64>, [f64; 2]) {
        let mut phi = vec![0.0; self.n0 + 1];
        for p in &self.pieces {
            phi[p.order] += self.bump_at(p.center, y).0;
        }
        let walls = match self.domain {
            Domain::Channel => [self.bump_at(0.0, y).0, self.bump_at(1.0, y).0],
            Domain::Torus => [0.0, 0.0],
        };
        phi[0] = (1.0 - phi[1..].iter().sum::<f64>() - walls[0] - walls[1]).clamp(0.0, 1.0);
        (phi, walls)
    }

    /// phi_b = phi_b0 + phi_b1 (zero on the torus).
    pub fn boundary_total(&self) -> Vec<f64> {
        match &self.boundary {
            Some([a, b]) => a.v.iter().zip(&b.v).map(|(x, y)| x + y).collect(),
            None => vec![0.0; self.nodes.len()],
        }
    }

    /// max |phi_j'| / phi_j^{1 - varsigma} over the grid points where phi_j > 0.
    pub fn c_varsigma(&self, varsigma: f64) -> Vec<f64> {
        let ratio = |s: &Sampled| {
            s.v.iter()
                .zip(&s.d1)
                .filter(|(v, _)| **v > 1e-300)
                .map(|(v, d)| d.abs() / v.powf(1.0 - varsigma))
                .fold(0.0, f64::max)
        };
        let mut out: Vec<f64> = self.phi.iter().map(ratio).collect();
        if let Some(b) = &self.boundary {
            out.extend(b.iter().map(ratio));
        }
        out
    }
}

pub fn build_partition(profile: &ShearProfile) -> Result<PartitionOfUnity> {
    let domain = profile.domain;
    let cps: &[CriticalPoint] = &profile.critical_points;
    if domain == Domain::Torus && cps.is_empty() {
        return Err(Error::InvalidProfile(
            "torus profile without critical points".into(),
        ));
    }
    let len = domain.length();
    let dist = |a: f64, b: f64| match domain {
        Domain::Torus => {
            let d = (a - b).rem_euclid(len);
            d.min(len - d)
        }
        Domain::Channel => (a - b).abs(),
    };
    let mut delta = f64::INFINITY;
    for (i, a) in cps.iter().enumerate() {
        for b in &cps[i + 1..] {
            delta = delta.min(dist(a.location, b.location) / 8.0);
        }
    }
    match domain {
        Domain::Torus => delta = delta.min(len / 8.0),
        Domain::Channel => {
            delta = delta.min(1.0 / 8.0);
            for c in cps {
                delta = delta.min(c.location / 8.0).min((1.0 - c.location) / 8.0);
            }
        }
    }
    let h = profile.grid.h;
    if delta < 4.0 * h {
        return Err(Error::DegenerateSpacing { delta, h });
    }
    let n = profile.grid.n;
    let mut pou = PartitionOfUnity {
        domain,
        delta,
        n0: profile.n0,
        pieces: cps
            .iter()
            .map(|c| Piece {
                center: c.location,
                order: c.order,
            })
            .collect(),
        phi: vec![Sampled::zeros(n); profile.n0 + 1],
        boundary: None,
        nodes: profile.grid.nodes.clone(),
    };
    let mut phi = vec![Sampled::zeros(n); profile.n0 + 1];
    for p in &pou.pieces {
        for (i, &y) in pou.nodes.iter().enumerate() {
            phi[p.order].add(i, pou.bump_at(p.center, y), 1.0);
        }
    }
    let mut rest = Sampled::zeros(n);
    rest.v.iter_mut().for_each(|v| *v = 1.0);
    for s in &phi[1..] {
        for i in 0..n {
            rest.add(i, (s.v[i], s.d1[i], s.d2[i]), -1.0);
        }
    }
    if domain == Domain::Channel {
        let mut walls = [Sampled::zeros(n), Sampled::zeros(n)];
        for (i, &y) in pou.nodes.iter().enumerate() {
            walls[0].add(i, pou.bump_at(0.0, y), 1.0);
            walls[1].add(i, pou.bump_at(1.0, y), 1.0);
        }
        for w in &walls {
            for i in 0..n {
                rest.add(i, (w.v[i], w.d1[i], w.d2[i]), -1.0);
            }
        }
        pou.boundary = Some(walls);
    }
    // clean round-off so phi_0 stays in [0, 1]
    rest.v.iter_mut().for_each(|v| *v = v.clamp(0.0, 1.0));
    phi[0] = rest;
    pou.phi = phi;
    Ok(pou)
}

/// The small parameters of the weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpsLedger {
    pub eps_tilde: f64,
    /// eps_{beta,j} for j = 0, 1, ...
    pub eps_beta: Vec<f64>,
    pub c0: f64,
    pub kappa0: f64,
}

impl Default for EpsLedger {
    fn default() -> Self {
        EpsLedger::geometric(0.1, 4.0, 1e-2, 7)
    }
}

impl EpsLedger {
    /// eps_beta_j = (eps_tilde^2 / (4 C0))^{j+1} / 2, the largest ladder (up to
    /// the factor 1/2) compatible with beta^2 <= alpha gamma / (4 C0).
    pub fn geometric(eps_tilde: f64, c0: f64, kappa0: f64, orders: usize) -> EpsLedger {
        let q = eps_tilde * eps_tilde / (4.0 * c0);
        EpsLedger {
            eps_tilde,
            eps_beta: (0..orders).map(|j| 0.5 * q.powi(j as i32 + 1)).collect(),
            c0,
            kappa0,
        }
    }

    pub fn eps_alpha(&self, j: usize) -> f64 {
        self.eps_tilde * self.eps_beta[j]
    }

    pub fn eps_gamma(&self, j: usize) -> f64 {
        self.eps_tilde * self.eps_beta[j].powf(j as f64 / (j as f64 + 1.0))
    }
}

/// alpha_j, beta_j, gamma_j
pub fn order_scalars(nu: f64, k: f64, j: usize) -> (f64, f64, f64) {
    let jf = j as f64;
    let k = k.abs();
    (
        (nu / k).powf(2.0 / (jf + 3.0)),
        nu.powf((1.0 - jf) / (jf + 3.0)) * k.powf(-4.0 / (jf + 3.0)),
        nu.powf(-2.0 * jf / (jf + 3.0)) * k.powf(-6.0 / (jf + 3.0)),
    )
}

/// nu^{(n+1)/(n+3)} |k|^{2/(n+3)}
pub fn lambda_tilde(nu: f64, k: f64, n: usize) -> f64 {
    let nf = n as f64;
    nu.powf((nf + 1.0) / (nf + 3.0)) * k.abs().powf(2.0 / (nf + 3.0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstraintCheck {
    pub name: String,
    pub margin: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ValidationReport {
    pub checks: Vec<ConstraintCheck>,
}

impl ValidationReport {
    pub fn first_violation(&self) -> Option<&ConstraintCheck> {
        self.checks.iter().find(|c| !(c.margin >= 0.0))
    }

    fn push(&mut self, name: impl Into<String>, margin: f64) {
        self.checks.push(ConstraintCheck {
            name: name.into(),
            margin,
        });
    }
}

#[derive(Debug, Clone)]
pub struct HypoWeights {
    pub profile: Arc<ShearProfile>,
    pub partition: Arc<PartitionOfUnity>,
    pub nu: f64,
    pub k: f64,
    pub ledger: EpsLedger,
    pub alpha: Vec<f64>,
    pub dalpha: Vec<f64>,
    pub beta: Vec<f64>,
    pub dbeta: Vec<f64>,
    pub d2beta: Vec<f64>,
    pub gamma: Vec<f64>,
    pub dgamma: Vec<f64>,
    /// Per-order scalars, indexed by j.
    pub alpha_j: Vec<f64>,
    pub beta_j: Vec<f64>,
    pub gamma_j: Vec<f64>,
    pub eps_alpha: Vec<f64>,
    pub eps_beta: Vec<f64>,
    pub eps_gamma: Vec<f64>,
    /// n0 on the torus, nc on the channel.
    pub rate_order: usize,
    pub lambda_tilde: f64,
    pub lambda_log: f64,
    pub report: ValidationReport,
}

impl HypoWeights {
    /// eps_{gamma,j}/eps_{beta,j}, maximized over j.
    pub fn gamma_beta_ratio(&self) -> f64 {
        self.eps_gamma
            .iter()
            .zip(&self.eps_beta)
            .map(|(g, b)| g / b)
            .fold(0.0, f64::max)
    }

    /// beta evaluated off-grid, e.g. at the channel walls.
    pub fn beta_at(&self, y: f64) -> f64 {
        let (phi, walls) = self.partition.values_at(y);
        let mut b: f64 = phi
            .iter()
            .enumerate()
            .map(|(j, p)| self.eps_beta[j] * self.beta_j[j] * p)
            .sum();
        if self.partition.domain == Domain::Channel {
            let z = 1.0 - y;
            b += self.eps_beta[1] * self.beta_j[1] * (y * y * walls[0] + z * z * walls[1]);
        }
        b
    }

    /// Copy with beta and its derivatives set to zero.
    pub fn without_beta(&self) -> HypoWeights {
        let mut w = self.clone();
        for v in [&mut w.beta, &mut w.dbeta, &mut w.d2beta] {
            v.iter_mut().for_each(|x| *x = 0.0);
        }
        w
    }
}

/// Weights with every ledger constraint validated.
pub fn build_weights(
    profile: Arc<ShearProfile>,
    nu: f64,
    k: i64,
    ledger: &EpsLedger,
) -> Result<HypoWeights> {
    let w = build_weights_unchecked(profile, nu, k, ledger)?;
    if let Some(c) = w.report.first_violation() {
        return Err(Error::ConstraintViolated {
            name: c.name.clone(),
            margin: c.margin,
        });
    }
    Ok(w)
}

/// Weights plus the validation report, without rejecting violations.
pub fn build_weights_unchecked(
    profile: Arc<ShearProfile>,
    nu: f64,
    k: i64,
    ledger: &EpsLedger,
) -> Result<HypoWeights> {
    if !(nu > 0.0) || k == 0 {
        return Err(Error::InvalidArgument(format!(
            "need nu > 0 and k != 0, got nu={nu}, k={k}"
        )));
    }
    let partition = Arc::new(build_partition(&profile)?);
    let channel = profile.domain == Domain::Channel;
    let top = if channel {
        profile.n0.max(1)
    } else {
        profile.n0
    };
    if ledger.eps_beta.len() <= top {
        return Err(Error::InvalidArgument(format!(
            "eps_beta needs {} entries, got {}",
            top + 1,
            ledger.eps_beta.len()
        )));
    }
    let kf = k as f64;
    let js = 0..=top;
    let (mut alpha_j, mut beta_j, mut gamma_j) = (vec![], vec![], vec![]);
    for j in js.clone() {
        let (a, b, g) = order_scalars(nu, kf, j);
        alpha_j.push(a);
        beta_j.push(b);
        gamma_j.push(g);
    }
    let eps_alpha: Vec<f64> = js.clone().map(|j| ledger.eps_alpha(j)).collect();
    let eps_beta: Vec<f64> = js.clone().map(|j| ledger.eps_beta[j]).collect();
    let eps_gamma: Vec<f64> = js.clone().map(|j| ledger.eps_gamma(j)).collect();

    let n = profile.grid.n;
    let assemble = |coef: &dyn Fn(usize) -> f64| -> Sampled {
        let mut s = Sampled::zeros(n);
        for (j, phi) in partition.phi.iter().enumerate() {
            let c = coef(j);
            for i in 0..n {
                s.add(i, (phi.v[i], phi.d1[i], phi.d2[i]), c);
            }
        }
        if let Some([b0, b1]) = &partition.boundary {
            // c1 y^2 phi_b0 + c1 (1 - y)^2 phi_b1
            let c = coef(1);
            for (i, &y) in profile.grid.nodes.iter().enumerate() {
                let z = 1.0 - y;
                let lo = (
                    y * y * b0.v[i],
                    2.0 * y * b0.v[i] + y * y * b0.d1[i],
                    2.0 * b0.v[i] + 4.0 * y * b0.d1[i] + y * y * b0.d2[i],
                );
                let hi = (
                    z * z * b1.v[i],
                    -2.0 * z * b1.v[i] + z * z * b1.d1[i],
                    2.0 * b1.v[i] - 4.0 * z * b1.d1[i] + z * z * b1.d2[i],
                );
                s.add(i, lo, c);
                s.add(i, hi, c);
            }
        }
        s
    };
    let a = assemble(&|j| eps_alpha[j] * alpha_j[j]);
    let b = assemble(&|j| eps_beta[j] * beta_j[j]);
    let g = assemble(&|j| eps_gamma[j] * gamma_j[j]);

    let rate_order = if channel { profile.nc } else { profile.n0 };
    let lt = lambda_tilde(nu, kf, rate_order);
    let lambda_log = lt / crate::semigroup::log_factor(nu, k);

    let mut report = ValidationReport::default();
    report.push("kappa: nu/|k| <= kappa0", ledger.kappa0 - nu / kf.abs());
    report.push("eps_tilde <= 1", 1.0 - ledger.eps_tilde);
    for j in js.clone() {
        let rel = (beta_j[j] * beta_j[j] - alpha_j[j] * gamma_j[j]).abs() / (beta_j[j] * beta_j[j]);
        report.push(format!("beta_{j}^2 = alpha_{j} gamma_{j}"), 1e-12 - rel);
        report.push(format!("eps_beta_{j} < 1"), 1.0 - eps_beta[j]);
        report.push(
            format!("eps_beta_{j}^2 <= eps_alpha_{j} eps_gamma_{j} / (4 C0)"),
            eps_alpha[j] * eps_gamma[j] / (4.0 * ledger.c0) - eps_beta[j] * eps_beta[j],
        );
        report.push(
            format!("eps_alpha_{j}^2 <= eps_beta_{j} / 196"),
            eps_beta[j] / 196.0 - eps_alpha[j] * eps_alpha[j],
        );
    }
    let mut pointwise = f64::INFINITY;
    for i in 0..n {
        let cap = a.v[i] * g.v[i] / (2.0 * ledger.c0);
        let m = if cap > 0.0 {
            (cap - b.v[i] * b.v[i]) / cap
        } else if b.v[i] == 0.0 {
            0.0
        } else {
            -1.0
        };
        pointwise = pointwise.min(m);
    }
    report.push(
        "beta^2 <= alpha gamma / (2 C0) pointwise (relative)",
        pointwise,
    );

    Ok(HypoWeights {
        nu,
        k: kf,
        ledger: ledger.clone(),
        alpha: a.v,
        dalpha: a.d1,
        beta: b.v,
        dbeta: b.d1,
        d2beta: b.d2,
        gamma: g.v,
        dgamma: g.d1,
        alpha_j,
        beta_j,
        gamma_j,
        eps_alpha,
        eps_beta,
        eps_gamma,
        rate_order,
        lambda_tilde: lt,
        lambda_log,
        report,
        partition,
        profile,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::shear_profiles::{make_profile, ProfileSpec};
    use std::f64::consts::PI;

    fn profile(name: &str, domain: Domain, n: usize) -> Arc<ShearProfile> {
        Arc::new(make_profile(&ProfileSpec::Builtin(name.into()), domain, n).unwrap())
    }

    #[test]
    fn bump_values() {
        assert_eq!(evaluate_bumps(0.0).2, 1.0);
        assert_eq!(evaluate_bumps(3.0).2, 0.0);
        assert!((evaluate_bumps(0.5).1 - 0.5).abs() < 1e-15);
        assert_eq!(evaluate_bumps(-1.0).0, 0.0);
        assert!((evaluate_bumps(2.0).0 - (-0.5f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn bump_derivatives_match_differences() {
        let h = 1e-5;
        for &z in &[-1.7, -1.2, 0.3, 1.1, 1.5, 1.93] {
            let (_, d1, d2) = phi_derivs(z);
            let fd1 = (phi_derivs(z + h).0 - phi_derivs(z - h).0) / (2.0 * h);
            let fd2 = (phi_derivs(z + h).1 - phi_derivs(z - h).1) / (2.0 * h);
            assert!((d1 - fd1).abs() < 1e-6 * (1.0 + d1.abs()), "z={z}");
            assert!((d2 - fd2).abs() < 1e-5 * (1.0 + d2.abs()), "z={z}");
        }
    }

    #[test]
    fn sin_partition() {
        let p = profile("sin", Domain::Torus, 1024);
        let pou = build_partition(&p).unwrap();
        assert!((pou.delta - PI / 8.0).abs() < 1e-9);
        assert_eq!(pou.phi.len(), 2);
        for i in 0..1024 {
            let s = pou.phi[0].v[i] + pou.phi[1].v[i];
            assert!((s - 1.0).abs() < 1e-12);
        }
        // phi_1 = 1 within delta of each critical point
        for (i, &y) in pou.nodes.iter().enumerate() {
            if (y - PI / 2.0).abs() <= pou.delta || (y - 1.5 * PI).abs() <= pou.delta {
                assert!((pou.phi[1].v[i] - 1.0).abs() < 1e-15);
            }
        }
        let c = pou.c_varsigma(0.5);
        assert!(c.iter().all(|v| v.is_finite() && *v > 0.0));
    }

    #[test]
    fn channel_partition() {
        let p = profile("couette", Domain::Channel, 512);
        let pou = build_partition(&p).unwrap();
        assert!((pou.delta - 0.125).abs() < 1e-15);
        assert_eq!(pou.phi.len(), 1);
        let b = pou.boundary_total();
        for i in 0..512 {
            assert!((pou.phi[0].v[i] + b[i] - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn coarse_grid_is_degenerate() {
        let src = crate::ProfileSource::Trig {
            cos: vec![],
            sin: vec![
                0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0,
            ],
        };
        let p = make_profile(
            &ProfileSpec::Source {
                name: "s12".into(),
                source: src,
            },
            Domain::Torus,
            64,
        )
        .unwrap();
        assert!(matches!(
            build_partition(&p),
            Err(Error::DegenerateSpacing { .. })
        ));
    }

    #[test]
    fn scalar_examples() {
        let (a, b, g) = order_scalars(1e-3, 10.0, 0);
        assert!((a - 2.1544346900318843e-3).abs() < 1e-15);
        assert!((b - 4.641588833612779e-3).abs() < 1e-15);
        assert!((g - 1e-2).abs() < 1e-15);
        assert!((b * b - a * g).abs() < 1e-18);
        let lt = lambda_tilde(1e-3, 10.0, 1);
        assert!((lt - 0.1).abs() < 1e-14);
        let ll = lt / crate::semigroup::log_factor(1e-3, 10);
        assert!((ll - 9.5923e-4).abs() < 1e-7);
    }

    #[test]
    fn default_ledger_validates() {
        let p = profile("sin", Domain::Torus, 512);
        let w = build_weights(p, 1e-3, 1, &EpsLedger::default()).unwrap();
        assert!(w.report.first_violation().is_none());
        for i in 0..512 {
            assert!(w.lambda_tilde * w.alpha[i] <= w.nu * (1.0 + 1e-12));
            assert!(
                w.lambda_tilde * w.gamma[i] <= w.gamma_beta_ratio() * w.beta[i] * (1.0 + 1e-12)
            );
        }
    }

    #[test]
    fn large_eps_beta_violates_ledger() {
        let ledger = EpsLedger {
            eps_tilde: 0.1,
            eps_beta: vec![1e-2; 4],
            ..EpsLedger::default()
        };
        let p = profile("sin", Domain::Torus, 256);
        assert!(matches!(
            build_weights(p, 1e-3, 1, &ledger),
            Err(Error::ConstraintViolated { .. })
        ));
    }

    #[test]
    fn channel_weights_vanish_at_walls() {
        let p = profile("couette", Domain::Channel, 512);
        let w = build_weights(p, 1e-3, 1, &EpsLedger::default()).unwrap();
        let first = w.beta[0] / w.beta[256];
        assert!(first < 1e-4);
        assert!(w.alpha[0] < 1e-4 * w.alpha[256]);
        assert!(w.gamma[511] < 1e-4 * w.gamma[256]);
        assert_eq!(w.rate_order, 1);
        assert_eq!(w.beta_at(0.0), 0.0);
        assert_eq!(w.beta_at(1.0), 0.0);
        let y = w.profile.grid.nodes[256];
        assert!((w.beta_at(y) - w.beta[256]).abs() < 1e-12 * w.beta[256]);
    }

    #[test]
    fn ladder_is_monotone() {
        for &(nu, k) in &[(1e-3, 1.0), (1e-2, 1.0), (1e-4, 3.0)] {
            for j in 0..4 {
                let (a0, b0, g0) = order_scalars(nu, k, j);
                let (a1, b1, g1) = order_scalars(nu, k, j + 1);
                assert!(a1 > a0 && b1 > b0 && g1 > g0);
            }
        }
    }
}
