//! Strength profiles, sheet configurations and the Birkhoff–Rott integral.
//!
//! `BR(z_i(a)) = sum_k PV int K2(z_i(a) - z_k(a')) gamma_k(a') L_k da'`, where
//! only the self term `k = i` needs a principal value. Closed self terms use
//! the alternate-point trapezoidal rule; open self terms cluster nodes at the
//! endpoints (`a' = (1 - cos t)/2`) and subtract the straight-line singularity,
//! whose principal value is `gamma L K2(z') ln(a / (1 - a))`.

use std::f64::consts::{PI, TAU};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::geometry::{pairwise_distance, CurveKind, Frame, ParamCurve};
use crate::quadrature::nan_max;
use crate::quadrature::pairwise_sum;
use crate::{Error, Result, Vec2};

/// Default node counts for sheet quadratures.
pub const DEFAULT_NODES_CLOSED: usize = 512;
pub const DEFAULT_NODES_OPEN: usize = 768;

/// Residual sampling defaults.
pub const DEFAULT_N_RES: usize = 256;
pub const DEFAULT_ENDPOINT_DELTA: f64 = 1e-3;

/// `x^perp / (2 pi |x|^2)`.
pub fn kernel_k2(x: Vec2) -> Result<Vec2> {
    if x == Vec2::ZERO {
        return Err(Error::SingularKernel);
    }
    Ok(k2(x))
}

#[inline]
pub(crate) fn k2(x: Vec2) -> Vec2 {
    x.perp() / (TAU * x.norm2())
}

/// Directional derivative of `K2` at `v` along `w`.
#[inline]
fn dk2(v: Vec2, w: Vec2) -> Vec2 {
    let r2 = v.norm2();
    (w.perp() * r2 - v.perp() * (2.0 * v.dot(w))) / (TAU * r2 * r2)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Regularity {
    ClosedC2,
    /// Hoelder exponent `b` in `(0, 1)`.
    OpenHolder(f64),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum StrengthLaw {
    Constant(f64),
    /// `mean + sum a_k cos(2 pi k a) + b_k sin(2 pi k a)`.
    Fourier {
        mean: f64,
        cos: Vec<(u32, f64)>,
        sin: Vec<(u32, f64)>,
    },
    /// `amplitude * sqrt(h^2 - x^2)` on a segment of half-length `h`, written
    /// in the parameter as `amplitude * h * 2 sqrt(a (1 - a))`.
    Semicircle {
        amplitude: f64,
        half_length: f64,
    },
}

/// Vorticity strength per unit arclength.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StrengthProfile {
    pub law: StrengthLaw,
    pub regularity: Regularity,
    /// Sampled Hoelder (closed: Lipschitz) seminorm.
    pub holder_norm_estimate: f64,
}

impl StrengthProfile {
    pub fn constant(gamma0: f64) -> Result<Self> {
        if !(gamma0 > 0.0 && gamma0.is_finite()) {
            return Err(Error::param(
                "gamma0",
                format!("must be positive, got {gamma0}"),
            ));
        }
        Ok(Self::build(
            StrengthLaw::Constant(gamma0),
            Regularity::ClosedC2,
        ))
    }

    pub fn fourier(mean: f64, cos: Vec<(u32, f64)>, sin: Vec<(u32, f64)>) -> Result<Self> {
        let p = Self::build(
            StrengthLaw::Fourier { mean, cos, sin },
            Regularity::ClosedC2,
        );
        let min = (0..1024)
            .map(|j| p.value(j as f64 / 1024.0))
            .fold(f64::INFINITY, f64::min);
        if !(min > 0.0) {
            return Err(Error::param(
                "gamma",
                format!("closed strength must stay positive (min {min:.3e})"),
            ));
        }
        Ok(p)
    }

    /// `amplitude * sqrt(h^2 - x^2)`; Hoelder-1/2 at the endpoints.
    pub fn semicircle(amplitude: f64, half_length: f64) -> Result<Self> {
        if !(amplitude > 0.0 && half_length > 0.0) {
            return Err(Error::param(
                "amplitude",
                format!("semicircle needs positive amplitude and half-length, got {amplitude}, {half_length}"),
            ));
        }
        Ok(Self::build(
            StrengthLaw::Semicircle {
                amplitude,
                half_length,
            },
            Regularity::OpenHolder(0.5),
        ))
    }

    /// Overrides the regularity tag; consistency is checked by the configuration.
    pub fn with_regularity(mut self, regularity: Regularity) -> Self {
        self.regularity = regularity;
        self.holder_norm_estimate = holder_estimate(&self.law, regularity);
        self
    }

    fn build(law: StrengthLaw, regularity: Regularity) -> Self {
        let holder_norm_estimate = holder_estimate(&law, regularity);
        StrengthProfile {
            law,
            regularity,
            holder_norm_estimate,
        }
    }

    pub fn value(&self, alpha: f64) -> f64 {
        match &self.law {
            StrengthLaw::Constant(g) => *g,
            StrengthLaw::Fourier { mean, cos, sin } => {
                mean + cos
                    .iter()
                    .map(|&(k, a)| a * (TAU * k as f64 * alpha).cos())
                    .sum::<f64>()
                    + sin
                        .iter()
                        .map(|&(k, b)| b * (TAU * k as f64 * alpha).sin())
                        .sum::<f64>()
            }
            StrengthLaw::Semicircle {
                amplitude,
                half_length,
            } => {
                let a = alpha.clamp(0.0, 1.0);
                amplitude * half_length * 2.0 * (a * (1.0 - a)).sqrt()
            }
        }
    }

    /// `d gamma / d alpha`; unbounded at the endpoints of a semicircle law.
    pub fn derivative(&self, alpha: f64) -> f64 {
        match &self.law {
            StrengthLaw::Constant(_) => 0.0,
            StrengthLaw::Fourier { cos, sin, .. } => {
                cos.iter()
                    .map(|&(k, a)| -a * TAU * k as f64 * (TAU * k as f64 * alpha).sin())
                    .sum::<f64>()
                    + sin
                        .iter()
                        .map(|&(k, b)| b * TAU * k as f64 * (TAU * k as f64 * alpha).cos())
                        .sum::<f64>()
            }
            StrengthLaw::Semicircle {
                amplitude,
                half_length,
            } => amplitude * half_length * (1.0 - 2.0 * alpha) / (alpha * (1.0 - alpha)).sqrt(),
        }
    }

    /// `(min, max)` over `n` equispaced samples of `[0, 1]`.
    pub fn range(&self, n: usize) -> (f64, f64) {
        (0..=n)
            .map(|j| self.value(j as f64 / n as f64))
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), g| {
                (lo.min(g), hi.max(g))
            })
    }

    /// `int_0^1 gamma^p da` by a rule that is spectral for every bundled law.
    pub fn integral_pow(&self, p: f64) -> f64 {
        match &self.law {
            StrengthLaw::Semicircle { .. } => {
                let n = 4096;
                let vals: Vec<f64> = (0..n)
                    .map(|m| {
                        let t = PI * (m as f64 + 0.5) / n as f64;
                        let a = 0.5 * (1.0 - t.cos());
                        self.value(a).powf(p) * 0.5 * t.sin() * PI / n as f64
                    })
                    .collect();
                pairwise_sum(&vals)
            }
            _ => {
                let n = 4096;
                let vals: Vec<f64> = (0..n)
                    .map(|j| self.value(j as f64 / n as f64).powf(p) / n as f64)
                    .collect();
                pairwise_sum(&vals)
            }
        }
    }
}

fn holder_estimate(law: &StrengthLaw, regularity: Regularity) -> f64 {
    let b = match regularity {
        Regularity::ClosedC2 => 1.0,
        Regularity::OpenHolder(b) => b,
    };
    let p = StrengthProfile {
        law: law.clone(),
        regularity,
        holder_norm_estimate: 0.0,
    };
    let n = 256;
    let v: Vec<f64> = (0..=n).map(|j| p.value(j as f64 / n as f64)).collect();
    let mut best: f64 = 0.0;
    for i in 0..=n {
        for j in i + 1..=n {
            let d = (j - i) as f64 / n as f64;
            best = best.max((v[i] - v[j]).abs() / d.powf(b));
        }
    }
    best
}

/// Node counts for sheet quadratures.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SheetQuadrature {
    pub nodes_closed: usize,
    pub nodes_open: usize,
}

impl Default for SheetQuadrature {
    fn default() -> Self {
        SheetQuadrature {
            nodes_closed: DEFAULT_NODES_CLOSED,
            nodes_open: DEFAULT_NODES_OPEN,
        }
    }
}

impl SheetQuadrature {
    fn refined(self) -> Self {
        SheetQuadrature {
            nodes_closed: 2 * self.nodes_closed,
            nodes_open: 2 * self.nodes_open,
        }
    }
}

/// A finite disjoint union of (curve, strength) pairs plus the angular velocity.
#[derive(Clone, Debug)]
pub struct SheetConfiguration {
    components: Vec<(ParamCurve, StrengthProfile)>,
    omega: f64,
    pub quadrature: SheetQuadrature,
}

impl SheetConfiguration {
    /// Validates ordering (closed first), strength tags and disjointness.
    pub fn new(components: Vec<(ParamCurve, StrengthProfile)>, omega: f64) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::Precondition("configuration has no curves".into()));
        }
        if !omega.is_finite() {
            return Err(Error::param("omega", "must be finite"));
        }
        let first_open = components.iter().position(|(c, _)| !c.is_closed());
        if let Some(k) = first_open {
            if components[k..].iter().any(|(c, _)| c.is_closed()) {
                return Err(Error::Precondition(
                    "closed curves must be listed before open curves".into(),
                ));
            }
        }
        for (i, (c, g)) in components.iter().enumerate() {
            check_strength(i, c, g)?;
        }
        if components.len() >= 2 {
            let curves: Vec<ParamCurve> = components.iter().map(|(c, _)| c.clone()).collect();
            pairwise_distance(&curves)?;
        }
        Ok(SheetConfiguration {
            components,
            omega,
            quadrature: SheetQuadrature::default(),
        })
    }

    pub fn with_quadrature(mut self, q: SheetQuadrature) -> Self {
        self.quadrature = q;
        self
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    pub fn curve(&self, i: usize) -> &ParamCurve {
        &self.components[i].0
    }

    pub fn strength(&self, i: usize) -> &StrengthProfile {
        &self.components[i].1
    }

    pub fn components(&self) -> &[(ParamCurve, StrengthProfile)] {
        &self.components
    }

    pub fn n_closed(&self) -> usize {
        self.components
            .iter()
            .filter(|(c, _)| c.is_closed())
            .count()
    }

    /// The same sheet rotated by `theta` about the origin.
    pub fn rotated(&self, theta: f64) -> SheetConfiguration {
        SheetConfiguration {
            components: self
                .components
                .iter()
                .map(|(c, g)| (c.rotated(theta), g.clone()))
                .collect(),
            omega: self.omega,
            quadrature: self.quadrature,
        }
    }
}

fn check_strength(i: usize, c: &ParamCurve, g: &StrengthProfile) -> Result<()> {
    match (c.kind(), g.regularity) {
        (CurveKind::Closed, Regularity::ClosedC2) => {
            let (lo, _) = g.range(1024);
            if !(lo > 0.0) {
                return Err(Error::Precondition(format!(
                    "curve {i}: closed strength must be positive (min {lo:.3e})"
                )));
            }
        }
        (CurveKind::Open, Regularity::OpenHolder(b)) => {
            if !(b > 0.0 && b < 1.0) {
                return Err(Error::Precondition(format!(
                    "curve {i}: Hoelder exponent {b} outside (0, 1)"
                )));
            }
            let ends = g.value(0.0).abs().max(g.value(1.0).abs());
            if ends > 1e-12 {
                return Err(Error::Precondition(format!(
                    "curve {i}: open strength must vanish at the endpoints"
                )));
            }
            let interior = (1..1024)
                .map(|j| g.value(j as f64 / 1024.0))
                .fold(f64::INFINITY, f64::min);
            if !(interior > 0.0) {
                return Err(Error::Precondition(format!(
                    "curve {i}: open strength must be positive inside"
                )));
            }
        }
        (kind, reg) => {
            return Err(Error::Precondition(format!(
                "curve {i}: regularity {reg:?} inconsistent with curve kind {kind:?}"
            )))
        }
    }
    Ok(())
}

/// Endpoint-clustered node `a = (1 - cos t)/2` at the `m`-th of `n` midpoints in `t`
/// together with its weight `(pi/n) sin(t)/2`.
#[inline]
pub(crate) fn open_node(m: usize, n: usize) -> (f64, f64) {
    let t = PI * (m as f64 + 0.5) / n as f64;
    (0.5 * (1.0 - t.cos()), 0.5 * t.sin() * PI / n as f64)
}

/// Velocity induced at `x` by sheet `k` with a plain (non-PV) rule; accurate
/// when `x` stays away from curve `k`.
pub fn sheet_field(cfg: &SheetConfiguration, k: usize, x: Vec2) -> Vec2 {
    sheet_field_with(cfg, k, x, cfg.quadrature)
}

fn sheet_field_with(cfg: &SheetConfiguration, k: usize, x: Vec2, q: SheetQuadrature) -> Vec2 {
    let (c, g) = &cfg.components[k];
    let l = c.length();
    let mut acc = Vec2::ZERO;
    match c.kind() {
        CurveKind::Closed => {
            let n = q.nodes_closed;
            for m in 0..n {
                let a = m as f64 / n as f64;
                acc += k2(x - c.position(a)) * (g.value(a) * l / n as f64);
            }
        }
        CurveKind::Open => {
            let n = q.nodes_open;
            for m in 0..n {
                let (a, w) = open_node(m, n);
                acc += k2(x - c.position(a)) * (g.value(a) * l * w);
            }
        }
    }
    acc
}

fn self_term(cfg: &SheetConfiguration, i: usize, alpha: f64, q: SheetQuadrature) -> Vec2 {
    let (c, g) = &cfg.components[i];
    let l = c.length();
    let p = c.point(alpha);
    match c.kind() {
        CurveKind::Closed => {
            let n = q.nodes_closed;
            let half = n / 2;
            let mut acc = Vec2::ZERO;
            for m in 0..half {
                let a = alpha + (2 * m + 1) as f64 / n as f64;
                acc += k2(p.z - c.position(a)) * (g.value(a) * l * 2.0 / n as f64);
            }
            acc
        }
        CurveKind::Open => {
            let n = q.nodes_open;
            let ga = g.value(alpha);
            let k0 = k2(p.dz);
            let mut acc = Vec2::ZERO;
            for m in 0..n {
                let (a, w) = open_node(m, n);
                let d = alpha - a;
                let f = if d.abs() < 1e-13 {
                    -(k0 * g.derivative(alpha)) - dk2(p.dz, p.d2z) * (0.5 * ga)
                } else {
                    k2(p.z - c.position(a)) * g.value(a) - k0 * (ga / d)
                };
                acc += f * (l * w);
            }
            if ga > 0.0 && alpha > 0.0 && alpha < 1.0 {
                acc += k0 * (ga * l * (alpha / (1.0 - alpha)).ln());
            }
            acc
        }
    }
}

fn br_with(cfg: &SheetConfiguration, i: usize, alpha: f64, q: SheetQuadrature) -> Vec2 {
    let x = cfg.curve(i).position(alpha);
    (0..cfg.len())
        .map(|k| {
            if k == i {
                self_term(cfg, i, alpha, q)
            } else {
                sheet_field_with(cfg, k, x, q)
            }
        })
        .sum()
}

/// BR at `z_i(alpha)` with the configured quadrature, without a refinement check.
pub fn br_at(cfg: &SheetConfiguration, i: usize, alpha: f64) -> Vec2 {
    br_with(cfg, i, alpha, cfg.quadrature)
}

/// Tolerance of the refinement check in [`evaluate_br`]: closed sheets are
/// spectrally accurate, open sheets only algebraically.
pub fn br_tolerance(cfg: &SheetConfiguration) -> f64 {
    if cfg.components.iter().all(|(c, _)| c.is_closed()) {
        1e-6
    } else {
        1e-4
    }
}

/// BR at `z_i(alpha)`, confirmed against a doubled-node evaluation.
pub fn evaluate_br(cfg: &SheetConfiguration, i: usize, alpha: f64) -> Result<Vec2> {
    check_index(cfg, i, alpha)?;
    let coarse = br_with(cfg, i, alpha, cfg.quadrature);
    let fine = br_with(cfg, i, alpha, cfg.quadrature.refined());
    if (coarse - fine).norm() > br_tolerance(cfg) {
        return Err(Error::QuadratureDivergence {
            coarse: [coarse.x, coarse.y],
            fine: [fine.x, fine.y],
        });
    }
    Ok(fine)
}

fn check_index(cfg: &SheetConfiguration, i: usize, alpha: f64) -> Result<()> {
    if i >= cfg.len() {
        return Err(Error::param("i", format!("curve index {i} out of range")));
    }
    if !cfg.curve(i).is_closed() && !(0.0..=1.0).contains(&alpha) {
        return Err(Error::param(
            "alpha",
            format!("{alpha} outside [0, 1] on an open curve"),
        ));
    }
    Ok(())
}

/// One-sided limits `v+ = BR - (gamma/2) s` (the side `n` points into) and
/// `v- = BR + (gamma/2) s`.
pub fn one_sided_velocities(
    cfg: &SheetConfiguration,
    i: usize,
    alpha: f64,
) -> Result<(Vec2, Vec2)> {
    check_index(cfg, i, alpha)?;
    let br = br_at(cfg, i, alpha);
    Ok(one_sided_from_br(cfg, i, alpha, br))
}

pub(crate) fn one_sided_from_br(
    cfg: &SheetConfiguration,
    i: usize,
    alpha: f64,
    br: Vec2,
) -> (Vec2, Vec2) {
    let f = cfg.curve(i).frame(alpha);
    let half_jump = f.s * (0.5 * cfg.strength(i).value(alpha));
    (br - half_jump, br + half_jump)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurveResidual {
    pub index: usize,
    pub kind: CurveKind,
    /// `max |(BR - Omega z^perp) . n|`.
    pub br1: f64,
    /// Closed: oscillation of `(BR - Omega z^perp) . s gamma` about `C_i`;
    /// open: its maximum modulus.
    pub br2: f64,
    /// Fitted constant `C_i` (closed curves).
    pub c_i: Option<f64>,
    /// `max |BR - Omega z^perp|` (open curves).
    pub vector: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BRResidualReport {
    pub curves: Vec<CurveResidual>,
}

impl BRResidualReport {
    pub fn max_br1(&self) -> f64 {
        self.curves.iter().map(|c| c.br1).fold(0.0, nan_max)
    }

    pub fn max_br2(&self) -> f64 {
        self.curves.iter().map(|c| c.br2).fold(0.0, nan_max)
    }

    pub fn max_vector(&self) -> Option<f64> {
        self.curves.iter().filter_map(|c| c.vector).reduce(nan_max)
    }
}

/// Residual sampling: `n_res` points per curve, open curves on `[delta, 1 - delta]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResidualSampling {
    pub n_res: usize,
    pub delta: f64,
}

impl Default for ResidualSampling {
    fn default() -> Self {
        ResidualSampling {
            n_res: DEFAULT_N_RES,
            delta: DEFAULT_ENDPOINT_DELTA,
        }
    }
}

impl ResidualSampling {
    pub fn params(&self, kind: CurveKind) -> Vec<f64> {
        let n = self.n_res.max(2);
        match kind {
            CurveKind::Closed => (0..n).map(|j| j as f64 / n as f64).collect(),
            CurveKind::Open => (0..n)
                .map(|j| {
                    let u = 0.5 * (1.0 - (PI * j as f64 / (n - 1) as f64).cos());
                    self.delta + (1.0 - 2.0 * self.delta) * u
                })
                .collect(),
        }
    }
}

/// Samples the two stationarity equations on every curve.
pub fn stationarity_residual(
    cfg: &SheetConfiguration,
    sampling: ResidualSampling,
) -> BRResidualReport {
    let omega = cfg.omega;
    let curves = (0..cfg.len())
        .map(|i| {
            let c = cfg.curve(i);
            let g = cfg.strength(i);
            let samples: Vec<(f64, f64, f64)> = sampling
                .params(c.kind())
                .into_par_iter()
                .map(|a| {
                    let br = br_at(cfg, i, a);
                    let p = c.point(a);
                    let Frame { s, n, .. } = Frame::from_point(&p, c.length());
                    let r = br - p.z.perp() * omega;
                    (r.dot(n).abs(), r.dot(s) * g.value(a), r.norm())
                })
                .collect();
            let br1 = samples.iter().map(|t| t.0).fold(0.0, nan_max);
            match c.kind() {
                CurveKind::Closed => {
                    let tang: Vec<f64> = samples.iter().map(|t| t.1).collect();
                    let mean = pairwise_sum(&tang) / tang.len() as f64;
                    let osc = tang.iter().map(|v| (v - mean).abs()).fold(0.0, nan_max);
                    CurveResidual {
                        index: i,
                        kind: CurveKind::Closed,
                        br1,
                        br2: osc,
                        c_i: Some(mean),
                        vector: None,
                    }
                }
                CurveKind::Open => CurveResidual {
                    index: i,
                    kind: CurveKind::Open,
                    br1,
                    br2: samples.iter().map(|t| t.1.abs()).fold(0.0, nan_max),
                    c_i: None,
                    vector: Some(samples.iter().map(|t| t.2).fold(0.0, nan_max)),
                },
            }
        })
        .collect();
    BRResidualReport { curves }
}

/// Circle data recovered numerically from a curve with constant curvature.
fn detect_circle(c: &ParamCurve, g: &StrengthProfile) -> Option<(Vec2, f64, f64)> {
    if !c.is_closed() {
        return None;
    }
    let params = c.sample_params(64);
    let k0 = c.curvature(0.0);
    let f0 = c.frame(0.0);
    let center = c.position(0.0) + f0.n / k0;
    let (glo, ghi) = g.range(256);
    let round = params.iter().all(|&a| {
        let p = c.position(a);
        ((c.curvature(a) - k0).abs() < 1e-8 * k0.abs())
            && (((p - center).norm() * k0 - 1.0).abs() < 1e-8)
    });
    (round && ghi - glo <= 1e-10 * ghi).then_some((center, 1.0 / k0, glo))
}

/// Per circle, the maximal normal velocity built from the explicit fields of
/// the other circles: zero inside circle `k`, `gamma_k L_k (x - x_k)^perp /
/// (2 pi |x - x_k|^2)` outside.
pub fn concentricity_residual(
    cfg: &SheetConfiguration,
    sampling: ResidualSampling,
) -> Result<Vec<f64>> {
    let circles = cfg
        .components
        .iter()
        .enumerate()
        .map(|(i, (c, g))| {
            detect_circle(c, g).ok_or_else(|| {
                Error::Precondition(format!("curve {i} is not a circle with constant strength"))
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((0..cfg.len())
        .map(|i| {
            let c = cfg.curve(i);
            sampling
                .params(CurveKind::Closed)
                .into_iter()
                .map(|a| {
                    let x = c.position(a);
                    let n = c.frame(a).n;
                    let v: Vec2 = circles
                        .iter()
                        .enumerate()
                        .filter(|&(k, _)| k != i)
                        .map(|(_, &(xk, rk, gk))| {
                            let d = x - xk;
                            if d.norm() < rk {
                                Vec2::ZERO
                            } else {
                                d.perp() * (gk * TAU * rk / (TAU * d.norm2()))
                            }
                        })
                        .sum();
                    v.dot(n).abs()
                })
                .fold(0.0, nan_max)
        })
        .collect())
}
