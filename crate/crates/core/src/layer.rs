//! The `eps`-thin vortex layer around one curve.
//!
//! `R(a, eta) = z(a) + eps gamma(a) n(a) eta` with `eta` in `[-1, 0]`. The
//! inner boundary `eta = 0` is the curve itself; for counter-clockwise closed
//! curves `eta < 0` lies outside the enclosed region.
//!
//! ```text
//! d_a R   = z' + eps (gamma' z'^perp / L + gamma z''^perp / L) eta
//! d_eta R = eps gamma z'^perp / L
//! det     = eps L gamma - eps^2 L gamma^2 kappa eta
//! ```

use std::f64::consts::{PI, TAU};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::birkhoff_rott::{br_at, k2, one_sided_from_br, SheetConfiguration, StrengthProfile};
use crate::geometry::{arc_chord_constant, CurveKind, ParamCurve};
use crate::quadrature::{nan_max, nan_min};
use crate::quadrature::{simpson_weights, GaussLegendre};
use crate::{Error, Result, Vec2};

pub const DEFAULT_N_ALPHA_CLOSED: usize = 512;
pub const DEFAULT_N_ALPHA_OPEN: usize = 768;
pub const DEFAULT_N_ETA: usize = 16;

/// Random pairs drawn by a certificate, on top of the structured ones.
pub const CERTIFICATE_RANDOM_PAIRS: usize = 10_000;

/// Gauss–Legendre order of the boundary panels in [`layer_velocity`].
const PANEL_ORDER: usize = 16;

/// Map data at one `(alpha, eta)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MapPoint {
    pub x: Vec2,
    pub d_alpha: Vec2,
    pub d_eta: Vec2,
    pub jacobian: f64,
}

impl MapPoint {
    /// Physical gradient from parameter derivatives: `(grad R)^{-T} (f_a, f_eta)`.
    pub fn gradient(&self, f_alpha: f64, f_eta: f64) -> Vec2 {
        let (a, b) = (self.d_alpha, self.d_eta);
        let j = a.cross(b);
        Vec2::new(b.y * f_alpha - a.y * f_eta, -b.x * f_alpha + a.x * f_eta) / j
    }

    /// The symmetric tensor `A = J g^{-1}` of the transformed Laplacian,
    /// as `(A_aa, A_ae, A_ee)`.
    pub fn conductivity(&self) -> (f64, f64, f64) {
        let (a, b) = (self.d_alpha, self.d_eta);
        let j = a.cross(b);
        (b.norm2() / j, -a.dot(b) / j, a.norm2() / j)
    }
}

/// Curve, strength and thickness: enough to evaluate the map anywhere.
#[derive(Clone, Debug)]
pub struct LayerMap {
    pub curve: ParamCurve,
    pub strength: StrengthProfile,
    pub epsilon: f64,
}

impl LayerMap {
    pub fn at(&self, alpha: f64, eta: f64) -> MapPoint {
        let p = self.curve.point(alpha);
        let l = self.curve.length();
        let eps = self.epsilon;
        let g = self.strength.value(alpha);
        let dg = if g == 0.0 {
            0.0
        } else {
            self.strength.derivative(alpha)
        };
        let nvec = p.dz.perp() / l;
        let kappa = p.d2z.dot(nvec) / (l * l);
        MapPoint {
            x: p.z + nvec * (eps * g * eta),
            d_alpha: p.dz + (p.dz.perp() * dg + p.d2z.perp() * g) * (eps * eta / l),
            d_eta: nvec * (eps * g),
            jacobian: eps * l * g - eps * eps * l * g * g * kappa * eta,
        }
    }

    pub fn position(&self, alpha: f64, eta: f64) -> Vec2 {
        let p = self.curve.position(alpha);
        let f = self.curve.frame(alpha);
        p + f.n * (self.epsilon * self.strength.value(alpha) * eta)
    }
}

/// Tensor grid on `S x [-1, 0]` with the mapped positions, Jacobians and metric.
#[derive(Clone, Debug)]
pub struct LayerGrid {
    pub map: LayerMap,
    /// `j / N` (closed) or `(1 - cos(pi j / N))/2`, `j = 0..=N` (open).
    pub alpha: Vec<f64>,
    pub alpha_weights: Vec<f64>,
    /// `-1 + k / N_eta`, `k = 0..=N_eta`.
    pub eta: Vec<f64>,
    /// Composite Simpson weights on `[-1, 0]`.
    pub eta_weights: Vec<f64>,
    pub positions: Vec<Vec2>,
    pub jacobian: Vec<f64>,
    /// Columns `(d_a R, d_eta R)`.
    pub metric: Vec<[Vec2; 2]>,
}

impl LayerGrid {
    pub fn epsilon(&self) -> f64 {
        self.map.epsilon
    }

    pub fn curve(&self) -> &ParamCurve {
        &self.map.curve
    }

    pub fn strength(&self) -> &StrengthProfile {
        &self.map.strength
    }

    pub fn is_closed(&self) -> bool {
        self.map.curve.is_closed()
    }

    pub fn n_alpha(&self) -> usize {
        self.alpha.len()
    }

    pub fn n_eta(&self) -> usize {
        self.eta.len()
    }

    #[inline]
    pub fn idx(&self, j: usize, k: usize) -> usize {
        j * self.eta.len() + k
    }

    /// `sum_j sum_k w_j w_k J f` over the nodes.
    pub fn integrate(&self, f: impl Fn(usize, usize) -> f64) -> f64 {
        let rows: Vec<f64> = (0..self.n_alpha())
            .map(|j| {
                let inner: f64 = (0..self.n_eta())
                    .map(|k| self.eta_weights[k] * self.jacobian[self.idx(j, k)] * f(j, k))
                    .sum();
                self.alpha_weights[j] * inner
            })
            .collect();
        crate::quadrature::pairwise_sum(&rows)
    }
}

/// Builds the grid; rejects `eps` for which the Jacobian is not positive.
pub fn build_layer(
    curve: &ParamCurve,
    strength: &StrengthProfile,
    epsilon: f64,
    n_alpha: usize,
    n_eta: usize,
) -> Result<LayerGrid> {
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::param(
            "epsilon",
            format!("must be positive, got {epsilon}"),
        ));
    }
    if n_alpha < 8 || n_eta < 8 {
        return Err(Error::param(
            "resolution",
            format!("need N_alpha, N_eta >= 8, got {n_alpha}x{n_eta}"),
        ));
    }
    if !n_eta.is_multiple_of(2) {
        return Err(Error::param("n_eta", format!("must be even, got {n_eta}")));
    }
    let map = LayerMap {
        curve: curve.clone(),
        strength: strength.clone(),
        epsilon,
    };
    let (alpha, alpha_weights) = alpha_nodes(curve.kind(), n_alpha);
    let eta: Vec<f64> = (0..=n_eta)
        .map(|k| -1.0 + k as f64 / n_eta as f64)
        .collect();
    let eta_weights = simpson_weights(n_eta, -1.0, 0.0);
    let pts: Vec<MapPoint> = alpha
        .iter()
        .flat_map(|&a| eta.iter().map(move |&e| (a, e)))
        .map(|(a, e)| map.at(a, e))
        .collect();
    let interior = |j: usize| curve.is_closed() || (j > 0 && j + 1 < alpha.len());
    let mut min_j = f64::INFINITY;
    for (j, _) in alpha.iter().enumerate() {
        if !interior(j) {
            continue;
        }
        for k in 0..eta.len() {
            min_j = min_j.min(pts[j * eta.len() + k].jacobian);
        }
    }
    if !(min_j > 0.0) {
        return Err(Error::DegenerateLayer {
            eps: epsilon,
            min_jacobian: min_j,
        });
    }
    Ok(LayerGrid {
        map,
        alpha,
        alpha_weights,
        eta,
        eta_weights,
        positions: pts.iter().map(|p| p.x).collect(),
        jacobian: pts.iter().map(|p| p.jacobian).collect(),
        metric: pts.iter().map(|p| [p.d_alpha, p.d_eta]).collect(),
    })
}

/// Nodes and weights in `alpha`: the periodic trapezoid rule, or the
/// trapezoid rule in `t` for `a = (1 - cos t)/2` on open curves.
pub fn alpha_nodes(kind: CurveKind, n: usize) -> (Vec<f64>, Vec<f64>) {
    match kind {
        CurveKind::Closed => (
            (0..n).map(|j| j as f64 / n as f64).collect(),
            vec![1.0 / n as f64; n],
        ),
        CurveKind::Open => (0..=n)
            .map(|j| {
                let t = PI * j as f64 / n as f64;
                let w = if j == 0 || j == n { 0.5 } else { 1.0 };
                (0.5 * (1.0 - t.cos()), w * 0.5 * t.sin() * PI / n as f64)
            })
            .unzip(),
    }
}

/// `|D^eps|` as the tensor-quadrature integral of the Jacobian.
pub fn layer_area(layer: &LayerGrid) -> f64 {
    layer.integrate(|_, _| 1.0)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InjectivityCertificate {
    /// `min{L/4, 1/(2 F), 1/2}`.
    pub c0: f64,
    /// Largest sampled `eps` (bisection) at which the certificate still passes.
    pub eps0: f64,
    pub epsilon: f64,
    pub worst_pair_ratio: f64,
    pub arc_chord: f64,
    pub pairs: usize,
    pub passed: bool,
}

impl InjectivityCertificate {
    pub fn require(&self) -> Result<()> {
        if self.passed {
            Ok(())
        } else {
            Err(Error::CertificateFailed {
                eps: self.epsilon,
                ratio: self.worst_pair_ratio,
                c0: self.c0,
            })
        }
    }
}

/// `c0 = min{L/4, 1/(2 F), 1/2}` with the sampled arc-chord constant.
pub fn certificate_constant(curve: &ParamCurve) -> (f64, f64) {
    let f = arc_chord_constant(curve, 1024);
    ((curve.length() / 4.0).min(1.0 / (2.0 * f)).min(0.5), f)
}

/// Sampled minimum of `|R(a', e') - R(a, e)| / (|a - a'| + eps |gamma(a) e - gamma(a') e'|)`
/// over `eta, eta'` in `(-2, 2)`.
pub fn injectivity_certificate(
    curve: &ParamCurve,
    strength: &StrengthProfile,
    epsilon: f64,
    samples: usize,
) -> InjectivityCertificate {
    let (c0, arc_chord) = certificate_constant(curve);
    let worst = worst_ratio(curve, strength, epsilon, samples);
    let eps0 = certified_eps0(curve, strength, c0);
    InjectivityCertificate {
        c0,
        eps0,
        epsilon,
        worst_pair_ratio: worst.0,
        arc_chord,
        pairs: worst.1,
        passed: worst.0 >= c0,
    }
}

fn certified_eps0(curve: &ParamCurve, strength: &StrengthProfile, c0: f64) -> f64 {
    let pass = |e: f64| worst_ratio(curve, strength, e, 2_000).0 >= c0;
    let (mut lo, mut hi) = (0.0, 1.0);
    while pass(hi) && hi < 1e3 {
        lo = hi;
        hi *= 2.0;
    }
    for _ in 0..30 {
        let mid = 0.5 * (lo + hi);
        if pass(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

fn worst_ratio(
    curve: &ParamCurve,
    strength: &StrengthProfile,
    epsilon: f64,
    samples: usize,
) -> (f64, usize) {
    let map = LayerMap {
        curve: curve.clone(),
        strength: strength.clone(),
        epsilon,
    };
    let closed = curve.is_closed();
    let ratio = |a: f64, e: f64, b: f64, f: f64| -> Option<f64> {
        let den = curve.param_distance(a, b)
            + epsilon * (strength.value(a) * e - strength.value(b) * f).abs();
        if den <= 1e-300 {
            return None;
        }
        Some((map.position(a, e) - map.position(b, f)).norm() / den)
    };
    let mut pairs: Vec<(f64, f64, f64, f64)> = Vec::with_capacity(samples + 4096);
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0001);
    for _ in 0..samples {
        pairs.push((
            rng.gen_range(0.0..1.0),
            rng.gen_range(-2.0..2.0),
            rng.gen_range(0.0..1.0),
            rng.gen_range(-2.0..2.0),
        ));
    }
    // structured pairs: eta on a lattice (hits focal values such as 1/eps), alpha
    // offsets from near-diagonal to antipodal
    let etas: Vec<f64> = (-39..=39).map(|k| k as f64 * 0.05).collect();
    let offsets = [0.0_f64, 1e-4, 1e-3, 1e-2, 0.05, 0.125, 0.25, 0.5];
    for (ia, &a0) in [0.0_f64, 0.13, 0.37, 0.5, 0.71, 0.9].iter().enumerate() {
        for &d in &offsets {
            let b0 = if closed { a0 + d } else { (a0 + d).min(1.0) };
            for (ie, &e) in etas.iter().enumerate() {
                let f = etas[(ie * 7 + ia * 13 + 5) % etas.len()];
                pairs.push((a0, e, b0, f));
                pairs.push((a0, e, b0, e));
            }
        }
    }
    let worst = pairs
        .par_iter()
        .filter_map(|&(a, e, b, f)| ratio(a, e, b, f))
        .reduce(|| f64::INFINITY, nan_min);
    (worst, pairs.len())
}

/// Quadrature used for the self-induced part of [`layer_velocity`].
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum SelfCellPolicy {
    /// Boundary (contour-dynamics) form with adaptive near-field panels.
    #[default]
    ContourAdaptive,
    /// Mapped cell-centre rule; cells within their inradius of `x` are
    /// dropped, since a disk contributes nothing to an odd kernel.
    CellMidpoint,
}

/// Precomputed boundary panels of one layer for the contour form
/// `v(x) = -(1/(2 pi eps)) [oint_{eta=-1} - oint_{eta=0}] ln|x - y| dy`.
#[derive(Clone, Debug)]
pub struct LayerPanels {
    map: LayerMap,
    gl: GaussLegendre,
    /// Panel breakpoints in the boundary parameter (`alpha`, or `t` on open curves).
    breaks: Vec<f64>,
    /// Per boundary: node positions and `dy` weights.
    nodes: [Vec<(Vec2, Vec2)>; 2],
}

const BOUNDARY_ETA: [f64; 2] = [-1.0, 0.0];
const BOUNDARY_SIGN: [f64; 2] = [1.0, -1.0];

impl LayerPanels {
    pub fn new(layer: &LayerGrid) -> Self {
        let n_panels = (layer.n_alpha() / 8).max(32);
        let upper = if layer.is_closed() { 1.0 } else { PI };
        let breaks: Vec<f64> = (0..=n_panels)
            .map(|p| upper * p as f64 / n_panels as f64)
            .collect();
        let gl = GaussLegendre::new(PANEL_ORDER);
        let map = layer.map.clone();
        let mut out = LayerPanels {
            map,
            gl,
            breaks,
            nodes: [Vec::new(), Vec::new()],
        };
        for b in 0..2 {
            let mut v = Vec::with_capacity(n_panels * PANEL_ORDER);
            for p in 0..n_panels {
                let (u0, u1) = (out.breaks[p], out.breaks[p + 1]);
                for (u, w) in out.gl.on(u0, u1) {
                    let (y, dy) = out.boundary(b, u);
                    v.push((y, dy * w));
                }
            }
            out.nodes[b] = v;
        }
        out
    }

    /// Boundary point and derivative with respect to the boundary parameter.
    fn boundary(&self, b: usize, u: f64) -> (Vec2, Vec2) {
        if self.map.curve.is_closed() {
            let m = self.map.at(u, BOUNDARY_ETA[b]);
            (m.x, m.d_alpha)
        } else {
            let a = 0.5 * (1.0 - u.cos());
            let m = self.map.at(a, BOUNDARY_ETA[b]);
            (m.x, m.d_alpha * (0.5 * u.sin()))
        }
    }

    fn panel_integral(&self, b: usize, x: Vec2, u0: f64, u1: f64, depth: u32) -> Vec2 {
        let pts: Vec<(Vec2, Vec2)> = self
            .gl
            .on(u0, u1)
            .map(|(u, w)| {
                let (y, dy) = self.boundary(b, u);
                (y, dy * w)
            })
            .collect();
        self.refine(b, x, u0, u1, &pts, depth)
    }

    fn refine(
        &self,
        b: usize,
        x: Vec2,
        u0: f64,
        u1: f64,
        pts: &[(Vec2, Vec2)],
        depth: u32,
    ) -> Vec2 {
        let size: f64 = pts.iter().map(|(_, d)| d.norm()).sum();
        let dist = pts
            .iter()
            .map(|(y, _)| (x - *y).norm())
            .fold(f64::INFINITY, f64::min);
        if depth >= 60 || size < 1e-15 {
            // a log-singular sliver of negligible length
            return Vec2::ZERO;
        }
        if dist >= size {
            return pts.iter().map(|(y, d)| *d * (x - *y).norm().ln()).sum();
        }
        let mid = 0.5 * (u0 + u1);
        self.panel_integral(b, x, u0, mid, depth + 1)
            + self.panel_integral(b, x, mid, u1, depth + 1)
    }

    /// Velocity induced by this layer at `x`.
    pub fn velocity(&self, x: Vec2) -> Vec2 {
        let n_panels = self.breaks.len() - 1;
        let mut total = Vec2::ZERO;
        for (b, sign) in BOUNDARY_SIGN.iter().enumerate() {
            let mut acc = Vec2::ZERO;
            for p in 0..n_panels {
                let pts = &self.nodes[b][p * PANEL_ORDER..(p + 1) * PANEL_ORDER];
                acc += self.refine(b, x, self.breaks[p], self.breaks[p + 1], pts, 0);
            }
            total += acc * *sign;
        }
        total * (-1.0 / (TAU * self.map.epsilon))
    }
}

fn cell_midpoint_velocity(layer: &LayerGrid, x: Vec2) -> Vec2 {
    let na = layer.n_alpha();
    let ne = layer.n_eta();
    let cells_a = if layer.is_closed() { na } else { na - 1 };
    let eps = layer.epsilon();
    let mut acc = Vec2::ZERO;
    for j in 0..cells_a {
        let a0 = layer.alpha[j];
        let a1 = if j + 1 == na { 1.0 } else { layer.alpha[j + 1] };
        let am = 0.5 * (a0 + a1);
        for k in 0..ne - 1 {
            let em = 0.5 * (layer.eta[k] + layer.eta[k + 1]);
            let m = layer.map.at(am, em);
            let (da, de) = (a1 - a0, layer.eta[k + 1] - layer.eta[k]);
            let inradius = 0.5 * (m.d_alpha.norm() * da).min(m.d_eta.norm() * de);
            let r = x - m.x;
            if r.norm() < inradius {
                continue;
            }
            acc += k2(r) * (m.jacobian / eps * da * de);
        }
    }
    acc
}

/// `v^eps(x) = sum_k eps^{-1} int_{D_k} K2(x - y) dy`.
pub fn layer_velocity(layers: &[LayerGrid], x: Vec2, policy: SelfCellPolicy) -> Vec2 {
    match policy {
        SelfCellPolicy::ContourAdaptive => {
            layers.iter().map(|l| LayerPanels::new(l).velocity(x)).sum()
        }
        SelfCellPolicy::CellMidpoint => layers.iter().map(|l| cell_midpoint_velocity(l, x)).sum(),
    }
}

/// `v^eps` at every node of layer `i`, evaluated in parallel.
pub fn layer_velocity_at_nodes(
    layers: &[LayerGrid],
    i: usize,
    policy: SelfCellPolicy,
) -> Vec<Vec2> {
    match policy {
        SelfCellPolicy::ContourAdaptive => {
            let panels: Vec<LayerPanels> = layers.iter().map(LayerPanels::new).collect();
            layers[i]
                .positions
                .par_iter()
                .map(|&x| panels.iter().map(|p| p.velocity(x)).sum())
                .collect()
        }
        SelfCellPolicy::CellMidpoint => layers[i]
            .positions
            .par_iter()
            .map(|&x| layers.iter().map(|l| cell_midpoint_velocity(l, x)).sum())
            .collect(),
    }
}

/// `g(a, eta) = BR(z(a)) - (eta + 1/2) [v](z(a))` with `[v] = gamma s`.
pub fn linear_profile(br: Vec2, gamma: f64, s: Vec2, eta: f64) -> Vec2 {
    br - s * ((eta + 0.5) * gamma)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearityReport {
    /// `max |v^eps(R(a, eta)) - g(a, eta)|` over the nodes.
    pub max_defect: f64,
    /// `max |g(a, 0) - v+|`.
    pub plus_identity: f64,
    /// `max |g(a, -1) - v-|`.
    pub minus_identity: f64,
}

/// Linearity defect of layer `i` given `v^eps` at its nodes.
///
/// Open curves skip the two endpoint columns where the layer degenerates.
pub fn linearity_defect_from(
    cfg: &SheetConfiguration,
    i: usize,
    layer: &LayerGrid,
    velocity: &[Vec2],
) -> LinearityReport {
    let na = layer.n_alpha();
    let cols: Vec<usize> = if layer.is_closed() {
        (0..na).collect()
    } else {
        (1..na - 1).collect()
    };
    let per_col: Vec<(f64, f64, f64)> = cols
        .par_iter()
        .map(|&j| {
            let a = layer.alpha[j];
            let br = br_at(cfg, i, a);
            let (vp, vm) = one_sided_from_br(cfg, i, a, br);
            let s = layer.curve().frame(a).s;
            let g = layer.strength().value(a);
            let mut d: f64 = 0.0;
            for (k, &e) in layer.eta.iter().enumerate() {
                d = d.max((velocity[layer.idx(j, k)] - linear_profile(br, g, s, e)).norm());
            }
            let plus = (linear_profile(br, g, s, 0.0) - vp).norm();
            let minus = (linear_profile(br, g, s, -1.0) - vm).norm();
            (d, plus, minus)
        })
        .collect();
    let fold = |f: fn(&(f64, f64, f64)) -> f64| per_col.iter().map(f).fold(0.0, nan_max);
    LinearityReport {
        max_defect: fold(|t| t.0),
        plus_identity: fold(|t| t.1),
        minus_identity: fold(|t| t.2),
    }
}

/// Computes `v^eps` on layer `i` and its linearity defect.
pub fn linearity_defect(
    layers: &[LayerGrid],
    cfg: &SheetConfiguration,
    i: usize,
) -> LinearityReport {
    let v = layer_velocity_at_nodes(layers, i, SelfCellPolicy::ContourAdaptive);
    linearity_defect_from(cfg, i, &layers[i], &v)
}

/// Smallest sampled distance between the nodes of different layers.
pub fn min_cross_layer_distance(layers: &[LayerGrid]) -> f64 {
    let mut best = f64::INFINITY;
    for i in 0..layers.len() {
        for j in i + 1..layers.len() {
            let d = layers[i]
                .positions
                .par_iter()
                .map(|p| {
                    layers[j]
                        .positions
                        .iter()
                        .map(|q| (*p - *q).norm())
                        .fold(f64::INFINITY, f64::min)
                })
                .reduce(|| f64::INFINITY, f64::min);
            best = best.min(d);
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::make_circle;

    #[test]
    fn gradient_inverts_the_metric() {
        let c = make_circle(Vec2::ZERO, 1.0).unwrap();
        let g = StrengthProfile::fourier(1.0, vec![(1, 0.2)], vec![]).unwrap();
        let m = LayerMap {
            curve: c,
            strength: g,
            epsilon: 0.05,
        }
        .at(0.3, -0.4);
        // f = x . e  has parameter derivatives (d_a R . e, d_eta R . e)
        let e = Vec2::new(0.3, -0.8);
        let grad = m.gradient(m.d_alpha.dot(e), m.d_eta.dot(e));
        assert!((grad - e).norm() < 1e-13);
    }
}
