//! Constant-speed parameterized curves and their differential geometry.
//!
//! Conventions: `s = z'/L`, `n = s^perp`, and `z'' = kappa * n * L^2`. A
//! counter-clockwise circle of radius `r` therefore has `n` pointing to its
//! center and `kappa = 1/r`.

use std::f64::consts::{PI, TAU};

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::quadrature::golden_max;
use crate::{Error, Result, Vec2};

/// Arc-chord constants above this value are treated as self-intersection.
pub const ARC_CHORD_CAP: f64 = 1.0e3;

/// Minimum sampled distance below which two curves count as overlapping.
pub const DISJOINT_FLOOR: f64 = 1.0e-6;

/// Sample count used when a routine does not receive one explicitly.
pub const DEFAULT_SAMPLES: usize = 1024;

/// Nodes of the spectral representation of a reparameterized curve.
const SPECTRAL_NODES: usize = 1024;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum CurveKind {
    /// Parameter domain `R/Z`.
    Closed,
    /// Parameter domain `[0, 1]`.
    Open,
}

/// Position and the first three parameter derivatives at one `alpha`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CurvePoint {
    pub z: Vec2,
    pub dz: Vec2,
    pub d2z: Vec2,
    pub d3z: Vec2,
}

/// Unit tangent, unit normal `n = s^perp` and curvature.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Frame {
    pub s: Vec2,
    pub n: Vec2,
    pub kappa: f64,
}

#[derive(Clone, Debug, PartialEq)]
enum Shape {
    Circle {
        center: Vec2,
        radius: f64,
        phase: f64,
    },
    Segment {
        center: Vec2,
        half_length: f64,
        dir: Vec2,
    },
    Spectral(SpectralCurve),
}

/// Truncated Fourier series `z(alpha) = sum_k c_k exp(2 pi i k alpha)`, read
/// as a complex number `x + iy`.
#[derive(Clone, Debug, PartialEq)]
struct SpectralCurve {
    modes: Vec<(i64, Complex64)>,
}

impl SpectralCurve {
    fn eval(&self, alpha: f64) -> CurvePoint {
        let mut acc = [Complex64::new(0.0, 0.0); 4];
        let base = Complex64::from_polar(1.0, TAU * alpha);
        let kmax = self
            .modes
            .iter()
            .map(|(k, _)| k.unsigned_abs())
            .max()
            .unwrap_or(0) as usize;
        // e^{2 pi i k alpha} for k = 0..=kmax by repeated multiplication, refreshed
        // every 32 steps to bound drift
        let mut pow = Vec::with_capacity(kmax + 1);
        let mut cur = Complex64::new(1.0, 0.0);
        for k in 0..=kmax {
            if k % 32 == 0 {
                cur = Complex64::from_polar(1.0, TAU * alpha * k as f64);
            }
            pow.push(cur);
            cur *= base;
        }
        for &(k, c) in &self.modes {
            let p = pow[k.unsigned_abs() as usize];
            let e = c * if k >= 0 { p } else { p.conj() };
            let w = TAU * k as f64;
            let iw = Complex64::new(0.0, w);
            let e1 = e * iw;
            let e2 = e1 * iw;
            acc[0] += e;
            acc[1] += e1;
            acc[2] += e2;
            acc[3] += e2 * iw;
        }
        let v = |c: Complex64| Vec2::new(c.re, c.im);
        CurvePoint {
            z: v(acc[0]),
            dz: v(acc[1]),
            d2z: v(acc[2]),
            d3z: v(acc[3]),
        }
    }

    /// `pi * sum k |c_k|^2`, the exact enclosed area of the series.
    fn area(&self) -> f64 {
        PI * self
            .modes
            .iter()
            .map(|(k, c)| *k as f64 * c.norm_sqr())
            .sum::<f64>()
    }
}

/// A constant-speed curve `z: S -> R^2` with `|z'| = L`.
#[derive(Clone, Debug, PartialEq)]
pub struct ParamCurve {
    kind: CurveKind,
    length: f64,
    shape: Shape,
}

/// Counter-clockwise circle `center + r (cos 2 pi a, sin 2 pi a)`.
pub fn make_circle(center: Vec2, radius: f64) -> Result<ParamCurve> {
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(Error::param(
            "radius",
            format!("must be positive, got {radius}"),
        ));
    }
    Ok(ParamCurve {
        kind: CurveKind::Closed,
        length: TAU * radius,
        shape: Shape::Circle {
            center,
            radius,
            phase: 0.0,
        },
    })
}

/// Open segment `z(a) = (h (2a - 1), 0)` of length `2h`.
pub fn make_segment(half_length: f64) -> Result<ParamCurve> {
    if !(half_length > 0.0 && half_length.is_finite()) {
        return Err(Error::param(
            "half_length",
            format!("must be positive, got {half_length}"),
        ));
    }
    Ok(ParamCurve {
        kind: CurveKind::Open,
        length: 2.0 * half_length,
        shape: Shape::Segment {
            center: Vec2::ZERO,
            half_length,
            dir: Vec2::new(1.0, 0.0),
        },
    })
}

/// Closed curve `r(theta) = R (1 + sum delta_k cos k theta)` reparameterized to
/// constant speed.
///
/// The speed `sigma(theta)` is expanded in a Fourier series, the arclength is
/// integrated termwise and inverted by Newton iteration at equispaced
/// `alpha`; the resulting samples are transformed once more so derivatives are
/// spectral.
pub fn make_fourier_curve(base_radius: f64, modes: &[(u32, f64)]) -> Result<ParamCurve> {
    if !(base_radius > 0.0 && base_radius.is_finite()) {
        return Err(Error::param(
            "base_radius",
            format!("must be positive, got {base_radius}"),
        ));
    }
    if modes.iter().all(|&(_, d)| d == 0.0) {
        return make_circle(Vec2::ZERO, base_radius);
    }
    if let Some(&(k, _)) = modes.iter().find(|(k, _)| *k == 0) {
        return Err(Error::param(
            "modes",
            format!("wavenumber {k} must be positive"),
        ));
    }
    let r = |t: f64| {
        base_radius
            * (1.0
                + modes
                    .iter()
                    .map(|&(k, d)| d * (k as f64 * t).cos())
                    .sum::<f64>())
    };
    let dr = |t: f64| {
        -base_radius
            * modes
                .iter()
                .map(|&(k, d)| d * k as f64 * (k as f64 * t).sin())
                .sum::<f64>()
    };

    let m = 4 * SPECTRAL_NODES;
    let mut planner = FftPlanner::<f64>::new();
    let mut sigma: Vec<Complex64> = (0..m)
        .map(|j| {
            let t = TAU * j as f64 / m as f64;
            let rt = r(t);
            if rt <= 0.0 {
                return Complex64::new(f64::NAN, 0.0);
            }
            Complex64::new(rt.hypot(dr(t)), 0.0)
        })
        .collect();
    if sigma.iter().any(|c| c.re.is_nan()) {
        return Err(Error::param(
            "modes",
            "perturbation makes r(theta) non-positive",
        ));
    }
    planner.plan_fft_forward(m).process(&mut sigma);
    let a0 = sigma[0].re / m as f64;
    // sigma = a0 + sum_k (a_k cos k t + b_k sin k t)
    let trig: Vec<(f64, f64, f64)> = (1..m / 2)
        .map(|k| {
            let c = sigma[k] / m as f64;
            (k as f64, 2.0 * c.re, -2.0 * c.im)
        })
        .filter(|&(_, a, b)| a.abs().max(b.abs()) > 1e-17 * a0)
        .collect();
    let length = TAU * a0;
    let arclength = |t: f64| {
        a0 * t
            + trig
                .iter()
                .map(|&(k, a, b)| (a * (k * t).sin() - b * ((k * t).cos() - 1.0)) / k)
                .sum::<f64>()
    };
    let speed = |t: f64| {
        a0 + trig
            .iter()
            .map(|&(k, a, b)| a * (k * t).cos() + b * (k * t).sin())
            .sum::<f64>()
    };

    let n = SPECTRAL_NODES;
    let mut z: Vec<Complex64> = (0..n)
        .map(|j| {
            let target = length * j as f64 / n as f64;
            let mut t = TAU * j as f64 / n as f64;
            for _ in 0..60 {
                let dt = (arclength(t) - target) / speed(t);
                t -= dt;
                if dt.abs() < 1e-15 {
                    break;
                }
            }
            Complex64::from_polar(r(t), t)
        })
        .collect();
    planner.plan_fft_forward(n).process(&mut z);
    let scale = base_radius * 1e-15;
    let modes: Vec<(i64, Complex64)> = (0..n)
        .filter(|&j| j != n / 2)
        .map(|j| {
            let k = if j < n / 2 {
                j as i64
            } else {
                j as i64 - n as i64
            };
            (k, z[j] / n as f64)
        })
        .filter(|(_, c)| c.norm() > scale)
        .collect();

    let curve = ParamCurve {
        kind: CurveKind::Closed,
        length,
        shape: Shape::Spectral(SpectralCurve { modes }),
    };
    let worst = (0..2 * n)
        .map(|j| ((curve.point(j as f64 / (2 * n) as f64).dz.norm() - length) / length).abs())
        .fold(0.0, f64::max);
    if worst > 1e-10 {
        return Err(Error::param(
            "modes",
            format!("constant-speed reparameterization failed (relative speed error {worst:.2e})"),
        ));
    }
    let f = arc_chord_constant(&curve, DEFAULT_SAMPLES);
    if !(f <= ARC_CHORD_CAP) {
        return Err(Error::SelfIntersecting(f));
    }
    Ok(curve)
}

impl ParamCurve {
    pub fn kind(&self) -> CurveKind {
        self.kind
    }

    pub fn is_closed(&self) -> bool {
        self.kind == CurveKind::Closed
    }

    /// Arclength `L`.
    pub fn length(&self) -> f64 {
        self.length
    }

    /// Circle center and radius when the curve was built as a circle.
    pub fn as_circle(&self) -> Option<(Vec2, f64)> {
        match self.shape {
            Shape::Circle { center, radius, .. } => Some((center, radius)),
            _ => None,
        }
    }

    /// Position and derivatives. Closed curves wrap `alpha` into `[0, 1)`.
    pub fn point(&self, alpha: f64) -> CurvePoint {
        match &self.shape {
            Shape::Circle {
                center,
                radius,
                phase,
            } => {
                let w = TAU;
                let (s, c) = (w * alpha + phase).sin_cos();
                let u = Vec2::new(c, s);
                let up = Vec2::new(-s, c);
                CurvePoint {
                    z: *center + u * *radius,
                    dz: up * (radius * w),
                    d2z: u * (-radius * w * w),
                    d3z: up * (-radius * w * w * w),
                }
            }
            Shape::Segment {
                center,
                half_length,
                dir,
            } => CurvePoint {
                z: *center + *dir * (half_length * (2.0 * alpha - 1.0)),
                dz: *dir * (2.0 * half_length),
                d2z: Vec2::ZERO,
                d3z: Vec2::ZERO,
            },
            Shape::Spectral(sc) => sc.eval(alpha),
        }
    }

    pub fn position(&self, alpha: f64) -> Vec2 {
        self.point(alpha).z
    }

    pub fn frame(&self, alpha: f64) -> Frame {
        Frame::from_point(&self.point(alpha), self.length)
    }

    pub fn curvature(&self, alpha: f64) -> f64 {
        self.frame(alpha).kappa
    }

    /// Translated copy.
    pub fn translated(&self, by: Vec2) -> ParamCurve {
        let shape = match &self.shape {
            Shape::Circle {
                center,
                radius,
                phase,
            } => Shape::Circle {
                center: *center + by,
                radius: *radius,
                phase: *phase,
            },
            Shape::Segment {
                center,
                half_length,
                dir,
            } => Shape::Segment {
                center: *center + by,
                half_length: *half_length,
                dir: *dir,
            },
            Shape::Spectral(sc) => {
                let mut modes = sc.modes.clone();
                match modes.iter_mut().find(|(k, _)| *k == 0) {
                    Some((_, c)) => *c += Complex64::new(by.x, by.y),
                    None => modes.push((0, Complex64::new(by.x, by.y))),
                }
                Shape::Spectral(SpectralCurve { modes })
            }
        };
        ParamCurve {
            shape,
            ..self.clone()
        }
    }

    /// Copy rotated by `theta` about the origin; the parameter origin rotates
    /// with the curve.
    pub fn rotated(&self, theta: f64) -> ParamCurve {
        let shape = match &self.shape {
            Shape::Circle {
                center,
                radius,
                phase,
            } => Shape::Circle {
                center: center.rotate(theta),
                radius: *radius,
                phase: phase + theta,
            },
            Shape::Segment {
                center,
                half_length,
                dir,
            } => Shape::Segment {
                center: center.rotate(theta),
                half_length: *half_length,
                dir: dir.rotate(theta),
            },
            Shape::Spectral(sc) => {
                let rot = Complex64::from_polar(1.0, theta);
                Shape::Spectral(SpectralCurve {
                    modes: sc.modes.iter().map(|&(k, c)| (k, c * rot)).collect(),
                })
            }
        };
        ParamCurve {
            shape,
            ..self.clone()
        }
    }

    /// Equispaced parameter samples: `j/n` on closed curves, `j/(n-1)` on open ones.
    pub fn sample_params(&self, n: usize) -> Vec<f64> {
        match self.kind {
            CurveKind::Closed => (0..n).map(|j| j as f64 / n as f64).collect(),
            CurveKind::Open => (0..n).map(|j| j as f64 / (n - 1) as f64).collect(),
        }
    }

    /// Parameter distance, periodic on closed curves.
    pub fn param_distance(&self, a: f64, b: f64) -> f64 {
        let d = (a - b).abs();
        match self.kind {
            CurveKind::Closed => {
                let d = d.rem_euclid(1.0);
                d.min(1.0 - d)
            }
            CurveKind::Open => d,
        }
    }

    /// Largest `|kappa|` over `n` samples.
    pub fn max_abs_curvature(&self, n: usize) -> f64 {
        self.sample_params(n)
            .into_iter()
            .map(|a| self.curvature(a).abs())
            .fold(0.0, f64::max)
    }
}

impl Frame {
    pub fn from_point(p: &CurvePoint, length: f64) -> Frame {
        let s = p.dz / length;
        let n = s.perp();
        let kappa = p.d2z.dot(n) / (length * length);
        Frame { s, n, kappa }
    }
}

/// Sampled supremum of `|a - b| / |z(a) - z(b)|` with a local refinement of the
/// maximizing pair.
///
/// Samples are `j/n` (closed) or `j/(n-1)` (open); nested dyadic counts give
/// nested sample sets, so the sampled part never decreases under refinement.
pub fn arc_chord_constant(curve: &ParamCurve, samples: usize) -> f64 {
    let params = curve.sample_params(samples.max(2));
    let pts: Vec<Vec2> = params.iter().map(|&a| curve.position(a)).collect();
    let ratio = |a: f64, b: f64| {
        let d = curve.param_distance(a, b);
        let c = (curve.position(a) - curve.position(b)).norm();
        if d == 0.0 {
            0.0
        } else {
            d / c
        }
    };
    let mut best = (0.0, 0, 0);
    for i in 0..pts.len() {
        for j in i + 1..pts.len() {
            let d = curve.param_distance(params[i], params[j]);
            let r = d / (pts[i] - pts[j]).norm();
            if r > best.0 {
                best = (r, i, j);
            }
        }
    }
    let (mut value, i, j) = best;
    if value.is_finite() && value > 0.0 {
        // coordinate-wise golden refinement around the maximizing pair
        let h = 1.0 / samples as f64;
        let (mut a, mut b) = (params[i], params[j]);
        for _ in 0..3 {
            let (na, _) = golden_max(a - h, a + h, 60, |x| ratio(clamp_param(curve, x), b));
            a = clamp_param(curve, na);
            let (nb, _) = golden_max(b - h, b + h, 60, |x| ratio(a, clamp_param(curve, x)));
            b = clamp_param(curve, nb);
        }
        let refined = ratio(a, b);
        if refined.is_finite() && refined > value {
            value = refined;
        }
    }
    value
}

fn clamp_param(curve: &ParamCurve, a: f64) -> f64 {
    match curve.kind {
        CurveKind::Closed => a.rem_euclid(1.0),
        CurveKind::Open => a.clamp(0.0, 1.0),
    }
}

/// Minimum over curve pairs of the sampled minimum distance, with the
/// default disjointness floor.
pub fn pairwise_distance(curves: &[ParamCurve]) -> Result<f64> {
    pairwise_distance_with_floor(curves, DEFAULT_SAMPLES, DISJOINT_FLOOR)
}

pub fn pairwise_distance_with_floor(
    curves: &[ParamCurve],
    samples: usize,
    floor: f64,
) -> Result<f64> {
    if curves.len() < 2 {
        return Err(Error::Precondition(format!(
            "pairwise_distance needs at least 2 curves, got {}",
            curves.len()
        )));
    }
    let sampled: Vec<Vec<Vec2>> = curves
        .iter()
        .map(|c| {
            c.sample_params(samples)
                .into_iter()
                .map(|a| c.position(a))
                .collect()
        })
        .collect();
    let mut best = f64::INFINITY;
    for i in 0..curves.len() {
        for j in i + 1..curves.len() {
            let mut pair_best = (f64::INFINITY, 0.0, 0.0);
            let (pi, pj) = (
                curves[i].sample_params(samples),
                curves[j].sample_params(samples),
            );
            for (a, za) in pi.iter().zip(&sampled[i]) {
                for (b, zb) in pj.iter().zip(&sampled[j]) {
                    let d = (*za - *zb).norm();
                    if d < pair_best.0 {
                        pair_best = (d, *a, *b);
                    }
                }
            }
            let (mut d, mut a, mut b) = pair_best;
            let h = 1.0 / samples as f64;
            let dist = |a: f64, b: f64| (curves[i].position(a) - curves[j].position(b)).norm();
            for _ in 0..3 {
                let (na, _) =
                    golden_max(a - h, a + h, 60, |x| -dist(clamp_param(&curves[i], x), b));
                a = clamp_param(&curves[i], na);
                let (nb, _) =
                    golden_max(b - h, b + h, 60, |x| -dist(a, clamp_param(&curves[j], x)));
                b = clamp_param(&curves[j], nb);
            }
            d = d.min(dist(a, b));
            // crossing curves have distance 0, which coordinate-wise refinement
            // approaches only slowly
            if chains_cross(
                &sampled[i],
                curves[i].is_closed(),
                &sampled[j],
                curves[j].is_closed(),
            ) {
                d = 0.0;
            }
            best = best.min(d);
        }
    }
    if best < floor {
        return Err(Error::CurvesOverlap(best));
    }
    Ok(best)
}

fn chains_cross(p: &[Vec2], p_closed: bool, q: &[Vec2], q_closed: bool) -> bool {
    let edges = |v: &[Vec2], closed: bool| -> Vec<(Vec2, Vec2)> {
        let n = v.len();
        let m = if closed { n } else { n - 1 };
        (0..m).map(|k| (v[k], v[(k + 1) % n])).collect()
    };
    let (ep, eq) = (edges(p, p_closed), edges(q, q_closed));
    ep.iter().any(|&(a, b)| {
        eq.iter().any(|&(c, d)| {
            let side = |o: Vec2, u: Vec2, x: Vec2| (u - o).cross(x - o);
            side(a, b, c) * side(a, b, d) < 0.0 && side(c, d, a) * side(c, d, b) < 0.0
        })
    })
}

/// Area enclosed by a closed curve, `1/2 \oint x \times dx`.
pub fn enclosed_area(curve: &ParamCurve) -> Result<f64> {
    if !curve.is_closed() {
        return Err(Error::NotClosed("enclosed_area"));
    }
    Ok(match &curve.shape {
        Shape::Circle { radius, .. } => PI * radius * radius,
        Shape::Spectral(sc) => sc.area(),
        Shape::Segment { .. } => unreachable!("segments are open"),
    })
}

/// Polygonal shoelace area through `n` curve samples.
pub fn polygon_area(curve: &ParamCurve, n: usize) -> f64 {
    let pts: Vec<Vec2> = (0..n)
        .map(|j| curve.position(j as f64 / n as f64))
        .collect();
    0.5 * (0..n).map(|j| pts[j].cross(pts[(j + 1) % n])).sum::<f64>()
}
