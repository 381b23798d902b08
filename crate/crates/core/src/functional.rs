//! The first-variation functional and its lower-bound decomposition.
//!
//! With `u = x + grad p` on the layers and `grad(omega * N) = -v^perp`,
//!
//! ```text
//! I  = eps^{-1} sum_i int_{D_i} u . (-v^perp - Omega x)
//! I~ = eps^{-1} sum_i int_{D_i} u . (-v^perp)
//! J  = eps^{-1} sum_i int_{D_i} u . x
//! ```
//!
//! so `I = I~ - Omega J`. Both sides are assembled from the same nodal
//! fields with the solver's own quadrature weights.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::birkhoff_rott::SheetConfiguration;
use crate::elliptic::{talenti_check, PoissonSolution};
use crate::geometry::{enclosed_area, ParamCurve};
use crate::harness::fit::{fit_rate, spearman, FitOptions};
use crate::layer::{layer_area, layer_velocity_at_nodes, LayerGrid, SelfCellPolicy};
use crate::quadrature::nan_min;
use crate::{Error, Result, Vec2};

/// Values with modulus at or below this are read as exact zeros by the verdict.
pub const ZERO_TOL: f64 = 1e-10;

/// Minimum `floor` for an obstruction.
pub const FLOOR_TOL: f64 = 1e-3;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FunctionalParts {
    pub i_eps: f64,
    pub i_tilde: f64,
    pub j_eps: f64,
    /// `eps^{-1} int x . (-v^perp)`, the swap-symmetric part of `I~`.
    pub i1_direct: f64,
    /// `|D|^2 / (4 pi eps^2)`.
    pub i1_area: f64,
    /// `|I - (I~ - Omega J)|`.
    pub consistency: f64,
}

/// `v^eps` at the nodes of every layer.
pub fn layer_velocities(layers: &[LayerGrid]) -> Vec<Vec<Vec2>> {
    (0..layers.len())
        .map(|i| layer_velocity_at_nodes(layers, i, SelfCellPolicy::ContourAdaptive))
        .collect()
}

fn check_inputs(
    cfg: &SheetConfiguration,
    layers: &[LayerGrid],
    solutions: &[PoissonSolution],
    velocities: &[Vec<Vec2>],
) -> Result<()> {
    if layers.len() != cfg.len() || solutions.len() != cfg.len() || velocities.len() != cfg.len() {
        return Err(Error::Precondition(format!(
            "{} curves but {} layers, {} solutions, {} velocity fields",
            cfg.len(),
            layers.len(),
            solutions.len(),
            velocities.len()
        )));
    }
    for (i, l) in layers.iter().enumerate() {
        let n = l.positions.len();
        if solutions[i].values.len() != n
            || solutions[i].gradient.len() != n
            || velocities[i].len() != n
        {
            return Err(Error::Precondition(format!(
                "layer {i}: missing or mis-sized solution"
            )));
        }
    }
    Ok(())
}

/// `(I, I~, J)` with `v^eps` computed here.
#[allow(non_snake_case)]
pub fn compute_I(
    cfg: &SheetConfiguration,
    layers: &[LayerGrid],
    solutions: &[PoissonSolution],
) -> Result<FunctionalParts> {
    let v = layer_velocities(layers);
    compute_I_from(cfg, layers, solutions, &v)
}

/// `(I, I~, J)` from precomputed nodal velocities.
#[allow(non_snake_case)]
pub fn compute_I_from(
    cfg: &SheetConfiguration,
    layers: &[LayerGrid],
    solutions: &[PoissonSolution],
    velocities: &[Vec<Vec2>],
) -> Result<FunctionalParts> {
    check_inputs(cfg, layers, solutions, velocities)?;
    let omega = cfg.omega();
    let eps = layers
        .first()
        .map(|l| l.epsilon())
        .ok_or(Error::Precondition("no layers".into()))?;
    let (mut i_eps, mut i_tilde, mut j_eps, mut i1, mut area) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for ((l, s), v) in layers.iter().zip(solutions).zip(velocities) {
        let at = |j: usize, k: usize| {
            let n = l.idx(j, k);
            let x = l.positions[n];
            (x, x + s.gradient[n], -v[n].perp())
        };
        i_eps += l.integrate(|j, k| {
            let (x, u, w) = at(j, k);
            u.dot(w - x * omega)
        });
        i_tilde += l.integrate(|j, k| {
            let (_, u, w) = at(j, k);
            u.dot(w)
        });
        j_eps += l.integrate(|j, k| {
            let (x, u, _) = at(j, k);
            u.dot(x)
        });
        i1 += l.integrate(|j, k| {
            let (x, _, w) = at(j, k);
            x.dot(w)
        });
        area += layer_area(l);
    }
    let (i_eps, i_tilde, j_eps) = (i_eps / eps, i_tilde / eps, j_eps / eps);
    Ok(FunctionalParts {
        i_eps,
        i_tilde,
        j_eps,
        i1_direct: i1 / eps,
        i1_area: area * area / (4.0 * PI * eps * eps),
        consistency: (i_eps - (i_tilde - omega * j_eps)).abs(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairTerm {
    pub i: usize,
    pub j: usize,
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FunctionalReport {
    pub epsilon: f64,
    pub i_eps: f64,
    pub i_tilde: f64,
    pub j_eps: f64,
    pub i1_direct: f64,
    pub i1_area: f64,
    pub consistency: f64,
    /// Talenti deficits `A_i`.
    pub a: Vec<f64>,
    /// `B_ij` for `i < j`; the chain sums both orders.
    pub b: Vec<PairTerm>,
    /// `nesting[i][j]`: curve `j` lies inside curve `i`.
    pub nesting: Vec<Vec<bool>>,
    pub cs_gap: Vec<Option<f64>>,
    pub iso_gap: Vec<Option<f64>>,
    /// `(L^2/4pi)(int g / int g^{-1})(int g^{-1} int g - 4 pi |U| / L^2)`.
    pub surrogate_bound: Vec<Option<f64>>,
    /// Talenti integral gap per curve (unscaled).
    pub int_gap: Vec<f64>,
    pub sup_gap: Vec<f64>,
    /// `|D_i| / eps`.
    pub area_over_eps: Vec<f64>,
}

impl FunctionalReport {
    pub fn sum_a(&self) -> f64 {
        self.a.iter().sum()
    }

    /// `sum_{i != j} B_ij` over ordered pairs.
    pub fn sum_b(&self) -> f64 {
        2.0 * self.b.iter().map(|t| t.value).sum::<f64>()
    }

    /// `I~ - (sum A + sum B)`; nonnegative up to quadrature error.
    pub fn chain_gap(&self) -> f64 {
        self.i_tilde - self.sum_a() - self.sum_b()
    }
}

/// Winding number of a closed curve about `x`, from a fine polygon.
pub fn winding_number(curve: &ParamCurve, x: Vec2, n: usize) -> i32 {
    let pts: Vec<Vec2> = curve
        .sample_params(n)
        .into_iter()
        .map(|a| curve.position(a) - x)
        .collect();
    let total: f64 = pts
        .iter()
        .zip(pts.iter().cycle().skip(1))
        .map(|(a, b)| a.cross(*b).atan2(a.dot(*b)))
        .sum();
    (total / (2.0 * PI)).round() as i32
}

/// `nesting[i][j]` is true when `Gamma_j` lies inside the closed curve `Gamma_i`,
/// decided by majority over eight sample points of `Gamma_j`.
pub fn nesting_relation(curves: &[ParamCurve]) -> Vec<Vec<bool>> {
    let n = curves.len();
    let mut rel = vec![vec![false; n]; n];
    for i in 0..n {
        if !curves[i].is_closed() {
            continue;
        }
        for j in (0..n).filter(|&j| j != i) {
            let inside = (0..8)
                .map(|m| {
                    let a = if curves[j].is_closed() {
                        m as f64 / 8.0
                    } else {
                        (m as f64 + 0.5) / 8.0
                    };
                    curves[j].position(a)
                })
                .filter(|&x| winding_number(&curves[i], x, 1024) != 0)
                .count();
            rel[i][j] = inside > 4;
        }
    }
    rel
}

/// Talenti deficits, pair terms, nesting and the analytic surrogate.
pub fn positivity_decomposition(
    cfg: &SheetConfiguration,
    layers: &[LayerGrid],
    solutions: &[PoissonSolution],
    velocities: &[Vec<Vec2>],
) -> Result<FunctionalReport> {
    let parts = compute_I_from(cfg, layers, solutions, velocities)?;
    let eps = layers[0].epsilon();
    let curves: Vec<ParamCurve> = cfg.components().iter().map(|(c, _)| c.clone()).collect();
    let nesting = nesting_relation(&curves);
    let gaps: Vec<_> = layers
        .iter()
        .zip(solutions)
        .map(|(l, s)| talenti_check(s, l))
        .collect();
    let a = gaps.iter().map(|g| g.int_gap / (eps * eps)).collect();
    let mut b = Vec::new();
    for i in 0..layers.len() {
        for j in i + 1..layers.len() {
            let ind = 1.0 - f64::from(u8::from(nesting[i][j])) - f64::from(u8::from(nesting[j][i]));
            b.push(PairTerm {
                i,
                j,
                value: ind * gaps[i].area * gaps[j].area / (4.0 * PI * eps * eps),
            });
        }
    }
    let mut cs_gap = Vec::new();
    let mut iso_gap = Vec::new();
    let mut surrogate = Vec::new();
    for (c, g) in cfg.components() {
        if c.is_closed() {
            let (gi, ginv) = (g.integral_pow(1.0), g.integral_pow(-1.0));
            let l = c.length();
            let iso = 4.0 * PI * enclosed_area(c)? / (l * l);
            cs_gap.push(Some(gi * ginv - 1.0));
            iso_gap.push(Some(1.0 - iso));
            surrogate.push(Some(l * l / (4.0 * PI) * (gi / ginv) * (ginv * gi - iso)));
        } else {
            cs_gap.push(None);
            iso_gap.push(None);
            surrogate.push(None);
        }
    }
    Ok(FunctionalReport {
        epsilon: eps,
        i_eps: parts.i_eps,
        i_tilde: parts.i_tilde,
        j_eps: parts.j_eps,
        i1_direct: parts.i1_direct,
        i1_area: parts.i1_area,
        consistency: parts.consistency,
        a,
        b,
        nesting,
        cs_gap,
        iso_gap,
        surrogate_bound: surrogate,
        int_gap: gaps.iter().map(|g| g.int_gap).collect(),
        sup_gap: gaps.iter().map(|g| g.sup_gap).collect(),
        area_over_eps: gaps.iter().map(|g| g.area / eps).collect(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Verdict {
    EquilibriumConsistent,
    Obstructed,
    Inconclusive,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerdictDetail {
    pub verdict: Verdict,
    /// Fitted decay exponent of `|I|` (`+inf` when every value is zero).
    pub decay_exponent: Option<f64>,
    /// Minimum of the monitored quantity (`I~` for `Omega = 0`, `I` for `Omega < 0`).
    pub floor: Option<f64>,
    /// Spearman correlation of the monitored quantity against `eps`.
    pub trend: Option<f64>,
    /// Power-law slope of the monitored quantity against `eps`.
    pub floor_slope: Option<f64>,
}

/// Smallest power-law slope read as decay, both for floors and for `|I|`.
pub const FLOOR_DECAY_SLOPE: f64 = 0.1;

/// Classifies a sweep. `stationary` says whether the sheet residuals are small;
/// `floor_tol` is the smallest floor read as an obstruction.
pub fn rigidity_verdict(
    reports: &[FunctionalReport],
    omega: f64,
    stationary: bool,
    floor_tol: f64,
) -> Result<VerdictDetail> {
    if reports.len() < 3 {
        return Err(Error::Precondition(format!(
            "verdict needs >= 3 sweep points, got {}",
            reports.len()
        )));
    }
    let mut rs: Vec<&FunctionalReport> = reports.iter().collect();
    rs.sort_by(|a, b| b.epsilon.total_cmp(&a.epsilon));
    let eps: Vec<f64> = rs.iter().map(|r| r.epsilon).collect();

    let mut detail = VerdictDetail {
        verdict: Verdict::Inconclusive,
        decay_exponent: None,
        floor: None,
        trend: None,
        floor_slope: None,
    };

    if omega <= 0.0 {
        let vals: Vec<f64> = rs
            .iter()
            .map(|r| if omega == 0.0 { r.i_tilde } else { r.i_eps })
            .collect();
        let floor = vals.iter().copied().fold(f64::INFINITY, nan_min);
        let trend = spearman(&eps, &vals);
        detail.floor = Some(floor);
        detail.trend = Some(trend);
        if floor > floor_tol {
            let pairs: Vec<(f64, f64)> = eps.iter().copied().zip(vals.iter().copied()).collect();
            let slope = fit_rate(&pairs, FitOptions::default())?.exponent;
            detail.floor_slope = Some(slope);
            // a positive correlation alone also flags O(eps) corrections to a
            // nonzero limit; require an actual power-law decay as well
            let decaying = trend > 0.0 && slope > FLOOR_DECAY_SLOPE;
            if !decaying {
                detail.verdict = Verdict::Obstructed;
                return Ok(detail);
            }
        }
    }

    let pairs: Vec<(f64, f64)> = rs
        .iter()
        .map(|r| {
            (
                r.epsilon,
                if r.i_eps.abs() <= ZERO_TOL {
                    0.0
                } else {
                    r.i_eps.abs()
                },
            )
        })
        .collect();
    let exponent = fit_rate(&pairs, FitOptions::default())?.exponent;
    detail.decay_exponent = Some(exponent);
    // a barely positive slope is an O(eps) correction to a nonzero limit
    if exponent > FLOOR_DECAY_SLOPE && stationary {
        detail.verdict = Verdict::EquilibriumConsistent;
    }
    Ok(detail)
}
