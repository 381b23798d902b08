//! Scenario files (TOML).
//!
//! ```toml
//! name = "two_far_circles"
//! omega = 0.0
//! eps_sweep = [0.04, 0.02, 0.01, 0.005]
//!
//! [resolution]
//! n_alpha_closed = 512
//! n_eta = 16
//!
//! [[curves]]
//! kind = "circle"
//! center = [0.0, 0.0]
//! radius = 1.0
//!
//! [[strengths]]
//! kind = "constant"
//! gamma0 = 1.0
//! ```
//!
//! Curves: `circle {center, radius}`, `segment {a}` (half-length),
//! `fourier {R, modes = [[k, amplitude], ...]}`. Strengths: `constant {gamma0}`,
//! `fourier {mean, cos, sin}`, `semicircle {omega}` (the rotating-segment
//! law for angular velocity `omega`) or `semicircle {amplitude}`. Any strength
//! may carry `regularity = "closed_c2" | "open_holder"` and `holder_exponent`.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::birkhoff_rott::{
    Regularity, SheetConfiguration, SheetQuadrature, StrengthProfile, DEFAULT_NODES_CLOSED,
    DEFAULT_NODES_OPEN, DEFAULT_N_RES,
};
use crate::geometry::{make_circle, make_fourier_curve, make_segment, ParamCurve};
use crate::layer::{DEFAULT_N_ALPHA_CLOSED, DEFAULT_N_ALPHA_OPEN, DEFAULT_N_ETA};
use crate::{Error, Result, Vec2};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum CurveSpec {
    Circle {
        center: [f64; 2],
        radius: f64,
    },
    Segment {
        a: f64,
    },
    Fourier {
        #[serde(rename = "R")]
        base_radius: f64,
        #[serde(default)]
        modes: Vec<(u32, f64)>,
    },
}

impl CurveSpec {
    pub fn build(&self) -> Result<ParamCurve> {
        match self {
            CurveSpec::Circle { center, radius } => make_circle(Vec2::from(*center), *radius),
            CurveSpec::Segment { a } => make_segment(*a),
            CurveSpec::Fourier { base_radius, modes } => make_fourier_curve(*base_radius, modes),
        }
    }

    fn is_closed(&self) -> bool {
        !matches!(self, CurveSpec::Segment { .. })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StrengthLawSpec {
    Constant {
        gamma0: f64,
    },
    Fourier {
        mean: f64,
        #[serde(default)]
        cos: Vec<(u32, f64)>,
        #[serde(default)]
        sin: Vec<(u32, f64)>,
    },
    Semicircle {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        omega: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        amplitude: Option<f64>,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegularityTag {
    ClosedC2,
    OpenHolder,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StrengthSpec {
    #[serde(flatten)]
    pub law: StrengthLawSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub regularity: Option<RegularityTag>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub holder_exponent: Option<f64>,
}

impl StrengthSpec {
    /// Builds the profile on `curve` (the semicircle law needs the half-length).
    pub fn build(&self, curve: &CurveSpec) -> Result<StrengthProfile> {
        let profile = match &self.law {
            StrengthLawSpec::Constant { gamma0 } => StrengthProfile::constant(*gamma0)?,
            StrengthLawSpec::Fourier { mean, cos, sin } => {
                StrengthProfile::fourier(*mean, cos.clone(), sin.clone())?
            }
            StrengthLawSpec::Semicircle { omega, amplitude } => {
                let CurveSpec::Segment { a } = curve else {
                    return Err(Error::Config(
                        "semicircle strength requires a segment".into(),
                    ));
                };
                let amp = match (omega, amplitude) {
                    // gamma = 2 Omega sqrt(a^2 - x^2) makes BR = Omega z^perp
                    (Some(w), None) => 2.0 * w,
                    (None, Some(amp)) => *amp,
                    _ => {
                        return Err(Error::Config(
                            "semicircle strength needs exactly one of omega, amplitude".into(),
                        ))
                    }
                };
                StrengthProfile::semicircle(amp, *a)?
            }
        };
        Ok(match self.regularity {
            None => profile,
            Some(RegularityTag::ClosedC2) => profile.with_regularity(Regularity::ClosedC2),
            Some(RegularityTag::OpenHolder) => {
                profile.with_regularity(Regularity::OpenHolder(self.holder_exponent.unwrap_or(0.5)))
            }
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Resolution {
    pub n_alpha_closed: usize,
    pub n_alpha_open: usize,
    pub n_eta: usize,
    pub n_res: usize,
    pub br_nodes_closed: usize,
    pub br_nodes_open: usize,
}

impl Default for Resolution {
    fn default() -> Self {
        Resolution {
            n_alpha_closed: DEFAULT_N_ALPHA_CLOSED,
            n_alpha_open: DEFAULT_N_ALPHA_OPEN,
            n_eta: DEFAULT_N_ETA,
            n_res: DEFAULT_N_RES,
            br_nodes_closed: DEFAULT_NODES_CLOSED,
            br_nodes_open: DEFAULT_NODES_OPEN,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// Stationarity threshold for closed curves (`BR1`, `BR2`).
    pub residual_closed: f64,
    /// Stationarity threshold for open curves (vector residual).
    pub residual_open: f64,
    /// Verdict floor.
    pub floor: f64,
    /// Max-norm residual allowed for the linear solve.
    pub solver: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            residual_closed: 1e-6,
            residual_open: 1e-3,
            floor: crate::functional::FLOOR_TOL,
            solver: 1e-8,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSpec {
    pub name: String,
    #[serde(default)]
    pub omega: f64,
    pub eps_sweep: Vec<f64>,
    #[serde(default)]
    pub resolution: Resolution,
    #[serde(default)]
    pub tolerances: Tolerances,
    pub curves: Vec<CurveSpec>,
    pub strengths: Vec<StrengthSpec>,
}

impl ScenarioSpec {
    pub fn from_toml(text: &str) -> Result<Self> {
        let spec: ScenarioSpec = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    /// Enforces the invariants that do not need any numerics.
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(format!("scenario `{}`: {msg}", self.name)));
        if self.curves.is_empty() {
            return bad("no curves".into());
        }
        if self.curves.len() != self.strengths.len() {
            return bad(format!(
                "curves and strengths differ in length ({} vs {})",
                self.curves.len(),
                self.strengths.len()
            ));
        }
        if self.eps_sweep.is_empty() {
            return bad("eps_sweep is empty".into());
        }
        if let Some(e) = self
            .eps_sweep
            .iter()
            .find(|e| !(e.is_finite() && **e > 0.0))
        {
            return bad(format!("eps_sweep entry {e} is not positive"));
        }
        if self.eps_sweep.windows(2).any(|w| w[1] >= w[0]) {
            return bad("eps_sweep must be strictly decreasing".into());
        }
        for (i, (c, g)) in self.curves.iter().zip(&self.strengths).enumerate() {
            match (c.is_closed(), g.regularity) {
                (false, Some(RegularityTag::ClosedC2)) => {
                    return bad(format!(
                        "curve {i}: segment cannot carry a closed_c2 strength"
                    ))
                }
                (true, Some(RegularityTag::OpenHolder)) => {
                    return bad(format!(
                        "curve {i}: closed curve cannot carry an open_holder strength"
                    ))
                }
                _ => {}
            }
        }
        let r = &self.resolution;
        if r.n_eta < 8 || !r.n_eta.is_multiple_of(2) {
            return bad(format!("n_eta = {} must be even and at least 8", r.n_eta));
        }
        if r.n_alpha_closed < 16 || r.n_alpha_open < 16 || r.n_res < 2 {
            return bad("resolution too coarse".into());
        }
        Ok(())
    }

    /// The sheet described by the spec, with its quadrature resolution.
    pub fn configuration(&self) -> Result<SheetConfiguration> {
        let components = self
            .curves
            .iter()
            .zip(&self.strengths)
            .map(|(c, g)| Ok((c.build()?, g.build(c)?)))
            .collect::<Result<Vec<_>>>()?;
        Ok(
            SheetConfiguration::new(components, self.omega)?.with_quadrature(SheetQuadrature {
                nodes_closed: self.resolution.br_nodes_closed,
                nodes_open: self.resolution.br_nodes_open,
            }),
        )
    }
}

/// Reads, parses and validates a scenario file, including that the sheet can
/// be built (strength tags, disjointness).
pub fn load_scenario(path: impl AsRef<Path>) -> Result<ScenarioSpec> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let spec = ScenarioSpec::from_toml(&text).map_err(|e| match e {
        Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
        other => other,
    })?;
    spec.configuration()?;
    Ok(spec)
}

/// Source of every bundled scenario, keyed by name.
pub const BUNDLED: [(&str, &str); 9] = [
    (
        "concentric_one_circle",
        include_str!("../../scenarios/concentric_one_circle.toml"),
    ),
    (
        "concentric_two_circles",
        include_str!("../../scenarios/concentric_two_circles.toml"),
    ),
    (
        "concentric_rotating",
        include_str!("../../scenarios/concentric_rotating.toml"),
    ),
    (
        "offcenter_circle_rotating",
        include_str!("../../scenarios/offcenter_circle_rotating.toml"),
    ),
    (
        "nonconcentric_nested",
        include_str!("../../scenarios/nonconcentric_nested.toml"),
    ),
    (
        "fourier_noncircle",
        include_str!("../../scenarios/fourier_noncircle.toml"),
    ),
    (
        "nonconstant_gamma_circle",
        include_str!("../../scenarios/nonconstant_gamma_circle.toml"),
    ),
    (
        "rotating_segment",
        include_str!("../../scenarios/rotating_segment.toml"),
    ),
    (
        "two_far_circles",
        include_str!("../../scenarios/two_far_circles.toml"),
    ),
];

pub fn bundled_scenario(name: &str) -> Result<ScenarioSpec> {
    let (_, text) = BUNDLED
        .iter()
        .find(|(n, _)| *n == name)
        .ok_or_else(|| Error::Config(format!("no bundled scenario named `{name}`")))?;
    ScenarioSpec::from_toml(text)
}

pub fn bundled_scenarios() -> Result<Vec<ScenarioSpec>> {
    BUNDLED
        .iter()
        .map(|(_, t)| ScenarioSpec::from_toml(t))
        .collect()
}
