//! Sweeps: certificates, layers, solves and reports for every `eps`.

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::birkhoff_rott::{
    stationarity_residual, BRResidualReport, ResidualSampling, SheetConfiguration,
};
use crate::elliptic::{
    assemble_and_solve, boundary_gradient_check, decompose_p, MappedPoissonProblem,
};
use crate::functional::{
    layer_velocities, positivity_decomposition, rigidity_verdict, FunctionalReport, Verdict,
    VerdictDetail,
};
use crate::geometry::enclosed_area;
use crate::harness::config::ScenarioSpec;
use crate::harness::fit::{fit_rate, FitOptions, RateFit};
use crate::layer::{
    build_layer, injectivity_certificate, linearity_defect_from, min_cross_layer_distance,
    InjectivityCertificate, LayerGrid, LinearityReport, CERTIFICATE_RANDOM_PAIRS,
};
use crate::quadrature::nan_max;
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverSummary {
    pub c_eps: Option<f64>,
    pub flux_residual: f64,
    pub solve_residual: f64,
    pub m_matrix_violation: f64,
    pub max_p: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecompositionSummary {
    pub beta: f64,
    pub q_over_eps2: f64,
    pub c_beta_defect: f64,
    pub grad_defect: f64,
    pub boundary_grad_q: f64,
}

/// `| |D|/eps - L int gamma |` against `3 eps L max gamma^2 max |kappa|`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AreaCheck {
    pub deviation: f64,
    pub bound: f64,
}

impl AreaCheck {
    /// Holds up to the round-off of the area quadrature itself.
    pub fn holds(&self, scale: f64) -> bool {
        self.deviation <= self.bound + 64.0 * f64::EPSILON * scale
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpsPoint {
    pub epsilon: f64,
    pub certificates: Vec<InjectivityCertificate>,
    pub report: FunctionalReport,
    pub solver: Vec<SolverSummary>,
    pub linearity: Vec<LinearityReport>,
    pub decomposition: Vec<Option<DecompositionSummary>>,
    pub area: Vec<AreaCheck>,
    /// `L int gamma` per curve, the scale of [`AreaCheck`].
    pub area_scale: Vec<f64>,
    pub seconds: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpsOutcome {
    pub epsilon: f64,
    pub point: Option<EpsPoint>,
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NamedFit {
    pub quantity: String,
    pub fit: Option<RateFit>,
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunArtifact {
    pub scenario: ScenarioSpec,
    pub sweep: Vec<EpsOutcome>,
    pub residuals: BRResidualReport,
    pub fits: Vec<NamedFit>,
    pub verdict: VerdictDetail,
    pub stationary: bool,
    pub seconds: f64,
}

impl RunArtifact {
    pub fn points(&self) -> impl Iterator<Item = &EpsPoint> {
        self.sweep.iter().filter_map(|o| o.point.as_ref())
    }

    pub fn reports(&self) -> Vec<FunctionalReport> {
        self.points().map(|p| p.report.clone()).collect()
    }

    pub fn fit(&self, quantity: &str) -> Option<RateFit> {
        self.fits
            .iter()
            .find(|f| f.quantity == quantity)
            .and_then(|f| f.fit)
    }
}

/// Everything computed at one `eps`.
pub fn run_eps(spec: &ScenarioSpec, cfg: &SheetConfiguration, eps: f64) -> Result<EpsPoint> {
    let t0 = Instant::now();
    let res = &spec.resolution;
    let certificates: Vec<InjectivityCertificate> = cfg
        .components()
        .iter()
        .map(|(c, g)| injectivity_certificate(c, g, eps, CERTIFICATE_RANDOM_PAIRS))
        .collect();
    let layers = cfg
        .components()
        .iter()
        .map(|(c, g)| {
            let na = if c.is_closed() {
                res.n_alpha_closed
            } else {
                res.n_alpha_open
            };
            build_layer(c, g, eps, na, res.n_eta)
        })
        .collect::<Result<Vec<LayerGrid>>>()?;
    if layers.len() > 1 {
        let d = min_cross_layer_distance(&layers);
        if !(d > 0.0) {
            return Err(Error::CurvesOverlap(d));
        }
    }
    let solutions = layers
        .iter()
        .zip(&certificates)
        .map(|(l, cert)| {
            let s = assemble_and_solve(&MappedPoissonProblem::new(l, cert)?)?;
            if s.solve_residual > spec.tolerances.solver {
                return Err(Error::Solver(format!(
                    "residual {:.3e} above tolerance",
                    s.solve_residual
                )));
            }
            Ok(s)
        })
        .collect::<Result<Vec<_>>>()?;
    let velocities = layer_velocities(&layers);
    let report = positivity_decomposition(cfg, &layers, &solutions, &velocities)?;
    let linearity = (0..layers.len())
        .map(|i| linearity_defect_from(cfg, i, &layers[i], &velocities[i]))
        .collect();
    let decomposition = layers
        .iter()
        .zip(&solutions)
        .map(|(l, s)| {
            if !l.is_closed() {
                return Ok(None);
            }
            let d = decompose_p(s, l, enclosed_area(l.curve())?)?;
            Ok(Some(DecompositionSummary {
                beta: d.beta,
                q_over_eps2: d.q_over_eps2,
                c_beta_defect: d.c_beta_defect,
                grad_defect: d.grad_defect,
                boundary_grad_q: boundary_gradient_check(&d, l),
            }))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut area = Vec::new();
    let mut area_scale = Vec::new();
    for (l, aoe) in layers.iter().zip(&report.area_over_eps) {
        let c = l.curve();
        let g = l.strength();
        let len = c.length();
        let lg = len * g.integral_pow(1.0);
        let gmax = g.range(4096).1;
        area.push(AreaCheck {
            deviation: (aoe - lg).abs(),
            bound: 3.0 * eps * len * gmax * gmax * c.max_abs_curvature(4096),
        });
        area_scale.push(lg);
    }
    let solver = solutions
        .iter()
        .map(|s| SolverSummary {
            c_eps: s.c_eps,
            flux_residual: s.flux_residual,
            solve_residual: s.solve_residual,
            m_matrix_violation: s.m_matrix_violation,
            max_p: s.values.iter().copied().fold(f64::NEG_INFINITY, nan_max),
        })
        .collect();
    Ok(EpsPoint {
        epsilon: eps,
        certificates,
        report,
        solver,
        linearity,
        decomposition,
        area,
        area_scale,
        seconds: t0.elapsed().as_secs_f64(),
    })
}

fn named_fit(quantity: &str, pairs: Vec<(f64, f64)>, options: FitOptions) -> NamedFit {
    match fit_rate(&pairs, options) {
        Ok(fit) => NamedFit {
            quantity: quantity.into(),
            fit: Some(fit),
            error: None,
        },
        Err(e) => NamedFit {
            quantity: quantity.into(),
            fit: None,
            error: Some(e.to_string()),
        },
    }
}

/// Whether the sheet residuals are below the scenario tolerances.
pub fn is_stationary(spec: &ScenarioSpec, residuals: &BRResidualReport) -> bool {
    residuals.curves.iter().all(|c| match c.vector {
        Some(v) => v <= spec.tolerances.residual_open,
        None => {
            c.br1 <= spec.tolerances.residual_closed && c.br2 <= spec.tolerances.residual_closed
        }
    })
}

/// Runs the whole sweep. Failing `eps` points are recorded and skipped.
pub fn run_scenario(spec: &ScenarioSpec) -> Result<RunArtifact> {
    let t0 = Instant::now();
    spec.validate()?;
    let cfg = spec.configuration()?;
    let residuals = stationarity_residual(
        &cfg,
        ResidualSampling {
            n_res: spec.resolution.n_res,
            ..ResidualSampling::default()
        },
    );
    let sweep: Vec<EpsOutcome> = spec
        .eps_sweep
        .par_iter()
        .map(|&eps| {
            let r = run_eps(spec, &cfg, eps);
            match &r {
                Ok(p) => log::info!(
                    "scenario={} eps={eps} I_eps={:.6e} I_tilde={:.6e} seconds={:.2}",
                    spec.name,
                    p.report.i_eps,
                    p.report.i_tilde,
                    p.seconds
                ),
                Err(e) => log::warn!("scenario={} eps={eps} error=\"{e}\"", spec.name),
            }
            match r {
                Ok(p) => EpsOutcome {
                    epsilon: eps,
                    point: Some(p),
                    error: None,
                },
                Err(e) => EpsOutcome {
                    epsilon: eps,
                    point: None,
                    error: Some(e.to_string()),
                },
            }
        })
        .collect();
    let points: Vec<&EpsPoint> = sweep.iter().filter_map(|o| o.point.as_ref()).collect();
    let series = |f: &dyn Fn(&EpsPoint) -> f64| -> Vec<(f64, f64)> {
        points.iter().map(|p| (p.epsilon, f(p))).collect()
    };
    let mut fits = vec![
        named_fit(
            "abs_I_eps",
            series(&|p| p.report.i_eps.abs()),
            FitOptions::default(),
        ),
        named_fit(
            "abs_I_eps_log_corrected",
            series(&|p| p.report.i_eps.abs()),
            FitOptions {
                log_correction: true,
            },
        ),
        named_fit(
            "defect_linearity",
            series(&|p| p.linearity.iter().map(|l| l.max_defect).fold(0.0, nan_max)),
            FitOptions::default(),
        ),
    ];
    if cfg.n_closed() > 0 {
        fits.push(named_fit(
            "boundary_grad_q",
            series(&|p| {
                p.decomposition
                    .iter()
                    .flatten()
                    .map(|d| d.boundary_grad_q)
                    .fold(0.0, nan_max)
            }),
            FitOptions::default(),
        ));
    }
    let stationary = is_stationary(spec, &residuals);
    let reports: Vec<FunctionalReport> = points.iter().map(|p| p.report.clone()).collect();
    let verdict = rigidity_verdict(&reports, spec.omega, stationary, spec.tolerances.floor)
        .unwrap_or(VerdictDetail {
            verdict: Verdict::Inconclusive,
            decay_exponent: None,
            floor: None,
            trend: None,
            floor_slope: None,
        });
    log::info!(
        "scenario={} verdict={:?} points={}",
        spec.name,
        verdict.verdict,
        points.len()
    );
    Ok(RunArtifact {
        scenario: spec.clone(),
        sweep,
        residuals,
        fits,
        verdict,
        stationary,
        seconds: t0.elapsed().as_secs_f64(),
    })
}
