//! `Delta p = -2` on a layer, solved on the `(alpha, eta)` rectangle.
//!
//! In mapped coordinates the Laplacian reads `J^{-1} div(A grad p)` with
//! `A = J g^{-1}`. A vertex-centred finite-volume scheme with the 9-point
//! stencil discretizes `div(A grad p) = J f`: face coefficients come straight
//! from the analytic map at face midpoints and the control-volume integral of
//! `J` is exact in `eta` (the Jacobian is linear in `eta`).
//!
//! Closed curves carry `p = 0` at `eta = -1` and `p = c` at `eta = 0`, where
//! `c` makes the flux through the curve equal `2 |U|`. Writing
//! `p = p_part + c p_harm` fixes `c` from two solves with one factorization.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::geometry::enclosed_area;
use crate::layer::{layer_area, InjectivityCertificate, LayerGrid};
use crate::quadrature::nan_max;
use crate::{Error, Result, Vec2};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Boundary {
    /// `p = 0` on the whole boundary.
    OpenCurve,
    /// `p = 0` on `eta = -1`, `p = c` on `eta = 0`, flux fixed by the area.
    ClosedCurve { enclosed_area: f64 },
}

/// A layer cleared by its injectivity certificate, with its boundary data.
#[derive(Clone, Debug)]
pub struct MappedPoissonProblem<'a> {
    pub layer: &'a LayerGrid,
    pub boundary: Boundary,
}

impl<'a> MappedPoissonProblem<'a> {
    pub fn new(layer: &'a LayerGrid, certificate: &InjectivityCertificate) -> Result<Self> {
        if (certificate.epsilon - layer.epsilon()).abs() > 1e-15 * layer.epsilon() {
            return Err(Error::Precondition(format!(
                "certificate issued for eps = {} but layer has eps = {}",
                certificate.epsilon,
                layer.epsilon()
            )));
        }
        certificate.require()?;
        let boundary = if layer.is_closed() {
            Boundary::ClosedCurve {
                enclosed_area: enclosed_area(layer.curve())?,
            }
        } else {
            Boundary::OpenCurve
        };
        Ok(MappedPoissonProblem { layer, boundary })
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PoissonSolution {
    /// Nodal values in layer order (`j * n_eta + k`).
    pub values: Vec<f64>,
    pub c_eps: Option<f64>,
    pub gradient: Vec<Vec2>,
    /// `|flux through the curve - 2 |U||` (closed curves).
    pub flux_residual: f64,
    /// Max-norm residual of the discrete equations.
    pub solve_residual: f64,
    /// Largest wrong-signed off-diagonal over the diagonal modulus; zero for an M-matrix.
    pub m_matrix_violation: f64,
}

/// Stencils and right-hand sides of one alpha column.
type ColumnRows = (Vec<[[f64; 3]; 3]>, Vec<f64>);

/// Discretized `div(A grad .)` for one layer, with Dirichlet rows eliminated.
struct Operator {
    /// Unknown columns (layer `j` indices).
    cols: Vec<usize>,
    periodic: bool,
    /// Interior `eta` rows per column.
    m: usize,
    /// Stencils `c[dj + 1][dk + 1]` per unknown, column-major over `cols`.
    stencil: Vec<[[f64; 3]; 3]>,
    /// Control-volume integral of `J` per unknown.
    volume: Vec<f64>,
}

impl Operator {
    fn new(layer: &LayerGrid) -> Result<Self> {
        let na = layer.n_alpha();
        let ne = layer.n_eta();
        let periodic = layer.is_closed();
        let cols: Vec<usize> = if periodic {
            (0..na).collect()
        } else {
            (1..na - 1).collect()
        };
        let m = ne - 2;
        let h = 1.0 / (ne - 1) as f64;
        let alpha_at = |j: isize| -> f64 {
            if periodic {
                let n = na as isize;
                let q = j.div_euclid(n);
                layer.alpha[j.rem_euclid(n) as usize] + q as f64
            } else {
                layer.alpha[j as usize]
            }
        };
        let per_col: Vec<Result<ColumnRows>> = cols
            .par_iter()
            .map(|&j| {
                let ji = j as isize;
                let (am, a0, ap) = (alpha_at(ji - 1), alpha_at(ji), alpha_at(ji + 1));
                let (dp, dm) = (ap - a0, a0 - am);
                let w = 0.5 * (dp + dm);
                let mut st = Vec::with_capacity(m);
                let mut vol = Vec::with_capacity(m);
                for k in 1..ne - 1 {
                    let e = layer.eta[k];
                    let mut c = [[0.0; 3]; 3];
                    // eta faces: +1 above, -1 below
                    for (side, ef) in [(1.0, e + 0.5 * h), (-1.0, e - 0.5 * h)] {
                        let mp = layer.map.at(a0, ef);
                        let (_, aae, aee) = conductivity(&mp, layer.epsilon())?;
                        let kk = if side > 0.0 { 2 } else { 0 };
                        // side * F with F = w [aee (p_up - p_dn)/h + aae D_a]
                        let s = side * w;
                        let (up, dn) = if side > 0.0 { (kk, 1) } else { (1, kk) };
                        c[1][up] += s * aee / h;
                        c[1][dn] -= s * aee / h;
                        let g = s * aae / (2.0 * (dp + dm));
                        for r in [up, dn] {
                            c[2][r] += g;
                            c[0][r] -= g;
                        }
                    }
                    // alpha faces
                    for (side, af, da) in [(1.0, 0.5 * (a0 + ap), dp), (-1.0, 0.5 * (a0 + am), dm)]
                    {
                        let mp = layer.map.at(af, e);
                        let (aaa, aae, _) = conductivity(&mp, layer.epsilon())?;
                        let jj = if side > 0.0 { 2 } else { 0 };
                        let (rt, lt) = if side > 0.0 { (jj, 1) } else { (1, jj) };
                        let s = side * h;
                        c[rt][1] += s * aaa / da;
                        c[lt][1] -= s * aaa / da;
                        let g = s * aae / (4.0 * h);
                        for col in [rt, lt] {
                            c[col][2] += g;
                            c[col][0] -= g;
                        }
                    }
                    st.push(c);
                    // J is linear in eta, so the midpoint value integrates it exactly
                    vol.push(w * h * layer.map.at(a0, e).jacobian);
                }
                Ok((st, vol))
            })
            .collect();
        let mut stencil = Vec::with_capacity(cols.len() * m);
        let mut volume = Vec::with_capacity(cols.len() * m);
        for r in per_col {
            let (s, v) = r?;
            stencil.extend(s);
            volume.extend(v);
        }
        Ok(Operator {
            cols,
            periodic,
            m,
            stencil,
            volume,
        })
    }

    fn m_matrix_violation(&self) -> f64 {
        self.stencil
            .iter()
            .map(|c| {
                let diag = c[1][1].abs();
                let mut worst: f64 = 0.0;
                for (a, row) in c.iter().enumerate() {
                    for (b, v) in row.iter().enumerate() {
                        if (a, b) != (1, 1) {
                            worst = worst.max(-v);
                        }
                    }
                }
                // -div(A grad) is an M-matrix when every off-diagonal here is >= 0
                worst / diag
            })
            .fold(0.0, nan_max)
    }
}

fn conductivity(mp: &crate::layer::MapPoint, eps: f64) -> Result<(f64, f64, f64)> {
    if !(mp.jacobian > 0.0) {
        return Err(Error::DegenerateLayer {
            eps,
            min_jacobian: mp.jacobian,
        });
    }
    let (aaa, aae, aee) = mp.conductivity();
    if !(aaa > 0.0 && aee > 0.0) {
        return Err(Error::Solver(format!(
            "metric tensor not positive definite: ({aaa}, {aae}, {aee})"
        )));
    }
    Ok((aaa, aae, aee))
}

/// Block tridiagonal system (cyclic when periodic) with dense `m x m` blocks.
struct BlockSystem {
    lower: Vec<DMatrix<f64>>,
    diag: Vec<DMatrix<f64>>,
    upper: Vec<DMatrix<f64>>,
    periodic: bool,
}

impl BlockSystem {
    fn from_operator(op: &Operator) -> Self {
        let (n, m) = (op.cols.len(), op.m);
        let mut lower = vec![DMatrix::zeros(m, m); n];
        let mut diag = vec![DMatrix::zeros(m, m); n];
        let mut upper = vec![DMatrix::zeros(m, m); n];
        for b in 0..n {
            for r in 0..m {
                let c = &op.stencil[b * m + r];
                for (dk, ((lo, di), up)) in c[0].iter().zip(&c[1]).zip(&c[2]).enumerate() {
                    let rr = r as isize + dk as isize - 1;
                    if rr < 0 || rr >= m as isize {
                        continue;
                    }
                    let rr = rr as usize;
                    lower[b][(r, rr)] += lo;
                    diag[b][(r, rr)] += di;
                    upper[b][(r, rr)] += up;
                }
            }
        }
        BlockSystem {
            lower,
            diag,
            upper,
            periodic: op.periodic,
        }
    }

    /// Block Thomas elimination on blocks `0..n`, ignoring wrap-around.
    fn thomas(&self, n: usize, rhs: &[DMatrix<f64>]) -> Result<Vec<DMatrix<f64>>> {
        let mut cp: Vec<DMatrix<f64>> = Vec::with_capacity(n);
        let mut dp: Vec<DMatrix<f64>> = Vec::with_capacity(n);
        for j in 0..n {
            let (s, b) = if j == 0 {
                (self.diag[0].clone(), rhs[0].clone())
            } else {
                (
                    &self.diag[j] - &self.lower[j] * &cp[j - 1],
                    &rhs[j] - &self.lower[j] * &dp[j - 1],
                )
            };
            let lu = s.lu();
            let c = if j + 1 < n {
                lu.solve(&self.upper[j])
                    .ok_or_else(|| Error::Solver(format!("singular pivot block {j}")))?
            } else {
                DMatrix::zeros(0, 0)
            };
            let d = lu
                .solve(&b)
                .ok_or_else(|| Error::Solver(format!("singular pivot block {j}")))?;
            cp.push(c);
            dp.push(d);
        }
        let mut x = dp;
        for j in (0..n.saturating_sub(1)).rev() {
            let corr = &cp[j] * &x[j + 1];
            x[j] -= corr;
        }
        Ok(x)
    }

    fn solve(&self, rhs: &[DMatrix<f64>]) -> Result<Vec<DMatrix<f64>>> {
        let n = self.diag.len();
        if !self.periodic {
            return self.thomas(n, rhs);
        }
        if n < 3 {
            return Err(Error::Solver(
                "periodic block system needs at least 3 columns".into(),
            ));
        }
        let m = self.diag[0].nrows();
        let r = rhs[0].ncols();
        // eliminate x_{n-1}: blocks 0..n-1 see it through L_0 and U_{n-2}
        let mut ext: Vec<DMatrix<f64>> = (0..n - 1)
            .map(|j| {
                let mut e = DMatrix::zeros(m, r + m);
                e.view_mut((0, 0), (m, r)).copy_from(&rhs[j]);
                e
            })
            .collect();
        let mut couple0 = self.lower[0].clone();
        if n - 2 == 0 {
            couple0 += &self.upper[0];
        }
        ext[0].view_mut((0, r), (m, m)).copy_from(&couple0);
        if n - 2 > 0 {
            ext[n - 2]
                .view_mut((0, r), (m, m))
                .copy_from(&self.upper[n - 2]);
        }
        let sol = self.thomas(n - 1, &ext)?;
        let y = |j: usize| sol[j].view((0, 0), (m, r)).into_owned();
        let z = |j: usize| sol[j].view((0, r), (m, m)).into_owned();
        let s = &self.diag[n - 1] - &self.lower[n - 1] * z(n - 2) - &self.upper[n - 1] * z(0);
        let b = &rhs[n - 1] - &self.lower[n - 1] * y(n - 2) - &self.upper[n - 1] * y(0);
        let last = s
            .lu()
            .solve(&b)
            .ok_or_else(|| Error::Solver("singular periodic closure block".into()))?;
        let mut x: Vec<DMatrix<f64>> = (0..n - 1).map(|j| y(j) - z(j) * &last).collect();
        x.push(last);
        Ok(x)
    }
}

/// Solves `Delta u = f` on the layer with Dirichlet data `g` on the whole
/// boundary of the parameter rectangle (the `eta` edges, plus the `alpha`
/// edges on open curves). Returns nodal values.
pub fn solve_dirichlet(
    layer: &LayerGrid,
    source: impl Fn(Vec2) -> f64 + Sync,
    dirichlet: impl Fn(Vec2) -> f64 + Sync,
) -> Result<Vec<f64>> {
    let op = Operator::new(layer)?;
    let sys = BlockSystem::from_operator(&op);
    let fixed = boundary_values(layer, |j, k| dirichlet(layer.positions[layer.idx(j, k)]));
    let f: Vec<f64> = layer.positions.iter().map(|&x| source(x)).collect();
    let rhs = rhs_for(layer, &op, &[(&f, &fixed)]);
    let x = sys.solve(&rhs)?;
    Ok(scatter(layer, &op, &x, 0, &fixed))
}

fn boundary_values(layer: &LayerGrid, g: impl Fn(usize, usize) -> f64) -> Vec<f64> {
    let (na, ne) = (layer.n_alpha(), layer.n_eta());
    let mut v = vec![0.0; na * ne];
    for j in 0..na {
        for k in 0..ne {
            let edge = k == 0 || k == ne - 1 || (!layer.is_closed() && (j == 0 || j == na - 1));
            if edge {
                v[layer.idx(j, k)] = g(j, k);
            }
        }
    }
    v
}

/// Right-hand sides `int_CV f J - (stencil couplings to Dirichlet nodes)`,
/// one column per `(source, boundary)` pair.
fn rhs_for(layer: &LayerGrid, op: &Operator, cases: &[(&[f64], &[f64])]) -> Vec<DMatrix<f64>> {
    let na = layer.n_alpha() as isize;
    let ne = layer.n_eta();
    let m = op.m;
    op.cols
        .iter()
        .enumerate()
        .map(|(b, &j)| {
            let mut out = DMatrix::zeros(m, cases.len());
            for r in 0..m {
                let k = r + 1;
                let c = &op.stencil[b * m + r];
                for (col, (f, g)) in cases.iter().enumerate() {
                    let mut v = f[layer.idx(j, k)] * op.volume[b * m + r];
                    for (dj, row) in c.iter().enumerate() {
                        for (dk, coef) in row.iter().enumerate() {
                            let jj = j as isize + dj as isize - 1;
                            let kk = k + dk - 1;
                            let jj = if op.periodic { jj.rem_euclid(na) } else { jj };
                            let is_fixed = kk == 0
                                || kk == ne - 1
                                || (!op.periodic && (jj == 0 || jj == na - 1));
                            if is_fixed {
                                v -= coef * g[layer.idx(jj as usize, kk)];
                            }
                        }
                    }
                    out[(r, col)] = v;
                }
            }
            out
        })
        .collect()
}

fn scatter(
    layer: &LayerGrid,
    op: &Operator,
    x: &[DMatrix<f64>],
    col: usize,
    fixed: &[f64],
) -> Vec<f64> {
    let mut v = fixed.to_vec();
    for (b, &j) in op.cols.iter().enumerate() {
        for r in 0..op.m {
            v[layer.idx(j, r + 1)] = x[b][(r, col)];
        }
    }
    v
}

/// Max-norm residual of `div(A grad p) = J f` over the unknowns.
fn residual(layer: &LayerGrid, op: &Operator, p: &[f64], f: &[f64]) -> f64 {
    let na = layer.n_alpha() as isize;
    let m = op.m;
    op.cols
        .iter()
        .enumerate()
        .map(|(b, &j)| {
            (0..m)
                .map(|r| {
                    let k = r + 1;
                    let c = &op.stencil[b * m + r];
                    let mut lhs = 0.0;
                    for (dj, row) in c.iter().enumerate() {
                        for (dk, coef) in row.iter().enumerate() {
                            let jj = j as isize + dj as isize - 1;
                            let jj = if op.periodic { jj.rem_euclid(na) } else { jj } as usize;
                            lhs += coef * p[layer.idx(jj, k + dk - 1)];
                        }
                    }
                    let scale = op.volume[b * m + r].abs().max(1e-300);
                    ((lhs - f[layer.idx(j, k)] * op.volume[b * m + r]) / scale).abs()
                })
                .fold(0.0, nan_max)
        })
        .fold(0.0, nan_max)
}

/// Outward flux through `eta = 0` from the half control volumes below it.
fn top_flux(layer: &LayerGrid, p: &[f64], f_const: f64) -> f64 {
    let na = layer.n_alpha();
    let ne = layer.n_eta();
    let h = 1.0 / (ne - 1) as f64;
    let (top, below) = (ne - 1, ne - 2);
    let ef = -0.5 * h;
    let terms: Vec<f64> = (0..na)
        .map(|j| {
            let jm = (j + na - 1) % na;
            let jp = (j + 1) % na;
            let a0 = layer.alpha[j];
            let am = layer.alpha[jm] - if j == 0 { 1.0 } else { 0.0 };
            let ap = layer.alpha[jp] + if jp == 0 { 1.0 } else { 0.0 };
            let (dp, dm) = (ap - a0, a0 - am);
            let w = 0.5 * (dp + dm);
            let mp = layer.map.at(a0, ef);
            let (_, aae, aee) = mp.conductivity();
            let da = (p[layer.idx(jp, below)] - p[layer.idx(jm, below)] + p[layer.idx(jp, top)]
                - p[layer.idx(jm, top)])
                / (2.0 * (dp + dm));
            let face = w * (aee * (p[layer.idx(j, top)] - p[layer.idx(j, below)]) / h + aae * da);
            // exact half-cell integral of the (eta-linear) Jacobian
            let half = w * 0.5 * h * layer.map.at(a0, -0.25 * h).jacobian;
            face + f_const * half
        })
        .collect();
    crate::quadrature::pairwise_sum(&terms)
}

/// Nodal gradients via `(grad R)^{-T}` applied to second-order differences.
pub fn nodal_gradient(layer: &LayerGrid, p: &[f64]) -> Vec<Vec2> {
    let na = layer.n_alpha();
    let ne = layer.n_eta();
    let h = 1.0 / (ne - 1) as f64;
    let closed = layer.is_closed();
    (0..na)
        .into_par_iter()
        .flat_map_iter(|j| {
            let interior = closed || (j > 0 && j + 1 < na);
            (0..ne).map(move |k| {
                if !interior {
                    return Vec2::ZERO;
                }
                let (jm, jp) = if closed {
                    ((j + na - 1) % na, (j + 1) % na)
                } else {
                    (j - 1, j + 1)
                };
                let a0 = layer.alpha[j];
                let am = layer.alpha[jm] - if closed && j == 0 { 1.0 } else { 0.0 };
                let ap = layer.alpha[jp] + if closed && jp == 0 { 1.0 } else { 0.0 };
                let (dp, dm) = (ap - a0, a0 - am);
                let (f0, fp, fm) = (p[layer.idx(j, k)], p[layer.idx(jp, k)], p[layer.idx(jm, k)]);
                let fa = (dm * dm * (fp - f0) + dp * dp * (f0 - fm)) / (dp * dm * (dp + dm));
                let fe = if k == 0 {
                    (-3.0 * f0 + 4.0 * p[layer.idx(j, 1)] - p[layer.idx(j, 2)]) / (2.0 * h)
                } else if k == ne - 1 {
                    (3.0 * f0 - 4.0 * p[layer.idx(j, k - 1)] + p[layer.idx(j, k - 2)]) / (2.0 * h)
                } else {
                    (p[layer.idx(j, k + 1)] - p[layer.idx(j, k - 1)]) / (2.0 * h)
                };
                let [da, de] = layer.metric[layer.idx(j, k)];
                crate::layer::MapPoint {
                    x: Vec2::ZERO,
                    d_alpha: da,
                    d_eta: de,
                    jacobian: da.cross(de),
                }
                .gradient(fa, fe)
            })
        })
        .collect()
}

/// Assembles the scheme, solves it and, on closed curves, fixes `c` by the
/// flux condition.
pub fn assemble_and_solve(problem: &MappedPoissonProblem) -> Result<PoissonSolution> {
    let layer = problem.layer;
    let op = Operator::new(layer)?;
    let sys = BlockSystem::from_operator(&op);
    let n = layer.positions.len();
    let f = vec![-2.0; n];
    let zero = vec![0.0; n];
    let ne = layer.n_eta();
    match problem.boundary {
        Boundary::OpenCurve => {
            let rhs = rhs_for(layer, &op, &[(&f, &zero)]);
            let x = sys.solve(&rhs)?;
            let values = scatter(layer, &op, &x, 0, &zero);
            let solve_residual = residual(layer, &op, &values, &f);
            Ok(PoissonSolution {
                gradient: nodal_gradient(layer, &values),
                values,
                c_eps: None,
                flux_residual: 0.0,
                solve_residual,
                m_matrix_violation: op.m_matrix_violation(),
            })
        }
        Boundary::ClosedCurve { enclosed_area } => {
            let top = boundary_values(layer, |_, k| if k == ne - 1 { 1.0 } else { 0.0 });
            let rhs = rhs_for(layer, &op, &[(&f, &zero), (&zero, &top)]);
            let x = sys.solve(&rhs)?;
            let part = scatter(layer, &op, &x, 0, &zero);
            let harm = scatter(layer, &op, &x, 1, &top);
            let fp = top_flux(layer, &part, -2.0);
            let fh = top_flux(layer, &harm, 0.0);
            if fh.abs() < 1e-300 {
                return Err(Error::Solver("harmonic flux vanished".into()));
            }
            let c = (2.0 * enclosed_area - fp) / fh;
            let values: Vec<f64> = part.iter().zip(&harm).map(|(a, b)| a + c * b).collect();
            let flux_residual = (top_flux(layer, &values, -2.0) - 2.0 * enclosed_area).abs();
            let solve_residual = residual(layer, &op, &values, &f);
            Ok(PoissonSolution {
                gradient: nodal_gradient(layer, &values),
                values,
                c_eps: Some(c),
                flux_residual,
                solve_residual,
                m_matrix_violation: op.m_matrix_violation(),
            })
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Decomposition {
    pub p_tilde: Vec<f64>,
    pub q: Vec<f64>,
    /// `2 |U| / (L int gamma^{-1})`.
    pub beta: f64,
    /// `max |q| / eps^2`.
    pub q_over_eps2: f64,
    /// `|c/eps - beta| / eps`.
    pub c_beta_defect: f64,
    /// `max |grad p~ - (beta/gamma) n|`.
    pub grad_defect: f64,
    /// `grad q` at the nodes.
    pub grad_q: Vec<Vec2>,
}

/// `p~ = c (1 + eta)`, `q = p - p~` and the slope `beta`.
pub fn decompose_p(
    solution: &PoissonSolution,
    layer: &LayerGrid,
    enclosed_area: f64,
) -> Result<Decomposition> {
    let c = solution.c_eps.ok_or(Error::NotClosed("decompose_p"))?;
    if !layer.is_closed() {
        return Err(Error::NotClosed("decompose_p"));
    }
    let eps = layer.epsilon();
    let l = layer.curve().length();
    let beta = 2.0 * enclosed_area / (l * layer.strength().integral_pow(-1.0));
    let ne = layer.n_eta();
    let p_tilde: Vec<f64> = (0..layer.positions.len())
        .map(|i| c * (1.0 + layer.eta[i % ne]))
        .collect();
    let q: Vec<f64> = solution
        .values
        .iter()
        .zip(&p_tilde)
        .map(|(p, t)| p - t)
        .collect();
    let mut grad_defect: f64 = 0.0;
    for j in 0..layer.n_alpha() {
        let a = layer.alpha[j];
        let target = layer.curve().frame(a).n * (beta / layer.strength().value(a));
        for k in 0..ne {
            let [da, de] = layer.metric[layer.idx(j, k)];
            let g = crate::layer::MapPoint {
                x: Vec2::ZERO,
                d_alpha: da,
                d_eta: de,
                jacobian: da.cross(de),
            }
            .gradient(0.0, c);
            grad_defect = grad_defect.max((g - target).norm());
        }
    }
    let grad_q = nodal_gradient(layer, &q);
    Ok(Decomposition {
        q_over_eps2: q.iter().map(|v| v.abs()).fold(0.0, nan_max) / (eps * eps),
        c_beta_defect: (c / eps - beta).abs() / eps,
        grad_defect,
        beta,
        p_tilde,
        q,
        grad_q,
    })
}

/// `max |grad q|` over the `eta = 0` nodes.
pub fn boundary_gradient_check(decomposition: &Decomposition, layer: &LayerGrid) -> f64 {
    let ne = layer.n_eta();
    (0..layer.n_alpha())
        .map(|j| decomposition.grad_q[layer.idx(j, ne - 1)].norm())
        .fold(0.0, nan_max)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TalentiGaps {
    /// `|D|/(2 pi) - sup p`.
    pub sup_gap: f64,
    /// `|D|^2/(4 pi) - int p`.
    pub int_gap: f64,
    pub area: f64,
    pub integral_p: f64,
    pub sup_p: f64,
}

pub fn talenti_check(solution: &PoissonSolution, layer: &LayerGrid) -> TalentiGaps {
    let area = layer_area(layer);
    let sup_p = solution
        .values
        .iter()
        .copied()
        .fold(f64::NEG_INFINITY, nan_max);
    let integral_p = layer.integrate(|j, k| solution.values[layer.idx(j, k)]);
    let pi = std::f64::consts::PI;
    TalentiGaps {
        sup_gap: area / (2.0 * pi) - sup_p,
        int_gap: area * area / (4.0 * pi) - integral_p,
        area,
        integral_p,
        sup_p,
    }
}

/// Field dump rows `(alpha, eta, x, y, p, q, dp/dx, dp/dy)` for external plotting.
pub fn field_rows(
    layer: &LayerGrid,
    solution: &PoissonSolution,
    q: Option<&[f64]>,
) -> Vec<[f64; 8]> {
    (0..layer.n_alpha())
        .flat_map(|j| (0..layer.n_eta()).map(move |k| (j, k)))
        .map(|(j, k)| {
            let i = layer.idx(j, k);
            let x = layer.positions[i];
            let g = solution.gradient[i];
            [
                layer.alpha[j],
                layer.eta[k],
                x.x,
                x.y,
                solution.values[i],
                q.map_or(f64::NAN, |q| q[i]),
                g.x,
                g.y,
            ]
        })
        .collect()
}
