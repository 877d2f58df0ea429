//! Geometry of the projected frames: induced metrics, second fundamental forms
//! (algebraically and by finite differences), curvature, normal-bundle and
//! Lagrangian checks, curved flats and the flat metric of `β∞`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::liecore::{Family, Sub, SymmetricPairSpec};
use crate::linalg::{bracket, tr_form, Mat};
use crate::loops::{grid_derivative, ConnectionField, GridChart, Spectral};
use crate::zerocurv::{integrate_frame, mc_residual, regularity_check, FrameField, IntegrationOptions};

/// Per grid point: the unit vector `F·e_m` (space forms) or the rank-two
/// projector `F·Π₀·F⁻¹` (Lagrangian family).
#[derive(Debug, Clone)]
pub struct ProjectionField {
    pub chart: GridChart,
    pub lambda: f64,
    pub points: Vec<Mat>,
}

pub fn project_uk(frame: &FrameField, spec: &SymmetricPairSpec, drift_tol: f64) -> Result<ProjectionField> {
    frame.check_drift(spec, drift_tol)?;
    let m = spec.m;
    let points = match spec.base_projector() {
        None => frame.frames.iter().map(|f| f.columns(m - 1, 1).into_owned()).collect(),
        Some(pi0) => frame
            .frames
            .iter()
            .map(|f| {
                let inv = f.clone().try_inverse().expect("frames are invertible");
                f * &pi0 * inv
            })
            .collect(),
    };
    Ok(ProjectionField { chart: frame.chart.clone(), lambda: frame.lambda, points })
}

impl ProjectionField {
    /// Worst violation of the point invariants: `⟨f, f⟩_S = ±1`, or `Π² = Π`,
    /// `tr Π = 2`, `[Π, J₀] = 0`.
    pub fn invariant_residual(&self, spec: &SymmetricPairSpec) -> f64 {
        let s = spec.form();
        let target = if spec.is_hyperbolic() { -1.0 } else { 1.0 };
        let mut worst = 0.0_f64;
        for p in &self.points {
            let r = match &spec.j0 {
                None => ((p.transpose() * &s * p)[(0, 0)] - target).abs(),
                Some(j0) => (p * p - p).norm().max((p.trace() - 2.0).abs()).max(bracket(p, j0).norm()),
            };
            worst = worst.max(r);
        }
        worst
    }

    /// Distance from the `λ = 1` reflective submanifold, the fixed set of
    /// conjugation by `QP`: the normal coordinates of `f` for space forms,
    /// `‖QP·Π·PQ − Π‖` for the Lagrangian family.
    pub fn reflective_residual(&self, spec: &SymmetricPairSpec) -> f64 {
        let mut worst = 0.0_f64;
        for p in &self.points {
            let r = match spec.family {
                Family::SpaceForm => (spec.n..spec.n + spec.k).map(|i| p[(i, 0)].abs()).fold(0.0, f64::max),
                Family::LagrangianProjective => {
                    let qp = &spec.q * &spec.p;
                    (&qp * p * qp.transpose() - p).norm()
                }
            };
            worst = worst.max(r);
        }
        worst
    }
}

/// `g_λ(∂_i, ∂_j) = κ·ν²·⟨c_i, c_j⟩_𝔭` at every point.
pub fn induced_metric(field: &ConnectionField, spec: &SymmetricPairSpec, lambda: f64) -> Result<Vec<Mat>> {
    let nu = field.weights(lambda)?.1;
    let scale = spec.curvature_scale * nu * nu;
    let n = field.dim();
    let mut out = Vec::with_capacity(field.chart.len());
    for p in 0..field.chart.len() {
        let g = Mat::from_fn(n, n, |i, j| scale * spec.p_metric(field.c(p, i), field.c(p, j)));
        let det = g.determinant();
        if !(det > 0.0) {
            return Err(Error::DegenerateCoframe { sigma_min: det.max(0.0).sqrt() });
        }
        out.push(g);
    }
    Ok(out)
}

/// `max |g_λ − R_λ²·g_ref| / |g_λ|` over the grid, `g_ref` the metric of the
/// reference loop.
pub fn metric_scaling_residual(field: &ConnectionField, spec: &SymmetricPairSpec, lambda: f64) -> Result<f64> {
    let r = field.spectral.homothety(lambda)?;
    let g = induced_metric(field, spec, lambda)?;
    let g1 = induced_metric(field, spec, field.spectral.reference())?;
    Ok(g.iter().zip(&g1).map(|(a, b)| (a - b * (r * r)).norm() / a.norm()).fold(0.0, f64::max))
}

/// `g_𝔭`-orthonormal basis of the normal space `p′⊥`.
pub fn normal_basis(spec: &SymmetricPairSpec) -> Vec<Mat> {
    spec.subspace_basis(Sub::MP).into_iter().map(|b| &b / spec.p_metric(&b, &b).sqrt()).collect()
}

/// Second fundamental form at interior points, `ii[q][a]` the symmetric
/// `n×n` matrix of the `a`-th normal component at `points[q]`. Computed with
/// `κ = 1`.
#[derive(Debug, Clone)]
pub struct SecondFundamentalForm {
    pub points: Vec<usize>,
    pub alg: Vec<Vec<Mat>>,
    pub num: Vec<Vec<Mat>>,
    /// `max ‖II_alg − II_num‖`
    pub discrepancy: f64,
    /// `max |II(∂_i, ∂_j) − II(∂_j, ∂_i)|` before symmetrization.
    pub symmetry: f64,
}

impl SecondFundamentalForm {
    pub fn max_alg(&self) -> f64 {
        self.alg.iter().flatten().map(|x| x.amax()).fold(0.0, f64::max)
    }

    pub fn max_num(&self) -> f64 {
        self.num.iter().flatten().map(|x| x.amax()).fold(0.0, f64::max)
    }
}

fn interior(chart: &GridChart) -> Vec<usize> {
    (0..chart.len()).filter(|&p| chart.is_interior(p)).collect()
}

pub fn second_fundamental_form(
    frame: &FrameField,
    field: &ConnectionField,
    spec: &SymmetricPairSpec,
) -> SecondFundamentalForm {
    let (mu, nu) = field.weights(frame.lambda).expect("frames are integrated at valid parameters");
    let n = field.dim();
    let normals = normal_basis(spec);
    let points = interior(&field.chart);
    let mut symmetry = 0.0_f64;
    let alg: Vec<Vec<Mat>> = points
        .iter()
        .map(|&p| {
            normals
                .iter()
                .map(|nrm| {
                    let raw = Mat::from_fn(n, n, |i, j| {
                        spec.p_metric(&bracket(&(field.b(p, i) * mu), &(field.c(p, j) * nu)), nrm)
                    });
                    symmetry = symmetry.max((&raw - raw.transpose()).amax());
                    (&raw + raw.transpose()) * 0.5
                })
                .collect()
        })
        .collect();
    let num = match spec.family {
        Family::SpaceForm => ii_embedding(frame, spec, &normals, &points),
        Family::LagrangianProjective => ii_projector(frame, spec, &normals, &points),
    };
    let discrepancy = alg
        .iter()
        .flatten()
        .zip(num.iter().flatten())
        .map(|(a, b)| (a - b).norm())
        .fold(0.0, f64::max);
    SecondFundamentalForm { points, alg, num, discrepancy, symmetry }
}

/// Normal parts `⟨∂_i∂_j f, F·N_a e_m⟩_S` of second differences of `f = F·e_m`.
fn ii_embedding(frame: &FrameField, spec: &SymmetricPairSpec, normals: &[Mat], points: &[usize]) -> Vec<Vec<Mat>> {
    let ch = &frame.chart;
    let m = spec.m;
    let s = spec.form();
    let f = |p: usize| frame.at(p).columns(m - 1, 1).into_owned();
    let n = ch.dim();
    let dirs: Vec<Mat> = normals.iter().map(|nrm| nrm.columns(m - 1, 1).into_owned()).collect();
    points
        .iter()
        .map(|&p| {
            let hess = hessian(ch, p, f);
            dirs.iter()
                .map(|v| {
                    let sn = &s * frame.at(p) * v;
                    Mat::from_fn(n, n, |i, j| hess[i][j].dot(&sn))
                })
                .collect()
        })
        .collect()
}

/// Normal parts of second differences of the projector embedding
/// `Π = F·Π₀·F⁻¹`. The ambient tangent space at `Π` is `F·[𝔭, Π₀]·F⁻¹`, on
/// which the Frobenius product is `s·g_𝔭` with `s = ‖[N, Π₀]‖²` for unit `N`.
fn ii_projector(frame: &FrameField, spec: &SymmetricPairSpec, normals: &[Mat], points: &[usize]) -> Vec<Vec<Mat>> {
    let ch = &frame.chart;
    let n = ch.dim();
    let pi0 = spec.base_projector().expect("Lagrangian spec has a base projector");
    let pi: Vec<Mat> = frame
        .frames
        .iter()
        .map(|f| f * &pi0 * f.clone().try_inverse().expect("frames are invertible"))
        .collect();
    let lifted: Vec<Mat> = normals.iter().map(|nrm| bracket(nrm, &pi0)).collect();
    points
        .iter()
        .map(|&p| {
            let f = frame.at(p);
            let inv = f.clone().try_inverse().expect("frames are invertible");
            let hess = hessian(ch, p, |q| pi[q].clone());
            lifted
                .iter()
                .map(|v0| {
                    let s = v0.norm_squared();
                    let v = f * v0 * &inv;
                    Mat::from_fn(n, n, |i, j| hess[i][j].dot(&v) / s)
                })
                .collect()
        })
        .collect()
}

/// Central second differences at an interior point.
fn hessian<F: Fn(usize) -> Mat>(ch: &GridChart, p: usize, f: F) -> Vec<Vec<Mat>> {
    let n = ch.dim();
    let f0 = f(p);
    let mut out = vec![vec![Mat::zeros(f0.nrows(), f0.ncols()); n]; n];
    for i in 0..n {
        let (si, hi) = (ch.stride(i), ch.spacing[i]);
        out[i][i] = (f(p + si) - &f0 * 2.0 + f(p - si)) / (hi * hi);
        for j in (i + 1)..n {
            let (sj, hj) = (ch.stride(j), ch.spacing[j]);
            let d = (f(p + si + sj) - f(p + si - sj) - f(p - si + sj) + f(p - si - sj)) / (4.0 * hi * hj);
            out[i][j] = d.clone();
            out[j][i] = d;
        }
    }
    out
}

/// `F⁻¹∂_dF` by finite differences, laid out `[point * n + d]`.
pub fn frame_maurer_cartan(frame: &FrameField) -> Vec<Mat> {
    let ch = &frame.chart;
    let n = ch.dim();
    let mut out = Vec::with_capacity(ch.len() * n);
    for p in 0..ch.len() {
        let inv = frame.at(p).clone().try_inverse().expect("frames are invertible");
        for d in 0..n {
            out.push(&inv * grid_derivative(ch, p, d, |q| frame.at(q).clone()));
        }
    }
    out
}

/// Sectional curvature of the plane `span(x, y) ⊂ 𝔭` for `κ = 1`.
pub fn ambient_curvature(spec: &SymmetricPairSpec, x: &Mat, y: &Mat) -> f64 {
    let area = spec.p_metric(x, x) * spec.p_metric(y, y) - spec.p_metric(x, y).powi(2);
    -spec.p_metric(&bracket(&bracket(x, y), y), x) / area
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct CurvatureStats {
    pub mean: f64,
    pub min: f64,
    pub max: f64,
    /// `max |K − target|`
    pub deviation: f64,
    pub target: f64,
}

/// Gauss equation on every coordinate plane at interior points, with `II_num`.
pub fn sectional_curvatures(
    ii: &SecondFundamentalForm,
    field: &ConnectionField,
    spec: &SymmetricPairSpec,
    lambda: f64,
) -> Vec<f64> {
    let nu = field.weights(lambda).expect("valid loop parameter").1;
    let n = field.dim();
    let mut out = Vec::new();
    for (q, &p) in ii.points.iter().enumerate() {
        for i in 0..n {
            for j in (i + 1)..n {
                let (ci, cj) = (field.c(p, i) * nu, field.c(p, j) * nu);
                let area = spec.p_metric(&ci, &ci) * spec.p_metric(&cj, &cj) - spec.p_metric(&ci, &cj).powi(2);
                let ext: f64 = ii.num[q].iter().map(|h| h[(i, i)] * h[(j, j)] - h[(i, j)].powi(2)).sum();
                let k = ambient_curvature(spec, &ci, &cj) + ext / area;
                out.push(k / spec.curvature_scale);
            }
        }
    }
    out
}

/// Expected curvature `±1/R_λ²` (sign from the signature).
pub fn curvature_target(field: &ConnectionField, spec: &SymmetricPairSpec, lambda: f64) -> Result<f64> {
    let r = field.spectral.homothety(lambda)?;
    Ok(spec.metric_sign() / (r * r))
}

pub fn sectional_curvature_check(
    frame: &FrameField,
    field: &ConnectionField,
    spec: &SymmetricPairSpec,
) -> Result<CurvatureStats> {
    let ii = second_fundamental_form(frame, field, spec);
    curvature_stats(&sectional_curvatures(&ii, field, spec, frame.lambda), curvature_target(field, spec, frame.lambda)?)
}

fn curvature_stats(ks: &[f64], target: f64) -> Result<CurvatureStats> {
    if ks.is_empty() {
        return Err(Error::InvalidGrid("no interior points".into()));
    }
    let mean = ks.iter().sum::<f64>() / ks.len() as f64;
    Ok(CurvatureStats {
        mean,
        min: ks.iter().copied().fold(f64::INFINITY, f64::min),
        max: ks.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        deviation: ks.iter().map(|k| (k - target).abs()).fold(0.0, f64::max),
        target,
    })
}

/// Sets `κ` so that the reference image (`λ = 1`, or `t = 0` on the circle) has
/// curvature `+1` (compact) or `−1` (indefinite). Refuses data whose reference
/// second fundamental form exceeds `ii_tol`.
pub fn calibrate(
    spec: &SymmetricPairSpec,
    field: &ConnectionField,
    opts: &IntegrationOptions,
    ii_tol: f64,
) -> Result<SymmetricPairSpec> {
    let mut unit = spec.clone();
    unit.curvature_scale = 1.0;
    let reference = field.spectral.reference();
    let frame = integrate_frame(field, reference, &(0..field.dim()).collect::<Vec<_>>(), opts)?;
    let ii = second_fundamental_form(&frame, field, &unit);
    let residual = ii.max_num().max(ii.max_alg());
    if residual > ii_tol {
        return Err(Error::NotTotallyGeodesic { residual });
    }
    let ks = sectional_curvatures(&ii, field, &unit, reference);
    let mean = ks.iter().sum::<f64>() / ks.len().max(1) as f64;
    unit.curvature_scale = mean / spec.metric_sign();
    Ok(unit)
}

/// Shape operators `S_a = g⁻¹·II^a` and the worst `‖[S_a, S_b]‖`.
pub fn shape_commutator(ii: &[Vec<Mat>], metrics: &[Mat]) -> f64 {
    let mut worst = 0.0_f64;
    for (forms, g) in ii.iter().zip(metrics) {
        let ginv = g.clone().try_inverse().expect("metric is invertible");
        let shapes: Vec<Mat> = forms.iter().map(|h| &ginv * h).collect();
        for a in 0..shapes.len() {
            for b in (a + 1)..shapes.len() {
                worst = worst.max(bracket(&shapes[a], &shapes[b]).norm());
            }
        }
    }
    worst
}

/// Ricci-equation test of normal flatness on `II_num`.
pub fn normal_bundle_flatness(frame: &FrameField, field: &ConnectionField, spec: &SymmetricPairSpec) -> Result<f64> {
    let ii = second_fundamental_form(frame, field, spec);
    let g = induced_metric(field, spec, frame.lambda)?;
    let metrics: Vec<Mat> = ii.points.iter().map(|&p| &g[p] / spec.curvature_scale).collect();
    Ok(shape_commutator(&ii.num, &metrics))
}

/// Complex structure of `𝔭` at the base point: `X ↦ J₀·X`.
pub fn complex_structure_p(spec: &SymmetricPairSpec, x: &Mat) -> Result<Mat> {
    let j0 = spec.j0.as_ref().ok_or(Error::WrongFamily { expected: "lagrangian" })?;
    Ok(j0 * x)
}

/// Pullback of the Kähler form: `max |⟨J₀[T_i, Π], [T_j, Π]⟩|` with
/// `T_i = F·θ_i·F⁻¹`, `θ_i` the `𝔭` part of `α^λ(∂_i)` and `Π = F·Π₀·F⁻¹`.
pub fn lagrangian_residual(frame: &FrameField, field: &ConnectionField, spec: &SymmetricPairSpec) -> Result<f64> {
    if spec.family != Family::LagrangianProjective {
        return Err(Error::WrongFamily { expected: "lagrangian" });
    }
    let j0 = spec.j0.as_ref().expect("Lagrangian spec carries J0");
    let pi0 = spec.base_projector().expect("Lagrangian spec has a base projector");
    let n = field.dim();
    let mut worst = 0.0_f64;
    for p in 0..field.chart.len() {
        let f = frame.at(p);
        let inv = f.clone().try_inverse().expect("frames are invertible");
        let pi = f * &pi0 * &inv;
        let tangents: Vec<Mat> = (0..n)
            .map(|d| {
                let x = field.alpha(p, d, frame.lambda);
                let theta = spec.project(&x, Sub::MP) + spec.project(&x, Sub::MM);
                bracket(&(f * theta * &inv), &pi)
            })
            .collect();
        for i in 0..n {
            let jt = j0 * &tangents[i];
            for t in tangents.iter().skip(i + 1) {
                worst = worst.max(jt.dot(t).abs());
            }
        }
    }
    Ok(worst)
}

fn cbracket_norm(u: &(Mat, Mat), v: &(Mat, Mat)) -> f64 {
    let re = bracket(&u.0, &v.0) - bracket(&u.1, &v.1);
    let im = bracket(&u.0, &v.1) + bracket(&u.1, &v.0);
    re.norm().hypot(im.norm())
}

/// `max ‖[β∞(∂_i), β∞(∂_j)]‖`.
pub fn curved_flat_residual(field: &ConnectionField) -> f64 {
    let n = field.dim();
    let mut worst = 0.0_f64;
    for p in 0..field.chart.len() {
        for i in 0..n {
            for j in (i + 1)..n {
                worst = worst.max(cbracket_norm(&field.beta_inf(p, i), &field.beta_inf(p, j)));
            }
        }
    }
    worst
}

/// `d(λ) = max ‖β(∂_i)/λ − β∞(∂_i)‖ = λ⁻²·max ‖c_i − b_i‖` at real `λ`; for
/// circle loops `b` is imaginary and the norm is the complex one.
pub fn asymptotic_defect(field: &ConnectionField, lambda: f64) -> f64 {
    let n = field.dim();
    let (mu, nu) = (lambda - 1.0 / lambda, lambda + 1.0 / lambda);
    let mut worst = 0.0_f64;
    for p in 0..field.chart.len() {
        for d in 0..n {
            let (b, c) = (field.b(p, d), field.c(p, d));
            let (inf_re, inf_im) = field.beta_inf(p, d);
            let defect = match field.spectral {
                Spectral::Real => (b * mu + c * nu) / lambda - inf_re,
                Spectral::Circle => c * (nu / lambda) - inf_re,
            };
            let defect_im = match field.spectral {
                Spectral::Real => -inf_im,
                Spectral::Circle => -(b * (mu / lambda)) - inf_im,
            };
            worst = worst.max(defect.norm().hypot(defect_im.norm()));
        }
    }
    worst
}

#[derive(Debug, Clone, Serialize)]
pub struct AsymptoticReport {
    pub lambdas: Vec<f64>,
    pub defects: Vec<f64>,
    /// `d(λ_k)/d(λ_{k+1})`
    pub ratios: Vec<f64>,
}

pub fn asymptotic_flat_check(field: &ConnectionField, lambdas: &[f64]) -> Result<AsymptoticReport> {
    if let Some(&bad) = lambdas.iter().find(|l| !(l.abs() >= 10.0)) {
        return Err(Error::InvalidLambda(bad, "asymptotic checks need |λ| ≥ 10".into()));
    }
    let defects: Vec<f64> = lambdas.iter().map(|&l| asymptotic_defect(field, l)).collect();
    let ratios = defects.windows(2).map(|w| w[0] / w[1]).collect();
    Ok(AsymptoticReport { lambdas: lambdas.to_vec(), defects, ratios })
}

/// `g∞(∂_i, ∂_j) = ⟨β∞(∂_i), β∞(∂_j)⟩_𝔭`, extended complex-bilinearly for
/// circle loops (the imaginary part vanishes since `b ⟂ c`).
pub fn flat_metric(field: &ConnectionField, spec: &SymmetricPairSpec) -> Vec<Mat> {
    let n = field.dim();
    let form = |x: &(Mat, Mat), y: &(Mat, Mat)| tr_form(&x.0, &y.0) - tr_form(&x.1, &y.1);
    (0..field.chart.len())
        .map(|p| {
            let inf: Vec<(Mat, Mat)> = (0..n).map(|d| field.beta_inf(p, d)).collect();
            Mat::from_fn(n, n, |i, j| spec.metric_sign() * form(&inf[i], &inf[j]))
        })
        .collect()
}

pub fn flat_metric_residual(field: &ConnectionField, spec: &SymmetricPairSpec) -> Result<f64> {
    metric_curvature_residual(&field.chart, &flat_metric(field, spec))
}

/// Sectional curvatures of a metric field on coordinate planes at interior
/// points, from finite-difference Christoffel symbols.
pub fn metric_sectional_curvatures(chart: &GridChart, g: &[Mat]) -> Result<Vec<f64>> {
    let n = chart.dim();
    let mut ginv = Vec::with_capacity(g.len());
    for x in g {
        let det = x.determinant();
        if det.abs() < 1e-14 {
            return Err(Error::DegenerateCoframe { sigma_min: det.abs().sqrt() });
        }
        ginv.push(x.clone().try_inverse().expect("nonsingular"));
    }
    // christoffel[p][k] is the matrix Γ^k_{ij}
    let dg: Vec<Vec<Mat>> =
        (0..chart.len()).map(|p| (0..n).map(|l| grid_derivative(chart, p, l, |q| g[q].clone())).collect()).collect();
    let christoffel: Vec<Vec<Mat>> = (0..chart.len())
        .map(|p| {
            (0..n)
                .map(|k| {
                    Mat::from_fn(n, n, |i, j| {
                        0.5 * (0..n)
                            .map(|l| ginv[p][(k, l)] * (dg[p][i][(j, l)] + dg[p][j][(i, l)] - dg[p][l][(i, j)]))
                            .sum::<f64>()
                    })
                })
                .collect()
        })
        .collect();
    let mut out = Vec::new();
    for p in interior(chart) {
        let dgam: Vec<Vec<Mat>> =
            (0..n).map(|a| (0..n).map(|l| grid_derivative(chart, p, a, |q| christoffel[q][l].clone())).collect()).collect();
        let gam = &christoffel[p];
        // R^l_{ijk} = ∂_iΓ^l_{jk} − ∂_jΓ^l_{ik} + Γ^l_{is}Γ^s_{jk} − Γ^l_{js}Γ^s_{ik}
        let riem = |l: usize, i: usize, j: usize, k: usize| {
            dgam[i][l][(j, k)] - dgam[j][l][(i, k)]
                + (0..n).map(|s| gam[l][(i, s)] * gam[s][(j, k)] - gam[l][(j, s)] * gam[s][(i, k)]).sum::<f64>()
        };
        for i in 0..n {
            for j in (i + 1)..n {
                let num: f64 = (0..n).map(|l| g[p][(i, l)] * riem(l, i, j, j)).sum();
                let area = g[p][(i, i)] * g[p][(j, j)] - g[p][(i, j)].powi(2);
                out.push(num / area);
            }
        }
    }
    Ok(out)
}

/// `max |K|` over interior points and coordinate planes.
pub fn metric_curvature_residual(chart: &GridChart, g: &[Mat]) -> Result<f64> {
    Ok(metric_sectional_curvatures(chart, g)?.into_iter().fold(0.0, |a, k| a.max(k.abs())))
}

/// `dθ² + sin²θ·dφ²` with `θ` the first coordinate: curvature exactly one.
pub fn round_sphere_metric(chart: &GridChart) -> Vec<Mat> {
    (0..chart.len())
        .map(|p| {
            let th = chart.coord(p)[0];
            let mut g = Mat::identity(chart.dim(), chart.dim());
            g[(1, 1)] = th.sin().powi(2);
            g
        })
        .collect()
}

/// Everything measured for one `(connection, λ)` pair.
#[derive(Debug, Clone, Serialize)]
pub struct GeometryReport {
    pub family: &'static str,
    pub n: usize,
    pub k: usize,
    pub hyperbolic: bool,
    pub lambda: f64,
    pub r_lambda: f64,
    pub curvature_scale: f64,
    pub mc: f64,
    pub drift: f64,
    pub metric_scaling: f64,
    pub sec_mean: f64,
    pub sec_dev: f64,
    pub sec_target: f64,
    pub ii_alg_max: f64,
    pub ii_two_way: f64,
    pub ii_symmetry: f64,
    pub normal_comm: Option<f64>,
    pub lagrangian: Option<f64>,
    pub curved_flat: f64,
    pub flat_metric: f64,
    pub asym_ratio: f64,
    pub regularity: f64,
    /// `λ = ±1`: the image lies in the reflective submanifold itself.
    pub totally_geodesic_reference: bool,
}

pub const CSV_COLUMNS: [&str; 16] = [
    "family",
    "n",
    "k",
    "lambda",
    "R_lambda",
    "metric_scaling",
    "sec_mean",
    "sec_dev",
    "ii_two_way",
    "normal_comm",
    "lagrangian",
    "curved_flat",
    "flat_metric",
    "asym_ratio",
    "mc",
    "regularity",
];

fn fmt(x: f64) -> String {
    format!("{x:.9e}")
}

impl GeometryReport {
    pub fn csv_row(&self) -> Vec<String> {
        let opt = |x: Option<f64>| x.map(fmt).unwrap_or_else(|| "n/a".into());
        vec![
            self.family.to_string(),
            self.n.to_string(),
            self.k.to_string(),
            fmt(self.lambda),
            fmt(self.r_lambda),
            fmt(self.metric_scaling),
            fmt(self.sec_mean),
            fmt(self.sec_dev),
            fmt(self.ii_two_way),
            opt(self.normal_comm),
            opt(self.lagrangian),
            fmt(self.curved_flat),
            fmt(self.flat_metric),
            fmt(self.asym_ratio),
            fmt(self.mc),
            fmt(self.regularity),
        ]
    }
}

#[derive(Debug, Clone)]
pub struct ReportOptions {
    pub integration: IntegrationOptions,
    pub drift_tol: f64,
    /// Largest `λ = 1` second fundamental form accepted by [`calibrate`].
    pub calibration_tol: f64,
}

impl Default for ReportOptions {
    fn default() -> Self {
        ReportOptions {
            integration: IntegrationOptions { mc_tol: 1e-3, ..IntegrationOptions::default() },
            drift_tol: 1e-8,
            calibration_tol: 1e-4,
        }
    }
}

/// Calibrates once at `λ = 1`, then runs every check at `λ`.
pub fn full_report(
    field: &ConnectionField,
    spec: &SymmetricPairSpec,
    lambda: f64,
    opts: &ReportOptions,
) -> Result<GeometryReport> {
    let cal = calibrate(spec, field, &opts.integration, opts.calibration_tol)?;
    report_calibrated(field, &cal, lambda, opts)
}

/// [`full_report`] for an already calibrated spec.
pub fn report_calibrated(
    field: &ConnectionField,
    spec: &SymmetricPairSpec,
    lambda: f64,
    opts: &ReportOptions,
) -> Result<GeometryReport> {
    let r = field.spectral.homothety(lambda)?;
    let order: Vec<usize> = (0..field.dim()).collect();
    let frame = integrate_frame(field, lambda, &order, &opts.integration)?;
    let drift = frame.check_drift(spec, opts.drift_tol)?.max();
    let ii = second_fundamental_form(&frame, field, spec);
    let target = curvature_target(field, spec, lambda)?;
    let sec = curvature_stats(&sectional_curvatures(&ii, field, spec, lambda), target)?;
    let g = induced_metric(field, spec, lambda)?;
    let normal_comm = match spec.family {
        Family::SpaceForm => {
            let metrics: Vec<Mat> = ii.points.iter().map(|&p| &g[p] / spec.curvature_scale).collect();
            Some(shape_commutator(&ii.num, &metrics))
        }
        Family::LagrangianProjective => None,
    };
    let lagrangian = match spec.family {
        Family::LagrangianProjective => Some(lagrangian_residual(&frame, field, spec)?),
        Family::SpaceForm => None,
    };
    let l = match field.spectral {
        Spectral::Real => lambda.abs().max(1.0),
        Spectral::Circle => 1.0,
    };
    Ok(GeometryReport {
        family: spec.family.as_str(),
        n: spec.n,
        k: spec.k,
        hyperbolic: spec.is_hyperbolic(),
        lambda,
        r_lambda: r,
        curvature_scale: spec.curvature_scale,
        mc: mc_residual(field).max(),
        drift,
        metric_scaling: metric_scaling_residual(field, spec, lambda)?,
        sec_mean: sec.mean,
        sec_dev: sec.deviation,
        sec_target: target,
        ii_alg_max: ii.max_alg(),
        ii_two_way: ii.discrepancy,
        ii_symmetry: ii.symmetry,
        normal_comm,
        lagrangian,
        curved_flat: curved_flat_residual(field),
        flat_metric: flat_metric_residual(field, spec)?,
        asym_ratio: asymptotic_defect(field, l) / asymptotic_defect(field, 10.0 * l),
        regularity: regularity_check(field, 0.0).sigma_min,
        totally_geodesic_reference: field.spectral.is_reference(lambda),
    })
}

/// Spacing at which the finite-difference budgets are stated.
pub const BUDGET_SPACING: f64 = 0.05;

/// `sup ‖α^λ‖ / sup ‖α^ref‖` over the chart, with `ref` the reference
/// parameter of the loop kind.
pub fn coefficient_growth(field: &ConnectionField, lambda: f64) -> f64 {
    let sup = |l: f64| {
        (0..field.chart.len())
            .flat_map(|p| (0..field.dim()).map(move |i| (p, i)))
            .map(|(p, i)| field.alpha(p, i, l).norm())
            .fold(0.0, f64::max)
    };
    let base = sup(field.spectral.reference());
    if base > 0.0 { sup(lambda) / base } else { 1.0 }
}

/// Named acceptance budgets for a [`GeometryReport`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Budgets {
    pub mc: f64,
    pub drift: f64,
    pub metric_scaling: f64,
    pub sec_dev: f64,
    pub ii_two_way: f64,
    pub normal_comm: f64,
    pub lagrangian: f64,
    pub curved_flat: f64,
    pub flat_metric: f64,
    pub asym_min: f64,
    pub asym_max: f64,
    pub regularity: f64,
}

impl Default for Budgets {
    fn default() -> Self {
        Budgets {
            mc: 1e-3,
            drift: 1e-8,
            metric_scaling: 1e-10,
            sec_dev: 1e-3,
            ii_two_way: 1e-4,
            normal_comm: 1e-6,
            lagrangian: 1e-8,
            curved_flat: 1e-10,
            flat_metric: 1e-4,
            asym_min: 90.0,
            asym_max: 110.0,
            regularity: 1e-8,
        }
    }
}

impl Budgets {
    pub const NAMES: [&'static str; 12] = [
        "mc",
        "drift",
        "metric_scaling",
        "sec_dev",
        "ii_two_way",
        "normal_comm",
        "lagrangian",
        "curved_flat",
        "flat_metric",
        "asym_min",
        "asym_max",
        "regularity",
    ];

    pub fn set(&mut self, name: &str, value: f64) -> Result<()> {
        if !(value > 0.0 && value.is_finite()) {
            return Err(Error::InvalidSpec(format!("tolerance {name} must be positive, got {value}")));
        }
        let slot = match name {
            "mc" => &mut self.mc,
            "drift" => &mut self.drift,
            "metric_scaling" => &mut self.metric_scaling,
            "sec_dev" => &mut self.sec_dev,
            "ii_two_way" => &mut self.ii_two_way,
            "normal_comm" => &mut self.normal_comm,
            "lagrangian" => &mut self.lagrangian,
            "curved_flat" => &mut self.curved_flat,
            "flat_metric" => &mut self.flat_metric,
            "asym_min" => &mut self.asym_min,
            "asym_max" => &mut self.asym_max,
            "regularity" => &mut self.regularity,
            _ => return Err(Error::InvalidSpec(format!("unknown tolerance {name}"))),
        };
        *slot = value;
        Ok(())
    }

    /// Budgets for a grid of spacing `h` and coefficient growth `growth`:
    /// the budgets of checks built on second differences (`sec_dev`,
    /// `ii_two_way`) scale with `h²·growth⁴` relative to [`BUDGET_SPACING`]
    /// and unit growth, and are never tightened.
    pub fn for_grid(&self, h: f64, growth: f64) -> Budgets {
        let factor = ((h / BUDGET_SPACING).powi(2) * growth.powi(4)).max(1.0);
        Budgets { sec_dev: self.sec_dev * factor, ii_two_way: self.ii_two_way * factor, ..self.clone() }
    }

    /// Names of the checks the report violates, in a fixed order.
    pub fn failures(&self, r: &GeometryReport) -> Vec<&'static str> {
        let mut out = Vec::new();
        let mut check = |name, ok: bool| {
            if !ok {
                out.push(name);
            }
        };
        check("mc", r.mc <= self.mc);
        check("drift", r.drift <= self.drift);
        check("metric_scaling", r.metric_scaling <= self.metric_scaling);
        check("sec_dev", r.sec_dev <= self.sec_dev);
        check("ii_two_way", r.ii_two_way <= self.ii_two_way);
        check("normal_comm", r.normal_comm.is_none_or(|x| x <= self.normal_comm));
        check("lagrangian", r.lagrangian.is_none_or(|x| x <= self.lagrangian));
        check("curved_flat", r.curved_flat <= self.curved_flat);
        check("flat_metric", r.flat_metric <= self.flat_metric);
        check("asym_ratio", (self.asym_min..=self.asym_max).contains(&r.asym_ratio));
        check("regularity", r.regularity > self.regularity);
        out
    }
}
