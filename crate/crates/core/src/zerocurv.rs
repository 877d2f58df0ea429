//! Zero-curvature equations: coefficient-wise Maurer–Cartan residuals, frame
//! integration on the grid, and constant (Abelian) connection data.

use nalgebra::{Complex, DMatrix};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::liecore::{rank_oracle, Sub, SymmetricPairSpec, RANK_TRIALS};
use crate::linalg::{bracket, flatten, null_space, orthonormalize, singular_values, Mat};
use crate::loops::{grid_derivative, ConnectionField, GridChart, Spectral};

/// Default per-cell substeps of the one-step integrator.
pub const SUBSTEPS: usize = 4;

/// Worst Frobenius norm of each λ-power coefficient of `dα + α∧α`.
#[derive(Debug, Clone, Serialize)]
pub struct MCResidualReport {
    /// Indexed by power `−2, −1, 0, 1, 2`.
    pub residual: [f64; 5],
    /// Grid point and direction pair `(i, j)` of each worst value.
    pub location: [(usize, usize, usize); 5],
}

impl MCResidualReport {
    pub fn power(&self, p: i32) -> f64 {
        self.residual[(p + 2) as usize]
    }

    pub fn max(&self) -> f64 {
        self.residual.iter().copied().fold(0.0, f64::max)
    }
}

/// One λ-coefficient of the curvature; the imaginary part is zero for real
/// loops.
#[derive(Debug, Clone, PartialEq)]
pub struct McCoefficient {
    pub re: Mat,
    pub im: Mat,
}

impl McCoefficient {
    pub fn norm(&self) -> f64 {
        self.re.norm().hypot(self.im.norm())
    }
}

type Pair = (Mat, Mat);

fn cbracket(u: &Pair, v: &Pair) -> Pair {
    (bracket(&u.0, &v.0) - bracket(&u.1, &v.1), bracket(&u.0, &v.1) + bracket(&u.1, &v.0))
}

fn cadd(u: Pair, v: Pair) -> Pair {
    (u.0 + v.0, u.1 + v.1)
}

/// The five λ-coefficients of `Ω_ij = ∂_iα_j − ∂_jα_i + [α_i, α_j]` at one point,
/// ordered from `λ⁻²` to `λ²`. With `X = b + c` and `Y = c − b` the connection is
/// `a + λX + λ⁻¹Y`; for circle loops `b` is imaginary (see [`Spectral`]).
pub fn mc_coefficients(field: &ConnectionField, point: usize, i: usize, j: usize) -> [McCoefficient; 5] {
    if field.spectral == Spectral::Real {
        let m = field.m;
        return real_mc_coefficients(field, point, i, j).map(|re| McCoefficient { re, im: Mat::zeros(m, m) });
    }
    let ch = &field.chart;
    let m = field.m;
    let x = |p: usize, d: usize| -> Pair {
        let (b, c) = (field.b(p, d), field.c(p, d));
        match field.spectral {
            Spectral::Real => (b + c, Mat::zeros(m, m)),
            Spectral::Circle => (c.clone(), -b),
        }
    };
    let y = |p: usize, d: usize| -> Pair {
        let (b, c) = (field.b(p, d), field.c(p, d));
        match field.spectral {
            Spectral::Real => (c - b, Mat::zeros(m, m)),
            Spectral::Circle => (c.clone(), b.clone()),
        }
    };
    let curl = |g: &dyn Fn(usize, usize) -> Pair| -> Pair {
        let re = grid_derivative(ch, point, i, |p| g(p, j).0) - grid_derivative(ch, point, j, |p| g(p, i).0);
        let im = grid_derivative(ch, point, i, |p| g(p, j).1) - grid_derivative(ch, point, j, |p| g(p, i).1);
        (re, im)
    };
    let real = |mat: Mat| -> Pair { (mat, Mat::zeros(m, m)) };
    let (ai, aj) = (real(field.a(point, i).clone()), real(field.a(point, j).clone()));
    let da = grid_derivative(ch, point, i, |p| field.a(p, j).clone())
        - grid_derivative(ch, point, j, |p| field.a(p, i).clone());
    let (xi, xj) = (x(point, i), x(point, j));
    let (yi, yj) = (y(point, i), y(point, j));
    let coeffs = [
        cbracket(&yi, &yj),
        cadd(cadd(curl(&y), cbracket(&ai, &yj)), cbracket(&yi, &aj)),
        cadd(cadd(real(da + bracket(&ai.0, &aj.0)), cbracket(&xi, &yj)), cbracket(&yi, &xj)),
        cadd(cadd(curl(&x), cbracket(&ai, &xj)), cbracket(&xi, &aj)),
        cbracket(&xi, &xj),
    ];
    coeffs.map(|(re, im)| McCoefficient { re, im })
}

/// [`mc_coefficients`] for real loops, where every coefficient is real.
fn real_mc_coefficients(field: &ConnectionField, point: usize, i: usize, j: usize) -> [Mat; 5] {
    let ch = &field.chart;
    let x = |p: usize, d: usize| field.b(p, d) + field.c(p, d);
    let y = |p: usize, d: usize| field.c(p, d) - field.b(p, d);
    let curl = |g: &dyn Fn(usize, usize) -> Mat| -> Mat {
        grid_derivative(ch, point, i, |p| g(p, j)) - grid_derivative(ch, point, j, |p| g(p, i))
    };
    let (ai, aj) = (field.a(point, i), field.a(point, j));
    let da = curl(&|p, d| field.a(p, d).clone());
    let (xi, xj) = (x(point, i), x(point, j));
    let (yi, yj) = (y(point, i), y(point, j));
    [
        bracket(&yi, &yj),
        curl(&y) + bracket(ai, &yj) + bracket(&yi, aj),
        da + bracket(ai, aj) + bracket(&xi, &yj) + bracket(&yi, &xj),
        curl(&x) + bracket(ai, &xj) + bracket(&xi, aj),
        bracket(&xi, &xj),
    ]
}

pub fn mc_residual(field: &ConnectionField) -> MCResidualReport {
    let n = field.dim();
    let per_point: Vec<([f64; 5], [(usize, usize, usize); 5])> = (0..field.chart.len())
        .into_par_iter()
        .map(|p| {
            let mut res = [0.0; 5];
            let mut loc = [(p, 0, 0); 5];
            for i in 0..n {
                for j in (i + 1)..n {
                    for (k, c) in mc_coefficients(field, p, i, j).iter().enumerate() {
                        let v = c.norm();
                        if v > res[k] {
                            res[k] = v;
                            loc[k] = (p, i, j);
                        }
                    }
                }
            }
            (res, loc)
        })
        .collect();
    let mut rep = MCResidualReport { residual: [0.0; 5], location: [(0, 0, 0); 5] };
    for (res, loc) in per_point {
        for k in 0..5 {
            if res[k] > rep.residual[k] {
                rep.residual[k] = res[k];
                rep.location[k] = loc[k];
            }
        }
    }
    rep
}

/// Frame `F_λ` at every grid point, `F(basepoint) = I`.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameField {
    pub chart: GridChart,
    pub spectral: Spectral,
    pub lambda: f64,
    pub frames: Vec<Mat>,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct DriftReport {
    /// `max ‖FᵀSF − S‖`
    pub form: f64,
    /// `max ‖[F, J₀]‖`, Lagrangian family only.
    pub complex: f64,
    /// `max |det_ℂ F − 1|`, Lagrangian family only.
    pub determinant: f64,
}

impl DriftReport {
    pub fn max(&self) -> f64 {
        self.form.max(self.complex).max(self.determinant)
    }
}

impl FrameField {
    pub fn at(&self, point: usize) -> &Mat {
        &self.frames[point]
    }

    pub fn drift(&self, spec: &SymmetricPairSpec) -> DriftReport {
        let s = spec.form();
        let mut rep = DriftReport { form: 0.0, complex: 0.0, determinant: 0.0 };
        for f in &self.frames {
            rep.form = rep.form.max((f.transpose() * &s * f - &s).norm());
            if let Some(j0) = &spec.j0 {
                rep.complex = rep.complex.max(bracket(f, j0).norm());
                rep.determinant = rep.determinant.max((complex_det(f) - Complex::new(1.0, 0.0)).norm());
            }
        }
        rep
    }

    /// Fails with [`Error::Drift`] when the structure drift exceeds `tol`.
    pub fn check_drift(&self, spec: &SymmetricPairSpec, tol: f64) -> Result<DriftReport> {
        let rep = self.drift(spec);
        if rep.max() > tol {
            return Err(Error::Drift { drift: rep.max(), tol });
        }
        Ok(rep)
    }
}

/// `det(A + iB)` for the real model `[[A, −B], [B, A]]`.
pub(crate) fn complex_det(f: &Mat) -> Complex<f64> {
    let h = f.nrows() / 2;
    let z = DMatrix::<Complex<f64>>::from_fn(h, h, |r, c| Complex::new(f[(r, c)], f[(h + r, c)]));
    z.determinant()
}

#[derive(Debug, Clone)]
pub struct IntegrationOptions {
    pub substeps: usize,
    /// Refuse data whose MC residual exceeds this.
    pub mc_tol: f64,
    /// Polar retraction onto the orthogonal group after each cell (compact forms only).
    pub retract: bool,
}

impl Default for IntegrationOptions {
    fn default() -> Self {
        IntegrationOptions { substeps: SUBSTEPS, mc_tol: 1e-12, retract: false }
    }
}

/// Values of `α^λ(∂_axis)` along one grid line, interpolated by local cubics.
struct LineInterpolant {
    values: Vec<Mat>,
    h: f64,
}

impl LineInterpolant {
    fn at(&self, cell: usize, frac: f64) -> Mat {
        let n = self.values.len();
        let width = n.min(4);
        let start = cell.saturating_sub(1).min(n - width);
        let t = cell as f64 + frac;
        let mut out = Mat::zeros(self.values[0].nrows(), self.values[0].ncols());
        for a in start..start + width {
            let mut w = 1.0;
            for b in start..start + width {
                if b != a {
                    w *= (t - b as f64) / (a as f64 - b as f64);
                }
            }
            out.zip_apply(&self.values[a], |o, v| *o += w * v);
        }
        out
    }
}

fn rk4_line(f0: &Mat, line: &LineInterpolant, cell: usize, substeps: usize) -> Mat {
    let s = 1.0 / substeps as f64;
    let step = line.h * s;
    let mut f = f0.clone();
    let mut a1 = line.at(cell, 0.0);
    for k in 0..substeps {
        let t0 = k as f64 * s;
        let a0 = a1;
        let am = line.at(cell, t0 + 0.5 * s);
        a1 = line.at(cell, t0 + s);
        let k1 = &f * &a0;
        let k2 = (&f + &k1 * (0.5 * step)) * &am;
        let k3 = (&f + &k2 * (0.5 * step)) * &am;
        let k4 = (&f + &k3 * step) * &a1;
        f += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (step / 6.0);
    }
    f
}

fn polar(f: &Mat) -> Mat {
    let svd = f.clone().svd(true, true);
    svd.u.expect("u") * svd.v_t.expect("v_t")
}

/// Solves `dF = F·α^λ` from the basepoint (all indices zero), sweeping the axes
/// in `order`: first along `order[0]`, then out of every filled point along
/// `order[1]`, and so on.
pub fn integrate_frame(
    field: &ConnectionField,
    lambda: f64,
    order: &[usize],
    opts: &IntegrationOptions,
) -> Result<FrameField> {
    field.weights(lambda)?;
    let ch = &field.chart;
    let n = ch.dim();
    let mut sorted = order.to_vec();
    sorted.sort_unstable();
    if sorted != (0..n).collect::<Vec<_>>() {
        return Err(Error::InvalidGrid(format!("axis order {order:?} is not a permutation of 0..{n}")));
    }
    let mc = mc_residual(field);
    if mc.max() > opts.mc_tol {
        return Err(Error::McViolation { residual: mc.max(), tol: opts.mc_tol });
    }
    let m = field.m;
    let mut frames: Vec<Option<Mat>> = vec![None; ch.len()];
    frames[0] = Some(Mat::identity(m, m));
    let mut filled = vec![0usize];
    for &axis in order {
        let stride = ch.stride(axis);
        let count = ch.counts[axis];
        let mut next = Vec::with_capacity(filled.len() * count);
        for &start in &filled {
            let line = LineInterpolant {
                values: (0..count).map(|i| field.alpha(start + i * stride, axis, lambda)).collect(),
                h: ch.spacing[axis],
            };
            let mut f = frames[start].clone().expect("filled");
            next.push(start);
            for cell in 0..count - 1 {
                f = rk4_line(&f, &line, cell, opts.substeps.max(1));
                if opts.retract {
                    f = polar(&f);
                }
                let p = start + (cell + 1) * stride;
                frames[p] = Some(f.clone());
                next.push(p);
            }
        }
        filled = next;
    }
    Ok(FrameField {
        chart: ch.clone(),
        spectral: field.spectral,
        lambda,
        frames: frames.into_iter().map(|f| f.expect("every point reached")).collect(),
    })
}

/// Max over the grid of `‖F_order − F_reversed‖`.
pub fn path_independence_residual(
    field: &ConnectionField,
    lambda: f64,
    opts: &IntegrationOptions,
) -> Result<f64> {
    let n = field.dim();
    let forward: Vec<usize> = (0..n).collect();
    let backward: Vec<usize> = (0..n).rev().collect();
    let f1 = integrate_frame(field, lambda, &forward, opts)?;
    let f2 = integrate_frame(field, lambda, &backward, opts)?;
    Ok(f1.frames.iter().zip(&f2.frames).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max))
}

/// Max over interior points of `‖F⁻¹∂_iF − α^λ(∂_i)‖` with central differences.
pub fn frame_derivative_residual(frame: &FrameField, field: &ConnectionField) -> f64 {
    let ch = &frame.chart;
    let mut worst = 0.0_f64;
    for p in (0..ch.len()).filter(|&p| ch.is_interior(p)) {
        let inv = frame.at(p).clone().try_inverse().expect("frames are invertible");
        for d in 0..ch.dim() {
            let df = grid_derivative(ch, p, d, |q| frame.at(q).clone());
            worst = worst.max((&inv * df - field.alpha(p, d, frame.lambda)).norm());
        }
    }
    worst
}

/// Constant data from the maximal abelian subspace: `X_i` are the combinations of
/// the abelian basis whose `p′` parts are the top right-singular directions;
/// `b_i`, `c_i` their `PM`, `MM` parts, scaled so `c_i` has unit trace-form norm.
/// Refused with [`Error::RankObstruction`] when no abelian subspace of `u₋` has
/// a rank-`n` projection to `p′`.
pub fn vacuum_solution(spec: &SymmetricPairSpec, chart: GridChart, seed: u64) -> Result<ConnectionField> {
    check_chart(spec, &chart)?;
    let r = rank_oracle(spec, RANK_TRIALS, seed);
    if r.pprime_rank < spec.n {
        return Err(Error::RankObstruction { n: spec.n, rank: r.rank });
    }
    let mm = spec.m * spec.m;
    let mut cols = Mat::zeros(mm, r.abelian_basis.len());
    for (c, x) in r.abelian_basis.iter().enumerate() {
        cols.set_column(c, &flatten(&spec.project(x, Sub::MM)));
    }
    let svd = cols.svd(false, true);
    let v_t = svd.v_t.expect("v_t");
    let mut idx: Vec<usize> = (0..svd.singular_values.len()).collect();
    idx.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    let (mut bs, mut cs) = (Vec::new(), Vec::new());
    for &row in idx.iter().take(spec.n) {
        let mut x = Mat::zeros(spec.m, spec.m);
        for (l, e) in r.abelian_basis.iter().enumerate() {
            x += e * v_t[(row, l)];
        }
        let c = spec.project(&x, Sub::MM);
        let scale = 1.0 / crate::linalg::tr_form(&c, &c).abs().sqrt();
        bs.push(spec.project(&x, Sub::PM) * scale);
        cs.push(c * scale);
    }
    let zeros = vec![Mat::zeros(spec.m, spec.m); spec.n];
    ConnectionField::constant(chart, zeros, bs, cs)
}

/// Constant data spanning an abelian subspace of `u₋` made of pure `PM` and pure
/// `MM` elements. Both `X = b + c` and `Y = c − b` then lie in it, so the data
/// is Maurer–Cartan flat for every λ; it is never regular for `n ≥ 2`, because
/// `p′` has rank one. Each coefficient has Frobenius norm `scale`.
pub fn commuting_vacuum(
    spec: &SymmetricPairSpec,
    chart: GridChart,
    seed: u64,
    scale: f64,
) -> Result<ConnectionField> {
    check_chart(spec, &chart)?;
    let m = spec.m;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let bases = [(Sub::MM, spec.subspace_basis(Sub::MM)), (Sub::PM, spec.subspace_basis(Sub::PM))];
    let mut chosen: Vec<(Sub, Mat)> = Vec::new();
    while chosen.len() < spec.n {
        let mut found = None;
        for (sub, basis) in &bases {
            let cands = commuting_complement(basis, &chosen, m);
            if !cands.is_empty() {
                let mut x = Mat::zeros(m, m);
                for e in &cands {
                    let g: f64 = rng.sample(StandardNormal);
                    x += e * g;
                }
                found = Some((*sub, &x * (scale / x.norm())));
                break;
            }
        }
        match found {
            Some(x) => chosen.push(x),
            None => return Err(Error::RankObstruction { n: spec.n, rank: chosen.len() }),
        }
    }
    let zero = Mat::zeros(m, m);
    let (mut bs, mut cs) = (Vec::new(), Vec::new());
    for (sub, x) in chosen {
        match sub {
            Sub::MM => {
                bs.push(zero.clone());
                cs.push(x);
            }
            _ => {
                bs.push(x);
                cs.push(zero.clone());
            }
        }
    }
    ConnectionField::constant(chart, vec![zero; spec.n], bs, cs)
}

/// Orthonormal elements of `span(basis)` commuting with every chosen matrix and
/// orthogonal to them.
fn commuting_complement(basis: &[Mat], chosen: &[(Sub, Mat)], m: usize) -> Vec<Mat> {
    if basis.is_empty() {
        return Vec::new();
    }
    let d = basis.len();
    let rows = chosen.len() * (m * m + 1);
    let mut a = Mat::zeros(rows.max(1), d);
    for (k, (_, x)) in chosen.iter().enumerate() {
        for (c, e) in basis.iter().enumerate() {
            for (r, v) in bracket(x, e).iter().enumerate() {
                a[(k * (m * m + 1) + r, c)] = *v;
            }
            a[(k * (m * m + 1) + m * m, c)] = x.dot(e);
        }
    }
    let ns = null_space(&a, 1e-9);
    let items: Vec<Mat> = (0..ns.ncols())
        .map(|c| {
            let mut x = Mat::zeros(m, m);
            for (l, e) in basis.iter().enumerate() {
                x += e * ns[(l, c)];
            }
            x
        })
        .collect();
    orthonormalize(&items, 1e-9)
}

fn check_chart(spec: &SymmetricPairSpec, chart: &GridChart) -> Result<()> {
    if chart.dim() != spec.n {
        return Err(Error::InvalidGrid(format!(
            "chart has dimension {} but the pair needs {}",
            chart.dim(),
            spec.n
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct RegularityReport {
    pub pass: bool,
    pub sigma_min: f64,
    pub point: usize,
}

/// Smallest singular value over the grid of the `n` columns `vec(c_i)`.
pub fn regularity_check(field: &ConnectionField, tol: f64) -> RegularityReport {
    let n = field.dim();
    let mm = field.m * field.m;
    let mut rep = RegularityReport { pass: true, sigma_min: f64::INFINITY, point: 0 };
    for p in 0..field.chart.len() {
        let mut cols = Mat::zeros(mm, n);
        for d in 0..n {
            cols.set_column(d, &flatten(field.c(p, d)));
        }
        let s = singular_values(&cols).last().copied().unwrap_or(0.0);
        if s < rep.sigma_min {
            rep.sigma_min = s;
            rep.point = p;
        }
    }
    rep.pass = rep.sigma_min > tol;
    rep
}

/// `exp(Σ x_i A_i(λ))` for constant commuting data, as an independent oracle.
pub fn constant_frame_oracle(field: &ConnectionField, lambda: f64, point: usize) -> Mat {
    let x = field.chart.coord(point);
    let origin = &field.chart.origin;
    let mut gen = Mat::zeros(field.m, field.m);
    for d in 0..field.dim() {
        gen += field.alpha(0, d, lambda) * (x[d] - origin[d]);
    }
    gen.exp()
}
