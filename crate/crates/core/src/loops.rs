//! Laurent polynomials in the spectral parameter, grid charts and the
//! connection data `α^λ(∂_i) = a_i + (λ−λ⁻¹)·b_i + (λ+λ⁻¹)·c_i` living on them.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::liecore::{Sub, SymmetricPairSpec};
use crate::linalg::Mat;

/// Matrix coefficients `A_{-d}, …, A_d`.
#[derive(Debug, Clone, PartialEq)]
pub struct LaurentMatrixPoly {
    pub degree: usize,
    coeffs: Vec<Mat>,
}

impl LaurentMatrixPoly {
    pub fn zero(degree: usize, m: usize) -> Self {
        LaurentMatrixPoly { degree, coeffs: vec![Mat::zeros(m, m); 2 * degree + 1] }
    }

    /// `coeffs[j + degree]` holds `A_j`.
    pub fn from_coeffs(coeffs: Vec<Mat>) -> Result<Self> {
        if coeffs.len() % 2 == 0 {
            return Err(Error::InvalidSpec(format!(
                "a Laurent polynomial needs an odd number of coefficients, got {}",
                coeffs.len()
            )));
        }
        let m = coeffs[0].nrows();
        for c in &coeffs {
            if c.nrows() != m || c.ncols() != m {
                return Err(Error::SizeMismatch { left: m, right: c.nrows() });
            }
        }
        Ok(LaurentMatrixPoly { degree: coeffs.len() / 2, coeffs })
    }

    pub fn size(&self) -> usize {
        self.coeffs[0].nrows()
    }

    pub fn coeff(&self, j: i64) -> Option<&Mat> {
        let idx = j + self.degree as i64;
        if idx < 0 {
            return None;
        }
        self.coeffs.get(idx as usize)
    }

    pub fn coeff_mut(&mut self, j: i64) -> Option<&mut Mat> {
        let idx = j + self.degree as i64;
        if idx < 0 {
            return None;
        }
        self.coeffs.get_mut(idx as usize)
    }

    pub fn eval(&self, lambda: f64) -> Result<Mat> {
        check_lambda(lambda)?;
        let m = self.size();
        let mut acc = Mat::zeros(m, m);
        let d = self.degree as i32;
        for (idx, a) in self.coeffs.iter().enumerate() {
            acc += a * lambda.powi(idx as i32 - d);
        }
        Ok(acc)
    }

    /// Checks `dσ(A_j) = (−1)ʲA_j` and `(−1)ʲ·dτ(A_j) = A_{−j}`; reality holds by
    /// construction.
    pub fn is_twisted(&self, spec: &SymmetricPairSpec, tol: f64) -> TwistCheck {
        let d = self.degree as i64;
        let mut residual = 0.0_f64;
        for j in -d..=d {
            let a = self.coeff(j).expect("index in range");
            let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
            residual = residual.max((spec.dsigma(a) - a * sign).norm());
            let mirror = self.coeff(-j).expect("index in range");
            residual = residual.max((spec.dtau(a) * sign - mirror).norm());
        }
        TwistCheck { pass: residual <= tol, residual }
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct TwistCheck {
    pub pass: bool,
    pub residual: f64,
}

fn check_lambda(lambda: f64) -> Result<()> {
    if lambda == 0.0 {
        return Err(Error::ZeroLambda);
    }
    if !lambda.is_finite() {
        return Err(Error::InvalidLambda(lambda, "not finite".into()));
    }
    Ok(())
}

/// Homothety factor `|(λ+λ⁻¹)/2|`.
pub fn r_lambda(lambda: f64) -> Result<f64> {
    check_lambda(lambda)?;
    Ok(((lambda + 1.0 / lambda) / 2.0).abs())
}

/// Where the loop parameter lives. Real loops are evaluated at `λ ∈ ℝ*` with
/// `α = a + (λ−λ⁻¹)b + (λ+λ⁻¹)c`; circle loops at `λ = e^{it}`, parameterized
/// by the angle `t`, with `α = a + 2 sin t·b + 2 cos t·c`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub enum Spectral {
    #[default]
    Real,
    Circle,
}

impl Spectral {
    pub fn as_str(self) -> &'static str {
        match self {
            Spectral::Real => "real",
            Spectral::Circle => "circle",
        }
    }

    pub fn parse(s: &str) -> Option<Spectral> {
        match s {
            "real" => Some(Spectral::Real),
            "circle" => Some(Spectral::Circle),
            _ => None,
        }
    }

    /// Weights `(μ, ν)` of `b` and `c` at the parameter value.
    pub fn weights(self, param: f64) -> Result<(f64, f64)> {
        match self {
            Spectral::Real => {
                check_lambda(param)?;
                Ok((param - 1.0 / param, param + 1.0 / param))
            }
            Spectral::Circle => {
                if !param.is_finite() {
                    return Err(Error::InvalidLambda(param, "not finite".into()));
                }
                let (s, c) = param.sin_cos();
                Ok((2.0 * s, 2.0 * c))
            }
        }
    }

    /// Homothety factor `|ν|/2`; `r_lambda` for real loops, `|cos t|` on the
    /// circle. Rejects parameters where the metric collapses.
    pub fn homothety(self, param: f64) -> Result<f64> {
        let r = (self.weights(param)?.1 / 2.0).abs();
        if r < 1e-12 {
            return Err(Error::InvalidLambda(param, "the induced metric degenerates".into()));
        }
        Ok(r)
    }

    /// The parameter at which `μ = 0`: the reflective submanifold itself.
    pub fn reference(self) -> f64 {
        match self {
            Spectral::Real => 1.0,
            Spectral::Circle => 0.0,
        }
    }

    /// Whether `param` evaluates to the reference loop, up to the sign of `α`'s
    /// `c` part.
    pub fn is_reference(self, param: f64) -> bool {
        match self {
            Spectral::Real => (param.abs() - 1.0).abs() < 1e-15,
            Spectral::Circle => param.sin().abs() < 1e-15,
        }
    }
}

/// Uniform box grid; points are stored with the last axis varying fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct GridChart {
    pub counts: Vec<usize>,
    pub spacing: Vec<f64>,
    pub origin: Vec<f64>,
}

impl GridChart {
    pub fn new(counts: Vec<usize>, spacing: Vec<f64>, origin: Vec<f64>) -> Result<Self> {
        if counts.is_empty() || counts.len() != spacing.len() || counts.len() != origin.len() {
            return Err(Error::InvalidGrid("counts, spacing and origin must share one length".into()));
        }
        if let Some(n) = counts.iter().find(|&&n| n < 3) {
            return Err(Error::InvalidGrid(format!("each axis needs at least 3 points, got {n}")));
        }
        if spacing.iter().any(|&h| !(h > 0.0 && h.is_finite())) {
            return Err(Error::InvalidGrid("spacing must be positive".into()));
        }
        if origin.iter().any(|o| !o.is_finite()) {
            return Err(Error::InvalidGrid("origin must be finite".into()));
        }
        Ok(GridChart { counts, spacing, origin })
    }

    pub fn uniform(dim: usize, count: usize, h: f64) -> Result<Self> {
        GridChart::new(vec![count; dim], vec![h; dim], vec![0.0; dim])
    }

    pub fn dim(&self) -> usize {
        self.counts.len()
    }

    pub fn len(&self) -> usize {
        self.counts.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn stride(&self, axis: usize) -> usize {
        self.counts[axis + 1..].iter().product()
    }

    pub fn flat(&self, idx: &[usize]) -> usize {
        idx.iter().zip(&self.counts).fold(0, |acc, (&i, &n)| acc * n + i)
    }

    pub fn multi(&self, mut flat: usize) -> Vec<usize> {
        let mut idx = vec![0; self.dim()];
        for axis in (0..self.dim()).rev() {
            idx[axis] = flat % self.counts[axis];
            flat /= self.counts[axis];
        }
        idx
    }

    pub fn coord(&self, flat: usize) -> Vec<f64> {
        self.multi(flat)
            .iter()
            .enumerate()
            .map(|(a, &i)| self.origin[a] + self.spacing[a] * i as f64)
            .collect()
    }

    /// Interior points: at least one step away from every face.
    pub fn is_interior(&self, flat: usize) -> bool {
        self.multi(flat).iter().zip(&self.counts).all(|(&i, &n)| i > 0 && i + 1 < n)
    }
}

/// Second-order finite difference of a grid quantity along `axis`: central in
/// the interior, one-sided `(−3f₀ + 4f₁ − f₂)/2h` on the faces.
pub(crate) fn grid_derivative<T, F>(chart: &GridChart, point: usize, axis: usize, f: F) -> T
where
    F: Fn(usize) -> T,
    T: std::ops::Add<Output = T> + std::ops::Sub<Output = T> + std::ops::Mul<f64, Output = T>,
{
    let s = chart.stride(axis);
    let i = (point / s) % chart.counts[axis];
    let n = chart.counts[axis];
    let inv = 1.0 / (2.0 * chart.spacing[axis]);
    if i == 0 {
        (f(point + s) * 4.0 - f(point) * 3.0 - f(point + 2 * s)) * inv
    } else if i + 1 == n {
        (f(point) * 3.0 - f(point - s) * 4.0 + f(point - 2 * s)) * inv
    } else {
        (f(point + s) - f(point - s)) * inv
    }
}

/// Per point and direction, `(a_i, b_i, c_i) ∈ PP × PM × MM`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConnectionField {
    pub chart: GridChart,
    pub m: usize,
    pub spectral: Spectral,
    a: Vec<Mat>,
    b: Vec<Mat>,
    c: Vec<Mat>,
}

impl ConnectionField {
    pub fn from_fn<F>(chart: GridChart, m: usize, mut f: F) -> Result<Self>
    where
        F: FnMut(&[f64]) -> (Vec<Mat>, Vec<Mat>, Vec<Mat>),
    {
        let n = chart.dim();
        let total = chart.len() * n;
        let (mut a, mut b, mut c) =
            (Vec::with_capacity(total), Vec::with_capacity(total), Vec::with_capacity(total));
        for p in 0..chart.len() {
            let (ap, bp, cp) = f(&chart.coord(p));
            if ap.len() != n || bp.len() != n || cp.len() != n {
                return Err(Error::InvalidGrid(format!(
                    "expected {n} directions per point, got {}/{}/{}",
                    ap.len(),
                    bp.len(),
                    cp.len()
                )));
            }
            for x in ap.iter().chain(&bp).chain(&cp) {
                if x.nrows() != m || x.ncols() != m {
                    return Err(Error::SizeMismatch { left: m, right: x.nrows() });
                }
            }
            a.extend(ap);
            b.extend(bp);
            c.extend(cp);
        }
        Ok(ConnectionField { chart, m, spectral: Spectral::Real, a, b, c })
    }

    pub fn constant(chart: GridChart, a: Vec<Mat>, b: Vec<Mat>, c: Vec<Mat>) -> Result<Self> {
        let m = c.first().map(|x| x.nrows()).unwrap_or(0);
        ConnectionField::from_fn(chart, m, |_| (a.clone(), b.clone(), c.clone()))
    }

    pub fn with_spectral(mut self, spectral: Spectral) -> Self {
        self.spectral = spectral;
        self
    }

    pub fn dim(&self) -> usize {
        self.chart.dim()
    }

    fn slot(&self, point: usize, dir: usize) -> usize {
        point * self.dim() + dir
    }

    pub fn a(&self, point: usize, dir: usize) -> &Mat {
        &self.a[self.slot(point, dir)]
    }

    pub fn b(&self, point: usize, dir: usize) -> &Mat {
        &self.b[self.slot(point, dir)]
    }

    pub fn c(&self, point: usize, dir: usize) -> &Mat {
        &self.c[self.slot(point, dir)]
    }

    pub fn a_mut(&mut self, point: usize, dir: usize) -> &mut Mat {
        let s = self.slot(point, dir);
        &mut self.a[s]
    }

    pub fn b_mut(&mut self, point: usize, dir: usize) -> &mut Mat {
        let s = self.slot(point, dir);
        &mut self.b[s]
    }

    pub fn c_mut(&mut self, point: usize, dir: usize) -> &mut Mat {
        let s = self.slot(point, dir);
        &mut self.c[s]
    }

    /// `(μ, ν)` at `lambda`; see [`Spectral`].
    pub fn weights(&self, lambda: f64) -> Result<(f64, f64)> {
        self.spectral.weights(lambda)
    }

    /// `α^λ(∂_dir) = a + μb + νc` at a grid point. Panics on an invalid
    /// parameter; validate with [`ConnectionField::weights`] first.
    pub fn alpha(&self, point: usize, dir: usize, lambda: f64) -> Mat {
        self.a(point, dir) + self.beta(point, dir, lambda)
    }

    /// `β(∂_dir) = μb + νc`.
    pub fn beta(&self, point: usize, dir: usize, lambda: f64) -> Mat {
        let (mu, nu) = self.weights(lambda).expect("valid loop parameter");
        self.b(point, dir) * mu + self.c(point, dir) * nu
    }

    /// `β∞(∂_dir) = b + c` as a (real, imaginary) pair. Circle loops carry
    /// `b = −i·b_stored`, so there `β∞ = c − i·b`.
    pub fn beta_inf(&self, point: usize, dir: usize) -> (Mat, Mat) {
        let (b, c) = (self.b(point, dir), self.c(point, dir));
        match self.spectral {
            Spectral::Real => (b + c, Mat::zeros(self.m, self.m)),
            Spectral::Circle => (c.clone(), -b),
        }
    }

    /// The direction's connection as a degree-one Laurent polynomial.
    pub fn poly(&self, point: usize, dir: usize) -> LaurentMatrixPoly {
        let (a, b, c) = (self.a(point, dir), self.b(point, dir), self.c(point, dir));
        LaurentMatrixPoly { degree: 1, coeffs: vec![c - b, a.clone(), b + c] }
    }

    /// Multiply every `c_i` by `s` (and leave `a`, `b` alone).
    pub fn scale_c(&mut self, s: f64) {
        for c in &mut self.c {
            *c *= s;
        }
    }
}

/// Worst subspace-membership violation of a connection field.
#[derive(Debug, Clone, Serialize)]
pub struct DegreeReport {
    pub pass: bool,
    pub residual: f64,
    pub point: usize,
    pub dir: usize,
    /// `"a"`, `"b"` or `"c"`.
    pub component: &'static str,
}

pub fn connection_degree_check(
    field: &ConnectionField,
    spec: &SymmetricPairSpec,
    tol: f64,
) -> Result<DegreeReport> {
    if field.m != spec.m {
        return Err(Error::SizeMismatch { left: field.m, right: spec.m });
    }
    let mut rep = DegreeReport { pass: true, residual: 0.0, point: 0, dir: 0, component: "a" };
    for p in 0..field.chart.len() {
        for d in 0..field.dim() {
            let parts = [("a", field.a(p, d), Sub::PP), ("b", field.b(p, d), Sub::PM), ("c", field.c(p, d), Sub::MM)];
            for (name, x, sub) in parts {
                let r = (x - spec.project(x, sub)).norm().max(spec.algebra_residual(x));
                if r > rep.residual {
                    rep = DegreeReport { pass: true, residual: r, point: p, dir: d, component: name };
                }
            }
        }
    }
    rep.pass = rep.residual <= tol;
    Ok(rep)
}
