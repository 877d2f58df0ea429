//! Matrix Lie algebra substrate for a pair of commuting involutions.
//!
//! The ambient algebra is `u = {X : XᵀS + SX = 0}` for the diagonal form
//! `S = diag(signature)`, cut down to the `su(n+1)` model (commutes with `J₀`,
//! `tr(J₀X) = 0`) for the Lagrangian family. `τ = Ad_Q` and `σ = Ad_P` split it
//! into four simultaneous eigenspaces:
//!
//! | subspace | dτ | dσ | role |
//! |----------|----|----|------|
//! | `PP` | + | + | `k′`, tangent and normal connections |
//! | `PM` | + | − | `k ∩ u₋`, second fundamental form |
//! | `MP` | − | + | `p′⊥`, normal space |
//! | `MM` | − | − | `p′`, tangent space |

use nalgebra::DVector;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{
    bracket, diag, flatten, null_space, orthonormalize, singular_values, skew_unit, tr_form,
    Mat,
};

/// Default random restarts for [`rank_oracle`].
pub const RANK_TRIALS: usize = 32;
/// Singular-value cutoff used for centralizer null spaces.
pub const NULL_TOL: f64 = 1e-9;
/// Relative tolerance for membership in the ambient algebra.
pub const MEMBERSHIP_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Family {
    SpaceForm,
    LagrangianProjective,
}

impl Family {
    pub fn as_str(self) -> &'static str {
        match self {
            Family::SpaceForm => "space_form",
            Family::LagrangianProjective => "lagrangian",
        }
    }

    pub fn parse(s: &str) -> Option<Family> {
        match s {
            "space_form" | "spaceform" | "SpaceForm" => Some(Family::SpaceForm),
            "lagrangian" | "LagrangianProjective" => Some(Family::LagrangianProjective),
            _ => None,
        }
    }
}

/// One of the four simultaneous eigenspaces of `(dτ, dσ)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Sub {
    PP,
    PM,
    MP,
    MM,
}

impl Sub {
    pub const ALL: [Sub; 4] = [Sub::PP, Sub::PM, Sub::MP, Sub::MM];

    fn signs(self) -> (f64, f64) {
        match self {
            Sub::PP => (1.0, 1.0),
            Sub::PM => (1.0, -1.0),
            Sub::MP => (-1.0, 1.0),
            Sub::MM => (-1.0, -1.0),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SymmetricPairSpec {
    pub family: Family,
    pub n: usize,
    pub k: usize,
    pub m: usize,
    pub p: Mat,
    pub q: Mat,
    pub signature: Vec<f64>,
    /// Ambient metric calibration κ; see `geom::calibrate`.
    pub curvature_scale: f64,
    /// Complex structure of the real `su(n+1)` model (Lagrangian family only).
    pub j0: Option<Mat>,
}

pub fn build_space_form_pair(n: usize, k: usize, hyperbolic: bool) -> Result<SymmetricPairSpec> {
    if n < 2 {
        return Err(Error::InvalidSpec(format!("n must be at least 2, got {n}")));
    }
    if k < 1 {
        return Err(Error::InvalidSpec(format!("k must be at least 1, got {k}")));
    }
    let m = n + k + 1;
    let p: Vec<f64> = (0..m).map(|i| if i < n { 1.0 } else { -1.0 }).collect();
    let q: Vec<f64> = (0..m).map(|i| if i + 1 < m { 1.0 } else { -1.0 }).collect();
    let mut signature = vec![1.0; m];
    if hyperbolic {
        signature[m - 1] = -1.0;
    }
    Ok(SymmetricPairSpec {
        family: Family::SpaceForm,
        n,
        k,
        m,
        p: diag(&p),
        q: diag(&q),
        signature,
        curvature_scale: 1.0,
        j0: None,
    })
}

pub fn build_lagrangian_pair(n: usize, hyperbolic: bool) -> Result<SymmetricPairSpec> {
    if n < 2 {
        return Err(Error::InvalidSpec(format!("n must be at least 2, got {n}")));
    }
    let half = n + 1;
    let m = 2 * half;
    let p: Vec<f64> = (0..m).map(|i| if i < half { 1.0 } else { -1.0 }).collect();
    let q: Vec<f64> = (0..m).map(|i| if i % half == n { -1.0 } else { 1.0 }).collect();
    let mut signature = vec![1.0; m];
    if hyperbolic {
        // real model of the Hermitian form diag(1, .., 1, -1)
        signature[n] = -1.0;
        signature[m - 1] = -1.0;
    }
    let mut j0 = Mat::zeros(m, m);
    for i in 0..half {
        j0[(i, half + i)] = -1.0;
        j0[(half + i, i)] = 1.0;
    }
    Ok(SymmetricPairSpec {
        family: Family::LagrangianProjective,
        n,
        k: n,
        m,
        p: diag(&p),
        q: diag(&q),
        signature,
        curvature_scale: 1.0,
        j0: Some(j0),
    })
}

impl SymmetricPairSpec {
    pub fn from_parts(family: Family, n: usize, k: usize, hyperbolic: bool) -> Result<Self> {
        match family {
            Family::SpaceForm => build_space_form_pair(n, k, hyperbolic),
            Family::LagrangianProjective => {
                if k != n {
                    return Err(Error::InvalidSpec(format!(
                        "Lagrangian family implies k = n, got n={n} k={k}"
                    )));
                }
                build_lagrangian_pair(n, hyperbolic)
            }
        }
    }

    pub fn is_hyperbolic(&self) -> bool {
        self.signature.iter().any(|&s| s < 0.0)
    }

    /// `+1` on the compact side, `-1` on the indefinite one: `ε·⟨·,·⟩` is
    /// positive on `p`.
    pub fn metric_sign(&self) -> f64 {
        if self.is_hyperbolic() {
            -1.0
        } else {
            1.0
        }
    }

    pub fn form(&self) -> Mat {
        diag(&self.signature)
    }

    pub fn dtau(&self, x: &Mat) -> Mat {
        &self.q * x * &self.q
    }

    pub fn dsigma(&self, x: &Mat) -> Mat {
        &self.p * x * &self.p
    }

    /// Positive metric on `p` (and on `p′`, `p′⊥`).
    pub fn p_metric(&self, x: &Mat, y: &Mat) -> f64 {
        self.metric_sign() * tr_form(x, y)
    }

    /// Distance of `x` from the ambient algebra (form-skewness, plus the `su`
    /// conditions for the Lagrangian family).
    pub fn algebra_residual(&self, x: &Mat) -> f64 {
        let s = self.form();
        let mut r = (x.transpose() * &s + &s * x).norm();
        if let Some(j0) = &self.j0 {
            r = r.max(bracket(x, j0).norm());
            r = r.max((j0 * x).trace().abs());
        }
        r
    }

    pub fn validate(&self) -> Result<()> {
        let id = Mat::identity(self.m, self.m);
        let s = self.form();
        let checks = [
            ("P^2 = I", (&self.p * &self.p - &id).norm()),
            ("Q^2 = I", (&self.q * &self.q - &id).norm()),
            ("PQ = QP", bracket(&self.p, &self.q).norm()),
            ("PSP^T = S", (&self.p * &s * self.p.transpose() - &s).norm()),
            ("QSQ^T = S", (&self.q * &s * self.q.transpose() - &s).norm()),
        ];
        for (what, r) in checks {
            if r > 1e-14 {
                return Err(Error::InvalidSpec(format!("{what} violated by {r:.3e}")));
            }
        }
        Ok(())
    }

    /// Frobenius-orthonormal basis of the ambient algebra.
    pub fn algebra_basis(&self) -> Vec<Mat> {
        let m = self.m;
        let s = self.form();
        let mut so = Vec::with_capacity(m * (m - 1) / 2);
        for i in 0..m {
            for j in (i + 1)..m {
                so.push(&s * skew_unit(m, i, j) / std::f64::consts::SQRT_2);
            }
        }
        let Some(j0) = &self.j0 else {
            return so;
        };
        // su-subalgebra: null space of X -> ([X, J0], tr(J0 X)) on so-coordinates
        let rows = m * m + 1;
        let mut constraint = Mat::zeros(rows, so.len());
        for (c, e) in so.iter().enumerate() {
            let br = bracket(e, j0);
            for (r, v) in br.iter().enumerate() {
                constraint[(r, c)] = *v;
            }
            constraint[(m * m, c)] = (j0 * e).trace();
        }
        let ns = null_space(&constraint, 1e-10);
        let items: Vec<Mat> = (0..ns.ncols())
            .map(|c| {
                let mut x = Mat::zeros(m, m);
                for (l, e) in so.iter().enumerate() {
                    x += e * ns[(l, c)];
                }
                x
            })
            .collect();
        orthonormalize(&items, 1e-10)
    }

    /// Projection onto one eigenspace, `(X + ε·QXQ + δ·PXP + εδ·QPXPQ)/4`.
    pub fn project(&self, x: &Mat, sub: Sub) -> Mat {
        let (e, d) = sub.signs();
        let qxq = self.dtau(x);
        let pxp = self.dsigma(x);
        let qpxpq = self.dtau(&pxp);
        (x + qxq * e + pxp * d + qpxpq * (e * d)) * 0.25
    }

    pub fn subspace_basis(&self, sub: Sub) -> Vec<Mat> {
        let projected: Vec<Mat> = self.algebra_basis().iter().map(|b| self.project(b, sub)).collect();
        orthonormalize(&projected, 1e-10)
    }

    /// Dimensions of `(PP, PM, MP, MM)`.
    pub fn dims(&self) -> [usize; 4] {
        Sub::ALL.map(|s| self.subspace_basis(s).len())
    }

    /// Gaussian random element of a subspace.
    pub fn random_in<R: Rng>(&self, sub: Sub, rng: &mut R) -> Mat {
        random_combination(&self.subspace_basis(sub), self.m, rng)
    }

    /// Projector onto the `K`-stabilized complex line (Lagrangian family).
    pub fn base_projector(&self) -> Option<Mat> {
        self.j0.as_ref().map(|_| {
            let mut pi = Mat::zeros(self.m, self.m);
            pi[(self.n, self.n)] = 1.0;
            pi[(self.m - 1, self.m - 1)] = 1.0;
            pi
        })
    }
}

pub(crate) fn random_combination<R: Rng>(basis: &[Mat], m: usize, rng: &mut R) -> Mat {
    let mut x = Mat::zeros(m, m);
    for b in basis {
        let g: f64 = rng.sample(StandardNormal);
        x += b * g;
    }
    x
}

pub fn trace_form(x: &Mat, y: &Mat) -> Result<f64> {
    if x.shape() != y.shape() || x.nrows() != x.ncols() {
        return Err(Error::SizeMismatch { left: x.nrows(), right: y.nrows() });
    }
    Ok(tr_form(x, y))
}

#[derive(Debug, Clone)]
pub struct FourComponents {
    pub x_pp: Mat,
    pub x_pm: Mat,
    pub x_mp: Mat,
    pub x_mm: Mat,
}

impl FourComponents {
    pub fn get(&self, sub: Sub) -> &Mat {
        match sub {
            Sub::PP => &self.x_pp,
            Sub::PM => &self.x_pm,
            Sub::MP => &self.x_mp,
            Sub::MM => &self.x_mm,
        }
    }

    pub fn sum(&self) -> Mat {
        &self.x_pp + &self.x_pm + &self.x_mp + &self.x_mm
    }
}

pub fn decompose(x: &Mat, spec: &SymmetricPairSpec) -> Result<FourComponents> {
    if x.nrows() != spec.m || x.ncols() != spec.m {
        return Err(Error::SizeMismatch { left: x.nrows(), right: spec.m });
    }
    let residual = spec.algebra_residual(x);
    if residual > MEMBERSHIP_TOL * x.norm().max(1.0) {
        return Err(Error::NotInAlgebra { residual });
    }
    Ok(FourComponents {
        x_pp: spec.project(x, Sub::PP),
        x_pm: spec.project(x, Sub::PM),
        x_mp: spec.project(x, Sub::MP),
        x_mm: spec.project(x, Sub::MM),
    })
}

/// Norm of the part of `[x, y]` lying outside `target`.
pub fn bracket_residual(spec: &SymmetricPairSpec, x: &Mat, y: &Mat, target: Sub) -> f64 {
    let b = bracket(x, y);
    (&b - spec.project(&b, target)).norm()
}

/// Worst violation over the random trials, per relation.
#[derive(Debug, Clone, Default, Serialize)]
pub struct BracketReport {
    /// `[k ∩ u₊, p′] ⊂ p′`
    pub kplus_p: f64,
    /// `[k ∩ u₊, p′⊥] ⊂ p′⊥`
    pub kplus_pperp: f64,
    /// `[k ∩ u₋, p′] ⊂ p′⊥`
    pub kminus_p: f64,
    /// `[k ∩ u₋, p′⊥] ⊂ p′`
    pub kminus_pperp: f64,
    /// `[p′, [p′, p′]] ⊂ p′`
    pub triple_p: f64,
    /// `[p′⊥, [p′⊥, p′⊥]] ⊂ p′⊥`
    pub triple_pperp: f64,
}

impl BracketReport {
    pub fn max(&self) -> f64 {
        [
            self.kplus_p,
            self.kplus_pperp,
            self.kminus_p,
            self.kminus_pperp,
            self.triple_p,
            self.triple_pperp,
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }
}

pub fn check_bracket_relations(spec: &SymmetricPairSpec, trials: usize, seed: u64) -> BracketReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let bases = Sub::ALL.map(|s| spec.subspace_basis(s));
    let [pp, pm, mp, mm] = &bases;
    let mut rep = BracketReport::default();
    for _ in 0..trials.max(1) {
        let a = random_combination(pp, spec.m, &mut rng);
        let b = random_combination(pm, spec.m, &mut rng);
        let p1 = random_combination(mm, spec.m, &mut rng);
        let p2 = random_combination(mm, spec.m, &mut rng);
        let p3 = random_combination(mm, spec.m, &mut rng);
        let q1 = random_combination(mp, spec.m, &mut rng);
        let q2 = random_combination(mp, spec.m, &mut rng);
        let q3 = random_combination(mp, spec.m, &mut rng);
        rep.kplus_p = rep.kplus_p.max(bracket_residual(spec, &a, &p1, Sub::MM));
        rep.kplus_pperp = rep.kplus_pperp.max(bracket_residual(spec, &a, &q1, Sub::MP));
        rep.kminus_p = rep.kminus_p.max(bracket_residual(spec, &b, &p1, Sub::MP));
        rep.kminus_pperp = rep.kminus_pperp.max(bracket_residual(spec, &b, &q1, Sub::MM));
        let inner = bracket(&p2, &p3);
        rep.triple_p = rep.triple_p.max(bracket_residual(spec, &p1, &inner, Sub::MM));
        let inner = bracket(&q2, &q3);
        rep.triple_pperp = rep.triple_pperp.max(bracket_residual(spec, &q1, &inner, Sub::MP));
    }
    rep
}

/// Outcome of the randomized maximal-abelian search in `u₋ = PM ⊕ MM`.
#[derive(Debug, Clone)]
pub struct RankResult {
    pub rank: usize,
    /// Orthonormal basis of the abelian subspace whose `p′`-projection is best
    /// conditioned among the restarts reaching `rank`.
    pub abelian_basis: Vec<Mat>,
    /// Rank of the `p′`-projection of `abelian_basis`.
    pub pprime_rank: usize,
    /// Singular values of that projection, descending.
    pub pprime_singular_values: Vec<f64>,
}

fn centralizer(minus: &[Mat], current: &[Mat], m: usize) -> Mat {
    let d = minus.len();
    if current.is_empty() {
        return Mat::identity(d, d);
    }
    let mut rows = Mat::zeros(current.len() * m * m, d);
    for (blk, x) in current.iter().enumerate() {
        for (c, e) in minus.iter().enumerate() {
            let br = bracket(x, e);
            for (r, v) in br.iter().enumerate() {
                rows[(blk * m * m + r, c)] = *v;
            }
        }
    }
    let scale = singular_values(&rows).first().copied().unwrap_or(1.0).max(1.0);
    null_space(&rows, NULL_TOL * scale)
}

fn from_coords(minus: &[Mat], v: &DVector<f64>, m: usize) -> Mat {
    let mut x = Mat::zeros(m, m);
    for (l, e) in minus.iter().enumerate() {
        x += e * v[l];
    }
    x
}

pub fn rank_oracle(spec: &SymmetricPairSpec, trials: usize, seed: u64) -> RankResult {
    let m = spec.m;
    let mut minus = spec.subspace_basis(Sub::PM);
    minus.extend(spec.subspace_basis(Sub::MM));
    let d = minus.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: Option<(usize, usize, f64, Vec<Mat>, Vec<f64>)> = None;

    for _ in 0..trials.max(1) {
        let mut coords: Vec<DVector<f64>> = Vec::new();
        let mut elems: Vec<Mat> = Vec::new();
        loop {
            let cen = centralizer(&minus, &elems, m);
            if cen.ncols() <= coords.len() {
                break;
            }
            let g = DVector::<f64>::from_fn(cen.ncols(), |_, _| rng.sample(StandardNormal));
            let mut v = &cen * g;
            for _ in 0..2 {
                for c in &coords {
                    let proj = v.dot(c);
                    v -= c * proj;
                }
            }
            let nrm = v.norm();
            if nrm < 1e-8 || coords.len() >= d {
                break;
            }
            v /= nrm;
            elems.push(from_coords(&minus, &v, m));
            coords.push(v);
        }
        let r = elems.len();
        let sv = pprime_singular_values(spec, &elems);
        let prank = sv.iter().filter(|&&s| s > NULL_TOL).count();
        let margin = sv.get(spec.n.min(prank).saturating_sub(1)).copied().unwrap_or(0.0);
        let better = match &best {
            None => true,
            Some((br, bp, bm, _, _)) => (r, prank) > (*br, *bp) || ((r, prank) == (*br, *bp) && margin > *bm),
        };
        if better {
            best = Some((r, prank, margin, elems, sv));
        }
    }
    let (rank, pprime_rank, _, abelian_basis, pprime_singular_values) =
        best.expect("at least one trial");
    RankResult { rank, abelian_basis, pprime_rank, pprime_singular_values }
}

fn pprime_singular_values(spec: &SymmetricPairSpec, elems: &[Mat]) -> Vec<f64> {
    if elems.is_empty() {
        return Vec::new();
    }
    let mm = spec.m * spec.m;
    let mut cols = Mat::zeros(mm, elems.len());
    for (c, x) in elems.iter().enumerate() {
        cols.set_column(c, &flatten(&spec.project(x, Sub::MM)));
    }
    singular_values(&cols)
}

/// Classical rank of the symmetric space `U/U₊`.
pub fn closed_form_rank(spec: &SymmetricPairSpec) -> usize {
    match spec.family {
        Family::SpaceForm => spec.n.min(spec.k + 1),
        Family::LagrangianProjective => spec.n,
    }
}
