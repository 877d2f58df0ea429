//! Connection data for a run: generated from the configured source or read
//! from a container, with an optional planted defect.

use reflow::geom::complex_structure_p;
use reflow::io::load_connection;
use reflow::solitons::{soliton_field, SolitonParams};
use reflow::zerocurv::{commuting_vacuum, vacuum_solution};
use reflow::{ConnectionField, Family, Mat, Sub, SymmetricPairSpec};

use crate::config::{DefectKind, RunConfig, Source};
use crate::error::CliError;

pub fn spec_of(cfg: &RunConfig) -> Result<SymmetricPairSpec, CliError> {
    Ok(SymmetricPairSpec::from_parts(cfg.family, cfg.n, cfg.k, cfg.hyperbolic)?)
}

/// Builds the field on the configured chart with spacings divided by
/// `shrink`. Files are read as stored and must not be shrunk.
pub fn build_field(cfg: &RunConfig, shrink: f64) -> Result<(SymmetricPairSpec, ConnectionField), CliError> {
    let (spec, mut field) = match cfg.source {
        Source::File => {
            if shrink != 1.0 {
                return Err(CliError::Config("grid adaptation needs generated data, not a file".into()));
            }
            let path = cfg.path.as_ref().expect("validated");
            load_connection(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?
        }
        source => {
            let spec = spec_of(cfg)?;
            let chart = cfg.chart(shrink)?;
            let field = match source {
                Source::Soliton => {
                    let params = SolitonParams { warp: cfg.warp, ..SolitonParams::for_spec_spectral(&spec, cfg.spectral) };
                    soliton_field(&spec, chart, &params)?
                }
                Source::Commuting => commuting_vacuum(&spec, chart, cfg.seed, cfg.scale)?.with_spectral(cfg.spectral),
                Source::Vacuum => vacuum_solution(&spec, chart, cfg.seed)?.with_spectral(cfg.spectral),
                Source::File => unreachable!(),
            };
            (spec, field)
        }
    };
    if let Some(defect) = &cfg.defect {
        plant(&spec, &mut field, defect.kind, defect.amplitude)?;
    }
    Ok((spec, field))
}

fn plant(spec: &SymmetricPairSpec, field: &mut ConnectionField, kind: DefectKind, delta: f64) -> Result<(), CliError> {
    let n = field.dim();
    let points = field.chart.len();
    match kind {
        DefectKind::Mc => {
            let basis = spec.subspace_basis(Sub::PP);
            let Some(e) = basis.first() else {
                return Err(CliError::Config("no room for an mc defect: the tangent isotropy is trivial".into()));
            };
            let e = e / e.norm();
            let centre: Vec<usize> = field.chart.counts.iter().map(|c| c / 2).collect();
            let width = 2.0 * field.chart.spacing[0];
            let mid = field.chart.coord(field.chart.flat(&centre));
            for p in 0..points {
                let x = field.chart.coord(p);
                let r2: f64 = x.iter().zip(&mid).map(|(a, b)| (a - b).powi(2)).sum();
                let w = delta * (-r2 / (2.0 * width * width)).exp();
                *field.a_mut(p, 0) += &e * w;
            }
        }
        DefectKind::Lagrangian => {
            if spec.family != Family::LagrangianProjective || n < 2 {
                return Err(CliError::Config("the lagrangian defect needs the Lagrangian family".into()));
            }
            for p in 0..points {
                let tilt: Mat = complex_structure_p(spec, field.c(p, 0))? * delta;
                *field.c_mut(p, 1) += tilt;
            }
        }
    }
    Ok(())
}
