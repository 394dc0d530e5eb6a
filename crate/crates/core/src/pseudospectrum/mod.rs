//! Resolvent norms of finite sections, pseudospectrum grids and rank-one
//! perturbations that plant eigenvalues.

mod perturb;

pub use perturb::{
    att1_perturbation, lp111_perturbation, sigma0_vs_sigma_check, CellCert, Lp111Case,
    Lp111Outcome, PerturbationCert, Sigma0Report,
};

use std::fmt::Write as _;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::operators::{OperatorSpec, Section};
use crate::opnorm::{section_norm, OpNormConfig};
use crate::spaces::{exponent, Coeffs, SpaceSpec};
use crate::{Error, Result};

/// Sections with `||M||_1 ||M^{-1}||_1` above this are treated as singular.
pub const SINGULAR_COND: f64 = 1e14;

/// Default relative width of the level-set band.
pub const LEVEL_BAND: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PointClass {
    Strict,
    Level,
    Outside,
}

impl PointClass {
    pub fn as_str(self) -> &'static str {
        match self {
            PointClass::Strict => "strict",
            PointClass::Level => "level",
            PointClass::Outside => "outside",
        }
    }

    /// Member of the non-strict set.
    pub fn in_closed(self) -> bool {
        !matches!(self, PointClass::Outside)
    }
}

/// `||(T_N - zI)^{-1}||` together with a unit vector `x` where it is realised.
#[derive(Debug, Clone)]
pub(crate) struct Resolvent {
    pub norm: f64,
    /// `x` and `(T_N - zI)^{-1} x`, absent when the section is singular.
    pub witness: Option<(Coeffs, Coeffs)>,
}

fn norm1(m: &DMatrix<Complex64>) -> f64 {
    (0..m.ncols())
        .map(|j| m.column(j).iter().map(|v| v.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Inverse of the section of `t` on `span{e_0, ..., e_N}`, or `None` when it is
/// singular to working precision.
pub(crate) fn inverse_section(t: &OperatorSpec, order: usize) -> Option<DMatrix<Complex64>> {
    let m = Section::build(t, order + 1).to_dense();
    let inv = m.clone().lu().try_inverse()?;
    let k = norm1(&m) * norm1(&inv);
    if !k.is_finite()
        || k > SINGULAR_COND
        || inv.iter().any(|v| !v.re.is_finite() || !v.im.is_finite())
    {
        return None;
    }
    Some(inv)
}

/// Norm of the inverse of the section of `t`, with its witness.
pub(crate) fn inverse_norm(
    t: &OperatorSpec,
    space: &SpaceSpec,
    order: usize,
    cfg: &OpNormConfig,
) -> Result<Resolvent> {
    let an = space.abs_norm()?;
    let Some(inv) = inverse_section(t, order) else {
        return Ok(Resolvent {
            norm: f64::INFINITY,
            witness: None,
        });
    };
    let sec = Section::from_dense(&inv);
    let sn = section_norm(&sec, space, space, &an, &an, cfg);
    let image = sec.mul(&sn.witness);
    let dim = order + 1;
    Ok(Resolvent {
        norm: sn.value,
        witness: Some((
            Coeffs::from_dense(&sn.witness).with_dim_hint(dim),
            Coeffs::from_dense(&image).with_dim_hint(dim),
        )),
    })
}

fn check_common(t: &OperatorSpec, space: &SpaceSpec, order: usize) -> Result<()> {
    t.validate()?;
    space.validate()?;
    if order < 2 {
        return Err(Error::InvalidParameter(format!(
            "truncation order must be at least 2, got {order}"
        )));
    }
    Ok(())
}

pub(crate) fn resolvent(
    t: &OperatorSpec,
    space: &SpaceSpec,
    z: Complex64,
    order: usize,
    cfg: &OpNormConfig,
) -> Result<Resolvent> {
    check_common(t, space, order)?;
    inverse_norm(&t.shifted(-z), space, order, cfg)
}

/// `||(T_N - zI)^{-1}||` on `span{e_0, ..., e_N}`, `+inf` on the spectrum of the section.
pub fn resolvent_norm(
    t: &OperatorSpec,
    space: &SpaceSpec,
    z: Complex64,
    order: usize,
    cfg: &OpNormConfig,
) -> Result<f64> {
    Ok(resolvent(t, space, z, order, cfg)?.norm)
}

/// Classifies a resolvent norm against `1/eps` with a relative band.
pub fn classify_value(resnorm: f64, eps: f64, band: f64) -> PointClass {
    let level = 1.0 / eps;
    if resnorm > level * (1.0 + band) {
        PointClass::Strict
    } else if (resnorm - level).abs() <= band * level {
        PointClass::Level
    } else {
        PointClass::Outside
    }
}

pub fn classify_point(
    t: &OperatorSpec,
    space: &SpaceSpec,
    z: Complex64,
    eps: f64,
    order: usize,
    band: f64,
    cfg: &OpNormConfig,
) -> Result<PointClass> {
    if !(eps > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "eps must be positive, got {eps}"
        )));
    }
    Ok(classify_value(
        resolvent_norm(t, space, z, order, cfg)?,
        eps,
        band,
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Region {
    pub re_min: f64,
    pub re_max: f64,
    pub im_min: f64,
    pub im_max: f64,
}

impl Region {
    pub fn square(h: f64) -> Self {
        Region {
            re_min: -h,
            re_max: h,
            im_min: -h,
            im_max: h,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = [self.re_min, self.re_max, self.im_min, self.im_max]
            .iter()
            .all(|v| v.is_finite())
            && self.re_min < self.re_max
            && self.im_min < self.im_max;
        if !ok {
            return Err(Error::InvalidParameter(format!("bad region {self:?}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub z: Complex64,
    #[serde(with = "exponent")]
    pub resnorm: f64,
    pub class: PointClass,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PspecGrid {
    pub region: Region,
    /// Points per axis, `(re, im)`.
    pub resolution: (usize, usize),
    pub eps: f64,
    pub order: usize,
    pub band: f64,
    /// Row-major from `(re_min, im_min)`: the real part varies fastest.
    pub cells: Vec<Cell>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSummary {
    pub strict: usize,
    pub level: usize,
    pub outside: usize,
    /// Largest `|z|` over strict cells, zero if there are none.
    pub strict_radius: f64,
    /// Larger of the two grid spacings.
    pub cell_width: f64,
}

impl PspecGrid {
    pub fn spacing(&self) -> (f64, f64) {
        let r = &self.region;
        (
            (r.re_max - r.re_min) / (self.resolution.0 - 1) as f64,
            (r.im_max - r.im_min) / (self.resolution.1 - 1) as f64,
        )
    }

    pub fn summary(&self) -> GridSummary {
        let mut s = GridSummary {
            strict: 0,
            level: 0,
            outside: 0,
            strict_radius: 0.0,
            cell_width: 0.0,
        };
        for c in &self.cells {
            match c.class {
                PointClass::Strict => {
                    s.strict += 1;
                    s.strict_radius = s.strict_radius.max(c.z.norm());
                }
                PointClass::Level => s.level += 1,
                PointClass::Outside => s.outside += 1,
            }
        }
        let (hx, hy) = self.spacing();
        s.cell_width = hx.max(hy);
        s
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("re,im,resnorm,class\n");
        for c in &self.cells {
            let r = if c.resnorm.is_infinite() {
                "inf".to_string()
            } else {
                format!("{:e}", c.resnorm)
            };
            let _ = writeln!(out, "{:e},{:e},{},{}", c.z.re, c.z.im, r, c.class.as_str());
        }
        out
    }
}

/// Evaluates every grid point independently; the cell order does not depend on scheduling.
#[allow(clippy::too_many_arguments)]
pub fn grid_scan(
    t: &OperatorSpec,
    space: &SpaceSpec,
    region: Region,
    resolution: (usize, usize),
    eps: f64,
    order: usize,
    band: f64,
    cfg: &OpNormConfig,
) -> Result<PspecGrid> {
    check_common(t, space, order)?;
    region.validate()?;
    if resolution.0 < 2 || resolution.1 < 2 {
        return Err(Error::InvalidParameter(format!(
            "resolution must be at least 2 per axis, got {resolution:?}"
        )));
    }
    if !(eps > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "eps must be positive, got {eps}"
        )));
    }
    let (nx, ny) = resolution;
    let hx = (region.re_max - region.re_min) / (nx - 1) as f64;
    let hy = (region.im_max - region.im_min) / (ny - 1) as f64;
    let cells = (0..nx * ny)
        .into_par_iter()
        .map(|k| {
            let (i, j) = (k % nx, k / nx);
            let z = Complex64::new(region.re_min + i as f64 * hx, region.im_min + j as f64 * hy);
            let r = inverse_norm(&t.shifted(-z), space, order, cfg)?.norm;
            Ok(Cell {
                z,
                resnorm: r,
                class: classify_value(r, eps, band),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(PspecGrid {
        region,
        resolution,
        eps,
        order,
        band,
        cells,
    })
}
