//! Run configuration: JSON schema and validation.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::capacity::SolverParams;
use crate::criterion::CriterionConfig;
use crate::error::{Error, Result};
use crate::geometry::{make_swiss_cheese, swiss_cheese_centers, ImplicitSet, PointCd, SetExpr};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Criterion,
    Capacity,
    MartinelliCheck,
    CutoffCheck,
    Probe,
}

/// Domain description: a raw expression or a named scenario.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DomainSpec {
    Expr(SetExpr),
    Preset(PresetSpec),
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "kebab-case")]
pub enum PresetSpec {
    /// Open unit ball centered at x.
    UnitBall,
    /// Open unit ball centered at `offset` along the first real axis, so x
    /// sits on its boundary when |offset| = 1.
    TranslatedBall { offset: f64 },
    /// Swiss cheese around x: removed ball n has radius `2^{slope * n}`.
    SwissCheese { radius_log2_slope: f64, n_min: u32, n_max: u32 },
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProbeSpec {
    pub family: FamilySpec,
    #[serde(default = "default_probe_size")]
    pub size: usize,
    pub grid_h: f64,
    /// Half-width of the probe grid box around x; defaults to covering the
    /// domain bounding box.
    #[serde(default)]
    pub grid_radius: Option<f64>,
}

fn default_probe_size() -> usize {
    64
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum FamilySpec {
    Polynomials { max_degree: u32 },
    /// Poles at the removed-ball centers of the swiss-cheese preset.
    SwissCheesePoles { n_min: u32, n_max: u32, max_power: u32 },
    /// Poles marching toward x from outside along `direction` in C.
    BoundaryPoles { direction: Vec<f64>, epsilons: Vec<f64>, max_power: u32 },
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MartinelliSpec {
    pub shape: ShapeSpec,
    #[serde(default = "default_order")]
    pub order: usize,
    pub z_inside: Vec<f64>,
    pub z_outside: Vec<f64>,
    /// Monomial coefficients of the test polynomial: one entry per monomial.
    pub polynomial: Vec<MonomialSpec>,
    #[serde(default = "default_divergence_samples")]
    pub divergence_samples: usize,
    #[serde(default = "default_divergence_step")]
    pub divergence_step: f64,
}

fn default_order() -> usize {
    48
}
fn default_divergence_samples() -> usize {
    100
}
fn default_divergence_step() -> f64 {
    1e-3
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShapeSpec {
    Sphere { center: Vec<f64>, radius: f64 },
    #[serde(rename = "box")]
    Cuboid { lo: Vec<f64>, hi: Vec<f64> },
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MonomialSpec {
    pub powers: Vec<u32>,
    pub re: f64,
    #[serde(default)]
    pub im: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CutoffSpec {
    pub n_min: u32,
    pub n_max: u32,
    pub q: f64,
    #[serde(default = "default_cutoff_nodes")]
    pub nodes_per_axis: usize,
}

fn default_cutoff_nodes() -> usize {
    65
}

/// Top-level run configuration (JSON).
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub mode: Mode,
    pub d: usize,
    #[serde(default)]
    pub domain: Option<DomainSpec>,
    #[serde(default)]
    pub x: Option<Vec<f64>>,
    #[serde(default)]
    pub p: Option<f64>,
    #[serde(default)]
    pub q: Option<f64>,
    #[serde(default)]
    pub n_min: Option<u32>,
    #[serde(default)]
    pub n_max: Option<u32>,
    #[serde(default)]
    pub h0: Option<f64>,
    #[serde(default)]
    pub ladder: Option<Vec<f64>>,
    #[serde(default)]
    pub support_radius: Option<f64>,
    #[serde(default)]
    pub support_radius_factor: Option<f64>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub solver: Option<SolverParams>,
    #[serde(default)]
    pub probe: Option<ProbeSpec>,
    #[serde(default)]
    pub martinelli: Option<MartinelliSpec>,
    #[serde(default)]
    pub cutoff: Option<CutoffSpec>,
}

impl RunConfig {
    pub fn evaluation_point(&self) -> Result<PointCd> {
        match &self.x {
            Some(coords) => {
                let x = PointCd::new(coords.clone())?;
                if x.complex_dim() != self.d {
                    return Err(Error::Config(format!(
                        "x has {} complex coordinates but d = {}",
                        x.complex_dim(),
                        self.d
                    )));
                }
                Ok(x)
            }
            None => Ok(PointCd::origin(self.d)),
        }
    }

    /// Expand the domain description around the evaluation point.
    pub fn domain_set(&self) -> Result<ImplicitSet> {
        let x = self.evaluation_point()?;
        let spec = self
            .domain
            .as_ref()
            .ok_or_else(|| Error::Config("this mode requires a domain".into()))?;
        match spec {
            DomainSpec::Expr(expr) => ImplicitSet::from_expr(expr.clone(), 2 * self.d),
            DomainSpec::Preset(PresetSpec::UnitBall) => ImplicitSet::open_ball(&x, 1.0),
            DomainSpec::Preset(PresetSpec::TranslatedBall { offset }) => {
                let mut center = x.coords().to_vec();
                center[0] += offset;
                ImplicitSet::open_ball(&PointCd::new(center)?, 1.0)
            }
            DomainSpec::Preset(PresetSpec::SwissCheese { radius_log2_slope, n_min, n_max }) => {
                let slope = *radius_log2_slope;
                make_swiss_cheese(&x, |n| f64::exp2(slope * n as f64), *n_min..=*n_max)
            }
        }
    }

    pub fn criterion_config(&self) -> Result<CriterionConfig> {
        let x = self.evaluation_point()?;
        let p = self.p.ok_or_else(|| Error::Config("criterion mode requires p".into()))?;
        let mut cfg = CriterionConfig::new(self.d, x, p);
        if let Some(n) = self.n_min {
            cfg.n_min = n;
        }
        if let Some(n) = self.n_max {
            cfg.n_max = n;
        }
        if let Some(h0) = self.h0 {
            cfg.h0 = h0;
        }
        if let Some(ladder) = &self.ladder {
            cfg.ladder = ladder.clone();
        }
        if let Some(f) = self.support_radius_factor {
            cfg.support_radius_factor = f;
        }
        if let Some(s) = &self.solver {
            cfg.solver = s.clone();
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Build the probe family named by the spec.
    pub fn probe_family(&self) -> Result<Vec<crate::martinelli::TestFunction>> {
        let x = self.evaluation_point()?;
        let spec = self
            .probe
            .as_ref()
            .ok_or_else(|| Error::Config("probe mode requires a probe section".into()))?;
        let fam = match &spec.family {
            FamilySpec::Polynomials { max_degree } => {
                crate::criterion::polynomial_family(self.d, *max_degree, spec.size)
            }
            FamilySpec::SwissCheesePoles { n_min, n_max, max_power } => {
                if self.d != 1 {
                    return Err(Error::Config("swiss-cheese pole families are planar".into()));
                }
                let centers = swiss_cheese_centers(&x, *n_min..=*n_max);
                crate::criterion::reciprocal_pole_family(&centers, *max_power, spec.size)
            }
            FamilySpec::BoundaryPoles { direction, epsilons, max_power } => {
                if self.d != 1 {
                    return Err(Error::Config("boundary pole families are planar".into()));
                }
                if direction.len() != 2 {
                    return Err(Error::Config("direction must be a complex number [re, im]".into()));
                }
                let dir = Complex64::new(direction[0], direction[1]);
                crate::criterion::boundary_pole_family(&x, dir, epsilons, *max_power)
            }
        };
        if fam.is_empty() {
            return Err(Error::Config("probe family is empty".into()));
        }
        Ok(fam)
    }
}
