//! Scenario configuration: TOML sections with defaults and range checks.

use std::sync::Arc;

use evalexpr::{build_operator_tree, ContextWithMutableVariables, DefaultNumericTypes, HashMapContext, Node, Value};
use serde::{Deserialize, Serialize};

use crate::closures::ClosureParams;
use crate::error::{Error, Result};
use crate::hyperbolicity::HyperbolicityGrid;
use crate::potential::{ComponentParams, SeparableAddedMass};
use crate::solver::{Boundary, ExternalPotential, Grid1D, SimulationConfig};
use crate::verify::reduction::{PulseProfile, ReductionConfig};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub potential: PotentialSection,
    #[serde(default)]
    pub closures: ClosuresSection,
    #[serde(default)]
    pub grid: GridSection,
    #[serde(default)]
    pub initial: InitialSection,
    #[serde(default)]
    pub run: RunSection,
    #[serde(default)]
    pub external: ExternalSection,
    #[serde(default)]
    pub hyperbolicity: HyperbolicitySection,
    #[serde(default)]
    pub gibbs: GibbsSection,
    #[serde(default)]
    pub fick: FickSection,
    #[serde(default)]
    pub reduce: ReduceSection,
}

fn one() -> f64 {
    1.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PotentialSection {
    pub gamma1: f64,
    pub gamma2: f64,
    #[serde(default = "one")]
    pub cv1: f64,
    #[serde(default = "one")]
    pub cv2: f64,
    #[serde(default)]
    pub s0_1: f64,
    #[serde(default)]
    pub s0_2: f64,
    #[serde(default = "one")]
    pub k0_1: f64,
    #[serde(default = "one")]
    pub k0_2: f64,
    #[serde(default)]
    pub added_mass: f64,
}

impl PotentialSection {
    pub fn components(&self) -> [ComponentParams; 2] {
        [
            ComponentParams::new(self.gamma1, self.cv1, self.s0_1, self.k0_1),
            ComponentParams::new(self.gamma2, self.cv2, self.s0_2, self.k0_2),
        ]
    }

    pub fn model(&self) -> Result<SeparableAddedMass> {
        let [c1, c2] = self.components();
        c1.validate(0)?;
        c2.validate(1)?;
        if !(self.s0_1.is_finite() && self.s0_2.is_finite()) {
            return Err(Error::Invalid("s0_1 and s0_2 must be finite".into()));
        }
        if !(self.added_mass >= 0.0 && self.added_mass.is_finite()) {
            return Err(Error::Invalid(format!(
                "added_mass must be finite and non-negative, got {}",
                self.added_mass
            )));
        }
        SeparableAddedMass::new(c1, c2, self.added_mass)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClosuresSection {
    #[serde(default)]
    pub k: f64,
    #[serde(default)]
    pub kappa: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundaryKind {
    Periodic,
    Transmissive,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    #[serde(default)]
    pub x_lo: f64,
    #[serde(default = "one")]
    pub x_hi: f64,
    #[serde(default = "default_cells")]
    pub cells: usize,
    #[serde(default = "default_boundary")]
    pub boundary: BoundaryKind,
}

fn default_cells() -> usize {
    200
}

fn default_boundary() -> BoundaryKind {
    BoundaryKind::Periodic
}

impl Default for GridSection {
    fn default() -> Self {
        Self {
            x_lo: 0.0,
            x_hi: 1.0,
            cells: default_cells(),
            boundary: default_boundary(),
        }
    }
}

impl GridSection {
    pub fn grid(&self) -> Result<Grid1D> {
        let boundary = match self.boundary {
            BoundaryKind::Periodic => Boundary::Periodic,
            BoundaryKind::Transmissive => Boundary::Transmissive,
        };
        Grid1D::new(self.x_lo, self.x_hi, self.cells, boundary)
    }
}

/// An initial profile in `x`: a number, an expression in `x` (with `pi`
/// and the `math::` functions), or a piecewise-constant table where
/// `values[i]` applies left of `breakpoints[i]` and the last value beyond.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Profile {
    Constant(f64),
    Expression(String),
    Piecewise(PiecewiseProfile),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PiecewiseProfile {
    pub breakpoints: Vec<f64>,
    pub values: Vec<f64>,
}

pub enum CompiledProfile {
    Constant(f64),
    Expression(Box<Node<DefaultNumericTypes>>, String),
    Piecewise(PiecewiseProfile),
}

impl Profile {
    pub fn compile(&self, name: &str) -> Result<CompiledProfile> {
        match self {
            Profile::Constant(v) => Ok(CompiledProfile::Constant(*v)),
            Profile::Expression(e) => build_operator_tree::<DefaultNumericTypes>(e)
                .map(|n| CompiledProfile::Expression(Box::new(n), name.to_string()))
                .map_err(|err| Error::Invalid(format!("{name}: cannot parse expression {e:?}: {err}"))),
            Profile::Piecewise(p) => {
                if p.values.len() != p.breakpoints.len() + 1 {
                    return Err(Error::Invalid(format!(
                        "{name}: piecewise profile needs one more value than breakpoints"
                    )));
                }
                if p.breakpoints.windows(2).any(|w| !(w[0] < w[1])) {
                    return Err(Error::Invalid(format!(
                        "{name}: breakpoints must be strictly increasing"
                    )));
                }
                Ok(CompiledProfile::Piecewise(p.clone()))
            }
        }
    }
}

impl CompiledProfile {
    pub fn eval(&self, x: f64) -> Result<f64> {
        match self {
            CompiledProfile::Constant(v) => Ok(*v),
            CompiledProfile::Expression(node, name) => {
                let mut ctx = HashMapContext::<DefaultNumericTypes>::new();
                let set = |ctx: &mut HashMapContext<DefaultNumericTypes>, k: &str, v: f64| {
                    ctx.set_value(k.into(), Value::Float(v))
                        .map_err(|e| Error::Invalid(format!("{name}: {e}")))
                };
                set(&mut ctx, "x", x)?;
                set(&mut ctx, "pi", std::f64::consts::PI)?;
                node.eval_number_with_context(&ctx)
                    .map_err(|e| Error::Invalid(format!("{name}: evaluation at x = {x} failed: {e}")))
            }
            CompiledProfile::Piecewise(p) => {
                let i = p.breakpoints.iter().position(|b| x < *b).unwrap_or(p.breakpoints.len());
                Ok(p.values[i])
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialSection {
    #[serde(default = "unit_profile")]
    pub rho1: Profile,
    #[serde(default = "unit_profile")]
    pub rho2: Profile,
    #[serde(default = "zero_profile")]
    pub u1: Profile,
    #[serde(default = "zero_profile")]
    pub u2: Profile,
    #[serde(default = "zero_profile")]
    pub s1: Profile,
    #[serde(default = "zero_profile")]
    pub s2: Profile,
}

fn unit_profile() -> Profile {
    Profile::Constant(1.0)
}

fn zero_profile() -> Profile {
    Profile::Constant(0.0)
}

impl Default for InitialSection {
    fn default() -> Self {
        Self {
            rho1: unit_profile(),
            rho2: unit_profile(),
            u1: zero_profile(),
            u2: zero_profile(),
            s1: zero_profile(),
            s2: zero_profile(),
        }
    }
}

impl InitialSection {
    pub fn compiled(&self) -> Result<[CompiledProfile; 6]> {
        Ok([
            self.rho1.compile("rho1")?,
            self.rho2.compile("rho2")?,
            self.u1.compile("u1")?,
            self.u2.compile("u2")?,
            self.s1.compile("s1")?,
            self.s2.compile("s2")?,
        ])
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    #[serde(default)]
    pub t_end: f64,
    #[serde(default = "default_cfl")]
    pub cfl: f64,
    #[serde(default)]
    pub output_interval: Option<f64>,
    #[serde(default = "one")]
    pub theta0: f64,
    #[serde(default)]
    pub seed: Option<u64>,
}

fn default_cfl() -> f64 {
    0.45
}

impl Default for RunSection {
    fn default() -> Self {
        Self {
            t_end: 0.0,
            cfl: default_cfl(),
            output_interval: None,
            theta0: 1.0,
            seed: None,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum OmegaSpec {
    #[default]
    Zero,
    Linear {
        slope: f64,
    },
    Sine {
        amplitude: f64,
        wavenumber: f64,
    },
}

impl OmegaSpec {
    pub fn potential(&self, name: &str) -> Result<ExternalPotential> {
        let p = match *self {
            OmegaSpec::Zero => ExternalPotential::Zero,
            OmegaSpec::Linear { slope } => ExternalPotential::Linear { slope },
            OmegaSpec::Sine { amplitude, wavenumber } => ExternalPotential::Sine { amplitude, wavenumber },
        };
        let finite = match p {
            ExternalPotential::Zero => true,
            ExternalPotential::Linear { slope } => slope.is_finite(),
            ExternalPotential::Sine { amplitude, wavenumber } => amplitude.is_finite() && wavenumber.is_finite(),
        };
        if !finite {
            return Err(Error::Invalid(format!("{name} parameters must be finite")));
        }
        Ok(p)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExternalSection {
    #[serde(default)]
    pub omega1: OmegaSpec,
    #[serde(default)]
    pub omega2: OmegaSpec,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AxisRange {
    pub min: f64,
    pub max: f64,
    pub count: usize,
}

impl AxisRange {
    pub fn values(&self, name: &str) -> Result<Vec<f64>> {
        if self.count == 0 || !(self.min.is_finite() && self.max.is_finite()) || self.max < self.min {
            return Err(Error::Invalid(format!("{name}: need finite min <= max and count >= 1")));
        }
        if self.count == 1 {
            return Ok(vec![self.min]);
        }
        let step = (self.max - self.min) / (self.count - 1) as f64;
        Ok((0..self.count).map(|i| self.min + step * i as f64).collect())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CriticalSection {
    pub rho1: f64,
    pub rho2: f64,
    pub w_max: f64,
    #[serde(default = "default_samples")]
    pub samples: usize,
}

fn default_samples() -> usize {
    400
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HyperbolicitySection {
    #[serde(default = "default_density_axis")]
    pub rho1: AxisRange,
    #[serde(default = "default_density_axis")]
    pub rho2: AxisRange,
    #[serde(default = "default_w_axis")]
    pub w: AxisRange,
    #[serde(default)]
    pub s1: f64,
    #[serde(default)]
    pub s2: f64,
    #[serde(default)]
    pub critical: Option<CriticalSection>,
}

fn default_density_axis() -> AxisRange {
    AxisRange {
        min: 0.5,
        max: 2.0,
        count: 10,
    }
}

fn default_w_axis() -> AxisRange {
    AxisRange {
        min: 0.0,
        max: 2.0,
        count: 10,
    }
}

impl Default for HyperbolicitySection {
    fn default() -> Self {
        Self {
            rho1: default_density_axis(),
            rho2: default_density_axis(),
            w: default_w_axis(),
            s1: 0.0,
            s2: 0.0,
            critical: None,
        }
    }
}

impl HyperbolicitySection {
    pub fn grid(&self) -> Result<HyperbolicityGrid> {
        let g = HyperbolicityGrid {
            rho1: self.rho1.values("hyperbolicity.rho1")?,
            rho2: self.rho2.values("hyperbolicity.rho2")?,
            w: self.w.values("hyperbolicity.w")?,
            s: [self.s1, self.s2],
        };
        if g.rho1.iter().chain(&g.rho2).any(|r| !(*r > 0.0)) {
            return Err(Error::Invalid("hyperbolicity densities must be positive".into()));
        }
        Ok(g)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GibbsSection {
    #[serde(default = "default_field_sets")]
    pub field_sets: usize,
    #[serde(default = "default_points")]
    pub points: usize,
    #[serde(default = "default_steps")]
    pub steps: Vec<f64>,
}

fn default_field_sets() -> usize {
    20
}

fn default_points() -> usize {
    4
}

fn default_steps() -> Vec<f64> {
    vec![1e-2, 5e-3, 2.5e-3]
}

impl Default for GibbsSection {
    fn default() -> Self {
        Self {
            field_sets: default_field_sets(),
            points: default_points(),
            steps: default_steps(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FickSection {
    #[serde(default)]
    pub sample_times: Vec<f64>,
    #[serde(default = "default_theta_deviation")]
    pub max_theta_deviation: f64,
}

fn default_theta_deviation() -> f64 {
    0.05
}

impl Default for FickSection {
    fn default() -> Self {
        Self {
            sample_times: Vec::new(),
            max_theta_deviation: default_theta_deviation(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReduceSection {
    #[serde(default = "default_resolutions")]
    pub resolutions: Vec<usize>,
    #[serde(default = "default_reference_cells")]
    pub reference_cells: usize,
    #[serde(default = "default_reduce_t_end")]
    pub t_end: f64,
    #[serde(default = "one")]
    pub background: f64,
    #[serde(default = "default_amplitude")]
    pub amplitude: f64,
    #[serde(default = "default_center")]
    pub center: f64,
    #[serde(default = "default_width")]
    pub width: f64,
    #[serde(default)]
    pub velocity: f64,
    #[serde(default)]
    pub entropy: f64,
}

fn default_resolutions() -> Vec<usize> {
    vec![200, 400, 800]
}

fn default_reference_cells() -> usize {
    3200
}

fn default_reduce_t_end() -> f64 {
    0.15
}

fn default_amplitude() -> f64 {
    0.05
}

fn default_center() -> f64 {
    0.5
}

fn default_width() -> f64 {
    0.1
}

impl Default for ReduceSection {
    fn default() -> Self {
        Self {
            resolutions: default_resolutions(),
            reference_cells: default_reference_cells(),
            t_end: default_reduce_t_end(),
            background: 1.0,
            amplitude: default_amplitude(),
            center: default_center(),
            width: default_width(),
            velocity: 0.0,
            entropy: 0.0,
        }
    }
}

/// Parses and validates a scenario. Syntax errors carry the TOML line and
/// column; range violations name the offending key.
pub fn parse_config(text: &str) -> Result<ScenarioConfig> {
    let cfg: ScenarioConfig = toml::from_str(text).map_err(|e| Error::Invalid(e.to_string()))?;
    cfg.validate()?;
    Ok(cfg)
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        self.potential.model()?;
        self.closures()?;
        let grid = self.grid.grid()?;
        for (name, profile) in ["rho1", "rho2", "u1", "u2", "s1", "s2"]
            .iter()
            .zip(self.initial.compiled()?)
        {
            for x in grid.centers() {
                let v = profile.eval(x)?;
                if !v.is_finite() {
                    return Err(Error::Invalid(format!("{name} is not finite at x = {x}")));
                }
            }
        }
        let r = &self.run;
        if !(r.cfl > 0.0 && r.cfl <= 0.9) {
            return Err(Error::Invalid(format!("cfl must lie in (0, 0.9], got {}", r.cfl)));
        }
        if !(r.t_end >= 0.0 && r.t_end.is_finite()) {
            return Err(Error::Invalid(format!(
                "t_end must be finite and non-negative, got {}",
                r.t_end
            )));
        }
        if let Some(dt) = r.output_interval {
            if !(dt > 0.0 && dt.is_finite()) {
                return Err(Error::Invalid(format!("output_interval must be positive, got {dt}")));
            }
        }
        if !(r.theta0 > 0.0 && r.theta0.is_finite()) {
            return Err(Error::Invalid(format!("theta0 must be positive, got {}", r.theta0)));
        }
        self.omega()?;
        self.hyperbolicity.grid()?;
        if let Some(c) = &self.hyperbolicity.critical {
            if !(c.rho1 > 0.0 && c.rho2 > 0.0) {
                return Err(Error::Invalid(
                    "critical.rho1 and critical.rho2 must be positive".into(),
                ));
            }
            if !(c.w_max > 0.0 && c.w_max.is_finite()) || c.samples == 0 {
                return Err(Error::Invalid(
                    "critical.w_max must be positive and samples at least 1".into(),
                ));
            }
        }
        let g = &self.gibbs;
        if g.field_sets == 0 || g.points == 0 {
            return Err(Error::Invalid(
                "gibbs.field_sets and gibbs.points must be at least 1".into(),
            ));
        }
        if g.steps.is_empty() || g.steps.iter().any(|h| !(*h > 0.0 && *h < 0.1)) {
            return Err(Error::Invalid(
                "gibbs.steps must be non-empty and lie in (0, 0.1)".into(),
            ));
        }
        let f = &self.fick;
        if f.sample_times.iter().any(|t| !(*t >= 0.0 && *t <= r.t_end)) {
            return Err(Error::Invalid("fick.sample_times must lie in [0, t_end]".into()));
        }
        if f.sample_times.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::Invalid("fick.sample_times must be strictly increasing".into()));
        }
        if !(f.max_theta_deviation > 0.0) {
            return Err(Error::Invalid("fick.max_theta_deviation must be positive".into()));
        }
        let rd = &self.reduce;
        if rd.resolutions.is_empty()
            || rd
                .resolutions
                .iter()
                .any(|n| *n < 4 || !rd.reference_cells.is_multiple_of(*n))
        {
            return Err(Error::Invalid(
                "reduce.resolutions must be at least 4 and divide reduce.reference_cells".into(),
            ));
        }
        if !(rd.t_end >= 0.0 && rd.t_end.is_finite()) {
            return Err(Error::Invalid("reduce.t_end must be finite and non-negative".into()));
        }
        if !(rd.background > 0.0 && rd.background + rd.amplitude.min(0.0) > 0.0 && rd.width > 0.0) {
            return Err(Error::Invalid(
                "reduce pulse needs positive background, width and density".into(),
            ));
        }
        Ok(())
    }

    pub fn closures(&self) -> Result<ClosureParams> {
        ClosureParams::new(self.closures.k, self.closures.kappa)
    }

    pub fn omega(&self) -> Result<[ExternalPotential; 2]> {
        Ok([
            self.external.omega1.potential("omega1")?,
            self.external.omega2.potential("omega2")?,
        ])
    }

    pub fn simulation(&self) -> Result<SimulationConfig> {
        let mut sim = SimulationConfig::new(self.grid.grid()?, Arc::new(self.potential.model()?));
        sim.closures = self.closures()?;
        sim.omega = self.omega()?;
        sim.cfl = self.run.cfl;
        sim.t_end = self.run.t_end;
        sim.output_interval = self.run.output_interval;
        sim.theta0 = self.run.theta0;
        sim.validate()?;
        Ok(sim)
    }

    /// Single-fluid comparison built from component 1, the grid domain and
    /// boundary, and `omega1`.
    pub fn reduction(&self) -> Result<ReductionConfig> {
        let grid = self.grid.grid()?;
        let rd = &self.reduce;
        Ok(ReductionConfig {
            component: self.potential.components()[0],
            omega: self.omega()?[0],
            boundary: grid.boundary,
            x_lo: grid.x_lo,
            x_hi: grid.x_hi,
            t_end: rd.t_end,
            cfl: self.run.cfl,
            resolutions: rd.resolutions.clone(),
            reference_cells: rd.reference_cells,
            profile: PulseProfile {
                background: rd.background,
                amplitude: rd.amplitude,
                center: rd.center,
                width: rd.width,
                velocity: rd.velocity,
                entropy: rd.entropy,
            },
        })
    }
}
