//! JSON scenario configuration and the bundled scenario library.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::aie::{DelayTerm, PicardOptions, RhsSpec, ScalarMap};
use crate::error::{Error, Result};
use crate::scalar::{lit, Norm, Real};
use crate::semigroup::{GeneratorSpec, SemigroupHandle, SpaceSpec};
use crate::sun_duality::HistoryX;

const BUNDLED: [(&str, &str); 6] = [
    ("trivial", include_str!("../scenarios/trivial.json")),
    ("hutchinson", include_str!("../scenarios/hutchinson.json")),
    ("two_delays_matrix", include_str!("../scenarios/two_delays_matrix.json")),
    ("distributed_kernel", include_str!("../scenarios/distributed_kernel.json")),
    ("delayed_heat", include_str!("../scenarios/delayed_heat.json")),
    ("linear_perturbation_semigroup", include_str!("../scenarios/linear_perturbation_semigroup.json")),
];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpaceConfig {
    pub dim: usize,
    #[serde(default)]
    pub norm: Norm,
    #[serde(default)]
    pub label: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum GeneratorConfig {
    Zero,
    Matrix { rows: Vec<Vec<f64>> },
    DirichletLaplacianSpectral { modes: usize, diffusivity: f64, length: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DelayTermConfig {
    pub matrix: Vec<Vec<f64>>,
    pub delay: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum RhsConfig {
    DiscreteDelays { terms: Vec<DelayTermConfig> },
    /// Kernel matrices at equispaced nodes of `[-h, 0]`.
    DistributedKernel { nodes: Vec<Vec<Vec<f64>>> },
    PointwiseNonlinear { inner: Box<RhsConfig>, map: ScalarMap, scale: f64 },
    Sum { parts: Vec<RhsConfig> },
    Constant { value: Vec<f64> },
}

/// Named families of initial histories on `[-h, 0]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialConfig {
    Constant { value: Vec<f64> },
    /// `φ(θ) = at_zero + θ·slope`.
    LinearRamp { at_zero: Vec<f64>, slope: Vec<f64> },
    /// `φ_i(θ) = amplitude_i sin(frequency θ + phase)`.
    Sine { amplitude: Vec<f64>, frequency: f64, phase: f64 },
    /// Values at the `grid + 1` nodes `θ_0 = −h, …, θ_grid = 0`.
    Samples { values: Vec<Vec<f64>> },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    pub picard_tol: f64,
    pub verify_tol: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Outputs {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub csv: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub json: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub name: String,
    pub space: SpaceConfig,
    pub generator: GeneratorConfig,
    pub delay: f64,
    /// Cells of the history grid.
    pub grid: usize,
    pub rhs: RhsConfig,
    pub initial: InitialConfig,
    pub horizon: f64,
    pub dt: f64,
    /// Lipschitz constant of the right-hand side, when known.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lipschitz: Option<f64>,
    pub tolerances: Tolerances,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub outputs: Outputs,
}

fn matrix<T: Real>(rows: &[Vec<f64>], field: &str) -> Result<DMatrix<T>> {
    let nr = rows.len();
    let nc = rows.first().map_or(0, Vec::len);
    if nr == 0 || rows.iter().any(|r| r.len() != nc) {
        return Err(Error::config(field, "matrix rows must be non-empty and of equal length"));
    }
    if rows.iter().flatten().any(|x| !x.is_finite()) {
        return Err(Error::config(field, "matrix entries must be finite"));
    }
    Ok(DMatrix::from_fn(nr, nc, |i, j| lit(rows[i][j])))
}

fn vector<T: Real>(v: &[f64], dim: usize, field: &str) -> Result<DVector<T>> {
    if v.len() != dim {
        return Err(Error::config(field, format!("expected {dim} entries, got {}", v.len())));
    }
    if v.iter().any(|x| !x.is_finite()) {
        return Err(Error::config(field, "entries must be finite"));
    }
    Ok(DVector::from_iterator(dim, v.iter().map(|x| lit(*x))))
}

fn is_multiple(x: f64, step: f64) -> bool {
    let r = x / step;
    (r - r.round()).abs() <= 1e-9 * r.abs().max(1.0) && r.round() >= 1.0
}

impl RhsConfig {
    pub fn build<T: Real>(&self, dim: usize, field: &str) -> Result<RhsSpec<T>> {
        Ok(match self {
            RhsConfig::DiscreteDelays { terms } => RhsSpec::DiscreteDelays(
                terms
                    .iter()
                    .enumerate()
                    .map(|(k, t)| {
                        Ok(DelayTerm { matrix: matrix(&t.matrix, &format!("{field}.terms[{k}].matrix"))?, delay: lit(t.delay) })
                    })
                    .collect::<Result<_>>()?,
            ),
            RhsConfig::DistributedKernel { nodes } => RhsSpec::DistributedKernel(
                nodes
                    .iter()
                    .enumerate()
                    .map(|(k, n)| matrix(n, &format!("{field}.nodes[{k}]")))
                    .collect::<Result<_>>()?,
            ),
            RhsConfig::PointwiseNonlinear { inner, map, scale } => RhsSpec::PointwiseNonlinear {
                inner: Box::new(inner.build(dim, &format!("{field}.inner"))?),
                map: *map,
                scale: lit(*scale),
            },
            RhsConfig::Sum { parts } => RhsSpec::Sum(
                parts
                    .iter()
                    .enumerate()
                    .map(|(k, p)| p.build(dim, &format!("{field}.parts[{k}]")))
                    .collect::<Result<_>>()?,
            ),
            RhsConfig::Constant { value } => RhsSpec::Constant(vector(value, dim, &format!("{field}.value"))?),
        })
    }
}

impl ScenarioConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| Error::config("<document>", e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn bundled_names() -> Vec<&'static str> {
        BUNDLED.iter().map(|(n, _)| *n).collect()
    }

    pub fn bundled(name: &str) -> Result<Self> {
        let (_, text) = BUNDLED
            .iter()
            .find(|(n, _)| *n == name)
            .ok_or_else(|| Error::config("name", format!("no bundled scenario named `{name}`")))?;
        Self::from_json(text)
    }

    pub fn bundled_all() -> Vec<Self> {
        BUNDLED.iter().map(|(_, t)| Self::from_json(t).expect("bundled scenarios are valid")).collect()
    }

    /// Field-level checks of the configuration.
    pub fn validate(&self) -> Result<()> {
        if self.space.dim == 0 {
            return Err(Error::config("space.dim", "must be positive"));
        }
        self.generator::<f64>()?;
        if !(self.delay > 0.0 && self.delay.is_finite()) {
            return Err(Error::config("delay", "must be positive"));
        }
        if self.grid == 0 {
            return Err(Error::config("grid", "must be positive"));
        }
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return Err(Error::config("horizon", "must be positive"));
        }
        if !(self.dt > 0.0) {
            return Err(Error::config("dt", "must be positive"));
        }
        let per_cell = self.delay / self.grid as f64;
        if !is_multiple(per_cell, self.dt) {
            return Err(Error::config("dt", format!("must divide the history grid step {per_cell}")));
        }
        if !is_multiple(self.horizon, self.dt) {
            return Err(Error::config("horizon", "must be a multiple of dt"));
        }
        let t = &self.tolerances;
        if !(t.picard_tol > 0.0) {
            return Err(Error::config("tolerances.picard_tol", "must be positive"));
        }
        if !(t.verify_tol > 0.0) {
            return Err(Error::config("tolerances.verify_tol", "must be positive"));
        }
        if let Some(l) = self.lipschitz {
            if !(l >= 0.0 && l.is_finite()) {
                return Err(Error::config("lipschitz", "must be non-negative"));
            }
        }
        let rhs = self.rhs::<f64>()?;
        rhs.validate(self.delay, self.space.dim).map_err(|e| Error::config("rhs", e.to_string()))?;
        self.initial::<f64>()?;
        Ok(())
    }

    pub fn space(&self) -> Result<SpaceSpec> {
        SpaceSpec::new(self.space.dim, self.space.norm, self.space.label.clone())
    }

    pub fn generator<T: Real>(&self) -> Result<GeneratorSpec<T>> {
        let n = self.space.dim;
        let gen = match &self.generator {
            GeneratorConfig::Zero => GeneratorSpec::Zero { n },
            GeneratorConfig::Matrix { rows } => GeneratorSpec::Matrix(matrix(rows, "generator.rows")?),
            GeneratorConfig::DirichletLaplacianSpectral { modes, diffusivity, length } => {
                GeneratorSpec::DirichletLaplacianSpectral { modes: *modes, diffusivity: lit(*diffusivity), length: lit(*length) }
            }
        };
        gen.validate().map_err(|e| Error::config("generator", e.to_string()))?;
        if gen.dim() != n {
            return Err(Error::config("generator", format!("dimension {} does not match space.dim {n}", gen.dim())));
        }
        Ok(gen)
    }

    pub fn handle<T: Real>(&self) -> Result<SemigroupHandle<T>> {
        SemigroupHandle::new(self.generator()?, self.space.norm, lit(self.horizon + self.delay))
    }

    pub fn rhs<T: Real>(&self) -> Result<RhsSpec<T>> {
        self.rhs.build(self.space.dim, "rhs")
    }

    pub fn initial<T: Real>(&self) -> Result<HistoryX<T>> {
        let (dim, h, m, norm) = (self.space.dim, lit::<T>(self.delay), self.grid, self.space.norm);
        let field = "initial";
        match &self.initial {
            InitialConfig::Constant { value } => Ok(HistoryX::constant(h, m, vector(value, dim, "initial.value")?, norm)),
            InitialConfig::LinearRamp { at_zero, slope } => {
                let a: DVector<T> = vector(at_zero, dim, "initial.at_zero")?;
                let s: DVector<T> = vector(slope, dim, "initial.slope")?;
                HistoryX::from_fn(h, m, norm, |th| &a + &s * th)
            }
            InitialConfig::Sine { amplitude, frequency, phase } => {
                let a: DVector<T> = vector(amplitude, dim, "initial.amplitude")?;
                let (f, p) = (lit::<T>(*frequency), lit::<T>(*phase));
                HistoryX::from_fn(h, m, norm, |th| &a * (f * th + p).sin())
            }
            InitialConfig::Samples { values } => {
                if values.len() != m + 1 {
                    return Err(Error::config("initial.values", format!("expected {} samples, got {}", m + 1, values.len())));
                }
                let vals = values
                    .iter()
                    .enumerate()
                    .map(|(i, v)| vector(v, dim, &format!("initial.values[{i}]")))
                    .collect::<Result<Vec<_>>>()?;
                HistoryX::new(h, vals, norm)
            }
        }
        .map_err(|e| match e {
            Error::Config { .. } => e,
            other => Error::config(field, other.to_string()),
        })
    }

    pub fn picard_options<T: Real>(&self) -> PicardOptions<T> {
        PicardOptions {
            picard_tol: lit(self.tolerances.picard_tol),
            lipschitz: self.lipschitz.map(lit),
            ..PicardOptions::default()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_scenarios_parse_and_round_trip() {
        assert_eq!(ScenarioConfig::bundled_names().len(), 6);
        for cfg in ScenarioConfig::bundled_all() {
            let again = ScenarioConfig::from_json(&cfg.to_json()).unwrap();
            assert_eq!(again, cfg);
            assert!(cfg.handle::<f64>().is_ok(), "{}", cfg.name);
            assert!(cfg.handle::<f32>().is_ok(), "{}", cfg.name);
        }
        assert!(ScenarioConfig::bundled("nope").is_err());
    }

    #[test]
    fn field_level_errors() {
        let mut cfg = ScenarioConfig::bundled("hutchinson").unwrap();
        cfg.dt = 0.003;
        match cfg.validate() {
            Err(Error::Config { field, .. }) => assert_eq!(field, "dt"),
            other => panic!("{other:?}"),
        }
        let mut cfg = ScenarioConfig::bundled("hutchinson").unwrap();
        cfg.rhs = RhsConfig::Constant { value: vec![1.0, 2.0] };
        assert!(matches!(cfg.validate(), Err(Error::Config { field, .. }) if field == "rhs.value"));
        let mut cfg = ScenarioConfig::bundled("hutchinson").unwrap();
        cfg.tolerances.picard_tol = 0.0;
        assert!(matches!(cfg.validate(), Err(Error::Config { field, .. }) if field == "tolerances.picard_tol"));
        let text = ScenarioConfig::bundled("trivial").unwrap().to_json().replace("\"grid\"", "\"grud\"");
        assert!(matches!(ScenarioConfig::from_json(&text), Err(Error::Config { .. })));
    }

    #[test]
    fn initial_families() {
        let mut cfg = ScenarioConfig::bundled("hutchinson").unwrap();
        cfg.initial = InitialConfig::LinearRamp { at_zero: vec![1.0], slope: vec![2.0] };
        let phi = cfg.initial::<f64>().unwrap();
        assert!((phi.eval(-0.5)[0]).abs() < 1e-15);
        cfg.initial = InitialConfig::Samples { values: vec![vec![0.0]; 3] };
        assert!(matches!(cfg.initial::<f64>(), Err(Error::Config { field, .. }) if field == "initial.values"));
    }
}
