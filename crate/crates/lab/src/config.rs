//! Experiment configuration: a TOML file with one table per concern and a
//! list of experiments to run. Every field has a desk-scale default, so a
//! minimal config is just `experiments = [...]`.

use serde::{Deserialize, Serialize};
use sqfn_core::{Grid, Result as CoreResult, Weight};

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("config parse error: {0}")]
    Parse(String),
    #[error("invalid config: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    #[serde(default)]
    pub experiments: Vec<String>,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default)]
    pub grid: GridSection,
    #[serde(default)]
    pub weight: WeightSection,
    #[serde(default)]
    pub kernel: KernelSection,
    #[serde(default)]
    pub scales: ScalesSection,
    #[serde(default)]
    pub family: FamilySection,
    #[serde(default)]
    pub params: ParamsSection,
    #[serde(default)]
    pub output: OutputSection,
}

fn default_seed() -> u64 {
    42
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub dim: usize,
    pub half_width: f64,
    pub points_per_axis: usize,
}

impl Default for GridSection {
    fn default() -> Self {
        GridSection {
            dim: 1,
            half_width: 4.0,
            points_per_axis: 129,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightSection {
    pub kind: String,
    #[serde(default = "one")]
    pub value: f64,
    #[serde(default)]
    pub gamma: f64,
}

fn one() -> f64 {
    1.0
}

impl Default for WeightSection {
    fn default() -> Self {
        WeightSection {
            kind: "constant".into(),
            value: 1.0,
            gamma: 0.0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelSection {
    pub alpha: f64,
    pub count: usize,
}

impl Default for KernelSection {
    fn default() -> Self {
        KernelSection {
            alpha: 1.0,
            count: 6,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScalesSection {
    pub count: usize,
}

impl Default for ScalesSection {
    fn default() -> Self {
        ScalesSection { count: 24 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilySection {
    pub centers: usize,
    pub radii: usize,
}

impl Default for FamilySection {
    fn default() -> Self {
        FamilySection {
            centers: 9,
            radii: 8,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsSection {
    pub p: f64,
    pub lambda: f64,
    pub korder: u32,
    pub kappa: f64,
    /// BMO symbol for commutator experiments: "linear" or "log".
    pub symbol: String,
    pub beta: Vec<f64>,
    pub j_list: Vec<u32>,
    pub t_horizon: f64,
}

impl Default for ParamsSection {
    fn default() -> Self {
        ParamsSection {
            p: 2.0,
            lambda: 4.0,
            korder: 1,
            kappa: 0.5,
            symbol: "linear".into(),
            beta: vec![2.0, 4.0],
            j_list: vec![1, 2, 3],
            t_horizon: 256.0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub dir: String,
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection { dir: "out".into() }
    }
}

impl Config {
    pub fn from_toml_str(text: &str) -> Result<Self, Error> {
        let cfg: Config = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &std::path::Path) -> Result<Self, Error> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn validate(&self) -> Result<(), Error> {
        let known = crate::experiments::EXPERIMENT_NAMES;
        for name in &self.experiments {
            if !known.contains(&name.as_str()) {
                return Err(Error::Invalid(format!(
                    "unknown experiment '{name}'; available: {}",
                    known.join(", ")
                )));
            }
        }
        if self.grid.dim != 1 && self.grid.dim != 2 {
            return Err(Error::Invalid(format!(
                "grid.dim must be 1 or 2, got {}",
                self.grid.dim
            )));
        }
        if self.grid.points_per_axis < 9 || self.grid.points_per_axis.is_multiple_of(2) {
            return Err(Error::Invalid(format!(
                "grid.points_per_axis must be odd and >= 9, got {}",
                self.grid.points_per_axis
            )));
        }
        if !(self.grid.half_width > 0.0) {
            return Err(Error::Invalid("grid.half_width must be positive".into()));
        }
        if !(self.kernel.alpha > 0.0 && self.kernel.alpha <= 1.0) {
            return Err(Error::Invalid(format!(
                "kernel.alpha must be in (0, 1], got {}",
                self.kernel.alpha
            )));
        }
        if self.kernel.count < 4 {
            return Err(Error::Invalid("kernel.count must be at least 4".into()));
        }
        if self.scales.count < 2 {
            return Err(Error::Invalid("scales.count must be at least 2".into()));
        }
        if self.family.centers < 1 || self.family.radii < 2 {
            return Err(Error::Invalid(
                "family needs at least 1 center and 2 radii".into(),
            ));
        }
        match self.weight.kind.as_str() {
            "constant" => {
                if !(self.weight.value > 0.0) {
                    return Err(Error::Invalid("weight.value must be positive".into()));
                }
            }
            "power" => {
                if self.weight.gamma <= -(self.grid.dim as f64) {
                    return Err(Error::Invalid(format!(
                        "weight.gamma must exceed -n for local integrability, got {}",
                        self.weight.gamma
                    )));
                }
            }
            other => {
                return Err(Error::Invalid(format!(
                    "weight.kind must be 'constant' or 'power', got '{other}'"
                )));
            }
        }
        if !(self.params.p >= 1.0) {
            return Err(Error::Invalid("params.p must be at least 1".into()));
        }
        if !(1..=3).contains(&self.params.korder) {
            return Err(Error::Invalid("params.korder must be 1, 2 or 3".into()));
        }
        if !(self.params.kappa > 0.0 && self.params.kappa < 1.0) {
            return Err(Error::Invalid("params.kappa must be in (0, 1)".into()));
        }
        if self.params.symbol != "linear" && self.params.symbol != "log" {
            return Err(Error::Invalid(
                "params.symbol must be 'linear' or 'log'".into(),
            ));
        }
        if self.params.beta.iter().any(|&b| b < 1.0) {
            return Err(Error::Invalid("params.beta entries must be >= 1".into()));
        }
        // the series route of the g* ball estimate needs the decay exponent
        // above the aperture-scaling threshold; other g* uses only need the
        // discrete integrability bound lambda > 1
        let threshold = 3.0 + self.kernel.alpha / self.grid.dim as f64;
        if self.experiments.iter().any(|e| e == "ball-estimate-gstar")
            && !(self.params.lambda > threshold)
        {
            return Err(Error::Invalid(format!(
                "params.lambda must exceed 3 + alpha/n = {threshold} for the g* ball estimate, got {}",
                self.params.lambda
            )));
        }
        if self.experiments.iter().any(|e| e == "morrey-boundedness")
            && !(self.params.lambda > 1.0)
        {
            return Err(Error::Invalid(format!(
                "params.lambda must exceed 1 for the g* proxy, got {}",
                self.params.lambda
            )));
        }
        Ok(())
    }

    pub fn build_grid(&self) -> CoreResult<Grid> {
        Grid::new(
            self.grid.dim,
            self.grid.half_width,
            self.grid.points_per_axis,
        )
    }

    /// A refinement companion with roughly half the resolution.
    pub fn build_coarse_grid(&self) -> CoreResult<Grid> {
        let m = (self.grid.points_per_axis - 1) / 2 + 1;
        Grid::new(self.grid.dim, self.grid.half_width, m.max(9) | 1)
    }

    pub fn build_weight(&self, grid: Grid) -> CoreResult<Weight> {
        match self.weight.kind.as_str() {
            "power" => Weight::power(grid, self.weight.gamma),
            _ => Weight::constant(grid, self.weight.value),
        }
    }
}
