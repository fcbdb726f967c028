//! Declarative problem files: one flat TOML document with explicit dense
//! matrices and named forcing generators. Unknown keys are rejected.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use fracdelay::symbol::{CircleGrid, DEFAULT_EXCLUSION, DEFAULT_GRID_M};
use fracdelay::{ProblemSpec, ResolventParams, Signal};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub alpha: f64,
    pub gamma: f64,
    pub lambda: usize,
    pub horizon: usize,
    pub dim: usize,
    /// Dense rows of Re(A).
    pub a_re: Vec<Vec<f64>>,
    /// Dense rows of Im(A); zero when omitted.
    #[serde(default)]
    pub a_im: Option<Vec<Vec<f64>>>,
    pub forcing: ForcingConfig,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub contour: ContourConfig,
    #[serde(default)]
    pub mr: MrConfig,
    #[serde(default)]
    pub tolerances: Tolerances,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ForcingConfig {
    /// "delta" | "ones" | "random" | "inline"
    pub kind: String,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub values_re: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    pub values_im: Option<Vec<Vec<f64>>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridConfig {
    pub m: usize,
    pub exclusion_zero: f64,
    pub exclusion_pi: f64,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            m: DEFAULT_GRID_M,
            exclusion_zero: DEFAULT_EXCLUSION,
            exclusion_pi: DEFAULT_EXCLUSION,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ContourConfig {
    pub radius: f64,
    pub nodes: usize,
}

impl Default for ContourConfig {
    fn default() -> Self {
        Self {
            radius: 0.95,
            nodes: 4096,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MrConfig {
    pub p: f64,
    pub trials: usize,
    pub seed: u64,
    pub horizons: Vec<usize>,
}

impl Default for MrConfig {
    fn default() -> Self {
        Self {
            p: 2.0,
            trials: 256,
            seed: 7,
            horizons: vec![128, 256, 512, 1024],
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    pub residual: f64,
    pub equivalence: f64,
    pub identity: f64,
    pub transform: f64,
    pub contour: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            residual: 1e-9,
            equivalence: 1e-9,
            identity: 1e-10,
            transform: 1e-8,
            contour: 1e-8,
        }
    }
}

#[derive(Debug)]
pub enum ConfigError {
    Parse(String),
    Invalid(String),
}

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ConfigError::Parse(m) => write!(f, "config parse error: {m}"),
            ConfigError::Invalid(m) => write!(f, "config invalid: {m}"),
        }
    }
}

impl std::error::Error for ConfigError {}

impl RunConfig {
    pub fn from_path(path: &std::path::Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError::Parse(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<(), ConfigError> {
        let d = self.dim;
        if d == 0 {
            return Err(ConfigError::Invalid("dim must be at least 1".into()));
        }
        let check_rows = |rows: &Vec<Vec<f64>>, name: &str| -> Result<(), ConfigError> {
            if rows.len() != d || rows.iter().any(|r| r.len() != d) {
                return Err(ConfigError::Invalid(format!(
                    "{name} must be a dense {d}x{d} matrix"
                )));
            }
            Ok(())
        };
        check_rows(&self.a_re, "a_re")?;
        if let Some(im) = &self.a_im {
            check_rows(im, "a_im")?;
        }
        match self.forcing.kind.as_str() {
            "delta" | "ones" => {}
            "random" => {
                if self.forcing.seed.is_none() {
                    return Err(ConfigError::Invalid(
                        "random forcing requires a seed".into(),
                    ));
                }
            }
            "inline" => {
                let rows = self.forcing.values_re.as_ref().ok_or_else(|| {
                    ConfigError::Invalid("inline forcing requires values_re".into())
                })?;
                if rows.len() != self.horizon + 1 || rows.iter().any(|r| r.len() != d) {
                    return Err(ConfigError::Invalid(format!(
                        "inline forcing must have {} rows of length {d}",
                        self.horizon + 1
                    )));
                }
                if let Some(im) = &self.forcing.values_im {
                    if im.len() != self.horizon + 1 || im.iter().any(|r| r.len() != d) {
                        return Err(ConfigError::Invalid(
                            "values_im must match values_re in shape".into(),
                        ));
                    }
                }
            }
            other => {
                return Err(ConfigError::Invalid(format!(
                    "unknown forcing kind '{other}' (expected delta | ones | random | inline)"
                )))
            }
        }
        Ok(())
    }

    pub fn a_matrix(&self) -> DMatrix<Complex64> {
        DMatrix::from_fn(self.dim, self.dim, |i, j| {
            let re = self.a_re[i][j];
            let im = self.a_im.as_ref().map_or(0.0, |m| m[i][j]);
            Complex64::new(re, im)
        })
    }

    pub fn params(&self) -> fracdelay::Result<ResolventParams> {
        ResolventParams::new(self.a_matrix(), self.alpha, self.gamma, self.lambda)
    }

    pub fn forcing_signal(&self) -> fracdelay::Result<Signal> {
        let d = self.dim;
        let n = self.horizon;
        match self.forcing.kind.as_str() {
            "delta" => {
                let mut vals = vec![DVector::<Complex64>::zeros(d); n + 1];
                vals[0] = DVector::from_element(d, Complex64::new(1.0, 0.0));
                Signal::new(vals)
            }
            "ones" => Signal::new(vec![
                DVector::from_element(d, Complex64::new(1.0, 0.0));
                n + 1
            ]),
            "random" => {
                let mut rng = ChaCha20Rng::seed_from_u64(self.forcing.seed.expect("validated"));
                Ok(Signal::from_fn(d, n, |_, _| {
                    Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
                }))
            }
            "inline" => {
                let re = self.forcing.values_re.as_ref().expect("validated");
                let im = self.forcing.values_im.as_ref();
                Signal::new(
                    (0..=n)
                        .map(|row| {
                            DVector::from_fn(d, |i, _| {
                                Complex64::new(re[row][i], im.map_or(0.0, |m| m[row][i]))
                            })
                        })
                        .collect(),
                )
            }
            _ => unreachable!("validated"),
        }
    }

    pub fn problem(&self) -> fracdelay::Result<ProblemSpec> {
        ProblemSpec::new(self.params()?, self.forcing_signal()?)
    }

    pub fn circle_grid(&self) -> fracdelay::Result<CircleGrid> {
        CircleGrid::new(
            self.grid.m,
            self.grid.exclusion_zero,
            self.grid.exclusion_pi,
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
alpha = 2.5
gamma = -0.5
lambda = 1
horizon = 16
dim = 1
a_re = [[0.05]]

[forcing]
kind = "delta"
"#;

    #[test]
    fn parses_minimal_config() {
        let cfg = RunConfig::parse(MINIMAL).unwrap();
        assert_eq!(cfg.dim, 1);
        assert_eq!(cfg.grid.m, DEFAULT_GRID_M);
        let f = cfg.forcing_signal().unwrap();
        assert_eq!(f.get(0)[0], Complex64::new(1.0, 0.0));
        assert_eq!(f.get(1)[0], Complex64::new(0.0, 0.0));
    }

    #[test]
    fn rejects_unknown_keys() {
        let bad = format!("{MINIMAL}\nbogus_key = 3\n");
        assert!(RunConfig::parse(&bad).is_err());
    }

    #[test]
    fn rejects_shape_mismatch() {
        let bad = MINIMAL.replace("a_re = [[0.05]]", "a_re = [[0.05, 0.1]]");
        assert!(RunConfig::parse(&bad).is_err());
    }

    #[test]
    fn random_forcing_is_seed_deterministic() {
        let text = MINIMAL.replace("kind = \"delta\"", "kind = \"random\"\nseed = 9");
        let cfg = RunConfig::parse(&text).unwrap();
        let f1 = cfg.forcing_signal().unwrap();
        let f2 = cfg.forcing_signal().unwrap();
        for n in 0..=16 {
            assert_eq!(f1.get(n), f2.get(n));
        }
    }

    #[test]
    fn config_round_trips_through_toml() {
        let cfg = RunConfig::parse(MINIMAL).unwrap();
        let echoed = toml::to_string(&cfg).unwrap();
        let again = RunConfig::parse(&echoed).unwrap();
        assert_eq!(toml::to_string(&again).unwrap(), echoed);
    }
}
