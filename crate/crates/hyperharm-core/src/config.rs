//! Run configuration, boundary-data files and atomic output.

use crate::functionals::GForm;
use crate::harmonic::{Boundary, HarmonicError, Sph3Coeffs, ZonalExpansion};
use serde::{Deserialize, Serialize};
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("invalid configuration: {0}")]
    Invalid(String),
    #[error("malformed data: {0}")]
    Data(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

impl From<HarmonicError> for ConfigError {
    fn from(e: HarmonicError) -> Self {
        ConfigError::Data(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, ConfigError>;

/// Pass thresholds for the verification suites.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    pub kernel_rel: f64,
    pub unit_mass: f64,
    pub lemma3_abs: f64,
    pub transfer_abs: f64,
    pub calibration: f64,
    pub fd_order_band: f64,
    pub green_rel: f64,
    pub green_harmonic_abs: f64,
    pub identity: f64,
    pub roundtrip: f64,
    pub prop18_stability: f64,
    pub band_bound: f64,
    pub band_drift: f64,
    pub slope_band: f64,
    pub kernel_slope_band: f64,
    pub series_tail: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            kernel_rel: 1e-8,
            unit_mass: 1e-7,
            lemma3_abs: 1e-9,
            transfer_abs: 1e-6,
            calibration: 1e-6,
            fd_order_band: 0.2,
            green_rel: 1e-5,
            green_harmonic_abs: 1e-6,
            identity: 1e-8,
            roundtrip: 1e-6,
            prop18_stability: 0.05,
            band_bound: 1e3,
            band_drift: 0.10,
            slope_band: 0.1,
            kernel_slope_band: 0.15,
            series_tail: 1e-14,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub n: usize,
    /// Truncation degree of random test data.
    pub lmax: usize,
    pub alphas: Vec<f64>,
    pub ps: Vec<f64>,
    /// Exactness degree of boundary grids.
    pub grid_degree: usize,
    pub ladder_depth: usize,
    /// Hard cap on kernel series terms.
    pub series_cap: usize,
    pub tolerances: Tolerances,
    pub seed: u64,
    /// Exponent of `(1 - |x|^2)` in the invariant measure; defaults to n.
    pub measure_exponent: Option<f64>,
    pub g_form: String,
    /// Size of seeded random families.
    pub family: usize,
    pub out: Option<String>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            n: 3,
            lmax: 8,
            alphas: vec![0.25, 0.5],
            ps: vec![0.8, 1.0, 1.5],
            grid_degree: 16,
            ladder_depth: 18,
            series_cap: 4096,
            tolerances: Tolerances::default(),
            seed: 42,
            measure_exponent: None,
            g_form: "squared".into(),
            family: 20,
            out: None,
        }
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let c: RunConfig = serde_json::from_str(text).map_err(|e| ConfigError::Invalid(e.to_string()))?;
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn measure_exponent(&self) -> f64 {
        self.measure_exponent.unwrap_or(self.n as f64)
    }

    pub fn g_form(&self) -> Result<GForm> {
        self.g_form.parse().map_err(|e: crate::functionals::FunctionalError| ConfigError::Invalid(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(ConfigError::Invalid(m));
        if !(3..=12).contains(&self.n) {
            return bad(format!("n = {} outside 3..=12", self.n));
        }
        if self.lmax > 128 {
            return bad(format!("lmax = {} above 128", self.lmax));
        }
        if self.alphas.is_empty() || self.alphas.iter().any(|a| !(*a > 0.0 && *a < 1.0)) {
            return bad("alphas must be non-empty and inside (0, 1)".into());
        }
        if self.ps.is_empty() || self.ps.iter().any(|p| !(*p > 0.0 && p.is_finite())) {
            return bad("ps must be non-empty and positive".into());
        }
        if !(2..=512).contains(&self.grid_degree) {
            return bad(format!("grid_degree = {} outside 2..=512", self.grid_degree));
        }
        if !(4..=40).contains(&self.ladder_depth) {
            return bad(format!("ladder_depth = {} outside 4..=40", self.ladder_depth));
        }
        if !(16..=100_000).contains(&self.series_cap) {
            return bad(format!("series_cap = {} outside 16..=100000", self.series_cap));
        }
        if !(1..=1000).contains(&self.family) {
            return bad(format!("family = {} outside 1..=1000", self.family));
        }
        if let Some(e) = self.measure_exponent {
            if !e.is_finite() {
                return bad("measure_exponent must be finite".into());
            }
        }
        let t = &self.tolerances;
        let tols = [
            t.kernel_rel,
            t.unit_mass,
            t.lemma3_abs,
            t.transfer_abs,
            t.calibration,
            t.fd_order_band,
            t.green_rel,
            t.green_harmonic_abs,
            t.identity,
            t.roundtrip,
            t.prop18_stability,
            t.band_bound,
            t.band_drift,
            t.slope_band,
            t.kernel_slope_band,
            t.series_tail,
        ];
        if tols.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
            return bad("tolerances must be positive and finite".into());
        }
        self.g_form()?;
        Ok(())
    }
}

/// Boundary-data file:
/// `{"n", "kind": "zonal-coeffs" | "zonal-samples" | "sph3-coeffs", "pole", "coeffs" | "samples", "seed"?}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundaryFile {
    pub n: usize,
    pub kind: String,
    #[serde(default)]
    pub pole: Option<Vec<f64>>,
    #[serde(default)]
    pub coeffs: Option<serde_json::Value>,
    #[serde(default)]
    pub samples: Option<Vec<[f64; 2]>>,
    #[serde(default)]
    pub seed: Option<u64>,
}

impl BoundaryFile {
    pub fn parse(text: &str) -> Result<Boundary> {
        let f: BoundaryFile = serde_json::from_str(text).map_err(|e| ConfigError::Data(e.to_string()))?;
        f.to_boundary()
    }

    pub fn load(path: &Path) -> Result<Boundary> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Data(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    fn pole(&self) -> Result<Vec<f64>> {
        self.pole.clone().ok_or_else(|| ConfigError::Data("missing \"pole\"".into()))
    }

    pub fn to_boundary(&self) -> Result<Boundary> {
        if self.n < 3 {
            return Err(ConfigError::Data(format!("n = {} below 3", self.n)));
        }
        match self.kind.as_str() {
            "zonal-coeffs" => {
                let c = self.coeffs.as_ref().ok_or_else(|| ConfigError::Data("missing \"coeffs\"".into()))?;
                let c: Vec<f64> = serde_json::from_value(c.clone()).map_err(|e| ConfigError::Data(format!("coeffs: {e}")))?;
                Ok(Boundary::Zonal(ZonalExpansion::new(self.n, &self.pole()?, c)?))
            }
            "zonal-samples" => {
                let s = self.samples.as_ref().ok_or_else(|| ConfigError::Data("missing \"samples\"".into()))?;
                let s: Vec<(f64, f64)> = s.iter().map(|p| (p[0], p[1])).collect();
                Ok(Boundary::Zonal(ZonalExpansion::from_samples(self.n, &self.pole()?, &s, None)?))
            }
            "sph3-coeffs" => {
                if self.n != 3 {
                    return Err(ConfigError::Data("sph3-coeffs requires n = 3".into()));
                }
                let c = self.coeffs.as_ref().ok_or_else(|| ConfigError::Data("missing \"coeffs\"".into()))?;
                let a: Vec<Vec<f64>> =
                    serde_json::from_value(c.clone()).map_err(|e| ConfigError::Data(format!("coeffs: {e}")))?;
                Ok(Boundary::Sph3(Sph3Coeffs::new(a)?))
            }
            other => Err(ConfigError::Data(format!("unknown kind {other:?}"))),
        }
    }
}

/// Write through a temporary sibling and rename into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    std::fs::create_dir_all(dir)?;
    let name = path.file_name().ok_or_else(|| ConfigError::Invalid(format!("bad output path {}", path.display())))?;
    let tmp = dir.join(format!(".{}.tmp{}", name.to_string_lossy(), std::process::id()));
    std::fs::write(&tmp, bytes)?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_keys_rejected() {
        assert!(RunConfig::from_json(r#"{"n": 4}"#).is_ok());
        assert!(RunConfig::from_json(r#"{"n": 4, "bogus": 1}"#).is_err());
        assert!(RunConfig::from_json(r#"{"n": 2}"#).is_err());
        assert!(RunConfig::from_json(r#"{"g_form": "cubed"}"#).is_err());
    }

    #[test]
    fn boundary_kinds() {
        let z = BoundaryFile::parse(r#"{"n":3,"kind":"zonal-coeffs","pole":[0,0,1],"coeffs":[1,0.5]}"#).unwrap();
        assert!(matches!(z, Boundary::Zonal(_)));
        assert!(BoundaryFile::parse(r#"{"n":3,"kind":"zonal-coeffs","pole":[0,0,1]}"#).is_err());
        let s = BoundaryFile::parse(r#"{"n":3,"kind":"sph3-coeffs","coeffs":[[1],[0,0.5,0]]}"#).unwrap();
        assert!(matches!(s, Boundary::Sph3(_)));
        let t = BoundaryFile::parse(r#"{"n":4,"kind":"zonal-samples","pole":[1,0,0,0],"samples":[[-1,1],[1,1]]}"#).unwrap();
        let Boundary::Zonal(t) = t else { panic!() };
        assert!((t.coeffs[0] - 1.0).abs() < 1e-14);
    }
}
