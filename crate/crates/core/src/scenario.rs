//! Scenario configuration: TOML documents and built-in presets.
//!
//! Only `schema_version` is mandatory; everything else falls back to the
//! defaults of the 5 MHz, 25-PRB, 16-QAM carrier with the `sem1` mask and
//! three SSP sweeps:
//!
//! ```toml
//! schema_version = 1
//! name = "example"          # default "scenario"
//! seed = 1                  # default 1
//! n_symbols = 200           # default 200
//! constellation = 16        # 4, 16 or 64
//! output_dir = "out"        # optional, --out overrides
//!
//! [carrier]
//! fft_size = 512
//! cp_len = 36
//! n_allocated = 300         # centred block; or `allocated = [...]` grid indices
//! subcarrier_spacing_hz = 15000.0
//! oversampling = 2
//!
//! [mask]                    # exactly one of preset / file / inline lists
//! preset = "sem1"
//! # file = "mask.csv"
//! # frequencies_khz = [...] and levels_dbm_per_100khz = [...]
//! reference_dbm_per_100khz = -21.5
//!
//! [algorithm]
//! kind = "ssp"              # none, nsp, pocs, admm, ssp, oracle
//! n_iter = 3                # SSP sweeps
//! max_iter = 3000           # POCS / ADMM budget
//! rho = 10.0
//! # tol_db = 0.01           # early stop; absent means fixed budgets
//! # ordering = [...]        # permutation of the mask points
//! # phase = { kind = "fixed", phi = 0.0 }
//! oracle_max_iter = 100000
//! oracle_tol = 1e-13
//!
//! [calibration]
//! n_symbols = 10000
//! seed = 0
//!
//! [metrics]
//! rbw_hz = 100000.0
//! # channel_spacing_hz = 5e6
//! # measurement_bw_hz = 4.5e6
//! ```

use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::leakage::{MaskEntry, MaskTable};
use crate::metrics::AclrGeometry;
use crate::precoders::PhaseReference;
use crate::signal::{CarrierConfig, Constellation};

pub const SCHEMA_VERSION: u32 = 1;

const PRESETS: &[(&str, &str)] = &[
    ("sem1_16qam", include_str!("../presets/scenarios/sem1_16qam.toml")),
    ("sem2_16qam", include_str!("../presets/scenarios/sem2_16qam.toml")),
];

/// Names of the built-in scenarios.
pub fn scenario_presets() -> impl Iterator<Item = &'static str> {
    PRESETS.iter().map(|(n, _)| *n)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AlgorithmKind {
    None,
    Nsp,
    Pocs,
    Admm,
    Ssp,
    Oracle,
}

impl AlgorithmKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::None => "none",
            Self::Nsp => "nsp",
            Self::Pocs => "pocs",
            Self::Admm => "admm",
            Self::Ssp => "ssp",
            Self::Oracle => "oracle",
        }
    }

    pub fn is_iterative(self) -> bool {
        matches!(self, Self::Pocs | Self::Admm | Self::Ssp | Self::Oracle)
    }
}

impl fmt::Display for AlgorithmKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AlgorithmParams {
    pub kind: AlgorithmKind,
    pub max_iter: usize,
    pub rho: f64,
    pub tol_db: Option<f64>,
    pub n_iter: usize,
    pub ordering: Option<Vec<usize>>,
    pub phase: PhaseReference,
    pub oracle_max_iter: usize,
    pub oracle_tol: f64,
}

impl AlgorithmParams {
    /// `tol_db` as passed to the precoders (`-∞` for fixed budgets).
    pub fn stop_db(&self) -> f64 {
        self.tol_db.unwrap_or(f64::NEG_INFINITY)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CalibrationParams {
    pub n_symbols: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MetricsParams {
    pub rbw_hz: f64,
    pub aclr: AclrGeometry,
}

/// A validated scenario with every default resolved.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Scenario {
    pub schema_version: u32,
    pub name: String,
    pub seed: u64,
    pub n_symbols: usize,
    pub output_dir: Option<PathBuf>,
    pub constellation: Constellation,
    pub carrier: CarrierConfig,
    pub mask: MaskTable,
    pub reference_dbm_per_100khz: f64,
    pub algorithm: AlgorithmParams,
    pub calibration: CalibrationParams,
    pub metrics: MetricsParams,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    schema_version: u32,
    name: Option<String>,
    seed: Option<u64>,
    n_symbols: Option<usize>,
    output_dir: Option<PathBuf>,
    constellation: Option<Constellation>,
    #[serde(default)]
    carrier: CarrierFile,
    #[serde(default)]
    mask: MaskFile,
    #[serde(default)]
    algorithm: AlgorithmFile,
    #[serde(default)]
    calibration: CalibrationFile,
    #[serde(default)]
    metrics: MetricsFile,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct CarrierFile {
    fft_size: Option<usize>,
    cp_len: Option<usize>,
    n_allocated: Option<usize>,
    allocated: Option<Vec<usize>>,
    subcarrier_spacing_hz: Option<f64>,
    oversampling: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct MaskFile {
    preset: Option<String>,
    file: Option<PathBuf>,
    frequencies_khz: Option<Vec<f64>>,
    levels_dbm_per_100khz: Option<Vec<f64>>,
    reference_dbm_per_100khz: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct AlgorithmFile {
    kind: Option<AlgorithmKind>,
    max_iter: Option<usize>,
    rho: Option<f64>,
    tol_db: Option<f64>,
    n_iter: Option<usize>,
    ordering: Option<Vec<usize>>,
    phase: Option<PhaseReference>,
    oracle_max_iter: Option<usize>,
    oracle_tol: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct CalibrationFile {
    n_symbols: Option<usize>,
    seed: Option<u64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct MetricsFile {
    rbw_hz: Option<f64>,
    channel_spacing_hz: Option<f64>,
    measurement_bw_hz: Option<f64>,
}

fn positive(field: &str, v: f64) -> Result<f64> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(Error::config(field, format!("{v} must be a positive number")))
    }
}

fn at_least_one(field: &str, v: usize) -> Result<usize> {
    if v >= 1 {
        Ok(v)
    } else {
        Err(Error::config(field, "must be at least 1"))
    }
}

/// Parses a scenario document. Relative mask paths resolve against the
/// current directory.
pub fn parse_scenario(text: &str) -> Result<Scenario> {
    parse_scenario_in(text, Path::new("."))
}

/// Parses a scenario document whose relative paths resolve against `base`.
pub fn parse_scenario_in(text: &str, base: &Path) -> Result<Scenario> {
    let file: ScenarioFile = toml::from_str(text).map_err(|e| Error::ConfigParse(e.to_string()))?;
    if file.schema_version != SCHEMA_VERSION {
        return Err(Error::config(
            "schema_version",
            format!("unsupported version {}, expected {SCHEMA_VERSION}", file.schema_version),
        ));
    }

    let c = &file.carrier;
    let fft_size = c.fft_size.unwrap_or(512);
    let cp_len = c.cp_len.unwrap_or(36);
    let scs = positive("carrier.subcarrier_spacing_hz", c.subcarrier_spacing_hz.unwrap_or(15e3))?;
    let os = at_least_one("carrier.oversampling", c.oversampling.unwrap_or(2))?;
    let carrier = match (&c.allocated, c.n_allocated) {
        (Some(_), Some(_)) => {
            return Err(Error::config("carrier.allocated", "give either allocated or n_allocated, not both"))
        }
        (Some(list), None) => CarrierConfig::new(fft_size, cp_len, list.clone(), scs, os)?,
        (None, n) => CarrierConfig::centered(fft_size, cp_len, n.unwrap_or(300), scs, os)?,
    };

    let m = &file.mask;
    let mask = match (&m.preset, &m.file, &m.frequencies_khz, &m.levels_dbm_per_100khz) {
        (Some(p), None, None, None) => MaskTable::preset(p)?,
        (None, Some(path), None, None) => {
            let path = base.join(path);
            let text = std::fs::read_to_string(&path).map_err(|e| {
                Error::config("mask.file", format!("cannot read {}: {e}", path.display()))
            })?;
            MaskTable::parse(path.display().to_string(), &text)?
        }
        (None, None, Some(f), Some(l)) => {
            if f.len() != l.len() {
                return Err(Error::config(
                    "mask.levels_dbm_per_100khz",
                    format!("{} levels for {} frequencies", l.len(), f.len()),
                ));
            }
            MaskTable {
                label: "inline".into(),
                entries: f
                    .iter()
                    .zip(l)
                    .map(|(&frequency_khz, &mask_dbm_per_100khz)| MaskEntry {
                        frequency_khz,
                        mask_dbm_per_100khz,
                    })
                    .collect(),
            }
        }
        (None, None, None, None) => MaskTable::preset("sem1")?,
        _ => {
            return Err(Error::config(
                "mask",
                "use exactly one of preset, file, or frequencies_khz with levels_dbm_per_100khz",
            ))
        }
    };
    if mask.entries.iter().any(|e| !e.frequency_khz.is_finite() || !e.mask_dbm_per_100khz.is_finite()) {
        return Err(Error::config("mask", "frequencies and levels must be finite"));
    }
    let reference = m.reference_dbm_per_100khz.unwrap_or(-21.5);
    if !reference.is_finite() {
        return Err(Error::config("mask.reference_dbm_per_100khz", "must be finite"));
    }

    let a = &file.algorithm;
    let ordering = match &a.ordering {
        Some(o) => {
            let mut seen = vec![false; mask.entries.len()];
            let ok = o.len() == seen.len() && o.iter().all(|&i| i < seen.len() && !std::mem::replace(&mut seen[i], true));
            if !ok {
                return Err(Error::config(
                    "algorithm.ordering",
                    format!("must be a permutation of 0..{}", mask.entries.len()),
                ));
            }
            Some(o.clone())
        }
        None => None,
    };
    if let Some(t) = a.tol_db {
        if !t.is_finite() {
            return Err(Error::config("algorithm.tol_db", "must be finite"));
        }
    }
    let algorithm = AlgorithmParams {
        kind: a.kind.unwrap_or(AlgorithmKind::Ssp),
        max_iter: at_least_one("algorithm.max_iter", a.max_iter.unwrap_or(3000))?,
        rho: positive("algorithm.rho", a.rho.unwrap_or(10.0))?,
        tol_db: a.tol_db,
        n_iter: at_least_one("algorithm.n_iter", a.n_iter.unwrap_or(3))?,
        ordering,
        phase: a.phase.unwrap_or_default(),
        oracle_max_iter: at_least_one("algorithm.oracle_max_iter", a.oracle_max_iter.unwrap_or(100_000))?,
        oracle_tol: positive("algorithm.oracle_tol", a.oracle_tol.unwrap_or(1e-13))?,
    };
    if let PhaseReference::Fixed(phi) = algorithm.phase {
        if !phi.is_finite() {
            return Err(Error::config("algorithm.phase", "phi must be finite"));
        }
    }

    let calibration = CalibrationParams {
        n_symbols: at_least_one("calibration.n_symbols", file.calibration.n_symbols.unwrap_or(10_000))?,
        seed: file.calibration.seed.unwrap_or(0),
    };

    let mt = &file.metrics;
    let default_geom = AclrGeometry::for_carrier(&carrier);
    let metrics = MetricsParams {
        rbw_hz: positive("metrics.rbw_hz", mt.rbw_hz.unwrap_or(100e3))?,
        aclr: AclrGeometry {
            channel_spacing_hz: positive(
                "metrics.channel_spacing_hz",
                mt.channel_spacing_hz.unwrap_or(default_geom.channel_spacing_hz),
            )?,
            measurement_bw_hz: positive(
                "metrics.measurement_bw_hz",
                mt.measurement_bw_hz.unwrap_or(default_geom.measurement_bw_hz),
            )?,
        },
    };

    Ok(Scenario {
        schema_version: file.schema_version,
        name: file.name.unwrap_or_else(|| "scenario".into()),
        seed: file.seed.unwrap_or(1),
        n_symbols: at_least_one("n_symbols", file.n_symbols.unwrap_or(200))?,
        output_dir: file.output_dir,
        constellation: file.constellation.unwrap_or(Constellation::Qam16),
        carrier,
        mask,
        reference_dbm_per_100khz: reference,
        algorithm,
        calibration,
        metrics,
    })
}

/// A built-in scenario by name.
pub fn preset_scenario(name: &str) -> Result<Scenario> {
    PRESETS
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, text)| parse_scenario(text))
        .unwrap_or_else(|| Err(Error::UnknownPreset(name.to_string())))
}

/// The text of a built-in scenario.
pub fn preset_text(name: &str) -> Option<&'static str> {
    PRESETS.iter().find(|(n, _)| *n == name).map(|(_, t)| *t)
}

/// Loads `arg` as a scenario file if it exists, otherwise as a preset name.
pub fn load_scenario(arg: &str) -> Result<Scenario> {
    let path = Path::new(arg);
    if path.is_file() {
        let text = std::fs::read_to_string(path)?;
        let base = path.parent().unwrap_or(Path::new("."));
        return parse_scenario_in(&text, base);
    }
    if preset_text(arg).is_some() {
        return preset_scenario(arg);
    }
    Err(Error::UnknownPreset(format!("{arg} (neither a readable file nor a preset name)")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_gets_defaults() {
        let s = parse_scenario("schema_version = 1").unwrap();
        assert_eq!(s.carrier.fft_size(), 512);
        assert_eq!(s.carrier.n_allocated(), 300);
        assert_eq!(s.carrier.oversampling(), 2);
        assert_eq!(s.constellation, Constellation::Qam16);
        assert_eq!(s.algorithm.kind, AlgorithmKind::Ssp);
        assert_eq!(s.algorithm.rho, 10.0);
        assert_eq!(s.algorithm.tol_db, None);
        assert_eq!(s.mask.label, "sem1");
        assert_eq!(s.metrics.rbw_hz, 100e3);
        assert!((s.metrics.aclr.channel_spacing_hz - 5e6).abs() < 1e-3);
        assert!((s.metrics.aclr.measurement_bw_hz - 4.5e6).abs() < 1e-3);
    }

    #[test]
    fn negative_rho_names_field() {
        let err = parse_scenario("schema_version = 1\n[algorithm]\nrho = -1.0\n").unwrap_err();
        assert!(err.is_validation());
        assert!(err.to_string().contains("rho"), "{err}");
    }

    #[test]
    fn unknown_keys_rejected() {
        let err = parse_scenario("schema_version = 1\nrhoo = 3\n").unwrap_err();
        assert!(matches!(err, Error::ConfigParse(_)));
        assert!(err.to_string().contains("rhoo"), "{err}");
        let err = parse_scenario("schema_version = 1\n[algorithm]\nkind = \"ssp\"\nsweeps = 3\n").unwrap_err();
        assert!(err.to_string().contains("sweeps"), "{err}");
        assert!(err.to_string().contains("line 4"), "{err}");
    }

    #[test]
    fn schema_version_required_and_checked() {
        assert!(matches!(parse_scenario("seed = 3").unwrap_err(), Error::ConfigParse(_)));
        let err = parse_scenario("schema_version = 2").unwrap_err();
        assert!(err.to_string().contains("schema_version"));
    }

    #[test]
    fn sem1_preset_matches_reference_scenario() {
        let s = preset_scenario("sem1_16qam").unwrap();
        assert_eq!(s.carrier.n_allocated() / 12, 25);
        assert_eq!(s.carrier.subcarrier_spacing_hz(), 15e3);
        let pts = s.mask.points(&s.carrier);
        let want = [-334.0, 334.0, -333.0, 333.0, -171.0, 171.0, -170.0, 170.0];
        assert!(pts.iter().zip(want).all(|(a, b)| (a - b).abs() < 1e-12));
        assert_eq!(s.mask.levels(), vec![-75.0, -75.0, -75.0, -75.0, -65.0, -65.0, -65.0, -65.0]);
        assert_eq!(s.algorithm.rho, 10.0);
        assert_eq!(s.algorithm.n_iter, 3);
        let s2 = preset_scenario("sem2_16qam").unwrap();
        assert_eq!(s2.mask.levels(), vec![-85.0, -85.0, -85.0, -85.0, -75.0, -75.0, -75.0, -75.0]);
        assert!(matches!(preset_scenario("nope"), Err(Error::UnknownPreset(_))));
    }

    #[test]
    fn mask_sources() {
        let s = parse_scenario(
            "schema_version = 1\n[mask]\nfrequencies_khz = [-3000.0, 3000.0]\nlevels_dbm_per_100khz = [-60.0, -61.0]\n",
        )
        .unwrap();
        assert_eq!(s.mask.entries.len(), 2);
        assert!(parse_scenario("schema_version = 1\n[mask]\npreset = \"sem1\"\nfrequencies_khz = [1.0]\n").is_err());
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("m.csv"), "frequency_khz,mask_dbm_per_100khz\n4000,-70\n").unwrap();
        let s = parse_scenario_in("schema_version = 1\n[mask]\nfile = \"m.csv\"\n", dir.path()).unwrap();
        assert_eq!(s.mask.levels(), vec![-70.0]);
        let err = parse_scenario("schema_version = 1\n[mask]\nfile = \"/does/not/exist.csv\"\n").unwrap_err();
        assert!(err.is_validation());
    }

    #[test]
    fn ordering_must_be_permutation() {
        let ok = parse_scenario("schema_version = 1\n[algorithm]\nordering = [7,6,5,4,3,2,1,0]\n").unwrap();
        assert_eq!(ok.algorithm.ordering.as_deref(), Some(&[7, 6, 5, 4, 3, 2, 1, 0][..]));
        let err = parse_scenario("schema_version = 1\n[algorithm]\nordering = [0,0,1,2,3,4,5,6]\n").unwrap_err();
        assert!(err.to_string().contains("ordering"));
    }

    #[test]
    fn phase_and_constellation_values() {
        let s = parse_scenario(
            "schema_version = 1\nconstellation = 64\n[algorithm]\nphase = { kind = \"fixed\", phi = 0.0 }\n",
        )
        .unwrap();
        assert_eq!(s.algorithm.phase, PhaseReference::Fixed(0.0));
        assert_eq!(s.constellation, Constellation::Qam64);
        assert!(parse_scenario("schema_version = 1\nconstellation = 8\n").is_err());
    }
}
