//! Run configuration files.
//!
//! Line-based `key = value` text with `[geometry]`, `[solver]` and `[output]`
//! sections; `#` starts a comment. Unknown sections or keys are errors, so a
//! typo cannot silently fall back to a default. Overrides are qualified as
//! `section.key=value` and follow the same rule.

use std::collections::BTreeMap;
use std::path::Path;

use crate::error::{SrtError, SrtResult};
use crate::phantom::AcquisitionGeometry;
use crate::pipeline::{OutputSpec, ReconstructionConfig, SlicePlane};
use crate::support::SupportCase;
use crate::volterra::TsvdConfig;

/// Slice export formats understood by the CLI.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SliceFormat {
    /// Binary portable graymap (P5).
    Pgm,
    /// ASCII portable graymap (P2).
    PgmAscii,
    Csv,
}

/// Parsed configuration with defaults applied; [`RunConfig::build`] turns it
/// into the runtime [`ReconstructionConfig`].
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub case: SupportCase,
    pub acquisition_radius: f64,
    pub outer_radius: Option<f64>,
    pub radial_points: usize,
    pub angular_half_resolution: usize,
    pub rho_margin: f64,
    pub rho_min: Option<f64>,
    pub rho_max: Option<f64>,
    pub l_max: u32,
    pub tsvd_rel_threshold: f64,
    pub tsvd_max_rank: Option<usize>,
    pub noise_level: f64,
    pub seed: u64,
    pub slice_plane: SlicePlane,
    pub slice_resolution: usize,
    pub slice_extent: Option<f64>,
    pub formats: Vec<SliceFormat>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            case: SupportCase::Interior,
            acquisition_radius: 1.0,
            outer_radius: None,
            radial_points: 50,
            angular_half_resolution: 50,
            rho_margin: 0.001,
            rho_min: None,
            rho_max: None,
            l_max: 25,
            tsvd_rel_threshold: 3e-2,
            tsvd_max_rank: None,
            noise_level: 0.0,
            seed: 20170401,
            slice_plane: SlicePlane::horizontal(),
            slice_resolution: 200,
            slice_extent: None,
            formats: vec![SliceFormat::Pgm, SliceFormat::Csv],
        }
    }
}

impl RunConfig {
    /// Reads a config file (when given) and applies `section.key=value`
    /// overrides on top.
    pub fn load(path: Option<&Path>, overrides: &[String]) -> SrtResult<RunConfig> {
        let mut config = RunConfig::default();
        if let Some(path) = path {
            let text = std::fs::read_to_string(path)?;
            let entries = parse_sections(&text, &path.display().to_string())?;
            for ((section, key), (value, line)) in &entries {
                config
                    .apply(section, key, value)
                    .map_err(|message| SrtError::Parse {
                        path: path.display().to_string(),
                        message: format!("line {line}: {message}"),
                    })?;
            }
        }
        for item in overrides {
            let (qualified, value) = item.split_once('=').ok_or_else(|| SrtError::Parse {
                path: "--set".into(),
                message: format!("expected section.key=value, got `{item}`"),
            })?;
            let (section, key) =
                qualified
                    .trim()
                    .split_once('.')
                    .ok_or_else(|| SrtError::Parse {
                        path: "--set".into(),
                        message: format!("expected section.key=value, got `{item}`"),
                    })?;
            config
                .apply(section.trim(), key.trim(), value.trim())
                .map_err(|message| SrtError::Parse {
                    path: "--set".into(),
                    message,
                })?;
        }
        Ok(config)
    }

    fn apply(&mut self, section: &str, key: &str, value: &str) -> Result<(), String> {
        match (section, key) {
            ("geometry", "case") => self.case = value.parse()?,
            ("geometry", "acquisition_radius") => self.acquisition_radius = parse_f64(value)?,
            ("geometry", "outer_radius") => self.outer_radius = Some(parse_f64(value)?),
            ("geometry", "radial_points") => self.radial_points = parse_usize(value)?,
            ("geometry", "angular_half_resolution") => {
                self.angular_half_resolution = parse_usize(value)?
            }
            ("geometry", "rho_margin") => self.rho_margin = parse_f64(value)?,
            ("geometry", "rho_min") => self.rho_min = Some(parse_f64(value)?),
            ("geometry", "rho_max") => self.rho_max = Some(parse_f64(value)?),
            ("solver", "l_max") => self.l_max = parse_usize(value)? as u32,
            ("solver", "tsvd_rel_threshold") => self.tsvd_rel_threshold = parse_f64(value)?,
            ("solver", "tsvd_max_rank") => {
                let rank = parse_usize(value)?;
                self.tsvd_max_rank = if rank == 0 { None } else { Some(rank) };
            }
            ("solver", "noise_level") => self.noise_level = parse_f64(value)?,
            ("solver", "seed") => {
                self.seed = value
                    .parse::<u64>()
                    .map_err(|_| format!("invalid seed `{value}`"))?
            }
            ("output", "slice_plane") => self.slice_plane = parse_plane(value)?,
            ("output", "slice_offset") => {
                let offset = parse_f64(value)?;
                self.slice_plane = match self.slice_plane {
                    SlicePlane::Z { .. } => SlicePlane::Z { offset },
                    SlicePlane::Y { .. } => SlicePlane::Y { offset },
                    SlicePlane::X { .. } => SlicePlane::X { offset },
                };
            }
            ("output", "slice_resolution") => self.slice_resolution = parse_usize(value)?,
            ("output", "slice_extent") => {
                let extent = parse_f64(value)?;
                self.slice_extent = if extent == 0.0 { None } else { Some(extent) };
            }
            ("output", "formats") => {
                let mut formats = Vec::new();
                for token in value.split(',') {
                    formats.push(match token.trim().to_ascii_lowercase().as_str() {
                        "pgm" => SliceFormat::Pgm,
                        "pgm-ascii" | "pgm_ascii" => SliceFormat::PgmAscii,
                        "csv" => SliceFormat::Csv,
                        other => return Err(format!("unknown slice format `{other}`")),
                    });
                }
                self.formats = formats;
            }
            _ => return Err(format!("unknown key `{section}.{key}`")),
        }
        Ok(())
    }

    /// Builds the runtime configuration, deriving the radial grid from the
    /// case bounds (or explicit `rho_min`/`rho_max`).
    pub fn build(&self) -> SrtResult<ReconstructionConfig> {
        let geometry = match (self.rho_min, self.rho_max) {
            (Some(lo), Some(hi)) => AcquisitionGeometry::from_bounds(
                self.case,
                self.acquisition_radius,
                self.outer_radius,
                lo,
                hi,
                self.radial_points,
                self.angular_half_resolution,
            )?,
            (None, None) => AcquisitionGeometry::with_uniform_grid(
                self.case,
                self.acquisition_radius,
                self.outer_radius,
                self.radial_points,
                self.rho_margin,
                self.angular_half_resolution,
            )?,
            _ => {
                return Err(SrtError::Geometry(
                    "rho_min and rho_max must be given together".into(),
                ))
            }
        };
        let config = ReconstructionConfig {
            geometry,
            l_max: self.l_max,
            tsvd: TsvdConfig::new(self.tsvd_rel_threshold, self.tsvd_max_rank)?,
            noise_level: self.noise_level,
            seed: self.seed,
            output: OutputSpec {
                plane: self.slice_plane,
                resolution: self.slice_resolution,
                extent: self.slice_extent,
            },
        };
        config.validate()?;
        Ok(config)
    }
}

type Entries = BTreeMap<(String, String), (String, usize)>;

fn parse_sections(text: &str, path: &str) -> SrtResult<Entries> {
    let mut entries = Entries::new();
    let mut section = String::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = match raw.find('#') {
            Some(pos) => &raw[..pos],
            None => raw,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        if let Some(name) = line.strip_prefix('[').and_then(|s| s.strip_suffix(']')) {
            let name = name.trim().to_ascii_lowercase();
            if !matches!(name.as_str(), "geometry" | "solver" | "output") {
                return Err(SrtError::Parse {
                    path: path.into(),
                    message: format!("line {}: unknown section `[{name}]`", lineno + 1),
                });
            }
            section = name;
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| SrtError::Parse {
            path: path.into(),
            message: format!("line {}: expected `key = value`, got `{line}`", lineno + 1),
        })?;
        if section.is_empty() {
            return Err(SrtError::Parse {
                path: path.into(),
                message: format!("line {}: key outside of any section", lineno + 1),
            });
        }
        entries.insert(
            (section.clone(), key.trim().to_ascii_lowercase()),
            (value.trim().to_string(), lineno + 1),
        );
    }
    Ok(entries)
}

fn parse_f64(value: &str) -> Result<f64, String> {
    value
        .parse::<f64>()
        .map_err(|_| format!("invalid number `{value}`"))
}

fn parse_usize(value: &str) -> Result<usize, String> {
    value
        .parse::<usize>()
        .map_err(|_| format!("invalid integer `{value}`"))
}

fn parse_plane(value: &str) -> Result<SlicePlane, String> {
    match value.trim().to_ascii_lowercase().as_str() {
        "horizontal" | "z" => Ok(SlicePlane::Z { offset: 0.0 }),
        "vertical" | "y" => Ok(SlicePlane::Y { offset: 0.0 }),
        "x" => Ok(SlicePlane::X { offset: 0.0 }),
        other => Err(format!(
            "unknown slice plane `{other}` (expected horizontal, vertical, x, y or z)"
        )),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write_temp(name: &str, contents: &str) -> std::path::PathBuf {
        let mut path = std::env::temp_dir();
        path.push(format!("srt-config-{}-{name}", std::process::id()));
        let mut file = std::fs::File::create(&path).unwrap();
        file.write_all(contents.as_bytes()).unwrap();
        path
    }

    #[test]
    fn defaults_build() {
        let config = RunConfig::default().build().unwrap();
        assert_eq!(config.geometry.rho_grid.len(), 50);
        assert_eq!(config.geometry.n, 50);
        assert_eq!(config.l_max, 25);
        assert!((config.geometry.rho_grid[0] - 0.001).abs() < 1e-15);
        assert!((config.geometry.rho_grid[49] - 0.999).abs() < 1e-15);
    }

    #[test]
    fn parse_file_and_overrides() {
        let path = write_temp(
            "ok",
            "# comment\n[geometry]\ncase = exterior\nradial_points = 12\n\n[solver]\nl_max = 6\nseed = 99\n[output]\nslice_plane = vertical\nformats = csv\n",
        );
        let config = RunConfig::load(Some(&path), &["solver.noise_level=0.05".into()]).unwrap();
        std::fs::remove_file(&path).ok();
        assert_eq!(config.case, SupportCase::Exterior);
        assert_eq!(config.radial_points, 12);
        assert_eq!(config.l_max, 6);
        assert_eq!(config.seed, 99);
        assert_eq!(config.noise_level, 0.05);
        assert_eq!(config.slice_plane, SlicePlane::vertical());
        assert_eq!(config.formats, vec![SliceFormat::Csv]);
        let built = config.build().unwrap();
        assert_eq!(built.geometry.case, SupportCase::Exterior);
        assert_eq!(built.seed, 99);
    }

    #[test]
    fn unknown_key_is_an_error() {
        let path = write_temp("badkey", "[solver]\nl_mx = 6\n");
        let err = RunConfig::load(Some(&path), &[]).unwrap_err();
        std::fs::remove_file(&path).ok();
        assert!(matches!(err, SrtError::Parse { .. }), "{err}");
        assert!(err.to_string().contains("l_mx"));
    }

    #[test]
    fn unknown_section_is_an_error() {
        let path = write_temp("badsec", "[general]\nl_max = 6\n");
        let err = RunConfig::load(Some(&path), &[]).unwrap_err();
        std::fs::remove_file(&path).ok();
        assert!(err.to_string().contains("general"));
    }

    #[test]
    fn bad_override_is_an_error() {
        assert!(RunConfig::load(None, &["solver.l_max".into()]).is_err());
        assert!(RunConfig::load(None, &["solver.bogus=3".into()]).is_err());
        assert!(RunConfig::load(None, &["l_max=3".into()]).is_err());
    }

    #[test]
    fn explicit_bounds_require_both() {
        let mut config = RunConfig::default();
        config.rho_min = Some(0.1);
        assert!(config.build().is_err());
        config.rho_max = Some(0.9);
        let built = config.build().unwrap();
        assert!((built.geometry.rho_grid[0] - 0.1).abs() < 1e-15);
    }
}
