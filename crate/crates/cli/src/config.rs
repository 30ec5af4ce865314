//! Plain-text run configuration: `[section]` headers and `key = value`
//! lines, `#` or `;` comments. Unknown sections and keys are rejected.

use crate::error::{CliError, CliResult};
use std::collections::BTreeMap;
use std::path::PathBuf;
use std::str::FromStr;
use whasym::models::NPolicy;
use whasym::symbols::{
    flatband_symbol, magnetic_symbol, xray_symbol, FhSingularity, GaussianBump, PhysicalParams,
    SymbolSpec,
};
use whasym::C64;

const SCHEMA: &[(&str, &[&str])] = &[
    ("model", &["kind"]),
    (
        "physics",
        &[
            "mass",
            "fermi_energy",
            "coupling",
            "regulator_scale",
            "omega_c",
            "landau_cutoff",
            "delta",
            "d0",
            "a0",
        ],
    ),
    ("fh", &["alpha", "beta"]),
    ("custom", &["singularities", "bump_amplitude", "bump_width"]),
    ("sweep", &["T", "N_per_unit"]),
    ("kernel", &["t_min", "t_max", "samples"]),
    ("tolerance", &["barnes", "det2", "factorization"]),
    ("output", &["dir"]),
];

/// Parsed `section.key -> value` pairs, before validation.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RawConfig {
    values: BTreeMap<(String, String), String>,
}

impl RawConfig {
    pub fn parse(text: &str) -> CliResult<Self> {
        let mut values = BTreeMap::new();
        let mut section: Option<String> = None;
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split(['#', ';']).next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let lineno = n + 1;
            if let Some(rest) = line.strip_prefix('[') {
                let name = rest
                    .strip_suffix(']')
                    .ok_or_else(|| CliError::Config(format!("line {lineno}: unterminated section header")))?
                    .trim();
                if !SCHEMA.iter().any(|(s, _)| *s == name) {
                    return Err(CliError::Config(format!("line {lineno}: unknown section [{name}]")));
                }
                section = Some(name.to_string());
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| CliError::Config(format!("line {lineno}: expected key = value")))?;
            let (key, value) = (key.trim(), value.trim());
            let sec = section
                .clone()
                .ok_or_else(|| CliError::Config(format!("line {lineno}: key `{key}` before any section")))?;
            let known = SCHEMA
                .iter()
                .find(|(s, _)| *s == sec)
                .is_some_and(|(_, keys)| keys.contains(&key));
            if !known {
                return Err(CliError::Config(format!("line {lineno}: unknown key `{key}` in [{sec}]")));
            }
            if values.insert((sec.clone(), key.to_string()), value.to_string()).is_some() {
                return Err(CliError::Config(format!("line {lineno}: duplicate key `{key}` in [{sec}]")));
            }
        }
        Ok(Self { values })
    }

    /// Sets a value as if it came from the file (command-line overrides).
    pub fn set(&mut self, section: &str, key: &str, value: impl Into<String>) {
        self.values.insert((section.into(), key.into()), value.into());
    }

    pub fn get(&self, section: &str, key: &str) -> Option<&str> {
        self.values.get(&(section.into(), key.into())).map(String::as_str)
    }

    fn parsed<T: FromStr>(&self, section: &str, key: &str) -> CliResult<Option<T>> {
        self.get(section, key)
            .map(|v| {
                v.parse::<T>()
                    .map_err(|_| CliError::Config(format!("invalid value `{v}` for `{key}` in [{section}]")))
            })
            .transpose()
    }

    fn required<T: FromStr>(&self, section: &str, key: &str, model: &str) -> CliResult<T> {
        self.parsed(section, key)?.ok_or_else(|| {
            CliError::Config(format!("missing required key `{key}` in [{section}] for model {model}"))
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Model {
    XRay,
    FlatBand,
    Magnetic,
    PureFh,
    Custom,
}

impl Model {
    pub fn name(self) -> &'static str {
        match self {
            Model::XRay => "xray",
            Model::FlatBand => "flatband",
            Model::Magnetic => "magnetic",
            Model::PureFh => "pure_fh",
            Model::Custom => "custom",
        }
    }
}

impl FromStr for Model {
    type Err = CliError;

    fn from_str(s: &str) -> CliResult<Self> {
        Ok(match s {
            "xray" => Model::XRay,
            "flatband" => Model::FlatBand,
            "magnetic" => Model::Magnetic,
            "pure_fh" => Model::PureFh,
            "custom" => Model::Custom,
            other => {
                return Err(CliError::Config(format!(
                    "unknown model `{other}` (expected xray, flatband, magnetic, pure_fh or custom)"
                )))
            }
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    pub barnes: f64,
    pub det2: f64,
    pub factorization: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            barnes: 1e-9,
            det2: 1e-12,
            factorization: 1e-8,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelGrid {
    pub t_min: f64,
    pub t_max: f64,
    pub samples: usize,
}

/// A validated configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub model: Model,
    pub physics: PhysicalParams,
    /// `(alpha, beta)` of the pure Fisher-Hartwig model.
    pub fh: (C64, C64),
    /// `(location, alpha, beta)` of the custom model.
    pub singularities: Vec<(f64, C64, C64)>,
    /// `(amplitude, width)` of the custom model's Gaussian bump.
    pub bump: Option<(f64, f64)>,
    pub t_list: Option<Vec<f64>>,
    pub n_per_unit: Option<usize>,
    pub kernel: KernelGrid,
    pub tolerances: Tolerances,
    pub out_dir: Option<PathBuf>,
}

impl RunConfig {
    pub fn from_raw(raw: &RawConfig) -> CliResult<Self> {
        let model: Model = raw
            .get("model", "kind")
            .ok_or_else(|| CliError::Config("missing required key `kind` in [model] (or --model)".into()))?
            .parse()?;
        let name = model.name();
        let mut physics = PhysicalParams::default();
        let required: &[&str] = match model {
            Model::XRay => &["mass", "fermi_energy", "coupling"],
            Model::FlatBand => &["coupling", "d0", "a0"],
            Model::Magnetic => &["fermi_energy", "omega_c", "delta", "coupling"],
            Model::PureFh | Model::Custom => &[],
        };
        for key in required {
            raw.required::<f64>("physics", key, name)?;
        }
        {
            let slots: [(&str, &mut f64); 9] = [
                ("mass", &mut physics.mass),
                ("fermi_energy", &mut physics.fermi_energy),
                ("coupling", &mut physics.coupling),
                ("regulator_scale", &mut physics.regulator_scale),
                ("omega_c", &mut physics.omega_c),
                ("landau_cutoff", &mut physics.landau_cutoff),
                ("delta", &mut physics.delta),
                ("d0", &mut physics.d0),
                ("a0", &mut physics.a0),
            ];
            for (key, slot) in slots {
                if let Some(v) = raw.parsed::<f64>("physics", key)? {
                    if !v.is_finite() {
                        return Err(CliError::Config(format!("`{key}` in [physics] must be finite")));
                    }
                    *slot = v;
                }
            }
        }
        let zero = C64::new(0.0, 0.0);
        let fh = if model == Model::PureFh {
            (raw.required("fh", "alpha", name)?, raw.required("fh", "beta", name)?)
        } else {
            (zero, zero)
        };
        let singularities = match raw.get("custom", "singularities") {
            Some(list) => parse_singularities(list)?,
            None => Vec::new(),
        };
        let bump = match raw.parsed::<f64>("custom", "bump_amplitude")? {
            Some(a) => Some((a, raw.parsed::<f64>("custom", "bump_width")?.unwrap_or(1.0))),
            None => None,
        };
        let t_list = raw.get("sweep", "T").map(parse_t_list).transpose()?;
        let n_per_unit = raw.parsed::<usize>("sweep", "N_per_unit")?;
        if let Some(n) = n_per_unit {
            if n < 8 || n % 4 != 0 {
                return Err(CliError::Config(format!(
                    "`N_per_unit` in [sweep] must be a multiple of 4 and at least 8, got {n}"
                )));
            }
        }
        let kernel = KernelGrid {
            t_min: raw.parsed("kernel", "t_min")?.unwrap_or(-10.0),
            t_max: raw.parsed("kernel", "t_max")?.unwrap_or(10.0),
            samples: raw.parsed("kernel", "samples")?.unwrap_or(201),
        };
        if !(kernel.t_max > kernel.t_min) || kernel.samples < 2 {
            return Err(CliError::Config(
                "[kernel] needs t_min < t_max and at least 2 samples".into(),
            ));
        }
        let tolerances = parse_tolerances(raw)?;
        Ok(Self {
            model,
            physics,
            fh,
            singularities,
            bump,
            t_list,
            n_per_unit,
            kernel,
            tolerances,
            out_dir: raw.get("output", "dir").map(PathBuf::from),
        })
    }

    /// The symbol described by this configuration.
    pub fn spec(&self) -> CliResult<SymbolSpec> {
        let p = &self.physics;
        Ok(match self.model {
            Model::XRay => xray_symbol(p)?,
            Model::FlatBand => flatband_symbol(p)?,
            Model::Magnetic => magnetic_symbol(p)?,
            Model::PureFh => SymbolSpec::pure_fh(self.fh.0, self.fh.1)?,
            Model::Custom => {
                let sings = self
                    .singularities
                    .iter()
                    .map(|&(x, a, b)| FhSingularity::new(x, a, b))
                    .collect::<whasym::Result<Vec<_>>>()?;
                let bump = self.bump.map(|(a, w)| GaussianBump::new(a, w)).transpose()?;
                SymbolSpec::product(sings, bump)
            }
        })
    }

    /// Grid density: the configured value or the model default.
    pub fn policy(&self, spec: &SymbolSpec) -> NPolicy {
        match self.n_per_unit {
            Some(points_per_unit) => NPolicy { points_per_unit },
            None => NPolicy::for_spec(spec),
        }
    }
}

pub fn parse_t_list(text: &str) -> CliResult<Vec<f64>> {
    text.split(',')
        .map(|s| {
            let s = s.trim();
            s.parse::<f64>()
                .ok()
                .filter(|t| t.is_finite() && *t > 0.0)
                .ok_or_else(|| CliError::Config(format!("invalid T value `{s}`")))
        })
        .collect()
}

/// `location:alpha:beta` entries separated by commas; exponents may be
/// complex, e.g. `0.2+0.1i`.
fn parse_singularities(text: &str) -> CliResult<Vec<(f64, C64, C64)>> {
    if text.trim().is_empty() {
        return Ok(Vec::new());
    }
    text.split(',')
        .map(|entry| {
            let bad = || CliError::Config(format!("invalid singularity `{}` (expected location:alpha:beta)", entry.trim()));
            let parts: Vec<&str> = entry.split(':').map(str::trim).collect();
            let [x, a, b] = parts[..] else {
                return Err(bad());
            };
            Ok((
                x.parse().map_err(|_| bad())?,
                a.parse().map_err(|_| bad())?,
                b.parse().map_err(|_| bad())?,
            ))
        })
        .collect()
}

fn parse_tolerances(raw: &RawConfig) -> CliResult<Tolerances> {
    let mut tol = Tolerances::default();
    for (key, slot) in [
        ("barnes", &mut tol.barnes),
        ("det2", &mut tol.det2),
        ("factorization", &mut tol.factorization),
    ] {
        if let Some(v) = raw.parsed::<f64>("tolerance", key)? {
            if !(v > 0.0 && v.is_finite()) {
                return Err(CliError::Config(format!(
                    "tolerance `{key}` must be positive and finite, got {v}"
                )));
            }
            *slot = v;
        }
    }
    Ok(tol)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_sections_comments_and_complex_values() {
        let raw = RawConfig::parse(
            "# header\n[model]\nkind = pure_fh ; trailing\n\n[fh]\nalpha = 0.2+0.1i\nbeta=-0.3\n[sweep]\nT = 10, 20,40 ,80\n",
        )
        .unwrap();
        let cfg = RunConfig::from_raw(&raw).unwrap();
        assert_eq!(cfg.model, Model::PureFh);
        assert_eq!(cfg.fh, (C64::new(0.2, 0.1), C64::new(-0.3, 0.0)));
        assert_eq!(cfg.t_list, Some(vec![10.0, 20.0, 40.0, 80.0]));
    }

    #[test]
    fn rejects_unknown_keys_and_sections() {
        let e = RawConfig::parse("[physics]\nmas = 1\n").unwrap_err();
        assert!(e.to_string().contains("unknown key `mas`"));
        assert!(RawConfig::parse("[phys]\n").is_err());
        assert!(RawConfig::parse("kind = xray\n").is_err());
        assert!(RawConfig::parse("[model]\nkind = xray\nkind = xray\n").is_err());
    }

    #[test]
    fn missing_required_key_is_named() {
        let raw = RawConfig::parse("[model]\nkind = xray\n[physics]\nmass = 1\ncoupling = 1\n").unwrap();
        let e = RunConfig::from_raw(&raw).unwrap_err();
        assert_eq!(e.exit_code(), 2);
        assert!(e.to_string().contains("`fermi_energy`"));
    }

    #[test]
    fn tolerances_must_be_positive() {
        let raw = RawConfig::parse("[model]\nkind = custom\n[tolerance]\ndet2 = -1e-12\n").unwrap();
        assert!(RunConfig::from_raw(&raw).is_err());
    }

    #[test]
    fn custom_singularities() {
        let raw = RawConfig::parse(
            "[model]\nkind = custom\n[custom]\nsingularities = 0:0:-0.3, 1:-0.2:0.2\nbump_amplitude = 0.5\n",
        )
        .unwrap();
        let cfg = RunConfig::from_raw(&raw).unwrap();
        assert_eq!(cfg.singularities.len(), 2);
        assert_eq!(cfg.bump, Some((0.5, 1.0)));
        assert_eq!(cfg.spec().unwrap().singularities().len(), 2);
        let raw = RawConfig::parse("[model]\nkind = custom\n[custom]\nsingularities = 0:0\n").unwrap();
        assert!(RunConfig::from_raw(&raw).is_err());
    }
}
