//! Run manifests: everything a flow run needs, as a TOML document.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use mmdflow::datasets::{self, TargetKind, TargetSpec};
use mmdflow::flow::SlicedConfig;
use mmdflow::slicing::OneDMethod;
use mmdflow::{FlowConfig, ParticleCloud, Precision, RadialProfile, Summation};
use serde::{Deserialize, Serialize};

/// A complete, serializable description of one flow run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunManifest {
    pub out: PathBuf,
    pub kernel: KernelSection,
    pub target: TargetSection,
    pub init: InitSection,
    pub flow: FlowSection,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum KernelName {
    Gauss,
    Snd,
    Snd4,
    Nd,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelSection {
    pub kind: KernelName,
    /// Gaussian bandwidth.
    #[serde(default = "default_sigma")]
    pub sigma: f64,
    /// Smoothing width of the SND kernels.
    #[serde(default = "default_eps")]
    pub eps: f64,
    /// Spline order; defaults to 2 for `snd` and 4 for `snd4`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m: Option<u32>,
    /// Dimension of the fractional integral; defaults to `max(d, 3)` for
    /// dense and `d` for sliced summation.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d_slice: Option<usize>,
}

fn default_sigma() -> f64 {
    0.3
}

fn default_eps() -> f64 {
    0.01
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TargetName {
    ThreeRings,
    Bananas,
    Annulus,
    GaussMixture,
    CustomCsv,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetSection {
    pub kind: TargetName,
    /// Total point count; the kind's canonical count when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub points: Option<usize>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub modes: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub std: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitName {
    Gaussian,
    Uniform,
    Csv,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitSection {
    pub kind: InitName,
    /// Particle count; the target's count when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(default = "default_init_std")]
    pub std: f64,
    /// Gaussian mean; the origin when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mean: Option<Vec<f64>>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
}

fn default_init_std() -> f64 {
    1e-4
}

/// Checkpoint schedule: a count of evenly spaced iterations or an explicit
/// list.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Checkpoints {
    Even(usize),
    List(Vec<usize>),
}

impl FromStr for Checkpoints {
    type Err = String;

    /// `even:N` or a comma-separated list of iterations.
    fn from_str(s: &str) -> Result<Self, String> {
        if let Some(n) = s.strip_prefix("even:") {
            return n.trim().parse().map(Checkpoints::Even).map_err(|_| format!("bad checkpoint count {n:?}"));
        }
        s.split(',')
            .filter(|t| !t.trim().is_empty())
            .map(|t| t.trim().parse::<usize>().map_err(|_| format!("bad checkpoint {t:?}")))
            .collect::<Result<Vec<_>, _>>()
            .map(Checkpoints::List)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum PrecisionName {
    F32,
    F64,
}

/// `dense` or `sliced:P`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SummationSpec {
    Dense,
    Sliced(usize),
}

impl FromStr for SummationSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "dense" => Ok(Self::Dense),
            _ => s
                .strip_prefix("sliced:")
                .and_then(|p| p.parse().ok())
                .map(Self::Sliced)
                .ok_or_else(|| format!("summation must be `dense` or `sliced:P`, got {s:?}")),
        }
    }
}

impl fmt::Display for SummationSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Dense => f.write_str("dense"),
            Self::Sliced(p) => write!(f, "sliced:{p}"),
        }
    }
}

impl Serialize for SummationSpec {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for SummationSpec {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OneDName {
    Auto,
    Dense,
    Sorted,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlowSection {
    pub tau: f64,
    pub iters: usize,
    pub checkpoints: Checkpoints,
    pub precision: PrecisionName,
    pub summation: SummationSpec,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub skip_w2: bool,
    /// Redraw the slice rotations every iteration.
    #[serde(default = "yes")]
    pub rotate: bool,
    #[serde(default)]
    pub antipodal: bool,
    #[serde(default = "auto_1d")]
    pub oned: OneDName,
}

fn yes() -> bool {
    true
}

fn auto_1d() -> OneDName {
    OneDName::Auto
}

/// Named starting points for a manifest.
#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Preset {
    ThreeRings,
    Bananas,
    Annulus,
    HighDim,
}

impl RunManifest {
    pub fn preset(preset: Preset) -> Self {
        let kernel = KernelSection { kind: KernelName::Snd, sigma: 0.3, eps: 0.01, m: None, d_slice: None };
        let target = |kind| TargetSection {
            kind,
            points: None,
            seed: 0,
            d: None,
            modes: None,
            std: None,
            path: None,
        };
        let gaussian_init =
            InitSection { kind: InitName::Gaussian, n: None, std: 1e-4, mean: None, seed: 7, path: None };
        let flow = |tau, iters, checkpoints| FlowSection {
            tau,
            iters,
            checkpoints,
            precision: PrecisionName::F64,
            summation: SummationSpec::Dense,
            seed: 0,
            skip_w2: false,
            rotate: true,
            antipodal: false,
            oned: OneDName::Auto,
        };
        let out = PathBuf::from("mmdflow-out");
        match preset {
            Preset::ThreeRings => Self {
                out,
                kernel,
                target: target(TargetName::ThreeRings),
                init: gaussian_init,
                flow: flow(0.01, 50_000, Checkpoints::Even(51)),
            },
            Preset::Bananas => Self {
                out,
                kernel,
                target: TargetSection { seed: 1, ..target(TargetName::Bananas) },
                init: gaussian_init,
                flow: flow(0.02, 50_000, Checkpoints::Even(51)),
            },
            Preset::Annulus => Self {
                out,
                kernel,
                target: target(TargetName::Annulus),
                init: gaussian_init,
                flow: flow(0.003, 50_000, Checkpoints::Even(51)),
            },
            Preset::HighDim => Self {
                out,
                kernel: KernelSection { d_slice: Some(784), ..kernel },
                target: TargetSection {
                    d: Some(784),
                    modes: Some(10),
                    std: Some(0.1),
                    seed: 3,
                    ..target(TargetName::GaussMixture)
                },
                init: InitSection { kind: InitName::Uniform, seed: 4, ..gaussian_init },
                flow: FlowSection {
                    summation: SummationSpec::Sliced(785),
                    oned: OneDName::Sorted,
                    ..flow(100.0, 2000, Checkpoints::Even(41))
                },
            },
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("manifest serializes")
    }

    pub fn from_toml(text: &str) -> Result<Self, String> {
        toml::from_str(text).map_err(|e| e.to_string())
    }

    /// The target cloud.
    pub fn target_cloud(&self) -> Result<ParticleCloud, String> {
        let t = &self.target;
        let kind = match t.kind {
            TargetName::ThreeRings => TargetKind::ThreeRings,
            TargetName::Bananas => TargetKind::Bananas,
            TargetName::Annulus => TargetKind::Annulus,
            TargetName::GaussMixture => TargetKind::GaussMixture {
                d: t.d.ok_or("gauss_mixture target needs `d`")?,
                modes: t.modes.unwrap_or(10),
                std: t.std.unwrap_or(0.1),
            },
            TargetName::CustomCsv => TargetKind::CustomCsv(t.path.clone().ok_or("custom_csv target needs `path`")?),
        };
        TargetSpec { kind, points_total: t.points, seed: t.seed }.generate().map_err(|e| e.to_string())
    }

    /// The initial cloud, in the dimension of `target`.
    pub fn init_cloud(&self, target: &ParticleCloud) -> Result<ParticleCloud, String> {
        let i = &self.init;
        let n = i.n.unwrap_or(target.len());
        let d = target.dim();
        let cloud = match i.kind {
            InitName::Gaussian => {
                let mean = i.mean.clone().unwrap_or_else(|| vec![0.0; d]);
                datasets::init_gaussian_at(&mean, n, i.std, i.seed)
            }
            InitName::Uniform => datasets::init_uniform(n, d, i.seed),
            InitName::Csv => ParticleCloud::read_csv(i.path.as_ref().ok_or("csv init needs `path`")?),
        }
        .map_err(|e| e.to_string())?;
        if cloud.dim() != d {
            return Err(format!("initial cloud has dimension {}, target has {d}", cloud.dim()));
        }
        Ok(cloud)
    }

    /// The radial profile for ambient dimension `d`.
    pub fn profile(&self, d: usize) -> Result<RadialProfile, String> {
        let k = &self.kernel;
        let d_slice = k.d_slice.unwrap_or(match self.flow.summation {
            SummationSpec::Dense => d.max(3),
            SummationSpec::Sliced(_) => d,
        });
        match k.kind {
            KernelName::Gauss => RadialProfile::gaussian(k.sigma),
            KernelName::Nd => Ok(RadialProfile::nd()),
            KernelName::Snd => RadialProfile::snd(k.m.unwrap_or(2), k.eps, d_slice),
            KernelName::Snd4 => RadialProfile::snd(k.m.unwrap_or(4), k.eps, d_slice),
        }
        .map_err(|e| e.to_string())
    }

    pub fn flow_config(&self) -> Result<FlowConfig, String> {
        let f = &self.flow;
        let mut cfg = FlowConfig::new(f.tau, f.iters)
            .with_precision(match f.precision {
                PrecisionName::F32 => Precision::F32,
                PrecisionName::F64 => Precision::F64,
            })
            .with_seed(f.seed)
            .with_skip_w2(f.skip_w2);
        cfg = match &f.checkpoints {
            Checkpoints::Even(n) => cfg.with_even_checkpoints(*n),
            Checkpoints::List(list) => cfg.with_checkpoints(list.clone()),
        };
        if let SummationSpec::Sliced(directions) = f.summation {
            let method = match f.oned {
                OneDName::Auto => OneDMethod::default(),
                OneDName::Dense => OneDMethod::Dense,
                OneDName::Sorted => OneDMethod::Sorted,
            };
            cfg = cfg.with_summation(Summation::Sliced(SlicedConfig {
                directions,
                rotate: f.rotate,
                antipodal: f.antipodal,
                method,
            }));
        }
        cfg.validate().map_err(|e| e.to_string())?;
        Ok(cfg)
    }
}
