//! Run configuration: a JSON file overlaid with `key.path=value` overrides.

use crate::units::{parse_length, Separation};
use dpcollapse_core::consts::{ANGSTROM, CARBON_MASS, GRAPHITE_INTERLAYER};
use dpcollapse_core::kernel::{BruteOptions, FastOptions, DEFAULT_TERM_BUDGET};
use dpcollapse_core::{ColoredNoiseModel, Lattice, SuperpositionConfig, Vec3};
use serde::de::{self, Deserializer, Visitor};
use serde::de::DeserializeOwned;
use serde::Deserialize;
use serde_json::{Map, Value};
use std::fmt;
use std::path::{Path, PathBuf};

/// A malformed or inconsistent configuration.
#[derive(Debug)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "config error: {}", self.0)
    }
}

impl std::error::Error for ConfigError {}

fn fail<T>(msg: impl Into<String>) -> Result<T, ConfigError> {
    Err(ConfigError(msg.into()))
}

/// A length written with its unit, stored in metres.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Length(pub f64);

impl<'de> Deserialize<'de> for Length {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct LengthVisitor;

        impl Visitor<'_> for LengthVisitor {
            type Value = Length;

            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a length with a unit suffix, e.g. \"2.46A\"")
            }

            fn visit_str<E: de::Error>(self, s: &str) -> Result<Length, E> {
                parse_length(s).map(Length).map_err(E::custom)
            }

            fn visit_f64<E: de::Error>(self, v: f64) -> Result<Length, E> {
                Err(E::custom(format!(
                    "`{v}` has no unit suffix; write e.g. \"{v}A\" or \"{v}um\""
                )))
            }

            fn visit_i64<E: de::Error>(self, v: i64) -> Result<Length, E> {
                self.visit_f64(v as f64)
            }

            fn visit_u64<E: de::Error>(self, v: u64) -> Result<Length, E> {
                self.visit_f64(v as f64)
            }
        }

        d.deserialize_any(LengthVisitor)
    }
}

impl<'de> Deserialize<'de> for Separation {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        Separation::parse(&s).map_err(de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preset {
    Graphene,
    #[serde(alias = "stacked-graphene")]
    StackedGraphene,
    Square,
    Cubic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
pub enum Direction {
    /// Along the first primitive vector.
    #[serde(rename = "a1")]
    A1,
    /// In-plane, orthogonal to the side spanned by the second primitive vector.
    #[serde(rename = "side-normal", alias = "side_normal")]
    SideNormal,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Noise {
    White,
    Cutoff(f64),
}

impl<'de> Deserialize<'de> for Noise {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        match Value::deserialize(d)? {
            Value::String(s) if s == "white" => Ok(Noise::White),
            Value::Number(n) => Ok(Noise::Cutoff(n.as_f64().unwrap_or(f64::NAN))),
            other => Err(de::Error::custom(format!(
                "expected \"white\" or a cutoff frequency in 1/s, got {other}"
            ))),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LatticeSection {
    pub preset: Preset,
    pub n1: u64,
    pub n2: u64,
    pub n3: Option<u64>,
    pub interlayer: Option<Length>,
    /// Lattice step, square and cubic presets only.
    pub a: Option<Length>,
    /// Atomic mass in kg, square and cubic presets only.
    pub mass: Option<f64>,
}

impl Default for LatticeSection {
    fn default() -> Self {
        LatticeSection {
            preset: Preset::Graphene,
            n1: 100,
            n2: 100,
            n3: None,
            interlayer: None,
            a: None,
            mass: None,
        }
    }
}

impl LatticeSection {
    pub fn build(&self) -> Result<Lattice, ConfigError> {
        let l = self;
        let monoatomic = matches!(l.preset, Preset::Square | Preset::Cubic);
        if !monoatomic && (l.a.is_some() || l.mass.is_some()) {
            return fail("`lattice.a` and `lattice.mass` apply to the square and cubic presets only");
        }
        let three_d = matches!(l.preset, Preset::StackedGraphene | Preset::Cubic);
        if !three_d && l.n3.is_some() {
            return fail("`lattice.n3` applies to three-dimensional presets only");
        }
        if l.preset != Preset::StackedGraphene && l.interlayer.is_some() {
            return fail("`lattice.interlayer` applies to the stacked_graphene preset only");
        }
        let a = l.a.map_or(ANGSTROM, |x| x.0);
        let mass = l.mass.unwrap_or(CARBON_MASS);
        let n3 = l.n3.unwrap_or(1);
        let built = match l.preset {
            Preset::Graphene => Lattice::graphene_sheet(l.n1, l.n2),
            Preset::StackedGraphene => Lattice::stacked_graphene(
                l.n1,
                l.n2,
                n3,
                l.interlayer.map_or(GRAPHITE_INTERLAYER, |x| x.0),
            ),
            Preset::Square => Lattice::square(l.n1, l.n2, a, mass),
            Preset::Cubic => Lattice::simple_cubic(l.n1, l.n2, n3, a, mass),
        };
        built.map_err(|e| ConfigError(format!("`lattice`: {e}")))
    }
}

#[derive(Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSection {
    pub r0_min: Length,
    pub r0_max: Length,
    pub points: usize,
}

impl Default for SweepSection {
    fn default() -> Self {
        SweepSection {
            r0_min: Length(ANGSTROM),
            r0_max: Length(1e6 * ANGSTROM),
            points: 13,
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SuperpositionSection {
    pub d: Separation,
    pub direction: Direction,
    pub sigma: Option<Length>,
}

impl Default for SuperpositionSection {
    fn default() -> Self {
        SuperpositionSection {
            d: Separation::SideMultiple(4.0),
            direction: Direction::A1,
            sigma: None,
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseSection {
    pub omega_c: Noise,
}

impl Default for NoiseSection {
    fn default() -> Self {
        NoiseSection {
            omega_c: Noise::White,
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExecSection {
    pub workers: Option<usize>,
    pub allow_long: bool,
    pub term_budget: u64,
}

impl Default for ExecSection {
    fn default() -> Self {
        ExecSection {
            workers: None,
            allow_long: false,
            term_budget: DEFAULT_TERM_BUDGET,
        }
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutSection {
    pub path: Option<PathBuf>,
}

/// Ω_C grid in 1/s for the colored-noise table.
#[derive(Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ColoredSection {
    pub omega_min: f64,
    pub omega_max: f64,
    pub points: usize,
    /// Time at which τ(d,t) is reported, s. Defaults to the white-noise τ.
    pub t: Option<f64>,
    /// J. Computed from the lattice at `sweep.r0_min` when absent.
    pub delta_e: Option<f64>,
}

impl Default for ColoredSection {
    fn default() -> Self {
        ColoredSection {
            omega_min: 1e-3,
            omega_max: 1e6,
            points: 10,
            t: None,
            delta_e: None,
        }
    }
}

/// Time grid in s for the coherence table.
#[derive(Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CoherenceSection {
    pub t_min: f64,
    pub t_max: f64,
    pub points: usize,
    /// kg. Defaults to the lattice mass.
    pub mass: Option<f64>,
    /// J. Computed from the lattice at `sweep.r0_min` when absent.
    pub delta_e: Option<f64>,
}

impl Default for CoherenceSection {
    fn default() -> Self {
        CoherenceSection {
            t_min: 1e-6,
            t_max: 1.0,
            points: 7,
            mass: None,
            delta_e: None,
        }
    }
}

#[derive(Debug, Default)]
pub struct RunConfig {
    pub lattice: LatticeSection,
    pub sweep: SweepSection,
    pub superposition: SuperpositionSection,
    pub noise: NoiseSection,
    pub exec: ExecSection,
    pub out: OutSection,
    pub colored: ColoredSection,
    pub coherence: CoherenceSection,
}

impl RunConfig {
    /// Reads `path` (if any), applies `overrides` of the form `a.b=value` on top
    /// and deserializes. Override values are read as JSON when they parse as
    /// JSON and as strings otherwise.
    pub fn load(path: Option<&Path>, overrides: &[String]) -> Result<Self, ConfigError> {
        let mut root = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| ConfigError(format!("{}: {e}", p.display())))?;
                serde_json::from_str(&text)
                    .map_err(|e| ConfigError(format!("{}: {e}", p.display())))?
            }
            None => Value::Object(Map::new()),
        };
        for o in overrides {
            let (key, raw) = o
                .split_once('=')
                .ok_or_else(|| ConfigError(format!("override `{o}` is not of the form key=value")))?;
            let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
            set_dotted(&mut root, key, value)?;
        }
        let Value::Object(root) = root else {
            return fail("the configuration must be a JSON object");
        };
        const SECTIONS: [&str; 8] = [
            "lattice",
            "sweep",
            "superposition",
            "noise",
            "exec",
            "out",
            "colored",
            "coherence",
        ];
        if let Some(k) = root.keys().find(|k| !SECTIONS.contains(&k.as_str())) {
            return fail(format!("unknown section `{k}`, expected one of {}", SECTIONS.join(", ")));
        }
        Ok(RunConfig {
            lattice: section(&root, "lattice")?,
            sweep: section(&root, "sweep")?,
            superposition: section(&root, "superposition")?,
            noise: section(&root, "noise")?,
            exec: section(&root, "exec")?,
            out: section(&root, "out")?,
            colored: section(&root, "colored")?,
            coherence: section(&root, "coherence")?,
        })
    }

    pub fn build_lattice(&self) -> Result<Lattice, ConfigError> {
        self.lattice.build()
    }

    /// The configured preset with n1 = n2 = `side` (and n3 = `side` for the
    /// cubic preset), for size scans.
    pub fn build_lattice_with_side(&self, side: u64) -> Result<Lattice, ConfigError> {
        let mut l = self.lattice.clone();
        l.n1 = side;
        l.n2 = side;
        if l.preset == Preset::Cubic {
            l.n3 = Some(side);
        }
        l.build()
    }

    /// Log-spaced grid between `sweep.r0_min` and `sweep.r0_max`.
    pub fn r0_grid(&self) -> Result<Vec<f64>, ConfigError> {
        let s = &self.sweep;
        if !(s.r0_min.0 > 0.0) {
            return fail("`sweep.r0_min` must be > 0");
        }
        if !(s.r0_min.0 < s.r0_max.0) {
            return fail("`sweep.r0_min` must be below `sweep.r0_max`");
        }
        log_grid(s.r0_min.0, s.r0_max.0, s.points, "sweep.points")
    }

    /// Displacement vector for `lat`.
    pub fn displacement(&self, lat: &Lattice) -> Result<Vec3, ConfigError> {
        let side = longest_side(lat);
        let d = self.superposition.d.resolve(side);
        if !(d > 0.0) {
            return fail("`superposition.d` must be > 0");
        }
        let v = lat.vectors();
        let axis = match self.superposition.direction {
            Direction::A1 => v[0],
            Direction::SideNormal => {
                let along = (1.0 / v[1].norm()) * v[1];
                v[0] - v[0].dot(along) * along
            }
        };
        Ok((d / axis.norm()) * axis)
    }

    pub fn superposition(&self, lat: &Lattice, r0: f64) -> anyhow::Result<SuperpositionConfig> {
        let mut cfg = SuperpositionConfig::new(self.displacement(lat)?, r0)?;
        if let Some(s) = self.superposition.sigma {
            cfg = cfg.with_sigma(s.0)?;
        }
        Ok(cfg)
    }

    pub fn noise(&self) -> Result<ColoredNoiseModel, ConfigError> {
        match self.noise.omega_c {
            Noise::White => Ok(ColoredNoiseModel::White),
            Noise::Cutoff(w) => ColoredNoiseModel::from_omega(w)
                .map_err(|e| ConfigError(format!("`noise.omega_c`: {e}"))),
        }
    }

    pub fn workers(&self) -> usize {
        self.exec
            .workers
            .unwrap_or_else(|| FastOptions::default().workers)
            .max(1)
    }

    pub fn fast_options(&self) -> FastOptions {
        FastOptions {
            workers: self.workers(),
            term_budget: self.exec.term_budget,
            allow_long: self.exec.allow_long,
        }
    }

    pub fn brute_options(&self) -> BruteOptions {
        BruteOptions {
            workers: self.workers(),
            override_cap: self.exec.allow_long,
        }
    }
}

pub fn log_grid(lo: f64, hi: f64, points: usize, key: &str) -> Result<Vec<f64>, ConfigError> {
    if points < 2 {
        return fail(format!("`{key}` must be ≥ 2, got {points}"));
    }
    if !(lo > 0.0 && lo < hi && hi.is_finite()) {
        return fail(format!("grid for `{key}` needs 0 < min < max, got {lo:e}..{hi:e}"));
    }
    // Decade exponents keep whole-decade grids exact: 10^-8 rather than 9.99…e-9.
    let (a, b) = (lo.log10(), hi.log10());
    let step = (b - a) / (points - 1) as f64;
    let mut grid: Vec<f64> = (0..points).map(|i| 10f64.powf(a + step * i as f64)).collect();
    grid[0] = lo;
    grid[points - 1] = hi;
    Ok(grid)
}

pub fn longest_side(lat: &Lattice) -> f64 {
    lat.side_lengths().into_iter().fold(0.0, f64::max)
}

/// Deserializes one section. On failure each key is retried on its own so the
/// message can name the offending field.
fn section<T: DeserializeOwned + Default>(root: &Map<String, Value>, name: &str) -> Result<T, ConfigError> {
    let Some(v) = root.get(name) else {
        return Ok(T::default());
    };
    T::deserialize(v).map_err(|e| {
        if let Value::Object(m) = v {
            for (k, val) in m {
                let single = Value::Object(Map::from_iter([(k.clone(), val.clone())]));
                if let Err(e) = T::deserialize(&single) {
                    return ConfigError(format!("`{name}.{k}`: {e}"));
                }
            }
        }
        ConfigError(format!("`{name}`: {e}"))
    })
}

fn set_dotted(root: &mut Value, key: &str, value: Value) -> Result<(), ConfigError> {
    let mut parts = key.split('.').peekable();
    let mut node = root;
    while let Some(part) = parts.next() {
        if part.is_empty() {
            return fail(format!("override key `{key}` has an empty segment"));
        }
        let map = node
            .as_object_mut()
            .ok_or_else(|| ConfigError(format!("override `{key}`: `{part}` is not inside a section")))?;
        if parts.peek().is_none() {
            map.insert(part.to_string(), value);
            return Ok(());
        }
        node = map
            .entry(part.to_string())
            .or_insert_with(|| Value::Object(Map::new()));
    }
    fail("empty override key")
}
