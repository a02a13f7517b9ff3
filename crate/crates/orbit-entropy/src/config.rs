//! Experiment configuration: a TOML document describing the action, the
//! command and the `(n, eps, grid)` schedule.
//!
//! ```toml
//! command = "estimate"
//! seed = 0
//!
//! [action]
//! space = "circle"
//! generators = [
//!     { kind = "linear", multiplier = 2 },
//!     { kind = "linear", multiplier = 3 },
//! ]
//!
//! [schedule]
//! n = [2, 4, 6]
//! epsilon = [0.1]
//! grid = "1/128"
//! budget = 300000
//! ```
//!
//! Torus generators are `{ kind = "matrix", rows = [[2, 1], [1, 1]] }` and
//! rotations are `{ kind = "rotation", alpha = 0.25 }`. Fractions may be
//! written as numbers or as `"p/q"` strings.

use std::fmt;
use std::ops::Range;
use std::path::PathBuf;
use std::str::FromStr;

use orbit_entropy_core::orbit_space::DEFAULT_BUDGET;
use orbit_entropy_core::preimage::generic_roots;
use orbit_entropy_core::rational::RatPoint;
use orbit_entropy_core::{Action, GeneratorMap, IntMatrix, Space};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use toml::Spanned;

/// Commands understood by the runner.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Sft,
    Estimate,
    Traditional,
    Bounds,
    Preimage,
    Hurley,
    PowerCheck,
    ConjugacyCheck,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Sft => "sft",
            Command::Estimate => "estimate",
            Command::Traditional => "traditional",
            Command::Bounds => "bounds",
            Command::Preimage => "preimage",
            Command::Hurley => "hurley",
            Command::PowerCheck => "power-check",
            Command::ConjugacyCheck => "conjugacy-check",
        }
    }

    /// Commands that iterate over the `n` and `epsilon` lists.
    pub fn needs_schedule(self) -> bool {
        matches!(
            self,
            Command::Estimate
                | Command::Traditional
                | Command::Preimage
                | Command::Hurley
                | Command::ConjugacyCheck
        )
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A positive real given either as a number or as an exact `"p/q"` string.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Fraction(pub f64);

impl FromStr for Fraction {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let s = s.trim();
        let value = match s.split_once('/') {
            Some((p, q)) => {
                let p: f64 = p.trim().parse().map_err(|_| format!("bad numerator in `{s}`"))?;
                let q: f64 = q.trim().parse().map_err(|_| format!("bad denominator in `{s}`"))?;
                if q == 0.0 {
                    return Err(format!("zero denominator in `{s}`"));
                }
                p / q
            }
            None => s.parse().map_err(|_| format!("`{s}` is not a number"))?,
        };
        Ok(Fraction(value))
    }
}

impl<'de> Deserialize<'de> for Fraction {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Float(f64),
            Int(i64),
            Text(String),
        }
        match Repr::deserialize(d)? {
            Repr::Float(x) => Ok(Fraction(x)),
            Repr::Int(x) => Ok(Fraction(x as f64)),
            Repr::Text(s) => s.parse().map_err(serde::de::Error::custom),
        }
    }
}

impl Serialize for Fraction {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_f64(self.0)
    }
}

/// One generator as written in the action description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum GeneratorSpec {
    Linear { multiplier: i64 },
    Rotation { alpha: Fraction },
    Matrix { rows: Vec<Vec<i64>> },
}

impl GeneratorSpec {
    pub fn build(&self) -> orbit_entropy_core::Result<GeneratorMap> {
        match self {
            GeneratorSpec::Linear { multiplier } => GeneratorMap::linear(*multiplier),
            GeneratorSpec::Rotation { alpha } => GeneratorMap::rotation(alpha.0),
            GeneratorSpec::Matrix { rows } => GeneratorMap::matrix(IntMatrix::from_rows(rows)?),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SpaceName {
    Circle,
    Torus,
}

/// The action description: space, optional `k` and the generator list.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ActionSpec {
    pub space: SpaceName,
    pub dim: usize,
    pub generators: Vec<GeneratorSpec>,
}

impl ActionSpec {
    pub fn space(&self) -> Space {
        match self.space {
            SpaceName::Circle => Space::Circle,
            SpaceName::Torus => Space::Torus(self.dim),
        }
    }

    pub fn build(&self) -> orbit_entropy_core::Result<Action> {
        let gens = self
            .generators
            .iter()
            .map(GeneratorSpec::build)
            .collect::<orbit_entropy_core::Result<Vec<_>>>()?;
        Action::new(self.space(), gens)
    }
}

/// A rational sample root, written `"1/7"` on the circle or `"1/7, 3/11"`
/// on the torus.
#[derive(Debug, Clone, PartialEq)]
pub struct RootSpec(pub RatPoint);

impl FromStr for RootSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let mut pairs = Vec::new();
        for part in s.split(',') {
            let part = part.trim();
            let (p, q) = part.split_once('/').unwrap_or((part, "1"));
            let p: i64 = p.trim().parse().map_err(|_| format!("bad numerator in root `{s}`"))?;
            let q: i64 = q.trim().parse().map_err(|_| format!("bad denominator in root `{s}`"))?;
            if q <= 0 {
                return Err(format!("denominator must be positive in root `{s}`"));
            }
            pairs.push((p, q));
        }
        Ok(RootSpec(RatPoint::from_ratios(&pairs)))
    }
}

impl<'de> Deserialize<'de> for RootSpec {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
    }
}

impl Serialize for RootSpec {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let text = self.0.to_string();
        s.serialize_str(text.trim_start_matches('(').trim_end_matches(')'))
    }
}

/// Schedule and per-command parameters after defaults are applied.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Schedule {
    pub n: Vec<usize>,
    pub epsilon: Vec<f64>,
    pub grid: f64,
    /// Depth of dumped preimage trees.
    pub depth: usize,
    /// Maximum number of candidates (or states, or tree branches).
    pub budget: usize,
    /// Grid of tree roots for `h_i`.
    pub root_grid: f64,
    pub roots: Vec<RootSpec>,
    pub powers: Vec<u32>,
    /// Number of sampled Parry paths.
    pub paths: usize,
    pub path_length: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Conjugacy {
    /// `a` in `h(x) = x + a sin(2 pi x) / (2 pi)`.
    #[serde(default = "default_amplitude")]
    pub amplitude: f64,
    /// Largest accepted rate difference in nats.
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
}

fn default_amplitude() -> f64 {
    0.05
}

fn default_tolerance() -> f64 {
    0.1
}

impl Default for Conjugacy {
    fn default() -> Self {
        Conjugacy {
            amplitude: default_amplitude(),
            tolerance: default_tolerance(),
        }
    }
}

/// A validated experiment.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub command: Command,
    pub seed: u64,
    pub out: PathBuf,
    /// Write `elapsed_ms` cells; off for byte-identical reruns.
    pub timing: bool,
    pub action: ActionSpec,
    pub schedule: Schedule,
    pub conjugacy: Conjugacy,
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub command: Option<Command>,
    pub out: Option<PathBuf>,
    pub budget: Option<usize>,
    pub seed: Option<u64>,
    pub no_timing: bool,
}

/// A configuration problem located in the source text.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("{}field `{field}`: {message}", line.map(|l| format!("line {l}, ")).unwrap_or_default())]
pub struct ConfigError {
    pub line: Option<usize>,
    pub field: String,
    pub message: String,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    command: Option<Spanned<Command>>,
    #[serde(default)]
    seed: u64,
    out: Option<PathBuf>,
    #[serde(default = "yes")]
    timing: bool,
    action: Spanned<RawAction>,
    schedule: Option<RawSchedule>,
    conjugacy: Option<Spanned<Conjugacy>>,
}

fn yes() -> bool {
    true
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawAction {
    space: SpaceName,
    dim: Option<Spanned<usize>>,
    k: Option<Spanned<usize>>,
    generators: Spanned<Vec<Spanned<GeneratorSpec>>>,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawSchedule {
    n: Option<Spanned<Vec<usize>>>,
    epsilon: Option<Spanned<Vec<f64>>>,
    grid: Option<Spanned<Fraction>>,
    depth: Option<Spanned<usize>>,
    budget: Option<Spanned<usize>>,
    root_grid: Option<Spanned<Fraction>>,
    roots: Option<Spanned<Vec<RootSpec>>>,
    powers: Option<Spanned<Vec<u32>>>,
    paths: Option<Spanned<usize>>,
    path_length: Option<Spanned<usize>>,
}

/// 1-based line of a byte offset.
fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].bytes().filter(|&b| b == b'\n').count() + 1
}

struct Locator<'a> {
    text: &'a str,
}

impl Locator<'_> {
    fn err(&self, span: Option<Range<usize>>, field: &str, message: impl Into<String>) -> ConfigError {
        ConfigError {
            line: span.map(|s| line_of(self.text, s.start)),
            field: field.to_string(),
            message: message.into(),
        }
    }
}

/// The key written on a line, or the table header it opens.
fn key_on_line(text: &str, line: usize) -> Option<String> {
    let src = text.lines().nth(line.checked_sub(1)?)?.trim();
    if let Some(header) = src.strip_prefix('[') {
        return Some(header.trim_matches(|c| c == '[' || c == ']').trim().to_string());
    }
    let (key, _) = src.split_once('=')?;
    Some(key.trim().to_string())
}

fn positive(loc: &Locator, v: Option<Spanned<Fraction>>, field: &str, default: f64) -> Result<f64, ConfigError> {
    match v {
        None => Ok(default),
        Some(s) if s.get_ref().0 > 0.0 && s.get_ref().0.is_finite() => Ok(s.get_ref().0),
        Some(s) => Err(loc.err(Some(s.span()), field, "must be a positive number")),
    }
}

impl ExperimentConfig {
    /// Parses and validates a configuration; `overrides` win over the file.
    pub fn from_toml(text: &str, overrides: &Overrides) -> Result<Self, ConfigError> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| {
            let line = e.span().map(|s| line_of(text, s.start));
            ConfigError {
                line,
                field: line.and_then(|l| key_on_line(text, l)).unwrap_or_else(|| "<document>".into()),
                message: e.message().trim().to_string(),
            }
        })?;
        let loc = Locator { text };

        let command = match (overrides.command, &raw.command) {
            (Some(c), _) => c,
            (None, Some(c)) => *c.get_ref(),
            (None, None) => return Err(loc.err(None, "command", "no command in the file or on the command line")),
        };

        let action = validate_action(&loc, raw.action)?;

        let s = raw.schedule.unwrap_or_default();
        let mut n = Vec::new();
        if let Some(v) = s.n {
            if v.get_ref().is_empty() {
                return Err(loc.err(Some(v.span()), "schedule.n", "schedule is empty"));
            }
            if v.get_ref().contains(&0) {
                return Err(loc.err(Some(v.span()), "schedule.n", "times must be at least 1"));
            }
            n = v.into_inner();
        }
        let mut epsilon = Vec::new();
        if let Some(v) = s.epsilon {
            if v.get_ref().is_empty() {
                return Err(loc.err(Some(v.span()), "schedule.epsilon", "schedule is empty"));
            }
            if v.get_ref().iter().any(|e| !(*e > 0.0 && e.is_finite())) {
                return Err(loc.err(Some(v.span()), "schedule.epsilon", "scales must be positive"));
            }
            epsilon = v.into_inner();
        }
        if command.needs_schedule() && (n.is_empty() || epsilon.is_empty()) {
            let field = if n.is_empty() { "schedule.n" } else { "schedule.epsilon" };
            return Err(loc.err(None, field, format!("schedule is empty; `{command}` needs n and epsilon lists")));
        }

        let budget = match (overrides.budget, s.budget) {
            (Some(0), _) => return Err(loc.err(None, "--budget", "budget must be positive")),
            (Some(b), _) => b,
            (None, Some(b)) if *b.get_ref() == 0 => {
                return Err(loc.err(Some(b.span()), "schedule.budget", "budget must be positive"))
            }
            (None, Some(b)) => b.into_inner(),
            (None, None) => DEFAULT_BUDGET,
        };

        let grid = positive(&loc, s.grid, "schedule.grid", 1.0 / 128.0)?;
        let root_grid = positive(&loc, s.root_grid, "schedule.root_grid", 1.0 / 64.0)?;
        let depth = s.depth.map_or(2, Spanned::into_inner);

        let dim = action.space().dim();
        let roots = match s.roots {
            Some(r) => {
                if let Some(bad) = r.get_ref().iter().find(|x| x.0.dim() != dim) {
                    return Err(loc.err(
                        Some(r.span()),
                        "schedule.roots",
                        format!("root {} has dimension {}, the action has {dim}", bad.0, bad.0.dim()),
                    ));
                }
                r.into_inner()
            }
            None => generic_roots(2)
                .into_iter()
                .map(|x| {
                    let c = x.coords()[0].clone();
                    RootSpec(RatPoint::new(std::iter::repeat_n(c, dim)))
                })
                .collect(),
        };

        let powers = match s.powers {
            Some(p) if p.get_ref().is_empty() || p.get_ref().contains(&0) => {
                return Err(loc.err(Some(p.span()), "schedule.powers", "powers must be a nonempty list of integers >= 1"))
            }
            Some(p) => p.into_inner(),
            None => vec![2, 3],
        };

        let conjugacy = match raw.conjugacy {
            Some(c) if c.get_ref().amplitude.abs() >= 1.0 => {
                return Err(loc.err(Some(c.span()), "conjugacy.amplitude", "|amplitude| must be below 1"))
            }
            Some(c) if !(c.get_ref().tolerance >= 0.0) => {
                return Err(loc.err(Some(c.span()), "conjugacy.tolerance", "tolerance must be nonnegative"))
            }
            Some(c) => c.into_inner(),
            None => Conjugacy::default(),
        };

        Ok(ExperimentConfig {
            command,
            seed: overrides.seed.unwrap_or(raw.seed),
            out: overrides.out.clone().or(raw.out).unwrap_or_else(|| PathBuf::from("out")),
            timing: raw.timing && !overrides.no_timing,
            action,
            schedule: Schedule {
                n,
                epsilon,
                grid,
                depth,
                budget,
                root_grid,
                roots,
                powers,
                paths: s.paths.map_or(100, Spanned::into_inner),
                path_length: s.path_length.map_or(25, Spanned::into_inner),
            },
            conjugacy,
        })
    }

    /// Reads and validates a configuration file.
    pub fn load(path: &std::path::Path, overrides: &Overrides) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| anyhow::anyhow!("cannot read {}: {e}", path.display()))?;
        ExperimentConfig::from_toml(&text, overrides).map_err(|e| anyhow::anyhow!("{}: {e}", path.display()))
    }

    pub fn build_action(&self) -> orbit_entropy_core::Result<Action> {
        self.action.build()
    }

    pub fn roots(&self) -> Vec<RatPoint> {
        self.schedule.roots.iter().map(|r| r.0.clone()).collect()
    }
}

fn validate_action(loc: &Locator, raw: Spanned<RawAction>) -> Result<ActionSpec, ConfigError> {
    let span = raw.span();
    let raw = raw.into_inner();
    let gens = raw.generators;
    if gens.get_ref().is_empty() {
        return Err(loc.err(Some(gens.span()), "action.generators", "an action needs at least one generator"));
    }
    if let Some(k) = &raw.k {
        if *k.get_ref() != gens.get_ref().len() {
            return Err(loc.err(
                Some(k.span()),
                "action.k",
                format!("k = {} but {} generators are listed", k.get_ref(), gens.get_ref().len()),
            ));
        }
    }
    let dim = match raw.space {
        SpaceName::Circle => {
            if let Some(d) = raw.dim.as_ref().filter(|d| *d.get_ref() != 1) {
                return Err(loc.err(Some(d.span()), "action.dim", "the circle has dimension 1"));
            }
            1
        }
        SpaceName::Torus => {
            let inferred = gens.get_ref().iter().find_map(|g| match g.get_ref() {
                GeneratorSpec::Matrix { rows } => Some(rows.len()),
                _ => None,
            });
            match (raw.dim.as_ref().map(|d| *d.get_ref()), inferred) {
                (Some(0), _) => return Err(loc.err(raw.dim.map(|d| d.span()), "action.dim", "dimension must be positive")),
                (Some(d), _) => d,
                (None, Some(d)) => d,
                (None, None) => return Err(loc.err(Some(span), "action.dim", "torus dimension missing")),
            }
        }
    };
    let space = match raw.space {
        SpaceName::Circle => Space::Circle,
        SpaceName::Torus => Space::Torus(dim),
    };
    let mut built = Vec::new();
    for (i, g) in gens.get_ref().iter().enumerate() {
        let field = format!("action.generators[{i}]");
        let map = g.get_ref().build().map_err(|e| loc.err(Some(g.span()), &field, e.to_string()))?;
        if map.space() != space {
            return Err(loc.err(
                Some(g.span()),
                &field,
                format!("generator acts on {}, the action is on {space}", map.space()),
            ));
        }
        built.push(map);
    }
    Action::new(space, built).map_err(|e| loc.err(Some(gens.span()), "action.generators", e.to_string()))?;
    Ok(ActionSpec {
        space: raw.space,
        dim,
        generators: gens.into_inner().into_iter().map(Spanned::into_inner).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = r#"
command = "estimate"

[action]
space = "circle"
generators = [
    { kind = "linear", multiplier = 2 },
    { kind = "linear", multiplier = 3 },
]

[schedule]
n = [1, 2]
epsilon = [0.1]
grid = "1/64"
"#;

    fn parse(text: &str) -> Result<ExperimentConfig, ConfigError> {
        ExperimentConfig::from_toml(text, &Overrides::default())
    }

    #[test]
    fn defaults_and_fractions() {
        let c = parse(BASE).unwrap();
        assert_eq!(c.command, Command::Estimate);
        assert_eq!(c.seed, 0);
        assert_eq!(c.schedule.grid, 1.0 / 64.0);
        assert_eq!(c.schedule.budget, DEFAULT_BUDGET);
        assert_eq!(c.schedule.roots.len(), 2);
        assert_eq!(c.build_action().unwrap().circle_multipliers(), Some(vec![2, 3]));
    }

    #[test]
    fn overrides_win() {
        let o = Overrides {
            command: Some(Command::Sft),
            budget: Some(10),
            seed: Some(9),
            ..Overrides::default()
        };
        let c = ExperimentConfig::from_toml(BASE, &o).unwrap();
        assert_eq!((c.command, c.schedule.budget, c.seed), (Command::Sft, 10, 9));
    }

    #[test]
    fn empty_schedule_is_rejected() {
        let e = parse(&BASE.replace("n = [1, 2]", "n = []")).unwrap_err();
        assert_eq!(e.field, "schedule.n");
        assert_eq!(e.line, Some(12));
        assert!(e.message.contains("empty"));
        let e = parse(&BASE.replace("n = [1, 2]\n", "")).unwrap_err();
        assert_eq!(e.field, "schedule.n");
    }

    #[test]
    fn zero_budget_is_rejected() {
        let e = parse(&format!("{BASE}budget = 0\n")).unwrap_err();
        assert_eq!(e.field, "schedule.budget");
        assert_eq!(e.line, Some(15));
    }

    #[test]
    fn syntax_errors_carry_line_and_key() {
        let e = parse(&BASE.replace("epsilon = [0.1]", "epsilon = [0.1")).unwrap_err();
        assert!(e.line.is_some());
        let e = parse(&BASE.replace("grid = ", "gird = ")).unwrap_err();
        assert_eq!(e.line, Some(14));
        assert_eq!(e.field, "gird");
        let e = parse(&BASE.replace("\"linear\", multiplier = 3", "\"spiral\", multiplier = 3")).unwrap_err();
        assert_eq!(e.line, Some(8));
    }

    #[test]
    fn invalid_generators_point_at_their_line() {
        let e = parse(&BASE.replace("multiplier = 3", "multiplier = 2")).unwrap_err();
        assert_eq!(e.field, "action.generators");
        assert!(e.message.contains("coincide"), "{e}");
        let e = parse(&BASE.replace("multiplier = 3", "multiplier = 0")).unwrap_err();
        assert_eq!((e.field.as_str(), e.line), ("action.generators[1]", Some(8)));
    }

    #[test]
    fn torus_dimension_is_inferred() {
        let text = r#"
command = "bounds"
[action]
space = "torus"
generators = [{ kind = "matrix", rows = [[2, 0], [0, 2]] }, { kind = "matrix", rows = [[3, 0], [0, 3]] }]
"#;
        let c = parse(text).unwrap();
        assert_eq!(c.action.space(), Space::Torus(2));
        assert_eq!(c.roots()[0].dim(), 2);
        let singular = text.replace("[[3, 0], [0, 3]]", "[[1, 1], [1, 1]]");
        assert!(parse(&singular).unwrap_err().message.contains("singular"));
    }

    #[test]
    fn root_and_fraction_syntax() {
        assert_eq!("1/4".parse::<Fraction>().unwrap(), Fraction(0.25));
        assert!("1/0".parse::<Fraction>().is_err());
        let r: RootSpec = "1/7, 3/11".parse().unwrap();
        assert_eq!(r.0, RatPoint::from_ratios(&[(1, 7), (3, 11)]));
        assert!("x/7".parse::<RootSpec>().is_err());
    }
}
