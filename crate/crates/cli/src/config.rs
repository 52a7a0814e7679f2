//! Experiment configuration. One JSON file describes a run; a few fields can
//! be overridden from the command line.

use std::fmt;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use symdom::quadrature::node_count;
use symdom::wallach::{wallach_classify, WallachClassification};
use symdom::{DomainKind, DomainSpec, Point, Polynomial};

const MAX_GRID_POINTS: usize = 100_000;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub domain: DomainSpec,
    pub lambda: f64,
    #[serde(rename = "D")]
    pub d_list: Vec<usize>,
    #[serde(default)]
    pub generators: Vec<String>,
    #[serde(default)]
    pub symbols: SymbolConfig,
    #[serde(default = "default_p")]
    pub p: Vec<f64>,
    #[serde(default)]
    pub window: Option<usize>,
    /// Empty selects a level per quadrature family.
    #[serde(default)]
    pub quadrature_levels: Vec<u32>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default)]
    pub cache_dir: Option<PathBuf>,
    #[serde(default)]
    pub kernel: KernelConfig,
    #[serde(default)]
    pub spectrum: SpectrumConfig,
    #[serde(default)]
    pub calculus: CalculusConfig,
    #[serde(default)]
    pub scaling: Option<ScalingConfig>,
}

fn default_p() -> Vec<f64> {
    vec![2.0]
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SymbolConfig {
    pub coordinates: bool,
    pub mobius: Vec<Point>,
}

impl Default for SymbolConfig {
    fn default() -> Self {
        SymbolConfig { coordinates: true, mobius: Vec::new() }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub csv: Option<PathBuf>,
    pub summary: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct KernelConfig {
    pub pairs: usize,
    pub radius: f64,
}

impl Default for KernelConfig {
    fn default() -> Self {
        KernelConfig { pairs: 100, radius: 0.6 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TupleKind {
    Quotient,
    Diagonal,
    Triangular,
    Nonnormal,
}

impl fmt::Display for TupleKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TupleKind::Quotient => "quotient",
            TupleKind::Diagonal => "diagonal",
            TupleKind::Triangular => "triangular",
            TupleKind::Nonnormal => "nonnormal",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SpectrumConfig {
    pub tuple: TupleKind,
    pub size: usize,
    pub radius: f64,
    pub repeated: bool,
    pub points: Vec<Point>,
    pub grid: Option<GridConfig>,
    pub rank_tol: f64,
}

impl Default for SpectrumConfig {
    fn default() -> Self {
        SpectrumConfig {
            tuple: TupleKind::Quotient,
            size: 6,
            radius: 0.7,
            repeated: false,
            points: Vec::new(),
            grid: None,
            rank_tol: symdom::koszul::DEFAULT_RANK_TOL,
        }
    }
}

/// Every coordinate ranges over `x + iy` with `x, y` on `steps` equally
/// spaced values in `[min, max]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub min: f64,
    pub max: f64,
    pub steps: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TupleConfig {
    pub kind: TupleKind,
    pub size: usize,
    pub radius: f64,
    #[serde(default)]
    pub repeated: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CalculusConfig {
    /// Empty selects `1`, the coordinates and a few products.
    pub polynomials: Vec<String>,
    pub tuples: Vec<TupleConfig>,
}

impl Default for CalculusConfig {
    fn default() -> Self {
        let t = |kind| TupleConfig { kind, size: 4, radius: 0.6, repeated: false };
        CalculusConfig {
            polynomials: Vec::new(),
            tuples: vec![t(TupleKind::Diagonal), t(TupleKind::Triangular), t(TupleKind::Nonnormal)],
        }
    }
}

/// Affine change `T -> c T + d` applied to the compressed symbols.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScalingConfig {
    pub c: f64,
    #[serde(default)]
    pub d: Option<Point>,
}

/// Values given on the command line, which take precedence over the file.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub d_list: Option<Vec<usize>>,
    pub lambda: Option<f64>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
}

/// A problem in the configuration, located by key path.
#[derive(Clone, Debug, PartialEq)]
pub struct Issue {
    pub key: String,
    pub message: String,
}

fn issue(key: impl Into<String>, message: impl Into<String>) -> Issue {
    Issue { key: key.into(), message: message.into() }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConfigError {
    pub source_name: String,
    pub problems: Vec<(Option<usize>, String)>,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, (line, msg)) in self.problems.iter().enumerate() {
            if k > 0 {
                writeln!(f)?;
            }
            match line {
                Some(l) => write!(f, "{}:{l}: {msg}", self.source_name)?,
                None => write!(f, "{}: {msg}", self.source_name)?,
            }
        }
        Ok(())
    }
}

impl std::error::Error for ConfigError {}

/// A parsed configuration together with the text it came from, so that
/// validation problems can be reported by line.
#[derive(Clone, Debug)]
pub struct LoadedConfig {
    pub config: ExperimentConfig,
    source_name: String,
    raw: String,
    overridden: Vec<&'static str>,
}

impl LoadedConfig {
    pub fn parse(source_name: &str, raw: &str) -> Result<Self, ConfigError> {
        let config: ExperimentConfig = serde_json::from_str(raw).map_err(|e| ConfigError {
            source_name: source_name.to_string(),
            problems: vec![(Some(e.line()), format!("column {}: {e}", e.column()))],
        })?;
        Ok(LoadedConfig { config, source_name: source_name.to_string(), raw: raw.to_string(), overridden: Vec::new() })
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(d) = &o.d_list {
            self.config.d_list = d.clone();
            self.overridden.push("D");
        }
        if let Some(l) = o.lambda {
            self.config.lambda = l;
            self.overridden.push("lambda");
        }
        if let Some(s) = o.seed {
            self.config.seed = s;
        }
        if let Some(out) = &o.out {
            self.config.output.csv = Some(out.clone());
        }
    }

    /// Checks the whole configuration and reports every problem found.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let issues = self.config.issues();
        if issues.is_empty() {
            return Ok(());
        }
        let problems = issues
            .into_iter()
            .map(|i| {
                let root = i.key.split('.').next().unwrap_or_default();
                if self.overridden.contains(&root) {
                    (None, format!("--{root} flag: {}", i.message))
                } else {
                    (line_of_key(&self.raw, &i.key), format!("`{}`: {}", i.key, i.message))
                }
            })
            .collect();
        Err(ConfigError { source_name: self.source_name.clone(), problems })
    }
}

/// 1-based line of the deepest key of a dotted path present in `raw`.
fn line_of_key(raw: &str, path: &str) -> Option<usize> {
    let mut from = 0;
    let mut found = None;
    for seg in path.split('.') {
        let Some(pos) = find_key(&raw[from..], seg) else { break };
        from += pos;
        found = Some(from);
        from += seg.len() + 2;
    }
    found.map(|pos| raw[..pos].matches('\n').count() + 1)
}

fn find_key(text: &str, key: &str) -> Option<usize> {
    let quoted = format!("\"{key}\"");
    let mut start = 0;
    while let Some(p) = text[start..].find(&quoted) {
        let at = start + p;
        if text[at + quoted.len()..].trim_start().starts_with(':') {
            return Some(at);
        }
        start = at + quoted.len();
    }
    None
}

fn in_unit_interval(x: f64) -> bool {
    x > 0.0 && x < 1.0
}

impl ExperimentConfig {
    pub fn from_json(raw: &str) -> serde_json::Result<Self> {
        serde_json::from_str(raw)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("configuration serializes")
    }

    pub fn nvars(&self) -> usize {
        self.domain.dim()
    }

    pub fn generator_polys(&self) -> symdom::Result<Vec<Polynomial>> {
        self.generators.iter().map(|g| Polynomial::parse(g, self.nvars())).collect()
    }

    /// Polynomials of the calculus suite, with the built-in list when none
    /// are configured.
    pub fn calculus_polys(&self) -> symdom::Result<Vec<Polynomial>> {
        let n = self.nvars();
        if !self.calculus.polynomials.is_empty() {
            return self.calculus.polynomials.iter().map(|s| Polynomial::parse(s, n)).collect();
        }
        let mut out = vec![Polynomial::one(n)];
        out.extend((0..n).map(|i| Polynomial::var(n, i)));
        let all = (1..n).fold(Polynomial::var(n, 0), |acc, i| &acc * &Polynomial::var(n, i));
        if n > 1 {
            out.push(all);
        }
        out.push(Polynomial::var(n, 0).pow(3));
        Ok(out)
    }

    /// Quadrature levels to run, with a per-family default.
    pub fn levels(&self) -> Vec<u32> {
        if !self.quadrature_levels.is_empty() {
            return self.quadrature_levels.clone();
        }
        match self.domain.kind() {
            DomainKind::Ball { n: 1 } => vec![10],
            DomainKind::Polydisc { n } => vec![(20 / n as u32).clamp(1, 8)],
            DomainKind::Ball { .. } => vec![4],
            DomainKind::MatrixBall { .. } => Vec::new(),
        }
    }

    fn check_point(&self, key: &str, z: &Point, interior: bool, out: &mut Vec<Issue>) {
        if z.len() != self.nvars() {
            out.push(issue(key, format!("expected {} coordinates, got {}", self.nvars(), z.len())));
        } else if interior && !self.domain.contains(z).unwrap_or(false) {
            out.push(issue(key, format!("point must lie inside {}", self.domain)));
        }
    }

    fn check_tuple(&self, key: &str, kind: TupleKind, size: usize, radius: f64, out: &mut Vec<Issue>) {
        if size == 0 {
            out.push(issue(key, "tuple size must be positive"));
        }
        if kind != TupleKind::Quotient && !in_unit_interval(radius) {
            out.push(issue(key, format!("radius must lie in (0, 1), got {radius}")));
        }
    }

    /// Every problem in the configuration, in schema order.
    pub fn issues(&self) -> Vec<Issue> {
        let mut out = Vec::new();
        let min_d = self.d_list.iter().copied().min();
        if self.d_list.is_empty() {
            out.push(issue("D", "list of truncation degrees must not be empty"));
        }
        if !self.lambda.is_finite() {
            out.push(issue("lambda", "must be finite"));
        } else {
            match wallach_classify(self.lambda, &self.domain) {
                WallachClassification::Continuous => {}
                other => out.push(issue(
                    "lambda",
                    format!(
                        "weight {} on {} must lie in the continuous part of the Wallach set (lambda > {}), found {other:?}",
                        self.lambda,
                        self.domain,
                        self.domain.continuous_threshold()
                    ),
                )),
            }
        }
        for (k, g) in self.generators.iter().enumerate() {
            match Polynomial::parse(g, self.nvars()) {
                Err(e) => out.push(issue("generators", format!("entry {k} `{g}`: {e}"))),
                Ok(p) if p.is_zero() => out.push(issue("generators", format!("entry {k} `{g}` is zero"))),
                Ok(p) => {
                    let deg = p.degree().unwrap_or(0) as usize;
                    if let Some(m) = min_d.filter(|&m| deg > m) {
                        out.push(issue("generators", format!("entry {k} `{g}` has degree {deg} > min(D) = {m}")));
                    }
                }
            }
        }
        for (k, z) in self.symbols.mobius.iter().enumerate() {
            self.check_point(&format!("symbols.mobius[{k}]"), z, true, &mut out);
        }
        if self.p.is_empty() {
            out.push(issue("p", "list of Schatten exponents must not be empty"));
        }
        for &p in &self.p {
            if !(p.is_finite() && p >= 1.0) {
                out.push(issue("p", format!("Schatten exponent must be a finite number >= 1, got {p}")));
            }
        }
        if let (Some(w), Some(m)) = (self.window, min_d) {
            if w > m {
                out.push(issue("window", format!("window {w} exceeds min(D) = {m}")));
            }
        }
        for &l in &self.quadrature_levels {
            if l == 0 {
                out.push(issue("quadrature_levels", "levels must be >= 1"));
            } else if !matches!(self.domain.kind(), DomainKind::MatrixBall { .. }) {
                if let Err(e) = node_count(&self.domain, l) {
                    out.push(issue("quadrature_levels", e.to_string()));
                }
            }
        }
        self.kernel_issues(&mut out);
        self.spectrum_issues(&mut out);
        self.calculus_issues(&mut out);
        if let Some(s) = &self.scaling {
            if !(s.c.is_finite() && s.c > 0.0) {
                out.push(issue("scaling.c", format!("scale must be positive, got {}", s.c)));
            }
            if let Some(d) = &s.d {
                self.check_point("scaling.d", d, false, &mut out);
            }
        }
        out
    }

    fn kernel_issues(&self, out: &mut Vec<Issue>) {
        if self.kernel.pairs == 0 {
            out.push(issue("kernel.pairs", "must be positive"));
        }
        if !in_unit_interval(self.kernel.radius) {
            out.push(issue("kernel.radius", format!("must lie in (0, 1), got {}", self.kernel.radius)));
        }
    }

    fn spectrum_issues(&self, out: &mut Vec<Issue>) {
        let s = &self.spectrum;
        self.check_tuple("spectrum", s.tuple, s.size, s.radius, out);
        if !in_unit_interval(s.rank_tol) {
            out.push(issue("spectrum.rank_tol", format!("must lie in (0, 1), got {}", s.rank_tol)));
        }
        for (k, z) in s.points.iter().enumerate() {
            self.check_point(&format!("spectrum.points[{k}]"), z, false, out);
        }
        if let Some(g) = &s.grid {
            if g.steps == 0 || g.min.partial_cmp(&g.max).is_none_or(|o| o.is_gt()) {
                out.push(issue("spectrum.grid", "needs steps >= 1 and min <= max"));
            }
            let total = g.steps.checked_pow(2 * self.nvars() as u32);
            if total.is_none_or(|t| t > MAX_GRID_POINTS) {
                out.push(issue("spectrum.grid", format!("grid exceeds {MAX_GRID_POINTS} points")));
            }
        }
    }

    fn calculus_issues(&self, out: &mut Vec<Issue>) {
        for (k, p) in self.calculus.polynomials.iter().enumerate() {
            if let Err(e) = Polynomial::parse(p, self.nvars()) {
                out.push(issue("calculus.polynomials", format!("entry {k} `{p}`: {e}")));
            }
        }
        for (k, t) in self.calculus.tuples.iter().enumerate() {
            let key = format!("calculus.tuples[{k}]");
            if t.kind == TupleKind::Quotient {
                out.push(issue(&key, "quotient tuples are not supported by the calculus suite"));
            }
            self.check_tuple(&key, t.kind, t.size, t.radius, out);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
  "domain": {"kind": "ball", "n": 2},
  "lambda": 1.0,
  "D": [4, 6]
}"#;

    #[test]
    fn defaults_fill_in() {
        let c = ExperimentConfig::from_json(MINIMAL).unwrap();
        assert_eq!(c.p, vec![2.0]);
        assert!(c.symbols.coordinates);
        assert_eq!(c.kernel.pairs, 100);
        assert_eq!(c.calculus.tuples.len(), 3);
        assert!(c.issues().is_empty());
    }

    #[test]
    fn round_trip() {
        let mut c = ExperimentConfig::from_json(MINIMAL).unwrap();
        c.symbols.mobius.push(Point::from_vec(vec![symdom::linalg::c64(0.4, -0.1), symdom::linalg::real(0.0)]));
        c.scaling = Some(ScalingConfig { c: 0.5, d: None });
        c.spectrum.grid = Some(GridConfig { min: -0.5, max: 0.5, steps: 3 });
        let again = ExperimentConfig::from_json(&c.to_json()).unwrap();
        assert_eq!(again, c);
    }

    #[test]
    fn keys_are_located() {
        let raw = "{\n  \"domain\": {\"kind\": \"ball\", \"n\": 2},\n  \"lambda\": 1.0,\n  \"D\": [],\n  \"kernel\": {\n    \"radius\": 2.0\n  }\n}";
        let err = LoadedConfig::parse("c.json", raw).unwrap().validate().unwrap_err();
        let text = err.to_string();
        assert!(text.contains("c.json:4: `D`"), "{text}");
        assert!(text.contains("c.json:6: `kernel.radius`"), "{text}");
    }

    #[test]
    fn syntax_errors_carry_position() {
        let err = LoadedConfig::parse("c.json", "{\n  \"domain\": {\"kind\": \"ball\", \"n\": 2},\n  \"lambda\": ,\n}")
            .unwrap_err();
        assert_eq!(err.problems[0].0, Some(3));
    }

    #[test]
    fn unknown_fields_are_rejected() {
        assert!(ExperimentConfig::from_json(&MINIMAL.replace("\"D\"", "\"d\"")).is_err());
        assert!(ExperimentConfig::from_json(&MINIMAL.replace("[4, 6]", "[4, 6], \"extra\": 1")).is_err());
    }

    #[test]
    fn invariants() {
        let mut c = ExperimentConfig::from_json(MINIMAL).unwrap();
        c.lambda = -0.5;
        c.generators = vec!["z1^5".into(), "w".into()];
        c.p = vec![0.5];
        c.symbols.mobius = vec![Point::from_vec(vec![symdom::linalg::real(1.0), symdom::linalg::real(0.0)])];
        let keys: Vec<String> = c.issues().into_iter().map(|i| i.key).collect();
        assert_eq!(keys, ["lambda", "generators", "generators", "symbols.mobius[0]", "p"]);
    }

    #[test]
    fn overrides_are_reported_as_flags() {
        let mut l = LoadedConfig::parse("c.json", MINIMAL).unwrap();
        l.apply(&Overrides { d_list: Some(vec![]), ..Default::default() });
        let err = l.validate().unwrap_err();
        assert_eq!(err.problems, vec![(None, "--D flag: list of truncation degrees must not be empty".to_string())]);
    }

    #[test]
    fn default_levels_per_family() {
        let mut c = ExperimentConfig::from_json(MINIMAL).unwrap();
        assert_eq!(c.levels(), vec![4]);
        c.domain = DomainSpec::polydisc(3).unwrap();
        assert_eq!(c.levels(), vec![6]);
        c.domain = DomainSpec::ball(1).unwrap();
        assert_eq!(c.levels(), vec![10]);
    }
}
