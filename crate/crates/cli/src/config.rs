//! Run configuration: `[section]` headers, `key = value` lines, `#` comments
//! (or whole lines starting with `;`), arrays as comma-separated values.
//! Matrix rows are separated by `;` inside a value.

use std::collections::BTreeMap;
use std::path::PathBuf;

use nalgebra::DMatrix;
use ranksde_core::analysis::TestFunction;
use ranksde_core::models::{
    make_common_vol_bps, make_hybrid_atlas, make_name_based, make_polynomial, make_rank_vol_bps, HybridAtlasParams,
    NameBasedParams, PolynomialParams, RankVolParams,
};
use ranksde_core::sim::{BoundaryPolicy, SimConfig};
use ranksde_core::{DomainKind, ModelSpec, StatePoint};

use crate::error::ConfigError;

const SECTIONS: [&str; 4] = ["model", "sim", "analysis", "output"];

#[derive(Debug, Clone)]
struct Entry {
    value: String,
    line: usize,
    used: bool,
}

/// Parsed key/value text with line numbers kept for diagnostics.
#[derive(Debug, Clone, Default)]
struct Document {
    sections: BTreeMap<String, BTreeMap<String, Entry>>,
}

impl Document {
    fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut doc = Document::default();
        let mut current: Option<String> = None;
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let s = strip_comment(raw).trim();
            if s.is_empty() {
                continue;
            }
            if let Some(rest) = s.strip_prefix('[') {
                let name = rest
                    .strip_suffix(']')
                    .ok_or_else(|| ConfigError::at(line, "", "unterminated section header"))?
                    .trim()
                    .to_string();
                if !SECTIONS.contains(&name.as_str()) {
                    return Err(ConfigError::at(line, &name, "unknown section"));
                }
                if doc.sections.contains_key(&name) {
                    return Err(ConfigError::at(line, &name, "duplicate section"));
                }
                doc.sections.insert(name.clone(), BTreeMap::new());
                current = Some(name);
                continue;
            }
            let (key, value) = s
                .split_once('=')
                .ok_or_else(|| ConfigError::at(line, "", format!("expected `key = value`, got {s:?}")))?;
            let key = key.trim().to_string();
            let section = current
                .as_ref()
                .ok_or_else(|| ConfigError::at(line, &key, "key appears before any section header"))?;
            let table = doc.sections.get_mut(section).expect("section inserted");
            if table.contains_key(&key) {
                return Err(ConfigError::at(line, &format!("{section}.{key}"), "duplicate key"));
            }
            table.insert(key, Entry { value: value.trim().to_string(), line, used: false });
        }
        Ok(doc)
    }

    fn take(&mut self, section: &str, key: &str) -> Option<(String, usize)> {
        let e = self.sections.get_mut(section)?.get_mut(key)?;
        e.used = true;
        Some((e.value.clone(), e.line))
    }

    fn unused(&self) -> Option<(usize, String)> {
        self.sections
            .iter()
            .flat_map(|(s, t)| t.iter().map(move |(k, e)| (s, k, e)))
            .filter(|(_, _, e)| !e.used)
            .map(|(s, k, e)| (e.line, format!("{s}.{k}")))
            .min()
    }
}

fn strip_comment(s: &str) -> &str {
    if s.trim_start().starts_with(';') {
        return "";
    }
    s.find('#').map_or(s, |i| &s[..i])
}

/// Typed accessors over one section.
struct Section<'a> {
    doc: &'a mut Document,
    name: &'static str,
}

impl Section<'_> {
    fn field(&self, key: &str) -> String {
        format!("{}.{}", self.name, key)
    }

    fn raw(&mut self, key: &str) -> Option<(String, usize)> {
        self.doc.take(self.name, key)
    }

    fn required(&mut self, key: &str) -> Result<(String, usize), ConfigError> {
        let f = self.field(key);
        self.raw(key).ok_or_else(|| ConfigError::missing(&f))
    }

    fn parse_num<T: std::str::FromStr>(&self, key: &str, v: &str, line: usize) -> Result<T, ConfigError> {
        v.parse::<T>()
            .map_err(|_| ConfigError::at(line, &self.field(key), format!("cannot parse {v:?} as a number")))
    }

    fn f64_opt(&mut self, key: &str) -> Result<Option<f64>, ConfigError> {
        match self.raw(key) {
            None => Ok(None),
            Some((v, line)) => {
                let x: f64 = self.parse_num(key, &v, line)?;
                if !x.is_finite() {
                    return Err(ConfigError::at(line, &self.field(key), "value must be finite"));
                }
                Ok(Some(x))
            }
        }
    }

    fn f64_req(&mut self, key: &str) -> Result<f64, ConfigError> {
        let f = self.field(key);
        self.f64_opt(key)?.ok_or_else(|| ConfigError::missing(&f))
    }

    fn usize_opt(&mut self, key: &str) -> Result<Option<usize>, ConfigError> {
        match self.raw(key) {
            None => Ok(None),
            Some((v, line)) => self.parse_num(key, &v, line).map(Some),
        }
    }

    fn u64_opt(&mut self, key: &str) -> Result<Option<u64>, ConfigError> {
        match self.raw(key) {
            None => Ok(None),
            Some((v, line)) => self.parse_num(key, &v, line).map(Some),
        }
    }

    fn bool_opt(&mut self, key: &str) -> Result<Option<bool>, ConfigError> {
        match self.raw(key) {
            None => Ok(None),
            Some((v, line)) => match v.as_str() {
                "true" | "yes" | "1" => Ok(Some(true)),
                "false" | "no" | "0" => Ok(Some(false)),
                _ => Err(ConfigError::at(line, &self.field(key), format!("expected true or false, got {v:?}"))),
            },
        }
    }

    fn list_opt(&mut self, key: &str) -> Result<Option<(Vec<f64>, usize)>, ConfigError> {
        match self.raw(key) {
            None => Ok(None),
            Some((v, line)) => {
                let xs = v
                    .split(',')
                    .map(|p| self.parse_num::<f64>(key, p.trim(), line))
                    .collect::<Result<Vec<_>, _>>()?;
                Ok(Some((xs, line)))
            }
        }
    }

    fn list_req(&mut self, key: &str) -> Result<(Vec<f64>, usize), ConfigError> {
        let f = self.field(key);
        self.list_opt(key)?.ok_or_else(|| ConfigError::missing(&f))
    }

    /// A list of length `d`, or a single value broadcast to `d` entries.
    fn vector(&mut self, key: &str, d: usize, default: Option<f64>) -> Result<Vec<f64>, ConfigError> {
        match self.list_opt(key)? {
            None => match default {
                Some(v) => Ok(vec![v; d]),
                None => Err(ConfigError::missing(&self.field(key))),
            },
            Some((xs, _)) if xs.len() == 1 => Ok(vec![xs[0]; d]),
            Some((xs, _)) if xs.len() == d => Ok(xs),
            Some((xs, line)) => {
                Err(ConfigError::at(line, &self.field(key), format!("expected {d} values, got {}", xs.len())))
            }
        }
    }
}

/// Model family and its parameters.
#[derive(Debug, Clone, PartialEq)]
pub enum ModelConfig {
    NameBased(NameBasedParams),
    HybridAtlas(HybridAtlasParams),
    AtlasClassic { d: usize, g: f64, sigma: f64 },
    CommonVolBps { g: Vec<f64>, sigma: f64 },
    TractablePolynomial(PolynomialParams),
    BpsRankVol(RankVolParams),
}

impl ModelConfig {
    pub fn family(&self) -> &'static str {
        match self {
            ModelConfig::NameBased(_) => "name_based",
            ModelConfig::HybridAtlas(_) => "hybrid_atlas",
            ModelConfig::AtlasClassic { .. } => "atlas_classic",
            ModelConfig::CommonVolBps { .. } => "common_vol_bps",
            ModelConfig::TractablePolynomial(_) => "tractable_polynomial",
            ModelConfig::BpsRankVol(_) => "bps_rank_vol",
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            ModelConfig::NameBased(p) => p.dim(),
            ModelConfig::HybridAtlas(p) => p.dim(),
            ModelConfig::AtlasClassic { d, .. } => *d,
            ModelConfig::CommonVolBps { g, .. } => g.len(),
            ModelConfig::TractablePolynomial(p) => p.a.len(),
            ModelConfig::BpsRankVol(p) => p.g.len(),
        }
    }

    pub fn domain(&self) -> DomainKind {
        match self {
            ModelConfig::CommonVolBps { .. } | ModelConfig::BpsRankVol(_) => DomainKind::FullSpace(self.dim()),
            _ => DomainKind::Simplex(self.dim()),
        }
    }

    /// Hybrid Atlas parameters, for the families that have them.
    pub fn hybrid_params(&self) -> Option<HybridAtlasParams> {
        match self {
            ModelConfig::HybridAtlas(p) => Some(p.clone()),
            ModelConfig::AtlasClassic { d, g, sigma } => Some(HybridAtlasParams::classic_atlas(*d, *g, *sigma)),
            _ => None,
        }
    }

    /// Rank-volatility parameters of either BPS family.
    pub fn bps_params(&self) -> Option<RankVolParams> {
        match self {
            ModelConfig::CommonVolBps { g, sigma } => {
                Some(RankVolParams { g: g.clone(), sigma2: vec![sigma * sigma; g.len()] })
            }
            ModelConfig::BpsRankVol(p) => Some(p.clone()),
            _ => None,
        }
    }

    pub fn build(&self) -> ranksde_core::Result<ModelSpec> {
        match self {
            ModelConfig::NameBased(p) => make_name_based(p.clone()),
            ModelConfig::HybridAtlas(p) => make_hybrid_atlas(p.clone()),
            ModelConfig::AtlasClassic { d, g, sigma } => {
                make_hybrid_atlas(HybridAtlasParams::classic_atlas(*d, *g, *sigma))
            }
            ModelConfig::CommonVolBps { g, sigma } => make_common_vol_bps(g.clone(), *sigma),
            ModelConfig::TractablePolynomial(p) => make_polynomial(p.clone()),
            ModelConfig::BpsRankVol(p) => make_rank_vol_bps(p.clone()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnalysisConfig {
    pub eps: Vec<f64>,
    pub functions: Vec<TestFunction>,
    pub quadrature_samples: usize,
    pub paths: usize,
    pub bins: usize,
    /// Upper edge of the gap histograms; `None` uses the largest observed gap.
    pub gap_max: Option<f64>,
    pub nonexplosion_samples: usize,
    /// Also write local-time and residual series in `occupancy`.
    pub diagnostics: bool,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        Self {
            eps: vec![1e-1, 1e-2, 1e-3],
            functions: Vec::new(),
            quadrature_samples: 0,
            paths: 1,
            bins: 50,
            gap_max: None,
            nonexplosion_samples: 20_000,
            diagnostics: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutputConfig {
    pub dir: PathBuf,
    pub prefix: String,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { dir: PathBuf::from("out"), prefix: "run".into() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub model: ModelConfig,
    pub x0: Vec<f64>,
    pub sim: SimConfig,
    pub analysis: AnalysisConfig,
    pub output: OutputConfig,
    /// The configuration text as read.
    pub source: String,
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut doc = Document::parse(text)?;
        if !doc.sections.contains_key("model") {
            return Err(ConfigError::missing("model"));
        }
        let model = parse_model(&mut Section { doc: &mut doc, name: "model" })?;
        let x0 = {
            let mut s = Section { doc: &mut doc, name: "model" };
            match s.list_opt("x0")? {
                None => default_x0(model.domain()),
                Some((xs, line)) => {
                    StatePoint::new(model.domain(), xs)
                        .map_err(|e| ConfigError::at(line, "model.x0", e.to_string()))?
                        .into_inner()
                }
            }
        };
        let sim = parse_sim(&mut Section { doc: &mut doc, name: "sim" })?;
        let analysis = parse_analysis(&mut Section { doc: &mut doc, name: "analysis" }, model.dim())?;
        let output = parse_output(&mut Section { doc: &mut doc, name: "output" })?;
        if let Some((line, field)) = doc.unused() {
            return Err(ConfigError::at(line, &field, format!("unknown key for family {}", model.family())));
        }
        Ok(Self { model, x0, sim, analysis, output, source: text.to_string() })
    }

    pub fn from_path(path: &std::path::Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError::new(None, "", format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn start(&self) -> ranksde_core::Result<StatePoint> {
        StatePoint::new(self.model.domain(), self.x0.clone())
    }
}

/// Off-tie starting point: weights proportional to `d, d−1, …, 1` on the
/// simplex, `(d−1, d−2, …, 0)/10` on `R^d`.
pub fn default_x0(domain: DomainKind) -> Vec<f64> {
    let d = domain.dim();
    match domain {
        DomainKind::Simplex(_) => {
            let s = (d * (d + 1) / 2) as f64;
            (0..d).map(|i| (d - i) as f64 / s).collect()
        }
        DomainKind::FullSpace(_) => (0..d).map(|i| (d - 1 - i) as f64 * 0.1).collect(),
    }
}

fn invalid(line: usize, field: &str, e: ranksde_core::Error) -> ConfigError {
    ConfigError::at(line, field, e.to_string())
}

fn parse_model(s: &mut Section) -> Result<ModelConfig, ConfigError> {
    let (family, fline) = s.required("family")?;
    let model = match family.as_str() {
        "name_based" => {
            let (alpha, _) = s.list_req("alpha")?;
            let d = alpha.len();
            let beta = s.f64_req("beta")?;
            let sigma = s.vector("sigma", d, Some(1.0))?;
            ModelConfig::NameBased(NameBasedParams { beta, alpha, sigma })
        }
        "hybrid_atlas" => {
            let (g, _) = s.list_req("g")?;
            let d = g.len();
            let beta = s.f64_opt("beta")?.unwrap_or(0.0);
            let gamma = s.vector("gamma", d, Some(0.0))?;
            let sigma = s.f64_opt("sigma")?.unwrap_or(1.0);
            ModelConfig::HybridAtlas(HybridAtlasParams { beta, gamma, g, sigma })
        }
        "atlas_classic" => {
            let d = s.usize_opt("d")?.ok_or_else(|| ConfigError::missing("model.d"))?;
            let g = s.f64_req("g")?;
            let sigma = s.f64_opt("sigma")?.unwrap_or(1.0);
            ModelConfig::AtlasClassic { d, g, sigma }
        }
        "common_vol_bps" => {
            let (g, _) = s.list_req("g")?;
            let sigma = s.f64_opt("sigma")?.unwrap_or(1.0);
            ModelConfig::CommonVolBps { g, sigma }
        }
        "tractable_polynomial" => {
            let (a, _) = s.list_req("a")?;
            let d = a.len();
            let alpha = match s.raw("alpha") {
                None => DMatrix::from_fn(d, d, |i, j| if i == j { 0.0 } else { 1.0 }),
                Some((v, line)) => parse_matrix(&v, d, line)?,
            };
            ModelConfig::TractablePolynomial(PolynomialParams { alpha, a })
        }
        "bps_rank_vol" => {
            let (g, _) = s.list_req("g")?;
            let d = g.len();
            let sigma2 = s.vector("sigma2", d, None)?;
            ModelConfig::BpsRankVol(RankVolParams { g, sigma2 })
        }
        other => {
            return Err(ConfigError::at(
                fline,
                "model.family",
                format!(
                    "unknown family {other:?}; expected one of name_based, hybrid_atlas, atlas_classic, \
                     common_vol_bps, tractable_polynomial, bps_rank_vol"
                ),
            ))
        }
    };
    model.build().map_err(|e| invalid(fline, "model", e))?;
    Ok(model)
}

/// A scalar (all off-diagonal entries) or `d` rows separated by `;`.
fn parse_matrix(v: &str, d: usize, line: usize) -> Result<DMatrix<f64>, ConfigError> {
    let bad = |m: String| ConfigError::at(line, "model.alpha", m);
    let rows: Vec<Vec<f64>> = v
        .split(';')
        .map(|r| r.split(',').map(|p| p.trim().parse::<f64>().map_err(|_| bad(format!("cannot parse {p:?}")))).collect())
        .collect::<Result<_, _>>()?;
    if rows.len() == 1 && rows[0].len() == 1 {
        let c = rows[0][0];
        return Ok(DMatrix::from_fn(d, d, |i, j| if i == j { 0.0 } else { c }));
    }
    if rows.len() != d || rows.iter().any(|r| r.len() != d) {
        return Err(bad(format!("expected a scalar or a {d}x{d} matrix")));
    }
    Ok(DMatrix::from_fn(d, d, |i, j| rows[i][j]))
}

fn parse_sim(s: &mut Section) -> Result<SimConfig, ConfigError> {
    let mut c = SimConfig::default();
    if let Some(v) = s.f64_opt("dt")? {
        c.dt = v;
    }
    if let Some(v) = s.f64_opt("horizon")? {
        c.horizon = v;
    }
    if let Some(v) = s.f64_opt("burn_in")? {
        c.burn_in = v;
    }
    if let Some(v) = s.u64_opt("seed")? {
        c.seed = v;
    }
    if let Some((v, line)) = s.raw("boundary_policy") {
        c.boundary_policy = match v.as_str() {
            "halve_step" => BoundaryPolicy::HalveStep,
            "reject_resample" => BoundaryPolicy::RejectResample,
            _ => {
                return Err(ConfigError::at(
                    line,
                    "sim.boundary_policy",
                    format!("expected halve_step or reject_resample, got {v:?}"),
                ))
            }
        };
    }
    if let Some(v) = s.usize_opt("max_halvings")? {
        c.max_halvings = v as u32;
    }
    if let Some(v) = s.usize_opt("thinning")? {
        c.thinning = v;
    }
    c.explosion_guard = s.f64_opt("explosion_guard")?;
    if let Some(v) = s.bool_opt("allow_non_conforming")? {
        c.allow_non_conforming = v;
    }
    c.validate().map_err(|e| ConfigError::new(None, "sim", e.to_string()))?;
    Ok(c)
}

fn parse_analysis(s: &mut Section, d: usize) -> Result<AnalysisConfig, ConfigError> {
    let mut a = AnalysisConfig::default();
    if let Some((eps, line)) = s.list_opt("eps")? {
        if eps.iter().any(|&e| !(e > 0.0)) {
            return Err(ConfigError::at(line, "analysis.eps", "every eps must be positive"));
        }
        a.eps = eps;
    }
    if let Some((v, line)) = s.raw("functions") {
        for name in v.split(',').map(str::trim).filter(|n| !n.is_empty()) {
            let f: TestFunction = name.parse().map_err(|e: ranksde_core::Error| invalid(line, "analysis.functions", e))?;
            f.check_dim(d).map_err(|e| invalid(line, "analysis.functions", e))?;
            a.functions.push(f);
        }
    }
    if let Some(v) = s.usize_opt("quadrature_samples")? {
        a.quadrature_samples = v;
    }
    if let Some(v) = s.usize_opt("paths")? {
        a.paths = v;
    }
    if let Some(v) = s.usize_opt("bins")? {
        a.bins = v;
    }
    a.gap_max = s.f64_opt("gap_max")?;
    if let Some(v) = s.usize_opt("nonexplosion_samples")? {
        a.nonexplosion_samples = v;
    }
    if let Some(v) = s.bool_opt("diagnostics")? {
        a.diagnostics = v;
    }
    if a.paths == 0 || a.bins == 0 {
        return Err(ConfigError::new(None, "analysis", "paths and bins must be >= 1"));
    }
    Ok(a)
}

fn parse_output(s: &mut Section) -> Result<OutputConfig, ConfigError> {
    let mut o = OutputConfig::default();
    if let Some((v, _)) = s.raw("dir") {
        o.dir = PathBuf::from(v);
    }
    if let Some((v, line)) = s.raw("prefix") {
        if v.is_empty() || v.contains(['/', '\\']) {
            return Err(ConfigError::at(line, "output.prefix", "prefix must be a non-empty file name"));
        }
        o.prefix = v;
    }
    Ok(o)
}

#[cfg(test)]
mod tests {
    use super::*;

    const ATLAS: &str = "\
# classic Atlas
[model]
family = atlas_classic
d = 3
g = 0.5
sigma = 1.0

[sim]
dt = 1e-3
horizon = 2
seed = 7
";

    #[test]
    fn parses_atlas() {
        let c = RunConfig::parse(ATLAS).unwrap();
        assert_eq!(c.model, ModelConfig::AtlasClassic { d: 3, g: 0.5, sigma: 1.0 });
        assert_eq!(c.sim.seed, 7);
        assert_eq!(c.sim.dt, 1e-3);
        assert_eq!(c.x0, vec![0.5, 1.0 / 3.0, 1.0 / 6.0]);
        assert_eq!(c.output, OutputConfig::default());
    }

    #[test]
    fn comments_and_blank_lines() {
        let c = RunConfig::parse("; leading\n[model] # header\nfamily = common_vol_bps # trailing\ng = 0.5, -0.5\n").unwrap();
        assert_eq!(c.model, ModelConfig::CommonVolBps { g: vec![0.5, -0.5], sigma: 1.0 });
        assert_eq!(c.x0, vec![0.1, 0.0]);
    }

    #[test]
    fn matrix_rows() {
        let text = "[model]\nfamily = tractable_polynomial\na = 1, 1\nalpha = 0, 2; 2, 0\n";
        let c = RunConfig::parse(text).unwrap();
        match c.model {
            ModelConfig::TractablePolynomial(p) => assert_eq!(p.alpha[(0, 1)], 2.0),
            m => panic!("{m:?}"),
        }
    }

    #[test]
    fn errors_carry_line_and_field() {
        let e = RunConfig::parse("[model]\nfamily = atlas_classic\nd = 3\ng = abc\n").unwrap_err();
        assert_eq!(e.line, Some(4));
        assert_eq!(e.field, "model.g");
        let e = RunConfig::parse("[model]\nfamily = atlas_classic\nd = 3\ng = 1\nbogus = 2\n").unwrap_err();
        assert_eq!((e.line, e.field.as_str()), (Some(5), "model.bogus"));
        let e = RunConfig::parse("[model]\nfamily = atlas_classic\nd = 3\n").unwrap_err();
        assert_eq!(e.field, "model.g");
        let e = RunConfig::parse("[modle]\n").unwrap_err();
        assert_eq!(e.line, Some(1));
        let e = RunConfig::parse("[model]\nfamily = atlas_classic\nd = 3\ng = 1\n[sim]\ndt = -1\n").unwrap_err();
        assert_eq!(e.field, "sim");
    }

    #[test]
    fn out_of_range_parameters_are_config_errors() {
        let e = RunConfig::parse("[model]\nfamily = name_based\nbeta = -1\nalpha = 0.1, 0.1, 0.1\n").unwrap_err();
        assert_eq!(e.line, Some(2));
        assert!(e.message.contains("i = "), "{}", e.message);
    }

    #[test]
    fn broadcast_and_length_checks() {
        let c = RunConfig::parse("[model]\nfamily = hybrid_atlas\ng = -1, 0, 1\ngamma = 0.1\nbeta = 0.5\n").unwrap();
        assert_eq!(c.model.hybrid_params().unwrap().gamma, vec![0.1; 3]);
        let e = RunConfig::parse("[model]\nfamily = hybrid_atlas\ng = -1, 0, 1\ngamma = 0.1, 0.2\n").unwrap_err();
        assert_eq!(e.line, Some(4));
    }

    #[test]
    fn analysis_section() {
        let text = format!("{ATLAS}[analysis]\neps = 0.5, 0.05\nfunctions = one, x1, x(2), gap1\npaths = 4\n");
        let c = RunConfig::parse(&text).unwrap();
        assert_eq!(c.analysis.eps, vec![0.5, 0.05]);
        assert_eq!(c.analysis.functions.len(), 4);
        assert_eq!(c.analysis.paths, 4);
        let bad = format!("{ATLAS}[analysis]\nfunctions = gap3\n");
        assert!(RunConfig::parse(&bad).is_err());
    }
}
