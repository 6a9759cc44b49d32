//! Scenario files: the JSON configuration the command line runs, its
//! validation, execution, and seeded random generators.
//!
//! A scenario file is `{"scenarios": [...]}`. Each scenario:
//!
//! | field        | meaning                                                              |
//! |--------------|----------------------------------------------------------------------|
//! | `id`         | unique name; reports are ordered by it                               |
//! | `dim`        | dimension `m` (1 to 4)                                               |
//! | `domain`     | `{"lo": [..], "hi": [..]}`                                           |
//! | `curve`      | `{"components": [..]}` in `x1..xm, t`, or `{"flow_of": {"components": [..], "time_dependent": false}}`; optional `time_window` (default `[-1, 1]`), `through_identity`, `tol` |
//! | `section`    | `{"functor": {"p", "q", "w"}, "components": [..]}`, `m^(p+q)` entries  |
//! | `t0`         | evaluation times (default `[0]`)                                     |
//! | `identities` | any of `eq1 eq2 eq3 eq4 lemma6 lemma2 bracket inverse_curve lie_oracle` |
//! | `samples`    | number of random sample points (default 20)                          |
//! | `points`     | explicit sample points; replaces random sampling                     |
//! | `seed`       | seed of the sample points                                            |
//! | `fields`     | `{"x": [..], "y": [..]}` autonomous fields for `bracket` and `lie_oracle` |
//! | `lemma2`     | `{"curve": [..] in t, "psi": [..] in x1..xm}`                        |
//! | `k`          | declared order of the first non-vanishing derivative                 |
//! | `k_max`      | search limit when `k` is not declared (default 3)                    |
//! | `tolerances` | `{"abs", "rel"}` overriding the per-identity defaults                |
//! | `rhs_sign`   | multiplies every right-hand side (default 1); regression fixtures use -1 |

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bundles::FunctorSpec;
use crate::calculus::{
    inverse_curve_derivative, sample_points, scalar_battery, verify_bracket, verify_cor2, verify_eq1, verify_eq2,
    verify_lemma2_invariance, verify_lemma6, verify_lie_oracle, Identity, IdentityReport, Tolerances, VerifyOptions,
    DEFAULT_K_MAX, EPS_ZERO,
};
use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::flows::DEFAULT_TOL;
use crate::maps::{DiffeoCurve, Domain, SmoothMap};
use crate::sections::{Section, VectorField};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    #[serde(default = "schema_version")]
    pub schema_version: u32,
    pub scenarios: Vec<ScenarioConfig>,
}

fn schema_version() -> u32 {
    SCHEMA_VERSION
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldConfig {
    pub components: Vec<String>,
    #[serde(default)]
    pub time_dependent: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CurveConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub components: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub flow_of: Option<FieldConfig>,
    #[serde(default = "default_window")]
    pub time_window: (f64, f64),
    #[serde(default)]
    pub through_identity: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
}

fn default_window() -> (f64, f64) {
    (-1.0, 1.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SectionConfig {
    pub functor: FunctorSpec,
    pub components: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldsConfig {
    pub x: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub y: Option<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Lemma2Config {
    pub curve: Vec<String>,
    pub psi: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub id: String,
    pub dim: usize,
    pub domain: Domain,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub curve: Option<CurveConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub section: Option<SectionConfig>,
    #[serde(default = "default_t0")]
    pub t0: Vec<f64>,
    pub identities: Vec<String>,
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub points: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fields: Option<FieldsConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lemma2: Option<Lemma2Config>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k_max: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerances: Option<Tolerances>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rhs_sign: Option<f64>,
}

fn default_t0() -> Vec<f64> {
    vec![0.0]
}

fn default_samples() -> usize {
    20
}

/// A validated scenario with every expression parsed.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub config: ScenarioConfig,
    pub identities: Vec<Identity>,
    pub domain: Domain,
    pub curve: Option<DiffeoCurve>,
    pub section: Option<Section>,
    pub x_field: Option<VectorField>,
    pub y_field: Option<VectorField>,
    pub lemma2: Option<(SmoothMap, SmoothMap)>,
    pub points: Vec<Vec<f64>>,
}

/// Overrides applied on top of every scenario.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunOptions {
    pub only: Option<Vec<Identity>>,
    pub tol_abs: Option<f64>,
    pub tol_rel: Option<f64>,
    pub fd_oracle: bool,
    pub extra_order: usize,
    pub tol_scale: Option<f64>,
}

fn config_err(id: &str, msg: impl Into<String>) -> Error {
    Error::Config {
        scenario: id.to_string(),
        msg: msg.into(),
    }
}

fn located<T>(id: &str, what: &str, r: Result<T>) -> Result<T> {
    r.map_err(|e| config_err(id, format!("{what}: {e}")))
}

fn parse_exprs(id: &str, what: &str, src: &[String], dim: usize, allow_time: bool) -> Result<Vec<Expr>> {
    src.iter()
        .enumerate()
        .map(|(i, s)| located(id, &format!("{what}[{i}]"), Expr::parse(s, dim, allow_time)))
        .collect()
}

impl ScenarioFile {
    pub fn from_json(text: &str) -> Result<ScenarioFile> {
        serde_json::from_str(text).map_err(|e| config_err("<file>", e.to_string()))
    }

    pub fn load(path: &std::path::Path) -> Result<ScenarioFile> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        ScenarioFile::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario files serialize") + "\n"
    }

    /// Validates every scenario; ids must be unique.
    pub fn compile(&self) -> Result<Vec<Scenario>> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(config_err(
                "<file>",
                format!("unsupported schema_version {}", self.schema_version),
            ));
        }
        let mut seen = std::collections::BTreeSet::new();
        for s in &self.scenarios {
            if !seen.insert(s.id.as_str()) {
                return Err(config_err(&s.id, "duplicate scenario id"));
            }
        }
        self.scenarios.iter().map(Scenario::compile).collect()
    }
}

impl Scenario {
    pub fn compile(cfg: &ScenarioConfig) -> Result<Scenario> {
        let id = cfg.id.as_str();
        let m = cfg.dim;
        if m == 0 || m > crate::jet::MAX_SPACE_DIM {
            return Err(config_err(id, format!("dim must be 1..={}", crate::jet::MAX_SPACE_DIM)));
        }
        located(id, "domain", cfg.domain.validate())?;
        if cfg.domain.dim() != m {
            return Err(config_err(id, format!("domain has dimension {}, dim is {m}", cfg.domain.dim())));
        }
        let domain = cfg.domain.clone();
        let identities = cfg
            .identities
            .iter()
            .map(|name| Identity::from_name(name).ok_or_else(|| config_err(id, format!("unknown identity '{name}'"))))
            .collect::<Result<Vec<_>>>()?;
        if identities.is_empty() {
            return Err(config_err(id, "no identities selected"));
        }

        let curve = match &cfg.curve {
            None => None,
            Some(c) => Some(compile_curve(id, m, &domain, c)?),
        };
        let section = match &cfg.section {
            None => None,
            Some(s) => {
                let comps = parse_exprs(id, "section.components", &s.components, m, false)?;
                Some(located(id, "section", Section::new(s.functor, domain.clone(), comps))?)
            }
        };
        let field = |what: &str, src: &[String]| -> Result<VectorField> {
            let comps = parse_exprs(id, what, src, m, false)?;
            located(id, what, VectorField::new(comps, false, domain.clone()))
        };
        let (x_field, y_field) = match &cfg.fields {
            None => (None, None),
            Some(f) => (
                Some(field("fields.x", &f.x)?),
                f.y.as_ref().map(|y| field("fields.y", y)).transpose()?,
            ),
        };
        let lemma2 = match &cfg.lemma2 {
            None => None,
            Some(l) => {
                let c = parse_exprs(id, "lemma2.curve", &l.curve, 0, true)?;
                let psi = parse_exprs(id, "lemma2.psi", &l.psi, m, false)?;
                if c.len() != m || psi.len() != m {
                    return Err(config_err(id, format!("lemma2 maps need {m} components")));
                }
                Some((
                    located(id, "lemma2.curve", SmoothMap::new(c, 0, true, None))?,
                    located(id, "lemma2.psi", SmoothMap::new(psi, m, false, None))?,
                ))
            }
        };

        for ident in &identities {
            let missing = match ident {
                Identity::Eq1 | Identity::Eq2 | Identity::Eq3 | Identity::Eq4 | Identity::Lemma6 => {
                    if curve.is_none() {
                        Some("curve")
                    } else if section.is_none() {
                        Some("section")
                    } else {
                        None
                    }
                }
                Identity::InverseCurve => curve.is_none().then_some("curve"),
                Identity::Bracket => {
                    if y_field.is_none() {
                        Some("fields.x and fields.y")
                    } else if section.is_none() {
                        Some("section")
                    } else {
                        None
                    }
                }
                Identity::LieOracle => {
                    if x_field.is_none() {
                        Some("fields.x")
                    } else if section.is_none() {
                        Some("section")
                    } else {
                        None
                    }
                }
                Identity::Lemma2 => lemma2.is_none().then_some("lemma2"),
            };
            if let Some(what) = missing {
                return Err(config_err(id, format!("identity '{ident}' needs {what}")));
            }
        }
        if let Some(c) = &curve {
            let (lo, hi) = c.time_window;
            if let Some(t) = cfg.t0.iter().find(|t| !(lo..=hi).contains(*t)) {
                return Err(config_err(id, format!("t0 = {t} outside the time window [{lo}, {hi}]")));
            }
        }
        if cfg.t0.is_empty() {
            return Err(config_err(id, "t0 list is empty"));
        }

        let points = match &cfg.points {
            Some(p) => {
                for x in p {
                    if x.len() != m || !domain.contains(x) {
                        return Err(config_err(id, format!("sample point {x:?} is not inside the domain")));
                    }
                }
                p.clone()
            }
            None => sample_points(&domain, cfg.samples, cfg.seed),
        };
        if points.is_empty() {
            return Err(config_err(id, "no sample points"));
        }
        Ok(Scenario {
            config: cfg.clone(),
            identities,
            domain,
            curve,
            section,
            x_field,
            y_field,
            lemma2,
            points,
        })
    }

    fn options(&self, identity: Identity, run: &RunOptions) -> VerifyOptions {
        let cfg = &self.config;
        let mut tol = cfg.tolerances.unwrap_or_else(|| identity.default_tolerances());
        if let Some(a) = run.tol_abs {
            tol.abs = a;
        }
        if let Some(r) = run.tol_rel {
            tol.rel = r;
        }
        if let Some(f) = run.tol_scale {
            tol = tol.scaled(f);
        }
        VerifyOptions {
            scenario: cfg.id.clone(),
            seed: cfg.seed,
            tol,
            eps_zero: EPS_ZERO,
            k_max: cfg.k_max.unwrap_or(DEFAULT_K_MAX),
            k: cfg.k,
            extra_order: run.extra_order,
            fd_oracle: run.fd_oracle,
            rhs_sign: cfg.rhs_sign.unwrap_or(1.0),
        }
    }

    /// Runs the selected identities; one report per identity, with the
    /// records of all `t0` values merged.
    pub fn run(&self, run: &RunOptions) -> Vec<IdentityReport> {
        let selected: Vec<Identity> = self
            .identities
            .iter()
            .copied()
            .filter(|i| run.only.as_ref().is_none_or(|only| only.contains(i)))
            .collect();
        let mut out: BTreeMap<Identity, Vec<IdentityReport>> = BTreeMap::new();
        let t0s = &self.config.t0;
        let pts = &self.points;
        for &ident in &selected {
            let opts = self.options(ident, run);
            let curve = self.curve.as_ref();
            let section = self.section.as_ref();
            let parts: Vec<IdentityReport> = match ident {
                Identity::Eq1 => t0s
                    .iter()
                    .map(|&t| verify_eq1(curve.unwrap(), section.unwrap(), t, pts, &opts))
                    .collect(),
                Identity::Eq2 => t0s
                    .iter()
                    .map(|&t| verify_eq2(curve.unwrap(), section.unwrap(), t, pts, &opts))
                    .collect(),
                Identity::Eq3 | Identity::Eq4 => t0s
                    .iter()
                    .map(|&t| {
                        let (e3, e4) = verify_cor2(curve.unwrap(), section.unwrap(), t, pts, &opts);
                        if ident == Identity::Eq3 {
                            e3
                        } else {
                            e4
                        }
                    })
                    .collect(),
                Identity::InverseCurve => t0s
                    .iter()
                    .map(|&t| inverse_curve_derivative(curve.unwrap(), t, pts, &opts))
                    .collect(),
                Identity::Lemma6 => vec![verify_lemma6(curve.unwrap(), section.unwrap(), pts, &opts)],
                Identity::Bracket => vec![verify_bracket(
                    self.x_field.as_ref().unwrap(),
                    self.y_field.as_ref().unwrap(),
                    section.unwrap(),
                    pts,
                    &opts,
                )],
                Identity::LieOracle => vec![verify_lie_oracle(
                    self.x_field.as_ref().unwrap(),
                    section.unwrap(),
                    pts,
                    self.config.curve.as_ref().and_then(|c| c.tol).unwrap_or(DEFAULT_TOL),
                    &opts,
                )],
                Identity::Lemma2 => {
                    let (c, psi) = self.lemma2.as_ref().unwrap();
                    vec![verify_lemma2_invariance(c, psi, &scalar_battery(self.config.dim), &opts)]
                }
            };
            out.insert(ident, parts);
        }
        out.into_values().map(IdentityReport::merge).collect()
    }
}

fn compile_curve(id: &str, m: usize, domain: &Domain, c: &CurveConfig) -> Result<DiffeoCurve> {
    match (&c.components, &c.flow_of) {
        (Some(comps), None) => {
            let exprs = parse_exprs(id, "curve.components", comps, m, true)?;
            if exprs.len() != m {
                return Err(config_err(id, format!("curve needs {m} components, got {}", exprs.len())));
            }
            let map = located(id, "curve", SmoothMap::new(exprs, m, true, Some(domain.clone())))?;
            let curve = located(id, "curve", DiffeoCurve::from_map(map, c.time_window, c.through_identity))?;
            if c.through_identity {
                let probes: Vec<Vec<f64>> = [0.25, 0.5, 0.75]
                    .iter()
                    .map(|f| domain.lo.iter().zip(&domain.hi).map(|(lo, hi)| lo + f * (hi - lo)).collect())
                    .collect();
                located(id, "curve", curve.check_through_identity(&probes))?;
            }
            Ok(curve)
        }
        (None, Some(f)) => {
            let exprs = parse_exprs(id, "curve.flow_of.components", &f.components, m, f.time_dependent)?;
            let field = located(id, "curve.flow_of", VectorField::new(exprs, f.time_dependent, domain.clone()))?;
            located(
                id,
                "curve",
                DiffeoCurve::flow_of(field, c.time_window, c.tol.unwrap_or(DEFAULT_TOL)),
            )
        }
        _ => Err(config_err(id, "curve needs exactly one of 'components' and 'flow_of'")),
    }
}

// ---------------------------------------------------------------------------
// generation

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Profile {
    Poly,
    Trig,
    Mixed,
    Flow,
    HigherOrderK2,
    HigherOrderK3,
}

impl Profile {
    pub const ALL: [Profile; 6] = [
        Profile::Poly,
        Profile::Trig,
        Profile::Mixed,
        Profile::Flow,
        Profile::HigherOrderK2,
        Profile::HigherOrderK3,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Profile::Poly => "poly",
            Profile::Trig => "trig",
            Profile::Mixed => "mixed",
            Profile::Flow => "flow",
            Profile::HigherOrderK2 => "higher-order-k2",
            Profile::HigherOrderK3 => "higher-order-k3",
        }
    }
}

impl std::str::FromStr for Profile {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Profile, String> {
        Profile::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| format!("unknown profile '{s}'"))
    }
}

/// The functor battery cycled through by the generators.
pub const FUNCTOR_BATTERY: [FunctorSpec; 8] = [
    FunctorSpec { p: 0, q: 0, w: 0.0 },
    FunctorSpec { p: 1, q: 0, w: 0.0 },
    FunctorSpec { p: 0, q: 1, w: 0.0 },
    FunctorSpec { p: 1, q: 1, w: 0.0 },
    FunctorSpec { p: 0, q: 2, w: 0.0 },
    FunctorSpec { p: 0, q: 0, w: 1.0 },
    FunctorSpec { p: 0, q: 0, w: -1.0 },
    FunctorSpec { p: 2, q: 0, w: 0.5 },
];

/// Budget for `‖Dφ - I‖∞` over the unit box; below 1 the map is a
/// diffeomorphism onto its image, and the generators stay under 0.5.
const JACOBIAN_BUDGET: f64 = 0.45;

fn round4(x: f64) -> f64 {
    (x * 1e4).round() / 1e4
}

fn coef(rng: &mut ChaCha8Rng, bound: f64) -> f64 {
    round4(rng.gen_range(-bound..bound))
}

fn num(c: f64) -> String {
    let s = format!("{c:?}");
    if c < 0.0 {
        format!("({s})")
    } else {
        s
    }
}

/// A term `c · a(t) · b(x)` with bounds `|a| ≤ 1` on the window and `|b| ≤ 1`,
/// `Σ_j sup|∂_j b| ≤ slope` on the unit box.
struct Term {
    src: String,
    slope: f64,
}

fn spatial_poly(rng: &mut ChaCha8Rng, m: usize) -> Term {
    let deg = rng.gen_range(1..=3usize);
    let mut factors = Vec::with_capacity(deg);
    for _ in 0..deg {
        factors.push(format!("x{}", rng.gen_range(1..=m)));
    }
    Term {
        src: factors.join("*"),
        slope: deg as f64,
    }
}

fn spatial_trig(rng: &mut ChaCha8Rng, m: usize) -> Term {
    let j = rng.gen_range(1..=m);
    let w = round4(rng.gen_range(0.5..1.5));
    let phase = coef(rng, 1.0);
    let f = if rng.gen_bool(0.5) { "sin" } else { "cos" };
    Term {
        src: format!("{f}({w:?}*x{j} + {})", num(phase)),
        slope: w,
    }
}

fn time_factor(rng: &mut ChaCha8Rng, trig: bool) -> String {
    let choices: &[&str] = if trig {
        &["sin(t)", "(1 - cos(t))", "t*cos(t)"]
    } else {
        &["t", "t^2", "t^3", "t*(1 + t)/2"]
    };
    choices.choose(rng).unwrap().to_string()
}

#[derive(Clone, Copy, PartialEq)]
enum Flavor {
    Poly,
    Trig,
    Mixed,
}

/// `m` component perturbations `Σ c·a(t)·b(x)` (or `Σ c·b(x)` when
/// `timed` is false) whose Jacobian row sums stay within `budget`.
fn perturbation(rng: &mut ChaCha8Rng, m: usize, flavor: Flavor, timed: bool, budget: f64) -> Vec<String> {
    (0..m)
        .map(|_| {
            let n = rng.gen_range(1..=3usize);
            let terms: Vec<(Term, bool)> = (0..n)
                .map(|_| {
                    let trig = match flavor {
                        Flavor::Poly => false,
                        Flavor::Trig => true,
                        Flavor::Mixed => rng.gen_bool(0.5),
                    };
                    let term = if trig { spatial_trig(rng, m) } else { spatial_poly(rng, m) };
                    (term, trig)
                })
                .collect();
            // |b| ≤ 1 as well, so a slope of at least n also bounds the displacement
            let slope = terms.iter().map(|(t, _)| t.slope).sum::<f64>().max(n as f64);
            let bound = budget / slope;
            let parts: Vec<String> = terms
                .into_iter()
                .map(|(term, trig)| {
                    let c = num(coef(rng, bound).clamp(-bound, bound));
                    if timed {
                        format!("{c}*{}*{}", time_factor(rng, trig), term.src)
                    } else {
                        format!("{c}*{}", term.src)
                    }
                })
                .collect();
            parts.join(" + ")
        })
        .collect()
}

fn identity_plus(m: usize, pert: &[String]) -> Vec<String> {
    (0..m).map(|i| format!("x{} + {}", i + 1, pert[i])).collect()
}

fn random_section_component(rng: &mut ChaCha8Rng, m: usize) -> String {
    let c0 = coef(rng, 1.0);
    let c1 = coef(rng, 1.0);
    let c2 = coef(rng, 1.0);
    let a = rng.gen_range(1..=m);
    let b = rng.gen_range(1..=m);
    match rng.gen_range(0..3) {
        0 => format!("{} + {}*x{a} + {}*x{a}*x{b}", num(c0), num(c1), num(c2)),
        1 => format!("{} + {}*sin(x{a}) + {}*cos(x{b})", num(c0), num(c1), num(c2)),
        _ => format!("{} + {}*exp(0.5*x{a}) + {}*x{b}^2", num(c0), num(c1), num(c2)),
    }
}

fn random_section(rng: &mut ChaCha8Rng, m: usize, functor: FunctorSpec) -> SectionConfig {
    SectionConfig {
        functor,
        components: (0..functor.fiber_dim(m)).map(|_| random_section_component(rng, m)).collect(),
    }
}

/// A small autonomous field on the unit box.
fn random_field(rng: &mut ChaCha8Rng, m: usize, scale: f64) -> Vec<String> {
    (0..m)
        .map(|_| {
            let a = rng.gen_range(1..=m);
            let b = rng.gen_range(1..=m);
            format!(
                "{} + {}*x{a} + {}*x{a}*x{b} + {}*sin(x{b})",
                num(coef(rng, scale)),
                num(coef(rng, scale)),
                num(coef(rng, scale)),
                num(coef(rng, scale))
            )
        })
        .collect()
}

fn unit_box(m: usize) -> Domain {
    Domain::cube(m, 1.0)
}

fn base_config(id: String, m: usize, seed: u64, identities: &[&str]) -> ScenarioConfig {
    ScenarioConfig {
        id,
        dim: m,
        domain: unit_box(m),
        curve: None,
        section: None,
        t0: vec![0.0],
        identities: identities.iter().map(|s| s.to_string()).collect(),
        samples: 20,
        points: None,
        seed,
        fields: None,
        lemma2: None,
        k: None,
        k_max: None,
        tolerances: None,
        rhs_sign: None,
    }
}

fn curve_of(components: Vec<String>, window: (f64, f64), through_identity: bool) -> CurveConfig {
    CurveConfig {
        components: Some(components),
        flow_of: None,
        time_window: window,
        through_identity,
        tol: None,
    }
}

/// A curve `c: R → R^m` with `c(0)` inside the sampling region and first
/// non-vanishing derivative of order `k` at 0.
fn lemma2_curve(rng: &mut ChaCha8Rng, m: usize, k: usize) -> Vec<String> {
    (0..m)
        .map(|_| {
            let p = coef(rng, 0.5);
            let v = coef(rng, 1.0);
            let w = coef(rng, 1.0);
            format!("{} + {}*t^{k} + {}*sin(t)*t^{k}", num(p), num(v), num(w))
        })
        .collect()
}

fn one(rng: &mut ChaCha8Rng, profile: Profile, index: usize, seed: u64) -> ScenarioConfig {
    let m = 1 + index % 3;
    let functor = FUNCTOR_BATTERY[(index / 3) % FUNCTOR_BATTERY.len()];
    let id = format!("{}-{seed}-{index:04}", profile.name());
    let sample_seed = rng.gen();
    match profile {
        Profile::Poly | Profile::Trig | Profile::Mixed => {
            let flavor = match profile {
                Profile::Poly => Flavor::Poly,
                Profile::Trig => Flavor::Trig,
                _ => Flavor::Mixed,
            };
            let mut cfg = base_config(
                id,
                m,
                sample_seed,
                &["eq1", "eq2", "lemma6", "inverse_curve", "bracket", "lie_oracle", "lemma2"],
            );
            let pert = perturbation(rng, m, flavor, true, JACOBIAN_BUDGET);
            cfg.curve = Some(curve_of(identity_plus(m, &pert), (-1.0, 1.0), true));
            cfg.section = Some(random_section(rng, m, functor));
            cfg.t0 = vec![0.0, round4(rng.gen_range(-0.8..0.8))];
            cfg.fields = Some(FieldsConfig {
                x: random_field(rng, m, 0.5),
                y: Some(random_field(rng, m, 0.5)),
            });
            let k = rng.gen_range(1..=3usize);
            let psi = identity_plus(m, &perturbation(rng, m, flavor, false, JACOBIAN_BUDGET));
            cfg.lemma2 = Some(Lemma2Config {
                curve: lemma2_curve(rng, m, k),
                psi,
            });
            cfg
        }
        Profile::Flow => {
            let mut cfg = base_config(id, m, sample_seed, &["eq1", "eq2", "lemma6", "inverse_curve"]);
            cfg.curve = Some(CurveConfig {
                components: None,
                flow_of: Some(FieldConfig {
                    components: random_field(rng, m, 0.25),
                    time_dependent: false,
                }),
                time_window: (-0.5, 0.5),
                through_identity: true,
                tol: Some(DEFAULT_TOL),
            });
            cfg.section = Some(random_section(rng, m, functor));
            cfg.t0 = vec![0.0, round4(rng.gen_range(-0.4..0.4))];
            cfg.samples = 10;
            cfg
        }
        Profile::HigherOrderK2 | Profile::HigherOrderK3 => {
            let k = if profile == Profile::HigherOrderK2 { 2 } else { 3 };
            let t0 = round4(rng.gen_range(-0.5..0.5));
            let mut cfg = base_config(id, m, sample_seed, &["eq3", "eq4", "inverse_curve"]);
            cfg.curve = Some(curve_of(higher_order_curve(rng, m, k, t0), (t0 - 0.5, t0 + 0.5), false));
            cfg.section = Some(random_section(rng, m, functor));
            cfg.t0 = vec![t0];
            cfg.k = Some(k);
            cfg
        }
    }
}

/// `ψ ∘ (Id + (t - t0)^k g)` with `ψ` and `g` small time-independent
/// perturbations, so the first `k - 1` time derivatives vanish at `t0`.
fn higher_order_curve(rng: &mut ChaCha8Rng, m: usize, k: usize, t0: f64) -> Vec<String> {
    let psi = identity_plus(m, &perturbation(rng, m, Flavor::Mixed, false, 0.2));
    let g = perturbation(rng, m, Flavor::Mixed, false, 0.4);
    let shift = format!("(t - {})^{k}", num(t0));
    let inner: Vec<Expr> = (0..m)
        .map(|i| {
            Expr::parse(&format!("x{} + {shift}*({})", i + 1, g[i]), m, true).expect("generated expressions parse")
        })
        .collect();
    psi.iter()
        .map(|p| {
            Expr::parse(p, m, false)
                .expect("generated expressions parse")
                .substitute(&inner, None)
                .to_string()
        })
        .collect()
}

/// `count` random scenarios of one profile, reproducible from `seed`.
pub fn generate(seed: u64, count: usize, profile: Profile) -> ScenarioFile {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    ScenarioFile {
        schema_version: SCHEMA_VERSION,
        scenarios: (0..count).map(|i| one(&mut rng, profile, i, seed)).collect(),
    }
}

/// Curves through the identity whose first non-vanishing derivative at 0 has
/// order `k`: `Id + t^k g + t^(k+1) h`.
pub fn generate_through_identity(seed: u64, count: usize, k: usize) -> ScenarioFile {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let scenarios = (0..count)
        .map(|index| {
            let m = 1 + index % 3;
            let functor = FUNCTOR_BATTERY[(index / 3) % FUNCTOR_BATTERY.len()];
            let mut cfg = base_config(format!("lemma6-k{k}-{seed}-{index:04}"), m, rng.gen(), &["lemma6"]);
            let g = perturbation(&mut rng, m, Flavor::Mixed, false, 0.3);
            let h = perturbation(&mut rng, m, Flavor::Mixed, false, 0.1);
            let comps = (0..m)
                .map(|i| format!("x{} + t^{k}*({}) + t^{}*({})", i + 1, g[i], k + 1, h[i]))
                .collect();
            cfg.curve = Some(curve_of(comps, (-1.0, 1.0), true));
            cfg.section = Some(random_section(&mut rng, m, functor));
            cfg.k = Some(k);
            cfg
        })
        .collect();
    ScenarioFile {
        schema_version: SCHEMA_VERSION,
        scenarios,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{"scenarios": [{
        "id": "a", "dim": 2, "domain": {"lo": [-1, -1], "hi": [1, 1]},
        "curve": {"components": ["x1 + t*x2", "x2"]},
        "section": {"functor": {"p": 0, "q": 1}, "components": ["1", "x1"]},
        "identities": ["eq1"], "samples": 3, "seed": 1}]}"#;

    #[test]
    fn minimal_file_compiles_and_passes() {
        let file = ScenarioFile::from_json(MINIMAL).unwrap();
        let sc = file.compile().unwrap();
        assert_eq!(sc[0].points.len(), 3);
        let reports = sc[0].run(&RunOptions::default());
        assert_eq!(reports.len(), 1);
        assert!(reports[0].pass);
    }

    #[test]
    fn bad_variable_names_scenario_and_offset() {
        let text = MINIMAL.replace("\"x1 + t*x2\"", "\"x1 + x3\"");
        let err = ScenarioFile::from_json(&text).unwrap().compile().unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("'a'"), "{msg}");
        assert!(msg.contains("offset 5"), "{msg}");
    }

    #[test]
    fn unknown_identity_and_missing_parts() {
        let text = MINIMAL.replace("[\"eq1\"]", "[\"eq9\"]");
        assert!(ScenarioFile::from_json(&text).unwrap().compile().is_err());
        let text = MINIMAL.replace("[\"eq1\"]", "[\"bracket\"]");
        let msg = ScenarioFile::from_json(&text).unwrap().compile().unwrap_err().to_string();
        assert!(msg.contains("fields"));
    }

    #[test]
    fn generation_is_deterministic() {
        for p in Profile::ALL {
            let a = generate(42, 4, p).to_json();
            assert_eq!(a, generate(42, 4, p).to_json());
            assert_ne!(a, generate(43, 4, p).to_json());
            let file = ScenarioFile::from_json(&a).unwrap();
            assert_eq!(file.compile().unwrap().len(), 4);
        }
    }

    #[test]
    fn higher_order_profile_detects_k() {
        use crate::calculus::first_nonvanishing_derivative;
        for (p, k) in [(Profile::HigherOrderK2, 2), (Profile::HigherOrderK3, 3)] {
            for sc in generate(5, 6, p).compile().unwrap() {
                let curve = sc.curve.as_ref().unwrap();
                let (found, _) = first_nonvanishing_derivative(curve, sc.config.t0[0], 4, EPS_ZERO, &sc.points)
                    .unwrap()
                    .unwrap();
                assert_eq!(found, k);
            }
        }
    }

    #[test]
    fn jacobian_deviation_is_bounded() {
        use crate::maps::spatial_jacobian;
        for p in [Profile::Poly, Profile::Trig, Profile::Mixed] {
            for sc in generate(9, 9, p).compile().unwrap() {
                let curve = sc.curve.as_ref().unwrap();
                let m = sc.config.dim;
                for x in sample_points(&sc.domain, 10, 3) {
                    for t in [-1.0, -0.3, 0.5, 1.0] {
                        let j = spatial_jacobian(curve, t, &x).unwrap();
                        let dev = (0..m)
                            .map(|i| (0..m).map(|c| (j[i][c] - if i == c { 1.0 } else { 0.0 }).abs()).sum::<f64>())
                            .fold(0.0, f64::max);
                        assert!(dev < 0.5, "{dev}");
                    }
                }
            }
        }
    }
}
