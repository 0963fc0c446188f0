//! Scenario configuration: a JSON document, optionally patched by `key.path=value` overrides,
//! turned into a domain, a grid and a kernel pair or matrix field.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};
use std::path::{Path, PathBuf};

use crate::dbar::MatrixField;
use crate::deformation::kp::graph_pair;
use crate::deformation::{Deformation, Flow};
use crate::error::{Error, Result};
use crate::geometry::{build_grid, DomainKind, DomainSpec, Ellipse, QuadratureGrid};
use crate::kernel::{constant_nilpotent_pair, polynomial_pair, KernelPair, PolyTerm};
use crate::nls::{Beta, NlsScenario};

pub const MAX_RADIAL: usize = 40;
pub const MAX_ANGULAR: usize = 80;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

fn c0() -> Complex64 {
    ZERO
}
fn one() -> f64 {
    1.0
}
fn twenty() -> usize {
    20
}
fn forty() -> usize {
    40
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EllipseConfig {
    #[serde(default = "c0")]
    pub center: Complex64,
    #[serde(default = "one")]
    pub a: f64,
    /// Defaults to `a`.
    #[serde(default)]
    pub b: Option<f64>,
    #[serde(default)]
    pub rotation: f64,
}

impl EllipseConfig {
    fn ellipse(&self) -> Ellipse {
        Ellipse::new(self.center, self.a, self.b.unwrap_or(self.a), self.rotation)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainConfig {
    #[serde(default = "disk")]
    pub kind: DomainKind,
    #[serde(default = "c0")]
    pub center: Complex64,
    #[serde(default = "one")]
    pub a: f64,
    #[serde(default)]
    pub b: Option<f64>,
    #[serde(default)]
    pub rotation: f64,
    #[serde(default)]
    pub conjugate_closed: bool,
    /// Second component of a union.
    #[serde(default)]
    pub second: Option<EllipseConfig>,
    #[serde(default = "twenty")]
    pub radial_points: usize,
    #[serde(default = "forty")]
    pub angular_points: usize,
}

fn disk() -> DomainKind {
    DomainKind::Disk
}

impl Default for DomainConfig {
    fn default() -> Self {
        Self {
            kind: DomainKind::Disk,
            center: ZERO,
            a: 1.0,
            b: None,
            rotation: 0.0,
            conjugate_closed: false,
            second: None,
            radial_points: 20,
            angular_points: 40,
        }
    }
}

impl DomainConfig {
    pub fn spec(&self) -> Result<DomainSpec> {
        let first = EllipseConfig { center: self.center, a: self.a, b: self.b, rotation: self.rotation }.ellipse();
        let mut d = match self.kind {
            DomainKind::Disk => {
                if self.b.is_some_and(|b| b != self.a) {
                    return Err(Error::Config("a disk takes a single radius `a`".into()));
                }
                DomainSpec::disk(self.center, self.a)
            }
            DomainKind::Ellipse => DomainSpec::ellipse(first.center, first.a, first.b, first.rotation),
            DomainKind::UnionOfTwo => {
                let second = self
                    .second
                    .as_ref()
                    .ok_or_else(|| Error::Config("union_of_two needs a `second` component".into()))?;
                DomainSpec::union_of_two(first, second.ellipse())
            }
        };
        if self.kind != DomainKind::UnionOfTwo && self.second.is_some() {
            return Err(Error::Config("`second` is only allowed for union_of_two".into()));
        }
        d.conjugate_closed = self.conjugate_closed;
        d.validate()?;
        Ok(d)
    }

    pub fn check_resolution(&self) -> Result<()> {
        if self.radial_points < 2 || self.radial_points > MAX_RADIAL {
            return Err(Error::Config(format!("radial_points must lie in 2..={MAX_RADIAL}")));
        }
        if self.angular_points < 4 || self.angular_points > MAX_ANGULAR {
            return Err(Error::Config(format!("angular_points must lie in 4..={MAX_ANGULAR}")));
        }
        Ok(())
    }
}

/// Named kernel pairs and fields.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FieldConfig {
    Zero,
    /// M = value·E₁₂ on the domain.
    ConstantNilpotent {
        value: Complex64,
    },
    /// f = (1, p)ᵀ, g = λ(1 + μz̄)(−p, 1)ᵀ with p = Σ coeffs[k] zᵏ; KP flow.
    Graph {
        lambda: Complex64,
        mu: Complex64,
        coeffs: Vec<Complex64>,
    },
    /// The focusing-NLS pair on 𝒟 ∪ 𝒟̄; NLS flow.
    NlsBeta {
        beta: Beta,
        #[serde(default = "one")]
        mirror_scale: f64,
    },
    /// Polynomial coefficients of f and g read from a CSV table with header
    /// `matrix,row,col,p,q,re,im` (matrix is f or g, entry = Σ (re + i·im) zᵖ z̄^q).
    UserTable {
        path: PathBuf,
        rows: usize,
        cols: usize,
    },
}

impl Default for FieldConfig {
    fn default() -> Self {
        FieldConfig::Zero
    }
}

fn default_zeta() -> Complex64 {
    Complex64::new(3.0, 0.0)
}
fn default_radii() -> Vec<f64> {
    vec![8.0, 16.0]
}
fn default_contour() -> usize {
    128
}
fn default_fd() -> f64 {
    1e-4
}
fn default_kp_h() -> f64 {
    0.1
}
fn default_nmax() -> usize {
    crate::determinants::DEFAULT_TRACE_POWERS
}
fn default_out() -> PathBuf {
    PathBuf::from("out")
}
fn default_name() -> String {
    "scenario".into()
}
fn one_usize() -> usize {
    1
}

/// Tolerances; every check compares one reported value against one of these.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    pub unimodularity: f64,
    pub determinant_agreement: f64,
    pub resolvent: f64,
    pub variational: f64,
    pub closedness: f64,
    pub tau_path: f64,
    pub connection: f64,
    pub tau_ratio: f64,
    pub composition: f64,
    pub hirota: f64,
    /// Required ratio between consecutive Hirota radii; 0 disables the decay check.
    pub hirota_decay: f64,
    pub slope_target: f64,
    pub slope_band: f64,
    pub schwarz: f64,
    pub det2_psi: f64,
    pub a_equation: f64,
    pub hierarchy: f64,
    pub rh_gamma: f64,
    pub rh_psi: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            unimodularity: 1e-6,
            determinant_agreement: 1e-10,
            resolvent: 1e-6,
            variational: 1e-4,
            closedness: 1e-5,
            tau_path: 1e-5,
            connection: 1e-6,
            tau_ratio: 1e-4,
            composition: 1e-6,
            hirota: 1e-6,
            hirota_decay: 3.0,
            slope_target: 2.0,
            slope_band: 0.3,
            schwarz: 1e-8,
            det2_psi: 1e-3,
            a_equation: 1e-4,
            hierarchy: 1e-8,
            rh_gamma: 1e-4,
            rh_psi: 1e-3,
        }
    }
}

impl Tolerances {
    fn check(&self) -> Result<()> {
        let v = serde_json::to_value(self).map_err(|e| Error::Config(e.to_string()))?;
        for (k, x) in v.as_object().into_iter().flatten() {
            let x = x.as_f64().unwrap_or(f64::NAN);
            let ok = if k == "hirota_decay" { x >= 0.0 } else { x > 0.0 };
            if !ok || !x.is_finite() {
                return Err(Error::Config(format!("tolerance `{k}` must be positive and finite")));
            }
        }
        Ok(())
    }
}

/// (x, t) sampling for the NLS commands.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NlsConfig {
    pub x: f64,
    pub t: f64,
    pub t3: f64,
    /// Finite-difference step for the residuals, halved once for the observed order.
    pub h: f64,
    /// Step for first derivatives in x (a-equation, Lax pair).
    pub h_small: f64,
    /// Step for the second x-derivative of log det₂.
    pub h_det2: f64,
    pub x_range: [f64; 2],
    pub t_range: [f64; 2],
    pub x_samples: usize,
    pub t_samples: usize,
    pub probes: Vec<Complex64>,
    pub rh_nodes: usize,
    pub rh_probes: Vec<Complex64>,
}

impl Default for NlsConfig {
    fn default() -> Self {
        Self {
            x: 0.3,
            t: 0.1,
            t3: 0.05,
            h: 2e-2,
            h_small: 1e-3,
            h_det2: 1e-2,
            x_range: [-1.0, 1.0],
            t_range: [0.0, 0.5],
            x_samples: 11,
            t_samples: 3,
            probes: vec![Complex64::new(1.0, 0.0), Complex64::new(2.0, 1.0)],
            rh_nodes: 32,
            rh_probes: Vec::new(),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    #[serde(default = "default_name")]
    pub name: String,
    #[serde(default)]
    pub domain: DomainConfig,
    #[serde(default)]
    pub field: FieldConfig,
    /// Deformation times t₁, t₂, ….
    #[serde(default)]
    pub times: Vec<Complex64>,
    /// Second time vector for the Hirota residue.
    #[serde(default)]
    pub s_times: Vec<Complex64>,
    /// Waypoints of the τ path; defaults to the segment from 0 to `times`.
    #[serde(default)]
    pub path: Option<Vec<Vec<Complex64>>>,
    #[serde(default = "one_usize")]
    pub path_steps: usize,
    #[serde(default = "default_zeta")]
    pub zeta: Complex64,
    #[serde(default = "default_radii")]
    pub radii: Vec<f64>,
    #[serde(default = "default_contour")]
    pub contour_points: usize,
    #[serde(default = "default_fd")]
    pub fd_step: f64,
    #[serde(default = "default_kp_h")]
    pub kp_step: f64,
    #[serde(default = "default_nmax")]
    pub n_max: usize,
    #[serde(default)]
    pub nls: NlsConfig,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default = "default_out")]
    pub output_dir: PathBuf,
}

/// A parsed configuration with the canonical JSON it came from.
#[derive(Clone, Debug)]
pub struct LoadedConfig {
    pub config: Config,
    pub value: Value,
    pub hash: String,
}

/// Sets `path` (dot-separated keys) in a JSON object. The value is parsed as JSON and
/// taken as a string when that fails.
pub fn apply_override(root: &mut Value, assignment: &str) -> Result<()> {
    let (key, raw) = assignment
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("override `{assignment}` is not of the form key=value")))?;
    let value: Value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    let mut cur = root;
    let parts: Vec<&str> = key.split('.').collect();
    for (i, part) in parts.iter().enumerate() {
        if part.is_empty() {
            return Err(Error::Config(format!("empty key segment in `{key}`")));
        }
        if !cur.is_object() {
            if cur.is_null() {
                *cur = Value::Object(Default::default());
            } else {
                return Err(Error::Config(format!("`{}` is not an object", parts[..i].join("."))));
            }
        }
        let obj = cur.as_object_mut().expect("object");
        if i + 1 == parts.len() {
            obj.insert(part.to_string(), value);
            return Ok(());
        }
        cur = obj.entry(part.to_string()).or_insert(Value::Null);
    }
    Ok(())
}

/// SHA-256 of the canonical (key-sorted, compact) JSON text.
pub fn config_hash(value: &Value) -> String {
    let text = serde_json::to_string(value).unwrap_or_default();
    Sha256::digest(text.as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
}

impl LoadedConfig {
    pub fn from_value(mut value: Value, overrides: &[String]) -> Result<Self> {
        if value.is_null() {
            value = Value::Object(Default::default());
        }
        for o in overrides {
            apply_override(&mut value, o)?;
        }
        let config: Config = serde_json::from_value(value).map_err(|e| Error::Config(e.to_string()))?;
        config.tolerances.check()?;
        config.domain.check_resolution()?;
        // canonical form: defaults filled in, keys sorted
        let value = serde_json::to_value(&config).map_err(|e| Error::Config(e.to_string()))?;
        let hash = config_hash(&value);
        Ok(Self { config, value, hash })
    }

    /// Parses JSON text; an empty string means all defaults.
    pub fn from_json_str(text: &str, overrides: &[String]) -> Result<Self> {
        let value = if text.trim().is_empty() {
            Value::Null
        } else {
            serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?
        };
        Self::from_value(value, overrides)
    }

    pub fn from_path(path: Option<&Path>, overrides: &[String]) -> Result<Self> {
        let value = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| Error::Config(format!("cannot read {}: {e}", p.display())))?;
                serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", p.display())))?
            }
            None => Value::Null,
        };
        Self::from_value(value, overrides)
    }
}

/// Domain, grid and the field or pair a configuration describes.
#[derive(Clone, Debug)]
pub struct Built {
    pub support: DomainSpec,
    pub grid: QuadratureGrid,
    pub pair: Option<KernelPair>,
    pub field: MatrixField,
    pub flow: Flow,
    pub nls: Option<NlsScenario>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct TableRow {
    matrix: String,
    row: usize,
    col: usize,
    p: u32,
    q: u32,
    re: f64,
    im: f64,
}

fn read_table(path: &Path) -> Result<(Vec<PolyTerm>, Vec<PolyTerm>)> {
    let err = |e: csv::Error| Error::Config(format!("{}: {e}", path.display()));
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_path(path).map_err(err)?;
    let header: Vec<String> = reader.headers().map_err(err)?.iter().map(String::from).collect();
    if header != ["matrix", "row", "col", "p", "q", "re", "im"] {
        return Err(Error::Config(format!("{}: header must be matrix,row,col,p,q,re,im", path.display())));
    }
    let (mut f, mut g) = (Vec::new(), Vec::new());
    for rec in reader.deserialize::<TableRow>() {
        let r = rec.map_err(err)?;
        let term = PolyTerm { row: r.row, col: r.col, p: r.p, q: r.q, coeff: Complex64::new(r.re, r.im) };
        match r.matrix.as_str() {
            "f" => f.push(term),
            "g" => g.push(term),
            other => return Err(Error::Config(format!("{}: matrix must be f or g, got `{other}`", path.display()))),
        }
    }
    Ok((f, g))
}

impl Config {
    /// Builds the support, grid and field. Problems here are configuration errors.
    pub fn build(&self) -> Result<Built> {
        let domain = self.domain.spec().map_err(as_config)?;
        let (r, a) = (self.domain.radial_points, self.domain.angular_points);
        let (support, pair, flow, nls) = match &self.field {
            FieldConfig::Zero => (domain.clone(), None, Flow::KP, None),
            FieldConfig::ConstantNilpotent { value } => {
                (domain.clone(), Some(constant_nilpotent_pair(*value, domain.clone())), Flow::KP, None)
            }
            FieldConfig::Graph { lambda, mu, coeffs } => {
                if domain.parts.len() != 1 || domain.conjugate_closed {
                    return Err(Error::Config("the graph pair lives on a single disk or ellipse".into()));
                }
                (domain.clone(), Some(graph_pair(domain.parts[0], *lambda, *mu, coeffs.clone())), Flow::KP, None)
            }
            FieldConfig::NlsBeta { beta, mirror_scale } => {
                let mut base = domain.clone();
                base.conjugate_closed = false;
                let s = NlsScenario { domain: base, beta: beta.clone(), mirror_scale: *mirror_scale };
                s.validate().map_err(as_config)?;
                (s.support(), None, Flow::NLS, Some(s))
            }
            FieldConfig::UserTable { path, rows, cols } => {
                let (f, g) = read_table(path)?;
                let p = polynomial_pair(*rows, *cols, domain.clone(), f, g).map_err(as_config)?;
                (domain.clone(), Some(p), Flow::KP, None)
            }
        };
        let grid = build_grid(&support, r, a).map_err(as_config)?;
        let pair = match &nls {
            Some(s) => Some(crate::nls::nls_pair(s, &grid).map_err(as_config)?),
            None => pair,
        };
        let field = match &pair {
            Some(p) => p.m_from_pair(&grid).map_err(as_config)?,
            None => MatrixField::zero(2, support.clone()),
        };
        Ok(Built { support, grid, pair, field, flow, nls })
    }
}

impl Built {
    /// The deformation family of the field: through the kernel pair when there is one.
    pub fn deformation(&self) -> Result<Deformation> {
        match &self.pair {
            Some(p) => Deformation::from_pair(p.clone(), &self.grid, self.flow),
            None => Deformation::from_field(self.field.clone(), &self.grid, self.flow),
        }
    }
}

fn as_config(e: Error) -> Error {
    match e {
        Error::Config(_) => e,
        other => Error::Config(other.to_string()),
    }
}
