//! Problem file format (version 1).
//!
//! ```json
//! {
//!   "version": 1,
//!   "kind": "similarity",
//!   "systems": [ {"type": "pochhammer", "lambda": 1, "mu": 2, "d": 2}, … ],
//!   "options": {"N": 24, "degrees": [6, 12, 18, 24], "tol": 1e-8, "seed": 7}
//! }
//! ```
//!
//! Matrices are arrays of rows of `[re, im]` pairs and log scales are always
//! separate fields. Parsing keeps the raw numbers so that a parsed file
//! serializes back byte for byte.

use std::fmt;

use serde_json::{json, Map, Value};

use crate::error::Error;
use crate::kernelgen::{homogeneous_kernel, perturb_kernel, pochhammer_kernel, PochhammerPair};
use crate::lattice::{MultiIndex, Truncation};
use crate::numerics::{LogPd, Matrix};
use crate::scalar::cx;
use crate::shiftcore::{moments_from_weights, Moments, Weights};

/// Failure while turning a problem file into systems.
#[derive(Debug, Clone, PartialEq)]
pub enum LoadError {
    /// Malformed or inconsistent file; names the offending field path.
    Schema { path: String, message: String },
    /// Well-formed data that violates a mathematical precondition.
    Validation(String),
}

impl fmt::Display for LoadError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LoadError::Schema { path, message } => write!(f, "schema error at {path}: {message}"),
            LoadError::Validation(msg) => write!(f, "validation failed: {msg}"),
        }
    }
}

type Load<T> = std::result::Result<T, LoadError>;

fn schema<T>(path: &str, message: impl Into<String>) -> Load<T> {
    Err(LoadError::Schema { path: path.to_string(), message: message.into() })
}

fn validation(path: &str, e: Error) -> LoadError {
    LoadError::Validation(format!("{path}: {e}"))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Similarity,
    Unitary,
    Oracle,
    Diagnostic,
    Validate,
}

impl Kind {
    pub fn as_str(self) -> &'static str {
        match self {
            Kind::Similarity => "similarity",
            Kind::Unitary => "unitary",
            Kind::Oracle => "oracle",
            Kind::Diagnostic => "diagnostic",
            Kind::Validate => "validate",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "similarity" => Kind::Similarity,
            "unitary" => Kind::Unitary,
            "oracle" => Kind::Oracle,
            "diagnostic" => Kind::Diagnostic,
            "validate" => Kind::Validate,
            _ => return None,
        })
    }
}

/// Complex matrix as read from the file.
#[derive(Debug, Clone, PartialEq)]
pub struct RawMatrix(pub Vec<Vec<[f64; 2]>>);

impl RawMatrix {
    pub fn from_matrix(m: &Matrix<f64>) -> Self {
        RawMatrix((0..m.rows()).map(|i| (0..m.cols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect()).collect())
    }

    pub fn to_matrix(&self) -> Matrix<f64> {
        let rows = self.0.len();
        let cols = self.0.first().map_or(0, Vec::len);
        Matrix::from_fn(rows, cols, |i, j| cx(self.0[i][j][0], self.0[i][j][1]))
    }

    fn to_json(&self) -> Value {
        Value::Array(self.0.iter().map(|row| Value::Array(row.iter().map(|z| json!([z[0], z[1]])).collect())).collect())
    }

    fn parse(v: &Value, path: &str, n: usize) -> Load<Self> {
        let Some(rows) = v.as_array() else { return schema(path, "expected an array of rows") };
        if rows.len() != n {
            return schema(path, format!("expected {n} rows, found {}", rows.len()));
        }
        let mut out = Vec::with_capacity(n);
        for (i, row) in rows.iter().enumerate() {
            let rp = format!("{path}[{i}]");
            let Some(entries) = row.as_array() else { return schema(&rp, "expected an array of [re, im] pairs") };
            if entries.len() != n {
                return schema(&rp, format!("expected {n} entries, found {}", entries.len()));
            }
            let mut r = Vec::with_capacity(n);
            for (j, z) in entries.iter().enumerate() {
                let zp = format!("{rp}[{j}]");
                match z.as_array().map(Vec::as_slice) {
                    Some([a, b]) => match (a.as_f64(), b.as_f64()) {
                        (Some(a), Some(b)) if a.is_finite() && b.is_finite() => r.push([a, b]),
                        _ => return schema(&zp, "expected finite numbers"),
                    },
                    _ => return schema(&zp, "expected a [re, im] pair"),
                }
            }
            out.push(r);
        }
        Ok(RawMatrix(out))
    }
}

/// `exp(logscale) · matrix`.
#[derive(Debug, Clone, PartialEq)]
pub struct RawPd {
    pub logscale: f64,
    pub matrix: RawMatrix,
}

impl RawPd {
    pub fn from_logpd(p: &LogPd<f64>) -> Self {
        RawPd { logscale: p.logscale(), matrix: RawMatrix::from_matrix(p.matrix()) }
    }

    fn to_logpd(&self, path: &str) -> Load<LogPd<f64>> {
        LogPd::new(self.matrix.to_matrix(), self.logscale).map_err(|e| validation(path, e))
    }

    fn to_json(&self) -> Map<String, Value> {
        let mut m = Map::new();
        m.insert("logscale".into(), json!(self.logscale));
        m.insert("matrix".into(), self.matrix.to_json());
        m
    }

    fn parse(obj: &Obj, n: usize) -> Load<Self> {
        Ok(RawPd {
            logscale: obj.f64("logscale")?,
            matrix: RawMatrix::parse(obj.field("matrix")?, &obj.sub("matrix"), n)?,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SystemSpec {
    Moments { d: usize, n_max: usize, fiber_dim: usize, grams: Vec<(Vec<u32>, RawPd)> },
    Weights { d: usize, n_max: usize, fiber_dim: usize, g0: RawPd, weights: Vec<(Vec<u32>, usize, RawMatrix)> },
    Pochhammer { lambda: f64, mu: f64, d: usize, n_max: Option<usize> },
    Homogeneous { d: usize, fiber_dim: usize, a: Vec<RawPd> },
    Perturbed { base: Box<SystemSpec>, replacements: Vec<(Vec<u32>, RawPd)> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct RawCertificate {
    pub c: RawMatrix,
    pub log_m1: f64,
    pub log_m2: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Options {
    pub n_max: Option<usize>,
    pub degrees: Option<Vec<usize>>,
    pub tol: Option<f64>,
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProblemFile {
    pub kind: Kind,
    pub systems: Vec<SystemSpec>,
    pub options: Options,
    /// Advisory metadata written by generators; never read by the solver.
    pub ground_truth: Option<String>,
    /// A certificate to check alongside the search.
    pub certificate: Option<RawCertificate>,
}

/// JSON object with its field path, for error messages.
struct Obj<'a> {
    map: &'a Map<String, Value>,
    path: String,
}

impl<'a> Obj<'a> {
    fn new(v: &'a Value, path: String) -> Load<Self> {
        match v.as_object() {
            Some(map) => Ok(Obj { map, path }),
            None => schema(&path, "expected an object"),
        }
    }

    fn sub(&self, key: &str) -> String {
        if self.path.is_empty() {
            key.to_string()
        } else {
            format!("{}.{key}", self.path)
        }
    }

    fn field(&self, key: &str) -> Load<&'a Value> {
        match self.map.get(key) {
            Some(v) => Ok(v),
            None => schema(&self.sub(key), "missing field"),
        }
    }

    fn opt(&self, key: &str) -> Option<&'a Value> {
        self.map.get(key).filter(|v| !v.is_null())
    }

    fn f64(&self, key: &str) -> Load<f64> {
        match self.field(key)?.as_f64() {
            Some(x) if x.is_finite() => Ok(x),
            _ => schema(&self.sub(key), "expected a finite number"),
        }
    }

    fn usize(&self, key: &str) -> Load<usize> {
        match self.field(key)?.as_u64() {
            Some(x) => Ok(x as usize),
            None => schema(&self.sub(key), "expected a non-negative integer"),
        }
    }

    fn opt_usize(&self, key: &str) -> Load<Option<usize>> {
        match self.opt(key) {
            None => Ok(None),
            Some(_) => self.usize(key).map(Some),
        }
    }

    fn str(&self, key: &str) -> Load<&'a str> {
        match self.field(key)?.as_str() {
            Some(s) => Ok(s),
            None => schema(&self.sub(key), "expected a string"),
        }
    }

    fn array(&self, key: &str) -> Load<&'a Vec<Value>> {
        match self.field(key)?.as_array() {
            Some(a) => Ok(a),
            None => schema(&self.sub(key), "expected an array"),
        }
    }

    fn index(&self, key: &str, d: usize) -> Load<Vec<u32>> {
        let path = self.sub(key);
        let arr = self.array(key)?;
        if arr.len() != d {
            return schema(&path, format!("expected {d} components, found {}", arr.len()));
        }
        arr.iter()
            .map(|v| {
                v.as_u64()
                    .and_then(|x| u32::try_from(x).ok())
                    .map_or_else(|| schema(&path, "expected non-negative integers"), Ok)
            })
            .collect()
    }
}

fn index_json(c: &[u32]) -> Value {
    Value::Array(c.iter().map(|&x| json!(x)).collect())
}

impl SystemSpec {
    fn parse(v: &Value, path: String) -> Load<Self> {
        let o = Obj::new(v, path)?;
        match o.str("type")? {
            "moments" => {
                let (d, n_max, n) = (o.usize("d")?, o.usize("N")?, o.usize("fiber_dim")?);
                check_shape(&o, d, n)?;
                let mut grams = Vec::new();
                for (i, g) in o.array("grams")?.iter().enumerate() {
                    let go = Obj::new(g, format!("{}[{i}]", o.sub("grams")))?;
                    grams.push((go.index("index", d)?, RawPd::parse(&go, n)?));
                }
                Ok(SystemSpec::Moments { d, n_max, fiber_dim: n, grams })
            }
            "weights" => {
                let (d, n_max, n) = (o.usize("d")?, o.usize("N")?, o.usize("fiber_dim")?);
                check_shape(&o, d, n)?;
                let g0 = RawPd::parse(&Obj::new(o.field("g0")?, o.sub("g0"))?, n)?;
                let mut weights = Vec::new();
                for (i, w) in o.array("weights")?.iter().enumerate() {
                    let wo = Obj::new(w, format!("{}[{i}]", o.sub("weights")))?;
                    let j = wo.usize("direction")?;
                    if j >= d {
                        return schema(&wo.sub("direction"), format!("direction must be below d = {d}"));
                    }
                    let m = RawMatrix::parse(wo.field("matrix")?, &wo.sub("matrix"), n)?;
                    weights.push((wo.index("index", d)?, j, m));
                }
                Ok(SystemSpec::Weights { d, n_max, fiber_dim: n, g0, weights })
            }
            "pochhammer" => {
                let d = o.usize("d")?;
                check_shape(&o, d, 2)?;
                let (lambda, mu) = (o.f64("lambda")?, o.f64("mu")?);
                if !(lambda > 0.0 && mu > 0.0) {
                    return schema(&o.sub("lambda"), "Pochhammer parameters must be positive");
                }
                Ok(SystemSpec::Pochhammer { lambda, mu, d, n_max: o.opt_usize("N")? })
            }
            "homogeneous" => {
                let (d, n) = (o.usize("d")?, o.usize("fiber_dim")?);
                check_shape(&o, d, n)?;
                let mut a = Vec::new();
                for (i, am) in o.array("a")?.iter().enumerate() {
                    a.push(RawPd::parse(&Obj::new(am, format!("{}[{i}]", o.sub("a")))?, n)?);
                }
                if a.is_empty() {
                    return schema(&o.sub("a"), "needs at least A_0");
                }
                Ok(SystemSpec::Homogeneous { d, fiber_dim: n, a })
            }
            "perturbed" => {
                let base = SystemSpec::parse(o.field("base")?, o.sub("base"))?;
                let (d, n) = match &base {
                    SystemSpec::Pochhammer { d, .. } => (*d, 2),
                    SystemSpec::Homogeneous { d, fiber_dim, .. } => (*d, *fiber_dim),
                    _ => return schema(&o.sub("base"), "base must be a pochhammer or homogeneous kernel"),
                };
                let mut replacements = Vec::new();
                for (i, r) in o.array("replacements")?.iter().enumerate() {
                    let ro = Obj::new(r, format!("{}[{i}]", o.sub("replacements")))?;
                    replacements.push((ro.index("index", d)?, RawPd::parse(&ro, n)?));
                }
                Ok(SystemSpec::Perturbed { base: Box::new(base), replacements })
            }
            other => schema(&o.sub("type"), format!("unknown system type {other:?}")),
        }
    }

    fn to_json(&self) -> Value {
        let mut m = Map::new();
        match self {
            SystemSpec::Moments { d, n_max, fiber_dim, grams } => {
                m.insert("type".into(), json!("moments"));
                m.insert("d".into(), json!(d));
                m.insert("N".into(), json!(n_max));
                m.insert("fiber_dim".into(), json!(fiber_dim));
                let g = grams
                    .iter()
                    .map(|(idx, pd)| {
                        let mut e = pd.to_json();
                        e.insert("index".into(), index_json(idx));
                        Value::Object(e)
                    })
                    .collect();
                m.insert("grams".into(), Value::Array(g));
            }
            SystemSpec::Weights { d, n_max, fiber_dim, g0, weights } => {
                m.insert("type".into(), json!("weights"));
                m.insert("d".into(), json!(d));
                m.insert("N".into(), json!(n_max));
                m.insert("fiber_dim".into(), json!(fiber_dim));
                m.insert("g0".into(), Value::Object(g0.to_json()));
                let w = weights
                    .iter()
                    .map(|(idx, j, mat)| json!({"index": index_json(idx), "direction": j, "matrix": mat.to_json()}))
                    .collect();
                m.insert("weights".into(), Value::Array(w));
            }
            SystemSpec::Pochhammer { lambda, mu, d, n_max } => {
                m.insert("type".into(), json!("pochhammer"));
                m.insert("lambda".into(), json!(lambda));
                m.insert("mu".into(), json!(mu));
                m.insert("d".into(), json!(d));
                if let Some(n) = n_max {
                    m.insert("N".into(), json!(n));
                }
            }
            SystemSpec::Homogeneous { d, fiber_dim, a } => {
                m.insert("type".into(), json!("homogeneous"));
                m.insert("d".into(), json!(d));
                m.insert("fiber_dim".into(), json!(fiber_dim));
                m.insert("a".into(), Value::Array(a.iter().map(|p| Value::Object(p.to_json())).collect()));
            }
            SystemSpec::Perturbed { base, replacements } => {
                m.insert("type".into(), json!("perturbed"));
                m.insert("base".into(), base.to_json());
                let r = replacements
                    .iter()
                    .map(|(idx, pd)| {
                        let mut e = pd.to_json();
                        e.insert("index".into(), index_json(idx));
                        Value::Object(e)
                    })
                    .collect();
                m.insert("replacements".into(), Value::Array(r));
            }
        }
        Value::Object(m)
    }

    /// Builds the moment system; `default_n` fills in a missing degree.
    pub fn build(&self, path: &str, default_n: Option<usize>) -> Load<Moments<f64>> {
        match self {
            SystemSpec::Moments { d, n_max, fiber_dim, grams } => {
                let lattice = Truncation::new(*d, *n_max).map_err(|e| validation(path, e))?;
                let mut slots: Vec<Option<LogPd<f64>>> = vec![None; lattice.len()];
                for (i, (idx, pd)) in grams.iter().enumerate() {
                    let gp = format!("{path}.grams[{i}]");
                    let pos = locate(&lattice, idx, &format!("{gp}.index"))?;
                    if slots[pos].is_some() {
                        return schema(&format!("{gp}.index"), "duplicate index");
                    }
                    slots[pos] = Some(pd.to_logpd(&gp)?);
                }
                let grams = slots
                    .into_iter()
                    .enumerate()
                    .map(|(pos, g)| {
                        g.map_or_else(
                            || schema(&format!("{path}.grams"), format!("missing gram at {}", lattice.index(pos))),
                            Ok,
                        )
                    })
                    .collect::<Load<Vec<_>>>()?;
                Moments::new(lattice, *fiber_dim, grams).map_err(|e| validation(path, e))
            }
            SystemSpec::Weights { .. } => {
                let (w, g0) = self.weights(path)?;
                moments_from_weights(&w, &g0).map_err(|e| validation(path, e))
            }
            SystemSpec::Pochhammer { lambda, mu, d, n_max } => {
                let n = resolve_n(*n_max, default_n, path)?;
                let p = PochhammerPair::new(*lambda, *mu).map_err(|e| validation(path, e))?;
                Ok(pochhammer_kernel(p, *d, n).map_err(|e| validation(path, e))?.1)
            }
            SystemSpec::Homogeneous { .. } | SystemSpec::Perturbed { .. } => {
                self.kernel(path, default_n)?.moments().map_err(|e| validation(path, e))
            }
        }
    }

    /// Raw weights and `G₀` of a weights system.
    pub fn weights(&self, path: &str) -> Load<(Weights<f64>, LogPd<f64>)> {
        let SystemSpec::Weights { d, n_max, fiber_dim, g0, weights } = self else {
            return schema(path, "not a weights system");
        };
        let lattice = Truncation::new(*d, *n_max).map_err(|e| validation(path, e))?;
        let inner = if *n_max == 0 { 0 } else { lattice.prefix_len(n_max - 1) };
        let mut slots: Vec<Vec<Option<Matrix<f64>>>> = vec![vec![None; *d]; inner];
        for (i, (idx, j, m)) in weights.iter().enumerate() {
            let wp = format!("{path}.weights[{i}]");
            let pos = locate(&lattice, idx, &format!("{wp}.index"))?;
            if pos >= inner {
                return schema(
                    &format!("{wp}.index"),
                    format!("weights are defined only for degree below N = {n_max}"),
                );
            }
            if slots[pos][*j].is_some() {
                return schema(&wp, "duplicate weight");
            }
            slots[pos][*j] = Some(m.to_matrix());
        }
        let mut rows = Vec::with_capacity(inner);
        for (pos, row) in slots.into_iter().enumerate() {
            let mut out = Vec::with_capacity(*d);
            for (j, w) in row.into_iter().enumerate() {
                match w {
                    Some(w) => out.push(w),
                    None => {
                        return schema(
                            &format!("{path}.weights"),
                            format!("missing weight at {} direction {j}", lattice.index(pos)),
                        )
                    }
                }
            }
            rows.push(out);
        }
        let w = Weights::new(lattice, *fiber_dim, rows).map_err(|e| validation(path, e))?;
        Ok((w, g0.to_logpd(&format!("{path}.g0"))?))
    }

    fn kernel(&self, path: &str, default_n: Option<usize>) -> Load<crate::kernelgen::Kernel<f64>> {
        match self {
            SystemSpec::Pochhammer { lambda, mu, d, n_max } => {
                let n = resolve_n(*n_max, default_n, path)?;
                let p = PochhammerPair::new(*lambda, *mu).map_err(|e| validation(path, e))?;
                Ok(pochhammer_kernel(p, *d, n).map_err(|e| validation(path, e))?.0)
            }
            SystemSpec::Homogeneous { d, a, .. } => {
                let a = a
                    .iter()
                    .enumerate()
                    .map(|(i, p)| p.to_logpd(&format!("{path}.a[{i}]")))
                    .collect::<Load<Vec<_>>>()?;
                homogeneous_kernel(&a, *d).map_err(|e| validation(path, e))
            }
            SystemSpec::Perturbed { base, replacements } => {
                let k = base.kernel(&format!("{path}.base"), default_n)?;
                let reps = self.replacements(path, replacements)?;
                Ok(perturb_kernel(&k, &reps).map_err(|e| validation(path, e))?.0)
            }
            _ => schema(path, "not a kernel system"),
        }
    }

    fn replacements(&self, path: &str, reps: &[(Vec<u32>, RawPd)]) -> Load<Vec<(MultiIndex, LogPd<f64>)>> {
        reps.iter()
            .enumerate()
            .map(|(i, (idx, pd))| {
                let rp = format!("{path}.replacements[{i}]");
                let alpha = MultiIndex::new(idx.clone()).map_err(|e| validation(&rp, e))?;
                Ok((alpha, pd.to_logpd(&rp)?))
            })
            .collect()
    }

    /// Closed-form certificate of a perturbed kernel against its base.
    pub fn perturbation_certificate(
        &self,
        path: &str,
        default_n: Option<usize>,
    ) -> Load<Option<crate::equivalence::Certificate<f64>>> {
        let SystemSpec::Perturbed { base, replacements } = self else { return Ok(None) };
        let k = base.kernel(&format!("{path}.base"), default_n)?;
        let reps = self.replacements(path, replacements)?;
        Ok(Some(perturb_kernel(&k, &reps).map_err(|e| validation(path, e))?.1))
    }

    pub fn type_name(&self) -> &'static str {
        match self {
            SystemSpec::Moments { .. } => "moments",
            SystemSpec::Weights { .. } => "weights",
            SystemSpec::Pochhammer { .. } => "pochhammer",
            SystemSpec::Homogeneous { .. } => "homogeneous",
            SystemSpec::Perturbed { .. } => "perturbed",
        }
    }
}

fn check_shape(o: &Obj, d: usize, n: usize) -> Load<()> {
    if d == 0 {
        return schema(&o.sub("d"), "dimension must be at least 1");
    }
    if n == 0 {
        return schema(&o.sub("fiber_dim"), "fiber dimension must be at least 1");
    }
    Ok(())
}

fn resolve_n(own: Option<usize>, default: Option<usize>, path: &str) -> Load<usize> {
    match own.or(default) {
        Some(n) => Ok(n),
        None => schema(&format!("{path}.N"), "missing field (and no options.N)"),
    }
}

fn locate(lattice: &Truncation, idx: &[u32], path: &str) -> Load<usize> {
    let alpha = MultiIndex::new(idx.to_vec()).map_err(|e| validation(path, e))?;
    match lattice.position(&alpha) {
        Some(p) => Ok(p),
        None => schema(path, format!("{alpha} lies outside the truncation")),
    }
}

impl ProblemFile {
    pub fn parse_str(text: &str) -> Load<Self> {
        let v: Value =
            serde_json::from_str(text).map_err(|e| LoadError::Schema { path: "$".into(), message: e.to_string() })?;
        Self::parse(&v)
    }

    pub fn parse(v: &Value) -> Load<Self> {
        let o = Obj::new(v, String::new())?;
        let version = o.usize("version")?;
        if version != 1 {
            return schema("version", format!("unsupported version {version}"));
        }
        let kind_str = o.str("kind")?;
        let Some(kind) = Kind::parse(kind_str) else {
            return schema("kind", format!("unknown kind {kind_str:?}"));
        };
        let systems = o
            .array("systems")?
            .iter()
            .enumerate()
            .map(|(i, s)| SystemSpec::parse(s, format!("systems[{i}]")))
            .collect::<Load<Vec<_>>>()?;
        let expected = if kind == Kind::Validate { 1..=2 } else { 2..=2 };
        if !expected.contains(&systems.len()) {
            return schema(
                "systems",
                format!("kind {} takes {:?} systems, found {}", kind.as_str(), expected, systems.len()),
            );
        }
        let options = match o.opt("options") {
            None => Options::default(),
            Some(ov) => {
                let oo = Obj::new(ov, "options".into())?;
                let degrees = match oo.opt("degrees") {
                    None => None,
                    Some(_) => Some(
                        oo.array("degrees")?
                            .iter()
                            .map(|d| {
                                d.as_u64()
                                    .map(|x| x as usize)
                                    .map_or_else(|| schema("options.degrees", "expected non-negative integers"), Ok)
                            })
                            .collect::<Load<Vec<_>>>()?,
                    ),
                };
                let tol = match oo.opt("tol") {
                    None => None,
                    Some(_) => Some(oo.f64("tol")?),
                };
                let seed = match oo.opt("seed") {
                    None => None,
                    Some(s) => {
                        Some(s.as_u64().map_or_else(|| schema("options.seed", "expected a non-negative integer"), Ok)?)
                    }
                };
                Options { n_max: oo.opt_usize("N")?, degrees, tol, seed }
            }
        };
        let ground_truth = match o.opt("ground_truth") {
            None => None,
            Some(_) => Some(o.str("ground_truth")?.to_string()),
        };
        let certificate = match o.opt("certificate") {
            None => None,
            Some(cv) => {
                let co = Obj::new(cv, "certificate".into())?;
                let n = RawMatrix::parse(co.field("C")?, "certificate.C", co.array("C")?.len())?;
                Some(RawCertificate { c: n, log_m1: co.f64("log_m1")?, log_m2: co.f64("log_m2")? })
            }
        };
        Ok(ProblemFile { kind, systems, options, ground_truth, certificate })
    }

    pub fn to_json(&self) -> Value {
        let mut m = Map::new();
        m.insert("version".into(), json!(1));
        m.insert("kind".into(), json!(self.kind.as_str()));
        m.insert("systems".into(), Value::Array(self.systems.iter().map(SystemSpec::to_json).collect()));
        let mut o = Map::new();
        if let Some(n) = self.options.n_max {
            o.insert("N".into(), json!(n));
        }
        if let Some(d) = &self.options.degrees {
            o.insert("degrees".into(), json!(d));
        }
        if let Some(t) = self.options.tol {
            o.insert("tol".into(), json!(t));
        }
        if let Some(s) = self.options.seed {
            o.insert("seed".into(), json!(s));
        }
        m.insert("options".into(), Value::Object(o));
        if let Some(g) = &self.ground_truth {
            m.insert("ground_truth".into(), json!(g));
        }
        if let Some(c) = &self.certificate {
            m.insert("certificate".into(), json!({"C": c.c.to_json(), "log_m1": c.log_m1, "log_m2": c.log_m2}));
        }
        Value::Object(m)
    }

    pub fn to_string_pretty(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.to_json()).expect("JSON values serialize");
        s.push('\n');
        s
    }
}

/// Explicit moments spec from a system.
pub fn moments_spec(m: &Moments<f64>) -> SystemSpec {
    SystemSpec::Moments {
        d: m.d(),
        n_max: m.max_degree(),
        fiber_dim: m.fiber_dim(),
        grams: m
            .lattice()
            .indices()
            .iter()
            .zip(m.grams())
            .map(|(a, g)| (a.components().to_vec(), RawPd::from_logpd(g)))
            .collect(),
    }
}

pub fn matrix_json(m: &Matrix<f64>) -> Value {
    RawMatrix::from_matrix(m).to_json()
}
