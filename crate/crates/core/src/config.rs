//! Run configuration: `key = value` lines with `#` comments, overridden by
//! command-line flags.
//!
//! Complex literals follow `<float>[+|-]<float>i` without spaces (`-1-1i`,
//! `0.5i`, `2`). Model and incident values take a preset name followed by
//! `name=value` parameters, e.g. `model = thin_coating delta=0.01 eps=-2+0.1i mu=1`
//! or `incident = plane_wave d=0,0,1 p=1,0,0`.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::str::FromStr;

use num_complex::Complex64;

use crate::error::{GibcError, Result};
use crate::scatter::{default_nmax, IncidentField};
use crate::spectral::ImpedanceModel;
use crate::vec3::{C3, R3};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Solve,
    Rcs,
    Validate,
    Decompose,
    Equivalence,
    Convergence,
}

impl FromStr for Command {
    type Err = GibcError;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "solve" => Command::Solve,
            "rcs" => Command::Rcs,
            "validate" => Command::Validate,
            "decompose" => Command::Decompose,
            "equivalence" => Command::Equivalence,
            "convergence" => Command::Convergence,
            other => return Err(GibcError::Config(format!("unknown command `{other}`"))),
        })
    }
}

impl Command {
    pub fn as_str(&self) -> &'static str {
        match self {
            Command::Solve => "solve",
            Command::Rcs => "rcs",
            Command::Validate => "validate",
            Command::Decompose => "decompose",
            Command::Equivalence => "equivalence",
            Command::Convergence => "convergence",
        }
    }

    /// Commands that need an explicit frequency, radius and model.
    fn needs_physics(&self) -> bool {
        matches!(
            self,
            Command::Solve | Command::Rcs | Command::Equivalence | Command::Convergence
        )
    }
}

/// Incident field as configured, before `omega` is attached.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum IncidentSpec {
    PlaneWave { d: R3, p: C3 },
    Dipole { moment: C3, position: R3, magnetic: bool },
}

impl IncidentSpec {
    pub fn build(&self, omega: f64) -> Result<IncidentField> {
        match *self {
            IncidentSpec::PlaneWave { d, p } => IncidentField::plane_wave(d, p, omega),
            IncidentSpec::Dipole {
                moment,
                position,
                magnetic,
            } => IncidentField::dipole(moment, position, magnetic, omega),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NMax {
    Auto,
    Fixed(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sweep {
    /// Radial element refinement.
    Fem,
    /// Spectral truncation degree.
    Nmax,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RadialChoice {
    Exact,
    Fem,
}

/// Synthetic input of `decompose`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FieldKind {
    Random,
    Gradient,
    Curl,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub omega: f64,
    pub a: f64,
    pub r_outer: f64,
    pub model: ImpedanceModel,
    pub incident: IncidentSpec,
    pub nmax: NMax,
    pub output_dir: PathBuf,
    pub mesh_path: Option<PathBuf>,
    pub seed: u64,
    pub svg: bool,
    pub theta_points: usize,
    pub phi: f64,
    pub sweep: Sweep,
    pub radial_solver: RadialChoice,
    pub tolerance: Option<f64>,
    pub field: FieldKind,
    pub degree: usize,
    pub order: usize,
}

impl RunConfig {
    pub fn resolved_nmax(&self) -> usize {
        match self.nmax {
            NMax::Auto => default_nmax(self.omega, self.a),
            NMax::Fixed(n) => n,
        }
    }

    pub fn incident_field(&self) -> Result<IncidentField> {
        self.incident.build(self.omega)
    }
}

const KEYS: &[&str] = &[
    "command",
    "omega",
    "a",
    "R",
    "model",
    "lambda",
    "eta",
    "gamma",
    "delta",
    "eps",
    "mu",
    "incident",
    "N_max",
    "output_dir",
    "mesh_path",
    "seed",
    "svg",
    "theta_points",
    "phi",
    "sweep",
    "radial_solver",
    "tolerance",
    "field",
    "degree",
    "order",
];

/// Where a value came from, for error messages.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Origin {
    Line { line: usize, column: usize },
    Flag,
}

#[derive(Debug, Clone)]
struct Entry {
    value: String,
    origin: Origin,
}

fn error_at(origin: Origin, key: &str, offset: usize, message: String) -> GibcError {
    match origin {
        Origin::Line { line, column } => GibcError::Parse {
            line,
            column: column + offset,
            message,
        },
        Origin::Flag => GibcError::Config(format!("flag --{key}: {message}")),
    }
}

/// Parses `<float>[+|-]<float>i`, a pure real or a pure imaginary literal.
/// On failure returns the byte offset of the offending part.
pub fn parse_complex(s: &str) -> std::result::Result<Complex64, (usize, String)> {
    let bad = |at: usize, what: &str| (at, format!("malformed complex literal `{s}`: {what}"));
    if s.is_empty() {
        return Err(bad(0, "empty"));
    }
    if s.contains(char::is_whitespace) {
        return Err(bad(s.find(char::is_whitespace).unwrap(), "spaces are not allowed"));
    }
    let finite = |t: &str, at: usize| -> std::result::Result<f64, (usize, String)> {
        match t.parse::<f64>() {
            Ok(v) if v.is_finite() => Ok(v),
            _ => Err(bad(at, &format!("`{t}` is not a finite number"))),
        }
    };
    let Some(body) = s.strip_suffix('i') else {
        return Ok(Complex64::new(finite(s, 0)?, 0.0));
    };
    // split at the last sign that is neither leading nor part of an exponent
    let bytes = body.as_bytes();
    let split = (1..bytes.len())
        .rev()
        .find(|&k| (bytes[k] == b'+' || bytes[k] == b'-') && !matches!(bytes[k - 1], b'e' | b'E'));
    let imag_of = |t: &str, at: usize| match t {
        "" | "+" => Ok(1.0),
        "-" => Ok(-1.0),
        _ => finite(t, at),
    };
    match split {
        Some(k) => Ok(Complex64::new(finite(&body[..k], 0)?, imag_of(&body[k..], k)?)),
        None => Ok(Complex64::new(0.0, imag_of(body, 0)?)),
    }
}

fn split_entries(text: &str) -> Result<BTreeMap<String, Entry>> {
    let mut map = BTreeMap::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("");
        if content.trim().is_empty() {
            continue;
        }
        let Some(eq) = content.find('=') else {
            return Err(GibcError::Parse {
                line,
                column: content.len() - content.trim_start().len() + 1,
                message: "expected `key = value`".into(),
            });
        };
        let key = content[..eq].trim();
        let key_col = content.len() - content.trim_start().len() + 1;
        if !KEYS.contains(&key) {
            return Err(GibcError::Parse {
                line,
                column: key_col,
                message: format!("unknown key `{key}`"),
            });
        }
        let rest = &content[eq + 1..];
        let value = rest.trim();
        let column = eq + 2 + (rest.len() - rest.trim_start().len());
        if value.is_empty() {
            return Err(GibcError::Parse {
                line,
                column,
                message: format!("key `{key}` has no value"),
            });
        }
        map.insert(
            key.to_string(),
            Entry {
                value: value.to_string(),
                origin: Origin::Line { line, column },
            },
        );
    }
    Ok(map)
}

/// A preset name followed by `name=value` parameters, with byte offsets.
struct Preset<'a> {
    name: &'a str,
    params: Vec<(&'a str, &'a str, usize)>,
}

fn split_preset<'a>(entry: &'a Entry, key: &str) -> Result<Preset<'a>> {
    let s = entry.value.as_str();
    let mut tokens = Vec::new();
    let mut start = None;
    for (i, ch) in s.char_indices().chain(std::iter::once((s.len(), ' '))) {
        match (ch.is_whitespace(), start) {
            (false, None) => start = Some(i),
            (true, Some(b)) => {
                tokens.push((&s[b..i], b));
                start = None;
            }
            _ => {}
        }
    }
    let (name, _) = tokens[0];
    let mut params = Vec::new();
    for &(tok, at) in &tokens[1..] {
        let Some(eq) = tok.find('=') else {
            return Err(error_at(entry.origin, key, at, format!("expected `name=value`, got `{tok}`")));
        };
        params.push((&tok[..eq], &tok[eq + 1..], at + eq + 1));
    }
    Ok(Preset { name, params })
}

fn complex_value(entry: &Entry, key: &str, text: &str, offset: usize) -> Result<Complex64> {
    parse_complex(text).map_err(|(at, msg)| error_at(entry.origin, key, offset + at, msg))
}

fn real_value(entry: &Entry, key: &str, text: &str, offset: usize) -> Result<f64> {
    match text.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(error_at(entry.origin, key, offset, format!("`{text}` is not a finite real number"))),
    }
}

fn vector_value<T>(
    entry: &Entry,
    key: &str,
    text: &str,
    offset: usize,
    mut parse: impl FnMut(&str, usize) -> Result<T>,
) -> Result<[T; 3]> {
    let parts: Vec<&str> = text.split(',').collect();
    if parts.len() != 3 {
        return Err(error_at(entry.origin, key, offset, format!("expected three comma-separated components, got `{text}`")));
    }
    let mut at = offset;
    let mut out = Vec::with_capacity(3);
    for p in parts {
        out.push(parse(p, at)?);
        at += p.len() + 1;
    }
    Ok(out.try_into().unwrap_or_else(|_| unreachable!()))
}

/// Turns the flag list `--key value ...` into overrides.
pub fn flag_overrides(args: &[String]) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    let mut it = args.iter();
    while let Some(flag) = it.next() {
        let Some(key) = flag.strip_prefix("--") else {
            return Err(GibcError::Config(format!("expected `--key value`, got `{flag}`")));
        };
        let (key, value) = match key.split_once('=') {
            Some((k, v)) => (k.to_string(), v.to_string()),
            None => {
                let v = it
                    .next()
                    .ok_or_else(|| GibcError::Config(format!("flag --{key} needs a value")))?;
                (key.to_string(), v.clone())
            }
        };
        out.push((key, value));
    }
    Ok(out)
}

fn parse_model(
    map: &BTreeMap<String, Entry>,
    omega: Option<f64>,
    required: bool,
) -> Result<ImpedanceModel> {
    let default_entry = Entry {
        value: "scalar lambda=1+0.5i".into(),
        origin: Origin::Flag,
    };
    let entry = match map.get("model") {
        Some(e) => e,
        None if required => return Err(GibcError::Config("missing required key `model`".into())),
        None => &default_entry,
    };
    let preset = split_preset(entry, "model")?;
    let mut params: BTreeMap<&str, (Entry, String, usize)> = BTreeMap::new();
    for &(name, value, at) in &preset.params {
        if !["lambda", "eta", "gamma", "delta", "eps", "mu"].contains(&name) {
            return Err(error_at(entry.origin, "model", at - name.len() - 1, format!("unknown model parameter `{name}`")));
        }
        params.insert(name, (entry.clone(), value.to_string(), at));
    }
    // standalone keys take precedence over inline parameters
    for name in ["lambda", "eta", "gamma", "delta", "eps", "mu"] {
        if let Some(e) = map.get(name) {
            params.insert(name, (e.clone(), e.value.clone(), 0));
        }
    }
    let complex = |name: &str| -> Result<Complex64> {
        let (e, text, at) = params.get(name).ok_or_else(|| {
            GibcError::Config(format!("model `{}` requires parameter `{name}`", preset.name))
        })?;
        complex_value(e, name, text, *at)
    };
    Ok(match preset.name {
        "pec" => ImpedanceModel::Scalar {
            lambda: Complex64::new(0.0, 0.0),
        },
        "scalar" => ImpedanceModel::Scalar {
            lambda: complex("lambda")?,
        },
        "curl_only" => ImpedanceModel::CurlOnly {
            lambda: complex("lambda")?,
            eta: complex("eta")?,
        },
        "div_only" => ImpedanceModel::DivOnly {
            lambda: complex("lambda")?,
            gamma: complex("gamma")?,
        },
        "full" => ImpedanceModel::FullSecondOrder {
            lambda: complex("lambda")?,
            eta: complex("eta")?,
            gamma: complex("gamma")?,
        },
        "thin_coating" => {
            let (e, text, at) = params.get("delta").ok_or_else(|| {
                GibcError::Config("model `thin_coating` requires parameter `delta`".into())
            })?;
            let delta = real_value(e, "delta", text, *at)?;
            if !(delta > 0.0) {
                return Err(GibcError::Config(format!("thin coating thickness must be positive, got {delta}")));
            }
            let eps = complex("eps")?;
            let mu = complex("mu")?;
            if eps.norm() == 0.0 {
                return Err(GibcError::Config("thin coating permittivity must be nonzero".into()));
            }
            let omega = omega.ok_or_else(|| GibcError::Config("model `thin_coating` needs `omega`".into()))?;
            ImpedanceModel::ThinCoating {
                delta,
                eps,
                mu,
                omega,
            }
        }
        other => {
            return Err(error_at(entry.origin, "model", 0, format!(
                "unknown model `{other}` (expected pec, scalar, curl_only, div_only, full or thin_coating)"
            )))
        }
    })
}

fn parse_incident(map: &BTreeMap<String, Entry>) -> Result<IncidentSpec> {
    let Some(entry) = map.get("incident") else {
        return Ok(IncidentSpec::PlaneWave {
            d: [0.0, 0.0, 1.0],
            p: [Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0)],
        });
    };
    let preset = split_preset(entry, "incident")?;
    let find = |name: &str| preset.params.iter().find(|p| p.0 == name).map(|p| (p.1, p.2));
    let real3 = |name: &str| -> Result<R3> {
        let (text, at) = find(name).ok_or_else(|| GibcError::Config(format!("incident `{}` requires `{name}`", preset.name)))?;
        vector_value(entry, "incident", text, at, |t, o| real_value(entry, "incident", t, o))
    };
    let complex3 = |name: &str| -> Result<C3> {
        let (text, at) = find(name).ok_or_else(|| GibcError::Config(format!("incident `{}` requires `{name}`", preset.name)))?;
        vector_value(entry, "incident", text, at, |t, o| complex_value(entry, "incident", t, o))
    };
    for &(name, _, at) in &preset.params {
        let allowed: &[&str] = match preset.name {
            "plane_wave" => &["d", "p"],
            _ => &["moment", "position", "magnetic"],
        };
        if !allowed.contains(&name) {
            return Err(error_at(entry.origin, "incident", at - name.len() - 1, format!("unknown incident parameter `{name}`")));
        }
    }
    match preset.name {
        "plane_wave" => Ok(IncidentSpec::PlaneWave {
            d: real3("d")?,
            p: complex3("p")?,
        }),
        "dipole" => {
            let magnetic = match find("magnetic") {
                None | Some(("false", _)) => false,
                Some(("true", _)) => true,
                Some((t, at)) => return Err(error_at(entry.origin, "incident", at, format!("`{t}` is not a boolean"))),
            };
            Ok(IncidentSpec::Dipole {
                moment: complex3("moment")?,
                position: real3("position")?,
                magnetic,
            })
        }
        other => Err(error_at(entry.origin, "incident", 0, format!("unknown incident `{other}` (expected plane_wave or dipole)"))),
    }
}

/// Builds a configuration from file text and flag overrides (`(key, value)`
/// pairs, applied after the file).
pub fn parse_config(text: &str, overrides: &[(String, String)]) -> Result<RunConfig> {
    let mut map = split_entries(text)?;
    for (key, value) in overrides {
        if !KEYS.contains(&key.as_str()) {
            return Err(GibcError::Config(format!("unknown flag --{key}")));
        }
        map.insert(
            key.clone(),
            Entry {
                value: value.trim().to_string(),
                origin: Origin::Flag,
            },
        );
    }
    let command_entry = map
        .get("command")
        .ok_or_else(|| GibcError::Config("missing required key `command`".into()))?;
    let command: Command = command_entry
        .value
        .parse()
        .map_err(|_| error_at(command_entry.origin, "command", 0, format!("unknown command `{}`", command_entry.value)))?;
    let required = command.needs_physics();

    let real = |key: &str, default: Option<f64>| -> Result<Option<f64>> {
        match map.get(key) {
            Some(e) => real_value(e, key, &e.value, 0).map(Some),
            None if required && default.is_none() => {
                Err(GibcError::Config(format!("missing required key `{key}` for command `{}`", command.as_str())))
            }
            None => Ok(default),
        }
    };
    let fallback = |v: f64| if required { None } else { Some(v) };
    let omega = real("omega", fallback(1.0))?.unwrap();
    let a = real("a", fallback(1.0))?.unwrap();
    if !(omega > 0.0) {
        return Err(GibcError::Config(format!("omega must be positive, got {omega}")));
    }
    if !(a > 0.0) {
        return Err(GibcError::Config(format!("a must be positive, got {a}")));
    }
    let r_outer = real("R", Some(2.0 * a))?.unwrap();
    if !(r_outer > a) {
        return Err(GibcError::Config(format!("R = {r_outer} must exceed a = {a}")));
    }
    let model = parse_model(&map, Some(omega), required)?;
    let incident = parse_incident(&map)?;

    let integer = |key: &str, default: usize| -> Result<usize> {
        match map.get(key) {
            Some(e) => e.value.parse::<usize>().map_err(|_| {
                error_at(e.origin, key, 0, format!("`{}` is not a non-negative integer", e.value))
            }),
            None => Ok(default),
        }
    };
    let nmax = match map.get("N_max") {
        None => NMax::Auto,
        Some(e) if e.value == "auto" => NMax::Auto,
        Some(_) => match integer("N_max", 0)? {
            0 => return Err(GibcError::Config("N_max must be at least 1".into())),
            n => NMax::Fixed(n),
        },
    };
    let choice = |key: &str, options: &[&str], default: &str| -> Result<String> {
        match map.get(key) {
            Some(e) if options.contains(&e.value.as_str()) => Ok(e.value.clone()),
            Some(e) => Err(error_at(e.origin, key, 0, format!("`{}` is not one of {options:?}", e.value))),
            None => Ok(default.to_string()),
        }
    };
    let svg = choice("svg", &["true", "false"], "true")? == "true";
    let sweep = match choice("sweep", &["fem", "nmax"], "fem")?.as_str() {
        "fem" => Sweep::Fem,
        _ => Sweep::Nmax,
    };
    let radial_solver = match choice("radial_solver", &["exact", "fem"], "exact")?.as_str() {
        "exact" => RadialChoice::Exact,
        _ => RadialChoice::Fem,
    };
    let field = match choice("field", &["random", "gradient", "curl"], "random")?.as_str() {
        "gradient" => FieldKind::Gradient,
        "curl" => FieldKind::Curl,
        _ => FieldKind::Random,
    };
    let tolerance = real("tolerance", Some(f64::NAN))?.filter(|t| !t.is_nan());
    let order = integer("order", 2)?;
    if !(1..=2).contains(&order) {
        return Err(GibcError::Config(format!("order must be 1 or 2, got {order}")));
    }
    let theta_points = integer("theta_points", 181)?;
    if theta_points < 2 {
        return Err(GibcError::Config("theta_points must be at least 2".into()));
    }
    let degree = integer("degree", 1)?;
    if degree == 0 {
        return Err(GibcError::Config("degree must be at least 1".into()));
    }

    Ok(RunConfig {
        command,
        omega,
        a,
        r_outer,
        model,
        incident,
        nmax,
        output_dir: map
            .get("output_dir")
            .map(|e| PathBuf::from(&e.value))
            .unwrap_or_else(|| PathBuf::from("gibc_out")),
        mesh_path: map.get("mesh_path").map(|e| PathBuf::from(&e.value)),
        seed: integer("seed", 1)? as u64,
        svg,
        theta_points,
        phi: real("phi", Some(0.0))?.unwrap(),
        sweep,
        radial_solver,
        tolerance,
        field,
        degree,
        order,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn flags(pairs: &[(&str, &str)]) -> Vec<(String, String)> {
        pairs.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect()
    }

    #[test]
    fn complex_literals() {
        assert_eq!(parse_complex("-1-1i").unwrap(), c(-1.0, -1.0));
        assert_eq!(parse_complex("1+0.5i").unwrap(), c(1.0, 0.5));
        assert_eq!(parse_complex("2").unwrap(), c(2.0, 0.0));
        assert_eq!(parse_complex("0.01i").unwrap(), c(0.0, 0.01));
        assert_eq!(parse_complex("-i").unwrap(), c(0.0, -1.0));
        assert_eq!(parse_complex("1e-3-2.5e+2i").unwrap(), c(1e-3, -250.0));
        assert_eq!(parse_complex("-2+0.1i").unwrap(), c(-2.0, 0.1));
        for bad in ["", "1 + 2i", "abc", "1+2j", "1+xi", "inf", "nan+1i", "1++2i"] {
            assert!(parse_complex(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn empty_file_plus_flags() {
        let cfg = parse_config(
            "",
            &flags(&[("command", "solve"), ("omega", "1"), ("a", "1"), ("model", "scalar lambda=1+0.5i")]),
        )
        .unwrap();
        assert_eq!(cfg.command, Command::Solve);
        assert_eq!(cfg.model, ImpedanceModel::Scalar { lambda: c(1.0, 0.5) });
        assert_eq!(cfg.nmax, NMax::Auto);
        assert_eq!(cfg.resolved_nmax(), default_nmax(1.0, 1.0));
        assert_eq!(cfg.r_outer, 2.0);
    }

    #[test]
    fn flags_override_file_values() {
        let text = "command = solve\nomega = 2 # comment\na = 1\nmodel = scalar lambda=1\nN_max = 7\n";
        let cfg = parse_config(text, &flags(&[("omega", "3"), ("lambda", "2-1i")])).unwrap();
        assert_eq!(cfg.omega, 3.0);
        assert_eq!(cfg.nmax, NMax::Fixed(7));
        assert_eq!(cfg.model, ImpedanceModel::Scalar { lambda: c(2.0, -1.0) });
    }

    #[test]
    fn standalone_gamma_key() {
        let text = "command = solve\nomega = 1\na = 1\nmodel = full lambda=1 eta=1+1i\ngamma = -1-1i\n";
        let cfg = parse_config(text, &[]).unwrap();
        let (_, _, gamma) = cfg.model.coefficients();
        assert_eq!(gamma, c(-1.0, -1.0));
    }

    #[test]
    fn thin_coating_preset() {
        let text = "command = solve\nomega = 1\na = 1\nmodel = thin_coating delta=0.01 eps=1 mu=1\n";
        let cfg = parse_config(text, &[]).unwrap();
        // λ = −iωμδ = −0.01i, η = iδ/(ωε) = 0.01i
        match cfg.model.resolve() {
            ImpedanceModel::CurlOnly { lambda, eta } => {
                assert!((lambda - c(0.0, -0.01)).norm() < 1e-15);
                assert!((eta - c(0.0, 0.01)).norm() < 1e-15);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unknown_key_reports_its_line() {
        let text = "command = solve\n\n# comment\nfrobnicate = 3\n";
        match parse_config(text, &[]) {
            Err(GibcError::Parse { line, column, .. }) => assert_eq!((line, column), (4, 1)),
            other => panic!("{other:?}"),
        }
        assert!(matches!(parse_config("", &flags(&[("command", "solve"), ("nope", "1")])), Err(GibcError::Config(_))));
    }

    #[test]
    fn malformed_complex_reports_position() {
        let text = "command = solve\nomega = 1\na = 1\nmodel = scalar lambda=1+2j\n";
        match parse_config(text, &[]) {
            Err(GibcError::Parse { line, column, message }) => {
                assert_eq!(line, 4);
                // value starts at column 9, `lambda=` adds 7 more
                assert_eq!(column, 9 + 7 + 7);
                assert!(message.contains("1+2j"));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn missing_required_keys() {
        let err = parse_config("command = solve\nomega = 1\n", &[]).unwrap_err();
        assert!(err.to_string().contains("`a`"), "{err}");
        let err = parse_config("command = rcs\nomega = 1\na = 1\n", &[]).unwrap_err();
        assert!(err.to_string().contains("model"), "{err}");
        // validate falls back to defaults
        assert!(parse_config("command = validate\n", &[]).is_ok());
    }

    #[test]
    fn incident_presets() {
        let text = "command = solve\nomega = 1\na = 1\nmodel = pec\nincident = dipole moment=0,0,1i position=0,0,0.2 magnetic=true\n";
        let cfg = parse_config(text, &[]).unwrap();
        assert_eq!(
            cfg.incident,
            IncidentSpec::Dipole {
                moment: [c(0.0, 0.0), c(0.0, 0.0), c(0.0, 1.0)],
                position: [0.0, 0.0, 0.2],
                magnetic: true
            }
        );
        let bad = "command = solve\nomega = 1\na = 1\nmodel = pec\nincident = plane_wave d=0,0 p=1,0,0\n";
        assert!(matches!(parse_config(bad, &[]), Err(GibcError::Parse { line: 5, .. })));
    }

    #[test]
    fn flag_list_parsing() {
        let args: Vec<String> = ["--omega", "2", "--model=scalar lambda=1"].iter().map(|s| s.to_string()).collect();
        let o = flag_overrides(&args).unwrap();
        assert_eq!(o, flags(&[("omega", "2"), ("model", "scalar lambda=1")]));
        assert!(flag_overrides(&["--omega".to_string()]).is_err());
        assert!(flag_overrides(&["omega".to_string()]).is_err());
    }
}
