//! Text artifacts: coefficient and table CSV files with lossless float
//! formatting, the plain-text solve report and a minimal SVG polar chart.

use std::fmt::Write as _;
use std::path::Path;

use num_complex::Complex64;
use serde_json::{json, Value};

use crate::error::{GibcError, Result};
use crate::quadrature::flat_index;
use crate::scatter::SolveReport;
use crate::spectral::{modes, ImpedanceModel, SpectralTangentField};

/// 17 significant digits, enough to round-trip any `f64`.
pub fn fmt_real(x: f64) -> String {
    format!("{x:.16e}")
}

fn csv_error(e: csv::Error) -> GibcError {
    match e.position() {
        Some(p) => GibcError::Parse {
            line: p.line() as usize,
            column: 1,
            message: e.to_string(),
        },
        None => GibcError::Parse {
            line: 0,
            column: 0,
            message: e.to_string(),
        },
    }
}

/// Writes a header and rows of already formatted cells.
pub fn table_csv(header: &[&str], rows: &[Vec<String>]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).map_err(csv_error)?;
    for r in rows {
        w.write_record(r).map_err(csv_error)?;
    }
    let bytes = w.into_inner().map_err(|e| GibcError::Config(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
}

/// Coefficients in the order `n` ascending, `m` ascending, `U` before `V`,
/// preceded by a `# a = ...` line carrying the radius.
pub fn coefficients_csv(u: &SpectralTangentField) -> Result<String> {
    let mut rows = Vec::with_capacity(2 * u.alpha.len());
    for (n, m, k) in modes(u.nmax) {
        for (family, z) in [("U", u.alpha[k]), ("V", u.beta[k])] {
            rows.push(vec![
                n.to_string(),
                m.to_string(),
                family.to_string(),
                fmt_real(z.re),
                fmt_real(z.im),
            ]);
        }
    }
    Ok(format!("# a = {}\n{}", fmt_real(u.a), table_csv(&["n", "m", "family", "re", "im"], &rows)?))
}

/// Inverse of [`coefficients_csv`].
pub fn parse_coefficients_csv(text: &str) -> Result<SpectralTangentField> {
    let first = text.lines().next().unwrap_or("");
    let a: f64 = first
        .strip_prefix("# a = ")
        .and_then(|s| s.trim().parse().ok())
        .ok_or_else(|| GibcError::Parse {
            line: 1,
            column: 1,
            message: "expected `# a = <radius>`".into(),
        })?;
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let mut entries = Vec::new();
    for (row, rec) in reader.records().enumerate() {
        let rec = rec.map_err(csv_error)?;
        let line = row + 3;
        let bad = |what: &str| GibcError::Parse {
            line,
            column: 1,
            message: format!("bad {what}"),
        };
        if rec.len() != 5 {
            return Err(bad("column count"));
        }
        let n: usize = rec[0].parse().map_err(|_| bad("degree"))?;
        let m: i32 = rec[1].parse().map_err(|_| bad("order"))?;
        if n == 0 || m.unsigned_abs() as usize > n {
            return Err(bad("mode index"));
        }
        let re: f64 = rec[3].parse().map_err(|_| bad("real part"))?;
        let im: f64 = rec[4].parse().map_err(|_| bad("imaginary part"))?;
        let family = match &rec[2] {
            "U" => 0,
            "V" => 1,
            _ => return Err(bad("family")),
        };
        entries.push((n, m, family, Complex64::new(re, im)));
    }
    let nmax = entries.iter().map(|e| e.0).max().unwrap_or(0);
    if nmax == 0 {
        return Err(GibcError::Parse {
            line: 2,
            column: 1,
            message: "no coefficients".into(),
        });
    }
    let mut u = SpectralTangentField::zeros(nmax, a);
    let mut seen = vec![[false; 2]; u.alpha.len()];
    for (n, m, family, z) in entries {
        let k = flat_index(n, m);
        seen[k][family] = true;
        if family == 0 {
            u.alpha[k] = z;
        } else {
            u.beta[k] = z;
        }
    }
    if let Some(k) = seen.iter().position(|s| !(s[0] && s[1])) {
        let (n, m, _) = modes(nmax).nth(k).unwrap();
        return Err(GibcError::Config(format!("coefficient table misses mode ({n}, {m})")));
    }
    Ok(u)
}

/// `theta, phi, sigma` rows (angles in radians).
pub fn rcs_csv(rows: &[(f64, f64, f64)]) -> Result<String> {
    let cells: Vec<Vec<String>> = rows
        .iter()
        .map(|&(t, p, s)| vec![fmt_real(t), fmt_real(p), fmt_real(s)])
        .collect();
    table_csv(&["theta", "phi", "sigma"], &cells)
}

/// Polar chart of `10 log10 σ` against θ, with a 40 dB dynamic range.
pub fn polar_svg(theta: &[f64], sigma: &[f64], title: &str) -> String {
    let (cx, cy, radius) = (220.0, 220.0, 180.0);
    let db: Vec<f64> = sigma.iter().map(|s| 10.0 * s.max(1e-300).log10()).collect();
    let top = db.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let floor = top - 40.0;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="440" height="460" viewBox="0 0 440 460">"#
    );
    let _ = writeln!(s, r#"<rect width="440" height="460" fill="white"/>"#);
    for k in 1..=4 {
        let r = radius * k as f64 / 4.0;
        let _ = writeln!(s, r##"<circle cx="{cx}" cy="{cy}" r="{r:.2}" fill="none" stroke="#bbb"/>"##);
        let _ = writeln!(
            s,
            r##"<text x="{:.2}" y="{cy}" font-size="10" fill="#666">{:.0} dB</text>"##,
            cx + r + 2.0,
            floor + 10.0 * k as f64
        );
    }
    for deg in (0..360).step_by(30) {
        let a = (deg as f64).to_radians();
        let _ = writeln!(
            s,
            r##"<line x1="{cx}" y1="{cy}" x2="{:.2}" y2="{:.2}" stroke="#ddd"/>"##,
            cx + radius * a.sin(),
            cy - radius * a.cos()
        );
    }
    let points: Vec<String> = theta
        .iter()
        .zip(&db)
        .map(|(t, d)| {
            let r = radius * ((d - floor) / 40.0).clamp(0.0, 1.0);
            format!("{:.3},{:.3}", cx + r * t.sin(), cy - r * t.cos())
        })
        .collect();
    let _ = writeln!(
        s,
        r##"<polyline points="{}" fill="none" stroke="#c0392b" stroke-width="1.5"/>"##,
        points.join(" ")
    );
    let _ = writeln!(s, r#"<text x="10" y="450" font-size="12">{title}</text>"#);
    s.push_str("</svg>\n");
    s
}

fn complex_json(z: Complex64) -> Value {
    json!([z.re, z.im])
}

pub fn model_json(model: &ImpedanceModel) -> Value {
    let (lambda, eta, gamma) = model.coefficients();
    let mut v = json!({
        "kind": model.name(),
        "lambda": complex_json(lambda),
        "eta": complex_json(eta),
        "gamma": complex_json(gamma),
    });
    if let ImpedanceModel::ThinCoating { delta, eps, mu, .. } = model {
        v["delta"] = json!(delta);
        v["eps"] = complex_json(*eps);
        v["mu"] = complex_json(*mu);
    }
    v
}

/// The solve report as indented JSON text.
pub fn solve_report_text(report: &SolveReport, a: f64) -> String {
    let value = json!({
        "omega": report.omega,
        "a": a,
        "N_max": report.u.nmax,
        "model": model_json(&report.model),
        "hypothesis": {
            "uniqueness_ok": report.hypothesis.uniqueness_ok,
            "existence_route": report.hypothesis.existence_route.as_str(),
            "violated_conditions": report.hypothesis.violated_conditions,
        },
        "energy_residual": report.energy_residual,
        "silver_muller": report.silver_muller.iter().map(|(r, v)| json!({"R": r, "residual": v})).collect::<Vec<_>>(),
        "mode_condition_numbers": report.mode_condition_numbers,
        "truncation_warning": report.truncation_warning,
        "clamped_nmax": report.clamped_nmax,
        "far_field_phi0": report.far_field.iter().map(|(d, s)| json!({"theta": d[2].clamp(-1.0, 1.0).acos(), "sigma": s})).collect::<Vec<_>>(),
    });
    let mut s = serde_json::to_string_pretty(&value).expect("report values are finite JSON");
    s.push('\n');
    s
}

/// Writes `contents` to `dir/name`, creating `dir` as needed.
pub fn write_artifact(dir: &Path, name: &str, contents: &str) -> Result<std::path::PathBuf> {
    std::fs::create_dir_all(dir).map_err(|e| GibcError::io(dir, e))?;
    let path = dir.join(name);
    std::fs::write(&path, contents).map_err(|e| GibcError::io(&path, e))?;
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn seventeen_significant_digits_round_trip() {
        for x in [0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, f64::MIN_POSITIVE, 0.0] {
            let s = fmt_real(x);
            assert_eq!(s.parse::<f64>().unwrap(), x, "{s}");
            assert_eq!(s.split('e').next().unwrap().replace(['-', '.'], "").len(), 17);
        }
    }

    #[test]
    fn coefficient_csv_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let u = SpectralTangentField::random(6, 1.25, &mut rng);
        let text = coefficients_csv(&u).unwrap();
        assert_eq!(parse_coefficients_csv(&text).unwrap(), u);
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[1], "n,m,family,re,im");
        assert!(lines[2].starts_with("1,-1,U,") && lines[3].starts_with("1,-1,V,"));
        assert!(lines[4].starts_with("1,0,U,"));
    }

    #[test]
    fn incomplete_table_is_rejected() {
        let text = "# a = 1\nn,m,family,re,im\n1,0,U,1,0\n";
        assert!(parse_coefficients_csv(text).is_err());
        assert!(parse_coefficients_csv("n,m\n").is_err());
    }

    #[test]
    fn svg_is_well_formed_enough() {
        let theta: Vec<f64> = (0..37).map(|k| k as f64 * 5f64.to_radians()).collect();
        let sigma: Vec<f64> = theta.iter().map(|t| 1.0 + t.cos().powi(2)).collect();
        let svg = polar_svg(&theta, &sigma, "test");
        assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
        assert_eq!(svg.matches("<polyline").count(), 1);
    }
}
