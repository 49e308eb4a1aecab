use ovals_core::{Error, Result};
use serde::Serialize;
use serde_json::Value;
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Serialize)]
pub struct Difference {
    pub field: String,
    pub golden: String,
    pub run: String,
    pub relative: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct CompareReport {
    pub rel_tol: f64,
    pub files: usize,
    pub values: usize,
    pub differences: Vec<Difference>,
    pub pass: bool,
}

fn incompatible(msg: String) -> Error {
    Error::Incompatible(msg)
}

fn files_under(root: &Path) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        let entries = std::fs::read_dir(&dir).map_err(|e| Error::Config(format!("cannot list {}: {e}", dir.display())))?;
        for e in entries {
            let path = e.map_err(|e| Error::Config(e.to_string()))?.path();
            if path.is_dir() {
                stack.push(path);
            } else if matches!(path.extension().and_then(|x| x.to_str()), Some("json" | "csv")) {
                out.push(path.strip_prefix(root).unwrap().to_path_buf());
            }
        }
    }
    out.sort();
    Ok(out)
}

struct Walker {
    rel_tol: f64,
    values: usize,
    differences: Vec<Difference>,
}

impl Walker {
    fn numbers(&mut self, field: String, a: f64, b: f64, ta: &str, tb: &str) {
        self.values += 1;
        let scale = a.abs().max(b.abs());
        let rel = if a == b { 0.0 } else if scale > 0.0 { (a - b).abs() / scale } else { f64::INFINITY };
        if !(rel <= self.rel_tol) {
            self.differences.push(Difference { field, golden: ta.into(), run: tb.into(), relative: rel });
        }
    }

    fn text(&mut self, field: String, a: &str, b: &str) {
        self.values += 1;
        if a != b {
            self.differences.push(Difference { field, golden: a.into(), run: b.into(), relative: f64::INFINITY });
        }
    }

    fn json(&mut self, field: &str, a: &Value, b: &Value) -> Result<()> {
        match (a, b) {
            (Value::Number(x), Value::Number(y)) => {
                self.numbers(field.into(), x.as_f64().unwrap(), y.as_f64().unwrap(), &x.to_string(), &y.to_string())
            }
            (Value::Object(x), Value::Object(y)) => {
                if x.keys().ne(y.keys()) {
                    return Err(incompatible(format!("{field}: object keys differ")));
                }
                for (k, v) in x {
                    self.json(&format!("{field}.{k}"), v, &y[k])?;
                }
            }
            (Value::Array(x), Value::Array(y)) => {
                if x.len() != y.len() {
                    return Err(incompatible(format!("{field}: {} entries against {}", x.len(), y.len())));
                }
                for (i, (u, v)) in x.iter().zip(y).enumerate() {
                    self.json(&format!("{field}[{i}]"), u, v)?;
                }
            }
            (Value::Null, Value::Number(_)) | (Value::Number(_), Value::Null) | (Value::Null, Value::Null) => {
                self.text(field.into(), &a.to_string(), &b.to_string())
            }
            (Value::String(_), Value::String(_)) | (Value::Bool(_), Value::Bool(_)) => {
                self.text(field.into(), &a.to_string(), &b.to_string())
            }
            // an optional section present on one side only
            (Value::Null, _) | (_, Value::Null) => self.text(field.into(), &a.to_string(), &b.to_string()),
            _ => return Err(incompatible(format!("{field}: value types differ"))),
        }
        Ok(())
    }

    fn csv(&mut self, name: &str, a: &Path, b: &Path) -> Result<()> {
        let read = |p: &Path| -> Result<(csv::StringRecord, Vec<csv::StringRecord>)> {
            let mut r = csv::Reader::from_path(p).map_err(|e| incompatible(format!("{}: {e}", p.display())))?;
            let h = r.headers().map_err(|e| incompatible(e.to_string()))?.clone();
            let rows = r.records().collect::<std::result::Result<Vec<_>, _>>().map_err(|e| incompatible(e.to_string()))?;
            Ok((h, rows))
        };
        let ((ha, ra), (hb, rb)) = (read(a)?, read(b)?);
        if ha != hb {
            return Err(incompatible(format!("{name}: headers differ")));
        }
        if ra.len() != rb.len() {
            return Err(incompatible(format!("{name}: {} rows against {}", ra.len(), rb.len())));
        }
        for (i, (x, y)) in ra.iter().zip(&rb).enumerate() {
            for (col, (u, v)) in ha.iter().zip(x.iter().zip(y.iter())) {
                let field = format!("{name}:row {}:{col}", i + 1);
                match (u.parse::<f64>(), v.parse::<f64>()) {
                    (Ok(p), Ok(q)) if p.is_finite() && q.is_finite() => self.numbers(field, p, q, u, v),
                    _ => self.text(field, u, v),
                }
            }
        }
        Ok(())
    }
}

pub fn compare(golden: &Path, run: &Path, rel_tol: f64) -> Result<CompareReport> {
    if !(rel_tol >= 0.0) {
        return Err(Error::Config("rel_tol must be nonnegative".into()));
    }
    for d in [golden, run] {
        if !d.is_dir() {
            return Err(Error::Config(format!("{} is not a directory", d.display())));
        }
    }
    let files = files_under(golden)?;
    let mut w = Walker { rel_tol, values: 0, differences: Vec::new() };
    for f in &files {
        let (a, b) = (golden.join(f), run.join(f));
        let name = f.display().to_string();
        if !b.is_file() {
            return Err(incompatible(format!("{name} is missing from the run tree")));
        }
        if name.ends_with(".json") {
            let parse = |p: &Path| -> Result<Value> {
                let text = std::fs::read_to_string(p).map_err(|e| incompatible(e.to_string()))?;
                serde_json::from_str(&text).map_err(|e| incompatible(format!("{}: {e}", p.display())))
            };
            w.json(&name, &parse(&a)?, &parse(&b)?)?;
        } else {
            w.csv(&name, &a, &b)?;
        }
    }
    let pass = w.differences.is_empty();
    Ok(CompareReport { rel_tol, files: files.len(), values: w.values, differences: w.differences, pass })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::fs;

    fn tree(alpha: f64, extra: bool) -> tempfile::TempDir {
        let d = tempfile::tempdir().unwrap();
        fs::write(d.path().join("spectral.csv"), format!("tau,alpha\n-10,{alpha}\n-9,0.02\n")).unwrap();
        let body = if extra { r#"{"a": 1.5, "b": [1, 2], "c": "x", "d": 0}"# } else { r#"{"a": 1.5, "b": [1, 2], "c": "x"}"# };
        fs::write(d.path().join("report.json"), body).unwrap();
        d
    }

    #[test]
    fn identical_trees_pass() {
        let (a, b) = (tree(0.0125, false), tree(0.0125, false));
        let r = compare(a.path(), b.path(), 0.0).unwrap();
        assert!(r.pass && r.files == 2 && r.values == 8);
    }

    #[test]
    fn perturbation_names_the_field() {
        let (a, b) = (tree(0.0125, false), tree(0.0125 * (1.0 + 1e-3), false));
        let r = compare(a.path(), b.path(), 1e-6).unwrap();
        assert!(!r.pass);
        assert_eq!(r.differences.len(), 1);
        assert_eq!(r.differences[0].field, "spectral.csv:row 1:alpha");
        assert!(compare(a.path(), b.path(), 1e-2).unwrap().pass);
    }

    #[test]
    fn schema_mismatch_is_incompatible() {
        let (a, b) = (tree(0.0125, false), tree(0.0125, true));
        assert!(matches!(compare(a.path(), b.path(), 1e-6), Err(Error::Incompatible(_))));
        fs::write(b.path().join("report.json"), r#"{"a": 1.5, "b": [1, 2], "c": "x"}"#).unwrap();
        fs::write(b.path().join("spectral.csv"), "tau,beta\n-10,0\n-9,0\n").unwrap();
        assert!(matches!(compare(a.path(), b.path(), 1e-6), Err(Error::Incompatible(_))));
    }
}
