use std::fs;
use std::path::{Path, PathBuf};

use csv::{Terminator, WriterBuilder};
use serde::Serialize;
use serde_json::Value;

use crate::Failure;

/// Rows of one output CSV.
#[derive(Debug, Default)]
pub struct Table {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(columns: &[&'static str]) -> Self {
        Self {
            columns: columns.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: impl IntoIterator<Item = impl ToString>) {
        let row: Vec<String> = row.into_iter().map(|c| c.to_string()).collect();
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    /// One `(prefix, field, value)` row per scalar field of `record`.
    pub fn push_fields(&mut self, prefix: &str, record: &impl Serialize) {
        let value = serde_json::to_value(record).expect("records serialize");
        flatten(prefix, "", &value, self);
    }

    /// `# symflow-lab <experiment> config_sha256=<hash> seed=<seed>`, then the
    /// CSV proper. LF line endings throughout.
    pub fn render(&self, experiment: &str, hash: &str, seed: u64) -> Result<Vec<u8>, Failure> {
        let mut out = format!("# symflow-lab {experiment} config_sha256={hash} seed={seed}\n").into_bytes();
        let mut w = WriterBuilder::new()
            .terminator(Terminator::Any(b'\n'))
            .from_writer(&mut out);
        w.write_record(&self.columns).map_err(csv_failure)?;
        for r in &self.rows {
            w.write_record(r).map_err(csv_failure)?;
        }
        w.flush().map_err(Failure::Io)?;
        drop(w);
        Ok(out)
    }

    pub fn write(&self, dir: &Path, experiment: &str, hash: &str, seed: u64) -> Result<PathBuf, Failure> {
        let bytes = self.render(experiment, hash, seed)?;
        fs::create_dir_all(dir).map_err(Failure::Io)?;
        let path = dir.join(format!("{experiment}.csv"));
        fs::write(&path, bytes).map_err(Failure::Io)?;
        Ok(path)
    }
}

fn csv_failure(e: csv::Error) -> Failure {
    Failure::Io(std::io::Error::other(e))
}

fn flatten(prefix: &str, path: &str, v: &Value, t: &mut Table) {
    let join = |k: &str| if path.is_empty() { k.to_string() } else { format!("{path}.{k}") };
    match v {
        Value::Object(m) => m.iter().for_each(|(k, x)| flatten(prefix, &join(k), x, t)),
        Value::Array(a) => a
            .iter()
            .enumerate()
            .for_each(|(i, x)| flatten(prefix, &join(&i.to_string()), x, t)),
        Value::String(s) => t.push([prefix, path, s]),
        Value::Null => t.push([prefix, path, ""]),
        other => t.push([prefix.to_string(), path.to_string(), other.to_string()]),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_and_line_endings() {
        let mut t = Table::new(&["metric", "field", "value"]);
        t.push(["a", "b", "1,5"]);
        t.push_fields("kac", &serde_json::json!({"mean": 2.0, "xs": [1, 2]}));
        let out = String::from_utf8(t.render("kac-check", "ab12", 7).unwrap()).unwrap();
        assert!(!out.contains('\r'));
        let lines: Vec<&str> = out.lines().collect();
        assert_eq!(lines[0], "# symflow-lab kac-check config_sha256=ab12 seed=7");
        assert_eq!(lines[1], "metric,field,value");
        assert_eq!(lines[2], "a,b,\"1,5\"");
        assert_eq!(lines[3], "kac,mean,2.0");
        assert_eq!(lines[5], "kac,xs.1,2");
    }
}
