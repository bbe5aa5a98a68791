//! CSV and JSON writers.

use anyhow::{Context, Result};
use serde::Serialize;
use std::io::Write;
use std::path::Path;

/// Bumped whenever a CSV column or JSON field changes meaning.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Serialize)]
struct Versioned<'a, T: Serialize> {
    schema_version: u32,
    command: &'a str,
    #[serde(flatten)]
    body: &'a T,
}

pub fn csv_string<T: Serialize>(rows: &[T]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    Ok(String::from_utf8(w.into_inner()?)?)
}

pub fn json_string<T: Serialize>(command: &str, body: &T) -> Result<String> {
    let v = Versioned {
        schema_version: SCHEMA_VERSION,
        command,
        body,
    };
    Ok(serde_json::to_string_pretty(&v)?)
}

/// Writes `<dir>/<name>` or, without a directory, prints to stdout.
pub fn emit(dir: Option<&Path>, name: &str, content: &str) -> Result<()> {
    match dir {
        Some(d) => {
            std::fs::create_dir_all(d).with_context(|| format!("creating {}", d.display()))?;
            let p = d.join(name);
            std::fs::write(&p, content).with_context(|| format!("writing {}", p.display()))
        }
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(content.as_bytes())?;
            if !content.ends_with('\n') {
                out.write_all(b"\n")?;
            }
            Ok(())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[derive(Serialize)]
    struct Row {
        eps: f64,
        value: f64,
    }

    #[test]
    fn csv_header_and_json_version() {
        let s = csv_string(&[Row {
            eps: 0.1,
            value: -2.5,
        }])
        .unwrap();
        assert_eq!(s, "eps,value\n0.1,-2.5\n");
        let j: serde_json::Value = serde_json::from_str(
            &json_string(
                "solve",
                &Row {
                    eps: 0.1,
                    value: 1.0,
                },
            )
            .unwrap(),
        )
        .unwrap();
        assert_eq!(j["schema_version"], SCHEMA_VERSION);
        assert_eq!(j["command"], "solve");
        assert_eq!(j["eps"], 0.1);
    }
}
