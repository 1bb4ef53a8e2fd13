use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::Context;
use serde_json::Value;

use crate::experiments::Artifacts;

pub struct Provenance<'a> {
    pub experiment: &'a str,
    pub config_sha256: String,
    pub seed: u64,
    pub timestamp: bool,
}

fn write_json(path: &Path, value: &Value) -> anyhow::Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

/// Writes results.csv, summary.json and, when present, certificate.json.
pub fn write(dir: &Path, prov: &Provenance, art: &Artifacts) -> anyhow::Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;

    let path = dir.join("results.csv");
    let mut out =
        BufWriter::new(File::create(&path).with_context(|| format!("writing {}", path.display()))?);
    writeln!(out, "# experiment: {}", prov.experiment)?;
    writeln!(out, "# config_sha256: {}", prov.config_sha256)?;
    writeln!(out, "# seed: {}", prov.seed)?;
    writeln!(out, "# grid: {}", art.grid)?;
    if prov.timestamp {
        let secs = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        writeln!(out, "# unix_time: {secs}")?;
    }
    {
        let mut csv = csv::Writer::from_writer(&mut out);
        csv.write_record(&art.header)?;
        for row in &art.rows {
            csv.write_record(row)?;
        }
        csv.flush()?;
    }
    out.flush()?;

    let mut summary = art.summary.clone();
    if let Value::Object(map) = &mut summary {
        map.insert("experiment".into(), prov.experiment.into());
        map.insert("config_sha256".into(), prov.config_sha256.clone().into());
        map.insert("seed".into(), prov.seed.into());
        map.insert("rows".into(), art.rows.len().into());
        map.insert(
            "error".into(),
            art.failure
                .as_ref()
                .map(|e| Value::from(e.to_string()))
                .unwrap_or(Value::Null),
        );
    }
    write_json(&dir.join("summary.json"), &summary)?;
    if let Some(cert) = &art.certificate {
        write_json(&dir.join("certificate.json"), cert)?;
    }
    Ok(())
}
