use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use heiscalc_core::quadrature::QuadratureSpec;
use heiscalc_core::InvariantForm;
use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

/// Common envelope of every JSON report.
#[derive(Debug, Serialize)]
pub struct Report {
    pub command: &'static str,
    pub patch_id: Option<String>,
    pub form_id: Option<String>,
    pub seed: u64,
    pub spec: Option<QuadratureSpec>,
    pub value: Value,
    pub trace: Vec<f64>,
    pub est_error: f64,
    pub passed: bool,
    pub details: Value,
}

impl Report {
    pub fn new(command: &'static str, seed: u64) -> Self {
        Report {
            command,
            patch_id: None,
            form_id: None,
            seed,
            spec: None,
            value: Value::Null,
            trace: Vec::new(),
            est_error: 0.0,
            passed: true,
            details: Value::Null,
        }
    }

    /// File stem used under `--out`.
    pub fn stem(&self) -> String {
        match &self.patch_id {
            Some(id) => format!("{}.{}", id, self.command),
            None => self.command.to_string(),
        }
    }
}

/// First 16 hex digits of the SHA-256 of the canonical JSON of the form.
pub fn form_id(form: &InvariantForm) -> String {
    let digest = Sha256::digest(form.to_json().to_string().as_bytes());
    digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
}

pub fn to_pretty(v: &impl Serialize) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("reports serialize");
    s.push('\n');
    s
}

/// Writes through a temporary file in the same directory, then renames it into place.
pub fn write_atomic(dir: &Path, name: &str, contents: &str) -> std::io::Result<PathBuf> {
    fs::create_dir_all(dir)?;
    let target = dir.join(name);
    let tmp = dir.join(format!(".{name}.tmp{}", std::process::id()));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(contents.as_bytes())?;
        f.sync_all()?;
    }
    fs::rename(&tmp, &target).inspect_err(|_| {
        let _ = fs::remove_file(&tmp);
    })?;
    Ok(target)
}
