use std::fs;
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};

use conflux_core::eventcsv::read_events;
use conflux_core::ingest::SensorRegistry;
use conflux_core::prioritization::TemplateOverrides;
use conflux_core::profiles::{ProfileConfig, ResolvedProfiles};
use conflux_core::ServiceEventLog;
use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::diag::Failure;

/// Reads a whole file, or stdin when the path is `-`.
pub fn read_text(path: &Path) -> Result<String, Failure> {
    if path == Path::new("-") {
        let mut s = String::new();
        io::stdin().read_to_string(&mut s).map_err(|e| Failure::io(path, e))?;
        return Ok(s);
    }
    fs::read_to_string(path).map_err(|e| Failure::io(path, e))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, Failure> {
    serde_json::from_str(&read_text(path)?).map_err(|e| Failure::config(path, e.to_string()))
}

pub fn read_events_file(path: &Path) -> Result<ServiceEventLog, Failure> {
    Ok(read_events(read_text(path)?.as_bytes())?)
}

pub fn read_profiles(path: &Path) -> Result<ResolvedProfiles, Failure> {
    let cfg = ProfileConfig::from_toml(&read_text(path)?)
        .map_err(|e| Failure::from(e).context(path.display().to_string()))?;
    cfg.resolve()
        .map_err(|e| Failure::from(e).context(path.display().to_string()))
}

pub fn read_registry(path: &Path) -> Result<SensorRegistry, Failure> {
    SensorRegistry::from_toml(&read_text(path)?).map_err(|e| Failure::from(e).context(path.display().to_string()))
}

pub fn read_templates(path: &Path) -> Result<TemplateOverrides, Failure> {
    toml::from_str(&read_text(path)?).map_err(|e| Failure::config(path, e.message().to_owned()))
}

pub fn to_json<T: Serialize + ?Sized>(value: &T) -> Vec<u8> {
    let mut buf = serde_json::to_vec_pretty(value).expect("output types serialize");
    buf.push(b'\n');
    buf
}

/// Writes `bytes` to `out` through a temporary file in the same directory
/// and renames it into place, or to stdout when `out` is `None` or `-`.
pub fn emit(out: Option<&PathBuf>, bytes: &[u8]) -> Result<(), Failure> {
    let Some(path) = out.filter(|p| p.as_path() != Path::new("-")) else {
        let mut stdout = io::stdout().lock();
        return stdout
            .write_all(bytes)
            .and_then(|_| stdout.flush())
            .map_err(|e| Failure::io(Path::new("-"), e));
    };
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Failure::io(path, e))?;
    tmp.write_all(bytes).map_err(|e| Failure::io(path, e))?;
    tmp.as_file().sync_all().map_err(|e| Failure::io(path, e))?;
    tmp.persist(path).map_err(|e| Failure::io(path, e.error))?;
    Ok(())
}
