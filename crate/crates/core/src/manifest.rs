//! Dataset manifest: a `key = value` file naming the classes, the cover maps
//! in date order and the environmental layers.
//!
//! ```text
//! classes = 3
//! class_names = forest, scrub, grass
//! cover = 1957 cover_0.asc
//! cover = 1974 cover_1.asc
//! env_numeric = elevation env_elevation.asc
//! env_categorical = geology env_geology.asc 4
//! ```
//!
//! Paths are relative to the manifest's directory.

use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::grid::{self, Dataset, EnvKind, GridError};
use crate::kv::{KvError, KvFile};

pub const MANIFEST_FILE: &str = "manifest.txt";

#[derive(Debug, Error)]
pub enum ManifestError {
    #[error(transparent)]
    Kv(#[from] KvError),
    #[error("{path}: {source}")]
    Grid {
        path: String,
        #[source]
        source: GridError,
    },
    #[error("invalid entry `{key} = {value}`: {msg}")]
    Entry { key: String, value: String, msg: String },
    #[error("{0}")]
    Invalid(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

fn entry_err(key: &str, value: &str, msg: &str) -> ManifestError {
    ManifestError::Entry { key: key.into(), value: value.into(), msg: msg.into() }
}

/// Resolve a dataset location: either a manifest file or a directory holding `manifest.txt`.
pub fn manifest_path(location: &Path) -> PathBuf {
    if location.is_dir() {
        location.join(MANIFEST_FILE)
    } else {
        location.to_path_buf()
    }
}

/// Load a dataset. The result is validated with [`grid::validate_dataset`].
pub fn read_dataset(location: &Path) -> Result<Dataset, ManifestError> {
    let path = manifest_path(location);
    let kv = KvFile::read(&path)?;
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    let k: usize = kv.parse_value("classes")?.ok_or_else(|| KvError::Missing("classes".into()))?;
    let class_names: Vec<String> = match kv.get("class_names")? {
        Some(v) => v.split(',').map(|s| s.trim().to_string()).collect(),
        None => (1..=k).map(|c| format!("class{c}")).collect(),
    };
    if class_names.len() != k {
        return Err(ManifestError::Invalid(format!("{} class names for {k} classes", class_names.len())));
    }
    let grid_err = |p: &Path| {
        let p = p.display().to_string();
        move |source| ManifestError::Grid { path: p, source }
    };
    let mut covers = Vec::new();
    for v in kv.get_all("cover") {
        let (label, file) = match v.split_once(char::is_whitespace) {
            Some((l, f)) => (l.to_string(), f.trim()),
            None => (covers.len().to_string(), v),
        };
        let p = base.join(file);
        covers.push(grid::read_land_cover(&p, k).map_err(grid_err(&p))?.with_label(label));
    }
    let mut env_layers = Vec::new();
    for (key, v) in kv.entries() {
        let fields: Vec<&str> = v.split_whitespace().collect();
        let (name, file, kind) = match (key.as_str(), fields.as_slice()) {
            ("env_numeric", [name, file]) => (*name, *file, EnvKind::Numeric),
            ("env_categorical", [name, file, count]) => {
                let category_count = count.parse().map_err(|_| entry_err(key, v, "category count"))?;
                (*name, *file, EnvKind::Categorical { category_count })
            }
            ("env_numeric", _) => return Err(entry_err(key, v, "expected `<name> <file>`")),
            ("env_categorical", _) => return Err(entry_err(key, v, "expected `<name> <file> <categories>`")),
            _ => continue,
        };
        let p = base.join(file);
        env_layers.push(grid::read_env_layer(&p, name, kind).map_err(grid_err(&p))?);
    }
    let d = Dataset { class_names, covers, env_layers };
    let violations = grid::validate_dataset(&d);
    if !violations.is_empty() {
        let msgs: Vec<String> = violations.iter().take(5).map(ToString::to_string).collect();
        return Err(ManifestError::Invalid(format!(
            "{} invariant violation(s): {}",
            violations.len(),
            msgs.join("; ")
        )));
    }
    Ok(d)
}

/// Write the manifest and one grid file per cover/layer into `dir`.
pub fn write_dataset(d: &Dataset, dir: &Path) -> Result<PathBuf, ManifestError> {
    std::fs::create_dir_all(dir).map_err(|source| ManifestError::Io { path: dir.display().to_string(), source })?;
    let mut kv = KvFile::new();
    kv.push("classes", d.class_count());
    kv.push("class_names", d.class_names.join(", "));
    let grid_err = |p: &Path| {
        let p = p.display().to_string();
        move |source| ManifestError::Grid { path: p, source }
    };
    for (t, g) in d.covers.iter().enumerate() {
        let file = format!("cover_{t}.asc");
        let label = if g.date_label.is_empty() { t.to_string() } else { g.date_label.clone() };
        let p = dir.join(&file);
        grid::write_land_cover(g, &p).map_err(grid_err(&p))?;
        kv.push("cover", format!("{label} {file}"));
    }
    for layer in &d.env_layers {
        let file = format!("env_{}.asc", layer.name);
        let p = dir.join(&file);
        grid::write_env_layer(layer, &p).map_err(grid_err(&p))?;
        match layer.kind {
            EnvKind::Numeric => kv.push("env_numeric", format!("{} {file}", layer.name)),
            EnvKind::Categorical { category_count } => {
                kv.push("env_categorical", format!("{} {file} {category_count}", layer.name))
            }
        }
    }
    let path = dir.join(MANIFEST_FILE);
    std::fs::write(&path, kv.to_text()).map_err(|source| ManifestError::Io { path: path.display().to_string(), source })?;
    Ok(path)
}
