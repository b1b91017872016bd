use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{harness_source, KernelSpec, KernelVariant, VariantError, VariantKind, VariantParams};

pub const MANIFEST_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub app: String,
    pub kind: VariantKind,
    /// Variant source, relative to the manifest directory.
    pub file: String,
    /// Timing harness, relative to the manifest directory.
    pub harness: String,
    pub params: VariantParams,
}

impl ManifestEntry {
    /// Entry for `v` under the file names `write_variants` uses.
    pub fn for_variant(v: &KernelVariant) -> ManifestEntry {
        let stem = v.stem();
        ManifestEntry {
            app: v.kernel_name.clone(),
            kind: v.kind,
            file: format!("{stem}.c"),
            harness: format!("{stem}_harness.c"),
            params: v.params.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub schema_version: u32,
    pub entries: Vec<ManifestEntry>,
}

/// Writes `<stem>.c`, `<stem>_harness.c` per variant and `manifest.json`.
pub fn write_variants(dir: &Path, kernels: &[(KernelSpec, Vec<KernelVariant>)]) -> Result<Manifest, VariantError> {
    fs::create_dir_all(dir)?;
    let mut entries = Vec::new();
    for (spec, variants) in kernels {
        for v in variants {
            let e = ManifestEntry::for_variant(v);
            fs::write(dir.join(&e.file), &v.source)?;
            fs::write(dir.join(&e.harness), harness_source(spec, v)?)?;
            entries.push(e);
        }
    }
    let manifest = Manifest { schema_version: MANIFEST_SCHEMA_VERSION, entries };
    let text = serde_json::to_string_pretty(&manifest).map_err(|e| VariantError::Manifest(e.to_string()))?;
    fs::write(dir.join("manifest.json"), text + "\n")?;
    Ok(manifest)
}

/// Loads `manifest.json` and the variant sources it lists.
pub fn read_manifest(dir: &Path) -> Result<Vec<(ManifestEntry, KernelVariant)>, VariantError> {
    let text = fs::read_to_string(dir.join("manifest.json"))?;
    let manifest: Manifest = serde_json::from_str(&text).map_err(|e| VariantError::Manifest(e.to_string()))?;
    if manifest.schema_version != MANIFEST_SCHEMA_VERSION {
        return Err(VariantError::Manifest(format!(
            "unsupported schema version {} (expected {MANIFEST_SCHEMA_VERSION})",
            manifest.schema_version
        )));
    }
    manifest
        .entries
        .into_iter()
        .map(|e| {
            let source = fs::read_to_string(dir.join(&e.file))?;
            let v = KernelVariant { kernel_name: e.app.clone(), kind: e.kind, source, params: e.params.clone() };
            Ok((e, v))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::variantgen::{builtin_kernels, enumerate_dataset_points};

    #[test]
    fn write_then_read() {
        let dir = tempfile::tempdir().unwrap();
        let spec = builtin_kernels().into_iter().find(|k| k.kernel_name == "transpose").unwrap();
        let vs = enumerate_dataset_points(&spec, &[8, 16], &[2], &[4]).unwrap();
        let m = write_variants(dir.path(), &[(spec, vs.clone())]).unwrap();
        assert_eq!(m.entries.len(), vs.len());
        let back = read_manifest(dir.path()).unwrap();
        assert_eq!(back.into_iter().map(|(_, v)| v).collect::<Vec<_>>(), vs);
        assert!(dir.path().join(&m.entries[0].harness).exists());
    }
}
