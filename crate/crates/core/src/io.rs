//! On-disk formats: JSON dataset manifests, raw little-endian `f32` segment
//! files laid out channel-major as `[C][M·L]`, and versioned JSON artifacts
//! whose float arrays are base64-encoded little-endian `f64`.

use std::fs;
use std::path::{Path, PathBuf};

use ndarray::Array3;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::signal::{Class, Segment};

/// Version written into manifests and artifacts; other versions are rejected.
pub const FORMAT_VERSION: u32 = 1;

/// Exact base64 encoding of `f64` arrays.
pub mod b64 {
    use base64::engine::general_purpose::STANDARD;
    use base64::Engine;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn encode(values: &[f64]) -> String {
        let bytes: Vec<u8> = values.iter().flat_map(|v| v.to_le_bytes()).collect();
        STANDARD.encode(bytes)
    }

    pub fn decode(text: &str) -> Result<Vec<f64>, String> {
        let bytes = STANDARD.decode(text).map_err(|e| e.to_string())?;
        if bytes.len() % 8 != 0 {
            return Err(format!("{} bytes is not a whole number of f64 values", bytes.len()));
        }
        Ok(bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
            .collect())
    }

    /// `#[serde(with = "...")]` adapter for `Vec<f64>`.
    pub mod vec {
        use super::*;

        pub fn serialize<S: Serializer>(v: &[f64], s: S) -> Result<S::Ok, S::Error> {
            s.serialize_str(&encode(v))
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<f64>, D::Error> {
            decode(&String::deserialize(d)?).map_err(serde::de::Error::custom)
        }
    }

    /// `#[serde(with = "...")]` adapter for `[Vec<f64>; 2]`.
    pub mod pair {
        use super::*;

        pub fn serialize<S: Serializer>(v: &[Vec<f64>; 2], s: S) -> Result<S::Ok, S::Error> {
            use serde::ser::SerializeTuple;
            let mut t = s.serialize_tuple(2)?;
            t.serialize_element(&encode(&v[0]))?;
            t.serialize_element(&encode(&v[1]))?;
            t.end()
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<[Vec<f64>; 2], D::Error> {
            let [a, b] = <[String; 2]>::deserialize(d)?;
            Ok([
                decode(&a).map_err(serde::de::Error::custom)?,
                decode(&b).map_err(serde::de::Error::custom)?,
            ])
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentRecord {
    pub id: String,
    /// Relative to the manifest's directory.
    pub path: PathBuf,
    /// Absent for segments not (yet) labeled or excluded by labeling.
    #[serde(default)]
    pub label: Option<Class>,
    pub m: usize,
    pub c: usize,
    pub l: usize,
    /// Recording time of the first sample, in seconds.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub start_time: Option<f64>,
}

/// One seizure: earliest EEG change and end, in seconds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Annotation {
    pub seizure_id: String,
    pub eec_time: f64,
    pub end_time: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub version: u32,
    pub fs: f64,
    pub segments: Vec<SegmentRecord>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub annotations: Vec<Annotation>,
}

fn open(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => Error::MissingArtifact(path.to_path_buf()),
        _ => Error::Io(e),
    })
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

pub fn read_manifest(path: &Path) -> Result<DatasetManifest> {
    let m: DatasetManifest = serde_json::from_slice(&open(path)?)?;
    if m.version != FORMAT_VERSION {
        return Err(Error::Format(format!(
            "{}: manifest version {} (expected {FORMAT_VERSION})",
            path.display(),
            m.version
        )));
    }
    Ok(m)
}

pub fn write_manifest(path: &Path, manifest: &DatasetManifest) -> Result<()> {
    write_json(path, manifest)
}

/// Writes `[C][M·L]` little-endian `f32` samples.
pub fn write_segment_file(path: &Path, segment: &Segment) -> Result<()> {
    let (m, c, l) = segment.data.dim();
    let mut bytes = Vec::with_capacity(m * c * l * 4);
    for ch in 0..c {
        for w in 0..m {
            for t in 0..l {
                bytes.extend_from_slice(&(segment.data[[w, ch, t]] as f32).to_le_bytes());
            }
        }
    }
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    fs::write(path, bytes)?;
    Ok(())
}

/// Reads a `[C][M·L]` file into `M × C × L` samples.
pub fn read_segment_file(path: &Path, m: usize, c: usize, l: usize) -> Result<Array3<f64>> {
    let bytes = open(path)?;
    if bytes.len() != m * c * l * 4 {
        return Err(Error::Format(format!(
            "{}: {} bytes, expected {} for {m}x{c}x{l} f32 samples",
            path.display(),
            bytes.len(),
            m * c * l * 4
        )));
    }
    let mut data = Array3::<f64>::zeros((m, c, l));
    let mut it = bytes.chunks_exact(4).map(|b| f32::from_le_bytes(b.try_into().expect("chunk of 4")) as f64);
    for ch in 0..c {
        for w in 0..m {
            for t in 0..l {
                data[[w, ch, t]] = it.next().expect("length checked");
            }
        }
    }
    Ok(data)
}

/// Loads every labeled segment of a manifest, in manifest order.
pub fn load_dataset(manifest_path: &Path) -> Result<(DatasetManifest, Vec<Segment>)> {
    let manifest = read_manifest(manifest_path)?;
    let root = manifest_path.parent().unwrap_or(Path::new("."));
    let mut geometry = None;
    let mut segments = Vec::new();
    for rec in &manifest.segments {
        let Some(label) = rec.label else { continue };
        let g = (rec.m, rec.c, rec.l);
        if *geometry.get_or_insert(g) != g {
            return Err(Error::Format(format!(
                "segment {} is {}x{}x{}, others are {:?}",
                rec.id, rec.m, rec.c, rec.l, geometry
            )));
        }
        let data = read_segment_file(&root.join(&rec.path), rec.m, rec.c, rec.l)?;
        segments.push(Segment::new(rec.id.clone(), data, label, manifest.fs)?);
    }
    if segments.is_empty() {
        return Err(Error::Format(format!("{}: no labeled segments", manifest_path.display())));
    }
    Ok((manifest, segments))
}

/// Writes segment files under `dir/segments/` and the manifest to
/// `dir/manifest.json`; returns the manifest.
pub fn write_dataset(dir: &Path, segments: &[Segment], fs_hz: f64) -> Result<DatasetManifest> {
    let mut records = Vec::with_capacity(segments.len());
    for s in segments {
        let rel = PathBuf::from("segments").join(format!("{}.f32", s.id));
        write_segment_file(&dir.join(&rel), s)?;
        let (m, c, l) = s.data.dim();
        records.push(SegmentRecord {
            id: s.id.clone(),
            path: rel,
            label: Some(s.label),
            m,
            c,
            l,
            start_time: None,
        });
    }
    let manifest = DatasetManifest {
        version: FORMAT_VERSION,
        fs: fs_hz,
        segments: records,
        annotations: Vec::new(),
    };
    write_manifest(&dir.join("manifest.json"), &manifest)?;
    Ok(manifest)
}

/// Versioned wrapper around every intermediate result written to disk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Artifact<T> {
    pub format: String,
    pub version: u32,
    pub config_hash: String,
    pub payload: T,
}

pub fn write_artifact<T: Serialize>(path: &Path, format: &str, config_hash: &str, payload: &T) -> Result<()> {
    write_json(
        path,
        &Artifact {
            format: format.to_string(),
            version: FORMAT_VERSION,
            config_hash: config_hash.to_string(),
            payload,
        },
    )
}

/// Reads an artifact, rejecting other formats, other versions and, when
/// `config_hash` is given, artifacts produced under a different config.
pub fn read_artifact<T: DeserializeOwned>(path: &Path, format: &str, config_hash: Option<&str>) -> Result<T> {
    #[derive(Deserialize)]
    struct Header {
        format: String,
        version: u32,
        config_hash: String,
    }
    let bytes = open(path)?;
    let h: Header = serde_json::from_slice(&bytes)?;
    if h.format != format {
        return Err(Error::Format(format!("{}: expected a {format} artifact, found {}", path.display(), h.format)));
    }
    if h.version != FORMAT_VERSION {
        return Err(Error::Format(format!(
            "{}: format version {} (expected {FORMAT_VERSION})",
            path.display(),
            h.version
        )));
    }
    if let Some(expected) = config_hash {
        if h.config_hash != expected {
            return Err(Error::Format(format!(
                "{}: config hash {} does not match the current config hash {expected}",
                path.display(),
                h.config_hash
            )));
        }
    }
    let a: Artifact<T> = serde_json::from_slice(&bytes)?;
    Ok(a.payload)
}

/// Hex SHA-256 of a value's compact JSON serialization.
pub fn json_hash<T: Serialize>(value: &T) -> Result<String> {
    let digest = Sha256::digest(serde_json::to_vec(value)?);
    Ok(digest.iter().map(|b| format!("{b:02x}")).collect())
}
