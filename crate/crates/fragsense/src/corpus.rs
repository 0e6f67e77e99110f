//! Corpus discovery, labeling, and manifests.
//!
//! A corpus is a directory tree of whole files labeled by extension. The
//! manifest pins the exact file set an experiment ran on: relative path,
//! label, size, and a stable content digest per file.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::io::Read;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hash::{sub_seed_indexed, Fnv1a64};

/// Default minimum file size in bytes for corpus eligibility.
pub const DEFAULT_MIN_SIZE: u64 = 4096;

/// The six recognized file types, with stable codes 0..5 in alphabetical
/// order of the type name.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum FileType {
    Doc = 0,
    Exe = 1,
    Html = 2,
    Jpg = 3,
    Pdf = 4,
    Txt = 5,
}

impl FileType {
    pub const ALL: [FileType; 6] = [
        FileType::Doc,
        FileType::Exe,
        FileType::Html,
        FileType::Jpg,
        FileType::Pdf,
        FileType::Txt,
    ];

    pub const COUNT: usize = 6;

    pub fn code(self) -> usize {
        self as usize
    }

    pub fn from_code(code: usize) -> Option<FileType> {
        FileType::ALL.get(code).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            FileType::Doc => "DOC",
            FileType::Exe => "EXE",
            FileType::Html => "HTML",
            FileType::Jpg => "JPG",
            FileType::Pdf => "PDF",
            FileType::Txt => "TXT",
        }
    }

    pub fn from_name(name: &str) -> Option<FileType> {
        FileType::ALL.iter().copied().find(|t| t.name() == name)
    }

    /// Canonical extension used by the synthetic generator.
    pub fn extension(self) -> &'static str {
        match self {
            FileType::Doc => "doc",
            FileType::Exe => "exe",
            FileType::Html => "html",
            FileType::Jpg => "jpg",
            FileType::Pdf => "pdf",
            FileType::Txt => "txt",
        }
    }
}

impl fmt::Display for FileType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl Serialize for FileType {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.name())
    }
}

impl<'de> Deserialize<'de> for FileType {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let name = String::deserialize(d)?;
        FileType::from_name(&name)
            .ok_or_else(|| serde::de::Error::custom(format!("unknown file type `{name}`")))
    }
}

/// Map a path to its label by extension, case-insensitively.
///
/// Returns `None` for unrecognized extensions. `.htm` is an alias for
/// `.html` and `.jpeg` for `.jpg`.
pub fn label_from_extension(path: &Path) -> Option<FileType> {
    let ext = path.extension()?.to_str()?.to_ascii_lowercase();
    match ext.as_str() {
        "doc" => Some(FileType::Doc),
        "exe" => Some(FileType::Exe),
        "html" | "htm" => Some(FileType::Html),
        "jpg" | "jpeg" => Some(FileType::Jpg),
        "pdf" => Some(FileType::Pdf),
        "txt" => Some(FileType::Txt),
        _ => None,
    }
}

/// One labeled source file.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FileRecord {
    /// Path relative to the corpus root, with forward slashes.
    pub path: String,
    pub label: FileType,
    pub size_bytes: u64,
    /// FNV-1a 64 of the file bytes, hex-encoded in the wire format.
    #[serde(with = "hex_u64", rename = "digest")]
    pub content_digest: u64,
}

mod hex_u64 {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &u64, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&format!("{v:016x}"))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<u64, D::Error> {
        let s = String::deserialize(d)?;
        u64::from_str_radix(&s, 16).map_err(serde::de::Error::custom)
    }
}

/// The labeled file set an experiment runs on.
///
/// Only `min_size_bytes` and `records` are part of the wire format; the
/// remaining fields are derived or informational, so serialized manifests
/// are byte-identical for identical inputs.
#[derive(Debug, Clone)]
pub struct CorpusManifest {
    pub records: Vec<FileRecord>,
    /// Unix timestamp of manifest creation; not serialized.
    pub created_at: u64,
    pub min_size_bytes: u64,
    pub counts_per_class: BTreeMap<FileType, usize>,
    /// Classes that had fewer eligible files than the requested cap.
    pub short_classes: Vec<FileType>,
    /// Classes with zero eligible files (non-strict scans only).
    pub missing_classes: Vec<FileType>,
}

#[derive(Serialize, Deserialize)]
struct ManifestWire {
    min_size_bytes: u64,
    records: Vec<FileRecord>,
}

impl CorpusManifest {
    pub fn new(records: Vec<FileRecord>, min_size_bytes: u64) -> Self {
        let mut counts = BTreeMap::new();
        for r in &records {
            *counts.entry(r.label).or_insert(0) += 1;
        }
        let created_at = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        CorpusManifest {
            records,
            created_at,
            min_size_bytes,
            counts_per_class: counts,
            short_classes: Vec::new(),
            missing_classes: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Serialize to the fixed wire format: `{"min_size_bytes":..,"records":[..]}`.
    pub fn to_json(&self) -> String {
        let wire = ManifestWire {
            min_size_bytes: self.min_size_bytes,
            records: self.records.clone(),
        };
        let mut out = serde_json::to_string_pretty(&wire).expect("manifest serialization");
        out.push('\n');
        out
    }

    pub fn from_json(json: &str) -> Result<Self> {
        let wire: ManifestWire = serde_json::from_str(json)?;
        Ok(CorpusManifest::new(wire.records, wire.min_size_bytes))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_json())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let json = fs::read_to_string(path)?;
        Self::from_json(&json)
    }
}

/// Knobs for [`scan_corpus`].
#[derive(Debug, Clone)]
pub struct ScanOptions {
    pub per_class_cap: usize,
    pub min_size: u64,
    pub seed: u64,
    /// Fail with [`Error::MissingClass`] when a class has zero eligible files.
    pub strict: bool,
}

impl Default for ScanOptions {
    fn default() -> Self {
        ScanOptions {
            per_class_cap: 100,
            min_size: DEFAULT_MIN_SIZE,
            seed: 0,
            strict: false,
        }
    }
}

fn relative_slash_path(root: &Path, path: &Path) -> String {
    let rel = path.strip_prefix(root).unwrap_or(path);
    let parts: Vec<String> = rel
        .components()
        .map(|c| c.as_os_str().to_string_lossy().into_owned())
        .collect();
    parts.join("/")
}

fn digest_file(path: &Path) -> Result<u64> {
    let mut f = fs::File::open(path)?;
    let mut h = Fnv1a64::new();
    let mut buf = [0u8; 65536];
    loop {
        let n = f.read(&mut buf)?;
        if n == 0 {
            break;
        }
        h.update(&buf[..n]);
    }
    Ok(h.finish())
}

/// Walk `root_dir`, select up to `per_class_cap` eligible files per class,
/// and build a manifest.
///
/// Eligibility is a recognized extension plus `size >= min_size`. When a
/// class has more eligible files than the cap, the kept subset is a
/// deterministic seeded shuffle; classes with fewer are included in full
/// and flagged via `short_classes`.
pub fn scan_corpus(root_dir: &Path, opts: &ScanOptions) -> Result<CorpusManifest> {
    if opts.per_class_cap == 0 {
        return Err(Error::InvalidConfig("per_class_cap must be >= 1".into()));
    }
    if !root_dir.is_dir() {
        return Err(Error::Io(std::io::Error::new(
            std::io::ErrorKind::NotFound,
            format!("corpus directory not found: {}", root_dir.display()),
        )));
    }

    let mut eligible: BTreeMap<FileType, Vec<(String, PathBuf, u64)>> = BTreeMap::new();
    for entry in walkdir::WalkDir::new(root_dir).sort_by_file_name() {
        let entry = entry.map_err(std::io::Error::from)?;
        if !entry.file_type().is_file() {
            continue;
        }
        let Some(label) = label_from_extension(entry.path()) else {
            continue;
        };
        let size = entry.metadata().map_err(std::io::Error::from)?.len();
        if size < opts.min_size {
            continue;
        }
        let rel = relative_slash_path(root_dir, entry.path());
        eligible
            .entry(label)
            .or_default()
            .push((rel, entry.path().to_path_buf(), size));
    }

    let mut missing = Vec::new();
    let mut short = Vec::new();
    let mut records = Vec::new();
    for label in FileType::ALL {
        let mut files = eligible.remove(&label).unwrap_or_default();
        if files.is_empty() {
            missing.push(label);
            continue;
        }
        // Sort for filesystem-order independence, then seeded shuffle so the
        // kept subset is an unbiased deterministic sample.
        files.sort_by(|a, b| a.0.cmp(&b.0));
        let mut rng =
            ChaCha8Rng::seed_from_u64(sub_seed_indexed(opts.seed, "scan", label.code() as u64));
        files.shuffle(&mut rng);
        if files.len() < opts.per_class_cap {
            short.push(label);
        }
        files.truncate(opts.per_class_cap);
        files.sort_by(|a, b| a.0.cmp(&b.0));
        for (rel, abs, size) in files {
            records.push(FileRecord {
                path: rel,
                label,
                size_bytes: size,
                content_digest: digest_file(&abs)?,
            });
        }
    }

    if opts.strict && !missing.is_empty() {
        return Err(Error::MissingClass(missing));
    }

    records.sort_by(|a, b| (a.label, &a.path).cmp(&(b.label, &b.path)));
    let mut manifest = CorpusManifest::new(records, opts.min_size);
    manifest.short_classes = short;
    manifest.missing_classes = missing;
    Ok(manifest)
}

// ---------------------------------------------------------------------------
// Synthetic corpus
// ---------------------------------------------------------------------------

/// English-ish distribution over letters, space and newline. TXT, HTML and
/// the text payload of DOC/EXE all share this exact model, so those class
/// pairs are only separable through their class-specific byte bands.
fn letter_model() -> [f64; 256] {
    const FREQ: [(u8, f64); 26] = [
        (b'e', 12.7),
        (b't', 9.1),
        (b'a', 8.2),
        (b'o', 7.5),
        (b'i', 7.0),
        (b'n', 6.7),
        (b's', 6.3),
        (b'h', 6.1),
        (b'r', 6.0),
        (b'd', 4.3),
        (b'l', 4.0),
        (b'c', 2.8),
        (b'u', 2.8),
        (b'm', 2.4),
        (b'w', 2.4),
        (b'f', 2.2),
        (b'g', 2.0),
        (b'y', 2.0),
        (b'p', 1.9),
        (b'b', 1.5),
        (b'v', 1.0),
        (b'k', 0.8),
        (b'j', 0.15),
        (b'x', 0.15),
        (b'q', 0.1),
        (b'z', 0.07),
    ];
    let total: f64 = FREQ.iter().map(|(_, w)| w).sum();
    let mut model = [0.0; 256];
    for (b, w) in FREQ {
        model[b as usize] = 0.80 * w / total;
    }
    model[b' ' as usize] = 0.18;
    model[b'\n' as usize] = 0.02;
    model
}

fn point_masses(pairs: &[(u8, f64)]) -> [f64; 256] {
    let mut model = [0.0; 256];
    for &(b, p) in pairs {
        model[b as usize] += p;
    }
    model
}

fn mixed(parts: &[(f64, [f64; 256])]) -> [f64; 256] {
    let mut model = [0.0; 256];
    for (w, part) in parts {
        for i in 0..256 {
            model[i] += w * part[i];
        }
    }
    model
}

/// Per-class byte distribution used by the synthetic generator.
///
/// The classes form three groups that are trivially separable from each
/// other (text-like, zero-heavy, high-entropy); within each group the two
/// classes share an identical base distribution and differ only on a few
/// signature bytes. Classifying the synthetic corpus well therefore
/// requires finding those bytes, which is exactly what the wrapper
/// selection is for.
pub fn class_byte_model(label: FileType) -> [f64; 256] {
    let letters = letter_model();
    let uniform = [1.0 / 256.0; 256];
    let zero = point_masses(&[(0x00, 1.0)]);
    let ff = point_masses(&[(0xFF, 1.0)]);
    match label {
        FileType::Txt => mixed(&[
            (0.88, letters),
            (1.0, point_masses(&[(b'.', 0.07), (b',', 0.05)])),
        ]),
        FileType::Html => mixed(&[
            (0.88, letters),
            (1.0, point_masses(&[(b'<', 0.06), (b'>', 0.06)])),
        ]),
        FileType::Doc => mixed(&[
            (0.50, zero),
            (0.10, ff),
            (0.28, letters),
            (1.0, point_masses(&[(0x05, 0.06), (0x06, 0.06)])),
        ]),
        FileType::Exe => mixed(&[
            (0.50, zero),
            (0.10, ff),
            (0.28, letters),
            (1.0, point_masses(&[(0x8B, 0.06), (0xE8, 0.06)])),
        ]),
        FileType::Jpg => mixed(&[
            (0.90, uniform),
            (1.0, point_masses(&[(0xFF, 0.06), (0xD8, 0.04)])),
        ]),
        FileType::Pdf => mixed(&[
            (0.90, uniform),
            (1.0, point_masses(&[(b'%', 0.06), (b'/', 0.04)])),
        ]),
    }
}

fn sample_bytes(model: &[f64; 256], len: usize, rng: &mut ChaCha8Rng) -> Vec<u8> {
    let mut cdf = [0.0f64; 256];
    let mut acc = 0.0;
    for i in 0..256 {
        acc += model[i];
        cdf[i] = acc;
    }
    let total = acc;
    let mut out = Vec::with_capacity(len);
    for _ in 0..len {
        let u: f64 = rng.gen::<f64>() * total;
        let idx = cdf.partition_point(|&c| c <= u).min(255);
        out.push(idx as u8);
    }
    out
}

/// Write a deterministic synthetic corpus under `out_dir` and return its
/// manifest. Files are at least 8 KiB; the same seed yields byte-identical
/// files and therefore an identical manifest.
pub fn generate_synthetic_corpus(
    out_dir: &Path,
    files_per_class: usize,
    seed: u64,
) -> Result<CorpusManifest> {
    fs::create_dir_all(out_dir)?;
    let mut records = Vec::new();
    let mut global_index = 0u64;
    for label in FileType::ALL {
        let class_dir = out_dir.join(label.extension());
        if files_per_class > 0 {
            fs::create_dir_all(&class_dir)?;
        }
        let base = class_byte_model(label);
        for i in 0..files_per_class {
            let mut rng = ChaCha8Rng::seed_from_u64(sub_seed_indexed(
                seed,
                "synth-file",
                global_index,
            ));
            global_index += 1;

            // Mild per-file jitter keeps files of one class from being
            // statistically identical without moving the signature bytes.
            let mut model = base;
            for p in model.iter_mut() {
                if *p > 0.0 {
                    *p *= 0.85 + 0.33 * rng.gen::<f64>();
                }
            }
            let norm: f64 = model.iter().sum();
            for p in model.iter_mut() {
                *p /= norm;
            }

            let size = 8192 + (rng.gen::<u64>() % 12288) as usize;
            let bytes = sample_bytes(&model, size, &mut rng);

            let file_name = format!("{}_{:04}.{}", label.extension(), i, label.extension());
            let path = class_dir.join(&file_name);
            fs::write(&path, &bytes)?;

            let mut h = Fnv1a64::new();
            h.update(&bytes);
            records.push(FileRecord {
                path: format!("{}/{}", label.extension(), file_name),
                label,
                size_bytes: bytes.len() as u64,
                content_digest: h.finish(),
            });
        }
    }
    records.sort_by(|a, b| (a.label, &a.path).cmp(&(b.label, &b.path)));
    Ok(CorpusManifest::new(records, DEFAULT_MIN_SIZE))
}
