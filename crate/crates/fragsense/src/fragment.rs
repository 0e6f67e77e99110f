//! Header stripping and fixed-size fragmentation.
//!
//! Files carry type information in their leading bytes (magic numbers,
//! metadata preambles), so the first `header_skip_bytes` are cut before the
//! body is sliced into non-overlapping fragments. Trailing partial
//! fragments are discarded rather than padded: padding would inject
//! artificial 0x00 mass into the byte histograms.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::corpus::{CorpusManifest, FileType};
use crate::error::{Error, Result};
use crate::hash::sub_seed_indexed;

/// Default number of leading bytes cut from every file. The six formats'
/// magic numbers and typical metadata preambles all fit in 1 KiB.
pub const DEFAULT_HEADER_SKIP: usize = 1024;

/// Default cap on fragments contributed by a single file.
pub const DEFAULT_PER_FILE_CAP: usize = 10;

/// A fixed-size slice of one source file's body.
#[derive(Debug, Clone)]
pub struct Fragment {
    pub bytes: Vec<u8>,
    pub label: FileType,
    pub source_digest: u64,
    /// Byte offset of this fragment in the source file.
    pub offset: u64,
}

/// All fragments cut from a manifest under one parameter set.
#[derive(Debug, Clone)]
pub struct FragmentSet {
    pub fragments: Vec<Fragment>,
    pub fragment_size: usize,
    pub header_skip_bytes: usize,
    pub per_file_cap: usize,
    pub seed: u64,
}

impl FragmentSet {
    pub fn len(&self) -> usize {
        self.fragments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fragments.is_empty()
    }

    pub fn counts_per_class(&self) -> BTreeMap<FileType, usize> {
        let mut counts = BTreeMap::new();
        for f in &self.fragments {
            *counts.entry(f.label).or_insert(0) += 1;
        }
        counts
    }

    /// Optional raw dump: one `<digest>_<offset>.bin` per fragment plus an
    /// index CSV (`digest,offset,label,size`).
    pub fn dump(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        let mut index = String::from("digest,offset,label,size\n");
        for f in &self.fragments {
            let name = format!("{:016x}_{}.bin", f.source_digest, f.offset);
            fs::write(dir.join(name), &f.bytes)?;
            index.push_str(&format!(
                "{:016x},{},{},{}\n",
                f.source_digest,
                f.offset,
                f.label,
                f.bytes.len()
            ));
        }
        let mut file = fs::File::create(dir.join("index.csv"))?;
        file.write_all(index.as_bytes())?;
        Ok(())
    }
}

/// Drop the first `header_skip_bytes` bytes; short files yield an empty body.
pub fn strip_header(file_bytes: &[u8], header_skip_bytes: usize) -> &[u8] {
    file_bytes.get(header_skip_bytes..).unwrap_or(&[])
}

/// Cut `body` into `len/fragment_size` contiguous non-overlapping slices
/// starting at offset 0. The trailing remainder is discarded.
pub fn fragment(body: &[u8], fragment_size: usize) -> Vec<&[u8]> {
    assert!(fragment_size > 0, "fragment_size must be positive");
    body.chunks_exact(fragment_size).collect()
}

/// Parameters for [`build_fragment_set`].
#[derive(Debug, Clone)]
pub struct FragmentOptions {
    pub fragment_size: usize,
    pub header_skip_bytes: usize,
    pub per_file_cap: usize,
    pub seed: u64,
}

impl FragmentOptions {
    pub fn new(fragment_size: usize) -> Self {
        FragmentOptions {
            fragment_size,
            header_skip_bytes: DEFAULT_HEADER_SKIP,
            per_file_cap: DEFAULT_PER_FILE_CAP,
            seed: 0,
        }
    }
}

/// Load every manifest record, strip its header, fragment the body, and cap
/// each file's contribution with a deterministic seeded sample.
///
/// Fragments are ordered by (record index, offset), so the output is a pure
/// function of (manifest, options).
pub fn build_fragment_set(
    manifest: &CorpusManifest,
    root_dir: &Path,
    opts: &FragmentOptions,
) -> Result<FragmentSet> {
    if opts.fragment_size == 0 {
        return Err(Error::InvalidConfig("fragment_size must be positive".into()));
    }
    if manifest.is_empty() {
        return Err(Error::EmptySet);
    }

    let mut fragments = Vec::new();
    for (record_idx, record) in manifest.records.iter().enumerate() {
        let path = root_dir.join(&record.path);
        let bytes = fs::read(&path)?;
        let body = strip_header(&bytes, opts.header_skip_bytes);
        let slices = fragment(body, opts.fragment_size);

        let mut offsets: Vec<usize> = (0..slices.len()).collect();
        if slices.len() > opts.per_file_cap {
            let mut rng = ChaCha8Rng::seed_from_u64(sub_seed_indexed(
                opts.seed,
                "frag-sample",
                record_idx as u64,
            ));
            offsets.shuffle(&mut rng);
            offsets.truncate(opts.per_file_cap);
            offsets.sort_unstable();
        }

        for chunk_idx in offsets {
            fragments.push(Fragment {
                bytes: slices[chunk_idx].to_vec(),
                label: record.label,
                source_digest: record.content_digest,
                offset: (opts.header_skip_bytes + chunk_idx * opts.fragment_size) as u64,
            });
        }
    }

    if fragments.is_empty() {
        return Err(Error::EmptySet);
    }

    Ok(FragmentSet {
        fragments,
        fragment_size: opts.fragment_size,
        header_skip_bytes: opts.header_skip_bytes,
        per_file_cap: opts.per_file_cap,
        seed: opts.seed,
    })
}
