//! The local corpus cache: four validated, decompressed IDX files in one directory.

use std::fs;
use std::path::{Path, PathBuf};

use affx_core::dataset::{Digit, ImageInstance};
use anyhow::{bail, Context, Result};

use crate::idx;

pub const DATA_DIR_ENV: &str = "AFFX_DATA_DIR";

pub const TRAIN_IMAGES: &str = "train-images-idx3-ubyte";
pub const TRAIN_LABELS: &str = "train-labels-idx1-ubyte";
pub const TEST_IMAGES: &str = "t10k-images-idx3-ubyte";
pub const TEST_LABELS: &str = "t10k-labels-idx1-ubyte";
pub const FILES: [&str; 4] = [TRAIN_IMAGES, TRAIN_LABELS, TEST_IMAGES, TEST_LABELS];

/// Explicit path, else `$AFFX_DATA_DIR`, else `./data`.
pub fn resolve_data_dir(explicit: Option<&Path>) -> PathBuf {
    explicit
        .map(Path::to_path_buf)
        .or_else(|| std::env::var_os(DATA_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("data"))
}

pub fn missing_files(dir: &Path) -> Vec<&'static str> {
    FILES
        .into_iter()
        .filter(|f| !dir.join(f).is_file())
        .collect()
}

/// Which canonical file a source holds: kind from the magic number, split from the name.
fn classify(path: &Path, bytes: &[u8]) -> Result<&'static str> {
    let name = path
        .file_name()
        .map(|n| n.to_string_lossy().to_lowercase())
        .unwrap_or_default();
    let test = name.contains("t10k") || name.contains("test");
    let train = name.contains("train");
    if test == train {
        bail!(
            "{}: cannot tell whether this is the train or test split from its name",
            path.display()
        );
    }
    let magic = bytes
        .get(..4)
        .map(|b| u32::from_be_bytes([b[0], b[1], b[2], b[3]]));
    Ok(match (magic, test) {
        (Some(idx::IMAGES_MAGIC), false) => TRAIN_IMAGES,
        (Some(idx::IMAGES_MAGIC), true) => TEST_IMAGES,
        (Some(idx::LABELS_MAGIC), false) => TRAIN_LABELS,
        (Some(idx::LABELS_MAGIC), true) => TEST_LABELS,
        (got, _) => bail!(
            "{}: bad magic {:#010x} (expected {} for images or {} for labels)",
            path.display(),
            got.unwrap_or(0),
            idx::IMAGES_MAGIC,
            idx::LABELS_MAGIC
        ),
    })
}

#[derive(Debug, Default, Clone, PartialEq)]
pub struct FetchReport {
    pub written: Vec<&'static str>,
    pub unchanged: Vec<&'static str>,
}

/// Candidate sources inside a directory: canonical names, raw or `.gz`.
pub fn sources_in(dir: &Path) -> Vec<PathBuf> {
    FILES
        .iter()
        .flat_map(|f| [dir.join(f), dir.join(format!("{f}.gz"))])
        .filter(|p| p.is_file())
        .collect()
}

/// Validates every source and copies it, decompressed, into `dir`. Files already present
/// with identical bytes are left alone. Fails unless all four files end up cached.
pub fn fetch(sources: &[PathBuf], dir: &Path) -> Result<FetchReport> {
    let mut staged: Vec<(&'static str, Vec<u8>)> = Vec::new();
    for src in sources {
        let bytes = idx::read_maybe_gz(src)?;
        let target = classify(src, &bytes)?;
        if target.contains("images") {
            idx::parse_images(&bytes).with_context(|| src.display().to_string())?;
        } else {
            idx::parse_labels(&bytes).with_context(|| src.display().to_string())?;
        }
        if staged.iter().any(|(t, _)| *t == target) {
            bail!("two sources map to {target}");
        }
        staged.push((target, bytes));
    }
    for (images, labels) in [(TRAIN_IMAGES, TRAIN_LABELS), (TEST_IMAGES, TEST_LABELS)] {
        let find = |name| {
            staged
                .iter()
                .find(|(t, _)| *t == name)
                .map(|(_, b)| b.as_slice())
        };
        if let (Some(i), Some(l)) = (find(images), find(labels)) {
            idx::load_idx(i, l, 0).with_context(|| format!("{images} with {labels}"))?;
        }
    }
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let mut report = FetchReport::default();
    for (target, bytes) in staged {
        let dest = dir.join(target);
        if fs::read(&dest).is_ok_and(|old| old == bytes) {
            report.unchanged.push(target);
            continue;
        }
        let tmp = dir.join(format!(".{target}.partial"));
        fs::write(&tmp, &bytes).with_context(|| format!("writing {}", tmp.display()))?;
        fs::rename(&tmp, &dest).with_context(|| format!("moving into {}", dest.display()))?;
        report.written.push(target);
    }
    let missing = missing_files(dir);
    if !missing.is_empty() {
        bail!(
            "data cache {} is missing {}",
            dir.display(),
            missing.join(", ")
        );
    }
    Ok(report)
}

/// Training images keep ids `0..n`; test images continue from `n`.
pub struct Corpus {
    pub train: Vec<ImageInstance>,
    pub test: Vec<ImageInstance>,
}

fn require(dir: &Path) -> Result<()> {
    let missing = missing_files(dir);
    if !missing.is_empty() {
        bail!(
            "data cache {} is missing {}; run `affx fetch-data` first",
            dir.display(),
            missing.join(", ")
        );
    }
    Ok(())
}

impl Corpus {
    pub fn load(dir: &Path) -> Result<Self> {
        require(dir)?;
        let read = |f: &str| {
            fs::read(dir.join(f)).with_context(|| format!("reading {}", dir.join(f).display()))
        };
        let train = idx::load_idx(&read(TRAIN_IMAGES)?, &read(TRAIN_LABELS)?, 0)?;
        let test = idx::load_idx(&read(TEST_IMAGES)?, &read(TEST_LABELS)?, train.len())?;
        Ok(Self { train, test })
    }

    pub fn by_id(&self, id: usize) -> &ImageInstance {
        if id < self.train.len() {
            &self.train[id]
        } else {
            &self.test[id - self.train.len()]
        }
    }
}

/// Training labels only; enough to rebuild the experiment pool without pixels.
pub fn load_train_labels(dir: &Path) -> Result<Vec<Digit>> {
    require(dir)?;
    let path = dir.join(TRAIN_LABELS);
    let bytes = fs::read(&path).with_context(|| format!("reading {}", path.display()))?;
    Ok(idx::parse_labels(&bytes)?)
}

/// Number of test images, from the header alone.
pub fn test_count(dir: &Path) -> Result<usize> {
    let path = dir.join(TEST_LABELS);
    let bytes = fs::read(&path).with_context(|| format!("reading {}", path.display()))?;
    Ok(idx::parse_labels(&bytes)?.len())
}
