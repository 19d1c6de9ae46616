use std::fs::File;
use std::io::BufReader;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use semfeat_core::{Corpus, Error};

use crate::error::{AppError, Result};
use crate::store::Store;

/// Engine parameters used when a request leaves them out.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Defaults {
    /// L2 strength for both the document classifier and context models.
    pub lambda: f64,
    pub laplace_alpha: f64,
    pub negative_ratio: f64,
    pub epsilon: f64,
    /// Smooth matches per document; `None` means the dictionary's mean
    /// literal match count.
    pub calibration_target: Option<f64>,
}

impl Default for Defaults {
    fn default() -> Self {
        Defaults {
            lambda: 1.0,
            laplace_alpha: 1.0,
            negative_ratio: 10.0,
            epsilon: semfeat_core::teach::DEFAULT_EPSILON,
            calibration_target: None,
        }
    }
}

impl Defaults {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(AppError::BadRequest(what.to_string()));
        if !(self.lambda.is_finite() && self.lambda >= 0.0) {
            return bad("lambda must be finite and nonnegative");
        }
        if !(self.laplace_alpha.is_finite() && self.laplace_alpha > 0.0) {
            return bad("laplace alpha must be positive");
        }
        if !(self.negative_ratio.is_finite() && self.negative_ratio > 0.0) {
            return bad("negative ratio must be positive");
        }
        if !(self.epsilon > 0.0 && self.epsilon <= 1.0) {
            return bad("epsilon must lie in (0, 1]");
        }
        if let Some(t) = self.calibration_target {
            if !(t.is_finite() && t >= 0.0) {
                return bad("calibration target must be finite and nonnegative");
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct ServiceConfig {
    pub listen: SocketAddr,
    pub data_dir: PathBuf,
    /// Corpus JSONL; defaults to the one ingested into `data_dir`.
    pub corpus: Option<PathBuf>,
    pub defaults: Defaults,
    pub max_body_bytes: usize,
    /// Snapshot after this many events (training events always snapshot).
    pub snapshot_every: u64,
    /// Directory of static UI assets served under `/`.
    pub static_dir: Option<PathBuf>,
}

impl ServiceConfig {
    pub fn new(data_dir: impl Into<PathBuf>) -> Self {
        ServiceConfig {
            listen: SocketAddr::from(([127, 0, 0, 1], 8080)),
            data_dir: data_dir.into(),
            corpus: None,
            defaults: Defaults::default(),
            max_body_bytes: 1 << 20,
            snapshot_every: 64,
            static_dir: None,
        }
    }
}

/// A data directory together with its corpus.
#[derive(Debug)]
pub struct Workspace {
    pub corpus: Corpus,
    pub store: Store,
    pub defaults: Defaults,
}

impl Workspace {
    pub fn open(
        data_dir: &Path,
        corpus: Option<&Path>,
        defaults: Defaults,
        snapshot_every: u64,
    ) -> Result<Self> {
        defaults.validate()?;
        let store = Store::open(data_dir, snapshot_every)?;
        let path = corpus.map_or_else(|| store.corpus_path(), Path::to_path_buf);
        if !path.is_file() {
            return Err(Error::Precondition(format!(
                "no corpus at {}; run `semfeat ingest` first",
                path.display()
            ))
            .into());
        }
        let corpus = read_corpus(&path)?;
        Ok(Workspace {
            corpus,
            store,
            defaults,
        })
    }
}

pub fn read_corpus(path: &Path) -> Result<Corpus> {
    Ok(Corpus::ingest(BufReader::new(File::open(path)?))?)
}
