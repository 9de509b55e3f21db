use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("failed to parse {path}: {message}")]
    Parse { path: PathBuf, message: String },

    #[error("image not found: {0}")]
    MissingImage(PathBuf),

    #[error("mask of instance {0} is empty")]
    MaskEmpty(String),

    #[error("instance {id}: bbox {bbox:?} disagrees with mask extent {extent:?} by more than 1 px")]
    BBoxMismatch {
        id: String,
        bbox: [i64; 4],
        extent: [i64; 4],
    },

    #[error("object pool is empty")]
    EmptyPool,

    #[error("no background images available")]
    EmptyBackgrounds,

    #[error("background {0} has no annotated objects")]
    NoObjectsInBackground(String),

    #[error("resized object {w}x{h} does not fit background {bg_w}x{bg_h}")]
    ObjectLargerThanBackground { w: u32, h: u32, bg_w: u32, bg_h: u32 },

    #[error("no placement satisfied the top interval after {0} attempts")]
    Step1Exhausted(u32),

    #[error("no placement found for interval(s) {0:?}")]
    IntervalUnsatisfiable(Vec<usize>),

    #[error("insertion rect {0:?} is out of bounds")]
    OutOfBounds([i64; 4]),

    #[error("magnitude {magnitude} out of range for {kind}: expected {range}")]
    BadMagnitude {
        kind: &'static str,
        magnitude: f64,
        range: &'static str,
    },

    #[error("{} issue(s) have no human label: {}", .0.len(), .0.join(", "))]
    UnlabeledIssues(Vec<String>),

    #[error("label(s) reference unknown issue id(s): {}", .0.join(", "))]
    UnknownIssueId(Vec<String>),

    #[error(transparent)]
    Caption(#[from] crate::provider::CaptionError),

    #[error("image codec error: {0}")]
    Image(#[from] image::ImageError),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("io error at {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
