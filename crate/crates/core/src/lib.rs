//! Keystroke-log segmentation for translation process research.
//!
//! Sessions of timestamped keystrokes and fixations are profiled per
//! translator (median within-word and between-word IKIs give the RSP and
//! TSP thresholds), segmented into motor programs, Tasks and Task Segments,
//! overlaid with Hesitation / Orientation / Flow annotations, and summarised
//! into report tables and SVG figures.

pub mod hof;
pub mod iki;
pub mod report;
pub mod segment;
pub mod session;
pub mod stats;
pub mod synth;

use thiserror::Error;

pub use hof::{
    cut_at_state_boundaries, derive_activity_units, transition_matrix, ActivityUnit, AuParams, AuType, OutsidePolicy,
    StateOverlay, StateTrack, TransitionMatrix,
};
pub use iki::{build_profile, build_profiles, classify_keystrokes, ClassifyOptions, KeyClass, ProfileParams, TranslatorProfile};
pub use report::{emit_table, Cell, ColumnKind, Format, ReportTable};
pub use segment::{segment_session, SegmentationTree, Task, TaskLabel, TaskSegment, Thresholds};
pub use session::{
    parse_annotations, parse_session, validate_session, KeyEvent, KeyKind, Millis, SessionLog, SessionMeta, State,
    StateAnnotation,
};
pub use stats::{ks2_test, rank_correlation, TestResult};

/// Any library failure, for callers that do not need to tell them apart.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Parse(#[from] session::ParseError),
    #[error(transparent)]
    Profile(#[from] iki::ProfileError),
    #[error(transparent)]
    Segment(#[from] segment::SegmentError),
    #[error(transparent)]
    Hof(#[from] hof::HofError),
    #[error(transparent)]
    Stats(#[from] stats::StatsError),
    #[error(transparent)]
    Report(#[from] report::ReportError),
    #[error(transparent)]
    Render(#[from] report::RenderError),
}
