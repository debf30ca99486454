//! Raw-record ingestion, fusion, resampling, segmentation and Hankel
//! matrix construction.

mod fuse;
mod hankel;
mod records;
mod trajectory;

pub use fuse::{bearing, fuse, heading, FusedSample, FusedStream};
pub use hankel::{build_hankel, Dims, HankelSet};
pub use records::{HvacRecord, RawRecordSet, TripRecord, WeatherRecord};
pub(crate) use records::{read_csv, write_csv};
pub use trajectory::{
    downsample, read_summary, read_trajectories, resample, segment_filter, write_summary,
    write_trajectories, Fragment, GridSample, SegmentSummary, Trajectory, SUMMARY_FILE,
};
