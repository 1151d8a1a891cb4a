//! Daily bars, labelled sample windows and chronological splits.

mod bars;
mod samples;
mod split;
mod synth;

pub use bars::{compute_ma5, parse_bars, write_bars_csv, DailyBar, Universe, CSV_HEADER};
pub use samples::{is_limit_up, make_samples, round_to_cent, universe_samples, Sample, SampleParams, SEQ_LEN};
pub use split::{date_cutoffs, split_by_date, DatasetSplit};
pub use synth::{synth_series, synth_universe, DriftSegment, SynthParams};
