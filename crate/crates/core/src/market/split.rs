use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use super::Sample;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct DatasetSplit {
    pub train: Vec<Sample>,
    pub validation: Vec<Sample>,
    pub test: Vec<Sample>,
    pub train_end: Option<NaiveDate>,
    pub val_end: Option<NaiveDate>,
    /// Samples discarded because an input or label date fell outside their split.
    pub dropped: usize,
}

/// Assigns samples to train (`end <= train_end`), validation
/// (`train_end < end <= val_end`) and test (`end > val_end`).
///
/// A sample is dropped when its label date lies beyond its split's upper
/// boundary, or when any of its input bars precede its split's lower boundary.
pub fn split_by_date(
    samples: impl IntoIterator<Item = Sample>,
    train_end: NaiveDate,
    val_end: NaiveDate,
) -> Result<DatasetSplit> {
    if train_end >= val_end {
        return Err(Error::Domain(format!(
            "train_end {train_end} must precede val_end {val_end}"
        )));
    }
    let mut split = DatasetSplit {
        train_end: Some(train_end),
        val_end: Some(val_end),
        ..Default::default()
    };
    for s in samples {
        let end = s.end_date();
        let (lower, upper, bucket) = if end <= train_end {
            (None, Some(train_end), &mut split.train)
        } else if end <= val_end {
            (Some(train_end), Some(val_end), &mut split.validation)
        } else {
            (Some(val_end), None, &mut split.test)
        };
        let leaks_forward = upper.is_some_and(|u| s.label_date > u);
        let leaks_backward = lower.is_some_and(|l| s.first_input_date() <= l);
        if leaks_forward || leaks_backward {
            split.dropped += 1;
        } else {
            bucket.push(s);
        }
    }
    for (name, part) in [
        ("train", &split.train),
        ("validation", &split.validation),
        ("test", &split.test),
    ] {
        if part.is_empty() {
            log::warn!("{name} split is empty");
        }
    }
    Ok(split)
}

impl DatasetSplit {
    pub fn len(&self) -> usize {
        self.train.len() + self.validation.len() + self.test.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Cutoff dates placing roughly `train_frac` of the sample end dates in
/// train and the next `val_frac` in validation.
pub fn date_cutoffs(samples: &[Sample], train_frac: f64, val_frac: f64) -> Result<(NaiveDate, NaiveDate)> {
    if !(train_frac > 0.0 && val_frac > 0.0 && train_frac + val_frac < 1.0) {
        return Err(Error::Domain(format!(
            "split fractions {train_frac} / {val_frac} must be positive and sum below 1"
        )));
    }
    let mut dates: Vec<NaiveDate> = samples.iter().map(Sample::end_date).collect();
    dates.sort_unstable();
    dates.dedup();
    if dates.len() < 3 {
        return Err(Error::Domain(format!("{} distinct end dates cannot be split three ways", dates.len())));
    }
    let pick = |f: f64| ((dates.len() as f64 * f) as usize).min(dates.len() - 1);
    let a = pick(train_frac);
    let b = pick(train_frac + val_frac).max(a + 1).min(dates.len() - 1);
    if a == b {
        return Err(Error::Domain("split fractions leave an empty segment".into()));
    }
    Ok((dates[a], dates[b]))
}
