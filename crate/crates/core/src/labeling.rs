//! Labels segments from seizure annotations: preictal when the segment lies
//! inside `[EEC − 65 min, EEC − 5 min]` of some seizure, interictal when it
//! is at least four hours from every ictal interval `[EEC, end]`, and
//! unlabeled otherwise.

use crate::error::{Error, Result};
use crate::io::{Annotation, DatasetManifest};
use crate::signal::Class;

pub const PREICTAL_START_S: f64 = 65.0 * 60.0;
pub const PREICTAL_END_S: f64 = 5.0 * 60.0;
pub const INTERICTAL_GAP_S: f64 = 4.0 * 3600.0;

fn check_annotations(annotations: &[Annotation]) -> Result<Vec<&Annotation>> {
    if annotations.is_empty() {
        return Err(Error::Annotation("no seizure annotations".into()));
    }
    for a in annotations {
        if !(a.eec_time.is_finite() && a.end_time.is_finite() && a.end_time >= a.eec_time) {
            return Err(Error::Annotation(format!(
                "seizure {} ends before its earliest EEG change",
                a.seizure_id
            )));
        }
    }
    let mut sorted: Vec<&Annotation> = annotations.iter().collect();
    sorted.sort_by(|a, b| a.eec_time.total_cmp(&b.eec_time));
    for w in sorted.windows(2) {
        if w[1].eec_time <= w[0].end_time {
            return Err(Error::Annotation(format!(
                "seizures {} and {} overlap",
                w[0].seizure_id, w[1].seizure_id
            )));
        }
    }
    Ok(sorted)
}

/// Gap between `[a0, a1]` and `[b0, b1]`; zero when they intersect.
fn gap(a0: f64, a1: f64, b0: f64, b1: f64) -> f64 {
    (b0 - a1).max(a0 - b1).max(0.0)
}

/// Label for a segment covering `[start, end]` seconds.
pub fn label_interval(start: f64, end: f64, annotations: &[Annotation]) -> Result<Option<Class>> {
    let sorted = check_annotations(annotations)?;
    Ok(rule(start, end, &sorted))
}

fn rule(start: f64, end: f64, seizures: &[&Annotation]) -> Option<Class> {
    if seizures
        .iter()
        .any(|a| start >= a.eec_time - PREICTAL_START_S && end <= a.eec_time - PREICTAL_END_S)
    {
        return Some(Class::Preictal);
    }
    if seizures
        .iter()
        .all(|a| gap(start, end, a.eec_time, a.end_time) >= INTERICTAL_GAP_S)
    {
        return Some(Class::Interictal);
    }
    None
}

/// Returns the manifest with every segment's label recomputed.
pub fn label_segments(manifest: &DatasetManifest) -> Result<DatasetManifest> {
    let seizures = check_annotations(&manifest.annotations)?;
    let mut out = manifest.clone();
    for rec in &mut out.segments {
        let start = rec.start_time.ok_or_else(|| {
            Error::Annotation(format!("segment {} has no start_time", rec.id))
        })?;
        let end = start + (rec.m * rec.l) as f64 / manifest.fs;
        rec.label = rule(start, end, &seizures);
    }
    Ok(out)
}
