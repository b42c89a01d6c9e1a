//! Rater alignment and intraclass correlation.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::skeleton::manifest::{load_entry, DatasetManifest};
use crate::skeleton::{labels_for_timestamps, AnnotationInterval, AnnotationTrack};

/// Result of aligning two raters' tracks.
#[derive(Debug, Clone, PartialEq)]
pub struct AlignedTracks {
    pub a: AnnotationTrack,
    pub b: AnnotationTrack,
    /// Groups of overlapping intervals that were synchronised.
    pub merged_groups: usize,
}

/// Every maximal group of transitively overlapping intervals (necessarily
/// spanning both raters, as each track is disjoint) becomes
/// `[earliest onset, latest offset)` for both raters. Lone intervals are kept.
pub fn align_intervals(a: &AnnotationTrack, b: &AnnotationTrack) -> Result<AlignedTracks> {
    let mut all: Vec<(AnnotationInterval, bool)> = a
        .intervals()
        .iter()
        .map(|iv| (*iv, true))
        .chain(b.intervals().iter().map(|iv| (*iv, false)))
        .collect();
    all.sort_by(|x, y| x.0.onset.total_cmp(&y.0.onset));

    let mut out_a = Vec::new();
    let mut out_b = Vec::new();
    let mut merged_groups = 0;
    let mut i = 0;
    while i < all.len() {
        let mut span = all[i].0;
        let mut j = i + 1;
        while j < all.len() && all[j].0.onset < span.offset {
            span.offset = span.offset.max(all[j].0.offset);
            j += 1;
        }
        if j - i > 1 {
            merged_groups += 1;
            out_a.push(span);
            out_b.push(span);
        } else if all[i].1 {
            out_a.push(span);
        } else {
            out_b.push(span);
        }
        i = j;
    }
    Ok(AlignedTracks {
        a: AnnotationTrack::new(a.rater_id.clone(), out_a)?,
        b: AnnotationTrack::new(b.rater_id.clone(), out_b)?,
        merged_groups,
    })
}

/// Frame labels of both raters after alignment.
pub fn align_rater_labels(
    a: &AnnotationTrack,
    b: &AnnotationTrack,
    timestamps: &[f64],
) -> Result<(Vec<bool>, Vec<bool>)> {
    let aligned = align_intervals(a, b)?;
    Ok((
        labels_for_timestamps(timestamps, aligned.a.intervals()),
        labels_for_timestamps(timestamps, aligned.b.intervals()),
    ))
}

/// Two-way mean squares with frames as rows and the two raters as columns.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IccResult {
    /// ICC(A,k); `None` when the variance decomposition is degenerate.
    /// Defined values never exceed 1.
    pub icc: Option<f64>,
    pub n: usize,
    pub ms_rows: f64,
    pub ms_cols: f64,
    pub ms_error: f64,
}

/// Absolute-agreement, average-measures intraclass correlation for two
/// raters: `(MSR − MSE) / (MSR + (MSC − MSE) / n)`.
pub fn icc_agreement(a: &[f64], b: &[f64]) -> Result<IccResult> {
    if a.len() != b.len() {
        return Err(Error::shape(format!("{} ratings", a.len()), b.len()));
    }
    let n = a.len();
    if n < 2 {
        return Err(Error::Validation(format!("need at least 2 rated frames, got {n}")));
    }
    let k = 2.0;
    let nf = n as f64;
    let grand = (a.iter().sum::<f64>() + b.iter().sum::<f64>()) / (k * nf);
    let col_means = [a.iter().sum::<f64>() / nf, b.iter().sum::<f64>() / nf];
    let mut ss_rows = 0.0;
    let mut ss_err = 0.0;
    for (x, y) in a.iter().zip(b) {
        let row = (x + y) / k;
        ss_rows += k * (row - grand).powi(2);
        ss_err += (x - row - col_means[0] + grand).powi(2) + (y - row - col_means[1] + grand).powi(2);
    }
    let ss_cols = nf * col_means.iter().map(|m| (m - grand).powi(2)).sum::<f64>();
    let ms_rows = ss_rows / (nf - 1.0);
    let ms_cols = ss_cols / (k - 1.0);
    let ms_error = ss_err / ((nf - 1.0) * (k - 1.0));
    let den = ms_rows + (ms_cols - ms_error) / nf;
    // A non-positive denominator (both raters constant, or systematic
    // disagreement dominating) leaves the estimate undefined.
    let icc = (den > f64::EPSILON * (ms_rows + ms_cols + ms_error)).then(|| (ms_rows - ms_error) / den);
    Ok(IccResult {
        icc,
        n,
        ms_rows,
        ms_cols,
        ms_error,
    })
}

/// Summary written by the agreement command.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgreementReport {
    pub icc: Option<f64>,
    pub frames: usize,
    pub sequences: usize,
    pub merged_groups: usize,
    pub ms_rows: f64,
    pub ms_cols: f64,
    pub ms_error: f64,
}

/// ICC over the aligned first two raters of every manifest entry, with all
/// frames pooled. Entries with fewer than two tracks are rejected.
pub fn manifest_agreement(manifest: &DatasetManifest) -> Result<AgreementReport> {
    if manifest.is_empty() {
        return Err(Error::Empty("manifest has no entries".into()));
    }
    let mut a = Vec::new();
    let mut b = Vec::new();
    let mut merged_groups = 0;
    for entry in &manifest.entries {
        let loaded = load_entry(entry)?;
        let [r1, r2, ..] = loaded.tracks.as_slice() else {
            return Err(Error::Validation(format!(
                "{}: agreement needs two annotation tracks, found {}",
                entry.sequence.display(),
                loaded.tracks.len()
            )));
        };
        let aligned = align_intervals(r1, r2)?;
        merged_groups += aligned.merged_groups;
        let ts = loaded.sequence.timestamps();
        let to_f64 = |v: Vec<bool>| v.into_iter().map(|x| if x { 1.0 } else { 0.0 });
        a.extend(to_f64(labels_for_timestamps(&ts, aligned.a.intervals())));
        b.extend(to_f64(labels_for_timestamps(&ts, aligned.b.intervals())));
    }
    let icc = icc_agreement(&a, &b)?;
    Ok(AgreementReport {
        icc: icc.icc,
        frames: icc.n,
        sequences: manifest.entries.len(),
        merged_groups,
        ms_rows: icc.ms_rows,
        ms_cols: icc.ms_cols,
        ms_error: icc.ms_error,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn track(id: &str, ivs: &[(f64, f64)]) -> AnnotationTrack {
        AnnotationTrack::new(
            id,
            ivs.iter()
                .map(|&(a, b)| AnnotationInterval::new(a, b).unwrap())
                .collect(),
        )
        .unwrap()
    }

    fn spans(t: &AnnotationTrack) -> Vec<(f64, f64)> {
        t.intervals().iter().map(|iv| (iv.onset, iv.offset)).collect()
    }

    #[test]
    fn overlapping_pair_is_synchronised() {
        let r = align_intervals(&track("R1", &[(10.0, 20.0)]), &track("R2", &[(15.0, 25.0)])).unwrap();
        assert_eq!(spans(&r.a), vec![(10.0, 25.0)]);
        assert_eq!(spans(&r.b), vec![(10.0, 25.0)]);
        assert_eq!(r.merged_groups, 1);
    }

    #[test]
    fn disjoint_intervals_unchanged() {
        let a = track("R1", &[(10.0, 20.0)]);
        let b = track("R2", &[(30.0, 40.0)]);
        let r = align_intervals(&a, &b).unwrap();
        assert_eq!((r.a, r.b, r.merged_groups), (a, b, 0));
    }

    #[test]
    fn chains_merge_transitively() {
        let r = align_intervals(&track("R1", &[(0.0, 5.0), (7.0, 9.0)]), &track("R2", &[(4.0, 8.0)])).unwrap();
        assert_eq!(spans(&r.a), vec![(0.0, 9.0)]);
        assert_eq!(spans(&r.b), vec![(0.0, 9.0)]);
    }

    #[test]
    fn touching_intervals_do_not_overlap() {
        let r = align_intervals(&track("R1", &[(0.0, 5.0)]), &track("R2", &[(5.0, 8.0)])).unwrap();
        assert_eq!(r.merged_groups, 0);
    }

    #[test]
    fn identical_raters_agree_perfectly() {
        let a = [0.0, 1.0, 1.0, 0.0, 1.0];
        assert!((icc_agreement(&a, &a).unwrap().icc.unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn constant_raters_are_flagged() {
        assert_eq!(icc_agreement(&[1.0; 4], &[1.0; 4]).unwrap().icc, None);
        assert!(icc_agreement(&[1.0], &[1.0]).is_err());
        assert_eq!(icc_agreement(&[1.0, 0.0, 0.0], &[0.0, 1.0, 1.0]).unwrap().icc, None);
    }

    fn arb_track(id: &'static str) -> impl Strategy<Value = AnnotationTrack> {
        prop::collection::vec((0.1f64..3.0, 0.1f64..3.0), 0..6).prop_map(move |gaps| {
            let mut t = 0.0;
            let ivs: Vec<(f64, f64)> = gaps
                .into_iter()
                .map(|(gap, len)| {
                    let on = t + gap;
                    t = on + len;
                    (on, t)
                })
                .collect();
            track(id, &ivs)
        })
    }

    proptest! {
        #[test]
        fn alignment_is_idempotent_and_extending(a in arb_track("R1"), b in arb_track("R2")) {
            let once = align_intervals(&a, &b).unwrap();
            let twice = align_intervals(&once.a, &once.b).unwrap();
            prop_assert_eq!(&twice.a, &once.a);
            prop_assert_eq!(&twice.b, &once.b);
            let ts: Vec<f64> = (0..900).map(|i| i as f64 / 30.0).collect();
            let before_a = labels_for_timestamps(&ts, a.intervals());
            let before_b = labels_for_timestamps(&ts, b.intervals());
            let (after_a, after_b) = align_rater_labels(&a, &b, &ts).unwrap();
            prop_assert!(before_a.iter().zip(&after_a).all(|(x, y)| !x || *y));
            prop_assert!(before_b.iter().zip(&after_b).all(|(x, y)| !x || *y));
        }

        #[test]
        fn icc_is_symmetric(pairs in prop::collection::vec((0u8..2, 0u8..2), 3..60)) {
            let a: Vec<f64> = pairs.iter().map(|p| p.0 as f64).collect();
            let b: Vec<f64> = pairs.iter().map(|p| p.1 as f64).collect();
            let ab = icc_agreement(&a, &b).unwrap().icc;
            let ba = icc_agreement(&b, &a).unwrap().icc;
            match (ab, ba) {
                (Some(x), Some(y)) => {
                    prop_assert!((x - y).abs() < 1e-12);
                    prop_assert!(x <= 1.0 + 1e-12);
                }
                (x, y) => prop_assert_eq!(x, y),
            }
        }
    }
}
