//! Period segmentation, mirror augmentation, resampling and windowing.
//!
//! A labelled sequence is cut into maximal runs of constant RT/NRT label
//! ("periods"). Periods become fixed-length model inputs either by linear
//! resampling to `T` frames or by cutting non-overlapping windows of `w`
//! frames.

use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{extract_features, WindowParams};
use crate::skeleton::{select_major_joints, Frame, Setting, SkeletonSequence, Task, MAJOR_JOINT_COUNT};
use crate::tensor::Matrix;

/// Default resampled period length, frames.
pub const DEFAULT_LENGTH: usize = 120;
/// Shortest tail (frames, before resampling) kept as a subsegment.
pub const MIN_TAIL: usize = 7;
/// Window widths evaluated by the subsegment sweep.
pub const SWEEP_WIDTHS: [usize; 7] = [7, 15, 30, 60, 90, 120, 240];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Label {
    #[serde(rename = "RT")]
    Rt,
    #[serde(rename = "NRT")]
    Nrt,
}

impl Label {
    pub fn from_positive(positive: bool) -> Self {
        if positive {
            Label::Rt
        } else {
            Label::Nrt
        }
    }

    pub fn is_positive(self) -> bool {
        self == Label::Rt
    }

    /// Class index used by the classifiers: RT = 0, NRT = 1.
    pub fn class_index(self) -> usize {
        match self {
            Label::Rt => 0,
            Label::Nrt => 1,
        }
    }

    pub fn from_class_index(i: usize) -> Self {
        if i == 0 {
            Label::Rt
        } else {
            Label::Nrt
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Label::Rt => "RT",
            Label::Nrt => "NRT",
        })
    }
}

/// Coordinate negated by a mirror reflection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AugAxis {
    #[default]
    None,
    X,
    Y,
    Z,
}

impl AugAxis {
    pub const MIRRORS: [AugAxis; 3] = [AugAxis::X, AugAxis::Y, AugAxis::Z];

    fn coordinate(self) -> Option<usize> {
        match self {
            AugAxis::None => None,
            AugAxis::X => Some(0),
            AugAxis::Y => Some(1),
            AugAxis::Z => Some(2),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum InputForm {
    #[serde(rename = "POS")]
    Pos,
    #[serde(rename = "FEATS")]
    Feats,
}

impl InputForm {
    pub fn channels(self) -> usize {
        match self {
            InputForm::Pos => 3 * MAJOR_JOINT_COUNT,
            InputForm::Feats => crate::features::FEATURE_COUNT,
        }
    }
}

impl fmt::Display for InputForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            InputForm::Pos => "POS",
            InputForm::Feats => "FEATS",
        })
    }
}

impl FromStr for InputForm {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "pos" => Ok(InputForm::Pos),
            "feats" => Ok(InputForm::Feats),
            other => Err(Error::Validation(format!("unknown input form '{other}'"))),
        }
    }
}

/// Where a period (or a window of one) came from.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Provenance {
    pub child_id: String,
    pub setting: Setting,
    pub task: Task,
    /// Index of the source sequence in the dataset.
    pub sequence: usize,
    /// Serial index of the period within its sequence.
    pub period: usize,
    pub axis: AugAxis,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Period {
    pub label: Label,
    pub frames: Vec<Frame>,
    pub provenance: Provenance,
    /// Index of the first frame within the source sequence.
    pub start: usize,
}

impl Period {
    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }
}

/// Relabels runs of a single frame with the label of the preceding run (the
/// following run when there is none).
pub fn merge_singleton_runs(labels: &[bool]) -> Vec<bool> {
    let runs = run_lengths(labels);
    let mut out = Vec::with_capacity(labels.len());
    for (k, &(label, len)) in runs.iter().enumerate() {
        let label = if len == 1 && runs.len() > 1 {
            if k > 0 {
                *out.last().unwrap()
            } else {
                runs[1].0
            }
        } else {
            label
        };
        out.extend(std::iter::repeat_n(label, len));
    }
    out
}

fn run_lengths(labels: &[bool]) -> Vec<(bool, usize)> {
    let mut runs: Vec<(bool, usize)> = Vec::new();
    for &l in labels {
        match runs.last_mut() {
            Some((prev, n)) if *prev == l => *n += 1,
            _ => runs.push((l, 1)),
        }
    }
    runs
}

/// Splits a sequence into maximal runs of constant label, after merging
/// single-frame runs. `sequence_index` is recorded in the provenance.
pub fn extract_periods(seq: &SkeletonSequence, frame_labels: &[bool], sequence_index: usize) -> Result<Vec<Period>> {
    if frame_labels.len() != seq.len() {
        return Err(Error::shape(format!("{} labels", seq.len()), frame_labels.len()));
    }
    let merged = merge_singleton_runs(frame_labels);
    let mut periods = Vec::new();
    let mut start = 0;
    for (m, (label, len)) in run_lengths(&merged).into_iter().enumerate() {
        periods.push(Period {
            label: Label::from_positive(label),
            frames: seq.frames()[start..start + len].to_vec(),
            provenance: Provenance {
                child_id: seq.meta.child_id.clone(),
                setting: seq.meta.setting,
                task: seq.meta.task,
                sequence: sequence_index,
                period: m,
                axis: AugAxis::None,
            },
            start,
        });
        start += len;
    }
    Ok(periods)
}

/// Drops the final period of a sequence when it is NRT.
pub fn balance_periods(mut periods: Vec<Period>) -> Vec<Period> {
    if periods.last().is_some_and(|p| p.label == Label::Nrt) {
        periods.pop();
    }
    periods
}

/// Negates one coordinate of every joint. Reflecting twice on the same axis
/// restores the original period; the provenance records the most recent
/// reflection.
pub fn mirror_augment(p: &Period, axis: AugAxis) -> Period {
    let Some(c) = axis.coordinate() else {
        return p.clone();
    };
    let frames = p
        .frames
        .iter()
        .map(|f| {
            f.map_positions(|mut v| {
                v.set(c, -v.get(c));
                v
            })
        })
        .collect();
    let mut provenance = p.provenance.clone();
    provenance.axis = if p.provenance.axis == axis { AugAxis::None } else { axis };
    Period {
        label: p.label,
        frames,
        provenance,
        start: p.start,
    }
}

/// Each period followed by its x, y and z reflections.
pub fn augment_all(periods: &[Period]) -> Vec<Period> {
    let mut out = Vec::with_capacity(periods.len() * 4);
    for p in periods {
        out.push(p.clone());
        for axis in AugAxis::MIRRORS {
            out.push(mirror_augment(p, axis));
        }
    }
    out
}

/// Fractional source index of output row `i` when stretching `n` rows to `t`.
fn source_position(i: usize, n: usize, t: usize) -> (usize, f64) {
    let s = (i * (n - 1)) as f64 / (t - 1) as f64;
    let j = s.floor() as usize;
    (j, s - j as f64)
}

/// Per-channel linear interpolation to exactly `t` rows on normalized time.
/// Endpoints are preserved exactly.
pub fn resample_matrix(m: &Matrix, t: usize) -> Result<Matrix> {
    let n = m.rows();
    if n < 2 || t < 2 {
        return Err(Error::Validation(format!("cannot resample {n} rows to {t}")));
    }
    if n == t {
        return Ok(m.clone());
    }
    let mut out = Matrix::zeros(t, m.cols());
    for i in 0..t {
        let (j, frac) = source_position(i, n, t);
        if j >= n - 1 {
            out.row_mut(i).copy_from_slice(m.row(n - 1));
            continue;
        }
        let (a, b) = (m.row(j), m.row(j + 1));
        for (c, o) in out.row_mut(i).iter_mut().enumerate() {
            *o = a[c] + frac * (b[c] - a[c]);
        }
    }
    Ok(out)
}

/// Resamples joint positions and timestamps of a frame run to `t` frames.
pub fn resample_frames(frames: &[Frame], t: usize) -> Result<Vec<Frame>> {
    let n = frames.len();
    if n < 2 || t < 2 {
        return Err(Error::Validation(format!("cannot resample {n} frames to {t}")));
    }
    if n == t {
        return Ok(frames.to_vec());
    }
    Ok((0..t)
        .map(|i| {
            let (j, frac) = source_position(i, n, t);
            if j >= n - 1 {
                return frames[n - 1].clone();
            }
            let (a, b) = (&frames[j], &frames[j + 1]);
            let positions = std::array::from_fn(|k| a.positions[k] + (b.positions[k] - a.positions[k]) * frac);
            Frame::new(a.timestamp + frac * (b.timestamp - a.timestamp), positions)
        })
        .collect())
}

pub fn resample_period(p: &Period, t: usize) -> Result<Period> {
    Ok(Period {
        frames: resample_frames(&p.frames, t)?,
        ..p.clone()
    })
}

/// A labelled, model-ready input: `rows` time steps by channels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub label: Label,
    pub provenance: Provenance,
    /// Window index within the parent period, for subsegments.
    pub window: Option<usize>,
    /// Length in frames before any resampling.
    pub original_length: usize,
    pub data: Matrix,
}

/// Per-frame channels of a period: 51 major-joint coordinates or the 29
/// features (computed on the period's own frames).
pub fn period_channels(p: &Period, form: InputForm) -> Result<Matrix> {
    match form {
        InputForm::Pos => {
            let rows: Vec<[f64; 3 * MAJOR_JOINT_COUNT]> = p.frames.iter().map(select_major_joints).collect();
            Matrix::from_rows(&rows)
        }
        InputForm::Feats => extract_features(&p.frames, WindowParams::default()).map_err(|e| match e {
            Error::DegenerateGeometry { frame, what } => Error::DegenerateGeometry {
                frame: p.start + frame,
                what: format!(
                    "{what}; child {} sequence {}",
                    p.provenance.child_id, p.provenance.sequence
                ),
            },
            other => other,
        }),
    }
}

/// Model inputs for whole periods, each resampled to `t` frames. FEATS are
/// computed before resampling so windowed features keep true frame timing.
pub fn make_inputs(periods: &[Period], form: InputForm, t: usize) -> Result<Vec<Sample>> {
    periods
        .iter()
        .map(|p| {
            let channels = period_channels(p, form)?;
            Ok(Sample {
                label: p.label,
                provenance: p.provenance.clone(),
                window: None,
                original_length: p.len(),
                data: resample_matrix(&channels, t)?,
            })
        })
        .collect()
}

/// A non-overlapping window of a period's channels, resampled to width `w`
/// when it is the tail.
#[derive(Debug, Clone, PartialEq)]
pub struct Subsegment {
    pub window_index: usize,
    /// Frame span `[start, end)` within the parent before resampling.
    pub start: usize,
    pub end: usize,
    pub data: Matrix,
}

/// Cuts `⌊len / w⌋` full windows; a remaining tail of at least `v` frames is
/// resampled to `w`, shorter tails are discarded.
pub fn window_subsegments(channels: &Matrix, w: usize, v: usize) -> Result<Vec<Subsegment>> {
    if w < 2 || v < 2 || v > w {
        return Err(Error::Validation(format!("invalid window w={w}, v={v}")));
    }
    let len = channels.rows();
    let mut out = Vec::new();
    let full = len / w;
    for k in 0..full {
        out.push(Subsegment {
            window_index: k,
            start: k * w,
            end: (k + 1) * w,
            data: channels.slice_rows(k * w, (k + 1) * w),
        });
    }
    let tail = len - full * w;
    if tail >= v {
        let piece = channels.slice_rows(full * w, len);
        out.push(Subsegment {
            window_index: full,
            start: full * w,
            end: len,
            data: resample_matrix(&piece, w)?,
        });
    }
    Ok(out)
}

/// Subsegments of one period.
#[derive(Debug, Clone)]
pub struct PeriodWindows {
    pub label: Label,
    pub provenance: Provenance,
    pub original_length: usize,
    pub windows: Vec<Subsegment>,
}

/// Mean RT subsegment count per RT period, rounded half away from zero.
pub fn subsegment_quota(periods: &[PeriodWindows]) -> usize {
    let rt: Vec<usize> = periods
        .iter()
        .filter(|p| p.label == Label::Rt)
        .map(|p| p.windows.len())
        .collect();
    if rt.is_empty() {
        return 0;
    }
    (rt.iter().sum::<usize>() as f64 / rt.len() as f64).round() as usize
}

/// Stable seed for the random selection of one sequence at one width.
pub fn selection_seed(seed: u64, sequence: usize, w: usize) -> u64 {
    let mut z = seed ^ (sequence as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ (w as u64).rotate_left(32);
    // splitmix64 finalizer
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Keeps every RT subsegment and, from each NRT period, `min(q, available)`
/// subsegments drawn uniformly without replacement (kept in window order).
/// `periods` should hold the periods of one sequence.
pub fn balance_subsegments(periods: Vec<PeriodWindows>, seed: u64) -> Vec<PeriodWindows> {
    let q = subsegment_quota(&periods);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    periods
        .into_iter()
        .map(|mut p| {
            if p.label == Label::Nrt && p.windows.len() > q {
                let mut keep = rand::seq::index::sample(&mut rng, p.windows.len(), q).into_vec();
                keep.sort_unstable();
                let mut windows = std::mem::take(&mut p.windows);
                p.windows = keep
                    .into_iter()
                    .map(|i| std::mem::replace(&mut windows[i], placeholder()))
                    .collect();
            }
            p
        })
        .collect()
}

fn placeholder() -> Subsegment {
    Subsegment {
        window_index: 0,
        start: 0,
        end: 0,
        data: Matrix::zeros(0, 0),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Vec3;
    use crate::skeleton::{SequenceMeta, JOINT_COUNT};
    use proptest::prelude::*;

    fn sequence(n: usize) -> SkeletonSequence {
        let frames = (0..n)
            .map(|i| {
                let positions =
                    std::array::from_fn(|j| Vec3::new(i as f64 * 0.01, j as f64 * 0.1, 1.0 + j as f64 * 0.01));
                Frame::new(i as f64 / 30.0, positions)
            })
            .collect();
        SkeletonSequence::new(SequenceMeta::default(), frames).unwrap()
    }

    fn labels(spec: &[(bool, usize)]) -> Vec<bool> {
        spec.iter().flat_map(|&(l, n)| std::iter::repeat_n(l, n)).collect()
    }

    #[test]
    fn periods_follow_runs() {
        let l = labels(&[(false, 10), (true, 40), (false, 50), (true, 30), (false, 70)]);
        let seq = sequence(l.len());
        let periods = extract_periods(&seq, &l, 0).unwrap();
        let got: Vec<(Label, usize)> = periods.iter().map(|p| (p.label, p.len())).collect();
        assert_eq!(
            got,
            vec![
                (Label::Nrt, 10),
                (Label::Rt, 40),
                (Label::Nrt, 50),
                (Label::Rt, 30),
                (Label::Nrt, 70)
            ]
        );
        let balanced = balance_periods(periods);
        assert_eq!(balanced.iter().filter(|p| p.label == Label::Rt).count(), 2);
        assert_eq!(balanced.iter().filter(|p| p.label == Label::Nrt).count(), 2);
    }

    #[test]
    fn uniform_sequences_give_one_period() {
        let seq = sequence(20);
        let neg = extract_periods(&seq, &[false; 20], 0).unwrap();
        assert_eq!(neg.len(), 1);
        assert_eq!(neg[0].label, Label::Nrt);
        assert!(balance_periods(neg).is_empty());
        let pos = extract_periods(&seq, &[true; 20], 0).unwrap();
        assert_eq!(pos.len(), 1);
        assert_eq!(balance_periods(pos).len(), 1);
    }

    #[test]
    fn singleton_runs_merge_backwards() {
        let l = labels(&[(true, 1), (false, 4), (true, 1), (false, 3), (true, 5)]);
        let merged = merge_singleton_runs(&l);
        assert_eq!(merged, labels(&[(false, 9), (true, 5)]));
        assert_eq!(merge_singleton_runs(&[true, false]), vec![false, false]);
    }

    #[test]
    fn mirror_negates_one_coordinate_and_is_involutive() {
        let seq = sequence(5);
        let p = &extract_periods(&seq, &[true; 5], 0).unwrap()[0];
        let mut q = p.clone();
        q.frames[0].positions[0] = Vec3::new(0.5, 1.2, 2.0);
        let x = mirror_augment(&q, AugAxis::X);
        assert_eq!(x.frames[0].positions[0], Vec3::new(-0.5, 1.2, 2.0));
        assert_eq!(x.provenance.axis, AugAxis::X);
        assert_eq!(x.label, q.label);
        let back = mirror_augment(&x, AugAxis::X);
        assert_eq!(back, q);
    }

    #[test]
    fn augmentation_quadruples() {
        let l = labels(&[(false, 10), (true, 40), (false, 50)]);
        let periods = extract_periods(&sequence(l.len()), &l, 0).unwrap();
        let aug = augment_all(&periods);
        assert_eq!(aug.len(), 4 * periods.len());
        for chunk in aug.chunks(4) {
            assert!(chunk.iter().all(|p| p.label == chunk[0].label));
        }
    }

    #[test]
    fn resample_identity_constant_and_ramp() {
        let m = Matrix::from_rows(&(0..120).map(|i| [i as f64 * 0.3, 1.0]).collect::<Vec<_>>()).unwrap();
        assert_eq!(resample_matrix(&m, 120).unwrap(), m);

        let c = Matrix::from_rows(&[[2.5]; 37]).unwrap();
        assert!(resample_matrix(&c, 120).unwrap().as_slice().iter().all(|&v| v == 2.5));

        // closed form: output i sits at 59 * i / 119 on the input ramp
        let ramp = Matrix::from_rows(&(0..60).map(|i| [i as f64]).collect::<Vec<_>>()).unwrap();
        let r = resample_matrix(&ramp, 120).unwrap();
        assert_eq!(r.rows(), 120);
        assert_eq!(r.get(0, 0), 0.0);
        assert_eq!(r.get(119, 0), 59.0);
        for i in 0..120 {
            assert!((r.get(i, 0) - 59.0 * i as f64 / 119.0).abs() < 1e-12);
        }
        assert!(resample_matrix(&Matrix::zeros(1, 3), 120).is_err());
    }

    #[test]
    fn resample_frames_keeps_endpoints() {
        let seq = sequence(45);
        let r = resample_frames(seq.frames(), 120).unwrap();
        assert_eq!(r.len(), 120);
        assert_eq!(r[0], seq.frames()[0]);
        assert_eq!(r[119], seq.frames()[44]);
    }

    #[test]
    fn window_counts() {
        let m = |n: usize| Matrix::from_rows(&(0..n).map(|i| [i as f64]).collect::<Vec<_>>()).unwrap();
        let s = window_subsegments(&m(250), 120, MIN_TAIL).unwrap();
        assert_eq!(s.len(), 3);
        assert_eq!((s[2].start, s[2].end), (240, 250));
        assert!(s.iter().all(|x| x.data.rows() == 120));
        assert_eq!(s[2].data.get(0, 0), 240.0);
        assert_eq!(s[2].data.get(119, 0), 249.0);
        assert_eq!(window_subsegments(&m(125), 120, MIN_TAIL).unwrap().len(), 1);
        assert!(window_subsegments(&m(6), 7, MIN_TAIL).unwrap().is_empty());
        assert_eq!(window_subsegments(&m(7), 7, MIN_TAIL).unwrap().len(), 1);
        assert!(window_subsegments(&m(50), 7, 8).is_err());
    }

    fn fake_windows(label: Label, count: usize, period: usize) -> PeriodWindows {
        PeriodWindows {
            label,
            provenance: Provenance {
                child_id: "c".into(),
                setting: Setting::A,
                task: Task::FormingAngles,
                sequence: 0,
                period,
                axis: AugAxis::None,
            },
            original_length: count * 10,
            windows: (0..count)
                .map(|k| Subsegment {
                    window_index: k,
                    start: k * 10,
                    end: (k + 1) * 10,
                    data: Matrix::zeros(10, 1),
                })
                .collect(),
        }
    }

    #[test]
    fn quota_is_mean_rt_count() {
        let periods = vec![
            fake_windows(Label::Nrt, 9, 0),
            fake_windows(Label::Rt, 3, 1),
            fake_windows(Label::Nrt, 2, 2),
            fake_windows(Label::Rt, 5, 3),
        ];
        assert_eq!(subsegment_quota(&periods), 4);
        let balanced = balance_subsegments(periods, 1);
        let counts: Vec<usize> = balanced.iter().map(|p| p.windows.len()).collect();
        assert_eq!(counts, vec![4, 3, 2, 5]);
        assert!(balanced[0]
            .windows
            .windows(2)
            .all(|w| w[0].window_index < w[1].window_index));
        // half rounds away from zero: (1 + 2) / 2 = 1.5 -> 2
        assert_eq!(
            subsegment_quota(&[fake_windows(Label::Rt, 1, 0), fake_windows(Label::Rt, 2, 1)]),
            2
        );
    }

    #[test]
    fn balancing_is_seeded() {
        let make = || vec![fake_windows(Label::Rt, 2, 0), fake_windows(Label::Nrt, 20, 1)];
        let pick = |seed| -> Vec<usize> {
            balance_subsegments(make(), seed)[1]
                .windows
                .iter()
                .map(|w| w.window_index)
                .collect()
        };
        assert_eq!(pick(5), pick(5));
        assert_eq!(pick(5).len(), 2);
        let no_rt = balance_subsegments(vec![fake_windows(Label::Nrt, 0, 0)], 3);
        assert!(no_rt[0].windows.is_empty());
    }

    #[test]
    fn pos_inputs_have_51_channels() {
        let periods = extract_periods(&sequence(80), &[true; 80], 0).unwrap();
        let inputs = make_inputs(&periods, InputForm::Pos, 120).unwrap();
        assert_eq!((inputs[0].data.rows(), inputs[0].data.cols()), (120, 51));
        assert_eq!(inputs[0].original_length, 80);
        assert_eq!(JOINT_COUNT, 25);
    }

    proptest! {
        #[test]
        fn periods_tile_merged_labels(bits in proptest::collection::vec(any::<bool>(), 2..200)) {
            let seq = sequence(bits.len());
            let periods = extract_periods(&seq, &bits, 3).unwrap();
            let rebuilt: Vec<bool> = periods.iter().flat_map(|p| std::iter::repeat_n(p.label.is_positive(), p.len())).collect();
            prop_assert_eq!(rebuilt, merge_singleton_runs(&bits));
            for w in periods.windows(2) {
                prop_assert_ne!(w[0].label, w[1].label);
                prop_assert_eq!(w[0].start + w[0].len(), w[1].start);
            }
            prop_assert!(periods.iter().all(|p| p.len() >= 2));
        }

        #[test]
        fn resampling_preserves_monotone_channels(
            steps in proptest::collection::vec(0.0f64..5.0, 1..150),
            t in 2usize..300,
        ) {
            let mut acc = 0.0;
            let rows: Vec<[f64; 1]> = std::iter::once([0.0]).chain(steps.iter().map(|s| { acc += s; [acc] })).collect();
            let m = Matrix::from_rows(&rows).unwrap();
            let r = resample_matrix(&m, t).unwrap();
            prop_assert_eq!(r.rows(), t);
            prop_assert_eq!(r.get(0, 0), m.get(0, 0));
            prop_assert_eq!(r.get(t - 1, 0), m.get(m.rows() - 1, 0));
            for i in 1..t {
                prop_assert!(r.get(i, 0) >= r.get(i - 1, 0));
            }
        }

        #[test]
        fn windows_tile_a_prefix(len in 2usize..600, wi in 0usize..7) {
            let w = SWEEP_WIDTHS[wi];
            let m = Matrix::zeros(len, 1);
            let subs = window_subsegments(&m, w, MIN_TAIL).unwrap();
            let mut cursor = 0;
            for (k, s) in subs.iter().enumerate() {
                prop_assert_eq!(s.window_index, k);
                prop_assert_eq!(s.start, cursor);
                prop_assert_eq!(s.data.rows(), w);
                cursor = s.end;
            }
            prop_assert!(cursor <= len);
            prop_assert!(len - cursor < MIN_TAIL);
        }
    }
}
