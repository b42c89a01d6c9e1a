//! Skeleton sequences, rater annotations, and per-frame labels.
//!
//! Positions are in meters and timestamps in seconds. A [`SkeletonSequence`]
//! holds every frame of one child performing one task; annotation tracks mark
//! the reflective-thinking intervals chosen by one rater.

mod io;
pub mod manifest;
pub mod synth;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Vec3;

pub use io::{
    parse_annotations, parse_sequence, read_annotations, read_sequence, sequence_header, write_annotations,
    write_sequence,
};

/// Capture rate of the recordings.
pub const NOMINAL_RATE: f64 = 30.0;

pub const JOINT_COUNT: usize = 25;
pub const MAJOR_JOINT_COUNT: usize = 17;

macro_rules! joints {
    ($($variant:ident => $name:literal),+ $(,)?) => {
        /// The 25 tracked joints in canonical serialization order.
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
        pub enum JointId {
            $($variant),+
        }

        impl JointId {
            pub const ALL: [JointId; JOINT_COUNT] = [$(JointId::$variant),+];

            pub fn name(self) -> &'static str {
                match self {
                    $(JointId::$variant => $name),+
                }
            }
        }

        impl FromStr for JointId {
            type Err = Error;
            fn from_str(s: &str) -> Result<Self> {
                match s {
                    $($name => Ok(JointId::$variant),)+
                    "topspine" => Ok(JointId::SpineShoulder),
                    other => Err(Error::Validation(format!("unknown joint '{other}'"))),
                }
            }
        }
    };
}

joints! {
    SpineBase => "spine_base",
    SpineMid => "spine_mid",
    SpineShoulder => "spine_shoulder",
    Neck => "neck",
    Head => "head",
    LShoulder => "l_shoulder",
    LElbow => "l_elbow",
    LWrist => "l_wrist",
    LHand => "l_hand",
    RShoulder => "r_shoulder",
    RElbow => "r_elbow",
    RWrist => "r_wrist",
    RHand => "r_hand",
    LHip => "l_hip",
    LKnee => "l_knee",
    LAnkle => "l_ankle",
    LFoot => "l_foot",
    RHip => "r_hip",
    RKnee => "r_knee",
    RAnkle => "r_ankle",
    RFoot => "r_foot",
    LHandTip => "l_hand_tip",
    LThumb => "l_thumb",
    RHandTip => "r_hand_tip",
    RThumb => "r_thumb",
}

impl JointId {
    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for JointId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Extremity joints left out of the positional input form.
pub const EXCLUDED_EXTREMITIES: [JointId; 8] = [
    JointId::LHandTip,
    JointId::RHandTip,
    JointId::LThumb,
    JointId::RThumb,
    JointId::LFoot,
    JointId::RFoot,
    JointId::LAnkle,
    JointId::RAnkle,
];

/// The 17 major joints, in canonical order.
pub const MAJOR_JOINTS: [JointId; MAJOR_JOINT_COUNT] = [
    JointId::SpineBase,
    JointId::SpineMid,
    JointId::SpineShoulder,
    JointId::Neck,
    JointId::Head,
    JointId::LShoulder,
    JointId::LElbow,
    JointId::LWrist,
    JointId::LHand,
    JointId::RShoulder,
    JointId::RElbow,
    JointId::RWrist,
    JointId::RHand,
    JointId::LHip,
    JointId::LKnee,
    JointId::RHip,
    JointId::RKnee,
];

#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    pub timestamp: f64,
    pub positions: [Vec3; JOINT_COUNT],
}

impl Frame {
    pub fn new(timestamp: f64, positions: [Vec3; JOINT_COUNT]) -> Self {
        Frame { timestamp, positions }
    }

    pub fn zeros(timestamp: f64) -> Self {
        Frame::new(timestamp, [Vec3::ZERO; JOINT_COUNT])
    }

    pub fn joint(&self, joint: JointId) -> Vec3 {
        self.positions[joint.index()]
    }

    pub fn set_joint(&mut self, joint: JointId, p: Vec3) {
        self.positions[joint.index()] = p;
    }

    pub fn is_finite(&self) -> bool {
        self.timestamp.is_finite() && self.positions.iter().all(|p| p.is_finite())
    }

    /// Applies `f` to every joint position.
    pub fn map_positions(&self, f: impl Fn(Vec3) -> Vec3) -> Frame {
        Frame::new(self.timestamp, self.positions.map(f))
    }
}

/// Projection onto the 17 major joints as 51 scalars (x, y, z per joint).
pub fn select_major_joints(frame: &Frame) -> [f64; MAJOR_JOINT_COUNT * 3] {
    let mut out = [0.0; MAJOR_JOINT_COUNT * 3];
    for (k, joint) in MAJOR_JOINTS.iter().enumerate() {
        let p = frame.joint(*joint);
        out[3 * k] = p.x;
        out[3 * k + 1] = p.y;
        out[3 * k + 2] = p.z;
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Setting {
    A,
    B,
}

impl fmt::Display for Setting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Setting::A => f.write_str("A"),
            Setting::B => f.write_str("B"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    FormingAngles,
    SumsRotating,
    DifferencesRotating,
    SymmetryReflections,
}

impl Task {
    pub const ALL: [Task; 4] = [
        Task::FormingAngles,
        Task::SumsRotating,
        Task::DifferencesRotating,
        Task::SymmetryReflections,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Task::FormingAngles => "forming_angles",
            Task::SumsRotating => "sums_rotating",
            Task::DifferencesRotating => "differences_rotating",
            Task::SymmetryReflections => "symmetry_reflections",
        }
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Descriptive metadata carried by a sequence; not present in the CSV itself.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SequenceMeta {
    pub child_id: String,
    pub setting: Setting,
    pub task: Task,
}

impl Default for SequenceMeta {
    fn default() -> Self {
        SequenceMeta {
            child_id: String::new(),
            setting: Setting::A,
            task: Task::FormingAngles,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SkeletonSequence {
    pub meta: SequenceMeta,
    frames: Vec<Frame>,
    pub nominal_rate: f64,
}

impl SkeletonSequence {
    /// Validates ordering and finiteness. Spacing is not checked against the
    /// nominal rate; captured timestamps jitter.
    pub fn new(meta: SequenceMeta, frames: Vec<Frame>) -> Result<Self> {
        if frames.len() < 2 {
            return Err(Error::Validation(format!(
                "sequence needs at least 2 frames, got {}",
                frames.len()
            )));
        }
        for (i, frame) in frames.iter().enumerate() {
            if !frame.is_finite() {
                return Err(Error::Validation(format!("frame {i} has non-finite values")));
            }
            if frame.timestamp < 0.0 {
                return Err(Error::Validation(format!("frame {i} has a negative timestamp")));
            }
            if i > 0 && frame.timestamp <= frames[i - 1].timestamp {
                return Err(Error::Validation(format!(
                    "timestamps not strictly increasing at frame {i}"
                )));
            }
        }
        Ok(SkeletonSequence {
            meta,
            frames,
            nominal_rate: NOMINAL_RATE,
        })
    }

    pub fn frames(&self) -> &[Frame] {
        &self.frames
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn timestamps(&self) -> Vec<f64> {
        self.frames.iter().map(|f| f.timestamp).collect()
    }

    pub fn duration(&self) -> f64 {
        self.frames[self.len() - 1].timestamp - self.frames[0].timestamp
    }

    /// Mean frame rate implied by the timestamps.
    pub fn observed_rate(&self) -> f64 {
        (self.len() - 1) as f64 / self.duration()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnnotationInterval {
    pub onset: f64,
    pub offset: f64,
}

impl AnnotationInterval {
    pub fn new(onset: f64, offset: f64) -> Result<Self> {
        if !(onset.is_finite() && offset.is_finite()) || onset >= offset {
            return Err(Error::Validation(format!(
                "interval onset {onset} must precede offset {offset}"
            )));
        }
        Ok(AnnotationInterval { onset, offset })
    }

    /// Half-open membership: `onset <= t < offset`.
    pub fn contains(&self, t: f64) -> bool {
        self.onset <= t && t < self.offset
    }

    pub fn overlaps(&self, other: &AnnotationInterval) -> bool {
        self.onset < other.offset && other.onset < self.offset
    }
}

/// One rater's reflective-thinking intervals, sorted and disjoint.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct AnnotationTrack {
    pub rater_id: String,
    intervals: Vec<AnnotationInterval>,
}

impl AnnotationTrack {
    /// Sorts by onset and rejects overlaps, naming the offending indices
    /// (positions after sorting).
    pub fn new(rater_id: impl Into<String>, mut intervals: Vec<AnnotationInterval>) -> Result<Self> {
        for (i, iv) in intervals.iter().enumerate() {
            if iv.onset >= iv.offset {
                return Err(Error::Validation(format!(
                    "interval {i}: onset {} not before offset {}",
                    iv.onset, iv.offset
                )));
            }
        }
        intervals.sort_by(|a, b| a.onset.total_cmp(&b.onset));
        for i in 1..intervals.len() {
            if intervals[i].onset < intervals[i - 1].offset {
                return Err(Error::Validation(format!("intervals {} and {} overlap", i - 1, i)));
            }
        }
        Ok(AnnotationTrack {
            rater_id: rater_id.into(),
            intervals,
        })
    }

    pub fn empty(rater_id: impl Into<String>) -> Self {
        AnnotationTrack {
            rater_id: rater_id.into(),
            intervals: Vec::new(),
        }
    }

    pub fn intervals(&self) -> &[AnnotationInterval] {
        &self.intervals
    }

    pub fn len(&self) -> usize {
        self.intervals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }
}

/// Marks each frame positive iff its timestamp lies in some `[onset, offset)`.
///
/// Intervals may extend at most one nominal frame period past either end of
/// the sequence.
pub fn labels_per_frame(seq: &SkeletonSequence, track: &AnnotationTrack) -> Result<Vec<bool>> {
    let timestamps = seq.timestamps();
    check_track_span(&timestamps, track, 1.0 / seq.nominal_rate)?;
    Ok(labels_for_timestamps(&timestamps, track.intervals()))
}

pub(crate) fn check_track_span(timestamps: &[f64], track: &AnnotationTrack, tolerance: f64) -> Result<()> {
    let first = timestamps[0];
    let last = timestamps[timestamps.len() - 1];
    for (i, iv) in track.intervals().iter().enumerate() {
        if iv.onset < first - tolerance || iv.offset > last + tolerance {
            return Err(Error::Validation(format!(
                "rater {}: interval {i} [{}, {}) lies outside sequence span [{first}, {last}]",
                track.rater_id, iv.onset, iv.offset
            )));
        }
    }
    Ok(())
}

pub(crate) fn labels_for_timestamps(timestamps: &[f64], intervals: &[AnnotationInterval]) -> Vec<bool> {
    timestamps
        .iter()
        .map(|&t| intervals.iter().any(|iv| iv.contains(t)))
        .collect()
}
