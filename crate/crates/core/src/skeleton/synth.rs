//! Deterministic synthetic skeleton recordings for tests and demos.
//!
//! Two movement regimes are generated: `PauseRich` segments hold a static
//! pose with sensor-level jitter and an occasional slow hand-to-head
//! approach; `MotionRich` segments swing the arms, head and knees
//! continuously. Pause-rich spans are annotated as reflective thinking.

use std::f64::consts::PI;
use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::geometry::Vec3;

use super::manifest::{DatasetManifest, ManifestEntry};
use super::{
    write_annotations, write_sequence, AnnotationInterval, AnnotationTrack, Frame, JointId, SequenceMeta, Setting,
    SkeletonSequence, Task, JOINT_COUNT, NOMINAL_RATE,
};

/// Per-coordinate standard deviation of the sensor jitter, meters.
pub const JITTER_STD: f64 = 0.0002;
/// Peak arm swing amplitude of motion-rich segments, meters.
pub const ARM_SWING: f64 = 0.12;
/// Lowest arm swing frequency of motion-rich segments, hertz.
pub const MIN_SWING_HZ: f64 = 0.6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SegmentClass {
    PauseRich,
    MotionRich,
}

/// Upright rest pose of a child, facing -z, meters.
fn rest_pose() -> [Vec3; JOINT_COUNT] {
    use JointId::*;
    let mut p = [Vec3::ZERO; JOINT_COUNT];
    let mut set = |j: JointId, x: f64, y: f64, z: f64| p[j.index()] = Vec3::new(x, y, z);
    set(SpineBase, 0.0, 0.70, 0.0);
    set(SpineMid, 0.0, 0.90, 0.01);
    set(SpineShoulder, 0.0, 1.10, 0.0);
    set(Neck, 0.0, 1.16, -0.01);
    set(Head, 0.0, 1.28, -0.02);
    for (sign, sh, el, wr, ha, tip, th, hip, kn, an, ft) in [
        (
            -1.0, LShoulder, LElbow, LWrist, LHand, LHandTip, LThumb, LHip, LKnee, LAnkle, LFoot,
        ),
        (
            1.0, RShoulder, RElbow, RWrist, RHand, RHandTip, RThumb, RHip, RKnee, RAnkle, RFoot,
        ),
    ] {
        set(sh, sign * 0.16, 1.08, 0.0);
        set(el, sign * 0.20, 0.88, 0.02);
        set(wr, sign * 0.20, 0.70, -0.04);
        set(ha, sign * 0.20, 0.64, -0.06);
        set(tip, sign * 0.20, 0.58, -0.08);
        set(th, sign * 0.17, 0.62, -0.08);
        set(hip, sign * 0.08, 0.68, 0.0);
        set(kn, sign * 0.09, 0.38, -0.01);
        set(an, sign * 0.09, 0.08, 0.02);
        set(ft, sign * 0.09, 0.03, -0.08);
    }
    p
}

const LEFT_ARM: [JointId; 5] = [
    JointId::LWrist,
    JointId::LHand,
    JointId::LHandTip,
    JointId::LThumb,
    JointId::LElbow,
];
const RIGHT_ARM: [JointId; 5] = [
    JointId::RWrist,
    JointId::RHand,
    JointId::RHandTip,
    JointId::RThumb,
    JointId::RElbow,
];

/// Randomized per-segment movement parameters.
#[derive(Debug, Clone)]
struct SegmentPlan {
    class: SegmentClass,
    frames: usize,
    swing_hz: [f64; 2],
    phase: [f64; 4],
    head_sway: f64,
    knee_sway: f64,
    /// Hand-to-head approach: (hand side, start frame, hold frames).
    approach: Option<(usize, usize, usize)>,
}

impl SegmentPlan {
    fn draw(class: SegmentClass, frames: usize, rng: &mut ChaCha8Rng) -> Self {
        let approach = match class {
            SegmentClass::PauseRich if frames > 90 && rng.random_bool(0.5) => {
                let ramp = 45;
                let room = frames.saturating_sub(2 * ramp + 1);
                let hold = rng.random_range(0..=room.min(90));
                let start = rng.random_range(0..=room - hold);
                Some((rng.random_range(0..2), start, hold))
            }
            _ => None,
        };
        SegmentPlan {
            class,
            frames,
            swing_hz: [rng.random_range(MIN_SWING_HZ..1.2), rng.random_range(MIN_SWING_HZ..1.2)],
            phase: std::array::from_fn(|_| rng.random_range(0.0..2.0 * PI)),
            head_sway: rng.random_range(0.015..0.03),
            knee_sway: rng.random_range(0.02..0.04),
            approach,
        }
    }

    /// Joint offsets from the rest pose at frame `i` of the segment.
    fn offsets(&self, i: usize, rest: &[Vec3; JOINT_COUNT]) -> [Vec3; JOINT_COUNT] {
        let mut off = [Vec3::ZERO; JOINT_COUNT];
        let t = i as f64 / NOMINAL_RATE;
        match self.class {
            SegmentClass::PauseRich => {
                if let Some((side, start, hold)) = self.approach {
                    let ramp = 45.0;
                    let k = i as f64 - start as f64;
                    let w = if k <= 0.0 {
                        0.0
                    } else if k < ramp {
                        smoothstep(k / ramp)
                    } else if k < ramp + hold as f64 {
                        1.0
                    } else {
                        smoothstep(1.0 - (k - ramp - hold as f64) / ramp)
                    };
                    let (arm, hand) = if side == 0 {
                        (LEFT_ARM, JointId::LHand)
                    } else {
                        (RIGHT_ARM, JointId::RHand)
                    };
                    // The hand stops about 10 cm short of the head.
                    let target = rest[JointId::Head.index()] + Vec3::new(0.0, -0.08, -0.06);
                    let shift = (target - rest[hand.index()]) * w;
                    for j in arm {
                        let scale = if matches!(j, JointId::LElbow | JointId::RElbow) {
                            0.5
                        } else {
                            1.0
                        };
                        off[j.index()] = shift * scale;
                    }
                }
            }
            SegmentClass::MotionRich => {
                // Envelope keeps consecutive segments continuous.
                let ramp = 9.0;
                let env =
                    smoothstep((i as f64 / ramp).min(1.0)) * smoothstep(((self.frames - 1 - i) as f64 / ramp).min(1.0));
                for (side, arm) in [LEFT_ARM, RIGHT_ARM].iter().enumerate() {
                    let w = 2.0 * PI * self.swing_hz[side] * t + self.phase[side];
                    let d = Vec3::new(
                        ARM_SWING * w.sin(),
                        0.5 * ARM_SWING * w.cos(),
                        0.3 * ARM_SWING * (2.0 * w).sin(),
                    ) * env;
                    for j in arm {
                        let scale = if matches!(j, JointId::LElbow | JointId::RElbow) {
                            0.4
                        } else {
                            1.0
                        };
                        off[j.index()] = d * scale;
                    }
                }
                let wh = 2.0 * PI * 0.5 * t + self.phase[2];
                let head = Vec3::new(self.head_sway * wh.sin(), 0.0, 0.5 * self.head_sway * wh.cos()) * env;
                off[JointId::Head.index()] = head;
                off[JointId::Neck.index()] = head * 0.5;
                let wk = 2.0 * PI * 0.7 * t + self.phase[3];
                let knee = Vec3::new(0.0, 0.0, self.knee_sway * wk.sin()) * env;
                off[JointId::LKnee.index()] = knee;
                off[JointId::RKnee.index()] = -knee;
            }
        }
        off
    }
}

fn smoothstep(x: f64) -> f64 {
    let x = x.clamp(0.0, 1.0);
    x * x * (3.0 - 2.0 * x)
}

/// Rigid placement of a child in the capture volume.
struct Placement {
    scale: f64,
    yaw: f64,
    origin: Vec3,
}

impl Placement {
    fn draw(rng: &mut ChaCha8Rng) -> Self {
        Placement {
            scale: rng.random_range(0.9..1.1),
            yaw: rng.random_range(-0.35..0.35),
            origin: Vec3::new(rng.random_range(-0.3..0.3), 0.0, rng.random_range(1.8..2.4)),
        }
    }

    fn apply(&self, p: Vec3) -> Vec3 {
        let (s, c) = self.yaw.sin_cos();
        let q = p * self.scale;
        Vec3::new(c * q.x + s * q.z, q.y, -s * q.x + c * q.z) + self.origin
    }
}

/// Generates a recording made of consecutive segments of the given classes and
/// durations (seconds). Pause-rich segments are annotated RT, half-open from
/// the first frame of the segment to the first frame after it.
pub fn synth_session(
    meta: SequenceMeta,
    rater_id: &str,
    segments: &[(SegmentClass, f64)],
    seed: u64,
) -> Result<(SkeletonSequence, AnnotationTrack)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let placement = Placement::draw(&mut rng);
    let rest = rest_pose();
    let jitter = Normal::new(0.0, JITTER_STD).expect("valid std");

    let mut frames = Vec::new();
    let mut intervals = Vec::new();
    for &(class, duration) in segments {
        let n = (duration * NOMINAL_RATE).round() as usize;
        if n < 2 {
            return Err(Error::Validation(format!("segment of {duration} s is too short")));
        }
        let plan = SegmentPlan::draw(class, n, &mut rng);
        let start = frames.len();
        for i in 0..n {
            let offsets = plan.offsets(i, &rest);
            let index = frames.len();
            let positions: [Vec3; JOINT_COUNT] = std::array::from_fn(|j| {
                let p = placement.apply(rest[j] + offsets[j]);
                p + Vec3::new(
                    jitter.sample(&mut rng),
                    jitter.sample(&mut rng),
                    jitter.sample(&mut rng),
                )
            });
            frames.push(Frame::new(index as f64 / NOMINAL_RATE, positions));
        }
        if class == SegmentClass::PauseRich {
            let onset = start as f64 / NOMINAL_RATE;
            let offset = frames.len() as f64 / NOMINAL_RATE;
            intervals.push(AnnotationInterval::new(onset, offset)?);
        }
    }
    let seq = SkeletonSequence::new(meta, frames)?;
    let track = AnnotationTrack::new(rater_id, intervals)?;
    Ok((seq, track))
}

/// A single-regime recording of `duration_s` seconds (at least 2).
pub fn synth_sequence(class: SegmentClass, duration_s: f64, seed: u64) -> Result<(SkeletonSequence, AnnotationTrack)> {
    if duration_s < 2.0 {
        return Err(Error::Validation(format!(
            "duration must be at least 2 s, got {duration_s}"
        )));
    }
    synth_session(SequenceMeta::default(), "synth", &[(class, duration_s)], seed)
}

/// Moves each interval boundary by up to `max_shift` seconds, keeping
/// intervals ordered, disjoint and inside `[0, end]`.
pub fn perturb_track(
    track: &AnnotationTrack,
    rater_id: &str,
    max_shift: f64,
    end: f64,
    seed: u64,
) -> Result<AnnotationTrack> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ivs = track.intervals();
    let mut out = Vec::with_capacity(ivs.len());
    let mut floor = 0.0_f64;
    for (k, iv) in ivs.iter().enumerate() {
        let ceiling = ivs.get(k + 1).map(|n| n.onset).unwrap_or(end);
        let mut onset = (iv.onset + rng.random_range(-max_shift..=max_shift)).max(floor);
        let mut offset = (iv.offset + rng.random_range(-max_shift..=max_shift)).min(ceiling);
        if offset <= onset {
            onset = iv.onset.max(floor);
            offset = iv.offset.min(ceiling);
        }
        out.push(AnnotationInterval::new(onset, offset)?);
        floor = offset;
    }
    AnnotationTrack::new(rater_id, out)
}

#[derive(Debug, Clone)]
pub struct SynthDatasetConfig {
    pub children_a: usize,
    pub children_b: usize,
    pub tasks_per_child: usize,
    /// RT segments per recording; each is preceded by an NRT segment and the
    /// recording ends with a trailing NRT segment.
    pub rt_segments: usize,
    pub rt_seconds: (f64, f64),
    pub nrt_seconds: (f64, f64),
    /// Boundary jitter of the second rater, seconds.
    pub second_rater_shift: f64,
    pub seed: u64,
}

impl Default for SynthDatasetConfig {
    fn default() -> Self {
        SynthDatasetConfig {
            children_a: 6,
            children_b: 4,
            tasks_per_child: 2,
            rt_segments: 3,
            rt_seconds: (3.0, 6.0),
            nrt_seconds: (4.0, 9.0),
            second_rater_shift: 0.4,
            seed: 7,
        }
    }
}

/// Writes a synthetic dataset (CSV files plus `manifest.json`) into `dir`.
/// Each entry lists the exact rater first and a boundary-jittered second rater.
pub fn write_synth_dataset(dir: impl AsRef<Path>, cfg: &SynthDatasetConfig) -> Result<DatasetManifest> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut manifest = DatasetManifest::default();
    let children = (0..cfg.children_a)
        .map(|c| (format!("a{c:02}"), Setting::A))
        .chain((0..cfg.children_b).map(|c| (format!("b{c:02}"), Setting::B)));
    for (child_id, setting) in children {
        for task in Task::ALL.iter().cycle().take(cfg.tasks_per_child) {
            let mut segments = Vec::new();
            for _ in 0..cfg.rt_segments {
                segments.push((
                    SegmentClass::MotionRich,
                    rng.random_range(cfg.nrt_seconds.0..=cfg.nrt_seconds.1),
                ));
                segments.push((
                    SegmentClass::PauseRich,
                    rng.random_range(cfg.rt_seconds.0..=cfg.rt_seconds.1),
                ));
            }
            segments.push((
                SegmentClass::MotionRich,
                rng.random_range(cfg.nrt_seconds.0..=cfg.nrt_seconds.1),
            ));
            let meta = SequenceMeta {
                child_id: child_id.clone(),
                setting,
                task: *task,
            };
            let seed: u64 = rng.random();
            let (seq, r1) = synth_session(meta, "R1", &segments, seed)?;
            let end = seq.frames()[seq.len() - 1].timestamp;
            let r2 = perturb_track(&r1, "R2", cfg.second_rater_shift, end, seed ^ 0x5eed)?;

            let stem = format!("{child_id}_{}", task.name());
            let seq_path = dir.join(format!("{stem}.csv"));
            let r1_path = dir.join(format!("{stem}_R1.csv"));
            let r2_path = dir.join(format!("{stem}_R2.csv"));
            write_file(&seq_path, |w| write_sequence(&seq, w))?;
            write_file(&r1_path, |w| write_annotations(&r1, w))?;
            write_file(&r2_path, |w| write_annotations(&r2, w))?;
            manifest.entries.push(ManifestEntry {
                sequence: seq_path.file_name().unwrap().into(),
                annotations: vec![r1_path.file_name().unwrap().into(), r2_path.file_name().unwrap().into()],
                child_id: child_id.clone(),
                setting,
                task: *task,
            });
        }
    }
    manifest.save(dir.join("manifest.json"))?;
    Ok(manifest)
}

fn write_file(path: &Path, f: impl FnOnce(&mut fs::File) -> Result<()>) -> Result<()> {
    let mut file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f(&mut file)
}
