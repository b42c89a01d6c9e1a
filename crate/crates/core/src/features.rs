//! The 29 per-frame body-movement features.
//!
//! Columns, in order:
//!
//! | # | name | definition |
//! |---|------|------------|
//! | 1–2 | `head_twist`, `head_flexion` | angle of head−neck against l_shoulder−r_shoulder / spine_mid−spine_base |
//! | 3–4 | `trunk_flexion_l/r` | angle of spine_shoulder−spine_mid against spine_base−{l,r}_hip |
//! | 5–9 | `pos_energy_*` | ½‖Δp‖² of head, hands, knees between consecutive frames |
//! | 10–18 | `ang_energy_*` | ½(Δa)² of the neck, shoulder, elbow, hip and knee angles |
//! | 19 | `hand_head_distance` | distance from the head to the nearer hand |
//! | 20–24 | `range_*` | a(t+k/2) − a(t−k/2), left/right averaged for paired joints |
//! | 25–29 | `amount_*` | path length of head, hands, knees over frames t−k/2..t+k/2 |
//!
//! Window indices are clamped to the period and energies are zero on the
//! first frame of a period. Every feature depends only on relative
//! positions, so the matrix is unchanged by rotating, translating or
//! mirroring the whole skeleton.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Vec3;
use crate::skeleton::{Frame, JointId};
use crate::tensor::Matrix;

pub const FEATURE_COUNT: usize = 29;

/// Bone vectors shorter than this (meters) are degenerate.
pub const DEGENERACY_EPS: f64 = 1e-9;

pub const FEATURE_NAMES: [&str; FEATURE_COUNT] = [
    "head_twist",
    "head_flexion",
    "trunk_flexion_l",
    "trunk_flexion_r",
    "pos_energy_head",
    "pos_energy_l_hand",
    "pos_energy_r_hand",
    "pos_energy_l_knee",
    "pos_energy_r_knee",
    "ang_energy_neck",
    "ang_energy_l_shoulder",
    "ang_energy_r_shoulder",
    "ang_energy_l_elbow",
    "ang_energy_r_elbow",
    "ang_energy_l_hip",
    "ang_energy_r_hip",
    "ang_energy_l_knee",
    "ang_energy_r_knee",
    "hand_head_distance",
    "range_neck",
    "range_shoulder",
    "range_elbow",
    "range_hip",
    "range_knee",
    "amount_head",
    "amount_l_hand",
    "amount_r_hand",
    "amount_l_knee",
    "amount_r_knee",
];

/// An inter-bone angle at `vertex` between the rays to `ray_a` and `ray_b`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AngleTriplet {
    pub vertex: JointId,
    pub ray_a: JointId,
    pub ray_b: JointId,
}

impl AngleTriplet {
    pub const fn new(ray_a: JointId, vertex: JointId, ray_b: JointId) -> Self {
        AngleTriplet { vertex, ray_a, ray_b }
    }
}

/// Triplets behind the angular-energy features, in column order.
pub const ENERGY_TRIPLETS: [AngleTriplet; 9] = {
    use JointId::*;
    [
        AngleTriplet::new(Head, Neck, SpineShoulder),
        AngleTriplet::new(SpineShoulder, LShoulder, LElbow),
        AngleTriplet::new(SpineShoulder, RShoulder, RElbow),
        AngleTriplet::new(LShoulder, LElbow, LHand),
        AngleTriplet::new(RShoulder, RElbow, RHand),
        AngleTriplet::new(SpineBase, LHip, LKnee),
        AngleTriplet::new(SpineBase, RHip, RKnee),
        AngleTriplet::new(LHip, LKnee, LAnkle),
        AngleTriplet::new(RHip, RKnee, RAnkle),
    ]
};

/// Joints behind the positional-energy and amount-of-movement features.
pub const MOVEMENT_JOINTS: [JointId; 5] = [
    JointId::Head,
    JointId::LHand,
    JointId::RHand,
    JointId::LKnee,
    JointId::RKnee,
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct WindowParams {
    /// Full window width in frames; half of it is taken on each side.
    pub k: usize,
}

impl Default for WindowParams {
    fn default() -> Self {
        WindowParams { k: 120 }
    }
}

impl WindowParams {
    pub fn new(k: usize) -> Result<Self> {
        if k < 2 || !k.is_multiple_of(2) {
            return Err(Error::Validation(format!("window k must be even and >= 2, got {k}")));
        }
        Ok(WindowParams { k })
    }

    /// Clamped `(lo, hi)` frame indices of the window centred on `t`.
    pub fn bounds(&self, t: usize, len: usize) -> (usize, usize) {
        let half = self.k / 2;
        (t.saturating_sub(half), (t + half).min(len - 1))
    }
}

/// Angle in `[0, π]` between `u` and `v` as `atan2(‖u×v‖, u·v)`.
pub fn angle_between(u: Vec3, v: Vec3) -> f64 {
    u.cross(v).norm().atan2(u.dot(v))
}

fn checked_angle(u: Vec3, v: Vec3, frame: usize, what: &str) -> Result<f64> {
    if u.norm() <= DEGENERACY_EPS || v.norm() <= DEGENERACY_EPS {
        return Err(Error::DegenerateGeometry {
            frame,
            what: what.to_string(),
        });
    }
    Ok(angle_between(u, v))
}

/// Angle of the triplet in `frame`; `index` labels errors.
pub fn joint_angle(frame: &Frame, t: AngleTriplet, index: usize) -> Result<f64> {
    let v = frame.joint(t.vertex);
    checked_angle(
        frame.joint(t.ray_a) - v,
        frame.joint(t.ray_b) - v,
        index,
        &format!("angle at {}", t.vertex),
    )
}

/// Features 1–4: head twist/lateral bend, head flexion, left and right
/// trunk flexion.
pub fn posture_angles(frame: &Frame, index: usize) -> Result<[f64; 4]> {
    use JointId::*;
    let j = |id| frame.joint(id);
    let head = j(Head) - j(Neck);
    let trunk = j(SpineShoulder) - j(SpineMid);
    Ok([
        checked_angle(head, j(LShoulder) - j(RShoulder), index, "head twist")?,
        checked_angle(head, j(SpineMid) - j(SpineBase), index, "head flexion")?,
        checked_angle(trunk, j(SpineBase) - j(LHip), index, "left trunk flexion")?,
        checked_angle(trunk, j(SpineBase) - j(RHip), index, "right trunk flexion")?,
    ])
}

pub fn positional_energy(prev: &Frame, cur: &Frame, joint: JointId) -> f64 {
    (cur.joint(joint) - prev.joint(joint)).norm_squared() / 2.0
}

pub fn angular_energy(prev: &Frame, cur: &Frame, t: AngleTriplet, index: usize) -> Result<f64> {
    let a0 = joint_angle(prev, t, index.saturating_sub(1))?;
    let a1 = joint_angle(cur, t, index)?;
    Ok(energy_from_angles(a0, a1))
}

fn energy_from_angles(a0: f64, a1: f64) -> f64 {
    let d = a1 - a0;
    d * d / 2.0
}

/// Feature 19.
pub fn hand_head_distance(frame: &Frame) -> f64 {
    let head = frame.joint(JointId::Head);
    head.distance(frame.joint(JointId::LHand))
        .min(head.distance(frame.joint(JointId::RHand)))
}

/// Signed change of `angles` across the clamped window centred on `t`.
pub fn range_of_movement(angles: &[f64], t: usize, w: WindowParams) -> f64 {
    let (lo, hi) = w.bounds(t, angles.len());
    angles[hi] - angles[lo]
}

/// Path length of `positions` between the clamped window bounds around `t`.
pub fn amount_of_movement(positions: &[Vec3], t: usize, w: WindowParams) -> f64 {
    let (lo, hi) = w.bounds(t, positions.len());
    positions[lo..=hi].windows(2).map(|p| p[1].distance(p[0])).sum()
}

/// One row per frame, columns in [`FEATURE_NAMES`] order.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    pub values: Matrix,
    pub provenance: String,
}

impl FeatureMatrix {
    pub fn rows(&self) -> usize {
        self.values.rows()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        self.values.row(i)
    }

    /// CSV with the feature-name header; values in 17 significant digits.
    pub fn write_csv(&self, w: impl Write) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        wtr.write_record(FEATURE_NAMES)?;
        for r in 0..self.rows() {
            wtr.write_record(self.row(r).iter().map(|v| format!("{v:.16e}")))?;
        }
        wtr.flush().map_err(|e| Error::io("<feature writer>", e))?;
        Ok(())
    }

    pub fn read_csv(r: impl Read, provenance: impl Into<String>) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(r);
        let header = rdr.headers()?.clone();
        if header.iter().ne(FEATURE_NAMES.iter().copied()) {
            return Err(Error::Format(
                "feature CSV header does not match the 29 feature names".into(),
            ));
        }
        let mut rows = Vec::new();
        for (i, rec) in rdr.records().enumerate() {
            let rec = rec?;
            let row = rec
                .iter()
                .enumerate()
                .map(|(c, s)| {
                    s.parse::<f64>().map_err(|_| Error::Parse {
                        file: "<feature csv>".into(),
                        row: i + 2,
                        column: FEATURE_NAMES.get(c).copied().unwrap_or("?").into(),
                        message: format!("not a number: '{s}'"),
                    })
                })
                .collect::<Result<Vec<f64>>>()?;
            rows.push(row);
        }
        Ok(FeatureMatrix {
            values: Matrix::from_rows(&rows)?,
            provenance: provenance.into(),
        })
    }
}

/// Computes all 29 features for every frame of one period.
pub fn extract_features(frames: &[Frame], w: WindowParams) -> Result<Matrix> {
    let n = frames.len();
    if n < 2 {
        return Err(Error::Validation(format!(
            "feature extraction needs at least 2 frames, got {n}"
        )));
    }

    let mut angles = vec![vec![0.0; n]; ENERGY_TRIPLETS.len()];
    for (t, frame) in frames.iter().enumerate() {
        for (k, triplet) in ENERGY_TRIPLETS.iter().enumerate() {
            angles[k][t] = joint_angle(frame, *triplet, t)?;
        }
    }
    let tracks: Vec<Vec<Vec3>> = MOVEMENT_JOINTS
        .iter()
        .map(|&j| frames.iter().map(|f| f.joint(j)).collect())
        .collect();

    let mut out = Matrix::zeros(n, FEATURE_COUNT);
    for (t, frame) in frames.iter().enumerate() {
        let row = out.row_mut(t);
        row[..4].copy_from_slice(&posture_angles(frame, t)?);
        if t > 0 {
            for (k, &joint) in MOVEMENT_JOINTS.iter().enumerate() {
                row[4 + k] = positional_energy(&frames[t - 1], frame, joint);
            }
            for k in 0..ENERGY_TRIPLETS.len() {
                row[9 + k] = energy_from_angles(angles[k][t - 1], angles[k][t]);
            }
        }
        row[18] = hand_head_distance(frame);
        row[19] = range_of_movement(&angles[0], t, w);
        // shoulder, elbow, hip, knee: left/right pairs at triplet 1+2p, 2+2p
        for p in 0..4 {
            let left = range_of_movement(&angles[1 + 2 * p], t, w);
            let right = range_of_movement(&angles[2 + 2 * p], t, w);
            row[20 + p] = (left + right) / 2.0;
        }
        for (k, track) in tracks.iter().enumerate() {
            row[24 + k] = amount_of_movement(track, t, w);
        }
    }
    Ok(out)
}
