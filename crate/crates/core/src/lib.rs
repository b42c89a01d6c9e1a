//! Detection of reflective-thinking periods from full-body skeleton
//! sequences: kinematic features, period segmentation, bidirectional LSTM
//! classifiers and subject-independent evaluation.

pub mod error;
pub mod evaluation;
pub mod features;
pub mod geometry;
pub mod model;
pub mod pipeline;
pub mod segmentation;
pub mod skeleton;
pub mod tensor;

pub use error::{Error, Result};
pub use geometry::Vec3;
pub use segmentation::{InputForm, Label, Period, Provenance, Sample};
pub use skeleton::{AnnotationInterval, AnnotationTrack, Frame, JointId, Setting, SkeletonSequence, Task};
pub use tensor::Matrix;
