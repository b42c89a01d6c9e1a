//! Dataset preparation: manifest → first-rater frame labels → balanced
//! periods → optional mirror copies → fixed-length model inputs, plus the
//! on-disk period set.
//!
//! A period set directory holds `periods.json` (configuration and one record
//! per item) and `tensors.bin` (the item tensors, in record order).

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::segmentation::{
    balance_periods, balance_subsegments, extract_periods, make_inputs, mirror_augment, period_channels,
    selection_seed, window_subsegments, AugAxis, InputForm, Label, Period, PeriodWindows, Provenance, Sample,
    DEFAULT_LENGTH, MIN_TAIL,
};
use crate::skeleton::manifest::{load_entry, DatasetManifest};
use crate::skeleton::{labels_per_frame, Setting, Task};
use crate::tensor::{read_tensor_set, write_tensor_set};

pub const PERIODS_FILE: &str = "periods.json";
pub const TENSORS_FILE: &str = "tensors.bin";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrepareConfig {
    pub input_form: InputForm,
    pub augment: bool,
    /// Resampled length of whole periods.
    pub length: usize,
    /// Subsegment width; whole periods when absent.
    pub window: Option<usize>,
    pub min_tail: usize,
    /// Seed of the NRT subsegment selection.
    pub seed: u64,
}

impl Default for PrepareConfig {
    fn default() -> Self {
        PrepareConfig {
            input_form: InputForm::Feats,
            augment: true,
            length: DEFAULT_LENGTH,
            window: None,
            min_tail: MIN_TAIL,
            seed: 0,
        }
    }
}

/// Balanced periods of every manifest entry, labelled by its first
/// annotation track. Entries are loaded in parallel; the output is in
/// manifest order.
pub fn labelled_periods(manifest: &DatasetManifest) -> Result<Vec<Period>> {
    if manifest.is_empty() {
        return Err(Error::Empty("manifest has no entries".into()));
    }
    let per_entry = manifest
        .entries
        .par_iter()
        .enumerate()
        .map(|(i, entry)| {
            let loaded = load_entry(entry)?;
            let track = loaded.tracks.first().ok_or_else(|| {
                Error::Validation(format!("{}: no annotation track listed", entry.sequence.display()))
            })?;
            let labels = labels_per_frame(&loaded.sequence, track)?;
            Ok(balance_periods(extract_periods(&loaded.sequence, &labels, i)?))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(per_entry.into_iter().flatten().collect())
}

fn axes(augment: bool) -> &'static [AugAxis] {
    if augment {
        &[AugAxis::None, AugAxis::X, AugAxis::Y, AugAxis::Z]
    } else {
        &[AugAxis::None]
    }
}

/// Model inputs from balanced periods. Each period is followed by its
/// mirror copies when augmenting.
///
/// With a window width, subsegments are cut from every period and NRT
/// periods are thinned per sequence; the selection is drawn once on the
/// original periods and applied to each mirror copy.
pub fn build_samples(periods: &[Period], cfg: &PrepareConfig) -> Result<Vec<Sample>> {
    let Some(w) = cfg.window else {
        let expanded: Vec<Period> = periods
            .iter()
            .flat_map(|p| axes(cfg.augment).iter().map(move |&a| mirror_augment(p, a)))
            .collect();
        return par_chunks(&expanded, |chunk| make_inputs(chunk, cfg.input_form, cfg.length));
    };

    let windowed = periods
        .par_iter()
        .map(|p| {
            Ok(PeriodWindows {
                label: p.label,
                provenance: p.provenance.clone(),
                original_length: p.len(),
                windows: window_subsegments(&period_channels(p, cfg.input_form)?, w, cfg.min_tail)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let mut by_sequence: BTreeMap<usize, Vec<(usize, PeriodWindows)>> = BTreeMap::new();
    for (i, pw) in windowed.into_iter().enumerate() {
        by_sequence.entry(pw.provenance.sequence).or_default().push((i, pw));
    }
    let mut kept: Vec<(usize, PeriodWindows)> = Vec::with_capacity(periods.len());
    for (sequence, group) in by_sequence {
        let (idx, pws): (Vec<usize>, Vec<PeriodWindows>) = group.into_iter().unzip();
        let balanced = balance_subsegments(pws, selection_seed(cfg.seed, sequence, w));
        kept.extend(idx.into_iter().zip(balanced));
    }
    kept.sort_by_key(|(i, _)| *i);

    let per_period = kept
        .into_par_iter()
        .map(|(i, pw)| {
            let mut out = Vec::new();
            for &axis in axes(cfg.augment) {
                let windows = if axis == AugAxis::None {
                    pw.windows.clone()
                } else {
                    let all = window_subsegments(
                        &period_channels(&mirror_augment(&periods[i], axis), cfg.input_form)?,
                        w,
                        cfg.min_tail,
                    )?;
                    pw.windows.iter().map(|s| all[s.window_index].clone()).collect()
                };
                let provenance = Provenance {
                    axis,
                    ..pw.provenance.clone()
                };
                out.extend(windows.into_iter().map(|s| Sample {
                    label: pw.label,
                    provenance: provenance.clone(),
                    window: Some(s.window_index),
                    original_length: s.end - s.start,
                    data: s.data,
                }));
            }
            Ok(out)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(per_period.into_iter().flatten().collect())
}

fn par_chunks(periods: &[Period], f: impl Fn(&[Period]) -> Result<Vec<Sample>> + Sync + Send) -> Result<Vec<Sample>> {
    let parts = periods.par_chunks(16).map(f).collect::<Result<Vec<_>>>()?;
    Ok(parts.into_iter().flatten().collect())
}

/// RT/NRT period counts and total frames per setting and task.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CountTable {
    pub cells: BTreeMap<String, CountCell>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CountCell {
    pub rt: usize,
    pub nrt: usize,
    pub frames: usize,
}

impl CountTable {
    fn key(setting: Setting, task: Task) -> String {
        format!("{setting}/{}", task.name())
    }

    pub fn from_items<'a>(items: impl IntoIterator<Item = (&'a Provenance, Label, usize)>) -> Self {
        let mut t = CountTable::default();
        for (p, label, frames) in items {
            let c = t.cells.entry(Self::key(p.setting, p.task)).or_default();
            match label {
                Label::Rt => c.rt += 1,
                Label::Nrt => c.nrt += 1,
            }
            c.frames += frames;
        }
        t
    }

    pub fn total(&self) -> CountCell {
        self.cells.values().fold(CountCell::default(), |a, c| CountCell {
            rt: a.rt + c.rt,
            nrt: a.nrt + c.nrt,
            frames: a.frames + c.frames,
        })
    }

    /// Settings as column groups, tasks as columns; RT, NRT and frame rows.
    pub fn render(&self) -> String {
        let mut cols = Vec::new();
        for setting in [Setting::A, Setting::B] {
            for task in Task::ALL {
                if let Some(c) = self.cells.get(&Self::key(setting, task)) {
                    cols.push((format!("{setting}:{}", task.name()), *c));
                }
            }
        }
        let mut s = String::from("count");
        for (name, _) in &cols {
            s += &format!("\t{name}");
        }
        s += "\ttotal\n";
        let total = self.total();
        for (row, get) in [
            ("RT", (|c: &CountCell| c.rt) as fn(&CountCell) -> usize),
            ("NRT", |c| c.nrt),
            ("frames", |c| c.frames),
        ] {
            s += row;
            for (_, c) in &cols {
                s += &format!("\t{}", get(c));
            }
            s += &format!("\t{}\n", get(&total));
        }
        s
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleRecord {
    pub label: Label,
    #[serde(flatten)]
    pub provenance: Provenance,
    pub window: Option<usize>,
    pub original_length: usize,
    pub resampled_length: usize,
}

/// A prepared, model-ready dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct PeriodSet {
    pub config: PrepareConfig,
    pub samples: Vec<Sample>,
}

#[derive(Serialize, Deserialize)]
struct PeriodSetFile {
    config: PrepareConfig,
    counts: CountTable,
    items: Vec<SampleRecord>,
}

impl PeriodSet {
    pub fn prepare(manifest: &DatasetManifest, config: PrepareConfig) -> Result<Self> {
        let periods = labelled_periods(manifest)?;
        let samples = build_samples(&periods, &config)?;
        Ok(PeriodSet { config, samples })
    }

    pub fn counts(&self) -> CountTable {
        CountTable::from_items(self.samples.iter().map(|s| (&s.provenance, s.label, s.original_length)))
    }

    pub fn save(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let file = PeriodSetFile {
            config: self.config,
            counts: self.counts(),
            items: self
                .samples
                .iter()
                .map(|s| SampleRecord {
                    label: s.label,
                    provenance: s.provenance.clone(),
                    window: s.window,
                    original_length: s.original_length,
                    resampled_length: s.data.rows(),
                })
                .collect(),
        };
        let path = dir.join(PERIODS_FILE);
        fs::write(&path, serde_json::to_string_pretty(&file)? + "\n").map_err(|e| Error::io(&path, e))?;
        let path = dir.join(TENSORS_FILE);
        let f = fs::File::create(&path).map_err(|e| Error::io(&path, e))?;
        let mut w = std::io::BufWriter::new(f);
        let data: Vec<_> = self.samples.iter().map(|s| s.data.clone()).collect();
        write_tensor_set(&data, &mut w)?;
        std::io::Write::flush(&mut w).map_err(|e| Error::io(&path, e))
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let path = dir.join(PERIODS_FILE);
        let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        let file: PeriodSetFile = serde_json::from_str(&text)?;
        let path = dir.join(TENSORS_FILE);
        let f = fs::File::open(&path).map_err(|e| Error::io(&path, e))?;
        let tensors = read_tensor_set(std::io::BufReader::new(f))?;
        if tensors.len() != file.items.len() {
            return Err(Error::Format(format!(
                "{} lists {} items but {} holds {}",
                PERIODS_FILE,
                file.items.len(),
                TENSORS_FILE,
                tensors.len()
            )));
        }
        let samples = file
            .items
            .into_iter()
            .zip(tensors)
            .map(|(r, data)| Sample {
                label: r.label,
                provenance: r.provenance,
                window: r.window,
                original_length: r.original_length,
                data,
            })
            .collect();
        Ok(PeriodSet {
            config: file.config,
            samples,
        })
    }
}
