use serde::{Deserialize, Serialize};

use crate::data::{Dataset, Trial};
use crate::dsp::rereference_and_center;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LocoRow {
    pub channel_label: String,
    pub accuracy_drop: f64,
}

/// The dataset without `channel`, re-referenced to the mean of the remaining channels.
pub fn drop_channel(ds: &Dataset, channel: usize) -> Result<Dataset> {
    if ds.n_channels() <= 1 {
        return Err(Error::InvalidArgument("cannot remove the last EEG channel".into()));
    }
    ds.without_channel(channel)?.map_trials(|t| {
        Ok(Trial {
            eeg: rereference_and_center(&t.eeg)?,
            ..t.clone()
        })
    })
}

/// Accuracy lost when one channel is left out: `baseline - score(reduced)`.
///
/// `score` runs the full train/evaluate pipeline of the model family under
/// study on the dataset it is given and returns one accuracy.
pub fn loco_channel_importance(
    ds: &Dataset,
    channel: usize,
    baseline: f64,
    score: impl Fn(&Dataset) -> Result<f64>,
) -> Result<f64> {
    let reduced = drop_channel(ds, channel)?;
    Ok(baseline - score(&reduced)?)
}

/// One drop per channel, in channel order.
pub fn loco_all(ds: &Dataset, score: impl Fn(&Dataset) -> Result<f64>) -> Result<Vec<LocoRow>> {
    let baseline = score(ds)?;
    (0..ds.n_channels())
        .map(|c| {
            Ok(LocoRow {
                channel_label: ds.channel_labels[c].clone(),
                accuracy_drop: loco_channel_importance(ds, c, baseline, &score)?,
            })
        })
        .collect()
}
