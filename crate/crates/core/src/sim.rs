//! Decentralized pipeline: sensors hold vertical slices of the data, send
//! them through a channel, and the fusion center learns the tree.

use crate::channel::{sign_column, ChannelSpec};
use crate::chow_liu::{chow_liu, EstimatedTree};
use crate::error::{invalid, Result};
use crate::estimators::EstimatorMode;
use crate::model::Dataset;
use crate::rng::child_rng;

/// One sensor and the column of samples it observed.
#[derive(Debug, Clone, PartialEq)]
pub struct SensorNode {
    /// 1-based sensor id.
    pub id: usize,
    pub column: Vec<f64>,
}

/// Sensor `i` receives column `i - 1`.
pub fn distribute(data: &Dataset) -> Vec<SensorNode> {
    data.columns()
        .enumerate()
        .map(|(k, col)| SensorNode { id: k + 1, column: col.to_vec() })
        .collect()
}

/// Received columns awaiting estimation.
#[derive(Debug, Clone, PartialEq)]
pub struct FusionCenter {
    pub received: Dataset,
    pub channel: ChannelSpec,
    pub mode: EstimatorMode,
}

impl FusionCenter {
    pub fn dataset(&self) -> &Dataset {
        &self.received
    }
}

fn check_mode(channel: &ChannelSpec, mode: EstimatorMode) -> Result<()> {
    let ok = match mode {
        EstimatorMode::Continuous => !matches!(channel, ChannelSpec::Bsc(_)),
        EstimatorMode::Quantized => matches!(channel, ChannelSpec::Noiseless | ChannelSpec::Bsc(_)),
    };
    if ok {
        Ok(())
    } else {
        Err(invalid(format!("{} channel cannot carry {} data", channel.name(), mode.name())))
    }
}

/// Sends every sensor's column through `channel`. Sensor `i` draws from the
/// stream derived from `(seed, i)`, so the result does not depend on the
/// order in which sensors transmit. Quantized sensors send signs.
pub fn transmit_all(
    sensors: &[SensorNode],
    channel: &ChannelSpec,
    mode: EstimatorMode,
    seed: u64,
) -> Result<FusionCenter> {
    check_mode(channel, mode)?;
    if sensors.is_empty() {
        return Err(invalid("no sensors to transmit from"));
    }
    let n = sensors[0].column.len();
    let mut received = Vec::with_capacity(sensors.len());
    for s in sensors {
        if s.column.len() != n {
            return Err(invalid(format!("sensor {} holds {} samples, expected {n}", s.id, s.column.len())));
        }
        let mut rng = child_rng(seed, &[s.id as u64]);
        let column = match mode {
            EstimatorMode::Continuous => channel.transmit_column(s.id - 1, &s.column, &mut rng)?,
            EstimatorMode::Quantized => channel.transmit_column(s.id - 1, &sign_column(&s.column), &mut rng)?,
        };
        received.push(column);
    }
    Ok(FusionCenter { received: Dataset::from_columns(received, None)?, channel: channel.clone(), mode })
}

/// Chow-Liu on the received data, normalizing by the channel variance when
/// the channel is Gaussian.
pub fn fc_estimate(fc: &FusionCenter) -> Result<EstimatedTree> {
    chow_liu(&fc.received, fc.mode, fc.channel.gaussian_variance())
}
