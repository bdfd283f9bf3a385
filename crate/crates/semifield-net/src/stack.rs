//! Multi-channel feature stacks: the value flowing between network sublayers.

use semifield_core::Grid2;

use crate::NetError;

/// A stack of same-sized channels. Values are plain reals; each sublayer
/// interprets them in its own semifield.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureStack {
    channels: Vec<Grid2>,
}

impl FeatureStack {
    /// Builds a stack, checking that every channel has the same dimensions.
    pub fn new(channels: Vec<Grid2>) -> Result<Self, NetError> {
        let Some(first) = channels.first() else {
            return Err(NetError::EmptyStack);
        };
        let dims = first.dims();
        if channels.iter().any(|c| c.dims() != dims) {
            return Err(NetError::ChannelShapeMismatch);
        }
        Ok(Self { channels })
    }

    /// All-zero stack with `count` channels of `width` x `height`.
    pub fn zeros(count: usize, width: usize, height: usize) -> Self {
        Self {
            channels: vec![Grid2::new(width, height, 0.0); count],
        }
    }

    pub fn len(&self) -> usize {
        self.channels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.channels.is_empty()
    }

    /// (width, height) shared by every channel.
    pub fn dims(&self) -> (usize, usize) {
        self.channels[0].dims()
    }

    pub fn channel(&self, i: usize) -> &Grid2 {
        &self.channels[i]
    }

    pub fn channel_mut(&mut self, i: usize) -> &mut Grid2 {
        &mut self.channels[i]
    }

    pub fn channels(&self) -> &[Grid2] {
        &self.channels
    }

    pub fn iter(&self) -> impl Iterator<Item = &Grid2> {
        self.channels.iter()
    }

    /// Applies `f` channel-wise, keeping the stack shape.
    pub fn map_channels(&self, f: impl Fn(&Grid2) -> Grid2) -> Self {
        Self {
            channels: self.channels.iter().map(f).collect(),
        }
    }

    /// Largest absolute difference across all channels and pixels.
    pub fn max_abs_diff(&self, other: &FeatureStack) -> f64 {
        self.channels
            .iter()
            .zip(&other.channels)
            .map(|(a, b)| a.max_abs_diff(b))
            .fold(0.0, f64::max)
    }
}
