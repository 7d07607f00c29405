//! Bluetooth channel plans and nearest-channel assignment.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Which Bluetooth physical layer the plan describes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Standard {
    /// Classic (BR/EDR): 79 channels, 1 MHz apart, 2402–2480 MHz.
    Classic,
    /// Low Energy: 40 channels, 2 MHz apart, 2402–2480 MHz.
    Ble,
}

impl std::str::FromStr for Standard {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "classic" => Ok(Standard::Classic),
            "ble" => Ok(Standard::Ble),
            other => Err(Error::parameter(format!(
                "unknown channel plan '{other}' (expected 'classic' or 'ble')"
            ))),
        }
    }
}

/// An ordered set of absolute channel center frequencies.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelPlan {
    pub standard: Standard,
    pub channel_centers_hz: Vec<f64>,
}

impl ChannelPlan {
    /// Classic plan: centers at 2402 + k MHz for k = 0..79.
    pub fn classic() -> Self {
        Self {
            standard: Standard::Classic,
            channel_centers_hz: (0..79).map(|k| 2.402e9 + k as f64 * 1e6).collect(),
        }
    }

    /// LE plan: centers at 2402 + 2k MHz for k = 0..40.
    pub fn ble() -> Self {
        Self {
            standard: Standard::Ble,
            channel_centers_hz: (0..40).map(|k| 2.402e9 + k as f64 * 2e6).collect(),
        }
    }

    pub fn for_standard(standard: Standard) -> Self {
        match standard {
            Standard::Classic => Self::classic(),
            Standard::Ble => Self::ble(),
        }
    }

    pub fn num_channels(&self) -> usize {
        self.channel_centers_hz.len()
    }

    /// Distance between adjacent channel centers (1 MHz classic, 2 MHz LE).
    pub fn spacing_hz(&self) -> f64 {
        match self.standard {
            Standard::Classic => 1e6,
            Standard::Ble => 2e6,
        }
    }

    pub fn center_hz(&self, index: usize) -> Result<f64> {
        self.channel_centers_hz
            .get(index)
            .copied()
            .ok_or_else(|| {
                Error::parameter(format!(
                    "channel index {index} out of range for a {}-channel plan",
                    self.num_channels()
                ))
            })
    }
}

/// Maps an absolute frequency to the index of the nearest channel center.
///
/// Frequencies are accepted across the plan span extended by half a channel
/// spacing at each end; an exact midpoint between two channels resolves to
/// the lower index.
pub fn nearest_channel(freq_hz: f64, plan: &ChannelPlan) -> Result<usize> {
    let first = plan.channel_centers_hz[0];
    let last = *plan.channel_centers_hz.last().unwrap();
    let spacing = plan.spacing_hz();
    if freq_hz < first - spacing / 2.0 || freq_hz > last + spacing / 2.0 {
        return Err(Error::parameter(format!(
            "{freq_hz} Hz is outside the plan span {first}–{last} Hz (± half spacing)"
        )));
    }
    // ceil(x − ½) rounds to nearest with exact halves going down.
    let x = (freq_hz - first) / spacing;
    let k = (x - 0.5).ceil() as i64;
    Ok(k.clamp(0, plan.num_channels() as i64 - 1) as usize)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn classic_plan_has_79_one_mhz_channels() {
        let plan = ChannelPlan::classic();
        assert_eq!(plan.num_channels(), 79);
        assert_eq!(plan.channel_centers_hz[0], 2.402e9);
        assert_eq!(plan.channel_centers_hz[78], 2.480e9);
        for w in plan.channel_centers_hz.windows(2) {
            assert_eq!(w[1] - w[0], 1e6);
        }
    }

    #[test]
    fn ble_plan_has_40_two_mhz_channels() {
        let plan = ChannelPlan::ble();
        assert_eq!(plan.num_channels(), 40);
        assert_eq!(plan.channel_centers_hz[0], 2.402e9);
        assert_eq!(plan.channel_centers_hz[39], 2.480e9);
        for w in plan.channel_centers_hz.windows(2) {
            assert_eq!(w[1] - w[0], 2e6);
        }
    }

    #[test]
    fn nearest_channel_examples() {
        let classic = ChannelPlan::classic();
        assert_eq!(nearest_channel(2.4023e9, &classic).unwrap(), 0);
        assert_eq!(nearest_channel(2.4416e9, &classic).unwrap(), 40);
        let ble = ChannelPlan::ble();
        assert_eq!(nearest_channel(2.426e9, &ble).unwrap(), 12);
    }

    #[test]
    fn midpoint_ties_resolve_to_lower_index() {
        let classic = ChannelPlan::classic();
        // 2402.5 MHz sits exactly between channels 0 and 1.
        assert_eq!(nearest_channel(2.4025e9, &classic).unwrap(), 0);
        assert_eq!(nearest_channel(2.4035e9, &classic).unwrap(), 1);
    }

    #[test]
    fn out_of_span_is_an_error() {
        let classic = ChannelPlan::classic();
        assert!(nearest_channel(2.40149e9, &classic).is_err());
        assert!(nearest_channel(2.48051e9, &classic).is_err());
        // The half-spacing margins themselves are accepted.
        assert_eq!(nearest_channel(2.4015e9, &classic).unwrap(), 0);
        assert_eq!(nearest_channel(2.4805e9, &classic).unwrap(), 78);
    }

    proptest! {
        #[test]
        fn channel_centers_round_trip(k in 0usize..79) {
            let plan = ChannelPlan::classic();
            let f = plan.center_hz(k).unwrap();
            prop_assert_eq!(nearest_channel(f, &plan).unwrap(), k);
        }

        #[test]
        fn offsets_under_half_spacing_stay_on_channel(
            k in 0usize..40,
            off in -0.999f64..0.999,
        ) {
            let plan = ChannelPlan::ble();
            let f = plan.center_hz(k).unwrap() + off * 1e6 * 0.999;
            prop_assert_eq!(nearest_channel(f, &plan).unwrap(), k);
        }
    }
}
