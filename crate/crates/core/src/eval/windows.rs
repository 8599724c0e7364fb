use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Analysis window lengths evaluated by default, in seconds.
pub const DEFAULT_WINDOWS_S: [f64; 6] = [1.0, 2.0, 5.0, 10.0, 20.0, 40.0];
/// Overlap of consecutive test windows.
pub const TEST_OVERLAP: f64 = 0.5;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WindowSpec {
    pub length_s: f64,
    pub overlap: f64,
}

impl WindowSpec {
    pub fn new(length_s: f64, overlap: f64) -> Result<Self> {
        if !(length_s > 0.0 && length_s.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "window length {length_s} must be positive"
            )));
        }
        if !(0.0..1.0).contains(&overlap) {
            return Err(Error::InvalidArgument(format!("overlap {overlap} outside [0, 1)")));
        }
        Ok(Self { length_s, overlap })
    }

    /// Test windowing: 50 % overlap.
    pub fn test(length_s: f64) -> Self {
        Self {
            length_s,
            overlap: TEST_OVERLAP,
        }
    }

    pub fn non_overlapping(length_s: f64) -> Self {
        Self { length_s, overlap: 0.0 }
    }

    pub fn samples(&self, rate: f64) -> usize {
        (self.length_s * rate).round() as usize
    }

    pub fn stride(&self, rate: f64) -> usize {
        ((self.samples(rate) as f64 * (1.0 - self.overlap)).round() as usize).max(1)
    }
}

/// Half-open sample ranges of every window, plus whether the trial was too
/// short for even one.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Windows {
    pub spans: Vec<(usize, usize)>,
    pub too_short: bool,
}

pub fn make_windows(samples: usize, rate: f64, spec: &WindowSpec) -> Windows {
    let w = spec.samples(rate);
    if w == 0 || w > samples {
        return Windows {
            spans: Vec::new(),
            too_short: true,
        };
    }
    let stride = spec.stride(rate);
    let count = (samples - w) / stride + 1;
    Windows {
        spans: (0..count).map(|i| (i * stride, i * stride + w)).collect(),
        too_short: false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn twenty_five_seconds_ten_second_windows() {
        let w = make_windows(25 * 64, 64.0, &WindowSpec::test(10.0));
        let starts: Vec<usize> = w.spans.iter().map(|s| s.0 / 64).collect();
        assert_eq!(starts, vec![0, 5, 10, 15]);
    }

    #[test]
    fn window_equals_trial() {
        assert_eq!(make_windows(640, 64.0, &WindowSpec::test(10.0)).spans, vec![(0, 640)]);
    }

    #[test]
    fn short_trial_flagged() {
        let w = make_windows(100, 64.0, &WindowSpec::test(2.0));
        assert!(w.too_short && w.spans.is_empty());
    }

    #[test]
    fn invalid_specs() {
        assert!(WindowSpec::new(0.0, 0.5).is_err());
        assert!(WindowSpec::new(1.0, 1.0).is_err());
    }

    proptest! {
        #[test]
        fn windows_stay_inside(samples in 1usize..5000, len in 0.1f64..30.0, overlap in 0.0f64..0.9) {
            let spec = WindowSpec::new(len, overlap).unwrap();
            let w = make_windows(samples, 64.0, &spec);
            let (win, stride) = (spec.samples(64.0), spec.stride(64.0));
            if win == 0 || win > samples {
                prop_assert!(w.spans.is_empty());
            } else {
                prop_assert_eq!(w.spans.len(), (samples - win) / stride + 1);
                for &(a, b) in &w.spans {
                    prop_assert!(b <= samples);
                    prop_assert_eq!(b - a, win);
                }
            }
        }
    }
}
