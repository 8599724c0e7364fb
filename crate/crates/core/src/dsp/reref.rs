use super::signal::Signal;
use crate::error::{Error, Result};

/// Common-average re-reference followed by per-channel mean removal.
pub fn rereference_and_center(eeg: &Signal) -> Result<Signal> {
    let (c, n) = (eeg.channels(), eeg.samples());
    if c < 2 {
        return Err(Error::InvalidArgument(
            "average re-referencing needs at least 2 channels".into(),
        ));
    }
    let mut rows: Vec<Vec<f64>> = eeg.rows().map(<[f64]>::to_vec).collect();
    for t in 0..n {
        let m = rows.iter().map(|r| r[t]).sum::<f64>() / c as f64;
        rows.iter_mut().for_each(|r| r[t] -= m);
    }
    for r in rows.iter_mut() {
        let m = r.iter().sum::<f64>() / n.max(1) as f64;
        r.iter_mut().for_each(|v| *v -= m);
    }
    eeg.with_rows(rows, eeg.rate())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn constant_channels_vanish() {
        let s = Signal::new(vec![vec![1.0; 3], vec![3.0; 3]], 64.0, Signal::default_labels(2)).unwrap();
        let y = rereference_and_center(&s).unwrap();
        assert!(y.data().iter().all(|&v| v.abs() < 1e-15));
    }

    #[test]
    fn single_channel_rejected() {
        let s = Signal::mono(vec![1.0; 4], 64.0).unwrap();
        assert!(rereference_and_center(&s).is_err());
    }

    proptest! {
        #[test]
        fn annihilates_means_and_is_idempotent(
            c in 2usize..6,
            n in 2usize..40,
            seed in any::<u64>(),
        ) {
            let vals: Vec<f64> = (0..c * n)
                .map(|i| ((seed.wrapping_add(i as u64).wrapping_mul(6364136223846793005) >> 11) as f64
                    / (1u64 << 53) as f64 - 0.5) * 10.0)
                .collect();
            let s = Signal::from_flat(vals, c, 64.0, Signal::default_labels(c)).unwrap();
            let once = rereference_and_center(&s).unwrap();
            for t in 0..n {
                let m: f64 = (0..c).map(|ch| once.channel(ch)[t]).sum::<f64>() / c as f64;
                prop_assert!(m.abs() < 1e-10);
            }
            for ch in 0..c {
                let m: f64 = once.channel(ch).iter().sum::<f64>() / n as f64;
                prop_assert!(m.abs() < 1e-10);
            }
            let twice = rereference_and_center(&once).unwrap();
            for (a, b) in once.data().iter().zip(twice.data()) {
                prop_assert!((a - b).abs() < 1e-10);
            }
        }
    }
}
