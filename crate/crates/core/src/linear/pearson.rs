use crate::error::{Error, Result};

/// Pearson coefficient plus a flag for zero-variance input, where `r` is
/// defined as 0.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Correlation {
    pub r: f64,
    pub degenerate: bool,
}

fn centered_ss(x: &[f64], mean: f64) -> (f64, bool) {
    let scale = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let ss: f64 = x.iter().map(|v| (v - mean) * (v - mean)).sum();
    let floor = x.len() as f64 * (1e-12 * scale).powi(2);
    (ss, ss <= floor || ss == 0.0)
}

pub fn pearson(a: &[f64], b: &[f64]) -> Result<Correlation> {
    if a.len() != b.len() {
        return Err(Error::shape("pearson", &[a.len()], &[b.len()]));
    }
    if a.len() < 2 {
        return Err(Error::InvalidArgument("pearson needs at least 2 samples".into()));
    }
    Ok(pearson_unchecked(a, b))
}

/// [`pearson`] for inputs already known to have equal length ≥ 2.
pub fn pearson_unchecked(a: &[f64], b: &[f64]) -> Correlation {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (saa, da) = centered_ss(a, ma);
    let (sbb, db) = centered_ss(b, mb);
    if da || db {
        return Correlation {
            r: 0.0,
            degenerate: true,
        };
    }
    let sab: f64 = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum();
    Correlation {
        r: (sab / (saa * sbb).sqrt()).clamp(-1.0, 1.0),
        degenerate: false,
    }
}
