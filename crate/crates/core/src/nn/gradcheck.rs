use super::module::{Module, Slot};
use crate::error::Result;

/// Gradients smaller than this are compared in absolute terms.
pub const GRAD_FLOOR: f64 = 1e-6;

#[derive(Clone, Debug)]
pub struct GradCheckReport {
    pub max_rel_error: f64,
    /// Parameter name and flat index of the worst entry.
    pub worst: Option<(String, usize)>,
    pub checked: usize,
}

/// Compares backprop gradients with central differences for every parameter entry.
///
/// `objective(model, backward)` must run a forward pass and return the scalar
/// loss; when `backward` is true it must also backpropagate into the parameter
/// gradients. It has to be a pure function of the parameters (fix any seeds).
pub fn finite_diff_check<M, F>(model: &mut M, mut objective: F, step: f64) -> Result<GradCheckReport>
where
    M: Module<f64>,
    F: FnMut(&mut M, bool) -> Result<f64>,
{
    model.zero_grad();
    objective(model, true)?;
    let mut analytic: Vec<(String, Vec<f64>)> = Vec::new();
    model.visit("", &mut |name, slot| {
        if let Slot::Param(p) = slot {
            analytic.push((name.to_string(), p.grad.data().to_vec()));
        }
    });

    let mut report = GradCheckReport {
        max_rel_error: 0.0,
        worst: None,
        checked: 0,
    };
    for (pi, (name, grads)) in analytic.iter().enumerate() {
        for (k, &a) in grads.iter().enumerate() {
            let orig = param_entry(model, pi, k, None);
            param_entry(model, pi, k, Some(orig + step));
            let plus = objective(model, false)?;
            param_entry(model, pi, k, Some(orig - step));
            let minus = objective(model, false)?;
            param_entry(model, pi, k, Some(orig));
            let numeric = (plus - minus) / (2.0 * step);
            let rel = relative_error(a, numeric);
            report.checked += 1;
            if rel > report.max_rel_error || !rel.is_finite() {
                report.max_rel_error = rel;
                report.worst = Some((name.clone(), k));
            }
        }
    }
    Ok(report)
}

pub fn relative_error(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(GRAD_FLOOR)
}

/// Reads (and optionally overwrites) entry `k` of the `index`-th parameter.
fn param_entry<M: Module<f64>>(model: &mut M, index: usize, k: usize, set: Option<f64>) -> f64 {
    let mut i = 0;
    let mut out = f64::NAN;
    model.visit("", &mut |_, slot| {
        if let Slot::Param(p) = slot {
            if i == index {
                let d = p.value.data_mut();
                out = d[k];
                if let Some(v) = set {
                    d[k] = v;
                }
            }
            i += 1;
        }
    });
    out
}
