//! Result tables: per-fold rows, subject aggregates, MESD and the merged summary.

use std::collections::BTreeMap;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use super::loco::LocoRow;
use super::mesd::{mesd, MesdConfig};
use super::protocol::{EvalRow, Method, Regime};
use super::stats::chance_level;
use crate::error::{Error, Result};

pub fn write_csv<R: Serialize>(rows: &[R], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_csv<R: DeserializeOwned>(path: &Path) -> Result<Vec<R>> {
    let mut r = csv::Reader::from_path(path)?;
    r.deserialize().map(|row| row.map_err(Error::from)).collect()
}

/// Folds of one subject pooled at one window length.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SubjectScore {
    pub method: Method,
    pub regime: Regime,
    pub subject: String,
    pub window_s: f64,
    pub n_windows: usize,
    pub n_independent: usize,
    pub accuracy: f64,
    /// Chance level for this subject's count of independent windows.
    pub chance: f64,
}

type Key = (Method, Regime, String, u64);

fn key(r: &EvalRow) -> Key {
    (r.method, r.regime, r.subject.clone(), r.window_s.to_bits())
}

/// Pools fold rows by (method, regime, subject, window).
pub fn subject_scores(rows: &[EvalRow]) -> Vec<SubjectScore> {
    let mut acc: BTreeMap<Key, (usize, usize, usize)> = BTreeMap::new();
    let mut order = Vec::new();
    for r in rows {
        let e = acc.entry(key(r)).or_insert_with(|| {
            order.push(key(r));
            (0, 0, 0)
        });
        e.0 += r.n_windows;
        e.1 += r.n_correct;
        e.2 += r.n_independent;
    }
    order
        .into_iter()
        .map(|k| {
            let (n, c, ind) = acc[&k];
            SubjectScore {
                method: k.0,
                regime: k.1,
                subject: k.2,
                window_s: f64::from_bits(k.3),
                n_windows: n,
                n_independent: ind,
                accuracy: if n == 0 { f64::NAN } else { c as f64 / n as f64 },
                chance: chance_level(ind),
            }
        })
        .collect()
}

/// Accuracy over every window of every subject and fold.
pub fn pooled_accuracy(rows: &[EvalRow]) -> Option<f64> {
    let n: usize = rows.iter().map(|r| r.n_windows).sum();
    let c: usize = rows.iter().map(|r| r.n_correct).sum();
    (n > 0).then(|| c as f64 / n as f64)
}

/// Mean of subject accuracies at each (method, regime, window), subjects with no windows skipped.
pub fn mean_over_subjects(scores: &[SubjectScore]) -> Vec<(Method, Regime, f64, f64)> {
    let mut groups: Vec<((Method, Regime, u64), Vec<f64>)> = Vec::new();
    for s in scores.iter().filter(|s| s.accuracy.is_finite()) {
        let k = (s.method, s.regime, s.window_s.to_bits());
        match groups.iter_mut().find(|g| g.0 == k) {
            Some(g) => g.1.push(s.accuracy),
            None => groups.push((k, vec![s.accuracy])),
        }
    }
    groups
        .into_iter()
        .map(|((m, r, w), v)| (m, r, f64::from_bits(w), v.iter().sum::<f64>() / v.len() as f64))
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MesdRow {
    pub method: Method,
    pub regime: Regime,
    pub subject: String,
    pub mesd_s: Option<f64>,
    pub tau_opt_s: Option<f64>,
    pub censored: bool,
}

/// MESD per (method, regime, subject) from its accuracy-versus-window curve.
pub fn mesd_rows(scores: &[SubjectScore], cfg: &MesdConfig) -> Result<Vec<MesdRow>> {
    let mut curves: Vec<((Method, Regime, String), Vec<(f64, f64)>)> = Vec::new();
    for s in scores.iter().filter(|s| s.accuracy.is_finite()) {
        let k = (s.method, s.regime, s.subject.clone());
        match curves.iter_mut().find(|c| c.0 == k) {
            Some(c) => c.1.push((s.window_s, s.accuracy)),
            None => curves.push((k, vec![(s.window_s, s.accuracy)])),
        }
    }
    curves
        .into_iter()
        .map(|((method, regime, subject), mut pts)| {
            pts.sort_by(|a, b| a.0.total_cmp(&b.0));
            let r = mesd(&pts, cfg)?;
            Ok(MesdRow {
                method,
                regime,
                subject,
                mesd_s: r.mesd_s,
                tau_opt_s: r.tau_opt_s,
                censored: r.censored,
            })
        })
        .collect()
}

fn cell(v: Option<f64>) -> String {
    match v {
        Some(x) if x.is_finite() => format!("{x:.4}"),
        _ => "NA".into(),
    }
}

/// One line per (method, regime): mean accuracy per window, median MESD and
/// the mean LOCO drop when available. Missing entries print as `NA`.
pub fn summary_table(scores: &[SubjectScore], mesd: &[MesdRow], loco: &[(Method, Vec<LocoRow>)]) -> String {
    let mut windows: Vec<f64> = scores.iter().map(|s| s.window_s).collect();
    windows.sort_by(f64::total_cmp);
    windows.dedup();
    let means = mean_over_subjects(scores);
    let mut keys: Vec<(Method, Regime)> = means.iter().map(|m| (m.0, m.1)).collect();
    keys.extend(mesd.iter().map(|m| (m.method, m.regime)));
    keys.sort();
    keys.dedup();

    let mut out = String::from("method,mode");
    for w in &windows {
        out.push_str(&format!(",acc_{w}s"));
    }
    out.push_str(",median_mesd_s,censored,mean_loco_drop\n");
    for (m, r) in keys {
        out.push_str(&format!("{m},{r}"));
        for w in &windows {
            let v = means.iter().find(|x| x.0 == m && x.1 == r && x.2 == *w).map(|x| x.3);
            out.push(',');
            out.push_str(&cell(v));
        }
        let rows: Vec<&MesdRow> = mesd.iter().filter(|x| x.method == m && x.regime == r).collect();
        let mut vals: Vec<f64> = rows.iter().filter_map(|x| x.mesd_s).collect();
        vals.sort_by(f64::total_cmp);
        let median = (!vals.is_empty()).then(|| {
            let k = vals.len();
            if k % 2 == 1 {
                vals[k / 2]
            } else {
                0.5 * (vals[k / 2 - 1] + vals[k / 2])
            }
        });
        let censored = rows.iter().filter(|x| x.censored).count();
        let drop = loco
            .iter()
            .find(|l| l.0 == m)
            .filter(|l| !l.1.is_empty())
            .map(|l| l.1.iter().map(|x| x.accuracy_drop).sum::<f64>() / l.1.len() as f64);
        out.push_str(&format!(
            ",{},{},{}\n",
            cell(median),
            if rows.is_empty() {
                "NA".into()
            } else {
                censored.to_string()
            },
            cell(drop)
        ));
    }
    out
}

/// Subject accuracy per window, one line per (method, mode, subject). Every
/// window seen anywhere gets a column; cells without data print as `NA`.
pub fn subject_table(scores: &[SubjectScore]) -> String {
    let mut windows: Vec<f64> = scores.iter().map(|s| s.window_s).collect();
    windows.sort_by(f64::total_cmp);
    windows.dedup();
    let mut keys: Vec<(Method, Regime, String)> =
        scores.iter().map(|s| (s.method, s.regime, s.subject.clone())).collect();
    keys.sort();
    keys.dedup();
    let mut out = String::from("method,mode,subject");
    for w in &windows {
        out.push_str(&format!(",acc_{w}s"));
    }
    out.push('\n');
    for (m, r, subject) in keys {
        out.push_str(&format!("{m},{r},{subject}"));
        for w in &windows {
            let v = scores
                .iter()
                .find(|s| s.method == m && s.regime == r && s.subject == subject && s.window_s == *w)
                .map(|s| s.accuracy);
            out.push(',');
            out.push_str(&cell(v));
        }
        out.push('\n');
    }
    out
}
