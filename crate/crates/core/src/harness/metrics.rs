use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::Write;
use std::path::Path;

use crate::credit::Mechanism;
use crate::error::{Error, ParseErrorKind, Result};

pub const CSV_HEADER: &str = "run,step,mechanism,train_loss,val_accuracy,recon_loss,synth_mse,diverged";

/// One row per (run, eval point). A diverged run ends with a row at the step
/// it diverged, with `diverged` set and `val_accuracy` empty.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsRecord {
    pub run: usize,
    pub step: u64,
    pub mechanism: Mechanism,
    /// Mean task loss over the steps since the previous record.
    pub train_loss: Option<f64>,
    pub val_accuracy: Option<f64>,
    pub recon_loss: Option<f64>,
    pub synth_mse: Option<f64>,
    pub diverged: bool,
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(String::new, |x| x.to_string())
}

impl MetricsRecord {
    pub fn to_csv_line(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{}",
            self.run,
            self.step,
            self.mechanism,
            opt(self.train_loss),
            opt(self.val_accuracy),
            opt(self.recon_loss),
            opt(self.synth_mse),
            u8::from(self.diverged)
        )
    }
}

pub fn to_csv(records: &[MetricsRecord]) -> String {
    let mut s = String::with_capacity(64 * (records.len() + 1));
    s.push_str(CSV_HEADER);
    s.push('\n');
    for r in records {
        s.push_str(&r.to_csv_line());
        s.push('\n');
    }
    s
}

pub fn write_csv(path: &Path, records: &[MetricsRecord]) -> Result<()> {
    let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(to_csv(records).as_bytes())
        .map_err(|e| Error::io(path, e))
}

fn csv_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        offset: line,
        kind: ParseErrorKind::Csv(msg.into()),
    }
}

/// Inverse of [`to_csv`]. Parse errors carry the 1-based line number as
/// their offset.
pub fn parse_csv(text: &str) -> Result<Vec<MetricsRecord>> {
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h == CSV_HEADER => {}
        _ => return Err(csv_err(1, "missing or wrong header")),
    }
    let mut out = Vec::new();
    for (i, line) in lines.enumerate() {
        let n = i + 2;
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 8 {
            return Err(csv_err(n, format!("expected 8 fields, got {}", f.len())));
        }
        let num = |s: &str| -> Result<Option<f64>> {
            if s.is_empty() {
                Ok(None)
            } else {
                s.parse().map(Some).map_err(|_| csv_err(n, format!("bad number `{s}`")))
            }
        };
        out.push(MetricsRecord {
            run: f[0].parse().map_err(|_| csv_err(n, "bad run"))?,
            step: f[1].parse().map_err(|_| csv_err(n, "bad step"))?,
            mechanism: f[2].parse().map_err(|_| csv_err(n, "bad mechanism"))?,
            train_loss: num(f[3])?,
            val_accuracy: num(f[4])?,
            recon_loss: num(f[5])?,
            synth_mse: num(f[6])?,
            diverged: match f[7] {
                "0" => false,
                "1" => true,
                _ => return Err(csv_err(n, "diverged must be 0 or 1")),
            },
        });
    }
    Ok(out)
}

pub fn read_csv(path: &Path) -> Result<Vec<MetricsRecord>> {
    parse_csv(&std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?)
}

/// Mean validation accuracy at one eval step over the runs that never
/// diverged.
#[derive(Debug, Clone, PartialEq)]
pub struct AggregatePoint {
    pub mechanism: Mechanism,
    pub step: u64,
    pub mean_accuracy: f64,
    /// Sample standard deviation; `None` with fewer than two runs.
    pub std_accuracy: Option<f64>,
    pub runs: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MechanismSummary {
    pub mechanism: Mechanism,
    pub runs: usize,
    pub diverged_runs: usize,
    pub series: Vec<AggregatePoint>,
}

impl MechanismSummary {
    pub fn divergence_rate(&self) -> f64 {
        if self.runs == 0 {
            0.0
        } else {
            self.diverged_runs as f64 / self.runs as f64
        }
    }

    /// Mean accuracy at the last eval step, if any run survived.
    pub fn final_mean_accuracy(&self) -> Option<f64> {
        self.series.last().map(|p| p.mean_accuracy)
    }
}

pub fn mean_and_std(xs: &[f64]) -> (f64, Option<f64>) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let std = (xs.len() > 1).then(|| {
        (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    });
    (mean, std)
}

/// Groups records by mechanism and summarizes them. Runs that diverged are
/// counted and left out of every mean.
pub fn aggregate(records: &[MetricsRecord]) -> Vec<MechanismSummary> {
    let mut by_mech: BTreeMap<&str, (Mechanism, Vec<&MetricsRecord>)> = BTreeMap::new();
    for r in records {
        by_mech
            .entry(r.mechanism.as_str())
            .or_insert_with(|| (r.mechanism, Vec::new()))
            .1
            .push(r);
    }
    let mut out: Vec<MechanismSummary> = by_mech
        .into_values()
        .map(|(mechanism, recs)| {
            let mut runs: BTreeMap<usize, bool> = BTreeMap::new();
            for r in &recs {
                *runs.entry(r.run).or_insert(false) |= r.diverged;
            }
            let mut per_step: BTreeMap<u64, Vec<f64>> = BTreeMap::new();
            for r in &recs {
                if runs[&r.run] {
                    continue;
                }
                if let Some(a) = r.val_accuracy {
                    per_step.entry(r.step).or_default().push(a);
                }
            }
            let series = per_step
                .into_iter()
                .map(|(step, accs)| {
                    let (mean_accuracy, std_accuracy) = mean_and_std(&accs);
                    AggregatePoint {
                        mechanism,
                        step,
                        mean_accuracy,
                        std_accuracy,
                        runs: accs.len(),
                    }
                })
                .collect();
            MechanismSummary {
                mechanism,
                runs: runs.len(),
                diverged_runs: runs.values().filter(|&&d| d).count(),
                series,
            }
        })
        .collect();
    out.sort_by_key(|s| Mechanism::ALL.iter().position(|m| *m == s.mechanism));
    out
}

fn colour(m: Mechanism) -> &'static str {
    match m {
        Mechanism::Baseline => "#1f77b4",
        Mechanism::Synthetic => "#ff7f0e",
        Mechanism::ReinstateExact => "#2ca02c",
        Mechanism::ReinstateApprox => "#d62728",
        Mechanism::Oracle => "#7f7f7f",
    }
}

/// Self-contained SVG line plot of mean validation accuracy against step,
/// one line per mechanism.
pub fn render_svg(summaries: &[MechanismSummary]) -> String {
    let (w, h) = (640.0, 400.0);
    let (left, right, top, bottom) = (60.0, 170.0, 20.0, 50.0);
    let pw = w - left - right;
    let ph = h - top - bottom;
    let max_step = summaries
        .iter()
        .flat_map(|s| s.series.iter().map(|p| p.step))
        .max()
        .unwrap_or(1)
        .max(1) as f64;
    let sx = |step: u64| left + pw * step as f64 / max_step;
    let sy = |acc: f64| top + ph * (1.0 - acc.clamp(0.0, 1.0));

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    for i in 0..=5 {
        let acc = i as f64 / 5.0;
        let y = sy(acc);
        let _ = writeln!(
            s,
            r##"<line x1="{left}" y1="{y}" x2="{}" y2="{y}" stroke="#ddd"/><text x="{}" y="{}" text-anchor="end">{acc:.1}</text>"##,
            left + pw,
            left - 6.0,
            y + 4.0
        );
    }
    for i in 0..=4 {
        let step = (max_step * i as f64 / 4.0).round() as u64;
        let x = sx(step);
        let _ = writeln!(
            s,
            r#"<text x="{x}" y="{}" text-anchor="middle">{step}</text>"#,
            top + ph + 18.0
        );
    }
    let _ = writeln!(
        s,
        r#"<rect x="{left}" y="{top}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#
    );
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle">step</text>"#,
        left + pw / 2.0,
        h - 10.0
    );
    let _ = writeln!(
        s,
        r#"<text x="16" y="{}" text-anchor="middle" transform="rotate(-90 16 {})">validation accuracy</text>"#,
        top + ph / 2.0,
        top + ph / 2.0
    );
    for (i, sum) in summaries.iter().enumerate() {
        let c = colour(sum.mechanism);
        if !sum.series.is_empty() {
            let pts: Vec<String> = sum
                .series
                .iter()
                .map(|p| format!("{:.2},{:.2}", sx(p.step), sy(p.mean_accuracy)))
                .collect();
            let _ = writeln!(
                s,
                r#"<polyline fill="none" stroke="{c}" stroke-width="2" points="{}"/>"#,
                pts.join(" ")
            );
        }
        let ly = top + 14.0 + 18.0 * i as f64;
        let lx = left + pw + 12.0;
        let _ = writeln!(
            s,
            r#"<line x1="{lx}" y1="{}" x2="{}" y2="{}" stroke="{c}" stroke-width="2"/><text x="{}" y="{ly}">{} ({}/{} div.)</text>"#,
            ly - 4.0,
            lx + 18.0,
            ly - 4.0,
            lx + 24.0,
            sum.mechanism,
            sum.diverged_runs,
            sum.runs
        );
    }
    s.push_str("</svg>\n");
    s
}

pub fn write_svg(path: &Path, summaries: &[MechanismSummary]) -> Result<()> {
    std::fs::write(path, render_svg(summaries)).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(run: usize, step: u64, m: Mechanism, acc: Option<f64>, div: bool) -> MetricsRecord {
        MetricsRecord {
            run,
            step,
            mechanism: m,
            train_loss: Some(0.5),
            val_accuracy: acc,
            recon_loss: Some(0.125),
            synth_mse: (m == Mechanism::Synthetic).then_some(1e-3),
            diverged: div,
        }
    }

    #[test]
    fn csv_schema_and_blank_synth() {
        let csv = to_csv(&[rec(0, 10, Mechanism::Baseline, Some(0.25), false)]);
        assert_eq!(csv, format!("{CSV_HEADER}\n0,10,baseline,0.5,0.25,0.125,,0\n"));
    }

    #[test]
    fn csv_round_trip() {
        let recs = vec![
            rec(0, 10, Mechanism::Synthetic, Some(0.1 + 0.2), false),
            rec(1, 7, Mechanism::ReinstateApprox, None, true),
            MetricsRecord {
                train_loss: None,
                ..rec(2, 20, Mechanism::Oracle, Some(1.0 / 3.0), false)
            },
        ];
        assert_eq!(parse_csv(&to_csv(&recs)).unwrap(), recs);
    }

    #[test]
    fn csv_errors_name_line() {
        let bad = format!("{CSV_HEADER}\n0,1,baseline,,,,,0\n0,1,baseline,,,\n");
        assert!(matches!(parse_csv(&bad), Err(Error::Parse { offset: 3, .. })));
        assert!(parse_csv("nope\n").is_err());
    }

    #[test]
    fn hand_built_two_run_mean() {
        let m = Mechanism::ReinstateExact;
        let recs = vec![
            rec(0, 100, m, Some(0.5), false),
            rec(0, 200, m, Some(0.75), false),
            rec(1, 100, m, Some(0.25), false),
            rec(1, 200, m, Some(0.25), false),
        ];
        let agg = aggregate(&recs);
        assert_eq!(agg.len(), 1);
        let s = &agg[0];
        assert_eq!((s.runs, s.diverged_runs), (2, 0));
        assert_eq!(s.series[0].mean_accuracy, 0.375);
        assert_eq!(s.series[1].mean_accuracy, 0.5);
        // sample std of {0.5, 0.25} = sqrt(2·0.125²) = 0.125·√2
        assert_eq!(s.series[0].std_accuracy, Some((2.0f64 * 0.125 * 0.125).sqrt()));
    }

    #[test]
    fn diverged_runs_excluded_and_counted() {
        let m = Mechanism::ReinstateApprox;
        let recs = vec![
            rec(0, 100, m, Some(0.9), false),
            rec(0, 150, m, None, true),
            rec(1, 100, m, Some(0.3), false),
        ];
        let s = &aggregate(&recs)[0];
        assert_eq!((s.runs, s.diverged_runs), (2, 1));
        assert_eq!(s.series.len(), 1);
        assert_eq!(s.series[0].mean_accuracy, 0.3);
        assert_eq!(s.divergence_rate(), 0.5);
    }

    #[test]
    fn identical_runs_mean_equals_single() {
        let m = Mechanism::Oracle;
        let one: Vec<_> = [0.1, 0.4, 0.7]
            .iter()
            .enumerate()
            .map(|(i, &a)| rec(0, i as u64, m, Some(a), false))
            .collect();
        let mut two = one.clone();
        two.extend(one.iter().map(|r| MetricsRecord { run: 1, ..r.clone() }));
        let a = &aggregate(&one)[0].series;
        let b = &aggregate(&two)[0].series;
        for (p, q) in a.iter().zip(b) {
            assert_eq!(p.mean_accuracy, q.mean_accuracy);
            assert_eq!(q.std_accuracy, Some(0.0));
        }
    }

    #[test]
    fn svg_self_contained() {
        let recs = vec![
            rec(0, 100, Mechanism::Baseline, Some(0.5), false),
            rec(0, 200, Mechanism::Baseline, Some(0.6), false),
            rec(0, 100, Mechanism::Synthetic, Some(0.4), false),
        ];
        let svg = render_svg(&aggregate(&recs));
        assert!(svg.starts_with("<svg"));
        assert!(svg.trim_end().ends_with("</svg>"));
        assert!(!svg.contains("href"));
        assert_eq!(svg.matches("<polyline").count(), 2);
    }
}
