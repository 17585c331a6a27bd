//! CSV serialization and Monte-Carlo aggregation of experiment rows.
//!
//! The CSV layout is fixed and byte-deterministic: floats print as
//! full-precision scientific notation, optional and non-finite values print
//! as empty cells, rows keep runner order. Identical spec plus identical
//! seed therefore yields identical bytes, which is what makes the emitted
//! artifacts diffable across machines.

use std::io;

use crate::run::ResultRow;

/// Column order of the emitted CSV.
pub const CSV_HEADER: &str =
    "scenario,seed,trial,snr_s_db,snr_c_db,sweep,solver,d_s,d_c,d_total,rate,alpha,iterations";

fn fmt_f64(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        String::new()
    }
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_f64).unwrap_or_default()
}

/// Writes the fixed-schema CSV with `\n` line endings.
pub fn write_csv<W: io::Write>(rows: &[ResultRow], out: &mut W) -> io::Result<()> {
    out.write_all(CSV_HEADER.as_bytes())?;
    out.write_all(b"\n")?;
    for r in rows {
        let line = format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
            r.scenario,
            r.seed,
            r.trial,
            fmt_f64(r.snr_s_db),
            fmt_f64(r.snr_c_db),
            fmt_opt(r.sweep),
            r.solver,
            fmt_f64(r.d_s),
            fmt_f64(r.d_c),
            fmt_f64(r.d_total),
            fmt_f64(r.rate),
            fmt_opt(r.alpha),
            r.iterations,
        );
        out.write_all(line.as_bytes())?;
    }
    Ok(())
}

/// The CSV as a string, for tests and in-memory comparisons.
pub fn csv_string(rows: &[ResultRow]) -> String {
    let mut buf = Vec::new();
    write_csv(rows, &mut buf).expect("writing to memory cannot fail");
    String::from_utf8(buf).expect("rows are valid UTF-8")
}

/// Per-(SNR point, sweep coordinate, solver) aggregate over trials.
#[derive(Debug, Clone)]
pub struct SummaryRow {
    pub snr_s_db: f64,
    pub snr_c_db: f64,
    pub sweep: Option<f64>,
    pub solver: String,
    /// Trials aggregated (failed rows are excluded).
    pub samples: usize,
    pub mean_d_s: f64,
    pub mean_d_c: f64,
    pub mean_d_total: f64,
    /// Standard error of the total-distortion mean (0 for a single sample).
    pub stderr_d_total: f64,
    pub mean_rate: f64,
}

/// Groups rows by (snr_s, snr_c, sweep, solver) in first-occurrence order
/// and averages over trials. Failure rows (non-finite totals) are skipped —
/// they are visible in the raw CSV, not in aggregates.
pub fn monte_carlo_summary(rows: &[ResultRow]) -> Vec<SummaryRow> {
    type Key = (u64, u64, Option<u64>, String);
    let mut order: Vec<Key> = Vec::new();
    let mut groups: Vec<Vec<&ResultRow>> = Vec::new();
    for row in rows {
        if !row.d_total.is_finite() {
            continue;
        }
        let key: Key = (
            row.snr_s_db.to_bits(),
            row.snr_c_db.to_bits(),
            row.sweep.map(f64::to_bits),
            row.solver.clone(),
        );
        match order.iter().position(|k| *k == key) {
            Some(idx) => groups[idx].push(row),
            None => {
                order.push(key);
                groups.push(vec![row]);
            }
        }
    }
    groups
        .into_iter()
        .map(|members| {
            let n = members.len();
            let nf = n as f64;
            let mean = |f: fn(&ResultRow) -> f64| members.iter().map(|r| f(r)).sum::<f64>() / nf;
            let mean_d_total = mean(|r| r.d_total);
            let stderr_d_total = if n > 1 {
                let var = members
                    .iter()
                    .map(|r| (r.d_total - mean_d_total).powi(2))
                    .sum::<f64>()
                    / (nf - 1.0);
                (var / nf).sqrt()
            } else {
                0.0
            };
            let first = members[0];
            SummaryRow {
                snr_s_db: first.snr_s_db,
                snr_c_db: first.snr_c_db,
                sweep: first.sweep,
                solver: first.solver.clone(),
                samples: n,
                mean_d_s: mean(|r| r.d_s),
                mean_d_c: mean(|r| r.d_c),
                mean_d_total,
                stderr_d_total,
                mean_rate: mean(|r| r.rate),
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(trial: u64, snr_s: f64, solver: &str, d_total: f64) -> ResultRow {
        ResultRow {
            scenario: "sw-iid",
            seed: 7,
            trial,
            snr_s_db: snr_s,
            snr_c_db: 20.0,
            sweep: None,
            solver: solver.to_string(),
            d_s: 0.25 * d_total,
            d_c: 0.75 * d_total,
            d_total,
            rate: 3.5,
            alpha: None,
            iterations: 12,
        }
    }

    #[test]
    fn csv_layout_is_stable_and_round_trips() {
        let mut sample = row(0, 10.0, "sw_golden", 2.0);
        sample.sweep = Some(0.5);
        sample.alpha = Some(1.0);
        let text = csv_string(&[sample]);
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), CSV_HEADER);
        let fields: Vec<&str> = lines.next().unwrap().split(',').collect();
        assert_eq!(fields.len(), 13);
        assert_eq!(fields[0], "sw-iid");
        assert_eq!(fields[1], "7");
        assert_eq!(fields[5].parse::<f64>().unwrap(), 0.5);
        assert_eq!(fields[6], "sw_golden");
        assert_eq!(fields[9].parse::<f64>().unwrap(), 2.0);
        assert_eq!(fields[11].parse::<f64>().unwrap(), 1.0);
        assert_eq!(fields[12], "12");
    }

    #[test]
    fn failed_rows_serialize_with_empty_numeric_cells() {
        let mut failed = row(1, 0.0, "mgp_failed", f64::NAN);
        failed.d_s = f64::NAN;
        failed.d_c = f64::NAN;
        failed.rate = f64::NAN;
        failed.iterations = 0;
        let text = csv_string(&[failed]);
        let line = text.lines().nth(1).unwrap();
        assert_eq!(line, "sw-iid,7,1,0.0000000000000000e0,2.0000000000000000e1,,mgp_failed,,,,,,0");
    }

    #[test]
    fn summary_averages_within_groups_in_first_seen_order() {
        let rows = vec![
            row(0, 0.0, "dw", 1.0),
            row(0, 10.0, "dw", 5.0),
            row(1, 0.0, "dw", 3.0),
            row(1, 10.0, "dw", 5.0),
            row(0, 0.0, "mgp_failed", f64::NAN),
        ];
        let summary = monte_carlo_summary(&rows);
        assert_eq!(summary.len(), 2, "failed rows form no group");
        assert_eq!(summary[0].snr_s_db, 0.0);
        assert_eq!(summary[0].samples, 2);
        assert_eq!(summary[0].mean_d_total, 2.0);
        // samples 1 and 3: variance 2, stderr √(2/2) = 1
        assert!((summary[0].stderr_d_total - 1.0).abs() < 1e-15);
        assert_eq!(summary[1].snr_s_db, 10.0);
        assert_eq!(summary[1].mean_d_total, 5.0);
        assert_eq!(summary[1].stderr_d_total, 0.0);
    }

    #[test]
    fn single_sample_groups_report_zero_stderr() {
        let summary = monte_carlo_summary(&[row(0, 0.0, "sw", 4.0)]);
        assert_eq!(summary.len(), 1);
        assert_eq!(summary[0].samples, 1);
        assert_eq!(summary[0].stderr_d_total, 0.0);
        assert_eq!(summary[0].mean_d_s, 1.0);
        assert_eq!(summary[0].mean_d_c, 3.0);
    }
}
