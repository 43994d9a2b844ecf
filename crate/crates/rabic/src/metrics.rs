//! Scalar summaries of a run log and the PD-vs-impedance comparison report.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::simulation::SimLog;

/// Fraction of the run treated as the terminal window.
pub const TERMINAL_WINDOW_FRACTION: f64 = 0.2;

/// Scalar summaries of one run.
#[derive(Debug, Clone, Serialize)]
pub struct Metrics {
    /// Peak contact force norm over the run (N).
    pub peak_force: f64,
    /// Mean contact force norm over the last 20% of the run (N).
    pub terminal_mean_force: f64,
    /// RMS of the inner tracking error norm ||theta_r - theta||.
    pub inner_rmse: f64,
    /// RMS of the outer tracking error norm ||theta_d - theta||.
    pub outer_rmse: f64,
    /// RMS of the per-step torque slew (tau[k] - tau[k-1]) / dt, pooled
    /// over joints.
    pub rms_torque_rate: f64,
    /// Largest joint torque magnitude over the run (N m).
    pub max_abs_torque: f64,
    /// Run duration covered by the log (s).
    pub duration: f64,
}

/// Contact force norm of one log row.
fn force_norm(log: &SimLog, row: &[f64], fe0: usize) -> f64 {
    let _ = log;
    (row[fe0] * row[fe0] + row[fe0 + 1] * row[fe0 + 1] + row[fe0 + 2] * row[fe0 + 2]).sqrt()
}

/// Per-sample contact force norms.
pub fn force_series(log: &SimLog) -> Result<Vec<f64>> {
    let fe0 = log.col_index("fe_0")?;
    Ok(log.rows.iter().map(|r| force_norm(log, r, fe0)).collect())
}

pub fn compute_metrics(log: &SimLog) -> Result<Metrics> {
    if log.rows.len() < 2 {
        return Err(Error::Domain(
            "metrics need at least two log rows (torque rate undefined)".into(),
        ));
    }
    let n = log.n;
    let fe0 = log.col_index("fe_0")?;
    let th0 = log.col_index("theta_1")?;
    let thd0 = log.col_index("theta_d_1")?;
    let thr0 = log.col_index("theta_r_1")?;
    let tau0 = log.col_index("tau_1")?;
    let t_col = log.col_index("t")?;

    let rows = &log.rows;
    let m = rows.len();
    let mut peak_force: f64 = 0.0;
    let mut inner_sq = 0.0;
    let mut outer_sq = 0.0;
    let mut max_abs_torque: f64 = 0.0;
    for r in rows {
        peak_force = peak_force.max(force_norm(log, r, fe0));
        let mut inner = 0.0;
        let mut outer = 0.0;
        for i in 0..n {
            let th = r[th0 + i];
            let dr = r[thr0 + i] - th;
            let dd = r[thd0 + i] - th;
            inner += dr * dr;
            outer += dd * dd;
            max_abs_torque = max_abs_torque.max(r[tau0 + i].abs());
        }
        inner_sq += inner;
        outer_sq += outer;
    }
    let inner_rmse = (inner_sq / m as f64).sqrt();
    let outer_rmse = (outer_sq / m as f64).sqrt();

    let start = ((m as f64) * (1.0 - TERMINAL_WINDOW_FRACTION)).floor() as usize;
    let start = start.min(m - 1);
    let tail = &rows[start..];
    let terminal_mean_force =
        tail.iter().map(|r| force_norm(log, r, fe0)).sum::<f64>() / tail.len() as f64;

    let mut rate_sq = 0.0;
    for k in 1..m {
        for i in 0..n {
            let dv = (rows[k][tau0 + i] - rows[k - 1][tau0 + i]) / log.dt;
            rate_sq += dv * dv;
        }
    }
    let rms_torque_rate = (rate_sq / ((m - 1) * n) as f64).sqrt();

    Ok(Metrics {
        peak_force,
        terminal_mean_force,
        inner_rmse,
        outer_rmse,
        rms_torque_rate,
        max_abs_torque,
        duration: rows[m - 1][t_col] - rows[0][t_col],
    })
}

/// Whether a force series is decreasing over the final second: the mean of
/// the second half of that window must fall below the first-half mean by at
/// least 1% (a materiality margin that ignores slow drift and chatter).
pub fn force_decreasing_final_second(log: &SimLog) -> Result<bool> {
    let f = force_series(log)?;
    let steps_per_second = (1.0 / log.dt).round() as usize;
    if f.len() < steps_per_second.max(4) {
        return Err(Error::Domain("log too short to judge the final second".into()));
    }
    let window = &f[f.len() - steps_per_second.min(f.len())..];
    let half = window.len() / 2;
    let mean1 = window[..half].iter().sum::<f64>() / half as f64;
    let mean2 = window[half..].iter().sum::<f64>() / (window.len() - half) as f64;
    Ok(mean2 < mean1 - (1e-6f64).max(0.01 * mean1))
}

/// Side-by-side comparison of a PD run and an impedance-controlled run on
/// the same physical setup.
#[derive(Debug, Clone, Serialize)]
pub struct ComparisonReport {
    pub pd: Metrics,
    pub rabic: Metrics,
    /// rabic terminal-window mean force over the PD one.
    pub terminal_force_ratio: f64,
    pub rabic_force_decreasing_final_second: bool,
    pub pd_force_decreasing_final_second: bool,
}

pub fn compare_runs(pd_log: &SimLog, rabic_log: &SimLog) -> Result<ComparisonReport> {
    if pd_log.geometry_hash != rabic_log.geometry_hash {
        return Err(Error::GeometryMismatch(format!(
            "runs describe different physical setups ({:016x} vs {:016x})",
            pd_log.geometry_hash, rabic_log.geometry_hash
        )));
    }
    let pd = compute_metrics(pd_log)?;
    let rabic = compute_metrics(rabic_log)?;
    let terminal_force_ratio = if pd.terminal_mean_force > 0.0 {
        rabic.terminal_mean_force / pd.terminal_mean_force
    } else {
        f64::INFINITY
    };
    Ok(ComparisonReport {
        terminal_force_ratio,
        rabic_force_decreasing_final_second: force_decreasing_final_second(rabic_log)?,
        pd_force_decreasing_final_second: force_decreasing_final_second(pd_log)?,
        pd,
        rabic,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    /// Build a minimal synthetic log by hand.
    fn synthetic_log(n: usize, rows: Vec<Vec<f64>>, dt: f64, geom: u64) -> SimLog {
        let mut columns = vec!["t".to_string()];
        let per = |name: &str, columns: &mut Vec<String>| {
            for i in 1..=n {
                columns.push(format!("{name}_{i}"));
            }
        };
        per("theta", &mut columns);
        per("theta_dot", &mut columns);
        per("theta_d", &mut columns);
        per("theta_r", &mut columns);
        per("tau", &mut columns);
        for i in 0..6 {
            columns.push(format!("fe_{i}"));
        }
        per("s", &mut columns);
        per("xi1", &mut columns);
        per("xi2", &mut columns);
        per("phi_norm", &mut columns);
        per("psi", &mut columns);
        SimLog {
            columns,
            rows,
            config_hash: 0,
            geometry_hash: geom,
            n,
            dt,
        }
    }

    fn row(n: usize, t: f64, tau: f64, fx: f64) -> Vec<f64> {
        let mut r = vec![t];
        r.extend(std::iter::repeat(0.0).take(4 * n)); // theta..theta_r
        r.extend(std::iter::repeat(tau).take(n));
        r.push(fx);
        r.extend(std::iter::repeat(0.0).take(5));
        r.extend(std::iter::repeat(0.0).take(5 * n));
        r
    }

    #[test]
    fn single_row_rate_is_an_error() {
        let log = synthetic_log(1, vec![row(1, 0.0, 0.0, 0.0)], 0.001, 0);
        assert!(compute_metrics(&log).is_err());
    }

    #[test]
    fn linear_torque_ramp_rate() {
        // tau = a t on each of 2 joints; pooled RMS rate is a.
        let a = 3.0;
        let dt = 0.001;
        let rows: Vec<Vec<f64>> = (0..=100)
            .map(|k| row(2, k as f64 * dt, a * k as f64 * dt, 0.0))
            .collect();
        let log = synthetic_log(2, rows, dt, 0);
        let m = compute_metrics(&log).unwrap();
        assert_relative_eq!(m.rms_torque_rate, a, epsilon = 1e-9);
        assert_relative_eq!(m.max_abs_torque, a * 0.1, epsilon = 1e-9);
    }

    #[test]
    fn terminal_window_mean() {
        // Force 0 for the first 80 rows, 10 for the last 20.
        let dt = 0.001;
        let rows: Vec<Vec<f64>> = (0..100)
            .map(|k| row(1, k as f64 * dt, 0.0, if k >= 80 { 10.0 } else { 0.0 }))
            .collect();
        let log = synthetic_log(1, rows, dt, 0);
        let m = compute_metrics(&log).unwrap();
        assert_relative_eq!(m.terminal_mean_force, 10.0, epsilon = 1e-12);
        assert_relative_eq!(m.peak_force, 10.0, epsilon = 1e-12);
    }

    #[test]
    fn decreasing_detection() {
        let dt = 0.001;
        let decay: Vec<Vec<f64>> = (0..2000)
            .map(|k| row(1, k as f64 * dt, 0.0, 100.0 * (-0.002 * k as f64).exp()))
            .collect();
        let flat: Vec<Vec<f64>> = (0..2000)
            .map(|k| row(1, k as f64 * dt, 0.0, 50.0))
            .collect();
        assert!(force_decreasing_final_second(&synthetic_log(1, decay, dt, 0)).unwrap());
        assert!(!force_decreasing_final_second(&synthetic_log(1, flat, dt, 0)).unwrap());
    }

    #[test]
    fn geometry_mismatch_refused() {
        let dt = 0.001;
        let a = synthetic_log(1, (0..2000).map(|k| row(1, k as f64 * dt, 0.0, 1.0)).collect(), dt, 1);
        let b = synthetic_log(1, (0..2000).map(|k| row(1, k as f64 * dt, 0.0, 1.0)).collect(), dt, 2);
        assert!(matches!(
            compare_runs(&a, &b),
            Err(crate::Error::GeometryMismatch(_))
        ));
    }

    #[test]
    fn comparison_ratio() {
        let dt = 0.001;
        let pd = synthetic_log(1, (0..2000).map(|k| row(1, k as f64 * dt, 0.0, 100.0)).collect(), dt, 7);
        let ra = synthetic_log(1, (0..2000).map(|k| row(1, k as f64 * dt, 0.0, 20.0)).collect(), dt, 7);
        let rep = compare_runs(&pd, &ra).unwrap();
        assert_relative_eq!(rep.terminal_force_ratio, 0.2, epsilon = 1e-12);
        assert!(!rep.pd_force_decreasing_final_second);
    }
}
