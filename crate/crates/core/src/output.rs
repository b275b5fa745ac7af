//! CSV/JSON export of trajectory logs and the summary record.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{self, Write};
use std::path::Path;

use serde::Serialize;

use crate::scalar::Real;
use crate::simulator::{max_abs, LogRow, TaskKind, TrajectoryLog};

/// Column names of trajectory.csv for `n` agents.
pub fn trajectory_header(kind: TaskKind, n: usize) -> Vec<String> {
    let mut h = vec!["t_s".to_owned()];
    for i in 1..=n {
        for f in ["x_m", "y_m", "theta_rad", "v_mps", "omega_radps", "ux_mps", "uy_mps", "vhat_x_mps", "vhat_y_mps"] {
            h.push(format!("{f}_{i}"));
        }
        if kind == TaskKind::Intercept {
            h.push(format!("ehat_x_m_{i}"));
            h.push(format!("ehat_y_m_{i}"));
        }
    }
    match kind {
        TaskKind::Flock => h.extend(["v0_x_mps", "v0_y_mps"].map(String::from)),
        TaskKind::Intercept => h.extend(
            ["target_x_m", "target_y_m", "target_vx_mps", "target_vy_mps"].map(String::from),
        ),
    }
    h
}

fn trajectory_record<T: Real>(kind: TaskKind, row: &LogRow<T>) -> Vec<String> {
    let mut r = vec![row.time.to_string()];
    for a in &row.agents {
        let e = &a.estimates;
        for x in [
            a.pose.x,
            a.pose.y,
            a.pose.theta,
            a.command.v,
            a.command.omega,
            a.u.x,
            a.u.y,
            e.velocity.x,
            e.velocity.y,
        ] {
            r.push(x.to_string());
        }
        if kind == TaskKind::Intercept {
            r.push(e.error.x.to_string());
            r.push(e.error.y.to_string());
        }
    }
    match (kind, row.target) {
        (TaskKind::Intercept, Some(s)) => {
            for x in [s.p.x, s.p.y, s.v.x, s.v.y] {
                r.push(x.to_string());
            }
        }
        _ => {
            r.push(row.reference_velocity.x.to_string());
            r.push(row.reference_velocity.y.to_string());
        }
    }
    r
}

/// Column names of metrics.csv.
pub fn metrics_header<T>(log: &TrajectoryLog<T>) -> Vec<String> {
    let mut h = vec!["t_s".to_owned()];
    h.extend(log.edges.iter().map(|e| e.label()));
    h.extend((1..=log.n).map(|i| format!("theta_err_{i}")));
    h.extend((1..=log.n).map(|i| format!("vhat_err_{i}")));
    if log.kind == TaskKind::Intercept {
        h.extend((1..=log.n).map(|i| format!("ehat_err_{i}")));
        h.push("eT_norm".to_owned());
        h.push("target_in_hull".to_owned());
    }
    h.push("shape_distance".to_owned());
    h
}

fn metrics_record<T: Real>(row: &LogRow<T>) -> Vec<String> {
    let m = &row.metrics;
    let mut r = vec![row.time.to_string()];
    r.extend(m.edge_errors.iter().map(T::to_string));
    r.extend(m.heading_errors.iter().map(T::to_string));
    r.extend(m.velocity_estimate_errors.iter().map(T::to_string));
    if let Some(errs) = &m.error_estimate_errors {
        r.extend(errs.iter().map(T::to_string));
    }
    if let Some(e) = m.e_t_norm {
        r.push(e.to_string());
    }
    if let Some(inside) = m.target_in_hull {
        r.push(u8::from(inside).to_string());
    }
    r.push(m.shape_distance.to_string());
    r
}

pub fn write_trajectory_csv<T: Real, W: Write>(log: &TrajectoryLog<T>, w: W) -> csv::Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(trajectory_header(log.kind, log.n))?;
    for row in &log.rows {
        out.write_record(trajectory_record(log.kind, row))?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_metrics_csv<T: Real, W: Write>(log: &TrajectoryLog<T>, w: W) -> csv::Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(metrics_header(log))?;
    for row in &log.rows {
        out.write_record(metrics_record(row))?;
    }
    out.flush()?;
    Ok(())
}

/// Per sample interval: time at the interval midpoint and
/// max_i ‖Δp_i/Δt − v_ref‖ with v_ref averaged over the interval ends.
pub fn velocity_tracking_errors<T: Real>(log: &TrajectoryLog<T>) -> Vec<(f64, f64)> {
    log.rows
        .windows(2)
        .map(|w| {
            let (a, b) = (&w[0], &w[1]);
            let h = b.time - a.time;
            let reference = (a.reference_velocity + b.reference_velocity) * T::of(0.5);
            let err = a
                .agents
                .iter()
                .zip(&b.agents)
                .map(|(p, q)| ((q.pose.position() - p.pose.position()) * h.recip() - reference).norm())
                .fold(T::zero(), T::max);
            (((a.time + b.time) * T::of(0.5)).to_f64_lossy(), err.to_f64_lossy())
        })
        .collect()
}

/// Error metrics at one instant, or their maxima over a window.
#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct MetricValues {
    pub max_edge_error_m: f64,
    pub max_heading_error_rad: f64,
    pub max_velocity_estimate_error_mps: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_error_estimate_error_m: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub e_t_norm_m: Option<f64>,
    pub shape_distance_m: f64,
    /// At an instant: containment; over a window: containment throughout.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub target_in_hull: Option<bool>,
}

impl MetricValues {
    fn at<T: Real>(row: &LogRow<T>) -> Self {
        let m = &row.metrics;
        Self {
            max_edge_error_m: m.max_edge_error().to_f64_lossy(),
            max_heading_error_rad: m.max_heading_error().to_f64_lossy(),
            max_velocity_estimate_error_mps: m.max_velocity_estimate_error().to_f64_lossy(),
            max_error_estimate_error_m: m.error_estimate_errors.as_deref().map(|e| max_abs(e).to_f64_lossy()),
            e_t_norm_m: m.e_t_norm.map(T::to_f64_lossy),
            shape_distance_m: m.shape_distance.to_f64_lossy(),
            target_in_hull: m.target_in_hull,
        }
    }

    fn worst(self, other: Self) -> Self {
        let opt_max = |a: Option<f64>, b: Option<f64>| match (a, b) {
            (Some(a), Some(b)) => Some(a.max(b)),
            (a, b) => a.or(b),
        };
        Self {
            max_edge_error_m: self.max_edge_error_m.max(other.max_edge_error_m),
            max_heading_error_rad: self.max_heading_error_rad.max(other.max_heading_error_rad),
            max_velocity_estimate_error_mps: self
                .max_velocity_estimate_error_mps
                .max(other.max_velocity_estimate_error_mps),
            max_error_estimate_error_m: opt_max(self.max_error_estimate_error_m, other.max_error_estimate_error_m),
            e_t_norm_m: opt_max(self.e_t_norm_m, other.e_t_norm_m),
            shape_distance_m: self.shape_distance_m.max(other.shape_distance_m),
            target_in_hull: match (self.target_in_hull, other.target_in_hull) {
                (Some(a), Some(b)) => Some(a && b),
                (a, b) => a.or(b),
            },
        }
    }
}

/// Contents of summary.json.
#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct Summary {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scenario: Option<String>,
    pub mode: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub notes: Option<String>,
    pub seed: Option<u64>,
    pub n: usize,
    pub dt_s: f64,
    pub sample_every: usize,
    pub rows: usize,
    pub settle_time_s: f64,
    pub initial_shape_distance_m: Option<f64>,
    /// ‖z(0)‖, the squared-distance error vector at t = 0.
    pub initial_z_norm_m2: Option<f64>,
    pub heading_jumps: usize,
    pub initial: Option<MetricValues>,
    #[serde(rename = "final")]
    pub last: Option<MetricValues>,
    /// Maxima over samples with t ≥ settle_time_s; absent if none.
    pub after_settle: Option<MetricValues>,
    /// Max over t ≥ settle_time_s of the finite-difference velocity tracking error.
    pub max_velocity_tracking_error_after_settle_mps: Option<f64>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
    /// Flat aliases such as "max_edge_error_after_20s".
    #[serde(flatten)]
    pub headline: BTreeMap<String, f64>,
}

impl Summary {
    pub fn from_log<T: Real>(log: &TrajectoryLog<T>, distances: &[T], settle_time_s: f64) -> Self {
        let settle = |t: T| t.to_f64_lossy() >= settle_time_s - 1e-9;
        let after = log
            .rows
            .iter()
            .filter(|r| settle(r.time))
            .map(MetricValues::at)
            .reduce(MetricValues::worst);
        let tracking = velocity_tracking_errors(log)
            .into_iter()
            .filter(|&(t, _)| t >= settle_time_s)
            .map(|(_, e)| e)
            .reduce(f64::max);
        let first = log.rows.first();
        let initial_z_norm_m2 = first.map(|r| {
            r.metrics
                .edge_errors
                .iter()
                .zip(distances)
                .map(|(&e, &d)| {
                    // ‖p‖² − d² = e (e + 2d)
                    let z = e * (e + d + d);
                    z * z
                })
                .fold(T::zero(), |s, x| s + x)
                .sqrt()
                .to_f64_lossy()
        });
        let key = |name: &str| format!("{name}_after_{settle_time_s}s");
        let mut headline = BTreeMap::new();
        if let Some(a) = &after {
            headline.insert(key("max_edge_error"), a.max_edge_error_m);
            headline.insert(key("max_heading_error"), a.max_heading_error_rad);
            headline.insert(key("max_velocity_estimate_error"), a.max_velocity_estimate_error_mps);
            if let Some(e) = a.e_t_norm_m {
                headline.insert(key("max_eT_norm"), e);
            }
        }
        if let Some(e) = tracking {
            headline.insert(key("max_velocity_tracking_error"), e);
        }
        Self {
            mode: match log.kind {
                TaskKind::Flock => "flock",
                TaskKind::Intercept => "intercept",
            }
            .to_owned(),
            seed: log.seed,
            n: log.n,
            dt_s: log.dt.to_f64_lossy(),
            sample_every: log.sample_every,
            rows: log.rows.len(),
            settle_time_s,
            initial_shape_distance_m: first.map(|r| r.metrics.shape_distance.to_f64_lossy()),
            initial_z_norm_m2,
            heading_jumps: log.heading_jumps,
            initial: first.map(MetricValues::at),
            last: log.rows.last().map(MetricValues::at),
            after_settle: after,
            max_velocity_tracking_error_after_settle_mps: tracking,
            headline,
            ..Self::default()
        }
    }
}

/// Writes trajectory.csv, metrics.csv and summary.json into `dir`.
pub fn write_outputs<T: Real>(dir: &Path, log: &TrajectoryLog<T>, summary: &Summary) -> io::Result<()> {
    fs::create_dir_all(dir)?;
    let csv_err = |e: csv::Error| io::Error::other(e.to_string());
    write_trajectory_csv(log, io::BufWriter::new(File::create(dir.join("trajectory.csv"))?)).map_err(csv_err)?;
    write_metrics_csv(log, io::BufWriter::new(File::create(dir.join("metrics.csv"))?)).map_err(csv_err)?;
    let mut f = File::create(dir.join("summary.json"))?;
    serde_json::to_writer_pretty(&mut f, summary)?;
    writeln!(f)?;
    Ok(())
}
