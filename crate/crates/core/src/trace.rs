//! Recorded trajectories, containment-error series and decay fits.

use std::io::Write;

use nalgebra::DVector;
use serde::Serialize;

use crate::geometry::hull_distance;
use crate::signals::TimeDomain;

/// Slope a decay fit must beat (per unit time or per step).
pub const DECAY_SLOPE_TOL: f64 = -1e-3;

#[derive(Debug, Clone)]
pub struct TraceSample {
    pub t: f64,
    pub followers: Vec<DVector<f64>>,
    pub leaders: Vec<DVector<f64>>,
    pub hull_distances: Vec<f64>,
    /// `E_r = Σ_i dist(x_i, co_L)`.
    pub containment_error: f64,
    pub estimator_error: f64,
    /// Wheel commands `(v, ω)` per follower (robot runs only).
    pub commands: Option<Vec<(f64, f64)>>,
}

impl TraceSample {
    pub fn new(t: f64, followers: Vec<DVector<f64>>, leaders: Vec<DVector<f64>>, estimator_error: f64) -> Self {
        let hull_distances: Vec<f64> = followers.iter().map(|f| hull_distance(f, &leaders).distance).collect();
        Self {
            t,
            containment_error: hull_distances.iter().sum(),
            followers,
            leaders,
            hull_distances,
            estimator_error,
            commands: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ContainmentTrace {
    pub domain: TimeDomain,
    pub samples: Vec<TraceSample>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DecayFit {
    /// Least-squares slope of `log y` (negative of the rate β).
    pub slope: f64,
    /// `log C`.
    pub intercept: f64,
    pub samples: usize,
    /// The series is identically zero over the fitted window.
    pub reached_zero: bool,
}

impl DecayFit {
    pub fn rate(&self) -> f64 {
        -self.slope
    }

    pub fn constant(&self) -> f64 {
        self.intercept.exp()
    }

    pub fn decaying(&self) -> bool {
        self.reached_zero || (self.samples >= 2 && self.slope < DECAY_SLOPE_TOL)
    }
}

/// Relative rounding floor: values at or below `ZERO_FLOOR` times the local
/// magnitude of the data count as zero.
pub const ZERO_FLOOR: f64 = 1e-12;

fn least_squares(pts: &[(f64, f64)]) -> (f64, f64) {
    let n = pts.len() as f64;
    let mt = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mt).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mt) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mt)
}

/// Fit `log y ≈ intercept + slope·t` over samples with `t ≥ t_0 + frac·(t_end − t_0)`,
/// using `ZERO_FLOOR·max y` as the zero floor.
pub fn fit_log_linear(times: &[f64], values: &[f64], from_fraction: f64) -> DecayFit {
    let floor = ZERO_FLOOR * values.iter().copied().fold(0.0, f64::max);
    fit_log_linear_floored(times, values, &vec![floor; values.len()], from_fraction)
}

/// As [`fit_log_linear`] with a per-sample zero floor.
///
/// Samples at or below their floor are excluded. If the whole window is at the
/// floor the series has reached zero and the fit falls back to the samples of
/// the full series that are above it.
pub fn fit_log_linear_floored(times: &[f64], values: &[f64], floors: &[f64], from_fraction: f64) -> DecayFit {
    let nan = |samples, reached_zero| DecayFit {
        slope: f64::NAN,
        intercept: f64::NAN,
        samples,
        reached_zero,
    };
    let (t0, t1) = match (times.first(), times.last()) {
        (Some(a), Some(b)) => (*a, *b),
        _ => return nan(0, false),
    };
    let cut = t0 + from_fraction * (t1 - t0);
    let rows = || times.iter().zip(values).zip(floors).map(|((t, v), f)| (*t, *v, *f));
    let collect = |from: f64| -> Vec<(f64, f64)> {
        rows().filter(|&(t, v, f)| t >= from && v > f && v > 0.0).map(|(t, v, _)| (t, v.ln())).collect()
    };
    let window_zero = rows().filter(|r| r.0 >= cut).all(|(_, v, f)| v <= f);
    let pts = if window_zero { collect(t0) } else { collect(cut) };
    if pts.len() < 2 {
        return nan(pts.len(), window_zero);
    }
    let (slope, intercept) = least_squares(&pts);
    DecayFit {
        slope,
        intercept,
        samples: pts.len(),
        reached_zero: window_zero,
    }
}

impl ContainmentTrace {
    pub fn times(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.t).collect()
    }

    pub fn errors(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.containment_error).collect()
    }

    pub fn initial_error(&self) -> f64 {
        self.samples.first().map(|s| s.containment_error).unwrap_or(0.0)
    }

    pub fn final_error(&self) -> f64 {
        self.samples.last().map(|s| s.containment_error).unwrap_or(0.0)
    }

    /// `E_r(T_end) / E_r(0)`; zero when both vanish.
    pub fn error_ratio(&self) -> f64 {
        let (a, b) = (self.initial_error(), self.final_error());
        if b == 0.0 {
            0.0
        } else {
            b / a
        }
    }

    /// Rounding floor of `E_r` at each sample, from the magnitude of the positions.
    pub fn error_floors(&self) -> Vec<f64> {
        self.samples
            .iter()
            .map(|s| {
                let scale = s.leaders.iter().chain(&s.followers).map(|x| x.amax()).fold(1.0, f64::max);
                ZERO_FLOOR * scale * s.followers.len() as f64
            })
            .collect()
    }

    pub fn decay_fit(&self) -> DecayFit {
        fit_log_linear_floored(&self.times(), &self.errors(), &self.error_floors(), 0.5)
    }

    pub fn estimator_errors(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.estimator_error).collect()
    }

    pub fn estimator_decay_fit(&self) -> DecayFit {
        fit_log_linear(&self.times(), &self.estimator_errors(), 0.0)
    }

    pub fn final_positions(&self) -> &[DVector<f64>] {
        self.samples.last().map(|s| s.followers.as_slice()).unwrap_or(&[])
    }

    /// Long-format CSV: one row per agent and sample.
    ///
    /// Columns: `t, agent, role, x1..xp, hull_distance, containment_error,
    /// estimator_error` and, for robot runs, `v, omega`. Agents are 1-based,
    /// leaders first.
    pub fn write_csv<W: Write>(&self, out: &mut W) -> std::io::Result<()> {
        let Some(first) = self.samples.first() else {
            return Ok(());
        };
        let p = first.leaders.first().or(first.followers.first()).map(|v| v.len()).unwrap_or(0);
        let robot = first.commands.is_some();
        let mut header = vec!["t".to_string(), "agent".into(), "role".into()];
        header.extend((1..=p).map(|c| format!("x{c}")));
        header.extend(["hull_distance", "containment_error", "estimator_error"].map(String::from));
        if robot {
            header.extend(["v", "omega"].map(String::from));
        }
        writeln!(out, "{}", header.join(","))?;
        for s in &self.samples {
            let mm = s.leaders.len();
            for (j, x) in s.leaders.iter().enumerate() {
                write!(out, "{},{},leader", s.t, j + 1)?;
                for v in x.iter() {
                    write!(out, ",{v}")?;
                }
                write!(out, ",0,{},{}", s.containment_error, s.estimator_error)?;
                if robot {
                    write!(out, ",,")?;
                }
                writeln!(out)?;
            }
            for (i, x) in s.followers.iter().enumerate() {
                write!(out, "{},{},follower", s.t, mm + i + 1)?;
                for v in x.iter() {
                    write!(out, ",{v}")?;
                }
                write!(out, ",{},{},{}", s.hull_distances[i], s.containment_error, s.estimator_error)?;
                if let Some(c) = &s.commands {
                    write!(out, ",{},{}", c[i].0, c[i].1)?;
                }
                writeln!(out)?;
            }
        }
        Ok(())
    }
}
