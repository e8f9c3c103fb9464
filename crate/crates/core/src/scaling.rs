//! Finite-size scaling: disorder averaging, the data-collapse fit
//! x = N^{1/ν} (h − h_c), and phase-boundary extraction from averaged
//! network outputs.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum ScalingError {
    #[error("no data points given")]
    EmptyInput,
    #[error("mismatched lengths: {0} h values vs {1} samples")]
    MismatchedLengths(usize, usize),
    #[error("need at least two curves to collapse")]
    TooFewCurves,
    #[error("curves share no overlapping scaled range anywhere on the search grid")]
    NoOverlap,
    #[error("invalid search grid: {0}")]
    InvalidGrid(String),
    #[error("curve never crosses p = {0}")]
    NotCrossed(f64),
}

/// Disorder-averaged observable on an h grid for one system size.
#[derive(Debug, Clone)]
pub struct AveragedCurve {
    pub h: Vec<f64>,
    pub mean: Vec<f64>,
    /// Sample standard deviation per point (0 for a single sample).
    pub std: Vec<f64>,
    pub count: Vec<usize>,
}

/// Mean and sample standard deviation per h value. `samples[i]` holds
/// all realization values at `h[i]`.
pub fn disorder_average(h: &[f64], samples: &[Vec<f64>]) -> Result<AveragedCurve, ScalingError> {
    if h.is_empty() {
        return Err(ScalingError::EmptyInput);
    }
    if h.len() != samples.len() {
        return Err(ScalingError::MismatchedLengths(h.len(), samples.len()));
    }
    let mut mean = Vec::with_capacity(h.len());
    let mut std = Vec::with_capacity(h.len());
    let mut count = Vec::with_capacity(h.len());
    for vals in samples {
        if vals.is_empty() {
            return Err(ScalingError::EmptyInput);
        }
        let n = vals.len() as f64;
        let m = vals.iter().sum::<f64>() / n;
        let s = if vals.len() > 1 {
            (vals.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        mean.push(m);
        std.push(s);
        count.push(vals.len());
    }
    Ok(AveragedCurve {
        h: h.to_vec(),
        mean,
        std,
        count,
    })
}

#[derive(Debug, Clone, Copy)]
pub struct CollapseResult {
    pub h_c: f64,
    pub nu: f64,
    /// Mean squared deviation from the interpolated master curve.
    pub quality: f64,
    /// Half-widths where the quality doubles along each axis.
    pub h_c_err: f64,
    pub nu_err: f64,
}

/// Search grid for the collapse fit.
#[derive(Debug, Clone, Copy)]
pub struct CollapseGrid {
    pub h_c_min: f64,
    pub h_c_max: f64,
    pub h_c_step: f64,
    pub nu_min: f64,
    pub nu_max: f64,
    pub nu_step: f64,
}

impl Default for CollapseGrid {
    fn default() -> Self {
        CollapseGrid {
            h_c_min: 0.5,
            h_c_max: 6.0,
            h_c_step: 0.1,
            nu_min: 0.5,
            nu_max: 3.0,
            nu_step: 0.05,
        }
    }
}

impl CollapseGrid {
    fn validate(&self) -> Result<(), ScalingError> {
        if !(self.h_c_step > 0.0 && self.nu_step > 0.0) {
            return Err(ScalingError::InvalidGrid("steps must be positive".into()));
        }
        if self.h_c_max < self.h_c_min || self.nu_max < self.nu_min {
            return Err(ScalingError::InvalidGrid("empty ranges".into()));
        }
        if self.nu_min <= 0.0 {
            return Err(ScalingError::InvalidGrid("nu must be positive".into()));
        }
        Ok(())
    }
}

fn grid_values(min: f64, max: f64, step: f64) -> Vec<f64> {
    let n = ((max - min) / step).round() as usize;
    (0..=n).map(|k| min + k as f64 * step).collect()
}

/// One curve rescaled to (x, y) with x sorted ascending.
fn rescale(n_sites: usize, curve: &AveragedCurve, h_c: f64, nu: f64) -> Vec<(f64, f64)> {
    let factor = (n_sites as f64).powf(1.0 / nu);
    let mut pts: Vec<(f64, f64)> = curve
        .h
        .iter()
        .zip(&curve.mean)
        .map(|(&h, &y)| (factor * (h - h_c), y))
        .collect();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    pts
}

fn interpolate(pts: &[(f64, f64)], x: f64) -> Option<f64> {
    if pts.len() < 2 || x < pts[0].0 || x > pts[pts.len() - 1].0 {
        return None;
    }
    let j = pts.partition_point(|p| p.0 < x).min(pts.len() - 1).max(1);
    let (x0, y0) = pts[j - 1];
    let (x1, y1) = pts[j];
    if x1 == x0 {
        return Some(0.5 * (y0 + y1));
    }
    Some(y0 + (y1 - y0) * (x - x0) / (x1 - x0))
}

/// Mean squared deviation of every point from the other curves,
/// evaluated where their scaled ranges overlap. `None` when no point of
/// any curve falls inside another curve's range.
fn collapse_quality(curves: &[(usize, AveragedCurve)], h_c: f64, nu: f64) -> Option<f64> {
    let scaled: Vec<Vec<(f64, f64)>> = curves
        .iter()
        .map(|(n, c)| rescale(*n, c, h_c, nu))
        .collect();
    let mut sum = 0.0;
    let mut count = 0usize;
    for (i, pts) in scaled.iter().enumerate() {
        for &(x, y) in pts {
            for (j, other) in scaled.iter().enumerate() {
                if i == j {
                    continue;
                }
                if let Some(y_ref) = interpolate(other, x) {
                    let d = y - y_ref;
                    sum += d * d;
                    count += 1;
                }
            }
        }
    }
    (count > 0).then(|| sum / count as f64)
}

/// Grid search for (h_c, ν), one local refinement pass at a tenth of the
/// step, and quality-doubling error bars.
pub fn collapse_fit(
    curves: &[(usize, AveragedCurve)],
    grid: &CollapseGrid,
) -> Result<CollapseResult, ScalingError> {
    if curves.len() < 2 {
        return Err(ScalingError::TooFewCurves);
    }
    for (_, c) in curves {
        if c.h.is_empty() {
            return Err(ScalingError::EmptyInput);
        }
    }
    grid.validate()?;

    let search = |h_cs: &[f64], nus: &[f64]| -> Option<(f64, f64, f64)> {
        let mut best: Option<(f64, f64, f64)> = None;
        for &h_c in h_cs {
            for &nu in nus {
                if let Some(q) = collapse_quality(curves, h_c, nu) {
                    if best.map_or(true, |(_, _, bq)| q < bq) {
                        best = Some((h_c, nu, q));
                    }
                }
            }
        }
        best
    };

    let coarse = search(
        &grid_values(grid.h_c_min, grid.h_c_max, grid.h_c_step),
        &grid_values(grid.nu_min, grid.nu_max, grid.nu_step),
    )
    .ok_or(ScalingError::NoOverlap)?;

    let fine_h = grid_values(
        (coarse.0 - grid.h_c_step).max(grid.h_c_min),
        (coarse.0 + grid.h_c_step).min(grid.h_c_max),
        grid.h_c_step / 10.0,
    );
    let fine_nu = grid_values(
        (coarse.1 - grid.nu_step).max(grid.nu_min),
        (coarse.1 + grid.nu_step).min(grid.nu_max),
        grid.nu_step / 10.0,
    );
    let (h_c, nu, quality) = search(&fine_h, &fine_nu).unwrap_or(coarse);

    let h_c_err = doubling_half_width(
        |v| collapse_quality(curves, v, nu),
        h_c,
        quality,
        grid.h_c_step / 10.0,
        grid.h_c_max - grid.h_c_min,
    );
    let nu_err = doubling_half_width(
        |v| collapse_quality(curves, h_c, v),
        nu,
        quality,
        grid.nu_step / 10.0,
        grid.nu_max - grid.nu_min,
    );

    Ok(CollapseResult {
        h_c,
        nu,
        quality,
        h_c_err,
        nu_err,
    })
}

/// Distance from `center` at which the quality first exceeds twice its
/// minimum, averaged over both directions; never smaller than `step`.
fn doubling_half_width(
    quality_at: impl Fn(f64) -> Option<f64>,
    center: f64,
    q_min: f64,
    step: f64,
    span: f64,
) -> f64 {
    let target = 2.0 * q_min.max(1e-300);
    let mut widths = Vec::new();
    for dir in [-1.0, 1.0] {
        let mut k = 1usize;
        loop {
            let d = k as f64 * step;
            if d > span {
                break;
            }
            match quality_at(center + dir * d) {
                Some(q) if q > target => {
                    widths.push(d);
                    break;
                }
                Some(_) => {}
                None => break,
            }
            k += 1;
        }
    }
    if widths.is_empty() {
        span
    } else {
        (widths.iter().sum::<f64>() / widths.len() as f64).max(step)
    }
}

/// h at which the averaged curve crosses `level`, by linear
/// interpolation between the last point below and the first above.
pub fn crossing_point(curve: &AveragedCurve, level: f64) -> Result<f64, ScalingError> {
    if curve.h.is_empty() {
        return Err(ScalingError::EmptyInput);
    }
    for w in 0..curve.h.len() - 1 {
        let (y0, y1) = (curve.mean[w], curve.mean[w + 1]);
        if (y0 - level) * (y1 - level) <= 0.0 && y0 != y1 {
            let t = (level - y0) / (y1 - y0);
            return Ok(curve.h[w] + t * (curve.h[w + 1] - curve.h[w]));
        }
        if y0 == level && y1 == level {
            return Ok(curve.h[w]);
        }
    }
    Err(ScalingError::NotCrossed(level))
}

/// Phase boundary estimate: the h where the averaged p_mbl curve
/// crosses 1/2.
pub fn phase_boundary(curve: &AveragedCurve) -> Result<f64, ScalingError> {
    crossing_point(curve, 0.5)
}

/// Width of the uncertain region: distance in h between the 0.1 and 0.9
/// crossings of the averaged p_mbl curve.
pub fn uncertainty_width(curve: &AveragedCurve) -> Result<f64, ScalingError> {
    let lo = crossing_point(curve, 0.1)?;
    let hi = crossing_point(curve, 0.9)?;
    Ok((hi - lo).abs())
}
