//! Parameter grids given as `start:stop:step` or a single value.

use anyhow::{bail, Context, Result};

/// Parses a grid spec. Endpoints are inclusive up to half a step of rounding,
/// and points are snapped to 12 decimal places so that `0:1:0.1` yields
/// exactly the doubles nearest to 0, 0.1, …, 1.
pub fn parse(spec: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = spec.split(':').collect();
    let num = |s: &str| -> Result<f64> {
        let v: f64 = s
            .trim()
            .parse()
            .with_context(|| format!("invalid number '{s}' in grid '{spec}'"))?;
        if !v.is_finite() {
            bail!("non-finite value in grid '{spec}'");
        }
        Ok(v)
    };
    let values = match parts.as_slice() {
        [v] => vec![num(v)?],
        [start, stop, step] => {
            let (start, stop, step) = (num(start)?, num(stop)?, num(step)?);
            if step <= 0.0 {
                bail!("grid step must be positive in '{spec}'");
            }
            if stop < start {
                bail!("grid stop is below start in '{spec}'");
            }
            let n = ((stop - start) / step + 0.5).floor() as usize;
            (0..=n)
                .map(|k| snap(start + k as f64 * step).min(stop.max(start)))
                .collect()
        }
        _ => bail!("malformed grid '{spec}', expected start:stop:step or a single value"),
    };
    if let Some(v) = values.iter().find(|v| !(0.0..=1.0).contains(*v)) {
        bail!("grid value {v} outside [0, 1] in '{spec}'");
    }
    Ok(values)
}

fn snap(x: f64) -> f64 {
    (x * 1e12).round() / 1e12
}
