use crate::error::{CliError, Result};

/// Parses a parameter grid:
/// `start:stop:step` (inclusive), `log:start:stop:count`, or a comma list.
pub fn parse_grid(spec: &str) -> Result<Vec<f64>> {
    let bad = |message: &str| CliError::Grid {
        spec: spec.to_string(),
        message: message.to_string(),
    };
    let num = |s: &str| -> Result<f64> {
        s.trim()
            .parse::<f64>()
            .ok()
            .filter(|x| x.is_finite())
            .ok_or_else(|| bad(&format!("{s:?} is not a number")))
    };
    let parts: Vec<&str> = spec.split(':').collect();
    let points = match parts.as_slice() {
        ["log", a, b, n] => {
            let (a, b) = (num(a)?, num(b)?);
            let n: usize = n
                .trim()
                .parse()
                .map_err(|_| bad("count must be a positive integer"))?;
            if n == 0 || !(a > 0.0 && b >= a) {
                return Err(bad("need 0 < start <= stop and count >= 1"));
            }
            if n == 1 {
                vec![a]
            } else {
                let (la, lb) = (a.ln(), b.ln());
                (0..n)
                    .map(|i| (la + (lb - la) * i as f64 / (n - 1) as f64).exp())
                    .collect()
            }
        }
        [a, b, step] => {
            let (a, b, step) = (num(a)?, num(b)?, num(step)?);
            if !(step > 0.0) || b < a {
                return Err(bad("need start <= stop and step > 0"));
            }
            let count = ((b - a) / step + 1e-9).floor() as usize + 1;
            // snap to 12 decimals so 0.05 + 3 * 0.15 prints as 0.5
            (0..count)
                .map(|i| ((a + i as f64 * step) * 1e12).round() / 1e12)
                .collect()
        }
        [single] => single.split(',').map(num).collect::<Result<_>>()?,
        _ => {
            return Err(bad(
                "expected start:stop:step, log:start:stop:count or a comma list",
            ))
        }
    };
    if points.is_empty() {
        return Err(bad("grid is empty"));
    }
    Ok(points)
}
