//! Evaluation grids: `start:stop:count`, `log:start:stop:count`, `a,b,c` or a single value.

use supdens_core::{Error, Result};

pub fn parse_grid(spec: &str) -> Result<Vec<f64>> {
    let spec = spec.trim();
    let (log, body) = match spec.strip_prefix("log:") {
        Some(rest) => (true, rest),
        None => (false, spec),
    };
    let num = |s: &str| -> Result<f64> {
        s.trim().parse::<f64>().map_err(|_| Error::Parse(format!("`{s}` is not a number in grid `{spec}`")))
    };
    let parts: Vec<&str> = body.split(':').collect();
    let out = match parts.len() {
        1 if !log => body.split(',').map(num).collect::<Result<Vec<_>>>()?,
        3 => {
            let (a, b) = (num(parts[0])?, num(parts[1])?);
            let n: usize = parts[2]
                .trim()
                .parse()
                .map_err(|_| Error::Parse(format!("grid count `{}` is not a positive integer", parts[2])))?;
            if n == 0 {
                return Err(Error::Domain("grid count must be at least 1".into()));
            }
            if log && !(a > 0.0 && b > 0.0) {
                return Err(Error::Domain("a logarithmic grid needs positive end points".into()));
            }
            let (a0, b0) = if log { (a.ln(), b.ln()) } else { (a, b) };
            (0..n)
                .map(|i| {
                    let t = if n == 1 { 0.0 } else { i as f64 / (n - 1) as f64 };
                    let v = a0 + (b0 - a0) * t;
                    if log {
                        v.exp()
                    } else {
                        v
                    }
                })
                .collect()
        }
        _ => return Err(Error::Parse(format!("cannot read grid `{spec}`"))),
    };
    if out.iter().any(|v| !v.is_finite()) {
        return Err(Error::Domain(format!("grid `{spec}` has non-finite points")));
    }
    Ok(out)
}
