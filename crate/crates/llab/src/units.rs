//! Duration flags such as `50ms`, `2ms`, `60s`, and window grids such as
//! `100ms:5s:100ms`.

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum UnitError {
    #[error("cannot parse duration {0:?}")]
    BadDuration(String),
    #[error("range {0:?} must be start:end:step with step > 0 and start <= end")]
    BadRange(String),
}

/// A duration in milliseconds. Bare numbers are milliseconds.
pub fn parse_ms(s: &str) -> Result<f64, UnitError> {
    let t = s.trim();
    let (num, scale) = if let Some(n) = t.strip_suffix("ms") {
        (n, 1.0)
    } else if let Some(n) = t.strip_suffix("us") {
        (n, 1e-3)
    } else if let Some(n) = t.strip_suffix("ns") {
        (n, 1e-6)
    } else if let Some(n) = t.strip_suffix("min") {
        (n, 60_000.0)
    } else if let Some(n) = t.strip_suffix('s') {
        (n, 1000.0)
    } else if let Some(n) = t.strip_suffix('h') {
        (n, 3_600_000.0)
    } else {
        (t, 1.0)
    };
    let v: f64 = num.trim().parse().map_err(|_| UnitError::BadDuration(s.to_string()))?;
    if !v.is_finite() || v < 0.0 {
        return Err(UnitError::BadDuration(s.to_string()));
    }
    Ok(v * scale)
}

/// A duration in whole nanoseconds.
pub fn parse_ns(s: &str) -> Result<u64, UnitError> {
    parse_ms(s).map(|ms| (ms * 1e6).round() as u64)
}

/// `start:end:step`, inclusive of `end` when the grid lands on it; a single
/// duration or a comma list is also accepted.
pub fn parse_ms_grid(s: &str) -> Result<Vec<f64>, UnitError> {
    let parts: Vec<&str> = s.split(':').collect();
    match parts.as_slice() {
        [start, end, step] => {
            let (start, end, step) = (parse_ms(start)?, parse_ms(end)?, parse_ms(step)?);
            if !(step > 0.0) || start > end {
                return Err(UnitError::BadRange(s.to_string()));
            }
            let n = ((end - start) / step + 1e-9).floor() as usize;
            // Multiply rather than accumulate so 0.1 s steps stay exact.
            Ok((0..=n).map(|i| start + i as f64 * step).collect())
        }
        [_] => s.split(',').map(parse_ms).collect(),
        _ => Err(UnitError::BadRange(s.to_string())),
    }
}

/// Comma-separated plain numbers such as `0.01,0.05,0.10`.
pub fn parse_f64_list(s: &str) -> Result<Vec<f64>, UnitError> {
    s.split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|_| UnitError::BadDuration(p.to_string())))
        .collect()
}
