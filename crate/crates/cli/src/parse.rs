//! Flag value parsers.

/// Comma-separated reals.
#[derive(Debug, Clone, PartialEq)]
pub struct Reals(pub Vec<f64>);

/// `LO:HI` with `LO < HI`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval(pub f64, pub f64);

/// A finite real, either a decimal literal or a fraction `p/q`.
pub fn parse_real(s: &str) -> Result<f64, String> {
    let s = s.trim();
    let value = match s.split_once('/') {
        Some((p, q)) => {
            let p: f64 = p.trim().parse().map_err(|_| format!("invalid number '{s}'"))?;
            let q: f64 = q.trim().parse().map_err(|_| format!("invalid number '{s}'"))?;
            if q == 0.0 {
                return Err(format!("zero denominator in '{s}'"));
            }
            p / q
        }
        None => s.parse().map_err(|_| format!("invalid number '{s}'"))?,
    };
    if value.is_finite() {
        Ok(value)
    } else {
        Err(format!("number must be finite, got '{s}'"))
    }
}

pub fn parse_list(s: &str) -> Result<Reals, String> {
    let values = s
        .split(',')
        .filter(|t| !t.trim().is_empty())
        .map(parse_real)
        .collect::<Result<Vec<_>, _>>()?;
    if values.is_empty() {
        return Err("empty list".into());
    }
    Ok(Reals(values))
}

pub fn parse_range(s: &str) -> Result<Interval, String> {
    let (lo, hi) = s
        .split_once(':')
        .ok_or_else(|| format!("expected LO:HI, got '{s}'"))?;
    let (lo, hi) = (parse_real(lo)?, parse_real(hi)?);
    if lo < hi {
        Ok(Interval(lo, hi))
    } else {
        Err(format!("empty range '{s}'"))
    }
}
