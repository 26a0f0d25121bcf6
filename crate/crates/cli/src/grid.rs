//! Grid arguments: `lo:hi:count` (inclusive, evenly spaced) or a
//! comma-separated list.

pub fn parse_grid(text: &str) -> Result<Vec<f64>, String> {
    let text = text.trim();
    if text.is_empty() {
        return Err("empty grid".into());
    }
    let number = |s: &str| -> Result<f64, String> {
        let v: f64 = s.trim().parse().map_err(|_| format!("`{s}` is not a number"))?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(format!("`{s}` is not finite"))
        }
    };
    if text.contains(':') {
        let parts: Vec<&str> = text.split(':').collect();
        let [lo, hi, count] = parts[..] else {
            return Err(format!("`{text}`: expected lo:hi:count"));
        };
        let (lo, hi) = (number(lo)?, number(hi)?);
        let count: usize = count
            .trim()
            .parse()
            .map_err(|_| format!("`{count}` is not a point count"))?;
        return match count {
            0 => Err("grid count must be positive".into()),
            1 if lo == hi => Ok(vec![lo]),
            1 => Err(format!("`{text}`: a single point needs lo = hi")),
            _ if hi < lo => Err(format!("`{text}`: hi must not be below lo")),
            _ => {
                let step = (hi - lo) / (count - 1) as f64;
                // The last point is hi exactly.
                Ok((0..count)
                    .map(|k| if k + 1 == count { hi } else { lo + k as f64 * step })
                    .collect())
            }
        };
    }
    text.split(',').map(number).collect()
}
