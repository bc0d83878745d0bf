//! Scalars and grids given on the command line.
//!
//! A scalar is a decimal number or a multiple of pi such as `pi/4`,
//! `3pi/2` or `0.5*pi`. A grid is a comma-separated list whose items are
//! scalars or inclusive ranges `start:step:end`.

pub fn parse_scalar(text: &str) -> Result<f64, String> {
    let t = text.trim().replace('π', "pi").to_ascii_lowercase();
    let Some(at) = t.find("pi") else {
        return t.parse::<f64>().map_err(|_| format!("not a number: `{text}`"));
    };
    let head = t[..at].trim().trim_end_matches('*').trim();
    let tail = t[at + 2..].trim();
    let coef = if head.is_empty() {
        1.0
    } else {
        head.parse::<f64>().map_err(|_| format!("bad coefficient in `{text}`"))?
    };
    let factor = if tail.is_empty() {
        1.0
    } else if let Some(d) = tail.strip_prefix('/') {
        1.0 / d.trim().parse::<f64>().map_err(|_| format!("bad divisor in `{text}`"))?
    } else if let Some(m) = tail.strip_prefix('*') {
        m.trim().parse::<f64>().map_err(|_| format!("bad factor in `{text}`"))?
    } else {
        return Err(format!("cannot parse `{text}`"));
    };
    let v = coef * std::f64::consts::PI * factor;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(format!("`{text}` is not finite"))
    }
}

/// Expands a grid. A range whose step points away from its end is empty.
pub fn parse_grid(text: &str) -> Result<Vec<f64>, String> {
    let mut out = Vec::new();
    for item in text.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let parts: Vec<&str> = item.split(':').collect();
        match parts.as_slice() {
            [one] => out.push(parse_scalar(one)?),
            [start, step, end] => {
                let (a, h, b) = (parse_scalar(start)?, parse_scalar(step)?, parse_scalar(end)?);
                if h == 0.0 {
                    return Err(format!("zero step in `{item}`"));
                }
                let span = (b - a) / h;
                if span < -1e-9 {
                    continue;
                }
                let n = (span + 1e-9).floor() as usize;
                for k in 0..=n {
                    let v = if k == n && ((a + n as f64 * h) - b).abs() <= 1e-9 * h.abs() {
                        b
                    } else {
                        a + k as f64 * h
                    };
                    out.push(v);
                }
            }
            _ => return Err(format!("expected `value` or `start:step:end`, got `{item}`")),
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn pi_multiples() {
        assert_eq!(parse_scalar("pi/4").unwrap(), PI / 4.0);
        assert_eq!(parse_scalar("3pi/2").unwrap(), 3.0 * PI / 2.0);
        assert_eq!(parse_scalar("0.5*pi").unwrap(), 0.5 * PI);
        assert_eq!(parse_scalar("π").unwrap(), PI);
        assert_eq!(parse_scalar("1.25").unwrap(), 1.25);
        assert!(parse_scalar("pie").is_err());
        assert!(parse_scalar("x").is_err());
    }

    #[test]
    fn ranges_hit_their_end() {
        let g = parse_grid("1.2:0.2:3.0").unwrap();
        assert_eq!(g.len(), 10);
        assert_eq!(*g.last().unwrap(), 3.0);
        assert_eq!(parse_grid("0:0.125:1").unwrap().len(), 9);
        assert_eq!(parse_grid("pi/4,pi/2, pi").unwrap(), vec![PI / 4.0, PI / 2.0, PI]);
    }

    #[test]
    fn reversed_range_is_empty() {
        assert!(parse_grid("3:0.5:2").unwrap().is_empty());
        assert!(parse_grid("").unwrap().is_empty());
        assert!(parse_grid("1:0:2").is_err());
    }
}
