//! Parsers for grid and list arguments.

use jsdknn_core::Alpha;

// Newtypes keep clap from treating the parsed vectors as repeated arguments.
#[derive(Debug, Clone, PartialEq)]
pub struct KGrid(pub Vec<usize>);

#[derive(Debug, Clone, PartialEq)]
pub struct AlphaGrid(pub Vec<Alpha>);

#[derive(Debug, Clone, PartialEq)]
pub struct Sizes(pub Vec<(usize, usize)>);

pub fn k_grid(s: &str) -> Result<KGrid, String> {
    parse_k_grid(s).map(KGrid)
}

pub fn alpha_grid(s: &str) -> Result<AlphaGrid, String> {
    parse_alpha_grid(s).map(AlphaGrid)
}

pub fn sizes(s: &str) -> Result<Sizes, String> {
    parse_sizes(s).map(Sizes)
}

/// `"2..10"` (inclusive), `"2,4,8"` or `"5"`.
pub fn parse_k_grid(s: &str) -> Result<Vec<usize>, String> {
    let s = s.trim();
    let values: Vec<usize> = if let Some((lo, hi)) = s.split_once("..") {
        let lo = parse_usize(lo)?;
        let hi = parse_usize(hi.trim_start_matches('='))?;
        if lo > hi {
            return Err(format!("empty range {s}"));
        }
        (lo..=hi).collect()
    } else {
        s.split(',').map(parse_usize).collect::<Result<_, _>>()?
    };
    if values.contains(&0) {
        return Err("k must be at least 1".into());
    }
    Ok(values)
}

fn parse_usize(s: &str) -> Result<usize, String> {
    s.trim().parse().map_err(|_| format!("'{s}' is not a non-negative integer"))
}

fn parse_f64(s: &str) -> Result<f64, String> {
    let v: f64 = s.trim().parse().map_err(|_| format!("'{s}' is not a number"))?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(format!("'{s}' is not finite"))
    }
}

/// Rounds away accumulated step error so `-1:1:0.1` yields exactly `0.3`.
fn snap(v: f64) -> f64 {
    let s = (v * 1e12).round() / 1e12;
    if s == 0.0 {
        0.0
    } else {
        s
    }
}

/// `"start:end:step"` (inclusive), `"0,0.5,1"` or `"0.5"`.
pub fn parse_alpha_grid(s: &str) -> Result<Vec<Alpha>, String> {
    let s = s.trim();
    let parts: Vec<&str> = s.split(':').collect();
    let values: Vec<f64> = match parts.as_slice() {
        [start, end, step] => {
            let (start, end, step) = (parse_f64(start)?, parse_f64(end)?, parse_f64(step)?);
            if step <= 0.0 {
                return Err("step must be positive".into());
            }
            if start > end {
                return Err(format!("empty range {s}"));
            }
            let count = ((end - start) / step + 1e-9).floor() as usize;
            (0..=count).map(|i| snap(start + i as f64 * step)).collect()
        }
        [_] => s.split(',').map(|v| parse_f64(v).map(snap)).collect::<Result<_, _>>()?,
        _ => return Err(format!("'{s}' is not a list or start:end:step range")),
    };
    values
        .into_iter()
        .map(|v| Alpha::new(v).map_err(|e| e.to_string()))
        .collect()
}

/// `"500x10,1000x15"`.
pub fn parse_sizes(s: &str) -> Result<Vec<(usize, usize)>, String> {
    s.split(',')
        .map(|item| {
            let (n, d) = item
                .trim()
                .split_once(['x', 'X'])
                .ok_or_else(|| format!("'{item}' is not of the form NxD"))?;
            Ok((parse_usize(n)?, parse_usize(d)?))
        })
        .collect()
}

/// `"a,b,c"` into three positive numbers.
pub fn parse_triple(s: &str) -> Result<[f64; 3], String> {
    let v: Vec<f64> = s.split(',').map(parse_f64).collect::<Result<_, _>>()?;
    <[f64; 3]>::try_from(v).map_err(|_| format!("'{s}' does not have three parts"))
}
