//! Text format for fields and masks.
//!
//! ```text
//! # nx ny x0 y0 hx hy
//! v(0,0),v(1,0),...,v(nx-1,0)
//! ...
//! v(0,ny-1),...,v(nx-1,ny-1)
//! ```
//!
//! Values use the shortest decimal representation that round-trips, so a
//! write/read cycle is bit-exact. Sentinels are written as `NaN`. Masks use
//! the same header with `0`/`1` entries.

use super::{Grid2D, ScalarField2D};
use std::io::{BufRead, Write};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum FieldIoError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("line {line}: {message}")]
    Format { line: usize, message: String },
}

fn fmt_err(line: usize, message: impl Into<String>) -> FieldIoError {
    FieldIoError::Format { line, message: message.into() }
}

fn write_header(out: &mut (impl Write + ?Sized), g: &Grid2D) -> std::io::Result<()> {
    writeln!(out, "# {} {} {} {} {} {}", g.nx, g.ny, g.x0, g.y0, g.hx, g.hy)
}

pub fn write_field(out: &mut (impl Write + ?Sized), field: &ScalarField2D) -> std::io::Result<()> {
    let g = &field.grid;
    write_header(out, g)?;
    let mut line = String::new();
    for row in field.values.chunks(g.nx) {
        line.clear();
        for (k, v) in row.iter().enumerate() {
            if k > 0 {
                line.push(',');
            }
            line.push_str(&v.to_string());
        }
        writeln!(out, "{line}")?;
    }
    Ok(())
}

pub fn write_mask(out: &mut (impl Write + ?Sized), grid: &Grid2D, mask: &[bool]) -> std::io::Result<()> {
    write_header(out, grid)?;
    for row in mask.chunks(grid.nx) {
        let line: Vec<&str> = row.iter().map(|&m| if m { "1" } else { "0" }).collect();
        writeln!(out, "{}", line.join(","))?;
    }
    Ok(())
}

fn read_grid(lines: &mut impl Iterator<Item = std::io::Result<String>>) -> Result<Grid2D, FieldIoError> {
    let header = loop {
        match lines.next() {
            Some(l) => {
                let l = l?;
                if !l.trim().is_empty() {
                    break l;
                }
            }
            None => return Err(fmt_err(1, "missing header")),
        }
    };
    let body = header
        .trim()
        .strip_prefix('#')
        .ok_or_else(|| fmt_err(1, "header must start with `#`"))?;
    let parts: Vec<&str> = body.split_whitespace().collect();
    if parts.len() != 6 {
        return Err(fmt_err(1, "header needs `nx ny x0 y0 hx hy`"));
    }
    let n = |s: &str| s.parse::<usize>().map_err(|e| fmt_err(1, e.to_string()));
    let f = |s: &str| s.parse::<f64>().map_err(|e| fmt_err(1, e.to_string()));
    Grid2D::new(n(parts[0])?, n(parts[1])?, f(parts[2])?, f(parts[3])?, f(parts[4])?, f(parts[5])?)
        .map_err(|e| fmt_err(1, e.to_string()))
}

fn read_rows<T>(
    input: impl BufRead,
    parse: impl Fn(&str) -> Option<T>,
) -> Result<(Grid2D, Vec<T>), FieldIoError> {
    let mut lines = input.lines();
    let grid = read_grid(&mut lines)?;
    let mut values = Vec::with_capacity(grid.len());
    for j in 0..grid.ny {
        let lineno = j + 2;
        let line = lines.next().ok_or_else(|| fmt_err(lineno, "missing row"))??;
        let before = values.len();
        for tok in line.split(',') {
            let v = parse(tok.trim()).ok_or_else(|| fmt_err(lineno, format!("bad value `{}`", tok.trim())))?;
            values.push(v);
        }
        if values.len() - before != grid.nx {
            return Err(fmt_err(lineno, format!("expected {} values, got {}", grid.nx, values.len() - before)));
        }
    }
    Ok((grid, values))
}

/// Reads one field; anything after the last row is ignored.
pub fn read_field(input: impl BufRead) -> Result<ScalarField2D, FieldIoError> {
    let (grid, values) = read_rows(input, |s| s.parse::<f64>().ok())?;
    Ok(ScalarField2D { grid, values })
}

pub fn read_mask(input: impl BufRead) -> Result<(Grid2D, Vec<bool>), FieldIoError> {
    read_rows(input, |s| match s {
        "0" => Some(false),
        "1" => Some(true),
        _ => None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn field_round_trip_is_bit_exact(
            nx in 2usize..6, ny in 2usize..6,
            x0 in -10.0f64..10.0, hx in 1e-3f64..2.0,
            seed in proptest::collection::vec(proptest::num::f64::NORMAL | proptest::num::f64::SUBNORMAL | proptest::num::f64::ZERO, 36),
        ) {
            let g = Grid2D::new(nx, ny, x0, -x0, hx, hx * 0.7).unwrap();
            let mut values: Vec<f64> = seed.into_iter().take(g.len()).collect();
            values[0] = f64::NAN;
            let f = ScalarField2D::new(g, values).unwrap();
            let mut buf = Vec::new();
            write_field(&mut buf, &f).unwrap();
            let back = read_field(buf.as_slice()).unwrap();
            prop_assert_eq!(back.grid, f.grid);
            for (a, b) in back.values.iter().zip(&f.values) {
                prop_assert!(a.to_bits() == b.to_bits() || (a.is_nan() && b.is_nan()));
            }
        }
    }

    #[test]
    fn mask_round_trip_and_errors() {
        let g = Grid2D::new(3, 2, 0.0, 0.0, 0.5, 0.5).unwrap();
        let mask = vec![false, true, true, false, false, true];
        let mut buf = Vec::new();
        write_mask(&mut buf, &g, &mask).unwrap();
        assert_eq!(String::from_utf8(buf.clone()).unwrap(), "# 3 2 0 0 0.5 0.5\n0,1,1\n0,0,1\n");
        assert_eq!(read_mask(buf.as_slice()).unwrap(), (g, mask));
        assert!(read_field("# 3 2 0 0 0.5 0.5\n1,2\n".as_bytes()).is_err());
        assert!(read_field("3 2 0 0 0.5 0.5\n".as_bytes()).is_err());
    }
}
