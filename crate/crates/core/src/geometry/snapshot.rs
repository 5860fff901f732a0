//! Plain-text snapshot format.
//!
//! ```text
//! kappa n_theta n_phi t
//! u[0][0] u[0][1] ... u[0][n_phi-1]
//! ...
//! ```
//!
//! Rows follow colatitude; values are written in shortest round-trip form.

use std::io::{self, BufRead, Write};

use super::{SphericalGrid, SurfaceState};
use crate::error::{FlowError, Result};
use crate::spaceform::SpaceForm;

pub fn write_snapshot<W: Write>(mut w: W, sf: SpaceForm, state: &SurfaceState) -> io::Result<()> {
    write_grid(&mut w, sf.kappa(), state.grid(), state.t, state.u())
}

/// Writes any node field in snapshot layout.
pub(crate) fn write_grid<W: Write>(
    w: &mut W,
    kappa: i32,
    grid: &SphericalGrid,
    t: f64,
    values: &[f64],
) -> io::Result<()> {
    writeln!(w, "{} {} {} {:e}", kappa, grid.n_theta(), grid.n_phi(), t)?;
    for row in values.chunks(grid.n_phi()) {
        let mut first = true;
        for x in row {
            if !first {
                w.write_all(b" ")?;
            }
            write!(w, "{x:e}")?;
            first = false;
        }
        w.write_all(b"\n")?;
    }
    Ok(())
}

fn malformed(msg: impl Into<String>) -> FlowError {
    FlowError::Malformed(msg.into())
}

pub fn read_snapshot<R: BufRead>(r: R) -> Result<(SpaceForm, SurfaceState)> {
    let mut lines = r.lines();
    let header = lines
        .next()
        .ok_or_else(|| malformed("empty snapshot"))?
        .map_err(|e| malformed(e.to_string()))?;
    let fields: Vec<&str> = header.split_whitespace().collect();
    if fields.len() != 4 {
        return Err(malformed(format!("header needs 4 fields: `{header}`")));
    }
    let kappa: i32 = fields[0].parse().map_err(|_| malformed("bad kappa"))?;
    let n_theta: usize = fields[1].parse().map_err(|_| malformed("bad n_theta"))?;
    let n_phi: usize = fields[2].parse().map_err(|_| malformed("bad n_phi"))?;
    let t: f64 = fields[3].parse().map_err(|_| malformed("bad t"))?;
    let sf = SpaceForm::from_kappa(kappa)?;
    let grid = SphericalGrid::shared(n_theta, n_phi)?;
    let mut u = Vec::with_capacity(grid.len());
    for (row, line) in lines.enumerate() {
        let line = line.map_err(|e| malformed(e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        let before = u.len();
        for tok in line.split_whitespace() {
            u.push(
                tok.parse::<f64>()
                    .map_err(|_| malformed(format!("row {row}: bad value `{tok}`")))?,
            );
        }
        if u.len() - before != n_phi {
            return Err(malformed(format!(
                "row {row} has {} values",
                u.len() - before
            )));
        }
    }
    Ok((sf, SurfaceState::new(grid, u, t)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_exact() {
        let g = SphericalGrid::shared(6, 12).unwrap();
        let mut s = SurfaceState::from_fn(g, |t, p| 1.0 / 3.0 + t.sin() * p.cos().powi(2)).unwrap();
        s.t = 0.1 + 0.2;
        let mut buf = Vec::new();
        write_snapshot(&mut buf, SpaceForm::Hyperbolic, &s).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("-1 6 12 "));
        assert_eq!(text.lines().count(), 7);
        let (sf, back) = read_snapshot(&buf[..]).unwrap();
        assert_eq!(sf, SpaceForm::Hyperbolic);
        assert_eq!(back, s);
    }

    #[test]
    fn rejects_short_rows() {
        let text = "0 2 4 0e0\n1 1 1 1\n1 1 1\n";
        assert!(matches!(
            read_snapshot(text.as_bytes()),
            Err(FlowError::Malformed(_))
        ));
        assert!(read_snapshot("0 2 4\n".as_bytes()).is_err());
    }
}
