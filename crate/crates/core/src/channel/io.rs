//! Plain-text channel dump.
//!
//! ```text
//! # crossfield channel-matrix v1
//! # model=SWM rows=2 cols=3 wavelength=0.001 tx_id=... rx_id=...
//! re00,im00,re01,im01,re02,im02
//! re10,im10,re11,im11,re12,im12
//! ```
//!
//! One line per row in row-major order, real and imaginary parts interleaved.
//! Floats are written in shortest round-trip form, so a dump reads back
//! bit-exactly.

use std::io::{BufRead, Write};

use faer::Mat;

use super::{ChannelMatrix, ChannelModel};
use crate::error::{Error, Result};
use crate::linalg::c64;

const MAGIC: &str = "# crossfield channel-matrix v1";

pub fn write_channel_csv<W: Write>(h: &ChannelMatrix, mut out: W) -> std::io::Result<()> {
    writeln!(out, "{MAGIC}")?;
    writeln!(
        out,
        "# model={} rows={} cols={} wavelength={} tx_id={} rx_id={}",
        h.model,
        h.nrows(),
        h.ncols(),
        h.wavelength,
        h.tx_geometry_id,
        h.rx_geometry_id
    )?;
    let mut line = String::new();
    for r in 0..h.nrows() {
        line.clear();
        for c in 0..h.ncols() {
            if c > 0 {
                line.push(',');
            }
            let z = h.entries[(r, c)];
            line.push_str(&format!("{},{}", z.re, z.im));
        }
        writeln!(out, "{line}")?;
    }
    Ok(())
}

fn bad(msg: impl Into<String>) -> Error {
    Error::invalid(format!("malformed channel dump: {}", msg.into()))
}

pub fn read_channel_csv<R: BufRead>(input: R) -> Result<ChannelMatrix> {
    let mut lines = input.lines();
    let mut next = || -> Result<String> {
        lines
            .next()
            .ok_or_else(|| bad("unexpected end of input"))?
            .map_err(|e| bad(e.to_string()))
    };
    if next()?.trim_end() != MAGIC {
        return Err(bad("missing header"));
    }
    let header = next()?;
    let fields = header
        .strip_prefix('#')
        .ok_or_else(|| bad("missing metadata line"))?;
    let mut model = None;
    let (mut rows, mut cols, mut wl, mut tx_id, mut rx_id) = (None, None, None, None, None);
    for kv in fields.split_whitespace() {
        let (k, v) = kv.split_once('=').ok_or_else(|| bad(kv))?;
        match k {
            "model" => model = Some(v.parse::<ChannelModel>()?),
            "rows" => rows = v.parse::<usize>().ok(),
            "cols" => cols = v.parse::<usize>().ok(),
            "wavelength" => wl = v.parse::<f64>().ok(),
            "tx_id" => tx_id = v.parse::<u64>().ok(),
            "rx_id" => rx_id = v.parse::<u64>().ok(),
            _ => return Err(bad(format!("unknown field `{k}`"))),
        }
    }
    let (model, rows, cols, wavelength) = match (model, rows, cols, wl) {
        (Some(m), Some(r), Some(c), Some(w)) => (m, r, c, w),
        _ => return Err(bad("incomplete metadata")),
    };
    let mut entries = Mat::<c64>::zeros(rows, cols);
    for r in 0..rows {
        let line = next()?;
        let values: Vec<f64> = line
            .split(',')
            .map(|s| s.trim().parse::<f64>().map_err(|_| bad(format!("row {r}: `{s}`"))))
            .collect::<Result<_>>()?;
        if values.len() != 2 * cols {
            return Err(bad(format!("row {r} has {} values", values.len())));
        }
        for c in 0..cols {
            entries[(r, c)] = c64::new(values[2 * c], values[2 * c + 1]);
        }
    }
    Ok(ChannelMatrix {
        entries,
        model,
        wavelength,
        tx_geometry_id: tx_id.unwrap_or(0),
        rx_geometry_id: rx_id.unwrap_or(0),
    })
}
