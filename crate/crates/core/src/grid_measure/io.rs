//! Measure files.
//!
//! Binary layout (all little-endian):
//!
//! | field     | type        |
//! |-----------|-------------|
//! | magic     | `b"GLMS"`   |
//! | version   | `u32` = 1   |
//! | d         | `u32`       |
//! | N         | `u32`       |
//! | mass      | `f64`       |
//! | has_seed  | `u8`        |
//! | seed      | `u64`       |
//! | name_len  | `u32`       |
//! | name      | UTF-8 bytes |
//! | weights   | `N^d × f64`, row-major |
//!
//! CSV layout: a metadata comment `# d=<d>,n=<N>,mass=<mass>,name=<name>,seed=<seed>`,
//! the header `index,weight`, then one row per cell in row-major order.

use std::io::{BufRead, Read, Write};

use super::{GridMeasure, TorusGrid};
use crate::error::{LabError, Result};

const MAGIC: &[u8; 4] = b"GLMS";
const VERSION: u32 = 1;

fn io_err(e: std::io::Error) -> LabError {
    LabError::Format(e.to_string())
}

pub fn write_binary<W: Write>(mu: &GridMeasure, mut w: W) -> Result<()> {
    let grid = mu.grid();
    let name = mu.name().as_bytes();
    let mut buf = Vec::with_capacity(40 + name.len() + 8 * grid.len());
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&VERSION.to_le_bytes());
    buf.extend_from_slice(&(grid.d() as u32).to_le_bytes());
    buf.extend_from_slice(&(grid.n() as u32).to_le_bytes());
    buf.extend_from_slice(&mu.mass().to_le_bytes());
    buf.push(mu.seed().is_some() as u8);
    buf.extend_from_slice(&mu.seed().unwrap_or(0).to_le_bytes());
    buf.extend_from_slice(&(name.len() as u32).to_le_bytes());
    buf.extend_from_slice(name);
    for x in mu.weights() {
        buf.extend_from_slice(&x.to_le_bytes());
    }
    w.write_all(&buf).map_err(io_err)
}

fn take<const K: usize>(bytes: &[u8], pos: &mut usize) -> Result<[u8; K]> {
    let end = *pos + K;
    let slice = bytes
        .get(*pos..end)
        .ok_or_else(|| LabError::Format("truncated measure file".into()))?;
    *pos = end;
    Ok(slice.try_into().expect("length checked"))
}

pub fn read_binary<R: Read>(mut r: R) -> Result<GridMeasure> {
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes).map_err(io_err)?;
    let mut pos = 0;
    if &take::<4>(&bytes, &mut pos)? != MAGIC {
        return Err(LabError::Format("bad magic".into()));
    }
    let version = u32::from_le_bytes(take(&bytes, &mut pos)?);
    if version != VERSION {
        return Err(LabError::Format(format!("unsupported version {version}")));
    }
    let d = u32::from_le_bytes(take(&bytes, &mut pos)?) as usize;
    let n = u32::from_le_bytes(take(&bytes, &mut pos)?) as usize;
    let _mass = f64::from_le_bytes(take(&bytes, &mut pos)?);
    let has_seed = take::<1>(&bytes, &mut pos)?[0] != 0;
    let seed = u64::from_le_bytes(take(&bytes, &mut pos)?);
    let name_len = u32::from_le_bytes(take(&bytes, &mut pos)?) as usize;
    let name = bytes
        .get(pos..pos + name_len)
        .ok_or_else(|| LabError::Format("truncated name".into()))?;
    let name = String::from_utf8(name.to_vec()).map_err(|e| LabError::Format(e.to_string()))?;
    pos += name_len;
    let grid = TorusGrid::new(d, n)?;
    let mut weights = Vec::with_capacity(grid.len());
    for _ in 0..grid.len() {
        weights.push(f64::from_le_bytes(take(&bytes, &mut pos)?));
    }
    if pos != bytes.len() {
        return Err(LabError::Format("trailing bytes after weights".into()));
    }
    let mu = GridMeasure::new(grid, weights, name)?;
    Ok(if has_seed { mu.with_seed(seed) } else { mu })
}

pub fn write_csv<W: Write>(mu: &GridMeasure, mut w: W) -> Result<()> {
    let grid = mu.grid();
    let seed = mu.seed().map(|s| s.to_string()).unwrap_or_default();
    let mut out = format!(
        "# d={},n={},mass={},name={},seed={}\nindex,weight\n",
        grid.d(),
        grid.n(),
        mu.mass(),
        mu.name().replace([',', '\n'], ";"),
        seed
    );
    for (i, x) in mu.weights().iter().enumerate() {
        out.push_str(&format!("{i},{x}\n"));
    }
    w.write_all(out.as_bytes()).map_err(io_err)
}

pub fn read_csv<R: BufRead>(r: R) -> Result<GridMeasure> {
    let mut lines = r.lines();
    let meta = lines
        .next()
        .ok_or_else(|| LabError::Format("empty file".into()))?
        .map_err(io_err)?;
    let meta = meta
        .strip_prefix("# ")
        .ok_or_else(|| LabError::Format("missing metadata line".into()))?;
    let mut d = None;
    let mut n = None;
    let mut name = String::new();
    let mut seed = None;
    for kv in meta.split(',') {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| LabError::Format(format!("bad metadata field {kv:?}")))?;
        let parse_err = |_| LabError::Format(format!("bad value for {k}"));
        match k {
            "d" => d = Some(v.parse::<usize>().map_err(parse_err)?),
            "n" => n = Some(v.parse::<usize>().map_err(parse_err)?),
            "name" => name = v.to_string(),
            "seed" if !v.is_empty() => seed = Some(v.parse::<u64>().map_err(parse_err)?),
            _ => {}
        }
    }
    let grid = TorusGrid::new(
        d.ok_or_else(|| LabError::Format("missing d".into()))?,
        n.ok_or_else(|| LabError::Format("missing n".into()))?,
    )?;
    let header = lines
        .next()
        .ok_or_else(|| LabError::Format("missing header".into()))?
        .map_err(io_err)?;
    if header.trim() != "index,weight" {
        return Err(LabError::Format(format!("unexpected header {header:?}")));
    }
    let mut weights = vec![f64::NAN; grid.len()];
    for line in lines {
        let line = line.map_err(io_err)?;
        if line.trim().is_empty() {
            continue;
        }
        let (i, x) = line
            .split_once(',')
            .ok_or_else(|| LabError::Format(format!("bad row {line:?}")))?;
        let i: usize = i.parse().map_err(|_| LabError::Format(format!("bad index {i:?}")))?;
        let x: f64 = x.parse().map_err(|_| LabError::Format(format!("bad weight {x:?}")))?;
        *weights
            .get_mut(i)
            .ok_or_else(|| LabError::Format(format!("index {i} out of range")))? = x;
    }
    let mu = GridMeasure::new(grid, weights, name)?;
    Ok(match seed {
        Some(s) => mu.with_seed(s),
        None => mu,
    })
}
