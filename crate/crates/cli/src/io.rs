//! File formats: margin and grid CSVs, TLD counts, and the framed binary
//! draws file.
//!
//! `draws.bin` layout, all integers little-endian:
//!
//! ```text
//! magic   5 bytes  "ODMC1"
//! n       u32      zones
//! G       u32      number of draws
//! draws   G * n^2 * u32   row-major cells per draw
//! aux tag u8       0 none, 1 proportions, 2 betas
//! aux     G * n^2 * f64 (tag 1) or G * f64 (tag 2)
//! ```

use anyhow::{bail, Context, Result};
use od_core::sampler::{AuxDraws, ChainOutput};
use od_core::{CostBins, CostMatrix, MarginData, ProportionMatrix, TripMatrix};
use serde::Deserialize;
use std::io::{Read, Write};
use std::path::Path;

const MAGIC: &[u8; 5] = b"ODMC1";

#[derive(Deserialize)]
struct MarginRow {
    #[allow(dead_code)]
    zone: String,
    origin: u64,
    destination: u64,
}

/// Reads `zone,origin,destination` rows into margin data.
pub fn read_margins(path: &Path) -> Result<MarginData> {
    let mut reader = csv::Reader::from_path(path)
        .with_context(|| format!("opening margins {}", path.display()))?;
    let mut origins = Vec::new();
    let mut destinations = Vec::new();
    for row in reader.deserialize() {
        let row: MarginRow = row.context("margins row")?;
        origins.push(row.origin);
        destinations.push(row.destination);
    }
    Ok(MarginData::new(origins, destinations)?)
}

/// Reads a headerless numeric grid; every row must have the same width.
pub fn read_grid(path: &Path) -> Result<Vec<Vec<f64>>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_path(path)
        .with_context(|| format!("opening grid {}", path.display()))?;
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.context("grid row")?;
        let row: Vec<f64> = record
            .iter()
            .map(|tok| {
                tok.parse::<f64>()
                    .with_context(|| format!("grid value {tok:?}"))
            })
            .collect::<Result<_>>()?;
        rows.push(row);
    }
    if rows.is_empty() {
        bail!("{}: empty grid", path.display());
    }
    Ok(rows)
}

/// Reads a square grid as costs.
pub fn read_costs(path: &Path) -> Result<CostMatrix> {
    Ok(CostMatrix::from_rows(&read_grid(path)?)?)
}

/// Reads a square grid and normalizes it onto the simplex.
pub fn read_proportions(path: &Path) -> Result<ProportionMatrix> {
    let rows = read_grid(path)?;
    let n = rows.len();
    let flat: Vec<f64> = rows.into_iter().flatten().collect();
    Ok(ProportionMatrix::from_weights(n, &flat)?)
}

/// Reads a square grid of integer trip counts.
pub fn read_trips(path: &Path) -> Result<TripMatrix> {
    let rows = read_grid(path)?;
    let cells: Vec<Vec<u64>> = rows
        .iter()
        .map(|row| {
            row.iter()
                .map(|v| {
                    if *v < 0.0 || v.fract() != 0.0 {
                        bail!("trip counts must be nonnegative integers, got {v}")
                    } else {
                        Ok(*v as u64)
                    }
                })
                .collect::<Result<_>>()
        })
        .collect::<Result<_>>()?;
    Ok(TripMatrix::from_rows(&cells)?)
}

/// Reads a flat list of positive reals from a grid file of any shape.
pub fn read_flat(path: &Path) -> Result<Vec<f64>> {
    Ok(read_grid(path)?.into_iter().flatten().collect())
}

#[derive(Deserialize)]
struct TldRow {
    lower: f64,
    upper: f64,
    count: u64,
}

/// Reads `lower,upper,count` rows; the ranges must be contiguous and
/// increasing. Returns the implied bin edges and the counts.
pub fn read_tld(path: &Path) -> Result<(Vec<f64>, Vec<u64>)> {
    let mut reader =
        csv::Reader::from_path(path).with_context(|| format!("opening TLD {}", path.display()))?;
    let mut edges: Vec<f64> = Vec::new();
    let mut counts = Vec::new();
    for row in reader.deserialize() {
        let row: TldRow = row.context("TLD row")?;
        if let Some(last) = edges.last() {
            if (row.lower - last).abs() > 1e-9 {
                bail!("TLD ranges are not contiguous at lower = {}", row.lower);
            }
        } else {
            edges.push(row.lower);
        }
        edges.push(row.upper);
        counts.push(row.count);
    }
    if counts.is_empty() {
        bail!("{}: no TLD rows", path.display());
    }
    Ok((edges, counts))
}

/// Full round-trip precision decimal formatting (Rust's shortest
/// representation that parses back exactly).
pub fn write_real_grid(path: &Path, n: usize, cells: &[f64]) -> Result<()> {
    let mut out = String::new();
    for i in 0..n {
        let row: Vec<String> = (0..n).map(|j| format!("{}", cells[i * n + j])).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    std::fs::write(path, out).with_context(|| format!("writing {}", path.display()))
}

pub fn write_intervals(path: &Path, n: usize, intervals: &[(u64, u64)]) -> Result<()> {
    let mut out = String::from("row,col,lower,upper\n");
    for i in 0..n {
        for j in 0..n {
            let (lo, hi) = intervals[i * n + j];
            out.push_str(&format!("{},{},{lo},{hi}\n", i + 1, j + 1));
        }
    }
    std::fs::write(path, out).with_context(|| format!("writing {}", path.display()))
}

/// Serializes a chain to the framed draws format.
pub fn write_draws(path: &Path, out: &ChainOutput) -> Result<()> {
    let n = out.n();
    let mut file = std::io::BufWriter::new(
        std::fs::File::create(path).with_context(|| format!("creating {}", path.display()))?,
    );
    file.write_all(MAGIC)?;
    file.write_all(&(n as u32).to_le_bytes())?;
    file.write_all(&(out.len() as u32).to_le_bytes())?;
    for draw in &out.draws {
        for &cell in draw.cells() {
            let cell: u32 = cell
                .try_into()
                .map_err(|_| anyhow::anyhow!("cell {cell} exceeds the 32-bit draw format"))?;
            file.write_all(&cell.to_le_bytes())?;
        }
    }
    match &out.aux {
        AuxDraws::None => file.write_all(&[0u8])?,
        AuxDraws::Proportions(props) => {
            file.write_all(&[1u8])?;
            for p in props {
                for v in p.values() {
                    file.write_all(&v.to_le_bytes())?;
                }
            }
        }
        AuxDraws::Betas(betas) => {
            file.write_all(&[2u8])?;
            for b in betas {
                file.write_all(&b.to_le_bytes())?;
            }
        }
    }
    file.flush()?;
    Ok(())
}

/// Draws plus aux channel read back from disk; margins are reconstructed
/// from the (consistent) draws themselves.
#[derive(Debug)]
pub struct StoredDraws {
    pub draws: Vec<TripMatrix>,
    pub aux: AuxDraws,
}

fn read_exact(file: &mut impl Read, buf: &mut [u8], offset: &mut usize, what: &str) -> Result<()> {
    file.read_exact(buf).map_err(|e| {
        anyhow::anyhow!("truncated draws file at byte offset {offset}: {what}: {e}")
    })?;
    *offset += buf.len();
    Ok(())
}

/// Deserializes a draws file, validating the magic, counts, and framing.
pub fn read_draws(path: &Path) -> Result<StoredDraws> {
    let mut file = std::io::BufReader::new(
        std::fs::File::open(path).with_context(|| format!("opening {}", path.display()))?,
    );
    let mut offset = 0usize;
    let mut magic = [0u8; 5];
    read_exact(&mut file, &mut magic, &mut offset, "magic")?;
    if &magic != MAGIC {
        bail!("not a draws file: bad magic {magic:?}");
    }
    let mut word = [0u8; 4];
    read_exact(&mut file, &mut word, &mut offset, "zone count")?;
    let n = u32::from_le_bytes(word) as usize;
    read_exact(&mut file, &mut word, &mut offset, "draw count")?;
    let g = u32::from_le_bytes(word) as usize;
    if n < 2 {
        bail!("draws file declares {n} zones");
    }
    if g == 0 {
        bail!("draws file declares zero draws");
    }

    let mut draws = Vec::with_capacity(g);
    for _ in 0..g {
        let mut cells = Vec::with_capacity(n * n);
        for _ in 0..n * n {
            read_exact(&mut file, &mut word, &mut offset, "draw cell")?;
            cells.push(u32::from_le_bytes(word) as u64);
        }
        draws.push(TripMatrix::new(n, cells)?);
    }

    let mut tag = [0u8; 1];
    read_exact(&mut file, &mut tag, &mut offset, "aux tag")?;
    let mut dword = [0u8; 8];
    let aux = match tag[0] {
        0 => AuxDraws::None,
        1 => {
            let mut props = Vec::with_capacity(g);
            for _ in 0..g {
                let mut values = Vec::with_capacity(n * n);
                for _ in 0..n * n {
                    read_exact(&mut file, &mut dword, &mut offset, "proportion value")?;
                    values.push(f64::from_le_bytes(dword));
                }
                // Keep the stored bits when they already sit on the simplex
                // so recomputed summaries match the originals exactly.
                let p = match ProportionMatrix::new(n, values.clone()) {
                    Ok(p) => p,
                    Err(_) => ProportionMatrix::from_weights(n, &values)?,
                };
                props.push(p);
            }
            AuxDraws::Proportions(props)
        }
        2 => {
            let mut betas = Vec::with_capacity(g);
            for _ in 0..g {
                read_exact(&mut file, &mut dword, &mut offset, "beta value")?;
                betas.push(f64::from_le_bytes(dword));
            }
            AuxDraws::Betas(betas)
        }
        other => bail!("unknown aux tag {other} at byte offset {}", offset - 1),
    };
    let mut trailing = [0u8; 1];
    if file.read(&mut trailing)? != 0 {
        bail!("trailing bytes after aux channel at byte offset {offset}");
    }
    Ok(StoredDraws { draws, aux })
}

/// Builds cost bins either from `--bins` edges or from a TLD file's ranges,
/// cross-checking when both are present.
pub fn resolve_bins(
    flag_edges: Option<&[f64]>,
    tld_edges: Option<&[f64]>,
) -> Result<Option<CostBins>> {
    match (flag_edges, tld_edges) {
        (None, None) => Ok(None),
        (Some(e), None) => Ok(Some(CostBins::new(e.to_vec())?)),
        (None, Some(e)) => Ok(Some(CostBins::new(e.to_vec())?)),
        (Some(a), Some(b)) => {
            if a.len() != b.len() || a.iter().zip(b).any(|(x, y)| (x - y).abs() > 1e-9) {
                bail!("--bins edges disagree with the TLD file ranges");
            }
            Ok(Some(CostBins::new(a.to_vec())?))
        }
    }
}
