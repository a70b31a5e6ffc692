//! File formats: phantom descriptions, Radon data, harmonic profiles, slice
//! images and metrics.
//!
//! - Phantom (text): one ball per line, `cx cy cz radius amplitude`,
//!   whitespace-separated, `#` comments.
//! - Radon data (binary): ASCII header `SRT1 <nrho> <nang> <case> <R> <R2>`
//!   terminated by `\n`, then the rho grid as `nrho` little-endian f64,
//!   then `nrho * nang * nang` little-endian f64 in `[i][j][k]` row-major
//!   order (`nang = 2N`).
//! - Harmonic profiles (binary): ASCII header `SHP1 <l_max> <n_radial>`,
//!   the radial grid, then for each `(l, m)` (l ascending, m from -l to l)
//!   the complex vector as interleaved little-endian f64 pairs.
//! - Slices: portable graymap (P2/P5, normalization recorded in the header
//!   comment) and CSV (row-major, 6 significant digits).
//! - Metrics: `key=value` text at full round-trip precision, plus a JSON
//!   record with the per-degree diagnostics.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use num_complex::Complex64;

use crate::error::{SrtError, SrtResult};
use crate::phantom::{AcquisitionGeometry, Ball, BallPhantom, RadonData};
use crate::pipeline::{ReconstructionMetrics, Slice2D};
use crate::shtransform::HarmonicProfiles;
use crate::support::SupportCase;

fn parse_err(path: &Path, message: impl Into<String>) -> SrtError {
    SrtError::Parse {
        path: path.display().to_string(),
        message: message.into(),
    }
}

/// Reads a phantom description file.
pub fn read_phantom(path: &Path) -> SrtResult<BallPhantom> {
    let text = std::fs::read_to_string(path)?;
    let mut balls = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = match raw.find('#') {
            Some(pos) => &raw[..pos],
            None => raw,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<f64> = line
            .split_whitespace()
            .map(|tok| tok.parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|_| {
                parse_err(
                    path,
                    format!("line {}: expected 5 numbers, got `{line}`", lineno + 1),
                )
            })?;
        if fields.len() != 5 {
            return Err(parse_err(
                path,
                format!("line {}: expected `cx cy cz radius amplitude`", lineno + 1),
            ));
        }
        balls.push(
            Ball::new([fields[0], fields[1], fields[2]], fields[3], fields[4])
                .map_err(|e| parse_err(path, format!("line {}: {e}", lineno + 1)))?,
        );
    }
    BallPhantom::new(balls).map_err(|e| parse_err(path, e.to_string()))
}

pub fn write_phantom(path: &Path, phantom: &BallPhantom) -> SrtResult<()> {
    let mut out = BufWriter::new(File::create(path)?);
    writeln!(out, "# cx cy cz radius amplitude")?;
    for b in phantom.balls() {
        writeln!(
            out,
            "{} {} {} {} {}",
            b.center[0], b.center[1], b.center[2], b.radius, b.amplitude
        )?;
    }
    Ok(())
}

/// Writes Radon data in the binary `SRT1` format.
pub fn write_radon_data(path: &Path, data: &RadonData) -> SrtResult<()> {
    let geom = &data.geometry;
    let mut out = BufWriter::new(File::create(path)?);
    writeln!(
        out,
        "SRT1 {} {} {} {} {}",
        geom.rho_grid.len(),
        2 * geom.n,
        geom.case.token(),
        geom.r,
        geom.r2.unwrap_or(0.0)
    )?;
    for &rho in &geom.rho_grid {
        out.write_all(&rho.to_le_bytes())?;
    }
    for &v in &data.values {
        out.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

fn read_header_line(reader: &mut impl Read) -> std::io::Result<String> {
    let mut line = Vec::new();
    let mut byte = [0u8; 1];
    loop {
        let n = reader.read(&mut byte)?;
        if n == 0 || byte[0] == b'\n' {
            break;
        }
        line.push(byte[0]);
        if line.len() > 4096 {
            break;
        }
    }
    Ok(String::from_utf8_lossy(&line).into_owned())
}

fn read_f64s(reader: &mut impl Read, count: usize, path: &Path) -> SrtResult<Vec<f64>> {
    let mut buf = vec![0u8; count * 8];
    reader.read_exact(&mut buf).map_err(|_| {
        parse_err(
            path,
            format!("truncated payload, expected {count} f64 values"),
        )
    })?;
    Ok(buf
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect())
}

/// Reads Radon data written by [`write_radon_data`].
pub fn read_radon_data(path: &Path) -> SrtResult<RadonData> {
    let mut reader = BufReader::new(File::open(path)?);
    let header = read_header_line(&mut reader)?;
    let fields: Vec<&str> = header.split_whitespace().collect();
    if fields.len() != 6 || fields[0] != "SRT1" {
        return Err(parse_err(
            path,
            format!("bad header `{header}` (expected `SRT1 nrho nang case R R2`)"),
        ));
    }
    let nrho: usize = fields[1]
        .parse()
        .map_err(|_| parse_err(path, "bad radial count"))?;
    let nang: usize = fields[2]
        .parse()
        .map_err(|_| parse_err(path, "bad angular count"))?;
    let case: SupportCase = fields[3].parse().map_err(|e: String| parse_err(path, e))?;
    let r: f64 = fields[4]
        .parse()
        .map_err(|_| parse_err(path, "bad acquisition radius"))?;
    let r2: f64 = fields[5]
        .parse()
        .map_err(|_| parse_err(path, "bad outer radius"))?;
    if nang == 0 || nang % 2 != 0 {
        return Err(parse_err(
            path,
            format!("angular count {nang} must be even and positive"),
        ));
    }
    let rho_grid = read_f64s(&mut reader, nrho, path)?;
    let values = read_f64s(&mut reader, nrho * nang * nang, path)?;
    let mut trailing = [0u8; 1];
    if reader.read(&mut trailing)? != 0 {
        return Err(parse_err(path, "trailing bytes after payload"));
    }
    let geometry = AcquisitionGeometry::new(
        case,
        r,
        if r2 > 0.0 { Some(r2) } else { None },
        rho_grid,
        nang / 2,
    )?;
    Ok(RadonData { geometry, values })
}

/// Writes harmonic profiles in the binary `SHP1` format.
pub fn write_profiles(path: &Path, profiles: &HarmonicProfiles) -> SrtResult<()> {
    let mut out = BufWriter::new(File::create(path)?);
    writeln!(out, "SHP1 {} {}", profiles.l_max, profiles.radii.len())?;
    for &r in &profiles.radii {
        out.write_all(&r.to_le_bytes())?;
    }
    for l in 0..=profiles.l_max {
        for m in -(l as i32)..=(l as i32) {
            for c in profiles.coeff(l, m) {
                out.write_all(&c.re.to_le_bytes())?;
                out.write_all(&c.im.to_le_bytes())?;
            }
        }
    }
    Ok(())
}

/// Reads profiles written by [`write_profiles`].
pub fn read_profiles(path: &Path) -> SrtResult<HarmonicProfiles> {
    let mut reader = BufReader::new(File::open(path)?);
    let header = read_header_line(&mut reader)?;
    let fields: Vec<&str> = header.split_whitespace().collect();
    if fields.len() != 3 || fields[0] != "SHP1" {
        return Err(parse_err(path, format!("bad header `{header}`")));
    }
    let l_max: u32 = fields[1]
        .parse()
        .map_err(|_| parse_err(path, "bad l_max"))?;
    let n_radial: usize = fields[2]
        .parse()
        .map_err(|_| parse_err(path, "bad radial count"))?;
    let radii = read_f64s(&mut reader, n_radial, path)?;
    let mut profiles = HarmonicProfiles::zeros(l_max, radii);
    for l in 0..=l_max {
        for m in -(l as i32)..=(l as i32) {
            let raw = read_f64s(&mut reader, 2 * n_radial, path)?;
            let dst = profiles.coeff_mut(l, m);
            for (i, pair) in raw.chunks_exact(2).enumerate() {
                dst[i] = Complex64::new(pair[0], pair[1]);
            }
        }
    }
    Ok(profiles)
}

/// Writes a slice as a portable graymap. Pixel values are affinely mapped
/// from `range` (defaults to the slice's own min/max) onto 0..=255; the
/// mapping is recorded in a header comment.
pub fn write_slice_pgm(
    path: &Path,
    slice: &Slice2D,
    range: Option<(f64, f64)>,
    ascii: bool,
) -> SrtResult<()> {
    let (lo, hi) = range.unwrap_or_else(|| slice.min_max());
    let (lo, hi) = (lo + 0.0, hi + 0.0); // normalize -0.0 in the header
    let span = if hi > lo { hi - lo } else { 1.0 };
    let n = slice.resolution;
    let mut out = BufWriter::new(File::create(path)?);
    writeln!(out, "{}", if ascii { "P2" } else { "P5" })?;
    writeln!(
        out,
        "# plane {} extent {} range {} {}",
        slice.plane.label(),
        slice.extent,
        lo,
        hi
    )?;
    writeln!(out, "{n} {n}")?;
    writeln!(out, "255")?;
    // Image rows run top to bottom; raster v runs bottom to top.
    for iv in (0..n).rev() {
        if ascii {
            let row: Vec<String> = (0..n)
                .map(|iu| {
                    let v = ((slice.at(iu, iv) - lo) / span * 255.0)
                        .round()
                        .clamp(0.0, 255.0);
                    format!("{}", v as u8)
                })
                .collect();
            writeln!(out, "{}", row.join(" "))?;
        } else {
            let row: Vec<u8> = (0..n)
                .map(|iu| {
                    ((slice.at(iu, iv) - lo) / span * 255.0)
                        .round()
                        .clamp(0.0, 255.0) as u8
                })
                .collect();
            out.write_all(&row)?;
        }
    }
    Ok(())
}

/// Writes a slice as CSV, row-major with 6 significant digits.
pub fn write_slice_csv(path: &Path, slice: &Slice2D) -> SrtResult<()> {
    let mut out = BufWriter::new(File::create(path)?);
    let n = slice.resolution;
    for iv in 0..n {
        let row: Vec<String> = (0..n)
            .map(|iu| format!("{:.5e}", slice.at(iu, iv)))
            .collect();
        writeln!(out, "{}", row.join(","))?;
    }
    Ok(())
}

/// Full round-trip float formatting for the metrics text file.
fn full(v: f64) -> String {
    format!("{:.16e}", v)
}

/// Writes metrics as `key=value` lines (17 significant digits).
pub fn write_metrics_text(path: &Path, metrics: &ReconstructionMetrics) -> SrtResult<()> {
    let mut out = BufWriter::new(File::create(path)?);
    writeln!(
        out,
        "relative_l2={}",
        full(metrics.relative_l2.unwrap_or(f64::NAN))
    )?;
    writeln!(
        out,
        "relative_l2_bandlimited={}",
        full(metrics.relative_l2_bandlimited.unwrap_or(f64::NAN))
    )?;
    writeln!(
        out,
        "max_abs_error={}",
        full(metrics.max_abs_error.unwrap_or(f64::NAN))
    )?;
    writeln!(out, "truth_zero_fallback={}", metrics.truth_zero_fallback)?;
    writeln!(out, "trusted_r_min={}", full(metrics.trusted_r_min))?;
    writeln!(out, "trusted_r_max={}", full(metrics.trusted_r_max))?;
    writeln!(out, "origin_flagged={}", metrics.origin_flagged)?;
    Ok(())
}

/// Writes the machine-readable metrics record (JSON, includes per-degree
/// diagnostics).
pub fn write_metrics_json(path: &Path, metrics: &ReconstructionMetrics) -> SrtResult<()> {
    let file = File::create(path)?;
    serde_json::to_writer_pretty(BufWriter::new(file), metrics).map_err(|e| SrtError::Parse {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    Ok(())
}

/// Per-degree diagnostics as an aligned text table.
pub fn write_degree_table(path: &Path, metrics: &ReconstructionMetrics) -> SrtResult<()> {
    let mut out = BufWriter::new(File::create(path)?);
    writeln!(
        out,
        "{:>4} {:>24} {:>16}",
        "l", "condition", "effective_rank"
    )?;
    for d in &metrics.degrees {
        writeln!(
            out,
            "{:>4} {:>24.16e} {:>16}",
            d.l, d.condition, d.effective_rank
        )?;
    }
    Ok(())
}

/// ASCII dump of a matrix, one row per line.
pub fn format_matrix(matrix: &nalgebra::DMatrix<f64>) -> String {
    let mut text = String::new();
    for i in 0..matrix.nrows() {
        let row: Vec<String> = (0..matrix.ncols())
            .map(|k| format!("{:.16e}", matrix[(i, k)]))
            .collect();
        text.push_str(&row.join(" "));
        text.push('\n');
    }
    text
}
