//! Binary field dump.
//!
//! Layout: a 32-byte little-endian header
//!
//! | offset | type | content                                   |
//! |--------|------|-------------------------------------------|
//! | 0      | [u8;4] | magic `MKGF`                            |
//! | 4      | u32  | format version                            |
//! | 8      | u32  | geometry tag (0 radial, 1 box)            |
//! | 12     | u32  | `n` (cells or points per axis)            |
//! | 16     | f64  | extent (`r_max` or box half-width)        |
//! | 24     | u32  | rank tag (0 scalar, 1 radial-vector, 2 3-vector) |
//! | 28     | u32  | reserved, zero                            |
//!
//! followed by the samples as row-major `f64` values.

use std::io::{Read, Write};
use std::path::Path;

use super::{BoxGrid, Geometry, GridFunction, RadialGrid, Rank};
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"MKGF";
pub const VERSION: u32 = 1;
pub const HEADER_LEN: usize = 32;

pub fn write_to(u: &GridFunction, mut w: impl Write) -> Result<()> {
    let (n, extent) = match u.geometry() {
        Geometry::Radial(g) => (g.n(), g.r_max()),
        Geometry::Box(g) => (g.n(), g.half_width()),
    };
    let mut header = [0u8; HEADER_LEN];
    header[0..4].copy_from_slice(MAGIC);
    header[4..8].copy_from_slice(&VERSION.to_le_bytes());
    header[8..12].copy_from_slice(&u.geometry().tag().to_le_bytes());
    header[12..16].copy_from_slice(&(n as u32).to_le_bytes());
    header[16..24].copy_from_slice(&extent.to_le_bytes());
    header[24..28].copy_from_slice(&u.rank().tag().to_le_bytes());
    w.write_all(&header)?;
    let mut body = Vec::with_capacity(8 * u.samples().len());
    for v in u.samples() {
        body.extend_from_slice(&v.to_le_bytes());
    }
    w.write_all(&body)?;
    Ok(())
}

pub fn read_from(mut r: impl Read) -> Result<GridFunction> {
    let mut header = [0u8; HEADER_LEN];
    r.read_exact(&mut header)
        .map_err(|e| Error::Format(format!("short header: {e}")))?;
    if &header[0..4] != MAGIC {
        return Err(Error::Format("bad magic".into()));
    }
    let u32_at = |o: usize| u32::from_le_bytes(header[o..o + 4].try_into().unwrap());
    let version = u32_at(4);
    if version != VERSION {
        return Err(Error::Format(format!("unsupported version {version}")));
    }
    let n = u32_at(12) as usize;
    let extent = f64::from_le_bytes(header[16..24].try_into().unwrap());
    let geometry = match u32_at(8) {
        0 => Geometry::Radial(RadialGrid::new(extent, n)?),
        1 => Geometry::Box(BoxGrid::new(extent, n)?),
        t => return Err(Error::Format(format!("unknown geometry tag {t}"))),
    };
    let rank = match u32_at(24) {
        0 => Rank::Scalar,
        1 => Rank::RadialVector,
        2 => Rank::Vector3,
        t => return Err(Error::Format(format!("unknown rank tag {t}"))),
    };
    let count = geometry.node_count() * rank.components();
    let mut body = Vec::new();
    r.read_to_end(&mut body)?;
    if body.len() != 8 * count {
        return Err(Error::Format(format!(
            "expected {} payload bytes, found {}",
            8 * count,
            body.len()
        )));
    }
    let samples = body
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    GridFunction::new(geometry, rank, samples)
}

pub fn write_file(u: &GridFunction, path: &Path) -> Result<()> {
    let f = std::fs::File::create(path)?;
    let mut w = std::io::BufWriter::new(f);
    write_to(u, &mut w)?;
    w.flush()?;
    Ok(())
}

pub fn read_file(path: &Path) -> Result<GridFunction> {
    let f = std::fs::File::open(path)?;
    read_from(std::io::BufReader::new(f))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{sample_box, sample_radial};

    #[test]
    fn round_trip_radial_and_box() {
        let g = RadialGrid::new(8.0, 16).unwrap();
        let u = sample_radial(g, Rank::RadialVector, |r| r.sin()).unwrap();
        let mut buf = Vec::new();
        write_to(&u, &mut buf).unwrap();
        assert_eq!(buf.len(), HEADER_LEN + 8 * 16);
        assert_eq!(&buf[0..4], b"MKGF");
        assert_eq!(read_from(buf.as_slice()).unwrap(), u);

        let b = BoxGrid::new(2.0, 8).unwrap();
        let v = sample_box(b, |x| x[0] - x[2]).unwrap();
        let mut buf = Vec::new();
        write_to(&v, &mut buf).unwrap();
        assert_eq!(read_from(buf.as_slice()).unwrap(), v);
    }

    #[test]
    fn rejects_corrupt_input() {
        assert!(read_from(&b"MKGF"[..]).is_err());
        let g = RadialGrid::new(8.0, 16).unwrap();
        let u = sample_radial(g, Rank::Scalar, |r| r).unwrap();
        let mut buf = Vec::new();
        write_to(&u, &mut buf).unwrap();
        buf.pop();
        assert!(matches!(read_from(buf.as_slice()), Err(Error::Format(_))));
        buf[0] = b'X';
        assert!(matches!(read_from(buf.as_slice()), Err(Error::Format(_))));
    }
}
