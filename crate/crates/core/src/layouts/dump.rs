//! Little-endian binary dumps of both layouts.
//!
//! Header: the magic `NFL1`, one kind byte, then `N`, `L`, `CT` and `t` as
//! `u64`. Every array follows in declaration order as a `u64` element count
//! and its elements. Repetition dumps store the record slots, then the
//! record-to-target map as `u32`.

use std::io::{self, Read, Write};
use std::time::Duration;

use crate::error::{Error, Result};

use super::indexing::indexing_formula_bytes;
use super::repetition::{repetition_formula_bytes, HEADER_SLOTS};
use super::{IndexingLayout, RepetitionLayout};

pub const DUMP_MAGIC: [u8; 4] = *b"NFL1";
pub const KIND_INDEXING: u8 = 1;
pub const KIND_REPETITION: u8 = 2;

/// A layout read back from a dump.
#[derive(Debug, Clone, PartialEq)]
pub enum Layout {
    Indexing(IndexingLayout),
    Repetition(RepetitionLayout),
}

fn write_header<W: Write>(w: &mut W, kind: u8, n: usize, level: u32, ct: usize, t: usize) -> io::Result<()> {
    w.write_all(&DUMP_MAGIC)?;
    w.write_all(&[kind])?;
    for v in [n as u64, u64::from(level), ct as u64, t as u64] {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

fn write_f64s<W: Write>(w: &mut W, values: &[f64]) -> io::Result<()> {
    w.write_all(&(values.len() as u64).to_le_bytes())?;
    for v in values {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

fn write_i32s<W: Write>(w: &mut W, values: &[i32]) -> io::Result<()> {
    w.write_all(&(values.len() as u64).to_le_bytes())?;
    for v in values {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

fn write_u32s<W: Write>(w: &mut W, values: &[u32]) -> io::Result<()> {
    w.write_all(&(values.len() as u64).to_le_bytes())?;
    for v in values {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

fn read_u64<R: Read>(r: &mut R) -> io::Result<u64> {
    let mut buf = [0u8; 8];
    r.read_exact(&mut buf)?;
    Ok(u64::from_le_bytes(buf))
}

fn read_len<R: Read>(r: &mut R) -> Result<usize> {
    let len = read_u64(r)?;
    // refuse lengths that cannot be backed by memory before allocating
    usize::try_from(len)
        .ok()
        .filter(|&l| l <= (isize::MAX as usize) / 8)
        .ok_or_else(|| Error::LayoutCorrupt(format!("array length {len} out of range")))
}

fn read_f64s<R: Read>(r: &mut R) -> Result<Vec<f64>> {
    let len = read_len(r)?;
    let mut bytes = vec![0u8; len * 8];
    r.read_exact(&mut bytes)?;
    Ok(bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect())
}

fn read_i32s<R: Read>(r: &mut R) -> Result<Vec<i32>> {
    let len = read_len(r)?;
    let mut bytes = vec![0u8; len * 4];
    r.read_exact(&mut bytes)?;
    Ok(bytes.chunks_exact(4).map(|c| i32::from_le_bytes(c.try_into().unwrap())).collect())
}

fn read_u32s<R: Read>(r: &mut R) -> Result<Vec<u32>> {
    Ok(read_i32s(r)?.into_iter().map(|v| v as u32).collect())
}

impl IndexingLayout {
    pub fn write_dump<W: Write>(&self, w: &mut W) -> Result<()> {
        write_header(w, KIND_INDEXING, self.n, self.level, self.ct, self.t)?;
        write_f64s(w, &self.src_coords)?;
        write_f64s(w, &self.tgt_coords)?;
        write_i32s(w, &self.tgt_idx)?;
        write_i32s(w, &self.tgt_offsets)?;
        write_i32s(w, &self.nei_src_idx)?;
        write_i32s(w, &self.nei_src_offsets)?;
        write_f64s(w, &self.src_potentials)?;
        Ok(())
    }
}

impl RepetitionLayout {
    pub fn write_dump<W: Write>(&self, w: &mut W) -> Result<()> {
        write_header(w, KIND_REPETITION, self.n, self.level, self.ct, self.t)?;
        write_f64s(w, &self.records)?;
        write_u32s(w, &self.record_targets)?;
        Ok(())
    }
}

/// Parse a dump. Only the framing is validated; offsets and counts are
/// checked by the executors that consume them.
pub fn read_dump<R: Read>(r: &mut R) -> Result<Layout> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if magic != DUMP_MAGIC {
        return Err(Error::LayoutCorrupt(format!("bad magic {magic:?}")));
    }
    let mut kind = [0u8; 1];
    r.read_exact(&mut kind)?;
    let n = read_u64(r)? as usize;
    let level = u32::try_from(read_u64(r)?)
        .map_err(|_| Error::LayoutCorrupt("level does not fit in 32 bits".into()))?;
    let ct = read_u64(r)? as usize;
    let t = read_u64(r)? as usize;
    match kind[0] {
        KIND_INDEXING => {
            let src_coords = read_f64s(r)?;
            let tgt_coords = read_f64s(r)?;
            let tgt_idx = read_i32s(r)?;
            let tgt_offsets = read_i32s(r)?;
            let nei_src_idx = read_i32s(r)?;
            let nei_src_offsets = read_i32s(r)?;
            let src_potentials = read_f64s(r)?;
            if level == 0 || level > 32 {
                return Err(Error::LayoutCorrupt(format!("level {level} out of range")));
            }
            Ok(Layout::Indexing(IndexingLayout {
                n,
                level,
                ct,
                t,
                src_coords,
                tgt_coords,
                tgt_idx,
                tgt_offsets,
                nei_src_idx,
                nei_src_offsets,
                src_potentials,
                reported_bytes: indexing_formula_bytes(n as u64, level, t as u64),
                build_time: Duration::ZERO,
            }))
        }
        KIND_REPETITION => {
            let records = read_f64s(r)?;
            let record_targets = read_u32s(r)?;
            if n == 0 || records.len() % n != 0 {
                return Err(Error::LayoutCorrupt(format!(
                    "{} record slots do not split into {n} records",
                    records.len()
                )));
            }
            let stride = records.len() / n;
            if stride < HEADER_SLOTS || !(stride - HEADER_SLOTS).is_multiple_of(27) {
                return Err(Error::LayoutCorrupt(format!("record stride {stride} is not 3 + 27c")));
            }
            let capacity = (stride - HEADER_SLOTS) / 27;
            Ok(Layout::Repetition(RepetitionLayout {
                n,
                level,
                ct,
                t,
                capacity,
                stride,
                records,
                record_targets,
                reported_bytes: repetition_formula_bytes(n as u64, capacity as u64),
                build_time: Duration::ZERO,
            }))
        }
        other => Err(Error::LayoutCorrupt(format!("unknown layout kind {other}"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_tree, PointSet};
    use crate::layouts::{build_indexing, build_repetition};

    fn strip_time<T: Clone>(mut l: T, f: impl FnOnce(&mut T)) -> T {
        f(&mut l);
        l
    }

    #[test]
    fn header_layout_is_fixed() {
        let p = PointSet::generate(10, 1).unwrap();
        let tree = build_tree(&p, 15, 3).unwrap();
        let layout = build_indexing(&tree, &p);
        let mut buf = Vec::new();
        layout.write_dump(&mut buf).unwrap();
        assert_eq!(&buf[..4], b"NFL1");
        assert_eq!(buf[4], KIND_INDEXING);
        assert_eq!(u64::from_le_bytes(buf[5..13].try_into().unwrap()), 10);
        assert_eq!(u64::from_le_bytes(buf[13..21].try_into().unwrap()), 3);
        assert_eq!(u64::from_le_bytes(buf[21..29].try_into().unwrap()), 15);
        assert_eq!(u64::from_le_bytes(buf[29..37].try_into().unwrap()), layout.t as u64);
        // first array: 2N source coordinates
        assert_eq!(u64::from_le_bytes(buf[37..45].try_into().unwrap()), 20);
        assert_eq!(f64::from_le_bytes(buf[45..53].try_into().unwrap()), p.sources()[0][0]);
    }

    #[test]
    fn round_trip_both_kinds() {
        let p = PointSet::generate(200, 9).unwrap();
        let tree = build_tree(&p, 6, 3).unwrap();

        let idx = build_indexing(&tree, &p);
        let mut buf = Vec::new();
        idx.write_dump(&mut buf).unwrap();
        let back = read_dump(&mut buf.as_slice()).unwrap();
        assert_eq!(back, Layout::Indexing(strip_time(idx, |l| l.build_time = Duration::ZERO)));

        let rep = build_repetition(&tree, &p);
        let mut buf = Vec::new();
        rep.write_dump(&mut buf).unwrap();
        assert_eq!(buf[4], KIND_REPETITION);
        let back = read_dump(&mut buf.as_slice()).unwrap();
        assert_eq!(back, Layout::Repetition(strip_time(rep, |l| l.build_time = Duration::ZERO)));
    }

    #[test]
    fn rejects_bad_framing() {
        assert!(matches!(read_dump(&mut &b"NFL2\x01"[..]), Err(Error::LayoutCorrupt(_))));
        let mut truncated = Vec::new();
        truncated.extend_from_slice(b"NFL1\x02");
        assert!(matches!(read_dump(&mut truncated.as_slice()), Err(Error::Io(_))));
        let mut bad_kind = b"NFL1\x09".to_vec();
        bad_kind.extend_from_slice(&[0u8; 32]);
        assert!(matches!(read_dump(&mut bad_kind.as_slice()), Err(Error::LayoutCorrupt(_))));
    }
}
