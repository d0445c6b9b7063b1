use arrayvec::ArrayVec;

use crate::error::{Error, Result};

/// Deepest supported tree level; its grid has `2^15` cells per side.
pub const MAX_LEVEL: u32 = 16;

/// The E1 neighborhood of a box: itself plus up to eight adjacent boxes.
pub type Neighbors = ArrayVec<u64, 9>;

/// Number of grid cells per side at `level`.
#[inline]
pub fn grid_side(level: u32) -> u32 {
    1 << (level - 1)
}

fn check_level(level: u32) -> Result<()> {
    if level == 0 || level > MAX_LEVEL {
        return Err(Error::InvalidArgument(format!(
            "level {level} outside 1..={MAX_LEVEL}"
        )));
    }
    Ok(())
}

// Spread the low 16 bits of `v` into the even bit positions.
#[inline]
fn part1by1(v: u32) -> u64 {
    let mut x = u64::from(v & 0xffff);
    x = (x | (x << 8)) & 0x00ff_00ff;
    x = (x | (x << 4)) & 0x0f0f_0f0f;
    x = (x | (x << 2)) & 0x3333_3333;
    x = (x | (x << 1)) & 0x5555_5555;
    x
}

#[inline]
fn compact1by1(v: u64) -> u32 {
    let mut x = v & 0x5555_5555;
    x = (x | (x >> 1)) & 0x3333_3333;
    x = (x | (x >> 2)) & 0x0f0f_0f0f;
    x = (x | (x >> 4)) & 0x00ff_00ff;
    x = (x | (x >> 8)) & 0x0000_ffff;
    x as u32
}

#[inline]
pub(crate) fn encode_unchecked(ix: u32, iy: u32) -> u64 {
    part1by1(ix) | (part1by1(iy) << 1)
}

#[inline]
pub(crate) fn decode_unchecked(code: u64) -> (u32, u32) {
    (compact1by1(code), compact1by1(code >> 1))
}

/// Interleave grid coordinates into a Morton code: `ix` fills the even bits,
/// `iy` the odd ones.
pub fn morton_encode(ix: u32, iy: u32, level: u32) -> Result<u64> {
    check_level(level)?;
    let side = grid_side(level);
    if ix >= side || iy >= side {
        return Err(Error::InvalidArgument(format!(
            "grid cell ({ix}, {iy}) outside a {side}x{side} grid at level {level}"
        )));
    }
    Ok(encode_unchecked(ix, iy))
}

pub fn morton_decode(code: u64, level: u32) -> Result<(u32, u32)> {
    check_level(level)?;
    let boxes = 1u64 << (2 * (level - 1));
    if code >= boxes {
        return Err(Error::InvalidArgument(format!(
            "Morton code {code} outside the {boxes} boxes of level {level}"
        )));
    }
    Ok(decode_unchecked(code))
}

/// The box itself plus every geometrically adjacent box, clipped at the
/// domain boundary, in ascending Morton order.
///
/// `box_code` must name a box at `level`; this is checked in debug builds only.
pub fn neighbors_e1(box_code: u64, level: u32) -> Neighbors {
    debug_assert!((1..=MAX_LEVEL).contains(&level));
    debug_assert!(box_code < 1u64 << (2 * (level - 1)));
    let side = grid_side(level) as i64;
    let (ix, iy) = decode_unchecked(box_code);
    let (ix, iy) = (i64::from(ix), i64::from(iy));
    let mut out = Neighbors::new();
    for y in (iy - 1).max(0)..=(iy + 1).min(side - 1) {
        for x in (ix - 1).max(0)..=(ix + 1).min(side - 1) {
            out.push(encode_unchecked(x as u32, y as u32));
        }
    }
    out.sort_unstable();
    out
}
