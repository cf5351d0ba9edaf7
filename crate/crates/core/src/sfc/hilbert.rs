//! 3D Hilbert curve on a `2^L` lattice, via Skilling's transposed-index
//! formulation ("Programming the Hilbert curve", AIP Conf. Proc. 707, 2004).

use crate::{Error, Result};

/// Highest supported level; `3 * MAX_LEVEL` bits fit comfortably in a `u64`.
pub const MAX_LEVEL: u32 = 20;

fn check_level(level: u32) -> Result<()> {
    if (1..=MAX_LEVEL).contains(&level) {
        Ok(())
    } else {
        Err(Error::invalid(format!("SFC level must be in 1..={MAX_LEVEL}, got {level}")))
    }
}

/// Hilbert index of a lattice cell, in `[0, 2^(3 * level))`.
pub fn hilbert_key(cell: [u32; 3], level: u32) -> Result<u64> {
    check_level(level)?;
    let side = 1u64 << level;
    if let Some(c) = cell.iter().find(|&&c| u64::from(c) >= side) {
        return Err(Error::invalid(format!("cell coordinate {c} out of range for level {level}")));
    }
    Ok(encode(cell, level))
}

/// Inverse of [`hilbert_key`].
pub fn hilbert_cell(key: u64, level: u32) -> Result<[u32; 3]> {
    check_level(level)?;
    if key >> (3 * level) != 0 {
        return Err(Error::invalid(format!("key {key} out of range for level {level}")));
    }
    Ok(decode(key, level))
}

pub(crate) fn encode(cell: [u32; 3], level: u32) -> u64 {
    let mut x = cell;
    let m = 1u32 << (level - 1);

    // Inverse undo.
    let mut q = m;
    while q > 1 {
        let p = q - 1;
        for i in 0..3 {
            if x[i] & q != 0 {
                x[0] ^= p;
            } else {
                let t = (x[0] ^ x[i]) & p;
                x[0] ^= t;
                x[i] ^= t;
            }
        }
        q >>= 1;
    }

    // Gray encode.
    x[1] ^= x[0];
    x[2] ^= x[1];
    let mut t = 0;
    let mut q = m;
    while q > 1 {
        if x[2] & q != 0 {
            t ^= q - 1;
        }
        q >>= 1;
    }
    for v in &mut x {
        *v ^= t;
    }

    // Interleave the transposed form, most significant bit first.
    let mut key = 0u64;
    for bit in (0..level).rev() {
        for v in x {
            key = (key << 1) | u64::from((v >> bit) & 1);
        }
    }
    key
}

pub(crate) fn decode(key: u64, level: u32) -> [u32; 3] {
    let mut x = [0u32; 3];
    for bit in 0..level {
        for (i, v) in x.iter_mut().enumerate() {
            let shift = 3 * bit + (2 - i as u32);
            *v |= (((key >> shift) & 1) as u32) << bit;
        }
    }

    // Gray decode.
    let n = 2u32 << (level - 1);
    let t = x[2] >> 1;
    x[2] ^= x[1];
    x[1] ^= x[0];
    x[0] ^= t;

    // Undo excess work.
    let mut q = 2;
    while q != n {
        let p = q - 1;
        for i in (0..3).rev() {
            if x[i] & q != 0 {
                x[0] ^= p;
            } else {
                let t = (x[0] ^ x[i]) & p;
                x[0] ^= t;
                x[i] ^= t;
            }
        }
        q <<= 1;
    }
    x
}
