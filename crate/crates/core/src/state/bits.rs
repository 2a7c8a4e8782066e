//! Transform constructors for `2^n`-state spaces read as bit strings.
//!
//! Bit positions are 1-based and counted from the most significant bit, so on
//! three bits the state `b1 b2 b3` has index `4·b1 + 2·b2 + b3`. Cellular
//! automaton cells are 0-based: cell `c` is bit position `c + 1`.

use crate::error::{Error, Result};
use crate::state::{StateIndex, Transform};

pub fn bit_string(x: StateIndex, nbits: u32) -> String {
    (1..=nbits).map(|p| if get_bit(x, nbits, p) { '1' } else { '0' }).collect()
}

fn check_width(nbits: u32) -> Result<usize> {
    if nbits == 0 || nbits > 24 {
        return Err(Error::InvalidSpace(format!("bit width {nbits} outside 1..=24")));
    }
    Ok(1usize << nbits)
}

fn check_pos(nbits: u32, pos: u32) -> Result<()> {
    if pos == 0 || pos > nbits {
        return Err(Error::InvalidTransform(format!("bit position {pos} outside 1..={nbits}")));
    }
    Ok(())
}

pub fn position_mask(nbits: u32, pos: u32) -> StateIndex {
    1 << (nbits - pos)
}

pub fn get_bit(x: StateIndex, nbits: u32, pos: u32) -> bool {
    x & position_mask(nbits, pos) != 0
}

pub fn xor_mask(nbits: u32, mask: StateIndex) -> Result<Transform> {
    let size = check_width(nbits)?;
    if mask >= size {
        return Err(Error::InvalidTransform(format!("mask {mask} wider than {nbits} bits")));
    }
    Ok(Transform::from_fn(size, |x| x ^ mask)?.named(format!("xor_mask:{mask}")))
}

pub fn flip_bit(nbits: u32, pos: u32) -> Result<Transform> {
    check_pos(nbits, pos)?;
    Ok(xor_mask(nbits, position_mask(nbits, pos))?.named(format!("flip_bit:{pos}")))
}

pub fn set_bit(nbits: u32, pos: u32, value: bool) -> Result<Transform> {
    let size = check_width(nbits)?;
    check_pos(nbits, pos)?;
    let m = position_mask(nbits, pos);
    let t = Transform::from_fn(size, |x| if value { x | m } else { x & !m })?;
    Ok(t.named(format!("set_bit:{pos}={}", u8::from(value))))
}

pub fn swap_bits(nbits: u32, i: u32, j: u32) -> Result<Transform> {
    let size = check_width(nbits)?;
    check_pos(nbits, i)?;
    check_pos(nbits, j)?;
    let (mi, mj) = (position_mask(nbits, i), position_mask(nbits, j));
    let t = Transform::from_fn(size, |x| {
        let bi = x & mi != 0;
        let bj = x & mj != 0;
        let mut y = x & !(mi | mj);
        if bi {
            y |= mj;
        }
        if bj {
            y |= mi;
        }
        y
    })?;
    Ok(t.named(format!("swap_bits:{i},{j}")))
}

/// Cyclic shift of all bit positions: `b1 b2 … bn ↦ b2 … bn b1`.
pub fn rotate_bits(nbits: u32) -> Result<Transform> {
    let size = check_width(nbits)?;
    let t = Transform::from_fn(size, |x| ((x << 1) | (x >> (nbits - 1))) & (size - 1))?;
    Ok(t.named("rotate"))
}

/// Applies the given bit transforms in order (first element acts first).
pub fn sequence(nbits: u32, steps: &[Transform]) -> Result<Transform> {
    let size = check_width(nbits)?;
    let mut table: Vec<StateIndex> = (0..size).collect();
    for step in steps {
        if step.len() != size {
            return Err(Error::size(size, step.len()));
        }
        for y in table.iter_mut() {
            *y = step.apply(*y);
        }
    }
    let name = steps.iter().map(|s| s.name()).collect::<Vec<_>>().join(";");
    Ok(Transform::new(table)?.named(name))
}

/// One tick of the linear rule-150 automaton on a line of `ncells` cells
/// with fixed zero boundaries: `c_i' = c_{i-1} ⊕ c_i ⊕ c_{i+1}`.
pub fn rule150(ncells: u32) -> Result<Transform> {
    let size = check_width(ncells)?;
    let n = ncells as i64;
    let cell = |x: StateIndex, c: i64| -> bool { (0..n).contains(&c) && get_bit(x, ncells, (c + 1) as u32) };
    let t = Transform::from_fn(size, |x| {
        let mut y = 0;
        for c in 0..n {
            if cell(x, c - 1) ^ cell(x, c) ^ cell(x, c + 1) {
                y |= position_mask(ncells, (c + 1) as u32);
            }
        }
        y
    })?;
    Ok(t.named("ca_rule150"))
}

/// Flips cell `cell` (0-based) of a cellular-automaton line.
pub fn flip_cell(ncells: u32, cell: u32) -> Result<Transform> {
    Ok(flip_bit(ncells, cell + 1)?.named(format!("flip_cell:{cell}")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bit_conventions() {
        assert_eq!(bit_string(0b101, 3), "101");
        assert!(get_bit(0b100, 3, 1));
        assert!(!get_bit(0b100, 3, 3));
        assert_eq!(flip_bit(3, 1).unwrap().apply(0), 4);
    }

    #[test]
    fn set_and_swap() {
        assert_eq!(set_bit(3, 3, false).unwrap().apply(0b111), 0b110);
        assert_eq!(set_bit(3, 1, true).unwrap().apply(0b000), 0b100);
        let s = swap_bits(3, 1, 2).unwrap();
        assert_eq!(s.apply(0b100), 0b010);
        assert_eq!(s.apply(0b110), 0b110);
        assert!(s.is_permutation());
    }

    #[test]
    fn rotate_has_order_three() {
        let r = rotate_bits(3).unwrap();
        assert_eq!(r.apply(0b100), 0b001);
        assert!(r.power(3).is_identity());
        assert!(!r.power(1).is_identity());
    }

    #[test]
    fn rule150_single_cell() {
        let step = rule150(5).unwrap();
        // middle cell spreads to its neighbours and keeps itself
        assert_eq!(step.apply(0b00100), 0b01110);
        // boundary cell only has one neighbour
        assert_eq!(step.apply(0b10000), 0b11000);
    }

    #[test]
    fn invalid_positions() {
        assert!(flip_bit(3, 0).is_err());
        assert!(flip_bit(3, 4).is_err());
        assert!(xor_mask(3, 8).is_err());
    }
}
