//! Fixed-point encoding of amplitude components onto the binary tape.
//!
//! A `p`-bit code covers [-1, 1] with a mid-rise grid: level `i` sits at
//! `-1 + (2i + 1)·2^-p`, stored as the two's-complement signed index
//! `i - 2^(p-1)`, most significant bit first. Every value in [-1, 1]
//! round-trips within `2^-p` — including the endpoints, which a plain
//! Q1.(p-1) grid cannot represent.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FixedPointError {
    #[error("precision of {0} bits cannot represent a normalized amplitude (need 2..=52)")]
    BadPrecision(u32),
    #[error("bit slice length {got} does not match the codec width {want}")]
    WidthMismatch { got: usize, want: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FixedPointCodec {
    bits: u32,
}

impl FixedPointCodec {
    pub fn new(bits: u32) -> Result<FixedPointCodec, FixedPointError> {
        if !(2..=52).contains(&bits) {
            return Err(FixedPointError::BadPrecision(bits));
        }
        Ok(FixedPointCodec { bits })
    }

    pub fn bits(&self) -> u32 {
        self.bits
    }

    /// Worst-case round-trip error for values in [-1, 1].
    pub fn quantization_error(&self) -> f64 {
        (-(self.bits as f64)).exp2()
    }

    /// Encode one real component, saturating outside [-1, 1].
    pub fn encode(&self, value: f64) -> Vec<bool> {
        let p = self.bits;
        let levels = 1u64 << p;
        let scaled = (value.clamp(-1.0, 1.0) + 1.0) * (levels / 2) as f64;
        let index = (scaled.floor() as i64).clamp(0, levels as i64 - 1) as u64;
        let stored = index.wrapping_sub(levels / 2) & (levels - 1);
        (0..p).rev().map(|i| (stored >> i) & 1 == 1).collect()
    }

    pub fn decode(&self, bits: &[bool]) -> Result<f64, FixedPointError> {
        let p = self.bits;
        if bits.len() != p as usize {
            return Err(FixedPointError::WidthMismatch {
                got: bits.len(),
                want: p as usize,
            });
        }
        let mut stored = 0u64;
        for &b in bits {
            stored = (stored << 1) | b as u64;
        }
        // Sign-extend the two's-complement index.
        let half = 1i64 << (p - 1);
        let signed = if stored >= half as u64 {
            stored as i64 - (1i64 << p)
        } else {
            stored as i64
        };
        Ok((2 * signed + 1) as f64 * (-(p as f64 + 1.0)).exp2() * 2.0)
    }
}

/// Raw IEEE-754 bits, most significant first. Used for the evolution-time
/// slot of oracle arguments, which is not an amplitude and round-trips
/// exactly.
pub fn f64_to_bits(value: f64) -> Vec<bool> {
    let raw = value.to_bits();
    (0..64).rev().map(|i| (raw >> i) & 1 == 1).collect()
}

pub fn f64_from_bits(bits: &[bool]) -> Result<f64, FixedPointError> {
    if bits.len() != 64 {
        return Err(FixedPointError::WidthMismatch {
            got: bits.len(),
            want: 64,
        });
    }
    let mut raw = 0u64;
    for &b in bits {
        raw = (raw << 1) | b as u64;
    }
    Ok(f64::from_bits(raw))
}

/// Unsigned counter slot for driver-style oracle arguments.
pub fn u32_to_bits(value: u32) -> Vec<bool> {
    (0..32).rev().map(|i| (value >> i) & 1 == 1).collect()
}

pub fn u32_from_bits(bits: &[bool]) -> Result<u32, FixedPointError> {
    if bits.len() != 32 {
        return Err(FixedPointError::WidthMismatch {
            got: bits.len(),
            want: 32,
        });
    }
    let mut raw = 0u32;
    for &b in bits {
        raw = (raw << 1) | b as u32;
    }
    Ok(raw)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn round_trip_error_is_within_quantum_everywhere() {
        for p in [2u32, 3, 8, 16, 24] {
            let codec = FixedPointCodec::new(p).unwrap();
            let q = codec.quantization_error();
            let mut rng = ChaCha8Rng::seed_from_u64(p as u64);
            let mut worst: f64 = 0.0;
            for _ in 0..2000 {
                let v: f64 = rng.gen_range(-1.0..=1.0);
                let back = codec.decode(&codec.encode(v)).unwrap();
                worst = worst.max((back - v).abs());
            }
            for v in [-1.0, -0.5, 0.0, 0.5, 1.0] {
                let back = codec.decode(&codec.encode(v)).unwrap();
                worst = worst.max((back - v).abs());
            }
            assert!(worst <= q + 1e-18, "p={p}: worst {worst} > {q}");
        }
    }

    #[test]
    fn endpoints_round_trip_within_quantum() {
        let codec = FixedPointCodec::new(16).unwrap();
        let q = codec.quantization_error();
        assert!((codec.decode(&codec.encode(1.0)).unwrap() - 1.0).abs() <= q);
        assert!((codec.decode(&codec.encode(-1.0)).unwrap() + 1.0).abs() <= q);
    }

    #[test]
    fn out_of_range_values_saturate() {
        let codec = FixedPointCodec::new(8).unwrap();
        let hi = codec.decode(&codec.encode(5.0)).unwrap();
        let lo = codec.decode(&codec.encode(-5.0)).unwrap();
        assert!((hi - 1.0).abs() <= codec.quantization_error());
        assert!((lo + 1.0).abs() <= codec.quantization_error());
    }

    #[test]
    fn too_small_precision_is_rejected() {
        assert!(FixedPointCodec::new(1).is_err());
        assert!(FixedPointCodec::new(0).is_err());
        assert!(FixedPointCodec::new(2).is_ok());
    }

    #[test]
    fn f64_slot_round_trips_exactly() {
        for v in [0.0, 1.5, -std::f64::consts::PI, 1e-300, f64::MAX] {
            assert_eq!(f64_from_bits(&f64_to_bits(v)).unwrap(), v);
        }
    }

    #[test]
    fn counter_slot_round_trips() {
        for v in [0u32, 1, 77, u32::MAX] {
            assert_eq!(u32_from_bits(&u32_to_bits(v)).unwrap(), v);
        }
    }
}
