//! 8-independent hashing into `{1, -1, i, -i}`.
//!
//! A random degree-7 polynomial over `Z_p` evaluated at distinct points gives
//! 8-wise independent uniform field elements. The two low bits of the value
//! select the unit. With `p = 2^61 - 1` the low-bit map deviates from uniform
//! by at most `4/p` per unit.

use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::rng::SplitMix64;
use crate::units::ComplexUnit;

/// The Mersenne prime `2^61 - 1`.
pub const MERSENNE_61: u64 = (1 << 61) - 1;

/// Number of coefficients (degree 7).
pub const COEFFICIENTS: usize = 8;

#[inline]
fn reduce_mersenne(v: u128) -> u64 {
    let p = MERSENNE_61 as u128;
    // Two folds bring any v < 2^125 below 2^61 + 8.
    let v = (v & p) + (v >> 61);
    let v = ((v & p) + (v >> 61)) as u64;
    if v >= MERSENNE_61 {
        v - MERSENNE_61
    } else {
        v
    }
}

#[inline]
fn mul_add_mod(acc: u64, t: u64, a: u64, modulus: u64) -> u64 {
    let v = acc as u128 * t as u128 + a as u128;
    if modulus == MERSENNE_61 {
        reduce_mersenne(v)
    } else {
        (v % modulus as u128) as u64
    }
}

/// `a_7 t^7 + ... + a_1 t + a_0 mod p`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct HashPolynomial {
    coefficients: [u64; COEFFICIENTS],
    modulus: u64,
}

impl HashPolynomial {
    /// Coefficients drawn uniformly from `[0, 2^61 - 1)`, deterministically from
    /// `seed` (SplitMix64 stream, top 61 bits, rejecting the single value `p`).
    pub fn new(seed: u64) -> Self {
        let mut g = SplitMix64::new(seed);
        let mut coefficients = [0u64; COEFFICIENTS];
        for c in coefficients.iter_mut() {
            *c = loop {
                let v = g.next_u64() >> 3;
                if v < MERSENNE_61 {
                    break v;
                }
            };
        }
        HashPolynomial { coefficients, modulus: MERSENNE_61 }
    }

    /// Polynomial with explicit coefficients `[a_0, ..., a_7]` over `Z_p`.
    /// The modulus must be prime for the independence guarantee; that is the
    /// caller's responsibility.
    pub fn with_coefficients(coefficients: [u64; COEFFICIENTS], modulus: u64) -> Result<Self> {
        if !(2..=MERSENNE_61).contains(&modulus) {
            return Err(Error::invalid(format!("modulus must lie in [2, 2^61 - 1], got {modulus}")));
        }
        if let Some(c) = coefficients.iter().find(|&&c| c >= modulus) {
            return Err(Error::invalid(format!("coefficient {c} not reduced mod {modulus}")));
        }
        Ok(HashPolynomial { coefficients, modulus })
    }

    /// Draws coefficients uniformly from `[0, modulus)` using `rng`.
    pub fn random_with_modulus<R: rand::Rng + ?Sized>(rng: &mut R, modulus: u64) -> Result<Self> {
        let mut coefficients = [0u64; COEFFICIENTS];
        for c in coefficients.iter_mut() {
            *c = rng.random_range(0..modulus);
        }
        Self::with_coefficients(coefficients, modulus)
    }

    pub fn coefficients(&self) -> &[u64; COEFFICIENTS] {
        &self.coefficients
    }

    pub fn modulus(&self) -> u64 {
        self.modulus
    }

    /// Field value at `t` by Horner's rule.
    pub fn eval_field(&self, t: u64) -> Result<u64> {
        if t >= self.modulus {
            return Err(Error::HashInputOutOfField { t, modulus: self.modulus });
        }
        let mut acc = 0u64;
        for &a in self.coefficients.iter().rev() {
            acc = mul_add_mod(acc, t, a, self.modulus);
        }
        Ok(acc)
    }

    /// The unit selected by the two low bits of the field value at `t`.
    pub fn eval(&self, t: u64) -> Result<ComplexUnit> {
        self.eval_field(t).map(ComplexUnit::from_low_bits)
    }

    /// Field value from precomputed powers of `t`. All eight products are
    /// accumulated in 128 bits and reduced once; the result equals
    /// [`HashPolynomial::eval_field`].
    #[inline]
    pub(crate) fn eval_with_powers(&self, powers: &PowerTable) -> u64 {
        debug_assert_eq!(self.modulus, MERSENNE_61);
        let mut acc = 0u128;
        for (a, t) in self.coefficients.iter().zip(&powers.0) {
            acc += *a as u128 * *t as u128;
        }
        reduce_mersenne(acc)
    }

    pub const MAGIC: [u8; 4] = *b"WJLH";
    pub const ENCODED_LEN: usize = 4 + 8 * COEFFICIENTS;

    /// Magic `WJLH` followed by `a_0..a_7` as little-endian `u64`. Only
    /// polynomials over `2^61 - 1` can be encoded.
    pub fn write_to<W: Write>(&self, mut out: W) -> Result<()> {
        if self.modulus != MERSENNE_61 {
            return Err(Error::invalid("only polynomials over 2^61 - 1 can be serialized"));
        }
        let mut buf = [0u8; Self::ENCODED_LEN];
        buf[..4].copy_from_slice(&Self::MAGIC);
        for (i, c) in self.coefficients.iter().enumerate() {
            buf[4 + 8 * i..12 + 8 * i].copy_from_slice(&c.to_le_bytes());
        }
        out.write_all(&buf)?;
        Ok(())
    }

    pub fn read_from<R: Read>(mut input: R) -> Result<Self> {
        let mut buf = [0u8; Self::ENCODED_LEN];
        input.read_exact(&mut buf).map_err(|_| Error::Format("truncated WJLH record".into()))?;
        if buf[..4] != Self::MAGIC {
            return Err(Error::Format("bad magic, expected WJLH".into()));
        }
        let mut coefficients = [0u64; COEFFICIENTS];
        for (i, c) in coefficients.iter_mut().enumerate() {
            *c = u64::from_le_bytes(buf[4 + 8 * i..12 + 8 * i].try_into().unwrap());
        }
        Self::with_coefficients(coefficients, MERSENNE_61)
            .map_err(|_| Error::Format("WJLH coefficient not reduced mod 2^61 - 1".into()))
    }
}

/// `[1, t, t^2, ..., t^7] mod 2^61 - 1`, shared across many polynomials
/// evaluated at the same point.
#[derive(Debug, Clone)]
pub(crate) struct PowerTable([u64; COEFFICIENTS]);

impl PowerTable {
    pub(crate) fn new(t: u64) -> Result<Self> {
        if t >= MERSENNE_61 {
            return Err(Error::HashInputOutOfField { t, modulus: MERSENNE_61 });
        }
        let mut powers = [1u64; COEFFICIENTS];
        for i in 1..COEFFICIENTS {
            powers[i] = reduce_mersenne(powers[i - 1] as u128 * t as u128);
        }
        Ok(PowerTable(powers))
    }
}

pub fn hash_new(seed: u64) -> HashPolynomial {
    HashPolynomial::new(seed)
}

pub fn hash_eval(h: &HashPolynomial, t: u64) -> Result<ComplexUnit> {
    h.eval(t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::collections::HashSet;

    fn poly(coefficients: [u64; 8]) -> HashPolynomial {
        HashPolynomial::with_coefficients(coefficients, MERSENNE_61).unwrap()
    }

    #[test]
    fn deterministic_in_seed() {
        assert_eq!(hash_new(5), hash_new(5));
        assert_ne!(hash_new(5), hash_new(6));
    }

    #[test]
    fn no_collisions_over_ten_thousand_seeds() {
        let mut seen = HashSet::new();
        for s in 0..10_000u64 {
            assert!(seen.insert(*hash_new(s).coefficients()));
        }
    }

    #[test]
    fn coefficients_in_field_with_mean_near_half() {
        let n = 100_000u64;
        let mut total = 0f64;
        for s in 0..n {
            let h = hash_new(s);
            assert!(h.coefficients().iter().all(|&c| c < MERSENNE_61));
            total += h.coefficients()[0] as f64;
        }
        let mean = total / n as f64;
        let half = MERSENNE_61 as f64 / 2.0;
        assert!((mean - half).abs() < 0.01 * half, "mean {mean}");
    }

    #[test]
    fn constant_polynomial() {
        let h = poly([6, 0, 0, 0, 0, 0, 0, 0]);
        for t in [0, 1, 17, 1 << 40] {
            assert_eq!(h.eval(t).unwrap(), ComplexUnit::MINUS_ONE);
        }
    }

    #[test]
    fn linear_polynomial_reads_low_bits_of_t() {
        let h = poly([0, 1, 0, 0, 0, 0, 0, 0]);
        let got: Vec<u8> = (0..4).map(|t| h.eval(t).unwrap().exponent()).collect();
        assert_eq!(got, vec![0, 1, 2, 3]);
    }

    #[test]
    fn rejects_inputs_outside_field() {
        let h = hash_new(1);
        assert!(matches!(h.eval(MERSENNE_61), Err(Error::HashInputOutOfField { .. })));
        assert!(h.eval(MERSENNE_61 - 1).is_ok());
        assert!(PowerTable::new(MERSENNE_61).is_err());
        let small = HashPolynomial::with_coefficients([1; 8], 17).unwrap();
        assert!(small.eval(17).is_err());
    }

    #[test]
    fn rejects_unreduced_coefficients() {
        assert!(HashPolynomial::with_coefficients([17, 0, 0, 0, 0, 0, 0, 0], 17).is_err());
        assert!(HashPolynomial::with_coefficients([0; 8], 1).is_err());
    }

    /// Horner with `%` on 128-bit integers, independent of the Mersenne folding.
    fn reference_eval(coefficients: &[u64; 8], t: u64, p: u64) -> u64 {
        let mut acc: u128 = 0;
        for &a in coefficients.iter().rev() {
            acc = (acc * t as u128 + a as u128) % p as u128;
        }
        acc as u64
    }

    #[test]
    fn mersenne_evaluation_matches_wide_reference() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..10_000 {
            let h = HashPolynomial::random_with_modulus(&mut rng, MERSENNE_61).unwrap();
            let t = match rng.random_range(0..4) {
                0 => rng.random_range(0..16),
                1 => MERSENNE_61 - 1 - rng.random_range(0..16),
                _ => rng.random_range(0..MERSENNE_61),
            };
            let expected = reference_eval(h.coefficients(), t, MERSENNE_61);
            assert_eq!(h.eval_field(t).unwrap(), expected);
            assert_eq!(h.eval_with_powers(&PowerTable::new(t).unwrap()), expected);
        }
        let top = poly([MERSENNE_61 - 1; 8]);
        let t = MERSENNE_61 - 1;
        assert_eq!(top.eval_field(t).unwrap(), reference_eval(top.coefficients(), t, MERSENNE_61));
        assert_eq!(top.eval_with_powers(&PowerTable::new(t).unwrap()), top.eval_field(t).unwrap());
    }

    #[test]
    fn general_modulus_matches_reference() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for p in [17u64, 101, 1_000_000_007] {
            for _ in 0..1000 {
                let h = HashPolynomial::random_with_modulus(&mut rng, p).unwrap();
                let t = rng.random_range(0..p);
                assert_eq!(h.eval_field(t).unwrap(), reference_eval(h.coefficients(), t, p));
            }
        }
    }

    #[test]
    fn wjlh_round_trip() {
        let h = hash_new(77);
        let mut buf = Vec::new();
        h.write_to(&mut buf).unwrap();
        assert_eq!(buf.len(), HashPolynomial::ENCODED_LEN);
        assert_eq!(&buf[..4], b"WJLH");
        assert_eq!(u64::from_le_bytes(buf[4..12].try_into().unwrap()), h.coefficients()[0]);
        assert_eq!(HashPolynomial::read_from(&buf[..]).unwrap(), h);
        let mut bad = buf.clone();
        bad[4..12].copy_from_slice(&MERSENNE_61.to_le_bytes());
        assert!(HashPolynomial::read_from(&bad[..]).is_err());
        let small = HashPolynomial::with_coefficients([1; 8], 17).unwrap();
        assert!(small.write_to(&mut Vec::new()).is_err());
    }
}
