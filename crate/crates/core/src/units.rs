//! Fourth roots of unity and the complex carrier type.
//!
//! Projection entries and hash outputs are drawn from `{1, i, -1, -i}`. They are
//! stored as a 2-bit exponent so that multiplying a real scalar by one of them
//! never touches a floating-point multiplier: it is a component selection plus
//! an optional sign flip.

use std::fmt;
use std::ops::Mul;

pub use num_complex::Complex64 as Complex;

/// `i^exponent` for `exponent` in `0..4`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ComplexUnit(u8);

impl ComplexUnit {
    pub const ONE: ComplexUnit = ComplexUnit(0);
    pub const I: ComplexUnit = ComplexUnit(1);
    pub const MINUS_ONE: ComplexUnit = ComplexUnit(2);
    pub const MINUS_I: ComplexUnit = ComplexUnit(3);

    pub const ALL: [ComplexUnit; 4] = [Self::ONE, Self::I, Self::MINUS_ONE, Self::MINUS_I];

    /// Builds the unit from the two low bits of `bits`.
    #[inline]
    pub const fn from_low_bits(bits: u64) -> Self {
        ComplexUnit((bits & 3) as u8)
    }

    /// Returns `None` unless `exponent < 4`.
    pub const fn from_exponent(exponent: u8) -> Option<Self> {
        if exponent < 4 {
            Some(ComplexUnit(exponent))
        } else {
            None
        }
    }

    #[inline]
    pub const fn exponent(self) -> u8 {
        self.0
    }

    #[inline]
    pub const fn mul(self, other: ComplexUnit) -> ComplexUnit {
        ComplexUnit((self.0 + other.0) & 3)
    }

    #[inline]
    pub const fn pow(self, n: u32) -> ComplexUnit {
        ComplexUnit(((self.0 as u32 * (n & 3)) & 3) as u8)
    }

    pub fn to_complex(self) -> Complex {
        match self.0 {
            0 => Complex::new(1.0, 0.0),
            1 => Complex::new(0.0, 1.0),
            2 => Complex::new(-1.0, 0.0),
            _ => Complex::new(0.0, -1.0),
        }
    }

    /// Inverse of [`ComplexUnit::to_complex`]; `None` if `z` is not exactly a unit.
    pub fn from_complex(z: Complex) -> Option<Self> {
        ComplexUnit::ALL.into_iter().find(|u| u.to_complex() == z)
    }
}

impl Mul for ComplexUnit {
    type Output = ComplexUnit;

    #[inline]
    fn mul(self, rhs: ComplexUnit) -> ComplexUnit {
        ComplexUnit::mul(self, rhs)
    }
}

impl fmt::Display for ComplexUnit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self.0 {
            0 => "1",
            1 => "i",
            2 => "-1",
            _ => "-i",
        })
    }
}

pub fn unit_mul(a: ComplexUnit, b: ComplexUnit) -> ComplexUnit {
    a * b
}

/// `acc + s * u` without a floating multiply.
///
/// Bit 0 of the exponent selects the component (real for 1/-1, imaginary for
/// i/-i), bit 1 flips the sign of `s`.
#[inline(always)]
pub fn unit_axpy(acc: Complex, u: ComplexUnit, s: f64) -> Complex {
    let e = u.exponent() as u64;
    let signed = f64::from_bits(s.to_bits() ^ ((e >> 1) << 63));
    let mut parts = [acc.re, acc.im];
    parts[(e & 1) as usize] += signed;
    Complex::new(parts[0], parts[1])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn u(e: u8) -> ComplexUnit {
        ComplexUnit::from_exponent(e).unwrap()
    }

    #[test]
    fn unit_mul_examples() {
        assert_eq!(unit_mul(u(1), u(1)), u(2));
        assert_eq!(unit_mul(u(0), u(3)), u(3));
        assert_eq!(unit_mul(u(2), u(2)), u(0));
    }

    #[test]
    fn unit_mul_matches_complex_product_exhaustively() {
        for a in ComplexUnit::ALL {
            for b in ComplexUnit::ALL {
                let ab = a * b;
                assert_eq!(ab.exponent(), (a.exponent() + b.exponent()) % 4);
                assert_eq!(ab.to_complex(), a.to_complex() * b.to_complex());
                assert_eq!(ab, b * a);
                for c in ComplexUnit::ALL {
                    assert_eq!((a * b) * c, a * (b * c));
                }
            }
        }
    }

    #[test]
    fn fourth_power_is_one() {
        for a in ComplexUnit::ALL {
            assert_eq!(a.pow(4), ComplexUnit::ONE);
            assert_eq!(a * a * a * a, ComplexUnit::ONE);
        }
    }

    #[test]
    fn complex_round_trip() {
        for a in ComplexUnit::ALL {
            assert_eq!(ComplexUnit::from_complex(a.to_complex()), Some(a));
        }
        assert_eq!(ComplexUnit::from_complex(Complex::new(0.5, 0.0)), None);
        assert_eq!(ComplexUnit::from_exponent(4), None);
    }

    #[test]
    fn axpy_examples() {
        assert_eq!(unit_axpy(Complex::new(0.0, 0.0), u(1), 2.5), Complex::new(0.0, 2.5));
        assert_eq!(unit_axpy(Complex::new(1.0, 1.0), u(2), 3.0), Complex::new(-2.0, 1.0));
        assert_eq!(unit_axpy(Complex::new(0.0, 0.0), u(0), 0.0), Complex::new(0.0, 0.0));
    }

    proptest::proptest! {
        #[test]
        fn axpy_matches_complex_arithmetic(
            re in -1e6f64..1e6,
            im in -1e6f64..1e6,
            s in -1e6f64..1e6,
            e in 0u8..4,
        ) {
            let acc = Complex::new(re, im);
            let unit = u(e);
            let expected = acc + unit.to_complex() * Complex::new(s, 0.0);
            let got = unit_axpy(acc, unit, s);
            proptest::prop_assert_eq!(got, expected);
        }
    }
}
