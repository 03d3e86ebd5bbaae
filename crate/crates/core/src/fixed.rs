//! Signed fixed-point numbers with 256 fractional bits and 63 integer bits.
//!
//! Used for the long memory convolutions of the extended-precision energy
//! pass. Addition is exact; multiplication rounds to the nearest 2⁻²⁵⁶.
//! Overflow past ±2⁶³ is not detected in release builds.

use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};

const LIMBS: usize = 5;
const FRAC_BITS: i32 = 256;

/// Two's-complement little-endian limbs; the value is limbs / 2²⁵⁶.
#[derive(Clone, Copy, Default, PartialEq, Eq, Hash)]
pub struct Fixed([u64; LIMBS]);

impl Fixed {
    pub const ZERO: Fixed = Fixed([0; LIMBS]);
    pub const ONE: Fixed = Fixed([0, 0, 0, 0, 1]);

    pub fn is_negative(&self) -> bool {
        self.0[LIMBS - 1] >> 63 == 1
    }

    pub fn is_zero(&self) -> bool {
        self.0 == [0; LIMBS]
    }

    pub fn abs(self) -> Fixed {
        if self.is_negative() { -self } else { self }
    }

    /// Limbs of |self| and the sign.
    fn magnitude(self) -> ([u64; LIMBS], bool) {
        let neg = self.is_negative();
        (if neg { (-self).0 } else { self.0 }, neg)
    }

    /// Exact conversion, truncating bits below 2⁻²⁵⁶.
    ///
    /// # Panics
    /// If `v` is not finite or |v| ≥ 2⁶³.
    pub fn from_f64(v: f64) -> Fixed {
        assert!(v.is_finite() && v.abs() < (1u64 << 63) as f64, "value {v} outside fixed-point range");
        if v == 0.0 {
            return Fixed::ZERO;
        }
        let bits = v.abs().to_bits();
        let raw_exp = ((bits >> 52) & 0x7ff) as i32;
        let frac = bits & ((1u64 << 52) - 1);
        let (mant, exp) = if raw_exp == 0 {
            (frac, -1074)
        } else {
            (frac | (1u64 << 52), raw_exp - 1075)
        };
        // |v| = mant · 2^exp; position of mant's lowest bit in limb units.
        let shift = exp + FRAC_BITS;
        let mut limbs = [0u64; LIMBS];
        if shift < 0 {
            if shift > -64 {
                limbs[0] = mant >> (-shift);
            }
        } else {
            let word = (shift / 64) as usize;
            let bit = (shift % 64) as u32;
            limbs[word] = mant << bit;
            if bit > 0 && word + 1 < LIMBS {
                limbs[word + 1] = mant >> (64 - bit);
            }
        }
        let out = Fixed(limbs);
        if v < 0.0 { -out } else { out }
    }

    /// Nearest double (within one ulp).
    pub fn to_f64(self) -> f64 {
        let (m, neg) = self.magnitude();
        let mut acc = 0.0;
        for (i, &limb) in m.iter().enumerate().rev() {
            acc += limb as f64 * 2f64.powi(64 * i as i32 - FRAC_BITS);
        }
        if neg { -acc } else { acc }
    }

    /// Limbs of |self| (value = Σ limb_i 2^{64i − 256}) and the sign.
    pub fn to_parts(self) -> ([u64; LIMBS], bool) {
        self.magnitude()
    }

    /// Exact multiplication by a small integer.
    pub fn mul_int(self, k: i64) -> Fixed {
        let (m, neg) = self.magnitude();
        let f = k.unsigned_abs() as u128;
        let mut out = [0u64; LIMBS];
        let mut carry = 0u128;
        for i in 0..LIMBS {
            let p = m[i] as u128 * f + carry;
            out[i] = p as u64;
            carry = p >> 64;
        }
        let r = Fixed(out);
        if neg != (k < 0) { -r } else { r }
    }

    /// Exact halving (arithmetic shift; rounds toward −∞ in the last bit).
    pub fn half(self) -> Fixed {
        let mut out = [0u64; LIMBS];
        for i in 0..LIMBS {
            let hi = if i + 1 < LIMBS {
                self.0[i + 1] << 63
            } else {
                self.0[i] & (1 << 63)
            };
            out[i] = (self.0[i] >> 1) | hi;
        }
        Fixed(out)
    }
}

impl Neg for Fixed {
    type Output = Fixed;
    fn neg(self) -> Fixed {
        let mut out = [0u64; LIMBS];
        let mut carry = true;
        for i in 0..LIMBS {
            let (s, c) = (!self.0[i]).overflowing_add(carry as u64);
            out[i] = s;
            carry = c;
        }
        Fixed(out)
    }
}

impl Add for Fixed {
    type Output = Fixed;
    #[inline]
    fn add(mut self, rhs: Fixed) -> Fixed {
        self += rhs;
        self
    }
}

impl AddAssign for Fixed {
    #[inline]
    #[allow(clippy::suspicious_op_assign_impl)]
    fn add_assign(&mut self, rhs: Fixed) {
        let mut carry = false;
        for i in 0..LIMBS {
            let (s1, c1) = self.0[i].overflowing_add(rhs.0[i]);
            let (s2, c2) = s1.overflowing_add(carry as u64);
            self.0[i] = s2;
            carry = c1 | c2;
        }
    }
}

impl Sub for Fixed {
    type Output = Fixed;
    #[inline]
    fn sub(mut self, rhs: Fixed) -> Fixed {
        self -= rhs;
        self
    }
}

impl SubAssign for Fixed {
    #[inline]
    #[allow(clippy::suspicious_op_assign_impl)]
    fn sub_assign(&mut self, rhs: Fixed) {
        let mut borrow = false;
        for i in 0..LIMBS {
            let (s1, b1) = self.0[i].overflowing_sub(rhs.0[i]);
            let (s2, b2) = s1.overflowing_sub(borrow as u64);
            self.0[i] = s2;
            borrow = b1 | b2;
        }
    }
}

impl Mul for Fixed {
    type Output = Fixed;
    #[inline]
    fn mul(self, rhs: Fixed) -> Fixed {
        let (a, na) = self.magnitude();
        let (b, nb) = rhs.magnitude();
        let mut prod = [0u64; 2 * LIMBS];
        for i in 0..LIMBS {
            if a[i] == 0 {
                continue;
            }
            let mut carry = 0u128;
            for j in 0..LIMBS {
                let t = a[i] as u128 * b[j] as u128 + prod[i + j] as u128 + carry;
                prod[i + j] = t as u64;
                carry = t >> 64;
            }
            prod[i + LIMBS] = carry as u64;
        }
        debug_assert!(prod[2 * LIMBS - 1] == 0 && prod[2 * LIMBS - 2] >> 63 == 0, "fixed-point overflow");
        let mut out = [0u64; LIMBS];
        out.copy_from_slice(&prod[LIMBS - 1..2 * LIMBS - 1]);
        let mut r = Fixed(out);
        if prod[LIMBS - 2] >> 63 == 1 {
            r += Fixed([1, 0, 0, 0, 0]);
        }
        if na != nb { -r } else { r }
    }
}

impl fmt::Debug for Fixed {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Fixed({:e})", self.to_f64())
    }
}
