use super::{FlatFields, HPoly};
use crate::qalg::Dim;
use crate::scalar::{Rational, Scalar};

/// A polynomial known to be exact in every weight up to and including `valid`.
///
/// Terms above `valid` are discarded. A negative bound means nothing is known.
#[derive(Clone, Debug, PartialEq)]
pub struct Series {
    pub poly: HPoly,
    pub valid: i64,
}

impl Series {
    pub fn exact(poly: HPoly, valid: i64) -> Self {
        let poly = if valid < 0 { HPoly::zero(poly.dim) } else { poly.truncate(valid as usize) };
        Series { poly, valid }
    }

    pub fn zero(dim: Dim, valid: i64) -> Self {
        Series { poly: HPoly::zero(dim), valid }
    }

    pub fn constant(dim: Dim, c: Rational, valid: i64) -> Self {
        Series::exact(HPoly::constant(dim, c), valid)
    }

    pub fn dim(&self) -> Dim {
        self.poly.dim
    }

    /// Lowest weight present, or `valid + 1` when the known part vanishes.
    pub fn order(&self) -> i64 {
        self.poly.min_weight().map_or(self.valid + 1, |w| w as i64)
    }

    pub fn add(&self, o: &Series) -> Series {
        Series::exact(self.poly.add(&o.poly), self.valid.min(o.valid))
    }

    pub fn sub(&self, o: &Series) -> Series {
        Series::exact(self.poly.sub(&o.poly), self.valid.min(o.valid))
    }

    pub fn scale(&self, s: &Rational) -> Series {
        Series { poly: self.poly.scale(s), valid: self.valid }
    }

    pub fn neg(&self) -> Series {
        self.scale(&Rational::from_i64(-1))
    }

    pub fn mul(&self, o: &Series) -> Series {
        let valid = (self.valid + o.order()).min(o.valid + self.order());
        if valid < 0 || self.poly.is_zero() || o.poly.is_zero() {
            return Series::zero(self.dim(), valid);
        }
        Series { poly: self.poly.mul_truncated(&o.poly, valid as usize), valid }
    }

    /// Drops everything above `w`.
    pub fn cap(&self, w: i64) -> Series {
        Series::exact(self.poly.clone(), self.valid.min(w))
    }

    pub fn x(&self, fields: &FlatFields, alpha: usize) -> Series {
        Series::exact(fields.x(alpha, &self.poly), self.valid - 1)
    }

    pub fn t(&self, fields: &FlatFields, i: usize) -> Series {
        Series::exact(fields.t(i, &self.poly), self.valid - 2)
    }

    pub fn field(&self, fields: &FlatFields, a: usize) -> Series {
        if a < self.dim().h() {
            self.x(fields, a)
        } else {
            self.t(fields, a - self.dim().h())
        }
    }

    /// `exp(self)` for a series vanishing at the origin.
    pub fn exp(&self) -> Series {
        assert!(self.poly.value_at_origin().is_zero(), "exp needs a series vanishing at the origin");
        let dim = self.dim();
        let valid = self.valid;
        let mut acc = Series::constant(dim, Rational::one(), valid);
        let mut term = acc.clone();
        let mut k = 1i64;
        while !term.poly.is_zero() {
            term = term.mul(self).scale(&Rational::ratio(1, k)).cap(valid);
            acc = acc.add(&term);
            k += 1;
        }
        acc.cap(valid)
    }

    pub fn value_at_origin(&self) -> Option<Rational> {
        (self.valid >= 0).then(|| self.poly.value_at_origin())
    }
}
