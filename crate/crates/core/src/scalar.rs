//! Floating point scalar abstraction shared by every algorithm in the crate.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, NumAssign, ToPrimitive};

/// Real floating point type the decompositions are generic over: `f32` or `f64`.
pub trait Real:
    Float + FromPrimitive + ToPrimitive + NumAssign + Sum + Debug + Display + Default + Send + Sync + 'static
{
    /// Converts an `f64` literal into this scalar type.
    #[inline]
    fn lit(v: f64) -> Self {
        Self::from_f64(v).expect("f64 literal representable in scalar type")
    }

    /// Converts an index or count into this scalar type.
    #[inline]
    fn from_count(n: usize) -> Self {
        Self::from_usize(n).expect("count representable in scalar type")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().expect("scalar convertible to f64")
    }
}

impl Real for f32 {}
impl Real for f64 {}

pub(crate) fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(&x, &y)| x * y).sum()
}

pub(crate) fn norm2<T: Real>(a: &[T]) -> T {
    dot(a, a).sqrt()
}

/// Flips the sign of `v` so that its first entry with magnitude above `tol` is positive.
pub(crate) fn canonical_sign<T: Real>(v: &mut [T], tol: T) {
    if let Some(first) = v.iter().copied().find(|x| x.abs() > tol) {
        if first < T::zero() {
            v.iter_mut().for_each(|x| *x = -*x);
        }
    }
}
