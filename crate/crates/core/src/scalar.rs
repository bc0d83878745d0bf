use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Floating point scalar used throughout the solvers: `f32` or `f64`.
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + Sum<Self>
    + Debug
    + Display
    + Default
    + Send
    + Sync
    + 'static
{
    /// Converts an `f64` literal into this scalar.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("literal representable in scalar type")
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    #[inline]
    fn from_usize_lossy(n: usize) -> Self {
        Self::from_usize(n).expect("index representable in scalar type")
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Shorthand for [`Real::lit`].
#[inline]
pub fn lit<T: Real>(x: f64) -> T {
    T::lit(x)
}

pub(crate) type Vec3<T> = [T; 3];

#[inline]
pub(crate) fn dot3<T: Real>(a: &Vec3<T>, b: &Vec3<T>) -> T {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

#[inline]
pub(crate) fn cross3<T: Real>(a: &Vec3<T>, b: &Vec3<T>) -> Vec3<T> {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

#[inline]
pub(crate) fn norm3<T: Real>(a: &Vec3<T>) -> T {
    dot3(a, a).sqrt()
}

#[inline]
pub(crate) fn sub3<T: Real>(a: &Vec3<T>, b: &Vec3<T>) -> Vec3<T> {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

#[inline]
pub(crate) fn add3<T: Real>(a: &Vec3<T>, b: &Vec3<T>) -> Vec3<T> {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

#[inline]
pub(crate) fn scale3<T: Real>(s: T, a: &Vec3<T>) -> Vec3<T> {
    [s * a[0], s * a[1], s * a[2]]
}

#[inline]
pub(crate) fn normalize3<T: Real>(a: &Vec3<T>) -> Vec3<T> {
    let n = norm3(a);
    [a[0] / n, a[1] / n, a[2] / n]
}

/// Great-circle angle between two (not necessarily unit) vectors.
#[inline]
pub(crate) fn angle3<T: Real>(a: &Vec3<T>, b: &Vec3<T>) -> T {
    norm3(&cross3(a, b)).atan2(dot3(a, b))
}

/// Area of the unit sphere S^{k} embedded in R^{k+1}.
pub fn sphere_area<T: Real>(k: usize) -> T {
    // |S^k| = 2 pi^{(k+1)/2} / Gamma((k+1)/2), computed by the two-step recursion
    // |S^k| = 2 pi / (k - 1) |S^{k-2}|.
    let two_pi = T::PI() + T::PI();
    let (mut area, mut j) = if k % 2 == 0 {
        (lit::<T>(2.0), 0usize)
    } else {
        (two_pi, 1usize)
    };
    while j < k {
        j += 2;
        area = area * two_pi / T::from_usize_lossy(j - 1);
    }
    area
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sphere_areas() {
        assert!((sphere_area::<f64>(0) - 2.0).abs() < 1e-15);
        assert!((sphere_area::<f64>(1) - 2.0 * std::f64::consts::PI).abs() < 1e-14);
        assert!((sphere_area::<f64>(2) - 4.0 * std::f64::consts::PI).abs() < 1e-14);
        let pi = std::f64::consts::PI;
        assert!((sphere_area::<f64>(3) - 2.0 * pi * pi).abs() < 1e-12);
        assert!((sphere_area::<f64>(4) - 8.0 * pi * pi / 3.0).abs() < 1e-12);
    }

    #[test]
    fn angle_is_accurate_near_zero() {
        let a = [1.0f64, 0.0, 0.0];
        let b = [1.0f64, 1e-9, 0.0];
        assert!((angle3(&a, &b) - 1e-9).abs() < 1e-20);
    }
}
