use crate::error::{Error, Result};
use crate::scalar::{lit, sphere_area, Real};

/// A profile `w(theta)` sampled with its derivative on `[0, alpha]`.
///
/// Between nodes the profile is the cubic Hermite interpolant of the
/// samples, so evaluation is third order accurate and `C^1`.
#[derive(Clone, Debug, PartialEq)]
pub struct ColatGrid<T> {
    nodes: Vec<T>,
    values: Vec<T>,
    derivs: Vec<T>,
}

impl<T: Real> ColatGrid<T> {
    pub fn new(nodes: Vec<T>, values: Vec<T>, derivs: Vec<T>) -> Result<Self> {
        if nodes.len() < 2 || nodes.len() != values.len() || nodes.len() != derivs.len() {
            return Err(Error::InvalidParams(format!(
                "grid needs matching node/value/derivative arrays of length >= 2 (got {}, {}, {})",
                nodes.len(),
                values.len(),
                derivs.len()
            )));
        }
        if nodes[0] != T::zero() {
            return Err(Error::InvalidParams("grid must start at theta = 0".into()));
        }
        if nodes.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidParams("grid nodes must increase strictly".into()));
        }
        Ok(Self {
            nodes,
            values,
            derivs,
        })
    }

    /// Samples a closed-form profile on a uniform grid with `n` intervals.
    pub fn from_fn(alpha: T, n: usize, f: impl Fn(T) -> (T, T)) -> Result<Self> {
        let nodes: Vec<T> = (0..=n)
            .map(|j| alpha * T::from_usize_lossy(j) / T::from_usize_lossy(n.max(1)))
            .collect();
        let (values, derivs) = nodes.iter().map(|&t| f(t)).unzip();
        Self::new(nodes, values, derivs)
    }

    pub fn alpha(&self) -> T {
        *self.nodes.last().expect("grid is nonempty")
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[T] {
        &self.nodes
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn derivs(&self) -> &[T] {
        &self.derivs
    }

    pub(crate) fn values_mut(&mut self) -> &mut [T] {
        &mut self.values
    }

    /// Largest node spacing.
    pub fn spacing(&self) -> T {
        self.nodes
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(T::zero(), T::max)
    }

    fn locate(&self, theta: T) -> usize {
        let n = self.nodes.len();
        match self
            .nodes
            .binary_search_by(|x| x.partial_cmp(&theta).unwrap_or(std::cmp::Ordering::Less))
        {
            Ok(i) => i.min(n - 2),
            Err(i) => i.saturating_sub(1).min(n - 2),
        }
    }

    /// Value and derivative of the interpolant; clamps outside `[0, alpha]`.
    pub fn eval_with_derivative(&self, theta: T) -> (T, T) {
        let theta = theta.max(T::zero()).min(self.alpha());
        let i = self.locate(theta);
        let (t0, t1) = (self.nodes[i], self.nodes[i + 1]);
        let h = t1 - t0;
        let s = (theta - t0) / h;
        let (y0, y1) = (self.values[i], self.values[i + 1]);
        let (d0, d1) = (self.derivs[i] * h, self.derivs[i + 1] * h);
        let two = lit::<T>(2.0);
        let three = lit::<T>(3.0);
        let s2 = s * s;
        let s3 = s2 * s;
        let h00 = two * s3 - three * s2 + T::one();
        let h10 = s3 - two * s2 + s;
        let h01 = -two * s3 + three * s2;
        let h11 = s3 - s2;
        let value = h00 * y0 + h10 * d0 + h01 * y1 + h11 * d1;
        let six = lit::<T>(6.0);
        let dh00 = six * s2 - six * s;
        let dh10 = three * s2 - lit::<T>(4.0) * s + T::one();
        let dh01 = -dh00;
        let dh11 = three * s2 - two * s;
        let deriv = (dh00 * y0 + dh10 * d0 + dh01 * y1 + dh11 * d1) / h;
        (value, deriv)
    }

    pub fn eval(&self, theta: T) -> T {
        self.eval_with_derivative(theta).0
    }

    pub fn eval_derivative(&self, theta: T) -> T {
        self.eval_with_derivative(theta).1
    }

    pub fn scaled(&self, factor: T) -> Self {
        Self {
            nodes: self.nodes.clone(),
            values: self.values.iter().map(|&v| v * factor).collect(),
            derivs: self.derivs.iter().map(|&v| v * factor).collect(),
        }
    }

    /// `∫ g(theta, w, w') dS` over the domain the grid describes: an arc
    /// (`dim = 2`) or a cap of `S^{dim-1}` with `w` depending on colatitude.
    pub fn integrate(&self, dim: usize, g: impl Fn(T, T, T) -> T) -> T {
        let gauss = [
            (-lit::<T>(0.6).sqrt(), lit::<T>(5.0 / 9.0)),
            (T::zero(), lit::<T>(8.0 / 9.0)),
            (lit::<T>(0.6).sqrt(), lit::<T>(5.0 / 9.0)),
        ];
        let area = if dim >= 3 { sphere_area::<T>(dim - 2) } else { T::one() };
        let half = lit::<T>(0.5);
        let mut total = T::zero();
        for w in self.nodes.windows(2) {
            let (mid, rad) = ((w[0] + w[1]) * half, (w[1] - w[0]) * half);
            for &(x, wt) in &gauss {
                let t = mid + rad * x;
                let (v, d) = self.eval_with_derivative(t);
                total = total + wt * rad * g(t, v, d) * measure_density(dim, t);
            }
        }
        total * area
    }

    /// `∫ |w| dS`.
    pub fn integral_abs(&self, dim: usize) -> T {
        self.integrate(dim, |_, v, _| v.abs())
    }

    /// `(∫ |w|^p dS)^{1/p}`.
    pub fn lp_norm(&self, dim: usize, p: T) -> T {
        self.integrate(dim, |_, v, _| v.abs().powf(p)).powf(T::one() / p)
    }

    pub fn sup_norm(&self) -> T {
        let nodal = self.values.iter().fold(T::zero(), |m, v| m.max(v.abs()));
        // the interpolant can overshoot the samples slightly between nodes
        let between = self
            .nodes
            .windows(2)
            .map(|w| self.eval((w[0] + w[1]) * lit(0.5)).abs())
            .fold(T::zero(), T::max);
        nodal.max(between)
    }
}

/// `sin^{N-2}(theta)` for caps, `1` for arcs.
#[inline]
pub(crate) fn measure_density<T: Real>(dim: usize, theta: T) -> T {
    if dim >= 3 {
        theta.sin().powi(dim as i32 - 2)
    } else {
        T::one()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn hermite_interpolation_is_accurate() {
        let g = ColatGrid::from_fn(PI, 64, |t| (t.sin(), t.cos())).unwrap();
        for k in 0..200 {
            let t = PI * k as f64 / 199.0;
            let (v, d) = g.eval_with_derivative(t);
            assert!((v - t.sin()).abs() < 1e-7);
            assert!((d - t.cos()).abs() < 1e-4);
        }
    }

    #[test]
    fn hemisphere_integrals() {
        // ∫ cos θ dS over the upper hemisphere of S^2 is π
        let g = ColatGrid::from_fn(PI / 2.0, 64, |t| (t.cos(), -t.sin())).unwrap();
        assert!((g.integral_abs(3) - PI).abs() < 1e-8, "{}", g.integral_abs(3) - PI);
        let arc = ColatGrid::from_fn(PI, 64, |t| (t.sin(), t.cos())).unwrap();
        assert!((arc.integral_abs(2) - 2.0).abs() < 1e-7);
        assert!((arc.lp_norm(2, 2.0) - (PI / 2.0).sqrt()).abs() < 1e-7);
    }

    #[test]
    fn rejects_bad_nodes() {
        assert!(ColatGrid::new(vec![0.0, 0.0], vec![1.0, 1.0], vec![0.0, 0.0]).is_err());
        assert!(ColatGrid::new(vec![0.1, 0.2], vec![1.0, 1.0], vec![0.0, 0.0]).is_err());
    }
}
