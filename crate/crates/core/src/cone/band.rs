use serde::Serialize;

use super::ConeField;
use crate::error::{Error, Result};
use crate::scalar::{lit, Real};

/// Range of `B = |∇u| d(x) / u` over the band near the lateral boundary.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BandReport<T> {
    pub kappa: T,
    pub nodes: usize,
    pub min: T,
    pub max: T,
    pub ratio: T,
    /// Largest admissible `max/min`.
    pub factor: T,
}

/// `B` at one node of the band.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BandSample<T> {
    pub row: usize,
    pub col: usize,
    pub r: T,
    pub theta: T,
    pub value: T,
}

/// Evaluates `B` at interior nodes of the middle third of `[ln a, ln b]`
/// whose angular distance `d` to the lateral boundary has `sin d ≤ kappa`
/// and `d ≤ π/2`, where the distance to the cone boundary is `r sin d`.
///
/// Nodal gradients average the element gradients with their areas in
/// `(s, θ)`, independent of the energy density.
pub fn band_samples<T: Real>(field: &ConeField<T>, kappa: T) -> Vec<BandSample<T>> {
    let grid = field.grid();
    let space = grid.space();
    let coords = space.coords();
    let u = field.values();
    let n = space.n_nodes();
    let mut acc = vec![[T::zero(); 2]; n];
    let mut wsum = vec![T::zero(); n];
    for e in space.elements() {
        let [a, b, c] = e.nodes;
        let (pa, pb, pc) = (coords[a], coords[b], coords[c]);
        let area = ((pb[0] - pa[0]) * (pc[1] - pa[1]) - (pc[0] - pa[0]) * (pb[1] - pa[1])).abs() * lit(0.5);
        let g = e.gradient(u);
        for &i in e.local() {
            acc[i][0] = acc[i][0] + area * g[0];
            acc[i][1] = acc[i][1] + area * g[1];
            wsum[i] = wsum[i] + area;
        }
    }
    let s = grid.s();
    let (s0, s1) = (s[0], s[s.len() - 1]);
    let third = (s1 - s0) / lit(3.0);
    let slack = (s[1] - s[0]) * T::epsilon().sqrt();
    let mut out = Vec::new();
    for (j, &sj) in s.iter().enumerate() {
        if sj < s0 + third - slack || sj > s1 - third + slack {
            continue;
        }
        for (i, &t) in grid.theta().iter().enumerate() {
            let k = grid.index(j, i);
            let d = grid.cone().boundary_angle(t);
            if space.is_boundary(k) || !(d > T::zero()) || d > T::FRAC_PI_2() || d.sin() > kappa {
                continue;
            }
            let g = acc[k];
            let grad = (g[0] * g[0] + g[1] * g[1]).sqrt() / wsum[k];
            out.push(BandSample {
                row: j,
                col: i,
                r: sj.exp(),
                theta: t,
                value: grad * d.sin() / u[k],
            });
        }
    }
    out
}

/// Range of `B` over [`band_samples`]; fails when `B` leaves `(0, ∞)` or
/// `max/min` exceeds `factor`.
pub fn nondegeneracy_check<T: Real>(field: &ConeField<T>, kappa: T, factor: T) -> Result<BandReport<T>> {
    band_report(&band_samples(field, kappa), kappa, factor)
}

/// [`nondegeneracy_check`] on a given set of samples.
pub fn band_report<T: Real>(samples: &[BandSample<T>], kappa: T, factor: T) -> Result<BandReport<T>> {
    let mut min = T::infinity();
    let mut max = T::zero();
    for s in samples {
        if !(s.value > T::zero() && s.value.is_finite()) {
            return Err(Error::NondegeneracyFailure(format!(
                "B = {} at r = {}, theta = {}",
                s.value, s.r, s.theta
            )));
        }
        min = min.min(s.value);
        max = max.max(s.value);
    }
    let nodes = samples.len();
    if nodes == 0 {
        return Err(Error::NondegeneracyFailure(format!("no grid nodes with sin d <= {kappa}")));
    }
    let ratio = max / min;
    if ratio > factor {
        return Err(Error::NondegeneracyFailure(format!(
            "max/min of B is {ratio} over {nodes} nodes, above {factor}"
        )));
    }
    Ok(BandReport {
        kappa,
        nodes,
        min,
        max,
        ratio,
        factor,
    })
}

/// Band ratios of one field on a grid and on its uniform refinement.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BandRefinement<T> {
    pub coarse: BandReport<T>,
    pub fine: BandReport<T>,
    /// Fine-grid band restricted to the coarse nodes.
    pub fine_common: BandReport<T>,
    /// Coarse cell size `h`.
    pub h: T,
    /// `fine_common.ratio <= (1 + h²) coarse.ratio`.
    pub stable: bool,
}

/// Compares the band on the nodes shared by `coarse` and `fine`, where the
/// fine grid halves both spacings. Restricting to shared nodes keeps the
/// sampled strip fixed, so only the field approximation changes; a change
/// within the `O(h²)` accuracy of the fields does not count as growth.
pub fn band_refinement<T: Real>(
    coarse: &ConeField<T>,
    fine: &ConeField<T>,
    kappa: T,
    factor: T,
) -> Result<BandRefinement<T>> {
    let (gc, gf) = (coarse.grid(), fine.grid());
    if gf.n_rows() - 1 != 2 * (gc.n_rows() - 1) || gf.n_cols() - 1 != 2 * (gc.n_cols() - 1) {
        return Err(Error::MeshError("fine grid must halve both coarse spacings".into()));
    }
    let coarse_samples = band_samples(coarse, kappa);
    let fine_samples = band_samples(fine, kappa);
    let common: Vec<BandSample<T>> = fine_samples
        .iter()
        .filter(|s| s.row % 2 == 0 && s.col % 2 == 0)
        .filter(|s| coarse_samples.iter().any(|c| 2 * c.row == s.row && 2 * c.col == s.col))
        .copied()
        .collect();
    let coarse = band_report(&coarse_samples, kappa, factor)?;
    let fine_common = band_report(&common, kappa, factor)?;
    Ok(BandRefinement {
        coarse,
        fine: band_report(&fine_samples, kappa, factor)?,
        h: gc.h(),
        stable: fine_common.ratio <= (T::one() + gc.h() * gc.h()) * coarse.ratio,
        fine_common,
    })
}
