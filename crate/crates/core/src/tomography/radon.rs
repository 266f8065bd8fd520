use std::f64::consts::{PI, SQRT_2};

use super::grid::{GridSpec, WignerGrid};
use crate::conditioning::{HistogramSpec, Marginal};
use crate::error::{Error, Result};

/// Default band limit of the back-projection filter, in inverse shot-noise units.
pub const DEFAULT_CUTOFF: f64 = 4.5;

/// Oversampling of the filtered projections relative to the bin width.
const SUBSAMPLE: usize = 8;

/// Angle-resolved marginals sharing one binning, angles strictly increasing in `[0, π)`.
#[derive(Debug, Clone, PartialEq)]
pub struct MarginalSet {
    marginals: Vec<Marginal>,
}

impl MarginalSet {
    pub fn new(marginals: Vec<Marginal>) -> Result<Self> {
        if marginals.len() < 2 {
            return Err(Error::InvalidMarginals(format!(
                "need at least 2 angles, got {}",
                marginals.len()
            )));
        }
        let spec = marginals[0].spec;
        spec.validate()?;
        for (i, m) in marginals.iter().enumerate() {
            if m.spec != spec || m.density.len() != spec.n_bins {
                return Err(Error::InvalidMarginals(format!(
                    "marginal {i} (angle {}) has binning {:?}, expected {spec:?}",
                    m.angle, m.spec
                )));
            }
            if !(0.0..PI).contains(&m.angle) {
                return Err(Error::InvalidMarginals(format!(
                    "angle {} outside [0, pi)",
                    m.angle
                )));
            }
            if i > 0 && m.angle <= marginals[i - 1].angle {
                return Err(Error::InvalidMarginals(format!(
                    "angles must increase strictly: {} after {}",
                    m.angle,
                    marginals[i - 1].angle
                )));
            }
            let total = m.integral();
            if !((total - 1.0).abs() <= 0.02) {
                return Err(Error::InvalidMarginals(format!(
                    "marginal at angle {} integrates to {total}",
                    m.angle
                )));
            }
        }
        Ok(Self { marginals })
    }

    pub fn marginals(&self) -> &[Marginal] {
        &self.marginals
    }

    pub fn spec(&self) -> HistogramSpec {
        self.marginals[0].spec
    }

    pub fn angles(&self) -> Vec<f64> {
        self.marginals.iter().map(|m| m.angle).collect()
    }

    /// Half the gap to each neighbour, wrapping at π; `π/M` for uniform angles.
    pub fn angle_weights(&self) -> Vec<f64> {
        let a = self.angles();
        let m = a.len();
        (0..m)
            .map(|i| {
                let next = if i + 1 < m { a[i + 1] } else { a[0] + PI };
                let prev = if i > 0 { a[i - 1] } else { a[m - 1] - PI };
                0.5 * (next - prev)
            })
            .collect()
    }
}

/// Band-limited ramp filter `∫_{|ξ|≤k_c} |ξ| e^{iξu} dξ / 2`.
pub fn ramp_kernel(cutoff: f64, u: f64) -> f64 {
    let z = cutoff * u;
    if z.abs() < 1e-2 {
        let z2 = z * z;
        cutoff * cutoff * (0.5 - z2 / 8.0 + z2 * z2 / 144.0)
    } else {
        (z.cos() + z * z.sin() - 1.0) / (u * u)
    }
}

/// Filtered projection sampled on a uniform `u` grid.
struct FilteredProjection {
    u0: f64,
    h: f64,
    values: Vec<f64>,
}

impl FilteredProjection {
    fn at(&self, u: f64) -> f64 {
        let t = (u - self.u0) / self.h;
        let i = t.floor();
        if i < 0.0 || i as usize + 1 >= self.values.len() {
            return 0.0;
        }
        let k = i as usize;
        let f = t - i;
        (1.0 - f) * self.values[k] + f * self.values[k + 1]
    }
}

/// Reconstructs the Wigner function by filtered back-projection.
///
/// `W(x,p) = (1/2π²) Σ_i Δθ_i ∫ π^{θ_i}(x') K(x cosθ_i + p sinθ_i − x') dx'`,
/// with the inner integral taken over bin centres and evaluated on a grid
/// `SUBSAMPLE` times finer than the bins.
pub fn inverse_radon(set: &MarginalSet, grid: GridSpec, cutoff: f64) -> Result<WignerGrid> {
    if !(cutoff > 0.0 && cutoff.is_finite()) {
        return Err(Error::InvalidMarginals(format!(
            "cutoff must be positive, got {cutoff}"
        )));
    }
    grid.validate()?;
    let spec = set.spec();
    let bw = spec.bin_width();
    let h = bw / SUBSAMPLE as f64;
    let c0 = spec.center(0);
    let reach = grid.x_max * SQRT_2 + 2.0 * h;
    // u_i = c0 + (i − i0)·h, so u_i − x_j = (i − i0 − SUBSAMPLE·j)·h.
    let i0 = ((c0 + reach) / h).ceil() as i64;
    let len = (i0 + ((reach - c0) / h).ceil() as i64 + 1) as usize;
    let nb = spec.n_bins as i64;
    let lag_min = -i0 - SUBSAMPLE as i64 * (nb - 1);
    let lag_max = len as i64 - 1 - i0;
    let table: Vec<f64> = (lag_min..=lag_max)
        .map(|d| ramp_kernel(cutoff, d as f64 * h))
        .collect();

    let projections: Vec<FilteredProjection> = set
        .marginals()
        .iter()
        .map(|m| {
            let mut values = vec![0.0; len];
            for (j, &pj) in m.density.iter().enumerate() {
                if pj == 0.0 {
                    continue;
                }
                let a = pj * bw;
                let base = -i0 - (SUBSAMPLE * j) as i64 - lag_min;
                for (i, v) in values.iter_mut().enumerate() {
                    *v += a * table[(base + i as i64) as usize];
                }
            }
            FilteredProjection {
                u0: c0 - i0 as f64 * h,
                h,
                values,
            }
        })
        .collect();

    let trig: Vec<(f64, f64, f64)> = set
        .angles()
        .iter()
        .zip(set.angle_weights())
        .map(|(&t, w)| (t.cos(), t.sin(), w / (2.0 * PI * PI)))
        .collect();

    let mut out = WignerGrid::from_fn(grid, "inverse_radon", |x, p| {
        trig.iter()
            .zip(&projections)
            .map(|(&(c, s, w), q)| w * q.at(x * c + p * s))
            .sum()
    });
    out.cutoff = Some(cutoff);
    Ok(out)
}

/// Projects `w` onto the quadrature at angle `θ` by integrating along the
/// orthogonal direction with cubic interpolation.
pub fn marginal_of_wigner(w: &WignerGrid, theta: f64, spec: HistogramSpec) -> Marginal {
    let h = w.spec.step();
    let k_max = (w.spec.x_max * SQRT_2 / h).ceil() as i64;
    let (c, s) = (theta.cos(), theta.sin());
    let density = spec
        .centers()
        .iter()
        .map(|&x| {
            (-k_max..=k_max)
                .map(|k| {
                    let t = k as f64 * h;
                    w.interpolate_cubic(x * c - t * s, x * s + t * c)
                })
                .sum::<f64>()
                * h
        })
        .collect();
    Marginal::from_density(theta, spec, density)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kernel_is_continuous_at_the_switch() {
        let kc = 4.5;
        let below = ramp_kernel(kc, 0.99999e-2 / kc);
        let above = ramp_kernel(kc, 1.00001e-2 / kc);
        assert!((below - above).abs() < 1e-7, "{}", below - above);
        assert_eq!(ramp_kernel(kc, 0.0), kc * kc / 2.0);
    }

    #[test]
    fn uniform_weights() {
        let spec = HistogramSpec {
            x_max: 4.0,
            n_bins: 8,
        };
        let ms = (0..4)
            .map(|i| Marginal::from_density(i as f64 * PI / 4.0, spec, vec![0.125; 8]))
            .collect();
        let set = MarginalSet::new(ms).unwrap();
        for w in set.angle_weights() {
            assert!((w - PI / 4.0).abs() < 1e-15);
        }
    }
}
