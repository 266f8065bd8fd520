use std::io::Write;
use std::path::Path;

use rayon::prelude::*;

use crate::error::{Error, Result};

/// Square phase-space grid `[-x_max, x_max]²` with `n_grid` nodes per axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub x_max: f64,
    pub n_grid: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            x_max: 5.0,
            n_grid: 201,
        }
    }
}

impl GridSpec {
    pub fn step(&self) -> f64 {
        2.0 * self.x_max / (self.n_grid - 1) as f64
    }

    pub fn coord(&self, i: usize) -> f64 {
        -self.x_max + i as f64 * self.step()
    }

    pub fn coords(&self) -> Vec<f64> {
        (0..self.n_grid).map(|i| self.coord(i)).collect()
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.x_max > 0.0 && self.x_max.is_finite()) || self.n_grid < 3 {
            return Err(Error::InvalidMarginals(format!(
                "grid needs x_max > 0 and at least 3 nodes, got {self:?}"
            )));
        }
        Ok(())
    }
}

/// Real Wigner function sampled on a [`GridSpec`]; `values[ix * n + ip]`.
#[derive(Debug, Clone, PartialEq)]
pub struct WignerGrid {
    pub spec: GridSpec,
    pub values: Vec<f64>,
    pub label: String,
    pub cutoff: Option<f64>,
}

impl WignerGrid {
    /// Evaluates `f(x, p)` on every node, one grid row per task.
    pub fn from_fn(
        spec: GridSpec,
        label: impl Into<String>,
        f: impl Fn(f64, f64) -> f64 + Sync,
    ) -> Self {
        let n = spec.n_grid;
        let coords = spec.coords();
        let mut values = vec![0.0; n * n];
        values.par_chunks_mut(n).enumerate().for_each(|(ix, row)| {
            let x = coords[ix];
            for (ip, v) in row.iter_mut().enumerate() {
                *v = f(x, coords[ip]);
            }
        });
        Self {
            spec,
            values,
            label: label.into(),
            cutoff: None,
        }
    }

    pub fn n(&self) -> usize {
        self.spec.n_grid
    }

    pub fn at(&self, ix: usize, ip: usize) -> f64 {
        self.values[ix * self.spec.n_grid + ip]
    }

    /// Bilinear interpolation; zero outside the grid.
    pub fn interpolate(&self, x: f64, p: f64) -> f64 {
        let n = self.spec.n_grid;
        let h = self.spec.step();
        let u = (x + self.spec.x_max) / h;
        let v = (p + self.spec.x_max) / h;
        let last = (n - 1) as f64;
        if !(u >= 0.0 && v >= 0.0 && u <= last && v <= last) {
            return 0.0;
        }
        let i = (u as usize).min(n - 2);
        let j = (v as usize).min(n - 2);
        let fu = u - i as f64;
        let fv = v - j as f64;
        let w00 = self.at(i, j);
        let w01 = self.at(i, j + 1);
        let w10 = self.at(i + 1, j);
        let w11 = self.at(i + 1, j + 1);
        (1.0 - fu) * ((1.0 - fv) * w00 + fv * w01) + fu * ((1.0 - fv) * w10 + fv * w11)
    }

    /// Tensor-product cubic Lagrange interpolation on the surrounding 4×4
    /// nodes (bilinear in the outermost cells); zero outside the grid.
    pub fn interpolate_cubic(&self, x: f64, p: f64) -> f64 {
        let n = self.spec.n_grid;
        if n < 4 {
            return self.interpolate(x, p);
        }
        let h = self.spec.step();
        let u = (x + self.spec.x_max) / h;
        let v = (p + self.spec.x_max) / h;
        let last = (n - 1) as f64;
        if !(u >= 0.0 && v >= 0.0 && u <= last && v <= last) {
            return 0.0;
        }
        let i = (u as usize).min(n - 2);
        let j = (v as usize).min(n - 2);
        if i == 0 || j == 0 || i == n - 2 || j == n - 2 {
            return self.interpolate(x, p);
        }
        let (wu, wv) = (lagrange4(u - i as f64), lagrange4(v - j as f64));
        let mut acc = 0.0;
        for (a, cu) in wu.iter().enumerate() {
            let row = (i + a - 1) * n;
            let line: f64 = wv
                .iter()
                .enumerate()
                .map(|(b, cv)| cv * self.values[row + j + b - 1])
                .sum();
            acc += cu * line;
        }
        acc
    }

    /// Trapezoid rule over the grid.
    pub fn integral(&self) -> f64 {
        let n = self.n();
        let edge = |i: usize| if i == 0 || i == n - 1 { 0.5 } else { 1.0 };
        let mut s = 0.0;
        for ix in 0..n {
            for ip in 0..n {
                s += edge(ix) * edge(ip) * self.at(ix, ip);
            }
        }
        s * self.spec.step().powi(2)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Largest `|W(x,p) − W(−x,−p)|`.
    pub fn parity_error(&self) -> f64 {
        let n = self.n();
        let mut e: f64 = 0.0;
        for ix in 0..n {
            for ip in 0..n {
                e = e.max((self.at(ix, ip) - self.at(n - 1 - ix, n - 1 - ip)).abs());
            }
        }
        e
    }

    /// Largest pointwise difference to a grid of the same geometry.
    pub fn max_abs_diff(&self, other: &WignerGrid) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// `x,p,w` rows, `x` outer.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let coords = self.spec.coords();
        let mut out = String::with_capacity(self.values.len() * 40 + 8);
        out.push_str("x,p,w\n");
        for (ix, &x) in coords.iter().enumerate() {
            for (ip, &p) in coords.iter().enumerate() {
                out.push_str(&format!("{x:.6},{p:.6},{:.12e}\n", self.at(ix, ip)));
            }
        }
        write_file(path, out.as_bytes())
    }

    /// Grayscale preview, `x` to the right and `p` upward, with the affine
    /// range recorded in a header comment.
    pub fn write_pgm(&self, path: &Path) -> Result<()> {
        let n = self.n();
        let (lo, hi) = (self.min(), self.max());
        let span = if hi > lo { hi - lo } else { 1.0 };
        let mut out = format!("P5\n# min={lo:.9e} max={hi:.9e}\n{n} {n}\n255\n").into_bytes();
        for ip in (0..n).rev() {
            for ix in 0..n {
                let t = (self.at(ix, ip) - lo) / span;
                out.push((t * 255.0).round().clamp(0.0, 255.0) as u8);
            }
        }
        write_file(path, &out)
    }
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(bytes).map_err(|e| Error::io(path, e))
}

/// Cubic Lagrange weights on nodes −1, 0, 1, 2 at offset `t ∈ [0, 1]`.
fn lagrange4(t: f64) -> [f64; 4] {
    [
        -t * (t - 1.0) * (t - 2.0) / 6.0,
        (t + 1.0) * (t - 1.0) * (t - 2.0) / 2.0,
        -(t + 1.0) * t * (t - 2.0) / 2.0,
        (t + 1.0) * t * (t - 1.0) / 6.0,
    ]
}
