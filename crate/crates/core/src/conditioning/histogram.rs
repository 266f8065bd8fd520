use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};

/// Uniform binning on `[-x_max, x_max)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HistogramSpec {
    pub x_max: f64,
    pub n_bins: usize,
}

impl Default for HistogramSpec {
    fn default() -> Self {
        Self {
            x_max: 8.0,
            n_bins: 401,
        }
    }
}

impl HistogramSpec {
    pub fn bin_width(&self) -> f64 {
        2.0 * self.x_max / self.n_bins as f64
    }

    pub fn center(&self, i: usize) -> f64 {
        -self.x_max + (i as f64 + 0.5) * self.bin_width()
    }

    pub fn centers(&self) -> Vec<f64> {
        (0..self.n_bins).map(|i| self.center(i)).collect()
    }

    pub fn bin_of(&self, x: f64) -> Option<usize> {
        let u = (x + self.x_max) / self.bin_width();
        if u >= 0.0 && u < self.n_bins as f64 {
            Some(u as usize)
        } else {
            None
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.x_max > 0.0 && self.x_max.is_finite()) || self.n_bins == 0 {
            return Err(Error::GeometryMismatch(format!(
                "histogram needs x_max > 0 and at least one bin, got {self:?}"
            )));
        }
        Ok(())
    }
}

/// Streaming accumulator of weighted tomography samples for one angle.
///
/// Bin sums may be negative. Samples outside the range still enter the
/// weight total and the raw count so that normalisation stays unbiased.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedHistogram {
    pub angle: f64,
    pub spec: HistogramSpec,
    pub bin_sums: Vec<f64>,
    pub bin_counts: Vec<u64>,
    pub weight_sum: f64,
    pub weight_sq_sum: f64,
    pub count: u64,
    pub overflow: u64,
    pub rejected: u64,
    pub max_abs_weight: f64,
}

impl WeightedHistogram {
    pub fn new(angle: f64, spec: HistogramSpec) -> Self {
        Self {
            angle,
            spec,
            bin_sums: vec![0.0; spec.n_bins],
            bin_counts: vec![0; spec.n_bins],
            weight_sum: 0.0,
            weight_sq_sum: 0.0,
            count: 0,
            overflow: 0,
            rejected: 0,
            max_abs_weight: 0.0,
        }
    }

    #[inline]
    pub fn accumulate(&mut self, x_b: f64, w: f64) {
        if !x_b.is_finite() || !w.is_finite() {
            self.rejected += 1;
            return;
        }
        self.weight_sum += w;
        self.weight_sq_sum += w * w;
        self.count += 1;
        self.max_abs_weight = self.max_abs_weight.max(w.abs());
        match self.spec.bin_of(x_b) {
            Some(i) => {
                self.bin_sums[i] += w;
                self.bin_counts[i] += 1;
            }
            None => self.overflow += 1,
        }
    }

    /// Adds `other` into `self`; both must share angle and binning.
    pub fn merge(&mut self, other: &WeightedHistogram) -> Result<()> {
        if self.spec != other.spec || self.angle != other.angle {
            return Err(Error::GeometryMismatch(format!(
                "cannot merge angle {} {:?} with angle {} {:?}",
                self.angle, self.spec, other.angle, other.spec
            )));
        }
        for (a, b) in self.bin_sums.iter_mut().zip(&other.bin_sums) {
            *a += b;
        }
        for (a, b) in self.bin_counts.iter_mut().zip(&other.bin_counts) {
            *a += b;
        }
        self.weight_sum += other.weight_sum;
        self.weight_sq_sum += other.weight_sq_sum;
        self.count += other.count;
        self.overflow += other.overflow;
        self.rejected += other.rejected;
        self.max_abs_weight = self.max_abs_weight.max(other.max_abs_weight);
        Ok(())
    }

    pub fn mean_weight(&self) -> f64 {
        self.weight_sum / self.count as f64
    }

    /// Standard error of [`Self::mean_weight`] from the sample variance of the weights.
    pub fn mean_weight_se(&self) -> f64 {
        let n = self.count as f64;
        let mean = self.mean_weight();
        let var = (self.weight_sq_sum / n - mean * mean).max(0.0) * n / (n - 1.0);
        (var / n).sqrt()
    }

    /// Normalisation guard: `10⁻⁶ · N · max|w|`.
    pub fn normalization_threshold(&self) -> f64 {
        1e-6 * self.count as f64 * self.max_abs_weight
    }

    pub fn normalize(&self) -> Result<Marginal> {
        let threshold = self.normalization_threshold();
        if !(self.weight_sum.abs() > threshold) {
            return Err(Error::WeakConditioning {
                weight_sum: self.weight_sum,
                threshold,
            });
        }
        let scale = 1.0 / (self.weight_sum * self.spec.bin_width());
        Ok(Marginal {
            angle: self.angle,
            spec: self.spec,
            density: self.bin_sums.iter().map(|s| s * scale).collect(),
            raw_counts: self.bin_counts.clone(),
            bin_weight_sums: self.bin_sums.clone(),
        })
    }
}

/// Estimated conditional quadrature density on bin centres.
#[derive(Debug, Clone, PartialEq)]
pub struct Marginal {
    pub angle: f64,
    pub spec: HistogramSpec,
    pub density: Vec<f64>,
    pub raw_counts: Vec<u64>,
    pub bin_weight_sums: Vec<f64>,
}

impl Marginal {
    /// A marginal sampled from a known density at the bin centres.
    pub fn from_density(angle: f64, spec: HistogramSpec, density: Vec<f64>) -> Self {
        assert_eq!(density.len(), spec.n_bins);
        Self {
            angle,
            spec,
            density,
            raw_counts: vec![0; spec.n_bins],
            bin_weight_sums: vec![0.0; spec.n_bins],
        }
    }

    pub fn centers(&self) -> Vec<f64> {
        self.spec.centers()
    }

    pub fn integral(&self) -> f64 {
        self.density.iter().sum::<f64>() * self.spec.bin_width()
    }

    /// `∫ |self − other| dx` on the shared bins.
    pub fn l1_distance(&self, other: &[f64]) -> f64 {
        self.density
            .iter()
            .zip(other)
            .map(|(a, b)| (a - b).abs())
            .sum::<f64>()
            * self.spec.bin_width()
    }

    /// `x,density,raw_count,weight_sum`, one row per bin.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut out = String::from("x,density,raw_count,weight_sum\n");
        for i in 0..self.spec.n_bins {
            out.push_str(&format!(
                "{:.17e},{:.17e},{},{:.17e}\n",
                self.spec.center(i),
                self.density[i],
                self.raw_counts[i],
                self.bin_weight_sums[i]
            ));
        }
        let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        f.write_all(out.as_bytes()).map_err(|e| Error::io(path, e))
    }

    /// Reads a marginal table written by [`Self::write_csv`]; the bin
    /// geometry is recovered from the centres.
    pub fn read_csv(path: &Path, angle: f64) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let fail = |line: usize, reason: String| Error::Format {
            path: path.to_path_buf(),
            offset: line as u64,
            reason,
        };
        let mut lines = text.lines();
        if lines.next() != Some("x,density,raw_count,weight_sum") {
            return Err(fail(0, "missing marginal CSV header".into()));
        }
        let (mut xs, mut density, mut raw_counts, mut sums) = (vec![], vec![], vec![], vec![]);
        for (k, line) in lines.enumerate() {
            let cols: Vec<&str> = line.split(',').collect();
            if cols.len() != 4 {
                return Err(fail(
                    k + 1,
                    format!("expected 4 columns, got {}", cols.len()),
                ));
            }
            let num = |s: &str| s.parse::<f64>().map_err(|e| fail(k + 1, e.to_string()));
            xs.push(num(cols[0])?);
            density.push(num(cols[1])?);
            raw_counts.push(
                cols[2]
                    .parse::<u64>()
                    .map_err(|e| fail(k + 1, e.to_string()))?,
            );
            sums.push(num(cols[3])?);
        }
        if xs.len() < 2 {
            return Err(fail(0, "need at least two bins".into()));
        }
        let width = xs[1] - xs[0];
        let spec = HistogramSpec {
            x_max: -(xs[0] - 0.5 * width),
            n_bins: xs.len(),
        };
        for (i, &x) in xs.iter().enumerate() {
            if (x - spec.center(i)).abs() > 1e-9 * spec.x_max {
                return Err(fail(i + 1, "bins are not uniform and centred".into()));
            }
        }
        Ok(Self {
            angle,
            spec,
            density,
            raw_counts,
            bin_weight_sums: sums,
        })
    }
}
