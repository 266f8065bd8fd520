use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Converts a noise level in decibels relative to shot noise into a linear
/// variance in shot-noise units.
pub fn db_to_variance(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Optical layout and detector model of the dual-homodyne conditioning experiment.
///
/// All variances are in shot-noise units (vacuum variance = 1). The squeezing
/// axis sits at quadrature angle 0, so `X^0` of the input carries the
/// squeezed variance and `X^{π/2}` the antisqueezed one.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentParams {
    pub squeezed_variance_db: f64,
    pub antisqueezed_variance_db: f64,
    /// Power reflectivity of the tap beam splitter sending light to the conditioning arm.
    pub tap_reflectivity: f64,
    pub homodyne_efficiency: f64,
    /// Additive detector noise; `f64::NEG_INFINITY` disables it.
    pub dark_noise_db: f64,
    pub conditioning_phase: f64,
    pub tomography_angles: Vec<f64>,
    pub samples_per_angle: u64,
    pub rng_seed: u64,
}

impl Default for ExperimentParams {
    fn default() -> Self {
        Self {
            squeezed_variance_db: -3.78,
            antisqueezed_variance_db: 4.33,
            tap_reflectivity: 0.2,
            homodyne_efficiency: 0.95,
            dark_noise_db: -22.0,
            conditioning_phase: 0.0,
            tomography_angles: uniform_angles(12),
            samples_per_angle: 10_000_000,
            rng_seed: 0x5EED_CAFE,
        }
    }
}

/// `count` angles spaced by `π/count` starting at zero.
pub fn uniform_angles(count: usize) -> Vec<f64> {
    (0..count).map(|i| i as f64 * PI / count as f64).collect()
}

impl ExperimentParams {
    /// The same layout with perfect detectors and no dark noise.
    pub fn ideal_detection(mut self) -> Self {
        self.homodyne_efficiency = 1.0;
        self.dark_noise_db = f64::NEG_INFINITY;
        self
    }

    pub fn squeezed_variance(&self) -> f64 {
        db_to_variance(self.squeezed_variance_db)
    }

    pub fn antisqueezed_variance(&self) -> f64 {
        db_to_variance(self.antisqueezed_variance_db)
    }

    pub fn dark_variance(&self) -> f64 {
        db_to_variance(self.dark_noise_db)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParams(msg));
        if !self.squeezed_variance_db.is_finite() || !self.antisqueezed_variance_db.is_finite() {
            return bad("variances must be finite".into());
        }
        let (v_s, v_a) = (self.squeezed_variance(), self.antisqueezed_variance());
        if v_s > 1.0 || v_a < 1.0 {
            return bad(format!(
                "need V_s <= 1 <= V_a, got V_s = {v_s}, V_a = {v_a}"
            ));
        }
        // uncertainty relation in shot-noise units
        if v_s * v_a < 1.0 - 1e-12 {
            return bad(format!("V_s * V_a = {} < 1 is unphysical", v_s * v_a));
        }
        let r = self.tap_reflectivity;
        if !(0.0..=1.0).contains(&r) {
            return bad(format!("tap reflectivity {r} outside [0, 1]"));
        }
        let eta = self.homodyne_efficiency;
        if !(eta > 0.0 && eta <= 1.0) {
            return bad(format!("homodyne efficiency {eta} outside (0, 1]"));
        }
        if self.dark_noise_db.is_nan() || self.dark_noise_db == f64::INFINITY {
            return bad(format!(
                "dark noise {} dB is not usable",
                self.dark_noise_db
            ));
        }
        if !self.conditioning_phase.is_finite() {
            return bad("conditioning phase must be finite".into());
        }
        if let Some(a) = self.tomography_angles.iter().find(|a| !a.is_finite()) {
            return bad(format!("tomography angle {a} is not finite"));
        }
        if self.tomography_angles.len() < 2 {
            return bad("at least two tomography angles are required".into());
        }
        let in_range = self
            .tomography_angles
            .iter()
            .all(|&a| (0.0..std::f64::consts::PI).contains(&a));
        let increasing = self.tomography_angles.windows(2).all(|w| w[0] < w[1]);
        if !(in_range && increasing) {
            return bad("tomography angles must be strictly increasing within [0, pi)".into());
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn db_conversion() {
        assert_eq!(db_to_variance(0.0), 1.0);
        assert!((db_to_variance(-3.78) - 0.41880).abs() < 1e-5);
        assert!((db_to_variance(4.33) - 2.71019).abs() < 1e-5);
        assert_eq!(db_to_variance(f64::NEG_INFINITY), 0.0);
    }

    #[test]
    fn defaults_are_valid() {
        let p = ExperimentParams::default();
        p.validate().unwrap();
        assert_eq!(p.tomography_angles.len(), 12);
        assert!((p.tomography_angles[11] - 165f64.to_radians()).abs() < 1e-12);
        assert!((p.dark_variance() - 0.00631).abs() < 1e-5);
    }

    #[test]
    fn rejects_unphysical() {
        let base = ExperimentParams::default;
        for p in [
            ExperimentParams {
                squeezed_variance_db: -6.0,
                antisqueezed_variance_db: 3.0,
                ..base()
            },
            ExperimentParams {
                tap_reflectivity: 1.2,
                ..base()
            },
            ExperimentParams {
                homodyne_efficiency: 0.0,
                ..base()
            },
        ] {
            assert!(p.validate().is_err());
        }
    }

    #[test]
    fn squeezing_pair_must_straddle_vacuum() {
        let thermal = 10.0 * 2f64.log10();
        let mut p = ExperimentParams {
            squeezed_variance_db: thermal,
            antisqueezed_variance_db: thermal,
            ..ExperimentParams::default()
        };
        assert!(p.validate().is_err());
        p.squeezed_variance_db = 0.0;
        p.antisqueezed_variance_db = 0.0;
        p.validate().unwrap();
    }
}
