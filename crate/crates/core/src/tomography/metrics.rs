use super::grid::WignerGrid;

/// Figures of merit of a reconstructed or exact Wigner function.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WignerMetrics {
    pub min: f64,
    pub origin: f64,
    /// Maximum along the `p = 0` slice.
    pub central_fringe: f64,
    /// Minimum of the first negative region met walking outward from the
    /// origin along the `p = 0` slice; the slice minimum if it never dips.
    pub first_negative_fringe: f64,
    pub integral: f64,
}

impl WignerMetrics {
    pub fn entries(&self) -> [(&'static str, f64); 5] {
        [
            ("min", self.min),
            ("origin", self.origin),
            ("central_fringe", self.central_fringe),
            ("first_negative_fringe", self.first_negative_fringe),
            ("integral", self.integral),
        ]
    }

    /// Flat `key=value` lines, one per metric.
    pub fn to_report(&self) -> String {
        self.entries()
            .iter()
            .map(|(k, v)| format!("{k}={v}\n"))
            .collect()
    }
}

pub fn wigner_metrics(w: &WignerGrid) -> WignerMetrics {
    let n = w.n();
    let slice: Vec<f64> = if n % 2 == 1 {
        (0..n).map(|ix| w.at(ix, n / 2)).collect()
    } else {
        w.spec
            .coords()
            .iter()
            .map(|&x| w.interpolate(x, 0.0))
            .collect()
    };
    let origin = if n % 2 == 1 {
        w.at(n / 2, n / 2)
    } else {
        w.interpolate(0.0, 0.0)
    };
    let mid = n / 2;
    let right = first_negative_run(slice[mid..].iter().copied());
    let left = first_negative_run(slice[..=mid].iter().rev().copied());
    let slice_min = slice.iter().copied().fold(f64::INFINITY, f64::min);
    let first_negative_fringe = match (left, right) {
        (Some(a), Some(b)) => a.min(b),
        (Some(a), None) | (None, Some(a)) => a,
        (None, None) => slice_min,
    };
    WignerMetrics {
        min: w.min(),
        origin,
        central_fringe: slice.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        first_negative_fringe,
        integral: w.integral(),
    }
}

fn first_negative_run(values: impl Iterator<Item = f64>) -> Option<f64> {
    let mut best: Option<f64> = None;
    for v in values {
        match (v < 0.0, best) {
            (true, b) => best = Some(b.map_or(v, |b| b.min(v))),
            (false, Some(_)) => break,
            (false, None) => {}
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_run_only() {
        let v = [0.2, 0.1, -0.01, -0.03, -0.02, 0.0, -0.5];
        assert_eq!(first_negative_run(v.into_iter()), Some(-0.03));
        assert_eq!(first_negative_run([0.1, 0.2].into_iter()), None);
    }
}
