use super::MlsError;

/// Radial weight families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum WeightKind {
    /// `(1 - t)_+^6 (1 + 6t + 35/3 t^2)`, `t = r / delta`; C^4 in `R^3`.
    #[default]
    WendlandC4,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightSpec {
    kind: WeightKind,
    support: f64,
}

impl WeightSpec {
    pub fn new(kind: WeightKind, support: f64) -> Result<Self, MlsError> {
        if !(support > 0.0) || !support.is_finite() {
            return Err(MlsError::InvalidDelta(support));
        }
        Ok(Self { kind, support })
    }

    pub fn kind(&self) -> WeightKind {
        self.kind
    }

    pub fn support(&self) -> f64 {
        self.support
    }

    pub fn eval(&self, r: f64) -> f64 {
        match self.kind {
            WeightKind::WendlandC4 => wendland_weight(r, self.support),
        }
    }
}

/// Wendland C^4 weight with support `delta`; zero for `r >= delta`.
pub fn wendland_weight(r: f64, delta: f64) -> f64 {
    let t = r / delta;
    if t >= 1.0 {
        return 0.0;
    }
    let s = 1.0 - t;
    let s2 = s * s;
    let s6 = s2 * s2 * s2;
    s6 * (1.0 + 6.0 * t + 35.0 / 3.0 * t * t)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_form_values() {
        assert_eq!(wendland_weight(0.0, 2.0), 1.0);
        assert_eq!(wendland_weight(2.0, 2.0), 0.0);
        assert_eq!(wendland_weight(3.0, 2.0), 0.0);
        assert!((wendland_weight(1.0, 2.0) - 83.0 / 768.0).abs() < 1e-16);
        assert!(matches!(
            WeightSpec::new(WeightKind::WendlandC4, 0.0),
            Err(MlsError::InvalidDelta(_))
        ));
    }

    #[test]
    fn monotone_and_bounded() {
        let mut prev = 1.0;
        for i in 1..=1000 {
            let w = wendland_weight(i as f64 / 1000.0, 1.0);
            assert!((0.0..=1.0).contains(&w));
            assert!(w <= prev);
            prev = w;
        }
    }

    #[test]
    fn smooth_at_support_edge() {
        // Derivatives up to order 4 vanish at t = 1: w = O((1 - t)^5) there.
        let eps: f64 = 1e-3;
        let w = wendland_weight(1.0 - eps, 1.0);
        assert!(w < 20.0 * eps.powi(5), "{w}");
    }
}
