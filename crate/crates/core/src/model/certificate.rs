use super::ObjectiveSense;

/// Why a certificate does or does not carry a ratio.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CertificateFlag {
    /// Ratio computed from a strictly positive denominator.
    Ratio,
    /// Incumbent and bound coincide; ratio is 1 whatever their sign.
    Exact,
    /// The denominator is not positive (or a value is not finite), so no
    /// multiplicative ratio exists.
    UndefinedRatio,
    /// The bound is on the wrong side of the incumbent.
    InconsistentBound,
}

/// Incumbent value, relaxation bound and the ratio between them.
///
/// For minimisation `ratio = incumbent / bound`; for maximisation
/// `ratio = bound / incumbent`. Either way a valid certificate has
/// `ratio >= 1` and the optimum lies between bound and incumbent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ApproximationCertificate {
    pub sense: ObjectiveSense,
    pub incumbent: f64,
    pub bound: f64,
    pub ratio: Option<f64>,
    pub flag: CertificateFlag,
}

impl ApproximationCertificate {
    pub fn is_defined(&self) -> bool {
        self.ratio.is_some()
    }

    /// Absolute gap `|incumbent - bound|`.
    pub fn gap(&self) -> f64 {
        (self.incumbent - self.bound).abs()
    }
}

pub fn make_certificate(sense: ObjectiveSense, incumbent: f64, bound: f64) -> ApproximationCertificate {
    let undefined = |flag| ApproximationCertificate { sense, incumbent, bound, ratio: None, flag };
    if !incumbent.is_finite() || !bound.is_finite() {
        return undefined(CertificateFlag::UndefinedRatio);
    }
    let scale = 1.0f64.max(incumbent.abs()).max(bound.abs());
    let tol = 1e-9 * scale;
    let (num, den, wrong_side) = match sense {
        ObjectiveSense::Minimize => (incumbent, bound, bound > incumbent + tol),
        ObjectiveSense::Maximize => (bound, incumbent, incumbent > bound + tol),
    };
    if wrong_side {
        return undefined(CertificateFlag::InconsistentBound);
    }
    if (incumbent - bound).abs() <= tol {
        return ApproximationCertificate { sense, incumbent, bound, ratio: Some(1.0), flag: CertificateFlag::Exact };
    }
    if den > 0.0 {
        ApproximationCertificate {
            sense,
            incumbent,
            bound,
            ratio: Some(num / den),
            flag: CertificateFlag::Ratio,
        }
    } else {
        undefined(CertificateFlag::UndefinedRatio)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn ratio_examples() {
        let c = make_certificate(ObjectiveSense::Minimize, 10.0, 5.0);
        assert_eq!(c.ratio, Some(2.0));
        let c = make_certificate(ObjectiveSense::Minimize, 7.0, 7.0);
        assert_eq!(c.ratio, Some(1.0));
        let c = make_certificate(ObjectiveSense::Minimize, 7.0, 0.0);
        assert_eq!(c.ratio, None);
        assert_eq!(c.flag, CertificateFlag::UndefinedRatio);
    }

    #[test]
    fn zero_bound_with_zero_incumbent_is_exact() {
        let c = make_certificate(ObjectiveSense::Minimize, 0.0, 0.0);
        assert_eq!(c.flag, CertificateFlag::Exact);
        assert_eq!(c.ratio, Some(1.0));
    }

    #[test]
    fn wrong_side_bound_is_flagged() {
        let c = make_certificate(ObjectiveSense::Minimize, 3.0, 4.0);
        assert_eq!(c.flag, CertificateFlag::InconsistentBound);
        let c = make_certificate(ObjectiveSense::Maximize, 5.0, 4.0);
        assert_eq!(c.flag, CertificateFlag::InconsistentBound);
        let c = make_certificate(ObjectiveSense::Maximize, 4.0, 6.0);
        assert_eq!(c.ratio, Some(1.5));
    }

    proptest! {
        #[test]
        fn min_ratio_is_at_least_one(bound in 1e-3f64..1e3, excess in 0.0f64..1e3) {
            let c = make_certificate(ObjectiveSense::Minimize, bound + excess, bound);
            prop_assert!(c.ratio.unwrap() >= 1.0);
        }
    }
}
