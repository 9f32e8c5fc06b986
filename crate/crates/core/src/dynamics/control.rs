use crate::error::{Error, Result};

use super::StepPolicy;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepDecision {
    pub accept: bool,
    pub h_next: f64,
}

/// Embedded-pair step controller.
///
/// `error` is the estimate already scaled by the mixed tolerance
/// `abs_tol + rel_tol·|x|`, so the acceptance threshold is 1. The growth
/// factor `0.9·error^{−1/5}` is clamped to `[0.2, 5]` and the next step to
/// `[h_min, h_max]`.
pub fn adapt_step(error: f64, h: f64, policy: &StepPolicy) -> Result<StepDecision> {
    let StepPolicy::Adaptive { h_min, h_max, .. } = *policy else {
        return Err(Error::InvalidParameter(
            "step control requires an adaptive policy".into(),
        ));
    };
    let accept = error <= 1.0;
    let factor = if error == 0.0 {
        5.0
    } else if error.is_finite() {
        (0.9 * error.powf(-0.2)).clamp(0.2, 5.0)
    } else {
        0.2
    };
    let proposed = h * factor;
    if !accept && proposed < h_min {
        return Err(Error::StepTooSmall { h, h_min });
    }
    Ok(StepDecision {
        accept,
        h_next: proposed.clamp(h_min, h_max),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn policy() -> StepPolicy {
        StepPolicy::Adaptive {
            rel_tol: 1e-8,
            abs_tol: 1e-8,
            h_min: 1e-6,
            h_max: 10.0,
        }
    }

    #[test]
    fn controller_examples() {
        let d = adapt_step(1.0, 0.1, &policy()).unwrap();
        assert!(d.accept);
        assert!((d.h_next - 0.09).abs() < 1e-15);

        let d = adapt_step(0.0, 0.1, &policy()).unwrap();
        assert!(d.accept);
        assert!((d.h_next - 0.5).abs() < 1e-15);

        let d = adapt_step(32.0, 0.1, &policy()).unwrap();
        assert!(!d.accept);
        assert!((d.h_next - 0.045).abs() < 1e-15);
    }

    #[test]
    fn rejection_below_h_min_aborts() {
        assert!(matches!(
            adapt_step(1e6, 2e-6, &policy()),
            Err(Error::StepTooSmall { .. })
        ));
        assert!(adapt_step(0.5, 0.1, &StepPolicy::Fixed).is_err());
    }

    proptest! {
        #[test]
        fn next_step_stays_in_bounds(err in 0.0f64..1e3, h in 1e-5f64..5.0) {
            if let Ok(d) = adapt_step(err, h, &policy()) {
                prop_assert!(d.h_next >= 1e-6 && d.h_next <= 10.0);
                prop_assert!(d.h_next <= 5.0 * h + 1e-15);
                prop_assert_eq!(d.accept, err <= 1.0);
            }
        }
    }
}
