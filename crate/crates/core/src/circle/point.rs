use serde::{Deserialize, Serialize};

/// Tolerance for equality of circle points under wraparound distance.
pub const CIRCLE_TOL: f64 = 1e-12;

/// Fractional part of a lift, always in `[0, 1)`.
#[inline]
pub fn reduce(v: f64) -> f64 {
    let r = v - v.floor();
    // v slightly below an integer can round up to exactly 1.0
    if r >= 1.0 {
        0.0
    } else {
        r
    }
}

/// Wraparound distance `min(|a-b|, 1-|a-b|)` of two reduced values.
#[inline]
pub fn circle_distance(a: f64, b: f64) -> f64 {
    let d = reduce(a - b);
    d.min(1.0 - d)
}

/// A point of the circle `[0,1)`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(from = "f64", into = "f64")]
pub struct CirclePoint(f64);

impl CirclePoint {
    pub fn new(lift: f64) -> Self {
        CirclePoint(reduce(lift))
    }

    pub fn value(self) -> f64 {
        self.0
    }

    pub fn distance(self, other: CirclePoint) -> f64 {
        circle_distance(self.0, other.0)
    }

    pub fn approx_eq(self, other: CirclePoint) -> bool {
        self.distance(other) <= CIRCLE_TOL
    }
}

impl From<f64> for CirclePoint {
    fn from(v: f64) -> Self {
        CirclePoint::new(v)
    }
}

impl From<CirclePoint> for f64 {
    fn from(p: CirclePoint) -> f64 {
        p.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn reduce_handles_negative_and_integer_inputs() {
        assert_eq!(reduce(1.15 - 1.0), 1.15 - 1.0);
        assert_eq!(reduce(-0.25), 0.75);
        assert_eq!(reduce(3.0), 0.0);
        assert_eq!(reduce(-1e-18), 0.0);
    }

    #[test]
    fn distance_wraps() {
        assert!((circle_distance(0.95, 0.05) - 0.1).abs() < 1e-15);
        assert!((circle_distance(0.2, 0.8) - 0.4).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn distance_symmetric_and_bounded(a in -5.0f64..5.0, b in -5.0f64..5.0) {
            let d1 = circle_distance(a, b);
            let d2 = circle_distance(b, a);
            prop_assert!((d1 - d2).abs() < 1e-12);
            prop_assert!(d1 <= 0.5 + 1e-15 && d1 >= 0.0);
        }

        #[test]
        fn reduced_in_unit_interval(v in -1e6f64..1e6) {
            let r = CirclePoint::new(v).value();
            prop_assert!((0.0..1.0).contains(&r));
        }
    }
}
