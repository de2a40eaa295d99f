//! Index of refraction fields and the wave context.

use crate::error::{Error, Result};
use crate::geometry::{Point, Rect};

/// Largest admissible |q| on the boundary of the support box.
///
/// The scatterer is truncated to zero outside the box, so this bounds the
/// jump introduced by the truncation.
pub const SUPPORT_TOLERANCE: f64 = 1e-5;

/// Wavenumber and target precision shared by every stage.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WaveContext {
    pub k: f64,
    pub epsilon: f64,
}

impl WaveContext {
    pub fn new(k: f64, epsilon: f64) -> Result<Self> {
        if !(k > 0.0 && k.is_finite()) {
            return Err(Error::InvalidParameter(format!("wavenumber must be positive, got {k}")));
        }
        if !(epsilon > 0.0 && epsilon < 1.0) {
            return Err(Error::InvalidParameter(format!("precision must lie in (0, 1), got {epsilon}")));
        }
        Ok(Self { k, epsilon })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Profile {
    Homogeneous,
    Gaussian { amplitude: f64, width: f64, center: Point },
}

/// Smooth, real, lossless medium supported on a square box.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Medium {
    support: Rect,
    profile: Profile,
}

impl Medium {
    pub fn homogeneous(support: Rect) -> Self {
        Self { support, profile: Profile::Homogeneous }
    }

    /// Gaussian bump `q = a exp(-|x-c|^2 / (2 w^2))`, truncated outside `support`.
    pub fn gaussian_bump(amplitude: f64, width: f64, center: Point, support: Rect) -> Result<Self> {
        if !(amplitude > -1.0) {
            return Err(Error::InvalidAmplitude(amplitude));
        }
        if !(width > 0.0) {
            return Err(Error::InvalidParameter(format!("bump width must be positive, got {width}")));
        }
        if !support.is_square() {
            return Err(Error::UnsupportedGeometry("support must be a square".into()));
        }
        let d = support.inner_distance(center).max(0.0);
        let edge = amplitude.abs() * (-d * d / (2.0 * width * width)).exp();
        if edge > SUPPORT_TOLERANCE {
            return Err(Error::SupportViolation { value: edge, tolerance: SUPPORT_TOLERANCE });
        }
        Ok(Self { support, profile: Profile::Gaussian { amplitude, width, center } })
    }

    pub fn support(&self) -> Rect {
        self.support
    }

    pub fn profile(&self) -> Profile {
        self.profile
    }

    pub fn is_homogeneous(&self) -> bool {
        matches!(self.profile, Profile::Homogeneous)
    }

    pub fn q(&self, p: Point) -> f64 {
        match self.profile {
            Profile::Homogeneous => 0.0,
            Profile::Gaussian { amplitude, width, center } => {
                if !self.support.contains(p) {
                    return 0.0;
                }
                let d = p - center;
                amplitude * (-(d.x * d.x + d.y * d.y) / (2.0 * width * width)).exp()
            }
        }
    }

    pub fn n(&self, p: Point) -> f64 {
        (1.0 + self.q(p)).sqrt()
    }

    /// `n^2 = 1 + q`, evaluated without the square root round trip.
    pub fn n2(&self, p: Point) -> f64 {
        1.0 + self.q(p)
    }

    pub fn eval_n_grid(&self, points: &[Point]) -> Vec<f64> {
        points.iter().map(|&p| self.n(p)).collect()
    }

    /// Extreme values of `n` over the sample points.
    pub fn n_range(&self, points: &[Point]) -> (f64, f64) {
        points.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &p| {
            let n = self.n(p);
            (lo.min(n), hi.max(n))
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn unit() -> Rect {
        Rect::new(-0.5, -0.5, 0.5, 0.5)
    }

    #[test]
    fn homogeneous_values() {
        let m = Medium::homogeneous(unit());
        assert_eq!(m.q(Point::new(0.3, -0.1)), 0.0);
        assert_eq!(m.n(Point::new(0.0, 0.0)), 1.0);
        assert_eq!(m.q(Point::new(0.5, 0.2)), 0.0);
        assert_eq!(m.eval_n_grid(&[Point::default(); 3]), vec![1.0; 3]);
        assert!(m.eval_n_grid(&[]).is_empty());
    }

    #[test]
    fn gaussian_values() {
        let m = Medium::gaussian_bump(0.5, 0.1, Point::default(), unit()).unwrap();
        assert_eq!(m.q(Point::default()), 0.5);
        let expected = 0.5 * (-0.5f64).exp();
        assert!((m.q(Point::new(0.1, 0.0)) - expected).abs() < 1e-15);
        assert!((expected - 0.303265).abs() < 1e-6);
        assert!((m.eval_n_grid(&[Point::default()])[0] - 1.5f64.sqrt()).abs() < 1e-15);
        assert_eq!(m.q(Point::new(0.7, 0.0)), 0.0);
    }

    #[test]
    fn gaussian_rejections() {
        let wide = Medium::gaussian_bump(0.5, 0.3, Point::default(), unit());
        assert!(matches!(wide, Err(Error::SupportViolation { .. })));
        if let Err(Error::SupportViolation { value, .. }) = wide {
            assert!((value - 0.5 * (-0.25f64 / 0.18).exp()).abs() < 1e-12);
        }
        assert!(matches!(
            Medium::gaussian_bump(-1.0, 0.05, Point::default(), unit()),
            Err(Error::InvalidAmplitude(_))
        ));
    }

    #[test]
    fn homogeneous_random_points() {
        let m = Medium::homogeneous(unit());
        let mut s = 1u64;
        for _ in 0..10_000 {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            let x = (s >> 11) as f64 / (1u64 << 53) as f64 * 4.0 - 2.0;
            let y = (s.rotate_left(17) >> 11) as f64 / (1u64 << 53) as f64 * 4.0 - 2.0;
            assert_eq!(m.q(Point::new(x, y)), 0.0);
        }
    }

    proptest! {
        #[test]
        fn q_matches_index(a in -0.9f64..2.0, w in 0.02f64..0.1, x in -0.6f64..0.6, y in -0.6f64..0.6) {
            let m = Medium::gaussian_bump(a, w, Point::default(), unit()).unwrap();
            let p = Point::new(x, y);
            let q = m.q(p);
            let n = m.n(p);
            prop_assert!(n > 0.0);
            prop_assert!((q - (n * n - 1.0)).abs() <= 1e-14 * (1.0 + q.abs()));
        }

        #[test]
        fn bump_is_radial(r in 0.0f64..0.4, t1 in 0.0f64..6.3, t2 in 0.0f64..6.3) {
            let m = Medium::gaussian_bump(0.5, 0.1, Point::default(), unit()).unwrap();
            let a = m.q(Point::polar(r, t1));
            let b = m.q(Point::polar(r, t2));
            prop_assert!((a - b).abs() <= 1e-15);
        }

        #[test]
        fn vanishes_outside(x in 0.5f64..3.0, y in -3.0f64..3.0, flip in proptest::bool::ANY) {
            let m = Medium::gaussian_bump(0.5, 0.1, Point::default(), unit()).unwrap();
            let p = if flip { Point::new(y, x) } else { Point::new(x, y) };
            prop_assert!(m.q(p).abs() <= SUPPORT_TOLERANCE);
        }
    }
}
