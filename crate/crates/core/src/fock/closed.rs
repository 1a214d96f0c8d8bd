//! Closed-form single-device matrix elements.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{from_usize, Cx, Real};

/// Gain of a PDC and the matching hypothetical-beamsplitter angle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeviceParams<T> {
    pub r: T,
    pub theta: T,
    /// transmittance `cos theta = sech r`
    pub t: T,
    /// reflectance `sin theta = tanh r`
    pub refl: T,
}

impl<T: Real> DeviceParams<T> {
    pub fn from_gain(r: T) -> Result<Self> {
        if !(r.is_finite() && r >= T::zero()) {
            return Err(Error::InvalidArgument(format!(
                "gain must be finite and >= 0, got {r}"
            )));
        }
        let refl = r.tanh();
        Ok(DeviceParams {
            r,
            theta: refl.asin(),
            t: T::one() / r.cosh(),
            refl,
        })
    }

    pub fn from_angle(theta: T) -> Result<Self> {
        if !(theta >= T::zero() && theta < T::FRAC_PI_2()) {
            return Err(Error::InvalidArgument(format!(
                "beamsplitter angle {theta} outside [0, pi/2)"
            )));
        }
        let refl = theta.sin();
        Ok(DeviceParams {
            r: refl.atanh(),
            theta,
            t: theta.cos(),
            refl,
        })
    }
}

/// `C(n, k)` as a real number.
fn binomial<T: Real>(n: usize, k: usize) -> T {
    let k = k.min(n - k);
    (0..k).fold(T::one(), |acc, j| {
        acc * from_usize::<T>(n - j) / from_usize::<T>(j + 1)
    })
}

/// `<n_s; n_i| B |m_s; m_i>` for a two-mode beamsplitter with
/// `B a_s^dag B^dag = T a_s^dag - R a_i^dag` and
/// `B a_i^dag B^dag = R a_s^dag + T a_i^dag`.
///
/// Seeded by the binomial column `m_i = 0` and raised one idler photon at a
/// time. Returns zero when photon numbers do not match.
pub fn bs_fock_amplitude<T: Real>(
    t: T,
    r: T,
    m_s: usize,
    m_i: usize,
    n_s: usize,
    n_i: usize,
) -> Cx<T> {
    let zero = Cx::new(T::zero(), T::zero());
    if m_s + m_i != n_s + n_i {
        return zero;
    }
    // level j holds <o_s, m_s + j - o_s| B |m_s, j> for o_s = 0..=m_s + j
    let mut level: Vec<T> = (0..=m_s)
        .map(|o_s| {
            binomial::<T>(m_s, o_s).sqrt() * t.powi(o_s as i32) * (-r).powi((m_s - o_s) as i32)
        })
        .collect();
    for j in 0..m_i {
        let total = m_s + j + 1;
        let norm = from_usize::<T>(j + 1).sqrt();
        let next = (0..=total)
            .map(|o_s| {
                let o_i = total - o_s;
                let mut acc = T::zero();
                if o_s > 0 {
                    acc = acc + r * from_usize::<T>(o_s).sqrt() * level[o_s - 1];
                }
                if o_i > 0 && o_s < level.len() {
                    acc = acc + t * from_usize::<T>(o_i).sqrt() * level[o_s];
                }
                acc / norm
            })
            .collect();
        level = next;
    }
    Cx::new(level[n_s], T::zero())
}

/// `<n_s; n_i| G |m_s; m_i>` for the PDC `G = exp[r (a_s^dag a_i^dag - a_s a_i)]`,
/// via the single-device duality: `sech r` times the beamsplitter amplitude
/// with the idler input and output exchanged.
pub fn pdc_fock_amplitude_closed<T: Real>(
    r: T,
    m_s: usize,
    m_i: usize,
    n_s: usize,
    n_i: usize,
) -> Cx<T> {
    let t = T::one() / r.cosh();
    bs_fock_amplitude(t, r.tanh(), m_s, n_i, n_s, m_i) * t
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn device_params_are_consistent() {
        let d = DeviceParams::from_gain(0.7f64).unwrap();
        assert_relative_eq!(d.t * d.t + d.refl * d.refl, 1.0, epsilon = 1e-15);
        let e = DeviceParams::from_angle(d.theta).unwrap();
        assert_relative_eq!(e.r, 0.7, epsilon = 1e-12);
        assert!(DeviceParams::from_gain(-0.1f64).is_err());
        assert!(DeviceParams::from_angle(std::f64::consts::FRAC_PI_2).is_err());
    }

    #[test]
    fn binomial_column() {
        let (t, r) = (0.8f64, 0.6f64);
        // two signal photons in, one of them reflected
        let a = bs_fock_amplitude(t, r, 2, 0, 1, 1);
        assert_relative_eq!(a.re, -(2.0f64).sqrt() * t * r, epsilon = 1e-15);
        assert_eq!(bs_fock_amplitude(t, r, 1, 0, 2, 0), Cx::new(0.0, 0.0));
    }

    #[test]
    fn hong_ou_mandel() {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert!(bs_fock_amplitude(h, h, 1, 1, 1, 1).norm() < 1e-15);
    }

    #[test]
    fn pdc_vacuum_ladder() {
        for n in 0..=4 {
            let r = 0.5f64;
            let a = pdc_fock_amplitude_closed(r, 0, 0, n, n);
            assert_relative_eq!(a.re, r.tanh().powi(n as i32) / r.cosh(), epsilon = 1e-15);
        }
        assert_eq!(
            pdc_fock_amplitude_closed(0.0f64, 2, 1, 2, 1),
            Cx::new(1.0, 0.0)
        );
        assert_eq!(
            pdc_fock_amplitude_closed(0.0f64, 2, 1, 3, 2),
            Cx::new(0.0, 0.0)
        );
    }

    #[test]
    fn columns_are_normalised() {
        let (t, r) = (0.3f64, (1.0f64 - 0.09).sqrt());
        for m_s in 0..4 {
            for m_i in 0..4 {
                let n = m_s + m_i;
                let w: f64 = (0..=n)
                    .map(|o| bs_fock_amplitude(t, r, m_s, m_i, o, n - o).norm_sqr())
                    .sum();
                assert_relative_eq!(w, 1.0, epsilon = 1e-13);
            }
        }
    }
}
