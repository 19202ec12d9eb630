//! Node placement and propagation-gain models.
//!
//! Coordinate conventions: positions live in a right-handed x/y/z frame with
//! z pointing up. The base-station array axis is the global x axis, so the
//! departure angle θ toward a point with unit direction w satisfies
//! sin θ = w·x̂. Each reflecting surface is a planar grid whose first index
//! runs along +y and whose second index runs along −z (downward); a direction
//! w seen from the surface is parameterized by an azimuth/elevation pair
//! (u, v) ∈ [−π/2, π/2]² through
//!
//!   cos u · sin v = w·ŷ,   cos v = −w·ẑ,
//!
//! which covers every direction with w·ẑ ≤ 0, i.e. nodes at or below the
//! surface. The reference deployment (base station below the panels, users on
//! the ground) satisfies this for every hop.

use crate::config::{SystemConfig, SPEED_OF_LIGHT};
use crate::error::{Error, Result};

/// Propagation-gain model applied to each line-of-sight hop.
#[derive(Debug, Clone, PartialEq)]
pub enum GainModel {
    /// Unit amplitude and zero delay; isolates array effects.
    UnitGain,
    /// Spherical spreading: amplitude c/(4π·f_c·dist), delay dist/c.
    FreeSpace,
    /// Standard complex normal amplitude per hop, delay dist/c. Draws are
    /// consumed in a fixed hop order so equal seeds reproduce equal channels.
    ComplexGaussian { seed: u64 },
}

/// Positions of the base station, the reflecting surfaces and the users.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub bs_position: [f64; 3],
    pub ris_positions: Vec<[f64; 3]>,
    pub user_positions: Vec<[f64; 3]>,
}

impl Scenario {
    /// The deployment used by the reference experiments: base station at
    /// (50, 0, 3), four panels on the x = 0 wall and users scattered near
    /// (0, 85, 0). User positions must still be supplied (they are usually
    /// drawn per trial); this helper fixes the infrastructure side.
    pub fn reference_infrastructure(user_positions: Vec<[f64; 3]>) -> Self {
        Scenario {
            bs_position: [50.0, 0.0, 3.0],
            ris_positions: vec![
                [0.0, 80.0, 6.0],
                [0.0, 80.0, 8.0],
                [0.0, 85.0, 6.0],
                [0.0, 85.0, 8.0],
            ],
            user_positions,
        }
    }

    /// Checks counts against the configuration and that every hop direction
    /// is representable by the surface parameterization.
    pub fn validate(&self, cfg: &SystemConfig) -> Result<()> {
        if self.ris_positions.len() != cfg.ris_count {
            return Err(Error::Dimension(format!(
                "scenario has {} surfaces, configuration expects {}",
                self.ris_positions.len(),
                cfg.ris_count
            )));
        }
        if self.user_positions.len() != cfg.users {
            return Err(Error::Dimension(format!(
                "scenario has {} users, configuration expects {}",
                self.user_positions.len(),
                cfg.users
            )));
        }
        for (r, ris) in self.ris_positions.iter().enumerate() {
            let w = unit_direction(ris, &self.bs_position)?;
            if w[2] > 0.0 {
                return Err(Error::Domain(format!(
                    "base station sits above surface {r}; direction not representable"
                )));
            }
            for (k, user) in self.user_positions.iter().enumerate() {
                let w = unit_direction(ris, user)?;
                if w[2] > 0.0 {
                    return Err(Error::Domain(format!(
                        "user {k} sits above surface {r}; direction not representable"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Departure angle from the base-station array toward surface `r`.
    pub fn bs_ris_angle(&self, r: usize) -> Result<f64> {
        let w = unit_direction(&self.bs_position, &self.ris_positions[r])?;
        Ok(w[0].asin())
    }

    /// Departure angle from the base-station array toward user `k`.
    pub fn bs_user_angle(&self, k: usize) -> Result<f64> {
        let w = unit_direction(&self.bs_position, &self.user_positions[k])?;
        Ok(w[0].asin())
    }

    /// Arrival direction (u, v) at surface `r` for the hop from the base
    /// station.
    pub fn ris_arrival(&self, r: usize) -> Result<(f64, f64)> {
        let w = unit_direction(&self.ris_positions[r], &self.bs_position)?;
        surface_angles(&w)
    }

    /// Departure direction (u, v) at surface `r` toward user `k`.
    pub fn ris_user_angles(&self, r: usize, k: usize) -> Result<(f64, f64)> {
        let w = unit_direction(&self.ris_positions[r], &self.user_positions[k])?;
        surface_angles(&w)
    }

    pub fn bs_ris_distance(&self, r: usize) -> f64 {
        distance(&self.bs_position, &self.ris_positions[r])
    }

    pub fn ris_user_distance(&self, r: usize, k: usize) -> f64 {
        distance(&self.ris_positions[r], &self.user_positions[k])
    }

    pub fn bs_user_distance(&self, k: usize) -> f64 {
        distance(&self.bs_position, &self.user_positions[k])
    }

    /// One steering angle per RF chain: chain r points at surface r.
    pub fn chain_steering_angles(&self) -> Result<Vec<f64>> {
        (0..self.ris_positions.len()).map(|r| self.bs_ris_angle(r)).collect()
    }
}

impl GainModel {
    /// Complex amplitude for a hop of length `dist` given a pre-drawn
    /// standard complex normal variate (only consumed by the random model).
    pub(crate) fn amplitude(
        &self,
        dist: f64,
        cfg: &SystemConfig,
        draw: num_complex::Complex64,
    ) -> num_complex::Complex64 {
        match self {
            GainModel::UnitGain => num_complex::Complex64::new(1.0, 0.0),
            GainModel::FreeSpace => num_complex::Complex64::new(
                SPEED_OF_LIGHT / (4.0 * std::f64::consts::PI * cfg.carrier_hz * dist),
                0.0,
            ),
            GainModel::ComplexGaussian { .. } => draw,
        }
    }

    /// Propagation delay for a hop of length `dist`.
    pub(crate) fn delay(&self, dist: f64) -> f64 {
        match self {
            GainModel::UnitGain => 0.0,
            GainModel::FreeSpace | GainModel::ComplexGaussian { .. } => dist / SPEED_OF_LIGHT,
        }
    }
}

fn distance(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    let d = [b[0] - a[0], b[1] - a[1], b[2] - a[2]];
    (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt()
}

fn unit_direction(from: &[f64; 3], to: &[f64; 3]) -> Result<[f64; 3]> {
    let n = distance(from, to);
    if !(n.is_finite() && n > 0.0) {
        return Err(Error::Domain("coincident nodes have no direction".into()));
    }
    Ok([(to[0] - from[0]) / n, (to[1] - from[1]) / n, (to[2] - from[2]) / n])
}

/// Maps a unit direction with w·ẑ ≤ 0 to the (u, v) pair defined in the
/// module docs. The grid's first axis carries cos u·sin v = w_y, the second
/// carries cos v = −w_z.
fn surface_angles(w: &[f64; 3]) -> Result<(f64, f64)> {
    let a1 = w[1];
    let a2 = -w[2];
    if a2 < 0.0 {
        return Err(Error::Domain(
            "direction points above the surface; not representable".into(),
        ));
    }
    let v0 = a2.clamp(-1.0, 1.0).acos(); // in [0, π/2] because a2 ≥ 0
    let sin_v0 = (1.0 - a2 * a2).max(0.0).sqrt();
    if sin_v0 < 1e-15 {
        // Straight below the surface; azimuth is immaterial.
        return Ok((0.0, v0));
    }
    let v = if a1 < 0.0 { -v0 } else { v0 };
    let u = (a1.abs() / sin_v0).clamp(0.0, 1.0).acos();
    Ok((u, v))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn reference_users() -> Vec<[f64; 3]> {
        vec![[0.3, 85.2, 0.0], [-0.4, 84.7, 0.0], [0.1, 85.9, 0.0], [-0.2, 84.3, 0.0]]
    }

    #[test]
    fn reference_geometry_validates() {
        let cfg = SystemConfig::reference();
        let sc = Scenario::reference_infrastructure(reference_users());
        sc.validate(&cfg).unwrap();
    }

    #[test]
    fn bs_ris_angles_are_negative_toward_the_wall() {
        // The wall at x = 0 lies in the −x half space seen from (50, 0, 3),
        // so every departure sine is negative. Frozen from the geometry:
        // sin θ_1 = −50/|(−50, 80, 3)| = −0.5297311660809016.
        let sc = Scenario::reference_infrastructure(reference_users());
        let theta = sc.bs_ris_angle(0).unwrap();
        assert_relative_eq!(theta.sin(), -0.5297311660809016, max_relative = 1e-12);
        assert_relative_eq!(sc.bs_ris_distance(0), 94.38749917229505, max_relative = 1e-12);
        for r in 0..4 {
            assert!(sc.bs_ris_angle(r).unwrap() < 0.0);
        }
    }

    #[test]
    fn surface_angle_degenerate_direction() {
        // Node straight below: only the elevation term survives.
        let (u, v) = surface_angles(&[0.0, 0.0, -1.0]).unwrap();
        assert_eq!(u, 0.0);
        assert_relative_eq!(v, 0.0, epsilon = 1e-15);
    }

    #[test]
    fn directions_above_the_surface_are_rejected() {
        assert!(surface_angles(&[0.0, 0.6, 0.8]).is_err());

        let cfg = SystemConfig::reference();
        let mut sc = Scenario::reference_infrastructure(reference_users());
        sc.user_positions[0][2] = 50.0; // hoist a user above the panels
        assert!(sc.validate(&cfg).is_err());
    }

    #[test]
    fn count_mismatches_are_rejected() {
        let cfg = SystemConfig::reference();
        let mut sc = Scenario::reference_infrastructure(reference_users());
        sc.ris_positions.pop();
        assert!(sc.validate(&cfg).is_err());

        let mut sc = Scenario::reference_infrastructure(reference_users());
        sc.user_positions.pop();
        assert!(sc.validate(&cfg).is_err());
    }

    proptest! {
        /// (u, v) must reproduce the direction cosines it encodes for any
        /// representable direction.
        #[test]
        fn surface_angles_roundtrip(
            x in -1.0f64..1.0,
            y in -1.0f64..1.0,
            z in -1.0f64..0.0,
        ) {
            let n = (x * x + y * y + z * z).sqrt();
            prop_assume!(n > 1e-6);
            let w = [x / n, y / n, z / n];
            let (u, v) = surface_angles(&w).unwrap();
            prop_assert!((-std::f64::consts::FRAC_PI_2..=std::f64::consts::FRAC_PI_2).contains(&u));
            prop_assert!((-std::f64::consts::FRAC_PI_2..=std::f64::consts::FRAC_PI_2).contains(&v));
            prop_assert!((u.cos() * v.sin() - w[1]).abs() < 1e-12);
            prop_assert!((v.cos() + w[2]).abs() < 1e-12);
        }
    }
}
