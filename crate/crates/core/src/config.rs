//! System-level parameters of the wideband multi-carrier downlink.

use crate::error::{Error, Result};

/// Propagation speed used for all delay and path-gain computations, in m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Static description of the transmitter, the carrier layout and the
/// receiver population.
///
/// All frequencies are in Hz, powers in W and distances in m. The base
/// station carries a uniform linear array of `bs_antennas` elements spaced
/// `antenna_spacing_m` apart; each reflecting surface is a uniform planar
/// array of `ris_rows × ris_cols` elements with the same spacing.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemConfig {
    /// Carrier frequency f_c.
    pub carrier_hz: f64,
    /// Total bandwidth B spanned by the subcarriers.
    pub bandwidth_hz: f64,
    /// Number of subcarriers M.
    pub num_subcarriers: usize,
    /// Number of base-station antennas N.
    pub bs_antennas: usize,
    /// Number of RF chains feeding the analog network.
    pub rf_chains: usize,
    /// Number of single-antenna users K.
    pub users: usize,
    /// Number of reflecting surfaces R (one per RF chain).
    pub ris_count: usize,
    /// Rows of each reflecting surface grid.
    pub ris_rows: usize,
    /// Columns of each reflecting surface grid.
    pub ris_cols: usize,
    /// Transmit power budget P_max in W.
    pub max_power_w: f64,
    /// Noise power per user per subcarrier in W.
    pub noise_w: f64,
    /// Element spacing d of both arrays in m.
    pub antenna_spacing_m: f64,
}

impl SystemConfig {
    /// The reference configuration used throughout the experiments:
    /// 128 antennas, 300 GHz carrier, 30 GHz bandwidth, 8 subcarriers,
    /// 4 RF chains, 4 users, 4 surfaces of 4×4 elements, 10 dBm budget and
    /// −85 dBm noise floor. Spacing defaults to half the carrier wavelength.
    pub fn reference() -> Self {
        let carrier_hz = 300e9;
        SystemConfig {
            carrier_hz,
            bandwidth_hz: 30e9,
            num_subcarriers: 8,
            bs_antennas: 128,
            rf_chains: 4,
            users: 4,
            ris_count: 4,
            ris_rows: 4,
            ris_cols: 4,
            max_power_w: dbm_to_watt(10.0),
            noise_w: dbm_to_watt(-85.0),
            antenna_spacing_m: SPEED_OF_LIGHT / (2.0 * carrier_hz),
        }
    }

    /// Checks mutual consistency of all fields.
    pub fn validate(&self) -> Result<()> {
        if !(self.carrier_hz.is_finite() && self.carrier_hz > 0.0) {
            return Err(Error::Config("carrier frequency must be positive".into()));
        }
        if !(self.bandwidth_hz.is_finite() && self.bandwidth_hz >= 0.0) {
            return Err(Error::Config("bandwidth must be non-negative".into()));
        }
        if self.num_subcarriers == 0 {
            return Err(Error::Config("at least one subcarrier is required".into()));
        }
        if self.bs_antennas == 0 {
            return Err(Error::Config("at least one antenna is required".into()));
        }
        if self.rf_chains == 0 {
            return Err(Error::Config("at least one RF chain is required".into()));
        }
        if self.ris_count != self.rf_chains {
            return Err(Error::Config(format!(
                "one RF chain per reflecting surface is required (got {} chains, {} surfaces)",
                self.rf_chains, self.ris_count
            )));
        }
        if self.ris_rows == 0 || self.ris_cols == 0 {
            return Err(Error::Config("reflecting surfaces must have at least one element".into()));
        }
        if self.users == 0 {
            return Err(Error::Config("at least one user is required".into()));
        }
        if !(self.max_power_w.is_finite() && self.max_power_w > 0.0) {
            return Err(Error::Config("transmit power budget must be positive".into()));
        }
        if !(self.noise_w.is_finite() && self.noise_w > 0.0) {
            return Err(Error::Config("noise power must be positive".into()));
        }
        if !(self.antenna_spacing_m.is_finite() && self.antenna_spacing_m > 0.0) {
            return Err(Error::Config("antenna spacing must be positive".into()));
        }
        // The lowest subcarrier must stay at a positive frequency.
        if self.carrier_hz - self.bandwidth_hz / 2.0 <= 0.0 {
            return Err(Error::Config("bandwidth exceeds twice the carrier frequency".into()));
        }
        Ok(())
    }

    /// Carrier period T_c = 1/f_c in s.
    pub fn carrier_period(&self) -> f64 {
        1.0 / self.carrier_hz
    }

    /// Carrier wavelength in m.
    pub fn wavelength(&self) -> f64 {
        SPEED_OF_LIGHT / self.carrier_hz
    }

    /// Inter-element propagation delay T_d = d/c in s. At the default
    /// half-wavelength spacing this equals half the carrier period.
    pub fn antenna_delay(&self) -> f64 {
        self.antenna_spacing_m / SPEED_OF_LIGHT
    }

    /// Elements per reflecting surface.
    pub fn ris_elements(&self) -> usize {
        self.ris_rows * self.ris_cols
    }

    /// Total reflecting elements across all surfaces.
    pub fn total_ris_elements(&self) -> usize {
        self.ris_count * self.ris_elements()
    }

    /// Centered subcarrier grid: f_m = f_c + (B/M)·(m − 1 − (M−1)/2) for
    /// m = 1..M, so the grid is symmetric about the carrier.
    pub fn subcarrier_frequencies(&self) -> Vec<f64> {
        let m_total = self.num_subcarriers;
        let step = self.bandwidth_hz / m_total as f64;
        (1..=m_total)
            .map(|m| self.carrier_hz + step * (m as f64 - 1.0 - (m_total as f64 - 1.0) / 2.0))
            .collect()
    }

    /// Frequency of one subcarrier relative to the carrier, ζ_m = f_m/f_c.
    pub fn relative_frequency(&self, f_hz: f64) -> f64 {
        f_hz / self.carrier_hz
    }
}

/// Converts a power level in dBm to W.
pub fn dbm_to_watt(dbm: f64) -> f64 {
    1e-3 * 10f64.powf(dbm / 10.0)
}
