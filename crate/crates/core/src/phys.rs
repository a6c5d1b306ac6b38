//! Physical parameters and the coupling constants derived from them.
//!
//! Every frequency-like quantity is angular (rad/s) and every length is in
//! metres. The probe photon budget is expressed per beam: `n_photons =
//! photon_flux * interaction_time`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Vacuum permittivity (F/m), CODATA 2018.
pub const EPSILON_0: f64 = 8.854_187_812_8e-12;
/// Reduced Planck constant (J s), CODATA 2018.
pub const HBAR: f64 = 1.054_571_817e-34;
/// Speed of light (m/s).
pub const C_LIGHT: f64 = 299_792_458.0;

/// A two-level optical transition used for both hyperfine ground states.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AtomSpecies {
    pub transition_wavelength: f64,
    /// Spontaneous-emission rate of the excited state (rad/s).
    pub gamma: f64,
    /// Transition dipole moment (C m), fixed by the linewidth.
    pub dipole_moment: f64,
}

impl AtomSpecies {
    pub fn new(transition_wavelength: f64, gamma: f64) -> Result<Self> {
        if !(transition_wavelength > 0.0 && transition_wavelength.is_finite()) {
            return Err(Error::Domain(format!(
                "transition wavelength must be positive, got {transition_wavelength}"
            )));
        }
        let omega = 2.0 * PI * C_LIGHT / transition_wavelength;
        let dipole_moment = dipole_from_linewidth(gamma, omega)?;
        Ok(Self {
            transition_wavelength,
            gamma,
            dipole_moment,
        })
    }

    /// Rubidium-87 D2 line: 780 nm, 38.11e6 s^-1.
    pub fn rb87() -> Self {
        Self::new(780e-9, 38.11e6).expect("Rb-87 constants are valid")
    }

    pub fn omega_a(&self) -> f64 {
        2.0 * PI * C_LIGHT / self.transition_wavelength
    }

    /// `d^2 omega_a / (2 eps0 hbar)`; dividing by an area gives g^2 and by a
    /// volume gives g_c^2.
    fn coupling_numerator(&self) -> f64 {
        self.dipole_moment * self.dipole_moment * self.omega_a() / (2.0 * EPSILON_0 * HBAR)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CavityConfig {
    /// Energy decay rate (1/s).
    pub kappa: f64,
    pub length: f64,
    /// Start of the homodyne window. Zero integrates the full record
    /// including the cavity transient.
    pub homodyne_start: f64,
}

impl CavityConfig {
    pub fn new(kappa: f64, length: f64) -> Self {
        Self {
            kappa,
            length,
            homodyne_start: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhysicalConfig {
    pub species: AtomSpecies,
    /// Transverse quantization area of the probe (m^2).
    pub area: f64,
    /// Probe detuning from the atomic transition (rad/s).
    pub detuning: f64,
    pub n_atoms: f64,
    /// Input photon flux per beam (photons/s).
    pub photon_flux: f64,
    /// Probe duration tau (s).
    pub interaction_time: f64,
    /// Optical squeezing factor of the probe's phase quadrature.
    pub squeeze_r: f64,
    /// When false the excited-state linewidth is dropped from the
    /// dispersive factors and no atoms are lost.
    pub spontaneous_emission: bool,
    pub cavity: Option<CavityConfig>,
}

impl PhysicalConfig {
    /// Free-space configuration with coherent light and spontaneous emission on.
    pub fn free_space(
        species: AtomSpecies,
        area: f64,
        detuning: f64,
        n_atoms: f64,
        photon_flux: f64,
        interaction_time: f64,
    ) -> Self {
        Self {
            species,
            area,
            detuning,
            n_atoms,
            photon_flux,
            interaction_time,
            squeeze_r: 0.0,
            spontaneous_emission: true,
            cavity: None,
        }
    }

    pub fn n_photons(&self) -> f64 {
        self.photon_flux * self.interaction_time
    }

    /// Effective linewidth entering the dispersive and absorptive factors.
    pub fn effective_gamma(&self) -> f64 {
        if self.spontaneous_emission {
            self.species.gamma
        } else {
            0.0
        }
    }

    pub fn validate(&self) -> Result<()> {
        fn check(ok: bool, msg: impl FnOnce() -> String) -> Result<()> {
            if ok {
                Ok(())
            } else {
                Err(Error::Domain(msg()))
            }
        }
        let s = &self.species;
        check(s.transition_wavelength > 0.0, || "transition wavelength must be > 0".into())?;
        check(s.gamma > 0.0, || "gamma must be > 0".into())?;
        check(s.dipole_moment > 0.0, || "dipole moment must be > 0".into())?;
        check(self.area > 0.0 && self.area.is_finite(), || {
            format!("area must be > 0, got {}", self.area)
        })?;
        check(self.detuning != 0.0 && self.detuning.is_finite(), || {
            "detuning must be nonzero".into()
        })?;
        check(self.n_atoms >= 2.0 && self.n_atoms.is_finite(), || {
            format!("n_atoms must be >= 2, got {}", self.n_atoms)
        })?;
        check(self.photon_flux >= 0.0 && self.photon_flux.is_finite(), || {
            format!("photon_flux must be >= 0, got {}", self.photon_flux)
        })?;
        check(
            self.interaction_time > 0.0 && self.interaction_time.is_finite(),
            || format!("interaction_time must be > 0, got {}", self.interaction_time),
        )?;
        check(self.squeeze_r >= 0.0 && self.squeeze_r.is_finite(), || {
            format!("squeeze_r must be >= 0, got {}", self.squeeze_r)
        })?;
        if let Some(cav) = &self.cavity {
            if !(cav.kappa > 0.0 && cav.length > 0.0) {
                return Err(Error::Config(format!(
                    "cavity needs kappa > 0 and length > 0, got kappa={} length={}",
                    cav.kappa, cav.length
                )));
            }
            let tk = self.interaction_time * cav.kappa;
            if tk < 10.0 {
                return Err(Error::Config(format!(
                    "tau*kappa = {tk:.3} < 10: the cavity cannot reach steady state"
                )));
            }
            if !(cav.homodyne_start >= 0.0 && cav.homodyne_start < self.interaction_time) {
                return Err(Error::Config(format!(
                    "cavity.homodyne_start must lie in [0, tau), got {}",
                    cav.homodyne_start
                )));
            }
        }
        Ok(())
    }

    pub fn couplings(&self) -> DerivedCouplings {
        derive_couplings(self)
    }
}

/// Coupling constants and dimensionless groups derived from a [`PhysicalConfig`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivedCouplings {
    /// g^2 (m s^-2)
    pub g_sq: f64,
    /// Omega = Delta / (Delta^2 + gamma^2/4)
    pub omega_factor: f64,
    /// Gamma = (gamma/2) / (Delta^2 + gamma^2/4)
    pub gamma_factor: f64,
    pub chi_ns: f64,
    pub chi1: f64,
    pub chi2: f64,
    pub mu: f64,
    pub lambda: f64,
    pub zeta: f64,
    pub eps_tau: f64,
    pub eps_bar: f64,
    pub n_photons: f64,
    pub n_atoms: f64,
}

impl DerivedCouplings {
    /// Builds the coupling set from g^2 and the detuning/linewidth pair.
    pub fn from_parts(g_sq: f64, detuning: f64, gamma: f64, n_atoms: f64, n_photons: f64) -> Self {
        let denom = detuning * detuning + 0.25 * gamma * gamma;
        let omega_factor = detuning / denom;
        let gamma_factor = 0.5 * gamma / denom;
        let chi_ns = g_sq / (C_LIGHT * detuning);
        let chi1 = if gamma == 0.0 { chi_ns } else { g_sq * omega_factor / C_LIGHT };
        let chi2 = g_sq * gamma_factor / C_LIGHT;
        let mu = if chi2 > 0.0 { chi1 * chi1 / chi2 } else { f64::INFINITY };
        let mut out = Self {
            g_sq,
            omega_factor,
            gamma_factor,
            chi_ns,
            chi1,
            chi2,
            mu,
            lambda: 0.0,
            zeta: n_atoms * mu,
            eps_tau: 1.0,
            eps_bar: 1.0,
            n_photons: 0.0,
            n_atoms,
        };
        out.set_photons(n_photons);
        out
    }

    /// Same couplings at a different photon number.
    pub fn with_photons(mut self, n_photons: f64) -> Self {
        self.set_photons(n_photons);
        self
    }

    fn set_photons(&mut self, n_photons: f64) {
        self.n_photons = n_photons;
        self.lambda = self.chi2 * n_photons;
        self.eps_tau = decay_factor(self.lambda);
        self.eps_bar = mean_decay_factor(self.lambda);
    }
}

/// Surviving atom fraction `exp(-2 lambda)`.
pub fn decay_factor(lambda: f64) -> f64 {
    (-2.0 * lambda).exp()
}

/// Time average of the surviving fraction, `(1 - exp(-2 lambda)) / (2 lambda)`.
pub fn mean_decay_factor(lambda: f64) -> f64 {
    let x = 2.0 * lambda;
    if x < 1e-12 {
        1.0 - 0.5 * x
    } else {
        -(-x).exp_m1() / x
    }
}

/// Dipole moment from the free-space spontaneous-emission rate,
/// `d^2 = 3 pi eps0 hbar c^3 gamma / omega^3`.
pub fn dipole_from_linewidth(gamma: f64, omega_a: f64) -> Result<f64> {
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(Error::Domain(format!("gamma must be > 0, got {gamma}")));
    }
    if !(omega_a > 0.0 && omega_a.is_finite()) {
        return Err(Error::Domain(format!("omega_a must be > 0, got {omega_a}")));
    }
    let d_sq = 3.0 * PI * EPSILON_0 * HBAR * C_LIGHT.powi(3) * gamma / omega_a.powi(3);
    Ok(d_sq.sqrt())
}

/// Free-space coupling squared, `g^2 = d^2 omega_a / (2 eps0 hbar A)`. The
/// laser frequency is approximated by the atomic one.
pub fn free_space_g_sq(species: &AtomSpecies, area: f64) -> f64 {
    species.coupling_numerator() / area
}

pub fn derive_couplings(cfg: &PhysicalConfig) -> DerivedCouplings {
    DerivedCouplings::from_parts(
        free_space_g_sq(&cfg.species, cfg.area),
        cfg.detuning,
        cfg.effective_gamma(),
        cfg.n_atoms,
        cfg.n_photons(),
    )
}

/// Cavity single-photon coupling g_c (1/s) for mode volume `A L`.
pub fn cavity_coupling(cfg: &PhysicalConfig) -> Result<f64> {
    let cav = cfg
        .cavity
        .as_ref()
        .ok_or_else(|| Error::Config("cavity coupling requested without a cavity block".into()))?;
    let volume = cfg.area * cav.length;
    Ok((cfg.species.coupling_numerator() / volume).sqrt())
}

/// Atomic-only limit `mu -> 2 g^2 / (c gamma)` valid for `|Delta| >> gamma`.
pub fn far_detuned_mu(species: &AtomSpecies, area: f64) -> f64 {
    2.0 * free_space_g_sq(species, area) / (C_LIGHT * species.gamma)
}

/// Inverse of [`far_detuned_mu`]: the area that yields `zeta` with `n_atoms`.
pub fn area_for_zeta(species: &AtomSpecies, zeta: f64, n_atoms: f64) -> f64 {
    2.0 * species.coupling_numerator() * n_atoms / (C_LIGHT * species.gamma * zeta)
}
