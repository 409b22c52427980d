//! Photorefractive response of a single lithium-niobate waveguide.
//!
//! Irradiation powers are the power delivered into one waveguide, in watts.
//! The photoconductivity constant `a_const` and the Glass constant `kappa`
//! are lumped so that `a_const * alpha_abs * power` is a conductivity and
//! `kappa * alpha_abs * power / sigma` is a field in V/m.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Vacuum permittivity, F/m.
pub const VACUUM_PERMITTIVITY: f64 = 8.854_187_812_8e-12;

/// Material constants of the photorefractive model.
#[derive(Debug, Clone, PartialEq)]
pub struct MaterialParams {
    /// Refractive index at the signal wavelength.
    pub n: f64,
    /// Pockels coefficient, m/V.
    pub r33: f64,
    /// Overlap of the optical mode with the space-charge field, in (0, 1].
    pub gamma: f64,
    /// Glass (photovoltaic) constant.
    pub kappa: f64,
    /// Absorption coefficient of the donor/acceptor centres, 1/m.
    pub alpha_abs: f64,
    /// Dark conductivity, S/m.
    pub sigma_d: f64,
    /// Lumped photoconductivity constant.
    pub a_const: f64,
    pub eps_r: f64,
    pub eps_0: f64,
    /// Sublinear exponent of the high-intensity photoconductivity.
    pub m_exp: u32,
    /// Power at which the low-intensity (linear) photoconductivity regime
    /// hands over to the sublinear one, W.
    pub i_crossover: f64,
}

impl MaterialParams {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("material.n", self.n),
            ("material.r33_m_per_v", self.r33),
            ("material.gamma", self.gamma),
            ("material.kappa", self.kappa),
            ("material.alpha_abs_per_m", self.alpha_abs),
            ("material.sigma_d_s_per_m", self.sigma_d),
            ("material.a_const", self.a_const),
            ("material.eps_r", self.eps_r),
            ("material.eps_0", self.eps_0),
            ("material.i_crossover_w", self.i_crossover),
        ];
        for (key, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::config(
                    key,
                    format!("must be finite and > 0, got {v}"),
                ));
            }
        }
        if self.gamma > 1.0 {
            return Err(Error::config(
                "material.gamma",
                "overlap integral must be <= 1",
            ));
        }
        if self.m_exp < 2 {
            return Err(Error::config(
                "material.m_exp",
                "sublinear exponent must be >= 2",
            ));
        }
        Ok(())
    }

    /// `n^3 r33 gamma / 2`: index change per unit space-charge field.
    pub fn electro_optic_factor(&self) -> f64 {
        self.n.powi(3) * self.r33 * self.gamma / 2.0
    }

    /// Initial slope of the saturated index response, 1/W.
    ///
    /// Built with the absorption coefficient so that `f` is exactly the
    /// zero-field saturated index change of the space-charge route.
    pub fn coeff_a(&self) -> f64 {
        self.electro_optic_factor() * self.kappa * self.alpha_abs / self.sigma_d
    }

    /// Saturation coefficient `a * alpha / sigma_d`, 1/W.
    pub fn coeff_b(&self) -> f64 {
        self.a_const * self.alpha_abs / self.sigma_d
    }

    /// Prefactor of the sublinear photoconductivity, chosen so that the two
    /// regimes meet at `i_crossover`.
    pub fn high_regime_const(&self) -> f64 {
        let m = f64::from(self.m_exp);
        self.a_const * self.alpha_abs * self.i_crossover.powf(1.0 - 1.0 / m)
    }

    pub fn photoconductivity(&self, i_ir: f64) -> Result<f64> {
        check_power(i_ir)?;
        if i_ir <= self.i_crossover {
            Ok(self.a_const * self.alpha_abs * i_ir)
        } else {
            let m = f64::from(self.m_exp);
            Ok(self.high_regime_const() * i_ir.powf(1.0 / m))
        }
    }

    /// Build-up time constant for a given photoconductivity.
    pub fn time_constant(&self, sigma_ph: f64) -> Result<f64> {
        if !(sigma_ph >= 0.0 && sigma_ph.is_finite()) {
            return Err(Error::domain(format!(
                "photoconductivity must be >= 0, got {sigma_ph}"
            )));
        }
        Ok(self.eps_r * self.eps_0 / (self.sigma_d + sigma_ph))
    }

    pub fn dark_time_constant(&self) -> f64 {
        self.eps_r * self.eps_0 / self.sigma_d
    }

    /// Build-up time constant under irradiation `i_ir`.
    pub fn response_time(&self, i_ir: f64) -> Result<f64> {
        self.time_constant(self.photoconductivity(i_ir)?)
    }

    /// Saturated index response that depends on irradiation only.
    ///
    /// Below the crossover this is `A i / (1 + B i)`. Above it the
    /// photoconductivity is sublinear and the response grows as
    /// `i^(1 - 1/m)` once it dominates the dark conductivity; both branches
    /// share the same space-charge expression so they agree at the crossover.
    pub fn f_saturated(&self, i_ir: f64) -> Result<f64> {
        check_power(i_ir)?;
        if i_ir <= self.i_crossover {
            Ok(hyperbolic_response(self.coeff_a(), self.coeff_b(), i_ir))
        } else {
            let sigma = self.sigma_d + self.photoconductivity(i_ir)?;
            Ok(self.electro_optic_factor() * self.kappa * self.alpha_abs * i_ir / sigma)
        }
    }

    /// Space-charge field reached at saturation, V/m.
    pub fn saturated_field(&self, i_ir: f64, e_app: f64) -> Result<f64> {
        let sigma_ph = self.photoconductivity(i_ir)?;
        let sigma = self.sigma_d + sigma_ph;
        Ok((self.kappa * self.alpha_abs * i_ir - sigma_ph * e_app) / sigma)
    }

    /// Saturated photorefractive index change under irradiation and an
    /// applied field.
    pub fn saturated_index_change(&self, i_ir: f64, e_app: f64) -> Result<f64> {
        let sigma_ph = self.photoconductivity(i_ir)?;
        let sigma = self.sigma_d + sigma_ph;
        Ok(self.electro_optic_factor()
            * (-(sigma_ph / sigma) * e_app + (self.kappa * self.alpha_abs / sigma) * i_ir))
    }
}

/// `a i / (1 + b i)`.
pub fn hyperbolic_response(a: f64, b: f64, i: f64) -> f64 {
    a * i / (1.0 + b * i)
}

fn check_power(i_ir: f64) -> Result<()> {
    if i_ir >= 0.0 && i_ir.is_finite() {
        Ok(())
    } else {
        Err(Error::domain(format!(
            "irradiation power must be >= 0, got {i_ir}"
        )))
    }
}

/// Waveguide and wavelength geometry. All lengths in metres.
#[derive(Debug, Clone, PartialEq)]
pub struct GeometryParams {
    pub arm_length: f64,
    pub electrode_length: f64,
    pub electrode_gap: f64,
    pub lambda_signal: f64,
    pub lambda_irradiation: f64,
    /// Effective photorefractive interaction length.
    pub l_eff: f64,
}

impl GeometryParams {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("geometry.arm_length_m", self.arm_length),
            ("geometry.electrode_length_m", self.electrode_length),
            ("geometry.electrode_gap_m", self.electrode_gap),
            ("geometry.lambda_signal_nm", self.lambda_signal),
            ("geometry.lambda_irradiation_nm", self.lambda_irradiation),
            ("geometry.l_eff_m", self.l_eff),
        ];
        for (key, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::config(
                    key,
                    format!("must be finite and > 0, got {v}"),
                ));
            }
        }
        if self.electrode_length > self.arm_length {
            return Err(Error::config(
                "geometry.electrode_length_m",
                "electrode length cannot exceed the arm length",
            ));
        }
        Ok(())
    }

    /// Field-coupling coefficient `2 pi a L_E / (kappa lambda0)`.
    pub fn coeff_c(&self, mat: &MaterialParams) -> f64 {
        2.0 * mat.a_const * std::f64::consts::PI * self.electrode_length
            / (mat.kappa * self.lambda_signal)
    }

    /// `2 pi L / lambda0`.
    pub fn coeff_d(&self) -> f64 {
        2.0 * std::f64::consts::PI * self.arm_length / self.lambda_signal
    }

    /// Signal phase per unit space-charge field over the effective length,
    /// rad per V/m.
    pub fn phase_per_field(&self, mat: &MaterialParams) -> f64 {
        2.0 * std::f64::consts::PI * self.l_eff * mat.electro_optic_factor() / self.lambda_signal
    }
}

/// Saturated photorefractive phase of one waveguide, `(-C E + D) f(I)`.
pub fn saturated_phase(
    mat: &MaterialParams,
    geo: &GeometryParams,
    i_ir: f64,
    e_app: f64,
) -> Result<f64> {
    let f = mat.f_saturated(i_ir)?;
    Ok((-geo.coeff_c(mat) * e_app + geo.coeff_d()) * f)
}

/// What happens to the space-charge field while no irradiation is applied.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecayMode {
    /// The stored field persists unchanged.
    #[default]
    Frozen,
    /// The field relaxes toward zero with the dark time constant.
    DarkDecay,
}

impl std::str::FromStr for DecayMode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "frozen" => Ok(DecayMode::Frozen),
            "dark_decay" => Ok(DecayMode::DarkDecay),
            other => Err(format!("expected `frozen` or `dark_decay`, got `{other}`")),
        }
    }
}

impl std::fmt::Display for DecayMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            DecayMode::Frozen => "frozen",
            DecayMode::DarkDecay => "dark_decay",
        })
    }
}

/// Space-charge state of one arm.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ArmState {
    /// Space-charge field, V/m.
    pub e_s: f64,
    /// Time the arm has been stepped, s.
    pub t_elapsed: f64,
}

/// Advance one arm by `dt` under constant irradiation and applied field.
///
/// The field relaxes exponentially toward its saturated value with the
/// build-up constant of the current irradiation. The update is the exact
/// solution of the linear relaxation, so any step size is stable and
/// splitting a step gives the same result.
pub fn evolve_arm(
    state: ArmState,
    mat: &MaterialParams,
    i_ir: f64,
    e_app: f64,
    dt: f64,
    decay_mode: DecayMode,
) -> Result<ArmState> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::domain(format!("time step must be > 0, got {dt}")));
    }
    check_power(i_ir)?;
    let t_elapsed = state.t_elapsed + dt;
    if i_ir == 0.0 && decay_mode == DecayMode::Frozen {
        return Ok(ArmState {
            e_s: state.e_s,
            t_elapsed,
        });
    }
    // With no irradiation the target is zero and tau is the dark constant.
    let target = mat.saturated_field(i_ir, e_app)?;
    let tau = mat.response_time(i_ir)?;
    let e_s = target + (state.e_s - target) * (-dt / tau).exp();
    Ok(ArmState { e_s, t_elapsed })
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    pub(crate) fn material() -> MaterialParams {
        MaterialParams {
            n: 2.138,
            r33: 30.8e-12,
            gamma: 0.5,
            kappa: 5.0e-3,
            alpha_abs: 100.0,
            sigma_d: 1.0e-13,
            a_const: 2.0e-9,
            eps_r: 28.0,
            eps_0: VACUUM_PERMITTIVITY,
            m_exp: 2,
            i_crossover: 7.0e-6,
        }
    }

    pub(crate) fn geometry() -> GeometryParams {
        GeometryParams {
            arm_length: 0.02,
            electrode_length: 0.02,
            electrode_gap: 40e-6,
            lambda_signal: 1550e-9,
            lambda_irradiation: 405e-9,
            l_eff: 0.02,
        }
    }

    #[test]
    fn photoconductivity_regimes() {
        let m = material();
        assert_eq!(m.photoconductivity(0.0).unwrap(), 0.0);
        let s1 = m.photoconductivity(1e-7).unwrap();
        let s2 = m.photoconductivity(2e-7).unwrap();
        assert_relative_eq!(s2, 2.0 * s1, max_relative = 1e-15);

        // Both branches evaluated at the boundary.
        let low = m.a_const * m.alpha_abs * m.i_crossover;
        let high = m.high_regime_const() * m.i_crossover.powf(0.5);
        assert_relative_eq!(low, high, max_relative = 1e-12);
        let below = m.photoconductivity(m.i_crossover).unwrap();
        let above = m.photoconductivity(m.i_crossover * (1.0 + 1e-14)).unwrap();
        assert_relative_eq!(below, above, max_relative = 1e-12);

        assert!(matches!(m.photoconductivity(-1e-9), Err(Error::Domain(_))));
    }

    #[test]
    fn time_constant_examples() {
        let m = material();
        let dark = m.eps_r * m.eps_0 / m.sigma_d;
        assert_relative_eq!(m.time_constant(0.0).unwrap(), dark);
        assert_relative_eq!(
            m.time_constant(m.sigma_d).unwrap(),
            dark / 2.0,
            max_relative = 1e-15
        );
        assert!(m.time_constant(1e-13).unwrap() > m.time_constant(2e-13).unwrap());
        assert!(m.time_constant(-1.0).is_err());
    }

    #[test]
    fn f_saturated_examples() {
        let m = material();
        let (a, b) = (m.coeff_a(), m.coeff_b());
        assert_eq!(m.f_saturated(0.0).unwrap(), 0.0);
        assert!(1.0 / b < m.i_crossover);
        assert_relative_eq!(
            m.f_saturated(1.0 / b).unwrap(),
            a / (2.0 * b),
            max_relative = 1e-14
        );
        assert_relative_eq!(hyperbolic_response(a, b, 1e6), a / b, max_relative = 1e-5);

        // Continuity across the crossover.
        let lo = m.f_saturated(m.i_crossover).unwrap();
        let hi = m.f_saturated(m.i_crossover * (1.0 + 1e-14)).unwrap();
        assert_relative_eq!(lo, hi, max_relative = 1e-12);

        // Monotone on a log grid that crosses into the sublinear regime.
        let mut prev = 0.0;
        for k in 0..200 {
            let i = 1e-10 * 10f64.powf(k as f64 * 0.03);
            let f = m.f_saturated(i).unwrap();
            assert!(f >= prev, "f decreased at {i}");
            prev = f;
        }
    }

    #[test]
    fn high_regime_is_sublinear() {
        let m = material();
        let i = 1e-3;
        let ratio = m.f_saturated(4.0 * i).unwrap() / m.f_saturated(i).unwrap();
        // sigma_ph >> sigma_d here, so the ratio approaches 4^(1 - 1/2).
        assert_relative_eq!(ratio, 2.0, max_relative = 1e-2);
    }

    #[test]
    fn index_change_examples() {
        let m = material();
        assert_eq!(m.saturated_index_change(0.0, 1e5).unwrap(), 0.0);
        assert!(m.saturated_index_change(1e-6, 0.0).unwrap() > 0.0);
        let i = 3e-6;
        let base = m.saturated_index_change(i, 0.0).unwrap();
        let plus = m.saturated_index_change(i, 2e5).unwrap() - base;
        let minus = m.saturated_index_change(i, -2e5).unwrap() - base;
        assert!(plus < 0.0 && minus > 0.0);
        assert_relative_eq!(plus, -minus, max_relative = 1e-12);
    }

    #[test]
    fn saturated_phase_examples() {
        let m = material();
        let g = geometry();
        assert_eq!(saturated_phase(&m, &g, 0.0, 1e5).unwrap(), 0.0);
        let i = 2e-6;
        assert_relative_eq!(
            saturated_phase(&m, &g, i, 0.0).unwrap(),
            g.coeff_d() * m.f_saturated(i).unwrap()
        );
        let root = g.coeff_d() / g.coeff_c(&m);
        assert!(saturated_phase(&m, &g, i, root).unwrap().abs() < 1e-9);
    }

    #[test]
    fn phase_routes_agree_at_saturation() {
        // With L = L_E = l_eff the (-C E + D) f route and the 2 pi dn l / lambda
        // route are the same quantity in the linear-photoconductivity regime.
        let m = material();
        let g = geometry();
        for &i in &[1e-9, 3e-8, 6e-7, 4e-6, 6.9e-6] {
            for &e in &[-3e5, -1e4, 0.0, 5e4, 2e5] {
                let via_f = saturated_phase(&m, &g, i, e).unwrap();
                let via_dn =
                    2.0 * std::f64::consts::PI * m.saturated_index_change(i, e).unwrap() * g.l_eff
                        / g.lambda_signal;
                assert_relative_eq!(via_f, via_dn, max_relative = 1e-9);
            }
        }
    }

    #[test]
    fn evolve_examples() {
        let m = material();
        let (i, e) = (2e-6, 1e5);
        let target = m.saturated_field(i, e).unwrap();
        let tau = m.response_time(i).unwrap();

        let fixed = ArmState {
            e_s: target,
            t_elapsed: 0.0,
        };
        let next = evolve_arm(fixed, &m, i, e, 123.0, DecayMode::Frozen).unwrap();
        assert_relative_eq!(next.e_s, target, max_relative = 1e-15);

        let s = evolve_arm(ArmState::default(), &m, i, e, 3.0 * tau, DecayMode::Frozen).unwrap();
        assert_relative_eq!(s.e_s / target, 1.0 - (-3.0f64).exp(), max_relative = 1e-13);
        assert_relative_eq!(s.e_s / target, 0.950_212_931_632_136, max_relative = 1e-12);

        let start = ArmState {
            e_s: -4e3,
            t_elapsed: 0.0,
        };
        let two = evolve_arm(start, &m, i, e, 50.0, DecayMode::Frozen)
            .and_then(|s| evolve_arm(s, &m, i, e, 50.0, DecayMode::Frozen))
            .unwrap();
        let one = evolve_arm(start, &m, i, e, 100.0, DecayMode::Frozen).unwrap();
        assert_relative_eq!(two.e_s, one.e_s, max_relative = 1e-12);
        assert_relative_eq!(two.t_elapsed, 100.0);

        assert!(evolve_arm(start, &m, i, e, 0.0, DecayMode::Frozen).is_err());
        assert!(evolve_arm(start, &m, i, e, -1.0, DecayMode::Frozen).is_err());
    }

    #[test]
    fn dark_behaviour() {
        let m = material();
        let s = ArmState {
            e_s: 1e4,
            t_elapsed: 0.0,
        };
        let frozen = evolve_arm(s, &m, 0.0, 3e5, 1e6, DecayMode::Frozen).unwrap();
        assert_eq!(frozen.e_s, 1e4);
        let tau_d = m.dark_time_constant();
        let decayed = evolve_arm(s, &m, 0.0, 3e5, tau_d, DecayMode::DarkDecay).unwrap();
        assert_relative_eq!(decayed.e_s, 1e4 * (-1.0f64).exp(), max_relative = 1e-13);
    }

    #[test]
    fn tau_decreases_with_power() {
        let m = material();
        let mut prev = f64::INFINITY;
        for k in 0..60 {
            let i = 1e-10 * 10f64.powf(k as f64 * 0.1);
            let tau = m.response_time(i).unwrap();
            assert!(tau < prev);
            prev = tau;
        }
    }

    #[test]
    fn validation_names_the_key() {
        let mut m = material();
        m.sigma_d = 0.0;
        match m.validate() {
            Err(Error::Config { key, .. }) => assert_eq!(key, "material.sigma_d_s_per_m"),
            other => panic!("unexpected {other:?}"),
        }
        let mut m = material();
        m.m_exp = 1;
        assert!(m.validate().is_err());
        let mut g = geometry();
        g.electrode_length = 0.03;
        assert!(g.validate().is_err());
    }

    proptest! {
        #[test]
        fn semigroup(e0 in -1e5f64..1e5, i in 0.0f64..2e-5, e_app in -5e5f64..5e5,
                     dt1 in 1.0f64..5e3, dt2 in 1.0f64..5e3, dark in any::<bool>()) {
            let m = material();
            let mode = if dark { DecayMode::DarkDecay } else { DecayMode::Frozen };
            let s = ArmState { e_s: e0, t_elapsed: 0.0 };
            let a = evolve_arm(evolve_arm(s, &m, i, e_app, dt1, mode).unwrap(), &m, i, e_app, dt2, mode).unwrap();
            let b = evolve_arm(s, &m, i, e_app, dt1 + dt2, mode).unwrap();
            let scale = a.e_s.abs().max(b.e_s.abs()).max(1e-300);
            prop_assert!((a.e_s - b.e_s).abs() <= 1e-10 * scale);
        }

        #[test]
        fn monotone_approach(e0 in -1e5f64..1e5, i in 1e-12f64..2e-5, e_app in -5e5f64..5e5, dt in 1.0f64..500.0) {
            let m = material();
            let target = m.saturated_field(i, e_app).unwrap();
            let mut s = ArmState { e_s: e0, t_elapsed: 0.0 };
            let mut gap = (s.e_s - target).abs();
            for _ in 0..20 {
                s = evolve_arm(s, &m, i, e_app, dt, DecayMode::Frozen).unwrap();
                let g = (s.e_s - target).abs();
                prop_assert!(g <= gap * (1.0 + 1e-12));
                gap = g;
            }
        }
    }
}
