//! Mach-Zehnder lithium-niobate device (variable optical attenuator).
//!
//! Each arm carries its own space-charge field. The arms are driven in
//! push-pull (`+V` on arm 1, `-V` on arm 2) and the irradiation beam is
//! split between them with the irradiation-wavelength splitting ratio.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::pe_core::{evolve_arm, ArmState, DecayMode, GeometryParams, MaterialParams};

/// Largest polarization-dependent irradiation penalty the model accepts, dB.
pub const MAX_POLARIZATION_PENALTY_DB: f64 = 0.93;

#[derive(Debug, Clone, PartialEq)]
pub struct MziDevice {
    pub mat: MaterialParams,
    pub geo: GeometryParams,
    /// Geometric (fabrication) phase, rad.
    pub delta_theta0: f64,
    pub v_pi: f64,
    /// Beam-splitting ratio at the signal wavelength.
    pub r_sig: f64,
    /// Beam-splitting ratio at the irradiation wavelength (share of arm 1).
    pub r_ir: f64,
    /// Fiber-to-chip loss at the irradiation wavelength, dB.
    pub coupling_loss_ir_db: f64,
    /// Fixed polarization penalty applied to the irradiation power, dB.
    pub polarization_penalty_db: f64,
    /// Finite extinction ratio of the interferometer; `None` is ideal
    /// destructive interference.
    pub extinction_ratio_db: Option<f64>,
    pub decay_mode: DecayMode,
    pub arm1: ArmState,
    pub arm2: ArmState,
}

/// One point of a voltage curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AttenuationSample {
    pub v_app: f64,
    /// Output over input mean photon number.
    pub mu_out_per_mu_in: f64,
    pub attenuation_db: f64,
    pub delta_theta: f64,
}

impl MziDevice {
    /// Unexposed device with balanced splitters, ideal extinction and no
    /// coupling loss.
    pub fn new(mat: MaterialParams, geo: GeometryParams, v_pi: f64, delta_theta0: f64) -> Self {
        Self {
            mat,
            geo,
            delta_theta0,
            v_pi,
            r_sig: 0.5,
            r_ir: 0.55,
            coupling_loss_ir_db: 0.0,
            polarization_penalty_db: 0.0,
            extinction_ratio_db: None,
            decay_mode: DecayMode::Frozen,
            arm1: ArmState::default(),
            arm2: ArmState::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.mat.validate()?;
        self.geo.validate()?;
        if !(self.v_pi > 0.0 && self.v_pi.is_finite()) {
            return Err(Error::config("device.v_pi_v", "must be > 0"));
        }
        if !(self.r_sig > 0.0 && self.r_sig < 1.0) {
            return Err(Error::config("device.r_sig", "must lie in (0, 1)"));
        }
        if !(self.r_ir > 0.0 && self.r_ir < 1.0) {
            return Err(Error::config("device.r_ir", "must lie in (0, 1)"));
        }
        if !(self.coupling_loss_ir_db >= 0.0 && self.coupling_loss_ir_db.is_finite()) {
            return Err(Error::config(
                "device.coupling_loss_ir_db",
                "must be >= 0 dB",
            ));
        }
        if !(0.0..=MAX_POLARIZATION_PENALTY_DB).contains(&self.polarization_penalty_db) {
            return Err(Error::config(
                "device.polarization_penalty_db",
                format!("must lie in [0, {MAX_POLARIZATION_PENALTY_DB}] dB"),
            ));
        }
        if let Some(er) = self.extinction_ratio_db {
            if !(er > 0.0 && er.is_finite()) {
                return Err(Error::config(
                    "device.extinction_ratio_db",
                    "must be > 0 dB",
                ));
            }
        }
        if !self.delta_theta0.is_finite() {
            return Err(Error::config("device.delta_theta0_rad", "must be finite"));
        }
        Ok(())
    }

    /// Clear the photorefractive state of both arms.
    pub fn reset_arms(&mut self) {
        self.arm1 = ArmState::default();
        self.arm2 = ArmState::default();
    }

    /// Irradiation power reaching each arm after fiber-to-chip coupling.
    pub fn split_irradiation(&self, i_total: f64) -> Result<(f64, f64)> {
        if !(i_total >= 0.0 && i_total.is_finite()) {
            return Err(Error::domain(format!(
                "irradiation power must be >= 0, got {i_total}"
            )));
        }
        let loss_db = self.coupling_loss_ir_db + self.polarization_penalty_db;
        let i_in = i_total * 10f64.powf(-loss_db / 10.0);
        let i1 = self.r_ir * i_in;
        Ok((i1, i_in - i1))
    }

    /// Applied field on each arm for push-pull drive, V/m.
    pub fn arm_fields(&self, v_app: f64) -> (f64, f64) {
        let e = v_app / self.geo.electrode_gap;
        (e, -e)
    }

    /// Index responses of the two arms implied by their current
    /// space-charge fields, scaled so that `D * f` is the arm's PE phase.
    pub fn index_responses(&self) -> (f64, f64) {
        let scale = self.mat.electro_optic_factor() * self.geo.l_eff / self.geo.arm_length;
        (scale * self.arm1.e_s, scale * self.arm2.e_s)
    }

    /// Photorefractive part of the phase difference carried by the current
    /// state, rad.
    pub fn pe_phase(&self) -> f64 {
        let k = self.geo.phase_per_field(&self.mat);
        k * (self.arm1.e_s - self.arm2.e_s)
    }

    /// Phase difference between the arms at `v_app` with the PE state held
    /// fixed (the voltage sweep is fast compared with the build-up time).
    pub fn total_phase(&self, v_app: f64) -> f64 {
        self.delta_theta0 + 2.0 * PI * v_app / self.v_pi + self.pe_phase()
    }

    /// Phase difference at a working voltage when both arms sit at
    /// saturation under that same voltage, given their irradiation-only
    /// responses `f1`, `f2`.
    pub fn saturated_total_phase(&self, v_app: f64, f1: f64, f2: f64) -> f64 {
        let c = self.geo.coeff_c(&self.mat);
        let d = self.geo.coeff_d();
        let sum = f1 + f2;
        let diff = f1 - f2;
        self.delta_theta0
            + v_app * (2.0 * PI / self.v_pi - c / self.geo.electrode_gap * sum)
            + d * diff
    }

    fn extinction_floor(&self) -> f64 {
        self.extinction_ratio_db
            .map_or(0.0, |er| 10f64.powf(-er / 10.0))
    }

    /// Output over input mean photon number for a given phase difference.
    pub fn transmittance_at_phase(&self, delta_theta: f64) -> f64 {
        let peak = 4.0 * self.r_sig * (1.0 - self.r_sig);
        let floor = self.extinction_floor();
        let c = (delta_theta / 2.0).cos();
        peak * ((1.0 - floor) * c * c + floor)
    }

    pub fn transmittance(&self, v_app: f64) -> f64 {
        self.transmittance_at_phase(self.total_phase(v_app))
    }

    pub fn output_mpn(&self, mu_in: f64, v_app: f64) -> Result<f64> {
        if !(mu_in >= 0.0 && mu_in.is_finite()) {
            return Err(Error::domain(format!(
                "input mean photon number must be >= 0, got {mu_in}"
            )));
        }
        Ok(mu_in * self.transmittance(v_app))
    }

    pub fn sample(&self, v_app: f64) -> AttenuationSample {
        let delta_theta = self.total_phase(v_app);
        let t = self.transmittance_at_phase(delta_theta);
        AttenuationSample {
            v_app,
            mu_out_per_mu_in: t,
            attenuation_db: -10.0 * t.log10(),
            delta_theta,
        }
    }

    /// Voltage curve at the current (frozen) PE state.
    pub fn voltage_curve(
        &self,
        v_min: f64,
        v_max: f64,
        n_points: usize,
    ) -> Result<Vec<AttenuationSample>> {
        Ok(voltage_grid(v_min, v_max, n_points)?
            .into_iter()
            .map(|v| self.sample(v))
            .collect())
    }

    /// Voltage curve where every point is the steady state reached under
    /// irradiation `i_total` while held at that voltage.
    pub fn saturated_voltage_curve(
        &self,
        i_total: f64,
        v_min: f64,
        v_max: f64,
        n_points: usize,
    ) -> Result<Vec<AttenuationSample>> {
        voltage_grid(v_min, v_max, n_points)?
            .into_iter()
            .map(|v| {
                let mut d = self.clone();
                d.saturate(i_total, v)?;
                Ok(d.sample(v))
            })
            .collect()
    }

    /// Ratio of the current output to `baseline_mu`, dB.
    pub fn magnification_db(&self, mu_in: f64, v_app: f64, baseline_mu: f64) -> Result<f64> {
        if !(baseline_mu > 0.0 && baseline_mu.is_finite()) {
            return Err(Error::domain(format!(
                "baseline mean photon number must be > 0, got {baseline_mu}"
            )));
        }
        Ok(10.0 * (self.output_mpn(mu_in, v_app)? / baseline_mu).log10())
    }

    /// Steady-state space-charge fields of both arms under the given drive.
    pub fn saturated_arm_fields(&self, i_total: f64, v_app: f64) -> Result<(f64, f64)> {
        let (i1, i2) = self.split_irradiation(i_total)?;
        let (e1, e2) = self.arm_fields(v_app);
        Ok((
            self.mat.saturated_field(i1, e1)?,
            self.mat.saturated_field(i2, e2)?,
        ))
    }

    /// Place both arms directly at their steady state.
    pub fn saturate(&mut self, i_total: f64, v_app: f64) -> Result<()> {
        let (t1, t2) = self.saturated_arm_fields(i_total, v_app)?;
        self.arm1.e_s = t1;
        self.arm2.e_s = t2;
        Ok(())
    }

    /// Build-up time constants of the two arms under `i_total`.
    pub fn arm_time_constants(&self, i_total: f64) -> Result<(f64, f64)> {
        let (i1, i2) = self.split_irradiation(i_total)?;
        Ok((self.mat.response_time(i1)?, self.mat.response_time(i2)?))
    }

    /// Advance both arms by `dt` under constant drive.
    pub fn step(&mut self, i_total: f64, v_app: f64, dt: f64) -> Result<()> {
        let (i1, i2) = self.split_irradiation(i_total)?;
        let (e1, e2) = self.arm_fields(v_app);
        self.arm1 = evolve_arm(self.arm1, &self.mat, i1, e1, dt, self.decay_mode)?;
        self.arm2 = evolve_arm(self.arm2, &self.mat, i2, e2, dt, self.decay_mode)?;
        Ok(())
    }

    /// Voltage of maximum attenuation inside `range`.
    ///
    /// Every local minimum of a `grid_points` scan is refined by
    /// golden-section search; the deepest wins, ties going to the one
    /// nearest the centre of the range.
    pub fn find_extinction_voltage(&self, range: (f64, f64), grid_points: usize) -> Result<f64> {
        let (lo, hi) = range;
        let grid = voltage_grid(lo, hi, grid_points.max(3))?;
        let vals: Vec<f64> = grid.iter().map(|&v| self.transmittance(v)).collect();
        let centre = 0.5 * (lo + hi);
        let step = grid[1] - grid[0];

        let mut best: Option<(f64, f64)> = None;
        for k in 0..grid.len() {
            let left = if k == 0 { f64::INFINITY } else { vals[k - 1] };
            let right = if k + 1 == grid.len() {
                f64::INFINITY
            } else {
                vals[k + 1]
            };
            if !(vals[k] <= left && vals[k] <= right) {
                continue;
            }
            let a = (grid[k] - step).max(lo);
            let b = (grid[k] + step).min(hi);
            let mut v = golden_section_min(|x| self.transmittance(x), a, b, 1e-12 * self.v_pi);
            let mut t = self.transmittance(v);
            if vals[k] < t {
                v = grid[k];
                t = vals[k];
            }
            best = match best {
                None => Some((v, t)),
                Some((bv, bt)) => {
                    let tie = (t - bt).abs() <= 1e-12 * bt.max(1e-300) + 1e-15;
                    if (tie && (v - centre).abs() < (bv - centre).abs()) || (!tie && t < bt) {
                        Some((v, t))
                    } else {
                        Some((bv, bt))
                    }
                }
            };
        }
        best.map(|(v, _)| v)
            .ok_or_else(|| Error::domain("no minimum found in the search range"))
    }
}

/// Evenly spaced voltages including both ends.
pub fn voltage_grid(v_min: f64, v_max: f64, n_points: usize) -> Result<Vec<f64>> {
    if !(v_min < v_max) || n_points < 2 {
        return Err(Error::domain(format!(
            "voltage grid needs v_min < v_max and at least 2 points, got [{v_min}, {v_max}] x {n_points}"
        )));
    }
    let step = (v_max - v_min) / (n_points - 1) as f64;
    Ok((0..n_points)
        .map(|k| {
            if k + 1 == n_points {
                v_max
            } else {
                v_min + step * k as f64
            }
        })
        .collect())
}

fn golden_section_min(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..200 {
        if (b - a).abs() <= tol {
            break;
        }
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pe_core::tests::{geometry, material};
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn device() -> MziDevice {
        MziDevice::new(material(), geometry(), 5.0, 0.0)
    }

    #[test]
    fn split_examples() {
        let mut d = device();
        assert_eq!(d.split_irradiation(0.0).unwrap(), (0.0, 0.0));
        d.r_ir = 0.5;
        let (a, b) = d.split_irradiation(4e-6).unwrap();
        assert_eq!(a, b);
        d.r_ir = 0.55;
        d.coupling_loss_ir_db = 3.01;
        let (a, b) = d.split_irradiation(4e-6).unwrap();
        assert!(((a + b) / 2e-6 - 1.0).abs() < 2e-3);
        assert_relative_eq!(a / (a + b), 0.55, max_relative = 1e-14);
        assert!(d.split_irradiation(-1.0).is_err());
    }

    #[test]
    fn phase_examples() {
        let mut d = device();
        d.delta_theta0 = 0.3;
        assert_relative_eq!(d.total_phase(d.v_pi / 2.0), 0.3 + PI, max_relative = 1e-15);

        // Equal responses cancel at zero field.
        assert_relative_eq!(d.saturated_total_phase(0.0, 2e-5, 2e-5), 0.3);
        d.arm1.e_s = 3e3;
        d.arm2.e_s = 3e3;
        assert_relative_eq!(d.total_phase(0.0), 0.3);

        // Unequal responses leave D (f1 - f2).
        let dd = d.geo.coeff_d();
        assert_relative_eq!(
            d.saturated_total_phase(0.0, 3e-5, 1e-5),
            0.3 + dd * 2e-5,
            max_relative = 1e-12
        );
        d.arm1.e_s = 5e3;
        d.arm2.e_s = 1e3;
        let (f1, f2) = d.index_responses();
        assert_relative_eq!(
            d.total_phase(0.0),
            0.3 + dd * (f1 - f2),
            max_relative = 1e-12
        );
    }

    #[test]
    fn state_phase_matches_saturated_form() {
        let base = device();
        for &i in &[1e-8, 1e-6, 5e-6, 1.2e-5] {
            for &v in &[-15.0, -2.0, 0.0, 5.8, 12.0] {
                let mut d = base.clone();
                d.saturate(i, v).unwrap();
                let (i1, i2) = d.split_irradiation(i).unwrap();
                let f1 = d.mat.f_saturated(i1).unwrap();
                let f2 = d.mat.f_saturated(i2).unwrap();
                let eq6 = d.saturated_total_phase(v, f1, f2);
                assert_relative_eq!(d.total_phase(v), eq6, max_relative = 1e-9, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn output_examples() {
        let mut d = device();
        assert!(d.transmittance_at_phase(PI).abs() < 1e-30);
        assert_relative_eq!(d.transmittance_at_phase(0.0), 1.0);
        d.r_sig = 0.4;
        assert_relative_eq!(d.transmittance_at_phase(0.0), 0.96, max_relative = 1e-15);
        assert_relative_eq!(d.output_mpn(2.0, 0.0).unwrap(), 1.92, max_relative = 1e-15);
        assert!(d.output_mpn(-1.0, 0.0).is_err());

        d.extinction_ratio_db = Some(30.0);
        d.r_sig = 0.5;
        assert_relative_eq!(d.transmittance_at_phase(PI), 1e-3, max_relative = 1e-12);
        assert_relative_eq!(d.transmittance_at_phase(0.0), 1.0);
    }

    #[test]
    fn magnification_examples() {
        let d = device();
        let base = d.output_mpn(1.0, 1.0).unwrap();
        assert_eq!(d.magnification_db(1.0, 1.0, base).unwrap(), 0.0);
        assert!(d.magnification_db(1.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn extinction_examples() {
        let d = device();
        // Delta theta0 = 0: extinction at odd multiples of v_pi / 2.
        let v0 = d.find_extinction_voltage((0.0, 2.0 * d.v_pi), 201).unwrap();
        let k = (v0 / (d.v_pi / 2.0)).round();
        assert_eq!(k as i64 % 2, 1);
        assert!((v0 - k * d.v_pi / 2.0).abs() < 1e-6 * d.v_pi);
        // Nearest the centre of the range.
        assert!((v0 - d.v_pi).abs() <= d.v_pi / 2.0 + 1e-9);

        let coarse = d.find_extinction_voltage((-3.0, 8.0), 201).unwrap();
        let fine = d.find_extinction_voltage((-3.0, 8.0), 2001).unwrap();
        assert!((coarse - fine).abs() < 1e-3 * d.v_pi);

        // A pi bias shift moves the extinction point by half a period.
        let mut shifted = d.clone();
        shifted.arm1.e_s = PI / shifted.geo.phase_per_field(&shifted.mat);
        let before = d
            .find_extinction_voltage((1.0, 1.0 + 2.0 * d.v_pi), 401)
            .unwrap();
        let after = shifted
            .find_extinction_voltage((1.0, 1.0 + 2.0 * d.v_pi), 401)
            .unwrap();
        let moved = (after - before).rem_euclid(d.v_pi);
        assert!((moved - d.v_pi / 2.0).abs() < 1e-6 * d.v_pi);

        // Transmittance at the result is no worse than any grid point.
        let t0 = d.transmittance(coarse);
        for v in voltage_grid(-3.0, 8.0, 201).unwrap() {
            assert!(t0 <= d.transmittance(v) + 1e-18);
        }
    }

    #[test]
    fn curve_shift_follows_pe_offset() {
        let d = device();
        let mut shifted = d.clone();
        let delta = 0.7;
        shifted.arm2.e_s = -delta / shifted.geo.phase_per_field(&shifted.mat);
        let a = d.find_extinction_voltage((0.0, 5.0), 501).unwrap();
        let b = shifted.find_extinction_voltage((0.0, 5.0), 501).unwrap();
        assert_relative_eq!(b - a, -delta * d.v_pi / (2.0 * PI), max_relative = 1e-6);
    }

    #[test]
    fn saturated_curve_breaks_periodicity() {
        let mut d = device();
        d.r_ir = 0.5;
        let period = 2.0 * d.v_pi;
        let i = 5e-6;
        let a = d.saturated_voltage_curve(i, 0.0, 3.0, 31).unwrap();
        let b = d
            .saturated_voltage_curve(i, period, period + 3.0, 31)
            .unwrap();
        let max_dev = a
            .iter()
            .zip(&b)
            .map(|(x, y)| (x.mu_out_per_mu_in - y.mu_out_per_mu_in).abs())
            .fold(0.0, f64::max);
        // A nonzero voltage-coupled term is detected.
        let (i1, i2) = d.split_irradiation(i).unwrap();
        let sum = d.mat.f_saturated(i1).unwrap() + d.mat.f_saturated(i2).unwrap();
        assert!(sum > 0.0);
        assert!(max_dev > 1e-3);

        // Without irradiation the saturated curve is periodic again.
        let a = d.saturated_voltage_curve(0.0, 0.0, 3.0, 31).unwrap();
        let b = d
            .saturated_voltage_curve(0.0, period, period + 3.0, 31)
            .unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!((x.mu_out_per_mu_in - y.mu_out_per_mu_in).abs() < 1e-12);
        }
    }

    #[test]
    fn irradiation_asymmetry_moves_phase() {
        let mut d = device();
        d.r_ir = 0.55;
        let before = d.total_phase(0.0);
        d.step(2e-6, 0.0, 1.0).unwrap();
        let (f1, f2) = d.index_responses();
        assert!(f1 != f2);
        assert!(d.total_phase(0.0) != before);
    }

    #[test]
    fn polarization_penalty_bounds() {
        let mut d = device();
        d.polarization_penalty_db = 0.93;
        assert!(d.validate().is_ok());
        d.polarization_penalty_db = 1.0;
        assert!(d.validate().is_err());
    }

    proptest! {
        #[test]
        fn passive_and_bounded(r in 0.01f64..0.99, e1 in -1e5f64..1e5, e2 in -1e5f64..1e5,
                               v in -50.0f64..50.0, er in proptest::option::of(5.0f64..80.0)) {
            let mut d = device();
            d.r_sig = r;
            d.extinction_ratio_db = er;
            d.arm1.e_s = e1;
            d.arm2.e_s = e2;
            let t = d.transmittance(v);
            prop_assert!(t >= 0.0);
            prop_assert!(t <= 4.0 * r * (1.0 - r) + 1e-15);
            prop_assert!(t <= 1.0);
        }

        #[test]
        fn frozen_curve_is_periodic(e1 in -1e5f64..1e5, e2 in -1e5f64..1e5, v in -20.0f64..20.0) {
            let mut d = device();
            d.arm1.e_s = e1;
            d.arm2.e_s = e2;
            let a = d.transmittance(v);
            prop_assert!((a - d.transmittance(v + 2.0 * d.v_pi)).abs() < 1e-9);
            prop_assert!((a - d.transmittance(v + d.v_pi)).abs() < 1e-9);
        }
    }
}
