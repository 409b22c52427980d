//! Attacker-side procedures: irradiation programs, pre-treatment (static
//! bias shifting), closed-loop pulse injection and device initialization.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::ln_device::MziDevice;
use crate::pe_core::DecayMode;

/// Irradiation power used to bring a device back to its reference state, W.
pub const INIT_POWER_W: f64 = 4.39e-6;
/// Saturation criterion used by [`initialize_device`].
pub const INIT_SATURATION_EPSILON: f64 = 1e-9;
/// Default cap on integration steps when waiting for saturation.
pub const DEFAULT_MAX_STEPS: usize = 10_000_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub power_w: f64,
    pub duration_s: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum IrradiationProgram {
    Segments(Vec<Segment>),
    PulseTrain {
        peak_power_w: f64,
        period_s: f64,
        pulse_width_s: f64,
        count: usize,
    },
}

impl IrradiationProgram {
    pub fn cw(power_w: f64, duration_s: f64) -> Self {
        IrradiationProgram::Segments(vec![Segment {
            power_w,
            duration_s,
        }])
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            IrradiationProgram::Segments(segs) => {
                for (k, s) in segs.iter().enumerate() {
                    if !(s.power_w >= 0.0 && s.power_w.is_finite()) {
                        return Err(Error::config(
                            format!("program.segments[{k}].power"),
                            "must be >= 0",
                        ));
                    }
                    if !(s.duration_s > 0.0 && s.duration_s.is_finite()) {
                        return Err(Error::config(
                            format!("program.segments[{k}].duration"),
                            "must be > 0",
                        ));
                    }
                }
            }
            IrradiationProgram::PulseTrain {
                peak_power_w,
                period_s,
                pulse_width_s,
                ..
            } => {
                if !(*peak_power_w >= 0.0 && peak_power_w.is_finite()) {
                    return Err(Error::config("program.peak_power", "must be >= 0"));
                }
                if !(*period_s > 0.0 && period_s.is_finite()) {
                    return Err(Error::config("program.period", "must be > 0"));
                }
                if !(*pulse_width_s > 0.0 && pulse_width_s <= period_s) {
                    return Err(Error::config(
                        "program.pulse_width",
                        "must lie in (0, period]",
                    ));
                }
            }
        }
        Ok(())
    }

    /// Constant-power pieces of the program in order.
    fn pieces(&self) -> Vec<Segment> {
        match self {
            IrradiationProgram::Segments(segs) => segs.clone(),
            IrradiationProgram::PulseTrain {
                peak_power_w,
                period_s,
                pulse_width_s,
                count,
            } => {
                let mut out = Vec::with_capacity(2 * count);
                for _ in 0..*count {
                    out.push(Segment {
                        power_w: *peak_power_w,
                        duration_s: *pulse_width_s,
                    });
                    if period_s > pulse_width_s {
                        out.push(Segment {
                            power_w: 0.0,
                            duration_s: period_s - pulse_width_s,
                        });
                    }
                }
                out
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TracePoint {
    pub t_s: f64,
    pub mu_out: f64,
    pub transmittance: f64,
    pub attenuation_db: f64,
    pub m_db: f64,
    pub delta_theta: f64,
}

fn trace_point(dev: &MziDevice, t_s: f64, mu_in: f64, v_app: f64, t_ref: f64) -> TracePoint {
    let s = dev.sample(v_app);
    TracePoint {
        t_s,
        mu_out: mu_in * s.mu_out_per_mu_in,
        transmittance: s.mu_out_per_mu_in,
        attenuation_db: s.attenuation_db,
        m_db: 10.0 * (s.mu_out_per_mu_in / t_ref).log10(),
        delta_theta: s.delta_theta,
    }
}

/// Run `program` against `dev` with the working voltage held at `v_app`,
/// sampling every `dt`. Magnification is relative to the output at `t = 0`.
pub fn run_program(
    dev: &mut MziDevice,
    program: &IrradiationProgram,
    mu_in: f64,
    v_app: f64,
    dt: f64,
) -> Result<Vec<TracePoint>> {
    program.validate()?;
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::config("attack.dt_s", "must be > 0"));
    }
    if let IrradiationProgram::PulseTrain { pulse_width_s, .. } = program {
        if dt > pulse_width_s / 4.0 {
            return Err(Error::config(
                "attack.dt_s",
                format!(
                    "must not exceed a quarter of the pulse width ({} s)",
                    pulse_width_s / 4.0
                ),
            ));
        }
    }
    if !(mu_in >= 0.0 && mu_in.is_finite()) {
        return Err(Error::domain("input mean photon number must be >= 0"));
    }
    let t_ref = dev.transmittance(v_app);
    if !(t_ref > 0.0) {
        return Err(Error::domain(
            "initial transmittance is zero; magnification is undefined",
        ));
    }
    let mut t = 0.0;
    let mut out = vec![trace_point(dev, t, mu_in, v_app, t_ref)];
    for piece in program.pieces() {
        let n = (piece.duration_s / dt).ceil().max(1.0) as usize;
        let h = piece.duration_s / n as f64;
        for _ in 0..n {
            dev.step(piece.power_w, v_app, h)?;
            t += h;
            out.push(trace_point(dev, t, mu_in, v_app, t_ref));
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PreTreatmentPlan {
    pub v_app: f64,
    pub i_ir: f64,
    /// Relative change of the space-charge field per build-up time below
    /// which the device counts as saturated.
    pub saturation_epsilon: f64,
}

impl PreTreatmentPlan {
    pub fn validate(&self) -> Result<()> {
        if !self.v_app.is_finite() {
            return Err(Error::config("attack.pre_treat.v_app_v", "must be finite"));
        }
        if !(self.i_ir >= 0.0 && self.i_ir.is_finite()) {
            return Err(Error::config("attack.pre_treat.i_ir_w", "must be >= 0"));
        }
        if !(self.saturation_epsilon > 0.0 && self.saturation_epsilon < 0.1) {
            return Err(Error::config(
                "attack.pre_treat.saturation_epsilon",
                "must lie in (0, 0.1)",
            ));
        }
        Ok(())
    }
}

/// Irradiate at constant drive until both arms are saturated.
///
/// Saturation is checked once per build-up time: the run stops when the
/// relative change of each arm's field over that window is below
/// `epsilon`.
pub fn saturate_by_stepping(
    dev: &mut MziDevice,
    i_total: f64,
    v_app: f64,
    dt: f64,
    epsilon: f64,
    max_steps: usize,
) -> Result<()> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::config("attack.dt_s", "must be > 0"));
    }
    let (tau1, tau2) = dev.arm_time_constants(i_total)?;
    let window = tau1.max(tau2);
    let steps_per_window = (window / dt).ceil().max(1.0) as usize;
    let h = window / steps_per_window as f64;
    let start = dev.arm1.t_elapsed;
    let mut steps = 0usize;
    loop {
        let (a, b) = (dev.arm1.e_s, dev.arm2.e_s);
        for _ in 0..steps_per_window {
            if steps >= max_steps {
                return Err(Error::NotSaturated {
                    elapsed_s: dev.arm1.t_elapsed - start,
                    partial: Box::new(dev.clone()),
                });
            }
            dev.step(i_total, v_app, h)?;
            steps += 1;
        }
        let settled =
            |old: f64, new: f64| (new - old).abs() <= epsilon * new.abs().max(f64::MIN_POSITIVE);
        if settled(a, dev.arm1.e_s) && settled(b, dev.arm2.e_s) {
            return Ok(());
        }
    }
}

/// Shift the static bias: saturate under (`i_ir`, `v_app`), then switch
/// both off and freeze the state.
pub fn pre_treat(
    dev: &MziDevice,
    plan: &PreTreatmentPlan,
    dt: f64,
    max_steps: usize,
) -> Result<MziDevice> {
    plan.validate()?;
    let mut out = dev.clone();
    out.decay_mode = DecayMode::Frozen;
    if plan.i_ir == 0.0 {
        return Ok(out);
    }
    saturate_by_stepping(
        &mut out,
        plan.i_ir,
        plan.v_app,
        dt,
        plan.saturation_epsilon,
        max_steps,
    )?;
    Ok(out)
}

/// Bring a device back to the reference state by saturating it at
/// [`INIT_POWER_W`] with no applied field.
pub fn initialize_device(dev: &MziDevice, dt: f64) -> Result<MziDevice> {
    let plan = PreTreatmentPlan {
        v_app: 0.0,
        i_ir: INIT_POWER_W,
        saturation_epsilon: INIT_SATURATION_EPSILON,
    };
    pre_treat(dev, &plan, dt, DEFAULT_MAX_STEPS)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PulseController {
    pub target_m_db: f64,
    pub duty_min: f64,
    pub duty_max: f64,
    /// Fraction of the remaining error aimed for in one period.
    pub gain: f64,
    /// Largest factor by which the duty cycle may grow from one period to
    /// the next.
    pub max_duty_growth: f64,
    pub settle_tol_db: f64,
    pub period_s: f64,
    pub peak_power_w: f64,
    /// Periods to keep regulating after the settle condition is met.
    pub hold_periods: usize,
    /// Standard deviation of Gaussian noise added to each measurement, dB.
    pub noise_sigma_db: f64,
    pub seed: u64,
}

impl Default for PulseController {
    fn default() -> Self {
        Self {
            target_m_db: 0.0,
            duty_min: 1e-5,
            duty_max: 1.0,
            gain: 0.3,
            max_duty_growth: 3.0,
            settle_tol_db: 0.2,
            period_s: 10.0,
            peak_power_w: 12e-6,
            hold_periods: 50,
            noise_sigma_db: 0.0,
            seed: 0,
        }
    }
}

impl PulseController {
    pub fn validate(&self) -> Result<()> {
        if !self.target_m_db.is_finite() {
            return Err(Error::config("attack.pulse.target_m_db", "must be finite"));
        }
        if !(self.duty_min > 0.0 && self.duty_min <= 1.0) {
            return Err(Error::config("attack.pulse.duty_min", "must lie in (0, 1]"));
        }
        if !(self.duty_max > 0.0 && self.duty_max <= 1.0) {
            return Err(Error::config("attack.pulse.duty_max", "must lie in (0, 1]"));
        }
        if self.duty_min >= self.duty_max {
            return Err(Error::config(
                "attack.pulse.duty_min",
                "must be below duty_max",
            ));
        }
        if !(self.gain > 0.0 && self.gain <= 1.0) {
            return Err(Error::config("attack.pulse.gain", "must lie in (0, 1]"));
        }
        if !(self.max_duty_growth > 1.0 && self.max_duty_growth.is_finite()) {
            return Err(Error::config("attack.pulse.max_duty_growth", "must be > 1"));
        }
        if !(self.settle_tol_db > 0.0 && self.settle_tol_db.is_finite()) {
            return Err(Error::config(
                "attack.pulse.settle_tol_db",
                "must be > 0 dB",
            ));
        }
        if !(self.period_s > 0.0 && self.period_s.is_finite()) {
            return Err(Error::config("attack.pulse.period_s", "must be > 0"));
        }
        if !(self.peak_power_w > 0.0 && self.peak_power_w.is_finite()) {
            return Err(Error::config("attack.pulse.peak_power_w", "must be > 0"));
        }
        if !(self.noise_sigma_db >= 0.0 && self.noise_sigma_db.is_finite()) {
            return Err(Error::config(
                "attack.pulse.noise_sigma_db",
                "must be >= 0 dB",
            ));
        }
        Ok(())
    }
}

/// One controller period.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PulseRow {
    /// End of the period, s.
    pub t_s: f64,
    pub duty: f64,
    /// Mean irradiation power over the period, W.
    pub power_w: f64,
    /// Magnification at the end of the period, dB.
    pub m_db: f64,
    pub error_db: f64,
}

#[derive(Debug, Clone)]
pub struct PulseOutcome {
    pub trace: Vec<PulseRow>,
    pub final_duty: f64,
    /// Index of the period that completed the settle condition.
    pub settled_at: Option<usize>,
    /// Saturated magnification under CW irradiation at the peak power.
    pub reachable_m_db: f64,
    pub device: MziDevice,
}

impl PulseOutcome {
    pub fn settled(&self) -> bool {
        self.settled_at.is_some()
    }
}

/// Consecutive in-tolerance periods that count as settled.
pub const SETTLE_PERIODS: usize = 5;

/// Duty cycle for the next period. `response` is the most recent
/// `(duty, change of M per unit duty)` observed with a positive change.
fn next_duty(ctrl: &PulseController, error: f64, prev: f64, response: Option<(f64, f64)>) -> f64 {
    if error <= 0.0 {
        return ctrl.duty_min;
    }
    let wanted = match response {
        Some((d_ref, slope)) => (ctrl.gain * error / slope).min(d_ref * ctrl.max_duty_growth),
        None => prev * ctrl.max_duty_growth,
    };
    wanted.clamp(ctrl.duty_min, ctrl.duty_max)
}

/// Drive the magnification to `ctrl.target_m_db` with one pulse per period.
///
/// The duty cycle is proportional to the remaining error, with the gain
/// rescaled by the measured response: the change of M per unit duty in the
/// latest period where M rose. Each period aims for `gain` of the error.
/// The duty cycle never exceeds `max_duty_growth` times the duty of that
/// period and stays within `[duty_min, duty_max]`. The run stops `hold_periods` after the settle
/// condition or at `max_periods`.
pub fn pulse_inject_to_target(
    dev: &MziDevice,
    ctrl: &PulseController,
    mu_in: f64,
    v_app: f64,
    max_periods: usize,
) -> Result<PulseOutcome> {
    ctrl.validate()?;
    if !(mu_in > 0.0 && mu_in.is_finite()) {
        return Err(Error::domain("input mean photon number must be > 0"));
    }
    let t_ref = dev.transmittance(v_app);
    if !(t_ref > 0.0) {
        return Err(Error::domain(
            "initial transmittance is zero; magnification is undefined",
        ));
    }
    let m_of = |d: &MziDevice| 10.0 * (d.transmittance(v_app) / t_ref).log10();

    let reachable_m_db = {
        let mut dry = dev.clone();
        dry.saturate(ctrl.peak_power_w, v_app)?;
        m_of(&dry)
    };
    if ctrl.target_m_db.abs() > reachable_m_db.max(0.0) {
        return Err(Error::Infeasible {
            target_m_db: ctrl.target_m_db,
            reachable_m_db,
        });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(ctrl.seed);
    let noise = Normal::new(0.0, ctrl.noise_sigma_db).map_err(|e| Error::domain(e.to_string()))?;
    let mut measure = |d: &MziDevice| {
        let m = m_of(d);
        if ctrl.noise_sigma_db > 0.0 {
            m + noise.sample(&mut rng)
        } else {
            m
        }
    };

    let mut d = dev.clone();
    let mut trace = Vec::new();
    let mut t = 0.0;
    let mut streak = 0usize;
    let mut settled_at = None;
    let mut duty = ctrl.duty_min;
    let mut measured = measure(&d);
    let mut response: Option<(f64, f64)> = None;
    for k in 0..max_periods {
        let error = ctrl.target_m_db - measured;
        duty = next_duty(ctrl, error, duty, response);
        let on = duty * ctrl.period_s;
        d.step(ctrl.peak_power_w, v_app, on)?;
        if ctrl.period_s > on {
            d.step(0.0, v_app, ctrl.period_s - on)?;
        }
        t += ctrl.period_s;
        let previous = measured;
        measured = measure(&d);
        if measured > previous {
            response = Some((duty, (measured - previous) / duty));
        }
        let err_after = ctrl.target_m_db - measured;
        trace.push(PulseRow {
            t_s: t,
            duty,
            power_w: duty * ctrl.peak_power_w,
            m_db: m_of(&d),
            error_db: err_after,
        });
        match settled_at {
            None => {
                streak = if err_after.abs() <= ctrl.settle_tol_db {
                    streak + 1
                } else {
                    0
                };
                if streak >= SETTLE_PERIODS {
                    settled_at = Some(k);
                    if ctrl.hold_periods == 0 {
                        break;
                    }
                }
            }
            Some(s) if k - s >= ctrl.hold_periods => break,
            Some(_) => {}
        }
    }
    Ok(PulseOutcome {
        trace,
        final_duty: duty,
        settled_at,
        reachable_m_db,
        device: d,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calibration::default_device;

    #[test]
    fn zero_power_is_flat() {
        let mut d = default_device();
        let tr = run_program(&mut d, &IrradiationProgram::cw(0.0, 100.0), 1.0, 5.8, 1.0).unwrap();
        assert!(tr.iter().all(|p| p.m_db == 0.0));
    }

    #[test]
    fn coarse_dt_rejected_for_pulses() {
        let mut d = default_device();
        let prog = IrradiationProgram::PulseTrain {
            peak_power_w: 1e-6,
            period_s: 10.0,
            pulse_width_s: 1.0,
            count: 3,
        };
        assert!(matches!(
            run_program(&mut d, &prog, 1.0, 5.8, 0.5),
            Err(Error::Config { .. })
        ));
        assert!(run_program(&mut d, &prog, 1.0, 5.8, 0.25).is_ok());
    }

    #[test]
    fn pre_treat_without_light_is_identity() {
        let d = default_device();
        let plan = PreTreatmentPlan {
            v_app: 10.0,
            i_ir: 0.0,
            saturation_epsilon: 1e-6,
        };
        assert_eq!(pre_treat(&d, &plan, 1.0, 1000).unwrap(), d);
    }

    #[test]
    fn step_budget_reports_partial_state() {
        let d = default_device();
        let plan = PreTreatmentPlan {
            v_app: 10.0,
            i_ir: 12e-6,
            saturation_epsilon: 1e-6,
        };
        match pre_treat(&d, &plan, 1.0, 5) {
            Err(Error::NotSaturated { elapsed_s, partial }) => {
                assert!((elapsed_s - 5.0).abs() < 1.0);
                assert!(partial.arm1.e_s != 0.0);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unreachable_target_is_reported() {
        let d = default_device();
        let ctrl = PulseController {
            target_m_db: 80.0,
            ..Default::default()
        };
        assert!(matches!(
            pulse_inject_to_target(&d, &ctrl, 1.0, 5.8, 100),
            Err(Error::Infeasible { .. })
        ));
    }
}
