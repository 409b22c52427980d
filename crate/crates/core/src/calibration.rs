//! Default device parameters fitted to behavioural anchors.
//!
//! The material constants of a commercial attenuator are not published, so
//! the default device is built from a few chosen design quantities plus two
//! fitted ones:
//!
//! * the saturation coefficient `B` places the peak of the saturated
//!   magnification at `anchors.peak_power_w`;
//! * the interferometer extinction ratio makes the saturated magnification
//!   at `anchors.low_power_w` equal `anchors.low_power_m_db`.
//!
//! The peak position only depends on `B` through `x = B * coupling * power`,
//! so `B` follows from a one-dimensional search; the rest is closed form.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::ln_device::MziDevice;
use crate::pe_core::{DecayMode, GeometryParams, MaterialParams, VACUUM_PERMITTIVITY};

#[derive(Debug, Clone, PartialEq)]
pub struct Anchors {
    /// Working voltage of maximum attenuation of the pristine device, V.
    pub v0: f64,
    /// Irradiation power at which the saturated magnification peaks, W.
    pub peak_power_w: f64,
    /// A low irradiation power with a known saturated magnification, W.
    pub low_power_w: f64,
    pub low_power_m_db: f64,
}

impl Default for Anchors {
    fn default() -> Self {
        Self {
            v0: 5.8,
            peak_power_w: 6.26e-6,
            low_power_w: 3e-9,
            low_power_m_db: 8.3,
        }
    }
}

/// Design choices that the anchors cannot pin down.
#[derive(Debug, Clone, PartialEq)]
pub struct Design {
    pub v_pi: f64,
    pub r_sig: f64,
    pub r_ir: f64,
    pub coupling_loss_ir_db: f64,
    /// Phase per volt of the field-coupled term at full photoconductive
    /// screening, rad/V.
    pub field_phase_per_volt: f64,
    /// Ratio of the irradiation-only phase scale to the field term at `v0`.
    pub drift_to_field_ratio: f64,
    pub n: f64,
    pub r33: f64,
    pub gamma: f64,
    pub eps_r: f64,
    pub sigma_d: f64,
    pub alpha_abs: f64,
    pub m_exp: u32,
    pub i_crossover: f64,
    pub length: f64,
    pub lambda_signal: f64,
    pub lambda_irradiation: f64,
}

impl Default for Design {
    fn default() -> Self {
        Self {
            v_pi: 5.0,
            r_sig: 0.5,
            r_ir: 0.45,
            coupling_loss_ir_db: 3.0,
            field_phase_per_volt: 0.15,
            drift_to_field_ratio: 20.0,
            n: 2.138,
            r33: 30.8e-12,
            gamma: 0.5,
            eps_r: 28.0,
            sigma_d: 1e-13,
            alpha_abs: 100.0,
            m_exp: 2,
            i_crossover: 7e-6,
            length: 0.02,
            lambda_signal: 1550.0 / 1e9,
            lambda_irradiation: 405.0 / 1e9,
        }
    }
}

/// Fitted device plus the residuals of the fit.
#[derive(Debug, Clone)]
pub struct Calibration {
    pub device: MziDevice,
    pub anchors: Anchors,
    pub coeff_b: f64,
    pub extinction_ratio_db: f64,
    /// Saturated magnification at the low-power anchor, dB.
    pub low_power_m_db: f64,
    /// Power of the saturated-magnification maximum found on the device
    /// within the low-intensity regime, W.
    pub peak_power_w: f64,
    pub peak_m_db: f64,
}

/// Photorefractive phase at `v0` in units of the field term, as a function
/// of the normalised power `x = B c P`.
fn normalised_phase(x: f64, r_ir: f64, ratio: f64) -> f64 {
    let h = |u: f64| u / (1.0 + u);
    let (h1, h2) = (h(r_ir * x), h((1.0 - r_ir) * x));
    -(h1 + h2) + ratio * (h1 - h2)
}

pub fn calibrate(anchors: &Anchors, design: &Design) -> Result<Calibration> {
    if !(anchors.peak_power_w > anchors.low_power_w && anchors.low_power_w > 0.0) {
        return Err(Error::config(
            "calibration.peak_power",
            "must exceed the low-power anchor",
        ));
    }
    if !(anchors.low_power_m_db > 0.0) {
        return Err(Error::config("calibration.low_power_m", "must be > 0 dB"));
    }
    let coupling = 10f64.powf(-design.coupling_loss_ir_db / 10.0);

    // Maximise |phase| over log x.
    let obj = |lx: f64| -normalised_phase(lx.exp(), design.r_ir, design.drift_to_field_ratio).abs();
    let lx_peak = golden(obj, (1e-3f64).ln(), (1e3f64).ln());
    let coeff_b = lx_peak.exp() / (coupling * anchors.peak_power_w);

    let p_field = design.field_phase_per_volt;
    let p_drift = design.drift_to_field_ratio * p_field * anchors.v0;

    let eo = design.n.powi(3) * design.r33 * design.gamma / 2.0;
    let k_phase = 2.0 * PI * design.length * eo / design.lambda_signal;
    let electrode_gap = k_phase / p_field;
    // p_drift = k_phase * kappa * alpha / (sigma_d * B)
    let kappa = p_drift * design.sigma_d * coeff_b / (k_phase * design.alpha_abs);
    let a_const = coeff_b * design.sigma_d / design.alpha_abs;

    let mat = MaterialParams {
        n: design.n,
        r33: design.r33,
        gamma: design.gamma,
        kappa,
        alpha_abs: design.alpha_abs,
        sigma_d: design.sigma_d,
        a_const,
        eps_r: design.eps_r,
        eps_0: VACUUM_PERMITTIVITY,
        m_exp: design.m_exp,
        i_crossover: design.i_crossover,
    };
    let geo = GeometryParams {
        arm_length: design.length,
        electrode_length: design.length,
        electrode_gap,
        lambda_signal: design.lambda_signal,
        lambda_irradiation: design.lambda_irradiation,
        l_eff: design.length,
    };
    let delta_theta0 = (PI - 2.0 * PI * anchors.v0 / design.v_pi).rem_euclid(2.0 * PI);
    let mut device = MziDevice::new(mat, geo, design.v_pi, delta_theta0);
    device.r_sig = design.r_sig;
    device.r_ir = design.r_ir;
    device.coupling_loss_ir_db = design.coupling_loss_ir_db;
    device.decay_mode = DecayMode::Frozen;
    device.validate()?;

    // Extinction floor from the low-power anchor: M = (eps + (1-eps) s) / eps.
    let phi_low = {
        let mut d = device.clone();
        d.saturate(anchors.low_power_w, anchors.v0)?;
        d.total_phase(anchors.v0) - PI
    };
    let s = (phi_low / 2.0).sin().powi(2);
    let m_lin = 10f64.powf(anchors.low_power_m_db / 10.0);
    let eps = s / (m_lin - 1.0 + s);
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::domain(
            "low-power anchor cannot be met with this design",
        ));
    }
    let extinction_ratio_db = -10.0 * eps.log10();
    device.extinction_ratio_db = Some(extinction_ratio_db);

    let low_power_m_db = saturated_magnification_db(&device, anchors.low_power_w, anchors.v0)?;
    let upper = low_regime_limit_w(&device).min(anchors.peak_power_w * 20.0);
    let lp = golden(
        |lp| {
            -saturated_magnification_db(&device, lp.exp(), anchors.v0).unwrap_or(f64::NEG_INFINITY)
        },
        (anchors.peak_power_w / 20.0).ln(),
        upper.ln(),
    );
    let peak_power_w = lp.exp();
    let peak_m_db = saturated_magnification_db(&device, peak_power_w, anchors.v0)?;

    Ok(Calibration {
        device,
        anchors: anchors.clone(),
        coeff_b,
        extinction_ratio_db,
        low_power_m_db,
        peak_power_w,
        peak_m_db,
    })
}

/// Device with the default design fitted to the default anchors.
pub fn default_device() -> MziDevice {
    calibrate(&Anchors::default(), &Design::default())
        .expect("default calibration is valid")
        .device
}

/// Largest total irradiation power for which both arms stay in the
/// low-intensity photoconductivity regime, W.
pub fn low_regime_limit_w(device: &MziDevice) -> f64 {
    let coupling =
        10f64.powf(-(device.coupling_loss_ir_db + device.polarization_penalty_db) / 10.0);
    device.mat.i_crossover / (coupling * device.r_ir.max(1.0 - device.r_ir))
}

/// Saturated magnification of a pristine device irradiated at `v_app`,
/// relative to the pristine output at the same voltage.
pub fn saturated_magnification_db(pristine: &MziDevice, i_total: f64, v_app: f64) -> Result<f64> {
    let base = pristine.transmittance(v_app);
    let mut d = pristine.clone();
    d.saturate(i_total, v_app)?;
    Ok(10.0 * (d.transmittance(v_app) / base).log10())
}

fn golden(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while (b - a).abs() > 1e-12 * (1.0 + a.abs().max(b.abs())) {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}
