//! Fit the default device and print the fitted parameters and residuals.

use ipa_sim::calibration::{calibrate, low_regime_limit_w, Anchors, Design};

fn main() -> ipa_sim::Result<()> {
    let anchors = Anchors::default();
    let cal = calibrate(&anchors, &Design::default())?;
    let d = &cal.device;
    println!("electrode gap      {:.4e} m", d.geo.electrode_gap);
    println!("kappa              {:.4e}", d.mat.kappa);
    println!("a                  {:.4e}", d.mat.a_const);
    println!("B                  {:.4e} 1/W", cal.coeff_b);
    println!("delta_theta0       {:.6} rad", d.delta_theta0);
    println!("extinction ratio   {:.3} dB", cal.extinction_ratio_db);
    println!("low-regime limit   {:.3e} W", low_regime_limit_w(d));
    println!();
    println!(
        "M at {:.1e} W: {:.6} dB (anchor {} dB)",
        anchors.low_power_w, cal.low_power_m_db, anchors.low_power_m_db
    );
    println!(
        "peak at {:.4e} W: {:.4} dB (anchor {:.4e} W, residual {:.2e})",
        cal.peak_power_w,
        cal.peak_m_db,
        anchors.peak_power_w,
        cal.peak_power_w / anchors.peak_power_w - 1.0
    );
    println!(
        "extinction voltage {:.6} V (anchor {} V)",
        d.find_extinction_voltage((0.0, 15.0), 301)?,
        anchors.v0
    );
    Ok(())
}
