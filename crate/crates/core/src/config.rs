//! Scenario configuration.
//!
//! A config is a TOML file of sections whose keys carry their units. Every
//! key is optional; missing keys take the value of the calibrated default
//! device and the documented run defaults. Unknown keys are rejected.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::attack::{PreTreatmentPlan, PulseController, DEFAULT_MAX_STEPS};
use crate::calibration::default_device;
use crate::error::{Error, Result};
use crate::ln_device::MziDevice;
use crate::loss_budget::{ComponentDb, InjectionPath, RawComponent};
use crate::pe_core::{DecayMode, GeometryParams, MaterialParams, VACUUM_PERMITTIVITY};
use crate::qkd::{Estimation, QkdScenario};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MaterialSection {
    pub n: f64,
    pub r33_m_per_v: f64,
    pub gamma: f64,
    pub kappa: f64,
    pub alpha_abs_per_m: f64,
    pub sigma_d_s_per_m: f64,
    pub a_const: f64,
    pub eps_r: f64,
    pub m_exp: u32,
    pub i_crossover_w: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GeometrySection {
    pub arm_length_m: f64,
    pub electrode_length_m: f64,
    pub electrode_gap_m: f64,
    pub lambda_signal_nm: f64,
    pub lambda_irradiation_nm: f64,
    pub l_eff_m: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DeviceSection {
    pub delta_theta0_rad: f64,
    pub v_pi_v: f64,
    pub r_sig: f64,
    pub r_ir: f64,
    pub coupling_loss_ir_db: f64,
    pub polarization_penalty_db: f64,
    /// Finite extinction ratio; `0` selects ideal interference.
    pub extinction_ratio_db: f64,
    pub decay_mode: DecayMode,
    /// Working voltage the attacks operate at.
    pub working_voltage_v: f64,
}

impl Default for MaterialSection {
    fn default() -> Self {
        let m = default_device().mat;
        Self {
            n: m.n,
            r33_m_per_v: m.r33,
            gamma: m.gamma,
            kappa: m.kappa,
            alpha_abs_per_m: m.alpha_abs,
            sigma_d_s_per_m: m.sigma_d,
            a_const: m.a_const,
            eps_r: m.eps_r,
            m_exp: m.m_exp,
            i_crossover_w: m.i_crossover,
        }
    }
}

fn to_nm(m: f64) -> f64 {
    (m * 1e15).round() / 1e6
}

impl Default for GeometrySection {
    fn default() -> Self {
        let g = default_device().geo;
        Self {
            arm_length_m: g.arm_length,
            electrode_length_m: g.electrode_length,
            electrode_gap_m: g.electrode_gap,
            lambda_signal_nm: to_nm(g.lambda_signal),
            lambda_irradiation_nm: to_nm(g.lambda_irradiation),
            l_eff_m: g.l_eff,
        }
    }
}

impl Default for DeviceSection {
    fn default() -> Self {
        let d = default_device();
        Self {
            delta_theta0_rad: d.delta_theta0,
            v_pi_v: d.v_pi,
            r_sig: d.r_sig,
            r_ir: d.r_ir,
            coupling_loss_ir_db: d.coupling_loss_ir_db,
            polarization_penalty_db: d.polarization_penalty_db,
            extinction_ratio_db: d.extinction_ratio_db.unwrap_or(0.0),
            decay_mode: d.decay_mode,
            working_voltage_v: 5.8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PeCurveSection {
    pub powers_w: Vec<f64>,
    pub duration_s: f64,
    pub dt_s: f64,
    pub mu_in: f64,
}

impl Default for PeCurveSection {
    fn default() -> Self {
        Self {
            powers_w: vec![
                0.0, 3e-9, 1e-8, 1e-7, 5e-7, 1e-6, 2e-6, 3e-6, 4.39e-6, 5e-6, 6.26e-6, 8e-6, 1e-5,
                1.2e-5, 1.5e-5, 2e-5,
            ],
            duration_s: 12_000.0,
            dt_s: 20.0,
            mu_in: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum CurveMode {
    /// Fast sweep over a fixed photorefractive state.
    #[default]
    Frozen,
    /// Every point at its own steady state under irradiation.
    Saturated,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlanEntry {
    pub v_app_v: f64,
    pub i_ir_w: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VoltageCurveSection {
    pub v_min_v: f64,
    pub v_max_v: f64,
    pub points: usize,
    pub mode: CurveMode,
    /// Irradiation of the saturated-mode curve, W.
    pub saturated_power_w: f64,
    /// Each entry yields one curve, pre-treated from the pristine device.
    pub pre_treatments: Vec<PlanEntry>,
}

impl Default for VoltageCurveSection {
    fn default() -> Self {
        Self {
            v_min_v: 0.0,
            v_max_v: 15.0,
            points: 301,
            mode: CurveMode::Frozen,
            saturated_power_w: 12e-6,
            pre_treatments: [-15.0, -10.0, -5.0, 0.0, 5.0, 10.0, 15.0]
                .iter()
                .map(|&v| PlanEntry {
                    v_app_v: v,
                    i_ir_w: 12e-6,
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PreTreatSection {
    pub v_app_v: f64,
    pub i_ir_w: f64,
    pub saturation_epsilon: f64,
}

impl Default for PreTreatSection {
    fn default() -> Self {
        Self {
            v_app_v: 15.0,
            i_ir_w: 12e-6,
            saturation_epsilon: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PulseSection {
    /// Explicit target; when absent the target is `target_fraction` of the
    /// saturated magnification at the peak power.
    pub target_m_db: Option<f64>,
    pub target_fraction: f64,
    pub duty_min: f64,
    pub duty_max: f64,
    /// Fraction of the remaining error aimed for per period.
    pub gain: f64,
    pub max_duty_growth: f64,
    pub settle_tol_db: f64,
    pub period_s: f64,
    pub peak_power_w: f64,
    pub hold_periods: usize,
    pub noise_sigma_db: f64,
    pub max_periods: usize,
}

impl Default for PulseSection {
    fn default() -> Self {
        let c = PulseController::default();
        Self {
            target_m_db: None,
            target_fraction: 0.9,
            duty_min: c.duty_min,
            duty_max: c.duty_max,
            gain: c.gain,
            max_duty_growth: c.max_duty_growth,
            settle_tol_db: c.settle_tol_db,
            period_s: c.period_s,
            peak_power_w: c.peak_power_w,
            hold_periods: c.hold_periods,
            noise_sigma_db: c.noise_sigma_db,
            max_periods: 2000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InitSection {
    /// Apply `attack.pre_treat` before initializing.
    pub pre_treat_first: bool,
}

impl Default for InitSection {
    fn default() -> Self {
        Self {
            pre_treat_first: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AttackSection {
    pub dt_s: f64,
    pub mu_in: f64,
    pub max_steps: usize,
    pub pre_treat: PreTreatSection,
    pub pulse: PulseSection,
    pub init: InitSection,
}

impl Default for AttackSection {
    fn default() -> Self {
        Self {
            dt_s: 10.0,
            mu_in: 1.0,
            max_steps: DEFAULT_MAX_STEPS,
            pre_treat: PreTreatSection::default(),
            pulse: PulseSection::default(),
            init: InitSection::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct QkdSection {
    pub mu: f64,
    pub nu: f64,
    pub alpha_fiber_db_per_km: f64,
    pub eta_b: f64,
    pub y0: f64,
    pub e_det: f64,
    pub e0: f64,
    pub f_ec: f64,
    pub n_trunc: usize,
    pub estimation: Estimation,
}

impl Default for QkdSection {
    fn default() -> Self {
        let q = QkdScenario::default();
        Self {
            mu: q.mu,
            nu: q.nu,
            alpha_fiber_db_per_km: q.alpha_fiber,
            eta_b: q.eta_b,
            y0: q.y0,
            e_det: q.e_det,
            e0: q.e0,
            f_ec: q.f_ec,
            n_trunc: q.n_trunc,
            estimation: q.estimation,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SecuritySection {
    pub m_db: Vec<f64>,
    pub distance_max_km: f64,
    pub distance_step_km: f64,
    pub threshold_min_db: f64,
    pub threshold_max_db: f64,
    pub threshold_tol_db: f64,
}

impl Default for SecuritySection {
    fn default() -> Self {
        Self {
            m_db: vec![0.0, 1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 6.5, 7.0, 8.0, 8.3],
            distance_max_km: 150.0,
            distance_step_km: 1.0,
            threshold_min_db: 0.0,
            threshold_max_db: 15.0,
            threshold_tol_db: 1e-3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PathEntry {
    pub name: String,
    #[serde(default = "default_fiber")]
    pub fiber: String,
    #[serde(default)]
    pub fiber_length_km: f64,
    #[serde(default)]
    pub components: Vec<String>,
}

fn default_fiber() -> String {
    "smf_g652d".into()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BudgetSection {
    pub wavelength_nm: u32,
    pub target_power_w: f64,
    pub eve_max_power_w: f64,
    pub paths: Vec<PathEntry>,
    /// Extra components, same schema as the shipped database.
    pub components: BTreeMap<String, RawComponent>,
}

impl Default for BudgetSection {
    fn default() -> Self {
        let path = |name: &str, comps: &[&str]| PathEntry {
            name: name.into(),
            fiber: default_fiber(),
            fiber_length_km: 1.0,
            components: comps.iter().map(|c| c.to_string()).collect(),
        };
        Self {
            wavelength_nm: 405,
            target_power_w: 3e-9,
            eve_max_power_w: 20e-3,
            paths: vec![
                PathEntry {
                    name: "direct".into(),
                    fiber: default_fiber(),
                    fiber_length_km: 0.0,
                    components: vec![],
                },
                path("fiber_1km", &[]),
                path("dwdm_c33", &["dwdm_c33"]),
                path("dwdm_c35", &["dwdm_c35"]),
                path("isolator", &["isolator"]),
                path("circulator", &["circulator"]),
                path("three_isolators", &["isolator", "isolator", "isolator"]),
            ],
            components: BTreeMap::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    /// Also render SVG plots next to the CSV files.
    pub svg: bool,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self { svg: true }
    }
}

/// Fully resolved scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct ScenarioConfig {
    pub material: MaterialSection,
    pub geometry: GeometrySection,
    pub device: DeviceSection,
    pub pe_curve: PeCurveSection,
    pub voltage_curve: VoltageCurveSection,
    pub attack: AttackSection,
    pub qkd: QkdSection,
    pub security: SecuritySection,
    pub budget: BudgetSection,
    pub output: OutputSection,
}

fn positive(key: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::config(
            key,
            format!("must be finite and > 0, got {v}"),
        ))
    }
}

impl ScenarioConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: ScenarioConfig = toml::from_str(text).map_err(|e| {
            let key = e
                .span()
                .map(|s| format!("byte {}..{}", s.start, s.end))
                .unwrap_or_else(|| "config".into());
            Error::config(key, e.message().to_string())
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml(&text)
    }

    /// Check every section; nothing runs unless the whole config passes.
    pub fn validate(&self) -> Result<()> {
        self.device()?;
        let v = &self.voltage_curve;
        if !(v.v_min_v < v.v_max_v && v.v_min_v.is_finite() && v.v_max_v.is_finite()) {
            return Err(Error::config(
                "voltage_curve.v_max_v",
                "must exceed v_min_v",
            ));
        }
        if v.points < 2 {
            return Err(Error::config(
                "voltage_curve.points",
                "need at least 2 points",
            ));
        }
        if !(v.saturated_power_w >= 0.0 && v.saturated_power_w.is_finite()) {
            return Err(Error::config(
                "voltage_curve.saturated_power_w",
                "must be >= 0",
            ));
        }
        for (k, p) in v.pre_treatments.iter().enumerate() {
            self.plan(
                p.v_app_v,
                p.i_ir_w,
                &format!("voltage_curve.pre_treatments[{k}]"),
            )?;
        }

        let pe = &self.pe_curve;
        if pe.powers_w.is_empty() {
            return Err(Error::config(
                "pe_curve.powers_w",
                "need at least one power",
            ));
        }
        for (k, &p) in pe.powers_w.iter().enumerate() {
            if !(p >= 0.0 && p.is_finite()) {
                return Err(Error::config(
                    format!("pe_curve.powers_w[{k}]"),
                    "must be >= 0",
                ));
            }
        }
        positive("pe_curve.duration_s", pe.duration_s)?;
        positive("pe_curve.dt_s", pe.dt_s)?;
        positive("pe_curve.mu_in", pe.mu_in)?;

        let a = &self.attack;
        positive("attack.dt_s", a.dt_s)?;
        positive("attack.mu_in", a.mu_in)?;
        if a.max_steps == 0 {
            return Err(Error::config("attack.max_steps", "must be > 0"));
        }
        self.pre_treatment_plan()?.validate()?;
        let p = &a.pulse;
        if !(p.target_fraction > 0.0 && p.target_fraction <= 1.0) {
            return Err(Error::config(
                "attack.pulse.target_fraction",
                "must lie in (0, 1]",
            ));
        }
        if p.max_periods == 0 {
            return Err(Error::config("attack.pulse.max_periods", "must be > 0"));
        }
        self.pulse_controller(p.target_m_db.unwrap_or(0.0), 0)?
            .validate()?;

        self.qkd_scenario().validate()?;
        let s = &self.security;
        if s.m_db.is_empty() {
            return Err(Error::config("security.m_db", "need at least one value"));
        }
        for (k, &m) in s.m_db.iter().enumerate() {
            if !(m >= 0.0 && m.is_finite()) {
                return Err(Error::config(
                    format!("security.m_db[{k}]"),
                    "must be >= 0 dB",
                ));
            }
        }
        if !(s.distance_max_km >= 0.0 && s.distance_max_km.is_finite()) {
            return Err(Error::config("security.distance_max_km", "must be >= 0"));
        }
        positive("security.distance_step_km", s.distance_step_km)?;
        if !(s.threshold_min_db >= 0.0
            && s.threshold_min_db < s.threshold_max_db
            && s.threshold_max_db.is_finite())
        {
            return Err(Error::config(
                "security.threshold_max_db",
                "need 0 <= threshold_min_db < threshold_max_db",
            ));
        }
        positive("security.threshold_tol_db", s.threshold_tol_db)?;

        let b = &self.budget;
        positive("budget.target_power_w", b.target_power_w)?;
        positive("budget.eve_max_power_w", b.eve_max_power_w)?;
        self.budget_paths()?;
        Ok(())
    }

    fn plan(&self, v_app: f64, i_ir: f64, key: &str) -> Result<PreTreatmentPlan> {
        let plan = PreTreatmentPlan {
            v_app,
            i_ir,
            saturation_epsilon: self.attack.pre_treat.saturation_epsilon,
        };
        plan.validate().map_err(|e| match e {
            Error::Config { key: k, message } => {
                let leaf = k.rsplit('.').next().unwrap_or("").to_string();
                Error::config(format!("{key}.{leaf}"), message)
            }
            other => other,
        })?;
        Ok(plan)
    }

    /// Pristine device plus its working voltage.
    pub fn device(&self) -> Result<ResolvedDevice> {
        let m = &self.material;
        let g = &self.geometry;
        let d = &self.device;
        let mat = MaterialParams {
            n: m.n,
            r33: m.r33_m_per_v,
            gamma: m.gamma,
            kappa: m.kappa,
            alpha_abs: m.alpha_abs_per_m,
            sigma_d: m.sigma_d_s_per_m,
            a_const: m.a_const,
            eps_r: m.eps_r,
            eps_0: VACUUM_PERMITTIVITY,
            m_exp: m.m_exp,
            i_crossover: m.i_crossover_w,
        };
        let geo = GeometryParams {
            arm_length: g.arm_length_m,
            electrode_length: g.electrode_length_m,
            electrode_gap: g.electrode_gap_m,
            lambda_signal: g.lambda_signal_nm / 1e9,
            lambda_irradiation: g.lambda_irradiation_nm / 1e9,
            l_eff: g.l_eff_m,
        };
        let mut dev = MziDevice::new(mat, geo, d.v_pi_v, d.delta_theta0_rad);
        dev.r_sig = d.r_sig;
        dev.r_ir = d.r_ir;
        dev.coupling_loss_ir_db = d.coupling_loss_ir_db;
        dev.polarization_penalty_db = d.polarization_penalty_db;
        dev.extinction_ratio_db = if d.extinction_ratio_db == 0.0 {
            None
        } else {
            Some(d.extinction_ratio_db)
        };
        dev.decay_mode = d.decay_mode;
        dev.validate()?;
        if !d.working_voltage_v.is_finite() {
            return Err(Error::config("device.working_voltage_v", "must be finite"));
        }
        Ok(ResolvedDevice {
            device: dev,
            working_voltage: d.working_voltage_v,
        })
    }

    pub fn pre_treatment_plan(&self) -> Result<PreTreatmentPlan> {
        let p = &self.attack.pre_treat;
        self.plan(p.v_app_v, p.i_ir_w, "attack.pre_treat")
    }

    pub fn pulse_controller(&self, target_m_db: f64, seed: u64) -> Result<PulseController> {
        let p = &self.attack.pulse;
        let c = PulseController {
            target_m_db,
            duty_min: p.duty_min,
            duty_max: p.duty_max,
            gain: p.gain,
            max_duty_growth: p.max_duty_growth,
            settle_tol_db: p.settle_tol_db,
            period_s: p.period_s,
            peak_power_w: p.peak_power_w,
            hold_periods: p.hold_periods,
            noise_sigma_db: p.noise_sigma_db,
            seed,
        };
        c.validate()?;
        Ok(c)
    }

    pub fn qkd_scenario(&self) -> QkdScenario {
        let q = &self.qkd;
        QkdScenario {
            mu: q.mu,
            nu: q.nu,
            alpha_fiber: q.alpha_fiber_db_per_km,
            distance_km: 0.0,
            eta_b: q.eta_b,
            y0: q.y0,
            e_det: q.e_det,
            e0: q.e0,
            f_ec: q.f_ec,
            n_trunc: q.n_trunc,
            estimation: q.estimation,
        }
    }

    pub fn component_db(&self) -> Result<ComponentDb> {
        let mut db = ComponentDb::builtin();
        db.add_components(&self.budget.components, "budget.")?;
        Ok(db)
    }

    pub fn budget_paths(&self) -> Result<Vec<(String, InjectionPath)>> {
        let db = self.component_db()?;
        self.budget
            .paths
            .iter()
            .enumerate()
            .map(|(k, p)| {
                if !(p.fiber_length_km >= 0.0 && p.fiber_length_km.is_finite()) {
                    return Err(Error::config(
                        format!("budget.paths[{k}].fiber_length_km"),
                        "must be >= 0",
                    ));
                }
                let path = db
                    .path(&p.fiber, p.fiber_length_km, &p.components)
                    .map_err(|e| Error::config(format!("budget.paths[{k}]"), e.to_string()))?;
                Ok((p.name.clone(), path))
            })
            .collect()
    }

    /// Canonical serialisation used for hashing.
    pub fn canonical_json(&self) -> String {
        serde_json::to_string(self).expect("config serialises")
    }

    /// SHA-256 of the canonical config together with the seed.
    pub fn content_hash(&self, seed: u64) -> String {
        let mut h = Sha256::new();
        h.update(self.canonical_json().as_bytes());
        h.update(b"\nseed=");
        h.update(seed.to_string().as_bytes());
        hex::encode(h.finalize())
    }
}

#[derive(Debug, Clone)]
pub struct ResolvedDevice {
    pub device: MziDevice,
    pub working_voltage: f64,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_config_is_the_default() {
        let cfg = ScenarioConfig::from_toml("").unwrap();
        assert_eq!(cfg, ScenarioConfig::default());
        let dev = cfg.device().unwrap().device;
        assert_eq!(dev, default_device());
    }

    #[test]
    fn partial_override() {
        let cfg = ScenarioConfig::from_toml("[qkd]\nmu = 0.5\n[device]\nr_ir = 0.4\n").unwrap();
        assert_eq!(cfg.qkd.mu, 0.5);
        assert_eq!(cfg.qkd.nu, 0.1);
        assert_eq!(cfg.device().unwrap().device.r_ir, 0.4);
    }

    #[test]
    fn unknown_key_rejected() {
        assert!(matches!(
            ScenarioConfig::from_toml("[qkd]\nmu_typo = 0.5\n"),
            Err(Error::Config { .. })
        ));
    }

    #[test]
    fn validation_reports_key_path() {
        let cases = [
            ("[device]\nr_sig = 1.5\n", "device.r_sig"),
            (
                "[material]\nsigma_d_s_per_m = -1.0\n",
                "material.sigma_d_s_per_m",
            ),
            ("[qkd]\nnu = 0.9\n", "qkd.nu"),
            (
                "[attack.pulse]\nduty_min = 0.5\nduty_max = 0.2\n",
                "attack.pulse.duty_min",
            ),
            (
                "[[voltage_curve.pre_treatments]]\nv_app_v = 1.0\ni_ir_w = -1.0\n",
                "voltage_curve.pre_treatments[0].i_ir_w",
            ),
            (
                "[budget.components.bad]\nloss_db = { 405 = -3.0 }\n",
                "budget.components.bad.loss_db.405",
            ),
            (
                "[[budget.paths]]\nname = \"x\"\ncomponents = [\"nope\"]\n",
                "budget.paths[0]",
            ),
        ];
        for (text, want) in cases {
            match ScenarioConfig::from_toml(text) {
                Err(Error::Config { key, .. }) => assert_eq!(key, want, "{text}"),
                other => panic!("{text}: {other:?}"),
            }
        }
    }

    #[test]
    fn hash_depends_on_content_and_seed() {
        let a = ScenarioConfig::default();
        let mut b = a.clone();
        b.qkd.mu = 0.5;
        assert_eq!(
            a.content_hash(1),
            ScenarioConfig::from_toml("").unwrap().content_hash(1)
        );
        assert_ne!(a.content_hash(1), b.content_hash(1));
        assert_ne!(a.content_hash(1), a.content_hash(2));
    }
}
