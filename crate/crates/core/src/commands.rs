//! Command implementations. Each command turns a validated config into a
//! set of named output files held in memory; writing them to disk and
//! recording the manifest is the caller's job.

use std::fmt::Write as _;

use serde::Serialize;

use crate::attack::{
    initialize_device, pre_treat, pulse_inject_to_target, run_program, IrradiationProgram,
};
use crate::calibration::saturated_magnification_db;
use crate::config::{CurveMode, ScenarioConfig};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::ln_device::{AttenuationSample, MziDevice};
use crate::loss_budget::{countermeasure_margin, required_eve_power};
use crate::qkd::{distance_grid, sweep_key_rates, zero_key_threshold};
use crate::svg::{Plot, Series};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AttackCommand {
    PreTreat,
    Pulse,
    Init,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SecurityCommand {
    Sweep,
    Threshold,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    PeCurve,
    VoltageCurve,
    Attack(AttackCommand),
    Security(SecurityCommand),
    Budget,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::PeCurve => "pe-curve",
            Command::VoltageCurve => "voltage-curve",
            Command::Attack(AttackCommand::PreTreat) => "attack pre-treat",
            Command::Attack(AttackCommand::Pulse) => "attack pulse",
            Command::Attack(AttackCommand::Init) => "attack init",
            Command::Security(SecurityCommand::Sweep) => "security sweep",
            Command::Security(SecurityCommand::Threshold) => "security threshold",
            Command::Budget => "budget",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutputFile {
    pub name: String,
    pub bytes: Vec<u8>,
}

#[derive(Debug, Clone, Default)]
pub struct CommandOutput {
    pub files: Vec<OutputFile>,
    /// Human-readable summary for the terminal.
    pub summary: String,
}

impl CommandOutput {
    fn csv<R: Serialize>(&mut self, name: &str, rows: &[R]) -> Result<()> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for r in rows {
            w.serialize(r)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
        self.files.push(OutputFile {
            name: name.into(),
            bytes,
        });
        Ok(())
    }

    fn svg(&mut self, cfg: &ScenarioConfig, name: &str, plot: Plot) {
        if cfg.output.svg {
            self.files.push(OutputFile {
                name: name.into(),
                bytes: plot.render().into_bytes(),
            });
        }
    }

    fn text(&mut self, name: &str, text: String) {
        self.files.push(OutputFile {
            name: name.into(),
            bytes: text.into_bytes(),
        });
    }
}

pub fn run(
    cmd: Command,
    cfg: &ScenarioConfig,
    seed: u64,
    exec: Execution,
) -> Result<CommandOutput> {
    cfg.validate()?;
    match cmd {
        Command::PeCurve => pe_curve(cfg, exec),
        Command::VoltageCurve => voltage_curve(cfg, exec),
        Command::Attack(AttackCommand::PreTreat) => attack_pre_treat(cfg),
        Command::Attack(AttackCommand::Init) => attack_init(cfg),
        Command::Attack(AttackCommand::Pulse) => attack_pulse(cfg, seed),
        Command::Security(SecurityCommand::Sweep) => security_sweep(cfg, exec),
        Command::Security(SecurityCommand::Threshold) => security_threshold(cfg, exec),
        Command::Budget => budget(cfg),
    }
}

#[derive(Serialize)]
struct TimeRow {
    power_w: f64,
    t_s: f64,
    transmittance: f64,
    attenuation_db: f64,
    m_db: f64,
    delta_theta_rad: f64,
}

#[derive(Serialize)]
struct PeSummaryRow {
    power_w: f64,
    saturated_m_db: f64,
    tau_s: f64,
}

fn pe_curve(cfg: &ScenarioConfig, exec: Execution) -> Result<CommandOutput> {
    let dev = cfg.device()?;
    let (pristine, v0) = (dev.device, dev.working_voltage);
    let pe = &cfg.pe_curve;
    let per_power = exec.map(&pe.powers_w, |&p| -> Result<_> {
        let mut d = pristine.clone();
        let trace = run_program(
            &mut d,
            &IrradiationProgram::cw(p, pe.duration_s),
            pe.mu_in,
            v0,
            pe.dt_s,
        )?;
        let sat = saturated_magnification_db(&pristine, p, v0)?;
        let (t1, t2) = pristine.arm_time_constants(p)?;
        Ok((trace, sat, t1.max(t2)))
    });
    let mut rows = Vec::new();
    let mut summary = Vec::new();
    let mut series = Vec::new();
    for (&p, r) in pe.powers_w.iter().zip(per_power) {
        let (trace, sat, tau) = r?;
        series.push(Series {
            name: format!("{:.3} uW", p * 1e6),
            points: trace.iter().map(|t| (t.t_s, t.m_db)).collect(),
        });
        rows.extend(trace.iter().map(|t| TimeRow {
            power_w: p,
            t_s: t.t_s,
            transmittance: t.transmittance,
            attenuation_db: t.attenuation_db,
            m_db: t.m_db,
            delta_theta_rad: t.delta_theta,
        }));
        summary.push(PeSummaryRow {
            power_w: p,
            saturated_m_db: sat,
            tau_s: tau,
        });
    }
    let mut out = CommandOutput::default();
    out.csv("pe_traces.csv", &rows)?;
    out.csv("pe_summary.csv", &summary)?;
    out.svg(
        cfg,
        "pe_traces.svg",
        Plot {
            title: "Magnification under CW irradiation".into(),
            x_label: "time (s)".into(),
            y_label: "M (dB)".into(),
            series,
            ..Default::default()
        },
    );
    out.svg(
        cfg,
        "pe_summary.svg",
        Plot {
            title: "Saturated magnification".into(),
            x_label: "irradiation power (W)".into(),
            y_label: "M (dB)".into(),
            log_x: true,
            series: vec![Series {
                name: "saturated".into(),
                points: summary
                    .iter()
                    .map(|r| (r.power_w, r.saturated_m_db))
                    .collect(),
            }],
            ..Default::default()
        },
    );
    let mut s = String::from("power_w        saturated_m_db  tau_s\n");
    for r in &summary {
        let _ = writeln!(
            s,
            "{:<14.4e} {:<15.3} {:.1}",
            r.power_w, r.saturated_m_db, r.tau_s
        );
    }
    out.summary = s;
    Ok(out)
}

#[derive(Serialize)]
struct VoltageRow<'a> {
    curve: &'a str,
    v_volts: f64,
    transmittance: f64,
    attenuation_db: f64,
    m_db: f64,
    delta_theta_rad: f64,
}

#[derive(Serialize)]
struct BiasRow {
    curve: String,
    v_app_v: f64,
    i_ir_w: f64,
    bias_shift_rad: f64,
    extinction_voltage_v: f64,
}

struct Curve {
    name: String,
    samples: Vec<AttenuationSample>,
}

fn push_curves(
    out: &mut CommandOutput,
    cfg: &ScenarioConfig,
    file: &str,
    title: &str,
    curves: &[Curve],
    reference: &[AttenuationSample],
) -> Result<()> {
    let mut rows = Vec::new();
    for c in curves {
        for (s, r) in c.samples.iter().zip(reference) {
            rows.push(VoltageRow {
                curve: &c.name,
                v_volts: s.v_app,
                transmittance: s.mu_out_per_mu_in,
                attenuation_db: s.attenuation_db,
                m_db: 10.0 * (s.mu_out_per_mu_in / r.mu_out_per_mu_in).log10(),
                delta_theta_rad: s.delta_theta,
            });
        }
    }
    out.csv(&format!("{file}.csv"), &rows)?;
    out.svg(
        cfg,
        &format!("{file}.svg"),
        Plot {
            title: title.into(),
            x_label: "applied voltage (V)".into(),
            y_label: "output / input".into(),
            log_y: true,
            series: curves
                .iter()
                .map(|c| Series {
                    name: c.name.clone(),
                    points: c
                        .samples
                        .iter()
                        .map(|s| (s.v_app, s.mu_out_per_mu_in))
                        .collect(),
                })
                .collect(),
            ..Default::default()
        },
    );
    Ok(())
}

fn curve_of(dev: &MziDevice, cfg: &ScenarioConfig) -> Result<Vec<AttenuationSample>> {
    let v = &cfg.voltage_curve;
    dev.voltage_curve(v.v_min_v, v.v_max_v, v.points)
}

fn extinction(dev: &MziDevice, cfg: &ScenarioConfig) -> Result<f64> {
    let v = &cfg.voltage_curve;
    dev.find_extinction_voltage((v.v_min_v, v.v_max_v), v.points.max(201))
}

fn voltage_curve(cfg: &ScenarioConfig, exec: Execution) -> Result<CommandOutput> {
    let pristine = cfg.device()?.device;
    let vc = &cfg.voltage_curve;
    let reference = curve_of(&pristine, cfg)?;
    let mut curves = vec![Curve {
        name: "pristine".into(),
        samples: reference.clone(),
    }];
    let mut bias = vec![BiasRow {
        curve: "pristine".into(),
        v_app_v: 0.0,
        i_ir_w: 0.0,
        bias_shift_rad: 0.0,
        extinction_voltage_v: extinction(&pristine, cfg)?,
    }];
    let treated = exec.map(&vc.pre_treatments, |p| -> Result<_> {
        let plan = cfg.pre_treatment_plan().map(|mut pl| {
            pl.v_app = p.v_app_v;
            pl.i_ir = p.i_ir_w;
            pl
        })?;
        let d = pre_treat(&pristine, &plan, cfg.attack.dt_s, cfg.attack.max_steps)?;
        Ok((curve_of(&d, cfg)?, d.pe_phase(), extinction(&d, cfg)?))
    });
    for (p, r) in vc.pre_treatments.iter().zip(treated) {
        let (samples, shift, v0) = r?;
        let name = format!("pre_{}V_{}uW", p.v_app_v, p.i_ir_w * 1e6);
        bias.push(BiasRow {
            curve: name.clone(),
            v_app_v: p.v_app_v,
            i_ir_w: p.i_ir_w,
            bias_shift_rad: shift,
            extinction_voltage_v: v0,
        });
        curves.push(Curve { name, samples });
    }
    if vc.mode == CurveMode::Saturated {
        let samples = pristine.saturated_voltage_curve(
            vc.saturated_power_w,
            vc.v_min_v,
            vc.v_max_v,
            vc.points,
        )?;
        curves.push(Curve {
            name: format!("saturated_{}uW", vc.saturated_power_w * 1e6),
            samples,
        });
    }
    let mut out = CommandOutput::default();
    push_curves(
        &mut out,
        cfg,
        "voltage_curves",
        "Voltage curves",
        &curves,
        &reference,
    )?;
    out.csv("bias_shifts.csv", &bias)?;
    let mut s = String::from("curve                      bias_shift_rad  extinction_voltage_v\n");
    for b in &bias {
        let _ = writeln!(
            s,
            "{:<26} {:<15.4} {:.4}",
            b.curve, b.bias_shift_rad, b.extinction_voltage_v
        );
    }
    let span = bias
        .iter()
        .map(|b| b.bias_shift_rad)
        .fold(f64::NEG_INFINITY, f64::max)
        - bias
            .iter()
            .map(|b| b.bias_shift_rad)
            .fold(f64::INFINITY, f64::min);
    let _ = writeln!(s, "bias shift span: {span:.4} rad");
    out.summary = s;
    Ok(out)
}

#[derive(Serialize)]
struct PreTreatSummary {
    v_app_v: f64,
    i_ir_w: f64,
    bias_shift_rad: f64,
    extinction_before_v: f64,
    extinction_after_v: f64,
    m_at_working_voltage_db: f64,
}

fn attack_pre_treat(cfg: &ScenarioConfig) -> Result<CommandOutput> {
    let dev = cfg.device()?;
    let (pristine, v0) = (dev.device, dev.working_voltage);
    let plan = cfg.pre_treatment_plan()?;
    let treated = pre_treat(&pristine, &plan, cfg.attack.dt_s, cfg.attack.max_steps)?;
    let reference = curve_of(&pristine, cfg)?;
    let curves = [
        Curve {
            name: "before".into(),
            samples: reference.clone(),
        },
        Curve {
            name: "after".into(),
            samples: curve_of(&treated, cfg)?,
        },
    ];
    let row = PreTreatSummary {
        v_app_v: plan.v_app,
        i_ir_w: plan.i_ir,
        bias_shift_rad: treated.pe_phase() - pristine.pe_phase(),
        extinction_before_v: extinction(&pristine, cfg)?,
        extinction_after_v: extinction(&treated, cfg)?,
        m_at_working_voltage_db: 10.0
            * (treated.transmittance(v0) / pristine.transmittance(v0)).log10(),
    };
    let mut out = CommandOutput::default();
    push_curves(
        &mut out,
        cfg,
        "pre_treat_curves",
        "Pre-treatment",
        &curves,
        &reference,
    )?;
    out.summary = format!(
        "bias shift {:.4} rad; extinction voltage {:.4} V -> {:.4} V; M at {v0} V: {:.3} dB\n",
        row.bias_shift_rad,
        row.extinction_before_v,
        row.extinction_after_v,
        row.m_at_working_voltage_db
    );
    out.csv("pre_treat_summary.csv", &[row])?;
    Ok(out)
}

#[derive(Serialize)]
struct InitSummary {
    rms_to_reference_db: f64,
    extinction_pristine_v: f64,
    extinction_attacked_v: f64,
    extinction_initialized_v: f64,
    extinction_reference_v: f64,
}

/// Root-mean-square difference of two curves' attenuation, dB.
pub fn rms_attenuation_db(a: &[AttenuationSample], b: &[AttenuationSample]) -> f64 {
    let n = a.len().min(b.len()).max(1);
    let ss: f64 = a
        .iter()
        .zip(b)
        .map(|(x, y)| (x.attenuation_db - y.attenuation_db).powi(2))
        .sum();
    (ss / n as f64).sqrt()
}

fn attack_init(cfg: &ScenarioConfig) -> Result<CommandOutput> {
    let pristine = cfg.device()?.device;
    let attacked = if cfg.attack.init.pre_treat_first {
        pre_treat(
            &pristine,
            &cfg.pre_treatment_plan()?,
            cfg.attack.dt_s,
            cfg.attack.max_steps,
        )?
    } else {
        pristine.clone()
    };
    let reference = initialize_device(&pristine, cfg.attack.dt_s)?;
    let initialized = initialize_device(&attacked, cfg.attack.dt_s)?;
    let ref_curve = curve_of(&reference, cfg)?;
    let init_curve = curve_of(&initialized, cfg)?;
    let row = InitSummary {
        rms_to_reference_db: rms_attenuation_db(&init_curve, &ref_curve),
        extinction_pristine_v: extinction(&pristine, cfg)?,
        extinction_attacked_v: extinction(&attacked, cfg)?,
        extinction_initialized_v: extinction(&initialized, cfg)?,
        extinction_reference_v: extinction(&reference, cfg)?,
    };
    let pristine_curve = curve_of(&pristine, cfg)?;
    let curves = [
        Curve {
            name: "pristine".into(),
            samples: pristine_curve.clone(),
        },
        Curve {
            name: "attacked".into(),
            samples: curve_of(&attacked, cfg)?,
        },
        Curve {
            name: "initialized".into(),
            samples: init_curve,
        },
        Curve {
            name: "reference".into(),
            samples: ref_curve,
        },
    ];
    let mut out = CommandOutput::default();
    push_curves(
        &mut out,
        cfg,
        "init_curves",
        "Initialization",
        &curves,
        &pristine_curve,
    )?;
    out.summary = format!(
        "RMS distance to reference curve: {:.3e} dB; extinction voltage {:.4} V (reference {:.4} V)\n",
        row.rms_to_reference_db, row.extinction_initialized_v, row.extinction_reference_v
    );
    out.csv("init_summary.csv", &[row])?;
    Ok(out)
}

#[derive(Serialize)]
struct PulseTraceRow {
    t_s: f64,
    duty: f64,
    power_w: f64,
    m_db: f64,
    error_db: f64,
}

#[derive(Serialize)]
struct PulseSummary {
    target_m_db: f64,
    reachable_m_db: f64,
    settled: bool,
    settled_period: Option<usize>,
    periods: usize,
    final_duty: f64,
    final_m_db: f64,
}

fn attack_pulse(cfg: &ScenarioConfig, seed: u64) -> Result<CommandOutput> {
    let dev = cfg.device()?;
    let (pristine, v0) = (dev.device, dev.working_voltage);
    let p = &cfg.attack.pulse;
    let target = match p.target_m_db {
        Some(t) => t,
        None => p.target_fraction * saturated_magnification_db(&pristine, p.peak_power_w, v0)?,
    };
    let ctrl = cfg.pulse_controller(target, seed)?;
    let outcome = pulse_inject_to_target(&pristine, &ctrl, cfg.attack.mu_in, v0, p.max_periods)?;
    let rows: Vec<PulseTraceRow> = outcome
        .trace
        .iter()
        .map(|r| PulseTraceRow {
            t_s: r.t_s,
            duty: r.duty,
            power_w: r.power_w,
            m_db: r.m_db,
            error_db: r.error_db,
        })
        .collect();
    let summary = PulseSummary {
        target_m_db: target,
        reachable_m_db: outcome.reachable_m_db,
        settled: outcome.settled(),
        settled_period: outcome.settled_at,
        periods: outcome.trace.len(),
        final_duty: outcome.final_duty,
        final_m_db: outcome.trace.last().map_or(0.0, |r| r.m_db),
    };
    let mut out = CommandOutput::default();
    out.csv("pulse_trace.csv", &rows)?;
    out.svg(
        cfg,
        "pulse_trace.svg",
        Plot {
            title: "Pulse injection".into(),
            x_label: "time (s)".into(),
            y_label: "M (dB)".into(),
            series: vec![
                Series {
                    name: "M".into(),
                    points: rows.iter().map(|r| (r.t_s, r.m_db)).collect(),
                },
                Series {
                    name: "target".into(),
                    points: rows.iter().map(|r| (r.t_s, target)).collect(),
                },
            ],
            ..Default::default()
        },
    );
    out.summary = format!(
        "target {:.3} dB (reachable {:.3} dB): {}; {} periods, final duty {:.5}, final M {:.3} dB\n",
        summary.target_m_db,
        summary.reachable_m_db,
        match summary.settled_period {
            Some(k) => format!("settled at period {k}"),
            None => "not settled".into(),
        },
        summary.periods,
        summary.final_duty,
        summary.final_m_db
    );
    out.csv("pulse_summary.csv", &[summary])?;
    Ok(out)
}

#[derive(Serialize)]
struct SweepRow {
    m_db: f64,
    distance_km: f64,
    q_mu: f64,
    e_mu: f64,
    y1_lower: f64,
    e1_upper: f64,
    delta_est: f64,
    delta_pns: f64,
    r_est: f64,
    r_actual: f64,
    tail_bound: f64,
}

fn security_sweep(cfg: &ScenarioConfig, exec: Execution) -> Result<CommandOutput> {
    let s = &cfg.security;
    let grid = distance_grid(s.distance_max_km, s.distance_step_km)?;
    let rows = sweep_key_rates(&cfg.qkd_scenario(), &s.m_db, &grid, exec)?;
    let out_rows: Vec<SweepRow> = rows
        .iter()
        .map(|r| SweepRow {
            m_db: r.m_db,
            distance_km: r.distance_km,
            q_mu: r.q_mu,
            e_mu: r.e_mu,
            y1_lower: r.y1_lower,
            e1_upper: r.e1_upper,
            delta_est: r.delta_est,
            delta_pns: r.delta_pns,
            r_est: r.r_est,
            r_actual: r.r_actual,
            tail_bound: r.tail_bound,
        })
        .collect();
    let mut series = vec![Series {
        name: "estimated".into(),
        points: rows
            .iter()
            .filter(|r| r.m_db == s.m_db[0])
            .map(|r| (r.distance_km, r.r_est))
            .collect(),
    }];
    for &m in &s.m_db {
        series.push(Series {
            name: format!("actual, M={m} dB"),
            points: rows
                .iter()
                .filter(|r| r.m_db == m)
                .map(|r| (r.distance_km, r.r_actual))
                .collect(),
        });
    }
    let mut out = CommandOutput::default();
    out.csv("security_sweep.csv", &out_rows)?;
    out.svg(
        cfg,
        "security_sweep.svg",
        Plot {
            title: "Secret key rate".into(),
            x_label: "distance (km)".into(),
            y_label: "key per pulse".into(),
            log_y: true,
            series,
            ..Default::default()
        },
    );
    let worst_tail = rows.iter().map(|r| r.tail_bound).fold(0.0, f64::max);
    let mut text = String::from("m_db    max r_est      max r_actual\n");
    for &m in &s.m_db {
        let est = rows
            .iter()
            .filter(|r| r.m_db == m)
            .map(|r| r.r_est)
            .fold(0.0, f64::max);
        let act = rows
            .iter()
            .filter(|r| r.m_db == m)
            .map(|r| r.r_actual)
            .fold(0.0, f64::max);
        let _ = writeln!(text, "{m:<7} {est:<14.4e} {act:.4e}");
    }
    let _ = writeln!(text, "largest truncation tail bound: {worst_tail:.2e}");
    out.summary = text;
    Ok(out)
}

#[derive(Serialize)]
struct ThresholdRow {
    threshold_m_db: f64,
    mu: f64,
    nu: f64,
    distance_max_km: f64,
    bisection_iterations: usize,
}

#[derive(Serialize)]
struct ProfileRow {
    m_db: f64,
    best_r_actual_raw: f64,
}

fn security_threshold(cfg: &ScenarioConfig, exec: Execution) -> Result<CommandOutput> {
    let s = &cfg.security;
    let grid = distance_grid(s.distance_max_km, s.distance_step_km)?;
    let scenario = cfg.qkd_scenario();
    let th = zero_key_threshold(
        &scenario,
        (s.threshold_min_db, s.threshold_max_db),
        &grid,
        s.threshold_tol_db,
        exec,
    )?;
    let mut out = CommandOutput::default();
    out.csv(
        "threshold.csv",
        &[ThresholdRow {
            threshold_m_db: th.m_db,
            mu: scenario.mu,
            nu: scenario.nu,
            distance_max_km: s.distance_max_km,
            bisection_iterations: th.iterations,
        }],
    )?;
    let profile: Vec<ProfileRow> = th
        .profile
        .iter()
        .map(|&(m, r)| ProfileRow {
            m_db: m,
            best_r_actual_raw: r,
        })
        .collect();
    out.csv("threshold_profile.csv", &profile)?;
    out.summary = format!(
        "zero-key threshold: {:.4} dB (mu = {}, nu = {})\n",
        th.m_db, scenario.mu, scenario.nu
    );
    Ok(out)
}

#[derive(Serialize)]
struct BudgetRow<'a> {
    path: &'a str,
    wavelength_nm: u32,
    loss_db: f64,
    loss_is_lower_bound: bool,
    required_power_w: f64,
    headroom_db: f64,
    margin_db: f64,
    verdict: String,
}

#[derive(Serialize)]
struct SchemeRow<'a> {
    scheme: &'a str,
    signal_loss_1550_db: f64,
    irradiation_loss_405_db: f64,
    split_ratio_405: &'a str,
}

fn budget(cfg: &ScenarioConfig) -> Result<CommandOutput> {
    let b = &cfg.budget;
    let paths = cfg.budget_paths()?;
    let mut rows = Vec::new();
    for (name, path) in &paths {
        let need = required_eve_power(path, b.wavelength_nm, b.target_power_w)?;
        let m = countermeasure_margin(path, b.wavelength_nm, b.eve_max_power_w, b.target_power_w)?;
        rows.push(BudgetRow {
            path: name,
            wavelength_nm: b.wavelength_nm,
            loss_db: m.loss.db,
            loss_is_lower_bound: m.loss.lower_bound,
            required_power_w: need.watts,
            headroom_db: m.headroom_db,
            margin_db: m.margin_db,
            verdict: m.verdict.to_string(),
        });
    }
    let db = cfg.component_db()?;
    let schemes: Vec<SchemeRow> = db
        .schemes
        .values()
        .map(|s| SchemeRow {
            scheme: &s.name,
            signal_loss_1550_db: s.signal_loss_1550_db,
            irradiation_loss_405_db: s.irradiation_loss_405_db,
            split_ratio_405: s.split_ratio_405.as_deref().unwrap_or(""),
        })
        .collect();

    let mut report = format!(
        "Injection at {} nm, {:.3e} W needed at the device, attacker limit {:.3e} W\n\n",
        b.wavelength_nm, b.target_power_w, b.eve_max_power_w
    );
    let _ = writeln!(
        report,
        "{:<18} {:>10} {:>16} {:>11}  verdict",
        "path", "loss_db", "required_w", "margin_db"
    );
    for r in &rows {
        let ge = if r.loss_is_lower_bound { ">" } else { "" };
        let _ = writeln!(
            report,
            "{:<18} {:>10} {:>16} {:>11.2}  {}",
            r.path,
            format!("{ge}{:.2}", r.loss_db),
            format!("{ge}{:.3e}", r.required_power_w),
            r.margin_db,
            r.verdict
        );
    }
    let _ = writeln!(
        report,
        "\n{:<12} {:>14} {:>14}  split",
        "scheme", "tl_1550_db", "tl_405_db"
    );
    for s in &schemes {
        let _ = writeln!(
            report,
            "{:<12} {:>14.2} {:>14.2}  {}",
            s.scheme, s.signal_loss_1550_db, s.irradiation_loss_405_db, s.split_ratio_405
        );
    }
    let mut out = CommandOutput::default();
    out.csv("budget.csv", &rows)?;
    out.csv("coupling_schemes.csv", &schemes)?;
    out.text("budget_report.txt", report.clone());
    out.summary = report;
    Ok(out)
}
