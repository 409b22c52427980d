//! Decoy-state BB84 security under an amplified photon-number-splitting
//! attack: gains, error rates, decoy bounds, tagged fractions and key rates.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution, Poisson};
use serde::{Deserialize, Serialize};
use statrs::function::factorial::{ln_binomial, ln_factorial};

use crate::error::{Error, Result};
use crate::exec::Execution;

/// Largest Poisson truncation tail accepted without complaint.
pub const MAX_TAIL_BOUND: f64 = 1e-10;

/// How the legitimate users obtain single-photon yield and error rate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Estimation {
    /// Vacuum + weak decoy analytic bounds.
    #[default]
    DecoyBounds,
    /// True single-photon values of the channel model.
    Oracle,
}

impl std::str::FromStr for Estimation {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "decoy_bounds" => Ok(Estimation::DecoyBounds),
            "oracle" => Ok(Estimation::Oracle),
            other => Err(format!(
                "expected `decoy_bounds` or `oracle`, got `{other}`"
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QkdScenario {
    pub mu: f64,
    pub nu: f64,
    /// Fiber loss, dB/km.
    pub alpha_fiber: f64,
    pub distance_km: f64,
    /// Transmittance of Bob's detection apparatus.
    pub eta_b: f64,
    /// Dark count probability per pulse.
    pub y0: f64,
    pub e_det: f64,
    /// Error probability of a dark count.
    pub e0: f64,
    /// Error-correction inefficiency.
    pub f_ec: f64,
    /// Minimum photon-number truncation of the Poisson sums; extended
    /// automatically when the mean demands it.
    pub n_trunc: usize,
    pub estimation: Estimation,
}

impl Default for QkdScenario {
    fn default() -> Self {
        Self {
            mu: 0.6,
            nu: 0.1,
            alpha_fiber: 0.2,
            distance_km: 0.0,
            eta_b: 0.1,
            y0: 6e-7,
            e_det: 0.005,
            e0: 0.5,
            f_ec: 1.16,
            n_trunc: 40,
            estimation: Estimation::DecoyBounds,
        }
    }
}

impl QkdScenario {
    pub fn validate(&self) -> Result<()> {
        if !(self.nu > 0.0 && self.nu < self.mu && self.mu.is_finite()) {
            return Err(Error::config("qkd.nu", "need 0 < nu < mu"));
        }
        if !(self.alpha_fiber >= 0.0 && self.alpha_fiber.is_finite()) {
            return Err(Error::config("qkd.alpha_fiber_db_per_km", "must be >= 0"));
        }
        if !(self.distance_km >= 0.0 && self.distance_km.is_finite()) {
            return Err(Error::config("qkd.distance_km", "must be >= 0"));
        }
        if !(self.eta_b > 0.0 && self.eta_b <= 1.0) {
            return Err(Error::config("qkd.eta_b", "must lie in (0, 1]"));
        }
        if !(self.y0 >= 0.0 && self.y0 < 1.0) {
            return Err(Error::config("qkd.y0", "must lie in [0, 1)"));
        }
        if !(0.0..=0.5).contains(&self.e_det) {
            return Err(Error::config("qkd.e_det", "must lie in [0, 0.5]"));
        }
        if !(0.0..=1.0).contains(&self.e0) {
            return Err(Error::config("qkd.e0", "must lie in [0, 1]"));
        }
        if !(self.f_ec >= 1.0 && self.f_ec.is_finite()) {
            return Err(Error::config("qkd.f_ec", "must be >= 1"));
        }
        if self.n_trunc < 20 {
            return Err(Error::config("qkd.n_trunc", "must be >= 20"));
        }
        Ok(())
    }

    pub fn eta_ab(&self) -> f64 {
        channel_transmittance(self.alpha_fiber, self.distance_km)
    }

    /// Overall transmittance Alice to click.
    pub fn eta(&self) -> f64 {
        self.eta_ab() * self.eta_b
    }
}

pub fn channel_transmittance(alpha_fiber: f64, distance_km: f64) -> f64 {
    10f64.powf(-alpha_fiber * distance_km / 10.0)
}

/// `y0 + 1 - exp(-eta mpn)`, clamped to 1.
pub fn gain(mpn: f64, eta: f64, y0: f64) -> f64 {
    (y0 - (-eta * mpn).exp_m1()).min(1.0)
}

pub fn qber(mpn: f64, eta: f64, y0: f64, e0: f64, e_det: f64) -> f64 {
    let q = gain(mpn, eta, y0);
    if q == 0.0 {
        return 0.0;
    }
    (e0 * y0 - e_det * (-eta * mpn).exp_m1()) / q
}

/// Single-photon yield and error rate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SinglePhoton {
    pub y1: f64,
    pub e1: f64,
    /// A bound fell outside `[0, 1]` and was clamped.
    pub clamped: bool,
}

/// Vacuum + weak decoy lower bound on `Y1` and upper bound on `e1`.
pub fn decoy_bounds(s: &QkdScenario, q_mu: f64, _e_mu: f64, q_nu: f64, e_nu: f64) -> SinglePhoton {
    let (mu, nu) = (s.mu, s.nu);
    let raw_y1 = mu / (mu * nu - nu * nu)
        * (q_nu * nu.exp()
            - q_mu * mu.exp() * nu * nu / (mu * mu)
            - (mu * mu - nu * nu) / (mu * mu) * s.y0);
    let mut clamped = !(0.0..=1.0).contains(&raw_y1);
    let y1 = raw_y1.clamp(0.0, 1.0);
    let e1 = if y1 > 0.0 {
        let raw = (e_nu * q_nu * nu.exp() - s.e0 * s.y0) / (y1 * nu);
        clamped |= !(0.0..=1.0).contains(&raw);
        raw.clamp(0.0, 1.0)
    } else {
        clamped = true;
        0.5
    };
    SinglePhoton { y1, e1, clamped }
}

/// True single-photon values for overall transmittance `eta`.
pub fn oracle_single_photon(s: &QkdScenario, eta: f64) -> SinglePhoton {
    let y1 = (s.y0 + eta).min(1.0);
    let e1 = if y1 > 0.0 {
        (s.e0 * s.y0 + s.e_det * eta) / y1
    } else {
        0.5
    };
    SinglePhoton {
        y1,
        e1,
        clamped: false,
    }
}

/// Eve's resend probability that keeps Bob's count rate unchanged.
pub fn resend_probability(eta_ab: f64, m_linear: f64) -> Result<f64> {
    if !(m_linear >= 1.0 && m_linear.is_finite()) {
        return Err(Error::domain(format!(
            "magnification must be >= 1, got {m_linear}"
        )));
    }
    if !(0.0..=1.0).contains(&eta_ab) {
        return Err(Error::domain(format!(
            "channel transmittance must lie in [0, 1], got {eta_ab}"
        )));
    }
    Ok(eta_ab / m_linear)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AttackParams {
    pub m_linear: f64,
    pub p_resend: f64,
}

impl AttackParams {
    /// Attack at magnification `m_db` with the count-preserving resend
    /// probability.
    pub fn undetectable(s: &QkdScenario, m_db: f64) -> Result<Self> {
        let m_linear = 10f64.powf(m_db / 10.0);
        Ok(Self {
            m_linear,
            p_resend: resend_probability(s.eta_ab(), m_linear)?,
        })
    }
}

/// `y0 + 1 - exp(-M mpn p eta_b)`.
pub fn attacked_gain(mpn: f64, m_linear: f64, p: f64, eta_b: f64, y0: f64) -> f64 {
    (y0 - (-m_linear * mpn * p * eta_b).exp_m1()).min(1.0)
}

fn ln_poisson(n: u64, mean: f64) -> f64 {
    if mean == 0.0 {
        return if n == 0 { 0.0 } else { f64::NEG_INFINITY };
    }
    n as f64 * mean.ln() - mean - ln_factorial(n)
}

pub fn poisson_pmf(n: u64, mean: f64) -> f64 {
    ln_poisson(n, mean).exp()
}

/// Photon-number distribution forwarded by Eve: Poisson with mean `M p mu`.
pub fn pns_photon_distribution(n: u64, m_linear: f64, p: f64, mu: f64) -> f64 {
    poisson_pmf(n, m_linear * p * mu)
}

/// Upper bound on `P(N > n_max)` for `N ~ Poisson(mean)`.
pub fn poisson_tail_bound(n_max: u64, mean: f64) -> f64 {
    if mean == 0.0 {
        return 0.0;
    }
    let next = (n_max + 1) as f64;
    let ratio = mean / (next + 1.0);
    if ratio >= 1.0 {
        return 1.0;
    }
    (poisson_pmf(n_max + 1, mean) / (1.0 - ratio)).min(1.0)
}

/// Truncation that keeps the Poisson tail below [`MAX_TAIL_BOUND`] /
/// 100, never below `min`.
pub fn truncation_for(mean: f64, min: usize) -> u64 {
    let mut n = (min as u64).max((mean + 12.0 * mean.sqrt() + 30.0).ceil() as u64);
    while poisson_tail_bound(n, mean) > MAX_TAIL_BOUND * 1e-2 {
        n += 10;
    }
    n
}

/// Truncated sum together with an upper bound on the dropped tail.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Truncated {
    pub value: f64,
    pub tail_bound: f64,
    pub n_max: u64,
}

/// Probability that a pulse is split, Eve keeps at least one photon and Bob
/// clicks on what she forwards.
pub fn attack_success_probability(s: &QkdScenario, attack: &AttackParams) -> Truncated {
    let mu_e = attack.m_linear * s.mu;
    let p = attack.p_resend.clamp(0.0, 1.0);
    let n_max = truncation_for(mu_e, s.n_trunc);
    let mut total = 0.0;
    if p > 0.0 && s.eta_b > 0.0 {
        for n in 2..=n_max {
            let w = ln_poisson(n, mu_e);
            if w == f64::NEG_INFINITY {
                continue;
            }
            let mut inner = 0.0;
            for m in 1..n {
                let ln_b = ln_binomial(n, m) + m as f64 * p.ln() + (n - m) as f64 * (1.0 - p).ln();
                inner += ln_b.exp() * (1.0 - (1.0 - s.eta_b).powi(m as i32));
            }
            total += w.exp() * inner;
        }
    }
    Truncated {
        value: total.clamp(0.0, 1.0),
        tail_bound: poisson_tail_bound(n_max, mu_e),
        n_max,
    }
}

/// Closed form of [`attack_success_probability`].
pub fn attack_success_probability_closed(s: &QkdScenario, attack: &AttackParams) -> f64 {
    let mu_e = attack.m_linear * s.mu;
    let p = attack.p_resend;
    let pe = p * s.eta_b;
    (1.0 - (-mu_e * pe).exp() - (-mu_e * (1.0 - p)).exp() + (-mu_e * (1.0 - p + pe)).exp())
        .clamp(0.0, 1.0)
}

/// Monte-Carlo estimate of the success probability with its standard error.
///
/// Pulses are split into fixed chunks, each with its own seeded stream, so
/// the result does not depend on the execution mode.
pub fn attack_success_monte_carlo(
    s: &QkdScenario,
    attack: &AttackParams,
    pulses: u64,
    seed: u64,
    exec: Execution,
) -> Result<(f64, f64)> {
    const CHUNK: u64 = 1 << 16;
    if pulses == 0 {
        return Err(Error::domain("need at least one pulse"));
    }
    let mu_e = attack.m_linear * s.mu;
    let p = attack.p_resend.clamp(0.0, 1.0);
    let n_chunks = pulses.div_ceil(CHUNK) as usize;
    let counts = exec.map_range(n_chunks, |k| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(k as u64);
        let len = CHUNK.min(pulses - k as u64 * CHUNK);
        let photons = Poisson::new(mu_e.max(f64::MIN_POSITIVE)).expect("positive mean");
        let mut hits = 0u64;
        for _ in 0..len {
            let n = if mu_e > 0.0 {
                photons.sample(&mut rng) as u64
            } else {
                0
            };
            if n < 2 {
                continue;
            }
            let m = Binomial::new(n, p)
                .expect("valid binomial")
                .sample(&mut rng);
            if m == 0 || m == n {
                continue;
            }
            let miss = (1.0 - s.eta_b).powi(m as i32);
            if rng.random::<f64>() >= miss {
                hits += 1;
            }
        }
        hits
    });
    let hits: u64 = counts.iter().sum();
    let est = hits as f64 / pulses as f64;
    let se = (est * (1.0 - est) / pulses as f64).sqrt();
    Ok((est, se))
}

/// Estimated tagged fraction `1 - P1 Y1 / Q_mu`.
pub fn tagged_fraction_estimated(mu: f64, y1_lower: f64, q_mu: f64) -> Result<f64> {
    if !(q_mu > 0.0) {
        return Err(Error::domain("signal gain must be > 0"));
    }
    let p1 = mu * (-mu).exp();
    Ok((1.0 - p1 * y1_lower / q_mu).clamp(0.0, 1.0))
}

/// Actual tagged fraction: success probability normalised by `Q_mu`.
pub fn tagged_fraction_actual(
    s: &QkdScenario,
    attack: &AttackParams,
    q_mu: f64,
) -> Result<Truncated> {
    if !(q_mu > 0.0) {
        return Err(Error::domain("signal gain must be > 0"));
    }
    let ps = attack_success_probability(s, attack);
    Ok(Truncated {
        value: (ps.value / q_mu).clamp(0.0, 1.0),
        tail_bound: ps.tail_bound / q_mu,
        n_max: ps.n_max,
    })
}

/// Binary entropy with `H2(0) = H2(1) = 0`.
pub fn binary_entropy(x: f64) -> f64 {
    if x <= 0.0 || x >= 1.0 {
        return 0.0;
    }
    -x * x.log2() - (1.0 - x) * (1.0 - x).log2()
}

/// Secret key per pulse before clamping at zero. Error rates above 0.5
/// are treated as 0.5.
pub fn key_rate_raw(f_ec: f64, delta: f64, e1: f64, q_mu: f64, e_mu: f64) -> f64 {
    let h1 = binary_entropy(e1.clamp(0.0, 0.5));
    let he = binary_entropy(e_mu.clamp(0.0, 0.5));
    q_mu * ((1.0 - delta) * (1.0 - h1) - f_ec * he)
}

pub fn key_rate(f_ec: f64, delta: f64, e1: f64, q_mu: f64, e_mu: f64) -> f64 {
    key_rate_raw(f_ec, delta, e1, q_mu, e_mu).max(0.0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SecurityResult {
    pub m_db: f64,
    pub distance_km: f64,
    pub q_mu: f64,
    pub e_mu: f64,
    pub q_nu: f64,
    pub e_nu: f64,
    pub y1_lower: f64,
    pub e1_upper: f64,
    pub delta_est: f64,
    pub delta_pns: f64,
    pub r_est: f64,
    pub r_actual: f64,
    pub r_est_raw: f64,
    pub r_actual_raw: f64,
    pub p_s: f64,
    pub tail_bound: f64,
    pub bounds_clamped: bool,
}

/// Evaluate one scenario under an attack of magnification `m_db`.
///
/// The users see unchanged gains and error rates, so their key rate uses
/// the estimated tagged fraction. The actual rate cannot exceed it and is
/// further limited by the fraction of pulses Eve really tags.
pub fn evaluate(s: &QkdScenario, m_db: f64) -> Result<SecurityResult> {
    s.validate()?;
    if !(m_db >= 0.0 && m_db.is_finite()) {
        return Err(Error::domain(format!(
            "magnification must be >= 0 dB, got {m_db}"
        )));
    }
    let eta = s.eta();
    let q_mu = gain(s.mu, eta, s.y0);
    let e_mu = qber(s.mu, eta, s.y0, s.e0, s.e_det);
    let q_nu = gain(s.nu, eta, s.y0);
    let e_nu = qber(s.nu, eta, s.y0, s.e0, s.e_det);
    let sp = match s.estimation {
        Estimation::DecoyBounds => decoy_bounds(s, q_mu, e_mu, q_nu, e_nu),
        Estimation::Oracle => oracle_single_photon(s, eta),
    };
    let delta_est = tagged_fraction_estimated(s.mu, sp.y1, q_mu)?;
    let attack = AttackParams::undetectable(s, m_db)?;
    let ps = attack_success_probability(s, &attack);
    let delta_pns = (ps.value / q_mu).clamp(0.0, 1.0);

    let r_est_raw = key_rate_raw(s.f_ec, delta_est, sp.e1, q_mu, e_mu);
    let r_pns_raw = key_rate_raw(s.f_ec, delta_pns, sp.e1, q_mu, e_mu);
    let r_actual_raw = r_est_raw.min(r_pns_raw);
    Ok(SecurityResult {
        m_db,
        distance_km: s.distance_km,
        q_mu,
        e_mu,
        q_nu,
        e_nu,
        y1_lower: sp.y1,
        e1_upper: sp.e1,
        delta_est,
        delta_pns,
        r_est: r_est_raw.max(0.0),
        r_actual: r_actual_raw.max(0.0),
        r_est_raw,
        r_actual_raw,
        p_s: ps.value,
        tail_bound: ps.tail_bound,
        bounds_clamped: sp.clamped,
    })
}

/// Evaluate every `(m_db, distance)` pair; rows are ordered by `m_db`
/// then distance.
pub fn sweep_key_rates(
    template: &QkdScenario,
    m_db: &[f64],
    distances_km: &[f64],
    exec: Execution,
) -> Result<Vec<SecurityResult>> {
    template.validate()?;
    let pairs: Vec<(f64, f64)> = m_db
        .iter()
        .flat_map(|&m| distances_km.iter().map(move |&d| (m, d)))
        .collect();
    exec.map(&pairs, |&(m, d)| {
        let s = QkdScenario {
            distance_km: d,
            ..template.clone()
        };
        evaluate(&s, m)
    })
    .into_iter()
    .collect()
}

/// Largest raw actual key rate over the distance grid.
pub fn best_actual_rate(
    template: &QkdScenario,
    m_db: f64,
    distances_km: &[f64],
    exec: Execution,
) -> Result<f64> {
    let rows = sweep_key_rates(template, &[m_db], distances_km, exec)?;
    Ok(rows
        .iter()
        .map(|r| r.r_actual_raw)
        .fold(f64::NEG_INFINITY, f64::max))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Threshold {
    pub m_db: f64,
    /// Coarse grid used for the monotonicity check: `(m_db, best rate)`.
    pub profile: Vec<(f64, f64)>,
    pub iterations: usize,
}

/// Smallest magnification at which no distance yields a positive key.
pub fn zero_key_threshold(
    template: &QkdScenario,
    range: (f64, f64),
    distances_km: &[f64],
    tol_db: f64,
    exec: Execution,
) -> Result<Threshold> {
    let (lo, hi) = range;
    if !(lo >= 0.0 && lo < hi && hi.is_finite()) {
        return Err(Error::NonBracketing { lo, hi });
    }
    if distances_km.is_empty() {
        return Err(Error::domain("empty distance grid"));
    }
    let g = |m: f64| best_actual_rate(template, m, distances_km, exec);

    const PROFILE_POINTS: usize = 21;
    let mut profile = Vec::with_capacity(PROFILE_POINTS);
    for k in 0..PROFILE_POINTS {
        let m = lo + (hi - lo) * k as f64 / (PROFILE_POINTS - 1) as f64;
        profile.push((m, g(m)?));
    }
    for w in profile.windows(2) {
        let (a, b) = (w[0].1, w[1].1);
        if b > a + 1e-15 * a.abs().max(1e-300) && b > 0.0 {
            return Err(Error::NonMonotone { m_db: w[1].0 });
        }
    }
    if !(profile[0].1 > 0.0) || profile[PROFILE_POINTS - 1].1 > 0.0 {
        return Err(Error::NonBracketing { lo, hi });
    }
    let (mut a, mut b) = (lo, hi);
    for w in profile.windows(2) {
        if w[0].1 > 0.0 && w[1].1 <= 0.0 {
            a = w[0].0;
            b = w[1].0;
            break;
        }
    }
    let mut iterations = 0;
    while b - a > tol_db {
        let mid = 0.5 * (a + b);
        if g(mid)? > 0.0 {
            a = mid;
        } else {
            b = mid;
        }
        iterations += 1;
    }
    Ok(Threshold {
        m_db: b,
        profile,
        iterations,
    })
}

/// `0, step, 2 step, ..., max` (inclusive when it lands on the grid).
pub fn distance_grid(max_km: f64, step_km: f64) -> Result<Vec<f64>> {
    if !(max_km >= 0.0 && step_km > 0.0 && max_km.is_finite()) {
        return Err(Error::domain("distance grid needs max >= 0 and step > 0"));
    }
    let n = (max_km / step_km + 1e-9).floor() as usize;
    Ok((0..=n).map(|k| k as f64 * step_km).collect())
}
