//! Phase-error bounds and key lengths for both protocols.

use crate::bounds::{sampling_gamma_lower, sampling_gamma_upper};
use crate::budget::{BoundUsage, Protocol, SecurityBudget};
use crate::channel::{
    arm_efficiency, decoy_gain, x_basis_observables_p1, z_basis_observables, SystemConfig,
};
use crate::decoy::{estimate_yields, expected_counts, yield_upper_bounds, DecoySettings};
use crate::decoy::{GainIntervals, PairTable, YieldBounds, ESTIMATED_PAIRS};
use crate::error::{Error, Result};
use crate::special::{ln_gamma, poisson};

pub use crate::special::binary_entropy;

/// Free parameters chosen by Alice and Bob (shared, symmetric channel).
/// The decoy fields are ignored by Protocol 1.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ProtocolParams {
    /// Signal intensity μ.
    pub mu: f64,
    /// Z-basis probability.
    pub p_z: f64,
    pub nu: f64,
    pub omega: f64,
    pub p_nu: f64,
    pub p_omega: f64,
}

impl Default for ProtocolParams {
    fn default() -> Self {
        ProtocolParams {
            mu: 0.02,
            p_z: 0.8,
            nu: 0.3,
            omega: 0.05,
            p_nu: 0.2,
            p_omega: 0.3,
        }
    }
}

impl ProtocolParams {
    pub fn decoy(&self) -> DecoySettings {
        DecoySettings {
            nu: self.nu,
            omega: self.omega,
            p_nu: self.p_nu,
            p_omega: self.p_omega,
            p_vac: 1.0 - self.p_nu - self.p_omega,
        }
    }

    pub fn validate(&self, protocol: Protocol) -> Result<()> {
        if !(self.mu > 0.0) || !self.mu.is_finite() {
            return Err(Error::InvalidParameter("mu"));
        }
        if !(self.p_z > 0.0 && self.p_z < 1.0) {
            return Err(Error::InvalidParameter("p_z"));
        }
        if protocol == Protocol::P2 {
            self.decoy().validate()?;
        }
        Ok(())
    }
}

/// Evaluation options that are policy rather than physics.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EngineOptions {
    /// Abort threshold on the phase-error bound.
    pub phi_tol: f64,
    /// Relative cutoff for the phase-error gain series.
    pub truncation_eps: f64,
    /// When false, every statistical fluctuation and finite-size penalty
    /// is dropped and the key length is not rounded.
    pub finite_size: bool,
}

impl Default for EngineOptions {
    fn default() -> Self {
        EngineOptions {
            phi_tol: 0.5,
            truncation_eps: 1e-15,
            finite_size: true,
        }
    }
}

impl EngineOptions {
    pub fn asymptotic() -> Self {
        EngineOptions {
            finite_size: false,
            ..EngineOptions::default()
        }
    }
}

/// Why a run produced no key.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AbortReason {
    /// No Z-basis detections.
    NoSignal,
    /// Fewer than one bit in a population the sampling bound needs.
    NoStatistics,
    /// Phase-error bound at or above the abort threshold.
    PhaseErrorTooHigh,
    /// Key length not positive after penalties.
    NonPositiveKey,
    /// A root solver failed to converge.
    SolverFailure,
}

/// Intermediate quantities of one evaluation.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Diagnostics {
    pub eta: f64,
    pub q_z: f64,
    pub e_z: f64,
    /// Sifted Z-basis key length before privacy amplification.
    pub n: f64,
    /// X-basis sample size (`k` or `k̲`).
    pub k: f64,
    /// Observed (P1) or bounded (P2) X-basis error rate.
    pub e_x: f64,
    /// Sampling deviation added to the X-basis error rate.
    pub gamma: f64,
    /// Upper bound on the X-basis error gain (P2).
    pub q_x_error_upper: f64,
    /// Key length before rounding and clamping.
    pub ell_raw: f64,
    pub usage: BoundUsage,
    /// Observed-yield bounds (P2 finite-size runs).
    pub yields: Option<YieldBounds>,
    /// Decoy numerators clamped at zero (P2).
    pub clamped_yields: u32,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KeyRateResult {
    /// Secret key length in bits.
    pub ell: f64,
    /// Key bits per pulse, `ℓ/N`.
    pub rate: f64,
    pub phi_z: f64,
    pub leak_ec: f64,
    pub e_x_upper: Option<f64>,
    pub q_x_lower: Option<f64>,
    pub aborted: bool,
    pub abort_reason: Option<AbortReason>,
    pub diagnostics: Diagnostics,
}

impl KeyRateResult {
    fn abort(reason: AbortReason, diagnostics: Diagnostics) -> Self {
        KeyRateResult {
            ell: 0.0,
            rate: 0.0,
            phi_z: f64::NAN,
            leak_ec: 0.0,
            e_x_upper: None,
            q_x_lower: None,
            aborted: true,
            abort_reason: Some(reason),
            diagnostics,
        }
    }
}

/// Error-correction leakage `n ζ h(E_Z)`.
pub fn leak_ec(n: f64, e_z: f64, zeta: f64) -> Result<f64> {
    if !(zeta >= 1.0) {
        return Err(Error::InvalidParameter("ec_efficiency"));
    }
    Ok(n * zeta * binary_entropy(e_z)?)
}

/// Phase-error bound of Protocol 1, `E_X + γ(n, k, E_X, ε₁)`, unclamped.
/// Records one sampling-bound use.
pub fn phase_error_p1(n: f64, k: f64, e_x: f64, eps1: f64, usage: &mut BoundUsage) -> Result<f64> {
    let sol = sampling_gamma_upper(n, k, e_x, eps1)?;
    usage.sampling += 1;
    if !sol.converged {
        return Err(Error::Domain("sampling bound did not converge"));
    }
    Ok(e_x + sol.value)
}

/// Lower bound on the X-basis gain of Protocol 2,
/// `Q_Z - γ̂(N_X, N_Z, Q_Z, ε₁)`, zero when no lower root exists.
/// Records one sampling-bound use.
pub fn q_x_lower_p2(q_z: f64, n_total: f64, p_z: f64, eps1: f64, usage: &mut BoundUsage) -> Result<f64> {
    let n_z = n_total * p_z * p_z;
    let n_x = n_total * (1.0 - p_z) * (1.0 - p_z);
    let lower = sampling_gamma_lower(n_x, n_z, q_z, eps1)?;
    usage.sampling += 1;
    Ok(match lower {
        Some(sol) => (q_z - sol.value).max(0.0),
        None => 0.0,
    })
}

/// `√P_j^μ`, the square root of a Poisson weight.
fn sqrt_poisson(j: u32, mu: f64) -> f64 {
    if mu <= 0.0 {
        return if j == 0 { 1.0 } else { 0.0 };
    }
    let jf = f64::from(j);
    libm::exp(0.5 * (-mu + jf * libm::log(mu) - ln_gamma(jf + 1.0)))
}

/// `Σ_j √P_{2j+parity}^μ`, stopped once a term past the mode drops below
/// `truncation_eps` of the running sum.
fn sqrt_poisson_series(mu: f64, parity: u32, truncation_eps: f64) -> f64 {
    let mut sum = 0.0;
    let mut j = parity;
    loop {
        let t = sqrt_poisson(j, mu);
        sum += t;
        if (f64::from(j) > mu && t <= truncation_eps * sum) || j > 10_000 {
            return sum;
        }
        j += 2;
    }
}

/// Upper bound on the X-basis error gain,
/// `(Σ √(P_{2n} P_{2m} Ȳ_{2n,2m}))² + (Σ √(P_{2n+1} P_{2m+1} Ȳ_{2n+1,2m+1}))²`,
/// with `Ȳ` set to `yields.tail` (one in practice) for every pair that is
/// not estimated.
///
/// Evaluated as the uniform-yield series corrected by the estimated pairs.
pub fn error_gain_upper_p2(yields: &YieldBounds, mu: f64, truncation_eps: f64) -> f64 {
    let root_tail = libm::sqrt(yields.tail);
    let mut even = root_tail * libm::pow(sqrt_poisson_series(mu, 0, truncation_eps), 2.0);
    let mut odd = root_tail * libm::pow(sqrt_poisson_series(mu, 1, truncation_eps), 2.0);
    for (i, &(n, m)) in ESTIMATED_PAIRS.iter().enumerate() {
        let w = sqrt_poisson(n, mu) * sqrt_poisson(m, mu);
        let shortfall = w * (root_tail - libm::sqrt(yields.values[i]));
        if n % 2 == 0 {
            even -= shortfall;
        } else {
            odd -= shortfall;
        }
    }
    let (even, odd) = (even.max(0.0), odd.max(0.0));
    even * even + odd * odd
}

fn key_length(n: f64, phi_z: f64, leak: f64, penalty: f64) -> Result<(f64, f64)> {
    if !(0.0..=0.5).contains(&phi_z) {
        return Err(Error::Domain("phase error bound must lie in [0, 1/2]"));
    }
    let raw = n * (1.0 - binary_entropy(phi_z)?) - leak - penalty;
    Ok((libm::floor(raw).max(0.0), raw))
}

/// Key length of Protocol 1,
/// `⌊n[1-h(φ_Z)] - leak_EC - log₂(2/ε_cor) - 2log₂(2/ε_sec)⌋`, at least 0.
///
/// ```
/// use tfqkd_core::budget::{Protocol, SecurityBudget};
/// use tfqkd_core::engine::key_length_p1;
/// let b = SecurityBudget::new(1e-10, 1e-15, Protocol::P1).unwrap();
/// assert_eq!(key_length_p1(1e6, 0.05, 1e5, &b).unwrap(), 613_483.0);
/// ```
pub fn key_length_p1(n: f64, phi_z: f64, leak: f64, budget: &SecurityBudget) -> Result<f64> {
    let b = SecurityBudget {
        protocol: Protocol::P1,
        ..*budget
    };
    Ok(key_length(n, phi_z, leak, b.penalty_bits())?.0)
}

/// Key length of Protocol 2, with the penalty `2log₂(31/(2ε_sec))`.
pub fn key_length_p2(n: f64, phi_z: f64, leak: f64, budget: &SecurityBudget) -> Result<f64> {
    let b = SecurityBudget {
        protocol: Protocol::P2,
        ..*budget
    };
    Ok(key_length(n, phi_z, leak, b.penalty_bits())?.0)
}

fn validate_all(
    cfg: &SystemConfig,
    params: &ProtocolParams,
    budget: &SecurityBudget,
    protocol: Protocol,
) -> Result<()> {
    cfg.validate()?;
    budget.validate()?;
    params.validate(protocol)
}

/// Finishes an evaluation once `φ_Z` is known.
fn finish(
    cfg: &SystemConfig,
    budget: &SecurityBudget,
    opts: &EngineOptions,
    phi_z: f64,
    mut d: Diagnostics,
) -> Result<KeyRateResult> {
    if !(phi_z < opts.phi_tol) || phi_z >= 0.5 {
        return Ok(KeyRateResult::abort(AbortReason::PhaseErrorTooHigh, d));
    }
    let leak = leak_ec(d.n, d.e_z, cfg.ec_efficiency)?;
    let penalty = if opts.finite_size {
        budget.penalty_bits()
    } else {
        0.0
    };
    let (floored, raw) = key_length(d.n, phi_z, leak, penalty)?;
    d.ell_raw = raw;
    let ell = if opts.finite_size { floored } else { raw.max(0.0) };
    let mut result = KeyRateResult {
        ell,
        rate: ell / cfg.total_pulses,
        phi_z,
        leak_ec: leak,
        e_x_upper: None,
        q_x_lower: None,
        aborted: false,
        abort_reason: None,
        diagnostics: d,
    };
    if !(ell > 0.0) {
        result.ell = 0.0;
        result.rate = 0.0;
        result.aborted = true;
        result.abort_reason = Some(AbortReason::NonPositiveKey);
    }
    Ok(result)
}

/// Key rate of Protocol 1 at one parameter point.
pub fn evaluate_p1(
    cfg: &SystemConfig,
    params: &ProtocolParams,
    budget: &SecurityBudget,
    opts: &EngineOptions,
) -> Result<KeyRateResult> {
    validate_all(cfg, params, budget, Protocol::P1)?;
    let budget = SecurityBudget {
        protocol: Protocol::P1,
        ..*budget
    };
    let eta = arm_efficiency(cfg);
    let z = z_basis_observables(params.mu, eta, cfg);
    let (q_x, e_x) = x_basis_observables_p1(params.mu, eta, cfg);
    let mut d = Diagnostics {
        eta,
        q_z: z.q_z,
        ..Diagnostics::default()
    };
    let (Some(e_z), Some(e_x)) = (z.e_z, e_x) else {
        return Ok(KeyRateResult::abort(AbortReason::NoSignal, d));
    };
    let big_n = cfg.total_pulses;
    d.e_z = e_z;
    d.e_x = e_x;
    d.n = big_n * params.p_z * params.p_z * z.q_z;
    d.k = big_n * (1.0 - params.p_z) * (1.0 - params.p_z) * q_x;

    let phi_z = if opts.finite_size {
        if d.n < 1.0 || d.k < 1.0 {
            return Ok(KeyRateResult::abort(AbortReason::NoStatistics, d));
        }
        let phi = match phase_error_p1(d.n, d.k, e_x, budget.part(), &mut d.usage) {
            Ok(phi) => phi,
            Err(Error::Domain(_)) => {
                return Ok(KeyRateResult::abort(AbortReason::SolverFailure, d));
            }
            Err(e) => return Err(e),
        };
        d.usage.check(Protocol::P1)?;
        d.gamma = phi - e_x;
        phi
    } else {
        e_x
    };
    finish(cfg, &budget, opts, phi_z, d)
}

/// Exact decoy gains for the configured channel.
pub fn channel_gains(cfg: &SystemConfig, eta: f64, decoy: &DecoySettings) -> PairTable {
    let s = decoy.intensities();
    let mut q = [[0.0; 3]; 3];
    for a in 0..3 {
        for b in 0..3 {
            q[a][b] = decoy_gain(s[a], s[b], eta, cfg.dark_rate);
        }
    }
    q
}

/// Key rate of Protocol 2 at one parameter point.
///
/// Uses two sampling bounds, nine Chernoff bounds and seventeen
/// inverse-Chernoff bounds; an evaluation that reaches the key-length step
/// with any other count fails with [`Error::BudgetMismatch`].
pub fn evaluate_p2(
    cfg: &SystemConfig,
    params: &ProtocolParams,
    budget: &SecurityBudget,
    opts: &EngineOptions,
) -> Result<KeyRateResult> {
    validate_all(cfg, params, budget, Protocol::P2)?;
    let budget = SecurityBudget {
        protocol: Protocol::P2,
        ..*budget
    };
    let eps = budget.part();
    let eta = arm_efficiency(cfg);
    let z = z_basis_observables(params.mu, eta, cfg);
    let mut d = Diagnostics {
        eta,
        q_z: z.q_z,
        ..Diagnostics::default()
    };
    let Some(e_z) = z.e_z else {
        return Ok(KeyRateResult::abort(AbortReason::NoSignal, d));
    };
    d.e_z = e_z;
    let big_n = cfg.total_pulses;
    let n_x = big_n * (1.0 - params.p_z) * (1.0 - params.p_z);
    d.n = big_n * params.p_z * params.p_z * z.q_z;

    let decoy = params.decoy();
    let gains = channel_gains(cfg, eta, &decoy);
    let (yields, q_x_lower) = if opts.finite_size {
        let counts = expected_counts(&gains, n_x, &decoy);
        let est = estimate_yields(&counts, n_x, &decoy, eps, eps, &mut d.usage)?;
        d.clamped_yields = est.expected_yields.clamped_negative.iter().filter(|&&c| c).count() as u32;
        d.yields = Some(est.observed_yields);
        let q_x_lower = q_x_lower_p2(z.q_z, big_n, params.p_z, eps, &mut d.usage)?;
        (est.observed_yields, q_x_lower)
    } else {
        let exact = GainIntervals {
            lower: gains,
            upper: gains,
        };
        let y = yield_upper_bounds(&exact, &decoy)?;
        d.clamped_yields = y.clamped_negative.iter().filter(|&&c| c).count() as u32;
        (y, z.q_z)
    };

    d.k = n_x * q_x_lower;
    d.q_x_error_upper = error_gain_upper_p2(&yields, params.mu, opts.truncation_eps);
    if !(q_x_lower > 0.0) || (opts.finite_size && d.k < 1.0) {
        return Ok(KeyRateResult::abort(AbortReason::NoStatistics, d));
    }
    let e_x_upper = (d.q_x_error_upper / q_x_lower).min(1.0);
    d.e_x = e_x_upper;
    if e_x_upper >= 0.5 {
        return Ok(with_p2_fields(
            KeyRateResult::abort(AbortReason::PhaseErrorTooHigh, d),
            e_x_upper,
            q_x_lower,
        ));
    }

    let phi_z = if opts.finite_size {
        if d.n < 1.0 {
            return Ok(KeyRateResult::abort(AbortReason::NoStatistics, d));
        }
        let sol = sampling_gamma_upper(d.n, d.k, e_x_upper, eps)?;
        d.usage.sampling += 1;
        d.usage.check(Protocol::P2)?;
        if !sol.converged {
            return Ok(KeyRateResult::abort(AbortReason::SolverFailure, d));
        }
        d.gamma = sol.value;
        e_x_upper + sol.value
    } else {
        e_x_upper
    };
    let r = finish(cfg, &budget, opts, phi_z, d)?;
    Ok(with_p2_fields(r, e_x_upper, q_x_lower))
}

fn with_p2_fields(mut r: KeyRateResult, e_x_upper: f64, q_x_lower: f64) -> KeyRateResult {
    r.e_x_upper = Some(e_x_upper);
    r.q_x_lower = Some(q_x_lower);
    r
}

/// Dispatches on the protocol.
pub fn evaluate(
    protocol: Protocol,
    cfg: &SystemConfig,
    params: &ProtocolParams,
    budget: &SecurityBudget,
    opts: &EngineOptions,
) -> Result<KeyRateResult> {
    match protocol {
        Protocol::P1 => evaluate_p1(cfg, params, budget, opts),
        Protocol::P2 => evaluate_p2(cfg, params, budget, opts),
    }
}

/// Direct double sum of the phase-error gain bound over `terms` photon
/// numbers per side, for cross-checking [`error_gain_upper_p2`].
pub fn error_gain_upper_direct(yields: &YieldBounds, mu: f64, terms: u32) -> f64 {
    let mut even = 0.0;
    let mut odd = 0.0;
    for i in 0..terms {
        for j in 0..terms {
            even += libm::sqrt(poisson(2 * i, mu) * poisson(2 * j, mu) * yields.get(2 * i, 2 * j));
            odd += libm::sqrt(
                poisson(2 * i + 1, mu) * poisson(2 * j + 1, mu) * yields.get(2 * i + 1, 2 * j + 1),
            );
        }
    }
    even * even + odd * odd
}
