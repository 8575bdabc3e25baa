//! Energy-detection sensing math: per-node detection and false-alarm
//! probabilities, OR-rule fusion at the cluster head, and minimum cluster
//! sizing.
//!
//! Only the two special functions this needs are implemented: the
//! generalized Marcum Q-function of integer order and the regularized upper
//! incomplete gamma function of integer order. Both target absolute error
//! below 1e-9 (the Marcum series truncation bound is driven to 1e-12).
//!
//! Conventions: SNR is linear inside every formula; decibel conversion
//! happens only at configuration boundaries via [`snr_db_to_linear`]. The
//! noise model all values trace back to is unit variance per complex sample.

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum SensingError {
    #[error("non-finite input: {0}")]
    NonFinite(&'static str),
    #[error("{name} must lie in {range}, got {value}")]
    OutOfRange {
        name: &'static str,
        range: &'static str,
        value: f64,
    },
    #[error("order must be >= 1")]
    ZeroOrder,
    #[error("fusion input must contain at least one probability")]
    EmptyFusion,
}

/// Per-node energy detector parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SensingParams {
    /// Linear (not dB) SNR at the node.
    pub snr_linear: f64,
    /// Decision threshold on the energy statistic.
    pub energy_threshold: f64,
    /// Number of complex samples in one decision.
    pub num_samples: u32,
}

impl SensingParams {
    pub fn new(snr_linear: f64, energy_threshold: f64, num_samples: u32) -> Result<Self, SensingError> {
        if !snr_linear.is_finite() || !energy_threshold.is_finite() {
            return Err(SensingError::NonFinite("sensing params"));
        }
        if snr_linear <= 0.0 {
            return Err(SensingError::OutOfRange {
                name: "snr_linear",
                range: "(0, inf)",
                value: snr_linear,
            });
        }
        if energy_threshold < 0.0 {
            return Err(SensingError::OutOfRange {
                name: "energy_threshold",
                range: "[0, inf)",
                value: energy_threshold,
            });
        }
        if num_samples == 0 {
            return Err(SensingError::ZeroOrder);
        }
        Ok(SensingParams {
            snr_linear,
            energy_threshold,
            num_samples,
        })
    }
}

/// Per-node probabilities to fuse at the cluster head (all members of one
/// cluster, in any fixed order).
#[derive(Debug, Clone, PartialEq)]
pub struct FusionInput {
    probs: Vec<f64>,
}

impl FusionInput {
    pub fn new(probs: Vec<f64>) -> Result<Self, SensingError> {
        if probs.is_empty() {
            return Err(SensingError::EmptyFusion);
        }
        for &p in &probs {
            if !p.is_finite() {
                return Err(SensingError::NonFinite("fusion probability"));
            }
            if !(0.0..=1.0).contains(&p) {
                return Err(SensingError::OutOfRange {
                    name: "fusion probability",
                    range: "[0, 1]",
                    value: p,
                });
            }
        }
        Ok(FusionInput { probs })
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }
}

/// Global sensing performance targets.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PerformanceRequirement {
    /// Minimum acceptable global detection probability.
    pub min_global_detection: f64,
    /// Maximum acceptable global false-alarm probability.
    pub max_global_false_alarm: f64,
    /// Per-node false-alarm value plugged into the sizing formula.
    pub per_node_false_alarm_bound: f64,
}

impl PerformanceRequirement {
    pub fn new(qd_min: f64, qf_max: f64, pf_max: f64) -> Result<Self, SensingError> {
        for (name, v) in [
            ("min_global_detection", qd_min),
            ("max_global_false_alarm", qf_max),
            ("per_node_false_alarm_bound", pf_max),
        ] {
            if !v.is_finite() {
                return Err(SensingError::NonFinite(name));
            }
            if !(0.0 < v && v < 1.0) {
                return Err(SensingError::OutOfRange {
                    name,
                    range: "(0, 1)",
                    value: v,
                });
            }
        }
        Ok(PerformanceRequirement {
            min_global_detection: qd_min,
            max_global_false_alarm: qf_max,
            per_node_false_alarm_bound: pf_max,
        })
    }
}

/// Convert a decibel SNR to the linear ratio used everywhere internally.
pub fn snr_db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// ln Gamma(x) by the Lanczos approximation (g = 5, 6 coefficients),
/// accurate to ~1e-13 relative for x > 0.
fn ln_gamma(x: f64) -> f64 {
    const COEFFS: [f64; 6] = [
        76.18009172947146,
        -86.50532032941677,
        24.01409824083091,
        -1.231739572450155,
        0.1208650973866179e-2,
        -0.5395239384953e-5,
    ];
    debug_assert!(x > 0.0);
    let mut sum = 1.000000000190015_f64;
    for (i, &c) in COEFFS.iter().enumerate() {
        sum += c / (x + 1.0 + i as f64);
    }
    let tmp = x + 5.5;
    (x + 0.5) * tmp.ln() - tmp + (2.5066282746310005 * sum / x).ln()
}

/// Regularized upper incomplete gamma function Gamma(u, x) / Gamma(u) for
/// integer order, via the finite Poisson sum
/// `exp(-x) * sum_{j<u} x^j / j!`, switching to log-space accumulation when
/// `exp(-x)` would underflow.
pub fn regularized_upper_gamma(order: u32, x: f64) -> Result<f64, SensingError> {
    if order == 0 {
        return Err(SensingError::ZeroOrder);
    }
    if !x.is_finite() {
        return Err(SensingError::NonFinite("x"));
    }
    if x < 0.0 {
        return Err(SensingError::OutOfRange {
            name: "x",
            range: "[0, inf)",
            value: x,
        });
    }
    if x == 0.0 {
        return Ok(1.0);
    }
    let u = order as u64;
    if x < 700.0 {
        // Direct evaluation; terms are positive so no cancellation.
        let mut term = (-x).exp();
        let mut sum = term;
        for j in 1..u {
            term *= x / j as f64;
            sum += term;
        }
        Ok(sum.min(1.0))
    } else {
        // exp(-x) underflows; accumulate from the largest term in log space.
        let j_max = (x.floor() as u64).min(u - 1);
        let ln_peak = -x + j_max as f64 * x.ln() - ln_gamma(j_max as f64 + 1.0);
        let mut sum = 0.0_f64;
        // Downward from the peak.
        let mut term = 1.0_f64;
        let mut j = j_max;
        loop {
            sum += term;
            if j == 0 || term < 1e-18 {
                break;
            }
            term *= j as f64 / x;
            j -= 1;
        }
        // Upward from the peak.
        term = 1.0;
        for j in (j_max + 1)..u {
            term *= x / j as f64;
            sum += term;
            if term < 1e-18 {
                break;
            }
        }
        Ok((ln_peak + sum.ln()).exp().min(1.0))
    }
}

/// Generalized Marcum Q-function `Q_u(a, b)` for integer order `u >= 1`.
///
/// Evaluated as the Poisson mixture of central chi-square tails: with
/// `x = a^2/2` and `y = b^2/2`,
/// `Q_u(a, b) = sum_n pois(n; x) * Q_gamma(u + n, y)`.
/// Summation starts at the Poisson mode and expands outward; since every
/// gamma tail factor lies in [0, 1], the neglected mass bounds the absolute
/// truncation error, which is driven below 1e-12.
pub fn marcum_q(order: u32, a: f64, b: f64) -> Result<f64, SensingError> {
    const TOL: f64 = 1e-12;
    if order == 0 {
        return Err(SensingError::ZeroOrder);
    }
    if !a.is_finite() || !b.is_finite() {
        return Err(SensingError::NonFinite("marcum argument"));
    }
    if a < 0.0 || b < 0.0 {
        return Err(SensingError::OutOfRange {
            name: "marcum argument",
            range: "[0, inf)",
            value: if a < 0.0 { a } else { b },
        });
    }
    let x = a * a / 2.0;
    let y = b * b / 2.0;
    if y == 0.0 {
        // Integral over the full support.
        return Ok(1.0);
    }
    if x == 0.0 {
        return regularized_upper_gamma(order, y);
    }

    // Poisson weights around the mode n0.
    let n0 = x.floor() as u64;
    let ln_w0 = -x + n0 as f64 * x.ln() - ln_gamma(n0 as f64 + 1.0);
    let w0 = ln_w0.exp();

    // Gamma tail at the mode and the stepping term
    // tau_n = exp(-y) y^(u+n) / (u+n)!  (G_{n+1} = G_n + tau_n).
    let g0 = regularized_upper_gamma(order + n0 as u32, y)?;
    let k0 = order as u64 + n0;
    let ln_tau0 = -y + k0 as f64 * y.ln() - ln_gamma(k0 as f64 + 1.0);
    let tau0 = ln_tau0.exp();

    let mut total = w0 * g0;

    // Upward sweep: n = n0+1, n0+2, ... The weight ratio x/(n+1) is < 1 and
    // shrinking past the mode, so the neglected tail (gamma factors <= 1) is
    // bounded by the geometric sum w * r / (1 - r).
    let mut w = w0;
    let mut g = g0;
    let mut tau = tau0;
    let mut n = n0;
    loop {
        let r = x / (n + 1) as f64;
        if w * r / (1.0 - r) <= TOL / 2.0 {
            break;
        }
        n += 1;
        w *= x / n as f64;
        g += tau;
        tau *= y / (order as u64 + n) as f64;
        total += w * g.min(1.0);
    }

    // Downward sweep: n = n0-1, ..., 0, with the symmetric bound on the
    // remaining weight (ratio n/x < 1 below the mode).
    if n0 > 0 {
        let mut w = w0;
        let mut g = g0;
        // tau_{n-1} = tau_n * (u+n) / y.
        let mut tau_prev = tau0 * k0 as f64 / y;
        let mut n = n0;
        while n > 0 {
            let r = n as f64 / x;
            if r < 0.99 && w * r / (1.0 - r) <= TOL / 2.0 {
                break;
            }
            n -= 1;
            w *= (n + 1) as f64 / x;
            g -= tau_prev;
            tau_prev *= (order as u64 + n) as f64 / y;
            total += w * g.clamp(0.0, 1.0);
        }
    }

    Ok(total.clamp(0.0, 1.0))
}

/// Detection probability of one node: `Q_u(sqrt(2 gamma), sqrt(eps))`.
pub fn node_detection_prob(p: &SensingParams) -> Result<f64, SensingError> {
    marcum_q(
        p.num_samples,
        (2.0 * p.snr_linear).sqrt(),
        p.energy_threshold.sqrt(),
    )
}

/// False-alarm probability of one node: `Gamma(u, eps/2) / Gamma(u)`.
/// Independent of SNR.
pub fn node_false_alarm_prob(energy_threshold: f64, num_samples: u32) -> Result<f64, SensingError> {
    if !energy_threshold.is_finite() {
        return Err(SensingError::NonFinite("energy_threshold"));
    }
    if energy_threshold < 0.0 {
        return Err(SensingError::OutOfRange {
            name: "energy_threshold",
            range: "[0, inf)",
            value: energy_threshold,
        });
    }
    regularized_upper_gamma(num_samples, energy_threshold / 2.0)
}

/// OR-rule fusion: the cluster reports presence if at least one member does.
/// Returns `1 - prod(1 - p_j)`.
pub fn or_fusion(f: &FusionInput) -> f64 {
    let miss_all: f64 = f.probs().iter().map(|p| 1.0 - p).product();
    (1.0 - miss_all).clamp(0.0, 1.0)
}

/// Both global constraints, boundary inclusive: `qd >= Qd_min` and
/// `qf <= Qf_max`.
pub fn meets_requirement(qd: f64, qf: f64, req: &PerformanceRequirement) -> bool {
    qd >= req.min_global_detection && qf <= req.max_global_false_alarm
}

/// Cluster size by the closed-form ceiling
/// `ceil(log(1 - Qf_max) / log(1 - Pf_max))`, evaluated verbatim.
///
/// The log ratio is snapped to the nearest integer when within 1e-9 of one,
/// so exact-ratio inputs (for example Qf = 1-(1-Pf)^2) are not pushed up a
/// step by floating-point noise. Note the ceiling can exceed the largest
/// size that actually satisfies the false-alarm constraint; see
/// [`max_size_by_search`] for the constraint-true value.
pub fn cluster_size_eq4(req: &PerformanceRequirement) -> u32 {
    let ratio = (1.0 - req.max_global_false_alarm).ln() / (1.0 - req.per_node_false_alarm_bound).ln();
    let snapped = if (ratio - ratio.round()).abs() < 1e-9 {
        ratio.round()
    } else {
        ratio.ceil()
    };
    (snapped.max(1.0)) as u32
}

/// Largest `S >= 1` whose OR-fused false alarm (all members at the per-node
/// bound) stays within `Qf_max`; 0 when a single node already violates it.
/// Found by linear search through the fused value, independent of
/// [`cluster_size_eq4`].
pub fn max_size_by_search(req: &PerformanceRequirement) -> u32 {
    let pf = req.per_node_false_alarm_bound;
    let qf_max = req.max_global_false_alarm;
    let mut miss_all = 1.0_f64;
    let mut s = 0u32;
    loop {
        let next_miss = miss_all * (1.0 - pf);
        let fused = 1.0 - next_miss;
        if fused > qf_max || s == u32::MAX {
            return s;
        }
        miss_all = next_miss;
        s += 1;
    }
}
