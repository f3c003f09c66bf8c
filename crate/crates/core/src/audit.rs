//! Empirical sanity check for DP mechanisms.
//!
//! The check builds the worst-case neighboring pair X = 0ⁿ, X′ = 1ⁿ (true
//! sensitivity Δ = n), runs the mechanism `trials` times on each side, and
//! mounts a reconstruction attack on every output: round each coordinate to
//! the closest of {0, 1} and take the majority. The attacker's precision on
//! each side is the MLE of the posterior probability of that side given the
//! attack's answer, and under uniform priors the log posterior-odds
//!
//! ```text
//! eps_forward  = ln( p_x / (1 − p_x′) )     // answer was "all zeros"
//! eps_backward = ln( p_x′ / (1 − p_x) )     // answer was "all ones"
//! ```
//!
//! are bounded by ε for any ε-DP mechanism, because the attack is mere
//! post-processing. An empirical loss above ε therefore certifies a
//! violation; a loss below ε proves nothing (the attack may just be weak).
//!
//! Trials are embarrassingly parallel: every trial derives its own uniform
//! stream from `(seed, side, trial_index)` and tallies are integer sums, so
//! results are bit-identical for any worker count.

use rayon::prelude::*;

use crate::mechanisms::{apply_into, MechanismKind};
use crate::samplers::{derive_seed, UniformStream};
use crate::Error;

/// The attack's answer: which dataset it believes produced the output.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Guess {
    Zeros,
    Ones,
}

/// How an exact tie in the majority vote is resolved (possible only at even
/// dimension).
///
/// `Ones` is the default: it extends the "≥ 0.5 rounds up" coordinate rule to
/// the vote itself and is what reproduces the reference measurements of the
/// wrong-sensitivity mechanism. `Coin` spends one uniform from a dedicated
/// per-trial stream; it halves the measured loss at n = 2 because ties carry
/// no information for the attacker.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TieBreak {
    #[default]
    Ones,
    Zeros,
    Coin,
}

/// Full description of one audit experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct AuditConfig {
    /// Dimension of the neighboring pair; the true sensitivity is Δ = n.
    pub n: usize,
    /// Privacy budget the mechanism claims to satisfy.
    pub epsilon: f64,
    /// Mechanism runs per dataset side.
    pub trials: u64,
    /// Full-experiment repetitions used to estimate spread.
    pub repeats: u32,
    pub master_seed: u64,
    pub mechanism: MechanismKind,
    pub tie_break: TieBreak,
    /// Slack added to ε before flagging a violation. `None` selects the
    /// default: 3× the spread across repeats, or 0.01 when repeats = 1.
    pub margin: Option<f64>,
}

impl AuditConfig {
    /// A config with the default tie rule and margin policy.
    pub fn new(
        n: usize,
        epsilon: f64,
        trials: u64,
        repeats: u32,
        master_seed: u64,
        mechanism: MechanismKind,
    ) -> Self {
        Self {
            n,
            epsilon,
            trials,
            repeats,
            master_seed,
            mechanism,
            tie_break: TieBreak::default(),
            margin: None,
        }
    }

    pub fn validate(&self) -> Result<(), Error> {
        if self.n == 0 {
            return Err(Error::ZeroDimension);
        }
        if !self.epsilon.is_finite() || self.epsilon <= 0.0 {
            return Err(Error::NonPositiveEpsilon(self.epsilon));
        }
        if self.trials == 0 {
            return Err(Error::ZeroTrials);
        }
        if self.repeats == 0 {
            return Err(Error::ZeroRepeats);
        }
        if let Some(m) = self.margin {
            if m.is_nan() || m < 0.0 {
                return Err(Error::NegativeMargin(m));
            }
        }
        self.mechanism.validate()
    }
}

/// Attack outcomes over one experiment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct TrialTally {
    /// Times the attack answered Zeros when the input was X.
    pub correct_on_x: u64,
    /// Times the attack answered Ones when the input was X′.
    pub correct_on_xprime: u64,
    pub trials_per_side: u64,
}

/// The two directional losses and their maximum.
///
/// Extended-real conventions from the zero counts of the MLE: 0/positive is
/// −∞, positive/0 is +∞, and 0/0 is undetermined, carried as NaN and treated
/// as a non-violation everywhere.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossEstimate {
    pub forward: f64,
    pub backward: f64,
    pub emp: f64,
}

/// Outcome of a full audit.
#[derive(Debug, Clone, PartialEq)]
pub struct AuditResult {
    /// Pooled attacker precision on X over all repeats.
    pub p_x: f64,
    /// Pooled attacker precision on X′ over all repeats.
    pub p_xprime: f64,
    /// Directional losses of the pooled tally.
    pub eps_forward: f64,
    pub eps_backward: f64,
    /// max(eps_forward, eps_backward) of the pooled tally.
    pub eps_emp: f64,
    /// Mean of eps_emp across repeats; any infinite repeat makes it infinite.
    pub eps_emp_mean: f64,
    /// Sample standard deviation across repeats; undetermined (NaN) when any
    /// repeat is non-finite or there is only one repeat.
    pub eps_emp_std: f64,
    /// eps_emp of every repeat, in repeat order.
    pub per_repeat_eps: Vec<f64>,
    pub violated: bool,
}

/// Worst-case neighboring pair: X = 0ⁿ, X′ = 1ⁿ. True sensitivity Δ = n.
pub fn make_neighboring_pair(n: usize) -> Result<(Vec<f64>, Vec<f64>), Error> {
    if n == 0 {
        return Err(Error::ZeroDimension);
    }
    Ok((vec![0.0; n], vec![1.0; n]))
}

/// Round every coordinate to the closest of {0, 1} and majority-vote.
///
/// A coordinate votes one exactly when it is ≥ 0.5; NaN coordinates vote
/// zero, so the attack is total even on mechanisms that leak NaN. The coin
/// stream is consumed only on an exact tie under [`TieBreak::Coin`].
pub fn reconstruction_attack(z: &[f64], tie: TieBreak, tie_coin: &mut UniformStream) -> Guess {
    debug_assert!(!z.is_empty(), "attack needs a nonempty vector");
    let ones = z.iter().filter(|&&v| v >= 0.5).count();
    let zeros = z.len() - ones;
    if ones > zeros {
        Guess::Ones
    } else if zeros > ones {
        Guess::Zeros
    } else {
        match tie {
            TieBreak::Ones => Guess::Ones,
            TieBreak::Zeros => Guess::Zeros,
            TieBreak::Coin => {
                if tie_coin.next_uniform() < 0.5 {
                    Guess::Zeros
                } else {
                    Guess::Ones
                }
            }
        }
    }
}

// Stream-label domains; bit layout: [63:62] domain, [61] side, [60:0] trial.
const DOMAIN_NOISE: u64 = 0;
const DOMAIN_COIN: u64 = 1;

fn stream_label(domain: u64, side: u64, trial: u64) -> u64 {
    debug_assert!(domain < 4 && side < 2 && trial < (1 << 61));
    (domain << 62) | (side << 61) | trial
}

/// Run the mechanism `trials` times per side and tally attack outcomes.
///
/// Per-trial streams are derived from `(master_seed, side, trial_index)`;
/// the tally is an integer sum, so the result is bit-identical for any
/// worker count.
pub fn run_trials(config: &AuditConfig) -> Result<TrialTally, Error> {
    config.validate()?;
    run_trials_seeded(config, config.master_seed)
}

fn run_trials_seeded(config: &AuditConfig, seed: u64) -> Result<TrialTally, Error> {
    let (x, xprime) = make_neighboring_pair(config.n)?;
    let delta_true = config.n as f64;
    let tie = config.tie_break;
    let mech = config.mechanism;

    let one_side = |side: u64, input: &[f64], correct: Guess| -> Result<u64, Error> {
        (0..config.trials)
            .into_par_iter()
            .try_fold(
                || (0u64, Vec::with_capacity(config.n)),
                |(mut hits, mut z), trial| -> Result<(u64, Vec<f64>), Error> {
                    let mut noise =
                        UniformStream::new(seed, stream_label(DOMAIN_NOISE, side, trial));
                    apply_into(&mech, input, config.epsilon, delta_true, &mut noise, &mut z)?;
                    let mut coin =
                        UniformStream::new(seed, stream_label(DOMAIN_COIN, side, trial));
                    if reconstruction_attack(&z, tie, &mut coin) == correct {
                        hits += 1;
                    }
                    Ok((hits, z))
                },
            )
            .map(|r| r.map(|(hits, _)| hits))
            .try_reduce(|| 0, |a, b| Ok(a + b))
    };

    let correct_on_x = one_side(0, &x, Guess::Zeros)?;
    let correct_on_xprime = one_side(1, &xprime, Guess::Ones)?;
    Ok(TrialTally {
        correct_on_x,
        correct_on_xprime,
        trials_per_side: config.trials,
    })
}

/// ln(a/b) on counts with the zero conventions spelled out.
fn ln_count_ratio(numerator: u64, denominator: u64) -> f64 {
    match (numerator > 0, denominator > 0) {
        (true, true) => (numerator as f64 / denominator as f64).ln(),
        (false, true) => f64::NEG_INFINITY,
        (true, false) => f64::INFINITY,
        (false, false) => f64::NAN,
    }
}

/// Maximum that lets a determined value win over an undetermined one.
fn max_loss(a: f64, b: f64) -> f64 {
    if a.is_nan() {
        b
    } else if b.is_nan() {
        a
    } else {
        a.max(b)
    }
}

/// MLE privacy loss of a tally: the two posterior-odds directions and their
/// maximum.
pub fn empirical_loss(tally: &TrialTally) -> LossEstimate {
    let t = tally.trials_per_side;
    // p/(1-q) and q/(1-p) reduce to count ratios: exact at the boundaries
    let forward = ln_count_ratio(tally.correct_on_x, t - tally.correct_on_xprime);
    let backward = ln_count_ratio(tally.correct_on_xprime, t - tally.correct_on_x);
    LossEstimate {
        forward,
        backward,
        emp: max_loss(forward, backward),
    }
}

/// Mean and sample standard deviation under the extended-real conventions:
/// any undetermined repeat poisons both, mixed-sign infinities are
/// undetermined, a single-signed infinity propagates to the mean and leaves
/// the spread undetermined.
fn loss_mean_std(xs: &[f64]) -> (f64, f64) {
    if xs.iter().any(|x| x.is_nan()) {
        return (f64::NAN, f64::NAN);
    }
    let pos = xs.contains(&f64::INFINITY);
    let neg = xs.contains(&f64::NEG_INFINITY);
    match (pos, neg) {
        (true, true) => (f64::NAN, f64::NAN),
        (true, false) => (f64::INFINITY, f64::NAN),
        (false, true) => (f64::NEG_INFINITY, f64::NAN),
        (false, false) => {
            let n = xs.len() as f64;
            let mean = xs.iter().sum::<f64>() / n;
            if xs.len() < 2 {
                return (mean, f64::NAN);
            }
            let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
            (mean, var.sqrt())
        }
    }
}

fn is_violation(eps_emp_mean: f64, epsilon: f64, margin: f64) -> bool {
    if eps_emp_mean.is_nan() {
        return false;
    }
    if eps_emp_mean == f64::INFINITY {
        return true;
    }
    eps_emp_mean > epsilon + margin
}

/// Violation verdict for an audit result at the given budget and margin.
///
/// +∞ always violates; an undetermined loss never does.
pub fn check_violation(result: &AuditResult, epsilon: f64, margin: f64) -> Result<bool, Error> {
    if margin.is_nan() || margin < 0.0 {
        return Err(Error::NegativeMargin(margin));
    }
    Ok(is_violation(result.eps_emp_mean, epsilon, margin))
}

/// Run the full audit: `repeats` independent experiments with disjoint
/// derived seeds, pooled precisions, spread across repeats, and the verdict.
pub fn run_audit(config: &AuditConfig) -> Result<AuditResult, Error> {
    config.validate()?;
    let mut per_repeat_eps = Vec::with_capacity(config.repeats as usize);
    let mut pooled = TrialTally::default();
    for repeat in 0..config.repeats {
        let seed = derive_seed(config.master_seed, repeat as u64);
        let tally = run_trials_seeded(config, seed)?;
        per_repeat_eps.push(empirical_loss(&tally).emp);
        pooled.correct_on_x += tally.correct_on_x;
        pooled.correct_on_xprime += tally.correct_on_xprime;
        pooled.trials_per_side += tally.trials_per_side;
    }
    let pooled_loss = empirical_loss(&pooled);
    let (eps_emp_mean, eps_emp_std) = loss_mean_std(&per_repeat_eps);
    let margin = config.margin.unwrap_or_else(|| {
        if config.repeats > 1 && eps_emp_std.is_finite() {
            3.0 * eps_emp_std
        } else {
            0.01
        }
    });
    Ok(AuditResult {
        p_x: pooled.correct_on_x as f64 / pooled.trials_per_side as f64,
        p_xprime: pooled.correct_on_xprime as f64 / pooled.trials_per_side as f64,
        eps_forward: pooled_loss.forward,
        eps_backward: pooled_loss.backward,
        eps_emp: pooled_loss.emp,
        eps_emp_mean,
        eps_emp_std,
        per_repeat_eps,
        violated: is_violation(eps_emp_mean, config.epsilon, margin),
    })
}
