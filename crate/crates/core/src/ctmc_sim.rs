//! Exact simulation of the finite game under a feedback policy.
//!
//! Jumps are sampled by thinning: proposals arrive at total rate
//! `n·R` with `R = 2T + η`, pick a player uniformly, and are accepted with
//! probability `(α + η)/R`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::master_entropy::EntropySolver;
use crate::mfg_enumerator::{entropy_select, recover_trajectories, MfgSolution};
use crate::nplayer_hjb::PolicyGrid;
use crate::real::Real;
use crate::scalar_model::ModelParams;

/// Decentralized control `α̃(t, i) = (u_i(t) − u_{1−i}(t))₊` along one
/// equilibrium, piecewise constant on its mesh.
#[derive(Debug, Clone, Serialize)]
pub struct MfgPolicy<S> {
    pub times: Vec<S>,
    /// `u1 − u0` on the mesh.
    pub y: Vec<S>,
}

impl<S: Real> MfgPolicy<S> {
    pub fn from_solution(sol: &MfgSolution<S>) -> Self {
        Self { times: sol.times.clone(), y: sol.y.clone() }
    }

    /// Policy of the entropy-selected equilibrium of `params`.
    pub fn entropy(params: &ModelParams<S>) -> Result<Self> {
        Ok(Self::from_solution(&entropy_select(params)?.1))
    }

    pub fn rate(&self, t: S, i: usize) -> Result<S> {
        let last = *self.times.last().unwrap_or(&S::zero());
        if !(t >= S::zero() && t <= last) || i > 1 {
            return Err(Error::Config(format!("policy lookup (t = {t}, i = {i}) outside [0, {last}] x {{0,1}}")));
        }
        let j = self.times.partition_point(|&s| s <= t).saturating_sub(1).min(self.times.len() - 2);
        let y = self.y[j];
        Ok(if i == 1 { y.positive_part() } else { (-y).positive_part() })
    }
}

#[derive(Debug, Clone, Serialize)]
pub enum Policy<S> {
    /// Nash feedback of the finite game; lookups use the focal-excluded
    /// fraction on the `N`-denominator grid.
    NashGrid(PolicyGrid<S>),
    EntropyMfg(MfgPolicy<S>),
}

#[derive(Debug, Clone, Copy, Serialize)]
pub enum InitialCondition<S> {
    /// The first `zeros` players start at state 0, the rest at state 1.
    Deterministic { zeros: usize },
    /// Each player starts at state 0 with probability `theta_bar`.
    Iid { theta_bar: S },
}

#[derive(Debug, Clone, Serialize)]
pub struct SimConfig<S> {
    pub n_players: usize,
    pub policy: Policy<S>,
    pub eta: S,
    pub horizon: S,
    pub initial: InitialCondition<S>,
    pub n_runs: usize,
    pub seed: u64,
    /// Points of the uniform reporting mesh on `[0, T]`.
    pub report_points: usize,
}

impl<S: Real> SimConfig<S> {
    pub fn rate_bound(&self) -> S {
        S::lit(2.0) * self.horizon + self.eta
    }

    fn validate(&self) -> Result<()> {
        if self.n_players < 1 || self.n_runs < 1 {
            return Err(Error::InvalidParameter("need at least one player and one run".into()));
        }
        if !(self.horizon > S::zero()) || !(self.eta >= S::zero()) {
            return Err(Error::InvalidParameter(format!("horizon {} and eta {} must be > 0, >= 0", self.horizon, self.eta)));
        }
        match &self.policy {
            Policy::NashGrid(g) => {
                if g.n_others + 1 != self.n_players {
                    return Err(Error::Config(format!(
                        "policy grid built for {} players, simulating {}",
                        g.n_others + 1,
                        self.n_players
                    )));
                }
                if (g.horizon - self.horizon).abs() > S::epsilon() * self.horizon {
                    return Err(Error::Config(format!("policy grid horizon {} differs from {}", g.horizon, self.horizon)));
                }
            }
            Policy::EntropyMfg(p) => {
                if p.times.len() < 2 || *p.times.last().unwrap() < self.horizon {
                    return Err(Error::Config("entropy policy does not cover the horizon".into()));
                }
            }
        }
        match self.initial {
            InitialCondition::Deterministic { zeros } if zeros > self.n_players => {
                Err(Error::InvalidParameter(format!("{zeros} players at state 0 out of {}", self.n_players)))
            }
            InitialCondition::Iid { theta_bar } if !(theta_bar >= S::zero() && theta_bar <= S::one()) => {
                Err(Error::InvalidParameter(format!("theta_bar = {theta_bar} outside [0, 1]")))
            }
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Event<S> {
    pub time: S,
    pub player: usize,
    pub new_state: u8,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunPath<S> {
    pub initial_states: Vec<u8>,
    pub events: Vec<Event<S>>,
    /// `θ^{N+1}` on the reporting mesh.
    pub theta: Vec<S>,
    pub terminal_theta: S,
}

impl<S: Real> RunPath<S> {
    /// Fraction of all players at state 0 after each event, starting from
    /// the initial configuration.
    pub fn theta_trajectory(&self) -> Vec<S> {
        let n = self.initial_states.len();
        let mut zeros = self.initial_states.iter().filter(|&&z| z == 0).count();
        let mut out = Vec::with_capacity(self.events.len() + 1);
        out.push(S::lit(zeros as f64 / n as f64));
        for e in &self.events {
            if e.new_state == 0 {
                zeros += 1;
            } else {
                zeros -= 1;
            }
            out.push(S::lit(zeros as f64 / n as f64));
        }
        out
    }

    /// `|θ^{N+1} − 1/2|` never decreases along the path.
    pub fn majority_monotone(&self) -> bool {
        let half = S::lit(0.5);
        self.theta_trajectory().windows(2).all(|w| (w[1] - half).abs() >= (w[0] - half).abs())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct SideCounts {
    pub above_half: usize,
    pub below_half: usize,
    pub exactly_half: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct SimResult<S> {
    pub report_times: Vec<S>,
    pub paths: Vec<RunPath<S>>,
    pub terminal_thetas: Vec<S>,
    pub side_counts: SideCounts,
}

fn uniform<S: Real>(rng: &mut ChaCha8Rng) -> S {
    S::lit(rng.random::<f64>())
}

fn run_once<S: Real>(cfg: &SimConfig<S>, run: usize, report_times: &[S]) -> Result<RunPath<S>> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(run as u64);
    let n = cfg.n_players;
    let mut states: Vec<u8> = match cfg.initial {
        InitialCondition::Deterministic { zeros } => (0..n).map(|j| if j < zeros { 0 } else { 1 }).collect(),
        InitialCondition::Iid { theta_bar } => (0..n).map(|_| if uniform::<S>(&mut rng) < theta_bar { 0 } else { 1 }).collect(),
    };
    let initial_states = states.clone();
    let mut zeros = states.iter().filter(|&&z| z == 0).count();
    let bound = cfg.rate_bound();
    let total = bound * S::lit(n as f64);
    let nf = S::lit(n as f64);
    let mut events = Vec::new();
    let mut theta = Vec::with_capacity(report_times.len());
    let mut next_report = 0;
    let mut t = S::zero();
    loop {
        let u: S = uniform(&mut rng);
        t = t - (S::one() - u).ln() / total;
        let stop = t >= cfg.horizon;
        while next_report < report_times.len() && (report_times[next_report] < t || stop) {
            theta.push(S::lit(zeros as f64) / nf);
            next_report += 1;
        }
        if stop {
            break;
        }
        let j = rng.random_range(0..n);
        let i = states[j] as usize;
        let alpha = match &cfg.policy {
            Policy::NashGrid(g) => g.rate(t, i, zeros - usize::from(i == 0))?,
            Policy::EntropyMfg(p) => p.rate(t, i)?,
        };
        let rate = alpha + cfg.eta;
        if rate > bound {
            return Err(Error::Config(format!("jump rate {rate} exceeds the thinning bound {bound} at t = {t}")));
        }
        if uniform::<S>(&mut rng) * bound < rate {
            let new_state = 1 - states[j];
            states[j] = new_state;
            if new_state == 0 {
                zeros += 1;
            } else {
                zeros -= 1;
            }
            events.push(Event { time: t, player: j, new_state });
        }
    }
    Ok(RunPath { initial_states, events, theta, terminal_theta: S::lit(zeros as f64) / nf })
}

pub fn simulate<S: Real>(config: &SimConfig<S>) -> Result<SimResult<S>> {
    config.validate()?;
    let m = config.report_points.max(2);
    let report_times: Vec<S> = (0..m).map(|i| config.horizon * S::lit(i as f64 / (m - 1) as f64)).collect();
    let paths: Vec<RunPath<S>> =
        (0..config.n_runs).into_par_iter().map(|r| run_once(config, r, &report_times)).collect::<Result<_>>()?;
    let terminal_thetas: Vec<S> = paths.iter().map(|p| p.terminal_theta).collect();
    let mut side_counts = SideCounts::default();
    let half = S::lit(0.5);
    for &th in &terminal_thetas {
        if th > half {
            side_counts.above_half += 1;
        } else if th < half {
            side_counts.below_half += 1;
        } else {
            side_counts.exactly_half += 1;
        }
    }
    Ok(SimResult { report_times, paths, terminal_thetas, side_counts })
}

/// Two-sided normal quantile at 99%.
pub const Z_99: f64 = 2.576;

#[derive(Debug, Clone, Copy, Serialize)]
pub struct SelectionStats<S> {
    pub runs: usize,
    pub above_fraction: S,
    pub below_fraction: S,
    pub half_fraction: S,
    /// 99% normal-approximation interval for the above-half probability.
    pub above_interval: (S, S),
    /// 99% acceptance interval for the above-half fraction if sides are
    /// charged equally.
    pub equal_charge_interval: (S, S),
    pub equal_charge_consistent: bool,
    pub mean_above: Option<S>,
    pub mean_below: Option<S>,
    /// Terminal masses `θ(T)` of the equilibria `v = ±w₁(T)`, when given.
    pub branch_endpoints: Option<(S, S)>,
}

pub fn selection_stats<S: Real>(result: &SimResult<S>, branch_endpoints: Option<(S, S)>) -> SelectionStats<S> {
    let n = result.terminal_thetas.len();
    let nf = S::lit(n as f64);
    let c = result.side_counts;
    let p = S::lit(c.above_half as f64) / nf;
    let z = S::lit(Z_99);
    let se = (p * (S::one() - p) / nf).sqrt();
    let half = S::lit(0.5);
    let se0 = (half * half / nf).sqrt();
    let equal = (half - z * se0, half + z * se0);
    let mean = |pred: &dyn Fn(S) -> bool| {
        let v: Vec<S> = result.terminal_thetas.iter().copied().filter(|&t| pred(t)).collect();
        (!v.is_empty()).then(|| v.iter().copied().sum::<S>() / S::lit(v.len() as f64))
    };
    SelectionStats {
        runs: n,
        above_fraction: p,
        below_fraction: S::lit(c.below_half as f64) / nf,
        half_fraction: S::lit(c.exactly_half as f64) / nf,
        above_interval: (p - z * se, p + z * se),
        equal_charge_interval: equal,
        equal_charge_consistent: p >= equal.0 && p <= equal.1,
        mean_above: mean(&|t| t > half),
        mean_below: mean(&|t| t < half),
        branch_endpoints,
    }
}

/// `θ(T)` of the two equilibria `v = ±w₁(T)` at `θ̄ = 1/2`, ordered
/// (below half, above half).
pub fn branch_endpoints<S: Real>(eta: S, horizon: S) -> Result<(S, S)> {
    let solver = EntropySolver::new(eta)?;
    let w = solver.branch(horizon)?.lower;
    if w == S::zero() {
        return Err(Error::Precondition(format!("no shock at horizon {horizon}; the balanced equilibrium is unique")));
    }
    let params = ModelParams::new(eta, horizon, S::lit(0.5))?;
    let a = *recover_trajectories(w, &params)?.theta.last().unwrap();
    let b = *recover_trajectories(-w, &params)?.theta.last().unwrap();
    Ok((a.min(b), a.max(b)))
}

/// First jump time of `player` in every run, or `None` if it never jumped.
pub fn first_jump_times<S: Real>(result: &SimResult<S>, player: usize) -> Vec<Option<S>> {
    result.paths.iter().map(|p| p.events.iter().find(|e| e.player == player).map(|e| e.time)).collect()
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct KsReport {
    pub statistic: f64,
    pub critical: f64,
    pub pass: bool,
}

/// Asymptotic Kolmogorov–Smirnov critical value at level 1%.
pub const KS_1PCT: f64 = 1.628;

/// One-sample KS test against `Exp(rate)`; unobserved samples count as
/// lying beyond every finite time.
pub fn ks_exponential<S: Real>(samples: &[Option<S>], rate: S) -> KsReport {
    let n = samples.len();
    let mut xs: Vec<f64> = samples.iter().map(|s| s.map_or(f64::INFINITY, |v| v.as_f64())).collect();
    xs.sort_by(f64::total_cmp);
    let r = rate.as_f64();
    let mut d: f64 = 0.0;
    for (i, &x) in xs.iter().enumerate() {
        let f = if x.is_finite() { 1.0 - (-r * x).exp() } else { 1.0 };
        d = d.max(f - i as f64 / n as f64).max((i + 1) as f64 / n as f64 - f);
    }
    let critical = KS_1PCT / (n as f64).sqrt();
    KsReport { statistic: d, critical, pass: d <= critical }
}
