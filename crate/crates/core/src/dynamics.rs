//! Opinion fusion rules and period-structured simulation.
//!
//! One micro time step is one social interaction. DW and ATBCR draw a random
//! edge and update both endpoints from their pre-update values; FJ draws a
//! random agent and pulls it towards the mean of its neighbors, anchored to
//! the opinion it held at the start of the horizon.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::SocialNetwork;

#[derive(Debug, Clone, PartialEq)]
pub struct OpinionProfile(Vec<f64>);

impl OpinionProfile {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some((i, x)) = values.iter().enumerate().find(|(_, x)| !(0.0..=1.0).contains(*x)) {
            return Err(Error::InvalidParameter(format!("opinion of agent {i} is {x}, outside [0, 1]")));
        }
        Ok(Self(values))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn mean(&self) -> f64 {
        self.0.iter().sum::<f64>() / self.0.len() as f64
    }

    pub fn std_dev(&self) -> f64 {
        let mean = self.mean();
        let var = self.0.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / self.0.len() as f64;
        var.sqrt()
    }

    /// Number of maximal groups of sorted opinions whose consecutive members
    /// are at most `gap` apart.
    pub fn cluster_count(&self, gap: f64) -> usize {
        if self.0.is_empty() {
            return 0;
        }
        let mut sorted = self.0.clone();
        sorted.sort_by(f64::total_cmp);
        1 + sorted.windows(2).filter(|w| w[1] - w[0] > gap).count()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Model {
    Fj,
    Dw,
    Atbcr,
}

impl Model {
    pub const ALL: [Model; 3] = [Model::Fj, Model::Dw, Model::Atbcr];

    pub fn params_per_period(self) -> usize {
        match self {
            Model::Fj => 1,
            Model::Dw => 2,
            Model::Atbcr => 3,
        }
    }

    /// Names of the per-period parameters in genome order.
    pub fn param_names(self) -> &'static [&'static str] {
        match self {
            Model::Fj => &["xi"],
            Model::Dw => &["mu", "eps"],
            Model::Atbcr => &["mu", "eps", "theta"],
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Model::Fj => "fj",
            Model::Dw => "dw",
            Model::Atbcr => "atbcr",
        }
    }
}

impl fmt::Display for Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Model {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "fj" => Ok(Model::Fj),
            "dw" => Ok(Model::Dw),
            "atbcr" => Ok(Model::Atbcr),
            _ => Err(Error::InvalidParameter(format!("unknown model {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PeriodParams {
    Fj { xi: f64 },
    Dw { mu: f64, eps: f64 },
    Atbcr { mu: f64, eps: f64, theta: f64 },
}

impl PeriodParams {
    pub fn model(&self) -> Model {
        match self {
            PeriodParams::Fj { .. } => Model::Fj,
            PeriodParams::Dw { .. } => Model::Dw,
            PeriodParams::Atbcr { .. } => Model::Atbcr,
        }
    }

    /// Values in genome order, see [`Model::param_names`].
    pub fn values(&self) -> Vec<f64> {
        match *self {
            PeriodParams::Fj { xi } => vec![xi],
            PeriodParams::Dw { mu, eps } => vec![mu, eps],
            PeriodParams::Atbcr { mu, eps, theta } => vec![mu, eps, theta],
        }
    }

    pub fn from_values(model: Model, values: &[f64]) -> Result<Self> {
        match (model, values) {
            (Model::Fj, &[xi]) => Ok(PeriodParams::Fj { xi }),
            (Model::Dw, &[mu, eps]) => Ok(PeriodParams::Dw { mu, eps }),
            (Model::Atbcr, &[mu, eps, theta]) => Ok(PeriodParams::Atbcr { mu, eps, theta }),
            _ => Err(Error::InvalidGenome { expected: model.params_per_period(), actual: values.len() }),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParameterSchedule {
    periods: Vec<PeriodParams>,
    steps_per_period: usize,
}

impl ParameterSchedule {
    pub fn new(periods: Vec<PeriodParams>, steps_per_period: usize) -> Result<Self> {
        let Some(first) = periods.first() else {
            return Err(Error::InvalidParameter("schedule has no periods".into()));
        };
        let model = first.model();
        if periods.iter().any(|p| p.model() != model) {
            return Err(Error::InvalidParameter("schedule mixes model variants".into()));
        }
        if steps_per_period == 0 {
            return Err(Error::InvalidParameter("steps per period must be positive".into()));
        }
        Ok(Self { periods, steps_per_period })
    }

    pub fn model(&self) -> Model {
        self.periods[0].model()
    }

    pub fn periods(&self) -> &[PeriodParams] {
        &self.periods
    }

    pub fn len(&self) -> usize {
        self.periods.len()
    }

    pub fn is_empty(&self) -> bool {
        self.periods.is_empty()
    }

    pub fn steps_per_period(&self) -> usize {
        self.steps_per_period
    }
}

/// Proportion of concerned agents at the end of each period.
#[derive(Debug, Clone, PartialEq)]
pub struct ConcernSeries(pub Vec<f64>);

impl ConcernSeries {
    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// How FJ micro steps are scheduled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FjUpdate {
    /// One uniformly random agent per micro step.
    #[default]
    Asynchronous,
    /// Each block of `steps_per_sweep` micro steps is replaced by one
    /// synchronous sweep over all agents; a trailing partial block is dropped.
    Synchronous { steps_per_sweep: usize },
}

/// Mean taken relative to the first neighbor, exact when all neighbors agree.
#[inline]
fn neighbor_mean(state: &[f64], neighbors: &[usize]) -> f64 {
    let pivot = state[neighbors[0]];
    let shift: f64 = neighbors[1..].iter().map(|&j| state[j] - pivot).sum();
    pivot + shift / neighbors.len() as f64
}

/// `xi * social + (1 - xi) * anchor`, written so that `social == anchor` is a
/// fixed point for every `xi`.
#[inline]
fn fj_blend(xi: f64, social: f64, anchor: f64) -> f64 {
    (anchor + xi * (social - anchor)).clamp(0.0, 1.0)
}

/// FJ update of a single agent with weights `1 / deg(agent)`.
/// Isolated agents keep their opinion.
#[inline]
pub fn fj_step(
    state: &mut OpinionProfile,
    baseline: &OpinionProfile,
    network: &SocialNetwork,
    xi: f64,
    agent: usize,
) {
    let neighbors = network.neighbors(agent);
    if neighbors.is_empty() {
        return;
    }
    let social = neighbor_mean(&state.0, neighbors);
    state.0[agent] = fj_blend(xi, social, baseline.0[agent]);
}

/// DW pair update: both agents move towards each other when their gap is
/// strictly below `eps`.
#[inline]
pub fn dw_step(state: &mut OpinionProfile, mu: f64, eps: f64, pair: (usize, usize)) {
    let x = &mut state.0;
    let (i, j) = pair;
    let (xi, xj) = (x[i], x[j]);
    if (xi - xj).abs() < eps {
        x[i] = xi + mu * (xj - xi);
        x[j] = xj + mu * (xi - xj);
    }
}

/// ATBCR pair update: attraction as DW below `eps`, repulsion strictly above
/// `theta` with results truncated to `[0, 1]`, no change in between.
#[inline]
pub fn atbcr_step(state: &mut OpinionProfile, mu: f64, eps: f64, theta: f64, pair: (usize, usize)) {
    let x = &mut state.0;
    let (i, j) = pair;
    let (xi, xj) = (x[i], x[j]);
    let gap = (xi - xj).abs();
    if gap < eps {
        x[i] = xi + mu * (xj - xi);
        x[j] = xj + mu * (xi - xj);
    } else if gap > theta {
        x[i] = (xi - mu * (xj - xi)).clamp(0.0, 1.0);
        x[j] = (xj - mu * (xi - xj)).clamp(0.0, 1.0);
    }
}

fn fj_sweep(state: &mut OpinionProfile, baseline: &OpinionProfile, network: &SocialNetwork, xi: f64) {
    let next: Vec<f64> = (0..state.len())
        .map(|i| {
            let neighbors = network.neighbors(i);
            if neighbors.is_empty() {
                state.0[i]
            } else {
                fj_blend(xi, neighbor_mean(&state.0, neighbors), baseline.0[i])
            }
        })
        .collect();
    state.0 = next;
}

/// Applies `steps` micro updates with fixed parameters.
pub fn simulate_period<R: Rng + ?Sized>(
    params: PeriodParams,
    state: &mut OpinionProfile,
    baseline: &OpinionProfile,
    network: &SocialNetwork,
    steps: usize,
    fj_update: FjUpdate,
    rng: &mut R,
) {
    if steps == 0 {
        return;
    }
    debug_assert_eq!(state.len(), network.node_count());
    match params {
        PeriodParams::Fj { xi } => match fj_update {
            FjUpdate::Asynchronous => {
                let n = state.len();
                for _ in 0..steps {
                    let agent = rng.random_range(0..n);
                    fj_step(state, baseline, network, xi, agent);
                }
            }
            FjUpdate::Synchronous { steps_per_sweep } => {
                for _ in 0..steps / steps_per_sweep.max(1) {
                    fj_sweep(state, baseline, network, xi);
                }
            }
        },
        PeriodParams::Dw { mu, eps } => {
            if network.edge_count() == 0 {
                return;
            }
            for _ in 0..steps {
                let pair = network.random_edge_unchecked(rng);
                dw_step(state, mu, eps, pair);
            }
        }
        PeriodParams::Atbcr { mu, eps, theta } => {
            if network.edge_count() == 0 {
                return;
            }
            for _ in 0..steps {
                let pair = network.random_edge_unchecked(rng);
                atbcr_step(state, mu, eps, theta, pair);
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct HorizonRun {
    pub concern: ConcernSeries,
    /// Profile at the end of every period, when requested.
    pub snapshots: Option<Vec<OpinionProfile>>,
    pub final_state: OpinionProfile,
}

/// Runs every period of `schedule` in order from `initial`, reading the
/// concern proportion at each period end. FJ anchors to `initial` throughout.
pub fn simulate_horizon<R: Rng + ?Sized>(
    schedule: &ParameterSchedule,
    initial: &OpinionProfile,
    network: &SocialNetwork,
    concern_threshold: f64,
    fj_update: FjUpdate,
    rng: &mut R,
    snapshot: bool,
) -> HorizonRun {
    let mut state = initial.clone();
    let mut concern = Vec::with_capacity(schedule.len());
    let mut snapshots = snapshot.then(|| Vec::with_capacity(schedule.len()));
    for &params in schedule.periods() {
        simulate_period(params, &mut state, initial, network, schedule.steps_per_period(), fj_update, rng);
        concern.push(concern_proportion(&state, concern_threshold));
        if let Some(snaps) = snapshots.as_mut() {
            snaps.push(state.clone());
        }
    }
    HorizonRun { concern: ConcernSeries(concern), snapshots, final_state: state }
}

/// Fraction of opinions at or above the threshold.
pub fn concern_proportion(state: &OpinionProfile, concern_threshold: f64) -> f64 {
    let concerned = state.0.iter().filter(|&&x| x >= concern_threshold).count();
    concerned as f64 / state.0.len() as f64
}

/// Writes `period,agent,opinion` rows for each labelled profile.
pub fn write_snapshots<'a>(
    path: impl AsRef<Path>,
    snapshots: impl IntoIterator<Item = (&'a str, &'a OpinionProfile)>,
) -> Result<()> {
    let mut out = csv::Writer::from_path(path)?;
    out.write_record(["period", "agent", "opinion"])?;
    for (label, profile) in snapshots {
        for (agent, x) in profile.values().iter().enumerate() {
            out.write_record([label, &agent.to_string(), &x.to_string()])?;
        }
    }
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::generate_ba;
    use crate::rng;
    use proptest::prelude::*;
    use rand::Rng;

    fn profile(values: &[f64]) -> OpinionProfile {
        OpinionProfile::new(values.to_vec()).unwrap()
    }

    /// Star around agent 0 with leaves 1 and 2.
    fn star() -> SocialNetwork {
        SocialNetwork::from_edges(3, [(0, 1), (0, 2)]).unwrap()
    }

    #[test]
    fn profile_rejects_out_of_range_values() {
        assert!(OpinionProfile::new(vec![0.2, 1.1]).is_err());
        assert!(OpinionProfile::new(vec![-0.0, 1.0]).is_ok());
    }

    #[test]
    fn fj_without_susceptibility_returns_to_baseline() {
        let mut state = profile(&[0.5, 0.2, 0.4]);
        let baseline = profile(&[0.9, 0.0, 0.0]);
        fj_step(&mut state, &baseline, &star(), 0.0, 0);
        assert_eq!(state.values()[0], 0.9);
    }

    #[test]
    fn fj_full_susceptibility_takes_neighbor_mean() {
        let mut state = profile(&[0.5, 0.2, 0.4]);
        let baseline = state.clone();
        fj_step(&mut state, &baseline, &star(), 1.0, 0);
        assert!((state.values()[0] - 0.3).abs() < 1e-15);
        assert_eq!(&state.values()[1..], &[0.2, 0.4]);
    }

    #[test]
    fn fj_mixes_neighbors_and_baseline() {
        let mut state = profile(&[0.5, 0.2, 0.2]);
        let baseline = profile(&[0.8, 0.2, 0.2]);
        fj_step(&mut state, &baseline, &star(), 0.5, 0);
        assert!((state.values()[0] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn fj_leaves_isolated_agent_alone() {
        let net = SocialNetwork::from_edges(3, [(0, 1)]).unwrap();
        let mut state = profile(&[0.5, 0.2, 0.7]);
        let baseline = profile(&[0.0, 0.0, 0.0]);
        fj_step(&mut state, &baseline, &net, 0.5, 2);
        assert_eq!(state.values()[2], 0.7);
    }

    #[test]
    fn dw_attracts_inside_confidence_bound() {
        let mut state = profile(&[0.4, 0.6]);
        dw_step(&mut state, 0.25, 0.3, (0, 1));
        assert!((state.values()[0] - 0.45).abs() < 1e-15);
        assert!((state.values()[1] - 0.55).abs() < 1e-15);
    }

    #[test]
    fn dw_ignores_distant_pairs_and_zero_bound() {
        let mut state = profile(&[0.4, 0.6]);
        dw_step(&mut state, 0.25, 0.1, (0, 1));
        assert_eq!(state.values(), &[0.4, 0.6]);
        dw_step(&mut state, 0.5, 0.0, (1, 0));
        assert_eq!(state.values(), &[0.4, 0.6]);
        let mut same = profile(&[0.3, 0.3]);
        dw_step(&mut same, 0.5, 0.0, (0, 1));
        assert_eq!(same.values(), &[0.3, 0.3]);
    }

    #[test]
    fn atbcr_repulsion_truncates() {
        let mut state = profile(&[0.1, 0.9]);
        atbcr_step(&mut state, 0.5, 0.05, 0.7, (0, 1));
        assert_eq!(state.values(), &[0.0, 1.0]);
    }

    #[test]
    fn atbcr_attracts_below_eps() {
        let mut state = profile(&[0.4, 0.6]);
        atbcr_step(&mut state, 0.25, 0.3, 0.7, (0, 1));
        assert!((state.values()[0] - 0.45).abs() < 1e-15);
        assert!((state.values()[1] - 0.55).abs() < 1e-15);
    }

    #[test]
    fn atbcr_neutral_band_and_equalities() {
        let mut state = profile(&[0.3, 0.6]);
        atbcr_step(&mut state, 0.25, 0.2, 0.5, (0, 1));
        assert_eq!(state.values(), &[0.3, 0.6]);
        // gap equal to eps or theta falls in the neutral band
        let mut state = profile(&[0.25, 0.75]);
        atbcr_step(&mut state, 0.25, 0.5, 0.9, (0, 1));
        atbcr_step(&mut state, 0.25, 0.1, 0.5, (0, 1));
        assert_eq!(state.values(), &[0.25, 0.75]);
    }

    #[test]
    fn zero_steps_leave_state() {
        let net = generate_ba(50, 3, 1).unwrap();
        let initial = profile(&vec![0.3; 50]);
        let mut state = initial.clone();
        let mut rng = rng::stream(0);
        simulate_period(
            PeriodParams::Dw { mu: 0.5, eps: 0.5 },
            &mut state,
            &initial,
            &net,
            0,
            FjUpdate::Asynchronous,
            &mut rng,
        );
        assert_eq!(state, initial);
    }

    fn uniform_profile(n: usize, seed: u64) -> OpinionProfile {
        let mut rng = rng::stream(seed);
        profile(&(0..n).map(|_| rng.random::<f64>()).collect::<Vec<_>>())
    }

    #[test]
    fn horizon_counts_steps_and_readings() {
        let net = generate_ba(200, 3, 2).unwrap();
        let initial = uniform_profile(200, 3);
        let schedule =
            ParameterSchedule::new(vec![PeriodParams::Dw { mu: 0.3, eps: 0.2 }; 15], 13_500).unwrap();
        let run = simulate_horizon(
            &schedule,
            &initial,
            &net,
            0.9,
            FjUpdate::Asynchronous,
            &mut rng::stream(4),
            true,
        );
        assert_eq!(run.concern.len(), 15);
        assert_eq!(run.snapshots.unwrap().len(), 15);
    }

    #[test]
    fn deactivated_dw_keeps_initial_concern() {
        let net = generate_ba(200, 3, 2).unwrap();
        let initial = uniform_profile(200, 5);
        let schedule = ParameterSchedule::new(vec![PeriodParams::Dw { mu: 0.5, eps: 0.0 }], 5_000).unwrap();
        let run = simulate_horizon(
            &schedule,
            &initial,
            &net,
            0.6,
            FjUpdate::Asynchronous,
            &mut rng::stream(6),
            false,
        );
        assert_eq!(run.concern.values(), &[concern_proportion(&initial, 0.6)]);
        assert_eq!(run.final_state, initial);
    }

    #[test]
    fn low_susceptibility_fj_barely_moves_concern() {
        let net = generate_ba(500, 3, 7).unwrap();
        let initial = uniform_profile(500, 8);
        let schedule = ParameterSchedule::new(vec![PeriodParams::Fj { xi: 0.1 }; 6], 2_000).unwrap();
        let run = simulate_horizon(
            &schedule,
            &initial,
            &net,
            0.75,
            FjUpdate::Asynchronous,
            &mut rng::stream(9),
            false,
        );
        let c0 = concern_proportion(&initial, 0.75);
        for c in run.concern.values() {
            assert!((c - c0).abs() < 0.05, "{c} vs {c0}");
        }
    }

    #[test]
    fn fj_fixed_point_under_consensus() {
        let net = generate_ba(100, 3, 1).unwrap();
        let initial = profile(&vec![0.42; 100]);
        let schedule = ParameterSchedule::new(vec![PeriodParams::Fj { xi: 1.0 }; 3], 1_000).unwrap();
        for mode in [FjUpdate::Asynchronous, FjUpdate::Synchronous { steps_per_sweep: 450 }] {
            let run = simulate_horizon(&schedule, &initial, &net, 0.5, mode, &mut rng::stream(2), false);
            assert_eq!(run.final_state, initial);
        }
    }

    #[test]
    fn synchronous_fj_uses_previous_sweep_values() {
        let net = SocialNetwork::from_edges(2, [(0, 1)]).unwrap();
        let initial = profile(&[0.0, 1.0]);
        let mut state = initial.clone();
        simulate_period(
            PeriodParams::Fj { xi: 1.0 },
            &mut state,
            &initial,
            &net,
            900,
            FjUpdate::Synchronous { steps_per_sweep: 450 },
            &mut rng::stream(0),
        );
        // two sweeps of swapping
        assert_eq!(state.values(), &[0.0, 1.0]);
    }

    #[test]
    fn cluster_counting() {
        assert_eq!(profile(&[0.1, 0.15, 0.5, 0.52, 0.9]).cluster_count(0.1), 3);
        assert_eq!(profile(&[0.1, 0.2]).cluster_count(0.1), 1);
    }

    #[test]
    fn schedule_validation() {
        assert!(ParameterSchedule::new(vec![], 10).is_err());
        assert!(ParameterSchedule::new(vec![PeriodParams::Fj { xi: 0.5 }], 0).is_err());
        assert!(ParameterSchedule::new(
            vec![PeriodParams::Fj { xi: 0.5 }, PeriodParams::Dw { mu: 0.1, eps: 0.1 }],
            10
        )
        .is_err());
    }

    #[test]
    fn model_names_parse() {
        for model in Model::ALL {
            assert_eq!(model.name().parse::<Model>().unwrap(), model);
        }
        assert!("hk".parse::<Model>().is_err());
    }

    #[test]
    fn snapshots_written_as_long_csv() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("snap.csv");
        let a = profile(&[0.25, 0.5]);
        write_snapshots(&path, [("p1", &a)]).unwrap();
        assert_eq!(std::fs::read_to_string(&path).unwrap(), "period,agent,opinion\np1,0,0.25\np1,1,0.5\n");
    }

    proptest! {
        #[test]
        fn pair_rules_stay_in_unit_interval(
            xi in 0.0f64..=1.0, xj in 0.0f64..=1.0,
            mu in 0.0f64..=0.5, eps in 0.0f64..=0.5, theta in 0.5f64..=1.0,
        ) {
            let mut s = profile(&[xi, xj]);
            atbcr_step(&mut s, mu, eps, theta, (0, 1));
            prop_assert!(s.values().iter().all(|x| (0.0..=1.0).contains(x)));
            let mut d = profile(&[xi, xj]);
            dw_step(&mut d, mu, eps, (0, 1));
            prop_assert!(d.values().iter().all(|x| (0.0..=1.0).contains(x)));
            // attraction preserves the pair sum
            prop_assert!((d.values()[0] + d.values()[1] - (xi + xj)).abs() < 1e-12);
        }

        #[test]
        fn unclamped_repulsion_preserves_pair_sum(
            xi in 0.3f64..=0.45, xj in 0.55f64..=0.7, mu in 0.0f64..=0.5,
        ) {
            let mut s = profile(&[xi, xj]);
            // gap in [0.1, 0.4] exceeds theta = 0.05; results stay inside [0, 1]
            atbcr_step(&mut s, mu, 0.0, 0.05, (0, 1));
            prop_assert!((s.values()[0] + s.values()[1] - (xi + xj)).abs() < 1e-12);
        }

        #[test]
        fn atbcr_with_unit_theta_replays_dw(seed in 0u64..1000, mu in 0.01f64..=0.5, eps in 0.0f64..=0.5) {
            let net = generate_ba(60, 3, seed).unwrap();
            let initial = uniform_profile(60, seed + 1);
            let dw = ParameterSchedule::new(vec![PeriodParams::Dw { mu, eps }; 2], 500).unwrap();
            let at = ParameterSchedule::new(vec![PeriodParams::Atbcr { mu, eps, theta: 1.0 }; 2], 500).unwrap();
            let a = simulate_horizon(&dw, &initial, &net, 0.5, FjUpdate::Asynchronous, &mut rng::stream(seed), true);
            let b = simulate_horizon(&at, &initial, &net, 0.5, FjUpdate::Asynchronous, &mut rng::stream(seed), true);
            prop_assert_eq!(a.final_state, b.final_state);
            prop_assert_eq!(a.concern, b.concern);
        }

        #[test]
        fn simulation_closure_and_determinism(seed in 0u64..1000, xi in 0.1f64..=1.0) {
            let net = generate_ba(40, 2, seed).unwrap();
            let initial = uniform_profile(40, seed);
            let schedule = ParameterSchedule::new(vec![
                PeriodParams::Atbcr { mu: 0.5, eps: 0.1, theta: 0.5 },
                PeriodParams::Atbcr { mu: 0.2, eps: 0.4, theta: 0.9 },
            ], 300).unwrap();
            let a = simulate_horizon(&schedule, &initial, &net, 0.7, FjUpdate::Asynchronous, &mut rng::stream(seed), false);
            let b = simulate_horizon(&schedule, &initial, &net, 0.7, FjUpdate::Asynchronous, &mut rng::stream(seed), false);
            prop_assert!(a.final_state.values().iter().all(|x| (0.0..=1.0).contains(x)));
            prop_assert_eq!(&a.final_state, &b.final_state);

            let fj = ParameterSchedule::new(vec![PeriodParams::Fj { xi }], 300).unwrap();
            let c = simulate_horizon(&fj, &initial, &net, 0.7, FjUpdate::Asynchronous, &mut rng::stream(seed), false);
            prop_assert!(c.final_state.values().iter().all(|x| (0.0..=1.0).contains(x)));
        }
    }
}
