//! The learner's observation model, demonstration records and the synthetic
//! demonstration generator.
//!
//! Observations default to joint state-action symbols `o = s * |A| + a`.

use std::fmt::Write as _;

use ndarray::Array3;
use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::mdp::{DiscountedMdp, Policy, StochasticPolicy};
use crate::seed::SeedStream;

/// `prob[s, a, o]`: probability of observing `o` when the expert is at `(s, a)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservationModel {
    prob: Array3<f64>,
    /// For each observation, the `(pair index, probability)` entries that can emit it.
    emitters: Vec<Vec<(usize, f64)>>,
}

impl ObservationModel {
    pub fn new(prob: Array3<f64>) -> Result<Self> {
        let (ns, na, no) = prob.dim();
        if no == 0 {
            return Err(Error::validation("observation model needs at least one observation"));
        }
        let mut emitters = vec![Vec::new(); no];
        for s in 0..ns {
            for a in 0..na {
                let mut total = 0.0;
                for o in 0..no {
                    let p = prob[[s, a, o]];
                    if !(p >= 0.0) || !p.is_finite() {
                        return Err(Error::validation(format!(
                            "observation probability at ({s}, {a}, {o}) is invalid"
                        )));
                    }
                    total += p;
                    if p > 0.0 {
                        emitters[o].push((s * na + a, p));
                    }
                }
                if (total - 1.0).abs() > 1e-9 {
                    return Err(Error::validation(format!(
                        "observation row ({s}, {a}) sums to {total}"
                    )));
                }
            }
        }
        Ok(Self { prob, emitters })
    }

    /// Noise-free channel over joint `(s, a)` symbols.
    pub fn identity(num_states: usize, num_actions: usize) -> Self {
        Self::confusion_kernel(num_states, num_actions, 0.0, |_, _| Vec::new())
            .expect("identity channel is valid")
    }

    /// With probability `1 - epsilon` emit the true `(s, a)` symbol; with
    /// probability `epsilon` draw from `confusion(s, a)`, a list of
    /// `(observation, weight)` entries normalised internally. Pairs with an
    /// empty confusion list are always observed exactly.
    pub fn confusion_kernel(
        num_states: usize,
        num_actions: usize,
        epsilon: f64,
        confusion: impl Fn(usize, usize) -> Vec<(usize, f64)>,
    ) -> Result<Self> {
        if !(0.0..=1.0).contains(&epsilon) {
            return Err(Error::validation(format!("noise rate {epsilon} outside [0, 1]")));
        }
        let no = num_states * num_actions;
        let mut prob = Array3::zeros((num_states, num_actions, no));
        for s in 0..num_states {
            for a in 0..num_actions {
                let truth = encode_pair(s, a, num_actions);
                let entries = confusion(s, a);
                let weight: f64 = entries.iter().map(|&(_, w)| w).sum();
                if entries.is_empty() || epsilon == 0.0 || weight <= 0.0 {
                    prob[[s, a, truth]] = 1.0;
                    continue;
                }
                prob[[s, a, truth]] += 1.0 - epsilon;
                for (o, w) in entries {
                    if o >= no {
                        return Err(Error::validation(format!("confusion target {o} out of range")));
                    }
                    prob[[s, a, o]] += epsilon * w / weight;
                }
            }
        }
        Self::new(prob)
    }

    pub fn num_states(&self) -> usize {
        self.prob.dim().0
    }

    pub fn num_actions(&self) -> usize {
        self.prob.dim().1
    }

    pub fn num_observations(&self) -> usize {
        self.prob.dim().2
    }

    pub fn prob(&self, s: usize, a: usize, o: usize) -> f64 {
        self.prob[[s, a, o]]
    }

    pub fn table(&self) -> &Array3<f64> {
        &self.prob
    }

    /// Pairs `x = s * |A| + a` with positive probability of emitting `o`.
    pub fn emitters(&self, o: usize) -> &[(usize, f64)] {
        &self.emitters[o]
    }

    pub fn check_compatible(&self, mdp: &DiscountedMdp) -> Result<()> {
        if self.num_states() != mdp.num_states() || self.num_actions() != mdp.num_actions() {
            return Err(Error::validation(format!(
                "observation model is {}x{}, MDP is {}x{}",
                self.num_states(),
                self.num_actions(),
                mdp.num_states(),
                mdp.num_actions()
            )));
        }
        Ok(())
    }
}

pub fn encode_pair(s: usize, a: usize, num_actions: usize) -> usize {
    s * num_actions + a
}

pub fn decode_pair(o: usize, num_actions: usize) -> (usize, usize) {
    (o / num_actions, o % num_actions)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TimestepRecord {
    Observed(usize),
    Occluded,
}

impl TimestepRecord {
    pub fn observation(&self) -> Option<usize> {
        match *self {
            TimestepRecord::Observed(o) => Some(o),
            TimestepRecord::Occluded => None,
        }
    }

    pub fn is_occluded(&self) -> bool {
        matches!(self, TimestepRecord::Occluded)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ObservedTrajectory {
    records: Vec<TimestepRecord>,
}

impl ObservedTrajectory {
    pub fn new(records: Vec<TimestepRecord>) -> Result<Self> {
        if records.is_empty() {
            return Err(Error::validation("trajectory must have at least one timestep"));
        }
        Ok(Self { records })
    }

    pub fn fully_observed(observations: &[usize]) -> Result<Self> {
        Self::new(observations.iter().map(|&o| TimestepRecord::Observed(o)).collect())
    }

    pub fn records(&self) -> &[TimestepRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn num_occluded(&self) -> usize {
        self.records.iter().filter(|r| r.is_occluded()).count()
    }

    /// Copy that keeps only records in `range` visible.
    pub fn masked_outside(&self, range: std::ops::Range<usize>) -> Self {
        let records = self
            .records
            .iter()
            .enumerate()
            .map(|(t, &r)| if range.contains(&t) { r } else { TimestepRecord::Occluded })
            .collect();
        Self { records }
    }

    /// Maximal runs of consecutive observed records.
    pub fn visible_segments(&self) -> Vec<std::ops::Range<usize>> {
        let mut segments = Vec::new();
        let mut start = None;
        for (t, r) in self.records.iter().enumerate() {
            match (r.is_occluded(), start) {
                (false, None) => start = Some(t),
                (true, Some(s0)) => {
                    segments.push(s0..t);
                    start = None;
                }
                _ => {}
            }
        }
        if let Some(s0) = start {
            segments.push(s0..self.records.len());
        }
        segments
    }

    pub fn check_observations(&self, num_observations: usize) -> Result<()> {
        if let Some(o) = self
            .records
            .iter()
            .filter_map(TimestepRecord::observation)
            .find(|&o| o >= num_observations)
        {
            return Err(Error::validation(format!(
                "observation {o} out of range for {num_observations} symbols"
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct GroundTruthTrajectory {
    pub steps: Vec<(usize, usize)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OcclusionMode {
    ContiguousBlock,
    IidPerStep,
}

impl std::fmt::Display for OcclusionMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            OcclusionMode::ContiguousBlock => "contiguous_block",
            OcclusionMode::IidPerStep => "iid_per_step",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OcclusionSpec {
    pub mode: OcclusionMode,
    pub rate: f64,
}

impl OcclusionSpec {
    pub fn new(mode: OcclusionMode, rate: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&rate) {
            return Err(Error::validation(format!("occlusion rate {rate} outside [0, 1]")));
        }
        Ok(Self { mode, rate })
    }

    pub fn none() -> Self {
        Self {
            mode: OcclusionMode::ContiguousBlock,
            rate: 0.0,
        }
    }

    /// Block length used by the contiguous mode for a horizon.
    pub fn block_length(&self, horizon: usize) -> usize {
        ((self.rate * horizon as f64).round() as usize).min(horizon)
    }
}

/// Draw an index from `(index, probability)` entries by inverse CDF.
pub(crate) fn sample_categorical<R: Rng + ?Sized>(
    entries: impl Iterator<Item = (usize, f64)>,
    rng: &mut R,
) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    let mut last = 0;
    for (i, p) in entries {
        if p <= 0.0 {
            continue;
        }
        acc += p;
        last = i;
        if u < acc {
            return i;
        }
    }
    last
}

pub fn sample_observation<R: Rng + ?Sized>(
    model: &ObservationModel,
    s: usize,
    a: usize,
    rng: &mut R,
) -> usize {
    let row = model.prob.slice(ndarray::s![s, a, ..]);
    sample_categorical(row.iter().copied().enumerate(), rng)
}

pub fn apply_occlusion<R: Rng + ?Sized>(
    observations: &[usize],
    spec: OcclusionSpec,
    rng: &mut R,
) -> Result<ObservedTrajectory> {
    let horizon = observations.len();
    let mut records: Vec<TimestepRecord> =
        observations.iter().map(|&o| TimestepRecord::Observed(o)).collect();
    match spec.mode {
        OcclusionMode::ContiguousBlock => {
            let len = spec.block_length(horizon);
            if len > 0 {
                let start = rng.random_range(0..=horizon - len);
                for r in &mut records[start..start + len] {
                    *r = TimestepRecord::Occluded;
                }
            }
        }
        OcclusionMode::IidPerStep => {
            for r in &mut records {
                if rng.random::<f64>() < spec.rate {
                    *r = TimestepRecord::Occluded;
                }
            }
        }
    }
    ObservedTrajectory::new(records)
}

/// Roll out the expert and record what the learner sees.
///
/// Trajectory `i` draws from sub-streams indexed by `i` only, so the output
/// does not depend on how the work is scheduled.
pub fn simulate_demonstrations(
    mdp: &DiscountedMdp,
    expert: &StochasticPolicy,
    model: &ObservationModel,
    horizon: usize,
    occlusion: OcclusionSpec,
    num_trajectories: usize,
    seed: SeedStream,
) -> Result<(Vec<ObservedTrajectory>, Vec<GroundTruthTrajectory>)> {
    if horizon == 0 {
        return Err(Error::validation("horizon must be at least 1"));
    }
    model.check_compatible(mdp)?;
    if expert.num_states() != mdp.num_states() || expert.num_actions() != mdp.num_actions() {
        return Err(Error::validation("expert policy shape does not match the MDP"));
    }
    let results: Vec<Result<(ObservedTrajectory, GroundTruthTrajectory)>> = (0..num_trajectories)
        .into_par_iter()
        .map(|i| {
            let mut rng = seed.rng_indexed("demonstration", &[i as u64]);
            let truth = rollout(mdp, expert, horizon, &mut rng);
            let observations: Vec<usize> = truth
                .steps
                .iter()
                .map(|&(s, a)| sample_observation(model, s, a, &mut rng))
                .collect();
            let mut occ_rng = seed.rng_indexed("occlusion", &[i as u64]);
            let observed = apply_occlusion(&observations, occlusion, &mut occ_rng)?;
            Ok((observed, truth))
        })
        .collect();
    let mut observed = Vec::with_capacity(num_trajectories);
    let mut truths = Vec::with_capacity(num_trajectories);
    for r in results {
        let (o, t) = r?;
        observed.push(o);
        truths.push(t);
    }
    Ok((observed, truths))
}

pub(crate) fn rollout<R: Rng + ?Sized>(
    mdp: &DiscountedMdp,
    policy: &impl Policy,
    horizon: usize,
    rng: &mut R,
) -> GroundTruthTrajectory {
    let na = mdp.num_actions();
    let mut s = sample_categorical(mdp.initial_distribution().iter().copied().enumerate(), rng);
    let mut steps = Vec::with_capacity(horizon);
    for t in 0..horizon {
        let a = sample_categorical((0..na).map(|a| (a, policy.prob(s, a))), rng);
        steps.push((s, a));
        if t + 1 < horizon {
            s = sample_categorical(mdp.successors(s, a).iter().copied(), rng);
        }
    }
    GroundTruthTrajectory { steps }
}

/// A parsed trajectory batch file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrajectoryBatch {
    pub horizon: usize,
    pub num_observations: usize,
    pub trajectories: Vec<ObservedTrajectory>,
}

impl TrajectoryBatch {
    pub fn new(num_observations: usize, trajectories: Vec<ObservedTrajectory>) -> Result<Self> {
        let horizon = trajectories.first().map_or(0, ObservedTrajectory::len);
        if trajectories.iter().any(|t| t.len() != horizon) {
            return Err(Error::validation("all trajectories in a batch must share a horizon"));
        }
        for t in &trajectories {
            t.check_observations(num_observations)?;
        }
        Ok(Self {
            horizon,
            num_observations,
            trajectories,
        })
    }

    /// `T=<horizon> N=<count> O=<symbols>` header, then one line per
    /// trajectory with `#` for occluded slots.
    pub fn to_text(&self) -> String {
        let mut out = format!(
            "T={} N={} O={}\n",
            self.horizon,
            self.trajectories.len(),
            self.num_observations
        );
        for t in &self.trajectories {
            let mut first = true;
            for r in t.records() {
                if !first {
                    out.push(' ');
                }
                first = false;
                match r {
                    TimestepRecord::Observed(o) => write!(out, "{o}").unwrap(),
                    TimestepRecord::Occluded => out.push('#'),
                }
            }
            out.push('\n');
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text.split_terminator('\n');
        let header = lines.next().ok_or_else(|| Error::parse(1, "empty batch file"))?;
        let fields = parse_header(header, &["T", "N", "O"], 1)?;
        let (horizon, count, num_obs) = (fields[0], fields[1], fields[2]);
        if count == 0 {
            return Err(Error::parse(1, "batch contains no trajectories"));
        }
        let mut trajectories = Vec::with_capacity(count);
        for (i, line) in lines.enumerate() {
            let lineno = i + 2;
            let records = line
                .split(' ')
                .map(|tok| match tok {
                    "#" => Ok(TimestepRecord::Occluded),
                    _ => tok
                        .parse::<usize>()
                        .ok()
                        .filter(|&o| o < num_obs && canonical_usize(tok))
                        .map(TimestepRecord::Observed)
                        .ok_or_else(|| Error::parse(lineno, format!("bad token {tok:?}"))),
                })
                .collect::<Result<Vec<_>>>()?;
            if records.len() != horizon {
                return Err(Error::parse(
                    lineno,
                    format!("expected {horizon} tokens, found {}", records.len()),
                ));
            }
            trajectories.push(ObservedTrajectory::new(records).map_err(|e| Error::parse(lineno, e.to_string()))?);
        }
        if trajectories.len() != count {
            return Err(Error::parse(
                trajectories.len() + 2,
                format!("header promises {count} trajectories, found {}", trajectories.len()),
            ));
        }
        if !text.ends_with('\n') {
            return Err(Error::parse(count + 1, "missing trailing newline"));
        }
        Ok(Self {
            horizon,
            num_observations: num_obs,
            trajectories,
        })
    }
}

fn canonical_usize(tok: &str) -> bool {
    tok == "0" || !tok.starts_with('0')
}

fn parse_header(line: &str, keys: &[&str], lineno: usize) -> Result<Vec<usize>> {
    let parts: Vec<&str> = line.split(' ').collect();
    if parts.len() != keys.len() {
        return Err(Error::parse(lineno, format!("malformed header {line:?}")));
    }
    parts
        .iter()
        .zip(keys)
        .map(|(part, key)| {
            part.strip_prefix(key)
                .and_then(|rest| rest.strip_prefix('='))
                .filter(|v| canonical_usize(v))
                .and_then(|v| v.parse::<usize>().ok())
                .ok_or_else(|| Error::parse(lineno, format!("expected {key}=<int>, found {part:?}")))
        })
        .collect()
}

/// Sidecar format for ground truth: `T=<h> N=<n> S=<states> A=<actions>`,
/// then `s:a` tokens.
pub fn ground_truth_to_text(
    truths: &[GroundTruthTrajectory],
    num_states: usize,
    num_actions: usize,
) -> String {
    let horizon = truths.first().map_or(0, |t| t.steps.len());
    let mut out = format!("T={horizon} N={} S={num_states} A={num_actions}\n", truths.len());
    for t in truths {
        let line: Vec<String> = t.steps.iter().map(|(s, a)| format!("{s}:{a}")).collect();
        out.push_str(&line.join(" "));
        out.push('\n');
    }
    out
}

pub fn parse_ground_truth(text: &str) -> Result<(Vec<GroundTruthTrajectory>, usize, usize)> {
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| Error::parse(1, "empty ground-truth file"))?;
    let f = parse_header(header, &["T", "N", "S", "A"], 1)?;
    let (horizon, count, ns, na) = (f[0], f[1], f[2], f[3]);
    let mut truths = Vec::with_capacity(count);
    for (i, line) in lines.enumerate() {
        let lineno = i + 2;
        let steps = line
            .split(' ')
            .map(|tok| {
                let (s, a) = tok
                    .split_once(':')
                    .ok_or_else(|| Error::parse(lineno, format!("bad token {tok:?}")))?;
                match (s.parse::<usize>(), a.parse::<usize>()) {
                    (Ok(s), Ok(a)) if s < ns && a < na => Ok((s, a)),
                    _ => Err(Error::parse(lineno, format!("bad token {tok:?}"))),
                }
            })
            .collect::<Result<Vec<_>>>()?;
        if steps.len() != horizon {
            return Err(Error::parse(lineno, "wrong number of steps"));
        }
        truths.push(GroundTruthTrajectory { steps });
    }
    if truths.len() != count {
        return Err(Error::parse(1, "trajectory count does not match header"));
    }
    Ok((truths, ns, na))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::{array, Array3};

    fn two_state_mdp() -> DiscountedMdp {
        let mut t = Array3::zeros((2, 2, 2));
        t[[0, 0, 0]] = 0.5;
        t[[0, 0, 1]] = 0.5;
        t[[0, 1, 1]] = 1.0;
        t[[1, 0, 0]] = 1.0;
        t[[1, 1, 0]] = 0.2;
        t[[1, 1, 1]] = 0.8;
        DiscountedMdp::new(t, 0.9, array![0.6, 0.4]).unwrap()
    }

    #[test]
    fn identity_channel_is_exact() {
        let model = ObservationModel::identity(3, 2);
        let mut rng = SeedStream::new(1).rng("obs");
        for s in 0..3 {
            for a in 0..2 {
                assert_eq!(sample_observation(&model, s, a, &mut rng), encode_pair(s, a, 2));
            }
        }
    }

    #[test]
    fn contiguous_block_lengths() {
        let mut rng = SeedStream::new(2).rng("occ");
        let spec = OcclusionSpec::new(OcclusionMode::ContiguousBlock, 0.5).unwrap();
        for _ in 0..50 {
            let t = apply_occlusion(&[0, 1, 2, 3], spec, &mut rng).unwrap();
            let idx: Vec<usize> = (0..4).filter(|&i| t.records()[i].is_occluded()).collect();
            assert_eq!(idx.len(), 2);
            assert_eq!(idx[1], idx[0] + 1);
        }
        let spec = OcclusionSpec::new(OcclusionMode::ContiguousBlock, 0.25).unwrap();
        let t = apply_occlusion(&[0; 8], spec, &mut rng).unwrap();
        assert_eq!(t.num_occluded(), 2);
        let unchanged =
            apply_occlusion(&[4, 5, 6], OcclusionSpec::none(), &mut rng).unwrap();
        assert_eq!(unchanged, ObservedTrajectory::fully_observed(&[4, 5, 6]).unwrap());
    }

    #[test]
    fn iid_occlusion_rate() {
        let mut rng = SeedStream::new(3).rng("occ");
        let spec = OcclusionSpec::new(OcclusionMode::IidPerStep, 0.3).unwrap();
        let t = apply_occlusion(&vec![0; 100_000], spec, &mut rng).unwrap();
        let frac = t.num_occluded() as f64 / 100_000.0;
        assert!((frac - 0.3).abs() < 0.005, "fraction {frac}");
    }

    #[test]
    fn lossless_simulation_decodes_to_truth() {
        let mdp = two_state_mdp();
        let expert = StochasticPolicy::new(array![[0.3, 0.7], [0.5, 0.5]]).unwrap();
        let model = ObservationModel::identity(2, 2);
        let (obs, truth) = simulate_demonstrations(
            &mdp,
            &expert,
            &model,
            7,
            OcclusionSpec::none(),
            20,
            SeedStream::new(4),
        )
        .unwrap();
        for (o, t) in obs.iter().zip(&truth) {
            let decoded: Vec<(usize, usize)> = o
                .records()
                .iter()
                .map(|r| decode_pair(r.observation().unwrap(), 2))
                .collect();
            assert_eq!(decoded, t.steps);
        }
        let (all_hidden, _) = simulate_demonstrations(
            &mdp,
            &expert,
            &model,
            5,
            OcclusionSpec::new(OcclusionMode::IidPerStep, 1.0).unwrap(),
            4,
            SeedStream::new(4),
        )
        .unwrap();
        assert!(all_hidden.iter().all(|t| t.num_occluded() == 5));
    }

    #[test]
    fn simulation_is_seed_deterministic() {
        let mdp = two_state_mdp();
        let expert = StochasticPolicy::uniform(2, 2);
        let model = ObservationModel::confusion_kernel(2, 2, 0.4, |s, a| {
            vec![(encode_pair(1 - s, a, 2), 1.0)]
        })
        .unwrap();
        let spec = OcclusionSpec::new(OcclusionMode::ContiguousBlock, 0.3).unwrap();
        let a = simulate_demonstrations(&mdp, &expert, &model, 9, spec, 6, SeedStream::new(8)).unwrap();
        let b = simulate_demonstrations(&mdp, &expert, &model, 9, spec, 6, SeedStream::new(8)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn visible_segments_and_masks() {
        use TimestepRecord::*;
        let t = ObservedTrajectory::new(vec![
            Observed(1),
            Observed(2),
            Occluded,
            Observed(3),
            Occluded,
            Occluded,
            Observed(0),
        ])
        .unwrap();
        assert_eq!(t.visible_segments(), vec![0..2, 3..4, 6..7]);
        let m = t.masked_outside(3..4);
        assert_eq!(m.num_occluded(), 6);
        assert_eq!(m.records()[3], Observed(3));
    }

    #[test]
    fn batch_text_format() {
        use TimestepRecord::*;
        let batch = TrajectoryBatch::new(
            12,
            vec![
                ObservedTrajectory::new(vec![Observed(3), Occluded, Observed(11)]).unwrap(),
                ObservedTrajectory::new(vec![Occluded, Occluded, Observed(0)]).unwrap(),
            ],
        )
        .unwrap();
        let text = batch.to_text();
        assert_eq!(text, "T=3 N=2 O=12\n3 # 11\n# # 0\n");
        assert_eq!(TrajectoryBatch::parse(&text).unwrap(), batch);
        assert!(TrajectoryBatch::parse("").is_err());
        assert!(TrajectoryBatch::parse("T=3 N=0 O=12\n").is_err());
        let err = TrajectoryBatch::parse("T=3 N=2 O=12\n3 # 11\n# 12 0\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }), "{err}");
    }

    #[test]
    fn ground_truth_round_trip() {
        let truths = vec![
            GroundTruthTrajectory { steps: vec![(0, 1), (3, 2)] },
            GroundTruthTrajectory { steps: vec![(2, 0), (2, 2)] },
        ];
        let text = ground_truth_to_text(&truths, 4, 3);
        let (parsed, ns, na) = parse_ground_truth(&text).unwrap();
        assert_eq!((parsed, ns, na), (truths, 4, 3));
    }
}
