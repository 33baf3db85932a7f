//! Onion sorting on a conveyor line.
//!
//! A state is `(onion location, end-effector location, prediction)`. The
//! sorter claims an onion, picks it, inspects it to learn whether it is
//! blemished, and places it back on the conveyor or in the bin. Actions that
//! do not apply in a state leave it unchanged.

use ndarray::{Array1, Array3};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::envs::{Environment, EnvironmentKind};
use crate::error::{Error, Result};
use crate::eval::ConfusionCounts;
use crate::mdp::{DeterministicPolicy, DiscountedMdp, Policy};
use crate::observation::{encode_pair, ObservationModel};
use crate::reward::{FeatureMap, FeatureWeights};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Location {
    Conveyor,
    Hover,
    FrontOfFace,
    Bin,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Prediction {
    Good,
    Bad,
    Unknown,
}

pub const LOCATIONS: [Location; 4] = [Location::Conveyor, Location::Hover, Location::FrontOfFace, Location::Bin];
pub const PREDICTIONS: [Prediction; 3] = [Prediction::Good, Prediction::Bad, Prediction::Unknown];

pub const CLAIM: usize = 0;
pub const PICK: usize = 1;
pub const INSPECT: usize = 2;
pub const PLACE_CONVEYOR: usize = 3;
pub const PLACE_BIN: usize = 4;
pub const ACTION_NAMES: [&str; 5] = ["claim", "pick", "inspect", "place_conveyor", "place_bin"];

pub const FEATURE_NAMES: [&str; 6] = [
    "good_on_conveyor",
    "bad_on_conveyor",
    "good_in_bin",
    "bad_in_bin",
    "claim_new_onion",
    "pick_if_unknown",
];

pub const NUM_STATES: usize = 48;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OnionState {
    pub onion: Location,
    pub effector: Location,
    pub prediction: Prediction,
}

impl OnionState {
    pub fn index(&self) -> usize {
        let l = |x: Location| LOCATIONS.iter().position(|&y| y == x).unwrap();
        let p = PREDICTIONS.iter().position(|&y| y == self.prediction).unwrap();
        (l(self.onion) * 4 + l(self.effector)) * 3 + p
    }

    pub fn from_index(s: usize) -> Self {
        Self {
            onion: LOCATIONS[s / 12],
            effector: LOCATIONS[(s / 3) % 4],
            prediction: PREDICTIONS[s % 3],
        }
    }

    pub fn held(&self) -> bool {
        matches!(self.onion, Location::Hover | Location::FrontOfFace)
    }

    /// The onion in focus has been sorted, so a new one may be claimed.
    pub fn placed(&self) -> bool {
        self.prediction != Prediction::Unknown && matches!(self.onion, Location::Conveyor | Location::Bin)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OnionworldSpec {
    /// Probability that an inspected onion turns out blemished.
    pub blemish_rate: f64,
    /// Probability that the observed prediction is flipped between good and bad.
    pub prediction_noise: f64,
    /// In [`FEATURE_NAMES`] order.
    pub true_weights: Vec<f64>,
    pub discount: f64,
}

impl Default for OnionworldSpec {
    fn default() -> Self {
        Self {
            blemish_rate: 0.5,
            prediction_noise: 0.3,
            true_weights: vec![1.0, -1.0, -1.0, 1.0, 0.1, 0.1],
            discount: 0.99,
        }
    }
}

/// Successor distribution of `(state, action)` as `(state, probability)`.
pub fn successors(state: OnionState, action: usize, blemish_rate: f64) -> Vec<(OnionState, f64)> {
    let moved = |to: Location| OnionState {
        onion: to,
        effector: to,
        prediction: state.prediction,
    };
    match action {
        CLAIM if state.placed() => vec![(
            OnionState {
                onion: Location::Conveyor,
                effector: state.effector,
                prediction: Prediction::Unknown,
            },
            1.0,
        )],
        PICK if state.onion == Location::Conveyor && state.prediction == Prediction::Unknown => {
            vec![(moved(Location::Hover), 1.0)]
        }
        INSPECT if state.held() => {
            let at_face = moved(Location::FrontOfFace);
            if state.prediction == Prediction::Unknown {
                vec![
                    (OnionState { prediction: Prediction::Bad, ..at_face }, blemish_rate),
                    (OnionState { prediction: Prediction::Good, ..at_face }, 1.0 - blemish_rate),
                ]
            } else {
                vec![(at_face, 1.0)]
            }
        }
        PLACE_CONVEYOR if state.held() => vec![(moved(Location::Conveyor), 1.0)],
        PLACE_BIN if state.held() => vec![(moved(Location::Bin), 1.0)],
        _ => vec![(state, 1.0)],
    }
}

fn feature_vector(state: OnionState, action: usize) -> [f64; 6] {
    let mut f = [0.0; 6];
    let on = |b: bool| if b { 1.0 } else { 0.0 };
    if state.held() {
        let good = state.prediction == Prediction::Good;
        let bad = state.prediction == Prediction::Bad;
        f[0] = on(good && action == PLACE_CONVEYOR);
        f[1] = on(bad && action == PLACE_CONVEYOR);
        f[2] = on(good && action == PLACE_BIN);
        f[3] = on(bad && action == PLACE_BIN);
    }
    f[4] = on(action == CLAIM && state.placed());
    f[5] = on(action == PICK && state.onion == Location::Conveyor && state.prediction == Prediction::Unknown);
    f
}

pub fn build_onionworld(spec: &OnionworldSpec) -> Result<Environment> {
    if !(0.0..=1.0).contains(&spec.blemish_rate) {
        return Err(Error::validation("onionworld blemish rate outside [0, 1]"));
    }
    if spec.true_weights.len() != FEATURE_NAMES.len() {
        return Err(Error::DimensionMismatch {
            what: "onionworld true weights",
            expected: FEATURE_NAMES.len(),
            found: spec.true_weights.len(),
        });
    }
    let na = ACTION_NAMES.len();
    let mut t = Array3::zeros((NUM_STATES, na, NUM_STATES));
    let mut phi = Array3::zeros((NUM_STATES, na, FEATURE_NAMES.len()));
    for s in 0..NUM_STATES {
        let state = OnionState::from_index(s);
        for a in 0..na {
            for (next, p) in successors(state, a, spec.blemish_rate) {
                t[[s, a, next.index()]] += p;
            }
            for (k, v) in feature_vector(state, a).into_iter().enumerate() {
                phi[[s, a, k]] = v;
            }
        }
    }
    // A fresh onion on the conveyor, wherever the arm happens to be.
    let mut initial = Array1::zeros(NUM_STATES);
    for effector in LOCATIONS {
        let s = OnionState {
            onion: Location::Conveyor,
            effector,
            prediction: Prediction::Unknown,
        };
        initial[s.index()] = 0.25;
    }
    let mdp = DiscountedMdp::new(t, spec.discount, initial)?;
    let features = FeatureMap::new(phi)?;
    let observation = ObservationModel::confusion_kernel(NUM_STATES, na, spec.prediction_noise, |s, a| {
        let state = OnionState::from_index(s);
        let flipped = match state.prediction {
            Prediction::Good => Prediction::Bad,
            Prediction::Bad => Prediction::Good,
            Prediction::Unknown => return Vec::new(),
        };
        let seen = OnionState {
            prediction: flipped,
            ..state
        };
        vec![(encode_pair(seen.index(), a, na), 1.0)]
    })?;
    Ok(Environment {
        name: "onionworld".into(),
        mdp,
        features,
        observation,
        true_weights: FeatureWeights::from_slice(&spec.true_weights)?,
        kind: EnvironmentKind::Onionworld(spec.clone()),
    })
}

/// Run `policy` on `num_onions` onions, each starting on the conveyor with a
/// hidden class drawn at claim time. Inspection reveals the true class. An
/// onion counts as sorted positive once it lands in the bin; onions still
/// unsorted after `max_steps` count as left on the line.
pub fn simulate_sort<R: Rng + ?Sized>(
    policy: &DeterministicPolicy,
    spec: &OnionworldSpec,
    num_onions: usize,
    max_steps: usize,
    rng: &mut R,
) -> Result<ConfusionCounts> {
    if policy.actions().len() != NUM_STATES || policy.num_actions() != ACTION_NAMES.len() {
        return Err(Error::validation("sort policy is not an onionworld policy"));
    }
    let mut counts = ConfusionCounts::default();
    let mut effector = Location::Conveyor;
    for _ in 0..num_onions {
        let blemished = rng.random::<f64>() < spec.blemish_rate;
        let mut state = OnionState {
            onion: Location::Conveyor,
            effector,
            prediction: Prediction::Unknown,
        };
        let mut binned = false;
        for _ in 0..max_steps {
            let action = policy.action(state.index());
            if action == INSPECT && state.held() {
                let revealed = if blemished { Prediction::Bad } else { Prediction::Good };
                state = OnionState {
                    onion: Location::FrontOfFace,
                    effector: Location::FrontOfFace,
                    prediction: if state.prediction == Prediction::Unknown { revealed } else { state.prediction },
                };
                continue;
            }
            if (action == PLACE_BIN || action == PLACE_CONVEYOR) && state.held() {
                binned = action == PLACE_BIN;
                let to = if binned { Location::Bin } else { Location::Conveyor };
                effector = to;
                break;
            }
            let (next, _) = successors(state, action, 0.0)[0];
            state = next;
            effector = state.effector;
        }
        match (binned, blemished) {
            (true, true) => counts.tp += 1,
            (true, false) => counts.fp += 1,
            (false, false) => counts.tn += 1,
            (false, true) => counts.fn_ += 1,
        }
    }
    Ok(counts)
}
