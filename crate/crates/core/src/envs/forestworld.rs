//! A 4x4 grid traversed by a fugitive heading for a goal cell while avoiding
//! two surveyed cells. The only sensor noise is a tunnel at the goal, which
//! sometimes makes the fugitive appear one cell west of it.

use ndarray::{Array1, Array3};
use serde::{Deserialize, Serialize};

use crate::envs::{Environment, EnvironmentKind};
use crate::error::{Error, Result};
use crate::mdp::DiscountedMdp;
use crate::observation::{encode_pair, ObservationModel};
use crate::reward::{FeatureMap, FeatureWeights};

pub const GRID: usize = 4;

/// Cardinal moves in action-index order.
pub const ACTIONS: [(&str, isize, isize); 4] = [("north", 0, 1), ("east", 1, 0), ("south", 0, -1), ("west", -1, 0)];

pub fn cell_index(x: usize, y: usize) -> usize {
    x * GRID + y
}

pub fn cell_of(s: usize) -> (usize, usize) {
    (s / GRID, s % GRID)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StartCells {
    /// Every cell except the goal and the avoided cells.
    Free,
    /// Every cell except the goal.
    NonGoal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ForestworldSpec {
    /// Total probability of ending up in one of the three unintended neighbours.
    pub slip: f64,
    pub tunnel_noise: f64,
    pub avoid_cells: Vec<(usize, usize)>,
    pub goal_cell: (usize, usize),
    /// Where the tunnel makes the goal appear.
    pub tunnel_cell: (usize, usize),
    /// Avoid weights first, in `avoid_cells` order, then the goal weight.
    pub true_weights: Vec<f64>,
    pub start: StartCells,
    pub discount: f64,
}

impl Default for ForestworldSpec {
    fn default() -> Self {
        Self {
            slip: 0.1,
            tunnel_noise: 0.3,
            avoid_cells: vec![(1, 1), (3, 2)],
            goal_cell: (3, 3),
            tunnel_cell: (2, 3),
            true_weights: vec![-1.0, -1.0, 1.0],
            start: StartCells::Free,
            discount: 0.99,
        }
    }
}

fn neighbour(x: usize, y: usize, dx: isize, dy: isize) -> (usize, usize) {
    let nx = x as isize + dx;
    let ny = y as isize + dy;
    if (0..GRID as isize).contains(&nx) && (0..GRID as isize).contains(&ny) {
        (nx as usize, ny as usize)
    } else {
        (x, y)
    }
}

pub fn build_forestworld(spec: &ForestworldSpec) -> Result<Environment> {
    let in_grid = |&(x, y): &(usize, usize)| x < GRID && y < GRID;
    if !spec.avoid_cells.iter().all(in_grid) || !in_grid(&spec.goal_cell) || !in_grid(&spec.tunnel_cell) {
        return Err(Error::validation("forestworld cell outside the 4x4 grid"));
    }
    if !(0.0..=1.0).contains(&spec.slip) {
        return Err(Error::validation("forestworld slip outside [0, 1]"));
    }
    if spec.true_weights.len() != spec.avoid_cells.len() + 1 {
        return Err(Error::DimensionMismatch {
            what: "forestworld true weights",
            expected: spec.avoid_cells.len() + 1,
            found: spec.true_weights.len(),
        });
    }
    let ns = GRID * GRID;
    let na = ACTIONS.len();
    let goal = cell_index(spec.goal_cell.0, spec.goal_cell.1);

    let mut t = Array3::zeros((ns, na, ns));
    for s in 0..ns {
        let (x, y) = cell_of(s);
        for a in 0..na {
            if s == goal {
                t[[s, a, s]] = 1.0;
                continue;
            }
            for (b, &(_, dx, dy)) in ACTIONS.iter().enumerate() {
                let (nx, ny) = neighbour(x, y, dx, dy);
                let p = if a == b { 1.0 - spec.slip } else { spec.slip / 3.0 };
                t[[s, a, cell_index(nx, ny)]] += p;
            }
        }
    }

    let excluded = |s: usize| {
        s == goal
            || (spec.start == StartCells::Free
                && spec.avoid_cells.iter().any(|&(x, y)| cell_index(x, y) == s))
    };
    let free = (0..ns).filter(|&s| !excluded(s)).count();
    let initial = Array1::from_shape_fn(ns, |s| if excluded(s) { 0.0 } else { 1.0 / free as f64 });
    let mdp = DiscountedMdp::new(t, spec.discount, initial)?;

    let nk = spec.avoid_cells.len() + 1;
    let mut phi = Array3::zeros((ns, na, nk));
    for a in 0..na {
        for (k, &(x, y)) in spec.avoid_cells.iter().enumerate() {
            phi[[cell_index(x, y), a, k]] = 1.0;
        }
        phi[[goal, a, nk - 1]] = 1.0;
    }
    let features = FeatureMap::new(phi)?;

    let tunnel = cell_index(spec.tunnel_cell.0, spec.tunnel_cell.1);
    let observation = ObservationModel::confusion_kernel(ns, na, spec.tunnel_noise, |s, a| {
        if s == goal {
            vec![(encode_pair(tunnel, a, na), 1.0)]
        } else {
            Vec::new()
        }
    })?;

    Ok(Environment {
        name: "forestworld".into(),
        mdp,
        features,
        observation,
        true_weights: FeatureWeights::from_slice(&spec.true_weights)?,
        kind: EnvironmentKind::Forestworld,
    })
}
