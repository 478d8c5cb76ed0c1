//! PreferenceEstimation on a discretized weight grid, plus the movie scoring
//! rule used for recommendation.
//!
//! A user scores a movie as `w · s`. Pairwise queries return `Yes` when the
//! first movie scores strictly higher (beyond a tie epsilon), `No` when the
//! second does, and `Equal` otherwise.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{Task, TaskKind};
use crate::belief::{ObservationTable, StateSpace};
use crate::error::{Error, Result};

pub const DEFAULT_TIE_EPS: f64 = 1e-9;
pub const DEFAULT_SIMILARITY_THRESHOLD: f64 = 0.88;
pub const DEFAULT_GRID_LEVELS: usize = 6;
pub const MAX_GRID_STATES: usize = 100_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Comparison {
    Yes,
    No,
    Equal,
}

impl Comparison {
    pub const ALL: [Comparison; 3] = [Comparison::Yes, Comparison::No, Comparison::Equal];

    pub fn index(self) -> usize {
        self as usize
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Movie {
    pub name: String,
    pub attributes: Vec<f64>,
}

impl Movie {
    pub fn new(name: impl Into<String>, attributes: Vec<f64>) -> Self {
        Self {
            name: name.into(),
            attributes,
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            expected: a.len(),
            got: b.len(),
        });
    }
    Ok(a.iter().zip(b).map(|(x, y)| x * y).sum())
}

/// `Σ w_i · s_i`.
pub fn pe_score(weights: &[f64], attributes: &[f64]) -> Result<f64> {
    dot(weights, attributes)
}

pub fn pe_compare(weights: &[f64], a: &[f64], b: &[f64], tie_eps: f64) -> Result<Comparison> {
    let (sa, sb) = (pe_score(weights, a)?, pe_score(weights, b)?);
    Ok(if sa > sb + tie_eps {
        Comparison::Yes
    } else if sb > sa + tie_eps {
        Comparison::No
    } else {
        Comparison::Equal
    })
}

/// Highest-scoring movie; ties go to the lexicographically smallest name.
pub fn mr_recommend<'a>(weights: &[f64], movies: &'a [Movie]) -> Result<&'a Movie> {
    let mut best: Option<(&Movie, f64)> = None;
    for m in movies {
        let s = pe_score(weights, &m.attributes)?;
        best = match best {
            Some((bm, bs)) if bs > s || (bs == s && bm.name <= m.name) => Some((bm, bs)),
            _ => Some((m, s)),
        };
    }
    best.map(|(m, _)| m)
        .ok_or_else(|| Error::Empty("no unseen movies to recommend".into()))
}

pub fn cosine_similarity(v: &[f64], w: &[f64]) -> Result<f64> {
    let d = dot(v, w)?;
    let (nv, nw) = (dot(v, v)?.sqrt(), dot(w, w)?.sqrt());
    if nv == 0.0 || nw == 0.0 {
        return Err(Error::ZeroVector);
    }
    Ok(d / (nv * nw))
}

/// 1 when `cos(v, v⋆) > threshold`, else 0.
pub fn binary_similarity(v: &[f64], v_star: &[f64], threshold: f64) -> Result<u8> {
    Ok(u8::from(cosine_similarity(v, v_star)? > threshold))
}

/// Grid levels `0, 1/(n−1), …, 1`.
pub fn grid_levels(levels: usize) -> Result<Vec<f64>> {
    if levels < 2 {
        return Err(Error::InvalidParameter(format!(
            "need at least 2 grid levels, got {levels}"
        )));
    }
    Ok((0..levels)
        .map(|i| i as f64 / (levels - 1) as f64)
        .collect())
}

/// Every weight vector on the grid, last coordinate varying fastest.
pub fn pe_grid_points(dimension: usize, levels: usize) -> Result<Vec<Vec<f64>>> {
    let values = grid_levels(levels)?;
    if dimension == 0 {
        return Err(Error::InvalidParameter("dimension must be positive".into()));
    }
    let total = levels
        .checked_pow(dimension as u32)
        .filter(|&t| t <= MAX_GRID_STATES)
        .ok_or_else(|| {
            Error::InvalidParameter(format!(
                "{levels}^{dimension} grid points exceed {MAX_GRID_STATES}"
            ))
        })?;
    Ok((0..total)
        .map(|code| {
            let mut v = vec![0.0; dimension];
            let mut rest = code;
            for slot in v.iter_mut().rev() {
                *slot = values[rest % levels];
                rest /= levels;
            }
            v
        })
        .collect())
}

fn weights_label(w: &[f64]) -> String {
    let parts: Vec<String> = w.iter().map(|x| format!("{x:.3}")).collect();
    format!("({})", parts.join(","))
}

pub fn pe_grid_states(dimension: usize, levels: usize) -> Result<StateSpace> {
    let points = pe_grid_points(dimension, levels)?;
    StateSpace::new(points.iter().map(|p| weights_label(p)).collect(), 0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreferenceInstance {
    pub weights: Vec<f64>,
    pub reference_movies: Vec<Movie>,
    pub grid_levels: usize,
    #[serde(default)]
    pub unseen_movies: Vec<Movie>,
}

/// Reference catalogue used by the default instance (three attributes).
pub fn default_reference_movies() -> Vec<Movie> {
    [
        ("M1", [0.9, 0.1, 0.3]),
        ("M2", [0.2, 0.8, 0.4]),
        ("M3", [0.5, 0.5, 0.9]),
        ("M4", [0.1, 0.3, 0.7]),
        ("M5", [0.7, 0.6, 0.1]),
        ("M6", [0.3, 0.9, 0.8]),
        ("M7", [0.8, 0.4, 0.6]),
    ]
    .into_iter()
    .map(|(n, a)| Movie::new(n, a.to_vec()))
    .collect()
}

/// Preference weights that go with [`worked_example_movies`].
pub const WORKED_EXAMPLE_WEIGHTS: [f64; 3] = [0.2, 0.7, 0.5];

pub fn worked_example_movies() -> Vec<Movie> {
    vec![
        Movie::new("Movie_A", vec![0.6, 1.0, 0.8]),
        Movie::new("Movie_B", vec![1.2, 0.3, 0.4]),
        Movie::new("Movie_C", vec![0.5, 0.8, 0.9]),
    ]
}

impl PreferenceInstance {
    /// Three attributes, default grid, hidden weights drawn from the non-zero
    /// grid points deterministically in `seed`.
    pub fn default_catalogue(seed: u64) -> Result<Self> {
        let points = pe_grid_points(3, DEFAULT_GRID_LEVELS)?;
        let nonzero: Vec<&Vec<f64>> = points
            .iter()
            .filter(|p| p.iter().any(|&x| x > 0.0))
            .collect();
        let pick = (crate::runner::mix_seed(seed, 0x9e) % nonzero.len() as u64) as usize;
        let inst = Self {
            weights: nonzero[pick].clone(),
            reference_movies: default_reference_movies(),
            grid_levels: DEFAULT_GRID_LEVELS,
            unseen_movies: worked_example_movies(),
        };
        inst.validate()?;
        Ok(inst)
    }

    pub fn dimension(&self) -> usize {
        self.weights.len()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.dimension();
        if n == 0 {
            return Err(Error::InvalidInstance("empty weight vector".into()));
        }
        if self.weights.iter().any(|w| !(0.0..=1.0).contains(w)) {
            return Err(Error::InvalidInstance("weights must lie in [0,1]".into()));
        }
        if self.weights.iter().all(|&w| w == 0.0) {
            return Err(Error::InvalidInstance("hidden weights are all zero".into()));
        }
        if self.reference_movies.len() < 2 {
            return Err(Error::InvalidInstance(
                "need at least two reference movies".into(),
            ));
        }
        for m in self.reference_movies.iter().chain(&self.unseen_movies) {
            if m.attributes.len() != n {
                return Err(Error::InvalidInstance(format!(
                    "movie {} has {} attributes, expected {n}",
                    m.name,
                    m.attributes.len()
                )));
            }
            if m.attributes.iter().any(|x| !x.is_finite()) {
                return Err(Error::InvalidInstance(format!(
                    "movie {} has a non-finite attribute",
                    m.name
                )));
            }
        }
        let levels = grid_levels(self.grid_levels)?;
        if self
            .weights
            .iter()
            .any(|w| !levels.iter().any(|l| (l - w).abs() < 1e-12))
        {
            return Err(Error::InvalidInstance(format!(
                "weights must lie on the {}-level grid",
                self.grid_levels
            )));
        }
        Ok(())
    }

    /// Actions are unordered reference pairs `(i, j)` with `i < j`.
    pub fn actions(&self) -> Vec<(usize, usize)> {
        let n = self.reference_movies.len();
        (0..n)
            .flat_map(|i| ((i + 1)..n).map(move |j| (i, j)))
            .collect()
    }

    pub fn task(&self) -> Result<Task> {
        self.validate()?;
        let points = pe_grid_points(self.dimension(), self.grid_levels)?;
        let truth = points
            .iter()
            .position(|p| {
                p.iter()
                    .zip(&self.weights)
                    .all(|(x, w)| (x - w).abs() < 1e-12)
            })
            .expect("validated weights lie on the grid");
        let actions = self.actions();
        let movies = &self.reference_movies;
        let table = ObservationTable::from_fn(points.len(), actions.len(), 3, |s, a| {
            let (i, j) = actions[a];
            pe_compare(
                &points[s],
                &movies[i].attributes,
                &movies[j].attributes,
                DEFAULT_TIE_EPS,
            )
            .expect("validated dimensions")
            .index()
        })?;
        let state_labels = points.iter().map(|p| weights_label(p)).collect();
        Ok(Task {
            kind: TaskKind::PreferenceEstimation,
            space: StateSpace::new(state_labels, truth)?,
            table: Arc::new(table),
            action_labels: actions
                .iter()
                .map(|&(i, j)| format!("{}>{}", movies[i].name, movies[j].name))
                .collect(),
            observation_labels: Comparison::ALL.iter().map(|c| format!("{c:?}")).collect(),
            action_state: None,
            action_embeddings: actions
                .iter()
                .map(|&(i, j)| {
                    let mut v = movies[i].attributes.clone();
                    v.extend_from_slice(&movies[j].attributes);
                    v
                })
                .collect(),
            state_features: Some(points),
            initial_step: None,
            solved_observation: None,
        })
    }
}
