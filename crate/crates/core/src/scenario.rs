//! Urban road grid, user population and constant-velocity kinematics.
//!
//! Vehicles drive on straight multi-lane roads laid out as a Manhattan grid
//! centred on the origin. Same-lane gaps follow a shifted exponential with
//! mean `spacing_s * speed` and a hard minimum of `min_gap_m`, so the mean gap
//! is exactly the spacing rule. Pedestrians walk on the sidewalks and only
//! ever receive.
//!
//! Positions are sampled at slot boundaries: in slot `i` a user sits at
//! `x0 + i * dt * v`.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ids::{SlotId, UserId};
use crate::seed;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ScenarioError {
    #[error("invalid scenario config: {0}")]
    InvalidConfig(String),
    #[error(
        "road_length_m = {lane_length_m} is too short: a lane needs {needed_m:.1} m for \
         {vehicles} vehicles at mean gap {mean_gap_m:.1} m"
    )]
    LaneTooShort {
        lane_length_m: f64,
        vehicles: usize,
        mean_gap_m: f64,
        needed_m: f64,
    },
    #[error("road grid holds no vehicle at mean gap {mean_gap_m:.1} m")]
    EmptyGrid { mean_gap_m: f64 },
    #[error("users {0} and {1} share a position; the literal predictor is undefined")]
    CoincidentUsers(UserId, UserId),
    #[error("user {0} is not part of the scenario")]
    UnknownUser(UserId),
    #[error("distance between {0} and itself requested")]
    SameUser(UserId),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Vehicle,
    Pedestrian,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KinematicState {
    /// Metres, at the start of the period.
    pub position: [f64; 2],
    /// Metres per second.
    pub velocity: [f64; 2],
    pub role: Role,
}

/// How the vehicle count is determined.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Population {
    /// Exactly `n_users` users; each lane's platoon is centred on the road
    /// midpoint, so the occupied stretch grows with the mean gap.
    #[default]
    Fixed,
    /// Every lane is filled end to end at the spacing rule; the vehicle count
    /// follows from road length and speed.
    Fill,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    pub horizontal_roads: usize,
    pub vertical_roads: usize,
    /// Length of every road, metres.
    pub road_length_m: f64,
    /// Distance between parallel roads, metres.
    pub road_spacing_m: f64,
    pub road_width_m: f64,
    /// Lanes per road, split evenly between the two directions.
    pub lanes_per_road: usize,
    pub sidewalk_width_m: f64,
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig {
            horizontal_roads: 1,
            vertical_roads: 0,
            road_length_m: 2000.0,
            road_spacing_m: 250.0,
            road_width_m: 20.0,
            lanes_per_road: 2,
            sidewalk_width_m: 3.0,
        }
    }
}

impl GridConfig {
    fn lane_count(&self) -> usize {
        (self.horizontal_roads + self.vertical_roads) * self.lanes_per_road
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    /// Total users (vehicles plus pedestrians) in `fixed` population mode.
    pub n_users: usize,
    /// Explicit pedestrian count; when absent `pedestrian_fraction` applies.
    pub pedestrians: Option<usize>,
    pub pedestrian_fraction: f64,
    pub population: Population,
    /// Slots per transmission period (`T_v`).
    pub slots: usize,
    pub slot_duration_s: f64,
    /// Nominal vehicle speed, m/s.
    pub speed_mps: f64,
    /// Per-vehicle speed is uniform in `speed * (1 ± jitter)`.
    pub speed_jitter: f64,
    /// Mean same-lane headway in seconds; the mean gap is this times speed.
    pub spacing_s: f64,
    pub min_gap_m: f64,
    /// Communication range of interest `r`, metres.
    pub range_m: f64,
    pub seed: u64,
    pub grid: GridConfig,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            n_users: 40,
            pedestrians: None,
            pedestrian_fraction: 0.1,
            population: Population::Fixed,
            slots: 40,
            slot_duration_s: 1e-3,
            speed_mps: 60.0 / 3.6,
            speed_jitter: 0.0,
            spacing_s: 2.5,
            min_gap_m: 5.0,
            range_m: 150.0,
            seed: 1,
            grid: GridConfig::default(),
        }
    }
}

impl ScenarioConfig {
    pub fn mean_gap_m(&self) -> f64 {
        self.spacing_s * self.speed_mps
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        let bad = |msg: String| Err(ScenarioError::InvalidConfig(msg));
        if self.population == Population::Fixed && self.n_users == 0 {
            return bad("n_users must be at least 1".into());
        }
        if self.slots == 0 {
            return bad("slots must be at least 1".into());
        }
        if !(self.range_m > 0.0) {
            return bad(format!("range_m must be positive, got {}", self.range_m));
        }
        if !(self.spacing_s > 0.0) {
            return bad(format!("spacing_s must be positive, got {}", self.spacing_s));
        }
        if !(self.slot_duration_s > 0.0) {
            return bad("slot_duration_s must be positive".into());
        }
        if !(self.speed_mps > 0.0) {
            return bad(format!("speed_mps must be positive, got {}", self.speed_mps));
        }
        if !(0.0..1.0).contains(&self.speed_jitter) {
            return bad("speed_jitter must lie in [0, 1)".into());
        }
        if !(0.0..1.0).contains(&self.pedestrian_fraction) {
            return bad("pedestrian_fraction must lie in [0, 1)".into());
        }
        if self.min_gap_m < 0.0 || self.mean_gap_m() <= self.min_gap_m {
            return bad(format!(
                "mean gap {:.2} m (spacing_s x speed) must exceed min_gap_m {:.2} m",
                self.mean_gap_m(),
                self.min_gap_m
            ));
        }
        let g = &self.grid;
        if g.horizontal_roads + g.vertical_roads == 0 || g.lanes_per_road == 0 {
            return bad("grid needs at least one road with one lane".into());
        }
        if !(g.road_length_m > 0.0) || g.road_width_m < 0.0 || g.sidewalk_width_m < 0.0 {
            return bad("road dimensions must be positive".into());
        }
        Ok(())
    }
}

/// Distance predictor used by the base station.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DistanceMode {
    /// Norm of the advanced relative position.
    #[default]
    Kinematic,
    /// `i * v_rel . (x_m - x_j) / |x_m - x_j|`, the radial closing term. Not a
    /// distance (it is zero for static geometry); kept for auditing.
    RadialProjection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub config: ScenarioConfig,
    users: Vec<KinematicState>,
}

struct Lane {
    /// Fixed coordinate of the lane centre line.
    offset: f64,
    horizontal: bool,
    forward: bool,
    road: usize,
}

impl Scenario {
    /// Builds a scenario from explicit user states (imports and tests).
    pub fn from_users(config: ScenarioConfig, users: Vec<KinematicState>) -> Self {
        Scenario { config, users }
    }

    /// Places vehicles and pedestrians on the configured road grid.
    /// Deterministic in `config.seed`.
    pub fn generate(config: &ScenarioConfig) -> Result<Scenario, ScenarioError> {
        config.validate()?;
        let mut rng = seed::stream(config.seed, "scenario");
        let g = &config.grid;
        let lanes = Self::lanes(g);
        let mean_gap = config.mean_gap_m();
        let half = g.road_length_m / 2.0;

        // (lane, along-road coordinate) per vehicle
        let mut placed: Vec<(usize, f64)> = Vec::new();
        match config.population {
            Population::Fixed => {
                let n_ped = Self::fixed_pedestrians(config);
                let n_veh = config.n_users - n_ped;
                let per_lane: Vec<usize> = (0..lanes.len())
                    .map(|l| n_veh / lanes.len() + usize::from(l < n_veh % lanes.len()))
                    .collect();
                for (l, &count) in per_lane.iter().enumerate() {
                    if count == 0 {
                        continue;
                    }
                    let gaps: Vec<f64> = (1..count)
                        .map(|_| draw_gap(&mut rng, mean_gap, config.min_gap_m))
                        .collect();
                    let span: f64 = gaps.iter().sum();
                    let jitter = (rng.random::<f64>() - 0.5) * mean_gap;
                    let start = -span / 2.0 + jitter;
                    if start < -half || start + span > half {
                        return Err(ScenarioError::LaneTooShort {
                            lane_length_m: g.road_length_m,
                            vehicles: count,
                            mean_gap_m: mean_gap,
                            needed_m: span + jitter.abs() * 2.0,
                        });
                    }
                    let mut s = start;
                    placed.push((l, s));
                    for gap in gaps {
                        s += gap;
                        placed.push((l, s));
                    }
                }
            }
            Population::Fill => {
                for l in 0..lanes.len() {
                    let mut s = -half + rng.random::<f64>() * mean_gap;
                    while s <= half {
                        placed.push((l, s));
                        s += draw_gap(&mut rng, mean_gap, config.min_gap_m);
                    }
                }
                if placed.is_empty() {
                    return Err(ScenarioError::EmptyGrid {
                        mean_gap_m: mean_gap,
                    });
                }
            }
        }

        let mut users = Vec::with_capacity(placed.len());
        let mut road_span: Vec<Option<(f64, f64)>> =
            vec![None; g.horizontal_roads + g.vertical_roads];
        for &(l, s) in &placed {
            let lane = &lanes[l];
            let speed = config.speed_mps
                * (1.0 + config.speed_jitter * (2.0 * rng.random::<f64>() - 1.0));
            let dir = if lane.forward { 1.0 } else { -1.0 };
            let (position, velocity) = if lane.horizontal {
                ([s, lane.offset], [dir * speed, 0.0])
            } else {
                ([lane.offset, s], [0.0, dir * speed])
            };
            users.push(KinematicState {
                position,
                velocity,
                role: Role::Vehicle,
            });
            let span = road_span[lane.road].get_or_insert((s, s));
            span.0 = span.0.min(s);
            span.1 = span.1.max(s);
        }

        let n_ped = match config.population {
            Population::Fixed => Self::fixed_pedestrians(config),
            Population::Fill => config.pedestrians.unwrap_or_else(|| {
                let f = config.pedestrian_fraction;
                (f / (1.0 - f) * users.len() as f64).round() as usize
            }),
        };
        let roads = g.horizontal_roads + g.vertical_roads;
        for _ in 0..n_ped {
            let road = rng.random_range(0..roads);
            let horizontal = road < g.horizontal_roads;
            let axis = Self::road_axis(g, road);
            let side = if rng.random::<bool>() { 1.0 } else { -1.0 };
            let offset = axis + side * (g.road_width_m + g.sidewalk_width_m) / 2.0;
            let (lo, hi) = road_span[road].unwrap_or((-half, half));
            let s = lo + rng.random::<f64>() * (hi - lo);
            let speed = rng.random_range(0.5..1.5);
            let dir = if rng.random::<bool>() { 1.0 } else { -1.0 };
            let (position, velocity) = if horizontal {
                ([s, offset], [dir * speed, 0.0])
            } else {
                ([offset, s], [0.0, dir * speed])
            };
            users.push(KinematicState {
                position,
                velocity,
                role: Role::Pedestrian,
            });
        }

        Ok(Scenario {
            config: config.clone(),
            users,
        })
    }

    fn fixed_pedestrians(config: &ScenarioConfig) -> usize {
        let n = config.n_users;
        let wanted = config
            .pedestrians
            .unwrap_or_else(|| (config.pedestrian_fraction * n as f64).round() as usize);
        wanted.min(n.saturating_sub(1))
    }

    fn road_axis(g: &GridConfig, road: usize) -> f64 {
        let (idx, count) = if road < g.horizontal_roads {
            (road, g.horizontal_roads)
        } else {
            (road - g.horizontal_roads, g.vertical_roads)
        };
        (idx as f64 - (count as f64 - 1.0) / 2.0) * g.road_spacing_m
    }

    fn lanes(g: &GridConfig) -> Vec<Lane> {
        let mut lanes = Vec::with_capacity(g.lane_count());
        for road in 0..g.horizontal_roads + g.vertical_roads {
            let axis = Self::road_axis(g, road);
            for l in 0..g.lanes_per_road {
                let rel = (l as f64 + 0.5) / g.lanes_per_road as f64 - 0.5;
                lanes.push(Lane {
                    offset: axis + rel * g.road_width_m,
                    horizontal: road < g.horizontal_roads,
                    forward: l < g.lanes_per_road.div_ceil(2),
                    road,
                });
            }
        }
        lanes
    }

    pub fn len(&self) -> usize {
        self.users.len()
    }

    pub fn is_empty(&self) -> bool {
        self.users.is_empty()
    }

    pub fn users(&self) -> &[KinematicState] {
        &self.users
    }

    pub fn user(&self, id: UserId) -> Result<&KinematicState, ScenarioError> {
        self.users.get(id.0).ok_or(ScenarioError::UnknownUser(id))
    }

    pub fn ids(&self) -> impl Iterator<Item = UserId> + '_ {
        (0..self.users.len()).map(UserId)
    }

    /// Users allowed to transmit.
    pub fn vehicles(&self) -> Vec<UserId> {
        self.ids()
            .filter(|u| self.users[u.0].role == Role::Vehicle)
            .collect()
    }

    pub fn slot_ids(&self) -> impl Iterator<Item = SlotId> {
        (0..self.config.slots).map(SlotId::from_index)
    }

    pub fn position_at(&self, id: UserId, slot: SlotId) -> [f64; 2] {
        let u = &self.users[id.0];
        let t = slot.number() as f64 * self.config.slot_duration_s;
        [
            u.position[0] + t * u.velocity[0],
            u.position[1] + t * u.velocity[1],
        ]
    }

    pub fn predict_distance(
        &self,
        j: UserId,
        m: UserId,
        slot: SlotId,
        mode: DistanceMode,
    ) -> Result<f64, ScenarioError> {
        if j == m {
            return Err(ScenarioError::SameUser(j));
        }
        let uj = self.user(j)?;
        let um = self.user(m)?;
        let dx = [
            um.position[0] - uj.position[0],
            um.position[1] - uj.position[1],
        ];
        let dv = [
            um.velocity[0] - uj.velocity[0],
            um.velocity[1] - uj.velocity[1],
        ];
        let i = slot.number() as f64;
        match mode {
            DistanceMode::Kinematic => {
                let t = i * self.config.slot_duration_s;
                Ok((dx[0] + t * dv[0]).hypot(dx[1] + t * dv[1]))
            }
            DistanceMode::RadialProjection => {
                let norm = dx[0].hypot(dx[1]);
                if norm == 0.0 {
                    return Err(ScenarioError::CoincidentUsers(j, m));
                }
                Ok(i * (dv[0] * dx[0] + dv[1] * dx[1]) / norm)
            }
        }
    }

    /// Users within `range` of `m` in `slot` (boundary inclusive), excluding `m`.
    pub fn neighbors(&self, m: UserId, slot: SlotId, range: f64) -> Vec<UserId> {
        let pm = self.position_at(m, slot);
        self.ids()
            .filter(|&j| j != m)
            .filter(|&j| {
                let pj = self.position_at(j, slot);
                (pj[0] - pm[0]).hypot(pj[1] - pm[1]) <= range
            })
            .collect()
    }
}

fn draw_gap(rng: &mut ChaCha8Rng, mean: f64, min_gap: f64) -> f64 {
    let u: f64 = 1.0 - rng.random::<f64>();
    min_gap - (mean - min_gap) * u.ln()
}

/// Per-slot pairwise distances and neighbour lists for one range `r`.
#[derive(Debug, Clone)]
pub struct Geometry {
    n: usize,
    slots: usize,
    range: f64,
    dist: Vec<f64>,
    neighbors: Vec<Vec<UserId>>,
}

impl Geometry {
    pub fn new(scenario: &Scenario, range: f64) -> Self {
        let n = scenario.len();
        let slots = scenario.config.slots;
        let mut dist = vec![0.0; slots * n * n];
        let mut neighbors = vec![Vec::new(); slots * n];
        for s in 0..slots {
            let slot = SlotId::from_index(s);
            let pos: Vec<[f64; 2]> = scenario.ids().map(|u| scenario.position_at(u, slot)).collect();
            for a in 0..n {
                for b in (a + 1)..n {
                    let d = (pos[a][0] - pos[b][0]).hypot(pos[a][1] - pos[b][1]);
                    dist[(s * n + a) * n + b] = d;
                    dist[(s * n + b) * n + a] = d;
                    if d <= range {
                        neighbors[s * n + a].push(UserId(b));
                        neighbors[s * n + b].push(UserId(a));
                    }
                }
            }
        }
        for list in &mut neighbors {
            list.sort_unstable();
        }
        Geometry {
            n,
            slots,
            range,
            dist,
            neighbors,
        }
    }

    pub fn users(&self) -> usize {
        self.n
    }

    pub fn slots(&self) -> usize {
        self.slots
    }

    pub fn range(&self) -> f64 {
        self.range
    }

    #[inline]
    pub fn distance(&self, a: UserId, b: UserId, slot: SlotId) -> f64 {
        self.dist[(slot.index() * self.n + a.0) * self.n + b.0]
    }

    #[inline]
    pub fn in_range(&self, a: UserId, b: UserId, slot: SlotId) -> bool {
        a != b && self.distance(a, b, slot) <= self.range
    }

    pub fn neighbors(&self, m: UserId, slot: SlotId) -> &[UserId] {
        &self.neighbors[slot.index() * self.n + m.0]
    }
}
