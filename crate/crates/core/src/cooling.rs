//! The zero-threshold cooling chain: at each step one flip is chosen uniformly
//! among those that do not increase the energy; the chain stops when none is left.

use thiserror::Error;

use crate::rng::ChainRng;
use crate::tiling::{Ground, Tiling};

const ABSENT: u32 = u32::MAX;

/// Set of vertex indices with O(1) insert, remove and uniform indexing.
#[derive(Clone, Debug)]
pub struct AllowedSet {
    items: Vec<u32>,
    pos: Vec<u32>,
}

impl AllowedSet {
    pub fn new(universe: usize) -> Self {
        AllowedSet {
            items: Vec::new(),
            pos: vec![ABSENT; universe],
        }
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn contains(&self, v: usize) -> bool {
        self.pos[v] != ABSENT
    }

    pub fn get(&self, i: usize) -> usize {
        self.items[i] as usize
    }

    pub fn insert(&mut self, v: usize) {
        if self.pos[v] == ABSENT {
            self.pos[v] = self.items.len() as u32;
            self.items.push(v as u32);
        }
    }

    pub fn remove(&mut self, v: usize) {
        let p = self.pos[v];
        if p == ABSENT {
            return;
        }
        let last = self.items.pop().unwrap();
        if last as usize != v {
            self.items[p as usize] = last;
            self.pos[last as usize] = p;
        }
        self.pos[v] = ABSENT;
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.items.iter().map(|&v| v as usize)
    }

    /// Members in increasing order.
    pub fn sorted(&self) -> Vec<usize> {
        let mut v: Vec<usize> = self.iter().collect();
        v.sort_unstable();
        v
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CoolingError {
    #[error("verification failed at step {step}: {msg}")]
    Verification { step: u64, msg: String },
}

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum StepOutcome {
    Continued,
    Frozen,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum StopReason {
    Frozen,
    StepLimit,
}

impl std::fmt::Display for StopReason {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            StopReason::Frozen => "Frozen",
            StopReason::StepLimit => "StepLimit",
        })
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub struct StepRecord {
    pub t: u64,
    pub energy: u32,
    pub volume: u32,
    pub allowed: u32,
    pub phi: i64,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Trajectory {
    pub records: Vec<StepRecord>,
    pub t: u64,
    pub stop: StopReason,
    pub final_error_free: bool,
    pub initial_volume: u32,
    pub final_energy: u32,
    /// Set when the single-hexagon stop rule ended the run.
    pub degenerate: bool,
}

#[derive(Clone, Debug)]
pub struct CoolingState {
    tiling: Tiling,
    allowed: AllowedSet,
    step: u64,
    rng: ChainRng,
}

fn is_allowed(t: &Tiling, v: usize) -> bool {
    t.local_site(v).is_some_and(|s| s.delta_e <= 0)
}

impl CoolingState {
    pub fn new(tiling: Tiling, seed: u64) -> Self {
        let mut allowed = AllowedSet::new(tiling.heights().len());
        for v in 0..tiling.heights().len() {
            if is_allowed(&tiling, v) {
                allowed.insert(v);
            }
        }
        CoolingState {
            tiling,
            allowed,
            step: 0,
            rng: ChainRng::new(seed),
        }
    }

    pub fn tiling(&self) -> &Tiling {
        &self.tiling
    }

    pub fn into_tiling(self) -> Tiling {
        self.tiling
    }

    pub fn allowed(&self) -> &AllowedSet {
        &self.allowed
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    pub fn step(&mut self) -> StepOutcome {
        if self.allowed.is_empty() {
            return StepOutcome::Frozen;
        }
        let i = self.rng.below(self.allowed.len() as u64) as usize;
        let v = self.allowed.get(i);
        self.tiling.flip_index(v).expect("allowed site is live");
        let near = self.tiling.affected_by(v).to_vec();
        for w in near {
            let w = w as usize;
            if is_allowed(&self.tiling, w) {
                self.allowed.insert(w);
            } else {
                self.allowed.remove(w);
            }
        }
        self.step += 1;
        StepOutcome::Continued
    }

    /// Recomputes the allowed set from scratch and compares.
    pub fn verify_allowed_set(&self) -> bool {
        let fresh: Vec<usize> = self
            .tiling
            .flips()
            .iter()
            .filter(|s| s.delta_e <= 0)
            .map(|s| s.index)
            .collect();
        self.tiling.check_caches().is_ok() && fresh == self.allowed.sorted()
    }

    /// Whenever the energy is positive, some allowed flip lowers the cube count
    /// to a ground at most one cube farther than the nearest. The nearest
    /// volume itself may have no allowed descent when the two grounds are
    /// almost equidistant.
    pub fn check_descent(&self) -> bool {
        if self.tiling.energy() == 0 {
            return true;
        }
        let t = &self.tiling;
        self.allowed.iter().any(|v| {
            let s = t.site(v).unwrap();
            [Ground::Reference, Ground::Flipped]
                .into_iter()
                .any(|g| t.delta_cubes(&s, g) == -1 && t.cube_distance(g) <= t.volume() + 1)
        })
    }

    #[cfg(test)]
    pub(crate) fn corrupt(&mut self) {
        let v = self.allowed.get(0);
        self.allowed.remove(v);
    }
}

#[derive(Clone, Debug)]
pub struct RunOptions {
    /// 0 means unlimited.
    pub step_limit: u64,
    pub record: bool,
    /// Checks the allowed set and the descent property at every step.
    pub verify: bool,
    pub snapshot_every: Option<u64>,
}

impl RunOptions {
    pub fn for_tiles(n: usize) -> Self {
        RunOptions {
            step_limit: default_step_limit(n),
            record: true,
            verify: false,
            snapshot_every: None,
        }
    }
}

pub fn default_step_limit(n: usize) -> u64 {
    100 * (n as u64) * (n as u64)
}

/// Runs the chain to a frozen state or the step limit. `hook` sees the state at
/// `t = 0`, every `snapshot_every` steps and at the end.
pub fn run(
    initial: Tiling,
    seed: u64,
    opts: &RunOptions,
    mut hook: impl FnMut(u64, &Tiling),
) -> Result<Trajectory, CoolingError> {
    let initial_volume = initial.volume();
    let degenerate_domain = initial.num_tiles() == 3;
    let mut state = CoolingState::new(initial, seed);
    let mut records = Vec::new();
    let record = |s: &CoolingState, records: &mut Vec<StepRecord>| {
        let t = s.tiling();
        records.push(StepRecord {
            t: s.step,
            energy: t.energy(),
            volume: t.volume(),
            allowed: s.allowed.len() as u32,
            phi: t.phi().phi,
        });
    };
    let mut degenerate = false;
    let stop = loop {
        if opts.record {
            record(&state, &mut records);
        }
        if let Some(n) = opts.snapshot_every {
            if n > 0 && state.step.is_multiple_of(n) {
                hook(state.step, state.tiling());
            }
        }
        if opts.verify {
            if !state.verify_allowed_set() {
                return Err(CoolingError::Verification {
                    step: state.step,
                    msg: "allowed set drifted".into(),
                });
            }
            if !state.check_descent() {
                return Err(CoolingError::Verification {
                    step: state.step,
                    msg: "positive energy without a volume-lowering allowed flip".into(),
                });
            }
        }
        if degenerate_domain && state.tiling.energy() == 0 {
            degenerate = !state.allowed.is_empty();
            break StopReason::Frozen;
        }
        if opts.step_limit > 0 && state.step >= opts.step_limit {
            break StopReason::StepLimit;
        }
        if state.step() == StepOutcome::Frozen {
            break StopReason::Frozen;
        }
    };
    if let Some(n) = opts.snapshot_every {
        if n > 0 && !state.step.is_multiple_of(n) {
            hook(state.step, state.tiling());
        }
    }
    let t = state.tiling();
    Ok(Trajectory {
        records,
        t: state.step,
        stop,
        final_error_free: t.energy() == 0,
        initial_volume,
        final_energy: t.energy(),
        degenerate,
    })
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::domain::{hex_center, make_hexagon_domain};
    use crate::tiling::{extremal_tiling, Extreme};

    #[test]
    fn allowed_set_swap_remove() {
        let mut s = AllowedSet::new(10);
        for v in [3, 7, 1, 9] {
            s.insert(v);
        }
        s.insert(7);
        assert_eq!(s.len(), 4);
        s.remove(3);
        s.remove(3);
        assert_eq!(s.sorted(), vec![1, 7, 9]);
        assert!(!s.contains(3) && s.contains(9));
        for i in 0..s.len() {
            assert_eq!(s.pos[s.get(i)] as usize, i);
        }
    }

    #[test]
    fn error_free_start_freezes_immediately() {
        let d = Arc::new(make_hexagon_domain(3));
        let tr = run(
            Tiling::reference(&d),
            1,
            &RunOptions::for_tiles(d.num_tiles()),
            |_, _| {},
        )
        .unwrap();
        assert_eq!(tr.t, 0);
        assert_eq!(tr.stop, StopReason::Frozen);
        assert!(tr.final_error_free);
    }

    #[test]
    fn unit_island_can_only_vanish() {
        let d = Arc::new(make_hexagon_domain(4));
        let mut t = Tiling::reference(&d);
        t.flip_index(d.region().vertex_index(&hex_center(0, 0)).unwrap())
            .unwrap();
        let s = CoolingState::new(t, 3);
        assert_eq!(s.allowed().len(), 1);
        let mut s = s;
        s.step();
        assert_eq!(s.tiling().energy(), 0);
        assert_eq!(s.step(), StepOutcome::Frozen);
    }

    #[test]
    fn runs_are_deterministic_and_monotone() {
        let d = Arc::new(make_hexagon_domain(4));
        let top = extremal_tiling(&d, Extreme::Max);
        let opts = RunOptions {
            verify: true,
            ..RunOptions::for_tiles(d.num_tiles())
        };
        let a = run(top.clone(), 11, &opts, |_, _| {}).unwrap();
        let b = run(top.clone(), 11, &opts, |_, _| {}).unwrap();
        assert_eq!(a, b);
        assert!(a.records.windows(2).all(|w| w[1].energy <= w[0].energy));
        assert!(a
            .records
            .windows(2)
            .all(|w| (w[1].volume as i64 - w[0].volume as i64).abs() <= 1));
        assert_eq!(a.stop, StopReason::Frozen);
        assert!(a.final_error_free);
        assert!(a.t >= a.initial_volume as u64);
        assert_eq!(a.records.len() as u64, a.t + 1);
    }

    #[test]
    fn snapshots_follow_the_period() {
        let d = Arc::new(make_hexagon_domain(3));
        let top = extremal_tiling(&d, Extreme::Max);
        let mut seen = Vec::new();
        let opts = RunOptions {
            snapshot_every: Some(5),
            record: false,
            ..RunOptions::for_tiles(d.num_tiles())
        };
        let tr = run(top, 2, &opts, |t, tiling| {
            seen.push((t, tiling.num_tiles()))
        })
        .unwrap();
        assert!(tr.records.is_empty());
        let extra = u64::from(tr.t % 5 != 0);
        assert_eq!(seen.len() as u64, tr.t / 5 + 1 + extra);
        assert_eq!(seen.last().unwrap().0, tr.t);
        assert!(seen
            .iter()
            .all(|&(t, n)| (t % 5 == 0 || t == tr.t) && n == d.num_tiles()));
    }

    #[test]
    fn step_limit_stops_the_run() {
        let d = Arc::new(make_hexagon_domain(4));
        let top = extremal_tiling(&d, Extreme::Max);
        let opts = RunOptions {
            step_limit: 10,
            ..RunOptions::for_tiles(d.num_tiles())
        };
        let tr = run(top, 5, &opts, |_, _| {}).unwrap();
        assert_eq!((tr.t, tr.stop), (10, StopReason::StepLimit));
    }

    #[test]
    fn single_hexagon_stops_at_zero_energy() {
        let d = Arc::new(make_hexagon_domain(1));
        let tr = run(
            Tiling::reference(&d),
            0,
            &RunOptions::for_tiles(3),
            |_, _| {},
        )
        .unwrap();
        assert_eq!(tr.t, 0);
        assert!(tr.degenerate);
        assert_eq!(tr.stop, StopReason::Frozen);
    }

    #[test]
    fn allowed_set_survives_long_runs() {
        let d = Arc::new(make_hexagon_domain(8));
        let mut s = CoolingState::new(extremal_tiling(&d, Extreme::Max), 99);
        assert!(s.verify_allowed_set());
        for _ in 0..100 {
            if s.step() == StepOutcome::Frozen {
                break;
            }
        }
        assert!(s.verify_allowed_set());
        s.corrupt();
        assert!(!s.verify_allowed_set());
    }
}
