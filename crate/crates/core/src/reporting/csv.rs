//! CSV documents. Every writer is a pure function of its input.

use std::fmt::Write as _;

use super::experiment::{ObservableRecord, ScalingPoint, TrialRecord};
use crate::cooling::Trajectory;
use crate::exact::{ExactTimes, StateSpace};
use crate::Rational;

pub fn trials_csv(records: &[TrialRecord]) -> String {
    let mut s = String::from("mode,side,n,trial,seed,T,final_energy,wall_ms\n");
    for r in records {
        writeln!(
            s,
            "{},{},{},{},{},{},{},{}",
            r.mode.name(),
            r.side,
            r.n,
            r.trial,
            r.seed,
            r.t,
            r.final_energy,
            r.wall_ms
        )
        .unwrap();
    }
    s
}

pub fn summary_csv(points: &[ScalingPoint]) -> String {
    let mut s = String::from("mode,side,n,trials,mean_T,stderr_T\n");
    for p in points {
        writeln!(
            s,
            "{},{},{},{},{},{}",
            p.mode.name(),
            p.side,
            p.n,
            p.trials,
            p.mean_t,
            p.stderr_t
        )
        .unwrap();
    }
    s
}

pub fn observables_csv(records: &[ObservableRecord]) -> String {
    let mut s = String::from("side,n,trial,V,E,H\n");
    for r in records {
        writeln!(
            s,
            "{},{},{},{},{},{}",
            r.side, r.n, r.trial, r.volume, r.energy, r.levels
        )
        .unwrap();
    }
    s
}

/// Per-step records, then a closing `T,<steps>,<stop reason>` line.
pub fn trajectory_csv(tr: &Trajectory) -> String {
    let mut s = String::from("t,energy,volume,allowed_flips,phi\n");
    for r in &tr.records {
        writeln!(
            s,
            "{},{},{},{},{}",
            r.t, r.energy, r.volume, r.allowed, r.phi
        )
        .unwrap();
    }
    writeln!(s, "T,{},{}", tr.t, tr.stop).unwrap();
    s
}

fn ratio(q: &Rational) -> String {
    format!("{}/{}", q.numer(), q.denom())
}

/// One row per state, then the summary header and row; the aggregates are
/// written as `numerator/denominator`.
pub fn exact_csv(space: &StateSpace, times: &ExactTimes<Rational>) -> String {
    let mut s = String::from("state_id,energy,volume,phi,expected_T_num,expected_T_den\n");
    for (i, t) in space.states().iter().enumerate() {
        let q = &times.expected[i];
        writeln!(
            s,
            "{},{},{},{},{},{}",
            i,
            t.energy(),
            t.volume(),
            t.phi().phi,
            q.numer(),
            q.denom()
        )
        .unwrap();
    }
    s.push_str("n,num_states,worst_T,average_T\n");
    writeln!(
        s,
        "{},{},{},{}",
        space.domain().num_tiles(),
        space.len(),
        ratio(&times.worst),
        ratio(&times.average)
    )
    .unwrap();
    s
}
