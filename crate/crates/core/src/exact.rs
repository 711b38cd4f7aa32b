//! Exhaustive enumeration of small domains and exact expected absorption times
//! of the cooling chain.

use std::collections::{HashMap, VecDeque};
use std::sync::Arc;

use rayon::prelude::*;
use thiserror::Error;

use crate::domain::{Domain, Region, NONE};
use crate::hull::is_triconvex_from;
use crate::lattice::Dir;
use crate::scalar::Field;
use crate::tiling::{leq_modulus, Tiling};

pub const DEFAULT_CAP: usize = 2_000_000;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ExactError {
    #[error("more than {0} states")]
    TooLarge(usize),
    #[error("state {0} cannot reach an absorbing state")]
    NonAbsorbing(usize),
    #[error("state graph is not connected under flips")]
    Disconnected,
    #[error("no state satisfies the target predicate")]
    Unreachable,
    #[error("minimal triconvex majorant is not unique")]
    MinimumNotUnique,
    #[error("no triconvex state lies above the input")]
    NoneAbove,
    #[error("tiling is not in the state space")]
    UnknownState,
}

/// Partner choice for the lowest uncovered triangle, recursively.
fn backtrack(
    region: &Region,
    partner: &mut [Option<Dir>],
    next: usize,
    visit: &mut dyn FnMut(&[Option<Dir>]) -> bool,
) -> bool {
    let mut t = next;
    while t < partner.len() && partner[t].is_some() {
        t += 1;
    }
    if t == partner.len() {
        return visit(partner);
    }
    for d in Dir::ALL {
        let u = region.tri_nbr[t][d.index()];
        if u == NONE || partner[u as usize].is_some() {
            continue;
        }
        partner[t] = Some(d);
        partner[u as usize] = Some(d);
        let go_on = backtrack(region, partner, t + 1, visit);
        partner[t] = None;
        partner[u as usize] = None;
        if !go_on {
            return false;
        }
    }
    true
}

fn unwrap_partners(p: &[Option<Dir>]) -> Vec<Dir> {
    p.iter().map(|d| d.expect("complete matching")).collect()
}

/// Calls `visit` on every tiling of the region; stops early when it returns false.
pub fn for_each_matching(region: &Region, mut visit: impl FnMut(&[Dir]) -> bool) {
    let mut partner = vec![None; region.num_triangles()];
    backtrack(region, &mut partner, 0, &mut |p| visit(&unwrap_partners(p)));
}

/// Number of tilings, or `TooLarge` once `cap` is exceeded.
pub fn count_matchings(region: &Region, cap: usize) -> Result<usize, ExactError> {
    let mut n = 0usize;
    for_each_matching(region, |_| {
        n += 1;
        n <= cap
    });
    if n > cap {
        Err(ExactError::TooLarge(cap))
    } else {
        Ok(n)
    }
}

/// Visits every tiling of the domain in parallel, without storing them.
pub fn par_for_each_tiling(domain: &Arc<Domain>, visit: impl Fn(Tiling) + Sync) {
    let region = domain.region();
    // split the search tree at a fixed depth into independent prefixes
    let mut prefixes: Vec<Vec<Option<Dir>>> = vec![vec![None; region.num_triangles()]];
    for _ in 0..6 {
        let mut next = Vec::new();
        for p in prefixes {
            let Some(t) = p.iter().position(|d| d.is_none()) else {
                next.push(p);
                continue;
            };
            for d in Dir::ALL {
                let u = region.tri_nbr[t][d.index()];
                if u == NONE || p[u as usize].is_some() {
                    continue;
                }
                let mut q = p.clone();
                q[t] = Some(d);
                q[u as usize] = Some(d);
                next.push(q);
            }
        }
        prefixes = next;
    }
    prefixes.into_par_iter().for_each(|mut p| {
        backtrack(region, &mut p, 0, &mut |q| {
            visit(Tiling::from_partners(domain, unwrap_partners(q)).expect("enumerated matching"));
            true
        });
    });
}

fn key(p: &[Dir]) -> Vec<u8> {
    p.iter().map(|d| d.index() as u8).collect()
}

/// All tilings of a domain with their cooling and flip graphs.
#[derive(Clone, Debug)]
pub struct StateSpace {
    domain: Arc<Domain>,
    states: Vec<Tiling>,
    index: HashMap<Vec<u8>, u32>,
    /// Cooling-allowed transitions, each with multiplicity.
    adjacency: Vec<Vec<(u32, u32)>>,
    /// Unrestricted flips.
    flips: Vec<Vec<u32>>,
}

/// Enumerates every tiling, in lexicographic order of the partner classes.
pub fn enumerate(domain: &Arc<Domain>, cap: usize) -> Result<StateSpace, ExactError> {
    let region = domain.region();
    let mut raw: Vec<Vec<Dir>> = Vec::new();
    let mut over = false;
    for_each_matching(region, |p| {
        raw.push(p.to_vec());
        over = raw.len() > cap;
        !over
    });
    if over {
        return Err(ExactError::TooLarge(cap));
    }
    raw.sort_unstable_by_key(|p| key(p));
    let index: HashMap<Vec<u8>, u32> = raw
        .iter()
        .enumerate()
        .map(|(i, p)| (key(p), i as u32))
        .collect();
    let states: Vec<Tiling> = raw
        .into_par_iter()
        .map(|p| Tiling::from_partners(domain, p).expect("enumerated matching"))
        .collect();
    let (adjacency, flips): (Vec<_>, Vec<_>) = states
        .par_iter()
        .map(|t| {
            let mut allowed = Vec::new();
            let mut all = Vec::new();
            let mut work = t.clone();
            for s in t.flips() {
                let tok = work.apply_flip(&s).expect("listed site");
                let j = index[&key(work.partners())];
                work.undo(tok);
                all.push(j);
                if s.delta_e <= 0 {
                    allowed.push(j);
                }
            }
            allowed.sort_unstable();
            let mut adj: Vec<(u32, u32)> = Vec::new();
            for j in allowed {
                match adj.last_mut() {
                    Some((k, m)) if *k == j => *m += 1,
                    _ => adj.push((j, 1)),
                }
            }
            all.sort_unstable();
            (adj, all)
        })
        .unzip();
    let space = StateSpace {
        domain: domain.clone(),
        states,
        index,
        adjacency,
        flips,
    };
    if !space.is_connected() {
        return Err(ExactError::Disconnected);
    }
    Ok(space)
}

impl StateSpace {
    pub fn domain(&self) -> &Arc<Domain> {
        &self.domain
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn states(&self) -> &[Tiling] {
        &self.states
    }

    pub fn state(&self, i: usize) -> &Tiling {
        &self.states[i]
    }

    pub fn id_of(&self, t: &Tiling) -> Option<usize> {
        self.index.get(&key(t.partners())).map(|&i| i as usize)
    }

    pub fn allowed(&self, i: usize) -> &[(u32, u32)] {
        &self.adjacency[i]
    }

    pub fn flip_neighbors(&self, i: usize) -> &[u32] {
        &self.flips[i]
    }

    /// No cooling-allowed flip, or zero energy on the single-hexagon domain.
    pub fn is_absorbing(&self, i: usize) -> bool {
        self.adjacency[i].is_empty()
            || (self.domain.num_tiles() == 3 && self.states[i].energy() == 0)
    }

    fn is_connected(&self) -> bool {
        if self.states.is_empty() {
            return true;
        }
        let mut seen = vec![false; self.len()];
        seen[0] = true;
        let mut stack = vec![0usize];
        let mut count = 1;
        while let Some(i) = stack.pop() {
            for &j in &self.flips[i] {
                if !seen[j as usize] {
                    seen[j as usize] = true;
                    count += 1;
                    stack.push(j as usize);
                }
            }
        }
        count == self.len()
    }

    /// State of greatest volume, first in canonical order.
    pub fn max_volume_state(&self) -> usize {
        let mut best = 0;
        for i in 1..self.len() {
            if self.states[i].volume() > self.states[best].volume() {
                best = i;
            }
        }
        best
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExactTimes<S> {
    pub expected: Vec<S>,
    pub worst: S,
    pub worst_state: usize,
    pub average: S,
}

/// Strongly connected components of the transient part, sinks first.
fn components(space: &StateSpace, transient: &[bool]) -> Vec<Vec<usize>> {
    let n = space.len();
    let mut index = vec![usize::MAX; n];
    let mut low = vec![0usize; n];
    let mut on_stack = vec![false; n];
    let mut stack = Vec::new();
    let mut out = Vec::new();
    let mut counter = 0;
    for root in 0..n {
        if !transient[root] || index[root] != usize::MAX {
            continue;
        }
        let mut call: Vec<(usize, usize)> = vec![(root, 0)];
        index[root] = counter;
        low[root] = counter;
        counter += 1;
        stack.push(root);
        on_stack[root] = true;
        while let Some(&mut (v, ref mut k)) = call.last_mut() {
            let adj = space.allowed(v);
            if *k < adj.len() {
                let w = adj[*k].0 as usize;
                *k += 1;
                if !transient[w] {
                    continue;
                }
                if index[w] == usize::MAX {
                    index[w] = counter;
                    low[w] = counter;
                    counter += 1;
                    stack.push(w);
                    on_stack[w] = true;
                    call.push((w, 0));
                } else if on_stack[w] {
                    low[v] = low[v].min(index[w]);
                }
            } else {
                call.pop();
                if let Some(&(u, _)) = call.last() {
                    low[u] = low[u].min(low[v]);
                }
                if low[v] == index[v] {
                    let mut comp = Vec::new();
                    loop {
                        let w = stack.pop().unwrap();
                        on_stack[w] = false;
                        comp.push(w);
                        if w == v {
                            break;
                        }
                    }
                    comp.sort_unstable();
                    out.push(comp);
                }
            }
        }
    }
    out
}

/// Solves `A x = b` in place by Gaussian elimination with largest-modulus pivots.
fn solve_dense<S: Field>(mut a: Vec<Vec<S>>, mut b: Vec<S>) -> Option<Vec<S>> {
    let m = b.len();
    for col in 0..m {
        let mut piv = None;
        for r in col..m {
            if !a[r][col].is_zero() && piv.is_none_or(|p: usize| a[r][col].abs() > a[p][col].abs())
            {
                piv = Some(r);
            }
        }
        let p = piv?;
        a.swap(col, p);
        b.swap(col, p);
        for r in col + 1..m {
            if a[r][col].is_zero() {
                continue;
            }
            let f = a[r][col].clone() / a[col][col].clone();
            for c in col..m {
                let delta = f.clone() * a[col][c].clone();
                a[r][c] = a[r][c].clone() - delta;
            }
            let delta = f * b[col].clone();
            b[r] = b[r].clone() - delta;
        }
    }
    let mut x = vec![S::zero(); m];
    for r in (0..m).rev() {
        let mut acc = b[r].clone();
        for c in r + 1..m {
            acc = acc - a[r][c].clone() * x[c].clone();
        }
        x[r] = acc / a[r][r].clone();
    }
    Some(x)
}

/// Expected number of steps to absorption from every state.
pub fn exact_times<S: Field>(space: &StateSpace) -> Result<ExactTimes<S>, ExactError> {
    let n = space.len();
    let transient: Vec<bool> = (0..n).map(|i| !space.is_absorbing(i)).collect();
    // every transient state must reach absorption
    let mut reaches = vec![false; n];
    let mut rev: Vec<Vec<usize>> = vec![Vec::new(); n];
    for i in 0..n {
        if transient[i] {
            for &(j, _) in space.allowed(i) {
                rev[j as usize].push(i);
            }
        }
    }
    let mut queue: VecDeque<usize> = (0..n).filter(|&i| !transient[i]).collect();
    for &i in &queue {
        reaches[i] = true;
    }
    while let Some(j) = queue.pop_front() {
        for &i in &rev[j] {
            if !reaches[i] {
                reaches[i] = true;
                queue.push_back(i);
            }
        }
    }
    if let Some(i) = (0..n).find(|&i| !reaches[i]) {
        return Err(ExactError::NonAbsorbing(i));
    }
    let mut x: Vec<S> = vec![S::zero(); n];
    let mut pos = vec![usize::MAX; n];
    for comp in components(space, &transient) {
        for (k, &v) in comp.iter().enumerate() {
            pos[v] = k;
        }
        let m = comp.len();
        let mut a = vec![vec![S::zero(); m]; m];
        let mut b = vec![S::one(); m];
        for (k, &v) in comp.iter().enumerate() {
            let adj = space.allowed(v);
            let deg: u32 = adj.iter().map(|&(_, c)| c).sum();
            let deg = S::from_u32(deg).unwrap();
            a[k][k] = S::one();
            for &(w, c) in adj {
                let w = w as usize;
                let p = S::from_u32(c).unwrap() / deg.clone();
                if transient[w] && pos[w] != usize::MAX && comp.get(pos[w]) == Some(&w) {
                    a[k][pos[w]] = a[k][pos[w]].clone() - p;
                } else {
                    // already solved: a later component or an absorbing state
                    b[k] = b[k].clone() + p * x[w].clone();
                }
            }
        }
        let sol = solve_dense(a, b).ok_or(ExactError::NonAbsorbing(comp[0]))?;
        for (k, &v) in comp.iter().enumerate() {
            x[v] = sol[k].clone();
        }
        for &v in &comp {
            pos[v] = usize::MAX;
        }
    }
    let mut worst_state = 0;
    for i in 1..n {
        if x[i] > x[worst_state] {
            worst_state = i;
        }
    }
    let total = x.iter().fold(S::zero(), |acc, v| acc + v.clone());
    let average = total / S::from_usize(n.max(1)).unwrap();
    Ok(ExactTimes {
        worst: x[worst_state].clone(),
        worst_state,
        average,
        expected: x,
    })
}

/// Shortest unrestricted-flip path from `start` to a state satisfying `target`.
pub fn bfs_flip_distance(
    space: &StateSpace,
    start: usize,
    target: impl Fn(&Tiling) -> bool,
) -> Result<u32, ExactError> {
    let mut dist = vec![u32::MAX; space.len()];
    dist[start] = 0;
    let mut queue = VecDeque::from([start]);
    while let Some(i) = queue.pop_front() {
        if target(space.state(i)) {
            return Ok(dist[i]);
        }
        for &j in space.flip_neighbors(i) {
            if dist[j as usize] == u32::MAX {
                dist[j as usize] = dist[i] + 1;
                queue.push_back(j as usize);
            }
        }
    }
    Err(ExactError::Unreachable)
}

/// Brute-force hull: the least triconvex state above `t` in the modulus order
/// relative to `t`'s ground.
pub fn triconvex_oracle(t: &Tiling, space: &StateSpace) -> Result<Tiling, ExactError> {
    let g = t.ground();
    let above: Vec<&Tiling> = space
        .states()
        .iter()
        .filter(|s| is_triconvex_from(s, g).is_triconvex && leq_modulus(t, s, g).unwrap_or(false))
        .collect();
    if above.is_empty() {
        return Err(ExactError::NoneAbove);
    }
    above
        .iter()
        .find(|m| above.iter().all(|s| leq_modulus(m, s, g).unwrap_or(false)))
        .map(|m| (*m).clone())
        .ok_or(ExactError::MinimumNotUnique)
}

#[cfg(test)]
mod tests {
    use num_rational::BigRational;
    use num_traits::{ToPrimitive, Zero};

    use super::*;
    use crate::domain::{make_hexagon_domain, make_rhombus_domain};
    use crate::tiling::{extremal_tiling, Extreme};

    fn space(d: Domain) -> StateSpace {
        enumerate(&Arc::new(d), DEFAULT_CAP).unwrap()
    }

    #[test]
    fn small_counts() {
        assert_eq!(space(make_hexagon_domain(1)).len(), 2);
        assert_eq!(space(make_rhombus_domain(2)).len(), 20);
        assert_eq!(space(make_hexagon_domain(2)).len(), 250);
    }

    #[test]
    fn cap_is_enforced() {
        let d = Arc::new(make_rhombus_domain(3));
        assert_eq!(enumerate(&d, 100).unwrap_err(), ExactError::TooLarge(100));
        assert_eq!(
            count_matchings(d.region(), 100),
            Err(ExactError::TooLarge(100))
        );
        assert_eq!(count_matchings(d.region(), 2000), Ok(1320));
    }

    #[test]
    fn states_are_canonically_ordered() {
        let s = space(make_rhombus_domain(2));
        for w in s.states().windows(2) {
            assert!(key(w[0].partners()) < key(w[1].partners()));
        }
        for (i, t) in s.states().iter().enumerate() {
            assert_eq!(s.id_of(t), Some(i));
        }
    }

    #[test]
    fn absorbing_states_are_error_free() {
        for d in [make_hexagon_domain(2), make_rhombus_domain(2)] {
            let s = space(d);
            for i in 0..s.len() {
                assert_eq!(s.is_absorbing(i), s.state(i).energy() == 0);
            }
        }
    }

    #[test]
    fn rational_and_float_solves_agree() {
        let s = space(make_rhombus_domain(2));
        let q: ExactTimes<BigRational> = exact_times(&s).unwrap();
        let f: ExactTimes<f64> = exact_times(&s).unwrap();
        for (a, b) in q.expected.iter().zip(&f.expected) {
            assert!((a.to_f64().unwrap() - b).abs() < 1e-9 * b.max(1.0));
        }
        for i in 0..s.len() {
            if s.is_absorbing(i) {
                assert!(q.expected[i].is_zero());
            } else {
                assert!(q.expected[i] >= BigRational::from_integer(s.state(i).volume().into()));
            }
        }
    }

    #[test]
    fn single_hexagon_times_are_zero() {
        let s = space(make_hexagon_domain(1));
        let q: ExactTimes<BigRational> = exact_times(&s).unwrap();
        assert!(q.worst.is_zero());
    }

    #[test]
    fn hand_solved_chain() {
        // two-state cycle with an exit: x0 = 1 + x1/2, x1 = 1 + x0
        let a: Vec<Vec<f64>> = vec![vec![1.0, -0.5], vec![-1.0, 1.0]];
        let x = solve_dense(a, vec![1.0, 1.0]).unwrap();
        assert!((x[0] - 3.0).abs() < 1e-12 && (x[1] - 4.0).abs() < 1e-12);
        let singular: Vec<Vec<f64>> = vec![vec![1.0, -1.0], vec![-1.0, 1.0]];
        assert!(solve_dense(singular, vec![1.0, 1.0]).is_none());
    }

    #[test]
    fn bfs_distance_from_the_top() {
        let d = Arc::new(make_hexagon_domain(2));
        let s = enumerate(&d, DEFAULT_CAP).unwrap();
        let top = s.id_of(&extremal_tiling(&d, Extreme::Max)).unwrap();
        assert_eq!(bfs_flip_distance(&s, top, |t| t.energy() == 0), Ok(3));
        let flat = s.id_of(&Tiling::reference(&d)).unwrap();
        assert_eq!(bfs_flip_distance(&s, flat, |t| t.energy() == 0), Ok(0));
        assert_eq!(
            bfs_flip_distance(&s, flat, |t| t.energy() > 1000),
            Err(ExactError::Unreachable)
        );
    }

    #[test]
    fn parallel_visit_sees_every_state() {
        let d = Arc::new(make_rhombus_domain(3));
        let n = std::sync::atomic::AtomicUsize::new(0);
        par_for_each_tiling(&d, |_| {
            n.fetch_add(1, std::sync::atomic::Ordering::Relaxed);
        });
        assert_eq!(n.into_inner(), 1320);
    }
}
