//! Triconvexity, the triconvex hull and the potentials `φ = 4V + E` and `φ̄`.
//!
//! Relative heights `r` are measured from the tiling's ground. A tiling is
//! triconvex when `|r|` has no interior dip along any next-nearest-neighbor
//! line: for `x < z < y` on a line, `|r(z)| ≥ min(|r(x)|, |r(y)|)`.
//!
//! The hull alternates two monotone closures until neither moves: the
//! quasi-concave envelope of `|r|` on every line, and the least valid height
//! function dominating the current one (edge constraints
//! `−2 ≤ h(x + d) − h(x) ≤ 1`). For single-sign states both constraint sets are
//! closed under pointwise meet, so the fixpoint is the least triconvex majorant.

use log::warn;
use thiserror::Error;

use crate::domain::Domain;
use crate::lattice::{Vertex, SPOKES};
use crate::scalar::Field;
use crate::tiling::{Ground, PotentialValue, Tiling};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum HullError {
    #[error("hull iteration failed: {0}")]
    HullNotFound(String),
    #[error("no cooling-allowed flip")]
    Frozen,
    #[error("boundary is not a closed unit-edge cycle")]
    NotClosed,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub struct Witness {
    pub family: usize,
    pub line: usize,
    pub x: Vertex,
    pub z: Vertex,
    pub y: Vertex,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub struct TriconvexityReport {
    pub is_triconvex: bool,
    pub witness: Option<Witness>,
}

/// Sign pattern of relative heights.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum SignClass {
    Flat,
    Positive,
    Negative,
    Mixed,
}

pub fn sign_class(r: &[i32]) -> SignClass {
    let pos = r.iter().any(|&x| x > 0);
    let neg = r.iter().any(|&x| x < 0);
    match (pos, neg) {
        (false, false) => SignClass::Flat,
        (true, false) => SignClass::Positive,
        (false, true) => SignClass::Negative,
        (true, true) => SignClass::Mixed,
    }
}

pub fn is_triconvex(t: &Tiling) -> TriconvexityReport {
    is_triconvex_from(t, t.ground())
}

pub fn is_triconvex_from(t: &Tiling, g: Ground) -> TriconvexityReport {
    let r = t.relative_heights(g);
    let domain = t.domain();
    let verts = domain.region().vertices();
    for family in 0..3 {
        for (li, line) in domain.line_indices(family).iter().enumerate() {
            if let Some((x, z, y)) = first_dip(line, &r) {
                return TriconvexityReport {
                    is_triconvex: false,
                    witness: Some(Witness {
                        family,
                        line: li,
                        x: verts[line[x] as usize],
                        z: verts[line[z] as usize],
                        y: verts[line[y] as usize],
                    }),
                };
            }
        }
    }
    TriconvexityReport {
        is_triconvex: true,
        witness: None,
    }
}

/// Positions `(x, z, y)` of the first dip of `|r|` along a line.
fn first_dip(line: &[u32], r: &[i32]) -> Option<(usize, usize, usize)> {
    let m: Vec<i32> = line.iter().map(|&v| r[v as usize].abs()).collect();
    let mut suffix = vec![(i32::MIN, 0); m.len() + 1];
    for i in (0..m.len()).rev() {
        suffix[i] = if m[i] > suffix[i + 1].0 {
            (m[i], i)
        } else {
            suffix[i + 1]
        };
    }
    let mut best = (i32::MIN, 0);
    for z in 0..m.len() {
        if z > 0 && best.0.min(suffix[z + 1].0) > m[z] {
            return Some((best.1, z, suffix[z + 1].1));
        }
        if m[z] > best.0 {
            best = (m[z], z);
        }
    }
    None
}

/// Raises `|r|` to its quasi-concave envelope on every line; `sign` selects the
/// side worked on. Returns whether anything moved.
fn envelope(domain: &Domain, h: &mut [i32], flat: &[i32], sign: i32) -> bool {
    let mut moved = false;
    for family in 0..3 {
        for line in domain.line_indices(family) {
            let m: Vec<i32> = line
                .iter()
                .map(|&v| (sign * (h[v as usize] - flat[v as usize])).max(0))
                .collect();
            let mut suffix = vec![0; m.len() + 1];
            for i in (0..m.len()).rev() {
                suffix[i] = suffix[i + 1].max(m[i]);
            }
            let mut prefix = 0;
            for (i, &v) in line.iter().enumerate() {
                prefix = prefix.max(m[i]);
                let target = prefix.min(suffix[i]);
                let r = h[v as usize] - flat[v as usize];
                if target > m[i] && sign * r >= 0 {
                    h[v as usize] = flat[v as usize] + sign * target;
                    moved = true;
                }
            }
        }
    }
    moved
}

/// Least valid heights above `h` (`sign = 1`) or greatest below (`sign = −1`).
fn closure(domain: &Domain, h: &mut [i32], sign: i32) -> Result<bool, HullError> {
    let region = domain.region();
    let mut moved = false;
    let mut stack: Vec<usize> = (0..h.len()).collect();
    let mut queued = vec![true; h.len()];
    while let Some(v) = stack.pop() {
        queued[v] = false;
        for (j, &w) in region.spokes[v].iter().enumerate() {
            if w == crate::domain::NONE {
                continue;
            }
            let w = w as usize;
            // along spoke j the height may rise by at most 1 and fall by at most 2
            // in the positive direction of its class
            let positive = crate::lattice::SPOKE_POSITIVE[j];
            let (max_rise, max_fall) = if positive { (1, 2) } else { (2, 1) };
            let bound = if sign > 0 {
                h[v] - max_fall
            } else {
                h[v] + max_rise
            };
            let violated = if sign > 0 { h[w] < bound } else { h[w] > bound };
            if violated {
                if !region.interior[w] {
                    return Err(HullError::HullNotFound(format!(
                        "boundary vertex {} would have to move",
                        region.vertices()[w]
                    )));
                }
                h[w] = bound;
                moved = true;
                if !queued[w] {
                    queued[w] = true;
                    stack.push(w);
                }
            }
        }
    }
    Ok(moved)
}

/// Smallest triconvex tiling above `t` in the modulus order.
pub fn triconvex_hull(t: &Tiling) -> Result<Tiling, HullError> {
    triconvex_hull_from(t, t.ground())
}

/// Hull relative to a fixed ground.
pub fn triconvex_hull_from(t: &Tiling, g: Ground) -> Result<Tiling, HullError> {
    let domain = t.domain();
    let flat = domain.flat_heights(g.index());
    let class = sign_class(&t.relative_heights(g));
    let mut h = t.heights().to_vec();
    let signs: &[i32] = match class {
        SignClass::Flat => return Ok(t.clone()),
        SignClass::Positive => &[1],
        SignClass::Negative => &[-1],
        SignClass::Mixed => {
            warn!("hull of a mixed-sign tiling is best-effort");
            &[1, -1]
        }
    };
    let cap = 4 * domain.num_vertices() + 16;
    for _ in 0..cap {
        let mut moved = false;
        for &s in signs {
            moved |= envelope(domain, &mut h, flat, s);
            moved |= closure(domain, &mut h, s)?;
        }
        if !moved {
            let out = Tiling::from_heights(domain, h)
                .map_err(|e| HullError::HullNotFound(e.to_string()))?;
            if !is_triconvex_from(&out, g).is_triconvex {
                return Err(HullError::HullNotFound("fixpoint is not triconvex".into()));
            }
            return Ok(out);
        }
    }
    Err(HullError::HullNotFound(
        "no fixpoint within the iteration cap".into(),
    ))
}

pub fn phi(t: &Tiling) -> PotentialValue {
    t.phi()
}

pub fn phi_bar(t: &Tiling) -> Result<PotentialValue, HullError> {
    Ok(triconvex_hull(t)?.phi())
}

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum Functional {
    Phi,
    PhiBar,
}

/// Sum of the functional's change over all cooling-allowed flips, and their count.
pub fn delta_sum(t: &Tiling, functional: Functional) -> Result<(i64, usize), HullError> {
    let base = match functional {
        Functional::Phi => t.phi().phi,
        Functional::PhiBar => phi_bar(t)?.phi,
    };
    let mut work = t.clone();
    let mut sum = 0i64;
    let mut count = 0usize;
    for s in t.flips().into_iter().filter(|s| s.delta_e <= 0) {
        let tok = work.apply_flip(&s).expect("listed site is live");
        let after = match functional {
            Functional::Phi => work.phi().phi,
            Functional::PhiBar => phi_bar(&work)?.phi,
        };
        work.undo(tok);
        sum += after - base;
        count += 1;
    }
    Ok((sum, count))
}

/// Mean change of the functional over the cooling-allowed flips.
pub fn expected_delta<S: Field>(t: &Tiling, functional: Functional) -> Result<S, HullError> {
    let (sum, count) = delta_sum(t, functional)?;
    if count == 0 {
        return Err(HullError::Frozen);
    }
    Ok(S::from_i64(sum).unwrap() / S::from_usize(count).unwrap())
}

/// Salient and reflex corner counts along a closed unit-edge cycle, in units of
/// 60° turns; either orientation is accepted.
pub fn boundary_angles(cycle: &[Vertex]) -> Result<(u32, u32), HullError> {
    let n = cycle.len();
    if n < 3 {
        return Err(HullError::NotClosed);
    }
    let dir = |p: Vertex, q: Vertex| SPOKES.iter().position(|&s| s == (q.a - p.a, q.b - p.b));
    let mut dirs = Vec::with_capacity(n);
    for i in 0..n {
        dirs.push(dir(cycle[i], cycle[(i + 1) % n]).ok_or(HullError::NotClosed)?);
    }
    let (mut left, mut right) = (0u32, 0u32);
    for i in 0..n {
        match (dirs[(i + 1) % n] + 6 - dirs[i]) % 6 {
            1 => left += 1,
            2 => left += 2,
            4 => right += 2,
            5 => right += 1,
            3 => return Err(HullError::NotClosed),
            _ => {}
        }
    }
    if left >= right {
        Ok((left, right))
    } else {
        Ok((right, left))
    }
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use num_rational::BigRational;

    use super::*;
    use crate::domain::{hex_center, make_hexagon_domain};
    use crate::tiling::{extremal_tiling, Extreme};

    fn raise(t: &mut Tiling, cells: &[(i32, i32)]) {
        for &(i, j) in cells {
            let v = t.domain().region().vertex_index(&hex_center(i, j)).unwrap();
            t.flip_index(v).unwrap();
        }
    }

    #[test]
    fn flat_and_unit_island_are_triconvex() {
        let d = Arc::new(make_hexagon_domain(4));
        let mut t = Tiling::reference(&d);
        assert!(is_triconvex(&t).is_triconvex);
        raise(&mut t, &[(0, 0)]);
        assert!(is_triconvex(&t).is_triconvex);
        assert_eq!(triconvex_hull(&t).unwrap(), t);
        let p = phi(&t);
        assert_eq!((p.v, p.e, p.phi), (1, 6, 10));
    }

    #[test]
    fn notched_island_has_a_witness_on_the_notch() {
        let d = Arc::new(make_hexagon_domain(5));
        let mut t = Tiling::reference(&d);
        // a straight stick of three hexagons with its middle left down
        raise(&mut t, &[(-1, 0), (1, 0)]);
        let rep = is_triconvex(&t);
        assert!(!rep.is_triconvex);
        let w = rep.witness.unwrap();
        let r = t.relative_heights(t.ground());
        let at = |v: Vertex| r[d.region().vertex_index(&v).unwrap()].abs();
        assert!(at(w.z) < at(w.x).min(at(w.y)));
        let h = triconvex_hull(&t).unwrap();
        let mut filled = t.clone();
        raise(&mut filled, &[(0, 0)]);
        assert_eq!(h, filled);
    }

    #[test]
    fn hull_is_idempotent_on_extremes() {
        let d = Arc::new(make_hexagon_domain(4));
        for e in [Extreme::Max, Extreme::Min] {
            let t = extremal_tiling(&d, e);
            assert!(is_triconvex(&t).is_triconvex);
            assert_eq!(triconvex_hull(&t).unwrap(), t);
        }
    }

    #[test]
    fn unit_island_drift() {
        let d = Arc::new(make_hexagon_domain(4));
        let mut t = Tiling::reference(&d);
        raise(&mut t, &[(0, 0)]);
        let (sum, count) = delta_sum(&t, Functional::Phi).unwrap();
        assert_eq!((sum, count), (-10, 1));
        let e: BigRational = expected_delta(&t, Functional::Phi).unwrap();
        assert_eq!(e, BigRational::from_integer((-10).into()));
        let f: f64 = expected_delta(&t, Functional::PhiBar).unwrap();
        assert_eq!(f, -10.0);
    }

    #[test]
    fn frozen_state_has_no_expectation() {
        let d = Arc::new(make_hexagon_domain(3));
        let t = Tiling::reference(&d);
        assert_eq!(
            expected_delta::<f64>(&t, Functional::Phi),
            Err(HullError::Frozen)
        );
    }

    #[test]
    fn hexagon_boundary_angles() {
        let c = Vertex::new(0, 0);
        let cycle: Vec<Vertex> = (0..6).map(|j| c.spoke(j)).collect();
        assert_eq!(boundary_angles(&cycle), Ok((6, 0)));
        let rev: Vec<Vertex> = cycle.iter().rev().copied().collect();
        assert_eq!(boundary_angles(&rev), Ok((6, 0)));
        assert_eq!(boundary_angles(&cycle[..2]), Err(HullError::NotClosed));
        let broken = vec![Vertex::new(0, 0), Vertex::new(2, 0), Vertex::new(0, 2)];
        assert_eq!(boundary_angles(&broken), Err(HullError::NotClosed));
    }
}
