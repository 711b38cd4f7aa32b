use std::sync::Arc;

use super::{Ground, Tiling, TilingError};
use crate::domain::{spoke_neighbors, Domain};

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum Extreme {
    Min,
    Max,
}

fn check(t1: &Tiling, t2: &Tiling) -> Result<(), TilingError> {
    if t1.same_domain(t2) {
        Ok(())
    } else {
        Err(TilingError::DomainMismatch)
    }
}

/// Pointwise comparison of heights.
pub fn leq(t1: &Tiling, t2: &Tiling) -> Result<bool, TilingError> {
    check(t1, t2)?;
    Ok(t1.heights().iter().zip(t2.heights()).all(|(a, b)| a <= b))
}

pub fn join(t1: &Tiling, t2: &Tiling) -> Result<Tiling, TilingError> {
    check(t1, t2)?;
    let h = t1
        .heights()
        .iter()
        .zip(t2.heights())
        .map(|(a, b)| *a.max(b))
        .collect();
    Tiling::from_heights(t1.domain(), h)
}

pub fn meet(t1: &Tiling, t2: &Tiling) -> Result<Tiling, TilingError> {
    check(t1, t2)?;
    let h = t1
        .heights()
        .iter()
        .zip(t2.heights())
        .map(|(a, b)| *a.min(b))
        .collect();
    Tiling::from_heights(t1.domain(), h)
}

/// Comparison in modulus: relative to `g`, every |height| grows and no sign flips.
pub fn leq_modulus(t1: &Tiling, t2: &Tiling, g: Ground) -> Result<bool, TilingError> {
    check(t1, t2)?;
    let r1 = t1.relative_heights(g);
    let r2 = t2.relative_heights(g);
    Ok(r1
        .iter()
        .zip(&r2)
        .all(|(&a, &b)| a.abs() <= b.abs() && (a == 0 || a.signum() == b.signum())))
}

/// Top or bottom of the lattice, by greedy flips from the reference.
pub fn extremal_tiling(domain: &Arc<Domain>, which: Extreme) -> Tiling {
    let mut t = Tiling::reference(domain);
    let want_up = which == Extreme::Max;
    let mut stack: Vec<usize> = (0..domain.num_vertices()).rev().collect();
    while let Some(v) = stack.pop() {
        match t.local_site(v) {
            Some(s) if s.upward == want_up => {
                t.flip_index(v).expect("site is live");
                stack.extend(spoke_neighbors(domain.region(), v));
                stack.push(v);
            }
            _ => {}
        }
    }
    t
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{make_hexagon_domain, make_rhombus_domain};

    #[test]
    fn extremes_admit_no_further_flips() {
        for d in [make_hexagon_domain(3), make_rhombus_domain(3)] {
            let d = Arc::new(d);
            let top = extremal_tiling(&d, Extreme::Max);
            let bot = extremal_tiling(&d, Extreme::Min);
            assert!(top.flips().iter().all(|s| !s.upward));
            assert!(bot.flips().iter().all(|s| s.upward));
            assert!(leq(&bot, &top).unwrap());
        }
    }

    #[test]
    fn hexagon_extremes_mirror_each_other() {
        let expected = [0, 3, 19, 58, 131, 248];
        for k in 1..=6u32 {
            let d = Arc::new(make_hexagon_domain(k));
            let hexes = d.hex_centers().len() as u32;
            let top = extremal_tiling(&d, Extreme::Max);
            let bot = extremal_tiling(&d, Extreme::Min);
            assert_eq!(
                top.cube_distance(Ground::Reference),
                top.cube_distance(Ground::Flipped) + hexes
            );
            assert_eq!(
                bot.cube_distance(Ground::Flipped),
                bot.cube_distance(Ground::Reference) + hexes
            );
            assert_eq!(top.volume(), bot.volume());
            assert_eq!(top.volume(), expected[k as usize - 1]);
        }
    }

    #[test]
    fn lattice_ops_are_idempotent() {
        let d = Arc::new(make_hexagon_domain(3));
        let t = extremal_tiling(&d, Extreme::Max);
        assert_eq!(join(&t, &t).unwrap(), t);
        assert_eq!(meet(&t, &t).unwrap(), t);
    }

    #[test]
    fn mismatched_domains_are_rejected() {
        let a = Tiling::reference(&Arc::new(make_hexagon_domain(2)));
        let b = Tiling::reference(&Arc::new(make_rhombus_domain(2)));
        assert_eq!(leq(&a, &b), Err(TilingError::DomainMismatch));
        assert!(join(&a, &b).is_err());
    }

    #[test]
    fn modulus_order_respects_sign() {
        let d = Arc::new(make_hexagon_domain(2));
        let r = Tiling::reference(&d);
        let top = extremal_tiling(&d, Extreme::Max);
        let bot = extremal_tiling(&d, Extreme::Min);
        assert!(leq_modulus(&r, &top, Ground::Reference).unwrap());
        assert!(leq_modulus(&r, &bot, Ground::Reference).unwrap());
        assert!(!leq_modulus(&top, &bot, Ground::Reference).unwrap());
    }
}
