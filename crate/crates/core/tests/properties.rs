use std::sync::Arc;

use proptest::prelude::*;

use lozenge_cooling::cooling::{run, AllowedSet, CoolingState, RunOptions, StopReason};
use lozenge_cooling::domain::{make_hexagon_domain, make_rhombus_domain, Domain};
use lozenge_cooling::hull::{is_triconvex_from, sign_class, triconvex_hull, SignClass};
use lozenge_cooling::sampling::heat_bath;
use lozenge_cooling::tiling::{join, leq, leq_modulus, meet, Ground, Tiling};

fn domains() -> Vec<Arc<Domain>> {
    vec![
        Arc::new(make_hexagon_domain(3)),
        Arc::new(make_hexagon_domain(5)),
        Arc::new(make_rhombus_domain(4)),
    ]
}

/// Tiling reached from the reference by heat-bath moves.
fn walk(d: &Arc<Domain>, moves: &[(usize, bool)]) -> Tiling {
    let mut h = Tiling::reference(d).heights().to_vec();
    let n = d.num_vertices();
    for &(v, up) in moves {
        let v = v % n;
        if d.region().is_interior(v) {
            heat_bath(d, &mut h, v, up);
        }
    }
    Tiling::from_heights(d, h).unwrap()
}

fn moves() -> impl Strategy<Value = Vec<(usize, bool)>> {
    prop::collection::vec((0usize..10_000, any::<bool>()), 0..600)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn flips_keep_caches_exact(di in 0usize..3, m in moves(), picks in prop::collection::vec(0usize..1000, 1..80)) {
        let d = &domains()[di];
        let mut t = walk(d, &m);
        for p in picks {
            let sites = t.flips();
            let s = sites[p % sites.len()];
            let before = t.clone();
            let dv = t.delta_volume(&s);
            let tok = t.apply_flip(&s).unwrap();
            prop_assert_eq!(t.energy() as i64 - before.energy() as i64, s.delta_e as i64);
            prop_assert_eq!(t.volume() as i64 - before.volume() as i64, dv as i64);
            prop_assert!(t.check_caches().is_ok());
            let mut back = t.clone();
            back.undo(tok);
            prop_assert_eq!(&back, &before);
        }
        let fresh = Tiling::from_heights(d, t.heights().to_vec()).unwrap();
        prop_assert_eq!(fresh.energy(), t.energy());
        prop_assert_eq!(fresh.volume(), t.volume());
    }

    #[test]
    fn text_round_trip(di in 0usize..3, m in moves()) {
        let d = &domains()[di];
        let t = walk(d, &m);
        let back = Tiling::parse(&t.to_text(), Some(d)).unwrap();
        prop_assert_eq!(back, t);
    }

    #[test]
    fn join_and_meet_bound_their_arguments(di in 0usize..3, a in moves(), b in moves()) {
        let d = &domains()[di];
        let (x, y) = (walk(d, &a), walk(d, &b));
        let j = join(&x, &y).unwrap();
        let m = meet(&x, &y).unwrap();
        prop_assert!(leq(&x, &j).unwrap() && leq(&y, &j).unwrap());
        prop_assert!(leq(&m, &x).unwrap() && leq(&m, &y).unwrap());
        prop_assert!(j.check_caches().is_ok() && m.check_caches().is_ok());
    }

    #[test]
    fn hull_is_a_triconvex_majorant(di in 0usize..3, m in moves()) {
        let d = &domains()[di];
        let t = walk(d, &m);
        let g = t.ground();
        let class = sign_class(&t.relative_heights(g));
        prop_assume!(class != SignClass::Mixed);
        let h = triconvex_hull(&t).unwrap();
        prop_assert!(is_triconvex_from(&h, g).is_triconvex);
        prop_assert!(leq_modulus(&t, &h, g).unwrap());
    }

    #[test]
    fn cooling_freezes_at_zero_energy(di in 0usize..3, m in moves(), seed in any::<u64>()) {
        let d = &domains()[di];
        let t = walk(d, &m);
        let v0 = t.volume() as u64;
        let tr = run(t, seed, &RunOptions { verify: true, ..RunOptions::for_tiles(d.num_tiles()) }, |_, _| {}).unwrap();
        prop_assert_eq!(tr.stop, StopReason::Frozen);
        prop_assert!(tr.final_error_free);
        prop_assert!(tr.t >= v0 || tr.final_energy == 0);
        prop_assert!(tr.records.windows(2).all(|w| w[1].energy <= w[0].energy));
    }

    #[test]
    fn cooling_state_tracks_allowed_flips(di in 0usize..3, m in moves(), seed in any::<u64>(), steps in 0u64..200) {
        let d = &domains()[di];
        let mut s = CoolingState::new(walk(d, &m), seed);
        for _ in 0..steps {
            s.step();
        }
        prop_assert!(s.verify_allowed_set());
        prop_assert!(s.check_descent());
    }

    #[test]
    fn allowed_set_matches_a_model(ops in prop::collection::vec((any::<bool>(), 0usize..50), 0..300)) {
        let mut set = AllowedSet::new(50);
        let mut model = std::collections::BTreeSet::new();
        for (insert, v) in ops {
            if insert {
                set.insert(v);
                model.insert(v);
            } else {
                set.remove(v);
                model.remove(&v);
            }
            prop_assert_eq!(set.len(), model.len());
        }
        prop_assert_eq!(set.sorted(), model.iter().copied().collect::<Vec<_>>());
        for i in 0..set.len() {
            prop_assert!(set.contains(set.get(i)));
        }
    }

    #[test]
    fn heat_bath_is_monotone(di in 0usize..3, a in moves(), b in moves(), v in 0usize..10_000, up in any::<bool>()) {
        let d = &domains()[di];
        let (x, y) = (walk(d, &a), walk(d, &b));
        let lo = meet(&x, &y).unwrap();
        let hi = join(&x, &y).unwrap();
        let v = v % d.num_vertices();
        prop_assume!(d.region().is_interior(v));
        let (mut hl, mut hh) = (lo.heights().to_vec(), hi.heights().to_vec());
        heat_bath(d, &mut hl, v, up);
        heat_bath(d, &mut hh, v, up);
        prop_assert!(hl.iter().zip(&hh).all(|(p, q)| p <= q));
    }

    #[test]
    fn volume_is_the_nearer_cube_count(di in 0usize..3, m in moves()) {
        let d = &domains()[di];
        let t = walk(d, &m);
        let dist = |g: Ground| -> u32 {
            t.relative_heights(g).iter().map(|r| r.unsigned_abs()).sum::<u32>() / 3
        };
        prop_assert_eq!(t.cube_distance(Ground::Reference), dist(Ground::Reference));
        prop_assert_eq!(t.cube_distance(Ground::Flipped), dist(Ground::Flipped));
        prop_assert_eq!(t.volume(), dist(Ground::Reference).min(dist(Ground::Flipped)));
    }
}
