//! Independent oracles for enumeration counts and lattice extremes.
#![allow(clippy::needless_range_loop)]

use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap};
use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use lozenge_cooling::domain::{make_hexagon_domain, make_rhombus_domain, Domain, Region};
use lozenge_cooling::exact::{count_matchings, enumerate, exact_times};
use lozenge_cooling::lattice::{TriKind, Vertex, SPOKES};
use lozenge_cooling::tiling::{extremal_tiling, Extreme, Tiling};

/// Perfect matchings of the triangle adjacency graph as |det| of the 0/1
/// biadjacency matrix. Every face of the honeycomb graph is a hexagon, so all
/// signs can be +1.
fn kasteleyn_count(region: &Region) -> BigInt {
    let tris = region.triangles();
    let ups: Vec<usize> = (0..tris.len())
        .filter(|&i| tris[i].kind == TriKind::Up)
        .collect();
    let downs: HashMap<(i32, i32), usize> = tris
        .iter()
        .filter(|t| t.kind == TriKind::Down)
        .enumerate()
        .map(|(j, t)| ((t.a, t.b), j))
        .collect();
    assert_eq!(ups.len(), downs.len());
    let n = ups.len();
    let mut m = vec![vec![BigInt::zero(); n]; n];
    for (i, &u) in ups.iter().enumerate() {
        let t = tris[u];
        // down triangles sharing an edge with the up triangle at (a, b)
        for (a, b) in [(t.a, t.b), (t.a, t.b - 1), (t.a - 1, t.b)] {
            if let Some(&j) = downs.get(&(a, b)) {
                m[i][j] = BigInt::one();
            }
        }
    }
    bareiss_det(m).abs()
}

fn bareiss_det(mut m: Vec<Vec<BigInt>>) -> BigInt {
    let n = m.len();
    let mut sign = BigInt::one();
    let mut prev = BigInt::one();
    for k in 0..n {
        if m[k][k].is_zero() {
            match (k + 1..n).find(|&r| !m[r][k].is_zero()) {
                Some(r) => {
                    m.swap(k, r);
                    sign = -sign;
                }
                None => return BigInt::zero(),
            }
        }
        for i in k + 1..n {
            for j in k + 1..n {
                m[i][j] = (&m[i][j] * &m[k][k] - &m[i][k] * &m[k][j]) / &prev;
            }
        }
        prev = m[k][k].clone();
    }
    sign * &m[n - 1][n - 1]
}

/// Boxed plane partitions: ∏ (i + j + k − 1) / (i + j + k − 2).
fn macmahon(a: i64, b: i64, c: i64) -> BigInt {
    let mut p = BigRational::one();
    for i in 1..=a {
        for j in 1..=b {
            for k in 1..=c {
                p *= BigRational::new((i + j + k - 1).into(), (i + j + k - 2).into());
            }
        }
    }
    assert!(p.is_integer());
    p.to_integer()
}

#[test]
fn downward_neighbours_match_the_region() {
    // the three adjacency offsets used above, checked against the region's own
    for d in [make_hexagon_domain(2), make_rhombus_domain(2)] {
        let r = d.region();
        let tris = r.triangles();
        let mut edges = 0;
        for (i, t) in tris.iter().enumerate() {
            if t.kind == TriKind::Up {
                edges += lozenge_cooling::lattice::Dir::ALL
                    .iter()
                    .filter(|&&dir| r.neighbor(i, dir).is_some())
                    .count();
            }
        }
        let m = kasteleyn_edges(r);
        assert_eq!(edges, m);
    }
}

fn kasteleyn_edges(region: &Region) -> usize {
    let tris = region.triangles();
    let downs: std::collections::HashSet<(i32, i32)> = tris
        .iter()
        .filter(|t| t.kind == TriKind::Down)
        .map(|t| (t.a, t.b))
        .collect();
    tris.iter()
        .filter(|t| t.kind == TriKind::Up)
        .map(|t| {
            [(t.a, t.b), (t.a, t.b - 1), (t.a - 1, t.b)]
                .iter()
                .filter(|p| downs.contains(p))
                .count()
        })
        .sum()
}

#[test]
fn enumeration_matches_the_determinant() {
    let cases: Vec<(Domain, usize)> = vec![
        (make_hexagon_domain(1), 2),
        (make_hexagon_domain(2), 250),
        (make_rhombus_domain(2), 20),
        (make_rhombus_domain(3), 1320),
        (make_rhombus_domain(4), 592_116),
    ];
    for (d, want) in cases {
        let det = kasteleyn_count(d.region());
        assert_eq!(det, BigInt::from(want));
        assert_eq!(count_matchings(d.region(), 10_000_000).unwrap(), want);
    }
}

#[test]
fn honeycomb_three_count() {
    let d = make_hexagon_domain(3);
    assert_eq!(kasteleyn_count(d.region()), BigInt::from(9_637_056u64));
    assert_eq!(count_matchings(d.region(), 10_000_000).unwrap(), 9_637_056);
}

#[test]
fn straight_hexagons_match_the_product_formula() {
    for s in 1..=4 {
        let r = Region::straight_hexagon(s, s, s).unwrap();
        let want = macmahon(s as i64, s as i64, s as i64);
        assert_eq!(kasteleyn_count(&r), want);
        assert_eq!(BigInt::from(count_matchings(&r, 1_000_000).unwrap()), want);
    }
    assert_eq!(macmahon(2, 2, 2), BigInt::from(20));
    assert_eq!(macmahon(4, 4, 4), BigInt::from(232_848));
    let r = Region::straight_hexagon(1, 2, 3).unwrap();
    assert_eq!(kasteleyn_count(&r), macmahon(1, 2, 3));
}

/// Pointwise extreme height functions as shortest paths from the boundary.
/// Along a positive spoke the height changes by +1 or −2, along a negative one
/// by −1 or +2.
fn extreme_heights(t: &Tiling, top: bool) -> Vec<i32> {
    let region = t.domain().region();
    let verts = region.vertices();
    // edges present in the region, with the spoke index from each endpoint
    let mut adj: Vec<Vec<(usize, usize)>> = vec![Vec::new(); verts.len()];
    for tri in region.triangles() {
        let vs = tri.vertices();
        for x in 0..3 {
            let (p, q) = (vs[x], vs[(x + 1) % 3]);
            let j = SPOKES
                .iter()
                .position(|&s| (p.a + s.0, p.b + s.1) == (q.a, q.b))
                .unwrap();
            let (ip, iq) = (
                region.vertex_index(&p).unwrap(),
                region.vertex_index(&q).unwrap(),
            );
            adj[ip].push((iq, j));
            adj[iq].push((ip, (j + 3) % 6));
        }
    }
    // weight of moving from v along spoke j in the favourable direction
    let rise = |j: usize| if j.is_multiple_of(2) { 1 } else { 2 };
    let mut dist = vec![i32::MAX; verts.len()];
    let mut heap = BinaryHeap::new();
    let sign = if top { 1 } else { -1 };
    for v in 0..verts.len() {
        if !region.is_interior(v) {
            dist[v] = sign * t.heights()[v];
            heap.push(Reverse((dist[v], v)));
        }
    }
    while let Some(Reverse((d, v))) = heap.pop() {
        if d > dist[v] {
            continue;
        }
        for &(w, j) in &adj[v] {
            // for the bottom, rises become falls along the opposite spoke
            let step = if top { rise(j) } else { rise((j + 3) % 6) };
            if d + step < dist[w] {
                dist[w] = d + step;
                heap.push(Reverse((dist[w], w)));
            }
        }
    }
    dist.into_iter().map(|d| sign * d).collect()
}

#[test]
fn extremes_match_the_shortest_path_oracle() {
    let mut volumes = Vec::new();
    for k in 1..=6 {
        let d = Arc::new(make_hexagon_domain(k));
        let r = Tiling::reference(&d);
        let top = extremal_tiling(&d, Extreme::Max);
        let bot = extremal_tiling(&d, Extreme::Min);
        assert_eq!(
            top.heights(),
            extreme_heights(&r, true).as_slice(),
            "top, side {k}"
        );
        assert_eq!(
            bot.heights(),
            extreme_heights(&r, false).as_slice(),
            "bottom, side {k}"
        );
        volumes.push(top.volume());
        assert_eq!(top.volume(), bot.volume());
    }
    assert_eq!(volumes, vec![0, 3, 19, 58, 131, 248]);
    for k in 1..=5 {
        let d = Arc::new(make_rhombus_domain(k));
        let r = Tiling::reference(&d);
        assert_eq!(
            extremal_tiling(&d, Extreme::Max).heights(),
            extreme_heights(&r, true).as_slice()
        );
    }
}

#[test]
fn extremes_are_the_enumerated_maximum_and_minimum() {
    for d in [make_hexagon_domain(2), make_rhombus_domain(3)] {
        let d = Arc::new(d);
        let space = enumerate(&d, 100_000).unwrap();
        let top = extremal_tiling(&d, Extreme::Max);
        let bot = extremal_tiling(&d, Extreme::Min);
        for s in space.states() {
            assert!(s.heights().iter().zip(top.heights()).all(|(a, b)| a <= b));
            assert!(s.heights().iter().zip(bot.heights()).all(|(a, b)| a >= b));
        }
    }
}

/// Absorption times by dense value iteration on the allowed-flip chain, an
/// independent check of the elimination solver.
#[test]
fn absorption_times_match_value_iteration() {
    for d in [make_rhombus_domain(2), make_hexagon_domain(2)] {
        let d = Arc::new(d);
        let space = enumerate(&d, 100_000).unwrap();
        let exact = exact_times::<f64>(&space).unwrap();
        let n = space.len();
        let mut e = vec![0.0f64; n];
        for _ in 0..20_000 {
            let mut next = vec![0.0; n];
            for i in 0..n {
                if space.is_absorbing(i) {
                    continue;
                }
                let adj = space.allowed(i);
                let deg: u32 = adj.iter().map(|&(_, c)| c).sum();
                next[i] = 1.0
                    + adj
                        .iter()
                        .map(|&(j, c)| c as f64 * e[j as usize])
                        .sum::<f64>()
                        / deg as f64;
            }
            e = next;
        }
        for i in 0..n {
            assert!(
                (e[i] - exact.expected[i]).abs() < 1e-6,
                "state {i}: {} vs {}",
                e[i],
                exact.expected[i]
            );
        }
    }
}

#[test]
fn vertex_helpers_are_consistent() {
    // spoke offsets are the six unit vectors in counterclockwise order
    let v = Vertex::new(0, 0);
    for j in 0..6 {
        assert_eq!(v.spoke(j), Vertex::new(SPOKES[j].0, SPOKES[j].1));
    }
}
