//! Islands and holes.
//!
//! For each threshold `L ≥ 1`, every connected component `C` of tiles with
//! level `≥ L` is an island of level `L` whose area counts `C` together with
//! the pockets it encloses; each enclosed pocket is a hole of level `L − 1`.
//! Negative levels mirror this. The volume is then the sum of island areas
//! minus hole areas, which equals `Σ |level| / 3`.

use std::collections::{HashMap, VecDeque};

use super::{Ground, Tiling};
use crate::domain::NONE;
use crate::lattice::{TriKind, Vertex, SPOKES};

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash)]
pub enum RegionKind {
    Island,
    Hole,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LevelRegion {
    pub kind: RegionKind,
    pub level: i32,
    /// In six-triangle hexagons.
    pub area: u32,
    /// Lozenges, as indices into `Tiling::lozenges()`.
    pub tiles: Vec<usize>,
    /// Outer boundary, counterclockwise, as a closed vertex cycle.
    pub boundary: Vec<Vertex>,
    /// Every boundary edge is an interior error edge.
    pub closed: bool,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IslandDecomposition {
    pub ground: Ground,
    pub regions: Vec<LevelRegion>,
    pub volume: u32,
}

impl IslandDecomposition {
    pub fn islands(&self) -> impl Iterator<Item = &LevelRegion> {
        self.regions.iter().filter(|r| r.kind == RegionKind::Island)
    }

    pub fn holes(&self) -> impl Iterator<Item = &LevelRegion> {
        self.regions.iter().filter(|r| r.kind == RegionKind::Hole)
    }
}

struct TileGraph {
    /// lozenge index of each triangle
    owner: Vec<usize>,
    adj: Vec<Vec<usize>>,
    touches_boundary: Vec<bool>,
}

impl Tiling {
    fn tile_graph(&self) -> TileGraph {
        let region = self.domain().region();
        let loz = self.lozenges();
        let mut owner = vec![usize::MAX; region.num_triangles()];
        for (i, l) in loz.iter().enumerate() {
            owner[l.up] = i;
            owner[l.down] = i;
        }
        let mut adj = vec![Vec::new(); loz.len()];
        let mut touches_boundary = vec![false; loz.len()];
        for (t, nbrs) in region.tri_nbr.iter().enumerate() {
            for &u in nbrs {
                if u == NONE {
                    touches_boundary[owner[t]] = true;
                } else if owner[u as usize] != owner[t] {
                    adj[owner[t]].push(owner[u as usize]);
                }
            }
        }
        for a in &mut adj {
            a.sort_unstable();
            a.dedup();
        }
        TileGraph {
            owner,
            adj,
            touches_boundary,
        }
    }

    /// Islands and holes measured from the nearer error-free tiling.
    pub fn islands(&self) -> IslandDecomposition {
        self.islands_from(self.ground())
    }

    pub fn islands_from(&self, ground: Ground) -> IslandDecomposition {
        let levels = self.tile_levels(ground);
        let graph = self.tile_graph();
        let n = levels.len();
        let mut regions = Vec::new();
        for sign in [1i32, -1] {
            let top = levels.iter().map(|&l| sign * l).max().unwrap_or(0);
            for threshold in 1..=top {
                let inside: Vec<bool> = levels.iter().map(|&l| sign * l >= threshold).collect();
                let mut comp = vec![usize::MAX; n];
                for start in 0..n {
                    if !inside[start] || comp[start] != usize::MAX {
                        continue;
                    }
                    let tiles = flood(&graph.adj, start, |t| inside[t], &mut comp, start);
                    let in_c: Vec<bool> = {
                        let mut m = vec![false; n];
                        for &t in &tiles {
                            m[t] = true;
                        }
                        m
                    };
                    // complement tiles reachable from the domain boundary are outside
                    let mut outside = vec![false; n];
                    let mut queue: VecDeque<usize> = (0..n)
                        .filter(|&t| !in_c[t] && graph.touches_boundary[t])
                        .collect();
                    for &t in &queue {
                        outside[t] = true;
                    }
                    while let Some(t) = queue.pop_front() {
                        for &u in &graph.adj[t] {
                            if !in_c[u] && !outside[u] {
                                outside[u] = true;
                                queue.push_back(u);
                            }
                        }
                    }
                    let mut pocket_mark = vec![usize::MAX; n];
                    let mut fill = tiles.clone();
                    let mut holes = Vec::new();
                    for t in 0..n {
                        if !in_c[t] && !outside[t] && pocket_mark[t] == usize::MAX {
                            let pocket = flood(&graph.adj, t, |u| !in_c[u], &mut pocket_mark, t);
                            fill.extend(&pocket);
                            holes.push(pocket);
                        }
                    }
                    fill.sort_unstable();
                    regions.push(self.make_region(
                        &graph,
                        RegionKind::Island,
                        sign * threshold,
                        tiles,
                        &fill,
                    ));
                    for mut h in holes {
                        h.sort_unstable();
                        let f = h.clone();
                        regions.push(self.make_region(
                            &graph,
                            RegionKind::Hole,
                            sign * (threshold - 1),
                            h,
                            &f,
                        ));
                    }
                }
            }
        }
        let islands: u32 = regions
            .iter()
            .filter(|r| r.kind == RegionKind::Island)
            .map(|r| r.area)
            .sum();
        let holes: u32 = regions
            .iter()
            .filter(|r| r.kind == RegionKind::Hole)
            .map(|r| r.area)
            .sum();
        let volume = islands - holes;
        debug_assert_eq!(
            volume as i64 * 3,
            levels.iter().map(|l| l.abs() as i64).sum::<i64>()
        );
        IslandDecomposition {
            ground,
            regions,
            volume,
        }
    }

    fn make_region(
        &self,
        graph: &TileGraph,
        kind: RegionKind,
        level: i32,
        mut tiles: Vec<usize>,
        fill: &[usize],
    ) -> LevelRegion {
        tiles.sort_unstable();
        let (boundary, closed) = self.trace_boundary(graph, fill);
        LevelRegion {
            kind,
            level,
            area: (fill.len() / 3) as u32,
            tiles,
            boundary,
            closed,
        }
    }

    /// Outer boundary cycle of a union of lozenges, and whether all of its
    /// edges are interior errors.
    fn trace_boundary(&self, graph: &TileGraph, fill: &[usize]) -> (Vec<Vertex>, bool) {
        let region = self.domain().region();
        let mut in_fill = vec![false; graph.adj.len()];
        for &t in fill {
            in_fill[t] = true;
        }
        let mut out: HashMap<u32, Vec<u32>> = HashMap::new();
        let mut closed = true;
        for (t, tri) in region.triangles().iter().enumerate() {
            if !in_fill[graph.owner[t]] {
                continue;
            }
            for d in crate::lattice::Dir::ALL {
                let u = region.tri_nbr[t][d.index()];
                if u != NONE && in_fill[graph.owner[u as usize]] {
                    continue;
                }
                let e = &region.edges[region.tri_edges[t][d.index()] as usize];
                let (p, q) = if tri.kind == TriKind::Up {
                    (e.from, e.to)
                } else {
                    (e.to, e.from)
                };
                out.entry(p).or_default().push(q);
                let error = u != NONE && {
                    let a = self.partners()[t];
                    a != d && a == self.partners()[u as usize]
                };
                closed &= error;
            }
        }
        let verts = region.vertices();
        let dir_of = |p: u32, q: u32| -> usize {
            let (a, b) = (
                verts[q as usize].a - verts[p as usize].a,
                verts[q as usize].b - verts[p as usize].b,
            );
            SPOKES.iter().position(|&s| s == (a, b)).expect("unit edge")
        };
        let start = *out
            .keys()
            .min_by_key(|&&v| verts[v as usize])
            .expect("non-empty region");
        let mut cycle = vec![verts[start as usize]];
        let first = out[&start][0];
        let mut prev = start;
        let mut cur = first;
        // at a pinch, take the sharpest left turn to stay on the current lobe
        while !(prev == start && cur == first && cycle.len() > 1) {
            cycle.push(verts[cur as usize]);
            let din = dir_of(prev, cur);
            let next = *out[&cur]
                .iter()
                .max_by_key(|&&w| {
                    let turn = (dir_of(cur, w) + 6 - din) % 6;
                    // 1, 2 left; 0 straight; 5, 4 right
                    match turn {
                        2 => 4,
                        1 => 3,
                        0 => 2,
                        5 => 1,
                        _ => 0,
                    }
                })
                .unwrap();
            prev = cur;
            cur = next;
        }
        cycle.pop();
        (cycle, closed)
    }
}

fn flood(
    adj: &[Vec<usize>],
    start: usize,
    member: impl Fn(usize) -> bool,
    mark: &mut [usize],
    label: usize,
) -> Vec<usize> {
    let mut out = vec![start];
    mark[start] = label;
    let mut i = 0;
    while i < out.len() {
        let t = out[i];
        i += 1;
        for &u in &adj[t] {
            if mark[u] == usize::MAX && member(u) {
                mark[u] = label;
                out.push(u);
            }
        }
    }
    out
}
