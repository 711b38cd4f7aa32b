//! Tiling state: matching, lift heights, energy, volume and flips.
//!
//! Heights use the integer lift sum: +1 along a tiling edge in positive
//! direction, −2 across a lozenge diagonal. A flip changes exactly one height by
//! ±3. All cached quantities are updated within lattice distance 2 of a flip.

mod format;
mod islands;
mod order;

use std::sync::Arc;

use thiserror::Error;

use crate::domain::{naive_energy, Domain, DomainError, NONE};
use crate::lattice::{Dir, Vertex, SPOKE_CLASS};

pub use islands::{IslandDecomposition, LevelRegion, RegionKind};
pub use order::{extremal_tiling, join, leq, leq_modulus, meet, Extreme};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TilingError {
    #[error(transparent)]
    Domain(#[from] DomainError),
    #[error("line {line}: {msg}")]
    MalformedLine { line: usize, msg: String },
    #[error("not a perfect matching: {0}")]
    NotPerfectMatching(String),
    #[error("heights do not define a tiling")]
    InvalidHeights,
    #[error("tilings live on different domains")]
    DomainMismatch,
    #[error("no flip available at {0}")]
    StaleSite(Vertex),
}

/// One of the two error-free tilings; levels and volume are measured from the nearer.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash)]
pub enum Ground {
    /// Hexagon centers are local height minima.
    Reference,
    /// Every hexagon of the reference flipped once.
    Flipped,
}

impl Ground {
    pub fn index(self) -> usize {
        match self {
            Ground::Reference => 0,
            Ground::Flipped => 1,
        }
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub(crate) struct LocalFlip {
    pub upward: bool,
    pub delta_e: i8,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash)]
pub struct FlipSite {
    pub vertex: Vertex,
    pub index: usize,
    /// The height at the vertex rises by 3 (one cube added to the lift).
    pub upward: bool,
    pub delta_e: i32,
}

/// Token restoring the state before a flip.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub struct FlipUndo {
    index: usize,
}

/// A lozenge named by its up triangle.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub struct Lozenge {
    pub up: usize,
    pub down: usize,
    pub dir: Dir,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub struct PotentialValue {
    pub v: u32,
    pub e: u32,
    pub phi: i64,
}

impl PotentialValue {
    pub fn new(v: u32, e: u32) -> Self {
        PotentialValue {
            v,
            e,
            phi: 4 * v as i64 + e as i64,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Tiling {
    domain: Arc<Domain>,
    partner: Vec<Dir>,
    heights: Vec<i32>,
    energy: u32,
    cubes: [u32; 2],
    sites: Vec<Option<LocalFlip>>,
}

impl PartialEq for Tiling {
    fn eq(&self, other: &Self) -> bool {
        self.partner == other.partner && self.same_domain(other)
    }
}

impl Eq for Tiling {}

/// Partner class of ring triangle `i` when the center is a local minimum.
fn low_class(i: usize) -> Dir {
    if i.is_multiple_of(2) {
        SPOKE_CLASS[i + 1]
    } else {
        SPOKE_CLASS[i]
    }
}

/// Partner class of ring triangle `i` when the center is a local maximum.
fn high_class(i: usize) -> Dir {
    if i.is_multiple_of(2) {
        SPOKE_CLASS[i]
    } else {
        SPOKE_CLASS[(i + 1) % 6]
    }
}

impl Tiling {
    /// The error-free tiling with every hexagon center a local minimum.
    pub fn reference(domain: &Arc<Domain>) -> Tiling {
        let partner = domain.ref_partner.clone();
        Tiling::from_parts(domain.clone(), partner, domain.flat[0].clone())
    }

    /// The error-free tiling of the given ground.
    pub fn flat(domain: &Arc<Domain>, ground: Ground) -> Tiling {
        let mut t = Tiling::reference(domain);
        if ground == Ground::Flipped {
            let centers: Vec<usize> = (0..domain.num_vertices())
                .filter(|&v| domain.is_center(v))
                .collect();
            for v in centers {
                t.flip_index(v).expect("centers of a flat tiling flip");
            }
        }
        t
    }

    pub fn from_partners(domain: &Arc<Domain>, partner: Vec<Dir>) -> Result<Tiling, TilingError> {
        let region = domain.region();
        if partner.len() != region.num_triangles() {
            return Err(TilingError::NotPerfectMatching(
                "wrong triangle count".into(),
            ));
        }
        for (t, &d) in partner.iter().enumerate() {
            match region.neighbor(t, d) {
                Some(u) if partner[u] == d => {}
                _ => {
                    return Err(TilingError::NotPerfectMatching(format!(
                        "triangle {} has no partner across {:?}",
                        region.triangles()[t],
                        d
                    )))
                }
            }
        }
        let heights = region.heights_from_partners(&partner)?;
        Ok(Tiling::from_parts(domain.clone(), partner, heights))
    }

    pub fn from_heights(domain: &Arc<Domain>, heights: Vec<i32>) -> Result<Tiling, TilingError> {
        let region = domain.region();
        if heights.len() != region.num_vertices() || heights[region.base as usize] != 0 {
            return Err(TilingError::InvalidHeights);
        }
        let partner = region
            .partners_from_heights(&heights)
            .ok_or(TilingError::InvalidHeights)?;
        Ok(Tiling::from_parts(domain.clone(), partner, heights))
    }

    fn from_parts(domain: Arc<Domain>, partner: Vec<Dir>, heights: Vec<i32>) -> Tiling {
        let energy = naive_energy(domain.region(), &partner);
        let cubes = [0, 1].map(|g| {
            heights
                .iter()
                .zip(&domain.flat[g])
                .map(|(h, f)| (h - f).unsigned_abs())
                .sum::<u32>()
                / 3
        });
        let mut t = Tiling {
            domain,
            partner,
            heights,
            energy,
            cubes,
            sites: Vec::new(),
        };
        t.sites = (0..t.heights.len()).map(|v| t.compute_site(v)).collect();
        t
    }

    pub fn domain(&self) -> &Arc<Domain> {
        &self.domain
    }

    pub fn same_domain(&self, other: &Tiling) -> bool {
        Arc::ptr_eq(&self.domain, &other.domain) || *self.domain == *other.domain
    }

    pub fn partners(&self) -> &[Dir] {
        &self.partner
    }

    pub fn heights(&self) -> &[i32] {
        &self.heights
    }

    pub fn height(&self, v: usize) -> i32 {
        self.heights[v]
    }

    pub fn num_tiles(&self) -> usize {
        self.partner.len() / 2
    }

    pub fn energy(&self) -> u32 {
        self.energy
    }

    /// Cube count between this tiling and the given error-free tiling.
    pub fn cube_distance(&self, g: Ground) -> u32 {
        self.cubes[g.index()]
    }

    /// The nearer error-free tiling (ties resolve to the reference).
    pub fn ground(&self) -> Ground {
        if self.cubes[0] <= self.cubes[1] {
            Ground::Reference
        } else {
            Ground::Flipped
        }
    }

    /// Minimum number of flips to an error-free tiling.
    pub fn volume(&self) -> u32 {
        self.cubes[0].min(self.cubes[1])
    }

    pub fn phi(&self) -> PotentialValue {
        PotentialValue::new(self.volume(), self.energy)
    }

    /// Heights relative to the given error-free tiling (multiples of 3).
    pub fn relative_heights(&self, g: Ground) -> Vec<i32> {
        self.heights
            .iter()
            .zip(&self.domain.flat[g.index()])
            .map(|(h, f)| h - f)
            .collect()
    }

    /// Interior edges shared by two lozenges of the same class, as vertex pairs.
    pub fn error_edges(&self) -> Vec<(Vertex, Vertex)> {
        let region = self.domain.region();
        let verts = region.vertices();
        region
            .edges
            .iter()
            .filter(|e| {
                e.is_interior() && {
                    let p = self.partner[e.tris[0] as usize];
                    p != e.dir && p == self.partner[e.tris[1] as usize]
                }
            })
            .map(|e| (verts[e.from as usize], verts[e.to as usize]))
            .collect()
    }

    pub fn lozenges(&self) -> Vec<Lozenge> {
        let region = self.domain.region();
        region
            .triangles()
            .iter()
            .enumerate()
            .filter(|(_, t)| t.kind == crate::lattice::TriKind::Up)
            .map(|(i, _)| {
                let dir = self.partner[i];
                Lozenge {
                    up: i,
                    down: region.neighbor(i, dir).expect("matched"),
                    dir,
                }
            })
            .collect()
    }

    /// Lift height of the lozenge's center.
    pub fn tile_height(&self, l: &Lozenge) -> i32 {
        let region = self.domain.region();
        let vs = region.tri_verts[l.up]
            .iter()
            .chain(region.tri_verts[l.down].iter());
        vs.map(|&v| self.heights[v as usize]).min().unwrap() + 1
    }

    /// Tile levels relative to the given error-free tiling, in `lozenges()` order.
    pub fn tile_levels(&self, g: Ground) -> Vec<i32> {
        let base = self.domain.tile0 + g.index() as i32;
        self.lozenges()
            .iter()
            .map(|l| self.tile_height(l) - base)
            .collect()
    }

    fn compute_site(&self, v: usize) -> Option<LocalFlip> {
        let region = self.domain.region();
        if !region.interior[v] {
            return None;
        }
        let ring = &region.ring[v];
        let upward = if (0..6).all(|i| self.partner[ring[i] as usize] == low_class(i)) {
            true
        } else if (0..6).all(|i| self.partner[ring[i] as usize] == high_class(i)) {
            false
        } else {
            return None;
        };
        let outer = &self.domain.outer[v];
        let mut de = 0i8;
        for i in 0..6 {
            if outer[i] == NONE {
                continue;
            }
            let o = self.partner[outer[i] as usize];
            let before = self.partner[ring[i] as usize] == o;
            let after = if upward { high_class(i) } else { low_class(i) } == o;
            de += after as i8 - before as i8;
        }
        Some(LocalFlip {
            upward,
            delta_e: de,
        })
    }

    pub(crate) fn local_site(&self, v: usize) -> Option<LocalFlip> {
        self.sites[v]
    }

    pub fn site(&self, v: usize) -> Option<FlipSite> {
        self.sites[v].map(|s| FlipSite {
            vertex: self.domain.region().vertices()[v],
            index: v,
            upward: s.upward,
            delta_e: s.delta_e as i32,
        })
    }

    pub fn site_at(&self, v: Vertex) -> Option<FlipSite> {
        self.domain
            .region()
            .vertex_index(&v)
            .and_then(|i| self.site(i))
    }

    /// Every vertex belonging to exactly three lozenges, with its flip effect.
    pub fn flips(&self) -> Vec<FlipSite> {
        (0..self.sites.len()).filter_map(|v| self.site(v)).collect()
    }

    /// Change of the cube count to ground `g` if the flip at `v` were applied.
    pub fn delta_cubes(&self, site: &FlipSite, g: Ground) -> i32 {
        let f = self.domain.flat[g.index()][site.index];
        let h = self.heights[site.index];
        let h2 = if site.upward { h + 3 } else { h - 3 };
        ((h2 - f).abs() - (h - f).abs()) / 3
    }

    /// Change of the volume if the flip were applied.
    pub fn delta_volume(&self, site: &FlipSite) -> i32 {
        let a = self.cubes[0] as i32 + self.delta_cubes(site, Ground::Reference);
        let b = self.cubes[1] as i32 + self.delta_cubes(site, Ground::Flipped);
        a.min(b) - self.volume() as i32
    }

    pub fn apply_flip(&mut self, site: &FlipSite) -> Result<FlipUndo, TilingError> {
        match self.sites.get(site.index).copied().flatten() {
            Some(s) if s.upward == site.upward && s.delta_e as i32 == site.delta_e => {}
            _ => return Err(TilingError::StaleSite(site.vertex)),
        }
        self.flip_index(site.index)
    }

    pub fn undo(&mut self, token: FlipUndo) {
        self.flip_index(token.index)
            .expect("undo of a just-applied flip");
    }

    /// Flip at vertex index `v`, whichever way it goes.
    pub fn flip_index(&mut self, v: usize) -> Result<FlipUndo, TilingError> {
        let Some(s) = self.sites[v] else {
            return Err(TilingError::StaleSite(self.domain.region().vertices()[v]));
        };
        let domain = self.domain.clone();
        let ring = &domain.region().ring[v];
        for i in 0..6 {
            self.partner[ring[i] as usize] = if s.upward {
                high_class(i)
            } else {
                low_class(i)
            };
        }
        let old = self.heights[v];
        let new = if s.upward { old + 3 } else { old - 3 };
        self.heights[v] = new;
        self.energy = (self.energy as i32 + s.delta_e as i32) as u32;
        for g in 0..2 {
            let f = domain.flat[g][v];
            let d = ((new - f).abs() - (old - f).abs()) / 3;
            self.cubes[g] = (self.cubes[g] as i32 + d) as u32;
        }
        for &w in domain.near(v) {
            self.sites[w as usize] = self.compute_site(w as usize);
        }
        Ok(FlipUndo { index: v })
    }

    /// Vertices whose flip status may change when `v` flips.
    pub fn affected_by(&self, v: usize) -> &[u32] {
        self.domain.near(v)
    }

    /// Compares every cache with a full recomputation.
    pub fn check_caches(&self) -> Result<(), String> {
        let fresh =
            Tiling::from_partners(&self.domain, self.partner.clone()).map_err(|e| e.to_string())?;
        if fresh.heights != self.heights {
            return Err("heights differ from recomputation".into());
        }
        if fresh.energy != self.energy {
            return Err(format!(
                "energy {} but recomputed {}",
                self.energy, fresh.energy
            ));
        }
        if fresh.cubes != self.cubes {
            return Err(format!(
                "cube counts {:?} but recomputed {:?}",
                self.cubes, fresh.cubes
            ));
        }
        if fresh.sites != self.sites {
            return Err("flip sites differ from recomputation".into());
        }
        Ok(())
    }

    #[cfg(test)]
    pub(crate) fn corrupt_site(&mut self, v: usize) {
        self.sites[v] = None;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{make_hexagon_domain, make_rhombus_domain};
    use crate::lattice::Vertex;

    fn hex(k: u32) -> Arc<Domain> {
        Arc::new(make_hexagon_domain(k))
    }

    #[test]
    fn reference_is_flat() {
        for d in [hex(1), hex(2), hex(4), Arc::new(make_rhombus_domain(3))] {
            let t = Tiling::reference(&d);
            assert_eq!(t.energy(), 0);
            assert_eq!(t.volume(), 0);
            assert!(t.tile_levels(Ground::Reference).iter().all(|&l| l == 0));
            t.check_caches().unwrap();
        }
    }

    #[test]
    fn flat_interior_heights_take_three_values() {
        let d = hex(4);
        let t = Tiling::reference(&d);
        let mut vals: Vec<i32> = (0..d.num_vertices())
            .filter(|&v| d.region().is_interior(v))
            .map(|v| t.height(v))
            .collect();
        vals.sort();
        vals.dedup();
        assert_eq!(vals.len(), 3);
        assert_eq!(vals[2] - vals[0], 2);
    }

    #[test]
    fn reference_heights_repeat_along_lines() {
        let d = hex(2);
        let t = Tiling::reference(&d);
        let r = d.region();
        for e in r.edges() {
            let dh = t.height(e.to as usize) - t.height(e.from as usize);
            assert!(dh == 1 || dh == -2);
        }
        // along d0 from a center: +1, +1, −2
        let c = d.hex_centers()[3];
        let idx = |v: Vertex| r.vertex_index(&v).unwrap();
        let h0 = t.height(idx(c));
        assert_eq!(t.height(idx(c.offset(1, 0))) - h0, 1);
        assert_eq!(t.height(idx(c.offset(-1, 0))) - h0, 2);
    }

    #[test]
    fn heights_match_vertex_classes() {
        let d = hex(3);
        let t = extremal_tiling(&d, Extreme::Max);
        let r = d.region();
        let base_class = r.base_vertex().class();
        for (v, p) in r.vertices().iter().enumerate() {
            assert_eq!((t.height(v) - (p.class() - base_class)).rem_euclid(3), 0);
        }
    }

    #[test]
    fn single_interior_flip_creates_island() {
        let d = hex(2);
        let mut t = Tiling::reference(&d);
        let center = d.region().vertex_index(&Vertex::new(0, 0)).unwrap();
        let site = t.site(center).unwrap();
        assert!(site.upward);
        assert_eq!(site.delta_e, 6);
        let before = t.heights().to_vec();
        t.apply_flip(&site).unwrap();
        assert_eq!(t.energy(), 6);
        assert_eq!(t.volume(), 1);
        for (v, (&a, &b)) in before.iter().zip(t.heights()).enumerate() {
            assert_eq!(b - a, if v == center { 3 } else { 0 });
        }
        let back = t.site(center).unwrap();
        assert!(!back.upward);
        assert_eq!(back.delta_e, -6);
        t.check_caches().unwrap();
    }

    #[test]
    fn flip_then_undo_restores_everything() {
        let d = hex(3);
        let mut t = extremal_tiling(&d, Extreme::Max);
        let orig = t.clone();
        for s in orig.flips() {
            let tok = t.apply_flip(&s).unwrap();
            let rev = t.site(s.index).unwrap();
            assert_eq!(rev.upward, !s.upward);
            assert_eq!(rev.delta_e, -s.delta_e);
            t.undo(tok);
            assert_eq!(t, orig);
            assert_eq!(t.heights(), orig.heights());
            assert_eq!(t.energy(), orig.energy());
            t.check_caches().unwrap();
        }
    }

    #[test]
    fn stale_site_is_rejected() {
        let d = hex(2);
        let mut t = Tiling::reference(&d);
        let mut s = t.flips()[0];
        s.upward = !s.upward;
        assert!(matches!(t.apply_flip(&s), Err(TilingError::StaleSite(_))));
    }

    #[test]
    fn reference_sites_all_raise_energy() {
        for d in [hex(2), Arc::new(make_rhombus_domain(2))] {
            let t = Tiling::reference(&d);
            assert!(!t.flips().is_empty());
            assert!(t.flips().iter().all(|s| s.delta_e > 0));
        }
    }

    #[test]
    fn both_flat_tilings_are_error_free() {
        let d = hex(3);
        let a = Tiling::flat(&d, Ground::Reference);
        let b = Tiling::flat(&d, Ground::Flipped);
        assert_eq!(b.energy(), 0);
        assert_eq!(b.volume(), 0);
        assert_eq!(b.ground(), Ground::Flipped);
        assert_eq!(
            a.cube_distance(Ground::Flipped),
            d.hex_centers().len() as u32
        );
        assert!(b.tile_levels(Ground::Reference).iter().all(|&l| l == 1));
    }

    #[test]
    fn incremental_caches_survive_random_flips() {
        use rand_core::{RngCore, SeedableRng};
        let d = hex(8);
        let mut t = Tiling::reference(&d);
        let mut rng = rand_pcg::Pcg64::seed_from_u64(7);
        for i in 0..1000 {
            let fl = t.flips();
            let s = fl[(rng.next_u64() % fl.len() as u64) as usize];
            let cubes = [
                t.cube_distance(Ground::Reference),
                t.cube_distance(Ground::Flipped),
            ];
            t.apply_flip(&s).unwrap();
            assert_eq!(
                (t.cube_distance(Ground::Reference) as i32 - cubes[0] as i32).abs(),
                1
            );
            assert_eq!(
                (t.cube_distance(Ground::Flipped) as i32 - cubes[1] as i32).abs(),
                1
            );
            if i % 50 == 0 {
                t.check_caches().unwrap();
            }
        }
        t.check_caches().unwrap();
    }

    #[test]
    fn corrupted_cache_is_detected() {
        let d = hex(2);
        let mut t = Tiling::reference(&d);
        let v = t.flips()[0].index;
        t.corrupt_site(v);
        assert!(t.check_caches().is_err());
    }

    #[test]
    fn bad_matching_is_rejected() {
        let d = hex(1);
        let mut p = Tiling::reference(&d).partners().to_vec();
        p[0] = if p[0] == Dir::D0 { Dir::D1 } else { Dir::D0 };
        assert!(matches!(
            Tiling::from_partners(&d, p),
            Err(TilingError::NotPerfectMatching(_))
        ));
    }

    #[test]
    fn heights_round_trip() {
        let d = hex(3);
        let t = extremal_tiling(&d, Extreme::Min);
        let back = Tiling::from_heights(&d, t.heights().to_vec()).unwrap();
        assert_eq!(back, t);
        let mut bad = t.heights().to_vec();
        let v = (0..bad.len()).find(|&v| d.region().is_interior(v)).unwrap();
        bad[v] += 1;
        assert_eq!(
            Tiling::from_heights(&d, bad),
            Err(TilingError::InvalidHeights)
        );
    }
}
