//! Regions of the triangular grid and hexagon-decomposed domains.

use std::collections::{HashMap, VecDeque};
use std::fmt::Write as _;

use thiserror::Error;

use crate::lattice::{Dir, Edge, TriKind, Triangle, Vertex, NNN, SPOKE_CLASS};

pub(crate) const NONE: u32 = u32::MAX;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DomainError {
    #[error("line {line}: {msg}")]
    MalformedLine { line: usize, msg: String },
    #[error("region has no triangles")]
    Empty,
    #[error("triangle {0} listed twice")]
    Duplicate(String),
    #[error("region is not connected")]
    NotConnected,
    #[error("region is not simply connected")]
    NotSimplyConnected,
    #[error("triangles do not partition into the declared hexagons: {0}")]
    NotHexDecomposable(String),
    #[error("fixed-chirality reference has {0} errors")]
    ReferenceNotErrorFree(u32),
    #[error("inconsistent lift around {0}")]
    InconsistentLift(String),
}

/// A unit edge of a region with the indices of its one or two triangles.
#[derive(Clone, Copy, Debug)]
pub struct EdgeRec {
    pub from: u32,
    pub to: u32,
    pub dir: Dir,
    pub tris: [u32; 2],
}

impl EdgeRec {
    pub fn is_interior(&self) -> bool {
        self.tris[1] != NONE
    }
}

/// A finite, connected, simply connected set of unit triangles.
#[derive(Clone, Debug)]
pub struct Region {
    pub(crate) triangles: Vec<Triangle>,
    pub(crate) tri_index: HashMap<Triangle, u32>,
    pub(crate) vertices: Vec<Vertex>,
    pub(crate) vert_index: HashMap<Vertex, u32>,
    pub(crate) tri_verts: Vec<[u32; 3]>,
    pub(crate) tri_nbr: Vec<[u32; 3]>,
    pub(crate) tri_edges: Vec<[u32; 3]>,
    pub(crate) ring: Vec<[u32; 6]>,
    pub(crate) spokes: Vec<[u32; 6]>,
    pub(crate) edges: Vec<EdgeRec>,
    pub(crate) interior: Vec<bool>,
    pub(crate) base: u32,
}

impl PartialEq for Region {
    fn eq(&self, other: &Self) -> bool {
        self.triangles == other.triangles
    }
}

impl Eq for Region {}

impl Region {
    pub fn new(mut triangles: Vec<Triangle>) -> Result<Region, DomainError> {
        if triangles.is_empty() {
            return Err(DomainError::Empty);
        }
        triangles.sort();
        for w in triangles.windows(2) {
            if w[0] == w[1] {
                return Err(DomainError::Duplicate(w[0].to_string()));
            }
        }
        let tri_index: HashMap<Triangle, u32> = triangles
            .iter()
            .enumerate()
            .map(|(i, t)| (*t, i as u32))
            .collect();

        let mut vset: Vec<Vertex> = triangles.iter().flat_map(|t| t.vertices()).collect();
        vset.sort();
        vset.dedup();
        let vert_index: HashMap<Vertex, u32> = vset
            .iter()
            .enumerate()
            .map(|(i, v)| (*v, i as u32))
            .collect();

        let tri_verts: Vec<[u32; 3]> = triangles
            .iter()
            .map(|t| t.vertices().map(|v| vert_index[&v]))
            .collect();
        let tri_nbr: Vec<[u32; 3]> = triangles
            .iter()
            .map(|t| Dir::ALL.map(|d| *tri_index.get(&t.neighbor(d)).unwrap_or(&NONE)))
            .collect();

        let mut edge_index: HashMap<Edge, u32> = HashMap::new();
        let mut edges: Vec<EdgeRec> = Vec::new();
        let mut tri_edges = vec![[NONE; 3]; triangles.len()];
        for (ti, t) in triangles.iter().enumerate() {
            for d in Dir::ALL {
                let e = t.edge(d);
                let id = *edge_index.entry(e).or_insert_with(|| {
                    edges.push(EdgeRec {
                        from: vert_index[&e.from],
                        to: vert_index[&e.to()],
                        dir: d,
                        tris: [ti as u32, NONE],
                    });
                    (edges.len() - 1) as u32
                });
                if edges[id as usize].tris[0] != ti as u32 {
                    edges[id as usize].tris[1] = ti as u32;
                }
                tri_edges[ti][d.index()] = id;
            }
        }

        let ring: Vec<[u32; 6]> = vset
            .iter()
            .map(|v| v.ring().map(|t| *tri_index.get(&t).unwrap_or(&NONE)))
            .collect();
        let spokes: Vec<[u32; 6]> = vset
            .iter()
            .enumerate()
            .map(|(vi, v)| {
                let r = &ring[vi];
                let mut s = [NONE; 6];
                for (j, slot) in s.iter_mut().enumerate() {
                    if r[j] != NONE || r[(j + 5) % 6] != NONE {
                        *slot = vert_index[&v.spoke(j)];
                    }
                }
                s
            })
            .collect();
        let interior: Vec<bool> = ring.iter().map(|r| r.iter().all(|&t| t != NONE)).collect();

        // connectivity over triangle adjacency
        let mut seen = vec![false; triangles.len()];
        let mut queue = VecDeque::from([0usize]);
        seen[0] = true;
        let mut count = 1;
        while let Some(t) = queue.pop_front() {
            for &u in &tri_nbr[t] {
                if u != NONE && !seen[u as usize] {
                    seen[u as usize] = true;
                    count += 1;
                    queue.push_back(u as usize);
                }
            }
        }
        if count != triangles.len() {
            return Err(DomainError::NotConnected);
        }

        // a disk: no pinched vertex and Euler characteristic 1
        for r in &ring {
            let present = r.iter().filter(|&&t| t != NONE).count();
            if present < 6 {
                let arcs = (0..6)
                    .filter(|&i| r[i] != NONE && r[(i + 5) % 6] == NONE)
                    .count();
                if arcs != 1 {
                    return Err(DomainError::NotSimplyConnected);
                }
            }
        }
        let euler = vset.len() as i64 - edges.len() as i64 + triangles.len() as i64;
        if euler != 1 {
            return Err(DomainError::NotSimplyConnected);
        }

        let base = (0..vset.len())
            .find(|&i| !interior[i])
            .expect("finite region has a boundary") as u32;

        Ok(Region {
            triangles,
            tri_index,
            vertices: vset,
            vert_index,
            tri_verts,
            tri_nbr,
            tri_edges,
            ring,
            spokes,
            edges,
            interior,
            base,
        })
    }

    /// Straight-sided hexagon with sides `a, b, c, a, b, c`; its tilings are the
    /// plane partitions in an `a × b × c` box.
    pub fn straight_hexagon(a: i32, b: i32, c: i32) -> Result<Region, DomainError> {
        let mut tris = Vec::new();
        for s in -c - 1..=a + 1 {
            for t in -1..=b + c + 1 {
                for kind in [TriKind::Up, TriKind::Down] {
                    let tri = Triangle { a: s, b: t, kind };
                    let inside = tri.vertices().iter().all(|v| {
                        v.b >= 0
                            && v.b <= b + c
                            && v.a >= -c
                            && v.a <= a
                            && v.a + v.b >= 0
                            && v.a + v.b <= a + b
                    });
                    if inside {
                        tris.push(tri);
                    }
                }
            }
        }
        Region::new(tris)
    }

    pub fn triangles(&self) -> &[Triangle] {
        &self.triangles
    }

    pub fn vertices(&self) -> &[Vertex] {
        &self.vertices
    }

    pub fn edges(&self) -> &[EdgeRec] {
        &self.edges
    }

    pub fn num_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn triangle_index(&self, t: &Triangle) -> Option<usize> {
        self.tri_index.get(t).map(|&i| i as usize)
    }

    pub fn vertex_index(&self, v: &Vertex) -> Option<usize> {
        self.vert_index.get(v).map(|&i| i as usize)
    }

    pub fn is_interior(&self, v: usize) -> bool {
        self.interior[v]
    }

    pub fn base_vertex(&self) -> Vertex {
        self.vertices[self.base as usize]
    }

    /// Index of the triangle across edge class `d`, if inside the region.
    pub fn neighbor(&self, t: usize, d: Dir) -> Option<usize> {
        let u = self.tri_nbr[t][d.index()];
        (u != NONE).then_some(u as usize)
    }

    pub fn boundary_edges(&self) -> Vec<Edge> {
        self.edges
            .iter()
            .filter(|e| !e.is_interior())
            .map(|e| Edge {
                from: self.vertices[e.from as usize],
                dir: e.dir,
            })
            .collect()
    }

    /// Heights of the lift of a matching given as the partner direction of each
    /// triangle, anchored at zero on the base vertex.
    pub fn heights_from_partners(&self, partner: &[Dir]) -> Result<Vec<i32>, DomainError> {
        let step = |e: &EdgeRec| -> Result<i32, DomainError> {
            let d0 = partner[e.tris[0] as usize] == e.dir;
            if e.tris[1] != NONE && d0 != (partner[e.tris[1] as usize] == e.dir) {
                return Err(DomainError::InconsistentLift(
                    self.vertices[e.from as usize].to_string(),
                ));
            }
            Ok(if d0 { -2 } else { 1 })
        };
        let mut adj: Vec<Vec<(u32, u32)>> = vec![Vec::new(); self.vertices.len()];
        for (i, e) in self.edges.iter().enumerate() {
            adj[e.from as usize].push((e.to, i as u32));
            adj[e.to as usize].push((e.from, i as u32));
        }
        let mut h = vec![i32::MIN; self.vertices.len()];
        h[self.base as usize] = 0;
        let mut queue = VecDeque::from([self.base]);
        while let Some(v) = queue.pop_front() {
            for &(w, ei) in &adj[v as usize] {
                let e = &self.edges[ei as usize];
                let dh = step(e)?;
                let expect = if e.from == v {
                    h[v as usize] + dh
                } else {
                    h[v as usize] - dh
                };
                if h[w as usize] == i32::MIN {
                    h[w as usize] = expect;
                    queue.push_back(w);
                } else if h[w as usize] != expect {
                    return Err(DomainError::InconsistentLift(
                        self.vertices[w as usize].to_string(),
                    ));
                }
            }
        }
        Ok(h)
    }

    /// Partner directions from heights; fails unless every triangle has exactly
    /// one diagonal edge and partners agree.
    pub fn partners_from_heights(&self, h: &[i32]) -> Option<Vec<Dir>> {
        let mut partner = Vec::with_capacity(self.triangles.len());
        for t in 0..self.triangles.len() {
            let mut diag = None;
            for d in Dir::ALL {
                let e = &self.edges[self.tri_edges[t][d.index()] as usize];
                match h[e.to as usize] - h[e.from as usize] {
                    1 => {}
                    -2 if diag.is_none() => diag = Some(d),
                    _ => return None,
                }
            }
            partner.push(diag?);
        }
        for (t, &d) in partner.iter().enumerate() {
            let u = self.tri_nbr[t][d.index()];
            if u == NONE || partner[u as usize] != d {
                return None;
            }
        }
        Some(partner)
    }

    /// Maximal runs of vertices along next-nearest-neighbor direction `family`,
    /// as vertex indices, ordered by first vertex.
    pub(crate) fn line_indices(&self, family: usize) -> Vec<Vec<u32>> {
        let (da, db) = NNN[family];
        let link = |v: Vertex| -> Option<u32> {
            // the segment v → v + u crosses exactly these two triangles
            let (a, b) = (v.a, v.b);
            let pair = match family {
                0 => [Triangle::up(a, b), Triangle::down(a, b)],
                1 => [Triangle::up(a - 1, b + 1), Triangle::down(a - 1, b)],
                _ => [Triangle::up(a - 1, b), Triangle::down(a - 2, b)],
            };
            if pair.iter().all(|t| self.tri_index.contains_key(t)) {
                Some(self.vert_index[&v.offset(da, db)])
            } else {
                None
            }
        };
        let next: Vec<Option<u32>> = self.vertices.iter().map(|&v| link(v)).collect();
        let mut has_prev = vec![false; self.vertices.len()];
        for n in next.iter().flatten() {
            has_prev[*n as usize] = true;
        }
        let mut lines = Vec::new();
        for start in 0..self.vertices.len() {
            if has_prev[start] {
                continue;
            }
            let mut line = vec![start as u32];
            let mut cur = start;
            while let Some(n) = next[cur] {
                line.push(n);
                cur = n as usize;
            }
            lines.push(line);
        }
        lines
    }
}

/// A region together with a partition of its triangles into unit hexagons.
#[derive(Clone, Debug)]
pub struct Domain {
    pub(crate) region: Region,
    pub(crate) centers: Vec<Vertex>,
    pub(crate) is_center: Vec<bool>,
    pub(crate) ref_partner: Vec<Dir>,
    pub(crate) flat: [Vec<i32>; 2],
    pub(crate) tile0: i32,
    pub(crate) outer: Vec<[u32; 6]>,
    pub(crate) near_start: Vec<u32>,
    pub(crate) near: Vec<u32>,
    pub(crate) lines: [Vec<Vec<u32>>; 3],
}

impl PartialEq for Domain {
    fn eq(&self, other: &Self) -> bool {
        self.region == other.region && self.centers == other.centers
    }
}

impl Eq for Domain {}

impl Domain {
    pub fn new(region: Region, mut centers: Vec<Vertex>) -> Result<Domain, DomainError> {
        centers.sort();
        centers.dedup();
        let n_tri = region.triangles.len();
        let mut owner = vec![NONE; n_tri];
        let mut ref_partner = vec![Dir::D0; n_tri];
        for (ci, c) in centers.iter().enumerate() {
            for (i, t) in c.ring().iter().enumerate() {
                let Some(ti) = region.triangle_index(t) else {
                    return Err(DomainError::NotHexDecomposable(format!(
                        "hexagon at {c} leaves the region"
                    )));
                };
                if owner[ti] != NONE {
                    return Err(DomainError::NotHexDecomposable(format!(
                        "hexagons overlap at triangle {t}"
                    )));
                }
                owner[ti] = ci as u32;
                // the center is a local minimum: diagonals are the odd spokes
                ref_partner[ti] = if i % 2 == 0 {
                    SPOKE_CLASS[i + 1]
                } else {
                    SPOKE_CLASS[i]
                };
            }
        }
        if let Some(t) = owner.iter().position(|&o| o == NONE) {
            return Err(DomainError::NotHexDecomposable(format!(
                "triangle {} is in no hexagon",
                region.triangles[t]
            )));
        }

        let reference = region.heights_from_partners(&ref_partner)?;
        let energy = naive_energy(&region, &ref_partner);
        if energy != 0 {
            return Err(DomainError::ReferenceNotErrorFree(energy));
        }
        let mut is_center = vec![false; region.vertices.len()];
        let mut raised = reference.clone();
        for c in &centers {
            let v = region.vert_index[c];
            is_center[v as usize] = true;
            raised[v as usize] += 3;
        }
        let tile0 = reference[region.vert_index[&centers[0]] as usize] + 1;

        let nv = region.vertices.len();
        let mut outer = vec![[NONE; 6]; nv];
        for v in 0..nv {
            if !region.interior[v] {
                continue;
            }
            for i in 0..6 {
                let t = region.ring[v][i] as usize;
                let d = outer_class(i);
                outer[v][i] = region.tri_nbr[t][d.index()];
            }
        }
        let mut near_start = Vec::with_capacity(nv + 1);
        let mut near = Vec::new();
        for v in 0..nv {
            near_start.push(near.len() as u32);
            let p = region.vertices[v];
            for da in -2i32..=2 {
                for db in -2i32..=2 {
                    let dist = da.abs().max(db.abs()).max((da + db).abs());
                    if dist > 2 {
                        continue;
                    }
                    if let Some(&w) = region.vert_index.get(&p.offset(da, db)) {
                        if region.interior[w as usize] {
                            near.push(w);
                        }
                    }
                }
            }
        }
        near_start.push(near.len() as u32);
        let lines = [
            region.line_indices(0),
            region.line_indices(1),
            region.line_indices(2),
        ];

        Ok(Domain {
            region,
            centers,
            is_center,
            ref_partner,
            flat: [reference, raised],
            tile0,
            outer,
            near_start,
            near,
            lines,
        })
    }

    /// Domain made of the unit hexagons around `centers`.
    pub fn from_centers(centers: &[Vertex]) -> Result<Domain, DomainError> {
        let mut tris: Vec<Triangle> = centers.iter().flat_map(|c| c.ring()).collect();
        tris.sort();
        let before = tris.len();
        tris.dedup();
        if tris.len() != before {
            return Err(DomainError::NotHexDecomposable("hexagons overlap".into()));
        }
        let region = Region::new(tris)?;
        Domain::new(region, centers.to_vec())
    }

    pub fn region(&self) -> &Region {
        &self.region
    }

    pub fn hex_centers(&self) -> &[Vertex] {
        &self.centers
    }

    pub fn is_center(&self, v: usize) -> bool {
        self.is_center[v]
    }

    pub fn num_tiles(&self) -> usize {
        self.region.triangles.len() / 2
    }

    pub fn num_vertices(&self) -> usize {
        self.region.vertices.len()
    }

    /// Heights of the two error-free tilings: centers low, then centers raised.
    pub fn flat_heights(&self, which: usize) -> &[i32] {
        &self.flat[which]
    }

    pub fn reference_partners(&self) -> &[Dir] {
        &self.ref_partner
    }

    /// Tile height shared by every lozenge of the reference tiling.
    pub fn reference_tile_height(&self) -> i32 {
        self.tile0
    }

    /// Interior vertices within lattice distance 2 of `v`, including `v`.
    pub(crate) fn near(&self, v: usize) -> &[u32] {
        &self.near[self.near_start[v] as usize..self.near_start[v + 1] as usize]
    }

    pub fn nnn_lines(&self, family: usize) -> LineFamily {
        assert!(family < 3, "family index is 0, 1 or 2");
        LineFamily {
            family,
            direction: NNN[family],
            lines: self.lines[family]
                .iter()
                .map(|l| {
                    l.iter()
                        .map(|&v| self.region.vertices[v as usize])
                        .collect()
                })
                .collect(),
        }
    }

    pub(crate) fn line_indices(&self, family: usize) -> &[Vec<u32>] {
        &self.lines[family]
    }

    pub fn to_text(&self) -> String {
        let mut s = String::from("domain v1\n");
        for t in &self.region.triangles {
            writeln!(s, "{t}").unwrap();
        }
        for c in &self.centers {
            writeln!(s, "hex {} {}", c.a, c.b).unwrap();
        }
        s
    }

    pub fn parse(text: &str) -> Result<Domain, DomainError> {
        let mut lines = numbered_lines(text);
        expect_header(&mut lines, "domain v1")?;
        let (tris, centers) = parse_domain_body(lines)?;
        let region = Region::new(tris)?;
        Domain::new(region, centers)
    }
}

/// Class of the edge of ring triangle `i` opposite the ring's center.
pub(crate) fn outer_class(i: usize) -> Dir {
    let a = SPOKE_CLASS[i].index();
    let b = SPOKE_CLASS[(i + 1) % 6].index();
    Dir::from_index(3 - a - b).unwrap()
}

pub(crate) fn naive_energy(region: &Region, partner: &[Dir]) -> u32 {
    region
        .edges
        .iter()
        .filter(|e| {
            e.is_interior() && {
                let p = partner[e.tris[0] as usize];
                p != e.dir && p == partner[e.tris[1] as usize]
            }
        })
        .count() as u32
}

pub(crate) fn numbered_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines().enumerate().filter_map(|(i, l)| {
        let l = l.split('#').next().unwrap_or("").trim();
        (!l.is_empty()).then_some((i + 1, l))
    })
}

pub(crate) fn expect_header<'a>(
    lines: &mut impl Iterator<Item = (usize, &'a str)>,
    header: &str,
) -> Result<(), DomainError> {
    match lines.next() {
        Some((_, l)) if l.split_whitespace().collect::<Vec<_>>().join(" ") == header => Ok(()),
        Some((n, l)) => Err(DomainError::MalformedLine {
            line: n,
            msg: format!("expected `{header}`, got `{l}`"),
        }),
        None => Err(DomainError::MalformedLine {
            line: 0,
            msg: format!("missing `{header}` header"),
        }),
    }
}

pub(crate) fn parse_domain_body<'a>(
    lines: impl Iterator<Item = (usize, &'a str)>,
) -> Result<(Vec<Triangle>, Vec<Vertex>), DomainError> {
    let mut tris = Vec::new();
    let mut centers = Vec::new();
    let mut seen_hex = false;
    for (n, l) in lines {
        let bad = |msg: &str| DomainError::MalformedLine {
            line: n,
            msg: format!("{msg}: `{l}`"),
        };
        let f: Vec<&str> = l.split_whitespace().collect();
        if f[0] == "hex" {
            if f.len() != 3 {
                return Err(bad("expected `hex a b`"));
            }
            let a = f[1].parse().map_err(|_| bad("bad integer"))?;
            let b = f[2].parse().map_err(|_| bad("bad integer"))?;
            centers.push(Vertex::new(a, b));
            seen_hex = true;
        } else {
            if seen_hex {
                return Err(bad("triangle after hexagon list"));
            }
            if f.len() != 3 {
                return Err(bad("expected `a b U|D`"));
            }
            let a = f[0].parse().map_err(|_| bad("bad integer"))?;
            let b = f[1].parse().map_err(|_| bad("bad integer"))?;
            let kind = match f[2] {
                "U" => TriKind::Up,
                "D" => TriKind::Down,
                _ => return Err(bad("kind must be U or D")),
            };
            tris.push(Triangle { a, b, kind });
        }
    }
    Ok((tris, centers))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LineFamily {
    pub family: usize,
    pub direction: (i32, i32),
    pub lines: Vec<Vec<Vertex>>,
}

/// Center of the unit hexagon at axial position `(i, j)` of the hexagon sublattice.
pub fn hex_center(i: i32, j: i32) -> Vertex {
    Vertex::new(i - j, i + 2 * j)
}

/// Hexagon-shaped union of unit hexagons with `k` hexagons along each side
/// (`3k² − 3k + 1` hexagons).
pub fn make_hexagon_domain(k: u32) -> Domain {
    assert!(k >= 1, "side must be positive");
    let r = k as i32 - 1;
    let mut centers = Vec::new();
    for i in -r..=r {
        for j in -r..=r {
            if (i + j).abs() <= r {
                centers.push(hex_center(i, j));
            }
        }
    }
    Domain::from_centers(&centers).expect("hexagon domain is valid")
}

/// Rhombus of `k × k` unit hexagons (`6k²` triangles).
pub fn make_rhombus_domain(k: u32) -> Domain {
    assert!(k >= 1, "side must be positive");
    let k = k as i32;
    let centers: Vec<Vertex> = (0..k)
        .flat_map(|i| (0..k).map(move |j| hex_center(i, j)))
        .collect();
    Domain::from_centers(&centers).expect("rhombus domain is valid")
}

/// Domain families selectable by name.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum Shape {
    Hexagon,
    Rhombus,
}

impl Shape {
    pub fn build(self, k: u32) -> Domain {
        match self {
            Shape::Hexagon => make_hexagon_domain(k),
            Shape::Rhombus => make_rhombus_domain(k),
        }
    }

    /// Hexagon count, for sizing before construction.
    pub fn hexagons(self, k: u32) -> u64 {
        let k = k as u64;
        match self {
            Shape::Hexagon => 3 * k * k - 3 * k + 1,
            Shape::Rhombus => k * k,
        }
    }
}

impl std::str::FromStr for Shape {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "hexagon" => Ok(Shape::Hexagon),
            "rhombus" => Ok(Shape::Rhombus),
            _ => Err(format!("unknown shape `{s}` (hexagon|rhombus)")),
        }
    }
}

/// Vertices of the region reachable by one spoke from `v`.
pub(crate) fn spoke_neighbors(region: &Region, v: usize) -> impl Iterator<Item = usize> + '_ {
    region.spokes[v]
        .iter()
        .filter(|&&w| w != NONE)
        .map(|&w| w as usize)
}
