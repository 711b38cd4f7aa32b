//! Triangular-grid coordinates.
//!
//! Vertex `(a, b)` sits at `a·w₁ + b·w₂` where `w₁ = (1, 0)` and `w₂ = (1/2, √3/2)`.
//! The three positive unit-edge directions are `d₀ = w₁`, `d₁ = w₂ − w₁` and
//! `d₂ = −w₂`; they sum to zero. Rotating this frame by 30° clockwise maps
//! `d₀, d₁, d₂` onto the three lift directions at −30°, 90° and 210°, which is
//! the usual cube-corner picture with one axis pointing up.

use std::fmt;

/// One of the three unit-edge direction classes.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Dir {
    D0,
    D1,
    D2,
}

impl Dir {
    pub const ALL: [Dir; 3] = [Dir::D0, Dir::D1, Dir::D2];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Dir> {
        Self::ALL.get(i).copied()
    }

    /// Lattice displacement of one positive step.
    pub fn vector(self) -> (i32, i32) {
        match self {
            Dir::D0 => (1, 0),
            Dir::D1 => (-1, 1),
            Dir::D2 => (0, -1),
        }
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Vertex {
    pub a: i32,
    pub b: i32,
}

impl Vertex {
    pub const fn new(a: i32, b: i32) -> Self {
        Vertex { a, b }
    }

    pub fn offset(self, da: i32, db: i32) -> Vertex {
        Vertex::new(self.a + da, self.b + db)
    }

    pub fn step(self, d: Dir, sign: i32) -> Vertex {
        let (da, db) = d.vector();
        self.offset(sign * da, sign * db)
    }

    /// Color class `(a − b) mod 3`; heights are congruent to it up to a constant.
    pub fn class(self) -> i32 {
        (self.a - self.b).rem_euclid(3)
    }

    pub fn position(self) -> (f64, f64) {
        let a = self.a as f64;
        let b = self.b as f64;
        (a + 0.5 * b, b * 3f64.sqrt() / 2.0)
    }

    /// Neighbor along spoke `j` (counterclockwise from `w₁`, 60° apart).
    pub fn spoke(self, j: usize) -> Vertex {
        let (da, db) = SPOKES[j % 6];
        self.offset(da, db)
    }

    /// The six triangles around this vertex, counterclockwise; triangle `i` lies
    /// between spokes `i` and `i + 1`.
    pub fn ring(self) -> [Triangle; 6] {
        let (a, b) = (self.a, self.b);
        [
            Triangle::up(a, b),
            Triangle::down(a - 1, b),
            Triangle::up(a - 1, b),
            Triangle::down(a - 1, b - 1),
            Triangle::up(a, b - 1),
            Triangle::down(a, b - 1),
        ]
    }
}

impl fmt::Display for Vertex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.a, self.b)
    }
}

pub const SPOKES: [(i32, i32); 6] = [(1, 0), (0, 1), (-1, 1), (-1, 0), (0, -1), (1, -1)];

/// Direction class of spoke `j`.
pub const SPOKE_CLASS: [Dir; 6] = [Dir::D0, Dir::D2, Dir::D1, Dir::D0, Dir::D2, Dir::D1];

/// Whether spoke `j` points along the positive direction of its class.
pub const SPOKE_POSITIVE: [bool; 6] = [true, false, true, false, true, false];

/// Next-nearest-neighbor directions defining the three line families.
pub const NNN: [(i32, i32); 3] = [(1, 1), (-1, 2), (-2, 1)];

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TriKind {
    Up,
    Down,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Triangle {
    pub a: i32,
    pub b: i32,
    pub kind: TriKind,
}

impl Triangle {
    pub const fn up(a: i32, b: i32) -> Self {
        Triangle {
            a,
            b,
            kind: TriKind::Up,
        }
    }

    pub const fn down(a: i32, b: i32) -> Self {
        Triangle {
            a,
            b,
            kind: TriKind::Down,
        }
    }

    /// Vertices in counterclockwise order.
    pub fn vertices(self) -> [Vertex; 3] {
        let (a, b) = (self.a, self.b);
        match self.kind {
            TriKind::Up => [
                Vertex::new(a, b),
                Vertex::new(a + 1, b),
                Vertex::new(a, b + 1),
            ],
            TriKind::Down => [
                Vertex::new(a + 1, b),
                Vertex::new(a + 1, b + 1),
                Vertex::new(a, b + 1),
            ],
        }
    }

    /// The triangle sharing this triangle's edge of class `d`.
    pub fn neighbor(self, d: Dir) -> Triangle {
        let (a, b) = (self.a, self.b);
        match (self.kind, d) {
            (TriKind::Up, Dir::D0) => Triangle::down(a, b - 1),
            (TriKind::Up, Dir::D1) => Triangle::down(a, b),
            (TriKind::Up, Dir::D2) => Triangle::down(a - 1, b),
            (TriKind::Down, Dir::D0) => Triangle::up(a, b + 1),
            (TriKind::Down, Dir::D1) => Triangle::up(a, b),
            (TriKind::Down, Dir::D2) => Triangle::up(a + 1, b),
        }
    }

    /// This triangle's edge of class `d`.
    pub fn edge(self, d: Dir) -> Edge {
        let (a, b) = (self.a, self.b);
        let from = match (self.kind, d) {
            (TriKind::Up, Dir::D0) => Vertex::new(a, b),
            (TriKind::Up, Dir::D1) => Vertex::new(a + 1, b),
            (TriKind::Up, Dir::D2) => Vertex::new(a, b + 1),
            (TriKind::Down, Dir::D0) => Vertex::new(a, b + 1),
            (TriKind::Down, Dir::D1) => Vertex::new(a + 1, b),
            (TriKind::Down, Dir::D2) => Vertex::new(a + 1, b + 1),
        };
        Edge { from, dir: d }
    }

    pub fn centroid(self) -> (f64, f64) {
        let vs = self.vertices();
        let mut x = 0.0;
        let mut y = 0.0;
        for v in vs {
            let (px, py) = v.position();
            x += px;
            y += py;
        }
        (x / 3.0, y / 3.0)
    }
}

impl fmt::Display for Triangle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let k = match self.kind {
            TriKind::Up => 'U',
            TriKind::Down => 'D',
        };
        write!(f, "{} {} {}", self.a, self.b, k)
    }
}

/// A unit edge stored in positive orientation: `from → from + dir`.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Edge {
    pub from: Vertex,
    pub dir: Dir,
}

impl Edge {
    pub fn to(self) -> Vertex {
        self.from.step(self.dir, 1)
    }

    pub fn endpoints(self) -> (Vertex, Vertex) {
        (self.from, self.to())
    }

    /// The two triangles sharing this edge.
    pub fn triangles(self) -> [Triangle; 2] {
        let (a, b) = (self.from.a, self.from.b);
        match self.dir {
            Dir::D0 => [Triangle::up(a, b), Triangle::down(a, b - 1)],
            Dir::D1 => [Triangle::up(a - 1, b), Triangle::down(a - 1, b)],
            Dir::D2 => [Triangle::up(a, b - 1), Triangle::down(a - 1, b - 1)],
        }
    }
}
