//! Combinatorics of the hexagonal triangulation.
//!
//! A vertex `(m, n)` stands for the point `m + nω` with `ω = e^{2πi/3}`. Every
//! vertex has six neighbors, listed counter-clockwise starting from `+1`.

use std::collections::{HashMap, HashSet, VecDeque};
use std::fmt;
use std::ops::{Add, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A vertex `m + nω` of the hexagonal lattice.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct LatticeVertex {
    pub m: i64,
    pub n: i64,
}

/// Unit displacements `1, 1+ω, ω, -1, -1-ω, -ω` in counter-clockwise order.
pub const DIRECTIONS: [LatticeVertex; 6] = [
    LatticeVertex::new(1, 0),
    LatticeVertex::new(1, 1),
    LatticeVertex::new(0, 1),
    LatticeVertex::new(-1, 0),
    LatticeVertex::new(-1, -1),
    LatticeVertex::new(0, -1),
];

impl LatticeVertex {
    pub const ORIGIN: LatticeVertex = LatticeVertex::new(0, 0);

    pub const fn new(m: i64, n: i64) -> Self {
        LatticeVertex { m, n }
    }

    /// Position of the vertex in the regular unit-length embedding.
    pub fn to_plane(self) -> (f64, f64) {
        let (m, n) = (self.m as f64, self.n as f64);
        (m - 0.5 * n, 0.5 * 3f64.sqrt() * n)
    }

    /// Index of `self` in [`DIRECTIONS`], if it is a unit displacement.
    pub fn direction_index(self) -> Option<usize> {
        DIRECTIONS.iter().position(|&d| d == self)
    }

    pub fn is_unit(self) -> bool {
        self.direction_index().is_some()
    }
}

impl fmt::Display for LatticeVertex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.m, self.n)
    }
}

impl Add for LatticeVertex {
    type Output = LatticeVertex;
    fn add(self, rhs: Self) -> Self {
        LatticeVertex::new(self.m + rhs.m, self.n + rhs.n)
    }
}

impl Sub for LatticeVertex {
    type Output = LatticeVertex;
    fn sub(self, rhs: Self) -> Self {
        LatticeVertex::new(self.m - rhs.m, self.n - rhs.n)
    }
}

impl Neg for LatticeVertex {
    type Output = LatticeVertex;
    fn neg(self) -> Self {
        LatticeVertex::new(-self.m, -self.n)
    }
}

/// The six neighbors of `v`, counter-clockwise.
pub fn neighbors(v: LatticeVertex) -> [LatticeVertex; 6] {
    DIRECTIONS.map(|d| v + d)
}

pub fn are_adjacent(u: LatticeVertex, v: LatticeVertex) -> bool {
    (v - u).is_unit()
}

/// Length of the shortest edge path between `u` and `v`.
pub fn graph_distance(u: LatticeVertex, v: LatticeVertex) -> u64 {
    let d = v - u;
    let (a, b) = (d.m.unsigned_abs(), d.n.unsigned_abs());
    if (d.m < 0 && d.n > 0) || (d.m > 0 && d.n < 0) {
        a + b
    } else {
        a.max(b)
    }
}

/// Orientation class of a lattice triangle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FaceKind {
    /// `{p, p+1, p+1+ω}`
    Up,
    /// `{p, p+1+ω, p+ω}`
    Down,
}

/// A triangle of the lattice, identified by its kind and anchor vertex.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Face {
    pub kind: FaceKind,
    pub anchor: LatticeVertex,
}

impl Face {
    pub const fn up(anchor: LatticeVertex) -> Self {
        Face { kind: FaceKind::Up, anchor }
    }

    pub const fn down(anchor: LatticeVertex) -> Self {
        Face { kind: FaceKind::Down, anchor }
    }

    /// Vertices in counter-clockwise order, starting at the anchor.
    pub fn vertices(&self) -> [LatticeVertex; 3] {
        let p = self.anchor;
        match self.kind {
            FaceKind::Up => [p, p + DIRECTIONS[0], p + DIRECTIONS[1]],
            FaceKind::Down => [p, p + DIRECTIONS[1], p + DIRECTIONS[2]],
        }
    }

    pub fn contains(&self, v: LatticeVertex) -> bool {
        self.vertices().contains(&v)
    }

    pub fn shares_vertex(&self, other: &Face) -> bool {
        self.vertices().iter().any(|&v| other.contains(v))
    }

    /// The face lying to the left of the directed edge `a -> b`.
    ///
    /// Returns `None` when `a` and `b` are not adjacent.
    pub fn left_of(a: LatticeVertex, b: LatticeVertex) -> Option<Face> {
        let d = (b - a).direction_index()?;
        let c = a + DIRECTIONS[(d + 1) % 6];
        Some(Face::from_triangle(a, b, c))
    }

    // Anchor is the componentwise minimum; Up faces have two vertices on the bottom row.
    fn from_triangle(a: LatticeVertex, b: LatticeVertex, c: LatticeVertex) -> Face {
        let anchor = LatticeVertex::new(a.m.min(b.m).min(c.m), a.n.min(b.n).min(c.n));
        let bottom = [a, b, c].iter().filter(|v| v.n == anchor.n).count();
        if bottom == 2 {
            Face::up(anchor)
        } else {
            Face::down(anchor)
        }
    }

    /// The three directed edges of the face, counter-clockwise.
    pub fn edges(&self) -> [(LatticeVertex, LatticeVertex); 3] {
        let [a, b, c] = self.vertices();
        [(a, b), (b, c), (c, a)]
    }

    /// Vertices rotated so that `v` comes first, preserving orientation.
    pub fn vertices_from(&self, v: LatticeVertex) -> Option<[LatticeVertex; 3]> {
        let vs = self.vertices();
        let k = vs.iter().position(|&x| x == v)?;
        Some([vs[k], vs[(k + 1) % 3], vs[(k + 2) % 3]])
    }
}

impl fmt::Display for Face {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = match self.kind {
            FaceKind::Up => "up",
            FaceKind::Down => "down",
        };
        write!(f, "{kind}{}", self.anchor)
    }
}

/// The six faces around `v`; face `j` is `(v, v_j, v_{j+1})` in neighbor order.
pub fn star(v: LatticeVertex) -> [Face; 6] {
    let nb = neighbors(v);
    std::array::from_fn(|j| Face::from_triangle(v, nb[j], nb[(j + 1) % 6]))
}

/// Closed graph ball `{j : d(center, j) <= radius}`.
#[derive(Debug, Clone)]
pub struct Ball {
    center: LatticeVertex,
    radius: u32,
    vertices: Vec<LatticeVertex>,
    index: HashMap<LatticeVertex, usize>,
}

impl Ball {
    pub fn new(center: LatticeVertex, radius: u32) -> Self {
        let r = radius as i64;
        let mut vertices = Vec::with_capacity(ball_size(radius));
        for n in -r..=r {
            for m in -r..=r {
                let v = center + LatticeVertex::new(m, n);
                if graph_distance(center, v) <= radius as u64 {
                    vertices.push(v);
                }
            }
        }
        vertices.sort();
        let index = vertices.iter().enumerate().map(|(k, &v)| (v, k)).collect();
        Ball { center, radius, vertices, index }
    }

    pub fn center(&self) -> LatticeVertex {
        self.center
    }

    pub fn radius(&self) -> u32 {
        self.radius
    }

    /// All vertices, sorted by `(m, n)`.
    pub fn vertices(&self) -> &[LatticeVertex] {
        &self.vertices
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn contains(&self, v: LatticeVertex) -> bool {
        self.index.contains_key(&v)
    }

    pub fn index_of(&self, v: LatticeVertex) -> Option<usize> {
        self.index.get(&v).copied()
    }

    pub fn distance_from_center(&self, v: LatticeVertex) -> u64 {
        graph_distance(self.center, v)
    }

    /// Vertices at distance `<= radius - 1`; empty for radius 0.
    pub fn is_interior(&self, v: LatticeVertex) -> bool {
        self.radius > 0 && graph_distance(self.center, v) < self.radius as u64
    }

    pub fn interior(&self) -> impl Iterator<Item = LatticeVertex> + '_ {
        self.vertices.iter().copied().filter(|&v| self.is_interior(v))
    }

    pub fn boundary(&self) -> impl Iterator<Item = LatticeVertex> + '_ {
        self.vertices.iter().copied().filter(|&v| !self.is_interior(v))
    }

    /// Whether every vertex of `other` lies in `self`.
    pub fn contains_ball(&self, center: LatticeVertex, radius: u32) -> bool {
        graph_distance(self.center, center) + radius as u64 <= self.radius as u64
    }

    /// All faces with their three vertices in the ball, each listed once, sorted.
    pub fn faces(&self) -> Vec<Face> {
        let mut out = Vec::new();
        for &v in &self.vertices {
            for f in [Face::up(v), Face::down(v)] {
                if f.vertices().iter().all(|&x| self.contains(x)) {
                    out.push(f);
                }
            }
        }
        out.sort();
        out
    }
}

/// Builds `B(center, radius)`; a negative radius is rejected.
pub fn ball(center: LatticeVertex, radius: i64) -> Result<Ball> {
    if radius < 0 {
        return Err(Error::InvalidArgument(format!("negative ball radius {radius}")));
    }
    let radius = u32::try_from(radius)
        .map_err(|_| Error::InvalidArgument(format!("ball radius {radius} too large")))?;
    Ok(Ball::new(center, radius))
}

pub fn faces_in_ball(b: &Ball) -> Vec<Face> {
    b.faces()
}

/// `1 + 3R(R+1)`
pub fn ball_size(radius: u32) -> usize {
    let r = radius as usize;
    1 + 3 * r * (r + 1)
}

/// Breadth-first distances from `source`, truncated at `max_depth`.
pub fn bfs_distances(source: LatticeVertex, max_depth: u64) -> HashMap<LatticeVertex, u64> {
    let mut dist = HashMap::new();
    let mut queue = VecDeque::new();
    dist.insert(source, 0);
    queue.push_back(source);
    while let Some(v) = queue.pop_front() {
        let d = dist[&v];
        if d == max_depth {
            continue;
        }
        for u in neighbors(v) {
            if let std::collections::hash_map::Entry::Vacant(e) = dist.entry(u) {
                e.insert(d + 1);
                queue.push_back(u);
            }
        }
    }
    dist
}

/// Set of vertices in `faces`.
pub fn face_vertices(faces: &[Face]) -> HashSet<LatticeVertex> {
    faces.iter().flat_map(|f| f.vertices()).collect()
}
