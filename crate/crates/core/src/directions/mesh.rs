use std::collections::HashMap;
use std::f64::consts::TAU;

use serde::Serialize;

use crate::vector::Vector;

/// A partition of the unit sphere `S^{d-1}` into cells.
#[derive(Clone, Debug, PartialEq)]
pub enum SphereMesh {
    /// `S^0 = {-1, +1}`.
    Signs,
    /// `k` equal arcs of `S^1`; cell `i` covers angles `[i, i+1)·2π/k`.
    Arcs { k: usize },
    /// Voronoi cells of a subdivided icosahedron on `S^2`.
    Icosphere {
        level: u32,
        centers: Vec<[f64; 3]>,
        neighbors: Vec<Vec<usize>>,
    },
}

#[derive(Clone, Debug, Serialize)]
pub struct MeshInfo {
    pub kind: &'static str,
    pub cells: usize,
    pub dim: usize,
}

impl SphereMesh {
    /// Default mesh for dimension `d`: signs, 72 arcs, or a once-subdivided
    /// icosphere (42 cells).
    pub fn for_dim(d: usize) -> Self {
        match d {
            1 => SphereMesh::Signs,
            2 => SphereMesh::Arcs { k: 72 },
            3 => SphereMesh::icosphere(1),
            _ => panic!("no sphere mesh for dimension {d}"),
        }
    }

    pub fn arcs(k: usize) -> Self {
        assert!(k >= 2, "at least two arcs");
        SphereMesh::Arcs { k }
    }

    pub fn icosphere(level: u32) -> Self {
        let (centers, edges) = icosphere_geometry(level);
        let mut neighbors = vec![Vec::new(); centers.len()];
        for (a, b) in edges {
            neighbors[a].push(b);
            neighbors[b].push(a);
        }
        neighbors.iter_mut().for_each(|n| {
            n.sort_unstable();
            n.dedup();
        });
        SphereMesh::Icosphere {
            level,
            centers,
            neighbors,
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            SphereMesh::Signs => 1,
            SphereMesh::Arcs { .. } => 2,
            SphereMesh::Icosphere { .. } => 3,
        }
    }

    pub fn cells(&self) -> usize {
        match self {
            SphereMesh::Signs => 2,
            SphereMesh::Arcs { k } => *k,
            SphereMesh::Icosphere { centers, .. } => centers.len(),
        }
    }

    pub fn info(&self) -> MeshInfo {
        MeshInfo {
            kind: match self {
                SphereMesh::Signs => "signs",
                SphereMesh::Arcs { .. } => "arcs",
                SphereMesh::Icosphere { .. } => "icosphere",
            },
            cells: self.cells(),
            dim: self.dim(),
        }
    }

    /// Cell containing the unit vector `u`.
    #[inline]
    pub fn cell_of(&self, u: &Vector) -> usize {
        match self {
            SphereMesh::Signs => usize::from(u[0] > 0.0),
            SphereMesh::Arcs { k } => {
                let mut theta = u[1].atan2(u[0]);
                if theta < 0.0 {
                    theta += TAU;
                }
                ((theta / TAU * *k as f64) as usize).min(k - 1)
            }
            SphereMesh::Icosphere { centers, .. } => nearest(centers, [u[0], u[1], u[2]]),
        }
    }

    /// Representative unit vector of a cell.
    pub fn center(&self, cell: usize) -> Vector {
        match self {
            SphereMesh::Signs => Vector::scalar(if cell == 1 { 1.0 } else { -1.0 }),
            SphereMesh::Arcs { k } => {
                let theta = (cell as f64 + 0.5) * TAU / *k as f64;
                Vector::from_slice(&[theta.cos(), theta.sin()])
            }
            SphereMesh::Icosphere { centers, .. } => Vector::from_slice(&centers[cell]),
        }
    }

    /// Angle in radians of an arc cell center (2-D meshes only).
    pub fn center_angle(&self, cell: usize) -> Option<f64> {
        match self {
            SphereMesh::Arcs { k } => Some((cell as f64 + 0.5) * TAU / *k as f64),
            _ => None,
        }
    }

    /// Cell containing `-center(cell)`.
    pub fn antipode(&self, cell: usize) -> usize {
        match self {
            SphereMesh::Signs => 1 - cell,
            SphereMesh::Arcs { k } if k % 2 == 0 => (cell + k / 2) % k,
            _ => self.cell_of(&(-self.center(cell))),
        }
    }

    pub fn neighbors(&self, cell: usize) -> Vec<usize> {
        match self {
            SphereMesh::Signs => Vec::new(),
            SphereMesh::Arcs { k } => vec![(cell + k - 1) % k, (cell + 1) % k],
            SphereMesh::Icosphere { neighbors, .. } => neighbors[cell].clone(),
        }
    }

    /// Number of connected components of a cell set under mesh adjacency.
    pub fn components(&self, cells: &[bool]) -> usize {
        let mut seen = vec![false; cells.len()];
        let mut count = 0;
        for start in 0..cells.len() {
            if !cells[start] || seen[start] {
                continue;
            }
            count += 1;
            let mut stack = vec![start];
            seen[start] = true;
            while let Some(c) = stack.pop() {
                for n in self.neighbors(c) {
                    if cells[n] && !seen[n] {
                        seen[n] = true;
                        stack.push(n);
                    }
                }
            }
        }
        count
    }
}

fn nearest(centers: &[[f64; 3]], u: [f64; 3]) -> usize {
    let mut best = (f64::NEG_INFINITY, 0);
    for (i, c) in centers.iter().enumerate() {
        let d = c[0] * u[0] + c[1] * u[1] + c[2] * u[2];
        if d > best.0 {
            best = (d, i);
        }
    }
    best.1
}

fn normalize(v: [f64; 3]) -> [f64; 3] {
    let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
    [v[0] / n, v[1] / n, v[2] / n]
}

fn icosphere_geometry(level: u32) -> (Vec<[f64; 3]>, Vec<(usize, usize)>) {
    let t = (1.0 + 5f64.sqrt()) / 2.0;
    let mut verts: Vec<[f64; 3]> = [
        [-1.0, t, 0.0],
        [1.0, t, 0.0],
        [-1.0, -t, 0.0],
        [1.0, -t, 0.0],
        [0.0, -1.0, t],
        [0.0, 1.0, t],
        [0.0, -1.0, -t],
        [0.0, 1.0, -t],
        [t, 0.0, -1.0],
        [t, 0.0, 1.0],
        [-t, 0.0, -1.0],
        [-t, 0.0, 1.0],
    ]
    .into_iter()
    .map(normalize)
    .collect();
    let mut faces: Vec<[usize; 3]> = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];
    for _ in 0..level {
        let mut midpoints: HashMap<(usize, usize), usize> = HashMap::new();
        let mut mid = |a: usize, b: usize, verts: &mut Vec<[f64; 3]>| {
            let key = (a.min(b), a.max(b));
            *midpoints.entry(key).or_insert_with(|| {
                let (p, q) = (verts[a], verts[b]);
                verts.push(normalize([p[0] + q[0], p[1] + q[1], p[2] + q[2]]));
                verts.len() - 1
            })
        };
        let mut next = Vec::with_capacity(faces.len() * 4);
        for [a, b, c] in faces {
            let ab = mid(a, b, &mut verts);
            let bc = mid(b, c, &mut verts);
            let ca = mid(c, a, &mut verts);
            next.extend([[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]);
        }
        faces = next;
    }
    let edges = faces
        .iter()
        .flat_map(|&[a, b, c]| [(a, b), (b, c), (c, a)])
        .collect();
    (verts, edges)
}
