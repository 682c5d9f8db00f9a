//! Marching squares over cell centers.
//!
//! The grid is surrounded by a ring of virtual nodes that are always outside
//! the level set, so every level curve is closed. Where a curve would leave
//! the grid, its crossings with the virtual ring are pinned to the real
//! boundary node, which closes the loop along the grid edge.
//!
//! Segments are oriented with the superlevel set on their left, so finished
//! loops run counter-clockwise around density maxima.

use crate::grid::{ContourLoop, DensityGrid, Point};

const NONE: usize = usize::MAX;

struct Padded<'a> {
    grid: &'a DensityGrid,
    level: f64,
    /// Padded node counts along hs and v.
    ni: usize,
    nj: usize,
}

impl Padded<'_> {
    /// Real value of padded node `(i, j)`, if it maps into the grid.
    fn value(&self, i: usize, j: usize) -> Option<f64> {
        let (nh, nv) = (self.grid.hs_axis().count(), self.grid.v_axis().count());
        if i == 0 || j == 0 || i > nh || j > nv {
            None
        } else {
            Some(self.grid.get(i - 1, j - 1))
        }
    }

    fn inside(&self, i: usize, j: usize) -> bool {
        self.value(i, j).is_some_and(|f| f >= self.level)
    }

    fn position(&self, i: usize, j: usize) -> Point {
        Point::new(
            self.grid.hs_axis().coord(i - 1),
            self.grid.v_axis().coord(j - 1),
        )
    }

    /// Edge ids: `2 * node + 0` runs from node `(i, j)` to `(i + 1, j)`,
    /// `2 * node + 1` from `(i, j)` to `(i, j + 1)`.
    fn edge_id(&self, i: usize, j: usize, vertical: bool) -> usize {
        2 * (i * self.nj + j) + vertical as usize
    }

    fn edge_nodes(&self, edge: usize) -> ((usize, usize), (usize, usize)) {
        let node = edge / 2;
        let (i, j) = (node / self.nj, node % self.nj);
        if edge.is_multiple_of(2) {
            ((i, j), (i + 1, j))
        } else {
            ((i, j), (i, j + 1))
        }
    }

    /// Crossing point on an edge, and whether it is pinned to the boundary.
    fn crossing(&self, edge: usize) -> (Point, bool) {
        let ((ia, ja), (ib, jb)) = self.edge_nodes(edge);
        match (self.value(ia, ja), self.value(ib, jb)) {
            (Some(fa), Some(fb)) => {
                let t = (self.level - fa) / (fb - fa);
                let (pa, pb) = (self.position(ia, ja), self.position(ib, jb));
                (
                    Point::new(pa.hs + t * (pb.hs - pa.hs), pa.v + t * (pb.v - pa.v)),
                    false,
                )
            }
            (Some(_), None) => (self.position(ia, ja), true),
            (None, Some(_)) => (self.position(ib, jb), true),
            (None, None) => unreachable!("edge between virtual nodes cannot cross the level"),
        }
    }
}

/// All closed loops of the level set `{f = level}`.
///
/// Returns an empty list when `level` exceeds every grid value or is not a
/// positive finite number.
pub fn extract_isolines(grid: &DensityGrid, level: f64) -> Vec<ContourLoop> {
    if !(level.is_finite() && level > 0.0) || level > grid.max_value() {
        return Vec::new();
    }
    let padded = Padded {
        grid,
        level,
        ni: grid.hs_axis().count() + 2,
        nj: grid.v_axis().count() + 2,
    };
    let mut next = vec![NONE; 2 * padded.ni * padded.nj];

    for i in 0..padded.ni - 1 {
        for j in 0..padded.nj - 1 {
            let corners = [(i, j), (i + 1, j), (i + 1, j + 1), (i, j + 1)];
            let inside = corners.map(|(a, b)| padded.inside(a, b));
            if inside.iter().all(|&x| x) || inside.iter().all(|&x| !x) {
                continue;
            }
            let edges = [
                padded.edge_id(i, j, false),
                padded.edge_id(i + 1, j, true),
                padded.edge_id(i, j + 1, false),
                padded.edge_id(i, j, true),
            ];
            // Crossings in counter-clockwise order; `true` marks an exit
            // (inside to outside along the traversal).
            let crossings: Vec<(usize, bool)> = (0..4)
                .filter(|&k| inside[k] != inside[(k + 1) % 4])
                .map(|k| (edges[k], inside[k]))
                .collect();
            if crossings.len() == 2 {
                let (exit, enter) = if crossings[0].1 {
                    (crossings[0].0, crossings[1].0)
                } else {
                    (crossings[1].0, crossings[0].0)
                };
                next[exit] = enter;
            } else {
                // Saddle: the center value decides whether the two inside
                // corners connect through the cell.
                let center = corners
                    .iter()
                    .map(|&(a, b)| padded.value(a, b).unwrap_or(0.0))
                    .sum::<f64>()
                    / 4.0;
                let connected = center >= level;
                for k in 0..4 {
                    let (edge, exit) = crossings[k];
                    if exit {
                        let partner = if connected { (k + 1) % 4 } else { (k + 3) % 4 };
                        next[edge] = crossings[partner].0;
                    }
                }
            }
        }
    }

    let mut loops = Vec::new();
    let mut visited = vec![false; next.len()];
    for start in 0..next.len() {
        if next[start] == NONE || visited[start] {
            continue;
        }
        let mut points = Vec::new();
        let mut on_boundary = false;
        let mut edge = start;
        while !visited[edge] {
            visited[edge] = true;
            let (p, pinned) = padded.crossing(edge);
            on_boundary |= pinned;
            if points.last() != Some(&p) {
                points.push(p);
            }
            edge = next[edge];
            debug_assert_ne!(edge, NONE, "open level curve");
        }
        while points.len() > 1 && points.first() == points.last() {
            points.pop();
        }
        if let Ok(l) = ContourLoop::new(points, on_boundary) {
            loops.push(l);
        }
    }
    loops
}
