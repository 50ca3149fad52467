//! Iso-level polylines of a rectangular table (marching squares).
//!
//! Crossings are linearly interpolated along cell edges. Saddle cells are
//! resolved with the mean of the four corners. Segments are chained through
//! shared edge crossings, so open polylines end on the table border.

use std::collections::BTreeMap;

/// A chain of `(x, y)` vertices; `closed` when last joins first.
#[derive(Clone, Debug, PartialEq)]
pub struct Polyline {
    pub points: Vec<(f64, f64)>,
    pub closed: bool,
}

/// All polylines of one level.
#[derive(Clone, Debug, PartialEq)]
pub struct ContourSet {
    pub level: f64,
    pub polylines: Vec<Polyline>,
}

/// Identifies a crossing: horizontal edge `(i, j)-(i+1, j)` or vertical
/// edge `(i, j)-(i, j+1)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
enum Edge {
    H(usize, usize),
    V(usize, usize),
}

/// Extracts contours of `table[i][j]` sampled at `(xs[i], ys[j])`.
///
/// NaN cells are skipped. Output is deterministic: polylines are ordered by
/// the first edge crossing they contain in `(i, j)` order.
pub fn extract_contours(xs: &[f64], ys: &[f64], table: &[Vec<f64>], levels: &[f64]) -> Vec<ContourSet> {
    levels
        .iter()
        .map(|&level| ContourSet {
            level,
            polylines: contour_level(xs, ys, table, level),
        })
        .collect()
}

fn contour_level(xs: &[f64], ys: &[f64], z: &[Vec<f64>], level: f64) -> Vec<Polyline> {
    let nx = xs.len();
    let ny = ys.len();
    if nx < 2 || ny < 2 {
        return Vec::new();
    }
    let above = |i: usize, j: usize| z[i][j] >= level;
    let point = |e: Edge| -> (f64, f64) {
        match e {
            Edge::H(i, j) => {
                let f = (level - z[i][j]) / (z[i + 1][j] - z[i][j]);
                (xs[i] + f * (xs[i + 1] - xs[i]), ys[j])
            }
            Edge::V(i, j) => {
                let f = (level - z[i][j]) / (z[i][j + 1] - z[i][j]);
                (xs[i], ys[j] + f * (ys[j + 1] - ys[j]))
            }
        }
    };

    let mut segments: Vec<(Edge, Edge)> = Vec::new();
    for i in 0..nx - 1 {
        for j in 0..ny - 1 {
            let corners = [z[i][j], z[i + 1][j], z[i + 1][j + 1], z[i][j + 1]];
            if corners.iter().any(|v| v.is_nan()) {
                continue;
            }
            // corner order: (i,j) (i+1,j) (i+1,j+1) (i,j+1)
            let case = (above(i, j) as u8)
                | (above(i + 1, j) as u8) << 1
                | (above(i + 1, j + 1) as u8) << 2
                | (above(i, j + 1) as u8) << 3;
            let bottom = Edge::H(i, j);
            let right = Edge::V(i + 1, j);
            let top = Edge::H(i, j + 1);
            let left = Edge::V(i, j);
            let centre_above = corners.iter().sum::<f64>() / 4.0 >= level;
            match case {
                0 | 15 => {}
                1 | 14 => segments.push((left, bottom)),
                2 | 13 => segments.push((bottom, right)),
                3 | 12 => segments.push((left, right)),
                4 | 11 => segments.push((right, top)),
                6 | 9 => segments.push((bottom, top)),
                7 | 8 => segments.push((left, top)),
                5 => {
                    if centre_above {
                        segments.push((left, top));
                        segments.push((bottom, right));
                    } else {
                        segments.push((left, bottom));
                        segments.push((right, top));
                    }
                }
                10 => {
                    if centre_above {
                        segments.push((left, bottom));
                        segments.push((right, top));
                    } else {
                        segments.push((left, top));
                        segments.push((bottom, right));
                    }
                }
                _ => unreachable!(),
            }
        }
    }

    // adjacency: each crossing edge touches at most two segments
    let mut adjacency: BTreeMap<Edge, Vec<usize>> = BTreeMap::new();
    for (k, (a, b)) in segments.iter().enumerate() {
        adjacency.entry(*a).or_default().push(k);
        adjacency.entry(*b).or_default().push(k);
    }
    let mut used = vec![false; segments.len()];
    let mut polylines = Vec::new();

    let walk = |start_edge: Edge, start_seg: usize, used: &mut Vec<bool>| -> Vec<Edge> {
        let mut chain = vec![start_edge];
        let mut seg = start_seg;
        let mut at = start_edge;
        loop {
            used[seg] = true;
            let (a, b) = segments[seg];
            let next = if a == at { b } else { a };
            chain.push(next);
            at = next;
            match adjacency[&at].iter().find(|&&s| !used[s]) {
                Some(&s) => seg = s,
                None => break,
            }
        }
        chain
    };

    // open chains start at border crossings (edges with a single segment)
    for (edge, segs) in &adjacency {
        if segs.len() == 1 && !used[segs[0]] {
            let chain = walk(*edge, segs[0], &mut used);
            polylines.push(Polyline {
                points: chain.into_iter().map(point).collect(),
                closed: false,
            });
        }
    }
    for (edge, segs) in &adjacency {
        if let Some(&s) = segs.iter().find(|&&s| !used[s]) {
            let mut chain = walk(*edge, s, &mut used);
            if chain.len() > 1 && chain.first() == chain.last() {
                chain.pop();
            }
            polylines.push(Polyline {
                points: chain.into_iter().map(point).collect(),
                closed: true,
            });
        }
    }
    polylines
}

/// Even-odd point-in-polygon test against a closed polyline.
pub fn point_in_polygon(p: (f64, f64), poly: &[(f64, f64)]) -> bool {
    let mut inside = false;
    let n = poly.len();
    for k in 0..n {
        let (xi, yi) = poly[k];
        let (xj, yj) = poly[(k + n - 1) % n];
        if (yi > p.1) != (yj > p.1) && p.0 < (xj - xi) * (p.1 - yi) / (yj - yi) + xi {
            inside = !inside;
        }
    }
    inside
}
