//! Marching squares on a rectilinear grid.

use std::collections::HashMap;

/// A level curve as points `(x, y)`, oriented so that x does not decrease
/// from the first to the last point.
pub type Polyline = Vec<(f64, f64)>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
enum Edge {
    /// Between `(i, j)` and `(i + 1, j)`.
    H(usize, usize),
    /// Between `(i, j)` and `(i, j + 1)`.
    V(usize, usize),
}

/// Level curves of `values[i][j]` (at `(xs[i], ys[j])`) at `level`, with
/// corners at or above the level counted as inside. Crossings are linearly
/// interpolated along cell edges; saddle cells are resolved by the average of
/// their four corners.
pub fn extract_level(xs: &[f64], ys: &[f64], values: &[Vec<f64>], level: f64) -> Vec<Polyline> {
    let (nx, ny) = (xs.len(), ys.len());
    if nx < 2 || ny < 2 {
        return Vec::new();
    }
    let v = |i: usize, j: usize| values[i][j];
    let inside = |i: usize, j: usize| v(i, j) >= level;
    let point = |e: Edge| -> (f64, f64) {
        let ((i0, j0), (i1, j1)) = match e {
            Edge::H(i, j) => ((i, j), (i + 1, j)),
            Edge::V(i, j) => ((i, j), (i, j + 1)),
        };
        let (va, vb) = (v(i0, j0), v(i1, j1));
        let t = if vb == va { 0.5 } else { ((level - va) / (vb - va)).clamp(0.0, 1.0) };
        (xs[i0] + t * (xs[i1] - xs[i0]), ys[j0] + t * (ys[j1] - ys[j0]))
    };

    let mut segments: Vec<(Edge, Edge)> = Vec::new();
    for i in 0..nx - 1 {
        for j in 0..ny - 1 {
            let corners = [inside(i, j), inside(i + 1, j), inside(i + 1, j + 1), inside(i, j + 1)];
            let case = corners.iter().enumerate().fold(0u8, |acc, (k, &c)| acc | ((c as u8) << k));
            let bottom = Edge::H(i, j);
            let right = Edge::V(i + 1, j);
            let top = Edge::H(i, j + 1);
            let left = Edge::V(i, j);
            match case {
                0 | 15 => {}
                5 | 10 => {
                    let centre = 0.25 * (v(i, j) + v(i + 1, j) + v(i + 1, j + 1) + v(i, j + 1)) >= level;
                    // Corners 0 and 2 are cut off when they disagree with the centre.
                    let cut_02 = (case == 5) != centre;
                    if cut_02 {
                        segments.push((bottom, left));
                        segments.push((right, top));
                    } else {
                        segments.push((bottom, right));
                        segments.push((left, top));
                    }
                }
                _ => {
                    let edges = [bottom, right, top, left];
                    let crossed: Vec<Edge> = (0..4).filter(|&k| corners[k] != corners[(k + 1) % 4]).map(|k| edges[k]).collect();
                    segments.push((crossed[0], crossed[1]));
                }
            }
        }
    }
    stitch(&segments).into_iter().map(|chain| orient(chain.into_iter().map(point).collect())).collect()
}

fn stitch(segments: &[(Edge, Edge)]) -> Vec<Vec<Edge>> {
    let mut at: HashMap<Edge, Vec<usize>> = HashMap::new();
    for (k, &(a, b)) in segments.iter().enumerate() {
        at.entry(a).or_default().push(k);
        at.entry(b).or_default().push(k);
    }
    let mut used = vec![false; segments.len()];
    let mut chains = Vec::new();
    let walk = |start: usize, from: Edge, used: &mut Vec<bool>| -> Vec<Edge> {
        let mut chain = vec![from];
        let mut seg = start;
        let mut cur = from;
        loop {
            used[seg] = true;
            let (a, b) = segments[seg];
            let next = if a == cur { b } else { a };
            chain.push(next);
            cur = next;
            match at[&cur].iter().find(|&&s| !used[s]) {
                Some(&s) => seg = s,
                None => break,
            }
        }
        chain
    };
    // Open curves start at edges touched by a single segment.
    for k in 0..segments.len() {
        if used[k] {
            continue;
        }
        let (a, b) = segments[k];
        if at[&a].len() == 1 {
            chains.push(walk(k, a, &mut used));
        } else if at[&b].len() == 1 {
            chains.push(walk(k, b, &mut used));
        }
    }
    for k in 0..segments.len() {
        if !used[k] {
            chains.push(walk(k, segments[k].0, &mut used));
        }
    }
    chains
}

fn orient(mut line: Polyline) -> Polyline {
    if let (Some(first), Some(last)) = (line.first(), line.last()) {
        if first.0 > last.0 {
            line.reverse();
        }
    }
    line
}

/// Intersection points of two polylines.
pub fn intersections(a: &Polyline, b: &Polyline) -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    for s in a.windows(2) {
        for t in b.windows(2) {
            if let Some(p) = segment_intersection(s[0], s[1], t[0], t[1]) {
                out.push(p);
            }
        }
    }
    out
}

fn segment_intersection(p: (f64, f64), p2: (f64, f64), q: (f64, f64), q2: (f64, f64)) -> Option<(f64, f64)> {
    let r = (p2.0 - p.0, p2.1 - p.1);
    let s = (q2.0 - q.0, q2.1 - q.1);
    let cross = |a: (f64, f64), b: (f64, f64)| a.0 * b.1 - a.1 * b.0;
    let denom = cross(r, s);
    let qp = (q.0 - p.0, q.1 - p.1);
    if denom == 0.0 {
        // Collinear overlap: report the first shared endpoint, if any.
        if cross(qp, r) != 0.0 {
            return None;
        }
        return [q, q2, p, p2].into_iter().find(|&x| on_segment(x, p, p2) && on_segment(x, q, q2));
    }
    let t = cross(qp, s) / denom;
    let u = cross(qp, r) / denom;
    let tol = 1e-12;
    if (-tol..=1.0 + tol).contains(&t) && (-tol..=1.0 + tol).contains(&u) {
        Some((p.0 + t * r.0, p.1 + t * r.1))
    } else {
        None
    }
}

fn on_segment(x: (f64, f64), a: (f64, f64), b: (f64, f64)) -> bool {
    x.0 >= a.0.min(b.0) && x.0 <= a.0.max(b.0) && x.1 >= a.1.min(b.1) && x.1 <= a.1.max(b.1)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(f: impl Fn(f64, f64) -> f64, xs: &[f64], ys: &[f64]) -> Vec<Vec<f64>> {
        xs.iter().map(|&x| ys.iter().map(|&y| f(x, y)).collect()).collect()
    }

    fn lin(lo: f64, hi: f64, k: usize) -> Vec<f64> {
        (0..k).map(|i| lo + (hi - lo) * i as f64 / (k - 1) as f64).collect()
    }

    #[test]
    fn straight_line_is_exact() {
        let xs = lin(0.0, 10.0, 11);
        let ys = lin(0.0, 1.0, 21);
        let vals = grid(|x, y| x - 10.0 * y, &xs, &ys);
        let lines = extract_level(&xs, &ys, &vals, 2.5);
        assert_eq!(lines.len(), 1);
        for &(x, y) in &lines[0] {
            assert!((x - 10.0 * y - 2.5).abs() < 1e-12, "({x}, {y})");
        }
        assert!(lines[0].windows(2).all(|w| w[0].0 <= w[1].0));
    }

    #[test]
    fn circle_closes() {
        let xs = lin(-2.0, 2.0, 81);
        let vals = grid(|x, y| x * x + y * y, &xs, &xs);
        let lines = extract_level(&xs, &xs, &vals, 1.0);
        assert_eq!(lines.len(), 1);
        let c = &lines[0];
        assert_eq!(c.first(), c.last());
        for &(x, y) in c {
            assert!(((x * x + y * y).sqrt() - 1.0).abs() < 2e-3);
        }
    }

    #[test]
    fn saddle_uses_the_centre() {
        let xs = [0.0, 1.0];
        // Corners 0 and 2 high; centre average 0.5.
        let vals = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
        let joined = extract_level(&xs, &xs, &vals, 0.4);
        let split = extract_level(&xs, &xs, &vals, 0.6);
        assert_eq!(joined.len(), 2);
        assert_eq!(split.len(), 2);
        // With the centre inside, the low corners (1 and 3) are cut off.
        let near = |l: &Polyline, c: (f64, f64)| l.iter().all(|p| (p.0 - c.0).abs() + (p.1 - c.1).abs() <= 1.0);
        assert!(joined.iter().any(|l| near(l, (1.0, 0.0))) && joined.iter().any(|l| near(l, (0.0, 1.0))));
        assert!(split.iter().any(|l| near(l, (0.0, 0.0))) && split.iter().any(|l| near(l, (1.0, 1.0))));
    }

    #[test]
    fn crossing_lines() {
        let a = vec![(0.0, 0.0), (2.0, 2.0)];
        let b = vec![(0.0, 2.0), (1.0, 1.5), (2.0, 0.0)];
        let pts = intersections(&a, &b);
        assert_eq!(pts.len(), 1);
        assert!((pts[0].0 - pts[0].1).abs() < 1e-12);
        assert!(intersections(&a, &vec![(5.0, 0.0), (6.0, 1.0)]).is_empty());
    }
}
