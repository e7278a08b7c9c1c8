//! Bowyer–Watson Delaunay triangulation in the plane.
//!
//! Insertion into a super-triangle, one point at a time; triangles whose
//! circumcircle strictly contains the new point are removed and the cavity
//! is re-triangulated. Cocircular ties are broken by insertion order.
//! Adequate for the few hundred points the connectivity metric needs.

use std::io::Write;

use crate::error::{Error, Result};

/// Planar triangulation with a per-point movable/fixed flag.
#[derive(Debug, Clone)]
pub struct Triangulation {
    pub points: Vec<[f64; 2]>,
    /// Vertex index triples, counter-clockwise.
    pub triangles: Vec<[usize; 3]>,
    pub fixed: Vec<bool>,
}

impl Triangulation {
    /// Plain-text export: one `x y fixed` line per node, then one
    /// `i j k` line per triangle.
    pub fn write_text<W: Write>(&self, w: &mut W) -> std::io::Result<()> {
        for (p, &fixed) in self.points.iter().zip(self.fixed.iter()) {
            writeln!(w, "{} {} {}", p[0], p[1], if fixed { 1 } else { 0 })?;
        }
        for t in &self.triangles {
            writeln!(w, "{} {} {}", t[0], t[1], t[2])?;
        }
        Ok(())
    }
}

fn orient2d(a: [f64; 2], b: [f64; 2], c: [f64; 2]) -> f64 {
    (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
}

/// In-circle determinant for a CCW triangle (a, b, c) and query point d.
/// Positive means d lies strictly inside the circumcircle.
pub(crate) fn in_circle(a: [f64; 2], b: [f64; 2], c: [f64; 2], d: [f64; 2]) -> f64 {
    let adx = a[0] - d[0];
    let ady = a[1] - d[1];
    let bdx = b[0] - d[0];
    let bdy = b[1] - d[1];
    let cdx = c[0] - d[0];
    let cdy = c[1] - d[1];
    let ad = adx * adx + ady * ady;
    let bd = bdx * bdx + bdy * bdy;
    let cd = cdx * cdx + cdy * cdy;
    adx * (bdy * cd - bd * cdy) - ady * (bdx * cd - bd * cdx) + ad * (bdx * cdy - bdy * cdx)
}

/// Delaunay triangulation of `points` (all flagged movable; callers set
/// `fixed` afterwards). Fails on fewer than three points or a fully
/// collinear input.
pub fn delaunay(points: &[[f64; 2]]) -> Result<Triangulation> {
    if points.len() < 3 {
        return Err(Error::DegenerateInput(format!(
            "need at least 3 points, got {}",
            points.len()
        )));
    }

    let (mut min_x, mut min_y) = (f64::INFINITY, f64::INFINITY);
    let (mut max_x, mut max_y) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
    for p in points {
        if !p[0].is_finite() || !p[1].is_finite() {
            return Err(Error::non_finite("triangulation input point"));
        }
        min_x = min_x.min(p[0]);
        min_y = min_y.min(p[1]);
        max_x = max_x.max(p[0]);
        max_y = max_y.max(p[1]);
    }
    let span = (max_x - min_x).max(max_y - min_y).max(1.0);
    let cx = 0.5 * (min_x + max_x);
    let cy = 0.5 * (min_y + max_y);

    // Vertices n..n+2 form the super-triangle; removed at the end.
    let n = points.len();
    let big = 64.0 * span;
    let mut verts: Vec<[f64; 2]> = points.to_vec();
    verts.push([cx - big, cy - big]);
    verts.push([cx + big, cy - big]);
    verts.push([cx, cy + big]);

    let mut tris: Vec<[usize; 3]> = vec![[n, n + 1, n + 2]];

    for p_idx in 0..n {
        let p = verts[p_idx];

        let mut bad: Vec<usize> = Vec::new();
        for (t_idx, t) in tris.iter().enumerate() {
            if in_circle(verts[t[0]], verts[t[1]], verts[t[2]], p) > 0.0 {
                bad.push(t_idx);
            }
        }

        // Boundary of the cavity: edges of bad triangles that appear once.
        let mut edges: Vec<(usize, usize)> = Vec::new();
        for &t_idx in &bad {
            let t = tris[t_idx];
            for e in [(t[0], t[1]), (t[1], t[2]), (t[2], t[0])] {
                if let Some(pos) = edges.iter().position(|&(a, b)| (b, a) == e) {
                    edges.swap_remove(pos);
                } else {
                    edges.push(e);
                }
            }
        }

        for &t_idx in bad.iter().rev() {
            tris.swap_remove(t_idx);
        }
        for (a, b) in edges {
            // Cavity edges run CCW around the cavity, so (a, b, p) is CCW.
            // Exact collinear ties would produce a zero-area sliver; skip it.
            if orient2d(verts[a], verts[b], p) > 0.0 {
                tris.push([a, b, p_idx]);
            }
        }
    }

    let triangles: Vec<[usize; 3]> = tris
        .into_iter()
        .filter(|t| t.iter().all(|&v| v < n))
        .collect();

    if triangles.is_empty() {
        return Err(Error::DegenerateInput(
            "points are collinear (no triangle survives)".into(),
        ));
    }

    Ok(Triangulation {
        points: points.to_vec(),
        triangles,
        fixed: vec![false; n],
    })
}
