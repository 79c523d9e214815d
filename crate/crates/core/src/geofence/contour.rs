//! Marching-squares level set of a [`SpatialMap`].
//!
//! A node is *inside* when its value is strictly below the threshold. Each
//! grid edge joining an inside node to an outside node carries exactly one
//! contour vertex, placed by linear interpolation. Saddle cells are resolved
//! with the cell-center average.

use std::collections::HashMap;

use serde_json::{json, Value};

use super::{GeofenceError, SpatialMap};

/// Edge of the node lattice: horizontal edges join `(i, j)`–`(i+1, j)`,
/// vertical ones `(i, j)`–`(i, j+1)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
enum Edge {
    H(usize, usize),
    V(usize, usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Polyline {
    /// Vertices in scene coordinates; closed rings repeat the first vertex.
    pub points: Vec<[f64; 2]>,
    pub closed: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeofenceContour {
    pub threshold: f64,
    pub polylines: Vec<Polyline>,
    /// Per node, same layout as the map values.
    pub inside_mask: Vec<bool>,
}

impl GeofenceContour {
    pub fn inside_count(&self) -> usize {
        self.inside_mask.iter().filter(|&&b| b).count()
    }

    /// GeoJSON `FeatureCollection` of `LineString`s in scene coordinates.
    pub fn to_geojson(&self, map: &SpatialMap) -> Value {
        let features: Vec<Value> = self
            .polylines
            .iter()
            .map(|pl| {
                json!({
                    "type": "Feature",
                    "properties": { "closed": pl.closed, "level": self.threshold },
                    "geometry": { "type": "LineString", "coordinates": pl.points },
                })
            })
            .collect();
        json!({
            "type": "FeatureCollection",
            "properties": {
                "threshold": self.threshold,
                "quantity": map.quantity,
                "scene_hash": map.scene_hash,
                "inside_nodes": self.inside_count(),
            },
            "features": features,
        })
    }
}

fn vertex(map: &SpatialMap, edge: Edge, level: f64) -> [f64; 2] {
    let (a, b) = match edge {
        Edge::H(i, j) => ((i, j), (i + 1, j)),
        Edge::V(i, j) => ((i, j), (i, j + 1)),
    };
    let (va, vb) = (map.get(a.0, a.1), map.get(b.0, b.1));
    let t = ((level - va) / (vb - va)).clamp(0.0, 1.0);
    let (pa, pb) = (map.grid.point(a.0, a.1), map.grid.point(b.0, b.1));
    [pa.x + t * (pb.x - pa.x), pa.y + t * (pb.y - pa.y)]
}

/// Extracts the `threshold` level set of `map`.
pub fn extract_contour(map: &SpatialMap, threshold: f64) -> Result<GeofenceContour, GeofenceError> {
    if !(threshold > 0.0 && threshold < 1.0) {
        return Err(GeofenceError::Threshold(threshold));
    }
    let (nx, ny) = (map.grid.nx, map.grid.ny);
    let inside_mask: Vec<bool> = map.values.iter().map(|&v| v < threshold).collect();
    let inside = |i: usize, j: usize| inside_mask[j * nx + i];

    // Segments as pairs of edges.
    let mut segments: Vec<(Edge, Edge)> = Vec::new();
    for j in 0..ny.saturating_sub(1) {
        for i in 0..nx.saturating_sub(1) {
            // Corners counter-clockwise from bottom-left and the edge that
            // follows each corner.
            let corners = [
                inside(i, j),
                inside(i + 1, j),
                inside(i + 1, j + 1),
                inside(i, j + 1),
            ];
            let edges = [
                Edge::H(i, j),
                Edge::V(i + 1, j),
                Edge::H(i, j + 1),
                Edge::V(i, j),
            ];
            let crossing: Vec<usize> = (0..4)
                .filter(|&k| corners[k] != corners[(k + 1) % 4])
                .collect();
            match crossing.len() {
                0 => {}
                2 => segments.push((edges[crossing[0]], edges[crossing[1]])),
                4 => {
                    let center = 0.25
                        * (map.get(i, j)
                            + map.get(i + 1, j)
                            + map.get(i + 1, j + 1)
                            + map.get(i, j + 1));
                    let center_inside = center < threshold;
                    // Cut off each corner whose status differs from the center.
                    for k in 0..4 {
                        if corners[k] != center_inside {
                            segments.push((edges[(k + 3) % 4], edges[k]));
                        }
                    }
                }
                _ => unreachable!("a square has an even number of sign changes"),
            }
        }
    }

    // Chain segments through shared edges.
    let mut by_edge: HashMap<Edge, Vec<usize>> = HashMap::new();
    for (s, &(a, b)) in segments.iter().enumerate() {
        by_edge.entry(a).or_default().push(s);
        by_edge.entry(b).or_default().push(s);
    }
    let mut used = vec![false; segments.len()];
    let mut polylines = Vec::new();

    let walk = |start_seg: usize, start_edge: Edge, used: &mut Vec<bool>| -> (Vec<Edge>, bool) {
        let mut chain = vec![start_edge];
        let mut seg = start_seg;
        let mut at = start_edge;
        loop {
            used[seg] = true;
            let (a, b) = segments[seg];
            let next = if a == at { b } else { a };
            chain.push(next);
            if next == start_edge {
                return (chain, true);
            }
            match by_edge[&next].iter().copied().find(|&s| !used[s]) {
                Some(s) => {
                    seg = s;
                    at = next;
                }
                None => return (chain, false),
            }
        }
    };

    // Open chains start on edges used by a single segment (the map border).
    let mut ends: Vec<Edge> = by_edge
        .iter()
        .filter(|(_, v)| v.len() == 1)
        .map(|(e, _)| *e)
        .collect();
    ends.sort();
    for e in ends {
        let s = by_edge[&e][0];
        if used[s] {
            continue;
        }
        let (chain, closed) = walk(s, e, &mut used);
        polylines.push(Polyline {
            points: chain.iter().map(|&e| vertex(map, e, threshold)).collect(),
            closed,
        });
    }
    for s in 0..segments.len() {
        if used[s] {
            continue;
        }
        let (chain, closed) = walk(s, segments[s].0, &mut used);
        polylines.push(Polyline {
            points: chain.iter().map(|&e| vertex(map, e, threshold)).collect(),
            closed,
        });
    }

    Ok(GeofenceContour {
        threshold,
        polylines,
        inside_mask,
    })
}
