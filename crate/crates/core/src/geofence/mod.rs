//! Spatial maps of the eavesdropper's channel and of the optimal CRA.
//!
//! Large-scale attenuation follows the 3GPP UMi model (LOS when the segment
//! from the transmitter is free of obstacles, NLOS otherwise); small-scale
//! Rayleigh fading makes the instantaneous SNR exponential, so the success
//! probability of a link is `exp(−γ_th / γ̄)`.

mod contour;
mod map;

pub use contour::{extract_contour, GeofenceContour, Polyline};
pub use map::{build_maps, GeofenceMaps, SpatialMap, MAP_MAGIC};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

/// Schema identifier expected in scene documents.
pub const SCENE_SCHEMA: &str = "cra-scene/1";

/// Success probabilities are clipped into `[P_MIN, P_MAX]`.
pub const P_MIN: f64 = 1e-4;
pub const P_MAX: f64 = 1.0 - 1e-4;

#[derive(Debug, Error)]
pub enum GeofenceError {
    #[error("point coincides with the transmitter; path loss is singular at d = 0")]
    Singular,
    #[error("invalid scene: {0}")]
    Scene(String),
    #[error("malformed scene document: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("threshold {0} must lie in (0, 1)")]
    Threshold(f64),
    #[error("{0} map cells failed to optimize")]
    Holes(usize),
    #[error("bad map file: {0}")]
    MapFormat(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(&self, other: &Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

/// Axis-aligned rectangular obstacle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub min_x: f64,
    pub min_y: f64,
    pub max_x: f64,
    pub max_y: f64,
}

impl Rect {
    /// Whether the closed segment `a–b` touches the closed rectangle
    /// (Liang–Barsky clipping).
    fn intersects_segment(&self, a: Point, b: Point) -> bool {
        let (dx, dy) = (b.x - a.x, b.y - a.y);
        let mut t0 = 0.0f64;
        let mut t1 = 1.0f64;
        for (p, q) in [
            (-dx, a.x - self.min_x),
            (dx, self.max_x - a.x),
            (-dy, a.y - self.min_y),
            (dy, self.max_y - a.y),
        ] {
            if p == 0.0 {
                if q < 0.0 {
                    return false;
                }
            } else {
                let r = q / p;
                if p < 0.0 {
                    t0 = t0.max(r);
                } else {
                    t1 = t1.min(r);
                }
                if t0 > t1 {
                    return false;
                }
            }
        }
        true
    }
}

/// Node lattice `x_min + i·resolution`, `y_min + j·resolution`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub x_min: f64,
    pub y_min: f64,
    pub resolution: f64,
    pub nx: usize,
    pub ny: usize,
}

impl GridSpec {
    pub fn point(&self, i: usize, j: usize) -> Point {
        Point::new(
            self.x_min + i as f64 * self.resolution,
            self.y_min + j as f64 * self.resolution,
        )
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

fn default_schema() -> String {
    SCENE_SCHEMA.to_string()
}
fn default_carrier() -> f64 {
    3.5
}
fn default_snr_threshold() -> f64 {
    1.0
}

/// Layout and radio parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scene {
    #[serde(default = "default_schema")]
    pub schema: String,
    pub tx: Point,
    pub bob: Point,
    #[serde(default)]
    pub obstacles: Vec<Rect>,
    pub grid: GridSpec,
    /// GHz
    #[serde(default = "default_carrier")]
    pub carrier_frequency_ghz: f64,
    /// Linear SNR threshold `γ_th`.
    #[serde(default = "default_snr_threshold")]
    pub snr_threshold: f64,
    /// Transmit power minus noise floor, dB.
    pub link_budget_db: f64,
    /// Pins Bob's success probability instead of deriving it from the scene.
    #[serde(default)]
    pub bob_success_override: Option<f64>,
}

impl Scene {
    pub fn from_json(text: &str) -> Result<Self, GeofenceError> {
        let scene: Scene = serde_json::from_str(text)?;
        scene.validate()?;
        Ok(scene)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scene serializes")
    }

    pub fn validate(&self) -> Result<(), GeofenceError> {
        let bad = |m: String| Err(GeofenceError::Scene(m));
        if self.schema != SCENE_SCHEMA {
            return bad(format!(
                "schema {:?}, expected {SCENE_SCHEMA:?}",
                self.schema
            ));
        }
        let g = &self.grid;
        if !(g.resolution > 0.0 && g.resolution.is_finite()) {
            return bad(format!("grid resolution {} must be positive", g.resolution));
        }
        if g.nx < 2 || g.ny < 2 {
            return bad(format!("grid must be at least 2x2, got {}x{}", g.nx, g.ny));
        }
        if !(g.x_min.is_finite() && g.y_min.is_finite()) {
            return bad("grid origin must be finite".into());
        }
        if !(self.carrier_frequency_ghz > 0.0 && self.carrier_frequency_ghz.is_finite()) {
            return bad(format!(
                "carrier frequency {} GHz must be positive",
                self.carrier_frequency_ghz
            ));
        }
        if !(self.snr_threshold > 0.0 && self.snr_threshold.is_finite()) {
            return bad(format!(
                "snr threshold {} must be positive",
                self.snr_threshold
            ));
        }
        if !self.link_budget_db.is_finite() {
            return bad("link budget must be finite".into());
        }
        for (k, r) in self.obstacles.iter().enumerate() {
            if !(r.min_x < r.max_x && r.min_y < r.max_y) {
                return bad(format!("obstacle {k} is degenerate"));
            }
        }
        for (name, p) in [("tx", self.tx), ("bob", self.bob)] {
            if !(p.x.is_finite() && p.y.is_finite()) {
                return bad(format!("{name} position must be finite"));
            }
        }
        if self.bob.distance(&self.tx) == 0.0 {
            return bad("bob coincides with the transmitter".into());
        }
        if let Some(p) = self.bob_success_override {
            if !(p > 0.0 && p < 1.0) {
                return bad(format!("bob_success_override {p} must lie in (0, 1)"));
            }
        }
        Ok(())
    }

    /// Whether the straight path between the transmitter and `point` is clear.
    /// The test is order-independent in its two endpoints.
    pub fn is_los(&self, point: Point) -> bool {
        !self.blocked(self.tx, point)
    }

    pub fn blocked(&self, a: Point, b: Point) -> bool {
        let (a, b) = if (a.x, a.y) <= (b.x, b.y) {
            (a, b)
        } else {
            (b, a)
        };
        self.obstacles.iter().any(|r| r.intersects_segment(a, b))
    }

    /// Link budget that puts Bob's success probability at `target`.
    pub fn calibrate_link_budget(&mut self, target: f64) -> Result<(), GeofenceError> {
        let pl = path_loss(self, self.bob)?;
        // exp(−γ_th/γ̄) = target  ⇔  γ̄ = γ_th / ln(1/target)
        let mean_snr = self.snr_threshold / (1.0 / target).ln();
        self.link_budget_db = pl + 10.0 * mean_snr.log10();
        Ok(())
    }

    /// Bob's success probability (override or propagation model).
    pub fn bob_success(&self) -> Result<f64, GeofenceError> {
        match self.bob_success_override {
            Some(p) => Ok(p),
            None => success_probability(self, self.bob),
        }
    }

    /// Hex SHA-256 of the canonical JSON form.
    pub fn digest(&self) -> String {
        hex_digest(
            serde_json::to_vec(self)
                .expect("scene serializes")
                .as_slice(),
        )
    }

    /// Urban layout used by the demo and the acceptance suite: transmitter
    /// at the origin, building blocks north and south of an east–west
    /// street, Bob on the street 150 m east, 200×200 nodes at 2 m. The link
    /// budget puts Bob at `p_s = 0.8`, which keeps every LOS node in the grid
    /// above the clipping floor.
    pub fn demo() -> Self {
        let block = |min_x, min_y, max_x, max_y| Rect {
            min_x,
            min_y,
            max_x,
            max_y,
        };
        let mut scene = Scene {
            schema: SCENE_SCHEMA.to_string(),
            tx: Point::new(0.0, 0.0),
            bob: Point::new(150.0, 0.0),
            obstacles: vec![
                block(-60.0, 16.0, 60.0, 70.0),
                block(-60.0, -70.0, 60.0, -16.0),
                block(-160.0, 90.0, -100.0, 160.0),
                block(100.0, -160.0, 160.0, -90.0),
            ],
            grid: GridSpec {
                x_min: -200.0,
                y_min: -200.0,
                resolution: 2.0,
                nx: 200,
                ny: 200,
            },
            carrier_frequency_ghz: default_carrier(),
            snr_threshold: default_snr_threshold(),
            link_budget_db: 0.0,
            bob_success_override: None,
        };
        scene
            .calibrate_link_budget(0.8)
            .expect("bob is away from the transmitter");
        scene
    }
}

pub(crate) fn hex_digest(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

/// UMi LOS path loss in dB (`d` in meters, `f_c` in GHz).
pub fn umi_los_db(d: f64, fc_ghz: f64) -> f64 {
    22.0 + 28.0 * d.log10() + 20.0 * fc_ghz.log10()
}

/// UMi NLOS path loss in dB.
pub fn umi_nlos_db(d: f64, fc_ghz: f64) -> f64 {
    22.7 + 36.7 * d.log10() + 26.0 * fc_ghz.log10()
}

/// Path loss from the transmitter to `point`.
pub fn path_loss(scene: &Scene, point: Point) -> Result<f64, GeofenceError> {
    let d = scene.tx.distance(&point);
    if d == 0.0 {
        return Err(GeofenceError::Singular);
    }
    Ok(if scene.is_los(point) {
        umi_los_db(d, scene.carrier_frequency_ghz)
    } else {
        umi_nlos_db(d, scene.carrier_frequency_ghz)
    })
}

/// `Pr(γ > γ_th)` under Rayleigh fading, before clipping.
pub fn rayleigh_success(mean_snr_linear: f64, threshold_linear: f64) -> f64 {
    (-threshold_linear / mean_snr_linear).exp()
}

/// Success probability of a link to `point`, clipped into `[P_MIN, P_MAX]`.
pub fn success_probability(scene: &Scene, point: Point) -> Result<f64, GeofenceError> {
    let mean_snr_db = scene.link_budget_db - path_loss(scene, point)?;
    let mean_snr = 10f64.powf(mean_snr_db / 10.0);
    Ok(rayleigh_success(mean_snr, scene.snr_threshold).clamp(P_MIN, P_MAX))
}
