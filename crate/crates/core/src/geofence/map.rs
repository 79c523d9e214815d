use std::io::{self, Read, Write};

use serde::Serialize;

use super::{hex_digest, success_probability, GeofenceError, GridSpec, Point, Scene};
use crate::exec::Execution;
use crate::model::{ChannelPair, SourceModel};
use crate::optimizer::{optimize, FeasibleInterval};

/// Magic prefix of the binary map format.
pub const MAP_MAGIC: &[u8; 8] = b"CRAMAP1\0";

/// Scalar field sampled on the scene grid, row-major with `y` as the outer
/// index: `values[j * nx + i]` is the value at `(x_min + i·res, y_min + j·res)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpatialMap {
    pub quantity: String,
    pub units: String,
    pub grid: GridSpec,
    pub scene_hash: String,
    pub values: Vec<f64>,
}

impl SpatialMap {
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[j * self.grid.nx + i]
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// `x,y,value` rows, `j` outer, numbers with 17 significant digits.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "x,y,value")?;
        for j in 0..self.grid.ny {
            for i in 0..self.grid.nx {
                let p = self.grid.point(i, j);
                writeln!(w, "{:.16e},{:.16e},{:.16e}", p.x, p.y, self.get(i, j))?;
            }
        }
        Ok(())
    }

    /// Little-endian layout:
    ///
    /// ```text
    /// magic      8 bytes  "CRAMAP1\0"
    /// nx, ny     u32, u32
    /// x_min      f64
    /// y_min      f64
    /// resolution f64
    /// quantity   u32 length + UTF-8
    /// units      u32 length + UTF-8
    /// scene_hash u32 length + UTF-8
    /// values     nx·ny f64, row-major (y outer)
    /// ```
    pub fn write_binary<W: Write>(&self, mut w: W) -> io::Result<()> {
        w.write_all(MAP_MAGIC)?;
        w.write_all(&(self.grid.nx as u32).to_le_bytes())?;
        w.write_all(&(self.grid.ny as u32).to_le_bytes())?;
        for v in [self.grid.x_min, self.grid.y_min, self.grid.resolution] {
            w.write_all(&v.to_le_bytes())?;
        }
        for s in [&self.quantity, &self.units, &self.scene_hash] {
            w.write_all(&(s.len() as u32).to_le_bytes())?;
            w.write_all(s.as_bytes())?;
        }
        for v in &self.values {
            w.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_binary<R: Read>(mut r: R) -> Result<Self, GeofenceError> {
        let fmt = |m: &str| GeofenceError::MapFormat(m.to_string());
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic)?;
        if &magic != MAP_MAGIC {
            return Err(fmt("wrong magic"));
        }
        let mut u32buf = [0u8; 4];
        let mut f64buf = [0u8; 8];
        let mut read_u32 = |r: &mut R| -> io::Result<u32> {
            r.read_exact(&mut u32buf)?;
            Ok(u32::from_le_bytes(u32buf))
        };
        let nx = read_u32(&mut r)? as usize;
        let ny = read_u32(&mut r)? as usize;
        let mut read_f64 = |r: &mut R| -> io::Result<f64> {
            r.read_exact(&mut f64buf)?;
            Ok(f64::from_le_bytes(f64buf))
        };
        let x_min = read_f64(&mut r)?;
        let y_min = read_f64(&mut r)?;
        let resolution = read_f64(&mut r)?;
        let mut strings = Vec::with_capacity(3);
        for _ in 0..3 {
            let len = read_u32(&mut r)? as usize;
            if len > 1 << 20 {
                return Err(fmt("string field too long"));
            }
            let mut buf = vec![0u8; len];
            r.read_exact(&mut buf)?;
            strings.push(String::from_utf8(buf).map_err(|_| fmt("string field is not UTF-8"))?);
        }
        let count = nx
            .checked_mul(ny)
            .ok_or_else(|| fmt("dimensions overflow"))?;
        let mut values = Vec::with_capacity(count);
        for _ in 0..count {
            values.push(read_f64(&mut r)?);
        }
        let scene_hash = strings.pop().unwrap();
        let units = strings.pop().unwrap();
        let quantity = strings.pop().unwrap();
        Ok(Self {
            quantity,
            units,
            grid: GridSpec {
                x_min,
                y_min,
                resolution,
                nx,
                ny,
            },
            scene_hash,
            values,
        })
    }

    /// Hex SHA-256 of the binary encoding.
    pub fn digest(&self) -> String {
        let mut buf = Vec::new();
        self.write_binary(&mut buf).expect("writing to memory");
        hex_digest(&buf)
    }
}

/// The three per-cell maps of one scene.
#[derive(Debug, Clone, PartialEq)]
pub struct GeofenceMaps {
    /// Eve's success probability `p_s^e` at each node.
    pub eve_success: SpatialMap,
    /// Optimal average CRA.
    pub cra: SpatialMap,
    /// Optimal transmission probability.
    pub p_alpha: SpatialMap,
    pub bob_success: f64,
    /// Cells whose optimization failed (stored as NaN).
    pub holes: usize,
}

impl GeofenceMaps {
    pub fn validate(&self) -> Result<(), GeofenceError> {
        if self.holes > 0 {
            Err(GeofenceError::Holes(self.holes))
        } else {
            Ok(())
        }
    }
}

/// Where Eve is evaluated for node `(i, j)`: the node itself, or half a cell
/// east of it when it coincides with the transmitter.
pub(crate) fn sample_point(scene: &Scene, i: usize, j: usize) -> Point {
    let p = scene.grid.point(i, j);
    if p == scene.tx {
        Point::new(p.x + 0.5 * scene.grid.resolution, p.y)
    } else {
        p
    }
}

/// Places Eve at every grid node and optimizes the policy there.
pub fn build_maps(
    scene: &Scene,
    src: &SourceModel,
    interval: &FeasibleInterval,
    exec: Execution,
) -> Result<GeofenceMaps, GeofenceError> {
    scene.validate()?;
    let bob_success = scene.bob_success()?;
    let grid = scene.grid;
    let hash = hex_digest(
        serde_json::to_vec(&(scene, src, interval))
            .expect("inputs serialize")
            .as_slice(),
    );

    let cells = exec.map(grid.len(), |k| {
        let (i, j) = (k % grid.nx, k / grid.nx);
        let eve = match success_probability(scene, sample_point(scene, i, j)) {
            Ok(p) => p,
            Err(_) => return (f64::NAN, f64::NAN, f64::NAN),
        };
        let result = ChannelPair::new(bob_success, eve)
            .ok()
            .and_then(|ch| optimize(src, &ch, interval).ok());
        match result {
            Some(r) => (eve, r.value, r.p_alpha_star),
            None => (eve, f64::NAN, f64::NAN),
        }
    });

    let holes = cells
        .iter()
        .filter(|c| !(c.1.is_finite() && c.2.is_finite()))
        .count();
    let make = |quantity: &str, units: &str, pick: fn(&(f64, f64, f64)) -> f64| SpatialMap {
        quantity: quantity.to_string(),
        units: units.to_string(),
        grid,
        scene_hash: hash.clone(),
        values: cells.iter().map(pick).collect(),
    };
    Ok(GeofenceMaps {
        eve_success: make("eve_success_probability", "probability", |c| c.0),
        cra: make("optimal_cra", "probability", |c| c.1),
        p_alpha: make("optimal_p_alpha", "probability", |c| c.2),
        bob_success,
        holes,
    })
}
