//! Analytic grid mappings and explicit coordinate files.

use crate::math::{vec3, Vec3};
use crate::{Error, Result};
use serde::{Deserialize, Serialize};

/// Node-coordinate generator for one block.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum Mapping {
    /// Uniform Cartesian lattice.
    Uniform { origin: [f64; 3], spacing: [f64; 3] },
    /// Uniform lattice rotated about the z axis (test grids).
    RotatedZ { origin: [f64; 3], spacing: [f64; 3], angle: f64 },
    /// Tensor product of per-axis coordinate distributions.
    Axes { x: AxisSpec, y: AxisSpec, z: AxisSpec },
    /// Explicit node coordinates, one "x y z" triple per line, i fastest.
    File { path: String },
}

/// One-dimensional node distribution.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum AxisSpec {
    Uniform { min: f64, max: f64 },
    /// Uniform spacing `h` inside [band0, band1], geometric stretching filling
    /// the rest of [min, max] on either side.
    Band { min: f64, max: f64, band: [f64; 2], h: f64 },
    Explicit { coords: Vec<f64> },
}

impl Mapping {
    pub fn generate(&self, dims: [usize; 3]) -> Result<Vec<Vec3>> {
        let n = dims[0] * dims[1] * dims[2];
        let mut nodes = Vec::with_capacity(n);
        match self {
            Mapping::Uniform { origin, spacing } => {
                for k in 0..dims[2] {
                    for j in 0..dims[1] {
                        for i in 0..dims[0] {
                            nodes.push(vec3(
                                origin[0] + spacing[0] * i as f64,
                                origin[1] + spacing[1] * j as f64,
                                origin[2] + spacing[2] * k as f64,
                            ));
                        }
                    }
                }
            }
            Mapping::RotatedZ { origin, spacing, angle } => {
                let (s, c) = angle.sin_cos();
                for k in 0..dims[2] {
                    for j in 0..dims[1] {
                        for i in 0..dims[0] {
                            let x = spacing[0] * i as f64;
                            let y = spacing[1] * j as f64;
                            nodes.push(vec3(
                                origin[0] + c * x - s * y,
                                origin[1] + s * x + c * y,
                                origin[2] + spacing[2] * k as f64,
                            ));
                        }
                    }
                }
            }
            Mapping::Axes { x, y, z } => {
                let xs = x.coords(dims[0])?;
                let ys = y.coords(dims[1])?;
                let zs = z.coords(dims[2])?;
                for k in 0..dims[2] {
                    for j in 0..dims[1] {
                        for i in 0..dims[0] {
                            nodes.push(vec3(xs[i], ys[j], zs[k]));
                        }
                    }
                }
            }
            Mapping::File { path } => {
                let text = std::fs::read_to_string(path)?;
                for line in text.lines() {
                    let line = line.trim();
                    if line.is_empty() || line.starts_with('#') {
                        continue;
                    }
                    let mut it = line.split_whitespace();
                    let mut p = [0.0; 3];
                    for v in p.iter_mut() {
                        *v = it
                            .next()
                            .ok_or_else(|| Error::Config(format!("bad coord line '{line}'")))?
                            .parse::<f64>()
                            .map_err(|e| Error::Config(format!("bad coord line '{line}': {e}")))?;
                    }
                    nodes.push(vec3(p[0], p[1], p[2]));
                }
                if nodes.len() != n {
                    return Err(Error::Config(format!(
                        "coordinate file {path} has {} nodes, expected {n}",
                        nodes.len()
                    )));
                }
            }
        }
        Ok(nodes)
    }
}

impl AxisSpec {
    pub fn coords(&self, n: usize) -> Result<Vec<f64>> {
        match self {
            AxisSpec::Uniform { min, max } => {
                let h = (max - min) / (n - 1) as f64;
                Ok((0..n).map(|i| min + h * i as f64).collect())
            }
            AxisSpec::Explicit { coords } => {
                if coords.len() != n {
                    return Err(Error::Config(format!(
                        "explicit axis has {} coords, expected {n}",
                        coords.len()
                    )));
                }
                Ok(coords.clone())
            }
            AxisSpec::Band { min, max, band, h } => band_coords(*min, *max, *band, *h, n),
        }
    }
}

/// Distribute `n` nodes over [min, max] with uniform spacing `h` inside the
/// band and geometrically stretched cells outside it.
fn band_coords(min: f64, max: f64, band: [f64; 2], h: f64, n: usize) -> Result<Vec<f64>> {
    let (b0, b1) = (band[0], band[1]);
    if !(min <= b0 && b0 < b1 && b1 <= max) {
        return Err(Error::Config(format!("band [{b0}, {b1}] outside axis [{min}, {max}]")));
    }
    let n_band = ((b1 - b0) / h).round().max(1.0) as usize;
    let h_band = (b1 - b0) / n_band as f64;
    let left = b0 - min;
    let right = max - b1;
    let rest = (n - 1).checked_sub(n_band).ok_or_else(|| {
        Error::Config(format!("axis needs more than {n} nodes for band spacing {h}"))
    })?;
    let n_left = if left + right > 0.0 {
        ((rest as f64) * left / (left + right)).round() as usize
    } else {
        0
    };
    let n_right = rest - n_left;
    if (left > 0.0 && n_left == 0) || (right > 0.0 && n_right == 0) {
        return Err(Error::Config("not enough nodes to stretch outside the band".into()));
    }

    let mut xs = Vec::with_capacity(n);
    // left segment, walking outward from b0 then reversed
    let lh = geometric_spacings(left, h_band, n_left)?;
    let mut x = b0;
    let mut seg: Vec<f64> = lh
        .iter()
        .map(|dh| {
            x -= dh;
            x
        })
        .collect();
    seg.reverse();
    xs.extend(seg);
    for i in 0..=n_band {
        xs.push(b0 + h_band * i as f64);
    }
    let rh = geometric_spacings(right, h_band, n_right)?;
    let mut x = b1;
    for dh in rh {
        x += dh;
        xs.push(x);
    }
    // close the ends exactly
    if let Some(first) = xs.first_mut() {
        if n_left > 0 {
            *first = min;
        }
    }
    if let Some(last) = xs.last_mut() {
        if n_right > 0 {
            *last = max;
        }
    }
    debug_assert_eq!(xs.len(), n);
    Ok(xs)
}

/// Spacings h0*r, h0*r^2, ... h0*r^n summing to `len`, ratio found by bisection.
fn geometric_spacings(len: f64, h0: f64, n: usize) -> Result<Vec<f64>> {
    if n == 0 {
        return Ok(Vec::new());
    }
    if len <= 0.0 {
        return Err(Error::Config("geometric segment with zero length but nodes".into()));
    }
    let sum = |r: f64| -> f64 {
        if (r - 1.0).abs() < 1e-14 {
            h0 * n as f64
        } else {
            h0 * r * (r.powi(n as i32) - 1.0) / (r - 1.0)
        }
    };
    let (mut lo, mut hi) = (1e-6, 1.0);
    if sum(1.0) < len {
        lo = 1.0;
        hi = 2.0;
        while sum(hi) < len {
            hi *= 1.5;
            if hi > 1e6 {
                return Err(Error::Config("cannot fit geometric stretching".into()));
            }
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if sum(mid) < len {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let r = 0.5 * (lo + hi);
    Ok((1..=n).map(|i| h0 * r.powi(i as i32)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_axis() {
        let xs = AxisSpec::Uniform { min: 0.0, max: 1.0 }.coords(5).unwrap();
        assert_eq!(xs.len(), 5);
        assert!((xs[1] - 0.25).abs() < 1e-15);
        assert!((xs[4] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn band_axis_hits_band_and_ends() {
        let xs = AxisSpec::Band { min: -10.0, max: 10.0, band: [-1.0, 1.0], h: 0.1 }
            .coords(61)
            .unwrap();
        assert_eq!(xs.len(), 61);
        assert!((xs[0] + 10.0).abs() < 1e-12);
        assert!((xs[60] - 10.0).abs() < 1e-12);
        // band nodes present with requested spacing
        let in_band: Vec<f64> = xs.iter().copied().filter(|x| x.abs() <= 1.0 + 1e-9).collect();
        assert_eq!(in_band.len(), 21);
        for w in in_band.windows(2) {
            assert!((w[1] - w[0] - 0.1).abs() < 1e-9);
        }
        // strictly increasing
        for w in xs.windows(2) {
            assert!(w[1] > w[0]);
        }
    }

    #[test]
    fn rotated_lattice() {
        let m = Mapping::RotatedZ {
            origin: [1.0, 2.0, 0.0],
            spacing: [0.5, 0.5, 1.0],
            angle: std::f64::consts::FRAC_PI_2,
        };
        let nodes = m.generate([2, 2, 2]).unwrap();
        // node (1,0,0): +x step rotated 90 deg becomes +y
        let p = nodes[1];
        assert!((p - vec3(1.0, 2.5, 0.0)).norm() < 1e-14);
    }
}
