//! Closed triangulated surfaces used for hole cutting and immersed bodies.

use super::Aabb;
use crate::math::{vec3, Mat3, Vec3};
use crate::{Error, Result};
use std::collections::HashMap;
use std::path::Path;

/// Indexed triangle surface. Vertices are in the frame of whatever owns the
/// surface (a body frame or a blank-region frame).
#[derive(Debug, Clone)]
pub struct TriSurface {
    pub name: String,
    pub vertices: Vec<Vec3>,
    pub tris: Vec<[u32; 3]>,
}

impl TriSurface {
    pub fn new(name: impl Into<String>, vertices: Vec<Vec3>, tris: Vec<[u32; 3]>) -> Self {
        Self { name: name.into(), vertices, tris }
    }

    pub fn aabb(&self) -> Aabb {
        Aabb::of_points(self.vertices.iter().copied())
    }

    /// Every edge must be shared by exactly two triangles with opposite
    /// orientation for the surface to be watertight.
    pub fn check_watertight(&self) -> Result<()> {
        let mut edges: HashMap<(u32, u32), i64> = HashMap::new();
        for t in &self.tris {
            for e in 0..3 {
                let (a, b) = (t[e], t[(e + 1) % 3]);
                let key = (a.min(b), a.max(b));
                *edges.entry(key).or_insert(0) += if a < b { 1 } else { -1 };
            }
        }
        if edges.values().any(|&c| c != 0) {
            return Err(Error::NonWatertightSurface(self.name.clone()));
        }
        Ok(())
    }

    /// Offset every vertex along its angle-weighted normal.
    pub fn inflate(&self, margin: f64) -> TriSurface {
        let mut normals = vec![Vec3::zeros(); self.vertices.len()];
        for t in &self.tris {
            let (a, b, c) = (
                self.vertices[t[0] as usize],
                self.vertices[t[1] as usize],
                self.vertices[t[2] as usize],
            );
            let n = (b - a).cross(&(c - a));
            for &v in t {
                normals[v as usize] += n;
            }
        }
        let vertices = self
            .vertices
            .iter()
            .zip(&normals)
            .map(|(v, n)| {
                let len = n.norm();
                if len > 1e-300 {
                    v + n / len * margin
                } else {
                    *v
                }
            })
            .collect();
        TriSurface::new(format!("{}+{margin}", self.name), vertices, self.tris.clone())
    }

    /// Same topology with vertices mapped by `rot * v + shift`.
    pub fn transformed(&self, rot: &Mat3, shift: Vec3) -> TriSurface {
        let vertices = self.vertices.iter().map(|v| rot * v + shift).collect();
        TriSurface::new(self.name.clone(), vertices, self.tris.clone())
    }

    pub fn triangle(&self, t: usize) -> [Vec3; 3] {
        let idx = self.tris[t];
        [
            self.vertices[idx[0] as usize],
            self.vertices[idx[1] as usize],
            self.vertices[idx[2] as usize],
        ]
    }

    /// Load from the documented ASCII format: a header line `nv nt`, then nv
    /// `x y z` lines, then nt `a b c` zero-based index lines. Lines starting
    /// with '#' are comments. Also accepts ASCII STL (triangle soup).
    pub fn load(path: impl AsRef<Path>) -> Result<TriSurface> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)?;
        let name = path.file_stem().and_then(|s| s.to_str()).unwrap_or("surface").to_string();
        if text.trim_start().starts_with("solid") {
            return Self::parse_stl(&name, &text);
        }
        let mut lines = text.lines().filter(|l| {
            let t = l.trim();
            !t.is_empty() && !t.starts_with('#')
        });
        let header = lines.next().ok_or_else(|| Error::Config("empty surface file".into()))?;
        let mut it = header.split_whitespace();
        let nv: usize = it
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::Config("bad surface header".into()))?;
        let nt: usize = it
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::Config("bad surface header".into()))?;
        let mut vertices = Vec::with_capacity(nv);
        for _ in 0..nv {
            let line = lines.next().ok_or_else(|| Error::Config("truncated vertex list".into()))?;
            let v: Vec<f64> = line
                .split_whitespace()
                .map(|s| s.parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::Config(format!("bad vertex '{line}': {e}")))?;
            if v.len() != 3 {
                return Err(Error::Config(format!("bad vertex '{line}'")));
            }
            vertices.push(vec3(v[0], v[1], v[2]));
        }
        let mut tris = Vec::with_capacity(nt);
        for _ in 0..nt {
            let line = lines.next().ok_or_else(|| Error::Config("truncated triangle list".into()))?;
            let v: Vec<u32> = line
                .split_whitespace()
                .map(|s| s.parse::<u32>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::Config(format!("bad triangle '{line}': {e}")))?;
            if v.len() != 3 || v.iter().any(|&i| i as usize >= nv) {
                return Err(Error::Config(format!("bad triangle '{line}'")));
            }
            tris.push([v[0], v[1], v[2]]);
        }
        Ok(TriSurface::new(name, vertices, tris))
    }

    fn parse_stl(name: &str, text: &str) -> Result<TriSurface> {
        let mut vertices = Vec::new();
        let mut tris = Vec::new();
        let mut index: HashMap<(u64, u64, u64), u32> = HashMap::new();
        let mut current: Vec<u32> = Vec::new();
        for line in text.lines() {
            let t = line.trim();
            if let Some(rest) = t.strip_prefix("vertex") {
                let v: Vec<f64> = rest
                    .split_whitespace()
                    .map(|s| s.parse::<f64>())
                    .collect::<std::result::Result<_, _>>()
                    .map_err(|e| Error::Config(format!("bad STL vertex '{t}': {e}")))?;
                if v.len() != 3 {
                    return Err(Error::Config(format!("bad STL vertex '{t}'")));
                }
                let key = (v[0].to_bits(), v[1].to_bits(), v[2].to_bits());
                let id = *index.entry(key).or_insert_with(|| {
                    vertices.push(vec3(v[0], v[1], v[2]));
                    (vertices.len() - 1) as u32
                });
                current.push(id);
            } else if t.starts_with("endfacet") {
                if current.len() != 3 {
                    return Err(Error::Config("STL facet without 3 vertices".into()));
                }
                tris.push([current[0], current[1], current[2]]);
                current.clear();
            }
        }
        Ok(TriSurface::new(name.to_string(), vertices, tris))
    }

    /// Write the documented ASCII format.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        use std::fmt::Write as _;
        let mut out = String::new();
        let _ = writeln!(out, "# indexed triangle surface: nv nt, vertices, tris");
        let _ = writeln!(out, "{} {}", self.vertices.len(), self.tris.len());
        for v in &self.vertices {
            let _ = writeln!(out, "{:.17e} {:.17e} {:.17e}", v.x, v.y, v.z);
        }
        for t in &self.tris {
            let _ = writeln!(out, "{} {} {}", t[0], t[1], t[2]);
        }
        std::fs::write(path, out)?;
        Ok(())
    }

    /// Closed cylinder along z with caps, outward-oriented.
    pub fn cylinder_z(name: &str, center: Vec3, radius: f64, z0: f64, z1: f64, nseg: usize) -> TriSurface {
        let mut vertices = Vec::with_capacity(2 * nseg + 2);
        for &z in &[z0, z1] {
            for s in 0..nseg {
                let th = 2.0 * std::f64::consts::PI * s as f64 / nseg as f64;
                vertices.push(center + vec3(radius * th.cos(), radius * th.sin(), z - center.z));
            }
        }
        let bot_c = vertices.len() as u32;
        vertices.push(vec3(center.x, center.y, z0));
        let top_c = vertices.len() as u32;
        vertices.push(vec3(center.x, center.y, z1));
        let mut tris = Vec::with_capacity(4 * nseg);
        let n = nseg as u32;
        for s in 0..n {
            let s1 = (s + 1) % n;
            // side quads, outward normal
            tris.push([s, s1, n + s]);
            tris.push([s1, n + s1, n + s]);
            // bottom cap points -z
            tris.push([bot_c, s1, s]);
            // top cap points +z
            tris.push([top_c, n + s, n + s1]);
        }
        TriSurface::new(name.to_string(), vertices, tris)
    }

    /// Closed axis-aligned box, outward-oriented, 12 triangles.
    pub fn box_surface(name: &str, center: Vec3, half: Vec3) -> TriSurface {
        let mut vertices = Vec::with_capacity(8);
        for b in 0..8 {
            vertices.push(
                center
                    + vec3(
                        if b & 1 == 0 { -half.x } else { half.x },
                        if b & 2 == 0 { -half.y } else { half.y },
                        if b & 4 == 0 { -half.z } else { half.z },
                    ),
            );
        }
        // quads with outward normals, split into triangles
        let quads: [[u32; 4]; 6] = [
            [1, 3, 7, 5], // +x
            [0, 4, 6, 2], // -x
            [2, 6, 7, 3], // +y
            [0, 1, 5, 4], // -y
            [4, 5, 7, 6], // +z
            [0, 2, 3, 1], // -z
        ];
        let mut tris = Vec::with_capacity(12);
        for q in quads {
            tris.push([q[0], q[1], q[2]]);
            tris.push([q[0], q[2], q[3]]);
        }
        TriSurface::new(name.to_string(), vertices, tris)
    }

    /// UV sphere for tests.
    pub fn sphere(name: &str, center: Vec3, radius: f64, nlat: usize, nlon: usize) -> TriSurface {
        let mut vertices = vec![center + vec3(0.0, 0.0, radius)];
        for la in 1..nlat {
            let phi = std::f64::consts::PI * la as f64 / nlat as f64;
            for lo in 0..nlon {
                let th = 2.0 * std::f64::consts::PI * lo as f64 / nlon as f64;
                vertices.push(
                    center
                        + vec3(
                            radius * phi.sin() * th.cos(),
                            radius * phi.sin() * th.sin(),
                            radius * phi.cos(),
                        ),
                );
            }
        }
        vertices.push(center + vec3(0.0, 0.0, -radius));
        let south = (vertices.len() - 1) as u32;
        let ring = |la: usize, lo: usize| -> u32 { (1 + (la - 1) * nlon + (lo % nlon)) as u32 };
        let mut tris = Vec::new();
        for lo in 0..nlon {
            tris.push([0, ring(1, lo), ring(1, lo + 1)]);
            tris.push([south, ring(nlat - 1, lo + 1), ring(nlat - 1, lo)]);
        }
        for la in 1..nlat - 1 {
            for lo in 0..nlon {
                let (a, b, c, d) = (ring(la, lo), ring(la, lo + 1), ring(la + 1, lo + 1), ring(la + 1, lo));
                tris.push([a, d, c]);
                tris.push([a, c, b]);
            }
        }
        TriSurface::new(name.to_string(), vertices, tris)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generated_surfaces_are_watertight() {
        TriSurface::cylinder_z("c", vec3(0.0, 0.0, 0.0), 0.5, -1.0, 1.0, 16)
            .check_watertight()
            .unwrap();
        TriSurface::box_surface("b", vec3(1.0, 2.0, 3.0), vec3(0.5, 0.4, 0.3))
            .check_watertight()
            .unwrap();
        TriSurface::sphere("s", Vec3::zeros(), 1.0, 8, 12).check_watertight().unwrap();
    }

    #[test]
    fn open_surface_rejected() {
        let mut s = TriSurface::box_surface("b", Vec3::zeros(), vec3(1.0, 1.0, 1.0));
        s.tris.pop();
        assert!(matches!(s.check_watertight(), Err(Error::NonWatertightSurface(_))));
    }

    #[test]
    fn save_load_roundtrip() {
        let s = TriSurface::cylinder_z("c", vec3(0.1, 0.2, 0.0), 0.7, -0.5, 0.5, 8);
        let dir = std::env::temp_dir().join("chimera_surface_test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("c.tri");
        s.save(&path).unwrap();
        let r = TriSurface::load(&path).unwrap();
        assert_eq!(r.vertices.len(), s.vertices.len());
        assert_eq!(r.tris, s.tris);
        for (a, b) in r.vertices.iter().zip(&s.vertices) {
            assert!((a - b).norm() < 1e-15);
        }
    }

    #[test]
    fn stl_parsing() {
        let stl = "solid t\nfacet normal 0 0 1\nouter loop\nvertex 0 0 0\nvertex 1 0 0\nvertex 0 1 0\nendloop\nendfacet\nendsolid t\n";
        let dir = std::env::temp_dir().join("chimera_surface_test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("t.stl");
        std::fs::write(&path, stl).unwrap();
        let s = TriSurface::load(&path).unwrap();
        assert_eq!(s.tris.len(), 1);
        assert_eq!(s.vertices.len(), 3);
    }

    #[test]
    fn inflate_grows_radius() {
        let s = TriSurface::cylinder_z("c", Vec3::zeros(), 1.0, -1.0, 1.0, 64);
        let gi = s.inflate(0.1);
        // a side vertex should move radially outward by about the margin
        let v = gi.vertices[0];
        let r = (v.x * v.x + v.y * v.y).sqrt();
        assert!(r > 1.05 && r < 1.15, "r = {r}");
    }
}
