//! Ray-driven forward projectors and voxel-driven back projectors.
//!
//! Forward projection integrates the bilinearly (trilinearly) interpolated
//! volume along each detector ray with the midpoint rule, using a step of at
//! most half the smallest voxel spacing. Back projection maps every voxel
//! center onto the detector and linearly interpolates the projection data.
//! The two operators are deliberately not exact transposes of each other.
//!
//! Fan- and cone-beam back projection apply the distance weight `1/U²`,
//! where `U` is the voxel depth along the central ray relative to the
//! iso-center depth. Parallel-beam back projection is unweighted. Neither
//! back projector normalizes by the number of views.
//!
//! Work is split by output element (detector row or image row) so results
//! are identical for any thread count.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{
    detector_axis, ConeGeometry3D, FanGeometry2D, Geometry, ParallelGeometry2D, VolumeSpec,
};
use crate::image::{Image, Sinogram};

/// Volume grid in `(x, y, z)` order, the reverse of the array axis order.
#[derive(Clone, Copy, Debug)]
struct Grid {
    n: [usize; 3],
    spacing: [f64; 3],
    origin: [f64; 3],
}

impl Grid {
    fn new(spec: &VolumeSpec) -> Self {
        let nd = spec.ndim();
        let mut g = Grid {
            n: [1; 3],
            spacing: [1.0; 3],
            origin: [0.0; 3],
        };
        for k in 0..nd {
            let axis = nd - 1 - k;
            g.n[k] = spec.shape()[axis];
            g.spacing[k] = spec.spacing()[axis];
            g.origin[k] = spec.origin()[axis];
        }
        g
    }

    fn step(&self, ndim: usize) -> f64 {
        0.5 * self.spacing[..ndim].iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Parameter interval where the ray `p + t·d` crosses the interpolation
    /// support `[origin − spacing, origin + n·spacing]` of the first `ndim`
    /// axes.
    fn clip(&self, p: &[f64; 3], d: &[f64; 3], ndim: usize) -> Option<(f64, f64)> {
        let (mut t0, mut t1) = (f64::NEG_INFINITY, f64::INFINITY);
        for k in 0..ndim {
            let lo = self.origin[k] - self.spacing[k];
            let hi = self.origin[k] + self.n[k] as f64 * self.spacing[k];
            if d[k].abs() < 1e-300 {
                if p[k] <= lo || p[k] >= hi {
                    return None;
                }
            } else {
                let a = (lo - p[k]) / d[k];
                let b = (hi - p[k]) / d[k];
                t0 = t0.max(a.min(b));
                t1 = t1.min(a.max(b));
            }
        }
        (t1 > t0).then_some((t0, t1))
    }

    #[inline]
    fn bilinear(&self, data: &[f64], x: f64, y: f64) -> f64 {
        let fx = (x - self.origin[0]) / self.spacing[0];
        let fy = (y - self.origin[1]) / self.spacing[1];
        let (ix, iy) = (fx.floor(), fy.floor());
        let (tx, ty) = (fx - ix, fy - iy);
        let (ix, iy) = (ix as isize, iy as isize);
        let (nx, ny) = (self.n[0] as isize, self.n[1] as isize);
        let mut acc = 0.0;
        for (dy, wy) in [(0, 1.0 - ty), (1, ty)] {
            let yy = iy + dy;
            if yy < 0 || yy >= ny {
                continue;
            }
            for (dx, wx) in [(0, 1.0 - tx), (1, tx)] {
                let xx = ix + dx;
                if xx < 0 || xx >= nx {
                    continue;
                }
                acc += wy * wx * data[(yy * nx + xx) as usize];
            }
        }
        acc
    }

    #[inline]
    fn trilinear(&self, data: &[f64], p: [f64; 3]) -> f64 {
        let f = [
            (p[0] - self.origin[0]) / self.spacing[0],
            (p[1] - self.origin[1]) / self.spacing[1],
            (p[2] - self.origin[2]) / self.spacing[2],
        ];
        let i = [f[0].floor(), f[1].floor(), f[2].floor()];
        let t = [f[0] - i[0], f[1] - i[1], f[2] - i[2]];
        let i = [i[0] as isize, i[1] as isize, i[2] as isize];
        let n = [self.n[0] as isize, self.n[1] as isize, self.n[2] as isize];
        let mut acc = 0.0;
        for (dz, wz) in [(0, 1.0 - t[2]), (1, t[2])] {
            let z = i[2] + dz;
            if z < 0 || z >= n[2] || wz == 0.0 {
                continue;
            }
            for (dy, wy) in [(0, 1.0 - t[1]), (1, t[1])] {
                let y = i[1] + dy;
                if y < 0 || y >= n[1] || wy == 0.0 {
                    continue;
                }
                let row = ((z * n[1] + y) * n[0]) as usize;
                for (dx, wx) in [(0, 1.0 - t[0]), (1, t[0])] {
                    let x = i[0] + dx;
                    if x < 0 || x >= n[0] {
                        continue;
                    }
                    acc += wz * wy * wx * data[row + x as usize];
                }
            }
        }
        acc
    }

    /// Line integral of the interpolated volume along `p + t·d` (`d` unit).
    fn integrate(&self, data: &[f64], p: [f64; 3], d: [f64; 3], ndim: usize, h: f64) -> f64 {
        let Some((t0, t1)) = self.clip(&p, &d, ndim) else {
            return 0.0;
        };
        let steps = ((t1 - t0) / h).ceil().max(1.0) as usize;
        let dt = (t1 - t0) / steps as f64;
        let mut acc = 0.0;
        for k in 0..steps {
            let t = t0 + (k as f64 + 0.5) * dt;
            let q = [p[0] + t * d[0], p[1] + t * d[1], p[2] + t * d[2]];
            acc += if ndim == 2 {
                self.bilinear(data, q[0], q[1])
            } else {
                self.trilinear(data, q)
            };
        }
        acc * dt
    }

    /// World coordinate of voxel center `index` along grid axis `k`.
    #[inline]
    fn coord(&self, k: usize, index: usize) -> f64 {
        self.origin[k] + index as f64 * self.spacing[k]
    }
}

/// Linear interpolation of `row` at fractional index `f`, zero outside.
#[inline]
fn lerp_zero(row: &[f64], f: f64) -> f64 {
    let i = f.floor();
    let t = f - i;
    let i = i as isize;
    let n = row.len() as isize;
    let mut acc = 0.0;
    if i >= 0 && i < n {
        acc += (1.0 - t) * row[i as usize];
    }
    if i + 1 >= 0 && i + 1 < n {
        acc += t * row[(i + 1) as usize];
    }
    acc
}

/// Bilinear interpolation on a `[rows, cols]` detector at fractional
/// `(u = column, v = row)`, zero outside.
#[inline]
fn bilerp_zero(det: &[f64], cols: usize, rows: usize, u: f64, v: f64) -> f64 {
    let (iu, iv) = (u.floor(), v.floor());
    let (tu, tv) = (u - iu, v - iv);
    let (iu, iv) = (iu as isize, iv as isize);
    let mut acc = 0.0;
    for (dv, wv) in [(0, 1.0 - tv), (1, tv)] {
        let r = iv + dv;
        if r < 0 || r >= rows as isize {
            continue;
        }
        for (du, wu) in [(0, 1.0 - tu), (1, tu)] {
            let c = iu + du;
            if c < 0 || c >= cols as isize {
                continue;
            }
            acc += wv * wu * det[r as usize * cols + c as usize];
        }
    }
    acc
}

fn check_volume(volume: &Image, spec: &VolumeSpec) -> Result<()> {
    if volume.spec.shape() != spec.shape() {
        return Err(Error::shape(spec.shape(), volume.shape()));
    }
    Ok(())
}

fn check_sinogram(sino: &Sinogram, shape: &[usize]) -> Result<()> {
    if sino.shape() != shape {
        return Err(Error::shape(shape, sino.shape()));
    }
    Ok(())
}

pub fn forward_parallel_2d(volume: &Image, geo: &ParallelGeometry2D) -> Result<Sinogram> {
    check_volume(volume, &geo.volume)?;
    let grid = Grid::new(&geo.volume);
    let h = grid.step(2);
    let det = &geo.detector;
    let nd = det.shape()[0];
    let mut sino = Sinogram::zeros(&geo.sinogram_shape(), det.spacing());
    sino.data
        .par_chunks_mut(nd)
        .zip(geo.ray_vectors.par_iter())
        .for_each(|(row, &ray)| {
            let axis = detector_axis(ray);
            for (j, out) in row.iter_mut().enumerate() {
                let s = det.coordinate(0, j);
                let p = [s * axis[0], s * axis[1], 0.0];
                *out = grid.integrate(&volume.data, p, [ray[0], ray[1], 0.0], 2, h);
            }
        });
    Ok(sino)
}

pub fn backproject_parallel_2d(sino: &Sinogram, geo: &ParallelGeometry2D) -> Result<Image> {
    check_sinogram(sino, &geo.sinogram_shape())?;
    let grid = Grid::new(&geo.volume);
    let det = &geo.detector;
    let (d0, ds) = (det.origin()[0], det.spacing()[0]);
    let axes: Vec<[f64; 2]> = geo.ray_vectors.iter().map(|&r| detector_axis(r)).collect();
    let mut img = Image::zeros(&geo.volume);
    img.data
        .par_chunks_mut(grid.n[0])
        .enumerate()
        .for_each(|(iy, out)| {
            let y = grid.coord(1, iy);
            for (ix, v) in out.iter_mut().enumerate() {
                let x = grid.coord(0, ix);
                let mut acc = 0.0;
                for (a, row) in axes.iter().zip(sino.rows()) {
                    let s = x * a[0] + y * a[1];
                    acc += lerp_zero(row, (s - d0) / ds);
                }
                *v = acc;
            }
        });
    Ok(img)
}

pub fn forward_fan_2d(volume: &Image, geo: &FanGeometry2D) -> Result<Sinogram> {
    check_volume(volume, &geo.volume)?;
    let grid = Grid::new(&geo.volume);
    let h = grid.step(2);
    let det = &geo.detector;
    let nd = det.shape()[0];
    let (sid, sdd) = (geo.sid, geo.sdd);
    let mut sino = Sinogram::zeros(&geo.sinogram_shape(), det.spacing());
    sino.data
        .par_chunks_mut(nd)
        .zip(geo.ray_vectors.par_iter())
        .for_each(|(row, &ray)| {
            let axis = detector_axis(ray);
            let src = [-sid * ray[0], -sid * ray[1], 0.0];
            for (j, out) in row.iter_mut().enumerate() {
                let u = det.coordinate(0, j);
                // source -> pixel: SDD along the central ray, u along the detector
                let dx = sdd * ray[0] + u * axis[0];
                let dy = sdd * ray[1] + u * axis[1];
                let n = (dx * dx + dy * dy).sqrt();
                *out = grid.integrate(&volume.data, src, [dx / n, dy / n, 0.0], 2, h);
            }
        });
    Ok(sino)
}

pub fn backproject_fan_2d(sino: &Sinogram, geo: &FanGeometry2D) -> Result<Image> {
    check_sinogram(sino, &geo.sinogram_shape())?;
    let grid = Grid::new(&geo.volume);
    let det = &geo.detector;
    let (d0, ds) = (det.origin()[0], det.spacing()[0]);
    let (sid, sdd) = (geo.sid, geo.sdd);
    let mut img = Image::zeros(&geo.volume);
    img.data
        .par_chunks_mut(grid.n[0])
        .enumerate()
        .for_each(|(iy, out)| {
            let y = grid.coord(1, iy);
            for (ix, v) in out.iter_mut().enumerate() {
                let x = grid.coord(0, ix);
                let mut acc = 0.0;
                for (r, row) in geo.ray_vectors.iter().zip(sino.rows()) {
                    let depth = sid + x * r[0] + y * r[1];
                    if depth <= 0.0 {
                        continue;
                    }
                    let lateral = -x * r[1] + y * r[0];
                    let u = sdd * lateral / depth;
                    let big_u = depth / sid;
                    acc += lerp_zero(row, (u - d0) / ds) / (big_u * big_u);
                }
                *v = acc;
            }
        });
    Ok(img)
}

pub fn forward_cone_3d(volume: &Image, geo: &ConeGeometry3D) -> Result<Sinogram> {
    check_volume(volume, &geo.volume)?;
    let grid = Grid::new(&geo.volume);
    let h = grid.step(3);
    let shape = geo.sinogram_shape();
    let (rows, cols) = (shape[1], shape[2]);
    let mut sino = Sinogram::zeros(&shape, geo.detector.spacing());
    sino.data
        .par_chunks_mut(cols)
        .enumerate()
        .for_each(|(k, out)| {
            let (view, iv) = (k / rows, k % rows);
            let m = &geo.projection_matrices[view];
            let src = m.source();
            for (iu, o) in out.iter_mut().enumerate() {
                let d = m.ray_direction(iu as f64, iv as f64);
                *o = grid.integrate(&volume.data, src, d, 3, h);
            }
        });
    Ok(sino)
}

pub fn backproject_cone_3d(sino: &Sinogram, geo: &ConeGeometry3D) -> Result<Image> {
    check_sinogram(sino, &geo.sinogram_shape())?;
    let grid = Grid::new(&geo.volume);
    let shape = geo.sinogram_shape();
    let (rows, cols) = (shape[1], shape[2]);
    let plane = rows * cols;
    let sid = geo.sid;
    let mut img = Image::zeros(&geo.volume);
    img.data
        .par_chunks_mut(grid.n[0])
        .enumerate()
        .for_each(|(k, out)| {
            let (iz, iy) = (k / grid.n[1], k % grid.n[1]);
            let (y, z) = (grid.coord(1, iy), grid.coord(2, iz));
            for (view, m) in geo.projection_matrices.iter().enumerate() {
                let det = &sino.data[view * plane..(view + 1) * plane];
                let r = m.rows();
                // homogeneous coordinates are affine in x along the row
                let base = [
                    r[0][1] * y + r[0][2] * z + r[0][3],
                    r[1][1] * y + r[1][2] * z + r[1][3],
                    r[2][1] * y + r[2][2] * z + r[2][3],
                ];
                for (ix, v) in out.iter_mut().enumerate() {
                    let x = grid.coord(0, ix);
                    let w = base[2] + r[2][0] * x;
                    if w <= 0.0 {
                        continue;
                    }
                    let u = (base[0] + r[0][0] * x) / w;
                    let vv = (base[1] + r[1][0] * x) / w;
                    let rel = w / sid;
                    *v += bilerp_zero(det, cols, rows, u, vv) / (rel * rel);
                }
            }
        });
    Ok(img)
}

impl Geometry {
    /// Ray-driven forward projection of `volume` under this geometry.
    pub fn forward_project(&self, volume: &Image) -> Result<Sinogram> {
        match self {
            Geometry::Parallel2D(g) => forward_parallel_2d(volume, g),
            Geometry::Fan2D(g) => forward_fan_2d(volume, g),
            Geometry::Cone3D(g) => forward_cone_3d(volume, g),
        }
    }

    /// Voxel-driven back projection of `sino` under this geometry.
    pub fn backproject(&self, sino: &Sinogram) -> Result<Image> {
        match self {
            Geometry::Parallel2D(g) => backproject_parallel_2d(sino, g),
            Geometry::Fan2D(g) => backproject_fan_2d(sino, g),
            Geometry::Cone3D(g) => backproject_cone_3d(sino, g),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{DetectorSpec, VolumeSpec};
    use crate::phantom::{rasterize_primitives, Primitive};
    use std::f64::consts::PI;

    fn parallel(n: usize, det: usize, views: usize, range: f64) -> ParallelGeometry2D {
        ParallelGeometry2D::new(
            VolumeSpec::new(&[n, n], &[1.0, 1.0]).unwrap(),
            DetectorSpec::new(&[det], &[1.0]).unwrap(),
            views,
            range,
        )
        .unwrap()
    }

    #[test]
    fn zero_in_zero_out() {
        let g = parallel(16, 24, 5, PI);
        let s = forward_parallel_2d(&Image::zeros(&g.volume), &g).unwrap();
        assert!(s.data.iter().all(|&v| v == 0.0));
        let b = backproject_parallel_2d(&Sinogram::zeros(&g.sinogram_shape(), &[1.0]), &g).unwrap();
        assert!(b.data.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn center_pixel_line_integral() {
        // tent footprint of a unit pixel integrates to exactly one spacing
        let g = parallel(3, 3, 1, PI);
        let mut img = Image::zeros(&g.volume);
        img.data[4] = 1.0;
        let s = forward_parallel_2d(&img, &g).unwrap();
        assert!((s.data[1] - 1.0).abs() < 0.01, "{:?}", s.data);
        assert!(s.data[0].abs() < 1e-12 && s.data[2].abs() < 1e-12);
    }

    #[test]
    fn shape_mismatch_rejected() {
        let g = parallel(8, 12, 3, PI);
        let wrong = Image::zeros(&VolumeSpec::new(&[8, 9], &[1.0, 1.0]).unwrap());
        assert!(forward_parallel_2d(&wrong, &g).is_err());
        assert!(backproject_parallel_2d(&Sinogram::zeros(&[4, 12], &[1.0]), &g).is_err());
    }

    #[test]
    fn constant_sinogram_backprojects_to_constant() {
        let g = parallel(16, 40, 1, PI);
        let sino = Sinogram::from_data(&[1, 40], &[1.0], vec![2.5; 40]).unwrap();
        let img = backproject_parallel_2d(&sino, &g).unwrap();
        assert!(img.data.iter().all(|&v| (v - 2.5).abs() < 1e-12));
    }

    #[test]
    fn single_bin_backprojects_to_stripe() {
        // θ = 0: detector axis is +y, so bin j maps to image row coordinate
        let g = parallel(8, 9, 1, PI);
        let mut sino = Sinogram::zeros(&[1, 9], &[1.0]);
        sino.data[4] = 1.0; // detector coordinate 0
        let img = backproject_parallel_2d(&sino, &g).unwrap();
        for iy in 0..8 {
            let y = g.volume.coordinate(0, iy);
            let frac = (1.0 - y.abs()).max(0.0);
            for ix in 0..8 {
                assert!((img.data[iy * 8 + ix] - frac).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn disk_chord_parallel() {
        let n = 64;
        let g = parallel(n, 64, 3, PI);
        let r = 20.0;
        let img = rasterize_primitives(&[Primitive::circle([0.0, 0.0], r, 1.0)], &g.volume).unwrap();
        let s = forward_parallel_2d(&img, &g).unwrap();
        for row in s.rows() {
            for (j, &v) in row.iter().enumerate() {
                let d = g.detector.coordinate(0, j);
                if d.abs() < r - 1.0 {
                    let want = 2.0 * (r * r - d * d).sqrt();
                    assert!((v - want).abs() <= 1.0 + 1e-9, "d={d} got {v} want {want}");
                }
            }
        }
    }

    fn fan(sid: f64, sdd: f64, det: usize, views: usize) -> FanGeometry2D {
        FanGeometry2D::new(
            VolumeSpec::new(&[32, 32], &[1.0, 1.0]).unwrap(),
            DetectorSpec::new(&[det], &[1.0]).unwrap(),
            views,
            2.0 * PI,
            sid,
            sdd,
        )
        .unwrap()
    }

    #[test]
    fn fan_central_ray_chord() {
        let g = fan(200.0, 400.0, 63, 8);
        let img = rasterize_primitives(&[Primitive::circle([0.0, 0.0], 10.0, 1.0)], &g.volume)
            .unwrap();
        let s = forward_fan_2d(&img, &g).unwrap();
        for row in s.rows() {
            assert!((row[31] - 20.0).abs() <= 1.0, "{}", row[31]);
        }
        assert!(forward_fan_2d(&Image::zeros(&g.volume), &g)
            .unwrap()
            .data
            .iter()
            .all(|&v| v == 0.0));
    }

    #[test]
    fn fan_backprojection_distance_weight() {
        let g = fan(100.0, 300.0, 200, 1);
        let c = 1.5;
        let sino = Sinogram::from_data(&[1, 200], &[1.0], vec![c; 200]).unwrap();
        let img = backproject_fan_2d(&sino, &g).unwrap();
        // view 0: central ray +x, so depth = SID + x; U = (SID + x)/SID
        for iy in [0usize, 7, 16, 31] {
            for ix in [0usize, 5, 16, 31] {
                let x = g.volume.coordinate(1, ix);
                let u_big = (100.0 + x) / 100.0;
                let want = c / (u_big * u_big);
                assert!((img.data[iy * 32 + ix] - want).abs() < 1e-12);
            }
        }
        let zero = backproject_fan_2d(&Sinogram::zeros(&[1, 200], &[1.0]), &g).unwrap();
        assert!(zero.data.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn fan_iso_center_sums_views() {
        let mut g = fan(100.0, 300.0, 41, 7);
        g.volume = VolumeSpec::new(&[33, 33], &[1.0, 1.0]).unwrap();
        let sino = Sinogram::from_data(&[7, 41], &[1.0], vec![0.5; 7 * 41]).unwrap();
        let img = backproject_fan_2d(&sino, &g).unwrap();
        assert!((img.data[16 * 33 + 16] - 3.5).abs() < 1e-12);
    }

    fn cone(n: usize, det: [usize; 2], views: usize) -> ConeGeometry3D {
        ConeGeometry3D::new(
            VolumeSpec::new(&[n, n, n], &[1.0; 3]).unwrap(),
            DetectorSpec::new(&det, &[1.0, 1.0]).unwrap(),
            views,
            2.0 * PI,
            200.0,
            400.0,
        )
        .unwrap()
    }

    #[test]
    fn cone_sphere_chord() {
        let g = cone(32, [65, 65], 4);
        let img = rasterize_primitives(&[Primitive::sphere([0.0; 3], 10.0, 1.0)], &g.volume).unwrap();
        let s = forward_cone_3d(&img, &g).unwrap();
        for v in 0..4 {
            let val = s.data[v * 65 * 65 + 32 * 65 + 32];
            assert!((val - 20.0).abs() <= 1.0, "{val}");
        }
    }

    #[test]
    fn cone_backprojection_matrix_oracle() {
        let g = cone(9, [64, 64], 3);
        let c = 2.0;
        let sino = Sinogram::from_data(&g.sinogram_shape(), &[1.0, 1.0], vec![c; 3 * 64 * 64]).unwrap();
        let img = backproject_cone_3d(&sino, &g).unwrap();
        // iso-center voxel: w = 1 in every view
        let mid = (4 * 9 + 4) * 9 + 4;
        assert!((img.data[mid] - 3.0 * c).abs() < 1e-12);
        // single view: c / w² with w from an explicit product
        let one = ConeGeometry3D::with_matrices(
            g.volume.clone(),
            g.detector.clone(),
            2.0 * PI,
            200.0,
            400.0,
            vec![g.projection_matrices[1].clone()],
        )
        .unwrap();
        let sino1 = Sinogram::from_data(&one.sinogram_shape(), &[1.0, 1.0], vec![c; 64 * 64]).unwrap();
        let img1 = backproject_cone_3d(&sino1, &one).unwrap();
        let p = one.projection_matrices[0].rows();
        for (iz, iy, ix) in [(0usize, 0usize, 0usize), (8, 3, 1), (2, 7, 6)] {
            let x = [
                one.volume.coordinate(2, ix),
                one.volume.coordinate(1, iy),
                one.volume.coordinate(0, iz),
            ];
            let w = (0..3).map(|k| p[2][k] * x[k]).sum::<f64>() + p[2][3];
            let rel = w / 200.0;
            let got = img1.data[(iz * 9 + iy) * 9 + ix];
            assert!((got - c / (rel * rel)).abs() < 1e-12, "{got}");
        }
    }

    #[test]
    fn cone_zero() {
        let g = cone(8, [10, 12], 3);
        let s = forward_cone_3d(&Image::zeros(&g.volume), &g).unwrap();
        assert!(s.data.iter().all(|&v| v == 0.0));
        let b = backproject_cone_3d(&Sinogram::zeros(&g.sinogram_shape(), &[1.0, 1.0]), &g).unwrap();
        assert!(b.data.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn lerp_zero_edges() {
        let row = [1.0, 2.0, 3.0];
        assert_eq!(lerp_zero(&row, 0.0), 1.0);
        assert_eq!(lerp_zero(&row, 0.5), 1.5);
        assert_eq!(lerp_zero(&row, -0.5), 0.5);
        assert_eq!(lerp_zero(&row, 2.5), 1.5);
        assert_eq!(lerp_zero(&row, 3.5), 0.0);
    }
}
