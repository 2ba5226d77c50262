//! Scan geometries and circular trajectories.
//!
//! 2D geometries describe each view by its central-ray unit vector
//! `(cos θ, sin θ)`. The detector axis of a view is that vector rotated by
//! +90°. Cone-beam views are described by 3×4 projection matrices that map
//! homogeneous world points `(x, y, z, 1)` to homogeneous detector pixel
//! indices `(u·w, v·w, w)`, where `u` runs along detector columns and `v`
//! along detector rows.

use std::f64::consts::PI;

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Voxel grid placement in world coordinates (millimetres).
#[derive(Clone, Debug, PartialEq)]
pub struct VolumeSpec {
    shape: Vec<usize>,
    spacing: Vec<f64>,
    origin: Vec<f64>,
}

/// Detector pixel grid. 2D geometries use one axis, cone-beam uses
/// `[rows, cols]`.
#[derive(Clone, Debug, PartialEq)]
pub struct DetectorSpec {
    shape: Vec<usize>,
    spacing: Vec<f64>,
    origin: Vec<f64>,
}

fn centered_origin(shape: &[usize], spacing: &[f64]) -> Vec<f64> {
    shape
        .iter()
        .zip(spacing)
        .map(|(&n, &s)| -((n as f64) - 1.0) * s / 2.0)
        .collect()
}

fn validate_grid(what: &str, shape: &[usize], spacing: &[f64], origin: &[f64]) -> Result<()> {
    if shape.is_empty() || shape.len() != spacing.len() || shape.len() != origin.len() {
        return Err(Error::InvalidArgument(format!(
            "{what}: shape, spacing and origin must have the same non-zero length"
        )));
    }
    if shape.contains(&0) {
        return Err(Error::InvalidArgument(format!(
            "{what}: shape entries must be >= 1, got {shape:?}"
        )));
    }
    if spacing.iter().any(|&s| !(s > 0.0 && s.is_finite())) {
        return Err(Error::InvalidArgument(format!(
            "{what}: spacing entries must be > 0, got {spacing:?}"
        )));
    }
    if origin.iter().any(|o| !o.is_finite()) {
        return Err(Error::InvalidArgument(format!("{what}: origin must be finite")));
    }
    Ok(())
}

macro_rules! grid_spec_impl {
    ($ty:ident, $what:literal) => {
        impl $ty {
            /// Grid centered on the iso-center.
            pub fn new(shape: &[usize], spacing: &[f64]) -> Result<Self> {
                if shape.len() != spacing.len() {
                    return Err(Error::InvalidArgument(format!(
                        "{}: shape and spacing lengths differ",
                        $what
                    )));
                }
                let origin = centered_origin(shape, spacing);
                Self::with_origin(shape, spacing, &origin)
            }

            pub fn with_origin(shape: &[usize], spacing: &[f64], origin: &[f64]) -> Result<Self> {
                validate_grid($what, shape, spacing, origin)?;
                Ok(Self {
                    shape: shape.to_vec(),
                    spacing: spacing.to_vec(),
                    origin: origin.to_vec(),
                })
            }

            pub fn shape(&self) -> &[usize] {
                &self.shape
            }

            pub fn spacing(&self) -> &[f64] {
                &self.spacing
            }

            pub fn origin(&self) -> &[f64] {
                &self.origin
            }

            pub fn ndim(&self) -> usize {
                self.shape.len()
            }

            /// Number of elements.
            pub fn len(&self) -> usize {
                self.shape.iter().product()
            }

            pub fn is_empty(&self) -> bool {
                self.len() == 0
            }

            /// World coordinate of the center of element `index` along `axis`.
            pub fn coordinate(&self, axis: usize, index: usize) -> f64 {
                self.origin[axis] + index as f64 * self.spacing[axis]
            }
        }
    };
}

grid_spec_impl!(VolumeSpec, "volume");
grid_spec_impl!(DetectorSpec, "detector");

/// Evenly spaced view angles `i · range / n`, endpoint excluded.
pub fn view_angles(n_projections: usize, angular_range: f64) -> Result<Vec<f64>> {
    if n_projections == 0 {
        return Err(Error::InvalidArgument("n_projections must be >= 1".into()));
    }
    if !(angular_range > 0.0 && angular_range.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "angular_range must be > 0, got {angular_range}"
        )));
    }
    let step = angular_range / n_projections as f64;
    Ok((0..n_projections).map(|i| i as f64 * step).collect())
}

/// Central-ray unit vectors of a circular 2D scan.
pub fn circular_trajectory_2d(n_projections: usize, angular_range: f64) -> Result<Vec<[f64; 2]>> {
    Ok(view_angles(n_projections, angular_range)?
        .into_iter()
        .map(|t| [t.cos(), t.sin()])
        .collect())
}

/// Detector axis of a 2D view: the central ray rotated by +90°.
#[inline]
pub(crate) fn detector_axis(ray: [f64; 2]) -> [f64; 2] {
    [-ray[1], ray[0]]
}

fn validate_rays(rays: &[[f64; 2]], n_projections: usize) -> Result<()> {
    if rays.len() != n_projections {
        return Err(Error::Geometry(format!(
            "{} ray vectors for {} projections",
            rays.len(),
            n_projections
        )));
    }
    for r in rays {
        if ((r[0] * r[0] + r[1] * r[1]).sqrt() - 1.0).abs() >= 1e-9 {
            return Err(Error::Geometry(format!("ray vector {r:?} is not unit length")));
        }
    }
    Ok(())
}

fn validate_distances(sid: f64, sdd: f64) -> Result<()> {
    if !(sid > 0.0 && sid < sdd && sdd.is_finite()) {
        return Err(Error::Geometry(format!(
            "expected 0 < SID < SDD, got SID = {sid}, SDD = {sdd}"
        )));
    }
    Ok(())
}

#[derive(Clone, Debug)]
pub struct ParallelGeometry2D {
    pub volume: VolumeSpec,
    pub detector: DetectorSpec,
    pub n_projections: usize,
    pub angular_range: f64,
    pub ray_vectors: Vec<[f64; 2]>,
}

impl ParallelGeometry2D {
    pub fn new(
        volume: VolumeSpec,
        detector: DetectorSpec,
        n_projections: usize,
        angular_range: f64,
    ) -> Result<Self> {
        let ray_vectors = circular_trajectory_2d(n_projections, angular_range)?;
        Self::with_rays(volume, detector, angular_range, ray_vectors)
    }

    /// Geometry with explicitly supplied central-ray vectors.
    pub fn with_rays(
        volume: VolumeSpec,
        detector: DetectorSpec,
        angular_range: f64,
        ray_vectors: Vec<[f64; 2]>,
    ) -> Result<Self> {
        if volume.ndim() != 2 || detector.ndim() != 1 {
            return Err(Error::Geometry(
                "parallel 2D geometry needs a 2D volume and a 1D detector".into(),
            ));
        }
        validate_rays(&ray_vectors, ray_vectors.len())?;
        if ray_vectors.is_empty() {
            return Err(Error::InvalidArgument("n_projections must be >= 1".into()));
        }
        Ok(Self {
            volume,
            detector,
            n_projections: ray_vectors.len(),
            angular_range,
            ray_vectors,
        })
    }

    pub fn sinogram_shape(&self) -> Vec<usize> {
        vec![self.n_projections, self.detector.shape()[0]]
    }
}

#[derive(Clone, Debug)]
pub struct FanGeometry2D {
    pub volume: VolumeSpec,
    pub detector: DetectorSpec,
    pub n_projections: usize,
    pub angular_range: f64,
    pub ray_vectors: Vec<[f64; 2]>,
    pub sid: f64,
    pub sdd: f64,
}

impl FanGeometry2D {
    pub fn new(
        volume: VolumeSpec,
        detector: DetectorSpec,
        n_projections: usize,
        angular_range: f64,
        sid: f64,
        sdd: f64,
    ) -> Result<Self> {
        validate_distances(sid, sdd)?;
        if volume.ndim() != 2 || detector.ndim() != 1 {
            return Err(Error::Geometry(
                "fan 2D geometry needs a 2D volume and a 1D detector".into(),
            ));
        }
        let ray_vectors = circular_trajectory_2d(n_projections, angular_range)?;
        Ok(Self {
            volume,
            detector,
            n_projections,
            angular_range,
            ray_vectors,
            sid,
            sdd,
        })
    }

    pub fn sinogram_shape(&self) -> Vec<usize> {
        vec![self.n_projections, self.detector.shape()[0]]
    }
}

/// A 3×4 projection matrix, normalized so that the iso-center maps to
/// homogeneous depth `w = SID`.
#[derive(Clone, Debug, PartialEq)]
pub struct ProjectionMatrix {
    rows: [[f64; 4]; 3],
    m_inv: Matrix3<f64>,
    source: [f64; 3],
    sid: f64,
}

impl ProjectionMatrix {
    /// Builds a matrix from 12 row-major entries. Any global scale
    /// (including sign) is accepted; the matrix is rescaled so the depth of
    /// the iso-center equals `sid`.
    pub fn from_row_major(values: &[f64], sid: f64) -> Result<Self> {
        if values.len() != 12 {
            return Err(Error::Geometry(format!(
                "projection matrix needs 12 entries, got {}",
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) || !(sid > 0.0) {
            return Err(Error::Geometry("projection matrix entries must be finite".into()));
        }
        let iso_depth = values[11];
        if iso_depth.abs() < 1e-12 * values.iter().fold(0.0f64, |a, v| a.max(v.abs())) {
            return Err(Error::Geometry(
                "iso-center lies in the source plane of the projection matrix".into(),
            ));
        }
        let scale = sid / iso_depth;
        let mut rows = [[0.0; 4]; 3];
        for r in 0..3 {
            for c in 0..4 {
                rows[r][c] = values[4 * r + c] * scale;
            }
        }
        let m = Matrix3::new(
            rows[0][0], rows[0][1], rows[0][2], rows[1][0], rows[1][1], rows[1][2], rows[2][0],
            rows[2][1], rows[2][2],
        );
        let m_inv = m.try_inverse().ok_or_else(|| {
            Error::Geometry("projection matrix has a singular 3×3 block (rank < 3 or source at infinity)".into())
        })?;
        let p4 = Vector3::new(rows[0][3], rows[1][3], rows[2][3]);
        let c = -(m_inv * p4);
        Ok(Self {
            rows,
            m_inv,
            source: [c[0], c[1], c[2]],
            sid,
        })
    }

    pub fn rows(&self) -> &[[f64; 4]; 3] {
        &self.rows
    }

    pub fn to_row_major(&self) -> Vec<f64> {
        self.rows.iter().flatten().copied().collect()
    }

    /// Homogeneous image of a world point: `(u·w, v·w, w)`.
    #[inline]
    pub fn project(&self, p: [f64; 3]) -> [f64; 3] {
        let r = &self.rows;
        let mut out = [0.0; 3];
        for (k, row) in r.iter().enumerate() {
            out[k] = row[0] * p[0] + row[1] * p[1] + row[2] * p[2] + row[3];
        }
        out
    }

    /// Depth of `p` relative to the iso-center (1 at the iso-center).
    #[inline]
    pub fn relative_depth(&self, p: [f64; 3]) -> f64 {
        self.project(p)[2] / self.sid
    }

    /// Source position: the dehomogenized null space of the matrix.
    pub fn source(&self) -> [f64; 3] {
        self.source
    }

    /// Unit direction from the source towards detector pixel `(u, v)`.
    pub fn ray_direction(&self, u: f64, v: f64) -> [f64; 3] {
        let d = self.m_inv * Vector3::new(u, v, 1.0);
        let n = d.norm();
        [d[0] / n, d[1] / n, d[2] / n]
    }
}

/// Projection matrices of a circular cone-beam scan about the z axis.
///
/// View `i` places the source at `-SID · (cos θᵢ, sin θᵢ, 0)`. The detector
/// column axis is `(-sin θᵢ, cos θᵢ, 0)`, the row axis is +z, and the
/// principal point is the pixel index where the physical detector
/// coordinate is zero.
pub fn circular_trajectory_3d_cone(
    detector: &DetectorSpec,
    n_projections: usize,
    angular_range: f64,
    sid: f64,
    sdd: f64,
) -> Result<Vec<ProjectionMatrix>> {
    validate_distances(sid, sdd)?;
    if detector.ndim() != 2 {
        return Err(Error::Geometry("cone-beam detector must be 2D".into()));
    }
    let (sv, su) = (detector.spacing()[0], detector.spacing()[1]);
    let pv = -detector.origin()[0] / sv;
    let pu = -detector.origin()[1] / su;
    let fu = sdd / su;
    let fv = sdd / sv;
    view_angles(n_projections, angular_range)?
        .into_iter()
        .map(|theta| {
            let (s, c) = theta.sin_cos();
            let k = Matrix3::new(fu, 0.0, pu, 0.0, fv, pv, 0.0, 0.0, 1.0);
            // rows of R: detector column axis, detector row axis, central ray
            let rt = nalgebra::Matrix3x4::new(
                -s, c, 0.0, 0.0, //
                0.0, 0.0, 1.0, 0.0, //
                c, s, 0.0, sid,
            );
            let p = k * rt;
            let values: Vec<f64> = (0..3)
                .flat_map(|r| (0..4).map(move |c| (r, c)))
                .map(|(r, c)| p[(r, c)])
                .collect();
            ProjectionMatrix::from_row_major(&values, sid)
        })
        .collect()
}

#[derive(Clone, Debug)]
pub struct ConeGeometry3D {
    pub volume: VolumeSpec,
    pub detector: DetectorSpec,
    pub n_projections: usize,
    pub angular_range: f64,
    pub sid: f64,
    pub sdd: f64,
    pub projection_matrices: Vec<ProjectionMatrix>,
}

impl ConeGeometry3D {
    pub fn new(
        volume: VolumeSpec,
        detector: DetectorSpec,
        n_projections: usize,
        angular_range: f64,
        sid: f64,
        sdd: f64,
    ) -> Result<Self> {
        let matrices = circular_trajectory_3d_cone(&detector, n_projections, angular_range, sid, sdd)?;
        Self::with_matrices(volume, detector, angular_range, sid, sdd, matrices)
    }

    /// Geometry from externally supplied (e.g. calibrated) matrices. View
    /// angles for redundancy weighting are assumed evenly spaced over
    /// `angular_range`.
    pub fn with_matrices(
        volume: VolumeSpec,
        detector: DetectorSpec,
        angular_range: f64,
        sid: f64,
        sdd: f64,
        projection_matrices: Vec<ProjectionMatrix>,
    ) -> Result<Self> {
        validate_distances(sid, sdd)?;
        if volume.ndim() != 3 || detector.ndim() != 2 {
            return Err(Error::Geometry(
                "cone 3D geometry needs a 3D volume and a 2D detector".into(),
            ));
        }
        if projection_matrices.is_empty() {
            return Err(Error::InvalidArgument("n_projections must be >= 1".into()));
        }
        Ok(Self {
            volume,
            detector,
            n_projections: projection_matrices.len(),
            angular_range,
            sid,
            sdd,
            projection_matrices,
        })
    }

    pub fn sinogram_shape(&self) -> Vec<usize> {
        let d = self.detector.shape();
        vec![self.n_projections, d[0], d[1]]
    }
}

/// Any supported scan geometry.
#[derive(Clone, Debug)]
pub enum Geometry {
    Parallel2D(ParallelGeometry2D),
    Fan2D(FanGeometry2D),
    Cone3D(ConeGeometry3D),
}

impl Geometry {
    pub fn volume(&self) -> &VolumeSpec {
        match self {
            Geometry::Parallel2D(g) => &g.volume,
            Geometry::Fan2D(g) => &g.volume,
            Geometry::Cone3D(g) => &g.volume,
        }
    }

    pub fn detector(&self) -> &DetectorSpec {
        match self {
            Geometry::Parallel2D(g) => &g.detector,
            Geometry::Fan2D(g) => &g.detector,
            Geometry::Cone3D(g) => &g.detector,
        }
    }

    pub fn n_projections(&self) -> usize {
        match self {
            Geometry::Parallel2D(g) => g.n_projections,
            Geometry::Fan2D(g) => g.n_projections,
            Geometry::Cone3D(g) => g.n_projections,
        }
    }

    pub fn angular_range(&self) -> f64 {
        match self {
            Geometry::Parallel2D(g) => g.angular_range,
            Geometry::Fan2D(g) => g.angular_range,
            Geometry::Cone3D(g) => g.angular_range,
        }
    }

    pub fn sinogram_shape(&self) -> Vec<usize> {
        match self {
            Geometry::Parallel2D(g) => g.sinogram_shape(),
            Geometry::Fan2D(g) => g.sinogram_shape(),
            Geometry::Cone3D(g) => g.sinogram_shape(),
        }
    }

    pub fn kind(&self) -> GeometryKind {
        match self {
            Geometry::Parallel2D(_) => GeometryKind::Parallel2D,
            Geometry::Fan2D(_) => GeometryKind::Fan2D,
            Geometry::Cone3D(_) => GeometryKind::Cone3D,
        }
    }

    pub fn from_config(cfg: &GeometryConfig) -> Result<Self> {
        let volume = VolumeSpec::new(
            &cfg.volume_shape,
            &cfg.volume_spacing.expand(cfg.volume_shape.len()),
        )?;
        let detector = DetectorSpec::new(
            &cfg.detector_shape,
            &cfg.detector_spacing.expand(cfg.detector_shape.len()),
        )?;
        let range = cfg.angular_range_deg.to_radians();
        let need = |v: Option<f64>, name: &str| {
            v.ok_or_else(|| Error::Geometry(format!("`{name}` is required for {:?}", cfg.kind)))
        };
        Ok(match cfg.kind {
            GeometryKind::Parallel2D => Geometry::Parallel2D(ParallelGeometry2D::new(
                volume,
                detector,
                cfg.n_projections,
                range,
            )?),
            GeometryKind::Fan2D => Geometry::Fan2D(FanGeometry2D::new(
                volume,
                detector,
                cfg.n_projections,
                range,
                need(cfg.sid, "sid")?,
                need(cfg.sdd, "sdd")?,
            )?),
            GeometryKind::Cone3D => {
                let sid = need(cfg.sid, "sid")?;
                let sdd = need(cfg.sdd, "sdd")?;
                match &cfg.projection_matrices {
                    None => Geometry::Cone3D(ConeGeometry3D::new(
                        volume,
                        detector,
                        cfg.n_projections,
                        range,
                        sid,
                        sdd,
                    )?),
                    Some(mats) => {
                        if mats.len() != cfg.n_projections {
                            return Err(Error::Geometry(format!(
                                "{} projection matrices for n_projections = {}",
                                mats.len(),
                                cfg.n_projections
                            )));
                        }
                        let mats = mats
                            .iter()
                            .map(|m| ProjectionMatrix::from_row_major(m, sid))
                            .collect::<Result<Vec<_>>>()?;
                        Geometry::Cone3D(ConeGeometry3D::with_matrices(
                            volume, detector, range, sid, sdd, mats,
                        )?)
                    }
                }
            }
        })
    }

    /// Configuration describing this geometry. Cone-beam matrices are
    /// always written out explicitly.
    pub fn to_config(&self) -> GeometryConfig {
        let (sid, sdd, mats) = match self {
            Geometry::Parallel2D(_) => (None, None, None),
            Geometry::Fan2D(g) => (Some(g.sid), Some(g.sdd), None),
            Geometry::Cone3D(g) => (
                Some(g.sid),
                Some(g.sdd),
                Some(g.projection_matrices.iter().map(|m| m.to_row_major()).collect()),
            ),
        };
        GeometryConfig {
            kind: self.kind(),
            volume_shape: self.volume().shape().to_vec(),
            volume_spacing: Spacing::PerAxis(self.volume().spacing().to_vec()),
            detector_shape: self.detector().shape().to_vec(),
            detector_spacing: Spacing::PerAxis(self.detector().spacing().to_vec()),
            n_projections: self.n_projections(),
            angular_range_deg: self.angular_range().to_degrees(),
            sid,
            sdd,
            projection_matrices: mats,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum GeometryKind {
    #[serde(rename = "parallel2d")]
    Parallel2D,
    #[serde(rename = "fan2d")]
    Fan2D,
    #[serde(rename = "cone3d")]
    Cone3D,
}

/// Spacing given either once for all axes or per axis.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Spacing {
    Uniform(f64),
    PerAxis(Vec<f64>),
}

impl Spacing {
    pub fn expand(&self, ndim: usize) -> Vec<f64> {
        match self {
            Spacing::PerAxis(v) => v.clone(),
            Spacing::Uniform(s) => vec![*s; ndim],
        }
    }
}

/// JSON form of a geometry.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeometryConfig {
    #[serde(rename = "type")]
    pub kind: GeometryKind,
    pub volume_shape: Vec<usize>,
    pub volume_spacing: Spacing,
    pub detector_shape: Vec<usize>,
    pub detector_spacing: Spacing,
    pub n_projections: usize,
    pub angular_range_deg: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sid: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sdd: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub projection_matrices: Option<Vec<Vec<f64>>>,
}

/// Half of the full angular coverage needed beyond 180° for a short scan,
/// i.e. the half fan angle subtended by the detector.
pub fn half_fan_angle(detector_u: &DetectorSpec, sdd: f64) -> f64 {
    let axis = detector_u.ndim() - 1;
    let n = detector_u.shape()[axis];
    let s = detector_u.spacing()[axis];
    let lo = detector_u.coordinate(axis, 0) - s / 2.0;
    let hi = detector_u.coordinate(axis, n - 1) + s / 2.0;
    (lo.abs().max(hi.abs()) / sdd).atan()
}

/// Minimum angular range of a short scan: π plus the full fan angle.
pub fn short_scan_range(detector: &DetectorSpec, sdd: f64) -> f64 {
    PI + 2.0 * half_fan_angle(detector, sdd)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cone(sid: f64, sdd: f64, n: usize) -> (DetectorSpec, Vec<ProjectionMatrix>) {
        let det = DetectorSpec::new(&[96, 96], &[1.0, 1.0]).unwrap();
        let m = circular_trajectory_3d_cone(&det, n, 2.0 * PI, sid, sdd).unwrap();
        (det, m)
    }

    #[test]
    fn single_view_points_along_x() {
        let r = circular_trajectory_2d(1, PI).unwrap();
        assert_eq!(r, vec![[1.0, 0.0]]);
    }

    #[test]
    fn quarter_turns() {
        let r = circular_trajectory_2d(4, 2.0 * PI).unwrap();
        let want = [[1.0, 0.0], [0.0, 1.0], [-1.0, 0.0], [0.0, -1.0]];
        for (a, b) in r.iter().zip(want.iter()) {
            assert!((a[0] - b[0]).abs() < 1e-15 && (a[1] - b[1]).abs() < 1e-15);
        }
    }

    #[test]
    fn thirty_views_over_half_turn() {
        let r = circular_trajectory_2d(30, PI).unwrap();
        assert_eq!(r.len(), 30);
        for (i, v) in r.iter().enumerate() {
            let t = v[1].atan2(v[0]);
            assert!((t - i as f64 * PI / 30.0).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_zero_views() {
        assert!(circular_trajectory_2d(0, PI).is_err());
        assert!(view_angles(3, 0.0).is_err());
    }

    #[test]
    fn rejects_sid_beyond_sdd() {
        let det = DetectorSpec::new(&[8, 8], &[1.0, 1.0]).unwrap();
        assert!(circular_trajectory_3d_cone(&det, 4, PI, 1200.0, 1200.0).is_err());
        assert!(circular_trajectory_3d_cone(&det, 4, PI, 1300.0, 1200.0).is_err());
    }

    #[test]
    fn grid_validation() {
        assert!(VolumeSpec::new(&[0, 4], &[1.0, 1.0]).is_err());
        assert!(VolumeSpec::new(&[4, 4], &[1.0, 0.0]).is_err());
        let v = VolumeSpec::new(&[4, 3], &[1.0, 2.0]).unwrap();
        assert_eq!(v.origin(), &[-1.5, -2.0]);
        assert_eq!(v.coordinate(1, 2), 2.0);
    }

    #[test]
    fn iso_center_hits_principal_point() {
        let (_, mats) = cone(750.0, 1200.0, 12);
        for m in &mats {
            let h = m.project([0.0, 0.0, 0.0]);
            assert!((h[2] - 750.0).abs() < 1e-9);
            assert!((h[0] / h[2] - 47.5).abs() < 1e-9);
            assert!((h[1] / h[2] - 47.5).abs() < 1e-9);
        }
    }

    #[test]
    fn source_is_null_space() {
        let (_, mats) = cone(750.0, 1200.0, 17);
        for m in &mats {
            let c = m.source();
            let dist = (c[0] * c[0] + c[1] * c[1] + c[2] * c[2]).sqrt();
            assert!((dist - 750.0).abs() < 1e-9);
            let h = m.project(c);
            for v in h {
                assert!(v.abs() < 1e-9, "{h:?}");
            }
        }
    }

    #[test]
    fn explicit_krt_oracle() {
        // Independent K[R|t] product for θ = 0: R rows = (0,1,0), (0,0,1),
        // (1,0,0); t = (0, 0, SID); K = [[f,0,47.5],[0,f,47.5],[0,0,1]].
        let (_, mats) = cone(750.0, 1200.0, 4);
        let f = 1200.0;
        for p in [[10.0, 0.0, 0.0], [0.0, 10.0, 0.0], [3.0, -7.0, 12.0]] {
            let cam = [p[1], p[2], p[0] + 750.0];
            let u = (f * cam[0] + 47.5 * cam[2]) / cam[2];
            let v = (f * cam[1] + 47.5 * cam[2]) / cam[2];
            let h = mats[0].project(p);
            assert!((h[0] / h[2] - u).abs() < 1e-9);
            assert!((h[1] / h[2] - v).abs() < 1e-9);
        }
        // (10,0,0) lies on the central ray at θ = 0
        let h = mats[0].project([10.0, 0.0, 0.0]);
        assert!((h[0] / h[2] - 47.5).abs() < 1e-12);
        assert!((h[2] - 760.0).abs() < 1e-9);
    }

    #[test]
    fn ingested_scale_is_normalized() {
        let (_, mats) = cone(750.0, 1200.0, 3);
        let raw: Vec<f64> = mats[1].to_row_major().iter().map(|v| -3.7 * v).collect();
        let m = ProjectionMatrix::from_row_major(&raw, 750.0).unwrap();
        for (a, b) in m.to_row_major().iter().zip(mats[1].to_row_major()) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn singular_matrix_rejected() {
        let vals = [1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 5.0];
        assert!(ProjectionMatrix::from_row_major(&vals, 5.0).is_err());
    }

    #[test]
    fn ray_direction_points_to_pixel() {
        let (_, mats) = cone(750.0, 1200.0, 5);
        let m = &mats[3];
        let d = m.ray_direction(10.0, 80.0);
        let c = m.source();
        let p = [c[0] + 500.0 * d[0], c[1] + 500.0 * d[1], c[2] + 500.0 * d[2]];
        let h = m.project(p);
        assert!(h[2] > 0.0);
        assert!((h[0] / h[2] - 10.0).abs() < 1e-9);
        assert!((h[1] / h[2] - 80.0).abs() < 1e-9);
    }

    #[test]
    fn config_roundtrip() {
        let cfg: GeometryConfig = serde_json::from_str(
            r#"{"type":"fan2d","volume_shape":[32,32],"volume_spacing":1.0,
                "detector_shape":[48],"detector_spacing":[1.0],"n_projections":10,
                "angular_range_deg":360,"sid":500,"sdd":1000}"#,
        )
        .unwrap();
        let g = Geometry::from_config(&cfg).unwrap();
        assert_eq!(g.sinogram_shape(), vec![10, 48]);
        let back = Geometry::from_config(&g.to_config()).unwrap();
        assert_eq!(back.sinogram_shape(), g.sinogram_shape());
        let missing: GeometryConfig = serde_json::from_str(
            r#"{"type":"cone3d","volume_shape":[8,8,8],"volume_spacing":1.0,
                "detector_shape":[8,8],"detector_spacing":1.0,"n_projections":4,
                "angular_range_deg":360}"#,
        )
        .unwrap();
        assert!(Geometry::from_config(&missing).is_err());
    }

    #[test]
    fn half_fan_angle_from_detector_edges() {
        let det = DetectorSpec::new(&[96], &[4.0]).unwrap();
        let d = half_fan_angle(&det, 1200.0);
        assert!((d - (192.0f64 / 1200.0).atan()).abs() < 1e-12);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn rays_unit_and_monotone(n in 1usize..400, range in 0.01f64..7.0) {
                let rays = circular_trajectory_2d(n, range).unwrap();
                let angles = view_angles(n, range).unwrap();
                for r in &rays {
                    prop_assert!(((r[0]*r[0] + r[1]*r[1]).sqrt() - 1.0).abs() < 1e-9);
                }
                for w in angles.windows(2) {
                    prop_assert!(w[1] > w[0]);
                }
            }

            #[test]
            fn source_in_null_space(n in 1usize..40, sid in 100.0f64..1000.0, extra in 1.0f64..800.0) {
                let det = DetectorSpec::new(&[32, 40], &[1.5, 1.0]).unwrap();
                let mats = circular_trajectory_3d_cone(&det, n, 2.0 * PI, sid, sid + extra).unwrap();
                for m in &mats {
                    let h = m.project(m.source());
                    let scale = sid + extra;
                    for v in h { prop_assert!(v.abs() < 1e-9 * scale); }
                }
            }
        }
    }
}
