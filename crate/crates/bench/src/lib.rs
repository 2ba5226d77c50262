//! Fixtures shared by the benchmarks in `benches/`.

use std::f64::consts::PI;

use tomograd::geometry::{ConeGeometry3D, DetectorSpec, ParallelGeometry2D, VolumeSpec};
use tomograd::phantom::{shepp_logan_2d, shepp_logan_3d};
use tomograd::Image;

/// `n`² Shepp-Logan image with a 180-degree parallel scan of `views` views
/// and a detector covering the image diagonal.
pub fn parallel_case(n: usize, views: usize) -> (ParallelGeometry2D, Image) {
    let bins = (n as f64 * std::f64::consts::SQRT_2).ceil() as usize + 2;
    let geo = ParallelGeometry2D::new(
        VolumeSpec::new(&[n, n], &[1.0, 1.0]).expect("valid volume"),
        DetectorSpec::new(&[bins], &[1.0]).expect("valid detector"),
        views,
        PI,
    )
    .expect("valid geometry");
    let img = shepp_logan_2d(&geo.volume).expect("phantom");
    (geo, img)
}

/// `n`³ Shepp-Logan volume with a 220-degree cone-beam short scan.
pub fn cone_case(n: usize, views: usize) -> (ConeGeometry3D, Image) {
    let det = n * 3 / 2;
    let geo = ConeGeometry3D::new(
        VolumeSpec::new(&[n, n, n], &[1.0; 3]).expect("valid volume"),
        DetectorSpec::new(&[det, det], &[1.5, 1.5]).expect("valid detector"),
        views,
        220f64.to_radians(),
        10.0 * n as f64,
        15.0 * n as f64,
    )
    .expect("valid geometry");
    let img = shepp_logan_3d(&geo.volume).expect("phantom");
    (geo, img)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixtures_are_consistent() {
        let (g, img) = parallel_case(32, 10);
        assert_eq!(img.shape(), &[32, 32]);
        assert_eq!(g.sinogram_shape(), vec![10, 48]);
        let (c, vol) = cone_case(16, 8);
        assert_eq!(vol.shape(), &[16, 16, 16]);
        assert_eq!(c.sinogram_shape(), vec![8, 24, 24]);
    }
}
