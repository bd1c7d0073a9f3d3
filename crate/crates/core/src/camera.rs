//! Depth-map unprojection and vehicle region-of-interest extraction.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{camera_to_ego, Point2, Point3, RigidTransform};
use crate::sensor::{CameraIntrinsics, DepthGrid, SegMask};

/// Integer pixel coordinate `(u, v)`: column then row.
pub type Pixel = (usize, usize);

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DepthPoint {
    pub pixel: Pixel,
    pub point: Point3,
}

/// Unprojected depth pixels in the camera optical frame. Every point has
/// `z > 0`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct DepthPointCloud {
    pub points: Vec<DepthPoint>,
}

impl DepthPointCloud {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Height band (ego frame, meters) kept when projecting the vehicle cloud to
/// the ground plane.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HeightBand {
    pub min: f64,
    pub max: f64,
}

impl Default for HeightBand {
    fn default() -> Self {
        HeightBand { min: 0.2, max: 2.2 }
    }
}

impl HeightBand {
    pub fn contains(&self, z: f64) -> bool {
        z >= self.min && z <= self.max
    }
}

fn check_dims(width: usize, height: usize, k: &CameraIntrinsics) -> Result<()> {
    if width != k.width || height != k.height {
        return Err(Error::Config(format!(
            "grid is {width}x{height} but intrinsics describe {}x{}",
            k.width, k.height
        )));
    }
    Ok(())
}

fn unproject_pixel(u: usize, v: usize, d: f64, k: &CameraIntrinsics) -> Point3 {
    Point3 {
        x: d * (u as f64 - k.cx) / k.fx,
        y: d * (v as f64 - k.cy) / k.fy,
        z: d,
    }
}

/// Pinhole unprojection of every valid-depth pixel, or only of `pixels` when
/// given. Invalid depths (`<= 0`) are skipped.
pub fn unproject(
    depth: &DepthGrid,
    k: &CameraIntrinsics,
    pixels: Option<&[Pixel]>,
) -> Result<DepthPointCloud> {
    check_dims(depth.width(), depth.height(), k)?;
    let mut points = Vec::new();
    let mut push = |u: usize, v: usize| {
        if depth.is_valid(u, v) {
            points.push(DepthPoint {
                pixel: (u, v),
                point: unproject_pixel(u, v, depth.get(u, v), k),
            });
        }
    };
    match pixels {
        Some(set) => {
            for &(u, v) in set {
                if u >= depth.width() || v >= depth.height() {
                    return Err(Error::Config(format!("pixel ({u}, {v}) out of bounds")));
                }
                push(u, v);
            }
        }
        None => {
            for v in 0..depth.height() {
                for u in 0..depth.width() {
                    push(u, v);
                }
            }
        }
    }
    Ok(DepthPointCloud { points })
}

/// Projects a camera-frame point to `(u, v, depth)`; `None` behind the camera.
pub fn project(p: Point3, k: &CameraIntrinsics) -> Option<(f64, f64, f64)> {
    if p.z <= 0.0 {
        return None;
    }
    Some((k.fx * p.x / p.z + k.cx, k.fy * p.y / p.z + k.cy, p.z))
}

/// Pixels whose mask value is 1, in row-major order.
pub fn vehicle_pixels(mask: &SegMask) -> Vec<Pixel> {
    let w = mask.width();
    mask.values()
        .iter()
        .enumerate()
        .filter(|(_, &m)| m == 1)
        .map(|(i, _)| (i % w, i / w))
        .collect()
}

/// Unprojects the masked vehicle pixels, moves them into the ego frame, keeps
/// those inside the height band and drops the height.
pub fn vehicle_depth_cloud(
    depth: &DepthGrid,
    mask: &SegMask,
    k: &CameraIntrinsics,
    extrinsics: &RigidTransform,
    band: &HeightBand,
) -> Result<Vec<Point2>> {
    if mask.width() != depth.width() || mask.height() != depth.height() {
        return Err(Error::Config(format!(
            "mask {}x{} does not match depth {}x{}",
            mask.width(),
            mask.height(),
            depth.width(),
            depth.height()
        )));
    }
    let pixels = vehicle_pixels(mask);
    let cloud = unproject(depth, k, Some(&pixels))?;
    let to_ego = extrinsics.inverse();
    Ok(cloud
        .points
        .iter()
        .map(|dp| to_ego.apply(dp.point))
        .filter(|p| band.contains(p.z))
        .map(Point3::ground)
        .collect())
}

/// Same as [`vehicle_depth_cloud`] but without the height band; exposed for
/// diagnostics and tests.
pub fn depth_cloud_to_ego(cloud: &DepthPointCloud, extrinsics: &RigidTransform) -> Vec<Point3> {
    cloud
        .points
        .iter()
        .map(|dp| camera_to_ego(dp.point, extrinsics))
        .collect()
}
