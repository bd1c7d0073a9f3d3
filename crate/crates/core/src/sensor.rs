//! Radar and camera data products consumed by the pipeline.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Point2;

/// Motion tag that partitions a radar frame into static and dynamic returns.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Motion {
    Static,
    Dynamic,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RadarPoint {
    pub id: u32,
    pub position: Point2,
    pub motion: Motion,
}

/// One radar scan on the ground plane.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RadarFrame {
    pub timestamp: f64,
    pub points: Vec<RadarPoint>,
}

impl RadarFrame {
    pub fn static_points(&self) -> Vec<Point2> {
        self.positions(Motion::Static)
    }

    pub fn dynamic_points(&self) -> Vec<Point2> {
        self.positions(Motion::Dynamic)
    }

    fn positions(&self, motion: Motion) -> Vec<Point2> {
        self.points
            .iter()
            .filter(|p| p.motion == motion)
            .map(|p| p.position)
            .collect()
    }

    /// Splits the frame into its static and dynamic subsets.
    pub fn partition(&self) -> (Vec<RadarPoint>, Vec<RadarPoint>) {
        self.points.iter().partition(|p| p.motion == Motion::Static)
    }

    /// Checks finiteness and id uniqueness.
    pub fn validate(&self) -> Result<()> {
        if !self.timestamp.is_finite() {
            return Err(Error::Validation("non-finite frame timestamp".into()));
        }
        let mut ids: Vec<u32> = self.points.iter().map(|p| p.id).collect();
        ids.sort_unstable();
        if let Some(w) = ids.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::Validation(format!(
                "duplicate radar point id {} at t={}",
                w[0], self.timestamp
            )));
        }
        if let Some(p) = self.points.iter().find(|p| !p.position.is_finite()) {
            return Err(Error::Validation(format!(
                "non-finite radar point {}",
                p.id
            )));
        }
        Ok(())
    }
}

/// Checks that timestamps strictly increase across a sequence.
pub fn validate_sequence(frames: &[RadarFrame]) -> Result<()> {
    for f in frames {
        f.validate()?;
    }
    if let Some(w) = frames.windows(2).find(|w| w[1].timestamp <= w[0].timestamp) {
        return Err(Error::Validation(format!(
            "frame timestamps not strictly increasing: {} then {}",
            w[0].timestamp, w[1].timestamp
        )));
    }
    Ok(())
}

/// Pinhole intrinsics, in pixels.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "IntrinsicsRepr", into = "IntrinsicsRepr")]
pub struct CameraIntrinsics {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub width: usize,
    pub height: usize,
}

#[derive(Serialize, Deserialize)]
struct IntrinsicsRepr {
    fx: f64,
    fy: f64,
    cx: f64,
    cy: f64,
    width: usize,
    height: usize,
}

impl TryFrom<IntrinsicsRepr> for CameraIntrinsics {
    type Error = Error;
    fn try_from(r: IntrinsicsRepr) -> Result<Self> {
        CameraIntrinsics::try_new(r.fx, r.fy, r.cx, r.cy, r.width, r.height)
    }
}

impl From<CameraIntrinsics> for IntrinsicsRepr {
    fn from(k: CameraIntrinsics) -> Self {
        IntrinsicsRepr {
            fx: k.fx,
            fy: k.fy,
            cx: k.cx,
            cy: k.cy,
            width: k.width,
            height: k.height,
        }
    }
}

impl CameraIntrinsics {
    pub fn try_new(
        fx: f64,
        fy: f64,
        cx: f64,
        cy: f64,
        width: usize,
        height: usize,
    ) -> Result<Self> {
        let ok = fx.is_finite()
            && fy.is_finite()
            && fx > 0.0
            && fy > 0.0
            && cx >= 0.0
            && cy >= 0.0
            && cx < width as f64
            && cy < height as f64;
        if !ok {
            return Err(Error::Validation(format!(
                "invalid intrinsics fx={fx} fy={fy} cx={cx} cy={cy} size={width}x{height}"
            )));
        }
        Ok(CameraIntrinsics {
            fx,
            fy,
            cx,
            cy,
            width,
            height,
        })
    }

    /// Square-pixel intrinsics with a given horizontal field of view and the
    /// principal point at the image center.
    pub fn from_hfov(width: usize, height: usize, hfov: f64) -> Result<Self> {
        let cx = width as f64 / 2.0;
        let f = cx / (hfov / 2.0).tan();
        Self::try_new(f, f, cx, height as f64 / 2.0, width, height)
    }
}

/// Row-major metric depth. Values `<= 0` mark invalid pixels.
#[derive(Clone, Debug, PartialEq)]
pub struct DepthGrid {
    width: usize,
    height: usize,
    values: Vec<f64>,
}

impl DepthGrid {
    pub fn new(width: usize, height: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != width * height {
            return Err(Error::Config(format!(
                "depth grid {width}x{height} needs {} values, got {}",
                width * height,
                values.len()
            )));
        }
        Ok(DepthGrid {
            width,
            height,
            values,
        })
    }

    pub fn filled(width: usize, height: usize, value: f64) -> Self {
        DepthGrid {
            width,
            height,
            values: vec![value; width * height],
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, u: usize, v: usize) -> f64 {
        self.values[v * self.width + u]
    }

    pub fn set(&mut self, u: usize, v: usize, d: f64) {
        self.values[v * self.width + u] = d;
    }

    pub fn is_valid(&self, u: usize, v: usize) -> bool {
        let d = self.get(u, v);
        d.is_finite() && d > 0.0
    }
}

/// Row-major binary vehicle mask.
#[derive(Clone, Debug, PartialEq)]
pub struct SegMask {
    width: usize,
    height: usize,
    values: Vec<u8>,
}

impl SegMask {
    pub fn new(width: usize, height: usize, values: Vec<u8>) -> Result<Self> {
        if values.len() != width * height {
            return Err(Error::Config(format!(
                "mask {width}x{height} needs {} values, got {}",
                width * height,
                values.len()
            )));
        }
        if values.iter().any(|&v| v > 1) {
            return Err(Error::Validation("mask values must be 0 or 1".into()));
        }
        Ok(SegMask {
            width,
            height,
            values,
        })
    }

    pub fn empty(width: usize, height: usize) -> Self {
        SegMask {
            width,
            height,
            values: vec![0; width * height],
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn values(&self) -> &[u8] {
        &self.values
    }

    pub fn get(&self, u: usize, v: usize) -> bool {
        self.values[v * self.width + u] == 1
    }

    pub fn set(&mut self, u: usize, v: usize, on: bool) {
        self.values[v * self.width + u] = u8::from(on);
    }

    pub fn count(&self) -> usize {
        self.values.iter().filter(|&&v| v == 1).count()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn frame_from(tags: &[bool]) -> RadarFrame {
        RadarFrame {
            timestamp: 0.0,
            points: tags
                .iter()
                .enumerate()
                .map(|(i, &s)| RadarPoint {
                    id: i as u32,
                    position: Point2::new(i as f64, 0.0),
                    motion: if s { Motion::Static } else { Motion::Dynamic },
                })
                .collect(),
        }
    }

    proptest! {
        #[test]
        fn partition_is_disjoint_and_complete(tags in proptest::collection::vec(any::<bool>(), 0..64)) {
            let f = frame_from(&tags);
            let (s, d) = f.partition();
            prop_assert_eq!(s.len() + d.len(), f.points.len());
            prop_assert!(s.iter().all(|p| p.motion == Motion::Static));
            prop_assert!(d.iter().all(|p| p.motion == Motion::Dynamic));
            let mut ids: Vec<u32> = s.iter().chain(d.iter()).map(|p| p.id).collect();
            ids.sort_unstable();
            prop_assert_eq!(ids, (0..tags.len() as u32).collect::<Vec<_>>());
        }
    }

    #[test]
    fn duplicate_ids_rejected() {
        let mut f = frame_from(&[true, false]);
        f.points[1].id = 0;
        assert!(f.validate().is_err());
    }

    #[test]
    fn sequence_must_increase() {
        let a = RadarFrame {
            timestamp: 0.1,
            points: vec![],
        };
        let b = RadarFrame {
            timestamp: 0.1,
            points: vec![],
        };
        assert!(validate_sequence(&[a.clone(), b]).is_err());
        let c = RadarFrame {
            timestamp: 0.2,
            points: vec![],
        };
        assert!(validate_sequence(&[a, c]).is_ok());
    }

    #[test]
    fn intrinsics_bounds() {
        assert!(CameraIntrinsics::try_new(100.0, 100.0, 50.0, 50.0, 100, 100).is_ok());
        assert!(CameraIntrinsics::try_new(100.0, 100.0, 100.0, 50.0, 100, 100).is_err());
        assert!(CameraIntrinsics::try_new(0.0, 100.0, 50.0, 50.0, 100, 100).is_err());
    }

    #[test]
    fn grid_sizes_checked() {
        assert!(DepthGrid::new(2, 2, vec![1.0; 3]).is_err());
        assert!(SegMask::new(2, 2, vec![0, 1, 2, 0]).is_err());
    }
}
