use nalgebra::{Isometry3, Matrix4, Perspective3, Point3, Vector3, Vector4};

use crate::change_engine::CameraPose;

/// View and projection transforms of a pinhole camera.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CameraMatrices {
    pub view: Matrix4<f64>,
    pub projection: Matrix4<f64>,
    pub eye: [f64; 3],
    pub near: f64,
    pub far: f64,
}

impl CameraMatrices {
    pub fn view_projection(&self) -> Matrix4<f64> {
        self.projection * self.view
    }

    /// Pixel coordinates (x right, y down, continuous; pixel centers at
    /// `k + 0.5`) and view depth of a world point in a `width`×`height`
    /// image. `None` behind the near plane.
    pub fn project(&self, p: [f64; 3], width: usize, height: usize) -> Option<([f64; 2], f64)> {
        let c = self.view_projection() * Vector4::new(p[0], p[1], p[2], 1.0);
        if c.w <= self.near {
            return None;
        }
        let (nx, ny) = (c.x / c.w, c.y / c.w);
        Some(([(nx + 1.0) * 0.5 * width as f64, (1.0 - ny) * 0.5 * height as f64], c.w))
    }
}

/// Unit vector from `look_at` towards the eye.
pub fn eye_direction(pose: &CameraPose) -> [f64; 3] {
    let (sa, ca) = pose.inclination_alpha.to_radians().sin_cos();
    let (sz, cz) = pose.azimuth.to_radians().sin_cos();
    [sa * cz, sa * sz, ca]
}

/// Camera at `look_at + altitude·(sin α cos az, sin α sin az, cos α)`
/// looking at `look_at`, with world north (+y) projected into the view
/// plane as image up. `near = altitude/100`, `far = 4·altitude`.
pub fn camera_matrices(pose: &CameraPose, width: usize, height: usize) -> CameraMatrices {
    let d = eye_direction(pose);
    let target = Point3::new(pose.look_at[0], pose.look_at[1], pose.look_at[2]);
    let eye = target + Vector3::new(d[0], d[1], d[2]) * pose.altitude;
    let forward = -Vector3::new(d[0], d[1], d[2]);
    let north = Vector3::y();
    let up = (north - forward * north.dot(&forward)).normalize();
    let view = Isometry3::look_at_rh(&eye, &target, &up).to_homogeneous();
    let near = pose.altitude / 100.0;
    let far = 4.0 * pose.altitude;
    let projection = Perspective3::new(width as f64 / height as f64, pose.fov.to_radians(), near, far).to_homogeneous();
    CameraMatrices { view, projection, eye: [eye.x, eye.y, eye.z], near, far }
}
