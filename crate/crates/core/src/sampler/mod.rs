//! Geometric sampling of the 3-D latent space.
//!
//! A horn torus (tube radius = half the outer radius) is centered on the
//! latent origin so that every tube circle touches it. Each longitude of the
//! torus is a closed latent loop that starts and ends at the origin, i.e. at
//! the neutral posture. Loops are densified with a cubic B-spline, paired with
//! a valence label and decoded frame by frame into animations.

mod bspline;
mod library;

pub use bspline::{bspline_densify, InterpolatingSpline, Point};
pub use library::{
    animation_name, decode_frames, decode_trajectory, generate_library, read_library,
    read_library_manifest, trajectories, write_library,
    GeneratedAnimation, GenerationSpec, GridKind, LibraryEntry, LibraryManifest, LIBRARY_MANIFEST,
};

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Latent dimension a grid's central axis is parallel to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub enum Axis {
    Ld1,
    Ld2,
    Ld3,
}

impl Axis {
    pub const ALL: [Axis; 3] = [Axis::Ld1, Axis::Ld2, Axis::Ld3];

    pub fn number(self) -> u8 {
        match self {
            Axis::Ld1 => 1,
            Axis::Ld2 => 2,
            Axis::Ld3 => 3,
        }
    }

    /// Maps a point given in the axis frame (third coordinate along the axis)
    /// to latent coordinates by cyclic permutation.
    pub fn place(self, p: Point) -> Point {
        match self {
            Axis::Ld3 => p,
            Axis::Ld1 => [p[2], p[0], p[1]],
            Axis::Ld2 => [p[1], p[2], p[0]],
        }
    }
}

impl TryFrom<u8> for Axis {
    type Error = Error;
    fn try_from(v: u8) -> Result<Self> {
        match v {
            1 => Ok(Axis::Ld1),
            2 => Ok(Axis::Ld2),
            3 => Ok(Axis::Ld3),
            _ => Err(Error::Invalid(format!("axis must be 1, 2 or 3, got {v}"))),
        }
    }
}

impl From<Axis> for u8 {
    fn from(a: Axis) -> u8 {
        a.number()
    }
}

impl std::fmt::Display for Axis {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "LD{}", self.number())
    }
}

/// `(sin a, 1 - cos a)` for `a = TAU * j / (n - 1)`, computed so that both
/// ends of the loop (`j = 0` and `j = n - 1`) give exactly `(0, 0)`.
fn loop_angle(j: usize, n: usize) -> (f64, f64) {
    let steps = (n - 1) as f64;
    let a = if 2 * j < n {
        TAU * j as f64 / steps
    } else {
        -TAU * (n - 1 - j) as f64 / steps
    };
    let half = (a / 2.0).sin();
    (a.sin(), 2.0 * half * half)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TorusGrid {
    /// Distance from the origin to the outermost point of the torus.
    pub radius: f64,
    pub axis: Axis,
    pub n_longitudes: usize,
    pub n_points: usize,
}

impl TorusGrid {
    pub fn new(radius: f64, axis: Axis) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::Invalid(format!("torus radius must be positive, got {radius}")));
        }
        Ok(TorusGrid {
            radius,
            axis,
            n_longitudes: 8,
            n_points: 20,
        })
    }

    /// Horn torus: the tube radius equals the distance from the axis to the
    /// tube center.
    pub fn tube_radius(&self) -> f64 {
        self.radius / 2.0
    }

    /// Toroidal angle of longitude `k`.
    pub fn longitude_angle(&self, k: usize) -> f64 {
        TAU * k as f64 / self.n_longitudes as f64
    }

    /// The `n_points` control points of longitude `k`, from the origin around
    /// the tube circle and back to the origin.
    ///
    /// With poloidal angle `theta_j = pi + 2 pi j / (n_points - 1)` a point is
    /// `(r (1 + cos theta) cos phi, r (1 + cos theta) sin phi, r sin theta)` in
    /// the axis frame, `r` being the tube radius.
    pub fn longitude(&self, k: usize) -> Result<Vec<Point>> {
        if k >= self.n_longitudes {
            return Err(Error::Invalid(format!(
                "longitude {k} out of range 0..{}",
                self.n_longitudes
            )));
        }
        if self.n_points < 4 {
            return Err(Error::Invalid("a longitude needs at least 4 points".into()));
        }
        let r = self.tube_radius();
        let phi = self.longitude_angle(k);
        let (sp, cp) = phi.sin_cos();
        Ok((0..self.n_points)
            .map(|j| {
                // theta = pi + a: cos theta = -cos a, sin theta = -sin a
                let (sin_a, one_minus_cos_a) = loop_angle(j, self.n_points);
                let radial = r * one_minus_cos_a;
                self.axis.place([
                    radial * cp + 0.0,
                    radial * sp + 0.0,
                    -r * sin_a + 0.0,
                ])
            })
            .collect())
    }
}

/// Great-circle longitudes of a sphere around the origin, all passing through
/// the pole on the third latent axis. Used as a comparison grid.
pub fn sphere_longitudes(radius: f64, n_longitudes: usize, n_points: usize) -> Result<Vec<Vec<Point>>> {
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(Error::Invalid(format!("sphere radius must be positive, got {radius}")));
    }
    if n_longitudes == 0 || n_points < 4 {
        return Err(Error::Invalid("need at least 1 longitude and 4 points".into()));
    }
    Ok((0..n_longitudes)
        .map(|k| {
            let phi = PI * k as f64 / n_longitudes as f64;
            let (sp, cp) = phi.sin_cos();
            (0..n_points)
                .map(|j| {
                    let (sin_a, one_minus_cos_a) = loop_angle(j, n_points);
                    let cos_a = 1.0 - one_minus_cos_a;
                    [
                        radius * sin_a * cp + 0.0,
                        radius * sin_a * sp + 0.0,
                        radius * cos_a,
                    ]
                })
                .collect()
        })
        .collect())
}

/// Dense latent path of one longitude.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatentTrajectory {
    pub control_points: Vec<Point>,
    pub dense_points: Vec<Point>,
    pub radius: f64,
    pub axis: Axis,
    pub longitude: usize,
    pub steps: usize,
}

impl LatentTrajectory {
    pub fn from_torus(grid: &TorusGrid, k: usize, steps: usize) -> Result<Self> {
        let control_points = grid.longitude(k)?;
        let dense_points = bspline_densify(&control_points, steps)?;
        Ok(LatentTrajectory {
            control_points,
            dense_points,
            radius: grid.radius,
            axis: grid.axis,
            longitude: k,
            steps,
        })
    }

    pub fn max_norm(&self) -> f64 {
        self.dense_points.iter().map(norm).fold(0.0, f64::max)
    }
}

pub fn norm(p: &Point) -> f64 {
    (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt()
}

/// Appends the constant label `c` to every dense point.
pub fn condition(trajectory: &LatentTrajectory, c: f64) -> Vec<[f64; 4]> {
    trajectory
        .dense_points
        .iter()
        .map(|p| [p[0], p[1], p[2], c])
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rotate_about(axis: Axis, p: Point, angle: f64) -> Point {
        // rotate in the axis frame, then map back
        let local = match axis {
            Axis::Ld3 => p,
            Axis::Ld1 => [p[1], p[2], p[0]],
            Axis::Ld2 => [p[2], p[0], p[1]],
        };
        let (s, c) = angle.sin_cos();
        axis.place([
            c * local[0] - s * local[1],
            s * local[0] + c * local[1],
            local[2],
        ])
    }

    #[test]
    fn loop_starts_and_ends_at_origin() {
        for axis in Axis::ALL {
            let g = TorusGrid::new(3.0, axis).unwrap();
            for k in 0..8 {
                let pts = g.longitude(k).unwrap();
                assert_eq!(pts.len(), 20);
                assert_eq!(pts[0], [0.0; 3]);
                assert_eq!(pts[19], [0.0; 3]);
            }
        }
    }

    #[test]
    fn max_control_norm_by_enumeration() {
        let g = TorusGrid::new(3.0, Axis::Ld3).unwrap();
        let pts = g.longitude(0).unwrap();
        let brute = (0..20)
            .map(|j| {
                let theta = PI + TAU * j as f64 / 19.0;
                1.5 * ((1.0 + theta.cos()).powi(2) + theta.sin().powi(2)).sqrt()
            })
            .fold(0.0, f64::max);
        let got = pts.iter().map(norm).fold(0.0, f64::max);
        assert!((got - brute).abs() < 1e-12);
        assert!(got < 3.0);
        // the outer point (R, 0, 0) lies on the continuous circle
        let centre = [1.5, 0.0, 0.0];
        let outer = [3.0, 0.0, 0.0];
        assert!((norm(&[outer[0] - centre[0], 0.0, 0.0]) - g.tube_radius()).abs() < 1e-15);
        for p in &pts {
            let d = norm(&[p[0] - centre[0], p[1] - centre[1], p[2] - centre[2]]);
            assert!((d - 1.5).abs() < 1e-12);
        }
    }

    #[test]
    fn longitudes_are_rotations_of_each_other() {
        for axis in Axis::ALL {
            let g = TorusGrid::new(4.0, axis).unwrap();
            let base = g.longitude(0).unwrap();
            for k in 1..8 {
                let pts = g.longitude(k).unwrap();
                let angle = g.longitude_angle(k) - g.longitude_angle(0);
                for (a, b) in base.iter().zip(&pts) {
                    let r = rotate_about(axis, *a, angle);
                    assert!(norm(&[r[0] - b[0], r[1] - b[1], r[2] - b[2]]) < 1e-12);
                }
            }
        }
    }

    #[test]
    fn axis_is_the_symmetry_axis() {
        let g = TorusGrid::new(5.0, Axis::Ld1).unwrap();
        // a quarter-turn longitude has no LD1 component at its widest point
        let pts = g.longitude(0).unwrap();
        assert!(pts.iter().all(|p| p[2].abs() < 1e-12));
    }

    #[test]
    fn invalid_inputs() {
        assert!(TorusGrid::new(0.0, Axis::Ld1).is_err());
        assert!(TorusGrid::new(3.0, Axis::Ld1).unwrap().longitude(8).is_err());
        assert!(Axis::try_from(4).is_err());
    }

    #[test]
    fn dense_trajectory_stays_inside_the_sphere() {
        for (r, steps) in [(3.0, 15), (4.0, 20), (5.0, 25)] {
            for axis in Axis::ALL {
                let g = TorusGrid::new(r, axis).unwrap();
                for k in 0..8 {
                    let t = LatentTrajectory::from_torus(&g, k, steps).unwrap();
                    assert_eq!(t.dense_points.len(), 19 * steps + 1);
                    assert!(norm(&t.dense_points[0]) < 1e-9);
                    assert!(norm(t.dense_points.last().unwrap()) < 1e-9);
                    let m = t.max_norm();
                    assert!(m <= r + 1e-9, "max norm {m} > {r}");
                    assert!(m >= 0.98 * r, "max norm {m} too far below {r}");
                }
            }
        }
    }

    #[test]
    fn sphere_grid() {
        let lons = sphere_longitudes(4.0, 8, 20).unwrap();
        assert_eq!(lons.len(), 8);
        assert_eq!(lons.iter().map(Vec::len).sum::<usize>(), 160);
        for l in &lons {
            assert_eq!(l[0], [0.0, 0.0, 4.0]);
            assert_eq!(l[19], [0.0, 0.0, 4.0]);
            for p in l {
                assert!((norm(p) - 4.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn conditioning_appends_label() {
        let g = TorusGrid::new(3.0, Axis::Ld3).unwrap();
        let t = LatentTrajectory::from_torus(&g, 2, 15).unwrap();
        let c0 = condition(&t, 0.0);
        assert_eq!(c0.len(), t.dense_points.len());
        assert!(c0.iter().all(|v| v[3] == 0.0));
        let c5 = condition(&t, 0.5);
        assert_eq!(c5.len(), 286);
        assert!(c5.iter().all(|v| v[3] == 0.5));
        assert_eq!(&c5[10][..3], &t.dense_points[10][..]);
    }
}
