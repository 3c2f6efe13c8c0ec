use std::f64::consts::PI;

use crate::{Error, Result, C64};

/// U-shaped obstacle: three walls of thickness `wall` around an interior of
/// `length x opening`, open on its left side.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cavity {
    /// Interior length along x (L_O).
    pub length: f64,
    /// Interior width along y, i.e. the opening (l_O).
    pub opening: f64,
    /// Wall thickness.
    pub wall: f64,
    /// Midpoint of the open edge; `None` centres the obstacle at the origin.
    pub anchor: Option<[f64; 2]>,
}

impl Cavity {
    /// Reference cavity, 1.3 x 0.4 with 0.1 walls.
    pub fn reference() -> Self {
        Self {
            length: 1.3,
            opening: 0.4,
            wall: 0.1,
            anchor: None,
        }
    }

    /// Midpoint of the open edge.
    pub fn open_edge_midpoint(&self) -> [f64; 2] {
        self.anchor.unwrap_or([-(self.length + self.wall) / 2.0, 0.0])
    }

    /// Interior rectangle `[x0, x1] x [y0, y1]`.
    pub fn interior(&self) -> [f64; 4] {
        let [x0, yc] = self.open_edge_midpoint();
        let h = self.opening / 2.0;
        [x0, x0 + self.length, yc - h, yc + h]
    }

    /// Bounding box of the obstacle including walls.
    pub fn outer(&self) -> [f64; 4] {
        let [x0, x1, y0, y1] = self.interior();
        [x0, x1 + self.wall, y0 - self.wall, y1 + self.wall]
    }

    /// True when the point lies inside one of the three walls.
    pub fn in_wall(&self, x: f64, y: f64) -> bool {
        let [ox0, ox1, oy0, oy1] = self.outer();
        let [ix0, ix1, iy0, iy1] = self.interior();
        let in_outer = x > ox0 && x < ox1 && y > oy0 && y < oy1;
        let in_inner = x >= ix0 && x < ix1 && y > iy0 && y < iy1;
        in_outer && !in_inner
    }
}

/// Geometry and physics of the cavity-scattering problem.
#[derive(Debug, Clone, PartialEq)]
pub struct GeometryParams {
    /// Half-length of the physical domain along x (L_x).
    pub half_width: f64,
    /// Half-length along y (L_y).
    pub half_height: f64,
    pub pml_thickness: f64,
    pub cavity: Option<Cavity>,
    /// Incident plane-wave angle in radians.
    pub incident_angle: f64,
    pub wavenumber: f64,
}

impl Default for GeometryParams {
    fn default() -> Self {
        Self {
            half_width: 2.0,
            half_height: 1.5,
            pml_thickness: 0.5,
            cavity: Some(Cavity::reference()),
            incident_angle: 4.0 * PI / 10.0,
            wavenumber: 1.0,
        }
    }
}

impl GeometryParams {
    pub fn validate(&self) -> Result<()> {
        let pos = [
            ("half_width", self.half_width),
            ("half_height", self.half_height),
            ("pml_thickness", self.pml_thickness),
            ("wavenumber", self.wavenumber),
        ];
        for (name, v) in pos {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Geometry(format!("{name} must be positive, got {v}")));
            }
        }
        if !self.incident_angle.is_finite() {
            return Err(Error::Geometry("incident angle must be finite".into()));
        }
        if let Some(c) = &self.cavity {
            for (name, v) in [("length", c.length), ("opening", c.opening), ("wall", c.wall)] {
                if !(v > 0.0 && v.is_finite()) {
                    return Err(Error::Geometry(format!("cavity {name} must be positive, got {v}")));
                }
            }
            let [x0, x1, y0, y1] = c.outer();
            if !(x0 > -self.half_width && x1 < self.half_width && y0 > -self.half_height && y1 < self.half_height) {
                return Err(Error::Geometry(format!(
                    "cavity [{x0}, {x1}] x [{y0}, {y1}] must lie strictly inside ({}, {}) x ({}, {})",
                    -self.half_width, self.half_width, -self.half_height, self.half_height
                )));
            }
        }
        Ok(())
    }

    /// Outer boundary of the padded box: `[x_max, y_max]`.
    pub fn outer_extent(&self) -> [f64; 2] {
        [self.half_width + self.pml_thickness, self.half_height + self.pml_thickness]
    }

    /// Incident plane wave `exp(i k (cos t x + sin t y))`.
    pub fn incident_wave(&self, x: f64, y: f64) -> C64 {
        let (s, c) = self.incident_angle.sin_cos();
        C64::new(0.0, self.wavenumber * (c * x + s * y)).exp()
    }

    /// Direction of propagation of the incident wave.
    pub fn incident_direction(&self) -> [f64; 2] {
        let (s, c) = self.incident_angle.sin_cos();
        [c, s]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    X,
    Y,
}

/// Complex coordinate stretch `gamma = 1 + i sigma / k` with the unbounded
/// profile `sigma = 1 / (L_pml - |x| + L)` inside the layer.
pub fn pml_stretch(coord: f64, axis: Axis, g: &GeometryParams) -> Result<C64> {
    let half = match axis {
        Axis::X => g.half_width,
        Axis::Y => g.half_height,
    };
    let a = coord.abs();
    if !(a < half + g.pml_thickness) {
        return Err(Error::Domain(coord));
    }
    if a <= half {
        return Ok(C64::new(1.0, 0.0));
    }
    let sigma = 1.0 / (g.pml_thickness - a + half);
    Ok(C64::new(1.0, sigma / g.wavenumber))
}

/// Mesh size giving `dofs_per_wavelength` Lagrange nodes of order `order`
/// per wavelength: `h = 2 pi p / (k n)`.
pub fn dofs_per_wavelength_to_h(dofs_per_wavelength: f64, wavenumber: f64, order: usize) -> f64 {
    2.0 * PI * order as f64 / (wavenumber * dofs_per_wavelength)
}
