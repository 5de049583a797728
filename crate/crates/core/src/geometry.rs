//! Continuum mass models and their geometry factors.
//!
//! The geometry factor of a body is the Fourier transform of its classical
//! mass density, `mu(k) = ∫ d³x exp(-i k·x) rho(x)`. Every variant here has a
//! closed form. Bodies are centred on the origin before the rigid `offset` is
//! applied; a layered stack is layered along z with the first layer at the
//! bottom.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::GeometryError;
use crate::special::{jinc, sinc, sphere_kernel};
use crate::summation::{ComplexSum, NeumaierSum};

/// A complex geometry-factor value in kilograms.
pub type FormFactorValue = Complex64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Material {
    pub name: String,
    /// Mass density [kg/m³].
    pub density: f64,
}

impl Material {
    pub fn new(name: impl Into<String>, density: f64) -> Self {
        Self {
            name: name.into(),
            density,
        }
    }
}

/// A material as written in an experiment file: either a name resolved
/// through the file's material table, or an inline definition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MaterialRef {
    Named(String),
    Inline(Material),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layer<M = Material> {
    pub material: M,
    /// Thickness along z [m].
    pub thickness: f64,
}

/// Body shape. Generic over the material representation so the same type
/// serves both the unresolved file form and the resolved model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Shape<M = Material> {
    PointMass {
        mass: f64,
        #[serde(default)]
        position: [f64; 3],
    },
    Cuboid {
        lx: f64,
        ly: f64,
        lz: f64,
        material: M,
    },
    Sphere {
        radius: f64,
        material: M,
    },
    /// Cylinder with its axis along z.
    Cylinder {
        radius: f64,
        height: f64,
        material: M,
    },
    /// Rectangular cross-section `lx × ly`, layers stacked along z.
    LayeredStack {
        lx: f64,
        ly: f64,
        layers: Vec<Layer<M>>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MassModel<M = Material> {
    #[serde(flatten)]
    pub shape: Shape<M>,
    /// Rigid translation of the whole body [m].
    #[serde(default)]
    pub offset: [f64; 3],
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub const ALL: [Axis; 3] = [Axis::X, Axis::Y, Axis::Z];

    pub fn index(self) -> usize {
        match self {
            Axis::X => 0,
            Axis::Y => 1,
            Axis::Z => 2,
        }
    }
}

/// Wavevector [1/m].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Wavevector(pub [f64; 3]);

impl Wavevector {
    pub const ZERO: Wavevector = Wavevector([0.0; 3]);

    pub fn new(kx: f64, ky: f64, kz: f64) -> Self {
        Self([kx, ky, kz])
    }

    pub fn norm_sq(&self) -> f64 {
        self.0.iter().map(|c| c * c).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn dot(&self, x: &[f64; 3]) -> f64 {
        self.0[0] * x[0] + self.0[1] * x[1] + self.0[2] * x[2]
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|c| c.is_finite())
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self([self.0[0] * s, self.0[1] * s, self.0[2] * s])
    }
}

impl std::ops::Neg for Wavevector {
    type Output = Wavevector;
    fn neg(self) -> Wavevector {
        self.scaled(-1.0)
    }
}

#[inline]
fn phase(angle: f64) -> Complex64 {
    let (s, c) = angle.sin_cos();
    Complex64::new(c, -s)
}

impl MassModel {
    pub fn new(shape: Shape) -> Self {
        Self {
            shape,
            offset: [0.0; 3],
        }
    }

    pub fn point(mass: f64) -> Self {
        Self::new(Shape::PointMass {
            mass,
            position: [0.0; 3],
        })
    }

    pub fn cuboid(lx: f64, ly: f64, lz: f64, material: Material) -> Self {
        Self::new(Shape::Cuboid {
            lx,
            ly,
            lz,
            material,
        })
    }

    pub fn cube(edge: f64, material: Material) -> Self {
        Self::cuboid(edge, edge, edge, material)
    }

    pub fn sphere(radius: f64, material: Material) -> Self {
        Self::new(Shape::Sphere { radius, material })
    }

    pub fn cylinder(radius: f64, height: f64, material: Material) -> Self {
        Self::new(Shape::Cylinder {
            radius,
            height,
            material,
        })
    }

    pub fn stack(lx: f64, ly: f64, layers: Vec<Layer>) -> Self {
        Self::new(Shape::LayeredStack { lx, ly, layers })
    }

    /// The same body rigidly shifted by `a`.
    pub fn translated(&self, a: [f64; 3]) -> Self {
        let mut out = self.clone();
        for (o, d) in out.offset.iter_mut().zip(a) {
            *o += d;
        }
        out
    }

    /// Same shape with every density multiplied by `factor`.
    pub fn with_density_scaled(&self, factor: f64) -> Self {
        let scale = |m: &Material| Material::new(m.name.clone(), m.density * factor);
        let shape = match &self.shape {
            Shape::PointMass { mass, position } => Shape::PointMass {
                mass: mass * factor,
                position: *position,
            },
            Shape::Cuboid {
                lx,
                ly,
                lz,
                material,
            } => Shape::Cuboid {
                lx: *lx,
                ly: *ly,
                lz: *lz,
                material: scale(material),
            },
            Shape::Sphere { radius, material } => Shape::Sphere {
                radius: *radius,
                material: scale(material),
            },
            Shape::Cylinder {
                radius,
                height,
                material,
            } => Shape::Cylinder {
                radius: *radius,
                height: *height,
                material: scale(material),
            },
            Shape::LayeredStack { lx, ly, layers } => Shape::LayeredStack {
                lx: *lx,
                ly: *ly,
                layers: layers
                    .iter()
                    .map(|l| Layer {
                        material: scale(&l.material),
                        thickness: l.thickness,
                    })
                    .collect(),
            },
        };
        Self {
            shape,
            offset: self.offset,
        }
    }

    /// Same shape with every length multiplied by `factor` (masses follow
    /// the volume for continuum bodies; a point mass keeps its mass).
    pub fn with_lengths_scaled(&self, factor: f64) -> Self {
        let shape = match &self.shape {
            Shape::PointMass { mass, position } => Shape::PointMass {
                mass: *mass,
                position: position.map(|p| p * factor),
            },
            Shape::Cuboid {
                lx,
                ly,
                lz,
                material,
            } => Shape::Cuboid {
                lx: lx * factor,
                ly: ly * factor,
                lz: lz * factor,
                material: material.clone(),
            },
            Shape::Sphere { radius, material } => Shape::Sphere {
                radius: radius * factor,
                material: material.clone(),
            },
            Shape::Cylinder {
                radius,
                height,
                material,
            } => Shape::Cylinder {
                radius: radius * factor,
                height: height * factor,
                material: material.clone(),
            },
            Shape::LayeredStack { lx, ly, layers } => Shape::LayeredStack {
                lx: lx * factor,
                ly: ly * factor,
                layers: layers
                    .iter()
                    .map(|l| Layer {
                        material: l.material.clone(),
                        thickness: l.thickness * factor,
                    })
                    .collect(),
            },
        };
        Self {
            shape,
            offset: self.offset.map(|o| o * factor),
        }
    }

    /// Total mass [kg]; equals `mu_tilde(0)`.
    pub fn total_mass(&self) -> f64 {
        match &self.shape {
            Shape::PointMass { mass, .. } => *mass,
            Shape::Cuboid {
                lx,
                ly,
                lz,
                material,
            } => material.density * lx * ly * lz,
            Shape::Sphere { radius, material } => {
                material.density * 4.0 / 3.0 * std::f64::consts::PI * radius.powi(3)
            }
            Shape::Cylinder {
                radius,
                height,
                material,
            } => material.density * std::f64::consts::PI * radius * radius * height,
            Shape::LayeredStack { lx, ly, layers } => lx * ly * stack_areal_density(layers),
        }
    }

    /// Bounding-box edge lengths [m] of the body (zero for a point mass).
    pub fn extent(&self) -> [f64; 3] {
        match &self.shape {
            Shape::PointMass { .. } => [0.0; 3],
            Shape::Cuboid { lx, ly, lz, .. } => [*lx, *ly, *lz],
            Shape::Sphere { radius, .. } => [2.0 * radius; 3],
            Shape::Cylinder { radius, height, .. } => [2.0 * radius, 2.0 * radius, *height],
            Shape::LayeredStack { lx, ly, layers } => {
                [*lx, *ly, layers.iter().map(|l| l.thickness).sum()]
            }
        }
    }

    /// Centre of the bounding box in world coordinates.
    pub fn center(&self) -> [f64; 3] {
        match &self.shape {
            Shape::PointMass { position, .. } => [
                position[0] + self.offset[0],
                position[1] + self.offset[1],
                position[2] + self.offset[2],
            ],
            _ => self.offset,
        }
    }

    /// Mass density at world position `x` [kg/m³]; zero outside the body.
    /// Not meaningful for a point mass (returns zero).
    pub fn density_at(&self, x: [f64; 3]) -> f64 {
        let r = [
            x[0] - self.offset[0],
            x[1] - self.offset[1],
            x[2] - self.offset[2],
        ];
        match &self.shape {
            Shape::PointMass { .. } => 0.0,
            Shape::Cuboid {
                lx,
                ly,
                lz,
                material,
            } => {
                if r[0].abs() <= lx / 2.0 && r[1].abs() <= ly / 2.0 && r[2].abs() <= lz / 2.0 {
                    material.density
                } else {
                    0.0
                }
            }
            Shape::Sphere { radius, material } => {
                if r[0] * r[0] + r[1] * r[1] + r[2] * r[2] <= radius * radius {
                    material.density
                } else {
                    0.0
                }
            }
            Shape::Cylinder {
                radius,
                height,
                material,
            } => {
                if r[0] * r[0] + r[1] * r[1] <= radius * radius && r[2].abs() <= height / 2.0 {
                    material.density
                } else {
                    0.0
                }
            }
            Shape::LayeredStack { lx, ly, layers } => {
                if r[0].abs() > lx / 2.0 || r[1].abs() > ly / 2.0 {
                    return 0.0;
                }
                let total: f64 = layers.iter().map(|l| l.thickness).sum();
                let mut z = -total / 2.0;
                if r[2] < z {
                    return 0.0;
                }
                for l in layers {
                    z += l.thickness;
                    if r[2] <= z {
                        return l.material.density;
                    }
                }
                0.0
            }
        }
    }

    pub fn is_separable(&self) -> bool {
        matches!(
            self.shape,
            Shape::Cuboid { .. } | Shape::LayeredStack { .. }
        )
    }

    /// Geometry factor `mu(k)` [kg].
    pub fn mu_tilde(&self, k: Wavevector) -> FormFactorValue {
        self.normalized_form_factor(k) * self.total_mass()
    }

    /// `mu(k) / M`, a complex number of magnitude at most one.
    pub fn normalized_form_factor(&self, k: Wavevector) -> Complex64 {
        let [kx, ky, kz] = k.0;
        match &self.shape {
            Shape::PointMass { position, .. } => {
                let x = [
                    position[0] + self.offset[0],
                    position[1] + self.offset[1],
                    position[2] + self.offset[2],
                ];
                phase(k.dot(&x))
            }
            Shape::Cuboid { .. } | Shape::LayeredStack { .. } => {
                let fx = self.axis_factor(Axis::X, kx);
                let fy = self.axis_factor(Axis::Y, ky);
                let fz = self.axis_factor(Axis::Z, kz);
                fx * fy * fz
            }
            Shape::Sphere { radius, .. } => phase(k.dot(&self.offset)) * sphere_kernel(k.norm() * radius),
            Shape::Cylinder { radius, height, .. } => {
                let kperp = (kx * kx + ky * ky).sqrt();
                phase(k.dot(&self.offset)) * (jinc(kperp * radius) * sinc(kz * height / 2.0))
            }
        }
    }

    /// One-dimensional factor `f_axis(k_axis)` of a separable body, so that
    /// the normalized form factor is `f_x · f_y · f_z`. Includes the offset
    /// phase along that axis.
    pub fn separable_factor(&self, axis: Axis, k_axis: f64) -> Result<Complex64, GeometryError> {
        if !self.is_separable() {
            return Err(GeometryError::NotSeparable(self.kind_name()));
        }
        Ok(self.axis_factor(axis, k_axis))
    }

    // Caller guarantees a separable shape.
    fn axis_factor(&self, axis: Axis, k: f64) -> Complex64 {
        let i = axis.index();
        let shift = phase(k * self.offset[i]);
        match &self.shape {
            Shape::Cuboid { lx, ly, lz, .. } => {
                let l = [*lx, *ly, *lz][i];
                shift * sinc(k * l / 2.0)
            }
            Shape::LayeredStack { lx, ly, layers } => match axis {
                Axis::X => shift * sinc(k * lx / 2.0),
                Axis::Y => shift * sinc(k * ly / 2.0),
                Axis::Z => shift * stack_z_factor(layers, k),
            },
            _ => unreachable!("axis_factor on a non-separable shape"),
        }
    }

    pub fn kind_name(&self) -> &'static str {
        self.shape.kind_name()
    }
}

impl<M> Shape<M> {
    pub fn kind_name(&self) -> &'static str {
        match self {
            Shape::PointMass { .. } => "point_mass",
            Shape::Cuboid { .. } => "cuboid",
            Shape::Sphere { .. } => "sphere",
            Shape::Cylinder { .. } => "cylinder",
            Shape::LayeredStack { .. } => "layered_stack",
        }
    }
}

/// Σ ρ_j t_j over the layers [kg/m²].
pub fn stack_areal_density(layers: &[Layer]) -> f64 {
    layers
        .iter()
        .map(|l| l.material.density * l.thickness)
        .collect::<NeumaierSum>()
        .value()
}

/// Normalized z-factor of a layer stack centred on z = 0:
/// `Σ_j ρ_j t_j exp(-i k c_j) sinc(k t_j / 2) / Σ_j ρ_j t_j`.
fn stack_z_factor(layers: &[Layer], k: f64) -> Complex64 {
    let total: f64 = layers.iter().map(|l| l.thickness).sum();
    let mut z = -total / 2.0;
    let mut num = ComplexSum::new();
    let mut den = NeumaierSum::new();
    for l in layers {
        let c = z + l.thickness / 2.0;
        let w = l.material.density * l.thickness;
        num.add(phase(k * c) * (w * sinc(k * l.thickness / 2.0)));
        den.add(w);
        z += l.thickness;
    }
    num.value() / den.value()
}
