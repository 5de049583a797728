#![allow(dead_code)]

use std::f64::consts::PI;

use csl_heat::geometry::{Layer, MassModel, Material, Shape, Wavevector};
use num_complex::Complex64;
use rand::Rng;

/// Gauss-Legendre nodes and weights on [-1, 1] by Newton iteration on P_n.
pub fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for j in 2..=n {
                let j = j as f64;
                let p2 = ((2.0 * j - 1.0) * x * p1 - (j - 1.0) * p0) / j;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 0 { 1.0 } else { p1 };
            let pm = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (x * pn - pm) / (x * x - 1.0);
            let dx = pn / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        out.push((x, 2.0 / ((1.0 - x * x) * dp * dp)));
    }
    out
}

/// Composite Gauss-Legendre rule on [a, b] with panels no wider than
/// `max_phase / freq` so each panel sees a bounded number of oscillations.
pub fn composite(a: f64, b: f64, freq: f64, max_phase: f64, rule: &[(f64, f64)]) -> Vec<(f64, f64)> {
    let panels = ((freq * (b - a)).abs() / max_phase).ceil().max(1.0) as usize;
    let h = (b - a) / panels as f64;
    let mut out = Vec::with_capacity(panels * rule.len());
    for p in 0..panels {
        let lo = a + p as f64 * h;
        for &(x, w) in rule {
            out.push((lo + 0.5 * h * (x + 1.0), 0.5 * h * w));
        }
    }
    out
}

fn phase(k: &[f64; 3], x: [f64; 3]) -> Complex64 {
    let arg = -(k[0] * x[0] + k[1] * x[1] + k[2] * x[2]);
    Complex64::new(arg.cos(), arg.sin())
}

/// Tensor-product Gauss-Legendre integral of `rho e^{-ik.x}` over an
/// axis-aligned box. The triple sum factorizes, so it is evaluated as the
/// product of the three 1D sums.
fn box_integral(k: &[f64; 3], lo: [f64; 3], hi: [f64; 3], rho: f64) -> Complex64 {
    let rule = gauss_legendre(20);
    let mut prod = Complex64::new(rho, 0.0);
    for a in 0..3 {
        let nodes = composite(lo[a], hi[a], k[a], 2.0, &rule);
        let s: Complex64 = nodes
            .iter()
            .map(|&(x, w)| w * Complex64::new((-k[a] * x).cos(), (-k[a] * x).sin()))
            .sum();
        prod *= s;
    }
    prod
}

/// Direct numerical Fourier transform of the body's density.
pub fn brute_mu(model: &MassModel, k: Wavevector) -> Complex64 {
    let kv = k.0;
    let c = model.offset;
    let shift = phase(&kv, c);
    let local = match &model.shape {
        Shape::PointMass { mass, position } => *mass * phase(&kv, *position),
        Shape::Cuboid { lx, ly, lz, material } => {
            let h = [lx / 2.0, ly / 2.0, lz / 2.0];
            box_integral(&kv, h.map(|v| -v), h, material.density)
        }
        Shape::LayeredStack { lx, ly, layers } => {
            let total: f64 = layers.iter().map(|l| l.thickness).sum();
            let mut z = -total / 2.0;
            let mut acc = Complex64::new(0.0, 0.0);
            for l in layers {
                acc += box_integral(&kv, [-lx / 2.0, -ly / 2.0, z], [lx / 2.0, ly / 2.0, z + l.thickness], l.material.density);
                z += l.thickness;
            }
            acc
        }
        Shape::Sphere { radius, material } => {
            let kn = k.norm();
            let rule = gauss_legendre(24);
            let rs = composite(0.0, *radius, kn, 2.0, &rule);
            let cs = composite(-1.0, 1.0, kn * radius, 2.0, &rule);
            let nphi = (kn * radius) as usize + 40;
            let mut acc = Complex64::new(0.0, 0.0);
            for &(r, wr) in &rs {
                for &(ct, wc) in &cs {
                    let st = (1.0 - ct * ct).sqrt();
                    let mut ring = Complex64::new(0.0, 0.0);
                    for j in 0..nphi {
                        let phi = 2.0 * PI * j as f64 / nphi as f64;
                        ring += phase(&kv, [r * st * phi.cos(), r * st * phi.sin(), r * ct]);
                    }
                    acc += wr * wc * r * r * ring * (2.0 * PI / nphi as f64);
                }
            }
            material.density * acc
        }
        Shape::Cylinder { radius, height, material } => {
            let kp = kv[0].hypot(kv[1]);
            let rule = gauss_legendre(24);
            let rs = composite(0.0, *radius, kp, 2.0, &rule);
            let zs = composite(-height / 2.0, height / 2.0, kv[2], 2.0, &rule);
            let nphi = (kp * radius) as usize + 40;
            let mut acc = Complex64::new(0.0, 0.0);
            for &(z, wz) in &zs {
                for &(r, wr) in &rs {
                    let mut ring = Complex64::new(0.0, 0.0);
                    for j in 0..nphi {
                        let phi = 2.0 * PI * j as f64 / nphi as f64;
                        ring += phase(&kv, [r * phi.cos(), r * phi.sin(), z]);
                    }
                    acc += wz * wr * r * ring * (2.0 * PI / nphi as f64);
                }
            }
            material.density * acc
        }
    };
    shift * local
}

pub fn si() -> Material {
    Material::new("Si", 2329.0)
}

/// A random body of size comparable to `scale`, randomly translated.
pub fn random_model(rng: &mut impl Rng, scale: f64) -> MassModel {
    fn len(rng: &mut impl Rng, scale: f64) -> f64 {
        scale * rng.random_range(0.05..2.0)
    }
    let rho = rng.random_range(100.0..25000.0);
    let mat = Material::new("m", rho);
    let model = match rng.random_range(0..5) {
        0 => MassModel::point(rng.random_range(1e-20..1e-15)),
        1 => MassModel::cuboid(len(rng, scale), len(rng, scale), len(rng, scale), mat),
        2 => MassModel::sphere(len(rng, scale) / 2.0, mat),
        3 => MassModel::cylinder(len(rng, scale) / 2.0, len(rng, scale), mat),
        _ => {
            let n = rng.random_range(1..8);
            let layers = (0..n)
                .map(|_| Layer {
                    material: Material::new("l", rng.random_range(100.0..25000.0)),
                    thickness: len(rng, scale) / n as f64,
                })
                .collect();
            MassModel::stack(len(rng, scale), len(rng, scale), layers)
        }
    };
    let off: [f64; 3] = std::array::from_fn(|_| scale * rng.random_range(-3.0..3.0));
    model.translated(off)
}

/// A random wavevector with `|k| r_c <= kmax_u`.
pub fn random_k(rng: &mut impl Rng, r_c: f64, kmax_u: f64) -> Wavevector {
    loop {
        let v: [f64; 3] = std::array::from_fn(|_| rng.random_range(-1.0..1.0));
        let n2 = v[0] * v[0] + v[1] * v[1] + v[2] * v[2];
        if n2 <= 1.0 && n2 > 1e-6 {
            return Wavevector(v.map(|x| x * kmax_u / r_c));
        }
    }
}

/// Relative difference of `a` from the reference `b`.
pub fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}
