//! Independent reference computations shared by the integration tests and
//! the acceptance suite. Nothing here calls the library's own geometry.
#![allow(dead_code)]

use nalgebra::Vector3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type P = Vector3<f64>;

pub fn random_unit(rng: &mut impl Rng) -> P {
    loop {
        let p = P::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        let n = p.norm();
        if n > 1e-3 && n <= 1.0 {
            return p / n;
        }
    }
}

fn nearest_distance(sites: &[P], q: &P) -> f64 {
    sites.iter().map(|s| (s - q).norm()).fold(f64::INFINITY, f64::min)
}

/// Covering radius by uniform sampling followed by local ascent of the
/// nearest-site distance from the best samples.
pub fn covering_radius_oracle(sites: &[P], samples: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut scored: Vec<(f64, P)> = (0..samples)
        .map(|_| {
            let q = random_unit(&mut rng);
            (nearest_distance(sites, &q), q)
        })
        .collect();
    scored.sort_by(|a, b| b.0.total_cmp(&a.0));
    let mut best = scored[0].0;
    for &(d0, q0) in scored.iter().take(64) {
        let (mut d, mut q) = (d0, q0);
        let mut step = 0.02;
        while step > 1e-10 {
            let mut improved = false;
            for _ in 0..24 {
                let c = (q + step * random_unit(&mut rng)).normalize();
                let dc = nearest_distance(sites, &c);
                if dc > d {
                    (d, q) = (dc, c);
                    improved = true;
                }
            }
            if !improved {
                step *= 0.5;
            }
        }
        best = best.max(d);
    }
    best
}

/// Geodesic sphere by `levels` midpoint subdivisions of the octahedron,
/// faces counter-clockwise seen from outside.
pub fn geodesic_sphere(levels: usize) -> (Vec<P>, Vec<[usize; 3]>) {
    let mut v = vec![P::x(), -P::x(), P::y(), -P::y(), P::z(), -P::z()];
    let mut f: Vec<[usize; 3]> =
        vec![[0, 2, 4], [2, 1, 4], [1, 3, 4], [3, 0, 4], [2, 0, 5], [1, 2, 5], [3, 1, 5], [0, 3, 5]];
    for _ in 0..levels {
        let mut mid = std::collections::HashMap::new();
        let mut next = Vec::new();
        let mut midpoint = |a: usize, b: usize, v: &mut Vec<P>| {
            *mid.entry((a.min(b), a.max(b))).or_insert_with(|| {
                v.push(((v[a] + v[b]) / 2.0).normalize());
                v.len() - 1
            })
        };
        for [a, b, c] in f {
            let ab = midpoint(a, b, &mut v);
            let bc = midpoint(b, c, &mut v);
            let ca = midpoint(c, a, &mut v);
            next.extend([[a, ab, ca], [ab, b, bc], [ca, bc, c], [ab, bc, ca]]);
        }
        f = next;
    }
    (v, f)
}

/// Möller–Trumbore: ray parameter and the orientation sign of the crossing,
/// or `None` when the ray grazes an edge or the face plane.
fn ray_triangle(o: &P, d: &P, a: &P, b: &P, c: &P) -> Result<Option<(f64, i64)>, ()> {
    let e1 = b - a;
    let e2 = c - a;
    let h = d.cross(&e2);
    let det = e1.dot(&h);
    if det.abs() < 1e-12 {
        return Ok(None);
    }
    let s = o - a;
    let u = s.dot(&h) / det;
    let qv = s.cross(&e1);
    let v = d.dot(&qv) / det;
    let t = e2.dot(&qv) / det;
    let tol = 1e-9;
    if u < -tol || v < -tol || u + v > 1.0 + tol || t <= 0.0 {
        return Ok(None);
    }
    if u < tol || v < tol || u + v > 1.0 - tol || t < tol {
        return Err(());
    }
    // outward normal e1 × e2 against the ray direction: leaving the inside counts +1
    Ok(Some((t, if det < 0.0 { 1 } else { -1 })))
}

/// Signed crossings of a ray from `o` along `d`; `None` for a grazing ray.
pub fn ray_cast_winding(vertices: &[P], faces: &[[usize; 3]], o: &P, d: &P) -> Option<i64> {
    let mut w = 0;
    for f in faces {
        match ray_triangle(o, d, &vertices[f[0]], &vertices[f[1]], &vertices[f[2]]) {
            Ok(Some((_, s))) => w += s,
            Ok(None) => {}
            Err(()) => return None,
        }
    }
    Some(w)
}

/// Piecewise-linear motion with `segments` uniform pieces and random nodes
/// in `[-1, 1]³`.
pub fn random_frames(n: usize, segments: usize, rng: &mut impl Rng) -> Vec<Vec<P>> {
    (0..=segments)
        .map(|_| (0..n).map(|_| P::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect())
        .collect()
}

/// Position of robot `i` at time `t` along uniform breakpoints on `[0, 1]`.
pub fn frames_at(frames: &[Vec<P>], i: usize, t: f64) -> P {
    let m = frames.len() - 1;
    let x = (t * m as f64).clamp(0.0, m as f64);
    let k = (x.floor() as usize).min(m - 1);
    let s = x - k as f64;
    frames[k][i] + (frames[k + 1][i] - frames[k][i]) * s
}

/// First of `samples + 1` uniform sample times at which an edge is at least
/// `delta` long.
pub fn first_break_dense(frames: &[Vec<P>], edges: &[(usize, usize)], delta: f64, samples: usize) -> Option<f64> {
    (0..=samples).map(|k| k as f64 / samples as f64).find(|&t| {
        edges.iter().any(|&(i, j)| (frames_at(frames, i, t) - frames_at(frames, j, t)).norm() >= delta)
    })
}

/// Two star-shaped closed surfaces, the second possibly reversed.
pub fn random_complex(rng: &mut impl Rng) -> (Vec<P>, Vec<[usize; 3]>) {
    let (s, f) = geodesic_sphere(2);
    let mut v = Vec::new();
    let mut faces = Vec::new();
    for part in 0..2 {
        let c = if part == 0 { P::zeros() } else { P::new(rng.gen_range(-1.0..1.0), rng.gen_range(-0.5..0.5), 0.0) };
        let off = v.len();
        v.extend(s.iter().map(|d| c + d * rng.gen_range(0.5..1.2)));
        let flip = part == 1 && rng.gen_bool(0.5);
        faces.extend(f.iter().map(|&[a, b, c]| if flip { [off + a, off + c, off + b] } else { [off + a, off + b, off + c] }));
    }
    (v, faces)
}
