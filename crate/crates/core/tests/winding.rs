mod oracles;

use oracles::{geodesic_sphere, random_complex, random_unit, ray_cast_winding, P};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use swarmnet_core::topology::{orient_faces, winding_number, OrientedComplex};

#[test]
fn solid_angle_agrees_with_ray_casting() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let mut compared = 0;
    for _ in 0..20 {
        let (v, f) = random_complex(&mut rng);
        let k = OrientedComplex::new(v.clone(), f.clone());
        for _ in 0..200 {
            let p = P::new(rng.gen_range(-2.0..2.0), rng.gen_range(-1.5..1.5), rng.gen_range(-1.5..1.5));
            let Some(ray) = (0..8).find_map(|_| ray_cast_winding(&v, &f, &p, &random_unit(&mut rng))) else {
                continue;
            };
            let w = winding_number(&k, &p).unwrap();
            assert!(w.residual < 1e-6);
            assert_eq!(w.winding, ray, "at {p:?}");
            compared += 1;
        }
    }
    assert_eq!(compared, 4000);
}

#[test]
fn orientation_is_recovered_from_scrambled_faces() {
    let (v, f) = geodesic_sphere(3);
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let scrambled: Vec<[usize; 3]> = f.iter().map(|&[a, b, c]| if rng.gen_bool(0.5) { [a, c, b] } else { [a, b, c] }).collect();
    let fixed = orient_faces(&OrientedComplex::new(v.clone(), scrambled)).unwrap();
    let inside = P::new(0.1, -0.2, 0.05);
    assert_eq!(winding_number(&fixed, &inside).unwrap().winding, 1);
    assert_eq!(ray_cast_winding(&v, &fixed.faces, &inside, &P::new(0.3, 0.5, 0.81).normalize()), Some(1));
}
