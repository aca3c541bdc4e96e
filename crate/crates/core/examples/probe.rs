use fobie::geometry::{Surface, SurfaceKind};
use fobie::mesh::{build_mesh, MeshConfig, PatchCounts};
use fobie::operators::apply::{apply_t0_scalar, eval_potential, OperatorNeeds, OperatorSet, PotentialKind, PotentialMode};
use fobie::operators::{OperatorCache, QuadOptions};
use fobie::special::{real_sph_harmonic, sph_derivative, sph_jn, sph_yn};
use nalgebra::Vector3;
use num_complex::Complex64 as C64;

fn main() {
    let s = Surface::new(SurfaceKind::UnitSphere { radius: 1.0 }).unwrap();
    let mesh = build_mesh(&s, &MeshConfig { q: 8, patches: PatchCounts::Uniform(2, 2), grading: None }).unwrap();
    let n = mesh.n_nodes();
    let mut cache = OperatorCache::new();
    let quad = QuadOptions::default();
    let k = std::f64::consts::PI;
    let needs = OperatorNeeds { s: true, maue0: true, ..Default::default() };
    let set = OperatorSet::build(&mut cache, &mesh, k, needs, &quad).unwrap();

    let y1: Vec<C64> = mesh.nodes.iter().map(|nd| {
        let p = nd.geom.position;
        C64::new(real_sph_harmonic(1, 1, p.z.clamp(-1.0,1.0).acos(), p.y.atan2(p.x)), 0.0)
    }).collect();

    // 1. T0[Y1] via Maue: print norms
    let t0v = apply_t0_scalar(&mesh, set.maue0.as_ref().unwrap(), &y1);
    let tnorm: f64 = t0v.iter().map(|c| c.norm()).fold(0.0, f64::max);
    let expect_max: f64 = y1.iter().map(|c| c.norm()).fold(0.0, f64::max) * 2.0 / 3.0;
    println!("max|T0 Y1| = {tnorm:.4e}, expected max ~{expect_max:.4e}");
    // sample pointwise ratio
    for i in [0usize, 100, 700] {
        println!("  node {i}: T0Y1 = {:.5} vs -2/3 Y1 = {:.5}", t0v[i].re, -2.0/3.0*y1[i].re);
    }

    // 2. Exterior single-layer potential of Y1 at 2*xhat vs series formula
    let mut dens = vec![C64::new(0.0, 0.0); 3 * n];
    dens[..n].copy_from_slice(&y1); // x-component only
    let xhat = Vector3::new(0.3, -0.5, 0.81).normalize();
    let tgt = xhat * 2.0;
    let vals = eval_potential(&mesh, PotentialKind::Single, PotentialMode::Value, k, &dens, &[tgt], &quad).unwrap();
    let j = sph_jn(3, k);
    let (j2, y2) = (sph_jn(3, 2.0 * k), sph_yn(3, 2.0 * k));
    let h1_2k = C64::new(j2[1], y2[1]);
    let series = C64::new(0.0, k) * j[1] * h1_2k
        * real_sph_harmonic(1, 1, (tgt.z/2.0).acos(), tgt.y.atan2(tgt.x));
    println!("S pot at 2xhat: {:.6}+{:.6}i vs series {:.6}+{:.6}i", vals[0][0].re, vals[0][0].im, series.re, series.im);

    // 3. on-surface S[Y1] at node 0 vs eigenvalue
    let mut out = vec![C64::new(0.0,0.0); n];
    match set.s.as_ref().unwrap().as_ref() {
        fobie::linalg::Mat::Complex(m) => m.matvec(&y1, &mut out),
        _ => unreachable!(),
    }
    let jj = sph_jn(2, k); let yy = sph_yn(2, k);
    let s1 = C64::new(0.0, k) * jj[1] * C64::new(jj[1], yy[1]);
    println!("S[Y1] node0: {:.6}+{:.6}i vs eig*Y1 {:.6}+{:.6}i (Y1={:.4})", out[0].re, out[0].im, (s1*y1[0]).re, (s1*y1[0]).im, y1[0].re);
}
