use fraclap::fracfem::{assemble_stiffness, AssemblyConfig, ElementField, FieldLayout, FracParams, StiffnessMatrix};
use fraclap::mesh::{make_disc_mesh, refine_uniform, TriMesh};
use fraclap::solver::{load_vector, AdjointField, PdeSystem, StateField};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::function::gamma::gamma;

fn disc(level: usize) -> TriMesh {
    let mut m = make_disc_mesh(16).unwrap();
    for _ in 0..level {
        m = refine_uniform(&m).unwrap();
    }
    m
}

fn stiffness(mesh: &TriMesh, s: f64) -> StiffnessMatrix {
    assemble_stiffness(mesh, &FracParams::new(s).unwrap(), &AssemblyConfig::default()).unwrap()
}

fn random_control(mesh: &TriMesh, seed: u64, lo: f64, hi: f64) -> ElementField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    ElementField {
        layout: FieldLayout::PiecewiseConstant,
        values: (0..mesh.n_triangles()).map(|_| rng.random_range(lo..hi)).collect(),
    }
}

fn axpy(q: &ElementField, eps: f64, w: &ElementField) -> ElementField {
    ElementField {
        layout: q.layout,
        values: q.values.iter().zip(&w.values).map(|(a, b)| a + eps * b).collect(),
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Observed orders of a remainder sampled at `ε, ε/2, …`.
fn orders(errors: &[f64]) -> Vec<f64> {
    errors.windows(2).map(|e| (e[0] / e[1]).log2()).collect()
}

fn epsilons() -> Vec<f64> {
    (0..7).map(|k| 1e-2 / 2f64.powi(k)).filter(|&e| e >= 1e-4).collect()
}

#[test]
fn unit_load_on_the_disc_matches_the_closed_form_at_the_origin() {
    let mesh = disc(3);
    let k = stiffness(&mesh, 0.5);
    let mut sys = PdeSystem::new(&mesh, &k, ElementField::constant(&mesh, FieldLayout::PiecewiseConstant, 0.0)).unwrap();
    let u = sys.solve_state(&load_vector(&mesh, |_| 1.0)).unwrap();
    let origin = mesh.vertices().iter().position(|p| p[0].hypot(p[1]) < 1e-14).unwrap();
    let u0 = u.values[mesh.dof(origin).unwrap()];
    let exact = 1.0 / (4f64.powf(0.5) * gamma(1.5).powi(2));
    assert!((exact - 2.0 / std::f64::consts::PI).abs() < 1e-14);
    assert!((u0 - exact).abs() < 0.05, "u(0) = {u0}, exact {exact}");
}

#[test]
fn zero_load_and_linearity() {
    let mesh = disc(1);
    let k = stiffness(&mesh, 0.5);
    let mut sys = PdeSystem::new(&mesh, &k, random_control(&mesh, 3, 0.0, 1.0)).unwrap();
    let f = load_vector(&mesh, |p| 1.0 + p[0] * p[1]);
    assert!(sys.solve_state(&vec![0.0; f.len()]).unwrap().values.iter().all(|&x| x == 0.0));
    let u1 = sys.solve_state(&f).unwrap();
    let f2: Vec<f64> = f.iter().map(|x| 2.0 * x).collect();
    let u2 = sys.solve_state(&f2).unwrap();
    for (a, b) in u1.values.iter().zip(&u2.values) {
        assert!((2.0 * a - b).abs() <= 1e-12 * b.abs().max(1e-3));
    }
    let w0 = ElementField::constant(&mesh, FieldLayout::PiecewiseConstant, 0.0);
    let z = sys.solve_linearized_state(&u1, &w0).unwrap();
    assert!(z.values.iter().all(|&x| x == 0.0));
    let dp = sys.solve_linearized_adjoint(&StateField::zeros(f.len()), &u1, &w0).unwrap();
    assert!(dp.values.iter().all(|&x| x == 0.0));
}

#[test]
fn adjoint_vanishes_when_the_state_is_the_target() {
    let mesh = disc(1);
    let k = stiffness(&mesh, 0.5);
    let mut sys = PdeSystem::new(&mesh, &k, random_control(&mesh, 4, 0.0, 1.0)).unwrap();
    let u = sys.solve_state(&load_vector(&mesh, |_| 1.0)).unwrap();
    let target = sys.mass().matrix.apply(&u.values);
    let p = sys.solve_adjoint(&u, &target).unwrap();
    assert!(norm(&p.values) < 1e-14);
}

#[test]
fn linearized_state_matches_finite_differences() {
    let mesh = disc(1);
    let k = stiffness(&mesh, 0.5);
    let f = load_vector(&mesh, |p| 1.0 + 0.5 * p[0]);
    let q = random_control(&mesh, 7, 0.0, 1.0);
    let w = random_control(&mesh, 8, -1.0, 1.0);
    let mut sys = PdeSystem::new(&mesh, &k, q.clone()).unwrap();
    let u = sys.solve_state(&f).unwrap();
    let z = sys.solve_linearized_state(&u, &w).unwrap();

    let mut errs = Vec::new();
    for eps in epsilons() {
        sys.set_control(axpy(&q, eps, &w)).unwrap();
        let ue = sys.solve_state(&f).unwrap();
        let r: Vec<f64> = (0..u.len()).map(|i| ue.values[i] - u.values[i] - eps * z.values[i]).collect();
        errs.push(norm(&r));
    }
    for o in orders(&errs) {
        assert!(o >= 1.9, "orders {:?} from {errs:?}", orders(&errs));
    }

    // z is linear in w.
    sys.set_control(q.clone()).unwrap();
    let w2 = random_control(&mesh, 9, -1.0, 1.0);
    let z2 = sys.solve_linearized_state(&u, &w2).unwrap();
    let z12 = sys.solve_linearized_state(&u, &axpy(&w, 1.0, &w2)).unwrap();
    for i in 0..u.len() {
        assert!((z12.values[i] - z.values[i] - z2.values[i]).abs() <= 1e-10 * norm(&z12.values));
    }
}

#[test]
fn linearized_adjoint_matches_finite_differences() {
    let mesh = disc(1);
    let k = stiffness(&mesh, 0.5);
    let f = load_vector(&mesh, |_| 1.0);
    let target = load_vector(&mesh, |p| 0.2 * (1.0 - p[0] * p[0] - p[1] * p[1]));
    let q = random_control(&mesh, 11, 0.0, 0.5);
    let w = random_control(&mesh, 12, -1.0, 1.0);
    let mut sys = PdeSystem::new(&mesh, &k, q.clone()).unwrap();
    let u = sys.solve_state(&f).unwrap();
    let p = sys.solve_adjoint(&u, &target).unwrap();
    let z = sys.solve_linearized_state(&u, &w).unwrap();
    let dp = sys.solve_linearized_adjoint(&z, &p, &w).unwrap();

    let mut errs = Vec::new();
    for eps in epsilons() {
        sys.set_control(axpy(&q, eps, &w)).unwrap();
        let ue = sys.solve_state(&f).unwrap();
        let pe = sys.solve_adjoint(&ue, &target).unwrap();
        let r: Vec<f64> = (0..p.len()).map(|i| pe.values[i] - p.values[i] - eps * dp.values[i]).collect();
        errs.push(norm(&r));
    }
    for o in orders(&errs) {
        assert!(o >= 1.9, "orders {:?} from {errs:?}", orders(&errs));
    }
}

#[test]
fn adjoint_identity_holds() {
    let mesh = disc(1);
    let k = stiffness(&mesh, 0.3);
    let f = load_vector(&mesh, |p| 1.0 + p[1]);
    let target = load_vector(&mesh, |p| p[0] * p[0]);
    let mut sys = PdeSystem::new(&mesh, &k, random_control(&mesh, 21, 0.0, 1.5)).unwrap();
    let u = sys.solve_state(&f).unwrap();
    let p: AdjointField = sys.solve_adjoint(&u, &target).unwrap();
    for seed in 0..3 {
        let w = random_control(&mesh, 100 + seed, -1.0, 1.0);
        let z = sys.solve_linearized_state(&u, &w).unwrap();
        let mut misfit = sys.mass().matrix.apply(&u.values);
        for (m, t) in misfit.iter_mut().zip(&target) {
            *m -= t;
        }
        let lhs = dot(&z.values, &misfit);
        let bw = fraclap::fracfem::weighted_apply(&mesh, &w, &u.values).unwrap();
        let rhs = -dot(&bw, &p.values);
        assert!(((lhs - rhs) / rhs).abs() < 1e-9, "{lhs} vs {rhs}");
    }
}

#[test]
fn reused_factorization_is_bitwise_identical() {
    let mesh = disc(1);
    let k = stiffness(&mesh, 0.7);
    let q = random_control(&mesh, 5, 0.0, 1.0);
    let w = random_control(&mesh, 6, -1.0, 1.0);
    let f = load_vector(&mesh, |_| 1.0);
    let target = load_vector(&mesh, |p| p[0]);

    let mut shared = PdeSystem::new(&mesh, &k, q.clone()).unwrap();
    let u = shared.solve_state(&f).unwrap();
    let p = shared.solve_adjoint(&u, &target).unwrap();
    let z = shared.solve_linearized_state(&u, &w).unwrap();
    let dp = shared.solve_linearized_adjoint(&z, &p, &w).unwrap();

    let fresh = || PdeSystem::new(&mesh, &k, q.clone()).unwrap();
    assert_eq!(fresh().solve_state(&f).unwrap(), u);
    assert_eq!(fresh().solve_adjoint(&u, &target).unwrap(), p);
    assert_eq!(fresh().solve_linearized_state(&u, &w).unwrap(), z);
    assert_eq!(fresh().solve_linearized_adjoint(&z, &p, &w).unwrap(), dp);
}

#[test]
fn discrete_stability_constant_does_not_grow() {
    let mut ratios = Vec::new();
    for level in 0..3 {
        let mesh = disc(level);
        let k = stiffness(&mesh, 0.5);
        let mut sys = PdeSystem::new(&mesh, &k, ElementField::constant(&mesh, FieldLayout::PiecewiseConstant, 0.5)).unwrap();
        let u = sys.solve_state(&load_vector(&mesh, |_| 1.0)).unwrap();
        // ‖f‖_{L²} = √|Ω_h| for f ≡ 1.
        ratios.push(k.energy_norm(&u.values).unwrap() / mesh.total_area().sqrt());
    }
    for w in ratios.windows(2) {
        assert!(w[1] <= 1.1 * w[0], "{ratios:?}");
    }
}
