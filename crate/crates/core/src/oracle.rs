//! Reference computations that share no code path with the propagator.
//!
//! Operators are assembled from explicit Kronecker products of 2x2 Pauli
//! matrices and the dynamics are integrated with classical RK4 on the dense
//! Hamiltonian. The `oracle` CLI command runs [`run_checks`].

use crate::encoding::{CouplingGraph, Edge, IsingInstance};
use crate::quench::{
    evolve, evolve_observed, exact_ground_state, expect_z_all, expect_zz, QuenchConfig,
    StateVector,
};
use crate::schedule::{AnnealSchedule, DEFAULT_SCALE};
use crate::util::rng;
use crate::{Error, Result};
use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use rand::Rng;

/// Largest register the dense reference handles.
pub const N_MAX_DENSE: usize = 10;

fn pauli_x() -> DMatrix<f64> {
    DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0])
}

fn pauli_z() -> DMatrix<f64> {
    DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0])
}

/// `op` acting on the listed qubits, identity elsewhere. The leftmost
/// Kronecker factor is the most significant qubit.
pub fn embed(n: usize, factors: &[(usize, DMatrix<f64>)]) -> DMatrix<f64> {
    let mut out = DMatrix::<f64>::identity(1, 1);
    for q in (0..n).rev() {
        let local = factors
            .iter()
            .find(|(k, _)| *k == q)
            .map(|(_, m)| m.clone())
            .unwrap_or_else(|| DMatrix::identity(2, 2));
        out = out.kronecker(&local);
    }
    out
}

pub fn z_operator(n: usize, i: usize) -> DMatrix<f64> {
    embed(n, &[(i, pauli_z())])
}

pub fn zz_operator(n: usize, i: usize, j: usize) -> DMatrix<f64> {
    embed(n, &[(i, pauli_z()), (j, pauli_z())])
}

/// `(sum_i X_i, H_z)` as dense matrices.
pub fn dense_terms(instance: &IsingInstance) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let n = instance.n();
    if n > N_MAX_DENSE {
        return Err(Error::TooManyQubits(n, N_MAX_DENSE));
    }
    let dim = 1usize << n;
    let mut x = DMatrix::<f64>::zeros(dim, dim);
    let mut z = DMatrix::<f64>::zeros(dim, dim);
    for i in 0..n {
        x += embed(n, &[(i, pauli_x())]);
        z += z_operator(n, i) * instance.fields()[i];
    }
    for e in instance.couplings().edges() {
        z += zz_operator(n, e.i, e.j) * e.weight;
    }
    Ok((x, z))
}

/// `<psi| op |psi>` for a real symmetric operator.
pub fn expect_operator(state: &StateVector, op: &DMatrix<f64>) -> f64 {
    let amps = state.amplitudes();
    let applied = real_matvec(op, amps);
    amps.iter().zip(&applied).map(|(a, b)| (a.conj() * b).re).sum()
}

fn real_matvec(m: &DMatrix<f64>, v: &[Complex64]) -> Vec<Complex64> {
    let dim = v.len();
    (0..dim)
        .map(|r| {
            let mut acc = Complex64::new(0.0, 0.0);
            for (c, vc) in v.iter().enumerate() {
                acc += vc * m[(r, c)];
            }
            acc
        })
        .collect()
}

/// Integrates `i d/dt psi = (-A X + B H_z) psi` from `|+>^n` with RK4.
pub fn rk4_evolve(instance: &IsingInstance, schedule: &AnnealSchedule, dt_ns: f64) -> Result<StateVector> {
    let (x, z) = dense_terms(instance)?;
    let n = instance.n();
    let dim = 1usize << n;
    let tau = schedule.tau_ns();
    let steps = (tau / dt_ns).ceil().max(1.0) as usize;
    let h = tau / steps as f64;
    let amp = 1.0 / (dim as f64).sqrt();
    let mut psi = vec![Complex64::new(amp, 0.0); dim];
    let minus_i = Complex64::new(0.0, -1.0);
    let rhs = |t: f64, v: &[Complex64]| -> Result<Vec<Complex64>> {
        let (a, b) = schedule.evaluate((t / tau).clamp(0.0, 1.0))?;
        let xv = real_matvec(&x, v);
        let zv = real_matvec(&z, v);
        Ok(xv
            .iter()
            .zip(&zv)
            .map(|(xv, zv)| minus_i * (zv * b - xv * a))
            .collect())
    };
    let axpy = |v: &[Complex64], k: &[Complex64], c: f64| -> Vec<Complex64> {
        v.iter().zip(k).map(|(a, b)| a + b * c).collect()
    };
    for step in 0..steps {
        let t = step as f64 * h;
        let k1 = rhs(t, &psi)?;
        let k2 = rhs(t + 0.5 * h, &axpy(&psi, &k1, 0.5 * h))?;
        let k3 = rhs(t + 0.5 * h, &axpy(&psi, &k2, 0.5 * h))?;
        let k4 = rhs(t + h, &axpy(&psi, &k3, h))?;
        for i in 0..dim {
            psi[i] += (k1[i] + k2[i] * 2.0 + k3[i] * 2.0 + k4[i]) * (h / 6.0);
        }
    }
    let norm = psi.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    psi.iter_mut().for_each(|a| *a /= norm);
    StateVector::from_amplitudes(n, psi)
}

/// Smallest gap between the two lowest levels of `-A(s) X + B(s) H_z` over a
/// uniform grid of `points` values of `s`.
pub fn min_path_gap(instance: &IsingInstance, schedule: &AnnealSchedule, points: usize) -> Result<f64> {
    let (x, z) = dense_terms(instance)?;
    let mut gap = f64::INFINITY;
    for k in 0..points {
        let s = k as f64 / (points - 1).max(1) as f64;
        let (a, b) = schedule.evaluate(s)?;
        let h = &z * b - &x * a;
        let mut ev: Vec<f64> = SymmetricEigen::new(h).eigenvalues.iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        gap = gap.min(ev[1] - ev[0]);
    }
    Ok(gap)
}

/// Random instance with fields in `[-1, 1]` and couplings on a ring.
pub fn random_instance(n: usize, seed: u64) -> Result<IsingInstance> {
    let mut r = rng(seed);
    let h = (0..n).map(|_| r.gen_range(-1.0..1.0)).collect();
    let edges = if n > 1 {
        (0..n)
            .filter_map(|i| {
                let (a, b) = (i, (i + 1) % n);
                let (a, b) = (a.min(b), a.max(b));
                (a != b).then(|| Edge {
                    i: a,
                    j: b,
                    weight: r.gen_range(-1.0..1.0),
                })
            })
            .collect::<Vec<_>>()
    } else {
        Vec::new()
    };
    let mut edges = edges;
    edges.sort_by_key(|e| (e.i, e.j));
    edges.dedup_by_key(|e| (e.i, e.j));
    IsingInstance::new(h, CouplingGraph::new(n, edges)?)
}

/// First instance from `seed, seed + 1, ...` whose minimum path gap under
/// `schedule` is at least `min_gap`. Returns the instance and its gap.
pub fn gapped_instance(
    n: usize,
    seed: u64,
    schedule: &AnnealSchedule,
    min_gap: f64,
) -> Result<(IsingInstance, f64)> {
    for attempt in 0..1000 {
        let inst = random_instance(n, seed.wrapping_add(attempt))?;
        let gap = min_path_gap(&inst, schedule, 101)?;
        if gap >= min_gap {
            return Ok((inst, gap));
        }
    }
    Err(Error::InvalidArgument(format!(
        "no instance with gap >= {min_gap} found"
    )))
}

/// Outcome of one cross-check.
#[derive(Debug, Clone)]
pub struct OracleCheck {
    pub name: &'static str,
    pub value: f64,
    pub threshold: f64,
    pub passed: bool,
}

impl OracleCheck {
    fn at_most(name: &'static str, value: f64, threshold: f64) -> Self {
        Self {
            name,
            value,
            threshold,
            passed: value <= threshold,
        }
    }

    fn at_least(name: &'static str, value: f64, threshold: f64) -> Self {
        Self {
            name,
            value,
            threshold,
            passed: value >= threshold,
        }
    }
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Runs the simulator against the dense references on seeded `n`-qubit
/// instances (`1 <= n <= 8`).
pub fn run_checks(n: usize, seed: u64) -> Result<Vec<OracleCheck>> {
    if n == 0 || n > 8 {
        return Err(Error::InvalidArgument(format!("oracle checks support 1..=8 qubits, got {n}")));
    }
    let mut checks = Vec::new();

    // single spin against RK4
    let single = IsingInstance::new(vec![1.0], CouplingGraph::empty(1))?;
    let sched10 = AnnealSchedule::linear(DEFAULT_SCALE, DEFAULT_SCALE, 10.0)?;
    let trotter = expect_z_all(&evolve(&single, &QuenchConfig::new(sched10.clone()).with_dt(1e-3))?)[0];
    let reference = expect_z_all(&rk4_evolve(&single, &sched10, 1e-4)?)[0];
    checks.push(OracleCheck::at_most("single-spin quench vs RK4", (trotter - reference).abs(), 1e-6));

    // n spins against RK4 on a short quench
    let inst = random_instance(n, seed)?;
    let sched2 = AnnealSchedule::linear(DEFAULT_SCALE, DEFAULT_SCALE, 2.0)?;
    let state = evolve(&inst, &QuenchConfig::new(sched2.clone()).with_dt(1e-3))?;
    let reference = rk4_evolve(&inst, &sched2, 1e-4)?;
    checks.push(OracleCheck::at_most(
        "n-spin quench vs RK4",
        max_abs_diff(&expect_z_all(&state), &expect_z_all(&reference)),
        1e-5,
    ));

    // expectation values against Kronecker operators
    let mut worst: f64 = 0.0;
    let z = expect_z_all(&state);
    for (i, zi) in z.iter().enumerate() {
        worst = worst.max((zi - expect_operator(&state, &z_operator(n, i))).abs());
        for j in i + 1..n {
            let zz = expect_zz(&state, i, j)?;
            worst = worst.max((zz - expect_operator(&state, &zz_operator(n, i, j))).abs());
        }
    }
    checks.push(OracleCheck::at_most("expectations vs dense operators", worst, 1e-12));

    // ground-state energy against the Kronecker-assembled matrix
    let (x, hz) = dense_terms(&inst)?;
    let mut ev: Vec<f64> = SymmetricEigen::new(&hz - &x).eigenvalues.iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    let (e0, _) = exact_ground_state(&inst, 1.0)?;
    checks.push(OracleCheck::at_most("ground energy vs dense eigensolve", (e0 - ev[0]).abs(), 1e-9));

    // adiabatic limit
    let sched500 = AnnealSchedule::linear(DEFAULT_SCALE, DEFAULT_SCALE, 500.0)?;
    let (gapped, _) = gapped_instance(n.min(6), seed, &sched500, 1.0)?;
    let final_state = evolve(&gapped, &QuenchConfig::new(sched500))?;
    let (_, ground) = exact_ground_state(&gapped, 0.0)?;
    checks.push(OracleCheck::at_least(
        "adiabatic overlap with ground state",
        final_state.fidelity(&ground)?,
        0.99,
    ));

    // sudden limit
    let sudden = AnnealSchedule::linear(DEFAULT_SCALE, DEFAULT_SCALE, 1e-6)?;
    let z = expect_z_all(&evolve(&inst, &QuenchConfig::new(sudden))?);
    checks.push(OracleCheck::at_most(
        "sudden-limit polarization",
        z.iter().fold(0.0, |m: f64, v| m.max(v.abs())),
        1e-6,
    ));

    // spin-flip covariance
    let cfg = QuenchConfig::new(AnnealSchedule::linear(DEFAULT_SCALE, DEFAULT_SCALE, 5.0)?);
    let z = expect_z_all(&evolve(&inst, &cfg)?);
    let zf = expect_z_all(&evolve(&inst.flipped(), &cfg)?);
    let negated: Vec<f64> = zf.iter().map(|v| -v).collect();
    checks.push(OracleCheck::at_most("spin-flip covariance", max_abs_diff(&z, &negated), 1e-9));

    // norm after every step
    let mut drift: f64 = 0.0;
    evolve_observed(&inst, &cfg, |_, s| drift = drift.max((s.norm_sqr() - 1.0).abs()))?;
    checks.push(OracleCheck::at_most("norm drift", drift, 1e-9));

    Ok(checks)
}
