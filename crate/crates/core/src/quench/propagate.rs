use super::state::{initial_state, StateVector};
use crate::encoding::{diagonal_energies_limited, IsingInstance, N_MAX_SIM};
use crate::schedule::AnnealSchedule;
use crate::{Error, Result};
use num_complex::Complex64;

pub const DEFAULT_DT_NS: f64 = 0.01;

const MAX_STEPS: f64 = 4.0e9;

/// Everything the propagator needs besides the Ising instance.
#[derive(Debug, Clone, PartialEq)]
pub struct QuenchConfig {
    /// Trotter step in ns.
    pub dt_ns: f64,
    pub schedule: AnnealSchedule,
    /// `None` means exact expectation values.
    pub shots: Option<u64>,
    pub seed: u64,
    pub n_max_sim: usize,
}

impl QuenchConfig {
    pub fn new(schedule: AnnealSchedule) -> Self {
        Self {
            dt_ns: DEFAULT_DT_NS,
            schedule,
            shots: None,
            seed: 0,
            n_max_sim: N_MAX_SIM,
        }
    }

    pub fn with_dt(mut self, dt_ns: f64) -> Self {
        self.dt_ns = dt_ns;
        self
    }
}

/// Lengths of the Trotter steps covering `[0, tau]`: full `dt` steps with the
/// last one shortened to land on `tau`. A `tau` within rounding of a multiple
/// of `dt` does not produce a sliver step.
pub fn step_lengths(tau_ns: f64, dt_ns: f64) -> Result<Vec<f64>> {
    if !(dt_ns > 0.0 && dt_ns.is_finite()) {
        return Err(Error::InvalidArgument(format!("dt_ns must be positive, got {dt_ns}")));
    }
    if !(tau_ns >= 0.0 && tau_ns.is_finite()) {
        return Err(Error::InvalidArgument(format!("tau_ns must be non-negative, got {tau_ns}")));
    }
    let ratio = tau_ns / dt_ns;
    if ratio > MAX_STEPS {
        return Err(Error::StepOverflow(ratio));
    }
    let nearest = ratio.round();
    let steps = if nearest >= 1.0 && (ratio - nearest).abs() <= 1e-9 * nearest {
        nearest as usize
    } else {
        (ratio.ceil() as usize).max(1)
    };
    let mut lengths = vec![dt_ns; steps];
    lengths[steps - 1] = tau_ns - (steps - 1) as f64 * dt_ns;
    Ok(lengths)
}

/// Midpoint envelope terms per step: (mixer half-angle, phase scale).
fn step_plan(schedule: &AnnealSchedule, dt_ns: f64) -> Result<Vec<(f64, f64)>> {
    let tau = schedule.tau_ns();
    let lengths = step_lengths(tau, dt_ns)?;
    let mut t = 0.0;
    let mut plan = Vec::with_capacity(lengths.len());
    for (k, &len) in lengths.iter().enumerate() {
        let start = k as f64 * dt_ns;
        let s_mid = ((start + 0.5 * len) / tau).clamp(0.0, 1.0);
        let (a, b) = schedule.eval_unchecked(s_mid);
        plan.push((0.5 * a * len, b * len));
        t += len;
    }
    debug_assert!((t - tau).abs() <= 1e-9 * tau.max(1.0));
    Ok(plan)
}

#[inline(always)]
fn rotate_pair(x: Complex64, y: Complex64, c: f64, s: f64) -> (Complex64, Complex64) {
    // (c x + i s y, i s x + c y)
    (
        Complex64::new(c * x.re - s * y.im, c * x.im + s * y.re),
        Complex64::new(c * y.re - s * x.im, c * y.im + s * x.re),
    )
}

/// `exp(i theta sum_q X_q)` as a layer of single-qubit rotations.
#[inline(always)]
pub(crate) fn apply_mixer(amps: &mut [Complex64], n: usize, theta: f64) {
    if theta == 0.0 {
        return;
    }
    let (s, c) = theta.sin_cos();
    rotate_qubits(amps, 0..n, c, s);
}

/// Rotations on the given qubits, with qubit indices relative to `amps`.
#[inline(always)]
fn rotate_qubits(amps: &mut [Complex64], qubits: std::ops::Range<usize>, c: f64, s: f64) {
    for q in qubits {
        let stride = 1usize << q;
        if stride == 1 {
            for pair in amps.chunks_exact_mut(2) {
                let (a, b) = rotate_pair(pair[0], pair[1], c, s);
                pair[0] = a;
                pair[1] = b;
            }
            continue;
        }
        for block in amps.chunks_exact_mut(stride << 1) {
            let (lo, hi) = block.split_at_mut(stride);
            for (x, y) in lo.iter_mut().zip(hi.iter_mut()) {
                let (a, b) = rotate_pair(*x, *y, c, s);
                *x = a;
                *y = b;
            }
        }
    }
}

/// `exp(-i scale * E_b)` on every amplitude.
pub(crate) fn apply_phase(amps: &mut [Complex64], energies: &[f64], scale: f64) {
    if scale == 0.0 {
        return;
    }
    for (a, &e) in amps.iter_mut().zip(energies) {
        let (s, c) = (scale * e).sin_cos();
        *a = Complex64::new(a.re * c + a.im * s, a.im * c - a.re * s);
    }
}

/// Steps between exact recomputations of the phase factors.
const PHASE_RESYNC: usize = 256;

/// Diagonal propagator `exp(-i theta_k E)` advanced by multiplication while the
/// per-step angles `theta_k` form an arithmetic progression.
struct PhaseTracker<'a> {
    energies: &'a [f64],
    factor: Vec<Complex64>,
    ratio: Vec<Complex64>,
    last_theta: f64,
    last_delta: Option<f64>,
    since_sync: usize,
    tol: f64,
}

impl<'a> PhaseTracker<'a> {
    fn new(energies: &'a [f64], max_theta: f64) -> Self {
        Self {
            energies,
            factor: vec![Complex64::new(1.0, 0.0); energies.len()],
            ratio: vec![Complex64::new(1.0, 0.0); energies.len()],
            last_theta: 0.0,
            last_delta: None,
            since_sync: 0,
            tol: 1e-13 * max_theta.abs().max(f64::MIN_POSITIVE),
        }
    }

    fn fill(out: &mut [Complex64], energies: &[f64], theta: f64) {
        for (f, &e) in out.iter_mut().zip(energies) {
            let (s, c) = (theta * e).sin_cos();
            *f = Complex64::new(c, -s);
        }
    }

    /// Moves to angle `theta`. Returns true when the factors still have to be
    /// multiplied by the ratios, which [`Self::apply`] does chunk by chunk.
    #[inline(always)]
    fn begin(&mut self, theta: f64) -> bool {
        let delta = theta - self.last_theta;
        let reuse = self.since_sync < PHASE_RESYNC
            && self.last_delta.is_some_and(|d| (d - delta).abs() <= self.tol);
        if reuse {
            self.since_sync += 1;
        } else {
            Self::fill(&mut self.factor, self.energies, theta);
            Self::fill(&mut self.ratio, self.energies, delta);
            self.last_delta = Some(delta);
            self.since_sync = 0;
        }
        self.last_theta = theta;
        reuse
    }

    /// Applies the current factors to `amps`, which starts at index `offset`.
    #[inline(always)]
    fn apply(&mut self, amps: &mut [Complex64], offset: usize, advance: bool) {
        let range = offset..offset + amps.len();
        let factor = &mut self.factor[range.clone()];
        if advance {
            for (f, r) in factor.iter_mut().zip(&self.ratio[range]) {
                *f *= r;
            }
        }
        for (a, f) in amps.iter_mut().zip(factor.iter()) {
            *a *= f;
        }
    }
}

/// Low qubits handled together on chunks of `2^BLOCK_QUBITS` amplitudes so
/// the phase and their rotations run while the chunk is in L1.
const BLOCK_QUBITS: usize = 8;

/// Second-order symmetric Trotter evolution from `|+>^n` over `[0, tau]`.
///
/// Each step of length `dt` at midpoint `s_m` applies a half mixer layer with
/// `A(s_m) dt / 2`, the diagonal phase `B(s_m) dt H_z`, and the half layer
/// again. All mixer layers commute, so adjacent half layers are fused.
pub fn evolve(instance: &IsingInstance, config: &QuenchConfig) -> Result<StateVector> {
    let n = instance.n();
    let energies = diagonal_energies_limited(instance, config.n_max_sim)?;
    let plan = step_plan(&config.schedule, config.dt_ns)?;
    let max_theta = plan.iter().map(|p| p.1.abs()).fold(0.0, f64::max);
    let mut phases = PhaseTracker::new(&energies, max_theta);
    let mut state = initial_state(n)?;
    run_steps(state.amplitudes_mut(), n, &plan, &mut phases);
    Ok(state)
}

fn run_steps(amps: &mut [Complex64], n: usize, plan: &[(f64, f64)], phases: &mut PhaseTracker) {
    #[cfg(target_arch = "x86_64")]
    if std::is_x86_feature_detected!("avx2") {
        // SAFETY: the required CPU feature was detected at runtime.
        unsafe { run_steps_avx2(amps, n, plan, phases) };
        return;
    }
    run_steps_generic(amps, n, plan, phases);
}

// Same code with wider vector registers; no FMA contraction happens, so the
// result is bitwise identical to the generic path.
#[cfg(target_arch = "x86_64")]
#[target_feature(enable = "avx2")]
unsafe fn run_steps_avx2(
    amps: &mut [Complex64],
    n: usize,
    plan: &[(f64, f64)],
    phases: &mut PhaseTracker,
) {
    run_steps_generic(amps, n, plan, phases);
}

#[inline(always)]
fn run_steps_generic(
    amps: &mut [Complex64],
    n: usize,
    plan: &[(f64, f64)],
    phases: &mut PhaseTracker,
) {
    apply_mixer(amps, n, plan[0].0);
    let low = n.min(BLOCK_QUBITS);
    let chunk = 1usize << low;
    for (k, &(half, theta)) in plan.iter().enumerate() {
        let next = plan.get(k + 1).map_or(0.0, |p| p.0);
        let angle = half + next;
        let (s, c) = angle.sin_cos();
        let advance = theta != 0.0 && phases.begin(theta);
        for (i, block) in amps.chunks_exact_mut(chunk).enumerate() {
            if theta != 0.0 {
                phases.apply(block, i * chunk, advance);
            }
            if angle != 0.0 {
                rotate_qubits(block, 0..low, c, s);
            }
        }
        if angle != 0.0 {
            rotate_qubits(amps, low..n, c, s);
        }
    }
}

/// Unfused evolution calling `observer(step, state)` after every complete step.
pub fn evolve_observed<F>(
    instance: &IsingInstance,
    config: &QuenchConfig,
    mut observer: F,
) -> Result<StateVector>
where
    F: FnMut(usize, &StateVector),
{
    let n = instance.n();
    let energies = diagonal_energies_limited(instance, config.n_max_sim)?;
    let plan = step_plan(&config.schedule, config.dt_ns)?;
    let mut state = initial_state(n)?;
    for (k, &(half, phase)) in plan.iter().enumerate() {
        let amps = state.amplitudes_mut();
        apply_mixer(amps, n, half);
        apply_phase(amps, &energies, phase);
        apply_mixer(amps, n, half);
        observer(k, &state);
    }
    Ok(state)
}
