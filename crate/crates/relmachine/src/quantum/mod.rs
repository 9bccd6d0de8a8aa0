//! Schrödinger evolution for the oracle layer: Hermitian Hamiltonians,
//! complex state vectors, truncated-Taylor time evolution with a certified
//! factorial remainder bound, an exact eigendecomposition route for
//! cross-checking, and the fixed-point tape codec that turns states into
//! query arguments.
//!
//! Units: ħ = 1 throughout; the evolution time carries the division.

pub mod eigen;
pub mod fixed;

use std::sync::Arc;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::oracle::{ComputeCost, CostModel, OracleBinding, OracleEvaluator};
use fixed::{f64_from_bits, u32_from_bits, u32_to_bits, FixedPointCodec};

pub use fixed::FixedPointError;

pub const HERMITIAN_TOL: f64 = 1e-12;
/// Desk scale: exact evolution is for cross-checking, not production runs.
pub const MAX_QUBITS: u32 = 10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QuantumError {
    #[error("dimension {0} is not a power of two")]
    NotPowerOfTwo(usize),
    #[error("state has {state} amplitudes but the Hamiltonian is {dim}-dimensional")]
    DimensionMismatch { state: usize, dim: usize },
    #[error("matrix is not Hermitian: max entry deviation {0:e}")]
    NotHermitian(f64),
    #[error("{0} qubits exceeds the desk-scale limit of {MAX_QUBITS}")]
    DeskScale(u32),
    #[error("cannot renormalize the zero vector")]
    ZeroNorm,
    #[error("epsilon must be positive")]
    BadEpsilon,
    #[error(transparent)]
    Eigen(#[from] eigen::EigenError),
    #[error(transparent)]
    FixedPoint(#[from] FixedPointError),
}

/// A pure state of `n` qubits: 2^n complex amplitudes.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantumState {
    pub amplitudes: Vec<Complex64>,
    pub n_qubits: u32,
}

impl QuantumState {
    pub fn new(amplitudes: Vec<Complex64>) -> Result<QuantumState, QuantumError> {
        let n_qubits = qubits_for_dim(amplitudes.len())?;
        Ok(QuantumState {
            amplitudes,
            n_qubits,
        })
    }

    /// |0…0⟩.
    pub fn zero_basis(n_qubits: u32) -> QuantumState {
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); 1 << n_qubits];
        amplitudes[0] = Complex64::new(1.0, 0.0);
        QuantumState {
            amplitudes,
            n_qubits,
        }
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }
}

/// A time-independent Hamiltonian: dense Hermitian 2^n × 2^n matrix,
/// row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Hamiltonian {
    matrix: Vec<Complex64>,
    dim: usize,
    pub n_qubits: u32,
}

fn qubits_for_dim(dim: usize) -> Result<u32, QuantumError> {
    if dim == 0 || !dim.is_power_of_two() {
        return Err(QuantumError::NotPowerOfTwo(dim));
    }
    Ok(dim.trailing_zeros())
}

impl Hamiltonian {
    /// Validates squareness, power-of-two dimension, and Hermiticity at the
    /// default tolerance.
    pub fn new(matrix: Vec<Complex64>, dim: usize) -> Result<Hamiltonian, QuantumError> {
        if matrix.len() != dim * dim {
            return Err(QuantumError::DimensionMismatch {
                state: matrix.len(),
                dim: dim * dim,
            });
        }
        let n_qubits = qubits_for_dim(dim)?;
        let h = Hamiltonian {
            matrix,
            dim,
            n_qubits,
        };
        h.check_hermitian(HERMITIAN_TOL)?;
        Ok(h)
    }

    pub fn zero(n_qubits: u32) -> Hamiltonian {
        let dim = 1usize << n_qubits;
        Hamiltonian {
            matrix: vec![Complex64::new(0.0, 0.0); dim * dim],
            dim,
            n_qubits,
        }
    }

    pub fn pauli_x() -> Hamiltonian {
        Hamiltonian::new(
            vec![
                Complex64::new(0.0, 0.0),
                Complex64::new(1.0, 0.0),
                Complex64::new(1.0, 0.0),
                Complex64::new(0.0, 0.0),
            ],
            2,
        )
        .expect("Pauli-X is Hermitian")
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn matrix(&self) -> &[Complex64] {
        &self.matrix
    }

    pub fn entry(&self, row: usize, col: usize) -> Complex64 {
        self.matrix[row * self.dim + col]
    }

    /// ok iff max |H_ab − conj(H_ba)| ≤ tol.
    pub fn check_hermitian(&self, tol: f64) -> Result<(), QuantumError> {
        let mut worst: f64 = 0.0;
        for a in 0..self.dim {
            for b in a..self.dim {
                let dev = (self.entry(a, b) - self.entry(b, a).conj()).norm();
                worst = worst.max(dev);
            }
        }
        if worst <= tol {
            Ok(())
        } else {
            Err(QuantumError::NotHermitian(worst))
        }
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.matrix.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    fn matvec(&self, v: &[Complex64]) -> Vec<Complex64> {
        let mut out = vec![Complex64::new(0.0, 0.0); self.dim];
        for (row, out_slot) in out.iter_mut().enumerate() {
            let mut acc = Complex64::new(0.0, 0.0);
            let base = row * self.dim;
            for (col, &x) in v.iter().enumerate() {
                acc += self.matrix[base + col] * x;
            }
            *out_slot = acc;
        }
        out
    }
}

/// Evolution request: time, requested 2-norm error bound, and optionally a
/// forced truncation order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvolutionParams {
    pub tau: f64,
    pub epsilon: f64,
    pub truncation_order: Option<u32>,
}

impl EvolutionParams {
    pub fn new(tau: f64, epsilon: f64) -> EvolutionParams {
        EvolutionParams {
            tau,
            epsilon,
            truncation_order: None,
        }
    }
}

/// Smallest order J whose tail bound B^(J+1)/(J+1)! · e^B drops to
/// `epsilon`, with B the Frobenius-norm bound on ‖Hτ‖. Evaluated in log
/// space so large B cannot overflow.
pub fn taylor_order_for(h: &Hamiltonian, tau: f64, epsilon: f64) -> Result<u32, QuantumError> {
    if epsilon <= 0.0 || epsilon.is_nan() {
        return Err(QuantumError::BadEpsilon);
    }
    let b = h.frobenius_norm() * tau.abs();
    if b == 0.0 {
        return Ok(0);
    }
    let ln_b = b.ln();
    let ln_eps = epsilon.ln();
    let mut j: u32 = 0;
    // ln R(0) = ln B + B
    let mut ln_r = ln_b + b;
    while ln_r > ln_eps {
        j += 1;
        ln_r += ln_b - ((j + 1) as f64).ln();
    }
    Ok(j)
}

/// Truncated-Taylor evolution |ψ(τ)⟩ ≈ Σ_{j≤J} ((-iτ)^j / j!) H^j |ψ(0)⟩,
/// accumulated through repeated matrix-vector products; H^j is never
/// materialized. For normalized input the result is within `epsilon` of the
/// exact evolution in 2-norm.
pub fn evolve(
    psi0: &QuantumState,
    h: &Hamiltonian,
    params: &EvolutionParams,
) -> Result<QuantumState, QuantumError> {
    if psi0.dim() != h.dim() {
        return Err(QuantumError::DimensionMismatch {
            state: psi0.dim(),
            dim: h.dim(),
        });
    }
    h.check_hermitian(HERMITIAN_TOL)?;
    let order = match params.truncation_order {
        Some(j) => j,
        None => taylor_order_for(h, params.tau, params.epsilon)?,
    };
    let mut term = psi0.amplitudes.clone();
    let mut sum = psi0.amplitudes.clone();
    let factor = Complex64::new(0.0, -params.tau);
    for j in 1..=order {
        let hv = h.matvec(&term);
        let scale = factor / j as f64;
        for (slot, v) in term.iter_mut().zip(hv) {
            *slot = v * scale;
        }
        for (acc, &v) in sum.iter_mut().zip(term.iter()) {
            *acc += v;
        }
    }
    Ok(QuantumState {
        amplitudes: sum,
        n_qubits: psi0.n_qubits,
    })
}

/// Exact evolution through the Hermitian eigendecomposition:
/// U·diag(e^(-iλτ))·U†·ψ. Reference route; accuracy limited only by
/// floating point. Desk scale (n ≤ 10).
pub fn evolve_exact(
    psi0: &QuantumState,
    h: &Hamiltonian,
    tau: f64,
) -> Result<QuantumState, QuantumError> {
    if psi0.dim() != h.dim() {
        return Err(QuantumError::DimensionMismatch {
            state: psi0.dim(),
            dim: h.dim(),
        });
    }
    if h.n_qubits > MAX_QUBITS {
        return Err(QuantumError::DeskScale(h.n_qubits));
    }
    let e = eigen::hermitian_eigen(h.matrix(), h.dim())?;
    let d = h.dim();
    // c = U† ψ
    let mut c = vec![Complex64::new(0.0, 0.0); d];
    for (k, slot) in c.iter_mut().enumerate() {
        let mut acc = Complex64::new(0.0, 0.0);
        for i in 0..d {
            acc += e.vectors[i * d + k].conj() * psi0.amplitudes[i];
        }
        *slot = acc;
    }
    for (k, slot) in c.iter_mut().enumerate() {
        *slot *= Complex64::from_polar(1.0, -e.values[k] * tau);
    }
    let mut out = vec![Complex64::new(0.0, 0.0); d];
    for (i, slot) in out.iter_mut().enumerate() {
        let mut acc = Complex64::new(0.0, 0.0);
        for (k, &ck) in c.iter().enumerate() {
            acc += e.vectors[i * d + k] * ck;
        }
        *slot = acc;
    }
    Ok(QuantumState {
        amplitudes: out,
        n_qubits: psi0.n_qubits,
    })
}

pub fn norm(psi: &QuantumState) -> f64 {
    psi.amplitudes
        .iter()
        .map(|z| z.norm_sqr())
        .sum::<f64>()
        .sqrt()
}

pub fn renormalize(psi: &QuantumState) -> Result<QuantumState, QuantumError> {
    let n = norm(psi);
    if n == 0.0 {
        return Err(QuantumError::ZeroNorm);
    }
    Ok(QuantumState {
        amplitudes: psi.amplitudes.iter().map(|z| z / n).collect(),
        n_qubits: psi.n_qubits,
    })
}

/// 2-norm distance between two states.
pub fn distance(a: &QuantumState, b: &QuantumState) -> f64 {
    a.amplitudes
        .iter()
        .zip(&b.amplitudes)
        .map(|(x, y)| (x - y).norm_sqr())
        .sum::<f64>()
        .sqrt()
}

/// Classical measurement with encoding-limited precision: `x` truncated to
/// `k` binary fraction bits, plus the half-open uncertainty interval of all
/// reals sharing that truncation. The true value always lies inside.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Measured {
    pub value: f64,
    pub lo: f64,
    pub hi: f64,
}

pub fn measure_with_uncertainty(x: f64, k_bits: u32) -> Measured {
    assert!(
        (1..=52).contains(&k_bits),
        "measurement fraction bits must be in 1..=52"
    );
    let scale = (k_bits as f64).exp2();
    let value = (x * scale).floor() / scale;
    Measured {
        value,
        lo: value,
        hi: value + 1.0 / scale,
    }
}

/// Seeded random Hermitian matrix with entries of unit scale.
pub fn random_hermitian<R: Rng>(n_qubits: u32, rng: &mut R) -> Hamiltonian {
    let dim = 1usize << n_qubits;
    let mut m = vec![Complex64::new(0.0, 0.0); dim * dim];
    for i in 0..dim {
        for j in i..dim {
            if i == j {
                m[i * dim + j] = Complex64::new(rng.gen_range(-1.0..1.0), 0.0);
            } else {
                let z = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
                m[i * dim + j] = z;
                m[j * dim + i] = z.conj();
            }
        }
    }
    Hamiltonian::new(m, dim).expect("constructed Hermitian")
}

/// Seeded random normalized state.
pub fn random_state<R: Rng>(n_qubits: u32, rng: &mut R) -> QuantumState {
    let dim = 1usize << n_qubits;
    let amplitudes: Vec<Complex64> = (0..dim)
        .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
        .collect();
    renormalize(&QuantumState {
        amplitudes,
        n_qubits,
    })
    .expect("random state is nonzero")
}

// ---------------------------------------------------------------------------
// Tape codecs and oracle bindings
// ---------------------------------------------------------------------------

/// Encode a state as fixed-point bits: per amplitude, real then imaginary
/// component, `precision` bits each.
pub fn encode_state(psi: &QuantumState, codec: &FixedPointCodec) -> Vec<bool> {
    let mut bits = Vec::with_capacity(psi.dim() * 2 * codec.bits() as usize);
    for z in &psi.amplitudes {
        bits.extend(codec.encode(z.re));
        bits.extend(codec.encode(z.im));
    }
    bits
}

pub fn decode_state(
    bits: &[bool],
    n_qubits: u32,
    codec: &FixedPointCodec,
) -> Result<QuantumState, QuantumError> {
    let dim = 1usize << n_qubits;
    let per = codec.bits() as usize;
    if bits.len() != dim * 2 * per {
        return Err(FixedPointError::WidthMismatch {
            got: bits.len(),
            want: dim * 2 * per,
        }
        .into());
    }
    let mut amplitudes = Vec::with_capacity(dim);
    for chunk in bits.chunks(2 * per) {
        let re = codec.decode(&chunk[..per])?;
        let im = codec.decode(&chunk[per..])?;
        amplitudes.push(Complex64::new(re, im));
    }
    Ok(QuantumState {
        amplitudes,
        n_qubits,
    })
}

/// Bits a state occupies on the tape at a given precision.
pub fn state_bits(n_qubits: u32, precision: u32) -> usize {
    2 * (1usize << n_qubits) * precision as usize
}

/// Reference cost charged for one truncated-Taylor evaluation: decode,
/// J dense matrix-vector applications (three elementary operations per
/// matrix entry), accumulation, encode. Dominated by J·4^n.
fn evolution_cost(n_qubits: u32, precision: u32, order: u32) -> ComputeCost {
    let dim = 1u64 << n_qubits;
    let io = 2 * dim * precision as u64;
    let steps = 2 * io + order as u64 * (3 * dim * dim + 2 * dim);
    ComputeCost {
        steps,
        workspace_cells: 2 * io + 64,
    }
}

struct SchrodingerEvaluator {
    h: Hamiltonian,
    epsilon: f64,
    codec: FixedPointCodec,
}

impl SchrodingerEvaluator {
    fn split<'a>(&self, input: &'a [bool]) -> Result<(&'a [bool], f64), String> {
        let psi_bits = state_bits(self.h.n_qubits, self.codec.bits());
        if input.len() != psi_bits + 64 {
            return Err(format!(
                "argument must be {} state bits plus a 64-bit time slot, got {}",
                psi_bits,
                input.len()
            ));
        }
        let tau = f64_from_bits(&input[psi_bits..]).map_err(|e| e.to_string())?;
        if !tau.is_finite() {
            return Err("time slot does not decode to a finite value".into());
        }
        Ok((&input[..psi_bits], tau))
    }
}

impl OracleEvaluator for SchrodingerEvaluator {
    fn evaluate(&self, input: &[bool]) -> Result<Vec<bool>, String> {
        let (psi_bits, tau) = self.split(input)?;
        let psi =
            decode_state(psi_bits, self.h.n_qubits, &self.codec).map_err(|e| e.to_string())?;
        let out = evolve(&psi, &self.h, &EvolutionParams::new(tau, self.epsilon))
            .map_err(|e| e.to_string())?;
        Ok(encode_state(&out, &self.codec))
    }

    fn cost(&self, input: &[bool]) -> ComputeCost {
        let order = self
            .split(input)
            .ok()
            .and_then(|(_, tau)| taylor_order_for(&self.h, tau, self.epsilon).ok())
            .unwrap_or(1);
        evolution_cost(self.h.n_qubits, self.codec.bits(), order)
    }
}

/// The Schrödinger oracle: the argument region holds a fixed-point state
/// followed by a raw 64-bit time slot; the output is the evolved state at
/// `encoding_precision` bits per component (2·2^n·precision bits total).
pub fn schrodinger_oracle_binding(
    h: Hamiltonian,
    epsilon: f64,
    encoding_precision: u32,
) -> Result<OracleBinding, QuantumError> {
    if epsilon <= 0.0 || epsilon.is_nan() {
        return Err(QuantumError::BadEpsilon);
    }
    let codec = FixedPointCodec::new(encoding_precision)?;
    let out_len = state_bits(h.n_qubits, encoding_precision);
    Ok(OracleBinding::new(
        "schrodinger",
        out_len,
        CostModel::Approximate { epsilon },
        Arc::new(SchrodingerEvaluator { h, epsilon, codec }),
    ))
}

/// How a repeated-query driver advances the evolution time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EvolutionMode {
    /// Every query evolves the *initial* state to the next grid time;
    /// truncation and quantization error never accumulate across steps.
    RestartFromInitial,
    /// Every query advances the current (previously written) state by one
    /// grid step; errors compound, which is the documented trade-off.
    StepFromCurrent,
}

/// Restart-mode argument layout, in local-tape order:
/// `[psi0 | psi_current | counter]`. The evaluator reads the pinned initial
/// state and the counter, ignores the middle slot, and its output
/// `[psi(counter+1 · dtau) | counter+1]` is written over the contiguous
/// `[psi_current | counter]` block — so a self-looping query state walks
/// the grid without ever clobbering psi0.
struct RestartDriverEvaluator {
    h: Hamiltonian,
    epsilon: f64,
    codec: FixedPointCodec,
    dtau: f64,
}

impl RestartDriverEvaluator {
    fn counter_of(&self, input: &[bool]) -> Option<u32> {
        let psi_bits = state_bits(self.h.n_qubits, self.codec.bits());
        input
            .get(2 * psi_bits..)
            .and_then(|b| u32_from_bits(b).ok())
    }
}

impl OracleEvaluator for RestartDriverEvaluator {
    fn evaluate(&self, input: &[bool]) -> Result<Vec<bool>, String> {
        let psi_bits = state_bits(self.h.n_qubits, self.codec.bits());
        if input.len() != 2 * psi_bits + 32 {
            return Err(format!(
                "driver argument must be 2×{psi_bits} state bits plus a 32-bit counter"
            ));
        }
        let psi0 = decode_state(&input[..psi_bits], self.h.n_qubits, &self.codec)
            .map_err(|e| e.to_string())?;
        let step = self.counter_of(input).expect("length checked");
        let tau = (step as f64 + 1.0) * self.dtau;
        let out = evolve(&psi0, &self.h, &EvolutionParams::new(tau, self.epsilon))
            .map_err(|e| e.to_string())?;
        let next = step.checked_add(1).ok_or("driver step counter exhausted")?;
        let mut bits = encode_state(&out, &self.codec);
        bits.extend(u32_to_bits(next));
        Ok(bits)
    }

    fn cost(&self, input: &[bool]) -> ComputeCost {
        let step = self.counter_of(input).unwrap_or(0);
        let tau = (step as f64 + 1.0) * self.dtau;
        let order = taylor_order_for(&self.h, tau, self.epsilon).unwrap_or(1);
        evolution_cost(self.h.n_qubits, self.codec.bits(), order)
    }
}

struct StepDriverEvaluator {
    h: Hamiltonian,
    epsilon: f64,
    codec: FixedPointCodec,
    dtau: f64,
}

impl OracleEvaluator for StepDriverEvaluator {
    fn evaluate(&self, input: &[bool]) -> Result<Vec<bool>, String> {
        let psi = decode_state(input, self.h.n_qubits, &self.codec).map_err(|e| e.to_string())?;
        let out = evolve(
            &psi,
            &self.h,
            &EvolutionParams::new(self.dtau, self.epsilon),
        )
        .map_err(|e| e.to_string())?;
        Ok(encode_state(&out, &self.codec))
    }

    fn cost(&self, _input: &[bool]) -> ComputeCost {
        let order = taylor_order_for(&self.h, self.dtau, self.epsilon).unwrap_or(1);
        evolution_cost(self.h.n_qubits, self.codec.bits(), order)
    }
}

/// Binding for a query-every-local-step driver walking a uniform time grid
/// `dtau, 2·dtau, …`. In restart mode the output (evolved state plus bumped
/// counter) spans `state_bits + 32` bits; in step mode it is the evolved
/// state alone, overwriting the argument.
pub fn schrodinger_driver_binding(
    h: Hamiltonian,
    epsilon: f64,
    encoding_precision: u32,
    dtau: f64,
    mode: EvolutionMode,
) -> Result<OracleBinding, QuantumError> {
    if epsilon <= 0.0 || epsilon.is_nan() {
        return Err(QuantumError::BadEpsilon);
    }
    let codec = FixedPointCodec::new(encoding_precision)?;
    let psi_bits = state_bits(h.n_qubits, encoding_precision);
    Ok(match mode {
        EvolutionMode::RestartFromInitial => OracleBinding::new(
            "schrodinger_driver",
            psi_bits + 32,
            CostModel::Approximate { epsilon },
            Arc::new(RestartDriverEvaluator {
                h,
                epsilon,
                codec,
                dtau,
            }),
        ),
        EvolutionMode::StepFromCurrent => OracleBinding::new(
            "schrodinger_driver",
            psi_bits,
            CostModel::Approximate { epsilon },
            Arc::new(StepDriverEvaluator {
                h,
                epsilon,
                codec,
                dtau,
            }),
        ),
    })
}

/// Local-tape layout for a restart-mode driver machine: the query argument
/// spans `[0, 2·state_bits + 32)` and the output region is its trailing
/// `[state_bits, 2·state_bits + 32)` block.
pub fn restart_driver_regions(
    n_qubits: u32,
    precision: u32,
) -> (crate::tape::Interval, crate::tape::Interval) {
    let p = state_bits(n_qubits, precision) as i64;
    (
        crate::tape::Interval::new(0, 2 * p + 32),
        crate::tape::Interval::new(p, 2 * p + 32),
    )
}

// ---------------------------------------------------------------------------
// Hamiltonian and state files
// ---------------------------------------------------------------------------

/// Hamiltonian input file: sparse entries, upper triangle sufficient, the
/// Hermitian mirror is filled in automatically.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HamiltonianFile {
    pub n_qubits: u32,
    /// Rows of `[row, col, re, im]`.
    pub entries: Vec<(usize, usize, f64, f64)>,
}

#[derive(Debug, Error)]
pub enum HamiltonianFileError {
    #[error("entry ({0}, {1}) out of range for {2} qubits")]
    OutOfRange(usize, usize, u32),
    #[error("diagonal entry ({0}, {0}) has imaginary part {1}")]
    ComplexDiagonal(usize, f64),
    #[error("conflicting values for entry ({0}, {1})")]
    Conflict(usize, usize),
    #[error(transparent)]
    Quantum(#[from] QuantumError),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl HamiltonianFile {
    pub fn from_json(json: &str) -> Result<HamiltonianFile, HamiltonianFileError> {
        Ok(serde_json::from_str(json)?)
    }

    pub fn into_hamiltonian(self) -> Result<Hamiltonian, HamiltonianFileError> {
        if self.n_qubits > MAX_QUBITS {
            return Err(QuantumError::DeskScale(self.n_qubits).into());
        }
        let dim = 1usize << self.n_qubits;
        let mut m = vec![Complex64::new(0.0, 0.0); dim * dim];
        let mut set = vec![false; dim * dim];
        for (row, col, re, im) in self.entries {
            if row >= dim || col >= dim {
                return Err(HamiltonianFileError::OutOfRange(row, col, self.n_qubits));
            }
            if row == col && im.abs() > HERMITIAN_TOL {
                return Err(HamiltonianFileError::ComplexDiagonal(row, im));
            }
            let z = Complex64::new(re, im);
            for (r, c, v) in [(row, col, z), (col, row, z.conj())] {
                let idx = r * dim + c;
                if set[idx] && (m[idx] - v).norm() > HERMITIAN_TOL {
                    return Err(HamiltonianFileError::Conflict(row, col));
                }
                m[idx] = v;
                set[idx] = true;
            }
        }
        Ok(Hamiltonian::new(m, dim)?)
    }
}

/// State vector export: a JSON array of `[re, im]` pairs.
pub fn state_to_json(psi: &QuantumState) -> String {
    let pairs: Vec<[f64; 2]> = psi.amplitudes.iter().map(|z| [z.re, z.im]).collect();
    serde_json::to_string(&pairs).expect("state serializes")
}

pub fn state_from_json(json: &str) -> Result<QuantumState, QuantumError> {
    let pairs: Vec<[f64; 2]> =
        serde_json::from_str(json).map_err(|_| QuantumError::NotPowerOfTwo(0))?;
    QuantumState::new(
        pairs
            .into_iter()
            .map(|[re, im]| Complex64::new(re, im))
            .collect(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn zero_matrix_is_hermitian() {
        assert!(Hamiltonian::zero(1).check_hermitian(0.0).is_ok());
    }

    #[test]
    fn pauli_x_is_hermitian() {
        assert!(Hamiltonian::pauli_x().check_hermitian(0.0).is_ok());
    }

    #[test]
    fn upper_triangular_violation_is_reported() {
        let h = Hamiltonian {
            matrix: vec![c(0.0, 0.0), c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)],
            dim: 2,
            n_qubits: 1,
        };
        assert_eq!(
            h.check_hermitian(1e-12),
            Err(QuantumError::NotHermitian(1.0))
        );
    }

    #[test]
    fn zero_hamiltonian_needs_order_zero() {
        let h = Hamiltonian::zero(2);
        assert_eq!(taylor_order_for(&h, 3.0, 1e-12).unwrap(), 0);
    }

    #[test]
    fn order_for_unit_norm_matches_direct_bound_evaluation() {
        // B = 1: smallest J with e/(J+1)! ≤ 1e-9, found by evaluating the
        // bound sequence directly.
        let mut expected = None;
        for j in 0..64u32 {
            let mut fact = 1.0f64;
            for i in 2..=(j + 1) {
                fact *= i as f64;
            }
            if std::f64::consts::E / fact <= 1e-9 {
                expected = Some(j);
                break;
            }
        }
        let expected = expected.unwrap();
        // Scale Pauli-X so its Frobenius bound is exactly 1 at τ = 1.
        let s = 1.0 / 2.0f64.sqrt();
        let h = Hamiltonian::new(vec![c(0.0, 0.0), c(s, 0.0), c(s, 0.0), c(0.0, 0.0)], 2).unwrap();
        assert_eq!(taylor_order_for(&h, 1.0, 1e-9).unwrap(), expected);
    }

    #[test]
    fn halving_epsilon_never_lowers_the_order() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let h = random_hermitian(2, &mut rng);
        let mut eps = 1e-3;
        let mut prev = taylor_order_for(&h, 0.9, eps).unwrap();
        for _ in 0..20 {
            eps /= 2.0;
            let next = taylor_order_for(&h, 0.9, eps).unwrap();
            assert!(next >= prev);
            prev = next;
        }
    }

    #[test]
    fn zero_hamiltonian_evolution_is_identity() {
        let psi = QuantumState::new(vec![c(0.6, 0.0), c(0.0, 0.8)]).unwrap();
        let h = Hamiltonian::zero(1);
        let out = evolve(&psi, &h, &EvolutionParams::new(2.5, 1e-12)).unwrap();
        assert_eq!(out.amplitudes, psi.amplitudes);
    }

    #[test]
    fn pauli_x_quarter_turn_hits_closed_form() {
        // e^{-iXτ} = cos τ·I − i sin τ·X at τ = π/2 sends |0⟩ to (0, −i).
        let psi = QuantumState::zero_basis(1);
        let h = Hamiltonian::pauli_x();
        let out = evolve(
            &psi,
            &h,
            &EvolutionParams::new(std::f64::consts::FRAC_PI_2, 1e-9),
        )
        .unwrap();
        assert!((out.amplitudes[0] - c(0.0, 0.0)).norm() <= 1e-9);
        assert!((out.amplitudes[1] - c(0.0, -1.0)).norm() <= 1e-9);
    }

    #[test]
    fn diagonal_hamiltonian_exact_phases() {
        let h =
            Hamiltonian::new(vec![c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)], 2).unwrap();
        let psi = QuantumState::new(vec![c(0.5f64.sqrt(), 0.0), c(0.5f64.sqrt(), 0.0)]).unwrap();
        let out = evolve_exact(&psi, &h, std::f64::consts::PI).unwrap();
        assert!((out.amplitudes[0] - psi.amplitudes[0]).norm() < 1e-12);
        assert!((out.amplitudes[1] + psi.amplitudes[1]).norm() < 1e-12);
    }

    #[test]
    fn truncated_matches_exact_on_seeded_corpus() {
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        for n in [1u32, 2, 3] {
            for _ in 0..8 {
                let h = random_hermitian(n, &mut rng);
                let psi = random_state(n, &mut rng);
                let tau: f64 = rng.gen_range(0.0..1.5);
                let approx = evolve(&psi, &h, &EvolutionParams::new(tau, 1e-9)).unwrap();
                let exact = evolve_exact(&psi, &h, tau).unwrap();
                assert!(distance(&approx, &exact) <= 1e-9);
                assert!((norm(&approx) - 1.0).abs() <= 1e-9 + 1e-12);
            }
        }
    }

    #[test]
    fn norm_and_renormalize() {
        let psi = QuantumState::new(vec![c(1.0, 0.0), c(0.0, 0.0)]).unwrap();
        assert!((norm(&psi) - 1.0).abs() < 1e-15);
        let skewed = QuantumState::new(vec![c(3.0, 0.0), c(4.0, 0.0)]).unwrap();
        assert!((norm(&renormalize(&skewed).unwrap()) - 1.0).abs() <= 1e-15);
        let zero = QuantumState::new(vec![c(0.0, 0.0), c(0.0, 0.0)]).unwrap();
        assert!(matches!(renormalize(&zero), Err(QuantumError::ZeroNorm)));
    }

    #[test]
    fn measurement_truncates_and_bounds() {
        let m = measure_with_uncertainty(0.71875, 3);
        assert_eq!(m.value, 0.625);
        assert_eq!(m.lo, 0.625);
        assert_eq!(m.hi, 0.75);
        // Fixed point of the truncation.
        let m2 = measure_with_uncertainty(0.625, 3);
        assert_eq!(m2.value, 0.625);
        // Soundness at random points.
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..500 {
            let x: f64 = rng.gen_range(-4.0..4.0);
            let k = rng.gen_range(1..20);
            let m = measure_with_uncertainty(x, k);
            assert!(m.lo <= x && x < m.hi);
            assert!(m.lo == m.value);
        }
    }

    #[test]
    fn state_codec_bounds_component_error() {
        let codec = FixedPointCodec::new(16).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let psi = random_state(2, &mut rng);
        let back = decode_state(&encode_state(&psi, &codec), 2, &codec).unwrap();
        for (a, b) in psi.amplitudes.iter().zip(&back.amplitudes) {
            assert!((a.re - b.re).abs() <= codec.quantization_error());
            assert!((a.im - b.im).abs() <= codec.quantization_error());
        }
    }

    #[test]
    fn schrodinger_binding_declares_pinned_output_length() {
        let b = schrodinger_oracle_binding(Hamiltonian::pauli_x(), 1e-9, 16).unwrap();
        // 2 components × 2 reals × 16 bits.
        assert_eq!(b.declared_output_len, 64);
    }

    #[test]
    fn schrodinger_binding_rejects_tiny_precision() {
        assert!(schrodinger_oracle_binding(Hamiltonian::pauli_x(), 1e-9, 1).is_err());
    }

    #[test]
    fn schrodinger_evaluator_matches_direct_evolution() {
        let h = Hamiltonian::pauli_x();
        let precision = 20;
        let codec = FixedPointCodec::new(precision).unwrap();
        let b = schrodinger_oracle_binding(h.clone(), 1e-9, precision).unwrap();
        let psi = QuantumState::zero_basis(1);
        let tau = 0.7;
        let mut arg = encode_state(&psi, &codec);
        arg.extend(fixed::f64_to_bits(tau));
        let out_bits = b.evaluator.evaluate(&arg).unwrap();
        let out = decode_state(&out_bits, 1, &codec).unwrap();
        let direct = evolve(&psi, &h, &EvolutionParams::new(tau, 1e-9)).unwrap();
        // Within quantization of input + output.
        let q = codec.quantization_error() * (2.0 * 8.0f64).sqrt();
        assert!(distance(&out, &direct) <= 1e-9 + 3.0 * q);
    }

    #[test]
    fn hamiltonian_file_completes_hermitian_mirror() {
        let file = HamiltonianFile {
            n_qubits: 1,
            entries: vec![(0, 1, 0.0, -1.0)],
        };
        let h = file.into_hamiltonian().unwrap();
        assert_eq!(h.entry(1, 0), c(0.0, 1.0));
        assert!(h.check_hermitian(0.0).is_ok());
    }

    #[test]
    fn hamiltonian_file_rejects_complex_diagonal() {
        let file = HamiltonianFile {
            n_qubits: 1,
            entries: vec![(0, 0, 1.0, 0.5)],
        };
        assert!(matches!(
            file.into_hamiltonian(),
            Err(HamiltonianFileError::ComplexDiagonal(0, _))
        ));
    }

    #[test]
    fn state_json_round_trip() {
        let psi = QuantumState::new(vec![c(0.6, 0.1), c(-0.2, 0.77)]).unwrap();
        let back = state_from_json(&state_to_json(&psi)).unwrap();
        assert_eq!(back, psi);
    }
}
