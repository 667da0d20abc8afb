//! Brute-force reference values in a truncated Fock space.
//!
//! States are expanded on the basis `|n_1, …, n_k⟩` with `n_j ≤ cutoff` and
//! operators act by explicit index arithmetic. Nothing here uses Wick's
//! theorem or the closed-form moment tables of [`crate::state`]; the module
//! exists to check them. It is slow and meant for `k ≤ 3` modes.

use nalgebra::DMatrix;
use thiserror::Error;

use crate::scattering::TransmissionBlock;
use crate::state::InputState;
use crate::C64;

/// Largest tail mass a truncated state may discard.
pub const TAIL_TOLERANCE: f64 = 1e-8;

/// Relative tail of the `(n+1)⁴`-weighted photon distribution left out by
/// [`TruncatedSpace::for_state`]; keeps truncation bias in fourth moments
/// near round-off.
pub const MOMENT_TAIL_TOLERANCE: f64 = 1e-15;

/// Refuse to allocate bases larger than this.
const MAX_DIM: usize = 1 << 25;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OracleError {
    #[error("cutoff {cutoff} drops tail mass {tail:e}; need cutoff >= {required}")]
    CutoffTooSmall { cutoff: u32, required: u32, tail: f64 },
    #[error("state has {state} modes but the space has {space}")]
    ModeMismatch { state: usize, space: usize },
    #[error("truncated space of dimension {0} is too large")]
    SpaceTooLarge(usize),
    #[error("output mode {0} receives no light; correlation undefined")]
    DarkOutput(usize),
    #[error("transmission block has {inputs} inputs, state needs {modes}")]
    TooFewInputs { inputs: usize, modes: usize },
    #[error("invalid state: {0}")]
    InvalidState(#[from] crate::state::StateError),
}

/// Product basis with at most `cutoff` photons per mode, in lexicographic
/// order with mode 0 most significant.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TruncatedSpace {
    modes: usize,
    cutoff: u32,
}

impl TruncatedSpace {
    pub fn new(modes: usize, cutoff: u32) -> Result<Self, OracleError> {
        let dim = (cutoff as usize + 1)
            .checked_pow(modes as u32)
            .filter(|&d| d <= MAX_DIM)
            .ok_or(OracleError::SpaceTooLarge(usize::MAX))?;
        if dim == 0 {
            return Err(OracleError::SpaceTooLarge(0));
        }
        Ok(Self { modes, cutoff })
    }

    /// Smallest space in which `state` is represented with negligible
    /// truncation bias on fourth moments.
    pub fn for_state(state: &InputState) -> Result<Self, OracleError> {
        state.validate()?;
        let cutoff = match state {
            InputState::FockProduct(occ) => occ.iter().copied().max().unwrap_or(0),
            InputState::FockSuperposition(terms) => {
                terms.iter().flat_map(|(_, o)| o.iter().copied()).max().unwrap_or(0)
            }
            _ => mode_distributions(state).iter().map(|p| weighted_cutoff(p, MOMENT_TAIL_TOLERANCE)).max().unwrap_or(0),
        };
        Self::new(state.modes(), cutoff)
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn cutoff(&self) -> u32 {
        self.cutoff
    }

    pub fn dim(&self) -> usize {
        (self.cutoff as usize + 1).pow(self.modes as u32)
    }

    fn stride(&self, mode: usize) -> usize {
        (self.cutoff as usize + 1).pow((self.modes - 1 - mode) as u32)
    }

    fn occupation_of(&self, index: usize, mode: usize) -> u32 {
        ((index / self.stride(mode)) % (self.cutoff as usize + 1)) as u32
    }

    pub fn occupations(&self, index: usize) -> Vec<u32> {
        (0..self.modes).map(|m| self.occupation_of(index, m)).collect()
    }

    pub fn index_of(&self, occupations: &[u32]) -> Option<usize> {
        if occupations.len() != self.modes || occupations.iter().any(|&n| n > self.cutoff) {
            return None;
        }
        Some(occupations.iter().enumerate().map(|(m, &n)| n as usize * self.stride(m)).sum())
    }

    /// `a_mode |index⟩ = √n |index − stride⟩`.
    fn lower(&self, index: usize, mode: usize) -> Option<(usize, f64)> {
        let n = self.occupation_of(index, mode);
        (n > 0).then(|| (index - self.stride(mode), f64::from(n).sqrt()))
    }
}

/// A state expanded on a [`TruncatedSpace`].
///
/// Mixed states are stored by their Fock-basis populations: every mixed
/// family handled here (thermal products) has a density matrix that is
/// diagonal in the number basis.
#[derive(Debug, Clone, PartialEq)]
pub enum DenseState {
    Pure { space: TruncatedSpace, amplitudes: Vec<C64> },
    Mixed { space: TruncatedSpace, populations: Vec<f64> },
}

impl DenseState {
    pub fn space(&self) -> &TruncatedSpace {
        match self {
            Self::Pure { space, .. } | Self::Mixed { space, .. } => space,
        }
    }

    /// `⟨ψ|ψ⟩` or `Tr ρ`.
    pub fn norm(&self) -> f64 {
        match self {
            Self::Pure { amplitudes, .. } => amplitudes.iter().map(|z| z.norm_sqr()).sum(),
            Self::Mixed { populations, .. } => populations.iter().sum(),
        }
    }

    /// Dense density matrix; only sensible for small spaces.
    pub fn density_matrix(&self) -> DMatrix<C64> {
        match self {
            Self::Pure { amplitudes, .. } => {
                let n = amplitudes.len();
                DMatrix::from_fn(n, n, |i, j| amplitudes[i] * amplitudes[j].conj())
            }
            Self::Mixed { populations, .. } => {
                let n = populations.len();
                DMatrix::from_fn(n, n, |i, j| if i == j { C64::from(populations[i]) } else { C64::from(0.0) })
            }
        }
    }
}

/// Photon-number distribution of each mode, carried far enough that the
/// remaining mass is below `f64` resolution. Only meaningful for product
/// families.
fn mode_distributions(state: &InputState) -> Vec<Vec<f64>> {
    match state {
        InputState::FockProduct(occ) => occ
            .iter()
            .map(|&n| {
                let mut p = vec![0.0; n as usize + 1];
                p[n as usize] = 1.0;
                p
            })
            .collect(),
        InputState::FockSuperposition(_) => Vec::new(),
        InputState::CoherentProduct(alphas) => alphas
            .iter()
            .map(|a| single_mode_amplitudes_coherent(*a, None).iter().map(|z| z.norm_sqr()).collect())
            .collect(),
        InputState::ThermalProduct(means) => means.iter().map(|&n| thermal_populations(n, None)).collect(),
        InputState::SqueezedVacuumProduct(params) => params
            .iter()
            .map(|s| single_mode_amplitudes_squeezed(s.r, s.theta, None).iter().map(|z| z.norm_sqr()).collect())
            .collect(),
    }
}

/// Terms with probability below this are treated as the end of a series.
const NEGLIGIBLE: f64 = 1e-300;
const SERIES_LIMIT: usize = 20_000;

fn series_done(n: usize, p: f64, mean: f64) -> bool {
    n >= SERIES_LIMIT || (n as f64 > mean + 1.0 && p < NEGLIGIBLE)
}

/// `e^{−|α|²/2} αⁿ/√n!`, to `len` terms or to exhaustion.
fn single_mode_amplitudes_coherent(alpha: C64, len: Option<usize>) -> Vec<C64> {
    let mean = alpha.norm_sqr();
    let mut amp = C64::from((-0.5 * mean).exp());
    let mut out = vec![amp];
    let mut n = 1;
    loop {
        if len.map_or(series_done(n, amp.norm_sqr(), mean), |l| n >= l) {
            break;
        }
        amp = amp * alpha / (n as f64).sqrt();
        out.push(amp);
        n += 1;
    }
    out
}

/// Geometric populations `n̄ⁿ/(1+n̄)^{n+1}`.
fn thermal_populations(mean: f64, len: Option<usize>) -> Vec<f64> {
    let ratio = mean / (1.0 + mean);
    let mut p = 1.0 / (1.0 + mean);
    let mut out = vec![p];
    let mut n = 1;
    loop {
        if len.map_or(series_done(n, p, mean), |l| n >= l) {
            break;
        }
        p *= ratio;
        out.push(p);
        n += 1;
    }
    out
}

/// Squeezed vacuum `S(η)|0⟩` with `S(η) = exp[(−η a†² + η* a²)/2]`:
/// `c_{2m} = (−e^{iθ} tanh r)^m √((2m)!) / (2^m m! √cosh r)`, odd terms zero.
fn single_mode_amplitudes_squeezed(r: f64, theta: f64, len: Option<usize>) -> Vec<C64> {
    let mean = r.sinh().powi(2);
    let step = -C64::from_polar(r.tanh(), theta);
    let mut even = C64::from(1.0 / r.cosh().sqrt());
    let mut out = vec![even];
    let mut n = 1;
    loop {
        if len.map_or(series_done(n, even.norm_sqr(), mean) && n % 2 == 1, |l| n >= l) {
            break;
        }
        if n % 2 == 0 {
            let m = (n / 2) as f64;
            even = even * step * ((2.0 * m) * (2.0 * m - 1.0)).sqrt() / (2.0 * m);
            out.push(even);
        } else {
            out.push(C64::from(0.0));
        }
        n += 1;
    }
    out
}

/// Tail mass `Σ_{n > cutoff} p(n)`.
fn tail_mass(p: &[f64], cutoff: u32) -> f64 {
    p.iter().skip(cutoff as usize + 1).sum()
}

/// Smallest cutoff whose plain tail mass is below `tol`.
fn plain_cutoff(p: &[f64], tol: f64) -> u32 {
    (0..p.len() as u32).find(|&c| tail_mass(p, c) < tol).unwrap_or(p.len() as u32)
}

/// Smallest cutoff whose `(n+1)⁴`-weighted tail is below `tol` relative to
/// the full weighted sum.
fn weighted_cutoff(p: &[f64], tol: f64) -> u32 {
    let w: Vec<f64> = p.iter().enumerate().map(|(n, &x)| x * ((n + 1) as f64).powi(4)).collect();
    // Suffix sums from the far end; `total − prefix` would bottom out at
    // round-off and never reach the tolerance.
    let mut tails = vec![0.0; w.len() + 1];
    for i in (0..w.len()).rev() {
        tails[i] = tails[i + 1] + w[i];
    }
    let total = tails[0];
    (0..w.len()).find(|&c| tails[c + 1] <= tol * total).unwrap_or(w.len()) as u32
}

/// Expand `state` on `space`, renormalizing after truncation.
pub fn build_state(state: &InputState, space: &TruncatedSpace) -> Result<DenseState, OracleError> {
    state.validate()?;
    if state.modes() != space.modes {
        return Err(OracleError::ModeMismatch { state: state.modes(), space: space.modes });
    }
    let c = space.cutoff;
    let dim = space.dim();

    if let InputState::FockSuperposition(terms) = state {
        let mut amplitudes = vec![C64::from(0.0); dim];
        let mut kept = 0.0;
        for (amp, occ) in terms {
            if let Some(i) = space.index_of(occ) {
                amplitudes[i] += amp;
                kept += amp.norm_sqr();
            }
        }
        let tail = 1.0 - kept;
        if tail > TAIL_TOLERANCE {
            let required = terms.iter().flat_map(|(_, o)| o.iter().copied()).max().unwrap_or(0);
            return Err(OracleError::CutoffTooSmall { cutoff: c, required, tail });
        }
        return Ok(renormalized_pure(*space, amplitudes));
    }

    let dists = mode_distributions(state);
    let kept: f64 = dists.iter().map(|p| 1.0 - tail_mass(p, c)).product();
    let tail = 1.0 - kept;
    if tail > TAIL_TOLERANCE {
        // Split the budget evenly in log space across modes.
        let per_mode = 1.0 - (1.0 - TAIL_TOLERANCE).powf(1.0 / dists.len() as f64);
        let required = dists.iter().map(|p| plain_cutoff(p, per_mode)).max().unwrap_or(0);
        return Err(OracleError::CutoffTooSmall { cutoff: c, required, tail });
    }

    let len = Some(c as usize + 1);
    let per_mode: Vec<Vec<C64>> = match state {
        InputState::FockProduct(occ) => occ
            .iter()
            .map(|&n| {
                let mut v = vec![C64::from(0.0); c as usize + 1];
                v[n as usize] = C64::from(1.0);
                v
            })
            .collect(),
        InputState::CoherentProduct(alphas) => {
            alphas.iter().map(|a| single_mode_amplitudes_coherent(*a, len)).collect()
        }
        InputState::SqueezedVacuumProduct(params) => {
            params.iter().map(|s| single_mode_amplitudes_squeezed(s.r, s.theta, len)).collect()
        }
        InputState::ThermalProduct(means) => {
            let pops: Vec<Vec<f64>> = means.iter().map(|&n| thermal_populations(n, len)).collect();
            let populations = tensor(&pops, |a, b| a * b, 1.0);
            let total: f64 = populations.iter().sum();
            return Ok(DenseState::Mixed {
                space: *space,
                populations: populations.into_iter().map(|p| p / total).collect(),
            });
        }
        InputState::FockSuperposition(_) => unreachable!(),
    };
    Ok(renormalized_pure(*space, tensor(&per_mode, |a, b| a * b, C64::from(1.0))))
}

fn renormalized_pure(space: TruncatedSpace, mut amplitudes: Vec<C64>) -> DenseState {
    let norm = amplitudes.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    for a in &mut amplitudes {
        *a /= norm;
    }
    DenseState::Pure { space, amplitudes }
}

/// Kronecker product of per-mode vectors, mode 0 most significant.
fn tensor<T: Copy>(factors: &[Vec<T>], mul: impl Fn(T, T) -> T, one: T) -> Vec<T> {
    let mut out = vec![one];
    for f in factors {
        let mut next = Vec::with_capacity(out.len() * f.len());
        for &a in &out {
            for &b in f {
                next.push(mul(a, b));
            }
        }
        out = next;
    }
    out
}

/// Sparse vector as `(index, amplitude)` pairs.
type Sparse = Vec<(usize, C64)>;

/// `Σ_p coeffs[p] a_p` applied to a sparse vector.
fn apply_sparse(space: &TruncatedSpace, coeffs: &[C64], v: &Sparse) -> Sparse {
    let mut out: Sparse = Vec::new();
    for &(i, amp) in v {
        for (p, &c) in coeffs.iter().enumerate() {
            if c == C64::from(0.0) {
                continue;
            }
            if let Some((j, s)) = space.lower(i, p) {
                let add = amp * c * s;
                match out.iter_mut().find(|(k, _)| *k == j) {
                    Some(slot) => slot.1 += add,
                    None => out.push((j, add)),
                }
            }
        }
    }
    out
}

/// `Σ_p coeffs[p] a_p` applied to a dense vector.
fn apply_dense(space: &TruncatedSpace, coeffs: &[C64], v: &[C64]) -> Vec<C64> {
    let mut out = vec![C64::from(0.0); v.len()];
    for (p, &c) in coeffs.iter().enumerate() {
        if c == C64::from(0.0) {
            continue;
        }
        for (i, &amp) in v.iter().enumerate() {
            if amp == C64::from(0.0) {
                continue;
            }
            if let Some((j, s)) = space.lower(i, p) {
                out[j] += amp * c * s;
            }
        }
    }
    out
}

fn unit(k: usize, mode: usize) -> Vec<C64> {
    let mut e = vec![C64::from(0.0); k];
    e[mode] = C64::from(1.0);
    e
}

fn dot(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn sparse_dot(a: &Sparse, b: &Sparse) -> C64 {
    a.iter().filter_map(|(i, x)| b.iter().find(|(j, _)| j == i).map(|(_, y)| x.conj() * y)).sum()
}

/// `⟨a†_m a†_p a_q a_n⟩ = ⟨a_p a_m ψ | a_q a_n ψ⟩`, summed over the mixture.
pub fn moment_bruteforce(state: &DenseState, (m, p, q, n): (usize, usize, usize, usize)) -> C64 {
    let space = state.space();
    let k = space.modes;
    let (em, ep, eq, en) = (unit(k, m), unit(k, p), unit(k, q), unit(k, n));
    match state {
        DenseState::Pure { amplitudes, .. } => {
            let bra = apply_dense(space, &ep, &apply_dense(space, &em, amplitudes));
            let ket = apply_dense(space, &eq, &apply_dense(space, &en, amplitudes));
            dot(&bra, &ket)
        }
        DenseState::Mixed { populations, .. } => populations
            .iter()
            .enumerate()
            .filter(|(_, &w)| w > 0.0)
            .map(|(i, &w)| {
                let e: Sparse = vec![(i, C64::from(1.0))];
                let bra = apply_sparse(space, &ep, &apply_sparse(space, &em, &e));
                let ket = apply_sparse(space, &eq, &apply_sparse(space, &en, &e));
                sparse_dot(&bra, &ket) * w
            })
            .sum(),
    }
}

/// `⟨a†_m a_n⟩ = ⟨a_m ψ | a_n ψ⟩`.
pub fn first_moment_bruteforce(state: &DenseState, m: usize, n: usize) -> C64 {
    let space = state.space();
    let k = space.modes;
    let (em, en) = (unit(k, m), unit(k, n));
    match state {
        DenseState::Pure { amplitudes, .. } => {
            dot(&apply_dense(space, &em, amplitudes), &apply_dense(space, &en, amplitudes))
        }
        DenseState::Mixed { populations, .. } => populations
            .iter()
            .enumerate()
            .filter(|(_, &w)| w > 0.0)
            .map(|(i, &w)| {
                let e: Sparse = vec![(i, C64::from(1.0))];
                sparse_dot(&apply_sparse(space, &em, &e), &apply_sparse(space, &en, &e)) * w
            })
            .sum(),
    }
}

/// Two-detector correlation with output operators `b_α = Σ_p t_{αp} a_p`
/// applied directly to the truncated state:
/// `C = ‖b_β b_α ψ‖² / (‖b_α ψ‖² ‖b_β ψ‖²) − 1`.
pub fn correlation_bruteforce(
    t: &TransmissionBlock,
    state: &DenseState,
    alpha: usize,
    beta: usize,
) -> Result<f64, OracleError> {
    let space = state.space();
    let k = space.modes;
    if t.inputs() < k {
        return Err(OracleError::TooFewInputs { inputs: t.inputs(), modes: k });
    }
    let row = |out: usize| -> Vec<C64> { (0..k).map(|p| t.amplitude(out, p)).collect() };
    let (ua, ub) = (row(alpha), row(beta));

    let (coincidence, ia, ib) = match state {
        DenseState::Pure { amplitudes, .. } => {
            let a_psi = apply_dense(space, &ua, amplitudes);
            let b_psi = apply_dense(space, &ub, amplitudes);
            let ba_psi = apply_dense(space, &ub, &a_psi);
            (dot(&ba_psi, &ba_psi).re, dot(&a_psi, &a_psi).re, dot(&b_psi, &b_psi).re)
        }
        DenseState::Mixed { populations, .. } => {
            let mut acc = (0.0, 0.0, 0.0);
            for (i, &w) in populations.iter().enumerate().filter(|(_, &w)| w > 0.0) {
                let e: Sparse = vec![(i, C64::from(1.0))];
                let a_e = apply_sparse(space, &ua, &e);
                let b_e = apply_sparse(space, &ub, &e);
                let ba_e = apply_sparse(space, &ub, &a_e);
                acc.0 += w * sparse_dot(&ba_e, &ba_e).re;
                acc.1 += w * sparse_dot(&a_e, &a_e).re;
                acc.2 += w * sparse_dot(&b_e, &b_e).re;
            }
            acc
        }
    };
    let n_bar: f64 = (0..k).map(|m| first_moment_bruteforce(state, m, m).re).sum();
    let dark = 1e-14 * n_bar * n_bar;
    if !(ia > dark) {
        return Err(OracleError::DarkOutput(alpha));
    }
    if !(ib > dark) {
        return Err(OracleError::DarkOutput(beta));
    }
    Ok(coincidence / (ia * ib) - 1.0)
}
