//! Input states of light and their normally ordered moments.
//!
//! The correlation between two transmitted modes only needs
//! `⟨a†_m a_n⟩` and `⟨a†_m a†_p a_q a_n⟩` of the light entering the medium.
//! Fock products and superpositions are evaluated exactly with sparse ladder
//! algebra; coherent states factorize; thermal and squeezed-vacuum products
//! are zero-mean Gaussian states and go through Wick's theorem.

mod grammar;

use std::collections::BTreeMap;
use std::fmt;

use nalgebra::DMatrix;
use thiserror::Error;

use crate::C64;

pub use grammar::StateParseError;

const ZERO: C64 = C64::new(0.0, 0.0);

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StateError {
    #[error("state has no modes")]
    NoModes,
    #[error("superposition has no terms")]
    EmptySuperposition,
    #[error("superposition terms have different mode counts ({0} and {1})")]
    RaggedSuperposition(usize, usize),
    #[error("superposition repeats the occupation pattern {0:?}")]
    DuplicateTerm(Vec<u32>),
    #[error("superposition is not normalized (sum of |c|^2 = {0})")]
    NotNormalized(f64),
    #[error("invalid parameter for mode {mode}: {reason}")]
    InvalidParameter { mode: usize, reason: String },
    #[error("mode index {index} out of range for a {modes}-mode state")]
    ModeOutOfRange { index: usize, modes: usize },
    #[error("second-order correlation needs a single-mode state, got {0} modes")]
    NotSingleMode(usize),
    #[error("state carries no photons")]
    ZeroMeanPhoton,
}

/// Squeezing parameters of `S(η) = exp[(−η a†² + η* a²)/2]`, `η = r e^{iθ}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Squeezing {
    pub r: f64,
    pub theta: f64,
}

impl Squeezing {
    pub fn new(r: f64, theta: f64) -> Self {
        Self { r, theta }
    }

    /// Squeezing with mean photon number `sinh² r = n̄`.
    pub fn with_mean_photon(n_bar: f64, theta: f64) -> Self {
        Self { r: n_bar.sqrt().asinh(), theta }
    }

    pub fn mean_photon(&self) -> f64 {
        self.r.sinh().powi(2)
    }

    /// `⟨a²⟩ = −e^{iθ} sinh r cosh r`.
    pub fn anomalous(&self) -> C64 {
        -C64::from_polar(1.0, self.theta) * (self.r.sinh() * self.r.cosh())
    }
}

/// Light entering the first `k` channels, one entry per mode.
#[derive(Debug, Clone, PartialEq)]
pub enum InputState {
    /// `|n_1, …, n_k⟩`.
    FockProduct(Vec<u32>),
    /// `Σ c_j |n^{(j)}_1, …, n^{(j)}_k⟩`.
    FockSuperposition(Vec<(C64, Vec<u32>)>),
    /// `|α_1⟩ ⊗ … ⊗ |α_k⟩`.
    CoherentProduct(Vec<C64>),
    /// Product of thermal states with the given mean photon numbers.
    ThermalProduct(Vec<f64>),
    /// Product of single-mode squeezed vacua.
    SqueezedVacuumProduct(Vec<Squeezing>),
}

impl InputState {
    pub fn fock(occupations: &[u32]) -> Self {
        Self::FockProduct(occupations.to_vec())
    }

    /// Validated superposition.
    pub fn superposition(terms: Vec<(C64, Vec<u32>)>) -> Result<Self, StateError> {
        let state = Self::FockSuperposition(terms);
        state.validate()?;
        Ok(state)
    }

    /// Equal-amplitude superposition of `photons` quanta all sitting in one of
    /// `modes` modes, e.g. `sp(2, 2) = (|2,0⟩ + |0,2⟩)/√2`.
    pub fn sp(modes: usize, photons: u32) -> Self {
        let amp = C64::new(1.0 / (modes as f64).sqrt(), 0.0);
        let terms = (0..modes)
            .map(|j| {
                let mut occ = vec![0; modes];
                occ[j] = photons;
                (amp, occ)
            })
            .collect();
        Self::FockSuperposition(terms)
    }

    pub fn coherent(amplitudes: &[C64]) -> Self {
        Self::CoherentProduct(amplitudes.to_vec())
    }

    pub fn thermal(mean_photons: &[f64]) -> Self {
        Self::ThermalProduct(mean_photons.to_vec())
    }

    pub fn squeezed_vacuum(params: &[Squeezing]) -> Self {
        Self::SqueezedVacuumProduct(params.to_vec())
    }

    pub fn modes(&self) -> usize {
        match self {
            Self::FockProduct(occ) => occ.len(),
            Self::FockSuperposition(terms) => terms.first().map_or(0, |(_, occ)| occ.len()),
            Self::CoherentProduct(a) => a.len(),
            Self::ThermalProduct(n) => n.len(),
            Self::SqueezedVacuumProduct(p) => p.len(),
        }
    }

    pub fn is_gaussian(&self) -> bool {
        matches!(self, Self::CoherentProduct(_) | Self::ThermalProduct(_) | Self::SqueezedVacuumProduct(_))
    }

    pub fn validate(&self) -> Result<(), StateError> {
        if self.modes() == 0 {
            return Err(match self {
                Self::FockSuperposition(t) if t.is_empty() => StateError::EmptySuperposition,
                _ => StateError::NoModes,
            });
        }
        let bad = |mode: usize, reason: String| Err(StateError::InvalidParameter { mode, reason });
        match self {
            Self::FockProduct(_) => {}
            Self::FockSuperposition(terms) => {
                let k = self.modes();
                let mut seen = BTreeMap::new();
                let mut norm = 0.0;
                for (amp, occ) in terms {
                    if occ.len() != k {
                        return Err(StateError::RaggedSuperposition(k, occ.len()));
                    }
                    if seen.insert(occ.clone(), ()).is_some() {
                        return Err(StateError::DuplicateTerm(occ.clone()));
                    }
                    norm += amp.norm_sqr();
                }
                if (norm - 1.0).abs() > 1e-12 {
                    return Err(StateError::NotNormalized(norm));
                }
            }
            Self::CoherentProduct(alphas) => {
                for (j, a) in alphas.iter().enumerate() {
                    if !(a.re.is_finite() && a.im.is_finite()) {
                        return bad(j, format!("non-finite amplitude {a}"));
                    }
                }
            }
            Self::ThermalProduct(means) => {
                for (j, &n) in means.iter().enumerate() {
                    if !(n.is_finite() && n > 0.0) {
                        return bad(j, format!("thermal mean photon number must be positive, got {n}"));
                    }
                }
            }
            Self::SqueezedVacuumProduct(params) => {
                for (j, p) in params.iter().enumerate() {
                    if !(p.r.is_finite() && p.r >= 0.0) || !p.theta.is_finite() {
                        return bad(j, format!("invalid squeezing r = {}, theta = {}", p.r, p.theta));
                    }
                }
            }
        }
        Ok(())
    }

    /// `M[m][n] = ⟨a†_m a_n⟩`.
    pub fn first_moments(&self) -> DMatrix<C64> {
        let k = self.modes();
        match self {
            Self::FockProduct(occ) => {
                DMatrix::from_fn(k, k, |m, n| if m == n { C64::from(f64::from(occ[m])) } else { ZERO })
            }
            Self::FockSuperposition(_) => {
                let psi = self.sparse_ket();
                let lowered: Vec<Ket> = (0..k).map(|m| lower(&psi, m)).collect();
                DMatrix::from_fn(k, k, |m, n| inner(&lowered[m], &lowered[n]))
            }
            Self::CoherentProduct(a) => DMatrix::from_fn(k, k, |m, n| a[m].conj() * a[n]),
            Self::ThermalProduct(means) => {
                DMatrix::from_fn(k, k, |m, n| if m == n { C64::from(means[m]) } else { ZERO })
            }
            Self::SqueezedVacuumProduct(p) => {
                DMatrix::from_fn(k, k, |m, n| if m == n { C64::from(p[m].mean_photon()) } else { ZERO })
            }
        }
    }

    /// Total mean photon number, the trace of [`first_moments`](Self::first_moments).
    pub fn mean_photon(&self) -> f64 {
        self.first_moments().trace().re
    }

    /// `⟨a†_m a†_p a_q a_n⟩`.
    pub fn fourth_moment(&self, m: usize, p: usize, q: usize, n: usize) -> Result<C64, StateError> {
        let k = self.modes();
        if let Some(&index) = [m, p, q, n].iter().find(|&&i| i >= k) {
            return Err(StateError::ModeOutOfRange { index, modes: k });
        }
        Ok(match self {
            Self::FockProduct(_) | Self::FockSuperposition(_) => {
                let psi = self.sparse_ket();
                let bra = lower(&lower(&psi, m), p);
                let ket = lower(&lower(&psi, n), q);
                inner(&bra, &ket)
            }
            Self::CoherentProduct(a) => a[m].conj() * a[p].conj() * a[q] * a[n],
            Self::ThermalProduct(_) | Self::SqueezedVacuumProduct(_) => {
                let g = GaussianContractions::of(self);
                g.wick(m, p, q, n)
            }
        })
    }

    /// `C = ⟨a†a†aa⟩/⟨a†a⟩² − 1` of a single-mode state.
    pub fn second_order_correlation(&self) -> Result<f64, StateError> {
        if self.modes() != 1 {
            return Err(StateError::NotSingleMode(self.modes()));
        }
        let n = self.mean_photon();
        if !(n > 0.0) {
            return Err(StateError::ZeroMeanPhoton);
        }
        Ok(self.fourth_moment(0, 0, 0, 0)?.re / (n * n) - 1.0)
    }

    /// Precompute every moment needed to evaluate correlations.
    pub fn moment_table(&self) -> Result<MomentTable, StateError> {
        self.validate()?;
        MomentTable::new(self)
    }

    fn sparse_ket(&self) -> Ket {
        match self {
            Self::FockProduct(occ) => Ket::from([(occ.clone(), C64::new(1.0, 0.0))]),
            Self::FockSuperposition(terms) => terms.iter().map(|(amp, occ)| (occ.clone(), *amp)).collect(),
            _ => unreachable!("only Fock families have a sparse ket"),
        }
    }
}

impl fmt::Display for InputState {
    /// Renders in the command-line grammar where one exists.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn join<T>(items: &[T], fmt_one: impl Fn(&T) -> String) -> String {
            items.iter().map(fmt_one).collect::<Vec<_>>().join(",")
        }
        match self {
            Self::FockProduct(occ) => write!(f, "fock:{}", join(occ, |n| n.to_string())),
            Self::FockSuperposition(_) => match self.as_sp() {
                Some((k, n)) => write!(f, "sp:{k}x{n}"),
                None => write!(f, "superposition[{} modes]", self.modes()),
            },
            Self::CoherentProduct(a) => write!(f, "coh:{}", join(a, |z| grammar::format_complex(*z))),
            Self::ThermalProduct(n) => write!(f, "thermal:{}", join(n, |x| x.to_string())),
            Self::SqueezedVacuumProduct(p) => {
                write!(f, "sqvac:{}", join(p, |s| format!("r={}@theta={}", s.r, s.theta)))
            }
        }
    }
}

impl InputState {
    /// `(modes, photons)` when this is exactly `sp(modes, photons)`.
    fn as_sp(&self) -> Option<(usize, u32)> {
        let Self::FockSuperposition(terms) = self else {
            return None;
        };
        let k = self.modes();
        let photons = terms.first()?.1.iter().sum::<u32>();
        (*self == Self::sp(k, photons)).then_some((k, photons))
    }
}

type Ket = BTreeMap<Vec<u32>, C64>;

/// `a_mode |ψ⟩`.
fn lower(ket: &Ket, mode: usize) -> Ket {
    let mut out = Ket::new();
    for (occ, amp) in ket {
        let n = occ[mode];
        if n == 0 {
            continue;
        }
        let mut next = occ.clone();
        next[mode] -= 1;
        *out.entry(next).or_insert(ZERO) += amp * f64::from(n).sqrt();
    }
    out
}

/// `⟨a|b⟩`.
fn inner(a: &Ket, b: &Ket) -> C64 {
    a.iter().filter_map(|(occ, x)| b.get(occ).map(|y| x.conj() * y)).sum()
}

/// Two-point functions of a zero-mean Gaussian product state.
struct GaussianContractions {
    /// `⟨a†_j a_j⟩`.
    normal: Vec<f64>,
    /// `⟨a_j a_j⟩`.
    anomalous: Vec<C64>,
}

impl GaussianContractions {
    fn of(state: &InputState) -> Self {
        match state {
            InputState::ThermalProduct(means) => Self { normal: means.clone(), anomalous: vec![ZERO; means.len()] },
            InputState::SqueezedVacuumProduct(params) => Self {
                normal: params.iter().map(Squeezing::mean_photon).collect(),
                anomalous: params.iter().map(Squeezing::anomalous).collect(),
            },
            _ => unreachable!("not a zero-mean Gaussian family"),
        }
    }

    fn n(&self, m: usize, n: usize) -> C64 {
        if m == n {
            C64::from(self.normal[m])
        } else {
            ZERO
        }
    }

    fn a(&self, q: usize, n: usize) -> C64 {
        if q == n {
            self.anomalous[q]
        } else {
            ZERO
        }
    }

    /// `⟨a†_m a_n⟩⟨a†_p a_q⟩ + ⟨a†_m a_q⟩⟨a†_p a_n⟩ + ⟨a†_m a†_p⟩⟨a_q a_n⟩`.
    fn wick(&self, m: usize, p: usize, q: usize, n: usize) -> C64 {
        self.n(m, n) * self.n(p, q) + self.n(m, q) * self.n(p, n) + self.a(p, m).conj() * self.a(q, n)
    }
}

/// First and fourth moments of a state, tabulated over all mode indices.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentTable {
    modes: usize,
    mean_photon: f64,
    first: DMatrix<C64>,
    fourth: Vec<C64>,
}

impl MomentTable {
    fn new(state: &InputState) -> Result<Self, StateError> {
        let k = state.modes();
        let first = state.first_moments();
        let mut fourth = vec![ZERO; k.pow(4)];
        match state {
            InputState::FockProduct(_) | InputState::FockSuperposition(_) => {
                // Pair-lowered kets a_y a_x |ψ⟩, shared across all index tuples.
                let psi = state.sparse_ket();
                let single: Vec<Ket> = (0..k).map(|x| lower(&psi, x)).collect();
                let pairs: Vec<Ket> = (0..k * k).map(|i| lower(&single[i / k], i % k)).collect();
                for (idx, slot) in fourth.iter_mut().enumerate() {
                    let (m, p, q, n) = split_index(idx, k);
                    *slot = inner(&pairs[m * k + p], &pairs[n * k + q]);
                }
            }
            _ => {
                for (idx, slot) in fourth.iter_mut().enumerate() {
                    let (m, p, q, n) = split_index(idx, k);
                    *slot = state.fourth_moment(m, p, q, n)?;
                }
            }
        }
        Ok(Self { modes: k, mean_photon: first.trace().re, first, fourth })
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn mean_photon(&self) -> f64 {
        self.mean_photon
    }

    pub fn first(&self) -> &DMatrix<C64> {
        &self.first
    }

    pub fn fourth(&self, m: usize, p: usize, q: usize, n: usize) -> C64 {
        let k = self.modes;
        self.fourth[((m * k + p) * k + q) * k + n]
    }

    /// `⟨b†_α b_α⟩ = Σ_{mn} u*_m u_n ⟨a†_m a_n⟩` for output amplitudes `u`.
    pub fn output_intensity(&self, u: &[C64]) -> C64 {
        let k = self.modes;
        let mut total = ZERO;
        for m in 0..k {
            let um = u[m].conj();
            for n in 0..k {
                total += um * u[n] * self.first[(m, n)];
            }
        }
        total
    }

    /// `⟨b†_α b†_β b_β b_α⟩ = Σ u*_m w*_p w_q u_n ⟨a†_m a†_p a_q a_n⟩`.
    pub fn output_coincidence(&self, u: &[C64], w: &[C64]) -> C64 {
        let k = self.modes;
        let mut total = ZERO;
        let mut idx = 0;
        for m in 0..k {
            let um = u[m].conj();
            for p in 0..k {
                let ump = um * w[p].conj();
                for q in 0..k {
                    let umpq = ump * w[q];
                    for n in 0..k {
                        total += umpq * u[n] * self.fourth[idx];
                        idx += 1;
                    }
                }
            }
        }
        total
    }
}

fn split_index(idx: usize, k: usize) -> (usize, usize, usize, usize) {
    (idx / (k * k * k), (idx / (k * k)) % k, (idx / k) % k, idx % k)
}
