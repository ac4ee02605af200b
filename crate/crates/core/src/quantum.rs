//! POVMs, channels in Choi form, joint channels and seeded random sampling.
//!
//! Choi matrices use the output-first ordering `B ⊗ R`:
//! `C(Φ) = Σ_ij Φ(|i><j|) ⊗ |i><j|`, so `Tr_B C(Φ) = I_R` for trace-preserving
//! maps and `Φ(ρ) = Tr_R[(I ⊗ ρᵀ) C(Φ)]`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::linalg::{
    c64, inv_sqrt_pd, kron, partial_trace, pauli, psd_check, sqrt_psd, trace_out, Complex64,
    ComplexMatrix, Subsystem,
};

/// Tolerance for PSD and normalization invariants of POVMs and channels.
pub const INVARIANT_TOL: f64 = 1e-8;

/// Seeded generator used by every sampler in the crate.
pub type SeededRng = ChaCha8Rng;

pub fn seeded_rng(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// `Σ_i |i> ⊗ |i>` as a vector of length `d²`.
pub fn unnormalized_max_entangled(d: usize) -> Vec<Complex64> {
    (0..d * d)
        .map(|k| {
            if k / d == k % d {
                c64(1.0, 0.0)
            } else {
                c64(0.0, 0.0)
            }
        })
        .collect()
}

/// A positive operator-valued measure with labelled outcomes.
#[derive(Debug, Clone, PartialEq)]
pub struct Povm {
    dim: usize,
    effects: Vec<ComplexMatrix>,
    labels: Vec<String>,
}

impl Povm {
    /// Validates and stores a list of effects. Labels default to `0, 1, ...`.
    pub fn new(effects: Vec<ComplexMatrix>, labels: Option<Vec<String>>) -> Result<Self> {
        Self::with_tolerance(effects, labels, INVARIANT_TOL)
    }

    pub fn with_tolerance(
        effects: Vec<ComplexMatrix>,
        labels: Option<Vec<String>>,
        tol: f64,
    ) -> Result<Self> {
        let first = effects
            .first()
            .ok_or_else(|| Error::shape("a POVM needs at least one effect"))?;
        let dim = first.rows();
        if dim == 0 {
            return Err(Error::shape("POVM dimension must be positive"));
        }
        let labels = match labels {
            Some(l) if l.len() != effects.len() => {
                return Err(Error::shape(format!(
                    "{} labels for {} effects",
                    l.len(),
                    effects.len()
                )))
            }
            Some(l) => l,
            None => (0..effects.len()).map(|i| i.to_string()).collect(),
        };
        let mut clean = Vec::with_capacity(effects.len());
        let mut sum = ComplexMatrix::zeros(dim, dim);
        for e in &effects {
            if e.rows() != dim || e.cols() != dim {
                return Err(Error::shape(format!(
                    "effect of shape {}x{} in a POVM of dimension {dim}",
                    e.rows(),
                    e.cols()
                )));
            }
            let h = e.symmetrized()?;
            let check = psd_check(&h, tol)?;
            if !check.is_psd {
                return Err(Error::Validation {
                    object: "POVM",
                    invariant: "positivity",
                    residual: -check.min_eig,
                });
            }
            sum += &h;
            clean.push(h);
        }
        let residual = sum.max_abs_diff(&ComplexMatrix::identity(dim));
        if residual > tol {
            return Err(Error::Validation {
                object: "POVM",
                invariant: "completeness",
                residual,
            });
        }
        Ok(Povm {
            dim,
            effects: clean,
            labels,
        })
    }

    /// Projective measurement in the orthonormal basis given by the columns
    /// of a unitary.
    pub fn projective(basis: &ComplexMatrix) -> Result<Self> {
        let effects = (0..basis.cols())
            .map(|k| {
                let v = basis.column(k);
                ComplexMatrix::outer(&v, &v)
            })
            .collect();
        Povm::new(effects, None)
    }

    /// The two-outcome measurement `{(I + η σ)/2, (I - η σ)/2}` for a qubit
    /// observable `σ` with eigenvalues ±1, labelled `+1` and `-1`.
    pub fn binary_qubit(sigma: &ComplexMatrix, eta: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&eta) {
            return Err(Error::domain(format!("sharpness {eta} not in [0, 1]")));
        }
        let id = ComplexMatrix::identity(2);
        let plus = (&id + &sigma.scale(eta)).scale(0.5);
        let minus = (&id - &sigma.scale(eta)).scale(0.5);
        Povm::new(vec![plus, minus], Some(vec!["+1".into(), "-1".into()]))
    }

    /// `Z(η)`: the unbiased binary measurement of `σz` with sharpness `η`.
    pub fn unbiased_qubit(eta: f64) -> Result<Self> {
        Self::binary_qubit(&pauli::z(), eta)
    }

    /// Six-outcome qubit measurement `(1 - p)/3 |±a><±a| + p I/6` over the
    /// eigenbases of `σx`, `σy`, `σz`.
    pub fn sixfold(p: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::domain(format!("mixing parameter {p} not in [0, 1]")));
        }
        let id = ComplexMatrix::identity(2);
        let mut effects = Vec::with_capacity(6);
        let mut labels = Vec::with_capacity(6);
        for (axis, sigma) in [("x", pauli::x()), ("y", pauli::y()), ("z", pauli::z())] {
            for (sign, s) in [("+", 1.0), ("-", -1.0)] {
                let proj = (&id + &sigma.scale(s)).scale(0.5);
                effects.push(&proj.scale((1.0 - p) / 3.0) + &id.scale(p / 6.0));
                labels.push(format!("{sign}{axis}"));
            }
        }
        Povm::new(effects, Some(labels))
    }

    /// The trivial measurement `{p_x I}`.
    pub fn trivial(dim: usize, probs: &[f64]) -> Result<Self> {
        Povm::new(
            probs
                .iter()
                .map(|&p| ComplexMatrix::identity(dim).scale(p))
                .collect(),
            None,
        )
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn outcomes(&self) -> usize {
        self.effects.len()
    }

    pub fn effects(&self) -> &[ComplexMatrix] {
        &self.effects
    }

    pub fn effect(&self, x: usize) -> &ComplexMatrix {
        &self.effects[x]
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    /// Appends zero effects until there are `n` outcomes.
    pub fn padded(&self, n: usize) -> Povm {
        let mut out = self.clone();
        while out.effects.len() < n {
            out.labels.push(format!("pad{}", out.effects.len()));
            out.effects.push(ComplexMatrix::zeros(self.dim, self.dim));
        }
        out
    }

    /// Outcome probabilities `Tr[ρ E^x]`.
    pub fn probabilities(&self, rho: &ComplexMatrix) -> Vec<f64> {
        self.effects
            .iter()
            .map(|e| rho.matmul(e).trace().re)
            .collect()
    }
}

/// A completely positive trace-preserving map stored as its Choi matrix on
/// `B ⊗ R` (output first).
#[derive(Debug, Clone, PartialEq)]
pub struct ChoiChannel {
    dim_in: usize,
    dim_out: usize,
    choi: ComplexMatrix,
}

impl ChoiChannel {
    pub fn new(dim_in: usize, dim_out: usize, choi: ComplexMatrix) -> Result<Self> {
        Self::with_tolerance(dim_in, dim_out, choi, INVARIANT_TOL)
    }

    pub fn with_tolerance(
        dim_in: usize,
        dim_out: usize,
        choi: ComplexMatrix,
        tol: f64,
    ) -> Result<Self> {
        let n = dim_in * dim_out;
        if dim_in == 0 || dim_out == 0 || choi.rows() != n || choi.cols() != n {
            return Err(Error::shape(format!(
                "Choi matrix {}x{} does not match dimensions {dim_in} -> {dim_out}",
                choi.rows(),
                choi.cols()
            )));
        }
        let choi = choi.symmetrized()?;
        let check = psd_check(&choi, tol)?;
        if !check.is_psd {
            return Err(Error::Validation {
                object: "channel",
                invariant: "complete positivity",
                residual: -check.min_eig,
            });
        }
        let marginal = partial_trace(&choi, dim_out, dim_in, Subsystem::A)?;
        let residual = marginal.max_abs_diff(&ComplexMatrix::identity(dim_in));
        if residual > tol {
            return Err(Error::Validation {
                object: "channel",
                invariant: "trace preservation",
                residual,
            });
        }
        Ok(ChoiChannel {
            dim_in,
            dim_out,
            choi,
        })
    }

    pub fn identity(dim: usize) -> Self {
        let phi = unnormalized_max_entangled(dim);
        ChoiChannel {
            dim_in: dim,
            dim_out: dim,
            choi: ComplexMatrix::outer(&phi, &phi),
        }
    }

    /// `ρ ↦ (1 - p) ρ + p Tr[ρ] I/d`
    pub fn depolarizing(dim: usize, p: f64) -> Result<Self> {
        if !(0.0..=1.0 + 1.0 / (dim * dim - 1).max(1) as f64).contains(&p) {
            return Err(Error::domain(format!(
                "depolarizing parameter {p} out of range"
            )));
        }
        let id = Self::identity(dim);
        let noise = ComplexMatrix::identity(dim * dim).scale(1.0 / dim as f64);
        Self::new(dim, dim, &id.choi.scale(1.0 - p) + &noise.scale(p))
    }

    pub fn unitary(u: &ComplexMatrix) -> Result<Self> {
        choi_from_kraus(std::slice::from_ref(u), u.cols(), u.rows())
    }

    pub fn dim_in(&self) -> usize {
        self.dim_in
    }

    pub fn dim_out(&self) -> usize {
        self.dim_out
    }

    pub fn choi(&self) -> &ComplexMatrix {
        &self.choi
    }

    /// `Φ(ρ) = Tr_R[(I ⊗ ρᵀ) C]`
    pub fn apply(&self, rho: &ComplexMatrix) -> Result<ComplexMatrix> {
        if rho.rows() != self.dim_in || rho.cols() != self.dim_in {
            return Err(Error::shape("state dimension does not match channel input"));
        }
        let (din, dout) = (self.dim_in, self.dim_out);
        Ok(ComplexMatrix::from_fn(dout, dout, |b, bp| {
            let mut acc = c64(0.0, 0.0);
            for i in 0..din {
                for j in 0..din {
                    acc += rho[(i, j)] * self.choi[(b * din + i, bp * din + j)];
                }
            }
            acc
        }))
    }

    /// Choi matrix of `self ∘ first`.
    pub fn after(&self, first: &ChoiChannel) -> Result<ChoiChannel> {
        if first.dim_out != self.dim_in {
            return Err(Error::shape(format!(
                "cannot compose a channel with input {} after one with output {}",
                self.dim_in, first.dim_out
            )));
        }
        let choi = compose_choi(
            first.choi(),
            first.dim_in,
            self.choi(),
            self.dim_in,
            self.dim_out,
        );
        Ok(ChoiChannel {
            dim_in: first.dim_in,
            dim_out: self.dim_out,
            choi,
        })
    }
}

/// Choi matrix of `R ∘ Λ` from `J(Λ)` on `B ⊗ A` and `J(R)` on `A' ⊗ B`.
pub(crate) fn compose_choi(
    lam: &ComplexMatrix,
    dim_a: usize,
    rec: &ComplexMatrix,
    dim_b: usize,
    dim_ap: usize,
) -> ComplexMatrix {
    let n = dim_ap * dim_a;
    ComplexMatrix::from_fn(n, n, |row, col| {
        let (a, i) = (row / dim_a, row % dim_a);
        let (ap, j) = (col / dim_a, col % dim_a);
        let mut acc = c64(0.0, 0.0);
        for b in 0..dim_b {
            for bp in 0..dim_b {
                let l = lam[(b * dim_a + i, bp * dim_a + j)];
                if l.re != 0.0 || l.im != 0.0 {
                    acc += l * rec[(a * dim_b + b, ap * dim_b + bp)];
                }
            }
        }
        acc
    })
}

/// Choi matrix `Σ_k (K_k ⊗ I)|φ><φ|(K_k ⊗ I)†` of a Kraus decomposition.
pub fn choi_from_kraus(
    kraus: &[ComplexMatrix],
    dim_in: usize,
    dim_out: usize,
) -> Result<ChoiChannel> {
    if kraus.is_empty() {
        return Err(Error::shape("at least one Kraus operator is required"));
    }
    let mut tp = ComplexMatrix::zeros(dim_in, dim_in);
    for k in kraus {
        if k.rows() != dim_out || k.cols() != dim_in {
            return Err(Error::shape(format!(
                "Kraus operator of shape {}x{} for a channel {dim_in} -> {dim_out}",
                k.rows(),
                k.cols()
            )));
        }
        tp += &k.adjoint().matmul(k);
    }
    let dev = tp.max_abs_diff(&ComplexMatrix::identity(dim_in));
    if dev > INVARIANT_TOL {
        return Err(Error::NotTracePreserving(dev));
    }
    let n = dim_in * dim_out;
    let mut choi = ComplexMatrix::zeros(n, n);
    for k in kraus {
        // (K ⊗ I)|φ> has entries K[b, i] at index (b, i).
        let v: Vec<Complex64> = (0..n).map(|idx| k[(idx / dim_in, idx % dim_in)]).collect();
        choi += &ComplexMatrix::outer(&v, &v);
    }
    Ok(ChoiChannel {
        dim_in,
        dim_out,
        choi: choi.hermitian_part(),
    })
}

/// Choi matrix `Σ_x |x><x| ⊗ (E^x)ᵀ` of the measure-and-record channel.
pub fn measurement_channel_choi(e: &Povm) -> ChoiChannel {
    let d = e.dim();
    let n = e.outcomes();
    let mut choi = ComplexMatrix::zeros(n * d, n * d);
    for (x, ex) in e.effects().iter().enumerate() {
        for i in 0..d {
            for j in 0..d {
                choi[(x * d + i, x * d + j)] = ex[(j, i)];
            }
        }
    }
    ChoiChannel {
        dim_in: d,
        dim_out: n,
        choi,
    }
}

/// Kraus operators `√E^x` of the Lüders instrument of a POVM.
pub fn lueders_kraus(e: &Povm) -> Result<Vec<ComplexMatrix>> {
    e.effects().iter().map(sqrt_psd).collect()
}

/// The channel `ρ ↦ Σ_x √E^x ρ √E^x`.
pub fn lueders_channel(e: &Povm) -> Result<ChoiChannel> {
    choi_from_kraus(&lueders_kraus(e)?, e.dim(), e.dim())
}

/// A channel `A → B1 ⊗ B2` with Choi matrix on `B1 ⊗ B2 ⊗ R`.
#[derive(Debug, Clone, PartialEq)]
pub struct JointChannel {
    dim_in: usize,
    dim_out1: usize,
    dim_out2: usize,
    choi: ComplexMatrix,
}

/// Which output of a joint channel to keep.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Marginal {
    First,
    Second,
}

impl JointChannel {
    pub fn new(
        dim_in: usize,
        dim_out1: usize,
        dim_out2: usize,
        choi: ComplexMatrix,
    ) -> Result<Self> {
        let ch = ChoiChannel::new(dim_in, dim_out1 * dim_out2, choi)?;
        Self::from_channel(ch, dim_out1, dim_out2)
    }

    /// Reinterprets a channel whose output dimension factors as `d1 * d2`.
    pub fn from_channel(ch: ChoiChannel, dim_out1: usize, dim_out2: usize) -> Result<Self> {
        if ch.dim_out != dim_out1 * dim_out2 {
            return Err(Error::shape(format!(
                "output dimension {} is not {dim_out1} x {dim_out2}",
                ch.dim_out
            )));
        }
        Ok(JointChannel {
            dim_in: ch.dim_in,
            dim_out1,
            dim_out2,
            choi: ch.choi,
        })
    }

    pub fn dim_in(&self) -> usize {
        self.dim_in
    }

    pub fn dim_out1(&self) -> usize {
        self.dim_out1
    }

    pub fn dim_out2(&self) -> usize {
        self.dim_out2
    }

    pub fn choi(&self) -> &ComplexMatrix {
        &self.choi
    }

    pub fn as_channel(&self) -> ChoiChannel {
        ChoiChannel {
            dim_in: self.dim_in,
            dim_out: self.dim_out1 * self.dim_out2,
            choi: self.choi.clone(),
        }
    }

    pub fn marginal(&self, which: Marginal) -> ChoiChannel {
        let dims = [self.dim_out1, self.dim_out2, self.dim_in];
        let (mask, dim_out) = match which {
            Marginal::First => ([false, true, false], self.dim_out1),
            Marginal::Second => ([true, false, false], self.dim_out2),
        };
        let choi = trace_out(&self.choi, &dims, &mask).expect("dimensions checked at construction");
        ChoiChannel {
            dim_in: self.dim_in,
            dim_out,
            choi,
        }
    }

    /// The joint channel `ρ ↦ a(ρ) ⊗ τ` for a fixed state `τ`.
    pub fn with_fixed_second(a: &ChoiChannel, tau: &ComplexMatrix) -> Result<Self> {
        let d2 = tau.rows();
        let (dout, din) = (a.dim_out, a.dim_in);
        let dims_a = [dout, din];
        let n = dout * d2 * din;
        let choi = ComplexMatrix::from_fn(n, n, |r, c| {
            let (b1, rest) = (r / (d2 * din), r % (d2 * din));
            let (b2, i) = (rest / din, rest % din);
            let (b1p, restp) = (c / (d2 * din), c % (d2 * din));
            let (b2p, j) = (restp / din, restp % din);
            a.choi[(b1 * dims_a[1] + i, b1p * dims_a[1] + j)] * tau[(b2, b2p)]
        });
        JointChannel::new(din, dout, d2, choi)
    }
}

/// Marginal Choi matrix of a joint channel.
pub fn marginal_choi(j: &JointChannel, which: Marginal) -> ChoiChannel {
    j.marginal(which)
}

fn gaussian_matrix<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> ComplexMatrix {
    ComplexMatrix::from_fn(rows, cols, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        c64(re, im)
    })
}

/// Orthonormalizes the columns of `m` by modified Gram-Schmidt, run twice.
fn orthonormal_columns(m: &ComplexMatrix) -> ComplexMatrix {
    let (rows, cols) = (m.rows(), m.cols());
    let mut q: Vec<Vec<Complex64>> = (0..cols).map(|j| m.column(j)).collect();
    for _pass in 0..2 {
        for j in 0..cols {
            for k in 0..j {
                let proj: Complex64 = q[k].iter().zip(&q[j]).map(|(a, b)| a.conj() * b).sum();
                let qk = q[k].clone();
                for (x, y) in q[j].iter_mut().zip(&qk) {
                    *x -= proj * y;
                }
            }
            let norm = q[j].iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            for x in q[j].iter_mut() {
                *x /= norm;
            }
        }
    }
    ComplexMatrix::from_fn(rows, cols, |i, j| q[j][i])
}

/// Haar-like random unitary from the QR decomposition of a Gaussian matrix.
pub fn random_unitary<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> ComplexMatrix {
    orthonormal_columns(&gaussian_matrix(dim, dim, rng))
}

/// Kraus operators of a random channel obtained from a random isometry
/// `A → B ⊗ E` with environment dimension `env`.
pub fn random_kraus<R: Rng + ?Sized>(
    dim_in: usize,
    dim_out: usize,
    env: usize,
    rng: &mut R,
) -> Vec<ComplexMatrix> {
    let v = orthonormal_columns(&gaussian_matrix(dim_out * env, dim_in, rng));
    (0..env)
        .map(|e| ComplexMatrix::from_fn(dim_out, dim_in, |b, a| v[(b * env + e, a)]))
        .collect()
}

pub fn random_channel<R: Rng + ?Sized>(
    dim_in: usize,
    dim_out: usize,
    rng: &mut R,
) -> Result<ChoiChannel> {
    let kraus = random_kraus(dim_in, dim_out, dim_in * dim_out, rng);
    choi_from_kraus(&kraus, dim_in, dim_out)
}

pub fn random_povm<R: Rng + ?Sized>(dim: usize, outcomes: usize, rng: &mut R) -> Result<Povm> {
    if dim == 0 || outcomes == 0 {
        return Err(Error::domain(
            "dimension and outcome count must be positive",
        ));
    }
    if outcomes == 1 {
        return Povm::new(vec![ComplexMatrix::identity(dim)], None);
    }
    let grams: Vec<ComplexMatrix> = (0..outcomes)
        .map(|_| {
            let a = gaussian_matrix(dim, dim, rng);
            a.matmul(&a.adjoint())
        })
        .collect();
    let mut sum = ComplexMatrix::zeros(dim, dim);
    for g in &grams {
        sum += g;
    }
    let s = inv_sqrt_pd(&sum)?;
    let effects: Vec<ComplexMatrix> = grams
        .iter()
        .map(|g| s.conjugate(g).hermitian_part())
        .collect();
    // Rounding can leave completeness off by a few ulps; fold the
    // discrepancy into the last effect.
    let mut total = ComplexMatrix::zeros(dim, dim);
    for e in &effects {
        total += e;
    }
    let mut effects = effects;
    let fix = &ComplexMatrix::identity(dim) - &total;
    let last = effects.len() - 1;
    effects[last] += &fix;
    Povm::new(effects, None)
}

/// Random POVM with `outcomes` effects on dimension `dim`, reproducible from `seed`.
pub fn sample_random_povm(dim: usize, outcomes: usize, seed: u64) -> Result<Povm> {
    random_povm(dim, outcomes, &mut seeded_rng(seed))
}

/// Random channel `dim_in → dim_out`, reproducible from `seed`.
pub fn sample_random_channel(dim_in: usize, dim_out: usize, seed: u64) -> Result<ChoiChannel> {
    random_channel(dim_in, dim_out, &mut seeded_rng(seed))
}

/// Channel of a random `K`-instrument: `Λ(ρ) = Σ_x Φ_x(√K^x ρ √K^x)` with
/// an independent random channel `Φ_x` for every outcome.
pub fn random_instrument_channel<R: Rng + ?Sized>(k: &Povm, rng: &mut R) -> Result<ChoiChannel> {
    let d = k.dim();
    let mut kraus = Vec::new();
    for kx in k.effects() {
        let root = sqrt_psd(kx)?;
        for b in random_kraus(d, d, d, rng) {
            kraus.push(b.matmul(&root));
        }
    }
    choi_from_kraus(&kraus, d, d)
}

/// Random full-rank density matrix of dimension `dim`.
pub fn random_state<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> ComplexMatrix {
    let a = gaussian_matrix(dim, dim, rng);
    let rho = a.matmul(&a.adjoint());
    let tr = rho.trace().re;
    rho.scale(1.0 / tr).hermitian_part()
}

/// Tensor product `a ⊗ b` of two channels.
pub fn tensor_channels(a: &ChoiChannel, b: &ChoiChannel) -> Result<ChoiChannel> {
    // C(a ⊗ b) on (Ba Bb) ⊗ (Ra Rb) is a permutation of C(a) ⊗ C(b) on Ba Ra Bb Rb.
    let ab = kron(a.choi(), b.choi())?;
    let (ba, ra, bb, rb) = (a.dim_out, a.dim_in, b.dim_out, b.dim_in);
    let n = ba * ra * bb * rb;
    let perm = |idx: usize| {
        // idx over (Ba, Bb, Ra, Rb) -> index over (Ba, Ra, Bb, Rb)
        let rb_i = idx % rb;
        let ra_i = (idx / rb) % ra;
        let bb_i = (idx / (rb * ra)) % bb;
        let ba_i = idx / (rb * ra * bb);
        ((ba_i * ra + ra_i) * bb + bb_i) * rb + rb_i
    };
    let choi = ComplexMatrix::from_fn(n, n, |r, c| ab[(perm(r), perm(c))]);
    Ok(ChoiChannel {
        dim_in: ra * rb,
        dim_out: ba * bb,
        choi,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::operator_norm;

    #[test]
    fn max_entangled_vector() {
        assert_eq!(unnormalized_max_entangled(1), vec![c64(1.0, 0.0)]);
        let phi = unnormalized_max_entangled(2);
        let re: Vec<f64> = phi.iter().map(|z| z.re).collect();
        assert_eq!(re, vec![1.0, 0.0, 0.0, 1.0]);
        let rho = ComplexMatrix::outer(&phi, &phi).scale(0.5);
        assert!((rho.trace().re - 1.0).abs() < 1e-15);
    }

    #[test]
    fn sixfold_effects() {
        let e = Povm::sixfold(1.0).unwrap();
        for x in e.effects() {
            assert!(x.max_abs_diff(&ComplexMatrix::identity(2).scale(1.0 / 6.0)) < 1e-15);
        }
        for p in [0.0, 0.3, 0.8] {
            let e = Povm::sixfold(p).unwrap();
            let norm = operator_norm(e.effect(0)).unwrap();
            assert!((norm - (2.0 - p) / 6.0).abs() < 1e-12);
        }
        assert!(Povm::sixfold(1.5).is_err());
        assert!(Povm::unbiased_qubit(-0.1).is_err());
    }

    #[test]
    fn unbiased_qubit_povm_validates() {
        let e = Povm::binary_qubit(&pauli::z(), 0.5).unwrap();
        assert_eq!(e.labels(), &["+1".to_string(), "-1".to_string()]);
        assert!((e.effect(0)[(0, 0)].re - 0.75).abs() < 1e-15);
    }

    #[test]
    fn incomplete_povm_reports_residual() {
        let effects = vec![
            ComplexMatrix::diag_real(&[0.8, 0.0]),
            ComplexMatrix::diag_real(&[0.0, 0.9]),
        ];
        match Povm::new(effects, None) {
            Err(Error::Validation {
                invariant,
                residual,
                ..
            }) => {
                assert_eq!(invariant, "completeness");
                assert!((residual - 0.2).abs() < 1e-12);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn identity_channel_choi() {
        let id = ChoiChannel::identity(2);
        let expected = ComplexMatrix::from_real(
            4,
            4,
            &[
                1.0, 0.0, 0.0, 1.0, //
                0.0, 0.0, 0.0, 0.0, //
                0.0, 0.0, 0.0, 0.0, //
                1.0, 0.0, 0.0, 1.0,
            ],
        )
        .unwrap();
        assert_eq!(id.choi(), &expected);
        let from_kraus = choi_from_kraus(&[ComplexMatrix::identity(2)], 2, 2).unwrap();
        assert!(from_kraus.choi().max_abs_diff(&expected) < 1e-15);
    }

    #[test]
    fn non_tp_kraus_rejected() {
        let k = ComplexMatrix::identity(2).scale(0.9);
        assert!(matches!(
            choi_from_kraus(&[k], 2, 2),
            Err(Error::NotTracePreserving(_))
        ));
    }

    #[test]
    fn apply_matches_kraus() {
        let mut rng = seeded_rng(3);
        let kraus = random_kraus(2, 3, 2, &mut rng);
        let ch = choi_from_kraus(&kraus, 2, 3).unwrap();
        let rho = random_state(2, &mut rng);
        let mut expected = ComplexMatrix::zeros(3, 3);
        for k in &kraus {
            expected += &k.conjugate(&rho);
        }
        assert!(ch.apply(&rho).unwrap().max_abs_diff(&expected) < 1e-13);
    }

    #[test]
    fn measurement_channel_outputs_probabilities() {
        let e = sample_random_povm(3, 4, 11).unwrap();
        let rho = random_state(3, &mut seeded_rng(5));
        let out = measurement_channel_choi(&e).apply(&rho).unwrap();
        let probs = e.probabilities(&rho);
        for (x, p) in probs.iter().enumerate() {
            assert!((out[(x, x)].re - p).abs() < 1e-13);
        }
    }

    #[test]
    fn joint_marginals_of_product() {
        let a = sample_random_channel(2, 2, 1).unwrap();
        let tau = ComplexMatrix::diag_real(&[0.25, 0.75, 0.0]);
        let j = JointChannel::with_fixed_second(&a, &tau).unwrap();
        assert!(j.marginal(Marginal::First).choi().max_abs_diff(a.choi()) < 1e-13);
        let m2 = j.marginal(Marginal::Second);
        let expected = kron(&tau, &ComplexMatrix::identity(2)).unwrap();
        assert!(m2.choi().max_abs_diff(&expected) < 1e-13);
    }

    #[test]
    fn random_samplers_are_deterministic() {
        assert_eq!(
            sample_random_povm(3, 3, 9).unwrap(),
            sample_random_povm(3, 3, 9).unwrap()
        );
        assert_eq!(
            sample_random_channel(2, 3, 9).unwrap(),
            sample_random_channel(2, 3, 9).unwrap()
        );
    }

    #[test]
    fn tensor_of_identities_is_identity() {
        let id2 = ChoiChannel::identity(2);
        let t = tensor_channels(&id2, &id2).unwrap();
        assert!(t.choi().max_abs_diff(ChoiChannel::identity(4).choi()) < 1e-15);
    }
}
