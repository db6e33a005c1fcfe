//! Dense complex linear algebra for the small Hilbert spaces of Bell scenarios.
//!
//! Everything here is sized for dimensions up to about 16 (two qubits plus a
//! small purifying system). Matrices are stored row-major in a flat `Vec`.
//!
//! The Pauli basis is always ordered `(𝟙, Z, X, Y)`. [`BlochCoeffs`],
//! [`pauli_basis`], [`from_bloch`] and [`to_bloch`] all follow that order, so
//! coefficient index `k` means the same generator everywhere in the crate.

use std::fmt;
use std::ops::{Add, Index, Mul, Neg, Sub};

use num_complex::Complex64;
use thiserror::Error;

pub type C64 = Complex64;

/// Tolerance for exact algebraic identities.
pub const TOL_ALGEBRAIC: f64 = 1e-12;
/// Tolerance for quantities that pass through an eigensolver.
pub const TOL_SPECTRAL: f64 = 1e-10;
/// Tolerance for whole-pipeline comparisons.
pub const TOL_END_TO_END: f64 = 1e-9;

const JACOBI_MAX_SWEEPS: usize = 100;
const JACOBI_OFF_DIAGONAL_EPS: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinalgError {
    #[error("operator is not Hermitian (asymmetry {asymmetry:e} exceeds {tol:e})")]
    NotHermitian { asymmetry: f64, tol: f64 },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
}

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);
const I: C64 = C64::new(0.0, 1.0);

/// A square complex matrix.
#[derive(Clone, PartialEq)]
pub struct Operator {
    dim: usize,
    entries: Vec<C64>,
}

impl Operator {
    /// Builds an operator from row-major entries.
    pub fn new(dim: usize, entries: Vec<C64>) -> Result<Self, LinalgError> {
        if dim == 0 || entries.len() != dim * dim {
            return Err(LinalgError::DimensionMismatch {
                expected: dim * dim,
                found: entries.len(),
            });
        }
        Ok(Self { dim, entries })
    }

    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut entries = Vec::with_capacity(dim * dim);
        for i in 0..dim {
            for j in 0..dim {
                entries.push(f(i, j));
            }
        }
        Self { dim, entries }
    }

    /// Builds an operator from real row-major entries.
    pub fn from_real(dim: usize, entries: &[f64]) -> Result<Self, LinalgError> {
        Self::new(dim, entries.iter().map(|&x| C64::new(x, 0.0)).collect())
    }

    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            entries: vec![ZERO; dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self::from_fn(dim, |i, j| if i == j { ONE } else { ZERO })
    }

    pub fn diag(values: &[f64]) -> Self {
        Self::from_fn(
            values.len(),
            |i, j| {
                if i == j {
                    C64::new(values[i], 0.0)
                } else {
                    ZERO
                }
            },
        )
    }

    pub fn pauli_z() -> Self {
        Self::diag(&[1.0, -1.0])
    }

    pub fn pauli_x() -> Self {
        Self {
            dim: 2,
            entries: vec![ZERO, ONE, ONE, ZERO],
        }
    }

    pub fn pauli_y() -> Self {
        Self {
            dim: 2,
            entries: vec![ZERO, -I, I, ZERO],
        }
    }

    /// The rank-one operator `|v⟩⟨v|`.
    pub fn projector(v: &Ket) -> Self {
        Self::outer(v, v)
    }

    /// The operator `|u⟩⟨v|`.
    pub fn outer(u: &Ket, v: &Ket) -> Self {
        Self::from_fn(u.dim(), |i, j| u.amps[i] * v.amps[j].conj())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entries(&self) -> &[C64] {
        &self.entries
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.entries[i * self.dim + j]
    }

    fn set(&mut self, i: usize, j: usize, value: C64) {
        self.entries[i * self.dim + j] = value;
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.dim, |i, j| self.get(j, i).conj())
    }

    pub fn trace(&self) -> C64 {
        (0..self.dim).map(|i| self.get(i, i)).sum()
    }

    pub fn scale(&self, factor: C64) -> Self {
        Self {
            dim: self.dim,
            entries: self.entries.iter().map(|&z| z * factor).collect(),
        }
    }

    pub fn scale_real(&self, factor: f64) -> Self {
        self.scale(C64::new(factor, 0.0))
    }

    /// Matrix product. Panics on mismatched dimensions.
    pub fn matmul(&self, rhs: &Operator) -> Self {
        assert_eq!(self.dim, rhs.dim, "matmul dimension mismatch");
        let n = self.dim;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self.entries[i * n + k];
                if a == ZERO {
                    continue;
                }
                for j in 0..n {
                    out.entries[i * n + j] += a * rhs.entries[k * n + j];
                }
            }
        }
        out
    }

    pub fn apply(&self, v: &Ket) -> Ket {
        assert_eq!(self.dim, v.dim(), "apply dimension mismatch");
        let n = self.dim;
        let amps = (0..n)
            .map(|i| (0..n).map(|j| self.entries[i * n + j] * v.amps[j]).sum())
            .collect();
        Ket { amps }
    }

    /// `⟨v|self|v⟩`.
    pub fn expectation(&self, v: &Ket) -> C64 {
        v.inner(&self.apply(v))
    }

    pub fn tensor(&self, rhs: &Operator) -> Self {
        tensor(self, rhs)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.entries.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Largest entrywise modulus of `self - other`.
    pub fn max_abs_diff(&self, other: &Operator) -> f64 {
        assert_eq!(self.dim, other.dim, "comparison dimension mismatch");
        self.entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn approx_eq(&self, other: &Operator, tol: f64) -> bool {
        self.dim == other.dim && self.max_abs_diff(other) <= tol
    }

    /// Largest `|m_ij - conj(m_ji)|`.
    pub fn hermitian_asymmetry(&self) -> f64 {
        let n = self.dim;
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in i..n {
                worst = worst.max((self.get(i, j) - self.get(j, i).conj()).norm());
            }
        }
        worst
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermitian_asymmetry() <= tol
    }

    pub fn check_hermitian(&self, tol: f64) -> Result<(), LinalgError> {
        let asymmetry = self.hermitian_asymmetry();
        if asymmetry > tol {
            Err(LinalgError::NotHermitian { asymmetry, tol })
        } else {
            Ok(())
        }
    }

    /// `(m + m†) / 2`.
    pub fn hermitian_part(&self) -> Self {
        Self::from_fn(self.dim, |i, j| (self.get(i, j) + self.get(j, i).conj()) * 0.5)
    }

    /// Applies `f` to the spectrum of a Hermitian operator.
    pub fn map_spectrum(&self, f: impl Fn(f64) -> f64) -> Result<Self, LinalgError> {
        let eig = eig_hermitian(self)?;
        let mut out = Self::zeros(self.dim);
        for (&lambda, v) in eig.values.iter().zip(&eig.vectors) {
            let w = f(lambda);
            if w != 0.0 {
                out = out + Self::projector(v).scale_real(w);
            }
        }
        Ok(out)
    }

    pub fn min_eigenvalue(&self) -> Result<f64, LinalgError> {
        Ok(*eig_hermitian(self)?.values.last().expect("non-empty spectrum"))
    }

    pub fn max_eigenvalue(&self) -> Result<f64, LinalgError> {
        Ok(eig_hermitian(self)?.values[0])
    }
}

impl fmt::Debug for Operator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Operator({}x{}) [", self.dim, self.dim)?;
        for i in 0..self.dim {
            write!(f, "  ")?;
            for j in 0..self.dim {
                let z = self.get(i, j);
                write!(f, "{:+.6}{:+.6}i  ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

impl Add for Operator {
    type Output = Operator;
    fn add(self, rhs: Operator) -> Operator {
        &self + &rhs
    }
}

impl Add for &Operator {
    type Output = Operator;
    fn add(self, rhs: &Operator) -> Operator {
        assert_eq!(self.dim, rhs.dim, "add dimension mismatch");
        Operator {
            dim: self.dim,
            entries: self.entries.iter().zip(&rhs.entries).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub for Operator {
    type Output = Operator;
    fn sub(self, rhs: Operator) -> Operator {
        &self - &rhs
    }
}

impl Sub for &Operator {
    type Output = Operator;
    fn sub(self, rhs: &Operator) -> Operator {
        assert_eq!(self.dim, rhs.dim, "sub dimension mismatch");
        Operator {
            dim: self.dim,
            entries: self.entries.iter().zip(&rhs.entries).map(|(a, b)| a - b).collect(),
        }
    }
}

impl Neg for &Operator {
    type Output = Operator;
    fn neg(self) -> Operator {
        self.scale_real(-1.0)
    }
}

impl Mul for &Operator {
    type Output = Operator;
    fn mul(self, rhs: &Operator) -> Operator {
        self.matmul(rhs)
    }
}

impl Mul<f64> for &Operator {
    type Output = Operator;
    fn mul(self, rhs: f64) -> Operator {
        self.scale_real(rhs)
    }
}

impl Mul<f64> for Operator {
    type Output = Operator;
    fn mul(self, rhs: f64) -> Operator {
        self.scale_real(rhs)
    }
}

/// A state vector (not necessarily normalized).
#[derive(Clone, Debug, PartialEq)]
pub struct Ket {
    amps: Vec<C64>,
}

impl Ket {
    pub fn new(amps: Vec<C64>) -> Self {
        assert!(!amps.is_empty(), "a ket needs at least one amplitude");
        Self { amps }
    }

    pub fn from_real(amps: &[f64]) -> Self {
        Self::new(amps.iter().map(|&x| C64::new(x, 0.0)).collect())
    }

    /// Computational basis vector `|index⟩`.
    pub fn basis(dim: usize, index: usize) -> Self {
        let mut amps = vec![ZERO; dim];
        amps[index] = ONE;
        Self { amps }
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn is_normalized(&self, tol: f64) -> bool {
        (self.norm_sqr() - 1.0).abs() <= tol
    }

    pub fn normalized(&self) -> Self {
        let n = self.norm_sqr().sqrt();
        Self {
            amps: self.amps.iter().map(|z| z / n).collect(),
        }
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &Ket) -> C64 {
        assert_eq!(self.dim(), other.dim(), "inner product dimension mismatch");
        self.amps.iter().zip(&other.amps).map(|(a, b)| a.conj() * b).sum()
    }

    pub fn tensor(&self, other: &Ket) -> Self {
        let mut amps = Vec::with_capacity(self.dim() * other.dim());
        for a in &self.amps {
            for b in &other.amps {
                amps.push(a * b);
            }
        }
        Self { amps }
    }

    pub fn scale(&self, factor: C64) -> Self {
        Self {
            amps: self.amps.iter().map(|z| z * factor).collect(),
        }
    }

    pub fn add(&self, other: &Ket) -> Self {
        assert_eq!(self.dim(), other.dim(), "ket add dimension mismatch");
        Self {
            amps: self.amps.iter().zip(&other.amps).map(|(a, b)| a + b).collect(),
        }
    }

    /// Multiplies by a global phase so that the first amplitude with
    /// modulus above `1e-12` is real and positive.
    pub fn canonical_phase(&self) -> Self {
        match self.amps.iter().find(|z| z.norm() > 1e-12) {
            Some(&z) => self.scale(z.conj() / z.norm()),
            None => self.clone(),
        }
    }
}

/// Real coefficients on the Pauli basis `(𝟙, Z, X, Y)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BlochCoeffs(pub [f64; 4]);

impl BlochCoeffs {
    pub fn new(c0: f64, c1: f64, c2: f64, c3: f64) -> Self {
        Self([c0, c1, c2, c3])
    }

    /// The `(Z, X, Y)` part.
    pub fn vector(&self) -> [f64; 3] {
        [self.0[1], self.0[2], self.0[3]]
    }

    pub fn vector_norm(&self) -> f64 {
        self.vector().iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn max_abs_diff(&self, other: &BlochCoeffs) -> f64 {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

impl Index<usize> for BlochCoeffs {
    type Output = f64;
    fn index(&self, k: usize) -> &f64 {
        &self.0[k]
    }
}

/// `[𝟙, Z, X, Y]` on one qubit.
pub fn pauli_basis() -> [Operator; 4] {
    [
        Operator::identity(2),
        Operator::pauli_z(),
        Operator::pauli_x(),
        Operator::pauli_y(),
    ]
}

pub fn from_bloch(c: &BlochCoeffs) -> Operator {
    let [c0, cz, cx, cy] = c.0;
    Operator {
        dim: 2,
        entries: vec![
            C64::new(c0 + cz, 0.0),
            C64::new(cx, -cy),
            C64::new(cx, cy),
            C64::new(c0 - cz, 0.0),
        ],
    }
}

/// `c_k = tr(m σ_k) / 2` for a 2×2 Hermitian `m`.
pub fn to_bloch(m: &Operator) -> Result<BlochCoeffs, LinalgError> {
    if m.dim != 2 {
        return Err(LinalgError::DimensionMismatch {
            expected: 2,
            found: m.dim,
        });
    }
    m.check_hermitian(TOL_ALGEBRAIC)?;
    let basis = pauli_basis();
    let mut c = [0.0; 4];
    for (k, sigma) in basis.iter().enumerate() {
        c[k] = 0.5 * m.matmul(sigma).trace().re;
    }
    Ok(BlochCoeffs(c))
}

/// Kronecker product `a ⊗ b`.
pub fn tensor(a: &Operator, b: &Operator) -> Operator {
    let (da, db) = (a.dim, b.dim);
    Operator::from_fn(da * db, |r, c| a.get(r / db, c / db) * b.get(r % db, c % db))
}

/// Which tensor factor of a bipartite operator to keep.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Subsystem {
    A,
    B,
}

pub fn partial_trace(m: &Operator, keep: Subsystem, dims: (usize, usize)) -> Result<Operator, LinalgError> {
    let (da, db) = dims;
    if m.dim != da * db {
        return Err(LinalgError::DimensionMismatch {
            expected: da * db,
            found: m.dim,
        });
    }
    Ok(match keep {
        Subsystem::A => Operator::from_fn(da, |i, j| (0..db).map(|k| m.get(i * db + k, j * db + k)).sum()),
        Subsystem::B => Operator::from_fn(db, |k, l| (0..da).map(|i| m.get(i * db + k, i * db + l)).sum()),
    })
}

/// Eigenvalues in descending order with matching orthonormal eigenvectors.
#[derive(Clone, Debug)]
pub struct EigenDecomposition {
    pub values: Vec<f64>,
    pub vectors: Vec<Ket>,
}

impl EigenDecomposition {
    /// `Σ λ_i |v_i⟩⟨v_i|`.
    pub fn reconstruct(&self) -> Operator {
        let dim = self.vectors[0].dim();
        self.values
            .iter()
            .zip(&self.vectors)
            .fold(Operator::zeros(dim), |acc, (&l, v)| acc + Operator::projector(v) * l)
    }
}

/// Eigendecomposition of a Hermitian operator.
///
/// Qubit operators use the closed form `c0 ± |c|` from their Bloch
/// coefficients; larger operators use cyclic complex Jacobi rotations.
/// Eigenvectors are returned with [`Ket::canonical_phase`] applied.
pub fn eig_hermitian(m: &Operator) -> Result<EigenDecomposition, LinalgError> {
    let scale = m.frobenius_norm().max(1.0);
    m.check_hermitian(TOL_ALGEBRAIC * scale)?;
    let (values, vectors) = match m.dim {
        1 => (vec![m.get(0, 0).re], vec![Ket::basis(1, 0)]),
        2 => qubit_eigen(&m.hermitian_part()),
        _ => jacobi_eigen(&m.hermitian_part()),
    };
    let mut pairs: Vec<(f64, Ket)> = values
        .into_iter()
        .zip(vectors)
        .map(|(l, v)| (l, v.canonical_phase()))
        .collect();
    pairs.sort_by(|a, b| b.0.total_cmp(&a.0));
    let (values, vectors) = pairs.into_iter().unzip();
    Ok(EigenDecomposition { values, vectors })
}

fn qubit_eigen(m: &Operator) -> (Vec<f64>, Vec<Ket>) {
    let c0 = 0.5 * (m.get(0, 0).re + m.get(1, 1).re);
    let cz = 0.5 * (m.get(0, 0).re - m.get(1, 1).re);
    let cx = m.get(1, 0).re;
    let cy = m.get(1, 0).im;
    let r = (cz * cz + cx * cx + cy * cy).sqrt();
    if r <= 1e-15 * c0.abs().max(1.0) {
        return (vec![c0 + r, c0 - r], vec![Ket::basis(2, 0), Ket::basis(2, 1)]);
    }
    let (nz, nx, ny) = (cz / r, cx / r, cy / r);
    // Pick the better-conditioned column of each projector (𝟙 ± n·σ)/2.
    let plus = if nz >= 0.0 {
        Ket::new(vec![C64::new(1.0 + nz, 0.0), C64::new(nx, ny)])
    } else {
        Ket::new(vec![C64::new(nx, -ny), C64::new(1.0 - nz, 0.0)])
    };
    let minus = if nz <= 0.0 {
        Ket::new(vec![C64::new(1.0 - nz, 0.0), C64::new(-nx, -ny)])
    } else {
        Ket::new(vec![C64::new(-nx, ny), C64::new(1.0 + nz, 0.0)])
    };
    (vec![c0 + r, c0 - r], vec![plus.normalized(), minus.normalized()])
}

fn off_diagonal_norm(a: &Operator) -> f64 {
    let n = a.dim;
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                s += a.get(i, j).norm_sqr();
            }
        }
    }
    s.sqrt()
}

fn jacobi_eigen(m: &Operator) -> (Vec<f64>, Vec<Ket>) {
    let n = m.dim;
    let threshold = JACOBI_OFF_DIAGONAL_EPS * m.frobenius_norm().max(1.0);
    let mut a = m.clone();
    let mut v = Operator::identity(n);
    for _ in 0..JACOBI_MAX_SWEEPS {
        if off_diagonal_norm(&a) < threshold {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a.get(p, q);
                let r = apq.norm();
                if r == 0.0 {
                    continue;
                }
                let phase = apq / r;
                let tau = (a.get(q, q).re - a.get(p, p).re) / (2.0 * r);
                let t = if tau >= 0.0 {
                    1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    -1.0 / (-tau + (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                // Rotation in the (p, q) plane: diag(1, e^{-iφ}) · [[c, s], [-s, c]].
                let g_pp = C64::new(c, 0.0);
                let g_pq = C64::new(s, 0.0);
                let g_qp = phase.conj() * (-s);
                let g_qq = phase.conj() * c;
                rotate_columns(&mut a, p, q, [g_pp, g_pq, g_qp, g_qq]);
                rotate_rows(&mut a, p, q, [g_pp, g_pq, g_qp, g_qq]);
                rotate_columns(&mut v, p, q, [g_pp, g_pq, g_qp, g_qq]);
                a.set(p, q, ZERO);
                a.set(q, p, ZERO);
                let app = a.get(p, p).re;
                let aqq = a.get(q, q).re;
                a.set(p, p, C64::new(app, 0.0));
                a.set(q, q, C64::new(aqq, 0.0));
            }
        }
    }
    let values = (0..n).map(|i| a.get(i, i).re).collect();
    let vectors = (0..n)
        .map(|j| Ket::new((0..n).map(|i| v.get(i, j)).collect()))
        .collect();
    (values, vectors)
}

/// `m ← m·G` restricted to columns `p, q`, with `g = [G_pp, G_pq, G_qp, G_qq]`.
fn rotate_columns(m: &mut Operator, p: usize, q: usize, g: [C64; 4]) {
    for k in 0..m.dim {
        let mkp = m.get(k, p);
        let mkq = m.get(k, q);
        m.set(k, p, mkp * g[0] + mkq * g[2]);
        m.set(k, q, mkp * g[1] + mkq * g[3]);
    }
}

/// `m ← G†·m` restricted to rows `p, q`.
fn rotate_rows(m: &mut Operator, p: usize, q: usize, g: [C64; 4]) {
    for k in 0..m.dim {
        let mpk = m.get(p, k);
        let mqk = m.get(q, k);
        m.set(p, k, g[0].conj() * mpk + g[2].conj() * mqk);
        m.set(q, k, g[1].conj() * mpk + g[3].conj() * mqk);
    }
}
