//! Liouville-space vectors, translation superoperators, relaxation
//! superoperators and Zeeman-coherence projectors.
//!
//! Vectorization is row-major: `vec(ρ)[i·n + j] = ρ_ij`, so that
//! `X♭ = X ⊗ 1` and `X♯ = 1 ⊗ Xᵀ`.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::spin::{tensor_operator, HalfInt, SpinOperators};
use crate::{CMatrix, CVector};

pub type LiouvilleVector = CVector;
pub type Superoperator = CMatrix;

pub fn vectorize(rho: &CMatrix) -> LiouvilleVector {
    let n = rho.nrows();
    CVector::from_fn(n * rho.ncols(), |k, _| rho[(k / n, k % n)])
}

pub fn devectorize(v: &LiouvilleVector, n: usize) -> Result<CMatrix> {
    if v.len() != n * n {
        return Err(Error::DimensionMismatch {
            expected: n * n,
            found: v.len(),
        });
    }
    Ok(CMatrix::from_fn(n, n, |r, c| v[r * n + c]))
}

/// (A|B) = Tr(A†B).
pub fn inner(a: &LiouvilleVector, b: &LiouvilleVector) -> Complex64 {
    a.dotc(b)
}

/// X♭: ρ ↦ Xρ.
pub fn left(x: &CMatrix) -> Superoperator {
    x.kronecker(&CMatrix::identity(x.nrows(), x.nrows()))
}

/// X♯: ρ ↦ ρX.
pub fn right(x: &CMatrix) -> Superoperator {
    CMatrix::identity(x.nrows(), x.nrows()).kronecker(&x.transpose())
}

/// X©: ρ ↦ [X, ρ].
pub fn commutator(x: &CMatrix) -> Superoperator {
    left(x) - right(x)
}

/// Collision superoperators in the coupled basis.
#[derive(Debug, Clone)]
pub struct RelaxationSuperoperators {
    /// S-damping, ½ Σ S©S©.
    pub s_damping: Superoperator,
    /// F-damping, ½(F♭·F♭ + F♯·F♯) − F♭·F♯.
    pub f_damping: Superoperator,
    /// Electron spin-exchange vector, S♭ + S♯ − 2i S♭×S♯.
    pub s_exchange: [Superoperator; 3],
    /// Same construction with F.
    pub f_exchange: [Superoperator; 3],
}

fn exchange_vector(ops: &[CMatrix; 3]) -> [Superoperator; 3] {
    let l = ops.each_ref().map(left);
    let r = ops.each_ref().map(right);
    let two_i = Complex64::new(0.0, 2.0);
    std::array::from_fn(|k| {
        let (p, q) = ((k + 1) % 3, (k + 2) % 3);
        let cross = &l[p] * &r[q] - &l[q] * &r[p];
        &l[k] + &r[k] - cross * two_i
    })
}

impl RelaxationSuperoperators {
    pub fn new(ops: &SpinOperators) -> Self {
        let n2 = ops.dim() * ops.dim();
        let mut s_damping = Superoperator::zeros(n2, n2);
        for s in &ops.s {
            let c = commutator(s);
            s_damping += &c * &c * Complex64::new(0.5, 0.0);
        }
        let mut f_damping = Superoperator::zeros(n2, n2);
        for f in &ops.f {
            let (l, r) = (left(f), right(f));
            f_damping += (&l * &l + &r * &r) * Complex64::new(0.5, 0.0) - &l * &r;
        }
        RelaxationSuperoperators {
            s_damping,
            f_damping,
            s_exchange: exchange_vector(&ops.s),
            f_exchange: exchange_vector(&ops.f),
        }
    }
}

/// Diagonal projector onto one Zeeman coherence order.
///
/// Order `k` collects upper-multiplet elements with Δm = k and
/// lower-multiplet elements with Δm = −k. Hyperfine coherences (F ≠ F')
/// belong to no order.
#[derive(Debug, Clone)]
pub struct CoherenceProjector {
    pub order: i32,
    pub indices: Vec<usize>,
    pub matrix: Superoperator,
}

impl CoherenceProjector {
    pub fn new(ops: &SpinOperators, order: i32) -> Self {
        let upper = ops.quantum.upper();
        Self::from_predicate(ops, order, |bra, ket| {
            if bra.f != ket.f {
                return false;
            }
            let dm = (bra.m.twice() - ket.m.twice()) / 2;
            if bra.f == upper {
                dm == order
            } else {
                dm == -order
            }
        })
    }

    /// Projector onto all hyperfine coherences, the complement of Σ_k P_k.
    pub fn hyperfine(ops: &SpinOperators) -> Self {
        Self::from_predicate(ops, i32::MIN, |bra, ket| bra.f != ket.f)
    }

    fn from_predicate(
        ops: &SpinOperators,
        order: i32,
        keep: impl Fn(&crate::spin::BasisState, &crate::spin::BasisState) -> bool,
    ) -> Self {
        let n = ops.dim();
        let mut indices = Vec::new();
        for (r, bra) in ops.states.iter().enumerate() {
            for (c, ket) in ops.states.iter().enumerate() {
                if keep(bra, ket) {
                    indices.push(r * n + c);
                }
            }
        }
        let mut matrix = Superoperator::zeros(n * n, n * n);
        for &k in &indices {
            matrix[(k, k)] = Complex64::new(1.0, 0.0);
        }
        CoherenceProjector {
            order,
            indices,
            matrix,
        }
    }

    pub fn rank(&self) -> usize {
        self.indices.len()
    }

    pub fn apply(&self, v: &LiouvilleVector) -> LiouvilleVector {
        let mut out = CVector::zeros(v.len());
        for &k in &self.indices {
            out[k] = v[k];
        }
        out
    }

    /// Largest coherence order present for this spin system.
    pub fn max_order(ops: &SpinOperators) -> i32 {
        ops.quantum.upper().twice()
    }
}

/// Orthonormal tensor coordinates for the range of one coherence projector.
///
/// Upper-multiplet tensors T_{L,k}(aa) come first, then lower-multiplet
/// T_{L,−k}(bb), each with L descending.
#[derive(Debug, Clone)]
pub struct TensorFrame {
    pub order: i32,
    pub labels: Vec<(HalfInt, HalfInt, HalfInt)>,
    /// Liouville dimension × block dimension; columns are vec(T).
    pub columns: CMatrix,
    pub upper_len: usize,
}

impl TensorFrame {
    pub fn new(ops: &SpinOperators, order: i32) -> Self {
        let q = ops.quantum;
        let mut labels = Vec::new();
        let mut cols = Vec::new();
        let mut upper_len = 0;
        for (f, proj) in [(q.upper(), order), (q.lower(), -order)] {
            let mut l = 2 * f.twice();
            while l >= 2 * proj.abs() {
                let (rank, m) = (HalfInt::from_twice(l), HalfInt::from_twice(2 * proj));
                labels.push((f, rank, m));
                cols.push(vectorize(&tensor_operator(&ops.states, rank, m, f, f)));
                l -= 2;
            }
            if f == q.upper() {
                upper_len = cols.len();
            }
        }
        TensorFrame {
            order,
            labels,
            columns: CMatrix::from_columns(&cols),
            upper_len,
        }
    }

    pub fn dim(&self) -> usize {
        self.columns.ncols()
    }

    /// B† X B.
    pub fn block(&self, x: &Superoperator) -> CMatrix {
        self.columns.adjoint() * x * &self.columns
    }

    /// Tensor coordinates of a Liouville vector.
    pub fn coordinates(&self, v: &LiouvilleVector) -> CVector {
        self.columns.adjoint() * v
    }

    /// Row `s` with (A|B c) = Σ s_i c_i.
    pub fn bra_coordinates(&self, a: &LiouvilleVector) -> CVector {
        self.coordinates(a).conjugate()
    }

    pub fn embed(&self, coords: &CVector) -> LiouvilleVector {
        &self.columns * coords
    }
}

/// Real part of a complex matrix, for blocks known to be real.
pub fn real_part(m: &CMatrix) -> DMatrix<f64> {
    m.map(|z| z.re)
}
