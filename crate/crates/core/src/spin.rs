//! Angular momentum for a nuclear spin coupled to an electron spin.
//!
//! Everything lives in the coupled |F,m⟩ basis, upper multiplet first, `m`
//! descending inside each multiplet.

use std::fmt;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::CMatrix;

/// A half-integer or integer stored as twice its value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct HalfInt(i32);

impl HalfInt {
    pub const fn from_twice(twice: i32) -> Self {
        HalfInt(twice)
    }

    pub fn from_f64(x: f64) -> Result<Self> {
        let t = 2.0 * x;
        if !t.is_finite() || (t - t.round()).abs() > 1e-9 || t.abs() > 1e6 {
            return Err(Error::InvalidSpin(format!("{x} is not a multiple of 1/2")));
        }
        Ok(HalfInt(t.round() as i32))
    }

    pub const fn twice(self) -> i32 {
        self.0
    }

    pub fn value(self) -> f64 {
        f64::from(self.0) / 2.0
    }

    pub fn is_integer(self) -> bool {
        self.0 % 2 == 0
    }
}

impl fmt::Display for HalfInt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_integer() {
            write!(f, "{}", self.0 / 2)
        } else {
            write!(f, "{}/2", self.0)
        }
    }
}

/// Nuclear spin `I` and electron spin `S` of the alkali ground state.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SpinQuantum {
    pub nuclear: HalfInt,
    pub electron: HalfInt,
}

impl SpinQuantum {
    pub fn new(nuclear: f64) -> Result<Self> {
        let nuclear = HalfInt::from_f64(nuclear)?;
        if nuclear.twice() <= 0 || nuclear.is_integer() {
            return Err(Error::InvalidSpin(format!(
                "nuclear spin must be a positive half-integer, got {nuclear}"
            )));
        }
        Ok(SpinQuantum {
            nuclear,
            electron: HalfInt::from_twice(1),
        })
    }

    /// ⁸⁷Rb: I = 3/2.
    pub fn rb87() -> Self {
        SpinQuantum {
            nuclear: HalfInt::from_twice(3),
            electron: HalfInt::from_twice(1),
        }
    }

    /// F = I + 1/2.
    pub fn upper(&self) -> HalfInt {
        HalfInt(self.nuclear.0 + self.electron.0)
    }

    /// F = I − 1/2.
    pub fn lower(&self) -> HalfInt {
        HalfInt((self.nuclear.0 - self.electron.0).abs())
    }

    /// [I] = 2I + 1.
    pub fn nuclear_multiplicity(&self) -> usize {
        (self.nuclear.0 + 1) as usize
    }

    pub fn dim(&self) -> usize {
        self.nuclear_multiplicity() * (self.electron.0 + 1) as usize
    }

    /// Coupled basis labels in storage order.
    pub fn states(&self) -> Vec<BasisState> {
        let mut out = Vec::with_capacity(self.dim());
        for f in [self.upper(), self.lower()] {
            let mut m = f.0;
            while m >= -f.0 {
                out.push(BasisState {
                    f,
                    m: HalfInt(m),
                });
                m -= 2;
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BasisState {
    pub f: HalfInt,
    pub m: HalfInt,
}

fn factorial(n: i32) -> f64 {
    (1..=n).fold(1.0, |acc, k| acc * f64::from(k))
}

/// Clebsch–Gordan coefficient ⟨j1 m1; j2 m2 | J M⟩, all arguments given
/// as twice their value. Condon–Shortley phases.
pub fn clebsch_gordan_twice(j1: i32, m1: i32, j2: i32, m2: i32, j: i32, m: i32) -> f64 {
    if m1 + m2 != m || m1.abs() > j1 || m2.abs() > j2 || m.abs() > j {
        return 0.0;
    }
    if j < (j1 - j2).abs() || j > j1 + j2 || (j1 + j2 + j) % 2 != 0 {
        return 0.0;
    }
    // every argument below is an even number
    let h = |x: i32| x / 2;
    let pre = (f64::from(j + 1) * factorial(h(j + j1 - j2)) * factorial(h(j - j1 + j2))
        * factorial(h(j1 + j2 - j))
        / factorial(h(j1 + j2 + j) + 1))
    .sqrt()
        * (factorial(h(j + m))
            * factorial(h(j - m))
            * factorial(h(j1 - m1))
            * factorial(h(j1 + m1))
            * factorial(h(j2 - m2))
            * factorial(h(j2 + m2)))
        .sqrt();

    let kmax = h(j1 + j2 - j).min(h(j1 - m1)).min(h(j2 + m2));
    let kmin = 0.max(-h(j - j2 + m1)).max(-h(j - j1 - m2));
    let mut sum = 0.0;
    for k in kmin..=kmax {
        let denom = factorial(k)
            * factorial(h(j1 + j2 - j) - k)
            * factorial(h(j1 - m1) - k)
            * factorial(h(j2 + m2) - k)
            * factorial(h(j - j2 + m1) + k)
            * factorial(h(j - j1 - m2) + k);
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        sum += sign / denom;
    }
    pre * sum
}

/// Clebsch–Gordan coefficient ⟨j1 m1; j2 m2 | J M⟩.
///
/// Returns zero when the triangle rule or the projection sum fails, and an
/// error when an argument is not a valid (j, m) pair.
pub fn clebsch_gordan(j1: f64, m1: f64, j2: f64, m2: f64, j: f64, m: f64) -> Result<f64> {
    let pair = |jj: f64, mm: f64| -> Result<(i32, i32)> {
        let bad = Error::InvalidHalfInteger { j: jj, m: mm };
        let (Ok(a), Ok(b)) = (HalfInt::from_f64(jj), HalfInt::from_f64(mm)) else {
            return Err(bad);
        };
        if a.0 < 0 || (a.0 - b.0) % 2 != 0 {
            return Err(bad);
        }
        Ok((a.0, b.0))
    };
    let (j1, m1) = pair(j1, m1)?;
    let (j2, m2) = pair(j2, m2)?;
    let (j, m) = pair(j, m)?;
    Ok(clebsch_gordan_twice(j1, m1, j2, m2, j, m))
}

/// (Jx, Jy, Jz) for a single spin `j` in the |j,m⟩ basis, m descending.
pub fn single_spin_operators(j: HalfInt) -> [CMatrix; 3] {
    let n = (j.0 + 1) as usize;
    let jv = j.value();
    let mut raise = DMatrix::<f64>::zeros(n, n);
    for i in 1..n {
        let m = jv - i as f64;
        raise[(i - 1, i)] = (jv * (jv + 1.0) - m * (m + 1.0)).sqrt();
    }
    let lower = raise.transpose();
    let jz = DMatrix::<f64>::from_fn(n, n, |r, c| if r == c { jv - r as f64 } else { 0.0 });
    let re = |m: &DMatrix<f64>| m.map(|x| Complex64::new(x, 0.0));
    let jx = re(&((&raise + &lower) * 0.5));
    let jy = (re(&raise) - re(&lower)) * Complex64::new(0.0, -0.5);
    [jx, jy, re(&jz)]
}

/// Cartesian spin operators in the coupled basis.
#[derive(Debug, Clone)]
pub struct SpinOperators {
    pub quantum: SpinQuantum,
    pub states: Vec<BasisState>,
    pub i: [CMatrix; 3],
    pub s: [CMatrix; 3],
    pub f: [CMatrix; 3],
}

impl SpinOperators {
    pub fn new(quantum: SpinQuantum) -> Self {
        let states = quantum.states();
        let n = quantum.dim();
        let ni = quantum.nuclear_multiplicity();
        let ns = (quantum.electron.0 + 1) as usize;
        let (ti, ts) = (quantum.nuclear.0, quantum.electron.0);

        // columns: coupled states; rows: uncoupled |mI⟩⊗|mS⟩, both descending
        let u = DMatrix::<f64>::from_fn(n, n, |row, col| {
            let mi = ti - 2 * (row / ns) as i32;
            let ms = ts - 2 * (row % ns) as i32;
            let st = states[col];
            clebsch_gordan_twice(ti, mi, ts, ms, st.f.0, st.m.0)
        })
        .map(|x| Complex64::new(x, 0.0));
        let ut = u.transpose();

        let eye_i = CMatrix::identity(ni, ni);
        let eye_s = CMatrix::identity(ns, ns);
        let to_coupled = |m: CMatrix| &ut * m * &u;
        let [ix, iy, iz] = single_spin_operators(quantum.nuclear).map(|o| to_coupled(o.kronecker(&eye_s)));
        let [sx, sy, sz] = single_spin_operators(quantum.electron).map(|o| to_coupled(eye_i.kronecker(&o)));
        let f = [&ix + &sx, &iy + &sy, &iz + &sz];
        SpinOperators {
            quantum,
            states,
            i: [ix, iy, iz],
            s: [sx, sy, sz],
            f,
        }
    }

    pub fn rb87() -> Self {
        Self::new(SpinQuantum::rb87())
    }

    pub fn dim(&self) -> usize {
        self.states.len()
    }

    /// Basis indices belonging to multiplet `f`.
    pub fn multiplet_indices(&self, f: HalfInt) -> Vec<usize> {
        (0..self.states.len()).filter(|&k| self.states[k].f == f).collect()
    }
}

/// Element T_LM(F F') of the coupled tensor basis.
#[derive(Debug, Clone)]
pub struct TensorElement {
    pub rank: HalfInt,
    pub projection: HalfInt,
    pub bra: HalfInt,
    pub ket: HalfInt,
    pub matrix: CMatrix,
}

/// T_LM(FF') = Σ_m (−1)^(m−M−F') C(F,m; F',M−m | L,M) |F,m⟩⟨F',m−M|.
pub fn tensor_operator(
    states: &[BasisState],
    rank: HalfInt,
    projection: HalfInt,
    bra: HalfInt,
    ket: HalfInt,
) -> CMatrix {
    let n = states.len();
    let mut t = CMatrix::zeros(n, n);
    for (r, sr) in states.iter().enumerate() {
        if sr.f != bra {
            continue;
        }
        for (c, sc) in states.iter().enumerate() {
            if sc.f != ket || sc.m.0 != sr.m.0 - projection.0 {
                continue;
            }
            let cg = clebsch_gordan_twice(bra.0, sr.m.0, ket.0, -sc.m.0, rank.0, projection.0);
            // m − M − F' is an integer whenever the coefficient can be nonzero
            let phase = (sr.m.0 - projection.0 - ket.0) / 2;
            let sign = if phase.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
            t[(r, c)] = Complex64::new(sign * cg, 0.0);
        }
    }
    t
}

/// Complete tensor basis: all (F,F') pairs, L from |F−F'| to F+F', M descending.
pub fn build_tensor_basis(q: &SpinQuantum) -> Vec<TensorElement> {
    let states = q.states();
    let mults = [q.upper(), q.lower()];
    let mut out = Vec::with_capacity(q.dim() * q.dim());
    for &bra in &mults {
        for &ket in &mults {
            let mut l = (bra.0 - ket.0).abs();
            while l <= bra.0 + ket.0 {
                let mut m = l;
                while m >= -l {
                    let (rank, projection) = (HalfInt(l), HalfInt(m));
                    out.push(TensorElement {
                        rank,
                        projection,
                        bra,
                        ket,
                        matrix: tensor_operator(&states, rank, projection, bra, ket),
                    });
                    m -= 2;
                }
                l += 2;
            }
        }
    }
    out
}
