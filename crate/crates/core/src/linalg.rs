//! Small dense matrices over [`Real`] scalars and the matrix exponential.

use crate::numeric::Real;

#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix<T> {
    n: usize,
    data: Vec<T>,
}

impl<T: Real> DenseMatrix<T> {
    pub fn zeros(n: usize) -> Self {
        DenseMatrix { n, data: vec![T::zero(); n * n] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.data[i * n + i] = T::one();
        }
        m
    }

    /// Builds from row-major entries.
    pub fn from_rows(n: usize, data: Vec<T>) -> Self {
        assert_eq!(data.len(), n * n, "row-major data must be n*n");
        DenseMatrix { n, data }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> &T {
        &self.data[i * self.n + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: T) {
        self.data[i * self.n + j] = v;
    }

    pub fn column(&self, j: usize) -> Vec<T> {
        (0..self.n).map(|i| self.get(i, j).clone()).collect()
    }

    pub fn to_f64(&self) -> DenseMatrix<f64> {
        DenseMatrix { n: self.n, data: self.data.iter().map(Real::to_f64).collect() }
    }

    pub fn scale(&self, c: &T) -> Self {
        DenseMatrix { n: self.n, data: self.data.iter().map(|x| x.clone() * c.clone()).collect() }
    }

    pub fn add(&self, other: &Self) -> Self {
        self.zip_with(other, |a, b| a.clone() + b.clone())
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.zip_with(other, |a, b| a.clone() - b.clone())
    }

    fn zip_with(&self, other: &Self, f: impl Fn(&T, &T) -> T) -> Self {
        assert_eq!(self.n, other.n);
        DenseMatrix { n: self.n, data: self.data.iter().zip(&other.data).map(|(a, b)| f(a, b)).collect() }
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.n, other.n);
        let n = self.n;
        let zero = T::zero();
        let mut out = Self::zeros(n);
        for i in 0..n {
            for l in 0..n {
                let a = &self.data[i * n + l];
                if *a == zero {
                    continue;
                }
                for j in 0..n {
                    let b = &other.data[l * n + j];
                    if *b == zero {
                        continue;
                    }
                    let idx = i * n + j;
                    out.data[idx] = out.data[idx].clone() + a.clone() * b.clone();
                }
            }
        }
        out
    }

    pub fn matvec(&self, v: &[T]) -> Vec<T> {
        assert_eq!(v.len(), self.n);
        let zero = T::zero();
        (0..self.n)
            .map(|i| {
                let row = &self.data[i * self.n..(i + 1) * self.n];
                row.iter().zip(v).fold(T::zero(), |acc, (a, x)| {
                    if *a == zero || *x == zero {
                        acc
                    } else {
                        acc + a.clone() * x.clone()
                    }
                })
            })
            .collect()
    }

    /// v^T A
    pub fn vecmat(&self, v: &[T]) -> Vec<T> {
        assert_eq!(v.len(), self.n);
        let zero = T::zero();
        let mut out = vec![T::zero(); self.n];
        for (i, x) in v.iter().enumerate() {
            if *x == zero {
                continue;
            }
            for (j, o) in out.iter_mut().enumerate() {
                let a = &self.data[i * self.n + j];
                if *a != zero {
                    *o = o.clone() + x.clone() * a.clone();
                }
            }
        }
        out
    }

    /// Induced 1-norm (maximum absolute column sum), as f64.
    pub fn norm1(&self) -> f64 {
        (0..self.n).map(|j| (0..self.n).map(|i| self.get(i, j).to_f64().abs()).sum::<f64>()).fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|x| x.to_f64().abs()).fold(0.0, f64::max)
    }

    /// Solves self * X = rhs by Gaussian elimination with partial pivoting.
    /// Returns `None` for a numerically singular matrix.
    pub fn solve(&self, rhs: &Self) -> Option<Self> {
        let n = self.n;
        let mut a = self.data.clone();
        let mut b = rhs.data.clone();
        for col in 0..n {
            let pivot = (col..n).max_by(|&r, &s| {
                a[r * n + col].abs().partial_cmp(&a[s * n + col].abs()).unwrap_or(std::cmp::Ordering::Equal)
            })?;
            if a[pivot * n + col] == T::zero() {
                return None;
            }
            if pivot != col {
                for j in 0..n {
                    a.swap(pivot * n + j, col * n + j);
                    b.swap(pivot * n + j, col * n + j);
                }
            }
            let p = a[col * n + col].clone();
            for row in col + 1..n {
                let factor = a[row * n + col].clone() / p.clone();
                if factor == T::zero() {
                    continue;
                }
                for j in col..n {
                    let v = a[col * n + j].clone();
                    a[row * n + j] = a[row * n + j].clone() - factor.clone() * v;
                }
                for j in 0..n {
                    let v = b[col * n + j].clone();
                    b[row * n + j] = b[row * n + j].clone() - factor.clone() * v;
                }
            }
        }
        for col in (0..n).rev() {
            let p = a[col * n + col].clone();
            for j in 0..n {
                let mut acc = b[col * n + j].clone();
                for l in col + 1..n {
                    acc = acc - a[col * n + l].clone() * b[l * n + j].clone();
                }
                b[col * n + j] = acc / p.clone();
            }
        }
        Some(DenseMatrix { n, data: b })
    }
}

// Higham (2005) degree-13 Padé coefficients and the 1-norm threshold below
// which no scaling is needed at double precision.
const PADE13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];
const THETA13: f64 = 5.371920351148152;

/// exp(A) by scaling and squaring. At double precision this is the degree-13
/// Padé scheme; at higher precision a Taylor polynomial is summed to the
/// working precision after scaling the norm below one half.
pub fn expm<T: Real>(a: &DenseMatrix<T>) -> DenseMatrix<T> {
    if T::UNIT_ROUNDOFF >= 1e-17 {
        expm_pade13(a)
    } else {
        expm_taylor(a)
    }
}

fn squarings_for(norm: f64, target: f64) -> u32 {
    if norm <= target {
        0
    } else {
        (norm / target).log2().ceil().max(0.0) as u32
    }
}

fn expm_pade13<T: Real>(a: &DenseMatrix<T>) -> DenseMatrix<T> {
    let n = a.dim();
    let s = squarings_for(a.norm1(), THETA13);
    let a = a.scale(&T::from_f64(0.5f64.powi(s as i32)));
    let b: Vec<T> = PADE13.iter().map(|&c| T::from_f64(c)).collect();
    let ident = DenseMatrix::identity(n);
    let a2 = a.matmul(&a);
    let a4 = a2.matmul(&a2);
    let a6 = a4.matmul(&a2);
    let u_inner = a6.scale(&b[13]).add(&a4.scale(&b[11])).add(&a2.scale(&b[9]));
    let u = a.matmul(
        &a6.matmul(&u_inner).add(&a6.scale(&b[7])).add(&a4.scale(&b[5])).add(&a2.scale(&b[3])).add(&ident.scale(&b[1])),
    );
    let v_inner = a6.scale(&b[12]).add(&a4.scale(&b[10])).add(&a2.scale(&b[8]));
    let v =
        a6.matmul(&v_inner).add(&a6.scale(&b[6])).add(&a4.scale(&b[4])).add(&a2.scale(&b[2])).add(&ident.scale(&b[0]));
    let mut r = v.sub(&u).solve(&v.add(&u)).expect("Padé denominator is nonsingular");
    for _ in 0..s {
        r = r.matmul(&r);
    }
    r
}

fn expm_taylor<T: Real>(a: &DenseMatrix<T>) -> DenseMatrix<T> {
    let n = a.dim();
    let s = squarings_for(a.norm1(), 0.5);
    let a = a.scale(&T::from_f64(0.5f64.powi(s as i32)));
    let norm = a.norm1();
    let mut sum = DenseMatrix::identity(n);
    let mut term = DenseMatrix::identity(n);
    // norm <= 1/2: the remainder after term j is below twice that term's norm bound
    let mut bound = 1.0f64;
    for j in 1..400u32 {
        term = term
            .matmul(&a)
            .scale(&T::from_rational(&dashu_ratio::RBig::from_parts(dashu_int::IBig::ONE, dashu_int::UBig::from(j))));
        sum = sum.add(&term);
        bound *= norm / j as f64;
        if bound < T::UNIT_ROUNDOFF || bound == 0.0 {
            break;
        }
    }
    for _ in 0..s {
        sum = sum.matmul(&sum);
    }
    sum
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::ExtFloat;

    fn upper(n: usize, entries: &[f64]) -> DenseMatrix<f64> {
        DenseMatrix::from_rows(n, entries.to_vec())
    }

    #[test]
    fn exp_of_zero_is_identity() {
        let z = DenseMatrix::<f64>::zeros(4);
        assert_eq!(expm(&z), DenseMatrix::identity(4));
        let z = DenseMatrix::<ExtFloat>::zeros(3);
        assert_eq!(expm(&z).to_f64(), DenseMatrix::identity(3));
    }

    #[test]
    fn exp_of_jordan_block() {
        // exp([[a,1],[0,a]]) = e^a [[1,1],[0,1]]
        for &a in &[-3.0, -0.1, 0.7, 4.0, -20.0] {
            let m = upper(2, &[a, 1.0, 0.0, a]);
            let e = expm(&m);
            let ea = f64::exp(a);
            assert!((e.get(0, 0) - ea).abs() <= 1e-14 * ea.max(1e-300) * 10.0);
            assert!((e.get(0, 1) - ea).abs() <= 1e-13 * ea);
            assert!(e.get(1, 0).abs() < 1e-300);
        }
    }

    #[test]
    fn extended_exp_agrees_with_scalar() {
        let m = DenseMatrix::from_rows(
            2,
            vec![ExtFloat::from_f64(-7.5), ExtFloat::from_int(2), ExtFloat::zero(), ExtFloat::from_f64(-1.25)],
        );
        let e = expm(&m);
        let e00 = ExtFloat::from_f64(-7.5).exp();
        let e11 = ExtFloat::from_f64(-1.25).exp();
        // off-diagonal of exp of 2x2 upper triangular: b (e^a - e^d)/(a - d)
        let e01 = ExtFloat::from_int(2) * (e00.clone() - e11.clone()) / ExtFloat::from_f64(-6.25);
        for (got, want) in [(e.get(0, 0), e00), (e.get(1, 1), e11), (e.get(0, 1), e01)] {
            assert!((got.clone() - want).abs().to_f64() < 1e-50);
        }
    }

    #[test]
    fn solve_recovers_known_solution() {
        let a = upper(3, &[2.0, 1.0, 0.0, 1.0, 3.0, 1.0, 0.0, 1.0, 4.0]);
        let x = upper(3, &[1.0, 0.0, 2.0, -1.0, 1.0, 0.0, 0.5, 0.5, 0.5]);
        let b = a.matmul(&x);
        let got = a.solve(&b).unwrap();
        assert!(got.sub(&x).max_abs() < 1e-14);
        assert!(DenseMatrix::<f64>::zeros(2).solve(&DenseMatrix::identity(2)).is_none());
    }

    #[test]
    fn norms_and_products() {
        let a = upper(2, &[1.0, -4.0, 2.0, 1.0]);
        assert_eq!(a.norm1(), 5.0);
        assert_eq!(a.matvec(&[1.0, 1.0]), vec![-3.0, 3.0]);
        assert_eq!(a.vecmat(&[1.0, 1.0]), vec![3.0, -3.0]);
    }
}
