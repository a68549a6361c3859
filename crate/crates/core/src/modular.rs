//! Exact arithmetic over Z_N: residue helpers, roots of unity, discrete
//! Fourier transform matrices, banded Toeplitz masks and invertibility of
//! matrices over the ring Z_N (unit determinant test, composite N included).

use num_bigint::BigInt;
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Checks `n >= 2`, the minimum register dimension.
pub fn check_modulus(n: u32) -> Result<()> {
    if n < 2 {
        return Err(Error::InvalidModulus(n));
    }
    Ok(())
}

/// Checks that `value` is a valid residue mod `n`.
pub fn check_symbol(value: u32, n: u32) -> Result<()> {
    if value >= n {
        return Err(Error::SymbolOutOfRange { value, modulus: n });
    }
    Ok(())
}

#[inline]
pub fn add_mod(a: u32, b: u32, n: u32) -> u32 {
    ((a as u64 + b as u64) % n as u64) as u32
}

#[inline]
pub fn sub_mod(a: u32, b: u32, n: u32) -> u32 {
    ((a as u64 + n as u64 - (b % n) as u64) % n as u64) as u32
}

#[inline]
pub fn mul_mod(a: u32, b: u32, n: u32) -> u32 {
    ((a as u64 * b as u64) % n as u64) as u32
}

#[inline]
pub fn neg_mod(a: u32, n: u32) -> u32 {
    if a % n == 0 {
        0
    } else {
        n - a % n
    }
}

pub fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

/// Multiplicative inverse of `a` mod `n`, when `gcd(a, n) = 1`.
pub fn inverse_mod(a: u32, n: u32) -> Option<u32> {
    let (mut old_r, mut r) = (a as i64 % n as i64, n as i64);
    let (mut old_s, mut s) = (1i64, 0i64);
    while r != 0 {
        let q = old_r / r;
        (old_r, r) = (r, old_r - q * r);
        (old_s, s) = (s, old_s - q * s);
    }
    if old_r.abs() != 1 {
        return None;
    }
    // old_r may be -1 when the loop started from a negative remainder path.
    let inv = old_s * old_r.signum();
    Some(inv.rem_euclid(n as i64) as u32)
}

/// exp(2*pi*i * e / n), the `e`-th power of the primitive `n`-th root of unity.
///
/// Period-`n` in `e`; negative exponents wrap.
pub fn root_of_unity(n: u32, e: i64) -> Result<Complex64> {
    check_modulus(n)?;
    let e = e.rem_euclid(n as i64) as f64;
    let theta = 2.0 * std::f64::consts::PI * e / n as f64;
    Ok(Complex64::new(theta.cos(), theta.sin()))
}

/// Precomputed powers of the primitive `n`-th root of unity.
#[derive(Debug, Clone)]
pub struct UnityRoots {
    n: u32,
    powers: Vec<Complex64>,
}

impl UnityRoots {
    pub fn new(n: u32) -> Result<Self> {
        check_modulus(n)?;
        let powers = (0..n)
            .map(|e| root_of_unity(n, e as i64).expect("modulus validated"))
            .collect();
        Ok(Self { n, powers })
    }

    pub fn modulus(&self) -> u32 {
        self.n
    }

    /// omega_n^e with `e` already reduced or not.
    #[inline]
    pub fn power(&self, e: u32) -> Complex64 {
        self.powers[(e % self.n) as usize]
    }
}

/// Small dense complex matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexMatrix {
    dim: usize,
    data: Vec<Complex64>,
}

impl ComplexMatrix {
    pub fn new(dim: usize, data: Vec<Complex64>) -> Result<Self> {
        if data.len() != dim * dim {
            return Err(Error::Shape(format!(
                "matrix of dimension {dim} needs {} entries, got {}",
                dim * dim,
                data.len()
            )));
        }
        Ok(Self { dim, data })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.data[row * self.dim + col]
    }

    /// Largest absolute deviation of `M * M^dagger` from the identity.
    pub fn unitarity_defect(&self) -> f64 {
        let mut defect = 0.0f64;
        for r in 0..self.dim {
            for c in 0..self.dim {
                let mut acc = Complex64::new(0.0, 0.0);
                for k in 0..self.dim {
                    acc += self.get(r, k) * self.get(c, k).conj();
                }
                let expected = if r == c { 1.0 } else { 0.0 };
                defect = defect.max((acc - expected).norm());
            }
        }
        defect
    }
}

/// The N-point transform: entry (m, j) = omega_N^{j m} / sqrt(N).
pub fn dft_matrix(n: u32) -> Result<ComplexMatrix> {
    check_modulus(n)?;
    let roots = UnityRoots::new(n)?;
    let scale = 1.0 / (n as f64).sqrt();
    let dim = n as usize;
    let mut data = Vec::with_capacity(dim * dim);
    for m in 0..n {
        for j in 0..n {
            data.push(roots.power(mul_mod(j, m, n)) * scale);
        }
    }
    ComplexMatrix::new(dim, data)
}

/// Conjugate transpose of [`dft_matrix`].
pub fn inverse_dft_matrix(n: u32) -> Result<ComplexMatrix> {
    let fwd = dft_matrix(n)?;
    let dim = fwd.dim();
    let mut data = Vec::with_capacity(dim * dim);
    for m in 0..dim {
        for j in 0..dim {
            data.push(fwd.get(j, m).conj());
        }
    }
    ComplexMatrix::new(dim, data)
}

/// Finite tap list mu(0), mu(1), ..., mu(M) of a banded lower-triangular
/// Toeplitz mixing matrix; M = taps.len() - 1 is the memory.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ToeplitzMask {
    taps: Vec<u32>,
}

impl ToeplitzMask {
    pub fn new(taps: Vec<u32>) -> Result<Self> {
        if taps.is_empty() {
            return Err(Error::Validation("mask needs at least one tap".into()));
        }
        Ok(Self { taps })
    }

    pub fn taps(&self) -> &[u32] {
        &self.taps
    }

    pub fn memory(&self) -> usize {
        self.taps.len() - 1
    }

    /// mu(d) for lag d, zero beyond the band.
    pub fn tap(&self, d: usize, n: u32) -> u32 {
        self.taps.get(d).map_or(0, |&t| t % n)
    }
}

/// Matrix with entries in Z_N, row-major, entries stored reduced.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModMatrix {
    rows: usize,
    cols: usize,
    data: Vec<u32>,
}

impl ModMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<u32>, n: u32) -> Result<Self> {
        check_modulus(n)?;
        if data.len() != rows * cols {
            return Err(Error::Shape(format!(
                "{rows}x{cols} matrix needs {} entries, got {}",
                rows * cols,
                data.len()
            )));
        }
        let data = data.into_iter().map(|v| v % n).collect();
        Ok(Self { rows, cols, data })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> u32 {
        self.data[row * self.cols + col]
    }

    /// Matrix-vector product mod n.
    pub fn mul_vec(&self, v: &[u32], n: u32) -> Result<Vec<u32>> {
        if v.len() != self.cols {
            return Err(Error::Shape(format!(
                "vector of length {} against {} columns",
                v.len(),
                self.cols
            )));
        }
        Ok((0..self.rows)
            .map(|r| {
                let mut acc = 0u64;
                for c in 0..self.cols {
                    acc += self.get(r, c) as u64 * v[c] as u64;
                }
                (acc % n as u64) as u32
            })
            .collect())
    }

    pub fn mul(&self, other: &ModMatrix, n: u32) -> Result<ModMatrix> {
        if self.cols != other.rows {
            return Err(Error::Shape(format!(
                "{}x{} times {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut data = vec![0u32; self.rows * other.cols];
        for r in 0..self.rows {
            for c in 0..other.cols {
                let mut acc = 0u64;
                for k in 0..self.cols {
                    acc += self.get(r, k) as u64 * other.get(k, c) as u64;
                }
                data[r * other.cols + c] = (acc % n as u64) as u32;
            }
        }
        ModMatrix::new(self.rows, other.cols, data, n)
    }

    pub fn is_identity(&self) -> bool {
        self.rows == self.cols
            && (0..self.rows).all(|r| (0..self.cols).all(|c| self.get(r, c) == u32::from(r == c)))
    }
}

/// Expands a Toeplitz mask to the L x L truncation: entry (i, p) = mu(i - p)
/// for 0 <= i - p <= M, zero otherwise.
pub fn expand_mask(mask: &ToeplitzMask, l: usize, n: u32) -> Result<ModMatrix> {
    check_modulus(n)?;
    if l == 0 {
        return Err(Error::Validation(
            "truncation length must be positive".into(),
        ));
    }
    let mut data = vec![0u32; l * l];
    for i in 0..l {
        for p in 0..=i {
            data[i * l + p] = mask.tap(i - p, n);
        }
    }
    ModMatrix::new(l, l, data, n)
}

/// Exact integer determinant by fraction-free (Bareiss) elimination.
fn determinant_exact(m: &ModMatrix) -> BigInt {
    let l = m.rows();
    if l == 0 {
        return BigInt::from(1);
    }
    let mut a: Vec<Vec<BigInt>> = (0..l)
        .map(|r| (0..l).map(|c| BigInt::from(m.get(r, c))).collect())
        .collect();
    let mut sign = BigInt::from(1);
    let mut prev = BigInt::from(1);
    for k in 0..l - 1 {
        if a[k][k] == BigInt::from(0) {
            // Pivot search; a fully zero column means determinant zero.
            match (k + 1..l).find(|&r| a[r][k] != BigInt::from(0)) {
                Some(r) => {
                    a.swap(k, r);
                    sign = -sign;
                }
                None => return BigInt::from(0),
            }
        }
        for i in k + 1..l {
            for j in k + 1..l {
                let num = &a[i][j] * &a[k][k] - &a[i][k] * &a[k][j];
                a[i][j] = num / &prev;
            }
            a[i][k] = BigInt::from(0);
        }
        prev = a[k][k].clone();
    }
    sign * a[l - 1][l - 1].clone()
}

fn bigint_mod(v: &BigInt, n: u32) -> u32 {
    use num_bigint::Sign;
    let m = v % BigInt::from(n);
    let (sign, digits) = m.to_u32_digits();
    let r = digits.first().copied().unwrap_or(0);
    match sign {
        Sign::Minus => (n - r) % n,
        _ => r % n,
    }
}

fn minor(m: &ModMatrix, skip_row: usize, skip_col: usize, n: u32) -> ModMatrix {
    let l = m.rows();
    let mut data = Vec::with_capacity((l - 1) * (l - 1));
    for r in 0..l {
        if r == skip_row {
            continue;
        }
        for c in 0..l {
            if c == skip_col {
                continue;
            }
            data.push(m.get(r, c));
        }
    }
    ModMatrix::new(l - 1, l - 1, data, n).expect("minor shape")
}

/// Determinant reduced into Z_N.
pub fn determinant_mod(m: &ModMatrix, n: u32) -> Result<u32> {
    check_modulus(n)?;
    if m.rows() != m.cols() {
        return Err(Error::Shape(format!(
            "determinant of non-square {}x{} matrix",
            m.rows(),
            m.cols()
        )));
    }
    Ok(bigint_mod(&determinant_exact(m), n))
}

/// Unit test for the ring of L x L matrices over Z_N: the matrix is
/// invertible iff gcd(det, N) = 1. Returns the inverse when it exists,
/// computed from the adjugate so that composite N needs no division by
/// non-units.
pub fn is_invertible_mod(m: &ModMatrix, n: u32) -> Result<Option<ModMatrix>> {
    check_modulus(n)?;
    if m.rows() != m.cols() {
        return Err(Error::Shape(format!(
            "invertibility of non-square {}x{} matrix",
            m.rows(),
            m.cols()
        )));
    }
    let det = determinant_mod(m, n)?;
    let det_inv = match inverse_mod(det, n) {
        Some(v) => v,
        None => return Ok(None),
    };
    let l = m.rows();
    if l == 0 {
        return Ok(Some(ModMatrix::new(0, 0, vec![], n)?));
    }
    if l == 1 {
        return Ok(Some(ModMatrix::new(1, 1, vec![det_inv], n)?));
    }
    let mut data = vec![0u32; l * l];
    for r in 0..l {
        for c in 0..l {
            let cof = determinant_exact(&minor(m, r, c, n));
            let cof = if (r + c) % 2 == 0 { cof } else { -cof };
            // Adjugate transposes the cofactor grid.
            data[c * l + r] = mul_mod(bigint_mod(&cof, n), det_inv, n);
        }
    }
    Ok(Some(ModMatrix::new(l, l, data, n)?))
}
