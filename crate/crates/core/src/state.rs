//! Sparse pure states on R registers of dimension N.
//!
//! A state is a sorted map from basis strings to amplitudes. Basis strings are
//! bit-packed into a `u64` (ceil(log2 N) bits per register, register 0 in the
//! most significant lane) so that packed order equals lexicographic order.
//! Amplitudes stay in the exact closed form `omega_N^phase * N^(-s/2)` under
//! every monomial operator; they switch to floating complex only when a
//! Fourier transform or a general unitary densifies a register.

use std::collections::HashMap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::modular::{
    add_mod, check_modulus, check_symbol, dft_matrix, inverse_dft_matrix, ComplexMatrix, UnityRoots,
};

/// Amplitudes below this magnitude are treated as zero and never stored.
pub const PRUNE_EPS: f64 = 1e-12;

/// Hard cap on stored terms per state; exceeding it is a resource error.
pub const MAX_TERMS: usize = 1 << 22;

/// Bits needed to hold one register value in [0, n).
pub fn bits_per_register(n: u32) -> u32 {
    (32 - (n - 1).leading_zeros()).max(1)
}

/// Exact amplitude omega_N^phase * N^(-scale_halves/2).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExactAmplitude {
    pub phase: u32,
    pub scale_halves: u32,
}

impl ExactAmplitude {
    pub fn one() -> Self {
        Self {
            phase: 0,
            scale_halves: 0,
        }
    }

    /// Product of two exact amplitudes: phases add mod n, scales add.
    pub fn mul(self, other: ExactAmplitude, n: u32) -> ExactAmplitude {
        ExactAmplitude {
            phase: add_mod(self.phase, other.phase, n),
            scale_halves: self.scale_halves + other.scale_halves,
        }
    }

    pub fn to_complex(self, roots: &UnityRoots) -> Complex64 {
        let n = roots.modulus() as f64;
        roots.power(self.phase) * n.powf(-(self.scale_halves as f64) / 2.0)
    }
}

/// Term amplitude: exact closed form or floating complex.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Amplitude {
    Exact(ExactAmplitude),
    Float(Complex64),
}

impl Amplitude {
    pub fn to_complex(self, roots: &UnityRoots) -> Complex64 {
        match self {
            Amplitude::Exact(e) => e.to_complex(roots),
            Amplitude::Float(z) => z,
        }
    }

    fn phase_shifted(self, e: u32, roots: &UnityRoots) -> Amplitude {
        match self {
            Amplitude::Exact(x) => Amplitude::Exact(ExactAmplitude {
                phase: add_mod(x.phase, e, roots.modulus()),
                scale_halves: x.scale_halves,
            }),
            Amplitude::Float(z) => Amplitude::Float(z * roots.power(e)),
        }
    }
}

/// One-register operator placed on a target register.
#[derive(Debug, Clone, PartialEq)]
pub struct SingleRegisterOp {
    pub target: usize,
    pub kind: OpKind,
}

#[derive(Debug, Clone, PartialEq)]
pub enum OpKind {
    /// Generalized Pauli X^x Z^z: |j> -> omega^(j z) |j + x>.
    Pauli {
        x: u32,
        z: u32,
    },
    /// |j> -> sum_m omega^(j m) |m> / sqrt(N).
    Dft,
    InverseDft,
    /// |j> -> |j + c>.
    AddConstant(u32),
    /// Arbitrary N x N unitary (checked at application time).
    General(ComplexMatrix),
}

impl SingleRegisterOp {
    pub fn pauli(target: usize, x: u32, z: u32) -> Self {
        Self {
            target,
            kind: OpKind::Pauli { x, z },
        }
    }
}

/// Sparse pure state. Immutable; operations return new states.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseState {
    n: u32,
    registers: usize,
    bits: u32,
    terms: Vec<(u64, Amplitude)>,
}

impl SparseState {
    fn check_capacity(n: u32, registers: usize) -> Result<u32> {
        check_modulus(n)?;
        let bits = bits_per_register(n);
        let needed = registers as u128 * bits as u128;
        if needed > 64 {
            return Err(Error::Resource { needed, limit: 64 });
        }
        Ok(bits)
    }

    /// Builds a state from packed terms. Internal constructor: callers must
    /// supply valid lanes; terms are sorted and zero amplitudes pruned here.
    pub(crate) fn from_packed(
        n: u32,
        registers: usize,
        mut terms: Vec<(u64, Amplitude)>,
    ) -> Result<Self> {
        let bits = Self::check_capacity(n, registers)?;
        if terms.len() > MAX_TERMS {
            return Err(Error::Resource {
                needed: terms.len() as u128,
                limit: MAX_TERMS as u128,
            });
        }
        terms.retain(|(_, a)| match a {
            Amplitude::Exact(_) => true,
            Amplitude::Float(z) => z.norm() > PRUNE_EPS,
        });
        terms.sort_unstable_by_key(|&(k, _)| k);
        debug_assert!(
            terms.windows(2).all(|w| w[0].0 < w[1].0),
            "duplicate basis keys"
        );
        Ok(Self {
            n,
            registers,
            bits,
            terms,
        })
    }

    /// The single computational basis state |values>.
    pub fn basis_state(n: u32, values: &[u32]) -> Result<Self> {
        let bits = Self::check_capacity(n, values.len())?;
        for &v in values {
            check_symbol(v, n)?;
        }
        let key = pack(values, bits);
        Ok(Self {
            n,
            registers: values.len(),
            bits,
            terms: vec![(key, Amplitude::Exact(ExactAmplitude::one()))],
        })
    }

    pub fn modulus(&self) -> u32 {
        self.n
    }

    pub fn registers(&self) -> usize {
        self.registers
    }

    pub fn term_count(&self) -> usize {
        self.terms.len()
    }

    pub(crate) fn bits(&self) -> u32 {
        self.bits
    }

    pub(crate) fn raw_terms(&self) -> &[(u64, Amplitude)] {
        &self.terms
    }

    /// Terms in lexicographic basis order as (basis string, amplitude).
    pub fn terms(&self) -> impl Iterator<Item = (Vec<u32>, Amplitude)> + '_ {
        self.terms
            .iter()
            .map(move |&(k, a)| (unpack(k, self.registers, self.bits), a))
    }

    /// Amplitude of one basis string (zero when absent).
    pub fn amplitude_of(&self, values: &[u32]) -> Result<Complex64> {
        if values.len() != self.registers {
            return Err(Error::Shape(format!(
                "basis string of length {} against {} registers",
                values.len(),
                self.registers
            )));
        }
        for &v in values {
            check_symbol(v, self.n)?;
        }
        let key = pack(values, self.bits);
        let roots = UnityRoots::new(self.n)?;
        Ok(match self.terms.binary_search_by_key(&key, |&(k, _)| k) {
            Ok(i) => self.terms[i].1.to_complex(&roots),
            Err(_) => Complex64::new(0.0, 0.0),
        })
    }

    pub fn norm_sqr(&self) -> f64 {
        let roots = UnityRoots::new(self.n).expect("state modulus is valid");
        self.terms
            .iter()
            .map(|&(_, a)| a.to_complex(&roots).norm_sqr())
            .sum()
    }

    /// <self|other>, conjugate-linear in `self`.
    pub fn inner_product(&self, other: &SparseState) -> Result<Complex64> {
        if self.n != other.n || self.registers != other.registers {
            return Err(Error::Shape(format!(
                "inner product of {} registers mod {} against {} registers mod {}",
                self.registers, self.n, other.registers, other.n
            )));
        }
        let roots = UnityRoots::new(self.n)?;
        let mut acc = Complex64::new(0.0, 0.0);
        let (mut i, mut j) = (0usize, 0usize);
        while i < self.terms.len() && j < other.terms.len() {
            let (ka, aa) = self.terms[i];
            let (kb, ab) = other.terms[j];
            match ka.cmp(&kb) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    acc += aa.to_complex(&roots).conj() * ab.to_complex(&roots);
                    i += 1;
                    j += 1;
                }
            }
        }
        Ok(acc)
    }

    /// Applies a single-register operator.
    pub fn apply_op(&self, op: &SingleRegisterOp) -> Result<SparseState> {
        if op.target >= self.registers {
            return Err(Error::Shape(format!(
                "operator targets register {} of a {}-register state",
                op.target, self.registers
            )));
        }
        let roots = UnityRoots::new(self.n)?;
        match &op.kind {
            OpKind::Pauli { x, z } => {
                let x = x % self.n;
                let z = z % self.n;
                let terms = self
                    .terms
                    .iter()
                    .map(|&(key, amp)| {
                        let v = get_lane(key, op.target, self.registers, self.bits);
                        let phase = ((v as u64 * z as u64) % self.n as u64) as u32;
                        let key = set_lane(
                            key,
                            op.target,
                            add_mod(v, x, self.n),
                            self.registers,
                            self.bits,
                        );
                        (key, amp.phase_shifted(phase, &roots))
                    })
                    .collect();
                SparseState::from_packed(self.n, self.registers, terms)
            }
            OpKind::AddConstant(c) => {
                let c = c % self.n;
                let terms = self
                    .terms
                    .iter()
                    .map(|&(key, amp)| {
                        let v = get_lane(key, op.target, self.registers, self.bits);
                        let key = set_lane(
                            key,
                            op.target,
                            add_mod(v, c, self.n),
                            self.registers,
                            self.bits,
                        );
                        (key, amp)
                    })
                    .collect();
                SparseState::from_packed(self.n, self.registers, terms)
            }
            OpKind::Dft => self.apply_dense(op.target, &dft_matrix(self.n)?, &roots),
            OpKind::InverseDft => self.apply_dense(op.target, &inverse_dft_matrix(self.n)?, &roots),
            OpKind::General(m) => {
                if m.dim() != self.n as usize {
                    return Err(Error::Shape(format!(
                        "general operator of dimension {} on registers of dimension {}",
                        m.dim(),
                        self.n
                    )));
                }
                if m.unitarity_defect() > 1e-9 {
                    return Err(Error::Validation(
                        "general single-register operator is not unitary within 1e-9".into(),
                    ));
                }
                self.apply_dense(op.target, m, &roots)
            }
        }
    }

    fn apply_dense(
        &self,
        target: usize,
        m: &ComplexMatrix,
        roots: &UnityRoots,
    ) -> Result<SparseState> {
        let mut acc: HashMap<u64, Complex64> = HashMap::with_capacity(self.terms.len() * 2);
        for &(key, amp) in &self.terms {
            let v = get_lane(key, target, self.registers, self.bits);
            let z = amp.to_complex(roots);
            for out in 0..self.n {
                let coeff = m.get(out as usize, v as usize);
                if coeff.norm_sqr() == 0.0 {
                    continue;
                }
                let k = set_lane(key, target, out, self.registers, self.bits);
                *acc.entry(k).or_insert(Complex64::new(0.0, 0.0)) += coeff * z;
            }
            if acc.len() > MAX_TERMS {
                return Err(Error::Resource {
                    needed: acc.len() as u128,
                    limit: MAX_TERMS as u128,
                });
            }
        }
        let terms = acc
            .into_iter()
            .map(|(k, z)| (k, Amplitude::Float(z)))
            .collect();
        SparseState::from_packed(self.n, self.registers, terms)
    }

    /// Sequential application of several operators on pairwise distinct
    /// registers.
    pub fn apply_ops(&self, ops: &[SingleRegisterOp]) -> Result<SparseState> {
        let mut seen = std::collections::BTreeSet::new();
        for op in ops {
            if !seen.insert(op.target) {
                return Err(Error::Validation(format!(
                    "pattern places two operators on register {}",
                    op.target
                )));
            }
        }
        let mut state = self.clone();
        for op in ops {
            state = state.apply_op(op)?;
        }
        Ok(state)
    }

    /// Multiplies every term by omega_N^e, keeping exact amplitudes exact.
    pub fn global_phase(&self, e: u32) -> SparseState {
        let roots = UnityRoots::new(self.n).expect("state modulus is valid");
        let terms = self
            .terms
            .iter()
            .map(|&(k, a)| (k, a.phase_shifted(e, &roots)))
            .collect();
        SparseState {
            n: self.n,
            registers: self.registers,
            bits: self.bits,
            terms,
        }
    }

    /// Complex-linear combination sum_i coeff_i |state_i>.
    pub fn superpose(parts: &[(Complex64, &SparseState)]) -> Result<SparseState> {
        let first = parts
            .first()
            .ok_or_else(|| Error::Validation("superposition of zero states".into()))?;
        let (n, registers) = (first.1.n, first.1.registers);
        let roots = UnityRoots::new(n)?;
        let mut raw: Vec<(u64, Complex64)> = Vec::new();
        for (coeff, st) in parts {
            if st.n != n || st.registers != registers {
                return Err(Error::Shape("superposed states of different shapes".into()));
            }
            for &(k, a) in &st.terms {
                raw.push((k, coeff * a.to_complex(&roots)));
            }
        }
        raw.sort_unstable_by_key(|&(k, _)| k);
        let mut terms: Vec<(u64, Amplitude)> = Vec::with_capacity(raw.len());
        for (k, z) in raw {
            match terms.last_mut() {
                Some((lk, Amplitude::Float(acc))) if *lk == k => *acc += z,
                _ => terms.push((k, Amplitude::Float(z))),
            }
        }
        SparseState::from_packed(n, registers, terms)
    }

    /// Scales every amplitude by 1/norm.
    pub fn normalized(&self) -> Result<SparseState> {
        let norm = self.norm_sqr().sqrt();
        if norm <= PRUNE_EPS {
            return Err(Error::Validation(
                "cannot normalize a (near-)zero state".into(),
            ));
        }
        SparseState::superpose(&[(Complex64::new(1.0 / norm, 0.0), self)])
    }

    /// Largest per-term amplitude difference against `other` over the union
    /// of both supports.
    pub fn max_term_deviation(&self, other: &SparseState) -> Result<f64> {
        if self.n != other.n || self.registers != other.registers {
            return Err(Error::Shape(format!(
                "comparing {} registers mod {} against {} registers mod {}",
                self.registers, self.n, other.registers, other.n
            )));
        }
        let roots = UnityRoots::new(self.n)?;
        let mut dev = 0.0f64;
        let (mut i, mut j) = (0usize, 0usize);
        while i < self.terms.len() || j < other.terms.len() {
            let ka = self.terms.get(i).map(|t| t.0);
            let kb = other.terms.get(j).map(|t| t.0);
            match (ka, kb) {
                (Some(a), Some(b)) if a == b => {
                    let d = (self.terms[i].1.to_complex(&roots)
                        - other.terms[j].1.to_complex(&roots))
                    .norm();
                    dev = dev.max(d);
                    i += 1;
                    j += 1;
                }
                (Some(a), Some(b)) if a < b => {
                    dev = dev.max(self.terms[i].1.to_complex(&roots).norm());
                    i += 1;
                }
                (Some(_), Some(_)) => {
                    dev = dev.max(other.terms[j].1.to_complex(&roots).norm());
                    j += 1;
                }
                (Some(_), None) => {
                    dev = dev.max(self.terms[i].1.to_complex(&roots).norm());
                    i += 1;
                }
                (None, Some(_)) => {
                    dev = dev.max(other.terms[j].1.to_complex(&roots).norm());
                    j += 1;
                }
                (None, None) => unreachable!(),
            }
        }
        Ok(dev)
    }

    /// Serializes to the state file format: fields `n`, `registers` and the
    /// lexicographically sorted term list.
    pub fn to_json(&self) -> String {
        let file = StateFile {
            n: self.n,
            registers: self.registers,
            terms: self
                .terms()
                .map(|(basis, amp)| TermRecord {
                    basis,
                    amplitude: match amp {
                        Amplitude::Exact(e) => AmplitudeRecord::Exact {
                            phase_exponent: e.phase,
                            scale_halves: e.scale_halves,
                        },
                        Amplitude::Float(z) => AmplitudeRecord::Float { re: z.re, im: z.im },
                    },
                })
                .collect(),
        };
        let mut s = serde_json::to_string_pretty(&file).expect("state serialization");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<SparseState> {
        let file: StateFile =
            serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        let bits = Self::check_capacity(file.n, file.registers)?;
        let mut terms = Vec::with_capacity(file.terms.len());
        for rec in &file.terms {
            if rec.basis.len() != file.registers {
                return Err(Error::Shape(format!(
                    "term basis of length {} in a {}-register state",
                    rec.basis.len(),
                    file.registers
                )));
            }
            for &v in &rec.basis {
                check_symbol(v, file.n)?;
            }
            let amp = match rec.amplitude {
                AmplitudeRecord::Exact {
                    phase_exponent,
                    scale_halves,
                } => Amplitude::Exact(ExactAmplitude {
                    phase: phase_exponent % file.n,
                    scale_halves,
                }),
                AmplitudeRecord::Float { re, im } => Amplitude::Float(Complex64::new(re, im)),
            };
            terms.push((pack(&rec.basis, bits), amp));
        }
        SparseState::from_packed(file.n, file.registers, terms)
    }
}

#[derive(Serialize, Deserialize)]
struct StateFile {
    n: u32,
    registers: usize,
    terms: Vec<TermRecord>,
}

#[derive(Serialize, Deserialize)]
struct TermRecord {
    basis: Vec<u32>,
    amplitude: AmplitudeRecord,
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum AmplitudeRecord {
    Exact {
        phase_exponent: u32,
        scale_halves: u32,
    },
    Float {
        re: f64,
        im: f64,
    },
}

#[inline]
pub(crate) fn lane_shift(register: usize, registers: usize, bits: u32) -> u32 {
    (registers - 1 - register) as u32 * bits
}

pub(crate) fn pack(values: &[u32], bits: u32) -> u64 {
    let mut key = 0u64;
    for &v in values {
        key = (key << bits) | v as u64;
    }
    key
}

pub(crate) fn unpack(key: u64, registers: usize, bits: u32) -> Vec<u32> {
    let mask = lane_mask(bits);
    (0..registers)
        .map(|r| ((key >> lane_shift(r, registers, bits)) & mask) as u32)
        .collect()
}

#[inline]
pub(crate) fn lane_mask(bits: u32) -> u64 {
    if bits >= 64 {
        u64::MAX
    } else {
        (1u64 << bits) - 1
    }
}

#[inline]
pub(crate) fn get_lane(key: u64, register: usize, registers: usize, bits: u32) -> u32 {
    ((key >> lane_shift(register, registers, bits)) & lane_mask(bits)) as u32
}

#[inline]
pub(crate) fn set_lane(key: u64, register: usize, value: u32, registers: usize, bits: u32) -> u64 {
    let shift = lane_shift(register, registers, bits);
    (key & !(lane_mask(bits) << shift)) | ((value as u64) << shift)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn basis_state_examples() {
        let s = SparseState::basis_state(2, &[0, 0]).unwrap();
        assert_eq!(s.term_count(), 1);
        assert!((s.amplitude_of(&[0, 0]).unwrap() - c(1.0, 0.0)).norm() < 1e-12);

        let t = SparseState::basis_state(3, &[2]).unwrap();
        assert!((t.amplitude_of(&[2]).unwrap() - c(1.0, 0.0)).norm() < 1e-12);

        assert!(matches!(
            SparseState::basis_state(2, &[0, 2]),
            Err(Error::SymbolOutOfRange {
                value: 2,
                modulus: 2
            })
        ));
    }

    #[test]
    fn packing_preserves_lexicographic_order() {
        let bits = bits_per_register(3);
        let mut keys: Vec<(Vec<u32>, u64)> = Vec::new();
        for a in 0..3u32 {
            for b in 0..3u32 {
                for d in 0..3u32 {
                    keys.push((vec![a, b, d], pack(&[a, b, d], bits)));
                }
            }
        }
        let mut by_key = keys.clone();
        by_key.sort_by_key(|&(_, k)| k);
        let mut by_lex = keys;
        by_lex.sort_by(|a, b| a.0.cmp(&b.0));
        assert_eq!(by_key, by_lex);
        for (basis, key) in by_key {
            assert_eq!(unpack(key, 3, bits), basis);
        }
    }

    #[test]
    fn inner_product_examples() {
        let zz = SparseState::basis_state(2, &[0, 0]).unwrap();
        let zo = SparseState::basis_state(2, &[0, 1]).unwrap();
        assert!((zz.inner_product(&zz).unwrap() - c(1.0, 0.0)).norm() < 1e-12);
        assert!(zz.inner_product(&zo).unwrap().norm() < 1e-12);

        let plus = SparseState::basis_state(2, &[0])
            .unwrap()
            .apply_op(&SingleRegisterOp {
                target: 0,
                kind: OpKind::Dft,
            })
            .unwrap();
        let one = SparseState::basis_state(2, &[1]).unwrap();
        let ip = plus.inner_product(&one).unwrap();
        assert!((ip - c(1.0 / 2.0f64.sqrt(), 0.0)).norm() < 1e-9);

        assert!(matches!(
            zz.inner_product(&SparseState::basis_state(2, &[0]).unwrap()),
            Err(Error::Shape(_))
        ));
    }

    #[test]
    fn pauli_examples() {
        let s = SparseState::basis_state(3, &[0]).unwrap();
        let x = s.apply_op(&SingleRegisterOp::pauli(0, 1, 0)).unwrap();
        assert!((x.amplitude_of(&[1]).unwrap() - c(1.0, 0.0)).norm() < 1e-12);

        let two = SparseState::basis_state(3, &[2]).unwrap();
        let z = two.apply_op(&SingleRegisterOp::pauli(0, 0, 1)).unwrap();
        let w2 = crate::modular::root_of_unity(3, 2).unwrap();
        assert!((z.amplitude_of(&[2]).unwrap() - w2).norm() < 1e-12);

        let h = SparseState::basis_state(2, &[0])
            .unwrap()
            .apply_op(&SingleRegisterOp {
                target: 0,
                kind: OpKind::Dft,
            })
            .unwrap();
        let r = 1.0 / 2.0f64.sqrt();
        assert!((h.amplitude_of(&[0]).unwrap() - c(r, 0.0)).norm() < 1e-9);
        assert!((h.amplitude_of(&[1]).unwrap() - c(r, 0.0)).norm() < 1e-9);
    }

    #[test]
    fn pauli_composition_phase() {
        // pauli(x,z) . pauli(x',z') = omega^(x' z) pauli(x+x', z+z') on one register.
        for n in 2..=5u32 {
            for x in 0..n {
                for z in 0..n {
                    for xp in 0..n {
                        for zp in 0..n {
                            for v in 0..n {
                                let s = SparseState::basis_state(n, &[v]).unwrap();
                                let lhs = s
                                    .apply_op(&SingleRegisterOp::pauli(0, xp, zp))
                                    .unwrap()
                                    .apply_op(&SingleRegisterOp::pauli(0, x, z))
                                    .unwrap();
                                let rhs = s
                                    .apply_op(&SingleRegisterOp::pauli(
                                        0,
                                        add_mod(x, xp, n),
                                        add_mod(z, zp, n),
                                    ))
                                    .unwrap()
                                    .global_phase(((xp as u64 * z as u64) % n as u64) as u32);
                                assert!(lhs.max_term_deviation(&rhs).unwrap() < 1e-12);
                            }
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn x_inverse_roundtrip() {
        for n in 2..=4u32 {
            let s = SparseState::basis_state(n, &[1, 0]).unwrap();
            let back = s
                .apply_op(&SingleRegisterOp::pauli(1, 1, 0))
                .unwrap()
                .apply_op(&SingleRegisterOp::pauli(1, n - 1, 0))
                .unwrap();
            assert!(back.max_term_deviation(&s).unwrap() < 1e-12);
        }
    }

    #[test]
    fn dft_inverse_dft_identity_and_norm() {
        for n in 2..=5u32 {
            let mut s = SparseState::basis_state(n, &[1, n - 1]).unwrap();
            s = s
                .apply_op(&SingleRegisterOp {
                    target: 0,
                    kind: OpKind::Dft,
                })
                .unwrap();
            assert!((s.norm_sqr() - 1.0).abs() < 1e-9);
            s = s
                .apply_op(&SingleRegisterOp {
                    target: 0,
                    kind: OpKind::InverseDft,
                })
                .unwrap();
            assert!((s.norm_sqr() - 1.0).abs() < 1e-9);
            let orig = SparseState::basis_state(n, &[1, n - 1]).unwrap();
            assert!(s.max_term_deviation(&orig).unwrap() < 1e-9);
        }
    }

    #[test]
    fn general_operator_validation() {
        let not_unitary =
            ComplexMatrix::new(2, vec![c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)])
                .unwrap();
        let s = SparseState::basis_state(2, &[0]).unwrap();
        assert!(matches!(
            s.apply_op(&SingleRegisterOp {
                target: 0,
                kind: OpKind::General(not_unitary)
            }),
            Err(Error::Validation(_))
        ));

        let swapish = dft_matrix(2).unwrap();
        let applied = s
            .apply_op(&SingleRegisterOp {
                target: 0,
                kind: OpKind::General(swapish),
            })
            .unwrap();
        assert!((applied.norm_sqr() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn apply_ops_rejects_duplicate_targets() {
        let s = SparseState::basis_state(2, &[0, 0]).unwrap();
        let err = s.apply_ops(&[
            SingleRegisterOp::pauli(1, 1, 0),
            SingleRegisterOp::pauli(1, 0, 1),
        ]);
        assert!(matches!(err, Err(Error::Validation(_))));

        // Empty pattern is the identity.
        let same = s.apply_ops(&[]).unwrap();
        assert!(same.max_term_deviation(&s).unwrap() < 1e-12);
    }

    #[test]
    fn pattern_on_six_registers() {
        let s = SparseState::basis_state(2, &[0; 6]).unwrap();
        let out = s
            .apply_ops(&[
                SingleRegisterOp::pauli(0, 1, 0),
                SingleRegisterOp::pauli(4, 0, 1),
            ])
            .unwrap();
        // Z acts trivially on |0>, X flips the first register.
        assert!((out.amplitude_of(&[1, 0, 0, 0, 0, 0]).unwrap() - c(1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn json_roundtrip_and_float_fidelity() {
        let mut s = SparseState::basis_state(3, &[0, 2]).unwrap();
        s = s.apply_op(&SingleRegisterOp::pauli(1, 1, 2)).unwrap();
        let text = s.to_json();
        let back = SparseState::from_json(&text).unwrap();
        assert!(back.max_term_deviation(&s).unwrap() < 1e-12);

        // Exact -> float -> exact comparison stays within 1e-12 termwise.
        let dense = s
            .apply_op(&SingleRegisterOp {
                target: 0,
                kind: OpKind::Dft,
            })
            .unwrap();
        let text = dense.to_json();
        let back = SparseState::from_json(&text).unwrap();
        assert!(back.max_term_deviation(&dense).unwrap() < 1e-12);
    }

    #[test]
    fn capacity_is_bounded() {
        assert!(matches!(
            SparseState::basis_state(3, &[0; 40]),
            Err(Error::Resource { .. })
        ));
    }

    #[test]
    fn superpose_and_normalize() {
        let a = SparseState::basis_state(2, &[0]).unwrap();
        let b = SparseState::basis_state(2, &[1]).unwrap();
        let s = SparseState::superpose(&[(c(1.0, 0.0), &a), (c(0.0, 1.0), &b)]).unwrap();
        let s = s.normalized().unwrap();
        assert!((s.norm_sqr() - 1.0).abs() < 1e-12);
        let r = 1.0 / 2.0f64.sqrt();
        assert!((s.amplitude_of(&[0]).unwrap() - c(r, 0.0)).norm() < 1e-9);
        assert!((s.amplitude_of(&[1]).unwrap() - c(0.0, r)).norm() < 1e-9);
    }
}
