//! Rate-1/2 classical convolutional codes over Z_N with exhaustive decoding
//! and window-constrained correctability analysis.
//!
//! The default code has tap streams b = (1, 0, 1) and c = (1, 1, 1):
//! b_i = a_i + a_{i-2}, c_i = a_i + a_{i-1} + a_{i-2} mod N, with the
//! convention a_m = 0 for m <= 0. Output symbols interleave as
//! (b_1, c_1, b_2, c_2, ...).

use crate::error::{Error, Result};
use crate::modular::{check_modulus, check_symbol, ToeplitzMask};

/// Two-stream convolutional code over Z_N.
#[derive(Debug, Clone)]
pub struct ClassicalCode {
    n: u32,
    taps_b: ToeplitzMask,
    taps_c: ToeplitzMask,
}

impl ClassicalCode {
    pub fn new(n: u32, taps_b: ToeplitzMask, taps_c: ToeplitzMask) -> Result<Self> {
        check_modulus(n)?;
        Ok(Self { n, taps_b, taps_c })
    }

    /// The default instance: taps (1, 0, 1) and (1, 1, 1).
    pub fn eq2(n: u32) -> Result<Self> {
        Self::new(
            n,
            ToeplitzMask::new(vec![1, 0, 1])?,
            ToeplitzMask::new(vec![1, 1, 1])?,
        )
    }

    pub fn modulus(&self) -> u32 {
        self.n
    }

    pub fn taps_b(&self) -> &ToeplitzMask {
        &self.taps_b
    }

    pub fn taps_c(&self) -> &ToeplitzMask {
        &self.taps_c
    }

    /// Largest lookback over both streams.
    pub fn memory(&self) -> usize {
        self.taps_b.memory().max(self.taps_c.memory())
    }

    /// Codeword length for a message of length `len`.
    pub fn output_len(&self, len: usize, flush: bool) -> usize {
        2 * (len + if flush { self.memory() } else { 0 })
    }

    /// Encodes a message, optionally appending `memory` zero symbols first so
    /// terminal symbols get full protection.
    pub fn encode(&self, message: &[u32], flush: bool) -> Result<Vec<u32>> {
        for &a in message {
            check_symbol(a, self.n)?;
        }
        let frames = message.len() + if flush { self.memory() } else { 0 };
        let symbol = |i: isize| -> u64 {
            if i >= 1 && (i as usize) <= message.len() {
                message[i as usize - 1] as u64
            } else {
                0
            }
        };
        let mut out = Vec::with_capacity(2 * frames);
        for i in 1..=frames as isize {
            let mut b = 0u64;
            let mut c = 0u64;
            for d in 0..=self.memory() as isize {
                b += self.taps_b.tap(d as usize, self.n) as u64 * symbol(i - d);
                c += self.taps_c.tap(d as usize, self.n) as u64 * symbol(i - d);
            }
            out.push((b % self.n as u64) as u32);
            out.push((c % self.n as u64) as u32);
        }
        Ok(out)
    }

    /// Minimum-Hamming-distance decoding by full message enumeration; ties
    /// break toward the lexicographically smallest message.
    pub fn decode_brute_force(
        &self,
        received: &[u32],
        len: usize,
        flush: bool,
    ) -> Result<(Vec<u32>, usize)> {
        let expected = self.output_len(len, flush);
        if received.len() != expected {
            return Err(Error::Shape(format!(
                "received word of length {} where message length {} implies {}",
                received.len(),
                len,
                expected
            )));
        }
        for &r in received {
            check_symbol(r, self.n)?;
        }
        let mut best: Option<(Vec<u32>, usize)> = None;
        let mut message = vec![0u32; len];
        loop {
            let word = self.encode(&message, flush)?;
            let dist = word.iter().zip(received).filter(|(a, b)| a != b).count();
            match &best {
                Some((_, d)) if *d <= dist => {}
                _ => best = Some((message.clone(), dist)),
            }
            if !advance_symbols(&mut message, self.n) {
                break;
            }
        }
        Ok(best.expect("at least the all-zero message"))
    }
}

/// Advances a symbol vector through Z_N^len in lexicographic order; false
/// once the space is exhausted.
pub(crate) fn advance_symbols(message: &mut [u32], n: u32) -> bool {
    for v in message.iter_mut().rev() {
        *v += 1;
        if *v < n {
            return true;
        }
        *v = 0;
    }
    false
}

/// Window policy: every `window` consecutive positions carry at most
/// `max_errors` errors.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ErrorWindowPolicy {
    pub window: usize,
    pub max_errors: usize,
}

impl ErrorWindowPolicy {
    pub fn new(window: usize, max_errors: usize) -> Result<Self> {
        if window == 0 {
            return Err(Error::Validation("window must be at least 1".into()));
        }
        Ok(Self { window, max_errors })
    }

    /// True when sorted `positions` respect the policy. It suffices to check
    /// the window ending at each element.
    pub fn admits(&self, positions: &[usize]) -> bool {
        for (i, &p) in positions.iter().enumerate() {
            let lo = p.saturating_sub(self.window - 1);
            let inside = positions[..=i].iter().filter(|&&q| q >= lo).count();
            if inside > self.max_errors {
                return false;
            }
        }
        true
    }
}

/// All subsets of 0..length satisfying the policy, the empty set included,
/// in lexicographic order of the sorted position sequences.
pub fn enumerate_positions(length: usize, policy: &ErrorWindowPolicy) -> Vec<Vec<usize>> {
    let mut out = vec![vec![]];
    let mut stack: Vec<Vec<usize>> = (0..length).rev().map(|p| vec![p]).collect();
    // Depth-first extension keeps the output lexicographic.
    while let Some(set) = stack.pop() {
        if !policy.admits(&set) {
            continue;
        }
        for next in ((set[set.len() - 1] + 1)..length).rev() {
            let mut bigger = set.clone();
            bigger.push(next);
            stack.push(bigger);
        }
        out.push(set);
    }
    out
}

/// Outcome of the exhaustive window-correctability sweep.
#[derive(Debug, Clone)]
pub struct WindowReport {
    pub pass: bool,
    pub policy: ErrorWindowPolicy,
    pub message_len: usize,
    pub flush: bool,
    pub messages_checked: usize,
    pub patterns_checked: usize,
    pub counterexample: Option<WindowCounterexample>,
}

#[derive(Debug, Clone)]
pub struct WindowCounterexample {
    pub message: Vec<u32>,
    pub positions: Vec<usize>,
    pub added: Vec<u32>,
    pub decoded: Vec<u32>,
    pub distance: usize,
}

/// Checks that every message survives every policy-compliant additive error
/// pattern (each errored position takes every nonzero symbol value), stopping
/// at the first counterexample in enumeration order.
pub fn window_correctability(
    code: &ClassicalCode,
    len: usize,
    flush: bool,
    policy: &ErrorWindowPolicy,
) -> Result<WindowReport> {
    let n = code.modulus();
    let out_len = code.output_len(len, flush);
    let position_sets = enumerate_positions(out_len, policy);
    let mut messages_checked = 0usize;
    let mut patterns_checked = 0usize;

    let mut message = vec![0u32; len];
    loop {
        messages_checked += 1;
        let word = code.encode(&message, flush)?;
        for positions in &position_sets {
            if positions.is_empty() {
                continue;
            }
            let mut added = vec![1u32; positions.len()];
            loop {
                patterns_checked += 1;
                let mut corrupted = word.clone();
                for (&p, &e) in positions.iter().zip(&added) {
                    corrupted[p] = (corrupted[p] + e) % n;
                }
                let (decoded, distance) = code.decode_brute_force(&corrupted, len, flush)?;
                if decoded != message {
                    return Ok(WindowReport {
                        pass: false,
                        policy: *policy,
                        message_len: len,
                        flush,
                        messages_checked,
                        patterns_checked,
                        counterexample: Some(WindowCounterexample {
                            message,
                            positions: positions.clone(),
                            added,
                            decoded,
                            distance,
                        }),
                    });
                }
                if !next_nonzero(&mut added, n) {
                    break;
                }
            }
        }
        if !advance_symbols(&mut message, n) {
            break;
        }
    }
    Ok(WindowReport {
        pass: true,
        policy: *policy,
        message_len: len,
        flush,
        messages_checked,
        patterns_checked,
        counterexample: None,
    })
}

/// Odometer over nonzero symbol values 1..n per slot.
pub(crate) fn next_nonzero(values: &mut [u32], n: u32) -> bool {
    for v in values.iter_mut().rev() {
        *v += 1;
        if *v < n {
            return true;
        }
        *v = 1;
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn encode_examples() {
        let code = ClassicalCode::eq2(2).unwrap();
        assert_eq!(code.encode(&[0, 0], false).unwrap(), vec![0, 0, 0, 0]);
        assert_eq!(
            code.encode(&[1, 1, 0, 1], false).unwrap(),
            vec![1, 1, 1, 0, 1, 0, 0, 0]
        );
        // Flushed single symbol: total weight equals the free distance.
        let flushed = code.encode(&[1], true).unwrap();
        assert_eq!(flushed, vec![1, 1, 0, 1, 1, 1]);
        assert_eq!(flushed.iter().filter(|&&v| v != 0).count(), 5);
    }

    #[test]
    fn encode_rejects_bad_symbols() {
        let code = ClassicalCode::eq2(2).unwrap();
        assert!(matches!(
            code.encode(&[0, 2], false),
            Err(Error::SymbolOutOfRange { .. })
        ));
    }

    #[test]
    fn encoding_is_linear() {
        for n in [2u32, 3] {
            let code = ClassicalCode::eq2(n).unwrap();
            for len in 1..=4usize {
                let mut m1 = vec![0u32; len];
                loop {
                    let mut m2 = vec![0u32; len];
                    loop {
                        let sum: Vec<u32> = m1.iter().zip(&m2).map(|(a, b)| (a + b) % n).collect();
                        let w1 = code.encode(&m1, true).unwrap();
                        let w2 = code.encode(&m2, true).unwrap();
                        let ws = code.encode(&sum, true).unwrap();
                        let combined: Vec<u32> =
                            w1.iter().zip(&w2).map(|(a, b)| (a + b) % n).collect();
                        assert_eq!(ws, combined);
                        if !advance_symbols(&mut m2, n) {
                            break;
                        }
                    }
                    if !advance_symbols(&mut m1, n) {
                        break;
                    }
                }
            }
        }
    }

    #[test]
    fn flushed_single_symbol_weight_at_least_five() {
        let code = ClassicalCode::eq2(2).unwrap();
        let word = code.encode(&[1], true).unwrap();
        assert!(word.iter().filter(|&&v| v != 0).count() >= 5);
    }

    #[test]
    fn decode_roundtrip_all_messages() {
        for (n, max_len) in [(2u32, 6usize), (3, 4)] {
            let code = ClassicalCode::eq2(n).unwrap();
            for len in 1..=max_len {
                let mut message = vec![0u32; len];
                loop {
                    let word = code.encode(&message, true).unwrap();
                    let (decoded, dist) = code.decode_brute_force(&word, len, true).unwrap();
                    assert_eq!(decoded, message);
                    assert_eq!(dist, 0);
                    if !advance_symbols(&mut message, n) {
                        break;
                    }
                }
            }
        }
    }

    #[test]
    fn decode_single_flip() {
        let code = ClassicalCode::eq2(2).unwrap();
        let mut word = code.encode(&[1, 1, 0, 1], false).unwrap();
        word[2] ^= 1;
        let (decoded, dist) = code.decode_brute_force(&word, 4, false).unwrap();
        assert_eq!(decoded, vec![1, 1, 0, 1]);
        assert_eq!(dist, 1);

        let zeros = vec![0u32; 8];
        let (decoded, dist) = code.decode_brute_force(&zeros, 4, false).unwrap();
        assert_eq!(decoded, vec![0, 0, 0, 0]);
        assert_eq!(dist, 0);
    }

    #[test]
    fn decode_length_mismatch() {
        let code = ClassicalCode::eq2(2).unwrap();
        assert!(matches!(
            code.decode_brute_force(&[0, 0, 0], 4, false),
            Err(Error::Shape(_))
        ));
    }

    #[test]
    fn position_enumeration_counts() {
        let p41 = ErrorWindowPolicy::new(4, 1).unwrap();
        let sets = enumerate_positions(4, &p41);
        assert_eq!(sets.len(), 5);
        assert_eq!(sets[0], Vec::<usize>::new());

        let p81 = ErrorWindowPolicy::new(8, 1).unwrap();
        let sets = enumerate_positions(9, &p81);
        assert_eq!(sets.len(), 11);
        assert!(sets.contains(&vec![0, 8]));

        let p_t0 = ErrorWindowPolicy::new(3, 0).unwrap();
        assert_eq!(enumerate_positions(7, &p_t0), vec![Vec::<usize>::new()]);

        // One error per full-length window: length + 1 subsets.
        for r in 1..=9usize {
            let policy = ErrorWindowPolicy::new(r, 1).unwrap();
            assert_eq!(enumerate_positions(r, &policy).len(), r + 1);
        }
    }

    #[test]
    fn position_enumeration_is_lexicographic() {
        let policy = ErrorWindowPolicy::new(2, 1).unwrap();
        let sets = enumerate_positions(4, &policy);
        let mut sorted = sets.clone();
        sorted.sort();
        assert_eq!(sets, sorted);
    }

    #[test]
    fn window_correctability_small_cases() {
        let code = ClassicalCode::eq2(2).unwrap();
        // One error per four consecutive positions is correctable.
        let report =
            window_correctability(&code, 3, true, &ErrorWindowPolicy::new(4, 1).unwrap()).unwrap();
        assert!(report.pass, "counterexample: {:?}", report.counterexample);

        // No errors at all is trivially correctable.
        let report =
            window_correctability(&code, 3, true, &ErrorWindowPolicy::new(2, 0).unwrap()).unwrap();
        assert!(report.pass);
    }
}
