//! Window-correctability findings on the rate-1/4 family at finite
//! truncation. The zero head of the stream makes telescoping register sums
//! terminate, which hands window-8-compliant error patterns a way to realize
//! logical operations; the analogous interior patterns are harmless. These
//! findings bound what the window-8 sweep can certify on any truncation that
//! starts a stream.

use qconv::classical::ErrorWindowPolicy;
use qconv::codes::{build_code, CodeEntry, ConvEncoder};
use qconv::state::SingleRegisterOp;
use qconv::verify::{kl_matrix, kl_matrix_over_states, ErrorModel, ErrorModelKind};

fn rate_quarter(n: u32) -> ConvEncoder {
    match build_code("eq14", n).unwrap() {
        CodeEntry::Quantum(e) => e,
        _ => unreachable!(),
    }
}

#[test]
fn head_boundary_pair_is_a_logical_operator() {
    // Z on registers 3 and 11 (distance exactly 8, so admitted by the
    // window-8 policy) multiplies each term by omega^(p_0 + q_0 + p_2 + q_1
    // + q_2), which is precisely the phase difference between enc(k) and
    // enc(k + e_0) because q_{-1} = 0 at the stream head. The pair therefore
    // acts as a logical increment on the first message symbol.
    let enc = rate_quarter(2);
    let pair = [
        SingleRegisterOp::pauli(3, 0, 1),
        SingleRegisterOp::pauli(11, 0, 1),
    ];
    for (msg, bumped) in [
        ([0u32, 0], [1u32, 0]),
        ([1, 0], [0, 0]),
        ([0, 1], [1, 1]),
        ([1, 1], [0, 1]),
    ] {
        let moved = enc.encode(&msg, true).unwrap().apply_ops(&pair).unwrap();
        let target = enc.encode(&bumped, true).unwrap();
        assert!(moved.max_term_deviation(&target).unwrap() < 1e-12);
    }

    // One frame into the interior the analogous pair is no longer logical:
    // the q_{i-1} term survives and the overlap vanishes.
    let interior = [
        SingleRegisterOp::pauli(7, 0, 1),
        SingleRegisterOp::pauli(15, 0, 1),
    ];
    let moved = enc
        .encode(&[0, 1, 0], true)
        .unwrap()
        .apply_ops(&interior)
        .unwrap();
    for msg in [[0u32, 0, 0], [0, 0, 1], [1, 1, 0]] {
        let other = enc.encode(&msg, true).unwrap();
        assert!(other.inner_product(&moved).unwrap().norm() < 1e-9);
    }
}

#[test]
fn head_telescopes_defeat_margin_embedding() {
    // A zero margin in front of the message does not help: the A-column sum
    // A_0 + A_1 + A_2 telescopes to p_2 thanks to the zero head, and the six
    // registers of such a combination can be split into two patterns that
    // are individually window-8 compliant. Their product then acts as a
    // logical operator on the embedded message space.
    let n = 2u32;
    let enc = rate_quarter(n);

    // Direct witness: Z on {0, 8, 19} against Z on {4, 15, 23} multiplies
    // each term by omega^(A_0+A_1+A_2+D_3+D_4+D_5), which telescopes to the
    // phase difference of incrementing both embedded symbols.
    let a = [
        SingleRegisterOp::pauli(0, 0, 1),
        SingleRegisterOp::pauli(8, 0, 1),
        SingleRegisterOp::pauli(19, 0, 1),
    ];
    let b = [
        SingleRegisterOp::pauli(4, 0, 1),
        SingleRegisterOp::pauli(15, 0, 1),
        SingleRegisterOp::pauli(23, 0, 1),
    ];
    let embed = |k1: u32, k2: u32| enc.encode(&[0, 0, k1, k2], true).unwrap();
    let lhs = embed(0, 0).apply_ops(&a).unwrap();
    let rhs = embed(1, 1).apply_ops(&b).unwrap();
    assert!((lhs.inner_product(&rhs).unwrap().norm() - 1.0).abs() < 1e-9);

    // The sweep over the embedded code space finds it too.
    let words: Vec<_> = (0..n)
        .flat_map(|k1| (0..n).map(move |k2| (k1, k2)))
        .map(|(k1, k2)| embed(k1, k2))
        .collect();
    let model = ErrorModel {
        kind: ErrorModelKind::General,
        policy: ErrorWindowPolicy::new(8, 1).unwrap(),
    };
    let report = kl_matrix_over_states(&words, &model, 1e-9).unwrap();
    assert!(!report.pass);
    assert!(report.max_offdiagonal > 0.99);

    // Without the margin the plain truncation already fails on the
    // two-register head pair.
    let head = kl_matrix(&enc, 2, true, &model, 1e-9).unwrap();
    assert!(!head.pass);
    assert!(head.max_offdiagonal > 0.99);
    assert!(head
        .violations
        .iter()
        .any(|v| v.pattern_a == "[]" && v.pattern_b == "[(3,0,1), (11,0,1)]"));
}

#[test]
fn tail_frame_shift_is_a_logical_operator() {
    // The last frame's q variable appears only in its own frame (forward
    // occurrences are truncated), so X on registers 14 and 15 shifts the
    // basis support onto itself and multiplies enc(k) by (-1)^(k_1) — the
    // flush tail of depth two still leaves the last frame's phase
    // coefficient reaching the final message symbol. Two window-8-compliant
    // spin patterns anchored on a shared register produce exactly that
    // operator as their relative error.
    let enc = rate_quarter(2);
    let shift = [
        SingleRegisterOp::pauli(14, 1, 0),
        SingleRegisterOp::pauli(15, 1, 0),
    ];
    for (msg, sign) in [
        ([0u32, 0], 1.0),
        ([0, 1], -1.0),
        ([1, 0], 1.0),
        ([1, 1], -1.0),
    ] {
        let encoded = enc.encode(&msg, true).unwrap();
        let moved = encoded.apply_ops(&shift).unwrap();
        let overlap = encoded.inner_product(&moved).unwrap();
        assert!(
            (overlap.re - sign).abs() < 1e-9 && overlap.im.abs() < 1e-9,
            "message {msg:?}: overlap {overlap}"
        );
    }

    // The anchored pair the sweep reports: X{0,14} against X{0,15}.
    let model = ErrorModel {
        kind: ErrorModelKind::SpinFlip,
        policy: ErrorWindowPolicy::new(8, 1).unwrap(),
    };
    let report = kl_matrix(&rate_quarter(2), 2, true, &model, 1e-9).unwrap();
    assert!(!report.pass);
    assert!(report.max_lambda_deviation > 1.9);
    assert!(report
        .violations
        .iter()
        .any(|v| v.pattern_a == "[(0,1,0), (14,1,0)]" && v.pattern_b == "[(0,1,0), (15,1,0)]"));
}

#[test]
fn nearest_codeword_tie_defeats_the_window_four_sweep() {
    // The compliant weight-4 pattern at positions {0,4,8,12} moves the
    // codeword of (1,0,0,0,0) to a word equidistant (4 vs 4) from a second
    // codeword, and the lexicographic tie-break picks the wrong message.
    // The pattern pair view stays sound: the complementary half {1,2,10,13}
    // has two adjacent errors and is not compliant, which is why the
    // distinguishability sweep at the same policy passes.
    use qconv::classical::{window_correctability, ClassicalCode};

    let code = ClassicalCode::eq2(2).unwrap();
    let policy = ErrorWindowPolicy::new(4, 1).unwrap();
    let report = window_correctability(&code, 5, true, &policy).unwrap();
    assert!(!report.pass);
    let ce = report.counterexample.expect("counterexample");
    assert_eq!(ce.message, vec![1, 0, 0, 0, 0]);
    assert_eq!(ce.positions, vec![0, 4, 8, 12]);
    assert_eq!(ce.distance, 4);
    let mut corrupted = code.encode(&ce.message, true).unwrap();
    for (&p, &e) in ce.positions.iter().zip(&ce.added) {
        corrupted[p] = (corrupted[p] + e) % 2;
    }
    let true_word = code.encode(&ce.message, true).unwrap();
    let wrong_word = code.encode(&ce.decoded, true).unwrap();
    let d_true = corrupted
        .iter()
        .zip(&true_word)
        .filter(|(a, b)| a != b)
        .count();
    let d_wrong = corrupted
        .iter()
        .zip(&wrong_word)
        .filter(|(a, b)| a != b)
        .count();
    assert_eq!((d_true, d_wrong), (4, 4));
    assert!(ce.decoded < ce.message);

    // Distinguishability of compliant pattern pairs holds at this policy:
    // the permutation lift passes the same sweep on the quantum side.
    let enc = match build_code("eq8", 2).unwrap() {
        CodeEntry::Quantum(e) => e,
        _ => unreachable!(),
    };
    let model = ErrorModel {
        kind: ErrorModelKind::SpinFlip,
        policy,
    };
    assert!(kl_matrix(&enc, 5, true, &model, 1e-9).unwrap().pass);
}
