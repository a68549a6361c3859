#!/usr/bin/env python3
"""Smoke test for the qconv_py extension module.

Builds the extension if needed, loads it straight from the cargo target
directory, and exercises the main surfaces: registry codes, encoding,
classical encode/decode, code comparison and the verification sweep.

Run from the repository root (or anywhere inside it):

    python3 python/smoke_test.py
"""

import json
import shutil
import subprocess
import sys
import tempfile
from pathlib import Path


def repo_root() -> Path:
    here = Path(__file__).resolve().parent
    for candidate in (here, *here.parents):
        if (candidate / "Cargo.toml").exists() and (candidate / "crates").is_dir():
            return candidate
    raise SystemExit("cannot locate the repository root")


def ensure_extension(root: Path) -> Path:
    lib = None
    for profile in ("release", "debug"):
        candidate = root / "target" / profile / "libqconv_py.so"
        if candidate.exists():
            lib = candidate
            break
    if lib is None:
        print("building qconv-py (cargo build --release -p qconv-py) ...")
        subprocess.run(
            ["cargo", "build", "--release", "-p", "qconv-py"],
            cwd=root,
            check=True,
        )
        lib = root / "target" / "release" / "libqconv_py.so"
    staging = Path(tempfile.mkdtemp(prefix="qconv_py_"))
    shutil.copy2(lib, staging / "qconv_py.so")
    sys.path.insert(0, str(staging))
    return lib


CHECKS = 0


def check(name: str, condition: bool) -> None:
    global CHECKS
    if not condition:
        raise SystemExit(f"FAIL: {name}")
    CHECKS += 1
    print(f"PASS: {name}")


def main() -> None:
    root = repo_root()
    lib = ensure_extension(root)
    import qconv_py as q

    print(f"loaded {lib}")

    # Classical codec.
    word = q.classical_encode([1, 1, 0, 1], 2, flush=False)
    check("classical encode matches the hand-computed word", word == [1, 1, 1, 0, 1, 0, 0, 0])
    corrupted = list(word)
    corrupted[2] ^= 1
    message, distance = q.classical_decode(corrupted, 4, 2, flush=False)
    check("single flip decodes back", message == [1, 1, 0, 1] and distance == 1)
    ok, patterns = q.classical_window_check(3, 2, 4, 1)
    check(f"window-4 sweep passes at L=3 ({patterns} patterns)", ok)

    # Quantum encoders.
    eq8 = q.code("eq8", 2)
    check("eq8 metadata", eq8.frame_out == 2 and eq8.memory == 2 and eq8.family == "spin_flip")
    state = eq8.encode([1, 0], flush=False)
    check("eq8 encodes a basis permutation", state.term_count == 1)
    ((basis, amp),) = state.terms()
    check("eq8 codeword of (1,0)", basis == [1, 1, 0, 1] and abs(amp - 1) < 1e-12)

    eq14 = q.code("eq14", 2)
    one = eq14.encode([0], flush=False)
    check("rate-1/4 codeword has four terms", one.term_count == 4)
    check(
        "rate-1/4 amplitudes are +1/2",
        all(abs(a - 0.5) < 1e-12 for _, a in one.terms()),
    )
    check("encoded states are normalized", abs(one.norm() - 1.0) < 1e-9)

    doc = json.loads(one.to_json())
    check(
        "state file carries n, registers and sorted terms",
        doc["n"] == 2 and doc["registers"] == 4 and len(doc["terms"]) == 4,
    )

    # Logical increment on the rate-1/4 layout.
    encoded = eq14.encode([1, 0], flush=True)
    shifted = eq14.increment(encoded, 0)
    target = eq14.encode([0, 0], flush=True)
    check(
        "logical increment maps enc(1,0) to enc(0,0)",
        abs(abs(target.inner_product(shifted)) - 1.0) < 1e-9,
    )

    # Constructor coherence.
    check("paste:eq8 equals eq14", q.compare("paste:eq8", "eq14", 2, 2))
    check("lift:eq2-classical equals eq14", q.compare("lift:eq2-classical", "eq14", 2, 2))
    check("eq8 differs from eq14", not q.compare("eq8", "eq14", 2, 2))

    # Verification sweeps.
    report = q.verify("eq8", 2, 2, "spin", 4, 1)
    check(
        f"spin flips, one per four registers ({report.pair_count} pairs)",
        report.passed and report.max_offdiagonal < 1e-9,
    )
    report = q.verify("eq8", 2, 2, "phase", 4, 1)
    check(
        "permutation code exposes phase errors",
        not report.passed and report.violation_count > 0,
    )

    print(f"\nall {CHECKS} smoke checks passed")


if __name__ == "__main__":
    main()
