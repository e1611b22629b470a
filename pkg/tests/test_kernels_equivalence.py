"""Compiled core and pure-Python fallback must agree bit for bit.

The battery below exercises every kernel entry point on a deterministic
mix of inputs, serializes the raw float64 output bytes into one sha256,
and compares digests across backends: in process against the fallback
module directly, and in a CAPINT_FORCE_FALLBACK=1 subprocess against
whatever backend this process selected.
"""

import hashlib
import os
import subprocess
import sys

import numpy as np

from capint import _kernels
from capint.content import level_side_powers, omega


def battery():
    """Run every kernel through _kernels (the selected backend)."""
    return _run_battery(_kernels)


def _run_battery(mod):
    rng = np.random.default_rng(20240817)
    out = []

    # dyadic-cover DP, n=1 and n=2
    for beta, n, L, m in ((0.3, 1, 4, 30), (0.8, 1, 4, 30), (1.2, 2, 3, 20)):
        radix = 1 << n
        cells = radix**L
        occ = (rng.random((m, cells)) < 0.4).astype(np.float64)
        occ[0] = 0.0
        occ[1] = 1.0
        lpow = level_side_powers(beta, 0, L)
        out.append(("content_%g_%d" % (beta, n), np.asarray(mod.content_batch(occ, lpow, radix))))
        tabs = mod.content_root_and_tables(occ[2], lpow, radix)
        out.append(("tables_%g_%d" % (beta, n), np.concatenate([np.asarray(t) for t in tabs])))

    # layer-cake integral, dyadic maximal, weak-type stats (n=1, L=5)
    lpow = level_side_powers(0.5, 0, 5)
    vals = rng.choice([0.0, 1.0, 2.0, 4.0, 8.0], size=(25, 32))
    vals[5] = rng.random(32)
    vals[6] = 0.0
    out.append(("integral", np.asarray(mod.integral_batch(vals, lpow, 2))))
    out.append(("dymax", np.asarray(mod.dyadic_maximal_batch(vals, lpow, 2))))
    out.append(("dyweak", np.asarray(mod.dyweak_stats_batch(vals, lpow, 2))))

    # ball kernels on the line, L=4
    h = 2.0**-4
    for beta in (0.5, 0.9):
        om = omega(beta)
        bc = [
            mod.ball_content_1d((rng.random(16) < p).astype(np.float64), beta, h, om)
            for p in (0.2, 0.5, 0.8)
        ]
        out.append(("ballcontent_%g" % beta, np.asarray(bc)))
        f = rng.choice([0.0, 1.0, 2.0, 4.0], size=16)
        out.append(("ballmax_%g" % beta, np.asarray(mod.ball_maximal_1d(f, beta, h, om))))
        out.append(("ballmaxu_%g" % beta, np.asarray(mod.ball_maximal_1d_uncentered(f, beta, h, om))))
    return out


def digest(results):
    hasher = hashlib.sha256()
    for label, arr in results:
        arr = np.ascontiguousarray(arr, dtype=np.float64)
        hasher.update(label.encode())
        hasher.update(repr(arr.shape).encode())
        hasher.update(arr.tobytes())
    return hasher.hexdigest()


def test_active_backend_is_known():
    assert _kernels.active_backend() in ("compiled", "fallback")


def test_fallback_module_always_importable():
    assert _kernels.fallback.backend_name() == "fallback"


def test_backends_bit_identical_in_process():
    a = battery()
    b = _run_battery(_kernels.fallback)
    assert len(a) == len(b)
    for (la, xa), (lb, xb) in zip(a, b):
        assert la == lb
        assert xa.shape == xb.shape
        assert xa.tobytes() == xb.tobytes(), "kernel %s differs between backends" % la


def test_forced_fallback_subprocess_matches():
    env = dict(os.environ, CAPINT_FORCE_FALLBACK="1")
    proc = subprocess.run(
        [sys.executable, os.path.abspath(__file__)],
        env=env,
        capture_output=True,
        text=True,
        check=True,
    )
    backend, fallback_digest = proc.stdout.split()
    assert backend == "fallback"
    assert fallback_digest == digest(battery())


if __name__ == "__main__":
    print(_kernels.active_backend(), digest(battery()))
