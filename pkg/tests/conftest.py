"""Shared independent oracles and fixtures.

The oracles here deliberately avoid the package's vectorized code paths:
objectives are summed term by term, spin enumerations go through
itertools.product, and gradients come from central finite differences.
"""
import itertools
import sys
from pathlib import Path

import numpy as np
import pytest

FAKE_SAMPLER = Path(__file__).parent / "fake_sampler.py"


def fake_sampler_cmd(mode: str) -> str:
    return f"{sys.executable} {FAKE_SAMPLER} --mode {mode}"


def objective_oracle(Q, c, x) -> float:
    """Term-by-term 0.5 x^T Q x + c^T x with plain Python floats."""
    n = len(x)
    total = 0.0
    for i in range(n):
        for j in range(n):
            total += 0.5 * float(Q[i][j]) * float(x[i]) * float(x[j])
        total += float(c[i]) * float(x[i])
    return total


def ising_energy_oracle(couplings, h, offset, s) -> float:
    total = float(offset)
    for (i, j), v in couplings.items():
        total += float(v) * float(s[i]) * float(s[j])
    for i in range(len(h)):
        total += float(h[i]) * float(s[i])
    return total


def all_spin_vectors(n: int) -> np.ndarray:
    """All of {-1,+1}^n in lexicographic order, -1 before +1, via itertools."""
    return np.array(list(itertools.product((-1.0, 1.0), repeat=n)))


def enumerate_ground_state(couplings, h, offset=0.0):
    """Independent exhaustive Ising minimizer (first minimum wins ties)."""
    best_e, best_s = None, None
    for s in itertools.product((-1.0, 1.0), repeat=len(h)):
        e = ising_energy_oracle(couplings, h, offset, s)
        if best_e is None or e < best_e:
            best_e, best_s = e, s
    return np.array(best_s), best_e


def best_corner_oracle(Q, c):
    """Brute-force best corner of the box by direct objective evaluation."""
    best_f, best_x = None, None
    for x in itertools.product((-1.0, 1.0), repeat=len(c)):
        f = objective_oracle(Q, c, x)
        if best_f is None or f < best_f:
            best_f, best_x = f, x
    return np.array(best_x), best_f


def fd_gradient(fn, x, h=1e-6) -> np.ndarray:
    """Central finite differences of a scalar function."""
    x = np.asarray(x, dtype=float)
    grad = np.zeros_like(x)
    for i in range(x.size):
        step = np.zeros_like(x)
        step[i] = h
        grad[i] = (fn(x + step) - fn(x - step)) / (2.0 * h)
    return grad


def random_model(rng, n):
    """Random dense Ising model as raw (couplings, h, offset) pieces."""
    couplings = {
        (i, j): float(rng.uniform(-1.0, 1.0))
        for i in range(n)
        for j in range(i + 1, n)
    }
    h = rng.uniform(-1.0, 1.0, size=n)
    offset = float(rng.uniform(-1.0, 1.0))
    return couplings, h, offset


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
