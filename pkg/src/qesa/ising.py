"""Ising models and interchangeable ground-state samplers.

The canonical energy is E(s) = sum_{i<j} J_ij s_i s_j + sum_i h_i s_i + offset
over spins s_i in {-1, +1}. The offset carries constants dropped when a
quadratic objective is reduced to this form, so sampler energies stay
directly comparable to objective deltas.

Backends:
  * ``solve_exact``       exhaustive enumeration (hard size cap),
  * ``solve_classical_sa`` restarted single-spin-flip Metropolis annealing,
  * ``solve_random``       best of uniform random configurations,
  * ``solve_external``     one-shot JSON-lines subprocess adapter.

Every backend recomputes the energy of its winning configuration with the
local ``energy`` function; reported energies are never trusted.
"""
from __future__ import annotations

import json
import os
import shlex
import subprocess
import time
from dataclasses import dataclass, replace
from functools import cached_property, lru_cache
from typing import Callable, Optional

import numpy as np

ENV_EXTERNAL_SAMPLER = "QESA_EXTERNAL_SAMPLER"
EXACT_SIZE_CAP = 24

# classical annealer temperature window, relative to the largest |J|, |h|
SA_T_HIGH_FACTOR = 10.0
SA_T_LOW_FACTOR = 0.01


class SamplerError(RuntimeError):
    """Base class for sampler backend failures."""


class ExternalSamplerError(SamplerError):
    """Base class for failures of the external subprocess backend."""


class SamplerLaunchError(ExternalSamplerError):
    """The external sampler process could not be started."""


class SamplerTimeoutError(ExternalSamplerError):
    """The external sampler did not answer within the configured timeout."""


class SamplerProtocolError(ExternalSamplerError):
    """The external sampler produced a malformed or failed response."""


class InvalidSpinError(ExternalSamplerError):
    """The external sampler returned values outside {-1, +1}."""


@dataclass(frozen=True, eq=False)
class IsingModel:
    """Pairwise couplings J (upper-triangular keys i<j), fields h, constant offset."""

    n: int
    J: dict
    h: np.ndarray
    offset: float = 0.0

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 1:
            raise ValueError(f"n must be a positive integer, got {self.n!r}")
        object.__setattr__(self, "n", int(self.n))
        h = np.array(self.h, dtype=float)
        if h.shape != (self.n,):
            raise ValueError(f"h has shape {h.shape}, expected ({self.n},)")
        h.setflags(write=False)
        object.__setattr__(self, "h", h)
        couplings = {}
        for key, value in self.J.items():
            i, j = key
            i, j = int(i), int(j)
            if not (0 <= i < j < self.n):
                raise ValueError(f"coupling key {key!r} violates 0 <= i < j < n={self.n}")
            couplings[(i, j)] = float(value)
        object.__setattr__(self, "J", couplings)
        object.__setattr__(self, "offset", float(self.offset))

    @cached_property
    def dense_couplings(self) -> np.ndarray:
        """Symmetric zero-diagonal matrix W with W[i,j] = W[j,i] = J_ij."""
        w = np.zeros((self.n, self.n))
        for (i, j), value in self.J.items():
            w[i, j] = value
            w[j, i] = value
        w.setflags(write=False)
        return w

    def max_abs_coefficient(self) -> float:
        j_max = max((abs(v) for v in self.J.values()), default=0.0)
        h_max = float(np.max(np.abs(self.h))) if self.n else 0.0
        return max(j_max, h_max)


@dataclass(frozen=True)
class SampleResult:
    """Best configuration found by a sampler, with locally recomputed energy."""

    best: np.ndarray
    best_energy: float
    num_samples: int
    sampler_time: float


@dataclass(frozen=True)
class SamplerConfig:
    """Shared sampler knobs.

    ``inner_sweeps`` only applies to the classical annealer; it is this
    package's stand-in for hardware anneal duration, which has no classical
    equivalent. ``command`` and ``timeout_s`` only apply to the external
    backend.
    """

    num_samples: int = 1000
    inner_sweeps: int = 100
    seed: object = None
    command: Optional[str] = None
    timeout_s: float = 60.0

    def __post_init__(self):
        if self.num_samples < 1:
            raise ValueError(f"num_samples must be >= 1, got {self.num_samples}")
        if self.inner_sweeps < 1:
            raise ValueError(f"inner_sweeps must be >= 1, got {self.inner_sweeps}")


def energy(model: IsingModel, spins) -> float:
    """Evaluate E(s) = sum_{i<j} J_ij s_i s_j + h.s + offset."""
    s = np.asarray(spins, dtype=float)
    if s.shape != (model.n,):
        raise ValueError(f"spin vector has shape {s.shape}, expected ({model.n},)")
    w = model.dense_couplings
    return float(0.5 * (s @ (w @ s)) + model.h @ s + model.offset)


def _batch_energies(model: IsingModel, spins: np.ndarray) -> np.ndarray:
    w = model.dense_couplings
    return 0.5 * np.einsum("ri,ri->r", spins @ w, spins) + spins @ model.h + model.offset


@lru_cache(maxsize=8)
def _spin_table(n: int) -> np.ndarray:
    """All 2^n spin vectors in lexicographic order (-1 before +1). n <= 16 only."""
    idx = np.arange(1 << n, dtype=np.uint32)[:, None]
    shifts = np.arange(n - 1, -1, -1, dtype=np.uint32)[None, :]
    table = np.where((idx >> shifts) & 1 == 1, 1.0, -1.0)
    table.setflags(write=False)
    return table


def _spin_chunks(n: int, chunk_bits: int = 16):
    """Yield blocks of spin vectors covering {-1,+1}^n in lexicographic order."""
    if n <= chunk_bits:
        yield _spin_table(n)
        return
    total = 1 << n
    chunk = 1 << chunk_bits
    shifts = np.arange(n - 1, -1, -1, dtype=np.uint64)[None, :]
    for start in range(0, total, chunk):
        idx = np.arange(start, min(start + chunk, total), dtype=np.uint64)[:, None]
        yield np.where((idx >> shifts) & 1 == 1, 1.0, -1.0)


def solve_exact(model: IsingModel, size_cap: int = EXACT_SIZE_CAP) -> SampleResult:
    """Exact ground state by full enumeration.

    Ties are broken toward the lexicographically smallest spin vector with
    -1 ordered before +1. Refuses models larger than ``size_cap`` spins to
    prevent accidental exponential blow-ups.
    """
    if model.n > size_cap:
        raise ValueError(
            f"solve_exact enumerates 2^n states; n={model.n} exceeds the cap of "
            f"{size_cap} (raise size_cap explicitly if you really mean it)"
        )
    t0 = time.perf_counter()
    best_e = np.inf
    best_s = None
    for block in _spin_chunks(model.n):
        energies = _batch_energies(model, block)
        i = int(np.argmin(energies))
        if energies[i] < best_e:
            best_e = float(energies[i])
            best_s = block[i].copy()
    return SampleResult(
        best=best_s,
        best_energy=energy(model, best_s),
        num_samples=1 << model.n,
        sampler_time=time.perf_counter() - t0,
    )


def solve_classical_sa(model: IsingModel, cfg: SamplerConfig) -> SampleResult:
    """Restarted single-spin-flip Metropolis annealing.

    Runs ``num_samples`` independent restarts (vectorized across restarts),
    each doing ``inner_sweeps`` full sweeps under a geometric temperature
    decay from 10x to 0.01x the largest coefficient magnitude, and returns
    the best final configuration. Deterministic given ``cfg.seed``.
    """
    t0 = time.perf_counter()
    rng = np.random.default_rng(cfg.seed)
    n, restarts = model.n, cfg.num_samples
    spins = rng.integers(0, 2, size=(restarts, n)).astype(float) * 2.0 - 1.0
    scale = model.max_abs_coefficient()
    if scale > 0.0:
        w = model.dense_couplings
        h = model.h
        t_high = SA_T_HIGH_FACTOR * scale
        t_low = SA_T_LOW_FACTOR * scale
        sweeps = cfg.inner_sweeps
        ratio = (t_low / t_high) ** (1.0 / (sweeps - 1)) if sweeps > 1 else 1.0
        for sweep in range(sweeps):
            temp = t_high * ratio**sweep
            for i in range(n):
                local = spins @ w[:, i] + h[i]
                delta = -2.0 * spins[:, i] * local
                u = rng.random(restarts)
                accept = (delta <= 0.0) | (u < np.exp(-np.maximum(delta, 0.0) / temp))
                spins[accept, i] = -spins[accept, i]
    energies = _batch_energies(model, spins)
    b = int(np.argmin(energies))
    best = spins[b].copy()
    return SampleResult(
        best=best,
        best_energy=energy(model, best),
        num_samples=restarts,
        sampler_time=time.perf_counter() - t0,
    )


def solve_random(model: IsingModel, cfg: SamplerConfig) -> SampleResult:
    """Best of ``num_samples`` uniformly random spin vectors."""
    t0 = time.perf_counter()
    rng = np.random.default_rng(cfg.seed)
    spins = rng.integers(0, 2, size=(cfg.num_samples, model.n)).astype(float) * 2.0 - 1.0
    energies = _batch_energies(model, spins)
    b = int(np.argmin(energies))
    best = spins[b].copy()
    return SampleResult(
        best=best,
        best_energy=energy(model, best),
        num_samples=cfg.num_samples,
        sampler_time=time.perf_counter() - t0,
    )


def model_to_request(model: IsingModel, num_samples: int) -> dict:
    """Wire-format request for the external sampler protocol."""
    return {
        "n": model.n,
        "h": model.h.tolist(),
        "J": [[i, j, value] for (i, j), value in sorted(model.J.items())],
        "num_samples": int(num_samples),
    }


def model_from_request(doc: dict) -> IsingModel:
    """Rebuild a model from a wire-format request (used by loop-back doubles)."""
    couplings = {(int(i), int(j)): float(v) for i, j, v in doc["J"]}
    return IsingModel(n=int(doc["n"]), J=couplings, h=np.asarray(doc["h"], dtype=float))


def solve_external(model: IsingModel, cfg: SamplerConfig) -> SampleResult:
    """Delegate sampling to a subprocess speaking the JSON-lines protocol.

    One request object is written to the child's stdin:
        {"n": ..., "h": [...], "J": [[i, j, value], ...], "num_samples": ...}
    and one response object is expected on stdout:
        {"samples": [[s_1, ..., s_n], ...]}
    Returned spin vectors are validated (every entry exactly -1 or +1) and
    their energies recomputed locally; the best sample wins.

    The command comes from ``cfg.command`` or the QESA_EXTERNAL_SAMPLER
    environment variable. Failure modes map to distinct exceptions:
    SamplerLaunchError, SamplerTimeoutError, SamplerProtocolError,
    InvalidSpinError.
    """
    command = cfg.command or os.environ.get(ENV_EXTERNAL_SAMPLER)
    if not command:
        raise ValueError(
            "external sampler command not configured: set SamplerConfig.command "
            f"or the {ENV_EXTERNAL_SAMPLER} environment variable"
        )
    request = json.dumps(model_to_request(model, cfg.num_samples)) + "\n"
    argv = shlex.split(command)
    t0 = time.perf_counter()
    try:
        proc = subprocess.run(
            argv,
            input=request,
            capture_output=True,
            text=True,
            timeout=cfg.timeout_s,
        )
    except OSError as exc:
        raise SamplerLaunchError(f"could not launch {argv[0]!r}: {exc}") from exc
    except subprocess.TimeoutExpired as exc:
        raise SamplerTimeoutError(
            f"external sampler {argv[0]!r} exceeded {cfg.timeout_s} s"
        ) from exc
    elapsed = time.perf_counter() - t0
    if proc.returncode != 0:
        raise SamplerProtocolError(
            f"external sampler exited with status {proc.returncode}: "
            f"{proc.stderr.strip()[:500]}"
        )
    line = next((ln for ln in proc.stdout.splitlines() if ln.strip()), None)
    if line is None:
        raise SamplerProtocolError("external sampler produced no output")
    try:
        response = json.loads(line)
    except json.JSONDecodeError as exc:
        raise SamplerProtocolError(f"response is not valid JSON: {exc}") from exc
    if not isinstance(response, dict) or "samples" not in response:
        raise SamplerProtocolError("response must be an object with a 'samples' field")
    samples = response["samples"]
    if not isinstance(samples, list) or not samples:
        raise SamplerProtocolError("response contains no samples")
    best = None
    best_e = np.inf
    for k, sample in enumerate(samples):
        try:
            s = np.asarray(sample, dtype=float)
        except (TypeError, ValueError) as exc:
            raise SamplerProtocolError(f"sample {k} is not numeric: {exc}") from exc
        if s.shape != (model.n,):
            raise SamplerProtocolError(
                f"sample {k} has length {s.size}, expected {model.n}"
            )
        if not np.all(np.isin(s, (-1.0, 1.0))):
            bad = s[~np.isin(s, (-1.0, 1.0))][0]
            raise InvalidSpinError(f"sample {k} contains spin value {bad!r}")
        e = energy(model, s)
        if e < best_e:
            best_e = e
            best = s
    return SampleResult(
        best=best, best_energy=best_e, num_samples=len(samples), sampler_time=elapsed
    )


def _as_seed_sequence(seed) -> np.random.SeedSequence:
    if isinstance(seed, np.random.SeedSequence):
        return seed
    return np.random.SeedSequence(seed)


class _ReseededSampler:
    """Give a stochastic backend a fresh deterministic child seed on every call.

    Repeated calls within one solve see different streams, while the whole
    sequence is reproducible from the configured seed.
    """

    def __init__(self, fn: Callable[[IsingModel, SamplerConfig], SampleResult], cfg: SamplerConfig):
        self._fn = fn
        self._cfg = cfg
        self._seeds = _as_seed_sequence(cfg.seed)

    def __call__(self, model: IsingModel) -> SampleResult:
        child = self._seeds.spawn(1)[0]
        return self._fn(model, replace(self._cfg, seed=child))


def make_sampler(backend: str, cfg: Optional[SamplerConfig] = None):
    """Build a ``model -> SampleResult`` callable for the named backend.

    Backends: "exact", "sa", "random", "external". A fresh sampler should be
    created per solve; stochastic backends keep per-call seed state.
    """
    cfg = cfg if cfg is not None else SamplerConfig()
    if backend == "exact":
        return solve_exact
    if backend == "sa":
        return _ReseededSampler(solve_classical_sa, cfg)
    if backend == "random":
        return _ReseededSampler(solve_random, cfg)
    if backend == "external":
        return lambda model: solve_external(model, cfg)
    raise ValueError(
        f"unknown sampler backend {backend!r}; expected one of "
        "'exact', 'sa', 'random', 'external'"
    )
