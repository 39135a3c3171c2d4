"""Markov chain samplers for the total spin under quenched and annealed measures."""
from __future__ import annotations

import json
import math
import os
from dataclasses import asdict, dataclass, field

import numpy as np

from . import _kernels_py
from .grg import effective_couplings
from .graphs import Multigraph, WeightSequence, make_rng, random_pairing, stub_owners

try:
    if os.environ.get("ANNEALED_ISING_PURE_PYTHON"):
        raise ImportError("compiled kernels disabled by environment")
    from . import _kernels as _compiled
except ImportError:
    _compiled = None

RANK1_THRESHOLD = 4000
_CHUNK_UPDATES = 1 << 21


def get_backend(name: str | None = None):
    """Kernel module: ``"compiled"``, ``"python"`` or None for the best available."""
    if name is None:
        return _compiled if _compiled is not None else _kernels_py
    if name == "python":
        return _kernels_py
    if name == "compiled":
        if _compiled is None:
            raise ImportError("compiled kernels are not available")
        return _compiled
    raise ValueError(f"unknown backend {name!r}")


def backend_name(module) -> str:
    return "python" if module is _kernels_py else "compiled"


BACKEND = backend_name(get_backend())


@dataclass(frozen=True)
class ChainConfig:
    """Chain length settings; burn-in and thinning are counted in sweeps of N updates."""

    n_samples: int
    seed: int | None = None
    burn_in: int = 100
    thin: int = 1
    switches_per_sweep: int | None = None

    def __post_init__(self):
        if self.n_samples < 1 or self.burn_in < 0 or self.thin < 1:
            raise ValueError("need n_samples >= 1, burn_in >= 0, thin >= 1")


@dataclass
class SampleBatch:
    S: np.ndarray
    N: int
    config: ChainConfig
    sampler: str
    backend: str
    acceptance: dict = field(default_factory=dict)
    approximate: bool = False
    codes: np.ndarray | None = None

    def __len__(self) -> int:
        return self.S.size

    def metadata(self) -> dict:
        return {
            "sampler": self.sampler,
            "backend": self.backend,
            "N": self.N,
            "approximate": self.approximate,
            "acceptance": self.acceptance,
            "config": asdict(self.config),
        }

    def to_csv(self) -> str:
        lines = ["step,S_N"]
        lines += [f"{i},{int(s)}" for i, s in enumerate(self.S)]
        return "\n".join(lines) + "\n"

    def sidecar_json(self) -> str:
        return json.dumps(self.metadata(), indent=2, sort_keys=True)


def _run_chunked(step, n_sweeps: int, N: int, record_codes: bool):
    """Call ``step(n)`` on sweep chunks and concatenate its (S, codes) outputs."""
    per = max(1, _CHUNK_UPDATES // max(N, 1))
    S_parts, code_parts = [], []
    done = 0
    while done < n_sweeps:
        n = min(per, n_sweeps - done)
        S, codes = step(n)
        S_parts.append(S)
        if record_codes:
            code_parts.append(codes)
        done += n
    S = np.concatenate(S_parts) if S_parts else np.zeros(0, np.int64)
    codes = np.concatenate(code_parts) if record_codes and code_parts else None
    return S, codes


def _select(S, codes, config: ChainConfig):
    keep = slice(config.burn_in + config.thin - 1, None, config.thin)
    S = S[keep][: config.n_samples]
    return S, (codes[keep][: config.n_samples] if codes is not None else None)


def _total_sweeps(config: ChainConfig) -> int:
    return config.burn_in + config.thin * config.n_samples


def _initial_spins(rng, N):
    return np.where(rng.random(N) < 0.5, 1, -1).astype(np.int8)


def glauber_quenched(graph: Multigraph, beta: float, B: float, config: ChainConfig,
                     backend: str | None = None, record_codes: bool = False) -> SampleBatch:
    """Heat-bath dynamics for the Ising model on a fixed multigraph."""
    kern = get_backend(backend)
    rng = make_rng(config.seed)
    N = graph.n_vertices
    indptr, indices = graph.csr()
    spins = _initial_spins(rng, N)
    S, codes = _run_chunked(
        lambda n: kern.heat_bath_sparse(indptr, indices, float(beta), float(B), spins, rng.random(n * N), record_codes),
        _total_sweeps(config), N, record_codes,
    )
    S, codes = _select(S, codes, config)
    return SampleBatch(S, N, config, "glauber_quenched", backend_name(kern), codes=codes)


def glauber_annealed_grg(weights: WeightSequence, beta: float, B: float, config: ChainConfig,
                         backend: str | None = None, record_codes: bool = False,
                         force_rank1: bool = False) -> SampleBatch:
    """Heat-bath dynamics for the averaged generalized random graph Gibbs law.

    Up to ``RANK1_THRESHOLD`` vertices the exact couplings are held in a dense
    matrix. Larger systems use couplings ``sinh(beta) w_i w_j / ell``, which is
    flagged as approximate.
    """
    kern = get_backend(backend)
    rng = make_rng(config.seed)
    N = weights.N
    spins = _initial_spins(rng, N)
    if N <= RANK1_THRESHOLD and not force_rank1:
        J = effective_couplings(weights, beta).beta_ij.copy()
        np.fill_diagonal(J, 0.0)
        J = np.ascontiguousarray(J)
        field_ = B + J @ spins.astype(float)
        S, codes = _run_chunked(
            lambda n: kern.heat_bath_dense(J, field_, spins, rng.random(n * N), record_codes),
            _total_sweeps(config), N, record_codes,
        )
        approx = False
    else:
        w = np.ascontiguousarray(weights.weights)
        c = math.sinh(beta) / weights.ell
        state = {"m": float(np.dot(w, spins))}

        def step(n):
            S_, codes_, state["m"] = kern.heat_bath_rank1(w, c, float(B), spins, state["m"], rng.random(n * N), record_codes)
            return S_, codes_

        S, codes = _run_chunked(step, _total_sweeps(config), N, record_codes)
        approx = True
    S, codes = _select(S, codes, config)
    return SampleBatch(S, N, config, "glauber_annealed_grg", backend_name(kern), approximate=approx, codes=codes)


def joint_mcmc_cm(degrees, beta: float, B: float, config: ChainConfig,
                  backend: str | None = None, record_codes: bool = False) -> SampleBatch:
    """Chain on (pairing, spins) whose spin marginal is the annealed configuration-model law.

    Each sweep is a heat-bath pass over the spins at fixed pairing followed by
    double-edge switches accepted with probability ``min(1, e^{beta * dE})``.
    """
    kern = get_backend(backend)
    rng = make_rng(config.seed)
    d = np.asarray(degrees, dtype=np.int64)
    N = d.size
    ell = int(d.sum())
    if ell % 2:
        raise ValueError("total degree must be even")
    owner = stub_owners(d)
    vptr = np.concatenate([[0], np.cumsum(d)]).astype(np.int64)
    partner = random_pairing(ell, rng)
    spins = _initial_spins(rng, N)
    n_switch = config.switches_per_sweep
    if n_switch is None:
        n_switch = max(1, ell // 2)
    if ell < 4:
        n_switch = 0
    acc = {"accepted": 0}

    def step(n):
        S_, codes_, a = kern.joint_cm_sweeps(
            vptr, owner, partner, spins, float(beta), float(B), n_switch,
            rng.random(n * N), rng.random(n * n_switch * 4), record_codes,
        )
        acc["accepted"] += int(a)
        return S_, codes_

    total = _total_sweeps(config)
    S, codes = _run_chunked(step, total, N, record_codes)
    S, codes = _select(S, codes, config)
    attempts = total * n_switch
    rate = acc["accepted"] / attempts if attempts else float("nan")
    return SampleBatch(S, N, config, "joint_mcmc_cm", backend_name(kern),
                       acceptance={"switch": rate, "switches_per_sweep": n_switch}, codes=codes)
