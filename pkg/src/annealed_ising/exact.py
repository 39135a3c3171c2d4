"""Brute-force partition functions for small instances."""
from __future__ import annotations

import math
from collections import Counter
from collections.abc import Iterator

import numpy as np
from scipy.special import logsumexp

from .graphs import Multigraph, WeightSequence, grg_prob_matrix, stub_owners
from .logmath import LogValue, log_double_factorial_odd
from .transfer import lambda_pm, line_amplitudes

MAX_SPINS = 24
MAX_STUBS = 14
_CHUNK = 1 << 15


def spin_configurations(N: int, start: int = 0, stop: int | None = None) -> np.ndarray:
    """Rows of +-1 spins for configuration indices ``start..stop-1``; bit i set means spin i is -1."""
    stop = (1 << N) if stop is None else stop
    idx = np.arange(start, stop, dtype=np.int64)[:, None]
    bits = (idx >> np.arange(N, dtype=np.int64)) & 1
    return (1 - 2 * bits).astype(np.int8)


def _log_sum_over_spins(N: int, log_weight, max_spins: int) -> float:
    """log of the sum over all 2^N configurations of exp(log_weight(spins))."""
    if N > max_spins:
        raise ValueError(f"N={N} exceeds the enumeration cap of {max_spins} spins")
    parts = []
    for start in range(0, 1 << N, _CHUNK):
        s = spin_configurations(N, start, min(start + _CHUNK, 1 << N)).astype(float)
        parts.append(logsumexp(log_weight(s)))
    return float(logsumexp(parts))


def ising_log_weights(graph: Multigraph, beta: float, B: float, spins: np.ndarray) -> np.ndarray:
    """Unnormalized log Boltzmann weights for each row of ``spins``."""
    e = graph.edges
    inter = (spins[:, e[:, 0]] * spins[:, e[:, 1]]).sum(axis=1) if len(e) else 0.0
    return beta * inter + B * spins.sum(axis=1)


def exact_quenched_Z(graph: Multigraph, beta: float, B: float, max_spins: int = MAX_SPINS) -> LogValue:
    """Partition function of a fixed multigraph by enumeration.

    Self-loops contribute ``e^beta`` each and multi-edges add their couplings.
    """
    return LogValue.from_log(
        _log_sum_over_spins(graph.n_vertices, lambda s: ising_log_weights(graph, beta, B, s), max_spins)
    )


def grg_log_edge_factors(weights: WeightSequence, beta: float) -> tuple[np.ndarray, np.ndarray]:
    """``log(e^{+-beta} p_ij + 1 - p_ij)`` for aligned and anti-aligned pairs."""
    P = grg_prob_matrix(weights)
    return np.log1p(P * math.expm1(beta)), np.log1p(P * math.expm1(-beta))


def exact_annealed_Z_grg(weights: WeightSequence, beta: float, B: float, max_spins: int = MAX_SPINS) -> LogValue:
    """Average partition function of the generalized random graph by enumeration over spins.

    Edges are independent, so each pair contributes the factor
    ``e^{beta s_i s_j} p_ij + 1 - p_ij``.
    """
    return LogValue.from_log(_log_sum_over_spins(weights.N, _grg_log_weight(weights, beta, B), max_spins))


def _grg_log_weight(weights: WeightSequence, beta: float, B: float):
    N = weights.N
    g_plus, g_minus = grg_log_edge_factors(weights, beta)
    iu, ju = np.triu_indices(N, k=1)
    base = 0.5 * (g_plus + g_minus)
    half = 0.5 * (g_plus - g_minus)
    const = base[iu, ju].sum()
    K = np.zeros((N, N))
    K[iu, ju] = half[iu, ju]

    def logw(s):
        return const + np.einsum("ci,ij,cj->c", s, K, s) + B * s.sum(axis=1)

    return logw


def enumerate_pairings(n_stubs: int) -> Iterator[tuple[tuple[int, int], ...]]:
    """All perfect matchings of ``range(n_stubs)`` as tuples of pairs."""
    if n_stubs % 2:
        raise ValueError("number of stubs must be even")

    def rec(rest):
        if not rest:
            yield ()
            return
        a = rest[0]
        for k in range(1, len(rest)):
            b = rest[k]
            for tail in rec(rest[1:k] + rest[k + 1 :]):
                yield ((a, b),) + tail

    yield from rec(tuple(range(n_stubs)))


def pairing_multigraphs(degrees, max_stubs: int = MAX_STUBS) -> Counter:
    """Multiset of multigraphs produced by all pairings, keyed by sorted edge tuples."""
    d = np.asarray(degrees, dtype=np.int64)
    ell = int(d.sum())
    if ell > max_stubs:
        raise ValueError(f"{ell} stubs exceeds the pairing enumeration cap of {max_stubs}")
    owner = stub_owners(d).tolist()
    counts: Counter = Counter()
    for pairing in enumerate_pairings(ell):
        edges = tuple(sorted(tuple(sorted((owner[a], owner[b]))) for a, b in pairing))
        counts[edges] += 1
    return counts


def exact_annealed_Z_cm(degrees, beta: float, B: float, max_stubs: int = MAX_STUBS) -> LogValue:
    """Configuration-model average of the partition function over all pairings."""
    d = np.asarray(degrees, dtype=np.int64)
    counts = pairing_multigraphs(d, max_stubs)
    N = d.size
    terms = [
        math.log(c) + exact_quenched_Z(Multigraph(N, np.array(edges)), beta, B).log_abs
        for edges, c in counts.items()
    ]
    return LogValue.from_log(float(logsumexp(terms)) - log_double_factorial_odd(int(d.sum()) - 1))


def transfer_matrix_cycle_Z(n: int, beta: float, B: float) -> LogValue:
    """Periodic chain of n spins: ``lambda_+^n + lambda_-^n``."""
    if n < 1:
        raise ValueError("n must be >= 1")
    lp, lm = lambda_pm(beta, B)
    if lm == 0.0:
        return LogValue.from_log(n * math.log(lp))
    return LogValue.from_log(n * math.log(lp) + math.log1p((lm / lp) ** n))


def transfer_matrix_line_Z(n: int, beta: float, B: float) -> LogValue:
    """Open chain of n spins: ``A_+ lambda_+^n + A_- lambda_-^n``."""
    if n < 2:
        raise ValueError("a line needs n >= 2")
    lp, lm = lambda_pm(beta, B)
    ap, am = line_amplitudes(beta, B)
    if am == 0.0:
        return LogValue.from_log(math.log(ap) + n * math.log(lp))
    return LogValue.from_log(math.log(ap) + n * math.log(lp) + math.log1p(am / ap * (lm / lp) ** n))


# full spin laws, indexed by configuration code (bit i set means spin i is -1)

MAX_LAW_SPINS = 16


def _law(N: int, logw) -> np.ndarray:
    if N > MAX_LAW_SPINS:
        raise ValueError(f"N={N} exceeds the spin-law cap of {MAX_LAW_SPINS}")
    lw = logw(spin_configurations(N).astype(float))
    return np.exp(lw - logsumexp(lw))


def quenched_spin_law(graph: Multigraph, beta: float, B: float) -> np.ndarray:
    return _law(graph.n_vertices, lambda s: ising_log_weights(graph, beta, B, s))


def annealed_spin_law_grg(weights: WeightSequence, beta: float, B: float) -> np.ndarray:
    return _law(weights.N, _grg_log_weight(weights, beta, B))


def annealed_spin_law_cm(degrees, beta: float, B: float, max_stubs: int = MAX_STUBS) -> np.ndarray:
    d = np.asarray(degrees, dtype=np.int64)
    counts = pairing_multigraphs(d, max_stubs)
    N = d.size

    def logw(s):
        parts = [math.log(c) + ising_log_weights(Multigraph(N, np.array(e)), beta, B, s) for e, c in counts.items()]
        return logsumexp(parts, axis=0)

    return _law(N, logw)
