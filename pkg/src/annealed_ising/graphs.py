"""Weight and degree sequences, random graph samplers and component decomposition."""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components


def make_rng(seed=None) -> np.random.Generator:
    """Return a generator; accepts a seed, a SeedSequence or an existing generator."""
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def spawn_rngs(seed, n: int) -> list[np.random.Generator]:
    """Independent child generators derived from ``seed`` via SeedSequence.spawn."""
    ss = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    return [np.random.default_rng(s) for s in ss.spawn(n)]


@dataclass(frozen=True, eq=False)
class WeightSequence:
    """Positive vertex weights with cached moments."""

    weights: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float).ravel()
        if w.size == 0:
            raise ValueError("weight sequence is empty")
        if not np.all(np.isfinite(w)) or np.any(w <= 0):
            raise ValueError("weights must be finite and strictly positive")
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)

    @property
    def N(self) -> int:
        return self.weights.size

    @cached_property
    def ell(self) -> float:
        return math.fsum(self.weights)

    @cached_property
    def mean(self) -> float:
        return self.ell / self.N

    @cached_property
    def second_moment(self) -> float:
        return math.fsum(self.weights**2) / self.N

    @cached_property
    def nu(self) -> float:
        return self.second_moment / self.mean

    def __len__(self) -> int:
        return self.N


def build_weights(kind: str, N: int = 0, **params) -> WeightSequence:
    """Construct a weight sequence.

    Args:
        kind: ``"constant"`` (param ``w``), ``"powerlaw"`` (params ``tau``,
            ``w_min``) or ``"file"`` (param ``path``).
        N: number of vertices (ignored for ``"file"``).
    """
    if kind == "constant":
        w = float(params.get("w", 1.0))
        if N < 1 or w <= 0:
            raise ValueError("constant weights need N >= 1 and w > 0")
        return WeightSequence(np.full(N, w))
    if kind == "powerlaw":
        tau = float(params["tau"])
        w_min = float(params.get("w_min", 1.0))
        if N < 1 or w_min <= 0 or tau <= 1:
            raise ValueError("powerlaw weights need N >= 1, w_min > 0, tau > 1")
        if tau <= 3:
            warnings.warn("tau <= 3: the limiting second moment diverges", RuntimeWarning, stacklevel=2)
        i = np.arange(1, N + 1, dtype=float)
        return WeightSequence(w_min * (N / i) ** (1.0 / (tau - 1.0)))
    if kind in ("file", "from_file"):
        return WeightSequence(read_values(params["path"], float))
    raise ValueError(f"unknown weight kind {kind!r}")


def read_values(path, dtype=float) -> np.ndarray:
    """Read one value per line, ignoring blank lines and ``#`` comments."""
    vals = []
    for line in Path(path).read_text().splitlines():
        line = line.split("#", 1)[0].strip()
        if line:
            vals.append(dtype(line))
    return np.asarray(vals, dtype=dtype)


def write_values(path, values) -> None:
    Path(path).write_text("".join(f"{v!r}\n" for v in np.asarray(values).tolist()))


@dataclass(frozen=True, eq=False)
class DegreeSequence:
    """Degrees in {1, 2}."""

    degrees: np.ndarray

    def __post_init__(self):
        d = np.asarray(self.degrees, dtype=np.int64).ravel()
        if d.size == 0 or np.any(d < 1):
            raise ValueError("degrees must be integers >= 1")
        d.setflags(write=False)
        object.__setattr__(self, "degrees", d)

    @property
    def N(self) -> int:
        return self.degrees.size

    @property
    def n1(self) -> int:
        return int(np.count_nonzero(self.degrees == 1))

    @property
    def n2(self) -> int:
        return int(np.count_nonzero(self.degrees == 2))

    @property
    def ell(self) -> int:
        return int(self.degrees.sum())

    @classmethod
    def from_counts(cls, n1: int, n2: int) -> "DegreeSequence":
        return cls(np.concatenate([np.ones(n1, np.int64), np.full(n2, 2, np.int64)]))

    @classmethod
    def cm12(cls, N: int, p: float) -> "DegreeSequence":
        """``floor(pN)`` vertices of degree 2, the rest of degree 1."""
        n2 = int(math.floor(p * N))
        return cls.from_counts(N - n2, n2)


@dataclass(frozen=True, eq=False)
class Multigraph:
    """Vertex count plus an edge list that may contain repeats and self-loops."""

    n_vertices: int
    edges: np.ndarray = field(default_factory=lambda: np.zeros((0, 2), np.int64))

    def __post_init__(self):
        e = np.asarray(self.edges, dtype=np.int64).reshape(-1, 2)
        if e.size and (e.min() < 0 or e.max() >= self.n_vertices):
            raise ValueError("edge endpoint out of range")
        object.__setattr__(self, "edges", e)

    @classmethod
    def cycle(cls, n: int) -> "Multigraph":
        i = np.arange(n)
        return cls(n, np.column_stack([i, (i + 1) % n]))

    @classmethod
    def path(cls, n: int) -> "Multigraph":
        i = np.arange(n - 1)
        return cls(n, np.column_stack([i, i + 1]))

    def csr(self) -> tuple[np.ndarray, np.ndarray]:
        """Neighbour lists in CSR form; multi-edges repeated, self-loops dropped."""
        e = self.edges[self.edges[:, 0] != self.edges[:, 1]]
        src = np.concatenate([e[:, 0], e[:, 1]])
        dst = np.concatenate([e[:, 1], e[:, 0]])
        order = np.argsort(src, kind="stable")
        indptr = np.zeros(self.n_vertices + 1, np.int64)
        np.add.at(indptr, src + 1, 1)
        return np.cumsum(indptr), dst[order].astype(np.int64)

    @property
    def n_self_loops(self) -> int:
        return int(np.count_nonzero(self.edges[:, 0] == self.edges[:, 1]))


@dataclass(frozen=True, eq=False)
class GrgSample(Multigraph):
    seed: object = None


def grg_edge_prob(weights: WeightSequence, i: int, j: int) -> float:
    """Edge probability ``w_i w_j / (ell + w_i w_j)``."""
    if i == j:
        raise ValueError("no self-edges in the generalized random graph")
    w = weights.weights
    x = w[i] * w[j]
    return float(x / (weights.ell + x))


def grg_prob_matrix(weights: WeightSequence) -> np.ndarray:
    """All pair probabilities, diagonal filled with ``w_i^2 / (ell + w_i^2)``."""
    w = weights.weights
    x = np.outer(w, w)
    return x / (weights.ell + x)


def sample_grg(weights: WeightSequence, rng=None) -> GrgSample:
    seed = rng
    rng = make_rng(rng)
    N = weights.N
    iu, ju = np.triu_indices(N, k=1)
    P = grg_prob_matrix(weights)[iu, ju]
    keep = rng.random(P.size) < P
    return GrgSample(N, np.column_stack([iu[keep], ju[keep]]), seed=seed)


def stub_owners(degrees) -> np.ndarray:
    d = np.asarray(degrees, dtype=np.int64)
    return np.repeat(np.arange(d.size, dtype=np.int64), d)


def random_pairing(n_stubs: int, rng=None) -> np.ndarray:
    """Uniform perfect matching of stubs as a ``partner`` array."""
    if n_stubs % 2:
        raise ValueError("total degree must be even")
    rng = make_rng(rng)
    perm = rng.permutation(n_stubs)
    partner = np.empty(n_stubs, np.int64)
    partner[perm[0::2]] = perm[1::2]
    partner[perm[1::2]] = perm[0::2]
    return partner


def pairing_to_graph(degrees, partner) -> Multigraph:
    owner = stub_owners(degrees)
    h = np.arange(partner.size)
    first = h < partner
    first |= h == partner
    return Multigraph(len(degrees), np.column_stack([owner[h[first]], owner[partner[first]]]))


def sample_cm_graph(degrees, rng=None) -> Multigraph:
    d = np.asarray(degrees, dtype=np.int64)
    return pairing_to_graph(d, random_pairing(int(d.sum()), rng))


@dataclass(frozen=True)
class GraphDecomposition:
    """Component structure of a multigraph with maximum degree 2."""

    line_lengths: tuple[int, ...]
    torus_lengths: tuple[int, ...]

    @property
    def K_line(self) -> int:
        return len(self.line_lengths)

    @property
    def K_torus(self) -> int:
        return len(self.torus_lengths)

    @property
    def M(self) -> int:
        return int(sum(self.torus_lengths))

    @property
    def N(self) -> int:
        return int(sum(self.line_lengths) + sum(self.torus_lengths))

    def rows(self):
        return [("line", n) for n in self.line_lengths] + [("torus", n) for n in self.torus_lengths]

    def to_csv(self) -> str:
        return "kind,length\n" + "".join(f"{k},{n}\n" for k, n in self.rows())


def decompose(graph: Multigraph) -> GraphDecomposition:
    """Split a max-degree-2 multigraph into paths (lines) and cycles (tori)."""
    N = graph.n_vertices
    deg = np.zeros(N, np.int64)
    np.add.at(deg, graph.edges[:, 0], 1)
    np.add.at(deg, graph.edges[:, 1], 1)
    if np.any(deg > 2):
        raise ValueError("decomposition needs maximum degree 2")
    e = graph.edges
    adj = coo_matrix((np.ones(len(e)), (e[:, 0], e[:, 1])), shape=(N, N))
    _, labels = connected_components(adj, directed=False)
    sizes = np.bincount(labels)
    open_ = np.zeros(sizes.size, bool)
    np.logical_or.at(open_, labels, deg < 2)
    lines = sizes[open_].tolist()
    tori = sizes[~open_].tolist()
    return GraphDecomposition(tuple(sorted(lines)), tuple(sorted(tori)))


def sample_cm(degrees, rng=None) -> GraphDecomposition:
    """Sample a configuration-model multigraph and return its components."""
    d = np.asarray(degrees if not isinstance(degrees, DegreeSequence) else degrees.degrees)
    if int(d.sum()) % 2:
        raise ValueError("total degree must be even")
    return decompose(sample_cm_graph(d, rng))


def sample_torus_vertex_counts(degrees, size: int, rng=None) -> np.ndarray:
    """Draw ``size`` pairings and return how many vertices lie on cycles in each.

    Degrees must lie in {1, 2}. Lines are walked from their degree-1 ends, so
    every vertex not reached that way belongs to a torus.
    """
    d = np.asarray(degrees.degrees if isinstance(degrees, DegreeSequence) else degrees, dtype=np.int64)
    if np.any((d < 1) | (d > 2)):
        raise ValueError("degrees must be 1 or 2")
    n_stubs = int(d.sum())
    if n_stubs % 2:
        raise ValueError("total degree must be even")
    rng = make_rng(rng)
    owner = stub_owners(d).tolist()
    first = np.concatenate([[0], np.cumsum(d)[:-1]]).tolist()
    deg = d.tolist()
    ends = [first[v] for v in range(d.size) if deg[v] == 1]
    perms = rng.permuted(np.tile(np.arange(n_stubs), (size, 1)), axis=1)
    partner = np.empty_like(perms)
    rows = np.arange(size)[:, None]
    partner[rows, perms[:, 0::2]] = perms[:, 1::2]
    partner[rows, perms[:, 1::2]] = perms[:, 0::2]
    out = np.empty(size, np.int64)
    for i, pr in enumerate(partner.tolist()):
        on_lines = 0  # every line is walked from both ends
        for h in ends:
            on_lines += 1
            while True:
                h = pr[h]
                v = owner[h]
                on_lines += 1
                if deg[v] == 1:
                    break
                h = first[v] + 1 - (h - first[v])
        out[i] = d.size - on_lines // 2
    return out


@dataclass(frozen=True)
class CycleCount:
    mean: float
    probs: np.ndarray

    def sample(self, size=None, rng=None):
        rng = make_rng(rng)
        shape = (() if size is None else (size,)) + self.probs.shape
        return (rng.random(shape) < self.probs).sum(axis=-1)


def cycle_count_cm2(N: int) -> CycleCount:
    """Number of cycles of the 2-regular configuration model as a Bernoulli sum."""
    if N < 1:
        raise ValueError("N must be >= 1")
    j = np.arange(1, N + 1)
    probs = 1.0 / (2 * N - 2 * j + 1)
    return CycleCount(math.fsum(probs), probs)


def first_cycle_law_cm2(N: int) -> np.ndarray:
    """Law of the length of the cycle through a fixed vertex, indexed by l = 1..N."""
    if N < 1:
        raise ValueError("N must be >= 1")
    j = np.arange(1, N, dtype=float)
    log_stay = np.concatenate([[0.0], np.cumsum(np.log1p(-1.0 / (2 * N - 2 * j + 1)))])
    l = np.arange(1, N + 1, dtype=float)
    return np.exp(log_stay) / (2 * N - 2 * l + 1)
