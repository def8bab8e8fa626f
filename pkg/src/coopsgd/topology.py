"""Mixing matrices over worker + auxiliary columns.

A mixing matrix ``W`` acts on the column matrix ``X`` from the right
(``X <- X @ W``). Valid matrices are symmetric, have unit row sums and a
second-largest absolute eigenvalue ``zeta`` strictly below one.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Literal

import numpy as np

from coopsgd.linalg import symmetric_eigvals

__all__ = [
    "STRUCTURAL_TOL",
    "SPECTRAL_TOL",
    "TopologyError",
    "MixingMatrixError",
    "MixingMatrix",
    "TopologySpec",
    "Check",
    "ValidationReport",
    "build_complete",
    "build_ring",
    "build_star",
    "build_metropolis",
    "build_topology",
    "spectral_gap",
    "validate_mixing",
    "read_edge_list",
    "adjacency_from_edges",
    "is_connected",
]

STRUCTURAL_TOL = 1e-12
SPECTRAL_TOL = 1e-9

TopologyKind = Literal["complete", "ring", "star", "custom"]


class TopologyError(ValueError):
    """Raised for invalid sizes or graphs that cannot produce a valid W."""


class MixingMatrixError(ValueError):
    """Raised when a matrix fails the symmetry or row-sum requirements."""


@dataclass(frozen=True, eq=False)
class MixingMatrix:
    """Dense mixing matrix. Entries are copied and frozen on construction.

    ``zeta`` is computed lazily by :func:`spectral_gap` and cached; accessing
    it on a matrix that is not symmetric doubly stochastic raises
    :class:`MixingMatrixError`.
    """

    entries: np.ndarray

    def __post_init__(self) -> None:
        a = np.array(self.entries, dtype=float, copy=True)
        if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] == 0:
            raise TopologyError(f"mixing matrix must be square and nonempty, got {a.shape}")
        a.setflags(write=False)
        object.__setattr__(self, "entries", a)

    @property
    def size(self) -> int:
        return self.entries.shape[0]

    @cached_property
    def eigenvalues(self) -> np.ndarray:
        """Eigenvalues in descending order."""
        ev = symmetric_eigvals(self.entries)[::-1].copy()
        ev.setflags(write=False)
        return ev

    @cached_property
    def zeta(self) -> float:
        return spectral_gap(self)


@dataclass(frozen=True)
class TopologySpec:
    kind: TopologyKind
    node_count: int
    adjacency: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self) -> None:
        if self.kind not in ("complete", "ring", "star", "custom"):
            raise TopologyError(f"unknown topology kind {self.kind!r}")
        if self.node_count < 1:
            raise TopologyError(f"node_count must be >= 1, got {self.node_count}")
        if self.kind == "custom":
            if self.adjacency is None:
                raise TopologyError("custom topology requires an adjacency matrix")
            adj = np.asarray(self.adjacency, dtype=bool)
            if adj.shape != (self.node_count, self.node_count):
                raise TopologyError(
                    f"adjacency shape {adj.shape} does not match node_count {self.node_count}"
                )
            if not np.array_equal(adj, adj.T):
                raise TopologyError("custom adjacency must be symmetric")
            object.__setattr__(self, "adjacency", adj)

    def graph(self) -> np.ndarray:
        """Boolean adjacency without self loops."""
        n = self.node_count
        if self.kind == "custom":
            adj = self.adjacency.copy()
        elif self.kind == "complete":
            adj = np.ones((n, n), dtype=bool)
        elif self.kind == "star":
            adj = np.zeros((n, n), dtype=bool)
            adj[0, 1:] = adj[1:, 0] = True
        else:
            adj = np.zeros((n, n), dtype=bool)
            for i in range(n):
                adj[i, (i + 1) % n] = adj[(i + 1) % n, i] = True
        np.fill_diagonal(adj, False)
        return adj


def is_connected(adj: np.ndarray) -> bool:
    adj = np.asarray(adj, dtype=bool)
    n = adj.shape[0]
    seen = np.zeros(n, dtype=bool)
    seen[0] = True
    queue = deque([0])
    while queue:
        i = queue.popleft()
        for j in np.flatnonzero(adj[i] & ~seen):
            seen[j] = True
            queue.append(int(j))
    return bool(seen.all())


def build_complete(n: int) -> MixingMatrix:
    if n < 1:
        raise TopologyError(f"complete topology needs n >= 1, got {n}")
    return MixingMatrix(np.full((n, n), 1.0 / n))


def build_ring(n: int) -> MixingMatrix:
    """Lazy ring: self weight 1/2, each neighbour 1/4.

    The laziness keeps the spectrum in ``[0, 1]`` so ``zeta`` is always
    ``lambda_2 = 1/2 + cos(2 pi / n) / 2``.
    """
    if n < 3:
        raise TopologyError(f"ring topology needs n >= 3, got {n}")
    w = np.zeros((n, n))
    for i in range(n):
        w[i, i] = 0.5
        w[i, (i + 1) % n] = 0.25
        w[i, (i - 1) % n] = 0.25
    return MixingMatrix(w)


def build_star(n: int) -> MixingMatrix:
    """Metropolis-weighted star with node 0 as the hub."""
    return build_metropolis(TopologySpec("star", n))


def build_metropolis(spec: TopologySpec) -> MixingMatrix:
    """Metropolis-Hastings weights ``1 / (1 + max(deg_i, deg_j))`` on edges."""
    if spec.kind not in ("custom", "star"):
        raise TopologyError(f"Metropolis weighting expects a custom or star spec, got {spec.kind!r}")
    adj = spec.graph()
    n = spec.node_count
    if n > 1 and not is_connected(adj):
        raise TopologyError("graph is disconnected; eigenvalue 1 would be repeated")
    deg = adj.sum(axis=1)
    w = np.zeros((n, n))
    rows, cols = np.nonzero(adj)
    w[rows, cols] = 1.0 / (1.0 + np.maximum(deg[rows], deg[cols]))
    # Remainder on the diagonal; a symmetric off-diagonal keeps columns stochastic too.
    np.fill_diagonal(w, 1.0 - w.sum(axis=1))
    return MixingMatrix(w)


def build_topology(kind: str, n: int, adjacency: np.ndarray | None = None) -> MixingMatrix:
    if kind == "complete":
        return build_complete(n)
    if kind == "ring":
        return build_ring(n)
    if kind == "star":
        return build_star(n)
    if kind == "custom":
        return build_metropolis(TopologySpec("custom", n, adjacency))
    raise TopologyError(f"unknown topology kind {kind!r}")


def _as_array(w: MixingMatrix | np.ndarray) -> np.ndarray:
    return w.entries if isinstance(w, MixingMatrix) else np.asarray(w, dtype=float)


def _structural_residuals(a: np.ndarray) -> tuple[float, float]:
    row = float(np.max(np.abs(a.sum(axis=1) - 1.0)))
    sym = float(np.max(np.abs(a - a.T)))
    return row, sym


def _zeta_from_eigs(ev_desc: np.ndarray) -> float:
    if ev_desc.size == 1:
        return 0.0
    return float(max(abs(ev_desc[1]), abs(ev_desc[-1])))


def spectral_gap(w: MixingMatrix | np.ndarray) -> float:
    """Second-largest absolute eigenvalue, ``max(|lambda_2|, |lambda_n|)``.

    Raises
    ------
    MixingMatrixError
        If ``w`` is not symmetric or its rows do not sum to one
        (tolerance ``STRUCTURAL_TOL``).
    """
    a = _as_array(w)
    row, sym = _structural_residuals(a)
    if sym > STRUCTURAL_TOL:
        raise MixingMatrixError(f"matrix is not symmetric (max |W - W^T| = {sym:.3g})")
    if row > STRUCTURAL_TOL:
        raise MixingMatrixError(f"rows do not sum to 1 (max residual {row:.3g})")
    if isinstance(w, MixingMatrix):
        ev = w.eigenvalues
    else:
        ev = symmetric_eigvals(a)[::-1]
    return _zeta_from_eigs(ev)


@dataclass(frozen=True)
class Check:
    name: str
    passed: bool
    residual: float
    tolerance: float


@dataclass(frozen=True)
class ValidationReport:
    checks: tuple[Check, ...]
    zeta: float

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def __getitem__(self, name: str) -> Check:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def to_dict(self) -> dict:
        return {
            "passed": self.passed,
            "zeta": self.zeta,
            "checks": [
                {"name": c.name, "passed": c.passed, "residual": c.residual, "tolerance": c.tolerance}
                for c in self.checks
            ],
        }


def validate_mixing(w: MixingMatrix | np.ndarray) -> ValidationReport:
    """Check row sums, symmetry, ``lambda_1 = 1`` and ``zeta < 1``.

    Never raises for a square input; failures are carried in the report. When
    the matrix is asymmetric the spectral checks are reported as failed with a
    NaN residual.
    """
    a = _as_array(w)
    row, sym = _structural_residuals(a)
    checks = [
        Check("row_sums", row <= STRUCTURAL_TOL, row, STRUCTURAL_TOL),
        Check("symmetry", sym <= STRUCTURAL_TOL, sym, STRUCTURAL_TOL),
    ]
    if sym <= STRUCTURAL_TOL:
        ev = symmetric_eigvals((a + a.T) / 2.0)[::-1]
        top = abs(float(ev[0]) - 1.0)
        zeta = _zeta_from_eigs(ev)
        checks.append(Check("lambda_max", top <= SPECTRAL_TOL, top, SPECTRAL_TOL))
        # residual is the margin by which zeta misses the strict bound
        checks.append(Check("zeta", zeta < 1.0 - SPECTRAL_TOL, zeta - 1.0, SPECTRAL_TOL))
    else:
        zeta = math.nan
        checks.append(Check("lambda_max", False, math.nan, SPECTRAL_TOL))
        checks.append(Check("zeta", False, math.nan, SPECTRAL_TOL))
    return ValidationReport(tuple(checks), zeta)


def read_edge_list(path: str | Path) -> list[tuple[int, int]]:
    """Parse ``i j`` per line (0-based); blank lines and ``#`` comments ignored."""
    edges = []
    for lineno, line in enumerate(Path(path).read_text().splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 2:
            raise TopologyError(f"{path}:{lineno}: expected 'i j', got {line!r}")
        try:
            i, j = int(parts[0]), int(parts[1])
        except ValueError:
            raise TopologyError(f"{path}:{lineno}: non-integer node index in {line!r}") from None
        if i < 0 or j < 0:
            raise TopologyError(f"{path}:{lineno}: negative node index")
        edges.append((i, j))
    return edges


def adjacency_from_edges(edges: list[tuple[int, int]], n: int) -> np.ndarray:
    adj = np.zeros((n, n), dtype=bool)
    for i, j in edges:
        if i >= n or j >= n:
            raise TopologyError(f"edge ({i}, {j}) out of range for {n} nodes")
        adj[i, j] = adj[j, i] = True
    return adj
