"""Extremal points of the binary no-signaling polytope and decompositions.

For two parties with binary settings and outcomes the no-signaling
polytope has exactly 24 extreme points: 16 deterministic (local) boxes
and 8 nonlocal boxes with uniform marginals.  Every valid box is a
convex mixture of them; the mixture minimizing the total weight on
nonlocal vertices is the geometry behind the optimal individual
eavesdropping attack, so that minimum is what the solver here computes.
"""

from __future__ import annotations

import functools
import itertools
import json
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linprog

from . import boxes
from .boxes import Box
from .exceptions import Infeasible

LP_TOL = 1e-8  # residual / weight tolerance for decompositions

_HIGHS_OPTS = {
    "primal_feasibility_tolerance": 1e-10,
    "dual_feasibility_tolerance": 1e-10,
}


@dataclass(frozen=True, eq=False)
class Vertex:
    """One extreme point of the no-signaling polytope.

    Local vertices are parametrized by (alpha, beta, gamma, delta) with
    a = alpha*x XOR beta and b = gamma*y XOR delta.  Nonlocal vertices
    are parametrized by (alpha, beta, gamma) with outcomes uniform and
    a XOR b = xy XOR alpha*x XOR beta*y XOR gamma; (0, 0, 0) is the PR
    box.
    """

    kind: str  # "local" | "nonlocal"
    params: tuple
    box: Box

    @property
    def name(self) -> str:
        digits = "".join(str(p) for p in self.params)
        return f"L:{digits}" if self.kind == "local" else f"NL:{digits}"

    @property
    def is_local(self) -> bool:
        return self.kind == "local"

    @property
    def on_chsh_facet(self) -> bool:
        """True for the 8 deterministic points saturating CHSH = 3."""
        if self.kind != "local":
            return False
        alpha, beta, gamma, delta = self.params
        return (beta ^ delta) == (alpha & gamma)

    def __repr__(self) -> str:  # pragma: no cover - debug aid
        return f"Vertex({self.name})"


def _local_table(alpha: int, beta: int, gamma: int, delta: int) -> np.ndarray:
    table = np.zeros((2, 2, 2, 2))
    for x, y in itertools.product((0, 1), repeat=2):
        a = (alpha & x) ^ beta
        b = (gamma & y) ^ delta
        table[x, y, a, b] = 1.0
    return table


def _nonlocal_table(alpha: int, beta: int, gamma: int) -> np.ndarray:
    table = np.zeros((2, 2, 2, 2))
    for x, y, a in itertools.product((0, 1), repeat=3):
        b = a ^ (x & y) ^ (alpha & x) ^ (beta & y) ^ gamma
        table[x, y, a, b] = 0.5
    return table


@functools.cache
def vertices() -> tuple:
    """All 24 extreme points in canonical order.

    The 16 local vertices come first, ordered lexicographically in
    (alpha, beta, gamma, delta), followed by the 8 nonlocal vertices
    ordered in (alpha, beta, gamma).
    """
    out = []
    for params in itertools.product((0, 1), repeat=4):
        out.append(Vertex("local", params, boxes._make_box(_local_table(*params))))
    for params in itertools.product((0, 1), repeat=3):
        out.append(
            Vertex("nonlocal", params, boxes._make_box(_nonlocal_table(*params)))
        )
    return tuple(out)


def pr_box_vertex() -> Vertex:
    """The unique vertex violating the canonical CHSH expression."""
    return vertices()[16]


def facet_vertices() -> tuple:
    """The 8 local vertices on the canonical CHSH facet."""
    return tuple(v for v in vertices() if v.on_chsh_facet)


@functools.cache
def _vertex_matrix() -> np.ndarray:
    """Columns are flattened vertex tables; shape (16, 24)."""
    return np.column_stack([v.box.table.ravel() for v in vertices()])


@functools.cache
def _nonlocal_cost() -> np.ndarray:
    return np.array([0.0 if v.is_local else 1.0 for v in vertices()])


@dataclass(frozen=True)
class Decomposition:
    """Convex weights over the canonical vertex list."""

    weights: np.ndarray  # shape (24,), canonical vertex order
    residual: float  # max-abs reconstruction error

    @property
    def nonlocal_weight(self) -> float:
        return float(self.weights @ _nonlocal_cost())

    def weight_of(self, vertex: Vertex) -> float:
        return float(self.weights[vertices().index(vertex)])

    def as_dict(self, threshold: float = 0.0) -> dict:
        return {
            v.name: float(w)
            for v, w in zip(vertices(), self.weights)
            if w > threshold
        }

    def reconstruct(self) -> Box:
        flat = _vertex_matrix() @ self.weights
        return boxes._make_box(flat.reshape(2, 2, 2, 2))

    def to_json(self) -> str:
        entries = [
            {"vertex": v.name, "w": float(w)}
            for v, w in zip(vertices(), self.weights)
            if w > LP_TOL
        ]
        return json.dumps({"weights": entries, "residual": self.residual})


def _solve(c, a_eq, b_eq):
    res = linprog(
        c,
        A_eq=a_eq,
        b_eq=b_eq,
        bounds=(0.0, 1.0),
        method="highs",
        options=_HIGHS_OPTS,
    )
    if res.status == 2:
        raise Infeasible("target is not a convex mixture of no-signaling vertices")
    if not res.success:  # pragma: no cover - solver trouble
        raise RuntimeError(f"linear program failed: {res.message}")
    return res.x


def min_nonlocal_decomposition(box: Box, lexicographic: bool = True) -> Decomposition:
    """Mixture of extreme points with minimal total nonlocal weight.

    The minimum itself is unique; the supporting weight vector need not
    be.  With ``lexicographic=True`` (the default) ties are broken by
    choosing the lexicographically smallest weight vector in canonical
    vertex order, which makes the output fully deterministic.

    Raises Infeasible when the target is not inside the polytope, which
    for finite inputs means it is not a valid no-signaling box.
    """
    target = box.table.ravel()
    base_a = np.vstack([_vertex_matrix(), np.ones((1, 24))])
    base_b = np.concatenate([target, [1.0]])
    cost = _nonlocal_cost()

    w = _solve(cost, base_a, base_b)
    opt = float(cost @ w)

    if lexicographic:
        rows = [cost]
        vals = [opt]
        for i in range(24):
            if w[i] <= 1e-10:
                # zero is attainable (the current candidate attains it),
                # so it is the lexicographic minimum for this coordinate
                rows.append(_unit_row(i))
                vals.append(0.0)
                continue
            a_eq = np.vstack([base_a, np.array(rows)])
            b_eq = np.concatenate([base_b, np.array(vals)])
            unit = _unit_row(i)
            w = _solve(unit, a_eq, b_eq)
            rows.append(unit)
            vals.append(float(w[i]))

    w = np.clip(w, 0.0, None)
    residual = float(np.abs(_vertex_matrix() @ w - target).max())
    return Decomposition(weights=w, residual=residual)


def _unit_row(i: int) -> np.ndarray:
    row = np.zeros(24)
    row[i] = 1.0
    return row


def is_local(box: Box, tolerance: float = LP_TOL) -> bool:
    """True when the box admits a decomposition with no nonlocal weight."""
    dec = min_nonlocal_decomposition(box, lexicographic=False)
    return dec.nonlocal_weight <= tolerance
