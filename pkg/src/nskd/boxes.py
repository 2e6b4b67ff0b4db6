"""Bipartite binary-input/binary-output correlation boxes.

A box is the conditional distribution P(a,b|x,y) describing one round of
a two-party experiment: x and y are the local settings, a and b the
outcomes, all bits.  Physically admissible boxes are normalized and
no-signaling, meaning each party's marginal cannot depend on the other
party's setting.

Tables are numpy arrays of shape (2, 2, 2, 2) with axes ordered
(x, y, a, b); the same row-major order is used whenever a box is
flattened to 16 numbers for serialization.
"""

from __future__ import annotations

import csv
import io
import itertools
import json
import math
from dataclasses import dataclass

import numpy as np

from .exceptions import DomainError, NegativeProbability, NotNormalized, Signaling

PROB_TOL = 1e-9  # default tolerance for normalization / no-signaling checks

CSV_HEADER = tuple(
    f"a{a}b{b}x{x}y{y}"
    for x in (0, 1)
    for y in (0, 1)
    for a in (0, 1)
    for b in (0, 1)
)


@dataclass(frozen=True, eq=False)
class Box:
    """An immutable no-signaling correlation.

    The full table is stored alongside the two single-party marginals,
    which are computed once (averaged over the remote setting) so that
    downstream code never re-derives them from a possibly noisy table.
    """

    table: np.ndarray  # shape (2, 2, 2, 2), axes (x, y, a, b)
    alice_marginal: np.ndarray  # shape (2, 2), axes (x, a)
    bob_marginal: np.ndarray  # shape (2, 2), axes (y, b)

    def prob(self, a: int, b: int, x: int, y: int) -> float:
        """P(a, b | x, y)."""
        return float(self.table[x, y, a, b])

    def flat(self) -> np.ndarray:
        """The 16 entries in (x, y, a, b) row-major order."""
        return self.table.ravel().copy()

    def allclose(self, other: "Box", atol: float = 1e-12) -> bool:
        return bool(np.allclose(self.table, other.table, rtol=0.0, atol=atol))

    def to_json(self) -> str:
        return json.dumps({"p": [float(v) for v in self.table.ravel()]})

    @staticmethod
    def from_json(text: str, tolerance: float = PROB_TOL) -> "Box":
        data = json.loads(text)
        return validate(data["p"], tolerance=tolerance)

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf)
        writer.writerow(CSV_HEADER)
        writer.writerow([repr(float(v)) for v in self.table.ravel()])
        return buf.getvalue()

    @staticmethod
    def from_csv(text: str, tolerance: float = PROB_TOL) -> "Box":
        rows = list(csv.reader(io.StringIO(text)))
        if len(rows) < 2:
            raise ValueError("box CSV needs a header row and one data row")
        header, data = rows[0], rows[1]
        order = {name: i for i, name in enumerate(header)}
        try:
            values = [float(data[order[name]]) for name in CSV_HEADER]
        except KeyError as exc:
            raise ValueError(f"box CSV missing column {exc}") from exc
        return validate(values, tolerance=tolerance)

    def __repr__(self) -> str:  # pragma: no cover - debug aid
        return f"Box(chsh={chsh(self):.6f})"


def _make_box(table: np.ndarray) -> Box:
    """Wrap a table without validity checks; marginals are canonicalized."""
    table = np.asarray(table, dtype=float).reshape(2, 2, 2, 2)
    alice = table.sum(axis=3).mean(axis=1)  # (x, a), averaged over y
    bob = table.sum(axis=2).mean(axis=0)  # (y, b), averaged over x
    table.setflags(write=False)
    alice.setflags(write=False)
    bob.setflags(write=False)
    return Box(table=table, alice_marginal=alice, bob_marginal=bob)


def validate(values, tolerance: float = PROB_TOL) -> Box:
    """Check 16 raw numbers and return them as a Box.

    Raises NegativeProbability, NotNormalized or Signaling when the input
    violates the corresponding constraint beyond ``tolerance``.  Entries
    are clamped to [0, 1] on success.
    """
    arr = np.asarray(values, dtype=float).ravel()
    if arr.size != 16:
        raise ValueError(f"expected 16 probabilities, got {arr.size}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("box entries must be finite")
    table = arr.reshape(2, 2, 2, 2)

    if np.any(table < -tolerance):
        worst = float(table.min())
        raise NegativeProbability(f"entry {worst!r} below zero")

    totals = table.sum(axis=(2, 3))
    if np.any(np.abs(totals - 1.0) > tolerance):
        bad = np.unravel_index(np.argmax(np.abs(totals - 1.0)), totals.shape)
        raise NotNormalized(
            f"P(.,.|x={bad[0]},y={bad[1]}) sums to {totals[bad]!r}"
        )

    # Alice's marginal P(a|x, y) must not depend on y, and symmetrically.
    alice = table.sum(axis=3)  # (x, y, a)
    dev_a = np.abs(alice[:, 0, :] - alice[:, 1, :]).max(axis=1)  # per x
    if np.any(dev_a > tolerance):
        x = int(np.argmax(dev_a))
        raise Signaling("alice", x, float(dev_a[x]))
    bob = table.sum(axis=2)  # (x, y, b)
    dev_b = np.abs(bob[0, :, :] - bob[1, :, :]).max(axis=1)  # per y
    if np.any(dev_b > tolerance):
        y = int(np.argmax(dev_b))
        raise Signaling("bob", y, float(dev_b[y]))

    return _make_box(np.clip(table, 0.0, 1.0))


def isotropic(v: float) -> Box:
    """The isotropic box with visibility v.

    P(a,b|x,y) = v/2 when a XOR b = x AND y, plus white noise (1-v)/4.
    At v=1 this is the PR box; at v=0 the uniform table; the local
    boundary sits at v = 1/2 and the quantum boundary at v = 1/sqrt(2).
    """
    if not 0.0 <= v <= 1.0:
        raise DomainError(f"visibility {v!r} outside [0, 1]")
    return _make_box(_isotropic_table(v))


def _isotropic_table(v: float) -> np.ndarray:
    table = np.empty((2, 2, 2, 2))
    for x, y, a, b in itertools.product((0, 1), repeat=4):
        aligned = (a ^ b) == (x & y)
        table[x, y, a, b] = v * 0.5 * aligned + (1.0 - v) * 0.25
    return table


def chsh(box: Box) -> float:
    """The CHSH expression in winning-probability form.

    Sum of P(a=b) for settings (0,0), (0,1), (1,0) plus P(a!=b) for
    (1,1).  Local boxes stay at or below 3; the algebraic maximum is 4,
    reached only by the PR box.
    """
    t = box.table
    total = 0.0
    for x, y in ((0, 0), (0, 1), (1, 0)):
        total += t[x, y, 0, 0] + t[x, y, 1, 1]
    total += t[1, 1, 0, 1] + t[1, 1, 1, 0]
    return float(total)


def chsh_symmetrized(box: Box) -> float:
    """Largest CHSH value over the eight input/output relabelings.

    Each relabeling replaces the winning condition a XOR b = x AND y by
    a XOR b = xy XOR ax XOR by XOR g.  The result is the
    labeling-independent Bell score of the box: > 3 iff the box is
    CHSH-nonlocal under some choice of labels.
    """
    t = box.table
    best = 0.0
    for alpha, beta, gamma in itertools.product((0, 1), repeat=3):
        total = 0.0
        for x, y, a, b in itertools.product((0, 1), repeat=4):
            if (a ^ b) == ((x & y) ^ (alpha & x) ^ (beta & y) ^ gamma):
                total += t[x, y, a, b]
        best = max(best, float(total))
    return best


def werner_box(w: float) -> Box:
    """Correlation of a Werner state under the CHSH-optimal measurements.

    A Werner state with singlet weight w measured with the standard
    maximal-violation settings yields the isotropic box of visibility
    w/sqrt(2).  The Born-rule cross-check lives in the test suite.
    """
    if not 0.0 <= w <= 1.0:
        raise DomainError(f"Werner weight {w!r} outside [0, 1]")
    return isotropic(w / math.sqrt(2.0))


def bb84_box() -> Box:
    """Ideal BB84 statistics as a two-setting box.

    Outcomes agree with certainty when the bases match (x = y) and are
    uncorrelated otherwise.  The box is local: it admits a deterministic
    hidden-variable model, so these statistics alone certify nothing.
    """
    table = np.empty((2, 2, 2, 2))
    for x, y, a, b in itertools.product((0, 1), repeat=4):
        if x == y:
            table[x, y, a, b] = 0.5 if a == b else 0.0
        else:
            table[x, y, a, b] = 0.25
    return _make_box(table)


# The eight local relabelings (s, t, c) that leave the CHSH expression
# invariant: x -> x^s, y -> y^t, a -> a ^ (t & x) ^ c,
# b -> b ^ (s & y) ^ (s & t) ^ c.
_RELABELINGS = tuple(itertools.product((0, 1), repeat=3))


def _relabeling_permutation(s: int, t: int, c: int) -> np.ndarray:
    perm = np.empty(16, dtype=np.intp)
    for x, y, a, b in itertools.product((0, 1), repeat=4):
        xp, yp = x ^ s, y ^ t
        ap = a ^ (t & x) ^ c
        bp = b ^ (s & y) ^ (s & t) ^ c
        src = ((x * 2 + y) * 2 + a) * 2 + b
        dst = ((xp * 2 + yp) * 2 + ap) * 2 + bp
        perm[dst] = src
    return perm


_RELABEL_PERMS = np.stack([_relabeling_permutation(*g) for g in _RELABELINGS])


def apply_relabeling(box: Box, s: int, t: int, c: int) -> Box:
    """One element of the CHSH symmetry group applied to a box."""
    perm = _relabeling_permutation(s, t, c)
    return _make_box(box.table.ravel()[perm].reshape(2, 2, 2, 2))


def twirl_to_isotropic(box: Box) -> Box:
    """Average a box over the CHSH symmetry group.

    The output always lies on the isotropic line and has the same CHSH
    value as the input, so the twirl maps any box to isotropic noise
    with visibility chsh(box)/2 - 1.  Isotropic boxes are exact fixed
    points: the eight images coincide cellwise and the balanced pairwise
    sum below keeps equal addends exact at every level.
    """
    images = box.table.ravel()[_RELABEL_PERMS]
    while images.shape[0] > 1:
        images = images[0::2] + images[1::2]
    return _make_box((images[0] / 8.0).reshape(2, 2, 2, 2))
