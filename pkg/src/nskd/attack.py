"""The optimal individual no-signaling attack and its sifted statistics.

The eavesdropper prepares each round as one extreme point of the
no-signaling polytope and remembers which one she sent.  To fake an
isotropic box of visibility v >= 1/2 with the least nonlocal mass she
mixes the PR box (probability 2v - 1) with the eight CHSH-facet
deterministic points, uniformly.  Deterministic points she can predict;
PR rounds are monogamous and tell her nothing.

After the protocol's reconciliation step (Bob announces his settings,
Alice flips her bit when both settings were 1) Eve's useful knowledge
per round collapses onto five symbols (e_a, e_b), where "?" marks a bit
she cannot predict.
"""

from __future__ import annotations

import csv
import io
import itertools
import json
import math
from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np

from . import info, polytope
from .boxes import Box, PROB_TOL, _make_box
from .exceptions import DomainError


class EveSymbol(NamedTuple):
    """Eve's per-round record: her predictions for Alice and Bob's bits."""

    e_a: Optional[int]  # None when unknown
    e_b: Optional[int]

    def label(self) -> str:
        qa = "?" if self.e_a is None else str(self.e_a)
        qb = "?" if self.e_b is None else str(self.e_b)
        return f"({qa},{qb})"


# The five symbols arising from facet-plus-PR attacks, canonical order.
TABLE_SYMBOLS = (
    EveSymbol(0, 0),
    EveSymbol(1, 1),
    EveSymbol(None, 0),
    EveSymbol(None, 1),
    EveSymbol(None, None),
)


def _symbol_sort_key(sym: EveSymbol):
    return (sym.e_a is None, sym.e_a or 0, sym.e_b is None, sym.e_b or 0)


@dataclass(frozen=True)
class FullAttack:
    """A tripartite strategy P(a, b, e | x, y) built from extreme points.

    ``components`` pairs each prepared vertex with its probability; the
    vertex identity is Eve's raw side information.  Her preparation is
    drawn independently of the settings, so the tripartite distribution
    is no-signaling by construction.
    """

    visibility: float
    p_nl: float
    components: tuple  # ((Vertex, weight), ...)

    def marginal_box(self) -> Box:
        table = np.zeros((2, 2, 2, 2))
        for vertex, w in self.components:
            table += w * vertex.box.table
        return _make_box(table)

    def to_json(self) -> str:
        entries = {}
        for x, y in itertools.product((0, 1), repeat=2):
            for vertex, w in self.components:
                key = f"x{x}y{y}|{vertex.name}"
                cells = [
                    float(w * vertex.box.table[x, y, a, b])
                    for a in (0, 1)
                    for b in (0, 1)
                ]
                entries[key] = cells
        return json.dumps(
            {"visibility": self.visibility, "p_nl": self.p_nl, "p": entries}
        )


def optimal_attack(v: float) -> FullAttack:
    """Eve's best extremal-mixture preparation for isotropic visibility v.

    Above the local bound the nonlocal weight 2v - 1 is forced and lands
    entirely on the PR box, with the rest spread uniformly over the
    eight facet points.  Below the bound no nonlocal vertex is needed;
    the local vertices then carry weights (1 + 2v)/16 on the facet and
    (1 - 2v)/16 off it, which reproduces the box exactly.
    """
    if not 0.0 <= v <= 1.0:
        raise DomainError(f"visibility {v!r} outside [0, 1]")
    p_nl = max(0.0, 2.0 * v - 1.0)
    components = []
    if v >= 0.5:
        facet_w = (1.0 - p_nl) / 8.0
        for vertex in polytope.facet_vertices():
            if facet_w > 0.0:
                components.append((vertex, facet_w))
        if p_nl > 0.0:
            components.append((polytope.pr_box_vertex(), p_nl))
    else:
        on, off = (1.0 + 2.0 * v) / 16.0, (1.0 - 2.0 * v) / 16.0
        for vertex in polytope.vertices():
            if not vertex.is_local:
                continue
            w = on if vertex.on_chsh_facet else off
            if w > 0.0:
                components.append((vertex, w))
    return FullAttack(visibility=v, p_nl=p_nl, components=tuple(components))


@dataclass(frozen=True)
class JointABE:
    """Sifted joint distribution of Alice's bit, Bob's bit and Eve's symbol."""

    p: np.ndarray  # shape (2, 2, n_symbols)
    symbols: tuple  # EveSymbol entries matching the last axis
    p_nl: float

    def __post_init__(self):
        if abs(float(self.p.sum()) - 1.0) > PROB_TOL:
            raise ValueError("joint distribution must be normalized")
        self.p.setflags(write=False)

    def prob(self, a: int, b: int, symbol: EveSymbol) -> float:
        try:
            k = self.symbols.index(symbol)
        except ValueError:
            return 0.0
        return float(self.p[a, b, k])

    def ab_marginal(self) -> np.ndarray:
        return self.p.sum(axis=2)

    def eve_marginal(self) -> np.ndarray:
        return self.p.sum(axis=(0, 1))

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf)
        writer.writerow(["a", "b", "e_a", "e_b", "prob"])
        for (a, b, k), value in np.ndenumerate(self.p):
            sym = self.symbols[k]
            writer.writerow(
                [
                    a,
                    b,
                    "?" if sym.e_a is None else sym.e_a,
                    "?" if sym.e_b is None else sym.e_b,
                    repr(float(value)),
                ]
            )
        return buf.getvalue()


def _accumulate(contribs: dict):
    """Assemble per-cell contribution lists into an array.

    Cells are summed with fsum so that the many equal power-of-two
    scaled addends produced by uniform mixtures collapse to their exact
    closed-form totals.
    """
    symbols = tuple(sorted({sym for sym, _, _ in contribs}, key=_symbol_sort_key))
    p = np.zeros((2, 2, len(symbols)))
    for (sym, a, b), values in contribs.items():
        p[a, b, symbols.index(sym)] = math.fsum(values)
    return p, symbols


def sift(attack: FullAttack) -> JointABE:
    """Reconciled round statistics with Eve's five-symbol knowledge.

    Settings are uniform.  Bob announces y; Alice keeps a for x*y = 0
    and flips it for x = y = 1.  Eve knows b outright for any
    deterministic vertex.  She knows Alice's kept bit only when the
    vertex makes it independent of the unannounced x; otherwise e_a is
    "?".  PR rounds give her nothing on either bit.
    """
    contribs: dict = {}
    for vertex, w in attack.components:
        for x, y in itertools.product((0, 1), repeat=2):
            if vertex.is_local:
                alpha, beta, gamma, delta = vertex.params
                a = (alpha & x) ^ beta
                b = (gamma & y) ^ delta
                kept = a ^ (x & y)
                candidates = {((alpha & xx) ^ beta) ^ (xx & y) for xx in (0, 1)}
                e_a = kept if len(candidates) == 1 else None
                sym = EveSymbol(e_a, b)
                contribs.setdefault((sym, kept, b), []).append(w * 0.25)
            else:
                alpha, beta, gamma = vertex.params
                sym = EveSymbol(None, None)
                for a in (0, 1):
                    b = a ^ (x & y) ^ (alpha & x) ^ (beta & y) ^ gamma
                    kept = a ^ (x & y)
                    contribs.setdefault((sym, kept, b), []).append(w * 0.125)
    p, symbols = _accumulate(contribs)
    return JointABE(p=p, symbols=symbols, p_nl=attack.p_nl)


def sift_alice_announces(attack: FullAttack) -> JointABE:
    """Variant where Alice announces her setting as well.

    With both settings public every deterministic vertex hands Eve both
    reconciled bits, so her symbol set becomes the four definite pairs
    plus (?,?) for PR rounds.  The public settings themselves carry no
    extra information beyond that and are summed out.
    """
    contribs: dict = {}
    for vertex, w in attack.components:
        for x, y in itertools.product((0, 1), repeat=2):
            if vertex.is_local:
                alpha, beta, gamma, delta = vertex.params
                kept = ((alpha & x) ^ beta) ^ (x & y)
                b = (gamma & y) ^ delta
                sym = EveSymbol(kept, b)
                contribs.setdefault((sym, kept, b), []).append(w * 0.25)
            else:
                alpha, beta, gamma = vertex.params
                sym = EveSymbol(None, None)
                for a in (0, 1):
                    b = a ^ (x & y) ^ (alpha & x) ^ (beta & y) ^ gamma
                    contribs.setdefault((sym, a ^ (x & y), b), []).append(w * 0.125)
    p, symbols = _accumulate(contribs)
    return JointABE(p=p, symbols=symbols, p_nl=attack.p_nl)


def attack_from_pnl(p_nl: float) -> FullAttack:
    """The optimal attack parametrized by its nonlocal weight directly.

    Equivalent to optimal_attack((1 + p_nl)/2) but keeps the caller's
    p_nl value exactly, avoiding a round trip through the visibility.
    """
    if not 0.0 <= p_nl <= 1.0:
        raise DomainError(f"p_nl {p_nl!r} outside [0, 1]")
    components = []
    facet_w = (1.0 - p_nl) / 8.0
    for vertex in polytope.facet_vertices():
        if facet_w > 0.0:
            components.append((vertex, facet_w))
    if p_nl > 0.0:
        components.append((polytope.pr_box_vertex(), p_nl))
    return FullAttack(
        visibility=(1.0 + p_nl) / 2.0, p_nl=p_nl, components=tuple(components)
    )


def table_joint(p_nl: float) -> JointABE:
    """Shortcut: sifted joint of the optimal attack with given p_nl."""
    return sift(attack_from_pnl(p_nl))


class AliceBobStats(NamedTuple):
    qber: float
    i_ab: float
    i_ae: float
    i_be: float


def alice_bob_stats(joint: JointABE) -> AliceBobStats:
    """Error rate and the three pairwise mutual informations."""
    ab = joint.ab_marginal()
    qber = float(ab[0, 1] + ab[1, 0])
    ae = joint.p.sum(axis=1)
    be = joint.p.sum(axis=0)
    return AliceBobStats(
        qber=qber,
        i_ab=info.mutual_information(ab),
        i_ae=info.mutual_information(ae),
        i_be=info.mutual_information(be),
    )
