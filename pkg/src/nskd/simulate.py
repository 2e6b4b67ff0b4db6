"""Round-level Monte Carlo simulation of the protocol under attack.

Each round draws uniform settings, lets the eavesdropper pick an extreme
point from her optimal mixture, samples outcomes from that point, and
applies the reconciliation flip.  Generation is blocked: block j of a
run is seeded by (seed, j), so shards computed in parallel reproduce the
serial stream exactly and merging is plain concatenation.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass

import numpy as np

from . import attack as attack_mod
from .exceptions import DomainError, EmptyInput

BLOCK_ROUNDS = 1 << 16


@dataclass(frozen=True)
class RoundRecord:
    x: int
    y: int
    a: int
    b: int
    eve_label: str  # canonical name of the prepared vertex
    sifted_a: int


class RoundLog:
    """Columnar store of simulated rounds.

    Behaves like a sequence of RoundRecord but keeps numpy arrays
    internally so million-round runs stay cheap.
    """

    def __init__(self, x, y, a, b, vertex_index, sifted_a, vertex_names):
        self.x = x
        self.y = y
        self.a = a
        self.b = b
        self.vertex_index = vertex_index
        self.sifted_a = sifted_a
        self.vertex_names = tuple(vertex_names)

    def __len__(self) -> int:
        return len(self.x)

    def __getitem__(self, i: int) -> RoundRecord:
        return RoundRecord(
            x=int(self.x[i]),
            y=int(self.y[i]),
            a=int(self.a[i]),
            b=int(self.b[i]),
            eve_label=self.vertex_names[self.vertex_index[i]],
            sifted_a=int(self.sifted_a[i]),
        )

    def __iter__(self):
        for i in range(len(self)):
            yield self[i]

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf)
        writer.writerow(["x", "y", "a", "b", "e", "sifted_a"])
        for i in range(len(self)):
            writer.writerow(
                [
                    self.x[i],
                    self.y[i],
                    self.a[i],
                    self.b[i],
                    self.vertex_names[self.vertex_index[i]],
                    self.sifted_a[i],
                ]
            )
        return buf.getvalue()


def run(v: float, n: int, seed: int = 0, first_round: int = 0) -> RoundLog:
    """Simulate rounds [first_round, first_round + n) of a seeded stream.

    The stream is defined blockwise, each block fully generated from its
    own (seed, block index) sequence, so any window of it is identical
    whether produced serially or by parallel shards; merging shards is
    plain concatenation.
    """
    if n < 1:
        raise DomainError("need at least one round")
    if first_round < 0:
        raise DomainError("first_round must be nonnegative")
    strategy = attack_mod.optimal_attack(v)
    verts = [vertex for vertex, _ in strategy.components]
    weights = np.array([w for _, w in strategy.components])
    cumulative = np.cumsum(weights)
    cumulative[-1] = 1.0  # guard against rounding in the last bin

    is_local = np.array([vert.is_local for vert in verts])
    alpha = np.array([vert.params[0] for vert in verts], dtype=np.int8)
    beta = np.array([vert.params[1] for vert in verts], dtype=np.int8)
    gamma = np.array([vert.params[2] for vert in verts], dtype=np.int8)
    delta = np.array(
        [vert.params[3] if vert.is_local else 0 for vert in verts], dtype=np.int8
    )

    lo_block = first_round // BLOCK_ROUNDS
    hi_block = (first_round + n - 1) // BLOCK_ROUNDS
    xs, ys, aa, bb, ks = [], [], [], [], []
    for block in range(lo_block, hi_block + 1):
        rng = np.random.default_rng(
            np.random.SeedSequence(entropy=seed, spawn_key=(block,))
        )
        x = rng.integers(0, 2, size=BLOCK_ROUNDS, dtype=np.int8)
        y = rng.integers(0, 2, size=BLOCK_ROUNDS, dtype=np.int8)
        k = np.searchsorted(cumulative, rng.random(BLOCK_ROUNDS), side="right").astype(
            np.int16
        )
        coin = rng.integers(0, 2, size=BLOCK_ROUNDS, dtype=np.int8)

        local = is_local[k]
        a = np.where(local, (alpha[k] & x) ^ beta[k], coin).astype(np.int8)
        b_local = (gamma[k] & y) ^ delta[k]
        b_nonlocal = a ^ (x & y) ^ (alpha[k] & x) ^ (beta[k] & y) ^ gamma[k]
        b = np.where(local, b_local, b_nonlocal).astype(np.int8)

        xs.append(x)
        ys.append(y)
        aa.append(a)
        bb.append(b)
        ks.append(k)

    offset = first_round - lo_block * BLOCK_ROUNDS
    window = slice(offset, offset + n)
    x = np.concatenate(xs)[window]
    y = np.concatenate(ys)[window]
    a = np.concatenate(aa)[window]
    b = np.concatenate(bb)[window]
    k = np.concatenate(ks)[window]
    sifted = (a ^ (x & y)).astype(np.int8)
    return RoundLog(
        x=x,
        y=y,
        a=a,
        b=b,
        vertex_index=k,
        sifted_a=sifted,
        vertex_names=[vert.name for vert in verts],
    )


@dataclass(frozen=True)
class EstimateReport:
    n_rounds: int
    chsh_hat: float
    chsh_stderr: float
    qber_hat: float
    qber_stderr: float
    p_nl_hat: float

    def to_json(self) -> str:
        return json.dumps(
            {
                "n_rounds": self.n_rounds,
                "chsh_hat": self.chsh_hat,
                "chsh_stderr": self.chsh_stderr,
                "qber_hat": self.qber_hat,
                "qber_stderr": self.qber_stderr,
                "p_nl_hat": self.p_nl_hat,
            }
        )


def estimate(log: RoundLog) -> EstimateReport:
    """Plug-in CHSH and error-rate estimators with binomial errors."""
    if len(log) == 0:
        raise EmptyInput("no rounds to estimate from")
    n = len(log)
    chsh = 0.0
    var = 0.0
    for sx, sy in ((0, 0), (0, 1), (1, 0), (1, 1)):
        sel = (log.x == sx) & (log.y == sy)
        n_xy = int(sel.sum())
        if n_xy == 0:
            raise EmptyInput(f"no rounds with settings x={sx}, y={sy}")
        agree = log.a[sel] == log.b[sel]
        p_hat = float(agree.mean()) if (sx, sy) != (1, 1) else float((~agree).mean())
        chsh += p_hat
        var += p_hat * (1.0 - p_hat) / n_xy

    errors = log.sifted_a != log.b
    qber = float(errors.mean())
    qber_se = math.sqrt(qber * (1.0 - qber) / n)
    return EstimateReport(
        n_rounds=n,
        chsh_hat=chsh,
        chsh_stderr=math.sqrt(var),
        qber_hat=qber,
        qber_stderr=qber_se,
        p_nl_hat=max(0.0, chsh - 3.0),
    )
