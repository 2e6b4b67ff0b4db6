"""Secrecy quantifiers for the sifted attack statistics.

Everything here consumes the five-symbol joint distribution produced by
the attack module (or a preprocessed variant of it) and is expressed in
bits per sifted symbol.  The module covers:

* the one-way key-rate bound I(A:B) - I(A:E) and its closed form,
* Alice's Bernoulli pre-processing and its optimization over the noise,
* intrinsic information, both the closed-form reference curve and an
  honest numerical minimization over Eve's processing channels,
* the two-way advantage-distillation protocol (repetition blocks with a
  random mask bit), analyzed exactly via type counts,
* the map between channel disturbance and the nonlocal weight.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize

from . import info
from .attack import JointABE, alice_bob_stats, table_joint
from .exceptions import DomainError
from .info import (
    binary_entropy,
    conditional_mutual_information,
    entropy,
    mutual_information,
)

SQRT2 = math.sqrt(2.0)
OPT_TOL = 1e-3  # agreement tolerance for the numerical intrinsic minimum


# ---------------------------------------------------------------------------
# one-way rates and pre-processing
# ---------------------------------------------------------------------------


def ck_rate(p_nl: float) -> float:
    """Closed-form one-way rate bound 1 - h(p_L/4) - p_L/2.

    With p_L = 1 - p_nl this equals I(A:B) - I(A:E) for the optimal
    individual attack; the generic route via the joint distribution is
    ``oneway_rate(table_joint(p_nl))``.
    """
    if not 0.0 <= p_nl <= 1.0:
        raise DomainError(f"p_nl {p_nl!r} outside [0, 1]")
    p_l = 1.0 - p_nl
    return 1.0 - binary_entropy(p_l / 4.0) - p_l / 2.0


def oneway_rate(joint: JointABE) -> float:
    """I(A:B) - I(A:E) for an arbitrary sifted joint."""
    stats = alice_bob_stats(joint)
    return stats.i_ab - stats.i_ae


def preprocess_joint(joint: JointABE, q: float) -> JointABE:
    """Alice flips her bit with probability q before reconciliation."""
    if not 0.0 <= q <= 0.5:
        raise DomainError(f"noise rate {q!r} outside [0, 1/2]")
    p = (1.0 - q) * joint.p + q * joint.p[::-1, :, :]
    return JointABE(p=p, symbols=joint.symbols, p_nl=joint.p_nl)


def preprocessed_rate(p_nl: float, q: float) -> float:
    """One-way rate after Bernoulli(q) noise on Alice's bit."""
    return oneway_rate(preprocess_joint(table_joint(p_nl), q))


@dataclass(frozen=True)
class PreprocessingOptimum:
    q_opt: float
    rate: float


def _golden_max(fun, lo: float, hi: float, iters: int = 60):
    """Golden-section maximization of a unimodal scalar function."""
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = fun(c), fun(d)
    for _ in range(iters):
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = fun(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = fun(d)
    x = (a + b) / 2.0
    return x, fun(x)


def optimize_preprocessing(
    p_nl: float, grid_step: float = 1e-3
) -> PreprocessingOptimum:
    """Maximize the preprocessed rate over the noise q.

    Scans a uniform grid and refines the best point by golden section;
    the rate is smooth and unimodal in q for this family.  The search
    stops just short of q = 1/2: the rate vanishes identically there,
    and within rounding distance of that point its sign is noise.
    """
    joint = table_joint(p_nl)

    def rate_at(q: float) -> float:
        return oneway_rate(preprocess_joint(joint, q))

    q_max = 0.499
    qs = np.arange(0.0, q_max + grid_step / 2, grid_step)
    qs[-1] = min(qs[-1], q_max)
    values = [rate_at(float(q)) for q in qs]
    k = int(np.argmax(values))
    lo = float(qs[max(0, k - 1)])
    hi = float(qs[min(len(qs) - 1, k + 1)])
    q_ref, rate_ref = _golden_max(rate_at, lo, hi)
    if values[k] >= rate_ref:
        return PreprocessingOptimum(q_opt=float(qs[k]), rate=float(values[k]))
    return PreprocessingOptimum(q_opt=float(q_ref), rate=float(rate_ref))


def oneway_threshold(tol: float = 1e-9) -> float:
    """Smallest p_nl with a positive one-way rate (no pre-processing)."""
    lo, hi = 0.1, 0.9
    while hi - lo > tol:
        mid = (lo + hi) / 2.0
        if ck_rate(mid) > 0.0:
            hi = mid
        else:
            lo = mid
    return (lo + hi) / 2.0


def preprocessing_threshold(tol: float = 1e-5) -> float:
    """Smallest p_nl with a positive rate after optimal pre-processing."""
    lo, hi = 0.15, 0.35
    while hi - lo > tol:
        mid = (lo + hi) / 2.0
        if optimize_preprocessing(mid).rate > 0.0:
            hi = mid
        else:
            lo = mid
    return (lo + hi) / 2.0


# ---------------------------------------------------------------------------
# intrinsic information
# ---------------------------------------------------------------------------


def intrinsic_closed(p_nl: float) -> float:
    """Reference curve h(1 - p/2) - ((1+p)/4) h((1-p)/(1+p))."""
    if not 0.0 <= p_nl <= 1.0:
        raise DomainError(f"p_nl {p_nl!r} outside [0, 1]")
    first = binary_entropy(1.0 - p_nl / 2.0)
    if p_nl == 1.0:
        return first
    inner = binary_entropy((1.0 - p_nl) / (1.0 + p_nl))
    return first - (1.0 + p_nl) / 4.0 * inner


@dataclass(frozen=True)
class Channel:
    """Row-stochastic post-processing map for Eve's symbol."""

    matrix: np.ndarray  # shape (n_in, n_out)

    def __post_init__(self):
        m = self.matrix
        if m.ndim != 2:
            raise ValueError("channel matrix must be 2-d")
        if np.any(m < -info.NORM_TOL):
            raise ValueError("channel rows must be nonnegative")
        rows = m.sum(axis=1)
        if np.any(np.abs(rows - 1.0) > info.NORM_TOL):
            raise ValueError("channel rows must sum to one")
        m.setflags(write=False)


def cmi_given_channel(joint: JointABE, channel: Channel) -> float:
    """I(A:B | Ē) after Eve pipes her symbol through the channel."""
    mapped = joint.p @ channel.matrix
    return conditional_mutual_information(mapped)


def _cmi_raw(p_abe: np.ndarray, matrix: np.ndarray) -> float:
    """Unchecked I(A:B|Ē) evaluation, tuned for the optimizer's inner loop."""
    m = p_abe @ matrix  # (2, 2, n_out)
    pz = m.sum(axis=(0, 1))
    pa = m.sum(axis=1)
    pb = m.sum(axis=0)
    num = m * pz[None, None, :]
    den = pa[:, None, :] * pb[None, :, :]
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = m * np.log2(num / den)
    total = float(np.where(m > 1e-300, terms, 0.0).sum())
    return max(0.0, total)


def _normalize_rows(theta: np.ndarray, k: int, m: int) -> np.ndarray:
    mat = np.abs(theta.reshape(k, m))
    sums = mat.sum(axis=1, keepdims=True)
    flat = sums[:, 0] <= 1e-12
    if np.any(flat):
        mat[flat] = 1.0 / m
        sums = mat.sum(axis=1, keepdims=True)
    return mat / sums


def _deterministic_channels(k: int, m: int):
    """All maps from k input symbols onto m output symbols."""
    for code in np.ndindex(*([m] * k)):
        mat = np.zeros((k, m))
        mat[np.arange(k), list(code)] = 1.0
        yield mat


def intrinsic_numeric(
    joint: JointABE,
    restarts: int = 64,
    seed: int = 0,
    max_outputs: int = 5,
) -> float:
    """Minimize I(A:B|Ē) over channels acting on Eve's symbol.

    Multistart derivative-free search: a few structured channels
    (identity, constant, uniform, the best deterministic maps) followed
    by random row-Dirichlet starts, each refined with Powell's method on
    the row-simplex parametrization.  Increasing ``restarts`` extends
    the start list, so the result is nonincreasing in it.

    Returns the best value found; a local method cannot certify the
    global minimum, but the structured starts make the known optima of
    this family reliably reachable.
    """
    if restarts < 1:
        raise DomainError("restarts must be at least 1")
    p_abe = np.asarray(joint.p, dtype=float)
    k = p_abe.shape[2]
    m = min(max_outputs, k)

    def objective(theta: np.ndarray) -> float:
        return _cmi_raw(p_abe, _normalize_rows(theta, k, m))

    structured = []
    identity = np.zeros((k, m))
    identity[np.arange(k), np.arange(k) % m] = 1.0
    structured.append(identity)
    constant = np.zeros((k, m))
    constant[:, 0] = 1.0
    structured.append(constant)
    structured.append(np.full((k, m), 1.0 / m))
    det_scored = sorted(
        ((_cmi_raw(p_abe, mat), i, mat) for i, mat in enumerate(_deterministic_channels(k, m))),
        key=lambda t: (t[0], t[1]),
    )
    structured.extend(mat for _, _, mat in det_scored[:8])

    rng = np.random.default_rng(seed)
    starts = []
    for i in range(restarts):
        if i < len(structured):
            starts.append(structured[i])
        else:
            starts.append(rng.dirichlet(np.ones(m), size=k))

    best_val = math.inf
    bounds = [(0.0, 1.0)] * (k * m)
    for start in starts:
        res = minimize(
            objective,
            start.ravel(),
            method="Powell",
            bounds=bounds,
            options={"xtol": 1e-5, "ftol": 1e-9, "maxfev": 6000},
        )
        if float(res.fun) < best_val:
            # polish each new incumbent; doing it here (not once at the
            # end) keeps the result exactly nonincreasing in `restarts`
            polished = minimize(
                objective,
                res.x,
                method="Powell",
                bounds=bounds,
                options={"xtol": 1e-8, "ftol": 1e-12, "maxfev": 20000},
            )
            best_val = min(float(res.fun), float(polished.fun))
    return max(0.0, best_val)


def intrinsic_upper_bound(joint: JointABE) -> float:
    """min(I(A:B), I(A:B|E)); any channel value must stay below this."""
    stats = alice_bob_stats(joint)
    return min(stats.i_ab, conditional_mutual_information(joint.p))


# ---------------------------------------------------------------------------
# disturbance map
# ---------------------------------------------------------------------------

MAX_QUANTUM_PNL = SQRT2 - 1.0  # reachable with a perfect channel
MAX_DISTURBANCE = 0.5 * (1.0 - 1.0 / SQRT2)  # where p_nl hits zero


def disturbance_to_pnl(d: float) -> float:
    """Nonlocal weight produced through a channel with disturbance d."""
    if not 0.0 <= d <= 0.5:
        raise DomainError(f"disturbance {d!r} outside [0, 1/2]")
    return min(1.0, max(0.0, SQRT2 * (1.0 - 2.0 * d) - 1.0))


def pnl_to_disturbance(p_nl: float) -> float:
    """Inverse of disturbance_to_pnl on the quantum-reachable range."""
    if not 0.0 <= p_nl <= MAX_QUANTUM_PNL:
        raise DomainError(
            f"p_nl {p_nl!r} outside [0, sqrt(2)-1]; not channel-reachable"
        )
    return 0.5 * (1.0 - (1.0 + p_nl) / SQRT2)


# ---------------------------------------------------------------------------
# advantage distillation
# ---------------------------------------------------------------------------


LOG2E = 1.0 / math.log(2.0)


def _one_minus_h(s: float) -> float:
    """1 - h(s) with full relative accuracy near s = 1/2.

    Uses 1 - h(s) = s log2(2s) + (1-s) log2(2(1-s)); the log2(2s) factor
    is log1p(2s - 1)/ln 2, which does not cancel for s close to 1/2.
    """
    if s <= 0.0 or s >= 1.0:
        return 1.0
    t1 = s * math.log1p(2.0 * s - 1.0)
    t2 = (1.0 - s) * math.log1p(1.0 - 2.0 * s)
    return (t1 + t2) * LOG2E


def _capacity_drop(t: float, q: float) -> float:
    """[1 - h(q*t)] - [1 - h(q)] for the binary convolution q*t.

    For tiny t the direct difference underflows, so the first two Taylor
    terms in t are used instead; they are exact to machine precision in
    that regime.
    """
    if t == 0.0:
        return 0.0
    shift = 1.0 - 2.0 * q
    if t > 1e-6:
        return _one_minus_h(q + t * shift) - _one_minus_h(q)
    if q <= 0.0:
        return -binary_entropy(t)
    slope = math.log2((1.0 - q) / q)
    curvature = LOG2E / (q * (1.0 - q))
    return -t * shift * slope + 0.5 * (t * shift) ** 2 * curvature


@dataclass(frozen=True)
class AdBlockEnsemble:
    """Exact statistics of accepted repetition blocks of length n.

    Alice announces her n bits masked by one random bit r; Bob accepts
    when his block is consistent with a single common error value sigma
    and decodes r from it.  ``classes`` lists the accepted-block
    posterior classes as (probability given acceptance, sigma, Eve's
    probability of guessing r correctly).
    """

    n: int
    p_accept: float
    bob_error: float
    classes: tuple  # ((weight, sigma, p_correct), ...)

    def eve_information(self) -> float:
        """I(R : Eve's view | accept)."""
        return 1.0 - self.eve_equivocation(0.0)

    def eve_equivocation(self, q: float) -> float:
        """H(R + f | view, accept) with Bernoulli(q) noise f on r."""
        total = 0.0
        for weight, _, p_correct in self.classes:
            mixed = p_correct * (1.0 - q) + (1.0 - p_correct) * q
            total += weight * binary_entropy(mixed)
        return total

    def rate(self, q: float = 0.0) -> float:
        """Key-rate sign quantity for the block, with optional noise q.

        The noise is applied to the distilled bit before the final
        one-way step, the same Bernoulli pre-processing as in the
        single-round analysis but acting on the block-level secret.
        The two 1-bit constants cancel exactly, and the remaining tiny
        quantities are evaluated through cancellation-free helpers so
        the sign survives for long blocks.
        """
        blind = 0.0
        simple = True
        for weight, _, p_correct in self.classes:
            if p_correct == 0.5:
                blind += weight
            elif p_correct != 1.0:
                simple = False
                break
        if simple:
            # rate = [1-h(q*eps)] - (1-blind)[1-h(q)]
            #      = capacity_drop(eps) + blind [1-h(q)]
            return _capacity_drop(self.bob_error, q) + blind * _one_minus_h(q)
        eps = self.bob_error
        mixed_err = eps * (1.0 - q) + (1.0 - eps) * q
        eve_capacity = 0.0
        for weight, _, p_correct in self.classes:
            mixed = p_correct * (1.0 - q) + (1.0 - p_correct) * q
            eve_capacity += weight * _one_minus_h(mixed)
        return _one_minus_h(mixed_err) - eve_capacity


def ad_block_ensemble(p_nl: float, n: int, noise: float = 0.0) -> AdBlockEnsemble:
    """Exact accepted-block ensemble via type-count enumeration.

    ``noise`` is Bernoulli noise applied to Alice's bits *before* the
    repetition encoding.  Rounds fall into three classes: symbols where
    Eve knows both bits, symbols where she knows only Bob's bit, and the
    blank PR symbol.  Within an accepted block her posterior odds on r
    depend only on the class counts, so a multinomial sum over the
    counts is exact.
    """
    if n < 1:
        raise DomainError("block length must be at least 1")
    if not 0.0 <= noise <= 0.5:
        raise DomainError(f"noise rate {noise!r} outside [0, 1/2]")
    p_l = 1.0 - p_nl
    bern = (1.0 - noise, noise)

    p_sigma = []
    class_map: dict = {}
    for sigma in (0, 1):
        w_known = 0.5 * p_l * bern[sigma]
        w_half = 0.25 * p_l
        w_blank = p_nl * bern[sigma]
        p_acc_sigma = (w_known + w_half + w_blank) ** n
        p_sigma.append(p_acc_sigma)
        if p_acc_sigma == 0.0:
            continue
        # odds multiplier per known/blank round for the wrong r hypothesis
        if noise == 0.0:
            ratio = 0.0 if sigma == 0 else math.inf
        else:
            ratio = bern[1 - sigma] / bern[sigma]
        for n_known in range(n + 1):
            for n_half in range(n - n_known + 1):
                n_blank = n - n_known - n_half
                weight = (
                    math.comb(n, n_known)
                    * math.comb(n - n_known, n_half)
                    * w_known**n_known
                    * w_half**n_half
                    * w_blank**n_blank
                )
                if weight == 0.0:
                    continue
                if n_known + n_half == 0:
                    p_correct = 0.5  # blank blocks never constrain r
                else:
                    exponent = n_known + n_blank
                    if exponent == 0:
                        p_correct = 0.5
                    elif ratio == 0.0:
                        p_correct = 1.0
                    elif math.isinf(ratio):
                        p_correct = 0.0
                    else:
                        p_correct = 1.0 / (1.0 + ratio**exponent)
                key = (sigma, p_correct)
                class_map[key] = class_map.get(key, 0.0) + weight

    p_accept = sum(p_sigma)
    classes = tuple(
        (weight / p_accept, sigma, p_correct)
        for (sigma, p_correct), weight in sorted(class_map.items())
    )
    return AdBlockEnsemble(
        n=n,
        p_accept=p_accept,
        bob_error=p_sigma[1] / p_accept,
        classes=classes,
    )


def ad_rate(p_nl: float, n: int) -> float:
    """Block rate of plain advantage distillation at length n."""
    return ad_block_ensemble(p_nl, n).rate()


def _rate_zero(rate_fn, lo: float = 0.02, hi: float = 0.95, tol: float = 1e-6):
    """Bisect the sign change of a rate that increases with p_nl."""
    if rate_fn(hi) <= 0.0:
        return None
    if rate_fn(lo) > 0.0:
        return lo
    while hi - lo > tol:
        mid = (lo + hi) / 2.0
        if rate_fn(mid) > 0.0:
            hi = mid
        else:
            lo = mid
    return (lo + hi) / 2.0


def _extrapolate_zeros(zeros: list) -> float:
    """Least-squares intercept of z_N against 1/N, upper half of the Ns."""
    usable = [(n, z) for n, z in zeros if z is not None]
    if not usable:
        raise ValueError("no positive-rate block length found")
    n_max = max(n for n, _ in usable)
    tail = [(n, z) for n, z in usable if n >= max(3, n_max // 2)]
    if len(tail) < 2:
        return min(z for _, z in usable)
    xs = np.array([1.0 / n for n, _ in tail])
    ys = np.array([z for _, z in tail])
    slope, intercept = np.polyfit(xs, ys, 1)
    return float(intercept)


@dataclass(frozen=True)
class AdThreshold:
    threshold_estimate: float
    per_n_curve: tuple  # ((n, zero_crossing or None), ...)


def ad_threshold(n_max: int) -> AdThreshold:
    """Asymptotic positivity threshold of plain advantage distillation.

    Locates the zero crossing of the block rate for every length up to
    n_max and extrapolates the crossings against 1/N.
    """
    if n_max < 2:
        raise DomainError("n_max must be at least 2")
    zeros = []
    for n in range(1, n_max + 1):
        zeros.append((n, _rate_zero(lambda p: ad_rate(p, n))))
    return AdThreshold(
        threshold_estimate=_extrapolate_zeros(zeros),
        per_n_curve=tuple(zeros),
    )


# The search stays strictly below 1/2: the rate vanishes there anyway,
# and within a few 1e-16 of 1/2 its sign is pure rounding noise.
MAX_NOISE = 0.499
DEFAULT_Q_GRID = tuple(np.linspace(0.0, 0.49, 50)) + (MAX_NOISE,)


def _best_noise_rate(ensemble: AdBlockEnsemble, q_grid) -> tuple:
    best_q, best_rate = 0.0, ensemble.rate(0.0)
    for q in q_grid:
        q = min(float(q), MAX_NOISE)
        r = ensemble.rate(q)
        if r > best_rate:
            best_q, best_rate = q, r
    lo = max(0.0, best_q - 0.01)
    hi = min(MAX_NOISE, best_q + 0.01)
    q_ref, rate_ref = _golden_max(ensemble.rate, lo, hi)
    if rate_ref > best_rate:
        best_q, best_rate = q_ref, rate_ref
    return best_q, best_rate


def ad_with_preprocessing(p_nl: float, n_max: int, q_grid=DEFAULT_Q_GRID) -> dict:
    """Best block rate at p_nl over lengths up to n_max and noise q.

    The Bernoulli noise is composed with the distillation step: it is
    applied to the block secret before the final one-way distillation,
    which penalizes the eavesdropper's mostly-certain posterior more
    than Bob's estimate.
    """
    best = {"best_rate": -math.inf, "best_rate_sign": -1, "q_used": 0.0, "n_used": 1}
    for n in range(1, n_max + 1):
        ensemble = ad_block_ensemble(p_nl, n)
        q, rate = _best_noise_rate(ensemble, q_grid)
        if rate > best["best_rate"]:
            best.update(best_rate=rate, q_used=q, n_used=n)
    best["best_rate_sign"] = 1 if best["best_rate"] > 0.0 else (-1 if best["best_rate"] < 0.0 else 0)
    return best


def ad_preprocessing_threshold(n_max: int, q_grid=DEFAULT_Q_GRID) -> AdThreshold:
    """Positivity threshold of distillation combined with pre-processing."""
    if n_max < 2:
        raise DomainError("n_max must be at least 2")
    zeros = []
    for n in range(1, n_max + 1):

        def rate_fn(p: float, n=n) -> float:
            ensemble = ad_block_ensemble(p, n)
            return _best_noise_rate(ensemble, q_grid)[1]

        zeros.append((n, _rate_zero(rate_fn)))
    return AdThreshold(
        threshold_estimate=_extrapolate_zeros(zeros),
        per_n_curve=tuple(zeros),
    )


# ---------------------------------------------------------------------------
# aggregate reports
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RateReport:
    p_nl: float
    rate_oneway: float
    rate_oneway_preprocessed: float
    q_opt: float
    intrinsic_closed: float
    intrinsic_numeric: float
    disturbance: float  # nan when p_nl is not channel-reachable


def rate_report(p_nl: float, restarts: int = 64, seed: int = 0) -> RateReport:
    """All single-point secrecy quantities at one nonlocal weight."""
    opt = optimize_preprocessing(p_nl)
    joint = table_joint(p_nl)
    try:
        disturbance = pnl_to_disturbance(p_nl)
    except DomainError:
        disturbance = math.nan
    return RateReport(
        p_nl=p_nl,
        rate_oneway=ck_rate(p_nl),
        rate_oneway_preprocessed=opt.rate,
        q_opt=opt.q_opt,
        intrinsic_closed=intrinsic_closed(p_nl),
        intrinsic_numeric=intrinsic_numeric(joint, restarts=restarts, seed=seed),
        disturbance=disturbance,
    )


CURVE_COLUMNS = (
    "d",
    "p_nl",
    "rate_q0",
    "rate_opt",
    "q_opt",
    "intrinsic_closed",
    "intrinsic_numeric",
)


def curve_rows(d_values, restarts: int = 16, seed: int = 0):
    """Disturbance sweep used by the command-line rates report."""
    rows = []
    for d in d_values:
        p_nl = disturbance_to_pnl(float(d))
        opt = optimize_preprocessing(p_nl)
        joint = table_joint(p_nl)
        rows.append(
            {
                "d": float(d),
                "p_nl": p_nl,
                "rate_q0": ck_rate(p_nl),
                "rate_opt": opt.rate,
                "q_opt": opt.q_opt,
                "intrinsic_closed": intrinsic_closed(p_nl),
                "intrinsic_numeric": intrinsic_numeric(
                    joint, restarts=restarts, seed=seed
                ),
            }
        )
    return rows
