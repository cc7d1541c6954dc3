"""Monte Carlo estimation of rare-event probabilities for the rescaled walk.

Plain frequency estimates carry Wilson intervals (one-sided upper bound at
zero hits); importance-sampled estimates tilt the atom weights by
e^{<lambda, X> - Lambda(lambda)} and unweight trajectories by
e^{-sum <lambda, X_j> + n Lambda(lambda)}, reporting the effective sample
size.  Shards merge by summing counts in shard order, so results are
deterministic functions of (arguments, seed, shard count).

Empirical rate curves n -> -(1/n) log p are finite-n surrogates for an
asymptotic statement; every curve carries that disclaimer in its metadata.
"""

from dataclasses import dataclass, field

import numpy as np

from ._kernels import indexed_products, stoch2_log_norms
from .distributions import IncrementDistribution
from .errors import InvalidArgumentError, OutOfDomainError
from .legendre import legendre, log_mgf
from .lie import AlgebraVector, GroupElement, _expm, _logm, log_matrix

Z_TWO_SIDED = 1.959963984540054     # 95% two-sided
Z_ONE_SIDED = 1.6448536269514722    # 95% one-sided (zero-hit upper bound)

FINITE_N_DISCLAIMER = (
    "finite-n surrogate: the LDP is asymptotic; empirical rates at desk-scale n "
    "carry O(log(samples)/n) bias and sampling noise")


@dataclass(frozen=True, eq=False)
class BallEvent:
    """Ball {sigma : |log(center^-1 sigma)| <= radius} in the distance proxy.

    Points whose relative displacement has no principal log count as
    non-members.
    """

    center: GroupElement
    radius: float

    def __post_init__(self):
        if not self.radius > 0:
            raise InvalidArgumentError("ball radius must be positive")


def wilson_interval(hits: int, n: int):
    """95% Wilson score interval; zero hits give the one-sided upper bound."""
    if n <= 0:
        raise InvalidArgumentError("sample count must be positive")
    z = Z_ONE_SIDED if hits == 0 else Z_TWO_SIDED
    phat = hits / n
    denom = 1.0 + z * z / n
    center = (phat + z * z / (2 * n)) / denom
    half = z * np.sqrt(phat * (1 - phat) / n + z * z / (4 * n * n)) / denom
    lo = 0.0 if hits == 0 else max(0.0, center - half)
    hi = min(1.0, center + half)
    return float(lo), float(hi)


@dataclass(frozen=True)
class EstimateResult:
    p: float
    lo: float
    hi: float
    samples: int
    weighted_hits: float
    ess: float          # effective count of weighted hits backing the estimate
    tilted: bool
    degenerate: bool    # tilted with ESS < 10: too few effective hits


def _event_distances(dist, n, event, idx):
    """Distance-proxy values from the ball center to each sample endpoint."""
    step_mats = np.array([_expm(a.entries / n) for a in dist.atoms])
    center_inv = np.linalg.inv(event.center.entries)
    if dist.dim == 2:
        end = indexed_products(step_mats, idx, center_inv)
        return stoch2_log_norms(end)
    end = indexed_products(step_mats, idx, center_inv)
    out = np.empty(len(end))
    for i, m in enumerate(end):
        try:
            out[i] = np.linalg.norm(_logm(m))
        except OutOfDomainError:
            out[i] = np.inf
    return out


def tilted_estimator(dist: IncrementDistribution, n: int, event: BallEvent,
                     samples: int, tilt: AlgebraVector | None, seed: int,
                     shards: int = 1) -> EstimateResult:
    """Importance-sampling estimate of P(sigma_n^n in event) under the tilt.

    tilt=None (or the zero matrix) is the plain estimator: weights are
    identically one and the interval is the Wilson score interval.
    """
    if samples < 1:
        raise InvalidArgumentError("samples must be >= 1")
    if n < 1:
        raise InvalidArgumentError("n must be >= 1")
    if shards < 1 or shards > samples:
        raise InvalidArgumentError("shards must lie in [1, samples]")
    if tilt is not None and tilt.norm == 0.0:
        tilt = None

    weights = None
    scores = None
    lam_mgf = 0.0
    if tilt is not None:
        scores = np.array([tilt.inner(a) for a in dist.atoms])
        lam_mgf = log_mgf(dist, tilt)
        weights = np.array(dist.weights) * np.exp(scores - lam_mgf)
        weights /= weights.sum()

    per_shard = [samples // shards] * shards
    for i in range(samples % shards):
        per_shard[i] += 1
    children = np.random.SeedSequence(seed).spawn(shards)

    hit_count = 0
    wsum = 0.0
    wsq = 0.0
    for shard_seed, count in zip(children, per_shard):
        rng = np.random.default_rng(shard_seed)
        idx = dist.sample_indices(rng, (count, n), weights=weights)
        dists = _event_distances(dist, n, event, idx)
        hits = dists <= event.radius
        hit_count += int(hits.sum())
        if tilt is not None:
            counts = np.stack([(idx == a).sum(axis=1) for a in range(dist.n_atoms)],
                              axis=1)
            logw = -(counts @ scores) + n * lam_mgf
            hw = np.where(hits, np.exp(logw), 0.0)
            wsum += float(hw.sum())
            wsq += float((hw * hw).sum())

    if tilt is None:
        p = hit_count / samples
        lo, hi = wilson_interval(hit_count, samples)
        return EstimateResult(p=float(p), lo=lo, hi=hi, samples=samples,
                              weighted_hits=float(hit_count), ess=float(hit_count),
                              tilted=False, degenerate=False)

    p = wsum / samples
    var = max(wsq / samples - p * p, 0.0)
    half = Z_TWO_SIDED * np.sqrt(var / samples)
    ess = wsum ** 2 / wsq if wsq > 0 else 0.0
    return EstimateResult(p=float(p), lo=float(max(0.0, p - half)),
                          hi=float(p + half), samples=samples,
                          weighted_hits=float(wsum), ess=float(ess),
                          tilted=True, degenerate=bool(ess < 10.0))


def estimate_probability(dist: IncrementDistribution, n: int, event: BallEvent,
                         samples: int, seed: int, shards: int = 1) -> EstimateResult:
    """Plain frequency estimate with a 95% Wilson interval."""
    return tilted_estimator(dist, n, event, samples, None, seed, shards=shards)


# ---------------------------------------------------------------------------
# empirical rate curves

@dataclass(frozen=True)
class RateCurveRow:
    n: int
    samples: int
    weighted_hits: float
    p: float
    p_lo: float
    p_hi: float
    rate: float         # -(1/n) log p
    rate_lo: float      # from p_hi
    rate_hi: float      # from p_lo (inf when the interval touches zero)
    ess: float
    degenerate: bool


@dataclass
class RateCurve:
    rows: list[RateCurveRow]
    metadata: dict = field(default_factory=dict)


def _to_rate(p: float, n: int) -> float:
    if p <= 0.0:
        return float("inf")
    return float(-np.log(p) / n)


def auto_tilt(dist: IncrementDistribution, event: BallEvent) -> AlgebraVector | None:
    """Legendre maximizer at the center's logarithmic displacement, when finite."""
    try:
        x = log_matrix(event.center)
    except OutOfDomainError:
        return None
    res = legendre(dist, x)
    if res.is_finite and res.maximizer is not None:
        return res.maximizer
    return None


def empirical_rate_curve(dist: IncrementDistribution, event: BallEvent, ns,
                         samples: int, seed: int, tilt_policy="none",
                         shards: int = 1) -> RateCurve:
    """Per-n estimates of -(1/n) log P(sigma_n^n in event).

    tilt_policy: "none", "auto" (maximizer at the ball center when finite),
    or an explicit AlgebraVector.  Each n uses the child stream
    SeedSequence([seed, n]), so curves are deterministic and extendable.
    """
    ns = [int(n) for n in ns]
    if any(b <= a for a, b in zip(ns, ns[1:])):
        raise InvalidArgumentError("ns must be strictly increasing")
    if tilt_policy == "none":
        tilt = None
    elif tilt_policy == "auto":
        tilt = auto_tilt(dist, event)
    elif isinstance(tilt_policy, AlgebraVector):
        tilt = tilt_policy
    else:
        raise InvalidArgumentError(f"unknown tilt policy {tilt_policy!r}")

    rows = []
    for n in ns:
        child = int(np.random.SeedSequence([seed, n]).generate_state(1)[0])
        est = tilted_estimator(dist, n, event, samples, tilt, child, shards=shards)
        rows.append(RateCurveRow(
            n=n, samples=samples, weighted_hits=est.weighted_hits, p=est.p,
            p_lo=est.lo, p_hi=est.hi, rate=_to_rate(est.p, n),
            rate_lo=_to_rate(est.hi, n), rate_hi=_to_rate(est.lo, n),
            ess=est.ess, degenerate=est.degenerate))
    meta = {
        "disclaimer": FINITE_N_DISCLAIMER,
        "tilt_policy": "none" if tilt is None else (
            "auto" if tilt_policy == "auto" else "explicit"),
        "tilt_matrix": None if tilt is None else tilt.entries.tolist(),
        "seed": seed,
        "shards": shards,
    }
    return RateCurve(rows=rows, metadata=meta)
