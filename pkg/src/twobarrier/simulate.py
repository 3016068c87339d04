"""Monte Carlo engine for the embedded barrier-crossing random walks.

A path is the pair of random walks ``S_i(n) = claims(n) - p_i * arrivals(n)``
driven by one claim/inter-arrival sequence.  The aggregate claim process
is piecewise constant while the barriers increase, so a barrier can
first be exceeded only at a jump epoch; crossing detection at the
embedded-walk steps is therefore exact, with no time discretization.

Each path is split at ``N* = min{n >= 1 : T_n > T_tilde} - 1``, the last
arrival before the barriers cross.  Up to ``N*`` the lower barrier is
``b1`` and the upper is ``b2``; afterwards the roles swap.  Tracking
the four segment maxima (walk 1 / walk 2, before / after ``N*``) makes
the three crossing events and their exact set-algebra decompositions
computable per path.

Truncation: paths run until the elapsed time exceeds
``time_factor * T_tilde`` and each walk is *resolved* - either it
already crossed its barrier after ``N*`` (nothing about it remains
undetermined) or its deficit below the barrier exceeds
``deficit_margin``.  Heavy tails make the post-truncation crossing
probability polynomially small, not exponentially small, so that
probability is estimated per path (one-dimensional ruin asymptote at
the terminal deficit) and reported as an explicit bias bound instead of
being ignored.

Reproducibility: replication ``r`` draws from the counter-based
substream ``(seed, r)``; chunk reduction uses exact float summation in
a fixed chunk order, so estimates are bit-identical for any worker
count.
"""

from __future__ import annotations

import math
import multiprocessing
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

import numba
import numpy as np

from .distributions import HeavyTailDistribution, Lomax
from .errors import StepCapExceededError, UnstableModelError, WeightDegeneracyError
from .model import BarrierInstance, Regime, RiskModel
from .streams import StreamPool

__all__ = [
    "TruncationPolicy",
    "PathOutcome",
    "Estimate",
    "CrossingEstimates",
    "DecompositionReport",
    "NStarConcentration",
    "simulate_path",
    "estimate_psi",
    "decomposition_stats",
    "importance_estimate",
    "nstar_concentration",
]

# Replications per reduction chunk.  Fixed: the chunk layout (not the
# worker count) determines the float-summation order.
CHUNK = 8192

_BLOCK_CAP = 131072


@dataclass(frozen=True)
class TruncationPolicy:
    """When to stop extending a simulated path.

    ``time_factor`` multiples of the barrier-crossing epoch must have
    elapsed and both walks must be resolved (crossed after ``N*`` or
    more than ``deficit_margin`` below their barrier).
    ``deficit_margin=None`` resolves to ``25 * E[claim]`` when the
    policy is applied to a model.  Paths hitting ``hard_step_cap``
    first are marked censored.
    """

    time_factor: float = 4.0
    deficit_margin: float | None = None
    hard_step_cap: int = 10_000_000

    def __post_init__(self):
        if self.time_factor < 2.0:
            raise ValueError(f"time_factor must be >= 2, got {self.time_factor}")
        if self.deficit_margin is not None and not self.deficit_margin > 0:
            raise ValueError(f"deficit_margin must be positive, got {self.deficit_margin}")
        if self.hard_step_cap < 1:
            raise ValueError(f"hard_step_cap must be >= 1, got {self.hard_step_cap}")

    def effective_margin(self, model: RiskModel) -> float:
        if self.deficit_margin is not None:
            return self.deficit_margin
        mean = model.claim.mean()
        return 25.0 * mean if mean > 0 else 1.0


@dataclass(frozen=True)
class PathOutcome:
    """Verdicts and split maxima for one simulated path.

    ``n_star`` is -1 when the path was censored before the barriers
    crossed; post-segment maxima are ``-inf`` when the post segment is
    empty.  ``residual_bound`` sums, over walks still unresolved at
    truncation, the one-dimensional crossing asymptote at the terminal
    deficit (capped at 1)."""

    crossed_b1: bool
    crossed_b2: bool
    crossed_simultaneous: bool
    n_star: int
    m1_pre: float
    m2_pre: float
    m1_post: float
    m2_post: float
    truncated_at: int
    residual_bound: float
    censored: bool


@dataclass(frozen=True)
class Estimate:
    """A probability estimate with a 95% half-width and the residual
    truncation-bias bound specific to the estimated event."""

    value: float
    half_width_95: float
    replications: int
    residual_bias_bound: float


@dataclass(frozen=True)
class CrossingEstimates:
    """The five crossing probabilities estimated from common paths.

    ``psi_wedge`` = at least one barrier crossed, ``psi_vee`` = both at
    the same epoch, ``psi_times`` = both ever, ``psi_1``/``psi_2`` =
    each barrier individually.  ``counts`` holds the raw integer event
    counts (exact set identities are checked on these).
    ``residual_bound_coarse`` is the mean over paths of the per-path
    two-walk residual bound; per-event bounds live on the estimates.
    """

    psi_wedge: Estimate
    psi_vee: Estimate
    psi_times: Estimate
    psi_1: Estimate
    psi_2: Estimate
    replications: int
    censored: int
    counts: dict[str, int]
    residual_bound_coarse: float
    seed: int
    ess: float

    @property
    def censored_fraction(self) -> float:
        return self.censored / self.replications


@dataclass(frozen=True)
class DecompositionReport:
    """Split-maxima estimates and their exact reconstructions.

    The reconstruction of each crossing probability from the split
    terms is an identity path by path, so the reconstructed values
    match the direct estimates exactly (integer counts agree)."""

    direct: CrossingEstimates
    term_pre_2: Estimate          # max of walk 2 before N* exceeds x2
    term_post_1_given_2: Estimate  # walk 2 below pre, walk 1 crosses after N*
    term_pre_1: Estimate          # max of walk 1 before N* exceeds x1
    term_post_2_given_1: Estimate  # walk 1 below pre, walk 2 crosses after N*
    term_all_time_2: Estimate     # walk 2 crosses at any time (= psi_2)
    term_mixed_1: Estimate        # walk 1 below pre but crosses after N*
    reconstructed_vee: float
    reconstructed_wedge: float
    reconstructed_times: float
    nstar_over_t_mean: float


@dataclass(frozen=True)
class NStarConcentration:
    """Empirical concentration of N*/T around 1."""

    fraction: float
    exceedances: int
    replications: int
    epsilon: float
    claim_tail_at_horizon: float


@numba.njit(cache=True)
def _scan_block(zeta, sigma, p1, p2, x1, x2, t_tilde, time_cap, margin,
                t, xi, n, n_star, m1_pre, m2_pre, m1_post, m2_post, simul):
    """Advance one path through a block of increments.

    Returns the updated carry state plus the local index of the stop
    step (-1 if the block ended first).  Pure float64 arithmetic in
    step order; no reductions, so results are exactly reproducible.
    """
    stop = -1
    for i in range(zeta.shape[0]):
        t += zeta[i]
        xi += sigma[i]
        n += 1
        s1 = xi - p1 * t
        s2 = xi - p2 * t
        if n_star < 0:
            if t > t_tilde:
                n_star = n - 1
            else:
                if s1 > m1_pre:
                    m1_pre = s1
                if s2 > m2_pre:
                    m2_pre = s2
        if n_star >= 0:
            if s1 > m1_post:
                m1_post = s1
            if s2 > m2_post:
                m2_post = s2
        if s1 > x1 and s2 > x2:
            simul = True
        if t > time_cap and n_star >= 0:
            r1 = (x1 + p1 * t - xi > margin) or (m1_post > x1)
            r2 = (x2 + p2 * t - xi > margin) or (m2_post > x2)
            if r1 and r2:
                stop = i
                break
    return t, xi, n, n_star, m1_pre, m2_pre, m1_post, m2_post, simul, stop


@dataclass(frozen=True)
class _Problem:
    """Precomputed per-run constants for the path engine."""

    p1: float
    p2: float
    x1: float
    x2: float
    t_tilde: float
    time_cap: float
    margin: float
    step_cap: int
    block0: int
    claim: HeavyTailDistribution
    interarrival: HeavyTailDistribution
    # Lomax importance sampling: claims drawn from Lomax(scale, tilt)
    # instead of Lomax(scale, index); None means crude sampling.
    tilt: float | None = None
    claim_scale: float = 0.0
    log_ratio: float = 0.0   # per-claim log(index/tilt)
    weight_slope: float = 0.0  # per-claim coefficient of log1p(-u)


def _build_problem(model, instance, policy, tilt=None) -> _Problem:
    margin = policy.effective_margin(model)
    time_cap = policy.time_factor * instance.T_tilde
    lam = model.lam
    exp_steps = max(time_cap, 0.0) * lam
    for m, x in ((model.m1, instance.x1), (model.m2, instance.x2)):
        # deficit grows by m per step in expectation
        if m > 0 and margin > x:
            exp_steps = max(exp_steps, (margin - x) / m)
    block0 = int(min(max(64.0, 1.2 * exp_steps + 6.0 * math.sqrt(exp_steps + 1.0) + 16.0),
                     float(_BLOCK_CAP)))
    kwargs = {}
    if tilt is not None:
        claim = model.claim
        if not isinstance(claim, Lomax):
            raise ValueError("importance sampling requires Lomax claims")
        if not 1.0 < tilt <= claim.index:
            raise ValueError(
                f"tilt index must lie in (1, {claim.index}], got {tilt}"
            )
        kwargs = {
            "tilt": tilt,
            "claim_scale": claim.scale,
            "log_ratio": math.log(claim.index / tilt),
            # log(1 + sigma/scale) = -log1p(-u)/tilt, so the per-claim
            # log-weight is log_ratio + (index-tilt)/tilt * log1p(-u)
            "weight_slope": (claim.index - tilt) / tilt,
        }
    return _Problem(
        p1=model.p1, p2=model.p2, x1=instance.x1, x2=instance.x2,
        t_tilde=instance.T_tilde, time_cap=time_cap, margin=margin,
        step_cap=policy.hard_step_cap, block0=block0,
        claim=model.claim, interarrival=model.interarrival, **kwargs,
    )


def _simulate_raw(gen: np.random.Generator, prob: _Problem):
    """Run one path to the policy stop, the step cap, or censoring.

    Draw order per block: inter-arrival uniforms first, then claim
    uniforms.  Block sizes depend only on the problem, never on the
    scheduling, so a replication is a pure function of its substream.
    """
    t = 0.0
    xi = 0.0
    n = 0
    n_star = -1
    m1_pre = 0.0
    m2_pre = 0.0
    m1_post = -math.inf
    m2_post = -math.inf
    simul = False
    censored = True
    sum_logu = 0.0
    block = prob.block0
    inter_inv = prob.interarrival._inverse_cdf
    tilted = prob.tilt is not None
    claim_inv = prob.claim._inverse_cdf
    while n < prob.step_cap:
        b = min(block, prob.step_cap - n)
        u_z = gen.random(b)
        u_s = gen.random(b)
        zeta = inter_inv(u_z)
        if tilted:
            logu = np.log1p(-u_s)
            sigma = prob.claim_scale * np.expm1(logu * (-1.0 / prob.tilt))
        else:
            sigma = claim_inv(u_s)
        (t, xi, n, n_star, m1_pre, m2_pre, m1_post, m2_post, simul, stop) = _scan_block(
            zeta, sigma, prob.p1, prob.p2, prob.x1, prob.x2,
            prob.t_tilde, prob.time_cap, prob.margin,
            t, xi, n, n_star, m1_pre, m2_pre, m1_post, m2_post, simul,
        )
        if tilted:
            used = stop + 1 if stop >= 0 else b
            sum_logu += float(np.sum(logu[:used]))
        if stop >= 0:
            censored = False
            break
        block = min(block * 2, _BLOCK_CAP)
    return (t, xi, n, n_star, m1_pre, m2_pre, m1_post, m2_post, simul,
            censored, sum_logu)


def _walk_residual(prob: _Problem, drift: float, deficit: float) -> float:
    """Upper estimate of a walk's post-truncation crossing probability:
    the one-dimensional ruin asymptote at the terminal deficit.  Falls
    back to the trivial bound 1 when no finite bound applies (negative
    drift, or the walk still at/above its barrier)."""
    if drift <= 0 or deficit <= 0 or not math.isfinite(deficit):
        return 1.0
    return min(1.0, prob.claim.tail_integral_upper(deficit) / drift)


_INT_KEYS = (
    "censored", "c1", "c2", "sim", "both", "either",
    "vpre", "vpost", "wpre", "wpost", "tmix", "steps",
)
_FLOAT_KEYS = (
    "res_coarse", "res_1", "res_2", "res_vee", "res_wedge", "res_times",
    "nstar_rel",
    "w", "w2", "w_c1", "w2_c1", "w_c2", "w2_c2", "w_sim", "w2_sim",
    "w_both", "w2_both", "w_either", "w2_either",
    "wres_1", "wres_2", "wres_vee", "wres_wedge", "wres_times", "wres_coarse",
)


def _run_chunk(payload):
    """Simulate replications [start, stop) and return chunk tallies."""
    model, instance, policy, seed, start, stop, tilt = payload
    prob = _build_problem(model, instance, policy, tilt)
    m1 = model.m1
    m2 = model.m2
    x1 = prob.x1
    x2 = prob.x2
    big_t = instance.T
    two_dim = instance.regime is Regime.TWO_DIM
    pool = StreamPool(seed)
    ints = dict.fromkeys(_INT_KEYS, 0)
    floats = {k: [] for k in _FLOAT_KEYS}
    weighted = tilt is not None
    for rep in range(start, stop):
        gen = pool.seat(rep)
        (t, xi, n, n_star, m1_pre, m2_pre, m1_post, m2_post, simul,
         censored, sum_logu) = _simulate_raw(gen, prob)
        crossed1 = m1_pre > x1 or m1_post > x1
        crossed2 = m2_pre > x2 or m2_post > x2
        d1 = x1 + prob.p1 * t - xi
        d2 = x2 + prob.p2 * t - xi
        r1 = 0.0 if m1_post > x1 else _walk_residual(prob, m1, d1)
        r2 = 0.0 if m2_post > x2 else _walk_residual(prob, m2, d2)
        ints["steps"] += n
        if censored:
            ints["censored"] += 1
        if crossed1:
            ints["c1"] += 1
        if crossed2:
            ints["c2"] += 1
        if simul:
            ints["sim"] += 1
        both = crossed1 and crossed2
        either = crossed1 or crossed2
        if both:
            ints["both"] += 1
        if either:
            ints["either"] += 1
        vpre = m2_pre > x2
        wpre = m1_pre > x1
        post1 = m1_post > x1
        post2 = m2_post > x2
        if vpre:
            ints["vpre"] += 1
        elif post1:
            ints["vpost"] += 1
        if wpre:
            ints["wpre"] += 1
        elif post2:
            ints["wpost"] += 1
        if not wpre and post1:
            ints["tmix"] += 1
        res_1 = 0.0 if crossed1 else r1
        res_2 = 0.0 if crossed2 else r2
        res_vee = 0.0 if simul else r1
        res_wedge = 0.0 if either else r2
        if both:
            res_times = 0.0
        elif crossed1:
            res_times = r2
        else:
            # crossing b1 after N* is simultaneous, so completing the
            # both-barriers event always requires a walk-1 crossing
            res_times = r1
        floats["res_coarse"].append(r1 + r2)
        floats["res_1"].append(res_1)
        floats["res_2"].append(res_2)
        floats["res_vee"].append(res_vee)
        floats["res_wedge"].append(res_wedge)
        floats["res_times"].append(res_times)
        if two_dim and n_star >= 0:
            floats["nstar_rel"].append(n_star / big_t)
        if weighted:
            logw = n * prob.log_ratio + prob.weight_slope * sum_logu
            w = math.exp(logw)
            w2 = w * w
            floats["w"].append(w)
            floats["w2"].append(w2)
            if crossed1:
                floats["w_c1"].append(w)
                floats["w2_c1"].append(w2)
            if crossed2:
                floats["w_c2"].append(w)
                floats["w2_c2"].append(w2)
            if simul:
                floats["w_sim"].append(w)
                floats["w2_sim"].append(w2)
            if both:
                floats["w_both"].append(w)
                floats["w2_both"].append(w2)
            if either:
                floats["w_either"].append(w)
                floats["w2_either"].append(w2)
            floats["wres_1"].append(w * res_1)
            floats["wres_2"].append(w * res_2)
            floats["wres_vee"].append(w * res_vee)
            floats["wres_wedge"].append(w * res_wedge)
            floats["wres_times"].append(w * res_times)
            floats["wres_coarse"].append(w * (r1 + r2))
    return ints, {k: math.fsum(v) for k, v in floats.items()}


def _run_tally(model, instance, policy, replications, seed, tilt, workers):
    if replications < 1:
        raise ValueError(f"replications must be >= 1, got {replications}")
    if seed < 0:
        raise ValueError(f"seed must be nonnegative, got {seed}")
    starts = range(0, replications, CHUNK)
    payloads = [
        (model, instance, policy, seed, s, min(s + CHUNK, replications), tilt)
        for s in starts
    ]
    if workers <= 1 or len(payloads) == 1:
        results = [_run_chunk(p) for p in payloads]
    else:
        ctx = multiprocessing.get_context("fork")
        with ProcessPoolExecutor(max_workers=workers, mp_context=ctx) as ex:
            results = list(ex.map(_run_chunk, payloads, chunksize=1))
    ints = dict.fromkeys(_INT_KEYS, 0)
    float_parts = {k: [] for k in _FLOAT_KEYS}
    for chunk_ints, chunk_floats in results:
        for k, v in chunk_ints.items():
            ints[k] += v
        for k, v in chunk_floats.items():
            float_parts[k].append(v)
    floats = {k: math.fsum(v) for k, v in float_parts.items()}
    return ints, floats


def _estimate(weight_sum: float, weight_sq_sum: float, replications: int,
              residual_sum: float) -> Estimate:
    value = weight_sum / replications
    var = weight_sq_sum / replications - value * value
    if var < 0.0:
        var = 0.0
    return Estimate(
        value=value,
        half_width_95=1.96 * math.sqrt(var / replications),
        replications=replications,
        residual_bias_bound=residual_sum / replications,
    )


def _check_censoring(ints, replications):
    if ints["censored"] > 0.01 * replications:
        raise StepCapExceededError(
            f"{ints['censored']} of {replications} paths hit the hard step cap "
            "(censored fraction above 1%); raise the cap or loosen the policy"
        )


def _crossing_estimates(ints, floats, replications, seed, weighted) -> CrossingEstimates:
    counts = {
        k: ints[k]
        for k in ("c1", "c2", "sim", "both", "either",
                  "vpre", "vpost", "wpre", "wpost", "tmix", "censored")
    }
    if weighted:
        w_sum = floats["w"]
        w2_sum = floats["w2"]
        ess = (w_sum * w_sum / w2_sum) if w2_sum > 0 else 0.0
        spec = {
            "psi_wedge": ("w_either", "w2_either", "wres_wedge"),
            "psi_vee": ("w_sim", "w2_sim", "wres_vee"),
            "psi_times": ("w_both", "w2_both", "wres_times"),
            "psi_1": ("w_c1", "w2_c1", "wres_1"),
            "psi_2": ("w_c2", "w2_c2", "wres_2"),
        }
        estimates = {
            name: _estimate(floats[a], floats[b], replications, floats[r])
            for name, (a, b, r) in spec.items()
        }
        res_coarse = floats["wres_coarse"] / replications
    else:
        ess = float(replications)
        spec = {
            "psi_wedge": ("either", "res_wedge"),
            "psi_vee": ("sim", "res_vee"),
            "psi_times": ("both", "res_times"),
            "psi_1": ("c1", "res_1"),
            "psi_2": ("c2", "res_2"),
        }
        estimates = {
            name: _estimate(float(ints[c]), float(ints[c]), replications, floats[r])
            for name, (c, r) in spec.items()
        }
        res_coarse = floats["res_coarse"] / replications
    return CrossingEstimates(
        **estimates,
        replications=replications,
        censored=ints["censored"],
        counts=counts,
        residual_bound_coarse=res_coarse,
        seed=seed,
        ess=ess,
    )


def simulate_path(
    model: RiskModel,
    instance: BarrierInstance,
    policy: TruncationPolicy | None,
    stream: np.random.Generator,
) -> PathOutcome:
    """Simulate one path on the caller's substream and report verdicts."""
    policy = policy or TruncationPolicy()
    prob = _build_problem(model, instance, policy)
    (t, xi, n, n_star, m1_pre, m2_pre, m1_post, m2_post, simul,
     censored, _) = _simulate_raw(stream, prob)
    d1 = prob.x1 + prob.p1 * t - xi
    d2 = prob.x2 + prob.p2 * t - xi
    r1 = 0.0 if m1_post > prob.x1 else _walk_residual(prob, model.m1, d1)
    r2 = 0.0 if m2_post > prob.x2 else _walk_residual(prob, model.m2, d2)
    return PathOutcome(
        crossed_b1=bool(m1_pre > prob.x1 or m1_post > prob.x1),
        crossed_b2=bool(m2_pre > prob.x2 or m2_post > prob.x2),
        crossed_simultaneous=bool(simul),
        n_star=n_star,
        m1_pre=m1_pre,
        m2_pre=m2_pre,
        m1_post=m1_post,
        m2_post=m2_post,
        truncated_at=n,
        residual_bound=r1 + r2,
        censored=censored,
    )


def estimate_psi(
    model: RiskModel,
    instance: BarrierInstance,
    policy: TruncationPolicy | None,
    replications: int,
    seed: int,
    workers: int = 1,
) -> CrossingEstimates:
    """Estimate all five crossing probabilities from common paths.

    The five estimators share every path (common random numbers), so
    the exact event-lattice identities hold on the integer counts:
    ``either + both = c1 + c2`` and ``sim <= both <= either``.
    Raises :class:`StepCapExceededError` when more than 1% of paths are
    censored.
    """
    policy = policy or TruncationPolicy()
    ints, floats = _run_tally(model, instance, policy, replications, seed, None, workers)
    _check_censoring(ints, replications)
    return _crossing_estimates(ints, floats, replications, seed, weighted=False)


def decomposition_stats(
    model: RiskModel,
    instance: BarrierInstance,
    policy: TruncationPolicy | None,
    replications: int,
    seed: int,
    workers: int = 1,
) -> DecompositionReport:
    """Estimate the split-maxima terms and reconstruct the crossing
    probabilities from them.

    Requires a two-dimensional instance (``a < 1``); the split at
    ``N*`` is trivial otherwise.  Reconstruction identities hold
    exactly on the shared paths."""
    if instance.regime is not Regime.TWO_DIM:
        raise ValueError("decomposition needs a two-dimensional instance (a < 1)")
    policy = policy or TruncationPolicy()
    ints, floats = _run_tally(model, instance, policy, replications, seed, None, workers)
    _check_censoring(ints, replications)
    direct = _crossing_estimates(ints, floats, replications, seed, weighted=False)
    R = replications

    def term(count):
        return _estimate(float(count), float(count), R, 0.0)

    nstar_paths = R - ints["censored"]
    return DecompositionReport(
        direct=direct,
        term_pre_2=term(ints["vpre"]),
        term_post_1_given_2=term(ints["vpost"]),
        term_pre_1=term(ints["wpre"]),
        term_post_2_given_1=term(ints["wpost"]),
        term_all_time_2=term(ints["c2"]),
        term_mixed_1=term(ints["tmix"]),
        reconstructed_vee=(ints["vpre"] + ints["vpost"]) / R,
        reconstructed_wedge=(ints["wpre"] + ints["wpost"]) / R,
        reconstructed_times=(ints["c2"] + ints["tmix"] - ints["wpost"]) / R,
        nstar_over_t_mean=(floats["nstar_rel"] / nstar_paths) if nstar_paths else math.nan,
    )


def importance_estimate(
    model: RiskModel,
    instance: BarrierInstance,
    replications: int,
    tilt_alpha: float,
    seed: int,
    policy: TruncationPolicy | None = None,
    workers: int = 1,
) -> CrossingEstimates:
    """Likelihood-ratio estimates with claims drawn from a heavier
    Lomax proposal (same scale, tail index ``tilt_alpha``).

    Unbiased for the same policy-truncated probabilities as
    :func:`estimate_psi`; weights are accumulated in log space.  With
    ``tilt_alpha`` equal to the claim index the weights are exactly one
    and the output reproduces the crude estimator bit for bit.  Raises
    :class:`WeightDegeneracyError` when the effective sample size drops
    below 1% of the replication count.
    """
    policy = policy or TruncationPolicy()
    tilt = float(tilt_alpha)
    ints, floats = _run_tally(model, instance, policy, replications, seed, tilt, workers)
    _check_censoring(ints, replications)
    out = _crossing_estimates(ints, floats, replications, seed, weighted=True)
    if out.ess < 0.01 * replications:
        raise WeightDegeneracyError(
            f"effective sample size {out.ess:.1f} of {replications} replications "
            f"(< 1%); tilt index {tilt} is too aggressive for this horizon"
        )
    return out


def _nstar_one(gen, interarrival, t_tilde, block0):
    t = 0.0
    n = 0
    block = block0
    inv = interarrival._inverse_cdf
    while True:
        arrivals = np.cumsum(inv(gen.random(block))) + t
        idx = int(np.searchsorted(arrivals, t_tilde, side="right"))
        if idx < block:
            return n + idx
        t = float(arrivals[-1])
        n += block
        block = min(block * 2, _BLOCK_CAP)


def _nstar_chunk(payload):
    model, instance, seed, start, stop, epsilon = payload
    t_tilde = instance.T_tilde
    big_t = instance.T
    lam = model.lam
    block0 = int(min(max(32.0, 1.25 * lam * t_tilde + 8.0 * math.sqrt(lam * t_tilde) + 16.0),
                     float(_BLOCK_CAP)))
    pool = StreamPool(seed)
    exceed = 0
    for rep in range(start, stop):
        n_star = _nstar_one(pool.seat(rep), model.interarrival, t_tilde, block0)
        if abs(n_star / big_t - 1.0) > epsilon:
            exceed += 1
    return exceed


def nstar_concentration(
    model: RiskModel,
    instance: BarrierInstance,
    replications: int,
    epsilon: float,
    seed: int,
    workers: int = 1,
) -> NStarConcentration:
    """Empirical probability that ``N*/T`` deviates from 1 by more than
    ``epsilon``, paired with the claim tail at the crossing epoch for a
    scale comparison.  ``N*`` depends on the inter-arrival sequence
    only, so paths simulate arrivals alone."""
    if epsilon <= 0:
        raise ValueError(f"epsilon must be positive, got {epsilon}")
    if instance.regime is not Regime.TWO_DIM:
        raise ValueError("concentration check needs a two-dimensional instance (a < 1)")
    payloads = [
        (model, instance, seed, s, min(s + CHUNK, replications), epsilon)
        for s in range(0, replications, CHUNK)
    ]
    if workers <= 1 or len(payloads) == 1:
        parts = [_nstar_chunk(p) for p in payloads]
    else:
        ctx = multiprocessing.get_context("fork")
        with ProcessPoolExecutor(max_workers=workers, mp_context=ctx) as ex:
            parts = list(ex.map(_nstar_chunk, payloads, chunksize=1))
    exceed = sum(parts)
    return NStarConcentration(
        fraction=exceed / replications,
        exceedances=exceed,
        replications=replications,
        epsilon=epsilon,
        claim_tail_at_horizon=float(model.claim.tail(instance.T)),
    )
