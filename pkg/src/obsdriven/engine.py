"""Forward simulation, maximal coupling of chains, and backward iterations.

Two chains coupled here share one environment path and draw observations
from the maximal coupling at their current latent pair, so their
disagreement probability at each step equals the total-variation distance
of the two conditional laws.  Backward iterations run the recursion from
time -n to 0 along a fixed path; their empirical laws are compared in
Wasserstein-1 distance under the truncated metric min(|s-s'|, 1).

Observation randomness for backward runs is addressed per (time index,
replica) by counter-based streams: runs with the same seed but different
start states or different n share every uniform on common indices, which
realizes the coupling the backward Cauchy argument is built on, and which
keeps a path extension from perturbing the shared suffix.
"""

from __future__ import annotations

import csv
import itertools
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linear_sum_assignment

from . import links as links_mod
from .covariates import CovariatePath, CovariateProcessSpec, generate_path
from .errors import (
    DomainViolation,
    EmptyRange,
    InvalidSpec,
    PathTooShort,
    SizeMismatch,
    UnsupportedCombination,
)
from .kernels import ObservationKernel, PhiSpec
from .links import CategoryTable, LinkSpec, apply as link_apply, contraction_map
from .rngstream import IndexedStream, generator, split_seed

_SEED_ENV = 11
_SEED_OBS = 12
_SEED_COUPLE = 13
_TAG_BACKWARD = 201

MAX_EXACT_ASSIGNMENT = 4096


# ---------------------------------------------------------------------------
# model spec
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ModelSpec:
    """Kernel + link + environment; the complete recursion specification."""

    kernel: ObservationKernel
    link: LinkSpec
    covariates: CovariateProcessSpec
    alpha: float = 1.0
    norm: str = ""

    def __post_init__(self):
        if not 0 < self.alpha <= 1:
            raise InvalidSpec("alpha must lie in (0, 1]")
        if not self.norm:
            object.__setattr__(self, "norm", self.kernel.state_norm)
        if self.link.order != self.kernel.moment_order:
            raise UnsupportedCombination(
                f"link order {self.link.order} incompatible with "
                f"{self.kernel.family} (needs {self.kernel.moment_order})"
            )
        table = isinstance(self.link, links_mod.LinearLink) and isinstance(self.link.kappa_tilde, CategoryTable)
        if self.kernel.state_dim > 1 or self.kernel.family == "multinomial":
            if not table:
                raise UnsupportedCombination("multinomial kernels need a category-table link")
            if self.link.kappa_tilde.n_categories != self.kernel.n_categories:
                raise UnsupportedCombination("category table width must match the kernel")
            if self.link.kappa_tilde.array.shape[0] != self.kernel.state_dim:
                raise UnsupportedCombination("category table height must match the state dimension")
        elif table:
            raise UnsupportedCombination("category-table links require a multinomial kernel")

    def state_distance(self, s, sp) -> float:
        if self.norm == "inf":
            return float(np.max(np.abs(np.asarray(s, float) - np.asarray(sp, float))))
        return abs(float(s) - float(sp))

    def start_state(self):
        if self.kernel.state_dim > 1:
            return np.zeros(self.kernel.state_dim)
        floor = self.kernel.domain_floor()
        return 0.0 if floor is None else float(floor)

    def to_dict(self):
        return {
            "kernel": self.kernel.to_dict(),
            "link": self.link.to_dict(),
            "covariates": self.covariates.to_dict(),
            "alpha": self.alpha,
            "norm": self.norm,
        }


def model_from_dict(d: dict) -> ModelSpec:
    from .covariates import spec_from_dict
    from .kernels import kernel_from_dict
    from .links import link_from_dict

    return ModelSpec(
        kernel_from_dict(d["kernel"]),
        link_from_dict(d["link"]),
        spec_from_dict(d["covariates"]),
        d.get("alpha", 1.0),
        d.get("norm", ""),
    )


def _check_state(model: ModelSpec, s, where: str):
    if not model.kernel.domain_contains(s):
        raise DomainViolation(f"{where}: state left the {model.kernel.family} domain")


# ---------------------------------------------------------------------------
# forward simulation
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Trajectory:
    t_min: int
    t_max: int
    x: np.ndarray        # (n, d)
    lam: np.ndarray      # (n,) or (n, state_dim)
    y: np.ndarray        # (n,)
    seed: int

    def __len__(self):
        return self.t_max - self.t_min + 1

    @property
    def times(self):
        return np.arange(self.t_min, self.t_max + 1)

    def to_csv(self, fileobj):
        w = csv.writer(fileobj)
        d = self.x.shape[1]
        xcols = ["x"] if d == 1 else [f"x_{j + 1}" for j in range(d)]
        lam2 = np.atleast_2d(self.lam.T).T
        k = lam2.shape[1]
        lcols = ["lambda"] if k == 1 else [f"lambda_{j + 1}" for j in range(k)]
        w.writerow(["t"] + xcols + lcols + ["y"])
        fmt = lambda v: format(float(v), ".17g")
        for i, t in enumerate(range(self.t_min, self.t_max + 1)):
            w.writerow([t] + [fmt(v) for v in self.x[i]] + [fmt(v) for v in lam2[i]] + [fmt(self.y[i])])


def simulate(model: ModelSpec, s0, t_min: int, t_max: int, seed: int) -> Trajectory:
    """Run the recursion forward on [t_min, t_max]; deterministic in seed.

    The environment path comes from the seed's environment sub-stream, the
    observations from a sequential sub-stream; lambda is recorded before
    the observation at each time, so lam[t+1] = f(lam[t], y[t], x[t]).
    """
    if t_max < t_min:
        raise EmptyRange(f"empty range [{t_min}, {t_max}]")
    path = generate_path(model.covariates, t_min, t_max, split_seed(seed, _SEED_ENV))
    rng = generator(seed, _SEED_OBS)
    n = t_max - t_min + 1
    vector = model.kernel.state_dim > 1
    lam = np.asarray(s0, dtype=float).copy() if vector else float(s0)
    _check_state(model, lam, "initial state")
    lam_hist = np.empty((n, model.kernel.state_dim)) if vector else np.empty(n)
    y_hist = np.empty(n)
    for i in range(n):
        lam_hist[i] = lam
        y = model.kernel.sample(lam, rng)
        y_hist[i] = y
        lam = link_apply(model.link, lam, y, path.values[i])
        _check_state(model, lam, f"step t={t_min + i}")
    return Trajectory(t_min, t_max, path.values, lam_hist, y_hist, seed)


# ---------------------------------------------------------------------------
# maximal coupling of two chains
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CouplingTrace:
    t_min: int
    t_max: int
    lam: np.ndarray
    lam_prime: np.ndarray
    y: np.ndarray
    y_prime: np.ndarray
    met: np.ndarray            # bool per step
    meet_time: int | None      # first T with agreement through the horizon
    censored: bool             # True when no such T was observed
    lambda_gap_sum: float      # sum of state gaps from meet_time on
    seed: int

    @property
    def times(self):
        return np.arange(self.t_min, self.t_max + 1)

    def gap(self, norm: str = "abs") -> np.ndarray:
        a = np.atleast_2d(self.lam.T).T
        b = np.atleast_2d(self.lam_prime.T).T
        return np.max(np.abs(a - b), axis=1)

    def to_csv(self, fileobj, x_values: np.ndarray | None = None):
        w = csv.writer(fileobj)
        xcols = []
        if x_values is not None:
            d = x_values.shape[1]
            xcols = ["x"] if d == 1 else [f"x_{j + 1}" for j in range(d)]
        lam2 = np.atleast_2d(self.lam.T).T
        lamp2 = np.atleast_2d(self.lam_prime.T).T
        k = lam2.shape[1]
        lcols = ["lambda"] if k == 1 else [f"lambda_{j + 1}" for j in range(k)]
        pcols = ["lambda_prime"] if k == 1 else [f"lambda_prime_{j + 1}" for j in range(k)]
        w.writerow(["t"] + xcols + lcols + ["y"] + pcols + ["y_prime", "met"])
        fmt = lambda v: format(float(v), ".17g")
        for i, t in enumerate(range(self.t_min, self.t_max + 1)):
            row = [t]
            if x_values is not None:
                row += [fmt(v) for v in x_values[i]]
            row += [fmt(v) for v in lam2[i]]
            row.append(fmt(self.y[i]))
            row += [fmt(v) for v in lamp2[i]]
            row += [fmt(self.y_prime[i]), int(self.met[i])]
            w.writerow(row)


def couple_forward(model: ModelSpec, s0, s0_prime, path: CovariatePath, seed: int) -> CouplingTrace:
    """Advance two chains through the same environment under maximal coupling.

    At each step the observation pair is drawn so that disagreement happens
    with exactly the total-variation probability at the current state pair;
    both chains then move through the shared link and covariate.  Identical
    states take a glued fast path (zero TV keeps the chains together).
    """
    rng = generator(seed, _SEED_COUPLE)
    kernel, link = model.kernel, model.link
    n = len(path)
    vector = kernel.state_dim > 1
    lam = np.asarray(s0, dtype=float).copy() if vector else float(s0)
    lamp = np.asarray(s0_prime, dtype=float).copy() if vector else float(s0_prime)
    _check_state(model, lam, "initial state")
    _check_state(model, lamp, "initial state (prime)")
    shape = (n, kernel.state_dim) if vector else (n,)
    lam_h = np.empty(shape)
    lamp_h = np.empty(shape)
    y_h = np.empty(n)
    yp_h = np.empty(n)
    met_h = np.empty(n, dtype=bool)
    for i in range(n):
        lam_h[i], lamp_h[i] = lam, lamp
        same = np.array_equal(lam, lamp)
        if same:
            y = kernel.sample(lam, rng)
            yp, met = y, True
        else:
            draw = kernel.maximal_couple(lam, lamp, rng)
            y, yp, met = draw.y, draw.y_prime, draw.met
        y_h[i], yp_h[i], met_h[i] = y, yp, met
        x = path.values[i]
        lam = link_apply(link, lam, y, x)
        lamp = link_apply(link, lamp, yp, x)
        _check_state(model, lam, f"step t={path.t_min + i}")
        _check_state(model, lamp, f"step t={path.t_min + i} (prime)")
    # first time from which every recorded draw agreed; unmet residual
    # draws come from disjoint supports, so met is equivalent to Y-equality
    not_met = np.flatnonzero(~met_h)
    if len(not_met) == 0:
        meet_idx = 0
    elif not_met[-1] == n - 1:
        meet_idx = None
    else:
        meet_idx = int(not_met[-1]) + 1
    if meet_idx is None:
        meet_time, censored, gap_sum = None, True, float("nan")
    else:
        meet_time, censored = path.t_min + meet_idx, False
        a = np.atleast_2d(lam_h.T).T[meet_idx:]
        b = np.atleast_2d(lamp_h.T).T[meet_idx:]
        gap_sum = float(np.max(np.abs(a - b), axis=1).sum())
    return CouplingTrace(
        path.t_min, path.t_max, lam_h, lamp_h, y_h, yp_h, met_h,
        meet_time, censored, gap_sum, seed,
    )


# ---------------------------------------------------------------------------
# empirical measures and backward iteration
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class EmpiricalMeasure:
    """Uniformly weighted sample approximation of a backward law."""

    points: np.ndarray  # (n,) scalar or (n, dim) vector states
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.size == 0:
            raise InvalidSpec("empirical measure must be nonempty")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    def __len__(self):
        return self.points.shape[0]

    @property
    def dim(self) -> int:
        return 1 if self.points.ndim == 1 else self.points.shape[1]

    def to_csv(self, fileobj):
        w = csv.writer(fileobj)
        pts = np.atleast_2d(self.points.T).T
        k = pts.shape[1]
        w.writerow(["point"] if k == 1 else [f"point_{j + 1}" for j in range(k)])
        for row in pts:
            w.writerow([format(float(v), ".17g") for v in row])


def _obs_stream(seed: int, replicas: int) -> IndexedStream:
    return IndexedStream(split_seed(seed, _SEED_OBS), _TAG_BACKWARD, replicas)


def backward_measure(
    model: ModelSpec, s0, n: int, path: CovariatePath, replicas: int, seed: int,
    t_end: int = 0,
) -> EmpiricalMeasure:
    """Empirical law of the state at t_end after n backward-started steps.

    Every replica starts at s0 at time t_end - n and runs to t_end along
    the fixed path.  Observations are drawn by inverse transform from
    per-(time, replica) uniforms, so runs sharing a seed are coupled on
    common time indices regardless of n or s0.
    """
    if n < 1:
        raise InvalidSpec("backward_measure needs n >= 1")
    if replicas < 100:
        raise InvalidSpec("backward_measure needs replicas >= 100")
    t_start = t_end - n
    if path.t_min > t_start or path.t_max < t_end - 1:
        raise PathTooShort(
            f"path [{path.t_min}, {path.t_max}] does not cover [{t_start}, {t_end - 1}]"
        )
    kernel, link = model.kernel, model.link
    vector = kernel.state_dim > 1
    stream = _obs_stream(seed, replicas)
    if vector:
        lam = np.tile(np.asarray(s0, dtype=float), (replicas, 1))
    else:
        lam = np.full(replicas, float(s0))
    _check_state(model, lam, "start state")
    for t in range(t_start, t_end):
        u = stream.uniforms(t, 1)[0]
        y = kernel.sample_inverse(lam, u)
        lam = link_apply(link, lam, y, path.value_at(t))
        if not kernel.domain_contains(lam):
            raise DomainViolation(f"backward step t={t}: state left the domain")
    meta = {
        "n_backward": n, "t_end": t_end, "replicas": replicas, "seed": seed,
        "start_state": np.asarray(s0).tolist() if vector else float(s0),
        "path_hash": path.spec_hash,
    }
    return EmpiricalMeasure(lam, meta)


def coupled_backward_cost(
    model: ModelSpec, s0, s0_prime, n: int, path: CovariatePath, replicas: int, seed: int,
    t_end: int = 0,
) -> float:
    """Transport cost of the synchronized coupling of two backward runs.

    Both chains consume the same per-(time, replica) uniforms; their state
    gap is propagated multiplicatively through the link's exact state
    coefficient whenever the coupled observations agree, so separations
    stay representable far below the resolution of the states themselves.
    The mean of min(gap, 1) is the cost of an explicit coupling of the two
    backward laws and hence an upper bound for their W1 distance.
    """
    if model.kernel.state_dim > 1:
        raise InvalidSpec("gap tracking is defined for scalar-state models")
    if n < 1:
        raise InvalidSpec("need n >= 1")
    t_start = t_end - n
    if path.t_min > t_start or path.t_max < t_end - 1:
        raise PathTooShort("path does not cover the backward window")
    kernel, link = model.kernel, model.link
    stream = _obs_stream(seed, replicas)
    lam = np.full(replicas, float(s0))
    lamp = np.full(replicas, float(s0_prime))
    gap = np.full(replicas, abs(float(s0_prime) - float(s0)))
    floor = link.floor
    for t in range(t_start, t_end):
        u = stream.uniforms(t, 1)[0]
        x = path.value_at(t)
        y = np.asarray(kernel.sample_inverse(lam, u), dtype=float)
        yp = np.asarray(kernel.sample_inverse(lamp, u), dtype=float)
        lam_next = link_apply(link, lam, y, x)
        lamp_next = link_apply(link, lamp, yp, x)
        same_y = y == yp
        unclamped = np.ones(replicas, dtype=bool)
        if floor is not None:
            unclamped = (lam_next > floor) & (lamp_next > floor)
        mult = same_y & unclamped
        new_gap = np.abs(lamp_next - lam_next)
        if mult.any():
            coefs = np.abs(links_mod.state_coefficients(link, y, x))
            new_gap[mult] = coefs[mult] * gap[mult]
        lam, lamp, gap = lam_next, lamp_next, new_gap
    return float(np.minimum(gap, 1.0).mean())


def push_measure(
    model: ModelSpec, measure: EmpiricalMeasure, path: CovariatePath, t: int, seed: int
) -> EmpiricalMeasure:
    """Push an empirical law one step through the random kernel at time t.

    Uses the same per-(time, replica) uniforms as a backward run with this
    seed would use at index t, so pushed and directly-computed measures
    stay coupled.
    """
    replicas = len(measure)
    stream = _obs_stream(seed, replicas)
    u = stream.uniforms(t, 1)[0]
    y = model.kernel.sample_inverse(measure.points, u)
    lam = link_apply(model.link, measure.points, y, path.value_at(t))
    if not model.kernel.domain_contains(lam):
        raise DomainViolation(f"push step t={t}: state left the domain")
    meta = dict(measure.meta)
    meta["t_end"] = t + 1
    meta["pushed"] = True
    return EmpiricalMeasure(lam, meta)


# ---------------------------------------------------------------------------
# Wasserstein-1 under the truncated metric
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class W1Result:
    value: float
    monotone_upper: float | None  # sorted-coupling cost; valid upper bound in 1-d
    exact: bool                   # assignment solved on the full point sets
    n_used: int
    bootstrap: bool = False
    spread: float = 0.0           # max-min over subsample draws when not exact

    def __float__(self):
        return self.value


def _cost_matrix(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    if a.ndim == 1:
        c = np.abs(a[:, None] - b[None, :])
    else:
        c = np.max(np.abs(a[:, None, :] - b[None, :, :]), axis=2)
    return np.minimum(c, 1.0)


def _assignment_cost(a: np.ndarray, b: np.ndarray) -> float:
    c = _cost_matrix(a, b)
    r, col = linear_sum_assignment(c)
    # exactly-rounded sum: optimal assignments tied in exact arithmetic
    # (common for collinear transport) then report identical costs
    return math.fsum(c[r, col]) / len(a)


def _monotone_cost(a: np.ndarray, b: np.ndarray) -> float | None:
    if a.ndim != 1:
        return None
    return float(np.minimum(np.abs(np.sort(a) - np.sort(b)), 1.0).mean())


def _stratified_subsample(x: np.ndarray, k: int, rng) -> np.ndarray:
    order = np.argsort(x if x.ndim == 1 else x[:, 0], kind="stable")
    strata = np.array_split(order, k)
    picks = [s[rng.integers(0, len(s))] for s in strata]
    return x[np.array(picks)]


def wasserstein1(
    mu, nu, *, allow_bootstrap: bool = True, seed: int = 0,
    max_exact: int = MAX_EXACT_ASSIGNMENT, subsample_draws: int = 8,
) -> W1Result:
    """W1 under min(|s-s'|, 1) between two uniform empirical measures.

    The exact optimal-transport cost comes from an assignment solve on the
    full cost matrix (the truncated metric is concave in the distance, so
    the sorted coupling is only an upper bound and is reported as such).
    Larger inputs are handled by stratified subsampling to ``max_exact``
    points, averaged over ``subsample_draws`` draws.
    """
    a = mu.points if isinstance(mu, EmpiricalMeasure) else np.asarray(mu, dtype=float)
    b = nu.points if isinstance(nu, EmpiricalMeasure) else np.asarray(nu, dtype=float)
    if (a.ndim == 1) != (b.ndim == 1) or (a.ndim > 1 and a.shape[1] != b.shape[1]):
        raise SizeMismatch("measures live in different state spaces")
    bootstrap = False
    if len(a) != len(b):
        if not allow_bootstrap:
            raise SizeMismatch(f"point counts differ ({len(a)} vs {len(b)}) and bootstrap is disabled")
        rng = generator(seed, 71)
        target = max(len(a), len(b))
        if len(a) < target:
            a = a[rng.integers(0, len(a), size=target)]
        if len(b) < target:
            b = b[rng.integers(0, len(b), size=target)]
        bootstrap = True
    n = len(a)
    if n <= max_exact:
        return W1Result(_assignment_cost(a, b), _monotone_cost(a, b), True, n, bootstrap)
    rng = generator(seed, 72)
    vals = []
    for _ in range(subsample_draws):
        sa = _stratified_subsample(a, max_exact, rng)
        sb = _stratified_subsample(b, max_exact, rng)
        vals.append(_assignment_cost(sa, sb))
    vals = np.asarray(vals)
    return W1Result(
        float(vals.mean()), _monotone_cost(a, b), False, max_exact, bootstrap,
        float(vals.max() - vals.min()),
    )


def wasserstein1_bruteforce(a: np.ndarray, b: np.ndarray) -> float:
    """Exhaustive minimum over all couplings (permutations); tiny n only."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    n = len(a)
    if n > 9:
        raise InvalidSpec("brute force oracle limited to n <= 9")
    c = _cost_matrix(a, b)
    rows = np.arange(n)
    best = math.inf
    for perm in itertools.permutations(range(n)):
        best = min(best, math.fsum(c[rows, perm]))
    return best / n


# ---------------------------------------------------------------------------
# stationary sampling by doubling
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class StationaryResult:
    measure: EmpiricalMeasure
    converged: bool
    achieved_gap: float
    n_final: int
    history: tuple[tuple[int, float], ...]  # (n, gap to the n/2 measure)

    def to_dict(self):
        return {
            "converged": self.converged,
            "achieved_gap": self.achieved_gap,
            "n_final": self.n_final,
            "history": [[n, g] for n, g in self.history],
        }


def stationary_sampler(
    model: ModelSpec, tol: float, max_n: int, replicas: int, seed: int, s0=None
) -> StationaryResult:
    """Approximate the quenched stationary law at time 0 by backward doubling.

    Doubles the backward horizon from 25, extending one environment path
    into the past (counter-based streams keep the shared suffix fixed),
    until consecutive measures are within ``tol`` in W1.  Non-convergence
    returns the last measure with a diagnostic rather than raising.
    """
    if tol <= 0:
        raise InvalidSpec("tol must be positive")
    k = max_n / 25.0
    if max_n < 50 or abs(k - 2 ** round(math.log2(k))) > 1e-9:
        raise InvalidSpec("max_n must be 25 times a power of 2, at least 50")
    if s0 is None:
        s0 = model.start_state()
    env_seed = split_seed(seed, _SEED_ENV)
    n = 25
    path = generate_path(model.covariates, -n, -1, env_seed)
    mu = backward_measure(model, s0, n, path, replicas, seed)
    history = []
    while 2 * n <= max_n:
        m = 2 * n
        path = generate_path(model.covariates, -m, -1, env_seed)
        mu2 = backward_measure(model, s0, m, path, replicas, seed)
        gap = wasserstein1(mu, mu2).value
        history.append((m, gap))
        if gap < tol:
            return StationaryResult(mu2, True, gap, m, tuple(history))
        n, mu = m, mu2
    return StationaryResult(mu, False, history[-1][1] if history else math.inf, n, tuple(history))


# ---------------------------------------------------------------------------
# environment control statistics and regeneration times
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class WStats:
    """Truncated drift/contraction statistics of the environment path.

    w1: delta_{t-1} + sum_i gamma_{t-1}...gamma_{t-i} delta_{t-i-1}
    w2/w3: sup over j in [h, H] of the backward gamma/kappa products
    w4: sum over s in [0, H] of phi(kappa_{t+s}...kappa_t)
    Tail estimates extrapolate past H geometrically from the empirical
    mean of log gamma and log kappa.
    """

    times: np.ndarray
    w1: np.ndarray
    w2: np.ndarray
    w3: np.ndarray
    w4: np.ndarray
    h: int
    H: int
    w1_tail: np.ndarray
    w2_tail: np.ndarray
    w3_tail: np.ndarray
    w4_tail: np.ndarray
    gamma_mean_log: float
    kappa_mean_log: float

    def __len__(self):
        return len(self.times)

    def to_csv(self, fileobj):
        w = csv.writer(fileobj)
        w.writerow(["t", "w1", "w2", "w3", "w4"])
        fmt = lambda v: format(float(v), ".17g")
        for i, t in enumerate(self.times):
            w.writerow([int(t), fmt(self.w1[i]), fmt(self.w2[i]), fmt(self.w3[i]), fmt(self.w4[i])])


def w_stats(
    model: ModelSpec, path: CovariatePath, h: int, H: int,
    gamma_map=None, delta_map=None, kappa_map=None, phi: PhiSpec | None = None,
) -> WStats:
    """Evaluate the four control statistics at every interior time of the path.

    gamma/delta default to the drift certificate of the model's growth
    envelope, kappa to the exact link contraction, phi to the kernel rate.
    """
    if not 1 <= h <= H:
        raise InvalidSpec("need 1 <= h <= H")
    if kappa_map is None:
        kappa_map = contraction_map(model.link)
    if phi is None:
        phi = model.kernel.phi()
    if gamma_map is None or delta_map is None:
        from .verify import drift_certificate

        g, d = drift_certificate(model)
        gamma_map = gamma_map or g
        delta_map = delta_map or d
    t_lo = path.t_min + H + 1
    t_hi = path.t_max - H
    if t_hi < t_lo:
        raise PathTooShort(f"path of length {len(path)} too short for H={H}")
    kappa = np.asarray(kappa_map.evaluate(path.values), dtype=float)
    gamma = np.asarray(gamma_map.evaluate(path.values), dtype=float)
    delta = np.asarray(delta_map.evaluate(path.values), dtype=float)
    floor = 1e-300
    g_mean_log = float(np.mean(np.log(np.maximum(gamma, floor))))
    k_mean_log = float(np.mean(np.log(np.maximum(kappa, floor))))
    rho_g = math.exp(min(g_mean_log, 700.0))
    rho_k = math.exp(min(k_mean_log, 700.0))
    delta_bar = float(delta.mean())
    phi1 = phi.linear_coefficient

    times = np.arange(t_lo, t_hi + 1)
    m = len(times)
    w1 = np.empty(m); w2 = np.empty(m); w3 = np.empty(m); w4 = np.empty(m)
    w1_tail = np.empty(m); w2_tail = np.empty(m); w3_tail = np.empty(m); w4_tail = np.empty(m)
    geo_g = rho_g / (1.0 - rho_g) if rho_g < 1 else math.inf
    geo_k = rho_k / (1.0 - rho_k) if rho_k < 1 else math.inf
    for j, t in enumerate(times):
        it = t - path.t_min
        gwin = gamma[it - H: it][::-1]          # gamma_{t-1} ... gamma_{t-H}
        cpg = np.cumprod(gwin)
        dwin = delta[it - H - 1: it][::-1]      # delta_{t-1} ... delta_{t-H-1}
        w1[j] = dwin[0] + float(cpg @ dwin[1:])
        w2[j] = float(cpg[h - 1:].max())
        kwin = kappa[it - H: it][::-1]
        cpk = np.cumprod(kwin)
        w3[j] = float(cpk[h - 1:].max())
        cf = np.cumprod(kappa[it: it + H + 1])  # kappa_t ... kappa_{t+s}
        w4[j] = float(np.sum(phi.evaluate(cf)))
        w1_tail[j] = cpg[-1] * delta_bar * geo_g
        w2_tail[j] = cpg[-1] * rho_g
        w3_tail[j] = cpk[-1] * rho_k
        w4_tail[j] = phi1 * cf[-1] * geo_k
    return WStats(times, w1, w2, w3, w4, h, H, w1_tail, w2_tail, w3_tail, w4_tail,
                  g_mean_log, k_mean_log)


@dataclass(frozen=True)
class RegenerationResult:
    times: np.ndarray       # accepted times, spacing > h
    m_counts: np.ndarray    # number of accepted times <= t, aligned with stats.times
    C: float
    h: int
    smallest_admitting_C: float | None  # set when times is empty

    def __len__(self):
        return len(self.times)

    def to_dict(self):
        return {
            "times": [int(t) for t in self.times],
            "C": self.C,
            "h": self.h,
            "count": int(len(self.times)),
            "smallest_admitting_C": self.smallest_admitting_C,
        }


def regeneration_times(stats: WStats, C: float, h: int | None = None) -> RegenerationResult:
    """Greedy scan for times passing all four thresholds with spacing > h.

    m_counts[i] counts accepted times up to stats.times[i] inclusive.  An
    empty outcome reports the smallest C that would admit at least one time.
    """
    if C <= 1:
        raise InvalidSpec("threshold constant C must exceed 1")
    if h is None:
        h = stats.h
    ok = (stats.w1 <= C) & (stats.w2 <= 1 - 1 / C) & (stats.w3 <= 1 - 1 / C) & (stats.w4 <= C)
    accepted = []
    last = None
    for t, good in zip(stats.times, ok):
        if good and (last is None or t - last > h):
            accepted.append(int(t))
            last = t
    accepted = np.asarray(accepted, dtype=np.int64)
    m_counts = np.searchsorted(accepted, stats.times, side="right")
    smallest = None
    if len(accepted) == 0:
        with np.errstate(divide="ignore"):
            need = np.maximum.reduce([
                stats.w1, stats.w4,
                np.where(stats.w2 < 1, 1.0 / (1.0 - stats.w2), np.inf),
                np.where(stats.w3 < 1, 1.0 / (1.0 - stats.w3), np.inf),
            ])
        m = float(np.min(need))
        smallest = None if math.isinf(m) else max(m, 1.0 + 1e-9)
    return RegenerationResult(accepted, m_counts, C, h, smallest)


def calibrate_regeneration(
    model: ModelSpec, path: CovariatePath, H: int,
    c_grid=(2.0, 4.0, 8.0, 16.0, 32.0, 64.0, 128.0, 256.0, 512.0, 1024.0),
    h_max: int = 50, min_frequency: float = 0.01,
) -> tuple[WStats, float, int]:
    """Pick (h, C) on a pilot path: smallest h admitting any time, then the
    smallest grid C whose acceptance frequency reaches ``min_frequency``."""
    for h in range(1, min(h_max, H) + 1):
        stats = w_stats(model, path, h, H)
        for C in c_grid:
            ok = (stats.w1 <= C) & (stats.w2 <= 1 - 1 / C) & (stats.w3 <= 1 - 1 / C) & (stats.w4 <= C)
            if ok.mean() >= min_frequency:
                return stats, float(C), h
    raise InvalidSpec("no (C, h) in the calibration grid admits regeneration times")
