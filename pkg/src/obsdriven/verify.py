"""Assumption certification: contraction, drift, and total-variation rates.

Three checks mirror the three standing assumptions.  The contraction check
(a1) extracts the exact Lipschitz map of the link, Monte-Carlo estimates
its log-moment with a 99% three-way verdict, and certifies the Lipschitz
inequality on a random grid.  The drift check (a2) picks the route the
model family admits: binary/categorical kernels only need log-moments of
x -> f(s0, y, x); everything else goes through the growth envelope and the
conditional-moment constant D.  The rate check (a3) sweeps the kernel's
total-variation oracle against its closed-form bound on a deterministic
grid of state pairs.

Verdicts are three-way (pass / fail / inconclusive): a log-moment whose
sign cannot be settled at 99% confidence must not be called either way.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from . import links as links_mod
from .covariates import (
    CoefficientMap,
    ConstantMap,
    DerivedMap,
    MomentEstimate,
    abs_map,
    log_moment_estimate,
    log_plus_moment_estimate,
    stationary_draws,
    sum_map,
)
from .engine import ModelSpec
from .errors import UnsupportedCombination
from .kernels import PhiSpec
from .links import (
    ArmaLikeLink,
    CategoryTable,
    LinearLink,
    ThresholdLink,
    apply as link_apply,
    contraction_map,
    growth_envelope,
    structurally_nonnegative,
)
from .rngstream import generator, split_seed

SCHEMA = "obsdriven.verification/1"
LIP_TOL = 1e-12


@dataclass(frozen=True)
class VerifyConfig:
    mc_n: int = 10_000
    grid_size: int = 200
    tol: float = 1e-6
    oracle_tol: float = 1e-7
    lipschitz_n: int = 1000
    seed: int = 20240801

    def to_dict(self):
        return {
            "mc_n": self.mc_n, "grid_size": self.grid_size, "tol": self.tol,
            "oracle_tol": self.oracle_tol, "lipschitz_n": self.lipschitz_n, "seed": self.seed,
        }


# ---------------------------------------------------------------------------
# shared helpers
# ---------------------------------------------------------------------------

def _observation_menu(model: ModelSpec):
    """Finite observation alphabets for the binary/categorical route."""
    fam = model.kernel.family
    if fam.startswith("bernoulli"):
        return [0, 1]
    if fam == "multinomial":
        return list(range(model.kernel.n_categories))
    return None


def _reference_state(model: ModelSpec):
    # the route only needs existence at some s0; zero (floored into the
    # domain) is canonical and the conclusion does not depend on it
    return model.start_state()


def _random_states(model: ModelSpec, n: int, rng) -> np.ndarray:
    k = model.kernel
    if k.state_dim > 1:
        return rng.normal(0.0, 3.0, size=(n, k.state_dim))
    floor = k.domain_floor()
    if floor is None:
        return rng.normal(0.0, 5.0, size=n)
    return floor + rng.exponential(3.0, size=n)


def drift_certificate(model: ModelSpec) -> tuple[CoefficientMap, CoefficientMap]:
    """(gamma, delta) maps with P_x V <= gamma(x) V + delta(x), V(s)=1+|s|.

    Binary/categorical route: gamma is the link contraction and the
    observation term is absorbed through the reference state.  Envelope
    route: gamma = kappa + kappa_tilde and delta collects the intercept
    plus the conditional-moment constant D.
    """
    menu = _observation_menu(model)
    kappa = contraction_map(model.link)
    if menu is not None:
        s0 = _reference_state(model)
        link = model.link

        def delta_fn(x, _link=link, _s0=s0, _menu=tuple(menu), _k=kappa):
            m = max(
                float(np.max(np.abs(np.atleast_1d(link_apply(_link, _s0, y, x)))))
                for y in _menu
            )
            return max(0.0, 1.0 + m - float(_k.evaluate(x)))

        return kappa, DerivedMap("1 + max_y |f(s0,y,x)| - kappa", delta_fn)
    env = growth_envelope(model.link)
    D = model.kernel.conditional_moment(_reference_state(model), model.kernel.moment_order)[1]
    gamma = sum_map("kappa + kappa_tilde", env.kappa_map, env.kappa_tilde_map)

    def delta_fn(x, _env=env, _D=D, _g=gamma):
        return max(
            0.0,
            1.0 + float(_env.kappa_tilde_map.evaluate(x)) * _D
            + float(_env.delta_map.evaluate(x)) - float(_g.evaluate(x)),
        )

    return gamma, DerivedMap("1 + kappa_tilde D + delta_tilde - gamma", delta_fn)


def _structural_floor(link, obs_term_nonnegative: bool) -> float | None:
    """A provable lower bound of f on its domain, if one is derivable.

    Needs nonnegative coefficient maps, a nonnegative observation term
    (even order, or observations that cannot be negative) and constant
    intercepts.
    """
    if not obs_term_nonnegative:
        return None

    def const(m):
        return m.c if isinstance(m, ConstantMap) else None

    if isinstance(link, LinearLink) and not isinstance(link.kappa_tilde, CategoryTable):
        if link.kappa.nonnegative and link.kappa_tilde.nonnegative:
            return const(link.delta_tilde)
    if isinstance(link, ThresholdLink):
        rs = (link.regime_in, link.regime_out)
        if all(r.kappa.nonnegative and r.kappa_tilde.nonnegative for r in rs):
            cs = [const(r.gamma) for r in rs]
            if all(c is not None for c in cs):
                return min(cs)
    return None


def domain_compatible(model: ModelSpec) -> tuple[bool, str]:
    """Can the link provably keep states inside the kernel domain?"""
    kfloor = model.kernel.domain_floor()
    if kfloor is None:
        return True, "state space unbounded below"
    link = model.link
    if link.floor is not None:
        if link.floor >= kfloor - 1e-12:
            return True, f"floor clamp at {link.floor}"
        return False, f"floor {link.floor} lies below the domain bound {kfloor}"
    obs_nonneg = link.order == 2 or model.kernel.family in ("poisson", "negbinomial")
    if kfloor == 0.0 and obs_nonneg and structurally_nonnegative(link):
        return True, "structurally nonnegative coefficients"
    sf = _structural_floor(link, obs_nonneg)
    if sf is not None and sf >= kfloor:
        return True, f"structural intercept bound {sf}"
    return False, f"no floor clamp and no structural bound >= {kfloor}"


# ---------------------------------------------------------------------------
# A1: contraction
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class A1Report:
    kappa_label: str
    moment: MomentEstimate
    lipschitz_pass: bool
    lipschitz_max_violation: float
    verdict: str = field(init=False)

    def __post_init__(self):
        if not self.lipschitz_pass or self.moment.verdict == "nonnegative":
            v = "fail"
        elif self.moment.verdict == "negative":
            v = "pass"
        else:
            v = "inconclusive"
        object.__setattr__(self, "verdict", v)

    def to_dict(self):
        return {
            "kappa": self.kappa_label,
            "log_moment": self.moment.to_dict(),
            "lipschitz_pass": self.lipschitz_pass,
            "lipschitz_max_violation": self.lipschitz_max_violation,
            "verdict": self.verdict,
        }


def check_a1(model: ModelSpec, mc_n: int = 10_000, seed: int = 0, lipschitz_n: int = 1000) -> A1Report:
    """Contraction-in-state check: log-moment sign plus a Lipschitz grid."""
    kappa = contraction_map(model.link)
    est = log_moment_estimate(kappa, model.covariates, mc_n, split_seed(seed, 1))
    rng = generator(seed, 2)
    xs = stationary_draws(model.covariates, lipschitz_n, split_seed(seed, 3))
    s = _random_states(model, lipschitz_n, rng)
    sp = _random_states(model, lipschitz_n, rng)
    worst = 0.0
    for i in range(lipschitz_n):
        y = model.kernel.sample(s[i], rng)
        x = xs[i]
        fa = link_apply(model.link, s[i], y, x)
        fb = link_apply(model.link, sp[i], y, x)
        lhs = model.state_distance(fa, fb)
        rhs = float(kappa.evaluate(x)) * model.state_distance(s[i], sp[i])
        worst = max(worst, lhs - rhs)
    label = getattr(kappa, "label", None) or repr(kappa)
    return A1Report(label, est, worst <= LIP_TOL, worst)


# ---------------------------------------------------------------------------
# A2: drift
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class A2Report:
    case: str
    order: int
    envelope: dict | None
    gamma_estimate: MomentEstimate | None
    delta_log_plus: MomentEstimate | None
    case2_kappa_estimate: MomentEstimate | None
    case2_regime2_estimate: MomentEstimate | None
    category_log_plus: dict | None
    drift_constant_D: float | None
    domain_ok: bool
    domain_reason: str
    verdict: str = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "verdict", self._verdict())

    def _verdict(self) -> str:
        if not self.domain_ok:
            return "fail"
        if self.case in ("binary", "categorical"):
            return "pass"  # finite log+ moments established by construction
        if self.case == "pratique2-case2":
            vs = {self.case2_kappa_estimate.verdict, self.case2_regime2_estimate.verdict}
            if vs == {"negative"}:
                return "pass"
            if "nonnegative" in vs:
                return "fail"
            return "inconclusive"
        v = self.gamma_estimate.verdict
        return {"negative": "pass", "nonnegative": "fail"}.get(v, "inconclusive")

    def to_dict(self):
        return {
            "case": self.case,
            "order": self.order,
            "V": "V(s) = 1 + |s|",
            "envelope": self.envelope,
            "gamma_log_moment": self.gamma_estimate.to_dict() if self.gamma_estimate else None,
            "delta_log_plus_moment": self.delta_log_plus.to_dict() if self.delta_log_plus else None,
            "case2_kappa_log_moment": self.case2_kappa_estimate.to_dict() if self.case2_kappa_estimate else None,
            "case2_regime2_log_moment": self.case2_regime2_estimate.to_dict() if self.case2_regime2_estimate else None,
            "category_log_plus_moments": self.category_log_plus,
            "drift_constant_D": self.drift_constant_D,
            "domain_ok": self.domain_ok,
            "domain_reason": self.domain_reason,
            "verdict": self.verdict,
        }


def check_a2(model: ModelSpec, mc_n: int = 10_000, seed: int = 0) -> A2Report:
    """Drift check via the route the model family admits."""
    ok, reason = domain_compatible(model)
    menu = _observation_menu(model)
    if menu is not None:
        s0 = _reference_state(model)
        cat_reports = {}
        for y in menu:
            m = DerivedMap(
                f"|f(s0,{y},x)|",
                lambda x, _y=y, _l=model.link, _s0=s0: float(
                    np.max(np.abs(np.atleast_1d(link_apply(_l, _s0, _y, x))))
                ),
            )
            est = log_plus_moment_estimate(m, model.covariates, mc_n, split_seed(seed, 10 + y))
            cat_reports[str(y)] = est.to_dict()
        case = "binary" if model.kernel.family.startswith("bernoulli") else "categorical"
        return A2Report(case, model.link.order, None, None, None, None, None,
                        cat_reports, None, ok, reason)

    env = growth_envelope(model.link)
    D = model.kernel.conditional_moment(_reference_state(model), model.kernel.moment_order)[1]
    gamma = sum_map("kappa + kappa_tilde", env.kappa_map, env.kappa_tilde_map)
    gamma_est = log_moment_estimate(gamma, model.covariates, mc_n, split_seed(seed, 20))
    delta_lp = log_plus_moment_estimate(env.delta_map, model.covariates, mc_n, split_seed(seed, 21))
    est_k = est_k2 = None
    if isinstance(model.link, ThresholdLink) and env.case == "pratique2-case2":
        kappa = contraction_map(model.link)
        est_k = log_moment_estimate(kappa, model.covariates, mc_n, split_seed(seed, 22))
        r2 = model.link.regime_out
        reg2 = sum_map("|kappa_2| + |kappa_tilde_2|", abs_map(r2.kappa), abs_map(r2.kappa_tilde))
        est_k2 = log_moment_estimate(reg2, model.covariates, mc_n, split_seed(seed, 23))
    return A2Report(env.case, model.link.order, env.to_dict(), gamma_est, delta_lp,
                    est_k, est_k2, None, D, ok, reason)


# ---------------------------------------------------------------------------
# A3: total-variation rate
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class A3Report:
    phi: dict
    n_pairs: int
    max_violation: float
    worst_pair: tuple
    tol: float
    verdict: str = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "verdict", "pass" if self.max_violation <= self.tol else "fail")

    def to_dict(self):
        def noarr(v):
            return v.tolist() if isinstance(v, np.ndarray) else v
        return {
            "phi": self.phi,
            "n_pairs": self.n_pairs,
            "max_violation": self.max_violation,
            "worst_pair": [noarr(self.worst_pair[0]), noarr(self.worst_pair[1])],
            "tol": self.tol,
            "verdict": self.verdict,
        }


def check_a3(
    model: ModelSpec, grid_size: int = 200, tol: float = 1e-6,
    oracle_tol: float = 1e-7, phi_override: PhiSpec | None = None,
) -> A3Report:
    """Sweep tv_exact <= 1 - exp(-phi(|s-s'|)) + tol over the standard grid."""
    if grid_size < 50:
        raise UnsupportedCombination("a3 grid needs at least 50 pairs")
    kernel = model.kernel
    phi = phi_override if phi_override is not None else kernel.phi()
    pairs = kernel.standard_pairs(grid_size)
    worst, worst_pair = -math.inf, pairs[0]
    for s, sp in pairs:
        h = kernel.state_distance(s, sp)
        bound = 1.0 - math.exp(-float(phi.evaluate(h)))
        v = kernel.tv_exact(s, sp, oracle_tol) - bound
        if v > worst:
            worst, worst_pair = v, (s, sp)
    return A3Report(phi.to_dict(), len(pairs), float(worst), worst_pair, tol)


# ---------------------------------------------------------------------------
# aggregation
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class VerificationReport:
    a1: A1Report
    a2: A2Report
    a3: A3Report
    config: VerifyConfig
    model: dict
    overall: str = field(init=False)

    def __post_init__(self):
        verdicts = [self.a1.verdict, self.a2.verdict, self.a3.verdict]
        if "fail" in verdicts:
            overall = "fail"
        elif "inconclusive" in verdicts:
            overall = "inconclusive"
        else:
            overall = "pass"
        object.__setattr__(self, "overall", overall)

    def to_dict(self):
        return {
            "schema": SCHEMA,
            "model": self.model,
            "config": self.config.to_dict(),
            "a1": self.a1.to_dict(),
            "a2": self.a2.to_dict(),
            "a3": self.a3.to_dict(),
            "overall": self.overall,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2) + "\n"

    def to_text(self) -> str:
        lines = [
            f"overall: {self.overall.upper()}",
            f"  contraction (a1): {self.a1.verdict}  "
            f"[E log kappa = {self.a1.moment.mean:.6g} +- {2.576 * self.a1.moment.std_error:.2g}, "
            f"lipschitz {'ok' if self.a1.lipschitz_pass else 'VIOLATED'}]",
            f"  drift (a2): {self.a2.verdict}  [route {self.a2.case}, "
            f"domain {'ok' if self.a2.domain_ok else 'BROKEN: ' + self.a2.domain_reason}]",
        ]
        if self.a2.gamma_estimate is not None:
            lines.append(
                f"    E log gamma = {self.a2.gamma_estimate.mean:.6g} "
                f"+- {2.576 * self.a2.gamma_estimate.std_error:.2g} ({self.a2.gamma_estimate.verdict})"
            )
        lines.append(
            f"  tv rate (a3): {self.a3.verdict}  "
            f"[max violation {self.a3.max_violation:.3g} over {self.a3.n_pairs} pairs, tol {self.a3.tol:g}]"
        )
        return "\n".join(lines) + "\n"


def full_report(model: ModelSpec, config: VerifyConfig | None = None) -> VerificationReport:
    """Run all three checks with recorded seeds and grids."""
    cfg = config or VerifyConfig()
    a1 = check_a1(model, cfg.mc_n, split_seed(cfg.seed, 1), cfg.lipschitz_n)
    a2 = check_a2(model, cfg.mc_n, split_seed(cfg.seed, 2))
    a3 = check_a3(model, cfg.grid_size, cfg.tol, cfg.oracle_tol)
    return VerificationReport(a1, a2, a3, cfg, model.to_dict())
