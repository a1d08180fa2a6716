"""Latent-state recursions f(s, y, x) and their contraction/growth envelopes.

Three shapes: a linear recursion with covariate-dependent coefficients, a
two-regime threshold recursion switching on where the observation falls,
and an ARMA-like form a(x)s + g(y,x) - a(x)y.  All are Lipschitz in the
state argument only (no continuity in y is needed), and each exposes its
exact per-covariate Lipschitz constant plus an additive growth envelope
|f(s,y,x)| <= kappa(x)|s| + kappa_tilde(x)|y|^i + delta_tilde(x).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .covariates import (
    CoefficientMap,
    ConstantMap,
    DerivedMap,
    abs_map,
    map_from_dict,
    max_map,
    provable_sup,
    sum_map,
)
from .errors import InvalidSpec


# ---------------------------------------------------------------------------
# intervals
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FixedInterval:
    lo: float
    hi: float

    def __post_init__(self):
        if not self.lo <= self.hi:
            raise InvalidSpec("interval needs lo <= hi")

    def contains(self, y, x) -> np.ndarray:
        y = np.asarray(y, dtype=float)
        return (y >= self.lo) & (y <= self.hi)

    @property
    def is_bounded(self) -> bool:
        return math.isfinite(self.lo) and math.isfinite(self.hi)

    def sup_abs(self, x) -> float:
        return max(abs(self.lo), abs(self.hi))

    def to_dict(self):
        return {"kind": "fixed", "lo": self.lo, "hi": self.hi}


@dataclass(frozen=True)
class CovariateScaled:
    """[lo |x|, hi |x|] with |x| the summed componentwise absolute value."""

    lo: float
    hi: float

    def __post_init__(self):
        if not self.lo <= self.hi:
            raise InvalidSpec("interval needs lo <= hi")

    @staticmethod
    def _scale(x) -> float:
        return float(np.abs(np.atleast_1d(np.asarray(x, dtype=float))).sum())

    def contains(self, y, x) -> np.ndarray:
        a = self._scale(x)
        y = np.asarray(y, dtype=float)
        return (y >= self.lo * a) & (y <= self.hi * a)

    @property
    def is_bounded(self) -> bool:
        return math.isfinite(self.lo) and math.isfinite(self.hi)

    def sup_abs(self, x) -> float:
        return max(abs(self.lo), abs(self.hi)) * self._scale(x)

    def to_dict(self):
        return {"kind": "covariate_scaled", "lo": self.lo, "hi": self.hi}


IntervalMap = FixedInterval | CovariateScaled


def interval_from_dict(d: dict) -> IntervalMap:
    kind = d.get("kind")
    if kind == "fixed":
        return FixedInterval(d["lo"], d["hi"])
    if kind == "covariate_scaled":
        return CovariateScaled(d["lo"], d["hi"])
    raise InvalidSpec(f"unknown interval kind {kind!r}")


# ---------------------------------------------------------------------------
# link variants
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CategoryTable:
    """Additive state increment per observation category (multinomial links).

    Column y of the (state_dim x n_categories) table is added to kappa(x)s,
    the one-hot reading of "kappa_tilde(x) y".
    """

    values: tuple[tuple[float, ...], ...]

    def __post_init__(self):
        arr = np.asarray(self.values, dtype=float)
        if arr.ndim != 2:
            raise InvalidSpec("category table must be 2-d")
        object.__setattr__(self, "values", tuple(tuple(row) for row in arr))

    @property
    def array(self) -> np.ndarray:
        return np.asarray(self.values)

    @property
    def n_categories(self) -> int:
        return self.array.shape[1]

    def max_inf_norm(self) -> float:
        return float(np.max(np.abs(self.array)))

    def to_dict(self):
        return {"kind": "category_table", "values": [list(r) for r in self.values]}


@dataclass(frozen=True)
class LinearLink:
    """f(s,y,x) = kappa(x) s + kappa_tilde(x) y^i + delta_tilde(x)."""

    kappa: CoefficientMap
    kappa_tilde: CoefficientMap | CategoryTable
    delta_tilde: CoefficientMap
    order: int = 1
    floor: float | None = None

    def __post_init__(self):
        if self.order not in (1, 2):
            raise InvalidSpec("link order must be 1 or 2")

    @property
    def variant(self) -> str:
        return "linear"

    def to_dict(self):
        return {
            "variant": "linear",
            "kappa": self.kappa.to_dict(),
            "kappa_tilde": self.kappa_tilde.to_dict(),
            "delta_tilde": self.delta_tilde.to_dict(),
            "order": self.order,
            "floor": self.floor,
        }


@dataclass(frozen=True)
class RegimeCoefficients:
    kappa: CoefficientMap
    kappa_tilde: CoefficientMap
    gamma: CoefficientMap

    def to_dict(self):
        return {
            "kappa": self.kappa.to_dict(),
            "kappa_tilde": self.kappa_tilde.to_dict(),
            "gamma": self.gamma.to_dict(),
        }


@dataclass(frozen=True)
class ThresholdLink:
    """Regime 1 applies when y falls in I(x), regime 2 otherwise."""

    regime_in: RegimeCoefficients
    regime_out: RegimeCoefficients
    interval: IntervalMap
    order: int = 1
    floor: float | None = None

    def __post_init__(self):
        if self.order not in (1, 2):
            raise InvalidSpec("link order must be 1 or 2")

    @property
    def variant(self) -> str:
        return "threshold"

    def to_dict(self):
        return {
            "variant": "threshold",
            "regime_in": self.regime_in.to_dict(),
            "regime_out": self.regime_out.to_dict(),
            "interval": self.interval.to_dict(),
            "order": self.order,
            "floor": self.floor,
        }


@dataclass(frozen=True)
class ArmaLikeLink:
    """f(s,y,x) = a(x)s + g(y,x) - a(x)y with g(y,x) = c(x) + b(x) y.

    Driving a location kernel, this gives varying-coefficient ARMA(1,1)
    observations.  The regression g is affine in y by construction, so the
    growth envelope always exists at order 1.
    """

    a: CoefficientMap
    g_intercept: CoefficientMap
    g_slope: CoefficientMap
    floor: float | None = None

    @property
    def order(self) -> int:
        return 1

    @property
    def variant(self) -> str:
        return "arma_like"

    def to_dict(self):
        return {
            "variant": "arma_like",
            "a": self.a.to_dict(),
            "g_intercept": self.g_intercept.to_dict(),
            "g_slope": self.g_slope.to_dict(),
            "floor": self.floor,
        }


LinkSpec = LinearLink | ThresholdLink | ArmaLikeLink


def link_from_dict(d: dict) -> LinkSpec:
    variant = d.get("variant")
    if variant == "linear":
        kt = d["kappa_tilde"]
        kt_obj = CategoryTable(tuple(map(tuple, kt["values"]))) if kt.get("kind") == "category_table" else map_from_dict(kt)
        return LinearLink(
            map_from_dict(d["kappa"]), kt_obj, map_from_dict(d["delta_tilde"]),
            d.get("order", 1), d.get("floor"),
        )
    if variant == "threshold":
        def regime(r):
            return RegimeCoefficients(
                map_from_dict(r["kappa"]), map_from_dict(r["kappa_tilde"]), map_from_dict(r["gamma"])
            )
        return ThresholdLink(
            regime(d["regime_in"]), regime(d["regime_out"]),
            interval_from_dict(d["interval"]), d.get("order", 1), d.get("floor"),
        )
    if variant == "arma_like":
        return ArmaLikeLink(
            map_from_dict(d["a"]), map_from_dict(d["g_intercept"]), map_from_dict(d["g_slope"]),
            d.get("floor"),
        )
    raise InvalidSpec(f"unknown link variant {variant!r}")


# ---------------------------------------------------------------------------
# evaluation
# ---------------------------------------------------------------------------

def apply(link: LinkSpec, s, y, x):
    """Advance the latent state; s and y may be batched along axis 0.

    For multinomial links s has shape (state_dim,) or (n, state_dim) and y
    is a category index (or an index vector); otherwise everything is
    scalar or 1-d batches.  The floor clamp, when configured, is applied
    last; clamping is 1-Lipschitz so contraction constants are unchanged.
    """
    if isinstance(link, LinearLink):
        k = link.kappa.evaluate(x)
        d = link.delta_tilde.evaluate(x)
        if isinstance(link.kappa_tilde, CategoryTable):
            s = np.asarray(s, dtype=float)
            table = link.kappa_tilde.array
            cats = np.asarray(y, dtype=int)
            if s.ndim == 1:
                out = k * s + table[:, int(cats)] + d
            else:
                out = k * s + table[:, cats].T + d
        else:
            kt = link.kappa_tilde.evaluate(x)
            out = k * np.asarray(s, dtype=float) + kt * np.asarray(y, dtype=float) ** link.order + d
    elif isinstance(link, ThresholdLink):
        s = np.asarray(s, dtype=float)
        y = np.asarray(y, dtype=float)
        inside = link.interval.contains(y, x)
        r1, r2 = link.regime_in, link.regime_out
        f1 = r1.kappa.evaluate(x) * s + r1.kappa_tilde.evaluate(x) * y**link.order + r1.gamma.evaluate(x)
        f2 = r2.kappa.evaluate(x) * s + r2.kappa_tilde.evaluate(x) * y**link.order + r2.gamma.evaluate(x)
        out = np.where(inside, f1, f2)
        if s.ndim == 0:
            out = float(out)
    else:
        a = link.a.evaluate(x)
        y = np.asarray(y, dtype=float)
        out = a * np.asarray(s, dtype=float) + link.g_intercept.evaluate(x) + link.g_slope.evaluate(x) * y - a * y
    if link.floor is not None:
        out = np.maximum(out, link.floor)
    if np.ndim(out) == 0:
        return float(out)
    return out


def contraction_map(link: LinkSpec) -> CoefficientMap:
    """Exact per-covariate Lipschitz constant of s -> f(s, y, x)."""
    if isinstance(link, LinearLink):
        return abs_map(link.kappa)
    if isinstance(link, ThresholdLink):
        return max_map(
            "max(|kappa_1|,|kappa_2|)",
            abs_map(link.regime_in.kappa),
            abs_map(link.regime_out.kappa),
        )
    return abs_map(link.a)


def state_coefficients(link: LinkSpec, y, x) -> np.ndarray:
    """The exact multiplier of s in f(s, y, x), elementwise over y.

    Differences of two states sharing (y, x) scale by exactly this factor
    (before any floor clamp); gap-tracking couplings use it to propagate
    separations below floating-point resolution of the states themselves.
    """
    y = np.atleast_1d(np.asarray(y, dtype=float))
    if isinstance(link, LinearLink):
        return np.full(y.shape, float(link.kappa.evaluate(x)))
    if isinstance(link, ThresholdLink):
        k1 = float(link.regime_in.kappa.evaluate(x))
        k2 = float(link.regime_out.kappa.evaluate(x))
        return np.where(link.interval.contains(y, x), k1, k2)
    return np.full(y.shape, float(link.a.evaluate(x)))


@dataclass(frozen=True)
class GrowthEnvelope:
    """Maps certifying |f(s,y,x)| <= kappa|s| + kappa_tilde |y|^i + delta_tilde."""

    kappa_map: CoefficientMap
    kappa_tilde_map: CoefficientMap
    delta_map: CoefficientMap
    order: int
    is_contractive_in_s: bool
    case: str  # linear | pratique2-case1 | pratique2-case2 | arma

    def bound(self, s, y, x) -> float:
        ynorm = float(np.max(np.abs(np.atleast_1d(y))))
        snorm = float(np.max(np.abs(np.atleast_1d(s))))
        return float(
            self.kappa_map.evaluate(x) * snorm
            + self.kappa_tilde_map.evaluate(x) * ynorm**self.order
            + self.delta_map.evaluate(x)
        )

    def to_dict(self):
        return {
            "kappa": self.kappa_map.to_dict(),
            "kappa_tilde": self.kappa_tilde_map.to_dict(),
            "delta_tilde": self.delta_map.to_dict(),
            "order": self.order,
            "is_contractive_in_s": self.is_contractive_in_s,
            "case": self.case,
        }


def _contractive(m: CoefficientMap) -> bool:
    sup = provable_sup(m)
    return sup is not None and sup < 1.0


def growth_envelope(link: LinkSpec) -> GrowthEnvelope:
    """Additive growth envelope of the recursion.

    Threshold links with a bounded interval get the refined envelope: the
    regime-1 observation term is bounded on I(x) and absorbed into the
    intercept, so only the regime-2 slope survives in front of |y|^i.
    """
    if isinstance(link, LinearLink):
        if isinstance(link.kappa_tilde, CategoryTable):
            # one-hot observations: the table term is bounded, so it lives
            # in the intercept and the |y| slope is zero
            k = abs_map(link.kappa)
            extra = link.kappa_tilde.max_inf_norm()
            delta = sum_map(
                "|delta_tilde| + max_y|table|",
                abs_map(link.delta_tilde),
                ConstantMap(extra, nonnegative=True),
            )
            return GrowthEnvelope(k, ConstantMap(0.0, nonnegative=True), delta, link.order, _contractive(k), "linear")
        k = abs_map(link.kappa)
        return GrowthEnvelope(
            k, abs_map(link.kappa_tilde), abs_map(link.delta_tilde),
            link.order, _contractive(k), "linear",
        )

    if isinstance(link, ThresholdLink):
        r1, r2 = link.regime_in, link.regime_out
        k = max_map("max(|kappa_1|,|kappa_2|)", abs_map(r1.kappa), abs_map(r2.kappa))
        gmax = max_map("max(|gamma_1|,|gamma_2|)", abs_map(r1.gamma), abs_map(r2.gamma))
        if link.interval.is_bounded:
            kt1 = abs_map(r1.kappa_tilde)
            interval, order = link.interval, link.order
            absorbed = DerivedMap(
                "sup_{y in I(x)} |kappa_tilde_1(x) y^i|",
                lambda x, _m=kt1, _iv=interval, _o=order: float(_m.evaluate(x)) * _iv.sup_abs(x) ** _o,
            )
            delta = sum_map("max|gamma| + absorbed regime-1 term", gmax, absorbed)
            return GrowthEnvelope(
                k, abs_map(r2.kappa_tilde), delta, link.order, _contractive(k), "pratique2-case2",
            )
        kt = max_map("max(|kt_1|,|kt_2|)", abs_map(r1.kappa_tilde), abs_map(r2.kappa_tilde))
        return GrowthEnvelope(k, kt, gmax, link.order, _contractive(k), "pratique2-case1")

    # ARMA-like: f = a s + (b - a) y + c, so the |y| slope is |b| + |a|
    k = abs_map(link.a)
    kt = sum_map("|g_slope| + |a|", abs_map(link.g_slope), abs_map(link.a))
    return GrowthEnvelope(k, kt, abs_map(link.g_intercept), 1, _contractive(k), "arma")


def structurally_nonnegative(link: LinkSpec) -> bool:
    """True when every branch of f provably maps into [0, inf)."""
    def nn(m):
        return getattr(m, "nonnegative", False)

    if isinstance(link, LinearLink):
        if isinstance(link.kappa_tilde, CategoryTable):
            return nn(link.kappa) and nn(link.delta_tilde) and bool(np.all(link.kappa_tilde.array >= 0))
        return nn(link.kappa) and nn(link.kappa_tilde) and nn(link.delta_tilde)
    if isinstance(link, ThresholdLink):
        return all(
            nn(m)
            for r in (link.regime_in, link.regime_out)
            for m in (r.kappa, r.kappa_tilde, r.gamma)
        )
    return False  # ARMA-like subtracts a(x) y, no structural sign
