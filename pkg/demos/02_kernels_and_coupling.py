"""Observation kernels: closed-form TV rates, the oracle, maximal coupling.

For each family the closed-form bound 1 - exp(-phi(|s - s'|)) must
dominate the true total-variation distance; the brute-force oracle checks
it numerically.  The maximal coupling then realizes that distance as an
observable disagreement frequency.
"""

import math

import numpy as np

import obsdriven as od
from obsdriven.rngstream import generator

print("=== closed-form rate vs oracle (selected separations) ===")
kernels = [
    od.Poisson(),
    od.NegBinomial(3),
    od.BernoulliLogit(),
    od.BernoulliProbit(),
    od.GarchGaussian(1.0),
    od.Location(od.GaussianNoise(1.0)),
    od.Location(od.LaplaceNoise(1.0)),
    od.Location(od.StudentTNoise(2.0)),
]
print(f"{'kernel':38s} {'h':>6s} {'tv_exact':>10s} {'tv_bound':>10s}")
for k in kernels:
    base = k.domain_floor() if k.domain_floor() is not None else 0.0
    for h in (0.1, 1.0, 5.0):
        tve = k.tv_exact(base, base + h)
        tvb = k.tv_bound(base, base + h)
        assert tve <= tvb + 1e-9
        print(f"{k!r:38s} {h:6.1f} {tve:10.5f} {tvb:10.5f}")

print("\n=== negative binomial: the sharper mixture bound ===")
nb = od.NegBinomial(2)
h = 2.0
print(f"h = {h}: mixture bound {nb.tv_bound_sharp(0, h):.4f} "
      f"<= exponential bound {nb.tv_bound(0, h):.4f}")

print("\n=== maximal coupling meets with probability 1 - TV ===")
for k, s, sp in [
    (od.Poisson(), 0.0, 0.1),
    (od.BernoulliLogit(), 0.0, math.log(3)),
    (od.GarchGaussian(1.0), 1.0, 3.0),
]:
    tv = k.tv_exact(s, sp)
    _, _, met = k.couple_batch(s, sp, 10**5, generator(5))
    print(f"{k!r:38s} tv = {tv:.5f}   empirical disagreement = {1 - met.mean():.5f}")

print("\n=== certified constants for existence-only rates ===")
print("probit phi(h) = d (h + h^2), d =", dict(od.BernoulliProbit().phi().coefficients)[1])
print("gaussian-noise location  D =", dict(od.Location(od.GaussianNoise(1.0)).phi().coefficients)[1])
print("student-t(2) location    D =", od.Location(od.StudentTNoise(2.0)).phi().linear_coefficient)
