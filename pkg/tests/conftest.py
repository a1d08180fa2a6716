"""Shared model builders for the test suite."""

import numpy as np
import pytest

import obsdriven as od

CM = od.ConstantMap


def poisson_ingarch_x() -> od.ModelSpec:
    """Count benchmark: kappa=0.4, kappa_tilde=0.3|x|, delta_tilde=1, X ~ U(0,1) i.i.d."""
    link = od.LinearLink(
        CM(0.4, True), od.AffineAbsMap(0.0, (0.3,), True), CM(1.0, True),
        order=1, floor=0.0,
    )
    return od.ModelSpec(od.Poisson(), link, od.IID(od.Uniform(0.0, 1.0)))


def poisson_ingarch_const() -> od.ModelSpec:
    """Same recursion with the covariate frozen at 1 (plain INGARCH)."""
    link = od.LinearLink(CM(0.4, True), CM(0.3, True), CM(1.0, True), order=1, floor=0.0)
    return od.ModelSpec(od.Poisson(), link, od.Constant((1.0,)))


def logit_benchmark() -> od.ModelSpec:
    """Binary benchmark: kappa=0.5, kappa_tilde=0.8|x|, delta_tilde=-0.2."""
    link = od.LinearLink(
        CM(0.5), od.AffineAbsMap(0.0, (0.8,), True), CM(-0.2), order=1,
    )
    return od.ModelSpec(od.BernoulliLogit(), link, od.IID(od.Uniform(0.0, 1.0)))


def divergent_model() -> od.ModelSpec:
    """kappa = 1.1: no stationary solution exists."""
    link = od.LinearLink(
        CM(1.1, True), od.AffineAbsMap(0.0, (0.3,), True), CM(1.0, True),
        order=1, floor=0.0,
    )
    return od.ModelSpec(od.Poisson(), link, od.IID(od.Uniform(0.0, 1.0)))


def all_kernels():
    """One configured instance per kernel family (location in all three noises)."""
    return [
        od.Poisson(),
        od.NegBinomial(3),
        od.BernoulliLogit(),
        od.BernoulliProbit(),
        od.Multinomial(3),
        od.GarchGaussian(1.0),
        od.Location(od.GaussianNoise(1.0)),
        od.Location(od.LaplaceNoise(1.0)),
        od.Location(od.StudentTNoise(2.0)),
    ]


@pytest.fixture
def benchmark_model():
    return poisson_ingarch_x()
