import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from mvopoly import OpFamily
from mvopoly.functional import Diagonal, DiscreteMeasure, FunctionalSpec, Kernel, QuadratureDensity

settings.register_profile("default", max_examples=25, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


def lebesgue(*box, scale=1.0):
    return FunctionalSpec([QuadratureDensity(tuple(box), "lebesgue", None, scale)])


def discrete(points, weights):
    return FunctionalSpec([DiscreteMeasure([(np.atleast_1d(np.asarray(p, float)), w)
                                            for p, w in zip(points, weights)])])


def kernel_1d(rho=1.0, n=24):
    xs, ws = np.polynomial.legendre.leggauss(n)
    xs, ws = rho * xs, rho * ws
    return Kernel(xs[:, None], (0.8 * xs + 0.1)[:, None], ws * (1 + 0.3 * xs / rho))


def kernel_2d(rho=1.0, n=12):
    xs, ws = np.polynomial.legendre.leggauss(n)
    xs, ws = rho * xs, rho * ws
    X, Y = np.meshgrid(xs, xs)
    P = np.c_[X.ravel(), Y.ravel()]
    W = np.outer(ws, ws).ravel()
    return Kernel(P, 0.9 * P[:, ::-1] * np.array([1, 0.8]) + 0.05, W * (1 + 0.2 * P[:, 0] / rho))


@pytest.fixture(scope="session")
def legendre():
    return OpFamily.from_functional(lebesgue((-1, 1)), 5)


@pytest.fixture(scope="session")
def box2():
    return OpFamily.from_functional(lebesgue((-1, 1), (-1, 1)), 4)


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(12345)


__all__ = ["lebesgue", "discrete", "kernel_1d", "kernel_2d", "Diagonal"]


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
