import time

import pytest

from qdatlas.polyfield import ComplexPoly, SymmetricFamily
from qdatlas.vortex import solve_vortex

# wall-clock of each session solve, for the end-to-end runtime budget
SOLVE_SECONDS: dict[str, float] = {}

_FINE = 12.0 / 511.0


def _timed_solve(name, target, radius, h, tol):
    t0 = time.perf_counter()
    sol = solve_vortex(target, radius=radius, h=h, tol=tol)
    SOLVE_SECONDS[name] = time.perf_counter() - t0
    return sol


@pytest.fixture(scope="session")
def sol_m1b1_fine():
    return _timed_solve("m1b1", SymmetricFamily(1, 0.0, 1.0), 6.0, _FINE,
                        1e-8)


@pytest.fixture(scope="session")
def sol_m2b1_fine():
    return _timed_solve("m2b1", SymmetricFamily(2, 0.0, 1.0), 6.0, _FINE,
                        1e-8)


@pytest.fixture(scope="session")
def sol_m1b0_fine():
    return _timed_solve("m1b0", SymmetricFamily(1, 1.0, 0.0), 6.0, _FINE,
                        1e-8)


@pytest.fixture(scope="session")
def sol_m1b1_coarse():
    return solve_vortex(SymmetricFamily(1, 0.0, 1.0), radius=6.0,
                        h=12.0 / 127.0, tol=1e-10)


@pytest.fixture(scope="session")
def sol_const():
    return solve_vortex(ComplexPoly((1.0 + 0j,)), radius=3.0, h=6.0 / 127.0,
                        tol=1e-10)
