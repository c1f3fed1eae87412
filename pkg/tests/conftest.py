import numpy as np
import pytest

from rgwalk import kernels


@pytest.fixture(params=kernels.available_backends())
def backend(request):
    return request.param


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def random_state(grid, rng):
    from rgwalk.walk import SpinorField

    psi = rng.normal(size=(2, grid.size)) + 1j * rng.normal(size=(2, grid.size))
    return SpinorField(grid, psi / np.linalg.norm(psi))


def random_mixed_density(grid, rng, rank=3):
    from rgwalk.density import DensityField, density_from_pure

    comp = sum(density_from_pure(random_state(grid, rng)).comp * w
               for w in rng.dirichlet(np.ones(rank)))
    return DensityField(grid, comp, "v")


def pytest_terminal_summary(terminalreporter):
    mod = __import__("sys").modules.get("test_acceptance") or __import__("sys").modules.get("tests.test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(results):
        ok, detail = results[n]
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'} criterion {n:2d}: {detail}")
