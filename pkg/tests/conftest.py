import numpy as np
import pytest
from scipy import integrate

_ACCEPTANCE = []


@pytest.fixture(scope="session")
def acceptance_log():
    """Collects ``(criterion, passed, detail)`` rows printed after the run."""
    return _ACCEPTANCE


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number, passed, detail in sorted(_ACCEPTANCE, key=lambda r: r[0]):
        terminalreporter.write_line(f"criterion {number}: {'PASS' if passed else 'FAIL'}  {detail}")


def integrate_density(logpdf, lo, hi, points=None):
    """Adaptive quadrature of ``exp(logpdf)`` over ``[lo, hi]`` (infinite ends allowed)."""
    f = lambda x: np.exp(logpdf(x)).item()
    kw = dict(epsabs=1e-13, epsrel=1e-12, limit=400)
    if points is not None and np.isfinite(lo) and np.isfinite(hi):
        return integrate.quad(f, lo, hi, points=points, **kw)[0]
    if points is not None:
        # split at the interior points so quad sees each feature
        edges = [lo, *sorted(points), hi]
        return sum(integrate.quad(f, a, b, **kw)[0] for a, b in zip(edges[:-1], edges[1:]))
    return integrate.quad(f, lo, hi, **kw)[0]


def positive_integral(logpdf, scale):
    """Integral over (0, inf) split near the bulk at ``scale``."""
    return integrate_density(logpdf, 0.0, np.inf, points=[scale, 4 * scale, 16 * scale])
