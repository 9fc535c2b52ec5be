import numpy as np
import pytest

from edgenilm import signalgen


def naive_dft(x, n=None):
    """O(n^2) reference DFT: X[k] = sum_j x[j] exp(-2 pi i j k / n)."""
    x = np.asarray(x, dtype=np.complex128)
    if n is not None:
        x = x[:n]
    n = len(x)
    j = np.arange(n)
    W = np.exp(-2j * np.pi * np.outer(j, j) / n)
    return W @ x


def central_difference(f, x, eps=1e-4):
    """Gradient of scalar f at array x by per-coordinate central differences."""
    x = np.asarray(x, dtype=np.float64)
    g = np.zeros_like(x)
    flat = x.ravel()
    gflat = g.ravel()
    for k in range(flat.size):
        orig = flat[k]
        flat[k] = orig + eps
        fp = f(x)
        flat[k] = orig - eps
        fm = f(x)
        flat[k] = orig
        gflat[k] = (fp - fm) / (2.0 * eps)
    return g


def gradient_close(analytic, numeric, tol=1e-4):
    a = np.asarray(analytic).ravel()
    n = np.asarray(numeric).ravel()
    denom = np.maximum(np.abs(a) + np.abs(n), 1e-8)
    return float(np.max(np.abs(a - n) / denom)) < tol


@pytest.fixture(scope="session")
def presets():
    return {m.id: m for m in signalgen.default_appliances()}


@pytest.fixture(scope="session")
def quiet_presets(presets):
    return {k: signalgen.without_noise(m) for k, m in presets.items()}
