import numpy as np
import pytest

import curvepulse as cp

BUILTINS = list(cp.BUILTIN_CURVES)


@pytest.fixture(scope="session")
def builtin_curves():
    return {name: cp.builtin_curve(name) for name in BUILTINS}


@pytest.fixture(scope="session")
def builtin_frenet(builtin_curves):
    return {name: cp.frenet_data(c) for name, c in builtin_curves.items()}


@pytest.fixture(scope="session")
def builtin_pulses(builtin_frenet):
    return {name: cp.pulses_from_curve(f) for name, f in builtin_frenet.items()}


def random_special_unitary(rng):
    axis = rng.normal(size=3)
    axis /= np.linalg.norm(axis)
    angle = rng.uniform(0.0, 2.0 * np.pi)
    return cp.axis_angle_unitary(axis, angle)


def helix_curve(a=1.0, b=0.5, span=2.0 * np.pi, n_samples=4096):
    def sampler(lam):
        lam = np.atleast_1d(lam)
        return np.stack([a * np.cos(lam), a * np.sin(lam), b * lam], axis=1)

    return cp.reparameterize_by_arclength(sampler, (0.0, span), n_samples, source_tag="helix")
