import numpy as np
import pytest
from scipy.spatial.transform import Rotation

from dqloc.algebra import Pose, dq_from_pose
from dqloc.scene import NOISE_FREE, NOISE_LOW, build_planar_network, gen_measurements, make_rng


def random_pose(rng, scale=2.0):
    R = Rotation.random(random_state=rng).as_matrix()
    return Pose(R, rng.normal(size=3) * scale)


def random_unit_dq(rng, scale=2.0):
    d = dq_from_pose(random_pose(rng, scale))
    # either sign of the double cover is a valid input
    return d if rng.random() < 0.5 else -d


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def net6():
    return build_planar_network(6)


@pytest.fixture(scope="session")
def meas_free(net6):
    return gen_measurements(net6, NOISE_FREE, None)


@pytest.fixture(scope="session")
def meas_noisy(net6):
    return gen_measurements(net6, NOISE_LOW, make_rng(7, "noise"))


_ACCEPTANCE_KEY = pytest.StashKey[list]()


@pytest.fixture
def report(request):
    """Record one PASS/FAIL line for an acceptance criterion."""
    lines = request.config.stash.setdefault(_ACCEPTANCE_KEY, [])

    def _report(number, passed, detail):
        line = f"{'PASS' if passed else 'FAIL'} criterion {number}: {detail}"
        lines.append((number, line))
        print(line)
        return passed

    return _report


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_ACCEPTANCE_KEY, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(lines):
            terminalreporter.write_line(line)
