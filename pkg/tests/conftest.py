import numpy as np
import pytest

from patchgarb import _kernels_py
from patchgarb.data import synth_dataset
from patchgarb.image import ImageSample

try:
    from patchgarb import _kernels as _kernels_c
except ImportError:  # pragma: no cover - extension not built
    _kernels_c = None

BACKENDS = [pytest.param(_kernels_py, id="python"),
            pytest.param(_kernels_c, id="cython",
                         marks=pytest.mark.skipif(_kernels_c is None,
                                                  reason="compiled kernels not built"))]


@pytest.fixture(params=BACKENDS)
def backend(request):
    return request.param


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def random_image(seed, h=32, w=32, c=3, label=0, source_id="img"):
    px = np.random.default_rng(seed).random((h, w, c), dtype=np.float32)
    return ImageSample(px, label, source_id)


@pytest.fixture(scope="session")
def synth_root(tmp_path_factory):
    root = tmp_path_factory.mktemp("synth")
    synth_dataset(root, seed=1, per_class=20, hw=32, classes=3)
    return root


ACCEPTANCE_LINES = []


@pytest.fixture
def acceptance():
    """Record one PASS/FAIL line per acceptance criterion."""
    def report(number, passed, detail):
        line = f"criterion {number}: {'PASS' if passed else 'FAIL'} - {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
        return passed
    return report


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda l: int(l.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
