import numpy as np
import pytest
from hypothesis import settings

from geoflow.manifold import Circle, ConformalEvolving, ConstantRate, Euclidean, Product, SpaceForm, WarpedCircle

settings.register_profile("geoflow", deadline=None, max_examples=40)
settings.load_profile("geoflow")

STATIC_MODELS = {
    "euclidean2": Euclidean(2),
    "euclidean3": Euclidean(3),
    "sphere3": SpaceForm(3, 1),
    "hyperbolic3": SpaceForm(3, -1),
    "sphere2": SpaceForm(2, 1),
    "flat-torus": Product(Circle(1.0), 1.0),
    "sphere2xS1": Product(SpaceForm(2, 1), 0.7),
}

EVOLVING_MODELS = {
    "conformal-sphere3": ConformalEvolving(SpaceForm(3, 1), ConstantRate(0.3)),
    "warped-sphere2": WarpedCircle(SpaceForm(2, 1), 0.8, ConstantRate(-0.4)),
}


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# one line per acceptance criterion, echoed at the end of the session
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)
