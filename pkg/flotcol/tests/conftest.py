import pytest

from .. import column, constitutive

# feed and wash water shared by the laboratory-column examples
FEED = dict(Q_F=8.9927e-5, Q_W=2e-6, phi_F=0.3, psi_F=0.2)
# underflows of the four reference desired steady states
EXAMPLE_Q_U = (5.9972e-5, 6.0083e-5, 6.0155e-5, 6.0171e-5)
EXAMPLE_PHI_E = (0.8443, 0.8472, 0.8491, 0.8495)

DIAMOND = dict(Q_U=5.85e-5, Q_F=8.846e-5, Q_W=2e-6, phi_F=0.3, psi_F=0.2)
SQUARE = dict(Q_U=5.0e-5, Q_F=8.846e-5, Q_W=2e-6, phi_F=0.3, psi_F=0.2)
CIRCLE = dict(Q_U=6.3e-5, Q_F=8.84e-5, Q_W=2e-6, phi_F=0.3, psi_F=0.2)


@pytest.fixture
def params():
    return constitutive.default_params()


@pytest.fixture
def geom():
    return column.DEFAULT_GEOMETRY


@pytest.fixture
def uniform_geom():
    return column.ColumnGeometry(A_U=7.225e-3, A_E=7.225e-3)


@pytest.fixture
def example_point():
    return column.OperatingPoint(Q_U=EXAMPLE_Q_U[0], **FEED)


@pytest.fixture
def diamond():
    return column.OperatingPoint(**DIAMOND)
