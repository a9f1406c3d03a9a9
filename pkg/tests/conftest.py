import math

import pytest

from weakamp.beamgeom import OpticalLayout, PiezoCalibration
from weakamp.scenario import load_preset
from weakamp.weakcore import GaussianMeter, phase_for_probability

WAVELENGTH = 780e-9
K0 = 2 * math.pi / WAVELENGTH
A = 640e-6
L_LM = 0.48
L_MD = 1.14
SIGMA = 1240e-6
# SBC phase giving a 2% dark-port probability
PHI_2PCT = phase_for_probability(0.02)
PHI_7P2 = math.radians(7.2)
# kick from a 500 mV pk-pk drive through the 91 pm/mV, 3.5 cm lever arm chain
K_500MV = 2 * (0.5 * 91e-12 / 1e-3 / 0.035) * K0


@pytest.fixture
def meter():
    return GaussianMeter(A, K0)


@pytest.fixture
def layout():
    return OpticalLayout(l_lm=L_LM, l_md=L_MD, a=A, k0=K0)


@pytest.fixture
def piezo():
    return PiezoCalibration(response=91e-12 / 1e-3, lever_arm=0.035)


@pytest.fixture(scope="session")
def preset():
    return load_preset("dixon2009")
