import math
import os
import sys

import pytest

sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

from config import DEFAULT_FIBER_SPEED
from dynamics import SimConfig
from params import AtomSpec, CavitySpec, FiberSpec, SetupConfig, from_hz
from protocols import ap_gaussian_schedule

# Fiber length giving FSR = 1e5 rad/s exactly
TOY_LENGTH = math.pi * DEFAULT_FIBER_SPEED / 1e5
TOY_G_MAX = 5000.0
# Adiabatic on the toy fiber: g0²T is about half an FSR
TOY_T = 3e-3


def make_setup(loss2=0.0, attenuation=0.0, length_L=TOY_LENGTH, gamma_sp=0.0, t2=13e-6, length_l=0.02):
    return SetupConfig(
        cavity=CavitySpec(length_l=length_l, t2=t2, loss2=loss2),
        fiber=FiberSpec(length_L=length_L, attenuation=attenuation),
        atom=AtomSpec(g_atc=from_hz(1.4e6), delta_at=from_hz(100e6), gamma_sp=gamma_sp),
    )


@pytest.fixture
def toy_setup():
    """Lossless 2 cm cavities on a fiber with FSR = 1e5 rad/s"""
    return make_setup()


@pytest.fixture
def lossy_setup():
    return make_setup(loss2=2e-6, attenuation=0.2)


@pytest.fixture
def fast_sim():
    return SimConfig(n_modes=2, frame='lab', n_samples=101)


@pytest.fixture
def toy_ap_schedule(toy_setup):
    omega_max = toy_setup.atom.drive_for(TOY_G_MAX)
    return ap_gaussian_schedule(omega_max, T=TOY_T, x_spl=1.4)


@pytest.fixture
def aarhus_doc():
    return {
        'cavity': {'length_l': {'value': 0.01, 'unit': 'm'}, 't2': {'value': 1270, 'unit': 'ppm'},
                   'loss2': {'value': 511.2, 'unit': 'ppm'}},
        'fiber': {'length_L': {'value': 500, 'unit': 'm'}, 'attenuation': {'value': 0.2, 'unit': 'dB_per_km'}},
        'atom': {'g_atc': {'value': 1.4, 'unit': 'MHz'}, 'delta_at': {'value': 100, 'unit': 'MHz'}},
    }
