"""Fixtures compartilhadas; os módulos do pacote são importados pelo path, como no app.py"""

import math
import os
import sys

import pytest

sys.path.append(os.path.join(os.path.dirname(__file__), '..', 'scripts', 'superficies_minimas'))

from dominio_plano import make_annulus, make_disk, sample_grid  # noqa: E402
from nucleo_weierstrass import catenoid_triple, enneper_triple  # noqa: E402


@pytest.fixture
def anel_padrao():
    return make_annulus(0.5, 2.0)


@pytest.fixture
def anel_labirinto():
    """C com R - r = 0.75, onde cabem labirintos de N = 3 e N = 4"""
    return make_annulus(0.25, 1.0)


@pytest.fixture
def disco_unitario():
    return make_disk(1.0)


@pytest.fixture
def catenoide(anel_padrao):
    return catenoid_triple(anel_padrao)


@pytest.fixture
def enneper(disco_unitario):
    return enneper_triple(disco_unitario)


@pytest.fixture
def grade_64x256(anel_padrao):
    return sample_grid(anel_padrao, 64, 256)


@pytest.fixture
def anel_exponencial():
    return make_annulus(math.exp(-1), math.exp(1))
