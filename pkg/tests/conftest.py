"""Shared fixtures: expensive spectra are computed once per session."""

import numpy as np
import pytest

from spinorchaos.basis import (ModelParams, build_basis, build_hamiltonian,
                               split_parity_sectors)
from spinorchaos.spectrum import diagonalize


def _model(N, p=0.5, c1=1.0):
    params = ModelParams(N=N, c1=c1, p=p)
    basis = build_basis(N)
    return params, basis, build_hamiltonian(params, basis)


@pytest.fixture(scope="session")
def model30():
    return _model(30)


@pytest.fixture(scope="session")
def spec30(model30):
    return diagonalize(model30[2])


@pytest.fixture(scope="session")
def model60():
    return _model(60)


@pytest.fixture(scope="session")
def spec60(model60):
    return diagonalize(model60[2])


@pytest.fixture(scope="session")
def model100():
    return _model(100)


@pytest.fixture(scope="session")
def spec100(model100):
    return diagonalize(model100[2])


@pytest.fixture(scope="session")
def sector_energies100(model100):
    """Exchange-parity sector eigenvalues at N=100 (no vectors)."""
    _, basis, H = model100
    H_sym, H_anti = split_parity_sectors(H, basis)
    return (diagonalize(H_sym, "sym", compute_vectors=False).energies,
            diagonalize(H_anti, "anti", compute_vectors=False).energies)


@pytest.fixture(scope="session")
def energies150_sym():
    """Symmetric-sector eigenvalues at N=150 (no vectors)."""
    _, basis, H = _model(150)
    H_sym, _ = split_parity_sectors(H, basis)
    return diagonalize(H_sym, "sym", compute_vectors=False).energies


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(20240823)
