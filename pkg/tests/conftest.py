from importlib import resources
from pathlib import Path

import numpy as np
import pytest

from fastvqe.hamiltonian import FermionHamiltonian, read_fcidump, symmetrize_eri

DATA = Path(str(resources.files("fastvqe") / "data"))

# Full-CI energies from an independent solver (pyscf direct_spin1), frozen.
FCI_REFERENCE = {
    "h2_sto3g": -1.1372838344885006,
    "h4_chain": -2.1663874486347625,
    "water_cas66": -75.99743923155904,
    "h10_frag_cas66": -5.587924515433812,
    "h10_local": -5.6293256817437225,
}


def fixture_path(name: str) -> Path:
    return DATA / name


def load(name: str) -> FermionHamiltonian:
    return read_fcidump(DATA / f"{name}.fcidump")


def random_hamiltonian(rng: np.random.Generator, norb: int, n_alpha: int, n_beta: int, scale: float = 0.5) -> FermionHamiltonian:
    h = rng.normal(size=(norb, norb))
    h = 0.5 * (h + h.T)
    # positive semidefinite ERI keeps the model physical
    X = rng.normal(size=(norb * norb, norb * norb)) * scale / norb
    g = (X @ X.T).reshape(norb, norb, norb, norb)
    return FermionHamiltonian(float(rng.normal()), h, symmetrize_eri(g), n_alpha, n_beta)


@pytest.fixture
def rng():
    return np.random.default_rng(20240531)


@pytest.fixture(scope="session")
def water():
    return load("water_cas66")


@pytest.fixture(scope="session")
def h4():
    return load("h4_chain")


@pytest.fixture(scope="session")
def h2():
    return load("h2_sto3g")


# one verdict line per acceptance criterion, echoed in the terminal summary
ACCEPTANCE: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        terminalreporter.write_line(ACCEPTANCE[k])
