"""Regenerate the bundled integral fixtures.

Requires pyscf, which is a development-only tool here; the package itself never
imports it. Run from the repository root::

    python tools/make_fixtures.py
"""

import json
import pathlib

import numpy as np
from pyscf import ao2mo, gto, lo, mcscf, scf
from pyscf.tools import fcidump

DATA = pathlib.Path(__file__).resolve().parents[1] / "src" / "fastvqe" / "data"


def chain(n, spacing, alternate=None):
    atoms = []
    x = 0.0
    for i in range(n):
        atoms.append(f"H {x:.6f} 0 0")
        if alternate is not None and i % 2 == 1:
            x += alternate
        else:
            x += spacing
    return "; ".join(atoms)


def full_space(mol, path):
    mf = scf.RHF(mol).run(conv_tol=1e-12)
    fcidump.from_scf(mf, str(path), tol=1e-14)
    return mf


def write_h2():
    mol = gto.M(atom="H 0 0 0; H 0 0 0.74", basis="sto-3g", verbose=0)
    full_space(mol, DATA / "h2_sto3g.fcidump")


def write_h4():
    mol = gto.M(atom=chain(4, 1.0), basis="sto-3g", verbose=0)
    full_space(mol, DATA / "h4_chain.fcidump")


def write_water_cas66():
    mol = gto.M(
        atom="O 0 0 0.1173; H 0 0.7572 -0.4692; H 0 -0.7572 -0.4692",
        basis="6-31g",
        verbose=0,
    )
    mf = scf.RHF(mol).run(conv_tol=1e-12)
    cas = mcscf.CASCI(mf, 6, 6)
    h1, ecore = cas.get_h1eff()
    h2 = ao2mo.restore(1, cas.get_h2eff(), 6)
    fcidump.from_integrals(str(DATA / "water_cas66.fcidump"), h1, h2, 6, 6, ecore, ms=0, tol=1e-14)
    e_casci = cas.kernel()[0]
    return e_casci


def write_h10_fragment():
    # alternating bonds so the localized occupied orbitals sit on H2 units
    mol = gto.M(atom=chain(10, 0.74, alternate=1.4), basis="sto-3g", verbose=0)
    mf = scf.RHF(mol).run(conv_tol=1e-12)
    nocc = mol.nelectron // 2
    occ = mf.mo_coeff[:, :nocc]
    loc = lo.ibo.ibo(mol, occ, verbose=0)
    # keep the canonical virtuals, localize only the occupied block
    mo = np.hstack([loc, mf.mo_coeff[:, nocc:]])
    h1 = mo.T @ mf.get_hcore() @ mo
    h2 = ao2mo.restore(1, ao2mo.kernel(mol, mo), mo.shape[1])
    fcidump.from_integrals(
        str(DATA / "h10_local.fcidump"), h1, h2, mo.shape[1], mol.nelectron,
        mol.energy_nuc(), ms=0, tol=1e-14,
    )
    atom_ao = {}
    for mu, label in enumerate(mol.ao_labels(fmt=False)):
        atom_ao.setdefault(str(label[0]), []).append(mu)
    payload = {
        "n_ao": mol.nao,
        "n_mo": mo.shape[1],
        "occupied_count": nocc,
        "coefficients": mo.tolist(),
        "atom_ao_map": atom_ao,
    }
    (DATA / "h10_local_mo.json").write_text(json.dumps(payload, indent=1))
    return mf.e_tot


if __name__ == "__main__":
    write_h2()
    write_h4()
    print("water CAS(6,6) CASCI:", write_water_cas66())
    print("H10 RHF:", write_h10_fragment())
