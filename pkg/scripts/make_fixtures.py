"""Regenerate the bundled FCIDUMP fixtures and their reference energies.

Needs pyscf, which is not a runtime dependency of tvha_bench:

    pip install pyscf
    python scripts/make_fixtures.py
"""
import json
from pathlib import Path

from pyscf import fci, gto, mcscf, scf
from pyscf.tools import fcidump

OUT = Path(__file__).resolve().parent.parent / "fixtures"


def _write_full(name, atom, nelec):
    mol = gto.M(atom=atom, basis="sto-3g", unit="Angstrom")
    mf = scf.RHF(mol).run(conv_tol=1e-12)
    fcidump.from_scf(mf, str(OUT / f"{name}.fcidump"), tol=1e-15)
    e_fci = fci.FCI(mf).kernel()[0]
    return {"hf": float(mf.e_tot), "fci": float(e_fci), "geometry": atom,
            "n_orbitals": int(mol.nao), "n_electrons": nelec}


def _write_lih_active(ncas=3, nelecas=2):
    atom = "Li 0 0 0; H 0 0 1.595"
    mol = gto.M(atom=atom, basis="sto-3g", unit="Angstrom")
    mf = scf.RHF(mol).run(conv_tol=1e-12)
    mc = mcscf.CASCI(mf, ncas, nelecas)
    h1, ecore = mc.get_h1eff()
    h2 = mc.get_h2eff()
    fcidump.from_integrals(str(OUT / "lih_as.fcidump"), h1, h2, ncas, nelecas,
                           nuc=ecore, tol=1e-15)
    e_cas = mc.kernel()[0]
    # HF energy of the active-space Hamiltonian equals the full RHF energy
    return {"hf": float(mf.e_tot), "fci": float(e_cas), "geometry": atom,
            "n_orbitals": ncas, "n_electrons": nelecas,
            "active_space": {"ncas": ncas, "nelecas": nelecas}}


def main():
    OUT.mkdir(exist_ok=True)
    refs = {
        "h2": _write_full("h2", "H 0 0 0; H 0 0 0.735", 2),
        "h4": _write_full("h4", "H 0 0 0; H 0 0 1.0; H 0 0 2.0; H 0 0 3.0", 4),
        "lih_as": _write_lih_active(),
    }
    (OUT / "references.json").write_text(json.dumps(refs, indent=2) + "\n")


if __name__ == "__main__":
    main()
