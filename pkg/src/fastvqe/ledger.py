"""Subtractive multi-layer energy combination (ONIOM and wave-function-in-DFT)."""

from __future__ import annotations

import json
import math
from pathlib import Path
from typing import Mapping

HARTREE_TO_KCAL = 627.5094740631

KNOWN_COMPONENTS = (
    "e_mm_full",
    "e_mm_region",
    "e_qm_region",
    "e_emb_psi_a",
    "e_dft_total",
    "e_dft_a",
)


class LedgerError(ValueError):
    pass


class EnergyLedger(dict):
    """Named energy components in Hartree.

    A plain ``dict`` with validation; unknown keys are rejected so typos surface
    early instead of as a "missing component" later.
    """

    def __init__(self, components: Mapping[str, float] | None = None, **kwargs: float):
        super().__init__()
        for name, value in {**(components or {}), **kwargs}.items():
            if name not in KNOWN_COMPONENTS:
                raise LedgerError(f"unknown ledger component {name!r}")
            if isinstance(value, bool) or not isinstance(value, (int, float)):
                raise LedgerError(f"component {name!r} must be a number, got {value!r}")
            if not math.isfinite(value):
                raise LedgerError(f"component {name!r} is not finite")
            self[name] = float(value)

    def require(self, *names: str) -> list[float]:
        missing = [n for n in names if n not in self]
        if missing:
            raise LedgerError(f"ledger is missing component(s): {', '.join(missing)}")
        return [self[n] for n in names]

    @classmethod
    def from_json(cls, path: str | Path) -> "EnergyLedger":
        data = json.loads(Path(path).read_text())
        if not isinstance(data, dict):
            raise LedgerError("ledger file must hold a flat JSON object")
        return cls(data)


def wf_in_dft_energy(ledger: Mapping[str, float]) -> float:
    """QM-region energy: embedded correlated energy plus the DFT environment correction."""
    emb, dft_total, dft_a = EnergyLedger(ledger).require("e_emb_psi_a", "e_dft_total", "e_dft_a")
    return emb + dft_total - dft_a


def oniom_total(ledger: Mapping[str, float]) -> float:
    """Total energy E_MM(full) - E_MM(region) + E_QM(region).

    When ``e_qm_region`` is absent it is produced from the embedding components.
    """
    ledger = EnergyLedger(ledger)
    mm_full, mm_region = ledger.require("e_mm_full", "e_mm_region")
    if "e_qm_region" in ledger:
        qm = ledger["e_qm_region"]
    elif all(k in ledger for k in ("e_emb_psi_a", "e_dft_total", "e_dft_a")):
        qm = wf_in_dft_energy(ledger)
    else:
        raise LedgerError(
            "ledger is missing component(s): e_qm_region "
            "(or e_emb_psi_a, e_dft_total, e_dft_a)"
        )
    return mm_full - mm_region + qm
