"""Command-line entry point: ``fastvqe <subcommand> ...``.

Exit codes: 0 success, 2 input or configuration error, 3 computational failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import sys
from importlib import resources
from pathlib import Path
from typing import Any

import numpy as np

from .circopt import optimize
from .circuit import Circuit, CircuitParseError
from .exact import casci_ground
from .hamiltonian import FcidumpError, hf_energy, read_fcidump, write_fcidump
from .ledger import HARTREE_TO_KCAL, EnergyLedger, LedgerError, oniom_total, wf_in_dft_energy
from .neb import POTENTIALS, MuellerBrown, NebConfig, interpolate_linear, optimize_path
from .orbitals import MoCoefficients, build_active_space
from .solver import FastConfig, fast_vqe_run

log = logging.getLogger("fastvqe")

EXIT_OK, EXIT_INPUT, EXIT_COMPUTE = 0, 2, 3
ORDERING = "blocked: alpha spin orbital p on qubit p, beta on qubit n_orbitals + p"
FIXTURE_PREFIX = "fixture:"


class InputError(Exception):
    """Bad path, malformed file, or invalid configuration (exit 2)."""


def resolve_path(value: str, base: Path | None = None) -> Path:
    """``fixture:NAME`` names a bundled data file; relative paths resolve against ``base``."""
    if value.startswith(FIXTURE_PREFIX):
        name = value[len(FIXTURE_PREFIX):]
        p = Path(str(resources.files("fastvqe") / "data" / name))
    else:
        p = Path(value)
        if not p.is_absolute() and base is not None:
            p = base / p
    if not p.is_file():
        raise InputError(f"file not found: {p}")
    return p.resolve()


def _write_json(path: Path, payload: Any) -> None:
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def _out_dir(value: str) -> Path:
    d = Path(value)
    d.mkdir(parents=True, exist_ok=True)
    return d


@dataclasses.dataclass
class RunConfig:
    fcidump: str
    output_dir: str = "fastvqe_out"
    casci: bool = True
    max_iterations: int = 40
    shots: int = 1024
    selector: str = "fast"
    seed: int = 7
    gate_budget: int | None = 950
    gtol: float = 1e-7
    max_evaluations: int = 2000
    gradient: str = "analytic"
    antihermitian: bool = False
    allow_repeats: bool = False

    @classmethod
    def from_mapping(cls, data: dict) -> "RunConfig":
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = sorted(set(data) - names)
        if unknown:
            raise InputError(f"unknown config keys: {', '.join(unknown)}")
        if "fcidump" not in data:
            raise InputError("config is missing required key 'fcidump'")
        types = {
            "fcidump": str, "output_dir": str, "casci": bool, "max_iterations": int,
            "shots": int, "selector": str, "seed": int, "gate_budget": (int, type(None)),
            "gtol": (int, float), "max_evaluations": int, "gradient": str,
            "antihermitian": bool, "allow_repeats": bool,
        }
        for key, value in data.items():
            expected = types[key]
            bad_bool = isinstance(value, bool) and expected in (int, (int, float), (int, type(None)))
            if bad_bool or not isinstance(value, expected):
                raise InputError(f"config key {key!r} has invalid value {value!r}")
        cfg = cls(**data)
        try:
            cfg.fast_config()
        except ValueError as exc:
            raise InputError(str(exc)) from None
        return cfg

    def fast_config(self) -> FastConfig:
        return FastConfig(
            max_iterations=self.max_iterations, shots=self.shots, selector=self.selector,
            seed=self.seed, gate_budget=self.gate_budget, gtol=float(self.gtol),
            max_evaluations=self.max_evaluations, gradient=self.gradient,
            antihermitian=self.antihermitian, allow_repeats=self.allow_repeats,
        )


def _budget(value: str) -> int | None:
    if value.lower() == "none":
        return None
    try:
        n = int(value)
    except ValueError:
        raise argparse.ArgumentTypeError(f"budget must be an integer or 'none', got {value!r}") from None
    return n


def _load_hamiltonian(path: Path):
    try:
        return read_fcidump(path)
    except (FcidumpError, ValueError) as exc:
        raise InputError(f"{path}: {exc}") from None


def cmd_fastvqe(args) -> int:
    data: dict[str, Any] = {}
    base = None
    if args.config:
        cfg_path = resolve_path(args.config)
        base = cfg_path.parent
        try:
            data = json.loads(cfg_path.read_text())
        except json.JSONDecodeError as exc:
            raise InputError(f"{cfg_path}: invalid JSON ({exc})") from None
        if not isinstance(data, dict):
            raise InputError(f"{cfg_path}: config must be a JSON object")
    overrides = {
        "fcidump": args.fcidump, "output_dir": args.out, "seed": args.seed, "shots": args.shots,
        "max_iterations": args.iterations, "selector": args.selector,
    }
    data.update({k: v for k, v in overrides.items() if v is not None})
    if hasattr(args, "budget_1q"):
        data["gate_budget"] = args.budget_1q
    if args.no_casci:
        data["casci"] = False
    cfg = RunConfig.from_mapping(data)
    fcidump = resolve_path(cfg.fcidump, base)
    cfg.fcidump = str(fcidump)
    H = _load_hamiltonian(fcidump)
    out = _out_dir(cfg.output_dir)
    cfg.output_dir = str(out.resolve())
    _write_json(out / "config.json", dataclasses.asdict(cfg))

    trace = fast_vqe_run(H, cfg.fast_config())
    (out / "trace.jsonl").write_text(trace.to_jsonl())
    last = trace.records[-1] if trace.records else None
    summary: dict[str, Any] = {
        "final_energy_ha": trace.final_energy,
        "hf_energy_ha": trace.hf_energy,
        "iterations": len(trace.records),
        "n_operators": len(trace.ansatz),
        "stop_reason": trace.stop_reason,
        "selector": cfg.selector,
        "seed": cfg.seed,
        "shots": cfg.shots,
        "gates_1q": last.gates_1q if last else 0,
        "gates_2q": last.gates_2q if last else 0,
        "n_qubits": H.n_spin_orbitals,
        "spin_orbital_ordering": ORDERING,
        "operators": [op.label() for op in trace.ansatz.operators],
    }
    if cfg.casci:
        e0 = casci_ground(H)[0]
        err = trace.final_energy - e0
        summary.update(casci_energy_ha=e0, error_ha=err, error_kcal=err * HARTREE_TO_KCAL)
    _write_json(out / "summary.json", summary)
    print(json.dumps({k: summary[k] for k in ("final_energy_ha", "stop_reason") + (("error_kcal",) if cfg.casci else ())}))
    return EXIT_OK


def cmd_casci(args) -> int:
    path = resolve_path(args.fcidump)
    H = _load_hamiltonian(path)
    e0, _, basis = casci_ground(H)
    result = {
        "casci_energy_ha": e0,
        "hf_energy_ha": hf_energy(H, *H.hf_occupation()),
        "dimension": len(basis),
        "n_orbitals": H.n_orbitals,
        "n_alpha": H.n_alpha,
        "n_beta": H.n_beta,
    }
    if args.out:
        _write_json(Path(args.out), result)
    print(json.dumps(result, sort_keys=True))
    return EXIT_OK


def _int_list(value: str) -> list[int]:
    try:
        return [int(v) for v in value.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {value!r}") from None


def cmd_activespace(args) -> int:
    H = _load_hamiltonian(resolve_path(args.fcidump))
    mo_path = resolve_path(args.mo)
    try:
        C = MoCoefficients.from_json(mo_path)
    except (ValueError, json.JSONDecodeError) as exc:
        raise InputError(f"{mo_path}: {exc}") from None
    try:
        Ha, report = build_active_space(
            H, C, args.fragment, args.n_virtuals, args.occ_window, args.conventional_density
        )
    except ValueError as exc:
        raise InputError(str(exc)) from None
    out = _out_dir(args.out)
    write_fcidump(Ha, out / "active.fcidump")
    _write_json(out / "report.json", report.to_dict())
    print(json.dumps({"n_orbitals": Ha.n_orbitals, "n_electrons": Ha.n_electrons}))
    return EXIT_OK


def cmd_circopt(args) -> int:
    path = resolve_path(args.circuit)
    try:
        c = Circuit.from_text(path.read_text())
    except CircuitParseError as exc:
        raise InputError(f"{path}: {exc}") from None
    new, report = optimize(c, args.budget_1q)
    out = _out_dir(args.out)
    (out / "optimized.circ").write_text(f"qubits {new.n_qubits}\n" + new.to_text())
    _write_json(out / "report.json", report)
    print(json.dumps(report, sort_keys=True))
    return EXIT_OK


def cmd_neb(args) -> int:
    potential = POTENTIALS[args.potential]()
    if args.endpoints:
        p = resolve_path(args.endpoints)
        try:
            ends = json.loads(p.read_text())
            reactant, product = np.asarray(ends["reactant"], float), np.asarray(ends["product"], float)
        except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
            raise InputError(f"{p}: endpoints need 'reactant' and 'product' coordinate lists ({exc})") from None
    elif args.potential == "mueller-brown":
        reactant, product = MuellerBrown.MINIMA["A"], MuellerBrown.MINIMA["B"]
    else:
        reactant, product = np.array([-1.0, 0.5]), np.array([1.0, -0.5])
    try:
        path = interpolate_linear(reactant, product, args.images)
        cfg = NebConfig(
            max_force=args.max_force, k_spring=args.k_spring, max_steps=args.max_steps,
            climbing=args.climbing,
        )
    except ValueError as exc:
        raise InputError(str(exc)) from None
    res = optimize_path(path, potential, cfg)
    out = _out_dir(args.out)
    (out / "profile.csv").write_text(res.profile_csv())
    _write_json(out / "neb.json", {
        "converged": res.converged,
        "steps": res.steps,
        "max_force": res.max_force,
        "images": res.path.images.tolist(),
        "below_endpoints": res.below_endpoints,
    })
    sys.stdout.write(res.profile_csv())
    return EXIT_OK


def cmd_combine(args) -> int:
    path = resolve_path(args.ledger)
    try:
        ledger = EnergyLedger.from_json(path)
    except (LedgerError, json.JSONDecodeError) as exc:
        raise InputError(f"{path}: {exc}") from None
    try:
        total = oniom_total(ledger)
        qm = ledger.get("e_qm_region")
        if qm is None:
            qm = wf_in_dft_energy(ledger)
    except LedgerError as exc:
        raise InputError(f"{path}: {exc}") from None
    if args.out:
        _write_json(Path(args.out), {"e_qm_region": qm, "e_total": total})
    print(format(total, ".12g"))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fastvqe", description=__doc__.splitlines()[0])
    parser.add_argument("--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fastvqe", help="run the adaptive VQE loop on an FCIDUMP")
    p.add_argument("--config", help="JSON run configuration")
    p.add_argument("--fcidump", help="integral file (or fixture:NAME)")
    p.add_argument("--out", help="output directory")
    p.add_argument("--seed", type=int)
    p.add_argument("--shots", type=int)
    p.add_argument("--iterations", type=int)
    p.add_argument("--selector", choices=("fast", "adapt"))
    p.add_argument("--budget-1q", type=_budget, default=argparse.SUPPRESS, help="one-qubit gate budget, or 'none'")
    p.add_argument("--no-casci", action="store_true", help="skip the exact reference")
    p.set_defaults(func=cmd_fastvqe)

    p = sub.add_parser("casci", help="exact ground energy in the determinant basis")
    p.add_argument("--fcidump", required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_casci)

    p = sub.add_parser("activespace", help="fragment orbitals plus MP2 natural virtuals")
    p.add_argument("--fcidump", required=True)
    p.add_argument("--mo", required=True, help="MO coefficient JSON")
    p.add_argument("--fragment", type=_int_list, required=True, help="comma-separated atom indices")
    p.add_argument("--n-virtuals", type=int, required=True)
    p.add_argument("--occ-window", type=int, help="correlated occupied orbitals (default: 3, capped at the fragment count)")
    p.add_argument("--conventional-density", action="store_true")
    p.add_argument("--out", default="activespace_out")
    p.set_defaults(func=cmd_activespace)

    p = sub.add_parser("circopt", help="reduce gate counts of a circuit file")
    p.add_argument("--circuit", required=True)
    p.add_argument("--budget-1q", type=_budget, default=950)
    p.add_argument("--out", default="circopt_out")
    p.set_defaults(func=cmd_circopt)

    p = sub.add_parser("neb", help="nudged elastic band on a built-in potential")
    p.add_argument("--potential", choices=sorted(POTENTIALS), default="mueller-brown")
    p.add_argument("--endpoints", help="JSON with 'reactant' and 'product' coordinates")
    p.add_argument("--images", type=int, default=11)
    p.add_argument("--k-spring", type=float, default=0.1)
    p.add_argument("--max-force", type=float, default=1e-3)
    p.add_argument("--max-steps", type=int, default=20000)
    p.add_argument("--climbing", action="store_true")
    p.add_argument("--out", default="neb_out")
    p.set_defaults(func=cmd_neb)

    p = sub.add_parser("combine", help="multi-layer total energy from a ledger")
    p.add_argument("--ledger", required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_combine)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_INPUT
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except Exception as exc:  # noqa: BLE001
        log.debug("computation failed", exc_info=True)
        print(f"computation failed: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_COMPUTE


if __name__ == "__main__":
    sys.exit(main())
