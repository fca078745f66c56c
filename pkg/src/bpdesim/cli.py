"""Command-line entry point: ``bpde run | campaign | oracle | bench | synth``.

Exit codes
    0  success
    2  usage error (bad flags)
    3  estimator did not converge within the iteration cap
    4  input, parse or validation error
    5  I/O error (missing or unwritable file)
    6  campaign finished with at least one failed entry
"""

from __future__ import annotations

import argparse
import json
import statistics
import sys
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import jsonschema

from . import __version__
from .bench import run_bench
from .bpde import BpdeConfig, BpdeResult, Mode, run_bpde
from .errors import AmbiguousAssignment, BpdeError, DimensionMismatch, EmptyCampaign, LengthMismatch
from .evolution import Backend, TrotterRule
from .hamiltonian_io import (
    SpinOrbitalIntegrals,
    freeze_orbitals,
    read_integral_file,
    synth_random_hamiltonian,
    write_integral_file,
)
from .oracle import MAX_ORACLE_ORBITALS, diagonalize, exact_gap, fermionic_dense
from .qubit_map import Determinant
from .report import hartree_to_cm1, load_result, result_to_dict, write_json_atomic

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_NOT_CONVERGED = 3
EXIT_INPUT = 4
EXIT_IO = 5
EXIT_PARTIAL = 6

RATIO_BAND = (0.92, 1.05)
DEFAULT_REPEATS = 5


@dataclass
class RunSpec:
    ints: str
    d0: str
    d1: str
    frozen: list[int] = field(default_factory=list)
    overrides: dict = field(default_factory=dict)
    out: str | None = None
    repeats: int = DEFAULT_REPEATS
    label: str = ""

    def __post_init__(self) -> None:
        if not self.ints:
            raise ValueError("integrals path is empty")
        if self.out is not None and not self.out:
            raise ValueError("output path is empty")
        if self.repeats < 1:
            raise ValueError(f"repeat count must be >= 1, got {self.repeats}")
        for name in ("d0", "d1"):
            Determinant.from_string(getattr(self, name))

    @classmethod
    def from_dict(cls, d: dict) -> "RunSpec":
        known = {"ints", "d0", "d1", "frozen", "overrides", "out", "repeats", "label"}
        extra = set(d) - known
        if extra:
            raise ValueError(f"unknown campaign entry keys: {sorted(extra)}")
        return cls(**d)

    def config(self, base: BpdeConfig) -> BpdeConfig:
        return BpdeConfig(**{**base.to_dict(), **self.overrides})


class NotConverged(Exception):
    pass


# --------------------------------------------------------------------------
# helpers
# --------------------------------------------------------------------------

def parse_frozen(text: str | None) -> list[int]:
    if not text:
        return []
    try:
        return sorted({int(tok) for tok in text.replace(",", " ").split()})
    except ValueError:
        raise ValueError(f"--freeze expects a comma-separated list of integers, got {text!r}") from None


def load_active_space(spec: RunSpec) -> SpinOrbitalIntegrals:
    ints = read_integral_file(spec.ints)
    ints = freeze_orbitals(ints, spec.frozen)
    for name in ("d0", "d1"):
        bits = getattr(spec, name)
        if len(bits) != ints.n_orb:
            raise LengthMismatch(
                f"{name}={bits} has length {len(bits)}, active space has {ints.n_orb} orbitals")
    return ints


def oracle_gap(ints: SpinOrbitalIntegrals, d0: str, d1: str) -> float | None:
    """Exact gap between the eigenstates dominating d0 and d1; None when
    the active space is too large or the assignment is ambiguous."""
    if ints.n_orb > MAX_ORACLE_ORBITALS:
        return None
    sys_ = diagonalize(fermionic_dense(ints), d0, d1, sector=True)
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            return exact_gap(sys_)
    except AmbiguousAssignment:
        return None


def _fmt(x: float | None, spec: str = ".8f") -> str:
    return "-" if x is None else format(x, spec)


def _print_result(res: BpdeResult, out=None) -> None:
    out = sys.stdout if out is None else out
    print(f"gap        {res.gap:.10f} Ha  {hartree_to_cm1(res.gap):.3f} cm-1", file=out)
    print(f"mu_ini     {res.mu_ini:.10f} Ha", file=out)
    print(f"sigma      {res.sigma_final:.3e}   e_thre {res.e_thre:.3e}", file=out)
    print(f"iterations {len(res.iterations)}   shots {res.total_shots}   "
          f"converged {res.converged}", file=out)


def base_config(args: argparse.Namespace) -> BpdeConfig:
    kw = {}
    for flag, key in (("shots", "shots"), ("scan", "n_scan"), ("mode", "mode"), ("seed", "seed"),
                      ("backend", "backend"), ("workers", "workers"),
                      ("trotter_rule", "trotter_rule"), ("max_iter", "max_iterations"),
                      ("h00", "h00")):
        v = getattr(args, flag, None)
        if v is not None:
            kw[key] = v
    return BpdeConfig(**kw)


# --------------------------------------------------------------------------
# commands
# --------------------------------------------------------------------------

def cmd_run(spec: RunSpec, cfg: BpdeConfig) -> tuple[BpdeResult, dict]:
    ints = load_active_space(spec)
    res = run_bpde(ints, spec.d0, spec.d1, spec.config(cfg))
    doc = result_to_dict(res, spec.d0, spec.d1, spec.frozen)
    if spec.out:
        write_json_atomic(doc, spec.out)
    return res, doc


def cmd_campaign(specs: Sequence[RunSpec], cfg: BpdeConfig) -> dict:
    """Each entry is repeated with seeds seed, seed+1, ...; entries that fail
    are recorded and the campaign continues."""
    if not specs:
        raise EmptyCampaign("campaign has no entries")
    rows = []
    for spec in specs:
        row = {"label": spec.label or Path(spec.ints).name, "ints": spec.ints, "d0": spec.d0,
               "d1": spec.d1, "frozen": spec.frozen, "repeats": spec.repeats, "error": None}
        try:
            ints = load_active_space(spec)
            entry_cfg = spec.config(cfg)
            gaps, converged, runs = [], [], []
            for k in range(spec.repeats):
                res = run_bpde(ints, spec.d0, spec.d1, BpdeConfig(**{**entry_cfg.to_dict(),
                                                                     "seed": entry_cfg.seed + k}))
                gaps.append(res.gap)
                converged.append(res.converged)
                runs.append(result_to_dict(res, spec.d0, spec.d1, spec.frozen))
            mean = statistics.fmean(gaps)
            std = statistics.stdev(gaps) if len(gaps) > 1 else 0.0
            casci = oracle_gap(ints, spec.d0, spec.d1)
            row.update({
                "delta_e_ref": runs[0]["mu_ini_hartree"],
                "gap_mean": mean,
                "gap_std": std,
                "gap_mean_cm1": hartree_to_cm1(mean),
                "gap_std_cm1": hartree_to_cm1(std),
                "gap_casci": casci,
                "ratio": None if not casci else mean / casci,
                "e_thre": max(r["e_thre"] for r in runs),
                "all_converged": all(converged),
                "runs": runs,
            })
        except (BpdeError, OSError, ValueError) as exc:
            row["error"] = f"{type(exc).__name__}: {exc}"
        rows.append(row)
    return {"format": "bpde-campaign/1", "entries": rows}


def cmd_oracle(spec: RunSpec, result_path: str | None = None) -> dict:
    ints = load_active_space(spec)
    d0, d1 = Determinant.from_string(spec.d0), Determinant.from_string(spec.d1)
    sys_ = diagonalize(fermionic_dense(ints), d0, d1, sector=True)
    gap = exact_gap(sys_)
    report = {"n_orb": ints.n_orb, "d0": spec.d0, "d1": spec.d1, "frozen": spec.frozen,
              "gap_casci_hartree": gap, "gap_casci_cm1": hartree_to_cm1(gap),
              "band": list(RATIO_BAND)}
    if result_path:
        doc = load_result(result_path)
        if doc["n_qubits"] != ints.n_orb or len(doc["d0"]) != ints.n_orb:
            raise DimensionMismatch(
                f"result file has {doc['n_qubits']} qubits, active space has {ints.n_orb} orbitals")
        if (doc["d0"], doc["d1"]) != (spec.d0, spec.d1):
            raise DimensionMismatch(
                f"result references {doc['d0']}/{doc['d1']} differ from {spec.d0}/{spec.d1}")
        ratio = doc["gap_hartree"] / gap if gap else None
        report.update({
            "gap_bpde_hartree": doc["gap_hartree"],
            "ratio": ratio,
            "in_band": ratio is not None and RATIO_BAND[0] <= ratio <= RATIO_BAND[1],
            "abs_error": abs(doc["gap_hartree"] - gap),
            "e_thre": doc["e_thre"],
        })
    return report


def cmd_synth(n_orb: int, seed: int, diag_dominance: float, path: str) -> SpinOrbitalIntegrals:
    ints = synth_random_hamiltonian(n_orb, seed, diag_dominance)
    write_integral_file(ints, path)
    return ints


# --------------------------------------------------------------------------
# argument parsing
# --------------------------------------------------------------------------

def _add_estimator_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--shots", type=int, help="shots per scan point (default 5000)")
    p.add_argument("--scan", type=int, help="scan points per iteration (default 21)")
    p.add_argument("--mode", choices=[m.value for m in Mode], help="sampled (default) or exact")
    p.add_argument("--seed", type=int, help="base seed (default 0)")
    p.add_argument("--backend", choices=[b.value for b in Backend], help="default fused")
    p.add_argument("--workers", type=int, help="worker threads for gate kernels")
    p.add_argument("--trotter-rule", dest="trotter_rule", choices=[r.value for r in TrotterRule],
                   help="slice-length rule (default inverted)")
    p.add_argument("--max-iter", dest="max_iter", type=int, help="iteration cap (default 100)")
    p.add_argument("--h00", type=float, help="override the core integral used by the slice rule")


def _add_system_flags(p: argparse.ArgumentParser, required: bool = True) -> None:
    p.add_argument("--ints", required=required, help="integral file")
    p.add_argument("--d0", required=required, help="reference occupation string, e.g. 1100")
    p.add_argument("--d1", required=required, help="second reference occupation string")
    p.add_argument("--freeze", help="comma-separated orbitals to freeze as occupied")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="bpde", description="Bayesian phase difference estimation")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="single estimation run")
    _add_system_flags(p)
    _add_estimator_flags(p)
    p.add_argument("--out", help="result JSON path")

    p = sub.add_parser("campaign", help="seeded repeats over one or more systems")
    _add_system_flags(p, required=False)
    _add_estimator_flags(p)
    p.add_argument("--spec", help="JSON list of entries {ints, d0, d1, frozen, overrides, repeats, label}")
    p.add_argument("--repeats", type=int, default=DEFAULT_REPEATS)
    p.add_argument("--out", help="summary JSON path")

    p = sub.add_parser("oracle", help="exact gap by diagonalization")
    _add_system_flags(p)
    p.add_argument("--result", help="result JSON to compare against")
    p.add_argument("--out", help="report JSON path")

    p = sub.add_parser("bench", help="backend / worker timing table")
    p.add_argument("--sizes", type=int, nargs="+", default=[8, 10, 12, 14])
    p.add_argument("--backend", dest="backends", nargs="+", choices=[b.value for b in Backend],
                   default=[b.value for b in Backend])
    p.add_argument("--workers", type=int, nargs="+", default=[1, 2])
    p.add_argument("--reps", type=int, default=3)
    p.add_argument("--slices", type=int, default=1, help="Trotter slices in the workload")
    p.add_argument("--terms", type=int, default=64, help="Hamiltonian terms in the workload")
    p.add_argument("--out", help="report JSON path")

    p = sub.add_parser("synth", help="write a seeded synthetic integral file")
    p.add_argument("--n-orb", dest="n_orb", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--diag-dominance", dest="diag_dominance", type=float, default=10.0)
    p.add_argument("--out", required=True)
    return ap


def _campaign_specs(args: argparse.Namespace) -> list[RunSpec]:
    if args.spec:
        with open(args.spec, encoding="utf-8") as fh:
            entries = json.load(fh)
        if not isinstance(entries, list):
            raise ValueError(f"{args.spec}: campaign spec must be a JSON list")
        base = Path(args.spec).parent
        specs = []
        for e in entries:
            e = dict(e)
            e.setdefault("repeats", args.repeats)
            if "ints" in e and not Path(e["ints"]).is_absolute():
                e["ints"] = str(base / e["ints"])
            specs.append(RunSpec.from_dict(e))
        return specs
    if args.ints is None and args.d0 is None and args.d1 is None:
        return []
    if not (args.ints and args.d0 and args.d1):
        raise ValueError("campaign needs --spec or all of --ints, --d0, --d1")
    return [RunSpec(args.ints, args.d0, args.d1, parse_frozen(args.freeze), repeats=args.repeats)]


def _dispatch(args: argparse.Namespace) -> int:
    cmd = args.command
    if cmd == "run":
        spec = RunSpec(args.ints, args.d0, args.d1, parse_frozen(args.freeze), out=args.out)
        res, _ = cmd_run(spec, base_config(args))
        _print_result(res)
        if not res.converged:
            raise NotConverged(f"no convergence after {len(res.iterations)} iterations "
                               f"(sigma {res.sigma_final:.3e} vs threshold {res.e_thre:.3e})")
        return EXIT_OK

    if cmd == "campaign":
        summary = cmd_campaign(_campaign_specs(args), base_config(args))
        head = (f"{'system':<20} {'dE_ref[Ha]':>13} {'dE_BPDE[Ha]':>13} {'std':>10} "
                f"{'dE_CASCI[Ha]':>13} {'ratio':>7}")
        print(head)
        print("-" * len(head))
        for row in summary["entries"]:
            if row["error"]:
                print(f"{row['label']:<20} FAILED {row['error']}")
                continue
            print(f"{row['label']:<20} {row['delta_e_ref']:>13.8f} {row['gap_mean']:>13.8f} "
                  f"{row['gap_std']:>10.2e} {_fmt(row['gap_casci']):>13} "
                  f"{_fmt(row['ratio'], '.4f'):>7}")
        if args.out:
            write_json_atomic(summary, args.out)
        return EXIT_PARTIAL if any(r["error"] for r in summary["entries"]) else EXIT_OK

    if cmd == "oracle":
        spec = RunSpec(args.ints, args.d0, args.d1, parse_frozen(args.freeze))
        report = cmd_oracle(spec, args.result)
        print(f"gap_casci  {report['gap_casci_hartree']:.10f} Ha  {report['gap_casci_cm1']:.3f} cm-1")
        if "ratio" in report:
            verdict = "PASS" if report["in_band"] else "FAIL"
            print(f"gap_bpde   {report['gap_bpde_hartree']:.10f} Ha")
            print(f"ratio      {_fmt(report['ratio'], '.6f')}  band "
                  f"[{RATIO_BAND[0]}, {RATIO_BAND[1]}] {verdict}")
        if args.out:
            write_json_atomic(report, args.out)
        return EXIT_OK

    if cmd == "bench":
        report = run_bench(args.sizes, args.backends, args.workers, args.reps,
                           m_slices=args.slices, n_terms=args.terms)
        print(report.to_text())
        if args.out:
            write_json_atomic(report.to_dict(), args.out)
        return EXIT_OK

    if cmd == "synth":
        ints = cmd_synth(args.n_orb, args.seed, args.diag_dominance, args.out)
        print(f"wrote {args.out} ({ints.n_orb} orbitals, seed {args.seed})")
        return EXIT_OK
    raise AssertionError(cmd)


def main(argv: Sequence[str] | None = None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    try:
        return _dispatch(args)
    except NotConverged as exc:
        print(f"bpde: not converged: {exc}", file=sys.stderr)
        return EXIT_NOT_CONVERGED
    except FileNotFoundError as exc:
        print(f"bpde: no such file: {exc.filename}", file=sys.stderr)
        return EXIT_IO
    except OSError as exc:
        name = exc.filename if exc.filename else ""
        print(f"bpde: I/O error {name}: {exc.strerror or exc}", file=sys.stderr)
        return EXIT_IO
    except (BpdeError, ValueError, json.JSONDecodeError, jsonschema.ValidationError) as exc:
        msg = exc.message if isinstance(exc, jsonschema.ValidationError) else str(exc)
        print(f"bpde: {type(exc).__name__}: {msg}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
