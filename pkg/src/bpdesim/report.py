"""Result documents: unit conversion, JSON serialization and schema checks."""

from __future__ import annotations

import json
import os
import tempfile
from dataclasses import asdict
from pathlib import Path
from typing import Any

import jsonschema

from .bpde import BpdeResult, Gaussian, LikelihoodFit

HARTREE_TO_CM1 = 219474.6313632
RESULT_FORMAT = "bpde-result/1"


def hartree_to_cm1(e: float) -> float:
    return e * HARTREE_TO_CM1


def cm1_to_hartree(e: float) -> float:
    return e / HARTREE_TO_CM1


_GAUSS = {
    "type": "object",
    "required": ["mean", "std"],
    "properties": {"mean": {"type": "number"}, "std": {"type": "number", "exclusiveMinimum": 0}},
}

RESULT_SCHEMA: dict[str, Any] = {
    "type": "object",
    "required": ["format", "config", "n_qubits", "d0", "d1", "mu_ini_hartree", "gap_hartree",
                 "gap_cm1", "sigma_final", "e_thre", "iterations", "total_shots", "converged",
                 "seed", "h00", "tau_target", "trotter_rule"],
    "properties": {
        "format": {"const": RESULT_FORMAT},
        "config": {"type": "object"},
        "n_qubits": {"type": "integer", "minimum": 1},
        "d0": {"type": "string", "pattern": "^[01]+$"},
        "d1": {"type": "string", "pattern": "^[01]+$"},
        "frozen": {"type": "array", "items": {"type": "integer", "minimum": 0}},
        "mu_ini_hartree": {"type": "number"},
        "mu_ini_cm1": {"type": "number"},
        "gap_hartree": {"type": "number"},
        "gap_cm1": {"type": "number"},
        "sigma_final": {"type": "number", "exclusiveMinimum": 0},
        "e_thre": {"type": "number", "exclusiveMinimum": 0},
        "total_shots": {"type": "integer", "minimum": 0},
        "converged": {"type": "boolean"},
        "seed": {"type": "integer"},
        "h00": {"type": "number"},
        "tau_target": {"type": "number", "exclusiveMinimum": 0},
        "trotter_rule": {"enum": ["inverted", "literal"]},
        "iterations": {
            "type": "array",
            "minItems": 1,
            "items": {
                "type": "object",
                "required": ["prior", "t", "m_slices", "e_thre", "scan", "fit", "posterior"],
                "properties": {
                    "prior": _GAUSS,
                    "posterior": _GAUSS,
                    "t": {"type": "number", "exclusiveMinimum": 0},
                    "m_slices": {"type": "integer", "minimum": 1},
                    "e_thre": {"type": "number"},
                    "scan": {
                        "type": "array",
                        "items": {
                            "type": "object",
                            "required": ["delta_eps", "prob0"],
                            "properties": {
                                "delta_eps": {"type": "number"},
                                "prob0": {"type": "number", "minimum": 0, "maximum": 1},
                                "shots": {"type": "integer", "minimum": 0},
                            },
                        },
                    },
                    "fit": {
                        "type": "object",
                        "required": ["amplitude", "mean", "std", "baseline", "rms_residual", "converged"],
                    },
                },
            },
        },
    },
}


def _gauss(g: Gaussian) -> dict:
    return {"mean": g.mean, "std": g.std}


def result_to_dict(result: BpdeResult, d0: str, d1: str, frozen=()) -> dict:
    return {
        "format": RESULT_FORMAT,
        "config": result.config.to_dict(),
        "n_qubits": result.n_qubits,
        "d0": str(d0),
        "d1": str(d1),
        "frozen": sorted(int(i) for i in frozen),
        "mu_ini_hartree": result.mu_ini,
        "mu_ini_cm1": hartree_to_cm1(result.mu_ini),
        "gap_hartree": result.gap,
        "gap_cm1": hartree_to_cm1(result.gap),
        "sigma_final": result.sigma_final,
        "e_thre": result.e_thre,
        "total_shots": result.total_shots,
        "converged": result.converged,
        "seed": result.seed,
        "h00": result.h00,
        "tau_target": result.tau_target,
        "trotter_rule": result.config.trotter_rule.value,
        "iterations": [
            {
                "index": it.index,
                "prior": _gauss(it.prior),
                "t": it.t,
                "m_slices": it.m_slices,
                "e_thre": it.e_thre,
                "scan": [asdict(p) for p in it.scan],
                "fit": asdict(it.fit),
                "posterior": _gauss(it.posterior),
            }
            for it in result.iterations
        ],
    }


def validate_result(doc: dict) -> None:
    jsonschema.validate(doc, RESULT_SCHEMA)


def write_json_atomic(doc: Any, path: str | Path) -> None:
    """Write JSON next to ``path`` and rename it into place."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent or ".")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            json.dump(doc, fh, indent=1)
            fh.write("\n")
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def load_result(path: str | Path) -> dict:
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    validate_result(doc)
    return doc
