"""JSON documents for channels, states and results, plus CSV image rows.

Schemas
-------
Channel, stochastic::

    {"kind": "stochastic", "name": str, "dims": {"in": int, "out": int},
     "data": [[E(y|x) for x in inputs] for y in outputs]}

Channel, Kraus (each operator has shape out x in)::

    {"kind": "kraus", "name": str, "dims": {"in": int, "out": int},
     "data": [{"re": [[...]], "im": [[...]]}, ...]}

State::

    {"kind": "probability", "dim": int, "data": [...]}
    {"kind": "density", "dim": int, "data": {"re": [[...]], "im": [[...]]}}

Floats are written with 17 significant digits so that every double survives
a round trip exactly.
"""

import csv
import json
import math
from dataclasses import dataclass
from io import StringIO
from pathlib import Path

import numpy as np

from . import classical, quantum
from .errors import InvalidInput
from .imaging import simplex_coords
from .linalg import hermitian_part

LOAD_TOL = 1e-9


# ---------------------------------------------------------------------------
# serialisation


def _format_float(x: float) -> str:
    if math.isnan(x):
        return "NaN"
    if math.isinf(x):
        return "Infinity" if x > 0 else "-Infinity"
    if x == 0:
        return "0.0"
    return "%.17g" % x


def dumps(obj, indent: int = 2, _level: int = 0) -> str:
    """JSON text with fixed-precision floats; numpy scalars and arrays allowed.

    Non-finite floats use the same ``NaN``/``Infinity`` tokens as the stdlib
    encoder, which ``json.loads`` reads back.
    """
    pad = " " * (indent * (_level + 1))
    end = " " * (indent * _level)
    if isinstance(obj, np.ndarray):
        obj = obj.tolist()
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if obj is None:
        return "null"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return _format_float(float(obj))
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {dumps(v, indent, _level + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        if all(isinstance(v, (int, float, np.number)) and not isinstance(v, bool) for v in obj):
            return "[" + ", ".join(dumps(v) for v in obj) + "]"
        items = [pad + dumps(v, indent, _level + 1) for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + end + "]"
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def write_json(doc: dict, path=None) -> str:
    text = dumps(doc) + "\n"
    if path is not None:
        Path(path).write_text(text)
    return text


def read_json(path) -> dict:
    try:
        doc = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise InvalidInput(f"cannot read {path}: {exc}") from exc
    if not isinstance(doc, dict):
        raise InvalidInput(f"{path}: top level must be an object")
    return doc


def complex_to_doc(m) -> dict:
    m = np.asarray(m, dtype=complex)
    return {"re": m.real, "im": m.imag}


def complex_from_doc(d) -> np.ndarray:
    try:
        re = np.asarray(d["re"], dtype=float)
        im = np.asarray(d["im"], dtype=float)
    except (KeyError, TypeError, ValueError) as exc:
        raise InvalidInput(f"complex matrix needs numeric 're' and 'im' arrays: {exc}") from exc
    if re.shape != im.shape:
        raise InvalidInput("'re' and 'im' shapes differ")
    return re + 1j * im


# ---------------------------------------------------------------------------
# channels and states


@dataclass
class ChannelDocument:
    kind: str  # "stochastic" or "kraus"
    data: object  # ndarray for stochastic, KrausChannel for kraus
    name: str = ""

    def to_dict(self) -> dict:
        if self.kind == "stochastic":
            e = np.asarray(self.data, dtype=float)
            return {
                "kind": "stochastic",
                "name": self.name,
                "dims": {"in": e.shape[1], "out": e.shape[0]},
                "data": e,
            }
        ch = self.data
        return {
            "kind": "kraus",
            "name": self.name,
            "dims": {"in": ch.in_dim, "out": ch.out_dim},
            "data": [complex_to_doc(k) for k in ch.kraus],
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "ChannelDocument":
        kind = doc.get("kind")
        name = str(doc.get("name", ""))
        if kind == "stochastic":
            try:
                e = np.asarray(doc["data"], dtype=float)
            except (KeyError, TypeError, ValueError) as exc:
                raise InvalidInput(f"stochastic channel data invalid: {exc}") from exc
            if e.ndim != 2:
                raise InvalidInput("stochastic channel data must be a matrix")
            e = classical.as_stochastic(e, tol=LOAD_TOL)
            e = e / e.sum(axis=0, keepdims=True)
            _check_declared_dims(doc, e.shape[1], e.shape[0])
            return cls("stochastic", e, name)
        if kind == "kraus":
            ops = doc.get("data")
            if not isinstance(ops, list) or not ops:
                raise InvalidInput("kraus channel needs a non-empty operator list")
            ch = quantum.KrausChannel([complex_from_doc(k) for k in ops], check=False, name=name)
            dev = ch.tp_deviation()
            if dev > LOAD_TOL:
                raise InvalidInput(f"Kraus operators are not trace preserving (deviation {dev:.3e})")
            _check_declared_dims(doc, ch.in_dim, ch.out_dim)
            return cls("kraus", ch, name)
        raise InvalidInput(f"channel kind must be 'stochastic' or 'kraus', got {kind!r}")


def _check_declared_dims(doc, d_in, d_out):
    dims = doc.get("dims")
    if dims is None:
        return
    if dims.get("in") != d_in or dims.get("out") != d_out:
        raise InvalidInput(f"declared dims {dims} do not match data ({d_in} -> {d_out})")


@dataclass
class StateDocument:
    kind: str  # "probability" or "density"
    data: np.ndarray

    def to_dict(self) -> dict:
        if self.kind == "probability":
            return {"kind": "probability", "dim": len(self.data), "data": np.asarray(self.data, dtype=float)}
        return {"kind": "density", "dim": self.data.shape[0], "data": complex_to_doc(self.data)}

    @classmethod
    def from_dict(cls, doc: dict) -> "StateDocument":
        kind = doc.get("kind")
        if kind == "probability":
            try:
                p = np.asarray(doc["data"], dtype=float)
            except (KeyError, TypeError, ValueError) as exc:
                raise InvalidInput(f"probability data invalid: {exc}") from exc
            p = classical.as_probability(p, tol=LOAD_TOL)
            out = cls("probability", p / p.sum())
        elif kind == "density":
            rho = quantum.as_density(complex_from_doc(doc.get("data", {})), tol=LOAD_TOL)
            out = cls("density", hermitian_part(rho / np.trace(rho).real))
        else:
            raise InvalidInput(f"state kind must be 'probability' or 'density', got {kind!r}")
        if "dim" in doc and doc["dim"] != out.data.shape[0]:
            raise InvalidInput(f"declared dim {doc['dim']} does not match data")
        return out


def load_channel(path) -> ChannelDocument:
    return ChannelDocument.from_dict(read_json(path))


def load_state(path) -> StateDocument:
    return StateDocument.from_dict(read_json(path))


def save_channel(doc: ChannelDocument, path=None) -> str:
    return write_json(doc.to_dict(), path)


def save_state(doc: StateDocument, path=None) -> str:
    return write_json(doc.to_dict(), path)


# ---------------------------------------------------------------------------
# result documents


def classical_solution_doc(sol: classical.HackSolution) -> dict:
    return {
        "type": "classical_hack_solution",
        "status": sol.status.value,
        "plateau": sol.plateau,
        "iterations": sol.iterations,
        "residual": sol.residual,
        "prior": sol.prior,
        "potential": sol.potential,
    }


def verdict_doc(v: classical.FeasibilityVerdict) -> dict:
    witness = None
    if v.witness is not None:
        witness = {"Y": list(v.witness[0]), "X": list(v.witness[1])}
    return {
        "type": "feasibility_verdict",
        "feasible": v.feasible,
        "violation": v.violation,
        "witness": witness,
        "equality_constraints": [{"Y": list(y), "X": list(x)} for y, x in v.equality_constraints],
    }


def classical_bridge_doc(sol, bridge=None, forward_residual=None, duality_residual=None) -> dict:
    return {
        "type": "classical_bridge",
        "status": sol.status.value,
        "solution": classical_solution_doc(sol),
        "bridge": bridge,
        "forward_residual": forward_residual,
        "duality_residual": duality_residual,
    }


def quantum_solution_doc(sol: quantum.QuantumHackSolution) -> dict:
    return {
        "type": "quantum_hack_solution",
        "status": sol.status.value,
        "plateau": sol.plateau,
        "boundary": sol.boundary,
        "iterations": sol.iterations,
        "residual": sol.residual,
        "prior": complex_to_doc(sol.prior),
    }


def quantum_bridge_doc(res: quantum.BridgeResult, mode: str) -> dict:
    return {
        "type": "quantum_bridge",
        "mode": mode,
        "status": res.status.value,
        "iterations": res.iterations,
        "forward_residual": res.forward_residual,
        "tp_residual": res.tp_residual,
        "duality_residual": res.duality_residual,
        "potentials": {k: complex_to_doc(v) for k, v in res.potentials.items()},
        "kraus": None if res.bridge is None else [complex_to_doc(k) for k in res.bridge.kraus],
    }


# ---------------------------------------------------------------------------
# CSV


def image_rows(samples, kind: str) -> tuple[list[str], list[list[str]]]:
    """Header and formatted rows for image samples.

    Classical rows hold both probability vectors and, for three outcomes,
    their planar simplex coordinates. Quantum rows hold Bloch vectors.
    """
    if kind == "quantum":
        header = ["sample_index", "in_x", "in_y", "in_z", "out_x", "out_y", "out_z", "purity", "flag"]
    else:
        dim = len(samples[0].input_coords) if samples else 0
        header = ["sample_index"] + [f"in_p{i}" for i in range(dim)] + [f"out_p{i}" for i in range(dim)]
        if dim == 3:
            header += ["in_x", "in_y", "out_x", "out_y"]
        header += ["entropy", "flag"]
    rows = []
    for i, s in enumerate(samples):
        values = list(s.input_coords) + list(s.output_coords)
        if kind != "quantum" and len(s.input_coords) == 3:
            values += list(simplex_coords(s.input_coords))
            out_xy = (math.nan, math.nan) if s.flag != "ok" else simplex_coords(s.output_coords)
            values += list(out_xy)
        values.append(s.shell_value)
        rows.append([str(i)] + [_format_float(float(v)) for v in values] + [s.flag])
    return header, rows


def write_csv(header, rows, path=None) -> str:
    buf = StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    text = buf.getvalue()
    if path is not None:
        Path(path).write_text(text)
    return text
