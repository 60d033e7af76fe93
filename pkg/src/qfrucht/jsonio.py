"""JSON reading and writing shared by the command line."""
from __future__ import annotations

import hashlib
import json
from pathlib import Path

import numpy as np

from .qspace import QSet


class InputError(ValueError):
    """Bad user input; the command line maps this to exit code 2."""


def load_json(path: str | Path):
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise InputError(f"{path}: {exc.strerror or exc}") from exc
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: malformed JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc


def digest(path: str | Path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _default(obj):
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, (complex, np.complexfloating)):
        return {"re": float(obj.real), "im": float(obj.imag)}
    if isinstance(obj, np.ndarray):
        if np.iscomplexobj(obj):
            return {"re": obj.real.tolist(), "im": obj.imag.tolist()}
        return obj.tolist()
    if isinstance(obj, (set, frozenset, tuple)):
        return list(obj)
    if hasattr(obj, "value") and isinstance(getattr(obj, "value"), str):
        return obj.value
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def dumps(doc) -> str:
    return json.dumps(doc, default=_default, indent=2)


def write_json(doc, path: str | Path | None) -> str:
    text = dumps(doc)
    if path is None:
        print(text)
    else:
        Path(path).write_text(text + "\n")
    return text


def vector_to_json(x: np.ndarray, basis: str) -> dict:
    x = np.asarray(x, dtype=complex)
    return {"basis": basis, "re": x.real.tolist(), "im": x.imag.tolist()}


def vector_from_json(doc: dict) -> tuple[np.ndarray, str]:
    try:
        basis = doc.get("basis", "lambda")
        re = np.asarray(doc["re"], dtype=float)
        im = np.asarray(doc.get("im", np.zeros_like(re)), dtype=float)
    except (KeyError, TypeError, ValueError, AttributeError) as exc:
        raise InputError(f"malformed projection document: {exc}") from exc
    if basis not in ("lambda", "block"):
        raise InputError(f"unknown basis {basis!r}; expected 'lambda' or 'block'")
    if re.shape != im.shape or re.ndim != 1:
        raise InputError("projection 're' and 'im' must be equal-length lists")
    return re + 1j * im, basis


def space_to_json(space: QSet) -> dict:
    return {"blocks": list(space.block_sizes)}
