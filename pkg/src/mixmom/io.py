"""Dataset CSV and model JSON files.

Dataset CSV: the header line declares category counts, ``d=4,d=4,d=1``; each
following line holds one observation as comma-separated values (0-based
category codes, or a raw number for ``d=1`` columns).

Model JSON::

    {"k": 3, "p": 2, "alpha0": 0.3,
     "variables": [{"index": 0, "d": 4, "theta": [[...k values...], ...]}, ...],
     "weights": [[...], ...]}

``alpha0`` and ``weights`` are optional. Floats are written with Python's
shortest round-trip repr, so saving and loading is exact.
"""

import json
import math

import numpy as np

from .exceptions import MixmomError, ParseError, ValidationError
from .moments import Dataset, ModelParams
from .partition import FitResult


class FileError(MixmomError, OSError):
    category = "io"


def _parse_header(line):
    counts = []
    for col, tok in enumerate(line.split(",")):
        tok = tok.strip()
        if not tok.startswith("d="):
            raise ParseError(f"column {col}: header entry {tok!r} is not of the form d=<count>", 1)
        try:
            d = int(tok[2:])
        except ValueError:
            raise ParseError(f"column {col}: bad category count {tok[2:]!r}", 1) from None
        if d < 1:
            raise ParseError(f"column {col}: category count must be positive", 1)
        counts.append(d)
    return tuple(counts)


def load_dataset_csv(path):
    try:
        with open(path, encoding="utf-8") as fh:
            lines = fh.read().splitlines()
    except OSError as exc:
        raise FileError(f"{path}: {exc.strerror or exc}") from exc
    if not lines or not lines[0].strip():
        raise ParseError("missing header line", 1)
    categories = _parse_header(lines[0])
    p = len(categories)
    numeric = [d == 1 for d in categories]
    rows = []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        toks = line.split(",")
        if len(toks) != p:
            raise ParseError(f"expected {p} values, found {len(toks)}", lineno)
        row = []
        for j, tok in enumerate(toks):
            tok = tok.strip()
            try:
                val = float(tok) if numeric[j] else int(tok)
            except ValueError:
                raise ParseError(f"column {j}: cannot parse {tok!r}", lineno) from None
            if numeric[j]:
                if not math.isfinite(val):
                    raise ParseError(f"column {j}: non-finite value", lineno)
            elif not 0 <= val < categories[j]:
                raise ParseError(
                    f"column {j}: category {val} outside [0, {categories[j]})", lineno
                )
            row.append(val)
        rows.append(row)
    if not rows:
        raise ParseError("no observations")
    dtype = np.float64 if any(numeric) else np.int64
    return Dataset(np.array(rows, dtype=dtype), categories)


def save_dataset_csv(data, path):
    numeric = [d == 1 for d in data.categories]
    try:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(",".join(f"d={d}" for d in data.categories) + "\n")
            for row in data.values:
                fh.write(",".join(
                    repr(float(v)) if numeric[j] else str(int(v)) for j, v in enumerate(row)
                ) + "\n")
    except OSError as exc:
        raise FileError(f"{path}: {exc.strerror or exc}") from exc


def model_to_dict(model):
    weights = None
    if isinstance(model, FitResult):
        weights = [np.asarray(w).tolist() for w in model.weights]
        model = model.params
    out = {"k": model.k, "p": model.p}
    if model.alpha0 is not None:
        out["alpha0"] = model.alpha0
    if model.alpha is not None:
        out["alpha"] = model.alpha.tolist()
    out["variables"] = [
        {"index": j, "d": th.shape[0], "theta": th.tolist()}
        for j, th in enumerate(model.thetas)
    ]
    if weights is not None:
        out["weights"] = weights
    return out


def model_from_dict(obj):
    try:
        k = int(obj["k"])
        p = int(obj["p"])
        variables = obj["variables"]
    except (KeyError, TypeError, ValueError) as exc:
        raise ValidationError(f"model is missing a required field: {exc}") from None
    if len(variables) != p:
        raise ValidationError(f"model declares p={p} but lists {len(variables)} variables")
    thetas = [None] * p
    for var in variables:
        j = int(var["index"])
        if not 0 <= j < p or thetas[j] is not None:
            raise ValidationError(f"bad or duplicate variable index {j}")
        th = np.array(var["theta"], dtype=np.float64)
        if th.ndim != 2 or th.shape != (int(var["d"]), k):
            raise ValidationError(f"variable {j}: theta must be {var['d']} x {k}")
        if np.any(th < 0):
            raise ValidationError(f"variable {j}: negative entry")
        sums = th.sum(axis=0)
        bad = np.flatnonzero(np.abs(sums - 1.0) > 1e-9)
        if bad.size:
            raise ValidationError(
                f"variable {j}, column {bad[0]}: column sums to {sums[bad[0]]!r}, not 1"
            )
        thetas[j] = th
    return ModelParams(thetas, alpha=obj.get("alpha"), alpha0=obj.get("alpha0"))


def save_model_json(model, path):
    try:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(model_to_dict(model), fh, indent=1)
            fh.write("\n")
    except OSError as exc:
        raise FileError(f"{path}: {exc.strerror or exc}") from exc


def load_model_json(path):
    try:
        with open(path, encoding="utf-8") as fh:
            obj = json.load(fh)
    except OSError as exc:
        raise FileError(f"{path}: {exc.strerror or exc}") from exc
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: invalid JSON ({exc.msg})", exc.lineno) from None
    return model_from_dict(obj)
