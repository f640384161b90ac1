"""JSON model files and node-path strings.

A model file looks like::

    {
      "shape": {"k": 2, "d_max": 2},
      "alpha": {"": 0.7, "0": 0.4, "1": 0.8},
      "default_alpha": 0.5,
      "beta": {"": 2.0},
      "gamma": {"": 1.0},
      "default_beta": 1.0,
      "default_gamma": 1.0
    }

Node paths are strings of child indices from the root: ``""`` is the root,
``"10"`` is child 0 of child 1.  For ``k > 10`` indices are comma separated
(``"10,3"``).  Base-tree leaves are never listed; their alpha is 0.  Inner
nodes missing from ``alpha`` take ``default_alpha``, and it is an error if
there is none.  ``beta``/``gamma`` are optional; when either is present
both defaults apply to unlisted nodes (default 1.0).
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Optional

from .bayes import BetaHyperparams
from .distribution import TreeDistribution
from .errors import ParameterError, ShapeError, TreePriorError
from .tree_core import BaseShape, NodeId

_KNOWN_KEYS = {"shape", "alpha", "default_alpha", "beta", "gamma", "default_beta", "default_gamma"}


class ModelFileError(TreePriorError, ValueError):
    """Malformed model file or table; the message names the field."""


def format_path(v: NodeId, k: int) -> str:
    if k > 10:
        return ",".join(str(i) for i in v)
    return "".join(str(i) for i in v)


def parse_path(s: str, shape: BaseShape, field: str = "path") -> NodeId:
    if not isinstance(s, str):
        raise ModelFileError(f"{field}: node path must be a string, got {s!r}")
    if s == "":
        return ()
    parts = s.split(",") if shape.k > 10 else list(s)
    if not all(p.isascii() and p.isdigit() for p in parts):
        raise ModelFileError(f"{field}: malformed node path {s!r}")
    v = tuple(int(p) for p in parts)
    if any(i >= shape.k for i in v):
        raise ModelFileError(f"{field}: node path {s!r} uses an index outside 0..{shape.k - 1}")
    if len(v) > shape.d_max:
        raise ModelFileError(f"{field}: node path {s!r} is deeper than d_max={shape.d_max}")
    return v


def format_tree(inner, k: int) -> str:
    """Tree spec: JSON list of sorted inner-node paths."""
    return json.dumps([format_path(v, k) for v in sorted(inner)])


def parse_tree(text: str, shape: BaseShape) -> list[NodeId]:
    try:
        paths = json.loads(text)
    except json.JSONDecodeError as e:
        raise ModelFileError(f"tree spec: {e}") from None
    if not isinstance(paths, list):
        raise ModelFileError("tree spec: expected a JSON list of inner-node paths")
    return [parse_path(p, shape, "tree spec") for p in paths]


def _number(value, field: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ModelFileError(f"{field}: expected a number, got {value!r}")
    return float(value)


def parse_table(doc, shape: BaseShape, field: str) -> dict:
    """Node table ``{path: value}`` as listed in the document."""
    if doc is None:
        doc = {}
    if not isinstance(doc, dict):
        raise ModelFileError(f"{field}: expected an object mapping node paths to numbers")
    table = {}
    for key, value in doc.items():
        v = parse_path(key, shape, f"{field}[{key!r}]")
        table[v] = _number(value, f"{field}[{key!r}]")
    return table


def _fill(table: dict, shape: BaseShape, default, field: str, *, leaves: bool) -> dict:
    out = dict(table)
    for v in shape.nodes():
        if v in out:
            continue
        if shape.is_leaf(v) and not leaves:
            continue
        if default is None:
            raise ModelFileError(f"{field}: no value for node {format_path(v, shape.k)!r} and no default")
        out[v] = default
    return out


def load_json(text: str, what: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError as e:
        raise ModelFileError(f"{what}: line {e.lineno} column {e.colno}: {e.msg}") from None


@dataclass(frozen=True)
class ModelFile:
    dist: TreeDistribution
    hyper: Optional[BetaHyperparams] = None


def parse_model(text: str) -> ModelFile:
    doc = load_json(text, "model file")
    if not isinstance(doc, dict):
        raise ModelFileError("model file: top level must be an object")
    unknown = set(doc) - _KNOWN_KEYS
    if unknown:
        raise ModelFileError(f"model file: unknown field(s) {sorted(unknown)}")
    sdoc = doc.get("shape")
    if not isinstance(sdoc, dict) or set(sdoc) != {"k", "d_max"}:
        raise ModelFileError('shape: expected {"k": <int>, "d_max": <int>}')
    try:
        shape = BaseShape(sdoc["k"], sdoc["d_max"])
    except ShapeError as e:
        raise ModelFileError(f"shape: {e}") from None

    default = doc.get("default_alpha")
    if default is not None:
        default = _number(default, "default_alpha")
    alpha = parse_table(doc.get("alpha"), shape, "alpha")
    alpha = _fill(alpha, shape, default, "alpha", leaves=False)
    try:
        dist = TreeDistribution(shape, alpha)
    except ParameterError as e:
        raise ModelFileError(f"alpha: {e}") from None

    hyper = None
    if "beta" in doc or "gamma" in doc:
        b0 = _number(doc.get("default_beta", 1.0), "default_beta")
        g0 = _number(doc.get("default_gamma", 1.0), "default_gamma")
        beta = _fill(parse_table(doc.get("beta"), shape, "beta"), shape, b0, "beta", leaves=True)
        gamma = _fill(parse_table(doc.get("gamma"), shape, "gamma"), shape, g0, "gamma", leaves=True)
        try:
            hyper = BetaHyperparams(shape, beta, gamma)
        except ParameterError as e:
            raise ModelFileError(f"beta/gamma: {e}") from None
    return ModelFile(dist, hyper)


def load_model(path: str) -> ModelFile:
    with open(path, encoding="utf-8") as fh:
        return parse_model(fh.read())


def model_to_dict(dist: TreeDistribution, hyper: Optional[BetaHyperparams] = None) -> dict:
    shape = dist.shape
    doc = {
        "shape": {"k": shape.k, "d_max": shape.d_max},
        "alpha": {format_path(v, shape.k): a for v, a in dist.as_dict().items()},
    }
    if hyper is not None:
        nodes = list(shape.nodes())
        doc["beta"] = {format_path(v, shape.k): float(b) for v, b in zip(nodes, hyper.beta)}
        doc["gamma"] = {format_path(v, shape.k): float(g) for v, g in zip(nodes, hyper.gamma)}
    return doc


def dump_model(dist: TreeDistribution, hyper: Optional[BetaHyperparams] = None, indent=2) -> str:
    return json.dumps(model_to_dict(dist, hyper), indent=indent)
