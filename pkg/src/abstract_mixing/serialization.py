"""JSON instance files.

Every file is an object with ``schema_version`` (currently 1), a ``kind``
discriminator and a ``sizes`` object; tensors are flat row-major lists.

kinds and their fields::

    instance         sizes nA nC nG nK nW; Q H M; optional exponents, ball
    family           sizes m nW; sigma, M (m x nW); optional exponents
    two_layer        sizes nA nB nC nC1 nG nK nW; T_map, optional c_map; Q1 H1 Q2 H M M1 M2
    multilinear      sizes a c g (lists) nK (list) nW; H (list of tensors), M; exponents q s p (list)
    linear_operator  sizes nE nF, optional nK nW nX; matrix (nF x nE); optional nets {K, W}, probes, norms
    lipschitz_map    sizes nX nY, optional nK nW; d_X d_Y T_map; optional nets {K, W}

``ball`` is ``{"d": d, "vertices": flat (nW x d), "m_coeff": flat (nA, nC, nG, d)}``.
"""
from __future__ import annotations

import json
import math

import numpy as np

from .adapters import LinearOperatorSpec, LipschitzMapSpec
from .core_model import ExponentParams, Instance
from .mixed_families import MixedFamilyValues
from .mixing import SeminormBallModel, TwoLayerInstance
from .multilinear import MultilinearInstance

SCHEMA_VERSION = 1
KINDS = ("instance", "family", "two_layer", "multilinear", "linear_operator", "lipschitz_map")


class SchemaError(ValueError):
    """The file parses as JSON but does not follow the instance schema."""


class Loaded:
    """A validated object together with the optional extras of its file."""

    def __init__(self, kind, obj, exponents=None, ball=None):
        self.kind = kind
        self.obj = obj
        self.exponents = exponents or {}
        self.ball = ball


def _field(doc, name, where="top level"):
    if name not in doc:
        raise SchemaError(f"missing field {name!r} at {where}")
    return doc[name]


def _size(sizes, name):
    v = _field(sizes, name, "sizes")
    if isinstance(v, bool) or not isinstance(v, int) or v < 1:
        raise SchemaError(f"sizes.{name} must be a positive integer, got {v!r}")
    return v


def _size_list(sizes, name):
    v = _field(sizes, name, "sizes")
    if not isinstance(v, list) or not v or any(isinstance(x, bool) or not isinstance(x, int) or x < 1 for x in v):
        raise SchemaError(f"sizes.{name} must be a nonempty list of positive integers")
    return v


def _tensor(doc, name, shape, dtype=float):
    flat = _field(doc, name)
    if not isinstance(flat, list):
        raise SchemaError(f"field {name!r} must be a flat list")
    n = math.prod(shape)
    if len(flat) != n:
        raise SchemaError(f"field {name!r} has {len(flat)} entries, expected {n} for shape {tuple(shape)}")
    for i, x in enumerate(flat):
        if isinstance(x, bool) or not isinstance(x, (int, float)):
            raise SchemaError(f"field {name!r}[{i}] is not a number")
    return np.array(flat, dtype=dtype).reshape(shape)


def _index_list(doc, name, n):
    arr = _tensor(doc, name, (n,), float)
    if np.any(arr != np.round(arr)):
        raise SchemaError(f"field {name!r} must hold integers")
    return arr.astype(np.int64)


def _exponents(doc):
    ex = doc.get("exponents", {})
    if not isinstance(ex, dict):
        raise SchemaError("field 'exponents' must be an object")
    return ex


def _ball(doc, probe_shape, nW):
    b = doc.get("ball")
    if b is None:
        return None
    if not isinstance(b, dict):
        raise SchemaError("field 'ball' must be an object")
    d = _size(b, "d")
    verts = _tensor(b, "vertices", (nW, d))
    coeff = _tensor(b, "m_coeff", tuple(probe_shape) + (d,))
    return SeminormBallModel(verts, coeff)


def parse(doc) -> Loaded:
    if not isinstance(doc, dict):
        raise SchemaError("top level must be a JSON object")
    version = _field(doc, "schema_version")
    if version != SCHEMA_VERSION:
        raise SchemaError(f"unsupported schema_version {version!r}, expected {SCHEMA_VERSION}")
    kind = _field(doc, "kind")
    if kind not in KINDS:
        raise SchemaError(f"unknown kind {kind!r}; expected one of {', '.join(KINDS)}")
    sizes = _field(doc, "sizes")
    if not isinstance(sizes, dict):
        raise SchemaError("field 'sizes' must be an object")
    ex = _exponents(doc)

    if kind == "instance":
        nA, nC, nG, nK, nW = (_size(sizes, k) for k in ("nA", "nC", "nG", "nK", "nW"))
        inst = Instance(_tensor(doc, "Q", (nA, nC, nG)), _tensor(doc, "H", (nA, nC, nG, nK)),
                        _tensor(doc, "M", (nA, nC, nG, nW)))
        return Loaded(kind, inst, ex, _ball(doc, (nA, nC, nG), nW))
    if kind == "family":
        m, nW = _size(sizes, "m"), _size(sizes, "nW")
        return Loaded(kind, MixedFamilyValues(_tensor(doc, "sigma", (m,)), _tensor(doc, "M", (m, nW))), ex)
    if kind == "two_layer":
        s = {k: _size(sizes, k) for k in ("nA", "nB", "nC", "nC1", "nG", "nK", "nW")}
        A = (s["nA"], s["nC"], s["nG"])
        B = (s["nB"], s["nC1"], s["nG"])
        c_map = _index_list(doc, "c_map", s["nC"]) if "c_map" in doc else None
        two = TwoLayerInstance(
            _index_list(doc, "T_map", s["nA"]),
            _tensor(doc, "Q1", B), _tensor(doc, "H1", B + (s["nW"],)),
            _tensor(doc, "Q2", A), _tensor(doc, "H", A + (s["nK"],)), _tensor(doc, "M", A + (s["nW"],)),
            _tensor(doc, "M1", B + (s["nW"],)), _tensor(doc, "M2", A + (s["nW"],)), c_map,
        )
        return Loaded(kind, two, ex)
    if kind == "multilinear":
        a, c, g, nK = (_size_list(sizes, k) for k in ("a", "c", "g", "nK"))
        nW = _size(sizes, "nW")
        if len(nK) != len(g):
            raise SchemaError("sizes.nK must list one size per g-factor")
        Hs = _field(doc, "H")
        if not isinstance(Hs, list) or len(Hs) != len(g):
            raise SchemaError(f"field 'H' must be a list of {len(g)} flat tensors")
        nA, nC = math.prod(a), math.prod(c)
        H = tuple(_tensor({"H[%d]" % k: h}, "H[%d]" % k, (nA, nC, gk, kk)) for k, (h, gk, kk) in
                  enumerate(zip(Hs, g, nK)))
        M = _tensor(doc, "M", (nA, nC, math.prod(g), nW))
        q, s = _field(ex, "q", "exponents"), _field(ex, "s", "exponents")
        p = ex.get("p", [q] * len(g))
        if not isinstance(p, list) or len(p) != len(g):
            raise SchemaError("exponents.p must list one exponent per test kernel")
        mi = MultilinearInstance(a, c, g, H, M, p, ExponentParams(q, s))
        return Loaded(kind, mi, ex, _ball(doc, (nA, nC, math.prod(g)), nW))
    if kind == "linear_operator":
        nE, nF = _size(sizes, "nE"), _size(sizes, "nF")
        nets = doc.get("nets", {})
        K = _tensor(nets, "K", (_size(sizes, "nK"), nE)) if "K" in nets else None
        W = _tensor(nets, "W", (_size(sizes, "nW"), nF)) if "W" in nets else None
        X = _tensor(doc, "probes", (_size(sizes, "nX"), nE)) if "probes" in doc else None
        norms = doc.get("norms", {})
        spec = LinearOperatorSpec(_tensor(doc, "matrix", (nF, nE)), K, W, X,
                                  norms.get("domain", "max"), norms.get("codomain", "max"))
        return Loaded(kind, spec, ex)
    # lipschitz_map
    nX, nY = _size(sizes, "nX"), _size(sizes, "nY")
    nets = doc.get("nets", {})
    K = _tensor(nets, "K", (_size(sizes, "nK"), nX)) if "K" in nets else None
    W = _tensor(nets, "W", (_size(sizes, "nW"), nY)) if "W" in nets else None
    spec = LipschitzMapSpec(_tensor(doc, "d_X", (nX, nX)), _tensor(doc, "d_Y", (nY, nY)),
                            _index_list(doc, "T_map", nX), K, W)
    return Loaded(kind, spec, ex)


def load(path) -> Loaded:
    """Read and validate a file; json.JSONDecodeError and OSError propagate unchanged."""
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    return parse(doc)


def _flat(a):
    return [float(x) for x in np.asarray(a, dtype=float).reshape(-1)]


def _ints(a):
    return [int(x) for x in np.asarray(a).reshape(-1)]


def to_doc(obj, exponents=None, ball=None) -> dict:
    doc = {"schema_version": SCHEMA_VERSION}
    if isinstance(obj, Instance):
        doc.update(kind="instance", sizes=obj.sizes, Q=_flat(obj.Q), H=_flat(obj.H), M=_flat(obj.M))
        if ball is not None:
            doc["ball"] = {"d": ball.d, "vertices": _flat(ball.vertices), "m_coeff": _flat(ball.m_coeff)}
    elif isinstance(obj, MixedFamilyValues):
        doc.update(kind="family", sizes={"m": obj.m, "nW": obj.nW}, sigma=_flat(obj.sigma), M=_flat(obj.M_values))
    elif isinstance(obj, TwoLayerInstance):
        doc.update(kind="two_layer", sizes=obj.sizes, T_map=_ints(obj.T_map), c_map=_ints(obj.c_map),
                   **{k: _flat(getattr(obj, k)) for k in ("Q1", "H1", "Q2", "H", "M", "M1", "M2")})
    elif isinstance(obj, MultilinearInstance):
        doc.update(kind="multilinear",
                   sizes={"a": list(obj.a_sizes), "c": list(obj.c_sizes), "g": list(obj.g_sizes),
                          "nK": [h.shape[3] for h in obj.H], "nW": obj.M.shape[3]},
                   H=[_flat(h) for h in obj.H], M=_flat(obj.M))
        exponents = {"q": obj.e.q, "s": obj.e.s, "p": list(obj.p), **(exponents or {})}
        if ball is not None:
            doc["ball"] = {"d": ball.d, "vertices": _flat(ball.vertices), "m_coeff": _flat(ball.m_coeff)}
    elif isinstance(obj, LinearOperatorSpec):
        doc.update(kind="linear_operator",
                   sizes={"nE": obj.nE, "nF": obj.nF, "nK": obj.K_net.shape[0], "nW": obj.W_net.shape[0],
                          "nX": obj.probes.shape[0]},
                   matrix=_flat(obj.matrix), nets={"K": _flat(obj.K_net), "W": _flat(obj.W_net)},
                   probes=_flat(obj.probes), norms={"domain": obj.domain_norm, "codomain": obj.codomain_norm})
    elif isinstance(obj, LipschitzMapSpec):
        doc.update(kind="lipschitz_map",
                   sizes={"nX": obj.d_X.shape[0], "nY": obj.d_Y.shape[0], "nK": obj.K_net.shape[0],
                          "nW": obj.W_net.shape[0]},
                   d_X=_flat(obj.d_X), d_Y=_flat(obj.d_Y), T_map=_ints(obj.T_map),
                   nets={"K": _flat(obj.K_net), "W": _flat(obj.W_net)})
    else:
        raise TypeError(f"cannot serialize {type(obj).__name__}")
    if exponents:
        doc["exponents"] = dict(exponents)
    return doc


def save(obj, path, exponents=None, ball=None):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(to_doc(obj, exponents, ball), fh, indent=1)
        fh.write("\n")
