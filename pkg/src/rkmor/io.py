"""File formats: Matrix Market systems, JSON tableaus and reports."""

import json
import math
import os

import numpy as np
import scipy.io
import scipy.sparse as sp

from rkmor.exceptions import DimensionMismatch, IngestionError, InvalidTableau
from rkmor.system import LtiSystem
from rkmor.tableau import ButcherTableau, builtin

#: coordinate files sparser than this stay sparse
SPARSE_DENSITY = 0.25


def encode_complex(z):
    z = complex(z)
    if math.isinf(z.real) or math.isinf(z.imag):
        return "inf"
    return {"re": float(z.real), "im": float(z.imag)}


def decode_complex(obj):
    if isinstance(obj, str):
        if obj.strip().lower() in ("inf", "infinity"):
            return complex(math.inf, 0.0)
        return complex(obj.replace(" ", ""))
    if isinstance(obj, dict):
        return complex(float(obj.get("re", 0.0)), float(obj.get("im", 0.0)))
    return complex(obj)


def _read_mm(path):
    try:
        m = scipy.io.mmread(path)
    except FileNotFoundError:
        raise
    except Exception as exc:
        raise IngestionError(f"cannot parse Matrix Market file {path}: {exc}") from exc
    return m


def load_system(path_a, path_b, path_c):
    """Read ``A, B, C`` from Matrix Market files (coordinate or array).

    ``A`` stays sparse when it is stored in coordinate format with density
    below ``SPARSE_DENSITY``. Stability is not checked.
    """
    for p in (path_a, path_b, path_c):
        if not os.path.isfile(p):
            raise FileNotFoundError(p)
    a = _read_mm(path_a)
    if sp.issparse(a):
        a = sp.csr_matrix(a)
        if a.shape[0] and a.nnz > SPARSE_DENSITY * a.shape[0] * a.shape[1]:
            a = a.toarray()
    b = _read_mm(path_b)
    c = _read_mm(path_c)
    b = b.toarray() if sp.issparse(b) else np.asarray(b)
    c = c.toarray() if sp.issparse(c) else np.asarray(c)
    if a.shape[0] != a.shape[1]:
        raise DimensionMismatch(f"A must be square, got {a.shape}")
    n = a.shape[0]
    if b.ndim != 2 or b.shape != (n, 1):
        raise DimensionMismatch(f"B must be {n}x1, got {b.shape}")
    if c.ndim != 2 or c.shape != (1, n):
        raise DimensionMismatch(f"C must be 1x{n}, got {c.shape}")
    for name, m in (("A", a), ("B", b), ("C", c)):
        data = m.data if sp.issparse(m) else m
        if np.iscomplexobj(data):
            raise IngestionError(f"{name} must be real")
    return LtiSystem(a, b, c)


def save_system(sys, directory, prefix=""):
    """Write ``A, B, C`` as Matrix Market files; returns the three paths."""
    os.makedirs(directory, exist_ok=True)
    paths = [os.path.join(directory, f"{prefix}{x}.mtx") for x in ("A", "B", "C")]
    a = sp.coo_matrix(sys.a) if sys.is_sparse else sys.a
    scipy.io.mmwrite(paths[0], a)
    scipy.io.mmwrite(paths[1], sys.b.reshape(-1, 1))
    scipy.io.mmwrite(paths[2], sys.c.reshape(1, -1))
    return paths


def tableau_to_dict(t):
    return {
        "s": t.s,
        "lambda": [[encode_complex(x) for x in row] for row in t.lam],
        "beta": [encode_complex(x) for x in t.beta],
        "beta_tilde": [float(x) for x in t.beta_tilde],
        "gamma": [float(x) for x in t.gamma],
        **({"name": t.name} if t.name else {}),
    }


def tableau_from_dict(d):
    try:
        s = int(d["s"])
        lam = np.array([[decode_complex(x) for x in row] for row in d["lambda"]])
        beta = np.array([decode_complex(x) for x in d["beta"]])
    except (KeyError, TypeError, ValueError) as exc:
        raise InvalidTableau(f"malformed tableau JSON: {exc}") from exc
    if lam.shape != (s, s):
        raise InvalidTableau(f"lambda is {lam.shape}, expected {(s, s)}")
    if not np.any(lam.imag):
        lam = lam.real
    if not np.any(beta.imag):
        beta = beta.real
    bt = d.get("beta_tilde")
    if bt is not None:
        bt = np.array([decode_complex(x) for x in bt])
    return ButcherTableau(lam, beta, bt, d.get("gamma"), d.get("name"))


def load_tableau(source):
    """A tableau from a built-in name, a JSON file path, a dict or a tableau."""
    if isinstance(source, ButcherTableau):
        return source
    if isinstance(source, dict):
        return tableau_from_dict(source)
    text = str(source)
    if os.path.isfile(text):
        with open(text) as fh:
            try:
                return tableau_from_dict(json.load(fh))
            except json.JSONDecodeError as exc:
                raise InvalidTableau(f"{text}: {exc}") from exc
    return builtin(text)


def dump_json(obj, path):
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def points_to_list(points):
    return [{"side": p.side.value, "location": encode_complex(p.location),
             "multiplicity": p.multiplicity} for p in points.points]


def write_points_csv(points, path_or_file):
    """CSV with columns ``side, re, im, multiplicity``; infinity as ``inf``."""
    lines = ["side,re,im,multiplicity"]
    for p in points.points:
        if p.is_infinite:
            re_s, im_s = "inf", "0"
        else:
            re_s, im_s = repr(float(p.location.real)), repr(float(p.location.imag))
        lines.append(f"{p.side.value},{re_s},{im_s},{p.multiplicity}")
    text = "\n".join(lines) + "\n"
    if hasattr(path_or_file, "write"):
        path_or_file.write(text)
    else:
        with open(path_or_file, "w") as fh:
            fh.write(text)
    return text


def write_reduced(result, directory, metadata=None):
    """Write the reduced triple as Matrix Market files plus ``metadata.json``."""
    os.makedirs(directory, exist_ok=True)
    red = result.reduced
    files = {}
    for name, m in (("A_hat", red.a_hat), ("B_hat", red.b_hat.reshape(-1, 1)),
                    ("C_hat", red.c_hat.reshape(1, -1))):
        path = os.path.join(directory, f"{name}.mtx")
        scipy.io.mmwrite(path, np.asarray(m), precision=17)
        files[name] = os.path.basename(path)
    meta = {
        "r": result.r,
        "sigma": [float(x) for x in result.sigma],
        "truncation": str(result.truncation),
        "within_guarantees": result.within_guarantees,
        "realified": result.realified,
        "files": files,
    }
    meta.update(metadata or {})
    dump_json(meta, os.path.join(directory, "metadata.json"))
    return meta
