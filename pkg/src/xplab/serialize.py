"""JSON encoding of functions and reports.

Floats are written with 17 significant digits so every double survives a
round trip.  Functions are stored by their Fourier data.
"""

from __future__ import annotations

import json
import math

import numpy as np

from .freealg import FreeElement
from .lattice import FOURIER, GroupShape, LatticeFunction, dft, idft
from .sparse import TrigPoly


def _float(x: float) -> str:
    if not math.isfinite(x):
        raise ValueError(f"cannot serialize non-finite float {x}")
    s = "%.17g" % x
    if "." not in s and "e" not in s and "n" not in s:
        s += ".0"
    return s


def dumps(obj, indent: int = 2) -> str:
    """Deterministic JSON text (sorted keys, 17-digit floats, LF newlines)."""

    def enc(o, level):
        pad = " " * (indent * (level + 1))
        end = " " * (indent * level)
        if o is None:
            return "null"
        if o is True:
            return "true"
        if o is False:
            return "false"
        if isinstance(o, (int, np.integer)):
            return str(int(o))
        if isinstance(o, (float, np.floating)):
            return _float(float(o))
        if isinstance(o, str):
            return json.dumps(o, ensure_ascii=False)
        if isinstance(o, dict):
            if not o:
                return "{}"
            items = [f"{pad}{json.dumps(str(k), ensure_ascii=False)}: {enc(o[k], level + 1)}" for k in sorted(o, key=str)]
            return "{\n" + ",\n".join(items) + "\n" + end + "}"
        if isinstance(o, (list, tuple, np.ndarray)):
            seq = o.tolist() if isinstance(o, np.ndarray) else o
            if not len(seq):
                return "[]"
            if all(isinstance(v, (int, float, np.integer, np.floating)) and not isinstance(v, bool) for v in seq):
                return "[" + ", ".join(enc(v, level + 1) for v in seq) + "]"
            return "[\n" + ",\n".join(pad + enc(v, level + 1) for v in seq) + "\n" + end + "]"
        raise TypeError(f"cannot serialize {type(o).__name__}")

    return enc(obj, 0) + "\n"


def encode_function(f) -> dict:
    if isinstance(f, TrigPoly):
        return {
            "kind": "trigpoly",
            "moduli": list(f.shape.moduli),
            "freqs": f.freqs.tolist(),
            "re": f.coeffs.real.tolist(),
            "im": f.coeffs.imag.tolist(),
        }
    if isinstance(f, LatticeFunction):
        F = dft(f).values.reshape(-1)
        return {
            "kind": "lattice",
            "moduli": list(f.shape.moduli),
            "dim": f.dim,
            "fourier_re": F.real.tolist(),
            "fourier_im": F.imag.tolist(),
        }
    if isinstance(f, FreeElement):
        words = sorted(f.coeffs)
        return {
            "kind": "free",
            "n": f.n,
            "modulus": f.modulus,
            "words": [[list(letter) for letter in w] for w in words],
            "re": [f.coeffs[w].real for w in words],
            "im": [f.coeffs[w].imag for w in words],
        }
    raise TypeError(f"cannot encode {type(f).__name__}")


def decode_function(d: dict):
    kind = d.get("kind")
    if kind == "trigpoly":
        shape = GroupShape(tuple(d["moduli"]))
        coeffs = np.asarray(d["re"], float) + 1j * np.asarray(d["im"], float)
        freqs = np.asarray(d["freqs"], dtype=np.int64).reshape(len(coeffs), shape.n)
        return TrigPoly(shape, freqs, coeffs)
    if kind == "lattice":
        shape = GroupShape(tuple(d["moduli"]))
        dim = int(d["dim"])
        F = (np.asarray(d["fourier_re"], float) + 1j * np.asarray(d["fourier_im"], float))
        F = F.reshape(shape.moduli + (dim, dim))
        return idft(LatticeFunction(shape, F, FOURIER))
    if kind == "free":
        coeffs = {
            tuple(tuple(letter) for letter in w): complex(re, im)
            for w, re, im in zip(d["words"], d["re"], d["im"])
        }
        return FreeElement(int(d["n"]), d["modulus"], coeffs)
    raise ValueError(f"unknown function kind {kind!r}")
