"""Parsing of generator and mask descriptions, and JSON conversion of reports."""
import json
import math
from dataclasses import is_dataclass
from fractions import Fraction

import numpy as np

from . import generators as gen
from . import multiindex as mi
from .errors import InputError
from .exact import GaussianRational
from .refinement import Mask, bspline_mask, counterexample_mask
from .trig import TrigPolyMatrix

GENERATOR_KINDS = ("bspline", "boxspline", "fredrickson", "convolve", "bad_pair", "delta")
MASK_ALIASES = ("bspline:k", "counterexample")


def load_text(text):
    """Parse JSON text; strings that are not JSON objects or lists are returned as is."""
    if not isinstance(text, str):
        return text
    t = text.strip()
    if t[:1] in "{[":
        try:
            return json.loads(t)
        except json.JSONDecodeError as e:
            raise InputError(f"malformed JSON: {e}") from None
    return t


def _int(x, name):
    if isinstance(x, bool) or not isinstance(x, (int, float)) or int(x) != x:
        raise InputError(f"{name} must be an integer, got {x!r}")
    return int(x)


def _check_fields(obj, allowed):
    extra = set(obj) - set(allowed) - {"kind"}
    if extra:
        raise InputError(f"unknown field(s) {sorted(extra)} for kind {obj.get('kind')!r}")


def _alias_generator(name):
    head, _, arg = name.partition(":")
    head = head.lower()
    if head == "bspline":
        return {"kind": "bspline", "k": _int(int(arg or 1), "k")}
    if head == "boxspline":
        if arg != "221":
            raise InputError("only the boxspline:221 alias is built in; give directions as JSON otherwise")
        return {"kind": "boxspline", "dirs": [[1, 0], [1, 0], [0, 1], [0, 1], [1, 1]]}
    if head == "fredrickson":
        return {"kind": "fredrickson"}
    if head in ("badpair", "bad_pair"):
        return {"kind": "bad_pair", "k": int(arg or 4)}
    if head == "delta":
        return {"kind": "delta", "d": int(arg or 1)}
    raise InputError(f"unknown generator alias {name!r}")


def generator_spec(desc):
    """Normalize a generator description to its JSON form."""
    desc = load_text(desc)
    if isinstance(desc, str):
        try:
            return _alias_generator(desc)
        except ValueError as e:
            if isinstance(e, InputError):
                raise
            raise InputError(f"bad generator alias {desc!r}") from None
    if isinstance(desc, list):
        return [generator_spec(x) for x in desc]
    if not isinstance(desc, dict) or "kind" not in desc:
        raise InputError("a generator description needs a 'kind' field")
    return desc


def parse_generator(desc):
    """Build a FourierSymbol or GeneratorVector from JSON, a dict or an alias.

    Formats: ``{"kind":"bspline","k":2}``, ``{"kind":"boxspline","dirs":[...]}``,
    ``{"kind":"fredrickson"}``, ``{"kind":"convolve","of":[...]}``,
    ``{"kind":"bad_pair","k":4}``, ``{"kind":"delta","d":1}``; a JSON list
    gives a generator vector.  Aliases: ``bspline:k``, ``boxspline:221``,
    ``fredrickson``, ``badpair:k``.
    """
    spec = generator_spec(desc)
    if isinstance(spec, list):
        parts = [parse_generator(x) for x in spec]
        entries = []
        for p in parts:
            entries.extend(p.entries if isinstance(p, gen.GeneratorVector) else [p])
        return gen.GeneratorVector(entries)
    kind = spec["kind"]
    if kind == "bspline":
        _check_fields(spec, ["k"])
        return gen.bspline(_int(spec.get("k", 1), "k"))
    if kind == "boxspline":
        _check_fields(spec, ["dirs"])
        dirs = spec.get("dirs")
        if not isinstance(dirs, list) or not dirs:
            raise InputError("boxspline needs a non-empty 'dirs' list")
        return gen.boxspline([[_int(x, "direction entry") for x in row] for row in dirs])
    if kind == "fredrickson":
        _check_fields(spec, [])
        return gen.fredrickson()
    if kind == "convolve":
        _check_fields(spec, ["of"])
        parts = [parse_generator(x) for x in spec.get("of", [])]
        if not parts or any(isinstance(p, gen.GeneratorVector) for p in parts):
            raise InputError("convolve needs a list of single generators in 'of'")
        return gen.convolve(parts)
    if kind == "bad_pair":
        _check_fields(spec, ["k"])
        return gen.bad_pair(_int(spec.get("k", 4), "k"))
    if kind == "delta":
        _check_fields(spec, ["d"])
        return gen.delta(_int(spec.get("d", 1), "d"))
    raise InputError(f"unknown generator kind {kind!r}; expected one of {GENERATOR_KINDS}")


def parse_scalar(x):
    """Number from JSON: ints, fraction strings, dyadic floats stay exact; ``[re, im]`` pairs allowed."""
    if isinstance(x, bool):
        raise InputError("booleans are not numbers")
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, float):
        if not math.isfinite(x):
            raise InputError("non-finite coefficient")
        f = Fraction(x)
        return f if f.denominator <= 2 ** 20 else x
    if isinstance(x, str):
        try:
            return Fraction(x)
        except ValueError:
            try:
                return complex(x.replace(" ", ""))
            except ValueError:
                raise InputError(f"cannot read number {x!r}") from None
    if isinstance(x, (list, tuple)) and len(x) == 2:
        re, im = parse_scalar(x[0]), parse_scalar(x[1])
        if all(isinstance(t, Fraction) for t in (re, im)):
            return GaussianRational(re, im) if im else re
        return complex(re) + 1j * complex(im)
    raise InputError(f"cannot read number {x!r}")


def _parse_key(k, d):
    if isinstance(k, str):
        try:
            key = mi.from_str(k) if k.strip().startswith("(") else tuple(int(t) for t in k.split(","))
        except ValueError:
            raise InputError(f"bad lattice key {k!r}") from None
    else:
        key = tuple(np.atleast_1d(k).astype(int).tolist())
    if d is not None and len(key) != d:
        raise InputError(f"key {k!r} does not have {d} entries")
    return key


def _matrix(rows):
    if not isinstance(rows, list) or not rows or not all(isinstance(r, list) for r in rows):
        raise InputError("matrices are given as lists of rows")
    out = [[parse_scalar(x) for x in row] for row in rows]
    if len({len(r) for r in out}) != 1:
        raise InputError("ragged matrix")
    return np.array(out, dtype=object) if all(
        isinstance(x, (Fraction, GaussianRational)) for r in out for x in r) else np.array(out, dtype=complex)


def _coerce_matrix(m):
    if m.dtype == object:
        return np.vectorize(GaussianRational.coerce, otypes=[object])(m)
    return m


def parse_mask(desc):
    """Build a Mask from JSON, a dict or an alias.

    Accepted forms: ``{"r","d","entries": [[{"coeffs": {"0": 0.5, "1": 0.5}}, ...], ...]}``,
    ``{"d","coeffs": {"(j)": matrix}}`` and the jets-only
    ``{"d","jets": {"(0,0)": matrix, ...}}``.  Aliases: ``bspline:k`` and
    ``counterexample``.
    """
    desc = load_text(desc)
    if isinstance(desc, str):
        head, _, arg = desc.partition(":")
        if head == "bspline":
            try:
                return bspline_mask(int(arg or 2))
            except ValueError:
                raise InputError(f"bad mask alias {desc!r}") from None
        if head == "counterexample":
            return counterexample_mask()
        raise InputError(f"unknown mask alias {desc!r}; expected one of {MASK_ALIASES}")
    if not isinstance(desc, dict):
        raise InputError("a mask description must be a JSON object")
    allowed = {"r", "d", "entries", "coeffs", "jets", "rows", "cols"}
    extra = set(desc) - allowed
    if extra:
        raise InputError(f"unknown mask field(s) {sorted(extra)}")
    d = desc.get("d")
    d = None if d is None else _int(d, "d")
    if "jets" in desc:
        jets = {_parse_key(k, d): _matrix(m) for k, m in desc["jets"].items()}
        d = d or len(next(iter(jets)))
        return Mask(jets={a: m for a, m in jets.items()}, d=d)
    if "entries" in desc:
        rows = desc["entries"]
        if not isinstance(rows, list) or not rows:
            raise InputError("'entries' must be a non-empty list of rows")
        r = len(rows)
        if desc.get("r") is not None and _int(desc["r"], "r") != r:
            raise InputError("'r' does not match the number of rows")
        d = d or 1
        C = {}
        for i, row in enumerate(rows):
            if not isinstance(row, list) or len(row) != r:
                raise InputError("a mask must be square")
            for j, ent in enumerate(row):
                if isinstance(ent, dict):
                    if set(ent) - {"coeffs"}:
                        raise InputError(f"unknown entry field(s) {sorted(set(ent) - {'coeffs'})}")
                    ent = ent.get("coeffs", {})
                for key, val in ent.items():
                    C.setdefault(_parse_key(key, d), {})[(i, j)] = parse_scalar(val)
        exact = all(isinstance(v, (Fraction, GaussianRational)) for e in C.values() for v in e.values())
        coeffs = {}
        for key, ent in C.items():
            m = np.empty((r, r), dtype=object) if exact else np.zeros((r, r), complex)
            if exact:
                m[:] = Fraction(0)
            for (i, j), v in ent.items():
                m[i, j] = v if exact else complex(v)
            coeffs[key] = _coerce_matrix(m)
        return Mask(TrigPolyMatrix(coeffs, d, (r, r), exact))
    if "coeffs" in desc:
        coeffs = {_parse_key(k, d): _coerce_matrix(_matrix(m)) for k, m in desc["coeffs"].items()}
        d = d or len(next(iter(coeffs)))
        shapes = {m.shape for m in coeffs.values()}
        if len(shapes) != 1:
            raise InputError("coefficient matrices differ in shape")
        exact = all(m.dtype == object for m in coeffs.values())
        if not exact:
            coeffs = {k: np.asarray(m, complex) for k, m in coeffs.items()}
        return Mask(TrigPolyMatrix(coeffs, d, shapes.pop(), exact))
    raise InputError("a mask needs 'entries', 'coeffs' or 'jets'")


def parse_trig_vector(desc, r, d):
    """Trigonometric column vector from ``[{"0": 2, "1": -1}, ...]`` (one coefficient map per entry)."""
    desc = load_text(desc)
    if isinstance(desc, dict):
        desc = [desc]
    if not isinstance(desc, list) or len(desc) != r:
        raise InputError(f"v needs {r} entries")
    C = {}
    for i, ent in enumerate(desc):
        for key, val in ent.items():
            C.setdefault(_parse_key(key, d), {})[i] = parse_scalar(val)
    exact = all(isinstance(v, (Fraction, GaussianRational)) for e in C.values() for v in e.values())
    coeffs = {}
    for key, ent in C.items():
        m = np.empty((r, 1), dtype=object) if exact else np.zeros((r, 1), complex)
        if exact:
            m[:] = Fraction(0)
        for i, v in ent.items():
            m[i, 0] = v if exact else complex(v)
        coeffs[key] = _coerce_matrix(m)
    return TrigPolyMatrix(coeffs, d, (r, 1), exact)


def to_jsonable(x):
    """Recursively convert reports (numpy, complex, exact scalars, dataclasses) to JSON types."""
    if hasattr(x, "to_dict") and callable(x.to_dict):
        return to_jsonable(x.to_dict())
    if is_dataclass(x) and not isinstance(x, type):
        return to_jsonable(vars(x))
    if isinstance(x, dict):
        return {(k if isinstance(k, str) else mi.to_str(k) if isinstance(k, tuple) else str(k)): to_jsonable(v)
                for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [to_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return to_jsonable(x.tolist())
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (float, np.floating, Fraction)):
        v = float(x)
        return v if math.isfinite(v) else ("inf" if v > 0 else "-inf" if v < 0 else "nan")
    if isinstance(x, (complex, np.complexfloating, GaussianRational)):
        z = complex(x)
        return to_jsonable(z.real) if z.imag == 0 else [to_jsonable(z.real), to_jsonable(z.imag)]
    if x is None or isinstance(x, str):
        return x
    if hasattr(x, "to_json"):
        return to_jsonable(x.to_json())
    return repr(x)
