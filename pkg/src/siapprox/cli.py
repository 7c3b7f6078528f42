"""Command-line front end.

Exit codes: 0 on success (warnings are embedded in the report), 2 for input
errors, 3 for numerical failures.
"""
import argparse
import json
import os
import sys
import warnings
from dataclasses import asdict, dataclass, field, fields

import numpy as np

from . import generators as gen
from .errors import InputError, SIApproxError, ZeroSolutionOnly
from .io import parse_generator, parse_mask, parse_trig_vector, to_jsonable

EXIT_OK, EXIT_INPUT, EXIT_NUMERIC = 0, 2, 3
COMMANDS = ("analyze-psi", "analyze-fsi", "analyze-mask", "quasi-interp", "empirical")


@dataclass
class RunConfig:
    """Effective configuration of one run; every field is echoed in the report."""
    command: str
    generator: object = None
    mask: object = None
    s: float = 0.0
    s_list: list = field(default_factory=lambda: [-1.0, 0.0, 0.5])
    kmax: int = 4
    k: int = None
    radius: int = None
    grid: int = 64
    levels: list = field(default_factory=lambda: [3, 8])
    index_set: list = None
    a: object = None
    v: object = None
    out: str = None
    csv: str = None
    seed: int = 0
    threads: int = 1

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, data):
        names = {f.name for f in fields(cls)}
        unknown = set(data) - names
        if unknown:
            raise InputError(f"unknown configuration field(s): {sorted(unknown)}")
        if data.get("command") not in COMMANDS:
            raise InputError(f"command must be one of {COMMANDS}")
        return cls(**data)


def _threads():
    raw = os.environ.get("SIAPPROX_THREADS", "1")
    try:
        n = int(raw)
    except ValueError:
        raise InputError(f"SIAPPROX_THREADS must be a positive integer, got {raw!r}") from None
    if n < 1:
        raise InputError("SIAPPROX_THREADS must be at least 1")
    return n


def _cfg(config):
    from .ladder import BracketConfig
    return BracketConfig(s=config.s, lattice_radius=config.radius)


def _single(obj, what):
    if isinstance(obj, gen.GeneratorVector):
        if obj.r != 1:
            raise InputError(f"{what} needs a single generator, got {obj.r}")
        return obj[0]
    return obj


def cmd_analyze_psi(config):
    """Strang-Fix orders, fitted order and Sobolev consistency for one generator."""
    from .ladder import psi_order, psi_order_consistency, sf_order
    from .errors import InconclusiveAtDegree
    phi = _single(parse_generator(config.generator), "analyze-psi")
    try:
        sf = sf_order(phi, max_k=max(config.kmax, 1) + 4)
    except InconclusiveAtDegree as e:
        sf = {"order": None, "note": str(e)}
    fit, flags = psi_order(phi, config.s, _cfg(config))
    cons = psi_order_consistency(phi, config.s_list, _cfg(config))
    return {"sf": sf, "fit": fit, "order": fit.order, "flags": flags, "consistency": cons}


def _default_index_set(d):
    return [list(2 * np.pi * np.eye(d)[j]) for j in range(d)]


def cmd_analyze_fsi(config):
    """Pencil order, eigenvalue bounds and superfunction certificate for a generator vector."""
    from .ladder import eig_upper_bound, fsi_order, superfunction_sample
    spec = config.generator
    Phi = gen.as_vector(parse_generator(spec))
    I = config.index_set
    I = _default_index_set(Phi.d) if I is None else [[2 * np.pi * float(x) for x in row] for row in I]
    fit = fsi_order(Phi, config.s, _cfg(config))
    bound = eig_upper_bound(Phi, I, config.s)
    v = None
    if config.v is not None:
        v = parse_trig_vector(config.v, Phi.r, Phi.d)
    elif isinstance(spec, str) and spec.startswith(("badpair", "bad_pair")):
        v = gen.bad_pair_v(int(spec.partition(":")[2] or 4))
    sup = superfunction_sample(Phi, config.s, _cfg(config), v=v)
    order = fit.order
    exact = bool(sup["certified"] and np.isfinite(bound["bound"]) and fit.snapped is not None
                 and abs(bound["bound"] - order) < 1e-9)
    report = {
        "fit": fit, "order": order, "bounds": bound,
        "index_set_over_2pi": [[x / (2 * np.pi) for x in row] for row in I],
        "superfunction": {k: sup[k] for k in ("inf_abs_pencil", "inf_abs_eigen", "certified", "threshold",
                                              "degenerate", "v_at_origin_times_phi") if k in sup},
        "order_is_exact": exact,
    }
    if v is not None:
        from .ladder import psi_order
        psi = gen.superfunction_symbol(v, Phi)
        pfit, pflags = psi_order(psi, config.s, _cfg(config))
        report["superfunction"]["psi_order"] = pfit
        report["superfunction"]["psi_flags"] = pflags
    if Phi.r == 1:
        report["psi"] = cmd_analyze_psi(config)
    return report


def cmd_analyze_mask(config):
    """Spectral level, solution space, maximal Z_k and coherent order of a mask."""
    from .refinement import (coherent_order, dyadic_spectral_level, max_Zk_solve, range_membership,
                             solve_R, universal_quasi_interp)
    mask = parse_mask(config.mask)
    report = {"mask": mask.to_json(), "N": dyadic_spectral_level(mask)}
    try:
        basis = solve_R(mask)
    except ZeroSolutionOnly as e:
        report["status"] = "zero solution only"
        report["note"] = str(e)
        return report
    report["status"] = "ok"
    report["dim"] = basis.dim
    report["residuals"] = basis.residuals()
    report["growth_constant"] = basis.growth_constant()
    if mask.jets_only:
        report["range_membership"] = range_membership(mask)
        return report
    sol = max_Zk_solve(mask, config.kmax, basis)
    report["k_star"] = sol.k
    report["v"] = sol.v
    if basis.solutions:
        co = coherent_order(basis, config.s, _cfg(config))
        report["coherent"] = {"fit": co["fit"], "order": co["order"], "degenerate": co["degenerate"],
                              "regular": co["regular"]}
    if sol.v is not None and sol.k >= 1:
        qi = [universal_quasi_interp(mask, sol.v, sol.k, i, basis) for i in range(basis.dim)]
        report["quasi_interp"] = [{k: v for k, v in q.items() if k != "scheme"} for q in qi]
    return report


def cmd_quasi_interp(config):
    """Polynomial-reproducing scheme for a generator (or a combination of generators)."""
    from .quasi_interp import bspline_semidiscrete, qi_fsi, qi_psi
    if config.k is None:
        raise InputError("quasi-interp needs --k")
    obj = parse_generator(config.generator)
    if isinstance(obj, gen.GeneratorVector) and obj.r > 1 or config.a is not None:
        Phi = gen.as_vector(obj)
        a = config.a if config.a is not None else ["delta"] * Phi.r
        if isinstance(a, str):
            a = json.loads(a)
        scheme = qi_fsi(Phi, a, config.k)
    else:
        scheme = qi_psi(_single(obj, "quasi-interp"), config.k)
    spec = config.generator
    if isinstance(spec, str) and spec.startswith("bspline") or isinstance(spec, dict) and spec.get("kind") == "bspline":
        k = int(spec.partition(":")[2] or 1) if isinstance(spec, str) else int(spec.get("k", 1))
        scheme.extra["semidiscrete_residual"] = bspline_semidiscrete(k, scheme)
    return {"scheme": scheme, "g_repr": {str(a): repr(p) for a, p in scheme.g.items()}}


def cmd_empirical(config):
    """Error curve on a dyadic h sweep and the fitted slope."""
    from .empirical import order_curve
    Phi = gen.as_vector(parse_generator(config.generator))
    lo, hi = config.levels
    h = [2.0 ** -j for j in range(int(lo), int(hi) + 1)]
    curve = order_curve(None, Phi, config.s, h, _cfg(config), config.grid, workers=config.threads)
    if config.csv:
        with open(config.csv, "w", newline="") as fh:
            fh.write(curve.to_csv())
    return {"curve": curve, "slope": curve.slope, "order": curve.order}


HANDLERS = {
    "analyze-psi": cmd_analyze_psi,
    "analyze-fsi": cmd_analyze_fsi,
    "analyze-mask": cmd_analyze_mask,
    "quasi-interp": cmd_quasi_interp,
    "empirical": cmd_empirical,
}


def build_parser():
    p = argparse.ArgumentParser(prog="siapprox", description="Measure how fast dilated shift-invariant spaces approximate smooth functions.")
    p.add_argument("--config", help="JSON file with a full run configuration (flags override it)")
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        q = sub.add_parser(name, help=HANDLERS[name].__doc__.splitlines()[0])
        q.add_argument("--generator", help="generator JSON or alias (bspline:k, boxspline:221, fredrickson, badpair:k)")
        q.add_argument("--mask", help="mask JSON or alias (bspline:k, counterexample)")
        q.add_argument("--s", type=float, help="Sobolev exponent")
        q.add_argument("--s-list", dest="s_list", help="comma separated exponents for the consistency table")
        q.add_argument("--kmax", type=int, help="largest order tried")
        q.add_argument("--k", type=int, help="order of the quasi-interpolation scheme")
        q.add_argument("--radius", type=int, help="starting lattice radius for bracket sums")
        q.add_argument("--grid", type=int, help="quadrature nodes per dimension")
        q.add_argument("--levels", help="h = 2^-lo .. 2^-hi as 'lo:hi'")
        q.add_argument("--I", dest="index_set", help="lattice points (in units of 2 pi) as JSON, e.g. [[0,1],[1,0]]")
        q.add_argument("--a", help="coefficient sequences for quasi-interp, JSON list of {index: value}")
        q.add_argument("--v", help="trigonometric vector, JSON list of {index: value}")
        q.add_argument("--seed", type=int)
        q.add_argument("--out", help="write the JSON report here")
        q.add_argument("--csv", help="write the error curve as CSV here (empirical)")
    return p


def _config_from_args(args):
    data = {}
    if args.config:
        try:
            with open(args.config) as fh:
                data = json.load(fh)
        except (OSError, json.JSONDecodeError) as e:
            raise InputError(f"cannot read config: {e}") from None
        if not isinstance(data, dict):
            raise InputError("config must be a JSON object")
    data["command"] = args.command
    for name in ("generator", "mask", "s", "kmax", "k", "radius", "grid", "a", "v", "seed", "out", "csv"):
        val = getattr(args, name)
        if val is not None:
            data[name] = val
    if args.s_list is not None:
        try:
            data["s_list"] = [float(x) for x in args.s_list.split(",")]
        except ValueError:
            raise InputError("--s-list expects comma separated numbers") from None
    if args.levels is not None:
        try:
            lo, hi = (int(x) for x in args.levels.split(":"))
        except ValueError:
            raise InputError("--levels expects 'lo:hi'") from None
        data["levels"] = [lo, hi]
    if args.index_set is not None:
        try:
            data["index_set"] = json.loads(args.index_set)
        except json.JSONDecodeError as e:
            raise InputError(f"malformed --I: {e}") from None
    data["threads"] = _threads()
    config = RunConfig.from_dict(data)
    if config.command in ("analyze-psi", "analyze-fsi", "quasi-interp", "empirical") and config.generator is None:
        raise InputError(f"{config.command} needs --generator")
    if config.command == "analyze-mask" and config.mask is None:
        raise InputError("analyze-mask needs --mask")
    return config


def run(config):
    """Run one command; returns ``(exit_code, report)``."""
    np.random.seed(config.seed)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        try:
            body = HANDLERS[config.command](config)
            code = EXIT_OK
        except InputError as e:
            body, code = {"error": str(e), "type": "InputError"}, EXIT_INPUT
        except (SIApproxError, np.linalg.LinAlgError, ArithmeticError) as e:
            body, code = {"error": str(e), "type": type(e).__name__}, EXIT_NUMERIC
    report = {"config": config.to_dict(), **body,
              "warnings": sorted({f"{w.category.__name__}: {w.message}" for w in caught})}
    return code, to_jsonable(report)


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        config = _config_from_args(args)
    except InputError as e:
        print(json.dumps({"error": str(e), "type": "InputError"}), file=sys.stderr)
        return EXIT_INPUT
    code, report = run(config)
    text = json.dumps(report, indent=2)
    if config.out:
        with open(config.out, "w") as fh:
            fh.write(text + "\n")
    print(text)
    return code


if __name__ == "__main__":
    sys.exit(main())
