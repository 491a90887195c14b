"""Command-line entry point: one subcommand per computational module.

Exit codes: 0 ok, 1 numerical failure, 2 validation, 3 excluded eps,
4 failed acceptance criterion.  Every run prints one JSON document to stdout;
``--output`` also writes it to a file and ``--csv`` writes the plot series of
``sweep`` and ``scan``.  Nothing is written when a run fails.

``RESONANT_NLS_THREADS`` caps the BLAS/OpenMP thread pools.
"""
from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from dataclasses import dataclass, field

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_VALIDATION = 2
EXIT_EXCLUDED = 3
EXIT_CRITERION = 4

SUITE_NAMES = ("q-residual", "determinant", "tree-oracle", "scaling", "scaling-multimode",
               "separation", "counterterm-bound", "measure", "symmetry", "jacobian", "all")

# key -> (type, default); a ``None`` default marks a required key
SCHEMAS: dict[str, dict[str, tuple]] = {
    "modeset": {"n": (int, None), "gaps": (str, "")},
    "amplitudes": {"modeset": (str, None)},
    "series": {"m0": (int, 1), "eps": (float, None), "order": (int, 4), "modeset": (str, ""),
               "dump": (bool, False)},
    "solve": {"modeset": (str, None), "eps": (float, None), "nmax": (int, 0), "mmax": (int, 0),
              "tol": (float, 1e-11), "dump": (bool, False)},
    "sweep": {"modeset": (str, None), "eps_list": (str, None), "nmax": (int, 0),
              "mmax": (int, 0), "tol": (float, 1e-11)},
    "scan": {"eps0": (float, None), "grid": (int, 1000), "nmax": (int, 0), "second": (bool, False),
             "modeset": (str, "")},
    "verify": {"suite": (str, "all")},
}


class ValidationError(ValueError):
    pass


@dataclass
class RunConfig:
    subcommand: str
    params: dict = field(default_factory=dict)
    output: str | None = None
    csv: str | None = None

    def __post_init__(self):
        if self.subcommand not in SCHEMAS:
            raise ValidationError(f"unknown subcommand {self.subcommand!r}")
        schema = SCHEMAS[self.subcommand]
        unknown = sorted(set(self.params) - set(schema))
        if unknown:
            raise ValidationError(f"unknown parameters for {self.subcommand}: {unknown}")
        resolved = {}
        for key, (kind, default) in schema.items():
            if key in self.params and self.params[key] is not None:
                value = self.params[key]
                try:
                    resolved[key] = value if isinstance(value, kind) else kind(value)
                except (TypeError, ValueError) as exc:
                    raise ValidationError(f"{key}: expected {kind.__name__}, got {value!r}") from exc
            elif default is None:
                raise ValidationError(f"missing required parameter {key!r}")
            else:
                resolved[key] = default
        self.params = resolved
        if self.csv and self.subcommand not in ("sweep", "scan"):
            raise ValidationError("--csv is only produced by sweep and scan")


# ------------------------------------------------------------------ parsing


def _modeset(text: str):
    from .modesets import parse_modeset
    try:
        spec = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"--modeset is not valid JSON: {exc}") from exc
    return parse_modeset(spec)


def _int_list(text: str) -> list[int]:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise ValidationError(f"expected comma-separated integers, got {text!r}") from exc


def _float_list(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise ValidationError(f"expected comma-separated numbers, got {text!r}") from exc


def _lattice(params, modeset):
    from .fourier import Lattice
    from .solver import default_lattice
    base = default_lattice(modeset)
    if params["nmax"] < 0 or params["mmax"] < 0:
        raise ValidationError("--nmax and --mmax must be nonnegative")
    return Lattice(params["nmax"] or base.n_max, params["mmax"] or base.m_max)


# ------------------------------------------------------------------ commands


def _cmd_modeset(p):
    from .modesets import construct_lemma5, construct_lemma6
    gaps = _int_list(p["gaps"])
    if gaps:
        s = construct_lemma6(p["n"], gaps)
    elif p["n"] == 1:
        raise ValidationError("constructions need N >= 2; pass one-mode sets directly as --modeset")
    else:
        s = construct_lemma5(p["n"])[0]
    out = s.report().to_dict()
    out["construction"] = s.construction
    return out, None


def _cmd_amplitudes(p):
    from .amplitudes import build_linearization, solve_amplitudes
    s = _modeset(p["modeset"])
    av = solve_amplitudes(s)
    lm = build_linearization(av)
    out = s.report().to_dict()
    out["amplitudes"] = {str(m): av.a[m] for m in av.modes}
    out["linearization"] = lm.to_dict()
    return out, None


def _cmd_series(p):
    from .amplitudes import solve_amplitudes
    from .lindstedt import FrequencyState, assign_scales, series_ladder
    from .modesets import ModeSet
    if p["order"] < 0:
        raise ValidationError("--order must be >= 0")
    if not p["eps"] > 0:
        raise ValidationError("--eps must be positive")
    s = _modeset(p["modeset"]) if p["modeset"] else ModeSet.single(p["m0"])
    av = solve_amplitudes(s)
    ladder = series_ladder(av, FrequencyState.bare(p["eps"]), p["order"])
    out = ladder.to_dict(coefficients=p["dump"])
    points = [key for f in ladder.per_k for key, v in f.items() if v != 0]
    scales = assign_scales(ladder.lattice, ladder.fs, points=points)
    out["scale_histogram"] = {str(k): v for k, v in scales.histogram().items()}
    return out, None


def _cmd_solve(p):
    from .solver import newton_solve
    s = _modeset(p["modeset"])
    lattice = _lattice(p, s)
    rep, u = newton_solve(lattice, s, p["eps"], tol=p["tol"])
    out = rep.to_dict()
    if p["dump"]:
        out["solution"] = u.to_records()
    return out, None


def _cmd_sweep(p):
    from .solver import scaling_sweep
    s = _modeset(p["modeset"])
    eps_list = _float_list(p["eps_list"])
    if not eps_list or min(eps_list) <= 0:
        raise ValidationError("--eps-list needs positive values")
    sw = scaling_sweep(s, eps_list, _lattice(p, s), tol=p["tol"])
    return sw.to_dict(), list(sw.csv_rows())


def _cmd_scan(p):
    from .diophantine import CountertermModel, default_n_max, scan_epsilon
    from .solver import frequency_iteration
    families = ("base", "first", "second") if p["second"] else ("base", "first")
    model = None
    if p["modeset"]:
        model = CountertermModel.from_state(frequency_iteration(_modeset(p["modeset"]), p["eps0"]))
    n_max = p["nmax"] or default_n_max(p["eps0"])
    rep = scan_epsilon(p["eps0"], p["grid"], n_max=n_max, model=model, families=families)
    return rep.to_dict(), list(rep.csv_rows())


class CriterionFailure(Exception):
    def __init__(self, payload):
        super().__init__("acceptance criterion failed")
        self.payload = payload


def _cmd_verify(p):
    from .verify import run_suite
    if p["suite"] not in SUITE_NAMES:
        raise ValidationError(f"unknown suite {p['suite']!r}; choose from {list(SUITE_NAMES)}")
    results = run_suite(p["suite"])
    for r in results:
        print(r.line(), file=sys.stderr)
    out = {"suite": p["suite"], "passed": all(r.passed for r in results),
           "criteria": [r.to_dict() for r in results]}
    if not out["passed"]:
        raise CriterionFailure(out)
    return out, None


COMMANDS = {
    "modeset": _cmd_modeset,
    "amplitudes": _cmd_amplitudes,
    "series": _cmd_series,
    "solve": _cmd_solve,
    "sweep": _cmd_sweep,
    "scan": _cmd_scan,
    "verify": _cmd_verify,
}


# ------------------------------------------------------------------ driver


def _dumps(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, allow_nan=True, default=_default)


def _default(obj):
    from fractions import Fraction

    import numpy as np
    if isinstance(obj, Fraction):
        return f"{obj.numerator}/{obj.denominator}"
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    raise TypeError(f"not serializable: {type(obj).__name__}")


def _emit(payload, config: RunConfig, rows=None) -> None:
    text = _dumps(payload)
    if config.output:
        with open(config.output, "w") as fh:
            fh.write(text + "\n")
    if config.csv and rows is not None:
        with open(config.csv, "w", newline="") as fh:
            csv.writer(fh).writerows(rows)
    sys.stdout.write(text + "\n")


def _error(kind: str, message: str, **extra) -> str:
    return _dumps({"error": {"kind": kind, "message": message, **extra}})


def run(config: RunConfig) -> int:
    """Dispatch one validated configuration; returns the exit status."""
    from .errors import ConvergenceError, DiophantineViolation, InsufficientData, StructuralError
    try:
        payload, rows = COMMANDS[config.subcommand](config.params)
    except ValidationError as exc:
        sys.stdout.write(_error("validation", str(exc)) + "\n")
        return EXIT_VALIDATION
    except StructuralError as exc:
        sys.stdout.write(_error("validation", str(exc)) + "\n")
        return EXIT_VALIDATION
    except DiophantineViolation as exc:
        witness = list(exc.witness) if exc.witness is not None else None
        sys.stdout.write(_error("excluded-eps", str(exc), witness=witness,
                                condition=exc.condition) + "\n")
        return EXIT_EXCLUDED
    except CriterionFailure as exc:
        sys.stdout.write(_dumps(exc.payload) + "\n")
        return EXIT_CRITERION
    except (ConvergenceError, InsufficientData) as exc:
        sys.stdout.write(_error(type(exc).__name__, str(exc)) + "\n")
        return EXIT_FAILURE
    _emit(payload, config, rows)
    return EXIT_OK


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        sys.stdout.write(_error("validation", message) + "\n")
        raise SystemExit(EXIT_VALIDATION)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="resonant-nls", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="subcommand", required=True, parser_class=_Parser)

    def add(name, help_text):
        sp = sub.add_parser(name, help=help_text)
        sp.add_argument("--output", help="also write the JSON report here")
        return sp

    sp = add("modeset", "construct and validate a resonant mode set")
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--gaps", default="", help="comma-separated gaps i1,i2,...")

    sp = add("amplitudes", "exact amplitudes and the resonant block")
    sp.add_argument("--modeset", required=True, help='JSON, e.g. "[7,8]"')

    sp = add("series", "Lindstedt ladder summary")
    sp.add_argument("--m0", type=int, default=1)
    sp.add_argument("--eps", type=float, required=True)
    sp.add_argument("--order", type=int, default=4)
    sp.add_argument("--modeset", default="")
    sp.add_argument("--dump", action="store_true", help="include every coefficient")

    sp = add("solve", "Newton solve at one eps")
    sp.add_argument("--modeset", required=True)
    sp.add_argument("--eps", type=float, required=True)
    sp.add_argument("--nmax", type=int, default=0)
    sp.add_argument("--mmax", type=int, default=0)
    sp.add_argument("--tol", type=float, default=1e-11)
    sp.add_argument("--dump", action="store_true", help="include the solution coefficients")

    sp = add("sweep", "distance scaling over several eps")
    sp.add_argument("--modeset", required=True)
    sp.add_argument("--eps-list", required=True, dest="eps_list")
    sp.add_argument("--nmax", type=int, default=0)
    sp.add_argument("--mmax", type=int, default=0)
    sp.add_argument("--tol", type=float, default=1e-11)
    sp.add_argument("--csv")

    sp = add("scan", "excluded-measure scan of (0, eps0]")
    sp.add_argument("--eps0", type=float, required=True)
    sp.add_argument("--grid", type=int, default=1000)
    sp.add_argument("--nmax", type=int, default=0)
    sp.add_argument("--second", action="store_true", help="add the second Melnikov family")
    sp.add_argument("--modeset", default="", help="use solver counterterms of this set")
    sp.add_argument("--csv")

    sp = add("verify", "run acceptance suites")
    sp.add_argument("--suite", default="all", choices=SUITE_NAMES)
    return parser


def _apply_threads() -> None:
    threads = os.environ.get("RESONANT_NLS_THREADS")
    if threads:
        for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
            os.environ[var] = threads


def main(argv=None) -> int:
    _apply_threads()
    args = vars(build_parser().parse_args(argv))
    subcommand = args.pop("subcommand")
    output = args.pop("output", None)
    csv_path = args.pop("csv", None)
    try:
        config = RunConfig(subcommand, args, output, csv_path)
    except ValidationError as exc:
        sys.stdout.write(_error("validation", str(exc)) + "\n")
        return EXIT_VALIDATION
    return run(config)


if __name__ == "__main__":
    sys.exit(main())
