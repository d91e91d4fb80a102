"""Batch front-end: JSON experiment configs in, CSV/JSON reports out.

One JSON config names the profiles, the Cameron-Martin elements over
them, and a list of checks to run; command-line flags override the
config scalars (seed, n_paths, grid_size).  Unknown keys anywhere in the
config are rejected rather than ignored.  All floats are printed with 17
significant digits so reruns with the same config bytes produce
byte-identical CSV ledgers.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import montecarlo as mc
from .cameron_martin import CMElement, SuppElement, odot
from .errors import ConfigError, FeynpathError
from .feynman import (
    ComplexParam,
    CosLinear,
    ExpLinear,
    Monomial,
    MonomialSpec,
    feynman_monomial,
    monomial_summary,
    wick_moment,
)
from .measure import ProfilePair, build_profile, validate_profile
from .paths import DEFAULT_GRID_N, TimeGrid, sample_gbmp_paths
from .piecewise import PiecewisePoly

CHECK_KINDS = (
    "simulate",
    "feynman",
    "verify-translation",
    "verify-parts",
    "verify-cs",
    "verify-recurrence",
)

RECURRENCE_TOL = 1e-10


# ---------------------------------------------------------------------------
# Strict JSON helpers.


def _expect_keys(obj, where, required, optional=()):
    if not isinstance(obj, dict):
        raise ConfigError("%s: expected an object" % where)
    unknown = set(obj) - set(required) - set(optional)
    if unknown:
        raise ConfigError("%s: unknown keys %s" % (where, sorted(unknown)))
    missing = set(required) - set(obj)
    if missing:
        raise ConfigError("%s: missing keys %s" % (where, sorted(missing)))
    return obj


def _json_17g(value, indent=0):
    """JSON with floats rendered to 17 significant digits, sorted keys."""
    pad = "  " * indent
    if isinstance(value, dict):
        if not value:
            return "{}"
        items = (
            '%s  "%s": %s' % (pad, k, _json_17g(value[k], indent + 1))
            for k in sorted(value)
        )
        return "{\n" + ",\n".join(items) + "\n" + pad + "}"
    if isinstance(value, (list, tuple)):
        if not value:
            return "[]"
        items = ("%s  %s" % (pad, _json_17g(v, indent + 1)) for v in value)
        return "[\n" + ",\n".join(items) + "\n" + pad + "]"
    if isinstance(value, bool):
        return "true" if value else "false"
    if value is None:
        return "null"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        v = float(value)
        if not np.isfinite(v):
            raise ConfigError("cannot serialize non-finite float %r" % v)
        return "%.17g" % v
    if isinstance(value, complex):
        return _json_17g({"re": value.real, "im": value.imag}, indent)
    if isinstance(value, str):
        return json.dumps(value)
    raise ConfigError("cannot serialize %r" % (value,))


def _complex_from(obj, where):
    _expect_keys(obj, where, ("re", "im"))
    return complex(float(obj["re"]), float(obj["im"]))


# ---------------------------------------------------------------------------
# Config model.


@dataclass
class ExperimentConfig:
    seed: int
    n_paths: int
    grid_size: int
    output_dir: str
    profiles: dict
    elements: dict  # name -> (CMElement, profile name)
    checks: list
    config_hash: str
    raw: dict = field(repr=False)

    def element(self, name) -> CMElement:
        if name not in self.elements:
            raise ConfigError("unknown element %r" % name)
        return self.elements[name][0]

    def supp(self, name) -> SuppElement:
        return SuppElement(self.element(name))


def _parse_poly(obj, where) -> PiecewisePoly:
    _expect_keys(obj, where, ("breakpoints", "coeffs"))
    try:
        return PiecewisePoly(obj["breakpoints"], obj["coeffs"])
    except Exception as exc:
        raise ConfigError("%s: %s" % (where, exc)) from exc


def _parse_profile(name, obj) -> ProfilePair:
    where = "profiles.%s" % name
    _expect_keys(obj, where, ("T", "a_prime", "b_prime"))
    a = _parse_poly(obj["a_prime"], where + ".a_prime")
    b = _parse_poly(obj["b_prime"], where + ".b_prime")
    try:
        return build_profile(a, b, float(obj["T"]))
    except FeynpathError as exc:
        raise ConfigError("%s: %s" % (where, exc)) from exc


def _parse_functional(obj, where, config: ExperimentConfig):
    _expect_keys(obj, where, ("type",), ("theta", "ks", "w0", "c", "allow_unbounded"))
    kind = obj["type"]
    if kind == "monomial":
        _expect_keys(obj, where, ("type", "theta", "ks"))
        ks = tuple(config.supp(k) for k in obj["ks"])
        return Monomial(MonomialSpec(config.element(obj["theta"]), ks))
    if kind == "exp_linear":
        _expect_keys(obj, where, ("type", "w0", "c"), ("allow_unbounded",))
        return ExpLinear(
            config.element(obj["w0"]),
            _complex_from(obj["c"], where + ".c"),
            allow_unbounded=bool(obj.get("allow_unbounded", False)),
        )
    if kind == "cos_linear":
        _expect_keys(obj, where, ("type", "w0"))
        return CosLinear(config.element(obj["w0"]))
    raise ConfigError("%s: unknown functional type %r" % (where, kind))


_CHECK_KEYS = {
    "simulate": ((), ("profile", "out", "format")),
    "feynman": (("theta", "ks", "q"), ("expect",)),
    "verify-translation": (("functional", "theta", "k1", "k2"), ()),
    "verify-parts": (("functional", "theta", "k1", "k2", "rho"), ()),
    "verify-cs": (("functional", "theta", "k1", "k2", "lambda"), ()),
    "verify-recurrence": (("theta", "ks", "q"), ()),
}
_CHECK_COMMON = ("kind", "name", "n_paths", "seed", "grid_size")


def load_config(path) -> ExperimentConfig:
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise ConfigError("cannot read config: %s" % exc) from exc
    except json.JSONDecodeError as exc:
        raise ConfigError("config is not valid JSON: %s" % exc) from exc

    _expect_keys(
        raw,
        "config",
        ("seed", "profiles", "elements", "checks"),
        ("n_paths", "grid_size", "output_dir"),
    )
    if not isinstance(raw["seed"], int) or isinstance(raw["seed"], bool):
        raise ConfigError("config.seed must be an integer (no silent nondeterminism)")

    canonical = json.dumps(raw, sort_keys=True, separators=(",", ":")).encode()
    config = ExperimentConfig(
        seed=int(raw["seed"]),
        n_paths=int(raw.get("n_paths", 10000)),
        grid_size=int(raw.get("grid_size", DEFAULT_GRID_N)),
        output_dir=str(raw.get("output_dir", "out")),
        profiles={},
        elements={},
        checks=[],
        config_hash=hashlib.sha256(canonical).hexdigest()[:12],
        raw=raw,
    )
    for name, obj in raw["profiles"].items():
        config.profiles[name] = _parse_profile(name, obj)
    for name, obj in raw["elements"].items():
        where = "elements.%s" % name
        _expect_keys(obj, where, ("profile", "density"))
        pname = obj["profile"]
        if pname not in config.profiles:
            raise ConfigError("%s: unknown profile %r" % (where, pname))
        density = _parse_poly(obj["density"], where + ".density")
        try:
            config.elements[name] = (CMElement(density, config.profiles[pname]), pname)
        except FeynpathError as exc:
            raise ConfigError("%s: %s" % (where, exc)) from exc
    for i, obj in enumerate(raw["checks"]):
        where = "checks[%d]" % i
        if not isinstance(obj, dict) or "kind" not in obj:
            raise ConfigError("%s: expected an object with a 'kind'" % where)
        kind = obj["kind"]
        if kind not in CHECK_KINDS:
            raise ConfigError("%s: unknown kind %r" % (where, kind))
        required, optional = _CHECK_KEYS[kind]
        _expect_keys(obj, where, required + ("kind",), optional + _CHECK_COMMON)
        config.checks.append(obj)
    return config


# ---------------------------------------------------------------------------
# Check runners.  Each returns (ledger_row, result_dict).


def _check_scalars(config: ExperimentConfig, check: dict, overrides: dict):
    n = overrides.get("n_paths") or check.get("n_paths") or config.n_paths
    seed = overrides.get("seed")
    if seed is None:
        seed = check.get("seed", config.seed)
    grid_n = overrides.get("grid_size") or check.get("grid_size") or config.grid_size
    return int(n), int(seed), int(grid_n)


def run_check(config: ExperimentConfig, index: int, check: dict, overrides: dict, out_dir):
    kind = check["kind"]
    name = check.get("name", "%s-%d" % (kind, index))
    n, seed, grid_n = _check_scalars(config, check, overrides)
    result = {"name": name, "kind": kind, "n_paths": n, "seed": seed, "grid_size": grid_n}

    if kind == "simulate":
        pname = check.get("profile") or next(iter(config.profiles))
        profile = config.profiles[pname]
        grid = TimeGrid.build(profile, [e for e, _ in config.elements.values()], n=grid_n)
        ensemble = sample_gbmp_paths(profile, grid, n, seed)
        fmt = check.get("format", "csv")
        out = check.get("out", "%s.%s" % (name, "bin" if fmt == "bin" else "csv"))
        dest = os.path.join(out_dir, out)
        if fmt == "bin":
            ensemble.to_binary(dest)
        elif fmt == "csv":
            ensemble.to_csv(dest)
        else:
            raise ConfigError("simulate format must be 'csv' or 'bin'")
        result.update({"profile": pname, "written": dest, "pass": True})
        row = mc.ledger_row(name, config.config_hash, lhs=0.0, rhs=0.0,
                            n=n, grid=grid.N, seed=seed, passed=True)
        return row, result

    if kind == "feynman":
        spec = MonomialSpec(
            config.element(check["theta"]), tuple(config.supp(k) for k in check["ks"])
        )
        audit: list = []
        value = feynman_monomial(spec, float(check["q"]), audit=audit)
        result.update(
            {
                "value": {"re": value.real, "im": value.imag},
                "q": float(check["q"]),
                "audit": _plain(audit),
            }
        )
        expect = check.get("expect")
        if expect is not None:
            _expect_keys(expect, "checks.expect", ("re", "im"), ("tol",))
            ref = complex(float(expect["re"]), float(expect["im"]))
            tol = float(expect.get("tol", 1e-10))
            passed = abs(value - ref) <= tol
        else:
            ref = value
            passed = True
        result["pass"] = bool(passed)
        row = mc.ledger_row(name, config.config_hash, lhs=value, rhs=ref,
                            n=0, grid=0, seed=seed, passed=passed)
        return row, result

    if kind == "verify-recurrence":
        spec = MonomialSpec(
            config.element(check["theta"]), tuple(config.supp(k) for k in check["ks"])
        )
        value = feynman_monomial(spec, float(check["q"]))
        oracle = wick_moment(monomial_summary(spec), ComplexParam.feynman(float(check["q"])))
        err = abs(value - oracle) / max(1.0, abs(oracle))
        passed = err < RECURRENCE_TOL
        result.update(
            {
                "recurrence": {"re": value.real, "im": value.imag},
                "oracle": {"re": oracle.real, "im": oracle.imag},
                "relative_error": err,
                "pass": bool(passed),
            }
        )
        row = mc.ledger_row(name, config.config_hash, lhs=value, rhs=oracle,
                            n=0, grid=0, seed=seed, se=0.0, sigma_ratio=0.0, passed=passed)
        return row, result

    # Statistical identity checks share the setup below.
    F = _parse_functional(check["functional"], "checks.functional", config)
    theta = config.element(check["theta"])
    k1 = config.supp(check["k1"])
    k2 = config.supp(check["k2"])
    profile = theta.profile
    grid = TimeGrid.build(
        profile,
        [e for e, _ in config.elements.values()]
        + [odot(theta, k1), odot(theta, k2)],
        n=grid_n,
    )
    if kind == "verify-translation":
        report = mc.verify_translation(F, theta, k1, k2, n, seed, grid=grid)
    elif kind == "verify-parts":
        report = mc.verify_parts(F, theta, k1, k2, float(check["rho"]), n, seed, grid=grid)
    elif kind == "verify-cs":
        report = mc.verify_cs_precursor(
            F, theta, k1, k2, float(check["lambda"]), n, seed, grid=grid
        )
    else:  # pragma: no cover
        raise ConfigError("unhandled check kind %r" % kind)
    result.update(report.to_dict())
    result["pass"] = report.passed
    return mc.identity_ledger_row(name, config.config_hash, report), result


def _plain(value):
    """Recursively convert numpy scalars and complex values for output."""
    if isinstance(value, dict):
        return {k: _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    if isinstance(value, complex):
        return {"re": value.real, "im": value.imag}
    if isinstance(value, (np.floating, np.integer)):
        return value.item()
    return value


# ---------------------------------------------------------------------------
# Subcommands.


def _cmd_validate_profile(args) -> int:
    try:
        with open(args.path) as fh:
            raw = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        print("error: %s" % exc, file=sys.stderr)
        return 2
    try:
        if "profiles" in raw:
            config = load_config(args.path)
            name = args.profile or next(iter(config.profiles))
            if name not in config.profiles:
                raise ConfigError("unknown profile %r" % name)
            profile = config.profiles[name]
        else:
            _expect_keys(raw, "profile", ("T", "a_prime", "b_prime"))
            a = _parse_poly(raw["a_prime"], "a_prime")
            b = _parse_poly(raw["b_prime"], "b_prime")
            profile = ProfilePair.from_derivatives(a, b, float(raw["T"]))
    except ConfigError as exc:
        print("error: %s" % exc, file=sys.stderr)
        return 2
    report = validate_profile(profile)
    print(_json_17g(report.to_dict()))
    return 0 if report.passed else 1


def _cmd_feynman(args) -> int:
    try:
        config = load_config(args.config)
        theta = args.theta or "theta"
        if args.ks:
            ks = args.ks.split(",")
        else:
            m = _parse_monomial_arg(args.monomial) if args.monomial else 2
            ks = ["k%d" % (j + 1) for j in range(m)]
        spec = MonomialSpec(config.element(theta), tuple(config.supp(k) for k in ks))
    except ConfigError as exc:
        print("error: %s" % exc, file=sys.stderr)
        return 2
    value = feynman_monomial(spec, args.q)
    print(_json_17g({"re": value.real, "im": value.imag}))
    return 0


def _parse_monomial_arg(text):
    if not text.startswith("m="):
        raise ConfigError("--monomial expects m=<degree>, got %r" % text)
    return int(text[2:])


def _cmd_simulate(args) -> int:
    try:
        config = load_config(args.config)
    except ConfigError as exc:
        print("error: %s" % exc, file=sys.stderr)
        return 2
    overrides = _overrides(args)
    check = {
        "kind": "simulate",
        "name": "simulate",
        "profile": args.profile or next(iter(config.profiles)),
    }
    if args.out:
        check["out"] = os.path.basename(args.out)
        check["format"] = "bin" if args.out.endswith(".bin") else "csv"
    out_dir = os.path.dirname(args.out) or "." if args.out else config.output_dir
    os.makedirs(out_dir, exist_ok=True)
    row, result = run_check(config, 0, check, overrides, out_dir)
    print(_json_17g(_plain(result)))
    return 0


def _cmd_verify(args) -> int:
    try:
        config = load_config(args.config)
    except ConfigError as exc:
        print("error: %s" % exc, file=sys.stderr)
        return 2
    overrides = _overrides(args)
    indices = range(len(config.checks)) if args.all or not args.check else args.check
    out_dir = args.output_dir or config.output_dir
    os.makedirs(out_dir, exist_ok=True)

    def one(i):
        return run_check(config, i, config.checks[i], overrides, out_dir)

    try:
        if args.parallel:
            with ThreadPoolExecutor() as pool:
                outcomes = list(pool.map(one, indices))
        else:
            outcomes = [one(i) for i in indices]
    except (ConfigError, FeynpathError) as exc:
        print("error: %s" % exc, file=sys.stderr)
        return 2

    rows = [row for row, _ in outcomes]
    mc.append_ledger(os.path.join(out_dir, "ledger.csv"), rows)
    all_pass = True
    for i, (_, result) in zip(indices, outcomes):
        dest = os.path.join(out_dir, "check_%03d_%s.json" % (i, result["name"]))
        with open(dest, "w") as fh:
            fh.write(_json_17g(_plain(result)) + "\n")
        all_pass &= bool(result["pass"])
    summary = {
        "config_hash": config.config_hash,
        "checks_run": len(rows),
        "all_pass": all_pass,
        "ledger": os.path.join(out_dir, "ledger.csv"),
    }
    print(_json_17g(summary))
    return 0 if all_pass else 1


def _cmd_report(args) -> int:
    import csv as _csv

    try:
        with open(args.ledger) as fh:
            rows = list(_csv.reader(fh))
    except OSError as exc:
        print("error: %s" % exc, file=sys.stderr)
        return 2
    if not rows or rows[0] != mc.LEDGER_COLUMNS:
        print("error: not a ledger file", file=sys.stderr)
        return 2
    body = rows[1:]
    failed = [r for r in body if r[-1] != "true"]
    print(
        _json_17g(
            {
                "entries": len(body),
                "failed": len(failed),
                "failed_checks": [r[0] for r in failed],
            }
        )
    )
    return 1 if failed else 0


def _overrides(args) -> dict:
    return {
        "n_paths": getattr(args, "n", None),
        "seed": getattr(args, "seed", None),
        "grid_size": getattr(args, "grid", None),
    }


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="feynpath",
        description="Gaussian path simulation and Feynman-integral verification",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate-profile", help="check a profile spec or config profile")
    p.add_argument("path")
    p.add_argument("--profile", help="profile name when given a full config")
    p.set_defaults(func=_cmd_validate_profile)

    p = sub.add_parser("simulate", help="sample an ensemble and write it out")
    p.add_argument("--config", required=True)
    p.add_argument("--profile")
    p.add_argument("--n", type=int)
    p.add_argument("--grid", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--out", help="destination (.csv or .bin)")
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("feynman", help="closed-form monomial Feynman integral")
    p.add_argument("--config", required=True)
    p.add_argument("--q", type=float, required=True)
    p.add_argument("--monomial", help="m=<degree>, selecting elements k1..km")
    p.add_argument("--theta", help="element name for theta (default 'theta')")
    p.add_argument("--ks", help="comma-separated element names")
    p.set_defaults(func=_cmd_feynman)

    p = sub.add_parser("verify", help="run configured checks and append the ledger")
    p.add_argument("--config", required=True)
    p.add_argument("--all", action="store_true", help="run every configured check")
    p.add_argument("--check", type=int, nargs="*", help="indices of checks to run")
    p.add_argument("--n", type=int)
    p.add_argument("--grid", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--output-dir")
    p.add_argument("--parallel", action="store_true")
    p.set_defaults(func=_cmd_verify)

    p = sub.add_parser("report", help="summarize a ledger CSV")
    p.add_argument("--ledger", required=True)
    p.set_defaults(func=_cmd_report)
    return parser


def run(argv) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code not in (0, None) else 0
    try:
        return args.func(args)
    except ConfigError as exc:
        print("error: %s" % exc, file=sys.stderr)
        return 2
    except FeynpathError as exc:
        print("error: %s" % exc, file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(run(sys.argv[1:]))
