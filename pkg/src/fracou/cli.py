"""Batch command-line front end.

Subcommands:

* ``cov``: stationary auto-covariance at given lags, or ``E[X_s X_t]`` of the
  solution started at zero for given ``s:t`` pairs;
* ``regime``: the classified asymptotic decay law as one JSON record;
* ``simulate``: sample an ensemble, write it (binary, or CSV for a ``.csv``
  path) together with a manifest holding the full configuration and summary
  statistics;
* ``validate``: run validation suites, or re-check an ensemble file against
  its manifest.

Exit codes: 0 success, 1 validation failure, 2 usage or parameter error.
Defaults may come from a flat ``key=value`` file given by ``--config``;
explicit flags override it.  ``FRACOU_OUTPUT_DIR`` sets the directory for
relative output paths.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from . import analytics as an
from . import kernels as kn
from . import simulate as sim
from . import storage
from . import validation
from .errors import FracOUError
from .quadrature import QuadConfig

__all__ = ["main", "build_parser", "read_config", "summarize"]

ENV_OUTPUT_DIR = "FRACOU_OUTPUT_DIR"
_MANIFEST_SKIP = ("command", "library_version", "output")


class UsageError(Exception):
    """Invalid parameters; reported on stderr with exit code 2."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


# ---------------------------------------------------------------- parsing helpers

def _floats(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise UsageError(f"expected comma-separated numbers, got {text!r}") from exc


def _pairs(text: str) -> list[tuple[float, float]]:
    out = []
    for item in text.split(","):
        if not item.strip():
            continue
        parts = item.split(":")
        if len(parts) != 2:
            raise UsageError(f"pairs are written s:t, got {item!r}")
        try:
            out.append((float(parts[0]), float(parts[1])))
        except ValueError as exc:
            raise UsageError(f"bad pair {item!r}") from exc
    return out


def read_config(path) -> dict:
    """Flat ``key=value`` file; ``#`` starts a comment, dashes in keys become underscores."""
    out = {}
    try:
        lines = Path(path).read_text().splitlines()
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from exc
    for num, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{num}: expected key=value")
        key, value = line.split("=", 1)
        out[key.strip().replace("-", "_")] = value.strip()
    return out


def _common(p: argparse.ArgumentParser):
    p.add_argument("--config", help="flat key=value file with defaults for this command")
    p.add_argument("--output", "-o", help="output file (default: stdout for tables)")
    p.add_argument("--format", choices=("csv", "json"), default="csv", help="table format")
    p.add_argument("--threads", type=int, default=1, help="worker threads (results do not depend on it)")
    p.add_argument("--rel-tol", type=float, default=1e-8, help="quadrature relative tolerance")
    p.add_argument("--abs-tol", type=float, default=1e-12, help="quadrature absolute tolerance")


def _process_args(p: argparse.ArgumentParser):
    p.add_argument("--process", default="fbm", choices=("fbm", "subfbm", "bifbm", "hermite"))
    p.add_argument("--kind", default="first", choices=("first", "second"))
    p.add_argument("--H", type=float, default=None)
    p.add_argument("--K", type=float, default=None)
    p.add_argument("--q", type=int, default=None)
    p.add_argument("--theta", type=float, default=1.0)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="fracou", description=__doc__.split("\n\n")[0])
    parser.add_argument("--version", action="version", version=f"fracou {__version__}")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    cov = sub.add_parser("cov", help="auto-covariance tables")
    _process_args(cov)
    cov.add_argument("--lags", type=_floats, help="comma-separated lags for the stationary auto-covariance")
    cov.add_argument("--lag", type=float, help="a single lag")
    cov.add_argument("--pairs", type=_pairs, help="comma-separated s:t pairs for E[X_s X_t] from X_0 = 0")
    _common(cov)

    reg = sub.add_parser("regime", help="asymptotic decay law as JSON")
    _process_args(reg)
    _common(reg)
    reg.set_defaults(format="json")

    simp = sub.add_parser("simulate", help="sample an ensemble")
    _process_args(simp)
    simp.add_argument("--quantity", default="ou", choices=("driver", "ou", "stationary"),
                      help="driving noise, OU solution from 0, or stationary solution")
    simp.add_argument("--t1", type=float, default=10.0)
    simp.add_argument("--n", type=int, default=1025, help="number of grid points")
    simp.add_argument("--n-paths", type=int, default=1000)
    simp.add_argument("--seed", type=int, default=0)
    simp.add_argument("--method", default=None, help="sampler: auto/circulant/dense or dense/circulant/pathwise")
    simp.add_argument("--burn-in", type=float, default=None)
    _common(simp)

    val = sub.add_parser("validate", help="run validation suites")
    val.add_argument("--suite", default="identities",
                     help=f"comma-separated suites from {sorted(validation.SUITES)}; empty runs nothing")
    val.add_argument("--budget", default="default", choices=sorted(validation.BUDGETS))
    val.add_argument("--ensemble", help="ensemble file to re-check against its manifest")
    _common(val)
    return parser


def _parse(argv) -> argparse.Namespace:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command is None:
        raise UsageError("a subcommand is required: cov, regime, simulate or validate")
    if getattr(args, "config", None):
        cfg = {k: v for k, v in read_config(args.config).items()
               if k not in _MANIFEST_SKIP and not k.startswith("summary.")}
        subparser = parser._subparsers._group_actions[0].choices[args.command]
        known = {a.dest: a for a in subparser._actions}
        defaults = {}
        for key, value in cfg.items():
            action = known.get(key)
            if action is None or key in ("config", "help"):
                raise UsageError(f"unknown config key {key!r} for {args.command}")
            if value == "None":
                defaults[key] = None
            elif action.type is not None:
                try:
                    defaults[key] = action.type(value)
                except (TypeError, ValueError) as exc:
                    raise UsageError(f"bad value for {key}: {value!r}") from exc
            else:
                defaults[key] = value
            if action.choices is not None and defaults[key] is not None and defaults[key] not in action.choices:
                raise UsageError(f"bad value for {key}: {value!r}")
        subparser.set_defaults(**defaults)
        args = parser.parse_args(argv)
    return args


def _quad(args) -> QuadConfig:
    return QuadConfig(rel_tol=args.rel_tol, abs_tol=args.abs_tol)


def _spec(args):
    if args.H is None:
        raise UsageError("--H is required")
    p = kn.process_from_name(args.process, args.H, K=args.K, q=args.q)
    return an.OUSpec.first(p, args.theta) if args.kind == "first" else an.OUSpec.second(p, args.theta)


def _output_path(args, default: str | None = None) -> Path | None:
    """Resolve the result path; ``None`` means stdout.

    Tables go to stdout unless ``--output`` or ``FRACOU_OUTPUT_DIR`` is given;
    in the latter case the file is named after the command.
    """
    name = args.output or default
    if name is None:
        if not os.environ.get(ENV_OUTPUT_DIR):
            return None
        name = f"{args.command}.{args.format}"
    path = Path(name)
    base = os.environ.get(ENV_OUTPUT_DIR)
    if base and not path.is_absolute():
        path = Path(base) / path
    path.parent.mkdir(parents=True, exist_ok=True)
    return path


# ---------------------------------------------------------------- output

def _fmt(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return storage.fmt_float(v)
    return str(v)


def _emit(rows: list[dict], args, out):
    if args.format == "json":
        for r in rows:
            out.write(json.dumps({k: (float(v) if isinstance(v, np.floating) else v) for k, v in r.items()}) + "\n")
        return
    if not rows:
        return
    cols = list(rows[0])
    out.write(",".join(cols) + "\n")
    for r in rows:
        out.write(",".join(_fmt(r[c]) for c in cols) + "\n")


def _mfmt(v) -> str:
    """Manifest text: shortest exact float form, so values round-trip."""
    if isinstance(v, (float, np.floating)) and not isinstance(v, bool):
        return repr(float(v))
    return _fmt(v)


def _manifest_items(args, extra: dict | None = None) -> dict:
    items = {"command": args.command, "library_version": __version__}
    for key, value in sorted(vars(args).items()):
        if key in ("command", "config", "output"):
            continue
        if isinstance(value, list):
            if value and isinstance(value[0], tuple):
                value = ",".join(f"{_mfmt(s)}:{_mfmt(t)}" for s, t in value)
            else:
                value = ",".join(_mfmt(v) for v in value)
        items[key] = _mfmt(value) if value is not None else "None"
    for key, value in (extra or {}).items():
        items[key] = _mfmt(value)
    return items


def _write_manifest(path: Path, items: dict) -> Path:
    mpath = path.with_name(path.name + ".manifest")
    mpath.write_text("".join(f"{k}={v}\n" for k, v in items.items()))
    return mpath


def _write_table(rows: list[dict], args, stdout):
    path = _output_path(args)
    if path is None:
        _emit(rows, args, stdout)
        return
    with open(path, "w") as fh:
        _emit(rows, args, fh)
    _write_manifest(path, _manifest_items(args))


# ---------------------------------------------------------------- commands

def cmd_cov(args, stdout) -> int:
    ou = _spec(args)
    cfg = _quad(args)
    if args.pairs:
        if args.lags or args.lag is not None:
            raise UsageError("give either lags or pairs, not both")
        rows = [{"s": s, "t": t, "value": an.ou_cov(ou, min(s, t), max(s, t), cfg)} for s, t in args.pairs]
    else:
        lags = list(args.lags or [])
        if args.lag is not None:
            lags.append(args.lag)
        if not lags:
            raise UsageError("give --lags, --lag or --pairs")
        values = np.atleast_1d(an.stationary_autocov(ou, np.array(lags), cfg))
        rows = [{"lag": lag, "value": float(v)} for lag, v in zip(lags, values)]
    _write_table(rows, args, stdout)
    return 0


def cmd_regime(args, stdout) -> int:
    ou = _spec(args)
    rec = an.classify_regime(ou).as_record(_quad(args))
    if args.format == "csv":
        rec = {"regime": rec.pop("kind"), **rec}
    _write_table([rec], args, stdout)
    return 0


def summarize(e: sim.PathEnsemble) -> dict:
    """Summary statistics recorded in the manifest and re-checked by ``validate``."""
    last = e.paths[:, -1]
    return {
        "summary.n_paths": e.n_paths,
        "summary.n_points": e.grid.n,
        "summary.mean_T": float(np.mean(last)),
        "summary.second_moment_T": float(np.mean(last * last)),
        "summary.mean_all": float(np.mean(e.paths)),
        "summary.second_moment_all": float(np.mean(e.paths * e.paths)),
    }


def _simulate(args) -> sim.PathEnsemble:
    ou = _spec(args)
    grid = sim.Grid.uniform(args.t1, args.n)
    cfg = _quad(args)
    if args.quantity == "stationary":
        return sim.stationary_path(ou, grid, args.n_paths, args.seed, burn_in=args.burn_in,
                                   threads=args.threads, config=cfg)
    if ou.kind == "first":
        driver = sim.sample_gaussian(ou.process, grid, args.n_paths, args.seed,
                                     method=args.method or "auto", threads=args.threads)
        return driver if args.quantity == "driver" else sim.ou_first_kind(driver, ou.theta)
    noise = sim.second_kind_noise(ou.process, grid, args.n_paths, args.seed,
                                  method=args.method or "dense", threads=args.threads, config=cfg)
    return noise if args.quantity == "driver" else sim.ou_second_kind(noise, ou.theta)


def cmd_simulate(args, stdout) -> int:
    e = _simulate(args)
    path = _output_path(args, "ensemble.fou")
    storage.save(e, path)
    stats = summarize(e)
    mpath = _write_manifest(path, _manifest_items(args, {"output": str(path), **stats}))
    stdout.write(f"wrote {path} and {mpath}\n")
    return 0


def _check_ensemble(path: Path, stdout) -> bool:
    mpath = path.with_name(path.name + ".manifest")
    recorded = read_config(mpath)
    e = storage.load(path)
    ok = True
    for key, value in summarize(e).items():
        want = recorded.get(key)
        got = _mfmt(value)
        same = want == got
        ok &= same
        stdout.write(f"{'PASS' if same else 'FAIL'} ensemble/{key}: recorded={want} recomputed={got}\n")
    return ok


def cmd_validate(args, stdout) -> int:
    names = [s.strip() for s in (args.suite or "").split(",") if s.strip()]
    unknown = [s for s in names if s not in validation.SUITES]
    if unknown:
        raise UsageError(f"unknown suite(s) {unknown}; choose from {sorted(validation.SUITES)}")
    ok = True
    if args.ensemble:
        ok &= _check_ensemble(Path(args.ensemble), stdout)
    rows = []

    def show(r):
        if args.format == "json":
            stdout.write(json.dumps(r.as_record(), default=float) + "\n")
        else:
            stdout.write(r.line() + "\n")
        stdout.flush()

    results, timing = validation.run_suites(names, args.budget, args.threads, on_result=show)
    rows.extend(r.as_record() for r in results)
    failed = sum(not r.passed for r in results)
    ok &= failed == 0
    for name, seconds in timing.items():
        sys.stderr.write(f"suite {name}: {seconds:.1f} s\n")
    if args.output:
        path = _output_path(args)
        with open(path, "w") as fh:
            _emit(rows, args, fh)
        _write_manifest(path, _manifest_items(args, {"summary.failed": failed, "summary.checks": len(results)}))
    sys.stderr.write(f"{len(results) - failed}/{len(results)} checks passed\n")
    return 0 if ok else 1


_COMMANDS = {"cov": cmd_cov, "regime": cmd_regime, "simulate": cmd_simulate, "validate": cmd_validate}


def main(argv=None, stdout=None) -> int:
    stdout = stdout or sys.stdout
    try:
        args = _parse(argv)
        return _COMMANDS[args.command](args, stdout)
    except UsageError as exc:
        sys.stderr.write(f"fracou: error: {exc}\n")
        return 2
    except (FracOUError, ValueError) as exc:
        sys.stderr.write(f"fracou: error: {exc}\n")
        return 2


if __name__ == "__main__":
    sys.exit(main())
