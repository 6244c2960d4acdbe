"""Command line front end.

Settings are resolved in order: built-in defaults, the ``--config`` file
(flat ``key = value`` lines, ``#`` comments), environment variables named
``TRONQUEE_<KEY>`` and finally ``--set key=value`` flags. Unknown keys are
rejected wherever they appear.

Exit status: 0 success, 1 computation failure, 2 configuration error,
3 verification failure.
"""
from __future__ import annotations

import argparse
import cmath
import csv
import json
import logging
import os
import re
import sys
from dataclasses import dataclass, field, fields
from pathlib import Path

from . import __version__
from .asymptotics import (
    VARIANTS,
    estimate_connection,
    predict_pole_array,
    stokes_difference,
    verify_pole_array,
)
from .errors import ConfigError, TronqueeError
from .integrator import PathSpec, integrate_path
from .series_engine import FamilySpec, Params5, cached_transseries
from .summation import DEFAULT_ORDERS, optimal_truncation_sum, sum_series, sum_transseries
from .transforms import SymmetryMap, map_params, map_state

ENV_PREFIX = "TRONQUEE_"
EXIT_COMPUTE, EXIT_CONFIG, EXIT_VERIFY = 1, 2, 3

log = logging.getLogger("tronquee")

_COMPLEX_RE = re.compile(
    r"^\s*([+-]?(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)?"
    r"(?:\s*([+-])?\s*((?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)?\s*[ij])?\s*$")


def parse_complex(text: str) -> complex:
    """Parse ``"a+bi"``, ``"a"``, ``"bi"`` or ``"i"`` (``j`` also accepted)."""
    s = str(text).strip()
    m = _COMPLEX_RE.match(s)
    if not s or m is None:
        raise ConfigError(f"cannot parse complex number {text!r}")
    re_part, sign, im_part = m.groups()
    has_imag = s[-1] in "ij"
    if not has_imag:
        return complex(float(re_part), 0.0)
    if re_part is not None and sign is None and im_part is None:
        # "2i": the number before the unit is the imaginary part
        return complex(0.0, float(re_part))
    if re_part is not None and sign is None:
        raise ConfigError(f"cannot parse complex number {text!r}")
    im = float(im_part) if im_part is not None else 1.0
    if sign == "-":
        im = -im
    return complex(float(re_part) if re_part is not None else 0.0, im)


def format_complex(z: complex) -> str:
    z = complex(z)
    return f"{z.real!r}{'+' if z.imag >= 0 else '-'}{abs(z.imag)!r}i"


def _cplx_list(text: str) -> list[complex]:
    return [parse_complex(t) for t in str(text).split(",") if t.strip()]


def _int_range(text: str) -> list[int]:
    """``"5..15"`` (every integer), ``"5..15:5"`` (step) or ``"5,10,15"``."""
    s = str(text).strip()
    try:
        if ".." in s:
            lo, rest = s.split("..", 1)
            hi, _, step = rest.partition(":")
            return list(range(int(lo), int(hi) + 1, int(step) if step else 1))
        return [int(t) for t in s.split(",") if t.strip()]
    except ValueError as exc:
        raise ConfigError(f"bad integer range {text!r}") from exc


def _orders(text) -> tuple[int, int]:
    if isinstance(text, tuple):
        return text
    try:
        L, M = (int(t) for t in str(text).split(","))
    except ValueError as exc:
        raise ConfigError(f"orders must look like 'L,M', got {text!r}") from exc
    return L, M


def _positive_float(text) -> float:
    try:
        v = float(text)
    except ValueError as exc:
        raise ConfigError(f"expected a number, got {text!r}") from exc
    if not v > 0:
        raise ConfigError(f"expected a positive number, got {text!r}")
    return v


def _int(text) -> int:
    try:
        return int(text)
    except ValueError as exc:
        raise ConfigError(f"expected an integer, got {text!r}") from exc


# ---------------------------------------------------------------------------
# configuration


@dataclass
class RunConfig:
    alpha: complex = 1 + 0j
    beta: complex = -1 + 0j
    gamma: complex = 1 + 0j
    delta: complex = 2 + 0j
    family: str = "III0"
    branch: int = 1
    N: int = 40
    K: int = 6
    C: complex = 0j
    tier: str = "double"
    orders: tuple = field(default=DEFAULT_ORDERS["double"])
    rtol: float = 1e-12
    atol: float = 1e-14
    method: str = "dopri5"
    out: str = "tronquee_out"
    cache_dir: str = ""
    workers: int = 1

    _PARSERS = {
        "alpha": parse_complex, "beta": parse_complex, "gamma": parse_complex,
        "delta": parse_complex, "C": parse_complex, "family": str, "branch": _int,
        "N": _int, "K": _int, "tier": str, "orders": _orders, "rtol": _positive_float,
        "atol": _positive_float, "method": str, "out": str, "cache_dir": str, "workers": _int,
    }

    @classmethod
    def keys(cls) -> list[str]:
        return [f.name for f in fields(cls)]

    def set(self, key: str, value, source: str = "") -> None:
        if key not in self._PARSERS:
            raise ConfigError(f"unknown config key {key!r}{' in ' + source if source else ''}")
        setattr(self, key, self._PARSERS[key](value))

    def validate(self) -> None:
        if self.family not in ("I0", "III0", "II"):
            raise ConfigError(f"family must be I0, III0 or II, got {self.family!r}")
        if self.branch not in (1, -1):
            raise ConfigError("branch must be 1 or -1")
        if self.tier not in ("double", "extended"):
            raise ConfigError("tier must be 'double' or 'extended'")
        if self.method not in ("dopri5", "dop853"):
            raise ConfigError("method must be dopri5 or dop853")
        if self.N < 4 or self.K < 1:
            raise ConfigError("need N >= 4 and K >= 1")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")
        try:
            if self.family == "II":
                _symmetric_setup(self)
            else:
                self.spec()
        except TronqueeError as exc:
            raise ConfigError(f"{type(exc).__name__}: {exc}") from exc

    def params(self) -> Params5:
        return Params5(self.alpha, self.beta, self.gamma, self.delta)

    def spec(self) -> FamilySpec:
        if self.family == "II":
            raise ConfigError("family II is reached through Reciprocal; "
                              "only sum and integrate support it")
        return FamilySpec.for_params(self.params(), self.family, self.branch)


def read_config_file(path) -> dict[str, str]:
    out = {}
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    for i, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{i}: expected 'key = value'")
        k, v = (t.strip() for t in line.split("=", 1))
        out[k] = v
    return out


def resolve_config(config_file=None, overrides=(), environ=None) -> RunConfig:
    cfg = RunConfig()
    if config_file:
        for k, v in read_config_file(config_file).items():
            cfg.set(k, v, str(config_file))
    env = os.environ if environ is None else environ
    lower = {k.lower(): k for k in cfg.keys()}
    for name, value in sorted(env.items()):
        if not name.startswith(ENV_PREFIX):
            continue
        key = name[len(ENV_PREFIX):]
        if key.lower() not in lower:
            raise ConfigError(f"unknown config key from environment variable {name}")
        cfg.set(lower[key.lower()], value, name)
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"--set expects key=value, got {item!r}")
        k, v = (t.strip() for t in item.split("=", 1))
        cfg.set(k, v, "--set")
    if cfg.tier == "extended" and cfg.orders == DEFAULT_ORDERS["double"]:
        cfg.orders = DEFAULT_ORDERS["extended"]
    cfg.validate()
    return cfg


# ---------------------------------------------------------------------------
# output helpers


def to_jsonable(obj):
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if hasattr(obj, "item") and not isinstance(obj, (str, bytes)):
        return to_jsonable(obj.item())
    return obj


def dumps(obj) -> str:
    return json.dumps(to_jsonable(obj), indent=1, sort_keys=True)


def _emit(text: str, dest) -> None:
    if dest in (None, "-"):
        sys.stdout.write(text + "\n")
    else:
        Path(dest).parent.mkdir(parents=True, exist_ok=True)
        Path(dest).write_text(text + "\n")


def _cache_dir(cfg: RunConfig, args):
    if getattr(args, "no_cache", False):
        return None
    if cfg.cache_dir:
        return cfg.cache_dir
    base = os.environ.get("XDG_CACHE_HOME") or str(Path.home() / ".cache")
    return str(Path(base) / "tronquee")


def _table(cfg: RunConfig, args, params=None, spec=None, N=None, K=None):
    params = params or cfg.params()
    spec = spec or cfg.spec()
    return cached_transseries(params, spec, N or cfg.N, K or cfg.K, _cache_dir(cfg, args),
                              cfg.tier)


def _symmetric_setup(cfg: RunConfig):
    """Parameters mapped by ``Reciprocal``; the I0 family lives there."""
    R = SymmetryMap.reciprocal()
    q = map_params(R, cfg.params())
    return R, q, FamilySpec.for_params(q, "I0", cfg.branch)


# ---------------------------------------------------------------------------
# subcommands


def cmd_series(cfg, args) -> int:
    table = _table(cfg, args)
    data = table.to_json()
    data["max_relative_residual"] = table.max_relative_residual()
    _emit(dumps(data), args.output)
    return 0


def _pure_sum(w0, x, args, cfg) -> dict:
    if args.method == "optimal":
        sv = optimal_truncation_sum(w0, x, strict=False)
        return {"x": x, "w": sv.value, "err": sv.err_est, "method": sv.method}
    if args.phi is None and cmath.phase(x) == 0:
        # on the Stokes line: mean of the two lateral sums, as for transseries
        (up, eu), = sum_series(w0, x, -0.4, orders=cfg.orders)[0]
        (dn, ed), = sum_series(w0, x, 0.4, orders=cfg.orders)[0]
        return {"x": x, "w": (up + dn) / 2, "err": max(eu, ed) + abs(up - dn) / 2,
                "method": "stokes-average"}
    (val, err), = sum_series(w0, x, args.phi, orders=cfg.orders)[0]
    return {"x": x, "w": val, "err": err, "method": "borel-pade"}


def cmd_sum(cfg, args) -> int:
    xs = _cplx_list(args.x)
    C = parse_complex(args.C) if args.C is not None else cfg.C
    via = args.via_symmetry or cfg.family == "II"
    if via:
        R, q, spec = _symmetric_setup(cfg)
        table = _table(cfg, args, q, spec)
    else:
        table = _table(cfg, args)
    rows = []
    for x in xs:
        if args.pure:
            rows.append(_pure_sum(table.w0, x, args, cfg))
            continue
        w, wp, err, used = sum_transseries(table, C, x, args.phi, method=args.method,
                                           orders=cfg.orders)
        if via:
            _, w, wp = map_state(R, x, w, wp)
        rows.append({"x": x, "w": w, "w_prime": wp, "err": err, "method": used})
    _emit(dumps({"C": C, "family": "II" if via else cfg.family,
                 "values": rows}), args.output)
    return 0


def cmd_integrate(cfg, args) -> int:
    pts = _cplx_list(args.path)
    x0 = parse_complex(args.x0) if args.x0 is not None else (pts[0] if pts else None)
    if x0 is None:
        raise ConfigError("integrate needs --x0 or a non-empty --path")
    if not pts or pts[0] != x0:
        pts = [x0] + pts
    if len(pts) < 2:
        raise ConfigError("--path needs at least one point after x0")
    params = cfg.params()
    if args.init_from_transseries:
        C = parse_complex(args.C) if args.C is not None else cfg.C
        if args.via_symmetry or cfg.family == "II":
            R, q, spec = _symmetric_setup(cfg)
            w0, dw0, _, _ = sum_transseries(_table(cfg, args, q, spec), C, x0,
                                            orders=cfg.orders)
            _, w0, dw0 = map_state(R, x0, w0, dw0)
        else:
            w0, dw0, _, _ = sum_transseries(_table(cfg, args), C, x0, orders=cfg.orders)
    else:
        if args.w0 is None or args.dw0 is None:
            raise ConfigError("give --w0 and --dw0 or use --init-from-transseries")
        w0, dw0 = parse_complex(args.w0), parse_complex(args.dw0)
    path = PathSpec(tuple(pts), rtol=cfg.rtol, atol=cfg.atol, method=cfg.method,
                    max_step=args.max_step)
    traj = integrate_path(params, (x0, w0, dw0), path)
    out = Path(args.output or cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    traj.to_csv(out / "trajectory.csv")
    traj.write_events(out / "events.json")
    xe, we, dwe = traj.final_w()
    _emit(dumps({"final": {"x": xe, "w": we, "w_prime": dwe},
                 "events": len(traj.events), "samples": len(traj.samples),
                 "csv": str(out / "trajectory.csv"), "events_json": str(out / "events.json")}),
          None)
    return 0


def cmd_connection(cfg, args) -> int:
    params, spec = cfg.params(), cfg.spec()
    table = _table(cfg, args, N=args.N, K=args.K)
    orders = _orders(args.orders)
    seeds = _cplx_list(args.seeds)
    kw = dict(orders=orders, rtol=cfg.rtol, atol=max(cfg.atol * 1e-2, 1e-16))
    if len(seeds) >= 2:
        jump, err, ests = stokes_difference(params, spec, seeds=tuple(seeds[:2]), r0=args.r0,
                                            table=table, **kw)
        data = {"jump": jump, "jump_err": err, "estimates": [e.to_json() for e in ests]}
    else:
        est = estimate_connection(params, spec, (seeds[0], args.r0, "upper"), table, **kw)
        data = {"jump": est.jump, "jump_err": est.error, "estimates": [est.to_json()]}
    _emit(dumps(data), args.output)
    return 0


def _variant_list(name: str, refine: bool) -> list[str]:
    b = "bref" if refine else "b"
    table = {"a": ["a"], "b": [b], "bref": ["bref"], "both": ["a", b], "all": list(VARIANTS)}
    if name not in table:
        raise ConfigError(f"unknown variant {name!r}")
    return table[name]


def cmd_poles(cfg, args) -> int:
    params, spec = cfg.params(), cfg.spec()
    C = parse_complex(args.C) if args.C is not None else cfg.C
    if C == 0:
        raise ConfigError("poles needs a nonzero --C")
    ns = _int_range(args.n)
    variants = _variant_list(args.variant, args.refine)
    out = Path(args.output or cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    preds = [p for v in variants for p in predict_pole_array(params, spec, C, ns, v)]
    with open(out / "predictions.csv", "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["n", "variant", "sub", "x_re", "x_im"])
        for p in preds:
            wr.writerow([p.n, p.variant, p.sub, repr(p.x.real), repr(p.x.imag)])
    report = {"C": C, "family": cfg.family, "n": ns, "variants": variants,
              "predictions": [p.to_json() for p in preds]}
    if args.verify:
        table = _table(cfg, args)
        ver = verify_pole_array(params, spec, C, ns, table=table, workers=cfg.workers,
                                radius=args.radius)
        reps = [r for r in ver.reports if r.variant in variants]
        with open(out / "poles_report.csv", "w", newline="") as fh:
            wr = csv.writer(fh)
            wr.writerow(["n", "variant", "sub", "pred_re", "pred_im", "loc_re", "loc_im",
                         "gap"])
            for r in reps:
                wr.writerow(r.csv_row())
        gaps = {}
        for v in variants:
            for sub in sorted({r.sub for r in reps if r.variant == v}):
                seq = [ver.gaps(v, sub)[n] for n in ns]
                gaps[f"{v}/{sub}" if sub else v] = {
                    "gaps": seq, "decreasing": all(a > b for a, b in zip(seq, seq[1:]))}
        report.update({"best_variant": ver.best_variant, "gaps": gaps,
                       "located": {str(n): ver.located[n] for n in ns},
                       "notes": {str(n): ver.notes[n] for n in ns}})
        if args.plot_data:
            with open(out / "located.csv", "w", newline="") as fh:
                wr = csv.writer(fh)
                wr.writerow(["n", "x_re", "x_im"])
                for n in ns:
                    for z in ver.located[n]:
                        wr.writerow([n, repr(z.real), repr(z.imag)])
    _emit(dumps(report), out / "poles.json")
    _emit(dumps({k: report[k] for k in ("best_variant", "gaps") if k in report}
                or {"predictions": len(preds)}), None)
    return 0


def _extra_checks(cfg, args):
    """Cheap invariants beyond the numbered criteria."""
    from .checks import III0_PARAMS
    import tempfile

    from .series_engine import compute_transseries
    spec = FamilySpec.for_params(III0_PARAMS, "III0")
    table = compute_transseries(III0_PARAMS, spec, 30, 2)
    x = 25 * (1 + 0.2j)
    w, _, _, _ = sum_transseries(table, 0, x)
    (v, _), = sum_series(table.w0, x)[0]
    yield "sum with C = 0 equals the summed power series", abs(w - v) <= 1e-12
    with tempfile.TemporaryDirectory() as d:
        cold = dumps(cached_transseries(III0_PARAMS, spec, 20, 2, d).to_json())
        warm = dumps(cached_transseries(III0_PARAMS, spec, 20, 2, d).to_json())
    yield "cached and cold series tables serialize identically", cold == warm


def cmd_verify(cfg, args) -> int:
    from .checks import ALL_CHECKS, QUICK
    checks = QUICK if args.quick else ALL_CHECKS
    extras = list(_extra_checks(cfg, args))
    total = len(checks) + len(extras)
    lines = [f"1..{total}"]
    print(lines[0], flush=True)
    failed = 0
    for i, chk in enumerate(checks, 1):
        try:
            res = chk()
            ok, desc = res.passed, f"criterion {res.number}: {res.title} ({res.seconds:.1f}s)"
            diag = dumps(res.detail)
        except TronqueeError as exc:
            ok, desc, diag = False, chk.__name__, f"{type(exc).__name__}: {exc}"
        failed += not ok
        print(f"{'ok' if ok else 'not ok'} {i} - {desc}", flush=True)
        if not ok or args.verbose:
            for ln in diag.splitlines():
                print(f"# {ln}")
    for j, (desc, ok) in enumerate(extras, len(checks) + 1):
        failed += not ok
        print(f"{'ok' if ok else 'not ok'} {j} - {desc}", flush=True)
    print(f"# {total - failed} passed, {failed} failed")
    return EXIT_VERIFY if failed else 0


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="tronquee", description=__doc__.split("\n\n")[0])
    ap.add_argument("--version", action="version", version=f"tronquee {__version__}")
    ap.add_argument("--config", help="flat key = value settings file")
    ap.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                    help=f"override a setting (keys: {', '.join(RunConfig.keys())})")
    ap.add_argument("--no-cache", action="store_true", help="do not read or write the cache")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("series", help="transseries table as JSON")
    p.add_argument("--output", "-o")
    p.set_defaults(func=cmd_series)

    p = sub.add_parser("sum", help="summed w and w' at given points")
    p.add_argument("--x", required=True, help="comma separated points, e.g. '25,20+5i'")
    p.add_argument("--C")
    p.add_argument("--phi", type=float, default=None)
    p.add_argument("--method", choices=("borel-pade", "optimal"), default="borel-pade")
    p.add_argument("--pure", action="store_true", help="sum only the power series")
    p.add_argument("--via-symmetry", action="store_true",
                   help="treat the parameters as family II and compute through Reciprocal")
    p.add_argument("--output", "-o")
    p.set_defaults(func=cmd_sum)

    p = sub.add_parser("integrate", help="integrate along a polygonal path")
    p.add_argument("--x0")
    p.add_argument("--path", default="", help="comma separated waypoints")
    p.add_argument("--init-from-transseries", action="store_true")
    p.add_argument("--C")
    p.add_argument("--w0")
    p.add_argument("--dw0")
    p.add_argument("--max-step", type=float, default=0.5)
    p.add_argument("--via-symmetry", action="store_true")
    p.add_argument("--output", "-o", help="output directory")
    p.set_defaults(func=cmd_integrate)

    p = sub.add_parser("connection", help="connection constants and Stokes jump")
    p.add_argument("--seeds", default="0.2,0.7")
    p.add_argument("--r0", type=float, default=15.0)
    p.add_argument("--N", type=int, default=44)
    p.add_argument("--K", type=int, default=12)
    p.add_argument("--orders", default="20,20")
    p.add_argument("--output", "-o")
    p.set_defaults(func=cmd_connection)

    p = sub.add_parser("poles", help="predict and verify pole arrays")
    p.add_argument("--C")
    p.add_argument("--n", default="5..15:5")
    p.add_argument("--variant", default="both", help="a, b, bref, both or all")
    p.add_argument("--refine", action="store_true", help="use the refined form of variant b")
    p.add_argument("--verify", action="store_true", help="locate poles by integration")
    p.add_argument("--radius", type=float, default=2.0)
    p.add_argument("--plot-data", action="store_true")
    p.add_argument("--output", "-o", help="output directory")
    p.set_defaults(func=cmd_poles)

    p = sub.add_parser("verify", help="acceptance checks as a TAP report")
    p.add_argument("--quick", action="store_true", help="skip the slow checks")
    p.set_defaults(func=cmd_verify)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = resolve_config(args.config, args.set)
        return args.func(cfg, args)
    except ConfigError as exc:
        print(f"error: ConfigError: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except TronqueeError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_COMPUTE


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
