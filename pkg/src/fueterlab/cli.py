"""Batch front-end: list the catalog, run check suites, estimate convergence orders.

Reports carry no timestamps and list entries sorted by (field, check), so the
same configuration always produces the same bytes.  Exit codes: 0 when every
check with an expectation matched it, 1 on an unexpected outcome, 2 on a
configuration error (always raised before any computation starts).
"""

from __future__ import annotations

import argparse
import csv
import fnmatch
import io
import json
import logging
import math
import os
import sys
import tempfile
from dataclasses import dataclass, field as dc_field, replace
from typing import Callable, Optional

from . import __version__
from .errors import ConfigError
from .fields import catalog, catalog_listing, select_fields
from .operators import ANALYTIC, BACKENDS, DerivativeEngine
from .verify import (
    ALL_CHECKS,
    FIELD_CHECKS,
    FIRST_ORDER_CHECKS,
    ResidualReport,
    SamplingPlan,
    check_frame_identities,
    check_iota_product_rule,
    check_second_angular_identity,
    estimate_convergence_order,
    random_quaternion_field,
    random_trig_scalar,
)

log = logging.getLogger("fueterlab")

EXIT_OK, EXIT_UNEXPECTED, EXIT_CONFIG = 0, 1, 2

SUITES = ("all", "positive", "negative", "identities")
FORMATS = ("json", "csv", "pretty")
# 'theorem' already runs the direct route; select theorem_direct explicitly to get it alone
SUITE_SKIP = ("theorem_direct",)
TRIG_SEEDS = range(20)
QUAT_SEEDS = range(5)
IOTA_RULE_H = 1e-3

CONVERGE_DEFAULTS = {"field": ("fueter:exp",), "check": ("condition",), "backend": "fd2", "h": 0.05}

# failures inside a check become report entries instead of aborting the batch
CHECK_ERRORS = (ArithmeticError, ValueError, RuntimeError)


@dataclass(frozen=True)
class RunConfig:
    suite: str = "all"
    fields: tuple = ()
    checks: tuple = ()
    plan: SamplingPlan = SamplingPlan()
    backend: str = "analytic"
    h: Optional[float] = None
    richardson: bool = False
    fmt: str = "json"
    out: Optional[str] = None
    levels: int = 4

    def engine(self) -> DerivativeEngine:
        return DerivativeEngine(self.backend, ANALYTIC.h if self.h is None else self.h, self.richardson)

    def echo(self) -> dict:
        """Resolved settings that influence results (output location and format excluded)."""
        return {
            "suite": self.suite,
            "fields": list(self.fields),
            "checks": list(self.checks),
            "plan": self.plan.as_dict(),
            "engine": self.engine().as_dict(),
        }


# ---------------------------------------------------------------------------
# configuration


CONFIG_KEYS = ("suite", "field", "check", "n", "seed", "h", "backend", "box", "format", "out", "levels",
               "mode", "richardson")
LIST_KEYS = ("field", "check")


def read_config_file(path: str) -> dict:
    """Flat ``key = value`` text; ``#`` starts a comment; list keys take commas."""
    try:
        with open(path, encoding="utf-8") as fh:
            lines = fh.read().splitlines()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    out = {}
    for lineno, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        key = key.replace("-", "_")
        if key not in CONFIG_KEYS:
            raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
        if key in LIST_KEYS:
            out[key] = tuple(v.strip() for v in value.split(",") if v.strip())
        else:
            out[key] = value
    return out


def parse_box(text: str) -> dict:
    """``t=a:b,r=a:b,beta=a:b`` (any subset) -> SamplingPlan keyword overrides."""
    out = {}
    for part in filter(None, (s.strip() for s in text.split(","))):
        try:
            name, rng = part.split("=", 1)
            lo, hi = (float(s) for s in rng.split(":"))
        except ValueError as exc:
            raise ConfigError(f"bad box component {part!r}; expected name=lo:hi") from exc
        name = name.strip()
        if name not in ("t", "r", "beta"):
            raise ConfigError(f"box axis must be t, r or beta (alpha always spans the full circle), got {name!r}")
        out[f"{name}_min"], out[f"{name}_max"] = lo, hi
    return out


def _convert(key: str, value):
    if value is None or key in LIST_KEYS:
        return value
    try:
        if key in ("n", "seed", "levels"):
            return int(value)
        if key == "h":
            return float(value)
        if key == "richardson":
            if isinstance(value, bool):
                return value
            if value.lower() in ("1", "true", "yes", "on"):
                return True
            if value.lower() in ("0", "false", "no", "off"):
                return False
            raise ValueError(value)
    except ValueError as exc:
        raise ConfigError(f"bad value for {key}: {value!r}") from exc
    return value


def resolve_config(args: argparse.Namespace, defaults: Optional[dict] = None) -> RunConfig:
    """Merge defaults < config file < command-line flags and validate the result."""
    merged = dict(defaults or {})
    if getattr(args, "config", None):
        merged.update(read_config_file(args.config))
    for key in CONFIG_KEYS:
        value = getattr(args, key, None)
        if value is not None and value != ():
            merged[key] = tuple(value) if key in LIST_KEYS else value
    merged = {k: _convert(k, v) for k, v in merged.items()}

    suite = merged.get("suite", "all")
    if suite not in SUITES:
        raise ConfigError(f"unknown suite {suite!r}; expected one of {SUITES}")
    fmt = merged.get("format", "json")
    if fmt not in FORMATS:
        raise ConfigError(f"unknown format {fmt!r}; expected one of {FORMATS}")
    backend = merged.get("backend", "analytic")
    if backend not in BACKENDS:
        raise ConfigError(f"unknown backend {backend!r}; expected one of {BACKENDS}")
    h = merged.get("h")
    if h is not None and not (h > 0.0 and math.isfinite(h)):
        raise ConfigError(f"step h must be positive, got {h!r}")

    plan_kw = parse_box(merged["box"]) if merged.get("box") else {}
    for key, attr in (("n", "n"), ("seed", "seed"), ("mode", "mode")):
        if key in merged:
            plan_kw[attr] = merged[key]
    plan = replace(SamplingPlan(), **plan_kw)
    plan.validate()

    checks = tuple(merged.get("check", ()))
    for c in checks:
        if c not in ALL_CHECKS:
            raise ConfigError(f"unknown check {c!r}; known checks: {', '.join(ALL_CHECKS)}")
    levels = merged.get("levels", 4)
    if levels < 3:
        raise ConfigError("levels must be at least 3")
    return RunConfig(
        suite=suite,
        fields=tuple(merged.get("field", ())),
        checks=checks,
        plan=plan,
        backend=backend,
        h=h,
        richardson=merged.get("richardson", False),
        fmt=fmt,
        out=merged.get("out"),
        levels=levels,
    )


# ---------------------------------------------------------------------------
# job planning


@dataclass(frozen=True)
class Job:
    field: str
    check: str
    expected: Optional[bool]
    run: Callable[[], ResidualReport] = dc_field(compare=False, repr=False)


def _identity_jobs(cfg: RunConfig) -> list[Job]:
    engine = cfg.engine()
    rule_engine = DerivativeEngine(engine.scheme, IOTA_RULE_H if cfg.h is None else cfg.h, cfg.richardson)
    jobs = [Job("frame", "frame_identities", True, lambda: check_frame_identities(cfg.plan))]
    for k in TRIG_SEEDS:
        v = random_trig_scalar(k)
        jobs.append(Job(v.name, "second_angular_identity", True,
                        lambda v=v: check_second_angular_identity(v, cfg.plan, engine)))
    for k in QUAT_SEEDS:
        q = random_quaternion_field(k)
        jobs.append(Job(q.name, "iota_product_rule", True,
                        lambda q=q: check_iota_product_rule(q, cfg.plan, rule_engine)))
    return jobs


def _suite_fields(suite: str):
    fields = catalog()
    if suite == "positive":
        return [f for f in fields if f.satisfies_condition]
    if suite == "negative":
        return [f for f in fields if not f.satisfies_condition]
    if suite == "identities":
        return []
    return fields


def _default_checks(f) -> list[str]:
    if f.satisfies_condition:
        return [c for c in FIELD_CHECKS if c not in SUITE_SKIP]
    return [c for c in FIELD_CHECKS if f.expected(c) is not None]


def plan_jobs(cfg: RunConfig) -> list[Job]:
    """Expand a config into sorted jobs; raises ConfigError for empty or unknown selections."""
    engine = cfg.engine()
    identity = _identity_jobs(cfg) if cfg.suite in ("all", "identities") else []
    identity_names = sorted({j.field for j in _identity_jobs(cfg)})
    all_names = [f.name for f in catalog()] + identity_names

    for pat in cfg.fields:
        if not select_fields([pat]) and not fnmatch.filter(identity_names, pat):
            raise ConfigError(f"field selector {pat!r} matches nothing; known fields: {', '.join(all_names)}")

    fields = _suite_fields(cfg.suite)
    if cfg.fields:
        chosen = {f.name for f in select_fields(cfg.fields)}
        fields = [f for f in fields if f.name in chosen]
        identity = [j for j in identity if any(fnmatch.fnmatchcase(j.field, p) for p in cfg.fields)]
    if cfg.checks:
        identity = [j for j in identity if j.check in cfg.checks]

    jobs = list(identity)
    for f in fields:
        wanted = cfg.checks or _default_checks(f)
        for cid in wanted:
            spec = FIELD_CHECKS.get(cid)
            if spec is None or not spec.applies(f):
                continue
            jobs.append(Job(f.name, cid, f.expected(cid), lambda f=f, spec=spec: spec.fn(f, cfg.plan, engine)))
    if not jobs:
        raise ConfigError("selection is empty: no (field, check) pair applies")
    return sorted(jobs, key=lambda j: (j.field, j.check))


# ---------------------------------------------------------------------------
# execution and serialization


def _clean(obj):
    """Non-finite floats become strings so the output stays strict JSON."""
    if isinstance(obj, float) and not math.isfinite(obj):
        return repr(obj)
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    return obj


def _outcome(passed: Optional[bool], expected: Optional[bool]) -> str:
    if passed is None:
        return "unexpected"
    if expected is None:
        return "unchecked"
    return "ok" if passed == expected else "unexpected"


def execute(jobs: list[Job]) -> list[dict]:
    entries = []
    for job in jobs:
        try:
            entry = job.run().to_dict()
        except CHECK_ERRORS as exc:
            entry = {"check": job.check, "field": job.field, "error": f"{type(exc).__name__}: {exc}", "pass": None}
        entry["expected"] = job.expected
        entry["outcome"] = _outcome(entry["pass"], job.expected)
        log.info("%-30s %-26s %s", job.field, job.check, entry["outcome"])
        entries.append(entry)
    return entries


def build_report(command: str, cfg_echo: dict, results: list, summary: Optional[dict] = None) -> dict:
    report = {
        "tool": "fueterlab",
        "version": __version__,
        "command": command,
        "rng_seed": cfg_echo["plan"]["rng_seed"],
        "config": cfg_echo,
        "results": results,
    }
    if summary is not None:
        report["summary"] = summary
    return _clean(report)


def summarize(entries: list[dict]) -> dict:
    counts = {"ok": 0, "unexpected": 0, "unchecked": 0}
    for e in entries:
        counts[e["outcome"]] += 1
    return {"total": len(entries), **counts}


def _fmt_float(x) -> str:
    return x if isinstance(x, str) else f"{x:.3e}"


RUN_CSV_COLUMNS = ("check", "field", "backend", "h", "n", "max_abs", "mean_abs", "rel_max", "worst_t", "worst_r",
                   "worst_alpha", "worst_beta", "tol", "pass", "expected", "outcome", "error")


def render_run(report: dict, fmt: str) -> str:
    entries = report["results"]
    if fmt == "json":
        return json.dumps(report, indent=2, allow_nan=False) + "\n"
    if fmt == "csv":
        buf = io.StringIO()
        buf.write("# " + json.dumps({k: v for k, v in report.items() if k != "results"}, sort_keys=True) + "\n")
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(RUN_CSV_COLUMNS)
        for e in entries:
            wp = e.get("worst_point") or {}
            row = dict(e, worst_t=wp.get("t"), worst_r=wp.get("r"), worst_alpha=wp.get("alpha"),
                       worst_beta=wp.get("beta"))
            writer.writerow(["" if row.get(c) is None else row[c] for c in RUN_CSV_COLUMNS])
        return buf.getvalue()
    lines = [f"fueterlab {report['version']}  suite={report['config']['suite']}  "
             f"seed={report['rng_seed']}  n={report['config']['plan']['n']}  "
             f"backend={report['config']['engine']['backend']}"]
    lines.append(f"{'field':30s} {'check':26s} {'rel_max':>10s} {'tol':>8s} {'pass':>5s} outcome")
    for e in entries:
        if "error" in e:
            lines.append(f"{e['field']:30s} {e['check']:26s} {'error':>10s} {'':>8s} {'-':>5s} {e['outcome']}  "
                         f"{e['error']}")
            continue
        lines.append(f"{e['field']:30s} {e['check']:26s} {_fmt_float(e['rel_max']):>10s} {e['tol']:8.0e} "
                     f"{str(e['pass']).lower():>5s} {e['outcome']}")
    s = report["summary"]
    lines.append(f"{s['total']} checks: {s['ok']} ok, {s['unexpected']} unexpected, {s['unchecked']} unchecked")
    return "\n".join(lines) + "\n"


def write_output(text: str, out: Optional[str]) -> None:
    """stdout, or an atomic replace of ``out`` (no partial file is ever left behind)."""
    if not out:
        sys.stdout.write(text)
        return
    directory = os.path.dirname(os.path.abspath(out))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=".fueterlab-", suffix=".tmp", dir=directory)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
            fh.flush()
            os.fsync(fh.fileno())
        os.replace(tmp, out)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


# ---------------------------------------------------------------------------
# commands


def cmd_catalog(args) -> int:
    fmt = args.format or "json"
    listing = catalog_listing()
    if fmt == "json":
        text = json.dumps(listing, indent=2) + "\n"
    elif fmt == "csv":
        buf = io.StringIO()
        writer = csv.DictWriter(buf, fieldnames=list(listing[0]), lineterminator="\n")
        writer.writeheader()
        writer.writerows(listing)
        text = buf.getvalue()
    else:
        text = "".join(f"{d['name']:30s} {d['kind']:8s} condition={str(d['satisfies_condition']).lower():5s} "
                       f"singular: {d['singular_loci']}\n" for d in listing)
    write_output(text, args.out)
    return EXIT_OK


def cmd_run(cfg: RunConfig) -> int:
    jobs = plan_jobs(cfg)
    entries = execute(jobs)
    summary = summarize(entries)
    report = build_report("run", cfg.echo(), entries, summary)
    write_output(render_run(report, cfg.fmt), cfg.out)
    return EXIT_UNEXPECTED if summary["unexpected"] else EXIT_OK


def cmd_converge(cfg: RunConfig) -> int:
    for c in cfg.checks:
        if c not in FIRST_ORDER_CHECKS:
            raise ConfigError(f"convergence needs a first-derivative check ({', '.join(FIRST_ORDER_CHECKS)}), "
                              f"got {c!r}")
    fields = []
    for pat in cfg.fields:
        matched = select_fields([pat])
        if not matched:
            raise ConfigError(f"field selector {pat!r} matches nothing")
        fields.extend(f for f in matched if f not in fields)
    h0 = cfg.h
    results = []
    for f in sorted(fields, key=lambda f: f.name):
        for c in sorted(cfg.checks):
            res = estimate_convergence_order(c, f, cfg.plan, h0=h0, levels=cfg.levels, backend=cfg.backend,
                                             richardson=cfg.richardson)
            results.append(res.as_dict())
    echo = cfg.echo()
    echo.pop("suite")
    echo["levels"] = cfg.levels
    echo["h0"] = h0
    report = build_report("converge", echo, results)
    if cfg.fmt == "json":
        text = json.dumps(report, indent=2, allow_nan=False) + "\n"
    elif cfg.fmt == "csv":
        buf = io.StringIO()
        buf.write("# " + json.dumps({k: v for k, v in report.items() if k != "results"}, sort_keys=True) + "\n")
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(("check", "field", "backend", "h", "rel_max", "order", "floor_reached"))
        for r in report["results"]:
            for lv in r["levels"]:
                writer.writerow((r["check"], r["field"], r["backend"], lv["h"], lv["rel_max"],
                                 "" if r["order"] is None else r["order"], r["floor_reached"]))
        text = buf.getvalue()
    else:
        lines = []
        for r in report["results"]:
            lines.append(f"{r['field']}  {r['check']}  backend={r['backend']}")
            lines.extend(f"  h={lv['h']:<12.6g} rel_max={_fmt_float(lv['rel_max'])}" for lv in r["levels"])
            lines.append("  order: floor reached" if r["floor_reached"] else f"  order: {r['order']:.3f}")
        text = "\n".join(lines) + "\n"
    write_output(text, cfg.out)
    return EXIT_OK


# ---------------------------------------------------------------------------
# argument parsing


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="flat key = value file; command-line flags take precedence")
    p.add_argument("--field", action="append", help="catalog name or glob (repeatable)")
    p.add_argument("--check", action="append", help="check id (repeatable)")
    p.add_argument("--n", type=int, help="sample count (points per axis in grid mode)")
    p.add_argument("--seed", type=int, help="rng seed of the sampling plan")
    p.add_argument("--mode", choices=("random", "grid"))
    p.add_argument("--box", help="t=a:b,r=a:b,beta=a:b (any subset)")
    p.add_argument("--backend", choices=BACKENDS)
    p.add_argument("--h", type=float, help="finite-difference step")
    p.add_argument("--richardson", action="store_true", default=None, help="Richardson-extrapolate first differences")
    p.add_argument("--format", choices=FORMATS)
    p.add_argument("--out", help="report path (stdout when omitted); written atomically")
    p.add_argument("-v", "--verbose", action="store_true", help="log each finished check to stderr")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fueterlab", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p_cat = sub.add_parser("catalog", help="list catalog fields")
    p_cat.add_argument("--format", choices=FORMATS)
    p_cat.add_argument("--out")

    p_run = sub.add_parser("run", help="run check suites")
    p_run.add_argument("--suite", choices=SUITES)
    _common(p_run)

    p_conv = sub.add_parser("converge", help="estimate finite-difference convergence orders")
    _common(p_conv)
    p_conv.add_argument("--levels", type=int, help="number of step halvings (>= 3)")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if getattr(args, "verbose", False) else logging.WARNING,
                        format="%(message)s", stream=sys.stderr)
    try:
        if args.command == "catalog":
            return cmd_catalog(args)
        if args.command == "run":
            return cmd_run(resolve_config(args))
        return cmd_converge(resolve_config(args, CONVERGE_DEFAULTS))
    except ConfigError as exc:
        print(f"fueterlab: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
