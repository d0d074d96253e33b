"""Command-line client.

Each subcommand builds a request, runs it in-process (or against a running
service with ``--server URL``) and writes the returned tables as CSV.  The
first table goes to ``--out``; further tables land next to it as
``<stem>_<table>.csv``.  Without ``--out`` files go to the config's
``[output] dir``, else ``$NQDLAB_OUTPUT_DIR``, else the working directory.

Exit codes: 0 success, 1 invalid input, 2 numeric failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from . import __version__
from .config import OUTPUT_DIR_ENV, ConfigError, RunConfig, load_config
from .reports import atomic_write, write_csv
from .service.handlers import HANDLERS, ServiceError, classify, dispatch
from .service.schemas import Report

EXIT_OK, EXIT_INVALID, EXIT_NUMERIC = 0, 1, 2


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # usage errors are validation errors (exit 1), not argparse's default 2
    def error(self, message):
        raise _UsageError(f"{self.prog}: {message}")


def _floats(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma separated numbers, got {text!r}") from None


def _ints(text: str) -> list[int]:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma separated integers, got {text!r}") from None


def _words(text: str) -> list[str]:
    return [v.strip() for v in text.split(",") if v.strip()]


def _nonneg_int(text: str) -> int:
    v = int(text)
    if v < 0:
        raise argparse.ArgumentTypeError("must be >= 0")
    return v


def _pos_int(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return v


def _common(suppress: bool) -> argparse.ArgumentParser:
    # subcommands re-declare the globals with suppressed defaults so that a
    # flag given before the subcommand is not reset by the subparser
    def d(value):
        return argparse.SUPPRESS if suppress else value

    common = _Parser(add_help=False)
    common.add_argument("--threads", type=_pos_int, default=d(1), help="worker threads (default 1)")
    common.add_argument("--seed", type=_nonneg_int, default=d(None), help="override the configured master seed")
    common.add_argument("--out", type=Path, default=d(None), help="path of the main CSV report")
    common.add_argument("--json", action="store_true", default=d(False), help="also write the full report as JSON")
    common.add_argument("--server", default=d(None), metavar="URL", help="send the request to a running service")
    return common


def build_parser() -> argparse.ArgumentParser:
    common = _common(suppress=True)
    p = _Parser(prog="nqdlab", description="Strong-law certification and simulation toolkit.", parents=[_common(False)])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def add(name, help_, config=True):
        sp = sub.add_parser(name, help=help_, parents=[common])
        if config:
            sp.add_argument("--config", type=Path, default=None, help="INI run configuration")
        return sp

    sp = add("sequences", "normalizing, threshold and block sequences", config=False)
    sp.add_argument("--p", type=float, default=1.5)
    sp.add_argument("--r", type=float, default=2.0)
    sp.add_argument("--s", type=float, default=None)
    sp.add_argument("--n", type=_pos_int, default=16, help="rows n = 1..N of the sequence table")
    sp.add_argument("--k", type=_pos_int, default=None, help="rows of the block table (default min(N, 64))")
    sp.add_argument("--audit", type=_nonneg_int, default=0, metavar="N",
                    help="compare Lambda_n with log(2n) in both bases for n <= N")

    sp = add("decompose", "exact component means of the three-way split")
    sp.add_argument("--k-max", type=_pos_int, default=10**6)
    sp.add_argument("--points", type=_pos_int, default=64)

    sp = add("check-theorem1", "certify the strong-law conditions")
    sp.add_argument("--conditions", type=_words, default=None, help="comma separated ids (default from config)")

    for name, what in (("lemma2", "the auxiliary double sums"), ("lemma4", "the block triple sums")):
        sp = add(name, f"certify {what}")
        sp.add_argument("--which", type=_words, default=None, help="comma separated sum ids (default all)")

    sp = add("lemma3", "stretched-exponential integral and its bound ratio", config=False)
    sp.add_argument("--a", type=_floats, default=[1.0, 2.0])
    sp.add_argument("--b", type=_floats, default=[0.5, 1.0])
    sp.add_argument("--r", type=_floats, default=[0.0, 1.0, 2.0])
    sp.add_argument("--x", type=_floats, default=[float(v) for v in range(11)])
    sp.add_argument("--rel-tol", type=float, default=1e-11)
    sp.add_argument("--limit", type=_pos_int, default=200, help="quadrature subdivision budget")

    sp = add("verify-ineq", "exact NQD, covariance and moment-inequality oracles", config=False)
    sp.add_argument("--model", choices=("antithetic", "corpus", "joint"), default="antithetic")
    sp.add_argument("--joint-csv", type=Path, default=None, help="rows x_1,...,x_m,prob (model joint)")
    sp.add_argument("--n-atoms", type=_pos_int, default=100)
    sp.add_argument("--corpus-size", type=_pos_int, default=500)
    sp.add_argument("--pairs", type=_nonneg_int, default=100, help="random monotone transform pairs per joint")
    sp.add_argument("--s-lo", type=float, default=0.0)
    sp.add_argument("--t-len", type=float, default=1.0)
    sp.add_argument("--blocks", type=_ints, default=None, help="block bounds xi_0,...,xi_K")
    sp.add_argument("--eta", type=_nonneg_int, default=0)

    add("simulate", "Monte-Carlo normalized deviations and block event frequencies")
    add("compare", "the same paths under the three normalizers")

    sp = sub.add_parser("serve", help="run the HTTP service", parents=[common])
    sp.add_argument("--host", default="127.0.0.1")
    sp.add_argument("--port", type=int, default=8000)
    return p


# ---------------------------------------------------------------------------
# request building
# ---------------------------------------------------------------------------


def _load(args) -> RunConfig:
    cfg = load_config(args.config)
    cfg = cfg.with_seed(args.seed)
    dep = cfg.dependence
    if dep.joint_csv and args.config is not None and not Path(dep.joint_csv).is_absolute():
        # the service may run elsewhere; send an absolute path
        path = str((args.config.parent / dep.joint_csv).resolve())
        cfg = cfg.model_copy(update={"dependence": dep.model_copy(update={"joint_csv": path})})
    return cfg


def _payload(args) -> tuple[dict, RunConfig | None]:
    cmd = args.command
    if cmd == "sequences":
        return {"p": args.p, "r": args.r, "s": args.s, "n": args.n, "k": args.k, "audit_horizon": args.audit}, None
    if cmd == "lemma3":
        return {"a": args.a, "b": args.b, "r": args.r, "x": args.x, "rel_tol": args.rel_tol, "limit": args.limit}, None
    if cmd == "verify-ineq":
        body = {"model": args.model, "n_atoms": args.n_atoms, "corpus_size": args.corpus_size,
                "transform_pairs": args.pairs, "seed": args.seed or 0, "s_lo": args.s_lo,
                "t_len": args.t_len, "blocks": args.blocks, "eta": args.eta}
        if args.joint_csv is not None:
            from .dependence import DiscreteJoint

            try:
                joint = DiscreteJoint.from_csv(args.joint_csv)
            except OSError as exc:
                raise ConfigError(str(args.joint_csv), exc.strerror or str(exc)) from None
            body["joint"] = {"points": joint.points.tolist(), "probs": joint.probs.tolist()}
        return body, None
    cfg = _load(args)
    body = {"config": cfg.model_dump(mode="json"), "threads": args.threads}
    if cmd == "decompose":
        body.update(k_max=args.k_max, points=args.points)
    elif cmd == "check-theorem1":
        body["conditions"] = args.conditions
    elif cmd in ("lemma2", "lemma4"):
        body["which"] = args.which
    return body, cfg


def _remote(url: str, command: str, body: dict) -> Report:
    import httpx

    try:
        resp = httpx.post(f"{url.rstrip('/')}/v1/{command}", json=body, timeout=None)
    except httpx.HTTPError as exc:
        raise ServiceError(f"{url}: cannot reach service: {exc}", "server", "numeric") from None
    if resp.status_code == 200:
        return Report.model_validate(resp.json())
    try:
        err = resp.json()
        raise ServiceError(err["error"], err.get("path", command), err.get("kind", "numeric"))
    except (ValueError, KeyError):
        kind = "validation" if 400 <= resp.status_code < 500 else "numeric"
        raise ServiceError(f"{command}: HTTP {resp.status_code}: {resp.text[:200]}", command, kind) from None


# ---------------------------------------------------------------------------
# output
# ---------------------------------------------------------------------------


def _target(args, cfg: RunConfig | None) -> Path:
    if args.out is not None:
        return args.out
    prefix = cfg.output.prefix if cfg is not None else ""
    base = cfg.output_dir() if cfg is not None else Path(os.environ.get(OUTPUT_DIR_ENV) or ".")
    return base / f"{prefix}{args.command}.csv"


def write_report(report: Report, main: Path, as_json: bool = False) -> list[Path]:
    """Write every table of ``report``; the first to ``main``, the rest beside it."""
    paths = []
    for i, table in enumerate(report.tables):
        path = main if i == 0 else main.with_name(f"{main.stem}_{table.name}{main.suffix or '.csv'}")
        comments = [f"command {report.command}", f"table {table.name}"]
        if i == 0:
            comments += [f"summary: {line}" for line in report.summary]
        paths.append(write_csv(path, table.header, table.rows, report.config_ini, comments))
    if as_json:
        jpath = main.with_suffix(".json")
        atomic_write(jpath, json.dumps(report.model_dump(mode="json"), indent=1, sort_keys=True) + "\n")
        paths.append(jpath)
    return paths


def _serve(args) -> int:
    import uvicorn

    uvicorn.run("nqdlab.service.app:app", host=args.host, port=args.port, workers=1)
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    if args.command == "serve":
        return _serve(args)
    try:
        body, cfg = _payload(args)
        report = _remote(args.server, args.command, body) if args.server else dispatch(args.command, body)
        paths = write_report(report, _target(args, cfg), args.json)
    except Exception as exc:  # noqa: BLE001 - mapped onto exit codes
        err = classify(exc, getattr(args, "config", None) and str(args.config) or args.command)
        print(f"error: {err}", file=sys.stderr)
        return EXIT_INVALID if err.kind == "validation" else EXIT_NUMERIC
    for line in report.summary:
        print(line)
    for path in paths:
        print(f"wrote {path}")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())


__all__ = ["EXIT_INVALID", "EXIT_NUMERIC", "EXIT_OK", "HANDLERS", "build_parser", "main", "write_report"]
