"""One function per subcommand: validated request in, :class:`Report` out.

The HTTP routes and the in-process CLI both call these, so a report is the
same object whichever way it was produced.
"""

from __future__ import annotations

import itertools
import math
import warnings

import numpy as np
from pydantic import ValidationError

from .. import __version__
from ..config import ConfigError
from ..dependence import (
    DependenceError,
    DiscreteJoint,
    antithetic_atoms,
    covariance_sign_oracle,
    moment_inequality_exact,
    nqd_check_exact,
    nqd_corpus,
    random_monotone_map,
)
from ..marginals import MarginalError, domination_audit
from ..scaling import BlockRangeError, MomentInequalityProfile, ScalingFamily, TruncationWindow, lambda_bound_audit
from ..series import SeriesDiagnostic
from ..simulator import SimConfig, SimulationError, geometric_checkpoints, run
from ..theorem1 import (
    LEMMA2_IDS,
    LEMMA4_IDS,
    CheckerError,
    QuadratureError,
    QuadratureSpec,
    lemma3_integral,
    run_checks,
)
from ..truncation import TruncationError, component_means
from .schemas import (
    CheckRequest,
    ConfigRequest,
    DecomposeRequest,
    Lemma3Request,
    LemmaRequest,
    Report,
    SequencesRequest,
    SimulateRequest,
    Table,
    VerifyIneqRequest,
)

COV_TOL = 1e-12
SERIES_HEADER = ["condition", "verdict", "estimate", "tail_majorant", "checkpoints"]


class ServiceError(Exception):
    """An error with an HTTP status, the offending config path and a kind."""

    def __init__(self, message: str, path: str, kind: str):
        super().__init__(message)
        self.path = path
        self.kind = kind

    @property
    def status(self) -> int:
        return 400 if self.kind == "validation" else 500


_VALIDATION = (ConfigError, CheckerError, MarginalError, DependenceError, SimulationError, TruncationError)
_NUMERIC = (QuadratureError, OverflowError, FloatingPointError, BlockRangeError)


def classify(exc: BaseException, path: str = "request") -> ServiceError:
    """Map a core exception to a :class:`ServiceError`."""
    if isinstance(exc, ServiceError):
        return exc
    if isinstance(exc, ConfigError):
        return ServiceError(str(exc), exc.path, "validation")
    if isinstance(exc, ValidationError):
        err = exc.errors()[0]
        loc = ".".join(str(p) for p in err.get("loc", ())) or path
        return ServiceError(f"{loc}: {err.get('msg')}", loc, "validation")
    if isinstance(exc, _NUMERIC):
        return ServiceError(f"{path}: numeric failure: {exc}", path, "numeric")
    if isinstance(exc, (_VALIDATION, ValueError)):
        return ServiceError(f"{path}: {exc}", path, "validation")
    return ServiceError(f"{path}: {type(exc).__name__}: {exc}", path, "numeric")


def _cell(v):
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return v
    return v


def _table(name, header, rows) -> Table:
    return Table(name=name, header=list(header), rows=[[_cell(v) for v in row] for row in rows])


def _report(command, tables, summary=(), config=None, ok=True) -> Report:
    return Report(command=command, version=__version__, config_ini=config.to_ini() if config is not None else None,
                  tables=tables, summary=list(summary), ok=ok)


# ---------------------------------------------------------------------------
# sequences and decomposition
# ---------------------------------------------------------------------------


def sequences(req: SequencesRequest) -> Report:
    fam = ScalingFamily(p=req.p, r=req.r, s=req.s)
    n = np.arange(1, req.n + 1, dtype=float)
    seq_rows = zip(range(1, req.n + 1), 1.0 / n, fam.b(n), fam.c(n), fam.d(n))
    K = req.k if req.k is not None else min(req.n, 64)
    profile = MomentInequalityProfile(r=req.r)
    lam = profile.capital(np.arange(1, K + 1, dtype=float))
    blk_rows, summary = [], []
    for k in range(1, K + 1):
        try:
            lk = fam.blocks.value(k)
        except BlockRangeError:
            summary.append(f"block table stops at k = {k - 1}: l_{k} exceeds the 64-bit range")
            break
        blk_rows.append((k, lk, 2**k, float(lam[k - 1])))
    if req.audit_horizon:
        summary += list(lambda_bound_audit(req.audit_horizon).report)
    tables = [
        _table("sequences", ["n", "a_n", "b_n", "c_n", "d_n"], seq_rows),
        _table("blocks", ["k", "l_k", "m_k", "Lambda_k"], blk_rows),
    ]
    return _report("sequences", tables, summary)


def _component_means(m, c, d):
    if math.isfinite(m.mean()):
        return component_means(m, c, d)
    # infinite mean: the excess part has infinite mean, the bounded parts do not
    tc, td = np.asarray(m.tail(c), float), np.asarray(m.tail(d), float)
    e1 = np.asarray(m.truncated_moment(1.0, c), float) + c * tc
    e2 = np.asarray(m.window_moment(1.0, c, d), float) + d * td - c * tc
    return e1, np.maximum(e2, 0.0), np.full_like(e1, math.inf)


def decompose(req: DecomposeRequest) -> Report:
    cfg = req.config
    m = cfg.require_marginal()
    fam = cfg.scaling.family()
    k = np.unique(np.round(np.geomspace(1, req.k_max, req.points)).astype(np.int64)).astype(float)
    c = fam.c(k)
    d = np.maximum(fam.d(k), c)
    e1, e2, e3 = _component_means(m, c, d)
    mean = m.mean()
    rows = [(int(ki), ci, di, mean, a, b, t) for ki, ci, di, a, b, t in zip(k, c, d, e1, e2, e3)]
    summary = []
    if math.isfinite(mean):
        gap = float(np.max(np.abs((e1 + e2 + e3) - mean))) / max(abs(mean), 1e-300)
        summary.append(f"max relative |EX' + EX'' + EX''' - EX| = {gap:.3g}")
        tail = e3[len(e3) // 2:]
        summary.append("EX''' nonincreasing over the upper half of the grid: "
                       + ("yes" if np.all(np.diff(tail) <= 1e-15 * max(mean, 1.0)) else "no"))
    else:
        summary.append("infinite mean: EX''' is infinite at every k")
    return _report("decompose", [_table("decompose", ["k", "c_k", "d_k", "EX", "EXp", "EXpp", "EXppp"], rows)],
                   summary, cfg)


# ---------------------------------------------------------------------------
# series certification
# ---------------------------------------------------------------------------


def _series_rows(diags: list[SeriesDiagnostic]):
    rows = []
    for dg in diags:
        cps = ";".join(f"{lu:.17g}:{v:.17g}" for lu, v in dg.partial_sums)
        rows.append((dg.condition_id, dg.verdict, dg.value_estimate, dg.tail_majorant, cps))
    return rows


def _series_summary(diags):
    lines = []
    for dg in diags:
        extra = ""
        if dg.condition_id == "a":
            extra = f", ratio_sup {dg.extra.get('ratio_sup', math.nan):.17g}, weight_inf {dg.extra.get('weight_inf', math.nan):.17g}"
        else:
            extra = f", estimate {dg.value_estimate:.6g}, relative majorant {dg.relative_majorant():.3g}"
        note = f" [{'; '.join(dg.notes)}]" if dg.notes else ""
        lines.append(f"{dg.condition_id}: {dg.verdict}{extra}{note}")
    bad = [dg.condition_id for dg in diags if not dg.converged]
    lines.append("all conditions pass" if not bad else f"not certified: {', '.join(bad)}")
    return lines, not bad


def _run_series(command: str, req: ConfigRequest, ids) -> Report:
    cfg = req.config
    m = cfg.require_marginal()
    dom = cfg.marginal.build_dominator()
    target = dom or m
    fam = cfg.scaling.family()
    diags = run_checks(ids, target, fam, cfg.scaling.profile(), cfg.check.engine(), req.threads, cfg.check.k_max)
    summary, ok = _series_summary(diags)
    if dom is not None:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            audit = domination_audit([m], dom, 1.0, np.geomspace(1e-2, 1e8, 101))
        summary.insert(0, f"domination of {m.spec()} by {dom.spec()} with C = 1: "
                          f"{'pass' if audit.passed else 'FAIL'} (worst ratio {audit.worst_ratio:.6g})")
        ok = ok and audit.passed
    return _report(command, [_table(command, SERIES_HEADER, _series_rows(diags))], summary, cfg, ok)


def check_theorem1(req: CheckRequest) -> Report:
    ids = req.conditions if req.conditions is not None else list(req.config.check.conditions)
    return _run_series("check-theorem1", req, ids)


def _lemma_ids(which, prefix, allowed):
    if not which:
        return list(allowed)
    out = []
    for w in which:
        cid = w if w.startswith(prefix) else prefix + w
        if cid not in allowed:
            raise CheckerError(f"unknown sum {w!r}; expected one of {[a.removeprefix(prefix) for a in allowed]}")
        out.append(cid)
    return out


def lemma2(req: LemmaRequest) -> Report:
    return _run_series("lemma2", req, _lemma_ids(req.which, "L2.", LEMMA2_IDS))


def lemma4(req: LemmaRequest) -> Report:
    return _run_series("lemma4", req, _lemma_ids(req.which, "L4.", LEMMA4_IDS))


def lemma3(req: Lemma3Request) -> Report:
    rows, summary = [], []
    for a, b, r in itertools.product(req.a, req.b, req.r):
        ratios = []
        for x in req.x:
            value, ratio = lemma3_integral(QuadratureSpec(a=a, b=b, r=r, x=x, rel_tol=req.rel_tol,
                                                           limit=req.limit))
            rows.append((a, b, r, x, value, ratio))
            ratios.append(ratio)
        summary.append(f"a={a:g} b={b:g} r={r:g}: max bound_ratio {max(ratios):.6g}")
    return _report("lemma3", [_table("lemma3", ["a", "b", "r", "x", "value", "bound_ratio"], rows)], summary)


# ---------------------------------------------------------------------------
# exact dependence oracles
# ---------------------------------------------------------------------------


def _joint_row(case, joint, window, blocks, eta, rng, pairs):
    chk = nqd_check_exact(joint)
    cov = -math.inf
    for _ in range(pairs):
        f, g = random_monotone_map(rng), random_monotone_map(rng)
        cov = max(cov, covariance_sign_oracle(joint, f, g))
    lhs, rhs = moment_inequality_exact(joint, window, blocks, eta)
    holds = lhs <= rhs + 1e-12 * (1.0 + abs(rhs))
    return (case, joint.dim, chk.passed, chk.worst_gap, cov if pairs else math.nan, lhs, rhs, holds)


def verify_ineq(req: VerifyIneqRequest) -> Report:
    window = TruncationWindow(req.s_lo, req.t_len)
    rng = np.random.default_rng(req.seed)
    if req.model == "corpus":
        joints = [(f"corpus[{i}]", j) for i, j in enumerate(nqd_corpus(req.corpus_size, req.seed))]
        blocks, eta = None, 0
    elif req.model == "antithetic":
        joints = [(f"antithetic({req.n_atoms})", antithetic_atoms(req.n_atoms))]
        blocks, eta = req.blocks, req.eta
    else:
        joints = [("joint", DiscreteJoint(np.array(req.joint.points), np.array(req.joint.probs)))]
        blocks, eta = req.blocks, req.eta
    rows = [_joint_row(case, j, window, blocks, eta, rng, req.transform_pairs) for case, j in joints]
    nqd_fail = sum(not r[2] for r in rows)
    cov_fail = sum(1 for r in rows if r[4] > COV_TOL)
    ineq_fail = sum(not r[7] for r in rows)
    summary = [
        f"{len(rows)} joint(s): NQD failures {nqd_fail}, covariance sign violations {cov_fail}"
        f" (tolerance {COV_TOL:g}), moment inequality violations {ineq_fail}",
    ]
    if req.model == "antithetic":
        summary.append(f"antithetic pair: lhs = {rows[0][5]:.17g}, rhs = {rows[0][6]:.17g}")
    header = ["case", "dim", "nqd_pass", "worst_gap", "cov_max", "lhs", "rhs", "holds"]
    ok = not (nqd_fail or cov_fail or ineq_fail)
    return _report("verify-ineq", [_table("verify-ineq", header, rows)], summary, ok=ok)


# ---------------------------------------------------------------------------
# simulation
# ---------------------------------------------------------------------------


def _sim_config(req: SimulateRequest, normalizers) -> SimConfig:
    cfg = req.config
    sim = cfg.simulate
    return SimConfig(
        model=cfg.dependence_model(),
        fam=cfg.scaling.family(),
        master_seed=sim.seed,
        path_count=sim.paths,
        horizon=sim.horizon,
        checkpoints=geometric_checkpoints(sim.checkpoint_start, sim.horizon, sim.per_decade),
        epsilons=sim.epsilons,
        normalizers=tuple(normalizers),
        empirical_centering=sim.empirical_centering,
        event_points=req.event_points,
    )


def _sim_summary(stats):
    lines = [f"{stats.path_count} paths, centering {stats.centering}"]
    for name in stats.quantiles:
        med = stats.median(name)
        lines.append(f"{name}: median at n={stats.checkpoints[0]} is {med[0]:.6g}, "
                     f"at n={stats.checkpoints[-1]} is {med[-1]:.6g}")
    return lines


QUANTILE_HEADER = ["checkpoint_n", "normalizer", "median", "q90", "max"]


def simulate(req: SimulateRequest) -> Report:
    stats = run(_sim_config(req, req.normalizers), workers=req.threads)
    tables = [
        _table("quantiles", QUANTILE_HEADER, stats.rows()),
        _table("events", ["epsilon", "k", "event_freq"], stats.event_rows()),
    ]
    return _report("simulate", tables, _sim_summary(stats), req.config)


def compare(req: SimulateRequest) -> Report:
    from ..simulator import NORMALIZERS

    stats = run(_sim_config(req, NORMALIZERS), workers=req.threads)
    summary = _sim_summary(stats)
    paper, plain = stats.quantiles["paper"][:, 0], stats.quantiles["plain"][:, 0]
    summary.append("plain-normalized medians >= paper-normalized medians at every checkpoint: "
                   + ("yes" if np.all(plain >= paper) else "no"))
    return _report("compare", [_table("compare", QUANTILE_HEADER, stats.rows())], summary, req.config)


HANDLERS = {
    "sequences": (SequencesRequest, sequences),
    "decompose": (DecomposeRequest, decompose),
    "check-theorem1": (CheckRequest, check_theorem1),
    "lemma2": (LemmaRequest, lemma2),
    "lemma3": (Lemma3Request, lemma3),
    "lemma4": (LemmaRequest, lemma4),
    "verify-ineq": (VerifyIneqRequest, verify_ineq),
    "simulate": (SimulateRequest, simulate),
    "compare": (SimulateRequest, compare),
}


def dispatch(command: str, payload) -> Report:
    """Validate ``payload`` (a dict or request model) and run ``command``; raises :class:`ServiceError`."""
    if command not in HANDLERS:
        raise ServiceError(f"unknown command {command!r}", "command", "validation")
    model, fn = HANDLERS[command]
    try:
        req = payload if isinstance(payload, model) else model.model_validate(payload)
        return fn(req)
    except Exception as exc:  # noqa: BLE001 - every failure becomes a classified error
        raise classify(exc, command) from exc


__all__ = [
    "COV_TOL",
    "HANDLERS",
    "ServiceError",
    "check_theorem1",
    "classify",
    "compare",
    "decompose",
    "dispatch",
    "lemma2",
    "lemma3",
    "lemma4",
    "sequences",
    "simulate",
    "verify_ineq",
]
