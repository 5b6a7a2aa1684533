"""Batch experiments: configuration, execution, CSV + JSON provenance, replay.

Every experiment produces a fixed-schema CSV (first line is a ``#`` comment
naming kind and schema version) and a JSON record holding the config, the
rows, a status and, on invariant violations, the witness.  Per-trial
randomness comes from ``SeedSequence(seed, spawn_key=(trial, ...))`` so runs
replay bit-exactly from (config, seed).
"""
from __future__ import annotations

import csv
import hashlib
import io
import json
import math
import time
from dataclasses import asdict, dataclass, field, fields
from fractions import Fraction
from pathlib import Path

from . import __version__
from .core import bits_of, exact_sqrt, frac_str, iter_masks
from .games import (
    GuessStrategy,
    FixedQueryStrategy,
    ScanStrategy,
    distinguishing_game,
    identification_game,
    synthetic_hit_mechanism,
    tie_profit_gap,
    tie_sampler,
    verify_profit_argmax,
)
from .generators import derive_rng, random_submenu, structured_menu
from .goodness import goodness_check
from .mechanisms import make_mechanism
from .menus import TaxationViolation, check_polar_menu, extract_menu, find_structured_submenu, price_bins, structure_violations
from .prob import CLAIM_CSV_HEADER, audit_claim, canonical_claim, exact_hypergeometric_tail, three_sigma
from .valuations import FlatValuation, StarValuation, ZeroValuation, random_polar

SCHEMA_VERSION = 1
KINDS = ("menu", "submenu", "identify", "cpp-distinguish", "tie", "audit", "goodness")
MECHS = ("vcg", "greedy", "cpp-exact", "cpp-flex")

HEADERS = {
    "menu": ["bundle", "size", "price"],
    "submenu": ["size", "price_bin", "count", "selected"],
    "identify": ["strategy", "m", "k", "submenu_size", "queries_used", "submenu_queries", "success", "star"],
    "cpp-distinguish": ["q", "m", "epsilon", "trials", "successes", "rate", "hit_tail", "bound", "three_sigma", "within"],
    "tie": ["m", "epsilon", "q", "lower_minus_upper", "certified", "reps", "budget", "found", "found_rate", "predicted"],
    "audit": CLAIM_CSV_HEADER,
    "goodness": ["mech", "m", "n", "instances", "alpha", "beta"],
}


class ConfigError(ValueError):
    def __init__(self, problems: list):
        self.problems = problems
        super().__init__("; ".join(problems))


class InvariantViolation(RuntimeError):
    def __init__(self, message: str, witness=None):
        super().__init__(message)
        self.witness = witness


class SchemaMismatch(ValueError):
    pass


@dataclass
class ExperimentConfig:
    kind: str
    m: int | None = None
    n: int | None = None
    k: int | None = None
    epsilon: str | None = None
    p: str | None = None
    seed: int | None = None
    trials: int | None = None
    mech: str = "vcg"
    claim: str | None = None
    size: int | None = None
    q: str | None = None
    alpha: str | None = None
    method: str = "exact"
    out: str | None = field(default=None, compare=False)

    REQUIRED = {
        "menu": ("m", "n", "seed"),
        "submenu": ("m", "n", "seed"),
        "identify": ("m", "k", "size", "seed"),
        "cpp-distinguish": ("m", "epsilon", "seed", "trials"),
        "tie": ("m", "epsilon", "seed", "trials"),
        "audit": ("claim", "m"),
        "goodness": ("m", "n", "seed", "trials"),
    }

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        names = {f.name for f in fields(cls)}
        unknown = set(d) - names
        if unknown:
            raise ConfigError([f"unknown config keys: {sorted(unknown)}"])
        return cls(**d)

    def to_dict(self) -> dict:
        d = asdict(self)
        d.pop("out")
        return d

    def problems(self) -> list:
        if self.kind not in KINDS:
            return [f"kind must be one of {KINDS}, got {self.kind!r}"]
        out = [f"--{name} is required for {self.kind}" for name in self.REQUIRED[self.kind] if getattr(self, name) is None]
        if self.kind in ("menu", "submenu", "goodness") and self.mech not in MECHS:
            out.append(f"--mech must be one of {MECHS}")
        if self.mech in ("cpp-exact", "cpp-flex") and self.kind in ("menu", "submenu") and self.k is None:
            out.append("--k is required for cpp mechanisms")
        if self.kind == "goodness" and self.mech.startswith("cpp"):
            out.append("goodness needs an auction mechanism (vcg or greedy)")
        if self.kind == "audit":
            if self.method not in ("exact", "mc", "auto"):
                out.append("--method must be exact, mc or auto")
            if self.method == "mc" and self.trials and self.seed is None:
                out.append("--seed is required for Monte Carlo audits")
            if self.claim is not None:
                try:
                    canonical_claim(self.claim)
                except ValueError as exc:
                    out.append(str(exc))
        for name in ("epsilon", "p", "alpha"):
            val = getattr(self, name)
            if val is not None:
                try:
                    Fraction(val)
                except (ValueError, ZeroDivisionError):
                    out.append(f"--{name} must be a rational like 1/4, got {val!r}")
        if self.kind in ("cpp-distinguish", "tie") and self.m is not None and math.isqrt(self.m) ** 2 != self.m:
            out.append(f"m={self.m} must be a perfect square for {self.kind}")
        if self.m is not None and self.m < 1:
            out.append("m must be positive")
        return out

    def validate(self) -> None:
        problems = self.problems()
        if problems:
            raise ConfigError(problems)


@dataclass
class RunResult:
    status: str  # "ok" | "invariant-violation"
    header: list
    rows: list
    record: dict

    @property
    def exit_code(self) -> int:
        return 0 if self.status == "ok" else 2

    def csv_text(self) -> str:
        return render_csv(self.record["kind"], self.header, self.rows)


def render_csv(kind: str, header: list, rows: list) -> str:
    buf = io.StringIO()
    buf.write(f"# menuhard {kind} schema={SCHEMA_VERSION}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _frac(x) -> str:
    return frac_str(x)


# -- experiment bodies: each returns rows and extra record fields ---------------

def _opponents(cfg: ExperimentConfig) -> list:
    if cfg.mech.startswith("cpp"):
        return [ZeroValuation(cfg.m) for _ in range(cfg.n - 1)]
    p = Fraction(cfg.p) if cfg.p is not None else Fraction(1, cfg.n)
    return [random_polar(cfg.m, p, derive_rng(cfg.seed, j)) for j in range(cfg.n - 1)]


def _extract(cfg: ExperimentConfig):
    mech = make_mechanism(cfg.mech, cfg.k)
    opponents = _opponents(cfg)
    try:
        menu = extract_menu(mech, 0, opponents)
    except TaxationViolation as exc:
        raise InvariantViolation(str(exc), {"bundle": bits_of(exc.bundle, cfg.m), "first": [exc.first[0], _frac(exc.first[1])],
                                            "second": [exc.second[0], _frac(exc.second[1])]})
    return menu, opponents


def _run_menu(cfg):
    menu, _ = _extract(cfg)
    rows = [[bits_of(S, cfg.m), S.bit_count(), _frac(p)] for S, p in sorted(menu.entries.items())]
    extra = {"menu": menu.to_json()}
    if cfg.mech == "vcg":
        report = check_polar_menu(menu)
        if not report.ok:
            extra["witness"] = {
                "price_cap": [[bits_of(S, cfg.m), _frac(p)] for S, p in report.price_cap_violations],
                "gap": [[bits_of(S, cfg.m), bits_of(T, cfg.m), _frac(d)] for S, T, d in report.gap_violations],
            }
            return rows, extra, "polar menu properties violated"
    return rows, extra, None


def _run_submenu(cfg):
    menu, _ = _extract(cfg)
    bins = price_bins(menu)
    sub = find_structured_submenu(menu)
    rows = []
    for (size, b), members in bins.items():
        chosen = sub is not None and set(members) == set(sub.bundles)
        rows.append([size, b, len(members), str(chosen).lower()])
    extra = {
        "menu": menu.to_json(),
        "bin_count": len(bins),
        "bin_bound": (cfg.m + 1) * (cfg.m ** 6 + 1),
        "submenu": None if sub is None else [bits_of(S, cfg.m) for S in sorted(sub.bundles)],
    }
    if sub is not None:
        problems = structure_violations(sub.bundles, menu)
        if problems:
            extra["witness"] = problems
            return rows, extra, "returned submenu is not structured"
    return rows, extra, None


def _run_identify(cfg):
    m, k, size = cfg.m, cfg.k, cfg.size
    rng = derive_rng(cfg.seed, 0)
    submenu = random_submenu(m, k, size, rng)
    menu = structured_menu(m, submenu, rng)
    order = [submenu[int(i)] for i in rng.permutation(len(submenu))]
    cap = StarValuation(m, k, submenu, submenu[0]).cap
    strategies = [("scan", ScanStrategy(order, cap))]
    if size >= 2:
        strategies.append(("short-scan", GuessStrategy(order, size - 2, cap)))
    rows, transcripts = [], []
    problem, witness = None, None
    for name, strat in strategies:
        res = identification_game(strat, m, k, submenu, menu=menu)
        rows.append([name, m, k, size, res.queries_used, res.submenu_queries, str(res.success).lower(), bits_of(res.star, m)])
        transcripts.append(res.to_json())
        check = verify_profit_argmax(StarValuation(m, k, submenu, res.star), menu)
        if not res.replay_consistent():
            problem, witness = "adversary answers inconsistent with final star", res.to_json()
        elif not check:
            problem, witness = "star is not the profit maximizer", {"kind": check.witness[0], "bundle": bits_of(check.witness[1], m)}
        elif res.success and res.submenu_queries < size - 1:
            problem, witness = "identified the star with too few queries", res.to_json()
    extra = {"menu": menu.to_json(), "transcripts": transcripts}
    if problem:
        extra["witness"] = witness
    return rows, extra, problem


def _run_cpp_distinguish(cfg):
    m = cfg.m
    eps = Fraction(cfg.epsilon)
    flat = FlatValuation(m, eps)
    r = flat.root
    h = exact_hypergeometric_tail(m, r, r, flat.threshold, ">")
    qs = [int(x) for x in (cfg.q or "1,5,10").split(",")]
    pool = list(iter_masks(m, r))
    rows, problem = [], None
    for q in qs:
        rng = derive_rng(cfg.seed, q, 0)
        bundles = [pool[int(i)] for i in rng.choice(len(pool), size=min(q, len(pool)), replace=False)]
        res = distinguishing_game(FixedQueryStrategy(bundles, flat), m, eps, derive_rng(cfg.seed, q, 1), cfg.trials)
        bound = Fraction(1, 2) + q * h / 2
        sig = three_sigma(float(min(bound, 1)), cfg.trials)
        within = res.rate <= float(bound) + sig
        rows.append([q, m, str(eps), cfg.trials, res.successes, repr(res.rate), _frac(h), _frac(bound), repr(sig), str(within).lower()])
        if not within and problem is None:
            problem = f"success rate {res.rate} exceeds bound {float(bound)} + 3 sigma at q={q}"
    return rows, {}, problem


def _run_tie(cfg):
    m = cfg.m
    r = exact_sqrt(m)
    eps = Fraction(cfg.epsilon)
    q = Fraction(1, m ** 4)
    gap = tie_profit_gap(m, eps, q)
    budget = cfg.size if cfg.size is not None else m ** 5
    found = 0
    for rep in range(cfg.trials):
        rng = derive_rng(cfg.seed, rep)
        T = sum(1 << int(j) for j in rng.choice(m, size=r, replace=False))
        mech = synthetic_hit_mechanism(T, m, eps, q)
        res = tie_sampler(mech, T, m, eps, budget, derive_rng(cfg.seed, rep, 1))
        found += res.found is not None
    predicted = 1 - (1 - float(q)) ** budget
    rate = found / cfg.trials if cfg.trials else 0.0
    rows = [[m, str(eps), _frac(q), _frac(gap.lower - gap.upper), str(gap.certified).lower(), cfg.trials, budget, found,
             repr(rate), repr(predicted)]]
    return rows, {}, None if gap.certified else "profit gap not certified"


def _run_audit(cfg):
    eps = None if cfg.epsilon is None else Fraction(cfg.epsilon)
    rep = audit_claim(cfg.claim, cfg.m, cfg.n, eps, trials=cfg.trials or 0, seed=cfg.seed, method=cfg.method, size=cfg.size)
    return [rep.csv_row()], {"note": rep.note, "in_hypothesis": rep.in_hypothesis}, None


def _run_goodness(cfg):
    m, n = cfg.m, cfg.n
    p = Fraction(cfg.p) if cfg.p is not None else Fraction(1, n)
    U = [[random_polar(m, p, derive_rng(cfg.seed, idx, j)) for j in range(n)] for idx in range(cfg.trials)]
    alpha = Fraction(cfg.alpha or 1)
    mech = make_mechanism(cfg.mech, cfg.k)
    rep = goodness_check(mech, U, alpha)
    problem = None
    if cfg.mech == "vcg" and rep.beta != 1:
        problem = "VCG failed to be optimal"
    return [[cfg.mech, m, n, cfg.trials, str(alpha), _frac(rep.beta)]], {}, problem


RUNNERS = {
    "menu": _run_menu,
    "submenu": _run_submenu,
    "identify": _run_identify,
    "cpp-distinguish": _run_cpp_distinguish,
    "tie": _run_tie,
    "audit": _run_audit,
    "goodness": _run_goodness,
}


def _stringify(rows: list) -> list:
    return [[str(x) for x in row] for row in rows]


def execute(cfg: ExperimentConfig) -> RunResult:
    """Run without touching the filesystem."""
    cfg.validate()
    start = time.perf_counter()
    witness = None
    try:
        rows, extra, problem = RUNNERS[cfg.kind](cfg)
    except InvariantViolation as exc:
        rows, extra, problem, witness = [], {}, str(exc), exc.witness
    rows = _stringify(rows)
    header = HEADERS[cfg.kind]
    status = "ok" if problem is None else "invariant-violation"
    record = {
        "schema_version": SCHEMA_VERSION,
        "kind": cfg.kind,
        "config": cfg.to_dict(),
        "seed": cfg.seed,
        "library_version": __version__,
        "wall_time_s": round(time.perf_counter() - start, 6),
        "status": status,
        "message": problem,
        "header": header,
        "rows": rows,
        "csv_sha256": hashlib.sha256(render_csv(cfg.kind, header, rows).encode()).hexdigest(),
    }
    record.update(extra)
    if witness is not None:
        record["witness"] = witness
    return RunResult(status, header, rows, record)


def run(cfg: ExperimentConfig) -> RunResult:
    """Execute and, when ``cfg.out`` is set, write ``<out>.csv`` and ``<out>.json``
    (plus ``<out>.menu.json`` for menu experiments)."""
    result = execute(cfg)
    if cfg.out:
        base = Path(cfg.out)
        base.parent.mkdir(parents=True, exist_ok=True)
        # status record first, so a CSV never exists without one
        Path(f"{base}.json").write_text(json.dumps(result.record, indent=2, sort_keys=True) + "\n")
        if cfg.kind == "menu" and "menu" in result.record:
            Path(f"{base}.menu.json").write_text(json.dumps(result.record["menu"], indent=2) + "\n")
        Path(f"{base}.csv").write_text(result.csv_text())
    return result


@dataclass
class ReplayReport:
    identical: bool
    divergences: list  # human-readable, each naming a row or transcript entry

    def to_json(self) -> dict:
        return {"identical": self.identical, "divergences": self.divergences}


def replay(record_path) -> ReplayReport:
    """Re-run a recorded experiment from its config and compare everything recorded."""
    record = json.loads(Path(record_path).read_text())
    version = record.get("schema_version")
    if version != SCHEMA_VERSION:
        raise SchemaMismatch(f"record schema {version!r}, this library reads schema {SCHEMA_VERSION}")
    cfg = ExperimentConfig.from_dict(record["config"])
    fresh = execute(cfg)
    diffs = []
    if record.get("header") != fresh.header:
        diffs.append(f"header: recorded {record.get('header')} vs replayed {fresh.header}")
    old_rows = record.get("rows", [])
    for idx in range(max(len(old_rows), len(fresh.rows))):
        a = old_rows[idx] if idx < len(old_rows) else None
        b = fresh.rows[idx] if idx < len(fresh.rows) else None
        if a != b:
            diffs.append(f"row {idx}: recorded {a} vs replayed {b}")
    for t_idx, (old_t, new_t) in enumerate(zip(record.get("transcripts", []), fresh.record.get("transcripts", []))):
        for q_idx, (qa, qb) in enumerate(zip(old_t["queries"], new_t["queries"])):
            if qa != qb:
                diffs.append(f"transcript {t_idx} query {q_idx}: recorded {qa} vs replayed {qb}")
        if len(old_t["queries"]) != len(new_t["queries"]):
            diffs.append(f"transcript {t_idx}: {len(old_t['queries'])} recorded queries vs {len(new_t['queries'])}")
    csv_path = Path(str(record_path)[: -len(".json")] + ".csv") if str(record_path).endswith(".json") else None
    if csv_path is not None and csv_path.exists() and csv_path.read_text() != fresh.csv_text():
        diffs.append(f"csv file {csv_path.name} differs from replayed output")
    if record.get("csv_sha256") != fresh.record["csv_sha256"]:
        diffs.append("csv digest differs")
    return ReplayReport(not diffs, diffs)
