"""Command-line front end: ``menuhard <kind> [flags]`` and ``menuhard replay <record.json>``.

Exit status: 0 on completion, 1 on invalid configuration (JSON diagnostics on
stderr), 2 when an invariant violation was found mid-run (witness in the JSON
record).  Without ``--out`` the CSV goes to stdout.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .core import EnumerationRefused
from .experiments import KINDS, MECHS, ConfigError, ExperimentConfig, SchemaMismatch, replay, run

CONFIG_FLAGS = ("m", "n", "k", "epsilon", "p", "seed", "trials", "mech", "claim", "size", "q", "alpha", "method", "out")


def _add_flags(sp: argparse.ArgumentParser) -> None:
    sp.add_argument("--m", type=int)
    sp.add_argument("--n", type=int)
    sp.add_argument("--k", type=int)
    sp.add_argument("--epsilon", help="rational, e.g. 1/4")
    sp.add_argument("--p", help="item demand probability, rational")
    sp.add_argument("--seed", type=int, help="master seed")
    sp.add_argument("--trials", type=int)
    sp.add_argument("--mech", choices=MECHS)
    sp.add_argument("--claim", help="covered-items | demand-concentration | small-value | opt-event; legacy numeric aliases also accepted")
    sp.add_argument("--size", type=int, help="submenu size (identify), bundle size (audit) or sample budget (tie)")
    sp.add_argument("--q", help="comma-separated query counts for cpp-distinguish")
    sp.add_argument("--alpha", help="approximation ratio for goodness")
    sp.add_argument("--method", choices=("exact", "mc", "auto"))
    sp.add_argument("--out", help="output path prefix; writes <out>.csv and <out>.json")
    sp.add_argument("--config", help="JSON file with any of the above; flags override it")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="menuhard", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for kind in KINDS:
        _add_flags(sub.add_parser(kind))
    rp = sub.add_parser("replay", help="re-run a recorded experiment and diff its output")
    rp.add_argument("record", help="the <out>.json written by a run")
    return parser


def _diagnose(problems: list, code: int = 1) -> int:
    print(json.dumps({"status": "invalid-config", "errors": problems}), file=sys.stderr)
    return code


def _config_from_args(args) -> ExperimentConfig:
    data = {}
    if args.config:
        try:
            data = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError([f"cannot read --config: {exc}"])
        if not isinstance(data, dict):
            raise ConfigError(["--config must hold a JSON object"])
        if data.get("kind", args.command) != args.command:
            raise ConfigError([f"config kind {data['kind']!r} does not match subcommand {args.command!r}"])
    data["kind"] = args.command
    for name in CONFIG_FLAGS:
        val = getattr(args, name)
        if val is not None:
            data[name] = val
    return ExperimentConfig.from_dict(data)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "replay":
        try:
            report = replay(args.record)
        except SchemaMismatch as exc:
            print(json.dumps({"status": "schema-mismatch", "errors": [str(exc)]}), file=sys.stderr)
            return 1
        except (OSError, json.JSONDecodeError, KeyError) as exc:
            return _diagnose([f"cannot read record: {exc}"])
        print(json.dumps({"status": "identical" if report.identical else "diverged", **report.to_json()}, indent=2))
        return 0 if report.identical else 2
    try:
        cfg = _config_from_args(args)
        result = run(cfg)
    except ConfigError as exc:
        return _diagnose(exc.problems)
    except (EnumerationRefused, ValueError) as exc:
        return _diagnose([str(exc)])
    if cfg.out:
        print(json.dumps({"status": result.status, "csv": f"{cfg.out}.csv", "record": f"{cfg.out}.json"}))
    else:
        sys.stdout.write(result.csv_text())
    if result.status != "ok":
        print(json.dumps({"status": result.status, "message": result.record["message"]}), file=sys.stderr)
    return result.exit_code


if __name__ == "__main__":
    raise SystemExit(main())
