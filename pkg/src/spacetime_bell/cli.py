"""Command-line entry point.

    spacetime-bell exact       --config run.toml --out out/
    spacetime-bell sample      --config run.toml --seed 7 --out out/
    spacetime-bell schedule    --config run.toml
    spacetime-bell feasibility --config run.toml
    spacetime-bell lhv-bound
    spacetime-bell lhv-fit

Exit codes: 0 success, 2 configuration error, 3 infeasible timing budget.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from dataclasses import dataclass, field, fields
from pathlib import Path

import numpy as np

from . import lhv, protocol, stats
from .distribution import fmt
from .protocol import SMHypothesis, TrialInputs, TrialRecord
from .spacetime import (
    REFERENCE_FEASIBLE,
    BudgetError,
    FeasibilityParams,
    TimingBudget,
    build_schedule,
    feasibility_check,
    reference_budget,
    validate_budget,
)

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_INFEASIBLE = 3

TRIAL_COLUMNS = ("alpha", "alpha_p", "beta", "beta_p", "a", "b", "s", "t_a", "t_s", "t_b")


class ConfigError(ValueError):
    def __init__(self, field_name: str, message: str):
        self.field = field_name
        super().__init__(f"{field_name}: {message}")


@dataclass
class RunConfig:
    hypothesis: SMHypothesis = SMHypothesis.BORN_REDUCE
    trials: int = 100_000
    seed: int | None = None
    budget: TimingBudget = field(default_factory=reference_budget)
    alice_radius: float = 0.0
    bob_radius: float = 0.0
    feasibility: FeasibilityParams | None = None
    margin: float = 100.0
    out: Path = Path("out")
    format: str = "csv"


def _number(section: str, key: str, value) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{section}.{key}", f"expected a number, got {value!r}")
    return float(value)


def _section(doc: dict, name: str, cls, required: bool = False, extra: tuple[str, ...] = ()) -> dict:
    raw = doc.get(name)
    if raw is None:
        if required:
            raise ConfigError(name, "missing section")
        return {}
    if not isinstance(raw, dict):
        raise ConfigError(name, "expected a table")
    known = {f.name for f in fields(cls)} if cls else set()
    known |= set(extra)
    for key in raw:
        if key not in known:
            raise ConfigError(f"{name}.{key}", "unknown key")
    return {k: _number(name, k, v) for k, v in raw.items()}


def parse_config(doc: dict) -> RunConfig:
    """Build a RunConfig from a parsed TOML document; raises ConfigError naming the bad field."""
    allowed = {"hypothesis", "trials", "seed", "budget", "regions", "feasibility", "output"}
    for key in doc:
        if key not in allowed:
            raise ConfigError(key, "unknown key")
    cfg = RunConfig()
    if "hypothesis" in doc:
        try:
            cfg.hypothesis = SMHypothesis(doc["hypothesis"])
        except ValueError:
            choices = ", ".join(h.value for h in SMHypothesis)
            raise ConfigError("hypothesis", f"expected one of {choices}, got {doc['hypothesis']!r}") from None
    if "trials" in doc:
        if not isinstance(doc["trials"], int) or isinstance(doc["trials"], bool) or doc["trials"] < 0:
            raise ConfigError("trials", f"expected a non-negative integer, got {doc['trials']!r}")
        cfg.trials = doc["trials"]
    if "seed" in doc:
        cfg.seed = _seed("seed", doc["seed"])

    budget = _section(doc, "budget", TimingBudget)
    if budget:
        required = ("T_rand", "T_rand_prime", "T_mic", "T_mac", "T_red", "T_geom", "T_mass", "D_ent")
        missing = [k for k in required if k not in budget]
        if missing:
            raise ConfigError(f"budget.{missing[0]}", "missing value")
        cfg.budget = TimingBudget(**budget)

    regions = _section(doc, "regions", None, extra=("alice_radius", "bob_radius"))
    for key, value in regions.items():
        if value < 0:
            raise ConfigError(f"regions.{key}", "radius must be non-negative")
        setattr(cfg, key, value)

    feas = _section(doc, "feasibility", FeasibilityParams, extra=("margin",))
    if feas:
        cfg.margin = feas.pop("margin", cfg.margin)
        try:
            cfg.feasibility = FeasibilityParams(**feas)
        except TypeError as exc:
            raise ConfigError("feasibility", str(exc)) from None
        except ValueError as exc:
            raise ConfigError(f"feasibility.{str(exc).split()[0]}", str(exc)) from None

    output = doc.get("output", {})
    if not isinstance(output, dict):
        raise ConfigError("output", "expected a table")
    for key, value in output.items():
        if key == "dir":
            cfg.out = Path(str(value))
        elif key == "format":
            if value not in ("json", "csv"):
                raise ConfigError("output.format", f"expected json or csv, got {value!r}")
            cfg.format = value
        else:
            raise ConfigError(f"output.{key}", "unknown key")
    return cfg


def _seed(name: str, value) -> int:
    if isinstance(value, bool) or not isinstance(value, int) or not 0 <= value < 2**64:
        raise ConfigError(name, f"expected an integer in [0, 2^64), got {value!r}")
    return value


def load_config(args: argparse.Namespace) -> RunConfig:
    doc = {}
    if args.config is not None:
        try:
            doc = tomllib.loads(Path(args.config).read_text())
        except OSError as exc:
            raise ConfigError("--config", f"cannot read {args.config}: {exc.strerror}") from None
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError("--config", f"malformed TOML: {exc}") from None
    cfg = parse_config(doc)
    if args.seed is not None:
        cfg.seed = _seed("--seed", args.seed)
    if args.out is not None:
        cfg.out = Path(args.out)
    if args.format is not None:
        cfg.format = args.format
    if getattr(args, "hypothesis", None) is not None:
        cfg.hypothesis = SMHypothesis(args.hypothesis)
    if getattr(args, "trials", None) is not None:
        cfg.trials = args.trials
    return cfg


# output helpers ------------------------------------------------------------------

def _write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        fh.write(text)


def _write_json(path: Path, obj) -> None:
    _write(path, json.dumps(obj, indent=2, sort_keys=True) + "\n")


def trials_to_csv(records) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(TRIAL_COLUMNS)
    for r in records:
        w.writerow([*r.inputs.as_tuple(), r.a, r.b, r.s,
                    fmt(r.event_times["a"]), fmt(r.event_times["s"]), fmt(r.event_times["b"])])
    return buf.getvalue()


def trials_from_csv(text: str) -> list[TrialRecord]:
    out = []
    for row in csv.DictReader(io.StringIO(text)):
        inputs = TrialInputs(*(int(row[k]) for k in TRIAL_COLUMNS[:4]))
        times = {"a": float(row["t_a"]), "s": float(row["t_s"]), "b": float(row["t_b"])}
        out.append(TrialRecord(inputs, int(row["a"]), int(row["b"]), int(row["s"]), times))
    return out


def trials_to_json(records) -> str:
    rows = [{**dict(zip(TRIAL_COLUMNS[:4], r.inputs.as_tuple())), "a": r.a, "b": r.b, "s": r.s,
             "t_a": fmt(r.event_times["a"]), "t_s": fmt(r.event_times["s"]), "t_b": fmt(r.event_times["b"])}
            for r in records]
    return json.dumps({"columns": list(TRIAL_COLUMNS), "rows": rows}, indent=1) + "\n"


def _write_distribution(cfg: RunConfig, name: str, dist) -> Path:
    path = cfg.out / f"{name}.{cfg.format}"
    _write(path, dist.to_csv() if cfg.format == "csv" else dist.to_json())
    return path


def _checked_schedule(cfg: RunConfig):
    schedule = build_schedule(cfg.budget, cfg.alice_radius, cfg.bob_radius)
    if not schedule.spacelike:
        raise BudgetError("regions_spacelike", "R_A and R_B are not spacelike separated with the configured radii")
    return schedule


# commands ------------------------------------------------------------------------

def cmd_exact(cfg: RunConfig) -> int:
    dist = protocol.exact_distribution(cfg.hypothesis, _checked_schedule(cfg))
    report = stats.chsh(stats.chsh_slice(dist))
    audit = stats.no_signalling_audit(dist)
    path = _write_distribution(cfg, "distribution", dist)
    _write_json(cfg.out / "chsh.json", {"hypothesis": cfg.hypothesis.value, **report.to_dict()})
    _write_json(cfg.out / "audit.json", {"hypothesis": cfg.hypothesis.value, **audit.to_dict()})
    print(f"exact ({cfg.hypothesis.value}): I_CHSH = {report.I!r} [{report.verdict}], "
          f"no-signalling {'PASS' if audit.passed else 'FAIL'}; table -> {path}")
    return EXIT_OK


def cmd_sample(cfg: RunConfig) -> int:
    if cfg.seed is None:
        raise ConfigError("seed", "sampling needs a seed (config key or --seed)")
    if cfg.trials <= 0:
        raise ConfigError("trials", "sampling needs at least one trial")
    schedule = _checked_schedule(cfg)
    rng = np.random.default_rng(cfg.seed)
    records = protocol.run_trials(cfg.trials, cfg.hypothesis, rng, schedule)
    est = stats.estimate(records)
    audit = stats.no_signalling_audit(est.distribution,
                                      tolerance=stats.signalling_envelope(int(est.counts.min())))
    name = f"trials.{cfg.format}"
    _write(cfg.out / name, trials_to_csv(records) if cfg.format == "csv" else trials_to_json(records))
    _write_distribution(cfg, "empirical_distribution", est.distribution)
    _write_json(cfg.out / "estimate.json", {"hypothesis": cfg.hypothesis.value, "seed": cfg.seed,
                                            **est.to_dict(), "audit": audit.to_dict()})
    if est.chsh is None:
        print(f"sampled {cfg.trials} trials; CHSH cells empty, no estimate")
    else:
        print(f"sampled {cfg.trials} trials ({cfg.hypothesis.value}, seed {cfg.seed}): "
              f"I_CHSH = {est.chsh.I:.6f} +/- {est.chsh.ci_halfwidth:.6f} [{est.chsh.verdict}]")
    return EXIT_OK


def cmd_schedule(cfg: RunConfig) -> int:
    report = validate_budget(cfg.budget)
    doc = {"budget": {k: getattr(cfg.budget, k) for k in (f.name for f in fields(TimingBudget))},
           "validation": report.to_dict()}
    if report.passed:
        schedule = _checked_schedule(cfg)
        doc["schedule"] = schedule.to_dict()
        if cfg.format == "csv":
            buf = io.StringIO()
            w = csv.writer(buf, lineterminator="\n")
            w.writerow(("event", "time_s"))
            for row in schedule.to_rows():
                w.writerow((row["event"], fmt(row["time_s"])))
            _write(cfg.out / "schedule.csv", buf.getvalue())
    _write_json(cfg.out / "schedule.json", doc)
    for c in report.constraints:
        print(f"{'PASS' if c.passed else 'FAIL'} {c.name}: {c.detail}")
    if not report.passed:
        return EXIT_INFEASIBLE
    print(f"R_A and R_B spacelike separated: {doc['schedule']['R_A_R_B_spacelike']}")
    return EXIT_OK


def cmd_feasibility(cfg: RunConfig) -> int:
    params = cfg.feasibility or REFERENCE_FEASIBLE
    report = feasibility_check(params, cfg.margin)
    _write_json(cfg.out / "feasibility.json",
                {"params": vars(params), "source": "config" if cfg.feasibility else "reference",
                 **report.to_dict()})
    for c in report.checks:
        print(f"{'PASS' if c.passed else 'FAIL'} {c.name}: {c.detail}")
    print(f"K = {report.K!r} kg m; overall {'PASS' if report.passed else 'FAIL'}")
    return EXIT_OK


def cmd_lhv_bound(cfg: RunConfig) -> int:
    ext = lhv.max_deterministic_chsh()
    _write_json(cfg.out / "lhv_bound.json", ext.to_dict())
    print(f"deterministic strategies: max I = {ext.max_I!r}, min I = {ext.min_I!r}")
    return EXIT_OK


def cmd_lhv_fit(cfg: RunConfig) -> int:
    target = stats.chsh_slice(protocol.exact_distribution(cfg.hypothesis, _checked_schedule(cfg)))
    fit = lhv.best_lhv_fit(target)
    weights = [{"a_map": list(s.a_map), "s_map": list(s.s_map), "weight": float(w)}
               for s, w in zip(fit.model.strategies, fit.model.weights) if w > 0]
    _write_json(cfg.out / "lhv_fit.json", {"hypothesis": cfg.hypothesis.value,
                                           "target_I": stats.chsh(target).I,
                                           "distance": fit.distance, "weights": weights})
    print(f"closest LHV model: average total variation distance {fit.distance!r}")
    return EXIT_OK


COMMANDS = {
    "exact": cmd_exact,
    "sample": cmd_sample,
    "schedule": cmd_schedule,
    "feasibility": cmd_feasibility,
    "lhv-bound": cmd_lhv_bound,
    "lhv-fit": cmd_lhv_fit,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="spacetime-bell", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", metavar="PATH", help="TOML run configuration")
        p.add_argument("--seed", type=int, help="overrides the config seed")
        p.add_argument("--out", metavar="DIR", help="output directory (default: out)")
        p.add_argument("--format", choices=("json", "csv"), help="format for tables")
        p.add_argument("--hypothesis", choices=[h.value for h in SMHypothesis])
        if name == "sample":
            p.add_argument("--trials", type=int)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args)
        return COMMANDS[args.command](cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except BudgetError as exc:
        print(f"infeasible budget: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE


if __name__ == "__main__":
    sys.exit(main())
