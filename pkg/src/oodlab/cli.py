"""Config-driven experiment runner.

Subcommands:

  run    execute the experiment a JSON config describes (any kind)
  sweep  parameter sweep of a learner-verification config
  game   adversarial lower-bound game
  floor  1-d Bayes-risk floor for overlapping densities
  list   enumerate built-in domains, families, and learners

Flags: --config PATH, --jobs K, --out DIR, --seed-override U64.

Artifacts: a trial table results.csv with the fixed columns
trial,seed,n_used,risk_id,risk_ood,risk_mixed,ci,wall_time_s (wall time
is the only non-reproducible column; per-trial seeds derive as
base_seed + trial so --jobs cannot change any value), a summary.json,
and matplotlib figures next to the delimited output.  Exit codes:
0 success, 1 config or runtime error, 2 contract violation (success
fraction below the 1 - delta - 3 sigma threshold).
"""

from __future__ import annotations

import argparse
import json
import math
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np
from jsonschema import Draft202012Validator

from . import adversarial
from . import distributions as dist
from . import learners, report
from . import risk as risk_mod
from .core import AllSet, Domain, EmptySet, FiniteSet

DEFAULT_RISK_SAMPLES = 20_000

CONFIG_SCHEMA = {
    "type": "object",
    "required": ["kind", "seed"],
    "properties": {
        "kind": {"enum": ["verify_learner", "sweep", "adversarial_game", "bayes_floor"]},
        "seed": {"type": "integer", "minimum": 0},
        "trials": {"type": "integer", "minimum": 1},
        "epsilon": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 0.5},
        "delta": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 0.5},
        "alpha": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
        "risk_samples": {"type": "integer", "minimum": 1},
        "learner": {
            "type": "object",
            "required": ["name"],
            "properties": {"name": {"type": "string"}, "params": {"type": "object"}},
        },
        "domain": {"type": "object"},
        "family": {
            "type": "object",
            "required": ["kind"],
            "properties": {"kind": {"type": "string"}, "params": {"type": "object"}},
        },
        "floor": {"type": "object"},
        "sweep": {
            "type": "object",
            "required": ["parameter", "values"],
            "properties": {
                "parameter": {"type": "string"},
                "values": {"type": "array", "minItems": 1},
            },
        },
        "figures": {"type": "boolean"},
    },
}


class ConfigError(ValueError):
    pass


# ---------------------------------------------------------------------------
# Built-in registries
# ---------------------------------------------------------------------------

def builtin_domains() -> dict:
    """Named example domains usable as {"builtin": name} in configs."""
    return {
        "disk_vs_ring": lambda: Domain(
            id_dist=dist.UniformBall(np.zeros(2), 0.45),
            ood_dist=dist.UniformAnnulus(np.zeros(2), 1.45, 1.95),
            dimension=2,
        ),
        "unit_disk_vs_far_ring": lambda: Domain(
            id_dist=dist.UniformBall(np.zeros(2), 1.0),
            ood_dist=dist.UniformAnnulus(np.zeros(2), 2.0, 2.5),
            dimension=2,
        ),
        "square_vs_outside": lambda: Domain(
            id_dist=dist.UniformBox(np.zeros(2), np.ones(2)),
            ood_dist=dist.UniformAnnulus(np.array([0.5, 0.5]), 2.0, 2.5),
            dimension=2,
        ),
        "interval_vs_holder_triangle": lambda: Domain(
            id_dist=dist.UniformBox(np.array([0.0]), np.array([0.9])),
            ood_dist=dist.HolderPiecewise1D(((1.0, 3.0),), np.array([1.0]), grad_cap=1.0),
            dimension=1,
        ),
        "holder_triangle_vs_edge_point": lambda: Domain(
            id_dist=dist.HolderPiecewise1D(((0.0, 3.0),), np.array([1.0]), grad_cap=1.0),
            ood_dist=dist.PointMass(np.array([0.0])),
            dimension=1,
        ),
        "trunc_gauss_vs_far_ring": lambda: Domain(
            id_dist=dist.TruncatedGaussian(np.zeros(2), sigma=1.0, radius=4.0),
            ood_dist=dist.UniformAnnulus(np.zeros(2), 5.2, 5.7),
            dimension=2,
        ),
    }


def learner_names() -> list[str]:
    return ["far_ood", "grid_occupancy", "density_grid", "nonuniform_far_ood",
            "convex_hull", "always_all", "always_empty", "memorize"]


def family_kinds() -> list[str]:
    return ["nfl", "generalized_nfl", "dsa_gap", "heavy_boundary_wedge",
            "naturals_vc1", "holder_intervals", "convex_ngon"]


def parse_domain(obj: dict) -> Domain:
    if "builtin" in obj:
        reg = builtin_domains()
        name = obj["builtin"]
        if name not in reg:
            raise ConfigError(f"unknown built-in domain {name!r}; known: {sorted(reg)}")
        return reg[name]()
    for key in ("id", "ood", "dimension"):
        if key not in obj:
            raise ConfigError(f"domain config needs {key!r} (or use a builtin)")
    return Domain(id_dist=dist.from_json(obj["id"]), ood_dist=dist.from_json(obj["ood"]),
                  dimension=int(obj["dimension"]))


def build_family(obj: dict) -> adversarial.AdversarialFamily:
    params = dict(obj.get("params", {}))
    if obj["kind"] == "nfl" and "T_points" in params:
        params["T_points"] = np.asarray(params["T_points"], dtype=float)
    return adversarial.build_family(obj["kind"], **params)


def fit_named_learner(name: str, params: dict, domain: Domain, epsilon: float,
                      delta: float, rng: np.random.Generator):
    """Run one named learner on one domain.  Returns (hypothesis, n_used)."""
    n = domain.dimension

    def draw_many(m: int) -> np.ndarray:
        return dist.sample_many(domain.id_dist, rng, m)

    if name == "far_ood":
        plan = learners.far_ood_plan(epsilon, delta, params["R"], params["tau"], n)
        return learners.far_ood_fit(draw_many(plan.N), plan.tau), plan.N

    if name == "grid_occupancy":
        g = learners.holder_to_g(params.get("gamma", 1.0), params["C"])
        plan = learners.grid_occupancy_plan(epsilon, delta, params["R"], n, g)
        samples = draw_many(plan.N)
        grid = learners.grid_cover(samples[0], plan.R, plan.tau, n)
        return learners.grid_occupancy_fit(samples, grid), plan.N

    if name == "density_grid":
        g = learners.holder_to_g(params.get("gamma", 1.0), params["C"])
        plan = learners.density_grid_plan(epsilon, delta, params["R"], n, g)
        return learners.density_grid_fit(draw_many(plan.N), plan), plan.N

    if name == "nonuniform_far_ood":
        used = 0

        def source():
            nonlocal used
            used += 1
            return dist.sample(domain.id_dist, rng)

        h = learners.nonuniform_fit("far_ood", epsilon, delta,
                                    {"tau": params["tau"]}, source)
        return h, used

    if name == "convex_hull":
        if "M" in params:
            M = int(params["M"])
        else:
            sched = learners.convex_schedule(params["lam"], delta, n)
            M = sched.M
        return learners.convex_hull_fit(draw_many(M)), M

    if name == "always_all":
        return AllSet(), 0
    if name == "always_empty":
        return EmptySet(), 0
    if name == "memorize":
        m = int(params.get("n_samples", 10))
        return FiniteSet(list(draw_many(m))), m

    raise ConfigError(f"unknown learner {name!r}; known: {learner_names()}")


# ---------------------------------------------------------------------------
# Experiment kinds
# ---------------------------------------------------------------------------

def _success_threshold(delta: float, trials: int) -> float:
    return 1 - delta - 3 * math.sqrt(delta * (1 - delta) / trials)


def _verify_one_trial(args) -> report.TrialRow:
    cfg, index = args
    seed = int(cfg["seed"]) + index
    rng = np.random.default_rng(seed)
    domain = parse_domain(cfg["domain"])
    eps, delta, alpha = cfg["epsilon"], cfg["delta"], cfg["alpha"]
    m = int(cfg.get("risk_samples", DEFAULT_RISK_SAMPLES))
    t0 = time.perf_counter()
    h, n_used = fit_named_learner(cfg["learner"]["name"],
                                  cfg["learner"].get("params", {}),
                                  domain, eps, delta, rng)
    rid = risk_mod.risk(h, domain, "id", mode="exact_if_possible", m=m, rng=rng)
    rood = risk_mod.risk(h, domain, "ood", mode="exact_if_possible", m=m, rng=rng)
    mixed = (1 - alpha) * rid.value + alpha * rood.value
    ci = (1 - alpha) * rid.ci_half_width + alpha * rood.ci_half_width
    return report.TrialRow(trial=index, seed=seed, n_used=n_used,
                           risk_id=rid.value, risk_ood=rood.value,
                           risk_mixed=mixed, ci=ci,
                           wall_time_s=time.perf_counter() - t0)


def run_verify(cfg: dict, out_dir: Path, jobs: int) -> int:
    for key in ("trials", "epsilon", "delta", "alpha", "learner", "domain"):
        if key not in cfg:
            raise ConfigError(f"verify_learner config needs {key!r}")
    trials = int(cfg["trials"])
    work = [(cfg, i) for i in range(trials)]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(_verify_one_trial, work, chunksize=8))
    else:
        rows = [_verify_one_trial(w) for w in work]
    rows.sort(key=lambda r: r.trial)

    eps, delta = cfg["epsilon"], cfg["delta"]
    successes = sum(1 for r in rows if r.risk_mixed <= eps)
    fraction = successes / trials
    threshold = _success_threshold(delta, trials)
    summary = {
        "kind": "verify_learner",
        "learner": cfg["learner"]["name"],
        "trials": trials,
        "epsilon": eps,
        "delta": delta,
        "alpha": cfg["alpha"],
        "success_fraction": fraction,
        "target_fraction": 1 - delta,
        "threshold": threshold,
        "mean_risk_mixed": math.fsum(r.risk_mixed for r in rows) / trials,
        "max_risk_ood": max(r.risk_ood for r in rows),
        "contract_met": fraction >= threshold,
    }
    report.write_trials_csv(out_dir / "results.csv", rows)
    report.write_summary_json(out_dir / "summary.json", summary)
    if cfg.get("figures", True):
        report.render_trials_figure(
            out_dir / "risk_per_trial.png", rows, eps,
            f"{cfg['learner']['name']}: mixed risk per trial",
        )
    print(f"success_fraction={fraction:.4f} threshold={threshold:.4f} "
          f"-> {'ok' if summary['contract_met'] else 'CONTRACT VIOLATION'}")
    return 0 if summary["contract_met"] else 2


def run_game(cfg: dict, out_dir: Path, jobs: int) -> int:
    for key in ("trials", "alpha", "learner", "family"):
        if key not in cfg:
            raise ConfigError(f"adversarial_game config needs {key!r}")
    family = build_family(cfg["family"])
    name = cfg["learner"]["name"]
    params = cfg["learner"].get("params", {})
    game_learner = _game_learner(name, params)
    rng = np.random.default_rng(int(cfg["seed"]))
    t0 = time.perf_counter()
    rep = adversarial.run_game(family, game_learner, int(cfg["trials"]),
                               cfg["alpha"], rng,
                               budget=cfg.get("budget"),
                               risk_m=int(cfg.get("risk_samples", DEFAULT_RISK_SAMPLES)))
    wall = time.perf_counter() - t0
    rows = [report.TrialRow(trial=i, seed=int(cfg["seed"]), n_used=family.budget or 0,
                            risk_id=float("nan"), risk_ood=float("nan"),
                            risk_mixed=v, ci=0.0, wall_time_s=wall / rep.trials)
            for i, v in enumerate(rep.risks)]
    summary = {
        "kind": "adversarial_game",
        "family": cfg["family"]["kind"],
        "learner": name,
        "trials": rep.trials,
        "alpha": cfg["alpha"],
        "mean_risk": rep.mean_risk,
        "ci_half_width": rep.ci_half_width,
        "exact_bound": rep.exact_bound,
        "bound_respected": (rep.exact_bound is None
                            or rep.mean_risk >= rep.exact_bound - rep.ci_half_width),
    }
    report.write_trials_csv(out_dir / "results.csv", rows)
    report.write_summary_json(out_dir / "summary.json", summary)
    if cfg.get("figures", True):
        report.render_game_figure(out_dir / "game_risks.png", rep.risks,
                                  rep.exact_bound,
                                  f"{cfg['family']['kind']} vs {name}")
    bound_txt = "n/a" if rep.exact_bound is None else f"{rep.exact_bound:.4f}"
    print(f"mean_risk={rep.mean_risk:.4f} ci={rep.ci_half_width:.4f} bound={bound_txt}")
    return 0


def _game_learner(name: str, params: dict):
    if name == "always_all":
        return adversarial.learner_always_all
    if name == "always_empty":
        return adversarial.learner_always_empty
    if name == "memorize":
        return adversarial.make_memorizer(int(params["n_samples"]))
    if name == "ball_union":
        return adversarial.make_ball_learner(params["tau"], int(params["n_samples"]))
    if name == "complement_memorize":
        return adversarial.make_complement_memorizer(int(params["n_samples"]))
    raise ConfigError(
        f"unknown game learner {name!r}; known: always_all, always_empty, "
        f"memorize, ball_union, complement_memorize"
    )


def run_floor(cfg: dict, out_dir: Path) -> int:
    fl = cfg.get("floor")
    if not fl:
        raise ConfigError("bayes_floor config needs a 'floor' section")
    f_in = dist.from_json(fl["f_in"])
    f_out = dist.from_json(fl["f_out"])
    alpha = fl.get("alpha", cfg.get("alpha", 0.5))
    step = fl.get("integration_step", 1e-4)
    value = risk_mod.bayes_floor_1d(f_in, f_out, alpha, step)
    summary = {"kind": "bayes_floor", "alpha": alpha, "integration_step": step,
               "value": value}
    report.write_summary_json(out_dir / "summary.json", summary)
    print(f"bayes_floor={value:.8f}")
    return 0


def run_sweep(cfg: dict, out_dir: Path, jobs: int) -> int:
    sw = cfg.get("sweep")
    if not sw:
        raise ConfigError("sweep config needs a 'sweep' section")
    parameter, values = sw["parameter"], sw["values"]
    ns, means, fractions = [], [], []
    sub_summaries = []
    for i, value in enumerate(values):
        sub = json.loads(json.dumps(cfg))  # deep copy
        sub["kind"] = "verify_learner"
        sub.pop("sweep", None)
        if parameter in ("epsilon", "delta", "alpha", "trials", "risk_samples"):
            sub[parameter] = value
        else:
            sub.setdefault("learner", {}).setdefault("params", {})[parameter] = value
        sub_dir = out_dir / f"point_{i:02d}"
        code = run_verify(sub, sub_dir, jobs)
        with open(sub_dir / "summary.json") as fh:
            s = json.load(fh)
        with open(sub_dir / "results.csv") as fh:
            first_row = fh.read().splitlines()[1].split(",")
        n_used = int(first_row[2])
        ns.append(n_used)
        means.append(s["mean_risk_mixed"])
        fractions.append(s["success_fraction"])
        sub_summaries.append({"value": value, "n_used": n_used, **{
            k: s[k] for k in ("success_fraction", "mean_risk_mixed", "contract_met")
        }})
    with open(out_dir / "sweep.csv", "w") as fh:
        fh.write(f"{parameter},n_used,mean_risk_mixed,success_fraction\n")
        for v, n, m, f in zip(values, ns, means, fractions):
            fh.write(f"{v},{n},{m:.12g},{f:.12g}\n")
    report.write_summary_json(out_dir / "summary.json", {
        "kind": "sweep", "parameter": parameter, "points": sub_summaries,
    })
    if cfg.get("figures", True):
        report.render_sweep_figure(out_dir / "sweep", ns, means,
                                   [f"{parameter}={v}" for v in values],
                                   f"risk vs N over {parameter}")
    print(f"sweep over {parameter}: {len(values)} points written to {out_dir}")
    return 0


# ---------------------------------------------------------------------------
# Entry point
# ---------------------------------------------------------------------------

def load_config(path: str, seed_override: int | None) -> dict:
    try:
        with open(path) as fh:
            cfg = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    errors = sorted(Draft202012Validator(CONFIG_SCHEMA).iter_errors(cfg),
                    key=lambda e: e.json_path)
    if errors:
        msgs = "; ".join(f"{e.json_path}: {e.message}" for e in errors)
        raise ConfigError(f"config schema violations: {msgs}")
    if seed_override is not None:
        cfg["seed"] = int(seed_override)
    return cfg


def _add_common(p: argparse.ArgumentParser):
    p.add_argument("--config", required=True, help="path to the JSON experiment config")
    p.add_argument("--jobs", type=int, default=1,
                   help="parallel trial workers (per-trial seeds keep results identical)")
    p.add_argument("--out", default="out", help="output directory for artifacts")
    p.add_argument("--seed-override", type=int, default=None,
                   help="replace the config seed (64-bit unsigned)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="oodlab",
        description=__doc__,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_txt in [
        ("run", "run the experiment the config describes (any kind)"),
        ("sweep", "parameter sweep (config kind: sweep)"),
        ("game", "adversarial game (config kind: adversarial_game)"),
        ("floor", "1-d Bayes floor (config kind: bayes_floor)"),
    ]:
        _add_common(sub.add_parser(name, help=help_txt))
    sub.add_parser("list", help="enumerate built-in domains, families, learners")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "list":
        print("built-in domains:")
        for name in sorted(builtin_domains()):
            print(f"  {name}")
        print("adversarial families:")
        for name in family_kinds():
            print(f"  {name}")
        print("learners:")
        for name in learner_names():
            print(f"  {name}")
        print("game learners: always_all, always_empty, memorize, ball_union, "
              "complement_memorize")
        return 0

    try:
        cfg = load_config(args.config, args.seed_override)
        out_dir = Path(args.out)
        kind = cfg["kind"]
        expected = {"sweep": "sweep", "game": "adversarial_game", "floor": "bayes_floor"}
        if args.command in expected and kind != expected[args.command]:
            raise ConfigError(
                f"subcommand {args.command!r} needs config kind "
                f"{expected[args.command]!r}, got {kind!r}"
            )
        if kind == "verify_learner":
            return run_verify(cfg, out_dir, args.jobs)
        if kind == "sweep":
            return run_sweep(cfg, out_dir, args.jobs)
        if kind == "adversarial_game":
            return run_game(cfg, out_dir, args.jobs)
        if kind == "bayes_floor":
            return run_floor(cfg, out_dir)
        raise ConfigError(f"unhandled config kind {kind!r}")
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # noqa: BLE001 - named on stderr, mapped to exit 1
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
