"""Command-line orchestration: synth, evaluate and fixture subcommands.

``synth`` runs the full pipeline: ingest and discretize the table, compute
all 2-way marginals, privatize them with one Gaussian release, project each
noisy marginal to a probability measure, quantize to particles, run the
particle optimizer and write the snapped synthetic table plus a run report.

Note: discretization bin edges are computed from the data without DP noise
and are treated as public metadata.
"""

import argparse
import json
import logging
import math
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, asdict
from decimal import Decimal
from pathlib import Path
from typing import Optional

import numpy as np

from . import engine, evaluation, fixture, projection
from .constraints import ThresholdConstraint, smooth_threshold
from .data_model import (
    DiscreteDataset,
    DiscreteSchema,
    all_pairs_workload,
    embed,
    ingest_csv,
    load_discrete_csv,
    marginal,
    write_discrete_csv,
)
from .errors import ConfigError, SynthError
from .privacy import (
    BudgetLedger,
    PrivacyBudget,
    privatize_scalar,
    privatize_workload,
    workload_l2_sensitivity,
)
from .seeds import subseed

logger = logging.getLogger(__name__)

PARTICLE_CAP_FACTOR = 10  # auto-cap m at 10x the input rows


@dataclass
class ConstraintConfig:
    theta: list
    b: float
    slope: float = 5.0
    lambda_reg: float = 0.0
    budget_fraction: float = 0.2

    @classmethod
    def from_dict(cls, doc: dict) -> "ConstraintConfig":
        return cls(
            theta=list(doc["theta"]),
            b=float(doc["b"]),
            slope=float(doc.get("slope", 5.0)),
            lambda_reg=float(doc.get("lambda", 0.0)),
            budget_fraction=float(doc.get("budget_fraction", 0.2)),
        )


@dataclass
class RunConfig:
    input: Optional[str] = None
    schema: Optional[str] = None
    output: Optional[str] = None
    epsilon: float = 2.5  # math.inf for the noiseless debug mode
    delta: float = 1e-5
    particles: int = 100_000
    epochs: int = 1000
    batch_size: int = 5
    n_mc: int = 10
    lr: float = 0.1
    scheduler_step: int = 50
    scheduler_factor: float = 0.75
    keep_fraction: float = 0.2
    proj_iterations: int = 1750
    proj_n_mc: int = 200
    proj_lr: float = 0.1
    proj_scheduler_step: int = 100
    proj_scheduler_factor: float = 0.8
    seed: int = 0
    threads: int = 1
    fixed_projections: bool = False
    mask_per_epoch: bool = False
    reg_every_batch: bool = True
    checkpoint_interval: int = 0
    constraint: Optional[ConstraintConfig] = None

    def validate(self) -> None:
        if not (self.epsilon > 0):
            raise ConfigError("epsilon must be positive (or 'inf')")
        if not (0.0 < self.delta < 1.0):
            raise ConfigError("delta must lie in (0, 1)")
        if self.particles < 1:
            raise ConfigError("particles must be >= 1")


def _parse_epsilon(value) -> float:
    if isinstance(value, str) and value.lower() in ("inf", "infinity"):
        return math.inf
    eps = float(value)
    return eps


def load_run_config(path: Optional[str], overrides: dict) -> RunConfig:
    doc = {}
    if path is not None:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    doc.update({k: v for k, v in overrides.items() if v is not None})
    if "epsilon" in doc:
        doc["epsilon"] = _parse_epsilon(doc["epsilon"])
    if "constraint" in doc and doc["constraint"] is not None:
        if isinstance(doc["constraint"], str):
            text = doc["constraint"]
            if text.startswith("@"):
                text = Path(text[1:]).read_text(encoding="utf-8")
            doc["constraint"] = json.loads(text)
        doc["constraint"] = ConstraintConfig.from_dict(doc["constraint"])
    known = {f for f in RunConfig.__dataclass_fields__}
    unknown = set(doc) - known
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    config = RunConfig(**doc)
    config.validate()
    return config


def _decimal_budget(config: RunConfig):
    eps = Decimal("Infinity") if math.isinf(config.epsilon) else Decimal(repr(config.epsilon))
    delta = Decimal(repr(config.delta))
    return eps, delta


def _split_budget(eps: Decimal, delta: Decimal, fraction: float):
    """(target share, marginal share); shares add back to the total exactly."""
    frac = Decimal(repr(fraction))
    if eps.is_infinite():
        eps_target, eps_marg = eps, eps
    else:
        eps_target = eps * frac
        eps_marg = eps - eps_target
    delta_target = delta * frac
    delta_marg = delta - delta_target
    return (eps_target, delta_target), (eps_marg, delta_marg)


def cmd_synth(config: RunConfig) -> dict:
    """Run the full synthesis pipeline; returns the report dict."""
    config.validate()
    if config.input is None or config.schema is None or config.output is None:
        raise ConfigError("synth needs input, schema and output paths")
    t_start = time.monotonic()
    out_dir = Path(config.output)
    out_dir.mkdir(parents=True, exist_ok=True)

    with open(config.schema, encoding="utf-8") as fh:
        schema_spec = json.load(fh)
    dataset = ingest_csv(config.input, schema_spec)
    d, n = dataset.dim, dataset.n

    m = config.particles
    if m > PARTICLE_CAP_FACTOR * n:
        m = PARTICLE_CAP_FACTOR * n
        logger.warning(
            "capping particles at %d (10x the %d input rows)", m, n
        )

    eps_total, delta_total = _decimal_budget(config)
    ledger = BudgetLedger(eps_total, delta_total)
    if math.isinf(config.epsilon):
        logger.warning("epsilon=inf: noiseless debug mode, no privacy guarantee")

    constraint = None
    if config.constraint is not None:
        c = config.constraint
        theta = np.asarray(c.theta, dtype=float)
        if theta.size != d:
            raise ConfigError(
                f"constraint direction has {theta.size} entries for {d} columns"
            )
        constraint = ThresholdConstraint(theta=theta, b=c.b, slope=c.slope)
        (eps_c, delta_c), (eps_m, delta_m) = _split_budget(
            eps_total, delta_total, c.budget_fraction
        )
    else:
        eps_m, delta_m = eps_total, delta_total

    workload = all_pairs_workload(d)
    threads = max(1, config.threads)
    with ThreadPoolExecutor(max_workers=threads) as pool:
        marginals = list(pool.map(lambda s: marginal(dataset, s), workload))

    budget = PrivacyBudget.calibrate(
        float(eps_m), float(delta_m), workload_l2_sensitivity(n, len(workload))
    )
    noisy = privatize_workload(
        marginals, budget, subseed(config.seed, "noise"), ledger,
        label="marginal-workload",
    )

    if constraint is not None:
        target_budget = PrivacyBudget.calibrate(
            float(eps_c), float(delta_c), 1.0 / n
        )
        stat = smooth_threshold(embed(dataset.rows, dataset.schema), constraint)
        constraint.dp_target = privatize_scalar(
            stat, target_budget, subseed(config.seed, "constraint-noise"),
            ledger, label="constraint-target",
        )

    proj_config = projection.ProjectionConfig(
        iterations=config.proj_iterations,
        n_mc=config.proj_n_mc,
        lr=config.proj_lr,
        scheduler_step=config.proj_scheduler_step,
        scheduler_factor=config.proj_scheduler_factor,
    )

    def _project(item):
        index, signed = item
        atoms, info = projection.project_to_probability(
            signed, dataset.schema, proj_config,
            subseed(config.seed, f"project:{index}"),
        )
        return projection.quantize(atoms, m), info

    with ThreadPoolExecutor(max_workers=threads) as pool:
        projected = list(pool.map(_project, enumerate(noisy)))
    measures = [q for q, _ in projected]
    proj_infos = [info for _, info in projected]

    engine_config = engine.EngineConfig(
        epochs=config.epochs,
        batch_size=config.batch_size,
        initial_lr=config.lr,
        scheduler_step=config.scheduler_step,
        scheduler_factor=config.scheduler_factor,
        n_mc=config.n_mc,
        keep_fraction=config.keep_fraction,
        lambda_reg=config.constraint.lambda_reg if config.constraint else 0.0,
        seed=subseed(config.seed, "engine"),
        fixed_projections=config.fixed_projections,
        mask_per_epoch=config.mask_per_epoch,
        reg_every_batch=config.reg_every_batch,
        checkpoint_interval=config.checkpoint_interval,
        checkpoint_dir=str(out_dir) if config.checkpoint_interval else None,
    )
    particles, trace = engine.run(measures, constraint, engine_config, dims=d)
    synthetic = engine.finalize(particles, dataset.schema)

    csv_path = out_dir / "synthetic.csv"
    write_discrete_csv(synthetic, csv_path)
    schema_path = out_dir / "schema.json"
    schema_path.write_text(dataset.schema.to_json(), encoding="utf-8")
    trace_path = out_dir / "loss_trace.csv"
    with open(trace_path, "w", encoding="utf-8") as fh:
        fh.write("epoch,objective_estimate,lr\n")
        for epoch, objective, lr in trace:
            fh.write(f"{epoch},{objective:.12g},{lr:.12g}\n")

    epsilon_spent, delta_spent = ledger.compose()
    report = {
        "budget": {
            "epsilon": budget.epsilon,
            "delta": budget.delta,
            "sigma": budget.sigma,
            "sensitivity": budget.sensitivity,
            **ledger.to_dict(),
        },
        "composition": {"epsilon_total": epsilon_spent, "delta_total": delta_spent},
        "config": {
            **{
                k: (v if not isinstance(v, ConstraintConfig) else asdict(v))
                for k, v in asdict(config).items()
            },
            "epsilon": "inf" if math.isinf(config.epsilon) else config.epsilon,
            "particles_effective": m,
        },
        "projection": {
            "marginals": len(proj_infos),
            "init_loss_mean": float(np.mean([i["init_loss"] for i in proj_infos])),
            "final_loss_mean": float(np.mean([i["final_loss"] for i in proj_infos])),
        },
        "loss_trace": {
            "initial": trace[0][1],
            "final": trace[-1][1],
            "epochs": config.epochs,
        },
        "outputs": {
            "synthetic_csv": str(csv_path),
            "schema_json": str(schema_path),
            "loss_trace_csv": str(trace_path),
        },
        "timing": {"wall_clock_seconds": time.monotonic() - t_start},
    }
    report_path = out_dir / "report.json"
    report_path.write_text(
        json.dumps(report, indent=2, sort_keys=True), encoding="utf-8"
    )
    return report


def _load_schema_or_spec(schema_path: str):
    """Auto-detect the schema file flavor: a discretized-schema echo (with
    cardinalities) or an ingest declaration (with per-column kinds)."""
    with open(schema_path, encoding="utf-8") as fh:
        doc = json.load(fh)
    cols = doc.get("columns")
    if not cols:
        raise ConfigError(f"{schema_path}: no columns")
    if "cardinality" in cols[0]:
        return DiscreteSchema.from_json(json.dumps(doc)), None
    return None, doc


def cmd_evaluate(
    original: str, synthetic: str, schema: str, out: Optional[str],
    seed: int = 0, query_count: int = 200, n_mc: int = 200,
) -> dict:
    """Compute the metric suite between two tables; returns the report dict."""
    echo, spec = _load_schema_or_spec(schema)
    if echo is not None:
        d_orig = load_discrete_csv(original, echo)
    else:
        d_orig = ingest_csv(original, spec)
        echo = d_orig.schema
    d_syn = load_discrete_csv(synthetic, echo)
    report = evaluation.compute_report(
        d_orig, d_syn, query_count=query_count, n_mc=n_mc, seed=seed
    ).to_dict()
    if out is not None:
        Path(out).write_text(
            json.dumps(report, indent=2, sort_keys=True), encoding="utf-8"
        )
    return report


def cmd_fixture(
    out: str, dims: int, cardinality: int, rows: int, correlation: float,
    seed: int = 0,
) -> dict:
    """Write a copula fixture: data.csv, schema.json, schema_spec.json."""
    out_dir = Path(out)
    out_dir.mkdir(parents=True, exist_ok=True)
    dataset = fixture.generate(dims, cardinality, rows, correlation, seed)
    data_path = out_dir / "data.csv"
    write_discrete_csv(dataset, data_path)
    (out_dir / "schema.json").write_text(dataset.schema.to_json(), encoding="utf-8")
    (out_dir / "schema_spec.json").write_text(
        json.dumps(fixture.ingest_spec(dataset), indent=2), encoding="utf-8"
    )
    return {"data_csv": str(data_path), "rows": rows, "dims": dims}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="swsynth",
        description="Differentially private tabular synthesis by "
        "sliced-Wasserstein particle descent.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_synth = sub.add_parser(
        "synth",
        help="synthesize a private copy of a table",
        epilog="Privacy caveat: discretization bin edges are derived from "
        "the data without DP noise and are treated as public metadata.",
    )
    p_synth.add_argument("--config", help="JSON run config; flags override it")
    p_synth.add_argument("--input", help="input CSV path")
    p_synth.add_argument("--schema", help="ingest schema spec JSON path")
    p_synth.add_argument("--output", help="output directory")
    p_synth.add_argument("--epsilon", help="privacy epsilon, or 'inf'")
    p_synth.add_argument("--delta", type=float)
    p_synth.add_argument("--particles", type=int)
    p_synth.add_argument("--epochs", type=int)
    p_synth.add_argument("--seed", type=int)
    p_synth.add_argument("--threads", type=int)
    p_synth.add_argument(
        "--constraint", help="constraint JSON (inline or @file)"
    )
    p_synth.add_argument(
        "--fixed-projections", action="store_true", default=None,
        dest="fixed_projections",
        help="reuse one projection set per marginal across all steps",
    )
    p_synth.add_argument(
        "--mask-per-epoch", action="store_true", default=None,
        dest="mask_per_epoch",
        help="resample the gradient sparsity mask per epoch instead of per step",
    )

    p_eval = sub.add_parser("evaluate", help="compare two tables")
    p_eval.add_argument("--original", required=True)
    p_eval.add_argument("--synthetic", required=True)
    p_eval.add_argument(
        "--schema", required=True,
        help="schema echo JSON (discrete tables) or ingest spec JSON (raw original)",
    )
    p_eval.add_argument("--out", help="metrics report JSON path")
    p_eval.add_argument("--seed", type=int, default=0)
    p_eval.add_argument("--queries", type=int, default=200)
    p_eval.add_argument("--n-mc", type=int, default=200, dest="n_mc")

    p_fix = sub.add_parser("fixture", help="generate a correlated test table")
    p_fix.add_argument("--out", required=True, help="output directory")
    p_fix.add_argument("--dims", type=int, default=3)
    p_fix.add_argument("--cardinality", type=int, default=8)
    p_fix.add_argument("--rows", type=int, default=10_000)
    p_fix.add_argument("--correlation", type=float, default=0.6)
    p_fix.add_argument("--seed", type=int, default=0)
    return parser


def main(argv=None) -> int:
    logging.basicConfig(
        level=logging.INFO, format="%(levelname)s %(name)s: %(message)s"
    )
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "synth":
            overrides = {
                "input": args.input,
                "schema": args.schema,
                "output": args.output,
                "epsilon": args.epsilon,
                "delta": args.delta,
                "particles": args.particles,
                "epochs": args.epochs,
                "seed": args.seed,
                "threads": args.threads,
                "constraint": args.constraint,
                "fixed_projections": args.fixed_projections,
                "mask_per_epoch": args.mask_per_epoch,
            }
            cmd_synth(load_run_config(args.config, overrides))
        elif args.command == "evaluate":
            report = cmd_evaluate(
                args.original, args.synthetic, args.schema, args.out,
                seed=args.seed, query_count=args.queries, n_mc=args.n_mc,
            )
            if args.out is None:
                print(json.dumps(report, indent=2, sort_keys=True))
        elif args.command == "fixture":
            cmd_fixture(
                args.out, args.dims, args.cardinality, args.rows,
                args.correlation, args.seed,
            )
    except (SynthError, OSError) as exc:
        print(
            json.dumps({"error": {"type": type(exc).__name__, "message": str(exc)}}),
            file=sys.stderr,
        )
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
