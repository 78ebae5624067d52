"""
Command Handlers

One function per CLI command. Each takes the parsed argparse namespace and
returns an exit code; library exceptions propagate to the entry point,
which maps them to exit codes.
Commands: divergence, table2, fit, audit-bound, sandwich-scan
"""

import argparse
from typing import List, Optional

from kfbd.core.divergence import OperatorG, deformed_divergence, operator_g_divergence
from kfbd.core.embedding import embed
from kfbd.core.kernels import get_kernel
from kfbd.generators.base import get_generator
from kfbd.generators.table import reproduce_table, table_profiles
from kfbd.io.output import write_csv, write_json
from kfbd.io.samples import load_samples
from kfbd.services.estimation_service import EstimationService, LocationModel
from kfbd.services.verification_service import VerificationService
from kfbd.utils.config import (
    AuditConfig,
    ExperimentConfig,
    load_experiment_config,
    merge_experiment_config,
    parse_generator_spec,
    parse_kernel_spec,
    parse_model_spec,
)
from kfbd.utils.exceptions import ConfigurationError, InputError
from kfbd.utils.logger import get_logger

logger = get_logger(__name__)

AUDIT_COLUMNS = ["n", "lhs", "rhs", "rho_hat", "pass", "lhs_se", "rho_bound", "inf_term",
                 "inf_term_mmd_variant", "rhs_mmd_variant", "grid_inf"]


def resolve_config(args: argparse.Namespace) -> ExperimentConfig:
    """
    ExperimentConfig from --config (or defaults), overlaid with explicit CLI flags

    Args:
        args: Parsed namespace; flags left at None do not override the file

    Returns:
        Validated ExperimentConfig
    """
    config = load_experiment_config(args.config) if getattr(args, "config", None) else ExperimentConfig()
    updates = {}
    if getattr(args, "kernel", None):
        updates["kernel"] = parse_kernel_spec(args.kernel)
    if getattr(args, "generator", None):
        updates["generator"] = parse_generator_spec(args.generator, getattr(args, "lam", None), getattr(args, "p", None))
    if getattr(args, "seed", None) is not None:
        updates["seed"] = args.seed
    if getattr(args, "trials", None) is not None:
        updates["trials"] = args.trials
    if getattr(args, "out", None):
        updates["output"] = args.out
    if getattr(args, "format", None):
        updates["format"] = args.format
    return merge_experiment_config(config, updates)


def emit(payload, rows: Optional[List[dict]], config: ExperimentConfig, columns: Optional[List[str]] = None) -> None:
    """Write the JSON payload or the CSV rows to config.output (stdout when unset)"""
    if config.format == "csv":
        write_csv(rows if rows is not None else [payload], config.output, columns)
    else:
        write_json(payload, config.output)


def cmd_divergence(args: argparse.Namespace) -> int:
    """
    Divergence between two sample files

    Without --operator: the deformed divergence with its MMD sandwich.
    With --operator identity|entropy|profile: the operator-G plug-in estimate.
    """
    config = resolve_config(args)
    inputs = [args.p_file, args.q_file] if args.p_file and args.q_file else config.inputs
    if len(inputs) != 2:
        raise InputError("divergence needs two sample files (--p and --q, or two config inputs)")

    k = get_kernel(config.kernel)
    g = get_generator(config.generator)
    P, Q = load_samples(inputs[0]), load_samples(inputs[1])

    if args.operator:
        operators = {
            "identity": OperatorG.identity,
            "entropy": OperatorG.kernel_entropy,
            "profile": lambda: OperatorG.from_profile(g),
        }
        G = operators[args.operator]()
        value = operator_g_divergence(G, k, P, Q)
        payload = {"operator": G.name, "kernel": k.family, "value": value}
    else:
        payload = deformed_divergence(g, embed(k, P), embed(k, Q), R=args.R).to_dict()
        payload["kernel"] = k.family

    logger.info(f"Divergence {inputs[0]} || {inputs[1]} = {payload['value']!r}")
    emit(payload, None, config)
    return 0


def cmd_table2(args: argparse.Namespace) -> int:
    """Per-profile eigenvalue maps and sandwich constants at radius R (CSV by default)"""
    rows = [row.to_dict() for row in reproduce_table(args.R, args.lam, args.p)]
    config = resolve_config(args)
    if args.format is None:
        config = merge_experiment_config(config, {"format": "csv"})
    emit({"R": args.R, "rows": rows}, rows, config)
    disagreeing = [row["profile"] for row in rows if not row["agree"]]
    if disagreeing:
        logger.error(f"Closed-form and numerical constants disagree for {disagreeing}")
        return 1
    return 0


def cmd_fit(args: argparse.Namespace) -> int:
    """Minimum-divergence location fit on a data file"""
    config = resolve_config(args)
    data_path = args.data or (config.inputs[0] if config.inputs else None)
    if data_path is None:
        raise InputError("fit needs a data file (--data)")
    data = load_samples(data_path)

    model = LocationModel(parse_model_spec(args.model, dim=data.dim))
    service = EstimationService(
        get_kernel(config.kernel),
        get_generator(config.generator),
        model,
        seed=config.seed,
        model_sample_size=args.model_sample_size,
    )
    fit = service.fit(data, theta0=args.theta0)
    payload = fit.to_dict()
    payload.update({"model": model.family, "profile": service.generator.label, "seed": config.seed})
    logger.info(f"Fitted theta_hat={fit.theta_hat}")
    emit(payload, None, config)
    return 0


def cmd_audit_bound(args: argparse.Namespace) -> int:
    """
    Monte Carlo audits of the estimation bounds (CSV by default)

    --study bound (default) | triangle | envelope | sweep | robustness
    """
    config = resolve_config(args)
    if config.audit is None:
        raise ConfigurationError("audit-bound needs an 'audit' section in the config")
    audit: AuditConfig = config.audit
    service = EstimationService(
        get_kernel(config.kernel),
        get_generator(config.generator),
        LocationModel(audit.model),
        seed=config.seed,
        model_sample_size=audit.model_sample_size,
        reference_size=audit.reference_sample_size,
    )
    if args.format is None:
        config = merge_experiment_config(config, {"format": "csv"})

    study = args.study
    if study == "bound":
        rows = [row.to_dict() for row in service.bound_audit(audit)]
        emit({"profile": service.generator.label, "rows": rows}, rows, config, AUDIT_COLUMNS)
        return 0 if all(row["pass"] for row in rows) else 1

    if study == "triangle":
        summary = service.triangle_corpus(instances=config.trials, n=min(audit.n_grid), contamination=audit.contamination)
        records = [record.to_dict() for record in summary.records]
        emit({**summary.to_dict(), "records": records}, records, config)
        return 0 if summary.violations == 0 else 1

    if study == "envelope":
        rows = [row.to_dict() for row in service.sqrt_n_envelope(audit.n_grid, audit.replicates, audit.dependence)]
        emit({"rows": rows}, rows, config)
        return 0 if all(row["ok"] for row in rows) else 1

    if study == "sweep":
        sweep = service.contamination_sweep(
            args.epsilons, audit.contamination.offset, audit.contamination.theta0, audit.grid_points
        )
        rows = [
            {"epsilon": e, "inf_term": t, "inf_term_mmd_variant": v}
            for e, t, v in zip(sweep.epsilons, sweep.inf_terms, sweep.inf_terms_mmd_variant)
        ]
        emit(sweep.to_dict(), rows, config)
        return 0

    reports = [service.robustness_study(audit.contamination, n, audit.replicates).to_dict() for n in audit.n_grid]
    emit({"rows": reports}, reports, config)
    return 0 if all(r["fit_wins"] for r in reports) else 1


def cmd_sandwich_scan(args: argparse.Namespace) -> int:
    """Random embedding pairs against the MMD sandwich: one CSV row (value, lower, upper, ok) per pair"""
    config = resolve_config(args)
    generators = [get_generator(config.generator)] if args.generator else table_profiles()
    service = VerificationService(seed=config.seed, trials=config.trials, generators=generators)
    rows, summary = [], []
    for g in generators:
        pairs = service.sandwich_pairs(g)
        rows += pairs
        summary.append(service.sandwich_summary(g, pairs).to_dict())
    if args.format is None:
        config = merge_experiment_config(config, {"format": "csv"})
    emit({"seed": config.seed, "profiles": summary}, rows, config,
         ["profile", "trial", "value", "lower", "upper", "ok"])
    return 0 if all(row["ok"] for row in rows) else 1
