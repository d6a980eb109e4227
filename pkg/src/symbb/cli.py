"""Command line interface.

Every machine-readable output embeds the resolved run configuration and a
content hash of the instance so a run can be reproduced exactly from its own
output.  Timings live in a separate field so the remaining payload is
byte-stable across reruns.

Exit codes: 0 completed, 1 error, 2 target refuted, 3 inconclusive (budget).
"""

from __future__ import annotations

import csv
import hashlib
import json
import sys
from dataclasses import replace
from pathlib import Path

import click

from . import bb, dnn, estimator, instance, subproblem, symmetry
from .dnn import ApgParams, NbParams

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_REFUTED = 2
EXIT_INCONCLUSIVE = 3


def _load_bqop(path: str) -> tuple[instance.BqopInstance, str]:
    """Load a BQOP from QAPLIB .dat (converted) or BQOP .json; returns the
    instance and a sha256 of the raw file."""
    raw = Path(path).read_bytes()
    digest = hashlib.sha256(raw).hexdigest()
    text = raw.decode()
    if path.endswith(".json") or text.lstrip().startswith("{"):
        return instance.bqop_from_json(text), digest
    qap = instance.parse_qaplib(text)
    return instance.qap_to_bqop(qap), digest


def _config_overrides(config_path: str | None) -> dict:
    if config_path is None:
        return {}
    with open(config_path) as fh:
        data = json.load(fh)
    if not isinstance(data, dict):
        raise click.ClickException("--config must contain a JSON object")
    return data


def _write_json(path: str | None, obj: dict):
    text = json.dumps(obj, indent=1, sort_keys=True)
    if path is None:
        click.echo(text)
    else:
        Path(path).write_text(text + "\n")


def _write_csv(path: str, rows: list[dict]):
    if not rows:
        Path(path).write_text("")
        return
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(rows[0].keys()))
        writer.writeheader()
        writer.writerows(rows)


def _run_config(subcommand: str, **kwargs) -> dict:
    cfg = {"subcommand": subcommand}
    cfg.update({k: v for k, v in kwargs.items() if v is not None})
    return cfg


@click.group()
def main():
    """Target-lower-bound solver toolkit for cardinality-constrained binary
    quadratic optimization with symmetry exploitation."""


@main.command()
@click.option("--instance", "instance_path", required=True, type=click.Path(exists=True))
@click.option("--output", "output_path", default=None, type=click.Path())
def convert(instance_path, output_path):
    """Convert a QAPLIB rank-one-flow instance to BQOP JSON."""
    try:
        raw = Path(instance_path).read_text()
        qap = instance.parse_qaplib(raw)
        bqop = instance.qap_to_bqop(qap)
    except instance.InstanceError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(EXIT_ERROR)
    payload = json.loads(instance.bqop_to_json(bqop))
    payload["config"] = _run_config("convert", instance=instance_path)
    payload["instance_sha256"] = hashlib.sha256(raw.encode()).hexdigest()
    _write_json(output_path, payload)
    sys.exit(EXIT_OK)


@main.command(name="symmetry")
@click.option("--instance", "instance_path", required=True, type=click.Path(exists=True))
@click.option("--fix", "fix_index", default=None, type=int,
              help="Report orbits after fixing this 1-based variable to 1.")
@click.option("--orbit-csv", default=None, type=click.Path())
@click.option("--group-json", default=None, type=click.Path())
@click.option("--group-cap", default=1_000_000, type=int)
def symmetry_cmd(instance_path, fix_index, orbit_csv, group_json, group_cap):
    """Enumerate the automorphism group of the cost matrix and its orbits."""
    try:
        bqop, digest = _load_bqop(instance_path)
        group = symmetry.automorphisms(bqop.B, element_cap=group_cap)
    except (instance.InstanceError, symmetry.GroupTooLargeError) as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(EXIT_ERROR)
    click.echo(f"group order: {group.order}")

    if fix_index is not None:
        fix = subproblem.FixSets(i0=(), i1=(fix_index - 1,))
        sub = subproblem.reduce(bqop, fix)
        grp = subproblem.subgroup(sub, element_cap=group_cap)
        orbs = symmetry.orbits(grp, range(sub.ell))
        scores = bb.orbit_scores(sub, orbs)
        order = sorted(range(len(orbs)), key=lambda k: (-scores[k], orbs[k].representative))
        rows = []
        for rank, k in enumerate(order, start=1):
            rows.append({
                "orbit": rank,
                "members": " ".join(str(sub.free[i] + 1) for i in orbs[k].members),
                "size": orbs[k].size,
                "score": f"{scores[k]:.1f}",
            })
        click.echo(f"orbits after fixing variable {fix_index}: {len(orbs)}")
    else:
        orbs = group.orbit_partition
        rows = symmetry.orbit_report_rows(orbs)
        click.echo(f"orbits: {len(orbs)}")
    if orbit_csv:
        _write_csv(orbit_csv, rows)
    if group_json:
        payload = symmetry.group_to_json_obj(group)
        payload["config"] = _run_config("symmetry", instance=instance_path, fix=fix_index)
        payload["instance_sha256"] = digest
        _write_json(group_json, payload)
    sys.exit(EXIT_OK)


def _nb_params(gap_tol, nb_max_iter, apg_tol, apg_max_iter) -> NbParams:
    return NbParams(gap_tol=gap_tol, max_iter=nb_max_iter,
                    apg=ApgParams(rel_tol=apg_tol, max_iter=apg_max_iter))


@main.command(name="bound-root")
@click.option("--instance", "instance_path", required=True, type=click.Path(exists=True))
@click.option("--target", default=None, type=int)
@click.option("--lambda-scale", default=1e8, type=float)
@click.option("--lam", default=None, type=float, help="Explicit penalty weight override.")
@click.option("--gap-tol", default=1e-6, type=float)
@click.option("--nb-max-iter", default=60, type=int)
@click.option("--apg-tol", default=1e-12, type=float)
@click.option("--apg-max-iter", default=20000, type=int)
@click.option("--trace-csv", default=None, type=click.Path())
@click.option("--json", "json_path", default=None, type=click.Path())
def bound_root(instance_path, target, lambda_scale, lam, gap_tol, nb_max_iter,
               apg_tol, apg_max_iter, trace_csv, json_path):
    """Newton-bracketing bound for the root subproblem with variable 1 fixed
    to 1."""
    try:
        bqop, digest = _load_bqop(instance_path)
    except instance.InstanceError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(EXIT_ERROR)
    sub = subproblem.reduce(bqop, subproblem.FixSets(i0=(), i1=(0,)))
    lam_value = lam if lam is not None else dnn.default_lambda(sub, lambda_scale)
    prob = dnn.assemble(sub, lam_value)
    params = _nb_params(gap_tol, nb_max_iter, apg_tol, apg_max_iter)
    res = dnn.nb_bound(prob, target, params)
    lb = res.a + sub.offset
    click.echo(f"status: {res.status}")
    click.echo(f"validated lower bound: {lb}")
    if res.lb_integer is not None:
        click.echo(f"integer lower bound: {res.lb_integer}")
    if trace_csv:
        _write_csv(trace_csv, [dict(row) for row in res.trace])
    if json_path:
        payload = {
            "status": res.status,
            "a": res.a, "b": res.b,
            "offset": sub.offset,
            "lower_bound": lb,
            "integer_lower_bound": res.lb_integer,
            "lambda": lam_value,
            "iterations": res.iterations,
            "config": _run_config("bound-root", instance=instance_path,
                                  target=target, lambda_scale=lambda_scale,
                                  lam=lam, gap_tol=gap_tol),
            "instance_sha256": digest,
        }
        _write_json(json_path, payload)
    sys.exit(EXIT_OK)


@main.command()
@click.option("--instance", "instance_path", required=True, type=click.Path(exists=True))
@click.option("--target", required=True, type=int)
@click.option("--no-isomorphism-pruning", is_flag=True, default=False)
@click.option("--workers", default=1, type=int)
@click.option("--lambda-scale", default=1e8, type=float)
@click.option("--lam", default=None, type=float)
@click.option("--node-budget", default=None, type=int)
@click.option("--time-budget", default=None, type=float, help="Seconds.")
@click.option("--checkpoint", "checkpoint_path", default=None, type=click.Path())
@click.option("--stats-csv", default=None, type=click.Path())
@click.option("--certificate-json", default=None, type=click.Path())
@click.option("--audit", is_flag=True, default=False)
@click.option("--config", "config_path", default=None, type=click.Path(exists=True))
def solve(instance_path, target, no_isomorphism_pruning, workers, lambda_scale,
          lam, node_budget, time_budget, checkpoint_path, stats_csv,
          certificate_json, audit, config_path):
    """Prove or refute a target lower bound by branch and bound."""
    try:
        overrides = _config_overrides(config_path)
        bqop, digest = _load_bqop(instance_path)
        params = bb.BbParams(
            workers=workers, iso_pruning=not no_isomorphism_pruning,
            lambda_scale=lambda_scale, lam=lam, node_budget=node_budget,
            time_budget=time_budget, checkpoint_path=checkpoint_path,
            audit=audit)
        if overrides:
            params = replace(params, **overrides)
        cert = bb.solve_target(bqop, target, params)
    except (instance.InstanceError, symmetry.GroupTooLargeError) as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(EXIT_ERROR)
    click.echo(f"outcome: {cert.outcome}")
    click.echo(f"nodes: {cert.node_count}")
    if cert.outcome == "Refuted":
        click.echo(f"witness value: {cert.witness_value}")
    if stats_csv:
        _write_csv(stats_csv, bb.stats_csv_rows(cert))
    if certificate_json:
        payload = cert.to_json_obj()
        payload["config"] = _run_config(
            "solve", instance=instance_path, target=target,
            iso_pruning=not no_isomorphism_pruning, workers=workers,
            lambda_scale=lambda_scale, lam=lam, node_budget=node_budget,
            time_budget=time_budget)
        payload["instance_sha256"] = digest
        _write_json(certificate_json, payload)
    sys.exit({"Proved": EXIT_OK, "Refuted": EXIT_REFUTED}.get(cert.outcome, EXIT_INCONCLUSIVE))


@main.command(name="estimate")
@click.option("--instance", "instance_path", required=True, type=click.Path(exists=True))
@click.option("--target", required=True, type=int)
@click.option("--seeds", default="0", help="Comma-separated list of seeds.")
@click.option("--workers", default=1, type=int)
@click.option("--width-threshold", default=1000, type=int)
@click.option("--lambda-scale", default=1e8, type=float)
@click.option("--stats-csv", default=None, type=click.Path())
@click.option("--report-json", default=None, type=click.Path())
def estimate_cmd(instance_path, target, seeds, workers, width_threshold,
                 lambda_scale, stats_csv, report_json):
    """Estimate the enumeration-tree size for a target lower bound."""
    try:
        bqop, digest = _load_bqop(instance_path)
        seed_list = [int(s) for s in seeds.split(",") if s.strip() != ""]
        params = estimator.EstParams(workers=workers,
                                     width_threshold=width_threshold,
                                     lambda_scale=lambda_scale)
        summary = estimator.estimate_multi(bqop, target, seed_list, params)
    except (instance.InstanceError, ValueError) as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(EXIT_ERROR)
    nodes = summary["nodes"]
    click.echo(f"estimated nodes (min/mean/max): "
               f"{nodes['min']:.0f} / {nodes['mean']:.0f} / {nodes['max']:.0f}")
    if stats_csv:
        rows = []
        for rep in summary["reports"]:
            for rec in rep["per_depth"]:
                rows.append({"seed": rep["seed"], **rec})
        _write_csv(stats_csv, rows)
    if report_json:
        summary["config"] = _run_config("estimate", instance=instance_path,
                                        target=target, seeds=seeds,
                                        width_threshold=width_threshold)
        summary["instance_sha256"] = digest
        _write_json(report_json, summary)
    complete = all(rep["complete"] for rep in summary["reports"])
    sys.exit(EXIT_OK if complete else EXIT_INCONCLUSIVE)


@main.command(name="sample-dist")
@click.option("--instance", "instance_path", required=True, type=click.Path(exists=True))
@click.option("--count", default=1_000_000, type=int)
@click.option("--optimum", required=True, type=int)
@click.option("--seed", default=0, type=int)
@click.option("--bins", default=50, type=int)
@click.option("--csv", "csv_path", default=None, type=click.Path())
def sample_dist(instance_path, count, optimum, seed, bins, csv_path):
    """Sample feasible solutions and emit the scaled-objective histogram."""
    try:
        bqop, digest = _load_bqop(instance_path)
        dist = instance.sample_scaled_distribution(bqop, count, optimum,
                                                   seed=seed, bins=bins)
    except instance.InstanceError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(EXIT_ERROR)
    click.echo(f"samples: {dist.values.size}  mean scaled value: {dist.mean:.6f}")
    if csv_path:
        rows = [{"bin_left": dist.bin_edges[i], "bin_right": dist.bin_edges[i + 1],
                 "probability": dist.probabilities[i]}
                for i in range(dist.probabilities.size)]
        _write_csv(csv_path, rows)
    sys.exit(EXIT_OK)


if __name__ == "__main__":
    main()
