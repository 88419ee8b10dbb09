"""Command-line entry point: ``cdimlab {gen,probe,modulus,uws,qdim,tangent}``.

A run is described by one JSON config; command-line flags override its fields. Every run
writes ``manifest.json`` plus the command's artifacts into the output directory.
"""

from __future__ import annotations

import argparse
import copy
import json
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from ._backend import BACKEND
from .exponent import build_table, chart, estimate_QN
from .geometry import ResourceLimitError, ShapeSpec, gen_shape, read_cloud, write_cloud
from .manifest import config_hash, write_json, write_manifest
from .modulus import (LAMBDA_RIGOROUS, ModulusNotConverged, annulus_family, min_vertex_cut, modulus_p,
                      upper_bound_certificate)
from .nets import (FIDELITY, doubling_estimate, linear_connectivity_probe, sample_pairs, stride_centers,
                   uniformly_disconnected_probe, uniformly_perfect_probe)
from .svg import cloud_svg
from .tangent import lambda_grid, rescaled_window, tangent_sweep, write_sweep
from .uws import UWSQuery, cut_svg, uws_sweep

EXIT_OK, EXIT_ERROR, EXIT_VALIDATION, EXIT_NOT_CONVERGED = 0, 1, 2, 3

COMMANDS = ("gen", "probe", "modulus", "uws", "qdim", "tangent")
PROBES = ("disconnect", "perfect", "doubling", "linconn")

DEFAULTS = {
    "gen": {},
    "probe": {"eps": 0.25, "n_pairs": 200, "c": 0.5, "n_queries": 64, "scale_grid": [0.1, 0.05],
              "n_centers": 16, "n_linconn_pairs": 20, "L_grid": [1, 1.5, 2, 3, 4, 8]},
    "modulus": {"a": 10.0, "lam": LAMBDA_RIGOROUS, "m": 1, "k": 1, "p_grid": [1.0, 1.5, 2.0],
                "center_index": 0, "certificate": False, "write_edges": False},
    "uws": {"r_grid": [0.05, 0.1, 0.2], "eps_grid": [0.01, 0.02, 0.05], "n_centers": 8, "cap": 50,
            "block_factor": 1.0, "svg": True},
    "qdim": {"a": 3.0, "lam": LAMBDA_RIGOROUS, "p_grid": [1.0, 1.5, 2.0, 3.0], "k_grid": [2, 3, 4, 5],
             "m_grid": [1, 2, 3], "center_stride": 1, "theta": None},
    "tangent": {"R": 1.0, "eps_grid": [0.05], "lam_grid": None, "n_centers": 10, "export_windows": False},
}


class ConfigError(ValueError):
    pass


def workers() -> int:
    env = os.environ.get("CDIMLAB_THREADS")
    if env:
        try:
            n = int(env)
        except ValueError:
            raise ConfigError(f"CDIMLAB_THREADS must be an integer, got {env!r}") from None
        if n < 1:
            raise ConfigError("CDIMLAB_THREADS must be >= 1")
        return n
    return os.cpu_count() or 1


# ---------------------------------------------------------------- config


def _parse_value(text):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def _pairs(items, flag):
    out = {}
    for item in items or ():
        key, sep, val = item.partition("=")
        if not sep or not key:
            raise ConfigError(f"{flag} expects KEY=VALUE, got {item!r}")
        out[key] = _parse_value(val)
    return out


def resolve_config(args) -> dict:
    cfg = {}
    if args.config:
        try:
            cfg = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as err:
            raise ConfigError(f"cannot read config {args.config}: {err}") from None
        if not isinstance(cfg, dict):
            raise ConfigError("config must be a JSON object")
    cfg = copy.deepcopy(cfg)
    if cfg.get("command", args.command) != args.command:
        raise ConfigError(f"config is for {cfg['command']!r}, not {args.command!r}")
    cfg["command"] = args.command
    if args.command == "probe":
        cfg["probe"] = args.probe
    shape = cfg.setdefault("shape", {})
    if args.kind:
        shape["kind"] = args.kind
    if args.spacing is not None:
        shape["spacing"] = args.spacing
    if args.cloud:
        shape["csv"] = args.cloud
    shape.setdefault("params", {}).update(_pairs(args.shape_param, "--shape-param"))
    params = {**DEFAULTS[args.command], **cfg.get("params", {}), **_pairs(args.set, "--set")}
    unknown = sorted(set(params) - set(DEFAULTS[args.command]))
    if unknown:
        raise ConfigError(f"unknown parameters for {args.command}: {', '.join(unknown)}")
    cfg["params"] = params
    if args.output_dir:
        cfg["output_dir"] = args.output_dir
    cfg.setdefault("output_dir", "out")
    cfg["heuristic_ack"] = bool(args.heuristic_ack or cfg.get("heuristic_ack", False))
    validate(cfg)
    return cfg


def validate(cfg):
    shape = cfg["shape"]
    if "csv" not in shape:
        if "kind" not in shape or "spacing" not in shape:
            raise ConfigError("shape needs kind and spacing (or csv)")
        ShapeSpec(shape["kind"], shape.get("params", {}), float(shape["spacing"]))
    p = cfg["params"]
    if "lam" in p and float(p["lam"]) < LAMBDA_RIGOROUS and not cfg["heuristic_ack"]:
        raise ConfigError(f"lam = {p['lam']} < {LAMBDA_RIGOROUS:g} is heuristic; pass --heuristic-ack")
    if cfg["command"] == "modulus" and p["certificate"] and float(p["a"]) <= 10 and not cfg["heuristic_ack"]:
        raise ConfigError("the certificate needs a > 10; pass --heuristic-ack to run it anyway")
    for key in ("p_grid", "k_grid", "m_grid", "r_grid", "eps_grid"):
        if key in p and (not isinstance(p[key], list) or not p[key]):
            raise ConfigError(f"{key} must be a non-empty list")


def load_cloud(shape):
    if "csv" in shape:
        return read_cloud(shape["csv"], shape.get("meta"))
    spec = ShapeSpec(shape["kind"], shape.get("params", {}), float(shape["spacing"]))
    window = shape.get("window")
    if window is not None:
        window = (window["center"], window["radius"])
    return gen_shape(spec, window=window)


# ---------------------------------------------------------------- commands


def cmd_gen(cloud, p, out, cfg, h):
    write_cloud(cloud, out / "cloud.csv", out / "cloud.json", extra={"manifest_hash": h})
    return ["cloud.csv", "cloud.json"]


def cmd_probe(cloud, p, out, cfg, h):
    name = cfg["probe"]
    if name == "disconnect":
        rec = uniformly_disconnected_probe(cloud, float(p["eps"]), int(p["n_pairs"])).to_dict()
    elif name == "perfect":
        rec = uniformly_perfect_probe(cloud, float(p["c"]), int(p["n_queries"])).to_dict()
    elif name == "doubling":
        grid = [float(s) for s in p["scale_grid"]]
        rec = {"probe": "doubling", "params": {"scale_grid": grid, "n_centers": int(p["n_centers"])},
               "verdict": "estimate", "estimate": doubling_estimate(cloud, grid, int(p["n_centers"]))}
    else:
        sampled = sample_pairs(len(cloud), int(p["n_linconn_pairs"]))
        # a d/4-path needs d/4 above the fidelity floor
        floor = FIDELITY * cloud.spacing
        pairs = [(i, j) for i, j in sampled
                 if np.hypot(*(cloud.points[i] - cloud.points[j])) / 4 >= floor]
        Ls = linear_connectivity_probe(cloud, pairs, p["L_grid"])
        worst = max(Ls) if Ls else None
        verdict = ("holds_vacuously" if worst is None
                   else "holds_at_sampled_pairs" if np.isfinite(worst) else "fails")
        rec = {"probe": "linconn", "params": {"L_grid": p["L_grid"], "n_pairs": len(sampled)},
               "verdict": verdict, "L": worst, "n_checked": len(pairs),
               "n_below_fidelity": len(sampled) - len(pairs),
               "per_pair": [[a, b, L] for (a, b), L in zip(pairs, Ls)]}
    write_json(out / "probe.json", {**rec, "manifest_hash": h})
    return ["probe.json"]


def cmd_modulus(cloud, p, out, cfg, h):
    a, lam, m, k = float(p["a"]), float(p["lam"]), int(p["m"]), int(p["k"])
    xi = int(p["center_index"])
    x = cloud.points[xi]
    fam = annulus_family(cloud, a, lam, x, m, k)
    doc = {"manifest_hash": h, "a": a, "lam": lam, "m": m, "k": k, "center_index": xi,
           "heuristic": lam < LAMBDA_RIGOROUS, "n_vertices": fam.n,
           "n_A": int(fam.A.sum()), "n_A_prime": int(fam.A_prime.sum()), "empty": fam.is_empty(),
           "results": []}
    artifacts = ["modulus.json"]
    if fam.graph is not None and p["write_edges"]:
        fam.graph.write_edges(out / "edges.csv")
        artifacts.append("edges.csv")
    if not fam.is_empty():
        doc["cut"] = min_vertex_cut(fam).to_dict()
    try:
        for q in sorted(float(v) for v in p["p_grid"]):
            doc["results"].append(modulus_p(fam, q).to_dict())
            if p["certificate"]:
                cert = upper_bound_certificate(cloud, a, lam, x, m, k, q, heuristic=cfg["heuristic_ack"],
                                               family=fam)
                doc["results"][-1]["certificate"] = cert.to_dict()
    finally:
        write_json(out / "modulus.json", doc)
    return artifacts


def cmd_uws(cloud, p, out, cfg, h):
    centers = stride_centers(len(cloud), int(p["n_centers"]))
    for i in centers:
        for r in p["r_grid"]:
            for e in p["eps_grid"]:
                UWSQuery(tuple(cloud.points[i]), float(r), float(e), i).validate(cloud)
    rep = uws_sweep(cloud, p["r_grid"], p["eps_grid"], centers=centers, cap=int(p["cap"]),
                    block_factor=float(p["block_factor"]))
    write_json(out / "uws_report.json", {**rep.to_dict(), "manifest_hash": h})
    artifacts = ["uws_report.json"]
    if p["svg"]:
        for n, e in enumerate(rep.entries):
            name = f"uws_query_{n:03d}.svg"
            cut_svg(cloud, e, out / name)
            artifacts.append(name)
    return artifacts


def cmd_qdim(cloud, p, out, cfg, h):
    table = build_table(cloud, float(p["a"]), float(p["lam"]), p["p_grid"], p["k_grid"], p["m_grid"],
                        int(p["center_stride"]), workers())
    table.write_csv(out / "table.csv")
    est = estimate_QN(table, None if p["theta"] is None else float(p["theta"]))
    write_json(out / "estimate.json", {**est.to_dict(), "manifest_hash": h, "a": table.a, "lam": table.lam,
                                       "heuristic": table.heuristic, "m_grid": table.m_grid,
                                       "center_stride": table.center_stride})
    chart(table, out / "chart.svg")
    return ["table.csv", "estimate.json", "chart.svg"]


def cmd_tangent(cloud, p, out, cfg, h):
    R = float(p["R"])
    eps_grid = [float(e) for e in p["eps_grid"]]
    lams = p["lam_grid"] or lambda_grid(cloud, R, min(eps_grid))
    if not lams:
        raise ConfigError("no lambda passes the resolution guards at this spacing")
    centers = stride_centers(len(cloud), int(p["n_centers"]))
    for i in centers:
        for lam in lams:
            rescaled_window(cloud, cloud.points[i], float(lam), R)
    rows = tangent_sweep(cloud, centers, lams, eps_grid, R)
    write_sweep(rows, out / "tangent_sweep.csv")
    artifacts = ["tangent_sweep.csv"]
    if p["export_windows"]:
        for i in centers:
            for j, lam in enumerate(lams):
                w = rescaled_window(cloud, cloud.points[i], float(lam), R, i)
                stem = f"window_{i}_{j}"
                w.write(out / f"{stem}.csv", out / f"{stem}.json")
                artifacts += [f"{stem}.csv", f"{stem}.json"]
    return artifacts


HANDLERS = {"gen": cmd_gen, "probe": cmd_probe, "modulus": cmd_modulus, "uws": cmd_uws,
            "qdim": cmd_qdim, "tangent": cmd_tangent}


# ---------------------------------------------------------------- driver


def run(cfg: dict) -> int:
    """Execute a resolved config; returns the exit status."""
    t0 = time.perf_counter()
    out = Path(cfg["output_dir"])
    out.mkdir(parents=True, exist_ok=True)
    h = config_hash(cfg)
    artifacts = []
    code, err_doc = EXIT_OK, None
    try:
        cloud = load_cloud(cfg["shape"])
        cloud_svg(cloud.points, out / "cloud.svg", title=cloud.label)
        artifacts.append("cloud.svg")
        artifacts += HANDLERS[cfg["command"]](cloud, cfg["params"], out, cfg, h)
    except ModulusNotConverged as err:
        code = EXIT_NOT_CONVERGED
        err_doc = {"lower": err.lower, "upper": err.upper, "iterations": err.iterations,
                   "cell": getattr(err, "cell", None)}
        exc = err
    except (ValueError, ResourceLimitError) as err:
        code, exc = EXIT_VALIDATION, err
    except Exception as err:  # noqa: BLE001 - reported as error.json
        code, exc = EXIT_ERROR, err
    if code != EXIT_OK:
        write_json(out / "error.json", {"error": type(exc).__name__, "message": str(exc), "exit_code": code,
                                        "manifest_hash": h, **(err_doc or {})})
        artifacts = [a for a in artifacts if (out / a).exists()] + ["error.json"]
        for name in ("modulus.json",):
            if (out / name).exists() and name not in artifacts:
                artifacts.append(name)
        print(f"cdimlab: {type(exc).__name__}: {exc}", file=sys.stderr)
    write_manifest(out, cfg, artifacts, time.perf_counter() - t0, BACKEND, "ok" if code == EXIT_OK else "error")
    return code


def build_parser():
    parser = argparse.ArgumentParser(prog="cdimlab", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"cdimlab {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", help="JSON run config")
        sp.add_argument("--output-dir", "-o")
        sp.add_argument("--kind", help="shape kind")
        sp.add_argument("--spacing", type=float, help="sampling spacing")
        sp.add_argument("--cloud", help="read the cloud from a CSV instead of generating it")
        sp.add_argument("--shape-param", action="append", metavar="KEY=VALUE")
        sp.add_argument("--set", action="append", metavar="KEY=VALUE", help="override a command parameter")
        sp.add_argument("--heuristic-ack", action="store_true",
                        help="accept heuristic settings (lam < 32, certificate with a <= 10)")

    for name in COMMANDS:
        sp = sub.add_parser(name)
        if name == "probe":
            sp.add_argument("probe", choices=PROBES)
        common(sp)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = resolve_config(args)
    except (ValueError, ResourceLimitError) as err:
        out = Path(args.output_dir or "out")
        out.mkdir(parents=True, exist_ok=True)
        write_json(out / "error.json", {"error": type(err).__name__, "message": str(err),
                                        "exit_code": EXIT_VALIDATION})
        print(f"cdimlab: {err}", file=sys.stderr)
        return EXIT_VALIDATION
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
