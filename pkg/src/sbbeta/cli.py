"""Command-line front end.

Every command reads an optional JSON config (``--config``); flags given on
the command line override config values. Unknown config keys are rejected.
Relative output paths are resolved under ``$SBBETA_OUTPUT_DIR`` (default:
the working directory).

Exit codes: 0 success, 1 validation failures, 2 invalid configuration,
3 numerical failure.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import traceback
from dataclasses import asdict, fields
from pathlib import Path

import numpy as np

from . import io
from .construct import draw_beta_process, draw_ibp
from .experiment import ExperimentConfig, run_on_data
from .mcmc import ChainError, Hyperparams, SamplerConfig, Schedule, archive_rows, manifest
from .measure import ProcessParams
from .model import SyntheticConfig, generate_synthetic
from .quadrature import QuadratureError
from .truncation import bound_sweep, l1_gap_grid

OUTPUT_ENV = "SBBETA_OUTPUT_DIR"
CONFIG_DIR = Path(__file__).with_name("configs")

log = logging.getLogger("sbbeta")


class ConfigError(ValueError):
    def __init__(self, problems):
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))


# key -> accepted python types (bool is never accepted for numbers)
_NUM = (int, float)
FLAT_SCHEMAS = {
    "sample": {"alpha": _NUM, "gamma": _NUM, "R": int, "seed": int, "out": str},
    "ibp": {"alpha": _NUM, "gamma": _NUM, "n": int, "seed": int, "out": str},
    "bounds": {"alpha": _NUM, "gamma": _NUM, "M": int, "R_min": int, "R_max": int, "out": str,
               "grid_out": str, "grid_alphas": list, "grid_gammas": list, "grid_M": list, "seed": int},
    "synth": {"N": int, "K_true": int, "alpha": _NUM, "gamma": _NUM, "noise_var": _NUM,
              "require_all_used": bool, "seed": int, "out_dir": str},
    "validate": {"suite": str, "seed": int, "out": str},
}
MCMC_SECTIONS = {"synthetic": SyntheticConfig, "sampler": SamplerConfig, "schedule": Schedule, "hyper": Hyperparams}
MCMC_SCALARS = {"seed": int, "out_dir": str, "data_dir": str, "progress": int, "init_factors": int,
                "init_alpha": _NUM, "init_gamma": _NUM, "init_noise_var": _NUM, "singleton_moves": bool,
                "match_threshold": _NUM}

DEFAULTS = {
    "sample": {"alpha": 1.0, "gamma": 2.0, "R": 50, "seed": 0, "out": "draw.csv"},
    "ibp": {"alpha": 1.0, "gamma": 2.0, "n": 10, "seed": 0, "out": "ibp.csv"},
    "bounds": {"alpha": 3.0, "gamma": 4.0, "M": 500, "R_min": 1, "R_max": 100, "out": "bounds.csv",
               "grid_out": None, "grid_alphas": [0.5, 1.0, 2.0, 3.0, 4.0, 5.0],
               "grid_gammas": [1.0, 2.0, 4.0, 6.0, 8.0], "grid_M": [100, 500], "seed": 0},
    "synth": {"N": 500, "K_true": 20, "alpha": 1.0, "gamma": 2.0, "noise_var": 0.01,
              "require_all_used": True, "seed": 0, "out_dir": "synth"},
    "validate": {"suite": "all", "seed": 0, "out": "validation.txt"},
}


def _type_ok(value, types) -> bool:
    if isinstance(value, bool) and types is not bool:
        return False
    return isinstance(value, types)


def _check_flat(doc: dict, schema: dict, where: str) -> list[str]:
    problems = []
    for key, value in doc.items():
        if key not in schema:
            problems.append(f"{where}: unknown key {key!r} (allowed: {', '.join(sorted(schema))})")
        elif value is not None and not _type_ok(value, schema[key]):
            problems.append(f"{where}.{key}: expected {getattr(schema[key], '__name__', 'number')}, "
                            f"got {type(value).__name__}")
    return problems


def _dataclass_schema(cls) -> dict:
    out = {}
    for f in fields(cls):
        t = str(f.type)
        out[f.name] = bool if t == "bool" else int if t == "int" else str if t == "str" else _NUM
    return out


def validate_config(command: str, doc) -> dict:
    """Check a config document for ``command``; raises ConfigError listing every problem."""
    if not isinstance(doc, dict):
        raise ConfigError(["config root must be a JSON object"])
    if command in FLAT_SCHEMAS:
        problems = _check_flat(doc, FLAT_SCHEMAS[command], "config")
    elif command == "mcmc":
        problems = []
        for key, value in doc.items():
            if key in MCMC_SECTIONS:
                if not isinstance(value, dict):
                    problems.append(f"config.{key}: expected object")
                else:
                    problems += _check_flat(value, _dataclass_schema(MCMC_SECTIONS[key]), f"config.{key}")
            elif key in MCMC_SCALARS:
                problems += _check_flat({key: value}, MCMC_SCALARS, "config")
            else:
                allowed = sorted(MCMC_SECTIONS) + sorted(MCMC_SCALARS)
                problems.append(f"config: unknown key {key!r} (allowed: {', '.join(allowed)})")
    else:
        raise ConfigError([f"unknown command {command!r}"])
    if problems:
        raise ConfigError(problems)
    return doc


def load_config(path) -> dict:
    """Read a JSON config; bare names fall back to the bundled ``configs`` directory."""
    p = Path(path)
    if not p.exists() and (CONFIG_DIR / p.name).exists():
        p = CONFIG_DIR / p.name
    try:
        with open(p) as fh:
            return json.load(fh)
    except FileNotFoundError:
        raise ConfigError([f"config file not found: {path}"]) from None
    except json.JSONDecodeError as exc:
        raise ConfigError([f"{path}: invalid JSON ({exc})"]) from None


def output_path(name) -> Path:
    p = Path(name)
    if p.is_absolute():
        return p
    return Path(os.environ.get(OUTPUT_ENV, ".")) / p


def _merge_flat(command, config, args) -> dict:
    merged = dict(DEFAULTS[command])
    merged.update({k: v for k, v in config.items() if v is not None})
    for key in FLAT_SCHEMAS[command]:
        v = getattr(args, key, None)
        if v is not None:
            merged[key] = v
    return merged


def _params(cfg) -> ProcessParams:
    try:
        return ProcessParams(float(cfg["alpha"]), float(cfg["gamma"]))
    except ValueError as exc:
        raise ConfigError([str(exc)]) from None


# -- commands ---------------------------------------------------------------------

def cmd_sample(cfg) -> int:
    if cfg["R"] < 1:
        raise ConfigError(["R must be >= 1"])
    draw = draw_beta_process(_params(cfg), cfg["R"], np.random.default_rng(cfg["seed"]))
    path = io.write_draw(output_path(cfg["out"]), draw)
    print(f"wrote {len(draw)} atoms to {path}")
    return 0


def cmd_ibp(cfg) -> int:
    if cfg["n"] < 1:
        raise ConfigError(["n must be >= 1"])
    alloc = draw_ibp(cfg["n"], _params(cfg), np.random.default_rng(cfg["seed"]))
    path = io.write_allocation(output_path(cfg["out"]), alloc)
    print(f"wrote {alloc.n} x {len(alloc.atom_ids)} allocation to {path}")
    return 0


def cmd_bounds(cfg) -> int:
    if cfg["R_min"] < 0 or cfg["R_max"] < cfg["R_min"] or cfg["M"] < 0:
        raise ConfigError(["need 0 <= R_min <= R_max and M >= 0"])
    params = _params(cfg)
    curve = bound_sweep(params, cfg["M"], range(cfg["R_min"], cfg["R_max"] + 1))
    path = io.write_bound_curve(output_path(cfg["out"]), curve)
    print(f"wrote {curve.R.size} rows to {path}; flags {curve.invariant_flags()}")
    if cfg.get("grid_out"):
        alphas = [float(a) for a in cfg["grid_alphas"]]
        gammas = [float(g) for g in cfg["grid_gammas"]]
        out = output_path(cfg["grid_out"])
        rows = []
        for M in cfg["grid_M"]:
            gaps = l1_gap_grid(alphas, gammas, int(M), range(cfg["R_min"], cfg["R_max"] + 1))
            rows += [[io.fmt(a), io.fmt(g), str(int(M)), io.fmt(gaps[i, j])]
                     for i, a in enumerate(alphas) for j, g in enumerate(gammas)]
        io.write_rows(out, io.GRID_HEADER, rows)
        print(f"wrote {len(rows)} grid cells to {out}")
    return 0


def cmd_synth(cfg) -> int:
    try:
        sc = SyntheticConfig(N=cfg["N"], K_true=cfg["K_true"], alpha=float(cfg["alpha"]), gamma=float(cfg["gamma"]),
                             noise_var=float(cfg["noise_var"]), require_all_used=cfg["require_all_used"])
        data, truth, pi = generate_synthetic(sc, np.random.default_rng(cfg["seed"]))
    except ValueError as exc:
        raise ConfigError([str(exc)]) from None
    files = io.write_dataset(output_path(cfg["out_dir"]), data, truth, pi)
    print(f"wrote {', '.join(str(p) for p in files.values())}")
    return 0


def build_experiment(config: dict, args) -> tuple[ExperimentConfig, dict]:
    """Merge config sections with the mcmc flags into an ExperimentConfig."""
    sections = {k: dict(config.get(k, {})) for k in MCMC_SECTIONS}
    scalars = {k: v for k, v in config.items() if k in MCMC_SCALARS}
    for flag, (section, key) in {"iterations": ("schedule", "iterations"), "burn_in": ("schedule", "burn_in"),
                                 "thin": ("schedule", "thin"), "N": ("synthetic", "N"),
                                 "mode": ("sampler", "mode"), "mh_steps": ("sampler", None)}.items():
        v = getattr(args, flag, None)
        if v is None:
            continue
        if key is None:
            sections["sampler"].update(pi_steps=v, w_steps=v)
        else:
            sections[section][key] = v
    for key in ("seed", "out_dir", "data_dir", "progress"):
        v = getattr(args, key, None)
        if v is not None:
            scalars[key] = v
    try:
        base = ExperimentConfig()
        exp = ExperimentConfig(
            synthetic=SyntheticConfig(**{**asdict(base.synthetic), **sections["synthetic"]}),
            sampler=SamplerConfig(**{**asdict(base.sampler), **sections["sampler"]}),
            schedule=Schedule(**{**asdict(base.schedule), **sections["schedule"]}),
            hyper=Hyperparams(**{**asdict(base.hyper), **sections["hyper"]}),
            **{k: v for k, v in scalars.items() if k in {f.name for f in fields(ExperimentConfig)}},
        )
    except (TypeError, ValueError) as exc:
        raise ConfigError([str(exc)]) from None
    run = {"seed": scalars.get("seed", 0), "out_dir": scalars.get("out_dir", "mcmc"),
           "data_dir": scalars.get("data_dir"), "progress": scalars.get("progress", 0)}
    return exp, run


def cmd_mcmc(config: dict, args) -> int:
    exp, run = build_experiment(config, args)
    rng = np.random.default_rng(run["seed"])
    if run["data_dir"]:
        data, truth, pi = io.read_dataset(run["data_dir"])
    else:
        data, truth, pi = generate_synthetic(exp.synthetic, rng)
    result = run_on_data(exp, data, rng, truth, pi, progress=run["progress"])
    out = output_path(run["out_dir"])
    header, rows = archive_rows(result.archive)
    io.write_rows(out / "archive.csv", header, rows)
    io.write_loadings(out / "loadings.csv", result.archive.iteration,
                      [e["loadings"] for e in result.archive.extras])
    summary = result.summary(exp.match_threshold)
    (out / "summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    doc = manifest(exp.sampler, exp.schedule, run["seed"], result.archive,
                   {"experiment": _jsonable(asdict(exp)), "data_dir": run["data_dir"]})
    (out / "manifest.json").write_text(doc + "\n")
    print(json.dumps(summary, sort_keys=True))
    return 0


def _jsonable(obj):
    return json.loads(json.dumps(obj, default=lambda o: o.tolist() if hasattr(o, "tolist") else str(o)))


def cmd_validate(cfg) -> int:
    from .validate import SUITES, run_suites
    names = list(SUITES) if cfg["suite"] == "all" else [cfg["suite"]]
    if any(n not in SUITES for n in names):
        raise ConfigError([f"unknown suite {cfg['suite']!r} (choose from all, {', '.join(SUITES)})"])
    results = run_suites(names, np.random.default_rng(cfg["seed"]))
    lines = [f"[{suite}] {check.line()}" for suite, check in results]
    failed = sum(not c.passed for _, c in results)
    lines.append(f"{len(results) - failed}/{len(results)} checks passed")
    path = output_path(cfg["out"])
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text("\n".join(lines) + "\n")
    print("\n".join(lines))
    return 0 if failed == 0 else 1


# -- parser -----------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="sbbeta", description="Stick-breaking beta process toolkit")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", help="JSON config file (flags override its values)")
        sp.add_argument("--seed", type=int)
        return sp

    def process(sp):
        sp.add_argument("--alpha", type=float)
        sp.add_argument("--gamma", type=float)

    sp = common(sub.add_parser("sample", help="draw a truncated beta process"))
    process(sp)
    sp.add_argument("--R", type=int, help="rounds kept")
    sp.add_argument("--out")

    sp = common(sub.add_parser("ibp", help="draw an Indian buffet process allocation"))
    process(sp)
    sp.add_argument("--n", type=int, help="number of rows")
    sp.add_argument("--out")

    sp = common(sub.add_parser("bounds", help="truncation-error bound curves"))
    process(sp)
    sp.add_argument("--M", type=int)
    sp.add_argument("--R-min", dest="R_min", type=int)
    sp.add_argument("--R-max", dest="R_max", type=int)
    sp.add_argument("--out")
    sp.add_argument("--grid-out", dest="grid_out", help="also write the L1-gap grid CSV here")

    sp = common(sub.add_parser("synth", help="generate the synthetic factor data set"))
    process(sp)
    sp.add_argument("--N", type=int)
    sp.add_argument("--K-true", dest="K_true", type=int)
    sp.add_argument("--noise-var", dest="noise_var", type=float)
    sp.add_argument("--out-dir", dest="out_dir")

    sp = common(sub.add_parser("mcmc", help="run the sampler on the factor model"))
    sp.add_argument("--data-dir", dest="data_dir", help="directory written by `synth` (default: generate)")
    sp.add_argument("--N", type=int)
    sp.add_argument("--iterations", type=int)
    sp.add_argument("--burn-in", dest="burn_in", type=int)
    sp.add_argument("--thin", type=int)
    sp.add_argument("--mh-steps", dest="mh_steps", type=int)
    sp.add_argument("--mode", choices=("paper", "exact"))
    sp.add_argument("--progress", type=int, help="log every this many iterations")
    sp.add_argument("--out-dir", dest="out_dir")

    sp = common(sub.add_parser("validate", help="run the invariant suites"))
    sp.add_argument("--suite", choices=("all", "measure", "construct", "truncation", "mcmc", "model"))
    sp.add_argument("--out")
    return p


def _failing_operation(exc) -> str:
    tb = traceback.extract_tb(exc.__traceback__)
    here = str(Path(__file__).parent)
    ours = [f for f in tb if f.filename.startswith(here)]
    return (ours or tb)[-1].name if (ours or tb) else "unknown"


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose or getattr(args, "progress", None) else logging.WARNING,
                        format="%(asctime)s %(levelname)s %(message)s")
    try:
        config = validate_config(args.command, load_config(args.config) if args.config else {})
        if args.command == "mcmc":
            return cmd_mcmc(config, args)
        cfg = _merge_flat(args.command, config, args)
        return {"sample": cmd_sample, "ibp": cmd_ibp, "bounds": cmd_bounds, "synth": cmd_synth,
                "validate": cmd_validate}[args.command](cfg)
    except ConfigError as exc:
        for problem in exc.problems:
            print(f"config error: {problem}", file=sys.stderr)
        return 2
    except ChainError as exc:
        cause = exc.__cause__ or exc
        print(f"numerical failure in {_failing_operation(cause)} at iteration {exc.iteration}: {cause}",
              file=sys.stderr)
        return 3
    except (ArithmeticError, np.linalg.LinAlgError, QuadratureError) as exc:
        print(f"numerical failure in {_failing_operation(exc)}: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
