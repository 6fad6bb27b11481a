"""Command-line front end.

    khessian solve        --config cfg.yaml [--set key=value]... [--seed S]
    khessian mms          --config cfg.yaml ...
    khessian audit NAME   --config cfg.yaml ...
    khessian sample-cone  --config cfg.yaml ...

Configuration is YAML merged over built-in defaults; --set overrides use
dotted paths (--set problem.N=16).  Unknown keys are rejected with their
full path.  Every run writes report.json (with the effective configuration
embedded) and rows.csv into the output directory, which resolves from the
config, then the KHESSIAN_OUTDIR environment variable, then ./khessian-out.

Exit status: 0 on success, 1 when the run completed but failed (solver
divergence, audit violation), 2 for configuration errors.
"""

from __future__ import annotations

import argparse
import copy
import csv
import difflib
import json
import os
import re
import sys
from pathlib import Path

import numpy as np
import yaml


class _ConfigLoader(yaml.SafeLoader):
    """SafeLoader that also reads 1e-7 style floats (plain YAML 1.1 only
    accepts a mantissa with a dot)."""


_ConfigLoader.add_implicit_resolver(
    "tag:yaml.org,2002:float",
    re.compile(
        r"""^(?:[-+]?(?:[0-9][0-9_]*)\.[0-9_]*(?:[eE][-+]?[0-9]+)?
        |[-+]?(?:[0-9][0-9_]*)(?:[eE][-+]?[0-9]+)
        |\.[0-9_]+(?:[eE][-+]?[0-9]+)?
        |[-+]?\.(?:inf|Inf|INF)
        |\.(?:nan|NaN|NAN))$""",
        re.X,
    ),
    list("-+0123456789."),
)

from . import audits
from .errors import ConfigError, DomainError, SamplingBudgetError
from .fieldio import save_field
from .geometry import PRESET_NAMES, TorusGrid, metric_preset
from .solver import SolverOptions, manufactured_source, recovery_error, solve
from .symfunc import elementary_all, sample_gamma_k

AUDIT_NAMES = (
    "lemma21",
    "basic-inequality",
    "lemma22",
    "commutation",
    "c0",
    "b-bound",
    "c2",
    "cherrier",
)

DEFAULTS = {
    "problem": {
        "n": 2,
        "k": 2,
        "N": 16,
        "metric": {"preset": "euclidean", "epsilon": 0.1, "amplitude": 0.02},
        "source": {"terms": [[0.5, [1, 0, 0, 0], 0.0]]},
    },
    "solver": {
        "continuation_steps": 8,
        "newton_tol": 1e-9,
        "max_newton": 30,
        "linesearch_min_step": 2.0**-20,
        "linear_rtol": 1e-10,
        "linear_maxiter": 800,
        "gmres_restart": 60,
    },
    "mms": {
        "terms": [
            [0.025, [1, 1, 0, 0], 0.0],
            [0.025, [1, -1, 0, 0], 0.0],
            [0.05, [0, 0, 1, 0], 0.0],
        ],
        "tol": 1e-6,
    },
    "audit": {
        "samples": 100000,
        "pairs": [[3, 2], [4, 2], [4, 3], [5, 3]],
        "lemma21": {"n": 4, "k": 3},
        "lemma22_cases": [[2, 8, 16], [3, 8, 12]],
        "lemma22_amplitude": 0.005,
        "family_amplitudes": [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0],
        "p_list": [4, 8, 16, 32, 64],
        "cherrier_factor": 3.0,
        "commutation": {
            "N_lo": 12,
            "N_hi": 24,
            "presets": ["kahler", "torsion"],
            "orders": [3, 4],
            "epsilon": 0.15,
        },
    },
    "output_dir": None,
    "save_fields": False,
    "seed": 0,
}


def _expect(cond: bool, path: str, message: str) -> None:
    if not cond:
        raise ConfigError(f"{path}: {message}")


def _check_int(value, path, minimum=None, even=False):
    _expect(
        isinstance(value, int) and not isinstance(value, bool),
        path,
        f"expected an integer, got {value!r}",
    )
    if minimum is not None:
        _expect(value >= minimum, path, f"must be >= {minimum}, got {value}")
    if even:
        _expect(value % 2 == 0, path, f"must be even, got {value}")
    return value


def _check_float(value, path, minimum=None, positive=False):
    _expect(
        isinstance(value, (int, float)) and not isinstance(value, bool),
        path,
        f"expected a number, got {value!r}",
    )
    value = float(value)
    if positive:
        _expect(value > 0, path, f"must be positive, got {value}")
    if minimum is not None:
        _expect(value >= minimum, path, f"must be >= {minimum}, got {value}")
    return value


def _merge(base: dict, override: dict, path: str = "") -> dict:
    """Deep merge with unknown-key rejection and did-you-mean hints."""
    out = copy.deepcopy(base)
    for key, value in override.items():
        dotted = f"{path}{key}"
        if key not in base:
            hint = difflib.get_close_matches(str(key), list(base), n=1)
            extra = f" (did you mean {hint[0]!r}?)" if hint else ""
            raise ConfigError(f"unknown configuration key {dotted!r}{extra}")
        if isinstance(base[key], dict):
            _expect(
                isinstance(value, dict),
                dotted,
                f"expected a mapping, got {value!r}",
            )
            out[key] = _merge(base[key], value, dotted + ".")
        else:
            out[key] = value
    return out


def _apply_set(cfg: dict, assignment: str) -> None:
    if "=" not in assignment:
        raise ConfigError(f"--set needs key=value, got {assignment!r}")
    key, _, raw = assignment.partition("=")
    try:
        value = yaml.load(raw, Loader=_ConfigLoader)
    except yaml.YAMLError as exc:
        raise ConfigError(f"--set {key}: unparseable value {raw!r}: {exc}") from exc
    node = cfg
    parts = key.split(".")
    for part in parts[:-1]:
        if not isinstance(node, dict) or part not in node:
            raise ConfigError(f"--set: unknown configuration key {key!r}")
        node = node[part]
    leaf = parts[-1]
    if not isinstance(node, dict) or leaf not in node:
        hint = difflib.get_close_matches(leaf, list(node) if isinstance(node, dict) else [], n=1)
        extra = f" (did you mean {hint[0]!r}?)" if hint else ""
        raise ConfigError(f"--set: unknown configuration key {key!r}{extra}")
    if isinstance(node[leaf], dict):
        raise ConfigError(f"--set: {key!r} is a mapping, set its leaves instead")
    node[leaf] = value


def _validate(cfg: dict) -> dict:
    p = cfg["problem"]
    n = _check_int(p["n"], "problem.n", minimum=2)
    k = _check_int(p["k"], "problem.k", minimum=1)
    _expect(k <= n, "problem.k", f"must satisfy k <= n, got k={k}, n={n}")
    _check_int(p["N"], "problem.N", minimum=8, even=True)
    preset = p["metric"]["preset"]
    _expect(
        preset in PRESET_NAMES,
        "problem.metric.preset",
        f"unknown preset {preset!r}, choose from {PRESET_NAMES}",
    )
    _check_float(p["metric"]["epsilon"], "problem.metric.epsilon", positive=True)
    _check_float(p["metric"]["amplitude"], "problem.metric.amplitude", positive=True)
    _validate_terms(p["source"]["terms"], "problem.source.terms")
    s = cfg["solver"]
    _check_int(s["continuation_steps"], "solver.continuation_steps", minimum=1)
    _check_float(s["newton_tol"], "solver.newton_tol", positive=True)
    _check_int(s["max_newton"], "solver.max_newton", minimum=1)
    _check_float(s["linesearch_min_step"], "solver.linesearch_min_step", positive=True)
    _check_float(s["linear_rtol"], "solver.linear_rtol", positive=True)
    _check_int(s["linear_maxiter"], "solver.linear_maxiter", minimum=1)
    _check_int(s["gmres_restart"], "solver.gmres_restart", minimum=1)
    _validate_terms(cfg["mms"]["terms"], "mms.terms")
    _check_float(cfg["mms"]["tol"], "mms.tol", positive=True)
    a = cfg["audit"]
    _check_int(a["samples"], "audit.samples", minimum=1)
    _expect(
        isinstance(a["pairs"], list) and a["pairs"],
        "audit.pairs",
        "expected a non-empty list of [n, k] pairs",
    )
    for idx, pair in enumerate(a["pairs"]):
        _expect(
            isinstance(pair, list) and len(pair) == 2,
            f"audit.pairs[{idx}]",
            f"expected [n, k], got {pair!r}",
        )
    _check_int(a["lemma21"]["n"], "audit.lemma21.n", minimum=3)
    _check_int(a["lemma21"]["k"], "audit.lemma21.k", minimum=3)
    _check_float(a["lemma22_amplitude"], "audit.lemma22_amplitude", positive=True)
    _expect(
        isinstance(a["family_amplitudes"], list) and a["family_amplitudes"],
        "audit.family_amplitudes",
        "expected a non-empty list of scalings",
    )
    _expect(
        isinstance(a["p_list"], list) and len(a["p_list"]) >= 2,
        "audit.p_list",
        "expected a list of at least two exponents",
    )
    _check_float(a["cherrier_factor"], "audit.cherrier_factor", positive=True)
    c = a["commutation"]
    _check_int(c["N_lo"], "audit.commutation.N_lo", minimum=8, even=True)
    _check_int(c["N_hi"], "audit.commutation.N_hi", minimum=8, even=True)
    _check_float(c["epsilon"], "audit.commutation.epsilon", positive=True)
    if cfg["output_dir"] is not None:
        _expect(
            isinstance(cfg["output_dir"], str),
            "output_dir",
            f"expected a path string, got {cfg['output_dir']!r}",
        )
    _expect(
        isinstance(cfg["save_fields"], bool),
        "save_fields",
        f"expected a boolean, got {cfg['save_fields']!r}",
    )
    _check_int(cfg["seed"], "seed", minimum=0)
    return cfg


def _validate_terms(terms, path):
    _expect(isinstance(terms, list) and terms, path, "expected a non-empty list")
    for idx, term in enumerate(terms):
        at = f"{path}[{idx}]"
        _expect(
            isinstance(term, (list, tuple)) and len(term) == 3,
            at,
            f"expected [amplitude, [2n integer frequencies], phase], got {term!r}",
        )
        amp, freqs, phase = term
        _check_float(amp, f"{at}[0]")
        _expect(
            isinstance(freqs, (list, tuple)) and len(freqs) >= 2 and len(freqs) % 2 == 0,
            f"{at}[1]",
            f"expected an even-length list of integer frequencies, got {freqs!r}",
        )
        for fidx, fr in enumerate(freqs):
            _expect(
                isinstance(fr, int) and not isinstance(fr, bool),
                f"{at}[1][{fidx}]",
                f"expected an integer, got {fr!r}",
            )
        _check_float(phase, f"{at}[2]")


def _terms_for(n: int, terms, path) -> list[tuple]:
    """Exact frequency-length check happens where terms meet a grid."""
    for idx, term in enumerate(terms):
        freqs = term[1]
        _expect(
            len(freqs) == 2 * n,
            f"{path}[{idx}][1]",
            f"expected {2 * n} integer frequencies for n={n}, got {freqs!r}",
        )
    return [tuple(t) for t in terms]


def load_config(path: str | None, sets, seed: int | None) -> dict:
    cfg = copy.deepcopy(DEFAULTS)
    if path is not None:
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        try:
            user = yaml.load(text, Loader=_ConfigLoader)
        except yaml.YAMLError as exc:
            raise ConfigError(f"{path}: invalid YAML: {exc}") from exc
        if user is None:
            user = {}
        if not isinstance(user, dict):
            raise ConfigError(f"{path}: top level must be a mapping")
        cfg = _merge(cfg, user)
    for assignment in sets or ():
        _apply_set(cfg, assignment)
    if seed is not None:
        cfg["seed"] = seed
    return _validate(cfg)


def _resolve_outdir(cfg: dict) -> Path:
    out = cfg["output_dir"] or os.environ.get("KHESSIAN_OUTDIR") or "khessian-out"
    path = Path(out)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _write_outputs(outdir: Path, report: dict, rows: list[dict]) -> None:
    with open(outdir / "report.json", "w") as fh:
        json.dump(audits._plain(report), fh, indent=2)
        fh.write("\n")
    header: list[str] = []
    for row in rows:
        for key in row:
            if key not in header:
                header.append(key)
    with open(outdir / "rows.csv", "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=header, restval="")
        writer.writeheader()
        for row in rows:
            writer.writerow(audits._plain(row))


def _problem_pieces(cfg: dict):
    p = cfg["problem"]
    grid = TorusGrid(p["n"], p["N"])
    g = metric_preset(
        grid,
        p["metric"]["preset"],
        epsilon=p["metric"]["epsilon"],
        amplitude=p["metric"]["amplitude"],
    )
    return grid, g, p["k"]


def _solver_options(cfg: dict) -> SolverOptions:
    s = cfg["solver"]
    return SolverOptions(
        continuation_steps=s["continuation_steps"],
        newton_tol=s["newton_tol"],
        max_newton=s["max_newton"],
        linesearch_min_step=s["linesearch_min_step"],
        linear_rtol=s["linear_rtol"],
        linear_maxiter=s["linear_maxiter"],
        gmres_restart=s["gmres_restart"],
    )


def _stage_rows(report) -> list[dict]:
    return [
        {
            "t": s.t,
            "newton_iterations": s.newton_iterations,
            "final_residual": s.final_residual,
            "min_step": s.min_step,
            "gmres_iterations": s.gmres_iterations,
        }
        for s in report.stages
    ]


def _cmd_solve(cfg: dict, outdir: Path) -> int:
    grid, g, k = _problem_pieces(cfg)
    f = grid.trig_field(
        _terms_for(grid.n, cfg["problem"]["source"]["terms"], "problem.source.terms")
    )
    rep = solve(grid, g, f, k, options=_solver_options(cfg))
    if cfg["save_fields"]:
        save_field(outdir / "u.khf", rep.u, grid.n, grid.N, kind="potential")
        save_field(outdir / "f.khf", f, grid.n, grid.N, kind="source")
    _write_outputs(
        outdir,
        {"command": "solve", "passed": rep.success, **rep.summary_dict(), "config": cfg},
        _stage_rows(rep),
    )
    return 0 if rep.success else 1


def _cmd_mms(cfg: dict, outdir: Path) -> int:
    grid, g, k = _problem_pieces(cfg)
    u_star = grid.trig_field(_terms_for(grid.n, cfg["mms"]["terms"], "mms.terms"))
    f = manufactured_source(grid, g, u_star, k)
    rep = solve(grid, g, f, k, options=_solver_options(cfg))
    err = recovery_error(rep, u_star) if rep.success else float("inf")
    passed = rep.success and err <= cfg["mms"]["tol"]
    if cfg["save_fields"]:
        save_field(outdir / "u.khf", rep.u, grid.n, grid.N, kind="potential")
        save_field(outdir / "u_star.khf", u_star, grid.n, grid.N, kind="reference")
    _write_outputs(
        outdir,
        {
            "command": "mms",
            "passed": passed,
            "recovery_error": err,
            "tol": cfg["mms"]["tol"],
            **rep.summary_dict(),
            "config": cfg,
        },
        _stage_rows(rep),
    )
    return 0 if passed else 1


def _family(cfg: dict) -> audits.FamilyResult:
    p = cfg["problem"]
    return audits.run_family(
        p["n"],
        p["k"],
        p["N"],
        p["metric"]["preset"],
        _terms_for(p["n"], p["source"]["terms"], "problem.source.terms"),
        cfg["audit"]["family_amplitudes"],
        epsilon=p["metric"]["epsilon"],
        options=_solver_options(cfg),
    )


def _cmd_audit(cfg: dict, outdir: Path, name: str) -> int:
    a = cfg["audit"]
    if name == "lemma21":
        rep = audits.audit_lemma21(
            a["lemma21"]["n"], a["lemma21"]["k"], samples=a["samples"], seed=cfg["seed"]
        )
    elif name == "basic-inequality":
        rep = audits.audit_basic_inequality(
            pairs=tuple(tuple(pair) for pair in a["pairs"]),
            samples=a["samples"],
            seed=cfg["seed"],
        )
    elif name == "lemma22":
        rep = audits.audit_lemma22(
            cases=tuple(tuple(c) for c in a["lemma22_cases"]),
            preset=cfg["problem"]["metric"]["preset"],
            epsilon=cfg["problem"]["metric"]["epsilon"],
            amplitude=a["lemma22_amplitude"],
        )
    elif name == "commutation":
        c = a["commutation"]
        rep = audits.audit_commutation(
            N_lo=c["N_lo"],
            N_hi=c["N_hi"],
            presets=tuple(c["presets"]),
            orders=tuple(c["orders"]),
            epsilon=c["epsilon"],
        )
    elif name in ("c0", "b-bound", "c2", "cherrier"):
        family = _family(cfg)
        if name == "c0":
            rep = audits.audit_c0(family)
        elif name == "b-bound":
            rep = audits.audit_b_bound(family)
        elif name == "c2":
            rep = audits.audit_c2(family)
        else:
            rep = audits.audit_cherrier(
                family.grid,
                family.g,
                family.reports[-1].u,
                p_list=tuple(a["p_list"]),
                factor=a["cherrier_factor"],
            )
    else:
        raise ConfigError(f"unknown audit {name!r}, choose from {AUDIT_NAMES}")
    _write_outputs(
        outdir,
        {"command": f"audit {name}", "passed": rep.passed, **rep.as_dict(), "config": cfg},
        rep.rows,
    )
    return 0 if rep.passed else 1


def _cmd_sample_cone(cfg: dict, outdir: Path) -> int:
    n, k = cfg["problem"]["n"], cfg["problem"]["k"]
    lam = sample_gamma_k(n, k, cfg["audit"]["samples"], seed=cfg["seed"])
    sig = elementary_all(lam)
    rows = []
    for row, srow in zip(lam, sig):
        entry = {f"lambda_{i + 1}": row[i] for i in range(n)}
        entry.update({f"sigma_{j}": srow[j] for j in range(1, k + 1)})
        rows.append(entry)
    report = {
        "command": "sample-cone",
        "passed": True,
        "n": n,
        "k": k,
        "samples": int(lam.shape[0]),
        "min_sigma_k": float(sig[:, k].min()),
        "config": cfg,
    }
    _write_outputs(outdir, report, rows)
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="khessian",
        description="solve and audit the complex k-Hessian equation on flat tori",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, extra in (
        ("solve", None),
        ("mms", None),
        ("audit", "name"),
        ("sample-cone", None),
    ):
        p = sub.add_parser(name)
        if extra:
            p.add_argument("name", choices=AUDIT_NAMES)
        p.add_argument("--config", default=None, help="YAML configuration path")
        p.add_argument(
            "--set",
            dest="sets",
            action="append",
            default=[],
            metavar="KEY=VALUE",
            help="override a configuration entry by dotted path",
        )
        p.add_argument("--seed", type=int, default=None, help="override the RNG seed")
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config, args.sets, args.seed)
        outdir = _resolve_outdir(cfg)
        if args.command == "solve":
            return _cmd_solve(cfg, outdir)
        if args.command == "mms":
            return _cmd_mms(cfg, outdir)
        if args.command == "audit":
            return _cmd_audit(cfg, outdir, args.name)
        return _cmd_sample_cone(cfg, outdir)
    except (ConfigError, DomainError, SamplingBudgetError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
