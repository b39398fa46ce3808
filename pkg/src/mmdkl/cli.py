"""Command-line front end.

Subcommands: ``kl-sweep``, ``mi-sweep``, ``convergence``, ``two-sample``,
``verify-discrete``. Settings come from an optional JSON file (kebab-case
keys) and are overridden by flags; the resolved settings are echoed into
every output.

Exit codes: 0 success, 2 input error, 3 numerical error, 4 verification failure.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import io
import json
import logging
import math
import sys
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import __version__
from .bounds import kl_bounds
from .discrete_oracle import run_suite, verify_chain
from .errors import InputError, MmdKlError, VerificationError
from .estimators import EstimatorConfig, LambdaPolicy
from .experiments import (
    CROSS_COV_GRID,
    DEFAULT_MI_SETTINGS,
    MEAN_SHIFT_GRID,
    SWEEP_GAMMA_GRID,
    MiSetting,
    convergence,
    kernel_spec,
    kl_sweep,
    mi_sweep,
)
from .kernels import DEFAULT_GAMMA_GRID

SCHEMA_LINE = "schema=1"
COMMANDS = ("kl-sweep", "mi-sweep", "convergence", "two-sample", "verify-discrete")


@dataclass
class RunConfig:
    """Union of every command's settings; ``None`` means "use the command default"."""

    seed: int = 0
    out: Optional[str] = None
    jobs: int = 1
    lambda_: Optional[str] = None
    gamma_grid: Optional[list] = None
    kernel: Optional[str] = None
    lb_scale: float = 1.0
    n: Optional[int] = None
    dim: int = 3
    sweep: str = "mean_shift"
    epsilon_grid: Optional[list] = None
    lambda_grid: Optional[list] = None
    n_seeds: int = 20
    lb_sizes: list = field(default_factory=lambda: [100, 400, 1600])
    ub_sizes: list = field(default_factory=lambda: [200, 800, 3200])
    shift: float = 1.0
    ub_gamma: Optional[float] = None
    pairs: int = 1000
    k_min: int = 2
    k_max: int = 10
    p: Optional[list] = None
    q: Optional[list] = None
    break_chain: bool = False
    file_p: Optional[str] = None
    file_q: Optional[str] = None

    @staticmethod
    def key_of(name: str) -> str:
        return name.rstrip("_").replace("_", "-")

    @classmethod
    def field_for_key(cls, key: str) -> str:
        for f in dataclasses.fields(cls):
            if cls.key_of(f.name) == key:
                return f.name
        raise InputError(f"unknown config key {key!r}")

    @classmethod
    def from_json(cls, path: str) -> "RunConfig":
        try:
            with open(path, encoding="utf-8") as fh:
                data = json.load(fh)
        except OSError as exc:
            raise InputError(f"cannot read config {path}: {exc}") from None
        except json.JSONDecodeError as exc:
            raise InputError(f"config {path} is not valid JSON: {exc}") from None
        if not isinstance(data, dict):
            raise InputError(f"config {path} must hold a JSON object")
        cfg = cls()
        for key, value in data.items():
            setattr(cfg, cls.field_for_key(key), value)
        return cfg

    def to_json_dict(self) -> dict:
        return {self.key_of(f.name): getattr(self, f.name) for f in dataclasses.fields(self)}


# --- parsing helpers ------------------------------------------------------------------


def _float_list(value) -> list[float]:
    if value is None:
        return None
    if isinstance(value, str):
        parts = [p for p in value.split(",") if p.strip()]
    else:
        parts = list(value)
    try:
        return [float(p) for p in parts]
    except (TypeError, ValueError):
        raise InputError(f"expected a comma-separated list of numbers, got {value!r}") from None


def _int_list(value) -> list[int]:
    out = _float_list(value)
    if any(v != int(v) for v in out):
        raise InputError(f"expected integers, got {value!r}")
    return [int(v) for v in out]


def _kernel_name(name: Optional[str]) -> str:
    name = name or "rbf"
    if name not in ("rbf", "invpoly"):
        raise InputError(f"unknown kernel {name!r}; use 'rbf' or 'invpoly'")
    return name


def _positive_int(value, what: str) -> int:
    if int(value) != value or value < 1:
        raise InputError(f"{what} must be a positive integer, got {value!r}")
    return int(value)


def read_samples_csv(path: str) -> np.ndarray:
    """One sample per row, one coordinate per column; a non-numeric first row is a header.

    Errors name the 1-based file row and column of the offending cell.
    """
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.reader(fh)
            records = [(reader.line_num, row) for row in reader]
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}") from None
    records = [(line, row) for line, row in records if any(cell.strip() for cell in row)]
    if not records:
        raise InputError(f"{path}: no data rows")

    def numeric(cell: str) -> bool:
        try:
            float(cell)
        except ValueError:
            return False
        return True

    if not all(numeric(cell) for cell in records[0][1]):
        records = records[1:]
    if not records:
        raise InputError(f"{path}: header row but no data rows")

    width = len(records[0][1])
    data = []
    for line, row in records:
        if len(row) != width:
            raise InputError(f"{path}: row {line} has {len(row)} columns, expected {width}")
        values = []
        for col, cell in enumerate(row, start=1):
            try:
                v = float(cell)
            except ValueError:
                raise InputError(f"{path}: row {line}, column {col}: cannot parse {cell!r}") from None
            if not math.isfinite(v):
                raise InputError(f"{path}: row {line}, column {col}: non-finite value {cell!r}")
            values.append(v)
        data.append(values)
    return np.asarray(data, dtype=float)


# --- output ---------------------------------------------------------------------------


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        value = float(value)
        if math.isnan(value):
            return "nan"
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return format(value, ".17g")
    return str(value)


def _json_safe(obj):
    if isinstance(obj, dict):
        return {k: _json_safe(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_safe(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _json_safe(obj.tolist())
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return v
    return obj


def render_csv(columns: Sequence[str], rows: Sequence[dict], resolved: dict) -> str:
    buf = io.StringIO()
    buf.write(SCHEMA_LINE + "\n")
    for line in json.dumps(_json_safe(resolved), indent=2, sort_keys=True).splitlines():
        buf.write("# " + line + "\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_fmt(row.get(c)) for c in columns])
    return buf.getvalue()


def render_json(payload: dict) -> str:
    return json.dumps(_json_safe(payload), indent=2, sort_keys=True) + "\n"


def _emit(text: str, out: Optional[str]) -> None:
    if out is None or out == "-":
        sys.stdout.write(text)
        return
    try:
        with open(out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    except OSError as exc:
        raise InputError(f"cannot write {out}: {exc}") from None


# --- commands -------------------------------------------------------------------------

KL_COLUMNS = [
    "row", "sweep", "epsilon", "gamma", "kl_true", "lb_statistic", "ub_statistic_sq",
    "kl_lower", "kl_lower_raw", "kl_upper", "lb_scale", "lambda_used", "seed",
]
MI_COLUMNS = [
    "row", "epsilon", "kernel", "gamma", "lambda", "mi_true", "lb_statistic", "ub_statistic_sq",
    "mi_lower", "mi_lower_raw", "mi_upper", "lb_scale", "seed", "unitary_seed",
]
CONV_COLUMNS = [
    "row", "case", "statistic", "n", "seed", "value", "lambda_used", "median", "rel_spread",
]


def _common(cfg: RunConfig, command: str) -> dict:
    return {
        "command": command,
        "version": __version__,
        "seed": int(cfg.seed),
        "jobs": _positive_int(cfg.jobs, "jobs"),
    }


def cmd_kl_sweep(cfg: RunConfig) -> tuple[str, int]:
    policy = LambdaPolicy.parse(cfg.lambda_ if cfg.lambda_ is not None else "1e-3")
    resolved = _common(cfg, "kl-sweep") | {
        "sweep": cfg.sweep,
        "kernel": _kernel_name(cfg.kernel),
        "gamma-grid": _float_list(cfg.gamma_grid) or list(SWEEP_GAMMA_GRID),
        "epsilon-grid": _float_list(cfg.epsilon_grid) or list(MEAN_SHIFT_GRID),
        "lambda": str(policy),
        "n": _positive_int(cfg.n if cfg.n is not None else 2000, "n"),
        "dim": _positive_int(cfg.dim, "dim"),
        "lb-scale": float(cfg.lb_scale),
    }
    rows = kl_sweep(
        kind=resolved["sweep"],
        epsilons=resolved["epsilon-grid"],
        gammas=resolved["gamma-grid"],
        kernel=resolved["kernel"],
        lambda_policy=policy,
        n=resolved["n"],
        dim=resolved["dim"],
        master_seed=resolved["seed"],
        lb_scale=resolved["lb-scale"],
        jobs=resolved["jobs"],
    )
    return render_csv(KL_COLUMNS, rows, resolved), 0


def resolve_mi_settings(cfg: RunConfig, n: int) -> list[MiSetting]:
    """Kernel/gamma/lambda combinations for ``mi-sweep``.

    Without overrides this is the RBF/inverse-polynomial pair from the
    synthetic MI experiment. ``--kernel``/``--gamma-grid`` replace the kernels
    (lambda defaulting to 1e-4); ``--lambda`` or ``--lambda-grid`` replace the
    lambdas, crossing every kernel with every lambda.
    """
    custom_kernels = cfg.kernel is not None or cfg.gamma_grid is not None
    if custom_kernels:
        kname = _kernel_name(cfg.kernel)
        pairs = [(kname, g) for g in (_float_list(cfg.gamma_grid) or [0.3])]
    else:
        pairs = [(s.kernel, s.gamma) for s in DEFAULT_MI_SETTINGS]

    if cfg.lambda_grid is not None:
        lambdas = [LambdaPolicy.parse(v).resolve(n) for v in _float_list(cfg.lambda_grid)]
    elif cfg.lambda_ is not None:
        lambdas = [LambdaPolicy.parse(cfg.lambda_).resolve(n)]
    else:
        lambdas = None

    if lambdas is None:
        if custom_kernels:
            return [MiSetting(k, g, 1e-4) for k, g in pairs]
        return list(DEFAULT_MI_SETTINGS)
    return [MiSetting(k, g, lam) for k, g in pairs for lam in lambdas]


def cmd_mi_sweep(cfg: RunConfig) -> tuple[str, int]:
    n = _positive_int(cfg.n if cfg.n is not None else 4000, "n")
    settings = resolve_mi_settings(cfg, n)
    resolved = _common(cfg, "mi-sweep") | {
        "settings": [s.to_dict() for s in settings],
        "epsilon-grid": _float_list(cfg.epsilon_grid) or list(CROSS_COV_GRID),
        "n": n,
        "dim": _positive_int(cfg.dim, "dim"),
        "lb-scale": float(cfg.lb_scale),
    }
    rows = mi_sweep(
        epsilons=resolved["epsilon-grid"],
        settings=settings,
        n=n,
        dim=resolved["dim"],
        master_seed=resolved["seed"],
        lb_scale=resolved["lb-scale"],
        jobs=resolved["jobs"],
    )
    return render_csv(MI_COLUMNS, rows, resolved), 0


def cmd_convergence(cfg: RunConfig) -> tuple[str, int]:
    policy = LambdaPolicy.parse(cfg.lambda_ if cfg.lambda_ is not None else "decay:0.1")
    resolved = _common(cfg, "convergence") | {
        "kernel": _kernel_name(cfg.kernel),
        "gamma-grid": _float_list(cfg.gamma_grid) or list(DEFAULT_GAMMA_GRID),
        "ub-gamma": float(cfg.ub_gamma) if cfg.ub_gamma is not None else 0.3,
        "lambda": str(policy),
        "lb-sizes": _int_list(cfg.lb_sizes),
        "ub-sizes": _int_list(cfg.ub_sizes),
        "n-seeds": _positive_int(cfg.n_seeds, "n-seeds"),
        "shift": float(cfg.shift),
        "dim": _positive_int(cfg.dim, "dim"),
    }
    rows = convergence(
        lb_sizes=resolved["lb-sizes"],
        ub_sizes=resolved["ub-sizes"],
        n_seeds=resolved["n-seeds"],
        gammas=resolved["gamma-grid"],
        ub_gamma=resolved["ub-gamma"],
        kernel=resolved["kernel"],
        lambda_policy=policy,
        shift=resolved["shift"],
        dim=resolved["dim"],
        master_seed=resolved["seed"],
        jobs=resolved["jobs"],
    )
    return render_csv(CONV_COLUMNS, rows, resolved), 0


def cmd_two_sample(cfg: RunConfig) -> tuple[str, int]:
    if not cfg.file_p or not cfg.file_q:
        raise InputError("two-sample needs two CSV files")
    x = read_samples_csv(cfg.file_p)
    y = read_samples_csv(cfg.file_q)
    if x.shape[1] != y.shape[1]:
        raise InputError(
            f"column mismatch: {cfg.file_p} has {x.shape[1]} columns, {cfg.file_q} has {y.shape[1]}"
        )
    kname = _kernel_name(cfg.kernel)
    policy = LambdaPolicy.parse(cfg.lambda_ if cfg.lambda_ is not None else "1e-3")
    gammas = _float_list(cfg.gamma_grid) or list(DEFAULT_GAMMA_GRID)
    config = EstimatorConfig(
        family=tuple(kernel_spec(kname, g) for g in gammas),
        ub_kernel=kernel_spec(kname, cfg.ub_gamma) if cfg.ub_gamma is not None else None,
        lambda_policy=policy,
    )
    resolved = _common(cfg, "two-sample") | {
        "file-p": cfg.file_p,
        "file-q": cfg.file_q,
        "kernel": kname,
        "gamma-grid": gammas,
        "ub-gamma": cfg.ub_gamma,
        "lambda": str(policy),
        "lb-scale": float(cfg.lb_scale),
    }
    est = kl_bounds(config, x, y, lb_scale=resolved["lb-scale"])
    payload = {"schema": 1, "config": resolved, "estimate": est.to_dict()}
    return render_json(payload), 0


def cmd_verify_discrete(cfg: RunConfig) -> tuple[str, int]:
    kl_bias = 1.0 if cfg.break_chain else 0.0
    resolved = _common(cfg, "verify-discrete") | {"break-chain": bool(cfg.break_chain)}
    p, q = _float_list(cfg.p), _float_list(cfg.q)
    if (p is None) != (q is None):
        raise InputError("give both --p and --q, or neither")
    if p is not None:
        resolved |= {"p": p, "q": q}
        report = verify_chain(p, q, kl_bias=kl_bias).to_dict()
    else:
        resolved |= {
            "pairs": _positive_int(cfg.pairs, "pairs"),
            "k-min": int(cfg.k_min),
            "k-max": int(cfg.k_max),
        }
        report = run_suite(
            n_pairs=resolved["pairs"],
            k_min=resolved["k-min"],
            k_max=resolved["k-max"],
            seed=resolved["seed"],
            kl_bias=kl_bias,
        )
    payload = {"schema": 1, "config": resolved, "report": report}
    status = 0 if report["all_hold"] else VerificationError.exit_code
    return render_json(payload), status


HANDLERS = {
    "kl-sweep": cmd_kl_sweep,
    "mi-sweep": cmd_mi_sweep,
    "convergence": cmd_convergence,
    "two-sample": cmd_two_sample,
    "verify-discrete": cmd_verify_discrete,
}


# --- argument parsing -----------------------------------------------------------------


def _shared_flags(p: argparse.ArgumentParser) -> None:
    S = argparse.SUPPRESS
    p.add_argument("--config", default=S, help="JSON config file (kebab-case keys)")
    p.add_argument("--seed", type=int, default=S, help="master seed")
    p.add_argument("--out", default=S, help="output path (default: stdout)")
    p.add_argument("--jobs", type=int, default=S, help="parallel sweep points")
    p.add_argument("--lambda", dest="lambda_", default=S, help="ridge weight: number or decay:<c>")
    p.add_argument("--gamma-grid", default=S, help="comma-separated kernel gammas")
    p.add_argument("--kernel", choices=("rbf", "invpoly"), default=S)
    p.add_argument("--lb-scale", type=float, default=S, help="display scaling of the lower-bound MMD")
    p.add_argument("-v", "--verbose", action="store_true", default=S)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mmdkl", description="KL-divergence and MI bounds from kernel MMD statistics."
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    S = argparse.SUPPRESS

    p = sub.add_parser("kl-sweep", help="Gaussian KL tracking sweep")
    _shared_flags(p)
    p.add_argument("--sweep", choices=("mean_shift", "cov_scale"), default=S)
    p.add_argument("--epsilon-grid", default=S)
    p.add_argument("--n", type=int, default=S, help="samples per distribution")
    p.add_argument("--dim", type=int, default=S)

    p = sub.add_parser("mi-sweep", help="Gaussian mutual-information tracking sweep")
    _shared_flags(p)
    p.add_argument("--epsilon-grid", default=S)
    p.add_argument("--lambda-grid", default=S, help="hold data fixed and sweep these lambdas")
    p.add_argument("--n", type=int, default=S, help="joint samples")
    p.add_argument("--dim", type=int, default=S, help="dimension of each block")

    p = sub.add_parser("convergence", help="finite-sample convergence trends")
    _shared_flags(p)
    p.add_argument("--lb-sizes", default=S)
    p.add_argument("--ub-sizes", default=S)
    p.add_argument("--n-seeds", type=int, default=S)
    p.add_argument("--shift", type=float, default=S)
    p.add_argument("--ub-gamma", type=float, default=S)
    p.add_argument("--dim", type=int, default=S)

    p = sub.add_parser("two-sample", help="KL bounds between two CSV sample files")
    _shared_flags(p)
    p.add_argument("file_p", help="samples from p, one per row")
    p.add_argument("file_q", help="samples from q, one per row")
    p.add_argument("--ub-gamma", type=float, default=S, help="upper-bound kernel gamma")

    p = sub.add_parser("verify-discrete", help="check the KL/MMD inequalities on finite alphabets")
    _shared_flags(p)
    p.add_argument("--pairs", type=int, default=S)
    p.add_argument("--k-min", type=int, default=S)
    p.add_argument("--k-max", type=int, default=S)
    p.add_argument("--p", default=S, help="comma-separated probabilities of a fixed pair")
    p.add_argument("--q", default=S)
    p.add_argument("--break-chain", action="store_true", default=S, help=argparse.SUPPRESS)
    return parser


def resolve_config(args: argparse.Namespace) -> RunConfig:
    given = dict(vars(args))
    given.pop("command", None)
    given.pop("verbose", None)
    path = given.pop("config", None)
    cfg = RunConfig.from_json(path) if path else RunConfig()
    for name, value in given.items():
        setattr(cfg, name, value)
    return cfg


def run(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if getattr(args, "verbose", False) else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        cfg = resolve_config(args)
        text, status = HANDLERS[args.command](cfg)
        _emit(text, cfg.out)
    except MmdKlError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    return status


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
