"""Degrade-and-recover experiments over a cross-product of settings.

A plan is a ``key = value`` text file::

    # one row per (image, fraction, noise, solver)
    seed = 0
    images = shepp_logan:64, piecewise_blocks:64:3, file:knee.pgm
    fractions = 0.2, 0.5
    noise = clean, 20
    solvers = irnn-tv, irnn, tv, nuclear-svt
    constrained = true
    save_images = false
    erase_column = 12
    config.lambda1 = 0.07
    config.max_iterations = 20

``images`` entries are ``<phantom>:<size>[:<phantom seed>]`` or
``file:<path>`` (relative to the plan file). ``noise`` entries are
``clean`` or a target PSNR in dB. ``config.<key>`` lines use the solver
config-file keys. Lists are comma separated.
"""

from __future__ import annotations

import csv
import dataclasses
import io as _io
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigParseError
from .io import atomic_write, config_from_mapping, parse_key_values, read_image, write_image
from .metrics import numerical_rank, psnr
from .problems import PHANTOM_KINDS, degrade, generate_phantom
from .solver import SolverConfig, solve_baseline, solve_constrained, solve_irnn_tv

METHODS = {
    "irnn-tv": None,
    "irnn": "irnn_rank_only",
    "tv": "tv_only",
    "nuclear-svt": "nuclear_svt",
}
# Continuation settings for desk-scale comparisons: a light rank weight, a
# fixed step (subgradient backtracking stalls at the kinks the constrained
# path runs through) and few inner iterations per stage.
BENCHMARK_CONFIG = SolverConfig(
    lambda1_scale=0.01,
    lambda2_scale=0.02,
    backtracking_enabled=False,
    max_iterations=20,
    step_tolerance=1e-8,
)

REPORT_COLUMNS = ("image", "fraction", "noise", "solver", "status", "psnr", "rank", "iterations", "seconds", "error")
TIMING_COLUMNS = ("seconds",)

_PLAN_KEYS = {"seed", "images", "fractions", "noise", "solvers", "constrained", "save_images", "erase_column", "erase_row"}


@dataclass(frozen=True)
class ImageSource:
    label: str
    kind: str  # phantom kind or "file"
    size: int = 0
    seed: int = 0
    path: Path | None = None

    def load(self):
        if self.kind == "file":
            return read_image(self.path)
        return generate_phantom(self.kind, self.size, self.seed)


@dataclass(frozen=True)
class ExperimentPlan:
    images: tuple[ImageSource, ...]
    fractions: tuple[float, ...] = (0.2, 0.5)
    noise: tuple[float | None, ...] = (None,)
    solvers: tuple[str, ...] = tuple(METHODS)
    seed: int = 0
    constrained: bool = True
    save_images: bool = False
    erase_column: int | None = None
    erase_row: int | None = None
    config: SolverConfig = field(default_factory=SolverConfig)

    def cells(self):
        """Degradation cells in report order; each fans out over ``solvers``."""
        out = []
        for image in self.images:
            for fraction in self.fractions:
                for noise in self.noise:
                    out.append((image, fraction, noise))
        return out


def _split(text):
    return [item.strip() for item in text.split(",") if item.strip()]


def _parse_image(entry, base_dir, plan_seed, lineno):
    parts = entry.split(":")
    if parts[0] == "file":
        if len(parts) < 2:
            raise ConfigParseError(f"image entry {entry!r} needs a path", lineno)
        path = Path(":".join(parts[1:]))
        path = path if path.is_absolute() else base_dir / path
        return ImageSource(label=path.stem, kind="file", path=path)
    if parts[0] not in PHANTOM_KINDS or len(parts) not in (2, 3):
        raise ConfigParseError(f"bad image entry {entry!r}", lineno)
    try:
        size = int(parts[1])
        seed = int(parts[2]) if len(parts) == 3 else plan_seed
    except ValueError:
        raise ConfigParseError(f"bad image entry {entry!r}", lineno) from None
    label = f"{parts[0]}{size}" + (f"s{seed}" if len(parts) == 3 else "")
    return ImageSource(label=label, kind=parts[0], size=size, seed=seed)


def parse_plan(text, base_dir="."):
    entries = parse_key_values(text)
    base_dir = Path(base_dir)
    solver_values = {}
    plain = {}
    for key, (value, lineno) in entries.items():
        if key.startswith("config."):
            solver_values[key[len("config.") :]] = value
        elif key in _PLAN_KEYS:
            plain[key] = (value, lineno)
        else:
            raise ConfigParseError(f"unknown key {key!r}", lineno)
    if "images" not in plain:
        raise ConfigParseError("plan must list images", 0)

    def get(key, convert, default):
        if key not in plain:
            return default
        value, lineno = plain[key]
        try:
            return convert(value)
        except ValueError as err:
            raise ConfigParseError(f"{key}: {err}", lineno) from None

    def as_bool(v):
        if v.lower() in ("true", "yes", "on", "1"):
            return True
        if v.lower() in ("false", "no", "off", "0"):
            return False
        raise ValueError(f"not a boolean: {v!r}")

    def as_noise(v):
        return tuple(None if item.lower() == "clean" else float(item) for item in _split(v))

    def as_solvers(v):
        names = tuple(_split(v))
        for name in names:
            if name not in METHODS:
                raise ValueError(f"unknown solver {name!r}; expected one of {list(METHODS)}")
        return names

    seed = get("seed", int, 0)
    images_text, images_line = plain["images"]
    images = tuple(_parse_image(e, base_dir, seed, images_line) for e in _split(images_text))
    return ExperimentPlan(
        images=images,
        fractions=get("fractions", lambda v: tuple(float(x) for x in _split(v)), (0.2, 0.5)),
        noise=get("noise", as_noise, (None,)),
        solvers=get("solvers", as_solvers, tuple(METHODS)),
        seed=seed,
        constrained=get("constrained", as_bool, True),
        save_images=get("save_images", as_bool, False),
        erase_column=get("erase_column", int, None),
        erase_row=get("erase_row", int, None),
        config=config_from_mapping(solver_values),
    )


def read_plan(path):
    path = Path(path)
    return parse_plan(path.read_text(encoding="utf-8"), base_dir=path.parent)


def cell_seed(plan_seed, cell_index):
    return int(np.random.SeedSequence([plan_seed, cell_index]).generate_state(1)[0])


def _noise_label(noise):
    return "clean" if noise is None else f"{noise:g}dB"


def run_solver(method, observed, mask, config, constrained):
    kind = METHODS[method]
    if kind is None:
        if constrained:
            return solve_constrained(observed, mask, config)
        return solve_irnn_tv(observed, mask, config=config)
    return solve_baseline(observed, mask, kind, config, constrained=constrained)


def _run_cell(plan: ExperimentPlan, index, image, fraction, noise, out_dir):
    X = image.load()
    obs = degrade(
        X, fraction, cell_seed(plan.seed, index), noise_psnr=noise, erase_column=plan.erase_column, erase_row=plan.erase_row
    )
    config = plan.config
    if noise is not None and config.residual_threshold is None:
        # stop once the fit is as good as the noise allows
        config = dataclasses.replace(config, residual_threshold=obs.noise_sigma * np.sqrt(obs.mask.sum()))
    rows = []
    for method in plan.solvers:
        row = {"image": image.label, "fraction": repr(fraction), "noise": _noise_label(noise), "solver": method}
        start = time.perf_counter()
        try:
            sol = run_solver(method, obs.observed, obs.mask, config, plan.constrained)
            result = sol.data_consistent if plan.constrained else sol.recovered
            row.update(
                status="ok",
                psnr=f"{psnr(X, result):.6f}",
                rank=str(numerical_rank(result)),
                iterations=str(len(sol.trace)),
                error="",
            )
            if plan.save_images and out_dir is not None:
                name = f"{image.label}_{fraction:g}_{_noise_label(noise)}_{method}.pgm"
                write_image(result, Path(out_dir) / "images" / name)
        except Exception as err:  # one bad cell must not sink the whole sweep
            row.update(status="failed", psnr="", rank="", iterations="", error=f"{type(err).__name__}: {err}")
        row["seconds"] = f"{time.perf_counter() - start:.3f}"
        rows.append(row)
    return rows


def _run_cell_args(args):
    return _run_cell(*args)


def run_experiment(plan: ExperimentPlan, out_dir=None, jobs=1):
    """Run every cell of ``plan``; returns the report rows in plan order.

    With ``out_dir`` the report is written to ``out_dir/report.csv`` (and
    recovered images to ``out_dir/images/`` when ``save_images`` is set).
    """
    if out_dir is not None:
        Path(out_dir).mkdir(parents=True, exist_ok=True)
        if plan.save_images:
            (Path(out_dir) / "images").mkdir(exist_ok=True)
    tasks = [(plan, i, *cell, out_dir) for i, cell in enumerate(plan.cells())]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_run_cell_args, tasks))
    else:
        results = [_run_cell_args(t) for t in tasks]
    rows = [row for cell_rows in results for row in cell_rows]
    if out_dir is not None:
        with atomic_write(Path(out_dir) / "report.csv", "w") as fh:
            fh.write(format_report(rows))
    return rows


def format_report(rows, drop=()):
    buf = _io.StringIO()
    columns = [c for c in REPORT_COLUMNS if c not in drop]
    writer = csv.DictWriter(buf, fieldnames=columns, lineterminator="\n", extrasaction="ignore")
    writer.writeheader()
    writer.writerows(rows)
    return buf.getvalue()


def strip_timing(report_text):
    """Report CSV text with the timing columns removed, for determinism checks."""
    rows = list(csv.DictReader(_io.StringIO(report_text)))
    return format_report(rows, drop=TIMING_COLUMNS)
