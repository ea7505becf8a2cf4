"""Command handlers: one per run-file command, dispatched from a registry."""
import time
from typing import Any, Callable, Dict, List, Tuple

import numpy as np
from loguru import logger

from app import __version__
from app.config import LabSettings, RunConfig
from app.defaults_loader import DefaultsLoader
from app.domain.models import GridSpec
from app.domain.reports import RunReport
from app.exceptions import LabException
from app.repositories.interfaces import IReportRepository
from app.services.bridge_sampler import sample_information_path
from app.services.default_law import law_mean
from app.services.energy import capacity_profile
from app.services.hitting import hitting_vs_level_report, nonincreasing_within_ci
from app.services.predictability import announcing_check, predictability_study
from app.services.set_geometry import (
    box_counting_estimate,
    cover_intervals,
    frostman_check,
    hausdorff_dimension_analytic,
)
from app.utils.rng import RandomStreams, StudyTag


HandlerResult = Tuple[Dict[str, Any], List[str]]
Handler = Callable[[RunConfig, LabSettings, IReportRepository, DefaultsLoader], HandlerResult]

# Paths simulated for the announcing-sequence check of an experiment run.
ANNOUNCING_PATHS = 200


def _grid_spec(config: RunConfig, defaults: DefaultsLoader) -> GridSpec:
    grid = defaults.section("grid")
    return GridSpec(
        policy=config.grid_policy,
        n_base=config.n_grid,
        ratio=float(grid["ratio"]),
        spacing_floor=float(grid["spacing_floor"]),
    )


def _chunk_size(defaults: DefaultsLoader) -> int:
    return int(defaults.get("sampling", "chunk_size"))


def handle_simulate(config: RunConfig, settings: LabSettings, repo: IReportRepository,
                    defaults: DefaultsLoader) -> HandlerResult:
    """Simulate information paths, export them and check the zero-set identity."""
    streams = RandomStreams(config.seed)
    spec = _grid_spec(config, defaults)
    rows = []
    violations = 0
    taus = []
    for i in range(config.n_paths):
        path = sample_information_path(config.law, spec, streams.stream(StudyTag.SIMULATE, i))
        times = path.grid.times
        is_zero = path.values == 0.0
        after = path.after_tau
        violations += int(np.count_nonzero((is_zero != after) & (times > 0)))
        taus.append(path.tau)
        rows.extend((i, t, v, a) for t, v, a in zip(times.tolist(), path.values.tolist(), after.tolist()))

    artifact = repo.write_csv("paths.csv", ("path", "t", "value", "is_after_tau"), rows)
    outputs = {
        "n_paths": config.n_paths,
        "grid_policy": config.grid_policy.value,
        "zero_set_violations": violations,
        "tau_mean": float(np.mean(taus)),
        "law_mean": law_mean(config.law),
    }
    return outputs, [artifact]


def handle_capacity(config: RunConfig, settings: LabSettings, repo: IReportRepository,
                    defaults: DefaultsLoader) -> HandlerResult:
    """Energy/capacity profile over levels, dimensions and cover listings."""
    target = config.target
    reports = capacity_profile(target, config.s, config.levels, config.tolerance, config.max_iter)
    energy_csv = repo.write_csv(
        "energy.csv",
        ("k", "n_intervals", "min_energy", "capacity"),
        [(r.level, r.n_intervals, r.energy, r.capacity) for r in reports],
    )
    cover_rows = []
    if not target.is_empty:
        for k in config.levels:
            cover_rows.extend(cover_intervals(target, k).rows())
    covers_csv = repo.write_csv("covers.csv", ("level", "left", "right"), cover_rows)

    box = None
    if not target.is_empty and target.is_bounded:
        scales = config.scales or tuple(defaults.box_scales())
        box = box_counting_estimate(target, scales).to_dict()

    energies = [r.energy for r in reports]
    outputs = {
        "levels": [r.to_dict() for r in reports],
        "energy_strictly_increasing": all(b > a for a, b in zip(energies, energies[1:])),
        "dimension": hausdorff_dimension_analytic(target) if not target.is_empty else 0.0,
        "frostman_polar": frostman_check(target) if not target.is_empty else True,
        "box_counting": box,
    }
    return outputs, [energy_csv, covers_csv]


def handle_hitting(config: RunConfig, settings: LabSettings, repo: IReportRepository,
                   defaults: DefaultsLoader) -> HandlerResult:
    """Bridge hitting estimates across levels."""
    streams = RandomStreams(config.seed)
    rows = hitting_vs_level_report(
        config.target, config.r, config.levels, config.n_paths, streams,
        chunk_size=_chunk_size(defaults), workers=settings.workers,
    )
    artifact = repo.write_csv(
        "hitting.csv",
        ("level", "n_intervals", "n_paths", "estimate", "ci_halfwidth", "seed"),
        [(r.level, r.n_intervals, r.n_paths, r.estimate, r.half_width, r.seed) for r in rows],
    )
    outputs = {
        "r": config.r,
        "levels": [r.to_dict() for r in rows],
        "nonincreasing": nonincreasing_within_ci([r.estimate for r in rows], [r.half_width for r in rows]),
    }
    return outputs, [artifact]


def handle_experiment(config: RunConfig, settings: LabSettings, repo: IReportRepository,
                      defaults: DefaultsLoader) -> HandlerResult:
    """Predictability study with per-atom breakdown and announcing-sequence check."""
    streams = RandomStreams(config.seed)
    report = predictability_study(
        config.law, config.levels, config.n_paths, streams,
        threshold=config.threshold, chunk_size=_chunk_size(defaults), workers=settings.workers,
        margin=config.pin_margin,
    )
    summary_csv = repo.write_csv(
        "summary.csv",
        ("level", "n_cells", "n_paths", "n_strict", "estimate", "ci_halfwidth"),
        [(r.level, r.n_cells, r.n_paths, r.n_strict, r.estimate, r.half_width) for r in report.rows],
    )
    artifacts = [summary_csv]
    if report.atoms:
        artifacts.append(repo.write_csv(
            "atoms.csv",
            ("atom", "weight", "n_joint", "joint_estimate", "conditional_estimate", "conditional_ci_halfwidth"),
            [(a.atom, a.weight, a.n_joint, a.joint_estimate, a.conditional.estimate, a.conditional.half_width)
             for a in report.atoms],
        ))

    announcing = announcing_check(
        config.law, config.levels[-1], min(config.n_paths, ANNOUNCING_PATHS), streams,
        spec=_grid_spec(config, defaults), depth=int(defaults.get("geometry", "cantor_depth")),
        margin=config.pin_margin,
    )
    outputs = report.to_dict()
    outputs["announcing"] = announcing.to_dict()
    return outputs, artifacts


COMMANDS: Dict[str, Handler] = {
    "simulate": handle_simulate,
    "capacity": handle_capacity,
    "hitting": handle_hitting,
    "experiment": handle_experiment,
}


def run(config: RunConfig, settings: LabSettings, repo: IReportRepository,
        defaults: DefaultsLoader) -> RunReport:
    """
    Execute a run file and write report.json plus the command's tables.

    Args:
        config: Validated run config
        settings: Environment settings
        repo: Output repository
        defaults: Numerical defaults

    Returns:
        RunReport (wall time kept out of the written JSON)

    Raises:
        LabException: Module errors, or unexpected failures wrapped with the command name
    """
    handler = COMMANDS[config.command]
    logger.info(f"Running '{config.command}' (seed {config.seed}, hash {config.config_hash[:12]})")
    started = time.monotonic()
    try:
        outputs, artifacts = handler(config, settings, repo, defaults)
    except LabException as e:
        logger.error(f"Command '{config.command}' failed: {e}")
        raise
    except Exception as e:
        logger.opt(exception=True).error(f"Command '{config.command}' failed unexpectedly: {e}")
        raise LabException(f"{config.command}: {e}") from e

    report = RunReport(
        command=config.command,
        config_hash=config.config_hash,
        version=__version__,
        config=config.echo(),
        outputs=outputs,
        artifacts=artifacts,
        wall_time=time.monotonic() - started,
    )
    repo.write_json("report.json", report.to_dict())
    logger.info(f"'{config.command}' finished in {report.wall_time:.1f}s; artifacts: {', '.join(artifacts)}")
    return report
