"""
Command-line entry point.

Exit codes: 0 success, 2 configuration error, 3 solver non-convergence,
4 I/O error. Diagnostics go to stderr; data goes to files (and stdout for
``steady`` and a bare ``preset``).
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path
from typing import Optional, Sequence

from eit_bistability.backend.base import BaseCacheBackend
from eit_bistability.backend.memory import InMemoryCacheBackend
from eit_bistability.bloch import DensityState, steady_state, weak_probe_spectrum
from eit_bistability.cavity import CavityMode, hysteresis_scan
from eit_bistability.config import (
    ConfigError,
    RunConfig,
    apply_overrides,
    dump_config,
    load_config,
)
from eit_bistability.curves import trace_ob_curve
from eit_bistability.exceptions import SimulationError, SweepSpecError
from eit_bistability.presets import PRESET_NAMES, describe_presets, preset_config
from eit_bistability.serializer import dumps_pretty
from eit_bistability.sweep import SweepSpec, run_sweep
from eit_bistability.writers import (
    hysteresis_summary,
    write_curve,
    write_hysteresis,
    write_json,
    write_spectrum,
    write_sweep,
)

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_SOLVER = 3
EXIT_IO = 4


def _build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("-c", "--config", type=Path, help="INI run configuration")
    common.add_argument(
        "--set",
        dest="overrides",
        action="append",
        default=[],
        metavar="SECTION.KEY=VALUE",
        help="override a config value (repeatable)",
    )
    common.add_argument("-o", "--output-dir", type=Path, help="directory for artifacts")
    common.add_argument(
        "-v", "--verbose", action="count", default=0, help="-v info, -vv debug"
    )

    parser = argparse.ArgumentParser(
        prog="eit-bistability",
        description="Optical bistability of a Lambda-type EIT medium with NDD interaction.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    steady = sub.add_parser("steady", parents=[common], help="atomic steady state")
    steady.add_argument("--omega-p", type=float, help="probe Rabi frequency")

    sub.add_parser("spectrum", parents=[common], help="weak-probe response spectrum")

    curve = sub.add_parser("curve", parents=[common], help="trace one input-output curve")
    curve.add_argument("--mode", choices=[m.value for m in CavityMode])

    hyst = sub.add_parser("hysteresis", parents=[common], help="adiabatic input scan")
    hyst.add_argument("--one-way", action="store_true", help="scan up only")

    sweep = sub.add_parser("sweep", parents=[common], help="parameter sweep")
    sweep.add_argument("--preset", choices=PRESET_NAMES, help="start from a preset instead of -c")
    sweep.add_argument("--workers", type=int, help="worker processes")
    sweep.add_argument("--cache", help="'memory' or a redis:// URL")
    sweep.add_argument("--curves", action="store_true", help="also write every curve")

    preset = sub.add_parser("preset", parents=[common], help="list or emit presets")
    preset.add_argument("name", nargs="?", choices=PRESET_NAMES)

    return parser


def _configure_logging(verbosity: int) -> None:
    level = logging.WARNING
    if verbosity == 1:
        level = logging.INFO
    elif verbosity >= 2:
        level = logging.DEBUG
    logging.basicConfig(
        level=level,
        stream=sys.stderr,
        format="%(levelname)s %(name)s: %(message)s",
    )


def _resolve_config(args: argparse.Namespace, base: Optional[RunConfig] = None) -> RunConfig:
    cfg = base if base is not None else (
        load_config(args.config) if args.config is not None else RunConfig()
    )
    overrides = list(args.overrides)
    if args.output_dir is not None:
        overrides.append(f"output.directory={args.output_dir}")
    return apply_overrides(cfg, overrides)


def _output_dir(cfg: RunConfig) -> Path:
    return Path(cfg.output.directory)


def _state_summary(state: DensityState) -> dict[str, object]:
    return {
        "d21": state.d21,
        "d23": state.d23,
        "rho11": state.rho11,
        "rho22": state.rho22,
        "rho33": state.rho33,
        "rho21": state.rho21,
        "rho23": state.rho23,
        "rho31": state.rho31,
    }


def _cmd_steady(args: argparse.Namespace) -> int:
    cfg = _resolve_config(args)
    drive = cfg.drive_params(omega_p=args.omega_p)
    state = steady_state(cfg.atom_params(), drive, options=cfg.solver_options())
    summary = _state_summary(state)
    write_json(_output_dir(cfg) / "steady.json", {**summary, "config": cfg.model_dump(mode="json")})
    print(dumps_pretty(summary))
    return EXIT_OK


def _cmd_spectrum(args: argparse.Namespace) -> int:
    cfg = _resolve_config(args)
    delta = cfg.delta_grid()
    response = weak_probe_spectrum(cfg.atom_params(), cfg.omega_c, delta)
    write_spectrum(_output_dir(cfg) / "spectrum.csv", delta, response)
    return EXIT_OK


def _cmd_curve(args: argparse.Namespace) -> int:
    cfg = _resolve_config(args)
    if args.mode is not None:
        cfg = apply_overrides(cfg, [f"cavity.mode={args.mode}"])
    curve = trace_ob_curve(
        cfg.atom_params(),
        cfg.omega_c,
        cfg.cavity_params(),
        cfg.x_grid(),
        options=cfg.solver_options(),
    )
    out = _output_dir(cfg)
    write_curve(out / "curve.csv", curve, out / "curve.json", cfg)
    return EXIT_OK


def _cmd_hysteresis(args: argparse.Namespace) -> int:
    cfg = _resolve_config(args)
    h = cfg.hysteresis
    scan = hysteresis_scan(
        cfg.atom_params(),
        cfg.omega_c,
        cfg.cavity_params(),
        cfg.y_ramp(),
        up_then_down=not args.one_way,
        damping=h.damping,
        tol=h.tol,
        max_iter=h.max_iter,
        options=cfg.solver_options(),
    )
    out = _output_dir(cfg)
    write_hysteresis(out / "hysteresis.csv", scan)
    for jump in hysteresis_summary(scan)["jumps"]:
        logger.info("jump: %s", jump)
    return EXIT_OK


def _cache_backend(spec: str) -> BaseCacheBackend:
    if spec == "memory":
        return InMemoryCacheBackend()
    if spec.startswith(("redis://", "rediss://", "unix://")):
        try:
            from eit_bistability.backend.redis import RedisCacheBackend
        except ImportError as exc:
            raise ConfigError(
                "redis cache requested but redis is not installed "
                "(pip install 'eit-bistability[redis]')"
            ) from exc
        return RedisCacheBackend.from_url(spec)
    raise ConfigError(f"--cache must be 'memory' or a redis:// URL, got {spec!r}")


def _cmd_sweep(args: argparse.Namespace) -> int:
    base = preset_config(args.preset) if args.preset else None
    cfg = _resolve_config(args, base)
    if not cfg.axes and cfg.sweep.preset:
        preset = preset_config(cfg.sweep.preset)
        cfg = apply_overrides(
            cfg, [f"axes.{path}={', '.join(map(repr, values))}" for path, values in preset.axes.items()]
        )
    if args.curves and "curve" not in cfg.sweep.outputs:
        cfg = apply_overrides(cfg, [f"sweep.outputs={', '.join((*cfg.sweep.outputs, 'curve'))}"])
    workers = args.workers if args.workers is not None else cfg.sweep.parallelism
    cache = _cache_backend(args.cache) if args.cache else None

    spec = SweepSpec.from_config(cfg)
    result = run_sweep(spec, workers, cache=cache)
    write_sweep(_output_dir(cfg), result, write_curves="curve" in spec.outputs)
    if result.failures:
        logger.warning("%d of %d sweep point(s) failed", len(result.failures), len(result.records))
    return EXIT_OK


def _cmd_preset(args: argparse.Namespace) -> int:
    if args.name is None:
        for name, description in describe_presets().items():
            print(f"{name}\t{description}")
        return EXIT_OK
    cfg = _resolve_config(args, preset_config(args.name))
    path = _output_dir(cfg) / f"preset_{args.name}.ini"
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(dump_config(cfg), encoding="utf-8")
    logger.info("wrote %s", path)
    return EXIT_OK


_COMMANDS = {
    "steady": _cmd_steady,
    "spectrum": _cmd_spectrum,
    "curve": _cmd_curve,
    "hysteresis": _cmd_hysteresis,
    "sweep": _cmd_sweep,
    "preset": _cmd_preset,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    _configure_logging(args.verbose)

    try:
        return _COMMANDS[args.command](args)
    except (ConfigError, SweepSpecError) as exc:
        logger.error("configuration error: %s", exc)
        return EXIT_CONFIG
    except SimulationError as exc:
        logger.error("solver failed: %s", exc)
        return EXIT_SOLVER
    except OSError as exc:
        logger.error("I/O error: %s", exc)
        return EXIT_IO
    except ValueError as exc:
        logger.error("invalid parameters: %s", exc)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
