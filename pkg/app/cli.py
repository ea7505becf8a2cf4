"""Command-line entry point: python -m app.cli --config run.json"""
import argparse
import sys
from pathlib import Path
from typing import List, Optional

from loguru import logger

from app import __version__
from app.config import LabSettings, load_config
from app.defaults_loader import get_defaults_loader
from app.exceptions import ConfigurationError, LabException
from app.handlers.commands import run
from app.repositories.report_repository import FileReportRepository


EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_RUNTIME = 3


def setup_logging(settings: LabSettings):
    """Setup logging configuration."""
    # Remove default handler
    logger.remove()

    logger.add(
        sys.stderr,
        format="<green>{time:YYYY-MM-DD HH:mm:ss}</green> | <level>{level: <8}</level> | <cyan>{name}</cyan>:<cyan>{function}</cyan> - <level>{message}</level>",
        level=settings.log_level,
    )

    log_file_path = Path(settings.log_file)
    log_file_path.parent.mkdir(parents=True, exist_ok=True)

    logger.add(
        settings.log_file,
        format="{time:YYYY-MM-DD HH:mm:ss} | {level: <8} | {name}:{function} - {message}",
        level=settings.log_level,
        rotation="10 MB",
        retention="7 days",
        compression="zip",
    )

    logger.info("Logging configured")


def build_parser() -> argparse.ArgumentParser:
    """Command-line flags; flags override run-file values."""
    parser = argparse.ArgumentParser(prog="app.cli", description="Default predictability lab")
    parser.add_argument("--config", required=True, help="JSON run file")
    parser.add_argument("--seed", type=int, help="master seed override (unsigned 64-bit)")
    parser.add_argument("--out", help="output directory override")
    parser.add_argument("--paths", type=int, help="n_paths override")
    parser.add_argument("--level", type=int, help="run a single cover level")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    """Run one command; returns the process exit code."""
    args = build_parser().parse_args(argv)

    try:
        settings = LabSettings.from_env()
        setup_logging(settings)
        defaults = get_defaults_loader(settings.defaults_file)
        config = load_config(args.config, defaults).with_overrides(
            seed=args.seed, output_dir=args.out, n_paths=args.paths, level=args.level,
        )
        repo = FileReportRepository(config.output_dir)
        run(config, settings, repo, defaults)
    except ConfigurationError as e:
        logger.opt(exception=True).error(f"Configuration error: {e}")
        return EXIT_CONFIG
    except LabException as e:
        logger.opt(exception=True).error(f"Run failed: {e}")
        return EXIT_RUNTIME
    except Exception as e:
        logger.opt(exception=True).error(f"Lab crashed: {e}")
        return EXIT_RUNTIME
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
