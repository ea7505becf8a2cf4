"""File-backed report repository (JSON documents and CSV tables)."""
from pathlib import Path
from typing import Any, Iterable, Sequence, Union

from loguru import logger

from app.exceptions import ReportError
from app.repositories.interfaces import IReportRepository
from app.utils.report_formatter import canonical_json, format_value


class FileReportRepository(IReportRepository):
    """Writes outputs under one directory, UTF-8 with '\\n' line endings."""

    def __init__(self, output_dir: Union[str, Path]):
        self.output_dir = Path(output_dir)

    def _prepare(self, name: str) -> Path:
        path = self.output_dir / name
        try:
            path.parent.mkdir(parents=True, exist_ok=True)
        except OSError as e:
            logger.error(f"Failed to create output directory {path.parent}: {e}")
            raise ReportError(f"Failed to create output directory {path.parent}: {e}")
        return path

    def write_json(self, name: str, data: Any) -> str:
        """
        Write a JSON document with sorted keys.

        Args:
            name: File name relative to the output directory
            data: JSON-serializable data (no NaN or inf)

        Returns:
            Relative path of the written file

        Raises:
            ReportError: If serialization or writing fails
        """
        path = self._prepare(name)
        try:
            text = canonical_json(data)
            with open(path, "w", encoding="utf-8", newline="\n") as f:
                f.write(text)
        except (OSError, TypeError, ValueError) as e:
            logger.error(f"Failed to write report {path}: {e}")
            raise ReportError(f"Failed to write report {path}: {e}")
        logger.debug(f"Wrote {path}")
        return name

    def write_csv(self, name: str, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> str:
        """
        Write a CSV table.

        Args:
            name: File name relative to the output directory
            header: Column names
            rows: Row values, formatted with format_value

        Returns:
            Relative path of the written file

        Raises:
            ReportError: If a row has the wrong width or writing fails
        """
        path = self._prepare(name)
        lines = [",".join(header)]
        for row in rows:
            if len(row) != len(header):
                raise ReportError(f"{name}: row has {len(row)} cells, header has {len(header)}")
            lines.append(",".join(format_value(v) for v in row))
        try:
            with open(path, "w", encoding="utf-8", newline="\n") as f:
                f.write("\n".join(lines) + "\n")
        except OSError as e:
            logger.error(f"Failed to write table {path}: {e}")
            raise ReportError(f"Failed to write table {path}: {e}")
        logger.debug(f"Wrote {path} ({len(lines) - 1} rows)")
        return name

    def read_text(self, name: str) -> str:
        """Read a written artifact back as text."""
        try:
            return (self.output_dir / name).read_text(encoding="utf-8")
        except OSError as e:
            raise ReportError(f"Failed to read {name}: {e}")
