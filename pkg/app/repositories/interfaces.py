"""Abstract interfaces for report persistence."""
from abc import ABC, abstractmethod
from typing import Any, Iterable, Sequence


class IReportRepository(ABC):
    """Interface for writing run outputs."""

    @abstractmethod
    def write_json(self, name: str, data: Any) -> str:
        """Write a JSON document; returns its path relative to the output directory."""
        pass

    @abstractmethod
    def write_csv(self, name: str, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> str:
        """Write a CSV table with a header row; returns its relative path."""
        pass

    @abstractmethod
    def read_text(self, name: str) -> str:
        """Read back a written artifact."""
        pass
