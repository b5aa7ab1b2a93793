"""
Per-item diagnostics for batch commands.

Turns exceptions into Diagnostic records and collects the outcome of every
item so a command can print one table and exit non-zero iff anything failed.
"""

import logging
from typing import Dict, List, Optional

from rich.console import Console
from rich.table import Table

from fractomatch.errors import (
    CalibrationError,
    DegenerateFitError,
    FractomatchError,
    HeightMapError,
    ModelFormatError,
    ShapeMismatchError,
)
from fractomatch.models import Diagnostic, Severity

logger = logging.getLogger("fractomatch.audit")


class ErrorHandler:
    """Classifies errors raised while processing one item."""

    _SEVERITY_BY_TYPE: Dict[type, Severity] = {
        HeightMapError: Severity.MEDIUM,
        ShapeMismatchError: Severity.HIGH,
        ModelFormatError: Severity.HIGH,
        DegenerateFitError: Severity.HIGH,
        CalibrationError: Severity.HIGH,
    }

    def analyze_error(self, item: str, error: BaseException) -> Diagnostic:
        """
        Build the diagnostic for a failed item.

        Args:
            item: File name or pair id the error belongs to
            error: The exception that occurred

        Returns:
            Diagnostic with severity and a hint
        """
        return Diagnostic(
            item=item,
            ok=False,
            error_type=type(error).__name__,
            message=str(error),
            severity=self._classify_severity(error),
            hint=self._hint(error),
        )

    def _classify_severity(self, error: BaseException) -> Severity:
        if isinstance(error, (KeyboardInterrupt, MemoryError)):
            return Severity.CRITICAL
        for error_type, severity in self._SEVERITY_BY_TYPE.items():
            if isinstance(error, error_type):
                return severity
        if isinstance(error, FractomatchError):
            return Severity.MEDIUM
        if isinstance(error, (FileNotFoundError, PermissionError)):
            return Severity.HIGH
        return Severity.LOW

    def _hint(self, error: BaseException) -> Optional[str]:
        if isinstance(error, FractomatchError):
            return error.hint
        if isinstance(error, FileNotFoundError):
            return "Check that the file path is correct"
        if isinstance(error, PermissionError):
            return "Check file and directory permissions"
        return None


class DiagnosticCollector:
    """Outcome of every item of one batch command."""

    def __init__(self, handler: Optional[ErrorHandler] = None):
        self.handler = handler or ErrorHandler()
        self.records: List[Diagnostic] = []

    def success(self, item: str, message: str = "") -> Diagnostic:
        record = Diagnostic(item=item, ok=True, message=message)
        self.records.append(record)
        return record

    def failure(self, item: str, error: BaseException) -> Diagnostic:
        record = self.handler.analyze_error(item, error)
        self.records.append(record)
        logger.error("%s: %s: %s", item, record.error_type, record.message)
        return record

    @property
    def failures(self) -> List[Diagnostic]:
        return [record for record in self.records if not record.ok]

    @property
    def exit_code(self) -> int:
        return 1 if self.failures else 0

    def render(self, console: Console, title: str = "Diagnostics") -> None:
        if not self.failures:
            return
        table = Table(title=title)
        table.add_column("Item", style="cyan")
        table.add_column("Error", style="red")
        table.add_column("Message")
        table.add_column("Hint", style="dim")
        for record in self.failures:
            table.add_row(record.item, record.error_type or "", record.message, record.hint or "")
        console.print(table)
