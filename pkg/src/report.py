"""
Run reports emitted by the command-line front end.
"""

import hashlib
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Sequence, Union


def inputs_digest(paths: Sequence[Union[str, Path]]) -> str:
    """SHA-256 over the bytes of the input files, in argument order."""
    digest = hashlib.sha256()
    for path in paths:
        with open(path, "rb") as f:
            digest.update(f.read())
    return digest.hexdigest()


@dataclass
class RunReport:
    """
    One command invocation and its results.

    Attributes:
        command: The argument vector as given
        inputs_sha256: Digest of the input files
        results: JSON-ready results; deterministic for fixed inputs
        timing_seconds: Wall-clock duration, kept out of ``results``
    """

    command: List[str]
    inputs_sha256: str
    results: Dict[str, Any] = field(default_factory=dict)
    timing_seconds: float = 0.0

    @classmethod
    def start(cls, command: Sequence[str]) -> "RunReport":
        """Begin timing a command whose inputs are not known yet."""
        report = cls(list(command), inputs_digest([]))
        report._started = time.perf_counter()
        return report

    def finish(
        self, results: Dict[str, Any], inputs: Sequence[Union[str, Path]] = ()
    ) -> "RunReport":
        self.results = results
        self.inputs_sha256 = inputs_digest(inputs)
        started = getattr(self, "_started", None)
        if started is not None:
            self.timing_seconds = round(time.perf_counter() - started, 6)
        return self

    def to_dict(self) -> Dict[str, Any]:
        return {
            "command": self.command,
            "inputs_sha256": self.inputs_sha256,
            "results": self.results,
            "timing_seconds": self.timing_seconds,
        }
