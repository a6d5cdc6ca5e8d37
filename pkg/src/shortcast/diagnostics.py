"""Structured warnings collected along the pipeline.

Every warning carries the module that raised it, the column (or input) it
concerns and a remedy hint, so the CLI can write them verbatim to
``diagnostics.txt``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

logger = logging.getLogger("shortcast")


@dataclass(frozen=True)
class Diagnostic:
    module: str
    column: str
    message: str
    hint: str

    def render(self) -> str:
        return f"[{self.module}] {self.column}: {self.message} (hint: {self.hint})"


@dataclass
class Diagnostics:
    items: list[Diagnostic] = field(default_factory=list)

    def warn(self, module: str, column: str, message: str, hint: str) -> Diagnostic:
        d = Diagnostic(module, column, message, hint)
        self.items.append(d)
        logger.info(d.render())
        return d

    def extend(self, other: "Diagnostics") -> None:
        self.items.extend(other.items)

    def for_module(self, module: str) -> list[Diagnostic]:
        return [d for d in self.items if d.module == module]

    def __len__(self) -> int:
        return len(self.items)

    def __iter__(self):
        return iter(self.items)


def ensure(diag: Diagnostics | None) -> Diagnostics:
    return diag if diag is not None else Diagnostics()
