"""Core token-level data model.

A program is linearized into a sequence of token-type symbols; identifiers and
literals never appear, so renaming cannot affect comparison. Frontends that
can analyze the source additionally attach statement groups (reads/writes,
side effects, control nesting), which is what the normalization defense
consumes. Imported token streams carry no groups.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import IntEnum
from typing import Optional


class TokenType(IntEnum):
    """Closed token alphabet. Enum order defines the canonical sort order."""

    FUNC_BEGIN = 1
    FUNC_END = 2
    VARDEF = 3
    ASSIGN = 4
    IF_BEGIN = 5
    ELSE_BEGIN = 6
    IF_END = 7
    LOOP_BEGIN = 8
    LOOP_END = 9
    CALL = 10
    RETURN = 11
    PRINT = 12
    READ = 13
    BLOCK_BEGIN = 14
    BLOCK_END = 15


TOKEN_TAGS = {t.name: t for t in TokenType}


@dataclass(frozen=True)
class Token:
    """One token of the linearized representation.

    stmt_id ties the token to its owning statement group; structural closers
    (FUNC_END, IF_END, ...) and imported tokens carry none.
    """

    type: TokenType
    file_id: str = ""
    line: int = 1
    stmt_id: Optional[int] = None


@dataclass(frozen=True)
class TokenSequence:
    tokens: tuple[Token, ...]
    program_id: str

    @property
    def length(self) -> int:
        return len(self.tokens)

    def type_values(self) -> list[int]:
        return [t.type.value for t in self.tokens]

    def type_names(self) -> list[str]:
        return [t.type.name for t in self.tokens]


class GroupKind(IntEnum):
    """Statement-group categories; controls criticality and linearization."""

    FUNCTION = 1
    IF = 2
    WHILE = 3
    BLOCK = 4
    VARDEF = 5
    ASSIGN = 6
    CALL = 7
    RETURN = 8
    PRINT = 9
    GLOBAL = 10


#: groups that own nested statements
CONTROL_KINDS = frozenset({GroupKind.FUNCTION, GroupKind.IF, GroupKind.WHILE, GroupKind.BLOCK})


@dataclass(frozen=True)
class StatementGroup:
    """Semantic facts about one statement, spanning a contiguous token range.

    ``reads``/``writes`` are aggregates: for control statements they include
    the nested statements' accesses, scoped to what is visible at the group's
    own nesting level (locals of a function never leak to the top level; a
    called function appears as the pseudo-symbol ``fn:<name>``).
    """

    stmt_id: int
    kind: GroupKind
    token_span: tuple[int, int]  # [start, end) indices into the sequence
    reads: frozenset[str]
    writes: frozenset[str]
    side_effecting: bool
    control_parent: Optional[int] = None
    branch: int = 0  # 0 = then/body, 1 = else branch
    has_else: bool = False
    ast_ref: object = field(default=None, compare=False, repr=False)

    @property
    def span_len(self) -> int:
        return self.token_span[1] - self.token_span[0]


@dataclass(frozen=True)
class EnrichedSequence:
    """Token sequence plus statement groups; the unit the TSN defense consumes."""

    sequence: TokenSequence
    groups: tuple[StatementGroup, ...]

    @property
    def has_semantics(self) -> bool:
        return len(self.groups) > 0


@dataclass(frozen=True)
class Program:
    """A submission: one or more source files, or an imported token stream."""

    program_id: str
    files: tuple[tuple[str, str], ...]
    language: str = "minilang"

    def __post_init__(self):
        if not self.files:
            raise ValueError("a program needs at least one file")
        paths = [p for p, _ in self.files]
        if len(set(paths)) != len(paths):
            raise ValueError(f"duplicate file paths in program {self.program_id!r}")

    def line_count(self) -> int:
        return sum(text.count("\n") + (0 if text.endswith("\n") or not text else 1)
                   for _, text in self.files)
