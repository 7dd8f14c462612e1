"""MiniLang abstract syntax tree.

MiniLang: functions over int/bool variables with if/else, while, bare blocks,
calls, print/read, and optional top-level constant declarations. Small enough
for a sound interpreter, rich enough to express every refactoring attack.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Union


# --- expressions ---

@dataclass
class IntLit:
    value: int
    line: int = 1


@dataclass
class BoolLit:
    value: bool
    line: int = 1


@dataclass
class Name:
    ident: str
    line: int = 1


@dataclass
class Read:
    line: int = 1


@dataclass
class Call:
    callee: str
    args: list["Expr"]
    line: int = 1


@dataclass
class Unary:
    op: str  # "!" or "-"
    operand: "Expr"
    line: int = 1


@dataclass
class Binary:
    op: str
    left: "Expr"
    right: "Expr"
    line: int = 1


Expr = Union[IntLit, BoolLit, Name, Read, Call, Unary, Binary]


# --- statements ---

@dataclass
class VarDecl:
    type_name: str  # "int" or "bool"
    ident: str
    init: Optional[Expr]
    line: int = 1


@dataclass
class Assign:
    ident: str
    value: Expr
    line: int = 1


@dataclass
class If:
    cond: Expr
    then_body: list["Stmt"]
    else_body: Optional[list["Stmt"]]
    line: int = 1


@dataclass
class While:
    cond: Expr
    body: list["Stmt"]
    line: int = 1


@dataclass
class CallStmt:
    call: Call
    line: int = 1


@dataclass
class Return:
    value: Optional[Expr]
    line: int = 1


@dataclass
class Print:
    value: Expr
    line: int = 1


@dataclass
class BlockStmt:
    body: list["Stmt"]
    line: int = 1


Stmt = Union[VarDecl, Assign, If, While, CallStmt, Return, Print, BlockStmt]


@dataclass
class Param:
    type_name: str
    ident: str


@dataclass
class FunctionDecl:
    name: str
    params: list[Param]
    body: list[Stmt]
    line: int = 1


@dataclass
class GlobalDecl:
    """Top-level constant: literal initializer only, never reassigned."""

    type_name: str
    ident: str
    init: Expr
    line: int = 1


@dataclass
class Unit:
    """One parsed source file: globals and functions in source order."""

    decls: list[Union[FunctionDecl, GlobalDecl]] = field(default_factory=list)

    @property
    def functions(self) -> list[FunctionDecl]:
        return [d for d in self.decls if isinstance(d, FunctionDecl)]

    @property
    def globals(self) -> list[GlobalDecl]:
        return [d for d in self.decls if isinstance(d, GlobalDecl)]


def walk_exprs(expr: Expr):
    """Yield expr and every sub-expression, pre-order."""
    yield expr
    if isinstance(expr, Unary):
        yield from walk_exprs(expr.operand)
    elif isinstance(expr, Binary):
        yield from walk_exprs(expr.left)
        yield from walk_exprs(expr.right)
    elif isinstance(expr, Call):
        for a in expr.args:
            yield from walk_exprs(a)


def stmt_exprs(stmt: Stmt) -> list[Expr]:
    """Top-level expressions owned directly by a statement (no nesting into bodies)."""
    if isinstance(stmt, VarDecl):
        return [stmt.init] if stmt.init is not None else []
    if isinstance(stmt, Assign):
        return [stmt.value]
    if isinstance(stmt, If):
        return [stmt.cond]
    if isinstance(stmt, While):
        return [stmt.cond]
    if isinstance(stmt, CallStmt):
        return [stmt.call]
    if isinstance(stmt, Return):
        return [stmt.value] if stmt.value is not None else []
    if isinstance(stmt, Print):
        return [stmt.value]
    return []


def child_bodies(stmt: Stmt) -> list[tuple[int, list[Stmt]]]:
    """(branch, body) pairs for statements that nest other statements."""
    if isinstance(stmt, If):
        out = [(0, stmt.then_body)]
        if stmt.else_body is not None:
            out.append((1, stmt.else_body))
        return out
    if isinstance(stmt, While):
        return [(0, stmt.body)]
    if isinstance(stmt, BlockStmt):
        return [(0, stmt.body)]
    return []
