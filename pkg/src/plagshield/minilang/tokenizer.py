"""MiniLang tokenization: source programs to enriched token sequences.

Identifiers and literals are dropped entirely, so renaming never changes the
token list. Statement-level tokens (the head token plus in-statement CALL/READ
tokens) belong to exactly one statement group; structural closers carry no
group. Block tokens are emitted for function bodies and bare block statements;
if/while bodies are already delimited by their own begin/end tokens.
"""

from __future__ import annotations

from ..errors import MiniLangSyntaxError
from ..tokens import (EnrichedSequence, GroupKind, Program, StatementGroup,
                      Token, TokenSequence, TokenType)
from . import ast
from .analysis import ProgramFacts, analyze_units, expr_callees, expr_has_read, expr_reads
from .parser import parse_minilang


def parse_program(program: Program) -> list[tuple[str, ast.Unit]]:
    if program.language != "minilang":
        raise MiniLangSyntaxError(f"program {program.program_id!r} is not minilang", 1, 1)
    return [(path, parse_minilang(text)) for path, text in program.files]


class _Emitter:
    def __init__(self, facts: ProgramFacts):
        self.facts = facts
        self.tokens: list[Token] = []
        self.groups: list[StatementGroup] = []
        self.file_id = ""
        self.next_id = 0

    def _gid(self) -> int:
        gid = self.next_id
        self.next_id += 1
        return gid

    def _tok(self, ttype: TokenType, line: int, stmt_id=None) -> None:
        self.tokens.append(Token(ttype, self.file_id, line, stmt_id))

    def _expr_tokens(self, expr: ast.Expr, stmt_id: int) -> None:
        """Pre-order CALL/READ tokens of an expression."""
        for node in ast.walk_exprs(expr):
            if isinstance(node, ast.Call):
                self._tok(TokenType.CALL, node.line, stmt_id)
            elif isinstance(node, ast.Read):
                self._tok(TokenType.READ, node.line, stmt_id)

    def _expr_side_effecting(self, expr: ast.Expr) -> bool:
        if expr_has_read(expr):
            return True
        return any(self.facts.call_is_side_effecting(c) for c in expr_callees(expr))

    def emit_unit(self, file_id: str, unit: ast.Unit) -> None:
        self.file_id = file_id
        for decl in unit.decls:
            if isinstance(decl, ast.GlobalDecl):
                self._emit_global(decl)
            else:
                self._emit_function(decl)

    def _emit_global(self, decl: ast.GlobalDecl) -> None:
        gid = self._gid()
        start = len(self.tokens)
        self._tok(TokenType.VARDEF, decl.line, gid)
        self.groups.append(StatementGroup(
            stmt_id=gid, kind=GroupKind.GLOBAL, token_span=(start, len(self.tokens)),
            reads=frozenset(), writes=frozenset({decl.ident}),
            side_effecting=False, control_parent=None, ast_ref=decl))

    def _emit_function(self, decl: ast.FunctionDecl) -> None:
        gid = self._gid()
        start = len(self.tokens)
        self._tok(TokenType.FUNC_BEGIN, decl.line, gid)
        self._tok(TokenType.BLOCK_BEGIN, decl.line, gid)
        group_index = len(self.groups)
        self.groups.append(None)  # placeholder, fixed up below
        body_reads, body_writes, body_se = self._emit_body(decl.body, gid)
        self._tok(TokenType.BLOCK_END, decl.line)
        self._tok(TokenType.FUNC_END, decl.line)

        # only globals and function symbols are visible outside the function
        visible = self.facts.global_names
        reads = {r for r in body_reads if r in visible or r.startswith("fn:")}
        self.groups[group_index] = StatementGroup(
            stmt_id=gid, kind=GroupKind.FUNCTION, token_span=(start, start + 2),
            reads=frozenset(reads), writes=frozenset({f"fn:{decl.name}"}),
            side_effecting=decl.name in self.facts.side_effecting_fns,
            control_parent=None, ast_ref=decl)

    def _emit_body(self, body: list[ast.Stmt], parent: int,
                   branch: int = 0) -> tuple[set[str], set[str], bool]:
        """Emit a statement list; returns aggregate (reads, writes, side_effecting)."""
        agg_reads: set[str] = set()
        agg_writes: set[str] = set()
        agg_se = False
        for stmt in body:
            r, w, se = self._emit_stmt(stmt, parent, branch)
            agg_reads |= r
            agg_writes |= w
            agg_se = agg_se or se
        return agg_reads, agg_writes, agg_se

    def _stmt_own_facts(self, stmt: ast.Stmt) -> tuple[set[str], set[str], bool]:
        reads: set[str] = set()
        se = False
        for e in ast.stmt_exprs(stmt):
            reads |= expr_reads(e)
            reads |= {f"fn:{c}" for c in expr_callees(e)}
            se = se or self._expr_side_effecting(e)
        writes: set[str] = set()
        if isinstance(stmt, (ast.VarDecl,)):
            writes.add(stmt.ident)
        elif isinstance(stmt, ast.Assign):
            writes.add(stmt.ident)
        if isinstance(stmt, ast.Print):
            se = True
        return reads, writes, se

    def _emit_stmt(self, stmt: ast.Stmt, parent: int,
                   branch: int) -> tuple[set[str], set[str], bool]:
        gid = self._gid()
        start = len(self.tokens)
        reads, writes, se = self._stmt_own_facts(stmt)

        if isinstance(stmt, ast.VarDecl):
            self._tok(TokenType.VARDEF, stmt.line, gid)
            if stmt.init is not None:
                self._expr_tokens(stmt.init, gid)
            kind = GroupKind.VARDEF
        elif isinstance(stmt, ast.Assign):
            self._tok(TokenType.ASSIGN, stmt.line, gid)
            self._expr_tokens(stmt.value, gid)
            kind = GroupKind.ASSIGN
        elif isinstance(stmt, ast.CallStmt):
            self._expr_tokens(stmt.call, gid)  # emits CALL for the call itself first
            kind = GroupKind.CALL
        elif isinstance(stmt, ast.Return):
            self._tok(TokenType.RETURN, stmt.line, gid)
            if stmt.value is not None:
                self._expr_tokens(stmt.value, gid)
            kind = GroupKind.RETURN
        elif isinstance(stmt, ast.Print):
            self._tok(TokenType.PRINT, stmt.line, gid)
            self._expr_tokens(stmt.value, gid)
            kind = GroupKind.PRINT
        elif isinstance(stmt, ast.If):
            self._tok(TokenType.IF_BEGIN, stmt.line, gid)
            self._expr_tokens(stmt.cond, gid)
            head_end = len(self.tokens)
            group_index = len(self.groups)
            self.groups.append(None)
            r0, w0, se0 = self._emit_body(stmt.then_body, gid, 0)
            if stmt.else_body is not None:
                self._tok(TokenType.ELSE_BEGIN, stmt.line)
                r1, w1, se1 = self._emit_body(stmt.else_body, gid, 1)
                r0, w0, se0 = r0 | r1, w0 | w1, se0 or se1
            self._tok(TokenType.IF_END, stmt.line)
            self.groups[group_index] = StatementGroup(
                stmt_id=gid, kind=GroupKind.IF, token_span=(start, head_end),
                reads=frozenset(reads | r0), writes=frozenset(writes | w0),
                side_effecting=se or se0, control_parent=parent, branch=branch,
                has_else=stmt.else_body is not None, ast_ref=stmt)
            return reads | r0, writes | w0, se or se0
        elif isinstance(stmt, ast.While):
            self._tok(TokenType.LOOP_BEGIN, stmt.line, gid)
            self._expr_tokens(stmt.cond, gid)
            head_end = len(self.tokens)
            group_index = len(self.groups)
            self.groups.append(None)
            r0, w0, se0 = self._emit_body(stmt.body, gid, 0)
            self._tok(TokenType.LOOP_END, stmt.line)
            self.groups[group_index] = StatementGroup(
                stmt_id=gid, kind=GroupKind.WHILE, token_span=(start, head_end),
                reads=frozenset(reads | r0), writes=frozenset(writes | w0),
                side_effecting=se or se0, control_parent=parent, branch=branch,
                ast_ref=stmt)
            return reads | r0, writes | w0, se or se0
        elif isinstance(stmt, ast.BlockStmt):
            self._tok(TokenType.BLOCK_BEGIN, stmt.line, gid)
            head_end = len(self.tokens)
            group_index = len(self.groups)
            self.groups.append(None)
            r0, w0, se0 = self._emit_body(stmt.body, gid, 0)
            self._tok(TokenType.BLOCK_END, stmt.line)
            self.groups[group_index] = StatementGroup(
                stmt_id=gid, kind=GroupKind.BLOCK, token_span=(start, head_end),
                reads=frozenset(r0), writes=frozenset(w0),
                side_effecting=se0, control_parent=parent, branch=branch, ast_ref=stmt)
            return r0, w0, se0
        else:
            raise TypeError(f"unknown statement {stmt!r}")

        self.groups.append(StatementGroup(
            stmt_id=gid, kind=kind, token_span=(start, len(self.tokens)),
            reads=frozenset(reads), writes=frozenset(writes),
            side_effecting=se, control_parent=parent, branch=branch, ast_ref=stmt))
        return reads, writes, se


def tokenize_units(program_id: str, units: list[tuple[str, ast.Unit]]) -> EnrichedSequence:
    facts = analyze_units([u for _, u in units])
    emitter = _Emitter(facts)
    for path, unit in units:
        emitter.emit_unit(path, unit)
    seq = TokenSequence(tuple(emitter.tokens), program_id)
    return EnrichedSequence(seq, tuple(emitter.groups))


def tokenize(program: Program) -> EnrichedSequence:
    """Tokenize a MiniLang program; deterministic and rename-invariant."""
    return tokenize_units(program.program_id, parse_program(program))
