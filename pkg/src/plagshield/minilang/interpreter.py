"""Deterministic tree-walking interpreter for MiniLang.

Execution is bounded by a step budget (statements and expression nodes both
count), so the attack generators can machine-check behavior preservation
without risking divergence. Division and modulo truncate toward zero.
"""

from __future__ import annotations

import re

from ..errors import InputExhausted, MiniLangRuntimeError, StepBudgetExceeded
from ..tokens import Program
from . import ast
from .tokenizer import parse_program

DEFAULT_STEP_BUDGET = 10_000_000


class _ReturnSignal(Exception):
    def __init__(self, value):
        self.value = value


class Interpreter:
    def __init__(self, units: list[ast.Unit], step_budget: int = DEFAULT_STEP_BUDGET):
        self.functions: dict[str, ast.FunctionDecl] = {}
        self.globals: dict[str, object] = {}
        for unit in units:
            for decl in unit.decls:
                if isinstance(decl, ast.FunctionDecl):
                    if decl.name in self.functions:
                        raise MiniLangRuntimeError(f"duplicate function {decl.name!r}")
                    self.functions[decl.name] = decl
                else:
                    if decl.ident in self.globals:
                        raise MiniLangRuntimeError(f"duplicate global {decl.ident!r}")
                    self.globals[decl.ident] = self._literal(decl.init)
        self.budget = step_budget
        self.steps = 0
        self.stdin: list = []
        self.stdin_pos = 0
        self.output: list = []

    @staticmethod
    def _literal(expr: ast.Expr):
        if isinstance(expr, ast.IntLit):
            return expr.value
        if isinstance(expr, ast.BoolLit):
            return expr.value
        raise MiniLangRuntimeError("global initializer must be a literal")

    def run(self, stdin: list[int]) -> list:
        if "main" not in self.functions:
            raise MiniLangRuntimeError("program has no main function")
        self.stdin = list(stdin)
        self.stdin_pos = 0
        self.output = []
        self.steps = 0
        self._call("main", [])
        return self.output

    def _tick(self):
        self.steps += 1
        if self.steps > self.budget:
            raise StepBudgetExceeded(f"exceeded step budget of {self.budget}")

    def _call(self, name: str, args: list):
        fn = self.functions.get(name)
        if fn is None:
            raise MiniLangRuntimeError(f"call to undefined function {name!r}")
        if len(args) != len(fn.params):
            raise MiniLangRuntimeError(
                f"{name}() expects {len(fn.params)} arguments, got {len(args)}")
        frame = {p.ident: v for p, v in zip(fn.params, args)}
        try:
            self._exec_body(fn.body, frame)
        except _ReturnSignal as sig:
            return sig.value
        return 0

    def _exec_body(self, body: list[ast.Stmt], frame: dict):
        for stmt in body:
            self._exec(stmt, frame)

    def _exec(self, stmt: ast.Stmt, frame: dict):
        self._tick()
        if isinstance(stmt, ast.VarDecl):
            frame[stmt.ident] = self._eval(stmt.init, frame) if stmt.init is not None else 0
        elif isinstance(stmt, ast.Assign):
            value = self._eval(stmt.value, frame)
            if stmt.ident in frame:
                frame[stmt.ident] = value
            elif stmt.ident in self.globals:
                raise MiniLangRuntimeError(f"cannot assign to constant {stmt.ident!r}")
            else:
                raise MiniLangRuntimeError(f"assignment to undeclared variable {stmt.ident!r}")
        elif isinstance(stmt, ast.If):
            if self._eval(stmt.cond, frame):
                self._exec_body(stmt.then_body, frame)
            elif stmt.else_body is not None:
                self._exec_body(stmt.else_body, frame)
        elif isinstance(stmt, ast.While):
            while self._eval(stmt.cond, frame):
                self._exec_body(stmt.body, frame)
                self._tick()
        elif isinstance(stmt, ast.CallStmt):
            self._eval(stmt.call, frame)
        elif isinstance(stmt, ast.Return):
            raise _ReturnSignal(self._eval(stmt.value, frame) if stmt.value is not None else 0)
        elif isinstance(stmt, ast.Print):
            self.output.append(self._eval(stmt.value, frame))
        elif isinstance(stmt, ast.BlockStmt):
            self._exec_body(stmt.body, frame)
        else:
            raise TypeError(f"unknown statement {stmt!r}")

    def _eval(self, expr: ast.Expr, frame: dict):
        self._tick()
        if isinstance(expr, ast.IntLit):
            return expr.value
        if isinstance(expr, ast.BoolLit):
            return expr.value
        if isinstance(expr, ast.Name):
            if expr.ident in frame:
                return frame[expr.ident]
            if expr.ident in self.globals:
                return self.globals[expr.ident]
            raise MiniLangRuntimeError(f"unbound variable {expr.ident!r} (line {expr.line})")
        if isinstance(expr, ast.Read):
            if self.stdin_pos >= len(self.stdin):
                raise InputExhausted("read() with no remaining input")
            value = self.stdin[self.stdin_pos]
            self.stdin_pos += 1
            return value
        if isinstance(expr, ast.Call):
            args = [self._eval(a, frame) for a in expr.args]
            return self._call(expr.callee, args)
        if isinstance(expr, ast.Unary):
            value = self._eval(expr.operand, frame)
            return (not value) if expr.op == "!" else -value
        if isinstance(expr, ast.Binary):
            if expr.op == "&&":
                return bool(self._eval(expr.left, frame)) and bool(self._eval(expr.right, frame))
            if expr.op == "||":
                return bool(self._eval(expr.left, frame)) or bool(self._eval(expr.right, frame))
            left = self._eval(expr.left, frame)
            right = self._eval(expr.right, frame)
            return self._binop(expr.op, left, right, expr.line)
        raise TypeError(f"unknown expression {expr!r}")

    @staticmethod
    def _binop(op: str, left, right, line: int):
        if op == "+":
            return left + right
        if op == "-":
            return left - right
        if op == "*":
            return left * right
        if op in ("/", "%"):
            if right == 0:
                raise MiniLangRuntimeError(f"division by zero (line {line})")
            quotient = abs(left) // abs(right)
            if (left < 0) != (right < 0):
                quotient = -quotient
            return quotient if op == "/" else left - right * quotient
        if op == "<":
            return left < right
        if op == "<=":
            return left <= right
        if op == ">":
            return left > right
        if op == ">=":
            return left >= right
        if op == "==":
            return left == right
        if op == "!=":
            return left != right
        raise MiniLangRuntimeError(f"unknown operator {op!r}")


def interpret(program: Program, stdin: list[int],
              step_budget: int = DEFAULT_STEP_BUDGET) -> list:
    """Run a MiniLang program on a stdin vector; returns printed values."""
    units = [u for _, u in parse_program(program)]
    return Interpreter(units, step_budget).run(stdin)


def run_trace(program: Program, stdin: list[int],
              step_budget: int = DEFAULT_STEP_BUDGET) -> tuple[tuple, str]:
    """Outputs plus an error tag; lets callers compare behavior including failures."""
    units = [u for _, u in parse_program(program)]
    interp = Interpreter(units, step_budget)
    try:
        return tuple(interp.run(stdin)), ""
    except StepBudgetExceeded:
        return tuple(interp.output), "step_budget"
    except InputExhausted:
        return tuple(interp.output), "input_exhausted"
    except MiniLangRuntimeError as exc:
        # line positions shift under transformation; they are not behavior
        return tuple(interp.output), "runtime:" + re.sub(r" \(line \d+\)", "", str(exc))
