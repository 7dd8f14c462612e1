"""Seeded random MiniLang program generator.

Supplies synthetic submission corpora: programs always terminate (loops are
counter-bounded, helper calls form a DAG), never divide by a variable, and
call read() only outside loops so a fixed-length stdin vector always suffices.
A few stereotyped idioms (accumulator loops, guarded swaps) recur across
programs, giving unrelated pairs the low-but-nonzero similarity floor real
student corpora show.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field

from ..tokens import Program
from . import ast
from .render import render_unit

MAX_READS_PER_PROGRAM = 24


@dataclass
class GeneratorConfig:
    min_statements: int = 60
    max_statements: int = 120
    max_depth: int = 3
    max_helpers: int = 3
    read_probability: float = 0.06
    idiom_probability: float = 0.3


@dataclass
class _Scope:
    vars: list[str] = field(default_factory=list)  # definitely-assigned ints
    protected: frozenset = frozenset()  # loop counters, not reassignable


class _Gen:
    def __init__(self, rng: random.Random, config: GeneratorConfig):
        self.rng = rng
        self.config = config
        self.var_counter = 0
        self.stmt_count = 0
        self.read_sites = 0
        self.helpers: list[ast.FunctionDecl] = []
        self.printing_helpers: set[str] = set()

    def fresh(self) -> str:
        name = f"v{self.var_counter}"
        self.var_counter += 1
        return name

    # --- expressions ---

    def gen_expr(self, scope: _Scope, depth: int = 0) -> ast.Expr:
        rng = self.rng
        if depth >= 2 or rng.random() < 0.35:
            if scope.vars and rng.random() < 0.7:
                return ast.Name(rng.choice(scope.vars))
            return ast.IntLit(rng.randint(0, 9))
        roll = rng.random()
        if roll < 0.6:
            op = rng.choice(["+", "-", "*", "+", "-"])
            return ast.Binary(op, self.gen_expr(scope, depth + 1), self.gen_expr(scope, depth + 1))
        if roll < 0.72:
            # divisor is a nonzero literal; variable denominators are never emitted
            op = rng.choice(["/", "%"])
            return ast.Binary(op, self.gen_expr(scope, depth + 1), ast.IntLit(rng.randint(1, 7)))
        if roll < 0.95 and self.helpers:
            helper = rng.choice(self.helpers)
            args = [self.gen_expr(scope, depth + 1) for _ in helper.params]
            return ast.Call(helper.name, args)
        return ast.Unary("-", self.gen_expr(scope, depth + 1))

    def gen_cond(self, scope: _Scope) -> ast.Expr:
        op = self.rng.choice(["<", "<=", ">", ">=", "==", "!="])
        return ast.Binary(op, self.gen_expr(scope, 1), self.gen_expr(scope, 1))

    # --- statements ---

    def gen_body(self, budget: int, depth: int, scope: _Scope, allow_read: bool,
                 allow_loops: bool = True) -> list[ast.Stmt]:
        body: list[ast.Stmt] = []
        while budget > 0:
            stmt, cost = self.gen_stmt(budget, depth, scope, allow_read, allow_loops)
            if stmt is None:
                break
            if isinstance(stmt, list):
                body.extend(stmt)
            else:
                body.append(stmt)
            budget -= cost
        return body

    def gen_stmt(self, budget: int, depth: int, scope: _Scope, allow_read: bool,
                 allow_loops: bool = True):
        rng = self.rng
        weights = [("vardecl", 26), ("print", 12), ("assign", 16 if scope.vars else 0)]
        if budget >= 4 and depth < self.config.max_depth:
            weights.append(("if", 14))
        if allow_loops and budget >= 5 and depth < self.config.max_depth:
            weights.append(("while", 8))
        if self.helpers:
            weights.append(("call", 7))
        if (allow_read and rng.random() < self.config.read_probability
                and self.read_sites < MAX_READS_PER_PROGRAM):
            weights.append(("read", 100))
        if allow_loops and budget >= 6 and rng.random() < self.config.idiom_probability:
            weights.append(("idiom", 40))

        total = sum(w for _, w in weights)
        pick = rng.uniform(0, total)
        acc = 0.0
        kind = weights[-1][0]
        for name, weight in weights:
            acc += weight
            if pick <= acc:
                kind = name
                break

        self.stmt_count += 1
        if kind == "vardecl":
            name = self.fresh()
            stmt = ast.VarDecl("int", name, self.gen_expr(scope))
            scope.vars.append(name)
            return stmt, 1
        if kind == "assign":
            candidates = [v for v in scope.vars if v not in scope.protected]
            if not candidates:
                return ast.Print(self.gen_expr(scope)), 1
            return ast.Assign(rng.choice(candidates), self.gen_expr(scope)), 1
        if kind == "print":
            return ast.Print(self.gen_expr(scope)), 1
        if kind == "read":
            self.read_sites += 1
            name = self.fresh()
            stmt = ast.VarDecl("int", name, ast.Read())
            scope.vars.append(name)
            return stmt, 1
        if kind == "call":
            helper = rng.choice(self.helpers)
            args = [self.gen_expr(scope, 1) for _ in helper.params]
            if helper.name in self.printing_helpers and rng.random() < 0.4:
                return ast.CallStmt(ast.Call(helper.name, args)), 1
            name = self.fresh()
            stmt = ast.VarDecl("int", name, ast.Call(helper.name, args))
            scope.vars.append(name)
            return stmt, 1
        if kind == "if":
            sub = min(budget - 1, rng.randint(2, 6))
            then_scope = _Scope(list(scope.vars), scope.protected)
            then_body = self.gen_body(max(1, sub // 2), depth + 1, then_scope, allow_read, allow_loops)
            else_body = None
            if rng.random() < 0.6:
                else_scope = _Scope(list(scope.vars), scope.protected)
                else_body = self.gen_body(max(1, sub - sub // 2), depth + 1, else_scope,
                                          allow_read, allow_loops)
            cost = 1 + self._count(then_body) + (self._count(else_body) if else_body else 0)
            return ast.If(self.gen_cond(scope), then_body, else_body), cost
        if kind == "while":
            return self._bounded_loop(budget, depth, scope)
        if kind == "idiom":
            return self._idiom(budget, depth, scope)
        raise AssertionError(kind)

    def _bounded_loop(self, budget: int, depth: int, scope: _Scope):
        rng = self.rng
        counter = self.fresh()
        decl = ast.VarDecl("int", counter, ast.IntLit(0))
        bound = rng.randint(2, 6)
        loop_scope = _Scope(list(scope.vars) + [counter], scope.protected | {counter})
        sub = min(budget - 3, rng.randint(1, 4))
        body = self.gen_body(max(1, sub), depth + 1, loop_scope, allow_read=False)
        body.append(ast.Assign(counter, ast.Binary("+", ast.Name(counter), ast.IntLit(1))))
        loop = ast.While(ast.Binary("<", ast.Name(counter), ast.IntLit(bound)), body)
        scope.vars.append(counter)
        return [decl, loop], 3 + self._count(body) - 1

    def _idiom(self, budget: int, depth: int, scope: _Scope):
        """Stereotyped fragments shared across generated programs."""
        rng = self.rng
        if rng.random() < 0.5 and budget >= 7:
            # accumulator loop: acc over a bounded counter, then print
            acc = self.fresh()
            counter = self.fresh()
            bound = rng.randint(3, 6)
            step = ast.Binary("+", ast.Name(acc),
                              ast.Binary("*", ast.Name(counter), ast.IntLit(rng.randint(1, 4))))
            stmts = [
                ast.VarDecl("int", acc, ast.IntLit(0)),
                ast.VarDecl("int", counter, ast.IntLit(0)),
                ast.While(ast.Binary("<", ast.Name(counter), ast.IntLit(bound)), [
                    ast.Assign(acc, step),
                    ast.Assign(counter, ast.Binary("+", ast.Name(counter), ast.IntLit(1))),
                ]),
                ast.Print(ast.Name(acc)),
            ]
            scope.vars.extend([acc, counter])
            return stmts, 7
        if scope.vars and budget >= 4:
            # guarded update: compare two values, adjust the larger
            left = rng.choice(scope.vars)
            name = self.fresh()
            stmts = [
                ast.VarDecl("int", name, self.gen_expr(scope, 1)),
                ast.If(ast.Binary("<", ast.Name(left), ast.Name(name)),
                       [ast.Assign(name, ast.Binary("-", ast.Name(name), ast.Name(left)))],
                       [ast.Assign(name, ast.Binary("+", ast.Name(name), ast.IntLit(1)))]),
            ]
            scope.vars.append(name)
            return stmts, 4
        name = self.fresh()
        stmt = ast.VarDecl("int", name, self.gen_expr(scope))
        scope.vars.append(name)
        return stmt, 1

    @staticmethod
    def _count(body) -> int:
        if not body:
            return 0
        total = 0
        for stmt in body:
            total += 1
            for _, child in ast.child_bodies(stmt):
                total += _Gen._count(child)
        return total

    # --- top level ---

    def gen_helper(self, index: int) -> ast.FunctionDecl:
        rng = self.rng
        params = [ast.Param("int", self.fresh()) for _ in range(rng.randint(1, 2))]
        scope = _Scope([p.ident for p in params])
        # loop-free: helpers may be called from nested loops, keep them O(1)
        body = self.gen_body(rng.randint(2, 5), 1, scope, allow_read=False, allow_loops=False)
        printing = any(isinstance(s, ast.Print) for s in body)
        body.append(ast.Return(self.gen_expr(scope, 1)))
        helper = ast.FunctionDecl(f"h{index}", params, body)
        if printing:
            self.printing_helpers.add(helper.name)
        return helper

    def gen_program(self, program_id: str) -> ast.Unit:
        rng = self.rng
        unit = ast.Unit()
        for i in range(rng.randint(1, self.config.max_helpers)):
            helper = self.gen_helper(i)
            unit.decls.append(helper)
            self.helpers.append(helper)

        target = rng.randint(self.config.min_statements, self.config.max_statements)
        scope = _Scope()
        body = self.gen_body(target, 1, scope, allow_read=True)
        # closing checksum print keeps most of the computation live
        live = scope.vars[-4:]
        if live:
            checksum = ast.Name(live[0])
            for i, name in enumerate(live[1:], start=2):
                checksum = ast.Binary("+", checksum, ast.Binary("*", ast.Name(name), ast.IntLit(i)))
            body.append(ast.Print(checksum))
        unit.decls.append(ast.FunctionDecl("main", [], body))
        return unit


def generate_unit(seed: int, config: GeneratorConfig | None = None) -> ast.Unit:
    gen = _Gen(random.Random(seed), config or GeneratorConfig())
    return gen.gen_program(f"gen{seed}")


def generate_program(seed: int, program_id: str,
                     config: GeneratorConfig | None = None) -> Program:
    unit = generate_unit(seed, config)
    return Program(program_id, ((f"{program_id}.mini", render_unit(unit)),))
