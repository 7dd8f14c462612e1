"""Red-team obfuscation generators.

Three attack families over MiniLang programs:

* exhaustive dead-statement insertion: one dead statement at every legal
  statement boundary; inserted statements write only fresh variables and may
  read whatever is definitely assigned at the insertion point.
* threshold-driven insertion: hill-descent loop proposing random dead
  insertions against a configured detector variant, keeping a proposal iff
  the reported similarity does not increase, until the target threshold or
  the iteration cap is hit.
* refactoring: behavior-preserving structural rewrites (if/else swap with
  condition inversion, expression extraction, constant extraction into a
  global, dead function insertion, block wrapping) applied at seeded random
  positions.

Every emitted program must pass an interpreter-equivalence battery (32 seeded
stdin vectors plus all-zero and boundary vectors); a failure aborts emission.
"""

from __future__ import annotations

import copy
import random
import time
from dataclasses import dataclass, field
from typing import Optional

from .detector import DefenseConfig, compare_prepared, sequence_for
from .errors import BehaviorChanged
from .matcher import MatchParams, prepare
from .minilang import ast
from .minilang.render import render_unit
from .minilang.tokenizer import parse_program
from .tokens import Program

BATTERY_VECTOR_LEN = 64
BATTERY_RANDOM_VECTORS = 32
BATTERY_STEP_BUDGET = 500_000

REFACTOR_OPS = ("swap_if_else", "extract_expr_var", "extract_constant",
                "insert_dead_function", "wrap_in_block")


@dataclass(frozen=True)
class ObfuscationRecipe:
    kind: str  # insertion_exhaustive | insertion_threshold | refactoring | llm
    seed: int = 0
    intensity: int = 0
    threshold: float = 0.0
    op_whitelist: tuple[str, ...] = REFACTOR_OPS

    def __post_init__(self):
        if self.kind == "insertion_threshold" and not (0 < self.threshold <= 100):
            raise ValueError("threshold must lie in (0, 100]")
        unknown = set(self.op_whitelist) - set(REFACTOR_OPS)
        if unknown:
            raise ValueError(f"unknown refactoring ops: {sorted(unknown)}")


@dataclass
class AttackTrace:
    recipe: ObfuscationRecipe
    source_id: str
    output_id: str
    iterations: int = 0
    inserted_statements: int = 0
    similarity_trajectory: list[float] = field(default_factory=list)
    wall_time: float = 0.0
    size_growth: float = 0.0
    outcome: str = "ok"  # ok | reached_threshold | max_iters
    ops_applied: int = 0
    ops_skipped: int = 0

    def to_record(self) -> dict:
        return {
            "kind": self.recipe.kind,
            "seed": self.recipe.seed,
            "intensity": self.recipe.intensity,
            "threshold": self.recipe.threshold,
            "source_id": self.source_id,
            "output_id": self.output_id,
            "iterations": self.iterations,
            "inserted_statements": self.inserted_statements,
            "similarity_trajectory": self.similarity_trajectory,
            "size_growth": self.size_growth,
            "outcome": self.outcome,
            "ops_applied": self.ops_applied,
            "ops_skipped": self.ops_skipped,
        }


# --- interpreter battery ---

def make_battery(seed: int) -> list[list[int]]:
    rng = random.Random(seed ^ 0x5EED)
    vectors = [[rng.randint(-9, 9) for _ in range(BATTERY_VECTOR_LEN)]
               for _ in range(BATTERY_RANDOM_VECTORS)]
    vectors.append([0] * BATTERY_VECTOR_LEN)
    boundary = [1_000_000 if k % 2 == 0 else -1_000_000 for k in range(BATTERY_VECTOR_LEN)]
    vectors.append(boundary)
    return vectors


def verify_equivalent(original: Program, attacked: Program, seed: int) -> None:
    """Interpreter-equivalence on the battery; raises BehaviorChanged."""
    from .minilang.interpreter import run_trace
    for vector in make_battery(seed):
        before = run_trace(original, vector, BATTERY_STEP_BUDGET)
        after = run_trace(attacked, vector, 4 * BATTERY_STEP_BUDGET)
        if before != after:
            raise BehaviorChanged(
                f"{attacked.program_id}: output diverged from {original.program_id} "
                f"on stdin {vector[:4]}...")


# --- shared AST machinery ---

def _collect_idents(units: list[ast.Unit]) -> set[str]:
    names: set[str] = set()
    for unit in units:
        for decl in unit.decls:
            if isinstance(decl, ast.GlobalDecl):
                names.add(decl.ident)
            else:
                names.add(decl.name)
                names.update(p.ident for p in decl.params)
                for stmt in _walk_stmts(decl.body):
                    if isinstance(stmt, (ast.VarDecl, ast.Assign)):
                        names.add(stmt.ident)
    return names


def _walk_stmts(body: list[ast.Stmt]):
    for stmt in body:
        yield stmt
        for _, child in ast.child_bodies(stmt):
            yield from _walk_stmts(child)


class _FreshNames:
    def __init__(self, taken: set[str], prefix: str):
        self.taken = set(taken)
        self.prefix = prefix
        self.counter = 0

    def next(self) -> str:
        while True:
            name = f"{self.prefix}{self.counter}"
            self.counter += 1
            if name not in self.taken:
                self.taken.add(name)
                return name


@dataclass
class _Boundary:
    body: list[ast.Stmt]
    index: int
    available: tuple[str, ...]  # definitely-assigned int variables, sorted


def _boundaries(units: list[ast.Unit], global_ints: tuple[str, ...]) -> list[_Boundary]:
    """Every legal insertion point, with the ints surely assigned there."""
    found: list[_Boundary] = []

    def walk(body: list[ast.Stmt], available: list[str]) -> None:
        avail = list(available)
        for idx, stmt in enumerate(body):
            found.append(_Boundary(body, idx, tuple(sorted(avail))))
            for _, child in ast.child_bodies(stmt):
                walk(child, avail)
            if isinstance(stmt, ast.VarDecl) and stmt.type_name == "int":
                avail.append(stmt.ident)
        found.append(_Boundary(body, len(body), tuple(sorted(avail))))

    for unit in units:
        for decl in unit.functions:
            params = [p.ident for p in decl.params if p.type_name == "int"]
            walk(decl.body, list(global_ints) + params)
    return found


def _int_globals(units: list[ast.Unit]) -> tuple[str, ...]:
    return tuple(sorted(d.ident for u in units for d in u.globals if d.type_name == "int"))


# --- dead statement pool ---

def _pure_int_expr(expr: ast.Expr) -> bool:
    """No reads, no calls, no division: safe to evaluate anywhere, crash-free."""
    for node in ast.walk_exprs(expr):
        if isinstance(node, (ast.Read, ast.Call)):
            return False
        if isinstance(node, ast.Binary) and node.op in ("/", "%"):
            return False
    return True


def _harvest_pool(units: list[ast.Unit]) -> list[ast.Expr]:
    """Pure right-hand sides lifted from the victim program."""
    pool: list[ast.Expr] = []
    for unit in units:
        for decl in unit.functions:
            for stmt in _walk_stmts(decl.body):
                expr = None
                if isinstance(stmt, ast.VarDecl):
                    expr = stmt.init
                elif isinstance(stmt, ast.Assign):
                    expr = stmt.value
                if expr is not None and _pure_int_expr(expr) and not isinstance(expr, ast.IntLit):
                    pool.append(expr)
    return pool


def _template_statement(rng: random.Random, template: int, avail: tuple[str, ...],
                        fresh: str) -> ast.VarDecl:
    """One of 20 built-in dead statement templates, writing only `fresh`."""
    def var() -> ast.Expr:
        if avail:
            return ast.Name(rng.choice(avail))
        return ast.IntLit(rng.randint(0, 9))

    def lit(lo=0, hi=9) -> ast.IntLit:
        return ast.IntLit(rng.randint(lo, hi))

    builders = [
        lambda: lit(),
        lambda: ast.Binary("+", lit(), lit()),
        lambda: ast.Binary("+", var(), lit()),
        lambda: ast.Binary("*", var(), lit(1, 5)),
        lambda: ast.Binary("-", var(), var()),
        lambda: ast.Binary("*", ast.Binary("+", var(), var()), lit(1, 3)),
        lambda: ast.Binary("%", var(), lit(1, 7)),
        lambda: ast.Binary("/", var(), lit(1, 7)),
        lambda: ast.Unary("-", var()),
        lambda: var(),
        lambda: ast.Binary("-", lit(), var()),
        lambda: ast.Binary("+", ast.Binary("+", var(), var()), lit()),
        lambda: ast.Binary("*", ast.Binary("-", var(), lit(1, 4)), ast.Binary("+", var(), lit())),
        lambda: ast.Binary("*", lit(1, 6), lit(1, 6)),
        lambda: ast.Binary("*", var(), var()),
        lambda: ast.Binary("<", var(), lit()),
        lambda: ast.Binary("==", var(), var()),
        lambda: ast.Binary("%", ast.Binary("+", var(), lit()), lit(1, 5)),
        lambda: ast.Binary("+", ast.Binary("*", var(), lit(1, 4)), var()),
        lambda: ast.Binary("-", ast.Binary("*", var(), var()), lit()),
    ]
    expr = builders[template % len(builders)]()
    type_name = "bool" if template % len(builders) in (15, 16) else "int"
    return ast.VarDecl(type_name, fresh, expr)


def _dead_statement(rng: random.Random, avail: tuple[str, ...], fresh: str,
                    harvested: list[ast.Expr]) -> ast.VarDecl:
    usable = [e for e in harvested
              if {n.ident for n in ast.walk_exprs(e) if isinstance(n, ast.Name)} <= set(avail)]
    if usable and rng.random() < 0.4:
        return ast.VarDecl("int", fresh, copy.deepcopy(rng.choice(usable)))
    return _template_statement(rng, rng.randrange(20), avail, fresh)


def _render_program(program_id: str, paths: list[str], units: list[ast.Unit]) -> Program:
    return Program(program_id,
                   tuple((path, render_unit(unit)) for path, unit in zip(paths, units)))


def _rendered_line_count(units: list[ast.Unit]) -> int:
    return sum(render_unit(u).count("\n") for u in units)


# --- insertion attacks ---

def insert_dead_exhaustive(program: Program, seed: int,
                           output_id: Optional[str] = None) -> tuple[Program, AttackTrace]:
    """Insert one dead statement at every legal statement boundary."""
    recipe = ObfuscationRecipe("insertion_exhaustive", seed=seed)
    started = time.perf_counter()
    parsed = parse_program(program)
    paths = [p for p, _ in parsed]
    units = copy.deepcopy([u for _, u in parsed])
    original_lines = _rendered_line_count(units)

    rng = random.Random(seed)
    fresh = _FreshNames(_collect_idents(units), "_d")
    harvested = _harvest_pool(units)
    bounds = _boundaries(units, _int_globals(units))

    planned: list[tuple[list, int, ast.VarDecl]] = []
    for boundary in bounds:
        stmt = _dead_statement(rng, boundary.available, fresh.next(), harvested)
        planned.append((boundary.body, boundary.index, stmt))
    # insert bottom-up per body so indices collected earlier stay valid
    for body, index, stmt in sorted(planned, key=lambda t: -t[1]):
        body.insert(index, stmt)

    out_id = output_id or f"{program.program_id}+ins"
    attacked = _render_program(out_id, paths, units)
    verify_equivalent(program, attacked, seed)

    trace = AttackTrace(
        recipe=recipe, source_id=program.program_id, output_id=out_id,
        iterations=len(planned), inserted_statements=len(planned),
        wall_time=time.perf_counter() - started,
        size_growth=100.0 * (_rendered_line_count(units) - original_lines)
        / max(1, original_lines))
    return attacked, trace


def insert_dead_threshold(program: Program, detector_config: DefenseConfig,
                          threshold: float, seed: int, max_iters: int = 400,
                          params: MatchParams = MatchParams(),
                          output_id: Optional[str] = None) -> tuple[Program, AttackTrace]:
    """Hill-descent insertion against a live detector variant.

    Keeps a proposed insertion iff the similarity to the original, as reported
    by the configured detector, does not increase. Terminates at the target
    threshold or after max_iters proposals (best-effort output, flagged).
    """
    recipe = ObfuscationRecipe("insertion_threshold", seed=seed, threshold=threshold)
    started = time.perf_counter()
    parsed = parse_program(program)
    paths = [p for p, _ in parsed]
    units = copy.deepcopy([u for _, u in parsed])
    original_lines = _rendered_line_count(units)

    seq_orig, _ = sequence_for(program, detector_config)
    prep_orig = prepare(seq_orig, "a")

    rng = random.Random(seed)
    fresh = _FreshNames(_collect_idents(units), "_d")
    harvested = _harvest_pool(units)
    out_id = output_id or f"{program.program_id}+thr"

    def current_similarity() -> float:
        candidate = _render_program(out_id, paths, units)
        seq, _ = sequence_for(candidate, detector_config)
        result = compare_prepared(prep_orig, prepare(seq, "b"), params, detector_config)
        return result.similarity

    trace = AttackTrace(recipe=recipe, source_id=program.program_id, output_id=out_id)
    similarity = current_similarity()
    trace.similarity_trajectory.append(similarity)
    while similarity > threshold and trace.iterations < max_iters:
        trace.iterations += 1
        bounds = _boundaries(units, _int_globals(units))
        boundary = rng.choice(bounds)
        stmt = _dead_statement(rng, boundary.available, fresh.next(), harvested)
        boundary.body.insert(boundary.index, stmt)
        proposed = current_similarity()
        if proposed > similarity + 1e-9:
            del boundary.body[boundary.index]
            continue
        similarity = proposed
        trace.inserted_statements += 1
        trace.similarity_trajectory.append(similarity)

    trace.outcome = "reached_threshold" if similarity <= threshold else "max_iters"
    attacked = _render_program(out_id, paths, units)
    verify_equivalent(program, attacked, seed)
    trace.wall_time = time.perf_counter() - started
    trace.size_growth = (100.0 * (_rendered_line_count(units) - original_lines)
                         / max(1, original_lines))
    return attacked, trace


# --- refactoring attack ---

class _NoSite(Exception):
    pass


def _stmt_sites(units: list[ast.Unit]) -> list[tuple[list, int, ast.Stmt]]:
    sites = []
    for unit in units:
        for decl in unit.functions:
            stack = [decl.body]
            while stack:
                body = stack.pop()
                for idx, stmt in enumerate(body):
                    sites.append((body, idx, stmt))
                    for _, child in ast.child_bodies(stmt):
                        stack.append(child)
    return sites


def _apply_swap_if_else(units, rng, fresh_vars, fresh_fns, fresh_globals) -> None:
    candidates = [s for _, _, s in _stmt_sites(units)
                  if isinstance(s, ast.If) and s.else_body is not None]
    if not candidates:
        raise _NoSite
    target = rng.choice(candidates)
    target.cond = ast.Unary("!", target.cond, line=target.line)
    target.then_body, target.else_body = target.else_body, target.then_body


def _extractable_subexprs(expr: ast.Expr, guarded: bool = False) -> list[ast.Expr]:
    """Compound pure subexpressions whose evaluation is unconditional."""
    out: list[ast.Expr] = []
    if isinstance(expr, (ast.Binary, ast.Unary)) and not guarded and _pure_int_expr(expr):
        out.append(expr)
    if isinstance(expr, ast.Unary):
        out.extend(_extractable_subexprs(expr.operand, guarded))
    elif isinstance(expr, ast.Binary):
        short_circuit = expr.op in ("&&", "||")
        out.extend(_extractable_subexprs(expr.left, guarded))
        out.extend(_extractable_subexprs(expr.right, guarded or short_circuit))
    elif isinstance(expr, ast.Call):
        for arg in expr.args:
            out.extend(_extractable_subexprs(arg, guarded))
    return out


def _replace_subexpr(container: ast.Stmt, target: ast.Expr, replacement: ast.Expr) -> bool:
    def swap_in(node) -> bool:
        for attr in ("init", "value", "cond", "operand", "left", "right", "call"):
            if getattr(node, attr, None) is target:
                setattr(node, attr, replacement)
                return True
        if isinstance(node, (ast.Call,)):
            for i, arg in enumerate(node.args):
                if arg is target:
                    node.args[i] = replacement
                    return True
        return False

    if swap_in(container):
        return True
    for expr in ast.stmt_exprs(container):
        for node in ast.walk_exprs(expr):
            if swap_in(node):
                return True
    return False


def _apply_extract_expr_var(units, rng, fresh_vars, fresh_fns, fresh_globals) -> None:
    sites = []
    for body, idx, stmt in _stmt_sites(units):
        if isinstance(stmt, (ast.While,)):
            continue  # loop conditions re-evaluate; hoisting would change behavior
        for expr in ast.stmt_exprs(stmt):
            for sub in _extractable_subexprs(expr):
                sites.append((body, idx, stmt, sub))
    if not sites:
        raise _NoSite
    body, idx, stmt, sub = rng.choice(sites)
    name = fresh_vars.next()
    is_bool = isinstance(sub, ast.Binary) and sub.op in ("<", "<=", ">", ">=", "==", "!=", "&&", "||")
    is_bool = is_bool or (isinstance(sub, ast.Unary) and sub.op == "!")
    decl = ast.VarDecl("bool" if is_bool else "int", name, sub, line=stmt.line)
    if not _replace_subexpr(stmt, sub, ast.Name(name, line=stmt.line)):
        raise _NoSite
    body.insert(idx, decl)


def _apply_extract_constant(units, rng, fresh_vars, fresh_fns, fresh_globals) -> None:
    sites = []
    for _, _, stmt in _stmt_sites(units):
        for expr in ast.stmt_exprs(stmt):
            for node in ast.walk_exprs(expr):
                if isinstance(node, ast.IntLit):
                    sites.append((stmt, node))
    if not sites:
        raise _NoSite
    stmt, literal = rng.choice(sites)
    name = fresh_globals.next()
    unit = rng.choice(units)
    if not _replace_subexpr(stmt, literal, ast.Name(name, line=stmt.line)):
        raise _NoSite
    unit.decls.insert(0, ast.GlobalDecl("int", name, ast.IntLit(literal.value)))


def _apply_insert_dead_function(units, rng, fresh_vars, fresh_fns, fresh_globals) -> None:
    name = fresh_fns.next()
    param = fresh_vars.next()
    local = fresh_vars.next()
    body = [
        ast.VarDecl("int", local,
                    ast.Binary("*", ast.Name(param), ast.IntLit(rng.randint(1, 5)))),
        ast.Return(ast.Binary("+", ast.Name(local), ast.IntLit(rng.randint(0, 9)))),
    ]
    decl = ast.FunctionDecl(name, [ast.Param("int", param)], body)
    unit = rng.choice(units)
    position = rng.randint(0, len(unit.decls))
    unit.decls.insert(position, decl)


def _apply_wrap_in_block(units, rng, fresh_vars, fresh_fns, fresh_globals) -> None:
    sites = [(body, idx, stmt) for body, idx, stmt in _stmt_sites(units)
             if not isinstance(stmt, ast.BlockStmt)]
    if not sites:
        raise _NoSite
    body, idx, stmt = rng.choice(sites)
    body[idx] = ast.BlockStmt([stmt], line=stmt.line)


_OP_APPLIERS = {
    "swap_if_else": _apply_swap_if_else,
    "extract_expr_var": _apply_extract_expr_var,
    "extract_constant": _apply_extract_constant,
    "insert_dead_function": _apply_insert_dead_function,
    "wrap_in_block": _apply_wrap_in_block,
}


def refactor_obfuscate(program: Program, recipe: ObfuscationRecipe,
                       output_id: Optional[str] = None) -> tuple[Program, AttackTrace]:
    """Apply `intensity` seeded refactoring operations from the whitelist."""
    if recipe.kind != "refactoring":
        raise ValueError(f"recipe kind {recipe.kind!r} is not 'refactoring'")
    started = time.perf_counter()
    out_id = output_id or f"{program.program_id}+ref"
    trace = AttackTrace(recipe=recipe, source_id=program.program_id, output_id=out_id)

    if recipe.intensity == 0:
        trace.output_id = program.program_id
        trace.wall_time = time.perf_counter() - started
        return program, trace

    parsed = parse_program(program)
    paths = [p for p, _ in parsed]
    units = copy.deepcopy([u for _, u in parsed])
    original_lines = _rendered_line_count(units)

    rng = random.Random(recipe.seed)
    taken = _collect_idents(units)
    fresh_vars = _FreshNames(taken, "_e")
    fresh_fns = _FreshNames(fresh_vars.taken, "_u")
    fresh_globals = _FreshNames(fresh_vars.taken, "_c")

    for _ in range(recipe.intensity):
        trace.iterations += 1
        op = rng.choice(recipe.op_whitelist)
        try:
            _OP_APPLIERS[op](units, rng, fresh_vars, fresh_fns, fresh_globals)
            trace.ops_applied += 1
        except _NoSite:
            trace.ops_skipped += 1

    attacked = _render_program(out_id, paths, units)
    verify_equivalent(program, attacked, recipe.seed)
    trace.wall_time = time.perf_counter() - started
    trace.size_growth = (100.0 * (_rendered_line_count(units) - original_lines)
                         / max(1, original_lines))
    return attacked, trace
