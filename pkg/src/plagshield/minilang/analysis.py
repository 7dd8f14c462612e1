"""Language-independent semantic facts: reads/writes, side effects, call graph.

Side-effect analysis is a transitive closure over the call graph; every
function on a call-graph cycle is conservatively marked side-effecting
(a recursive call may diverge, so a "dead" call to it is not removable).
"""

from __future__ import annotations

from dataclasses import dataclass

from . import ast


def expr_reads(expr: ast.Expr) -> set[str]:
    """Variable names read by an expression (no fn: symbols)."""
    return {e.ident for e in ast.walk_exprs(expr) if isinstance(e, ast.Name)}


def expr_callees(expr: ast.Expr) -> set[str]:
    return {e.callee for e in ast.walk_exprs(expr) if isinstance(e, ast.Call)}


def expr_has_read(expr: ast.Expr) -> bool:
    return any(isinstance(e, ast.Read) for e in ast.walk_exprs(expr))


def _body_callees(body: list[ast.Stmt]) -> set[str]:
    out: set[str] = set()
    for stmt in body:
        for e in ast.stmt_exprs(stmt):
            out |= expr_callees(e)
        for _, child in ast.child_bodies(stmt):
            out |= _body_callees(child)
    return out


def _body_has_io(body: list[ast.Stmt]) -> bool:
    for stmt in body:
        if isinstance(stmt, ast.Print):
            return True
        for e in ast.stmt_exprs(stmt):
            if expr_has_read(e):
                return True
        for _, child in ast.child_bodies(stmt):
            if _body_has_io(child):
                return True
    return False


@dataclass
class ProgramFacts:
    """Program-wide facts shared by the tokenizer, normalizer, and attacks."""

    functions: dict[str, ast.FunctionDecl]
    global_names: set[str]
    side_effecting_fns: set[str]

    def call_is_side_effecting(self, callee: str) -> bool:
        # unknown callees are treated as side-effecting (soundness)
        return callee in self.side_effecting_fns or callee not in self.functions


def analyze_units(units: list[ast.Unit]) -> ProgramFacts:
    functions: dict[str, ast.FunctionDecl] = {}
    global_names: set[str] = set()
    for unit in units:
        for decl in unit.decls:
            if isinstance(decl, ast.FunctionDecl):
                functions[decl.name] = decl
            else:
                global_names.add(decl.ident)

    callees = {name: _body_callees(fd.body) & set(functions) for name, fd in functions.items()}
    side_effecting = {name for name, fd in functions.items() if _body_has_io(fd.body)}

    # functions calling anything unknown are side-effecting too
    for name, fd in functions.items():
        if _body_callees(fd.body) - set(functions):
            side_effecting.add(name)

    for name in _cycle_members(callees):
        side_effecting.add(name)

    # propagate along reversed call edges to a fixpoint
    changed = True
    while changed:
        changed = False
        for name, called in callees.items():
            if name not in side_effecting and called & side_effecting:
                side_effecting.add(name)
                changed = True

    return ProgramFacts(functions, global_names, side_effecting)


def _cycle_members(callees: dict[str, set[str]]) -> set[str]:
    """Names on any call-graph cycle (including self-recursion). Iterative Tarjan."""
    index: dict[str, int] = {}
    low: dict[str, int] = {}
    on_stack: set[str] = set()
    stack: list[str] = []
    counter = [0]
    members: set[str] = set()

    for root in sorted(callees):
        if root in index:
            continue
        work: list[tuple[str, list[str]]] = [(root, sorted(callees[root]))]
        index[root] = low[root] = counter[0]
        counter[0] += 1
        stack.append(root)
        on_stack.add(root)
        while work:
            node, todo = work[-1]
            advanced = False
            while todo:
                nxt = todo.pop()
                if nxt not in index:
                    index[nxt] = low[nxt] = counter[0]
                    counter[0] += 1
                    stack.append(nxt)
                    on_stack.add(nxt)
                    work.append((nxt, sorted(callees[nxt])))
                    advanced = True
                    break
                if nxt in on_stack:
                    low[node] = min(low[node], index[nxt])
            if advanced:
                continue
            work.pop()
            if work:
                parent = work[-1][0]
                low[parent] = min(low[parent], low[node])
            if low[node] == index[node]:
                scc = []
                while True:
                    member = stack.pop()
                    on_stack.discard(member)
                    scc.append(member)
                    if member == node:
                        break
                if len(scc) > 1 or node in callees[node]:
                    members.update(scc)
    return members
