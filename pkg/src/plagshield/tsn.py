"""Token sequence normalization: graph-build, dead-node removal, relinearization.

The normalization graph holds one node per statement group. Stored edges are
the *ordering* constraints used by linearization: def-use data edges, order
edges for anti/output dependences and for consecutive side-effecting
statements (I/O order), and control edges from a nesting statement to its
body. All stored edges point source-forward among siblings, keeping the graph
acyclic.

Dead-node removal follows the reads-me-transitively criterion rather than the
stored forward edges alone: a write inside a loop body may feed the loop
condition of an *earlier* source position (loop-carried dependence), so
liveness is computed over a may-feed relation that includes same-loop
back-feeds. Without this, live counter updates would be deleted.

Linearization is a Kahn topological sort per sibling list with a
content-based tie-break (token tuple, out-degree, alpha-renamed read/write
shape, canonical statement form, subtree signature), so the output order is
independent of the source order whenever the graph admits it, and identifier
choice can never influence it.
"""

from __future__ import annotations

import dataclasses
import hashlib
from dataclasses import dataclass, field
from typing import Optional

from .errors import CycleDetected, MissingSemantics
from .minilang import ast
from .minilang.analysis import expr_callees, expr_reads
from .minilang.render import render_unit
from .tokens import EnrichedSequence, GroupKind, Token, TokenSequence, TokenType

EDGE_DATA = "data"
EDGE_ORDER = "order"
EDGE_CONTROL = "control"

_CRITICAL_KINDS = frozenset(
    {GroupKind.FUNCTION, GroupKind.IF, GroupKind.WHILE, GroupKind.BLOCK, GroupKind.RETURN})


@dataclass(frozen=True)
class TngNode:
    stmt_id: int
    kind: GroupKind
    tokens: tuple[Token, ...]  # head-span tokens
    reads: frozenset[str]      # aggregate, visible at the node's level
    writes: frozenset[str]
    side_effecting: bool
    critical: bool
    control_parent: Optional[int]
    branch: int
    has_else: bool
    source_pos: int
    file_id: str
    own_reads: frozenset[str] = frozenset()
    own_writes: frozenset[str] = frozenset()
    ast_ref: object = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class TokenNormalizationGraph:
    program_id: str
    nodes: tuple[TngNode, ...]
    edges: frozenset[tuple[int, int, str]]  # (from stmt_id, to stmt_id, kind)

    def node_map(self) -> dict[int, TngNode]:
        return {n.stmt_id: n for n in self.nodes}

    def children(self) -> dict[tuple[Optional[int], int], list[TngNode]]:
        """Sibling lists keyed by (parent stmt_id, branch), source order."""
        out: dict[tuple[Optional[int], int], list[TngNode]] = {}
        for node in sorted(self.nodes, key=lambda n: n.source_pos):
            out.setdefault((node.control_parent, node.branch), []).append(node)
        return out


def _own_facts(group_kind: GroupKind, stmt) -> tuple[frozenset[str], frozenset[str]]:
    """Head-level reads/writes of a statement (condition only, for control)."""
    if stmt is None:
        return frozenset(), frozenset()
    if isinstance(stmt, ast.FunctionDecl):
        return frozenset(), frozenset({f"fn:{stmt.name}"})
    if isinstance(stmt, ast.GlobalDecl):
        return frozenset(), frozenset({stmt.ident})
    reads: set[str] = set()
    if isinstance(stmt, (ast.If, ast.While)):
        exprs = [stmt.cond]
    else:
        exprs = ast.stmt_exprs(stmt)
    for e in exprs:
        reads |= expr_reads(e)
        reads |= {f"fn:{c}" for c in expr_callees(e)}
    writes: set[str] = set()
    if isinstance(stmt, (ast.VarDecl, ast.Assign)):
        writes.add(stmt.ident)
    return frozenset(reads), frozenset(writes)


def _build_edges(nodes: list[TngNode]) -> frozenset[tuple[int, int, str]]:
    edges: set[tuple[int, int, str]] = set()
    sibling_lists: dict[tuple, list[TngNode]] = {}
    for node in sorted(nodes, key=lambda n: n.source_pos):
        if node.control_parent is None:
            key = ("top", node.file_id)
        else:
            key = (node.control_parent, node.branch)
        sibling_lists.setdefault(key, []).append(node)
        if node.control_parent is not None:
            edges.add((node.control_parent, node.stmt_id, EDGE_CONTROL))
    for siblings in sibling_lists.values():
        _sibling_edges(siblings, edges)
    return frozenset(edges)


def build_tng(enriched: EnrichedSequence) -> TokenNormalizationGraph:
    """Construct the normalization graph from an enriched sequence.

    Bare block statements are dissolved: MiniLang blocks are pure grouping
    (variables are function-scoped), so the block's children are re-parented
    to the enclosing statement. Block-wrapping obfuscation therefore cannot
    survive normalization.
    """
    if not enriched.has_semantics:
        raise MissingSemantics("input sequence carries no statement groups")
    seq = enriched.sequence
    kind_of = {g.stmt_id: g.kind for g in enriched.groups}
    parent_of = {g.stmt_id: g.control_parent for g in enriched.groups}
    branch_of = {g.stmt_id: g.branch for g in enriched.groups}

    def resolve(group) -> tuple[Optional[int], int]:
        parent, branch = group.control_parent, group.branch
        while parent is not None and kind_of[parent] == GroupKind.BLOCK:
            branch = branch_of[parent]
            parent = parent_of[parent]
        return parent, branch

    nodes: list[TngNode] = []
    for pos, group in enumerate(enriched.groups):
        if group.kind == GroupKind.BLOCK:
            continue
        span = seq.tokens[group.token_span[0]:group.token_span[1]]
        own_reads, own_writes = _own_facts(group.kind, group.ast_ref)
        critical = group.side_effecting or group.kind in _CRITICAL_KINDS
        parent, branch = resolve(group)
        nodes.append(TngNode(
            stmt_id=group.stmt_id, kind=group.kind, tokens=tuple(span),
            reads=group.reads, writes=group.writes,
            side_effecting=group.side_effecting, critical=critical,
            control_parent=parent, branch=branch,
            has_else=group.has_else, source_pos=pos,
            file_id=span[0].file_id if span else "",
            own_reads=own_reads, own_writes=own_writes,
            ast_ref=group.ast_ref))

    return TokenNormalizationGraph(seq.program_id, tuple(nodes), _build_edges(nodes))


def _sibling_edges(siblings: list[TngNode], edges: set) -> None:
    """Def-use, anti/output, and I/O order edges among one sibling list."""
    last_writer: dict[str, TngNode] = {}
    readers_since: dict[str, list[TngNode]] = {}
    last_se: Optional[TngNode] = None
    for node in siblings:
        for var in node.reads:
            writer = last_writer.get(var)
            if writer is not None and writer is not node:
                edges.add((writer.stmt_id, node.stmt_id, EDGE_DATA))
        for var in node.writes:
            writer = last_writer.get(var)
            if writer is not None and writer is not node:
                edges.add((writer.stmt_id, node.stmt_id, EDGE_ORDER))
            for reader in readers_since.get(var, ()):
                if reader is not node:
                    edges.add((reader.stmt_id, node.stmt_id, EDGE_ORDER))
        for var in node.reads:
            readers_since.setdefault(var, []).append(node)
        for var in node.writes:
            last_writer[var] = node
            readers_since[var] = []
        if node.side_effecting:
            if last_se is not None:
                edges.add((last_se.stmt_id, node.stmt_id, EDGE_ORDER))
            last_se = node


def _loop_ancestors(nodes: dict[int, TngNode]) -> dict[int, frozenset[int]]:
    cache: dict[int, frozenset[int]] = {}

    def climb(stmt_id: int) -> frozenset[int]:
        if stmt_id in cache:
            return cache[stmt_id]
        node = nodes[stmt_id]
        loops: set[int] = set()
        parent = node.control_parent
        if parent is not None:
            loops |= climb(parent)
            if nodes[parent].kind == GroupKind.WHILE:
                loops.add(parent)
        result = frozenset(loops)
        cache[stmt_id] = result
        return result

    for sid in nodes:
        climb(sid)
    return cache


def remove_dead_nodes(g: TokenNormalizationGraph) -> TokenNormalizationGraph:
    """Delete non-critical nodes whose writes are never transitively consumed.

    Consumption follows source order plus loop-carried back-feeds: a write
    inside a while body may feed any reader sharing that loop, including the
    loop condition itself.
    """
    node_map = g.node_map()
    loops = _loop_ancestors(node_map)

    # producers per symbol, leaf-level (control nodes do not write at head)
    producers: dict[str, list[TngNode]] = {}
    for node in g.nodes:
        for var in node.own_writes:
            producers.setdefault(var, []).append(node)

    feeds: dict[int, set[int]] = {n.stmt_id: set() for n in g.nodes}
    for consumer in g.nodes:
        consumer_loops = set(loops[consumer.stmt_id])
        if consumer.kind == GroupKind.WHILE:
            # the loop condition re-evaluates inside its own loop
            consumer_loops.add(consumer.stmt_id)
        consumed = set(consumer.own_reads)
        if consumer.kind == GroupKind.ASSIGN:
            # an assignment needs its target's declaration to stay bound
            consumed |= consumer.own_writes
        for var in consumed:
            for producer in producers.get(var, ()):
                if producer.stmt_id == consumer.stmt_id:
                    continue
                forward = producer.source_pos < consumer.source_pos
                looped = loops[producer.stmt_id] & consumer_loops
                if forward or looped:
                    feeds[producer.stmt_id].add(consumer.stmt_id)

    alive: set[int] = {n.stmt_id for n in g.nodes if n.critical}
    worklist = list(alive)
    inverse: dict[int, set[int]] = {n.stmt_id: set() for n in g.nodes}
    for src, dests in feeds.items():
        for dest in dests:
            inverse[dest].add(src)
    while worklist:
        current = worklist.pop()
        for producer in inverse[current]:
            if producer not in alive:
                alive.add(producer)
                worklist.append(producer)

    if len(alive) == len(g.nodes):
        return g
    survivors = [n for n in g.nodes if n.stmt_id in alive]
    nodes = tuple(_recompute_aggregates(survivors))
    return TokenNormalizationGraph(g.program_id, nodes, _build_edges(list(nodes)))


def _recompute_aggregates(nodes: list[TngNode]) -> list[TngNode]:
    """Refresh control-node aggregate reads/writes from surviving descendants.

    Without this, edges derived from a pruned control node would still reflect
    accesses of its deleted children, leaving the graph different from the one
    a dead-free program would produce.
    """
    global_names = set()
    for node in nodes:
        if node.kind == GroupKind.GLOBAL:
            global_names |= node.writes

    children: dict[int, list[TngNode]] = {}
    rebuilt: dict[int, TngNode] = {}
    for node in sorted(nodes, key=lambda n: -n.source_pos):  # children first (pre-order ids)
        kids = children.get(node.stmt_id, [])
        if node.kind in (GroupKind.IF, GroupKind.WHILE, GroupKind.BLOCK):
            reads = set(node.own_reads)
            writes = set(node.own_writes)
            for kid in kids:
                reads |= kid.reads
                writes |= kid.writes
            node = dataclasses.replace(node, reads=frozenset(reads), writes=frozenset(writes))
        elif node.kind == GroupKind.FUNCTION:
            reads = set()
            for kid in kids:
                reads |= kid.reads
            reads = {r for r in reads if r in global_names or r.startswith("fn:")}
            node = dataclasses.replace(node, reads=frozenset(reads))
        rebuilt[node.stmt_id] = node
        if node.control_parent is not None:
            children.setdefault(node.control_parent, []).append(node)
    return [rebuilt[n.stmt_id] for n in sorted(nodes, key=lambda n: n.source_pos)]


# --- canonical content keys for the linearization tie-break ---

def _canon_expr(expr: ast.Expr, env: dict[str, str]) -> str:
    if isinstance(expr, ast.IntLit):
        return str(expr.value)
    if isinstance(expr, ast.BoolLit):
        return "true" if expr.value else "false"
    if isinstance(expr, ast.Name):
        return env.setdefault(expr.ident, f"x{len(env)}")
    if isinstance(expr, ast.Read):
        return "read()"
    if isinstance(expr, ast.Call):
        callee = env.setdefault(f"fn:{expr.callee}", f"x{len(env)}")
        return f"{callee}({','.join(_canon_expr(a, env) for a in expr.args)})"
    if isinstance(expr, ast.Unary):
        return f"({expr.op}{_canon_expr(expr.operand, env)})"
    if isinstance(expr, ast.Binary):
        return f"({_canon_expr(expr.left, env)}{expr.op}{_canon_expr(expr.right, env)})"
    return "?"


def _canon_form(node: TngNode) -> str:
    """Alpha-renamed head rendering; identifier choice cannot influence it."""
    stmt = node.ast_ref
    env: dict[str, str] = {}
    if isinstance(stmt, ast.FunctionDecl):
        return f"fn/{len(stmt.params)}"
    if isinstance(stmt, ast.GlobalDecl):
        return f"const {stmt.type_name}={_canon_expr(stmt.init, env)}"
    if isinstance(stmt, ast.VarDecl):
        init = "" if stmt.init is None else "=" + _canon_expr(stmt.init, env)
        return f"{stmt.type_name} {env.setdefault(stmt.ident, f'x{len(env)}')}{init}"
    if isinstance(stmt, ast.Assign):
        return f"{env.setdefault(stmt.ident, f'x{len(env)}')}={_canon_expr(stmt.value, env)}"
    if isinstance(stmt, ast.If):
        return f"if({_canon_expr(stmt.cond, env)})"
    if isinstance(stmt, ast.While):
        return f"while({_canon_expr(stmt.cond, env)})"
    if isinstance(stmt, ast.CallStmt):
        return _canon_expr(stmt.call, env)
    if isinstance(stmt, ast.Return):
        return "return" + ("" if stmt.value is None else " " + _canon_expr(stmt.value, env))
    if isinstance(stmt, ast.Print):
        return f"print({_canon_expr(stmt.value, env)})"
    if isinstance(stmt, ast.BlockStmt):
        return "block"
    return node.kind.name.lower()


def _set_shape(node: TngNode) -> tuple[int, int, int, int]:
    """Name-invariant shape of the read/write sets."""
    fn_reads = sum(1 for r in node.reads if r.startswith("fn:"))
    return (len(node.reads), len(node.writes),
            len(node.reads & node.writes), fn_reads)


class _Linearizer:
    def __init__(self, g: TokenNormalizationGraph):
        self.g = g
        self.node_map = g.node_map()
        self.children = g.children()
        self.sigs: dict[int, str] = {}
        self.out_degree: dict[int, int] = {n.stmt_id: 0 for n in g.nodes}
        for u, _, _ in g.edges:
            self.out_degree[u] += 1

    def sig(self, node: TngNode) -> str:
        cached = self.sigs.get(node.stmt_id)
        if cached is not None:
            return cached
        parts = [_canon_form(node), ",".join(str(t.type.value) for t in node.tokens)]
        for branch in (0, 1):
            kids = self.children.get((node.stmt_id, branch), [])
            parts.append("|".join(sorted(self.sig(k) for k in kids)))
        digest = hashlib.sha1(";".join(parts).encode()).hexdigest()
        self.sigs[node.stmt_id] = digest
        return digest

    def key(self, node: TngNode):
        return (
            tuple(t.type.value for t in node.tokens),
            -self.out_degree[node.stmt_id],
            _set_shape(node),
            _canon_form(node),
            self.sig(node),
            node.source_pos,
        )

    def order_siblings(self, siblings: list[TngNode]) -> list[TngNode]:
        ids = {n.stmt_id for n in siblings}
        succ: dict[int, list[int]] = {n.stmt_id: [] for n in siblings}
        indeg: dict[int, int] = {n.stmt_id: 0 for n in siblings}
        for u, v, kind in self.g.edges:
            if kind == EDGE_CONTROL:
                continue
            if u in ids and v in ids:
                succ[u].append(v)
                indeg[v] += 1
        ready = sorted((n for n in siblings if indeg[n.stmt_id] == 0), key=self.key)
        out: list[TngNode] = []
        while ready:
            node = ready.pop(0)
            out.append(node)
            changed = False
            for v in succ[node.stmt_id]:
                indeg[v] -= 1
                if indeg[v] == 0:
                    ready.append(self.node_map[v])
                    changed = True
            if changed:
                ready.sort(key=self.key)
        if len(out) != len(siblings):
            raise CycleDetected(f"cycle among statements {sorted(ids)}")
        return out

    def emit(self, node: TngNode, out: list[Token]) -> None:
        head = node.tokens
        fid = node.file_id
        line = head[0].line if head else 1
        if node.kind == GroupKind.FUNCTION:
            out.extend(head)
            self.emit_body(node, 0, out)
            out.append(Token(TokenType.BLOCK_END, fid, line))
            out.append(Token(TokenType.FUNC_END, fid, line))
        elif node.kind == GroupKind.IF:
            out.extend(head)
            self.emit_body(node, 0, out)
            if node.has_else:
                out.append(Token(TokenType.ELSE_BEGIN, fid, line))
                self.emit_body(node, 1, out)
            out.append(Token(TokenType.IF_END, fid, line))
        elif node.kind == GroupKind.WHILE:
            out.extend(head)
            self.emit_body(node, 0, out)
            out.append(Token(TokenType.LOOP_END, fid, line))
        elif node.kind == GroupKind.BLOCK:
            out.extend(head)
            self.emit_body(node, 0, out)
            out.append(Token(TokenType.BLOCK_END, fid, line))
        else:
            out.extend(head)

    def emit_body(self, parent: TngNode, branch: int, out: list[Token]) -> None:
        kids = self.children.get((parent.stmt_id, branch), [])
        for node in self.order_siblings(kids):
            self.emit(node, out)

    def run(self) -> TokenSequence:
        out: list[Token] = []
        top = [n for n in self.g.nodes if n.control_parent is None]
        file_order: list[str] = []
        for node in sorted(top, key=lambda n: n.source_pos):
            if node.file_id not in file_order:
                file_order.append(node.file_id)
        for fid in file_order:
            siblings = sorted((n for n in top if n.file_id == fid),
                              key=lambda n: n.source_pos)
            for node in self.order_siblings(siblings):
                self.emit(node, out)
        return TokenSequence(tuple(out), self.g.program_id)


def linearize(g: TokenNormalizationGraph) -> TokenSequence:
    """Deterministic topological relinearization of the graph."""
    return _Linearizer(g).run()


def normalize(enriched: EnrichedSequence) -> TokenSequence:
    """Full normalization: graph, dead-node removal, relinearization."""
    return linearize(remove_dead_nodes(build_tng(enriched)))


# --- graph rendering back to a program (soundness checks, CLI) ---

def graph_to_unit_sources(g: TokenNormalizationGraph,
                          normalized_order: bool = True) -> dict[str, str]:
    """Rebuild per-file source text from the (possibly pruned) graph."""
    lin = _Linearizer(g)

    def rebuild_stmt(node: TngNode):
        stmt = node.ast_ref
        if node.kind == GroupKind.IF:
            then_body = rebuild_body(node, 0)
            else_body = rebuild_body(node, 1) if node.has_else else None
            return ast.If(stmt.cond, then_body, else_body, line=stmt.line)
        if node.kind == GroupKind.WHILE:
            return ast.While(stmt.cond, rebuild_body(node, 0), line=stmt.line)
        if node.kind == GroupKind.BLOCK:
            return ast.BlockStmt(rebuild_body(node, 0), line=stmt.line)
        return stmt

    def rebuild_body(parent: TngNode, branch: int):
        kids = lin.children.get((parent.stmt_id, branch), [])
        ordered = lin.order_siblings(kids) if normalized_order \
            else sorted(kids, key=lambda n: n.source_pos)
        return [rebuild_stmt(k) for k in ordered]

    sources: dict[str, str] = {}
    top = [n for n in g.nodes if n.control_parent is None]
    file_order: list[str] = []
    for node in sorted(top, key=lambda n: n.source_pos):
        if node.file_id not in file_order:
            file_order.append(node.file_id)
    for fid in file_order:
        siblings = sorted((n for n in top if n.file_id == fid), key=lambda n: n.source_pos)
        ordered = lin.order_siblings(siblings) if normalized_order else siblings
        unit = ast.Unit()
        for node in ordered:
            decl = node.ast_ref
            if isinstance(decl, ast.FunctionDecl):
                decl = ast.FunctionDecl(decl.name, decl.params,
                                        rebuild_body(node, 0), line=decl.line)
            unit.decls.append(decl)
        sources[fid] = render_unit(unit)
    return sources


def dump_graph(g: TokenNormalizationGraph) -> str:
    """Text interchange dump: one node per line, one edge per line."""
    lines = [f"# tng {g.program_id} nodes={len(g.nodes)} edges={len(g.edges)}"]
    for node in sorted(g.nodes, key=lambda n: n.source_pos):
        flags = []
        if node.critical:
            flags.append("critical")
        if node.side_effecting:
            flags.append("io")
        lines.append(
            f"node {node.stmt_id} {node.kind.name} parent={node.control_parent} "
            f"branch={node.branch} tokens={','.join(t.type.name for t in node.tokens)} "
            f"reads={','.join(sorted(node.reads))} writes={','.join(sorted(node.writes))} "
            f"{'+'.join(flags) if flags else '-'}")
    for u, v, kind in sorted(g.edges):
        lines.append(f"edge {u} {v} {kind}")
    return "\n".join(lines) + "\n"
