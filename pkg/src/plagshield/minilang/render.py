"""Render MiniLang ASTs back to source text.

One statement per line, four-space indents. render(parse(render(x))) is a
fixpoint, which the attack generators and the normalization soundness checks
rely on.
"""

from __future__ import annotations

from . import ast

_PRECEDENCE = {
    "||": 1, "&&": 2,
    "==": 3, "!=": 3,
    "<": 4, "<=": 4, ">": 4, ">=": 4,
    "+": 5, "-": 5,
    "*": 6, "/": 6, "%": 6,
}
_UNARY_PREC = 7


def render_expr(expr: ast.Expr, parent_prec: int = 0) -> str:
    if isinstance(expr, ast.IntLit):
        text = str(expr.value)
        return f"({text})" if expr.value < 0 and parent_prec >= _UNARY_PREC else text
    if isinstance(expr, ast.BoolLit):
        return "true" if expr.value else "false"
    if isinstance(expr, ast.Name):
        return expr.ident
    if isinstance(expr, ast.Read):
        return "read()"
    if isinstance(expr, ast.Call):
        return f"{expr.callee}({', '.join(render_expr(a) for a in expr.args)})"
    if isinstance(expr, ast.Unary):
        inner = render_expr(expr.operand, _UNARY_PREC)
        text = f"{expr.op}{inner}"
        return f"({text})" if parent_prec > _UNARY_PREC else text
    if isinstance(expr, ast.Binary):
        prec = _PRECEDENCE[expr.op]
        left = render_expr(expr.left, prec)
        # right operand needs a bump: operators are left-associative
        right = render_expr(expr.right, prec + 1)
        text = f"{left} {expr.op} {right}"
        return f"({text})" if prec < parent_prec else text
    raise TypeError(f"unknown expression node {expr!r}")


def _render_stmt(stmt: ast.Stmt, indent: int, out: list[str]) -> None:
    pad = "    " * indent
    if isinstance(stmt, ast.VarDecl):
        if stmt.init is not None:
            out.append(f"{pad}{stmt.type_name} {stmt.ident} = {render_expr(stmt.init)};")
        else:
            out.append(f"{pad}{stmt.type_name} {stmt.ident};")
    elif isinstance(stmt, ast.Assign):
        out.append(f"{pad}{stmt.ident} = {render_expr(stmt.value)};")
    elif isinstance(stmt, ast.If):
        out.append(f"{pad}if ({render_expr(stmt.cond)}) {{")
        for s in stmt.then_body:
            _render_stmt(s, indent + 1, out)
        if stmt.else_body is not None:
            out.append(f"{pad}}} else {{")
            for s in stmt.else_body:
                _render_stmt(s, indent + 1, out)
        out.append(f"{pad}}}")
    elif isinstance(stmt, ast.While):
        out.append(f"{pad}while ({render_expr(stmt.cond)}) {{")
        for s in stmt.body:
            _render_stmt(s, indent + 1, out)
        out.append(f"{pad}}}")
    elif isinstance(stmt, ast.CallStmt):
        out.append(f"{pad}{render_expr(stmt.call)};")
    elif isinstance(stmt, ast.Return):
        if stmt.value is not None:
            out.append(f"{pad}return {render_expr(stmt.value)};")
        else:
            out.append(f"{pad}return;")
    elif isinstance(stmt, ast.Print):
        out.append(f"{pad}print({render_expr(stmt.value)});")
    elif isinstance(stmt, ast.BlockStmt):
        out.append(f"{pad}{{")
        for s in stmt.body:
            _render_stmt(s, indent + 1, out)
        out.append(f"{pad}}}")
    else:
        raise TypeError(f"unknown statement node {stmt!r}")


def render_unit(unit: ast.Unit) -> str:
    out: list[str] = []
    for decl in unit.decls:
        if isinstance(decl, ast.GlobalDecl):
            out.append(f"{decl.type_name} {decl.ident} = {render_expr(decl.init)};")
        else:
            params = ", ".join(f"{p.type_name} {p.ident}" for p in decl.params)
            out.append(f"fn {decl.name}({params}) {{")
            for s in decl.body:
                _render_stmt(s, 1, out)
            out.append("}")
            out.append("")
    while out and out[-1] == "":
        out.pop()
    return "\n".join(out) + "\n"
