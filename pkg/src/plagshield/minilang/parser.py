"""Recursive-descent parser for MiniLang.

Grammar (informal):
    unit     := (fndecl | globaldecl)+
    fndecl   := "fn" ident "(" params? ")" block
    globaldecl := ("int"|"bool") ident "=" literal ";"
    params   := ("int"|"bool") ident ("," ("int"|"bool") ident)*
    block    := "{" stmt* "}"
    stmt     := vardecl | assign | if | while | callstmt | return | print | block
    vardecl  := ("int"|"bool") ident ("=" expr)? ";"
    assign   := ident "=" expr ";"
    if       := "if" "(" expr ")" block ("else" block)?
    while    := "while" "(" expr ")" block
    callstmt := ident "(" args? ")" ";"
    return   := "return" expr? ";"
    print    := "print" "(" expr ")" ";"
    expr     := the usual precedence ladder over || && == != < <= > >= + - * / % ! unary- () calls read()

Top-level declarations outside functions are constants (literal initializer).
"""

from __future__ import annotations

from ..errors import MiniLangSyntaxError
from . import ast
from .lexer import LexToken, lex


class _Parser:
    def __init__(self, tokens: list[LexToken]):
        self.tokens = tokens
        self.pos = 0

    # --- token plumbing ---

    def peek(self) -> LexToken:
        return self.tokens[self.pos]

    def advance(self) -> LexToken:
        tok = self.tokens[self.pos]
        if tok.kind != "eof":
            self.pos += 1
        return tok

    def check(self, *kinds: str) -> bool:
        return self.peek().kind in kinds

    def expect(self, *kinds: str) -> LexToken:
        tok = self.peek()
        if tok.kind not in kinds:
            got = tok.text or "end of input"
            raise MiniLangSyntaxError(
                f"expected {' or '.join(repr(k) for k in kinds)}, got {got!r}",
                tok.line, tok.column, expected=kinds)
        return self.advance()

    # --- declarations ---

    def parse_unit(self) -> ast.Unit:
        unit = ast.Unit()
        if self.check("eof"):
            tok = self.peek()
            raise MiniLangSyntaxError("empty program", tok.line, tok.column, expected=("fn",))
        while not self.check("eof"):
            if self.check("fn"):
                unit.decls.append(self.parse_function())
            elif self.check("int", "bool"):
                unit.decls.append(self.parse_global())
            else:
                tok = self.peek()
                raise MiniLangSyntaxError(
                    f"expected declaration, got {tok.text!r}",
                    tok.line, tok.column, expected=("fn", "int", "bool"))
        return unit

    def parse_function(self) -> ast.FunctionDecl:
        fn_tok = self.expect("fn")
        name = self.expect("ident").text
        self.expect("(")
        params: list[ast.Param] = []
        if not self.check(")"):
            while True:
                type_tok = self.expect("int", "bool")
                pname = self.expect("ident").text
                params.append(ast.Param(type_tok.kind, pname))
                if not self.check(","):
                    break
                self.advance()
        self.expect(")")
        body = self.parse_block()
        return ast.FunctionDecl(name, params, body, line=fn_tok.line)

    def parse_global(self) -> ast.GlobalDecl:
        type_tok = self.expect("int", "bool")
        name = self.expect("ident").text
        self.expect("=")
        lit = self.parse_literal()
        self.expect(";")
        return ast.GlobalDecl(type_tok.kind, name, lit, line=type_tok.line)

    def parse_literal(self) -> ast.Expr:
        tok = self.peek()
        neg = False
        if tok.kind == "-":
            self.advance()
            neg = True
            tok = self.peek()
        if tok.kind == "num":
            self.advance()
            value = int(tok.text)
            return ast.IntLit(-value if neg else value, line=tok.line)
        if tok.kind in ("true", "false") and not neg:
            self.advance()
            return ast.BoolLit(tok.kind == "true", line=tok.line)
        raise MiniLangSyntaxError(
            f"global initializer must be a literal, got {tok.text!r}",
            tok.line, tok.column, expected=("num", "true", "false"))

    # --- statements ---

    def parse_block(self) -> list[ast.Stmt]:
        self.expect("{")
        body: list[ast.Stmt] = []
        while not self.check("}"):
            if self.check("eof"):
                tok = self.peek()
                raise MiniLangSyntaxError("unterminated block", tok.line, tok.column, expected=("}",))
            body.append(self.parse_stmt())
        self.expect("}")
        return body

    def parse_stmt(self) -> ast.Stmt:
        tok = self.peek()
        if tok.kind in ("int", "bool"):
            self.advance()
            name = self.expect("ident").text
            init = None
            if self.check("="):
                self.advance()
                init = self.parse_expr()
            self.expect(";")
            return ast.VarDecl(tok.kind, name, init, line=tok.line)
        if tok.kind == "if":
            self.advance()
            self.expect("(")
            cond = self.parse_expr()
            self.expect(")")
            then_body = self.parse_block()
            else_body = None
            if self.check("else"):
                self.advance()
                else_body = self.parse_block()
            return ast.If(cond, then_body, else_body, line=tok.line)
        if tok.kind == "while":
            self.advance()
            self.expect("(")
            cond = self.parse_expr()
            self.expect(")")
            body = self.parse_block()
            return ast.While(cond, body, line=tok.line)
        if tok.kind == "return":
            self.advance()
            value = None
            if not self.check(";"):
                value = self.parse_expr()
            self.expect(";")
            return ast.Return(value, line=tok.line)
        if tok.kind == "print":
            self.advance()
            self.expect("(")
            value = self.parse_expr()
            self.expect(")")
            self.expect(";")
            return ast.Print(value, line=tok.line)
        if tok.kind == "{":
            body = self.parse_block()
            return ast.BlockStmt(body, line=tok.line)
        if tok.kind == "ident":
            self.advance()
            if self.check("="):
                self.advance()
                value = self.parse_expr()
                self.expect(";")
                return ast.Assign(tok.text, value, line=tok.line)
            if self.check("("):
                call = self.finish_call(tok)
                self.expect(";")
                return ast.CallStmt(call, line=tok.line)
            nxt = self.peek()
            raise MiniLangSyntaxError(
                f"expected '=' or '(' after identifier, got {nxt.text!r}",
                nxt.line, nxt.column, expected=("=", "("))
        raise MiniLangSyntaxError(
            f"expected statement, got {tok.text or 'end of input'!r}",
            tok.line, tok.column,
            expected=("int", "bool", "if", "while", "return", "print", "ident", "{"))

    # --- expressions, precedence climbing ---

    _BIN_LEVELS = [
        ("||",),
        ("&&",),
        ("==", "!="),
        ("<", "<=", ">", ">="),
        ("+", "-"),
        ("*", "/", "%"),
    ]

    def parse_expr(self) -> ast.Expr:
        return self._parse_level(0)

    def _parse_level(self, level: int) -> ast.Expr:
        if level == len(self._BIN_LEVELS):
            return self.parse_unary()
        ops = self._BIN_LEVELS[level]
        expr = self._parse_level(level + 1)
        while self.check(*ops):
            op_tok = self.advance()
            right = self._parse_level(level + 1)
            expr = ast.Binary(op_tok.kind, expr, right, line=op_tok.line)
        return expr

    def parse_unary(self) -> ast.Expr:
        tok = self.peek()
        if tok.kind in ("!", "-"):
            self.advance()
            operand = self.parse_unary()
            return ast.Unary(tok.kind, operand, line=tok.line)
        return self.parse_primary()

    def parse_primary(self) -> ast.Expr:
        tok = self.peek()
        if tok.kind == "num":
            self.advance()
            return ast.IntLit(int(tok.text), line=tok.line)
        if tok.kind in ("true", "false"):
            self.advance()
            return ast.BoolLit(tok.kind == "true", line=tok.line)
        if tok.kind == "read":
            self.advance()
            self.expect("(")
            self.expect(")")
            return ast.Read(line=tok.line)
        if tok.kind == "(":
            self.advance()
            expr = self.parse_expr()
            self.expect(")")
            return expr
        if tok.kind == "ident":
            self.advance()
            if self.check("("):
                return self.finish_call(tok)
            return ast.Name(tok.text, line=tok.line)
        raise MiniLangSyntaxError(
            f"expected expression, got {tok.text or 'end of input'!r}",
            tok.line, tok.column,
            expected=("num", "true", "false", "read", "(", "ident"))

    def finish_call(self, name_tok: LexToken) -> ast.Call:
        self.expect("(")
        args: list[ast.Expr] = []
        if not self.check(")"):
            while True:
                args.append(self.parse_expr())
                if not self.check(","):
                    break
                self.advance()
        self.expect(")")
        return ast.Call(name_tok.text, args, line=name_tok.line)


def parse_minilang(source: str) -> ast.Unit:
    """Parse one MiniLang source file; every node carries its source line."""
    return _Parser(lex(source)).parse_unit()
