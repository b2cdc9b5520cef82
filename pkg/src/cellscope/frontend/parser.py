"""Parsing of the C subset (see docs/grammar.md) on top of pycparser."""

from __future__ import annotations

import re
import shlex
from dataclasses import dataclass, field

from pycparser import c_ast, c_parser

from ..ir import Loc

PRELUDE = """\
typedef unsigned char uint8; typedef signed char int8;
typedef unsigned short uint16; typedef short int16;
typedef unsigned int uint32; typedef int int32;
typedef unsigned long long uint64; typedef long long int64;
typedef unsigned long size_t;
"""

EXCLUDED_CALLS = frozenset({"malloc", "calloc", "realloc", "free", "alloca"})


class FrontendError(Exception):
    """A syntax, typing or lowering error, with a source location."""

    def __init__(self, message: str, loc: Loc | None = None):
        self.loc = loc
        super().__init__(f"{loc}: {message}" if loc else message)


@dataclass
class Program:
    ast: c_ast.FileAST
    file: str
    text: str
    directives: list = field(default_factory=list)


def strip_comments(text: str) -> tuple[str, list[str]]:
    """Blank out comments while keeping line/column positions.

    Lines of the form ``//! <flags>`` are returned as analysis directives.
    """
    directives = [m.group(1).strip() for m in re.finditer(r"^\s*//!(.*)$", text, re.M)]
    out = []
    i, n = 0, len(text)
    while i < n:
        c = text[i]
        if c in "\"'":
            j = i + 1
            while j < n and text[j] != c:
                j += 2 if text[j] == "\\" else 1
            out.append(text[i:j + 1])
            i = j + 1
        elif text.startswith("//", i):
            j = text.find("\n", i)
            j = n if j < 0 else j
            out.append(" " * (j - i))
            i = j
        elif text.startswith("/*", i):
            j = text.find("*/", i + 2)
            j = n if j < 0 else j + 2
            out.append(re.sub(r"[^\n]", " ", text[i:j]))
            i = j
        else:
            out.append(c)
            i += 1
    return "".join(out), directives


def directive_args(directives: list[str]) -> list[str]:
    args: list[str] = []
    for d in directives:
        args.extend(shlex.split(d))
    return args


def loc_of(node, file: str) -> Loc:
    coord = getattr(node, "coord", None)
    if coord is None or coord.line is None:
        return Loc(file, 0, 0)
    return Loc(file, coord.line, coord.column or 0)


def parse_program(text: str, file: str = "<input>") -> Program:
    """Parse source text into a checked pycparser AST.

    Raises FrontendError on syntax errors, unknown identifiers and excluded
    features (dynamic allocation, variadic functions, goto, bit-fields).
    """
    body, directives = strip_comments(text)
    if re.search(r"^\s*#(?!\s*line)", body, re.M):
        raise FrontendError("preprocessor directives are not supported", Loc(file, 1, 1))
    source = PRELUDE + f'#line 1 "{file}"\n' + body
    try:
        ast = c_parser.CParser().parse(source, filename=file)
    except c_parser.ParseError as exc:
        msg = str(exc)
        m = re.match(r"(.*?):(\d+):(\d+): (.*)", msg)
        if m:
            raise FrontendError("syntax error " + m.group(4), Loc(file, int(m.group(2)), int(m.group(3)))) from None
        raise FrontendError(msg) from None
    _Checker(file).check(ast)
    return Program(ast=ast, file=file, text=text, directives=directives)


class _Checker(c_ast.NodeVisitor):
    """Name resolution and excluded-feature checks."""

    def __init__(self, file: str):
        self.file = file
        self.scopes: list[set[str]] = [set()]

    def err(self, msg, node):
        raise FrontendError(msg, loc_of(node, self.file))

    def declare(self, name):
        if name:
            self.scopes[-1].add(name)

    def known(self, name) -> bool:
        return any(name in s for s in self.scopes)

    def check(self, ast: c_ast.FileAST):
        for ext in ast.ext:
            self.visit(ext)

    def visit_FuncDef(self, node):
        self.declare(node.decl.name)
        self._check_type(node.decl.type)
        self.scopes.append(set())
        args = getattr(node.decl.type, "args", None)
        if args is not None:
            for p in args.params:
                if isinstance(p, c_ast.Decl):
                    self.declare(p.name)
        self.visit(node.body)
        self.scopes.pop()

    def visit_Decl(self, node):
        if node.bitsize is not None:
            self.err("bit-fields are not supported", node)
        self._check_type(node.type)
        self.declare(node.name)
        if node.init is not None:
            self.visit(node.init)
        self._visit_enums(node.type)

    def _visit_enums(self, t):
        while isinstance(t, (c_ast.TypeDecl, c_ast.PtrDecl, c_ast.ArrayDecl)):
            t = t.type
        if isinstance(t, c_ast.Enum) and t.values is not None:
            for e in t.values.enumerators:
                if e.value is not None:
                    self.visit(e.value)
                self.declare(e.name)

    def visit_Typedef(self, node):
        self._check_type(node.type)
        self._visit_enums(node.type)

    def _check_type(self, t):
        for _, sub in _iter_nodes(t):
            if isinstance(sub, c_ast.EllipsisParam):
                self.err("variadic functions are not supported", sub)
            if isinstance(sub, c_ast.Decl) and sub.bitsize is not None:
                self.err("bit-fields are not supported", sub)
            if isinstance(sub, c_ast.ArrayDecl) and sub.dim is not None:
                self.visit(sub.dim)

    def visit_Compound(self, node):
        self.scopes.append(set())
        for item in node.block_items or ():
            self.visit(item)
        self.scopes.pop()

    def visit_For(self, node):
        self.scopes.append(set())
        for child in (node.init, node.cond, node.next, node.stmt):
            if child is not None:
                self.visit(child)
        self.scopes.pop()

    def visit_Goto(self, node):
        self.err("goto is not supported", node)

    def visit_StructRef(self, node):
        self.visit(node.name)

    def visit_ID(self, node):
        if not self.known(node.name):
            if node.name in EXCLUDED_CALLS:
                self.err(f"dynamic allocation ({node.name}) is not supported", node)
            self.err(f"unknown identifier {node.name!r}", node)

    def visit_FuncCall(self, node):
        if isinstance(node.name, c_ast.ID) and node.name.name in EXCLUDED_CALLS:
            self.err(f"dynamic allocation ({node.name.name}) is not supported", node)
        self.generic_visit(node)

    def visit_Typename(self, node):
        self._check_type(node.type)


def _iter_nodes(node):
    stack = [("", node)]
    while stack:
        name, n = stack.pop()
        if n is None:
            continue
        yield name, n
        if isinstance(n, c_ast.ArrayDecl):
            stack.append(("type", n.type))
            continue
        for cname, c in n.children():
            if isinstance(n, c_ast.FuncDecl) and cname.startswith("args"):
                continue
            stack.append((cname, c))
        if isinstance(n, c_ast.FuncDecl) and n.args is not None:
            for p in n.args.params:
                if isinstance(p, c_ast.EllipsisParam):
                    stack.append(("param", p))
