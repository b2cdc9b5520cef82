"""Lowering of the checked C AST to the byte-level CFG.

Field selection and indexing become ``&V + byte-constant`` arithmetic
followed by a typed dereference; every call is inlined into a fresh family
of control points whose call stack names the callee instance.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from pycparser import c_ast

from ..abi import Abi, ScalarType as T
from ..ctype import (Array, CType, Func, Pointer, Record, Scalar, Void, alignof,
                     field_offsets, scalar_kind, sizeof)
from ..ir import (SKIP, AddrOf, Assign, Binary, Cast, Cfg, Const, Copy, Deref,
                  Edge, Expr, Guard, Input, Loc, Point, Unary, VarInfo)
from .parser import FrontendError, Program, loc_of

MAX_INLINE_DEPTH = 32

_INT_NAMES = {
    ("char",): T.SCHAR, ("signed", "char"): T.SCHAR, ("unsigned", "char"): T.UCHAR,
    ("short",): T.SHORT, ("signed", "short"): T.SHORT, ("unsigned", "short"): T.USHORT,
    ("int",): T.INT, ("signed",): T.INT, ("signed", "int"): T.INT,
    ("unsigned",): T.UINT, ("unsigned", "int"): T.UINT,
    ("long",): T.LONG, ("signed", "long"): T.LONG, ("unsigned", "long"): T.ULONG,
    ("long", "long"): T.LLONG, ("signed", "long", "long"): T.LLONG,
    ("unsigned", "long", "long"): T.ULLONG,
    ("float",): T.FLOAT, ("double",): T.DOUBLE, ("long", "double"): T.LDOUBLE,
}

OFFSET_TYPE = T.LONG


def _scalar_names(names):
    key = [n for n in names if n != "int" or len(names) == 1]
    if names and names[-1] == "int" and len(names) > 1:
        key = list(names[:-1])
    return _INT_NAMES.get(tuple(key))


@dataclass
class _Frame:
    func: str
    key: str
    prefix: str
    ret_type: CType
    ret_var: VarInfo | None
    exit_point: int
    scopes: list = field(default_factory=lambda: [{}])
    vars: list = field(default_factory=list)
    loops: list = field(default_factory=list)
    names: dict = field(default_factory=dict)


class Lowerer:
    def __init__(self, program: Program, abi: Abi):
        self.program = program
        self.file = program.file
        self.abi = abi
        self.globals_scope: dict = {}
        self.tags: dict[str, Record] = {}
        self._bodies: dict[int, Record] = {}
        self.funcs: dict[str, c_ast.FuncDef] = {}
        self.func_types: dict[str, Func] = {}
        self.vars: dict[str, VarInfo] = {}
        self.global_inits: list = []
        self.static_locals: dict[int, VarInfo] = {}
        self.address_taken: list[str] = []
        self.points: dict[int, Point] = {}
        self.edges: list[Edge] = []
        self.frames: list[_Frame] = []
        self.frame_vars: dict[str, list] = {}
        self.cur: int | None = None
        self.loc = Loc(self.file, 0, 0)
        self.instances = 0
        self.temps = 0

    # -- errors and points -------------------------------------------------

    def err(self, msg, node=None):
        raise FrontendError(msg, loc_of(node, self.file) if node is not None else self.loc)

    def stack(self) -> tuple:
        return tuple(f.key for f in self.frames)

    def new_point(self) -> int:
        pid = len(self.points)
        self.points[pid] = Point(pid, self.stack())
        return pid

    def here(self) -> int:
        if self.cur is None:
            self.cur = self.new_point()
        return self.cur

    def edge(self, src, dst, inst):
        self.edges.append(Edge(src, dst, inst, self.loc))

    def emit(self, inst):
        src = self.here()
        dst = self.new_point()
        self.edge(src, dst, inst)
        self.cur = dst

    def goto(self, dst):
        if self.cur is not None:
            self.edge(self.cur, dst, SKIP)
        self.cur = None

    # -- scopes ------------------------------------------------------------

    @property
    def scopes(self) -> list:
        if self.frames:
            return [self.globals_scope] + self.frames[-1].scopes
        return [self.globals_scope]

    def lookup(self, name, node=None):
        for s in reversed(self.scopes):
            if name in s:
                return s[name]
        self.err(f"unknown identifier {name!r}", node)

    def bind(self, name, entry):
        self.scopes[-1][name] = entry

    # -- types ---------------------------------------------------------------

    def resolve_type(self, t) -> CType:
        if isinstance(t, c_ast.Typename):
            return self.resolve_type(t.type)
        if isinstance(t, c_ast.TypeDecl):
            return self.resolve_type(t.type)
        if isinstance(t, c_ast.PtrDecl):
            return Pointer(self.resolve_type(t.type))
        if isinstance(t, c_ast.ArrayDecl):
            elem = self.resolve_type(t.type)
            if t.dim is None:
                return _OpenArray(elem)
            n = self.const_int(t.dim)
            if n < 0:
                self.err("negative array length", t)
            return Array(elem, n)
        if isinstance(t, c_ast.FuncDecl):
            ret = self.resolve_type(t.type)
            params = []
            if t.args is not None:
                for p in t.args.params:
                    pt = self.resolve_type(p.type)
                    if isinstance(pt, Void):
                        continue
                    params.append(_decay(pt))
            return Func(ret, tuple(params))
        if isinstance(t, c_ast.IdentifierType):
            names = t.names
            if names == ["void"]:
                return Void()
            kind = _scalar_names(names)
            if kind is not None:
                return Scalar(kind)
            if len(names) == 1:
                entry = self.lookup(names[0], t)
                if entry[0] == "typedef":
                    return entry[1]
            self.err(f"unsupported type {' '.join(names)}", t)
        if isinstance(t, (c_ast.Struct, c_ast.Union)):
            return self.record_type(t)
        if isinstance(t, c_ast.Enum):
            if t.values is not None:
                val = 0
                for e in t.values.enumerators:
                    if e.value is not None:
                        val = self.const_int(e.value)
                    self.bind(e.name, ("enum", val))
                    val += 1
            return Scalar(T.INT)
        self.err(f"unsupported type construct {type(t).__name__}", t)

    def record_type(self, t) -> Record:
        union = isinstance(t, c_ast.Union)
        tag = f"{'union' if union else 'struct'} {t.name}" if t.name else None
        if id(t) in self._bodies:
            return self._bodies[id(t)]      # one body shared by several declarators
        rec = self.tags.get(tag) if tag else None
        if rec is None:
            rec = Record(t.name, union)
            if tag:
                self.tags[tag] = rec
        if t.decls is not None:
            self._bodies[id(t)] = rec
            if rec.complete:
                self.err(f"redefinition of {tag}", t)
            fields = []
            seen = set()
            for d in t.decls:
                ft = self.resolve_type(d.type)
                if isinstance(ft, _OpenArray):
                    ft = Array(ft.elem, 0)
                if d.name in seen:
                    self.err(f"duplicate field {d.name!r}", d)
                seen.add(d.name)
                if d.name is None and isinstance(ft, Record):
                    fields.append((f"<anon{len(fields)}>", ft))
                else:
                    fields.append((d.name, ft))
            rec.fields = fields
        return rec

    def sizeof(self, t: CType, node=None) -> int:
        try:
            return sizeof(t, self.abi)
        except ValueError as exc:
            self.err(str(exc), node)

    def alignof(self, t: CType) -> int:
        return alignof(t, self.abi)

    def const_int(self, node) -> int:
        v = self.const_value(node)
        if isinstance(v, float):
            self.err("integer constant expected", node)
        return v

    def const_value(self, node):
        if isinstance(node, c_ast.Constant):
            return _literal(node)[0]
        if isinstance(node, c_ast.ID):
            entry = self.lookup(node.name, node)
            if entry[0] == "enum":
                return entry[1]
            self.err("constant expression expected", node)
        if isinstance(node, c_ast.UnaryOp):
            if node.op == "sizeof":
                return self.sizeof(self.type_of(node.expr), node)
            v = self.const_value(node.expr)
            return {"-": lambda: -v, "+": lambda: v, "~": lambda: ~v,
                    "!": lambda: int(not v)}[node.op]()
        if isinstance(node, c_ast.BinaryOp):
            a, b = self.const_value(node.left), self.const_value(node.right)
            ops = {"+": lambda: a + b, "-": lambda: a - b, "*": lambda: a * b,
                   "/": lambda: _cdiv(a, b), "%": lambda: a - b * _cdiv(a, b),
                   "<<": lambda: a << b, ">>": lambda: a >> b, "&": lambda: a & b,
                   "|": lambda: a | b, "^": lambda: a ^ b, "<": lambda: int(a < b),
                   ">": lambda: int(a > b), "<=": lambda: int(a <= b),
                   ">=": lambda: int(a >= b), "==": lambda: int(a == b),
                   "!=": lambda: int(a != b), "&&": lambda: int(bool(a and b)),
                   "||": lambda: int(bool(a or b))}
            if node.op not in ops:
                self.err("constant expression expected", node)
            return ops[node.op]()
        if isinstance(node, c_ast.Cast):
            v = self.const_value(node.expr)
            t = self.resolve_type(node.to_type)
            if isinstance(t, Scalar) and t.kind.is_int:
                return self.abi.wrap(t.kind, int(v))
            return v
        if isinstance(node, c_ast.TernaryOp):
            return self.const_value(node.iftrue if self.const_value(node.cond)
                                    else node.iffalse)
        self.err("constant expression expected", node)

    def type_of(self, node) -> CType:
        """Static type of an expression without lowering it (for sizeof)."""
        if isinstance(node, c_ast.Typename):
            return self.resolve_type(node)
        if isinstance(node, c_ast.Constant):
            return Scalar(_literal(node)[1])
        if isinstance(node, c_ast.ID):
            entry = self.lookup(node.name, node)
            if entry[0] == "var":
                return entry[1].ctype
            if entry[0] == "enum":
                return Scalar(T.INT)
            if entry[0] == "func":
                return self.func_types[entry[1]]
        if isinstance(node, c_ast.StructRef):
            base = self.type_of(node.name)
            if node.type == "->":
                base = base.target if isinstance(base, Pointer) else base
            if isinstance(base, Record):
                ft = base.field(node.field.name)
                if ft is not None:
                    return ft
        if isinstance(node, c_ast.ArrayRef):
            base = self.type_of(node.name)
            if isinstance(base, Array):
                return base.elem
            if isinstance(base, Pointer):
                return base.target
        if isinstance(node, c_ast.UnaryOp):
            if node.op == "*":
                base = _decay(self.type_of(node.expr))
                if isinstance(base, Pointer):
                    return base.target
            elif node.op == "&":
                return Pointer(self.type_of(node.expr))
            elif node.op == "sizeof":
                return Scalar(T.ULONG)
            elif node.op == "!":
                return Scalar(T.INT)
            else:
                return self.type_of(node.expr)
        if isinstance(node, c_ast.Cast):
            return self.resolve_type(node.to_type)
        if isinstance(node, c_ast.Assignment):
            return self.type_of(node.lvalue)
        if isinstance(node, c_ast.FuncCall):
            ft = _decay(self.type_of(node.name))
            if isinstance(ft, Pointer) and isinstance(ft.target, Func):
                return ft.target.ret
        if isinstance(node, c_ast.TernaryOp):
            a, b = _decay(self.type_of(node.iftrue)), _decay(self.type_of(node.iffalse))
            if isinstance(a, Pointer):
                return a
            if isinstance(b, Pointer):
                return b
            return Scalar(self.arith_type(a.kind, b.kind))
        if isinstance(node, c_ast.ExprList):
            return self.type_of(node.exprs[-1])
        if isinstance(node, c_ast.BinaryOp):
            lt = _decay(self.type_of(node.left))
            rt = _decay(self.type_of(node.right))
            if node.op in ("<", ">", "<=", ">=", "==", "!=", "&&", "||"):
                return Scalar(T.INT)
            if isinstance(lt, Pointer):
                return Scalar(OFFSET_TYPE) if isinstance(rt, Pointer) else lt
            if isinstance(rt, Pointer):
                return rt
            return Scalar(self.arith_type(lt.kind, rt.kind))
        self.err("unsupported operand of sizeof", node)

    # -- arithmetic conversions --------------------------------------------

    def promote(self, k: T) -> T:
        if k.is_int and self.abi.sizeof(k) < self.abi.sizeof(T.INT):
            return T.INT
        if k.is_int and k.rank < T.INT.rank:
            return T.INT if k.is_signed else T.UINT
        return k

    def arith_type(self, a: T, b: T) -> T:
        for f in (T.LDOUBLE, T.DOUBLE, T.FLOAT):
            if a is f or b is f:
                return f
        a, b = self.promote(a), self.promote(b)
        if a is b:
            return a
        if a.is_signed == b.is_signed:
            return a if a.rank >= b.rank else b
        s, u = (a, b) if a.is_signed else (b, a)
        if u.rank >= s.rank:
            return u
        if self.abi.sizeof(s) > self.abi.sizeof(u):
            return s
        return s.to_unsigned()

    def convert(self, e: Expr, to: T) -> Expr:
        if e.ty is to:
            return e
        if isinstance(e, Const) and to is not T.PTR:
            if to.is_int:
                return Const(self.abi.wrap(to, int(e.value)), to)
            if isinstance(e.value, int) and abs(e.value) < 2 ** 24:
                return Const(float(e.value), to)
        return Cast(to, e)

    # -- program -------------------------------------------------------------

    def lower(self) -> Cfg:
        for ext in self.program.ast.ext:
            if isinstance(ext, c_ast.FuncDef):
                self.declare_function(ext.decl, ext)
            elif isinstance(ext, c_ast.Typedef):
                self.bind(ext.name, ("typedef", self.resolve_type(ext.type)))
            elif isinstance(ext, c_ast.Decl):
                self.global_decl(ext)
        if "main" not in self.funcs:
            self.err("no main function")
        for name, fdef in self.funcs.items():
            self.collect_static_locals(name, fdef)

        main = self.funcs["main"]
        ftype = self.func_types["main"]
        frame = _Frame("main", "main", "", ftype.ret, None, -1)
        self.frames.append(frame)
        self.frame_vars["main"] = frame.vars
        entry = self.new_point()
        exit_point = self.new_point()
        frame.exit_point = exit_point
        self.cur = entry
        for var, init in self.global_inits:
            self.loc = loc_of(init, self.file)
            self.initialize(AddrOf(var.name), var.ctype, init, zero_fill=False)
        self.bind_params(frame, main, [])
        self.stmt(main.body)
        self.goto(exit_point)
        self.frames.pop()
        return self.finish(entry, exit_point)

    def finish(self, entry, exit_point) -> Cfg:
        globals_ = frozenset(v.name for v in self.vars.values() if v.static)
        for p in self.points.values():
            vs = set(globals_)
            for key in p.stack:
                vs.update(v.name for v in self.frame_vars[key])
            p.vars = frozenset(vs)
        points = [self.points[i] for i in sorted(self.points)]
        return Cfg(points=points, edges=self.edges, entry=entry, exit=exit_point,
                   vars=dict(self.vars), functions=frozenset(self.func_types),
                   source_file=self.file)

    def declare_function(self, decl, fdef=None):
        ftype = self.resolve_type(decl.type)
        self.func_types[decl.name] = ftype
        self.bind(decl.name, ("func", decl.name))
        if fdef is not None:
            if decl.name in self.funcs:
                self.err(f"redefinition of function {decl.name!r}", decl)
            self.funcs[decl.name] = fdef

    def global_decl(self, d: c_ast.Decl):
        if isinstance(d.type, c_ast.FuncDecl):
            self.declare_function(d)
            return
        t = self.resolve_type(d.type)
        if d.name is None:
            return
        if "extern" in d.storage and d.init is None:
            self.err("extern declarations are not supported (no linking)", d)
        t = self.complete_array(t, d.init, d)
        if d.name in self.vars:
            self.err(f"redefinition of {d.name!r}", d)
        var = self.make_var(d.name, t, static=True, volatile=_is_volatile(d.type), node=d)
        self.bind(d.name, ("var", var))
        if d.init is not None:
            self.global_inits.append((var, d.init))

    def collect_static_locals(self, fname, fdef):
        for node in _walk(fdef.body):
            if isinstance(node, c_ast.Decl) and "static" in node.storage \
                    and not isinstance(node.type, c_ast.FuncDecl):
                t = self.complete_array(self.resolve_type(node.type), node.init, node)
                name = f"{fname}.{node.name}"
                while name in self.vars:
                    name += "'"
                var = self.make_var(name, t, static=True,
                                    volatile=_is_volatile(node.type), node=node)
                self.static_locals[id(node)] = var
                if node.init is not None:
                    self.global_inits.append((var, node.init))

    def complete_array(self, t, init, node):
        if isinstance(t, _OpenArray):
            if isinstance(init, c_ast.InitList):
                return Array(t.elem, len(init.exprs))
            if isinstance(init, c_ast.Constant) and init.type == "string":
                return Array(t.elem, len(_string_bytes(init.value)) + 1)
            self.err("array of unknown size", node)
        return t

    def make_var(self, name, t, static, volatile=False, node=None, frame=None) -> VarInfo:
        if isinstance(t, (Void, Func)):
            self.err(f"variable {name!r} has non-object type {t}", node)
        var = VarInfo(name=name, ctype=t, size=self.sizeof(t, node), align=self.alignof(t),
                      static=static, volatile=volatile, source=name)
        self.vars[name] = var
        if frame is not None:
            frame.vars.append(var)
        return var

    def local_var(self, frame: _Frame, name: str, t: CType, volatile=False, node=None):
        base = f"{frame.prefix}{name}"
        n = frame.names.get(base, 0)
        frame.names[base] = n + 1
        mangled = base if n == 0 else f"{base}~{n}"
        return self.make_var(mangled, t, static=False, volatile=volatile, node=node, frame=frame)

    def temp(self, t: CType) -> VarInfo:
        self.temps += 1
        frame = self.frames[-1]
        return self.make_var(f"{frame.prefix}__t{self.temps}", t, static=False, frame=frame)

    # -- calls ---------------------------------------------------------------

    def bind_params(self, frame: _Frame, fdef: c_ast.FuncDef, args: list):
        params = []
        fargs = fdef.decl.type.args
        if fargs is not None:
            for p in fargs.params:
                pt = self.resolve_type(p.type)
                if isinstance(pt, Void):
                    continue
                params.append((p, _decay(pt)))
        if len(params) != len(args) and frame.func != "main":
            self.err(f"{frame.func} expects {len(params)} arguments, got {len(args)}")
        if frame.func == "main" and params:
            self.err("main must not take parameters")
        pvars = []
        for p, pt in params:
            var = self.local_var(frame, p.name or "_", pt, _is_volatile(p.type), p)
            frame.scopes[-1][p.name] = ("var", var)
            pvars.append(var)
        if not args:
            self.emit(SKIP)
        for var, (value, vt) in zip(pvars, args):
            self.store(AddrOf(var.name), var.ctype, value, vt)

    def call(self, node: c_ast.FuncCall):
        args_nodes = node.args.exprs if node.args is not None else []
        target = node.name
        direct = None
        if isinstance(target, c_ast.ID):
            entry = self.lookup(target.name, target)
            if entry[0] == "func":
                direct = entry[1]
        args = [self.value(a) for a in args_nodes]
        if direct is not None:
            return self.inline(direct, args, node)
        fp, ft = self.rvalue(target)
        if isinstance(ft, Pointer) and isinstance(ft.target, Func):
            ftype = ft.target
        elif isinstance(ft, Func):
            ftype = ft
        else:
            self.err("called object is not a function", node)
        return self.dispatch(fp, ftype, args, node)

    def dispatch(self, fp: Expr, ftype: Func, args, node):
        tmp = self.temp(Pointer(ftype))
        self.emit(Assign(T.PTR, AddrOf(tmp.name), fp))
        ptr = Deref(T.PTR, AddrOf(tmp.name))
        cands = [f for f in self.address_taken
                 if f in self.funcs and len(self.func_types[f].params) == len(args)]
        ret = None
        if not isinstance(ftype.ret, Void):
            ret = self.temp(ftype.ret)
        start = self.here()
        join = self.new_point()
        miss: Expr | None = None
        for f in cands:
            self.cur = start
            hit = Binary("!=", ptr, AddrOf(f), T.INT)
            self.emit(Guard(hit))
            res = self.inline(f, args, node)
            if ret is not None and res is not None:
                self.store(AddrOf(ret.name), ret.ctype, *res)
            self.goto(join)
            eq = Binary("==", ptr, AddrOf(f), T.INT)
            miss = eq if miss is None else Binary("|", miss, eq, T.INT)
        trap = self.new_point()
        self.points[trap].trap = "invalid-pointer"
        self.edge(start, trap, Guard(miss if miss is not None else Const(0, T.INT)))
        self.cur = join
        if ret is None:
            return None
        return self.load(AddrOf(ret.name), ret.ctype)

    def inline(self, fname: str, args: list, node):
        if fname not in self.funcs:
            self.err(f"call to undefined function {fname!r}", node)
        if any(f.func == fname for f in self.frames):
            self.err(f"recursion rejected: {fname}", node)
        if len(self.frames) >= MAX_INLINE_DEPTH:
            self.err("inlining depth limit exceeded", node)
        fdef = self.funcs[fname]
        ftype = self.func_types[fname]
        self.instances += 1
        key = f"{fname}#{self.instances}"
        ret_var = None
        if not isinstance(ftype.ret, Void):
            ret_var = self.temp(ftype.ret)
        frame = _Frame(fname, key, f"{key}.", ftype.ret, ret_var, -1)
        self.frames.append(frame)
        self.frame_vars[key] = frame.vars
        frame.exit_point = self.new_point()
        saved_loc = self.loc
        self.bind_params(frame, fdef, args)
        self.stmt(fdef.body)
        self.goto(frame.exit_point)
        self.loc = saved_loc
        self.cur = frame.exit_point
        self.frames.pop()
        self.emit(SKIP)
        if ret_var is None:
            return None
        return self.load(AddrOf(ret_var.name), ret_var.ctype)

    # -- statements ----------------------------------------------------------

    def stmt(self, node):
        if node is None:
            return
        self.loc = loc_of(node, self.file)
        method = getattr(self, f"stmt_{type(node).__name__}", None)
        if method is None:
            self.value(node, discard=True)
            return
        method(node)

    def stmt_Compound(self, node):
        frame = self.frames[-1]
        frame.scopes.append({})
        for item in node.block_items or ():
            self.stmt(item)
        frame.scopes.pop()

    def stmt_EmptyStatement(self, node):
        pass

    def stmt_Typedef(self, node):
        self.bind(node.name, ("typedef", self.resolve_type(node.type)))

    def stmt_DeclList(self, node):
        for d in node.decls:
            self.stmt(d)

    def stmt_Decl(self, node):
        if isinstance(node.type, c_ast.FuncDecl):
            self.declare_function(node)
            return
        if id(node) in self.static_locals:
            self.bind(node.name, ("var", self.static_locals[id(node)]))
            return
        t = self.complete_array(self.resolve_type(node.type), node.init, node)
        if node.name is None:
            return
        var = self.local_var(self.frames[-1], node.name, t, _is_volatile(node.type), node)
        self.bind(node.name, ("var", var))
        if node.init is not None:
            self.initialize(AddrOf(var.name), t, node.init, zero_fill=True)

    def stmt_Label(self, node):
        frame = self.frames[-1]
        name = node.name if frame.key == "main" else f"{frame.key}:{node.name}"
        self.points[self.here()].labels.append(name)
        self.stmt(node.stmt)

    def stmt_Return(self, node):
        frame = self.frames[-1]
        if node.expr is not None:
            if frame.ret_var is not None:
                self.store(AddrOf(frame.ret_var.name), frame.ret_var.ctype,
                           *self.value(node.expr))
            else:
                self.value(node.expr, discard=True)
        self.goto(frame.exit_point)

    def stmt_Break(self, node):
        if not self.frames[-1].loops:
            self.err("break outside loop or switch", node)
        self.goto(self.frames[-1].loops[-1][0])

    def stmt_Continue(self, node):
        for brk, cont in reversed(self.frames[-1].loops):
            if cont is not None:
                self.goto(cont)
                return
        self.err("continue outside loop", node)

    def stmt_If(self, node):
        then_pt, else_pt = self.new_point(), self.new_point()
        self.cond(node.cond, then_pt, else_pt)
        join = self.new_point()
        self.cur = then_pt
        self.stmt(node.iftrue)
        self.goto(join)
        self.cur = else_pt
        self.stmt(node.iffalse)
        self.goto(join)
        self.cur = join

    def loop(self, cond, body, step=None, do_while=False):
        frame = self.frames[-1]
        head = self.new_point()
        body_pt = self.new_point()
        exit_pt = self.new_point()
        cont_pt = self.new_point()
        self.goto(body_pt if do_while else head)
        self.cur = head
        if cond is None:
            self.goto(body_pt)
        else:
            self.cond(cond, body_pt, exit_pt)
        frame.loops.append((exit_pt, cont_pt))
        self.cur = body_pt
        self.stmt(body)
        frame.loops.pop()
        self.goto(cont_pt)
        self.cur = cont_pt
        if step is not None:
            self.loc = loc_of(step, self.file)
            self.value(step, discard=True)
        self.goto(head)
        self.cur = exit_pt

    def stmt_While(self, node):
        self.loop(node.cond, node.stmt)

    def stmt_DoWhile(self, node):
        self.loop(node.cond, node.stmt, do_while=True)

    def stmt_For(self, node):
        frame = self.frames[-1]
        frame.scopes.append({})
        if node.init is not None:
            self.stmt(node.init)
        self.loop(node.cond, node.stmt, node.next)
        frame.scopes.pop()

    def stmt_Switch(self, node):
        frame = self.frames[-1]
        value, vt = self.rvalue(node.cond)
        kind = self.promote(_kind(vt, node))
        tmp = self.temp(Scalar(kind))
        self.emit(Assign(kind, AddrOf(tmp.name), self.convert(value, kind)))
        sel = Deref(kind, AddrOf(tmp.name))
        items = node.stmt.block_items if isinstance(node.stmt, c_ast.Compound) else [node.stmt]
        items = items or []
        case_points = {}
        default_pt = None
        for it in items:
            if isinstance(it, (c_ast.Case, c_ast.Default)):
                case_points[id(it)] = self.new_point()
                if isinstance(it, c_ast.Default):
                    default_pt = case_points[id(it)]
        exit_pt = self.new_point()
        for it in items:
            if isinstance(it, c_ast.Case):
                v = Const(self.abi.wrap(kind, self.const_int(it.expr)), kind)
                nxt = self.new_point()
                src = self.here()
                self.edge(src, case_points[id(it)], Guard(Binary("!=", sel, v, T.INT)))
                self.edge(src, nxt, Guard(Binary("==", sel, v, T.INT)))
                self.cur = nxt
        self.goto(default_pt if default_pt is not None else exit_pt)
        frame.loops.append((exit_pt, None))
        frame.scopes.append({})
        for it in items:
            if isinstance(it, (c_ast.Case, c_ast.Default)):
                self.goto(case_points[id(it)])
                self.cur = case_points[id(it)]
                for s in it.stmts or ():
                    self.stmt(s)
            else:
                self.stmt(it)
        frame.scopes.pop()
        frame.loops.pop()
        self.goto(exit_pt)
        self.cur = exit_pt

    def stmt_Goto(self, node):
        self.err("goto is not supported", node)

    def cond(self, node, t_pt, f_pt):
        """Branch to ``t_pt`` when ``node`` is non-zero, else to ``f_pt``."""
        if isinstance(node, c_ast.BinaryOp) and node.op in ("&&", "||"):
            mid = self.new_point()
            if node.op == "&&":
                self.cond(node.left, mid, f_pt)
            else:
                self.cond(node.left, t_pt, mid)
            self.cur = mid
            self.cond(node.right, t_pt, f_pt)
            return
        if isinstance(node, c_ast.UnaryOp) and node.op == "!":
            self.cond(node.expr, f_pt, t_pt)
            return
        e, t = self.rvalue(node)
        _kind(t, node)
        src = self.here()
        self.cur = None
        if isinstance(e, Const):
            self.edge(src, t_pt if e.value else f_pt, SKIP)
            return
        self.edge(src, f_pt, Guard(e))
        self.edge(src, t_pt, Guard(Unary("!", e, T.INT)))

    # -- initializers and stores -------------------------------------------

    def initialize(self, addr: Expr, t: CType, init, zero_fill: bool):
        if isinstance(init, c_ast.InitList):
            if isinstance(t, Array):
                if len(init.exprs) > t.length:
                    self.err("too many initializers", init)
                esize = self.sizeof(t.elem)
                for i in range(t.length):
                    sub = init.exprs[i] if i < len(init.exprs) else None
                    if sub is None and not zero_fill:
                        break
                    self.init_sub(_offset(addr, i * esize), t.elem, sub, zero_fill)
                return
            if isinstance(t, Record):
                fields = field_offsets(t, self.abi)
                if t.union:
                    fields = fields[:1]
                if len(init.exprs) > len(fields):
                    self.err("too many initializers", init)
                for i, (_, off, ft) in enumerate(fields):
                    sub = init.exprs[i] if i < len(init.exprs) else None
                    if sub is None and not zero_fill:
                        break
                    self.init_sub(_offset(addr, off), ft, sub, zero_fill)
                return
            if len(init.exprs) == 1:
                self.initialize(addr, t, init.exprs[0], zero_fill)
                return
            self.err("bad scalar initializer", init)
        if isinstance(init, c_ast.Constant) and init.type == "string" and isinstance(t, Array):
            data = _string_bytes(init.value) + [0]
            if len(data) > t.length + 1:
                self.err("string initializer too long", init)
            ek = _kind(t.elem, init)
            for i in range(t.length):
                v = data[i] if i < len(data) else 0
                self.emit(Assign(ek, _offset(addr, i), Const(self.abi.wrap(ek, v), ek)))
            return
        self.store(addr, t, *self.value(init))

    def init_sub(self, addr, t, sub, zero_fill):
        if sub is not None:
            self.initialize(addr, t, sub, zero_fill)
            return
        for off, k in _scalar_leaves(t, self.abi):
            self.emit(Assign(k, _offset(addr, off), Const(0 if k.is_int else 0.0, k)
                             if k is not T.PTR else Cast(T.PTR, Const(0, T.INT))))

    def store(self, addr: Expr, t: CType, value: Expr, vt: CType):
        """Assign ``value`` (of type ``vt``) to the object of type ``t`` at ``addr``."""
        if isinstance(t, (Record, Array)):
            if not isinstance(vt, type(t)) or self.sizeof(vt) != self.sizeof(t):
                self.err("aggregate assignment with mismatched types")
            if isinstance(value, _Aggregate):
                self.emit(Copy(self.sizeof(t), self.alignof(t), addr, value.addr, str(t)))
                return
            self.err("aggregate value expected")
        k = _kind(t)
        if isinstance(value, _Aggregate):
            self.err(f"cannot assign {vt} to {t}")
        if isinstance(value, Deref) and value.ty is k:
            self.emit(Copy(self.abi.sizeof(k), self.abi.alignof(k), addr, value.addr, str(k)))
            return
        if k is T.PTR and not isinstance(scalar_kind(vt), T):
            self.err(f"cannot assign {vt} to a pointer")
        self.emit(Assign(k, addr, self.to_kind(value, vt, k)))

    def to_kind(self, value: Expr, vt: CType, k: T) -> Expr:
        vk = _kind(vt)
        if k is T.PTR and vk is T.PTR:
            return value
        return self.convert(value, k)

    # -- expressions -----------------------------------------------------------

    def value(self, node, discard=False):
        """Lower an expression; aggregates come back as ``_Aggregate`` addresses."""
        if isinstance(node, c_ast.Assignment):
            addr, t = self.assignment(node)
            if discard:
                return None
            return self.load(addr, t)
        if isinstance(node, c_ast.UnaryOp) and node.op in ("++", "--", "p++", "p--") and discard:
            self.incdec(node, want_old=False)
            return None
        if isinstance(node, c_ast.FuncCall):
            res = self.call(node)
            if discard:
                return None
            if res is None:
                self.err("void value used", node)
            return res
        if isinstance(node, c_ast.ExprList):
            res = None
            for i, e in enumerate(node.exprs):
                res = self.value(e, discard=discard or i < len(node.exprs) - 1)
            return res
        if self.is_lvalue(node):
            addr, t, vol = self.lvalue(node)
            if discard and not vol:
                return None
            return self.load(addr, t, vol)
        method = getattr(self, f"rvalue_{type(node).__name__}", None)
        if method is None:
            self.err(f"unsupported expression {type(node).__name__}", node)
        res = method(node)
        return None if discard else res

    def is_lvalue(self, node) -> bool:
        if isinstance(node, c_ast.ID):
            return self.lookup(node.name, node)[0] == "var"
        if isinstance(node, (c_ast.StructRef, c_ast.ArrayRef)):
            return True
        return isinstance(node, c_ast.UnaryOp) and node.op == "*"

    def load(self, addr: Expr, t: CType, volatile=False):
        if isinstance(t, Array):
            return addr, Pointer(t.elem)
        if isinstance(t, Func):
            return addr, Pointer(t)
        if isinstance(t, Record):
            return _Aggregate(addr), t
        k = _kind(t)
        if volatile:
            self.emit(Assign(k, addr, Input(k, _root_name(addr))))
        return Deref(k, addr), t

    def rvalue(self, node) -> tuple[Expr, CType]:
        res = self.value(node)
        if res is None:
            self.err("value expected", node)
        e, t = res
        if isinstance(e, _Aggregate):
            self.err(f"scalar value expected, got {t}", node)
        return e, t

    def lvalue(self, node) -> tuple[Expr, CType, bool]:
        if isinstance(node, c_ast.ID):
            entry = self.lookup(node.name, node)
            if entry[0] != "var":
                self.err(f"{node.name!r} is not an object", node)
            var = entry[1]
            return AddrOf(var.name), var.ctype, var.volatile
        if isinstance(node, c_ast.StructRef):
            if node.type == ".":
                addr, t, vol = self.lvalue_or_aggregate(node.name)
            else:
                addr, pt = self.rvalue(node.name)
                if not isinstance(pt, Pointer):
                    self.err("'->' applied to a non-pointer", node)
                t, vol = pt.target, False
            if not isinstance(t, Record) or not t.complete:
                self.err(f"field access on non-record type {t}", node)
            for fname, off, ft in field_offsets(t, self.abi):
                if fname == node.field.name:
                    return _offset(addr, off), ft, vol
            for fname, off, ft in field_offsets(t, self.abi):
                if fname.startswith("<anon") and isinstance(ft, Record) and ft.field(node.field.name):
                    for sname, soff, st in field_offsets(ft, self.abi):
                        if sname == node.field.name:
                            return _offset(addr, off + soff), st, vol
            self.err(f"no field {node.field.name!r} in {t}", node)
        if isinstance(node, c_ast.ArrayRef):
            base, bt = self.rvalue(node.name)
            idx, it = self.rvalue(node.subscript)
            if isinstance(it, Pointer) and not isinstance(bt, Pointer):
                base, bt, idx, it = idx, it, base, bt
            if not isinstance(bt, Pointer):
                self.err("subscripted value is not an array or pointer", node)
            vol = self.is_lvalue(node.name) and self.lvalue_volatile(node.name)
            return self.ptr_add(base, bt, idx, it, "+", node), bt.target, vol
        if isinstance(node, c_ast.UnaryOp) and node.op == "*":
            addr, pt = self.rvalue(node.expr)
            if not isinstance(pt, Pointer):
                self.err("dereference of a non-pointer", node)
            if isinstance(pt.target, Void):
                self.err("dereference of void*", node)
            return addr, pt.target, False
        self.err("lvalue expected", node)

    def lvalue_volatile(self, node) -> bool:
        if isinstance(node, c_ast.ID):
            entry = self.lookup(node.name, node)
            return entry[0] == "var" and entry[1].volatile and isinstance(entry[1].ctype, Array)
        return False

    def lvalue_or_aggregate(self, node):
        if isinstance(node, c_ast.FuncCall):
            res = self.call(node)
            if res is None or not isinstance(res[0], _Aggregate):
                self.err("record value expected", node)
            return res[0].addr, res[1], False
        return self.lvalue(node)

    def assignment(self, node: c_ast.Assignment):
        if node.op == "=":
            addr, t, _ = self.lvalue(node.lvalue)
            res = self.value(node.rvalue)
            if res is None:
                self.err("void value used", node)
            value, vt = res
            self.store(addr, t, value, vt)
            return addr, t
        addr, t, vol = self.lvalue(node.lvalue)
        op = node.op[:-1]
        cur, ct = self.load(addr, t, vol)
        rhs, rt = self.rvalue(node.rvalue)
        res, rest = self.binary(op, cur, ct, rhs, rt, node)
        self.store(addr, t, res, rest)
        return addr, t

    def incdec(self, node, want_old):
        addr, t, vol = self.lvalue(node.expr)
        cur, ct = self.load(addr, t, vol)
        old = None
        if want_old:
            k = _kind(t, node)
            tmp = self.temp(t)
            self.emit(Assign(k, AddrOf(tmp.name), cur))
            old = (Deref(k, AddrOf(tmp.name)), t)
            cur = Deref(k, AddrOf(tmp.name))
        op = "+" if "+" in node.op else "-"
        res, rt = self.binary(op, cur, ct, Const(1, T.INT), Scalar(T.INT), node)
        self.store(addr, t, res, rt)
        return old if want_old else self.load(addr, t)

    def rvalue_UnaryOp(self, node):
        op = node.op
        if op == "&":
            if isinstance(node.expr, c_ast.ID):
                entry = self.lookup(node.expr.name, node.expr)
                if entry[0] == "func":
                    self.take_address(entry[1])
                    return AddrOf(entry[1]), Pointer(self.func_types[entry[1]])
            addr, t, _ = self.lvalue_or_aggregate(node.expr)
            return addr, Pointer(t)
        if op == "sizeof":
            return Const(self.sizeof(self.type_of(node.expr), node), T.ULONG), Scalar(T.ULONG)
        if op in ("++", "--"):
            return self.incdec(node, want_old=False)
        if op in ("p++", "p--"):
            return self.incdec(node, want_old=True)
        e, t = self.rvalue(node.expr)
        k = _kind(t, node)
        if op == "!":
            if isinstance(e, Const):
                return Const(int(not e.value), T.INT), Scalar(T.INT)
            return Unary("!", e, T.INT), Scalar(T.INT)
        if k is T.PTR:
            self.err(f"invalid operand of unary {op}", node)
        pk = self.promote(k)
        e = self.convert(e, pk)
        if op == "+":
            return e, Scalar(pk)
        if op == "~" and not pk.is_int:
            self.err("'~' on a floating value", node)
        if isinstance(e, Const) and pk.is_int:
            v = -e.value if op == "-" else ~e.value
            return Const(self.abi.wrap(pk, v), pk), Scalar(pk)
        if isinstance(e, Const) and op == "-":
            return Const(-e.value, pk), Scalar(pk)
        return Unary(op, e, pk), Scalar(pk)

    def rvalue_BinaryOp(self, node):
        if node.op in ("&&", "||"):
            return self.cond_value(node)
        le, lt = self.rvalue(node.left)
        re_, rt = self.rvalue(node.right)
        return self.binary(node.op, le, lt, re_, rt, node)

    def cond_value(self, node):
        tmp = self.temp(Scalar(T.INT))
        t_pt, f_pt, join = self.new_point(), self.new_point(), self.new_point()
        self.cond(node, t_pt, f_pt)
        self.cur = t_pt
        self.emit(Assign(T.INT, AddrOf(tmp.name), Const(1, T.INT)))
        self.goto(join)
        self.cur = f_pt
        self.emit(Assign(T.INT, AddrOf(tmp.name), Const(0, T.INT)))
        self.goto(join)
        self.cur = join
        return Deref(T.INT, AddrOf(tmp.name)), Scalar(T.INT)

    def binary(self, op, le, lt, re_, rt, node):
        lt, rt = _decay(lt), _decay(rt)
        lk, rk = _kind(lt, node), _kind(rt, node)
        if op in ("+", "-") and (lk is T.PTR or rk is T.PTR):
            if lk is T.PTR and rk is T.PTR:
                if op == "+":
                    self.err("addition of two pointers", node)
                esize = self.elem_size(lt, node)
                diff = Binary("-", le, re_, OFFSET_TYPE)
                if esize == 1:
                    return diff, Scalar(OFFSET_TYPE)
                return Binary("/", diff, Const(esize, OFFSET_TYPE), OFFSET_TYPE), Scalar(OFFSET_TYPE)
            if rk is T.PTR:
                if op == "-":
                    self.err("integer minus pointer", node)
                le, lt, re_, rt = re_, rt, le, lt
            return self.ptr_add(le, lt, re_, rt, op, node), lt
        if op in ("<", ">", "<=", ">=", "==", "!="):
            if lk is T.PTR or rk is T.PTR:
                le = le if lk is T.PTR else self.null_const(le, node)
                re_ = re_ if rk is T.PTR else self.null_const(re_, node)
                return Binary(op, le, re_, T.INT), Scalar(T.INT)
            ck = self.arith_type(lk, rk)
            a, b = self.convert(le, ck), self.convert(re_, ck)
            if isinstance(a, Const) and isinstance(b, Const):
                return Const(int(_cmp(op, a.value, b.value)), T.INT), Scalar(T.INT)
            return Binary(op, a, b, T.INT), Scalar(T.INT)
        if lk is T.PTR or rk is T.PTR:
            self.err(f"invalid pointer operand of {op!r}", node)
        if op in ("<<", ">>"):
            k = self.promote(lk)
            a, b = self.convert(le, k), self.convert(re_, self.promote(rk))
            if not (k.is_int and b.ty.is_int):
                self.err(f"invalid operands of {op!r}", node)
            return Binary(op, a, b, k), Scalar(k)
        k = self.arith_type(lk, rk)
        if op in ("%", "&", "|", "^") and not k.is_int:
            self.err(f"invalid floating operands of {op!r}", node)
        a, b = self.convert(le, k), self.convert(re_, k)
        return Binary(op, a, b, k), Scalar(k)

    def null_const(self, e, node):
        if isinstance(e, Const) and e.value == 0:
            return Cast(T.PTR, Const(0, T.INT))
        if e.ty is not None and e.ty.is_int:
            return Cast(T.PTR, e)
        self.err("comparison between pointer and non-integer", node)

    def elem_size(self, pt: Pointer, node) -> int:
        target = pt.target
        if isinstance(target, Void):
            return 1
        if isinstance(target, Func):
            self.err("arithmetic on a function pointer", node)
        return self.sizeof(target, node)

    def ptr_add(self, base, bt, idx, it, op, node):
        esize = self.elem_size(bt, node)
        ik = _kind(it, node)
        if not ik.is_int:
            self.err("pointer offset must be an integer", node)
        off = self.convert(idx, OFFSET_TYPE)
        if isinstance(off, Const):
            return _offset(base, (off.value if op == "+" else -off.value) * esize)
        if esize != 1:
            off = Binary("*", off, Const(esize, OFFSET_TYPE), OFFSET_TYPE)
        return Binary(op, base, off, T.PTR)

    def rvalue_Cast(self, node):
        t = self.resolve_type(node.to_type)
        if isinstance(t, Void):
            self.value(node.expr, discard=True)
            return Const(0, T.INT), Scalar(T.INT)
        e, et = self.rvalue(node.expr)
        et = _decay(et)
        k, ek = _kind(t, node), _kind(et, node)
        if k is T.PTR and ek is T.PTR:
            return e, t
        return self.convert(e, k), t

    def rvalue_Constant(self, node):
        if node.type == "string":
            self.err("string literals are only supported as array initializers", node)
        v, k = _literal(node)
        return Const(v, k), Scalar(k)

    def rvalue_ID(self, node):
        entry = self.lookup(node.name, node)
        if entry[0] == "enum":
            return Const(entry[1], T.INT), Scalar(T.INT)
        if entry[0] == "func":
            self.take_address(entry[1])
            return AddrOf(entry[1]), Pointer(self.func_types[entry[1]])
        self.err(f"{node.name!r} is not a value", node)

    def rvalue_TernaryOp(self, node):
        t_pt, f_pt, join = self.new_point(), self.new_point(), self.new_point()
        self.cond(node.cond, t_pt, f_pt)
        self.cur = t_pt
        a, at = self.rvalue(node.iftrue)
        tmp_t = _decay(at)
        # the false arm is lowered after the temporary exists, so its type
        # is computed statically
        bt = _decay(self.type_of(node.iffalse))
        ak, bk = _kind(tmp_t, node), _kind(bt, node)
        rk = T.PTR if ak is T.PTR or bk is T.PTR else self.arith_type(ak, bk)
        rtype = tmp_t if ak is T.PTR else (bt if bk is T.PTR else Scalar(rk))
        tmp = self.temp(rtype)
        self.emit(Assign(rk, AddrOf(tmp.name), self.to_ptr_or_kind(a, ak, rk, node)))
        self.goto(join)
        self.cur = f_pt
        b, _ = self.rvalue(node.iffalse)
        self.emit(Assign(rk, AddrOf(tmp.name), self.to_ptr_or_kind(b, bk, rk, node)))
        self.goto(join)
        self.cur = join
        return Deref(rk, AddrOf(tmp.name)), rtype

    def to_ptr_or_kind(self, e, ek, rk, node):
        if rk is T.PTR and ek is not T.PTR:
            return self.null_const(e, node)
        return e if rk is T.PTR else self.convert(e, rk)

    def take_address(self, fname):
        if fname not in self.address_taken:
            self.address_taken.append(fname)

class _OpenArray(CType):
    def __init__(self, elem):
        self.elem = elem


@dataclass(frozen=True)
class _Aggregate(Expr):
    """The address of a record-typed value flowing through an expression."""

    addr: Expr
    ty: None = None


def _decay(t: CType) -> CType:
    if isinstance(t, Array):
        return Pointer(t.elem)
    if isinstance(t, Func):
        return Pointer(t)
    return t


def _kind(t: CType, node=None) -> T:
    k = scalar_kind(_decay(t))
    if k is None:
        raise FrontendError(f"scalar type expected, got {t}")
    return k


def _offset(addr: Expr, off: int) -> Expr:
    if off == 0:
        return addr
    if isinstance(addr, Binary) and addr.op == "+" and isinstance(addr.right, Const) \
            and addr.ty is T.PTR:
        total = addr.right.value + off
        if total == 0:
            return addr.left
        return Binary("+", addr.left, Const(total, OFFSET_TYPE), T.PTR)
    return Binary("+", addr, Const(off, OFFSET_TYPE), T.PTR)


def _root_name(addr: Expr) -> str:
    while isinstance(addr, Binary):
        addr = addr.left
    return addr.name if isinstance(addr, AddrOf) else "?"


def _scalar_leaves(t: CType, abi: Abi, base=0):
    if isinstance(t, (Scalar, Pointer)):
        yield base, t.kind
    elif isinstance(t, Array):
        es = sizeof(t.elem, abi)
        for i in range(t.length):
            yield from _scalar_leaves(t.elem, abi, base + i * es)
    elif isinstance(t, Record):
        fields = field_offsets(t, abi)
        if t.union:
            fields = fields[:1]
        for _, off, ft in fields:
            yield from _scalar_leaves(ft, abi, base + off)


def _is_volatile(t) -> bool:
    while True:
        if isinstance(t, c_ast.TypeDecl):
            return "volatile" in (t.quals or [])
        if isinstance(t, c_ast.PtrDecl):
            return "volatile" in (t.quals or [])
        if isinstance(t, c_ast.ArrayDecl):
            t = t.type
            continue
        return False


def _walk(node):
    yield node
    for _, c in node.children():
        yield from _walk(c)


def _cdiv(a, b):
    if isinstance(a, float) or isinstance(b, float):
        return a / b
    q = abs(a) // abs(b)
    return q if (a >= 0) == (b >= 0) else -q


def _cmp(op, a, b) -> bool:
    return {"<": a < b, ">": a > b, "<=": a <= b, ">=": a >= b,
            "==": a == b, "!=": a != b}[op]


def _string_bytes(lit: str) -> list[int]:
    body = lit[1:-1]
    return list(body.encode("latin-1").decode("unicode_escape").encode("latin-1"))


def _literal(node: c_ast.Constant):
    text = node.value
    if node.type == "char":
        b = _string_bytes(text)
        return (b[0] - 256 if b[0] >= 128 else b[0]), T.INT
    if node.type in ("float", "double", "long double") or (
            not text.lower().startswith("0x") and any(c in text for c in ".eE")):
        t = text.rstrip("fFlL")
        kind = T.FLOAT if text[-1:] in "fF" else T.DOUBLE
        return float(t), kind
    t = text.lower()
    suffix = ""
    while t and t[-1] in "ul":
        suffix = t[-1] + suffix
        t = t[:-1]
    if t.startswith("0x"):
        v = int(t, 16)
    elif t.startswith("0b"):
        v = int(t, 2)
    elif t.startswith("0") and len(t) > 1:
        v = int(t, 8)
    else:
        v = int(t)
    unsigned = "u" in suffix
    longs = suffix.count("l")
    candidates = {0: [T.INT, T.UINT, T.LONG, T.ULONG, T.LLONG, T.ULLONG],
                  1: [T.LONG, T.ULONG, T.LLONG, T.ULLONG],
                  2: [T.LLONG, T.ULLONG]}[longs]
    for k in candidates:
        if unsigned and k.is_signed:
            continue
        if k.is_signed and not unsigned and text[:2].lower() != "0x" and k.to_unsigned() is k:
            continue
        lo, hi = _DEFAULT_RANGES[k]
        if lo <= v <= hi:
            return v, k
    return v, T.ULLONG


_DEFAULT_RANGES = {k: Abi().int_range(k) for k in (T.INT, T.UINT, T.LONG, T.ULONG,
                                                    T.LLONG, T.ULLONG)}


def lower(program: Program, abi: Abi) -> Cfg:
    """Lower a parsed program to its control-flow graph under ``abi``."""
    return Lowerer(program, abi).lower()


def build_cfg(text: str, abi: Abi, file: str = "<input>") -> Cfg:
    from .parser import parse_program
    return lower(parse_program(text, file), abi)
