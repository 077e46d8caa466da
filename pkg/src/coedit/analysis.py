"""Static analysis of Python sources: code units, usage signatures,
semantic-preserving normalization, and the module import graph.

Everything here is a purely lexical, project-local index: module-level
definitions, class members, and import bindings. There is no type
inference; unresolvable names are silently skipped.
"""

from __future__ import annotations

import ast
import io
import tokenize
from dataclasses import dataclass, field
from typing import Mapping, Sequence

FUNCTION = "function"
CLASS_REGION = "class-region"
MODULE_REGION = "module-region"


class ParseError(Exception):
    def __init__(self, message: str, lineno: int = 0, col: int = 0):
        super().__init__(message)
        self.lineno = lineno
        self.col = col


@dataclass(frozen=True)
class UnitId:
    module: str
    qualname: str
    kind: str

    def __str__(self):
        return f"{self.module}:{self.qualname}"


@dataclass(frozen=True)
class CodeUnit:
    """A function, contiguous class-body region, or module-level region."""

    id: UnitId
    span: tuple[int, int]  # 1-based, inclusive
    lines: tuple[str, ...]

    @property
    def kind(self) -> str:
        return self.id.kind

    def text(self) -> str:
        return "\n".join(self.lines)


@dataclass(frozen=True)
class UsageSite:
    symbol: str
    kind: str  # function | variable | class-member
    definition_text: str
    module: str


@dataclass(frozen=True)
class SignatureDoc:
    """De-duplicated usage definitions grouped by defining module."""

    entries: tuple[UsageSite, ...]

    def __bool__(self):
        return bool(self.entries)

    def render(self) -> str:
        lines: list[str] = []
        last_module = None
        for site in self.entries:
            if site.module != last_module:
                lines.append(f"# module: {site.module}")
                last_module = site.module
            lines.extend(site.definition_text.split("\n"))
        return "\n".join(lines)


@dataclass(frozen=True)
class ImportGraph:
    nodes: frozenset[str]
    edges: frozenset[tuple[str, str]]  # importer -> imported

    def imports_of(self, module: str) -> set[str]:
        return {dst for src, dst in self.edges if src == module}


def _parse(source: str, filename: str = "<source>") -> ast.Module:
    try:
        return ast.parse(source, filename=filename)
    except SyntaxError as e:
        raise ParseError(str(e), e.lineno or 0, e.offset or 0) from e


def _comment_only_lines(source: str) -> set[str]:
    """Return the set of line numbers holding nothing but a comment."""
    out = set()
    try:
        for tok in tokenize.generate_tokens(io.StringIO(source).readline):
            if tok.type == tokenize.COMMENT:
                prefix = tok.line[: tok.start[1]]
                if not prefix.strip():
                    out.add(tok.start[0])
    except (tokenize.TokenError, IndentationError):
        pass
    return out


def _stmt_start(node: ast.stmt) -> int:
    decorators = getattr(node, "decorator_list", [])
    if decorators:
        return min(d.lineno for d in decorators)
    return node.lineno


def extract_units(source: str, module: str = "<module>") -> list[CodeUnit]:
    """Partition a module into function, class-region, and module-region units.

    Functions (including methods of arbitrarily nested classes) are atomic
    units spanning their whole definition; runs of plain statements between
    definitions become region units. Class header lines act as separators,
    and comment-only lines attach to the unit that follows them.
    """
    tree = _parse(source)
    src_lines = source.split("\n")
    units: list[CodeUnit] = []

    def end_line(node: ast.stmt) -> int:
        return node.end_lineno or node.lineno

    def emit_region(prefix: str, kind: str, run: list[ast.stmt], ordinal: int):
        start = _stmt_start(run[0])
        end = end_line(run[-1])
        qual = f"{prefix}<r{ordinal}>" if prefix else f"<r{ordinal}>"
        units.append(
            CodeUnit(
                UnitId(module, qual, kind),
                (start, end),
                tuple(src_lines[start - 1 : end]),
            )
        )

    def walk(body: Sequence[ast.stmt], prefix: str, region_kind: str):
        run: list[ast.stmt] = []
        ordinal = 0
        for stmt in body:
            if isinstance(stmt, (ast.FunctionDef, ast.AsyncFunctionDef)):
                if run:
                    emit_region(prefix, region_kind, run, ordinal)
                    ordinal += 1
                    run = []
                start = _stmt_start(stmt)
                end = end_line(stmt)
                units.append(
                    CodeUnit(
                        UnitId(module, prefix + stmt.name, FUNCTION),
                        (start, end),
                        tuple(src_lines[start - 1 : end]),
                    )
                )
            elif isinstance(stmt, ast.ClassDef):
                if run:
                    emit_region(prefix, region_kind, run, ordinal)
                    ordinal += 1
                    run = []
                walk(stmt.body, prefix + stmt.name + ".", CLASS_REGION)
            else:
                run.append(stmt)
        if run:
            emit_region(prefix, region_kind, run, ordinal)

    walk(tree.body, "", MODULE_REGION)
    units.sort(key=lambda u: u.span[0])

    # Attach comment-only lines to the unit that follows them; trailing
    # comments at end of file stick to the last unit instead.
    comments = _comment_only_lines(source)
    adjusted: list[CodeUnit] = []
    prev_end = 0
    for u in units:
        start, end = u.span
        s = start
        while s - 1 > prev_end and (s - 1) in comments:
            s -= 1
        if s != start:
            u = CodeUnit(u.id, (s, end), tuple(src_lines[s - 1 : end]))
        adjusted.append(u)
        prev_end = u.span[1]
    if adjusted:
        start, end = adjusted[-1].span
        new_end = end
        for i in range(end + 1, len(src_lines) + 1):
            if not src_lines[i - 1].strip():
                continue
            if i in comments:
                new_end = i
            else:
                break
        if new_end != end:
            u = adjusted[-1]
            adjusted[-1] = CodeUnit(
                u.id, (start, new_end), tuple(src_lines[start - 1 : new_end])
            )
    return adjusted


# --- project index -----------------------------------------------------------


@dataclass
class _ModuleInfo:
    name: str
    definitions: dict[str, UsageSite] = field(default_factory=dict)
    members: dict[str, dict[str, UsageSite]] = field(default_factory=dict)  # class -> attr
    imports: dict[str, tuple[str, str | None]] = field(default_factory=dict)


def _def_header(node: ast.FunctionDef | ast.AsyncFunctionDef, src_lines: list[str]) -> str:
    if node.body and node.body[0].lineno == node.lineno:
        # one-line definition: cut the header off before the inline body
        header = src_lines[node.lineno - 1][: node.body[0].col_offset].rstrip()
    elif node.body:
        header = "\n".join(src_lines[node.lineno - 1 : node.body[0].lineno - 1]).rstrip()
    else:
        header = "\n".join(src_lines[node.lineno - 1 : node.end_lineno or node.lineno]).rstrip()
    return _dedent_block(header) + " ..."


def _dedent_block(text: str) -> str:
    lines = text.split("\n")
    indent = len(lines[0]) - len(lines[0].lstrip())
    return "\n".join(l[indent:] if l[:indent].strip() == "" else l for l in lines)


def _assignment_text(node: ast.stmt, src_lines: list[str]) -> str:
    end = node.end_lineno or node.lineno
    return _dedent_block("\n".join(src_lines[node.lineno - 1 : end]).rstrip())


def _assigned_names(node: ast.stmt) -> list[str]:
    targets: list[ast.expr] = []
    if isinstance(node, ast.Assign):
        targets = list(node.targets)
    elif isinstance(node, (ast.AnnAssign, ast.AugAssign)):
        targets = [node.target]
    names = []
    for t in targets:
        if isinstance(t, ast.Name):
            names.append(t.id)
        elif isinstance(t, ast.Tuple):
            names.extend(e.id for e in t.elts if isinstance(e, ast.Name))
    return names


def _resolve_relative(importer: str, level: int, target: str | None) -> str:
    parts = importer.split(".")
    base = parts[: len(parts) - level] if level <= len(parts) else []
    if target:
        base = base + target.split(".")
    return ".".join(base)


class ProjectIndex:
    """Lexical definition index over a set of module sources.

    Built once from a codebase snapshot; read-only afterwards, so queries
    are safe from concurrent readers.
    """

    def __init__(self, modules: Mapping[str, str]):
        self.sources = dict(modules)
        self.modules: dict[str, _ModuleInfo] = {}
        for name in sorted(modules):
            try:
                self.modules[name] = self._index_module(name, modules[name])
            except ParseError:
                continue

    def _index_module(self, name: str, source: str) -> _ModuleInfo:
        tree = _parse(source, name)
        src_lines = source.split("\n")
        info = _ModuleInfo(name)
        for stmt in tree.body:
            self._index_stmt(info, stmt, src_lines, name)
        return info

    def _index_stmt(self, info: _ModuleInfo, stmt: ast.stmt, src_lines: list[str], module: str):
        if isinstance(stmt, (ast.FunctionDef, ast.AsyncFunctionDef)):
            info.definitions.setdefault(
                stmt.name,
                UsageSite(stmt.name, FUNCTION, _def_header(stmt, src_lines), module),
            )
        elif isinstance(stmt, ast.ClassDef):
            members = info.members.setdefault(stmt.name, {})
            for sub in stmt.body:
                if isinstance(sub, (ast.FunctionDef, ast.AsyncFunctionDef)):
                    members.setdefault(
                        sub.name,
                        UsageSite(
                            f"{stmt.name}.{sub.name}",
                            "class-member",
                            _def_header(sub, src_lines),
                            module,
                        ),
                    )
                else:
                    for n in _assigned_names(sub):
                        members.setdefault(
                            n,
                            UsageSite(
                                f"{stmt.name}.{n}",
                                "class-member",
                                _assignment_text(sub, src_lines),
                                module,
                            ),
                        )
        elif isinstance(stmt, ast.Import):
            for alias in stmt.names:
                local = alias.asname or alias.name.split(".")[0]
                info.imports[local] = (alias.name, None)
        elif isinstance(stmt, ast.ImportFrom):
            target = (
                _resolve_relative(info.name, stmt.level, stmt.module)
                if stmt.level
                else (stmt.module or "")
            )
            for alias in stmt.names:
                if alias.name == "*":
                    continue
                local = alias.asname or alias.name
                info.imports[local] = (target, alias.name)
        else:
            for n in _assigned_names(stmt):
                info.definitions.setdefault(
                    n, UsageSite(n, "variable", _assignment_text(stmt, src_lines), module)
                )

    def lookup(self, module: str, name: str) -> UsageSite | None:
        info = self.modules.get(module)
        if info is None:
            return None
        if name in info.definitions:
            return info.definitions[name]
        if name in info.imports:
            target_mod, symbol = info.imports[name]
            if symbol is None:
                return None  # bare module reference
            if target_mod in self.modules:
                return self.lookup(target_mod, symbol)
        return None

    def lookup_member(self, module: str, class_name: str, attr: str) -> UsageSite | None:
        info = self.modules.get(module)
        if info is None:
            return None
        if class_name in info.members:
            return info.members[class_name].get(attr)
        if class_name in info.imports:
            target_mod, symbol = info.imports[class_name]
            if symbol is not None and target_mod in self.modules:
                return self.lookup_member(target_mod, symbol, attr)
        return None

    def module_of_class(self, module: str, class_name: str) -> str | None:
        info = self.modules.get(module)
        if info is None:
            return None
        if class_name in info.members:
            return module
        if class_name in info.imports:
            target_mod, symbol = info.imports[class_name]
            if symbol is not None and target_mod in self.modules:
                return self.module_of_class(target_mod, symbol)
        return None


def _unit_local_names(tree: ast.AST) -> set[str]:
    """Names bound inside the unit (params, assignments, defs, comprehensions)."""
    local: set[str] = set()
    for node in ast.walk(tree):
        if isinstance(node, (ast.FunctionDef, ast.AsyncFunctionDef)):
            local.add(node.name)
            args = node.args
            for a in (
                list(args.posonlyargs)
                + list(args.args)
                + list(args.kwonlyargs)
                + ([args.vararg] if args.vararg else [])
                + ([args.kwarg] if args.kwarg else [])
            ):
                local.add(a.arg)
        elif isinstance(node, ast.ClassDef):
            local.add(node.name)
        elif isinstance(node, ast.Name) and isinstance(node.ctx, (ast.Store, ast.Del)):
            local.add(node.id)
        elif isinstance(node, (ast.comprehension,)):
            for t in ast.walk(node.target):
                if isinstance(t, ast.Name):
                    local.add(t.id)
        elif isinstance(node, ast.ExceptHandler) and node.name:
            local.add(node.name)
    return local


def _parse_unit(unit: CodeUnit) -> ast.AST | None:
    text = _dedent_block(unit.text())
    try:
        return ast.parse(text)
    except SyntaxError:
        return None


def find_usages(unit: CodeUnit, project: ProjectIndex) -> list[UsageSite]:
    """Resolve names referenced by the unit to their project definitions.

    Functions resolve to their header line(s); variables and class members
    to the first statement assigning them. Names bound within the unit
    shadow the project scope; unresolvable names are omitted.
    """
    tree = _parse_unit(unit)
    if tree is None:
        return []
    module = unit.id.module
    shadowed = _unit_local_names(tree)
    own_class = unit.id.qualname.split(".")[0] if "." in unit.id.qualname else None

    sites: list[UsageSite] = []
    seen: set[tuple[str, str]] = set()

    def add(site: UsageSite | None):
        if site is None:
            return
        if site.symbol == unit.id.qualname and site.module == module:
            return  # self reference
        key = (site.symbol, site.definition_text)
        if key not in seen:
            seen.add(key)
            sites.append(site)

    for node in ast.walk(tree):
        if isinstance(node, ast.Name) and isinstance(node.ctx, ast.Load):
            if node.id in shadowed:
                continue
            add(project.lookup(module, node.id))
        elif isinstance(node, ast.Attribute) and isinstance(node.ctx, ast.Load):
            base = node.value
            if isinstance(base, ast.Name):
                if base.id == "self" and own_class:
                    add(project.lookup_member(module, own_class, node.attr))
                elif base.id not in shadowed:
                    info = project.modules.get(module)
                    binding = info.imports.get(base.id) if info else None
                    if binding and binding[1] is None:
                        add(project.lookup(binding[0], node.attr))
                    else:
                        add(project.lookup_member(module, base.id, node.attr))
    return sites


def build_signature_doc(unit: CodeUnit, project: ProjectIndex) -> SignatureDoc:
    """Usage definitions grouped by defining module (modules sorted by
    path), keeping first-use order within each module."""
    sites = find_usages(unit, project)
    order: dict[str, list[UsageSite]] = {}
    for site in sites:
        order.setdefault(site.module, []).append(site)
    entries: list[UsageSite] = []
    for mod in sorted(order):
        entries.extend(order[mod])
    return SignatureDoc(tuple(entries))


# --- normalization -----------------------------------------------------------


class _Normalizer(ast.NodeTransformer):
    def _strip_docstring(self, body: list[ast.stmt], pad: bool = True) -> list[ast.stmt]:
        if (
            body
            and isinstance(body[0], ast.Expr)
            and isinstance(body[0].value, ast.Constant)
            and isinstance(body[0].value.value, str)
        ):
            body = body[1:]
        if pad and not body:
            return [ast.Pass()]
        return body

    def visit_Module(self, node):
        self.generic_visit(node)
        node.body = self._strip_docstring(node.body, pad=False)
        return node

    def visit_FunctionDef(self, node):
        self.generic_visit(node)
        node.body = self._strip_docstring(node.body)
        return node

    visit_AsyncFunctionDef = visit_FunctionDef

    def visit_ClassDef(self, node):
        self.generic_visit(node)
        node.body = self._strip_docstring(node.body)
        return node

    def visit_Call(self, node):
        self.generic_visit(node)
        node.keywords.sort(key=lambda kw: kw.arg or "")
        return node


def normalize_code(source: str) -> tuple[str, bool]:
    """Canonicalize code for equality checks.

    Strips comments and docstrings, sorts keyword arguments in calls, and
    re-renders with canonical formatting. Returns (text, normalized);
    unparseable input is passed through unchanged with normalized=False.
    """
    try:
        tree = ast.parse(source)
    except (SyntaxError, ValueError):
        return source, False
    tree = _Normalizer().visit(tree)
    ast.fix_missing_locations(tree)
    return ast.unparse(tree), True


# --- import graph ------------------------------------------------------------


def import_graph(project: Mapping[str, str]) -> ImportGraph:
    """Importer -> imported edges for statically resolvable project-internal
    imports; external imports are ignored."""
    names = set(project)
    edges: set[tuple[str, str]] = set()
    for importer, source in project.items():
        try:
            tree = _parse(source, importer)
        except ParseError:
            continue
        for node in ast.walk(tree):
            if isinstance(node, ast.Import):
                for alias in node.names:
                    target = alias.name
                    if target in names:
                        edges.add((importer, target))
            elif isinstance(node, ast.ImportFrom):
                base = (
                    _resolve_relative(importer, node.level, node.module)
                    if node.level
                    else (node.module or "")
                )
                for alias in node.names:
                    sub = f"{base}.{alias.name}" if base else alias.name
                    if sub in names:
                        edges.add((importer, sub))
                    elif base in names:
                        edges.add((importer, base))
    edges = {(s, d) for s, d in edges if s != d}
    return ImportGraph(frozenset(names), frozenset(edges))
