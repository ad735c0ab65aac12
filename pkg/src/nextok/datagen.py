"""Deterministic MiniDart corpus generator.

Produces the bundled desk-scale corpus: a directory of .dart files with the
statistics the models need to be trainable at small scale. Files mix a
shared pool of common names (which land inside the capped vocabulary) with
file-local rare names (which fall out of it), reuse identifiers heavily
enough to give local repetition a realistic rate, and lean on a small set
of statement shapes so a small recurrent model has structure to learn.

Regenerate with:  python -m nextok.datagen data/corpus --files 125 --seed 7
"""

from __future__ import annotations

import argparse
import random
import zlib
from pathlib import Path

WORDS = [
    "get", "set", "is", "add", "remove", "update", "load", "save", "file",
    "name", "index", "count", "item", "list", "map", "value", "key", "data",
    "node", "user", "time", "text", "line", "path", "code", "token", "cache",
    "next", "prev", "size", "flag", "read", "write", "parse", "init", "run",
    "start", "stop", "url", "id", "tag", "row", "col", "sum", "min", "max",
    "temp", "buffer", "pos", "src", "dst", "result", "request", "context",
    "object", "ref", "length", "total", "score", "rank", "batch", "model",
    "input", "output", "state", "event", "queue", "stack", "tree", "graph",
    "field", "entry", "group", "page", "view", "form", "task", "job", "log",
]

CLASS_WORDS = [
    "File", "Resource", "Provider", "Manager", "Handler", "Builder", "Parser",
    "Scanner", "Cache", "Store", "Reader", "Writer", "Service", "Client",
    "Server", "Config", "Context", "Buffer", "Queue", "Stack", "Node", "Tree",
    "Map", "List", "Entry", "Group", "View", "Model", "Task", "Worker",
    "Logger", "Filter", "Router", "Loader", "Helper", "Factory", "Registry",
]

TYPES = ["int", "double", "String", "bool"]

STRING_POOL = [
    '"name"', '"value"', '"error"', '"ok"', '"id"', '"data"', '"key"',
    '"result"', '"empty"', '"done"', '"start"', '"stop"', '"none"',
]

INT_POOL = ["0", "1", "2", "3", "5", "10", "16", "32", "100", "255", "1000"]

COMPARE_OPS = ["<", ">", "<=", ">=", "=="]
ARITH_OPS = ["+", "-", "*"]


def _camel(rng: random.Random, parts: int) -> str:
    head = rng.choice(WORDS)
    tail = [rng.choice(WORDS).capitalize() for _ in range(parts - 1)]
    return head + "".join(tail)


def _snake(rng: random.Random, parts: int) -> str:
    return "_".join(rng.choice(WORDS) for _ in range(parts))


def _class_name(rng: random.Random) -> str:
    return "".join(rng.choice(CLASS_WORDS) for _ in range(rng.choice([2, 2, 3])))


class _Pools:
    """Corpus-wide name pools shared by every file (built once per seed)."""

    def __init__(self, seed: int):
        rng = random.Random(seed)
        self.common_idents = []
        seen = set()
        while len(self.common_idents) < 220:
            name = _camel(rng, rng.choice([1, 2, 2, 3])) if rng.random() < 0.7 else _snake(rng, 2)
            if name not in seen:
                seen.add(name)
                self.common_idents.append(name)
        self.common_classes = []
        seen.clear()
        while len(self.common_classes) < 48:
            name = _class_name(rng)
            if name not in seen:
                seen.add(name)
                self.common_classes.append(name)
        # receiver "type" -> plausible methods, reused corpus-wide
        # (crc32, not hash(): str hashing is randomized per process)
        self.methods = {}
        for cls in self.common_classes:
            rng2 = random.Random(seed * 31 + zlib.crc32(cls.encode()) % 1000)
            self.methods[cls] = [_camel(rng2, 2) for _ in range(3)]


class _FileGen:
    def __init__(self, pools: _Pools, rng: random.Random):
        self.pools = pools
        self.rng = rng
        self.lines: list[str] = []
        self.indent = 0
        # names visible in the current function body, repetition fodder
        self.locals: list[str] = []
        self.classes_here: list[str] = []

    def emit(self, text: str) -> None:
        self.lines.append("  " * self.indent + text)

    def fresh_ident(self) -> str:
        rng = self.rng
        roll = rng.random()
        if roll < 0.62:
            return rng.choice(self.pools.common_idents)
        if roll < 0.86:
            return _camel(rng, rng.choice([2, 3]))
        return _snake(rng, rng.choice([2, 3]))

    def local_ident(self) -> str:
        if self.locals and self.rng.random() < 0.72:
            return self.rng.choice(self.locals)
        return self.fresh_ident()

    def literal(self) -> str:
        rng = self.rng
        roll = rng.random()
        if roll < 0.52:
            return rng.choice(INT_POOL)
        if roll < 0.82:
            return rng.choice(STRING_POOL)
        if roll < 0.92:
            return str(rng.randrange(4, 9999))
        return f'"{_snake(rng, 2)}"'

    def expr(self, depth: int = 0) -> str:
        rng = self.rng
        roll = rng.random()
        if depth >= 2 or roll < 0.30:
            return self.literal() if rng.random() < 0.45 else self.local_ident()
        if roll < 0.50:
            return f"{self.local_ident()} {rng.choice(ARITH_OPS)} {self.expr(depth + 1)}"
        if roll < 0.68:
            recv = self.local_ident()
            cls = rng.choice(self.classes_here or self.pools.common_classes)
            method = rng.choice(self.pools.methods.get(cls, ["toString"]))
            return f"{recv}.{method}({self.args(depth + 1)})"
        if roll < 0.84:
            cls = rng.choice(self.classes_here or self.pools.common_classes)
            return f"new {cls}({self.args(depth + 1)})"
        return f"{self.local_ident()} {rng.choice(COMPARE_OPS)} {self.expr(depth + 1)}"

    def args(self, depth: int) -> str:
        n = self.rng.choice([0, 1, 1, 2])
        return ", ".join(self.expr(depth) for _ in range(n))

    def condition(self) -> str:
        return f"{self.local_ident()} {self.rng.choice(COMPARE_OPS)} {self.expr(1)}"

    def statement(self, depth: int = 0) -> None:
        rng = self.rng
        roll = rng.random()
        if roll < 0.30:
            kind = rng.choice(["var", "final"] + TYPES)
            name = self.fresh_ident()
            self.emit(f"{kind} {name} = {self.expr()};")
            self.locals.append(name)
        elif roll < 0.52:
            self.emit(f"{self.local_ident()} = {self.expr()};")
        elif roll < 0.66:
            recv = self.local_ident()
            cls = rng.choice(self.classes_here or self.pools.common_classes)
            method = rng.choice(self.pools.methods.get(cls, ["toString"]))
            self.emit(f"{recv}.{method}({self.args(1)});")
        elif roll < 0.76 and depth < 2:
            self.emit(f"if ({self.condition()}) {{")
            self.indent += 1
            for _ in range(rng.choice([1, 1, 2])):
                self.statement(depth + 1)
            self.indent -= 1
            if rng.random() < 0.35:
                self.emit("} else {")
                self.indent += 1
                self.statement(depth + 1)
                self.indent -= 1
            self.emit("}")
        elif roll < 0.86 and depth < 2:
            i = rng.choice(["i", "j", "k", "index"])
            bound = self.local_ident() if rng.random() < 0.6 else rng.choice(INT_POOL)
            self.emit(f"for (var {i} = 0; {i} < {bound}; {i} = {i} + 1) {{")
            self.indent += 1
            self.locals.append(i)
            for _ in range(rng.choice([1, 2])):
                self.statement(depth + 1)
            self.indent -= 1
            self.emit("}")
        elif roll < 0.92 and depth < 2:
            self.emit(f"while ({self.condition()}) {{")
            self.indent += 1
            self.statement(depth + 1)
            self.indent -= 1
            self.emit("}")
        else:
            self.emit(f"return {self.expr()};")

    def method(self, name: str, owner_fields: list[str]) -> None:
        rng = self.rng
        ret = rng.choice(["void"] + TYPES)
        params = []
        for _ in range(rng.choice([0, 1, 1, 2])):
            params.append(f"{rng.choice(TYPES)} {self.fresh_ident()}")
        self.emit(f"{ret} {name}({', '.join(params)}) {{")
        self.indent += 1
        saved = self.locals
        self.locals = owner_fields + [p.split()[-1] for p in params]
        for _ in range(rng.randrange(2, 6)):
            self.statement()
        if ret != "void":
            self.emit(f"return {self.local_ident()};")
        self.locals = saved
        self.indent -= 1
        self.emit("}")

    def clazz(self) -> None:
        rng = self.rng
        if rng.random() < 0.45:
            name = rng.choice(self.pools.common_classes)
        else:
            name = _class_name(rng)
        self.classes_here.append(name)
        suffix = ""
        if rng.random() < 0.3:
            verb = rng.choice(["extends", "implements"])
            suffix = f" {verb} {rng.choice(self.pools.common_classes)}"
        self.emit(f"class {name}{suffix} {{")
        self.indent += 1
        fields = []
        for _ in range(rng.randrange(2, 5)):
            fname = self.fresh_ident()
            fields.append(fname)
            self.emit(f"{rng.choice(TYPES)} {fname};")
        for _ in range(rng.randrange(1, 4)):
            cls_methods = self.pools.methods.get(name)
            mname = rng.choice(cls_methods) if cls_methods and rng.random() < 0.7 else _camel(rng, 2)
            self.method(mname, fields)
        self.indent -= 1
        self.emit("}")
        self.emit("")

    def function(self, name: str | None = None) -> None:
        rng = self.rng
        fname = name or _camel(rng, rng.choice([1, 2]))
        ret = "void" if name == "main" else rng.choice(["void"] + TYPES)
        params = []
        if name != "main":
            for _ in range(rng.choice([0, 1, 2])):
                params.append(f"{rng.choice(TYPES)} {self.fresh_ident()}")
        self.emit(f"{ret} {fname}({', '.join(params)}) {{")
        self.indent += 1
        saved = self.locals
        self.locals = [p.split()[-1] for p in params]
        for _ in range(rng.randrange(3, 8)):
            self.statement()
        if ret != "void":
            self.emit(f"return {self.local_ident()};")
        self.locals = saved
        self.indent -= 1
        self.emit("}")
        self.emit("")

    def render(self) -> str:
        rng = self.rng
        if rng.random() < 0.5:
            self.emit(f'// {_snake(rng, 2)} module')
        if rng.random() < 0.6:
            self.emit(f'import "dart:{rng.choice(["core", "io", "math", "async"])}";')
            self.emit("")
        for _ in range(rng.randrange(1, 3)):
            self.clazz()
        for _ in range(rng.randrange(1, 3)):
            self.function()
        if rng.random() < 0.7:
            self.function("main")
        return "\n".join(self.lines) + "\n"


def generate_corpus(directory: str | Path, files: int = 125, seed: int = 7) -> list[Path]:
    """Write a deterministic corpus; returns the created file paths."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    pools = _Pools(seed)
    paths = []
    for i in range(files):
        rng = random.Random(seed * 1_000_003 + i)
        text = _FileGen(pools, rng).render()
        path = directory / f"mod_{i:03d}.dart"
        path.write_text(text, encoding="utf-8")
        paths.append(path)
    return paths


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(description="Generate the MiniDart demo corpus")
    parser.add_argument("directory")
    parser.add_argument("--files", type=int, default=125)
    parser.add_argument("--seed", type=int, default=7)
    args = parser.parse_args(argv)
    paths = generate_corpus(args.directory, args.files, args.seed)
    total = sum(p.stat().st_size for p in paths)
    print(f"wrote {len(paths)} files, {total} bytes")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
