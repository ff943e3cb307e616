"""Lightweight workspace scanner for Java-style sources.

A regex pass over declarations, not a parser: it finds the package
declaration, class-like declarations, method declarations, and constructors
(normalized to "<init>"). Misses degrade gracefully because unmapped
entities simply stay absent from the source map.
"""
from __future__ import annotations

import json
import re
from pathlib import Path

from .editor import ClassDecl, FileRecord, MethodDecl

_PACKAGE_RE = re.compile(r"^\s*package\s+([\w.]+)\s*;")
_CLASS_RE = re.compile(
    r"^\s*(?:(?:public|protected|private|abstract|final|static|strictfp)\s+)*"
    r"(?:class|interface|enum|record)\s+(\w+)"
)
_METHOD_RE = re.compile(
    r"^\s*(?:(?:public|protected|private|static|final|synchronized|abstract|default|native)\s+)*"
    r"(?:<[^>]+>\s+)?"
    r"[\w$.]+(?:<[^<>]*(?:<[^<>]*>)?[^<>]*>)?(?:\[\])*\s+"
    r"(\w+)\s*\("
)
_KEYWORD_STARTS = (
    "return",
    "new",
    "throw",
    "else",
    "if",
    "for",
    "while",
    "switch",
    "catch",
    "do",
    "try",
    "super",
    "this",
    "case",
    "assert",
)

SOURCE_SUFFIXES = (".java",)


def scan_file(path: Path, root: Path) -> FileRecord:
    package_decl = ""
    classes: list[dict] = []
    current: dict | None = None
    for line_no, line in enumerate(path.read_text(encoding="utf-8").splitlines(), 1):
        stripped = line.strip()
        if not stripped or stripped.startswith(("//", "*", "/*", "@", "import ")):
            continue
        pkg = _PACKAGE_RE.match(line)
        if pkg:
            package_decl = pkg.group(1)
            continue
        cls = _CLASS_RE.match(line)
        if cls:
            current = {"name": cls.group(1), "line": line_no, "methods": []}
            classes.append(current)
            continue
        if current is None:
            continue
        ctor = re.match(
            r"^\s*(?:(?:public|protected|private)\s+)*%s\s*\(" % re.escape(current["name"]),
            line,
        )
        if ctor:
            current["methods"].append(MethodDecl("<init>", line_no))
            continue
        first_word = stripped.split("(")[0].split()[0] if stripped.split() else ""
        if first_word in _KEYWORD_STARTS:
            continue
        method = _METHOD_RE.match(line)
        if method:
            current["methods"].append(MethodDecl(method.group(1), line_no))
    return FileRecord(
        path=path.relative_to(root).as_posix(),
        package_decl=package_decl,
        classes=tuple(
            ClassDecl(c["name"], c["line"], tuple(c["methods"])) for c in classes
        ),
    )


def scan_workspace(root: str | Path) -> list[FileRecord]:
    """Scan a directory tree; returns records sorted by path."""
    root = Path(root)
    records = []
    for path in sorted(root.rglob("*")):
        if path.is_file() and path.suffix in SOURCE_SUFFIXES:
            records.append(scan_file(path, root))
    return records


def index_doc(records: list[FileRecord]) -> list[dict]:
    return [
        {
            "path": r.path,
            "package_decl": r.package_decl,
            "classes": [
                {
                    "name": c.name,
                    "line": c.line,
                    "methods": [{"name": m.name, "line": m.line} for m in c.methods],
                }
                for c in r.classes
            ],
        }
        for r in records
    ]


def index_from_doc(doc: list[dict]) -> list[FileRecord]:
    return [
        FileRecord(
            path=entry["path"],
            package_decl=entry["package_decl"],
            classes=tuple(
                ClassDecl(
                    c["name"],
                    c["line"],
                    tuple(MethodDecl(m["name"], m["line"]) for m in c["methods"]),
                )
                for c in entry["classes"]
            ),
        )
        for entry in doc
    ]


def write_index(records: list[FileRecord], out_path: str | Path) -> None:
    Path(out_path).write_text(json.dumps(index_doc(records), indent=1))


def load_index(path: str | Path) -> list[FileRecord]:
    return index_from_doc(json.loads(Path(path).read_text()))
