"""Brace-scope symbol table and cursor-context classification for MiniDart.

Scope resolution is token and brace based rather than a full parse: blocks
are delimited by braces, function parameters bind inside the following
block, and declarations are recognized from local token patterns
(var/final, type keyword + name, class + name, name followed by a
parenthesized list and a block). Inner declarations shadow outer ones but a
name appears only once in the result. Declarations after the cursor are
invisible except at file level, where forward references are allowed.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .lexer import KEYWORDS, TYPE_KEYWORDS, Token, TokenKind, scan

IDENT_CHARS = frozenset("ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789_")

_STATEMENT_STARTERS = frozenset([";", "{", "}"])


@dataclass
class ScopeSet:
    """Everything statically suggestible at a cursor position."""

    identifiers: dict[str, int]  # name -> declaration byte offset
    keywords: list[str]
    concatenated: set[str]  # e.g. "main()" for a function named main
    declaration_context: bool
    member_access_context: bool

    def all_texts(self) -> set[str]:
        return set(self.identifiers) | set(self.keywords) | self.concatenated


@dataclass
class _Decl:
    name: str
    offset: int
    is_function: bool = False


@dataclass
class _Scope:
    start: int  # byte offset of the opening brace (-1 for file level)
    end: int | None = None
    decls: list[_Decl] = field(default_factory=list)
    children: list["_Scope"] = field(default_factory=list)

    def contains(self, cursor: int) -> bool:
        if self.start == -1:
            return True
        return self.start < cursor and (self.end is None or cursor <= self.end)


def _class_names(tokens: list[Token]) -> set[str]:
    names = set()
    for i, tok in enumerate(tokens):
        if tok.lexeme == "class" and i + 1 < len(tokens):
            nxt = tokens[i + 1]
            if nxt.kind is TokenKind.IDENTIFIER:
                names.add(nxt.lexeme)
    return names


def _matching_paren(tokens: list[Token], open_idx: int) -> int | None:
    depth = 0
    for j in range(open_idx, len(tokens)):
        lex = tokens[j].lexeme
        if lex == "(":
            depth += 1
        elif lex == ")":
            depth -= 1
            if depth == 0:
                return j
    return None


def _param_decls(tokens: list[Token], open_idx: int, close_idx: int) -> list[_Decl]:
    """Identifiers in name position inside a parameter list.

    A parameter name is an identifier directly followed by ',' or ')' or
    '='; type words are followed by another identifier and never match.
    """
    decls = []
    for j in range(open_idx + 1, close_idx):
        tok = tokens[j]
        if tok.kind is TokenKind.IDENTIFIER and j + 1 <= close_idx:
            nxt = tokens[j + 1].lexeme
            if nxt in (",", ")", "="):
                decls.append(_Decl(tok.lexeme, tok.offset))
    return decls


def _build_scopes(tokens: list[Token], source_len: int, classes: set[str]) -> _Scope:
    root = _Scope(start=-1)
    stack = [root]
    pending_params: list[_Decl] = []

    def declare(name: str, offset: int, is_function: bool = False) -> None:
        stack[-1].decls.append(_Decl(name, offset, is_function))

    i = 0
    n = len(tokens)
    while i < n:
        tok = tokens[i]
        lex = tok.lexeme
        if lex == "{":
            child = _Scope(start=tok.offset)
            child.decls.extend(pending_params)
            pending_params = []
            stack[-1].children.append(child)
            stack.append(child)
        elif lex == "}":
            stack[-1].end = tok.offset
            if len(stack) > 1:
                stack.pop()
        elif lex == "class" and i + 1 < n and tokens[i + 1].kind is TokenKind.IDENTIFIER:
            declare(tokens[i + 1].lexeme, tokens[i + 1].offset)
        elif lex in ("var", "final"):
            j = i + 1
            if (
                j + 1 < n
                and (tokens[j].lexeme in TYPE_KEYWORDS or tokens[j].lexeme in classes)
                and tokens[j + 1].kind is TokenKind.IDENTIFIER
            ):
                j += 1
            if j < n and tokens[j].kind is TokenKind.IDENTIFIER:
                declare(tokens[j].lexeme, tokens[j].offset)
        elif (
            (lex in TYPE_KEYWORDS or (tok.kind is TokenKind.IDENTIFIER and lex in classes))
            and i + 1 < n
            and tokens[i + 1].kind is TokenKind.IDENTIFIER
        ):
            declare(tokens[i + 1].lexeme, tokens[i + 1].offset)
        elif tok.kind is TokenKind.IDENTIFIER and i + 1 < n and tokens[i + 1].lexeme == "(":
            close = _matching_paren(tokens, i + 1)
            if close is not None and close + 1 < n and tokens[close + 1].lexeme == "{":
                declare(lex, tok.offset, is_function=True)
                pending_params = _param_decls(tokens, i + 1, close)
        i += 1

    for scope in stack:  # unbalanced braces close at end-of-file
        if scope.end is None:
            scope.end = source_len
    return root


def _visible_decls(root: _Scope, cursor: int) -> dict[str, _Decl]:
    visible: dict[str, _Decl] = {}
    scope = root
    while True:
        for decl in scope.decls:
            if scope.start == -1 or decl.offset < cursor:
                visible[decl.name] = decl
        nxt = next((c for c in scope.children if c.contains(cursor)), None)
        if nxt is None:
            return visible
        scope = nxt


def detect_contexts(source: str, cursor: int) -> tuple[bool, bool]:
    """(declaration_context, member_access_context) at the cursor.

    Declaration context: the previous significant token introduces a new
    name (var, final, class, a type keyword, or a class name declared in
    this file sitting at the start of a statement). Member access: the
    previous significant token is '.'.
    """
    tokens = scan(source)
    return _detect_from_tokens(tokens, cursor, _class_names(tokens))


def _detect_from_tokens(
    tokens: list[Token], cursor: int, classes: set[str]
) -> tuple[bool, bool]:
    before = [t for t in tokens if t.end <= cursor]
    if not before:
        return False, False
    prev = before[-1]
    if prev.lexeme == ".":
        return False, True
    if prev.lexeme in ("var", "final", "class") or prev.lexeme in TYPE_KEYWORDS:
        return True, False
    if prev.kind is TokenKind.IDENTIFIER and prev.lexeme in classes:
        starter = before[-2].lexeme if len(before) >= 2 else None
        if starter is None or starter in _STATEMENT_STARTERS:
            return True, False
    return False, False


def enumerate_scope(source: str, cursor: int) -> ScopeSet:
    """All applicable keywords and identifiers in scope at the cursor."""
    tokens = scan(source)
    classes = _class_names(tokens)
    source_len = len(source) if source.isascii() else len(source.encode("utf-8"))
    root = _build_scopes(tokens, source_len, classes)
    visible = _visible_decls(root, cursor)
    declaration, member = _detect_from_tokens(tokens, cursor, classes)
    return ScopeSet(
        identifiers={d.name: d.offset for d in visible.values()},
        keywords=sorted(KEYWORDS),
        concatenated={f"{d.name}()" for d in visible.values() if d.is_function},
        declaration_context=declaration,
        member_access_context=member,
    )


def match_concatenation(scope_text: str, model_token: str) -> bool:
    """True iff scope_text is model_token plus a non-identifier-alphabet tail."""
    if not scope_text.startswith(model_token):
        return False
    tail = scope_text[len(model_token):]
    return all(ch not in IDENT_CHARS for ch in tail)
