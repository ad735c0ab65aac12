"""Symbol table and cursor-context tests."""

from nextok.lexer import KEYWORDS
from nextok.scope import detect_contexts, enumerate_scope, match_concatenation


def cursor_at(source: str, marker: str = "|") -> tuple[str, int]:
    """Strip the marker and return (source, byte cursor at marker)."""
    idx = source.index(marker)
    return source.replace(marker, "", 1), len(source[:idx].encode("utf-8"))


class TestEnumerateScope:
    def test_function_and_parameter(self):
        source, cursor = cursor_at("void f(int a) { |")
        scope = enumerate_scope(source, cursor)
        assert set(scope.identifiers) == {"f", "a"}
        assert scope.concatenated == {"f()"}

    def test_empty_file_keywords_only(self):
        scope = enumerate_scope("", 0)
        assert scope.identifiers == {}
        assert set(scope.keywords) == set(KEYWORDS)
        assert scope.concatenated == set()

    def test_inner_block_not_visible_after_close(self):
        source, cursor = cursor_at("void f() { var inner = 1; } |")
        scope = enumerate_scope(source, cursor)
        assert "inner" not in scope.identifiers
        assert "f" in scope.identifiers

    def test_inner_block_visible_inside(self):
        source, cursor = cursor_at("void f() { var inner = 1; | }")
        scope = enumerate_scope(source, cursor)
        assert "inner" in scope.identifiers

    def test_file_level_forward_reference(self):
        source, cursor = cursor_at("void f() { | } int later = 3;")
        scope = enumerate_scope(source, cursor)
        assert "later" in scope.identifiers

    def test_local_declared_after_cursor_excluded(self):
        source, cursor = cursor_at("void f() { | var after = 1; }")
        scope = enumerate_scope(source, cursor)
        assert "after" not in scope.identifiers

    def test_shadowing_single_entry(self):
        source, cursor = cursor_at("int x = 1; void f() { var x = 2; | }")
        scope = enumerate_scope(source, cursor)
        assert list(scope.identifiers).count("x") == 1

    def test_class_and_fields(self):
        source, cursor = cursor_at(
            "class Foo { int count; void bump(int by) { | } }"
        )
        scope = enumerate_scope(source, cursor)
        assert {"Foo", "count", "bump", "by"} <= set(scope.identifiers)
        assert "bump()" in scope.concatenated

    def test_typed_and_class_typed_declarations(self):
        source, cursor = cursor_at("class Foo {} Foo item; String name; |")
        scope = enumerate_scope(source, cursor)
        assert {"Foo", "item", "name"} <= set(scope.identifiers)

    def test_sibling_scopes_isolated(self):
        source, cursor = cursor_at("void f() { var a = 1; } void g() { | }")
        scope = enumerate_scope(source, cursor)
        assert "a" not in scope.identifiers

    def test_unbalanced_braces_close_at_eof(self):
        source, cursor = cursor_at("void f() { var a = 1; |")
        scope = enumerate_scope(source, cursor)
        assert "a" in scope.identifiers

    def test_calls_are_not_declarations(self):
        source, cursor = cursor_at("void f() { g(1); | }")
        scope = enumerate_scope(source, cursor)
        assert "g" not in scope.identifiers


class TestDetectContexts:
    def test_after_var(self):
        assert detect_contexts(*cursor_at("var |")) == (True, False)

    def test_after_dot(self):
        assert detect_contexts(*cursor_at("x.|")) == (False, True)

    def test_after_assignment(self):
        assert detect_contexts(*cursor_at("x = |")) == (False, False)

    def test_after_type_keyword(self):
        assert detect_contexts(*cursor_at("int |")) == (True, False)
        assert detect_contexts(*cursor_at("String |")) == (True, False)

    def test_after_final_and_class(self):
        assert detect_contexts(*cursor_at("final |")) == (True, False)
        assert detect_contexts(*cursor_at("class |")) == (True, False)

    def test_class_name_statement_initial(self):
        src = "class Foo {} Foo |"
        assert detect_contexts(*cursor_at(src)) == (True, False)

    def test_class_name_mid_expression_not_declaration(self):
        src = "class Foo {} var x = Foo |"
        assert detect_contexts(*cursor_at(src)) == (False, False)

    def test_empty_source(self):
        assert detect_contexts("", 0) == (False, False)

    def test_flags_present_on_scope_set(self):
        source, cursor = cursor_at("var |")
        scope = enumerate_scope(source, cursor)
        assert scope.declaration_context and not scope.member_access_context


class TestMatchConcatenation:
    def test_function_call(self):
        assert match_concatenation("main()", "main")

    def test_identifier_tail_rejected(self):
        assert not match_concatenation("mainframe", "main")

    def test_exact_match_empty_tail(self):
        assert match_concatenation("main", "main")

    def test_non_prefix_rejected(self):
        assert not match_concatenation("other()", "main")

    def test_punctuation_tail_variants(self):
        assert match_concatenation("f();", "f")
        assert not match_concatenation("f()x", "f")
