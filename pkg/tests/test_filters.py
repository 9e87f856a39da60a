from __future__ import annotations

import random

import pytest

from ontoterm import collab, filters, model, variants
from ontoterm.errors import FilterSyntaxError, UnknownTerm

from conftest import WORDS, add_simple_terms, make_project
from reference import random_expr, ref_evaluate, subterm_pairs


class TestParse:
    def test_head_eq(self):
        expr = filters.parse_filter('head = "tree"')
        assert expr == filters.FieldCmp("head", "=", "tree")

    def test_and_composition(self):
        expr = filters.parse_filter("words >= 2 and occ >= 500")
        assert expr == filters.And(
            (filters.FieldCmp("words", ">=", 2), filters.FieldCmp("occ", ">=", 500))
        )

    def test_error_at_end_of_input(self):
        with pytest.raises(FilterSyntaxError) as exc:
            filters.parse_filter('head = "tree" or')
        assert exc.value.position == len('head = "tree" or')
        assert exc.value.expected

    def test_error_reports_position_and_hint(self):
        with pytest.raises(FilterSyntaxError) as exc:
            filters.parse_filter("occ >=")
        assert exc.value.position == len("occ >=")
        assert "integer" in exc.value.expected

    def test_numeric_op_on_text_field_rejected(self):
        with pytest.raises(FilterSyntaxError):
            filters.parse_filter('surface > "a"')

    def test_pattern_on_numeric_field_rejected(self):
        with pytest.raises(FilterSyntaxError):
            filters.parse_filter('occ ~ "x"')

    def test_precedence_not_over_and_over_or(self):
        expr = filters.parse_filter('not pos = "V" and all or visible(false)')
        assert isinstance(expr, filters.Or)
        assert isinstance(expr.items[0], filters.And)
        assert isinstance(expr.items[0].items[0], filters.Not)

    def test_string_escapes_round_trip(self):
        expr = filters.parse_filter(r'surface = "say \"hi\" \\ back"')
        assert expr.value == 'say "hi" \\ back'
        assert filters.parse_filter(filters.to_text(expr)) == expr

    def test_print_parse_fixpoint_random(self):
        rng = random.Random(7)
        vocab = {
            "words": WORDS[:6],
            "phrases": ["mature tree"],
            "heads": ["tree", "plant"],
            "pos": ["NP", "A"],
            "users": ["alice"],
            "labels": ["valid"],
            "term_ids": ["p1.T1"],
            "patterns": ["tr", "^m"],
        }
        for _ in range(300):
            expr = random_expr(rng, vocab, 4)
            text = filters.to_text(expr)
            reparsed = filters.parse_filter(text)
            assert reparsed == expr, text
            assert filters.to_text(reparsed) == text


class TestEvaluate:
    def test_tree_fixture_subterms_of_head_tree(self, tree_project):
        p = tree_project
        result = filters.evaluate(filters.parse_filter('subterms(head = "tree")'), p)
        assert {p.terms[t].surface for t in result} == {
            "tree",
            "mature tree",
            "mature avocado",
            "mature avocado tree",
            "medium-sized mature avocado tree",
        }

    def test_all_is_every_visible_term(self, tree_project):
        p = tree_project
        variants.merge(p, p.by_surface["tree"], [p.by_surface["oak"]])
        result = filters.evaluate(filters.parse_filter("all"), p)
        assert result == set(p.visible_terms())

    def test_visible_false_selects_merged(self, tree_project):
        p = tree_project
        variants.merge(p, p.by_surface["tree"], [p.by_surface["oak"]])
        result = filters.evaluate(filters.parse_filter("visible(false)"), p)
        assert result == {p.by_surface["oak"]}

    def test_unsatisfiable_yields_empty(self, tree_project):
        assert filters.evaluate(
            filters.parse_filter('pos = "NOPE"'), tree_project
        ) == set()

    def test_boolean_algebra_identities(self, synthetic_project):
        p = synthetic_project
        rng = random.Random(99)
        vocab = _vocab(p)
        for _ in range(40):
            e = random_expr(rng, vocab, 3)
            not_not = filters.Not(filters.Not(e))
            assert filters.evaluate(not_not, p) == filters.evaluate(e, p)
            and_all = filters.And((e, filters.All()))
            assert filters.evaluate(and_all, p) == filters.evaluate(e, p)
            f = random_expr(rng, vocab, 2)
            de_morgan_l = filters.Not(filters.And((e, f)))
            de_morgan_r = filters.Or((filters.Not(e), filters.Not(f)))
            assert filters.evaluate(de_morgan_l, p) == filters.evaluate(de_morgan_r, p)

    def test_subterm_monotonicity(self, synthetic_project):
        p = synthetic_project
        rng = random.Random(5)
        vocab = _vocab(p)
        for _ in range(40):
            e = random_expr(rng, vocab, 2)
            sub = filters.SubtermOfMatches(e)
            assert filters.evaluate(sub, p) >= filters.evaluate(e, p)

    def test_matches_reference_scan(self, synthetic_project):
        p = synthetic_project
        subs = subterm_pairs(p)
        rng = random.Random(41)
        vocab = _vocab(p)
        for _ in range(60):
            e = random_expr(rng, vocab, 4)
            assert filters.evaluate(e, p) == ref_evaluate(e, p, subs_of=subs), \
                filters.to_text(e)

    def test_status_atom_respects_blind_scheme(self):
        p = model.Project.create(
            "blind", users=["alice", "bob"],
            scheme=model.Scheme(mode="blind"), project_id="pb",
        )
        ids = add_simple_terms(p, [("tree", 1), ("oak", 2)])
        collab.set_status(p, "alice", ids[0], "valid")
        expr = filters.parse_filter('status("alice", "valid")')
        # bob has not validated: alice's label is hidden from bob's filters
        assert filters.evaluate(expr, p, viewer="bob") == set()
        collab.set_status(p, "bob", ids[0], "invalid")
        assert filters.evaluate(expr, p, viewer="bob") == {ids[0]}
        # unrestricted evaluation sees everything
        assert filters.evaluate(expr, p, viewer=None) == {ids[0]}


def _vocab(project):
    terms = list(project.terms.values())
    return {
        "words": WORDS[:10],
        "phrases": [t.lemma for t in terms[:10]],
        "heads": sorted({t.head_lemma for t in terms})[:10],
        "pos": ["NP", "A", "V"],
        "users": ["alice", "bob", "carol", "nobody"],
        "labels": ["valid", "invalid", "pending"],
        "term_ids": [t.id for t in terms[:20]] + ["missing"],
        "patterns": ["tr", "an", "^m", "e$", "a.c", "pl|tr"],
    }


class TestSort:
    def test_occ_desc_paper_example(self, project):
        ids = add_simple_terms(
            project, [("DNA sequence", 542), ("transgenic plant", 664)]
        )
        ordered = filters.sort_terms(set(ids), [("occ", "desc")], project)
        assert [project.terms[t].surface for t in ordered] == [
            "transgenic plant", "DNA sequence",
        ]

    def test_special_characters_sort_first(self, project):
        ids = add_simple_terms(project, [("%yield", 1), ("plant", 2)])
        ordered = filters.sort_terms(set(ids), [("surface", "asc")], project)
        assert [project.terms[t].surface for t in ordered] == ["%yield", "plant"]

    def test_empty_input(self, project):
        assert filters.sort_terms([], [("surface", "asc")], project) == []

    def test_unknown_id(self, project):
        with pytest.raises(UnknownTerm):
            filters.sort_terms(["ghost"], [("surface", "asc")], project)

    def test_permutation_and_determinism(self, synthetic_project):
        p = synthetic_project
        ids = list(p.terms)[:500]
        keys = [("words", "desc"), ("occ", "asc")]
        a = filters.sort_terms(ids, keys, p)
        b = filters.sort_terms(list(reversed(ids)), keys, p)
        assert sorted(a) == sorted(ids)
        assert a == b

    def test_id_tiebreak(self, project):
        ids = add_simple_terms(project, [("same", 5), ("same2", 5)])
        for t in ids:
            project.terms[t].occ_count = 5
        ordered = filters.sort_terms(set(ids), [("occ", "asc")], project)
        assert ordered == sorted(ids)

    def test_parse_sort_keys(self):
        assert filters.parse_sort_keys("occ:desc,surface") == [
            ("occ", "desc"), ("surface", "asc"),
        ]
        with pytest.raises(FilterSyntaxError):
            filters.parse_sort_keys("bogus:asc")
        with pytest.raises(FilterSyntaxError):
            filters.parse_sort_keys("")
