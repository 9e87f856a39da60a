from __future__ import annotations

import random

import pytest

from ontoterm import model, variants
from ontoterm.errors import (
    AlreadyClassified,
    AlreadyMerged,
    InvariantViolation,
    NotAMember,
    NotMerged,
    ParseError,
    SelfMerge,
    UnknownTerm,
)

from conftest import WORDS, add_simple_terms, make_project
from reference import ref_is_subterm, ref_tokens


class TestCanonicalizers:
    def test_lowercase(self):
        assert variants.canon_lowercase("Public Controversy") == "public controversy"

    def test_deplural_table(self):
        assert variants.canon_deplural("public controversies") == "public controversy"
        assert variants.canon_deplural("transgenic plants") == "transgenic plant"
        # guarded suffixes: short words and -ss words keep their s
        assert variants.canon_deplural("gas") == "gas"
        assert variants.canon_deplural("grass") == "grass"

    def test_collapse(self):
        assert variants.canon_collapse("medium-sized  tree") == "medium sized tree"

    def test_rules_idempotent(self):
        for rule in variants.default_rules():
            for value in ["Public Controversies", "medium-sized  Trees", "grass"]:
                once = rule.apply(value)
                assert rule.apply(once) == once

    def test_non_idempotent_replace_rejected(self):
        rule = variants.MergeRule("bad", "lemma", "", "replace", ("a", "aa"))
        with pytest.raises(InvariantViolation):
            rule.apply("cat")

    def test_parse_rules_file(self):
        rules = variants.parse_rules(
            "# comment\nlower\tsurface\t.\tlowercase\nfix\tlemma\tfoo\treplace\tfoo\tbar\n"
        )
        assert [r.name for r in rules] == ["lower", "fix"]
        assert rules[1].apply("a foo b") == "a bar b"


class TestApplyMergeRules:
    def test_public_controversy_variants(self, project):
        ids = add_simple_terms(
            project,
            [("public controversies", 3), ("public controversy", 10),
             ("Public controversy", 2)],
        )
        report = variants.apply_merge_rules(project, variants.default_rules())
        assert report.merged_count == 2
        assert len(report.groups) == 1
        canonical_id, merged = report.groups[0]
        assert project.terms[canonical_id].surface == "public controversy"
        assert project.terms[canonical_id].occ_count == 15
        assert sorted(merged) == sorted(set(ids) - {canonical_id})
        visible = project.visible_terms()
        assert len(visible) == 1
        for tid in merged:
            assert project.terms[tid].merged_into == canonical_id

    def test_idempotent_second_run(self, project):
        add_simple_terms(
            project, [("trees", 1), ("tree", 9), ("Tree", 2), ("oak", 4)]
        )
        first = variants.apply_merge_rules(project, variants.default_rules())
        assert first.merged_count == 2
        second = variants.apply_merge_rules(project, variants.default_rules())
        assert second.merged_count == 0
        assert second.groups == []
        assert second.initial_visible == second.final_visible == 2

    def test_synthetic_reduction_pct(self, project):
        """1,000 visible terms, 113 injected variants -> 11.3% reduction."""
        rng = random.Random(13)
        rows = []
        for i in range(887):
            rows.append((f"base term number{i}", rng.randint(1, 50)))
        # 113 variants of the first bases: plural or capitalized forms
        for i in range(113):
            base = f"base term number{i}"
            rows.append((base.capitalize() if i % 2 else base + "s",
                         rng.randint(1, 50)))
        add_simple_terms(project, rows)
        report = variants.apply_merge_rules(project, variants.default_rules())
        assert report.initial_visible == 1000
        assert report.merged_count == 113
        assert report.final_visible == 887
        assert report.reduction_pct == pytest.approx(11.3)

    def test_no_coincidences_empty_report(self, tree_project):
        v0 = tree_project.version
        report = variants.apply_merge_rules(tree_project, variants.default_rules())
        assert report.merged_count == 0
        assert tree_project.version == v0  # no journal entry for a no-op


class TestMergeUnmerge:
    def test_round_trip_restores_state(self, tree_project):
        p = tree_project
        before = p.state_dict()
        a, b = p.by_surface["tree"], p.by_surface["oak"]
        variants.merge(p, a, [b])
        assert p.terms[a].occ_count == 57
        assert p.terms[b].merged_into == a
        variants.unmerge(p, b)
        after = p.state_dict()
        before.pop("version"), after.pop("version")
        assert before == after

    def test_self_merge_rejected(self, tree_project):
        a = tree_project.by_surface["tree"]
        with pytest.raises(SelfMerge):
            variants.merge(tree_project, a, [a])

    def test_double_merge_rejected(self, tree_project):
        p = tree_project
        a, b = p.by_surface["tree"], p.by_surface["oak"]
        variants.merge(p, a, [b])
        with pytest.raises(AlreadyMerged):
            variants.merge(p, a, [b])
        with pytest.raises(AlreadyMerged):
            variants.merge(p, b, [p.by_surface["mature tree"]])

    def test_unmerge_requires_merged(self, tree_project):
        with pytest.raises(NotMerged):
            variants.unmerge(tree_project, tree_project.by_surface["tree"])
        with pytest.raises(UnknownTerm):
            variants.unmerge(tree_project, "ghost")

    def test_merged_classmate_removed_from_class(self, tree_project):
        p = tree_project
        rep, other = p.by_surface["tree"], p.by_surface["oak"]
        cid = variants.create_class(p, rep, [(other, "quasi")])
        variants.merge(p, p.by_surface["mature tree"], [other])
        assert other not in p.classes[cid].members
        assert p.classes[cid].representative == rep

    def test_merged_representative_reassigned(self, tree_project):
        p = tree_project
        rep, other = p.by_surface["tree"], p.by_surface["oak"]
        cid = variants.create_class(p, rep, [(other, "exact")])
        variants.merge(p, p.by_surface["mature tree"], [rep])
        cls_ = p.classes[cid]
        assert cls_.representative == other
        assert cls_.members == {other: "exact"}

    def test_merging_last_member_dissolves_class(self, tree_project):
        p = tree_project
        rep = p.by_surface["oak"]
        cid = variants.create_class(p, rep, [])
        variants.merge(p, p.by_surface["tree"], [rep])
        assert cid not in p.classes

    def test_occurrence_conservation_random_walk(self, project):
        rng = random.Random(20260823)
        rows = [(f"t{i} {rng.choice(WORDS)}", rng.randint(0, 100)) for i in range(60)]
        ids = add_simple_terms(project, rows)
        original = {tid: project.terms[tid].occ_count for tid in ids}
        total = sum(original.values())

        def conserved():
            got = sum(
                t.occ_count if t.merged_into is None else original[tid]
                for tid, t in project.terms.items()
                if t.merged_into is None
            )
            return got == total

        for _ in range(1000):
            visible = [t for t in ids if project.terms[t].visible]
            merged = [t for t in ids if not project.terms[t].visible]
            if merged and (len(visible) < 2 or rng.random() < 0.5):
                variants.unmerge(project, rng.choice(merged))
            else:
                a, b = rng.sample(visible, 2)
                variants.merge(project, a, [b])
            assert conserved()
        replayed = model.Project.replay(project.journal)
        assert replayed.state_dict() == project.state_dict()


class TestStructuralRelations:
    def test_superterms_of_paper_example(self, tree_project):
        p = tree_project
        sups = variants.superterms_of(p, p.by_surface["mature avocado"])
        assert p.by_surface["mature avocado tree"] in sups
        assert p.by_surface["medium-sized mature avocado tree"] in sups

    def test_monolexical_without_strict_subterms(self, tree_project):
        assert variants.subterms_of(tree_project, tree_project.by_surface["oak"]) == set()

    def test_merged_terms_excluded(self, tree_project):
        p = tree_project
        variants.merge(p, p.by_surface["oak"], [p.by_surface["mature tree"]])
        subs = variants.subterms_of(p, p.by_surface["mature avocado tree"])
        assert p.by_surface["mature tree"] not in subs

    def test_matches_brute_force_on_random_sequences(self, project):
        rng = random.Random(77)
        rows, seen = [], set()
        while len(rows) < 500:
            k = rng.choice([1, 2, 2, 3, 3, 4, 5])
            lemma = " ".join(rng.choice(WORDS[:8]) for _ in range(k))
            if lemma in seen:
                continue
            seen.add(lemma)
            rows.append((lemma, 1))
        ids = add_simple_terms(project, rows)
        toks = {tid: ref_tokens(project.terms[tid].lemma) for tid in ids}
        for tid in rng.sample(ids, 50):
            expected = {
                other for other in ids
                if other != tid and ref_is_subterm(toks[other], toks[tid])
            }
            assert variants.subterms_of(project, tid) == expected


class TestSynonymClasses:
    @pytest.fixture
    def resistance(self, project):
        ids = add_simple_terms(
            project,
            [("virus resistance", 30), ("viral resistance", 4),
             ("resistance to virus", 2)],
        )
        by = {project.terms[t].surface: t for t in ids}
        cid = variants.create_class(
            project, by["virus resistance"],
            [(by["viral resistance"], "exact"), (by["resistance to virus"], "exact")],
        )
        return project, by, cid

    def test_create_class_paper_example(self, resistance):
        project, by, cid = resistance
        cls_ = project.classes[cid]
        assert cls_.representative == by["virus resistance"]
        assert set(cls_.members) == set(by.values())
        assert set(cls_.members.values()) == {"exact"}

    def test_typed_links_stored(self, project):
        ids = add_simple_terms(
            project,
            [("indole butyric acid", 20), ("indolebutyric acid", 5), ("IBA", 11)],
        )
        by = {project.terms[t].surface: t for t in ids}
        cid = variants.create_class(project, by["indole butyric acid"], [])
        variants.add_member(project, cid, by["indolebutyric acid"], "typographic")
        variants.add_member(project, cid, by["IBA"], "acronym")
        cls_ = project.classes[cid]
        assert cls_.members[by["indolebutyric acid"]] == "typographic"
        assert cls_.members[by["IBA"]] == "acronym"

    def test_ocr_variant_accepted(self, project):
        ids = add_simple_terms(
            project, [("Brassica oleracea", 40), ("Brassica oieracea", 1)]
        )
        cid = variants.create_class(project, ids[0], [])
        variants.add_member(project, cid, ids[1], "typographic")
        assert project.classes[cid].members[ids[1]] == "typographic"

    def test_already_classified_reports_class(self, resistance):
        project, by, cid = resistance
        other = add_simple_terms(project, [("oak", 1)])[0]
        cid2 = variants.create_class(project, other, [])
        with pytest.raises(AlreadyClassified) as exc:
            variants.add_member(project, cid2, by["viral resistance"], "quasi")
        assert exc.value.details["class_id"] == cid

    def test_remove_and_set_representative(self, resistance):
        project, by, cid = resistance
        with pytest.raises(InvariantViolation):
            variants.remove_member(project, cid, by["virus resistance"])
        variants.set_representative(project, cid, by["viral resistance"])
        variants.remove_member(project, cid, by["virus resistance"])
        assert by["virus resistance"] not in project.classes[cid].members
        with pytest.raises(NotAMember):
            variants.remove_member(project, cid, by["virus resistance"])

    def test_dissolve_releases_members(self, resistance):
        project, by, cid = resistance
        variants.dissolve_class(project, cid)
        assert cid not in project.classes
        # released members can be classified again
        variants.create_class(project, by["viral resistance"], [])

    def test_unknown_link_type(self, resistance):
        project, by, cid = resistance
        other = add_simple_terms(project, [("oak", 1)])[0]
        with pytest.raises(InvariantViolation):
            variants.add_member(project, cid, other, "rhyme")

    def test_merged_term_cannot_join(self, resistance):
        project, by, cid = resistance
        extra = add_simple_terms(project, [("oak", 1), ("elm", 1)])
        variants.merge(project, extra[0], [extra[1]])
        with pytest.raises(AlreadyMerged):
            variants.add_member(project, cid, extra[1], "quasi")


class TestHints:
    def test_parse_and_suggest(self, tree_project):
        p = tree_project
        pairs = variants.parse_hints("# cmt\ntree\toak\ntree\tmissing\n")
        assert pairs == [("tree", "oak"), ("tree", "missing")]
        suggestions = variants.suggest_memberships(p, pairs)
        assert suggestions == [
            {"term_a": p.by_surface["tree"], "term_b": p.by_surface["oak"],
             "link_type": "quasi"}
        ]
        assert p.version == len(p.journal)  # nothing committed

    def test_parse_rejects_bad_line(self):
        with pytest.raises(ParseError) as exc:
            variants.parse_hints("only-one-field\n")
        assert exc.value.line == 1
