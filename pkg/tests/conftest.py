from __future__ import annotations

import random
import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from ontoterm import collab, model, variants

TREE_TERMS = [
    ("tree", 50),
    ("mature tree", 10),
    ("mature avocado", 3),
    ("mature avocado tree", 5),
    ("medium-sized mature avocado tree", 1),
    ("oak", 7),
]


def make_project(name="test", users=("alice", "bob"), scheme=None, **kw):
    return model.Project.create(
        name, users=users, scheme=scheme, project_id=kw.pop("project_id", "p1"), **kw
    )


def add_simple_terms(project, rows, pos="NP"):
    """rows: (surface, occ) pairs; lemma = surface."""
    return model.add_terms(
        project,
        [{"surface": s, "lemma": s, "pos": pos, "occ_count": o} for s, o in rows],
    )


@pytest.fixture
def project():
    return make_project()


@pytest.fixture
def tree_project():
    p = make_project()
    ids = add_simple_terms(p, TREE_TERMS)
    p.by_surface = {p.terms[t].surface: t for t in ids}
    return p


WORDS = [
    "plant", "tree", "virus", "resistance", "gene", "sequence", "acid",
    "dna", "avocado", "mature", "transgenic", "breeding", "phenotype",
    "disease", "polymer", "expression", "activation", "stationary",
    "phase", "insect", "leaf", "root", "cell", "tissue", "culture",
]


def build_synthetic_project(n_terms=2000, seed=20260823, users=("alice", "bob", "carol")):
    """Deterministic synthetic store with merges and statuses for oracles."""
    rng = random.Random(seed)
    p = model.Project.create("synthetic", users=users, project_id="syn")
    seen = set()
    rows = []
    while len(rows) < n_terms:
        k = rng.choice([1, 1, 2, 2, 2, 3, 3, 4])
        lemma = " ".join(rng.choice(WORDS) for _ in range(k))
        surface = lemma if rng.random() < 0.8 else lemma.capitalize()
        pos = rng.choice(["NP", "NP", "NP", "A", "V"])
        triple = (surface, lemma, pos)
        if triple in seen:
            continue
        seen.add(triple)
        rows.append(
            {"surface": surface, "lemma": lemma, "pos": pos,
             "occ_count": rng.randint(0, 1000)}
        )
    ids = model.add_terms(p, rows)
    # merge ~5% so Visible() atoms bite
    merge_pool = rng.sample(ids, 200)
    for i in range(0, 200, 2):
        canonical, dup = merge_pool[i], merge_pool[i + 1]
        if p.terms[canonical].visible and p.terms[dup].visible:
            variants.merge(p, canonical, [dup])
    # statuses from all three users on random terms
    for user in users:
        updates = [
            {"term_id": tid, "label": rng.choice(["valid", "invalid", "pending"])}
            for tid in rng.sample(ids, 300)
        ]
        collab.set_statuses(p, user, updates)
    return p


@pytest.fixture(scope="session")
def synthetic_project():
    return build_synthetic_project()
