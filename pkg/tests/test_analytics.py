from __future__ import annotations

import random
from datetime import date

import pytest

from framescope.analytics import (
    cluster_targets,
    cooccurrence,
    frame_share,
    generic_frame_share,
    indicator_rate,
    load_stopwords,
    normalize_target,
    role_distribution,
    singularize,
    temporal_series,
    top_words,
)
from framescope.llm_gateway import GenericFrameAssignment, IndicatorInstance
from framescope.semframe import ActorGazetteer, RoleFiller, SemanticFrameOccurrence, TextSpan

from conftest import make_article
from oracles import oracle_cooccurrence
from tagger_fixture import FIXTURE_GAZETTEER_GROUPS


def _assignment(article_id: str, frames: set[str]) -> GenericFrameAssignment:
    return GenericFrameAssignment(
        article_id=article_id, frames=frozenset(frames), reason="", raw_response="", valid=True
    )


def _instance(
    article_id: str,
    kind: str = "war.partisan_framing",
    *,
    grounded: bool = True,
    target: str | None = None,
    excerpt: str = "some excerpt",
) -> IndicatorInstance:
    return IndicatorInstance(
        article_id=article_id,
        kind_path=kind,
        excerpt=excerpt,
        target=target,
        reasoning=None,
        grounded=grounded,
        char_span=(0, 5) if grounded else None,
    )


def _occurrence(
    article_id: str,
    frame: str,
    sentence_index: int = 0,
    roles: dict[str, str] | None = None,
) -> SemanticFrameOccurrence:
    role_map = {}
    for name, text in (roles or {}).items():
        role_map[name] = RoleFiller(name=name, text=text, span=None)
    return SemanticFrameOccurrence(
        article_id=article_id,
        sentence_index=sentence_index,
        frame_name=frame,
        trigger=TextSpan(text="t", span=(0, 1)),
        roles=role_map,
    )


class TestGenericFrameShare:
    def test_multilabel_denominator(self):
        assignments = [
            _assignment("a1", {"Political"}),
            _assignment("a2", {"Political", "Security and defense"}),
        ]
        shares = generic_frame_share(assignments)
        assert shares["Political"] == pytest.approx(2 / 3)
        assert shares["Security and defense"] == pytest.approx(1 / 3)

    def test_single_none_article(self):
        shares = generic_frame_share([_assignment("a1", {"None"})])
        assert shares == {"None": 1.0}

    def test_empty(self):
        assert generic_frame_share([]) == {}

    def test_shares_sum_to_one(self):
        rng = random.Random(4)
        labels = ["Political", "Economic", "Morality", "None"]
        assignments = [
            _assignment(f"a{i}", set(rng.sample(labels, rng.randint(1, 3))))
            for i in range(30)
        ]
        shares = generic_frame_share(assignments)
        assert sum(shares.values()) == pytest.approx(1.0, abs=1e-9)


class TestIndicatorRate:
    def test_definition(self):
        articles = [make_article("a1", "w", token_count=200)]
        instances = [_instance("a1") for _ in range(4)]
        rates, excluded = indicator_rate(instances, articles, ["war.partisan_framing"])
        assert rates["war.partisan_framing"] == pytest.approx(0.02)
        assert excluded == 0

    def test_mean_over_articles(self):
        articles = [
            make_article("a1", "w", token_count=200),
            make_article("a2", "w", token_count=100),
        ]
        instances = [_instance("a1") for _ in range(4)]
        rates, _ = indicator_rate(instances, articles, ["war.partisan_framing"])
        assert rates["war.partisan_framing"] == pytest.approx((0.02 + 0.0) / 2)

    def test_ungrounded_excluded(self):
        articles = [make_article("a1", "w", token_count=100)]
        instances = [_instance("a1"), _instance("a1", grounded=False)]
        rates, _ = indicator_rate(instances, articles, ["war.partisan_framing"])
        assert rates["war.partisan_framing"] == pytest.approx(0.01)

    def test_zero_token_article_excluded_with_count(self):
        articles = [
            make_article("a1", "w", token_count=100),
            make_article("a0", "", token_count=0),
        ]
        rates, excluded = indicator_rate(
            [_instance("a1")], articles, ["war.partisan_framing"]
        )
        assert excluded == 1
        assert rates["war.partisan_framing"] == pytest.approx(0.01)

    def test_scale_consistency_under_duplication(self):
        articles = [
            make_article("a1", "w", token_count=120),
            make_article("a2", "w", token_count=80),
        ]
        instances = [_instance("a1"), _instance("a2"), _instance("a2")]
        base, _ = indicator_rate(instances, articles, ["war.partisan_framing"])
        doubled_articles = articles + [
            make_article("b1", "w", token_count=120),
            make_article("b2", "w", token_count=80),
        ]
        doubled_instances = instances + [
            _instance("b1"), _instance("b2"), _instance("b2"),
        ]
        doubled, _ = indicator_rate(
            doubled_instances, doubled_articles, ["war.partisan_framing"]
        )
        assert doubled["war.partisan_framing"] == pytest.approx(
            base["war.partisan_framing"], abs=1e-12
        )

    def test_pooled_variant(self):
        articles = [
            make_article("a1", "w", token_count=100),
            make_article("a2", "w", token_count=300),
        ]
        instances = [_instance("a1"), _instance("a2"), _instance("a2")]
        pooled, _ = indicator_rate(
            instances, articles, ["war.partisan_framing"], pooled=True
        )
        assert pooled["war.partisan_framing"] == pytest.approx(3 / 400)

    def test_war_fixture_dominates_peace(self):
        articles = [make_article(f"a{i}", "w", token_count=100) for i in range(10)]
        war_kinds = ["war.partisan_framing", "war.military_solution"]
        peace_kinds = ["peace.peace_orientation", "peace.people_orientation"]
        instances = []
        for article in articles:
            for kind in war_kinds:
                instances += [_instance(article.id, kind), _instance(article.id, kind)]
            for kind in peace_kinds:
                instances.append(_instance(article.id, kind))
        rates, _ = indicator_rate(instances, articles, war_kinds + peace_kinds)
        assert min(rates[k] for k in war_kinds) > max(rates[k] for k in peace_kinds)


class TestClusterTargets:
    def test_normalize_target(self):
        assert normalize_target("the Hamas") == "hamas"
        assert normalize_target("Hamas militants!") == "hamas militant"
        assert singularize("hamas") == "hamas"

    def test_hamas_fixture_single_cluster(self):
        instances = [
            _instance("a1", "war.language.demonizing_language", target=t)
            for t in ["Hamas", "Hamas militants", "the Hamas"]
        ]
        clusters = cluster_targets(instances)
        assert len(clusters) == 1
        assert clusters[0].canonical_label == "hamas"
        assert clusters[0].count == 3

    def test_distinct_groups_stay_separate(self):
        instances = [
            _instance("a1", target=t)
            for t in ["Israel", "Israeli government", "Hamas"]
        ]
        clusters = cluster_targets(instances)
        labels = {c.canonical_label for c in clusters}
        assert len(clusters) == 3  # israel/israeli differ as tokens; hamas separate
        assert "hamas" in labels

    def test_containment_merges(self):
        instances = [
            _instance("a1", target="Israeli government"),
            _instance("a2", target="the Israeli government"),
            _instance("a3", target="government"),
        ]
        clusters = cluster_targets(instances)
        # "government" vs "israeli government": jaccard 1/2 >= 0.5 merges.
        assert len(clusters) == 1 and clusters[0].count == 3

    def test_empty(self):
        assert cluster_targets([]) == []

    def test_sorted_by_count_then_label(self):
        instances = (
            [_instance("a", target="Hamas")] * 2
            + [_instance("b", target="Israel")] * 2
            + [_instance("c", target="settlers")] * 3
        )
        clusters = cluster_targets(instances)
        assert [(c.canonical_label, c.count) for c in clusters] == [
            ("settler", 3), ("hamas", 2), ("israel", 2),
        ]

    def test_permutation_invariant(self):
        targets = ["Hamas", "Hamas militants", "the Hamas", "Israel", "Israeli army",
                   "settlers", "the settlers", "Gazans"]
        instances = [_instance(f"a{i}", target=t) for i, t in enumerate(targets)]
        base = [(c.canonical_label, c.count) for c in cluster_targets(instances)]
        for seed in range(5):
            shuffled = instances[:]
            random.Random(seed).shuffle(shuffled)
            assert [(c.canonical_label, c.count) for c in cluster_targets(shuffled)] == base


class TestTopWords:
    def test_hand_count(self):
        stopwords = frozenset({"the"})
        ranked = top_words(["the president spoke", "President Biden"], 5, stopwords)
        assert ranked == [("president", 2), ("biden", 1), ("spoke", 1)]

    def test_all_stopworded(self):
        assert top_words(["the of and"], 3, frozenset({"the", "of", "and"})) == []

    def test_k_cutoff_with_tie_break(self):
        ranked = top_words(["b a c a b d"], 2, frozenset())
        assert ranked == [("a", 2), ("b", 2)]

    def test_k_must_be_positive(self):
        with pytest.raises(ValueError):
            top_words([], 0, frozenset())

    def test_stock_stopwords_keep_content_words(self):
        stopwords = load_stopwords()
        assert "the" in stopwords and "of" in stopwords
        assert "people" not in stopwords and "minister" not in stopwords


class TestFrameShare:
    def test_visible_scope(self, taxonomy):
        occurrences = [_occurrence("a1", "Attack")] * 3 + [_occurrence("a1", "Killing")]
        shares = frame_share(occurrences, taxonomy, "visible")
        assert shares == {"Attack": 0.75, "Killing": 0.25}

    def test_invisible_scope_empty(self, taxonomy):
        occurrences = [_occurrence("a1", "Attack")]
        assert frame_share(occurrences, taxonomy, "invisible") == {}

    def test_mixed_sums_to_one(self, taxonomy):
        occurrences = [
            _occurrence("a1", "Attack"),
            _occurrence("a1", "Kinship"),
            _occurrence("a2", "Fear"),
        ]
        shares = frame_share(occurrences, taxonomy, "all")
        assert sum(shares.values()) == pytest.approx(1.0, abs=1e-9)


class TestRoleDistribution:
    def test_gazetteer_fixture(self, taxonomy):
        gazetteer = ActorGazetteer(FIXTURE_GAZETTEER_GROUPS)
        occurrences = [
            _occurrence("a1", "Attack", roles={"Assailant": "Hamas"}),
            _occurrence("a2", "Attack", roles={"Assailant": "Hamas militants"}),
            _occurrence("a3", "Attack", roles={"Assailant": "IDF"}),
        ]
        dist = role_distribution(occurrences, gazetteer, "Attack", "Assailant", taxonomy)
        assert dist["hamas-side"] == pytest.approx(2 / 3)
        assert dist["israel-side"] == pytest.approx(1 / 3)

    def test_killer_reports_as_assailant(self, taxonomy):
        gazetteer = ActorGazetteer(FIXTURE_GAZETTEER_GROUPS)
        occurrences = [_occurrence("a1", "Killing", roles={"Killer": "Hamas"})]
        dist = role_distribution(occurrences, gazetteer, "Killing", "Assailant", taxonomy)
        assert dist == {"hamas-side": 1.0}

    def test_unmatched_filler_is_other(self, taxonomy):
        gazetteer = ActorGazetteer(FIXTURE_GAZETTEER_GROUPS)
        occurrences = [_occurrence("a1", "Attack", roles={"Assailant": "unknown gunmen"})]
        dist = role_distribution(occurrences, gazetteer, "Attack", "Assailant", taxonomy)
        assert dist == {"other": 1.0}

    def test_no_filled_roles(self, taxonomy):
        gazetteer = ActorGazetteer(FIXTURE_GAZETTEER_GROUPS)
        assert role_distribution(
            [_occurrence("a1", "Attack")], gazetteer, "Attack", "Assailant", taxonomy
        ) == {}


class TestCooccurrence:
    def test_article_scope(self, taxonomy):
        occurrences = [
            _occurrence("a1", "Attack", sentence_index=0),
            _occurrence("a1", "Killing", sentence_index=3),
        ]
        matrix = cooccurrence(occurrences, "article")
        assert matrix.cell("Attack", "Killing") == 1

    def test_sentence_scope_separates(self, taxonomy):
        occurrences = [
            _occurrence("a1", "Attack", sentence_index=0),
            _occurrence("a1", "Killing", sentence_index=3),
        ]
        matrix = cooccurrence(occurrences, "sentence")
        assert matrix.cell("Attack", "Killing") == 0
        assert matrix.cell("Attack", "Attack") == 1

    def test_diagonal_counts_units(self):
        occurrences = [
            _occurrence("a1", "Attack", sentence_index=0),
            _occurrence("a1", "Attack", sentence_index=1),
            _occurrence("a2", "Attack"),
        ]
        matrix = cooccurrence(occurrences, "article")
        assert matrix.cell("Attack", "Attack") == 2

    def test_bad_scope(self):
        with pytest.raises(ValueError):
            cooccurrence([], "paragraph")

    def test_matches_brute_force_on_random_fixtures(self):
        frames = ["Attack", "Killing", "Fear", "Kinship", "Death"]
        rng = random.Random(21)
        for _round in range(25):
            occurrences = []
            unit_frames: dict[str, set[str]] = {}
            for unit in range(rng.randint(1, 20)):
                article_id = f"a{unit}"
                present = set(rng.sample(frames, rng.randint(0, len(frames))))
                if present:
                    unit_frames[article_id] = present
                for frame in present:
                    occurrences.append(_occurrence(article_id, frame))
            matrix = cooccurrence(occurrences, "article")
            expected = oracle_cooccurrence(unit_frames)
            for a in matrix.frames:
                for b in matrix.frames:
                    assert matrix.cell(a, b) == expected[(a, b)]

    def test_symmetry(self):
        rng = random.Random(8)
        frames = ["Attack", "Fear", "Death", "Kinship"]
        occurrences = [
            _occurrence(f"a{rng.randint(0, 6)}", rng.choice(frames)) for _ in range(40)
        ]
        matrix = cooccurrence(occurrences, "article")
        for i in range(len(matrix.frames)):
            for j in range(len(matrix.frames)):
                assert matrix.counts[i][j] == matrix.counts[j][i]


class TestTemporalSeries:
    def test_same_iso_week(self):
        # 2024-10-07 is a Monday, so the 7th and 9th share an ISO week.
        items = [(date(2024, 10, 7), "war"), (date(2024, 10, 9), "war")]
        series = temporal_series(items, "week")
        assert len(series) == 1
        bin_start, counts = series[0]
        assert bin_start == date(2024, 10, 7)
        assert counts == {"war": 2}

    def test_iso_week_boundary(self):
        # 2023-10-07 (Sat) and 2023-10-09 (Mon) fall in different ISO weeks.
        items = [(date(2023, 10, 7), "war"), (date(2023, 10, 9), "war")]
        series = temporal_series(items, "week")
        assert [s[0] for s in series] == [date(2023, 10, 2), date(2023, 10, 9)]

    def test_month_gap_fill(self):
        items = [(date(2023, 10, 5), "x"), (date(2023, 12, 20), "x")]
        series = temporal_series(items, "month")
        assert [s[0] for s in series] == [
            date(2023, 10, 1), date(2023, 11, 1), date(2023, 12, 1),
        ]
        assert series[1][1] == {"x": 0}

    def test_empty(self):
        assert temporal_series([], "day") == []

    def test_keys_zero_filled_per_bin(self):
        items = [(date(2023, 10, 2), "war"), (date(2023, 10, 3), "peace")]
        series = temporal_series(items, "day")
        assert series[0][1] == {"peace": 0, "war": 1}
        assert series[1][1] == {"peace": 1, "war": 0}


class TestPermutationInvariance:
    def test_aggregations_order_independent(self, taxonomy):
        rng = random.Random(17)
        articles = [make_article(f"a{i}", "w", token_count=50 + i) for i in range(12)]
        kinds = ["war.partisan_framing", "peace.peace_orientation"]
        instances = [
            _instance(rng.choice(articles).id, rng.choice(kinds), target="Hamas")
            for _ in range(40)
        ]
        occurrences = [
            _occurrence(rng.choice(articles).id, rng.choice(["Attack", "Fear"]))
            for _ in range(30)
        ]
        base_rates, _ = indicator_rate(instances, articles, kinds)
        base_share = frame_share(occurrences, taxonomy, "all")
        for seed in range(4):
            shuffled_instances = instances[:]
            shuffled_occurrences = occurrences[:]
            shuffled_articles = articles[:]
            random.Random(seed).shuffle(shuffled_instances)
            random.Random(seed).shuffle(shuffled_occurrences)
            random.Random(seed).shuffle(shuffled_articles)
            rates, _ = indicator_rate(shuffled_instances, shuffled_articles, kinds)
            assert rates == base_rates
            assert frame_share(shuffled_occurrences, taxonomy, "all") == base_share
