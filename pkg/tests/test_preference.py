import math

import numpy as np
import pytest
from scipy.special import expit

from core.errors import DatasetError
from preference.bradley_terry import ELO_BASE, bt_fit, elo_from_fit, style_controlled_fit
from preference.records import ComparisonRecord, dump_comparisons, parse_comparisons


def _wins(a: str, b: str, a_wins: int, b_wins: int, ties: int = 0) -> list[ComparisonRecord]:
    return (
        [ComparisonRecord(a, b, "a")] * a_wins
        + [ComparisonRecord(a, b, "b")] * b_wins
        + [ComparisonRecord(a, b, "tie")] * ties
    )


# ── Records ──

def test_parse_comparisons():
    lines = [
        '{"a": "x", "b": "y", "winner": "a"}',
        "",
        '{"a": "y", "b": "z", "winner": "tie", "cov": {"length": -12.5}}',
    ]
    records = parse_comparisons(lines)
    assert records == [
        ComparisonRecord("x", "y", "a"),
        ComparisonRecord("y", "z", "tie", {"length": -12.5}),
    ]
    assert [r.outcome for r in records] == [1.0, 0.5]
    assert dump_comparisons(records).splitlines() == [lines[0], '{"a": "y", "b": "z", "winner": "tie", "cov": {"length": -12.5}}']


@pytest.mark.parametrize("bad", [
    '{"a": "x", "b": "y", "winner": "c"}',
    '{"a": "x", "b": "x", "winner": "a"}',
    '{"a": "x", "winner": "a"}',
    '{"a": "x", "b": "y", "winner": "a", "judge": "me"}',
    '{"a": "", "b": "y", "winner": "a"}',
    "not json",
])
def test_parse_comparisons_reports_the_line(bad):
    with pytest.raises(DatasetError) as exc:
        parse_comparisons(['{"a": "x", "b": "y", "winner": "b"}', bad])
    assert exc.value.line == 2


def test_non_finite_covariate_rejected():
    with pytest.raises(ValueError):
        ComparisonRecord("x", "y", "a", {"length": math.inf})


# ── Plain fit ──

def test_balanced_record_gives_equal_ratings():
    table = bt_fit(_wins("A", "B", 5, 5))
    assert table.converged
    assert table.ratings["A"] == pytest.approx(0.0, abs=1e-6)
    assert table.ratings["B"] == pytest.approx(0.0, abs=1e-6)


def test_ties_count_as_half_wins():
    table = bt_fit(_wins("A", "B", 0, 0, ties=8))
    assert table.ratings["A"] == pytest.approx(table.ratings["B"], abs=1e-6)
    assert bt_fit(_wins("A", "B", 3, 1)).ratings == pytest.approx(bt_fit(_wins("A", "B", 2, 0, ties=2)).ratings, abs=1e-6)


def test_ninety_percent_win_rate():
    table = bt_fit(_wins("A", "B", 90, 10))
    gap = table.ratings["A"] - table.ratings["B"]
    assert expit(gap) == pytest.approx(0.9, abs=1e-3)
    assert table.win_probability("A", "B") == pytest.approx(0.9, abs=1e-3)

    elo = elo_from_fit(table)
    assert elo.units == "elo"
    assert elo.ratings["A"] - elo.ratings["B"] == pytest.approx(381.7, abs=1.0)
    assert (elo.ratings["A"] + elo.ratings["B"]) / 2 == pytest.approx(ELO_BASE, abs=1e-6)
    assert elo.win_probability("A", "B") == pytest.approx(table.win_probability("A", "B"), abs=1e-12)
    assert elo_from_fit(elo) is elo


def test_fit_is_order_independent():
    records = _wins("A", "B", 7, 3) + _wins("B", "C", 6, 4) + _wins("A", "C", 2, 1, ties=1)
    shuffled = list(records)
    np.random.default_rng(0).shuffle(shuffled)
    first, second = bt_fit(records), bt_fit(shuffled)
    for model in first.ratings:
        assert first.ratings[model] == pytest.approx(second.ratings[model], abs=1e-5)
    assert [m for m, _ in first.ranked()] == ["A", "B", "C"]


def test_planted_strengths_are_recovered():
    truth = {"alpha": 1.0, "beta": 0.3, "gamma": -0.2, "delta": -1.1}
    models = list(truth)
    rng = np.random.default_rng(42)
    records = []
    for _ in range(10_000):
        i, j = rng.choice(len(models), size=2, replace=False)
        a, b = models[i], models[j]
        won = rng.random() < expit(truth[a] - truth[b])
        records.append(ComparisonRecord(a, b, "a" if won else "b"))
    table = bt_fit(records)
    assert table.converged
    for model, s in truth.items():
        assert table.ratings[model] == pytest.approx(s, abs=0.1)


def _simulate_pairs(truth: dict[str, float], per_pair: int, seed: int) -> list[ComparisonRecord]:
    """per_pair draws for every unordered pair under the Bradley-Terry model."""
    rng = np.random.default_rng(seed)
    models = list(truth)
    records = []
    for i, a in enumerate(models):
        for b in models[i + 1:]:
            p = expit(truth[a] - truth[b])
            records += [ComparisonRecord(a, b, "a" if u < p else "b") for u in rng.random(per_pair)]
    return records


def test_shifted_strengths_fit_to_the_same_anchored_ratings():
    truth = {"alpha": 1.0, "beta": 0.3, "gamma": -0.2, "delta": -1.1}
    shifted = {m: s + 5.0 for m, s in truth.items()}
    base = bt_fit(_simulate_pairs(truth, 2_000, seed=11))
    moved = bt_fit(_simulate_pairs(shifted, 2_000, seed=11))
    center = sum(truth.values()) / len(truth)
    assert sum(moved.ratings.values()) == pytest.approx(0.0, abs=1e-6)
    for model, s in truth.items():
        assert moved.ratings[model] == pytest.approx(base.ratings[model], abs=1e-6)
        assert moved.ratings[model] == pytest.approx(s - center, abs=0.1)


def test_fitted_win_probabilities_match_empirical_rates():
    truth = {"alpha": 1.2, "beta": 0.4, "gamma": 0.0, "delta": -0.9}
    records = _simulate_pairs(truth, 10_000, seed=5)
    table = bt_fit(records)
    models = list(truth)
    for i, a in enumerate(models):
        for b in models[i + 1:]:
            pair = [r for r in records if r.model_a == a and r.model_b == b]
            assert len(pair) >= 10_000
            empirical = sum(r.outcome for r in pair) / len(pair)
            assert table.win_probability(a, b) == pytest.approx(empirical, abs=0.02)


def test_disconnected_components_are_anchored_separately():
    records = _wins("A", "B", 3, 1) + _wins("C", "D", 1, 3)
    table = bt_fit(records)
    assert table.components == 2
    assert table.ratings["A"] + table.ratings["B"] == pytest.approx(0.0, abs=1e-9)
    assert table.ratings["C"] + table.ratings["D"] == pytest.approx(0.0, abs=1e-9)
    assert any("2 components" in d for d in table.diagnostics)


def test_empty_records_raise():
    with pytest.raises(ValueError):
        bt_fit([])
    with pytest.raises(ValueError):
        style_controlled_fit([])


# ── Style control ──

def _verbose_records(n: int, seed: int = 7) -> list[ComparisonRecord]:
    """Equal-strength models where the longer answer wins more often."""
    rng = np.random.default_rng(seed)
    records = []
    for _ in range(n):
        d = rng.uniform(-0.5, 2.5)
        if rng.random() < 0.5:
            a, b, x = "verbose", "terse", d
        else:
            a, b, x = "terse", "verbose", -d
        won = rng.random() < expit(1.5 * x)
        records.append(ComparisonRecord(a, b, "a" if won else "b", {"length": x}))
    return records


def test_style_control_removes_a_length_advantage():
    records = _verbose_records(20_000)
    plain = bt_fit(records)
    styled = style_controlled_fit(records)
    plain_gap = plain.ratings["verbose"] - plain.ratings["terse"]
    styled_gap = styled.ratings["verbose"] - styled.ratings["terse"]
    assert plain_gap > 0.5
    assert abs(styled_gap) <= 0.1 * plain_gap
    assert styled.coefficients["length"] == pytest.approx(1.5, abs=0.15)
    assert styled.log_likelihood > plain.log_likelihood


def test_duplicate_covariate_is_pinned():
    records = [
        ComparisonRecord(r.model_a, r.model_b, r.winner, {"length": r.covariates["length"], "length_copy": r.covariates["length"]})
        for r in _verbose_records(2_000)
    ]
    table = style_controlled_fit(records)
    assert table.coefficients["length_copy"] == 0.0
    assert table.coefficients["length"] != 0.0
    assert any("length_copy" in d and "collinear" in d for d in table.diagnostics)


def test_covariate_equal_to_the_pairing_is_pinned():
    records = [
        ComparisonRecord(r.model_a, r.model_b, r.winner, {"side": 1.0 if r.model_a == "verbose" else -1.0})
        for r in _verbose_records(500)
    ]
    table = style_controlled_fit(records)
    assert table.coefficients == {"side": 0.0}
    assert any("collinear" in d for d in table.diagnostics)


def test_all_zero_covariates_match_the_plain_fit():
    records = _wins("A", "B", 6, 2) + _wins("B", "C", 5, 5) + _wins("A", "C", 4, 1)
    zeroed = [ComparisonRecord(r.model_a, r.model_b, r.winner, {"length": 0.0}) for r in records]
    styled = style_controlled_fit(zeroed)
    plain = bt_fit(records)
    assert styled.ratings == plain.ratings
    assert styled.coefficients == {"length": 0.0}
    assert any("zero on every record" in d for d in styled.diagnostics)


def test_missing_covariates_raise():
    records = [ComparisonRecord("A", "B", "a", {"length": 1.0}), ComparisonRecord("A", "B", "b")]
    with pytest.raises(ValueError):
        style_controlled_fit(records)


# ── Output ──

def test_rating_table_text_and_dict():
    table = elo_from_fit(bt_fit(_wins("A", "B", 90, 10)))
    text = table.to_text().splitlines()
    assert text[0].split() == ["rank", "model", "rating"]
    assert text[1].split()[:2] == ["1", "A"]
    d = table.to_dict()
    assert [row["model"] for row in d["ratings"]] == ["A", "B"]
    assert d["units"] == "elo"
