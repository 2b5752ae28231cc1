"""Placebo, rolling-effect, descriptive, and meta-regression diagnostics."""

import random

import numpy as np
import pytest
from numpy.testing import assert_allclose

from seasondid import (
    EffectAttributeRow,
    Outcome,
    OutcomeObservation,
    PanelStore,
    PhaseLabel,
    ProtectionCalendar,
    Quality,
    SeasonId,
    SeriesKey,
    SimConfig,
    describe_distribution,
    generate_panel,
    heterogeneity_regression,
    label_panel,
    offset_weeks,
    prepare_outcome_rows,
    pretrend_placebo,
    rolling_biweekly_effects,
    standardize_prices,
    compute_volatility,
)
from seasondid.errors import InfeasibleSampleError
from seasondid.panel import label_week

from conftest import basic_task, price_row, week, window
from oracles import did_from_cell_means, normal_equations_ols


def outcome_row(
    country,
    wk,
    value,
    phase,
    season_year,
    product="tomato",
    quality=Quality.CONVENTIONAL,
    region=None,
):
    return OutcomeObservation(
        series=SeriesKey(product, quality, country, region),
        week=wk,
        season=SeasonId(product, season_year),
        phase=phase,
        value=value,
    )


def simulated_rows(cfg):
    """(task, treated_rows, control_rows, calendar) for a generated panel."""
    treated, control, calendar = generate_panel(cfg)
    store = PanelStore(treated + control)
    task = basic_task(product=cfg.product, control_country=cfg.control_country)
    treated_rows, control_rows = prepare_outcome_rows(task, store, calendar)
    return task, treated_rows, control_rows, calendar


class TestOffsetWeeks:
    MAY_AUG = window("05-10", "08-31")

    def test_walks_back_from_the_protection_start(self):
        # the 2016 window starts in W19; W18..W15 are the four nearest
        # fully-unprotected weeks
        offsets = offset_weeks(self.MAY_AUG, 2016, 4)
        assert offsets == [week(2016, 18), week(2016, 17), week(2016, 16), week(2016, 15)]

    def test_boundary_weeks_are_skipped_not_counted(self):
        # walking into the previous season: the 2016 end-boundary week (W35)
        # must be skipped while fully-unprotected weeks keep counting
        offsets = offset_weeks(self.MAY_AUG, 2017, 200)
        assert week(2016, 35) not in offsets
        assert week(2016, 36) in offsets
        for wk in offsets:
            assert label_week(self.MAY_AUG, wk) is PhaseLabel.UNPROTECTED

    def test_walk_stops_at_the_previous_protection_phase(self):
        offsets = offset_weeks(self.MAY_AUG, 2017, 200)
        assert len(offsets) < 200
        # the furthest week collected is the first non-boundary week after
        # the previous protected phase
        assert offsets[-1] == week(2016, 36)
        assert label_week(self.MAY_AUG, offsets[-1].prev()) is not PhaseLabel.UNPROTECTED

    def test_offsets_are_nearest_first_and_distinct(self):
        offsets = offset_weeks(self.MAY_AUG, 2016, 6)
        assert len(set(offsets)) == 6
        assert all(b < a for a, b in zip(offsets, offsets[1:]))


class TestPretrendPlacebo:
    def test_common_trend_panel_gives_an_exactly_null_placebo(self):
        cfg = SimConfig(n_seasons=3, true_atet=25.0, seed=4)
        task, treated_rows, control_rows, calendar = simulated_rows(cfg)
        result = pretrend_placebo(task, treated_rows, control_rows, calendar,
                                  reps=50, seed=7)
        assert_allclose(result.estimate.atet, 0.0, atol=1e-12)
        assert result.seasons_used == 3
        assert result.estimate.method == "means"

    def test_placebo_equals_the_direct_offset_cell_did(self):
        cfg = SimConfig(n_seasons=3, trend_divergence_per_week=0.8, seed=4)
        task, treated_rows, control_rows, calendar = simulated_rows(cfg)
        result = pretrend_placebo(task, treated_rows, control_rows, calendar,
                                  reps=50, seed=7)

        win = calendar.window_for(cfg.product)
        values, d, t = [], [], []
        for year in sorted({r.season.index for r in treated_rows}):
            offsets = offset_weeks(win, year, 4)
            for rows, dd in ((treated_rows, 1), (control_rows, 0)):
                for row in rows:
                    if row.week in offsets[:2]:
                        values.append(row.value), d.append(dd), t.append(1)
                    elif row.week in offsets[2:]:
                        values.append(row.value), d.append(dd), t.append(0)
        expected = did_from_cell_means(np.array(values), np.array(d), np.array(t))
        assert_allclose(result.estimate.atet, expected, atol=1e-12)

    def test_diverging_trends_are_flagged(self):
        cfg = SimConfig(n_seasons=4, trend_divergence_per_week=3.0,
                        noise_sd=2.0, seed=4)
        task, treated_rows, control_rows, calendar = simulated_rows(cfg)
        result = pretrend_placebo(task, treated_rows, control_rows, calendar,
                                  reps=199, seed=7)
        assert result.estimate.atet > 3.0
        assert result.estimate.p_value < 0.05

    def test_incomplete_seasons_are_dropped(self):
        cfg = SimConfig(n_seasons=3, seed=4)
        task, treated_rows, control_rows, calendar = simulated_rows(cfg)
        win = calendar.window_for(cfg.product)
        gap_year = cfg.first_year + 1
        missing_week = offset_weeks(win, gap_year, 4)[0]
        thinned = [r for r in treated_rows if r.week != missing_week]
        result = pretrend_placebo(task, thinned, control_rows, calendar,
                                  reps=50, seed=7)
        assert result.seasons_used == 2

    def test_no_usable_season_is_infeasible(self):
        cfg = SimConfig(n_seasons=2, seed=4)
        task, treated_rows, control_rows, calendar = simulated_rows(cfg)
        win = calendar.window_for(cfg.product)
        blocked = set()
        for year in (cfg.first_year, cfg.first_year + 1):
            blocked.update(offset_weeks(win, year, 4))
        thinned = [r for r in treated_rows if r.week not in blocked]
        with pytest.raises(InfeasibleSampleError) as excinfo:
            pretrend_placebo(task, thinned, control_rows, calendar, reps=50, seed=7)
        assert excinfo.value.reason == "pretrend_no_complete_season"


class TestRollingBiweeklyEffects:
    def protected_chunks(self, rows):
        """Per-season protected weeks, chunked in pairs like the estimator."""
        by_season = {}
        for row in rows:
            if row.phase is PhaseLabel.PROTECTED:
                by_season.setdefault(row.season.index, set()).add(row.week)
        return {
            year: [sorted(weeks)[i : i + 2] for i in range(0, len(weeks), 2)]
            for year, weeks in by_season.items()
        }

    def test_constant_effect_shows_a_flat_profile(self):
        cfg = SimConfig(n_seasons=1, true_atet=20.0, seed=6)
        task, treated_rows, control_rows, calendar = simulated_rows(cfg)
        results = rolling_biweekly_effects(task, treated_rows, control_rows,
                                           calendar, reps=50, seed=1)
        chunks = self.protected_chunks(treated_rows)
        assert len(results) == max(len(c) for c in chunks.values())
        assert [r.biweek for r in results] == list(range(1, len(results) + 1))
        for result in results:
            assert result.status == "ok"
            assert result.reason is None
            assert_allclose(result.estimate.atet, 20.0, atol=1e-9)

    def test_multi_season_profile_pools_by_observation_count(self):
        # seasons drift on the ISO grid, so a biweek can pool a two-week
        # chunk from one season with a one-week chunk from another; the
        # cell-means pooling then deviates slightly from the per-season
        # effect, and is exact whenever every season contributes full pairs
        cfg = SimConfig(n_seasons=2, true_atet=20.0, seed=6)
        task, treated_rows, control_rows, calendar = simulated_rows(cfg)
        results = rolling_biweekly_effects(task, treated_rows, control_rows,
                                           calendar, reps=50, seed=1)
        for result in results:
            assert result.status == "ok"
            assert abs(result.estimate.atet - 20.0) < 0.5
            if result.estimate.n_by_cell[0] == 2 * result.seasons_used:
                assert_allclose(result.estimate.atet, 20.0, atol=1e-9)

    def test_trailing_odd_week_forms_a_short_biweek(self):
        cfg = SimConfig(n_seasons=1, weeks_per_season=30, protected_start=8,
                        protected_end=21, true_atet=20.0, seed=6)  # 13 weeks
        task, treated_rows, control_rows, calendar = simulated_rows(cfg)
        results = rolling_biweekly_effects(task, treated_rows, control_rows,
                                           calendar, reps=50, seed=1)
        assert len(results) == 7
        last = results[-1]
        assert last.status == "ok"
        # the final biweek holds a single week: 2 treated + 0 control rows in
        # the pseudo-post cell on the control side comes from the same week
        assert last.estimate.n_by_cell[0] == 1
        assert_allclose(last.estimate.atet, 20.0, atol=1e-9)

    def test_unobserved_biweeks_are_marked_infeasible(self):
        cfg = SimConfig(n_seasons=2, true_atet=20.0, seed=6)
        task, treated_rows, control_rows, calendar = simulated_rows(cfg)
        chunks = self.protected_chunks(treated_rows)
        n_common = min(len(c) for c in chunks.values())
        blocked = set()
        for year, season_chunks in chunks.items():
            for chunk in season_chunks[n_common - 1 :]:
                blocked.update(chunk)
        thinned = [r for r in treated_rows if r.week not in blocked]
        results = rolling_biweekly_effects(task, thinned, control_rows,
                                           calendar, reps=50, seed=1)
        for result in results:
            if result.biweek < n_common:
                assert result.status == "ok"
            else:
                assert result.status == "infeasible"
                assert result.reason == "no_complete_season"
                assert result.estimate is None
                assert result.seasons_used == 0

    def test_all_boundary_window_cannot_roll(self):
        calendar = ProtectionCalendar({"tomato": window("06-07", "06-09")})
        task = basic_task(product="tomato")
        treated_rows = [
            outcome_row("CH", week(2016, 10 + j), 100.0, PhaseLabel.UNPROTECTED, 2016)
            for j in range(6)
        ]
        control_rows = [
            outcome_row("DE", week(2016, 10 + j), 100.0, PhaseLabel.UNPROTECTED, 2016)
            for j in range(6)
        ]
        with pytest.raises(InfeasibleSampleError) as excinfo:
            rolling_biweekly_effects(task, treated_rows, control_rows, calendar,
                                     reps=50, seed=1)
        assert excinfo.value.reason == "rolling_no_protected_weeks"


class TestDescribeDistribution:
    def hand_rows(self):
        return [
            # DE protected: two units with means 10 and 30
            outcome_row("DE", week(2016, 20), 5.0, PhaseLabel.PROTECTED, 2016),
            outcome_row("DE", week(2016, 21), 15.0, PhaseLabel.PROTECTED, 2016),
            outcome_row("DE", week(2016, 20), 30.0, PhaseLabel.PROTECTED, 2016,
                        quality=Quality.ORGANIC),
            # DE unprotected: one unit
            outcome_row("DE", week(2016, 10), 7.0, PhaseLabel.UNPROTECTED, 2016),
            # CH protected: one unit
            outcome_row("CH", week(2016, 20), 2.0, PhaseLabel.PROTECTED, 2016),
        ]

    def test_two_stage_aggregation_by_hand(self):
        summaries = describe_distribution(self.hand_rows(), Outcome.LEVEL)
        assert [(s.country, s.phase) for s in summaries] == [
            ("CH", PhaseLabel.PROTECTED),
            ("DE", PhaseLabel.PROTECTED),
            ("DE", PhaseLabel.UNPROTECTED),
        ]
        de_protected = summaries[1]
        assert de_protected.n == 2
        assert_allclose(
            (de_protected.mean, de_protected.q1, de_protected.median, de_protected.q3),
            (20.0, 15.0, 20.0, 25.0),
        )
        de_unprotected = summaries[2]
        assert de_unprotected.n == 1
        assert de_unprotected.q1 == de_unprotected.median == de_unprotected.q3 == 7.0

    def test_input_order_is_irrelevant(self):
        rows = self.hand_rows()
        shuffled = rows[:]
        random.Random(5).shuffle(shuffled)
        assert describe_distribution(rows, Outcome.LEVEL) == describe_distribution(
            shuffled, Outcome.LEVEL
        )

    def test_regions_are_separate_units(self):
        rows = [
            outcome_row("DE", week(2016, 20), 10.0, PhaseLabel.PROTECTED, 2016,
                        region="north"),
            outcome_row("DE", week(2016, 20), 30.0, PhaseLabel.PROTECTED, 2016,
                        region="south"),
        ]
        summary = describe_distribution(rows, Outcome.LEVEL)[0]
        assert summary.n == 2
        assert summary.mean == 20.0

    def test_constant_price_panel(self, tomato_calendar):
        prices = [
            price_row("tomato", "CH", week(2016, number), 80.0)
            for number in range(10, 45)
        ]
        labeled = label_panel(prices, tomato_calendar)
        level = describe_distribution(standardize_prices(labeled), Outcome.LEVEL)
        for summary in level:
            assert_allclose(
                (summary.mean, summary.q1, summary.median, summary.q3),
                (100.0, 100.0, 100.0, 100.0),
            )
        volatility = describe_distribution(compute_volatility(labeled), Outcome.VOLATILITY)
        for summary in volatility:
            assert summary.mean == 0.0


def attribute_row(gen, outcome=Outcome.LEVEL, conventional=None):
    conv = int(gen.integers(0, 2)) if conventional is None else conventional
    country = gen.choice(["FR", "DE", "IT"])
    return EffectAttributeRow(
        outcome=outcome,
        effect=float(gen.normal(10.0, 20.0)),
        conventional=conv,
        germany=int(country == "DE"),
        italy=int(country == "IT"),
        harvested_once=int(gen.integers(0, 2)),
        storability_weeks=float(gen.integers(2, 9)),
        market_share_pct=float(gen.uniform(0.1, 20.0)),
        days_protection=float(gen.integers(30, 200)),
    )


def oracle_design(rows, include_conventional):
    columns = [np.ones(len(rows))]
    names = ["const"]
    attributes = ["conventional", "germany", "italy", "harvested_once",
                  "storability_weeks", "market_share_pct", "days_protection"]
    for name in attributes:
        if name == "conventional" and not include_conventional:
            continue
        columns.append(np.array([float(getattr(r, name)) for r in rows]))
        names.append(name)
    return np.column_stack(columns), names


class TestHeterogeneityRegression:
    def test_single_quality_rows_match_the_oracle(self, rng):
        rows = [attribute_row(rng, conventional=1) for _ in range(12)]
        results = heterogeneity_regression(rows)
        by_name = {r.subsample: r for r in results}
        assert set(by_name) == {"pooled", "conventional"}  # no organic rows

        # in an all-conventional sample the dummy is constant and is pruned
        pooled = by_name["pooled"].fit
        assert "conventional" in pooled.dropped_columns
        x, names = oracle_design(rows, include_conventional=False)
        beta, se = normal_equations_ols(x, np.array([r.effect for r in rows]))
        assert pooled.column_names == tuple(names)
        assert_allclose(pooled.coefficients, beta, atol=1e-8)
        assert_allclose(pooled.standard_errors, se, atol=1e-8)
        # the conventional subsample fits the same design
        assert_allclose(by_name["conventional"].fit.coefficients, beta, atol=1e-8)

    def test_all_six_columns_match_the_oracle(self, rng):
        rows = []
        for outcome in (Outcome.LEVEL, Outcome.VOLATILITY):
            rows += [attribute_row(rng, outcome, conventional=1) for _ in range(12)]
            rows += [attribute_row(rng, outcome, conventional=0) for _ in range(12)]
        results = heterogeneity_regression(rows)
        assert len(results) == 6
        for result in results:
            subset = [r for r in rows if r.outcome is result.outcome]
            if result.subsample == "conventional":
                subset = [r for r in subset if r.conventional == 1]
            elif result.subsample == "organic":
                subset = [r for r in subset if r.conventional == 0]
            pooled = result.subsample == "pooled"
            x, names = oracle_design(subset, include_conventional=pooled)
            y = np.array([r.effect for r in subset])
            beta, se = normal_equations_ols(x, y)
            assert result.n == len(subset)
            assert result.fit.column_names == tuple(names)
            assert_allclose(result.fit.coefficients, beta, atol=1e-8)
            assert_allclose(result.fit.standard_errors, se, atol=1e-8)
            fitted = x @ beta
            tss = float(((y - y.mean()) ** 2).sum())
            rss = float(((y - fitted) ** 2).sum())
            assert_allclose(result.r_squared, 1.0 - rss / tss, atol=1e-10)

    def test_constant_effects_put_everything_in_the_intercept(self, rng):
        rows = [
            EffectAttributeRow(
                outcome=Outcome.LEVEL,
                effect=42.0,
                conventional=i % 2,
                germany=int(i % 3 == 0),
                italy=int(i % 3 == 1),
                harvested_once=(i // 2) % 2,
                storability_weeks=float(2 + i % 5),
                market_share_pct=float(1 + (3 * i) % 17),
                days_protection=float(40 + (i * i) % 31),
            )
            for i in range(20)
        ]
        pooled = [r for r in heterogeneity_regression(rows) if r.subsample == "pooled"][0]
        assert_allclose(pooled.fit.coefficient("const"), 42.0, atol=1e-8)
        for name in pooled.fit.column_names[1:]:
            assert_allclose(pooled.fit.coefficient(name), 0.0, atol=1e-8)
        assert pooled.r_squared == 0.0

    def test_subsample_design_drops_only_the_quality_dummy(self, rng):
        rows = [attribute_row(rng, conventional=i % 2) for i in range(24)]
        results = {r.subsample: r for r in heterogeneity_regression(rows)}
        pooled_names = results["pooled"].fit.column_names
        for subsample in ("conventional", "organic"):
            names = results[subsample].fit.column_names
            assert names == tuple(n for n in pooled_names if n != "conventional")
