import json
from datetime import timedelta

import pytest

from geochallenge.challenge import (
    Answer,
    consumed_location_ids,
    decide,
    generate_challenge,
    outward_questions,
    render_prompt,
    score,
    submit_answer,
)
from geochallenge.errors import (
    InsufficientLocationsError,
    SessionClosedError,
    SingleAttemptError,
)
from geochallenge.geo import GeoPoint
from geochallenge.trace import LoggedLocation

from .conftest import HOME, offset_north, utc


def make_locations(n, start=None, spacing_m=600.0):
    start = start or utc(2024, 12, 1, 9, 0)
    return [
        LoggedLocation(
            id=f"L{i:04d}",
            point=offset_north(HOME, spacing_m * i),
            logged_at=start + timedelta(hours=6 * i),
            cumulative_dwell_s=900,
        )
        for i in range(n)
    ]


def answer_all(session, correct_flags):
    """Submit one answer per question: at the logged point when the flag is
    truthy, 250 m north of it otherwise."""

    when = utc(2024, 12, 20, 10, 0)
    for q, flag in zip(session.questions, correct_flags):
        point = q.location_point if flag else offset_north(q.location_point, 250.0)
        session = submit_answer(session, Answer(q.index, point, when))
    return session


class TestPromptRendering:
    def test_reference_format(self):
        assert (
            render_prompt(utc(2024, 12, 18, 16, 0))
            == "Where were you on the 18 of December at 4:00 PM?"
        )

    def test_rounds_to_nearest_quarter_hour(self):
        assert "4:15 PM" in render_prompt(utc(2024, 12, 18, 16, 8))
        assert "4:00 PM" in render_prompt(utc(2024, 12, 18, 16, 7))
        assert "4:00 PM" in render_prompt(utc(2024, 12, 18, 15, 53))

    def test_midnight_and_noon(self):
        assert "12:00 AM" in render_prompt(utc(2024, 12, 18, 0, 2))
        assert "12:00 PM" in render_prompt(utc(2024, 12, 18, 12, 1))

    def test_rounding_rolls_date_forward(self):
        text = render_prompt(utc(2024, 12, 31, 23, 55))
        assert "the 1 of January" in text
        assert "12:00 AM" in text

    def test_optional_weekday(self):
        text = render_prompt(utc(2024, 12, 18, 16, 0), include_weekday=True)
        assert text.startswith("Where were you on Wednesday the 18")


class TestGenerateChallenge:
    def test_ten_most_recent_newest_first(self):
        locations = make_locations(12)
        session = generate_challenge(locations)
        assert len(session.questions) == 10
        # newest (index 11) first, location index 2 never asked
        assert session.questions[0].location_id == "L0011"
        assert session.questions[9].location_id == "L0002"
        asked = [q.asked_about for q in session.questions]
        assert asked == sorted(asked, reverse=True)

    def test_insufficient_locations(self):
        with pytest.raises(InsufficientLocationsError) as err:
            generate_challenge(make_locations(9))
        assert err.value.shortfall == 1

    def test_questions_reference_distinct_locations(self):
        session = generate_challenge(make_locations(15))
        ids = [q.location_id for q in session.questions]
        assert len(set(ids)) == 10

    def test_prompt_from_logged_at(self):
        locations = [
            LoggedLocation(f"L{i:04d}", offset_north(HOME, 600.0 * i),
                           utc(2024, 12, 18, 16, 0) - timedelta(days=i), 900)
            for i in range(10)
        ]
        session = generate_challenge(locations)
        assert session.questions[0].prompt_text == (
            "Where were you on the 18 of December at 4:00 PM?"
        )

    def test_exclude_consumed(self):
        locations = make_locations(20)
        first = generate_challenge(locations)
        consumed = consumed_location_ids(first)
        second = generate_challenge(locations, exclude_ids=consumed)
        assert not consumed & {q.location_id for q in second.questions}

    def test_consumption_exhausts_pool(self):
        locations = make_locations(15)
        consumed = consumed_location_ids(generate_challenge(locations))
        with pytest.raises(InsufficientLocationsError) as err:
            generate_challenge(locations, exclude_ids=consumed)
        assert err.value.available == 5


class TestSubmitAnswer:
    def test_exact_point_correct(self):
        session = generate_challenge(make_locations(10))
        q = session.questions[0]
        session = submit_answer(session, Answer(0, q.location_point, utc(2024, 12, 20)))
        assert session.per_question_correct[0] == "correct"

    def test_answer_outside_margin_incorrect(self):
        session = generate_challenge(make_locations(10))
        q = session.questions[3]
        session = submit_answer(
            session, Answer(3, offset_north(q.location_point, 250.0), utc(2024, 12, 20))
        )
        assert session.per_question_correct[3] == "incorrect"

    def test_single_attempt(self):
        session = generate_challenge(make_locations(10))
        q = session.questions[3]
        session = submit_answer(session, Answer(3, q.location_point, utc(2024, 12, 20)))
        with pytest.raises(SingleAttemptError):
            submit_answer(
                session, Answer(3, offset_north(q.location_point, 250.0), utc(2024, 12, 20))
            )
        assert session.per_question_correct[3] == "correct"  # first result stands

    def test_closed_session_rejects(self):
        session = answer_all(generate_challenge(make_locations(10)), [True] * 10)
        assert session.state == "complete"
        with pytest.raises(SessionClosedError):
            submit_answer(session, Answer(0, HOME, utc(2024, 12, 20)))

    def test_completion_computes_decision(self):
        session = answer_all(generate_challenge(make_locations(10)), [True] * 7 + [False] * 3)
        assert session.state == "complete"
        assert session.decision == "authenticated"

    def test_index_out_of_range(self):
        session = generate_challenge(make_locations(10))
        with pytest.raises(ValueError):
            submit_answer(session, Answer(10, HOME, utc(2024, 12, 20)))


class TestDecide:
    @pytest.mark.parametrize(
        "correct,expected",
        [(7, "authenticated"), (6, "rejected"), (10, "authenticated"), (0, "rejected")],
    )
    def test_threshold(self, correct, expected):
        flags = [True] * correct + [False] * (10 - correct)
        session = answer_all(generate_challenge(make_locations(10)), flags)
        assert decide(session) == expected
        assert session.decision == expected

    def test_incomplete_is_pending(self):
        session = generate_challenge(make_locations(10))
        q = session.questions[0]
        session = submit_answer(session, Answer(0, q.location_point, utc(2024, 12, 20)))
        assert decide(session) == "pending"
        assert session.decision == "pending"

    def test_monotone_in_flags(self):
        # flipping one incorrect answer to correct never revokes access
        for correct in range(10):
            flags = [True] * correct + [False] * (10 - correct)
            improved = [True] * (correct + 1) + [False] * (9 - correct)
            before = decide(answer_all(generate_challenge(make_locations(10)), flags))
            after = decide(answer_all(generate_challenge(make_locations(10)), improved))
            assert not (before == "authenticated" and after == "rejected")

    def test_matches_brute_force_recount(self):
        import random

        rng = random.Random(3)
        for _ in range(25):
            flags = [rng.random() < 0.5 for _ in range(10)]
            session = answer_all(generate_challenge(make_locations(10)), flags)
            recount = sum(1 for c in session.per_question_correct if c == "correct")
            assert (decide(session) == "authenticated") == (recount >= 7)


class TestScore:
    def test_fresh_session(self):
        assert score(generate_challenge(make_locations(10))) == 0

    def test_all_correct(self):
        assert score(answer_all(generate_challenge(make_locations(10)), [True] * 10)) == 10

    def test_partial(self):
        session = answer_all(generate_challenge(make_locations(10)), [True] * 4 + [False] * 6)
        assert score(session) == 4


class TestOutwardPayload:
    def test_no_coordinates_leave_the_engine(self):
        session = generate_challenge(make_locations(10))
        payload = outward_questions(session)
        text = json.dumps(payload)
        for q in session.questions:
            assert repr(q.location_point.latitude_deg) not in text
            assert repr(q.location_point.longitude_deg) not in text
        for entry in payload:
            assert set(entry) == {"index", "prompt", "answered"}

    def test_custom_threshold_and_margin(self):
        session = generate_challenge(make_locations(10), margin_m=500.0, threshold=5)
        q = session.questions[0]
        session = submit_answer(
            session, Answer(0, offset_north(q.location_point, 400.0), utc(2024, 12, 20))
        )
        assert session.per_question_correct[0] == "correct"
        flags = [True] * 4 + [False] * 5
        for q, flag in zip(session.questions[1:], flags):
            point = q.location_point if flag else offset_north(q.location_point, 600.0)
            session = submit_answer(session, Answer(q.index, point, utc(2024, 12, 20)))
        assert session.decision == "authenticated"  # 5 correct >= threshold 5
