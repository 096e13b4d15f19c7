"""Security analysis: key-space estimation, throttled-guessing resilience,
ROC curves over response datasets, and the combined criteria report.

The guessing model is the weakest-attacker baseline: each question is an
independent uniform guess over the answer cells. Log-space arithmetic keeps
the tiny tail probabilities meaningful.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from typing import Iterable, Literal, Sequence

from .errors import InsufficientDataError
from .geo import disc_cell_count

SCORE_MAX = 10
THROTTLED_GUESSES_PER_DAY = 10
THROTTLED_DAYS = 365
#: A scheme resists throttled guessing / a known adversary if no more than
#: 1% of accounts fall per year.
COMPROMISE_LIMIT = 0.01

SubjectKind = Literal["legitimate", "adversary"]


@dataclass(frozen=True)
class KeySpaceEstimate:
    radius_km: float
    margin_m: float
    questions: int
    required_correct: int
    cells: int
    log2_keyspace: float


@dataclass(frozen=True, slots=True)
class ResponseRecord:
    """One completed session: who answered and how many of the ten
    questions they got right."""

    subject_kind: SubjectKind
    score: int

    def __post_init__(self):
        if self.subject_kind not in ("legitimate", "adversary"):
            raise ValueError(f"unknown subject kind {self.subject_kind!r}")
        if not 0 <= self.score <= SCORE_MAX:
            raise ValueError(f"score {self.score} outside 0..{SCORE_MAX}")


@dataclass(frozen=True)
class RocCurve:
    """Per-threshold accept rates: at threshold t, tpr is the fraction of
    legitimate users scoring >= t and fpr the fraction of adversaries."""

    points: tuple[tuple[int, float, float], ...]

    def at(self, threshold: int) -> tuple[float, float]:
        for t, tpr, fpr in self.points:
            if t == threshold:
                return tpr, fpr
        raise KeyError(threshold)


def estimate_keyspace(
    radius_km: float = 12.0,
    margin_m: float = 200.0,
    questions: int = 10,
    required_correct: int = 7,
) -> KeySpaceEstimate:
    """Key space of a challenge: ordered guesses over `required_correct`
    questions, each with `cells` possible answers.

    log2 of the k-permutation count P(cells, k) computed in log space, so
    it stays exact-enough far beyond float factorial range.
    """

    if questions < 1:
        raise ValueError("questions must be positive")
    if required_correct < 0 or required_correct > questions:
        raise ValueError("required_correct must lie in 0..questions")
    cells = disc_cell_count(radius_km, margin_m)
    if required_correct > cells:
        raise ValueError(f"required_correct {required_correct} exceeds cell count {cells}")
    bits = sum(math.log2(cells - i) for i in range(required_correct))
    return KeySpaceEstimate(
        radius_km=radius_km,
        margin_m=margin_m,
        questions=questions,
        required_correct=required_correct,
        cells=cells,
        log2_keyspace=bits,
    )


def _log_binomial_tail(n: int, log_p: float, log_q: float, k: int) -> float:
    """log of P(X >= k) for X ~ Binomial(n, p), from log_p and log_q."""

    terms = [
        math.lgamma(n + 1) - math.lgamma(i + 1) - math.lgamma(n - i + 1)
        + i * log_p + (n - i) * log_q
        for i in range(k, n + 1)
    ]
    top = max(terms)
    return top + math.log(sum(math.exp(t - top) for t in terms))


@dataclass(frozen=True)
class ThrottledAttackResult:
    cells: int
    questions: int
    required_correct: int
    guesses_per_day: int
    days: int
    session_success_probability: float
    compromised_fraction: float
    passes: bool


def throttled_attack_success(
    cells: int,
    questions: int = 10,
    required_correct: int = 7,
    guesses_per_day: int = THROTTLED_GUESSES_PER_DAY,
    days: int = THROTTLED_DAYS,
) -> ThrottledAttackResult:
    """Expected fraction of accounts a throttled uniform guesser compromises.

    Per-session success is the Binomial(questions, 1/cells) upper tail at
    `required_correct`; over G = guesses_per_day * days independent
    sessions the compromised fraction is 1 - (1 - p)^G, evaluated via
    log1p/expm1 so sub-1e-20 results survive. `passes` is the comparison
    against the 1%-per-year criterion.
    """

    if min(cells, questions, guesses_per_day, days) < 1:
        raise ValueError("cells, questions, guesses_per_day, days must be positive")
    if required_correct < 0 or required_correct > questions:
        raise ValueError("required_correct must lie in 0..questions")

    if required_correct == 0 or cells == 1:
        p = 1.0
    else:
        log_p = -math.log(cells)
        log_q = math.log1p(-1.0 / cells)
        p = math.exp(_log_binomial_tail(questions, log_p, log_q, required_correct))

    attempts = guesses_per_day * days
    if p >= 1.0:
        fraction = 1.0
    else:
        fraction = -math.expm1(attempts * math.log1p(-p))
    return ThrottledAttackResult(
        cells=cells,
        questions=questions,
        required_correct=required_correct,
        guesses_per_day=guesses_per_day,
        days=days,
        session_success_probability=p,
        compromised_fraction=fraction,
        passes=fraction <= COMPROMISE_LIMIT,
    )


def compute_roc(records: Sequence[ResponseRecord]) -> RocCurve:
    """Sweep integer thresholds 0..10 over a response dataset.

    Requires at least one record of each subject kind. By construction
    tpr and fpr are non-increasing in t and both equal 1 at t = 0.
    """

    legit = [r.score for r in records if r.subject_kind == "legitimate"]
    adv = [r.score for r in records if r.subject_kind == "adversary"]
    if not legit or not adv:
        raise InsufficientDataError(
            f"need both subject kinds; got {len(legit)} legitimate, {len(adv)} adversary"
        )
    points = tuple(
        (
            t,
            sum(1 for s in legit if s >= t) / len(legit),
            sum(1 for s in adv if s >= t) / len(adv),
        )
        for t in range(SCORE_MAX + 1)
    )
    return RocCurve(points=points)


#: Benefit rows assigned by judgment rather than computation. Scored on the
#: usual scheme-comparison scale: "offers" / "almost" / "no".
STATIC_BENEFIT_ANNOTATIONS = {
    "memorywise_effortless": "no (episodic recall decays over days)",
    "nothing_to_carry": "almost (needs the enrolled phone's location history)",
    "easy_to_learn": "offers",
    "efficient_to_use": "no (multi-minute logins; 7-11 day enrollment)",
    "infrequent_errors": "no (about half of questions answered correctly)",
    "accessible": "offers",
    "negligible_cost_per_user": "offers",
    "resilient_to_physical_observation": "offers (challenges change per session)",
    "resilient_to_unthrottled_guessing": "offers (large key space)",
    "resilient_to_leaks_from_other_verifiers": "offers (nothing shared across verifiers)",
}


@dataclass(frozen=True)
class CriteriaReport:
    """Security criteria combined into one machine-readable assessment."""

    throttled: ThrottledAttackResult
    known_adversary_fpr: float
    threshold: int
    resilient_to_throttled_guessing: bool
    resilient_to_known_adversary: bool
    resilient_to_phishing: bool
    phishing_rationale: str
    annotations: dict

    def to_dict(self) -> dict:
        return {
            "resilient_to_throttled_guessing": "PASS" if self.resilient_to_throttled_guessing else "FAIL",
            "throttled_compromised_fraction": self.throttled.compromised_fraction,
            "resilient_to_known_adversary": "PASS" if self.resilient_to_known_adversary else "FAIL",
            "known_adversary_fpr_at_threshold": self.known_adversary_fpr,
            "operating_threshold": self.threshold,
            "resilient_to_phishing": "PASS" if self.resilient_to_phishing else "FAIL",
            "phishing_rationale": self.phishing_rationale,
            "annotations": dict(self.annotations),
        }

    def render(self) -> str:
        """One criterion per line, key: value."""

        d = self.to_dict()
        lines = [
            f"resilient_to_throttled_guessing: {d['resilient_to_throttled_guessing']}",
            f"throttled_compromised_fraction: {d['throttled_compromised_fraction']:.3e}",
            f"resilient_to_known_adversary: {d['resilient_to_known_adversary']}",
            f"known_adversary_fpr_at_threshold: {d['known_adversary_fpr_at_threshold']:.4f}",
            f"operating_threshold: {d['operating_threshold']}",
            f"resilient_to_phishing: {d['resilient_to_phishing']}",
            f"phishing_rationale: {d['phishing_rationale']}",
        ]
        lines += [f"annotation_{k}: {v}" for k, v in self.annotations.items()]
        return "\n".join(lines) + "\n"


PHISHING_RATIONALE = (
    "challenges are single-use and time-varying; a fraudulent prompt cannot "
    "predict which location questions the verifier will ask next"
)


def criteria_report(
    estimate: KeySpaceEstimate,
    roc: RocCurve,
    threshold: int = 7,
    guesses_per_day: int = THROTTLED_GUESSES_PER_DAY,
    days: int = THROTTLED_DAYS,
) -> CriteriaReport:
    """Assess the three computed criteria at the operating threshold.

    Known-adversary resilience reuses the 1%-per-year bar: the adversary
    accept rate (fpr) at the operating threshold must not exceed 1%.
    """

    throttled = throttled_attack_success(
        cells=estimate.cells,
        questions=estimate.questions,
        required_correct=estimate.required_correct,
        guesses_per_day=guesses_per_day,
        days=days,
    )
    _, fpr = roc.at(threshold)
    return CriteriaReport(
        throttled=throttled,
        known_adversary_fpr=fpr,
        threshold=threshold,
        resilient_to_throttled_guessing=throttled.passes,
        resilient_to_known_adversary=fpr <= COMPROMISE_LIMIT,
        resilient_to_phishing=True,
        phishing_rationale=PHISHING_RATIONALE,
        annotations=dict(STATIC_BENEFIT_ANNOTATIONS),
    )


RECORDS_CSV_HEADER = "subject_kind,score"


def records_to_csv(records: Iterable[ResponseRecord]) -> str:
    lines = [RECORDS_CSV_HEADER]
    lines += [f"{r.subject_kind},{r.score}" for r in records]
    return "\n".join(lines) + "\n"


def records_from_csv(text: str) -> list[ResponseRecord]:
    reader = csv.DictReader(io.StringIO(text))
    out = []
    for row in reader:
        out.append(ResponseRecord(row["subject_kind"].strip(), int(row["score"])))
    return out


def roc_to_csv(roc: RocCurve) -> str:
    lines = ["threshold,tpr,fpr"]
    lines += [f"{t},{tpr:.6f},{fpr:.6f}" for t, tpr, fpr in roc.points]
    return "\n".join(lines) + "\n"
