"""Domain types for the decision process and the binned one-hot feature basis.

A user's situation at a decision moment is a 12-feature state vector (see
``FEATURE_NAMES``). Continuous features are discretized into four ordered bins;
categorical features map their codes onto the same four indicator slots, so the
basis has a uniform layout: 4 actions x 12 features x 4 slots = 192 entries,
with exactly one indicator set per feature inside the chosen action's block.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

MORNING, AFTERNOON, EVENING = 0, 1, 2
DAY_PARTS = (MORNING, AFTERNOON, EVENING)
DAY_PART_NAMES = {MORNING: "morning", AFTERNOON: "afternoon", EVENING: "evening"}

NO_MESSAGE, ENCOURAGING, INFORMING, AFFIRMING = 0, 1, 2, 3
ACTIONS = (NO_MESSAGE, ENCOURAGING, INFORMING, AFFIRMING)
ACTION_NAMES = {
    NO_MESSAGE: "no_message",
    ENCOURAGING: "encouraging",
    INFORMING: "informing",
    AFFIRMING: "affirming",
}

RATING_MIN, RATING_MAX = 1, 7
LOW_RATINGS = (1, 2)
MEDIUM_RATINGS = (3, 4, 5)
HIGH_RATINGS = (6, 7)

FEATURE_NAMES = (
    "day_part",
    "number_rating",
    "highest_rating",
    "lowest_rating",
    "median_rating",
    "sd_rating",
    "number_low_rating",
    "number_medium_rating",
    "number_high_rating",
    "number_message_received",
    "number_message_read",
    "read_all_message",
)
N_FEATURES = len(FEATURE_NAMES)
BINS_PER_FEATURE = 4
N_ACTIONS = len(ACTIONS)
BLOCK_SIZE = N_FEATURES * BINS_PER_FEATURE
BASIS_DIM = N_ACTIONS * BLOCK_SIZE


class ConfigurationError(ValueError):
    """A configured value breaks a documented precondition."""


class ContractViolation(ValueError):
    """Caller passed data that breaks an operation's contract."""


def rating_band(value: int) -> str:
    if value in LOW_RATINGS:
        return "low"
    if value in MEDIUM_RATINGS:
        return "medium"
    return "high"


@dataclass(frozen=True)
class StateVector:
    """Snapshot of a user at one decision moment.

    Day-scoped features cover the current day up to the decision time and reset
    at midnight; ``number_rating`` is cumulative over the whole deployment.
    ``highest/lowest/median/sd`` are 0 when no rating was entered today.
    """

    day_part: int
    number_rating: int
    highest_rating: int
    lowest_rating: int
    median_rating: float
    sd_rating: float
    number_low_rating: int
    number_medium_rating: int
    number_high_rating: int
    number_message_received: int
    number_message_read: int
    read_all_message: int

    def __post_init__(self):
        if self.day_part not in DAY_PARTS:
            raise ContractViolation(f"day_part must be 0, 1 or 2, got {self.day_part}")
        for name in (
            "number_rating",
            "number_low_rating",
            "number_medium_rating",
            "number_high_rating",
            "number_message_received",
            "number_message_read",
        ):
            if getattr(self, name) < 0:
                raise ContractViolation(f"{name} must be >= 0")
        today = self.ratings_today
        if self.number_rating < today:
            raise ContractViolation(
                "cumulative number_rating cannot be below today's band counts"
            )
        if self.number_message_read > self.number_message_received:
            raise ContractViolation("read count cannot exceed received count")
        expect_all = int(
            self.number_message_received > 0
            and self.number_message_read == self.number_message_received
        )
        if self.read_all_message != expect_all:
            raise ContractViolation(
                "read_all_message must be 1 iff all of today's messages were read"
            )
        if today > 0:
            if not (
                RATING_MIN
                <= self.lowest_rating
                <= self.median_rating
                <= self.highest_rating
                <= RATING_MAX
            ):
                raise ContractViolation(
                    "rating statistics must satisfy lowest <= median <= highest"
                )
            if self.sd_rating < 0:
                raise ContractViolation("sd_rating must be >= 0")
        else:
            if (
                self.highest_rating != 0
                or self.lowest_rating != 0
                or self.median_rating != 0
                or self.sd_rating != 0
            ):
                raise ContractViolation(
                    "rating statistics must be 0 when no rating was entered today"
                )

    @property
    def ratings_today(self) -> int:
        return (
            self.number_low_rating
            + self.number_medium_rating
            + self.number_high_rating
        )

    def as_features(self) -> tuple[float, ...]:
        """Feature values in canonical ``FEATURE_NAMES`` order."""
        return (
            float(self.day_part),
            float(self.number_rating),
            float(self.highest_rating),
            float(self.lowest_rating),
            float(self.median_rating),
            float(self.sd_rating),
            float(self.number_low_rating),
            float(self.number_medium_rating),
            float(self.number_high_rating),
            float(self.number_message_received),
            float(self.number_message_read),
            float(self.read_all_message),
        )

    def to_dict(self) -> dict:
        return {name: getattr(self, name) for name in FEATURE_NAMES}

    @classmethod
    def from_dict(cls, d: dict) -> "StateVector":
        return cls(**{name: d[name] for name in FEATURE_NAMES})

    @classmethod
    def empty(cls, day_part: int, number_rating: int = 0) -> "StateVector":
        """State of a user with no activity today."""
        return cls(
            day_part=day_part,
            number_rating=number_rating,
            highest_rating=0,
            lowest_rating=0,
            median_rating=0.0,
            sd_rating=0.0,
            number_low_rating=0,
            number_medium_rating=0,
            number_high_rating=0,
            number_message_received=0,
            number_message_read=0,
            read_all_message=0,
        )


@dataclass(frozen=True)
class Experience:
    """One <s, a, r, s'> transition of one user."""

    user_id: str
    s: StateVector
    a: int
    r: float
    s_prime: StateVector
    day_index: int
    day_part: int

    def __post_init__(self):
        if self.a not in ACTIONS:
            raise ContractViolation(f"action must be in 0..3, got {self.a}")
        if not math.isfinite(self.r):
            raise ContractViolation("reward must be finite")
        if self.day_index < 0:
            raise ContractViolation("day_index must be >= 0")
        if self.day_part != self.s.day_part:
            raise ContractViolation("experience day_part must match its state")
        follows = (
            self.s_prime.day_part == self.s.day_part + 1
            or (self.s.day_part == EVENING and self.s_prime.day_part == MORNING)
        )
        if not follows:
            raise ContractViolation("s_prime must be the next daypart after s")


@dataclass
class Trace:
    """A user's per-day (state, reward) sequences, actions excluded."""

    user_id: str
    days: dict[int, list[tuple[StateVector, float]]] = field(default_factory=dict)

    def __post_init__(self):
        for day, entries in self.days.items():
            if len(entries) > len(DAY_PARTS):
                raise ContractViolation(f"day {day} holds more than 3 entries")
            parts = [s.day_part for s, _ in entries]
            if parts != sorted(parts) or len(set(parts)) != len(parts):
                raise ContractViolation(f"day {day} entries must be ordered by daypart")

    def append(self, day: int, state: StateVector, reward: float) -> None:
        entries = self.days.setdefault(day, [])
        if entries and entries[-1][0].day_part >= state.day_part:
            raise ContractViolation("entries must arrive in daypart order")
        if len(entries) >= len(DAY_PARTS):
            raise ContractViolation("a day holds at most 3 entries")
        entries.append((state, reward))

    @property
    def day_indices(self) -> list[int]:
        return sorted(self.days)


class Dataset:
    """Append-only batch of experiences with a per-user index.

    Experiences of inactive users are included on purpose; dormancy is part of
    the behaviour the policies must learn about.
    """

    def __init__(self, experiences: list[Experience] | None = None):
        self._experiences: list[Experience] = []
        self._by_user: dict[str, list[int]] = {}
        for e in experiences or []:
            self.add(e)

    def add(self, e: Experience) -> None:
        self._by_user.setdefault(e.user_id, []).append(len(self._experiences))
        self._experiences.append(e)

    def extend(self, experiences: list[Experience]) -> None:
        for e in experiences:
            self.add(e)

    @property
    def experiences(self) -> list[Experience]:
        return list(self._experiences)

    def for_user(self, user_id: str) -> list[Experience]:
        return [self._experiences[i] for i in self._by_user.get(user_id, [])]

    def users(self) -> list[str]:
        return sorted(self._by_user)

    def subset(self, user_ids) -> "Dataset":
        wanted = set(user_ids)
        return Dataset([e for e in self._experiences if e.user_id in wanted])

    def __len__(self) -> int:
        return len(self._experiences)

    def __iter__(self):
        return iter(self._experiences)


def bin_index(value: float, cuts: tuple[float, float, float]) -> int:
    """Half-open binning: [-inf,c1), [c1,c2), [c2,c3), [c3,inf).

    Returns the count of cut points <= value.
    """
    if not (cuts[0] < cuts[1] < cuts[2]):
        raise ConfigurationError(f"cut points must be strictly increasing: {cuts}")
    return sum(1 for c in cuts if c <= value)


# Default cut points. The four-bin discretization is fixed; the boundaries are
# a deployment choice, kept stable across retraining batches so learned weights
# stay comparable. Counts split {0,1,2,3+}; rating values split the 1..7 scale
# at 2/4/6 (aligned with the low/medium/high bands); rating spread splits at
# 0.5/1.0/2.0.
COUNT_CUTS = (1.0, 2.0, 3.0)
RATING_VALUE_CUTS = (2.0, 4.0, 6.0)
SD_CUTS = (0.5, 1.0, 2.0)

_DEFAULT_FEATURES: dict[str, tuple | int] = {
    "day_part": 3,
    "number_rating": COUNT_CUTS,
    "highest_rating": RATING_VALUE_CUTS,
    "lowest_rating": RATING_VALUE_CUTS,
    "median_rating": RATING_VALUE_CUTS,
    "sd_rating": SD_CUTS,
    "number_low_rating": COUNT_CUTS,
    "number_medium_rating": COUNT_CUTS,
    "number_high_rating": COUNT_CUTS,
    "number_message_received": COUNT_CUTS,
    "number_message_read": COUNT_CUTS,
    "read_all_message": 2,
}


@dataclass(frozen=True)
class BinningScheme:
    """Maps each feature to one of four indicator slots.

    Continuous features carry three strictly increasing cut points; categorical
    features (``day_part``, ``read_all_message``) map their discrete codes
    directly onto slots, leaving the surplus slots always zero so the basis
    layout stays uniform.
    """

    cuts: dict[str, tuple[float, float, float]]
    categorical: dict[str, int]

    def __post_init__(self):
        covered = set(self.cuts) | set(self.categorical)
        if covered != set(FEATURE_NAMES):
            missing = set(FEATURE_NAMES) - covered
            extra = covered - set(FEATURE_NAMES)
            raise ConfigurationError(
                f"scheme must cover exactly the 12 features (missing={sorted(missing)}, "
                f"unknown={sorted(extra)})"
            )
        for name, cuts in self.cuts.items():
            if len(cuts) != 3 or not (cuts[0] < cuts[1] < cuts[2]):
                raise ConfigurationError(
                    f"{name}: need 3 strictly increasing cut points, got {cuts}"
                )
        for name, n in self.categorical.items():
            if not 1 <= n <= BINS_PER_FEATURE:
                raise ConfigurationError(
                    f"{name}: categorical cardinality must be 1..4, got {n}"
                )

    @classmethod
    def default(cls) -> "BinningScheme":
        cuts = {}
        categorical = {}
        for name, spec in _DEFAULT_FEATURES.items():
            if isinstance(spec, int):
                categorical[name] = spec
            else:
                cuts[name] = spec
        return cls(cuts=cuts, categorical=categorical)

    def feature_bin(self, name: str, value: float) -> int:
        if name in self.categorical:
            code = int(value)
            if not 0 <= code < self.categorical[name]:
                raise ContractViolation(
                    f"{name}: code {code} outside 0..{self.categorical[name] - 1}"
                )
            return code
        return bin_index(value, self.cuts[name])

    def pattern(self, s: StateVector) -> tuple[int, ...]:
        """Per-feature slot ids inside a 48-wide action block."""
        values = s.as_features()
        return tuple(
            i * BINS_PER_FEATURE + self.feature_bin(name, values[i])
            for i, name in enumerate(FEATURE_NAMES)
        )

    def to_dict(self) -> dict:
        return {
            "cuts": {k: list(v) for k, v in sorted(self.cuts.items())},
            "categorical": dict(sorted(self.categorical.items())),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "BinningScheme":
        return cls(
            cuts={k: tuple(v) for k, v in d["cuts"].items()},
            categorical=dict(d["categorical"]),
        )


def active_indices(s: StateVector, a: int, scheme: BinningScheme) -> np.ndarray:
    """The 12 basis slots that are 1 for (s, a)."""
    if a not in ACTIONS:
        raise ContractViolation(f"action must be in 0..3, got {a}")
    offset = a * BLOCK_SIZE
    return np.asarray([offset + p for p in scheme.pattern(s)], dtype=np.int64)


def basis(s: StateVector, a: int, scheme: BinningScheme) -> np.ndarray:
    """Dense block one-hot basis vector of length 192.

    The block for action ``a`` holds the binned encoding of ``s`` (one
    indicator per feature); the other three blocks are all zero.
    """
    phi = np.zeros(BASIS_DIM)
    phi[active_indices(s, a, scheme)] = 1.0
    return phi
