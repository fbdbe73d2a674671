from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence


class PartitionError(ValueError):
    pass


@dataclass(frozen=True)
class GroupPartition:
    """Disjoint groups ``Γ_1..Γ_g`` plus the conditioned set ``Γ^C`` (0-based indices)."""

    groups: tuple[tuple[int, ...], ...]
    conditioned: tuple[int, ...] = ()

    @classmethod
    def make(cls, groups: Iterable[Sequence[int]], conditioned: Sequence[int] = ()) -> "GroupPartition":
        return cls(tuple(tuple(int(i) for i in g) for g in groups), tuple(int(i) for i in conditioned))

    @classmethod
    def trivial(cls, k: int) -> "GroupPartition":
        return cls((), tuple(range(k)))

    @property
    def size(self) -> int:
        return sum(len(g) for g in self.groups) + len(self.conditioned)

    def validate(self, k: int) -> None:
        seen = [i for g in self.groups for i in g] + list(self.conditioned)
        if any(len(g) == 0 for g in self.groups):
            raise PartitionError("empty group")
        if len(seen) != len(set(seen)):
            raise PartitionError("groups overlap")
        if sorted(seen) != list(range(k)):
            raise PartitionError(f"partition does not cover 0..{k - 1}")

    def exponent(self) -> int:
        return len(self.conditioned) + max((len(g) for g in self.groups), default=0)

    def ordering(self) -> list[int]:
        """Column order (Γ_1, ..., Γ_g, Γ^C)."""
        return [i for g in self.groups for i in g] + list(self.conditioned)

    def to_dict(self) -> dict:
        return {"groups": [list(g) for g in self.groups], "conditioned": list(self.conditioned)}

    @classmethod
    def from_dict(cls, d: dict) -> "GroupPartition":
        try:
            return cls.make(d["groups"], d.get("conditioned", ()))
        except (KeyError, TypeError) as exc:
            raise PartitionError(f"malformed partition: {d!r}") from exc
