"""The eight risk-factor domain labels and their fixed ordering.

The seven non-Other domains index classifier outputs 0..6 in the order
listed below; Other is the open-world rejection label and is never a
training target.
"""

from __future__ import annotations

import enum

from .errors import DataError


class Domain(enum.Enum):
    APPEARANCE = "Appearance"
    THOUGHT_CONTENT = "ThoughtContent"
    INTERPERSONAL = "Interpersonal"
    MOOD = "Mood"
    OCCUPATION = "Occupation"
    THOUGHT_PROCESS = "ThoughtProcess"
    SUBSTANCE = "Substance"
    OTHER = "Other"

    def __str__(self) -> str:
        return self.value


# Classifier output index order. Frozen: changing it invalidates saved bundles.
CLASSIFIED_DOMAINS: tuple[Domain, ...] = (
    Domain.APPEARANCE,
    Domain.THOUGHT_CONTENT,
    Domain.INTERPERSONAL,
    Domain.MOOD,
    Domain.OCCUPATION,
    Domain.THOUGHT_PROCESS,
    Domain.SUBSTANCE,
)

ALL_DOMAINS: tuple[Domain, ...] = CLASSIFIED_DOMAINS + (Domain.OTHER,)

DOMAIN_INDEX: dict[Domain, int] = {d: i for i, d in enumerate(CLASSIFIED_DOMAINS)}

N_CLASSIFIED = len(CLASSIFIED_DOMAINS)


def domain_from_name(name: str) -> Domain:
    """Look up a domain by its wire name (e.g. "ThoughtContent")."""
    for d in Domain:
        if d.value == name:
            return d
    raise DataError(f"unknown domain name: {name!r}")
