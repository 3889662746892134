"""Paragraph corpora, the clinician lexicon, weak labeling and megadocuments.

Also houses the deterministic synthetic corpus generator that stands in for
the restricted clinical data at desk scale, and the JSON-lines file formats
shared by the CLI:

  paragraphs:  one object per line, fields id, text, source
  gold:        one object per line, fields id, labels (ordered domain names)
  lexicon:     a JSON object mapping domain name -> {keywords, keyphrases},
               keyphrases as space-separated words
"""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path

import random

from .domains import ALL_DOMAINS, CLASSIFIED_DOMAINS, Domain, domain_from_name
from .errors import ConfigError, DataError
from .textnorm import MwePhrase, text_to_terms, tokenize


@dataclass(frozen=True)
class Paragraph:
    id: str
    text: str
    source: str = "training"

    def __post_init__(self):
        if not self.text:
            raise DataError(f"paragraph {self.id!r} has empty text")


@dataclass(frozen=True)
class AnnotatedParagraph:
    """A paragraph with its ordered gold domain labels."""

    paragraph: Paragraph
    labels: tuple[Domain, ...]

    def __post_init__(self):
        validate_labels(self.paragraph.id, self.labels)


def validate_labels(owner_id: str, labels: tuple[Domain, ...]) -> None:
    if not labels:
        raise DataError(f"{owner_id}: label list is empty")
    if len(set(labels)) != len(labels):
        raise DataError(f"{owner_id}: duplicate labels {labels}")
    if Domain.OTHER in labels and len(labels) > 1:
        raise DataError(f"{owner_id}: Other must be the sole label, got {labels}")


class KeywordLexicon:
    """Per-domain keywords (single words) and keyphrases (MWEs)."""

    def __init__(self, entries: dict[Domain, tuple[list[str], list[MwePhrase]]]):
        self.keywords: dict[Domain, list[str]] = {}
        self.keyphrases: dict[Domain, list[MwePhrase]] = {}
        for domain in CLASSIFIED_DOMAINS:
            kws, phrases = entries.get(domain, ([], []))
            for w in kws:
                if not w or w != w.lower():
                    raise ConfigError(f"lexicon keyword not lowercase: {w!r}")
            if len(set(kws)) != len(kws):
                raise ConfigError(f"duplicate keywords for {domain}")
            seqs = [p.words for p in phrases]
            if len(set(seqs)) != len(seqs):
                raise ConfigError(f"duplicate keyphrases for {domain}")
            for p in phrases:
                if any(w != w.lower() for w in p.words):
                    raise ConfigError(f"lexicon keyphrase not lowercase: {p.words}")
            self.keywords[domain] = list(kws)
            self.keyphrases[domain] = list(phrases)

    def require_nonempty(self) -> None:
        for domain in CLASSIFIED_DOMAINS:
            if not self.keywords[domain] and not self.keyphrases[domain]:
                raise ConfigError(f"lexicon has no entries for domain {domain}")

    def all_phrases(self) -> list[MwePhrase]:
        out: list[MwePhrase] = []
        for domain in CLASSIFIED_DOMAINS:
            out.extend(self.keyphrases[domain])
        return out

    def without_keyphrases(self) -> "KeywordLexicon":
        """Keyword-only copy, used by the MWE ablation arm."""
        return KeywordLexicon(
            {d: (list(self.keywords[d]), []) for d in CLASSIFIED_DOMAINS}
        )


@dataclass
class TrainingCorpus:
    """Weakly-labeled paragraphs; each carries exactly one non-Other domain."""

    entries: list[tuple[Paragraph, Domain]]

    def by_domain(self) -> dict[Domain, list[Paragraph]]:
        out: dict[Domain, list[Paragraph]] = {d: [] for d in CLASSIFIED_DOMAINS}
        for paragraph, domain in self.entries:
            out[domain].append(paragraph)
        return out

    def __len__(self) -> int:
        return len(self.entries)


@dataclass
class Megadocument:
    domain: Domain
    paragraph_ids: list[str]
    terms: Counter


def _count_phrase(words: list[str], phrase: tuple[str, ...]) -> int:
    """Non-overlapping left-to-right occurrence count of a word sequence."""
    n, m = len(words), len(phrase)
    count = 0
    i = 0
    while i + m <= n:
        if tuple(words[i : i + m]) == phrase:
            count += 1
            i += m
        else:
            i += 1
    return count


def lexicon_hits(words: list[str], lexicon: KeywordLexicon) -> dict[Domain, int]:
    """Keyword plus keyphrase occurrence counts per domain, pre-stemming."""
    hits: dict[Domain, int] = {}
    for domain in CLASSIFIED_DOMAINS:
        kwset = set(lexicon.keywords[domain])
        n = sum(1 for w in words if w in kwset)
        for phrase in lexicon.keyphrases[domain]:
            n += _count_phrase(words, phrase.words)
        hits[domain] = n
    return hits


def weak_label(paragraphs: list[Paragraph], lexicon: KeywordLexicon) -> TrainingCorpus:
    """Assign each paragraph to the domain with the unique largest hit count.

    Paragraphs with no hits, or with a tie at the top, are excluded. The
    decision is per paragraph, so the result is order-invariant.
    """
    lexicon.require_nonempty()
    entries: list[tuple[Paragraph, Domain]] = []
    for paragraph in paragraphs:
        hits = lexicon_hits(tokenize(paragraph.text), lexicon)
        best = max(hits.values())
        if best == 0:
            continue
        winners = [d for d in CLASSIFIED_DOMAINS if hits[d] == best]
        if len(winners) != 1:
            continue
        entries.append((paragraph, winners[0]))
    return TrainingCorpus(entries)


def build_megadocuments(
    corpus: TrainingCorpus, phrases: list[MwePhrase]
) -> dict[Domain, Megadocument]:
    """Aggregate each domain's paragraphs into one term multiset."""
    grouped = corpus.by_domain()
    out: dict[Domain, Megadocument] = {}
    for domain in CLASSIFIED_DOMAINS:
        group = grouped[domain]
        if not group:
            raise DataError(f"no training paragraphs for domain {domain}")
        terms: Counter = Counter()
        for paragraph in group:
            terms.update(text_to_terms(paragraph.text, phrases))
        out[domain] = Megadocument(
            domain=domain,
            paragraph_ids=[p.id for p in group],
            terms=terms,
        )
    return out


# ---------------------------------------------------------------------------
# Synthetic corpus generation
# ---------------------------------------------------------------------------

@dataclass
class SyntheticConfig:
    """Vocabulary pools and counts for the deterministic synthetic corpus.

    domain_words holds the full per-domain pool; the first n_keywords of
    each pool form the lexicon keywords, the rest are non-keyword content
    words. Phrase constituents must come from the shared noise pool so that
    fusing them is genuinely informative.
    """

    domain_words: dict[Domain, tuple[str, ...]]
    domain_phrases: dict[Domain, tuple[tuple[str, ...], ...]]
    noise_words: tuple[str, ...]
    n_keywords: int = 6
    paragraphs_per_domain: int = 200
    multilabel_per_domain: int = 30
    other_paragraphs: int = 100
    min_words: int = 16
    max_words: int = 26
    mwe_rich_fraction: float = 0.5

    def validate(self) -> None:
        if self.paragraphs_per_domain < 1:
            raise ConfigError("paragraphs_per_domain must be >= 1")
        if not (0 <= self.multilabel_per_domain <= self.paragraphs_per_domain):
            raise ConfigError("multilabel_per_domain out of range")
        if self.other_paragraphs < 0:
            raise ConfigError("other_paragraphs must be >= 0")
        if not self.noise_words:
            raise ConfigError("noise pool is empty")
        noise = set(self.noise_words)
        seen: dict[str, Domain] = {}
        for domain in CLASSIFIED_DOMAINS:
            pool = self.domain_words.get(domain, ())
            if not pool:
                raise ConfigError(f"empty word pool for domain {domain}")
            if len(pool) < self.n_keywords:
                raise ConfigError(f"pool for {domain} smaller than n_keywords")
            for w in pool:
                if w in noise:
                    raise ConfigError(f"{w!r} is in both {domain} pool and noise pool")
                if w in seen:
                    raise ConfigError(f"{w!r} is in both {seen[w]} and {domain} pools")
                seen[w] = domain
            for phrase in self.domain_phrases.get(domain, ()):
                if len(phrase) < 2:
                    raise ConfigError(f"phrase too short: {phrase}")
                for w in phrase:
                    if w not in noise:
                        raise ConfigError(
                            f"phrase word {w!r} of {domain} not in noise pool"
                        )

    def keywords(self, domain: Domain) -> tuple[str, ...]:
        return self.domain_words[domain][: self.n_keywords]

    def extras(self, domain: Domain) -> tuple[str, ...]:
        return self.domain_words[domain][self.n_keywords :]

    def lexicon(self) -> KeywordLexicon:
        return KeywordLexicon(
            {
                d: (
                    list(self.keywords(d)),
                    [MwePhrase(words=p, domain=d.value) for p in self.domain_phrases[d]],
                )
                for d in CLASSIFIED_DOMAINS
            }
        )


_DEFAULT_POOLS: dict[Domain, tuple[str, ...]] = {
    Domain.APPEARANCE: (
        "disheveled", "groomed", "unkempt", "hygiene", "attire", "gaunt",
        "slender", "posture", "mannerisms", "makeup", "tattoos", "grooming",
    ),
    Domain.THOUGHT_CONTENT: (
        "delusion", "hallucination", "paranoid", "obsession", "suicidal",
        "grandiose", "ideation", "phobia", "intrusive", "persecutory",
        "nihilistic", "delusional",
    ),
    Domain.INTERPERSONAL: (
        "boyfriend", "girlfriend", "roommate", "peers", "sibling", "marriage",
        "friendship", "parents", "divorce", "stepfather", "coworkers", "breakup",
    ),
    Domain.MOOD: (
        "anxious", "depressed", "euthymic", "irritable", "labile", "dysphoric",
        "tearful", "elated", "hopeless", "despondent", "cheerful", "apathetic",
    ),
    Domain.OCCUPATION: (
        "job", "school", "employment", "homework", "workplace", "semester",
        "internship", "coursework", "salary", "supervisor", "tuition", "career",
    ),
    Domain.THOUGHT_PROCESS: (
        "tangential", "circumstantial", "perseverative", "incoherent",
        "disorganized", "derailment", "coherent", "blocking", "linear",
        "loosening", "racing", "logical",
    ),
    Domain.SUBSTANCE: (
        "marijuana", "cocaine", "alcohol", "heroin", "opioid", "intoxicated",
        "cannabis", "sobriety", "relapse", "withdrawal", "benzodiazepine",
        "stimulant",
    ),
}

_DEFAULT_PHRASES: dict[Domain, tuple[tuple[str, ...], ...]] = {
    Domain.APPEARANCE: (("eye", "contact"), ("put", "together"), ("self", "care")),
    Domain.THOUGHT_CONTENT: (
        ("hearing", "things"),
        ("body", "image"),
        ("special", "powers"),
    ),
    Domain.INTERPERSONAL: (
        ("support", "system"),
        ("living", "situation"),
        ("social", "circle"),
    ),
    Domain.MOOD: (("really", "great"), ("feeling", "down"), ("low", "spirits")),
    Domain.OCCUPATION: (("work", "performance"), ("day", "program"), ("time", "off")),
    Domain.THOUGHT_PROCESS: (
        ("goal", "directed"),
        ("word", "salad"),
        ("train", "of", "thought"),
    ),
    Domain.SUBSTANCE: (("heavy", "use"), ("hard", "stuff"), ("getting", "high")),
}

_PHRASE_CONSTITUENTS = tuple(
    sorted({w for phrases in _DEFAULT_PHRASES.values() for p in phrases for w in p})
)

_DEFAULT_NOISE = _PHRASE_CONSTITUENTS + (
    "patient", "reports", "states", "denies", "today", "visit", "session",
    "week", "month", "plan", "continues", "remains", "appears", "noted",
    "discussed", "reviewed", "follow", "clinic", "morning", "afternoon",
    "meeting", "spoke", "arrived", "scheduled", "returned", "described",
    "mentioned", "overall", "recent", "ongoing", "stable", "unchanged",
    "baseline", "status", "progress", "intake", "routine", "further",
    "current", "previous", "record", "note", "assessment", "interview",
    "team", "staff", "provider", "clinician", "hospital", "unit", "group",
    "history", "pattern", "level", "concern", "since", "during", "again",
    "also", "often",
)


def default_synthetic_config(
    paragraphs_per_domain: int = 200,
    multilabel_per_domain: int = 30,
    other_paragraphs: int = 100,
) -> SyntheticConfig:
    return SyntheticConfig(
        domain_words=dict(_DEFAULT_POOLS),
        domain_phrases=dict(_DEFAULT_PHRASES),
        noise_words=_DEFAULT_NOISE,
        paragraphs_per_domain=paragraphs_per_domain,
        multilabel_per_domain=multilabel_per_domain,
        other_paragraphs=other_paragraphs,
    )


def _find_foreign_phrase(
    words: list[str],
    config: SyntheticConfig,
    allowed: set[Domain],
) -> tuple[str, ...] | None:
    """First accidental occurrence of another domain's phrase, if any."""
    for domain in CLASSIFIED_DOMAINS:
        if domain in allowed:
            continue
        for phrase in config.domain_phrases.get(domain, ()):
            if _count_phrase(words, phrase) > 0:
                return phrase
    return None


def _to_text(words: list[str], rng: random.Random) -> str:
    """Join words into sentence-like chunks; punctuation is cosmetic only."""
    sentences = []
    i = 0
    while i < len(words):
        n = rng.randint(6, 12)
        chunk = words[i : i + n]
        i += n
        sentences.append(" ".join(chunk).capitalize() + ".")
    return " ".join(sentences)


def _assemble(
    units: list[tuple[str, ...]],
    total_words: int,
    rng: random.Random,
    config: SyntheticConfig,
    allowed: set[Domain],
) -> list[str]:
    """Shuffle content units into noise filler, rejecting accidental phrases."""
    for _ in range(100):
        content_len = sum(len(u) for u in units)
        n_noise = max(0, total_words - content_len)
        parts = list(units) + [(rng.choice(config.noise_words),) for _ in range(n_noise)]
        rng.shuffle(parts)
        words = [w for unit in parts for w in unit]
        if _find_foreign_phrase(words, config, allowed) is None:
            return words
    raise ConfigError(
        "could not assemble a paragraph without accidental foreign phrases; "
        "noise pool is too small relative to the phrase inventory"
    )


def generate_synthetic_corpus(
    config: SyntheticConfig, seed: int
) -> tuple[list[Paragraph], list[AnnotatedParagraph], KeywordLexicon]:
    """Deterministic synthetic paragraphs, gold labels, and the lexicon.

    Primary-label counts match the config exactly: paragraphs_per_domain
    paragraphs per domain (of which multilabel_per_domain carry a second
    domain), plus other_paragraphs of pure noise labeled Other. Roughly
    mwe_rich_fraction of the single-label paragraphs carry their domain
    signal through MWE phrases built from noise-pool words.
    """
    config.validate()
    rng = random.Random(seed)
    paragraphs: list[Paragraph] = []
    gold: list[AnnotatedParagraph] = []
    serial = 0

    def emit(words: list[str], labels: tuple[Domain, ...]) -> None:
        nonlocal serial
        paragraph = Paragraph(
            id=f"syn-{serial:05d}", text=_to_text(words, rng), source="synthetic"
        )
        paragraphs.append(paragraph)
        gold.append(AnnotatedParagraph(paragraph=paragraph, labels=labels))
        serial += 1

    for di, domain in enumerate(CLASSIFIED_DOMAINS):
        keywords = config.keywords(domain)
        extras = config.extras(domain) or keywords
        phrases = config.domain_phrases[domain]
        for i in range(config.paragraphs_per_domain):
            total = rng.randint(config.min_words, config.max_words)
            if i < config.multilabel_per_domain:
                other = CLASSIFIED_DOMAINS[
                    (di + 1 + i % (len(CLASSIFIED_DOMAINS) - 1)) % len(CLASSIFIED_DOMAINS)
                ]
                chosen = rng.sample(keywords, 3)
                units = [(w,) for w in chosen] + [(chosen[0],)]
                units.append((rng.choice(config.domain_words[domain]),))
                units.append(rng.choice(phrases))
                units.append((rng.choice(config.keywords(other)),))
                units.append(rng.choice(config.domain_phrases[other]))
                words = _assemble(units, total, rng, config, {domain, other})
                emit(words, (domain, other))
            elif rng.random() < config.mwe_rich_fraction:
                # MWE-rich: no lexicon keywords at all; the label is only
                # recoverable through the phrases (plus a few pool words).
                chosen = list(phrases) if len(phrases) <= 2 else rng.sample(phrases, 2)
                units = [tuple(p) for p in chosen]
                units.append(tuple(rng.choice(chosen)))
                picked = rng.sample(extras, min(2, len(extras)))
                units += [(w,) for w in picked] + [(picked[0],)]
                words = _assemble(units, total, rng, config, {domain})
                emit(words, (domain,))
            else:
                chosen = rng.sample(keywords, 4)
                units = [(w,) for w in chosen] + [(w,) for w in chosen[:2]]
                units += [(rng.choice(config.domain_words[domain]),) for _ in range(2)]
                if rng.random() < 0.3:
                    units.append(rng.choice(phrases))
                words = _assemble(units, total, rng, config, {domain})
                emit(words, (domain,))

    for _ in range(config.other_paragraphs):
        total = rng.randint(config.min_words, config.max_words)
        words = _assemble([], total, rng, config, set())
        emit(words, (Domain.OTHER,))

    return paragraphs, gold, config.lexicon()


# ---------------------------------------------------------------------------
# File formats
# ---------------------------------------------------------------------------

def write_paragraphs(path: str | Path, paragraphs: list[Paragraph]) -> None:
    with open(path, "w", encoding="utf-8") as f:
        for p in paragraphs:
            f.write(json.dumps({"id": p.id, "text": p.text, "source": p.source}) + "\n")


def load_paragraphs(path: str | Path) -> list[Paragraph]:
    paragraphs: list[Paragraph] = []
    seen: set[str] = set()
    for lineno, obj in _read_jsonl(path):
        try:
            paragraph = Paragraph(
                id=str(obj["id"]), text=obj["text"], source=obj.get("source", "training")
            )
        except KeyError as e:
            raise DataError(f"{path}:{lineno}: missing field {e}")
        if paragraph.id in seen:
            raise DataError(f"{path}:{lineno}: duplicate paragraph id {paragraph.id!r}")
        seen.add(paragraph.id)
        paragraphs.append(paragraph)
    return paragraphs


def write_gold(path: str | Path, gold: list[AnnotatedParagraph]) -> None:
    with open(path, "w", encoding="utf-8") as f:
        for g in gold:
            f.write(
                json.dumps(
                    {"id": g.paragraph.id, "labels": [d.value for d in g.labels]}
                )
                + "\n"
            )


def load_gold(path: str | Path) -> dict[str, list[Domain]]:
    """Ordered gold labels keyed by paragraph id."""
    gold: dict[str, list[Domain]] = {}
    for lineno, obj in _read_jsonl(path):
        try:
            pid = str(obj["id"])
            labels = tuple(domain_from_name(name) for name in obj["labels"])
        except KeyError as e:
            raise DataError(f"{path}:{lineno}: missing field {e}")
        if pid in gold:
            raise DataError(f"{path}:{lineno}: duplicate gold id {pid!r}")
        validate_labels(pid, labels)
        gold[pid] = list(labels)
    return gold


def write_lexicon(path: str | Path, lexicon: KeywordLexicon) -> None:
    obj = {
        d.value: {
            "keywords": lexicon.keywords[d],
            "keyphrases": [" ".join(p.words) for p in lexicon.keyphrases[d]],
        }
        for d in CLASSIFIED_DOMAINS
    }
    with open(path, "w", encoding="utf-8") as f:
        json.dump(obj, f, indent=2)
        f.write("\n")


def load_lexicon(path: str | Path) -> KeywordLexicon:
    try:
        with open(path, encoding="utf-8") as f:
            obj = json.load(f)
    except FileNotFoundError:
        raise DataError(f"lexicon file not found: {path}")
    except json.JSONDecodeError as e:
        raise DataError(f"{path}: invalid JSON: {e}")
    entries: dict[Domain, tuple[list[str], list[MwePhrase]]] = {}
    for name, spec in obj.items():
        domain = domain_from_name(name)
        if domain is Domain.OTHER:
            raise DataError(f"{path}: lexicon must not define entries for Other")
        phrases = [
            MwePhrase(words=tuple(s.split()), domain=name)
            for s in spec.get("keyphrases", [])
        ]
        entries[domain] = (list(spec.get("keywords", [])), phrases)
    return KeywordLexicon(entries)


def _read_jsonl(path: str | Path):
    try:
        f = open(path, encoding="utf-8")
    except FileNotFoundError:
        raise DataError(f"file not found: {path}")
    with f:
        for lineno, line in enumerate(f, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                yield lineno, json.loads(line)
            except json.JSONDecodeError as e:
                raise DataError(f"{path}:{lineno}: invalid JSON: {e}")
