"""Synthetic formal/informal corpus pairs for desk-scale transfer experiments.

A fixed template grammar over a closed, fictional vocabulary produces
clean "source" sentences; "target" sentences come from the same grammar
(plus a fourth entity type, OTHER) and then pass through a per-token
noise channel that lowercases, drops/swaps characters, or substitutes
slang. Labels stay aligned token-for-token because every noise operation
maps one token to one token.

Generation is deterministic per seed: numpy PCG64 streams seeded via
SeedSequence([seed, k]) with k = 0 (source), 1 (target clean),
2 (target noise).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .corpus import Corpus, LabelScheme, LabelSet, TaggedSentence
from .sampling import Domain

# -- closed vocabulary (all names fictional) --------------------------------

FIRST_NAMES = (
    "Alice", "Bram", "Carla", "Dario", "Elif", "Farid", "Greta", "Hanno",
    "Ines", "Jonas", "Katya", "Lior", "Mona", "Nils", "Odile", "Pavel",
    "Quinn", "Rosa", "Stellan", "Tamsin", "Ugo", "Vera", "Wim", "Xenia",
    "Yusuf", "Zelda", "Anouk", "Bastian",
)
LAST_NAMES = (
    "Okafor", "Jensen", "Marek", "Salo", "Varga", "Lindqvist", "Abara",
    "Costa", "Devlin", "Egede", "Fontaine", "Grieg", "Halvorsen", "Iqbal",
    "Joubert", "Kovacs", "Moreau", "Novak", "Oyelaran", "Petrov",
)
LOCATIONS = (
    ("Avondale",), ("Riverton",), ("Kestrel", "Bay"), ("Marsh", "Hollow"),
    ("Dunmore",), ("Eastvale",), ("Fennwick",), ("Graymoor",), ("Harlowe",),
    ("Larkspur",), ("Mistral", "Point"), ("Northgate",), ("Pellworth",),
    ("Quarry", "Flats"), ("Redfern",), ("Sablewood",), ("Tarrowmere",),
    ("Umberhill",), ("Vexford",), ("Westhollow",), ("Yarrow", "Glen"),
    ("Zephyr", "Cove"), ("Bromfield",), ("Caldermoor",), ("Selunda",),
    ("Tolbridge",),
)
ORGANIZATIONS = (
    ("Novatek",), ("Bluepine", "Labs"), ("Cindertech",), ("Draycorp",),
    ("Emberline",), ("Fairword", "Group"), ("Gildevane",), ("Hartwell", "Co"),
    ("Ironwood", "Partners"), ("Jardys",), ("Kolm", "Industries"),
    ("Lumenara",), ("Mossbank", "Trust"), ("Nerida", "Systems"),
    ("Opaline", "Works"), ("Quellane",), ("Rustbridge",),
    ("Silverthorn", "Media"), ("Tessellate", "Inc"), ("Veldt", "Union"),
    ("Wrenfold",), ("Yonder", "Collective"), ("Pyrelight",), ("Marrowgate",),
)
OTHERS = (
    ("Lanternfall",), ("Pebble", "Cup"), ("Quiet", "Marathon"),
    ("Sunspire", "Expo"), ("Harvest", "Sprint"), ("Nightbloom", "Gala"),
    ("Echo", "Prize"), ("Driftwood", "Fair"), ("Cloudline", "Summit"),
    ("Amber", "Run"), ("Frostwalk",), ("Gildergame",), ("Hollow", "Lantern"),
    ("Ivy", "Sessions"), ("Junewake",), ("Kitefall",), ("Lumen", "Parade"),
    ("Midsummer", "Loop"),
)
WEEKDAYS = ("monday", "tuesday", "wednesday", "thursday", "friday")

_INVENTORIES = {
    "LOC": LOCATIONS,
    "ORG": ORGANIZATIONS,
    "OTHER": OTHERS,
}

# Slang substitutions applied by the noise channel (closed list).
SLANG = {
    "you": "u", "tonight": "2nite", "tomorrow": "tmrw", "about": "abt",
    "people": "ppl", "before": "b4", "great": "gr8", "see": "c",
    "are": "r", "your": "ur", "really": "rly", "please": "plz",
    "with": "w/", "love": "luv", "night": "nite", "because": "bc",
    "thanks": "thx", "going": "goin", "what": "wat", "good": "gud",
    "week": "wk", "meeting": "mtg",
}

# Templates: literals interleaved with entity slots. A slot lists the
# entity types it may realize; source generation drops OTHER from the
# choices, target generation keeps it. Ambiguous slots force the tagger
# to rely on name identity rather than context alone.
_TEMPLATES = (
    (("PER",), "visited", ("LOC",), "on", "<day>", "."),
    (("PER",), "works", "with", ("ORG",), "in", ("LOC",), "."),
    (("ORG",), "hired", ("PER",), "on", "<day>", "last", "week", "."),
    (("PER",), "met", ("PER",), "near", ("LOC",), "tonight", "."),
    ("people", "from", ("ORG",), "are", "going", "to", ("LOC",), "."),
    (("PER", "ORG"), "announced", "a", "new", "deal", "tonight", "."),
    ("the", "trip", "to", ("LOC", "ORG"), "was", "really", "great", "."),
    ("everyone", "talked", "about", ("PER", "ORG", "OTHER"), "yesterday", "."),
    (("PER",), "wrote", "about", ("LOC", "OTHER"), "with", "love", "."),
    ("please", "see", ("PER", "ORG"), "before", ("LOC", "OTHER"), "opens", "."),
    ("your", "friends", "at", ("ORG", "LOC"), "say", "thanks", "."),
    (("PER",), "left", ("ORG",), "because", "of", "the", "night", "shift", "."),
    ("what", "a", "good", "crowd", "at", ("OTHER", "LOC"), "this", "week", "."),
    ("the", "report", "was", "really", "late", "again", "."),
    ("thanks", "for", "a", "great", "night", "you", "all", "."),
    (("PER",), "and", ("PER",), "love", ("LOC",), "in", "the", "morning", "."),
)


@dataclass(frozen=True)
class SynthConfig:
    source_sentences: int
    target_sentences: int
    noise_rate: float
    seed: int

    def __post_init__(self):
        if self.source_sentences < 10 or self.target_sentences < 10:
            raise ValueError("sentence counts must be >= 10")
        if not 0.0 <= self.noise_rate <= 0.5:
            raise ValueError(f"noise_rate must be in [0, 0.5], got {self.noise_rate}")


def _entity_tokens(etype: str, rng: np.random.Generator) -> tuple[str, ...]:
    if etype == "PER":
        first = FIRST_NAMES[rng.integers(len(FIRST_NAMES))]
        if rng.random() < 0.5:
            return (first, LAST_NAMES[rng.integers(len(LAST_NAMES))])
        return (first,)
    inventory = _INVENTORIES[etype]
    return inventory[rng.integers(len(inventory))]


def _realize(template, rng: np.random.Generator, allow_other: bool) -> TaggedSentence:
    tokens: list[str] = []
    labels: list[str] = []
    for item in template:
        if isinstance(item, str):
            word = WEEKDAYS[rng.integers(len(WEEKDAYS))] if item == "<day>" else item
            tokens.append(word)
            labels.append("O")
            continue
        choices = item if allow_other else tuple(t for t in item if t != "OTHER")
        etype = choices[rng.integers(len(choices))]
        span = _entity_tokens(etype, rng)
        tokens.extend(span)
        labels.append("B-" + etype)
        labels.extend("I-" + etype for _ in span[1:])
    return TaggedSentence(tuple(tokens), tuple(labels))


def _generate(n: int, rng: np.random.Generator, allow_other: bool) -> list[TaggedSentence]:
    return [
        _realize(_TEMPLATES[rng.integers(len(_TEMPLATES))], rng, allow_other)
        for _ in range(n)
    ]


def _corrupt_token(token: str, rng: np.random.Generator) -> str:
    """Return a changed surface form for one token (never the identity)."""
    if token.lower() != token:
        return token.lower()
    if token in SLANG:
        return SLANG[token]
    if len(token) >= 3:
        if rng.random() < 0.5:
            drop = 1 + int(rng.integers(len(token) - 2))
            return token[:drop] + token[drop + 1 :]
        for _ in range(4):
            pos = int(rng.integers(len(token) - 1))
            if token[pos] != token[pos + 1]:
                return token[:pos] + token[pos + 1] + token[pos] + token[pos + 2 :]
        return token[:-1]
    return token + token[-1]


def _apply_noise(
    sentences: list[TaggedSentence], rate: float, rng: np.random.Generator
) -> list[TaggedSentence]:
    if rate == 0.0:
        return sentences
    noisy = []
    for sent in sentences:
        tokens = tuple(
            _corrupt_token(tok, rng) if rng.random() < rate else tok
            for tok in sent.tokens
        )
        noisy.append(TaggedSentence(tokens, sent.labels))
    return noisy


_SOURCE_LABELS = ("O", "B-PER", "I-PER", "B-LOC", "I-LOC", "B-ORG", "I-ORG")
_TARGET_LABELS = _SOURCE_LABELS + ("B-OTHER", "I-OTHER")


def synth_transfer_pair(config: SynthConfig) -> tuple[Corpus, Corpus]:
    """Generate a clean source corpus and a noised target corpus.

    The source label set covers PER/LOC/ORG; the target additionally uses
    OTHER, so the two tasks have deliberately different label inventories.
    """

    def stream(k: int) -> np.random.Generator:
        return np.random.Generator(
            np.random.PCG64(np.random.SeedSequence([config.seed, k]))
        )

    source_sents = _generate(config.source_sentences, stream(0), allow_other=False)
    target_clean = _generate(config.target_sentences, stream(1), allow_other=True)
    target_sents = _apply_noise(target_clean, config.noise_rate, stream(2))

    source = Corpus(
        sentences=tuple(source_sents),
        label_set=LabelSet(_SOURCE_LABELS, LabelScheme.BIO),
        domain=Domain.SOURCE,
        name="synth-source",
    )
    target = Corpus(
        sentences=tuple(target_sents),
        label_set=LabelSet(_TARGET_LABELS, LabelScheme.BIO),
        domain=Domain.TARGET,
        name="synth-target",
    )
    return source, target
