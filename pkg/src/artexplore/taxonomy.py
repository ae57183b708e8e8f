"""Label taxonomy: categories, label names, and detector prompt serialization.

The taxonomy is loaded from a small text document (one category header per
block, comma-separated label names; see docs/formats.md) and is immutable
afterwards. It owns two mappings the rest of the system relies on:

* label names -> detector prompt (a single string of names separated by
  full stops, capped at 120 entries), and
* detected label name -> browse category, disambiguated by an explicit
  category precedence list when a name occurs under several categories.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

CATEGORIES = (
    "Animal",
    "Architecture",
    "Christianity",
    "Clothing",
    "Food",
    "Furniture",
    "Human",
    "Instrument",
    "Interior",
    "Nature",
    "Occultism",
    "Vehicle",
    "Weaponry",
)

LABEL_CAPACITY = 120

PROMPT_SEPARATOR = ". "

PRECEDENCE_DIRECTIVE = "!precedence:"


class TaxonomyError(ValueError):
    """Raised for malformed taxonomy documents and unknown label lookups."""


@dataclass(frozen=True)
class Label:
    """One (name, category) entry.

    Names must be non-empty and must not contain a full stop, which is
    reserved as the prompt separator.
    """

    name: str
    category: str

    def __post_init__(self):
        if not self.name:
            raise TaxonomyError("empty name")
        if "." in self.name:
            raise TaxonomyError(f"label name contains '.': {self.name!r}")
        if self.category not in CATEGORIES:
            raise TaxonomyError(f"unknown category: {self.category!r}")


@dataclass(frozen=True)
class Taxonomy:
    """Immutable label system: ordered entries plus category precedence.

    ``precedence`` is a full ordering of the categories present in the
    document; when a label name occurs under several categories,
    :func:`category_of` resolves it to the first category in this list
    that contains it.
    """

    entries: tuple[Label, ...]
    precedence: tuple[str, ...]
    _by_name: dict[str, tuple[str, ...]] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if not self.entries:
            raise TaxonomyError("no entries")
        if len(self.entries) > LABEL_CAPACITY:
            raise TaxonomyError(f"exceeds label capacity {LABEL_CAPACITY}")
        seen: set[tuple[str, str]] = set()
        by_name: dict[str, list[str]] = {}
        for entry in self.entries:
            key = (entry.name, entry.category)
            if key in seen:
                raise TaxonomyError(f"duplicate entry: {key}")
            seen.add(key)
            by_name.setdefault(entry.name, []).append(entry.category)
        for category in self.precedence:
            if category not in CATEGORIES:
                raise TaxonomyError(f"unknown category in precedence: {category!r}")
        object.__setattr__(
            self, "_by_name", {name: tuple(cats) for name, cats in by_name.items()}
        )

    @property
    def categories(self) -> tuple[str, ...]:
        """Categories actually present, in document order."""
        out: list[str] = []
        for entry in self.entries:
            if entry.category not in out:
                out.append(entry.category)
        return tuple(out)

    def unique_names(self) -> tuple[str, ...]:
        """Label names deduplicated in first-occurrence order."""
        out: list[str] = []
        seen: set[str] = set()
        for entry in self.entries:
            if entry.name not in seen:
                seen.add(entry.name)
                out.append(entry.name)
        return tuple(out)

    def labels_in(self, category: str) -> tuple[str, ...]:
        """Label names listed under ``category``, in document order."""
        if category not in CATEGORIES:
            raise TaxonomyError(f"unknown category: {category!r}")
        return tuple(e.name for e in self.entries if e.category == category)

    def __contains__(self, name: str) -> bool:
        return name in self._by_name


def load_taxonomy(source: str | Path) -> Taxonomy:
    """Parse a taxonomy document into a :class:`Taxonomy`.

    ``source`` is either the document text or a path to it. The document
    lists one category block per header line (``<Category>:``) followed by
    comma-separated label names; ``#`` lines are comments. An optional
    ``!precedence: A, B`` directive puts the listed categories first in the
    duplicate-resolution order; all remaining categories follow in document
    order.

    Raises:
        TaxonomyError: empty document, empty or stop-containing name,
            unknown category, more than 120 entries, duplicate
            (name, category) pair, or names outside any category block.
    """
    if isinstance(source, Path):
        text = source.read_text(encoding="utf-8")
    else:
        text = source

    entries: list[Label] = []
    precedence_prefix: list[str] = []
    current_category: str | None = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if line.startswith(PRECEDENCE_DIRECTIVE):
            names = line[len(PRECEDENCE_DIRECTIVE) :].split(",")
            precedence_prefix = [n.strip() for n in names if n.strip()]
            continue
        if line.endswith(":") and "," not in line:
            category = line[:-1].strip()
            if category not in CATEGORIES:
                raise TaxonomyError(f"unknown category: {category!r} (line {lineno})")
            current_category = category
            continue
        if current_category is None:
            raise TaxonomyError(f"label names before any category header (line {lineno})")
        for name in line.split(","):
            name = name.strip()
            if not name:
                raise TaxonomyError(f"empty name (line {lineno})")
            entries.append(Label(name=name, category=current_category))

    if not entries:
        raise TaxonomyError("no entries")

    document_order: list[str] = []
    for entry in entries:
        if entry.category not in document_order:
            document_order.append(entry.category)
    precedence = list(precedence_prefix)
    for category in document_order:
        if category not in precedence:
            precedence.append(category)

    return Taxonomy(entries=tuple(entries), precedence=tuple(precedence))


def default_taxonomy() -> Taxonomy:
    """The taxonomy document shipped with the package (13 categories, 120 labels)."""
    text = resources.files("artexplore.data").joinpath("labels.txt").read_text("utf-8")
    return load_taxonomy(text)


def build_prompt(taxonomy: Taxonomy) -> str:
    """Serialize unique label names into the detector prompt string.

    Names are joined by ``". "`` in first-occurrence order, with no
    trailing separator; duplicate names (same label under two categories)
    appear once.
    """
    return PROMPT_SEPARATOR.join(taxonomy.unique_names())


def parse_prompt(text: str) -> list[str]:
    """Split a prompt string back into label names.

    Inverse of :func:`build_prompt`: splits on the exact ``". "``
    separator and trims nothing else. Every segment must be non-empty and
    stop-free; anything else (doubled stops, trailing stop, empty input)
    is malformed.

    Raises:
        TaxonomyError: on an empty segment.
    """
    segments = text.split(PROMPT_SEPARATOR)
    for segment in segments:
        if not segment or "." in segment:
            raise TaxonomyError("empty segment in prompt")
    return segments


def category_of(taxonomy: Taxonomy, name: str) -> str:
    """Resolve a detected label name to its browse category.

    A name occurring under a single category maps to it; a name occurring
    under several maps to the first category in the taxonomy's precedence
    list that contains it.

    Raises:
        TaxonomyError: if the name is not in the taxonomy.
    """
    categories = taxonomy._by_name.get(name)
    if categories is None:
        raise TaxonomyError(f"unknown label: {name!r}")
    if len(categories) == 1:
        return categories[0]
    for category in taxonomy.precedence:
        if category in categories:
            return category
    # precedence covers all document categories, so this is unreachable
    raise TaxonomyError(f"no precedence category for duplicated label {name!r}")
