"""Word taxonomy and caption templating.

A taxonomy is an ordered list of categories, each holding words tagged
with a grammatical kind.  The kind picks the caption template:

    Adjective      -> "a photo of a/an <word> person"
    Noun, Object   -> "a photo of a/an <word>"
    Activity       -> "a photo of a person who is <word>"

Activity words are stored already in -ing form.  The bundled default
taxonomy lives in ``data/taxonomy.json`` next to this module.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Optional, Union

from .errors import SchemaError


class Category(str, Enum):
    APPEARANCE = "Appearance"
    BEHAVIORAL = "Behavioral"
    EDUCATION_WEALTH = "EducationWealth"
    CRIMINAL_JUSTICE = "CriminalJustice"
    HEALTHCARE = "Healthcare"
    PORTRAYAL_IN_MEDIA = "PortrayalInMedia"
    POLITICAL = "Political"
    RELIGION = "Religion"
    OCCUPATION = "Occupation"
    STEREOTYPING = "Stereotyping"


class WordKind(str, Enum):
    ADJECTIVE = "Adjective"
    NOUN = "Noun"
    ACTIVITY = "Activity"
    OBJECT = "Object"


@dataclass(frozen=True)
class TaxonomyWord:
    text: str
    kind: WordKind

    def __post_init__(self):
        if not self.text:
            raise SchemaError("word text must be non-empty")


@dataclass
class TaxonomyCategory:
    name: Category
    words: list[TaxonomyWord] = field(default_factory=list)

    def __post_init__(self):
        if not self.words:
            raise SchemaError(f"category {self.name.value} has no words")
        seen: set[str] = set()
        for word in self.words:
            if word.text in seen:
                raise SchemaError(
                    f"category {self.name.value} lists {word.text!r} twice"
                )
            seen.add(word.text)


@dataclass(frozen=True)
class Caption:
    text: str
    source_word: TaxonomyWord
    category: Optional[Category] = None


# Words whose spelling and pronunciation disagree about the article.
_VOWEL_BUT_A = {"user", "unicorn", "european", "one"}
_CONSONANT_BUT_AN = {"hour", "honest", "heir", "mba"}
_VOWELS = "aeiou"


def article_for(word: str) -> str:
    """Pick "a" or "an" for a word, honoring the usual sound exceptions."""
    lowered = word.lower()
    if lowered in _CONSONANT_BUT_AN:
        return "an"
    if lowered in _VOWEL_BUT_A:
        return "a"
    return "an" if lowered[0] in _VOWELS else "a"


def render_caption(word: TaxonomyWord, category: Optional[Category] = None) -> Caption:
    """Render the retrieval caption for one taxonomy word."""
    if word.kind is WordKind.ACTIVITY:
        text = f"a photo of a person who is {word.text}"
    elif word.kind is WordKind.ADJECTIVE:
        text = f"a photo of {article_for(word.text)} {word.text} person"
    else:  # Noun and Object share a template
        text = f"a photo of {article_for(word.text)} {word.text}"
    return Caption(text=text, source_word=word, category=category)


def render_all(categories: list[TaxonomyCategory]) -> list[Caption]:
    """Render every caption, categories and words kept in taxonomy order."""
    captions = []
    for cat in categories:
        for word in cat.words:
            captions.append(render_caption(word, cat.name))
    return captions


def _parse_word(obj, where: str) -> TaxonomyWord:
    if not isinstance(obj, dict):
        raise SchemaError(f"{where}: word entries must be objects")
    text = obj.get("text")
    kind = obj.get("kind")
    if not isinstance(text, str) or not text:
        raise SchemaError(f"{where}: word text must be a non-empty string")
    if not isinstance(kind, str):
        raise SchemaError(f"{where}: word {text!r} is missing its kind")
    try:
        parsed_kind = WordKind(kind)
    except ValueError:
        raise SchemaError(f"{where}: unknown word kind {kind!r}") from None
    return TaxonomyWord(text=text, kind=parsed_kind)


def parse_taxonomy(doc) -> list[TaxonomyCategory]:
    """Validate a decoded taxonomy document."""
    if not isinstance(doc, list):
        raise SchemaError("taxonomy document must be a top-level array")
    categories = []
    seen: set[Category] = set()
    for i, entry in enumerate(doc):
        where = f"category #{i}"
        if not isinstance(entry, dict):
            raise SchemaError(f"{where}: entries must be objects")
        name = entry.get("category")
        if not isinstance(name, str):
            raise SchemaError(f"{where}: missing category name")
        try:
            category = Category(name)
        except ValueError:
            raise SchemaError(f"{where}: unknown category {name!r}") from None
        if category in seen:
            raise SchemaError(f"category {name!r} appears twice")
        seen.add(category)
        words_obj = entry.get("words")
        if not isinstance(words_obj, list) or not words_obj:
            raise SchemaError(f"{where}: words must be a non-empty array")
        words = [_parse_word(w, f"{name}") for w in words_obj]
        categories.append(TaxonomyCategory(name=category, words=words))
    return categories


def load_taxonomy(path: Union[str, Path]) -> list[TaxonomyCategory]:
    path = Path(path)
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path}: not valid JSON: {exc}") from exc
    try:
        return parse_taxonomy(doc)
    except SchemaError as exc:
        raise SchemaError(f"{path}: {exc}") from exc


def default_taxonomy_path() -> Path:
    return Path(__file__).parent / "data" / "taxonomy.json"


def load_default_taxonomy() -> list[TaxonomyCategory]:
    return load_taxonomy(default_taxonomy_path())


def word_count(categories: list[TaxonomyCategory]) -> int:
    return sum(len(cat.words) for cat in categories)
