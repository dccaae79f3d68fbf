"""Statement+question pair extraction from task-oriented dialog JSON.

Agent turns are segmented into sentences on ".", "?" or "!" followed by
whitespace.  A pair is an adjacent statement (ending ".") immediately
followed by a question (ending "?") within one turn.  Pairs survive only
if neither sentence contains commas or digits, both have at least five
words, the combined prompt stays within [50, 250] characters, and both
sentences end with a monosyllabic word (so the final syllable coincides
with the final word for prosody edits).

Three prompt conditions are produced per pair: the original text, the
ending period replaced by a comma, and the period replaced by the filler
" um," (itself ending with a comma).
"""

import json
import re
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources
from pathlib import Path

from .errors import InputError, ValidationError

CONDITIONS = ("original", "comma", "filler")

_SENTENCE_SPLIT = re.compile(r"(?<=[.?!])\s+")
_VOWEL_GROUPS = re.compile(r"[aeiouy]+")


@dataclass(frozen=True)
class FilterConfig:
    min_words_per_sentence: int = 5
    min_chars: int = 50
    max_chars: int = 250

    def __post_init__(self):
        if self.min_words_per_sentence <= 0 or self.min_chars <= 0 or self.max_chars <= 0:
            raise ValidationError("filter bounds must be positive")
        if self.min_chars >= self.max_chars:
            raise ValidationError("min_chars must be below max_chars")


@dataclass(frozen=True)
class SentencePair:
    statement: str
    question: str
    dialog_id: str
    turn_index: int
    sentence_index: int = 0

    @property
    def sample_id(self) -> str:
        return f"{self.dialog_id}-t{self.turn_index}-s{self.sentence_index}"


@lru_cache(maxsize=1)
def load_lexicon() -> dict[str, int]:
    """The bundled word -> syllable-count table."""
    text = resources.files("vapeval").joinpath("data/syllable_counts.txt").read_text()
    lexicon = {}
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        word, count = line.rsplit(" ", 1)
        lexicon[word] = int(count)
    return lexicon


def normalize_word(word: str) -> str:
    """Lowercase and strip punctuation; apostrophes are dropped."""
    return re.sub(r"[^a-z]", "", word.lower())


def count_syllables(word: str, lexicon: dict[str, int] | None = None) -> int:
    """Dictionary count when known, else contiguous-vowel-group heuristic.

    The heuristic counts [aeiouy]+ groups, drops a silent final 'e' when it
    forms its own group and is not the only one, and never returns below 1.
    """
    normalized = normalize_word(word)
    if not normalized:
        raise ValidationError(f"word {word!r} is empty after normalization")
    if lexicon is None:
        lexicon = load_lexicon()
    if normalized in lexicon:
        return lexicon[normalized]
    groups = _VOWEL_GROUPS.findall(normalized)
    count = len(groups)
    if count > 1 and groups[-1] == "e" and normalized.endswith("e"):
        count -= 1
    return max(count, 1)


def split_sentences(text: str) -> list[str]:
    return [s.strip() for s in _SENTENCE_SPLIT.split(text.strip()) if s.strip()]


def _words(sentence: str) -> list[str]:
    return sentence.split()


def filter_reason(
    statement: str,
    question: str,
    cfg: FilterConfig = FilterConfig(),
    lexicon: dict[str, int] | None = None,
) -> str | None:
    """Why a candidate pair is rejected, or None if it qualifies."""
    if not statement.endswith("."):
        return "statement_terminator"
    if not question.endswith("?"):
        return "question_terminator"
    combined = f"{statement} {question}"
    if "," in combined:
        return "comma"
    if any(ch.isdigit() for ch in combined):
        return "digit"
    for sentence in (statement, question):
        if len(_words(sentence)) < cfg.min_words_per_sentence:
            return "min_words"
    if len(combined) < cfg.min_chars:
        return "min_chars"
    if len(combined) > cfg.max_chars:
        return "max_chars"
    for sentence in (statement, question):
        final = normalize_word(_words(sentence)[-1])
        if not final:
            return "final_word_unreadable"
        if count_syllables(final, lexicon) != 1:
            return "final_word_syllables"
    return None


def _turn_iter(dialogs: dict):
    """Yield (dialog_id, turn_index, text) for every agent turn.

    Accepts {dialog_id: {"log": [turn, ...]}} or {dialog_id: [turn, ...]}.
    A turn is either {"text": ..., "speaker": "agent"|"system"|"user"} or a
    bare string; without speaker tags, turns alternate starting with the
    user, so odd indices are the agent.
    """
    for dialog_id in sorted(dialogs):
        entry = dialogs[dialog_id]
        turns = entry.get("log") if isinstance(entry, dict) else entry
        if not isinstance(turns, list):
            raise InputError(f"dialog {dialog_id!r}: expected a turn list, got {type(entry).__name__}")
        for index, turn in enumerate(turns):
            if isinstance(turn, str):
                text, speaker = turn, None
            elif isinstance(turn, dict) and "text" in turn:
                text, speaker = turn["text"], turn.get("speaker")
            else:
                raise InputError(f"dialog {dialog_id!r}: turn {index} has no text")
            if speaker is None:
                is_agent = index % 2 == 1
            else:
                is_agent = str(speaker).lower() in ("agent", "system", "clerk", "wizard")
            if is_agent:
                yield dialog_id, index, text


def extract_pairs(
    dialogs: dict,
    cfg: FilterConfig = FilterConfig(),
    lexicon: dict[str, int] | None = None,
    rejects: list | None = None,
) -> list[SentencePair]:
    """All qualifying pairs in stable (dialog_id, turn_index, sentence_index) order.

    When `rejects` is given, (candidate, reason) tuples for every rejected
    adjacent statement/question candidate are appended to it.
    """
    pairs = []
    for dialog_id, turn_index, text in _turn_iter(dialogs):
        sentences = split_sentences(text)
        for i in range(len(sentences) - 1):
            statement, question = sentences[i], sentences[i + 1]
            if not (statement.endswith(".") and question.endswith("?")):
                continue
            candidate = SentencePair(
                statement=statement,
                question=question,
                dialog_id=dialog_id,
                turn_index=turn_index,
                sentence_index=i,
            )
            reason = filter_reason(statement, question, cfg, lexicon)
            if reason is None:
                pairs.append(candidate)
            elif rejects is not None:
                rejects.append((candidate, reason))
    return pairs


def permute(pair: SentencePair, condition: str) -> str:
    """Prompt text for one condition; the question is never touched."""
    if condition == "original":
        return f"{pair.statement} {pair.question}"
    if condition == "comma":
        return f"{pair.statement[:-1]}, {pair.question}"
    if condition == "filler":
        return f"{pair.statement[:-1]} um, {pair.question}"
    raise ValidationError(f"unknown condition {condition!r}, expected one of {CONDITIONS}")


def load_dialogs(path) -> dict:
    """Parse a dialog corpus JSON file."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise InputError(f"cannot read corpus {path}: {exc}") from exc
    try:
        dialogs = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    if not isinstance(dialogs, dict):
        raise InputError(f"{path}: expected a dialog_id -> dialog mapping at top level")
    return dialogs
