import json

import pytest

from vapeval.corpus import (
    CONDITIONS,
    FilterConfig,
    SentencePair,
    count_syllables,
    extract_pairs,
    filter_reason,
    load_dialogs,
    load_lexicon,
    normalize_word,
    permute,
    split_sentences,
)
from vapeval.errors import InputError, ValidationError

FIG2_STATEMENT = "Yes that time will work."
FIG2_QUESTION = "Would you like me to book it for you?"


def test_fixture_extraction_is_deterministic(corpus_dialogs):
    first = extract_pairs(corpus_dialogs)
    second = extract_pairs(corpus_dialogs)
    assert first == second
    assert len(first) == 8


def test_fixture_accepts(corpus_dialogs):
    accepted = {p.sample_id for p in extract_pairs(corpus_dialogs)}
    assert accepted == {
        "d01-t1-s0", "d02-t1-s0", "d10-t1-s1", "d12-t0-s0",
        "d14-t0-s0", "d15-t0-s0", "d18-t3-s0", "d20-t1-s0",
    }


def test_fixture_rejects_cover_every_reason(corpus_dialogs):
    rejects = []
    extract_pairs(corpus_dialogs, rejects=rejects)
    by_id = {c.sample_id: reason for c, reason in rejects}
    assert by_id == {
        "d03-t0-s0": "comma",
        "d04-t0-s0": "digit",
        "d05-t0-s0": "min_words",
        "d06-t0-s0": "min_chars",
        "d07-t0-s0": "max_chars",
        "d08-t0-s0": "final_word_unreadable",
        "d09-t0-s0": "final_word_syllables",
        "d14-t0-s2": "digit",
        "d16-t0-s0": "min_words",
        "d17-t0-s0": "comma",
        "d19-t0-s0": "digit",
    }


def test_fig2_pair_accepted_with_exact_permutations(corpus_dialogs):
    pairs = [p for p in extract_pairs(corpus_dialogs) if p.dialog_id == "d01"]
    assert len(pairs) == 1
    pair = pairs[0]
    assert pair.statement == FIG2_STATEMENT
    assert pair.question == FIG2_QUESTION
    assert permute(pair, "original") == (
        "Yes that time will work. Would you like me to book it for you?"
    )
    assert permute(pair, "comma") == (
        "Yes that time will work, Would you like me to book it for you?"
    )
    assert permute(pair, "filler") == (
        "Yes that time will work um, Would you like me to book it for you?"
    )


def test_user_turns_are_never_extracted(corpus_dialogs):
    # d11 holds the Fig. 2 text in a user turn
    assert not any(p.dialog_id == "d11" for p in extract_pairs(corpus_dialogs))


def test_bare_string_dialogs_alternate_user_first(corpus_dialogs):
    pairs = [p for p in extract_pairs(corpus_dialogs) if p.dialog_id == "d18"]
    assert [p.turn_index for p in pairs] == [3]


def test_terminator_rules():
    assert filter_reason("No ending period here", FIG2_QUESTION) == "statement_terminator"
    assert filter_reason("What a fine day this is!", FIG2_QUESTION) == "statement_terminator"
    assert filter_reason(FIG2_STATEMENT, "This is not a question.") == "question_terminator"
    assert filter_reason(FIG2_STATEMENT, FIG2_QUESTION) is None


def test_filter_reason_unit_cases():
    q = FIG2_QUESTION
    assert filter_reason("Yes, that time will work.", q) == "comma"
    assert filter_reason("The train leaves at 9 tonight.", q) == "digit"
    assert filter_reason("That sounds good.", q) == "min_words"
    assert filter_reason("He can fix it for you.", "Do you want it done now?") == "min_chars"
    long_statement = "The " + "very " * 48 + "long sentence ends here."
    assert filter_reason(long_statement, q) == "max_chars"
    assert filter_reason("Please confirm the booking reference &.", "Could you read it back to me?") == "final_word_unreadable"
    assert filter_reason("We can arrange a ride for early morning.", q) == "final_word_syllables"
    assert filter_reason(FIG2_STATEMENT, "Would you like the address posted today?") == "final_word_syllables"


def test_combined_length_includes_joining_space():
    # statement 24 + space + question 25 chars = exactly the minimum of 50
    statement = "The tea shop is up here."
    question = "Can you meet me up there?"
    assert len(statement) == 24 and len(question) == 25
    assert filter_reason(statement, question) is None
    shorter = "Can you meet me there?"  # 22 chars -> combined 47
    assert filter_reason(statement, shorter) == "min_chars"


def test_filter_config_bounds():
    cfg = FilterConfig(min_words_per_sentence=3, min_chars=10, max_chars=80)
    assert filter_reason("That sounds good.", "Shall we meet you out front?", cfg) is None
    with pytest.raises(ValidationError):
        FilterConfig(min_words_per_sentence=0)
    with pytest.raises(ValidationError):
        FilterConfig(min_chars=100, max_chars=50)


def test_split_sentences():
    assert split_sentences("One here. Two there? Three now!") == [
        "One here.", "Two there?", "Three now!",
    ]
    assert split_sentences("  Leading space. Trailing?  ") == ["Leading space.", "Trailing?"]
    assert split_sentences("No terminator at all") == ["No terminator at all"]
    assert split_sentences("Really?! Yes. ") == ["Really?!", "Yes."]


def test_normalize_word():
    assert normalize_word("Won't") == "wont"
    assert normalize_word("work.") == "work"
    assert normalize_word("&.") == ""
    assert normalize_word("You?") == "you"


def test_count_syllables_lexicon_and_heuristic():
    lex = load_lexicon()
    assert lex["about"] == 2
    assert count_syllables("about") == 2
    assert count_syllables("work") == 1
    assert count_syllables("time") == 1      # silent final e
    assert count_syllables("square") == 1    # "ua" + silent e
    assert count_syllables("morning") == 2
    assert count_syllables("be") == 1        # the lone vowel group is kept
    with pytest.raises(ValidationError):
        count_syllables("123")


def test_extract_sentence_index_and_multiple_candidates(corpus_dialogs):
    pairs = [p for p in extract_pairs(corpus_dialogs) if p.dialog_id == "d10"]
    assert len(pairs) == 1
    assert pairs[0].sentence_index == 1
    assert pairs[0].sample_id == "d10-t1-s1"


def test_permute_unknown_condition():
    pair = SentencePair(FIG2_STATEMENT, FIG2_QUESTION, "d", 1)
    with pytest.raises(ValidationError):
        permute(pair, "louder")
    assert CONDITIONS == ("original", "comma", "filler")


def test_load_dialogs_errors(tmp_path):
    missing = tmp_path / "nope.json"
    with pytest.raises(InputError):
        load_dialogs(missing)
    bad = tmp_path / "bad.json"
    bad.write_text('{"d": [}')
    with pytest.raises(InputError, match="line 1"):
        load_dialogs(bad)
    not_mapping = tmp_path / "list.json"
    not_mapping.write_text("[1, 2]")
    with pytest.raises(InputError, match="mapping"):
        load_dialogs(not_mapping)


def test_turn_iter_errors():
    with pytest.raises(InputError, match="turn list"):
        extract_pairs({"d": {"noturns": True}})
    with pytest.raises(InputError, match="no text"):
        extract_pairs({"d": {"log": [{"speaker": "agent"}]}})


def test_roundtrip_through_file(tmp_path, corpus_dialogs):
    path = tmp_path / "c.json"
    path.write_text(json.dumps(corpus_dialogs))
    assert extract_pairs(load_dialogs(path)) == extract_pairs(corpus_dialogs)
