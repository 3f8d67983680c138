#pragma once

#include <string>
#include <vector>

namespace aspire {

/// Classic Porter suffix-stripping stemmer (the 1980 rule set, unrevised).
/// Pinned by test vectors in tests/test_text.cpp; phrase collapsing and
/// label exclusion both depend on its exact output.
std::string porter_stem(const std::string& word);

std::string to_lower(std::string s);

/// Trim, lowercase, collapse internal whitespace runs to single spaces.
std::string normalize_phrase(const std::string& s);

/// Lowercased alphabetic tokens; digits and punctuation split tokens,
/// internal hyphens and apostrophes are kept.
std::vector<std::string> tokenize_words(const std::string& s);

/// Articles, prepositions, conjunctions, pronouns and small number words.
bool is_stopword(const std::string& token);

bool is_number_word(const std::string& token);

/// Root of a phrase: drop stopwords and number words, Porter-stem the rest,
/// join with single spaces ("two dogs" -> "dog", "snowy mountain" ->
/// "snowi mountain"). Falls back to stemming everything if all tokens are
/// droppable.
std::string phrase_root(const std::string& phrase);

/// Head token of a phrase (last non-stopword token), empty if none.
std::string head_token(const std::string& phrase);

/// True when `phrase` names the labelled object itself: the stemmed head of
/// the phrase equals the stemmed head of the label, or the full phrase root
/// equals the full label root. "dogs" is kept for label "dog sled"; "sled"
/// and "dog sled" are excluded.
bool phrase_matches_label(const std::string& phrase, const std::string& label);

}  // namespace aspire
