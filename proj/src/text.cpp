#include "aspire/text.hpp"

#include <algorithm>
#include <cctype>
#include <set>
#include <sstream>

namespace aspire {

namespace {

// --- Porter stemmer -------------------------------------------------------
//
// Straight transcription of the original rule tables. Works on a lowercase
// buffer; `end` is the index one past the last letter of the current stem.

class PorterState {
  public:
    explicit PorterState(std::string w) : b_(std::move(w)), end_(b_.size()) {}

    std::string result() const { return b_.substr(0, end_); }

    bool is_consonant(std::size_t i) const {
        char c = b_[i];
        if (c == 'a' || c == 'e' || c == 'i' || c == 'o' || c == 'u') return false;
        if (c == 'y') return i == 0 ? true : !is_consonant(i - 1);
        return true;
    }

    // Measure m of the stem b_[0..j]: count of VC sequences.
    int measure(std::size_t j) const {
        int n = 0;
        std::size_t i = 0;
        while (true) {
            if (i > j) return n;
            if (!is_consonant(i)) break;
            ++i;
        }
        ++i;
        while (true) {
            while (true) {
                if (i > j) return n;
                if (is_consonant(i)) break;
                ++i;
            }
            ++i;
            ++n;
            while (true) {
                if (i > j) return n;
                if (!is_consonant(i)) break;
                ++i;
            }
            ++i;
        }
    }

    bool vowel_in_stem(std::size_t j) const {
        for (std::size_t i = 0; i <= j; ++i)
            if (!is_consonant(i)) return true;
        return false;
    }

    bool double_consonant(std::size_t j) const {
        if (j < 1) return false;
        if (b_[j] != b_[j - 1]) return false;
        return is_consonant(j);
    }

    // cvc at positions j-2..j where the final consonant is not w, x or y.
    bool cvc(std::size_t j) const {
        if (j < 2 || !is_consonant(j) || is_consonant(j - 1) || !is_consonant(j - 2)) return false;
        char c = b_[j];
        return c != 'w' && c != 'x' && c != 'y';
    }

    bool ends(const char* suffix) {
        std::size_t len = std::char_traits<char>::length(suffix);
        if (len > end_) return false;
        if (b_.compare(end_ - len, len, suffix) != 0) return false;
        stem_j_ = end_ - len - 1 + 0;  // last index of the stem before the suffix
        has_suffix_len_ = len;
        return true;
    }

    // Replace the matched suffix with `s` if measure(stem) > m_min.
    void replace_if(int m_min, const char* s) {
        std::size_t j = end_ - has_suffix_len_;  // stem length
        if (j == 0) return;                      // no stem at all
        if (measure(j - 1) > m_min) set_suffix(s);
    }

    void set_suffix(const char* s) {
        std::size_t j = end_ - has_suffix_len_;
        b_.replace(j, b_.size() - j, s);
        end_ = j + std::char_traits<char>::length(s);
    }

    std::size_t end() const { return end_; }
    void set_end(std::size_t e) { end_ = e; }
    char at(std::size_t i) const { return b_[i]; }
    std::size_t stem_len() const { return end_ - has_suffix_len_; }

  private:
    std::string b_;
    std::size_t end_;
    std::size_t stem_j_ = 0;
    std::size_t has_suffix_len_ = 0;
};

void porter_step1ab(PorterState& st) {
    if (st.ends("sses")) {
        st.set_suffix("ss");
    } else if (st.ends("ies")) {
        st.set_suffix("i");
    } else if (st.ends("ss")) {
        // keep
    } else if (st.ends("s")) {
        st.set_suffix("");
    }

    bool fired = false;
    if (st.ends("eed")) {
        std::size_t j = st.stem_len();
        if (j > 0 && st.measure(j - 1) > 0) st.set_suffix("ee");
    } else if (st.ends("ed")) {
        std::size_t j = st.stem_len();
        if (j > 0 && st.vowel_in_stem(j - 1)) {
            st.set_suffix("");
            fired = true;
        }
    } else if (st.ends("ing")) {
        std::size_t j = st.stem_len();
        if (j > 0 && st.vowel_in_stem(j - 1)) {
            st.set_suffix("");
            fired = true;
        }
    }

    if (fired) {
        if (st.ends("at")) {
            st.set_suffix("ate");
        } else if (st.ends("bl")) {
            st.set_suffix("ble");
        } else if (st.ends("iz")) {
            st.set_suffix("ize");
        } else if (st.double_consonant(st.end() - 1)) {
            char c = st.at(st.end() - 1);
            if (c != 'l' && c != 's' && c != 'z') st.set_end(st.end() - 1);
        } else if (st.measure(st.end() - 1) == 1 && st.cvc(st.end() - 1)) {
            st.ends("");  // position suffix marker at end
            st.set_suffix("e");
        }
    }
}

void porter_step1c(PorterState& st) {
    if (st.ends("y")) {
        std::size_t j = st.stem_len();
        if (j > 0 && st.vowel_in_stem(j - 1)) st.set_suffix("i");
    }
}

void porter_step2(PorterState& st) {
    if (st.end() < 2) return;
    switch (st.at(st.end() - 2)) {
        case 'a':
            if (st.ends("ational")) { st.replace_if(0, "ate"); return; }
            if (st.ends("tional")) { st.replace_if(0, "tion"); return; }
            break;
        case 'c':
            if (st.ends("enci")) { st.replace_if(0, "ence"); return; }
            if (st.ends("anci")) { st.replace_if(0, "ance"); return; }
            break;
        case 'e':
            if (st.ends("izer")) { st.replace_if(0, "ize"); return; }
            break;
        case 'l':
            if (st.ends("abli")) { st.replace_if(0, "able"); return; }
            if (st.ends("alli")) { st.replace_if(0, "al"); return; }
            if (st.ends("entli")) { st.replace_if(0, "ent"); return; }
            if (st.ends("eli")) { st.replace_if(0, "e"); return; }
            if (st.ends("ousli")) { st.replace_if(0, "ous"); return; }
            break;
        case 'o':
            if (st.ends("ization")) { st.replace_if(0, "ize"); return; }
            if (st.ends("ation")) { st.replace_if(0, "ate"); return; }
            if (st.ends("ator")) { st.replace_if(0, "ate"); return; }
            break;
        case 's':
            if (st.ends("alism")) { st.replace_if(0, "al"); return; }
            if (st.ends("iveness")) { st.replace_if(0, "ive"); return; }
            if (st.ends("fulness")) { st.replace_if(0, "ful"); return; }
            if (st.ends("ousness")) { st.replace_if(0, "ous"); return; }
            break;
        case 't':
            if (st.ends("aliti")) { st.replace_if(0, "al"); return; }
            if (st.ends("iviti")) { st.replace_if(0, "ive"); return; }
            if (st.ends("biliti")) { st.replace_if(0, "ble"); return; }
            break;
        default:
            break;
    }
}

void porter_step3(PorterState& st) {
    switch (st.at(st.end() - 1)) {
        case 'e':
            if (st.ends("icate")) { st.replace_if(0, "ic"); return; }
            if (st.ends("ative")) { st.replace_if(0, ""); return; }
            if (st.ends("alize")) { st.replace_if(0, "al"); return; }
            break;
        case 'i':
            if (st.ends("iciti")) { st.replace_if(0, "ic"); return; }
            break;
        case 'l':
            if (st.ends("ical")) { st.replace_if(0, "ic"); return; }
            if (st.ends("ful")) { st.replace_if(0, ""); return; }
            break;
        case 's':
            if (st.ends("ness")) { st.replace_if(0, ""); return; }
            break;
        default:
            break;
    }
}

void porter_step4(PorterState& st) {
    if (st.end() < 2) return;
    bool matched = false;
    switch (st.at(st.end() - 2)) {
        case 'a': matched = st.ends("al"); break;
        case 'c': matched = st.ends("ance") || st.ends("ence"); break;
        case 'e': matched = st.ends("er"); break;
        case 'i': matched = st.ends("ic"); break;
        case 'l': matched = st.ends("able") || st.ends("ible"); break;
        case 'n':
            matched = st.ends("ant") || st.ends("ement") || st.ends("ment") || st.ends("ent");
            break;
        case 'o':
            if (st.ends("ion")) {
                std::size_t j = st.stem_len();
                matched = j > 0 && (st.at(j - 1) == 's' || st.at(j - 1) == 't');
            } else {
                matched = st.ends("ou");
            }
            break;
        case 's': matched = st.ends("ism"); break;
        case 't': matched = st.ends("ate") || st.ends("iti"); break;
        case 'u': matched = st.ends("ous"); break;
        case 'v': matched = st.ends("ive"); break;
        case 'z': matched = st.ends("ize"); break;
        default: break;
    }
    if (matched) {
        std::size_t j = st.stem_len();
        if (j > 0 && st.measure(j - 1) > 1) st.set_suffix("");
    }
}

void porter_step5(PorterState& st) {
    if (st.at(st.end() - 1) == 'e') {
        int m = st.measure(st.end() - 1);
        if (m > 1 || (m == 1 && !st.cvc(st.end() - 2))) {
            st.ends("e");
            st.set_suffix("");
        }
    }
    if (st.end() > 1 && st.at(st.end() - 1) == 'l' && st.double_consonant(st.end() - 1) &&
        st.measure(st.end() - 1) > 1) {
        st.set_end(st.end() - 1);
    }
}

}  // namespace

std::string porter_stem(const std::string& word) {
    std::string w = to_lower(word);
    if (w.size() <= 2) return w;
    for (char c : w)
        if (c < 'a' || c > 'z') return w;  // stem pure alphabetic tokens only

    PorterState st(w);
    porter_step1ab(st);
    porter_step1c(st);
    porter_step2(st);
    porter_step3(st);
    porter_step4(st);
    porter_step5(st);
    return st.result();
}

std::string to_lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

std::string normalize_phrase(const std::string& s) {
    std::string out;
    out.reserve(s.size());
    bool in_space = true;
    for (char raw : to_lower(s)) {
        bool space = std::isspace(static_cast<unsigned char>(raw)) != 0;
        if (space) {
            if (!in_space) out.push_back(' ');
            in_space = true;
        } else {
            out.push_back(raw);
            in_space = false;
        }
    }
    while (!out.empty() && out.back() == ' ') out.pop_back();
    return out;
}

std::vector<std::string> tokenize_words(const std::string& s) {
    std::vector<std::string> tokens;
    std::string cur;
    auto flush = [&] {
        while (!cur.empty() && (cur.front() == '-' || cur.front() == '\'')) cur.erase(cur.begin());
        while (!cur.empty() && (cur.back() == '-' || cur.back() == '\'')) cur.pop_back();
        if (!cur.empty()) tokens.push_back(cur);
        cur.clear();
    };
    for (char raw : to_lower(s)) {
        unsigned char c = static_cast<unsigned char>(raw);
        if (std::isalpha(c) || ((raw == '-' || raw == '\'') && !cur.empty())) {
            cur.push_back(raw);
        } else {
            flush();
        }
    }
    flush();
    return tokens;
}

namespace {

const std::set<std::string>& stopword_set() {
    static const std::set<std::string> words = {
        "a",    "an",   "the",  "of",    "in",   "on",   "at",   "with",  "and",  "or",
        "to",   "from", "by",   "for",   "over", "under", "near", "above", "below", "into",
        "onto", "is",   "are",  "was",   "were", "be",    "there", "it",   "its",  "his",
        "her",  "their", "this", "that",  "these", "those", "some", "several", "many", "few",
    };
    return words;
}

const std::set<std::string>& number_word_set() {
    static const std::set<std::string> words = {
        "one", "two", "three", "four",   "five",   "six",
        "ten", "seven", "eight", "nine", "eleven", "twelve",
    };
    return words;
}

}  // namespace

bool is_stopword(const std::string& token) {
    return stopword_set().count(token) > 0;
}

bool is_number_word(const std::string& token) {
    return number_word_set().count(token) > 0;
}

std::string phrase_root(const std::string& phrase) {
    std::vector<std::string> tokens = tokenize_words(phrase);
    std::vector<std::string> kept;
    for (const auto& t : tokens) {
        if (is_stopword(t) || is_number_word(t)) continue;
        kept.push_back(porter_stem(t));
    }
    if (kept.empty()) {
        for (const auto& t : tokens) kept.push_back(porter_stem(t));
    }
    std::string out;
    for (std::size_t i = 0; i < kept.size(); ++i) {
        if (i) out.push_back(' ');
        out += kept[i];
    }
    return out;
}

std::string head_token(const std::string& phrase) {
    std::vector<std::string> tokens = tokenize_words(phrase);
    for (auto it = tokens.rbegin(); it != tokens.rend(); ++it) {
        if (!is_stopword(*it) && !is_number_word(*it)) return *it;
    }
    return tokens.empty() ? std::string{} : tokens.back();
}

bool phrase_matches_label(const std::string& phrase, const std::string& label) {
    std::string ph = head_token(phrase);
    std::string lh = head_token(label);
    if (ph.empty() || lh.empty()) return false;
    if (porter_stem(ph) == porter_stem(lh)) return true;
    return phrase_root(phrase) == phrase_root(label);
}

}  // namespace aspire
