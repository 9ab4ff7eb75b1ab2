#pragma once

#include <algorithm>
#include <clocale>
#include <cwctype>
#include <fstream>
#include <locale.h>
#include <set>
#include <string>
#include <string_view>
#include <vector>
#include <wctype.h>

#include "seqrank/error.hpp"
#include "seqrank/porter.hpp"
#include "seqrank/utf8.hpp"

namespace seqrank {

enum class Stemmer { none, porter };

/// Lucene's default English stopword set (33 words); also shipped as data/stopwords_en.txt.
inline const std::set<std::string>& default_stopwords()
{
    static const std::set<std::string> words = {
        "a",    "an",   "and",   "are",  "as",   "at",    "be",    "but",  "by",   "for",  "if",
        "in",   "into", "is",    "it",   "no",   "not",   "of",    "on",   "or",   "such", "that",
        "the",  "their", "then", "there", "these", "they", "this", "to",   "was",  "will", "with"};
    return words;
}

/// One word per line; blank lines and lines starting with '#' are ignored.
inline std::set<std::string> load_stopwords(const std::string& path)
{
    std::ifstream in(path);
    if (!in) {
        throw Error("cannot open stopword file " + path);
    }
    std::set<std::string> words;
    std::string line;
    while (std::getline(in, line)) {
        while (!line.empty() && (line.back() == '\r' || line.back() == ' ' || line.back() == '\t')) {
            line.pop_back();
        }
        if (!line.empty() && line.front() != '#') {
            words.insert(line);
        }
    }
    return words;
}

struct AnalyzerConfig {
    bool lowercase = true;
    std::set<std::string> stopwords = default_stopwords();
    Stemmer stem = Stemmer::porter;

    static AnalyzerConfig plain() { return AnalyzerConfig{true, {}, Stemmer::none}; }

    bool operator==(const AnalyzerConfig&) const = default;
};

namespace detail {

/// Private C.UTF-8 ctype locale, so classification never depends on the process-global locale.
inline locale_t utf8_ctype()
{
    static const locale_t loc = [] {
        locale_t l = newlocale(LC_CTYPE_MASK, "C.UTF-8", static_cast<locale_t>(nullptr));
        if (l == static_cast<locale_t>(nullptr)) {
            l = newlocale(LC_CTYPE_MASK, "C.utf8", static_cast<locale_t>(nullptr));
        }
        return l;
    }();
    return loc;
}

inline bool is_alnum(char32_t cp)
{
    if (cp < 0x80) {
        return (cp >= '0' && cp <= '9') || (cp >= 'a' && cp <= 'z') || (cp >= 'A' && cp <= 'Z');
    }
    if (locale_t loc = utf8_ctype(); loc != static_cast<locale_t>(nullptr)) {
        return iswalnum_l(static_cast<wint_t>(cp), loc) != 0;
    }
    return true;
}

inline char32_t to_lower(char32_t cp)
{
    if (cp < 0x80) {
        return (cp >= 'A' && cp <= 'Z') ? cp + ('a' - 'A') : cp;
    }
    if (locale_t loc = utf8_ctype(); loc != static_cast<locale_t>(nullptr)) {
        return static_cast<char32_t>(towlower_l(static_cast<wint_t>(cp), loc));
    }
    return cp;
}

inline bool is_ascii(std::string_view s)
{
    return std::all_of(s.begin(), s.end(), [](char c) { return static_cast<unsigned char>(c) < 0x80; });
}

} // namespace detail

/// Calls `sink(std::string&&)` for every token of `text` after lowercasing, stopword removal and
/// stemming. Tokens are maximal runs of Unicode alphanumerics; ill-formed UTF-8 bytes separate tokens.
template <typename Sink>
void analyze_each(std::string_view text, const AnalyzerConfig& cfg, Sink&& sink)
{
    static const PorterStemmer porter;
    std::string token;
    auto flush = [&] {
        if (token.empty()) {
            return;
        }
        if (cfg.stopwords.count(token) == 0) {
            if (cfg.stem == Stemmer::porter && detail::is_ascii(token)) {
                sink(porter(token));
            } else {
                sink(std::move(token));
            }
        }
        token.clear();
    };
    std::size_t pos = 0;
    while (pos < text.size()) {
        auto cp = utf8::decode(text, pos);
        if (!cp) {
            ++pos;
            flush();
            continue;
        }
        if (detail::is_alnum(*cp)) {
            utf8::append(token, cfg.lowercase ? detail::to_lower(*cp) : *cp);
        } else {
            flush();
        }
    }
    flush();
}

inline std::vector<std::string> analyze(std::string_view text, const AnalyzerConfig& cfg)
{
    std::vector<std::string> tokens;
    analyze_each(text, cfg, [&](std::string&& t) { tokens.push_back(std::move(t)); });
    return tokens;
}

} // namespace seqrank
