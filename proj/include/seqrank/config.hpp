#pragma once

// Pipeline configuration and its TOML-style file form.
//
// Accepted syntax is the flat key/value subset of TOML:
//
//   # comment
//   corpus_path   = "data/corpus.tsv"
//   k             = 1000
//   [bm25]
//   k1 = 0.9          # becomes key "bm25.k1"
//
// Strings may be double-quoted (with \" \\ \n \t escapes) or bare words.

#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "seqrank/analyzer.hpp"
#include "seqrank/bm25.hpp"
#include "seqrank/corpus_io.hpp"
#include "seqrank/error.hpp"
#include "seqrank/remote_scorer.hpp"
#include "seqrank/reranking.hpp"
#include "seqrank/rm3.hpp"

namespace seqrank {

enum class FirstStage { bm25, bm25_rm3 };
enum class ScorerKind { overlap, remote };
enum class QueryField { title, description, auto_ };

/// Everything one end-to-end run depends on.
struct PipelineConfig {
    std::string corpus_path;
    CorpusFormat corpus_format = CorpusFormat::tsv;
    std::string topics_path;
    TopicFormat topics_format = TopicFormat::tsv2;
    std::string qrels_path;
    std::string index_path; // optional prebuilt SRIX index
    bool evaluate = true;

    std::string stopwords = "default"; // "default", "none", or a file path
    Stemmer stem = Stemmer::porter;
    bool lowercase = true;

    FirstStage first_stage = FirstStage::bm25;
    std::size_t k = default_search_depth;
    Bm25Params bm25;
    Rm3Params rm3;

    ScorerKind scorer = ScorerKind::overlap;
    RemoteOptions remote;
    TargetWordConfig target;
    WindowConfig window;
    QueryField query_field = QueryField::auto_;

    std::uint64_t seed = 42;
    std::string output_dir;
    unsigned threads = 1;
    std::size_t bonferroni_comparisons = 1;

    AnalyzerConfig analyzer() const
    {
        AnalyzerConfig cfg;
        cfg.lowercase = lowercase;
        cfg.stem = stem;
        if (stopwords == "default") {
            cfg.stopwords = default_stopwords();
        } else if (stopwords == "none") {
            cfg.stopwords.clear();
        } else {
            cfg.stopwords = load_stopwords(stopwords);
        }
        return cfg;
    }

    /// Checks everything that can be checked without reading data files.
    void validate() const
    {
        if (corpus_path.empty() && index_path.empty()) {
            throw ConfigError("corpus_path is required");
        }
        if (topics_path.empty()) {
            throw ConfigError("topics_path is required");
        }
        if (evaluate && qrels_path.empty()) {
            throw ConfigError("evaluation requested but qrels_path is not set");
        }
        if (k < 1) {
            throw ConfigError("k must be >= 1");
        }
        if (threads < 1) {
            throw ConfigError("threads must be >= 1");
        }
        if (bonferroni_comparisons < 1) {
            throw ConfigError("bonferroni_comparisons must be >= 1");
        }
        bm25.validate();
        rm3.validate();
        window.validate();
        target.validate();
        if (scorer == ScorerKind::remote) {
            remote.validate();
        }
    }
};

inline std::string to_string(CorpusFormat f) { return f == CorpusFormat::tsv ? "tsv" : "jsonl"; }
inline std::string to_string(TopicFormat f) { return f == TopicFormat::tsv2 ? "tsv2" : "tsv3"; }
inline std::string to_string(FirstStage f) { return f == FirstStage::bm25 ? "bm25" : "bm25_rm3"; }
inline std::string to_string(ScorerKind s) { return s == ScorerKind::overlap ? "overlap" : "remote"; }
inline std::string to_string(Stemmer s) { return s == Stemmer::porter ? "porter" : "none"; }
inline std::string to_string(QueryField q)
{
    switch (q) {
        case QueryField::title: return "title";
        case QueryField::description: return "description";
        default: return "auto";
    }
}

namespace detail {

template <typename Enum>
Enum parse_enum(const std::string& key, const std::string& value,
                std::initializer_list<std::pair<std::string_view, Enum>> choices)
{
    std::string allowed;
    for (const auto& [name, e] : choices) {
        if (value == name) {
            return e;
        }
        allowed += (allowed.empty() ? "" : ", ") + std::string(name);
    }
    throw ConfigError(key + ": expected one of {" + allowed + "}, got '" + value + "'");
}

} // namespace detail

inline CorpusFormat parse_corpus_format(const std::string& v)
{
    return detail::parse_enum<CorpusFormat>("corpus_format", v, {{"tsv", CorpusFormat::tsv}, {"jsonl", CorpusFormat::jsonl}});
}
inline TopicFormat parse_topic_format(const std::string& v)
{
    return detail::parse_enum<TopicFormat>("topics_format", v, {{"tsv2", TopicFormat::tsv2}, {"tsv3", TopicFormat::tsv3}});
}
inline FirstStage parse_first_stage(const std::string& v)
{
    return detail::parse_enum<FirstStage>("first_stage", v, {{"bm25", FirstStage::bm25}, {"bm25_rm3", FirstStage::bm25_rm3}});
}
inline ScorerKind parse_scorer_kind(const std::string& v)
{
    return detail::parse_enum<ScorerKind>("scorer", v, {{"overlap", ScorerKind::overlap}, {"remote", ScorerKind::remote}});
}
inline Stemmer parse_stemmer(const std::string& v)
{
    return detail::parse_enum<Stemmer>("stem", v, {{"porter", Stemmer::porter}, {"none", Stemmer::none}});
}
inline QueryField parse_query_field(const std::string& v)
{
    return detail::parse_enum<QueryField>(
        "query_field", v,
        {{"title", QueryField::title}, {"description", QueryField::description}, {"auto", QueryField::auto_}});
}

/// Parses the key/value file body into "section.key" -> raw string value.
inline std::map<std::string, std::string> parse_key_values(std::istream& in)
{
    std::map<std::string, std::string> out;
    std::string section;
    std::string line;
    std::size_t number = 0;
    auto trim = [](std::string_view s) {
        while (!s.empty() && detail::is_space(s.front())) {
            s.remove_prefix(1);
        }
        while (!s.empty() && detail::is_space(s.back())) {
            s.remove_suffix(1);
        }
        return s;
    };
    while (std::getline(in, line)) {
        ++number;
        std::string_view view = trim(line);
        if (view.empty() || view.front() == '#') {
            continue;
        }
        if (view.front() == '[') {
            if (view.back() != ']') {
                throw ParseError(number, "unterminated section header");
            }
            section = std::string(trim(view.substr(1, view.size() - 2)));
            continue;
        }
        auto eq = view.find('=');
        if (eq == std::string_view::npos) {
            throw ParseError(number, "expected key = value");
        }
        std::string key(trim(view.substr(0, eq)));
        if (key.empty()) {
            throw ParseError(number, "empty key");
        }
        std::string_view raw = trim(view.substr(eq + 1));
        std::string value;
        if (!raw.empty() && raw.front() == '"') {
            std::size_t i = 1;
            bool closed = false;
            for (; i < raw.size(); ++i) {
                char c = raw[i];
                if (c == '\\' && i + 1 < raw.size()) {
                    char e = raw[++i];
                    value += e == 'n' ? '\n' : e == 't' ? '\t' : e;
                } else if (c == '"') {
                    closed = true;
                    ++i;
                    break;
                } else {
                    value += c;
                }
            }
            if (!closed) {
                throw ParseError(number, "unterminated string");
            }
            auto rest = trim(raw.substr(i));
            if (!rest.empty() && rest.front() != '#') {
                throw ParseError(number, "unexpected text after string value");
            }
        } else {
            auto hash = raw.find('#');
            value = std::string(trim(raw.substr(0, hash)));
        }
        std::string full = section.empty() ? key : section + "." + key;
        if (!out.emplace(full, value).second) {
            throw ParseError(number, "duplicate key '" + full + "'");
        }
    }
    return out;
}

namespace detail {

inline std::uint64_t parse_u64(const std::string& key, const std::string& v)
{
    auto n = parse_int<std::uint64_t>(v);
    if (!n) {
        throw ConfigError(key + ": expected a non-negative integer, got '" + v + "'");
    }
    return *n;
}

inline double parse_real(const std::string& key, const std::string& v)
{
    auto d = parse_double(v);
    if (!d) {
        throw ConfigError(key + ": expected a number, got '" + v + "'");
    }
    return *d;
}

inline bool parse_bool(const std::string& key, const std::string& v)
{
    if (v == "true") {
        return true;
    }
    if (v == "false") {
        return false;
    }
    throw ConfigError(key + ": expected true or false, got '" + v + "'");
}

} // namespace detail

/// Sets one field by its key name. Unknown keys are rejected.
inline void apply_config_value(PipelineConfig& cfg, const std::string& key, const std::string& v)
{
    using namespace detail;
    if (key == "corpus_path") cfg.corpus_path = v;
    else if (key == "corpus_format") cfg.corpus_format = parse_corpus_format(v);
    else if (key == "topics_path") cfg.topics_path = v;
    else if (key == "topics_format") cfg.topics_format = parse_topic_format(v);
    else if (key == "qrels_path") cfg.qrels_path = v;
    else if (key == "index_path") cfg.index_path = v;
    else if (key == "evaluate") cfg.evaluate = parse_bool(key, v);
    else if (key == "analyzer.stopwords") cfg.stopwords = v;
    else if (key == "analyzer.stem") cfg.stem = parse_stemmer(v);
    else if (key == "analyzer.lowercase") cfg.lowercase = parse_bool(key, v);
    else if (key == "first_stage") cfg.first_stage = parse_first_stage(v);
    else if (key == "k") cfg.k = parse_u64(key, v);
    else if (key == "bm25.k1") cfg.bm25.k1 = parse_real(key, v);
    else if (key == "bm25.b") cfg.bm25.b = parse_real(key, v);
    else if (key == "rm3.fb_docs") cfg.rm3.fb_docs = parse_u64(key, v);
    else if (key == "rm3.fb_terms") cfg.rm3.fb_terms = parse_u64(key, v);
    else if (key == "rm3.original_weight") cfg.rm3.original_weight = parse_real(key, v);
    else if (key == "scorer") cfg.scorer = parse_scorer_kind(v);
    else if (key == "remote.endpoint") cfg.remote.endpoint = v;
    else if (key == "remote.batch_size") cfg.remote.batch_size = parse_u64(key, v);
    else if (key == "remote.timeout") cfg.remote.timeout_seconds = parse_real(key, v);
    else if (key == "remote.retries") cfg.remote.retries = static_cast<unsigned>(parse_u64(key, v));
    else if (key == "target.positive") cfg.target.positive = v;
    else if (key == "target.negative") cfg.target.negative = v;
    else if (key == "window.size") cfg.window.size = parse_u64(key, v);
    else if (key == "window.stride") cfg.window.stride = parse_u64(key, v);
    else if (key == "query_field") cfg.query_field = parse_query_field(v);
    else if (key == "seed") cfg.seed = parse_u64(key, v);
    else if (key == "output_dir") cfg.output_dir = v;
    else if (key == "threads") cfg.threads = static_cast<unsigned>(parse_u64(key, v));
    else if (key == "bonferroni_comparisons") cfg.bonferroni_comparisons = parse_u64(key, v);
    else throw ConfigError("unknown configuration key '" + key + "'");
}

inline PipelineConfig load_config(std::istream& in, PipelineConfig cfg = {})
{
    std::map<std::string, std::string> kv;
    try {
        kv = parse_key_values(in);
    } catch (const ParseError& e) {
        throw ConfigError(std::string("config ") + e.what());
    }
    for (const auto& [key, value] : kv) {
        apply_config_value(cfg, key, value);
    }
    return cfg;
}

inline PipelineConfig load_config_file(const std::string& path, PipelineConfig cfg = {})
{
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot open config file " + path);
    }
    return load_config(in, std::move(cfg));
}

namespace detail {

inline std::string quote(const std::string& s)
{
    std::string out = "\"";
    for (char c : s) {
        if (c == '"' || c == '\\') {
            out += '\\';
            out += c;
        } else if (c == '\n') {
            out += "\\n";
        } else if (c == '\t') {
            out += "\\t";
        } else {
            out += c;
        }
    }
    return out + "\"";
}

inline std::string real(double v)
{
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return ec == std::errc{} ? std::string(buf, ptr) : std::string("nan");
}

} // namespace detail

/// Serializes every field; load_config(save_config(c)) reproduces c.
inline void save_config(const PipelineConfig& c, std::ostream& out)
{
    using detail::quote;
    using detail::real;
    out << "corpus_path = " << quote(c.corpus_path) << '\n'
        << "corpus_format = " << quote(to_string(c.corpus_format)) << '\n'
        << "topics_path = " << quote(c.topics_path) << '\n'
        << "topics_format = " << quote(to_string(c.topics_format)) << '\n'
        << "qrels_path = " << quote(c.qrels_path) << '\n'
        << "index_path = " << quote(c.index_path) << '\n'
        << "evaluate = " << (c.evaluate ? "true" : "false") << '\n'
        << "first_stage = " << quote(to_string(c.first_stage)) << '\n'
        << "k = " << c.k << '\n'
        << "scorer = " << quote(to_string(c.scorer)) << '\n'
        << "query_field = " << quote(to_string(c.query_field)) << '\n'
        << "seed = " << c.seed << '\n'
        << "output_dir = " << quote(c.output_dir) << '\n'
        << "threads = " << c.threads << '\n'
        << "bonferroni_comparisons = " << c.bonferroni_comparisons << '\n'
        << "\n[analyzer]\n"
        << "stopwords = " << quote(c.stopwords) << '\n'
        << "stem = " << quote(to_string(c.stem)) << '\n'
        << "lowercase = " << (c.lowercase ? "true" : "false") << '\n'
        << "\n[bm25]\n"
        << "k1 = " << real(c.bm25.k1) << '\n'
        << "b = " << real(c.bm25.b) << '\n'
        << "\n[rm3]\n"
        << "fb_docs = " << c.rm3.fb_docs << '\n'
        << "fb_terms = " << c.rm3.fb_terms << '\n'
        << "original_weight = " << real(c.rm3.original_weight) << '\n'
        << "\n[remote]\n"
        << "endpoint = " << quote(c.remote.endpoint) << '\n'
        << "batch_size = " << c.remote.batch_size << '\n'
        << "timeout = " << real(c.remote.timeout_seconds) << '\n'
        << "retries = " << c.remote.retries << '\n'
        << "\n[target]\n"
        << "positive = " << quote(c.target.positive) << '\n'
        << "negative = " << quote(c.target.negative) << '\n'
        << "\n[window]\n"
        << "size = " << c.window.size << '\n'
        << "stride = " << c.window.stride << '\n';
}

} // namespace seqrank
