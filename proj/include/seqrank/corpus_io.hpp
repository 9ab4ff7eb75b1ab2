#pragma once

// Readers and writers for the on-disk formats the toolkit consumes and emits:
//
//   corpus   TSV  "docId<TAB>text"  or JSONL {"id": ..., "text": ...}
//   topics   TSV  "id<TAB>title"    or "id<TAB>title<TAB>description"
//   qrels    TREC "topicId 0 docId grade"  (any whitespace)
//   runs     TREC "topicId Q0 docId rank score tag", score printed with 6 decimals
//   training TSV  "query<TAB>document<TAB>label"  or MS MARCO triples "query<TAB>pos<TAB>neg"
//
// All readers reject non-UTF-8 input and report 1-based line numbers. Blank lines are skipped.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include <json.hpp>

#include "seqrank/error.hpp"
#include "seqrank/utf8.hpp"

namespace seqrank {

struct Document {
    std::string id;
    std::string text;

    bool operator==(const Document&) const = default;
};

struct Topic {
    std::string id;
    std::string title;
    std::string description;

    bool operator==(const Topic&) const = default;
};

enum class CorpusFormat { tsv, jsonl };
enum class TopicFormat { tsv2, tsv3 };
enum class TrainFormat { labeled, triples };

/// Relevance judgments. Grade 0 entries are kept: they mark judged non-relevant documents.
class QrelSet {
  public:
    using Judgments = std::map<std::string, int>;

    /// Returns false if (topic, doc) was already judged.
    bool insert(const std::string& topic, const std::string& doc, int grade)
    {
        return m_entries[topic].emplace(doc, grade).second;
    }

    std::optional<int> grade(const std::string& topic, const std::string& doc) const
    {
        auto t = m_entries.find(topic);
        if (t == m_entries.end()) {
            return std::nullopt;
        }
        auto d = t->second.find(doc);
        if (d == t->second.end()) {
            return std::nullopt;
        }
        return d->second;
    }

    bool has_topic(const std::string& topic) const { return m_entries.count(topic) != 0; }

    /// Judgments of one topic; empty map for an unknown topic.
    const Judgments& judgments(const std::string& topic) const
    {
        static const Judgments empty;
        auto t = m_entries.find(topic);
        return t == m_entries.end() ? empty : t->second;
    }

    /// Number of documents judged with grade >= 1.
    std::size_t relevant_count(const std::string& topic) const
    {
        const auto& j = judgments(topic);
        return static_cast<std::size_t>(
            std::count_if(j.begin(), j.end(), [](const auto& kv) { return kv.second >= 1; }));
    }

    std::vector<std::string> topics() const
    {
        std::vector<std::string> ids;
        ids.reserve(m_entries.size());
        for (const auto& [id, _] : m_entries) {
            ids.push_back(id);
        }
        return ids;
    }

    std::size_t size() const
    {
        std::size_t n = 0;
        for (const auto& [_, j] : m_entries) {
            n += j.size();
        }
        return n;
    }

  private:
    std::map<std::string, Judgments> m_entries;
};

struct RunEntry {
    std::string doc_id;
    double score = 0.0;
    int rank = 0;

    bool operator==(const RunEntry&) const = default;
};

struct TopicRun {
    std::string topic_id;
    std::vector<RunEntry> entries;
};

/// Ranked lists for a set of topics, in insertion order.
class RunList {
  public:
    RunList() = default;
    explicit RunList(std::string tag) : m_tag(std::move(tag)) {}

    const std::string& tag() const noexcept { return m_tag; }
    void set_tag(std::string tag) { m_tag = std::move(tag); }

    /// Appends a topic (or returns the existing one).
    TopicRun& topic(const std::string& id)
    {
        if (auto it = m_index.find(id); it != m_index.end()) {
            return m_topics[it->second];
        }
        m_index.emplace(id, m_topics.size());
        m_topics.push_back(TopicRun{id, {}});
        return m_topics.back();
    }

    void set(const std::string& id, std::vector<RunEntry> entries) { topic(id).entries = std::move(entries); }

    const TopicRun* find(const std::string& id) const
    {
        auto it = m_index.find(id);
        return it == m_index.end() ? nullptr : &m_topics[it->second];
    }

    const std::vector<TopicRun>& topics() const noexcept { return m_topics; }

    std::size_t entry_count() const
    {
        std::size_t n = 0;
        for (const auto& t : m_topics) {
            n += t.entries.size();
        }
        return n;
    }

  private:
    std::string m_tag;
    std::vector<TopicRun> m_topics;
    std::unordered_map<std::string, std::size_t> m_index;
};

struct TrainInstance {
    enum class Label { positive, negative };

    std::string query_text;
    std::string doc_text;
    Label label = Label::negative;

    bool operator==(const TrainInstance&) const = default;
};

namespace detail {

inline std::vector<std::string_view> split(std::string_view s, char sep)
{
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        auto pos = s.find(sep, start);
        if (pos == std::string_view::npos) {
            out.push_back(s.substr(start));
            return out;
        }
        out.push_back(s.substr(start, pos - start));
        start = pos + 1;
    }
}

inline bool is_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; }

inline std::vector<std::string_view> split_ws(std::string_view s)
{
    std::vector<std::string_view> out;
    std::size_t i = 0;
    while (i < s.size()) {
        while (i < s.size() && is_space(s[i])) {
            ++i;
        }
        std::size_t j = i;
        while (j < s.size() && !is_space(s[j])) {
            ++j;
        }
        if (j > i) {
            out.push_back(s.substr(i, j - i));
        }
        i = j;
    }
    return out;
}

inline bool has_space(std::string_view s) { return std::any_of(s.begin(), s.end(), is_space); }

/// Iterates non-blank lines with 1-based numbers, validating UTF-8 and stripping a trailing CR.
template <typename Fn>
void for_each_line(std::istream& in, Fn&& fn)
{
    std::string line;
    std::size_t number = 0;
    while (std::getline(in, line)) {
        ++number;
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (!utf8::valid(line)) {
            throw ParseError(number, "invalid UTF-8");
        }
        if (line.empty()) {
            continue;
        }
        fn(std::string_view(line), number);
    }
    if (in.bad()) {
        throw Error("I/O error while reading input");
    }
}

template <typename Int>
std::optional<Int> parse_int(std::string_view s)
{
    Int value{};
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
    if (ec != std::errc{} || ptr != s.data() + s.size()) {
        return std::nullopt;
    }
    return value;
}

inline std::optional<double> parse_double(std::string_view s)
{
    double value{};
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
    if (ec != std::errc{} || ptr != s.data() + s.size() || !std::isfinite(value)) {
        return std::nullopt;
    }
    return value;
}

/// Fixed 6-decimal, locale-independent formatting used by run files.
inline std::string format_score(double score)
{
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), score, std::chars_format::fixed, 6);
    if (ec != std::errc{}) {
        throw Error("cannot format score");
    }
    return std::string(buf, ptr);
}

} // namespace detail

inline std::vector<Document> parse_corpus(std::istream& in, CorpusFormat format)
{
    std::vector<Document> docs;
    std::unordered_set<std::string> seen;
    detail::for_each_line(in, [&](std::string_view line, std::size_t number) {
        Document doc;
        if (format == CorpusFormat::tsv) {
            auto cols = detail::split(line, '\t');
            if (cols.size() != 2) {
                throw ParseError(number, "expected 2 tab-separated columns, found " + std::to_string(cols.size()));
            }
            doc.id = std::string(cols[0]);
            doc.text = std::string(cols[1]);
        } else {
            nlohmann::json record;
            try {
                record = nlohmann::json::parse(line);
            } catch (const nlohmann::json::parse_error& e) {
                throw ParseError(number, std::string("invalid JSON: ") + e.what());
            }
            if (!record.is_object() || !record.contains("id") || !record.contains("text") ||
                !record["id"].is_string() || !record["text"].is_string()) {
                throw ParseError(number, "record must be an object with string fields \"id\" and \"text\"");
            }
            doc.id = record["id"].get<std::string>();
            doc.text = record["text"].get<std::string>();
        }
        if (doc.id.empty() || detail::has_space(doc.id)) {
            throw ParseError(number, "document id must be non-empty and contain no whitespace");
        }
        if (!seen.insert(doc.id).second) {
            throw DuplicateIdError(doc.id, number);
        }
        docs.push_back(std::move(doc));
    });
    return docs;
}

inline std::vector<Topic> parse_topics(std::istream& in, TopicFormat format)
{
    std::vector<Topic> topics;
    std::unordered_set<std::string> seen;
    const std::size_t expected = format == TopicFormat::tsv2 ? 2 : 3;
    detail::for_each_line(in, [&](std::string_view line, std::size_t number) {
        auto cols = detail::split(line, '\t');
        if (cols.size() != expected) {
            throw ParseError(number, "expected " + std::to_string(expected) + " tab-separated columns, found " +
                                         std::to_string(cols.size()));
        }
        Topic topic{std::string(cols[0]), std::string(cols[1]), expected == 3 ? std::string(cols[2]) : std::string()};
        if (topic.id.empty()) {
            throw ParseError(number, "empty topic id");
        }
        if (!seen.insert(topic.id).second) {
            throw DuplicateIdError(topic.id, number);
        }
        topics.push_back(std::move(topic));
    });
    return topics;
}

inline QrelSet parse_qrels(std::istream& in)
{
    QrelSet qrels;
    detail::for_each_line(in, [&](std::string_view line, std::size_t number) {
        auto cols = detail::split_ws(line);
        if (cols.empty()) {
            return;
        }
        if (cols.size() != 4) {
            throw ParseError(number, "expected 4 columns, found " + std::to_string(cols.size()));
        }
        auto grade = detail::parse_int<int>(cols[3]);
        if (!grade) {
            throw ParseError(number, "grade is not an integer: '" + std::string(cols[3]) + "'");
        }
        if (*grade < 0) {
            throw ParseError(number, "negative grade");
        }
        if (!qrels.insert(std::string(cols[0]), std::string(cols[2]), *grade)) {
            throw ParseError(number, "duplicate judgment for (" + std::string(cols[0]) + ", " +
                                         std::string(cols[2]) + ")");
        }
    });
    return qrels;
}

/// Checks the RunList invariants; throws Error naming the first violation.
inline void validate_run(const RunList& run)
{
    if (run.tag().empty() || detail::has_space(run.tag())) {
        throw Error("run tag must be non-empty and contain no whitespace");
    }
    for (const auto& t : run.topics()) {
        if (t.topic_id.empty() || detail::has_space(t.topic_id)) {
            throw Error("invalid topic id '" + t.topic_id + "'");
        }
        std::unordered_set<std::string> docs;
        for (std::size_t i = 0; i < t.entries.size(); ++i) {
            const auto& e = t.entries[i];
            if (e.rank != static_cast<int>(i + 1)) {
                throw Error("topic " + t.topic_id + ": ranks must be 1..n in order");
            }
            if (!std::isfinite(e.score)) {
                throw Error("topic " + t.topic_id + ": non-finite score for " + e.doc_id);
            }
            if (i > 0 && e.score > t.entries[i - 1].score) {
                throw Error("topic " + t.topic_id + ": scores increase at rank " + std::to_string(e.rank));
            }
            if (e.doc_id.empty() || detail::has_space(e.doc_id)) {
                throw Error("topic " + t.topic_id + ": invalid doc id '" + e.doc_id + "'");
            }
            if (!docs.insert(e.doc_id).second) {
                throw Error("topic " + t.topic_id + ": duplicate doc id " + e.doc_id);
            }
        }
    }
}

inline void write_run(const RunList& run, std::ostream& out)
{
    validate_run(run);
    std::string buffer;
    for (const auto& t : run.topics()) {
        for (const auto& e : t.entries) {
            buffer.clear();
            buffer += t.topic_id;
            buffer += " Q0 ";
            buffer += e.doc_id;
            buffer += ' ';
            buffer += std::to_string(e.rank);
            buffer += ' ';
            buffer += detail::format_score(e.score);
            buffer += ' ';
            buffer += run.tag();
            buffer += '\n';
            out << buffer;
        }
    }
    if (!out) {
        throw Error("I/O error while writing run");
    }
}

inline RunList parse_run(std::istream& in)
{
    RunList run;
    bool tagged = false;
    std::unordered_map<std::string, std::unordered_set<std::string>> seen;
    detail::for_each_line(in, [&](std::string_view line, std::size_t number) {
        auto cols = detail::split_ws(line);
        if (cols.empty()) {
            return;
        }
        if (cols.size() != 6) {
            throw ParseError(number, "expected 6 columns, found " + std::to_string(cols.size()));
        }
        auto rank = detail::parse_int<int>(cols[3]);
        if (!rank || *rank < 1) {
            throw ParseError(number, "rank must be a positive integer: '" + std::string(cols[3]) + "'");
        }
        auto score = detail::parse_double(cols[4]);
        if (!score) {
            throw ParseError(number, "score is not a finite number: '" + std::string(cols[4]) + "'");
        }
        if (!tagged) {
            run.set_tag(std::string(cols[5]));
            tagged = true;
        } else if (cols[5] != run.tag()) {
            throw ParseError(number, "mixed run tags");
        }
        std::string topic_id(cols[0]);
        auto& topic = run.topic(topic_id);
        if (*rank != static_cast<int>(topic.entries.size()) + 1) {
            throw ParseError(number, "ranks for topic " + topic_id + " must be 1..n in order");
        }
        if (!topic.entries.empty() && *score > topic.entries.back().score) {
            throw ParseError(number, "scores must be non-increasing with rank");
        }
        std::string doc_id(cols[2]);
        if (!seen[topic_id].insert(doc_id).second) {
            throw ParseError(number, "duplicate doc id " + doc_id + " for topic " + topic_id);
        }
        topic.entries.push_back(RunEntry{std::move(doc_id), *score, *rank});
    });
    return run;
}

namespace detail {

inline std::optional<TrainInstance::Label> parse_label(std::string_view s)
{
    if (s == "1" || s == "positive" || s == "true") {
        return TrainInstance::Label::positive;
    }
    if (s == "0" || s == "negative" || s == "false") {
        return TrainInstance::Label::negative;
    }
    return std::nullopt;
}

} // namespace detail

/// `labeled` rows carry a label column ("1"/"0", "positive"/"negative", "true"/"false").
/// `triples` rows (query, positive doc, negative doc) expand to two instances.
inline std::vector<TrainInstance> parse_train_instances(std::istream& in, TrainFormat format)
{
    std::vector<TrainInstance> out;
    detail::for_each_line(in, [&](std::string_view line, std::size_t number) {
        auto cols = detail::split(line, '\t');
        if (cols.size() != 3) {
            throw ParseError(number, "expected 3 tab-separated columns, found " + std::to_string(cols.size()));
        }
        if (format == TrainFormat::triples) {
            out.push_back({std::string(cols[0]), std::string(cols[1]), TrainInstance::Label::positive});
            out.push_back({std::string(cols[0]), std::string(cols[2]), TrainInstance::Label::negative});
            return;
        }
        auto label = detail::parse_label(cols[2]);
        if (!label) {
            throw ParseError(number, "unknown label '" + std::string(cols[2]) + "'");
        }
        out.push_back({std::string(cols[0]), std::string(cols[1]), *label});
    });
    return out;
}

/// Writes labeled TSV with the given label words, the layout the fine-tuning utility reads.
inline void write_train_instances(const std::vector<TrainInstance>& instances, std::ostream& out,
                                  std::string_view positive_word = "true", std::string_view negative_word = "false")
{
    for (const auto& inst : instances) {
        if (inst.query_text.find_first_of("\t\n") != std::string::npos ||
            inst.doc_text.find_first_of("\t\n") != std::string::npos) {
            throw Error("training text contains a tab or newline");
        }
        out << inst.query_text << '\t' << inst.doc_text << '\t'
            << (inst.label == TrainInstance::Label::positive ? positive_word : negative_word) << '\n';
    }
    if (!out) {
        throw Error("I/O error while writing training instances");
    }
}

} // namespace seqrank
