#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "seqrank/analyzer.hpp"
#include "seqrank/corpus_io.hpp"
#include "seqrank/error.hpp"

namespace seqrank {

/// The two output words whose first-step logits are compared. Default: "true" / "false".
struct TargetWordConfig {
    std::string positive = "true";
    std::string negative = "false";

    void validate() const
    {
        if (positive.empty() || negative.empty()) {
            throw ConfigError("target words must be non-empty");
        }
        if (positive == negative) {
            throw ConfigError("positive and negative target words must differ");
        }
    }

    bool operator==(const TargetWordConfig&) const = default;
};

/// Probability of the positive word under a softmax restricted to the two target logits,
/// evaluated as 1 / (1 + exp(neg - pos)) without overflow.
inline double relevance_prob(double logit_pos, double logit_neg)
{
    if (!std::isfinite(logit_pos) || !std::isfinite(logit_neg)) {
        throw ScorerError("non-finite logit");
    }
    const double d = logit_neg - logit_pos;
    if (d > 0.0) {
        const double e = std::exp(-d);
        return e / (1.0 + e);
    }
    return 1.0 / (1.0 + std::exp(d));
}

struct ScoreRecord {
    double logit_pos = 0.0;
    double logit_neg = 0.0;
    double prob = 0.5;

    static ScoreRecord from_logits(double pos, double neg) { return {pos, neg, relevance_prob(pos, neg)}; }
};

/// Model input: "Query: <q> Document: <d> Relevant:". Both texts are inserted verbatim.
inline std::string render_prompt(std::string_view query, std::string_view document)
{
    std::string out;
    out.reserve(query.size() + document.size() + 29);
    out += "Query: ";
    out += query;
    out += " Document: ";
    out += document;
    out += " Relevant:";
    return out;
}

namespace detail {

inline bool is_blank(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; }

inline std::string_view trim(std::string_view s)
{
    while (!s.empty() && is_blank(s.front())) {
        s.remove_prefix(1);
    }
    while (!s.empty() && is_blank(s.back())) {
        s.remove_suffix(1);
    }
    return s;
}

} // namespace detail

/// Splits after '.', '!' or '?' when followed by whitespace or end of text.
/// Segments are trimmed and empty ones dropped.
inline std::vector<std::string> split_sentences(std::string_view text)
{
    std::vector<std::string> out;
    auto emit = [&](std::string_view seg) {
        seg = detail::trim(seg);
        if (!seg.empty()) {
            out.emplace_back(seg);
        }
    };
    std::size_t start = 0;
    for (std::size_t i = 0; i < text.size(); ++i) {
        char c = text[i];
        if ((c == '.' || c == '!' || c == '?') && (i + 1 == text.size() || detail::is_blank(text[i + 1]))) {
            emit(text.substr(start, i + 1 - start));
            start = i + 1;
        }
    }
    emit(text.substr(start));
    return out;
}

struct WindowConfig {
    std::size_t size = 10;
    std::size_t stride = 5;

    void validate() const
    {
        if (size < 1 || stride < 1 || stride > size) {
            throw ConfigError("window requires size >= 1 and 1 <= stride <= size");
        }
    }
};

struct Passage {
    std::string doc_id;
    std::size_t index = 0;
    std::string text;
    std::size_t first_sentence = 0; // inclusive
    std::size_t last_sentence = 0;  // inclusive
};

/// Number of windows make_passages produces for `n` sentences.
inline std::size_t window_count(std::size_t n, const WindowConfig& w)
{
    if (n == 0) {
        return 0;
    }
    const std::size_t rest = n > w.size ? n - w.size : 0;
    return 1 + (rest + w.stride - 1) / w.stride;
}

/// Sliding windows starting at 0, stride, 2*stride, ...; the last window may be partial and
/// generation stops once a window reaches the final sentence. Sentences are joined with one space.
inline std::vector<Passage> make_passages(const std::vector<std::string>& sentences, const WindowConfig& w = {},
                                          const std::string& doc_id = {})
{
    w.validate();
    std::vector<Passage> out;
    const std::size_t n = sentences.size();
    for (std::size_t start = 0; start < n; start += w.stride) {
        const std::size_t last = std::min(n, start + w.size) - 1;
        Passage p{doc_id, out.size(), {}, start, last};
        for (std::size_t i = start; i <= last; ++i) {
            if (i > start) {
                p.text += ' ';
            }
            p.text += sentences[i];
        }
        out.push_back(std::move(p));
        if (last == n - 1) {
            break;
        }
    }
    return out;
}

struct QueryPassage {
    std::string query;
    std::string passage;
};

struct LogitPair {
    double pos = 0.0;
    double neg = 0.0;

    bool operator==(const LogitPair&) const = default;
};

/// Produces the two target-word logits for each (query, passage) pair.
/// Results are index-aligned with the input and deterministic for fixed inputs.
class Scorer {
  public:
    virtual ~Scorer() = default;

    virtual std::vector<LogitPair> score_batch(std::span<const QueryPassage> pairs, const TargetWordConfig& target) = 0;

    /// Whether score_batch may be called from several threads at once.
    virtual bool concurrent_safe() const noexcept { return false; }
};

/// Query-term overlap v = |terms(q) & terms(p)| / |terms(q)|, returned as logits (v, 1 - v).
inline LogitPair overlap_score(std::string_view query, std::string_view passage, const AnalyzerConfig& cfg)
{
    std::set<std::string> q;
    analyze_each(query, cfg, [&](std::string&& t) { q.insert(std::move(t)); });
    if (q.empty()) {
        throw ScorerError("query '" + std::string(query) + "' is empty after analysis");
    }
    std::unordered_set<std::string> p;
    analyze_each(passage, cfg, [&](std::string&& t) { p.insert(std::move(t)); });
    std::size_t hit = 0;
    for (const auto& t : q) {
        hit += p.count(t);
    }
    const double v = static_cast<double>(hit) / static_cast<double>(q.size());
    return {v, 1.0 - v};
}

/// Deterministic lexical stand-in for a model; ignores the target words.
class OverlapScorer final : public Scorer {
  public:
    explicit OverlapScorer(AnalyzerConfig cfg = {}) : m_cfg(std::move(cfg)) {}

    std::vector<LogitPair> score_batch(std::span<const QueryPassage> pairs, const TargetWordConfig&) override
    {
        std::vector<LogitPair> out;
        out.reserve(pairs.size());
        for (const auto& qp : pairs) {
            out.push_back(overlap_score(qp.query, qp.passage, m_cfg));
        }
        return out;
    }

    bool concurrent_safe() const noexcept override { return true; }

  private:
    AnalyzerConfig m_cfg;
};

struct DocumentScore {
    ScoreRecord record;
    std::size_t best_passage = 0;
    std::size_t passage_count = 0;
};

/// MaxP: scores every window of the document in one batch and keeps the most probable one
/// (lowest passage index on ties).
inline DocumentScore score_document(const Document& doc, std::string_view query, Scorer& scorer,
                                    const TargetWordConfig& target, const WindowConfig& window = {})
{
    auto passages = make_passages(split_sentences(doc.text), window, doc.id);
    if (passages.empty()) {
        if (doc.text.empty()) {
            throw ScorerError("document " + doc.id + " has no text to score");
        }
        passages.push_back(Passage{doc.id, 0, doc.text, 0, 0});
    }
    std::vector<QueryPassage> batch;
    batch.reserve(passages.size());
    for (const auto& p : passages) {
        batch.push_back({std::string(query), p.text});
    }
    std::vector<LogitPair> logits;
    try {
        logits = scorer.score_batch(batch, target);
    } catch (const std::exception& e) {
        throw ScorerError("scoring document " + doc.id + " (" + std::to_string(passages.size()) +
                          " passages) failed: " + e.what());
    }
    if (logits.size() != passages.size()) {
        throw ScorerError("scorer returned " + std::to_string(logits.size()) + " results for " +
                          std::to_string(passages.size()) + " passages of document " + doc.id);
    }
    DocumentScore best;
    best.passage_count = passages.size();
    for (std::size_t i = 0; i < logits.size(); ++i) {
        if (!std::isfinite(logits[i].pos) || !std::isfinite(logits[i].neg)) {
            throw ScorerError("non-finite logits for document " + doc.id + " passage " + std::to_string(i));
        }
        auto rec = ScoreRecord::from_logits(logits[i].pos, logits[i].neg);
        if (i == 0 || rec.prob > best.record.prob) {
            best.record = rec;
            best.best_passage = i;
        }
    }
    return best;
}

/// Resolves document ids to documents; nullptr when unknown.
using CorpusLookup = std::function<const Document*(const std::string&)>;

class DocumentStore {
  public:
    DocumentStore() = default;
    explicit DocumentStore(std::vector<Document> docs) : m_docs(std::move(docs))
    {
        m_index.reserve(m_docs.size());
        for (std::size_t i = 0; i < m_docs.size(); ++i) {
            if (!m_index.emplace(m_docs[i].id, i).second) {
                throw DuplicateIdError(m_docs[i].id, i + 1);
            }
        }
    }

    const Document* find(const std::string& id) const
    {
        auto it = m_index.find(id);
        return it == m_index.end() ? nullptr : &m_docs[it->second];
    }

    const std::vector<Document>& documents() const noexcept { return m_docs; }

    CorpusLookup lookup() const
    {
        return [this](const std::string& id) { return find(id); };
    }

  private:
    std::vector<Document> m_docs;
    std::unordered_map<std::string, std::size_t> m_index;
};

/// Reorders one topic's candidates by relevance probability (desc), docId ascending on ties.
/// Output scores are the probabilities; ranks are reassigned 1..n.
inline std::vector<RunEntry> rerank(const std::vector<RunEntry>& candidates, std::string_view query,
                                    const CorpusLookup& corpus, Scorer& scorer, const TargetWordConfig& target,
                                    const WindowConfig& window = {})
{
    target.validate();
    window.validate();
    std::vector<const Document*> docs;
    docs.reserve(candidates.size());
    std::vector<std::string> missing;
    std::unordered_set<std::string> seen;
    for (const auto& c : candidates) {
        if (!seen.insert(c.doc_id).second) {
            throw Error("duplicate candidate " + c.doc_id);
        }
        const Document* d = corpus(c.doc_id);
        if (d == nullptr) {
            missing.push_back(c.doc_id);
        }
        docs.push_back(d);
    }
    if (!missing.empty()) {
        std::string list;
        for (const auto& id : missing) {
            list += (list.empty() ? "" : ", ") + id;
        }
        throw Error("candidate documents not found in corpus: " + list);
    }

    struct Scored {
        const std::string* id;
        double prob;
    };
    std::vector<Scored> scored;
    scored.reserve(docs.size());
    for (const auto* d : docs) {
        scored.push_back({&d->id, score_document(*d, query, scorer, target, window).record.prob});
    }
    std::sort(scored.begin(), scored.end(), [](const Scored& a, const Scored& b) {
        return a.prob != b.prob ? a.prob > b.prob : *a.id < *b.id;
    });
    std::vector<RunEntry> out;
    out.reserve(scored.size());
    for (std::size_t i = 0; i < scored.size(); ++i) {
        out.push_back({*scored[i].id, scored[i].prob, static_cast<int>(i + 1)});
    }
    return out;
}

} // namespace seqrank
