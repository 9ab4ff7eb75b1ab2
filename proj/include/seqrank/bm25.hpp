#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "seqrank/analyzer.hpp"
#include "seqrank/corpus_io.hpp"
#include "seqrank/error.hpp"
#include "seqrank/index.hpp"

namespace seqrank {

/// Lucene-style BM25. Defaults are Anserini's (k1 = 0.9, b = 0.4).
struct Bm25Params {
    double k1 = 0.9;
    double b = 0.4;

    void validate() const
    {
        if (!(k1 > 0.0) || !std::isfinite(k1)) {
            throw ConfigError("bm25 k1 must be > 0");
        }
        if (!(b >= 0.0 && b <= 1.0)) {
            throw ConfigError("bm25 b must lie in [0, 1]");
        }
    }
};

inline constexpr std::size_t default_search_depth = 1000;

/// idf(t) = ln(1 + (N - df + 0.5) / (df + 0.5)); always positive for 0 < df <= N.
inline double bm25_idf(std::size_t df, std::size_t n_docs)
{
    const double d = static_cast<double>(df);
    return std::log(1.0 + (static_cast<double>(n_docs) - d + 0.5) / (d + 0.5));
}

inline double bm25_term_score(const Bm25Params& p, double idf, std::uint32_t tf, std::uint32_t dl, double avgdl)
{
    const double f = static_cast<double>(tf);
    const double norm = avgdl > 0.0 ? static_cast<double>(dl) / avgdl : 0.0;
    return idf * f * (p.k1 + 1.0) / (f + p.k1 * (1.0 - p.b + p.b * norm));
}

/// Sum of per-term BM25 contributions. Repeated query terms count once per occurrence;
/// terms missing from the vocabulary contribute nothing.
inline double bm25_score(const InvertedIndex& index, const Bm25Params& params,
                         const std::vector<std::string>& query_terms, std::string_view doc_id)
{
    auto doc = index.doc_number(doc_id);
    if (!doc) {
        throw Error("unknown document id '" + std::string(doc_id) + "'");
    }
    const auto dl = index.doc_length(*doc);
    double score = 0.0;
    for (const auto& term : query_terms) {
        auto df = index.df(term);
        if (df == 0) {
            continue;
        }
        auto tf = index.tf(term, *doc);
        if (tf == 0) {
            continue;
        }
        score += bm25_term_score(params, bm25_idf(df, index.num_docs()), tf, dl, index.avgdl());
    }
    return score;
}

/// Positive term weights, e.g. the output of RM3 expansion.
struct WeightedQuery {
    std::map<std::string, double> weights;
    /// False when expansion fell back to the original query (no feedback documents).
    bool feedback_applied = false;

    void validate() const
    {
        if (weights.empty()) {
            throw Error("weighted query has no terms");
        }
        for (const auto& [term, w] : weights) {
            if (!std::isfinite(w) || !(w > 0.0)) {
                throw Error("weighted query term '" + term + "' has non-positive weight");
            }
        }
    }
};

namespace detail {

struct WeightedTerm {
    std::uint32_t term;
    double weight;
};

/// Term-at-a-time accumulation, then top-k by (score desc, docId asc). Only docs with score > 0.
inline std::vector<RunEntry> search_terms(const InvertedIndex& index, const Bm25Params& params,
                                          const std::vector<WeightedTerm>& terms, std::size_t k, bool weighted)
{
    if (k == 0) {
        throw ConfigError("search depth k must be >= 1");
    }
    params.validate();
    thread_local std::vector<double> acc;
    thread_local std::vector<std::uint32_t> touched;
    acc.assign(index.num_docs(), 0.0);
    touched.clear();
    const double avgdl = index.avgdl();
    for (const auto& wt : terms) {
        auto list = index.postings(wt.term);
        const double idf = bm25_idf(list.size(), index.num_docs());
        for (const auto& p : list) {
            double contrib = bm25_term_score(params, idf, p.tf, index.doc_length(p.doc), avgdl);
            if (weighted) {
                contrib *= wt.weight;
            }
            if (acc[p.doc] == 0.0) {
                touched.push_back(p.doc);
            }
            acc[p.doc] += contrib;
        }
    }
    struct Hit {
        double score;
        std::uint32_t doc;
    };
    std::vector<Hit> hits;
    hits.reserve(touched.size());
    for (auto d : touched) {
        if (acc[d] > 0.0) {
            hits.push_back({acc[d], d});
        }
    }
    auto better = [&](const Hit& a, const Hit& b) {
        if (a.score != b.score) {
            return a.score > b.score;
        }
        return index.doc_id(a.doc) < index.doc_id(b.doc);
    };
    if (hits.size() > k) {
        std::nth_element(hits.begin(), hits.begin() + static_cast<std::ptrdiff_t>(k), hits.end(), better);
        hits.resize(k);
    }
    std::sort(hits.begin(), hits.end(), better);
    std::vector<RunEntry> out;
    out.reserve(hits.size());
    for (std::size_t i = 0; i < hits.size(); ++i) {
        out.push_back({index.doc_id(hits[i].doc), hits[i].score, static_cast<int>(i + 1)});
    }
    return out;
}

} // namespace detail

/// Scores analyzed `query_terms` against the whole index.
inline std::vector<RunEntry> search_terms(const InvertedIndex& index, const Bm25Params& params,
                                          const std::vector<std::string>& query_terms,
                                          std::size_t k = default_search_depth)
{
    std::vector<detail::WeightedTerm> terms;
    for (const auto& t : query_terms) {
        if (auto id = index.term_id(t)) {
            terms.push_back({*id, 1.0});
        }
    }
    return detail::search_terms(index, params, terms, k, false);
}

inline std::vector<RunEntry> search(const InvertedIndex& index, const Bm25Params& params, const AnalyzerConfig& cfg,
                                    std::string_view query_text, std::size_t k = default_search_depth)
{
    return search_terms(index, params, analyze(query_text, cfg), k);
}

/// Uses the analyzer the index was built with.
inline std::vector<RunEntry> search(const InvertedIndex& index, const Bm25Params& params,
                                    std::string_view query_text, std::size_t k = default_search_depth)
{
    return search(index, params, index.analyzer(), query_text, k);
}

/// Scores sum_w weight(w) * bm25(w, d). Weighted terms are already analyzed.
inline std::vector<RunEntry> search_weighted(const InvertedIndex& index, const Bm25Params& params,
                                             const WeightedQuery& query, std::size_t k = default_search_depth)
{
    query.validate();
    std::vector<detail::WeightedTerm> terms;
    for (const auto& [term, w] : query.weights) {
        if (auto id = index.term_id(term)) {
            terms.push_back({*id, w});
        }
    }
    return detail::search_terms(index, params, terms, k, true);
}

} // namespace seqrank
