#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "seqrank/bm25.hpp"

namespace seqrank {

/// RM3 defaults follow Anserini: 10 feedback docs, 10 feedback terms, original weight 0.5.
struct Rm3Params {
    std::size_t fb_docs = 10;
    std::size_t fb_terms = 10;
    double original_weight = 0.5;

    void validate() const
    {
        if (fb_docs < 1 || fb_terms < 1) {
            throw ConfigError("rm3 fb_docs and fb_terms must be >= 1");
        }
        if (!(original_weight >= 0.0 && original_weight <= 1.0)) {
            throw ConfigError("rm3 original_weight must lie in [0, 1]");
        }
    }
};

/// RM1 relevance model over the top `fb_docs` BM25 hits, truncated to `fb_terms` terms
/// and renormalized. Empty when the query retrieves nothing.
inline std::map<std::string, double> relevance_model(const InvertedIndex& index, const Bm25Params& params,
                                                     const std::vector<std::string>& query_terms,
                                                     const Rm3Params& rm3)
{
    auto feedback = search_terms(index, params, query_terms, rm3.fb_docs);
    if (feedback.empty()) {
        return {};
    }
    double total = 0.0;
    for (const auto& e : feedback) {
        total += e.score;
    }
    std::map<std::uint32_t, double> model;
    for (const auto& e : feedback) {
        const double doc_weight = e.score / total;
        const auto doc = *index.doc_number(e.doc_id);
        const double dl = static_cast<double>(index.doc_length(doc));
        for (const auto& tf : index.doc_terms(doc)) {
            model[tf.term] += doc_weight * static_cast<double>(tf.tf) / dl;
        }
    }

    std::vector<std::pair<std::string_view, double>> ranked;
    ranked.reserve(model.size());
    for (const auto& [term, p] : model) {
        if (p > 0.0) {
            ranked.emplace_back(index.term(term), p);
        }
    }
    std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
        return a.second != b.second ? a.second > b.second : a.first < b.first;
    });
    if (ranked.size() > rm3.fb_terms) {
        ranked.resize(rm3.fb_terms);
    }
    double kept = 0.0;
    for (const auto& [_, p] : ranked) {
        kept += p;
    }
    std::map<std::string, double> out;
    for (const auto& [term, p] : ranked) {
        out.emplace(std::string(term), p / kept);
    }
    return out;
}

/// Interpolates the original query (P_q(w) = count(w) / |q|) with the RM1 model:
/// weight(w) = origWeight * P_q(w) + (1 - origWeight) * P_RM1(w). Zero weights are dropped.
/// With no feedback documents the original query distribution is returned and
/// `feedback_applied` is false.
inline WeightedQuery rm3_expand(const InvertedIndex& index, const Bm25Params& params, const AnalyzerConfig& cfg,
                                std::string_view query_text, const Rm3Params& rm3 = {})
{
    rm3.validate();
    auto terms = analyze(query_text, cfg);
    if (terms.empty()) {
        throw Error("query '" + std::string(query_text) + "' is empty after analysis");
    }
    std::map<std::string, double> original;
    for (const auto& t : terms) {
        original[t] += 1.0 / static_cast<double>(terms.size());
    }

    WeightedQuery out;
    auto model = relevance_model(index, params, terms, rm3);
    if (model.empty()) {
        out.weights = std::move(original);
        return out;
    }
    out.feedback_applied = true;
    const double alpha = rm3.original_weight;
    for (const auto& [t, p] : original) {
        out.weights[t] += alpha * p;
    }
    for (const auto& [t, p] : model) {
        out.weights[t] += (1.0 - alpha) * p;
    }
    std::erase_if(out.weights, [](const auto& kv) { return !(kv.second > 0.0); });
    return out;
}

inline WeightedQuery rm3_expand(const InvertedIndex& index, const Bm25Params& params, std::string_view query_text,
                                const Rm3Params& rm3 = {})
{
    return rm3_expand(index, params, index.analyzer(), query_text, rm3);
}

} // namespace seqrank
