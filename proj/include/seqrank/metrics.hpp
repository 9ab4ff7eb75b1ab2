#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "seqrank/corpus_io.hpp"
#include "seqrank/error.hpp"

namespace seqrank {

/// Neumaier-compensated sum, so aggregates do not depend on summation order in practice.
template <typename Range>
double compensated_sum(const Range& values)
{
    double sum = 0.0;
    double c = 0.0;
    for (double v : values) {
        double t = sum + v;
        if (std::abs(sum) >= std::abs(v)) {
            c += (sum - t) + v;
        } else {
            c += (v - t) + sum;
        }
        sum = t;
    }
    return sum + c;
}

struct MetricReport {
    std::string metric;               // "mrr", "ap", "p", "ndcg"
    std::optional<std::size_t> cutoff; // none for AP
    std::map<std::string, double> per_topic;
    double aggregate = 0.0;
    std::vector<std::string> excluded_topics; // in the run but not evaluated (no relevant documents)
    std::vector<std::string> unjudged_topics; // in the run but absent from the qrels

    /// "mrr@10", "ap", "p@20", "ndcg@20"
    std::string label() const { return cutoff ? metric + "@" + std::to_string(*cutoff) : metric; }

    void finalize()
    {
        std::vector<double> values;
        values.reserve(per_topic.size());
        for (const auto& [_, v] : per_topic) {
            values.push_back(v);
        }
        aggregate = values.empty() ? 0.0 : compensated_sum(values) / static_cast<double>(values.size());
    }

    nlohmann::json summary_json() const
    {
        nlohmann::json j;
        j["metric"] = metric;
        j["cutoff"] = cutoff ? nlohmann::json(*cutoff) : nlohmann::json(nullptr);
        j["aggregate"] = aggregate;
        j["nTopics"] = per_topic.size();
        j["excludedTopics"] = excluded_topics;
        j["unjudgedTopics"] = unjudged_topics;
        return j;
    }

    /// One "topicId<TAB>value" line per evaluated topic, value with 6 decimals.
    void write_tsv(std::ostream& out) const
    {
        for (const auto& [topic, v] : per_topic) {
            out << topic << '\t' << detail::format_score(v) << '\n';
        }
    }
};

namespace detail {

/// Grades of one topic's ranking, in rank order; unjudged documents get grade 0.
inline std::vector<int> ranked_grades(const TopicRun& topic, const QrelSet& qrels)
{
    std::vector<const RunEntry*> order;
    order.reserve(topic.entries.size());
    for (const auto& e : topic.entries) {
        order.push_back(&e);
    }
    std::stable_sort(order.begin(), order.end(), [](const RunEntry* a, const RunEntry* b) { return a->rank < b->rank; });
    std::vector<int> grades;
    grades.reserve(order.size());
    for (const auto* e : order) {
        grades.push_back(qrels.grade(topic.topic_id, e->doc_id).value_or(0));
    }
    return grades;
}

inline MetricReport start_report(std::string metric, std::optional<std::size_t> cutoff, const RunList& run,
                                 const QrelSet& qrels)
{
    MetricReport r;
    r.metric = std::move(metric);
    r.cutoff = cutoff;
    for (const auto& t : run.topics()) {
        if (!qrels.has_topic(t.topic_id)) {
            r.unjudged_topics.push_back(t.topic_id);
        }
    }
    return r;
}

inline void require_cutoff(std::size_t k)
{
    if (k < 1) {
        throw ConfigError("metric cutoff must be >= 1");
    }
}

} // namespace detail

/// Reciprocal rank of the first document with grade >= 1 within the top k; 0 if none.
/// Every run topic is evaluated.
inline MetricReport mrr_at_k(const RunList& run, const QrelSet& qrels, std::size_t k = 10)
{
    detail::require_cutoff(k);
    auto r = detail::start_report("mrr", k, run, qrels);
    for (const auto& t : run.topics()) {
        auto grades = detail::ranked_grades(t, qrels);
        double rr = 0.0;
        for (std::size_t i = 0; i < std::min(k, grades.size()); ++i) {
            if (grades[i] >= 1) {
                rr = 1.0 / static_cast<double>(i + 1);
                break;
            }
        }
        r.per_topic[t.topic_id] = rr;
    }
    r.finalize();
    return r;
}

/// Non-interpolated average precision over the full ranking. Topics without relevant
/// judgments are excluded.
inline MetricReport average_precision(const RunList& run, const QrelSet& qrels)
{
    auto r = detail::start_report("ap", std::nullopt, run, qrels);
    for (const auto& t : run.topics()) {
        const auto relevant = qrels.relevant_count(t.topic_id);
        if (relevant == 0) {
            r.excluded_topics.push_back(t.topic_id);
            continue;
        }
        auto grades = detail::ranked_grades(t, qrels);
        std::size_t hits = 0;
        double sum = 0.0;
        for (std::size_t i = 0; i < grades.size(); ++i) {
            if (grades[i] >= 1) {
                ++hits;
                sum += static_cast<double>(hits) / static_cast<double>(i + 1);
            }
        }
        r.per_topic[t.topic_id] = sum / static_cast<double>(relevant);
    }
    r.finalize();
    return r;
}

/// Fraction of the top k that is relevant; missing ranks count as non-relevant.
inline MetricReport precision_at_k(const RunList& run, const QrelSet& qrels, std::size_t k = 20)
{
    detail::require_cutoff(k);
    auto r = detail::start_report("p", k, run, qrels);
    for (const auto& t : run.topics()) {
        auto grades = detail::ranked_grades(t, qrels);
        std::size_t hits = 0;
        for (std::size_t i = 0; i < std::min(k, grades.size()); ++i) {
            hits += grades[i] >= 1 ? 1 : 0;
        }
        r.per_topic[t.topic_id] = static_cast<double>(hits) / static_cast<double>(k);
    }
    r.finalize();
    return r;
}

inline double dcg_gain(int grade) { return std::exp2(static_cast<double>(grade)) - 1.0; }

/// nDCG@k with exponential gain (2^g - 1) / log2(i + 1). Topics whose ideal DCG is 0 are excluded.
inline MetricReport ndcg_at_k(const RunList& run, const QrelSet& qrels, std::size_t k = 20)
{
    detail::require_cutoff(k);
    auto r = detail::start_report("ndcg", k, run, qrels);
    for (const auto& t : run.topics()) {
        std::vector<int> ideal;
        for (const auto& [_, g] : qrels.judgments(t.topic_id)) {
            ideal.push_back(g);
        }
        std::sort(ideal.begin(), ideal.end(), std::greater<>());
        double idcg = 0.0;
        for (std::size_t i = 0; i < std::min(k, ideal.size()); ++i) {
            idcg += dcg_gain(ideal[i]) / std::log2(static_cast<double>(i + 2));
        }
        if (idcg == 0.0) {
            r.excluded_topics.push_back(t.topic_id);
            continue;
        }
        auto grades = detail::ranked_grades(t, qrels);
        double dcg = 0.0;
        for (std::size_t i = 0; i < std::min(k, grades.size()); ++i) {
            dcg += dcg_gain(grades[i]) / std::log2(static_cast<double>(i + 2));
        }
        r.per_topic[t.topic_id] = dcg / idcg;
    }
    r.finalize();
    return r;
}

/// Evaluates a metric by label: "mrr@K", "ap" (or "map"), "p@K", "ndcg@K".
inline MetricReport evaluate(const std::string& label, const RunList& run, const QrelSet& qrels)
{
    auto at = label.find('@');
    std::string name = label.substr(0, at);
    std::transform(name.begin(), name.end(), name.begin(), [](unsigned char c) { return std::tolower(c); });
    std::optional<std::size_t> k;
    if (at != std::string::npos) {
        auto parsed = detail::parse_int<std::size_t>(std::string_view(label).substr(at + 1));
        if (!parsed || *parsed == 0) {
            throw ConfigError("bad metric cutoff in '" + label + "'");
        }
        k = *parsed;
    }
    if (name == "ap" || name == "map") {
        if (k) {
            throw ConfigError("ap takes no cutoff");
        }
        return average_precision(run, qrels);
    }
    if (!k) {
        throw ConfigError("metric '" + label + "' needs a cutoff, e.g. " + name + "@10");
    }
    if (name == "mrr") {
        return mrr_at_k(run, qrels, *k);
    }
    if (name == "p") {
        return precision_at_k(run, qrels, *k);
    }
    if (name == "ndcg") {
        return ndcg_at_k(run, qrels, *k);
    }
    throw ConfigError("unknown metric '" + label + "'");
}

/// The four measures reported throughout: MRR@10, AP, P@20, nDCG@20.
inline const std::vector<std::string>& standard_metrics()
{
    static const std::vector<std::string> labels = {"mrr@10", "ap", "p@20", "ndcg@20"};
    return labels;
}

} // namespace seqrank
