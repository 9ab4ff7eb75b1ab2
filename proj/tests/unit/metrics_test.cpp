#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "metric_cases.hpp"
#include "seqrank/metrics.hpp"

using namespace seqrank;

namespace {

RunList ranking(const std::string& topic, const std::vector<std::string>& docs)
{
    RunList run("t");
    std::vector<RunEntry> e;
    for (std::size_t i = 0; i < docs.size(); ++i) {
        e.push_back({docs[i], static_cast<double>(docs.size() - i), static_cast<int>(i + 1)});
    }
    run.set(topic, e);
    return run;
}

QrelSet qrels(std::initializer_list<std::tuple<std::string, std::string, int>> rows)
{
    QrelSet q;
    for (const auto& [t, d, g] : rows) {
        q.insert(t, d, g);
    }
    return q;
}

std::vector<std::string> docs(int n, const std::string& prefix = "x")
{
    std::vector<std::string> v;
    for (int i = 1; i <= n; ++i) {
        v.push_back(prefix + std::to_string(i));
    }
    return v;
}

} // namespace

TEST(Mrr, Examples)
{
    auto q = qrels({{"a", "x3", 1}});
    EXPECT_NEAR(mrr_at_k(ranking("a", docs(12)), q).aggregate, 1.0 / 3.0, 1e-12);

    auto late = qrels({{"a", "x11", 1}});
    EXPECT_EQ(mrr_at_k(ranking("a", docs(12)), late).aggregate, 0.0);

    RunList all("t");
    all.set("a", {{"r", 1, 1}});
    all.set("b", {{"s", 1, 1}});
    EXPECT_EQ(mrr_at_k(all, qrels({{"a", "r", 1}, {"b", "s", 2}})).aggregate, 1.0);
}

TEST(Mrr, UnjudgedTopicCountsZeroAndIsFlagged)
{
    RunList run("t");
    run.set("a", {{"r", 1, 1}});
    run.set("zz", {{"r", 1, 1}});
    auto rep = mrr_at_k(run, qrels({{"a", "r", 1}}));
    EXPECT_EQ(rep.aggregate, 0.5);
    EXPECT_EQ(rep.unjudged_topics, std::vector<std::string>{"zz"});
}

TEST(Ap, Examples)
{
    auto run = ranking("a", docs(5));
    EXPECT_NEAR(average_precision(run, qrels({{"a", "x1", 1}, {"a", "x4", 1}})).aggregate, 0.75, 1e-12);
    EXPECT_EQ(average_precision(run, qrels({{"a", "x1", 1}, {"a", "x2", 2}, {"a", "x3", 1}})).aggregate, 1.0);
    EXPECT_EQ(average_precision(run, qrels({{"a", "y1", 1}, {"a", "y2", 1}, {"a", "y3", 1}})).aggregate, 0.0);
}

TEST(Ap, TopicWithoutRelevantExcluded)
{
    RunList run("t");
    run.set("a", {{"x1", 1, 1}});
    run.set("b", {{"x1", 1, 1}});
    auto rep = average_precision(run, qrels({{"a", "x1", 1}, {"b", "x1", 0}}));
    EXPECT_EQ(rep.aggregate, 1.0);
    EXPECT_EQ(rep.excluded_topics, std::vector<std::string>{"b"});
    EXPECT_EQ(rep.per_topic.count("b"), 0u);
}

TEST(Precision, Examples)
{
    auto run = ranking("a", docs(30));
    auto q = qrels({{"a", "x1", 1}, {"a", "x4", 1}, {"a", "x9", 1}, {"a", "x15", 1}, {"a", "x20", 1}, {"a", "x21", 1}});
    EXPECT_EQ(precision_at_k(run, q).aggregate, 0.25);

    auto short_run = ranking("a", docs(3));
    EXPECT_EQ(precision_at_k(short_run, qrels({{"a", "x1", 1}, {"a", "x3", 1}}), 20).aggregate, 2.0 / 20.0);

    EXPECT_EQ(precision_at_k(short_run, qrels({{"a", "x1", 1}}), 1).aggregate, 1.0);
}

TEST(Ndcg, Examples)
{
    auto q = qrels({{"a", "d1", 2}, {"a", "d2", 1}});
    auto rep = ndcg_at_k(ranking("a", {"d2", "d1"}), q);
    const double dcg = 1.0 + 3.0 / std::log2(3.0);
    const double idcg = 3.0 + 1.0 / std::log2(3.0);
    EXPECT_NEAR(dcg, 2.8928, 1e-4);
    EXPECT_NEAR(idcg, 3.6309, 1e-4);
    EXPECT_NEAR(rep.aggregate, 0.7967, 1e-4);
    EXPECT_NEAR(rep.aggregate, dcg / idcg, 1e-12);

    EXPECT_NEAR(ndcg_at_k(ranking("a", {"d1", "d2"}), q).aggregate, 1.0, 1e-12);

    auto zero = ndcg_at_k(ranking("a", {"d1"}), qrels({{"a", "d1", 0}}));
    EXPECT_TRUE(zero.per_topic.empty());
    EXPECT_EQ(zero.excluded_topics, std::vector<std::string>{"a"});
}

TEST(Metrics, RandomCasesMatchOracles)
{
    std::uint64_t seed = 100;
    for (const auto& label : standard_metrics()) {
        auto check = seqrank::testing::check_metric_against_oracle(label, 500, seed++);
        EXPECT_EQ(check.failures, 0u) << check.first_failure;
        EXPECT_LE(check.max_error, 1e-9) << label;
    }
}

// Metrics depend only on rank order, so any strictly increasing score transform leaves them unchanged.
TEST(Metrics, InvariantUnderMonotoneScoreTransform)
{
    std::mt19937_64 gen(8);
    for (int i = 0; i < 200; ++i) {
        auto c = seqrank::testing::random_metric_case(gen);
        RunList moved("m");
        auto entries = c.run.topics()[0].entries;
        for (auto& e : entries) {
            e.score = std::exp(e.score / 10.0) - 7.0;
        }
        moved.set("t", entries);
        for (const auto& label : standard_metrics()) {
            auto a = evaluate(label, c.run, c.qrels);
            auto b = evaluate(label, moved, c.qrels);
            EXPECT_EQ(a.per_topic, b.per_topic);
        }
    }
}

TEST(Metrics, ValuesInUnitInterval)
{
    std::mt19937_64 gen(9);
    for (int i = 0; i < 300; ++i) {
        auto c = seqrank::testing::random_metric_case(gen);
        for (const auto& label : standard_metrics()) {
            for (const auto& [_, v] : evaluate(label, c.run, c.qrels).per_topic) {
                EXPECT_GE(v, 0.0);
                EXPECT_LE(v, 1.0 + 1e-12);
            }
        }
    }
}

TEST(Metrics, EvaluateLabels)
{
    auto run = ranking("a", docs(3));
    auto q = qrels({{"a", "x2", 1}});
    EXPECT_EQ(evaluate("mrr@10", run, q).label(), "mrr@10");
    EXPECT_EQ(evaluate("MAP", run, q).label(), "ap");
    EXPECT_EQ(evaluate("p@5", run, q).aggregate, 0.2);
    EXPECT_THROW(evaluate("ndcg", run, q), ConfigError);
    EXPECT_THROW(evaluate("ap@3", run, q), ConfigError);
    EXPECT_THROW(evaluate("mrr@0", run, q), ConfigError);
    EXPECT_THROW(evaluate("bleu@4", run, q), ConfigError);
}

TEST(Metrics, CompensatedSum)
{
    std::vector<double> v(1000001, 0.1);
    v[0] = 1e10;
    double naive = 0;
    for (double x : v) {
        naive += x;
    }
    const double exact = 1e10 + 100000.0;
    EXPECT_LE(std::abs(compensated_sum(v) - exact), std::abs(naive - exact));
    EXPECT_NEAR(compensated_sum(v), exact, 1e-4);
    EXPECT_EQ(compensated_sum(std::vector<double>{1.0, 1e100, 1.0, -1e100}), 2.0);
}

TEST(Metrics, ReportOutputs)
{
    RunList run("t");
    run.set("b", {{"x", 1, 1}});
    run.set("a", {{"y", 1, 1}, {"x", 0.5, 2}});
    auto rep = mrr_at_k(run, qrels({{"a", "x", 1}, {"b", "x", 1}}));
    std::ostringstream tsv;
    rep.write_tsv(tsv);
    EXPECT_NE(tsv.str().find("a\t0.500000"), std::string::npos);
    EXPECT_NE(tsv.str().find("b\t1.000000"), std::string::npos);
    auto j = rep.summary_json();
    EXPECT_EQ(j["metric"], "mrr");
    EXPECT_EQ(j["cutoff"], 10);
    EXPECT_DOUBLE_EQ(j["aggregate"].get<double>(), 0.75);
}
