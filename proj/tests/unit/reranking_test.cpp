#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <random>

#include "fixtures.hpp"
#include "seqrank/reranking.hpp"

using namespace seqrank;

namespace {

// Returns fixed logits per passage text, in call order.
class TableScorer final : public Scorer {
  public:
    explicit TableScorer(std::map<std::string, LogitPair> table) : m_table(std::move(table)) {}

    std::vector<LogitPair> score_batch(std::span<const QueryPassage> pairs, const TargetWordConfig&) override
    {
        ++calls;
        std::vector<LogitPair> out;
        for (const auto& p : pairs) {
            out.push_back(m_table.at(p.passage));
        }
        return out;
    }

    int calls = 0;

  private:
    std::map<std::string, LogitPair> m_table;
};

// Logits (log p, log(1-p)) give relevance_prob == p.
LogitPair with_prob(double p) { return {std::log(p), std::log1p(-p)}; }

std::vector<std::string> numbered_sentences(std::size_t n)
{
    std::vector<std::string> s;
    for (std::size_t i = 0; i < n; ++i) {
        s.push_back("s" + std::to_string(i) + ".");
    }
    return s;
}

} // namespace

TEST(Prompt, Template)
{
    EXPECT_EQ(render_prompt("who?", "a doc"), "Query: who? Document: a doc Relevant:");
    EXPECT_EQ(render_prompt("", ""), "Query:  Document:  Relevant:");
}

TEST(Prob, Examples)
{
    EXPECT_EQ(relevance_prob(0, 0), 0.5);
    EXPECT_NEAR(relevance_prob(2, 0), 0.880797, 1e-6);
    EXPECT_GE(relevance_prob(1000, 0), 1.0 - 1e-12);
    EXPECT_LE(relevance_prob(0, 1000), 1e-12);
    EXPECT_GE(relevance_prob(0, 1000), 0.0);
}

TEST(Prob, NonFiniteRejected)
{
    EXPECT_THROW(relevance_prob(NAN, 0), ScorerError);
    EXPECT_THROW(relevance_prob(0, INFINITY), ScorerError);
}

TEST(Prob, Invariants)
{
    std::mt19937_64 gen(5);
    std::uniform_real_distribution<double> logit(-40, 40);
    for (int i = 0; i < 10000; ++i) {
        double a = logit(gen), b = logit(gen), c = logit(gen);
        double p = relevance_prob(a, b);
        EXPECT_GE(p, 0.0);
        EXPECT_LE(p, 1.0);
        EXPECT_NEAR(p + relevance_prob(b, a), 1.0, 1e-12);
        EXPECT_NEAR(relevance_prob(a + c, b + c), p, 1e-9);
        // Direct formula for moderate differences.
        EXPECT_NEAR(p, std::exp(a) / (std::exp(a) + std::exp(b)), 1e-12);
    }
}

TEST(Sentences, Examples)
{
    using V = std::vector<std::string>;
    EXPECT_EQ(split_sentences("A. B? C!"), (V{"A.", "B?", "C!"}));
    EXPECT_EQ(split_sentences("no terminator here"), (V{"no terminator here"}));
    EXPECT_EQ(split_sentences("x.   y."), (V{"x.", "y."}));
    EXPECT_EQ(split_sentences("pi is 3.14 ok. next"), (V{"pi is 3.14 ok.", "next"}));
    EXPECT_EQ(split_sentences("  \n "), V{});
    EXPECT_EQ(split_sentences(""), V{});
    EXPECT_EQ(split_sentences("wait... what?!\tyes"), (V{"wait...", "what?!", "yes"}));
}

TEST(Windows, Examples)
{
    auto p12 = make_passages(numbered_sentences(12));
    ASSERT_EQ(p12.size(), 2u);
    EXPECT_EQ(p12[0].first_sentence, 0u);
    EXPECT_EQ(p12[0].last_sentence, 9u);
    EXPECT_EQ(p12[1].first_sentence, 5u);
    EXPECT_EQ(p12[1].last_sentence, 11u);

    auto p3 = make_passages(numbered_sentences(3));
    ASSERT_EQ(p3.size(), 1u);
    EXPECT_EQ(p3[0].text, "s0. s1. s2.");

    auto p25 = make_passages(numbered_sentences(25));
    ASSERT_EQ(p25.size(), 4u);
    for (std::size_t i = 0; i < 4; ++i) {
        EXPECT_EQ(p25[i].first_sentence, 5 * i);
        EXPECT_EQ(p25[i].index, i);
    }

    EXPECT_TRUE(make_passages({}).empty());
}

TEST(Windows, ExhaustiveCountAndCoverage)
{
    const WindowConfig w;
    for (std::size_t n = 1; n <= 200; ++n) {
        auto ps = make_passages(numbered_sentences(n), w);
        const double rest = std::max(0.0, static_cast<double>(n) - 10.0);
        const auto expected = 1 + static_cast<std::size_t>(std::ceil(rest / 5.0));
        ASSERT_EQ(ps.size(), expected) << n;
        ASSERT_EQ(window_count(n, w), expected) << n;
        std::vector<int> covered(n, 0);
        for (const auto& p : ps) {
            EXPECT_LE(p.last_sentence - p.first_sentence + 1, 10u);
            for (auto i = p.first_sentence; i <= p.last_sentence; ++i) {
                covered[i]++;
            }
        }
        EXPECT_TRUE(std::all_of(covered.begin(), covered.end(), [](int c) { return c > 0; })) << n;
    }
}

TEST(Windows, OtherShapes)
{
    for (std::size_t size = 1; size <= 7; ++size) {
        for (std::size_t stride = 1; stride <= size; ++stride) {
            for (std::size_t n = 1; n <= 40; ++n) {
                WindowConfig w{size, stride};
                auto ps = make_passages(numbered_sentences(n), w);
                EXPECT_EQ(ps.size(), window_count(n, w));
                EXPECT_EQ(ps.back().last_sentence, n - 1);
            }
        }
    }
    EXPECT_THROW((WindowConfig{5, 6}.validate()), ConfigError);
    EXPECT_THROW((WindowConfig{0, 0}.validate()), ConfigError);
}

TEST(Overlap, Examples)
{
    AnalyzerConfig cfg;
    auto full = overlap_score("cat dog", "the dog and the cat", cfg);
    EXPECT_EQ(full, (LogitPair{1.0, 0.0}));
    EXPECT_NEAR(relevance_prob(full.pos, full.neg), 0.731059, 1e-6);
    auto none = overlap_score("cat dog", "a bird", cfg);
    EXPECT_NEAR(relevance_prob(none.pos, none.neg), 0.268941, 1e-6);
    auto half = overlap_score("cat dog", "only a cat", cfg);
    EXPECT_EQ(relevance_prob(half.pos, half.neg), 0.5);
    EXPECT_THROW(overlap_score("the", "x", cfg), ScorerError);
}

TEST(ScoreDocument, SinglePassage)
{
    TableScorer s({{"one. two.", with_prob(0.3)}});
    auto r = score_document({"d", "one. two."}, "q", s, {});
    EXPECT_EQ(r.best_passage, 0u);
    EXPECT_NEAR(r.record.prob, 0.3, 1e-12);
    EXPECT_EQ(r.passage_count, 1u);
    EXPECT_EQ(s.calls, 1);
}

TEST(ScoreDocument, MaxAndTies)
{
    WindowConfig w{1, 1};
    TableScorer s({{"a.", with_prob(0.2)}, {"b.", with_prob(0.9)}, {"c.", with_prob(0.4)}, {"e.", with_prob(0.7)}});
    auto r = score_document({"d", "a. b. c."}, "q", s, {}, w);
    EXPECT_EQ(r.best_passage, 1u);
    EXPECT_NEAR(r.record.prob, 0.9, 1e-12);
    EXPECT_EQ(s.calls, 1); // one batched call for all passages

    auto tie = score_document({"d", "e. e."}, "q", s, {}, w);
    EXPECT_EQ(tie.best_passage, 0u);
}

TEST(ScoreDocument, WhitespaceOnlyAndEmpty)
{
    TableScorer s({{"   ", {0.0, 0.0}}});
    EXPECT_EQ(score_document({"d", "   "}, "q", s, {}).record.prob, 0.5);
    EXPECT_THROW(score_document({"d", ""}, "q", s, {}), ScorerError);
}

TEST(ScoreDocument, ScorerFailureWrapped)
{
    TableScorer s({});
    try {
        score_document({"dz", "unknown."}, "q", s, {});
        FAIL();
    } catch (const ScorerError& e) {
        EXPECT_NE(std::string(e.what()).find("dz"), std::string::npos);
    }
}

TEST(Rerank, OrderByProbability)
{
    DocumentStore store(std::vector<Document>{{"d1", "x1."}, {"d2", "x2."}});
    TableScorer s({{"x1.", with_prob(0.3)}, {"x2.", with_prob(0.8)}});
    auto out = rerank({{"d1", 9.0, 1}, {"d2", 1.0, 2}}, "q", store.lookup(), s, {});
    ASSERT_EQ(out.size(), 2u);
    EXPECT_EQ(out[0].doc_id, "d2");
    EXPECT_EQ(out[0].rank, 1);
    EXPECT_NEAR(out[0].score, 0.8, 1e-12);
    EXPECT_EQ(out[1].doc_id, "d1");
}

TEST(Rerank, TiesByDocId)
{
    DocumentStore store(std::vector<Document>{{"c", "same."}, {"a", "same."}, {"b", "same."}});
    TableScorer s({{"same.", with_prob(0.5)}});
    auto out = rerank({{"c", 3, 1}, {"b", 2, 2}, {"a", 1, 3}}, "q", store.lookup(), s, {});
    EXPECT_EQ(out[0].doc_id, "a");
    EXPECT_EQ(out[1].doc_id, "b");
    EXPECT_EQ(out[2].doc_id, "c");
}

TEST(Rerank, MissingIdsListed)
{
    DocumentStore store(std::vector<Document>{{"d1", "x."}});
    OverlapScorer s;
    try {
        rerank({{"d1", 2, 1}, {"m1", 1, 2}, {"m2", 0.5, 3}}, "x", store.lookup(), s, {});
        FAIL();
    } catch (const Error& e) {
        std::string msg = e.what();
        EXPECT_NE(msg.find("m1"), std::string::npos);
        EXPECT_NE(msg.find("m2"), std::string::npos);
    }
}

// Output is a permutation of the input, sorted by (prob desc, id asc), independent of input order;
// restricting the candidates keeps the relative order of the survivors.
TEST(Rerank, PermutationProperties)
{
    std::mt19937_64 gen(21);
    const std::vector<std::string> vocab = {"red", "blue", "green", "stone", "river", "cloud"};
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<Document> docs;
        std::vector<RunEntry> cands;
        for (int i = 0; i < 12; ++i) {
            std::string text;
            for (int j = 0; j < 25; ++j) {
                text += vocab[gen() % vocab.size()] + (gen() % 4 == 0 ? ". " : " ");
            }
            docs.push_back({"d" + std::to_string(i), text});
            cands.push_back({docs.back().id, 100.0 - i, i + 1});
        }
        DocumentStore store(docs);
        OverlapScorer scorer;
        const std::string query = vocab[gen() % vocab.size()] + " " + vocab[gen() % vocab.size()];
        auto base = rerank(cands, query, store.lookup(), scorer, {});
        ASSERT_EQ(base.size(), cands.size());
        for (std::size_t i = 1; i < base.size(); ++i) {
            EXPECT_TRUE(base[i - 1].score > base[i].score ||
                        (base[i - 1].score == base[i].score && base[i - 1].doc_id < base[i].doc_id));
        }
        auto shuffled = cands;
        std::shuffle(shuffled.begin(), shuffled.end(), gen);
        auto again = rerank(shuffled, query, store.lookup(), scorer, {});
        for (std::size_t i = 0; i < base.size(); ++i) {
            EXPECT_EQ(again[i].doc_id, base[i].doc_id);
        }
        std::vector<RunEntry> subset(cands.begin(), cands.begin() + 6);
        auto sub = rerank(subset, query, store.lookup(), scorer, {});
        std::vector<std::string> filtered;
        for (const auto& e : base) {
            if (std::any_of(subset.begin(), subset.end(), [&](const RunEntry& c) { return c.doc_id == e.doc_id; })) {
                filtered.push_back(e.doc_id);
            }
        }
        for (std::size_t i = 0; i < sub.size(); ++i) {
            EXPECT_EQ(sub[i].doc_id, filtered[i]);
        }
    }
}
