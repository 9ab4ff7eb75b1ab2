#include <gtest/gtest.h>

#include <sstream>

#include "seqrank/config.hpp"

using namespace seqrank;

TEST(Config, ParseSectionsAndComments)
{
    std::istringstream in(R"(# run settings
corpus_path = "c.tsv"   # trailing comment
topics_path = t.tsv
evaluate = false
k = 100

[bm25]
k1 = 1.2
b = 0.75

[target]
positive = "hot"
negative = "cold"
)");
    auto cfg = load_config(in);
    EXPECT_EQ(cfg.corpus_path, "c.tsv");
    EXPECT_EQ(cfg.topics_path, "t.tsv");
    EXPECT_FALSE(cfg.evaluate);
    EXPECT_EQ(cfg.k, 100u);
    EXPECT_EQ(cfg.bm25.k1, 1.2);
    EXPECT_EQ(cfg.bm25.b, 0.75);
    EXPECT_EQ(cfg.target.positive, "hot");
    EXPECT_NO_THROW(cfg.validate());
}

TEST(Config, Defaults)
{
    PipelineConfig cfg;
    EXPECT_EQ(cfg.k, 1000u);
    EXPECT_EQ(cfg.bm25.k1, 0.9);
    EXPECT_EQ(cfg.bm25.b, 0.4);
    EXPECT_EQ(cfg.rm3.fb_docs, 10u);
    EXPECT_EQ(cfg.rm3.fb_terms, 10u);
    EXPECT_EQ(cfg.rm3.original_weight, 0.5);
    EXPECT_EQ(cfg.window.size, 10u);
    EXPECT_EQ(cfg.window.stride, 5u);
    EXPECT_EQ(cfg.target.positive, "true");
    EXPECT_EQ(cfg.target.negative, "false");
}

TEST(Config, RoundTrip)
{
    PipelineConfig cfg;
    cfg.corpus_path = "dir with space/c\"orpus.tsv";
    cfg.corpus_format = CorpusFormat::jsonl;
    cfg.topics_path = "t.tsv";
    cfg.topics_format = TopicFormat::tsv3;
    cfg.qrels_path = "q.txt";
    cfg.stopwords = "none";
    cfg.stem = Stemmer::none;
    cfg.first_stage = FirstStage::bm25_rm3;
    cfg.k = 7;
    cfg.bm25 = {1.1, 0.3};
    cfg.rm3 = {5, 20, 0.3};
    cfg.scorer = ScorerKind::remote;
    cfg.remote.endpoint = "http://h:1/x";
    cfg.remote.timeout_seconds = 2.5;
    cfg.target = {"▁ab", "▁de"};
    cfg.window = {4, 2};
    cfg.query_field = QueryField::description;
    cfg.seed = 123456789012345ULL;
    cfg.threads = 3;
    cfg.bonferroni_comparisons = 4;
    std::stringstream s;
    save_config(cfg, s);
    auto back = load_config(s);
    std::stringstream again;
    save_config(back, again);
    std::stringstream first;
    save_config(cfg, first);
    EXPECT_EQ(again.str(), first.str());
    EXPECT_EQ(back.corpus_path, cfg.corpus_path);
    EXPECT_EQ(back.target, cfg.target);
    EXPECT_EQ(back.seed, cfg.seed);
    EXPECT_EQ(back.remote.timeout_seconds, 2.5);
}

TEST(Config, Errors)
{
    auto load = [](const std::string& text) {
        std::istringstream in(text);
        return load_config(in);
    };
    EXPECT_THROW(load("bogus = 1\n"), ConfigError);
    EXPECT_THROW(load("k = -3\n"), ConfigError);
    EXPECT_THROW(load("scorer = magic\n"), ConfigError);
    EXPECT_THROW(load("[bm25\nk1 = 1\n"), ConfigError);
    EXPECT_THROW(load("k = 1\nk = 2\n"), ConfigError);
    EXPECT_THROW(load("corpus_path = \"open\n"), ConfigError);
}

TEST(Config, ValidateMissingQrels)
{
    PipelineConfig cfg;
    cfg.corpus_path = "c";
    cfg.topics_path = "t";
    EXPECT_THROW(cfg.validate(), ConfigError);
    cfg.evaluate = false;
    EXPECT_NO_THROW(cfg.validate());
}
