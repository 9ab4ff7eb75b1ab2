#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "seqrank/analyzer.hpp"
#include "seqrank/config.hpp"
#include "seqrank/corpus_io.hpp"
#include "seqrank/reranking.hpp"
#include "seqrank/sampling.hpp"

namespace seqrank::testing {

namespace fs = std::filesystem;

/// d1 "cat sat mat", d2 "cat cat dog", d3 "dog runs".
inline std::vector<Document> cat_corpus()
{
    return {{"d1", "cat sat mat"}, {"d2", "cat cat dog"}, {"d3", "dog runs"}};
}

class TempDir {
  public:
    TempDir()
    {
        static std::atomic<int> counter{0};
        m_path = fs::temp_directory_path() /
                 ("seqrank-test-" + std::to_string(std::random_device{}()) + "-" + std::to_string(counter++));
        fs::create_directories(m_path);
    }
    ~TempDir()
    {
        std::error_code ec;
        fs::remove_all(m_path, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const fs::path& path() const noexcept { return m_path; }
    std::string file(const std::string& name) const { return (m_path / name).string(); }

    std::string write(const std::string& name, const std::string& content) const
    {
        std::ofstream out(m_path / name, std::ios::binary);
        out << content;
        return file(name);
    }

  private:
    fs::path m_path;
};

inline std::string slurp(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

/// Synthetic collection in which BM25 puts a short keyword-stuffed distractor above the answer
/// for the first `inverted` queries, while the answer is the only document containing every
/// query term in one sentence (so query-term overlap ranks it first).
struct SyntheticFixture {
    std::vector<Document> docs;
    std::vector<Topic> topics;
    std::string qrels_text;
    std::vector<std::string> answers;          // per query
    std::vector<std::size_t> expected_bm25_rank; // answer rank under BM25, by brute force
    std::size_t inverted = 0;                  // queries whose answer is not ranked first by BM25

    std::string corpus_tsv() const
    {
        std::string s;
        for (const auto& d : docs) {
            s += d.id + "\t" + d.text + "\n";
        }
        return s;
    }

    std::string topics_tsv() const
    {
        std::string s;
        for (const auto& t : topics) {
            s += t.id + "\t" + t.title + "\n";
        }
        return s;
    }

    /// Reciprocal-rank mean implied by expected_bm25_rank (cutoff 10).
    double expected_bm25_mrr10() const
    {
        double sum = 0;
        for (auto r : expected_bm25_rank) {
            sum += (r >= 1 && r <= 10) ? 1.0 / static_cast<double>(r) : 0.0;
        }
        return sum / static_cast<double>(expected_bm25_rank.size());
    }
};

inline SyntheticFixture make_synthetic_fixture(std::uint64_t seed = 7, std::size_t n_docs = 200,
                                               std::size_t n_queries = 20, std::size_t n_inverted = 12)
{
    SplitMix64 rng(seed);
    // Words built from consonants and vowels that the Porter stemmer leaves untouched.
    const std::string consonants = "bdgkmprz";
    const std::string vowels = "aio";
    std::set<std::string> used;
    auto word = [&](std::size_t syllables) {
        while (true) {
            std::string w;
            for (std::size_t s = 0; s < syllables; ++s) {
                w += consonants[rng.below(consonants.size())];
                w += vowels[rng.below(vowels.size())];
            }
            if (used.insert(w).second) {
                return w;
            }
        }
    };
    std::vector<std::string> filler;
    for (int i = 0; i < 40; ++i) {
        filler.push_back(word(2));
    }
    auto sentence = [&](std::size_t len) {
        std::string s;
        for (std::size_t i = 0; i < len; ++i) {
            s += (i ? " " : "") + filler[rng.below(filler.size())];
        }
        return s + ".";
    };

    SyntheticFixture fx;
    fx.inverted = 0;
    std::vector<std::string> rare;
    std::vector<std::string> common;
    for (std::size_t q = 0; q < n_queries; ++q) {
        rare.push_back(word(4));
        common.push_back(word(3));
    }

    std::size_t next_id = 0;
    auto add = [&](std::string text) {
        std::string id = "doc" + std::to_string(1000 + next_id++);
        fx.docs.push_back({id, std::move(text)});
        return id;
    };
    for (std::size_t q = 0; q < n_queries; ++q) {
        // Answer: long, both query terms once, in the same sentence.
        std::string text;
        for (int s = 0; s < 4; ++s) {
            text += sentence(8) + " ";
        }
        text += filler[0] + " " + rare[q] + " " + common[q] + " " + filler[1] + ". ";
        for (int s = 0; s < 2; ++s) {
            text += sentence(8) + " ";
        }
        fx.answers.push_back(add(text));
        // Distractor: only the rare term; short and stuffed when inverted, long otherwise.
        if (q < n_inverted) {
            add(rare[q] + " " + rare[q] + " " + rare[q] + " " + filler[2] + ".");
        } else {
            add(sentence(10) + " " + filler[3] + " " + rare[q] + ". " + sentence(12) + " " + sentence(12));
        }
    }
    // Remaining documents: filler text, each mentioning a few of the common terms.
    while (fx.docs.size() < n_docs) {
        std::string text = sentence(6 + rng.below(8)) + " ";
        for (int m = 0; m < 2; ++m) {
            text += common[rng.below(common.size())] + " ";
        }
        text += sentence(5);
        add(text);
    }
    // Deterministic shuffle so answers are not in id order relative to their distractors.
    for (std::size_t i = fx.docs.size() - 1; i > 0; --i) {
        std::swap(fx.docs[i].text, fx.docs[rng.below(i + 1)].text);
    }
    // Re-find the answers by content (the unique doc containing both terms).
    oracle::BruteCorpus brute(fx.docs, AnalyzerConfig{});
    for (std::size_t q = 0; q < n_queries; ++q) {
        Topic t{"q" + std::to_string(q + 1), rare[q] + " " + common[q], ""};
        auto terms = analyze(t.title, AnalyzerConfig{});
        std::string answer;
        for (std::size_t d = 0; d < brute.ids.size(); ++d) {
            if (brute.tf(d, terms[0]) > 0 && brute.tf(d, terms[1]) > 0) {
                answer = brute.ids[d];
            }
        }
        fx.answers[q] = answer;
        auto ranked = brute.rank(terms);
        std::size_t rank = 0;
        for (std::size_t i = 0; i < ranked.size(); ++i) {
            if (ranked[i].first == answer) {
                rank = i + 1;
            }
        }
        fx.expected_bm25_rank.push_back(rank);
        fx.inverted += rank != 1 ? 1 : 0;
        fx.qrels_text += t.id + " 0 " + answer + " 1\n";
        fx.topics.push_back(std::move(t));
    }
    return fx;
}

/// Writes the fixture's corpus, topics and qrels into `dir` and returns a config pointing at them.
inline PipelineConfig write_fixture(const SyntheticFixture& fx, const TempDir& dir)
{
    PipelineConfig cfg;
    cfg.corpus_path = dir.write("corpus.tsv", fx.corpus_tsv());
    cfg.topics_path = dir.write("topics.tsv", fx.topics_tsv());
    cfg.qrels_path = dir.write("qrels.txt", fx.qrels_text);
    return cfg;
}

} // namespace seqrank::testing
