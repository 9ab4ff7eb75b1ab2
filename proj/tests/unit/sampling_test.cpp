#include <gtest/gtest.h>

#include <set>

#include "seqrank/sampling.hpp"

using namespace seqrank;
using Label = TrainInstance::Label;

namespace {

std::vector<TrainInstance> pool(std::size_t pos, std::size_t neg)
{
    std::vector<TrainInstance> v;
    for (std::size_t i = 0; i < std::max(pos, neg); ++i) {
        if (i < pos) {
            v.push_back({"q" + std::to_string(i), "p" + std::to_string(i), Label::positive});
        }
        if (i < neg) {
            v.push_back({"q" + std::to_string(i), "n" + std::to_string(i), Label::negative});
        }
    }
    return v;
}

} // namespace

TEST(SplitMix, KnownSequence)
{
    // Reference outputs of SplitMix64 seeded with 0.
    SplitMix64 rng(0);
    EXPECT_EQ(rng.next(), 0xe220a8397b1dcdafULL);
    EXPECT_EQ(rng.next(), 0x6e789e6aa1b965f4ULL);
    EXPECT_EQ(rng.next(), 0x06c45d188009454fULL);
}

TEST(SplitMix, BelowStaysInRange)
{
    SplitMix64 rng(3);
    for (std::uint64_t bound : {1ULL, 2ULL, 3ULL, 7ULL, 1000ULL, (1ULL << 63) + 5}) {
        for (int i = 0; i < 1000; ++i) {
            EXPECT_LT(rng.below(bound), bound);
        }
    }
    EXPECT_THROW(rng.below(0), Error);
}

TEST(SampleBalanced, Deterministic)
{
    auto p = pool(10, 10);
    auto a = sample_balanced(p, 2, 2, 42);
    auto b = sample_balanced(p, 2, 2, 42);
    EXPECT_EQ(a, b);
    ASSERT_EQ(a.size(), 4u);
    EXPECT_EQ(a[0].label, Label::positive);
    EXPECT_EQ(a[1].label, Label::positive);
    EXPECT_EQ(a[2].label, Label::negative);
    EXPECT_EQ(a[3].label, Label::negative);
}

TEST(SampleBalanced, Empty)
{
    EXPECT_TRUE(sample_balanced(pool(3, 3), 0, 0, 1).empty());
    EXPECT_TRUE(sample_balanced({}, 0, 0, 1).empty());
}

TEST(SampleBalanced, DeficientClassNamed)
{
    try {
        sample_balanced(pool(3, 10), 5, 2, 1);
        FAIL();
    } catch (const Error& e) {
        EXPECT_NE(std::string(e.what()).find("positive"), std::string::npos);
    }
    try {
        sample_balanced(pool(10, 3), 2, 5, 1);
        FAIL();
    } catch (const Error& e) {
        EXPECT_NE(std::string(e.what()).find("negative"), std::string::npos);
    }
}

TEST(SampleBalanced, DistinctMembersAndSeedsDiffer)
{
    auto p = pool(50, 80);
    std::set<std::string> seen;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        auto s = sample_balanced(p, 10, 15, seed);
        ASSERT_EQ(s.size(), 25u);
        std::set<std::string> docs;
        std::string key;
        for (const auto& t : s) {
            docs.insert(t.doc_text);
            key += t.doc_text + ",";
        }
        EXPECT_EQ(docs.size(), 25u);
        seen.insert(key);
    }
    EXPECT_GT(seen.size(), 15u);
}

TEST(SampleBalanced, FullClassTakesEverything)
{
    auto p = pool(5, 5);
    auto s = sample_balanced(p, 5, 5, 9);
    std::vector<TrainInstance> expected;
    for (const auto& t : p) {
        if (t.label == Label::positive) {
            expected.push_back(t);
        }
    }
    for (const auto& t : p) {
        if (t.label == Label::negative) {
            expected.push_back(t);
        }
    }
    EXPECT_EQ(s, expected);
}

TEST(SamplePositions, UniformEnough)
{
    SplitMix64 rng(77);
    std::vector<int> counts(10, 0);
    for (int i = 0; i < 20000; ++i) {
        for (auto pos : sample_positions(10, 3, rng)) {
            counts[pos]++;
        }
    }
    for (int c : counts) {
        EXPECT_NEAR(c, 6000, 300);
    }
}
