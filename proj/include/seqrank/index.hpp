#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <cstring>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <thread>
#include <unordered_map>
#include <vector>

#include "seqrank/analyzer.hpp"
#include "seqrank/corpus_io.hpp"
#include "seqrank/error.hpp"

namespace seqrank {

struct Posting {
    std::uint32_t doc; // internal document number, in corpus order
    std::uint32_t tf;

    bool operator==(const Posting&) const = default;
};

struct TermFreq {
    std::uint32_t term;
    std::uint32_t tf;

    bool operator==(const TermFreq&) const = default;
};

/// Immutable bag-of-words index: postings per term plus a forward (doc -> terms) view,
/// document lengths in analyzed tokens, and the analyzer that produced it.
class InvertedIndex {
  public:
    static constexpr std::array<char, 4> magic = {'S', 'R', 'I', 'X'};
    static constexpr std::uint32_t format_version = 1;

    std::size_t num_docs() const noexcept { return m_doc_ids.size(); }
    std::size_t num_terms() const noexcept { return m_terms.size(); }
    std::uint64_t total_length() const noexcept { return m_total_length; }
    double avgdl() const noexcept
    {
        return m_doc_ids.empty() ? 0.0 : static_cast<double>(m_total_length) / static_cast<double>(m_doc_ids.size());
    }

    const AnalyzerConfig& analyzer() const noexcept { return m_analyzer; }

    const std::vector<std::string>& doc_ids() const noexcept { return m_doc_ids; }
    const std::string& doc_id(std::uint32_t doc) const { return m_doc_ids.at(doc); }
    std::uint32_t doc_length(std::uint32_t doc) const { return m_doc_len.at(doc); }

    std::optional<std::uint32_t> doc_number(std::string_view id) const
    {
        auto it = m_doc_lookup.find(std::string(id));
        if (it == m_doc_lookup.end()) {
            return std::nullopt;
        }
        return it->second;
    }

    /// Vocabulary in lexicographic order; a term's id is its position here.
    const std::vector<std::string>& terms() const noexcept { return m_terms; }
    const std::string& term(std::uint32_t id) const { return m_terms.at(id); }

    std::optional<std::uint32_t> term_id(std::string_view term) const
    {
        auto it = m_term_lookup.find(std::string(term));
        if (it == m_term_lookup.end()) {
            return std::nullopt;
        }
        return it->second;
    }

    std::span<const Posting> postings(std::uint32_t term_id) const { return m_postings.at(term_id); }

    std::span<const Posting> postings(std::string_view term) const
    {
        auto id = term_id(term);
        return id ? postings(*id) : std::span<const Posting>{};
    }

    std::size_t df(std::string_view term) const { return postings(term).size(); }

    /// Term frequency of `term` in `doc`, 0 if absent.
    std::uint32_t tf(std::string_view term, std::uint32_t doc) const
    {
        auto list = postings(term);
        auto it = std::lower_bound(list.begin(), list.end(), doc,
                                   [](const Posting& p, std::uint32_t d) { return p.doc < d; });
        return (it != list.end() && it->doc == doc) ? it->tf : 0;
    }

    /// Terms of one document, sorted by term id.
    std::span<const TermFreq> doc_terms(std::uint32_t doc) const { return m_forward.at(doc); }

    /// Builds an index over `docs`. Analysis is split across `threads` contiguous partitions;
    /// the merged index is identical for any partitioning.
    static InvertedIndex build(const std::vector<Document>& docs, const AnalyzerConfig& cfg, unsigned threads = 1)
    {
        if (docs.empty()) {
            throw Error("cannot build an index over an empty corpus");
        }
        if (docs.size() > UINT32_MAX) {
            throw Error("corpus too large");
        }
        InvertedIndex idx;
        idx.m_analyzer = cfg;
        idx.m_doc_ids.reserve(docs.size());
        for (std::size_t i = 0; i < docs.size(); ++i) {
            if (!idx.m_doc_lookup.emplace(docs[i].id, static_cast<std::uint32_t>(i)).second) {
                throw DuplicateIdError(docs[i].id, i + 1);
            }
            idx.m_doc_ids.push_back(docs[i].id);
        }

        // Per-document term counts, as sorted (term, tf) vectors.
        using Counts = std::vector<std::pair<std::string, std::uint32_t>>;
        std::vector<Counts> counts(docs.size());
        auto analyze_range = [&](std::size_t begin, std::size_t end) {
            std::map<std::string, std::uint32_t> bag;
            for (std::size_t i = begin; i < end; ++i) {
                bag.clear();
                analyze_each(docs[i].text, cfg, [&](std::string&& t) { ++bag[std::move(t)]; });
                counts[i].assign(bag.begin(), bag.end());
            }
        };
        threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(docs.size())));
        if (threads == 1) {
            analyze_range(0, docs.size());
        } else {
            std::vector<std::jthread> workers;
            std::size_t chunk = (docs.size() + threads - 1) / threads;
            for (std::size_t begin = 0; begin < docs.size(); begin += chunk) {
                workers.emplace_back(analyze_range, begin, std::min(docs.size(), begin + chunk));
            }
        }

        std::map<std::string, std::uint32_t> vocab;
        for (const auto& c : counts) {
            for (const auto& [term, _] : c) {
                vocab.emplace(term, 0);
            }
        }
        idx.m_terms.reserve(vocab.size());
        for (auto& [term, id] : vocab) {
            id = static_cast<std::uint32_t>(idx.m_terms.size());
            idx.m_terms.push_back(term);
        }
        idx.finish_vocabulary();

        idx.m_postings.resize(idx.m_terms.size());
        idx.m_forward.resize(docs.size());
        idx.m_doc_len.resize(docs.size());
        for (std::uint32_t d = 0; d < docs.size(); ++d) {
            std::uint64_t len = 0;
            auto& fwd = idx.m_forward[d];
            fwd.reserve(counts[d].size());
            for (const auto& [term, tf] : counts[d]) {
                auto id = vocab.at(term);
                idx.m_postings[id].push_back({d, tf});
                fwd.push_back({id, tf});
                len += tf;
            }
            if (len > UINT32_MAX) {
                throw Error("document " + docs[d].id + " too long");
            }
            idx.m_doc_len[d] = static_cast<std::uint32_t>(len);
            idx.m_total_length += len;
            counts[d] = {};
        }
        return idx;
    }

    // SRIX container, all integers little-endian:
    //   "SRIX" | u32 version
    //   u8 lowercase | u8 stemmer (0 none, 1 porter) | u32 nStopwords | nStopwords x str
    //   u64 N | u64 totalLength | N x (str docId, u32 docLen)
    //   u64 V | V x (str term, u64 df, df x (u32 doc, u32 tf))
    // where str = u32 byteLength followed by UTF-8 bytes.
    void save(std::ostream& out) const
    {
        Writer w{out};
        out.write(magic.data(), magic.size());
        w.u32(format_version);
        w.u8(m_analyzer.lowercase ? 1 : 0);
        w.u8(m_analyzer.stem == Stemmer::porter ? 1 : 0);
        w.u32(static_cast<std::uint32_t>(m_analyzer.stopwords.size()));
        for (const auto& s : m_analyzer.stopwords) {
            w.str(s);
        }
        w.u64(m_doc_ids.size());
        w.u64(m_total_length);
        for (std::size_t d = 0; d < m_doc_ids.size(); ++d) {
            w.str(m_doc_ids[d]);
            w.u32(m_doc_len[d]);
        }
        w.u64(m_terms.size());
        for (std::size_t t = 0; t < m_terms.size(); ++t) {
            w.str(m_terms[t]);
            w.u64(m_postings[t].size());
            for (const auto& p : m_postings[t]) {
                w.u32(p.doc);
                w.u32(p.tf);
            }
        }
        if (!out) {
            throw Error("I/O error while writing index");
        }
    }

    static InvertedIndex load(std::istream& in)
    {
        Reader r{in};
        std::array<char, 4> head{};
        r.bytes(head.data(), head.size());
        if (head != magic) {
            throw Error("not an SRIX index (bad magic)");
        }
        auto version = r.u32();
        if (version != format_version) {
            throw Error("unsupported SRIX version " + std::to_string(version) + " (expected " +
                        std::to_string(format_version) + ")");
        }
        InvertedIndex idx;
        idx.m_analyzer.lowercase = r.u8() != 0;
        auto stem = r.u8();
        if (stem > 1) {
            throw Error("corrupt index: unknown stemmer");
        }
        idx.m_analyzer.stem = stem == 1 ? Stemmer::porter : Stemmer::none;
        idx.m_analyzer.stopwords.clear();
        for (auto n = r.u32(); n > 0; --n) {
            idx.m_analyzer.stopwords.insert(r.str());
        }
        auto n_docs = r.u64();
        if (n_docs == 0 || n_docs > UINT32_MAX) {
            throw Error("corrupt index: bad document count");
        }
        idx.m_total_length = r.u64();
        idx.m_doc_ids.reserve(n_docs);
        idx.m_doc_len.reserve(n_docs);
        for (std::uint64_t d = 0; d < n_docs; ++d) {
            idx.m_doc_ids.push_back(r.str());
            idx.m_doc_len.push_back(r.u32());
            if (!idx.m_doc_lookup.emplace(idx.m_doc_ids.back(), static_cast<std::uint32_t>(d)).second) {
                throw Error("corrupt index: duplicate doc id " + idx.m_doc_ids.back());
            }
        }
        auto n_terms = r.u64();
        if (n_terms > UINT32_MAX) {
            throw Error("corrupt index: bad vocabulary size");
        }
        idx.m_terms.reserve(n_terms);
        idx.m_postings.resize(n_terms);
        idx.m_forward.resize(n_docs);
        std::vector<std::uint64_t> len_check(n_docs, 0);
        for (std::uint64_t t = 0; t < n_terms; ++t) {
            idx.m_terms.push_back(r.str());
            if (t > 0 && !(idx.m_terms[t - 1] < idx.m_terms[t])) {
                throw Error("corrupt index: vocabulary not sorted");
            }
            auto df = r.u64();
            if (df == 0 || df > n_docs) {
                throw Error("corrupt index: bad document frequency");
            }
            auto& list = idx.m_postings[t];
            list.reserve(df);
            for (std::uint64_t i = 0; i < df; ++i) {
                Posting p{r.u32(), r.u32()};
                if (p.doc >= n_docs || p.tf == 0 || (!list.empty() && list.back().doc >= p.doc)) {
                    throw Error("corrupt index: malformed postings for term " + idx.m_terms[t]);
                }
                list.push_back(p);
                idx.m_forward[p.doc].push_back({static_cast<std::uint32_t>(t), p.tf});
                len_check[p.doc] += p.tf;
            }
        }
        std::uint64_t total = 0;
        for (std::uint64_t d = 0; d < n_docs; ++d) {
            if (len_check[d] != idx.m_doc_len[d]) {
                throw Error("corrupt index: length mismatch for " + idx.m_doc_ids[d]);
            }
            total += len_check[d];
        }
        if (total != idx.m_total_length) {
            throw Error("corrupt index: total length mismatch");
        }
        if (in.peek() != std::char_traits<char>::eof()) {
            throw Error("corrupt index: trailing bytes");
        }
        idx.finish_vocabulary();
        return idx;
    }

  private:
    struct Writer {
        std::ostream& out;
        void u8(std::uint8_t v) { out.put(static_cast<char>(v)); }
        void u32(std::uint32_t v)
        {
            char b[4];
            for (int i = 0; i < 4; ++i) {
                b[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
            }
            out.write(b, 4);
        }
        void u64(std::uint64_t v)
        {
            char b[8];
            for (int i = 0; i < 8; ++i) {
                b[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
            }
            out.write(b, 8);
        }
        void str(const std::string& s)
        {
            u32(static_cast<std::uint32_t>(s.size()));
            out.write(s.data(), static_cast<std::streamsize>(s.size()));
        }
    };

    struct Reader {
        std::istream& in;
        void bytes(char* dst, std::size_t n)
        {
            in.read(dst, static_cast<std::streamsize>(n));
            if (static_cast<std::size_t>(in.gcount()) != n) {
                throw Error("corrupt index: unexpected end of file");
            }
        }
        std::uint8_t u8()
        {
            char c;
            bytes(&c, 1);
            return static_cast<std::uint8_t>(c);
        }
        std::uint32_t u32()
        {
            unsigned char b[4];
            bytes(reinterpret_cast<char*>(b), 4);
            std::uint32_t v = 0;
            for (int i = 3; i >= 0; --i) {
                v = (v << 8) | b[i];
            }
            return v;
        }
        std::uint64_t u64()
        {
            unsigned char b[8];
            bytes(reinterpret_cast<char*>(b), 8);
            std::uint64_t v = 0;
            for (int i = 7; i >= 0; --i) {
                v = (v << 8) | b[i];
            }
            return v;
        }
        std::string str()
        {
            auto n = u32();
            if (n > (1u << 30)) {
                throw Error("corrupt index: string too long");
            }
            std::string s(n, '\0');
            bytes(s.data(), n);
            return s;
        }
    };

    void finish_vocabulary()
    {
        m_term_lookup.clear();
        m_term_lookup.reserve(m_terms.size());
        for (std::uint32_t t = 0; t < m_terms.size(); ++t) {
            m_term_lookup.emplace(m_terms[t], t);
        }
    }

    AnalyzerConfig m_analyzer;
    std::vector<std::string> m_doc_ids;
    std::unordered_map<std::string, std::uint32_t> m_doc_lookup;
    std::vector<std::uint32_t> m_doc_len;
    std::uint64_t m_total_length = 0;
    std::vector<std::string> m_terms;
    std::unordered_map<std::string, std::uint32_t> m_term_lookup;
    std::vector<std::vector<Posting>> m_postings;
    std::vector<std::vector<TermFreq>> m_forward;
};

inline InvertedIndex build_index(const std::vector<Document>& docs, const AnalyzerConfig& cfg, unsigned threads = 1)
{
    return InvertedIndex::build(docs, cfg, threads);
}

} // namespace seqrank
