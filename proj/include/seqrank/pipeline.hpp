#pragma once

#include <atomic>
#include <filesystem>
#include <fstream>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "seqrank/bm25.hpp"
#include "seqrank/config.hpp"
#include "seqrank/corpus_io.hpp"
#include "seqrank/index.hpp"
#include "seqrank/metrics.hpp"
#include "seqrank/remote_scorer.hpp"
#include "seqrank/reranking.hpp"
#include "seqrank/rm3.hpp"
#include "seqrank/sampling.hpp"
#include "seqrank/stats.hpp"

namespace seqrank {

namespace fs = std::filesystem;

inline const std::string first_stage_tag = "firststage";
inline const std::string rerank_tag = "seqrank";

/// Parsed data files shared by every run over the same collection.
struct PipelineInputs {
    DocumentStore corpus;
    std::shared_ptr<const InvertedIndex> index;
    std::vector<Topic> topics;
    std::optional<QrelSet> qrels;
};

namespace detail {

template <typename Fn>
auto stage(const char* name, Fn&& fn) -> decltype(fn())
{
    try {
        return fn();
    } catch (const StageError&) {
        throw;
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception& e) {
        throw StageError(name, e.what());
    }
}

inline std::ifstream open_input(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error("cannot open " + path);
    }
    return in;
}

} // namespace detail

inline PipelineInputs load_inputs(const PipelineConfig& cfg)
{
    cfg.validate();
    auto analyzer = cfg.analyzer();
    PipelineInputs in;
    detail::stage("load", [&] {
        if (!cfg.corpus_path.empty()) {
            auto f = detail::open_input(cfg.corpus_path);
            in.corpus = DocumentStore(parse_corpus(f, cfg.corpus_format));
        }
        auto t = detail::open_input(cfg.topics_path);
        in.topics = parse_topics(t, cfg.topics_format);
        if (cfg.evaluate) {
            auto q = detail::open_input(cfg.qrels_path);
            in.qrels = parse_qrels(q);
        }
    });
    detail::stage("index", [&] {
        if (!cfg.index_path.empty()) {
            auto f = detail::open_input(cfg.index_path);
            auto idx = InvertedIndex::load(f);
            if (!(idx.analyzer() == analyzer)) {
                throw Error("index analyzer settings differ from the configured analyzer");
            }
            in.index = std::make_shared<InvertedIndex>(std::move(idx));
        } else {
            in.index = std::make_shared<InvertedIndex>(build_index(in.corpus.documents(), analyzer, cfg.threads));
        }
    });
    return in;
}

inline std::unique_ptr<Scorer> make_scorer(const PipelineConfig& cfg)
{
    if (cfg.scorer == ScorerKind::remote) {
        return std::make_unique<RemoteScorer>(cfg.remote);
    }
    return std::make_unique<OverlapScorer>(cfg.analyzer());
}

/// Query text for the reranker: description for "description", title for "title",
/// and description-if-present-else-title for "auto".
inline const std::string& rerank_query(const Topic& t, QueryField field)
{
    switch (field) {
        case QueryField::title: return t.title;
        case QueryField::description: return t.description;
        default: return t.description.empty() ? t.title : t.description;
    }
}

/// Bag-of-words stage over topic titles; every topic gets an entry, possibly empty.
inline RunList first_stage_run(const PipelineConfig& cfg, const InvertedIndex& index, const std::vector<Topic>& topics)
{
    RunList run(first_stage_tag);
    std::vector<std::vector<RunEntry>> results(topics.size());
    auto work = [&](std::size_t i) {
        auto terms = analyze(topics[i].title, index.analyzer());
        if (terms.empty()) {
            return;
        }
        if (cfg.first_stage == FirstStage::bm25) {
            results[i] = search_terms(index, cfg.bm25, terms, cfg.k);
        } else {
            results[i] = search_weighted(index, cfg.bm25, rm3_expand(index, cfg.bm25, topics[i].title, cfg.rm3), cfg.k);
        }
    };
    std::vector<std::exception_ptr> errors(topics.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i; (i = next.fetch_add(1)) < topics.size();) {
            try {
                work(i);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    {
        std::vector<std::jthread> pool;
        for (unsigned t = 1; t < cfg.threads; ++t) {
            pool.emplace_back(worker);
        }
        worker();
    }
    for (std::size_t i = 0; i < topics.size(); ++i) {
        if (errors[i]) {
            std::rethrow_exception(errors[i]);
        }
        run.set(topics[i].id, std::move(results[i]));
    }
    return run;
}

namespace detail {

/// Adapts a scorer that is not safe for concurrent calls.
class SerializedScorer final : public Scorer {
  public:
    explicit SerializedScorer(Scorer& inner) : m_inner(inner) {}

    std::vector<LogitPair> score_batch(std::span<const QueryPassage> pairs, const TargetWordConfig& target) override
    {
        std::lock_guard lock(m_mutex);
        return m_inner.score_batch(pairs, target);
    }

    bool concurrent_safe() const noexcept override { return true; }

  private:
    Scorer& m_inner;
    std::mutex m_mutex;
};

} // namespace detail

/// Reranks every topic of `candidates`. Topics may be processed in parallel; output order
/// and content do not depend on scheduling.
inline RunList rerank_run(const PipelineConfig& cfg, const RunList& candidates, const std::vector<Topic>& topics,
                          const CorpusLookup& corpus, Scorer& scorer)
{
    std::unordered_map<std::string, const Topic*> by_id;
    for (const auto& t : topics) {
        by_id.emplace(t.id, &t);
    }
    const auto& list = candidates.topics();
    for (const auto& t : list) {
        if (!by_id.count(t.topic_id)) {
            throw Error("run topic " + t.topic_id + " not found among topics");
        }
    }
    detail::SerializedScorer serialized(scorer);
    Scorer& shared = scorer.concurrent_safe() ? scorer : static_cast<Scorer&>(serialized);

    std::vector<std::vector<RunEntry>> results(list.size());
    std::vector<std::exception_ptr> errors(list.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i; (i = next.fetch_add(1)) < list.size();) {
            try {
                const Topic& topic = *by_id.at(list[i].topic_id);
                results[i] = rerank(list[i].entries, rerank_query(topic, cfg.query_field), corpus, shared,
                                    cfg.target, cfg.window);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    {
        std::vector<std::jthread> pool;
        for (unsigned t = 1; t < cfg.threads; ++t) {
            pool.emplace_back(worker);
        }
        worker();
    }
    for (std::size_t i = 0; i < list.size(); ++i) {
        if (errors[i]) {
            try {
                std::rethrow_exception(errors[i]);
            } catch (const std::exception& e) {
                throw Error("topic " + list[i].topic_id + ": " + e.what());
            }
        }
    }
    RunList out(rerank_tag);
    for (std::size_t i = 0; i < list.size(); ++i) {
        out.set(list[i].topic_id, std::move(results[i]));
    }
    return out;
}

struct Comparison {
    std::string metric;
    std::optional<TTestResult> test;
    double p_bonferroni = 1.0;
    std::string note; // why no test was run, if none

    nlohmann::json to_json() const
    {
        nlohmann::json j;
        j["metric"] = metric;
        if (test) {
            auto finite_or_null = [](double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); };
            j["t"] = finite_or_null(test->t);
            j["df"] = test->df;
            j["p"] = test->p;
            j["pBonferroni"] = p_bonferroni;
            j["n"] = test->n;
            j["meanDifference"] = test->mean_difference;
        } else {
            j["note"] = note;
        }
        return j;
    }
};

/// Paired t-tests of `a` against `b`, one per metric, Bonferroni-adjusted by `comparisons`.
inline std::vector<Comparison> compare_reports(const std::vector<MetricReport>& a, const std::vector<MetricReport>& b,
                                               std::size_t comparisons)
{
    std::vector<Comparison> out;
    for (std::size_t i = 0; i < a.size() && i < b.size(); ++i) {
        Comparison c;
        c.metric = a[i].label();
        try {
            c.test = paired_t_test(a[i], b[i]);
            c.p_bonferroni = bonferroni_adjust(c.test->p, comparisons);
        } catch (const Error& e) {
            c.note = e.what();
        }
        out.push_back(std::move(c));
    }
    return out;
}

struct PipelineResult {
    RunList first_stage;
    RunList reranked;
    std::vector<MetricReport> first_stage_reports;
    std::vector<MetricReport> reranked_reports;
    std::vector<Comparison> comparisons; // reranked vs first stage

    const MetricReport* report(const std::vector<MetricReport>& reports, const std::string& label) const
    {
        for (const auto& r : reports) {
            if (r.label() == label) {
                return &r;
            }
        }
        return nullptr;
    }
};

namespace detail {

/// Files are written to a staging directory and moved into place only after every stage succeeded.
class StagedOutput {
  public:
    explicit StagedOutput(fs::path dir) : m_dir(std::move(dir))
    {
        fs::create_directories(m_dir);
        m_staging = m_dir / (".staging-" + std::to_string(std::random_device{}()));
        fs::remove_all(m_staging);
        fs::create_directories(m_staging);
    }

    StagedOutput(const StagedOutput&) = delete;
    StagedOutput& operator=(const StagedOutput&) = delete;

    ~StagedOutput()
    {
        std::error_code ec;
        fs::remove_all(m_staging, ec);
    }

    template <typename Fn>
    void write(const std::string& name, Fn&& fn)
    {
        std::ofstream out(m_staging / name, std::ios::binary);
        if (!out) {
            throw Error("cannot create " + (m_dir / name).string());
        }
        fn(out);
        out.close();
        if (!out) {
            throw Error("I/O error writing " + (m_dir / name).string());
        }
        m_files.push_back(name);
    }

    void commit()
    {
        for (const auto& name : m_files) {
            fs::rename(m_staging / name, m_dir / name);
        }
        m_files.clear();
    }

  private:
    fs::path m_dir;
    fs::path m_staging;
    std::vector<std::string> m_files;
};

inline nlohmann::json reports_json(const std::vector<MetricReport>& reports)
{
    auto arr = nlohmann::json::array();
    for (const auto& r : reports) {
        arr.push_back(r.summary_json());
    }
    return arr;
}

} // namespace detail

/// index -> retrieve (BM25 or BM25+RM3) -> rerank -> evaluate -> compare.
/// With `cfg.output_dir` set, writes firststage.run, seqrank.run, per-metric TSVs, JSON summaries,
/// comparison.json and the resolved config.toml; nothing is left behind on failure.
/// `scorer_override`, when given, replaces the configured scorer.
inline PipelineResult run_pipeline(const PipelineConfig& cfg, const PipelineInputs& in,
                                   Scorer* scorer_override = nullptr)
{
    cfg.validate();
    if (cfg.evaluate && !in.qrels) {
        throw ConfigError("evaluation requested but no qrels were loaded");
    }
    PipelineResult res;
    std::unique_ptr<Scorer> owned;
    Scorer* scorer = scorer_override;
    if (scorer == nullptr) {
        owned = make_scorer(cfg);
        scorer = owned.get();
    }
    res.first_stage = detail::stage("retrieve", [&] { return first_stage_run(cfg, *in.index, in.topics); });
    res.reranked = detail::stage("rerank", [&] {
        if (in.corpus.documents().empty()) {
            throw Error("reranking needs the corpus text (corpus_path)");
        }
        return rerank_run(cfg, res.first_stage, in.topics, in.corpus.lookup(), *scorer);
    });
    if (cfg.evaluate) {
        detail::stage("evaluate", [&] {
            for (const auto& label : standard_metrics()) {
                res.first_stage_reports.push_back(evaluate(label, res.first_stage, *in.qrels));
                res.reranked_reports.push_back(evaluate(label, res.reranked, *in.qrels));
            }
        });
        res.comparisons = detail::stage("compare", [&] {
            return compare_reports(res.reranked_reports, res.first_stage_reports, cfg.bonferroni_comparisons);
        });
    }
    if (!cfg.output_dir.empty()) {
        detail::stage("write", [&] {
            detail::StagedOutput out(cfg.output_dir);
            out.write(first_stage_tag + ".run", [&](std::ostream& o) { write_run(res.first_stage, o); });
            out.write(rerank_tag + ".run", [&](std::ostream& o) { write_run(res.reranked, o); });
            if (cfg.evaluate) {
                for (std::size_t i = 0; i < res.first_stage_reports.size(); ++i) {
                    const auto& a = res.first_stage_reports[i];
                    const auto& b = res.reranked_reports[i];
                    out.write(first_stage_tag + "." + a.label() + ".tsv", [&](std::ostream& o) { a.write_tsv(o); });
                    out.write(rerank_tag + "." + b.label() + ".tsv", [&](std::ostream& o) { b.write_tsv(o); });
                }
                out.write(first_stage_tag + ".metrics.json",
                          [&](std::ostream& o) { o << detail::reports_json(res.first_stage_reports).dump(2) << '\n'; });
                out.write(rerank_tag + ".metrics.json",
                          [&](std::ostream& o) { o << detail::reports_json(res.reranked_reports).dump(2) << '\n'; });
                out.write("comparison.json", [&](std::ostream& o) {
                    auto arr = nlohmann::json::array();
                    for (const auto& c : res.comparisons) {
                        arr.push_back(c.to_json());
                    }
                    nlohmann::json j{{"a", rerank_tag}, {"b", first_stage_tag},
                                     {"bonferroniComparisons", cfg.bonferroni_comparisons}, {"tests", arr}};
                    o << j.dump(2) << '\n';
                });
            }
            out.write("config.toml", [&](std::ostream& o) { save_config(cfg, o); });
            out.commit();
        });
    }
    return res;
}

inline PipelineResult run_pipeline(const PipelineConfig& cfg, Scorer* scorer_override = nullptr)
{
    return run_pipeline(cfg, load_inputs(cfg), scorer_override);
}

// ---------------------------------------------------------------------------------------------
// Target-word probing

struct ProbingConfig {
    std::string name;
    TargetWordConfig target;
};

/// The six target-word configurations: the default pair, its reversal, antonyms, related words,
/// unrelated words, and two arbitrary single subword tokens.
inline std::vector<ProbingConfig> probing_suite()
{
    return {
        {"Baseline", {"true", "false"}},
        {"Reverse", {"false", "true"}},
        {"Antonyms", {"hot", "cold"}},
        {"RelatedWords", {"apple", "orange"}},
        {"UnrelatedWords", {"hot", "orange"}},
        {"Subwords", {"▁ab", "▁de"}},
    };
}

/// Optional training pool; when set, each trial writes its class-balanced sample for fine-tuning.
struct SamplerParams {
    std::string train_path;
    TrainFormat train_format = TrainFormat::labeled;
    std::size_t n_pos = 1000;
    std::size_t n_neg = 1000;
};

struct ProbingRow {
    std::string name;
    TargetWordConfig target;
    std::vector<double> values; // one per trial
    double mean = 0.0;
    std::optional<double> half_width; // none when trials < 2
};

struct ProbingReport {
    std::string metric;
    std::vector<ProbingRow> rows; // suite order
    std::size_t pipeline_runs = 0;

    /// "name<TAB>positive<TAB>negative<TAB>mean<TAB>ci95" with "n/a" for a missing interval.
    void write_tsv(std::ostream& out) const
    {
        out << "name\tpositive\tnegative\t" << metric << "_mean\tci95\n";
        for (const auto& r : rows) {
            out << r.name << '\t' << r.target.positive << '\t' << r.target.negative << '\t'
                << detail::format_score(r.mean) << '\t'
                << (r.half_width ? detail::format_score(*r.half_width) : std::string("n/a")) << '\n';
        }
    }

    nlohmann::json to_json() const
    {
        nlohmann::json j;
        j["metric"] = metric;
        j["pipelineRuns"] = pipeline_runs;
        auto& rows_json = j["rows"] = nlohmann::json::array();
        for (const auto& r : rows) {
            rows_json.push_back({{"name", r.name},
                                 {"positive", r.target.positive},
                                 {"negative", r.target.negative},
                                 {"values", r.values},
                                 {"mean", r.mean},
                                 {"ci95", r.half_width ? nlohmann::json(*r.half_width) : nlohmann::json("n/a")}});
        }
        return j;
    }
};

/// Runs the pipeline once per (config, trial) with seed = base seed + trial index and records
/// `metric` of the reranked run. Any failed trial aborts the suite.
inline ProbingReport run_probing(const PipelineConfig& base, const std::vector<ProbingConfig>& suite,
                                 std::size_t trials, const SamplerParams& sampler = {},
                                 const std::string& metric = "mrr@10", Scorer* scorer_override = nullptr)
{
    if (trials < 1) {
        throw ConfigError("trials must be >= 1");
    }
    if (!base.evaluate) {
        throw ConfigError("probing needs evaluation (qrels_path)");
    }
    {
        std::set<std::string> names;
        for (const auto& c : suite) {
            c.target.validate();
            if (!names.insert(c.name).second) {
                throw ConfigError("duplicate probing config name '" + c.name + "'");
            }
        }
    }
    base.validate();
    auto inputs = load_inputs(base);
    std::vector<TrainInstance> pool;
    if (!sampler.train_path.empty()) {
        auto f = detail::open_input(sampler.train_path);
        pool = detail::stage("sample", [&] { return parse_train_instances(f, sampler.train_format); });
    }

    ProbingReport report;
    report.metric = metric;
    for (const auto& pc : suite) {
        ProbingRow row{pc.name, pc.target, {}, 0.0, std::nullopt};
        for (std::size_t trial = 0; trial < trials; ++trial) {
            PipelineConfig cfg = base;
            cfg.target = pc.target;
            cfg.seed = base.seed + trial;
            if (!base.output_dir.empty()) {
                cfg.output_dir = (fs::path(base.output_dir) / "probe" / pc.name / ("trial-" + std::to_string(trial))).string();
            }
            if (!pool.empty()) {
                auto sample = detail::stage("sample", [&] { return sample_balanced(pool, sampler.n_pos, sampler.n_neg, cfg.seed); });
                if (!cfg.output_dir.empty()) {
                    fs::create_directories(cfg.output_dir);
                    std::ofstream out(fs::path(cfg.output_dir) / "train.tsv", std::ios::binary);
                    write_train_instances(sample, out, pc.target.positive, pc.target.negative);
                }
            }
            auto result = run_pipeline(cfg, inputs, scorer_override);
            ++report.pipeline_runs;
            const auto* rep = result.report(result.reranked_reports, metric);
            row.values.push_back(rep ? rep->aggregate : evaluate(metric, result.reranked, *inputs.qrels).aggregate);
        }
        if (row.values.size() >= 2) {
            auto ci = mean_ci95(row.values);
            row.mean = ci.mean;
            row.half_width = ci.half_width;
        } else {
            row.mean = row.values.front();
        }
        report.rows.push_back(std::move(row));
    }
    return report;
}

} // namespace seqrank
