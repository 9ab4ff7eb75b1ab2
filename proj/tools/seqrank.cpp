// seqrank command-line interface.
//
//   seqrank [--seed N] [--config FILE] [--output-dir DIR] <command> [options]
//
// Exit status: 0 success, 1 usage or configuration error, 2 runtime error.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "seqrank/seqrank.hpp"

namespace fs = std::filesystem;
using namespace seqrank;

namespace {

/// Command-line values that override fields of the (possibly file-loaded) PipelineConfig.
struct Overrides {
    std::optional<std::string> corpus, corpus_format, topics, topics_format, qrels, index;
    std::optional<std::string> stopwords, stem;
    bool no_lowercase = false;
    std::optional<std::size_t> k, fb_docs, fb_terms;
    std::optional<double> k1, b, orig_weight;
    std::optional<std::string> scorer, endpoint;
    std::optional<std::size_t> batch_size;
    std::optional<double> timeout;
    std::optional<unsigned> retries;
    std::optional<std::string> positive, negative, query_field;
    std::optional<std::size_t> window_size, window_stride;
    std::optional<unsigned> threads;
    std::optional<std::size_t> comparisons;

    void apply(PipelineConfig& c) const
    {
        if (corpus) c.corpus_path = *corpus;
        if (corpus_format) c.corpus_format = parse_corpus_format(*corpus_format);
        if (topics) c.topics_path = *topics;
        if (topics_format) c.topics_format = parse_topic_format(*topics_format);
        if (qrels) c.qrels_path = *qrels;
        if (index) c.index_path = *index;
        if (stopwords) c.stopwords = *stopwords;
        if (stem) c.stem = parse_stemmer(*stem);
        if (no_lowercase) c.lowercase = false;
        if (k) c.k = *k;
        if (k1) c.bm25.k1 = *k1;
        if (b) c.bm25.b = *b;
        if (fb_docs) c.rm3.fb_docs = *fb_docs;
        if (fb_terms) c.rm3.fb_terms = *fb_terms;
        if (orig_weight) c.rm3.original_weight = *orig_weight;
        if (scorer) c.scorer = parse_scorer_kind(*scorer);
        if (endpoint) c.remote.endpoint = *endpoint;
        if (batch_size) c.remote.batch_size = *batch_size;
        if (timeout) c.remote.timeout_seconds = *timeout;
        if (retries) c.remote.retries = *retries;
        if (positive) c.target.positive = *positive;
        if (negative) c.target.negative = *negative;
        if (query_field) c.query_field = parse_query_field(*query_field);
        if (window_size) c.window.size = *window_size;
        if (window_stride) c.window.stride = *window_stride;
        if (threads) c.threads = *threads;
        if (comparisons) c.bonferroni_comparisons = *comparisons;
    }
};

void add_corpus_options(CLI::App* cmd, Overrides& o)
{
    cmd->add_option("--corpus", o.corpus, "Corpus file (TSV docId<TAB>text or JSONL)");
    cmd->add_option("--corpus-format", o.corpus_format, "tsv | jsonl");
}

void add_analyzer_options(CLI::App* cmd, Overrides& o)
{
    cmd->add_option("--stopwords", o.stopwords, "default | none | path to a word list");
    cmd->add_option("--stem", o.stem, "porter | none");
    cmd->add_flag("--no-lowercase", o.no_lowercase, "Keep letter case");
    cmd->add_option("--threads", o.threads, "Worker threads");
}

void add_topic_options(CLI::App* cmd, Overrides& o)
{
    cmd->add_option("--topics", o.topics, "Topics file (TSV id<TAB>title[<TAB>description])");
    cmd->add_option("--topics-format", o.topics_format, "tsv2 | tsv3");
}

void add_retrieval_options(CLI::App* cmd, Overrides& o)
{
    add_corpus_options(cmd, o);
    add_analyzer_options(cmd, o);
    add_topic_options(cmd, o);
    cmd->add_option("--index", o.index, "Prebuilt SRIX index (instead of indexing --corpus)");
    cmd->add_option("-k,--depth", o.k, "Documents retrieved per topic (default 1000)");
    cmd->add_option("--k1", o.k1, "BM25 k1 (default 0.9)");
    cmd->add_option("--b", o.b, "BM25 b (default 0.4)");
}

void add_rm3_options(CLI::App* cmd, Overrides& o)
{
    cmd->add_option("--fb-docs", o.fb_docs, "RM3 feedback documents (default 10)");
    cmd->add_option("--fb-terms", o.fb_terms, "RM3 feedback terms (default 10)");
    cmd->add_option("--orig-weight", o.orig_weight, "RM3 original query weight (default 0.5)");
}

void add_rerank_options(CLI::App* cmd, Overrides& o)
{
    cmd->add_option("--scorer", o.scorer, "overlap | remote");
    cmd->add_option("--endpoint", o.endpoint, "Inference service base URL, e.g. http://127.0.0.1:8080");
    cmd->add_option("--batch-size", o.batch_size, "Pairs per scoring request");
    cmd->add_option("--timeout", o.timeout, "Request timeout in seconds");
    cmd->add_option("--retries", o.retries, "Retries after a transport failure");
    cmd->add_option("--positive", o.positive, "Positive target word (default true)");
    cmd->add_option("--negative", o.negative, "Negative target word (default false)");
    cmd->add_option("--window-size", o.window_size, "Sentences per passage (default 10)");
    cmd->add_option("--window-stride", o.window_stride, "Sentence stride between passages (default 5)");
    cmd->add_option("--query-field", o.query_field, "title | description | auto");
}

void require(bool ok, const std::string& message)
{
    if (!ok) {
        throw ConfigError(message);
    }
}

std::ifstream open(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error("cannot open " + path);
    }
    return in;
}

/// Writes through `fn` to `path`, or to stdout when `path` is empty.
template <typename Fn>
void emit(const std::string& path, Fn&& fn)
{
    if (path.empty()) {
        fn(std::cout);
        std::cout.flush();
        return;
    }
    if (auto parent = fs::path(path).parent_path(); !parent.empty()) {
        fs::create_directories(parent);
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw Error("cannot create " + path);
    }
    fn(out);
    out.close();
    if (!out) {
        throw Error("I/O error writing " + path);
    }
}

std::string default_output(const std::string& explicit_path, const std::string& output_dir, const std::string& name)
{
    if (!explicit_path.empty() || output_dir.empty()) {
        return explicit_path;
    }
    return (fs::path(output_dir) / name).string();
}

InvertedIndex obtain_index(const PipelineConfig& cfg)
{
    if (!cfg.index_path.empty()) {
        auto in = open(cfg.index_path);
        return InvertedIndex::load(in);
    }
    require(!cfg.corpus_path.empty(), "--corpus or --index is required");
    auto in = open(cfg.corpus_path);
    return build_index(parse_corpus(in, cfg.corpus_format), cfg.analyzer(), cfg.threads);
}

std::vector<Topic> load_topics(const PipelineConfig& cfg)
{
    require(!cfg.topics_path.empty(), "--topics is required");
    auto in = open(cfg.topics_path);
    return parse_topics(in, cfg.topics_format);
}

RunList load_run(const std::string& path)
{
    auto in = open(path);
    return parse_run(in);
}

QrelSet load_qrels(const std::string& path)
{
    require(!path.empty(), "--qrels is required");
    auto in = open(path);
    return parse_qrels(in);
}

void print_reports(const std::vector<MetricReport>& reports, std::ostream& out)
{
    for (const auto& r : reports) {
        out << r.label() << '\t' << detail::format_score(r.aggregate) << '\t' << r.per_topic.size() << " topics\n";
    }
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"seqrank: BM25 / RM3 retrieval, target-word reranking and IR evaluation"};
    app.require_subcommand(1);
    app.set_help_all_flag("--help-all", "Help for every command");

    std::optional<std::uint64_t> seed;
    std::string config_path;
    std::string output_dir;
    app.add_option("--seed", seed, "Random seed (sampling, probing trials)");
    app.add_option("--config", config_path, "TOML-style key = value pipeline configuration");
    app.add_option("--output-dir", output_dir, "Directory for outputs");

    Overrides o;
    std::string output;
    std::string tag;

    auto* index_cmd = app.add_subcommand("index", "Build an SRIX index from a corpus");
    add_corpus_options(index_cmd, o);
    add_analyzer_options(index_cmd, o);
    index_cmd->add_option("-o,--output", output, "Index file (default <output-dir>/index.srix)");

    auto* search_cmd = app.add_subcommand("search", "BM25 retrieval over topic titles");
    add_retrieval_options(search_cmd, o);
    search_cmd->add_option("-o,--output", output, "Run file (default stdout)");
    search_cmd->add_option("--tag", tag, "Run tag (default bm25)");

    auto* expand_cmd = app.add_subcommand("expand-search", "BM25+RM3 retrieval over topic titles");
    add_retrieval_options(expand_cmd, o);
    add_rm3_options(expand_cmd, o);
    expand_cmd->add_option("-o,--output", output, "Run file (default stdout)");
    expand_cmd->add_option("--tag", tag, "Run tag (default bm25_rm3)");

    std::string run_path;
    auto* rerank_cmd = app.add_subcommand("rerank", "Rerank a candidate run with a target-word scorer");
    add_corpus_options(rerank_cmd, o);
    add_analyzer_options(rerank_cmd, o);
    add_topic_options(rerank_cmd, o);
    add_rerank_options(rerank_cmd, o);
    rerank_cmd->add_option("--run", run_path, "Candidate run file")->required();
    rerank_cmd->add_option("-o,--output", output, "Run file (default stdout)");
    rerank_cmd->add_option("--tag", tag, "Run tag (default seqrank)");

    std::vector<std::string> metrics;
    auto* eval_cmd = app.add_subcommand("evaluate", "Compute MRR@10, AP, P@20, nDCG@20 for a run");
    eval_cmd->add_option("--run", run_path, "Run file")->required();
    eval_cmd->add_option("--qrels", o.qrels, "Qrels file");
    eval_cmd->add_option("--metric", metrics, "Metric labels, e.g. mrr@10 ap p@20 ndcg@20");

    std::string run_a;
    std::string run_b;
    auto* compare_cmd = app.add_subcommand("compare", "Paired t-tests between two runs");
    compare_cmd->add_option("--run-a", run_a, "First run")->required();
    compare_cmd->add_option("--run-b", run_b, "Second run (baseline)")->required();
    compare_cmd->add_option("--qrels", o.qrels, "Qrels file");
    compare_cmd->add_option("--metric", metrics, "Metric labels");
    compare_cmd->add_option("--comparisons", o.comparisons, "Bonferroni comparison count (default 1)");

    SamplerParams sampler;
    std::string train_format = "labeled";
    auto* sample_cmd = app.add_subcommand("sample", "Class-balanced sampling of training instances");
    sample_cmd->add_option("--train", sampler.train_path, "Training TSV")->required();
    sample_cmd->add_option("--train-format", train_format, "labeled | triples");
    sample_cmd->add_option("--n-pos", sampler.n_pos, "Positives to draw")->required();
    sample_cmd->add_option("--n-neg", sampler.n_neg, "Negatives to draw")->required();
    sample_cmd->add_option("--positive", o.positive, "Label word written for positives (default true)");
    sample_cmd->add_option("--negative", o.negative, "Label word written for negatives (default false)");
    sample_cmd->add_option("-o,--output", output, "Output TSV (default stdout)");

    std::size_t trials = 5;
    std::vector<std::string> probe_names;
    std::string probe_metric = "mrr@10";
    auto* probe_cmd = app.add_subcommand("probe", "Target-word probing suite");
    add_retrieval_options(probe_cmd, o);
    add_rerank_options(probe_cmd, o);
    probe_cmd->add_option("--qrels", o.qrels, "Qrels file");
    probe_cmd->add_option("--trials", trials, "Trials per configuration (default 5)");
    probe_cmd->add_option("--configs", probe_names, "Subset of configuration names (default all six)");
    probe_cmd->add_option("--metric", probe_metric, "Recorded metric (default mrr@10)");
    probe_cmd->add_option("--train", sampler.train_path, "Training pool to sample per trial");
    probe_cmd->add_option("--train-format", train_format, "labeled | triples");
    probe_cmd->add_option("--n-pos", sampler.n_pos, "Positives per trial sample");
    probe_cmd->add_option("--n-neg", sampler.n_neg, "Negatives per trial sample");

    auto* pipeline_cmd = app.add_subcommand("pipeline", "index -> retrieve -> rerank -> evaluate -> compare");
    add_retrieval_options(pipeline_cmd, o);
    add_rm3_options(pipeline_cmd, o);
    add_rerank_options(pipeline_cmd, o);
    pipeline_cmd->add_option("--qrels", o.qrels, "Qrels file");
    std::string first_stage;
    pipeline_cmd->add_option("--first-stage", first_stage, "bm25 | bm25_rm3");
    bool no_eval = false;
    pipeline_cmd->add_flag("--no-eval", no_eval, "Skip evaluation");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 1;
    }

    try {
        PipelineConfig cfg;
        if (!config_path.empty()) {
            cfg = load_config_file(config_path);
        }
        o.apply(cfg);
        if (seed) {
            cfg.seed = *seed;
        }
        if (!output_dir.empty()) {
            cfg.output_dir = output_dir;
        }
        auto parse_train_format = [&] {
            return detail::parse_enum<TrainFormat>("train_format", train_format,
                                                   {{"labeled", TrainFormat::labeled}, {"triples", TrainFormat::triples}});
        };

        if (*index_cmd) {
            require(!cfg.corpus_path.empty(), "--corpus is required");
            auto path = default_output(output, cfg.output_dir, "index.srix");
            require(!path.empty(), "--output or --output-dir is required");
            auto index = obtain_index(cfg);
            emit(path, [&](std::ostream& out) { index.save(out); });
            std::cerr << "indexed " << index.num_docs() << " documents, " << index.num_terms() << " terms, avgdl "
                      << index.avgdl() << " -> " << path << '\n';
        } else if (*search_cmd || *expand_cmd) {
            cfg.bm25.validate();
            cfg.rm3.validate();
            cfg.first_stage = *expand_cmd ? FirstStage::bm25_rm3 : FirstStage::bm25;
            auto topics = load_topics(cfg);
            auto index = obtain_index(cfg);
            RunList run = first_stage_run(cfg, index, topics);
            run.set_tag(tag.empty() ? to_string(cfg.first_stage) : tag);
            emit(default_output(output, cfg.output_dir, run.tag() + ".run"), [&](std::ostream& out) { write_run(run, out); });
        } else if (*rerank_cmd) {
            cfg.window.validate();
            cfg.target.validate();
            require(!cfg.corpus_path.empty(), "--corpus is required");
            auto topics = load_topics(cfg);
            auto candidates = load_run(run_path);
            auto corpus_in = open(cfg.corpus_path);
            DocumentStore corpus(parse_corpus(corpus_in, cfg.corpus_format));
            auto scorer = make_scorer(cfg);
            RunList run = rerank_run(cfg, candidates, topics, corpus.lookup(), *scorer);
            run.set_tag(tag.empty() ? rerank_tag : tag);
            emit(default_output(output, cfg.output_dir, run.tag() + ".run"), [&](std::ostream& out) { write_run(run, out); });
        } else if (*eval_cmd) {
            auto qrels = load_qrels(cfg.qrels_path);
            auto run = load_run(run_path);
            std::vector<MetricReport> reports;
            for (const auto& label : metrics.empty() ? standard_metrics() : metrics) {
                reports.push_back(evaluate(label, run, qrels));
            }
            print_reports(reports, std::cout);
            if (!cfg.output_dir.empty()) {
                const auto stem = fs::path(run_path).stem().string();
                auto arr = nlohmann::json::array();
                for (const auto& r : reports) {
                    emit((fs::path(cfg.output_dir) / (stem + "." + r.label() + ".tsv")).string(),
                         [&](std::ostream& out) { r.write_tsv(out); });
                    arr.push_back(r.summary_json());
                }
                emit((fs::path(cfg.output_dir) / (stem + ".metrics.json")).string(),
                     [&](std::ostream& out) { out << arr.dump(2) << '\n'; });
            }
        } else if (*compare_cmd) {
            auto qrels = load_qrels(cfg.qrels_path);
            auto a = load_run(run_a);
            auto b = load_run(run_b);
            std::vector<MetricReport> ra;
            std::vector<MetricReport> rb;
            for (const auto& label : metrics.empty() ? standard_metrics() : metrics) {
                ra.push_back(evaluate(label, a, qrels));
                rb.push_back(evaluate(label, b, qrels));
            }
            auto comparisons = compare_reports(ra, rb, cfg.bonferroni_comparisons);
            auto arr = nlohmann::json::array();
            std::cout << "metric\ta\tb\tt\tp\tp_bonferroni\n";
            for (std::size_t i = 0; i < comparisons.size(); ++i) {
                const auto& c = comparisons[i];
                std::cout << c.metric << '\t' << detail::format_score(ra[i].aggregate) << '\t'
                          << detail::format_score(rb[i].aggregate) << '\t';
                if (c.test) {
                    std::cout << c.test->t << '\t' << c.test->p << '\t' << c.p_bonferroni << '\n';
                } else {
                    std::cout << "n/a\tn/a\tn/a\t# " << c.note << '\n';
                }
                arr.push_back(c.to_json());
            }
            if (!cfg.output_dir.empty()) {
                nlohmann::json j{{"a", run_a}, {"b", run_b}, {"bonferroniComparisons", cfg.bonferroni_comparisons},
                                 {"tests", arr}};
                emit((fs::path(cfg.output_dir) / "comparison.json").string(),
                     [&](std::ostream& out) { out << j.dump(2) << '\n'; });
            }
        } else if (*sample_cmd) {
            cfg.target.validate();
            auto in = open(sampler.train_path);
            auto pool = parse_train_instances(in, parse_train_format());
            auto sample = sample_balanced(pool, sampler.n_pos, sampler.n_neg, cfg.seed);
            emit(default_output(output, cfg.output_dir, "sample.tsv"), [&](std::ostream& out) {
                write_train_instances(sample, out, cfg.target.positive, cfg.target.negative);
            });
        } else if (*probe_cmd) {
            sampler.train_format = parse_train_format();
            auto suite = probing_suite();
            if (!probe_names.empty()) {
                std::vector<ProbingConfig> picked;
                for (const auto& name : probe_names) {
                    auto it = std::find_if(suite.begin(), suite.end(), [&](const auto& c) { return c.name == name; });
                    require(it != suite.end(), "unknown probing configuration '" + name + "'");
                    picked.push_back(*it);
                }
                suite = std::move(picked);
            }
            auto report = run_probing(cfg, suite, trials, sampler, probe_metric);
            report.write_tsv(std::cout);
            if (!cfg.output_dir.empty()) {
                emit((fs::path(cfg.output_dir) / "probe.tsv").string(), [&](std::ostream& out) { report.write_tsv(out); });
                emit((fs::path(cfg.output_dir) / "probe.json").string(),
                     [&](std::ostream& out) { out << report.to_json().dump(2) << '\n'; });
            }
        } else if (*pipeline_cmd) {
            if (!first_stage.empty()) {
                cfg.first_stage = parse_first_stage(first_stage);
            }
            if (no_eval) {
                cfg.evaluate = false;
            }
            auto result = run_pipeline(cfg);
            if (cfg.evaluate) {
                std::cout << "# " << first_stage_tag << '\n';
                print_reports(result.first_stage_reports, std::cout);
                std::cout << "# " << rerank_tag << '\n';
                print_reports(result.reranked_reports, std::cout);
                for (const auto& c : result.comparisons) {
                    if (c.test) {
                        std::cout << "# " << c.metric << ": t=" << c.test->t << " p=" << c.test->p << '\n';
                    }
                }
            } else {
                std::cout << result.reranked.entry_count() << " reranked entries\n";
            }
        }
    } catch (const ConfigError& e) {
        std::cerr << "seqrank: configuration error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "seqrank: error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
