#include <fstream>
#include <iostream>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "pathgen/codec.hpp"
#include "pathgen/error.hpp"
#include "pathgen/generator.hpp"
#include "pathgen/grad_check.hpp"
#include "pathgen/kg.hpp"
#include "pathgen/metrics.hpp"
#include "pathgen/qa.hpp"
#include "pathgen/sampler.hpp"
#include "pathgen/scorer.hpp"
#include "pathgen/util.hpp"

using namespace pathgen;
using nlohmann::json;

namespace {

std::ifstream open_in(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open " + path);
    return in;
}

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path);
    return out;
}

// Every artifact-producing run drops its resolved settings next to the
// artifact so it can be regenerated without the original command line.
void write_run_record(const std::string& artifact, const std::string& subcommand, json cfg) {
    cfg["subcommand"] = subcommand;
    std::ofstream out(artifact + ".run.json", std::ios::binary);
    if (out) out << cfg.dump(2) << "\n";
}

struct CommonOpts {
    uint64_t seed = 0;
    int threads = 1;
};

void add_common(CLI::App* cmd, CommonOpts& c) {
    cmd->add_option("--seed", c.seed, "Random seed");
    cmd->add_option("--threads", c.threads, "Worker threads");
    cmd->set_config("--config", "", "key=value file; explicit flags win");
}

struct KgOpts {
    std::string kg_path;
    std::string discard_path;
    std::string lemma_path;
};

void add_kg(CLI::App* cmd, KgOpts& k) {
    cmd->add_option("--kg", k.kg_path, "Knowledge graph TSV")->required();
    cmd->add_option("--discard-relations", k.discard_path,
                    "Relation names to drop at load, one per line");
    cmd->add_option("--lemmas", k.lemma_path, "surface<TAB>entity phrase table");
}

KnowledgeGraph load_graph(const KgOpts& k) {
    std::set<std::string> discard =
        k.discard_path.empty() ? default_discard_relations() : load_discard_file(k.discard_path);
    KnowledgeGraph kg = load_kg_file(k.kg_path, discard);
    if (!k.lemma_path.empty()) {
        std::ifstream in = open_in(k.lemma_path);
        kg.load_lemma_table(in);
    }
    return kg;
}

std::vector<QAExample> load_examples(const std::string& path, const KnowledgeGraph& kg) {
    std::ifstream in = open_in(path);
    return load_qa_jsonl(in, kg);
}

json kg_record(const KgOpts& k) {
    return {{"kg", k.kg_path}, {"discard_relations", k.discard_path}, {"lemmas", k.lemma_path}};
}

// ---- sample-paths ----------------------------------------------------

struct SamplePathsOpts {
    CommonOpts common;
    KgOpts kg;
    std::string strategy = "global";
    std::string start_path;
    std::string hops = "1,2,3";
    long count_per_hop = 0;
    std::string out;
};

int run_sample_paths(const SamplePathsOpts& o) {
    KnowledgeGraph kg = load_graph(o.kg);
    CorpusRequest req;
    req.seed = o.common.seed;
    req.threads = o.common.threads;
    if (o.strategy == "global") {
        req.strategy = SampleStrategy::Global;
    } else if (o.strategy == "local") {
        req.strategy = SampleStrategy::Local;
        if (o.start_path.empty()) throw Error("local sampling needs --start-entities");
        std::ifstream in = open_in(o.start_path);
        std::string line;
        long line_no = 0;
        while (std::getline(in, line)) {
            ++line_no;
            std::string phrase = trim(line);
            if (phrase.empty()) continue;
            std::optional<int> id = kg.entity_id(normalize_entity_phrase(phrase));
            if (!id) {
                throw Error("unknown start entity at line " + std::to_string(line_no) + ": '" +
                            phrase + "'");
            }
            req.start_entities.push_back(*id);
        }
    } else {
        throw Error("unknown strategy: '" + o.strategy + "' (expected global or local)");
    }
    for (const std::string& h : split(o.hops, ',')) {
        int hop = std::stoi(h);
        if (hop < 1) throw Error("hop counts must be positive");
        req.count_per_hop[hop] = o.count_per_hop;
    }

    PathCorpus corpus = sample_corpus(kg, req);
    std::ofstream out = open_out(o.out);
    write_corpus_jsonl(out, corpus, kg);
    write_run_record(o.out, "sample-paths",
                     {{"kg", kg_record(o.kg)},
                      {"strategy", o.strategy},
                      {"start_entities", o.start_path},
                      {"hops", o.hops},
                      {"count_per_hop", o.count_per_hop},
                      {"seed", o.common.seed},
                      {"threads", o.common.threads},
                      {"out", o.out}});
    std::cout << json{{"paths", corpus.paths.size()}, {"out", o.out}}.dump() << "\n";
    return 0;
}

// ---- split -----------------------------------------------------------

struct SplitOpts {
    CommonOpts common;
    KgOpts kg;
    std::string in;
    std::string ratio = "90:5:5";
    std::string out_prefix;
};

int run_split(const SplitOpts& o) {
    std::vector<std::string> parts = split(o.ratio, ':');
    if (parts.size() != 3) throw Error("ratio must look like 90:5:5");
    std::array<int, 3> ratio{};
    for (int i = 0; i < 3; ++i) ratio[i] = std::stoi(parts[i]);

    KnowledgeGraph kg = load_graph(o.kg);
    std::ifstream in = open_in(o.in);
    PathCorpus corpus = read_corpus_jsonl(in, kg);
    CorpusSplit splits = split_corpus(corpus, ratio, o.common.seed);

    std::string prefix = o.out_prefix;
    if (prefix.empty()) {
        prefix = o.in;
        if (prefix.size() > 6 && prefix.substr(prefix.size() - 6) == ".jsonl") {
            prefix = prefix.substr(0, prefix.size() - 6);
        }
    }
    auto emit = [&](const std::string& name, const PathCorpus& c) {
        std::ofstream out = open_out(prefix + "." + name + ".jsonl");
        write_corpus_jsonl(out, c, kg);
    };
    emit("train", splits.train);
    emit("dev", splits.dev);
    emit("test", splits.test);
    write_run_record(prefix, "split",
                     {{"kg", kg_record(o.kg)},
                      {"in", o.in},
                      {"ratio", o.ratio},
                      {"seed", o.common.seed},
                      {"out_prefix", prefix}});
    std::cout << json{{"train", splits.train.paths.size()},
                      {"dev", splits.dev.paths.size()},
                      {"test", splits.test.paths.size()}}
                     .dump()
              << "\n";
    return 0;
}

// ---- train-generator ---------------------------------------------------

struct TrainGeneratorOpts {
    CommonOpts common;
    KgOpts kg;
    std::string train_path;
    std::string dev_path;
    std::string out;
    GeneratorConfig model;
    GeneratorTrainOptions opt;
};

std::vector<TokenSequence> encode_corpus(const PathCorpus& corpus, const Vocab& vocab,
                                         const KnowledgeGraph& kg) {
    std::vector<TokenSequence> out;
    out.reserve(corpus.paths.size());
    for (const Path& p : corpus.paths) out.push_back(encode_path(p, vocab, kg));
    return out;
}

int run_train_generator(const TrainGeneratorOpts& o) {
    KnowledgeGraph kg = load_graph(o.kg);
    Vocab vocab = build_vocab(kg);
    for (const std::string& w : vocab.ambiguity_warnings) std::cerr << "warning: " << w << "\n";

    std::ifstream train_in = open_in(o.train_path);
    std::vector<TokenSequence> train = encode_corpus(read_corpus_jsonl(train_in, kg), vocab, kg);
    std::vector<TokenSequence> dev;
    if (!o.dev_path.empty()) {
        std::ifstream dev_in = open_in(o.dev_path);
        dev = encode_corpus(read_corpus_jsonl(dev_in, kg), vocab, kg);
    }

    GeneratorModel model(vocab, o.model, o.common.seed);
    GeneratorTrainOptions opt = o.opt;
    opt.seed = o.common.seed;
    GeneratorTrainStats stats = train_generator(model, train, dev, opt);
    model.save(o.out);
    write_run_record(o.out, "train-generator",
                     {{"kg", kg_record(o.kg)},
                      {"train", o.train_path},
                      {"dev", o.dev_path},
                      {"model", o.model.to_json()},
                      {"lr", opt.lr},
                      {"batch_size", opt.batch_size},
                      {"warmup_steps", opt.warmup_steps},
                      {"max_epochs", opt.max_epochs},
                      {"patience", opt.patience},
                      {"seed", o.common.seed},
                      {"threads", o.common.threads},
                      {"out", o.out}});
    json status = {{"epochs", stats.train_losses.size()},
                   {"steps", stats.steps},
                   {"train_loss", stats.train_losses.empty() ? json() : json(stats.train_losses.back())},
                   {"best_dev", dev.empty() ? json() : json(stats.best_dev)}};
    std::cout << status.dump() << "\n";
    return 0;
}

// ---- generate ----------------------------------------------------------

struct GenerateOpts {
    CommonOpts common;
    KgOpts kg;
    std::string model_path;
    std::string pairs_path;
    std::string out;
};

int run_generate(const GenerateOpts& o) {
    KnowledgeGraph kg = load_graph(o.kg);
    GeneratorModel model = GeneratorModel::load(o.model_path);

    std::vector<std::pair<std::string, std::string>> pairs;
    {
        std::ifstream in = open_in(o.pairs_path);
        std::string line;
        long line_no = 0;
        while (std::getline(in, line)) {
            ++line_no;
            if (trim(line).empty()) continue;
            std::vector<std::string> cols = split(line, '\t');
            if (cols.size() != 2) {
                throw Error("pair at line " + std::to_string(line_no) +
                            ": expected source<TAB>target");
            }
            pairs.emplace_back(trim(cols[0]), trim(cols[1]));
        }
    }

    std::vector<GenerationRecord> records(pairs.size());
    std::mutex err_mutex;
    std::string first_error;
    parallel_for(pairs.size(), o.common.threads, [&](size_t i) {
        try {
            GenerationResult res = generate_path(model, pairs[i].first, pairs[i].second, kg);
            records[i].source = res.source;
            records[i].target = res.target;
            records[i].tokens = ids_to_tokens(res.ids, model.vocab());
            records[i].step_probs = res.step_probs;
        } catch (const std::exception& e) {
            std::lock_guard<std::mutex> lock(err_mutex);
            if (first_error.empty()) {
                first_error = "pair " + pairs[i].first + " -> " + pairs[i].second + ": " + e.what();
            }
        }
    });
    if (!first_error.empty()) throw Error(first_error);

    std::ofstream out = open_out(o.out);
    write_generation_jsonl(out, records);
    write_run_record(o.out, "generate",
                     {{"kg", kg_record(o.kg)},
                      {"model", o.model_path},
                      {"pairs", o.pairs_path},
                      {"seed", o.common.seed},
                      {"threads", o.common.threads},
                      {"out", o.out}});
    std::cout << json{{"paths", records.size()}, {"out", o.out}}.dump() << "\n";
    return 0;
}

// ---- train-scorer --------------------------------------------------------

struct TrainScorerOpts {
    CommonOpts common;
    KgOpts kg;
    std::string out;
    ScorerConfig cfg;
};

int run_train_scorer(const TrainScorerOpts& o) {
    KnowledgeGraph kg = load_graph(o.kg);
    BilinearScorer scorer = train_triplet_scorer(kg, o.cfg, o.common.seed);
    scorer.save(o.out);
    write_run_record(o.out, "train-scorer",
                     {{"kg", kg_record(o.kg)},
                      {"scorer", o.cfg.to_json()},
                      {"seed", o.common.seed},
                      {"threads", o.common.threads},
                      {"out", o.out}});
    std::cout << json{{"held_out_accuracy", scorer.held_out_accuracy()}}.dump() << "\n";
    return 0;
}

// ---- train-qa -------------------------------------------------------------

struct TrainQaOpts {
    CommonOpts common;
    KgOpts kg;
    std::string dataset_path;
    std::string dev_path;
    std::string generator_path;
    std::string variant = "pg-full";
    std::string out;
    QAConfig cfg;
};

int run_train_qa(const TrainQaOpts& o) {
    KnowledgeGraph kg = load_graph(o.kg);
    QAVariant variant = variant_from_name(o.variant);
    std::optional<GeneratorModel> generator;
    if (!o.generator_path.empty()) generator.emplace(GeneratorModel::load(o.generator_path));
    std::vector<QAExample> train = load_examples(o.dataset_path, kg);
    std::vector<QAExample> dev;
    if (!o.dev_path.empty()) dev = load_examples(o.dev_path, kg);

    QATrainStats stats;
    QAModel model = train_qa(train, dev, kg, generator ? &*generator : nullptr, o.cfg, variant,
                             o.common.seed, o.common.threads, &stats);
    model.save(o.out);
    write_run_record(o.out, "train-qa",
                     {{"kg", kg_record(o.kg)},
                      {"dataset", o.dataset_path},
                      {"dev", o.dev_path},
                      {"generator", o.generator_path},
                      {"variant", o.variant},
                      {"qa", o.cfg.to_json()},
                      {"seed", o.common.seed},
                      {"threads", o.common.threads},
                      {"out", o.out}});
    std::cout << json{{"best_dev_accuracy", dev.empty() ? json() : json(stats.best_dev_accuracy)},
                      {"epochs", stats.train_losses.size()},
                      {"steps", stats.steps}}
                     .dump()
              << "\n";
    return 0;
}

// ---- eval-qa ------------------------------------------------------------

struct EvalQaOpts {
    CommonOpts common;
    KgOpts kg;
    std::string model_path;
    std::string dataset_path;
    std::string generator_path;
    std::string out;
};

int run_eval_qa(const EvalQaOpts& o) {
    KnowledgeGraph kg = load_graph(o.kg);
    QAModel model = QAModel::load(o.model_path);
    std::optional<GeneratorModel> generator;
    if (!o.generator_path.empty()) generator.emplace(GeneratorModel::load(o.generator_path));
    std::vector<QAExample> examples = load_examples(o.dataset_path, kg);

    std::vector<QAPrediction> preds;
    double acc = qa_accuracy(model, examples, kg, generator ? &*generator : nullptr,
                             o.common.threads, &preds);
    long missing = 0;
    for (const QAPrediction& p : preds) missing += p.evidence_missing ? 1 : 0;

    if (!o.out.empty()) {
        std::ofstream out = open_out(o.out);
        for (size_t i = 0; i < examples.size(); ++i) {
            json line = {{"id", examples[i].id},
                         {"answer", examples[i].answer},
                         {"prediction", preds[i].choice},
                         {"correct", preds[i].choice == examples[i].answer},
                         {"probabilities", preds[i].probabilities},
                         {"evidence_missing", preds[i].evidence_missing}};
            out << line.dump() << "\n";
        }
        write_run_record(o.out, "eval-qa",
                         {{"kg", kg_record(o.kg)},
                          {"model", o.model_path},
                          {"dataset", o.dataset_path},
                          {"generator", o.generator_path},
                          {"threads", o.common.threads},
                          {"out", o.out}});
    }
    std::cout << json{{"accuracy", acc},
                      {"examples", examples.size()},
                      {"evidence_missing", missing}}
                     .dump()
              << "\n";
    return 0;
}

// ---- eval-paths -----------------------------------------------------------

struct EvalPathsOpts {
    CommonOpts common;
    KgOpts kg;
    std::string paths_path;
    std::string scorer_path;
    std::string report_path;
};

int run_eval_paths(const EvalPathsOpts& o) {
    KnowledgeGraph kg = load_graph(o.kg);
    BilinearScorer scorer = BilinearScorer::load(o.scorer_path);
    std::ifstream in = open_in(o.paths_path);
    std::vector<GenerationRecord> records = read_generation_jsonl(in);
    PathMetrics metrics = eval_paths(records, kg, scorer);

    json report = metrics.to_json();
    std::ofstream out = open_out(o.report_path);
    out << report.dump(2) << "\n";
    write_run_record(o.report_path, "eval-paths",
                     {{"kg", kg_record(o.kg)},
                      {"paths", o.paths_path},
                      {"scorer", o.scorer_path},
                      {"report", o.report_path}});
    std::cout << report.dump() << "\n";
    return 0;
}

// ---- grad-check -----------------------------------------------------------

struct GradCheckOpts {
    CommonOpts common;
};

// Scalar probe loss that touches every entry of a row vector.
template <typename T>
typename Tape<T>::Handle probe_loss(Tape<T>& tape, typename Tape<T>::Handle x) {
    const Tensor<T>& v = tape.value(x);
    Tensor<T> targets(v.rows, v.cols);
    for (size_t i = 0; i < targets.v.size(); ++i) targets.v[i] = T(0.3) + T(0.01) * T(i % 7);
    return tape.bce_with_logits_mean(x, std::move(targets));
}

int run_grad_check(const GradCheckOpts& o) {
    uint64_t seed = o.common.seed;
    bool all_ok = true;
    auto report = [&](const std::string& component, const GradCheckReport& rep) {
        bool ok = rep.ok(1e-4);
        all_ok = all_ok && ok;
        std::cout << json{{"component", component},
                          {"worst_rel_err", rep.worst_rel_err},
                          {"worst_param", rep.worst_param},
                          {"checked", rep.checked},
                          {"ok", ok}}
                         .dump()
                  << "\n";
    };

    {
        GeneratorConfig cfg;
        cfg.width = 8;
        cfg.blocks = 2;
        cfg.heads = 2;
        cfg.ffn = 16;
        cfg.max_seq_len = 12;
        Rng rng(child_seed(seed, 1));
        ParamStore<double> ps = init_generator_params<double>(cfg, 9, rng);
        TokenSequence seq;
        seq.ids = {5, 1, 6, 7, 8, 3, 4, 2};
        seq.prompt_len = 3;
        report("generator", grad_check(
                                ps,
                                [&](ParamStore<double>& store) {
                                    Tape<double> tape;
                                    BoundParams<double> bound(tape, store);
                                    auto loss = sequence_nll(tape, bound, cfg, seq);
                                    tape.backward(loss);
                                    bound.pull_grads(1.0);
                                    return (double)tape.value(loss).at(0, 0);
                                },
                                child_seed(seed, 2), 6));
    }

    QAConfig qa_cfg;
    qa_cfg.width = 6;
    qa_cfg.ent_dim = 4;
    qa_cfg.rel_dim = 3;
    qa_cfg.hidden = 5;

    {
        Rng rng(child_seed(seed, 3));
        ParamStore<double> ps =
            init_qa_params<double>(QAVariant::NoKg, qa_cfg, 6, 1, 1, 0, rng);
        report("context-encoder", grad_check(
                                      ps,
                                      [&](ParamStore<double>& store) {
                                          Tape<double> tape;
                                          BoundParams<double> bound(tape, store);
                                          auto c = qa_context(tape, bound, qa_cfg, {2, 4, 5});
                                          auto loss = probe_loss(tape, c);
                                          tape.backward(loss);
                                          bound.pull_grads(1.0);
                                          return (double)tape.value(loss).at(0, 0);
                                      },
                                      child_seed(seed, 4), 6));
    }

    {
        Rng rng(child_seed(seed, 5));
        ParamStore<double> ps =
            init_qa_params<double>(QAVariant::StaticRn, qa_cfg, 6, 4, 6, 0, rng);
        Path path;
        path.entities = {0, 3, 2};
        path.relations = {1, 4};
        report("path-encoder-mlp", grad_check(
                                       ps,
                                       [&](ParamStore<double>& store) {
                                           Tape<double> tape;
                                           BoundParams<double> bound(tape, store);
                                           auto p = qa_static_path(tape, bound, qa_cfg, path);
                                           auto loss = probe_loss(tape, p);
                                           tape.backward(loss);
                                           bound.pull_grads(1.0);
                                           return (double)tape.value(loss).at(0, 0);
                                       },
                                       child_seed(seed, 6), 6));
    }

    {
        Rng rng(child_seed(seed, 7));
        ParamStore<double> ps =
            init_qa_params<double>(QAVariant::StaticRn, qa_cfg, 6, 4, 6, 0, rng);
        report("attention-pool", grad_check(
                                     ps,
                                     [&](ParamStore<double>& store) {
                                         Tape<double> tape;
                                         BoundParams<double> bound(tape, store);
                                         Rng leaf_rng(child_seed(seed, 8));
                                         auto leaf = [&](bool) {
                                             Tensor<double> t(1, qa_cfg.width);
                                             init_uniform(t, leaf_rng, -0.5, 0.5);
                                             return tape.leaf(std::move(t), false);
                                         };
                                         auto c = leaf(false);
                                         std::vector<Tape<double>::Handle> paths = {
                                             leaf(false), leaf(false), leaf(false)};
                                         auto k = qa_aggregate(tape, bound, "att_s", c, paths,
                                                               qa_cfg.width);
                                         auto loss = probe_loss(tape, k);
                                         tape.backward(loss);
                                         bound.pull_grads(1.0);
                                         return (double)tape.value(loss).at(0, 0);
                                     },
                                     child_seed(seed, 9), 6));
    }

    {
        int gen_dim = 4;
        Rng rng(child_seed(seed, 10));
        ParamStore<double> ps =
            init_qa_params<double>(QAVariant::PgFull, qa_cfg, 6, 4, 6, gen_dim, rng);
        ChoiceEvidence rich;
        rich.generated = {{0.2f, -0.1f, 0.4f, 0.05f}, {-0.3f, 0.2f, 0.1f, -0.2f}};
        Path p1;
        p1.entities = {0, 1};
        p1.relations = {0};
        Path p2;
        p2.entities = {0, 2, 3};
        p2.relations = {1, 5};
        rich.static_paths = {p1, p2};
        ChoiceEvidence bare;
        bare.no_grounding = true;
        std::vector<ChoiceInput> choices(2);
        choices[0].context_words = {2, 3};
        choices[0].evidence = &rich;
        choices[1].context_words = {3, 5};
        choices[1].evidence = &bare;
        report("choice-classifier", grad_check(
                                        ps,
                                        [&](ParamStore<double>& store) {
                                            Tape<double> tape;
                                            BoundParams<double> bound(tape, store);
                                            auto scores = qa_question_scores(
                                                tape, bound, QAVariant::PgFull, qa_cfg, gen_dim,
                                                choices);
                                            auto loss =
                                                tape.cross_entropy_mean(scores, {0}, {1});
                                            tape.backward(loss);
                                            bound.pull_grads(1.0);
                                            return (double)tape.value(loss).at(0, 0);
                                        },
                                        child_seed(seed, 11), 6));
    }

    {
        Rng rng(child_seed(seed, 12));
        ParamStore<double> ps;
        Tensor<double> ent(4, 3);
        init_uniform(ent, rng, -0.5, 0.5);
        ps.add("ent", ent);
        Tensor<double> w(3, 3);
        init_uniform(w, rng, -0.5, 0.5);
        ps.add("rel0.w", w);
        ps.add("rel0.b", Tensor<double>(1, 1));
        report("triplet-scorer", grad_check(
                                     ps,
                                     [&](ParamStore<double>& store) {
                                         Tape<double> tape;
                                         BoundParams<double> bound(tape, store);
                                         auto head = tape.gather_rows(bound["ent"], {0});
                                         auto tail = tape.gather_rows(bound["ent"], {2});
                                         auto z = tape.add(
                                             tape.matmul_nt(tape.matmul(head, bound["rel0.w"]),
                                                            tail),
                                             bound["rel0.b"]);
                                         Tensor<double> target(1, 1);
                                         target.v[0] = 1.0;
                                         auto loss =
                                             tape.bce_with_logits_mean(z, std::move(target));
                                         tape.backward(loss);
                                         bound.pull_grads(1.0);
                                         return (double)tape.value(loss).at(0, 0);
                                     },
                                     child_seed(seed, 13), 6));
    }

    std::cout << json{{"ok", all_ok}}.dump() << "\n";
    return all_ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Knowledge-graph path generation and question answering"};
    app.require_subcommand(1);

    SamplePathsOpts sample;
    CLI::App* sample_cmd = app.add_subcommand("sample-paths", "Sample a random-walk path corpus");
    add_kg(sample_cmd, sample.kg);
    sample_cmd->add_option("--strategy", sample.strategy, "global or local");
    sample_cmd->add_option("--start-entities", sample.start_path,
                           "Entity phrases for local sampling, one per line");
    sample_cmd->add_option("--hops", sample.hops, "Comma-separated hop lengths");
    sample_cmd->add_option("--count-per-hop", sample.count_per_hop, "Paths per hop length")
        ->required();
    sample_cmd->add_option("--out", sample.out, "Corpus JSONL")->required();
    add_common(sample_cmd, sample.common);

    SplitOpts split_o;
    CLI::App* split_cmd = app.add_subcommand("split", "Partition a corpus into train/dev/test");
    add_kg(split_cmd, split_o.kg);
    split_cmd->add_option("--in", split_o.in, "Corpus JSONL")->required();
    split_cmd->add_option("--ratio", split_o.ratio, "Three percentages, e.g. 90:5:5");
    split_cmd->add_option("--out-prefix", split_o.out_prefix,
                          "Prefix for .train/.dev/.test.jsonl (default: --in stem)");
    add_common(split_cmd, split_o.common);

    TrainGeneratorOpts tg;
    CLI::App* tg_cmd = app.add_subcommand("train-generator", "Fit the path generator");
    add_kg(tg_cmd, tg.kg);
    tg_cmd->add_option("--train", tg.train_path, "Training corpus JSONL")->required();
    tg_cmd->add_option("--dev", tg.dev_path, "Dev corpus JSONL for early stopping");
    tg_cmd->add_option("--out", tg.out, "Checkpoint path")->required();
    tg_cmd->add_option("--width", tg.model.width);
    tg_cmd->add_option("--blocks", tg.model.blocks);
    tg_cmd->add_option("--heads", tg.model.heads);
    tg_cmd->add_option("--ffn", tg.model.ffn);
    tg_cmd->add_option("--lr", tg.opt.lr);
    tg_cmd->add_option("--batch-size", tg.opt.batch_size);
    tg_cmd->add_option("--warmup", tg.opt.warmup_steps);
    tg_cmd->add_option("--epochs", tg.opt.max_epochs);
    tg_cmd->add_option("--patience", tg.opt.patience);
    add_common(tg_cmd, tg.common);

    GenerateOpts gen;
    CLI::App* gen_cmd = app.add_subcommand("generate", "Greedy-decode paths for entity pairs");
    add_kg(gen_cmd, gen.kg);
    gen_cmd->add_option("--model", gen.model_path, "Generator checkpoint")->required();
    gen_cmd->add_option("--pairs", gen.pairs_path, "TSV of source<TAB>target phrases")
        ->required();
    gen_cmd->add_option("--out", gen.out, "Generation JSONL")->required();
    add_common(gen_cmd, gen.common);

    TrainScorerOpts ts;
    CLI::App* ts_cmd = app.add_subcommand("train-scorer", "Fit the bilinear triplet scorer");
    add_kg(ts_cmd, ts.kg);
    ts_cmd->add_option("--out", ts.out, "Checkpoint path")->required();
    ts_cmd->add_option("--dim", ts.cfg.dim);
    ts_cmd->add_option("--lr", ts.cfg.lr);
    ts_cmd->add_option("--batch-size", ts.cfg.batch_size);
    ts_cmd->add_option("--epochs", ts.cfg.max_epochs);
    ts_cmd->add_option("--patience", ts.cfg.patience);
    add_common(ts_cmd, ts.common);

    TrainQaOpts tq;
    CLI::App* tq_cmd = app.add_subcommand("train-qa", "Fit a question-answering head");
    add_kg(tq_cmd, tq.kg);
    tq_cmd->add_option("--dataset", tq.dataset_path, "Training questions JSONL")->required();
    tq_cmd->add_option("--dev", tq.dev_path, "Dev questions JSONL");
    tq_cmd->add_option("--generator", tq.generator_path,
                       "Generator checkpoint (pg-* variants)");
    tq_cmd->add_option("--variant", tq.variant,
                       "no-kg | static-rn | pg-local | pg-global | pg-full");
    tq_cmd->add_option("--out", tq.out, "Checkpoint path")->required();
    tq_cmd->add_option("--width", tq.cfg.width);
    tq_cmd->add_option("--ent-dim", tq.cfg.ent_dim);
    tq_cmd->add_option("--rel-dim", tq.cfg.rel_dim);
    tq_cmd->add_option("--hidden", tq.cfg.hidden);
    tq_cmd->add_option("--max-hops", tq.cfg.max_hops);
    tq_cmd->add_option("--max-static-paths", tq.cfg.max_static_paths);
    tq_cmd->add_option("--lr", tq.cfg.lr);
    tq_cmd->add_option("--batch-size", tq.cfg.batch_size);
    tq_cmd->add_option("--epochs", tq.cfg.max_epochs);
    tq_cmd->add_option("--patience", tq.cfg.patience);
    add_common(tq_cmd, tq.common);

    EvalQaOpts eq;
    CLI::App* eq_cmd = app.add_subcommand("eval-qa", "Score a QA model on a dataset");
    add_kg(eq_cmd, eq.kg);
    eq_cmd->add_option("--model", eq.model_path, "QA checkpoint")->required();
    eq_cmd->add_option("--dataset", eq.dataset_path, "Questions JSONL")->required();
    eq_cmd->add_option("--generator", eq.generator_path,
                       "Generator checkpoint (pg-* variants)");
    eq_cmd->add_option("--out", eq.out, "Per-example predictions JSONL");
    add_common(eq_cmd, eq.common);

    EvalPathsOpts ep;
    CLI::App* ep_cmd = app.add_subcommand("eval-paths", "Score generated paths against the KG");
    add_kg(ep_cmd, ep.kg);
    ep_cmd->add_option("--paths", ep.paths_path, "Generation JSONL")->required();
    ep_cmd->add_option("--scorer", ep.scorer_path, "Triplet scorer checkpoint")->required();
    ep_cmd->add_option("--report", ep.report_path, "Metrics JSON output")->required();
    add_common(ep_cmd, ep.common);

    GradCheckOpts gc;
    CLI::App* gc_cmd =
        app.add_subcommand("grad-check", "Finite-difference check of every trainable module");
    add_common(gc_cmd, gc.common);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << e.what() << "\n";
        std::cerr << app.help();
        return 2;
    }

    try {
        if (sample_cmd->parsed()) return run_sample_paths(sample);
        if (split_cmd->parsed()) return run_split(split_o);
        if (tg_cmd->parsed()) return run_train_generator(tg);
        if (gen_cmd->parsed()) return run_generate(gen);
        if (ts_cmd->parsed()) return run_train_scorer(ts);
        if (tq_cmd->parsed()) return run_train_qa(tq);
        if (eq_cmd->parsed()) return run_eval_qa(eq);
        if (ep_cmd->parsed()) return run_eval_paths(ep);
        if (gc_cmd->parsed()) return run_grad_check(gc);
    } catch (const std::exception& e) {
        std::cerr << json{{"error", e.what()}}.dump() << "\n";
        return 1;
    }
    return 0;
}
