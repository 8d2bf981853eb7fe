#include "pathgen/qa.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <mutex>
#include <set>

#include "pathgen/checkpoint.hpp"
#include "pathgen/error.hpp"
#include "pathgen/optim.hpp"
#include "pathgen/util.hpp"

namespace pathgen {

std::string variant_name(QAVariant v) {
    switch (v) {
        case QAVariant::NoKg: return "no-kg";
        case QAVariant::StaticRn: return "static-rn";
        case QAVariant::PgLocal: return "pg-local";
        case QAVariant::PgGlobal: return "pg-global";
        case QAVariant::PgFull: return "pg-full";
    }
    throw Error("unreachable variant");
}

QAVariant variant_from_name(const std::string& name) {
    if (name == "no-kg") return QAVariant::NoKg;
    if (name == "static-rn") return QAVariant::StaticRn;
    if (name == "pg-local") return QAVariant::PgLocal;
    if (name == "pg-global") return QAVariant::PgGlobal;
    if (name == "pg-full") return QAVariant::PgFull;
    throw Error("unknown variant: '" + name +
                "' (expected no-kg, static-rn, pg-local, pg-global, or pg-full)");
}

bool variant_uses_generated(QAVariant v) {
    return v == QAVariant::PgLocal || v == QAVariant::PgGlobal || v == QAVariant::PgFull;
}

bool variant_uses_static(QAVariant v) {
    return v == QAVariant::StaticRn || v == QAVariant::PgFull;
}

std::vector<QAExample> load_qa_jsonl(std::istream& in, const KnowledgeGraph& kg) {
    std::vector<QAExample> out;
    std::string line;
    long line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        auto fail = [&](const std::string& what) {
            throw Error("qa example at line " + std::to_string(line_no) + ": " + what);
        };
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            fail(std::string("parse error: ") + e.what());
        }
        QAExample ex;
        try {
            ex.id = j.at("id").get<std::string>();
            ex.question = j.at("question").get<std::string>();
            ex.choices = j.at("choices").get<std::vector<std::string>>();
            ex.answer = j.at("answer").get<int>();
        } catch (const nlohmann::json::exception& e) {
            fail(std::string("malformed fields: ") + e.what());
        }
        if (ex.choices.size() < 2 || ex.choices.size() > 5) {
            fail("expected 2..5 choices, found " + std::to_string(ex.choices.size()));
        }
        if (ex.answer < 0 || ex.answer >= (int)ex.choices.size()) fail("answer index out of range");
        if (tokenize_words(ex.question).empty()) fail("question has no words");
        ex.question_entities = kg.ground_entities(tokenize_words(ex.question), false);
        for (const std::string& c : ex.choices) {
            if (tokenize_words(c).empty()) fail("choice has no words");
            ex.choice_entities.push_back(kg.ground_entities(tokenize_words(c), true));
        }
        out.push_back(std::move(ex));
    }
    return out;
}

void write_qa_jsonl(std::ostream& out, const std::vector<QAExample>& examples) {
    for (const QAExample& ex : examples) {
        nlohmann::json j;
        j["id"] = ex.id;
        j["question"] = ex.question;
        j["choices"] = ex.choices;
        j["answer"] = ex.answer;
        out << j.dump() << "\n";
    }
}

namespace {

void simple_path_dfs(const KnowledgeGraph& kg, int node, int target, int max_hops, Path& cur,
                     std::vector<char>& on_path, std::vector<Path>& out) {
    for (const Edge& e : kg.neighbors(node)) {
        if (e.dst == target) {
            cur.relations.push_back(e.rel);
            cur.entities.push_back(e.dst);
            out.push_back(cur);
            cur.relations.pop_back();
            cur.entities.pop_back();
            continue;
        }
        if (on_path[e.dst] || cur.hops() + 1 >= max_hops) continue;
        cur.relations.push_back(e.rel);
        cur.entities.push_back(e.dst);
        on_path[e.dst] = 1;
        simple_path_dfs(kg, e.dst, target, max_hops, cur, on_path, out);
        on_path[e.dst] = 0;
        cur.relations.pop_back();
        cur.entities.pop_back();
    }
}

}  // namespace

std::vector<Path> retrieve_static_paths(const KnowledgeGraph& kg, const std::vector<int>& from,
                                        const std::vector<int>& to, int max_hops,
                                        int max_per_pair) {
    if (max_hops < 1 || max_hops > 3) throw Error("static retrieval needs max_hops in 1..3");
    if (max_per_pair < 1) throw Error("static retrieval cap must be positive");
    std::vector<int> srcs(from), dsts(to);
    std::sort(srcs.begin(), srcs.end());
    srcs.erase(std::unique(srcs.begin(), srcs.end()), srcs.end());
    std::sort(dsts.begin(), dsts.end());
    dsts.erase(std::unique(dsts.begin(), dsts.end()), dsts.end());

    std::vector<Path> out;
    for (int s : srcs) {
        for (int t : dsts) {
            if (s == t) continue;  // a simple path cannot revisit its start
            Path cur;
            cur.entities = {s};
            std::vector<char> on_path(kg.num_entities(), 0);
            on_path[s] = 1;
            std::vector<Path> found;
            simple_path_dfs(kg, s, t, max_hops, cur, on_path, found);
            // DFS emits lexicographic (rel, dst) order; keep it within each
            // hop count while bringing short paths forward.
            std::stable_sort(found.begin(), found.end(),
                             [](const Path& a, const Path& b) { return a.hops() < b.hops(); });
            if ((int)found.size() > max_per_pair) found.resize(max_per_pair);
            out.insert(out.end(), found.begin(), found.end());
        }
    }
    return out;
}

EvidenceBundle build_evidence(const QAExample& ex, const KnowledgeGraph& kg,
                              const GeneratorModel* generator, QAVariant variant, int max_hops,
                              int max_static_paths) {
    if (variant_uses_generated(variant) && generator == nullptr) {
        throw Error("variant " + variant_name(variant) + " requires a generator");
    }
    EvidenceBundle bundle;
    for (size_t c = 0; c < ex.choices.size(); ++c) {
        ChoiceEvidence ev;
        const std::vector<int>& eq = ex.question_entities;
        const std::vector<int>& ea = ex.choice_entities[c];
        if (eq.empty() || ea.empty()) {
            ev.no_grounding = true;
            bundle.choices.push_back(std::move(ev));
            continue;
        }
        if (variant_uses_generated(variant)) {
            for (int q : eq) {
                for (int a : ea) {
                    GenerationResult gen =
                        generate_path(*generator, kg.entity_phrase(q), kg.entity_phrase(a), kg);
                    ev.generated.push_back(path_embedding(*generator, gen.ids));
                }
            }
        }
        if (variant_uses_static(variant)) {
            ev.static_paths = retrieve_static_paths(kg, eq, ea, max_hops, max_static_paths);
        }
        bundle.choices.push_back(std::move(ev));
    }
    return bundle;
}

nlohmann::json QAConfig::to_json() const {
    return {{"width", width},
            {"ent_dim", ent_dim},
            {"rel_dim", rel_dim},
            {"hidden", hidden},
            {"max_hops", max_hops},
            {"max_static_paths", max_static_paths},
            {"lr", lr},
            {"batch_size", batch_size},
            {"max_epochs", max_epochs},
            {"patience", patience}};
}

QAConfig QAConfig::from_json(const nlohmann::json& j) {
    QAConfig cfg;
    cfg.width = j.at("width").get<int>();
    cfg.ent_dim = j.at("ent_dim").get<int>();
    cfg.rel_dim = j.at("rel_dim").get<int>();
    cfg.hidden = j.at("hidden").get<int>();
    cfg.max_hops = j.at("max_hops").get<int>();
    cfg.max_static_paths = j.at("max_static_paths").get<int>();
    cfg.lr = j.at("lr").get<double>();
    cfg.batch_size = j.at("batch_size").get<int>();
    cfg.max_epochs = j.at("max_epochs").get<int>();
    cfg.patience = j.at("patience").get<int>();
    if (cfg.width <= 0 || cfg.ent_dim <= 0 || cfg.rel_dim <= 0 || cfg.hidden <= 0 ||
        cfg.batch_size <= 0 || cfg.max_epochs <= 0) {
        throw Error("qa config fields must be positive");
    }
    return cfg;
}

std::vector<std::string> build_qa_words(const std::vector<QAExample>& examples) {
    std::set<std::string> uniq;
    for (const QAExample& ex : examples) {
        for (const std::string& w : tokenize_words(ex.question)) uniq.insert(w);
        for (const std::string& c : ex.choices) {
            for (const std::string& w : tokenize_words(c)) uniq.insert(w);
        }
    }
    std::vector<std::string> words = {"[UNK]", "[CTXSEP]"};
    for (const std::string& w : uniq) words.push_back(w);
    return words;
}

template <typename T>
ParamStore<T> init_qa_params(QAVariant variant, const QAConfig& cfg, int num_words,
                             int num_entities, int num_relations, int gen_dim, Rng& rng) {
    ParamStore<T> ps;
    auto uni = [&](const std::string& name, int r, int c) {
        Tensor<T> t(r, c);
        init_uniform(t, rng, T(-0.05), T(0.05));
        ps.add(name, t);
    };
    auto zeros = [&](const std::string& name, int r, int c) { ps.add(name, Tensor<T>(r, c)); };

    uni("ctx_emb", num_words, cfg.width);
    uni("ctx_ff.w", cfg.width, cfg.width);
    zeros("ctx_ff.b", 1, cfg.width);
    int cls_in = cfg.width;
    if (variant_uses_generated(variant)) {
        uni("att_g.w", cfg.width, gen_dim);
        zeros("att_g.b", 1, cfg.width);
        cls_in += gen_dim;
    }
    if (variant_uses_static(variant)) {
        uni("ent_emb", num_entities, cfg.ent_dim);
        uni("rel_emb", num_relations, cfg.rel_dim);
        uni("mlp.w1", cfg.hidden, 2 * cfg.ent_dim + cfg.rel_dim);
        zeros("mlp.b1", 1, cfg.hidden);
        uni("mlp.w2", cfg.width, cfg.hidden);
        zeros("mlp.b2", 1, cfg.width);
        uni("att_s.w", cfg.width, cfg.width);
        zeros("att_s.b", 1, cfg.width);
        cls_in += cfg.width;
    }
    uni("cls.w", 1, cls_in);
    zeros("cls.b", 1, 1);
    return ps;
}

template <typename T>
static typename Tape<T>::Handle affine(Tape<T>& tape, typename Tape<T>::Handle x,
                                       typename Tape<T>::Handle w, typename Tape<T>::Handle b) {
    return tape.add_rowvec(tape.matmul_nt(x, w), b);
}

template <typename T>
typename Tape<T>::Handle qa_context(Tape<T>& tape, BoundParams<T>& params, const QAConfig& cfg,
                                    const std::vector<int>& word_ids) {
    (void)cfg;
    if (word_ids.empty()) throw Error("context encoding needs at least one word");
    auto mean = tape.mean_rows(tape.gather_rows(params["ctx_emb"], word_ids));
    return tape.tanh_(affine(tape, mean, params["ctx_ff.w"], params["ctx_ff.b"]));
}

template <typename T>
typename Tape<T>::Handle qa_static_path(Tape<T>& tape, BoundParams<T>& params,
                                        const QAConfig& cfg, const Path& path) {
    (void)cfg;
    if (path.hops() < 1) throw Error("static path encoding needs at least one hop");
    auto head = tape.gather_rows(params["ent_emb"], {path.entities.front()});
    auto tail = tape.gather_rows(params["ent_emb"], {path.entities.back()});
    auto prod = tape.gather_rows(params["rel_emb"], {path.relations[0]});
    for (size_t i = 1; i < path.relations.size(); ++i) {
        prod = tape.mul(prod, tape.gather_rows(params["rel_emb"], {path.relations[i]}));
    }
    auto x = tape.concat_cols({head, prod, tail});
    auto h = tape.tanh_(affine(tape, x, params["mlp.w1"], params["mlp.b1"]));
    return affine(tape, h, params["mlp.w2"], params["mlp.b2"]);
}

template <typename T>
typename Tape<T>::Handle qa_aggregate(Tape<T>& tape, BoundParams<T>& params,
                                      const std::string& prefix, typename Tape<T>::Handle c,
                                      const std::vector<typename Tape<T>::Handle>& paths,
                                      int out_width, typename Tape<T>::Handle* alpha_out) {
    if (paths.empty()) return tape.leaf(Tensor<T>(1, out_width), false);
    auto w = params[prefix + ".w"];
    auto b = params[prefix + ".b"];
    std::vector<typename Tape<T>::Handle> logits;
    for (auto p : paths) {
        auto probe = tape.tanh_(affine(tape, p, w, b));
        logits.push_back(tape.matmul_nt(c, probe));
    }
    auto alpha = tape.softmax_rows(logits.size() == 1 ? logits[0] : tape.concat_cols(logits));
    if (alpha_out) *alpha_out = alpha;
    auto stacked = paths.size() == 1 ? paths[0] : tape.concat_rows(paths);
    return tape.matmul(alpha, stacked);
}

template <typename T>
typename Tape<T>::Handle qa_question_scores(Tape<T>& tape, BoundParams<T>& params,
                                            QAVariant variant, const QAConfig& cfg, int gen_dim,
                                            const std::vector<ChoiceInput>& choices) {
    if (choices.size() < 2) throw Error("a question needs at least two choices");
    std::vector<typename Tape<T>::Handle> scores;
    for (const ChoiceInput& ch : choices) {
        if (variant != QAVariant::NoKg && ch.evidence == nullptr) {
            throw Error("choice evidence missing for variant " + variant_name(variant));
        }
        auto c = qa_context(tape, params, cfg, ch.context_words);
        std::vector<typename Tape<T>::Handle> parts = {c};
        if (variant_uses_generated(variant)) {
            std::vector<typename Tape<T>::Handle> gens;
            for (const std::vector<float>& emb : ch.evidence->generated) {
                if ((int)emb.size() != gen_dim) {
                    throw Error("generated path embedding width disagrees with the model");
                }
                Tensor<T> t(1, gen_dim);
                for (int i = 0; i < gen_dim; ++i) t.v[i] = static_cast<T>(emb[i]);
                gens.push_back(tape.leaf(std::move(t), false));
            }
            parts.push_back(qa_aggregate(tape, params, "att_g", c, gens, gen_dim));
        }
        if (variant_uses_static(variant)) {
            std::vector<typename Tape<T>::Handle> encoded;
            for (const Path& p : ch.evidence->static_paths) {
                encoded.push_back(qa_static_path(tape, params, cfg, p));
            }
            parts.push_back(qa_aggregate(tape, params, "att_s", c, encoded, cfg.width));
        }
        auto feat = parts.size() == 1 ? parts[0] : tape.concat_cols(parts);
        scores.push_back(affine(tape, feat, params["cls.w"], params["cls.b"]));
    }
    return tape.concat_cols(scores);
}

QAModel::QAModel(QAVariant variant, QAConfig cfg, std::vector<std::string> words,
                 int num_entities, int num_relations, int gen_dim, uint64_t seed)
    : variant_(variant),
      cfg_(cfg),
      words_(std::move(words)),
      num_entities_(num_entities),
      num_relations_(num_relations),
      gen_dim_(gen_dim) {
    if (words_.size() < 2 || words_[0] != "[UNK]" || words_[1] != "[CTXSEP]") {
        throw Error("qa word list must start with [UNK] and [CTXSEP]");
    }
    for (size_t i = 0; i < words_.size(); ++i) word_ids_[words_[i]] = (int)i;
    if (word_ids_.size() != words_.size()) throw Error("duplicate qa word");
    if (variant_uses_generated(variant_) && gen_dim_ <= 0) {
        throw Error("variant " + variant_name(variant_) + " needs a generated-path width");
    }
    if (variant_uses_static(variant_) && (num_entities_ <= 0 || num_relations_ <= 0)) {
        throw Error("variant " + variant_name(variant_) + " needs entity and relation tables");
    }
    Rng rng(seed);
    params_ = init_qa_params<float>(variant_, cfg_, (int)words_.size(), num_entities_,
                                    num_relations_, gen_dim_, rng);
}

std::vector<int> QAModel::context_word_ids(const std::string& question,
                                           const std::string& choice) const {
    std::vector<int> ids;
    auto push = [&](const std::string& text) {
        for (const std::string& w : tokenize_words(text)) {
            auto it = word_ids_.find(w);
            ids.push_back(it == word_ids_.end() ? 0 : it->second);
        }
    };
    push(question);
    ids.push_back(1);
    push(choice);
    return ids;
}

void QAModel::save(const std::string& path) const {
    nlohmann::json extra;
    extra["variant"] = variant_name(variant_);
    extra["config"] = cfg_.to_json();
    extra["words"] = words_;
    extra["num_entities"] = num_entities_;
    extra["num_relations"] = num_relations_;
    extra["gen_dim"] = gen_dim_;
    save_checkpoint(path, "qa", params_, extra);
}

QAModel QAModel::load(const std::string& path) {
    Checkpoint ck = load_checkpoint_expect(path, "qa");
    QAModel m(variant_from_name(ck.header.at("variant").get<std::string>()),
              QAConfig::from_json(ck.header.at("config")),
              ck.header.at("words").get<std::vector<std::string>>(),
              ck.header.at("num_entities").get<int>(), ck.header.at("num_relations").get<int>(),
              ck.header.at("gen_dim").get<int>(), 0);
    m.params_.load_values(ck.params);
    return m;
}

namespace {

struct QuestionInput {
    std::vector<ChoiceInput> choices;
    int answer = -1;
};

std::vector<QuestionInput> prepare_inputs(const QAModel& model,
                                          const std::vector<QAExample>& examples,
                                          const std::vector<EvidenceBundle>& evidence) {
    std::vector<QuestionInput> inputs(examples.size());
    for (size_t i = 0; i < examples.size(); ++i) {
        const QAExample& ex = examples[i];
        QuestionInput& q = inputs[i];
        q.answer = ex.answer;
        for (size_t c = 0; c < ex.choices.size(); ++c) {
            ChoiceInput ch;
            ch.context_words = model.context_word_ids(ex.question, ex.choices[c]);
            ch.evidence = &evidence[i].choices[c];
            q.choices.push_back(std::move(ch));
        }
    }
    return inputs;
}

std::vector<EvidenceBundle> build_all_evidence(const std::vector<QAExample>& examples,
                                               const KnowledgeGraph& kg,
                                               const GeneratorModel* generator, QAVariant variant,
                                               const QAConfig& cfg, int threads) {
    std::vector<EvidenceBundle> evidence(examples.size());
    std::mutex err_mutex;
    std::string first_error;
    parallel_for(examples.size(), threads, [&](size_t i) {
        try {
            evidence[i] = build_evidence(examples[i], kg, generator, variant, cfg.max_hops,
                                         cfg.max_static_paths);
        } catch (const std::exception& e) {
            std::lock_guard<std::mutex> lock(err_mutex);
            if (first_error.empty()) first_error = e.what();
        }
    });
    if (!first_error.empty()) throw Error(first_error);
    return evidence;
}

std::vector<double> question_probabilities(const QAModel& model, const QuestionInput& q) {
    Tape<float> tape;
    ParamStore<float>& ps = const_cast<ParamStore<float>&>(model.params());
    BoundParams<float> bound(tape, ps, false);
    auto scores = qa_question_scores(tape, bound, model.variant(), model.config(),
                                     model.gen_dim(), q.choices);
    const Tensor<float>& s = tape.value(scores);
    double mx = s.v[0];
    for (float v : s.v) mx = std::max(mx, (double)v);
    std::vector<double> probs(s.v.size());
    double denom = 0;
    for (size_t i = 0; i < s.v.size(); ++i) denom += std::exp((double)s.v[i] - mx);
    for (size_t i = 0; i < s.v.size(); ++i) probs[i] = std::exp((double)s.v[i] - mx) / denom;
    return probs;
}

double inputs_accuracy(const QAModel& model, const std::vector<QuestionInput>& inputs,
                       int threads) {
    std::vector<char> correct(inputs.size(), 0);
    parallel_for(inputs.size(), threads, [&](size_t i) {
        std::vector<double> probs = question_probabilities(model, inputs[i]);
        int best = 0;
        for (size_t c = 1; c < probs.size(); ++c) {
            if (probs[c] > probs[best]) best = (int)c;
        }
        correct[i] = best == inputs[i].answer ? 1 : 0;
    });
    long right = 0;
    for (char c : correct) right += c;
    return inputs.empty() ? 0.0 : (double)right / (double)inputs.size();
}

}  // namespace

QAModel train_qa(const std::vector<QAExample>& train, const std::vector<QAExample>& dev,
                 const KnowledgeGraph& kg, const GeneratorModel* generator, const QAConfig& cfg,
                 QAVariant variant, uint64_t seed, int threads, QATrainStats* stats_out) {
    if (train.empty()) throw Error("qa training set is empty");
    if (variant_uses_generated(variant) && generator == nullptr) {
        throw Error("variant " + variant_name(variant) + " requires a generator");
    }
    int gen_dim = variant_uses_generated(variant) ? generator->config().width : 0;
    QAModel model(variant, cfg, build_qa_words(train), kg.num_entities(), kg.num_relations(),
                  gen_dim, child_seed(seed, 1));

    std::vector<EvidenceBundle> train_ev =
        build_all_evidence(train, kg, generator, variant, cfg, threads);
    std::vector<EvidenceBundle> dev_ev =
        build_all_evidence(dev, kg, generator, variant, cfg, threads);
    std::vector<QuestionInput> train_in = prepare_inputs(model, train, train_ev);
    std::vector<QuestionInput> dev_in = prepare_inputs(model, dev, dev_ev);

    ParamStore<float>& ps = model.params();
    AdamConfig adam;
    QATrainStats stats;
    ParamStore<float> best;
    double best_acc = -1;
    int bad_epochs = 0;
    long step = 0;
    std::vector<size_t> order(train.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;

    for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
        Rng shuffle_rng(child_seed(seed, 100 + (uint64_t)epoch));
        deterministic_shuffle(order, shuffle_rng);
        double epoch_loss = 0;
        for (size_t begin = 0; begin < order.size(); begin += cfg.batch_size) {
            size_t end = std::min(order.size(), begin + (size_t)cfg.batch_size);
            ps.zero_grad();
            double batch_loss = 0;
            for (size_t i = begin; i < end; ++i) {
                const QuestionInput& q = train_in[order[i]];
                Tape<float> tape;
                BoundParams<float> bound(tape, ps);
                auto scores =
                    qa_question_scores(tape, bound, variant, cfg, model.gen_dim(), q.choices);
                auto loss = tape.cross_entropy_mean(scores, {q.answer}, {1});
                batch_loss += (double)tape.value(loss).at(0, 0);
                tape.backward(loss);
                bound.pull_grads(1.0 / (double)(end - begin));
            }
            batch_loss /= (double)(end - begin);
            if (!std::isfinite(batch_loss)) {
                throw Error("qa training loss is not finite at step " + std::to_string(step));
            }
            epoch_loss += batch_loss * (double)(end - begin);
            ps.default_missing_grads_to_zero();
            clip_global_norm(ps, 1.0);
            adam_step(ps, adam, cfg.lr);
            ++step;
        }
        stats.train_losses.push_back(epoch_loss / (double)train.size());

        if (!dev_in.empty()) {
            double acc = inputs_accuracy(model, dev_in, threads);
            stats.dev_accuracies.push_back(acc);
            if (acc > best_acc) {
                best_acc = acc;
                stats.best_epoch = epoch;
                best = ps.snapshot_values();
                bad_epochs = 0;
            } else if (++bad_epochs >= cfg.patience) {
                break;
            }
        }
    }
    stats.steps = step;
    if (best.param_count() > 0) {
        ps.load_values(best);
        stats.best_dev_accuracy = best_acc;
    }
    if (stats_out) *stats_out = stats;
    return model;
}

QAPrediction predict(const QAModel& model, const QAExample& ex, const KnowledgeGraph& kg,
                     const GeneratorModel* generator) {
    EvidenceBundle ev = build_evidence(ex, kg, generator, model.variant(), model.config().max_hops,
                                       model.config().max_static_paths);
    QuestionInput q;
    q.answer = ex.answer;
    for (size_t c = 0; c < ex.choices.size(); ++c) {
        ChoiceInput ch;
        ch.context_words = model.context_word_ids(ex.question, ex.choices[c]);
        ch.evidence = &ev.choices[c];
        q.choices.push_back(std::move(ch));
    }
    QAPrediction pred;
    pred.probabilities = question_probabilities(model, q);
    pred.choice = 0;
    for (size_t c = 1; c < pred.probabilities.size(); ++c) {
        if (pred.probabilities[c] > pred.probabilities[pred.choice]) pred.choice = (int)c;
    }
    for (const ChoiceEvidence& ce : ev.choices) pred.evidence_missing |= ce.no_grounding;
    return pred;
}

double qa_accuracy(const QAModel& model, const std::vector<QAExample>& examples,
                   const KnowledgeGraph& kg, const GeneratorModel* generator, int threads,
                   std::vector<QAPrediction>* predictions) {
    if (examples.empty()) throw Error("qa evaluation set is empty");
    std::vector<QAPrediction> preds(examples.size());
    std::mutex err_mutex;
    std::string first_error;
    parallel_for(examples.size(), threads, [&](size_t i) {
        try {
            preds[i] = predict(model, examples[i], kg, generator);
        } catch (const std::exception& e) {
            std::lock_guard<std::mutex> lock(err_mutex);
            if (first_error.empty()) first_error = e.what();
        }
    });
    if (!first_error.empty()) throw Error(first_error);
    long right = 0;
    for (size_t i = 0; i < examples.size(); ++i) {
        if (preds[i].choice == examples[i].answer) ++right;
    }
    if (predictions) *predictions = std::move(preds);
    return (double)right / (double)examples.size();
}

template ParamStore<float> init_qa_params<float>(QAVariant, const QAConfig&, int, int, int, int,
                                                 Rng&);
template ParamStore<double> init_qa_params<double>(QAVariant, const QAConfig&, int, int, int, int,
                                                   Rng&);
template Tape<float>::Handle qa_context<float>(Tape<float>&, BoundParams<float>&, const QAConfig&,
                                               const std::vector<int>&);
template Tape<double>::Handle qa_context<double>(Tape<double>&, BoundParams<double>&,
                                                 const QAConfig&, const std::vector<int>&);
template Tape<float>::Handle qa_static_path<float>(Tape<float>&, BoundParams<float>&,
                                                   const QAConfig&, const Path&);
template Tape<double>::Handle qa_static_path<double>(Tape<double>&, BoundParams<double>&,
                                                     const QAConfig&, const Path&);
template Tape<float>::Handle qa_aggregate<float>(Tape<float>&, BoundParams<float>&,
                                                 const std::string&, Tape<float>::Handle,
                                                 const std::vector<Tape<float>::Handle>&, int,
                                                 Tape<float>::Handle*);
template Tape<double>::Handle qa_aggregate<double>(Tape<double>&, BoundParams<double>&,
                                                   const std::string&, Tape<double>::Handle,
                                                   const std::vector<Tape<double>::Handle>&, int,
                                                   Tape<double>::Handle*);
template Tape<float>::Handle qa_question_scores<float>(Tape<float>&, BoundParams<float>&,
                                                       QAVariant, const QAConfig&, int,
                                                       const std::vector<ChoiceInput>&);
template Tape<double>::Handle qa_question_scores<double>(Tape<double>&, BoundParams<double>&,
                                                         QAVariant, const QAConfig&, int,
                                                         const std::vector<ChoiceInput>&);

}  // namespace pathgen
