#include "pathgen/generator.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "pathgen/error.hpp"
#include "pathgen/optim.hpp"
#include "pathgen/util.hpp"

namespace pathgen {

nlohmann::json GeneratorConfig::to_json() const {
    return {{"width", width}, {"blocks", blocks}, {"heads", heads},
            {"ffn", ffn},     {"max_seq_len", max_seq_len}};
}

GeneratorConfig GeneratorConfig::from_json(const nlohmann::json& j) {
    GeneratorConfig cfg;
    cfg.width = j.at("width").get<int>();
    cfg.blocks = j.at("blocks").get<int>();
    cfg.heads = j.at("heads").get<int>();
    cfg.ffn = j.at("ffn").get<int>();
    cfg.max_seq_len = j.at("max_seq_len").get<int>();
    if (cfg.width <= 0 || cfg.blocks <= 0 || cfg.heads <= 0 || cfg.ffn <= 0 ||
        cfg.max_seq_len <= 0) {
        throw Error("generator config fields must be positive");
    }
    return cfg;
}

template <typename T>
ParamStore<T> init_generator_params(const GeneratorConfig& cfg, int vocab_size, Rng& rng) {
    if (cfg.width % cfg.heads != 0) throw Error("generator width must be divisible by heads");
    if (vocab_size <= 0) throw Error("generator needs a non-empty vocabulary");
    ParamStore<T> ps;
    auto uni = [&](const std::string& name, int r, int c) {
        Tensor<T> t(r, c);
        init_uniform(t, rng, T(-0.05), T(0.05));
        ps.add(name, t);
    };
    auto zeros = [&](const std::string& name, int c) { ps.add(name, Tensor<T>(1, c)); };
    auto ones = [&](const std::string& name, int c) {
        Tensor<T> t(1, c);
        t.fill(T(1));
        ps.add(name, t);
    };
    uni("tok_emb", vocab_size, cfg.width);
    uni("pos_emb", cfg.max_seq_len, cfg.width);
    for (int b = 0; b < cfg.blocks; ++b) {
        std::string p = "blk" + std::to_string(b) + ".";
        ones(p + "ln1.g", cfg.width);
        zeros(p + "ln1.b", cfg.width);
        for (const char* w : {"wq", "wk", "wv", "wo"}) uni(p + "attn." + w, cfg.width, cfg.width);
        for (const char* bnm : {"bq", "bk", "bv", "bo"}) zeros(p + "attn." + bnm, cfg.width);
        ones(p + "ln2.g", cfg.width);
        zeros(p + "ln2.b", cfg.width);
        uni(p + "ffn.w1", cfg.ffn, cfg.width);
        zeros(p + "ffn.b1", cfg.ffn);
        uni(p + "ffn.w2", cfg.width, cfg.ffn);
        zeros(p + "ffn.b2", cfg.width);
    }
    ones("ln_f.g", cfg.width);
    zeros("ln_f.b", cfg.width);
    return ps;
}

// Weight matrices are stored [out, in], applied as x * W^T + b.
template <typename T>
static typename Tape<T>::Handle affine(Tape<T>& tape, typename Tape<T>::Handle x,
                                       typename Tape<T>::Handle w, typename Tape<T>::Handle b) {
    return tape.add_rowvec(tape.matmul_nt(x, w), b);
}

template <typename T>
typename Tape<T>::Handle generator_hidden(Tape<T>& tape, BoundParams<T>& params,
                                          const GeneratorConfig& cfg,
                                          const std::vector<int>& ids) {
    int len = static_cast<int>(ids.size());
    if (len == 0) throw Error("generator got an empty sequence");
    if (len > cfg.max_seq_len) {
        throw Error("sequence length " + std::to_string(len) + " exceeds max_seq_len " +
                    std::to_string(cfg.max_seq_len));
    }
    std::vector<int> pos(ids.size());
    for (int i = 0; i < len; ++i) pos[i] = i;
    auto x = tape.add(tape.gather_rows(params["tok_emb"], ids),
                      tape.gather_rows(params["pos_emb"], pos));
    int head_dim = cfg.width / cfg.heads;
    T inv_sqrt = T(1.0 / std::sqrt(static_cast<double>(head_dim)));
    for (int b = 0; b < cfg.blocks; ++b) {
        std::string p = "blk" + std::to_string(b) + ".";
        auto h = tape.layer_norm(x, params[p + "ln1.g"], params[p + "ln1.b"]);
        auto q = affine(tape, h, params[p + "attn.wq"], params[p + "attn.bq"]);
        auto k = affine(tape, h, params[p + "attn.wk"], params[p + "attn.bk"]);
        auto v = affine(tape, h, params[p + "attn.wv"], params[p + "attn.bv"]);
        std::vector<typename Tape<T>::Handle> heads;
        for (int hd = 0; hd < cfg.heads; ++hd) {
            int lo = hd * head_dim;
            auto qh = tape.slice_cols(q, lo, lo + head_dim);
            auto kh = tape.slice_cols(k, lo, lo + head_dim);
            auto vh = tape.slice_cols(v, lo, lo + head_dim);
            auto att = tape.causal_softmax_rows(tape.scale(tape.matmul_nt(qh, kh), inv_sqrt));
            heads.push_back(tape.matmul(att, vh));
        }
        auto merged = cfg.heads == 1 ? heads[0] : tape.concat_cols(heads);
        x = tape.add(x, affine(tape, merged, params[p + "attn.wo"], params[p + "attn.bo"]));
        auto h2 = tape.layer_norm(x, params[p + "ln2.g"], params[p + "ln2.b"]);
        auto f = tape.gelu(affine(tape, h2, params[p + "ffn.w1"], params[p + "ffn.b1"]));
        x = tape.add(x, affine(tape, f, params[p + "ffn.w2"], params[p + "ffn.b2"]));
    }
    return tape.layer_norm(x, params["ln_f.g"], params["ln_f.b"]);
}

template <typename T>
typename Tape<T>::Handle generator_logits(Tape<T>& tape, BoundParams<T>& params,
                                          const GeneratorConfig& cfg,
                                          const std::vector<int>& ids) {
    return tape.matmul_nt(generator_hidden(tape, params, cfg, ids), params["tok_emb"]);
}

template <typename T>
typename Tape<T>::Handle sequence_nll(Tape<T>& tape, BoundParams<T>& params,
                                      const GeneratorConfig& cfg, const TokenSequence& seq) {
    // Effective sequence ends at the first [EOS]; trailing pads are inert.
    std::vector<int> ids;
    for (int id : seq.ids) {
        ids.push_back(id);
        if (id == kEosId) break;
    }
    int n = static_cast<int>(ids.size());
    if (seq.prompt_len < 1 || n < seq.prompt_len + 1) {
        throw Error("sequence has no continuation after its prompt");
    }
    std::vector<int> inputs(ids.begin(), ids.end() - 1);
    std::vector<int> targets(ids.begin() + 1, ids.end());
    std::vector<int> mask(targets.size(), 0);
    for (size_t t = 0; t < targets.size(); ++t) {
        // Position t predicts token t+1; only post-prompt tokens are scored.
        if (static_cast<int>(t) + 1 >= seq.prompt_len && targets[t] != kPadId) mask[t] = 1;
    }
    auto logits = generator_logits(tape, params, cfg, inputs);
    return tape.cross_entropy_mean(logits, targets, mask);
}

GeneratorModel::GeneratorModel(Vocab vocab, GeneratorConfig cfg, uint64_t seed)
    : vocab_(std::move(vocab)), cfg_(cfg) {
    Rng rng(seed);
    params_ = init_generator_params<float>(cfg_, vocab_.size(), rng);
}

void GeneratorModel::save(const std::string& path) const {
    nlohmann::json extra;
    extra["vocab"] = vocab_.tokens;
    extra["config"] = cfg_.to_json();
    save_checkpoint(path, "generator", params_, extra);
}

GeneratorModel GeneratorModel::load(const std::string& path) {
    Checkpoint ck = load_checkpoint_expect(path, "generator");
    GeneratorModel m;
    m.vocab_ = vocab_from_tokens(ck.header.at("vocab").get<std::vector<std::string>>());
    m.cfg_ = GeneratorConfig::from_json(ck.header.at("config"));
    m.params_ = std::move(ck.params);
    const auto& emb = m.params_.at("tok_emb").value;
    if (emb.rows != m.vocab_.size() || emb.cols != m.cfg_.width) {
        throw Error("checkpoint embedding shape disagrees with its vocabulary");
    }
    return m;
}

double nll_loss(const GeneratorModel& model, const TokenSequence& seq) {
    Tape<float> tape;
    ParamStore<float>& ps = const_cast<ParamStore<float>&>(model.params());
    BoundParams<float> bound(tape, ps, false);
    auto loss = sequence_nll(tape, bound, model.config(), seq);
    return static_cast<double>(tape.value(loss).at(0, 0));
}

GeneratorTrainStats train_generator(GeneratorModel& model,
                                    const std::vector<TokenSequence>& train,
                                    const std::vector<TokenSequence>& dev,
                                    const GeneratorTrainOptions& opt) {
    if (train.empty()) throw Error("generator training set is empty");
    if (opt.batch_size < 1 || opt.max_epochs < 1) {
        throw Error("generator training needs batch_size >= 1 and max_epochs >= 1");
    }
    ParamStore<float>& ps = model.params();
    long steps_per_epoch =
        (static_cast<long>(train.size()) + opt.batch_size - 1) / opt.batch_size;
    long total_steps = steps_per_epoch * opt.max_epochs;
    long warmup = std::min(opt.warmup_steps, total_steps / 10);
    AdamConfig adam;

    GeneratorTrainStats stats;
    ParamStore<float> best;
    double best_dev = std::numeric_limits<double>::infinity();
    int bad_epochs = 0;
    long step = 0;
    std::vector<size_t> order(train.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;

    for (int epoch = 0; epoch < opt.max_epochs; ++epoch) {
        Rng shuffle_rng(child_seed(opt.seed, static_cast<uint64_t>(epoch)));
        deterministic_shuffle(order, shuffle_rng);
        double epoch_loss = 0;
        for (size_t begin = 0; begin < order.size(); begin += opt.batch_size) {
            size_t end = std::min(order.size(), begin + opt.batch_size);
            ps.zero_grad();
            double batch_loss = 0;
            for (size_t i = begin; i < end; ++i) {
                Tape<float> tape;
                BoundParams<float> bound(tape, ps);
                auto loss = sequence_nll(tape, bound, model.config(), train[order[i]]);
                batch_loss += static_cast<double>(tape.value(loss).at(0, 0));
                tape.backward(loss);
                bound.pull_grads(1.0 / static_cast<double>(end - begin));
            }
            batch_loss /= static_cast<double>(end - begin);
            if (!std::isfinite(batch_loss)) {
                throw Error("generator training loss is not finite at step " +
                            std::to_string(step));
            }
            epoch_loss += batch_loss * static_cast<double>(end - begin);
            clip_global_norm(ps, 1.0);
            double lr = lr_schedule(std::min(step + 1, total_steps), opt.lr, warmup, total_steps);
            adam_step(ps, adam, lr);
            ++step;
        }
        stats.train_losses.push_back(epoch_loss / static_cast<double>(train.size()));

        if (!dev.empty()) {
            double dev_loss = 0;
            for (const auto& seq : dev) dev_loss += nll_loss(model, seq);
            dev_loss /= static_cast<double>(dev.size());
            stats.dev_losses.push_back(dev_loss);
            if (dev_loss < best_dev) {
                best_dev = dev_loss;
                stats.best_epoch = epoch;
                best = ps.snapshot_values();
                bad_epochs = 0;
            } else if (++bad_epochs >= opt.patience) {
                break;
            }
        }
    }
    stats.steps = step;
    if (best.param_count() > 0) {
        ps.load_values(best);
        stats.best_dev = best_dev;
    }
    return stats;
}

GenerationResult generate_path(const GeneratorModel& model, const std::string& source_phrase,
                               const std::string& target_phrase, const KnowledgeGraph& kg) {
    const Vocab& vocab = model.vocab();
    const GeneratorConfig& cfg = model.config();
    GenerationResult res;
    res.source = source_phrase;
    res.target = target_phrase;
    std::vector<std::string> src_words = tokenize_words(source_phrase);
    std::vector<std::string> tgt_words = tokenize_words(target_phrase);
    if (src_words.empty() || tgt_words.empty()) {
        throw Error("generation needs non-empty source and target phrases");
    }
    std::vector<int>& ids = res.ids;
    for (const auto& w : tgt_words) ids.push_back(vocab.id_of(w));
    ids.push_back(kSepId);
    for (const auto& w : src_words) ids.push_back(vocab.id_of(w));
    res.prompt_len = static_cast<int>(ids.size());
    if (res.prompt_len + 1 > cfg.max_seq_len) throw Error("generation prompt is too long");

    ParamStore<float>& ps = const_cast<ParamStore<float>&>(model.params());
    while (static_cast<int>(ids.size()) < cfg.max_seq_len && ids.back() != kEosId) {
        Tape<float> tape;
        BoundParams<float> bound(tape, ps, false);
        auto logits = generator_logits(tape, bound, cfg, ids);
        const Tensor<float>& lv = tape.value(logits);
        int row = lv.rows - 1;
        int best = 0;
        for (int j = 1; j < lv.cols; ++j) {
            if (lv.at(row, j) > lv.at(row, best)) best = j;
        }
        // Chosen-token probability, computed in double for stable reporting.
        double mx = lv.at(row, best);
        double denom = 0;
        for (int j = 0; j < lv.cols; ++j) denom += std::exp(static_cast<double>(lv.at(row, j)) - mx);
        res.step_probs.push_back(1.0 / denom *
                                 std::exp(static_cast<double>(lv.at(row, best)) - mx));
        ids.push_back(best);
    }
    res.decoded = decode_tokens(ids, vocab, kg);
    return res;
}

std::vector<float> path_embedding(const GeneratorModel& model, const std::vector<int>& ids) {
    std::vector<int> kept;
    for (int id : ids) {
        if (id != kPadId) kept.push_back(id);
    }
    if (kept.empty()) throw Error("path embedding needs at least one non-pad token");
    Tape<float> tape;
    ParamStore<float>& ps = const_cast<ParamStore<float>&>(model.params());
    BoundParams<float> bound(tape, ps, false);
    auto pooled = tape.mean_rows(generator_hidden(tape, bound, model.config(), kept));
    const Tensor<float>& v = tape.value(pooled);
    return v.v;
}

template ParamStore<float> init_generator_params<float>(const GeneratorConfig&, int, Rng&);
template ParamStore<double> init_generator_params<double>(const GeneratorConfig&, int, Rng&);
template Tape<float>::Handle generator_hidden<float>(Tape<float>&, BoundParams<float>&,
                                                     const GeneratorConfig&,
                                                     const std::vector<int>&);
template Tape<double>::Handle generator_hidden<double>(Tape<double>&, BoundParams<double>&,
                                                       const GeneratorConfig&,
                                                       const std::vector<int>&);
template Tape<float>::Handle generator_logits<float>(Tape<float>&, BoundParams<float>&,
                                                     const GeneratorConfig&,
                                                     const std::vector<int>&);
template Tape<double>::Handle generator_logits<double>(Tape<double>&, BoundParams<double>&,
                                                       const GeneratorConfig&,
                                                       const std::vector<int>&);
template Tape<float>::Handle sequence_nll<float>(Tape<float>&, BoundParams<float>&,
                                                 const GeneratorConfig&, const TokenSequence&);
template Tape<double>::Handle sequence_nll<double>(Tape<double>&, BoundParams<double>&,
                                                   const GeneratorConfig&, const TokenSequence&);

}  // namespace pathgen
