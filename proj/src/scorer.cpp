#include "pathgen/scorer.hpp"

#include <algorithm>
#include <cmath>

#include "pathgen/checkpoint.hpp"
#include "pathgen/error.hpp"
#include "pathgen/optim.hpp"
#include "pathgen/rng.hpp"
#include "pathgen/tape.hpp"

namespace pathgen {

nlohmann::json ScorerConfig::to_json() const {
    return {{"dim", dim},
            {"lr", lr},
            {"batch_size", batch_size},
            {"max_epochs", max_epochs},
            {"patience", patience}};
}

ScorerConfig ScorerConfig::from_json(const nlohmann::json& j) {
    ScorerConfig cfg;
    cfg.dim = j.at("dim").get<int>();
    cfg.lr = j.at("lr").get<double>();
    cfg.batch_size = j.at("batch_size").get<int>();
    cfg.max_epochs = j.at("max_epochs").get<int>();
    cfg.patience = j.at("patience").get<int>();
    if (cfg.dim <= 0 || cfg.batch_size <= 0 || cfg.max_epochs <= 0) {
        throw Error("scorer config fields must be positive");
    }
    return cfg;
}

BilinearScorer::BilinearScorer(std::vector<std::string> entities,
                               std::vector<std::string> relations, int dim, uint64_t seed)
    : entities_(std::move(entities)), relations_(std::move(relations)), dim_(dim) {
    if (dim_ <= 0) throw Error("scorer dimension must be positive");
    if (relations_.empty()) throw Error("scorer needs at least one relation");
    for (size_t i = 0; i < entities_.size(); ++i) entity_ids_[entities_[i]] = (int)i;
    for (size_t i = 0; i < relations_.size(); ++i) relation_ids_[relations_[i]] = (int)i;
    if (entity_ids_.size() != entities_.size()) throw Error("duplicate scorer entity phrase");
    if (relation_ids_.size() != relations_.size()) throw Error("duplicate scorer relation name");

    Rng rng(seed);
    // Last embedding row stands in for every unknown entity.
    Tensor<float> ent((int)entities_.size() + 1, dim_);
    init_uniform(ent, rng, -0.05f, 0.05f);
    params_.add("ent", std::move(ent));
    for (size_t r = 0; r < relations_.size(); ++r) {
        Tensor<float> w(dim_, dim_);
        init_uniform(w, rng, -0.05f, 0.05f);
        params_.add("rel" + std::to_string(r) + ".w", std::move(w));
        params_.add("rel" + std::to_string(r) + ".b", Tensor<float>(1, 1));
    }
}

int BilinearScorer::entity_row(const std::string& phrase) const {
    auto it = entity_ids_.find(normalize_entity_phrase(phrase));
    return it == entity_ids_.end() ? (int)entities_.size() : it->second;
}

bool BilinearScorer::has_relation(const std::string& relation) const {
    return relation_ids_.count(normalize_relation_name(relation)) != 0;
}

double BilinearScorer::score(const std::string& head, const std::string& relation,
                             const std::string& tail) const {
    std::string rel = normalize_relation_name(relation);
    auto it = relation_ids_.find(rel);
    if (it == relation_ids_.end()) throw Error("unknown relation: '" + rel + "'");
    const Tensor<float>& ent = params_.at("ent").value;
    const Tensor<float>& w = params_.at("rel" + std::to_string(it->second) + ".w").value;
    const Tensor<float>& b = params_.at("rel" + std::to_string(it->second) + ".b").value;
    const float* uh = ent.row(entity_row(head));
    const float* ut = ent.row(entity_row(tail));
    double z = b.at(0, 0);
    for (int i = 0; i < dim_; ++i) {
        double wi = 0;
        for (int j = 0; j < dim_; ++j) wi += (double)w.at(i, j) * ut[j];
        z += uh[i] * wi;
    }
    return 1.0 / (1.0 + std::exp(-z));
}

void BilinearScorer::save(const std::string& path) const {
    nlohmann::json extra;
    extra["entities"] = entities_;
    extra["relations"] = relations_;
    extra["dim"] = dim_;
    extra["held_out_accuracy"] = held_out_accuracy_;
    save_checkpoint(path, "scorer", params_, extra);
}

BilinearScorer BilinearScorer::load(const std::string& path) {
    Checkpoint ck = load_checkpoint_expect(path, "scorer");
    BilinearScorer s(ck.header.at("entities").get<std::vector<std::string>>(),
                     ck.header.at("relations").get<std::vector<std::string>>(),
                     ck.header.at("dim").get<int>(), 0);
    s.held_out_accuracy_ = ck.header.at("held_out_accuracy").get<double>();
    s.params_.load_values(ck.params);
    return s;
}

namespace {

// Uniform tail corruption avoiding true triplets; gives up after a bounded
// number of rejections on very dense graphs.
int corrupt_tail(const KnowledgeGraph& kg, const Triplet& t, Rng& rng) {
    int n = kg.num_entities();
    int tail = t.tail;
    for (int tries = 0; tries < 64; ++tries) {
        tail = (int)rng.uniform_int((uint64_t)n);
        if (tail != t.tail && !kg.has_triplet(t.head, t.rel, tail)) return tail;
    }
    return tail;
}

double split_accuracy(const ParamStore<float>& ps, int dim, const std::vector<Triplet>& positives,
                      const std::vector<int>& neg_tails) {
    const Tensor<float>& ent = ps.at("ent").value;
    auto raw = [&](int h, int r, int t) {
        const Tensor<float>& w = ps.at("rel" + std::to_string(r) + ".w").value;
        double z = ps.at("rel" + std::to_string(r) + ".b").value.at(0, 0);
        for (int i = 0; i < dim; ++i) {
            double wi = 0;
            for (int j = 0; j < dim; ++j) wi += (double)w.at(i, j) * ent.at(t, j);
            z += ent.at(h, i) * wi;
        }
        return z;
    };
    long correct = 0;
    for (size_t i = 0; i < positives.size(); ++i) {
        const Triplet& p = positives[i];
        if (raw(p.head, p.rel, p.tail) > 0) ++correct;
        if (raw(p.head, p.rel, neg_tails[i]) <= 0) ++correct;
    }
    return (double)correct / (double)(2 * positives.size());
}

}  // namespace

BilinearScorer train_triplet_scorer(const KnowledgeGraph& kg, const ScorerConfig& cfg,
                                    uint64_t seed) {
    std::vector<Triplet> all = kg.base_triplets();
    size_t n = all.size();
    size_t dev_n = n * 5 / 100;
    size_t test_n = n * 5 / 100;
    if (dev_n == 0 || test_n == 0) {
        throw Error("knowledge graph is too small to train a triplet scorer");
    }
    Rng split_rng(child_seed(seed, 0));
    deterministic_shuffle(all, split_rng);
    std::vector<Triplet> test(all.begin(), all.begin() + test_n);
    std::vector<Triplet> dev(all.begin() + test_n, all.begin() + test_n + dev_n);
    std::vector<Triplet> train(all.begin() + test_n + dev_n, all.end());

    std::vector<std::string> entities;
    for (int e = 0; e < kg.num_entities(); ++e) entities.push_back(kg.entity_phrase(e));
    std::vector<std::string> relations;
    for (int r = 0; r < kg.num_base_relations(); ++r) relations.push_back(kg.relation_name(r));
    BilinearScorer scorer(std::move(entities), std::move(relations), cfg.dim,
                          child_seed(seed, 1));
    ParamStore<float>& ps = scorer.params();

    // Fixed negatives keep dev/test accuracy comparable across epochs.
    Rng dev_rng(child_seed(seed, 2));
    std::vector<int> dev_negs;
    for (const Triplet& t : dev) dev_negs.push_back(corrupt_tail(kg, t, dev_rng));
    Rng test_rng(child_seed(seed, 3));
    std::vector<int> test_negs;
    for (const Triplet& t : test) test_negs.push_back(corrupt_tail(kg, t, test_rng));

    AdamConfig adam;
    ParamStore<float> best;
    double best_acc = -1;
    int bad_epochs = 0;
    for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
        Rng epoch_rng(child_seed(seed, 100 + (uint64_t)epoch));
        deterministic_shuffle(train, epoch_rng);
        for (size_t begin = 0; begin < train.size(); begin += cfg.batch_size) {
            size_t end = std::min(train.size(), begin + (size_t)cfg.batch_size);
            Tape<float> tape;
            BoundParams<float> bound(tape, ps);
            auto ent = bound["ent"];
            std::vector<Tape<float>::Handle> logits;
            Tensor<float> targets((int)(2 * (end - begin)), 1);
            for (size_t i = begin; i < end; ++i) {
                const Triplet& pos = train[i];
                int neg_tail = corrupt_tail(kg, pos, epoch_rng);
                auto w = bound["rel" + std::to_string(pos.rel) + ".w"];
                auto b = bound["rel" + std::to_string(pos.rel) + ".b"];
                auto uh = tape.gather_rows(ent, {pos.head});
                for (int tail : {pos.tail, neg_tail}) {
                    auto ut = tape.gather_rows(ent, {tail});
                    auto z = tape.add(tape.matmul_nt(tape.matmul(uh, w), ut), b);
                    targets.v[logits.size()] = tail == pos.tail ? 1.0f : 0.0f;
                    logits.push_back(z);
                }
            }
            auto loss = tape.bce_with_logits_mean(tape.concat_rows(logits), targets);
            if (!std::isfinite(tape.value(loss).at(0, 0))) {
                throw Error("scorer training loss is not finite");
            }
            ps.zero_grad();
            tape.backward(loss);
            bound.pull_grads();
            ps.default_missing_grads_to_zero();
            clip_global_norm(ps, 1.0);
            adam_step(ps, adam, cfg.lr);
        }
        double acc = split_accuracy(ps, cfg.dim, dev, dev_negs);
        if (acc > best_acc) {
            best_acc = acc;
            best = ps.snapshot_values();
            bad_epochs = 0;
        } else if (++bad_epochs >= cfg.patience) {
            break;
        }
    }
    ps.load_values(best);
    scorer.set_held_out_accuracy(split_accuracy(ps, cfg.dim, test, test_negs));
    return scorer;
}

}  // namespace pathgen
