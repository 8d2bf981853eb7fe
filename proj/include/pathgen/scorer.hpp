#pragma once

#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "pathgen/kg.hpp"
#include "pathgen/params.hpp"

namespace pathgen {

struct ScorerConfig {
    int dim = 32;
    double lr = 1e-2;
    int batch_size = 128;
    int max_epochs = 30;
    int patience = 2;

    nlohmann::json to_json() const;
    static ScorerConfig from_json(const nlohmann::json& j);
};

// Bilinear triplet plausibility: logistic(u_h^T W_r u_t + b_r) over base
// relations. Entities outside the table share one unknown embedding row;
// relations are closed-world.
class BilinearScorer {
   public:
    BilinearScorer(std::vector<std::string> entities, std::vector<std::string> relations, int dim,
                   uint64_t seed);

    double score(const std::string& head, const std::string& relation,
                 const std::string& tail) const;
    bool has_relation(const std::string& relation) const;

    static BilinearScorer load(const std::string& path);
    void save(const std::string& path) const;

    int dim() const { return dim_; }
    double held_out_accuracy() const { return held_out_accuracy_; }
    void set_held_out_accuracy(double a) { held_out_accuracy_ = a; }
    ParamStore<float>& params() { return params_; }
    const ParamStore<float>& params() const { return params_; }
    const std::vector<std::string>& entities() const { return entities_; }
    const std::vector<std::string>& relations() const { return relations_; }

   private:
    int entity_row(const std::string& phrase) const;  // unknown -> last row

    std::vector<std::string> entities_;
    std::vector<std::string> relations_;
    std::map<std::string, int> entity_ids_;
    std::map<std::string, int> relation_ids_;
    int dim_ = 0;
    double held_out_accuracy_ = 0;
    ParamStore<float> params_;
};

// Logistic loss on KG triplets against 1:1 corrupted-tail negatives,
// resampled every epoch; 90/5/5 triplet split, early stopping on dev
// accuracy, held-out test accuracy recorded on the returned scorer.
BilinearScorer train_triplet_scorer(const KnowledgeGraph& kg, const ScorerConfig& cfg,
                                    uint64_t seed);

}  // namespace pathgen
