#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "pathgen/checkpoint.hpp"
#include "pathgen/codec.hpp"
#include "pathgen/kg.hpp"
#include "pathgen/params.hpp"
#include "pathgen/rng.hpp"
#include "pathgen/tape.hpp"

namespace pathgen {

// Decoder-only sequence model: learned token + position embeddings, two
// pre-norm blocks of causal multi-head attention and a gelu feed-forward,
// final layer norm, output logits through the tied embedding table.
struct GeneratorConfig {
    int width = 128;
    int blocks = 2;
    int heads = 4;
    int ffn = 512;
    int max_seq_len = kMaxSeqLen;

    nlohmann::json to_json() const;
    static GeneratorConfig from_json(const nlohmann::json& j);
};

template <typename T>
ParamStore<T> init_generator_params(const GeneratorConfig& cfg, int vocab_size, Rng& rng);

// Final-block hidden states [len(ids), width] after the closing layer norm.
template <typename T>
typename Tape<T>::Handle generator_hidden(Tape<T>& tape, BoundParams<T>& params,
                                          const GeneratorConfig& cfg,
                                          const std::vector<int>& ids);

// Next-token logits [len(ids), vocab] via the tied embedding table.
template <typename T>
typename Tape<T>::Handle generator_logits(Tape<T>& tape, BoundParams<T>& params,
                                          const GeneratorConfig& cfg,
                                          const std::vector<int>& ids);

// Scalar mean NLL of the continuation of one sequence (loss node).
template <typename T>
typename Tape<T>::Handle sequence_nll(Tape<T>& tape, BoundParams<T>& params,
                                      const GeneratorConfig& cfg, const TokenSequence& seq);

class GeneratorModel {
   public:
    GeneratorModel(Vocab vocab, GeneratorConfig cfg, uint64_t seed);

    static GeneratorModel load(const std::string& path);
    void save(const std::string& path) const;

    const Vocab& vocab() const { return vocab_; }
    const GeneratorConfig& config() const { return cfg_; }
    ParamStore<float>& params() { return params_; }
    const ParamStore<float>& params() const { return params_; }

   private:
    GeneratorModel() = default;
    Vocab vocab_;
    GeneratorConfig cfg_;
    ParamStore<float> params_;
};

// Mean next-token NLL over the continuation: positions after the prompt
// through [EOS]; pads beyond [EOS] never contribute.
double nll_loss(const GeneratorModel& model, const TokenSequence& seq);

struct GeneratorTrainOptions {
    double lr = 1e-3;
    int batch_size = 64;
    long warmup_steps = 500;  // shrunk to a tenth of the run when shorter
    int max_epochs = 50;
    int patience = 2;
    uint64_t seed = 0;
};

struct GeneratorTrainStats {
    std::vector<double> dev_losses;  // one per epoch
    std::vector<double> train_losses;
    int best_epoch = -1;
    double best_dev = 0;
    long steps = 0;
};

// Adam + warmup/decay schedule, gradient clipping at global norm 1, early
// stopping on dev loss (patience epochs); the best-dev parameter values
// are restored into the model. Dev may be empty (no early stopping).
GeneratorTrainStats train_generator(GeneratorModel& model,
                                    const std::vector<TokenSequence>& train,
                                    const std::vector<TokenSequence>& dev,
                                    const GeneratorTrainOptions& opt);

struct GenerationResult {
    std::string source;
    std::string target;
    std::vector<int> ids;  // prompt + continuation (+ [EOS] when reached)
    int prompt_len = 0;
    std::vector<double> step_probs;  // chosen-token probability per step
    DecodedPath decoded;
};

// Greedy continuation of "target [SEP] source" until [EOS] or max_seq_len;
// argmax ties break toward the lowest token id.
GenerationResult generate_path(const GeneratorModel& model, const std::string& source_phrase,
                               const std::string& target_phrase, const KnowledgeGraph& kg);

// Mean of the final hidden states over every non-pad position, prompt
// included.
std::vector<float> path_embedding(const GeneratorModel& model, const std::vector<int>& ids);

}  // namespace pathgen
