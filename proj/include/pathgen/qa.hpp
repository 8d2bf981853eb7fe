#pragma once

#include <istream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "pathgen/generator.hpp"
#include "pathgen/kg.hpp"
#include "pathgen/params.hpp"
#include "pathgen/sampler.hpp"

namespace pathgen {

// Which evidence feeds the classifier alongside the context vector:
// nothing, retrieved static paths, generated paths (from a locally or
// globally trained generator), or both streams concatenated.
enum class QAVariant { NoKg, StaticRn, PgLocal, PgGlobal, PgFull };

std::string variant_name(QAVariant v);
QAVariant variant_from_name(const std::string& name);
bool variant_uses_generated(QAVariant v);
bool variant_uses_static(QAVariant v);

struct QAExample {
    std::string id;
    std::string question;
    std::vector<std::string> choices;
    int answer = -1;
    std::vector<int> question_entities;               // grounded over text windows
    std::vector<std::vector<int>> choice_entities;    // each choice as a whole phrase
};

// Validates ids, 2..5 choices, answer range; grounds against the graph.
std::vector<QAExample> load_qa_jsonl(std::istream& in, const KnowledgeGraph& kg);
void write_qa_jsonl(std::ostream& out, const std::vector<QAExample>& examples);

// All simple paths (1..max_hops hops, no repeated entity) from any source
// to any target, per-pair shortest-first with DFS tie order, capped at
// max_per_pair per pair.
std::vector<Path> retrieve_static_paths(const KnowledgeGraph& kg, const std::vector<int>& from,
                                        const std::vector<int>& to, int max_hops,
                                        int max_per_pair);

struct ChoiceEvidence {
    std::vector<std::vector<float>> generated;  // frozen path embeddings
    std::vector<Path> static_paths;
    bool no_grounding = false;  // either entity side was empty
};

struct EvidenceBundle {
    std::vector<ChoiceEvidence> choices;
};

// generator may be null unless the variant generates paths.
EvidenceBundle build_evidence(const QAExample& ex, const KnowledgeGraph& kg,
                              const GeneratorModel* generator, QAVariant variant,
                              int max_hops, int max_static_paths);

struct QAConfig {
    int width = 128;     // context vector and static path encoding
    int ent_dim = 64;    // static encoder entity embeddings
    int rel_dim = 64;    // static encoder relation embeddings
    int hidden = 128;    // static encoder MLP hidden layer
    int max_hops = 3;
    int max_static_paths = 32;  // per question-choice entity pair
    double lr = 1e-3;
    int batch_size = 16;
    int max_epochs = 30;
    int patience = 2;

    nlohmann::json to_json() const;
    static QAConfig from_json(const nlohmann::json& j);
};

// Everything one question-choice pair contributes to the forward pass.
struct ChoiceInput {
    std::vector<int> context_words;
    const ChoiceEvidence* evidence = nullptr;
};

class QAModel {
   public:
    QAModel(QAVariant variant, QAConfig cfg, std::vector<std::string> words, int num_entities,
            int num_relations, int gen_dim, uint64_t seed);

    static QAModel load(const std::string& path);
    void save(const std::string& path) const;

    QAVariant variant() const { return variant_; }
    const QAConfig& config() const { return cfg_; }
    int gen_dim() const { return gen_dim_; }
    int num_entities() const { return num_entities_; }
    int num_relations() const { return num_relations_; }
    const std::vector<std::string>& words() const { return words_; }
    ParamStore<float>& params() { return params_; }
    const ParamStore<float>& params() const { return params_; }

    // question ++ [CTXSEP] ++ choice as word-embedding rows; unknown
    // words collapse to [UNK].
    std::vector<int> context_word_ids(const std::string& question,
                                      const std::string& choice) const;

   private:
    QAVariant variant_;
    QAConfig cfg_;
    std::vector<std::string> words_;
    std::map<std::string, int> word_ids_;
    int num_entities_ = 0;
    int num_relations_ = 0;
    int gen_dim_ = 0;
    ParamStore<float> params_;
};

// [UNK] and [CTXSEP] plus the sorted unique words of every question and
// choice in the dataset.
std::vector<std::string> build_qa_words(const std::vector<QAExample>& examples);

template <typename T>
ParamStore<T> init_qa_params(QAVariant variant, const QAConfig& cfg, int num_words,
                             int num_entities, int num_relations, int gen_dim, Rng& rng);

// c = tanh(mean(word embeddings) W^T + b), shape [1, width].
template <typename T>
typename Tape<T>::Handle qa_context(Tape<T>& tape, BoundParams<T>& params, const QAConfig& cfg,
                                    const std::vector<int>& word_ids);

// Static path encoding: MLP over [head; prod(relations); tail].
template <typename T>
typename Tape<T>::Handle qa_static_path(Tape<T>& tape, BoundParams<T>& params,
                                        const QAConfig& cfg, const Path& path);

// Attention pool of path vectors against context c using the parameter
// pair `prefix`.w/.b; empty sets yield a zero vector [1, out_width].
// alpha_out, when given, receives the attention weights [1, num_paths]
// (left untouched for an empty path set).
template <typename T>
typename Tape<T>::Handle qa_aggregate(Tape<T>& tape, BoundParams<T>& params,
                                      const std::string& prefix, typename Tape<T>::Handle c,
                                      const std::vector<typename Tape<T>::Handle>& paths,
                                      int out_width, typename Tape<T>::Handle* alpha_out = nullptr);

// Per-choice scores [1, num_choices] for one question.
template <typename T>
typename Tape<T>::Handle qa_question_scores(Tape<T>& tape, BoundParams<T>& params,
                                            QAVariant variant, const QAConfig& cfg, int gen_dim,
                                            const std::vector<ChoiceInput>& choices);

struct QATrainStats {
    std::vector<double> train_losses;
    std::vector<double> dev_accuracies;
    int best_epoch = -1;
    double best_dev_accuracy = 0;
    long steps = 0;
};

// Cross-entropy over each question's choice scores; adam, constant lr,
// early stopping on dev accuracy (patience epochs), best-dev restore.
// Evidence is built once up front against the frozen generator and graph.
QAModel train_qa(const std::vector<QAExample>& train, const std::vector<QAExample>& dev,
                 const KnowledgeGraph& kg, const GeneratorModel* generator, const QAConfig& cfg,
                 QAVariant variant, uint64_t seed, int threads, QATrainStats* stats = nullptr);

struct QAPrediction {
    int choice = -1;
    std::vector<double> probabilities;
    bool evidence_missing = false;  // some choice had no grounded pair
};

QAPrediction predict(const QAModel& model, const QAExample& ex, const KnowledgeGraph& kg,
                     const GeneratorModel* generator);

double qa_accuracy(const QAModel& model, const std::vector<QAExample>& examples,
                   const KnowledgeGraph& kg, const GeneratorModel* generator, int threads,
                   std::vector<QAPrediction>* predictions = nullptr);

}  // namespace pathgen
