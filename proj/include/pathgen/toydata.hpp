#pragma once

#include <cstdint>
#include <string>

namespace pathgen {

// Synthetic desk-scale dataset: a typed knowledge graph plus a separable
// multiple-choice QA set over it. Entities come in five types with a
// latent subgroup (index mod 5); every relation links fixed types and
// only same-subgroup pairs, so both the triplet scorer and the path
// generator have structure to learn.
//
// Questions pair one grounded entity with a gold choice connected to it
// in the graph; the three distractors are coined words that ground to
// nothing. Train and dev questions mention only entities with index
// below train_pool, the test split only entities at or above it, so a
// text-only model meets unseen words at test time while path evidence
// still separates.
struct ToyDataConfig {
    int entities_per_type = 40;
    int train_questions = 360;
    int dev_questions = 40;
    int test_questions = 100;
    int train_pool = 32;
    uint64_t seed = 7;
};

struct ToyDataFiles {
    std::string kg_tsv;
    std::string qa_train_jsonl;
    std::string qa_dev_jsonl;
    std::string qa_test_jsonl;
    std::string start_entities;  // one phrase per line, sorted unique
};

ToyDataFiles make_toy_data(const ToyDataConfig& cfg);

}  // namespace pathgen
