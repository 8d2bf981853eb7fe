#pragma once

#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "pathgen/codec.hpp"
#include "pathgen/kg.hpp"
#include "pathgen/scorer.hpp"

namespace pathgen {

// One generated path as persisted by the generate command: the prompt
// phrases plus the emitted token words, so evaluation needs no vocabulary.
struct GenerationRecord {
    std::string source;
    std::string target;
    std::vector<std::string> tokens;
    std::vector<double> step_probs;
};

struct PathMetrics {
    double connection_rate = 0;
    double valid_entity_rate = 0;
    double valid_relation_rate = 0;
    double novelty_rate = 0;
    // Mean over novel paths of their mean missing-triplet score; absent
    // when no path has a missing triplet.
    std::optional<double> mean_novel_triplet_score;

    long paths = 0;
    long connected = 0;
    long entity_slots = 0;
    long valid_entities = 0;
    long relation_slots = 0;
    long valid_relations = 0;
    long novel_paths = 0;
    long missing_triplets = 0;

    nlohmann::json to_json() const;
};

// Decodes each record and applies the metric definitions: connection
// (endpoints equal the prompt), entity/relation validity (fraction of
// decoded slots found in the graph), novelty (any missing triplet), and
// the scorer mean over missing triplets of novel paths.
PathMetrics eval_paths(const std::vector<GenerationRecord>& records, const KnowledgeGraph& kg,
                       const BilinearScorer& scorer);

void write_generation_jsonl(std::ostream& out, const std::vector<GenerationRecord>& records);
std::vector<GenerationRecord> read_generation_jsonl(std::istream& in);

}  // namespace pathgen
