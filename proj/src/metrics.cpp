#include "pathgen/metrics.hpp"

#include <string>

#include "pathgen/error.hpp"
#include "pathgen/util.hpp"

namespace pathgen {

nlohmann::json PathMetrics::to_json() const {
    nlohmann::json j;
    j["paths"] = paths;
    j["connection_rate"] = connection_rate;
    j["connection_percent"] = 100.0 * connection_rate;
    j["valid_entity_rate"] = valid_entity_rate;
    j["valid_entity_percent"] = 100.0 * valid_entity_rate;
    j["valid_relation_rate"] = valid_relation_rate;
    j["valid_relation_percent"] = 100.0 * valid_relation_rate;
    j["novelty_rate"] = novelty_rate;
    j["novelty_percent"] = 100.0 * novelty_rate;
    if (mean_novel_triplet_score) {
        j["mean_novel_triplet_score"] = *mean_novel_triplet_score;
        j["mean_novel_triplet_score_percent"] = 100.0 * *mean_novel_triplet_score;
    } else {
        j["mean_novel_triplet_score"] = nullptr;
        j["mean_novel_triplet_score_percent"] = nullptr;
    }
    j["counts"] = {{"connected", connected},
                   {"entity_slots", entity_slots},
                   {"valid_entities", valid_entities},
                   {"relation_slots", relation_slots},
                   {"valid_relations", valid_relations},
                   {"novel_paths", novel_paths},
                   {"missing_triplets", missing_triplets}};
    return j;
}

PathMetrics eval_paths(const std::vector<GenerationRecord>& records, const KnowledgeGraph& kg,
                       const BilinearScorer& scorer) {
    if (records.empty()) throw Error("no generated paths to evaluate");
    PathMetrics m;
    m.paths = static_cast<long>(records.size());
    double score_sum = 0;
    for (const GenerationRecord& rec : records) {
        DecodedPath d = decode_words(rec.tokens, kg);
        if (!d.entities.empty() && d.entities.front() == normalize_entity_phrase(rec.source) &&
            d.entities.back() == normalize_entity_phrase(rec.target)) {
            ++m.connected;
        }
        for (bool in : d.entity_in_kg) {
            ++m.entity_slots;
            if (in) ++m.valid_entities;
        }
        for (bool in : d.relation_in_kg) {
            ++m.relation_slots;
            if (in) ++m.valid_relations;
        }

        long missing = 0;
        double path_score = 0;
        size_t steps = std::min(d.relations.size(),
                                d.entities.empty() ? size_t(0) : d.entities.size() - 1);
        for (size_t i = 0; i < steps; ++i) {
            // Inverse steps are the stated base triplet read tail-first.
            const std::string& head = d.relation_is_inverse[i] ? d.entities[i + 1] : d.entities[i];
            const std::string& tail = d.relation_is_inverse[i] ? d.entities[i] : d.entities[i + 1];
            auto h = kg.entity_id(head);
            auto t = kg.entity_id(tail);
            auto r = kg.relation_id(d.relations[i]);
            bool present = h && t && r && kg.has_triplet(*h, *r, *t);
            if (present) continue;
            ++missing;
            path_score += scorer.score(head, d.relations[i], tail);
        }
        if (missing > 0) {
            ++m.novel_paths;
            m.missing_triplets += missing;
            score_sum += path_score / static_cast<double>(missing);
        }
    }
    m.connection_rate = static_cast<double>(m.connected) / static_cast<double>(m.paths);
    m.valid_entity_rate = m.entity_slots == 0 ? 0.0
                                              : static_cast<double>(m.valid_entities) /
                                                    static_cast<double>(m.entity_slots);
    m.valid_relation_rate = m.relation_slots == 0 ? 0.0
                                                  : static_cast<double>(m.valid_relations) /
                                                        static_cast<double>(m.relation_slots);
    m.novelty_rate = static_cast<double>(m.novel_paths) / static_cast<double>(m.paths);
    if (m.novel_paths > 0) {
        m.mean_novel_triplet_score = score_sum / static_cast<double>(m.novel_paths);
    }
    return m;
}

void write_generation_jsonl(std::ostream& out, const std::vector<GenerationRecord>& records) {
    for (const GenerationRecord& r : records) {
        nlohmann::json j;
        j["source"] = r.source;
        j["target"] = r.target;
        j["tokens"] = r.tokens;
        j["step_probs"] = r.step_probs;
        out << j.dump() << "\n";
    }
}

std::vector<GenerationRecord> read_generation_jsonl(std::istream& in) {
    std::vector<GenerationRecord> out;
    std::string line;
    long line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw Error("generation record parse error at line " + std::to_string(line_no) +
                        ": " + e.what());
        }
        try {
            GenerationRecord r;
            r.source = j.at("source").get<std::string>();
            r.target = j.at("target").get<std::string>();
            r.tokens = j.at("tokens").get<std::vector<std::string>>();
            if (j.contains("step_probs")) {
                r.step_probs = j.at("step_probs").get<std::vector<double>>();
            }
            out.push_back(std::move(r));
        } catch (const nlohmann::json::exception& e) {
            throw Error("generation record at line " + std::to_string(line_no) +
                        " is malformed: " + e.what());
        }
    }
    return out;
}

}  // namespace pathgen
