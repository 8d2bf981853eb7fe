#pragma once

#include <istream>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "pathgen/error.hpp"

namespace pathgen {

struct Edge {
    int rel = 0;
    int dst = 0;
    bool operator==(const Edge&) const = default;
};

struct Triplet {
    int head = 0;
    int rel = 0;
    int tail = 0;
    bool operator==(const Triplet&) const = default;
};

// Immutable after load; all queries are const and safe to share across
// threads. Relation ids: 0..R-1 are the forward relations in name order,
// R..2R-1 their inverses ("_"-prefixed names).
class KnowledgeGraph {
   public:
    int num_entities() const { return static_cast<int>(entity_phrases_.size()); }
    int num_base_relations() const { return base_relations_; }
    int num_relations() const { return 2 * base_relations_; }

    const std::string& entity_phrase(int id) const;
    const std::string& relation_name(int id) const;
    std::optional<int> entity_id(const std::string& phrase) const;
    std::optional<int> relation_id(const std::string& name) const;

    bool is_inverse(int rel) const { return rel >= base_relations_; }
    int inverse_of(int rel) const;

    // Sorted by (relation id, neighbor id). Unknown id is an error.
    const std::vector<Edge>& neighbors(int entity) const;

    // Membership including materialized inverses; unknown ids are false.
    bool has_triplet(int head, int rel, int tail) const;

    // Forward-direction triplets only, deduplicated.
    const std::vector<Triplet>& base_triplets() const { return triplets_; }

    int max_entity_phrase_words() const { return max_entity_words_; }

    // surface phrase -> entity phrase (e.g. plural -> singular).
    void load_lemma_table(std::istream& in);

    // Entity mentions in a lowercased word sequence. With whole=true the
    // full sequence must name a single entity. Otherwise all contiguous
    // sub-sequences matching an entity phrase (directly or via the lemma
    // table) are found and only maximal, non-nested spans kept. Returns
    // sorted unique entity ids.
    std::vector<int> ground_entities(const std::vector<std::string>& words, bool whole) const;

    friend KnowledgeGraph load_kg(std::istream& in, const std::set<std::string>& discard);

   private:
    std::vector<std::string> entity_phrases_;
    std::unordered_map<std::string, int> entity_ids_;
    int base_relations_ = 0;
    std::vector<std::string> relation_names_;  // size 2R
    std::unordered_map<std::string, int> relation_ids_;
    std::vector<std::vector<Edge>> adjacency_;
    std::vector<Triplet> triplets_;
    std::unordered_set<uint64_t> triplet_index_;  // both directions
    std::unordered_map<std::string, std::string> lemma_table_;
    int max_entity_words_ = 0;

    std::optional<int> resolve_phrase(const std::string& phrase) const;
};

// Relation names the loader drops by default (with their triplets).
// Matching ignores case, spaces, and underscores.
const std::set<std::string>& default_discard_relations();

// One relation name per line; '#' comments and blank lines ignored.
std::set<std::string> load_discard_file(const std::string& path);

// "DistinctFrom" / "distinct_from" / "distinct from" -> "distinct from".
std::string normalize_relation_name(const std::string& raw);

// Lowercase, underscores to spaces, whitespace collapsed.
std::string normalize_entity_phrase(const std::string& raw);

KnowledgeGraph load_kg(std::istream& in, const std::set<std::string>& discard);
KnowledgeGraph load_kg_file(const std::string& path, const std::set<std::string>& discard);

}  // namespace pathgen
