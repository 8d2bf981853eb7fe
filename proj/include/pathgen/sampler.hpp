#pragma once

#include <array>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "pathgen/kg.hpp"
#include "pathgen/rng.hpp"

namespace pathgen {

// Walk of T hops: entities has T+1 ids, relations T ids, and no relation
// id occurs twice (forward and inverse of the same relation are distinct
// ids, so immediate backtracking is legal).
struct Path {
    std::vector<int> entities;
    std::vector<int> relations;
    int hops() const { return static_cast<int>(relations.size()); }
    bool operator==(const Path&) const = default;
};

// Single random walk. Per step: draw the next node uniformly from the
// distinct neighbors of u (excluding u itself), then draw uniformly among
// the relations linking u to it, re-drawing up to 16 times while the
// relation is already on the path. A failed step restarts the whole walk,
// up to 8 restarts, after which failure is returned.
std::optional<Path> sample_path(const KnowledgeGraph& kg, int start, int hops, Rng& rng);

enum class SampleStrategy { Global, Local };

struct CorpusRequest {
    SampleStrategy strategy = SampleStrategy::Global;
    std::vector<int> start_entities;    // Local only: candidate start ids
    std::map<int, long> count_per_hop;  // hop length -> number of paths
    uint64_t seed = 0;
    int threads = 1;
};

struct PathCorpus {
    std::vector<Path> paths;
    std::string provenance;  // "global" | "local" | "" when read back
    uint64_t seed = 0;
};

// Fills every requested slot with a successful walk, resampling failures
// with fresh start entities (up to 256 attempts per slot). Each slot draws
// from its own child seed, so results do not depend on the thread count.
PathCorpus sample_corpus(const KnowledgeGraph& kg, const CorpusRequest& req);

struct CorpusSplit {
    PathCorpus train, dev, test;
};

// Shuffled partition with largest-remainder rounding; ratio must sum to 100.
CorpusSplit split_corpus(const PathCorpus& corpus, const std::array<int, 3>& ratio,
                         uint64_t seed);

// One JSON object per line: entities (phrases), relations (names,
// "_"-prefixed for inverses), hops.
void write_corpus_jsonl(std::ostream& out, const PathCorpus& corpus, const KnowledgeGraph& kg);
PathCorpus read_corpus_jsonl(std::istream& in, const KnowledgeGraph& kg);

}  // namespace pathgen
