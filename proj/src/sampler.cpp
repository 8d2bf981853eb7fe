#include "pathgen/sampler.hpp"

#include <algorithm>
#include <sstream>

#include <json.hpp>

#include "pathgen/util.hpp"

namespace pathgen {

namespace {

constexpr int kRelationRedraws = 16;
constexpr int kPathRestarts = 8;
constexpr int kSlotAttempts = 256;

}  // namespace

std::optional<Path> sample_path(const KnowledgeGraph& kg, int start, int hops, Rng& rng) {
    if (start < 0 || start >= kg.num_entities())
        throw Error("sample_path: unknown start entity id " + std::to_string(start));
    if (hops < 1) throw Error("sample_path: hop count must be at least 1");

    std::vector<int> nodes;
    std::vector<int> linking;
    for (int restart = 0; restart < kPathRestarts; ++restart) {
        Path p;
        p.entities.push_back(start);
        bool dead = false;
        for (int step = 0; step < hops && !dead; ++step) {
            int u = p.entities.back();
            const auto& edges = kg.neighbors(u);
            nodes.clear();
            for (const Edge& e : edges)
                if (e.dst != u) nodes.push_back(e.dst);
            std::sort(nodes.begin(), nodes.end());
            nodes.erase(std::unique(nodes.begin(), nodes.end()), nodes.end());
            if (nodes.empty()) {
                dead = true;
                break;
            }
            int v = nodes[rng.uniform_int(nodes.size())];
            linking.clear();
            for (const Edge& e : edges)
                if (e.dst == v) linking.push_back(e.rel);
            // edges are sorted by relation id already
            bool placed = false;
            for (int redraw = 0; redraw < kRelationRedraws && !placed; ++redraw) {
                int r = linking[rng.uniform_int(linking.size())];
                if (std::find(p.relations.begin(), p.relations.end(), r) == p.relations.end()) {
                    p.relations.push_back(r);
                    p.entities.push_back(v);
                    placed = true;
                }
            }
            if (!placed) dead = true;
        }
        if (!dead && p.hops() == hops) return p;
    }
    return std::nullopt;
}

PathCorpus sample_corpus(const KnowledgeGraph& kg, const CorpusRequest& req) {
    std::vector<int> starts;
    if (req.strategy == SampleStrategy::Local) {
        starts = req.start_entities;
        std::sort(starts.begin(), starts.end());
        starts.erase(std::unique(starts.begin(), starts.end()), starts.end());
        if (starts.empty())
            throw Error("local sampling requires a non-empty start entity set");
        for (int s : starts)
            if (s < 0 || s >= kg.num_entities())
                throw Error("local sampling: unknown start entity id " + std::to_string(s));
    }

    struct Slot {
        int hop;
    };
    std::vector<Slot> slots;
    for (const auto& [hop, count] : req.count_per_hop) {
        if (hop < 1) throw Error("sample_corpus: hop length must be at least 1");
        if (count < 0) throw Error("sample_corpus: negative path count");
        for (long i = 0; i < count; ++i) slots.push_back({hop});
    }

    std::vector<std::optional<Path>> results(slots.size());
    parallel_for(slots.size(), req.threads, [&](size_t i) {
        Rng rng(child_seed(req.seed, static_cast<uint64_t>(i)));
        for (int attempt = 0; attempt < kSlotAttempts; ++attempt) {
            int start;
            if (req.strategy == SampleStrategy::Global) {
                start = static_cast<int>(rng.uniform_int(static_cast<uint64_t>(kg.num_entities())));
            } else {
                start = starts[rng.uniform_int(starts.size())];
            }
            if (auto p = sample_path(kg, start, slots[i].hop, rng)) {
                results[i] = std::move(p);
                return;
            }
        }
    });

    std::map<int, std::pair<long, long>> achieved;  // hop -> (requested, got)
    for (size_t i = 0; i < slots.size(); ++i) {
        achieved[slots[i].hop].first += 1;
        if (results[i]) achieved[slots[i].hop].second += 1;
    }
    for (const auto& [hop, counts] : achieved) {
        if (counts.second < counts.first) {
            std::ostringstream msg;
            msg << "path sampling exhausted its attempt budget;";
            for (const auto& [h, c] : achieved)
                msg << " hop " << h << ": " << c.second << "/" << c.first;
            throw Error(msg.str());
        }
    }

    PathCorpus corpus;
    corpus.provenance = req.strategy == SampleStrategy::Global ? "global" : "local";
    corpus.seed = req.seed;
    corpus.paths.reserve(slots.size());
    for (auto& r : results) corpus.paths.push_back(std::move(*r));
    return corpus;
}

CorpusSplit split_corpus(const PathCorpus& corpus, const std::array<int, 3>& ratio,
                         uint64_t seed) {
    if (ratio[0] + ratio[1] + ratio[2] != 100)
        throw Error("split ratio must sum to 100");
    size_t n = corpus.paths.size();
    if (n < 3) throw Error("corpus too small to split (need at least 3 paths)");

    std::vector<size_t> idx(n);
    for (size_t i = 0; i < n; ++i) idx[i] = i;
    Rng rng(seed);
    deterministic_shuffle(idx, rng);

    // Largest-remainder apportionment; ties go to the lower bucket index.
    std::array<size_t, 3> size_of;
    std::array<size_t, 3> rem;
    size_t assigned = 0;
    for (int b = 0; b < 3; ++b) {
        size_t num = n * static_cast<size_t>(ratio[b]);
        size_of[b] = num / 100;
        rem[b] = num % 100;
        assigned += size_of[b];
    }
    std::array<int, 3> order = {0, 1, 2};
    std::sort(order.begin(), order.end(),
              [&](int a, int b) { return rem[a] != rem[b] ? rem[a] > rem[b] : a < b; });
    for (size_t extra = n - assigned, i = 0; i < extra; ++i) size_of[order[i]] += 1;

    CorpusSplit out;
    PathCorpus* buckets[3] = {&out.train, &out.dev, &out.test};
    size_t pos = 0;
    for (int b = 0; b < 3; ++b) {
        buckets[b]->provenance = corpus.provenance;
        buckets[b]->seed = corpus.seed;
        for (size_t i = 0; i < size_of[b]; ++i)
            buckets[b]->paths.push_back(corpus.paths[idx[pos++]]);
    }
    return out;
}

void write_corpus_jsonl(std::ostream& out, const PathCorpus& corpus, const KnowledgeGraph& kg) {
    for (const Path& p : corpus.paths) {
        nlohmann::json j;
        auto& ents = j["entities"] = nlohmann::json::array();
        for (int e : p.entities) ents.push_back(kg.entity_phrase(e));
        auto& rels = j["relations"] = nlohmann::json::array();
        for (int r : p.relations) rels.push_back(kg.relation_name(r));
        j["hops"] = p.hops();
        out << j.dump() << '\n';
    }
}

PathCorpus read_corpus_jsonl(std::istream& in, const KnowledgeGraph& kg) {
    PathCorpus corpus;
    std::string line;
    long line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const std::exception& e) {
            throw Error("corpus parse error at line " + std::to_string(line_no) + ": " +
                        e.what());
        }
        Path p;
        if (!j.contains("entities") || !j.contains("relations") || !j.contains("hops"))
            throw Error("corpus record at line " + std::to_string(line_no) +
                        " is missing entities/relations/hops");
        for (const auto& ph : j["entities"]) {
            auto id = kg.entity_id(ph.get<std::string>());
            if (!id)
                throw Error("corpus line " + std::to_string(line_no) +
                            ": unknown entity phrase '" + ph.get<std::string>() + "'");
            p.entities.push_back(*id);
        }
        for (const auto& rn : j["relations"]) {
            auto id = kg.relation_id(rn.get<std::string>());
            if (!id)
                throw Error("corpus line " + std::to_string(line_no) +
                            ": unknown relation name '" + rn.get<std::string>() + "'");
            p.relations.push_back(*id);
        }
        int hops = j["hops"].get<int>();
        if (hops != p.hops() || p.entities.size() != p.relations.size() + 1)
            throw Error("corpus line " + std::to_string(line_no) +
                        ": inconsistent path lengths");
        corpus.paths.push_back(std::move(p));
    }
    return corpus;
}

}  // namespace pathgen
