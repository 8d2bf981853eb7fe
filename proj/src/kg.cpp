#include "pathgen/kg.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>
#include <sstream>

#include "pathgen/util.hpp"

namespace pathgen {

namespace {

// Ids are packed into 21-bit fields of one uint64 for the membership set.
constexpr int kIdBits = 21;
constexpr int kMaxId = (1 << kIdBits) - 1;

uint64_t pack_triplet(int h, int r, int t) {
    return (static_cast<uint64_t>(h) << (2 * kIdBits)) |
           (static_cast<uint64_t>(r) << kIdBits) | static_cast<uint64_t>(t);
}

// Case/space/underscore-insensitive key for the discard comparison.
std::string squash_name(const std::string& s) {
    std::string out;
    for (char c : s)
        if (c != ' ' && c != '_' && c != '\t')
            out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    return out;
}

}  // namespace

std::string normalize_relation_name(const std::string& raw) {
    // Split camel case, treat '_' and whitespace as separators, lowercase.
    std::string spaced;
    for (size_t i = 0; i < raw.size(); ++i) {
        unsigned char c = static_cast<unsigned char>(raw[i]);
        if (c == '_' || std::isspace(c)) {
            spaced.push_back(' ');
            continue;
        }
        if (std::isupper(c) && i > 0) {
            unsigned char prev = static_cast<unsigned char>(raw[i - 1]);
            if (prev != '_' && !std::isspace(prev)) spaced.push_back(' ');
        }
        spaced.push_back(static_cast<char>(std::tolower(c)));
    }
    return join(tokenize_words(spaced));
}

std::string normalize_entity_phrase(const std::string& raw) {
    return join(tokenize_words(raw));
}

const std::set<std::string>& default_discard_relations() {
    static const std::set<std::string> kSet = {
        "relatedto",  "synonym", "antonym",
        "derivedfrom", "formof", "etymologicallyderivedfrom",
        "etymologicallyrelatedto"};
    return kSet;
}

std::set<std::string> load_discard_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw Error("cannot open discard list: " + path);
    std::set<std::string> out;
    std::string line;
    while (std::getline(f, line)) {
        std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        out.insert(squash_name(t));
    }
    return out;
}

KnowledgeGraph load_kg(std::istream& in, const std::set<std::string>& discard) {
    std::set<std::string> squashed;
    for (const auto& d : discard) squashed.insert(squash_name(d));

    struct RawRecord {
        std::string head, rel, tail;
    };
    std::vector<RawRecord> kept;
    std::set<std::string> entity_set;
    std::set<std::string> relation_set;

    std::string line;
    long line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (trim(line).empty()) continue;
        std::vector<std::string> fields = split(line, '\t');
        if (fields.size() != 3)
            throw Error("kg parse error at line " + std::to_string(line_no) + ": expected 3 tab-separated fields, found " +
                        std::to_string(fields.size()));
        std::string head = normalize_entity_phrase(fields[0]);
        std::string rel = normalize_relation_name(fields[1]);
        std::string tail = normalize_entity_phrase(fields[2]);
        if (head.empty() || rel.empty() || tail.empty())
            throw Error("kg parse error at line " + std::to_string(line_no) + ": empty field");
        // Entities are harvested from every well-formed record, including
        // those whose relation is discarded; such entities end up isolated.
        entity_set.insert(head);
        entity_set.insert(tail);
        if (squashed.count(squash_name(rel))) continue;
        relation_set.insert(rel);
        kept.push_back({std::move(head), std::move(rel), std::move(tail)});
    }
    if (kept.empty()) throw Error("knowledge graph is empty after filtering");

    KnowledgeGraph kg;
    kg.entity_phrases_.assign(entity_set.begin(), entity_set.end());
    for (size_t i = 0; i < kg.entity_phrases_.size(); ++i)
        kg.entity_ids_[kg.entity_phrases_[i]] = static_cast<int>(i);

    kg.base_relations_ = static_cast<int>(relation_set.size());
    kg.relation_names_.assign(relation_set.begin(), relation_set.end());
    kg.relation_names_.resize(2 * relation_set.size());
    for (int r = 0; r < kg.base_relations_; ++r)
        kg.relation_names_[kg.base_relations_ + r] = "_" + kg.relation_names_[r];
    for (size_t i = 0; i < kg.relation_names_.size(); ++i)
        kg.relation_ids_[kg.relation_names_[i]] = static_cast<int>(i);

    if (kg.num_entities() > kMaxId || kg.num_relations() > kMaxId)
        throw Error("knowledge graph too large for the triplet index");

    for (const auto& e : kg.entity_phrases_)
        kg.max_entity_words_ =
            std::max(kg.max_entity_words_, static_cast<int>(split(e, ' ').size()));

    kg.adjacency_.resize(kg.entity_phrases_.size());
    for (const auto& rec : kept) {
        int h = kg.entity_ids_.at(rec.head);
        int r = kg.relation_ids_.at(rec.rel);
        int t = kg.entity_ids_.at(rec.tail);
        uint64_t key = pack_triplet(h, r, t);
        if (kg.triplet_index_.count(key)) continue;  // duplicate record
        kg.triplet_index_.insert(key);
        kg.triplet_index_.insert(pack_triplet(t, r + kg.base_relations_, h));
        kg.triplets_.push_back({h, r, t});
        kg.adjacency_[h].push_back({r, t});
        kg.adjacency_[t].push_back({r + kg.base_relations_, h});
    }
    for (auto& edges : kg.adjacency_) {
        std::sort(edges.begin(), edges.end(), [](const Edge& a, const Edge& b) {
            return a.rel != b.rel ? a.rel < b.rel : a.dst < b.dst;
        });
        edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
    }
    return kg;
}

KnowledgeGraph load_kg_file(const std::string& path, const std::set<std::string>& discard) {
    std::ifstream f(path);
    if (!f) throw Error("cannot open knowledge graph: " + path);
    return load_kg(f, discard);
}

const std::string& KnowledgeGraph::entity_phrase(int id) const {
    if (id < 0 || id >= num_entities())
        throw Error("unknown entity id: " + std::to_string(id));
    return entity_phrases_[id];
}

const std::string& KnowledgeGraph::relation_name(int id) const {
    if (id < 0 || id >= num_relations())
        throw Error("unknown relation id: " + std::to_string(id));
    return relation_names_[id];
}

std::optional<int> KnowledgeGraph::entity_id(const std::string& phrase) const {
    auto it = entity_ids_.find(phrase);
    if (it == entity_ids_.end()) return std::nullopt;
    return it->second;
}

std::optional<int> KnowledgeGraph::relation_id(const std::string& name) const {
    auto it = relation_ids_.find(name);
    if (it == relation_ids_.end()) return std::nullopt;
    return it->second;
}

int KnowledgeGraph::inverse_of(int rel) const {
    if (rel < 0 || rel >= num_relations())
        throw Error("unknown relation id: " + std::to_string(rel));
    return rel < base_relations_ ? rel + base_relations_ : rel - base_relations_;
}

const std::vector<Edge>& KnowledgeGraph::neighbors(int entity) const {
    if (entity < 0 || entity >= num_entities())
        throw Error("unknown entity id: " + std::to_string(entity));
    return adjacency_[entity];
}

bool KnowledgeGraph::has_triplet(int head, int rel, int tail) const {
    if (head < 0 || head >= num_entities()) return false;
    if (rel < 0 || rel >= num_relations()) return false;
    if (tail < 0 || tail >= num_entities()) return false;
    return triplet_index_.count(pack_triplet(head, rel, tail)) != 0;
}

void KnowledgeGraph::load_lemma_table(std::istream& in) {
    std::string line;
    long line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (trim(line).empty()) continue;
        std::vector<std::string> fields = split(line, '\t');
        if (fields.size() != 2)
            throw Error("lemma table parse error at line " + std::to_string(line_no));
        lemma_table_[normalize_entity_phrase(fields[0])] = normalize_entity_phrase(fields[1]);
    }
}

std::optional<int> KnowledgeGraph::resolve_phrase(const std::string& phrase) const {
    if (auto id = entity_id(phrase)) return id;
    auto it = lemma_table_.find(phrase);
    if (it != lemma_table_.end()) return entity_id(it->second);
    return std::nullopt;
}

std::vector<int> KnowledgeGraph::ground_entities(const std::vector<std::string>& words,
                                                 bool whole) const {
    std::vector<int> out;
    if (words.empty()) return out;
    if (whole) {
        if (auto id = resolve_phrase(join(words))) out.push_back(*id);
        return out;
    }
    struct Span {
        int begin, end, entity;
    };
    std::vector<Span> spans;
    int n = static_cast<int>(words.size());
    for (int b = 0; b < n; ++b) {
        std::string phrase;
        for (int e = b; e < std::min(n, b + max_entity_words_); ++e) {
            if (e > b) phrase += ' ';
            phrase += words[e];
            if (auto id = resolve_phrase(phrase)) spans.push_back({b, e + 1, *id});
        }
    }
    // Keep only maximal spans: drop any strictly contained in another.
    for (const Span& s : spans) {
        bool nested = false;
        for (const Span& t : spans) {
            bool covers = t.begin <= s.begin && s.end <= t.end;
            bool strictly = covers && (t.end - t.begin) > (s.end - s.begin);
            if (strictly) {
                nested = true;
                break;
            }
        }
        if (!nested) out.push_back(s.entity);
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

}  // namespace pathgen
