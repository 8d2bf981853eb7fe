#include "pathgen/codec.hpp"

#include <algorithm>
#include <set>

#include "pathgen/util.hpp"

namespace pathgen {

std::optional<int> Vocab::find(const std::string& token) const {
    auto it = ids.find(token);
    if (it == ids.end()) return std::nullopt;
    return it->second;
}

int Vocab::id_of(const std::string& token) const {
    auto it = ids.find(token);
    if (it == ids.end()) throw Error("word not in vocabulary: '" + token + "'");
    return it->second;
}

const std::string& Vocab::token(int id) const {
    if (id < 0 || id >= size()) throw Error("token id out of range: " + std::to_string(id));
    return tokens[id];
}

Vocab build_vocab(const KnowledgeGraph& kg) {
    std::set<std::string> words;
    for (int e = 0; e < kg.num_entities(); ++e)
        for (const auto& w : split(kg.entity_phrase(e), ' ')) words.insert(w);
    for (int r = 0; r < kg.num_base_relations(); ++r)
        for (const auto& w : split(kg.relation_name(r), ' ')) words.insert(w);

    std::vector<std::string> tokens = {kPadTok, kSepTok, kEosTok, kInvTok};
    tokens.insert(tokens.end(), words.begin(), words.end());
    Vocab v = vocab_from_tokens(tokens);

    // Greedy relation parsing assumes no relation's words are a proper
    // prefix of another's; report violations instead of failing.
    for (int a = 0; a < kg.num_base_relations(); ++a) {
        std::vector<std::string> wa = split(kg.relation_name(a), ' ');
        for (int b = 0; b < kg.num_base_relations(); ++b) {
            if (a == b) continue;
            std::vector<std::string> wb = split(kg.relation_name(b), ' ');
            if (wa.size() < wb.size() && std::equal(wa.begin(), wa.end(), wb.begin()))
                v.ambiguity_warnings.push_back("relation '" + kg.relation_name(a) +
                                               "' is a prefix of '" + kg.relation_name(b) +
                                               "'");
        }
    }
    return v;
}

Vocab vocab_from_tokens(const std::vector<std::string>& tokens) {
    const char* specials[4] = {kPadTok, kSepTok, kEosTok, kInvTok};
    if (tokens.size() < 4) throw Error("vocabulary too small: missing special tokens");
    for (int i = 0; i < 4; ++i)
        if (tokens[i] != specials[i])
            throw Error("vocabulary special token mismatch at id " + std::to_string(i));
    Vocab v;
    v.tokens = tokens;
    for (size_t i = 0; i < tokens.size(); ++i) {
        if (!v.ids.emplace(tokens[i], static_cast<int>(i)).second)
            throw Error("duplicate vocabulary token: '" + tokens[i] + "'");
    }
    return v;
}

TokenSequence encode_path(const Path& path, const Vocab& vocab, const KnowledgeGraph& kg) {
    if (path.hops() < 1 || path.entities.size() != path.relations.size() + 1)
        throw Error("encode_path: malformed path");

    auto push_words = [&](std::vector<int>& ids, const std::string& phrase) {
        for (const auto& w : split(phrase, ' ')) ids.push_back(vocab.id_of(w));
    };

    TokenSequence seq;
    const std::string& source = kg.entity_phrase(path.entities.front());
    const std::string& target = kg.entity_phrase(path.entities.back());
    push_words(seq.ids, target);
    seq.ids.push_back(kSepId);
    push_words(seq.ids, source);
    seq.prompt_len = static_cast<int>(seq.ids.size());

    for (int t = 0; t < path.hops(); ++t) {
        int r = path.relations[t];
        if (kg.is_inverse(r)) {
            seq.ids.push_back(kInvId);
            push_words(seq.ids, kg.relation_name(kg.inverse_of(r)));
        } else {
            push_words(seq.ids, kg.relation_name(r));
        }
        push_words(seq.ids, kg.entity_phrase(path.entities[t + 1]));
    }
    seq.ids.push_back(kEosId);

    if (static_cast<int>(seq.ids.size()) > kMaxSeqLen)
        throw Error("encoded path exceeds the maximum sequence length (" +
                    std::to_string(seq.ids.size()) + " > " + std::to_string(kMaxSeqLen) + ")");
    return seq;
}

std::string DecodedPath::target_phrase() const { return join(target_words); }

namespace {

struct RelMatch {
    int words = 0;  // total consumed, marker included
    std::string name;
    bool inverse = false;
};

// Longest relation-lexicon match at position i, requiring at least one
// word after it (a relation can never end a path).
std::optional<RelMatch> relation_at(const std::vector<std::string>& w, size_t i, size_t end,
                                    const KnowledgeGraph& kg, int max_rel_words) {
    bool inv = i < end && w[i] == kInvTok;
    size_t base = inv ? i + 1 : i;
    for (int len = max_rel_words; len >= 1; --len) {
        size_t stop = base + static_cast<size_t>(len);
        if (stop >= end) continue;  // need a following word
        std::string phrase;
        for (size_t k = base; k < stop; ++k) {
            if (k > base) phrase += ' ';
            phrase += w[k];
        }
        auto id = kg.relation_id(phrase);
        if (id && !kg.is_inverse(*id)) {
            RelMatch m;
            m.words = static_cast<int>(stop - i);
            m.name = phrase;
            m.inverse = inv;
            return m;
        }
    }
    return std::nullopt;
}

// True when the words from i to the region end form a proper prefix of
// some relation's word sequence (optionally after the inverse marker).
// Used on truncated sequences so a cut-off relation becomes residue
// instead of being glued onto the previous entity.
bool partial_relation_to_end(const std::vector<std::string>& w, size_t i, size_t end,
                             const KnowledgeGraph& kg) {
    if (i >= end) return false;
    size_t base = (w[i] == kInvTok) ? i + 1 : i;
    if (base == end) return w[i] == kInvTok;  // lone marker
    size_t len = end - base;
    for (int r = 0; r < kg.num_base_relations(); ++r) {
        std::vector<std::string> rw = split(kg.relation_name(r), ' ');
        if (len < rw.size() && std::equal(w.begin() + base, w.begin() + end, rw.begin()))
            return true;
    }
    return false;
}

}  // namespace

DecodedPath decode_words(const std::vector<std::string>& words, const KnowledgeGraph& kg) {
    DecodedPath out;

    std::vector<std::string> w;
    w.reserve(words.size());
    for (const auto& t : words)
        if (t != kPadTok) w.push_back(t);

    size_t pos = 0;
    while (pos < w.size() && w[pos] != kSepTok) out.target_words.push_back(w[pos++]);
    if (pos < w.size()) ++pos;  // skip [SEP]; without one, nothing parses as a path

    size_t end = pos;
    while (end < w.size() && w[end] != kEosTok) ++end;
    out.complete = end < w.size();

    int max_rel_words = 1;
    for (int r = 0; r < kg.num_base_relations(); ++r)
        max_rel_words = std::max(
            max_rel_words, static_cast<int>(split(kg.relation_name(r), ' ').size()));
    int max_ent_words = std::max(1, kg.max_entity_phrase_words());

    bool want_entity = true;
    while (pos < end) {
        if (want_entity) {
            // Longest in-graph phrase whose end lines up with a relation
            // start or the region end; otherwise an out-of-graph span.
            int found_len = 0;
            for (int len = std::min<int>(max_ent_words, static_cast<int>(end - pos));
                 len >= 1 && !found_len; --len) {
                std::string phrase;
                for (size_t k = pos; k < pos + static_cast<size_t>(len); ++k) {
                    if (k > pos) phrase += ' ';
                    phrase += w[k];
                }
                if (!kg.entity_id(phrase)) continue;
                size_t next = pos + static_cast<size_t>(len);
                if (next == end || relation_at(w, next, end, kg, max_rel_words) ||
                    (!out.complete && partial_relation_to_end(w, next, end, kg)))
                    found_len = len;
            }
            if (found_len > 0) {
                std::string phrase;
                for (size_t k = pos; k < pos + static_cast<size_t>(found_len); ++k) {
                    if (k > pos) phrase += ' ';
                    phrase += w[k];
                }
                out.entities.push_back(phrase);
                out.entity_in_kg.push_back(true);
                pos += static_cast<size_t>(found_len);
            } else {
                // consume words up to the next relation start (at least one)
                size_t stop = pos + 1;
                while (stop < end && !relation_at(w, stop, end, kg, max_rel_words) &&
                       !(!out.complete && partial_relation_to_end(w, stop, end, kg)))
                    ++stop;
                std::string phrase;
                for (size_t k = pos; k < stop; ++k) {
                    if (k > pos) phrase += ' ';
                    phrase += w[k];
                }
                out.entities.push_back(phrase);
                out.entity_in_kg.push_back(false);
                pos = stop;
            }
            want_entity = false;
        } else {
            auto m = relation_at(w, pos, end, kg, max_rel_words);
            if (!m) break;  // the rest is residue
            out.relations.push_back(m->name);
            out.relation_is_inverse.push_back(m->inverse);
            out.relation_in_kg.push_back(true);
            pos += static_cast<size_t>(m->words);
            want_entity = true;
        }
    }
    while (pos < end) out.residue.push_back(w[pos++]);

    out.last_matches_target =
        !out.entities.empty() && !out.target_words.empty() &&
        out.entities.back() == out.target_phrase();
    return out;
}

DecodedPath decode_tokens(const std::vector<int>& ids, const Vocab& vocab,
                          const KnowledgeGraph& kg) {
    return decode_words(ids_to_tokens(ids, vocab), kg);
}

std::vector<std::string> ids_to_tokens(const std::vector<int>& ids, const Vocab& vocab) {
    std::vector<std::string> out;
    out.reserve(ids.size());
    for (int id : ids) out.push_back(vocab.token(id));
    return out;
}

}  // namespace pathgen
