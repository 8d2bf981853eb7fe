#pragma once

#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "pathgen/kg.hpp"
#include "pathgen/sampler.hpp"

namespace pathgen {

// Fixed special-token ids; word ids start at 4.
inline constexpr int kPadId = 0;
inline constexpr int kSepId = 1;
inline constexpr int kEosId = 2;
inline constexpr int kInvId = 3;  // inverse-relation marker "_"

inline constexpr const char* kPadTok = "[PAD]";
inline constexpr const char* kSepTok = "[SEP]";
inline constexpr const char* kEosTok = "[EOS]";
inline constexpr const char* kInvTok = "_";

inline constexpr int kMaxSeqLen = 64;

struct Vocab {
    std::vector<std::string> tokens;  // id -> token, specials first
    std::unordered_map<std::string, int> ids;
    // relation names whose word sequence is a proper prefix of another
    // relation's; greedy parsing can mis-segment those.
    std::vector<std::string> ambiguity_warnings;

    int size() const { return static_cast<int>(tokens.size()); }
    std::optional<int> find(const std::string& token) const;
    int id_of(const std::string& token) const;  // error names the token
    const std::string& token(int id) const;
};

// Specials plus the sorted unique words of all entity and relation
// phrases; deterministic for a given graph.
Vocab build_vocab(const KnowledgeGraph& kg);

// Rebuild from a persisted token list (checkpoint header).
Vocab vocab_from_tokens(const std::vector<std::string>& tokens);

struct TokenSequence {
    std::vector<int> ids;
    int prompt_len = 0;  // |target| + 1 + |source|
};

// tokens(e_T) [SEP] tokens(e_0) tokens(r_0) tokens(e_1) ... tokens(e_T) [EOS]
// with a standalone "_" marker before each inverse relation's words.
TokenSequence encode_path(const Path& path, const Vocab& vocab, const KnowledgeGraph& kg);

struct DecodedPath {
    std::vector<std::string> entities;  // parsed phrases, in order
    std::vector<bool> entity_in_kg;
    std::vector<std::string> relations;  // base names, marker stripped
    std::vector<bool> relation_is_inverse;
    std::vector<bool> relation_in_kg;
    std::vector<std::string> target_words;  // prompt words before [SEP]
    std::vector<std::string> residue;       // words the parse could not place
    bool complete = false;                  // saw [EOS]
    bool last_matches_target = false;

    std::string target_phrase() const;
};

// Never throws: diagnostics live in the result. The post-prompt region is
// parsed by alternating greedy longest-match against the entity and
// relation lexicons; spans matching no entity become out-of-KG entities.
DecodedPath decode_words(const std::vector<std::string>& words, const KnowledgeGraph& kg);
DecodedPath decode_tokens(const std::vector<int>& ids, const Vocab& vocab,
                          const KnowledgeGraph& kg);

std::vector<std::string> ids_to_tokens(const std::vector<int>& ids, const Vocab& vocab);

}  // namespace pathgen
