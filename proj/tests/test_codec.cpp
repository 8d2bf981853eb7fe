#include <doctest.h>

#include <sstream>
#include <string>
#include <vector>

#include "pathgen/codec.hpp"
#include "pathgen/kg.hpp"
#include "pathgen/sampler.hpp"
#include "pathgen/util.hpp"

using namespace pathgen;

namespace {

KnowledgeGraph kg_from(const std::string& tsv) {
    std::istringstream in(tsv);
    return load_kg(in, default_discard_relations());
}

const char* kTinyKg =
    "predator\tDistinctFrom\tprey\n"
    "prey\tIsA\tanimal\n";

std::vector<std::string> words_of(const TokenSequence& seq, const Vocab& v) {
    return ids_to_tokens(seq.ids, v);
}

}  // namespace

TEST_CASE("vocabulary is specials plus sorted unique words") {
    KnowledgeGraph kg = kg_from(kTinyKg);
    Vocab v = build_vocab(kg);
    CHECK(v.size() == 11);
    std::vector<std::string> expect = {"[PAD]", "[SEP]", "[EOS]", "_",        "a", "animal",
                                       "distinct", "from", "is",  "predator", "prey"};
    CHECK(v.tokens == expect);
    CHECK(v.id_of("[PAD]") == kPadId);
    CHECK(v.id_of("[SEP]") == kSepId);
    CHECK(v.id_of("[EOS]") == kEosId);
    CHECK(v.id_of("_") == kInvId);
    CHECK_THROWS_WITH_AS(v.id_of("zebra"), "word not in vocabulary: 'zebra'", Error);

    Vocab again = build_vocab(kg);
    CHECK(again.tokens == v.tokens);
    CHECK(v.ambiguity_warnings.empty());
}

TEST_CASE("persisted token lists rebuild only when well-formed") {
    Vocab v = build_vocab(kg_from(kTinyKg));
    Vocab back = vocab_from_tokens(v.tokens);
    CHECK(back.tokens == v.tokens);

    CHECK_THROWS_AS(vocab_from_tokens({"[PAD]", "[SEP]"}), Error);
    CHECK_THROWS_AS(vocab_from_tokens({"[SEP]", "[PAD]", "[EOS]", "_"}), Error);
    CHECK_THROWS_AS(vocab_from_tokens({"[PAD]", "[SEP]", "[EOS]", "_", "a", "a"}), Error);
}

TEST_CASE("prefix-overlapping relation names are reported") {
    KnowledgeGraph kg = kg_from(
        "a\tIs\tb\n"
        "b\tIsA\tc\n");
    Vocab v = build_vocab(kg);
    REQUIRE(v.ambiguity_warnings.size() == 1);
    CHECK(v.ambiguity_warnings[0].find("'is'") != std::string::npos);
    CHECK(v.ambiguity_warnings[0].find("'is a'") != std::string::npos);
}

TEST_CASE("the reference transformation encodes byte for byte") {
    KnowledgeGraph kg = kg_from(kTinyKg);
    Vocab v = build_vocab(kg);
    Path p{{*kg.entity_id("predator"), *kg.entity_id("prey"), *kg.entity_id("animal")},
           {*kg.relation_id("distinct from"), *kg.relation_id("is a")}};
    TokenSequence seq = encode_path(p, v, kg);
    std::vector<std::string> expect = {"animal", "[SEP]", "predator", "distinct", "from",
                                       "prey",   "is",    "a",        "animal",   "[EOS]"};
    CHECK(words_of(seq, v) == expect);
    CHECK(seq.prompt_len == 3);

    DecodedPath d = decode_tokens(seq.ids, v, kg);
    CHECK(d.entities == std::vector<std::string>{"predator", "prey", "animal"});
    CHECK(d.relations == std::vector<std::string>{"distinct from", "is a"});
    CHECK(d.relation_is_inverse == std::vector<bool>{false, false});
    CHECK(d.entity_in_kg == std::vector<bool>{true, true, true});
    CHECK(d.relation_in_kg == std::vector<bool>{true, true});
    CHECK(d.target_words == std::vector<std::string>{"animal"});
    CHECK(d.residue.empty());
    CHECK(d.complete);
    CHECK(d.last_matches_target);
}

TEST_CASE("one-hop and inverse-marker encodings") {
    KnowledgeGraph kg = kg_from(kTinyKg);
    Vocab v = build_vocab(kg);

    Path hop1{{*kg.entity_id("prey"), *kg.entity_id("animal")}, {*kg.relation_id("is a")}};
    CHECK(words_of(encode_path(hop1, v, kg), v) ==
          std::vector<std::string>{"animal", "[SEP]", "prey", "is", "a", "animal", "[EOS]"});

    Path inv{{*kg.entity_id("prey"), *kg.entity_id("predator")},
             {*kg.relation_id("_distinct from")}};
    TokenSequence seq = encode_path(inv, v, kg);
    CHECK(words_of(seq, v) == std::vector<std::string>{"predator", "[SEP]", "prey", "_",
                                                       "distinct", "from", "predator",
                                                       "[EOS]"});
    CHECK(seq.prompt_len == 3);

    DecodedPath d = decode_tokens(seq.ids, v, kg);
    CHECK(d.entities == std::vector<std::string>{"prey", "predator"});
    CHECK(d.relations == std::vector<std::string>{"distinct from"});
    CHECK(d.relation_is_inverse == std::vector<bool>{true});
    CHECK(d.last_matches_target);
}

TEST_CASE("decoding flags an out-of-graph tail entity") {
    KnowledgeGraph kg = kg_from(kTinyKg);
    std::vector<std::string> words = {"animal", "[SEP]", "predator", "distinct",
                                      "from",   "moose", "[EOS]"};
    DecodedPath d = decode_words(words, kg);
    CHECK(d.entities == std::vector<std::string>{"predator", "moose"});
    CHECK(d.entity_in_kg == std::vector<bool>{true, false});
    CHECK(d.relations == std::vector<std::string>{"distinct from"});
    CHECK(d.complete);
    CHECK_FALSE(d.last_matches_target);
    CHECK(d.residue.empty());
}

TEST_CASE("truncated sequences leave the dangling relation as residue") {
    KnowledgeGraph kg = kg_from(kTinyKg);
    std::vector<std::string> words = {"animal", "[SEP]", "predator", "distinct",
                                      "from",   "prey",  "is"};
    DecodedPath d = decode_words(words, kg);
    CHECK_FALSE(d.complete);
    CHECK(d.entities == std::vector<std::string>{"predator", "prey"});
    CHECK(d.relations == std::vector<std::string>{"distinct from"});
    CHECK(d.residue == std::vector<std::string>{"is"});
    CHECK_FALSE(d.last_matches_target);

    // lone inverse marker at the cut
    std::vector<std::string> marker = {"animal", "[SEP]", "predator", "distinct",
                                       "from",   "prey",  "_"};
    DecodedPath dm = decode_words(marker, kg);
    CHECK(dm.entities == std::vector<std::string>{"predator", "prey"});
    CHECK(dm.residue == std::vector<std::string>{"_"});
}

TEST_CASE("pads are ignored and a missing separator parses nothing") {
    KnowledgeGraph kg = kg_from(kTinyKg);
    std::vector<std::string> words = {"animal", "[SEP]", "prey", "is",
                                      "a",      "animal", "[EOS]", "[PAD]", "[PAD]"};
    DecodedPath d = decode_words(words, kg);
    CHECK(d.entities == std::vector<std::string>{"prey", "animal"});
    CHECK(d.last_matches_target);

    DecodedPath nosep = decode_words({"predator", "distinct", "from", "prey", "[EOS]"}, kg);
    CHECK(nosep.entities.empty());
    CHECK_FALSE(nosep.last_matches_target);
}

TEST_CASE("multi-word entities win over their nested suffixes") {
    KnowledgeGraph kg = kg_from(
        "ice_cream\tIsA\tfood\n"
        "cream\tIsA\tfood\n");
    Vocab v = build_vocab(kg);

    Path p{{*kg.entity_id("ice cream"), *kg.entity_id("food")}, {*kg.relation_id("is a")}};
    TokenSequence seq = encode_path(p, v, kg);
    DecodedPath d = decode_tokens(seq.ids, v, kg);
    CHECK(d.entities == std::vector<std::string>{"ice cream", "food"});

    Path q{{*kg.entity_id("cream"), *kg.entity_id("food")}, {*kg.relation_id("is a")}};
    DecodedPath dq = decode_tokens(encode_path(q, v, kg).ids, v, kg);
    CHECK(dq.entities == std::vector<std::string>{"cream", "food"});
}

TEST_CASE("encode rejects out-of-vocabulary words and oversize sequences") {
    KnowledgeGraph tiny = kg_from(kTinyKg);
    KnowledgeGraph other = kg_from("zebra\tIsA\tanimal\n");
    Vocab v = build_vocab(tiny);

    Path p{{*other.entity_id("zebra"), *other.entity_id("animal")},
           {*other.relation_id("is a")}};
    try {
        encode_path(p, v, other);
        FAIL("expected an out-of-vocabulary error");
    } catch (const Error& e) {
        CHECK(std::string(e.what()).find("zebra") != std::string::npos);
    }

    std::string long_entity;
    for (int i = 0; i < 30; ++i) long_entity += (i ? "_w" : "w") + std::to_string(i);
    KnowledgeGraph wide = kg_from("b\tIsA\t" + long_entity + "\n");
    Vocab vw = build_vocab(wide);
    Path wp{{*wide.entity_id("b"), *wide.entity_id(normalize_entity_phrase(long_entity))},
            {*wide.relation_id("is a")}};
    CHECK_THROWS_AS(encode_path(wp, vw, wide), Error);

    Path malformed{{0}, {}};
    CHECK_THROWS_AS(encode_path(malformed, v, tiny), Error);
}

TEST_CASE("every sampled path round-trips through encode and decode") {
    // random graph with some multi-word entities
    Rng rng(77);
    std::ostringstream tsv;
    std::vector<std::string> rels = {"UsedFor", "PartOf", "AtLocation", "CapableOf"};
    for (int k = 0; k < 220; ++k) {
        int h = static_cast<int>(rng.uniform_int(40));
        int t = static_cast<int>(rng.uniform_int(40));
        if (h == t) continue;
        auto name = [](int i) {
            std::string n = "item" + std::to_string(i);
            if (i % 5 == 0) n += "_part" + std::to_string(i % 7);
            return n;
        };
        tsv << name(h) << '\t' << rels[rng.uniform_int(rels.size())] << '\t' << name(t)
            << '\n';
    }
    KnowledgeGraph kg = kg_from(tsv.str());
    Vocab v = build_vocab(kg);
    CHECK(v.ambiguity_warnings.empty());

    CorpusRequest req;
    req.count_per_hop = {{1, 40}, {2, 40}, {3, 40}};
    req.seed = 13;
    PathCorpus corpus = sample_corpus(kg, req);

    int inverse_seen = 0;
    for (const Path& p : corpus.paths) {
        TokenSequence seq = encode_path(p, v, kg);
        CHECK(seq.prompt_len >= 3);
        CHECK(static_cast<int>(seq.ids.size()) <= kMaxSeqLen);
        DecodedPath d = decode_tokens(seq.ids, v, kg);

        REQUIRE(d.entities.size() == p.entities.size());
        REQUIRE(d.relations.size() == p.relations.size());
        for (size_t i = 0; i < p.entities.size(); ++i) {
            CHECK(d.entities[i] == kg.entity_phrase(p.entities[i]));
            CHECK(d.entity_in_kg[i]);
        }
        for (size_t i = 0; i < p.relations.size(); ++i) {
            int r = p.relations[i];
            bool inv = kg.is_inverse(r);
            inverse_seen += inv;
            CHECK(d.relation_is_inverse[i] == inv);
            CHECK(d.relations[i] == kg.relation_name(inv ? kg.inverse_of(r) : r));
        }
        CHECK(d.complete);
        CHECK(d.residue.empty());
        CHECK(d.last_matches_target);
        CHECK(d.target_phrase() == kg.entity_phrase(p.entities.back()));
    }
    CHECK(inverse_seen > 0);
}
