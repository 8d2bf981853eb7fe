#include "pathgen/toydata.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <vector>

#include <json.hpp>

#include "pathgen/error.hpp"
#include "pathgen/rng.hpp"

namespace pathgen {

namespace {

constexpr int kGroups = 5;
const char* kTypeStem[5] = {"beast", "spot", "stuff", "tool", "herb"};
enum { kBeast = 0, kSpot, kStuff, kTool, kHerb };

struct RelationSpec {
    const char* name;
    int head_type;
    int tail_type;
    bool exclude_self;
};

// Each relation joins one head type to one tail type within a subgroup.
const RelationSpec kRelations[] = {
    {"Eats", kBeast, kHerb, false},     {"LivesIn", kBeast, kSpot, false},
    {"Hunts", kBeast, kBeast, true},    {"GrowsIn", kHerb, kSpot, false},
    {"MadeOf", kTool, kStuff, false},   {"UsedOn", kTool, kHerb, false},
    {"CarriedBy", kTool, kBeast, false}, {"FoundIn", kStuff, kSpot, false},
};

std::string entity_name(int type, int index) {
    return std::string(kTypeStem[type]) + std::to_string(index);
}

}  // namespace

ToyDataFiles make_toy_data(const ToyDataConfig& cfg) {
    if (cfg.entities_per_type < kGroups * 2) throw Error("toy data needs more entities per type");
    if (cfg.train_pool < kGroups || cfg.train_pool > cfg.entities_per_type - kGroups) {
        throw Error("toy data train pool leaves a split without every subgroup");
    }
    Rng rng(cfg.seed);

    // fwd[r][head index] = tail indexes; rev is the transpose.
    int n = cfg.entities_per_type;
    std::vector<std::vector<std::vector<int>>> fwd(8), rev(8);
    std::string tsv;
    for (int r = 0; r < 8; ++r) {
        const RelationSpec& spec = kRelations[r];
        fwd[r].assign(n, {});
        rev[r].assign(n, {});
        for (int head = 0; head < n; ++head) {
            std::vector<int> candidates;
            for (int tail = head % kGroups; tail < n; tail += kGroups) {
                if (spec.exclude_self && tail == head) continue;
                candidates.push_back(tail);
            }
            deterministic_shuffle(candidates, rng);
            int take = 4 + (int)rng.uniform_int(2);
            take = std::min(take, (int)candidates.size());
            std::vector<int> tails(candidates.begin(), candidates.begin() + take);
            std::sort(tails.begin(), tails.end());
            for (int tail : tails) {
                tsv += entity_name(spec.head_type, head) + "\t" + spec.name + "\t" +
                       entity_name(spec.tail_type, tail) + "\n";
                fwd[r][head].push_back(tail);
                rev[r][tail].push_back(head);
            }
        }
    }

    struct Template {
        const char* before;
        const char* after;
        int subject_type;
        int gold_type;
    };
    const Template kTemplates[] = {
        {"what does ", " eat", kBeast, kHerb},
        {"where does ", " live", kBeast, kSpot},
        {"what hunts ", "", kBeast, kBeast},
        {"where does ", " grow", kHerb, kSpot},
        {"what is ", " made of", kTool, kStuff},
        {"which plant is ", " used on", kTool, kHerb},
        {"who carries ", "", kTool, kBeast},
        {"where is ", " found", kStuff, kSpot},
        {"what grows where ", " lives", kBeast, kHerb},
    };

    // Gold candidates per template, restricted to one entity pool.
    auto golds = [&](int tpl, int subject, int lo, int hi) {
        std::vector<int> out;
        auto in_pool = [&](int i) { return i >= lo && i < hi; };
        switch (tpl) {
            case 0: for (int t : fwd[0][subject]) if (in_pool(t)) out.push_back(t); break;
            case 1: for (int t : fwd[1][subject]) if (in_pool(t)) out.push_back(t); break;
            case 2: for (int h : rev[2][subject]) if (in_pool(h)) out.push_back(h); break;
            case 3: for (int t : fwd[3][subject]) if (in_pool(t)) out.push_back(t); break;
            case 4: for (int t : fwd[4][subject]) if (in_pool(t)) out.push_back(t); break;
            case 5: for (int t : fwd[5][subject]) if (in_pool(t)) out.push_back(t); break;
            case 6: for (int t : fwd[6][subject]) if (in_pool(t)) out.push_back(t); break;
            case 7: for (int t : fwd[7][subject]) if (in_pool(t)) out.push_back(t); break;
            case 8: {
                std::set<int> seen;
                for (int spot : fwd[1][subject]) {
                    for (int herb : rev[3][spot]) {
                        if (in_pool(herb)) seen.insert(herb);
                    }
                }
                out.assign(seen.begin(), seen.end());
                break;
            }
        }
        std::sort(out.begin(), out.end());
        out.erase(std::unique(out.begin(), out.end()), out.end());
        return out;
    };

    const char* kCoinStem[3] = {"vex", "zorn", "quil"};
    long coined = 0;
    std::set<std::string> start_set;
    int total = cfg.train_questions + cfg.dev_questions + cfg.test_questions;
    std::string lines[3];
    for (int qi = 0; qi < total; ++qi) {
        bool test_split = qi >= cfg.train_questions + cfg.dev_questions;
        int lo = test_split ? cfg.train_pool : 0;
        int hi = test_split ? cfg.entities_per_type : cfg.train_pool;
        int tpl = qi % 9;

        int subject = -1, gold = -1;
        for (int attempt = 0; attempt < 500 && gold < 0; ++attempt) {
            int s = lo + (int)rng.uniform_int((uint64_t)(hi - lo));
            std::vector<int> cand = golds(tpl, s, lo, hi);
            if (cand.empty()) continue;
            subject = s;
            gold = cand[rng.uniform_int(cand.size())];
        }
        if (gold < 0) throw Error("toy data could not place a gold answer");

        const Template& t = kTemplates[tpl];
        std::string subject_name = entity_name(t.subject_type, subject);
        std::string gold_name = entity_name(t.gold_type, gold);
        int gold_at = qi % 4;
        std::vector<std::string> choices(4);
        for (int c = 0; c < 4; ++c) {
            if (c == gold_at) {
                choices[c] = gold_name;
            } else {
                choices[c] = std::string(kCoinStem[coined % 3]) + std::to_string(coined);
                ++coined;
            }
        }
        nlohmann::json j = {{"id", "toy-" + std::to_string(qi)},
                            {"question", t.before + subject_name + t.after},
                            {"choices", choices},
                            {"answer", gold_at}};
        int split = test_split ? 2 : (qi >= cfg.train_questions ? 1 : 0);
        lines[split] += j.dump() + "\n";
        if (split != 2) {
            start_set.insert(subject_name);
            start_set.insert(gold_name);
        }
    }

    ToyDataFiles files;
    files.kg_tsv = std::move(tsv);
    files.qa_train_jsonl = std::move(lines[0]);
    files.qa_dev_jsonl = std::move(lines[1]);
    files.qa_test_jsonl = std::move(lines[2]);
    for (const std::string& s : start_set) files.start_entities += s + "\n";
    return files;
}

}  // namespace pathgen
