#include "synthenv.hpp"

#include <array>
#include <cctype>
#include <fstream>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace srr::synth {

namespace {

constexpr std::array<const char*, 16> kRelations = {
    "mentor",      "rival",     "founder",   "guardian",
    "neighbor",    "successor", "patron",    "architect",
    "captain",     "curator",   "sponsor",   "translator",
    "navigator",   "chronicler", "steward",  "advisor"};

// Letter-only filler; never collides with generated entity names.
constexpr std::array<const char*, 48> kFiller = {
    "amid",     "ancient",  "beacons",  "beneath",  "bright",   "canals",
    "carved",   "cedar",    "cliffs",   "coastal",  "copper",   "crowded",
    "distant",  "dunes",    "during",   "eastern",  "evening",  "fabled",
    "fertile",  "fortress", "gleaming", "granite",  "harbors",  "hidden",
    "hills",    "inland",   "iron",     "lantern",  "limestone", "marble",
    "markets",  "misty",    "northern", "obsidian", "orchards", "outer",
    "plains",   "quiet",    "rivers",   "roads",    "salt",     "seaside",
    "silver",   "southern", "stone",    "terraced", "timber",   "towers"};

constexpr std::array<const char*, 20> kHeadSyllables = {
    "bal", "cor", "dra", "fen", "gal", "hur", "jor", "kel", "lum", "mor",
    "nar", "pel", "quin", "ras", "sor", "tan", "ven", "wyr", "xan", "zeb"};

constexpr std::array<const char*, 8> kMidSyllables = {"a",  "e",  "i",  "o",
                                                      "u",  "ae", "ia", "io"};

constexpr std::array<const char*, 10> kTailSyllables = {
    "dor", "lin", "mar", "nak", "rel", "sun", "tis", "vak", "wen", "zor"};

// rng() % n keeps generation identical across standard libraries;
// uniform_int_distribution is implementation-defined.
std::size_t pick(std::mt19937_64& rng, std::size_t n) {
    return static_cast<std::size_t>(rng() % n);
}

std::string fresh_entity(std::mt19937_64& rng, std::set<std::string>& used) {
    for (;;) {
        std::string name = std::string(kHeadSyllables[pick(rng, kHeadSyllables.size())]) +
                           kMidSyllables[pick(rng, kMidSyllables.size())] +
                           kTailSyllables[pick(rng, kTailSyllables.size())];
        name[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(name[0])));
        if (used.insert(name).second) return name;
    }
}

std::string padding_words(std::mt19937_64& rng, int count) {
    std::string out;
    for (int i = 0; i < count; ++i) {
        if (i > 0) out.push_back(' ');
        out += kFiller[pick(rng, kFiller.size())];
    }
    return out;
}

std::string fact_sentence(const HopFact& fact) {
    return "The " + fact.relation + " of " + fact.subject + " is " +
           fact.object + ".";
}

}   // namespace

void ChainSpec::validate() const {
    if (hops < 1) throw std::invalid_argument("synth: hops must be >= 1");
    if (hops > static_cast<int>(kRelations.size())) {
        throw std::invalid_argument("synth: at most " +
                                    std::to_string(kRelations.size()) + " hops");
    }
    if (entities_per_hop < 1) {
        throw std::invalid_argument("synth: entities_per_hop must be >= 1");
    }
    if (distractor_docs < 0 || doc_padding_tokens < 0) {
        throw std::invalid_argument("synth: negative document counts");
    }
}

GeneratedEpisode generate_episode(const ChainSpec& spec) {
    spec.validate();
    std::mt19937_64 rng(spec.seed);

    // Distinct relation per hop, partial shuffle of the pool.
    std::vector<std::string> pool(kRelations.begin(), kRelations.end());
    std::vector<std::string> relations;
    for (int i = 0; i < spec.hops; ++i) {
        std::size_t j = static_cast<std::size_t>(i) +
                        pick(rng, pool.size() - static_cast<std::size_t>(i));
        std::swap(pool[static_cast<std::size_t>(i)], pool[j]);
        relations.push_back(pool[static_cast<std::size_t>(i)]);
    }

    std::set<std::string> used;
    std::vector<std::string> chain;
    for (int i = 0; i <= spec.hops; ++i) chain.push_back(fresh_entity(rng, used));
    std::vector<std::string> decoys;
    int decoy_count = spec.entities_per_hop * spec.hops + 4;
    for (int i = 0; i < decoy_count; ++i) decoys.push_back(fresh_entity(rng, used));

    GeneratedEpisode out;
    SyntheticEpisode& episode = out.episode;
    episode.id = "ep-" + std::to_string(spec.seed);
    episode.gold = chain[static_cast<std::size_t>(spec.hops)];

    for (int i = 0; i < spec.hops; ++i) {
        HopFact fact{chain[static_cast<std::size_t>(i)], relations[static_cast<std::size_t>(i)],
                     chain[static_cast<std::size_t>(i) + 1]};
        std::string text = fact_sentence(fact);
        std::string padding = padding_words(rng, spec.doc_padding_tokens);
        if (!padding.empty()) text += " " + padding;
        std::string id = "hop-" + std::to_string(i + 1);
        out.corpus.push_back(retrieval::Document{id, fact.subject, text});
        episode.hop_facts.push_back(std::move(fact));
        episode.gold_doc_ids.push_back(std::move(id));
    }

    // Distractors reuse relations and decoy entities but never a chain
    // subject, so no hop fact is contradicted and the gold stays unique.
    for (int j = 0; j < spec.distractor_docs; ++j) {
        std::string relation = kRelations[pick(rng, kRelations.size())];
        std::string subject = decoys[pick(rng, decoys.size())];
        std::string object = subject;
        while (object == subject) object = decoys[pick(rng, decoys.size())];
        std::string text = fact_sentence(HopFact{subject, relation, object});
        std::string padding = padding_words(rng, spec.doc_padding_tokens);
        if (!padding.empty()) text += " " + padding;
        out.corpus.push_back(retrieval::Document{
            "distractor-" + std::to_string(j + 1), subject, text});
    }

    std::string phrase = chain[0];
    for (int i = 0; i < spec.hops; ++i) {
        phrase = "the " + relations[static_cast<std::size_t>(i)] + " of " + phrase;
    }
    episode.question = "What is " + phrase + "?";
    return out;
}

namespace {

std::string refine_chunk(const HopFact& fact) {
    return "<documents_refine>" + fact_sentence(fact) + "</documents_refine>";
}

std::string query_chunk(const HopFact& fact) {
    return "<think>I need the " + fact.relation + " of " + fact.subject +
           ".</think>\n<query>" + fact.relation + " of " + fact.subject +
           "</query>";
}

std::string answer_chunk(const std::string& answer) {
    return "<think>Everything needed is known now.</think>\n<answer>The answer is \\boxed{" +
           answer + "}</answer>";
}

struct ScriptShape {
    bool skip_first_refine = false;
    bool stray_prefix = false;
    int total_retrievals = 0;    // 0 = exactly one per hop
    std::string final_answer;    // empty = gold
};

std::vector<std::string> build_script(const SyntheticEpisode& episode,
                                      const ScriptShape& shape) {
    const std::vector<HopFact>& hops = episode.hop_facts;
    std::vector<std::string> turns;

    for (std::size_t i = 0; i < hops.size(); ++i) {
        std::string chunk;
        if (i > 0 && !(shape.skip_first_refine && i == 1)) {
            chunk += refine_chunk(hops[i - 1]) + "\n";
        }
        chunk += query_chunk(hops[i]);
        if (i == 0 && shape.stray_prefix) chunk = "Sure thing. " + chunk;
        turns.push_back(std::move(chunk));
    }

    const HopFact& last = hops.back();
    int extra = shape.total_retrievals > static_cast<int>(hops.size())
                    ? shape.total_retrievals - static_cast<int>(hops.size())
                    : 0;
    for (int i = 0; i < extra; ++i) {
        turns.push_back(refine_chunk(last) + "\n" + query_chunk(last));
    }

    bool lone_refine_skipped = shape.skip_first_refine && hops.size() == 1;
    std::string closing;
    if (!lone_refine_skipped) closing += refine_chunk(last) + "\n";
    closing += answer_chunk(shape.final_answer.empty() ? episode.gold
                                                       : shape.final_answer);
    turns.push_back(std::move(closing));
    return turns;
}

}   // namespace

std::unique_ptr<rollout::PolicyBackend> oracle_policy(
    const SyntheticEpisode& episode) {
    if (episode.hop_facts.empty()) {
        throw std::invalid_argument("oracle_policy: episode has no hops");
    }
    return std::make_unique<rollout::ScriptedPolicy>(
        build_script(episode, ScriptShape{}));
}

std::unique_ptr<rollout::PolicyBackend> perturbed_policy(
    const SyntheticEpisode& episode, const Flaw& flaw) {
    if (episode.hop_facts.empty()) {
        throw std::invalid_argument("perturbed_policy: episode has no hops");
    }
    ScriptShape shape;
    switch (flaw.kind) {
        case FlawKind::SkipRefine:
            shape.skip_first_refine = true;
            break;
        case FlawKind::StrayText:
            shape.stray_prefix = true;
            break;
        case FlawKind::OverRetrieve:
            if (flaw.retrievals < static_cast<int>(episode.hop_facts.size())) {
                throw std::invalid_argument(
                    "perturbed_policy: OverRetrieve needs at least one round per hop");
            }
            shape.total_retrievals = flaw.retrievals;
            break;
        case FlawKind::WrongAnswer:
            shape.final_answer = episode.hop_facts.front().subject;
            break;
    }
    return std::make_unique<rollout::ScriptedPolicy>(
        build_script(episode, shape));
}

std::vector<SyntheticEpisode> read_episodes(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open episode file: " + path);
    std::vector<SyntheticEpisode> episodes;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        nlohmann::json doc = nlohmann::json::parse(line, nullptr, false);
        if (doc.is_discarded() || !doc.is_object()) {
            std::ostringstream msg;
            msg << path << ":" << line_no << ": malformed episode record";
            throw std::runtime_error(msg.str());
        }
        SyntheticEpisode episode;
        episode.id = doc.at("id").get<std::string>();
        episode.question = doc.at("question").get<std::string>();
        episode.gold = doc.at("gold").get<std::string>();
        for (const auto& fact : doc.at("hop_facts")) {
            episode.hop_facts.push_back(HopFact{
                fact.at("subject").get<std::string>(),
                fact.at("relation").get<std::string>(),
                fact.at("object").get<std::string>()});
        }
        for (const auto& id : doc.at("gold_doc_ids")) {
            episode.gold_doc_ids.push_back(id.get<std::string>());
        }
        episodes.push_back(std::move(episode));
    }
    return episodes;
}

void write_episodes(const std::string& path,
                    const std::vector<SyntheticEpisode>& episodes) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write episode file: " + path);
    for (const SyntheticEpisode& episode : episodes) {
        nlohmann::ordered_json doc;
        doc["id"] = episode.id;
        doc["question"] = episode.question;
        doc["gold"] = episode.gold;
        doc["hop_facts"] = nlohmann::ordered_json::array();
        for (const HopFact& fact : episode.hop_facts) {
            doc["hop_facts"].push_back({{"subject", fact.subject},
                                        {"relation", fact.relation},
                                        {"object", fact.object}});
        }
        doc["gold_doc_ids"] = episode.gold_doc_ids;
        out << doc.dump() << '\n';
    }
}

}   // namespace srr::synth
