#pragma once

// Seeded synthetic multi-hop environment: relational fact chains rendered as
// a small corpus, the matching question/answer, and scripted policies (an
// oracle plus deliberately flawed variants) for end-to-end verification
// without a real model.

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "policy.hpp"
#include "retrieval.hpp"

namespace srr::synth {

struct ChainSpec {
    int hops = 2;
    int entities_per_hop = 4;     // decoy entities per hop for distractors
    int distractor_docs = 20;
    int doc_padding_tokens = 30;  // filler words appended to every document
    std::uint64_t seed = 0;

    void validate() const;   // throws std::invalid_argument
};

struct HopFact {
    std::string subject;
    std::string relation;
    std::string object;

    bool operator==(const HopFact&) const = default;
};

struct SyntheticEpisode {
    std::string id;
    std::string question;
    std::string gold;
    std::vector<HopFact> hop_facts;        // object of hop i = subject of hop i+1
    std::vector<std::string> gold_doc_ids;
};

struct GeneratedEpisode {
    std::vector<retrieval::Document> corpus;
    SyntheticEpisode episode;
};

// Deterministic for a given spec; same seed twice gives identical output.
GeneratedEpisode generate_episode(const ChainSpec& spec);

// Per hop: think, query for the hop's subject+relation; after documents
// arrive, a refine quoting the hop fact; finally the boxed gold answer.
std::unique_ptr<rollout::PolicyBackend> oracle_policy(
    const SyntheticEpisode& episode);

enum class FlawKind { SkipRefine, StrayText, OverRetrieve, WrongAnswer };

struct Flaw {
    FlawKind kind;
    int retrievals = 0;   // OverRetrieve: total retrieval rounds to issue
};

// Oracle behavior with exactly the named flaw injected.
std::unique_ptr<rollout::PolicyBackend> perturbed_policy(
    const SyntheticEpisode& episode, const Flaw& flaw);

// Episode file: JSONL {id, question, gold, hop_facts:[{subject,relation,
// object}], gold_doc_ids:[...]}.
std::vector<SyntheticEpisode> read_episodes(const std::string& path);
void write_episodes(const std::string& path,
                    const std::vector<SyntheticEpisode>& episodes);

}   // namespace srr::synth
