#include "srr.h"

#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "config.hpp"
#include "grpo.hpp"
#include "harness.hpp"
#include "matching.hpp"
#include "policy.hpp"
#include "protocol.hpp"
#include "retrieval.hpp"
#include "reward.hpp"
#include "rollout.hpp"
#include "synthenv.hpp"

struct srr_index {
    srr::retrieval::Index index;
};

struct srr_policy {
    std::unique_ptr<srr::harness::PolicyProvider> provider;
};

namespace {

thread_local std::string g_last_error;

char* dup_string(const std::string& text) {
    char* out = static_cast<char*>(std::malloc(text.size() + 1));
    if (out == nullptr) return nullptr;
    std::memcpy(out, text.c_str(), text.size() + 1);
    return out;
}

srr_status fail(srr_status code, std::string message) {
    g_last_error = std::move(message);
    return code;
}

srr_status classify(const std::exception& error) {
    if (dynamic_cast<const std::invalid_argument*>(&error) != nullptr) {
        return SRR_ERR_INVALID_ARGUMENT;
    }
    if (dynamic_cast<const srr::rollout::PolicyError*>(&error) != nullptr) {
        return SRR_ERR_HTTP;
    }
    std::string what = error.what();
    if (what.rfind("cannot open", 0) == 0 || what.rfind("cannot write", 0) == 0) {
        return SRR_ERR_IO;
    }
    return SRR_ERR_PARSE;
}

template <typename Fn>
srr_status guarded(Fn&& fn) {
    try {
        return fn();
    } catch (const std::exception& error) {
        return fail(classify(error), error.what());
    } catch (...) {
        return fail(SRR_ERR_INTERNAL, "unknown failure");
    }
}

srr_status require(bool ok, const char* what) {
    return ok ? SRR_OK : fail(SRR_ERR_INVALID_ARGUMENT,
                              std::string("null or invalid argument: ") + what);
}

srr_status emit(char** out, const std::string& text) {
    char* copy = dup_string(text);
    if (copy == nullptr) return fail(SRR_ERR_INTERNAL, "allocation failed");
    *out = copy;
    return SRR_OK;
}

srr::reward::RewardConfig reward_config_or_default(const char* json_text) {
    if (json_text == nullptr || json_text[0] == '\0') return {};
    return srr::config::reward_from_json(json_text);
}

srr::config::EngineConfig engine_config_or_default(const char* json_text) {
    srr::config::EngineConfig cfg;
    if (json_text != nullptr && json_text[0] != '\0') {
        cfg = srr::config::from_json(json_text);
    }
    srr::config::apply_env_overrides(cfg);
    return cfg;
}

std::unique_ptr<srr::retrieval::Retriever> make_retriever(
    const srr_index* index, const srr::config::EngineConfig& cfg) {
    const srr::retrieval::RetrievalConfig& rc = cfg.rollout.retrieval;
    if (rc.backend == srr::retrieval::Backend::Remote) {
        return std::make_unique<srr::retrieval::RemoteRetriever>(rc.endpoint,
                                                                 rc.timeout_ms);
    }
    if (index == nullptr) {
        throw std::invalid_argument("local retrieval needs an index handle");
    }
    return std::make_unique<srr::retrieval::LocalRetriever>(index->index, rc);
}

}   // namespace

extern "C" {

const char* srr_version(void) { return "0.1.0"; }

const char* srr_last_error(void) { return g_last_error.c_str(); }

void srr_string_free(char* s) { std::free(s); }

/* ---- answer matching ------------------------------------------------- */

srr_status srr_normalize(const char* text, char** out_tokens) {
    if (srr_status s = require(text != nullptr && out_tokens != nullptr, "text");
        s != SRR_OK) {
        return s;
    }
    return guarded([&] {
        return emit(out_tokens,
                    srr::matching::join_tokens(srr::matching::normalize(text)));
    });
}

srr_status srr_token_f1(const char* predicted, const char* gold, double* out_f1) {
    if (srr_status s = require(predicted != nullptr && gold != nullptr &&
                                   out_f1 != nullptr,
                               "predicted/gold");
        s != SRR_OK) {
        return s;
    }
    return guarded([&] {
        *out_f1 = srr::matching::token_f1(predicted, gold);
        return SRR_OK;
    });
}

srr_status srr_exact_match(const char* predicted, const char* const* golds,
                           size_t gold_count, int* out_em) {
    if (srr_status s = require(predicted != nullptr && golds != nullptr &&
                                   out_em != nullptr && gold_count > 0,
                               "predicted/golds");
        s != SRR_OK) {
        return s;
    }
    return guarded([&] {
        std::vector<std::string> gold_set;
        for (size_t i = 0; i < gold_count; ++i) {
            if (golds[i] == nullptr) {
                throw std::invalid_argument("null gold answer");
            }
            gold_set.emplace_back(golds[i]);
        }
        *out_em = srr::matching::exact_match(predicted, gold_set);
        return SRR_OK;
    });
}

srr_status srr_contains_answer(const char* haystack, const char* gold,
                               int* out_contains) {
    if (srr_status s = require(haystack != nullptr && gold != nullptr &&
                                   out_contains != nullptr,
                               "haystack/gold");
        s != SRR_OK) {
        return s;
    }
    return guarded([&] {
        *out_contains = srr::matching::contains_answer(haystack, gold) ? 1 : 0;
        return SRR_OK;
    });
}

/* ---- tagged protocol -------------------------------------------------- */

srr_status srr_parse_segments(const char* raw, char** out_json) {
    if (srr_status s = require(raw != nullptr && out_json != nullptr, "raw");
        s != SRR_OK) {
        return s;
    }
    return guarded([&] {
        srr::protocol::ParseResult parsed = srr::protocol::parse_trajectory(raw);
        nlohmann::ordered_json doc;
        doc["segments"] = nlohmann::ordered_json::array();
        for (const srr::protocol::Segment& segment : parsed.segments) {
            doc["segments"].push_back(
                {{"kind", srr::protocol::tag_name(segment.kind)},
                 {"text", segment.text},
                 {"origin",
                  segment.origin == srr::protocol::Origin::EngineInjected
                      ? "engine"
                      : "model"}});
        }
        if (!parsed.ok()) {
            doc["error"] = {
                {"kind", srr::protocol::parse_error_name(parsed.error->kind)},
                {"offset", parsed.error->offset},
                {"detail", parsed.error->detail}};
        }
        return emit(out_json, doc.dump());
    });
}

srr_status srr_validate_trajectory(const char* trajectory_json, int c_max,
                                   char** out_verdict_json) {
    if (srr_status s = require(trajectory_json != nullptr &&
                                   out_verdict_json != nullptr,
                               "trajectory_json");
        s != SRR_OK) {
        return s;
    }
    return guarded([&] {
        srr::protocol::Trajectory traj =
            srr::protocol::trajectory_from_json(trajectory_json);
        int limit = c_max > 0 ? c_max : srr::protocol::kDefaultMaxRetrievals;
        srr::protocol::FormatVerdict verdict =
            srr::protocol::validate_format(traj, limit);
        nlohmann::ordered_json doc;
        doc["valid"] = verdict.valid;
        if (verdict.violation.has_value()) {
            doc["violation"] = *verdict.violation;
        }
        return emit(out_verdict_json, doc.dump());
    });
}

srr_status srr_extract_boxed(const char* answer_text, char** out_answer) {
    if (srr_status s = require(answer_text != nullptr && out_answer != nullptr,
                               "answer_text");
        s != SRR_OK) {
        return s;
    }
    srr::protocol::BoxedAnswer boxed =
        srr::protocol::extract_boxed_answer(answer_text);
    if (!boxed.ok()) {
        return fail(SRR_ERR_PARSE,
                    boxed.status == srr::protocol::BoxedAnswer::Status::NoBox
                        ? "no boxed value in answer"
                        : "unbalanced braces in boxed value");
    }
    return emit(out_answer, boxed.value);
}

/* ---- reward ------------------------------------------------------------ */

srr_status srr_compute_reward(const char* trajectory_json, const char* gold,
                              const char* reward_config_json,
                              char** out_breakdown_json) {
    if (srr_status s = require(trajectory_json != nullptr && gold != nullptr &&
                                   out_breakdown_json != nullptr,
                               "trajectory_json/gold");
        s != SRR_OK) {
        return s;
    }
    return guarded([&] {
        srr::protocol::Trajectory traj =
            srr::protocol::trajectory_from_json(trajectory_json);
        srr::reward::RewardConfig cfg = reward_config_or_default(reward_config_json);
        srr::reward::RewardBreakdown breakdown =
            srr::reward::compute_reward(traj, gold, cfg);
        nlohmann::ordered_json doc;
        doc["f_indicator"] = breakdown.f_indicator;
        doc["d_indicator"] = breakdown.d_indicator;
        doc["r_indicator"] = breakdown.r_indicator;
        doc["f1"] = breakdown.f1;
        doc["r_count"] = breakdown.r_count;
        doc["total"] = breakdown.total;
        return emit(out_breakdown_json, doc.dump());
    });
}

/* ---- retrieval --------------------------------------------------------- */

srr_status srr_index_build(const char* corpus_jsonl_path, srr_index** out_index) {
    if (srr_status s = require(corpus_jsonl_path != nullptr && out_index != nullptr,
                               "corpus_jsonl_path");
        s != SRR_OK) {
        return s;
    }
    return guarded([&] {
        std::vector<srr::retrieval::Document> corpus =
            srr::retrieval::read_corpus(corpus_jsonl_path);
        auto handle = std::make_unique<srr_index>();
        handle->index = srr::retrieval::build_index(corpus);
        *out_index = handle.release();
        return SRR_OK;
    });
}

srr_status srr_index_save(const srr_index* index, const char* dir) {
    if (srr_status s = require(index != nullptr && dir != nullptr, "index/dir");
        s != SRR_OK) {
        return s;
    }
    return guarded([&] {
        srr::retrieval::save_index(index->index, dir);
        return SRR_OK;
    });
}

srr_status srr_index_load(const char* dir, srr_index** out_index) {
    if (srr_status s = require(dir != nullptr && out_index != nullptr, "dir");
        s != SRR_OK) {
        return s;
    }
    return guarded([&] {
        auto handle = std::make_unique<srr_index>();
        handle->index = srr::retrieval::load_index(dir);
        *out_index = handle.release();
        return SRR_OK;
    });
}

srr_status srr_index_doc_count(const srr_index* index, size_t* out_count) {
    if (srr_status s = require(index != nullptr && out_count != nullptr, "index");
        s != SRR_OK) {
        return s;
    }
    *out_count = static_cast<size_t>(index->index.doc_count());
    return SRR_OK;
}

srr_status srr_index_search(const srr_index* index, const char* query, int k,
                            char** out_hits_json) {
    if (srr_status s = require(index != nullptr && query != nullptr &&
                                   out_hits_json != nullptr && k >= 1,
                               "index/query/k");
        s != SRR_OK) {
        return s;
    }
    return guarded([&] {
        srr::retrieval::RetrievalConfig cfg;
        cfg.k = k;
        std::vector<srr::retrieval::ScoredDoc> hits =
            srr::retrieval::search_topk(index->index, query, cfg);
        nlohmann::ordered_json doc;
        doc["hits"] = nlohmann::ordered_json::array();
        for (const srr::retrieval::ScoredDoc& hit : hits) {
            doc["hits"].push_back({{"id", hit.doc.id},
                                   {"title", hit.doc.title},
                                   {"text", hit.doc.text},
                                   {"score", hit.score}});
        }
        return emit(out_hits_json, doc.dump());
    });
}

void srr_index_free(srr_index* index) { delete index; }

/* ---- policies ----------------------------------------------------------- */

srr_status srr_policy_open(const char* spec, const char* episodes_jsonl_path,
                           srr_policy** out_policy) {
    if (srr_status s = require(spec != nullptr && out_policy != nullptr, "spec");
        s != SRR_OK) {
        return s;
    }
    return guarded([&] {
        std::string text = spec;
        auto handle = std::make_unique<srr_policy>();
        if (text.rfind("scripted:", 0) == 0) {
            std::string name = text.substr(std::strlen("scripted:"));
            std::vector<srr::synth::SyntheticEpisode> episodes;
            if (episodes_jsonl_path != nullptr && episodes_jsonl_path[0] != '\0') {
                episodes = srr::synth::read_episodes(episodes_jsonl_path);
            }
            handle->provider =
                srr::harness::scripted_provider(name, std::move(episodes));
        } else if (text.rfind("http://", 0) == 0 || text.rfind("https://", 0) == 0 ||
                   text.rfind("http:", 0) == 0) {
            srr::rollout::HttpPolicyConfig cfg;
            cfg.endpoint = (text.rfind("http://", 0) == 0 ||
                            text.rfind("https://", 0) == 0)
                               ? text
                               : text.substr(std::strlen("http:"));
            if (cfg.endpoint.empty()) {
                throw std::invalid_argument("http policy spec has no URL");
            }
            handle->provider = srr::harness::http_provider(std::move(cfg));
        } else {
            throw std::invalid_argument("unknown policy spec: " + text);
        }
        *out_policy = handle.release();
        return SRR_OK;
    });
}

void srr_policy_free(srr_policy* policy) { delete policy; }

/* ---- rollouts ------------------------------------------------------------ */

srr_status srr_rollout_question(const char* question, srr_policy* policy,
                                const srr_index* index, const char* config_json,
                                char** out_trajectory_json) {
    if (srr_status s = require(question != nullptr && policy != nullptr &&
                                   out_trajectory_json != nullptr,
                               "question/policy");
        s != SRR_OK) {
        return s;
    }
    return guarded([&] {
        srr::config::EngineConfig cfg = engine_config_or_default(config_json);
        std::unique_ptr<srr::retrieval::Retriever> retriever =
            make_retriever(index, cfg);
        srr::harness::QAItem item{"", question, {}};
        std::unique_ptr<srr::rollout::PolicyBackend> backend =
            policy->provider->make(item);
        srr::rollout::RolloutResult result = srr::rollout::run_rollout(
            question, *backend, *retriever, cfg.rollout);
        return emit(out_trajectory_json,
                    srr::protocol::trajectory_to_json(result.trajectory));
    });
}

srr_status srr_rollout_dataset(const char* dataset_path, srr_policy* policy,
                               const srr_index* index,
                               const char* search_endpoint,
                               const char* config_json, const char* out_path,
                               char** out_manifest_json) {
    if (srr_status s = require(dataset_path != nullptr && policy != nullptr &&
                                   out_path != nullptr &&
                                   out_manifest_json != nullptr,
                               "dataset_path/policy/out_path");
        s != SRR_OK) {
        return s;
    }
    return guarded([&] {
        srr::config::EngineConfig cfg = engine_config_or_default(config_json);
        if (search_endpoint != nullptr && search_endpoint[0] != '\0') {
            cfg.rollout.retrieval.backend = srr::retrieval::Backend::Remote;
            cfg.rollout.retrieval.endpoint = search_endpoint;
        }
        std::vector<srr::harness::QAItem> items =
            srr::harness::load_dataset(dataset_path);
        std::unique_ptr<srr::retrieval::Retriever> retriever =
            make_retriever(index, cfg);
        std::string checksum =
            cfg.rollout.retrieval.backend == srr::retrieval::Backend::Local
                ? srr::retrieval::corpus_checksum(index->index.docs())
                : "";
        srr::harness::RunOutcome outcome = srr::harness::run_dataset(
            items, *policy->provider, *retriever, cfg.rollout, cfg.reward,
            checksum);
        srr::protocol::write_trajectories(out_path, outcome.trajectories);
        return emit(out_manifest_json, outcome.manifest_json);
    });
}

/* ---- synthetic environment ----------------------------------------------- */

srr_status srr_synth_generate(int hops, int entities_per_hop, int distractors,
                              int doc_padding_tokens, uint64_t seed,
                              int episode_count, const char* out_dir) {
    if (srr_status s = require(out_dir != nullptr && episode_count >= 1, "out_dir");
        s != SRR_OK) {
        return s;
    }
    return guarded([&] {
        std::vector<srr::retrieval::Document> corpus;
        std::vector<srr::synth::SyntheticEpisode> episodes;

        for (int i = 0; i < episode_count; ++i) {
            srr::synth::ChainSpec spec;
            spec.hops = hops;
            spec.entities_per_hop = entities_per_hop;
            spec.distractor_docs = distractors;
            spec.doc_padding_tokens = doc_padding_tokens;
            spec.seed = seed + static_cast<uint64_t>(i);
            srr::synth::GeneratedEpisode generated =
                srr::synth::generate_episode(spec);

            if (episode_count > 1) {
                std::string prefix = generated.episode.id + "/";
                for (srr::retrieval::Document& doc : generated.corpus) {
                    doc.id = prefix + doc.id;
                }
                for (std::string& id : generated.episode.gold_doc_ids) {
                    id = prefix + id;
                }
            }
            corpus.insert(corpus.end(), generated.corpus.begin(),
                          generated.corpus.end());
            episodes.push_back(std::move(generated.episode));
        }

        std::filesystem::create_directories(out_dir);
        std::filesystem::path dir(out_dir);
        srr::retrieval::write_corpus((dir / "corpus.jsonl").string(), corpus);
        srr::synth::write_episodes((dir / "episodes.jsonl").string(), episodes);

        std::ofstream dataset(dir / "dataset.jsonl", std::ios::trunc);
        if (!dataset) {
            throw std::runtime_error("cannot write dataset file under: " +
                                     std::string(out_dir));
        }
        for (const srr::synth::SyntheticEpisode& episode : episodes) {
            nlohmann::ordered_json row;
            row["id"] = episode.id;
            row["question"] = episode.question;
            row["answers"] = nlohmann::ordered_json::array({episode.gold});
            dataset << row.dump() << '\n';
        }
        return SRR_OK;
    });
}

/* ---- policy-optimization math --------------------------------------------- */

srr_status srr_standardize_advantages(const double* rewards, size_t count,
                                      double std_floor, int use_sample_std,
                                      double* out_advantages) {
    if (srr_status s = require(rewards != nullptr && out_advantages != nullptr &&
                                   count >= 1,
                               "rewards/count");
        s != SRR_OK) {
        return s;
    }
    return guarded([&] {
        srr::grpo::GrpoConfig cfg;
        cfg.group_size = static_cast<int>(count);
        if (std_floor > 0) cfg.std_floor = std_floor;
        cfg.std_mode = use_sample_std != 0 ? srr::grpo::StdMode::Sample
                                           : srr::grpo::StdMode::Population;
        std::vector<double> input(rewards, rewards + count);
        std::vector<double> advantages =
            srr::grpo::standardize_advantages(input, cfg);
        std::copy(advantages.begin(), advantages.end(), out_advantages);
        return SRR_OK;
    });
}

srr_status srr_grpo_check(const char* batch_jsonl_path, double epsilon,
                          double beta, char** out_report_json) {
    if (srr_status s = require(batch_jsonl_path != nullptr &&
                                   out_report_json != nullptr,
                               "batch_jsonl_path");
        s != SRR_OK) {
        return s;
    }
    return guarded([&] {
        std::vector<srr::grpo::ScoredSequence> batch =
            srr::grpo::read_batch(batch_jsonl_path);
        srr::grpo::GrpoConfig cfg;
        cfg.epsilon_clip = epsilon;
        cfg.beta_kl = beta;
        srr::grpo::BatchCheck check = srr::grpo::check_batch(batch, cfg);
        return emit(out_report_json, srr::grpo::batch_check_to_json(check, cfg));
    });
}

/* ---- evaluation ------------------------------------------------------------ */

srr_status srr_score_trajectories(const char* trajectories_path,
                                  const char* dataset_path,
                                  const char* reward_config_json,
                                  char** out_rows_jsonl) {
    if (srr_status s = require(trajectories_path != nullptr &&
                                   dataset_path != nullptr &&
                                   out_rows_jsonl != nullptr,
                               "trajectories_path/dataset_path");
        s != SRR_OK) {
        return s;
    }
    return guarded([&] {
        std::vector<srr::protocol::Trajectory> trajectories =
            srr::protocol::read_trajectories(trajectories_path);
        std::vector<srr::harness::QAItem> items =
            srr::harness::load_dataset(dataset_path);
        srr::reward::RewardConfig cfg = reward_config_or_default(reward_config_json);
        return emit(out_rows_jsonl,
                    srr::harness::breakdown_rows(trajectories, items, cfg));
    });
}

srr_status srr_evaluate(const char* trajectories_path, const char* dataset_path,
                        const char* reward_config_json, int as_table,
                        char** out_report) {
    if (srr_status s = require(trajectories_path != nullptr &&
                                   dataset_path != nullptr &&
                                   out_report != nullptr,
                               "trajectories_path/dataset_path");
        s != SRR_OK) {
        return s;
    }
    return guarded([&] {
        std::vector<srr::protocol::Trajectory> trajectories =
            srr::protocol::read_trajectories(trajectories_path);
        std::vector<srr::harness::QAItem> items =
            srr::harness::load_dataset(dataset_path);
        srr::reward::RewardConfig cfg = reward_config_or_default(reward_config_json);
        srr::harness::RunReport report =
            srr::harness::evaluate_run(trajectories, items, cfg);
        return emit(out_report,
                    srr::harness::emit_report(report,
                                              as_table != 0
                                                  ? srr::harness::ReportFormat::Table
                                                  : srr::harness::ReportFormat::Json));
    });
}

}   // extern "C"
