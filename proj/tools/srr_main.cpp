// Command-line front end. Everything goes through the C API in srr.h; this
// translation unit never touches the C++ core directly.

#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <memory>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "srr.h"

namespace {

int die(const char* what) {
    std::fprintf(stderr, "srr: %s: %s\n", what, srr_last_error());
    return 1;
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw CLI::ValidationError("cannot open file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

struct IndexHandle {
    srr_index* ptr = nullptr;
    ~IndexHandle() { srr_index_free(ptr); }
};

struct PolicyHandle {
    srr_policy* ptr = nullptr;
    ~PolicyHandle() { srr_policy_free(ptr); }
};

struct OwnedString {
    char* ptr = nullptr;
    ~OwnedString() { srr_string_free(ptr); }
};

int cmd_index(const std::string& corpus, const std::string& out) {
    IndexHandle index;
    if (srr_index_build(corpus.c_str(), &index.ptr) != SRR_OK) {
        return die("index build failed");
    }
    if (srr_index_save(index.ptr, out.c_str()) != SRR_OK) {
        return die("index save failed");
    }
    size_t count = 0;
    srr_index_doc_count(index.ptr, &count);
    std::printf("indexed %zu documents into %s\n", count, out.c_str());
    return 0;
}

int cmd_rollout(const std::string& dataset, const std::string& index_dir,
                const std::string& search_endpoint, const std::string& policy_spec,
                const std::string& episodes, const std::string& config_path,
                const std::string& out) {
    std::string config_json;
    if (!config_path.empty()) config_json = slurp(config_path);

    std::string spec = policy_spec;
    if (spec.empty()) {
        const char* env = std::getenv("SRR_POLICY_ENDPOINT");
        if (env != nullptr && env[0] != '\0') spec = std::string("http:") + env;
    }
    if (spec.empty()) {
        std::fprintf(stderr,
                     "srr: no policy given (use --policy or SRR_POLICY_ENDPOINT)\n");
        return 1;
    }

    PolicyHandle policy;
    if (srr_policy_open(spec.c_str(), episodes.empty() ? nullptr : episodes.c_str(),
                        &policy.ptr) != SRR_OK) {
        return die("policy open failed");
    }

    IndexHandle index;
    if (!index_dir.empty()) {
        if (srr_index_load(index_dir.c_str(), &index.ptr) != SRR_OK) {
            return die("index load failed");
        }
    }

    OwnedString manifest;
    if (srr_rollout_dataset(dataset.c_str(), policy.ptr, index.ptr,
                            search_endpoint.empty() ? nullptr
                                                    : search_endpoint.c_str(),
                            config_json.empty() ? nullptr : config_json.c_str(),
                            out.c_str(), &manifest.ptr) != SRR_OK) {
        return die("rollout failed");
    }
    std::printf("%s\n", manifest.ptr);
    return 0;
}

int cmd_score(const std::string& traj, const std::string& dataset, int c_start) {
    std::string reward_cfg;
    if (c_start >= 0) {
        reward_cfg = "{\"c_start\": " + std::to_string(c_start) + "}";
    }
    OwnedString rows;
    if (srr_score_trajectories(traj.c_str(), dataset.c_str(),
                               reward_cfg.empty() ? nullptr : reward_cfg.c_str(),
                               &rows.ptr) != SRR_OK) {
        return die("score failed");
    }
    std::fputs(rows.ptr, stdout);
    return 0;
}

int cmd_eval(const std::string& traj, const std::string& dataset,
             const std::string& format) {
    OwnedString report;
    if (srr_evaluate(traj.c_str(), dataset.c_str(), nullptr,
                     format == "table" ? 1 : 0, &report.ptr) != SRR_OK) {
        return die("eval failed");
    }
    std::printf("%s\n", report.ptr);
    return 0;
}

int cmd_grpo_check(const std::string& batch, double epsilon, double beta) {
    OwnedString report;
    if (srr_grpo_check(batch.c_str(), epsilon, beta, &report.ptr) != SRR_OK) {
        return die("grpo check failed");
    }
    std::printf("%s\n", report.ptr);
    return 0;
}

int cmd_synth(int hops, int entities, int distractors, int padding,
              std::uint64_t seed, int count, const std::string& out) {
    if (srr_synth_generate(hops, entities, distractors, padding, seed, count,
                           out.c_str()) != SRR_OK) {
        return die("synth failed");
    }
    std::printf("wrote %d episode(s) under %s\n", count, out.c_str());
    return 0;
}

}   // namespace

int main(int argc, char** argv) {
    CLI::App app{"search-refine-reason rollout engine"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(srr_version()));

    auto* index_cmd = app.add_subcommand("index", "build a BM25 index from a corpus");
    std::string idx_corpus, idx_out;
    index_cmd->add_option("--corpus", idx_corpus, "corpus JSONL path")->required();
    index_cmd->add_option("--out", idx_out, "output index directory")->required();

    auto* rollout_cmd = app.add_subcommand("rollout", "run a policy over a dataset");
    std::string ro_dataset, ro_index, ro_endpoint, ro_policy, ro_episodes,
        ro_config, ro_out;
    rollout_cmd->add_option("--dataset", ro_dataset, "dataset JSONL path")->required();
    rollout_cmd->add_option("--index", ro_index, "local index directory");
    rollout_cmd->add_option("--search-endpoint", ro_endpoint,
                            "remote search service URL");
    rollout_cmd->add_option("--policy", ro_policy,
                            "scripted:<name> or http:<url>");
    rollout_cmd->add_option("--episodes", ro_episodes,
                            "episode JSONL for scripted policies");
    rollout_cmd->add_option("--config", ro_config, "engine config JSON path");
    rollout_cmd->add_option("--out", ro_out, "trajectory JSONL output path")->required();

    auto* score_cmd = app.add_subcommand("score", "per-item reward breakdown");
    std::string sc_traj, sc_dataset;
    int sc_c_start = -1;
    score_cmd->add_option("--traj", sc_traj, "trajectory JSONL path")->required();
    score_cmd->add_option("--dataset", sc_dataset, "dataset JSONL path")->required();
    score_cmd->add_option("--c-start", sc_c_start,
                          "retrieval count where the efficiency bonus starts decaying");

    auto* eval_cmd = app.add_subcommand("eval", "EM/F1/efficiency report");
    std::string ev_traj, ev_dataset, ev_format = "json";
    eval_cmd->add_option("--traj", ev_traj, "trajectory JSONL path")->required();
    eval_cmd->add_option("--dataset", ev_dataset, "dataset JSONL path")->required();
    eval_cmd->add_option("--format", ev_format, "json or table")
        ->check(CLI::IsMember({"json", "table"}));

    auto* grpo_cmd = app.add_subcommand("grpo-check", "audit a scored batch file");
    std::string gc_batch;
    double gc_epsilon = 0.2, gc_beta = 0.0;
    grpo_cmd->add_option("--batch", gc_batch, "batch JSONL path")->required();
    grpo_cmd->add_option("--epsilon", gc_epsilon, "clip range");
    grpo_cmd->add_option("--beta", gc_beta, "KL penalty weight");

    auto* synth_cmd = app.add_subcommand("synth", "generate a synthetic episode set");
    int sy_hops = 2, sy_entities = 4, sy_distractors = 20, sy_padding = 30,
        sy_count = 1;
    std::uint64_t sy_seed = 0;
    std::string sy_out;
    synth_cmd->add_option("--hops", sy_hops, "facts in the chain");
    synth_cmd->add_option("--entities", sy_entities, "decoy entities per hop");
    synth_cmd->add_option("--distractors", sy_distractors, "distractor documents");
    synth_cmd->add_option("--padding", sy_padding, "filler tokens per document");
    synth_cmd->add_option("--seed", sy_seed, "RNG seed");
    synth_cmd->add_option("--count", sy_count, "episodes to generate");
    synth_cmd->add_option("--out", sy_out, "output directory")->required();

    CLI11_PARSE(app, argc, argv);

    if (index_cmd->parsed()) return cmd_index(idx_corpus, idx_out);
    if (rollout_cmd->parsed()) {
        return cmd_rollout(ro_dataset, ro_index, ro_endpoint, ro_policy,
                           ro_episodes, ro_config, ro_out);
    }
    if (score_cmd->parsed()) return cmd_score(sc_traj, sc_dataset, sc_c_start);
    if (eval_cmd->parsed()) return cmd_eval(ev_traj, ev_dataset, ev_format);
    if (grpo_cmd->parsed()) return cmd_grpo_check(gc_batch, gc_epsilon, gc_beta);
    if (synth_cmd->parsed()) {
        return cmd_synth(sy_hops, sy_entities, sy_distractors, sy_padding, sy_seed,
                         sy_count, sy_out);
    }
    return 1;
}
