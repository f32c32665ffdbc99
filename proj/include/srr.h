/* srr: search-refine-reason rollout engine.
 *
 * C interface over the C++ core. Conventions:
 *   - Every fallible call returns srr_status; outputs are written through
 *     out-parameters only on SRR_OK.
 *   - Strings returned through char** are malloc'd; release them with
 *     srr_string_free. Structured results are JSON text.
 *   - srr_last_error() describes the most recent failure on the calling
 *     thread.
 *   - Handles (srr_index, srr_policy) are opaque; free them with their
 *     matching *_free call. NULL is always safe to free.
 */

#ifndef SRR_H
#define SRR_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum srr_status {
    SRR_OK = 0,
    SRR_ERR_INVALID_ARGUMENT = 1,
    SRR_ERR_PARSE = 2,
    SRR_ERR_IO = 3,
    SRR_ERR_HTTP = 4,
    SRR_ERR_INTERNAL = 5
} srr_status;

const char* srr_version(void);

/* Message for the last failing call on this thread; never NULL. */
const char* srr_last_error(void);

void srr_string_free(char* s);

/* ---- answer matching ------------------------------------------------- */

/* Normalized tokens joined with single spaces. */
srr_status srr_normalize(const char* text, char** out_tokens);

srr_status srr_token_f1(const char* predicted, const char* gold, double* out_f1);

srr_status srr_exact_match(const char* predicted, const char* const* golds,
                           size_t gold_count, int* out_em);

srr_status srr_contains_answer(const char* haystack, const char* gold,
                               int* out_contains);

/* ---- tagged protocol -------------------------------------------------- */

/* Raw generation text -> {"segments":[{kind,text,origin}]} or
 * {"error":{"kind","offset","detail"},"segments":[...prefix...]}. */
srr_status srr_parse_segments(const char* raw, char** out_json);

/* Trajectory JSON (one JSONL record) -> {"valid":bool,"violation":string?}. */
srr_status srr_validate_trajectory(const char* trajectory_json, int c_max,
                                   char** out_verdict_json);

/* Content of the first balanced \boxed{...}; fails with SRR_ERR_PARSE when
 * absent or unbalanced. */
srr_status srr_extract_boxed(const char* answer_text, char** out_answer);

/* ---- reward ------------------------------------------------------------ */

/* reward_config_json: {"beta_base",...} (NULL or "{}" for defaults).
 * Output: {"f_indicator","d_indicator","r_indicator","f1","r_count","total"}. */
srr_status srr_compute_reward(const char* trajectory_json, const char* gold,
                              const char* reward_config_json,
                              char** out_breakdown_json);

/* ---- retrieval --------------------------------------------------------- */

typedef struct srr_index srr_index;

srr_status srr_index_build(const char* corpus_jsonl_path, srr_index** out_index);
srr_status srr_index_save(const srr_index* index, const char* dir);
srr_status srr_index_load(const char* dir, srr_index** out_index);
srr_status srr_index_doc_count(const srr_index* index, size_t* out_count);

/* Top-k hits as {"hits":[{"id","title","text","score"}]}. */
srr_status srr_index_search(const srr_index* index, const char* query, int k,
                            char** out_hits_json);
void srr_index_free(srr_index* index);

/* ---- policies ----------------------------------------------------------- */

typedef struct srr_policy srr_policy;

/* spec: "scripted:<name>" with name in {oracle, wrong_answer, skip_refine,
 * stray_text, over_retrieve:<n>, always_query, direct_answer}, or
 * "http:<url>". Scripted episode policies need episodes_jsonl_path; pass
 * NULL otherwise. */
srr_status srr_policy_open(const char* spec, const char* episodes_jsonl_path,
                           srr_policy** out_policy);
void srr_policy_free(srr_policy* policy);

/* ---- rollouts ------------------------------------------------------------ */

/* config_json: full engine config (NULL or "{}" for defaults). index may be
 * NULL when the config selects the remote search backend. Returns one
 * trajectory JSON record. */
srr_status srr_rollout_question(const char* question, srr_policy* policy,
                                const srr_index* index, const char* config_json,
                                char** out_trajectory_json);

/* Rolls out a whole dataset; writes trajectories JSONL to out_path and
 * returns the run manifest JSON. search_endpoint overrides the config's
 * retrieval backend when non-NULL. */
srr_status srr_rollout_dataset(const char* dataset_path, srr_policy* policy,
                               const srr_index* index,
                               const char* search_endpoint,
                               const char* config_json, const char* out_path,
                               char** out_manifest_json);

/* ---- synthetic environment ----------------------------------------------- */

/* Writes corpus.jsonl, dataset.jsonl, and episodes.jsonl under out_dir.
 * episode_count > 1 generates seeds seed..seed+count-1 with id-prefixed
 * document ids. */
srr_status srr_synth_generate(int hops, int entities_per_hop, int distractors,
                              int doc_padding_tokens, uint64_t seed,
                              int episode_count, const char* out_dir);

/* ---- policy-optimization math --------------------------------------------- */

/* out_advantages must hold count doubles. use_sample_std: 0 = population. */
srr_status srr_standardize_advantages(const double* rewards, size_t count,
                                      double std_floor, int use_sample_std,
                                      double* out_advantages);

/* Audits a scored-sequence batch file; returns objective/KL/advantage
 * statistics as JSON. */
srr_status srr_grpo_check(const char* batch_jsonl_path, double epsilon,
                          double beta, char** out_report_json);

/* ---- evaluation ------------------------------------------------------------ */

/* Per-item reward rows (JSONL text). reward_config_json as in
 * srr_compute_reward. */
srr_status srr_score_trajectories(const char* trajectories_path,
                                  const char* dataset_path,
                                  const char* reward_config_json,
                                  char** out_rows_jsonl);

/* Run-level report; as_table selects the text table over JSON. */
srr_status srr_evaluate(const char* trajectories_path, const char* dataset_path,
                        const char* reward_config_json, int as_table,
                        char** out_report);

#ifdef __cplusplus
}
#endif

#endif /* SRR_H */
