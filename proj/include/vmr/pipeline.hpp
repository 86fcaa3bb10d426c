#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "vmr/backends.hpp"
#include "vmr/cache.hpp"
#include "vmr/captioner.hpp"
#include "vmr/datasets.hpp"
#include "vmr/http_backend.hpp"
#include "vmr/metrics.hpp"
#include "vmr/synthetic.hpp"
#include "vmr/types.hpp"

namespace vmr {

// Which model servers (or the synthetic oracle) back the run.
struct BackendConfig {
    enum class Kind { Synthetic, Http };

    Kind kind = Kind::Synthetic;
    std::filesystem::path plan_path;  // synthetic: oracle plan JSON
    std::size_t synthetic_dim = 256;
    HttpEndpoint debias_endpoint;
    HttpEndpoint caption_endpoint;
    HttpEndpoint video_endpoint;
    HttpEndpoint embed_endpoint;
    std::filesystem::path cache_dir;  // empty disables caching
    int max_in_flight = 8;
    bool load_frame_files = false;  // read frame images from disk (http runs)
};

// Instantiated backends for one run; counters reset per instantiation.
// The three chat stages may share one object (synthetic) or speak to
// three different servers (http).
struct BackendSet {
    std::shared_ptr<ChatBackend> debias_chat;
    std::shared_ptr<ChatBackend> frame_chat;
    std::shared_ptr<ChatBackend> span_chat;
    std::shared_ptr<EmbedBackend> embedder;
    std::shared_ptr<RequestGate> gate;
    FrameLoader loader;
    std::string debias_model, frame_model, span_model;

    std::vector<std::shared_ptr<CachingChatBackend>> chat_caches;
    std::shared_ptr<CachingEmbedBackend> embed_cache;  // null when uncached

    // Requests that actually reached the upstream backend this run.
    std::uint64_t upstream_calls() const;
};

BackendSet make_backends(const BackendConfig& config);

// Ranked predictions and optional saliency for one query.
struct QueryResult {
    std::string qid;
    std::vector<ScoredSpan> predictions;
    std::vector<double> saliency;
    std::vector<CandidateSpan> candidates;
};

// Full pipeline for one query: rewrites -> frame captions -> frame
// scores -> candidates -> span captions -> selection.
QueryResult run_query(const QueryRecord& query, const VideoRecord& video,
                      const DebiasedQuerySet& rewrites, const PipelineConfig& config,
                      BackendSet& backends, bool with_saliency);

struct StageStats {
    std::size_t processed = 0;
    std::size_t skipped = 0;
    std::vector<std::string> failed_qids;
    std::uint64_t upstream_calls = 0;
};

// Writes one DebiasedQuerySet per query as JSONL; qids already present
// in the output file are skipped (resume).
StageStats run_debias(const Dataset& dataset, const PipelineConfig& config,
                      BackendSet& backends, const std::filesystem::path& out_path);

std::map<std::string, DebiasedQuerySet> load_debias_file(
    const std::filesystem::path& path);

struct RetrieveOptions {
    std::filesystem::path predictions_path;
    std::filesystem::path saliency_path;      // empty: no saliency output
    std::filesystem::path debias_path;        // empty: debias inline
    std::filesystem::path manifest_path;      // empty: derived from predictions
};

StageStats run_retrieve(const Dataset& dataset, const PipelineConfig& config,
                        BackendSet& backends, const RetrieveOptions& options);

// Predictions file contents keyed by qid.
std::map<std::string, std::vector<Prediction>> load_predictions(
    const std::filesystem::path& path);
std::map<std::string, std::vector<double>> load_saliency(
    const std::filesystem::path& path);

struct EvaluateOptions {
    std::vector<double> r1_thresholds = {0.3, 0.5, 0.7};
    std::filesystem::path debias_path;   // enables category breakdown
    std::filesystem::path saliency_path; // enables VHD metrics
};

EvalReport run_evaluate(const std::filesystem::path& predictions_path,
                        const Dataset& dataset, const EvaluateOptions& options);

// One grid axis per hyperparameter; empty axis means "base value only".
struct SweepGrid {
    std::vector<int> n_d;
    std::vector<int> kappa;
    std::vector<int> tau;
    std::vector<double> lambda;
    std::vector<double> sigma;
};

struct SweepRow {
    PipelineConfig config;
    EvalReport report;
};

std::vector<SweepRow> run_sweep(const Dataset& dataset, const PipelineConfig& base,
                                const SweepGrid& grid, const BackendConfig& backend_config,
                                const std::filesystem::path& work_dir,
                                const EvaluateOptions& eval_options);

// Flat key/value config file (TOML-style "key = value" lines, '#'
// comments). Unknown keys are rejected.
struct CliConfig {
    PipelineConfig pipeline;
    BackendConfig backends;
    std::string dataset_format = "synthetic";  // synthetic|charades|qvhighlights|activitynet
    double dataset_fps = 0.0;                  // 0: format default
    bool lenient_parse = false;
};

CliConfig parse_config_file(const std::filesystem::path& path);
void apply_config_entry(CliConfig& config, const std::string& key,
                        const std::string& value);

Dataset load_dataset(const CliConfig& config, const std::filesystem::path& path);

// Provenance manifest written next to every output file.
void write_manifest(const std::filesystem::path& path, const PipelineConfig& config,
                    const BackendSet& backends, const Dataset& dataset);

}  // namespace vmr
