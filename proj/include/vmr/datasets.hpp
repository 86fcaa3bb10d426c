#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "vmr/synthetic.hpp"
#include "vmr/types.hpp"

namespace vmr {

struct Dataset {
    std::map<std::string, VideoRecord> videos;
    std::vector<QueryRecord> queries;

    const VideoRecord& video_for(const QueryRecord& query) const;
};

enum class ParseMode { Strict, Lenient };

// Charades-STA annotation lines: "video_id start end##query".
// Durations are not in the file; each video stub gets the max gt end.
// qids are assigned deterministically as "<video_id>#<k>".
Dataset load_charades_sta(const std::filesystem::path& path,
                          ParseMode mode = ParseMode::Strict, double fps = 1.0);
std::string serialize_charades_sta(const Dataset& dataset);

// QVHighlights JSONL: one object per line with qid, query, vid,
// duration, relevant_windows, saliency_scores.
Dataset load_qvhighlights(const std::filesystem::path& path,
                          ParseMode mode = ParseMode::Strict, double fps = 0.5);
std::string serialize_qvhighlights(const Dataset& dataset);

// ActivityNet-Captions JSON: map video_id -> {duration, timestamps,
// sentences}.
Dataset load_activitynet(const std::filesystem::path& path,
                         ParseMode mode = ParseMode::Strict, double fps = 1.0);
std::string serialize_activitynet(const Dataset& dataset);

// Replaces stub frame manifests with real files from
// <frames_root>/<video_id>/<index>.jpg, ordered by index.
void attach_frames(Dataset& dataset, const std::filesystem::path& frames_root);

struct SyntheticSpec {
    std::uint64_t seed = 1;
    std::size_t n_videos = 50;
    double min_duration_s = 60.0;
    double max_duration_s = 120.0;
    std::size_t min_spans = 1;
    std::size_t max_spans = 2;
    double fps = 1.0;
};

// Seeded synthetic dataset plus the oracle plan the synthetic backend
// consumes. Planted spans sit on whole seconds, are at least 10 s long,
// and are separated by at least 8 s.
std::pair<Dataset, SyntheticPlan> generate_synthetic(const SyntheticSpec& spec);

// Own JSONL schema for synthetic datasets (one query per line).
std::string serialize_synthetic(const Dataset& dataset);
Dataset load_synthetic(const std::filesystem::path& path);

}  // namespace vmr
