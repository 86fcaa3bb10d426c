#include "vmr/datasets.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>

#include <json.hpp>

namespace vmr {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

std::string format_seconds(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.10g", v);
    return buf;
}

std::size_t stub_frame_count(double duration_s, double fps) {
    auto n = static_cast<std::size_t>(std::ceil(duration_s * fps));
    return std::max<std::size_t>(n, 1);
}

std::vector<std::string> stub_frames(const std::string& vid, std::size_t count) {
    std::vector<std::string> frames;
    frames.reserve(count);
    for (std::size_t j = 0; j < count; ++j) {
        frames.push_back(vid + "/" + std::to_string(j));
    }
    return frames;
}

}  // namespace

const VideoRecord& Dataset::video_for(const QueryRecord& query) const {
    auto it = videos.find(query.video_id());
    if (it == videos.end()) {
        throw ValidationError("dataset has no video '" + query.video_id() + "' for qid '" +
                              query.qid() + "'");
    }
    return it->second;
}

Dataset load_charades_sta(const fs::path& path, ParseMode mode, double fps) {
    std::istringstream lines(read_file(path));

    struct Row {
        std::string vid;
        double start, end;
        std::string query;
    };
    std::vector<Row> rows;
    std::map<std::string, double> max_end;

    std::string line;
    long lineno = 0;
    while (std::getline(lines, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        auto report = [&](const std::string& why) {
            if (mode == ParseMode::Strict) throw ParseError(why, lineno);
            std::fprintf(stderr, "charades-sta: skipping line %ld: %s\n", lineno,
                         why.c_str());
        };
        auto sep = line.find("##");
        if (sep == std::string::npos) {
            report("missing '##' separator");
            continue;
        }
        std::istringstream head(line.substr(0, sep));
        Row row;
        if (!(head >> row.vid >> row.start >> row.end)) {
            report("expected 'video_id start end' before '##'");
            continue;
        }
        row.query = line.substr(sep + 2);
        if (row.query.empty()) {
            report("empty query text");
            continue;
        }
        if (!(row.start >= 0.0 && row.start < row.end)) {
            report("invalid span [" + format_seconds(row.start) + ", " +
                   format_seconds(row.end) + "]");
            continue;
        }
        max_end[row.vid] = std::max(max_end[row.vid], row.end);
        rows.push_back(std::move(row));
    }

    Dataset out;
    std::map<std::string, std::size_t> per_video_counter;
    for (const auto& row : rows) {
        double duration = max_end[row.vid];
        if (!out.videos.count(row.vid)) {
            out.videos.emplace(
                row.vid, VideoRecord(row.vid, duration, fps,
                                     stub_frames(row.vid,
                                                 stub_frame_count(duration, fps))));
        }
        auto k = per_video_counter[row.vid]++;
        out.queries.emplace_back(row.vid + "#" + std::to_string(k), row.vid, row.query,
                                 std::vector<TimeSpan>{{row.start, row.end}});
    }
    return out;
}

std::string serialize_charades_sta(const Dataset& dataset) {
    std::ostringstream out;
    for (const auto& q : dataset.queries) {
        const auto& span = q.gt_spans().front();
        out << q.video_id() << " " << format_seconds(span.start_s) << " "
            << format_seconds(span.end_s) << "##" << q.raw_text() << "\n";
    }
    return out.str();
}

Dataset load_qvhighlights(const fs::path& path, ParseMode mode, double fps) {
    std::istringstream lines(read_file(path));
    Dataset out;
    std::string line;
    long lineno = 0;
    while (std::getline(lines, line)) {
        ++lineno;
        if (line.empty()) continue;
        json doc = json::parse(line, nullptr, false);
        auto report = [&](const std::string& why) {
            if (mode == ParseMode::Strict) throw ParseError(why, lineno);
            std::fprintf(stderr, "qvhighlights: skipping line %ld: %s\n", lineno,
                         why.c_str());
        };
        if (doc.is_discarded()) {
            report("invalid JSON object");
            continue;
        }
        for (const char* field : {"qid", "query", "vid", "duration"}) {
            if (!doc.contains(field)) {
                // Field absence is a schema defect, fatal in both modes.
                throw ParseError(std::string("missing required field '") + field + "'",
                                 lineno);
            }
        }
        std::string qid = doc["qid"].is_string() ? doc["qid"].get<std::string>()
                                                 : std::to_string(doc["qid"].get<long>());
        std::string vid = doc["vid"].get<std::string>();
        double duration = doc["duration"].get<double>();

        std::vector<TimeSpan> spans;
        if (doc.contains("relevant_windows")) {
            for (const auto& w : doc["relevant_windows"]) {
                spans.push_back({w.at(0).get<double>(), w.at(1).get<double>()});
            }
        }
        std::vector<std::vector<int>> saliency;
        if (doc.contains("saliency_scores")) {
            saliency = doc["saliency_scores"].get<std::vector<std::vector<int>>>();
        }

        if (!out.videos.count(vid)) {
            out.videos.emplace(vid,
                               VideoRecord(vid, duration, fps,
                                           stub_frames(vid, stub_frame_count(duration, fps))));
        }
        try {
            out.queries.emplace_back(qid, vid, doc["query"].get<std::string>(),
                                     std::move(spans), std::move(saliency));
        } catch (const ValidationError& e) {
            report(e.what());
        }
    }
    return out;
}

std::string serialize_qvhighlights(const Dataset& dataset) {
    std::ostringstream out;
    for (const auto& q : dataset.queries) {
        const auto& video = dataset.video_for(q);
        json doc;
        doc["qid"] = q.qid();
        doc["query"] = q.raw_text();
        doc["vid"] = q.video_id();
        doc["duration"] = video.duration_s();
        json windows = json::array();
        for (const auto& s : q.gt_spans()) windows.push_back({s.start_s, s.end_s});
        doc["relevant_windows"] = windows;
        if (!q.gt_saliency().empty()) doc["saliency_scores"] = q.gt_saliency();
        out << doc.dump() << "\n";
    }
    return out.str();
}

Dataset load_activitynet(const fs::path& path, ParseMode mode, double fps) {
    json doc = json::parse(read_file(path), nullptr, false);
    if (doc.is_discarded() || !doc.is_object()) {
        throw ParseError("activitynet: top-level JSON object expected");
    }
    Dataset out;
    for (const auto& [vid, entry] : doc.items()) {
        auto report = [&](const std::string& why) {
            if (mode == ParseMode::Strict) {
                throw ParseError("activitynet video '" + vid + "': " + why);
            }
            std::fprintf(stderr, "activitynet: skipping video '%s': %s\n", vid.c_str(),
                         why.c_str());
        };
        if (!entry.contains("duration") || !entry.contains("timestamps") ||
            !entry.contains("sentences")) {
            report("missing duration/timestamps/sentences");
            continue;
        }
        const auto& timestamps = entry["timestamps"];
        const auto& sentences = entry["sentences"];
        if (timestamps.size() != sentences.size()) {
            report("timestamps and sentences lengths differ (" +
                   std::to_string(timestamps.size()) + " vs " +
                   std::to_string(sentences.size()) + ")");
            continue;
        }
        double duration = entry["duration"].get<double>();
        out.videos.emplace(vid,
                           VideoRecord(vid, duration, fps,
                                       stub_frames(vid, stub_frame_count(duration, fps))));
        for (std::size_t k = 0; k < timestamps.size(); ++k) {
            out.queries.emplace_back(
                vid + "#" + std::to_string(k), vid, sentences[k].get<std::string>(),
                std::vector<TimeSpan>{{timestamps[k].at(0).get<double>(),
                                       timestamps[k].at(1).get<double>()}});
        }
    }
    return out;
}

std::string serialize_activitynet(const Dataset& dataset) {
    json doc = json::object();
    for (const auto& q : dataset.queries) {
        const auto& video = dataset.video_for(q);
        auto& entry = doc[q.video_id()];
        if (entry.is_null()) {
            entry["duration"] = video.duration_s();
            entry["timestamps"] = json::array();
            entry["sentences"] = json::array();
        }
        const auto& s = q.gt_spans().front();
        entry["timestamps"].push_back({s.start_s, s.end_s});
        entry["sentences"].push_back(q.raw_text());
    }
    return doc.dump();
}

void attach_frames(Dataset& dataset, const fs::path& frames_root) {
    for (auto& [vid, video] : dataset.videos) {
        fs::path dir = frames_root / vid;
        if (!fs::is_directory(dir)) continue;
        std::vector<std::pair<long, std::string>> found;
        for (const auto& entry : fs::directory_iterator(dir)) {
            if (!entry.is_regular_file()) continue;
            std::string stem = entry.path().stem().string();
            try {
                found.emplace_back(std::stol(stem), entry.path().string());
            } catch (const std::exception&) {
                // Non-numeric names are not frames.
            }
        }
        if (found.empty()) continue;
        std::sort(found.begin(), found.end());
        std::vector<std::string> frames;
        frames.reserve(found.size());
        for (auto& [idx, p] : found) frames.push_back(std::move(p));
        video = VideoRecord(vid, video.duration_s(), video.fps(), std::move(frames));
    }
}

namespace {

// Phrase vocabulary; disjoint from the synthetic backend's filler and
// distractor pools.
const std::vector<std::string> kSubjects = {"woman", "man",   "girl", "boy",
                                            "chef",  "dancer", "worker", "athlete"};
const std::vector<std::string> kVerbs = {"opens",  "closes", "lifts", "paints",
                                         "folds",  "washes", "throws", "carries"};
const std::vector<std::string> kObjects = {"door",   "window", "ladder", "guitar",
                                           "bucket", "blanket", "bottle", "mirror"};
const std::vector<std::string> kPlaces = {"kitchen", "garage", "garden", "porch",
                                          "stairs",  "driveway", "balcony", "bench"};

template <typename Rng>
const std::string& pick(const std::vector<std::string>& pool, Rng& rng) {
    std::uniform_int_distribution<std::size_t> dist(0, pool.size() - 1);
    return pool[dist(rng)];
}

}  // namespace

std::pair<Dataset, SyntheticPlan> generate_synthetic(const SyntheticSpec& spec) {
    if (spec.n_videos == 0) throw ValidationError("generate_synthetic: n_videos >= 1");
    if (!(spec.min_duration_s > 0 && spec.min_duration_s <= spec.max_duration_s)) {
        throw ValidationError("generate_synthetic: bad duration range");
    }
    if (spec.min_spans < 1 || spec.min_spans > spec.max_spans) {
        throw ValidationError("generate_synthetic: bad span count range");
    }

    constexpr long kMinSpanLen = 10;
    constexpr long kMaxSpanLen = 20;
    constexpr long kGap = 8;

    std::mt19937_64 rng(spec.seed);
    Dataset dataset;
    SyntheticPlan plan;

    for (std::size_t v = 0; v < spec.n_videos; ++v) {
        char vid_buf[32];
        std::snprintf(vid_buf, sizeof(vid_buf), "synth%04zu", v);
        std::string vid = vid_buf;

        std::uniform_int_distribution<long> dur_dist(
            static_cast<long>(spec.min_duration_s),
            static_cast<long>(spec.max_duration_s));
        long duration = dur_dist(rng);

        std::uniform_int_distribution<std::size_t> count_dist(spec.min_spans,
                                                              spec.max_spans);
        std::size_t n_spans = count_dist(rng);

        // Left-to-right placement with guaranteed room for the spans
        // still to come.
        std::vector<TimeSpan> spans;
        long cursor = 0;
        for (std::size_t s = 0; s < n_spans; ++s) {
            long remaining_after =
                static_cast<long>(n_spans - s - 1) * (kMinSpanLen + kGap);
            long max_len = std::min(kMaxSpanLen, duration - cursor - remaining_after);
            if (max_len < kMinSpanLen) break;
            std::uniform_int_distribution<long> len_dist(kMinSpanLen, max_len);
            long len = len_dist(rng);
            long max_start = duration - remaining_after - len;
            std::uniform_int_distribution<long> start_dist(cursor, max_start);
            long start = start_dist(rng);
            spans.push_back({static_cast<double>(start), static_cast<double>(start + len)});
            cursor = start + len + kGap;
        }

        std::string phrase = "the " + pick(kSubjects, rng) + " " + pick(kVerbs, rng) +
                             " the " + pick(kObjects, rng) + " near the " +
                             pick(kPlaces, rng);

        PlannedVideo planned;
        planned.video_id = vid;
        planned.duration_s = static_cast<double>(duration);
        planned.fps = spec.fps;
        planned.phrase = phrase;
        planned.spans = spans;
        plan.videos[vid] = planned;

        auto n_frames = static_cast<std::size_t>(
            std::floor(static_cast<double>(duration) * spec.fps));
        dataset.videos.emplace(
            vid, VideoRecord(vid, static_cast<double>(duration), spec.fps,
                             stub_frames(vid, std::max<std::size_t>(n_frames, 1))));
        dataset.queries.emplace_back(vid + "#0", vid, phrase, spans);
    }
    return {std::move(dataset), std::move(plan)};
}

std::string serialize_synthetic(const Dataset& dataset) {
    std::ostringstream out;
    for (const auto& q : dataset.queries) {
        const auto& video = dataset.video_for(q);
        json doc;
        doc["qid"] = q.qid();
        doc["vid"] = q.video_id();
        doc["duration"] = video.duration_s();
        doc["fps"] = video.fps();
        doc["n_frames"] = video.frame_count();
        doc["query"] = q.raw_text();
        json spans = json::array();
        for (const auto& s : q.gt_spans()) spans.push_back({s.start_s, s.end_s});
        doc["spans"] = spans;
        if (!q.gt_saliency().empty()) doc["saliency"] = q.gt_saliency();
        out << doc.dump() << "\n";
    }
    return out.str();
}

Dataset load_synthetic(const fs::path& path) {
    std::istringstream lines(read_file(path));
    Dataset out;
    std::string line;
    long lineno = 0;
    while (std::getline(lines, line)) {
        ++lineno;
        if (line.empty()) continue;
        json doc = json::parse(line, nullptr, false);
        if (doc.is_discarded()) throw ParseError("invalid JSON", lineno);
        std::string vid = doc.at("vid").get<std::string>();
        if (!out.videos.count(vid)) {
            out.videos.emplace(
                vid, VideoRecord(vid, doc.at("duration").get<double>(),
                                 doc.at("fps").get<double>(),
                                 stub_frames(vid, doc.at("n_frames").get<std::size_t>())));
        }
        std::vector<TimeSpan> spans;
        for (const auto& s : doc.at("spans")) {
            spans.push_back({s.at(0).get<double>(), s.at(1).get<double>()});
        }
        std::vector<std::vector<int>> saliency;
        if (doc.contains("saliency")) {
            saliency = doc["saliency"].get<std::vector<std::vector<int>>>();
        }
        out.queries.emplace_back(doc.at("qid").get<std::string>(), vid,
                                 doc.at("query").get<std::string>(), std::move(spans),
                                 std::move(saliency));
    }
    return out;
}

}  // namespace vmr
