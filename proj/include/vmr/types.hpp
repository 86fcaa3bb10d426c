#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "vmr/errors.hpp"

namespace vmr {

// Time span in seconds. Closed-open on the frame grid: frame j covers
// [j/fps, (j+1)/fps).
struct TimeSpan {
    double start_s = 0.0;
    double end_s = 0.0;

    double length() const { return end_s - start_s; }
};

// An untrimmed video: frame manifest plus the sampling rate the frames
// were extracted at. Frame index j corresponds to timestamp j / fps.
class VideoRecord {
public:
    VideoRecord(std::string video_id, double duration_s, double fps,
                std::vector<std::string> frames);

    const std::string& video_id() const { return video_id_; }
    double duration_s() const { return duration_s_; }
    double fps() const { return fps_; }
    const std::vector<std::string>& frames() const { return frames_; }
    std::size_t frame_count() const { return frames_.size(); }

    double frame_time(std::size_t j) const { return static_cast<double>(j) / fps_; }

private:
    std::string video_id_;
    double duration_s_;
    double fps_;
    std::vector<std::string> frames_;
};

// A query against one video, with optional ground truth for evaluation.
// gt_saliency holds per-clip annotator score lists (QVHighlights VHD).
class QueryRecord {
public:
    QueryRecord(std::string qid, std::string video_id, std::string raw_text,
                std::vector<TimeSpan> gt_spans = {},
                std::vector<std::vector<int>> gt_saliency = {});

    const std::string& qid() const { return qid_; }
    const std::string& video_id() const { return video_id_; }
    const std::string& raw_text() const { return raw_text_; }
    const std::vector<TimeSpan>& gt_spans() const { return gt_spans_; }
    const std::vector<std::vector<int>>& gt_saliency() const { return gt_saliency_; }

    // gt spans can only be checked against a duration once the video is known.
    void check_against(const VideoRecord& video) const;

private:
    std::string qid_;
    std::string video_id_;
    std::string raw_text_;
    std::vector<TimeSpan> gt_spans_;
    std::vector<std::vector<int>> gt_saliency_;
};

// The rewrites produced from one raw query by the debiasing stage.
class DebiasedQuerySet {
public:
    DebiasedQuerySet(std::string qid, std::string raw_text,
                     std::vector<std::string> rewrites, bool fallback_used);

    const std::string& qid() const { return qid_; }
    const std::string& raw_text() const { return raw_text_; }
    const std::vector<std::string>& rewrites() const { return rewrites_; }
    bool fallback_used() const { return fallback_used_; }
    std::size_t size() const { return rewrites_.size(); }

private:
    std::string qid_;
    std::string raw_text_;
    std::vector<std::string> rewrites_;
    bool fallback_used_;
};

// One caption, frame-level or span-level. A failed subject (unreadable
// frame) is represented by failed() == true and empty text; downstream
// scoring assigns it similarity -1.
class Caption {
public:
    Caption(std::string subject, std::string text, std::string provider_fingerprint);

    static Caption failed_for(std::string subject, std::string provider_fingerprint);

    const std::string& subject() const { return subject_; }
    const std::string& text() const { return text_; }
    const std::string& provider_fingerprint() const { return provider_fingerprint_; }
    bool failed() const { return failed_; }

private:
    Caption() = default;

    std::string subject_;
    std::string text_;
    std::string provider_fingerprint_;
    bool failed_ = false;
};

// Dense float vector; dimension is whatever the backend delivers,
// uniform within a run. Zero vectors are rejected.
class Embedding {
public:
    explicit Embedding(std::vector<double> values);

    const std::vector<double>& values() const { return values_; }
    std::size_t dim() const { return values_.size(); }
    double norm() const { return norm_; }

private:
    std::vector<double> values_;
    double norm_;
};

// Cosine similarities between every rewrite and every frame caption,
// shape n_rewrites x frame_count. Row-major.
class FrameScoreMatrix {
public:
    FrameScoreMatrix(std::size_t rows, std::size_t cols, std::vector<double> data);

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    double at(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }
    std::vector<double> row(std::size_t i) const;

private:
    std::size_t rows_;
    std::size_t cols_;
    std::vector<double> data_;
};

// A span proposed by the generator, tagged with the rewrite row that
// produced it.
class CandidateSpan {
public:
    CandidateSpan(double start_s, double end_s, std::size_t source_rewrite);

    double start_s() const { return span_.start_s; }
    double end_s() const { return span_.end_s; }
    const TimeSpan& span() const { return span_; }
    double length() const { return span_.length(); }
    std::size_t source_rewrite() const { return source_rewrite_; }

private:
    TimeSpan span_;
    std::size_t source_rewrite_;
};

// A candidate with its span-level similarity, normalized length term,
// and the combined score. The combination identity is checked at
// construction: score == (1 - lambda) * s_span + lambda * e_norm.
class ScoredSpan {
public:
    ScoredSpan(CandidateSpan span, double s_span, double e_norm, double score,
               double lambda);

    const CandidateSpan& span() const { return span_; }
    double s_span() const { return s_span_; }
    double e_norm() const { return e_norm_; }
    double score() const { return score_; }

private:
    CandidateSpan span_;
    double s_span_;
    double e_norm_;
    double score_;
};

// Per-stage sampling temperatures.
struct Temperatures {
    double debias = 0.3;
    double frame_caption = 0.2;
    double span_caption = 0.2;
};

// Per-dataset frame rates.
struct FrameRates {
    double charades_sta = 1.0;
    double activitynet = 1.0;
    double qvhighlights = 0.5;
};

// All pipeline hyperparameters, defaulted to the published settings.
struct PipelineConfig {
    int n_d = 3;           // rewrites per query
    int eta = 10;          // histogram bin count
    int kappa = 7;         // qualifying-bin moment count
    int tau = 5;           // below-threshold run that closes a span
    double lambda = 0.2;   // span-length coefficient
    double sigma = 0.9;    // NMS IoU threshold
    Temperatures temperatures;
    FrameRates fps;
    int span_caption_max_frames = 8;

    void validate() const;
};

}  // namespace vmr
