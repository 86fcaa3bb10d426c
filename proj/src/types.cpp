#include "vmr/types.hpp"

#include <algorithm>
#include <cmath>

namespace vmr {

namespace {

std::string trimmed(const std::string& s) {
    auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

}  // namespace

VideoRecord::VideoRecord(std::string video_id, double duration_s, double fps,
                         std::vector<std::string> frames)
    : video_id_(std::move(video_id)),
      duration_s_(duration_s),
      fps_(fps),
      frames_(std::move(frames)) {
    if (video_id_.empty()) throw ValidationError("VideoRecord: empty video_id");
    if (!(duration_s_ > 0.0)) throw ValidationError("VideoRecord: duration must be > 0");
    if (!(fps_ > 0.0)) throw ValidationError("VideoRecord: fps must be > 0");
    if (frames_.empty()) throw ValidationError("VideoRecord: at least one frame required");
    auto limit = static_cast<std::size_t>(std::ceil(duration_s_ * fps_)) + 1;
    if (frames_.size() > limit) {
        throw ValidationError("VideoRecord '" + video_id_ + "': " +
                              std::to_string(frames_.size()) +
                              " frames exceeds ceil(duration*fps)+1 = " +
                              std::to_string(limit));
    }
}

QueryRecord::QueryRecord(std::string qid, std::string video_id, std::string raw_text,
                         std::vector<TimeSpan> gt_spans,
                         std::vector<std::vector<int>> gt_saliency)
    : qid_(std::move(qid)),
      video_id_(std::move(video_id)),
      raw_text_(std::move(raw_text)),
      gt_spans_(std::move(gt_spans)),
      gt_saliency_(std::move(gt_saliency)) {
    if (qid_.empty()) throw ValidationError("QueryRecord: empty qid");
    if (video_id_.empty()) throw ValidationError("QueryRecord: empty video_id");
    if (raw_text_.empty()) throw ValidationError("QueryRecord: empty raw_text");
    for (const auto& s : gt_spans_) {
        if (!(s.start_s >= 0.0 && s.start_s < s.end_s)) {
            throw ValidationError("QueryRecord '" + qid_ + "': invalid gt span");
        }
    }
}

void QueryRecord::check_against(const VideoRecord& video) const {
    for (const auto& s : gt_spans_) {
        if (s.end_s > video.duration_s() + 1e-9) {
            throw ValidationError("QueryRecord '" + qid_ +
                                  "': gt span ends past video duration");
        }
    }
}

DebiasedQuerySet::DebiasedQuerySet(std::string qid, std::string raw_text,
                                   std::vector<std::string> rewrites, bool fallback_used)
    : qid_(std::move(qid)),
      raw_text_(std::move(raw_text)),
      rewrites_(std::move(rewrites)),
      fallback_used_(fallback_used) {
    if (rewrites_.empty()) throw ValidationError("DebiasedQuerySet: no rewrites");
    for (const auto& r : rewrites_) {
        if (trimmed(r).empty()) throw ValidationError("DebiasedQuerySet: empty rewrite");
    }
}

Caption::Caption(std::string subject, std::string text, std::string provider_fingerprint)
    : subject_(std::move(subject)),
      text_(std::move(text)),
      provider_fingerprint_(std::move(provider_fingerprint)) {
    if (trimmed(text_).empty()) {
        throw ValidationError("Caption for '" + subject_ + "': empty text");
    }
}

Caption Caption::failed_for(std::string subject, std::string provider_fingerprint) {
    Caption c;
    c.subject_ = std::move(subject);
    c.provider_fingerprint_ = std::move(provider_fingerprint);
    c.failed_ = true;
    return c;
}

Embedding::Embedding(std::vector<double> values) : values_(std::move(values)) {
    if (values_.empty()) throw ValidationError("Embedding: empty vector");
    double sq = 0.0;
    for (double v : values_) {
        if (!std::isfinite(v)) throw ValidationError("Embedding: non-finite component");
        sq += v * v;
    }
    norm_ = std::sqrt(sq);
    if (!(norm_ > 0.0)) throw ValidationError("Embedding: zero vector");
}

FrameScoreMatrix::FrameScoreMatrix(std::size_t rows, std::size_t cols,
                                   std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (rows_ == 0 || cols_ == 0) throw ValidationError("FrameScoreMatrix: empty shape");
    if (data_.size() != rows_ * cols_) {
        throw ValidationError("FrameScoreMatrix: data size does not match shape");
    }
    for (double v : data_) {
        if (!(v >= -1.0 - 1e-12 && v <= 1.0 + 1e-12)) {
            throw ValidationError("FrameScoreMatrix: entry outside [-1, 1]");
        }
    }
}

std::vector<double> FrameScoreMatrix::row(std::size_t i) const {
    return std::vector<double>(data_.begin() + static_cast<long>(i * cols_),
                               data_.begin() + static_cast<long>((i + 1) * cols_));
}

CandidateSpan::CandidateSpan(double start_s, double end_s, std::size_t source_rewrite)
    : span_{start_s, end_s}, source_rewrite_(source_rewrite) {
    if (!(start_s >= 0.0 && start_s < end_s)) {
        throw ValidationError("CandidateSpan: requires 0 <= start < end");
    }
}

ScoredSpan::ScoredSpan(CandidateSpan span, double s_span, double e_norm, double score,
                       double lambda)
    : span_(span), s_span_(s_span), e_norm_(e_norm), score_(score) {
    if (!(s_span >= -1.0 - 1e-12 && s_span <= 1.0 + 1e-12)) {
        throw ValidationError("ScoredSpan: s_span outside [-1, 1]");
    }
    if (!(e_norm >= 0.0 && e_norm <= 1.0 + 1e-12)) {
        throw ValidationError("ScoredSpan: e_norm outside [0, 1]");
    }
    double expected = (1.0 - lambda) * s_span + lambda * e_norm;
    if (std::abs(score - expected) > 1e-9) {
        throw ValidationError("ScoredSpan: score inconsistent with components");
    }
}

void PipelineConfig::validate() const {
    if (n_d < 1) throw ValidationError("PipelineConfig: n_d must be >= 1");
    if (eta < 1) throw ValidationError("PipelineConfig: eta must be >= 1");
    if (kappa < 1) throw ValidationError("PipelineConfig: kappa must be >= 1");
    if (tau < 1) throw ValidationError("PipelineConfig: tau must be >= 1");
    if (!(lambda >= 0.0 && lambda <= 1.0)) {
        throw ValidationError("PipelineConfig: lambda must be in [0, 1]");
    }
    if (!(sigma > 0.0 && sigma <= 1.0)) {
        throw ValidationError("PipelineConfig: sigma must be in (0, 1]");
    }
    if (span_caption_max_frames < 1) {
        throw ValidationError("PipelineConfig: span_caption_max_frames must be >= 1");
    }
}

}  // namespace vmr
