#include "vmr/scoring.hpp"

#include <algorithm>
#include <cmath>

namespace vmr {

double cosine(const Embedding& a, const Embedding& b) {
    if (a.dim() != b.dim()) {
        throw ValidationError("cosine: dimension mismatch (" + std::to_string(a.dim()) +
                              " vs " + std::to_string(b.dim()) + ")");
    }
    double dot = 0.0;
    for (std::size_t i = 0; i < a.dim(); ++i) dot += a.values()[i] * b.values()[i];
    return std::clamp(dot / (a.norm() * b.norm()), -1.0, 1.0);
}

FrameScoreMatrix frame_scores(const DebiasedQuerySet& rewrites,
                              const std::vector<Caption>& frame_captions,
                              EmbedBackend& embedder) {
    if (frame_captions.empty()) throw ValidationError("frame_scores: no captions");

    auto query_vecs = embedder.embed(rewrites.rewrites());

    // Failed captions are excluded from the embed batch and scored -1.
    std::vector<std::string> texts;
    std::vector<std::size_t> text_index(frame_captions.size(), SIZE_MAX);
    for (std::size_t j = 0; j < frame_captions.size(); ++j) {
        if (!frame_captions[j].failed()) {
            text_index[j] = texts.size();
            texts.push_back(frame_captions[j].text());
        }
    }
    std::vector<Embedding> caption_vecs;
    if (!texts.empty()) caption_vecs = embedder.embed(texts);

    std::size_t rows = rewrites.size();
    std::size_t cols = frame_captions.size();
    std::vector<double> data(rows * cols, -1.0);
    for (std::size_t i = 0; i < rows; ++i) {
        for (std::size_t j = 0; j < cols; ++j) {
            if (text_index[j] != SIZE_MAX) {
                data[i * cols + j] = cosine(query_vecs[i], caption_vecs[text_index[j]]);
            }
        }
    }
    return FrameScoreMatrix(rows, cols, std::move(data));
}

double span_score(const Caption& span_caption, const DebiasedQuerySet& rewrites,
                  EmbedBackend& embedder) {
    if (span_caption.failed()) {
        throw ValidationError("span_score: sentinel caption");
    }
    auto caption_vec = embedder.embed({span_caption.text()});
    auto query_vecs = embedder.embed(rewrites.rewrites());
    double sum = 0.0;
    for (const auto& q : query_vecs) sum += cosine(caption_vec[0], q);
    return sum / static_cast<double>(query_vecs.size());
}

double combined_score(double s_span, const CandidateSpan& span, double duration_s,
                      double lambda) {
    if (!(lambda >= 0.0 && lambda <= 1.0)) {
        throw ValidationError("combined_score: lambda must be in [0, 1]");
    }
    if (!(duration_s > 0.0)) {
        throw ValidationError("combined_score: duration must be > 0");
    }
    double e_norm = span.length() / duration_s;
    return (1.0 - lambda) * s_span + lambda * e_norm;
}

std::vector<double> saliency_track(const FrameScoreMatrix& scores) {
    std::vector<double> track(scores.cols(), 0.0);
    for (std::size_t j = 0; j < scores.cols(); ++j) {
        double sum = 0.0;
        for (std::size_t i = 0; i < scores.rows(); ++i) sum += scores.at(i, j);
        track[j] = sum / static_cast<double>(scores.rows());
    }
    return track;
}

}  // namespace vmr
