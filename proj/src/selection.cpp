#include "vmr/selection.hpp"

#include <algorithm>

#include "vmr/scoring.hpp"

namespace vmr {

double temporal_iou(const TimeSpan& a, const TimeSpan& b) {
    double inter = std::min(a.end_s, b.end_s) - std::max(a.start_s, b.start_s);
    if (inter <= 0.0) return 0.0;
    double uni = std::max(a.end_s, b.end_s) - std::min(a.start_s, b.start_s);
    return inter / uni;
}

double temporal_iou(const CandidateSpan& a, const CandidateSpan& b) {
    return temporal_iou(a.span(), b.span());
}

namespace {

bool ranks_before(const ScoredSpan& a, const ScoredSpan& b) {
    if (a.score() != b.score()) return a.score() > b.score();
    if (a.span().start_s() != b.span().start_s()) {
        return a.span().start_s() < b.span().start_s();
    }
    return a.span().length() > b.span().length();
}

}  // namespace

std::vector<ScoredSpan> nms(std::vector<ScoredSpan> spans, double sigma) {
    if (!(sigma > 0.0 && sigma <= 1.0)) {
        throw ValidationError("nms: sigma must be in (0, 1]");
    }
    std::stable_sort(spans.begin(), spans.end(), ranks_before);

    std::vector<ScoredSpan> kept;
    std::vector<bool> removed(spans.size(), false);
    for (std::size_t i = 0; i < spans.size(); ++i) {
        if (removed[i]) continue;
        kept.push_back(spans[i]);
        for (std::size_t j = i + 1; j < spans.size(); ++j) {
            if (!removed[j] && temporal_iou(spans[i].span(), spans[j].span()) > sigma) {
                removed[j] = true;
            }
        }
    }
    return kept;
}

std::vector<ScoredSpan> select_spans(const std::vector<CandidateSpan>& candidates,
                                     const std::vector<Caption>& span_captions,
                                     const DebiasedQuerySet& rewrites,
                                     EmbedBackend& embedder,
                                     const PipelineConfig& config, double duration_s) {
    if (candidates.size() != span_captions.size()) {
        throw ValidationError("select_spans: one caption per candidate required");
    }
    std::vector<ScoredSpan> scored;
    scored.reserve(candidates.size());
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        double s_span = span_captions[i].failed()
                            ? -1.0
                            : span_score(span_captions[i], rewrites, embedder);
        double e_norm = candidates[i].length() / duration_s;
        double score =
            combined_score(s_span, candidates[i], duration_s, config.lambda);
        scored.emplace_back(candidates[i], s_span, e_norm, score, config.lambda);
    }
    return nms(std::move(scored), config.sigma);
}

}  // namespace vmr
