#pragma once

#include <vector>

#include "vmr/backends.hpp"
#include "vmr/types.hpp"

namespace vmr {

// Intersection over union on the time axis; 0 when disjoint.
double temporal_iou(const TimeSpan& a, const TimeSpan& b);
double temporal_iou(const CandidateSpan& a, const CandidateSpan& b);

// Greedy NMS: sort by score descending (ties: earlier start, then
// longer span), keep the top, drop anything overlapping it with
// IoU strictly above sigma. At sigma = 1 only exact duplicates go.
std::vector<ScoredSpan> nms(std::vector<ScoredSpan> spans, double sigma);

// Scores each candidate from its span caption (mean cosine against the
// rewrites, combined with the length term) and applies NMS.
std::vector<ScoredSpan> select_spans(const std::vector<CandidateSpan>& candidates,
                                     const std::vector<Caption>& span_captions,
                                     const DebiasedQuerySet& rewrites,
                                     EmbedBackend& embedder,
                                     const PipelineConfig& config, double duration_s);

}  // namespace vmr
