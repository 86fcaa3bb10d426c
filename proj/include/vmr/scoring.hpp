#pragma once

#include <vector>

#include "vmr/backends.hpp"
#include "vmr/types.hpp"

namespace vmr {

// dot(a,b) / (|a||b|), clamped to [-1, 1] against rounding.
double cosine(const Embedding& a, const Embedding& b);

// Similarity of every rewrite against every frame caption. Failed
// captions score -1 so they never seed spans.
FrameScoreMatrix frame_scores(const DebiasedQuerySet& rewrites,
                              const std::vector<Caption>& frame_captions,
                              EmbedBackend& embedder);

// Mean cosine between one span caption and all rewrites.
double span_score(const Caption& span_caption, const DebiasedQuerySet& rewrites,
                  EmbedBackend& embedder);

// S = (1 - lambda) * s_span + lambda * (span length / duration).
double combined_score(double s_span, const CandidateSpan& span, double duration_s,
                      double lambda);

// Column-wise mean over rewrites; per-frame saliency for highlight
// detection.
std::vector<double> saliency_track(const FrameScoreMatrix& scores);

}  // namespace vmr
