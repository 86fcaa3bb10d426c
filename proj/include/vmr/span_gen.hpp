#pragma once

#include <vector>

#include "vmr/types.hpp"

namespace vmr {

// Adaptive threshold from the inverse cumulative histogram of one
// similarity row: [min, max] is split into eta equal bins; walking bin
// left endpoints from highest to lowest, gamma is the first endpoint
// with at least kappa values at or above it. If no bin qualifies, or
// the row is constant, gamma sits just below min so every moment passes.
double adaptive_threshold(const std::vector<double>& row, int eta, int kappa);

// Run-length segmentation: a moment is on when its value is strictly
// above gamma; a span closes once tau consecutive off moments occur,
// ending at the last on moment. Emitted as [first/fps, (last+1)/fps).
std::vector<CandidateSpan> segment_row(const std::vector<double>& row, double gamma,
                                       int tau, double fps,
                                       std::size_t source_rewrite = 0);

// Threshold + segmentation per row, union over rows. Exact duplicates
// keep the lowest rewrite index; spans are clipped to [0, duration_s].
// Output ordered by rewrite index, then start time.
std::vector<CandidateSpan> generate_candidates(const FrameScoreMatrix& scores,
                                               const PipelineConfig& config, double fps,
                                               double duration_s);

}  // namespace vmr
