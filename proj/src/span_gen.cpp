#include "vmr/span_gen.hpp"

#include <algorithm>
#include <cmath>

namespace vmr {

namespace {
constexpr double kAllPassMargin = 1e-9;
constexpr double kDedupTolerance = 1e-6;
}  // namespace

double adaptive_threshold(const std::vector<double>& row, int eta, int kappa) {
    if (row.empty()) throw ValidationError("adaptive_threshold: empty row");
    if (eta < 1) throw ValidationError("adaptive_threshold: eta must be >= 1");
    if (kappa < 1) throw ValidationError("adaptive_threshold: kappa must be >= 1");

    auto [min_it, max_it] = std::minmax_element(row.begin(), row.end());
    double lo = *min_it, hi = *max_it;
    if (hi == lo) return lo - kAllPassMargin;

    for (int k = eta - 1; k >= 0; --k) {
        double edge = lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(eta);
        std::size_t count = 0;
        for (double v : row) {
            if (v >= edge) ++count;
        }
        if (count >= static_cast<std::size_t>(kappa)) return edge;
    }
    return lo - kAllPassMargin;
}

std::vector<CandidateSpan> segment_row(const std::vector<double>& row, double gamma,
                                       int tau, double fps,
                                       std::size_t source_rewrite) {
    if (tau < 1) throw ValidationError("segment_row: tau must be >= 1");
    if (!(fps > 0.0)) throw ValidationError("segment_row: fps must be > 0");

    std::vector<CandidateSpan> spans;
    bool open = false;
    std::size_t first_on = 0;
    std::size_t last_on = 0;
    int off_run = 0;

    for (std::size_t j = 0; j < row.size(); ++j) {
        bool on = row[j] > gamma;
        if (on) {
            if (!open) {
                open = true;
                first_on = j;
            }
            last_on = j;
            off_run = 0;
        } else if (open) {
            if (++off_run == tau) {
                spans.emplace_back(static_cast<double>(first_on) / fps,
                                   static_cast<double>(last_on + 1) / fps,
                                   source_rewrite);
                open = false;
                off_run = 0;
            }
        }
    }
    if (open) {
        spans.emplace_back(static_cast<double>(first_on) / fps,
                           static_cast<double>(last_on + 1) / fps, source_rewrite);
    }
    return spans;
}

std::vector<CandidateSpan> generate_candidates(const FrameScoreMatrix& scores,
                                               const PipelineConfig& config, double fps,
                                               double duration_s) {
    if (!(duration_s > 0.0)) {
        throw ValidationError("generate_candidates: duration must be > 0");
    }

    std::vector<CandidateSpan> merged;
    for (std::size_t i = 0; i < scores.rows(); ++i) {
        auto row = scores.row(i);
        double gamma = adaptive_threshold(row, config.eta, config.kappa);
        for (const auto& s : segment_row(row, gamma, config.tau, fps, i)) {
            double start = std::max(0.0, s.start_s());
            double end = std::min(duration_s, s.end_s());
            if (!(start < end)) continue;
            bool duplicate = false;
            for (const auto& kept : merged) {
                if (std::abs(kept.start_s() - start) <= kDedupTolerance &&
                    std::abs(kept.end_s() - end) <= kDedupTolerance) {
                    duplicate = true;  // rows are visited in index order
                    break;
                }
            }
            if (!duplicate) merged.emplace_back(start, end, i);
        }
    }

    std::stable_sort(merged.begin(), merged.end(),
                     [](const CandidateSpan& a, const CandidateSpan& b) {
                         if (a.source_rewrite() != b.source_rewrite()) {
                             return a.source_rewrite() < b.source_rewrite();
                         }
                         return a.start_s() < b.start_s();
                     });
    return merged;
}

}  // namespace vmr
