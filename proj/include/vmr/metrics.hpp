#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "vmr/types.hpp"

namespace vmr {

// One ranked prediction for a query.
struct Prediction {
    TimeSpan span;
    double score = 0.0;
};

// Everything evaluation needs for one query.
struct EvalInstance {
    std::vector<Prediction> predictions;  // any order; ranked internally
    std::vector<TimeSpan> gt_spans;
};

// Rank order: score descending, ties by earlier start then longer span.
std::vector<Prediction> ranked(std::vector<Prediction> predictions);

double best_iou(const TimeSpan& span, const std::vector<TimeSpan>& gt_spans);

// Top-1 prediction reaches IoU >= n with some gt span. No prediction
// counts as a miss.
bool r1_hit(const EvalInstance& inst, double n);
double r1_at(const std::vector<EvalInstance>& instances, double n);

// Mean over queries of the top-1 prediction's best IoU.
double miou(const std::vector<EvalInstance>& instances);

// Average precision with greedy rank-order gt matching at IoU >= m and
// interpolated precision-envelope integration.
double average_precision(const EvalInstance& inst, double m);
double map_at(const std::vector<EvalInstance>& instances, double m);

// The [0.5 : 0.05 : 0.95] threshold grid and its mean mAP.
std::vector<double> map_grid();
double map_avg(const std::vector<EvalInstance>& instances);

// Highlight detection. gt_saliency holds per-clip annotator score
// lists; a clip is relevant when its best annotator score is >= 4.
constexpr int kSaliencyRelevanceBar = 4;

bool clip_relevant(const std::vector<int>& annotator_scores);
int hit_at_1(const std::vector<double>& saliency_pred,
             const std::vector<std::vector<int>>& gt_saliency);
// AP of the clip ranking; nullopt when the video has no relevant clip.
std::optional<double> vhd_ap(const std::vector<double>& saliency_pred,
                             const std::vector<std::vector<int>>& gt_saliency);
double vhd_map(const std::vector<std::vector<double>>& saliency_preds,
               const std::vector<std::vector<std::vector<int>>>& gt_saliency);

// Metric ceilings when candidates are ranked by true IoU against gt.
struct OracleBound {
    std::map<double, double> r1;  // n -> bound
    double miou = 0.0;
};
OracleBound oracle_bound(const std::vector<std::vector<TimeSpan>>& candidate_sets,
                         const std::vector<std::vector<TimeSpan>>& gt_sets,
                         const std::vector<double>& r1_thresholds);

// Query bias categories. rare: some content word occurs fewer than 10
// times in the corpus; error: the first rewrite changed the wording
// beyond case and punctuation; biased = rare or error.
struct QueryCategory {
    bool rare = false;
    bool error = false;

    bool biased() const { return rare || error; }
    std::string label() const;
};

std::vector<std::string> content_words(const std::string& text);
std::vector<QueryCategory> categorize_queries(
    const std::vector<QueryRecord>& queries,
    const std::vector<const DebiasedQuerySet*>& rewrites);

// Aggregated report for one run.
struct EvalReport {
    std::size_t query_count = 0;
    std::map<double, double> r1;
    double miou_value = 0.0;
    std::map<double, double> map;
    double map_avg_value = 0.0;
    std::optional<double> hit_at_1_value;
    std::optional<double> vhd_map_value;

    struct CategoryStats {
        std::size_t count = 0;
        std::map<double, double> r1;
        double miou = 0.0;
    };
    std::map<std::string, CategoryStats> categories;

    std::string to_json() const;
    std::string to_table() const;
};

EvalReport build_report(const std::vector<EvalInstance>& instances,
                        const std::vector<double>& r1_thresholds,
                        const std::vector<QueryCategory>& categories = {});

}  // namespace vmr
