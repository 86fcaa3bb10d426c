#include "vmr/metrics.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <iomanip>
#include <set>
#include <sstream>

#include <json.hpp>

#include "vmr/selection.hpp"

namespace vmr {

using nlohmann::json;

std::vector<Prediction> ranked(std::vector<Prediction> predictions) {
    std::stable_sort(predictions.begin(), predictions.end(),
                     [](const Prediction& a, const Prediction& b) {
                         if (a.score != b.score) return a.score > b.score;
                         if (a.span.start_s != b.span.start_s) {
                             return a.span.start_s < b.span.start_s;
                         }
                         return a.span.length() > b.span.length();
                     });
    return predictions;
}

double best_iou(const TimeSpan& span, const std::vector<TimeSpan>& gt_spans) {
    double best = 0.0;
    for (const auto& gt : gt_spans) best = std::max(best, temporal_iou(span, gt));
    return best;
}

bool r1_hit(const EvalInstance& inst, double n) {
    if (!(n > 0.0 && n < 1.0)) throw ValidationError("r1: n must be in (0, 1)");
    if (inst.predictions.empty()) return false;
    auto preds = ranked(inst.predictions);
    return best_iou(preds.front().span, inst.gt_spans) >= n;
}

double r1_at(const std::vector<EvalInstance>& instances, double n) {
    if (instances.empty()) return 0.0;
    std::size_t hits = 0;
    for (const auto& inst : instances) {
        if (r1_hit(inst, n)) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(instances.size());
}

double miou(const std::vector<EvalInstance>& instances) {
    if (instances.empty()) return 0.0;
    double sum = 0.0;
    for (const auto& inst : instances) {
        if (inst.predictions.empty()) continue;
        auto preds = ranked(inst.predictions);
        sum += best_iou(preds.front().span, inst.gt_spans);
    }
    return sum / static_cast<double>(instances.size());
}

double average_precision(const EvalInstance& inst, double m) {
    if (!(m > 0.0 && m < 1.0)) throw ValidationError("mAP: m must be in (0, 1)");
    if (inst.gt_spans.empty()) return 0.0;
    auto preds = ranked(inst.predictions);

    // Greedy matching in rank order: each prediction takes the unmatched
    // gt span with the highest IoU, a TP if that IoU >= m.
    std::vector<bool> matched(inst.gt_spans.size(), false);
    std::vector<bool> tp(preds.size(), false);
    for (std::size_t k = 0; k < preds.size(); ++k) {
        double best = 0.0;
        std::size_t best_g = SIZE_MAX;
        for (std::size_t g = 0; g < inst.gt_spans.size(); ++g) {
            if (matched[g]) continue;
            double iou = temporal_iou(preds[k].span, inst.gt_spans[g]);
            if (iou > best) {
                best = iou;
                best_g = g;
            }
        }
        if (best_g != SIZE_MAX && best >= m) {
            matched[best_g] = true;
            tp[k] = true;
        }
    }

    // Precision-recall points at each rank, then the interpolated
    // envelope: AP = sum of delta-recall * max precision at or past
    // that recall.
    std::size_t num_gt = inst.gt_spans.size();
    std::vector<double> precision(preds.size());
    std::vector<double> recall(preds.size());
    std::size_t cum_tp = 0;
    for (std::size_t k = 0; k < preds.size(); ++k) {
        if (tp[k]) ++cum_tp;
        precision[k] = static_cast<double>(cum_tp) / static_cast<double>(k + 1);
        recall[k] = static_cast<double>(cum_tp) / static_cast<double>(num_gt);
    }
    for (std::size_t k = preds.size(); k-- > 1;) {
        precision[k - 1] = std::max(precision[k - 1], precision[k]);
    }
    double ap = 0.0;
    double prev_recall = 0.0;
    for (std::size_t k = 0; k < preds.size(); ++k) {
        if (tp[k]) {
            ap += (recall[k] - prev_recall) * precision[k];
            prev_recall = recall[k];
        }
    }
    return ap;
}

double map_at(const std::vector<EvalInstance>& instances, double m) {
    double sum = 0.0;
    std::size_t counted = 0;
    for (const auto& inst : instances) {
        if (inst.gt_spans.empty()) continue;
        sum += average_precision(inst, m);
        ++counted;
    }
    return counted == 0 ? 0.0 : sum / static_cast<double>(counted);
}

std::vector<double> map_grid() {
    std::vector<double> grid;
    for (int i = 0; i < 10; ++i) grid.push_back(0.5 + 0.05 * i);
    return grid;
}

double map_avg(const std::vector<EvalInstance>& instances) {
    auto grid = map_grid();
    double sum = 0.0;
    for (double m : grid) sum += map_at(instances, m);
    return sum / static_cast<double>(grid.size());
}

bool clip_relevant(const std::vector<int>& annotator_scores) {
    for (int s : annotator_scores) {
        if (s >= kSaliencyRelevanceBar) return true;
    }
    return false;
}

int hit_at_1(const std::vector<double>& saliency_pred,
             const std::vector<std::vector<int>>& gt_saliency) {
    if (saliency_pred.size() != gt_saliency.size()) {
        throw ValidationError("hit_at_1: clip count mismatch");
    }
    if (saliency_pred.empty()) throw ValidationError("hit_at_1: no clips");
    std::size_t top = 0;
    for (std::size_t i = 1; i < saliency_pred.size(); ++i) {
        if (saliency_pred[i] > saliency_pred[top]) top = i;
    }
    return clip_relevant(gt_saliency[top]) ? 1 : 0;
}

std::optional<double> vhd_ap(const std::vector<double>& saliency_pred,
                             const std::vector<std::vector<int>>& gt_saliency) {
    if (saliency_pred.size() != gt_saliency.size()) {
        throw ValidationError("vhd_ap: clip count mismatch");
    }
    std::size_t num_relevant = 0;
    for (const auto& scores : gt_saliency) {
        if (clip_relevant(scores)) ++num_relevant;
    }
    if (num_relevant == 0) return std::nullopt;

    std::vector<std::size_t> order(saliency_pred.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return saliency_pred[a] > saliency_pred[b];
    });

    double ap = 0.0;
    std::size_t cum_tp = 0;
    for (std::size_t k = 0; k < order.size(); ++k) {
        if (clip_relevant(gt_saliency[order[k]])) {
            ++cum_tp;
            ap += static_cast<double>(cum_tp) / static_cast<double>(k + 1);
        }
    }
    return ap / static_cast<double>(num_relevant);
}

double vhd_map(const std::vector<std::vector<double>>& saliency_preds,
               const std::vector<std::vector<std::vector<int>>>& gt_saliency) {
    if (saliency_preds.size() != gt_saliency.size()) {
        throw ValidationError("vhd_map: video count mismatch");
    }
    double sum = 0.0;
    std::size_t counted = 0;
    for (std::size_t v = 0; v < saliency_preds.size(); ++v) {
        if (auto ap = vhd_ap(saliency_preds[v], gt_saliency[v])) {
            sum += *ap;
            ++counted;
        }
    }
    return counted == 0 ? 0.0 : sum / static_cast<double>(counted);
}

OracleBound oracle_bound(const std::vector<std::vector<TimeSpan>>& candidate_sets,
                         const std::vector<std::vector<TimeSpan>>& gt_sets,
                         const std::vector<double>& r1_thresholds) {
    if (candidate_sets.size() != gt_sets.size()) {
        throw ValidationError("oracle_bound: query count mismatch");
    }
    std::vector<EvalInstance> instances;
    instances.reserve(candidate_sets.size());
    for (std::size_t q = 0; q < candidate_sets.size(); ++q) {
        EvalInstance inst;
        inst.gt_spans = gt_sets[q];
        for (const auto& c : candidate_sets[q]) {
            inst.predictions.push_back({c, best_iou(c, gt_sets[q])});
        }
        instances.push_back(std::move(inst));
    }
    OracleBound bound;
    for (double n : r1_thresholds) bound.r1[n] = r1_at(instances, n);
    bound.miou = miou(instances);
    return bound;
}

std::string QueryCategory::label() const {
    if (rare && error) return "rare+error";
    if (rare) return "rare";
    if (error) return "error";
    return "common";
}

namespace {

const std::set<std::string>& stopwords() {
    static const std::set<std::string> kStopwords = {
        "the", "and", "for", "are", "was", "were", "with", "that", "this",
        "then", "them", "they", "there", "their", "his", "her", "its", "have",
        "has", "had", "but", "not", "you", "your", "from", "into", "onto",
        "out", "off", "over", "under", "while", "when", "where", "what",
        "who", "how", "all", "some", "one", "two", "person", "people"};
    return kStopwords;
}

std::string normalize_words(const std::string& text) {
    std::string out;
    bool in_word = false;
    for (char ch : text) {
        if (std::isalnum(static_cast<unsigned char>(ch))) {
            out.push_back(
                static_cast<char>(std::tolower(static_cast<unsigned char>(ch))));
            in_word = true;
        } else if (in_word) {
            out.push_back(' ');
            in_word = false;
        }
    }
    while (!out.empty() && out.back() == ' ') out.pop_back();
    return out;
}

}  // namespace

std::vector<std::string> content_words(const std::string& text) {
    std::vector<std::string> out;
    std::istringstream words(normalize_words(text));
    std::string w;
    while (words >> w) {
        if (w.size() >= 3 && !stopwords().count(w)) out.push_back(w);
    }
    return out;
}

std::vector<QueryCategory> categorize_queries(
    const std::vector<QueryRecord>& queries,
    const std::vector<const DebiasedQuerySet*>& rewrites) {
    std::map<std::string, std::size_t> corpus_counts;
    for (const auto& q : queries) {
        for (const auto& w : content_words(q.raw_text())) ++corpus_counts[w];
    }

    std::vector<QueryCategory> out(queries.size());
    for (std::size_t i = 0; i < queries.size(); ++i) {
        for (const auto& w : content_words(queries[i].raw_text())) {
            if (corpus_counts[w] < 10) {
                out[i].rare = true;
                break;
            }
        }
        if (i < rewrites.size() && rewrites[i] && !rewrites[i]->rewrites().empty()) {
            // Error proxy: the first rewrite changed the word sequence.
            out[i].error = normalize_words(queries[i].raw_text()) !=
                           normalize_words(rewrites[i]->rewrites().front());
        }
    }
    return out;
}

EvalReport build_report(const std::vector<EvalInstance>& instances,
                        const std::vector<double>& r1_thresholds,
                        const std::vector<QueryCategory>& categories) {
    EvalReport report;
    report.query_count = instances.size();
    for (double n : r1_thresholds) report.r1[n] = r1_at(instances, n);
    report.miou_value = miou(instances);
    for (double m : map_grid()) report.map[m] = map_at(instances, m);
    double map_sum = 0.0;
    for (const auto& [m, v] : report.map) map_sum += v;
    report.map_avg_value = map_sum / static_cast<double>(report.map.size());

    if (!categories.empty()) {
        if (categories.size() != instances.size()) {
            throw ValidationError("build_report: category count mismatch");
        }
        auto subset_stats = [&](auto keep) {
            EvalReport::CategoryStats stats;
            std::vector<EvalInstance> subset;
            for (std::size_t i = 0; i < instances.size(); ++i) {
                if (keep(categories[i])) subset.push_back(instances[i]);
            }
            stats.count = subset.size();
            for (double n : r1_thresholds) stats.r1[n] = r1_at(subset, n);
            stats.miou = miou(subset);
            return stats;
        };
        report.categories["rare"] =
            subset_stats([](const QueryCategory& c) { return c.rare; });
        report.categories["error"] =
            subset_stats([](const QueryCategory& c) { return c.error; });
        report.categories["biased"] =
            subset_stats([](const QueryCategory& c) { return c.biased(); });
        report.categories["common"] =
            subset_stats([](const QueryCategory& c) { return !c.biased(); });
    }
    return report;
}

std::string EvalReport::to_json() const {
    json doc;
    doc["query_count"] = query_count;
    json r1_obj = json::object();
    for (const auto& [n, v] : r1) {
        std::ostringstream key;
        key << n;
        r1_obj[key.str()] = v;
    }
    doc["r1"] = r1_obj;
    doc["miou"] = miou_value;
    json map_obj = json::object();
    for (const auto& [m, v] : map) {
        std::ostringstream key;
        key << m;
        map_obj[key.str()] = v;
    }
    doc["map"] = map_obj;
    doc["map_avg"] = map_avg_value;
    if (hit_at_1_value) doc["hit_at_1"] = *hit_at_1_value;
    if (vhd_map_value) doc["vhd_map"] = *vhd_map_value;
    if (!categories.empty()) {
        json cats = json::object();
        for (const auto& [name, stats] : categories) {
            json c;
            c["count"] = stats.count;
            json cr1 = json::object();
            for (const auto& [n, v] : stats.r1) {
                std::ostringstream key;
                key << n;
                cr1[key.str()] = v;
            }
            c["r1"] = cr1;
            c["miou"] = stats.miou;
            cats[name] = c;
        }
        doc["categories"] = cats;
    }
    return doc.dump(2);
}

std::string EvalReport::to_table() const {
    std::ostringstream out;
    out << std::fixed << std::setprecision(4);
    out << "queries: " << query_count << "\n";
    for (const auto& [n, v] : r1) out << "R1@" << n << std::setw(14) << v << "\n";
    out << "mIoU" << std::setw(16) << miou_value << "\n";
    for (const auto& [m, v] : map) out << "mAP@" << m << std::setw(13) << v << "\n";
    out << "mAP@avg" << std::setw(13) << map_avg_value << "\n";
    if (hit_at_1_value) out << "HIT@1" << std::setw(15) << *hit_at_1_value << "\n";
    if (vhd_map_value) out << "VHD mAP" << std::setw(13) << *vhd_map_value << "\n";
    for (const auto& [name, stats] : categories) {
        out << "[" << name << "] n=" << stats.count;
        for (const auto& [n, v] : stats.r1) out << "  R1@" << n << "=" << v;
        out << "  mIoU=" << stats.miou << "\n";
    }
    return out.str();
}

}  // namespace vmr
