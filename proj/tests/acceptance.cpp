// Acceptance gate: one check per release criterion, each timed and
// reported on its own line. Exits nonzero if any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "vmr/datasets.hpp"
#include "vmr/debias.hpp"
#include "vmr/metrics.hpp"
#include "vmr/pipeline.hpp"
#include "vmr/scoring.hpp"
#include "vmr/selection.hpp"
#include "vmr/span_gen.hpp"
#include "vmr/synthetic.hpp"

namespace fs = std::filesystem;
using namespace vmr;

namespace {

int failures_in_current = 0;

#define REQUIRE(cond)                                                     \
    do {                                                                  \
        if (!(cond)) {                                                    \
            ++failures_in_current;                                        \
            std::fprintf(stderr, "    FAILED %s:%d: %s\n", __FILE__,      \
                         __LINE__, #cond);                                \
        }                                                                 \
    } while (0)

#define REQUIRE_NEAR(a, b, eps)                                           \
    do {                                                                  \
        double va = (a), vb = (b);                                        \
        if (!(std::fabs(va - vb) <= (eps))) {                             \
            ++failures_in_current;                                        \
            std::fprintf(stderr, "    FAILED %s:%d: |%s - %s| = %g\n",    \
                         __FILE__, __LINE__, #a, #b, std::fabs(va - vb)); \
        }                                                                 \
    } while (0)

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() /
               ("vmr_accept_" + std::to_string(::getpid()));
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }

    fs::path write(const std::string& name, const std::string& content) const {
        fs::path p = path / name;
        std::ofstream(p) << content;
        return p;
    }
    std::string slurp(const fs::path& p) const {
        std::ifstream in(p);
        return {std::istreambuf_iterator<char>(in),
                std::istreambuf_iterator<char>()};
    }
};

// --- criterion 1: golden span-generation instance ------------------------

// 33-moment row, min 0 / max 1, eight values strictly above 0.7 but only
// five at or above 0.8, so the eta=10 / kappa=7 walk stops at the 0.7
// bin edge. On-runs 9-11 and 20-25 with one off moment at 23 (< tau).
const std::vector<double> kGoldenRow = {
    0.0, 0.1,  0.2, 0.3,  0.2, 0.1,  0.3, 0.4, 0.5,
    0.8, 1.0,  0.75,
    0.6, 0.5,  0.4, 0.3,  0.2, 0.1,  0.2, 0.3,
    0.85, 0.8, 0.72,
    0.5,
    0.9, 0.78,
    0.4, 0.3,  0.2, 0.1,  0.2, 0.3,  0.4};

void criterion_1_golden_span_generation() {
    double gamma = adaptive_threshold(kGoldenRow, 10, 7);
    REQUIRE(gamma == 0.7);  // exact, not approximate

    auto spans = segment_row(kGoldenRow, gamma, 5, 1.0);
    REQUIRE(spans.size() == 2);
    if (spans.size() == 2) {
        REQUIRE(spans[0].start_s() == 9.0);
        REQUIRE(spans[0].end_s() == 12.0);
        REQUIRE(spans[1].start_s() == 20.0);
        REQUIRE(spans[1].end_s() == 26.0);
    }
}

// --- criterion 2: span-generator oracle equivalence ----------------------

void criterion_2_span_generator_oracle() {
    std::mt19937_64 rng(2024);
    std::uniform_int_distribution<std::size_t> len(5, 200);
    std::uniform_real_distribution<double> value(-1.0, 1.0);
    std::uniform_int_distribution<int> tau_pick(1, 8);

    for (int trial = 0; trial < 1000; ++trial) {
        std::size_t n = len(rng);
        std::vector<double> row(n);
        for (auto& v : row) v = value(rng);
        int tau = tau_pick(rng);

        double gamma = adaptive_threshold(row, 10, 7);
        REQUIRE(gamma == oracle::brute_threshold(row, 10, 7));

        std::vector<bool> mask(n);
        for (std::size_t j = 0; j < n; ++j) mask[j] = row[j] > gamma;
        auto spans = segment_row(row, gamma, tau, 1.0);
        auto groups = oracle::brute_segment(mask, tau);
        REQUIRE(spans.size() == groups.size());
        for (std::size_t k = 0; k < spans.size() && k < groups.size(); ++k) {
            REQUIRE(spans[k].start_s() == static_cast<double>(groups[k].first));
            REQUIRE(spans[k].end_s() == static_cast<double>(groups[k].second + 1));
        }

        // Shift and positive-scale invariance of the emitted span set.
        std::vector<double> shifted(n), scaled(n);
        for (std::size_t j = 0; j < n; ++j) {
            shifted[j] = row[j] + 2.5;
            scaled[j] = row[j] * 4.0;
        }
        auto spans_shift =
            segment_row(shifted, adaptive_threshold(shifted, 10, 7), tau, 1.0);
        auto spans_scale =
            segment_row(scaled, adaptive_threshold(scaled, 10, 7), tau, 1.0);
        REQUIRE(spans_shift.size() == spans.size());
        REQUIRE(spans_scale.size() == spans.size());
        for (std::size_t k = 0;
             k < spans.size() && k < spans_shift.size() && k < spans_scale.size();
             ++k) {
            REQUIRE(spans_shift[k].start_s() == spans[k].start_s());
            REQUIRE(spans_shift[k].end_s() == spans[k].end_s());
            REQUIRE(spans_scale[k].start_s() == spans[k].start_s());
            REQUIRE(spans_scale[k].end_s() == spans[k].end_s());
        }
    }
}

// --- criterion 3: metric oracle equivalence ------------------------------

void criterion_3_metrics_oracle() {
    std::mt19937_64 rng(3000);
    std::uniform_real_distribution<double> start(0.0, 60.0);
    std::uniform_real_distribution<double> span_len(0.5, 25.0);
    std::uniform_real_distribution<double> score(-1.0, 1.0);

    std::vector<EvalInstance> instances;
    std::vector<oracle::Instance> reference;
    for (int q = 0; q < 500; ++q) {
        EvalInstance inst;
        std::size_t n_pred = std::uniform_int_distribution<std::size_t>(0, 10)(rng);
        std::size_t n_gt = std::uniform_int_distribution<std::size_t>(0, 4)(rng);
        for (std::size_t k = 0; k < n_pred; ++k) {
            double s = start(rng);
            inst.predictions.push_back({{s, s + span_len(rng)}, score(rng)});
        }
        for (std::size_t g = 0; g < n_gt; ++g) {
            double s = start(rng);
            inst.gt_spans.push_back({s, s + span_len(rng)});
        }
        oracle::Instance ref;
        for (const auto& p : inst.predictions) {
            ref.predictions.push_back({p.span.start_s, p.span.end_s, p.score});
        }
        for (const auto& g : inst.gt_spans) ref.gt.emplace_back(g.start_s, g.end_s);
        instances.push_back(std::move(inst));
        reference.push_back(std::move(ref));
    }

    for (double n : {0.3, 0.5, 0.7}) {
        REQUIRE_NEAR(r1_at(instances, n), oracle::brute_r1(reference, n), 1e-9);
    }
    REQUIRE_NEAR(miou(instances), oracle::brute_miou(reference), 1e-9);
    double grid_sum = 0.0;
    for (double m : map_grid()) {
        double got = map_at(instances, m);
        REQUIRE_NEAR(got, oracle::brute_map(reference, m), 1e-9);
        grid_sum += got;
    }
    REQUIRE_NEAR(map_avg(instances), grid_sum / 10.0, 1e-9);

    // Highlight detection on random per-clip saliency.
    double map_sum = 0.0, hit_sum = 0.0;
    std::size_t counted = 0;
    std::vector<std::vector<double>> preds;
    std::vector<std::vector<std::vector<int>>> gts;
    for (int v = 0; v < 500; ++v) {
        std::size_t n = std::uniform_int_distribution<std::size_t>(1, 30)(rng);
        std::vector<double> pred(n);
        std::vector<std::vector<int>> gt(n);
        std::vector<bool> rel(n);
        bool any = false;
        for (std::size_t i = 0; i < n; ++i) {
            pred[i] = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
            int s = std::uniform_int_distribution<int>(0, 5)(rng);
            gt[i] = {s};
            rel[i] = s >= 4;
            any = any || rel[i];
        }
        auto ap = vhd_ap(pred, gt);
        REQUIRE(ap.has_value() == any);
        if (any) {
            REQUIRE_NEAR(*ap, oracle::brute_binary_ap(pred, rel), 1e-9);
            REQUIRE(hit_at_1(pred, gt) == oracle::brute_hit1(pred, rel));
            map_sum += oracle::brute_binary_ap(pred, rel);
            hit_sum += oracle::brute_hit1(pred, rel);
            ++counted;
        }
        preds.push_back(std::move(pred));
        gts.push_back(std::move(gt));
    }
    REQUIRE(counted > 0);
    REQUIRE_NEAR(vhd_map(preds, gts), map_sum / static_cast<double>(counted), 1e-9);
    (void)hit_sum;
}

// --- criterion 4: NMS properties -----------------------------------------

void criterion_4_nms_properties() {
    std::mt19937_64 rng(4000);
    std::uniform_real_distribution<double> start(0.0, 50.0);
    std::uniform_real_distribution<double> span_len(1.0, 30.0);
    std::uniform_real_distribution<double> score(-1.0, 1.0);

    for (int trial = 0; trial < 1000; ++trial) {
        std::size_t n = std::uniform_int_distribution<std::size_t>(0, 18)(rng);
        double sigma = std::uniform_real_distribution<double>(0.05, 1.0)(rng);
        std::vector<ScoredSpan> spans;
        for (std::size_t i = 0; i < n; ++i) {
            double s = start(rng);
            double v = score(rng);
            spans.emplace_back(CandidateSpan(s, s + span_len(rng), 0), v, 0.0, v,
                               0.0);
        }
        auto kept = nms(spans, sigma);

        // Survivors never overlap beyond sigma.
        for (std::size_t i = 0; i < kept.size(); ++i) {
            for (std::size_t j = i + 1; j < kept.size(); ++j) {
                REQUIRE(temporal_iou(kept[i].span(), kept[j].span()) <= sigma);
            }
        }
        // Scores come out ranked.
        for (std::size_t i = 1; i < kept.size(); ++i) {
            REQUIRE(kept[i - 1].score() >= kept[i].score());
        }
        // Idempotence.
        auto twice = nms(kept, sigma);
        REQUIRE(twice.size() == kept.size());

        // Brute-force greedy oracle equality.
        std::vector<oracle::Box> boxes;
        for (const auto& s : spans) {
            boxes.push_back({s.span().start_s(), s.span().end_s(), s.score()});
        }
        auto expected = oracle::brute_nms(boxes, sigma);
        REQUIRE(kept.size() == expected.size());
        for (std::size_t k = 0; k < kept.size() && k < expected.size(); ++k) {
            REQUIRE(kept[k].span().start_s() == expected[k].start);
            REQUIRE(kept[k].span().end_s() == expected[k].end);
            REQUIRE(kept[k].score() == expected[k].score);
        }
    }
}

// --- criterion 5: end-to-end synthetic run -------------------------------

void criterion_5_end_to_end_synthetic() {
    SyntheticSpec spec;  // seed 1, 50 videos, 60-120 s, 1-2 spans
    auto [dataset, plan] = generate_synthetic(spec);
    REQUIRE(dataset.queries.size() == 50);

    TempDir dir;
    BackendConfig backend_config;
    backend_config.kind = BackendConfig::Kind::Synthetic;
    backend_config.plan_path = dir.write("plan.json", plan.to_json());
    auto backends = make_backends(backend_config);

    PipelineConfig config;  // published defaults
    std::vector<EvalInstance> instances;
    std::vector<std::vector<TimeSpan>> candidate_sets;
    std::vector<std::vector<TimeSpan>> gt_sets;
    for (const auto& query : dataset.queries) {
        const auto& video = dataset.video_for(query);
        auto rewrites =
            debias_query(query, *backends.debias_chat, config.n_d,
                         config.temperatures.debias, backends.debias_model);
        auto result = run_query(query, video, rewrites, config, backends, false);

        EvalInstance inst;
        inst.gt_spans = query.gt_spans();
        for (const auto& p : result.predictions) {
            inst.predictions.push_back(
                {{p.span().start_s(), p.span().end_s()}, p.score()});
        }
        instances.push_back(std::move(inst));

        std::vector<TimeSpan> candidates;
        for (const auto& c : result.candidates) {
            candidates.push_back({c.start_s(), c.end_s()});
        }
        candidate_sets.push_back(std::move(candidates));
        gt_sets.push_back(query.gt_spans());
    }

    double pipeline_r1 = r1_at(instances, 0.5);
    double pipeline_miou = miou(instances);
    REQUIRE(pipeline_r1 >= 0.90);
    REQUIRE(pipeline_miou >= 0.70);

    auto bound = oracle_bound(candidate_sets, gt_sets, {0.5});
    REQUIRE(bound.r1.at(0.5) >= pipeline_r1);
    std::fprintf(stderr,
                 "    synthetic run: R1@0.5 = %.3f, mIoU = %.3f, bound = %.3f\n",
                 pipeline_r1, pipeline_miou, bound.r1.at(0.5));
}

// --- criterion 6: score combination arithmetic ---------------------------

void criterion_6_score_combination() {
    int case_id = 0;
    for (double lambda : {0.0, 0.2, 0.5, 0.8, 1.0}) {
        for (double s_span : {-1.0, -0.3, 0.0, 0.4, 1.0}) {
            for (double frac : {0.1, 0.35, 0.6, 0.95}) {
                double duration = 100.0;
                CandidateSpan span(5.0, 5.0 + frac * duration, 0);
                double got = combined_score(s_span, span, duration, lambda);
                double expected = (1.0 - lambda) * s_span + lambda * frac;
                REQUIRE_NEAR(got, expected, 1e-12);
                if (lambda == 0.0) REQUIRE_NEAR(got, s_span, 1e-12);
                ++case_id;
            }
        }
    }
    REQUIRE(case_id == 100);
}

// --- criterion 7: determinism and cache identity -------------------------

void criterion_7_cache_determinism() {
    SyntheticSpec spec;
    spec.seed = 5;
    spec.n_videos = 6;
    auto [dataset, plan] = generate_synthetic(spec);

    TempDir dir;
    BackendConfig backend_config;
    backend_config.kind = BackendConfig::Kind::Synthetic;
    backend_config.plan_path = dir.write("plan.json", plan.to_json());
    backend_config.cache_dir = dir.path / "cache";

    RetrieveOptions options;
    options.predictions_path = dir.path / "pred.jsonl";
    options.saliency_path = dir.path / "sal.jsonl";

    auto cold = make_backends(backend_config);
    auto cold_stats = run_retrieve(dataset, PipelineConfig{}, cold, options);
    REQUIRE(cold_stats.failed_qids.empty());
    REQUIRE(cold_stats.upstream_calls > 0);
    auto first_pred = dir.slurp(options.predictions_path);
    auto first_sal = dir.slurp(options.saliency_path);

    auto warm = make_backends(backend_config);
    auto warm_stats = run_retrieve(dataset, PipelineConfig{}, warm, options);
    REQUIRE(warm_stats.failed_qids.empty());
    REQUIRE(warm_stats.upstream_calls == 0);
    REQUIRE(dir.slurp(options.predictions_path) == first_pred);
    REQUIRE(dir.slurp(options.saliency_path) == first_sal);
}

// --- criterion 8: published defaults -------------------------------------

void criterion_8_config_defaults() {
    PipelineConfig config;
    REQUIRE(config.n_d == 3);
    REQUIRE(config.eta == 10);
    REQUIRE(config.kappa == 7);
    REQUIRE(config.tau == 5);
    REQUIRE(config.lambda == 0.2);
    REQUIRE(config.sigma == 0.9);
    REQUIRE(config.temperatures.debias == 0.3);
    REQUIRE(config.temperatures.frame_caption == 0.2);
    REQUIRE(config.temperatures.span_caption == 0.2);
    REQUIRE(config.fps.charades_sta == 1.0);
    REQUIRE(config.fps.activitynet == 1.0);
    REQUIRE(config.fps.qvhighlights == 0.5);
}

// --- criterion 9: dataset loaders ----------------------------------------

void criterion_9_dataset_loaders() {
    TempDir dir;

    // Charades-STA, including the annotation style of video Y1BWP.
    auto charades = dir.write(
        "charades.txt",
        "Y1BWP 0.0 6.9##a person is putting a book on a shelf.\n"
        "Y1BWP 12.2 30.8##person closes the door.\n"
        "AXLY2 3.5 10##person turns on the light.\n");
    auto ds = load_charades_sta(charades);
    REQUIRE(ds.queries.size() == 3);
    REQUIRE(ds.videos.count("Y1BWP") == 1);
    auto text = serialize_charades_sta(ds);
    auto again = load_charades_sta(dir.write("charades2.txt", text));
    REQUIRE(serialize_charades_sta(again) == text);
    bool threw = false;
    try {
        load_charades_sta(dir.write("bad.txt", "VID no numbers##q\n"));
    } catch (const ParseError& e) {
        threw = e.line() == 1;
    }
    REQUIRE(threw);

    // QVHighlights.
    auto qv = dir.write(
        "qv.jsonl",
        R"({"qid": "q1", "query": "a man waves", "vid": "v1", "duration": 100, "relevant_windows": [[10, 30]], "saliency_scores": [[1,4,2]]})"
        "\n");
    auto qds = load_qvhighlights(qv);
    REQUIRE(qds.queries.size() == 1);
    auto qtext = serialize_qvhighlights(qds);
    REQUIRE(serialize_qvhighlights(load_qvhighlights(
                dir.write("qv2.jsonl", qtext))) == qtext);
    threw = false;
    try {
        load_qvhighlights(dir.write("qvbad.jsonl",
                                    R"({"qid": "q", "query": "t", "vid": "v"})"
                                    "\n"));
    } catch (const ParseError&) {
        threw = true;
    }
    REQUIRE(threw);

    // ActivityNet-Captions.
    auto anet = dir.write(
        "anet.json",
        R"({"v_a": {"duration": 80, "timestamps": [[0, 20]], "sentences": ["a dog runs"]}})");
    auto ads = load_activitynet(anet);
    REQUIRE(ads.queries.size() == 1);
    auto atext = serialize_activitynet(ads);
    REQUIRE(serialize_activitynet(load_activitynet(
                dir.write("anet2.json", atext))) == atext);
    threw = false;
    try {
        load_activitynet(dir.write(
            "anetbad.json",
            R"({"v_b": {"duration": 60, "timestamps": [[0, 10]], "sentences": ["a", "b"]}})"));
    } catch (const ParseError&) {
        threw = true;
    }
    REQUIRE(threw);
}

// --- runner ---------------------------------------------------------------

struct Criterion {
    const char* name;
    void (*run)();
    double budget_ms;
};

}  // namespace

int main() {
    const Criterion criteria[] = {
        {"1 span-generator golden instance", criterion_1_golden_span_generation, 1.0},
        {"2 span-generator oracle equivalence", criterion_2_span_generator_oracle, 5000.0},
        {"3 metric oracle equivalence", criterion_3_metrics_oracle, 10000.0},
        {"4 nms properties", criterion_4_nms_properties, 5000.0},
        {"5 end-to-end synthetic run", criterion_5_end_to_end_synthetic, 30000.0},
        {"6 score combination arithmetic", criterion_6_score_combination, 1000.0},
        {"7 cache determinism", criterion_7_cache_determinism, 30000.0},
        {"8 config defaults", criterion_8_config_defaults, 1000.0},
        {"9 dataset loaders", criterion_9_dataset_loaders, 5000.0},
    };

    int failed = 0;
    for (const auto& c : criteria) {
        failures_in_current = 0;
        auto t0 = std::chrono::steady_clock::now();
        try {
            c.run();
        } catch (const std::exception& e) {
            ++failures_in_current;
            std::fprintf(stderr, "    EXCEPTION: %s\n", e.what());
        }
        auto t1 = std::chrono::steady_clock::now();
        double ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
        if (ms > c.budget_ms) {
            ++failures_in_current;
            std::fprintf(stderr, "    OVER BUDGET: %.2f ms > %.0f ms\n", ms,
                         c.budget_ms);
        }
        bool ok = failures_in_current == 0;
        std::printf("criterion %-40s %s (%.2f ms)\n", c.name,
                    ok ? "PASS" : "FAIL", ms);
        if (!ok) ++failed;
    }
    if (failed) {
        std::printf("%d criterion(s) failed\n", failed);
        return 1;
    }
    std::printf("all criteria passed\n");
    return 0;
}
