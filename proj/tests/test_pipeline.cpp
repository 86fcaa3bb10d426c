#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "vmr/pipeline.hpp"
#include "vmr/selection.hpp"

using namespace vmr;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() /
               ("vmr_pipe_" + std::to_string(::getpid()));
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
        return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
    }
};

// A small deterministic world: dataset, plan on disk, synthetic backends.
struct Fixture {
    TempDir dir;
    Dataset dataset;
    BackendConfig backend_config;

    explicit Fixture(std::size_t n_videos = 6, bool cached = false) {
        SyntheticSpec spec;
        spec.seed = 21;
        spec.n_videos = n_videos;
        auto [ds, plan] = generate_synthetic(spec);
        dataset = std::move(ds);
        backend_config.kind = BackendConfig::Kind::Synthetic;
        backend_config.plan_path = dir.write("plan.json", plan.to_json());
        if (cached) {
            backend_config.cache_dir = dir.path / "cache";
        }
    }
};

}  // namespace

TEST_CASE("config files parse key = value lines with comments") {
    TempDir dir;
    auto file = dir.write("run.conf",
                          "# pipeline\n"
                          "n_d = 5\n"
                          "kappa = 9   # inline comment\n"
                          "lambda = 0.3\n"
                          "backend = synthetic\n"
                          "plan_path = \"/tmp/plan.json\"\n"
                          "dataset_format = charades\n"
                          "caption.model = pixtral\n"
                          "lenient_parse = true\n");
    auto config = parse_config_file(file);
    CHECK(config.pipeline.n_d == 5);
    CHECK(config.pipeline.kappa == 9);
    CHECK(config.pipeline.lambda == doctest::Approx(0.3));
    CHECK(config.pipeline.tau == 5);  // untouched default
    CHECK(config.backends.kind == BackendConfig::Kind::Synthetic);
    CHECK(config.backends.plan_path == "/tmp/plan.json");
    CHECK(config.backends.caption_endpoint.model_name == "pixtral");
    CHECK(config.dataset_format == "charades");
    CHECK(config.lenient_parse);

    try {
        parse_config_file(dir.write("bad.conf", "n_d = 3\nno_such_key = 1\n"));
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(e.line() == 2);
        CHECK(std::string(e.what()).find("no_such_key") != std::string::npos);
    }
    CHECK_THROWS_AS(parse_config_file(dir.write("eq.conf", "just words\n")),
                    ParseError);
}

TEST_CASE("explicit overrides win over file values") {
    TempDir dir;
    auto config = parse_config_file(dir.write("run.conf", "n_d = 5\n"));
    apply_config_entry(config, "n_d", "7");
    CHECK(config.pipeline.n_d == 7);
    CHECK_THROWS_AS(apply_config_entry(config, "caption.bogus", "x"),
                    ValidationError);
}

TEST_CASE("synthetic backends answer all three stages") {
    Fixture fx(3);
    auto backends = make_backends(fx.backend_config);
    CHECK(backends.debias_chat == backends.frame_chat);
    CHECK(backends.upstream_calls() == 0);  // no cache wrappers

    const auto& query = fx.dataset.queries.front();
    const auto& video = fx.dataset.video_for(query);
    auto rewrites = DebiasedQuerySet(query.qid(), query.raw_text(),
                                     {query.raw_text()}, false);
    auto result = run_query(query, video, rewrites, PipelineConfig{}, backends, true);
    CHECK(result.qid == query.qid());
    CHECK(result.saliency.size() == video.frame_count());
    REQUIRE(!result.predictions.empty());

    // The top prediction should land on one of the planted spans.
    const auto& top = result.predictions.front().span();
    double iou = 0.0;
    for (const auto& gt : query.gt_spans()) {
        iou = std::max(iou,
                       temporal_iou(TimeSpan{top.start_s(), top.end_s()}, gt));
    }
    CHECK(iou > 0.7);
}

TEST_CASE("debias stage writes jsonl and resumes without rework") {
    Fixture fx(4);
    auto out = fx.dir.path / "debias.jsonl";

    auto backends = make_backends(fx.backend_config);
    auto stats = run_debias(fx.dataset, PipelineConfig{}, backends, out);
    CHECK(stats.processed == 4);
    CHECK(stats.skipped == 0);
    CHECK(stats.failed_qids.empty());

    auto loaded = load_debias_file(out);
    REQUIRE(loaded.size() == 4);
    for (const auto& q : fx.dataset.queries) {
        REQUIRE(loaded.count(q.qid()) == 1);
        const auto& set = loaded.at(q.qid());
        CHECK(set.raw_text() == q.raw_text());
        CHECK(set.rewrites().size() == 3);
        CHECK(set.rewrites()[0] == q.raw_text());
    }

    // Second run skips everything already on disk.
    auto again = make_backends(fx.backend_config);
    auto stats2 = run_debias(fx.dataset, PipelineConfig{}, again, out);
    CHECK(stats2.processed == 0);
    CHECK(stats2.skipped == 4);
    CHECK(load_debias_file(out).size() == 4);
}

TEST_CASE("retrieve writes predictions, saliency and a manifest") {
    Fixture fx(4);
    auto backends = make_backends(fx.backend_config);

    RetrieveOptions options;
    options.predictions_path = fx.dir.path / "pred.jsonl";
    options.saliency_path = fx.dir.path / "sal.jsonl";
    auto stats = run_retrieve(fx.dataset, PipelineConfig{}, backends, options);
    CHECK(stats.processed == 4);
    CHECK(stats.failed_qids.empty());

    auto preds = load_predictions(options.predictions_path);
    REQUIRE(preds.size() == 4);
    for (const auto& q : fx.dataset.queries) {
        REQUIRE(preds.count(q.qid()) == 1);
        CHECK(!preds.at(q.qid()).empty());
    }
    auto saliency = load_saliency(options.saliency_path);
    REQUIRE(saliency.size() == 4);
    for (const auto& q : fx.dataset.queries) {
        CHECK(saliency.at(q.qid()).size() ==
              fx.dataset.video_for(q).frame_count());
    }

    // Manifest sits next to the predictions and names the backends.
    auto manifest = fx.dir.slurp(fs::path(options.predictions_path.string() +
                                          ".manifest.json"));
    CHECK(manifest.find("config_hash") != std::string::npos);
    CHECK(manifest.find("dataset_hash") != std::string::npos);
    CHECK(manifest.find("synthetic") != std::string::npos);
}

TEST_CASE("evaluate scores the retrieve output end to end") {
    Fixture fx(6);
    auto backends = make_backends(fx.backend_config);
    RetrieveOptions options;
    options.predictions_path = fx.dir.path / "pred.jsonl";
    REQUIRE(run_retrieve(fx.dataset, PipelineConfig{}, backends, options)
                .failed_qids.empty());

    auto report = run_evaluate(options.predictions_path, fx.dataset, {});
    CHECK(report.query_count == 6);
    // Planted phrases are unambiguous, so recovery should be high even
    // on this small set.
    CHECK(report.r1.at(0.5) > 0.5);
    CHECK(report.miou_value > 0.5);

    // Orphan qids in the predictions file are fatal and named.
    std::ofstream(options.predictions_path, std::ios::app)
        << R"({"qid": "ghost#1", "spans": [[0.0, 1.0, 0.5]]})"
        << "\n";
    try {
        run_evaluate(options.predictions_path, fx.dataset, {});
        FAIL("expected ValidationError");
    } catch (const ValidationError& e) {
        CHECK(std::string(e.what()).find("ghost#1") != std::string::npos);
    }
}

TEST_CASE("evaluate on hand-written perfect predictions scores 1.0") {
    Fixture fx(4);
    std::ostringstream lines;
    for (const auto& q : fx.dataset.queries) {
        nlohmann::json spans = nlohmann::json::array();
        for (const auto& s : q.gt_spans()) {
            spans.push_back({s.start_s, s.end_s, 1.0});
        }
        lines << nlohmann::json{{"qid", q.qid()}, {"spans", spans}}.dump() << "\n";
    }
    auto file = fx.dir.write("perfect.jsonl", lines.str());
    auto report = run_evaluate(file, fx.dataset, {});
    CHECK(report.r1.at(0.7) == doctest::Approx(1.0));
    CHECK(report.miou_value == doctest::Approx(1.0));
    CHECK(report.map_avg_value == doctest::Approx(1.0));

    // Queries with no prediction line count as misses, not errors.
    auto partial = fx.dir.write("partial.jsonl", "");
    report = run_evaluate(partial, fx.dataset, {});
    CHECK(report.r1.at(0.5) == doctest::Approx(0.0));
    CHECK(report.miou_value == doctest::Approx(0.0));
}

TEST_CASE("caching backends make a second run hit upstream zero times") {
    Fixture fx(3, /*cached=*/true);

    RetrieveOptions options;
    options.predictions_path = fx.dir.path / "pred.jsonl";

    auto cold = make_backends(fx.backend_config);
    auto cold_stats = run_retrieve(fx.dataset, PipelineConfig{}, cold, options);
    REQUIRE(cold_stats.failed_qids.empty());
    CHECK(cold_stats.upstream_calls > 0);
    auto first = fx.dir.slurp(options.predictions_path);

    auto warm = make_backends(fx.backend_config);
    auto warm_stats = run_retrieve(fx.dataset, PipelineConfig{}, warm, options);
    REQUIRE(warm_stats.failed_qids.empty());
    CHECK(warm_stats.upstream_calls == 0);
    CHECK(fx.dir.slurp(options.predictions_path) == first);
}

TEST_CASE("sweep covers the cross product and matches a direct run") {
    Fixture fx(3, /*cached=*/true);

    SweepGrid grid;
    grid.lambda = {0.0, 0.2};
    grid.sigma = {0.9};
    auto rows = run_sweep(fx.dataset, PipelineConfig{}, grid, fx.backend_config,
                          fx.dir.path / "sweep", {});
    REQUIRE(rows.size() == 2);
    CHECK(rows[0].config.lambda == doctest::Approx(0.0));
    CHECK(rows[1].config.lambda == doctest::Approx(0.2));
    CHECK(rows[0].config.sigma == doctest::Approx(0.9));

    // The base-config row equals an independent retrieve+evaluate.
    auto backends = make_backends(fx.backend_config);
    RetrieveOptions options;
    options.predictions_path = fx.dir.path / "direct.jsonl";
    run_retrieve(fx.dataset, PipelineConfig{}, backends, options);
    auto direct = run_evaluate(options.predictions_path, fx.dataset, {});
    CHECK(rows[1].report.miou_value == doctest::Approx(direct.miou_value));
    CHECK(rows[1].report.r1.at(0.5) == doctest::Approx(direct.r1.at(0.5)));
}

TEST_CASE("load_dataset dispatches on the configured format") {
    TempDir dir;
    CliConfig config;

    SyntheticSpec spec;
    spec.n_videos = 2;
    auto [ds, plan] = generate_synthetic(spec);
    auto synth = dir.write("s.jsonl", serialize_synthetic(ds));
    CHECK(load_dataset(config, synth).queries.size() == 2);

    config.dataset_format = "charades";
    auto charades = dir.write("c.txt", "VID 0.0 5.0##query text\n");
    auto loaded = load_dataset(config, charades);
    CHECK(loaded.queries.size() == 1);
    CHECK(loaded.videos.at("VID").fps() == doctest::Approx(1.0));

    config.dataset_fps = 2.0;
    CHECK(load_dataset(config, charades).videos.at("VID").fps() ==
          doctest::Approx(2.0));

    config.dataset_format = "nope";
    CHECK_THROWS_AS(load_dataset(config, charades), ValidationError);
}
