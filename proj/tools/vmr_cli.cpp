#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "vmr/captioner.hpp"
#include "vmr/datasets.hpp"
#include "vmr/pipeline.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct GlobalOptions {
    std::string config_path;
    std::vector<std::string> overrides;  // key=value
};

vmr::CliConfig resolve_config(const GlobalOptions& global) {
    vmr::CliConfig config;
    if (!global.config_path.empty()) {
        config = vmr::parse_config_file(global.config_path);
    }
    for (const auto& entry : global.overrides) {
        auto eq = entry.find('=');
        if (eq == std::string::npos) {
            throw vmr::ValidationError("--set expects key=value, got '" + entry + "'");
        }
        vmr::apply_config_entry(config, entry.substr(0, eq), entry.substr(eq + 1));
    }
    config.pipeline.validate();
    return config;
}

int report_stats(const char* stage, const vmr::StageStats& stats) {
    std::fprintf(stderr, "%s: processed=%zu skipped=%zu failed=%zu backend_calls=%llu\n",
                 stage, stats.processed, stats.skipped, stats.failed_qids.size(),
                 static_cast<unsigned long long>(stats.upstream_calls));
    return stats.failed_qids.empty() ? 0 : 1;
}

std::vector<double> parse_axis_d(const std::string& csv) {
    std::vector<double> out;
    std::stringstream ss(csv);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (!item.empty()) out.push_back(std::stod(item));
    }
    return out;
}

std::vector<int> parse_axis_i(const std::string& csv) {
    std::vector<int> out;
    for (double v : parse_axis_d(csv)) out.push_back(static_cast<int>(v));
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Zero-shot video moment retrieval pipeline"};
    app.require_subcommand(1);

    GlobalOptions global;
    app.add_option("--config", global.config_path, "Key/value config file");
    app.add_option("--set", global.overrides, "Override a config key (key=value)");

    // synth
    auto* synth = app.add_subcommand("synth", "Generate a synthetic dataset and plan");
    std::string synth_out = "synth";
    vmr::SyntheticSpec synth_spec;
    synth->add_option("--out", synth_out, "Output directory");
    synth->add_option("--seed", synth_spec.seed);
    synth->add_option("--videos", synth_spec.n_videos);
    synth->add_option("--min-duration", synth_spec.min_duration_s);
    synth->add_option("--max-duration", synth_spec.max_duration_s);
    synth->add_option("--min-spans", synth_spec.min_spans);
    synth->add_option("--max-spans", synth_spec.max_spans);

    // shared dataset/output options
    std::string dataset_path, out_path, debias_path, saliency_path, predictions_path;
    std::string report_path, work_dir = "sweep_work";

    auto* debias = app.add_subcommand("debias", "Rewrite queries (resumable)");
    debias->add_option("--dataset", dataset_path)->required();
    debias->add_option("--out", out_path)->required();

    auto* caption = app.add_subcommand("caption", "Precompute frame captions");
    caption->add_option("--dataset", dataset_path)->required();
    caption->add_option("--out", out_path)->required();

    auto* retrieve = app.add_subcommand("retrieve", "Run the full pipeline");
    retrieve->add_option("--dataset", dataset_path)->required();
    retrieve->add_option("--out", out_path)->required();
    retrieve->add_option("--debias", debias_path, "Precomputed debias file");
    retrieve->add_option("--saliency", saliency_path, "Also write saliency tracks");

    auto* evaluate = app.add_subcommand("evaluate", "Score predictions");
    evaluate->add_option("--dataset", dataset_path)->required();
    evaluate->add_option("--predictions", predictions_path)->required();
    evaluate->add_option("--debias", debias_path, "Enables category breakdown");
    evaluate->add_option("--saliency", saliency_path, "Enables VHD metrics");
    evaluate->add_option("--report", report_path, "Write the JSON report here");

    auto* sweep = app.add_subcommand("sweep", "Hyperparameter grid");
    std::string axis_n_d, axis_kappa, axis_tau, axis_lambda, axis_sigma;
    sweep->add_option("--dataset", dataset_path)->required();
    sweep->add_option("--out", out_path)->required();
    sweep->add_option("--work-dir", work_dir);
    sweep->add_option("--n-d", axis_n_d, "Comma-separated values");
    sweep->add_option("--kappa", axis_kappa, "Comma-separated values");
    sweep->add_option("--tau", axis_tau, "Comma-separated values");
    sweep->add_option("--lambda", axis_lambda, "Comma-separated values");
    sweep->add_option("--sigma", axis_sigma, "Comma-separated values");

    // Let --config/--set appear after the subcommand name too.
    for (auto* sub : {synth, debias, caption, retrieve, evaluate, sweep}) {
        sub->fallthrough();
    }

    CLI11_PARSE(app, argc, argv);

    try {
        if (synth->parsed()) {
            auto [dataset, plan] = vmr::generate_synthetic(synth_spec);
            fs::create_directories(synth_out);
            std::ofstream(fs::path(synth_out) / "dataset.jsonl")
                << vmr::serialize_synthetic(dataset);
            std::ofstream(fs::path(synth_out) / "plan.json") << plan.to_json();
            std::fprintf(stderr, "synth: %zu videos, %zu queries -> %s\n",
                         dataset.videos.size(), dataset.queries.size(),
                         synth_out.c_str());
            return 0;
        }

        auto config = resolve_config(global);
        auto dataset = vmr::load_dataset(config, dataset_path);

        if (debias->parsed()) {
            auto backends = vmr::make_backends(config.backends);
            auto stats = vmr::run_debias(dataset, config.pipeline, backends, out_path);
            return report_stats("debias", stats);
        }

        if (caption->parsed()) {
            auto backends = vmr::make_backends(config.backends);
            std::ofstream out(out_path, std::ios::trunc);
            std::size_t failed = 0;
            for (const auto& [vid, video] : dataset.videos) {
                auto captions = vmr::caption_frames(
                    video, *backends.frame_chat,
                    config.pipeline.temperatures.frame_caption, *backends.gate,
                    backends.loader, backends.frame_model);
                json texts = json::array();
                for (const auto& c : captions) {
                    texts.push_back(c.failed() ? json(nullptr) : json(c.text()));
                    if (c.failed()) ++failed;
                }
                out << json{{"vid", vid}, {"captions", texts}}.dump() << "\n";
            }
            std::fprintf(stderr, "caption: %zu videos, %zu failed frames\n",
                         dataset.videos.size(), failed);
            return failed == 0 ? 0 : 1;
        }

        if (retrieve->parsed()) {
            auto backends = vmr::make_backends(config.backends);
            vmr::RetrieveOptions options;
            options.predictions_path = out_path;
            options.saliency_path = saliency_path;
            options.debias_path = debias_path;
            auto stats =
                vmr::run_retrieve(dataset, config.pipeline, backends, options);
            return report_stats("retrieve", stats);
        }

        if (evaluate->parsed()) {
            vmr::EvaluateOptions options;
            options.debias_path = debias_path;
            options.saliency_path = saliency_path;
            auto report = vmr::run_evaluate(predictions_path, dataset, options);
            std::cout << report.to_table();
            if (!report_path.empty()) {
                std::ofstream(report_path) << report.to_json() << "\n";
            }
            return 0;
        }

        if (sweep->parsed()) {
            vmr::SweepGrid grid;
            grid.n_d = parse_axis_i(axis_n_d);
            grid.kappa = parse_axis_i(axis_kappa);
            grid.tau = parse_axis_i(axis_tau);
            grid.lambda = parse_axis_d(axis_lambda);
            grid.sigma = parse_axis_d(axis_sigma);
            auto rows = vmr::run_sweep(dataset, config.pipeline, grid, config.backends,
                                       work_dir, {});
            std::ofstream out(out_path, std::ios::trunc);
            for (const auto& row : rows) {
                json doc = {{"n_d", row.config.n_d},
                            {"kappa", row.config.kappa},
                            {"tau", row.config.tau},
                            {"lambda", row.config.lambda},
                            {"sigma", row.config.sigma},
                            {"r1", row.report.r1},
                            {"miou", row.report.miou_value},
                            {"map_avg", row.report.map_avg_value}};
                out << doc.dump() << "\n";
            }
            std::fprintf(stderr, "sweep: %zu combinations -> %s\n", rows.size(),
                         out_path.c_str());
            return 0;
        }
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
    return 0;
}
