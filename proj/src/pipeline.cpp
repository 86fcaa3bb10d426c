#include "vmr/pipeline.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "vmr/debias.hpp"
#include "vmr/scoring.hpp"
#include "vmr/selection.hpp"
#include "vmr/span_gen.hpp"

namespace vmr {

namespace fs = std::filesystem;
using nlohmann::json;

std::uint64_t BackendSet::upstream_calls() const {
    std::uint64_t total = 0;
    for (const auto& c : chat_caches) total += c->upstream_calls();
    if (embed_cache) total += embed_cache->upstream_calls();
    return total;
}

BackendSet make_backends(const BackendConfig& config) {
    BackendSet set;
    set.gate = std::make_shared<RequestGate>(config.max_in_flight);
    set.loader = config.load_frame_files ? file_frame_loader() : null_frame_loader();

    std::shared_ptr<ResponseCache> cache;
    if (!config.cache_dir.empty()) {
        cache = std::make_shared<ResponseCache>(config.cache_dir);
    }
    auto wrap_chat = [&](std::shared_ptr<ChatBackend> upstream) {
        if (!cache) return upstream;
        auto caching = std::make_shared<CachingChatBackend>(std::move(upstream), cache);
        set.chat_caches.push_back(caching);
        return std::static_pointer_cast<ChatBackend>(caching);
    };

    if (config.kind == BackendConfig::Kind::Synthetic) {
        std::ifstream in(config.plan_path);
        if (!in) {
            throw ValidationError("cannot open synthetic plan: " +
                                  config.plan_path.string());
        }
        std::ostringstream buf;
        buf << in.rdbuf();
        auto chat = std::make_shared<SyntheticChatBackend>(
            SyntheticPlan::from_json(buf.str()));
        auto shared = wrap_chat(chat);
        set.debias_chat = set.frame_chat = set.span_chat = shared;
        std::shared_ptr<EmbedBackend> embed =
            std::make_shared<SyntheticEmbedBackend>(config.synthetic_dim);
        if (cache) {
            set.embed_cache = std::make_shared<CachingEmbedBackend>(embed, cache);
            embed = set.embed_cache;
        }
        set.embedder = embed;
        return set;
    }

    set.debias_chat = wrap_chat(std::make_shared<HttpChatBackend>(config.debias_endpoint));
    set.frame_chat = wrap_chat(std::make_shared<HttpChatBackend>(config.caption_endpoint));
    set.span_chat = wrap_chat(std::make_shared<HttpChatBackend>(config.video_endpoint));
    set.debias_model = config.debias_endpoint.model_name;
    set.frame_model = config.caption_endpoint.model_name;
    set.span_model = config.video_endpoint.model_name;
    std::shared_ptr<EmbedBackend> embed =
        std::make_shared<HttpEmbedBackend>(config.embed_endpoint);
    if (cache) {
        set.embed_cache = std::make_shared<CachingEmbedBackend>(embed, cache);
        embed = set.embed_cache;
    }
    set.embedder = embed;
    return set;
}

QueryResult run_query(const QueryRecord& query, const VideoRecord& video,
                      const DebiasedQuerySet& rewrites, const PipelineConfig& config,
                      BackendSet& backends, bool with_saliency) {
    auto captions =
        caption_frames(video, *backends.frame_chat, config.temperatures.frame_caption,
                       *backends.gate, backends.loader, backends.frame_model);
    auto scores = frame_scores(rewrites, captions, *backends.embedder);

    QueryResult result;
    result.qid = query.qid();
    if (with_saliency) result.saliency = saliency_track(scores);

    result.candidates =
        generate_candidates(scores, config, video.fps(), video.duration_s());

    std::vector<Caption> span_captions;
    span_captions.reserve(result.candidates.size());
    for (const auto& candidate : result.candidates) {
        try {
            span_captions.push_back(caption_span(
                video, candidate, *backends.span_chat, config.temperatures.span_caption,
                config.span_caption_max_frames, backends.loader, backends.span_model));
        } catch (const BackendError&) {
            span_captions.push_back(Caption::failed_for("span", ""));
        }
    }
    result.predictions = select_spans(result.candidates, span_captions, rewrites,
                                      *backends.embedder, config, video.duration_s());
    return result;
}

namespace {

json debias_to_json(const DebiasedQuerySet& set) {
    return json{{"qid", set.qid()},
                {"raw", set.raw_text()},
                {"rewrites", set.rewrites()},
                {"fallback", set.fallback_used()}};
}

DebiasedQuerySet debias_from_json(const json& doc) {
    return DebiasedQuerySet(doc.at("qid").get<std::string>(),
                            doc.at("raw").get<std::string>(),
                            doc.at("rewrites").get<std::vector<std::string>>(),
                            doc.at("fallback").get<bool>());
}

std::set<std::string> existing_qids(const fs::path& path) {
    std::set<std::string> qids;
    std::ifstream in(path);
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        json doc = json::parse(line, nullptr, false);
        if (!doc.is_discarded() && doc.contains("qid")) {
            qids.insert(doc["qid"].get<std::string>());
        }
    }
    return qids;
}

}  // namespace

StageStats run_debias(const Dataset& dataset, const PipelineConfig& config,
                      BackendSet& backends, const fs::path& out_path) {
    config.validate();
    StageStats stats;
    auto done = existing_qids(out_path);
    std::ofstream out(out_path, std::ios::app);
    if (!out) throw std::runtime_error("cannot open output: " + out_path.string());

    for (const auto& query : dataset.queries) {
        if (done.count(query.qid())) {
            ++stats.skipped;
            continue;
        }
        try {
            auto set = debias_query(query, *backends.debias_chat, config.n_d,
                                    config.temperatures.debias, backends.debias_model);
            out << debias_to_json(set).dump() << "\n";
            ++stats.processed;
        } catch (const std::exception& e) {
            std::fprintf(stderr, "debias %s: %s\n", query.qid().c_str(), e.what());
            stats.failed_qids.push_back(query.qid());
        }
    }
    stats.upstream_calls = backends.upstream_calls();
    return stats;
}

std::map<std::string, DebiasedQuerySet> load_debias_file(const fs::path& path) {
    std::map<std::string, DebiasedQuerySet> out;
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open debias file: " + path.string());
    std::string line;
    long lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        json doc = json::parse(line, nullptr, false);
        if (doc.is_discarded()) throw ParseError("invalid JSON in debias file", lineno);
        auto set = debias_from_json(doc);
        out.emplace(set.qid(), std::move(set));
    }
    return out;
}

StageStats run_retrieve(const Dataset& dataset, const PipelineConfig& config,
                        BackendSet& backends, const RetrieveOptions& options) {
    config.validate();
    StageStats stats;

    std::map<std::string, DebiasedQuerySet> precomputed;
    if (!options.debias_path.empty()) {
        precomputed = load_debias_file(options.debias_path);
    }

    std::ofstream pred_out(options.predictions_path, std::ios::trunc);
    if (!pred_out) {
        throw std::runtime_error("cannot open output: " +
                                 options.predictions_path.string());
    }
    std::ofstream saliency_out;
    bool with_saliency = !options.saliency_path.empty();
    if (with_saliency) {
        saliency_out.open(options.saliency_path, std::ios::trunc);
        if (!saliency_out) {
            throw std::runtime_error("cannot open output: " +
                                     options.saliency_path.string());
        }
    }

    for (const auto& query : dataset.queries) {
        try {
            const auto& video = dataset.video_for(query);
            auto it = precomputed.find(query.qid());
            DebiasedQuerySet rewrites =
                it != precomputed.end()
                    ? it->second
                    : debias_query(query, *backends.debias_chat, config.n_d,
                                   config.temperatures.debias, backends.debias_model);

            auto result = run_query(query, video, rewrites, config, backends,
                                    with_saliency);

            json spans = json::array();
            for (const auto& p : result.predictions) {
                spans.push_back({p.span().start_s(), p.span().end_s(), p.score()});
            }
            pred_out << json{{"qid", result.qid}, {"spans", spans}}.dump() << "\n";
            if (with_saliency) {
                saliency_out << json{{"qid", result.qid},
                                     {"saliency", result.saliency}}
                                    .dump()
                             << "\n";
            }
            ++stats.processed;
        } catch (const std::exception& e) {
            std::fprintf(stderr, "retrieve %s: %s\n", query.qid().c_str(), e.what());
            stats.failed_qids.push_back(query.qid());
        }
    }

    auto manifest = options.manifest_path.empty()
                        ? fs::path(options.predictions_path.string() + ".manifest.json")
                        : options.manifest_path;
    write_manifest(manifest, config, backends, dataset);

    stats.upstream_calls = backends.upstream_calls();
    return stats;
}

std::map<std::string, std::vector<Prediction>> load_predictions(const fs::path& path) {
    std::map<std::string, std::vector<Prediction>> out;
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open predictions: " + path.string());
    std::string line;
    long lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        json doc = json::parse(line, nullptr, false);
        if (doc.is_discarded()) throw ParseError("invalid JSON in predictions", lineno);
        std::vector<Prediction> preds;
        for (const auto& s : doc.at("spans")) {
            preds.push_back({{s.at(0).get<double>(), s.at(1).get<double>()},
                             s.at(2).get<double>()});
        }
        out[doc.at("qid").get<std::string>()] = std::move(preds);
    }
    return out;
}

std::map<std::string, std::vector<double>> load_saliency(const fs::path& path) {
    std::map<std::string, std::vector<double>> out;
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open saliency file: " + path.string());
    std::string line;
    long lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        json doc = json::parse(line, nullptr, false);
        if (doc.is_discarded()) throw ParseError("invalid JSON in saliency file", lineno);
        out[doc.at("qid").get<std::string>()] =
            doc.at("saliency").get<std::vector<double>>();
    }
    return out;
}

EvalReport run_evaluate(const fs::path& predictions_path, const Dataset& dataset,
                        const EvaluateOptions& options) {
    auto predictions = load_predictions(predictions_path);

    // Every prediction must refer to a known query.
    std::set<std::string> known;
    for (const auto& q : dataset.queries) known.insert(q.qid());
    std::vector<std::string> orphans;
    for (const auto& [qid, _] : predictions) {
        if (!known.count(qid)) orphans.push_back(qid);
    }
    if (!orphans.empty()) {
        std::string listing;
        for (const auto& q : orphans) listing += " " + q;
        throw ValidationError("predictions contain unknown qids:" + listing);
    }

    std::vector<EvalInstance> instances;
    instances.reserve(dataset.queries.size());
    for (const auto& q : dataset.queries) {
        EvalInstance inst;
        inst.gt_spans = q.gt_spans();
        if (auto it = predictions.find(q.qid()); it != predictions.end()) {
            inst.predictions = it->second;
        }
        instances.push_back(std::move(inst));
    }

    std::vector<QueryCategory> categories;
    if (!options.debias_path.empty()) {
        auto debiased = load_debias_file(options.debias_path);
        std::vector<const DebiasedQuerySet*> refs;
        refs.reserve(dataset.queries.size());
        for (const auto& q : dataset.queries) {
            auto it = debiased.find(q.qid());
            refs.push_back(it != debiased.end() ? &it->second : nullptr);
        }
        categories = categorize_queries(dataset.queries, refs);
    }

    auto report = build_report(instances, options.r1_thresholds, categories);

    if (!options.saliency_path.empty()) {
        auto saliency = load_saliency(options.saliency_path);
        std::vector<std::vector<double>> preds;
        std::vector<std::vector<std::vector<int>>> gts;
        std::size_t hits = 0, hit_count = 0;
        for (const auto& q : dataset.queries) {
            if (q.gt_saliency().empty()) continue;
            auto it = saliency.find(q.qid());
            if (it == saliency.end()) continue;
            preds.push_back(it->second);
            gts.push_back(q.gt_saliency());
            hits += static_cast<std::size_t>(hit_at_1(it->second, q.gt_saliency()));
            ++hit_count;
        }
        if (hit_count > 0) {
            report.hit_at_1_value =
                static_cast<double>(hits) / static_cast<double>(hit_count);
            report.vhd_map_value = vhd_map(preds, gts);
        }
    }
    return report;
}

std::vector<SweepRow> run_sweep(const Dataset& dataset, const PipelineConfig& base,
                                const SweepGrid& grid, const BackendConfig& backend_config,
                                const fs::path& work_dir,
                                const EvaluateOptions& eval_options) {
    fs::create_directories(work_dir);
    auto axis_or = [](auto values, auto fallback) {
        if (values.empty()) values.push_back(fallback);
        return values;
    };
    auto n_d_axis = axis_or(grid.n_d, base.n_d);
    auto kappa_axis = axis_or(grid.kappa, base.kappa);
    auto tau_axis = axis_or(grid.tau, base.tau);
    auto lambda_axis = axis_or(grid.lambda, base.lambda);
    auto sigma_axis = axis_or(grid.sigma, base.sigma);

    std::vector<SweepRow> rows;
    std::size_t combo = 0;
    for (int n_d : n_d_axis) {
        for (int kappa : kappa_axis) {
            for (int tau : tau_axis) {
                for (double lambda : lambda_axis) {
                    for (double sigma : sigma_axis) {
                        PipelineConfig config = base;
                        config.n_d = n_d;
                        config.kappa = kappa;
                        config.tau = tau;
                        config.lambda = lambda;
                        config.sigma = sigma;

                        auto backends = make_backends(backend_config);
                        RetrieveOptions options;
                        options.predictions_path =
                            work_dir / ("sweep_" + std::to_string(combo) + ".jsonl");
                        run_retrieve(dataset, config, backends, options);
                        auto eval = eval_options;
                        eval.saliency_path.clear();
                        rows.push_back(
                            {config,
                             run_evaluate(options.predictions_path, dataset, eval)});
                        ++combo;
                    }
                }
            }
        }
    }
    return rows;
}

CliConfig parse_config_file(const fs::path& path) {
    CliConfig config;
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open config file: " + path.string());
    std::string line;
    long lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        auto trim = [](std::string s) {
            auto b = s.find_first_not_of(" \t\r");
            if (b == std::string::npos) return std::string();
            auto e = s.find_last_not_of(" \t\r");
            return s.substr(b, e - b + 1);
        };
        line = trim(line);
        if (line.empty()) continue;
        auto eq = line.find('=');
        if (eq == std::string::npos) throw ParseError("expected 'key = value'", lineno);
        std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));
        if (value.size() >= 2 && value.front() == '"' && value.back() == '"') {
            value = value.substr(1, value.size() - 2);
        }
        try {
            apply_config_entry(config, key, value);
        } catch (const ValidationError& e) {
            throw ParseError(e.what(), lineno);
        }
    }
    return config;
}

void apply_config_entry(CliConfig& config, const std::string& key,
                        const std::string& value) {
    auto as_int = [&] { return std::stoi(value); };
    auto as_double = [&] { return std::stod(value); };
    auto endpoint_field = [&](HttpEndpoint& ep, const std::string& field) {
        if (field == "base_url") ep.base_url = value;
        else if (field == "model") ep.model_name = value;
        else if (field == "api_key_env") ep.api_key_env = value;
        else throw ValidationError("unknown endpoint field '" + field + "'");
    };

    if (key == "n_d") config.pipeline.n_d = as_int();
    else if (key == "eta") config.pipeline.eta = as_int();
    else if (key == "kappa") config.pipeline.kappa = as_int();
    else if (key == "tau") config.pipeline.tau = as_int();
    else if (key == "lambda") config.pipeline.lambda = as_double();
    else if (key == "sigma") config.pipeline.sigma = as_double();
    else if (key == "temperature_debias") config.pipeline.temperatures.debias = as_double();
    else if (key == "temperature_frame") config.pipeline.temperatures.frame_caption = as_double();
    else if (key == "temperature_span") config.pipeline.temperatures.span_caption = as_double();
    else if (key == "span_caption_max_frames") config.pipeline.span_caption_max_frames = as_int();
    else if (key == "backend") {
        if (value == "synthetic") config.backends.kind = BackendConfig::Kind::Synthetic;
        else if (value == "http") config.backends.kind = BackendConfig::Kind::Http;
        else throw ValidationError("backend must be 'synthetic' or 'http'");
    }
    else if (key == "plan_path") config.backends.plan_path = value;
    else if (key == "synthetic_dim") config.backends.synthetic_dim = static_cast<std::size_t>(as_int());
    else if (key == "cache_dir") config.backends.cache_dir = value;
    else if (key == "max_in_flight") config.backends.max_in_flight = as_int();
    else if (key == "load_frame_files") config.backends.load_frame_files = (value == "true" || value == "1");
    else if (key.rfind("debias.", 0) == 0) endpoint_field(config.backends.debias_endpoint, key.substr(7));
    else if (key.rfind("caption.", 0) == 0) endpoint_field(config.backends.caption_endpoint, key.substr(8));
    else if (key.rfind("video.", 0) == 0) endpoint_field(config.backends.video_endpoint, key.substr(6));
    else if (key.rfind("embed.", 0) == 0) endpoint_field(config.backends.embed_endpoint, key.substr(6));
    else if (key == "dataset_format") config.dataset_format = value;
    else if (key == "dataset_fps") config.dataset_fps = as_double();
    else if (key == "lenient_parse") config.lenient_parse = (value == "true" || value == "1");
    else throw ValidationError("unknown config key '" + key + "'");
}

Dataset load_dataset(const CliConfig& config, const fs::path& path) {
    ParseMode mode = config.lenient_parse ? ParseMode::Lenient : ParseMode::Strict;
    const auto& format = config.dataset_format;
    double fps = config.dataset_fps;
    if (format == "synthetic") return load_synthetic(path);
    if (format == "charades") return load_charades_sta(path, mode, fps > 0 ? fps : 1.0);
    if (format == "qvhighlights") {
        return load_qvhighlights(path, mode, fps > 0 ? fps : 0.5);
    }
    if (format == "activitynet") return load_activitynet(path, mode, fps > 0 ? fps : 1.0);
    throw ValidationError("unknown dataset format '" + format + "'");
}

void write_manifest(const fs::path& path, const PipelineConfig& config,
                    const BackendSet& backends, const Dataset& dataset) {
    json config_doc = {{"n_d", config.n_d},
                       {"eta", config.eta},
                       {"kappa", config.kappa},
                       {"tau", config.tau},
                       {"lambda", config.lambda},
                       {"sigma", config.sigma},
                       {"temperatures",
                        {config.temperatures.debias, config.temperatures.frame_caption,
                         config.temperatures.span_caption}},
                       {"span_caption_max_frames", config.span_caption_max_frames}};

    ChatRequest probe;
    probe.messages.push_back({"user", {ContentPart::make_text("fingerprint probe")}});
    json manifest = {
        {"config", config_doc},
        {"config_hash", sha256_hex(config_doc.dump())},
        {"dataset_hash", sha256_hex(serialize_synthetic(dataset))},
        {"backend_fingerprints",
         {backends.debias_chat->fingerprint(probe).to_string(),
          backends.frame_chat->fingerprint(probe).to_string(),
          backends.span_chat->fingerprint(probe).to_string(),
          backends.embedder->fingerprint().to_string()}}};

    std::ofstream out(path, std::ios::trunc);
    out << manifest.dump(2) << "\n";
}

}  // namespace vmr
