#include "vmr/synthetic.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <sstream>

#include <json.hpp>

namespace vmr {

using nlohmann::json;

namespace {

std::uint64_t fnv1a64(const std::string& s) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

std::vector<std::string> tokenize(const std::string& text) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : text) {
        if (std::isalnum(static_cast<unsigned char>(ch))) {
            cur.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(ch))));
        } else if (!cur.empty()) {
            out.push_back(std::move(cur));
            cur.clear();
        }
    }
    if (!cur.empty()) out.push_back(std::move(cur));
    return out;
}

// Disjoint from the distractor pool and from the dataset phrase vocabulary.
const std::vector<std::string> kFillerWords = {
    "gently", "nearby", "slowly", "carefully", "afterwards",
    "briefly", "casually", "steadily"};

const std::vector<std::string> kDistractorWords = {
    "hallway", "ceiling", "dust",  "silence", "tiles",   "shadow",
    "corner",  "curtain", "clock", "radiator", "skirting", "plaster"};

std::string pick_words(const std::vector<std::string>& pool, std::uint64_t seed,
                       std::size_t count) {
    std::ostringstream out;
    std::uint64_t state = seed;
    for (std::size_t k = 0; k < count; ++k) {
        state = state * 6364136223846793005ull + 1442695040888963407ull;
        if (k) out << ' ';
        out << pool[(state >> 33) % pool.size()];
    }
    return out.str();
}

const std::string* find_text(const ChatRequest& request) {
    for (const auto& m : request.messages) {
        for (const auto& p : m.parts) {
            if (p.kind == ContentPart::Kind::Text) return &p.text;
        }
    }
    return nullptr;
}

std::vector<std::string> image_refs(const ChatRequest& request) {
    std::vector<std::string> refs;
    for (const auto& m : request.messages) {
        for (const auto& p : m.parts) {
            if (p.kind == ContentPart::Kind::Image) refs.push_back(p.image_ref);
        }
    }
    return refs;
}

}  // namespace

bool PlannedVideo::in_span(double t) const {
    for (const auto& s : spans) {
        if (t >= s.start_s && t < s.end_s) return true;
    }
    return false;
}

const PlannedVideo& SyntheticPlan::video(const std::string& video_id) const {
    auto it = videos.find(video_id);
    if (it == videos.end()) {
        throw ValidationError("synthetic plan has no video '" + video_id + "'");
    }
    return it->second;
}

std::string SyntheticPlan::to_json() const {
    json arr = json::array();
    for (const auto& [id, v] : videos) {
        json spans = json::array();
        for (const auto& s : v.spans) spans.push_back({s.start_s, s.end_s});
        arr.push_back({{"video_id", v.video_id},
                       {"duration_s", v.duration_s},
                       {"fps", v.fps},
                       {"phrase", v.phrase},
                       {"spans", spans}});
    }
    return json{{"videos", arr}}.dump();
}

SyntheticPlan SyntheticPlan::from_json(const std::string& text) {
    json doc = json::parse(text);
    SyntheticPlan plan;
    for (const auto& v : doc.at("videos")) {
        PlannedVideo pv;
        pv.video_id = v.at("video_id").get<std::string>();
        pv.duration_s = v.at("duration_s").get<double>();
        pv.fps = v.at("fps").get<double>();
        pv.phrase = v.at("phrase").get<std::string>();
        for (const auto& s : v.at("spans")) {
            pv.spans.push_back({s.at(0).get<double>(), s.at(1).get<double>()});
        }
        plan.videos[pv.video_id] = std::move(pv);
    }
    return plan;
}

std::string synthetic_caption(std::size_t frame_index, const PlannedVideo& plan) {
    double t = static_cast<double>(frame_index) / plan.fps;
    if (t >= plan.duration_s) {
        throw ValidationError("synthetic_caption: frame index out of range for '" +
                              plan.video_id + "'");
    }
    std::uint64_t seed = fnv1a64(plan.video_id + "#" + std::to_string(frame_index));
    if (plan.in_span(t)) {
        return plan.phrase + " " + pick_words(kFillerWords, seed, 4);
    }
    return pick_words(kDistractorWords, seed, 6);
}

FrameRef parse_frame_ref(const std::string& ref) {
    auto last = ref.find_last_of('/');
    if (last == std::string::npos || last == 0) {
        throw ValidationError("frame ref '" + ref + "' is not of form <video_id>/<index>");
    }
    std::string name = ref.substr(last + 1);
    if (auto dot = name.find('.'); dot != std::string::npos) name = name.substr(0, dot);
    auto prev = ref.find_last_of('/', last - 1);
    std::string vid = ref.substr(prev == std::string::npos ? 0 : prev + 1,
                                 last - (prev == std::string::npos ? 0 : prev + 1));
    FrameRef out;
    out.video_id = vid;
    try {
        out.index = static_cast<std::size_t>(std::stoull(name));
    } catch (const std::exception&) {
        throw ValidationError("frame ref '" + ref + "' has non-numeric index");
    }
    return out;
}

SyntheticChatBackend::SyntheticChatBackend(SyntheticPlan plan) : plan_(std::move(plan)) {}

std::string SyntheticChatBackend::chat(const ChatRequest& request) {
    request.validate();
    ++calls_;
    const std::string* text = find_text(request);
    if (!text) throw BackendError("synthetic chat: request has no text part", false);

    if (text->find("Task 1: Please detect and rectify") != std::string::npos) {
        // Debias prompt: quote-delimited raw sentence.
        auto open = text->find('\'');
        auto close = text->rfind('\'');
        if (open == std::string::npos || close <= open) {
            throw BackendError("synthetic chat: malformed debias prompt", false);
        }
        std::string raw = text->substr(open + 1, close - open - 1);
        std::ostringstream out;
        out << "1. " << raw << "\n";
        out << "2. " << raw << " right there\n";
        out << "3. Indeed " << raw << "\n";
        return out.str();
    }

    if (text->find("[image caption]") != std::string::npos) {
        auto refs = image_refs(request);
        if (refs.size() != 1) {
            throw BackendError("synthetic chat: image caption needs one image", false);
        }
        auto fr = parse_frame_ref(refs[0]);
        return synthetic_caption(fr.index, plan_.video(fr.video_id));
    }

    if (text->find("[Video caption]") != std::string::npos) {
        auto refs = image_refs(request);
        if (refs.empty()) {
            throw BackendError("synthetic chat: video caption needs images", false);
        }
        auto first = parse_frame_ref(refs[0]);
        const auto& plan = plan_.video(first.video_id);
        std::size_t inside = 0;
        for (const auto& r : refs) {
            auto fr = parse_frame_ref(r);
            if (plan.in_span(static_cast<double>(fr.index) / plan.fps)) ++inside;
        }
        std::uint64_t seed = fnv1a64(request.canonical());
        if (2 * inside >= refs.size()) {
            return plan.phrase + " " + pick_words(kFillerWords, seed, 4);
        }
        return pick_words(kDistractorWords, seed, 6);
    }

    throw BackendError("synthetic chat: unrecognized prompt", false);
}

BackendFingerprint SyntheticChatBackend::fingerprint(const ChatRequest& request) const {
    return {"synthetic", request.model_name.empty() ? "plan" : request.model_name,
            "synthetic-chat-v1", request.temperature};
}

SyntheticEmbedBackend::SyntheticEmbedBackend(std::size_t dim) : dim_(dim) {
    if (dim_ == 0) throw ValidationError("SyntheticEmbedBackend: dim must be >= 1");
}

Embedding SyntheticEmbedBackend::embed_one(const std::string& text) const {
    auto tokens = tokenize(text);
    std::vector<double> values(dim_, 0.0);
    for (const auto& tok : tokens) {
        values[fnv1a64(tok) % dim_] += 1.0;
    }
    if (tokens.empty()) {
        // Degenerate all-punctuation input still yields a valid vector.
        values[0] = 1.0;
    }
    double sq = 0.0;
    for (double v : values) sq += v * v;
    double inv = 1.0 / std::sqrt(sq);
    for (double& v : values) v *= inv;
    return Embedding(std::move(values));
}

std::vector<Embedding> SyntheticEmbedBackend::embed(
    const std::vector<std::string>& texts) {
    if (texts.empty()) throw ValidationError("embed: empty input list");
    for (const auto& t : texts) {
        if (t.empty()) throw ValidationError("embed: empty text in batch");
    }
    ++calls_;
    std::vector<Embedding> out;
    out.reserve(texts.size());
    for (const auto& t : texts) out.push_back(embed_one(t));
    return out;
}

BackendFingerprint SyntheticEmbedBackend::fingerprint() const {
    return {"synthetic", "bow-" + std::to_string(dim_), "synthetic-embed-v1", 0.0};
}

}  // namespace vmr
