#include "vmr/captioner.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <future>
#include <sstream>

namespace vmr {

namespace {

constexpr const char* kFramePrompt =
    "[image caption] Please provide a detailed description of the image content.";
constexpr const char* kSpanPrompt = "[Video caption] What is this video about?";

}  // namespace

FrameLoader null_frame_loader() {
    return [](const std::string&) { return std::string(); };
}

FrameLoader file_frame_loader() {
    return [](const std::string& ref) {
        std::ifstream in(ref, std::ios::binary);
        if (!in) throw std::runtime_error("cannot read frame file: " + ref);
        std::ostringstream buf;
        buf << in.rdbuf();
        return buf.str();
    };
}

ChatRequest build_frame_caption_request(const std::string& frame_ref,
                                        const std::string& image_data,
                                        double temperature,
                                        const std::string& model_name) {
    ChatRequest request;
    request.temperature = temperature;
    request.model_name = model_name;
    request.messages.push_back(
        {"user",
         {ContentPart::make_text(kFramePrompt),
          ContentPart::make_image(frame_ref, image_data)}});
    return request;
}

ChatRequest build_span_caption_request(const std::vector<std::string>& frame_refs,
                                       const std::vector<std::string>& image_payloads,
                                       double temperature,
                                       const std::string& model_name) {
    if (frame_refs.empty()) {
        throw ValidationError("build_span_caption_request: no frames");
    }
    ChatRequest request;
    request.temperature = temperature;
    request.model_name = model_name;
    std::vector<ContentPart> parts{ContentPart::make_text(kSpanPrompt)};
    for (std::size_t i = 0; i < frame_refs.size(); ++i) {
        parts.push_back(ContentPart::make_image(
            frame_refs[i], i < image_payloads.size() ? image_payloads[i] : ""));
    }
    request.messages.push_back({"user", std::move(parts)});
    return request;
}

std::vector<std::size_t> sample_span_frames(const VideoRecord& video,
                                            const CandidateSpan& span, int max_frames) {
    if (max_frames < 1) throw ValidationError("sample_span_frames: max_frames >= 1");
    double fps = video.fps();
    std::size_t last_index = video.frame_count() - 1;

    // Frames j with start <= j/fps < end.
    auto first = static_cast<long>(std::ceil(span.start_s() * fps - 1e-9));
    auto last = static_cast<long>(std::ceil(span.end_s() * fps - 1e-9)) - 1;
    first = std::max(first, 0L);
    last = std::min(last, static_cast<long>(last_index));

    if (first > last) {
        // Span shorter than one frame period: nearest frame to its midpoint.
        double mid = 0.5 * (span.start_s() + span.end_s());
        auto nearest = static_cast<long>(std::llround(mid * fps));
        nearest = std::clamp(nearest, 0L, static_cast<long>(last_index));
        return {static_cast<std::size_t>(nearest)};
    }

    std::size_t count = static_cast<std::size_t>(last - first + 1);
    if (count <= static_cast<std::size_t>(max_frames)) {
        std::vector<std::size_t> out(count);
        for (std::size_t k = 0; k < count; ++k) out[k] = static_cast<std::size_t>(first) + k;
        return out;
    }

    // Rounded linspace over [first, last], duplicates collapsed.
    std::vector<std::size_t> out;
    out.reserve(static_cast<std::size_t>(max_frames));
    for (int k = 0; k < max_frames; ++k) {
        double pos = first + (last - first) * static_cast<double>(k) /
                                 static_cast<double>(max_frames - 1);
        auto j = static_cast<std::size_t>(std::llround(pos));
        if (out.empty() || out.back() != j) out.push_back(j);
    }
    return out;
}

std::vector<Caption> caption_frames(const VideoRecord& video, ChatBackend& backend,
                                    double temperature, RequestGate& gate,
                                    const FrameLoader& loader,
                                    const std::string& model_name) {
    const auto& frames = video.frames();
    std::vector<std::future<Caption>> pending;
    pending.reserve(frames.size());

    for (const auto& ref : frames) {
        pending.push_back(std::async(std::launch::async, [&, ref]() {
            RequestGate::Ticket ticket(gate);
            try {
                std::string payload = loader(ref);
                auto request =
                    build_frame_caption_request(ref, payload, temperature, model_name);
                auto text = backend.chat(request);
                return Caption(ref, text, backend.fingerprint(request).to_string());
            } catch (const std::exception&) {
                return Caption::failed_for(ref, "");
            }
        }));
    }

    std::vector<Caption> out;
    out.reserve(frames.size());
    for (auto& f : pending) out.push_back(f.get());
    return out;
}

Caption caption_span(const VideoRecord& video, const CandidateSpan& span,
                     ChatBackend& backend, double temperature, int max_frames,
                     const FrameLoader& loader, const std::string& model_name) {
    auto indices = sample_span_frames(video, span, max_frames);
    std::vector<std::string> refs;
    std::vector<std::string> payloads;
    refs.reserve(indices.size());
    for (auto j : indices) {
        refs.push_back(video.frames()[j]);
        payloads.push_back(loader(video.frames()[j]));
    }
    auto request = build_span_caption_request(refs, payloads, temperature, model_name);
    auto text = backend.chat(request);
    std::ostringstream subject;
    subject << video.video_id() << ":[" << span.start_s() << "," << span.end_s() << ")";
    return Caption(subject.str(), text, backend.fingerprint(request).to_string());
}

}  // namespace vmr
