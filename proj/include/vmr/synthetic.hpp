#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "vmr/backends.hpp"
#include "vmr/types.hpp"

namespace vmr {

// Ground truth for one synthetic video: the query phrase and the spans
// where frame captions will contain it.
struct PlannedVideo {
    std::string video_id;
    double duration_s = 0.0;
    double fps = 1.0;
    std::string phrase;
    std::vector<TimeSpan> spans;

    bool in_span(double t) const;
};

// The oracle plan consumed by the synthetic backend. Produced together
// with a synthetic dataset (datasets module) so that captions generated
// for in-span frames contain the planted phrase.
struct SyntheticPlan {
    std::map<std::string, PlannedVideo> videos;

    const PlannedVideo& video(const std::string& video_id) const;

    std::string to_json() const;
    static SyntheticPlan from_json(const std::string& text);
};

// Deterministic caption for one frame of a planned video: the phrase
// plus filler inside a planted span, a distractor sentence sharing no
// content words with the phrase outside.
std::string synthetic_caption(std::size_t frame_index, const PlannedVideo& plan);

// Parses a frame reference of the form ".../<video_id>/<index>[.ext]".
struct FrameRef {
    std::string video_id;
    std::size_t index = 0;
};
FrameRef parse_frame_ref(const std::string& ref);

// Chat backend driven entirely by the plan. Recognizes the three
// pipeline prompts (debias, image caption, video caption) and answers
// from ground truth. Pure function of the request.
class SyntheticChatBackend : public ChatBackend {
public:
    explicit SyntheticChatBackend(SyntheticPlan plan);

    std::string chat(const ChatRequest& request) override;
    BackendFingerprint fingerprint(const ChatRequest& request) const override;

    std::uint64_t calls() const { return calls_; }

private:
    SyntheticPlan plan_;
    std::atomic<std::uint64_t> calls_{0};
};

// Returns one fixed reply to every request; test scaffolding.
class CannedChatBackend : public ChatBackend {
public:
    explicit CannedChatBackend(std::string reply) : reply_(std::move(reply)) {}

    std::string chat(const ChatRequest&) override {
        ++calls_;
        return reply_;
    }
    BackendFingerprint fingerprint(const ChatRequest& request) const override {
        return {"canned", request.model_name, "canned", request.temperature};
    }
    std::uint64_t calls() const { return calls_; }

private:
    std::string reply_;
    std::atomic<std::uint64_t> calls_{0};
};

// Hashed bag-of-words embedding: tokens are lowercased alphanumeric
// runs, each hashed into one of `dim` buckets, counts L2-normalized.
// Cosine between two outputs grows with token overlap.
class SyntheticEmbedBackend : public EmbedBackend {
public:
    explicit SyntheticEmbedBackend(std::size_t dim = 256);

    std::vector<Embedding> embed(const std::vector<std::string>& texts) override;
    BackendFingerprint fingerprint() const override;

    Embedding embed_one(const std::string& text) const;

    std::uint64_t calls() const { return calls_; }

private:
    std::size_t dim_;
    std::atomic<std::uint64_t> calls_{0};
};

}  // namespace vmr
