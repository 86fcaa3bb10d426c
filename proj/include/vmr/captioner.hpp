#pragma once

#include <functional>
#include <string>
#include <vector>

#include "vmr/backends.hpp"
#include "vmr/types.hpp"

namespace vmr {

// Loads raw image bytes for a frame reference. The synthetic backend
// only needs the reference itself, so the default loader returns empty
// payloads.
using FrameLoader = std::function<std::string(const std::string& ref)>;

FrameLoader null_frame_loader();
FrameLoader file_frame_loader();

ChatRequest build_frame_caption_request(const std::string& frame_ref,
                                        const std::string& image_data,
                                        double temperature,
                                        const std::string& model_name = {});

ChatRequest build_span_caption_request(const std::vector<std::string>& frame_refs,
                                       const std::vector<std::string>& image_payloads,
                                       double temperature,
                                       const std::string& model_name = {});

// Frame indices sampled for a span: every frame whose timestamp lies in
// [start, end), thinned to at most max_frames by rounded linspace. A
// span shorter than one frame period uses the single nearest frame.
std::vector<std::size_t> sample_span_frames(const VideoRecord& video,
                                            const CandidateSpan& span, int max_frames);

// One caption per frame, order-aligned with frame indices. Requests run
// concurrently under the gate; an unreadable frame or failed request
// yields a failed() sentinel caption instead of aborting the video.
std::vector<Caption> caption_frames(const VideoRecord& video, ChatBackend& backend,
                                    double temperature, RequestGate& gate,
                                    const FrameLoader& loader = null_frame_loader(),
                                    const std::string& model_name = {});

Caption caption_span(const VideoRecord& video, const CandidateSpan& span,
                     ChatBackend& backend, double temperature, int max_frames,
                     const FrameLoader& loader = null_frame_loader(),
                     const std::string& model_name = {});

}  // namespace vmr
