#include "vmr/http_backend.hpp"

#include <chrono>
#include <cstdlib>
#include <thread>

#include <httplib.h>
#include <json.hpp>

namespace vmr {

using nlohmann::json;

std::string base64_encode(const std::string& data) {
    static const char* alphabet =
        "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
    std::string out;
    out.reserve((data.size() + 2) / 3 * 4);
    std::size_t i = 0;
    while (i + 3 <= data.size()) {
        std::uint32_t n = (static_cast<unsigned char>(data[i]) << 16) |
                          (static_cast<unsigned char>(data[i + 1]) << 8) |
                          static_cast<unsigned char>(data[i + 2]);
        out.push_back(alphabet[(n >> 18) & 63]);
        out.push_back(alphabet[(n >> 12) & 63]);
        out.push_back(alphabet[(n >> 6) & 63]);
        out.push_back(alphabet[n & 63]);
        i += 3;
    }
    std::size_t rem = data.size() - i;
    if (rem == 1) {
        std::uint32_t n = static_cast<unsigned char>(data[i]) << 16;
        out.push_back(alphabet[(n >> 18) & 63]);
        out.push_back(alphabet[(n >> 12) & 63]);
        out += "==";
    } else if (rem == 2) {
        std::uint32_t n = (static_cast<unsigned char>(data[i]) << 16) |
                          (static_cast<unsigned char>(data[i + 1]) << 8);
        out.push_back(alphabet[(n >> 18) & 63]);
        out.push_back(alphabet[(n >> 12) & 63]);
        out.push_back(alphabet[(n >> 6) & 63]);
        out.push_back('=');
    }
    return out;
}

namespace {

std::string body_excerpt(const std::string& body) {
    constexpr std::size_t kMax = 200;
    if (body.size() <= kMax) return body;
    return body.substr(0, kMax) + "...";
}

httplib::Headers auth_headers(const HttpEndpoint& ep) {
    httplib::Headers headers;
    if (!ep.api_key_env.empty()) {
        if (const char* key = std::getenv(ep.api_key_env.c_str())) {
            headers.emplace("Authorization", std::string("Bearer ") + key);
        }
    }
    return headers;
}

// POSTs with retry on transport failures and 5xx. Returns the body of
// the first 2xx response; throws BackendError otherwise.
std::string post_with_retry(const HttpEndpoint& ep, const std::string& path,
                            const std::string& body) {
    std::string last_error;
    int delay_ms = ep.backoff_initial_ms;
    for (int attempt = 1; attempt <= ep.max_attempts; ++attempt) {
        if (attempt > 1) {
            std::this_thread::sleep_for(std::chrono::milliseconds(delay_ms));
            delay_ms *= 2;
        }
        httplib::Client client(ep.base_url);
        client.set_connection_timeout(ep.timeout_s);
        client.set_read_timeout(ep.timeout_s);
        auto res = client.Post(path, auth_headers(ep), body, "application/json");
        if (!res) {
            last_error = "transport error: " + httplib::to_string(res.error());
            continue;
        }
        if (res->status >= 200 && res->status < 300) return res->body;
        if (res->status >= 500) {
            last_error = "server error " + std::to_string(res->status) + ": " +
                         body_excerpt(res->body);
            continue;
        }
        throw BackendError("HTTP " + std::to_string(res->status) + " from " + path +
                               ": " + body_excerpt(res->body),
                           false);
    }
    throw BackendError("request to " + ep.base_url + path + " failed after " +
                           std::to_string(ep.max_attempts) + " attempts; last: " +
                           last_error,
                       true);
}

json to_wire_content(const std::vector<ContentPart>& parts) {
    json content = json::array();
    for (const auto& p : parts) {
        if (p.kind == ContentPart::Kind::Text) {
            content.push_back({{"type", "text"}, {"text", p.text}});
        } else {
            std::string url =
                "data:image/jpeg;base64," + base64_encode(p.image_data);
            content.push_back(
                {{"type", "image_url"}, {"image_url", {{"url", url}}}});
        }
    }
    return content;
}

}  // namespace

HttpChatBackend::HttpChatBackend(HttpEndpoint endpoint) : endpoint_(std::move(endpoint)) {}

std::string HttpChatBackend::chat(const ChatRequest& request) {
    request.validate();
    json messages = json::array();
    for (const auto& m : request.messages) {
        messages.push_back({{"role", m.role}, {"content", to_wire_content(m.parts)}});
    }
    json payload = {{"model", request.model_name.empty() ? endpoint_.model_name
                                                         : request.model_name},
                    {"temperature", request.temperature},
                    {"messages", messages}};
    std::string body =
        post_with_retry(endpoint_, "/v1/chat/completions", payload.dump());
    json doc = json::parse(body, nullptr, false);
    if (doc.is_discarded()) {
        throw BackendError("chat: response is not JSON: " + body_excerpt(body), false);
    }
    try {
        return doc.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const json::exception& e) {
        throw BackendError(std::string("chat: unexpected response shape: ") + e.what() +
                               "; body: " + body_excerpt(body),
                           false);
    }
}

BackendFingerprint HttpChatBackend::fingerprint(const ChatRequest& request) const {
    std::string prompt;
    for (const auto& m : request.messages) {
        for (const auto& p : m.parts) {
            if (p.kind == ContentPart::Kind::Text) prompt += p.text;
        }
    }
    return {"http-chat",
            request.model_name.empty() ? endpoint_.model_name : request.model_name,
            sha256_hex(prompt).substr(0, 16), request.temperature};
}

HttpEmbedBackend::HttpEmbedBackend(HttpEndpoint endpoint) : endpoint_(std::move(endpoint)) {}

std::vector<Embedding> HttpEmbedBackend::embed(const std::vector<std::string>& texts) {
    if (texts.empty()) throw ValidationError("embed: empty input list");
    for (const auto& t : texts) {
        if (t.empty()) throw ValidationError("embed: empty text in batch");
    }
    json payload = {{"model", endpoint_.model_name}, {"input", texts}};
    std::string body = post_with_retry(endpoint_, "/v1/embeddings", payload.dump());
    json doc = json::parse(body, nullptr, false);
    if (doc.is_discarded()) {
        throw BackendError("embed: response is not JSON: " + body_excerpt(body), false);
    }
    std::vector<Embedding> out;
    try {
        for (const auto& item : doc.at("data")) {
            out.emplace_back(item.at("embedding").get<std::vector<double>>());
        }
    } catch (const json::exception& e) {
        throw BackendError(std::string("embed: unexpected response shape: ") + e.what(),
                           false);
    }
    if (out.size() != texts.size()) {
        throw BackendError("embed: got " + std::to_string(out.size()) +
                               " vectors for " + std::to_string(texts.size()) + " texts",
                           false);
    }
    std::size_t dim = out.front().dim();
    for (const auto& e : out) {
        if (e.dim() != dim) throw BackendError("embed: dimension mismatch in batch", false);
    }
    return out;
}

BackendFingerprint HttpEmbedBackend::fingerprint() const {
    return {"http-embed", endpoint_.model_name, "embeddings-v1", 0.0};
}

}  // namespace vmr
