#pragma once

#include <memory>
#include <string>
#include <vector>

#include "vmr/backends.hpp"

namespace vmr {

// Endpoint settings for one OpenAI-compatible model server.
struct HttpEndpoint {
    std::string base_url;        // e.g. "http://127.0.0.1:8080"
    std::string model_name;
    std::string api_key_env;     // env var holding the bearer token; may be empty
    int max_attempts = 3;
    int backoff_initial_ms = 1000;  // doubled after each failed attempt
    int timeout_s = 120;
};

// Chat-completions client. Retries transport failures and 5xx with
// exponential backoff; malformed bodies fail immediately with an
// excerpt of the response.
class HttpChatBackend : public ChatBackend {
public:
    explicit HttpChatBackend(HttpEndpoint endpoint);

    std::string chat(const ChatRequest& request) override;
    BackendFingerprint fingerprint(const ChatRequest& request) const override;

private:
    HttpEndpoint endpoint_;
};

// Embeddings client against POST <base>/v1/embeddings.
class HttpEmbedBackend : public EmbedBackend {
public:
    explicit HttpEmbedBackend(HttpEndpoint endpoint);

    std::vector<Embedding> embed(const std::vector<std::string>& texts) override;
    BackendFingerprint fingerprint() const override;

private:
    HttpEndpoint endpoint_;
};

std::string base64_encode(const std::string& data);

}  // namespace vmr
