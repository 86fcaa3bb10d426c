#pragma once

#include <atomic>
#include <condition_variable>
#include <cstdint>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "vmr/errors.hpp"
#include "vmr/types.hpp"

namespace vmr {

// One content part of a chat message. Image payloads are raw bytes for
// the HTTP backend (sent as base64 data URLs); the synthetic backend
// only looks at the reference string.
struct ContentPart {
    enum class Kind { Text, Image };

    Kind kind = Kind::Text;
    std::string text;       // Kind::Text
    std::string image_ref;  // Kind::Image: frame reference / path
    std::string image_data; // Kind::Image: raw bytes, may be empty for synthetic

    static ContentPart make_text(std::string t) {
        ContentPart p;
        p.kind = Kind::Text;
        p.text = std::move(t);
        return p;
    }
    static ContentPart make_image(std::string ref, std::string data = {}) {
        ContentPart p;
        p.kind = Kind::Image;
        p.image_ref = std::move(ref);
        p.image_data = std::move(data);
        return p;
    }
};

struct ChatMessage {
    std::string role;  // "system" or "user"
    std::vector<ContentPart> parts;
};

struct ChatRequest {
    std::vector<ChatMessage> messages;
    double temperature = 0.0;
    std::string model_name;

    void validate() const;
    // Stable canonical text of the request, used as cache-key material.
    std::string canonical() const;
};

// Identifies which backend produced a response: provider kind, model,
// prompt template hash, temperature. Deterministic in its inputs.
struct BackendFingerprint {
    std::string provider;
    std::string model_name;
    std::string prompt_hash;
    double temperature = 0.0;

    std::string to_string() const;
};

class ChatBackend {
public:
    virtual ~ChatBackend() = default;
    virtual std::string chat(const ChatRequest& request) = 0;
    virtual BackendFingerprint fingerprint(const ChatRequest& request) const = 0;
};

class EmbedBackend {
public:
    virtual ~EmbedBackend() = default;
    virtual std::vector<Embedding> embed(const std::vector<std::string>& texts) = 0;
    virtual BackendFingerprint fingerprint() const = 0;
};

// Bounds in-flight backend requests across the whole run.
class RequestGate {
public:
    explicit RequestGate(int max_in_flight = 8);

    void acquire();
    void release();

    class Ticket {
    public:
        explicit Ticket(RequestGate& gate) : gate_(&gate) { gate_->acquire(); }
        ~Ticket() {
            if (gate_) gate_->release();
        }
        Ticket(const Ticket&) = delete;
        Ticket& operator=(const Ticket&) = delete;

    private:
        RequestGate* gate_;
    };

private:
    std::mutex mu_;
    std::condition_variable cv_;
    int available_;
};

// SHA-256 hex digest; cache keys and fingerprint hashes.
std::string sha256_hex(const std::string& data);

}  // namespace vmr
