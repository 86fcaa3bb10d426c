#include "vmr/backends.hpp"

#include <openssl/evp.h>

#include <cstdio>
#include <sstream>

namespace vmr {

void ChatRequest::validate() const {
    if (temperature < 0.0) throw ValidationError("ChatRequest: negative temperature");
    bool has_user = false;
    for (const auto& m : messages) {
        if (m.role != "system" && m.role != "user") {
            throw ValidationError("ChatRequest: role must be system or user");
        }
        if (m.role == "user") has_user = true;
    }
    if (!has_user) throw ValidationError("ChatRequest: at least one user message required");
}

std::string ChatRequest::canonical() const {
    std::ostringstream out;
    char temp[32];
    std::snprintf(temp, sizeof(temp), "%.6g", temperature);
    out << "model=" << model_name << "temp=" << temp;
    for (const auto& m : messages) {
        out << "role=" << m.role;
        for (const auto& p : m.parts) {
            if (p.kind == ContentPart::Kind::Text) {
                out << "text" << p.text;
            } else {
                // Image identity is the payload when present, else the ref.
                out << "image"
                    << (p.image_data.empty() ? p.image_ref : sha256_hex(p.image_data));
            }
        }
    }
    return out.str();
}

std::string BackendFingerprint::to_string() const {
    char temp[32];
    std::snprintf(temp, sizeof(temp), "%.6g", temperature);
    return provider + "/" + model_name + "/" + prompt_hash + "/t=" + temp;
}

RequestGate::RequestGate(int max_in_flight) : available_(max_in_flight) {
    if (max_in_flight < 1) throw ValidationError("RequestGate: capacity must be >= 1");
}

void RequestGate::acquire() {
    std::unique_lock lock(mu_);
    cv_.wait(lock, [&] { return available_ > 0; });
    --available_;
}

void RequestGate::release() {
    {
        std::lock_guard lock(mu_);
        ++available_;
    }
    cv_.notify_one();
}

std::string sha256_hex(const std::string& data) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr);
    static const char* hex = "0123456789abcdef";
    std::string out;
    out.reserve(len * 2);
    for (unsigned int i = 0; i < len; ++i) {
        out.push_back(hex[digest[i] >> 4]);
        out.push_back(hex[digest[i] & 0xf]);
    }
    return out;
}

}  // namespace vmr
