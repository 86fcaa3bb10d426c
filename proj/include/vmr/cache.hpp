#pragma once

#include <atomic>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "vmr/backends.hpp"

namespace vmr {

// Content-addressed disk cache: one JSON file per entry under root,
// filename = hex key. Writes go to a temp file and are atomically
// renamed into place, so concurrent readers and writers never observe
// a partial entry.
class ResponseCache {
public:
    explicit ResponseCache(std::filesystem::path root);

    std::optional<std::string> get_text(const std::string& key) const;
    void put_text(const std::string& key, const std::string& fingerprint,
                  const std::string& value) const;

    std::optional<std::vector<std::vector<double>>> get_vectors(
        const std::string& key) const;
    void put_vectors(const std::string& key, const std::string& fingerprint,
                     const std::vector<std::vector<double>>& value) const;

    const std::filesystem::path& root() const { return root_; }

    static std::string make_key(const BackendFingerprint& fp,
                                const std::string& request_content);

private:
    std::filesystem::path entry_path(const std::string& key) const;
    void write_entry(const std::string& key, const std::string& json_body) const;

    std::filesystem::path root_;
};

// Chat backend wrapper that consults the cache before touching the
// underlying backend. upstream_calls() counts actual backend hits.
class CachingChatBackend : public ChatBackend {
public:
    CachingChatBackend(std::shared_ptr<ChatBackend> upstream,
                       std::shared_ptr<ResponseCache> cache);

    std::string chat(const ChatRequest& request) override;
    BackendFingerprint fingerprint(const ChatRequest& request) const override;

    std::uint64_t upstream_calls() const { return upstream_calls_.load(); }

private:
    std::shared_ptr<ChatBackend> upstream_;
    std::shared_ptr<ResponseCache> cache_;
    std::atomic<std::uint64_t> upstream_calls_{0};
};

class CachingEmbedBackend : public EmbedBackend {
public:
    CachingEmbedBackend(std::shared_ptr<EmbedBackend> upstream,
                        std::shared_ptr<ResponseCache> cache);

    std::vector<Embedding> embed(const std::vector<std::string>& texts) override;
    BackendFingerprint fingerprint() const override;

    std::uint64_t upstream_calls() const { return upstream_calls_.load(); }

private:
    std::shared_ptr<EmbedBackend> upstream_;
    std::shared_ptr<ResponseCache> cache_;
    std::atomic<std::uint64_t> upstream_calls_{0};
};

}  // namespace vmr
