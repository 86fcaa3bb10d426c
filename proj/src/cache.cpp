#include "vmr/cache.hpp"

#include <chrono>
#include <fstream>
#include <random>
#include <thread>

#include <json.hpp>

namespace vmr {

namespace fs = std::filesystem;
using nlohmann::json;

ResponseCache::ResponseCache(fs::path root) : root_(std::move(root)) {
    fs::create_directories(root_);
}

std::string ResponseCache::make_key(const BackendFingerprint& fp,
                                    const std::string& request_content) {
    return sha256_hex(fp.to_string() + "\x1f" + request_content);
}

fs::path ResponseCache::entry_path(const std::string& key) const {
    return root_ / (key + ".json");
}

namespace {

std::optional<json> read_entry(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) return std::nullopt;
    json doc = json::parse(in, nullptr, /*allow_exceptions=*/false);
    if (doc.is_discarded()) return std::nullopt;
    return doc;
}

}  // namespace

void ResponseCache::write_entry(const std::string& key,
                                const std::string& json_body) const {
    // Unique temp name per writer, then atomic rename into place.
    static std::atomic<std::uint64_t> counter{0};
    auto tid = std::hash<std::thread::id>{}(std::this_thread::get_id());
    fs::path tmp = root_ / (key + ".tmp." + std::to_string(tid) + "." +
                            std::to_string(counter.fetch_add(1)));
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        out << json_body;
        if (!out) throw std::runtime_error("cache: failed to write " + tmp.string());
    }
    fs::rename(tmp, entry_path(key));
}

std::optional<std::string> ResponseCache::get_text(const std::string& key) const {
    auto doc = read_entry(entry_path(key));
    if (!doc || !doc->contains("value") || !(*doc)["value"].is_string()) {
        return std::nullopt;
    }
    return (*doc)["value"].get<std::string>();
}

void ResponseCache::put_text(const std::string& key, const std::string& fingerprint,
                             const std::string& value) const {
    json doc;
    doc["key"] = key;
    doc["fingerprint"] = fingerprint;
    doc["value"] = value;
    doc["created_at"] = std::chrono::duration_cast<std::chrono::seconds>(
                            std::chrono::system_clock::now().time_since_epoch())
                            .count();
    write_entry(key, doc.dump());
}

std::optional<std::vector<std::vector<double>>> ResponseCache::get_vectors(
    const std::string& key) const {
    auto doc = read_entry(entry_path(key));
    if (!doc || !doc->contains("value") || !(*doc)["value"].is_array()) {
        return std::nullopt;
    }
    try {
        return (*doc)["value"].get<std::vector<std::vector<double>>>();
    } catch (const json::exception&) {
        return std::nullopt;
    }
}

void ResponseCache::put_vectors(const std::string& key, const std::string& fingerprint,
                                const std::vector<std::vector<double>>& value) const {
    json doc;
    doc["key"] = key;
    doc["fingerprint"] = fingerprint;
    doc["value"] = value;
    doc["created_at"] = std::chrono::duration_cast<std::chrono::seconds>(
                            std::chrono::system_clock::now().time_since_epoch())
                            .count();
    write_entry(key, doc.dump());
}

CachingChatBackend::CachingChatBackend(std::shared_ptr<ChatBackend> upstream,
                                       std::shared_ptr<ResponseCache> cache)
    : upstream_(std::move(upstream)), cache_(std::move(cache)) {}

std::string CachingChatBackend::chat(const ChatRequest& request) {
    auto fp = upstream_->fingerprint(request);
    auto key = ResponseCache::make_key(fp, request.canonical());
    if (auto hit = cache_->get_text(key)) return *hit;
    upstream_calls_.fetch_add(1);
    auto reply = upstream_->chat(request);
    cache_->put_text(key, fp.to_string(), reply);
    return reply;
}

BackendFingerprint CachingChatBackend::fingerprint(const ChatRequest& request) const {
    return upstream_->fingerprint(request);
}

CachingEmbedBackend::CachingEmbedBackend(std::shared_ptr<EmbedBackend> upstream,
                                         std::shared_ptr<ResponseCache> cache)
    : upstream_(std::move(upstream)), cache_(std::move(cache)) {}

std::vector<Embedding> CachingEmbedBackend::embed(const std::vector<std::string>& texts) {
    if (texts.empty()) throw ValidationError("embed: empty input list");
    auto fp = upstream_->fingerprint();

    std::vector<Embedding> out;
    out.reserve(texts.size());
    std::vector<std::size_t> missing;
    std::vector<std::optional<std::vector<double>>> cached(texts.size());
    for (std::size_t i = 0; i < texts.size(); ++i) {
        auto key = ResponseCache::make_key(fp, texts[i]);
        if (auto hit = cache_->get_vectors(key); hit && hit->size() == 1) {
            cached[i] = (*hit)[0];
        } else {
            missing.push_back(i);
        }
    }
    if (!missing.empty()) {
        std::vector<std::string> batch;
        batch.reserve(missing.size());
        for (auto i : missing) batch.push_back(texts[i]);
        upstream_calls_.fetch_add(1);
        auto fresh = upstream_->embed(batch);
        if (fresh.size() != batch.size()) {
            throw BackendError("embed: backend returned wrong count", false);
        }
        for (std::size_t k = 0; k < missing.size(); ++k) {
            auto key = ResponseCache::make_key(fp, texts[missing[k]]);
            cache_->put_vectors(key, fp.to_string(), {fresh[k].values()});
            cached[missing[k]] = fresh[k].values();
        }
    }
    for (auto& v : cached) out.emplace_back(std::move(*v));
    std::size_t dim = out.front().dim();
    for (const auto& e : out) {
        if (e.dim() != dim) throw BackendError("embed: dimension mismatch in batch", false);
    }
    return out;
}

BackendFingerprint CachingEmbedBackend::fingerprint() const {
    return upstream_->fingerprint();
}

}  // namespace vmr
