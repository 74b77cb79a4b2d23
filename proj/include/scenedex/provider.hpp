#pragma once

#include <atomic>
#include <deque>
#include <functional>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "scenedex/kv_store.hpp"
#include "scenedex/time.hpp"

namespace scenedex {

using nlohmann::json;

/// Which provider service a request targets; maps onto the HTTP routes
/// `/v1/chat`, `/v1/asr`, `/v1/caption`, `/v1/embed`.
enum class Route { Chat, Asr, Caption, Embed };

const char* route_path(Route route);

struct Message {
    std::string role;
    std::string content;

    friend bool operator==(const Message&, const Message&) = default;
};

struct FrameRef {
    Seconds timestamp;
    std::string locator;

    friend bool operator==(const FrameRef&, const FrameRef&) = default;
};

struct MediaRef {
    std::string locator;
    Seconds start;
    Seconds end;

    friend bool operator==(const MediaRef&, const MediaRef&) = default;
};

struct ProviderRequest {
    Route route = Route::Chat;
    std::string model;
    std::vector<Message> messages;
    double temperature = 0.7;
    double top_p = 0.95;
    std::vector<FrameRef> frames;
    std::optional<MediaRef> media;

    /// Body sent on the wire (the route travels in the URL path).
    json to_json() const;
    static ProviderRequest from_json(Route route, const json& body);

    /// Stable content address of this request, including its route.
    std::string cache_key() const;

    /// Convenience for the common single-user-message chat call.
    static ProviderRequest chat(std::string model, std::string prompt);
};

struct ProviderResponse {
    std::string content;
    std::optional<std::vector<double>> embedding;
    std::optional<json> utterances;

    json to_json() const;
    static ProviderResponse from_json(const json& body);

    static ProviderResponse text(std::string content) { return {std::move(content), {}, {}}; }
};

/// JSON-schema subset validator (type, required, properties,
/// additionalProperties, items, enum, minimum, maximum, minLength, minItems).
/// Returns human-readable violations; empty means valid.
std::vector<std::string> schema_violations(const json& instance, const json& schema);

const json& request_schema();
const json& response_schema();

/// Any model service. Implementations must be safe for concurrent calls.
/// Transport failures throw Error{Transport}; malformed payloads Error{Protocol}.
class Provider {
public:
    virtual ~Provider() = default;
    virtual ProviderResponse complete(const ProviderRequest& request) = 0;
};

/// Test double: answers from a queue of scripted steps or from a responder
/// function, and records every request it receives.
class ScriptedProvider : public Provider {
public:
    using Responder = std::function<ProviderResponse(const ProviderRequest&)>;

    struct Step {
        std::optional<ProviderResponse> response;  // nullopt = transport failure
    };
    static Step reply(std::string content) { return {ProviderResponse::text(std::move(content))}; }
    static Step reply(ProviderResponse r) { return {std::move(r)}; }
    static Step transport_failure() { return {std::nullopt}; }

    ScriptedProvider() = default;
    explicit ScriptedProvider(Responder responder) : responder_(std::move(responder)) {}
    explicit ScriptedProvider(std::vector<Step> steps) : steps_(steps.begin(), steps.end()) {}

    ProviderResponse complete(const ProviderRequest& request) override;

    void push(Step step);
    std::size_t calls() const;
    std::vector<ProviderRequest> requests() const;

private:
    mutable std::mutex mu_;
    Responder responder_;
    std::deque<Step> steps_;
    std::vector<ProviderRequest> log_;
};

/// Content-addressed response cache in front of another provider. Only
/// successful responses are cached.
class CachedProvider : public Provider {
public:
    CachedProvider(Provider& inner, KvStore& kv) : inner_(inner), kv_(kv) {}

    ProviderResponse complete(const ProviderRequest& request) override;

    std::size_t hits() const { return hits_; }
    std::size_t misses() const { return misses_; }

private:
    Provider& inner_;
    KvStore& kv_;
    std::atomic<std::size_t> hits_{0};
    std::atomic<std::size_t> misses_{0};
};

/// Counts calls reaching the wrapped provider; used to report upstream usage.
class CountingProvider : public Provider {
public:
    explicit CountingProvider(Provider& inner) : inner_(inner) {}
    ProviderResponse complete(const ProviderRequest& request) override {
        ++calls_;
        return inner_.complete(request);
    }
    std::size_t calls() const { return calls_; }

private:
    Provider& inner_;
    std::atomic<std::size_t> calls_{0};
};

}  // namespace scenedex
