#include "scenedex/provider.hpp"

#include <cmath>

#include <fmt/format.h>

#include "scenedex/error.hpp"
#include "wire_schemas.hpp"

namespace scenedex {

const char* route_path(Route route) {
    switch (route) {
        case Route::Chat: return "/v1/chat";
        case Route::Asr: return "/v1/asr";
        case Route::Caption: return "/v1/caption";
        case Route::Embed: return "/v1/embed";
    }
    return "/v1/chat";
}

json ProviderRequest::to_json() const {
    json msgs = json::array();
    for (const auto& m : messages) msgs.push_back({{"role", m.role}, {"content", m.content}});
    json body = {{"model", model}, {"messages", std::move(msgs)},
                 {"temperature", temperature}, {"top_p", top_p}};
    if (media) {
        body["media"] = {{"locator", media->locator},
                         {"start_s", media->start.value()},
                         {"end_s", media->end.value()}};
    }
    if (!frames.empty()) {
        json fr = json::array();
        for (const auto& f : frames) fr.push_back({{"timestamp_s", f.timestamp.value()}, {"locator", f.locator}});
        body["frames"] = std::move(fr);
    }
    return body;
}

ProviderRequest ProviderRequest::from_json(Route route, const json& body) {
    if (auto v = schema_violations(body, request_schema()); !v.empty()) {
        fail(ErrorKind::Protocol, "request violates wire schema: " + v.front());
    }
    ProviderRequest r;
    r.route = route;
    r.model = body.at("model").get<std::string>();
    for (const auto& m : body.at("messages")) {
        r.messages.push_back({m.at("role").get<std::string>(), m.at("content").get<std::string>()});
    }
    r.temperature = body.at("temperature").get<double>();
    r.top_p = body.at("top_p").get<double>();
    if (body.contains("media")) {
        const auto& m = body["media"];
        r.media = MediaRef{m.at("locator").get<std::string>(),
                           Seconds::from_double(m.at("start_s").get<double>()),
                           Seconds::from_double(m.at("end_s").get<double>())};
    }
    if (body.contains("frames")) {
        for (const auto& f : body["frames"]) {
            r.frames.push_back({Seconds::from_double(f.at("timestamp_s").get<double>()),
                                f.at("locator").get<std::string>()});
        }
    }
    return r;
}

std::string ProviderRequest::cache_key() const {
    return fmt::format("provider/{}", sha256_hex(std::string(route_path(route)) + "\n" + to_json().dump()));
}

ProviderRequest ProviderRequest::chat(std::string model, std::string prompt) {
    ProviderRequest r;
    r.model = std::move(model);
    r.messages.push_back({"user", std::move(prompt)});
    return r;
}

json ProviderResponse::to_json() const {
    json body = {{"content", content}};
    if (embedding) {
        body["embedding"] = *embedding;
        body["dimension"] = embedding->size();
    }
    if (utterances) body["utterances"] = *utterances;
    return body;
}

ProviderResponse ProviderResponse::from_json(const json& body) {
    if (auto v = schema_violations(body, response_schema()); !v.empty()) {
        fail(ErrorKind::Protocol, "response violates wire schema: " + v.front());
    }
    ProviderResponse r;
    r.content = body.at("content").get<std::string>();
    if (body.contains("embedding")) {
        r.embedding = body["embedding"].get<std::vector<double>>();
        if (body.contains("dimension") && body["dimension"].get<std::size_t>() != r.embedding->size()) {
            fail(ErrorKind::Protocol, "embedding dimension header disagrees with vector length");
        }
    }
    if (body.contains("utterances")) r.utterances = body["utterances"];
    return r;
}

namespace {

bool type_matches(const json& v, const std::string& type) {
    if (type == "object") return v.is_object();
    if (type == "array") return v.is_array();
    if (type == "string") return v.is_string();
    if (type == "number") return v.is_number();
    if (type == "integer") return v.is_number_integer() || v.is_number_unsigned();
    if (type == "boolean") return v.is_boolean();
    if (type == "null") return v.is_null();
    return false;
}

void validate(const json& v, const json& schema, const std::string& path, std::vector<std::string>& out) {
    if (schema.contains("type") && !type_matches(v, schema["type"].get<std::string>())) {
        out.push_back(fmt::format("{}: expected {}", path, schema["type"].get<std::string>()));
        return;
    }
    if (schema.contains("enum")) {
        bool found = false;
        for (const auto& e : schema["enum"]) found = found || e == v;
        if (!found) out.push_back(fmt::format("{}: value not in enum", path));
    }
    if (v.is_number()) {
        const double x = v.get<double>();
        if (!std::isfinite(x)) out.push_back(fmt::format("{}: non-finite number", path));
        if (schema.contains("minimum") && x < schema["minimum"].get<double>())
            out.push_back(fmt::format("{}: below minimum", path));
        if (schema.contains("maximum") && x > schema["maximum"].get<double>())
            out.push_back(fmt::format("{}: above maximum", path));
    }
    if (v.is_string() && schema.contains("minLength") &&
        v.get_ref<const std::string&>().size() < schema["minLength"].get<std::size_t>()) {
        out.push_back(fmt::format("{}: string too short", path));
    }
    if (v.is_array()) {
        if (schema.contains("minItems") && v.size() < schema["minItems"].get<std::size_t>())
            out.push_back(fmt::format("{}: too few items", path));
        if (schema.contains("items")) {
            for (std::size_t i = 0; i < v.size(); ++i)
                validate(v[i], schema["items"], fmt::format("{}[{}]", path, i), out);
        }
    }
    if (v.is_object()) {
        if (schema.contains("required")) {
            for (const auto& key : schema["required"]) {
                if (!v.contains(key.get<std::string>()))
                    out.push_back(fmt::format("{}: missing '{}'", path, key.get<std::string>()));
            }
        }
        const json* props = schema.contains("properties") ? &schema["properties"] : nullptr;
        const bool closed = schema.contains("additionalProperties") && schema["additionalProperties"] == false;
        for (auto it = v.begin(); it != v.end(); ++it) {
            if (props && props->contains(it.key())) {
                validate(it.value(), (*props)[it.key()], path + "." + it.key(), out);
            } else if (closed) {
                out.push_back(fmt::format("{}: unexpected property '{}'", path, it.key()));
            }
        }
    }
}

}  // namespace

std::vector<std::string> schema_violations(const json& instance, const json& schema) {
    std::vector<std::string> out;
    validate(instance, schema, "$", out);
    return out;
}

const json& request_schema() {
    static const json schema = json::parse(wire_schemas::kRequest);
    return schema;
}

const json& response_schema() {
    static const json schema = json::parse(wire_schemas::kResponse);
    return schema;
}

ProviderResponse ScriptedProvider::complete(const ProviderRequest& request) {
    std::unique_lock lock(mu_);
    log_.push_back(request);
    if (!steps_.empty()) {
        Step step = std::move(steps_.front());
        steps_.pop_front();
        if (!step.response) fail(ErrorKind::Transport, "scripted transport failure");
        return *step.response;
    }
    if (responder_) {
        auto responder = responder_;
        lock.unlock();
        return responder(request);
    }
    fail(ErrorKind::Transport, "scripted provider has no response left");
}

void ScriptedProvider::push(Step step) {
    std::lock_guard lock(mu_);
    steps_.push_back(std::move(step));
}

std::size_t ScriptedProvider::calls() const {
    std::lock_guard lock(mu_);
    return log_.size();
}

std::vector<ProviderRequest> ScriptedProvider::requests() const {
    std::lock_guard lock(mu_);
    return log_;
}

ProviderResponse CachedProvider::complete(const ProviderRequest& request) {
    const std::string key = request.cache_key();
    if (auto hit = kv_.get(key)) {
        ++hits_;
        return ProviderResponse::from_json(json::parse(*hit));
    }
    ++misses_;
    ProviderResponse response = inner_.complete(request);
    kv_.put(key, response.to_json().dump());
    return response;
}

}  // namespace scenedex
