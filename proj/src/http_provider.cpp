#include "scenedex/http_provider.hpp"

#include <thread>

#include <fmt/format.h>
#include <httplib.h>
#include <spdlog/spdlog.h>

#include "scenedex/error.hpp"

namespace scenedex {

HttpProvider::HttpProvider(HttpProviderOptions options) : options_(std::move(options)) {
    if (options_.base_url.empty()) fail(ErrorKind::InvalidInput, "http provider needs a base url");
    if (options_.max_attempts < 1) options_.max_attempts = 1;
}

ProviderResponse HttpProvider::complete(const ProviderRequest& request) {
    const std::string body = request.to_json().dump();
    std::string last_error;
    for (int attempt = 0; attempt < options_.max_attempts; ++attempt) {
        if (attempt > 0) std::this_thread::sleep_for(options_.backoff * (1 << (attempt - 1)));

        httplib::Client client(options_.base_url);
        client.set_connection_timeout(options_.timeout);
        client.set_read_timeout(options_.timeout);
        httplib::Headers headers;
        if (!options_.api_key.empty()) headers.emplace("Authorization", "Bearer " + options_.api_key);

        auto res = client.Post(route_path(request.route), headers, body, "application/json");
        if (!res) {
            last_error = fmt::format("connection to {} failed: {}", options_.base_url, httplib::to_string(res.error()));
            spdlog::warn("provider attempt {}/{}: {}", attempt + 1, options_.max_attempts, last_error);
            continue;
        }
        if (res->status == 429 || res->status >= 500) {
            last_error = fmt::format("{}{} returned HTTP {}", options_.base_url, route_path(request.route), res->status);
            spdlog::warn("provider attempt {}/{}: {}", attempt + 1, options_.max_attempts, last_error);
            continue;
        }
        if (res->status != 200) {
            fail(ErrorKind::Protocol, fmt::format("{}{} rejected the request with HTTP {}: {}",
                                                  options_.base_url, route_path(request.route), res->status, res->body));
        }
        json parsed = json::parse(res->body, nullptr, false);
        if (parsed.is_discarded()) fail(ErrorKind::Protocol, "provider returned invalid JSON");
        ProviderResponse out = ProviderResponse::from_json(parsed);
        if (res->has_header("X-Embedding-Dimension")) {
            const std::string announced = res->get_header_value("X-Embedding-Dimension");
            if (!out.embedding || announced != std::to_string(out.embedding->size()))
                fail(ErrorKind::Protocol, "X-Embedding-Dimension header disagrees with the returned vector");
        }
        return out;
    }
    fail(ErrorKind::Transport, last_error);
}

}  // namespace scenedex
