#pragma once

#include <chrono>
#include <string>

#include "scenedex/provider.hpp"

namespace scenedex {

struct HttpProviderOptions {
    std::string base_url;      // e.g. "http://127.0.0.1:8080"
    std::string api_key;       // sent as a bearer token when non-empty
    int max_attempts = 3;
    std::chrono::milliseconds backoff{250};
    std::chrono::seconds timeout{120};
};

/// Speaks the provider wire contract over HTTP: POST `<base_url><route>`
/// with the request envelope as JSON. Connection failures, 429 and 5xx are
/// retried with exponential backoff; other 4xx are protocol errors.
class HttpProvider : public Provider {
public:
    explicit HttpProvider(HttpProviderOptions options);

    ProviderResponse complete(const ProviderRequest& request) override;

private:
    HttpProviderOptions options_;
};

}  // namespace scenedex
