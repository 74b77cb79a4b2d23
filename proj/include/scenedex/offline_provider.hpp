#pragma once

#include "scenedex/provider.hpp"

namespace scenedex {

/// Deterministic stand-in for every route, selected with the "mock:"
/// endpoint. It recognises the engine's own prompt templates and answers
/// with cheap text heuristics, so the whole pipeline runs offline. ASR
/// accepts a transcript file (.tsv) as its media locator.
class OfflineProvider : public Provider {
public:
    explicit OfflineProvider(int embedding_dim = 0) : dim_(embedding_dim > 0 ? embedding_dim : 256) {}
    ProviderResponse complete(const ProviderRequest& request) override;

    /// Signed feature-hashing bag of words, L2-normalised.
    std::vector<double> embed(std::string_view text) const;

private:
    int dim_;
};

}  // namespace scenedex
