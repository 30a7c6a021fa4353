#pragma once

#include <memory>

#include "backend.hpp"
#include "http_backend.hpp"
#include "mock_backend.hpp"

namespace opinionforge {

inline std::unique_ptr<ModelBackend> make_backend(const BackendConfig& config) {
  config.validate();
  if (config.kind == BackendKind::Http) return std::make_unique<HttpBackend>(config);
  if (config.fixtures_path) return std::make_unique<MockBackend>(config.seed, *config.fixtures_path);
  return std::make_unique<MockBackend>(config.seed);
}

}  // namespace opinionforge
