#include "codekg/assets.hpp"

#include <algorithm>
#include <cstdlib>
#include <filesystem>

#include "codekg/error.hpp"
#include "codekg/text.hpp"
#include "embedded_assets.hpp"

namespace codekg::assets {

namespace {

const detail::EmbeddedAsset* find_embedded(std::string_view path) {
  for (const auto& a : detail::kEmbeddedAssets) {
    if (a.path == path) return &a;
  }
  return nullptr;
}

std::string override_path(std::string_view path) {
  const char* dir = std::getenv("CODEKG_ASSET_DIR");
  if (dir == nullptr || *dir == '\0') return {};
  auto p = std::filesystem::path(dir) / std::string(path);
  return std::filesystem::exists(p) ? p.string() : std::string();
}

}  // namespace

std::string load(std::string_view path) {
  if (auto p = override_path(path); !p.empty()) return text::read_file(p);
  if (const auto* a = find_embedded(path)) return std::string(a->data, a->size);
  throw IoError("unknown asset: " + std::string(path));
}

bool exists(std::string_view path) {
  return !override_path(path).empty() || find_embedded(path) != nullptr;
}

std::vector<std::string> list() {
  std::vector<std::string> out;
  for (const auto& a : detail::kEmbeddedAssets) out.emplace_back(a.path);
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace codekg::assets
