#include "epicohort/prompts.hpp"

#include "epicohort/errors.hpp"

#include <charconv>
#include <map>

namespace epicohort::prompts {

namespace detail {
struct RawAsset {
    std::string_view name;
    std::string_view text;
};
extern const RawAsset kRawAssets[];
extern const int kRawAssetCount;
}  // namespace detail

namespace {

PromptAsset decode(const detail::RawAsset& raw) {
    PromptAsset a;
    a.name = std::string(raw.name);
    std::string_view text = raw.text;
    constexpr std::string_view kTag = "# version:";
    if (text.substr(0, kTag.size()) != kTag) {
        throw ConfigError("prompt asset '" + a.name + "' lacks a '# version: N' first line");
    }
    const auto eol = text.find('\n');
    auto num = text.substr(kTag.size(), eol - kTag.size());
    while (!num.empty() && num.front() == ' ') num.remove_prefix(1);
    while (!num.empty() && (num.back() == ' ' || num.back() == '\r')) num.remove_suffix(1);
    if (std::from_chars(num.data(), num.data() + num.size(), a.version).ec != std::errc{}) {
        throw ConfigError("prompt asset '" + a.name + "' has a bad version line");
    }
    a.body = eol == std::string_view::npos ? "" : std::string(text.substr(eol + 1));
    return a;
}

const std::map<std::string, PromptAsset, std::less<>>& registry() {
    static const auto assets = [] {
        std::map<std::string, PromptAsset, std::less<>> m;
        for (int i = 0; i < detail::kRawAssetCount; ++i) {
            auto a = decode(detail::kRawAssets[i]);
            m.emplace(a.name, std::move(a));
        }
        return m;
    }();
    return assets;
}

}  // namespace

const PromptAsset& get(std::string_view name) {
    const auto& r = registry();
    auto it = r.find(name);
    if (it == r.end()) throw ConfigError("unknown prompt asset '" + std::string(name) + "'");
    return it->second;
}

std::vector<std::string> names() {
    std::vector<std::string> out;
    for (const auto& [name, _] : registry()) out.push_back(name);
    return out;
}

}  // namespace epicohort::prompts
