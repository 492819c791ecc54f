#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace epicohort::prompts {

// Versioned prompt templates compiled in from prompts/*.txt. The first line
// of each asset is `# version: N`; it is stripped from the template body.
struct PromptAsset {
    std::string name;
    int version = 0;
    std::string body;
};

// Throws ConfigError for unknown names.
const PromptAsset& get(std::string_view name);
std::vector<std::string> names();

}  // namespace epicohort::prompts
