#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

// Small string helpers shared across modules.
namespace epicohort::text {

std::string to_lower(std::string_view s);
std::string to_upper(std::string_view s);
std::string_view trim(std::string_view s);
bool iequals(std::string_view a, std::string_view b);
bool starts_with_icase(std::string_view s, std::string_view prefix);
std::vector<std::string> split(std::string_view s, char sep);
std::string join(const std::vector<std::string>& parts, std::string_view sep);
std::string replace_all(std::string s, std::string_view from, std::string_view to);

// Lowercase alphanumeric runs.
std::vector<std::string> word_tokens(std::string_view s);

std::uint64_t fnv1a64(std::string_view s);
std::string hex64(std::uint64_t v);

// Number of UTF-8 code points.
std::size_t utf8_length(std::string_view s);

std::string read_file(const std::string& path);
void write_file(const std::string& path, std::string_view contents);

// Delimited text with an optional quote character ("). The delimiter is
// tab when the first line contains one, comma otherwise. Blank lines are
// dropped. Rows are returned as-is, header included.
std::vector<std::vector<std::string>> parse_delimited(std::string_view contents);

// Replaces `{{key}}` markers in one pass; unknown keys are left intact.
std::string render_template(std::string_view tmpl,
                            const std::vector<std::pair<std::string, std::string>>& vars);

}  // namespace epicohort::text
