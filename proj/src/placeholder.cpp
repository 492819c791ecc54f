#include "epicohort/placeholder.hpp"

#include "epicohort/errors.hpp"

#include <cctype>

namespace epicohort {

std::string Placeholder::surface() const {
    return "[" + std::string(domain_surface(domain)) + "@" + term + "]";
}

std::vector<Placeholder> parse_placeholders(std::string_view sql) {
    std::vector<Placeholder> out;
    std::size_t i = 0;
    while ((i = sql.find('[', i)) != std::string_view::npos) {
        const std::size_t close = sql.find(']', i + 1);
        const std::size_t next_open = sql.find('[', i + 1);
        const std::size_t newline = sql.find('\n', i + 1);
        const std::size_t at = sql.find('@', i + 1);

        if (close == std::string_view::npos || (next_open != std::string_view::npos && next_open < close)) {
            // Unclosed bracket. It is only an error when it reads like the
            // start of a placeholder: `[word@`.
            std::size_t j = i + 1;
            while (j < sql.size() && std::isalpha(static_cast<unsigned char>(sql[j]))) ++j;
            if (j > i + 1 && j < sql.size() && sql[j] == '@') {
                const std::size_t stop = next_open == std::string_view::npos ? sql.size() : next_open;
                throw GrammarError("unterminated placeholder", i, stop);
            }
            ++i;
            continue;
        }
        if (at == std::string_view::npos || at > close) {
            i = close + 1;  // plain bracketed text
            continue;
        }
        const auto domain_text = sql.substr(i + 1, at - i - 1);
        const auto term = sql.substr(at + 1, close - at - 1);
        const auto domain = parse_domain(domain_text);
        if (!domain || domain_text.empty() ||
            domain_text.find_first_of(" \t") != std::string_view::npos) {
            throw GrammarError("unknown placeholder domain '" + std::string(domain_text) + "'", i, close + 1);
        }
        if (term.empty() || term.find_first_not_of(" \t") == std::string_view::npos) {
            throw GrammarError("empty placeholder term", i, close + 1);
        }
        if (newline != std::string_view::npos && newline < close) {
            throw GrammarError("placeholder term spans a newline", i, close + 1);
        }
        out.push_back({*domain, std::string(term), i, close + 1});
        i = close + 1;
    }
    return out;
}

}  // namespace epicohort
