#pragma once

#include <string>
#include <string_view>

namespace iops {

/// Shortest decimal text that parses back to exactly `v`.
std::string format_real(double v);

/// Strict full-string parse; returns false on trailing garbage.
bool parse_real(std::string_view text, double& out);
bool parse_index(std::string_view text, unsigned long long& out);

std::string_view trim(std::string_view s);

}  // namespace iops
