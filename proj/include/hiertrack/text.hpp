#pragma once

#include <map>
#include <string>
#include <string_view>
#include <vector>

// Small parsing helpers shared by the config and file readers.
namespace hiertrack::text {

std::string_view trim(std::string_view s);
std::vector<std::string> split(std::string_view s, char sep);

int parse_int(std::string_view s, std::string_view what);
long long parse_int64(std::string_view s, std::string_view what);
double parse_double(std::string_view s, std::string_view what);
bool parse_bool(std::string_view s, std::string_view what);
std::vector<int> parse_int_list(std::string_view s, std::string_view what);

std::string format_int_list(const std::vector<int>& values);
/// Shortest text that parses back to the same double.
std::string format_double(double value);

/// Parses `key = value` lines; '#' starts a comment. Duplicate keys: the last one wins.
std::map<std::string, std::string> parse_key_values(std::string_view content, std::string_view source);

}  // namespace hiertrack::text
