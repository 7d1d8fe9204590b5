#include "hiertrack/text.hpp"

#include "hiertrack/core.hpp"

#include <cerrno>
#include <charconv>
#include <cstdio>
#include <cstdlib>

namespace hiertrack::text {

std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r\n");
    return s.substr(first, last - first + 1);
}

std::vector<std::string> split(std::string_view s, char sep) {
    std::vector<std::string> out;
    std::size_t pos = 0;
    while (true) {
        const auto next = s.find(sep, pos);
        out.emplace_back(trim(s.substr(pos, next == std::string_view::npos ? std::string_view::npos : next - pos)));
        if (next == std::string_view::npos) break;
        pos = next + 1;
    }
    return out;
}

namespace {

[[noreturn]] void bad_value(std::string_view s, std::string_view what, std::string_view kind) {
    throw Error(ErrorKind::InvalidInput,
                std::string(what) + ": expected " + std::string(kind) + ", got '" + std::string(s) + "'");
}

}  // namespace

long long parse_int64(std::string_view s, std::string_view what) {
    s = trim(s);
    long long v = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) bad_value(s, what, "an integer");
    return v;
}

int parse_int(std::string_view s, std::string_view what) {
    const long long v = parse_int64(s, what);
    if (v < INT32_MIN || v > INT32_MAX) bad_value(s, what, "a 32-bit integer");
    return static_cast<int>(v);
}

double parse_double(std::string_view s, std::string_view what) {
    const std::string str(trim(s));
    if (str.empty()) bad_value(s, what, "a number");
    char* end = nullptr;
    errno = 0;
    const double v = std::strtod(str.c_str(), &end);
    if (end != str.c_str() + str.size() || errno == ERANGE) bad_value(s, what, "a number");
    return v;
}

bool parse_bool(std::string_view s, std::string_view what) {
    s = trim(s);
    if (s == "true" || s == "1" || s == "yes") return true;
    if (s == "false" || s == "0" || s == "no") return false;
    bad_value(s, what, "a boolean");
}

std::vector<int> parse_int_list(std::string_view s, std::string_view what) {
    std::vector<int> out;
    if (trim(s).empty()) return out;
    for (const auto& part : split(s, ',')) out.push_back(parse_int(part, what));
    return out;
}

std::string format_int_list(const std::vector<int>& values) {
    std::string out;
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (i) out += ',';
        out += std::to_string(values[i]);
    }
    return out;
}

std::string format_double(double value) {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
    return {buf, ptr};
}

std::map<std::string, std::string> parse_key_values(std::string_view content, std::string_view source) {
    std::map<std::string, std::string> out;
    int line_no = 0;
    for (const auto& raw : split(content, '\n')) {
        ++line_no;
        std::string_view line = raw;
        if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string_view::npos) {
            throw Error(ErrorKind::InvalidConfig,
                        std::string(source) + ":" + std::to_string(line_no) + ": expected key = value");
        }
        out[std::string(trim(line.substr(0, eq)))] = std::string(trim(line.substr(eq + 1)));
    }
    return out;
}

}  // namespace hiertrack::text
