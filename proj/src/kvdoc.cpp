#include "fafilter/kvdoc.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdio>
#include <set>
#include <sstream>

#include "fafilter/errors.hpp"

namespace fafilter {

namespace {

std::string trim(const std::string& s) {
    auto begin = s.find_first_not_of(" \t\r");
    if (begin == std::string::npos) return {};
    auto end = s.find_last_not_of(" \t\r");
    return s.substr(begin, end - begin + 1);
}

[[noreturn]] void fail(int line, const std::string& msg) {
    throw ConfigError("line " + std::to_string(line) + ": " + msg);
}

[[noreturn]] void fail_key(const KvEntry& e, const std::string& msg) {
    fail(e.line, "key '" + e.key + "': " + msg);
}

double parse_number(const KvEntry& e, const std::string& token) {
    const std::string t = trim(token);
    if (t.empty()) fail_key(e, "empty number");
    const char* begin = t.data();
    const char* end = t.data() + t.size();
    double out = 0.0;
    auto [ptr, ec] = std::from_chars(begin, end, out);
    if (ec != std::errc{} || ptr != end) fail_key(e, "malformed number '" + t + "'");
    return out;
}

}  // namespace

std::vector<KvSection> parse_kv_document(const std::string& text) {
    std::vector<KvSection> sections;
    std::set<std::string> seen_sections;
    std::istringstream in(text);
    std::string raw;
    int line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        auto hash = raw.find('#');
        if (hash != std::string::npos) raw.erase(hash);
        const std::string line = trim(raw);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') fail(line_no, "unterminated section header");
            const std::string name = trim(line.substr(1, line.size() - 2));
            if (name.empty()) fail(line_no, "empty section name");
            if (!seen_sections.insert(name).second) fail(line_no, "duplicate section '" + name + "'");
            sections.push_back(KvSection{line_no, name, {}});
            continue;
        }
        auto eq = line.find('=');
        if (eq == std::string::npos) fail(line_no, "expected 'key = value'");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty()) fail(line_no, "empty key");
        if (value.empty()) fail(line_no, "key '" + key + "' has no value");
        if (sections.empty()) fail(line_no, "key '" + key + "' appears before any section");
        auto& entries = sections.back().entries;
        const bool dup = std::any_of(entries.begin(), entries.end(),
                                     [&](const KvEntry& e) { return e.key == key; });
        if (dup) fail(line_no, "duplicate key '" + key + "'");
        entries.push_back(KvEntry{line_no, key, value});
    }
    return sections;
}

double kv_double(const KvEntry& e) { return parse_number(e, e.value); }

int kv_int(const KvEntry& e) {
    const double v = parse_number(e, e.value);
    const int i = static_cast<int>(v);
    if (static_cast<double>(i) != v) fail_key(e, "expected an integer");
    return i;
}

bool kv_bool(const KvEntry& e) {
    if (e.value == "true") return true;
    if (e.value == "false") return false;
    fail_key(e, "expected true or false");
}

KvInterval kv_interval(const KvEntry& e) {
    auto dots = e.value.find("..");
    if (dots == std::string::npos) fail_key(e, "expected 'lo..hi'");
    KvInterval iv;
    iv.lo = parse_number(e, e.value.substr(0, dots));
    iv.hi = parse_number(e, e.value.substr(dots + 2));
    if (iv.lo > iv.hi) fail_key(e, "range lower bound exceeds upper bound");
    return iv;
}

KvBox kv_box(const KvEntry& e) {
    // (x0,y0)..(x1,y1)
    const std::string& v = e.value;
    auto dots = v.find("..");
    if (dots == std::string::npos) fail_key(e, "expected '(x0,y0)..(x1,y1)'");
    auto parse_point = [&](const std::string& s, double& x, double& y) {
        const std::string t = trim(s);
        if (t.size() < 5 || t.front() != '(' || t.back() != ')')
            fail_key(e, "expected '(x,y)' in region");
        const std::string inner = t.substr(1, t.size() - 2);
        auto comma = inner.find(',');
        if (comma == std::string::npos) fail_key(e, "expected '(x,y)' in region");
        x = parse_number(e, inner.substr(0, comma));
        y = parse_number(e, inner.substr(comma + 1));
    };
    KvBox box;
    parse_point(v.substr(0, dots), box.x0, box.y0);
    parse_point(v.substr(dots + 2), box.x1, box.y1);
    if (box.x0 > box.x1 || box.y0 > box.y1) fail_key(e, "region corners out of order");
    return box;
}

std::vector<std::string> kv_name_list(const KvEntry& e) {
    std::vector<std::string> names;
    std::string item;
    std::istringstream in(e.value);
    while (std::getline(in, item, ',')) {
        const std::string name = trim(item);
        if (name.empty()) fail_key(e, "empty list item");
        names.push_back(name);
    }
    if (names.empty()) fail_key(e, "empty list");
    return names;
}

}  // namespace fafilter
