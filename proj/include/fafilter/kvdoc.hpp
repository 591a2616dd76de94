#pragma once

#include <string>
#include <vector>

namespace fafilter {

// Line-oriented configuration documents shared by the knowledge DSL, the
// pipeline config, and the simulator profile:
//
//   # comment
//   [section]
//   key = value
//
// Blank lines and '#...' comments are skipped. Keys are unique within their
// section; sections are unique within the document. Everything else is a
// syntax error reported with its line number.

struct KvEntry {
    int line = 0;
    std::string key;
    std::string value;
};

struct KvSection {
    int line = 0;
    std::string name;
    std::vector<KvEntry> entries;
};

std::vector<KvSection> parse_kv_document(const std::string& text);

// Value parsers; `where` is "<line N> key 'k'" context prepended to errors.
double kv_double(const KvEntry& e);
int kv_int(const KvEntry& e);
bool kv_bool(const KvEntry& e);

struct KvInterval {
    double lo = 0.0;
    double hi = 0.0;
};

// "lo..hi"
KvInterval kv_interval(const KvEntry& e);

struct KvBox {
    double x0 = 0.0, y0 = 0.0, x1 = 0.0, y1 = 0.0;
};

// "(x0,y0)..(x1,y1)"
KvBox kv_box(const KvEntry& e);

// comma-separated list, items trimmed, empty items rejected
std::vector<std::string> kv_name_list(const KvEntry& e);

}  // namespace fafilter
