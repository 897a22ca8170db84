#pragma once

// Shared reader for the plain-text, line-oriented data files (curves, TTC
// parameters, controller configuration). See docs/file_formats.md.

#include <cstddef>
#include <istream>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace bess::text {

struct Line {
  std::size_t number = 0;  // 1-based
  std::vector<std::string> tokens;
};

// Splits a document into whitespace-separated tokens per line. Text after '#'
// is a comment; blank lines are dropped.
std::vector<Line> tokenize(std::istream& in);

// Numeric literal. Besides ordinary decimal and e-notation this accepts
//   "8.29^{-18}"  -> 8.29e-18   (mantissa times a power of ten)
//   "7/9"         -> 0.777...   (ratio of two literals)
double parse_number(std::string_view token, std::size_t line);

struct Entry {
  std::string value;
  std::size_t line = 0;
};

// "key = value" document. Duplicate keys are a parse error.
class KeyValueDoc {
public:
  static KeyValueDoc parse(std::istream& in);
  static KeyValueDoc load(const std::string& path);

  bool has(const std::string& key) const { return entries_.count(key) != 0; }
  double number(const std::string& key) const;
  double number_or(const std::string& key, double fallback) const;
  std::string string(const std::string& key) const;
  std::string string_or(const std::string& key, std::string fallback) const;

  // Keys present in the document but absent from `known`.
  std::vector<std::string> unknown_keys(const std::vector<std::string>& known) const;

private:
  const Entry& at(const std::string& key) const;
  std::map<std::string, Entry> entries_;
};

// "name=value" token inside a record header line.
std::pair<std::string, std::string> split_assignment(std::string_view token, std::size_t line);

}  // namespace bess::text
