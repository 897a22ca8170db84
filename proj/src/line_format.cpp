#include "bess/line_format.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

#include "bess/error.hpp"

namespace bess::text {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

double parse_plain(std::string_view tok, std::size_t line) {
  // from_chars rejects a leading '+', strtod-style literals allow it.
  if (!tok.empty() && tok.front() == '+') tok.remove_prefix(1);
  double value = 0.0;
  const auto* begin = tok.data();
  const auto* end = tok.data() + tok.size();
  auto [ptr, ec] = std::from_chars(begin, end, value);
  if (tok.empty() || ec != std::errc{} || ptr != end) {
    throw ParseError(line, "invalid number '" + std::string(tok) + "'");
  }
  return value;
}

}  // namespace

std::vector<Line> tokenize(std::istream& in) {
  std::vector<Line> out;
  std::string raw;
  std::size_t number = 0;
  while (std::getline(in, raw)) {
    ++number;
    if (auto hash = raw.find('#'); hash != std::string::npos) raw.erase(hash);
    std::istringstream words(raw);
    Line line{number, {}};
    for (std::string w; words >> w;) line.tokens.push_back(std::move(w));
    if (!line.tokens.empty()) out.push_back(std::move(line));
  }
  return out;
}

double parse_number(std::string_view token, std::size_t line) {
  token = trim(token);
  if (auto slash = token.find('/'); slash != std::string_view::npos) {
    const double num = parse_number(token.substr(0, slash), line);
    const double den = parse_number(token.substr(slash + 1), line);
    if (den == 0.0) throw ParseError(line, "zero denominator in '" + std::string(token) + "'");
    return num / den;
  }
  if (auto caret = token.find('^'); caret != std::string_view::npos) {
    std::string_view exponent = token.substr(caret + 1);
    if (exponent.size() < 3 || exponent.front() != '{' || exponent.back() != '}') {
      throw ParseError(line, "expected '^{n}' in '" + std::string(token) + "'");
    }
    exponent = exponent.substr(1, exponent.size() - 2);
    const std::string literal =
        std::string(token.substr(0, caret)) + "e" + std::string(trim(exponent));
    return parse_plain(literal, line);
  }
  return parse_plain(token, line);
}

std::pair<std::string, std::string> split_assignment(std::string_view token, std::size_t line) {
  const auto eq = token.find('=');
  if (eq == std::string_view::npos || eq == 0 || eq + 1 == token.size()) {
    throw ParseError(line, "expected name=value, got '" + std::string(token) + "'");
  }
  return {std::string(token.substr(0, eq)), std::string(token.substr(eq + 1))};
}

KeyValueDoc KeyValueDoc::parse(std::istream& in) {
  KeyValueDoc doc;
  std::string raw;
  std::size_t number = 0;
  while (std::getline(in, raw)) {
    ++number;
    if (auto hash = raw.find('#'); hash != std::string::npos) raw.erase(hash);
    const std::string_view body = trim(raw);
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string_view::npos) {
      throw ParseError(number, "expected 'key = value'");
    }
    const std::string key(trim(body.substr(0, eq)));
    const std::string value(trim(body.substr(eq + 1)));
    if (key.empty() || value.empty()) throw ParseError(number, "empty key or value");
    if (doc.entries_.count(key) != 0) throw ParseError(number, "duplicate key '" + key + "'");
    doc.entries_.emplace(key, Entry{value, number});
  }
  return doc;
}

KeyValueDoc KeyValueDoc::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open '" + path + "'");
  return parse(in);
}

const Entry& KeyValueDoc::at(const std::string& key) const {
  auto it = entries_.find(key);
  if (it == entries_.end()) throw ValidationError("missing required key '" + key + "'");
  return it->second;
}

double KeyValueDoc::number(const std::string& key) const {
  const Entry& e = at(key);
  return parse_number(e.value, e.line);
}

double KeyValueDoc::number_or(const std::string& key, double fallback) const {
  return has(key) ? number(key) : fallback;
}

std::string KeyValueDoc::string(const std::string& key) const { return at(key).value; }

std::string KeyValueDoc::string_or(const std::string& key, std::string fallback) const {
  return has(key) ? string(key) : std::move(fallback);
}

std::vector<std::string> KeyValueDoc::unknown_keys(const std::vector<std::string>& known) const {
  std::vector<std::string> out;
  for (const auto& [key, entry] : entries_) {
    if (std::find(known.begin(), known.end(), key) == known.end()) out.push_back(key);
  }
  return out;
}

}  // namespace bess::text
