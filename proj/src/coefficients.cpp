#include "sigvar/coefficients.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include <fmt/format.h>

namespace sigvar {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

KeyValueFile KeyValueFile::parse(const std::string& text, const std::string& origin) {
  KeyValueFile kv;
  kv.origin_ = origin;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw CoefficientFileError(fmt::format("{}:{}: expected 'key = value'", origin, lineno));
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty() || value.empty()) {
      throw CoefficientFileError(fmt::format("{}:{}: empty key or value", origin, lineno));
    }
    if (!kv.values_.emplace(key, value).second) {
      throw CoefficientFileError(fmt::format("{}:{}: duplicate key '{}'", origin, lineno, key));
    }
  }
  if (!kv.has("format_version")) {
    throw CoefficientFileError(fmt::format("{}: missing format_version", origin));
  }
  if (kv.number("format_version") != kFormatVersion) {
    throw CoefficientFileError(fmt::format("{}: unsupported format_version {}", origin,
                                           kv.text("format_version")));
  }
  return kv;
}

KeyValueFile KeyValueFile::read(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw CoefficientFileError("cannot open coefficient file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse(buf.str(), path.string());
}

const std::string& KeyValueFile::text(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) throw CoefficientFileError(fmt::format("{}: missing key '{}'", origin_, key));
  return it->second;
}

double KeyValueFile::number(const std::string& key) const {
  const std::string& s = text(key);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v)) {
    throw CoefficientFileError(fmt::format("{}: key '{}' is not a finite number: '{}'", origin_, key, s));
  }
  return v;
}

double KeyValueFile::number_or(const std::string& key, double fallback) const {
  return has(key) ? number(key) : fallback;
}

void KeyValueFile::require_only(const std::vector<std::string>& known) const {
  for (const auto& [key, value] : values_) {
    if (key == "format_version") continue;
    if (std::find(known.begin(), known.end(), key) == known.end()) {
      throw CoefficientFileError(fmt::format("{}: unknown key '{}'", origin_, key));
    }
  }
}

}  // namespace sigvar
