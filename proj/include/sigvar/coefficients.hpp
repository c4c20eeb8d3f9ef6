#pragma once

#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace sigvar {

class CoefficientFileError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Flat "key = value" text; '#' starts a comment, blank lines are ignored.
/// Every file carries "format_version = 1".
class KeyValueFile {
 public:
  static constexpr int kFormatVersion = 1;

  static KeyValueFile parse(const std::string& text, const std::string& origin = "<string>");
  static KeyValueFile read(const std::filesystem::path& path);

  bool has(const std::string& key) const { return values_.count(key) > 0; }
  const std::string& text(const std::string& key) const;
  double number(const std::string& key) const;
  double number_or(const std::string& key, double fallback) const;
  const std::map<std::string, std::string>& entries() const { return values_; }

  /// Fails on keys that are not in `known`; catches typos in edited files.
  void require_only(const std::vector<std::string>& known) const;

 private:
  std::map<std::string, std::string> values_;
  std::string origin_;
};

}  // namespace sigvar
