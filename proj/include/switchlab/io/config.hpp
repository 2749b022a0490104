#pragma once

// INI-style experiment configs ([section] / key = value, full-line "#" or ";"
// comments; no inline comments, since ";" separates matrix rows),
// parsed with boost::property_tree. Every lookup names the field it failed on.

#include <cstdint>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "switchlab/errors.hpp"

namespace switchlab::io {

class ConfigError : public InvalidArgument {
 public:
  using InvalidArgument::InvalidArgument;
};

class Config {
 public:
  Config() = default;

  [[nodiscard]] static Config from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config: cannot open '" + path + "'");
    return from_stream(in, path);
  }

  [[nodiscard]] static Config from_string(const std::string& text, const std::string& origin = "<string>") {
    std::istringstream in(text);
    return from_stream(in, origin);
  }

  [[nodiscard]] bool has(const std::string& key) const { return tree_.get_optional<std::string>(path(key)).has_value(); }

  /// `key` is "section.field". Missing keys give `fallback`; malformed values throw.
  template <class T>
  [[nodiscard]] T get(const std::string& key, const T& fallback) const {
    const auto raw = tree_.get_optional<std::string>(path(key));
    if (!raw) return fallback;
    return parse<T>(key, *raw);
  }

  template <class T>
  [[nodiscard]] T require(const std::string& key) const {
    const auto raw = tree_.get_optional<std::string>(path(key));
    if (!raw) throw ConfigError(origin_ + ": missing required field '" + key + "'");
    return parse<T>(key, *raw);
  }

  /// Whitespace-separated numbers.
  [[nodiscard]] std::vector<double> vector(const std::string& key) const {
    const std::string raw = require<std::string>(key);
    std::istringstream in(raw);
    std::vector<double> v;
    std::string tok;
    while (in >> tok) v.push_back(parse<double>(key, tok));
    if (v.empty()) throw ConfigError(origin_ + ": field '" + key + "' is empty");
    return v;
  }

  /// Square matrix written row by row, rows separated by ';'.
  [[nodiscard]] Eigen::MatrixXd matrix(const std::string& key) const {
    const std::string raw = require<std::string>(key);
    std::vector<std::vector<double>> rows;
    std::istringstream in(raw);
    std::string row;
    while (std::getline(in, row, ';')) {
      std::istringstream rs(row);
      std::vector<double> r;
      std::string tok;
      while (rs >> tok) r.push_back(parse<double>(key, tok));
      if (!r.empty()) rows.push_back(std::move(r));
    }
    const std::size_t n = rows.size();
    if (n == 0) throw ConfigError(origin_ + ": field '" + key + "' is empty");
    Eigen::MatrixXd m(n, n);
    for (std::size_t i = 0; i < n; ++i) {
      if (rows[i].size() != n) {
        throw ConfigError(origin_ + ": field '" + key + "' row " + std::to_string(i + 1) + " has " +
                          std::to_string(rows[i].size()) + " entries, expected " + std::to_string(n));
      }
      for (std::size_t j = 0; j < n; ++j) m(i, j) = rows[i][j];
    }
    return m;
  }

  [[nodiscard]] const std::string& origin() const { return origin_; }

 private:
  static Config from_stream(std::istream& in, const std::string& origin) {
    Config c;
    c.origin_ = origin;
    try {
      boost::property_tree::ini_parser::read_ini(in, c.tree_);
    } catch (const boost::property_tree::ini_parser_error& e) {
      throw ConfigError(origin + ":" + std::to_string(e.line()) + ": " + e.message());
    }
    return c;
  }

  static boost::property_tree::ptree::path_type path(const std::string& key) {
    return boost::property_tree::ptree::path_type(key, '.');
  }

  template <class T>
  T parse(const std::string& key, const std::string& raw) const {
    if constexpr (std::is_same_v<T, std::string>) {
      return raw;
    } else if constexpr (std::is_same_v<T, bool>) {
      if (raw == "true" || raw == "1" || raw == "yes") return true;
      if (raw == "false" || raw == "0" || raw == "no") return false;
      throw ConfigError(origin_ + ": field '" + key + "': expected a boolean, got '" + raw + "'");
    } else {
      std::istringstream in(raw);
      T v{};
      in >> v;
      if (in.fail() || !(in >> std::ws).eof()) {
        throw ConfigError(origin_ + ": field '" + key + "': expected a number, got '" + raw + "'");
      }
      return v;
    }
  }

  boost::property_tree::ptree tree_;
  std::string origin_ = "<empty>";
};

}  // namespace switchlab::io
