// Copyright Contributors to the vflow Project
// SPDX-License-Identifier: Apache-2.0

#include "vflow/ini.hpp"

#include <fstream>
#include <stdexcept>

#include "vflow/common.hpp"

namespace vflow {

namespace {

std::string trim(const std::string& s) {
  auto begin = s.find_first_not_of(" \t\r\n");
  if (begin == std::string::npos) return {};
  auto end = s.find_last_not_of(" \t\r\n");
  return s.substr(begin, end - begin + 1);
}

}  // namespace

ConfigMap parse_ini(std::istream& in) {
  ConfigMap cfg;
  std::string line;
  std::string section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto comment = line.find_first_of("#;");
    if (comment != std::string::npos) line.erase(comment);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw std::runtime_error("config line " + std::to_string(lineno) + ": unclosed section");
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error("config line " + std::to_string(lineno) + ": expected key = value");
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (key.empty())
      throw std::runtime_error("config line " + std::to_string(lineno) + ": empty key");
    cfg[section.empty() ? key : section + "." + key] = value;
  }
  return cfg;
}

ConfigMap load_ini(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error(path + ": cannot open config");
  return parse_ini(in);
}

std::string config_str(const ConfigMap& cfg, const std::string& key, const std::string& fallback) {
  auto it = cfg.find(key);
  return it == cfg.end() ? fallback : it->second;
}

double config_num(const ConfigMap& cfg, const std::string& key, double fallback) {
  auto it = cfg.find(key);
  return it == cfg.end() ? fallback : parse_double(it->second);
}

int config_int(const ConfigMap& cfg, const std::string& key, int fallback) {
  auto it = cfg.find(key);
  if (it == cfg.end()) return fallback;
  return std::stoi(it->second);
}

bool config_flag(const ConfigMap& cfg, const std::string& key, bool fallback) {
  auto it = cfg.find(key);
  if (it == cfg.end()) return fallback;
  const std::string& v = it->second;
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw std::runtime_error("config key " + key + ": expected a boolean, got '" + v + "'");
}

}  // namespace vflow
