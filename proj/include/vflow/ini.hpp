// Copyright Contributors to the vflow Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <istream>
#include <map>
#include <string>

namespace vflow {

// Line-based `key = value` configuration with optional [section] headers.
// Keys inside a section are stored as "section.key". '#' and ';' start
// comments; whitespace around keys and values is trimmed.
using ConfigMap = std::map<std::string, std::string>;

ConfigMap parse_ini(std::istream& in);
ConfigMap load_ini(const std::string& path);

// Lookup helpers; the fallback is returned when the key is absent.
std::string config_str(const ConfigMap& cfg, const std::string& key, const std::string& fallback);
double config_num(const ConfigMap& cfg, const std::string& key, double fallback);
int config_int(const ConfigMap& cfg, const std::string& key, int fallback);
bool config_flag(const ConfigMap& cfg, const std::string& key, bool fallback);

}  // namespace vflow
