// Copyright 2026 The nanofb Authors
// SPDX-License-Identifier: Apache-2.0
#include <string>
#include <utility>
#include <vector>

#include "nanofb/config.hpp"
#include "nanofb/error.hpp"

namespace nanofb {

namespace detail {
const std::vector<std::pair<std::string, std::string>>& preset_table();
}

std::vector<std::string> preset_names() {
  std::vector<std::string> out;
  for (const auto& [name, text] : detail::preset_table()) out.push_back(name);
  return out;
}

const std::string& preset_text(const std::string& name) {
  for (const auto& [n, text] : detail::preset_table()) {
    if (n == name) return text;
  }
  std::string known;
  for (const auto& n : preset_names()) known += " " + n;
  throw Error(ErrorCode::config, "unknown preset '" + name + "' (known:" + known + ")");
}

RunConfig load_preset(const std::string& name) { return parse_config(preset_text(name), "preset:" + name); }

}  // namespace nanofb
