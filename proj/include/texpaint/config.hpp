#pragma once

#include "texpaint/pipeline.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace texpaint {

/// Named starting points: "desk", "paper-scale" and "oracle".
RunConfig preset_config(const std::string &name);
std::vector<std::string> preset_names();

/// INI text with [section] headers. Keys are `section.key`; a bare key is
/// accepted anywhere it is unambiguous. A `preset` key (file or override)
/// selects the defaults the remaining keys are applied on top of. Overrides
/// are "key=value" strings applied after the file.
RunConfig parse_config_text(const std::string &text, const std::vector<std::string> &overrides = {});
/// Empty path means no file.
RunConfig parse_config(const std::filesystem::path &path, const std::vector<std::string> &overrides = {});

/// Every key of cfg in the format parse_config_text reads back exactly.
std::string config_echo(const RunConfig &cfg);

/// Canonical `section.key` names.
std::vector<std::string> config_keys();

} // namespace texpaint
