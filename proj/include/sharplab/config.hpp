#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "sharplab/harness.hpp"

namespace sharplab {

/// Named hyper-parameter sets. "desk" is the desk-scale spirals default; the
/// others mirror published CIFAR (cnn_cifar, wrn_cifar), ViT fine-tuning (vit)
/// and GLUE (glue_cola, glue_mrpc, glue_sst2, glue_qqp) settings.
RunConfig preset_config(std::string_view name);
std::vector<std::string> preset_names();

/// Parses the key=value config format:
///
///   preset = cnn_cifar        # optional, top level only
///   [sharpness]
///   rho = 0.2
///   m_values = 4,8,16
///
/// The preset (default `default_preset`) is resolved first, then every
/// assignment in file order, then `overrides` ("section.key=value") in order,
/// so later writes win. Unknown sections or keys, malformed values and
/// invariant violations raise ParseError naming the key and line.
RunConfig parse_config(std::string_view text, std::span<const std::string> overrides = {},
                       std::string_view default_preset = "desk");

/// Every accepted "section.key" name.
std::vector<std::string> config_keys();

}  // namespace sharplab
