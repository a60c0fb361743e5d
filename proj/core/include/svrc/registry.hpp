// Copyright (c) the SVRC Authors. All rights reserved.
//
// Use of this source code is governed by the Apache License, Version 2.0
// that can be found in the LICENSE file.
//
// Directory-convention store for trained assets:
//   <root>/anchors/A<n>.model
//   <root>/derivations/A<n>/D<m>.stanh
// Writes are whole-file atomic; reads are lock-free.

#ifndef SVRC_REGISTRY_HPP_
#define SVRC_REGISTRY_HPP_

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "svrc/bitstream.hpp"
#include "svrc/model.hpp"

namespace svrc {

class Registry {
 public:
  explicit Registry(std::filesystem::path root) : root_(std::move(root)) {}

  const std::filesystem::path& root() const { return root_; }
  std::filesystem::path anchor_path(uint16_t id) const;
  std::filesystem::path derivation_path(uint16_t anchor_id, uint16_t id) const;

  void save_anchor(const AnchorModel& model) const;
  AnchorModel load_anchor(uint16_t id) const;

  void save_derivation(const Derivation& derivation) const;
  // Requires the referenced anchor to exist; the error names the missing
  // anchor id otherwise.
  Derivation load_derivation(uint16_t anchor_id, uint16_t id) const;

  std::vector<uint16_t> list_anchors() const;
  std::vector<uint16_t> list_derivations(uint16_t anchor_id) const;
  uint16_t next_anchor_id() const;
  uint16_t next_derivation_id(uint16_t anchor_id) const;

  // Resolves the quantization layers a bitstream header names: the anchor's
  // own, a derivation overlay, or an interpolation of two derivations at the
  // header's fixed-point rho.
  std::pair<StanhLayer, StanhLayer> resolve_layers(const AnchorModel& anchor,
                                                   const BitstreamHeader& header) const;

  static std::string anchor_name(uint16_t id) { return "A" + std::to_string(id); }
  static std::string derivation_name(uint16_t id) { return "D" + std::to_string(id); }
  // Accepts "A3"/"D7" (and bare digits) forms.
  static std::optional<uint16_t> parse_id(const std::string& name, char prefix);

 private:
  std::filesystem::path root_;
};

}  // namespace svrc

#endif  // SVRC_REGISTRY_HPP_
