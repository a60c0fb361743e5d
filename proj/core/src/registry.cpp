// Copyright (c) the SVRC Authors. All rights reserved.
//
// Use of this source code is governed by the Apache License, Version 2.0
// that can be found in the LICENSE file.

#include "svrc/registry.hpp"

#include <algorithm>
#include <stdexcept>

#include "svrc/serialize.hpp"

namespace svrc {

namespace fs = std::filesystem;

fs::path Registry::anchor_path(uint16_t id) const {
  return root_ / "anchors" / (anchor_name(id) + ".model");
}

fs::path Registry::derivation_path(uint16_t anchor_id, uint16_t id) const {
  return root_ / "derivations" / anchor_name(anchor_id) / (derivation_name(id) + ".stanh");
}

void Registry::save_anchor(const AnchorModel& model) const {
  write_file_atomic(anchor_path(model.id()), model.serialize());
}

AnchorModel Registry::load_anchor(uint16_t id) const {
  const fs::path path = anchor_path(id);
  if (!fs::exists(path)) {
    throw std::runtime_error("registry: anchor " + anchor_name(id) + " not found at " +
                             path.string());
  }
  AnchorModel model = AnchorModel::deserialize(read_file(path));
  if (model.id() != id) {
    throw std::runtime_error("registry: " + path.string() + " claims anchor id " +
                             std::to_string(model.id()));
  }
  return model;
}

void Registry::save_derivation(const Derivation& derivation) const {
  write_file_atomic(derivation_path(derivation.anchor_id, derivation.id),
                    derivation.serialize());
}

Derivation Registry::load_derivation(uint16_t anchor_id, uint16_t id) const {
  if (!fs::exists(anchor_path(anchor_id))) {
    throw std::runtime_error("registry: derivation " + derivation_name(id) +
                             " references missing anchor " + anchor_name(anchor_id));
  }
  const fs::path path = derivation_path(anchor_id, id);
  if (!fs::exists(path)) {
    throw std::runtime_error("registry: derivation " + derivation_name(id) +
                             " of anchor " + anchor_name(anchor_id) + " not found at " +
                             path.string());
  }
  Derivation d = Derivation::deserialize(read_file(path));
  if (d.anchor_id != anchor_id || d.id != id) {
    throw std::runtime_error("registry: " + path.string() + " header/id mismatch");
  }
  return d;
}

namespace {

std::vector<uint16_t> scan_ids(const fs::path& dir, char prefix,
                               const std::string& extension) {
  std::vector<uint16_t> ids;
  if (!fs::exists(dir)) return ids;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file() || entry.path().extension() != extension) continue;
    auto id = Registry::parse_id(entry.path().stem().string(), prefix);
    if (id) ids.push_back(*id);
  }
  std::sort(ids.begin(), ids.end());
  return ids;
}

}  // namespace

std::vector<uint16_t> Registry::list_anchors() const {
  return scan_ids(root_ / "anchors", 'A', ".model");
}

std::vector<uint16_t> Registry::list_derivations(uint16_t anchor_id) const {
  return scan_ids(root_ / "derivations" / anchor_name(anchor_id), 'D', ".stanh");
}

uint16_t Registry::next_anchor_id() const {
  auto ids = list_anchors();
  return ids.empty() ? 1 : static_cast<uint16_t>(ids.back() + 1);
}

uint16_t Registry::next_derivation_id(uint16_t anchor_id) const {
  auto ids = list_derivations(anchor_id);
  return ids.empty() ? 1 : static_cast<uint16_t>(ids.back() + 1);
}

std::pair<StanhLayer, StanhLayer> Registry::resolve_layers(
    const AnchorModel& anchor, const BitstreamHeader& header) const {
  switch (static_cast<LayerMode>(header.mode)) {
    case LayerMode::kAnchor:
      return {anchor.main_layer(), anchor.hyper_layer()};
    case LayerMode::kDerivation: {
      Derivation d = load_derivation(header.anchor_id, header.id0);
      return {d.main_layer, d.hyper_layer};
    }
    case LayerMode::kInterpolation: {
      Derivation a = load_derivation(header.anchor_id, header.id0);
      Derivation b = load_derivation(header.anchor_id, header.id1);
      const double rho = header.rho();
      return {interpolate(a.main_layer, b.main_layer, rho),
              interpolate(a.hyper_layer, b.hyper_layer, rho)};
    }
  }
  throw std::runtime_error("bitstream: unknown layer mode " + std::to_string(header.mode));
}

std::optional<uint16_t> Registry::parse_id(const std::string& name, char prefix) {
  std::string digits = name;
  if (!digits.empty() && (digits[0] == prefix || digits[0] == std::tolower(prefix))) {
    digits.erase(0, 1);
  }
  if (digits.empty() || digits.size() > 5) return std::nullopt;
  uint32_t v = 0;
  for (char c : digits) {
    if (c < '0' || c > '9') return std::nullopt;
    v = v * 10 + (c - '0');
  }
  if (v > 0xFFFF) return std::nullopt;
  return static_cast<uint16_t>(v);
}

}  // namespace svrc
