#pragma once

#include <string>
#include <vector>

#include "pnr/field.hpp"

namespace pnr {

// Soft-edged sphere; color given as effective rgb in (0,1).
struct Blob {
  Vec3 center;
  double radius = 0.4;
  double r = 0.5, g = 0.5, b = 0.5;
};

FieldParams make_blob_field(GridDims dims, const std::vector<Blob>& blobs,
                            Bbox bbox = {});

// Built-in edit scenarios: procedural (source, edit target) field pairs.
struct Scenario {
  std::string name;
  FieldParams source;
  FieldParams target;
};

// Names: "color_change", "object_added", "object_moved".
Scenario make_scenario(const std::string& name, GridDims dims);

std::vector<std::string> scenario_names();

}  // namespace pnr
