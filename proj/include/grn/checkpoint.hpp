#pragma once

#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "grn/tensor.hpp"

namespace grn {

using NamedTensors = std::vector<std::pair<std::string, Tensor>>;

/// Plain-text tensor bundle:
///
///   grn-checkpoint 1 <count>
///   <name> <rank> <extent>...
///   <values, one row per line, %.17g>
///
/// Round-trips doubles exactly.
void write_checkpoint(std::ostream& out, const NamedTensors& tensors);
NamedTensors read_checkpoint(std::istream& in);

void save_checkpoint(const std::string& path, const NamedTensors& tensors);
NamedTensors load_checkpoint(const std::string& path);

/// Looks a tensor up by name; throws std::out_of_range when missing.
const Tensor& find_tensor(const NamedTensors& tensors, const std::string& name);

}  // namespace grn
