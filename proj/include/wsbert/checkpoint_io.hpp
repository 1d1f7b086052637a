#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "json.hpp"
#include "wsbert/nn.hpp"

namespace wsbert {

// Binary container: 8-byte magic, little-endian u64 header length, a JSON
// header ({"meta": ..., "tensors": [{name, rows, cols}, ...]}), then every
// tensor's row-major doubles in header order.
struct TensorFile {
  nlohmann::json meta;
  std::map<std::string, Matrix> tensors;
};

void WriteTensorFile(const std::filesystem::path& path,
                     const nlohmann::json& meta,
                     const std::vector<const Parameter*>& params);

TensorFile ReadTensorFile(const std::filesystem::path& path);

// Copies tensors into matching parameters by name; shape or name mismatches
// raise Error(kShapeMismatch).
void AssignTensors(const TensorFile& file, const std::vector<Parameter*>& params);

}  // namespace wsbert
