#pragma once

#include <memory>
#include <string>

#include "alvc/nets.hpp"

namespace alvc {

// Single-file parameter archive: a JSON manifest (schema version, config,
// architecture hash, lambda, distortion) followed by named float32 tensors.
void save_checkpoint(const std::string& path, const nets::CodecModel& model);
std::unique_ptr<nets::CodecModel> load_checkpoint(const std::string& path);

std::string manifest_json(const nets::CodecModel& model);

}  // namespace alvc
