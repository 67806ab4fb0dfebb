#pragma once

#include <filesystem>

#include "rreh/trainer.hpp"

namespace rreh {

// RREH1 model container: "RREH1\n", an ASCII header byte count line, the
// UTF-8 key=value header, then FMAT blobs per modality in fixed order
// {centering mean, kernel samples, bandwidth, projection} (kernel blobs
// omitted for identity feature maps).
void save_model(const HashModel& model, const std::filesystem::path& path);
HashModel load_model(const std::filesystem::path& path);

}  // namespace rreh
