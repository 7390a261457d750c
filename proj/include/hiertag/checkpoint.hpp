#pragma once

#include <string>

#include "hiertag/heads.hpp"

namespace hiertag {

// Checkpoint file layout, version 1:
//   bytes 0-5   magic "HTCKPT"
//   uint32      format version (little-endian)
//   uint64      header length in bytes (little-endian)
//   header      UTF-8 JSON: variant, input_dim, encoder_hidden, hierarchy
//               (embedded config object), hierarchy_fingerprint (hex), and a
//               params array of {name, rows, cols} in parameter order
//   payload     each parameter's entries as row-major IEEE-754 doubles,
//               little-endian, in the same order as the header's params
// Loading rebuilds the model and verifies magic, version, shapes, and the
// hierarchy fingerprint; any disagreement raises IoError.
void save_checkpoint(const HeadModel& model, const std::string& path);
HeadModel load_checkpoint(const std::string& path);

}  // namespace hiertag
