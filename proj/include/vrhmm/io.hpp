#pragma once

#include <string>

#include "vrhmm/em_driver.hpp"

namespace vrhmm {

/// CSV observation files: '#'-prefixed schema comment, then one row per time
/// index. Throws DataError on ragged rows or non-numeric fields.
Matrix read_csv(const std::string& path);
void write_csv(const std::string& path, const Matrix& y, const std::string& header);

/// JSON model parameters. The "family" key selects gaussian vs dive models.
/// Files are written atomically (temp file + rename).
HmmParams read_params(const std::string& path);
void write_params(const std::string& path, const HmmParams& params);

void write_trace_csv(const std::string& path, const std::vector<TraceRow>& trace);

/// Atomic text write (temp file + rename), used for every output file.
void write_text(const std::string& path, const std::string& content);

}  // namespace vrhmm
