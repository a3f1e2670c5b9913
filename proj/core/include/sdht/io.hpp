#pragma once

#include <string>
#include <vector>

#include "sdht/channel.hpp"

namespace sdht {

// Fixed %.17g rendering: round-trips IEEE doubles and is byte-stable, so CSV
// fixtures and determinism checks can compare raw bytes.
std::string format_double(double v);

// One CSV record with LF terminator; comma separator, numerics unquoted.
std::string csv_row(const std::vector<std::string>& cells);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);

// Channel file format: {"rows": [[W(0|0), W(1|0), ...], ...]}.
Channel channel_from_json_text(const std::string& text);
std::string channel_to_json_text(const Channel& w);

}  // namespace sdht
