#include "sdht/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "sdht/errors.hpp"

namespace sdht {

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string csv_row(const std::vector<std::string>& cells) {
  std::string line;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) line += ',';
    line += cells[i];
  }
  line += '\n';
  return line;
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw precondition_error("cannot open file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw precondition_error("cannot open file for writing: " + path);
  out << content;
  out.close();
  if (!out) throw precondition_error("failed to write file: " + path);
}

Channel channel_from_json_text(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const std::exception& e) {
    throw precondition_error(std::string("channel JSON parse error: ") + e.what());
  }
  if (!j.is_object() || !j.contains("rows")) {
    throw precondition_error("channel JSON needs a 'rows' matrix");
  }
  std::vector<std::vector<double>> rows;
  try {
    rows = j.at("rows").get<std::vector<std::vector<double>>>();
  } catch (const std::exception& e) {
    throw precondition_error(std::string("channel 'rows' must be a numeric matrix: ") +
                             e.what());
  }
  return Channel(std::move(rows));
}

std::string channel_to_json_text(const Channel& w) {
  nlohmann::json j;
  j["rows"] = w.rows();
  return j.dump(2);
}

}  // namespace sdht
