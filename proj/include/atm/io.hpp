#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "atm/objectives.hpp"

namespace atm {

// Shortest-round-trip-safe formatting; keeps persisted CSVs byte-stable
// across reruns.
std::string fmt_double(double v);

void write_text_file(const std::string& path, const std::string& content);
std::string read_text_file(const std::string& path);
void append_line(const std::string& path, const std::string& line);
bool files_equal(const std::string& a, const std::string& b);

std::string csv_line(const std::vector<std::string>& cells);

// Persisted D_t row. wall_time is serialized as 0 so identical reruns produce
// byte-identical JSONL.
nlohmann::json record_to_json(const EvalRecord& rec);
EvalRecord record_from_json(const nlohmann::json& j);

std::uint64_t fnv1a64(const std::string& s);
std::string hex64(std::uint64_t v);

}  // namespace atm
