#include "atm/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace atm {

std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open for writing: " + path);
    os << content;
    if (!os) throw std::runtime_error("write failed: " + path);
}

std::string read_text_file(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open: " + path);
    std::ostringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

void append_line(const std::string& path, const std::string& line) {
    std::ofstream os(path, std::ios::binary | std::ios::app);
    if (!os) throw std::runtime_error("cannot open for append: " + path);
    os << line << '\n';
    if (!os) throw std::runtime_error("append failed: " + path);
}

bool files_equal(const std::string& a, const std::string& b) {
    return read_text_file(a) == read_text_file(b);
}

std::string csv_line(const std::vector<std::string>& cells) {
    std::string line;
    for (std::size_t i = 0; i < cells.size(); ++i) {
        if (i > 0) line += ',';
        line += cells[i];
    }
    return line;
}

nlohmann::json record_to_json(const EvalRecord& rec) {
    nlohmann::json j;
    j["policy"] = rec.policy;
    if (rec.fixed_ratio >= 0) j["ratio"] = rec.fixed_ratio;
    j["A"] = -rec.objectives.neg_accuracy;
    j["F"] = rec.objectives.flops;
    j["C"] = rec.objectives.comm_cost;
    j["snr_db"] = rec.snr_db;
    j["n_samples"] = rec.n_samples;
    j["seed"] = rec.seed;
    j["wall_time"] = 0.0;
    return j;
}

EvalRecord record_from_json(const nlohmann::json& j) {
    EvalRecord rec;
    j.at("policy").get_to(rec.policy);
    if (j.contains("ratio")) rec.fixed_ratio = j.at("ratio").get<int>();
    rec.objectives.neg_accuracy = -j.at("A").get<double>();
    rec.objectives.flops = j.at("F").get<double>();
    rec.objectives.comm_cost = j.at("C").get<double>();
    rec.snr_db = j.at("snr_db").get<double>();
    rec.n_samples = j.at("n_samples").get<int>();
    rec.seed = j.at("seed").get<std::uint64_t>();
    rec.wall_time = j.at("wall_time").get<double>();
    return rec;
}

std::uint64_t fnv1a64(const std::string& s) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (char c : s) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ull;
    }
    return h;
}

std::string hex64(std::uint64_t v) {
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

}  // namespace atm
