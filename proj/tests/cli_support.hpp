#pragma once

// Scenario builders and CSV helpers for the command tests.

#include <atomic>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "subphase/cli.hpp"

namespace clitest {

using nlohmann::json;
namespace fs = std::filesystem;

class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = fs::temp_directory_path() /
            ("subphase_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    fs::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  fs::path file(const std::string& name) const { return path_ / name; }

  fs::path write(const std::string& name, const json& doc) const {
    const auto p = file(name);
    std::ofstream(p) << doc.dump(2);
    return p;
  }

 private:
  fs::path path_;
};

inline json pair(double re, double im = 0.0) { return json::array({re, im}); }

inline json zero_matrix(std::size_t n) {
  json m = json::array();
  for (std::size_t i = 0; i < n * n; ++i) m.push_back(pair(0.0));
  return m;
}

inline json entry_matrix(std::size_t n, std::size_t a, std::size_t b, double re, double im = 0.0) {
  json m = zero_matrix(n);
  m[a * n + b] = pair(re, im);
  return m;
}

inline json base_two_level(double w = 0.0) {
  json terms = json::array();
  if (w != 0.0) {
    terms.push_back({{"matrix", entry_matrix(2, 0, 1, w)}, {"carrier", 1.0}});
    terms.push_back({{"matrix", entry_matrix(2, 1, 0, w)}, {"carrier", -1.0}});
  }
  return {{"spectrum", {{"energies", {0.0, 1.0}}, {"hbar", 1.0}}},
          {"drive", {{"terms", terms}}},
          {"grid", {{"t_start", 0.0}, {"t_end", 10.0}, {"steps", 400}}},
          {"initial", {{"index", 0}}},
          {"analysis", json::object()}};
}

inline json exponential_two_level(double B0 = 0.1, double delta0 = 0.0) {
  return {{"spectrum", {{"energies", {-0.5, 0.5}}}},
          {"drive", {{"from_model", true}}},
          {"grid", {{"t_start", -80.0}, {"t_end", 5.0}, {"steps", 8500}}},
          {"initial", {{"index", 1}}},
          {"analysis", json::object()},
          {"model",
           {{"type", "two_level"},
            {"parameters",
             {{"Delta", 0.5}, {"B0", B0}, {"lambda", 0.2}, {"omega", 1.0}, {"delta0", delta0}}}}}};
}

inline json perturbation(double Omega) {
  return {{"spectrum", {{"energies", {0.0, 1.5}}}},
          {"drive", {{"terms", json::array()}}},
          {"grid", {{"t_start", 0.0}, {"t_end", 20.0}, {"steps", 200}}},
          {"initial", {{"index", 0}}},
          {"analysis", json::object()},
          {"model",
           {{"type", "perturbation"},
            {"parameters",
             {{"matrix_element", pair(0.01)}, {"Omega", Omega}, {"omega", 1.0}, {"omega_nk", 1.5}}}}}};
}

struct Captured {
  int code = -1;
  json status;
  std::string diagnostics;
};

inline Captured run(const std::string& command, const fs::path& scenario,
                    const std::optional<fs::path>& out, unsigned threads = 1) {
  std::ostringstream status;
  std::ostringstream diag;
  subphase::cli::CommandContext ctx{threads, &status, &diag};
  Captured c;
  c.code = subphase::cli::run(command, scenario, out, ctx);
  c.status = json::parse(status.str());
  c.diagnostics = diag.str();
  return c;
}

struct Csv {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::size_t column(const std::string& name) const {
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (header[i] == name) return i;
    }
    throw std::out_of_range("no column " + name);
  }
};

inline std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  return out;
}

inline Csv read_csv(const fs::path& p) {
  std::ifstream in(p);
  Csv csv;
  std::string line;
  std::getline(in, line);
  csv.header = split(line);
  while (std::getline(in, line)) csv.rows.push_back(split(line));
  return csv;
}

inline std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace clitest
