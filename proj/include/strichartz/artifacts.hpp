#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "json.hpp"

namespace strichartz {

/// Shortest text with 17 significant digits, '.' separator, no locale.
std::string format_double(double v);

using CsvCell = std::variant<double, std::int64_t, std::string>;

/// CSV file with a fixed header; numbers use format_double.
class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& path, std::vector<std::string> header);
  void row(const std::vector<CsvCell>& cells);
  const std::vector<std::string>& header() const { return header_; }

 private:
  std::ofstream out_;
  std::vector<std::string> header_;
};

/// Parsed CSV: header plus rows of raw string cells.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::size_t column(const std::string& name) const;
  std::vector<double> numbers(const std::string& name) const;
};

CsvTable read_csv(const std::filesystem::path& path);

/// "key = value" lines, one record per call.
class RecordWriter {
 public:
  explicit RecordWriter(const std::filesystem::path& path);
  RecordWriter& put(const std::string& key, double value);
  RecordWriter& put(const std::string& key, std::int64_t value);
  RecordWriter& put(const std::string& key, const std::string& value);

 private:
  std::ofstream out_;
};

std::string sha256_hex(std::string_view data);
std::string sha256_file(const std::filesystem::path& path);

/// Stable hash of a JSON document (keys sorted, compact dump).
std::string config_hash(const nlohmann::json& config);

/// Library version plus the source revision recorded at configure time.
std::string code_version();

struct ManifestEntry {
  std::string path;  // relative to the output directory
  std::string kind;
  std::string sha256;
  std::uintmax_t bytes = 0;
  std::vector<std::string> columns;
};

/// Index of every artifact of one run, written as manifest.json.
class Manifest {
 public:
  Manifest(std::filesystem::path dir, std::string experiment, nlohmann::json config);

  void add(const std::string& relative_path, const std::string& kind, std::vector<std::string> columns = {});
  void note(const std::string& key, nlohmann::json value);
  const std::vector<ManifestEntry>& entries() const { return entries_; }
  std::filesystem::path write() const;

 private:
  std::filesystem::path dir_;
  std::string experiment_;
  nlohmann::json config_;
  nlohmann::json notes_ = nlohmann::json::object();
  std::vector<ManifestEntry> entries_;
};

}  // namespace strichartz
