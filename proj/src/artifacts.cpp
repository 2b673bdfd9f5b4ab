#include "strichartz/artifacts.hpp"

#include <array>
#include <charconv>
#include <chrono>
#include <cmath>
#include <ctime>
#include <iomanip>
#include <sstream>

#include <openssl/evp.h>

#include "strichartz/error.hpp"

#ifndef STRICHARTZ_VERSION
#define STRICHARTZ_VERSION "0.0.0"
#endif
#ifndef STRICHARTZ_REVISION
#define STRICHARTZ_REVISION "unknown"
#endif

namespace strichartz {
namespace {

std::string quote(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      cells.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  cells.push_back(cur);
  return cells;
}

}  // namespace

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  std::array<char, 64> buf{};
  auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v, std::chars_format::general, 17);
  return std::string(buf.data(), res.ptr);
}

CsvWriter::CsvWriter(const std::filesystem::path& path, std::vector<std::string> header)
    : out_(path), header_(std::move(header)) {
  if (!out_) throw Error("cannot write " + path.string());
  for (std::size_t i = 0; i < header_.size(); ++i) out_ << (i ? "," : "") << quote(header_[i]);
  out_ << '\n';
}

void CsvWriter::row(const std::vector<CsvCell>& cells) {
  if (cells.size() != header_.size()) throw InvalidArgument("CSV row width differs from the header");
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) out_ << ',';
    std::visit(
        [this](const auto& v) {
          using T = std::decay_t<decltype(v)>;
          if constexpr (std::is_same_v<T, double>)
            out_ << format_double(v);
          else if constexpr (std::is_same_v<T, std::int64_t>)
            out_ << v;
          else
            out_ << quote(v);
        },
        cells[i]);
  }
  out_ << '\n';
  out_.flush();
}

std::size_t CsvTable::column(const std::string& name) const {
  for (std::size_t i = 0; i < header.size(); ++i)
    if (header[i] == name) return i;
  throw InvalidArgument("CSV has no column '" + name + "'");
}

std::vector<double> CsvTable::numbers(const std::string& name) const {
  const std::size_t c = column(name);
  std::vector<double> out;
  for (const auto& r : rows) {
    double v = 0.0;
    const auto& s = r.at(c);
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc()) throw InvalidArgument("non-numeric cell '" + s + "' in column " + name);
    out.push_back(v);
  }
  return out;
}

CsvTable read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot read " + path.string());
  CsvTable t;
  std::string line;
  if (!std::getline(in, line)) throw InvalidArgument(path.string() + " is empty");
  t.header = split_csv_line(line);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto cells = split_csv_line(line);
    if (cells.size() != t.header.size()) throw InvalidArgument(path.string() + ": ragged row");
    t.rows.push_back(std::move(cells));
  }
  return t;
}

RecordWriter::RecordWriter(const std::filesystem::path& path) : out_(path) {
  if (!out_) throw Error("cannot write " + path.string());
}

RecordWriter& RecordWriter::put(const std::string& key, double value) {
  out_ << key << " = " << format_double(value) << std::endl;
  return *this;
}

RecordWriter& RecordWriter::put(const std::string& key, std::int64_t value) {
  out_ << key << " = " << value << std::endl;
  return *this;
}

RecordWriter& RecordWriter::put(const std::string& key, const std::string& value) {
  out_ << key << " = " << value << std::endl;
  return *this;
}

std::string sha256_hex(std::string_view data) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
  unsigned int len = 0;
  if (!EVP_Digest(data.data(), data.size(), md.data(), &len, EVP_sha256(), nullptr)) throw Error("SHA-256 failed");
  std::ostringstream os;
  for (unsigned int i = 0; i < len; ++i) os << std::hex << std::setw(2) << std::setfill('0') << int(md[i]);
  return os.str();
}

std::string sha256_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return sha256_hex(ss.str());
}

std::string config_hash(const nlohmann::json& config) { return sha256_hex(config.dump()); }

std::string code_version() { return std::string(STRICHARTZ_VERSION) + "+" + STRICHARTZ_REVISION; }

Manifest::Manifest(std::filesystem::path dir, std::string experiment, nlohmann::json config)
    : dir_(std::move(dir)), experiment_(std::move(experiment)), config_(std::move(config)) {}

void Manifest::add(const std::string& relative_path, const std::string& kind, std::vector<std::string> columns) {
  const auto full = dir_ / relative_path;
  entries_.push_back({relative_path, kind, sha256_file(full), std::filesystem::file_size(full), std::move(columns)});
}

void Manifest::note(const std::string& key, nlohmann::json value) { notes_[key] = std::move(value); }

std::filesystem::path Manifest::write() const {
  nlohmann::json arts = nlohmann::json::array();
  for (const auto& e : entries_) {
    nlohmann::json j{{"path", e.path}, {"kind", e.kind}, {"sha256", e.sha256}, {"bytes", e.bytes}};
    if (!e.columns.empty()) j["columns"] = e.columns;
    arts.push_back(std::move(j));
  }
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream ts;
  ts << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  nlohmann::json m{{"format", "strichartz-manifest"},
                   {"version", 1},
                   {"experiment", experiment_},
                   {"code_version", code_version()},
                   {"config_hash", config_hash(config_)},
                   {"config", config_},
                   {"notes", notes_},
                   {"artifacts", arts},
                   {"created_utc", ts.str()}};
  const auto path = dir_ / "manifest.json";
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << m.dump(1) << '\n';
  return path;
}

}  // namespace strichartz
