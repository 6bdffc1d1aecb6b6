#include "isingforage/cli/io.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "isingforage/records.hpp"

namespace isingforage::cli {

namespace fs = std::filesystem;

inline constexpr const char* kVersion = "0.1.0";

void write_file(const fs::path& path, const std::string& content) {
  std::error_code ec;
  if (path.has_parent_path()) {
    fs::create_directories(path.parent_path(), ec);
    if (ec) throw IoError("cannot create directory " + path.parent_path().string() + ": " + ec.message());
  }
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + tmp.string() + " for writing");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw IoError("write failed: " + tmp.string());
  }
  fs::rename(tmp, path, ec);
  if (ec) throw IoError("cannot move " + tmp.string() + " into place: " + ec.message());
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

nlohmann::json read_json_file(const fs::path& path) {
  const std::string text = read_file(path);
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(path.string() + ": " + e.what());
  }
}

CsvTable::CsvTable(std::vector<std::string> header) : columns_(header.size()) {
  add_row(std::move(header));
  rows_ = 0;
}

void CsvTable::add_row(std::vector<std::string> fields) {
  if (fields.size() != columns_) throw std::logic_error("CsvTable: wrong number of fields");
  for (std::size_t k = 0; k < fields.size(); ++k) {
    if (k > 0) text_ += ',';
    text_ += fields[k];
  }
  text_ += '\n';
  ++rows_;
}

Manifest::Manifest(fs::path root, std::string command, std::string config_hash)
    : root_(std::move(root)), command_(std::move(command)), hash_(std::move(config_hash)) {}

void Manifest::add_file(const std::string& relative, const std::string& role, const std::string& content) {
  write_file(root_ / relative, content);
  files_.push_back({{"path", relative}, {"role", role}, {"config_hash", hash_}});
}

void Manifest::write() const {
  nlohmann::json doc = extra_;
  doc["schema_version"] = kSchemaVersion;
  doc["software"] = "isingforage";
  doc["version"] = kVersion;
  doc["command"] = command_;
  doc["config_hash"] = hash_;
  doc["files"] = files_;
  write_file(root_ / "manifest.json", doc.dump(2) + "\n");
}

fs::path default_output_root() {
  const char* env = std::getenv("ISINGFORAGE_OUT");
  return env != nullptr && *env != '\0' ? fs::path(env) : fs::path("runs");
}

}  // namespace isingforage::cli
