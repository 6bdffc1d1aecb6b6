#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace isingforage::cli {

/// Filesystem failure; maps to exit status 3.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Creates parent directories as needed and replaces the file atomically.
void write_file(const std::filesystem::path& path, const std::string& content);
std::string read_file(const std::filesystem::path& path);

nlohmann::json read_json_file(const std::filesystem::path& path);

/// Header row plus rows; fields are written as given, rows end with '\n'.
class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> header);
  void add_row(std::vector<std::string> fields);
  std::size_t rows() const noexcept { return rows_; }
  std::string str() const { return text_; }

 private:
  std::size_t columns_;
  std::size_t rows_ = 0;
  std::string text_;
};

/// Collects output files and writes manifest.json next to them.
class Manifest {
 public:
  Manifest(std::filesystem::path root, std::string command, std::string config_hash);

  nlohmann::json& extra() { return extra_; }
  /// Writes `content` to root/relative and records it under `role`.
  void add_file(const std::string& relative, const std::string& role, const std::string& content);
  void write() const;

 private:
  std::filesystem::path root_;
  std::string command_;
  std::string hash_;
  nlohmann::json files_ = nlohmann::json::array();
  nlohmann::json extra_ = nlohmann::json::object();
};

/// Directory named by $ISINGFORAGE_OUT, or "runs".
std::filesystem::path default_output_root();

}  // namespace isingforage::cli
