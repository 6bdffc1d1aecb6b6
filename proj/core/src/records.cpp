#include "isingforage/records.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace isingforage {

namespace {

nlohmann::json optional_number(double v) {
  return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr);
}

double number_or_nan(const nlohmann::json& v) {
  return v.is_null() ? std::numeric_limits<double>::quiet_NaN() : v.get<double>();
}

void check_schema(const nlohmann::json& doc) {
  if (doc.value("schema_version", -1) != kSchemaVersion) {
    throw std::invalid_argument("unsupported schema_version");
  }
}

}  // namespace

nlohmann::json to_json(const GenerationRecord& r) {
  nlohmann::json tags = nlohmann::json::array();
  for (OperatorTag t : r.tags) tags.push_back(std::string(to_string(t)));
  nlohmann::json deltas = nullptr;
  if (r.deltas) {
    deltas = nlohmann::json::array();
    for (double d : *r.deltas) deltas.push_back(optional_number(d));
  }
  return {{"schema_version", kSchemaVersion},
          {"generation", r.generation},
          {"mean_fitness", r.mean_fitness},
          {"max_fitness", r.max_fitness},
          {"mean_delta", r.mean_delta ? optional_number(*r.mean_delta) : nlohmann::json(nullptr)},
          {"median_delta", r.median_delta ? optional_number(*r.median_delta) : nlohmann::json(nullptr)},
          {"fitness", r.fitness},
          {"tags", std::move(tags)},
          {"delta", std::move(deltas)}};
}

GenerationRecord generation_record_from_json(const nlohmann::json& doc) {
  try {
    check_schema(doc);
    GenerationRecord r;
    r.generation = doc.at("generation").get<std::size_t>();
    r.fitness = doc.at("fitness").get<std::vector<double>>();
    for (const auto& t : doc.at("tags")) r.tags.push_back(operator_tag_from_string(t.get<std::string>()));
    if (r.tags.size() != r.fitness.size()) throw std::invalid_argument("tags and fitness differ in length");
    r.mean_fitness = doc.at("mean_fitness").get<double>();
    r.max_fitness = doc.at("max_fitness").get<double>();
    if (const auto& d = doc.at("delta"); !d.is_null()) {
      std::vector<double> deltas;
      for (const auto& v : d) deltas.push_back(number_or_nan(v));
      r.deltas = std::move(deltas);
    }
    if (const auto& m = doc.at("mean_delta"); !m.is_null()) r.mean_delta = m.get<double>();
    if (auto it = doc.find("median_delta"); it != doc.end() && !it->is_null()) r.median_delta = it->get<double>();
    return r;
  } catch (const nlohmann::json::exception& ex) {
    throw std::invalid_argument(std::string("malformed generation record: ") + ex.what());
  }
}

nlohmann::json to_json(const TraceRecord& r) {
  return {{"schema_version", kSchemaVersion},
          {"t", r.t},
          {"organism", r.organism},
          {"x", r.position.x},
          {"y", r.position.y},
          {"speed", r.speed},
          {"energy", r.energy},
          {"eaten", r.eaten}};
}

TraceRecord trace_record_from_json(const nlohmann::json& doc) {
  try {
    check_schema(doc);
    return {doc.at("t").get<std::size_t>(),
            doc.at("organism").get<std::size_t>(),
            {doc.at("x").get<double>(), doc.at("y").get<double>()},
            doc.at("speed").get<double>(),
            doc.at("energy").get<double>(),
            doc.at("eaten").get<std::size_t>()};
  } catch (const nlohmann::json::exception& ex) {
    throw std::invalid_argument(std::string("malformed trace record: ") + ex.what());
  }
}

std::vector<nlohmann::json> read_jsonl(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::vector<nlohmann::json> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(nlohmann::json::parse(line));
    } catch (const nlohmann::json::exception& ex) {
      throw std::invalid_argument(path + ":" + std::to_string(line_no) + ": " + ex.what());
    }
  }
  return out;
}

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

}  // namespace isingforage
