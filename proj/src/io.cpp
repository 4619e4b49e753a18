#include "cot/io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <system_error>

#include <nlohmann/json.hpp>

#include "cot/errors.hpp"

namespace cot {

namespace {

[[noreturn]] void fail_at(const std::string& path, std::size_t line,
                          const std::string& message) {
  throw ValidationError(path + ":" + std::to_string(line) + ": " + message);
}

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string::npos) {
      fields.push_back(line.substr(start));
      return fields;
    }
    fields.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
}

double parse_double_field(const std::string& path, std::size_t line,
                          const std::string& field) {
  double value = 0.0;
  const char* begin = field.data();
  const char* end = begin + field.size();
  const auto result = std::from_chars(begin, end, value);
  if (result.ec != std::errc{} || result.ptr != end) {
    fail_at(path, line, "cannot parse '" + field + "' as a number");
  }
  return value;
}

std::int64_t parse_int_field(const std::string& path, std::size_t line,
                             const std::string& field) {
  std::int64_t value = 0;
  const char* begin = field.data();
  const char* end = begin + field.size();
  const auto result = std::from_chars(begin, end, value);
  if (result.ec != std::errc{} || result.ptr != end) {
    fail_at(path, line, "cannot parse '" + field + "' as an integer");
  }
  return value;
}

// Splits file content into lines; accepts LF and CRLF, requires a non-empty
// header line. Returns lines without terminators.
std::vector<std::string> read_lines(const std::string& path) {
  const std::string content = read_file(path);
  std::vector<std::string> lines;
  std::size_t start = 0;
  while (start < content.size()) {
    std::size_t nl = content.find('\n', start);
    if (nl == std::string::npos) nl = content.size();
    std::size_t end = nl;
    if (end > start && content[end - 1] == '\r') --end;
    lines.push_back(content.substr(start, end - start));
    start = nl + 1;
  }
  return lines;
}

void append_json_string(std::string& out, const std::string& s) {
  out += '"';
  for (const char c : s) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\r': out += "\\r"; break;
      case '\t': out += "\\t"; break;
      default:
        if (static_cast<unsigned char>(c) < 0x20) {
          char buf[8];
          std::snprintf(buf, sizeof buf, "\\u%04x", c);
          out += buf;
        } else {
          out += c;
        }
    }
  }
  out += '"';
}

nlohmann::json parse_json_file(const std::string& path) {
  const std::string content = read_file(path);
  nlohmann::json parsed = nlohmann::json::parse(content, nullptr, false);
  if (parsed.is_discarded()) {
    throw ValidationError(path + ": not valid JSON");
  }
  return parsed;
}

}  // namespace

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open " + path);
  std::string content((std::istreambuf_iterator<char>(in)),
                      std::istreambuf_iterator<char>());
  if (in.bad()) throw ValidationError("cannot read " + path);
  return content;
}

void write_file_atomic(const std::string& path, const std::string& content) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw ValidationError("cannot open " + tmp + " for writing");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) throw ValidationError("cannot write " + tmp);
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    throw ValidationError("cannot move " + tmp + " to " + path + ": " +
                          ec.message());
  }
}

std::string format_double(double value) {
  if (!std::isfinite(value)) {
    throw ValidationError("refusing to serialize a non-finite number");
  }
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  return buf;
}

JsonWriter& JsonWriter::begin_object() {
  prepare_slot();
  out_ += '{';
  stack_.push_back('o');
  container_empty_ = true;
  return *this;
}

JsonWriter& JsonWriter::end_object() {
  stack_.pop_back();
  if (!container_empty_) newline();
  out_ += '}';
  container_empty_ = false;
  return *this;
}

JsonWriter& JsonWriter::begin_array() {
  prepare_slot();
  out_ += '[';
  stack_.push_back('a');
  container_empty_ = true;
  return *this;
}

JsonWriter& JsonWriter::end_array() {
  stack_.pop_back();
  if (!container_empty_) newline();
  out_ += ']';
  container_empty_ = false;
  return *this;
}

JsonWriter& JsonWriter::key(const std::string& name) {
  if (!container_empty_) out_ += ',';
  newline();
  append_json_string(out_, name);
  out_ += ": ";
  slot_open_ = true;
  return *this;
}

JsonWriter& JsonWriter::value(double v) {
  prepare_slot();
  out_ += format_double(v);
  return *this;
}

JsonWriter& JsonWriter::value(std::int64_t v) {
  prepare_slot();
  out_ += std::to_string(v);
  return *this;
}

JsonWriter& JsonWriter::value(std::size_t v) {
  return value(static_cast<std::int64_t>(v));
}

JsonWriter& JsonWriter::value(bool v) {
  prepare_slot();
  out_ += v ? "true" : "false";
  return *this;
}

JsonWriter& JsonWriter::value(const std::string& v) {
  prepare_slot();
  append_json_string(out_, v);
  return *this;
}

JsonWriter& JsonWriter::null() {
  prepare_slot();
  out_ += "null";
  return *this;
}

std::string JsonWriter::str() && {
  out_ += '\n';
  return std::move(out_);
}

void JsonWriter::prepare_slot() {
  if (slot_open_) {
    slot_open_ = false;
    container_empty_ = false;
    return;
  }
  if (!stack_.empty()) {
    if (!container_empty_) out_ += ',';
    newline();
  }
  container_empty_ = false;
}

void JsonWriter::newline() {
  out_ += '\n';
  out_.append(2 * stack_.size(), ' ');
}

LogitsDataset read_logits_csv(const std::string& path) {
  const std::vector<std::string> lines = read_lines(path);
  if (lines.empty()) fail_at(path, 1, "empty file, expected a header");
  const std::vector<std::string> header = split_fields(lines[0]);
  if (header.size() < 3 || header[0] != "label") {
    fail_at(path, 1, "header must be label,logit_0,...,logit_{K-1} with K >= 2");
  }
  const std::size_t num_classes = header.size() - 1;
  for (std::size_t k = 0; k < num_classes; ++k) {
    if (header[k + 1] != "logit_" + std::to_string(k)) {
      fail_at(path, 1,
              "header column " + std::to_string(k + 1) + " must be logit_" +
                  std::to_string(k) + ", got '" + header[k + 1] + "'");
    }
  }
  std::vector<std::optional<std::int32_t>> labels;
  std::vector<double> logits;
  for (std::size_t li = 1; li < lines.size(); ++li) {
    if (lines[li].empty() && li + 1 == lines.size()) break;
    const std::size_t line_no = li + 1;
    const std::vector<std::string> fields = split_fields(lines[li]);
    if (fields.size() != num_classes + 1) {
      fail_at(path, line_no,
              "expected " + std::to_string(num_classes + 1) + " fields, got " +
                  std::to_string(fields.size()));
    }
    const std::int64_t label = parse_int_field(path, line_no, fields[0]);
    if (label == -1) {
      labels.push_back(std::nullopt);
    } else if (label >= 0 && label < static_cast<std::int64_t>(num_classes)) {
      labels.push_back(static_cast<std::int32_t>(label));
    } else {
      fail_at(path, line_no,
              "label " + fields[0] + " outside [-1, " +
                  std::to_string(num_classes) + ")");
    }
    for (std::size_t k = 0; k < num_classes; ++k) {
      const double z = parse_double_field(path, line_no, fields[k + 1]);
      if (!std::isfinite(z)) fail_at(path, line_no, "logit is not finite");
      logits.push_back(z);
    }
  }
  if (labels.empty()) fail_at(path, 2, "no data rows");
  try {
    return LogitsDataset(num_classes, std::move(labels), std::move(logits));
  } catch (const ValidationError& e) {
    throw ValidationError(path + ": " + e.what());
  }
}

void write_logits_csv(const std::string& path, const LogitsDataset& data) {
  std::string out = "label";
  for (std::size_t k = 0; k < data.num_classes(); ++k) {
    out += ",logit_" + std::to_string(k);
  }
  out += '\n';
  for (std::size_t i = 0; i < data.size(); ++i) {
    out += data.label(i) ? std::to_string(*data.label(i)) : "-1";
    for (const double z : data.row(i)) {
      out += ',';
      out += format_double(z);
    }
    out += '\n';
  }
  write_file_atomic(path, out);
}

EmpiricalMeasure read_measure_csv(const std::string& path) {
  const std::vector<std::string> lines = read_lines(path);
  if (lines.empty()) fail_at(path, 1, "empty file, expected a header");
  const std::vector<std::string> header = split_fields(lines[0]);
  if (header.size() < 2 || header[0] != "weight") {
    fail_at(path, 1, "header must be weight,x_0,...,x_{D-1}");
  }
  const std::size_t dim = header.size() - 1;
  for (std::size_t k = 0; k < dim; ++k) {
    if (header[k + 1] != "x_" + std::to_string(k)) {
      fail_at(path, 1,
              "header column " + std::to_string(k + 1) + " must be x_" +
                  std::to_string(k) + ", got '" + header[k + 1] + "'");
    }
  }
  std::vector<double> weights;
  std::vector<double> points;
  for (std::size_t li = 1; li < lines.size(); ++li) {
    if (lines[li].empty() && li + 1 == lines.size()) break;
    const std::size_t line_no = li + 1;
    const std::vector<std::string> fields = split_fields(lines[li]);
    if (fields.size() != dim + 1) {
      fail_at(path, line_no,
              "expected " + std::to_string(dim + 1) + " fields, got " +
                  std::to_string(fields.size()));
    }
    weights.push_back(parse_double_field(path, line_no, fields[0]));
    for (std::size_t k = 0; k < dim; ++k) {
      points.push_back(parse_double_field(path, line_no, fields[k + 1]));
    }
  }
  if (weights.empty()) fail_at(path, 2, "no data rows");
  try {
    return EmpiricalMeasure(dim, std::move(points), std::move(weights));
  } catch (const ValidationError& e) {
    throw ValidationError(path + ": " + e.what());
  }
}

LabelDistribution read_label_distribution_json(const std::string& path) {
  nlohmann::json parsed = parse_json_file(path);
  if (parsed.is_object() && parsed.contains("probs")) parsed = parsed["probs"];
  if (!parsed.is_array() || parsed.size() < 2) {
    throw ValidationError(path +
                          ": expected an array of at least 2 probabilities");
  }
  std::vector<double> probs;
  for (const auto& p : parsed) {
    if (!p.is_number()) {
      throw ValidationError(path + ": probabilities must be numbers");
    }
    probs.push_back(p.get<double>());
  }
  try {
    return LabelDistribution(std::move(probs));
  } catch (const ValidationError& e) {
    throw ValidationError(path + ": " + e.what());
  }
}

std::string manifest_to_json(const RunManifest& manifest) {
  JsonWriter w;
  w.begin_object();
  w.key("schema_version").value(std::int64_t{1});
  if (!manifest.source_path.empty()) {
    w.key("source_path").value(manifest.source_path);
  }
  w.key("entries").begin_array();
  for (const ManifestEntry& e : manifest.entries) {
    w.begin_object();
    w.key("target_id").value(e.target_id);
    w.key("path").value(e.logits_path);
    if (e.true_error) {
      w.key("true_error").value(*e.true_error);
    }
    w.end_object();
  }
  w.end_array();
  w.end_object();
  return std::move(w).str();
}

RunManifest read_manifest_json(const std::string& path) {
  const nlohmann::json parsed = parse_json_file(path);
  if (!parsed.is_object() || !parsed.contains("entries") ||
      !parsed["entries"].is_array()) {
    throw ValidationError(path + ": manifest needs an 'entries' array");
  }
  RunManifest manifest;
  if (parsed.contains("source_path")) {
    manifest.source_path = parsed["source_path"].get<std::string>();
  }
  std::set<std::string> seen;
  for (const auto& item : parsed["entries"]) {
    ManifestEntry entry;
    if (!item.is_object() || !item.contains("target_id") ||
        !item.contains("path")) {
      throw ValidationError(path +
                            ": each entry needs 'target_id' and 'path'");
    }
    entry.target_id = item["target_id"].get<std::string>();
    entry.logits_path = item["path"].get<std::string>();
    if (entry.logits_path.empty()) {
      throw ValidationError(path + ": entry '" + entry.target_id +
                            "' has an empty path");
    }
    if (!seen.insert(entry.target_id).second) {
      throw ValidationError(path + ": duplicate target_id '" +
                            entry.target_id + "'");
    }
    if (item.contains("true_error")) {
      entry.true_error = item["true_error"].get<double>();
    }
    manifest.entries.push_back(std::move(entry));
  }
  if (manifest.entries.empty()) {
    throw ValidationError(path + ": manifest has no entries");
  }
  return manifest;
}

std::string resolve_relative(const std::string& anchor,
                             const std::string& relative) {
  const std::filesystem::path rel(relative);
  if (rel.is_absolute()) return relative;
  return (std::filesystem::path(anchor).parent_path() / rel).string();
}

SimulateSpec read_simulate_spec_json(const std::string& path) {
  const nlohmann::json parsed = parse_json_file(path);
  if (!parsed.is_object()) {
    throw ValidationError(path + ": config must be a JSON object");
  }
  SimulateSpec spec;
  try {
    spec.source.num_classes = parsed.at("num_classes").get<std::size_t>();
    if (parsed.contains("label_dist")) {
      std::vector<double> probs;
      for (const auto& p : parsed["label_dist"]) probs.push_back(p.get<double>());
      spec.source.label_dist = LabelDistribution(std::move(probs));
    } else {
      spec.source.label_dist = LabelDistribution::uniform(spec.source.num_classes);
    }
    const auto& source = parsed.at("source");
    spec.source.n_samples = source.value("n_samples", std::size_t{2000});
    spec.source.accuracy = source.value("accuracy", 0.9);
    spec.source.logit_margin = source.value("logit_margin", 6.0);
    spec.source.logit_noise = source.value("logit_noise", 0.5);
    spec.source.extra_temperature = 1.0;
    spec.source.seed = source.value("seed", std::uint64_t{1});
    spec.n_target = parsed.value("n_target", std::size_t{2000});
    const auto& sweep = parsed.at("sweep");
    if (!sweep.is_array()) {
      throw ValidationError(path + ": 'sweep' must be an array");
    }
    for (const auto& item : sweep) {
      spec.severities.emplace_back(item.at("accuracy").get<double>(),
                                   item.value("extra_temperature", 1.0));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(path + ": " + e.what());
  }
  try {
    spec.validate();
  } catch (const ValidationError& e) {
    throw ValidationError(path + ": " + e.what());
  }
  return spec;
}

std::string simulate_spec_to_json(const SimulateSpec& spec) {
  JsonWriter w;
  w.begin_object();
  w.key("schema_version").value(std::int64_t{1});
  w.key("num_classes").value(spec.source.num_classes);
  w.key("label_dist").begin_array();
  for (const double p : spec.source.label_dist.probs()) w.value(p);
  w.end_array();
  w.key("source").begin_object();
  w.key("n_samples").value(spec.source.n_samples);
  w.key("accuracy").value(spec.source.accuracy);
  w.key("logit_margin").value(spec.source.logit_margin);
  w.key("logit_noise").value(spec.source.logit_noise);
  w.key("seed").value(static_cast<std::int64_t>(spec.source.seed));
  w.end_object();
  w.key("n_target").value(spec.n_target);
  w.key("sweep").begin_array();
  for (const auto& [accuracy, extra_temperature] : spec.severities) {
    w.begin_object();
    w.key("accuracy").value(accuracy);
    w.key("extra_temperature").value(extra_temperature);
    w.end_object();
  }
  w.end_array();
  w.end_object();
  return std::move(w).str();
}

}  // namespace cot
