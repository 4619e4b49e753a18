#pragma once

#include <optional>
#include <string>
#include <vector>

#include "cot/synth.hpp"
#include "cot/types.hpp"

namespace cot {

// --- files ---

std::string read_file(const std::string& path);

// Writes to <path>.tmp then renames, so readers never see partial content.
void write_file_atomic(const std::string& path, const std::string& content);

// --- deterministic JSON ---

// Shortest %.17g form; round-trips any finite double exactly.
std::string format_double(double value);

// Pretty-printing writer with caller-controlled key order, so identical
// inputs always serialize to identical bytes.
class JsonWriter {
 public:
  JsonWriter& begin_object();
  JsonWriter& end_object();
  JsonWriter& begin_array();
  JsonWriter& end_array();
  JsonWriter& key(const std::string& name);
  JsonWriter& value(double v);
  JsonWriter& value(std::int64_t v);
  JsonWriter& value(std::size_t v);
  JsonWriter& value(bool v);
  JsonWriter& value(const std::string& v);
  JsonWriter& null();
  std::string str() &&;

 private:
  void prepare_slot();
  void newline();

  std::string out_;
  std::vector<char> stack_;  // 'o' or 'a'
  bool slot_open_ = false;   // a key was written, value pending
  bool container_empty_ = true;
};

// --- logits CSV (header: label,logit_0,...,logit_{K-1}; label -1 = none) ---

LogitsDataset read_logits_csv(const std::string& path);
void write_logits_csv(const std::string& path, const LogitsDataset& data);

// --- measure CSV (header: weight,x_0,...,x_{D-1}) ---

EmpiricalMeasure read_measure_csv(const std::string& path);

// --- label distribution JSON: [p_0, ..., p_{K-1}] or {"probs": [...]} ---

LabelDistribution read_label_distribution_json(const std::string& path);

// --- run manifest ---

struct ManifestEntry {
  std::string target_id;
  std::string logits_path;
  std::optional<double> true_error;
};

struct RunManifest {
  std::string source_path;  // may be empty
  std::vector<ManifestEntry> entries;
};

std::string manifest_to_json(const RunManifest& manifest);
RunManifest read_manifest_json(const std::string& path);

// Path of `relative` interpreted against the directory containing `anchor`.
std::string resolve_relative(const std::string& anchor,
                             const std::string& relative);

// --- simulation recipe JSON ---

SimulateSpec read_simulate_spec_json(const std::string& path);
std::string simulate_spec_to_json(const SimulateSpec& spec);

}  // namespace cot
