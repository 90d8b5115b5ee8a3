#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hamur/dataio.hpp"
#include "hamur/model.hpp"
#include "hamur/trainer.hpp"

namespace hamur {

// Minimal ordered INI: [section] headers over key = value lines, with '#'
// and ';' comments. Section and key order are preserved; duplicates are
// rejected so a config cannot silently contradict itself.
class IniFile {
 public:
  using Section = std::vector<std::pair<std::string, std::string>>;

  static IniFile parse(const std::string& text, const std::string& origin);
  static IniFile load(const std::string& path);

  std::string serialize() const;
  std::string serialize_sections(const std::vector<std::string>& names) const;

  const std::string* get(const std::string& sec, const std::string& key) const;
  void set(const std::string& sec, const std::string& key,
           const std::string& value);
  bool has_section(const std::string& sec) const;
  const Section* section(const std::string& sec) const;

 private:
  std::vector<std::pair<std::string, Section>> sections_;
};

std::uint64_t fnv1a(const std::string& bytes);

// Shortest decimal form that parses back to the same double.
std::string fmt_double(double v);

// Everything one experiment needs, resolvable from a single file.
struct ExperimentConfig {
  std::string data_path;
  std::string spec_path;  // sidecar; empty when fields are inline
  double r_train = 0.8, r_valid = 0.1, r_test = 0.1;
  std::uint64_t split_seed = 42;
  DatasetSpec dataset;

  ModelConfig model;
  TrainConfig train;
  std::string out_dir = "runs/exp";

  // Parses, resolves the dataset spec (inline [fields]/[domains] win over
  // the sidecar), fills defaults, and validates. config_error names the
  // offending [section] key.
  static ExperimentConfig from_file(const std::string& path);
  static ExperimentConfig from_ini(const IniFile& ini);

  // Full reproducibility record: every value, defaulted or not, plus the
  // inlined dataset spec.
  IniFile resolved() const;

  // FNV-1a over the canonical [model]/[fields]/[domains] serialization:
  // exactly the sections that determine tensor shapes, so checkpoints are
  // portable across path or schedule changes but not shape changes.
  std::uint64_t hash() const;

  void validate() const;
};

// Sidecar dataset description written by the prepare step.
IniFile spec_to_ini(const DatasetSpec& spec);
DatasetSpec spec_from_ini(const IniFile& ini, const std::string& origin);

}  // namespace hamur
