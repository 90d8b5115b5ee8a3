#include "hamur/config.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "hamur/errors.hpp"

namespace hamur {

namespace {

std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

}  // namespace

IniFile IniFile::parse(const std::string& text, const std::string& origin) {
  IniFile ini;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  std::string current;
  while (std::getline(in, line)) {
    ++line_no;
    std::string t = trim(line);
    if (t.empty() || t[0] == '#' || t[0] == ';') continue;
    if (t.front() == '[') {
      if (t.back() != ']')
        throw config_error(origin + ":" + std::to_string(line_no) +
                           ": malformed section header '" + t + "'");
      current = trim(t.substr(1, t.size() - 2));
      if (current.empty())
        throw config_error(origin + ":" + std::to_string(line_no) +
                           ": empty section name");
      if (ini.has_section(current))
        throw config_error(origin + ":" + std::to_string(line_no) +
                           ": duplicate section [" + current + "]");
      ini.sections_.emplace_back(current, Section{});
      continue;
    }
    std::size_t eq = t.find('=');
    if (eq == std::string::npos)
      throw config_error(origin + ":" + std::to_string(line_no) +
                         ": expected key = value, got '" + t + "'");
    if (current.empty())
      throw config_error(origin + ":" + std::to_string(line_no) +
                         ": key outside any [section]");
    std::string key = trim(t.substr(0, eq));
    std::string value = trim(t.substr(eq + 1));
    if (key.empty())
      throw config_error(origin + ":" + std::to_string(line_no) +
                         ": empty key");
    if (ini.get(current, key))
      throw config_error(origin + ":" + std::to_string(line_no) +
                         ": duplicate key '" + key + "' in [" + current +
                         "]");
    ini.sections_.back().second.emplace_back(key, value);
  }
  return ini;
}

IniFile IniFile::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw config_error("cannot open config file " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse(buf.str(), path);
}

std::string IniFile::serialize() const {
  std::ostringstream out;
  bool first = true;
  for (const auto& [name, sec] : sections_) {
    if (!first) out << "\n";
    first = false;
    out << "[" << name << "]\n";
    for (const auto& [k, v] : sec) out << k << " = " << v << "\n";
  }
  return out.str();
}

std::string IniFile::serialize_sections(
    const std::vector<std::string>& names) const {
  std::ostringstream out;
  for (const std::string& want : names) {
    const Section* sec = section(want);
    if (!sec) continue;
    out << "[" << want << "]\n";
    for (const auto& [k, v] : *sec) out << k << " = " << v << "\n";
  }
  return out.str();
}

const std::string* IniFile::get(const std::string& sec,
                                const std::string& key) const {
  const Section* s = section(sec);
  if (!s) return nullptr;
  for (const auto& [k, v] : *s)
    if (k == key) return &v;
  return nullptr;
}

void IniFile::set(const std::string& sec, const std::string& key,
                  const std::string& value) {
  for (auto& [name, s] : sections_) {
    if (name != sec) continue;
    for (auto& [k, v] : s) {
      if (k == key) {
        v = value;
        return;
      }
    }
    s.emplace_back(key, value);
    return;
  }
  sections_.emplace_back(sec, Section{{key, value}});
}

bool IniFile::has_section(const std::string& sec) const {
  return section(sec) != nullptr;
}

const IniFile::Section* IniFile::section(const std::string& sec) const {
  for (const auto& [name, s] : sections_)
    if (name == sec) return &s;
  return nullptr;
}

std::uint64_t fnv1a(const std::string& bytes) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::string fmt_double(double v) {
  char buf[64];
  for (int prec = 1; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof(buf), "%.*g", prec, v);
    if (std::strtod(buf, nullptr) == v) break;
  }
  return buf;
}

// ---- typed getters ------------------------------------------------------

namespace {

struct Reader {
  const IniFile& ini;

  std::string where(const std::string& sec, const std::string& key) const {
    return "[" + sec + "] " + key;
  }
  std::string str(const std::string& sec, const std::string& key,
                  const std::string& def) const {
    const std::string* v = ini.get(sec, key);
    return v ? *v : def;
  }
  double num(const std::string& sec, const std::string& key,
             double def) const {
    const std::string* v = ini.get(sec, key);
    if (!v) return def;
    char* end = nullptr;
    double d = std::strtod(v->c_str(), &end);
    if (end == v->c_str() || *end != '\0')
      throw config_error(where(sec, key) + ": '" + *v + "' is not a number");
    return d;
  }
  std::uint64_t u64(const std::string& sec, const std::string& key,
                    std::uint64_t def) const {
    double d = num(sec, key, static_cast<double>(def));
    if (d < 0 || d != static_cast<double>(static_cast<std::uint64_t>(d)))
      throw config_error(where(sec, key) + ": want a non-negative integer");
    return static_cast<std::uint64_t>(d);
  }
  bool flag(const std::string& sec, const std::string& key, bool def) const {
    const std::string* v = ini.get(sec, key);
    if (!v) return def;
    if (*v == "true" || *v == "on" || *v == "1") return true;
    if (*v == "false" || *v == "off" || *v == "0") return false;
    throw config_error(where(sec, key) + ": '" + *v +
                       "' is not a boolean (true/false)");
  }
  std::vector<std::size_t> sizes(const std::string& sec,
                                 const std::string& key,
                                 std::vector<std::size_t> def) const {
    const std::string* v = ini.get(sec, key);
    if (!v) return def;
    std::vector<std::size_t> out;
    std::string cur;
    std::istringstream ss(*v);
    while (std::getline(ss, cur, ',')) {
      cur = trim(cur);
      if (cur.empty()) continue;
      char* end = nullptr;
      long long n = std::strtoll(cur.c_str(), &end, 10);
      if (end == cur.c_str() || *end != '\0' || n < 0)
        throw config_error(where(sec, key) + ": '" + cur +
                           "' is not a non-negative integer");
      out.push_back(static_cast<std::size_t>(n));
    }
    return out;
  }
};

std::string join_sizes(const std::vector<std::size_t>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(v[i]);
  }
  return out;
}

}  // namespace

IniFile spec_to_ini(const DatasetSpec& spec) {
  IniFile ini;
  ini.set("domains", "count", std::to_string(spec.num_domains));
  for (const FeatureField& f : spec.fields)
    ini.set("fields", f.name, std::to_string(f.vocab));
  return ini;
}

DatasetSpec spec_from_ini(const IniFile& ini, const std::string& origin) {
  DatasetSpec spec;
  const std::string* count = ini.get("domains", "count");
  if (!count)
    throw config_error(origin + ": missing [domains] count");
  spec.num_domains = static_cast<std::size_t>(std::strtoull(
      count->c_str(), nullptr, 10));
  const IniFile::Section* fields = ini.section("fields");
  if (!fields || fields->empty())
    throw config_error(origin + ": missing [fields] section");
  for (const auto& [name, vocab] : *fields) {
    char* end = nullptr;
    long long v = std::strtoll(vocab.c_str(), &end, 10);
    if (end == vocab.c_str() || *end != '\0' || v < 1)
      throw config_error(origin + ": [fields] " + name + ": vocabulary '" +
                         vocab + "' is not a positive integer");
    spec.fields.push_back({name, static_cast<std::size_t>(v)});
  }
  return spec;
}

ExperimentConfig ExperimentConfig::from_file(const std::string& path) {
  return from_ini(IniFile::load(path));
}

ExperimentConfig ExperimentConfig::from_ini(const IniFile& ini) {
  Reader r{ini};
  ExperimentConfig c;

  c.data_path = r.str("dataset", "path", "");
  c.spec_path = r.str("dataset", "spec", "");
  {
    const std::string* v = ini.get("dataset", "split");
    if (v) {
      double a, b, t;
      if (std::sscanf(v->c_str(), "%lf,%lf,%lf", &a, &b, &t) != 3)
        throw config_error("[dataset] split: want three ratios, got '" + *v +
                           "'");
      c.r_train = a;
      c.r_valid = b;
      c.r_test = t;
    }
  }
  c.split_seed = r.u64("dataset", "split_seed", 42);

  if (ini.has_section("fields")) {
    c.dataset = spec_from_ini(ini, "config");
  } else if (!c.spec_path.empty()) {
    c.dataset = spec_from_ini(IniFile::load(c.spec_path), c.spec_path);
  } else {
    throw config_error(
        "[dataset] spec: set a sidecar path or inline [fields]/[domains]");
  }

  c.model.backbone.kind =
      parse_backbone_kind(r.str("model", "backbone", "mlp"));
  c.model.backbone.widths = r.sizes("model", "widths", {256, 128});
  c.model.backbone.cross_layers =
      static_cast<std::size_t>(r.u64("model", "cross_layers", 2));
  c.model.backbone.sites = r.sizes("model", "sites", {1});
  c.model.e = static_cast<std::size_t>(r.u64("model", "embedding_size", 16));
  c.model.s = static_cast<std::size_t>(r.u64("model", "bottleneck", 32));
  c.model.m = static_cast<std::size_t>(r.u64("model", "hyper_hidden", 64));
  c.model.k = static_cast<std::size_t>(r.u64("model", "rep_dim", 35));
  c.model.adapters = r.flag("model", "adapters", true);
  c.model.shared_backbone = r.flag("model", "shared_backbone", false);
  if (!c.model.adapters) c.model.backbone.sites.clear();
  c.model.dn.rho = r.num("model", "dn_momentum", 0.9);
  c.model.dn.eps = r.num("model", "dn_eps", 1e-5);
  c.model.dn.detach_stats = r.flag("model", "dn_detach_stats", false);

  c.train.batch_size =
      static_cast<std::size_t>(r.u64("train", "batch_size", 2048));
  c.train.adam.lr = r.num("train", "lr", 1e-3);
  c.train.adam.beta1 = r.num("train", "beta1", 0.9);
  c.train.adam.beta2 = r.num("train", "beta2", 0.999);
  c.train.adam.eps = r.num("train", "adam_eps", 1e-8);
  c.train.max_epochs =
      static_cast<std::size_t>(r.u64("train", "max_epochs", 20));
  c.train.patience = static_cast<std::size_t>(r.u64("train", "patience", 3));
  c.train.seed = r.u64("train", "seed", 7);

  {
    std::string total = r.str("metrics", "total", "pooled");
    if (total == "pooled")
      c.train.macro_total = false;
    else if (total == "macro")
      c.train.macro_total = true;
    else
      throw config_error("[metrics] total: '" + total +
                         "' is neither pooled nor macro");
  }
  c.out_dir = r.str("output", "dir", "runs/exp");

  c.validate();
  return c;
}

void ExperimentConfig::validate() const {
  if (data_path.empty())
    throw config_error("[dataset] path: no dataset file given");
  double sum = r_train + r_valid + r_test;
  if (r_train < 0 || r_valid < 0 || r_test < 0 ||
      sum < 1.0 - 1e-9 || sum > 1.0 + 1e-9)
    throw config_error("[dataset] split: ratios must be non-negative and "
                       "sum to 1");
  if (train.batch_size == 0)
    throw config_error("[train] batch_size: must be at least 1");
  if (train.max_epochs == 0)
    throw config_error("[train] max_epochs: must be at least 1");
  if (train.adam.lr <= 0) throw config_error("[train] lr: must be positive");
  if (model.dn.rho < 0 || model.dn.rho >= 1)
    throw config_error("[model] dn_momentum: want a value in [0, 1)");
  if (model.dn.eps <= 0)
    throw config_error("[model] dn_eps: must be positive");
  if (out_dir.empty())
    throw config_error("[output] dir: no output directory given");
  model.validate(dataset);
}

IniFile ExperimentConfig::resolved() const {
  IniFile ini;
  ini.set("dataset", "path", data_path);
  ini.set("dataset", "spec", spec_path);
  ini.set("dataset", "split", fmt_double(r_train) + "," +
                                  fmt_double(r_valid) + "," +
                                  fmt_double(r_test));
  ini.set("dataset", "split_seed", std::to_string(split_seed));

  ini.set("model", "backbone", backbone_kind_name(model.backbone.kind));
  ini.set("model", "widths", join_sizes(model.backbone.widths));
  ini.set("model", "cross_layers",
          std::to_string(model.backbone.cross_layers));
  ini.set("model", "sites", join_sizes(model.backbone.sites));
  ini.set("model", "embedding_size", std::to_string(model.e));
  ini.set("model", "bottleneck", std::to_string(model.s));
  ini.set("model", "hyper_hidden", std::to_string(model.m));
  ini.set("model", "rep_dim", std::to_string(model.k));
  ini.set("model", "adapters", model.adapters ? "true" : "false");
  ini.set("model", "shared_backbone",
          model.shared_backbone ? "true" : "false");
  ini.set("model", "dn_momentum", fmt_double(model.dn.rho));
  ini.set("model", "dn_eps", fmt_double(model.dn.eps));
  ini.set("model", "dn_detach_stats",
          model.dn.detach_stats ? "true" : "false");

  ini.set("train", "batch_size", std::to_string(train.batch_size));
  ini.set("train", "lr", fmt_double(train.adam.lr));
  ini.set("train", "beta1", fmt_double(train.adam.beta1));
  ini.set("train", "beta2", fmt_double(train.adam.beta2));
  ini.set("train", "adam_eps", fmt_double(train.adam.eps));
  ini.set("train", "max_epochs", std::to_string(train.max_epochs));
  ini.set("train", "patience", std::to_string(train.patience));
  ini.set("train", "seed", std::to_string(train.seed));

  ini.set("metrics", "total", train.macro_total ? "macro" : "pooled");
  ini.set("output", "dir", out_dir);

  ini.set("domains", "count", std::to_string(dataset.num_domains));
  for (const FeatureField& f : dataset.fields)
    ini.set("fields", f.name, std::to_string(f.vocab));
  return ini;
}

std::uint64_t ExperimentConfig::hash() const {
  return fnv1a(resolved().serialize_sections({"model", "fields", "domains"}));
}

}  // namespace hamur
