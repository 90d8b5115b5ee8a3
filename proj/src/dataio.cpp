#include "hamur/dataio.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>

#include "hamur/errors.hpp"
#include "hamur/rng.hpp"

namespace hamur {

int DatasetSpec::field_index(const std::string& name) const {
  for (std::size_t i = 0; i < fields.size(); ++i)
    if (fields[i].name == name) return static_cast<int>(i);
  return -1;
}

Dataset Dataset::select(const std::vector<std::size_t>& idx) const {
  Dataset out;
  out.spec = spec;
  std::size_t F = spec.num_fields();
  out.features.reserve(idx.size() * F);
  out.labels.reserve(idx.size());
  out.domains.reserve(idx.size());
  for (std::size_t i : idx) {
    const std::uint32_t* r = row(i);
    out.features.insert(out.features.end(), r, r + F);
    out.labels.push_back(labels[i]);
    out.domains.push_back(domains[i]);
  }
  return out;
}

std::vector<std::size_t> Dataset::domain_counts() const {
  std::vector<std::size_t> counts(spec.num_domains, 0);
  for (std::uint16_t d : domains) ++counts[d - 1];
  return counts;
}

namespace {

std::vector<std::string> split_line(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    std::size_t p = line.find(sep, start);
    if (p == std::string::npos) {
      out.push_back(line.substr(start));
      break;
    }
    out.push_back(line.substr(start, p - start));
    start = p + 1;
  }
  if (!out.empty() && !out.back().empty() && out.back().back() == '\r')
    out.back().pop_back();
  return out;
}

long long parse_int(const std::string& cell, std::size_t line_no) {
  long long v = 0;
  const char* b = cell.data();
  const char* e = b + cell.size();
  auto [p, ec] = std::from_chars(b, e, v);
  if (ec != std::errc() || p != e)
    throw data_error("row " + std::to_string(line_no) +
                     ": expected integer, got '" + cell + "'");
  return v;
}

}  // namespace

Dataset load_csv(const std::string& path, const DatasetSpec& spec) {
  std::ifstream in(path);
  if (!in) throw data_error("cannot open dataset file " + path);
  std::string line;
  if (!std::getline(in, line)) throw data_error("empty dataset file " + path);

  std::vector<std::string> header = split_line(line, ',');
  auto column_of = [&](const std::string& name) {
    for (std::size_t i = 0; i < header.size(); ++i)
      if (header[i] == name) return static_cast<int>(i);
    return -1;
  };

  int domain_col = column_of("domain");
  int label_col = column_of("label");
  if (domain_col < 0) throw config_error(path + ": missing column 'domain'");
  if (label_col < 0) throw config_error(path + ": missing column 'label'");

  std::size_t F = spec.num_fields();
  std::vector<int> field_cols(F);
  for (std::size_t f = 0; f < F; ++f) {
    // The domain indicator doubles as a feature; it has no extra column.
    field_cols[f] = spec.fields[f].name == "domain"
                        ? domain_col
                        : column_of(spec.fields[f].name);
    if (field_cols[f] < 0)
      throw config_error(path + ": missing column '" + spec.fields[f].name +
                         "'");
  }

  Dataset ds;
  ds.spec = spec;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    std::vector<std::string> cells = split_line(line, ',');
    if (cells.size() != header.size())
      throw data_error("row " + std::to_string(line_no) + ": expected " +
                       std::to_string(header.size()) + " cells, got " +
                       std::to_string(cells.size()));
    long long d = parse_int(cells[domain_col], line_no);
    if (d < 1 || d > static_cast<long long>(spec.num_domains))
      throw data_error("row " + std::to_string(line_no) + ": domain " +
                       std::to_string(d) + " outside [1, " +
                       std::to_string(spec.num_domains) + "]");
    long long y = parse_int(cells[label_col], line_no);
    if (y != 0 && y != 1)
      throw data_error("row " + std::to_string(line_no) + ": label " +
                       std::to_string(y) + " is not binary");
    for (std::size_t f = 0; f < F; ++f) {
      long long v = parse_int(cells[field_cols[f]], line_no);
      if (v < 0 || v >= static_cast<long long>(spec.fields[f].vocab))
        v = 0;  // OOV
      ds.features.push_back(static_cast<std::uint32_t>(v));
    }
    ds.labels.push_back(static_cast<std::uint8_t>(y));
    ds.domains.push_back(static_cast<std::uint16_t>(d));
  }
  if (ds.size() == 0) throw data_error(path + ": no data rows");
  return ds;
}

SplitResult split(const Dataset& ds, double r_train, double r_valid,
                  double r_test, std::uint64_t seed) {
  if (ds.size() == 0) throw data_error("split: empty dataset");
  double sum = r_train + r_valid + r_test;
  if (std::abs(sum - 1.0) > 1e-9)
    throw config_error("split: ratios sum to " + std::to_string(sum) +
                       ", want 1");
  std::vector<std::vector<std::size_t>> per_domain(ds.spec.num_domains);
  for (std::size_t i = 0; i < ds.size(); ++i)
    per_domain[ds.domains[i] - 1].push_back(i);

  std::vector<std::size_t> tr, va, te;
  for (std::size_t d = 0; d < per_domain.size(); ++d) {
    auto& idx = per_domain[d];
    Rng rng(mix64(seed, 0x5917a3 + d));
    rng.shuffle(idx);
    double n = static_cast<double>(idx.size());
    std::size_t c0 = static_cast<std::size_t>(std::llround(r_train * n));
    std::size_t c1 =
        static_cast<std::size_t>(std::llround((r_train + r_valid) * n));
    if (c1 > idx.size()) c1 = idx.size();
    if (c0 > c1) c0 = c1;
    tr.insert(tr.end(), idx.begin(), idx.begin() + c0);
    va.insert(va.end(), idx.begin() + c0, idx.begin() + c1);
    te.insert(te.end(), idx.begin() + c1, idx.end());
  }
  // Keep original row order inside each split so output is stable
  // regardless of domain iteration order.
  std::sort(tr.begin(), tr.end());
  std::sort(va.begin(), va.end());
  std::sort(te.begin(), te.end());
  return SplitResult{ds.select(tr), ds.select(va), ds.select(te)};
}

std::vector<std::vector<std::size_t>> Batch::row_lists() const {
  std::vector<std::vector<std::size_t>> out;
  for (const DomainSlice& s : domains)
    if (!s.batch_rows.empty()) out.push_back(s.batch_rows);
  return out;
}

std::vector<double> Batch::flat_labels() const {
  std::vector<double> out(size, 0.0);
  for (const DomainSlice& s : domains)
    for (std::size_t i = 0; i < s.batch_rows.size(); ++i)
      out[s.batch_rows[i]] = s.labels[i];
  return out;
}

Batch make_batch(const Dataset& ds, const std::vector<std::size_t>& idx) {
  std::size_t F = ds.spec.num_fields();
  Batch b;
  b.size = idx.size();
  b.num_fields = F;
  b.domains.resize(ds.spec.num_domains);
  for (std::size_t pos = 0; pos < idx.size(); ++pos) {
    std::size_t i = idx[pos];
    DomainSlice& s = b.domains[ds.domains[i] - 1];
    s.batch_rows.push_back(pos);  // pos ascends, so slices stay sorted
    const std::uint32_t* r = ds.row(i);
    for (std::size_t f = 0; f < F; ++f) s.ids.push_back(r[f]);
    s.labels.push_back(static_cast<double>(ds.labels[i]));
  }
  return b;
}

BatchStream::BatchStream(const Dataset& ds, std::size_t batch_size,
                         std::uint64_t seed, std::uint64_t epoch)
    : ds_(ds), batch_size_(batch_size) {
  if (batch_size_ == 0) throw config_error("batch size must be >= 1");
  order_.resize(ds.size());
  std::iota(order_.begin(), order_.end(), 0);
  Rng rng(mix64(seed, 0xeb0c + epoch));
  rng.shuffle(order_);
}

std::size_t BatchStream::num_batches() const {
  return (order_.size() + batch_size_ - 1) / batch_size_;
}

bool BatchStream::next(Batch& out) {
  if (pos_ >= order_.size()) return false;
  std::size_t end = std::min(pos_ + batch_size_, order_.size());
  std::vector<std::size_t> idx(order_.begin() + pos_, order_.begin() + end);
  pos_ = end;
  out = make_batch(ds_, idx);
  return true;
}

}  // namespace hamur
