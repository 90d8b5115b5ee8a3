#include "hamur/prepare.hpp"

#include <fstream>
#include <map>
#include <sstream>

#include "hamur/config.hpp"
#include "hamur/errors.hpp"
#include "hamur/rng.hpp"

namespace hamur {

std::string sidecar_path(const std::string& csv_path) {
  const std::string suffix = ".csv";
  if (csv_path.size() > suffix.size() &&
      csv_path.compare(csv_path.size() - suffix.size(), suffix.size(),
                       suffix) == 0)
    return csv_path.substr(0, csv_path.size() - suffix.size()) + ".spec.ini";
  return csv_path + ".spec.ini";
}

namespace {

std::vector<std::string> split_dat(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    std::size_t p = line.find("::", start);
    if (p == std::string::npos) {
      out.push_back(line.substr(start));
      break;
    }
    out.push_back(line.substr(start, p - start));
    start = p + 2;
  }
  if (!out.empty() && !out.back().empty() && out.back().back() == '\r')
    out.back().pop_back();
  return out;
}

// Sorted value -> id map; ids start at 1 so 0 stays reserved for OOV.
class Encoder {
 public:
  void see(const std::string& v) { ids_.emplace(v, 0); }
  void freeze() {
    std::size_t next = 1;
    for (auto& [k, id] : ids_) id = next++;
  }
  std::size_t encode(const std::string& v) const {
    auto it = ids_.find(v);
    return it == ids_.end() ? 0 : it->second;
  }
  std::size_t vocab() const { return ids_.size() + 1; }

 private:
  std::map<std::string, std::size_t> ids_;
};

int movielens_domain(const std::string& age) {
  if (age == "1" || age == "18") return 1;
  if (age == "25") return 2;
  if (age == "35" || age == "45" || age == "50" || age == "56") return 3;
  return 0;
}

std::string title_year(const std::string& title) {
  // Titles end in "(YYYY)".
  std::size_t close = title.rfind(')');
  if (close == std::string::npos || close < 5) return "";
  std::size_t open = title.rfind('(', close);
  if (open == std::string::npos || close - open != 5) return "";
  std::string y = title.substr(open + 1, 4);
  for (char c : y)
    if (c < '0' || c > '9') return "";
  return y;
}

void write_spec(const DatasetSpec& spec, const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw data_error("cannot write dataset spec " + path);
  out << spec_to_ini(spec).serialize();
}

std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw data_error("cannot open " + path);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) lines.push_back(line);
  }
  return lines;
}

}  // namespace

PrepareResult prepare_movielens(const std::string& raw_dir,
                                const std::string& out_csv,
                                int label_threshold) {
  struct User {
    std::string gender, age, occupation, zip;
  };
  struct Movie {
    std::string year, genre;
  };
  std::map<std::string, User> users;
  std::map<std::string, Movie> movies;

  std::size_t line_no = 0;
  for (const std::string& line : read_lines(raw_dir + "/users.dat")) {
    ++line_no;
    std::vector<std::string> f = split_dat(line);
    if (f.size() != 5)
      throw data_error("users.dat line " + std::to_string(line_no) +
                       ": expected 5 fields, got " +
                       std::to_string(f.size()));
    users[f[0]] = User{f[1], f[2], f[3], f[4]};
  }
  line_no = 0;
  for (const std::string& line : read_lines(raw_dir + "/movies.dat")) {
    ++line_no;
    std::vector<std::string> f = split_dat(line);
    if (f.size() != 3)
      throw data_error("movies.dat line " + std::to_string(line_no) +
                       ": expected 3 fields, got " +
                       std::to_string(f.size()));
    movies[f[0]] = Movie{title_year(f[1]), f[2]};
  }

  Encoder user_id, gender, age, occupation, zip, movie_id, year, genre;
  for (const auto& [id, u] : users) {
    user_id.see(id);
    gender.see(u.gender);
    age.see(u.age);
    occupation.see(u.occupation);
    zip.see(u.zip);
  }
  for (const auto& [id, m] : movies) {
    movie_id.see(id);
    year.see(m.year);
    genre.see(m.genre);
  }
  for (Encoder* e : {&user_id, &gender, &age, &occupation, &zip, &movie_id,
                     &year, &genre})
    e->freeze();

  PrepareResult res;
  res.spec.num_domains = 3;
  res.spec.fields = {{"user_id", user_id.vocab()},
                     {"gender", gender.vocab()},
                     {"age", age.vocab()},
                     {"occupation", occupation.vocab()},
                     {"zip", zip.vocab()},
                     {"movie_id", movie_id.vocab()},
                     {"year", year.vocab()},
                     {"genre", genre.vocab()},
                     {"domain", res.spec.num_domains + 1}};
  res.domain_counts.assign(3, 0);

  std::ofstream out(out_csv, std::ios::trunc);
  if (!out) throw data_error("cannot write " + out_csv);
  out << "domain,label,user_id,gender,age,occupation,zip,movie_id,year,"
         "genre\n";

  line_no = 0;
  for (const std::string& line : read_lines(raw_dir + "/ratings.dat")) {
    ++line_no;
    std::vector<std::string> f = split_dat(line);
    if (f.size() != 4)
      throw data_error("ratings.dat line " + std::to_string(line_no) +
                       ": expected 4 fields, got " +
                       std::to_string(f.size()));
    auto uit = users.find(f[0]);
    auto mit = movies.find(f[1]);
    if (uit == users.end())
      throw data_error("ratings.dat line " + std::to_string(line_no) +
                       ": unknown user " + f[0]);
    if (mit == movies.end())
      throw data_error("ratings.dat line " + std::to_string(line_no) +
                       ": unknown movie " + f[1]);
    int dom = movielens_domain(uit->second.age);
    if (dom == 0)
      throw data_error("ratings.dat line " + std::to_string(line_no) +
                       ": age code " + uit->second.age +
                       " has no domain assignment");
    int rating = std::atoi(f[2].c_str());
    int label = rating >= label_threshold ? 1 : 0;
    out << dom << ',' << label << ',' << user_id.encode(f[0]) << ','
        << gender.encode(uit->second.gender) << ','
        << age.encode(uit->second.age) << ','
        << occupation.encode(uit->second.occupation) << ','
        << zip.encode(uit->second.zip) << ',' << movie_id.encode(f[1]) << ','
        << year.encode(mit->second.year) << ','
        << genre.encode(mit->second.genre) << '\n';
    ++res.rows;
    ++res.domain_counts[dom - 1];
  }
  if (!out) throw data_error("write failed for " + out_csv);
  res.csv_path = out_csv;
  res.spec_path = sidecar_path(out_csv);
  write_spec(res.spec, res.spec_path);
  return res;
}

PrepareResult prepare_synthetic(const std::string& out_csv, std::size_t rows,
                                std::size_t domains, std::uint64_t seed) {
  if (rows == 0) throw config_error("synthetic: rows must be positive");
  if (domains == 0) throw config_error("synthetic: need at least 1 domain");
  PrepareResult res;
  res.spec.num_domains = domains;
  res.spec.fields = {{"x1", 3},
                     {"n1", 9},
                     {"n2", 9},
                     {"domain", domains + 1}};
  res.domain_counts.assign(domains, 0);

  std::ofstream out(out_csv, std::ios::trunc);
  if (!out) throw data_error("cannot write " + out_csv);
  out << "domain,label,x1,n1,n2\n";
  Rng rng(mix64(seed, 0x51f7));
  for (std::size_t i = 0; i < rows; ++i) {
    std::size_t dom = 1 + static_cast<std::size_t>(rng.below(domains));
    int bit = static_cast<int>(rng.below(2));
    int n1 = 1 + static_cast<int>(rng.below(8));
    int n2 = 1 + static_cast<int>(rng.below(8));
    // The informative bit flips meaning with domain parity, so no single
    // additive scoring rule fits all domains at once.
    int label = bit ^ static_cast<int>(dom % 2);
    out << dom << ',' << label << ',' << (bit + 1) << ',' << n1 << ',' << n2
        << '\n';
    ++res.domain_counts[dom - 1];
    ++res.rows;
  }
  if (!out) throw data_error("write failed for " + out_csv);
  res.csv_path = out_csv;
  res.spec_path = sidecar_path(out_csv);
  write_spec(res.spec, res.spec_path);
  return res;
}

}  // namespace hamur
