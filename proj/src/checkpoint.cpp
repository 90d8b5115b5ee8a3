#include "hamur/checkpoint.hpp"

#include <cstring>
#include <fstream>

#include "hamur/errors.hpp"

namespace hamur {

namespace {

constexpr char kMagic[8] = {'H', 'M', 'U', 'R', 'C', 'K', 'P', '1'};

template <typename T>
void put(std::ofstream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T take(std::ifstream& in, const std::string& what) {
  T v;
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw data_error("checkpoint truncated while reading " + what);
  return v;
}

}  // namespace

void save_checkpoint(HamurModel& model, std::uint64_t config_hash,
                     const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw data_error("cannot write checkpoint " + path);
  out.write(kMagic, sizeof(kMagic));
  put<std::uint32_t>(out, kCheckpointVersion);
  put<std::uint64_t>(out, config_hash);
  auto state = model.state_tensors();
  put<std::uint64_t>(out, state.size());
  for (auto& [name, t] : state) {
    put<std::uint32_t>(out, static_cast<std::uint32_t>(name.size()));
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    put<std::uint32_t>(out, static_cast<std::uint32_t>(t->ndim()));
    for (std::size_t d : t->shape()) put<std::uint64_t>(out, d);
    out.write(reinterpret_cast<const char*>(t->data()),
              static_cast<std::streamsize>(t->size() * sizeof(double)));
  }
  if (!out) throw data_error("write failed for checkpoint " + path);
}

void load_checkpoint(HamurModel& model, std::uint64_t config_hash,
                     const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw data_error("cannot open checkpoint " + path);
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    throw data_error(path + " is not a checkpoint file");
  auto version = take<std::uint32_t>(in, "version");
  if (version != kCheckpointVersion)
    throw data_error("checkpoint format version " + std::to_string(version) +
                     ", this build reads version " +
                     std::to_string(kCheckpointVersion));
  auto hash = take<std::uint64_t>(in, "config hash");
  if (hash != config_hash)
    throw data_error("checkpoint was written under config hash " +
                     std::to_string(hash) + ", current config hashes to " +
                     std::to_string(config_hash));
  auto state = model.state_tensors();
  auto count = take<std::uint64_t>(in, "record count");
  if (count != state.size())
    throw data_error("checkpoint holds " + std::to_string(count) +
                     " tensors, model expects " +
                     std::to_string(state.size()));
  // Parse into staging buffers first so a bad file leaves the model intact.
  std::vector<Tensor> staged;
  staged.reserve(state.size());
  for (auto& [name, t] : state) {
    auto name_len = take<std::uint32_t>(in, "record name length");
    std::string rec_name(name_len, '\0');
    in.read(rec_name.data(), name_len);
    if (!in) throw data_error("checkpoint truncated while reading a name");
    if (rec_name != name)
      throw data_error("checkpoint record '" + rec_name + "' where '" +
                       name + "' was expected");
    auto ndim = take<std::uint32_t>(in, rec_name + " rank");
    std::vector<std::size_t> shape(ndim);
    for (auto& d : shape)
      d = static_cast<std::size_t>(
          take<std::uint64_t>(in, rec_name + " dims"));
    if (shape != t->shape())
      throw data_error("checkpoint tensor " + rec_name + " has shape " +
                       shape_str(shape) + ", model expects " +
                       shape_str(t->shape()));
    Tensor buf(shape);
    in.read(reinterpret_cast<char*>(buf.data()),
            static_cast<std::streamsize>(buf.size() * sizeof(double)));
    if (!in)
      throw data_error("checkpoint truncated inside tensor " + rec_name);
    staged.push_back(std::move(buf));
  }
  for (std::size_t i = 0; i < state.size(); ++i)
    *state[i].second = std::move(staged[i]);
}

}  // namespace hamur
