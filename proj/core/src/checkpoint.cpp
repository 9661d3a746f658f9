#include "gada/checkpoint.hpp"

#include <algorithm>
#include <fstream>

#include "binio.hpp"

namespace gada {

namespace {
constexpr char kMagic[4] = {'G', 'A', 'D', 'A'};
}

void save_checkpoint(
    const std::string& path,
    const std::vector<std::pair<std::string, const Tensor*>>& entries) {
  using namespace binio;
  std::ofstream os(path, std::ios::binary);
  require(os.good(), "checkpoint: cannot open '" + path + "' for writing");
  os.write(kMagic, 4);
  put_u32(os, kCheckpointVersion);
  for (const auto& [name, tensor] : entries) {
    require(tensor != nullptr, "checkpoint: null tensor for '" + name + "'");
    put_u32(os, static_cast<std::uint32_t>(name.size()));
    os.write(name.data(), static_cast<std::streamsize>(name.size()));
    put_u32(os, static_cast<std::uint32_t>(tensor->rank()));
    for (Index d : tensor->shape) put_u32(os, static_cast<std::uint32_t>(d));
    for (double v : tensor->values) put_f64(os, v);
  }
  os.flush();
  require(os.good(), "checkpoint: write to '" + path + "' failed");
}

std::vector<std::pair<std::string, Tensor>> load_checkpoint(
    const std::string& path) {
  using namespace binio;
  std::ifstream is(path, std::ios::binary);
  require(is.good(), "checkpoint: cannot open '" + path + "'");
  char magic[4];
  require(static_cast<bool>(is.read(magic, 4)),
          "checkpoint: '" + path + "' is truncated before the magic");
  require(std::equal(magic, magic + 4, kMagic),
          "checkpoint: '" + path + "' has bad magic");
  std::uint32_t version = 0;
  require(get_u32(is, version),
          "checkpoint: '" + path + "' is truncated before the version");
  require(version == kCheckpointVersion,
          "checkpoint: '" + path + "' has unsupported version " +
              std::to_string(version));

  std::vector<std::pair<std::string, Tensor>> out;
  for (;;) {
    std::uint32_t name_len = 0;
    if (!get_u32(is, name_len)) break;  // clean end of file
    require(name_len > 0 && name_len < (1u << 16),
            "checkpoint: '" + path + "' has implausible name length " +
                std::to_string(name_len));
    std::string name(name_len, '\0');
    require(static_cast<bool>(
                is.read(name.data(), static_cast<std::streamsize>(name_len))),
            "checkpoint: '" + path + "' is truncated inside a name");
    std::uint32_t rank = 0;
    require(get_u32(is, rank) && rank <= 8,
            "checkpoint: '" + path + "' has a bad rank for '" + name + "'");
    Shape shape;
    Index numel = 1;
    for (std::uint32_t r = 0; r < rank; ++r) {
      std::uint32_t d = 0;
      require(get_u32(is, d),
              "checkpoint: '" + path + "' is truncated inside dims of '" +
                  name + "'");
      shape.push_back(static_cast<Index>(d));
      numel *= static_cast<Index>(d);
    }
    require(numel <= (Index{1} << 28),
            "checkpoint: '" + path + "' tensor '" + name + "' too large");
    Tensor t(shape);
    for (Index i = 0; i < numel; ++i) {
      require(get_f64(is, t.at(i)),
              "checkpoint: '" + path + "' is truncated inside '" + name +
                  "'");
    }
    out.emplace_back(std::move(name), std::move(t));
  }
  return out;
}

}  // namespace gada
