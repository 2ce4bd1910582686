#include "l2rir/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>

#include "l2rir/model.hpp"

namespace l2rir {

namespace fs = std::filesystem;

namespace {

constexpr char kMagic[8] = {'L', '2', 'R', 'I', 'R', 'C', 'K', '1'};

static_assert(std::endian::native == std::endian::little, "archive I/O assumes a little-endian host");

template <typename T>
void put(std::ostream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::istream& in) {
  T v{};
  if (!in.read(reinterpret_cast<char*>(&v), sizeof(T))) throw IoError("truncated checkpoint");
  return v;
}

}  // namespace

void write_archive(const fs::path& path, const Archive& archive) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open checkpoint for writing: " + path.string());
  out.write(kMagic, sizeof(kMagic));
  const std::string header = archive.header.dump();
  put<std::uint64_t>(out, header.size());
  out.write(header.data(), static_cast<std::streamsize>(header.size()));
  put<std::uint64_t>(out, archive.tensors.size());
  for (const auto& [name, t] : archive.tensors) {
    put<std::uint32_t>(out, static_cast<std::uint32_t>(name.size()));
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    const Shape& s = t.shape();
    for (int e : {s.n, s.c, s.h, s.w}) put<std::int32_t>(out, e);
    out.write(reinterpret_cast<const char*>(t.data()), static_cast<std::streamsize>(t.numel() * sizeof(double)));
  }
  if (!out) throw IoError("failed writing checkpoint: " + path.string());
}

Archive read_archive(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint: " + path.string());
  char magic[sizeof(kMagic)];
  if (!in.read(magic, sizeof(magic)) || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw IoError("not an l2rir checkpoint: " + path.string());
  }
  Archive archive;
  const auto header_len = get<std::uint64_t>(in);
  if (header_len > (1u << 26)) throw IoError("checkpoint header too large");
  std::string header(header_len, '\0');
  if (!in.read(header.data(), static_cast<std::streamsize>(header_len))) throw IoError("truncated checkpoint");
  try {
    archive.header = nlohmann::json::parse(header);
  } catch (const nlohmann::json::exception& ex) {
    throw IoError(std::string("corrupt checkpoint header: ") + ex.what());
  }
  const auto count = get<std::uint64_t>(in);
  for (std::uint64_t i = 0; i < count; ++i) {
    const auto name_len = get<std::uint32_t>(in);
    std::string name(name_len, '\0');
    if (!in.read(name.data(), name_len)) throw IoError("truncated checkpoint");
    Shape s;
    s.n = get<std::int32_t>(in);
    s.c = get<std::int32_t>(in);
    s.h = get<std::int32_t>(in);
    s.w = get<std::int32_t>(in);
    if (s.n < 0 || s.c < 0 || s.h < 0 || s.w < 0 || s.numel() > (std::size_t{1} << 32)) {
      throw IoError("corrupt tensor extent in checkpoint");
    }
    Tensor t(s);
    if (!in.read(reinterpret_cast<char*>(t.data()), static_cast<std::streamsize>(t.numel() * sizeof(double)))) {
      throw IoError("truncated checkpoint");
    }
    archive.tensors.emplace_back(std::move(name), std::move(t));
  }
  return archive;
}

Archive to_archive(const nlohmann::json& header, const nn::ParameterSet& params) {
  Archive a;
  a.header = header;
  for (const auto& p : params.items()) a.tensors.emplace_back(p.name, p.var.value());
  return a;
}

void load_parameters(const Archive& archive, nn::ParameterSet& params) {
  if (archive.tensors.size() != params.items().size()) {
    throw ConfigError("checkpoint holds " + std::to_string(archive.tensors.size()) + " tensors, model expects " +
                      std::to_string(params.items().size()));
  }
  for (const auto& [name, t] : archive.tensors) {
    auto var = params.find(name);
    if (!var) throw ConfigError("checkpoint tensor '" + name + "' has no matching parameter");
    if (var->shape() != t.shape()) {
      throw ConfigError("checkpoint tensor '" + name + "' has shape " + t.shape().str() + ", expected " +
                        var->shape().str());
    }
    var->mutable_value() = t;
  }
}

void save_model(const fs::path& path, const L2RirNet& model, const nlohmann::json& extra) {
  nlohmann::json header = {{"kind", "l2rir"}, {"model", to_json(model.config())}};
  if (!extra.is_null()) header["extra"] = extra;
  write_archive(path, to_archive(header, model.parameters()));
}

std::unique_ptr<L2RirNet> load_model(const fs::path& path) {
  Archive archive = read_archive(path);
  if (archive.header.value("kind", "") != "l2rir" || !archive.header.contains("model")) {
    throw ConfigError("checkpoint is not an l2rir model: " + path.string());
  }
  auto model = std::make_unique<L2RirNet>(model_config_from_json(archive.header.at("model")));
  load_parameters(archive, model->parameters());
  return model;
}

}  // namespace l2rir
