#include "aeunmix/nn/checkpoint.hpp"

#include <fstream>

#include "aeunmix/binary_io.hpp"
#include "aeunmix/errors.hpp"
#include "aeunmix/seeding.hpp"
#include "json.hpp"

namespace aeunmix::nn {
namespace fs = std::filesystem;
using nlohmann::json;

void save_checkpoint(const Network& net, const CheckpointInfo& info, const fs::path& header_path) {
  const fs::path dir = header_path.has_parent_path() ? header_path.parent_path() : fs::path(".");
  fs::create_directories(dir);
  const std::string payload_name = header_path.stem().string() + ".f64";

  json layers = json::array();
  for (const auto& layer : net.encoder()) {
    json l{{"kind", to_string(layer->kind())}};
    if (layer->kind() == LayerKind::Linear) {
      const auto& lin = static_cast<const Linear&>(*layer);
      l["in"] = lin.in();
      l["out"] = lin.out();
      l["bias"] = lin.has_bias();
    } else if (layer->kind() == LayerKind::GaussianDropout) {
      l["rate"] = static_cast<const GaussianDropout&>(*layer).rate();
    }
    layers.push_back(l);
  }

  std::vector<unsigned char> bytes;
  json tensors = json::array();
  auto emit = [&](const std::string& name, const Matrix* m) {
    tensors.push_back({{"name", name}, {"rows", m->rows()}, {"cols", m->cols()}});
    for (double v : m->values()) binary::put_f64(bytes, v);
  };
  const auto names = net.parameter_names();
  const auto params = net.parameters();
  for (std::size_t k = 0; k < params.size(); ++k) emit(names[k], params[k]);
  std::size_t b = 0;
  for (const Matrix* m : net.buffers()) emit("buffer." + std::to_string(b++), m);

  binary::write_file(dir / payload_name, bytes);
  json header{{"format_version", 1},
              {"architecture", to_string(info.architecture)},
              {"bands", info.bands},
              {"endmembers", info.endmembers},
              {"n1", info.n1},
              {"gd_rate", info.options.gd_rate},
              {"latent_sigmoid", info.options.latent_sigmoid},
              {"init_seed", info.init_seed},
              {"run_seed", info.run_seed},
              {"layers", layers},
              {"decoder", {{"in", net.decoder().in()}, {"out", net.decoder().out()}, {"bias", false}}},
              {"tensors", tensors},
              {"payload", {{"file", payload_name}, {"bytes", bytes.size()}, {"fnv1a64", fnv1a64(bytes.data(), bytes.size())}}}};
  if (info.init_scheme) header["init_scheme"] = to_string(*info.init_scheme);
  std::ofstream out(header_path, std::ios::trunc);
  if (!out) throw FormatError("cannot write checkpoint header: " + header_path.string());
  out << header.dump(2) << '\n';
}

LoadedCheckpoint load_checkpoint(const fs::path& header_path) {
  std::ifstream in(header_path);
  if (!in) throw FormatError("cannot open checkpoint: " + header_path.string());
  try {
    const json header = json::parse(in);
    CheckpointInfo info;
    info.architecture = parse_architecture(header.at("architecture").get<std::string>());
    info.bands = header.at("bands").get<std::size_t>();
    info.endmembers = header.at("endmembers").get<std::size_t>();
    info.n1 = header.at("n1").get<std::size_t>();
    info.options.gd_rate = header.at("gd_rate").get<double>();
    info.options.latent_sigmoid = header.at("latent_sigmoid").get<bool>();
    info.init_seed = header.at("init_seed").get<std::uint64_t>();
    info.run_seed = header.at("run_seed").get<std::uint64_t>();
    if (header.contains("init_scheme")) info.init_scheme = parse_init_scheme(header.at("init_scheme").get<std::string>());

    Network net = Network::build(info.architecture, info.bands, info.endmembers, info.n1, info.options);
    const fs::path dir = header_path.has_parent_path() ? header_path.parent_path() : fs::path(".");
    const auto& payload = header.at("payload");
    const auto bytes = binary::read_file(dir / payload.at("file").get<std::string>());
    if (bytes.size() != payload.at("bytes").get<std::size_t>() ||
        fnv1a64(bytes.data(), bytes.size()) != payload.at("fnv1a64").get<std::uint64_t>())
      throw FormatError("checkpoint payload size or checksum mismatch");

    std::vector<Matrix*> targets;
    for (auto& p : net.parameters()) targets.push_back(p.value);
    for (auto& b : net.buffers()) targets.push_back(b.value);
    const auto& tensors = header.at("tensors");
    if (tensors.size() != targets.size()) throw FormatError("checkpoint tensor count does not match architecture");
    std::size_t offset = 0;
    for (std::size_t k = 0; k < targets.size(); ++k) {
      Matrix& m = *targets[k];
      if (tensors[k].at("rows").get<std::size_t>() != m.rows() || tensors[k].at("cols").get<std::size_t>() != m.cols())
        throw FormatError("checkpoint tensor " + tensors[k].at("name").get<std::string>() + " has wrong shape");
      if (offset + 8 * m.size() > bytes.size()) throw FormatError("checkpoint payload truncated");
      for (double& v : m.values()) {
        v = binary::get_f64(&bytes[offset]);
        offset += 8;
      }
    }
    if (offset != bytes.size()) throw FormatError("checkpoint payload has trailing bytes");
    return {std::move(net), info};
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("malformed checkpoint header: " + std::string(e.what()));
  }
}

}  // namespace aeunmix::nn
